//! Decoding integral incumbents of the fragment formulations into chains
//! and cycles, and turning infeasible ones into lazy cuts.
//!
//! A selection (fragments + node arcs, each possibly tagged with a level)
//! decomposes into alternating walks. Walks anchored at the origin depot are
//! chains; whatever remains forms cycles. An infeasible chain of k
//! components yields the cut Σ components ≤ k − 1, as does every cycle —
//! the classical 2c−2 / 2c−1 right-hand sides when fragments and arcs
//! alternate strictly.

use std::collections::HashMap;

use crate::fragment::LoadNode;
use crate::instance::Instance;
use crate::network::{route_from_chain, FragmentNetwork};
use crate::scheduling::check_schedule;

/// Integral incumbent content for one network: fragment uses and node-arc
/// uses. `tag` is the pickup-space level for PSFF (entering level for
/// fragments, traversal level for arcs) and 0 for FFF.
#[derive(Debug, Clone, Default)]
pub struct Selection {
    pub frags: Vec<(usize, usize)>,
    pub arcs: Vec<(usize, usize)>,
}

/// An alternating walk decoded from a selection. For chains the depot arcs
/// at both ends are *not* included in `arcs`.
#[derive(Debug, Clone)]
pub struct Structure {
    pub frags: Vec<(usize, usize)>,
    pub arcs: Vec<(usize, usize)>,
    pub is_cycle: bool,
}

impl Structure {
    /// Number of components (fragments + interior arcs) with multiplicity.
    pub fn component_count(&self) -> usize {
        self.frags.len() + self.arcs.len()
    }
}

/// Split a selection into chains (from the origin depot) and cycles.
/// `leveled` enables pickup-space semantics: a fragment entered at level l
/// exits at l − L_f and tags must match along the walk.
pub fn extract_structures(
    net: &FragmentNetwork,
    sel: &Selection,
    leveled: bool,
) -> Result<Vec<Structure>, String> {
    // Availability maps keyed by (node, tag).
    let mut frag_avail: HashMap<(LoadNode, usize), Vec<usize>> = HashMap::new();
    for &(f, tag) in &sel.frags {
        frag_avail.entry((net.fragment(f).start, tag)).or_default().push(f);
    }
    let mut arc_avail: HashMap<(LoadNode, usize), Vec<usize>> = HashMap::new();
    let mut depot_arcs = Vec::new();
    for &(a, tag) in &sel.arcs {
        let arc = &net.arcs[a];
        if arc.from == net.o_plus {
            depot_arcs.push((a, tag));
        } else {
            arc_avail.entry((arc.from, tag)).or_default().push(a);
        }
    }

    let mut used_frags = 0usize;
    let mut structures = Vec::new();

    let walk = |start_node: LoadNode,
                    start_tag: usize,
                    frag_avail: &mut HashMap<(LoadNode, usize), Vec<usize>>,
                    arc_avail: &mut HashMap<(LoadNode, usize), Vec<usize>>,
                    stop_at: Option<(LoadNode, usize)>|
     -> Result<Structure, String> {
        let mut frags = Vec::new();
        let mut arcs = Vec::new();
        let (mut node, mut tag) = (start_node, start_tag);
        loop {
            if let Some(stop) = stop_at {
                if !frags.is_empty() && (node, tag) == stop {
                    return Ok(Structure { frags, arcs, is_cycle: true });
                }
            }
            let f = frag_avail
                .get_mut(&(node, tag))
                .and_then(Vec::pop)
                .ok_or_else(|| {
                    format!("no selected fragment departs {} (level {tag})", node.render())
                })?;
            frags.push((f, tag));
            let frag = net.fragment(f);
            let out_tag = if leveled { tag - frag.pickups } else { tag };
            if frag.is_extended() {
                if frag.end == net.o_minus {
                    return Ok(Structure { frags, arcs, is_cycle: false });
                }
                node = frag.end;
                tag = out_tag;
            } else {
                let a = arc_avail
                    .get_mut(&(frag.end, out_tag))
                    .and_then(Vec::pop)
                    .ok_or_else(|| {
                        format!("no selected arc departs {} (level {out_tag})", frag.end.render())
                    })?;
                let arc = &net.arcs[a];
                if arc.to == net.o_minus {
                    return Ok(Structure { frags, arcs, is_cycle: false });
                }
                arcs.push((a, out_tag));
                node = arc.to;
                tag = if leveled { out_tag } else { tag };
            }
        }
    };

    for (a, tag) in depot_arcs {
        let arc = &net.arcs[a];
        if arc.to == net.o_minus {
            continue; // empty multi-depot route, nothing to check
        }
        let s = walk(arc.to, if leveled { tag } else { 0 }, &mut frag_avail, &mut arc_avail, None)?;
        used_frags += s.frags.len();
        structures.push(s);
    }

    // Leftover fragments form cycles.
    while used_frags < sel.frags.len() {
        let (&(node, tag), _) = frag_avail
            .iter()
            .find(|(_, v)| !v.is_empty())
            .ok_or_else(|| "leftover selection is not traceable".to_string())?;
        let s = walk(node, tag, &mut frag_avail, &mut arc_avail, Some((node, tag)))?;
        used_frags += s.frags.len();
        structures.push(s);
    }
    Ok(structures)
}

/// Route path of a decoded chain (depots attached).
pub fn chain_route(
    net: &FragmentNetwork,
    chain: &Structure,
    inst: &Instance,
) -> Result<crate::scheduling::RoutePath, String> {
    let frags: Vec<_> = chain.frags.iter().map(|&(f, _)| net.fragment(f)).collect();
    route_from_chain(&frags, inst)
}

/// Is this chain, with depots attached, schedule-feasible?
pub fn chain_feasible(net: &FragmentNetwork, chain: &Structure, inst: &Instance) -> bool {
    match chain_route(net, chain, inst) {
        Ok(route) => check_schedule(&route, inst, true).is_ok(),
        Err(_) => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fragment::{generate, SetKind};
    use crate::instance::{random_instance, RandomInstanceParams};
    use crate::network::build_network;
    use crate::preprocess::tighten_lenient;

    fn rf_net(seed: u64, n: usize) -> (Instance, FragmentNetwork) {
        let inst = random_instance(seed, &RandomInstanceParams { n, ..Default::default() });
        let tight = tighten_lenient(&inst);
        let set = generate(&tight, SetKind::Rf, true);
        let net = build_network(set, &tight);
        (tight, net)
    }

    /// A hand-built single-fragment chain decodes back to itself.
    #[test]
    fn single_chain_roundtrip() {
        let (inst, net) = rf_net(3, 2);
        // Find a fragment with empty loadsets plus its depot arcs.
        let f = net
            .set
            .fragments
            .iter()
            .position(|f| f.start.loadset.is_empty() && f.end.loadset.is_empty())
            .unwrap();
        let frag = net.fragment(f);
        let a_in = net.arcs.iter().position(|a| a.from == net.o_plus && a.to == frag.start).unwrap();
        let a_out = net.arcs.iter().position(|a| a.from == frag.end && a.to == net.o_minus).unwrap();
        let sel = Selection { frags: vec![(f, 0)], arcs: vec![(a_in, 0), (a_out, 0)] };
        let st = extract_structures(&net, &sel, false).unwrap();
        assert_eq!(st.len(), 1);
        assert!(!st[0].is_cycle);
        assert_eq!(st[0].frags, vec![(f, 0)]);
        assert!(st[0].arcs.is_empty());
        let route = chain_route(&net, &st[0], &inst).unwrap();
        assert_eq!(route.stops[0], inst.origin_depot());
        assert_eq!(*route.stops.last().unwrap(), inst.dest_depot());
    }

    /// Two fragments linked into a cycle (no depot arcs) decode as one.
    #[test]
    fn cycle_detection() {
        let (_, net) = rf_net(6, 3);
        // Look for a pair f, g with arcs f.end→g.start and g.end→f.start.
        let mut found = None;
        'outer: for (fi, f) in net.set.fragments.iter().enumerate() {
            for (gi, g) in net.set.fragments.iter().enumerate() {
                if fi == gi {
                    continue;
                }
                let fw = net.arcs.iter().position(|a| a.from == f.end && a.to == g.start);
                let bw = net.arcs.iter().position(|a| a.from == g.end && a.to == f.start);
                if let (Some(x), Some(y)) = (fw, bw) {
                    found = Some((fi, gi, x, y));
                    break 'outer;
                }
            }
        }
        let Some((fi, gi, x, y)) = found else {
            return; // instance too sparse for the pattern; other seeds cover it
        };
        let sel = Selection { frags: vec![(fi, 0), (gi, 0)], arcs: vec![(x, 0), (y, 0)] };
        let st = extract_structures(&net, &sel, false).unwrap();
        assert_eq!(st.len(), 1);
        assert!(st[0].is_cycle);
        assert_eq!(st[0].component_count(), 4);
    }

    #[test]
    fn broken_selection_is_an_error() {
        let (_, net) = rf_net(3, 2);
        let f = net
            .set
            .fragments
            .iter()
            .position(|f| f.start.loadset.is_empty() && !f.is_extended())
            .unwrap();
        let a_in = net
            .arcs
            .iter()
            .position(|a| a.from == net.o_plus && a.to == net.fragment(f).start)
            .unwrap();
        // Depot arc + fragment but no way onward: structural error.
        let sel = Selection { frags: vec![(f, 0)], arcs: vec![(a_in, 0)] };
        assert!(extract_structures(&net, &sel, false).is_err());
    }
}
