//! Fragment-network assembly: load nodes, node arcs, depot connections and
//! the adjacency queries the formulations need.
//!
//! Node arcs connect delivery nodes (or the origin depot) to pickup nodes
//! (or the destination depot) sharing the same loadset. A vehicle starts and
//! ends empty, so depot arcs touch only empty-loadset nodes. Extended
//! fragments carry their successor junction in their own path and therefore
//! connect to the next fragment directly, without a node arc.

use std::collections::HashMap;

use crate::fragment::{Fragment, FragmentSet, LoadNode, SetKind};
use crate::instance::{Instance, MdarpConfig};
use crate::preprocess::tighten_lenient;
use crate::scheduling::RoutePath;
use crate::TIME_EPS;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeArc {
    pub from: LoadNode,
    pub to: LoadNode,
    pub cost: f64,
}

#[derive(Debug, Clone)]
pub struct FragmentNetwork {
    pub set: FragmentSet,
    pub nodes: Vec<LoadNode>,
    pub o_plus: LoadNode,
    pub o_minus: LoadNode,
    pub arcs: Vec<NodeArc>,
    /// start node → indices into `set.fragments`
    pub frags_from: HashMap<LoadNode, Vec<usize>>,
    /// end node → indices into `set.fragments`
    pub frags_to: HashMap<LoadNode, Vec<usize>>,
    /// arc tail → indices into `arcs`
    pub arcs_from: HashMap<LoadNode, Vec<usize>>,
    /// arc head → indices into `arcs`
    pub arcs_to: HashMap<LoadNode, Vec<usize>>,
}

impl FragmentNetwork {
    pub fn fragment(&self, k: usize) -> &Fragment {
        &self.set.fragments[k]
    }

    pub fn num_fragments(&self) -> usize {
        self.set.fragments.len()
    }

    /// Node arcs not touching a depot node.
    pub fn non_depot_arc_count(&self) -> usize {
        self.arcs
            .iter()
            .filter(|a| a.from != self.o_plus && a.to != self.o_minus)
            .count()
    }

    /// Plain-text edge list for offline inspection.
    pub fn export_edges(&self) -> String {
        let mut s = String::new();
        for a in &self.arcs {
            s.push_str(&format!("arc {} {} {:.6}\n", a.from.render(), a.to.render(), a.cost));
        }
        for f in &self.set.fragments {
            s.push_str(&format!(
                "frag {} {} {:.6} {}\n",
                f.start.render(),
                f.end.render(),
                f.cost,
                f.path
            ));
        }
        s
    }
}

/// Assemble the network over a generated fragment set.
pub fn build_network(set: FragmentSet, inst: &Instance) -> FragmentNetwork {
    let o_plus = LoadNode::new(inst.origin_depot(), crate::CustomerSet::EMPTY);
    let o_minus = LoadNode::new(inst.dest_depot(), crate::CustomerSet::EMPTY);

    let mut frags_from: HashMap<LoadNode, Vec<usize>> = HashMap::new();
    let mut frags_to: HashMap<LoadNode, Vec<usize>> = HashMap::new();
    for (k, f) in set.fragments.iter().enumerate() {
        frags_from.entry(f.start).or_default().push(k);
        frags_to.entry(f.end).or_default().push(k);
    }

    let mut nodes: Vec<LoadNode> = frags_from
        .keys()
        .chain(frags_to.keys())
        .copied()
        .chain([o_plus, o_minus])
        .collect();
    nodes.sort();
    nodes.dedup();

    // Time envelopes per junction node: the latest a chain may start a
    // fragment there, and the earliest one can be done there.
    let mut latest_start_at: HashMap<LoadNode, f64> = HashMap::new();
    let mut earliest_done_at: HashMap<LoadNode, f64> = HashMap::new();
    for f in &set.fragments {
        let ls = latest_start_at.entry(f.start).or_insert(f64::NEG_INFINITY);
        *ls = ls.max(f.latest_start);
        let ec = earliest_done_at.entry(f.end).or_insert(f64::INFINITY);
        *ec = ec.min(f.earliest_completion);
    }

    let mut arcs = Vec::new();
    // Delivery-node ends → load-compatible pickup-node starts, and → O−.
    for (&end, _) in frags_to.iter() {
        if !inst.is_delivery(end.location) {
            continue; // extended fragments connect directly
        }
        let done = earliest_done_at[&end] + inst.locations[end.location].service;
        for (&start, _) in frags_from.iter() {
            if !inst.is_pickup(start.location) || start.loadset != end.loadset {
                continue;
            }
            if done + inst.travel_time(end.location, start.location)
                <= latest_start_at[&start] + TIME_EPS
            {
                arcs.push(NodeArc {
                    from: end,
                    to: start,
                    cost: inst.travel_cost(end.location, start.location),
                });
            }
        }
        if end.loadset.is_empty()
            && done + inst.travel_time(end.location, inst.dest_depot())
                <= inst.locations[inst.dest_depot()].l + TIME_EPS
        {
            arcs.push(NodeArc {
                from: end,
                to: o_minus,
                cost: inst.travel_cost(end.location, inst.dest_depot()),
            });
        }
    }
    // O+ → empty-loadset pickup starts.
    for (&start, _) in frags_from.iter() {
        if !inst.is_pickup(start.location) || !start.loadset.is_empty() {
            continue;
        }
        let depart = inst.locations[inst.origin_depot()].e;
        if depart + inst.travel_time(inst.origin_depot(), start.location)
            <= latest_start_at[&start] + TIME_EPS
        {
            arcs.push(NodeArc {
                from: o_plus,
                to: start,
                cost: inst.travel_cost(inst.origin_depot(), start.location),
            });
        }
    }
    arcs.sort_by(|a, b| (a.from, a.to).cmp(&(b.from, b.to)));

    let mut arcs_from: HashMap<LoadNode, Vec<usize>> = HashMap::new();
    let mut arcs_to: HashMap<LoadNode, Vec<usize>> = HashMap::new();
    for (k, a) in arcs.iter().enumerate() {
        arcs_from.entry(a.from).or_default().push(k);
        arcs_to.entry(a.to).or_default().push(k);
    }

    FragmentNetwork {
        set,
        nodes,
        o_plus,
        o_minus,
        arcs,
        frags_from,
        frags_to,
        arcs_from,
        arcs_to,
    }
}

/// Concatenate a chain of fragments (matching junctions required) into a
/// full route path with depots attached. Extended fragments carry their
/// successor's first stop as their own last stop; it is not duplicated.
pub fn route_from_chain(chain: &[&Fragment], inst: &Instance) -> Result<RoutePath, String> {
    if chain.is_empty() {
        return Err("empty chain".into());
    }
    let mut stops = vec![inst.origin_depot()];
    for (k, f) in chain.iter().enumerate() {
        if k > 0 {
            let prev = chain[k - 1];
            // Extended fragments hand over directly; plain ones connect via
            // a node arc, which preserves the loadset but moves location.
            let ok = if prev.is_extended() {
                prev.end == f.start
            } else {
                prev.end.loadset == f.start.loadset
            };
            if !ok {
                return Err(format!(
                    "junction mismatch: {} ends at {} but {} starts at {}",
                    prev.path,
                    prev.end.render(),
                    f.path,
                    f.start.render()
                ));
            }
        }
        let body = if f.is_extended() {
            // Trailing target duplicates the successor's first stop (or the
            // destination depot, appended below).
            &f.path.stops[..f.path.stops.len() - 1]
        } else {
            &f.path.stops[..]
        };
        stops.extend_from_slice(body);
    }
    let last = chain[chain.len() - 1];
    if last.is_extended() {
        // Must have been extended by the destination depot to close a route.
        if last.end.location != inst.dest_depot() {
            return Err("chain ends at a dangling pickup extension".into());
        }
        stops.push(inst.dest_depot());
    } else {
        if !last.end.loadset.is_empty() {
            return Err("chain ends with customers on board".into());
        }
        stops.push(inst.dest_depot());
    }
    Ok(RoutePath::new(stops))
}

/// One network per vehicle of a multi-depot configuration: each vehicle's
/// instance (depots swapped for o_v/d_v) is tightened and gets its own
/// fragment set and network.
pub fn attach_vehicle_copies(
    reduced: &Instance,
    cfg: &MdarpConfig,
    kind: SetKind,
    filter: bool,
) -> Vec<(Instance, FragmentNetwork)> {
    (0..cfg.drivers.len())
        .map(|v| {
            let vi = crate::instance::vehicle_instance(reduced, cfg, v);
            let tight = tighten_lenient(&vi);
            let set = crate::fragment::generate(&tight, kind, filter);
            let net = build_network(set, &tight);
            (tight, net)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fragment::generate;
    use crate::instance::{derive_mdarp, random_instance, RandomInstanceParams};
    use crate::oracle::enumerate_routes;
    use crate::scheduling::check_schedule;

    fn net_for(seed: u64, n: usize, kind: SetKind) -> (Instance, FragmentNetwork) {
        let inst = random_instance(seed, &RandomInstanceParams { n, ..Default::default() });
        let tight = tighten_lenient(&inst);
        let set = generate(&tight, kind, true);
        let net = build_network(set, &tight);
        (tight, net)
    }

    #[test]
    fn arcs_preserve_loadsets_and_direction() {
        for kind in [SetKind::Ff, SetKind::Rf, SetKind::Mf] {
            let (inst, net) = net_for(3, 4, kind);
            for a in &net.arcs {
                assert_eq!(a.from.loadset, a.to.loadset);
                assert!(a.from == net.o_plus || inst.is_delivery(a.from.location));
                assert!(a.to == net.o_minus || inst.is_pickup(a.to.location));
                assert!(!(a.from == net.o_plus && a.to == net.o_minus));
            }
        }
    }

    #[test]
    fn ff_network_arc_bound() {
        for seed in 0..8u64 {
            let (inst, net) = net_for(seed, 5, SetKind::Ff);
            assert!(net.non_depot_arc_count() <= inst.n * inst.n);
        }
    }

    #[test]
    fn depot_arcs_only_touch_empty_loadsets() {
        let (_, net) = net_for(5, 4, SetKind::Rf);
        for &k in net.arcs_from.get(&net.o_plus).unwrap_or(&vec![]) {
            assert!(net.arcs[k].to.loadset.is_empty());
        }
        for &k in net.arcs_to.get(&net.o_minus).unwrap_or(&vec![]) {
            assert!(net.arcs[k].from.loadset.is_empty());
        }
    }

    #[test]
    fn chain_concatenation_identity_and_mismatch() {
        let (inst, net) = net_for(7, 3, SetKind::Ff);
        let f = &net.set.fragments[0];
        let route = route_from_chain(&[f], &inst).unwrap();
        assert_eq!(route.stops[0], inst.origin_depot());
        assert_eq!(route.stops[route.stops.len() - 1], inst.dest_depot());
        assert_eq!(&route.stops[1..route.stops.len() - 1], &f.path.stops[..]);

        // Mismatched junction (different loadset) errors out.
        if let Some(g) = net
            .set
            .fragments
            .iter()
            .find(|g| g.start.loadset != f.end.loadset)
        {
            assert!(route_from_chain(&[f, g], &inst).is_err());
        }
    }

    /// Every feasible oracle route is representable as an alternating
    /// O+-arc, fragment, arc, ..., O−-arc walk in the S_RF network.
    #[test]
    fn rf_network_represents_every_oracle_route() {
        for seed in 0..10u64 {
            let inst = random_instance(seed, &RandomInstanceParams { n: 4, ..Default::default() });
            let tight = tighten_lenient(&inst);
            let set = generate(&tight, SetKind::Rf, true);
            let net = build_network(set, &tight);
            for route in enumerate_routes(&tight).unwrap() {
                let interior = &route.stops[1..route.stops.len() - 1];
                let pieces = crate::fragment::decompose_into_rf_paths(interior, &tight);
                // Each decomposition piece must exist in the (dominance
                // filtered) set as an equivalent fragment, and consecutive
                // pieces must be linked by a retained node arc.
                let mut prev_end: Option<LoadNode> = None;
                for (start, path, end) in &pieces {
                    let frag = net
                        .frags_from
                        .get(start)
                        .into_iter()
                        .flatten()
                        .map(|&k| net.fragment(k))
                        .find(|f| f.end == *end);
                    assert!(
                        frag.is_some(),
                        "seed {seed}: no fragment for piece {path} ({} -> {})",
                        start.render(),
                        end.render()
                    );
                    if let Some(pe) = prev_end {
                        let linked = net
                            .arcs_from
                            .get(&pe)
                            .into_iter()
                            .flatten()
                            .any(|&k| net.arcs[k].to == *start);
                        assert!(linked, "seed {seed}: missing node arc");
                    } else {
                        let from_depot = net
                            .arcs_from
                            .get(&net.o_plus)
                            .into_iter()
                            .flatten()
                            .any(|&k| net.arcs[k].to == *start);
                        assert!(from_depot, "seed {seed}: missing depot arc");
                    }
                    prev_end = Some(*end);
                }
                let back = net
                    .arcs_to
                    .get(&net.o_minus)
                    .into_iter()
                    .flatten()
                    .any(|&k| net.arcs[k].from == prev_end.unwrap());
                assert!(back, "seed {seed}: missing return arc");
            }
        }
    }

    #[test]
    fn vehicle_copies_shape() {
        let inst = random_instance(4, &RandomInstanceParams { n: 6, ..Default::default() });
        let (reduced, cfg) = derive_mdarp(&inst);
        let nets = attach_vehicle_copies(&reduced, &cfg, SetKind::Rf, true);
        assert_eq!(nets.len(), cfg.drivers.len());
        for (vi, net) in &nets {
            // All fragments in a vehicle's network are feasible in that
            // vehicle's instance.
            for f in &net.set.fragments {
                assert!(check_schedule(&f.path, vi, false).is_ok());
            }
        }
    }
}
