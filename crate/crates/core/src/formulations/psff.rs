//! Pickup-space fragment flow: fragment and node-arc variables indexed by
//! the remaining pickup budget instead of a vehicle. A fragment entered
//! with l pickups left exits with l − L_f; depot departures happen at the
//! full budget L, and a fleet cap bounds the departures. Vehicle indices
//! return only in the multi-depot variant, as one block per vehicle.

use std::collections::HashMap;

use crate::formulations::cuts::{chain_feasible, extract_structures, Selection, Structure};
use crate::instance::{Instance, MdarpConfig};
use crate::milp::{CmpSense, Cut, MilpModel, Var};
use crate::network::FragmentNetwork;
use crate::scheduling::RoutePath;
use crate::INTEGRALITY_EPS;

pub struct Psff {
    pub model: MilpModel,
    nets: Vec<FragmentNetwork>,
    insts: Vec<Instance>,
    /// (block, fragment, entering level) → variable.
    x: HashMap<(usize, usize, usize), Var>,
    /// (block, arc, level) → variable. Depot-out arcs live at level L only.
    y: HashMap<(usize, usize, usize), Var>,
    /// Empty-route (o_v → d_v) variable per block, multi-depot only.
    idle: Vec<Option<Var>>,
    limit: usize,
}

/// Single-depot model: one block, fleet cap on depot departures.
pub fn build_psff(net: FragmentNetwork, inst: &Instance) -> Psff {
    build_over(vec![net], vec![inst.clone()], false)
}

/// Multi-depot model: one block per vehicle, each forced to leave its own
/// origin (an idle variable stands in for the empty route).
pub fn build_psff_mdarp(
    nets: Vec<(Instance, FragmentNetwork)>,
    _reduced: &Instance,
    _cfg: &MdarpConfig,
) -> Psff {
    let (insts, networks): (Vec<_>, Vec<_>) = nets.into_iter().unzip();
    build_over(networks, insts, true)
}

fn build_over(nets: Vec<FragmentNetwork>, insts: Vec<Instance>, per_vehicle: bool) -> Psff {
    let cap = insts[0].pickup_limit;
    let mut model = MilpModel::new();
    let mut x = HashMap::new();
    let mut y = HashMap::new();
    let mut idle: Vec<Option<Var>> = vec![None; nets.len()];

    for b in 0..nets.len() {
        let net = &nets[b];
        for (k, f) in net.set.fragments.iter().enumerate() {
            for l in f.pickups..=cap {
                x.insert((b, k, l), model.add_binary(f.cost, format!("x_{k}_{l}_{b}")));
            }
        }
        for (k, a) in net.arcs.iter().enumerate() {
            if a.from == net.o_plus {
                y.insert((b, k, cap), model.add_binary(a.cost, format!("y_{k}_{cap}_{b}")));
            } else {
                let lo = if a.to == net.o_minus { 0 } else { 1 };
                for l in lo..cap {
                    y.insert((b, k, l), model.add_binary(a.cost, format!("y_{k}_{l}_{b}")));
                }
            }
        }
    }

    // Cover each pickup location once across blocks and levels.
    let inst0 = &insts[0];
    for p in 1..=inst0.n {
        let mut terms = Vec::new();
        for b in 0..nets.len() {
            let net = &nets[b];
            for (k, f) in net.set.fragments.iter().enumerate() {
                if f.customers(&insts[b]).contains(p) {
                    for l in f.pickups..=cap {
                        terms.push((x[&(b, k, l)], 1.0));
                    }
                }
            }
        }
        model.add_constraint(terms, CmpSense::Eq, 1.0, format!("cover_{p}"));
    }

    for b in 0..nets.len() {
        let net = &nets[b];
        let vi = &insts[b];
        for &node in &net.nodes {
            if node == net.o_plus || node == net.o_minus {
                continue;
            }
            if vi.is_pickup(node.location) {
                // inflow at level l = fragments departing at level l. Level 0
                // is included: nothing departs there, so it zeroes extended
                // fragments that would otherwise strand a walk mid-route.
                for l in 0..=cap {
                    let mut terms: Vec<(Var, f64)> = Vec::new();
                    for &k in net.arcs_to.get(&node).into_iter().flatten() {
                        if let Some(&v) = y.get(&(b, k, l)) {
                            terms.push((v, 1.0));
                        }
                    }
                    for &k in net.frags_to.get(&node).into_iter().flatten() {
                        let f = net.fragment(k);
                        if f.is_extended() && l + f.pickups <= cap {
                            terms.push((x[&(b, k, l + f.pickups)], 1.0));
                        }
                    }
                    for &k in net.frags_from.get(&node).into_iter().flatten() {
                        if net.fragment(k).pickups <= l {
                            terms.push((x[&(b, k, l)], -1.0));
                        }
                    }
                    if !terms.is_empty() {
                        model.add_constraint(
                            terms,
                            CmpSense::Eq,
                            0.0,
                            format!("flow_{}_{l}_{b}", node.render()),
                        );
                    }
                }
            } else {
                // fragments arriving with exit level l = arcs leaving at l.
                for l in 0..cap {
                    let mut terms: Vec<(Var, f64)> = Vec::new();
                    for &k in net.frags_to.get(&node).into_iter().flatten() {
                        let f = net.fragment(k);
                        if !f.is_extended() && l + f.pickups <= cap {
                            terms.push((x[&(b, k, l + f.pickups)], 1.0));
                        }
                    }
                    for &k in net.arcs_from.get(&node).into_iter().flatten() {
                        if let Some(&v) = y.get(&(b, k, l)) {
                            terms.push((v, -1.0));
                        }
                    }
                    if !terms.is_empty() {
                        model.add_constraint(
                            terms,
                            CmpSense::Eq,
                            0.0,
                            format!("flow_{}_{l}_{b}", node.render()),
                        );
                    }
                }
            }
        }

        let mut depart: Vec<(Var, f64)> = net
            .arcs_from
            .get(&net.o_plus)
            .into_iter()
            .flatten()
            .map(|&k| (y[&(b, k, cap)], 1.0))
            .collect();
        if per_vehicle {
            // Extended-to-destination fragments start chains that never
            // return through an arc, but they still leave the depot, so the
            // departure count alone ties usage; the idle variable closes the
            // empty-route case.
            let idle_cost = vi.travel_cost(vi.origin_depot(), vi.dest_depot());
            let iv = model.add_binary(idle_cost, format!("idle_{b}"));
            idle[b] = Some(iv);
            depart.push((iv, 1.0));
            model.add_constraint(depart, CmpSense::Eq, 1.0, format!("depart_{b}"));
        } else {
            model.add_constraint(
                depart,
                CmpSense::Le,
                vi.num_vehicles as f64,
                format!("fleet_{b}"),
            );
        }
    }

    Psff { model, nets, insts, x, y, idle, limit: cap }
}

impl Psff {
    fn selection(&self, b: usize, incumbent: &[f64]) -> Selection {
        let net = &self.nets[b];
        let mut sel = Selection::default();
        for k in 0..net.num_fragments() {
            for l in net.fragment(k).pickups..=self.limit {
                if incumbent[self.x[&(b, k, l)].0] > 1.0 - INTEGRALITY_EPS {
                    sel.frags.push((k, l));
                }
            }
        }
        for k in 0..net.arcs.len() {
            for l in 0..=self.limit {
                if let Some(&v) = self.y.get(&(b, k, l)) {
                    if incumbent[v.0] > 1.0 - INTEGRALITY_EPS {
                        sel.arcs.push((k, l));
                    }
                }
            }
        }
        sel
    }

    /// Level-aggregated cut: one term Σ_l x_{fl} per distinct fragment and
    /// Σ_l y_{al} per distinct arc, right-hand side = distinct count − 1.
    fn structure_cut(&self, b: usize, s: &Structure) -> Cut {
        let net = &self.nets[b];
        let mut frag_ids: Vec<usize> = s.frags.iter().map(|&(f, _)| f).collect();
        frag_ids.sort_unstable();
        frag_ids.dedup();
        let mut arc_ids: Vec<usize> = s.arcs.iter().map(|&(a, _)| a).collect();
        arc_ids.sort_unstable();
        arc_ids.dedup();
        let rhs = (frag_ids.len() + arc_ids.len() - 1) as f64;
        let mut terms = Vec::new();
        for f in frag_ids {
            for l in net.fragment(f).pickups..=self.limit {
                terms.push((self.x[&(b, f, l)], 1.0));
            }
        }
        for a in arc_ids {
            for l in 0..=self.limit {
                if let Some(&v) = self.y.get(&(b, a, l)) {
                    terms.push((v, 1.0));
                }
            }
        }
        Cut {
            terms,
            sense: CmpSense::Le,
            rhs,
            name: format!("{}cut_{b}", if s.is_cycle { "cycle" } else { "chain" }),
        }
    }

    pub fn separate(&self, incumbent: &[f64]) -> Result<Vec<Cut>, String> {
        let mut cuts = Vec::new();
        for b in 0..self.nets.len() {
            let sel = self.selection(b, incumbent);
            for s in extract_structures(&self.nets[b], &sel, true)? {
                if s.is_cycle || !chain_feasible(&self.nets[b], &s, &self.insts[b]) {
                    cuts.push(self.structure_cut(b, &s));
                }
            }
        }
        Ok(cuts)
    }

    /// Routes tagged with their block; idle multi-depot blocks contribute
    /// the direct o_v → d_v trip.
    pub fn decode_full(&self, incumbent: &[f64]) -> Result<Vec<(usize, RoutePath)>, String> {
        let mut routes = Vec::new();
        for b in 0..self.nets.len() {
            let vi = &self.insts[b];
            let sel = self.selection(b, incumbent);
            for s in extract_structures(&self.nets[b], &sel, true)? {
                if s.is_cycle {
                    return Err("final incumbent contains a cycle".into());
                }
                routes.push((b, crate::formulations::cuts::chain_route(&self.nets[b], &s, vi)?));
            }
            if let Some(iv) = self.idle[b] {
                if incumbent[iv.0] > 1.0 - INTEGRALITY_EPS {
                    routes
                        .push((b, RoutePath::new(vec![vi.origin_depot(), vi.dest_depot()])));
                }
            }
        }
        Ok(routes)
    }

    pub fn decode(&self, incumbent: &[f64]) -> Result<Vec<RoutePath>, String> {
        Ok(self
            .decode_full(incumbent)?
            .into_iter()
            .filter(|(_, r)| r.stops.len() > 2)
            .map(|(_, r)| r)
            .collect())
    }

    pub fn block_instance(&self, b: usize) -> &Instance {
        &self.insts[b]
    }

    /// Distinct pickup-entry levels and arc-exit levels present in the
    /// variable layout (the level sets L_P and L_D).
    pub fn level_counts(&self) -> (usize, usize) {
        let mut entry: Vec<usize> = self.x.keys().map(|&(_, _, l)| l).collect();
        entry.sort_unstable();
        entry.dedup();
        let mut exit: Vec<usize> = self
            .y
            .keys()
            .filter(|&&(b, a, _)| self.nets[b].arcs[a].from != self.nets[b].o_plus)
            .map(|&(_, _, l)| l)
            .collect();
        exit.sort_unstable();
        exit.dedup();
        (entry.len(), exit.len())
    }

    /// Variable assignment representing the given block-tagged routes, for
    /// checking cuts against externally obtained solutions. Requires an
    /// unfiltered S_RF model so every decomposed piece exists.
    pub fn assignment_for_routes(
        &self,
        routes: &[(usize, RoutePath)],
    ) -> Result<Vec<f64>, String> {
        let mut inc = vec![0.0; self.model.num_vars()];
        for (b, route) in routes {
            let net = &self.nets[*b];
            let vi = &self.insts[*b];
            if route.stops.len() <= 2 {
                if let Some(iv) = self.idle[*b] {
                    inc[iv.0] = 1.0;
                }
                continue;
            }
            let interior = &route.stops[1..route.stops.len() - 1];
            let pieces = crate::fragment::decompose_into_rf_paths(interior, vi);
            let mut level = self.limit;
            let mut prev_end = net.o_plus;
            for (start, path, end) in &pieces {
                let a = net
                    .arcs
                    .iter()
                    .position(|a| a.from == prev_end && a.to == *start)
                    .ok_or_else(|| format!("no arc {} -> {}", prev_end.render(), start.render()))?;
                inc[self.y[&(*b, a, level)].0] = 1.0;
                let k = net
                    .frags_from
                    .get(start)
                    .into_iter()
                    .flatten()
                    .copied()
                    .find(|&k| {
                        let f = net.fragment(k);
                        f.end == *end && f.path.stops == path.stops
                    })
                    .ok_or_else(|| format!("piece {path} missing from the fragment set"))?;
                inc[self.x[&(*b, k, level)].0] = 1.0;
                level -= net.fragment(k).pickups;
                prev_end = *end;
            }
            let a = net
                .arcs
                .iter()
                .position(|a| a.from == prev_end && a.to == net.o_minus)
                .ok_or_else(|| format!("no closing arc from {}", prev_end.render()))?;
            inc[self.y[&(*b, a, level)].0] = 1.0;
        }
        Ok(inc)
    }
}
