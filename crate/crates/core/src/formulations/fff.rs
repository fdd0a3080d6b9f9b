//! Fragment-flow formulation: per-vehicle binary fragment and node-arc
//! variables, network flow through load nodes, exact covering of pickups,
//! a per-vehicle pickup budget, and vehicle-use variables with the first
//! ⌈n/L⌉ vehicles fixed on.

use std::collections::HashMap;

use crate::formulations::cuts::{chain_feasible, extract_structures, Selection, Structure};
use crate::instance::{min_fixed_vehicles, Instance, MdarpConfig};
use crate::milp::{CmpSense, Constraint, Cut, MilpModel, Var};
use crate::network::FragmentNetwork;
use crate::scheduling::RoutePath;
use crate::INTEGRALITY_EPS;

pub struct Fff {
    pub model: MilpModel,
    /// One network for the single-depot problem; one per vehicle otherwise.
    nets: Vec<FragmentNetwork>,
    insts: Vec<Instance>,
    /// vehicle → network index (all 0 for single-depot).
    net_of: Vec<usize>,
    x: HashMap<(usize, usize), Var>,
    y: HashMap<(usize, usize), Var>,
    w: Vec<Var>,
    /// Empty-route (o_v → d_v) variable per vehicle, multi-depot only.
    idle: Vec<Option<Var>>,
    /// Replicate chain/cycle cuts across vehicles (sound when all vehicles
    /// share one network).
    pub replicate_cuts: bool,
}

/// Single-depot model: all vehicles share the network.
pub fn build_fff(net: FragmentNetwork, inst: &Instance, fixed_use_constraints: bool) -> Fff {
    let nv = inst.num_vehicles;
    let fixed = min_fixed_vehicles(inst);
    build_over(
        vec![net],
        vec![inst.clone()],
        vec![0; nv],
        (0..fixed).collect(),
        fixed_use_constraints,
        true,
        false,
    )
}

/// Multi-depot model: per-vehicle networks, every vehicle in use, an idle
/// arc o_v → d_v per vehicle, no cut replication.
pub fn build_fff_mdarp(
    nets: Vec<(Instance, FragmentNetwork)>,
    _reduced: &Instance,
    _cfg: &MdarpConfig,
) -> Fff {
    let nv = nets.len();
    let (insts, networks): (Vec<_>, Vec<_>) = nets.into_iter().unzip();
    build_over(
        networks,
        insts,
        (0..nv).collect(),
        (0..nv).collect(),
        false,
        false,
        true,
    )
}

fn build_over(
    nets: Vec<FragmentNetwork>,
    insts: Vec<Instance>,
    net_of: Vec<usize>,
    fixed_vehicles: Vec<usize>,
    fixed_use_constraints: bool,
    replicate_cuts: bool,
    idle_arcs: bool,
) -> Fff {
    let nv = net_of.len();
    let mut model = MilpModel::new();
    let mut x = HashMap::new();
    let mut y = HashMap::new();
    let mut w = Vec::new();
    let mut idle = Vec::new();

    for v in 0..nv {
        let net = &nets[net_of[v]];
        for (k, f) in net.set.fragments.iter().enumerate() {
            x.insert((v, k), model.add_binary(f.cost, format!("x_{k}_{v}")));
        }
        for (k, a) in net.arcs.iter().enumerate() {
            y.insert((v, k), model.add_binary(a.cost, format!("y_{k}_{v}")));
        }
        w.push(model.add_binary(0.0, format!("w_{v}")));
        if idle_arcs {
            let vi = &insts[net_of[v].min(insts.len() - 1)];
            let cost = vi.travel_cost(vi.origin_depot(), vi.dest_depot());
            idle.push(Some(model.add_binary(cost, format!("idle_{v}"))));
        } else {
            idle.push(None);
        }
    }

    // Cover each pickup location exactly once across all vehicles.
    let inst0 = &insts[0];
    for p in 1..=inst0.n {
        let mut terms = Vec::new();
        for v in 0..nv {
            let net = &nets[net_of[v]];
            let vi = &insts[net_of[v].min(insts.len() - 1)];
            for (k, f) in net.set.fragments.iter().enumerate() {
                if f.customers(vi).contains(p) {
                    terms.push((x[&(v, k)], 1.0));
                }
            }
        }
        model.add_constraint(terms, CmpSense::Eq, 1.0, format!("cover_{p}"));
    }

    for v in 0..nv {
        let net = &nets[net_of[v]];
        let vi = &insts[net_of[v].min(insts.len() - 1)];
        // Flow balance at every junction node.
        for &node in &net.nodes {
            if node == net.o_plus || node == net.o_minus {
                continue;
            }
            let mut terms: Vec<(Var, f64)> = Vec::new();
            if vi.is_pickup(node.location) {
                // inflow: node arcs + extended fragments ending here.
                for &k in net.arcs_to.get(&node).into_iter().flatten() {
                    terms.push((y[&(v, k)], 1.0));
                }
                for &k in net.frags_to.get(&node).into_iter().flatten() {
                    if net.fragment(k).is_extended() {
                        terms.push((x[&(v, k)], 1.0));
                    }
                }
                for &k in net.frags_from.get(&node).into_iter().flatten() {
                    terms.push((x[&(v, k)], -1.0));
                }
            } else {
                // delivery node: fragments in, node arcs out.
                for &k in net.frags_to.get(&node).into_iter().flatten() {
                    if !net.fragment(k).is_extended() {
                        terms.push((x[&(v, k)], 1.0));
                    }
                }
                for &k in net.arcs_from.get(&node).into_iter().flatten() {
                    terms.push((y[&(v, k)], -1.0));
                }
            }
            if !terms.is_empty() {
                model.add_constraint(
                    terms,
                    CmpSense::Eq,
                    0.0,
                    format!("flow_{}_{v}", node.render()),
                );
            }
        }
        // Depot balance ties the vehicle-use variable.
        let mut depart: Vec<(Var, f64)> = net
            .arcs_from
            .get(&net.o_plus)
            .into_iter()
            .flatten()
            .map(|&k| (y[&(v, k)], 1.0))
            .collect();
        if let Some(idle_v) = idle[v] {
            depart.push((idle_v, 1.0));
        }
        depart.push((w[v], -1.0));
        model.add_constraint(depart, CmpSense::Eq, 0.0, format!("depart_{v}"));

        let mut arrive: Vec<(Var, f64)> = net
            .arcs_to
            .get(&net.o_minus)
            .into_iter()
            .flatten()
            .map(|&k| (y[&(v, k)], 1.0))
            .collect();
        for &k in net.frags_to.get(&net.o_minus).into_iter().flatten() {
            arrive.push((x[&(v, k)], 1.0));
        }
        if let Some(idle_v) = idle[v] {
            arrive.push((idle_v, 1.0));
        }
        arrive.push((w[v], -1.0));
        model.add_constraint(arrive, CmpSense::Eq, 0.0, format!("arrive_{v}"));

        // Per-vehicle pickup budget.
        let budget: Vec<(Var, f64)> = net
            .set
            .fragments
            .iter()
            .enumerate()
            .map(|(k, f)| (x[&(v, k)], f.pickups as f64))
            .collect();
        model.add_constraint(
            budget,
            CmpSense::Le,
            vi.pickup_limit as f64,
            format!("limit_{v}"),
        );
    }
    for &v in &fixed_vehicles {
        model.fix_var(w[v], 1.0);
        if fixed_use_constraints {
            let net = &nets[net_of[v]];
            let terms: Vec<(Var, f64)> =
                (0..net.num_fragments()).map(|k| (x[&(v, k)], 1.0)).collect();
            model.add_constraint(terms, CmpSense::Ge, 1.0, format!("use_{v}"));
        }
    }

    Fff { model, nets, insts, net_of, x, y, w, idle, replicate_cuts }
}

impl Fff {
    fn selection(&self, v: usize, incumbent: &[f64]) -> Selection {
        let net = &self.nets[self.net_of[v]];
        let mut sel = Selection::default();
        for k in 0..net.num_fragments() {
            if incumbent[self.x[&(v, k)].0] > 1.0 - INTEGRALITY_EPS {
                sel.frags.push((k, 0));
            }
        }
        for k in 0..net.arcs.len() {
            if incumbent[self.y[&(v, k)].0] > 1.0 - INTEGRALITY_EPS {
                sel.arcs.push((k, 0));
            }
        }
        sel
    }

    fn structure_cut(&self, v: usize, s: &Structure) -> Vec<Cut> {
        let rhs = (s.component_count() - 1) as f64;
        let vehicles: Vec<usize> =
            if self.replicate_cuts { (0..self.w.len()).collect() } else { vec![v] };
        vehicles
            .into_iter()
            .map(|vv| {
                let mut terms = Vec::new();
                for &(f, _) in &s.frags {
                    terms.push((self.x[&(vv, f)], 1.0));
                }
                for &(a, _) in &s.arcs {
                    terms.push((self.y[&(vv, a)], 1.0));
                }
                Constraint {
                    terms,
                    sense: CmpSense::Le,
                    rhs,
                    name: format!("{}cut_{vv}", if s.is_cycle { "cycle" } else { "chain" }),
                }
            })
            .collect()
    }

    /// Lazy-cut separation on an integral incumbent: infeasible chains give
    /// Σ components ≤ 2c−2 cuts; every cycle gives a Σ ≤ 2c−1 cut.
    pub fn separate(&self, incumbent: &[f64]) -> Result<Vec<Cut>, String> {
        let mut cuts = Vec::new();
        for v in 0..self.w.len() {
            let net = &self.nets[self.net_of[v]];
            let vi = &self.insts[self.net_of[v].min(self.insts.len() - 1)];
            let sel = self.selection(v, incumbent);
            for s in extract_structures(net, &sel, false)? {
                if s.is_cycle || !chain_feasible(net, &s, vi) {
                    cuts.extend(self.structure_cut(v, &s));
                }
            }
        }
        Ok(cuts)
    }

    /// Routes of a final (cut-clean) incumbent, tagged with the vehicle.
    /// Idle multi-depot vehicles contribute their direct o_v → d_v trip.
    pub fn decode_full(&self, incumbent: &[f64]) -> Result<Vec<(usize, RoutePath)>, String> {
        let mut routes = Vec::new();
        for v in 0..self.w.len() {
            let net = &self.nets[self.net_of[v]];
            let vi = self.block_instance(v);
            let sel = self.selection(v, incumbent);
            for s in extract_structures(net, &sel, false)? {
                if s.is_cycle {
                    return Err("final incumbent contains a cycle".into());
                }
                routes.push((v, crate::formulations::cuts::chain_route(net, &s, vi)?));
            }
            if let Some(iv) = self.idle[v] {
                if incumbent[iv.0] > 1.0 - INTEGRALITY_EPS {
                    routes
                        .push((v, RoutePath::new(vec![vi.origin_depot(), vi.dest_depot()])));
                }
            }
        }
        Ok(routes)
    }

    /// Non-empty routes of a final incumbent.
    pub fn decode(&self, incumbent: &[f64]) -> Result<Vec<RoutePath>, String> {
        Ok(self
            .decode_full(incumbent)?
            .into_iter()
            .filter(|(_, r)| r.stops.len() > 2)
            .map(|(_, r)| r)
            .collect())
    }

    pub fn block_instance(&self, v: usize) -> &Instance {
        &self.insts[self.net_of[v].min(self.insts.len() - 1)]
    }
}
