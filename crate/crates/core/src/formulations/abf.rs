//! Arc-based three-index formulation: binary arc variables f_{ijv} plus
//! continuous begin-service and load variables, big-M linking, a per-vehicle
//! arc budget of 2L+1 enforcing the pickup limit, and a symmetry reduction
//! that forces the first ⌈n/L⌉ vehicles to leave the depot.

use std::collections::HashMap;

use crate::instance::{min_fixed_vehicles, vehicle_instance, Instance, MdarpConfig};
use crate::milp::{CmpSense, MilpModel, Var, VarKind};
use crate::preprocess::{eliminate_arcs, ArcSet};
use crate::scheduling::RoutePath;
use crate::INTEGRALITY_EPS;

pub struct Abf {
    pub model: MilpModel,
    /// (i, j, v) → arc variable
    arc_vars: HashMap<(usize, usize, usize), Var>,
    /// Per-vehicle instances (all identical for the single-depot problem).
    insts: Vec<Instance>,
}

impl Abf {
    /// Route per vehicle from an integral incumbent, direct depot-to-depot
    /// trips included.
    pub fn decode_full(&self, incumbent: &[f64]) -> Vec<(usize, RoutePath)> {
        let mut routes = Vec::new();
        for (v, vi) in self.insts.iter().enumerate() {
            let mut succ: HashMap<usize, usize> = HashMap::new();
            for (&(i, j, vv), var) in &self.arc_vars {
                if vv == v && incumbent[var.0] > 1.0 - INTEGRALITY_EPS {
                    succ.insert(i, j);
                }
            }
            let mut stops = vec![vi.origin_depot()];
            let mut cur = vi.origin_depot();
            while let Some(&next) = succ.get(&cur) {
                stops.push(next);
                cur = next;
                if cur == vi.dest_depot() {
                    break;
                }
            }
            if stops.len() >= 2 {
                routes.push((v, RoutePath::new(stops)));
            }
        }
        routes
    }

    /// Non-empty routes only.
    pub fn decode(&self, incumbent: &[f64]) -> Vec<RoutePath> {
        self.decode_full(incumbent)
            .into_iter()
            .filter(|(_, r)| r.stops.len() > 2)
            .map(|(_, r)| r)
            .collect()
    }

    pub fn block_instance(&self, v: usize) -> &Instance {
        &self.insts[v]
    }
}

/// Single-depot model over a preprocessed instance and its arc set.
pub fn build_abf(inst: &Instance, arcs: &ArcSet) -> Abf {
    let insts = vec![inst.clone(); inst.num_vehicles];
    build_over(&insts, arcs_per_vehicle(&insts, Some(arcs)), min_fixed_vehicles(inst), true)
}

/// Multi-depot model: one depot pair per vehicle, no symmetry reduction
/// (vehicles are distinguishable), every vehicle must run o_v → d_v.
pub fn build_abf_mdarp(reduced: &Instance, cfg: &MdarpConfig) -> Abf {
    let insts: Vec<Instance> = (0..cfg.drivers.len())
        .map(|v| vehicle_instance(reduced, cfg, v))
        .collect();
    build_over(&insts, arcs_per_vehicle(&insts, None), insts.len(), false)
}

fn arcs_per_vehicle(insts: &[Instance], shared: Option<&ArcSet>) -> Vec<ArcSet> {
    insts
        .iter()
        .map(|vi| shared.cloned().unwrap_or_else(|| eliminate_arcs(vi)))
        .collect()
}

fn build_over(insts: &[Instance], arcsets: Vec<ArcSet>, fixed: usize, symmetric: bool) -> Abf {
    let inst = &insts[0];
    let n = inst.n;
    let m = inst.num_locations();
    let nv = insts.len();
    let mut model = MilpModel::new();
    let mut arc_vars = HashMap::new();
    let mut t_vars = vec![vec![Var(0); m]; nv];
    let mut q_vars = vec![vec![Var(0); m]; nv];

    for (v, vi) in insts.iter().enumerate() {
        for (i, j) in arcsets[v].arcs() {
            let var = model.add_binary(vi.travel_cost(i, j), format!("f_{i}_{j}_{v}"));
            arc_vars.insert((i, j, v), var);
        }
        for i in 0..m {
            let loc = &vi.locations[i];
            t_vars[v][i] =
                model.add_var(VarKind::Continuous, loc.e, loc.l, 0.0, format!("t_{i}_{v}"));
            let q = vi.load_change(i);
            q_vars[v][i] = model.add_var(
                VarKind::Continuous,
                q.max(0) as f64,
                (vi.capacity.min(vi.capacity + q)) as f64,
                0.0,
                format!("q_{i}_{v}"),
            );
        }
    }

    let out_arcs = |v: usize, i: usize| -> Vec<(usize, Var)> {
        (0..m).filter_map(|j| arc_vars.get(&(i, j, v)).map(|&var| (j, var))).collect()
    };
    let in_arcs = |v: usize, i: usize| -> Vec<(usize, Var)> {
        (0..m).filter_map(|j| arc_vars.get(&(j, i, v)).map(|&var| (j, var))).collect()
    };

    // Every pickup served exactly once, by some vehicle.
    for i in 1..=n {
        let terms: Vec<(Var, f64)> = (0..nv)
            .flat_map(|v| out_arcs(v, i).into_iter().map(|(_, var)| (var, 1.0)))
            .collect();
        model.add_constraint(terms, CmpSense::Eq, 1.0, format!("serve_{i}"));
    }
    for (v, vi) in insts.iter().enumerate() {
        // Pickup and delivery by the same vehicle.
        for i in 1..=n {
            let mut terms: Vec<(Var, f64)> =
                out_arcs(v, i).into_iter().map(|(_, var)| (var, 1.0)).collect();
            terms.extend(out_arcs(v, n + i).into_iter().map(|(_, var)| (var, -1.0)));
            model.add_constraint(terms, CmpSense::Eq, 0.0, format!("pair_{i}_{v}"));
        }
        // Depart origin, arrive destination, conserve flow in between.
        let depart: Vec<(Var, f64)> =
            out_arcs(v, vi.origin_depot()).into_iter().map(|(_, var)| (var, 1.0)).collect();
        model.add_constraint(depart, CmpSense::Eq, 1.0, format!("depart_{v}"));
        let arrive: Vec<(Var, f64)> =
            in_arcs(v, vi.dest_depot()).into_iter().map(|(_, var)| (var, 1.0)).collect();
        model.add_constraint(arrive, CmpSense::Eq, 1.0, format!("arrive_{v}"));
        for i in 1..=2 * n {
            let mut terms: Vec<(Var, f64)> =
                in_arcs(v, i).into_iter().map(|(_, var)| (var, 1.0)).collect();
            terms.extend(out_arcs(v, i).into_iter().map(|(_, var)| (var, -1.0)));
            model.add_constraint(terms, CmpSense::Eq, 0.0, format!("flow_{i}_{v}"));
        }
        // Big-M time and load linking along used arcs.
        for (&(i, j, vv), &fvar) in &arc_vars {
            if vv != v {
                continue;
            }
            let li = vi.locations[i].l;
            let si = vi.locations[i].service;
            let tij = vi.travel_time(i, j);
            // The extra margin keeps unused-arc constraints off the feasibility
            // boundary when t_i sits at its upper and t_j at its lower bound.
            let mij = (li + si + tij - vi.locations[j].e).max(0.0) + 1e-4;
            // t_j − t_i + M f ≤ M − s_i − T  ⇔  t_j ≥ t_i + s_i + T − M(1−f)
            model.add_constraint(
                vec![(t_vars[v][i], 1.0), (t_vars[v][j], -1.0), (fvar, mij)],
                CmpSense::Le,
                mij - si - tij,
                format!("time_{i}_{j}_{v}"),
            );
            let qj = vi.load_change(j) as f64;
            let wij = (vi.capacity.min(vi.capacity + vi.load_change(i))) as f64;
            model.add_constraint(
                vec![(q_vars[v][i], 1.0), (q_vars[v][j], -1.0), (fvar, wij)],
                CmpSense::Le,
                wij - qj,
                format!("load_{i}_{j}_{v}"),
            );
        }
        for i in 1..=n {
            // Direct precedence and the ride-time limit.
            let sep = vi.locations[i].service + vi.travel_time(i, n + i);
            model.add_constraint(
                vec![(t_vars[v][i], 1.0), (t_vars[v][n + i], -1.0)],
                CmpSense::Le,
                -sep,
                format!("prec_{i}_{v}"),
            );
            model.add_constraint(
                vec![(t_vars[v][n + i], 1.0), (t_vars[v][i], -1.0)],
                CmpSense::Le,
                vi.ride_limit + vi.locations[i].service,
                format!("ride_{i}_{v}"),
            );
        }
        // Route duration.
        model.add_constraint(
            vec![(t_vars[v][vi.dest_depot()], 1.0), (t_vars[v][vi.origin_depot()], -1.0)],
            CmpSense::Le,
            vi.max_route_duration,
            format!("dur_{v}"),
        );
        // Pickup limit as an arc budget: at most L pickups means at most
        // 2L+1 arcs in the route.
        let budget: Vec<(Var, f64)> = arc_vars
            .iter()
            .filter(|(&(_, _, vv), _)| vv == v)
            .map(|(_, &var)| (var, 1.0))
            .collect();
        model.add_constraint(
            budget,
            CmpSense::Le,
            (2 * vi.pickup_limit + 1) as f64,
            format!("budget_{v}"),
        );
    }
    // Symmetry reduction: the first `fixed` vehicles cannot take the direct
    // depot-to-depot arc, i.e. they must serve someone. In the multi-depot
    // case every vehicle departs anyway and vehicles are distinguishable.
    if symmetric {
        for v in 0..fixed {
            if let Some(&var) = arc_vars.get(&(inst.origin_depot(), inst.dest_depot(), v)) {
                model.fix_var(var, 0.0);
            }
        }
    }
    Abf { model, arc_vars, insts: insts.to_vec() }
}

impl Abf {
    /// Arc budget per vehicle, for structural checks: 2L + 1.
    pub fn arc_budget(&self) -> usize {
        2 * self.insts[0].pickup_limit + 1
    }
}
