//! Path-based formulation: one binary per feasible route, set partitioning
//! over customers, fleet cap. Route enumeration is exact and aborts if the
//! path count passes a hard cap.

use crate::instance::{vehicle_instance, Instance, MdarpConfig};
use crate::milp::{CmpSense, MilpModel, Var};
use crate::oracle::{enumerate_routes_capped, OracleError};
use crate::scheduling::{check_schedule, route_cost, RoutePath};
use crate::INTEGRALITY_EPS;

pub const PATH_CAP: usize = 5_000_000;

/// Enumerated feasible routes for one instance.
pub struct PathSet {
    pub paths: Vec<RoutePath>,
}

pub fn enumerate_paths(inst: &Instance, cap: usize) -> Result<PathSet, OracleError> {
    Ok(PathSet { paths: enumerate_routes_capped(inst, cap)? })
}

pub struct Pbf {
    pub model: MilpModel,
    /// (block, path) per variable; block is 0 for the single-depot model.
    paths: Vec<(usize, RoutePath)>,
    z: Vec<Var>,
    insts: Vec<Instance>,
    pub num_paths: usize,
}

pub fn build_pbf(inst: &Instance, cap: usize) -> Result<Pbf, OracleError> {
    let set = enumerate_paths(inst, cap)?;
    let mut model = MilpModel::new();
    let mut z = Vec::new();
    let mut paths = Vec::new();
    for (k, p) in set.paths.into_iter().enumerate() {
        z.push(model.add_binary(route_cost(&p, inst), format!("z_{k}")));
        paths.push((0usize, p));
    }
    for c in 1..=inst.n {
        let terms: Vec<(Var, f64)> = paths
            .iter()
            .zip(&z)
            .filter(|((_, p), _)| p.stops.contains(&c))
            .map(|(_, &v)| (v, 1.0))
            .collect();
        model.add_constraint(terms, CmpSense::Eq, 1.0, format!("cover_{c}"));
    }
    let fleet: Vec<(Var, f64)> = z.iter().map(|&v| (v, 1.0)).collect();
    model.add_constraint(fleet, CmpSense::Le, inst.num_vehicles as f64, "fleet".into());
    let num_paths = z.len();
    Ok(Pbf { model, paths, z, insts: vec![inst.clone()], num_paths })
}

/// Multi-depot variant: per-vehicle route pools, each vehicle picks exactly
/// one path (the empty trip o_v → d_v included), customers partitioned
/// across vehicles. The cap bounds the pooled path count.
pub fn build_pbf_mdarp(
    reduced: &Instance,
    cfg: &MdarpConfig,
    cap: usize,
) -> Result<Pbf, OracleError> {
    let mut model = MilpModel::new();
    let mut z = Vec::new();
    let mut paths = Vec::new();
    let nv = cfg.drivers.len();
    let mut insts = Vec::with_capacity(nv);
    for v in 0..nv {
        let vi = vehicle_instance(reduced, cfg, v);
        let remaining = cap.saturating_sub(paths.len());
        let mut pool = enumerate_routes_capped(&vi, remaining)?;
        let empty = RoutePath::new(vec![vi.origin_depot(), vi.dest_depot()]);
        if check_schedule(&empty, &vi, true).is_ok() {
            pool.push(empty);
        }
        let mut assign = Vec::new();
        for p in pool {
            let k = z.len();
            z.push(model.add_binary(route_cost(&p, &vi), format!("z_{k}_{v}")));
            assign.push((z[k], 1.0));
            paths.push((v, p));
        }
        model.add_constraint(assign, CmpSense::Eq, 1.0, format!("assign_{v}"));
        insts.push(vi);
    }
    for c in 1..=reduced.n {
        let terms: Vec<(Var, f64)> = paths
            .iter()
            .zip(&z)
            .filter(|((_, p), _)| p.stops[1..p.stops.len() - 1].contains(&c))
            .map(|(_, &v)| (v, 1.0))
            .collect();
        model.add_constraint(terms, CmpSense::Eq, 1.0, format!("cover_{c}"));
    }
    let num_paths = z.len();
    Ok(Pbf { model, paths, z, insts, num_paths })
}

impl Pbf {
    /// Selected routes tagged with their block (empty trips included).
    pub fn decode_full(&self, incumbent: &[f64]) -> Vec<(usize, RoutePath)> {
        self.paths
            .iter()
            .zip(&self.z)
            .filter(|(_, v)| incumbent[v.0] > 1.0 - INTEGRALITY_EPS)
            .map(|((b, p), _)| (*b, p.clone()))
            .collect()
    }

    /// Selected routes (empty two-stop trips included).
    pub fn decode(&self, incumbent: &[f64]) -> Vec<RoutePath> {
        self.decode_full(incumbent).into_iter().map(|(_, p)| p).collect()
    }

    pub fn block_instance(&self, b: usize) -> &Instance {
        &self.insts[b]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{derive_mdarp, random_instance, RandomInstanceParams};
    use crate::milp::{solve, SolveStatus};
    use crate::oracle::{brute_force_optimal, brute_force_optimal_mdarp};
    use crate::preprocess::tighten_time_windows;

    #[test]
    fn matches_oracle() {
        for seed in [2u64, 8, 15] {
            let inst = random_instance(seed, &RandomInstanceParams { n: 4, ..Default::default() });
            let tight = tighten_time_windows(&inst).unwrap();
            let want = brute_force_optimal(&tight).unwrap().objective;
            let pbf = build_pbf(&tight, PATH_CAP).unwrap();
            let r = solve(&pbf.model, 120.0, None).unwrap();
            assert_eq!(r.status, SolveStatus::Optimal);
            assert!((r.objective.unwrap() - want).abs() < 1e-6, "seed {seed}");
        }
    }

    #[test]
    fn mdarp_matches_oracle() {
        for seed in [5u64, 13] {
            let inst = random_instance(seed, &RandomInstanceParams { n: 6, ..Default::default() });
            let (reduced, cfg) = derive_mdarp(&inst);
            let want = match brute_force_optimal_mdarp(&reduced, &cfg) {
                Ok(sol) => sol.objective,
                Err(OracleError::Infeasible) => continue,
                Err(e) => panic!("{e}"),
            };
            let pbf = build_pbf_mdarp(&reduced, &cfg, PATH_CAP).unwrap();
            let r = solve(&pbf.model, 120.0, None).unwrap();
            assert_eq!(r.status, SolveStatus::Optimal);
            let got = r.objective.unwrap();
            assert!((got - want).abs() < 1e-6, "seed {seed}: {got} vs {want}");
            // Exactly one path per vehicle in the decoded solution.
            assert_eq!(pbf.decode(&r.incumbent).len(), cfg.drivers.len());
        }
    }

    #[test]
    fn cap_is_enforced() {
        let inst = random_instance(1, &RandomInstanceParams { n: 4, ..Default::default() });
        assert!(matches!(build_pbf(&inst, 2), Err(OracleError::CapExceeded(2))));
    }
}
