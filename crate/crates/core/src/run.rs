//! End-to-end solve pipeline shared by the CLI and the Python bindings:
//! configure → tighten → build the chosen formulation → solve (with lazy
//! cuts where the formulation needs them) → decode, re-validate and record.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::customers::CustomerSet;
use crate::formulations::{
    build_abf, build_abf_mdarp, build_fff, build_fff_mdarp, build_pbf, build_pbf_mdarp,
    build_psff, build_psff_mdarp, Formulation,
};
use crate::fragment::{generate, SetKind};
use crate::instance::{configure_darplpt, derive_mdarp, Instance};
use crate::milp::{solve, Cut, SolveResult, SolveStatus};
use crate::network::{attach_vehicle_copies, build_network};
use crate::oracle::OracleError;
use crate::preprocess::{eliminate_arcs, tighten_time_windows};
use crate::scheduling::{check_schedule, route_cost, RoutePath};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Problem {
    DarpLpt,
    MdarpLpt,
}

impl Problem {
    pub fn label(self) -> &'static str {
        match self {
            Problem::DarpLpt => "darp-lpt",
            Problem::MdarpLpt => "mdarp-lpt",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "darp-lpt" => Some(Problem::DarpLpt),
            "mdarp-lpt" => Some(Problem::MdarpLpt),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub problem: Problem,
    /// Maximum pickups per trip; `None` keeps the instance value.
    pub pickup_limit: Option<usize>,
    pub formulation: Formulation,
    /// Fragment set for the fragment formulations; ignored by ABF and PBF.
    pub fragment_kind: SetKind,
    pub dominance_filter: bool,
    /// Copy chain/cycle cuts to every vehicle (single-depot FFF only).
    pub replicate_cuts: bool,
    pub time_limit: f64,
    /// Hard cap on enumerated paths for PBF.
    pub path_cap: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            problem: Problem::DarpLpt,
            pickup_limit: None,
            formulation: Formulation::Psff,
            fragment_kind: SetKind::Rf,
            dominance_filter: true,
            replicate_cuts: true,
            time_limit: 3600.0,
            path_cap: crate::formulations::PATH_CAP,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub instance: String,
    pub problem: String,
    pub pickup_limit: usize,
    pub vehicles: usize,
    pub formulation: String,
    pub fragment_set: Option<String>,
    pub fragments: Option<usize>,
    pub network_arcs: Option<usize>,
    /// Fragment + network + model build time.
    pub build_seconds: f64,
    pub solver_seconds: f64,
    pub total_seconds: f64,
    /// optimal | feasible | infeasible | time_limit
    pub status: String,
    pub objective: Option<f64>,
    pub bound: Option<f64>,
    pub gap: Option<f64>,
    pub cut_rounds: usize,
    pub cuts_added: usize,
    pub routes: Vec<String>,
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("resource cap hit: {0}")]
    ResourceCap(String),
    #[error("solver failure: {0}")]
    Backend(String),
    #[error("solution failed validation: {0}")]
    Invalid(String),
}

struct Solved {
    result: SolveResult,
    /// (block, route) pairs of the final incumbent, when decodable.
    routes: Vec<(usize, RoutePath)>,
    /// Instance each block's routes are costed against.
    insts: Vec<Instance>,
    fragments: Option<usize>,
    network_arcs: Option<usize>,
    build_seconds: f64,
}

pub fn run(name: &str, base: &Instance, cfg: &RunConfig) -> Result<RunRecord, RunError> {
    let started = Instant::now();
    let limit = cfg.pickup_limit.unwrap_or(base.pickup_limit);
    let record = |status: &str| RunRecord {
        instance: name.to_string(),
        problem: cfg.problem.label().to_string(),
        pickup_limit: limit,
        vehicles: 0,
        formulation: cfg.formulation.label().to_string(),
        fragment_set: needs_fragments(cfg.formulation)
            .then(|| cfg.fragment_kind.label().to_string()),
        fragments: None,
        network_arcs: None,
        build_seconds: 0.0,
        solver_seconds: 0.0,
        total_seconds: started.elapsed().as_secs_f64(),
        status: status.to_string(),
        objective: None,
        bound: None,
        gap: None,
        cut_rounds: 0,
        cuts_added: 0,
        routes: vec![],
    };

    let solved = match cfg.problem {
        Problem::DarpLpt => {
            let inst = configure_darplpt(base, limit);
            let Ok(tight) = tighten_time_windows(&inst) else {
                let mut r = record("infeasible");
                r.vehicles = inst.num_vehicles;
                return Ok(r);
            };
            solve_darp(&tight, cfg)?
        }
        Problem::MdarpLpt => {
            let (mut reduced, mcfg) = derive_mdarp(base);
            reduced.pickup_limit = limit;
            solve_mdarp(&reduced, &mcfg, cfg)?
        }
    };

    let mut rec = record(match solved.result.status {
        SolveStatus::Optimal => "optimal",
        SolveStatus::Feasible => "feasible",
        SolveStatus::Infeasible => "infeasible",
        SolveStatus::TimeLimit => "time_limit",
    });
    rec.vehicles = match cfg.problem {
        Problem::DarpLpt => solved.insts[0].num_vehicles,
        Problem::MdarpLpt => solved.insts.len(),
    };
    rec.fragments = solved.fragments;
    rec.network_arcs = solved.network_arcs;
    rec.build_seconds = solved.build_seconds;
    rec.solver_seconds = solved.result.solver_seconds;
    rec.bound = solved.result.bound;
    rec.gap = solved.result.gap;
    rec.cut_rounds = solved.result.cut_rounds;
    rec.cuts_added = solved.result.cuts_added;

    if solved.result.objective.is_some() && !solved.routes.is_empty() {
        validate(&solved, cfg, base)?;
        rec.objective = solved.result.objective;
        rec.routes = solved.routes.iter().map(|(b, r)| format!("{b}:{r}")).collect();
    }
    rec.total_seconds = started.elapsed().as_secs_f64();
    Ok(rec)
}

fn needs_fragments(f: Formulation) -> bool {
    matches!(f, Formulation::Fff | Formulation::Psff)
}

/// Solve with a separator, then make sure the reported incumbent is clean:
/// if the solver stopped early on an incumbent that still violates lazy
/// cuts, its objective is not a valid upper bound and is dropped.
fn solve_cut_formulation(
    model: &crate::milp::MilpModel,
    time_limit: f64,
    mut sep: impl FnMut(&[f64]) -> Result<Vec<Cut>, String>,
) -> Result<(SolveResult, bool), RunError> {
    let mut s = |inc: &[f64]| sep(inc);
    let mut result =
        solve(model, time_limit, Some(&mut s)).map_err(|e| RunError::Backend(e.to_string()))?;
    let mut clean = result.status == SolveStatus::Optimal;
    if !clean && !result.incumbent.is_empty() {
        let cuts = sep(&result.incumbent).map_err(RunError::Backend)?;
        clean = cuts.iter().all(|c| {
            let lhs: f64 = c.terms.iter().map(|(v, k)| k * result.incumbent[v.0]).sum();
            match c.sense {
                crate::milp::CmpSense::Le => lhs <= c.rhs + 1e-6,
                crate::milp::CmpSense::Ge => lhs >= c.rhs - 1e-6,
                crate::milp::CmpSense::Eq => (lhs - c.rhs).abs() <= 1e-6,
            }
        });
        if !clean {
            result.objective = None;
            result.gap = None;
        }
    }
    Ok((result, clean))
}

fn solve_darp(tight: &Instance, cfg: &RunConfig) -> Result<Solved, RunError> {
    let build_start = Instant::now();
    match cfg.formulation {
        Formulation::Abf => {
            let arcs = eliminate_arcs(tight);
            let abf = build_abf(tight, &arcs);
            let build_seconds = build_start.elapsed().as_secs_f64();
            let result = solve(&abf.model, cfg.time_limit, None)
                .map_err(|e| RunError::Backend(e.to_string()))?;
            let routes =
                if result.objective.is_some() { abf.decode_full(&result.incumbent) } else { vec![] };
            Ok(Solved {
                result,
                routes,
                insts: vec![tight.clone()],
                fragments: None,
                network_arcs: None,
                build_seconds,
            })
        }
        Formulation::Pbf => {
            let pbf = build_pbf(tight, cfg.path_cap).map_err(cap_error)?;
            let build_seconds = build_start.elapsed().as_secs_f64();
            let result = solve(&pbf.model, cfg.time_limit, None)
                .map_err(|e| RunError::Backend(e.to_string()))?;
            let routes =
                if result.objective.is_some() { pbf.decode_full(&result.incumbent) } else { vec![] };
            Ok(Solved {
                result,
                routes,
                insts: vec![tight.clone()],
                fragments: Some(pbf.num_paths),
                network_arcs: None,
                build_seconds,
            })
        }
        Formulation::Fff => {
            let set = generate(tight, cfg.fragment_kind, cfg.dominance_filter);
            let net = build_network(set, tight);
            let fragments = Some(net.num_fragments());
            let network_arcs = Some(net.arcs.len());
            let mut fff = build_fff(net, tight, true);
            fff.replicate_cuts = cfg.replicate_cuts;
            let build_seconds = build_start.elapsed().as_secs_f64();
            let (result, clean) =
                solve_cut_formulation(&fff.model, cfg.time_limit, |inc| fff.separate(inc))?;
            let routes = if clean && result.objective.is_some() {
                fff.decode_full(&result.incumbent).map_err(RunError::Invalid)?
            } else {
                vec![]
            };
            Ok(Solved {
                result,
                routes,
                insts: vec![tight.clone()],
                fragments,
                network_arcs,
                build_seconds,
            })
        }
        Formulation::Psff => {
            let set = generate(tight, cfg.fragment_kind, cfg.dominance_filter);
            let net = build_network(set, tight);
            let fragments = Some(net.num_fragments());
            let network_arcs = Some(net.arcs.len());
            let psff = build_psff(net, tight);
            let build_seconds = build_start.elapsed().as_secs_f64();
            let (result, clean) =
                solve_cut_formulation(&psff.model, cfg.time_limit, |inc| psff.separate(inc))?;
            let routes = if clean && result.objective.is_some() {
                psff.decode_full(&result.incumbent).map_err(RunError::Invalid)?
            } else {
                vec![]
            };
            Ok(Solved {
                result,
                routes,
                insts: vec![tight.clone()],
                fragments,
                network_arcs,
                build_seconds,
            })
        }
    }
}

fn solve_mdarp(
    reduced: &Instance,
    mcfg: &crate::instance::MdarpConfig,
    cfg: &RunConfig,
) -> Result<Solved, RunError> {
    let build_start = Instant::now();
    let vehicle_insts = |n: usize| -> Vec<Instance> {
        (0..n).map(|v| crate::instance::vehicle_instance(reduced, mcfg, v)).collect()
    };
    match cfg.formulation {
        Formulation::Abf => {
            let abf = build_abf_mdarp(reduced, mcfg);
            let build_seconds = build_start.elapsed().as_secs_f64();
            let result = solve(&abf.model, cfg.time_limit, None)
                .map_err(|e| RunError::Backend(e.to_string()))?;
            let routes =
                if result.objective.is_some() { abf.decode_full(&result.incumbent) } else { vec![] };
            Ok(Solved {
                result,
                routes,
                insts: vehicle_insts(mcfg.drivers.len()),
                fragments: None,
                network_arcs: None,
                build_seconds,
            })
        }
        Formulation::Pbf => {
            let pbf = build_pbf_mdarp(reduced, mcfg, cfg.path_cap).map_err(cap_error)?;
            let build_seconds = build_start.elapsed().as_secs_f64();
            let result = solve(&pbf.model, cfg.time_limit, None)
                .map_err(|e| RunError::Backend(e.to_string()))?;
            let routes =
                if result.objective.is_some() { pbf.decode_full(&result.incumbent) } else { vec![] };
            Ok(Solved {
                result,
                routes,
                insts: vehicle_insts(mcfg.drivers.len()),
                fragments: Some(pbf.num_paths),
                network_arcs: None,
                build_seconds,
            })
        }
        Formulation::Fff => {
            let nets = attach_vehicle_copies(reduced, mcfg, cfg.fragment_kind, cfg.dominance_filter);
            let fragments = Some(nets.iter().map(|(_, n)| n.num_fragments()).sum());
            let network_arcs = Some(nets.iter().map(|(_, n)| n.arcs.len()).sum());
            let insts: Vec<Instance> = nets.iter().map(|(i, _)| i.clone()).collect();
            let fff = build_fff_mdarp(nets, reduced, mcfg);
            let build_seconds = build_start.elapsed().as_secs_f64();
            let (result, clean) =
                solve_cut_formulation(&fff.model, cfg.time_limit, |inc| fff.separate(inc))?;
            let routes = if clean && result.objective.is_some() {
                fff.decode_full(&result.incumbent).map_err(RunError::Invalid)?
            } else {
                vec![]
            };
            Ok(Solved { result, routes, insts, fragments, network_arcs, build_seconds })
        }
        Formulation::Psff => {
            let nets = attach_vehicle_copies(reduced, mcfg, cfg.fragment_kind, cfg.dominance_filter);
            let fragments = Some(nets.iter().map(|(_, n)| n.num_fragments()).sum());
            let network_arcs = Some(nets.iter().map(|(_, n)| n.arcs.len()).sum());
            let insts: Vec<Instance> = nets.iter().map(|(i, _)| i.clone()).collect();
            let psff = build_psff_mdarp(nets, reduced, mcfg);
            let build_seconds = build_start.elapsed().as_secs_f64();
            let (result, clean) =
                solve_cut_formulation(&psff.model, cfg.time_limit, |inc| psff.separate(inc))?;
            let routes = if clean && result.objective.is_some() {
                psff.decode_full(&result.incumbent).map_err(RunError::Invalid)?
            } else {
                vec![]
            };
            Ok(Solved { result, routes, insts, fragments, network_arcs, build_seconds })
        }
    }
}

fn cap_error(e: OracleError) -> RunError {
    match e {
        OracleError::CapExceeded(c) => RunError::ResourceCap(format!("path cap {c} exceeded")),
        other => RunError::Backend(other.to_string()),
    }
}

/// Independent check of a decoded solution: every route schedule-feasible
/// for its block, customers partitioned exactly, and the re-costed total
/// equal to the solver objective.
fn validate(solved: &Solved, cfg: &RunConfig, _base: &Instance) -> Result<(), RunError> {
    let obj = solved.result.objective.unwrap();
    let mut recost = 0.0;
    let mut covered = CustomerSet::EMPTY;
    let n = solved.insts[0].n;
    for (b, route) in &solved.routes {
        let vi = match cfg.problem {
            Problem::DarpLpt => &solved.insts[0],
            Problem::MdarpLpt => &solved.insts[*b],
        };
        if route.stops.len() > 2 {
            check_schedule(route, vi, true)
                .map_err(|e| RunError::Invalid(format!("route {route}: {e:?}")))?;
            if route.pickup_count(vi) > vi.pickup_limit {
                return Err(RunError::Invalid(format!("route {route} exceeds pickup limit")));
            }
        }
        recost += route_cost(route, vi);
        for &s in &route.stops {
            if s >= 1 && s <= n {
                if covered.contains(s) {
                    return Err(RunError::Invalid(format!("customer {s} served twice")));
                }
                covered = covered.with(s);
            }
        }
    }
    if covered.len() != n {
        return Err(RunError::Invalid(format!("only {} of {n} customers served", covered.len())));
    }
    let tol = 1e-4 * obj.abs().max(1.0);
    if (recost - obj).abs() > tol {
        return Err(RunError::Invalid(format!("recosted {recost} differs from objective {obj}")));
    }
    Ok(())
}

/// Rendered fragment dump for `--dump-fragments`.
pub fn fragment_dump(base: &Instance, cfg: &RunConfig) -> Result<String, RunError> {
    let limit = cfg.pickup_limit.unwrap_or(base.pickup_limit);
    match cfg.problem {
        Problem::DarpLpt => {
            let inst = configure_darplpt(base, limit);
            let tight = tighten_time_windows(&inst)
                .map_err(|e| RunError::Invalid(format!("{e:?}")))?;
            Ok(generate(&tight, cfg.fragment_kind, cfg.dominance_filter).dump())
        }
        Problem::MdarpLpt => {
            let (mut reduced, mcfg) = derive_mdarp(base);
            reduced.pickup_limit = limit;
            let nets =
                attach_vehicle_copies(&reduced, &mcfg, cfg.fragment_kind, cfg.dominance_filter);
            let mut out = String::new();
            for (v, (_, net)) in nets.iter().enumerate() {
                out.push_str(&format!("# vehicle {v}\n"));
                out.push_str(&net.set.dump());
            }
            Ok(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{random_instance, RandomInstanceParams};
    use crate::oracle::{brute_force_optimal, brute_force_optimal_mdarp};

    #[test]
    fn all_formulations_agree_with_oracle() {
        let inst = random_instance(2, &RandomInstanceParams { n: 4, ..Default::default() });
        let tight = tighten_time_windows(&inst).unwrap();
        let want = brute_force_optimal(&tight).unwrap().objective;
        for f in [Formulation::Abf, Formulation::Fff, Formulation::Psff, Formulation::Pbf] {
            let cfg = RunConfig { formulation: f, ..Default::default() };
            let rec = run("t", &inst, &cfg).unwrap();
            assert_eq!(rec.status, "optimal", "{f:?}");
            let got = rec.objective.unwrap();
            assert!((got - want).abs() < 1e-6, "{f:?}: {got} vs {want}");
            assert!(!rec.routes.is_empty());
        }
    }

    #[test]
    fn mdarp_pipeline_agrees_with_oracle() {
        for seed in [5u64, 9, 14] {
            let inst = random_instance(seed, &RandomInstanceParams { n: 6, ..Default::default() });
            let (mut reduced, mcfg) = derive_mdarp(&inst);
            reduced.pickup_limit = inst.pickup_limit;
            let want = match brute_force_optimal_mdarp(&reduced, &mcfg) {
                Ok(sol) => Some(sol.objective),
                Err(crate::oracle::OracleError::Infeasible) => None,
                Err(e) => panic!("{e}"),
            };
            for f in [Formulation::Abf, Formulation::Fff, Formulation::Psff, Formulation::Pbf] {
                let cfg = RunConfig {
                    problem: Problem::MdarpLpt,
                    formulation: f,
                    ..Default::default()
                };
                let rec = run("t", &inst, &cfg).unwrap();
                match want {
                    Some(w) => {
                        assert_eq!(rec.status, "optimal", "seed {seed} {f:?}");
                        let got = rec.objective.unwrap();
                        assert!((got - w).abs() < 1e-6, "seed {seed} {f:?}: {got} vs {w}");
                    }
                    None => assert_eq!(rec.status, "infeasible", "seed {seed} {f:?}"),
                }
            }
        }
    }

    #[test]
    fn path_cap_reports_resource_error() {
        let inst = random_instance(1, &RandomInstanceParams { n: 4, ..Default::default() });
        let cfg = RunConfig {
            formulation: Formulation::Pbf,
            path_cap: 1,
            ..Default::default()
        };
        assert!(matches!(run("t", &inst, &cfg), Err(RunError::ResourceCap(_))));
    }
}
