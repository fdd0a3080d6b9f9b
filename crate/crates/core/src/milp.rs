//! Backend-agnostic MILP surface and the HiGHS adapter.
//!
//! Models are built into a plain container (stable variable order, so
//! identical inputs produce structurally identical models) and handed to the
//! solver. Lazy constraints are supported through a solve-and-cut loop:
//! HiGHS has no incumbent callbacks, so we solve to optimality, separate
//! cuts on the optimum, add the violated ones, and re-solve until clean.

use std::fmt::Write as _;
use std::time::Instant;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Binary,
    Integer,
    Continuous,
}

/// Index into the model's variable table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(pub usize);

#[derive(Debug, Clone)]
struct VarDef {
    kind: VarKind,
    lb: f64,
    ub: f64,
    obj: f64,
    name: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpSense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub terms: Vec<(Var, f64)>,
    pub sense: CmpSense,
    pub rhs: f64,
    pub name: String,
}

#[derive(Debug, Clone, Default)]
pub struct MilpModel {
    vars: Vec<VarDef>,
    constraints: Vec<Constraint>,
}

impl MilpModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, kind: VarKind, lb: f64, ub: f64, obj: f64, name: String) -> Var {
        let (lb, ub) = match kind {
            VarKind::Binary => (lb.max(0.0), ub.min(1.0)),
            _ => (lb, ub),
        };
        self.vars.push(VarDef { kind, lb, ub, obj, name });
        Var(self.vars.len() - 1)
    }

    pub fn add_binary(&mut self, obj: f64, name: String) -> Var {
        self.add_var(VarKind::Binary, 0.0, 1.0, obj, name)
    }

    pub fn add_constraint(&mut self, terms: Vec<(Var, f64)>, sense: CmpSense, rhs: f64, name: String) {
        debug_assert!(terms.iter().all(|(v, _)| v.0 < self.vars.len()));
        self.constraints.push(Constraint { terms, sense, rhs, name });
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn var_name(&self, v: Var) -> &str {
        &self.vars[v.0].name
    }

    /// Fix a variable to a constant by collapsing its bounds.
    pub fn fix_var(&mut self, v: Var, value: f64) {
        self.vars[v.0].lb = value;
        self.vars[v.0].ub = value;
    }

    /// Serialize in LP file syntax for offline debugging.
    pub fn to_lp_format(&self) -> String {
        let mut s = String::from("Minimize\n obj:");
        for (k, v) in self.vars.iter().enumerate() {
            if v.obj != 0.0 {
                let _ = write!(s, " {}{} x{}", if v.obj >= 0.0 { "+" } else { "" }, v.obj, k);
            }
        }
        s.push_str("\nSubject To\n");
        for (k, c) in self.constraints.iter().enumerate() {
            let _ = write!(s, " c{k}:");
            for (var, coef) in &c.terms {
                let _ = write!(s, " {}{} x{}", if *coef >= 0.0 { "+" } else { "" }, coef, var.0);
            }
            let op = match c.sense {
                CmpSense::Le => "<=",
                CmpSense::Ge => ">=",
                CmpSense::Eq => "=",
            };
            let _ = writeln!(s, " {op} {}", c.rhs);
        }
        s.push_str("Bounds\n");
        for (k, v) in self.vars.iter().enumerate() {
            let _ = writeln!(s, " {} <= x{} <= {}", v.lb, k, v.ub);
        }
        s.push_str("General\n");
        for (k, v) in self.vars.iter().enumerate() {
            if v.kind != VarKind::Continuous {
                let _ = write!(s, " x{k}");
            }
        }
        s.push_str("\nEnd\n");
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Feasible,
    Infeasible,
    TimeLimit,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub objective: Option<f64>,
    pub bound: Option<f64>,
    /// Relative gap (OBJ − LB) / OBJ, clamped to [0, 1].
    pub gap: Option<f64>,
    pub incumbent: Vec<f64>,
    pub solver_seconds: f64,
    pub cut_rounds: usize,
    pub cuts_added: usize,
}

impl SolveResult {
    pub fn value(&self, v: Var) -> f64 {
        self.incumbent[v.0]
    }
}

#[derive(Debug, Error)]
pub enum MilpError {
    #[error("solver failure: {0}")]
    Backend(String),
    #[error("cut separation failed: {0}")]
    Separation(String),
}

/// A lazy constraint produced by a separation procedure.
pub type Cut = Constraint;

fn solve_once(model: &MilpModel, time_limit: f64) -> Result<SolveResult, MilpError> {
    use highs::{HighsModelStatus, RowProblem, Sense};

    let start = Instant::now();
    let mut pb = RowProblem::default();
    let mut cols = Vec::with_capacity(model.vars.len());
    for v in &model.vars {
        let col = match v.kind {
            VarKind::Continuous => pb.add_column(v.obj, v.lb..=v.ub),
            _ => pb.add_integer_column(v.obj, v.lb..=v.ub),
        };
        cols.push(col);
    }
    for c in &model.constraints {
        let factors: Vec<_> = c.terms.iter().map(|(v, coef)| (cols[v.0], *coef)).collect();
        match c.sense {
            CmpSense::Le => pb.add_row(..=c.rhs, &factors),
            CmpSense::Ge => pb.add_row(c.rhs.., &factors),
            CmpSense::Eq => pb.add_row(c.rhs..=c.rhs, &factors),
        };
    }
    let mut m = pb.optimise(Sense::Minimise);
    m.make_quiet();
    m.set_option("threads", 1);
    m.set_option("time_limit", time_limit.max(0.01));
    m.set_option("mip_rel_gap", 1e-9);
    m.set_option("mip_feasibility_tolerance", 1e-8);
    let solved = m.try_solve().map_err(|e| MilpError::Backend(format!("{e:?}")))?;
    let solver_seconds = start.elapsed().as_secs_f64();

    let has_mip = model.vars.iter().any(|v| v.kind != VarKind::Continuous);
    let status = solved.status();
    let empty = model.vars.is_empty();
    match status {
        HighsModelStatus::Optimal | HighsModelStatus::ModelEmpty => {
            let (objective, incumbent) = if empty {
                (0.0, vec![])
            } else {
                (solved.objective_value(), solved.get_solution().columns().to_vec())
            };
            Ok(SolveResult {
                status: SolveStatus::Optimal,
                objective: Some(objective),
                bound: Some(objective),
                gap: Some(0.0),
                incumbent,
                solver_seconds,
                cut_rounds: 0,
                cuts_added: 0,
            })
        }
        HighsModelStatus::Infeasible | HighsModelStatus::UnboundedOrInfeasible => Ok(SolveResult {
            status: SolveStatus::Infeasible,
            objective: None,
            bound: None,
            gap: None,
            incumbent: vec![],
            solver_seconds,
            cut_rounds: 0,
            cuts_added: 0,
        }),
        HighsModelStatus::ReachedTimeLimit => {
            let gap_raw = if has_mip { solved.mip_gap() } else { f64::INFINITY };
            if gap_raw.is_finite() {
                let objective = solved.objective_value();
                let incumbent = solved.get_solution().columns().to_vec();
                let bound = objective - gap_raw.abs() * objective.abs();
                Ok(SolveResult {
                    status: SolveStatus::TimeLimit,
                    objective: Some(objective),
                    bound: Some(bound),
                    gap: Some(gap_raw.abs().min(1.0)),
                    incumbent,
                    solver_seconds,
                    cut_rounds: 0,
                    cuts_added: 0,
                })
            } else {
                Ok(SolveResult {
                    status: SolveStatus::TimeLimit,
                    objective: None,
                    bound: None,
                    gap: None,
                    incumbent: vec![],
                    solver_seconds,
                    cut_rounds: 0,
                    cuts_added: 0,
                })
            }
        }
        other => Err(MilpError::Backend(format!("unexpected solver status {other:?}"))),
    }
}

/// Solve `model`, optionally with a separation procedure invoked on every
/// integral optimum; violated cuts are added and the model re-solved until
/// no violations remain or the time budget is exhausted.
pub fn solve(
    model: &MilpModel,
    time_limit: f64,
    mut cut_source: Option<&mut dyn FnMut(&[f64]) -> Result<Vec<Cut>, String>>,
) -> Result<SolveResult, MilpError> {
    let start = Instant::now();
    let mut work = model.clone();
    let mut cut_rounds = 0;
    let mut cuts_added = 0;
    loop {
        let remaining = time_limit - start.elapsed().as_secs_f64();
        if remaining <= 0.0 {
            return Ok(SolveResult {
                status: SolveStatus::TimeLimit,
                objective: None,
                bound: None,
                gap: None,
                incumbent: vec![],
                solver_seconds: start.elapsed().as_secs_f64(),
                cut_rounds,
                cuts_added,
            });
        }
        let mut result = solve_once(&work, remaining)?;
        result.solver_seconds = start.elapsed().as_secs_f64();
        result.cut_rounds = cut_rounds;
        result.cuts_added = cuts_added;
        if result.status != SolveStatus::Optimal {
            return Ok(result);
        }
        let Some(sep) = cut_source.as_deref_mut() else {
            return Ok(result);
        };
        let cuts = sep(&result.incumbent).map_err(MilpError::Separation)?;
        // Keep only cuts the incumbent actually violates; a clean incumbent
        // terminates the loop.
        let violated: Vec<Cut> = cuts
            .into_iter()
            .filter(|c| {
                let lhs: f64 = c.terms.iter().map(|(v, coef)| coef * result.incumbent[v.0]).sum();
                match c.sense {
                    CmpSense::Le => lhs > c.rhs + 1e-6,
                    CmpSense::Ge => lhs < c.rhs - 1e-6,
                    CmpSense::Eq => (lhs - c.rhs).abs() > 1e-6,
                }
            })
            .collect();
        if violated.is_empty() {
            return Ok(result);
        }
        cut_rounds += 1;
        cuts_added += violated.len();
        for c in violated {
            work.constraints.push(c);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_knapsack() {
        // max 3a + 4b s.t. 2a + 3b <= 4 == min -3a -4b
        let mut m = MilpModel::new();
        let a = m.add_binary(-3.0, "a".into());
        let b = m.add_binary(-4.0, "b".into());
        m.add_constraint(vec![(a, 2.0), (b, 3.0)], CmpSense::Le, 4.0, "cap".into());
        let r = solve(&m, 10.0, None).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.objective.unwrap() + 4.0).abs() < 1e-6);
        assert!(r.value(b) > 0.5 && r.value(a) < 0.5);
    }

    #[test]
    fn infeasible_model() {
        let mut m = MilpModel::new();
        let a = m.add_binary(1.0, "a".into());
        m.add_constraint(vec![(a, 1.0)], CmpSense::Ge, 2.0, "impossible".into());
        let r = solve(&m, 10.0, None).unwrap();
        assert_eq!(r.status, SolveStatus::Infeasible);
    }

    #[test]
    fn cut_loop_terminates_and_cuts_apply() {
        // min -a - b; cutting plane forbids a + b = 2.
        let mut m = MilpModel::new();
        let a = m.add_binary(-1.0, "a".into());
        let b = m.add_binary(-1.0, "b".into());
        let mut calls = 0;
        let mut sep = |inc: &[f64]| -> Result<Vec<Cut>, String> {
            calls += 1;
            if inc[0] + inc[1] > 1.5 {
                Ok(vec![Constraint {
                    terms: vec![(a, 1.0), (b, 1.0)],
                    sense: CmpSense::Le,
                    rhs: 1.0,
                    name: "cut".into(),
                }])
            } else {
                Ok(vec![])
            }
        };
        let r = solve(&m, 10.0, Some(&mut sep)).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.objective.unwrap() + 1.0).abs() < 1e-6);
        assert_eq!(r.cut_rounds, 1);
        assert!(calls >= 2);
    }

    #[test]
    fn lp_dump_is_parseable_shape() {
        let mut m = MilpModel::new();
        let a = m.add_binary(2.5, "a".into());
        m.add_constraint(vec![(a, 1.0)], CmpSense::Le, 1.0, "c".into());
        let lp = m.to_lp_format();
        assert!(lp.contains("Minimize") && lp.contains("Subject To") && lp.contains("End"));
        assert!(lp.contains("+2.5 x0"));
    }

    #[test]
    fn continuous_lp() {
        let mut m = MilpModel::new();
        let x = m.add_var(VarKind::Continuous, 0.0, 10.0, 1.0, "x".into());
        m.add_constraint(vec![(x, 1.0)], CmpSense::Ge, 2.5, "lb".into());
        let r = solve(&m, 10.0, None).unwrap();
        assert!((r.objective.unwrap() - 2.5).abs() < 1e-6);
    }

    #[test]
    fn empty_model_is_trivially_optimal() {
        let m = MilpModel::new();
        let r = solve(&m, 10.0, None).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert_eq!(r.objective, Some(0.0));
    }
}
