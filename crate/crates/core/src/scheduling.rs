//! Route feasibility and costing.
//!
//! A candidate route is a sequence of locations; feasibility under time
//! windows, ride-time limits and route duration reduces to consistency of a
//! difference-constraint system over begin-service times. We solve it with a
//! label-correcting fixpoint (Bellman-Ford over the constraint graph): the
//! system is consistent iff the fixpoint is reached within |vars| passes, in
//! which case the fixpoint is the componentwise-earliest feasible schedule.

use crate::instance::Instance;
use crate::TIME_EPS;

/// An ordered sequence of location ids. Fragment paths exclude depots; full
/// routes include them.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RoutePath {
    pub stops: Vec<usize>,
}

impl RoutePath {
    pub fn new(stops: Vec<usize>) -> Self {
        RoutePath { stops }
    }

    pub fn len(&self) -> usize {
        self.stops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stops.is_empty()
    }

    /// Number of pickup locations in the path.
    pub fn pickup_count(&self, inst: &Instance) -> usize {
        self.stops.iter().filter(|&&s| inst.is_pickup(s)).count()
    }
}

impl std::fmt::Display for RoutePath {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s: Vec<String> = self.stops.iter().map(|x| x.to_string()).collect();
        write!(f, "({})", s.join(","))
    }
}

/// Begin-service times for each stop of a path.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub begin_service: Vec<f64>,
    pub total_duration: f64,
}

/// Why a candidate path has no feasible schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Infeasibility {
    RepeatedStop,
    /// A delivery precedes its pickup, or a depot appears mid-path.
    Precedence,
    /// Running load exceeds the vehicle capacity or drops below zero.
    Capacity,
    /// The time-window / ride-time / duration system is inconsistent.
    Time,
}

impl std::fmt::Display for Infeasibility {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Infeasibility::RepeatedStop => "repeated stop",
            Infeasibility::Precedence => "precedence violation",
            Infeasibility::Capacity => "capacity violation",
            Infeasibility::Time => "time infeasibility",
        };
        f.write_str(s)
    }
}

/// One difference constraint `t_to − t_from ≤ bound`.
struct UpperDiff {
    from: usize,
    to: usize,
    bound: f64,
}

/// Collect the constraint system for a path: chaining lower bounds between
/// consecutive stops, window bounds, ride-time limits for customer pairs
/// where both stops appear, and the route-duration cap when depots are
/// present.
struct System {
    /// chain[k] = minimum separation t_{k+1} − t_k (service + travel).
    chain: Vec<f64>,
    e: Vec<f64>,
    l: Vec<f64>,
    uppers: Vec<UpperDiff>,
}

fn build_system(path: &RoutePath, inst: &Instance, with_depots: bool) -> System {
    let m = path.stops.len();
    let mut chain = Vec::with_capacity(m.saturating_sub(1));
    for k in 0..m.saturating_sub(1) {
        let (i, j) = (path.stops[k], path.stops[k + 1]);
        chain.push(inst.locations[i].service + inst.travel_time(i, j));
    }
    let e: Vec<f64> = path.stops.iter().map(|&s| inst.locations[s].e).collect();
    let l: Vec<f64> = path.stops.iter().map(|&s| inst.locations[s].l).collect();

    let mut uppers = Vec::new();
    // Ride time: from end of pickup service to start of delivery service.
    let mut pickup_pos = vec![usize::MAX; inst.n + 1];
    for (k, &s) in path.stops.iter().enumerate() {
        if inst.is_pickup(s) {
            pickup_pos[s] = k;
        } else if inst.is_delivery(s) {
            let p = inst.pickup_of(s);
            if pickup_pos[p] != usize::MAX {
                uppers.push(UpperDiff {
                    from: pickup_pos[p],
                    to: k,
                    bound: inst.ride_limit + inst.locations[p].service,
                });
            }
        }
    }
    if with_depots && m >= 2 {
        uppers.push(UpperDiff { from: 0, to: m - 1, bound: inst.max_route_duration });
    }
    System { chain, e, l, uppers }
}

/// Structural checks that don't need the constraint system.
fn structural_check(path: &RoutePath, inst: &Instance, with_depots: bool) -> Result<(), Infeasibility> {
    let mut seen = vec![false; inst.num_locations()];
    for &s in &path.stops {
        if seen[s] {
            return Err(Infeasibility::RepeatedStop);
        }
        seen[s] = true;
    }
    let interior = if with_depots {
        let m = path.stops.len();
        if m < 2 || path.stops[0] != inst.origin_depot() || path.stops[m - 1] != inst.dest_depot() {
            return Err(Infeasibility::Precedence);
        }
        &path.stops[1..m - 1]
    } else {
        &path.stops[..]
    };
    let mut picked = vec![false; inst.n + 1];
    let mut load = 0i64;
    for (k, &s) in interior.iter().enumerate() {
        if !inst.is_pickup(s) && !inst.is_delivery(s) {
            // Depot-free mode still admits depots at the path boundaries
            // (extended fragments end at the destination depot).
            let boundary_ok = !with_depots
                && ((k == 0 && s == inst.origin_depot())
                    || (k + 1 == interior.len() && s == inst.dest_depot()));
            if !boundary_ok {
                return Err(Infeasibility::Precedence);
            }
            continue;
        }
        if inst.is_pickup(s) {
            picked[s] = true;
        } else if inst.is_delivery(s) && !picked[inst.pickup_of(s)] {
            // Delivery without the pickup in-path is fine for fragments
            // (customer was on board at the start) but a delivery *after*
            // the path's own pickup region check still needs ordering; the
            // ordering violation is exactly "pickup appears later", which
            // the `picked` flag catches when both appear.
            if interior.contains(&inst.pickup_of(s)) {
                return Err(Infeasibility::Precedence);
            }
        }
        load += inst.load_change(s);
    }
    // Load profile relative to the (unknown) starting load: with depots the
    // start load is zero and absolute bounds apply.
    if with_depots {
        let mut load = 0i64;
        for &s in interior {
            load += inst.load_change(s);
            if load < 0 || load > inst.capacity {
                return Err(Infeasibility::Capacity);
            }
        }
        if load != 0 {
            return Err(Infeasibility::Capacity);
        }
    } else {
        // Shift by the minimal consistent start load; reject if the profile
        // spread exceeds capacity.
        let mut cur = 0i64;
        let (mut lo, mut hi) = (0i64, 0i64);
        for &s in &path.stops {
            cur += inst.load_change(s);
            lo = lo.min(cur);
            hi = hi.max(cur);
        }
        let _ = load;
        if hi - lo > inst.capacity {
            return Err(Infeasibility::Capacity);
        }
    }
    Ok(())
}

/// Label-correcting solve of the difference-constraint system: returns the
/// earliest feasible begin-service vector or `None` when inconsistent.
fn earliest_times(sys: &System) -> Option<Vec<f64>> {
    let m = sys.e.len();
    let mut t = sys.e.clone();
    // Each pass applies every constraint once; a consistent system is a DAG
    // of difference constraints over m variables and stabilizes within m
    // passes. One extra pass detects the "negative cycle" case.
    for pass in 0..=m {
        let mut changed = false;
        for k in 0..sys.chain.len() {
            let lb = t[k] + sys.chain[k];
            if lb > t[k + 1] + TIME_EPS {
                t[k + 1] = lb;
                changed = true;
            }
        }
        for u in &sys.uppers {
            // t_to − t_from ≤ bound  ⇒  t_from ≥ t_to − bound.
            let lb = t[u.to] - u.bound;
            if lb > t[u.from] + TIME_EPS {
                t[u.from] = lb;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        if pass == m {
            return None;
        }
    }
    for k in 0..m {
        if t[k] > sys.l[k] + TIME_EPS {
            return None;
        }
    }
    Some(t)
}

/// Latest feasible begin-service vector, or `None` when inconsistent.
fn latest_times(sys: &System) -> Option<Vec<f64>> {
    let m = sys.e.len();
    let mut t = sys.l.clone();
    for pass in 0..=m {
        let mut changed = false;
        for k in 0..sys.chain.len() {
            let ub = t[k + 1] - sys.chain[k];
            if ub < t[k] - TIME_EPS {
                t[k] = ub;
                changed = true;
            }
        }
        for u in &sys.uppers {
            let ub = t[u.from] + u.bound;
            if ub < t[u.to] - TIME_EPS {
                t[u.to] = ub;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        if pass == m {
            return None;
        }
    }
    for k in 0..m {
        if t[k] < sys.e[k] - TIME_EPS {
            return None;
        }
    }
    Some(t)
}

/// Decide feasibility of `path` and return its earliest feasible schedule.
/// With `with_depots` the path must start/end at the depots and the route
/// duration cap applies; without, the path is a fragment checked against
/// (possibly tightened) windows only.
pub fn check_schedule(
    path: &RoutePath,
    inst: &Instance,
    with_depots: bool,
) -> Result<Schedule, Infeasibility> {
    structural_check(path, inst, with_depots)?;
    if path.stops.is_empty() {
        return Ok(Schedule { begin_service: vec![], total_duration: 0.0 });
    }
    let sys = build_system(path, inst, with_depots);
    let t = earliest_times(&sys).ok_or(Infeasibility::Time)?;
    let total_duration = t[t.len() - 1] - t[0];
    Ok(Schedule { begin_service: t, total_duration })
}

/// Earliest completion time (begin-service at the last stop of the earliest
/// schedule) and latest start time (begin-service at the first stop of the
/// latest schedule). `None` if the path is time-infeasible.
pub fn time_envelope(path: &RoutePath, inst: &Instance) -> Option<(f64, f64)> {
    if path.stops.is_empty() {
        return Some((0.0, f64::INFINITY));
    }
    let sys = build_system(path, inst, false);
    let earliest = earliest_times(&sys)?;
    let latest = latest_times(&sys)?;
    Some((earliest[earliest.len() - 1], latest[0]))
}

/// Sum of arc costs over consecutive stops.
pub fn route_cost(path: &RoutePath, inst: &Instance) -> f64 {
    path.stops
        .windows(2)
        .map(|w| inst.travel_cost(w[0], w[1]))
        .sum()
}

/// Re-validate a schedule against the raw constraint list. Used as a
/// self-check in tests: anything `check_schedule` accepts must pass here.
pub fn validate_schedule(
    path: &RoutePath,
    schedule: &Schedule,
    inst: &Instance,
    with_depots: bool,
) -> Result<(), String> {
    let t = &schedule.begin_service;
    if t.len() != path.stops.len() {
        return Err("length mismatch".into());
    }
    for (k, &s) in path.stops.iter().enumerate() {
        let loc = &inst.locations[s];
        if t[k] < loc.e - TIME_EPS || t[k] > loc.l + TIME_EPS {
            return Err(format!("stop {k} (loc {s}): t={} outside ({}, {})", t[k], loc.e, loc.l));
        }
    }
    for k in 0..path.stops.len().saturating_sub(1) {
        let (i, j) = (path.stops[k], path.stops[k + 1]);
        let need = t[k] + inst.locations[i].service + inst.travel_time(i, j);
        if t[k + 1] < need - TIME_EPS {
            return Err(format!("chaining violated at stop {k}"));
        }
    }
    for (k, &s) in path.stops.iter().enumerate() {
        if inst.is_delivery(s) {
            let p = inst.pickup_of(s);
            if let Some(kp) = path.stops.iter().position(|&x| x == p) {
                let ride = t[k] - (t[kp] + inst.locations[p].service);
                if ride > inst.ride_limit + TIME_EPS {
                    return Err(format!("ride time of customer {p} is {ride}"));
                }
            }
        }
    }
    if with_depots {
        let dur = t[t.len() - 1] - t[0];
        if dur > inst.max_route_duration + TIME_EPS {
            return Err(format!("duration {dur} exceeds limit"));
        }
    }
    Ok(())
}
