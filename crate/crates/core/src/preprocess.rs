//! Time-window tightening and arc elimination, applied before any
//! formulation is built.

use thiserror::Error;

use crate::instance::Instance;
use crate::TIME_EPS;

#[derive(Debug, Error)]
#[error("instance infeasible: time window of location {location} became empty ({e} > {l})")]
pub struct EmptyWindow {
    pub location: usize,
    pub e: f64,
    pub l: f64,
}

/// Tighten every time window to a fixpoint using depot reachability and
/// pickup/delivery pairing:
///   e_i := max(e_i, e_0 + T_0i)
///   l_i := min(l_i, l_{2n+1} − T_{i,2n+1} − service_i)
///   e_{n+i} := max(e_{n+i}, e_i + service_i + T_{i,n+i})
///   l_i := min(l_i, l_{n+i} − service_i − T_{i,n+i})
pub fn tighten_time_windows(inst: &Instance) -> Result<Instance, EmptyWindow> {
    let out = tighten_lenient(inst);
    for loc in &out.locations {
        if loc.e > loc.l + TIME_EPS {
            return Err(EmptyWindow { location: loc.id, e: loc.e, l: loc.l });
        }
    }
    Ok(out)
}

/// Tightening fixpoint that tolerates windows becoming empty: such locations
/// are simply unreachable (every path through them fails the schedule
/// check). Used for per-vehicle copies in the multi-depot variant, where a
/// customer may be unservable by one vehicle but fine for another.
pub fn tighten_lenient(inst: &Instance) -> Instance {
    let mut out = inst.clone();
    let n = inst.n;
    let dest = inst.dest_depot();
    loop {
        let mut changed = false;
        let raise_e = |out: &mut Instance, i: usize, v: f64, changed: &mut bool| {
            if v > out.locations[i].e + TIME_EPS {
                out.locations[i].e = v;
                *changed = true;
            }
        };
        let lower_l = |out: &mut Instance, i: usize, v: f64, changed: &mut bool| {
            if v < out.locations[i].l - TIME_EPS {
                out.locations[i].l = v;
                *changed = true;
            }
        };
        for i in 1..=2 * n {
            let from_depot = out.locations[0].e + out.travel_time(0, i);
            raise_e(&mut out, i, from_depot, &mut changed);
            let to_depot =
                out.locations[dest].l - out.travel_time(i, dest) - out.locations[i].service;
            lower_l(&mut out, i, to_depot, &mut changed);
        }
        for i in 1..=n {
            let d = i + n;
            let sep = out.locations[i].service + out.travel_time(i, d);
            let fwd = out.locations[i].e + sep;
            raise_e(&mut out, d, fwd, &mut changed);
            let bwd = out.locations[d].l - sep;
            lower_l(&mut out, i, bwd, &mut changed);
        }
        if !changed {
            break;
        }
    }
    out
}

/// Boolean adjacency over all locations; `allowed[i][j]` means the solver may
/// use arc (i, j).
#[derive(Debug, Clone)]
pub struct ArcSet {
    m: usize,
    allowed: Vec<bool>,
}

impl ArcSet {
    pub fn allows(&self, i: usize, j: usize) -> bool {
        self.allowed[i * self.m + j]
    }

    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let m = self.m;
        (0..m).flat_map(move |i| (0..m).filter(move |&j| self.allows(i, j)).map(move |j| (i, j)))
    }

    pub fn count(&self) -> usize {
        self.allowed.iter().filter(|&&b| b).count()
    }
}

/// Remove arcs that can never appear in a feasible route: self-loops,
/// time-infeasible pairs (e_i + s_i + T_ij > l_j), delivery-before-its-pickup,
/// pickup → destination depot, origin depot → delivery, and anything out of
/// the destination depot or into the origin depot.
pub fn eliminate_arcs(inst: &Instance) -> ArcSet {
    let m = inst.num_locations();
    let (orig, dest) = (inst.origin_depot(), inst.dest_depot());
    let mut allowed = vec![false; m * m];
    for i in 0..m {
        for j in 0..m {
            if i == j || i == dest || j == orig {
                continue;
            }
            // Precedence: a customer's delivery can't directly precede its pickup.
            if inst.is_delivery(i) && inst.pickup_of(i) == j {
                continue;
            }
            // A route can't end right after a pickup or start at a delivery.
            if j == dest && inst.is_pickup(i) {
                continue;
            }
            if i == orig && inst.is_delivery(j) {
                continue;
            }
            let ei = inst.locations[i].e;
            let si = inst.locations[i].service;
            if ei + si + inst.travel_time(i, j) > inst.locations[j].l + TIME_EPS {
                continue;
            }
            allowed[i * m + j] = true;
        }
    }
    ArcSet { m, allowed }
}
