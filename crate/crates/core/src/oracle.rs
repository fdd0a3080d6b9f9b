//! Brute-force exact solver for tiny instances. Independent of the MILP
//! machinery by design: routes are enumerated by raw DFS and the optimal
//! partition found by dynamic programming over customer subsets, so this
//! module serves as ground truth for everything else.

use thiserror::Error;

use crate::customers::CustomerSet;
use crate::instance::{vehicle_instance, Instance, MdarpConfig};
use crate::scheduling::{check_schedule, route_cost, RoutePath};

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("instance has {0} customers; oracle cap is {1}")]
    TooLarge(usize, usize),
    #[error("no feasible assignment of customers to vehicles exists")]
    Infeasible,
    #[error("route enumeration exceeded the cap of {0} paths")]
    CapExceeded(usize),
}

pub const DEFAULT_CAP: usize = 8;

#[derive(Debug, Clone)]
pub struct OracleSolution {
    pub routes: Vec<RoutePath>,
    pub objective: f64,
}

/// All schedule-feasible full routes (depot to depot, nonempty customer
/// set, at most L pickups). Exhaustive DFS with window/load/limit pruning;
/// every emitted route is re-validated by `check_schedule`.
pub fn enumerate_routes(inst: &Instance) -> Result<Vec<RoutePath>, OracleError> {
    if inst.n > DEFAULT_CAP {
        return Err(OracleError::TooLarge(inst.n, DEFAULT_CAP));
    }
    enumerate_routes_capped(inst, usize::MAX)
}

/// Same enumeration with a hard cap on the number of routes produced and no
/// size gate; errs with `CapExceeded` instead of running away.
pub fn enumerate_routes_capped(
    inst: &Instance,
    max_routes: usize,
) -> Result<Vec<RoutePath>, OracleError> {
    let mut out = Vec::new();
    let mut stops = vec![inst.origin_depot()];
    let mut state = Dfs {
        inst,
        onboard: CustomerSet::EMPTY,
        picked: CustomerSet::EMPTY,
        load: 0,
        pickups: 0,
        out: &mut out,
        max_routes,
        overflow: false,
    };
    dfs(&mut state, &mut stops, inst.locations[0].e);
    if state.overflow {
        return Err(OracleError::CapExceeded(max_routes));
    }
    Ok(out)
}

struct Dfs<'a> {
    inst: &'a Instance,
    onboard: CustomerSet,
    picked: CustomerSet,
    load: i64,
    pickups: usize,
    out: &'a mut Vec<RoutePath>,
    max_routes: usize,
    overflow: bool,
}

fn dfs(st: &mut Dfs, stops: &mut Vec<usize>, now: f64) {
    if st.overflow {
        return;
    }
    let inst = st.inst;
    // Close the route whenever the vehicle is empty and has served someone.
    if st.onboard.is_empty() && !st.picked.is_empty() {
        stops.push(inst.dest_depot());
        let path = RoutePath::new(stops.clone());
        if check_schedule(&path, inst, true).is_ok() {
            if st.out.len() >= st.max_routes {
                st.overflow = true;
                stops.pop();
                return;
            }
            st.out.push(path);
        }
        stops.pop();
    }
    for c in 1..=inst.n {
        let (next, arriving_load): (usize, i64) = if st.onboard.contains(c) {
            (inst.delivery_of(c), st.load + inst.load_change(inst.delivery_of(c)))
        } else if !st.picked.contains(c) {
            (c, st.load + inst.load_change(c))
        } else {
            continue;
        };
        if inst.is_pickup(next) {
            if st.pickups + 1 > inst.pickup_limit || arriving_load > inst.capacity {
                continue;
            }
        }
        let prev = *stops.last().unwrap();
        let arrive = now + inst.locations[prev].service + inst.travel_time(prev, next);
        let begin = arrive.max(inst.locations[next].e);
        // Earliest-chain prune: windows only (ride/duration checked at close).
        if begin > inst.locations[next].l + crate::TIME_EPS {
            continue;
        }
        let was = (st.onboard, st.picked, st.load, st.pickups);
        if inst.is_pickup(next) {
            st.onboard = st.onboard.with(c);
            st.picked = st.picked.with(c);
            st.pickups += 1;
        } else {
            st.onboard = st.onboard.without(c);
        }
        st.load = arriving_load;
        stops.push(next);
        dfs(st, stops, begin);
        stops.pop();
        (st.onboard, st.picked, st.load, st.pickups) = was;
    }
}

/// Customer set served by a full route.
pub fn route_customers(path: &RoutePath, inst: &Instance) -> CustomerSet {
    path.stops
        .iter()
        .filter(|&&s| inst.is_pickup(s))
        .fold(CustomerSet::EMPTY, |acc, &s| acc.with(s))
}

/// Cheapest feasible route per customer subset, from an enumerated route
/// list. Index = subset bitmask over customers 1..=n (bit c−1 for customer c).
fn best_route_table(inst: &Instance, routes: &[RoutePath]) -> Vec<Option<(f64, usize)>> {
    let mut best: Vec<Option<(f64, usize)>> = vec![None; 1 << inst.n];
    for (k, r) in routes.iter().enumerate() {
        let mask = mask_of(route_customers(r, inst));
        let cost = route_cost(r, inst);
        if best[mask].map_or(true, |(c, _)| cost < c) {
            best[mask] = Some((cost, k));
        }
    }
    best
}

fn mask_of(set: CustomerSet) -> usize {
    set.iter().fold(0usize, |m, c| m | (1 << (c - 1)))
}

/// Exact minimum-cost partition of all customers into at most |V| feasible
/// routes: best-route-per-subset table, then a partition DP.
pub fn brute_force_optimal(inst: &Instance) -> Result<OracleSolution, OracleError> {
    let routes = enumerate_routes(inst)?;
    let best = best_route_table(inst, &routes);
    let full = (1usize << inst.n) - 1;
    let vmax = inst.num_vehicles;
    // dp[k][mask] = min cost covering `mask` with exactly k routes.
    let inf = f64::INFINITY;
    let mut dp = vec![vec![inf; full + 1]; vmax + 1];
    let mut choice = vec![vec![0usize; full + 1]; vmax + 1];
    dp[0][0] = 0.0;
    for k in 1..=vmax {
        for mask in 1..=full {
            // Iterate submasks containing the lowest set bit to avoid
            // counting the same partition multiple times.
            let low = mask & mask.wrapping_neg();
            let mut sub = mask;
            while sub > 0 {
                if sub & low != 0 {
                    if let Some((cost, r)) = best[sub] {
                        let rest = dp[k - 1][mask ^ sub];
                        if rest + cost < dp[k][mask] {
                            dp[k][mask] = rest + cost;
                            choice[k][mask] = r + 1; // +1 so 0 means unset
                            let _ = r;
                        }
                    }
                }
                sub = (sub - 1) & mask;
            }
        }
    }
    let mut best_k = None;
    for k in 0..=vmax {
        if dp[k][full] < best_k.map_or(inf, |(c, _)| c) {
            best_k = Some((dp[k][full], k));
        }
    }
    let Some((objective, mut k)) = best_k else {
        return Err(OracleError::Infeasible);
    };
    // Reconstruct.
    let mut mask = full;
    let mut sol_routes = Vec::new();
    while k > 0 && mask > 0 {
        let r = choice[k][mask] - 1;
        sol_routes.push(routes[r].clone());
        mask ^= mask_of(route_customers(&routes[r], inst));
        k -= 1;
    }
    Ok(OracleSolution { routes: sol_routes, objective })
}

/// Exact optimum for a multi-depot configuration: each vehicle v gets its
/// own single-vehicle instance (depots replaced by o_v/d_v); a DP over
/// (vehicle, served-set) assigns customer subsets to vehicles. Every vehicle
/// drives at least o_v → d_v.
pub fn brute_force_optimal_mdarp(
    reduced: &Instance,
    cfg: &MdarpConfig,
) -> Result<OracleSolution, OracleError> {
    if reduced.n > DEFAULT_CAP {
        return Err(OracleError::TooLarge(reduced.n, DEFAULT_CAP));
    }
    let full = (1usize << reduced.n) - 1;
    let inf = f64::INFINITY;
    let nv = cfg.drivers.len();

    // Per-vehicle best cost per subset (None = vehicle can't serve it).
    let mut tables = Vec::with_capacity(nv);
    let mut route_lists = Vec::with_capacity(nv);
    for v in 0..nv {
        let vi = vehicle_instance(reduced, cfg, v);
        let routes = enumerate_routes(&vi)?;
        let mut best = best_route_table(&vi, &routes);
        // Empty assignment: the driver still travels o_v → d_v, provided
        // that trip alone is feasible.
        let empty = RoutePath::new(vec![vi.origin_depot(), vi.dest_depot()]);
        if check_schedule(&empty, &vi, true).is_ok() {
            best[0] = Some((route_cost(&empty, &vi), usize::MAX));
        }
        tables.push(best);
        route_lists.push((vi, routes));
    }

    // dp[v][mask] = min cost after assigning vehicles 0..v, customers in mask.
    let mut dp = vec![vec![inf; full + 1]; nv + 1];
    let mut choice = vec![vec![usize::MAX; full + 1]; nv + 1];
    dp[0][0] = 0.0;
    for v in 0..nv {
        for mask in 0..=full {
            if dp[v][mask] == inf {
                continue;
            }
            let rest = full ^ mask;
            // Enumerate subsets of the remaining customers (including empty).
            let mut sub = rest;
            loop {
                if let Some((cost, _)) = tables[v][sub] {
                    let nm = mask | sub;
                    if dp[v][mask] + cost < dp[v + 1][nm] {
                        dp[v + 1][nm] = dp[v][mask] + cost;
                        choice[v + 1][nm] = sub;
                    }
                }
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & rest;
            }
        }
    }
    if dp[nv][full] == inf {
        return Err(OracleError::Infeasible);
    }
    // Reconstruct.
    let mut mask = full;
    let mut sol_routes = Vec::new();
    for v in (1..=nv).rev() {
        let sub = choice[v][mask];
        let (vi, routes) = &route_lists[v - 1];
        match tables[v - 1][sub] {
            Some((_, usize::MAX)) => {
                sol_routes.push(RoutePath::new(vec![vi.origin_depot(), vi.dest_depot()]));
            }
            Some((_, r)) => sol_routes.push(routes[r].clone()),
            None => unreachable!("dp chose an unservable subset"),
        }
        mask ^= sub;
    }
    sol_routes.reverse();
    Ok(OracleSolution { routes: sol_routes, objective: dp[nv][full] })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{derive_mdarp, random_instance, RandomInstanceParams};

    fn tiny(seed: u64, n: usize) -> Instance {
        random_instance(seed, &RandomInstanceParams { n, ..Default::default() })
    }

    #[test]
    fn single_customer_forced_route() {
        let inst = tiny(3, 1);
        let routes = enumerate_routes(&inst).unwrap();
        assert_eq!(routes.len(), 1);
        assert_eq!(routes[0].stops, vec![0, 1, 2, 3]);
        let sol = brute_force_optimal(&inst).unwrap();
        let want = inst.travel_cost(0, 1) + inst.travel_cost(1, 2) + inst.travel_cost(2, 3);
        assert!((sol.objective - want).abs() < 1e-9);
    }

    #[test]
    fn capacity_one_forbids_concurrent_riders() {
        let mut inst = tiny(5, 2);
        inst.capacity = 1;
        for loc in &mut inst.locations {
            loc.e = 0.0;
            loc.l = inst.max_route_duration;
        }
        inst.ride_limit = 1e6;
        // No enumerated route may carry two customers at once: every pickup
        // must be followed by its own delivery before the next pickup.
        for r in enumerate_routes(&inst).unwrap() {
            let mut load = 0i64;
            for &s in &r.stops {
                load += inst.load_change(s);
                assert!(load <= 1, "route {r} exceeds capacity 1");
            }
        }
        // And the shared-ride route (0,1,2,d1,d2,end) must be absent.
        let shared = RoutePath::new(vec![0, 1, 2, 1 + inst.n, 2 + inst.n, inst.dest_depot()]);
        assert!(check_schedule(&shared, &inst, true).is_err());
        brute_force_optimal(&inst).unwrap();
    }

    #[test]
    fn all_routes_feasible_and_within_limits() {
        for seed in 0..10u64 {
            let inst = tiny(seed, 4);
            for r in enumerate_routes(&inst).unwrap() {
                check_schedule(&r, &inst, true).unwrap();
                assert!(r.pickup_count(&inst) <= inst.pickup_limit);
            }
        }
    }

    #[test]
    fn optimum_invariant_under_relabeling() {
        for seed in 0..5u64 {
            let inst = tiny(seed, 4);
            let base = brute_force_optimal(&inst).unwrap().objective;
            // Swap customers 1 and 2 wholesale (pickups, deliveries).
            let mut swapped = inst.clone();
            swapped.locations.swap(1, 2);
            swapped.locations.swap(1 + inst.n, 2 + inst.n);
            for (k, loc) in swapped.locations.iter_mut().enumerate() {
                loc.id = k;
            }
            swapped.refresh_distances();
            let perm = brute_force_optimal(&swapped).unwrap().objective;
            assert!((base - perm).abs() < 1e-9, "seed {seed}");
        }
    }

    #[test]
    fn solution_partitions_customers() {
        for seed in 0..10u64 {
            let inst = tiny(seed, 5);
            let sol = brute_force_optimal(&inst).unwrap();
            assert!(sol.routes.len() <= inst.num_vehicles);
            let mut covered = CustomerSet::EMPTY;
            for r in &sol.routes {
                let cs = route_customers(r, &inst);
                assert!(covered.iter().all(|c| !cs.contains(c)), "overlap");
                covered = covered.union(cs);
            }
            assert_eq!(covered.len(), inst.n);
        }
    }

    #[test]
    fn oracle_cap_enforced() {
        let inst = tiny(1, 4);
        let mut big = inst.clone();
        big.n = 9; // just to trip the cap check
        assert!(matches!(enumerate_routes(&big), Err(OracleError::TooLarge(9, _))));
    }

    #[test]
    fn mdarp_empty_vehicles_still_drive() {
        let inst = tiny(11, 6);
        let (reduced, cfg) = derive_mdarp(&inst);
        assert_eq!(cfg.drivers.len(), 2);
        let sol = brute_force_optimal_mdarp(&reduced, &cfg).unwrap();
        assert_eq!(sol.routes.len(), 2);
        // Objective at least the two direct driver trips.
        let mut floor = 0.0;
        for v in 0..2 {
            let vi = vehicle_instance(&reduced, &cfg, v);
            floor += vi.travel_cost(vi.origin_depot(), vi.dest_depot());
        }
        assert!(sol.objective >= floor - 1e-9);
    }
}
