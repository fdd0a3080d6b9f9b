//! Fragment enumeration: full fragments, restricted fragments, their
//! extended variants, and the mixed set, plus the dominance filter.
//!
//! A fragment is a partial route path between two load nodes. Full
//! fragments (FF) carry an empty load only at their boundaries; restricted
//! fragments (RF) contain exactly one pickup-to-delivery transition and are
//! generated as substrings of pickups-then-deliveries FFs; extended
//! fragments (EFF/ERF) append one trailing node-arc target; the mixed set
//! splits each FF at pickups preceded by deliveries.

use std::collections::HashSet;
use std::time::Instant;

use crate::customers::CustomerSet;
use crate::instance::Instance;
use crate::scheduling::{check_schedule, route_cost, time_envelope, RoutePath};
use crate::TIME_EPS;

/// A (location, onboard-customer-set) pair: the vertex type of the fragment
/// network. The loadset excludes the customer of the location itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LoadNode {
    pub location: usize,
    pub loadset: CustomerSet,
}

impl LoadNode {
    pub fn new(location: usize, loadset: CustomerSet) -> Self {
        LoadNode { location, loadset }
    }

    pub fn render(&self) -> String {
        format!("{}:{}", self.location, self.loadset.render())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FragmentKind {
    Ff,
    Rf,
    Eff,
    Erf,
}

impl FragmentKind {
    pub fn label(self) -> &'static str {
        match self {
            FragmentKind::Ff => "FF",
            FragmentKind::Rf => "RF",
            FragmentKind::Eff => "EFF",
            FragmentKind::Erf => "ERF",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Fragment {
    pub kind: FragmentKind,
    pub start: LoadNode,
    pub end: LoadNode,
    /// Stop sequence; for extended fragments this includes the trailing
    /// node-arc target as the final stop.
    pub path: RoutePath,
    /// L_f: pickups performed by the fragment itself (trailing target of an
    /// extension is not counted).
    pub pickups: usize,
    /// Sum of arc costs over the whole path, trailing arc included.
    pub cost: f64,
    /// Earliest feasible begin-service at the last stop.
    pub earliest_completion: f64,
    /// Latest feasible begin-service at the first stop.
    pub latest_start: f64,
}

impl Fragment {
    /// Is this an extended fragment (carries its successor junction)?
    pub fn is_extended(&self) -> bool {
        matches!(self.kind, FragmentKind::Eff | FragmentKind::Erf)
    }

    /// Customers served by the fragment (trailing target excluded).
    pub fn customers(&self, inst: &Instance) -> CustomerSet {
        let body = if self.is_extended() {
            &self.path.stops[..self.path.stops.len() - 1]
        } else {
            &self.path.stops[..]
        };
        body.iter()
            .filter(|&&s| inst.is_pickup(s))
            .fold(CustomerSet::EMPTY, |acc, &s| acc.with(s))
    }

    /// Dump line: `<kind> <start> <path> <end> <cost>`.
    pub fn render(&self) -> String {
        format!(
            "{} {} {} {} {:.6}",
            self.kind.label(),
            self.start.render(),
            self.path,
            self.end.render(),
            self.cost
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SetKind {
    Ff,
    Rf,
    Eff,
    Erf,
    Mf,
}

impl SetKind {
    pub fn label(self) -> &'static str {
        match self {
            SetKind::Ff => "FF",
            SetKind::Rf => "RF",
            SetKind::Eff => "EFF",
            SetKind::Erf => "ERF",
            SetKind::Mf => "MF",
        }
    }

    pub fn parse(s: &str) -> Option<SetKind> {
        match s.to_ascii_lowercase().as_str() {
            "ff" => Some(SetKind::Ff),
            "rf" => Some(SetKind::Rf),
            "eff" => Some(SetKind::Eff),
            "erf" => Some(SetKind::Erf),
            "mf" => Some(SetKind::Mf),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FragmentSet {
    pub kind: SetKind,
    pub fragments: Vec<Fragment>,
    pub gen_seconds: f64,
}

impl FragmentSet {
    pub fn len(&self) -> usize {
        self.fragments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fragments.is_empty()
    }

    pub fn dump(&self) -> String {
        let mut s = String::new();
        for f in &self.fragments {
            s.push_str(&f.render());
            s.push('\n');
        }
        s
    }
}

/// Canonical order so generation is byte-identical across runs.
fn finish(kind: SetKind, mut fragments: Vec<Fragment>, started: Instant) -> FragmentSet {
    fragments.sort_by(|a, b| {
        (a.kind, &a.start, &a.end, &a.path).cmp(&(b.kind, &b.start, &b.end, &b.path))
    });
    fragments.dedup_by(|a, b| a.kind == b.kind && a.start == b.start && a.end == b.end && a.path == b.path);
    FragmentSet { kind, fragments, gen_seconds: started.elapsed().as_secs_f64() }
}

fn make_fragment(
    inst: &Instance,
    kind: FragmentKind,
    start: LoadNode,
    end: LoadNode,
    path: RoutePath,
    pickups: usize,
) -> Option<Fragment> {
    let (earliest_completion, latest_start) = time_envelope(&path, inst)?;
    let cost = route_cost(&path, inst);
    Some(Fragment { kind, start, end, path, pickups, cost, earliest_completion, latest_start })
}

/// All full fragments: paths whose load is empty exactly at the boundaries,
/// schedule-feasible, with at most L pickups.
pub fn enumerate_full_fragments(inst: &Instance) -> FragmentSet {
    let started = Instant::now();
    let mut out = Vec::new();
    for first in 1..=inst.n {
        let mut stops = vec![first];
        let mut ff = FfDfs {
            inst,
            onboard: CustomerSet::singleton(first),
            picked: CustomerSet::singleton(first),
            load: inst.load_change(first),
            pickups: 1,
            out: &mut out,
        };
        ff_dfs(&mut ff, &mut stops);
    }
    finish(SetKind::Ff, out, started)
}

struct FfDfs<'a> {
    inst: &'a Instance,
    onboard: CustomerSet,
    picked: CustomerSet,
    load: i64,
    pickups: usize,
    out: &'a mut Vec<Fragment>,
}

fn ff_dfs(st: &mut FfDfs, stops: &mut Vec<usize>) {
    let inst = st.inst;
    if st.onboard.is_empty() {
        // Load hit zero: the FF must end here (empty only at boundaries).
        let path = RoutePath::new(stops.clone());
        if check_schedule(&path, inst, false).is_ok() {
            let start = LoadNode::new(stops[0], CustomerSet::EMPTY);
            let end = LoadNode::new(*stops.last().unwrap(), CustomerSet::EMPTY);
            if let Some(f) =
                make_fragment(inst, FragmentKind::Ff, start, end, path, st.pickups)
            {
                st.out.push(f);
            }
        }
        return;
    }
    for c in 1..=inst.n {
        let next = if st.onboard.contains(c) {
            inst.delivery_of(c)
        } else if !st.picked.contains(c) {
            c
        } else {
            continue;
        };
        if inst.is_pickup(next)
            && (st.pickups + 1 > inst.pickup_limit
                || st.load + inst.load_change(next) > inst.capacity)
        {
            continue;
        }
        stops.push(next);
        // Prefix feasibility prunes: extending an infeasible prefix can't help.
        if check_schedule(&RoutePath::new(stops.clone()), inst, false).is_ok() {
            let was = (st.onboard, st.picked, st.load, st.pickups);
            if inst.is_pickup(next) {
                st.onboard = st.onboard.with(c);
                st.picked = st.picked.with(c);
                st.pickups += 1;
            } else {
                st.onboard = st.onboard.without(c);
            }
            st.load += inst.load_change(next);
            ff_dfs(st, stops);
            (st.onboard, st.picked, st.load, st.pickups) = was;
        }
        stops.pop();
    }
}

/// All restricted fragments, generated as substrings of schedule-feasible
/// pickups-then-deliveries FFs: a substring from a pickup to a delivery
/// becomes an RF whose start loadset is the customers picked up before it
/// and whose end loadset is the customers not yet delivered after it.
pub fn enumerate_restricted_fragments(inst: &Instance) -> FragmentSet {
    let started = Instant::now();
    let mut out = Vec::new();
    let mut seen: HashSet<(LoadNode, LoadNode, Vec<usize>)> = HashSet::new();

    // Enumerate pickup orderings then delivery orderings (DFS), keeping
    // schedule-feasible complete "ppppdddd" paths.
    let mut pickups = Vec::new();
    pd_pickup_dfs(inst, &mut pickups, &mut |pform: &[usize]| {
        let mut deliveries = Vec::new();
        pd_delivery_dfs(inst, pform, &mut deliveries, &mut |dform: &[usize]| {
            emit_substrings(inst, pform, dform, &mut seen, &mut out);
        });
    });
    finish(SetKind::Rf, out, started)
}

/// DFS over pickup prefixes; invokes `sink` on every nonempty prefix whose
/// cumulative load fits (the delivery phase can then be attempted).
fn pd_pickup_dfs(inst: &Instance, pickups: &mut Vec<usize>, sink: &mut dyn FnMut(&[usize])) {
    if !pickups.is_empty() {
        sink(pickups);
    }
    if pickups.len() >= inst.pickup_limit {
        return;
    }
    let load: i64 = pickups.iter().map(|&p| inst.load_change(p)).sum();
    for c in 1..=inst.n {
        if pickups.contains(&c) || load + inst.load_change(c) > inst.capacity {
            continue;
        }
        pickups.push(c);
        // Window prune: the pickup prefix alone must be feasible.
        if check_schedule(&RoutePath::new(pickups.clone()), inst, false).is_ok() {
            pd_pickup_dfs(inst, pickups, sink);
        }
        pickups.pop();
    }
}

/// DFS over delivery orderings for a fixed pickup prefix; invokes `sink` on
/// complete feasible "ppppdddd" paths.
fn pd_delivery_dfs(
    inst: &Instance,
    pickups: &[usize],
    deliveries: &mut Vec<usize>,
    sink: &mut dyn FnMut(&[usize]),
) {
    if deliveries.len() == pickups.len() {
        sink(deliveries);
        return;
    }
    for &c in pickups {
        let d = inst.delivery_of(c);
        if deliveries.contains(&d) {
            continue;
        }
        deliveries.push(d);
        let full: Vec<usize> = pickups.iter().copied().chain(deliveries.iter().copied()).collect();
        if check_schedule(&RoutePath::new(full), inst, false).is_ok() {
            pd_delivery_dfs(inst, pickups, deliveries, sink);
        }
        deliveries.pop();
    }
}

fn emit_substrings(
    inst: &Instance,
    pform: &[usize],
    dform: &[usize],
    seen: &mut HashSet<(LoadNode, LoadNode, Vec<usize>)>,
    out: &mut Vec<Fragment>,
) {
    let k = pform.len();
    let all: CustomerSet = pform.iter().copied().collect();
    for a in 0..k {
        for b in 0..k {
            let sub: Vec<usize> =
                pform[a..].iter().copied().chain(dform[..=b].iter().copied()).collect();
            // Start loadset: picked up before the substring.
            let before: CustomerSet = pform[..a].iter().copied().collect();
            // End loadset: everything picked (here: all of the parent's
            // customers) minus those delivered by position b.
            let delivered: CustomerSet =
                dform[..=b].iter().map(|&d| inst.pickup_of(d)).collect();
            let mut end_set = CustomerSet::EMPTY;
            for c in all.union(before).iter() {
                if !delivered.contains(c) {
                    end_set = end_set.with(c);
                }
            }
            let start = LoadNode::new(sub[0], before);
            let end = LoadNode::new(*sub.last().unwrap(), end_set);
            let key = (start, end, sub.clone());
            if seen.contains(&key) {
                continue;
            }
            let path = RoutePath::new(sub);
            if check_schedule(&path, inst, false).is_err() {
                continue;
            }
            let pickups = k - a;
            if let Some(f) = make_fragment(inst, FragmentKind::Rf, start, end, path, pickups) {
                seen.insert(key);
                out.push(f);
            }
        }
    }
}

/// Extend every base fragment by one trailing node-arc target: a pickup
/// node (kept only if base + pickup + its delivery is schedule-feasible) or
/// the destination depot (only from an empty end loadset).
pub fn extend_fragments(base: &FragmentSet, inst: &Instance) -> FragmentSet {
    assert!(
        matches!(base.kind, SetKind::Ff | SetKind::Rf),
        "only FF/RF sets can be extended"
    );
    let started = Instant::now();
    let kind = match base.kind {
        SetKind::Ff => (SetKind::Eff, FragmentKind::Eff),
        _ => (SetKind::Erf, FragmentKind::Erf),
    };
    let mut out = Vec::new();
    for f in &base.fragments {
        let served = f.customers(inst);
        // Depot extension: vehicle must be empty at the destination depot.
        if f.end.loadset.is_empty() {
            let mut stops = f.path.stops.clone();
            stops.push(inst.dest_depot());
            let path = RoutePath::new(stops);
            if check_schedule(&path, inst, false).is_ok() {
                let end = LoadNode::new(inst.dest_depot(), CustomerSet::EMPTY);
                if let Some(ext) =
                    make_fragment(inst, kind.1, f.start, end, path, f.pickups)
                {
                    out.push(ext);
                }
            }
        }
        for j in 1..=inst.n {
            if served.contains(j) || f.end.loadset.contains(j) || f.start.loadset.contains(j) {
                continue;
            }
            // Probe: fragment + pickup j + its delivery must schedule.
            let mut probe = f.path.stops.clone();
            probe.push(j);
            probe.push(inst.delivery_of(j));
            if check_schedule(&RoutePath::new(probe), inst, false).is_err() {
                continue;
            }
            let mut stops = f.path.stops.clone();
            stops.push(j);
            let path = RoutePath::new(stops);
            let end = LoadNode::new(j, f.end.loadset);
            if let Some(ext) = make_fragment(inst, kind.1, f.start, end, path, f.pickups) {
                out.push(ext);
            }
        }
    }
    finish(kind.0, out, started)
}

/// Mixed set: split every FF at pickups whose predecessor is a delivery
/// into ERF pieces (each ending at the next cut pickup) plus a final RF;
/// indivisible FFs are retained whole.
pub fn build_mixed_set(s_ff: &FragmentSet, inst: &Instance) -> FragmentSet {
    assert!(s_ff.kind == SetKind::Ff, "mixed set is built from the FF set");
    let started = Instant::now();
    let mut out = Vec::new();
    for f in &s_ff.fragments {
        let stops = &f.path.stops;
        let cuts: Vec<usize> = (1..stops.len())
            .filter(|&k| inst.is_pickup(stops[k]) && inst.is_delivery(stops[k - 1]))
            .collect();
        if cuts.is_empty() {
            out.push(f.clone());
            continue;
        }
        let mut bounds = vec![0];
        bounds.extend(&cuts);
        bounds.push(stops.len());
        let mut onboard = CustomerSet::EMPTY;
        let mut pos_loadset = vec![CustomerSet::EMPTY; stops.len()];
        for (k, &s) in stops.iter().enumerate() {
            if inst.is_pickup(s) {
                onboard = onboard.with(s);
            } else {
                onboard = onboard.without(inst.pickup_of(s));
            }
            pos_loadset[k] = onboard;
        }
        for w in 0..bounds.len() - 1 {
            let (a, b) = (bounds[w], bounds[w + 1]);
            let last = w + 2 == bounds.len();
            // ERF pieces include the next cut pickup as trailing target.
            let piece: Vec<usize> =
                if last { stops[a..b].to_vec() } else { stops[a..=b].to_vec() };
            let start_set = if a == 0 {
                CustomerSet::EMPTY
            } else {
                // On board before arriving at the cut pickup = loadset after
                // the preceding delivery.
                pos_loadset[a - 1]
            };
            let body_end = if last { b - 1 } else { b - 1 };
            let end_set = pos_loadset[body_end];
            let start = LoadNode::new(piece[0], start_set);
            let pickups = piece
                .iter()
                .take(if last { piece.len() } else { piece.len() - 1 })
                .filter(|&&s| inst.is_pickup(s))
                .count();
            let path = RoutePath::new(piece.clone());
            let frag = if last {
                make_fragment(
                    inst,
                    FragmentKind::Rf,
                    start,
                    LoadNode::new(*piece.last().unwrap(), end_set),
                    path,
                    pickups,
                )
            } else {
                make_fragment(
                    inst,
                    FragmentKind::Erf,
                    start,
                    LoadNode::new(*piece.last().unwrap(), end_set),
                    path,
                    pickups,
                )
            };
            if let Some(fr) = frag {
                out.push(fr);
            }
        }
    }
    finish(SetKind::Mf, out, started)
}

/// The unique decomposition of a route interior (no depots) into restricted
/// fragment paths: split exactly at every delivery-to-pickup transition.
/// Returns (start node, piece path, end node) triples in route order.
pub fn decompose_into_rf_paths(
    interior: &[usize],
    inst: &Instance,
) -> Vec<(LoadNode, RoutePath, LoadNode)> {
    let mut pieces = Vec::new();
    if interior.is_empty() {
        return pieces;
    }
    let mut onboard = CustomerSet::EMPTY;
    let mut piece_start = 0usize;
    let mut start_set = CustomerSet::EMPTY;
    for k in 0..interior.len() {
        let s = interior[k];
        if inst.is_pickup(s) {
            onboard = onboard.with(s);
        } else {
            onboard = onboard.without(inst.pickup_of(s));
        }
        let next_is_pickup = k + 1 < interior.len() && inst.is_pickup(interior[k + 1]);
        if (inst.is_delivery(s) && next_is_pickup) || k + 1 == interior.len() {
            let path = RoutePath::new(interior[piece_start..=k].to_vec());
            let start = LoadNode::new(interior[piece_start], start_set);
            let end = LoadNode::new(s, onboard);
            pieces.push((start, path, end));
            piece_start = k + 1;
            start_set = onboard;
        }
    }
    pieces
}

/// Dominance filter: f1 eliminates f2 when both share start node, end node
/// and served customer set, and f1 is no worse in cost, earliest completion
/// and latest start (at least one strictly better). Deterministic: ties are
/// broken by lexicographic path order.
pub fn dominance_filter(set: &FragmentSet, inst: &Instance) -> FragmentSet {
    use std::collections::HashMap;
    let started = Instant::now();
    let mut groups: HashMap<(FragmentKind, LoadNode, LoadNode, CustomerSet), Vec<&Fragment>> =
        HashMap::new();
    for f in &set.fragments {
        groups
            .entry((f.kind, f.start, f.end, f.customers(inst)))
            .or_default()
            .push(f);
    }
    let mut kept = Vec::new();
    for (_, group) in groups {
        for f in &group {
            let dominated = group.iter().any(|g| {
                if std::ptr::eq(*g, *f) {
                    return false;
                }
                let no_worse = g.cost <= f.cost + TIME_EPS
                    && g.earliest_completion <= f.earliest_completion + TIME_EPS
                    && g.latest_start >= f.latest_start - TIME_EPS;
                let strict = g.cost < f.cost - TIME_EPS
                    || g.earliest_completion < f.earliest_completion - TIME_EPS
                    || g.latest_start > f.latest_start + TIME_EPS;
                if no_worse && strict {
                    return true;
                }
                // Full tie: keep the lexicographically smaller path.
                no_worse
                    && g.cost >= f.cost - TIME_EPS
                    && g.earliest_completion >= f.earliest_completion - TIME_EPS
                    && g.latest_start <= f.latest_start + TIME_EPS
                    && g.path < f.path
            });
            if !dominated {
                kept.push((*f).clone());
            }
        }
    }
    finish(set.kind, kept, started)
}

/// Generate a fragment set of the requested kind, dominance-filtered.
pub fn generate(inst: &Instance, kind: SetKind, filter: bool) -> FragmentSet {
    let set = match kind {
        SetKind::Ff => enumerate_full_fragments(inst),
        SetKind::Rf => enumerate_restricted_fragments(inst),
        SetKind::Eff => extend_fragments(&enumerate_full_fragments(inst), inst),
        SetKind::Erf => extend_fragments(&enumerate_restricted_fragments(inst), inst),
        SetKind::Mf => build_mixed_set(&enumerate_full_fragments(inst), inst),
    };
    if filter {
        dominance_filter(&set, inst)
    } else {
        set
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{random_instance, Instance, Location, RandomInstanceParams};

    /// Instance with wide-open windows so structure, not timing, decides.
    fn open_instance(n: usize) -> Instance {
        let mut locs = vec![Location {
            id: 0,
            x: 0.0,
            y: 0.0,
            service: 0.0,
            load_change: 0,
            e: 0.0,
            l: 10000.0,
        }];
        for i in 1..=n {
            locs.push(Location {
                id: i,
                x: i as f64,
                y: 1.0,
                service: 1.0,
                load_change: 1,
                e: 0.0,
                l: 10000.0,
            });
        }
        for i in 1..=n {
            locs.push(Location {
                id: n + i,
                x: i as f64,
                y: -1.0,
                service: 1.0,
                load_change: -1,
                e: 0.0,
                l: 10000.0,
            });
        }
        locs.push(Location { id: 2 * n + 1, ..locs[0].clone() });
        Instance::new(locs, 4, 4, n, 10000.0, 10000.0).unwrap()
    }

    #[test]
    fn ff_examples_from_structure() {
        let inst = open_instance(3);
        let ffs = enumerate_full_fragments(&inst);
        let has = |stops: &[usize]| ffs.fragments.iter().any(|f| f.path.stops == stops);
        // (p1,p2,d2,d1) is a single FF; its prefix (p1,p2,d2) is not one.
        assert!(has(&[1, 2, 5, 4]));
        assert!(!has(&[1, 2, 5]));
        // (p1,d1,p2,...) hits empty load mid-path: (p1,d1) must end there.
        assert!(has(&[1, 4]));
        assert!(!has(&[1, 4, 2, 5]));
        for f in &ffs.fragments {
            assert!(f.start.loadset.is_empty() && f.end.loadset.is_empty());
            assert!(f.pickups <= inst.pickup_limit);
        }
    }

    #[test]
    fn rf_substring_example() {
        // From (p1,p2,p3,d1,d2,d3): substring (p3,d1) is the RF
        // (p3,{1,2}) -(p3,d1)- (d1,{2,3}).
        let inst = open_instance(3);
        let rfs = enumerate_restricted_fragments(&inst);
        let n = inst.n;
        let found = rfs.fragments.iter().any(|f| {
            f.path.stops == vec![3, n + 1]
                && f.start.loadset == [1usize, 2].into_iter().collect()
                && f.end.loadset == [2usize, 3].into_iter().collect()
        });
        assert!(found, "expected RF (p3,{{1,2}})-(p3,d1)-(d1,{{2,3}})");
        // Every RF has exactly one pickup->delivery transition.
        for f in &rfs.fragments {
            let t = f
                .path
                .stops
                .windows(2)
                .filter(|w| inst.is_pickup(w[0]) && inst.is_delivery(w[1]))
                .count();
            assert_eq!(t, 1, "{}", f.render());
        }
    }

    #[test]
    fn rf_substring_count_for_one_parent() {
        // A 3-pickup parent contributes k*k = 9 substrings.
        let inst = open_instance(3);
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        emit_substrings(&inst, &[1, 2, 3], &[4, 5, 6], &mut seen, &mut out);
        assert_eq!(out.len(), 9);
    }

    #[test]
    fn extension_examples() {
        let inst = open_instance(3);
        let base = enumerate_full_fragments(&inst);
        let eff = extend_fragments(&base, &inst);
        // Depot extension of (p1,d1).
        assert!(eff
            .fragments
            .iter()
            .any(|f| f.path.stops == vec![1, 4, inst.dest_depot()]));
        // Pickup extension of (p1,d1) by p2, retained because (p1,d1,p2,d2)
        // is feasible here.
        assert!(eff.fragments.iter().any(|f| f.path.stops == vec![1, 4, 2]));
        assert!(eff.len() >= base.len());
        // Extended pickup count excludes the trailing target.
        for f in &eff.fragments {
            if let Some(&lastp) = f.path.stops.last() {
                if inst.is_pickup(lastp) {
                    assert!(!f.customers(&inst).contains(lastp));
                }
            }
        }
    }

    #[test]
    fn pickup_extension_requires_probe_feasibility() {
        // Make customer 2's delivery unreachable after serving customer 1.
        let mut inst = open_instance(2);
        inst.locations[2 + inst.n].l = 1.0; // d2 closes immediately
        inst.refresh_distances();
        let base = enumerate_full_fragments(&inst);
        let eff = extend_fragments(&base, &inst);
        assert!(!eff.fragments.iter().any(|f| f.path.stops == vec![1, 1 + inst.n, 2]));
    }

    #[test]
    fn mixed_set_split_example() {
        // FF (p1,p2,d2,p3,d3,p4,d4,d1) splits into (p1,p2,d2,p3),
        // (p3,d3,p4), (p4,d4,d1); the cut pickups carry loadset {1}.
        let inst = open_instance(4);
        let ffs = enumerate_full_fragments(&inst);
        let n = inst.n;
        let target = [1, 2, n + 2, 3, n + 3, 4, n + 4, n + 1];
        assert!(ffs.fragments.iter().any(|f| f.path.stops == target));
        let mf = build_mixed_set(&ffs, &inst);
        let l1: CustomerSet = [1usize].into_iter().collect();
        let p1 = mf.fragments.iter().find(|f| f.path.stops == vec![1, 2, n + 2, 3]).unwrap();
        assert_eq!(p1.kind, FragmentKind::Erf);
        assert_eq!(p1.end, LoadNode::new(3, l1));
        assert_eq!(p1.pickups, 2);
        let p2 = mf.fragments.iter().find(|f| f.path.stops == vec![3, n + 3, 4]).unwrap();
        assert_eq!(p2.start, LoadNode::new(3, l1));
        assert_eq!(p2.end, LoadNode::new(4, l1));
        let p3 = mf.fragments.iter().find(|f| f.path.stops == vec![4, n + 4, n + 1]).unwrap();
        assert_eq!(p3.kind, FragmentKind::Rf);
        assert_eq!(p3.start, LoadNode::new(4, l1));
        assert!(p3.end.loadset.is_empty());
        // Indivisible FFs are retained whole.
        assert!(mf.fragments.iter().any(|f| f.kind == FragmentKind::Ff && f.path.stops == vec![1, n + 1]));
    }

    #[test]
    fn dominance_removes_strictly_worse() {
        let inst = open_instance(2);
        let rfs = enumerate_restricted_fragments(&inst);
        let filtered = dominance_filter(&rfs, &inst);
        assert!(filtered.len() <= rfs.len());
        // Same-key groups in the output contain no dominated pair.
        for f in &filtered.fragments {
            for g in &filtered.fragments {
                if f.path == g.path {
                    continue;
                }
                if f.start == g.start && f.end == g.end && f.customers(&inst) == g.customers(&inst) {
                    let dominated = g.cost <= f.cost - TIME_EPS
                        && g.earliest_completion <= f.earliest_completion
                        && g.latest_start >= f.latest_start;
                    assert!(!dominated);
                }
            }
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let inst = random_instance(9, &RandomInstanceParams { n: 4, ..Default::default() });
        for kind in [SetKind::Ff, SetKind::Rf, SetKind::Eff, SetKind::Erf, SetKind::Mf] {
            let a = generate(&inst, kind, true).dump();
            let b = generate(&inst, kind, true).dump();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn pickup_filter_holds_everywhere() {
        let inst = random_instance(2, &RandomInstanceParams { n: 5, pickup_limit: 2, ..Default::default() });
        for kind in [SetKind::Ff, SetKind::Rf, SetKind::Eff, SetKind::Erf, SetKind::Mf] {
            for f in generate(&inst, kind, false).fragments {
                assert!(f.pickups <= inst.pickup_limit, "{}", f.render());
            }
        }
    }
}
