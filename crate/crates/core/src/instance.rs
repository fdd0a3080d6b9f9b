//! Problem data: benchmark instance parsing and the DARP-LPT / MDARP-LPT
//! configurations derived from it.
//!
//! Location indexing follows the benchmark convention: `0` is the origin
//! depot, `1..=n` the pickups, `n+1..=2n` the deliveries and `2n+1` the
//! destination depot.

use thiserror::Error;

use crate::TIME_EPS;

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("instance invariant violated: {0}")]
    Invariant(String),
}

/// One stop in the instance file.
#[derive(Debug, Clone, PartialEq)]
pub struct Location {
    pub id: usize,
    pub x: f64,
    pub y: f64,
    /// Service duration spent at the location.
    pub service: f64,
    /// Load change q_i: positive at pickups, negative at deliveries, zero at depots.
    pub load_change: i64,
    /// Earliest service start.
    pub e: f64,
    /// Latest service start.
    pub l: f64,
}

/// A dial-a-ride instance. Immutable after construction; travel times and
/// costs are both the Euclidean distance between coordinates.
#[derive(Debug, Clone)]
pub struct Instance {
    pub n: usize,
    pub locations: Vec<Location>,
    /// Vehicle capacity Q in load units.
    pub capacity: i64,
    /// Maximum number of pickups per trip, L.
    pub pickup_limit: usize,
    pub num_vehicles: usize,
    /// Maximum route duration R_0.
    pub max_route_duration: f64,
    /// Per-customer maximum ride time R_i (uniform in the benchmarks).
    pub ride_limit: f64,
    dist: Vec<f64>,
}

impl Instance {
    pub fn new(
        locations: Vec<Location>,
        capacity: i64,
        pickup_limit: usize,
        num_vehicles: usize,
        max_route_duration: f64,
        ride_limit: f64,
    ) -> Result<Self, InstanceError> {
        if locations.len() < 4 || locations.len() % 2 != 0 {
            return Err(InstanceError::Invariant(format!(
                "expected 2n+2 locations, got {}",
                locations.len()
            )));
        }
        let n = locations.len() / 2 - 1;
        let dist = euclidean_matrix(&locations);
        let inst = Instance {
            n,
            locations,
            capacity,
            pickup_limit,
            num_vehicles,
            max_route_duration,
            ride_limit,
            dist,
        };
        inst.validate()?;
        Ok(inst)
    }

    fn validate(&self) -> Result<(), InstanceError> {
        let n = self.n;
        let err = |msg: String| Err(InstanceError::Invariant(msg));
        if self.locations[0].load_change != 0 || self.locations[2 * n + 1].load_change != 0 {
            return err("depot load change must be zero".into());
        }
        for i in 1..=n {
            let q = self.locations[i].load_change;
            if q <= 0 {
                return err(format!("pickup {i} must have positive load"));
            }
            if self.locations[n + i].load_change != -q {
                return err(format!(
                    "delivery {} load must be the negation of pickup {i}",
                    n + i
                ));
            }
        }
        for loc in &self.locations {
            if loc.e > loc.l + TIME_EPS {
                return err(format!("location {}: e > l", loc.id));
            }
        }
        if self.pickup_limit < 1 {
            return err("pickup limit must be at least 1".into());
        }
        let max_q = (1..=n).map(|i| self.locations[i].load_change).max().unwrap();
        if self.capacity < max_q {
            return err("capacity smaller than largest customer load".into());
        }
        if self.num_vehicles < n.div_ceil(self.pickup_limit) {
            return err(format!(
                "{} vehicles cannot serve {n} customers with at most {} pickups each",
                self.num_vehicles, self.pickup_limit
            ));
        }
        Ok(())
    }

    pub fn num_locations(&self) -> usize {
        2 * self.n + 2
    }

    pub fn origin_depot(&self) -> usize {
        0
    }

    pub fn dest_depot(&self) -> usize {
        2 * self.n + 1
    }

    pub fn is_pickup(&self, i: usize) -> bool {
        i >= 1 && i <= self.n
    }

    pub fn is_delivery(&self, i: usize) -> bool {
        i > self.n && i <= 2 * self.n
    }

    /// Delivery location of pickup `i`.
    pub fn delivery_of(&self, i: usize) -> usize {
        debug_assert!(self.is_pickup(i));
        i + self.n
    }

    /// Pickup location of delivery `i`.
    pub fn pickup_of(&self, i: usize) -> usize {
        debug_assert!(self.is_delivery(i));
        i - self.n
    }

    /// Customer index (1..=n) served at location `i`, if any.
    pub fn customer_of(&self, i: usize) -> Option<usize> {
        if self.is_pickup(i) {
            Some(i)
        } else if self.is_delivery(i) {
            Some(i - self.n)
        } else {
            None
        }
    }

    pub fn load_change(&self, i: usize) -> i64 {
        self.locations[i].load_change
    }

    pub fn travel_time(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.num_locations() + j]
    }

    pub fn travel_cost(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.num_locations() + j]
    }

    /// Rebuild the distance matrix after editing location coordinates.
    pub(crate) fn refresh_distances(&mut self) {
        self.dist = euclidean_matrix(&self.locations);
    }
}

fn euclidean_matrix(locations: &[Location]) -> Vec<f64> {
    let m = locations.len();
    let mut dist = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            let dx = locations[i].x - locations[j].x;
            let dy = locations[i].y - locations[j].y;
            dist[i * m + j] = (dx * dx + dy * dy).sqrt();
        }
    }
    dist
}

/// Parse a benchmark instance file.
///
/// Line 1 is `<vehicles> <2n> <R0> <Q> <ride_limit>`, followed by `2n+2`
/// node lines `<id> <x> <y> <service> <load> <e> <l>` ordered origin depot,
/// pickups, deliveries, destination depot. Files that omit the final
/// destination-depot line get a copy of the origin depot instead.
pub fn parse_instance(text: &str) -> Result<Instance, InstanceError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());

    let (header_no, header) = lines
        .next()
        .ok_or_else(|| InstanceError::Parse { line: 0, msg: "empty file".into() })?;
    let head: Vec<f64> = parse_fields(header, header_no, 5)?;
    let num_vehicles = head[0] as usize;
    let node_count = head[1] as usize;
    if node_count == 0 || node_count % 2 != 0 {
        return Err(InstanceError::Parse {
            line: header_no,
            msg: format!("customer node count {node_count} is not an even positive number"),
        });
    }
    let n = node_count / 2;
    let max_route_duration = head[2];
    let capacity = head[3] as i64;
    let ride_limit = head[4];

    let mut locations = Vec::with_capacity(2 * n + 2);
    for (line_no, line) in lines {
        let f: Vec<f64> = parse_fields(line, line_no, 7)?;
        let loc = Location {
            id: f[0] as usize,
            x: f[1],
            y: f[2],
            service: f[3],
            load_change: f[4] as i64,
            e: f[5],
            l: f[6],
        };
        if loc.id != locations.len() {
            return Err(InstanceError::Parse {
                line: line_no,
                msg: format!("expected node id {}, found {}", locations.len(), loc.id),
            });
        }
        if loc.e > loc.l + TIME_EPS {
            return Err(InstanceError::Parse {
                line: line_no,
                msg: format!("node {}: time window ({}, {}) is inverted", loc.id, loc.e, loc.l),
            });
        }
        locations.push(loc);
    }

    if locations.len() == 2 * n + 1 {
        // Destination depot omitted: mirror the origin depot.
        let mut dest = locations[0].clone();
        dest.id = 2 * n + 1;
        locations.push(dest);
    }
    if locations.len() != 2 * n + 2 {
        return Err(InstanceError::Parse {
            line: 0,
            msg: format!("expected {} node lines, found {}", 2 * n + 2, locations.len()),
        });
    }
    for i in 1..=n {
        if locations[i].load_change != -locations[n + i].load_change {
            return Err(InstanceError::Parse {
                line: n + i + 2,
                msg: format!("delivery {} load does not match pickup {}", n + i, i),
            });
        }
    }

    // Pickup limit defaults to the capacity until configured explicitly.
    let pickup_limit = capacity.max(1) as usize;
    Instance::new(
        locations,
        capacity,
        pickup_limit,
        num_vehicles.max(n.div_ceil(pickup_limit)),
        max_route_duration,
        ride_limit,
    )
}

fn parse_fields(line: &str, line_no: usize, want: usize) -> Result<Vec<f64>, InstanceError> {
    let fields: Result<Vec<f64>, _> = line.split_whitespace().map(str::parse::<f64>).collect();
    match fields {
        Ok(f) if f.len() == want => Ok(f),
        Ok(f) => Err(InstanceError::Parse {
            line: line_no,
            msg: format!("expected {want} fields, found {}", f.len()),
        }),
        Err(e) => Err(InstanceError::Parse { line: line_no, msg: e.to_string() }),
    }
}

/// Install a pickup limit `L >= 2` and the experimental fleet size
/// `|V| = ceil(n / (L - 1))`.
pub fn configure_darplpt(inst: &Instance, pickup_limit: usize) -> Instance {
    assert!(pickup_limit >= 2, "pickup limit must be at least 2");
    let mut out = inst.clone();
    out.pickup_limit = pickup_limit;
    out.num_vehicles = inst.n.div_ceil(pickup_limit - 1);
    out
}

/// Minimum number of vehicles that must be used: ceil(n / L). Defines the
/// fixed vehicle set V_f used for symmetry reduction.
pub fn min_fixed_vehicles(inst: &Instance) -> usize {
    inst.n.div_ceil(inst.pickup_limit)
}

/// A vehicle in the multi-depot variant: its own origin and destination
/// location, derived from a designated driver's pickup/delivery pair.
#[derive(Debug, Clone)]
pub struct Driver {
    pub origin: Location,
    pub dest: Location,
}

/// Multi-depot configuration: one driver per vehicle plus the customer
/// indices (of the source instance) that remain as passengers.
#[derive(Debug, Clone)]
pub struct MdarpConfig {
    pub drivers: Vec<Driver>,
    pub passengers: Vec<usize>,
}

/// Derive an MDARP-LPT configuration: the first ceil(n/3) customers become
/// drivers (their pickup/delivery locations become vehicle origins and
/// destinations, with earliest departure reset to 0), the rest stay as
/// passengers with unit demand and vehicle capacity 4.
pub fn derive_mdarp(inst: &Instance) -> (Instance, MdarpConfig) {
    let num_drivers = inst.n.div_ceil(3);
    let mut drivers = Vec::with_capacity(num_drivers);
    for i in 1..=num_drivers {
        let mut origin = inst.locations[i].clone();
        origin.e = 0.0;
        origin.load_change = 0;
        let mut dest = inst.locations[inst.delivery_of(i)].clone();
        dest.load_change = 0;
        drivers.push(Driver { origin, dest });
    }
    let passengers: Vec<usize> = (num_drivers + 1..=inst.n).collect();

    let np = passengers.len();
    let mut locations = Vec::with_capacity(2 * np + 2);
    let mut depot = inst.locations[0].clone();
    depot.id = 0;
    locations.push(depot);
    for (k, &c) in passengers.iter().enumerate() {
        let mut p = inst.locations[c].clone();
        p.id = k + 1;
        p.load_change = 1;
        locations.push(p);
    }
    for (k, &c) in passengers.iter().enumerate() {
        let mut d = inst.locations[inst.delivery_of(c)].clone();
        d.id = np + k + 1;
        d.load_change = -1;
        locations.push(d);
    }
    let mut dest = inst.locations[inst.dest_depot()].clone();
    dest.id = 2 * np + 1;
    locations.push(dest);

    let reduced = Instance::new(
        locations,
        4,
        inst.pickup_limit,
        num_drivers,
        inst.max_route_duration,
        inst.ride_limit,
    )
    .expect("derived MDARP instance must be valid");
    (reduced, MdarpConfig { drivers, passengers })
}

/// The single-vehicle instance seen by vehicle `v` of an MDARP
/// configuration: the passenger instance with the depot slots replaced by
/// the driver's origin and destination.
pub fn vehicle_instance(reduced: &Instance, cfg: &MdarpConfig, v: usize) -> Instance {
    let driver = &cfg.drivers[v];
    let mut out = reduced.clone();
    out.locations[0] = Location { id: 0, ..driver.origin.clone() };
    let dest_id = out.dest_depot();
    out.locations[dest_id] = Location { id: dest_id, ..driver.dest.clone() };
    out.num_vehicles = 1;
    out.refresh_distances();
    out
}

/// Parameters for [`random_instance`]. Defaults give small, mostly feasible
/// instances suitable for oracle-backed equivalence tests.
#[derive(Debug, Clone)]
pub struct RandomInstanceParams {
    pub n: usize,
    pub pickup_limit: usize,
    /// Coordinate half-width; locations are uniform in [-w, w]^2.
    pub coord_width: f64,
    pub service: f64,
    pub window_width: (f64, f64),
    /// Slack added on top of the direct travel time to form the ride limit.
    pub ride_slack: (f64, f64),
    pub capacity: i64,
    pub max_load: i64,
    pub horizon: f64,
}

impl Default for RandomInstanceParams {
    fn default() -> Self {
        RandomInstanceParams {
            n: 4,
            pickup_limit: 3,
            coord_width: 10.0,
            service: 3.0,
            window_width: (20.0, 60.0),
            ride_slack: (10.0, 40.0),
            capacity: 3,
            max_load: 1,
            horizon: 600.0,
        }
    }
}

/// Generate a random instance with feasible single-customer routes by
/// construction. Deterministic in the seed.
pub fn random_instance(seed: u64, params: &RandomInstanceParams) -> Instance {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let n = params.n;
    let w = params.coord_width;
    let horizon = params.horizon;

    let depot = Location {
        id: 0,
        x: 0.0,
        y: 0.0,
        service: 0.0,
        load_change: 0,
        e: 0.0,
        l: horizon,
    };
    let mut pickups = Vec::new();
    let mut deliveries = Vec::new();
    for i in 1..=n {
        let (px, py) = (rng.gen_range(-w..w), rng.gen_range(-w..w));
        let (dx, dy) = (rng.gen_range(-w..w), rng.gen_range(-w..w));
        let direct = ((px - dx).powi(2) + (py - dy).powi(2)).sqrt();
        let from_depot = (px * px + py * py).sqrt();
        let load = rng.gen_range(1..=params.max_load);
        // Anchor the pickup window late enough to be reachable from the depot.
        let anchor = rng.gen_range(from_depot..horizon * 0.5);
        let width = rng.gen_range(params.window_width.0..params.window_width.1);
        pickups.push(Location {
            id: i,
            x: px,
            y: py,
            service: params.service,
            load_change: load,
            e: anchor,
            l: anchor + width,
        });
        let d_anchor = anchor + params.service + direct;
        let d_width = rng.gen_range(params.window_width.0..params.window_width.1);
        deliveries.push(Location {
            id: n + i,
            x: dx,
            y: dy,
            service: params.service,
            load_change: -load,
            e: d_anchor,
            l: d_anchor + d_width,
        });
    }
    let mut locations = vec![depot.clone()];
    locations.extend(pickups);
    locations.extend(deliveries);
    locations.push(Location { id: 2 * n + 1, ..depot });

    let ride_slack = rng.gen_range(params.ride_slack.0..params.ride_slack.1);
    let max_direct = (1..=n)
        .map(|i| {
            let p = &locations[i];
            let d = &locations[n + i];
            ((p.x - d.x).powi(2) + (p.y - d.y).powi(2)).sqrt()
        })
        .fold(0.0, f64::max);

    let inst = Instance::new(
        locations,
        params.capacity,
        params.pickup_limit,
        n.div_ceil(params.pickup_limit.saturating_sub(1).max(1)),
        horizon,
        max_direct + ride_slack,
    )
    .expect("generated instance must be valid");
    inst
}
