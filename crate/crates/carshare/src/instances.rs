//! Problem instances: cars, requests, allocations, the worst-case fixtures,
//! seeded random generation, and JSON file I/O.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metric::{DistanceMatrix, EdgeGraph, LocationId, MetricError, Time};

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("{requests} requests cannot be split over {cars} cars at {capacity} per car")]
    CountMismatch { requests: usize, cars: usize, capacity: usize },
    #[error("location {id} out of range, matrix has {size} locations")]
    LocationOutOfRange { id: usize, size: usize },
    #[error("car {car} has nonpositive speed {speed}")]
    NonpositiveSpeed { car: usize, speed: f64 },
    #[error("distance d[{x}][{y}] = {value} is negative")]
    NegativeDistance { x: usize, y: usize, value: f64 },
    #[error("metric axioms violated ({count} violations, first: {first})")]
    InvalidMetric { count: usize, first: String },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),
}

/// A ride request: pick up at `pickup`, drop off at `dropoff`. The two may
/// coincide (the s=t special case).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Request {
    pub pickup: LocationId,
    pub dropoff: LocationId,
}

impl Request {
    pub fn new(pickup: LocationId, dropoff: LocationId) -> Self {
        Self { pickup, dropoff }
    }

    /// An s=t request stationed at one location.
    pub fn at(location: LocationId) -> Self {
        Self { pickup: location, dropoff: location }
    }
}

/// A car with a start location and a positive speed (default 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Car {
    pub location: LocationId,
    pub speed: f64,
}

impl Car {
    pub fn at(location: LocationId) -> Self {
        Self { location, speed: 1.0 }
    }

    pub fn with_speed(location: LocationId, speed: f64) -> Self {
        Self { location, speed }
    }
}

/// One pickup or dropoff stop in a service order; the payload is the request
/// index within the instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Visit {
    Pickup(usize),
    Dropoff(usize),
}

/// A solution: request groups per car, the realized service order per car,
/// and the objective value those orders achieve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    /// Request indices served by each car, indexed by car.
    pub groups: Vec<Vec<usize>>,
    /// Interleaved pickup/dropoff order actually driven, indexed by car.
    pub orders: Vec<Vec<Visit>>,
    /// Objective value recomputed from the orders (sum or latency).
    pub objective: Time,
}

/// A complete problem: metric, cars, requests, and the per-car capacity.
/// `|requests| = capacity * |cars|` always holds; the metric passes
/// validation unless the instance is flagged padded.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    metric: DistanceMatrix,
    cars: Vec<Car>,
    requests: Vec<Request>,
    capacity: usize,
    padded: bool,
}

impl Instance {
    /// Standard two-requests-per-car instance; validates the metric eagerly.
    pub fn new(
        metric: DistanceMatrix,
        cars: Vec<Car>,
        requests: Vec<Request>,
    ) -> Result<Self, InstanceError> {
        Self::with_flags(metric, cars, requests, 2, false)
    }

    pub fn with_capacity(
        metric: DistanceMatrix,
        cars: Vec<Car>,
        requests: Vec<Request>,
        capacity: usize,
    ) -> Result<Self, InstanceError> {
        Self::with_flags(metric, cars, requests, capacity, false)
    }

    /// An instance whose request count does not (yet) fill the cars; only
    /// [`crate::solvers::pad_instance`] restores the balance invariant, and
    /// the solvers refuse unbalanced inputs. As an intermediate state it
    /// skips metric-axiom validation (it may view a padded matrix), though
    /// negative distances are still rejected.
    pub fn unbalanced(
        metric: DistanceMatrix,
        cars: Vec<Car>,
        requests: Vec<Request>,
    ) -> Result<Self, InstanceError> {
        Self::build(metric, cars, requests, 2, false, true)
    }

    /// Full constructor. Padded instances skip metric-axiom validation
    /// (padding intentionally breaks the triangle inequality) but negative
    /// distances are rejected unconditionally.
    pub fn with_flags(
        metric: DistanceMatrix,
        cars: Vec<Car>,
        requests: Vec<Request>,
        capacity: usize,
        padded: bool,
    ) -> Result<Self, InstanceError> {
        Self::build(metric, cars, requests, capacity, padded, false)
    }

    fn build(
        metric: DistanceMatrix,
        cars: Vec<Car>,
        requests: Vec<Request>,
        capacity: usize,
        padded: bool,
        allow_unbalanced: bool,
    ) -> Result<Self, InstanceError> {
        if capacity == 0 {
            return Err(InstanceError::InvalidParameter("capacity must be positive".into()));
        }
        if !allow_unbalanced && requests.len() != capacity * cars.len() {
            return Err(InstanceError::CountMismatch {
                requests: requests.len(),
                cars: cars.len(),
                capacity,
            });
        }
        let size = metric.size();
        for car in &cars {
            if car.location >= size {
                return Err(InstanceError::LocationOutOfRange { id: car.location, size });
            }
        }
        for (k, car) in cars.iter().enumerate() {
            if !car.speed.is_finite() || car.speed <= 0.0 {
                return Err(InstanceError::NonpositiveSpeed { car: k, speed: car.speed });
            }
        }
        for req in &requests {
            for id in [req.pickup, req.dropoff] {
                if id >= size {
                    return Err(InstanceError::LocationOutOfRange { id, size });
                }
            }
        }
        for x in 0..size {
            for y in 0..size {
                let value = metric.get(x, y);
                if value < 0.0 {
                    return Err(InstanceError::NegativeDistance { x, y, value });
                }
            }
        }
        if !padded && !allow_unbalanced {
            let report = metric.validate();
            if !report.is_valid() {
                return Err(InstanceError::InvalidMetric {
                    count: report.violations.len(),
                    first: report.violations[0].to_string(),
                });
            }
        }
        Ok(Self { metric, cars, requests, capacity, padded })
    }

    pub fn metric(&self) -> &DistanceMatrix {
        &self.metric
    }

    pub fn cars(&self) -> &[Car] {
        &self.cars
    }

    pub fn requests(&self) -> &[Request] {
        &self.requests
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn padded(&self) -> bool {
        self.padded
    }

    pub fn num_cars(&self) -> usize {
        self.cars.len()
    }

    pub fn num_requests(&self) -> usize {
        self.requests.len()
    }

    /// True when every request's pickup coincides with its dropoff.
    pub fn is_pickup_equals_dropoff(&self) -> bool {
        self.requests.iter().all(|r| r.pickup == r.dropoff)
    }

    /// True when the requests exactly fill the cars at this capacity.
    pub fn is_balanced(&self) -> bool {
        self.requests.len() == self.capacity * self.cars.len()
    }

    pub fn has_unit_speeds(&self) -> bool {
        self.cars.iter().all(|c| c.speed == 1.0)
    }

    /// Stable short digest of the serialized instance.
    pub fn digest(&self) -> String {
        let json = self.to_json().expect("instance serializes");
        format!("{:016x}", fnv1a64(json.as_bytes()))
    }

    pub fn to_json(&self) -> Result<String, InstanceError> {
        let doc = InstanceDoc::from(self);
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self, InstanceError> {
        let doc: InstanceDoc = serde_json::from_str(text)?;
        doc.into_instance()
    }

    pub fn save(&self, path: &Path) -> Result<(), InstanceError> {
        fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, InstanceError> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

/// Reads just the distance matrix of an instance file, without enforcing
/// any axioms, so a metric check can report on files that would not load.
pub fn load_metric(path: &Path) -> Result<DistanceMatrix, InstanceError> {
    let doc: InstanceDoc = serde_json::from_str(&fs::read_to_string(path)?)?;
    Ok(DistanceMatrix::from_rows(doc.distances)?)
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

#[derive(Serialize, Deserialize)]
struct CarDoc {
    location: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    speed: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct RequestDoc {
    pickup: usize,
    dropoff: usize,
}

#[derive(Serialize, Deserialize)]
struct InstanceDoc {
    locations: usize,
    distances: Vec<Vec<f64>>,
    cars: Vec<CarDoc>,
    requests: Vec<RequestDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    capacity: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    padded: Option<bool>,
}

impl From<&Instance> for InstanceDoc {
    fn from(inst: &Instance) -> Self {
        Self {
            locations: inst.metric.size(),
            distances: inst.metric.rows(),
            cars: inst
                .cars
                .iter()
                .map(|c| CarDoc {
                    location: c.location,
                    speed: if c.speed == 1.0 { None } else { Some(c.speed) },
                })
                .collect(),
            requests: inst
                .requests
                .iter()
                .map(|r| RequestDoc { pickup: r.pickup, dropoff: r.dropoff })
                .collect(),
            capacity: if inst.capacity == 2 { None } else { Some(inst.capacity) },
            padded: if inst.padded { Some(true) } else { None },
        }
    }
}

impl InstanceDoc {
    fn into_instance(self) -> Result<Instance, InstanceError> {
        if self.distances.len() != self.locations {
            return Err(InstanceError::InvalidParameter(format!(
                "declared {} locations but distance matrix has {} rows",
                self.locations,
                self.distances.len()
            )));
        }
        let metric = DistanceMatrix::from_rows(self.distances)?;
        let cars = self
            .cars
            .into_iter()
            .map(|c| Car { location: c.location, speed: c.speed.unwrap_or(1.0) })
            .collect();
        let requests = self
            .requests
            .into_iter()
            .map(|r| Request { pickup: r.pickup, dropoff: r.dropoff })
            .collect();
        Instance::with_flags(
            metric,
            cars,
            requests,
            self.capacity.unwrap_or(2),
            self.padded.unwrap_or(false),
        )
    }
}

/// Whether random requests get distinct pickup/dropoff points or coincide.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RequestMode {
    General,
    PickupEqualsDropoff,
}

/// Deterministic random instance: locations are integer grid points in a
/// 100x100 square, distances are rounded Euclidean lengths repaired into a
/// metric by shortest-path closure, so all arithmetic stays exact.
pub fn random_instance(
    n: usize,
    capacity: usize,
    mode: RequestMode,
    seed: u64,
) -> Result<Instance, InstanceError> {
    if n < 1 {
        return Err(InstanceError::InvalidParameter("need at least one car".into()));
    }
    if capacity < 2 {
        return Err(InstanceError::InvalidParameter("capacity must be at least 2".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let num_requests = capacity * n;
    let endpoints_per_request = match mode {
        RequestMode::General => 2,
        RequestMode::PickupEqualsDropoff => 1,
    };
    let num_points = n + num_requests * endpoints_per_request;
    let points: Vec<(i64, i64)> =
        (0..num_points).map(|_| (rng.random_range(0..=100), rng.random_range(0..=100))).collect();

    let mut rows = vec![vec![0.0; num_points]; num_points];
    for x in 0..num_points {
        for y in (x + 1)..num_points {
            let dx = (points[x].0 - points[y].0) as f64;
            let dy = (points[x].1 - points[y].1) as f64;
            let dist = (dx * dx + dy * dy).sqrt().round();
            rows[x][y] = dist;
            rows[y][x] = dist;
        }
    }
    let mut metric = DistanceMatrix::from_rows(rows)?;
    metric.close();

    let cars = (0..n).map(Car::at).collect();
    let requests = (0..num_requests)
        .map(|i| match mode {
            RequestMode::General => Request::new(n + 2 * i, n + 2 * i + 1),
            RequestMode::PickupEqualsDropoff => Request::at(n + i),
        })
        .collect();
    Instance::with_capacity(metric, cars, requests, capacity)
}

/// Two cars and four requests on three unit-distance locations; the optimum
/// costs 2 while adversarial tie-breaking drives every heuristic to 4.
pub fn fixture_fig1() -> Instance {
    let metric = DistanceMatrix::uniform(3, 1.0);
    let cars = vec![Car::at(0), Car::at(0)];
    let requests = vec![
        Request::new(0, 1), // r1: picked up with the cars, dropped at B
        Request::new(0, 2), // r2: dropped at C
        Request::at(1),     // r3: stationed at B
        Request::at(2),     // r4: stationed at C
    ];
    Instance::new(metric, cars, requests).expect("fixture is well formed")
}

// Locations of the two-triangle fixtures: P=0, Q=1, R=2 on top and
// S=3, U=4, T=5 on the bottom; unconnected pairs resolve to distance 5.
fn two_triangle_instance(top_edge: Time, bottom_edge: Time) -> Instance {
    let graph = EdgeGraph::new(
        6,
        vec![(0, 1, top_edge), (1, 2, top_edge), (3, 4, bottom_edge), (4, 5, bottom_edge)],
        5.0,
    )
    .expect("fixture graph is well formed");
    let metric = graph.metric_closure();
    let cars = vec![Car::at(0), Car::at(2), Car::at(4), Car::at(4)];
    let requests = vec![
        Request::at(1), // r1, r2 share Q
        Request::at(1),
        Request::at(0), // r3 with car k1
        Request::at(2), // r4 with car k2
        Request::at(3), // r5, r6 share S
        Request::at(3),
        Request::at(5), // r7, r8 share T
        Request::at(5),
    ];
    Instance::new(metric, cars, requests).expect("fixture is well formed")
}

/// Four cars and eight s=t requests on two triangles (top edges 4, bottom
/// edges 1); optimum 10, adversarial heuristics 14.
pub fn fixture_fig2() -> Instance {
    two_triangle_instance(4.0, 1.0)
}

/// Same topology with top edges 2: latency optimum 8, adversarial 12.
pub fn fixture_fig3() -> Instance {
    two_triangle_instance(2.0, 1.0)
}

fn triangle_top_instance(edge: Time) -> Instance {
    let graph = EdgeGraph::new(3, vec![(0, 1, edge), (1, 2, edge)], 5.0)
        .expect("fixture graph is well formed");
    let metric = graph.metric_closure();
    let cars = vec![Car::at(0), Car::at(2)];
    let requests = vec![Request::at(1), Request::at(1), Request::at(0), Request::at(2)];
    Instance::new(metric, cars, requests).expect("fixture is well formed")
}

fn triangle_bottom_instance(edge: Time) -> Instance {
    let graph = EdgeGraph::new(3, vec![(0, 1, edge), (1, 2, edge)], 5.0)
        .expect("fixture graph is well formed");
    let metric = graph.metric_closure();
    let cars = vec![Car::at(1), Car::at(1)];
    let requests = vec![Request::at(0), Request::at(0), Request::at(2), Request::at(2)];
    Instance::new(metric, cars, requests).expect("fixture is well formed")
}

/// Top triangle of the sum fixture alone: tight for match-and-assign.
pub fn fixture_fig2_top() -> Instance {
    triangle_top_instance(4.0)
}

/// Bottom triangle of the sum fixture alone: tight for the transportation
/// algorithm at ratio 3.
pub fn fixture_fig2_bottom() -> Instance {
    triangle_bottom_instance(1.0)
}

/// Top triangle of the latency fixture: tight for match-and-assign at 2.
pub fn fixture_fig3_top() -> Instance {
    triangle_top_instance(2.0)
}

/// Bottom triangle of the latency fixture: tight for transportation at 2.
pub fn fixture_fig3_bottom() -> Instance {
    triangle_bottom_instance(1.0)
}
