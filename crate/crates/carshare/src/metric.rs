//! The travel-time metric: a dense symmetric distance matrix, axiom
//! validation, path lengths, and all-pairs closures of sparse edge graphs.

use thiserror::Error;

/// Index of a location in a [`DistanceMatrix`].
pub type LocationId = usize;

/// Travel time in abstract units.
pub type Time = f64;

/// Slack used for floating-point comparisons throughout the crate.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("location {id} out of range, matrix has {size} locations")]
    LocationOutOfRange { id: usize, size: usize },
    #[error("row {row} has {len} entries, expected {size}")]
    NotSquare { row: usize, len: usize, size: usize },
    #[error("path must contain at least one location")]
    EmptyPath,
    #[error("edge ({x}, {y}) has negative weight {weight}")]
    NegativeEdgeWeight { x: usize, y: usize, weight: f64 },
    #[error("self-loop edge at location {x}")]
    SelfLoop { x: usize },
    #[error("graph needs at least one location")]
    EmptyGraph,
}

/// One failed metric axiom, reported as data rather than an error.
#[derive(Debug, Clone, PartialEq)]
pub enum MetricViolation {
    NegativeEntry { x: usize, y: usize, value: f64 },
    NonzeroDiagonal { x: usize, value: f64 },
    Asymmetry { x: usize, y: usize, forward: f64, backward: f64 },
    Triangle { x: usize, y: usize, z: usize, direct: f64, via: f64 },
}

impl std::fmt::Display for MetricViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MetricViolation::NegativeEntry { x, y, value } => {
                write!(f, "d[{x}][{y}] = {value} is negative")
            }
            MetricViolation::NonzeroDiagonal { x, value } => {
                write!(f, "d[{x}][{x}] = {value}, expected 0")
            }
            MetricViolation::Asymmetry { x, y, forward, backward } => {
                write!(f, "d[{x}][{y}] = {forward} but d[{y}][{x}] = {backward}")
            }
            MetricViolation::Triangle { x, y, z, direct, via } => {
                write!(f, "d[{x}][{z}] = {direct} exceeds d[{x}][{y}] + d[{y}][{z}] = {via}")
            }
        }
    }
}

/// Outcome of [`DistanceMatrix::validate`]; empty means every axiom holds.
#[derive(Debug, Clone, Default)]
pub struct MetricReport {
    pub violations: Vec<MetricViolation>,
}

impl MetricReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Dense symmetric matrix of nonnegative travel times between locations.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    size: usize,
    entries: Vec<Time>,
    tolerance: f64,
}

impl DistanceMatrix {
    /// Builds a matrix from row vectors. Only squareness is checked here;
    /// metric axioms are reported by [`DistanceMatrix::validate`].
    pub fn from_rows(rows: Vec<Vec<Time>>) -> Result<Self, MetricError> {
        let size = rows.len();
        let mut entries = Vec::with_capacity(size * size);
        for (row, values) in rows.iter().enumerate() {
            if values.len() != size {
                return Err(MetricError::NotSquare { row, len: values.len(), size });
            }
            entries.extend_from_slice(values);
        }
        Ok(Self { size, entries, tolerance: DEFAULT_TOLERANCE })
    }

    /// Matrix where every pair of distinct locations is at `dist`.
    pub fn uniform(size: usize, dist: Time) -> Self {
        let mut entries = vec![dist; size * size];
        for x in 0..size {
            entries[x * size + x] = 0.0;
        }
        Self { size, entries, tolerance: DEFAULT_TOLERANCE }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// Travel time between two locations. Panics on out-of-range ids; use
    /// [`DistanceMatrix::path_length`] for checked access.
    #[inline]
    pub fn get(&self, x: LocationId, y: LocationId) -> Time {
        self.entries[x * self.size + y]
    }

    pub fn rows(&self) -> Vec<Vec<Time>> {
        (0..self.size)
            .map(|x| self.entries[x * self.size..(x + 1) * self.size].to_vec())
            .collect()
    }

    /// Length of the path visiting `points` in order; a single point has
    /// length zero.
    pub fn path_length(&self, points: &[LocationId]) -> Result<Time, MetricError> {
        if points.is_empty() {
            return Err(MetricError::EmptyPath);
        }
        for &p in points {
            if p >= self.size {
                return Err(MetricError::LocationOutOfRange { id: p, size: self.size });
            }
        }
        Ok(points.windows(2).map(|w| self.get(w[0], w[1])).sum())
    }

    /// Checks every metric axiom and reports each violated instance:
    /// negative entries, nonzero diagonal, asymmetry, and triangle-inequality
    /// breaches beyond the tolerance.
    pub fn validate(&self) -> MetricReport {
        let mut report = MetricReport::default();
        let tol = self.tolerance;
        for x in 0..self.size {
            let diag = self.get(x, x);
            if diag.abs() > tol {
                report.violations.push(MetricViolation::NonzeroDiagonal { x, value: diag });
            }
            for y in 0..self.size {
                let fwd = self.get(x, y);
                if fwd < -tol {
                    report.violations.push(MetricViolation::NegativeEntry { x, y, value: fwd });
                }
                if x < y {
                    let bwd = self.get(y, x);
                    if (fwd - bwd).abs() > tol {
                        report.violations.push(MetricViolation::Asymmetry {
                            x,
                            y,
                            forward: fwd,
                            backward: bwd,
                        });
                    }
                }
            }
        }
        for x in 0..self.size {
            for z in 0..self.size {
                let direct = self.get(x, z);
                for y in 0..self.size {
                    let via = self.get(x, y) + self.get(y, z);
                    if direct > via + tol {
                        report.violations.push(MetricViolation::Triangle { x, y, z, direct, via });
                    }
                }
            }
        }
        report
    }

    /// Replaces every entry with the shortest-path distance it induces.
    pub(crate) fn close(&mut self) {
        floyd_warshall(self.size, &mut self.entries);
    }
}

fn floyd_warshall(size: usize, entries: &mut [Time]) {
    for mid in 0..size {
        for x in 0..size {
            let through = entries[x * size + mid];
            if through.is_infinite() {
                continue;
            }
            for z in 0..size {
                let candidate = through + entries[mid * size + z];
                if candidate < entries[x * size + z] {
                    entries[x * size + z] = candidate;
                }
            }
        }
    }
}

/// Sparse undirected weighted graph over locations, used to realize drawn
/// instances; location pairs left unconnected resolve to
/// `default_cross_distance` in the closure.
#[derive(Debug, Clone)]
pub struct EdgeGraph {
    size: usize,
    edges: Vec<(LocationId, LocationId, Time)>,
    default_cross_distance: Time,
}

impl EdgeGraph {
    pub fn new(
        size: usize,
        edges: Vec<(LocationId, LocationId, Time)>,
        default_cross_distance: Time,
    ) -> Result<Self, MetricError> {
        if size == 0 {
            return Err(MetricError::EmptyGraph);
        }
        for &(x, y, weight) in &edges {
            if x == y {
                return Err(MetricError::SelfLoop { x });
            }
            for id in [x, y] {
                if id >= size {
                    return Err(MetricError::LocationOutOfRange { id, size });
                }
            }
            if weight < 0.0 {
                return Err(MetricError::NegativeEdgeWeight { x, y, weight });
            }
        }
        Ok(Self { size, edges, default_cross_distance })
    }

    /// All-pairs shortest-path distances over the edges. Pairs in different
    /// connected components get the default cross distance. The result is not
    /// guaranteed to be a metric; callers re-validate.
    pub fn metric_closure(&self) -> DistanceMatrix {
        let size = self.size;
        let mut entries = vec![Time::INFINITY; size * size];
        for x in 0..size {
            entries[x * size + x] = 0.0;
        }
        for &(x, y, weight) in &self.edges {
            // keep the lightest parallel edge
            if weight < entries[x * size + y] {
                entries[x * size + y] = weight;
                entries[y * size + x] = weight;
            }
        }
        floyd_warshall(size, &mut entries);
        for value in entries.iter_mut() {
            if value.is_infinite() {
                *value = self.default_cross_distance;
            }
        }
        DistanceMatrix { size, entries, tolerance: DEFAULT_TOLERANCE }
    }
}
