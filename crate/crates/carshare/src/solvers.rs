//! The allocation algorithms: match-and-assign MA(alpha, v), transportation
//! TA(alpha), the combined CA(alpha, v), generalized transportation for
//! capacity `a`, the distinct-speed variant, and padding for instances whose
//! request count does not fill the fleet.
//!
//! Match-and-assign first pairs requests by a general matching over the
//! averaged serving costs `(v_ij + v_ji) / 2`, then assigns pairs to cars by
//! a bipartite matching over corrected weights; the two matching weights sum
//! to the realized serving cost of the assignment. Transportation splits
//! each car into a full-tour copy and a discounted copy that skips the
//! return leg, and assigns requests to copies in one bipartite matching.
//!
//! Under the adversarial tie policy a solver returns the worst realized
//! objective over every minimum-weight matching choice, which is what the
//! worst-case instances in the verification suite rely on.

use serde::Serialize;
use thiserror::Error;

use crate::instances::{Allocation, Car, Instance, InstanceError, Request};
use crate::matching::{
    BipartiteMatchingProblem, GeneralMatchingProblem, MatchingError, MatchingResult, TiePolicy,
};
use crate::metric::{Time, DEFAULT_TOLERANCE};
use crate::paircosts::{
    evaluate_allocation, CostError, CostTables, Flavor, Objective, MAX_GROUP_SIZE,
};

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("algorithm handles capacity {expected}, instance has capacity {actual}")]
    UnsupportedCapacity { expected: usize, actual: usize },
    #[error("capacity {capacity} outside the supported range 2..={max}")]
    CapacityOutOfRange { capacity: usize, max: usize },
    #[error("{requests} requests do not fill {cars} cars at capacity {capacity}; pad the instance first")]
    Unbalanced { requests: usize, cars: usize, capacity: usize },
    #[error("match-and-assign does not extend to distinct car speeds")]
    DistinctSpeedsUnsupported,
    #[error("instance is already balanced: {requests} requests fill {cars} cars exactly")]
    AlreadyBalanced { cars: usize, requests: usize },
    #[error(transparent)]
    Matching(#[from] MatchingError),
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error(transparent)]
    Instance(#[from] InstanceError),
}

/// Coefficient weighing the car-to-first-pickup leg; 1 suits the travel-time
/// objective, 2 the latency objective (the first leg is driven toward both
/// waiting customers).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Alpha {
    One,
    Two,
}

impl Alpha {
    pub fn weight(self) -> f64 {
        match self {
            Alpha::One => 1.0,
            Alpha::Two => 2.0,
        }
    }
}

/// Everything a solver run is parameterized by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AlgoConfig {
    pub alpha: Alpha,
    pub flavor: Flavor,
    pub tie_policy: TiePolicy,
    pub objective: Objective,
}

impl AlgoConfig {
    pub fn new(alpha: Alpha, flavor: Flavor, tie_policy: TiePolicy, objective: Objective) -> Self {
        Self { alpha, flavor, tie_policy, objective }
    }

    /// The travel-time pairing: alpha = 1 with the `u` table.
    pub fn for_sum(tie_policy: TiePolicy) -> Self {
        Self::new(Alpha::One, Flavor::U, tie_policy, Objective::Sum)
    }

    /// The latency pairing: alpha = 2 with the `mu` table.
    pub fn for_latency(tie_policy: TiePolicy) -> Self {
        Self::new(Alpha::Two, Flavor::Mu, tie_policy, Objective::Latency)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AlgorithmKind {
    MatchAndAssign,
    Transportation,
    Combined,
    TransportationGeneralSum,
    TransportationGeneralLat,
}

/// Which branch a combined run kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CombinedBranch {
    MatchAndAssign,
    Transportation,
}

/// A solver outcome: the allocation plus the internal matching weights that
/// the approximation analysis reasons about.
#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub algorithm: AlgorithmKind,
    pub config: AlgoConfig,
    pub allocation: Allocation,
    /// Weight of the request pairing found in the first step (MA only).
    pub v1_m1: Option<Time>,
    /// Weight of the pair-to-car assignment of the second step (MA only).
    pub v2_m2: Option<Time>,
    /// Weight of the request-to-virtual-car assignment (TA variants only).
    pub v3_m3: Option<Time>,
    pub combined_branch: Option<CombinedBranch>,
}

impl SolveReport {
    pub fn objective_value(&self) -> Time {
        self.allocation.objective
    }
}

fn require_pairwise(inst: &Instance) -> Result<(), SolveError> {
    if inst.capacity() != 2 {
        return Err(SolveError::UnsupportedCapacity { expected: 2, actual: inst.capacity() });
    }
    require_balanced(inst)
}

fn require_balanced(inst: &Instance) -> Result<(), SolveError> {
    if !inst.is_balanced() {
        return Err(SolveError::Unbalanced {
            requests: inst.num_requests(),
            cars: inst.num_cars(),
            capacity: inst.capacity(),
        });
    }
    Ok(())
}

fn general_candidates(
    problem: &GeneralMatchingProblem,
    policy: TiePolicy,
) -> Result<Vec<MatchingResult>, SolveError> {
    Ok(match policy {
        TiePolicy::Lexicographic => vec![problem.solve_min()?],
        TiePolicy::Adversarial => problem.enumerate_optimal(usize::MAX)?,
    })
}

fn bipartite_candidates(
    problem: &BipartiteMatchingProblem,
    policy: TiePolicy,
) -> Result<Vec<MatchingResult>, SolveError> {
    Ok(match policy {
        TiePolicy::Lexicographic => vec![problem.solve_min()?],
        TiePolicy::Adversarial => problem.enumerate_optimal(usize::MAX)?,
    })
}

struct Candidate {
    allocation: Allocation,
    v1: Option<Time>,
    v2: Option<Time>,
    v3: Option<Time>,
}

/// Keeps the single lexicographic candidate, or under the adversarial policy
/// the first candidate realizing the worst objective.
fn select(policy: TiePolicy, candidates: Vec<Candidate>) -> Candidate {
    debug_assert!(!candidates.is_empty());
    match policy {
        TiePolicy::Lexicographic => candidates.into_iter().next().expect("candidate exists"),
        TiePolicy::Adversarial => candidates
            .into_iter()
            .reduce(|worst, c| {
                if c.allocation.objective > worst.allocation.objective {
                    c
                } else {
                    worst
                }
            })
            .expect("candidate exists"),
    }
}

/// Match-and-assign: pair the requests by averaged mutual serving cost, then
/// assign pairs to cars by the corrected weights. Requires capacity 2 and
/// unit speeds.
pub fn ma_solve(inst: &Instance, cfg: AlgoConfig) -> Result<SolveReport, SolveError> {
    require_pairwise(inst)?;
    if !inst.has_unit_speeds() {
        return Err(SolveError::DistinctSpeedsUnsupported);
    }
    let tables = CostTables::build(inst.metric(), inst.requests());
    let v = tables.table(cfg.flavor);
    let num_requests = inst.num_requests();
    let alpha = cfg.alpha.weight();
    let metric = inst.metric();

    let mut pair_weights = vec![vec![0.0; num_requests]; num_requests];
    for i in 0..num_requests {
        for j in (i + 1)..num_requests {
            let avg = (v[i][j] + v[j][i]) / 2.0;
            pair_weights[i][j] = avg;
            pair_weights[j][i] = avg;
        }
    }
    let pairing_problem = GeneralMatchingProblem::new(pair_weights)?;

    let mut candidates = Vec::new();
    for m1 in general_candidates(&pairing_problem, cfg.tie_policy)? {
        // orient each pair so v_ij >= v_ji; ties keep the index order
        let pairs: Vec<(usize, usize)> = m1
            .pairs
            .iter()
            .map(|&(i, j)| if v[i][j] >= v[j][i] { (i, j) } else { (j, i) })
            .collect();
        let assign_weights: Vec<Vec<f64>> = inst
            .cars()
            .iter()
            .map(|car| {
                pairs
                    .iter()
                    .map(|&(i, j)| {
                        let half_diff = (v[i][j] - v[j][i]) / 2.0;
                        let to_i = alpha * metric.get(car.location, inst.requests()[i].pickup);
                        let to_j = alpha * metric.get(car.location, inst.requests()[j].pickup);
                        let weight = (to_i + half_diff).min(to_j - half_diff);
                        debug_assert!(
                            (weight - (to_j + (-half_diff)).min(to_i - (-half_diff))).abs()
                                <= DEFAULT_TOLERANCE,
                            "assignment weight must not depend on pair orientation"
                        );
                        weight
                    })
                    .collect()
            })
            .collect();
        let assignment_problem = BipartiteMatchingProblem::new(assign_weights)?;
        for m2 in bipartite_candidates(&assignment_problem, cfg.tie_policy)? {
            let mut groups = vec![Vec::new(); inst.num_cars()];
            for &(car, pair_index) in &m2.pairs {
                let (i, j) = pairs[pair_index];
                groups[car] = vec![i.min(j), i.max(j)];
            }
            let allocation = evaluate_allocation(inst, groups, cfg.objective)?;
            candidates.push(Candidate {
                allocation,
                v1: Some(m1.total_weight),
                v2: Some(m2.total_weight),
                v3: None,
            });
        }
    }
    let chosen = select(cfg.tie_policy, candidates);
    Ok(SolveReport {
        algorithm: AlgorithmKind::MatchAndAssign,
        config: cfg,
        allocation: chosen.allocation,
        v1_m1: chosen.v1,
        v2_m2: chosen.v2,
        v3_m3: None,
        combined_branch: None,
    })
}

/// Transportation: split car `k` into a full copy priced
/// `alpha * w(d_k, s_i, t_i) + w(t_i, d_k)` and a discounted copy priced
/// `w(d_k, s_i, t_i)`, and assign requests to copies by one bipartite
/// matching. Weights and the realized objective are divided by the owning
/// car's speed, which reduces to the plain algorithm at unit speeds.
pub fn ta_solve(inst: &Instance, cfg: AlgoConfig) -> Result<SolveReport, SolveError> {
    require_pairwise(inst)?;
    let n = inst.num_cars();
    let alpha = cfg.alpha.weight();
    let metric = inst.metric();

    let mut weights = Vec::with_capacity(2 * n);
    for car in inst.cars() {
        let full: Vec<f64> = inst
            .requests()
            .iter()
            .map(|r| {
                let tour = metric.get(car.location, r.pickup) + metric.get(r.pickup, r.dropoff);
                (alpha * tour + metric.get(r.dropoff, car.location)) / car.speed
            })
            .collect();
        let discounted: Vec<f64> = inst
            .requests()
            .iter()
            .map(|r| {
                (metric.get(car.location, r.pickup) + metric.get(r.pickup, r.dropoff)) / car.speed
            })
            .collect();
        weights.push(full);
        weights.push(discounted);
    }
    let problem = BipartiteMatchingProblem::new(weights)?;

    let mut candidates = Vec::new();
    for m3 in bipartite_candidates(&problem, cfg.tie_policy)? {
        let mut groups = vec![Vec::new(); n];
        for &(copy, request) in &m3.pairs {
            groups[copy / 2].push(request);
        }
        for group in &mut groups {
            group.sort_unstable();
        }
        let allocation = evaluate_allocation(inst, groups, cfg.objective)?;
        candidates.push(Candidate {
            allocation,
            v1: None,
            v2: None,
            v3: Some(m3.total_weight),
        });
    }
    let chosen = select(cfg.tie_policy, candidates);
    Ok(SolveReport {
        algorithm: AlgorithmKind::Transportation,
        config: cfg,
        allocation: chosen.allocation,
        v1_m1: None,
        v2_m2: None,
        v3_m3: chosen.v3,
        combined_branch: None,
    })
}

/// The distinct-speed transportation variant. [`ta_solve`] already divides
/// every weight by the owning car's speed, so this is the same computation
/// under the name the variant is known by; it exists so call sites can state
/// which problem they are solving.
pub fn ta_solve_speeds(inst: &Instance, cfg: AlgoConfig) -> Result<SolveReport, SolveError> {
    ta_solve(inst, cfg)
}

/// Combined algorithm: run both heuristics and keep the better realized
/// objective; exact ties go to match-and-assign.
pub fn ca_solve(inst: &Instance, cfg: AlgoConfig) -> Result<SolveReport, SolveError> {
    let ma = ma_solve(inst, cfg)?;
    let ta = ta_solve(inst, cfg)?;
    let (winner, branch) = if ta.allocation.objective < ma.allocation.objective {
        (ta, CombinedBranch::Transportation)
    } else {
        (ma, CombinedBranch::MatchAndAssign)
    };
    Ok(SolveReport {
        algorithm: AlgorithmKind::Combined,
        combined_branch: Some(branch),
        ..winner
    })
}

/// Weight scheme for the generalized travel-time transportation algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneralSumWeights {
    /// One discounted copy per car: every car skips exactly one return leg.
    /// This generalizes the capacity-2 algorithm and keeps the realized cost
    /// below the matching weight.
    DiscountPerCar,
    /// Discount all copies of the last car only, as a literal reading of the
    /// procedure would have it; kept for comparison. The realized cost may
    /// exceed the matching weight under this scheme.
    DiscountLastCarOnly,
}

fn require_capacity(inst: &Instance, a: usize) -> Result<(), SolveError> {
    if !(2..=MAX_GROUP_SIZE).contains(&a) {
        return Err(SolveError::CapacityOutOfRange { capacity: a, max: MAX_GROUP_SIZE });
    }
    if inst.capacity() != a {
        return Err(SolveError::UnsupportedCapacity { expected: a, actual: inst.capacity() });
    }
    require_balanced(inst)
}

fn grouped_allocation_from(
    inst: &Instance,
    a: usize,
    m3: &MatchingResult,
    objective: Objective,
) -> Result<Allocation, SolveError> {
    let mut groups = vec![Vec::new(); inst.num_cars()];
    for &(copy, request) in &m3.pairs {
        groups[copy / a].push(request);
    }
    for group in &mut groups {
        group.sort_unstable();
    }
    Ok(evaluate_allocation(inst, groups, objective)?)
}

/// Generalized transportation for the travel-time objective at capacity
/// `a`: car copies are priced as full tours except one discounted copy, and
/// requests are assigned by one `a*n` by `a*n` matching.
pub fn ta_general_sum(inst: &Instance, a: usize) -> Result<SolveReport, SolveError> {
    ta_general_sum_with(inst, a, GeneralSumWeights::DiscountPerCar)
}

pub fn ta_general_sum_with(
    inst: &Instance,
    a: usize,
    scheme: GeneralSumWeights,
) -> Result<SolveReport, SolveError> {
    require_capacity(inst, a)?;
    let n = inst.num_cars();
    let metric = inst.metric();
    let mut weights = Vec::with_capacity(a * n);
    for (k, car) in inst.cars().iter().enumerate() {
        for copy in 0..a {
            let discounted = match scheme {
                GeneralSumWeights::DiscountPerCar => copy == a - 1,
                GeneralSumWeights::DiscountLastCarOnly => k == n - 1,
            };
            let row: Vec<f64> = inst
                .requests()
                .iter()
                .map(|r| {
                    let tour =
                        metric.get(car.location, r.pickup) + metric.get(r.pickup, r.dropoff);
                    let value =
                        if discounted { tour } else { tour + metric.get(r.dropoff, car.location) };
                    value / car.speed
                })
                .collect();
            weights.push(row);
        }
    }
    let problem = BipartiteMatchingProblem::new(weights)?;
    let m3 = problem.solve_min()?;
    let allocation = grouped_allocation_from(inst, a, &m3, Objective::Sum)?;
    if scheme == GeneralSumWeights::DiscountPerCar {
        debug_assert!(
            allocation.objective <= m3.total_weight + DEFAULT_TOLERANCE,
            "realized cost must stay below the matching weight"
        );
    }
    Ok(SolveReport {
        algorithm: AlgorithmKind::TransportationGeneralSum,
        config: AlgoConfig::for_sum(TiePolicy::Lexicographic),
        allocation,
        v1_m1: None,
        v2_m2: None,
        v3_m3: Some(m3.total_weight),
        combined_branch: None,
    })
}

/// Generalized transportation for the latency objective at capacity `a`:
/// the j-th copy of a car weighs a request by
/// `(a-j+1) * w(d_k, s_i, t_i) + (a-j) * w(t_i, d_k)`, so earlier copies pay
/// for the customers still waiting behind them.
pub fn ta_general_lat(inst: &Instance, a: usize) -> Result<SolveReport, SolveError> {
    require_capacity(inst, a)?;
    let metric = inst.metric();
    let mut weights = Vec::with_capacity(a * inst.num_cars());
    for car in inst.cars() {
        for copy in 0..a {
            let tours_left = (a - copy) as f64;
            let returns_left = (a - copy - 1) as f64;
            let row: Vec<f64> = inst
                .requests()
                .iter()
                .map(|r| {
                    let tour =
                        metric.get(car.location, r.pickup) + metric.get(r.pickup, r.dropoff);
                    (tours_left * tour + returns_left * metric.get(r.dropoff, car.location))
                        / car.speed
                })
                .collect();
            weights.push(row);
        }
    }
    let problem = BipartiteMatchingProblem::new(weights)?;
    let m3 = problem.solve_min()?;
    let allocation = grouped_allocation_from(inst, a, &m3, Objective::Latency)?;
    debug_assert!(
        allocation.objective <= m3.total_weight + DEFAULT_TOLERANCE,
        "realized latency must stay below the matching weight"
    );
    Ok(SolveReport {
        algorithm: AlgorithmKind::TransportationGeneralLat,
        config: AlgoConfig::for_latency(TiePolicy::Lexicographic),
        allocation,
        v1_m1: None,
        v2_m2: None,
        v3_m3: Some(m3.total_weight),
        combined_branch: None,
    })
}

/// Restores `|R| = 2|D|` on an unbalanced capacity-2 instance. Missing
/// requests become stationary dummies at a fresh location that is free to
/// reach from every car location but prohibitively far from every other
/// location; missing cars are parked at a fresh location at distance zero
/// from everything. The result is flagged padded since these conventions
/// break the triangle inequality on purpose.
pub fn pad_instance(inst: &Instance) -> Result<Instance, SolveError> {
    if inst.capacity() != 2 {
        return Err(SolveError::UnsupportedCapacity { expected: 2, actual: inst.capacity() });
    }
    if inst.is_balanced() {
        return Err(SolveError::AlreadyBalanced {
            cars: inst.num_cars(),
            requests: inst.num_requests(),
        });
    }
    let mut rows = inst.metric().rows();
    let mut cars = inst.cars().to_vec();
    let mut requests = inst.requests().to_vec();

    if 2 * cars.len() < requests.len() {
        let missing_cars = requests.len().div_ceil(2) - cars.len();
        let lot = append_location(&mut rows, |_| 0.0);
        for _ in 0..missing_cars {
            cars.push(Car::at(lot));
        }
    }
    // an odd request count still leaves one empty seat after adding cars
    if 2 * cars.len() > requests.len() {
        let matrix_sum: f64 = rows.iter().flatten().sum();
        let far = 1.0 + 2.0 * matrix_sum;
        let car_locations: Vec<usize> = cars.iter().map(|c| c.location).collect();
        let lot =
            append_location(&mut rows, |x| if car_locations.contains(&x) { 0.0 } else { far });
        for _ in 0..(2 * cars.len() - requests.len()) {
            requests.push(Request::at(lot));
        }
    }
    let metric = crate::metric::DistanceMatrix::from_rows(rows).map_err(InstanceError::from)?;
    Ok(Instance::with_flags(metric, cars, requests, 2, true)?)
}

/// Adds one location with the given distances to the existing ones and
/// returns its index.
fn append_location(rows: &mut Vec<Vec<f64>>, distance_to: impl Fn(usize) -> f64) -> usize {
    let size = rows.len();
    let mut new_row: Vec<f64> = (0..size).map(distance_to).collect();
    new_row.push(0.0);
    for (x, row) in rows.iter_mut().enumerate() {
        row.push(new_row[x]);
    }
    rows.push(new_row);
    size
}

/// The serving cost the two match-and-assign matchings add up to:
/// `sum over (k, {i,j}) of min(alpha w(d_k,s_i) + v_ij, alpha w(d_k,s_j) + v_ji)`.
/// Equals `v1(M1) + v2(M2)` on every match-and-assign run.
pub fn ma_assignment_value(
    inst: &Instance,
    tables: &CostTables,
    alpha: Alpha,
    flavor: Flavor,
    groups: &[Vec<usize>],
) -> Time {
    let v = tables.table(flavor);
    let a = alpha.weight();
    let metric = inst.metric();
    groups
        .iter()
        .enumerate()
        .map(|(k, group)| {
            let (i, j) = (group[0], group[1]);
            let si = inst.requests()[i].pickup;
            let sj = inst.requests()[j].pickup;
            let d = inst.cars()[k].location;
            (a * metric.get(d, si) + v[i][j]).min(a * metric.get(d, sj) + v[j][i])
        })
        .sum()
}

/// The virtual-car tour value the transportation matching adds up to:
/// `sum over (k, {i,j}) of min(alpha w(d_k,s_i,t_i) + w(t_i,d_k,s_j,t_j), swapped)`,
/// per-car speed applied. Equals `v3(M3)` on every transportation run.
pub fn ta_assignment_value(inst: &Instance, alpha: Alpha, groups: &[Vec<usize>]) -> Time {
    let a = alpha.weight();
    let metric = inst.metric();
    groups
        .iter()
        .enumerate()
        .map(|(k, group)| {
            let (i, j) = (group[0], group[1]);
            let ri = inst.requests()[i];
            let rj = inst.requests()[j];
            let car = &inst.cars()[k];
            let d = car.location;
            let tour_i = metric.get(d, ri.pickup) + metric.get(ri.pickup, ri.dropoff);
            let tour_j = metric.get(d, rj.pickup) + metric.get(rj.pickup, rj.dropoff);
            let i_first = a * tour_i + metric.get(ri.dropoff, d) + tour_j;
            let j_first = a * tour_j + metric.get(rj.dropoff, d) + tour_i;
            i_first.min(j_first) / car.speed
        })
        .sum()
}

/// Upper bound on `v1(M1) + v2(M2)` obtained from any reference allocation:
/// half the sum of `alpha (w(d_k,s_i) + w(d_k,s_j)) + v_ij + v_ji` over its
/// pairs.
pub fn ma_pairing_bound(
    inst: &Instance,
    tables: &CostTables,
    alpha: Alpha,
    flavor: Flavor,
    groups: &[Vec<usize>],
) -> Time {
    let v = tables.table(flavor);
    let a = alpha.weight();
    let metric = inst.metric();
    groups
        .iter()
        .enumerate()
        .map(|(k, group)| {
            let (i, j) = (group[0], group[1]);
            let si = inst.requests()[i].pickup;
            let sj = inst.requests()[j].pickup;
            let d = inst.cars()[k].location;
            0.5 * (a * (metric.get(d, si) + metric.get(d, sj)) + v[i][j] + v[j][i])
        })
        .sum()
}
