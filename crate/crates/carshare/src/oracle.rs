//! Exact brute-force optima for desk-scale instances and the empirical
//! verification of worst-case ratio bounds: every allocation is enumerated,
//! routed optimally, and compared against the algorithms under the
//! adversarial tie policy.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::instances::{Allocation, Instance, RequestMode};
use crate::matching::TiePolicy;
use crate::metric::{Time, DEFAULT_TOLERANCE};
use crate::paircosts::{evaluate_allocation, group_cost, group_wait, CostError, Flavor, Objective};
use crate::solvers::{
    ca_solve, ma_solve, ta_general_lat, ta_general_sum, ta_solve, AlgoConfig, Alpha, SolveError,
    SolveReport,
};

/// Hard cap on the number of allocations the oracle will enumerate.
pub const MAX_ORACLE_ALLOCATIONS: u128 = 1_000_000;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("{allocations} allocations exceed the enumeration cap of {max}")]
    TooManyAllocations { allocations: u128, max: u128 },
    #[error("{requests} requests do not fill {cars} cars at capacity {capacity}")]
    Unbalanced { requests: usize, cars: usize, capacity: usize },
    #[error("instance has no cars")]
    NoCars,
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Instance(#[from] crate::instances::InstanceError),
}

fn factorial(n: usize) -> u128 {
    (1..=n as u128).product()
}

/// Number of (partition, car-assignment) combinations the oracle walks:
/// (a n)! / (a!)^n.
pub fn allocation_count(cars: usize, capacity: usize) -> u128 {
    factorial(capacity * cars) / factorial(capacity).pow(cars as u32)
}

fn combinations(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for (pos, &item) in items.iter().enumerate() {
        for mut tail in combinations(&items[pos + 1..], k - 1) {
            tail.insert(0, item);
            out.push(tail);
        }
    }
    out
}

// Canonical partition enumeration: the smallest unassigned request heads the
// next group, companions are chosen in ascending combinations.
fn for_each_partition(
    remaining: &[usize],
    capacity: usize,
    current: &mut Vec<Vec<usize>>,
    visit: &mut impl FnMut(&[Vec<usize>]),
) {
    if remaining.is_empty() {
        visit(current);
        return;
    }
    let head = remaining[0];
    let rest = &remaining[1..];
    for companions in combinations(rest, capacity - 1) {
        let mut group = Vec::with_capacity(capacity);
        group.push(head);
        group.extend(companions.iter().copied());
        let next: Vec<usize> =
            rest.iter().copied().filter(|v| !companions.contains(v)).collect();
        current.push(group);
        for_each_partition(&next, capacity, current, visit);
        current.pop();
    }
}

fn for_each_permutation(n: usize, visit: &mut impl FnMut(&[usize])) {
    fn descend(n: usize, used: &mut Vec<bool>, prefix: &mut Vec<usize>, visit: &mut impl FnMut(&[usize])) {
        if prefix.len() == n {
            visit(prefix);
            return;
        }
        for car in 0..n {
            if used[car] {
                continue;
            }
            used[car] = true;
            prefix.push(car);
            descend(n, used, prefix, visit);
            prefix.pop();
            used[car] = false;
        }
    }
    let mut used = vec![false; n];
    let mut prefix = Vec::with_capacity(n);
    descend(n, &mut used, &mut prefix, visit);
}

/// Exact optimum by full enumeration: every partition of the requests into
/// groups of `capacity`, every group-to-car bijection, every group routed
/// optimally. The first allocation achieving the optimum in canonical
/// enumeration order is returned.
pub fn brute_force_opt(inst: &Instance, objective: Objective) -> Result<Allocation, OracleError> {
    if !inst.is_balanced() {
        return Err(OracleError::Unbalanced {
            requests: inst.num_requests(),
            cars: inst.num_cars(),
            capacity: inst.capacity(),
        });
    }
    if inst.num_cars() == 0 {
        return Err(OracleError::NoCars);
    }
    let count = allocation_count(inst.num_cars(), inst.capacity());
    if count > MAX_ORACLE_ALLOCATIONS {
        return Err(OracleError::TooManyAllocations {
            allocations: count,
            max: MAX_ORACLE_ALLOCATIONS,
        });
    }
    let n = inst.num_cars();
    let mut best: Option<Allocation> = None;
    let requests: Vec<usize> = (0..inst.num_requests()).collect();
    let mut partition = Vec::with_capacity(n);
    let mut failure: Option<CostError> = None;
    for_each_partition(&requests, inst.capacity(), &mut partition, &mut |groups| {
        if failure.is_some() {
            return;
        }
        for_each_permutation(n, &mut |cars| {
            if failure.is_some() {
                return;
            }
            let mut assigned = vec![Vec::new(); n];
            for (g, &car) in cars.iter().enumerate() {
                assigned[car] = groups[g].clone();
            }
            match evaluate_allocation(inst, assigned, objective) {
                Ok(candidate) => {
                    if best.as_ref().is_none_or(|b| candidate.objective < b.objective) {
                        best = Some(candidate);
                    }
                }
                Err(err) => failure = Some(err),
            }
        });
    });
    if let Some(err) = failure {
        return Err(err.into());
    }
    Ok(best.expect("at least one allocation exists"))
}

/// Exact optimum when cars may be left partially loaded: every assignment of
/// requests to cars with at most `capacity` each. Used to score unbalanced
/// instances that the padding workflow completes.
pub fn brute_force_opt_relaxed(
    inst: &Instance,
    objective: Objective,
) -> Result<(Time, Vec<Vec<usize>>), OracleError> {
    let n = inst.num_cars();
    if n == 0 {
        return Err(OracleError::NoCars);
    }
    let r = inst.num_requests();
    if r > n * inst.capacity() {
        return Err(OracleError::Unbalanced {
            requests: r,
            cars: n,
            capacity: inst.capacity(),
        });
    }
    let count = (n as u128).pow(r as u32);
    if count > MAX_ORACLE_ALLOCATIONS {
        return Err(OracleError::TooManyAllocations {
            allocations: count,
            max: MAX_ORACLE_ALLOCATIONS,
        });
    }
    let mut best = Time::INFINITY;
    let mut best_groups = Vec::new();
    let mut groups = vec![Vec::new(); n];
    let mut failure: Option<CostError> = None;
    fn descend(
        inst: &Instance,
        objective: Objective,
        request: usize,
        groups: &mut Vec<Vec<usize>>,
        best: &mut Time,
        best_groups: &mut Vec<Vec<usize>>,
        failure: &mut Option<CostError>,
    ) {
        if failure.is_some() {
            return;
        }
        if request == inst.num_requests() {
            let mut total = 0.0;
            for (car, group) in groups.iter().enumerate() {
                let members: Vec<_> = group.iter().map(|&g| inst.requests()[g]).collect();
                let dk = inst.cars()[car].location;
                let evaluated = match objective {
                    Objective::Sum => group_cost(inst.metric(), dk, &members),
                    Objective::Latency => group_wait(inst.metric(), dk, &members),
                };
                match evaluated {
                    Ok((value, _)) => total += value / inst.cars()[car].speed,
                    Err(err) => {
                        *failure = Some(err);
                        return;
                    }
                }
            }
            if total < *best {
                *best = total;
                *best_groups = groups.clone();
            }
            return;
        }
        for car in 0..inst.num_cars() {
            if groups[car].len() == inst.capacity() {
                continue;
            }
            groups[car].push(request);
            descend(inst, objective, request + 1, groups, best, best_groups, failure);
            groups[car].pop();
        }
    }
    descend(inst, objective, 0, &mut groups, &mut best, &mut best_groups, &mut failure);
    if let Some(err) = failure {
        return Err(err.into());
    }
    Ok((best, best_groups))
}

/// The six algorithm columns whose worst-case ratios the result table lists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TableAlgorithm {
    Ma1U,
    Ma2Mu,
    Ta1,
    Ta2,
    Ca1U,
    Ca2Mu,
}

impl TableAlgorithm {
    pub const ALL: [TableAlgorithm; 6] = [
        TableAlgorithm::Ma1U,
        TableAlgorithm::Ma2Mu,
        TableAlgorithm::Ta1,
        TableAlgorithm::Ta2,
        TableAlgorithm::Ca1U,
        TableAlgorithm::Ca2Mu,
    ];

    pub fn label(self) -> &'static str {
        match self {
            TableAlgorithm::Ma1U => "MA(1,u)",
            TableAlgorithm::Ma2Mu => "MA(2,mu)",
            TableAlgorithm::Ta1 => "TA(1)",
            TableAlgorithm::Ta2 => "TA(2)",
            TableAlgorithm::Ca1U => "CA(1,u)",
            TableAlgorithm::Ca2Mu => "CA(2,mu)",
        }
    }

    pub fn config(self, tie_policy: TiePolicy, objective: Objective) -> AlgoConfig {
        let (alpha, flavor) = match self {
            TableAlgorithm::Ma1U | TableAlgorithm::Ta1 | TableAlgorithm::Ca1U => {
                (Alpha::One, Flavor::U)
            }
            TableAlgorithm::Ma2Mu | TableAlgorithm::Ta2 | TableAlgorithm::Ca2Mu => {
                (Alpha::Two, Flavor::Mu)
            }
        };
        AlgoConfig::new(alpha, flavor, tie_policy, objective)
    }

    pub fn solve(
        self,
        inst: &Instance,
        tie_policy: TiePolicy,
        objective: Objective,
    ) -> Result<SolveReport, SolveError> {
        let cfg = self.config(tie_policy, objective);
        match self {
            TableAlgorithm::Ma1U | TableAlgorithm::Ma2Mu => ma_solve(inst, cfg),
            TableAlgorithm::Ta1 | TableAlgorithm::Ta2 => ta_solve(inst, cfg),
            TableAlgorithm::Ca1U | TableAlgorithm::Ca2Mu => ca_solve(inst, cfg),
        }
    }
}

/// Worst-case ratio bound of an algorithm column on a problem variant, as
/// the result table states them. Rows are (objective, pickup-equals-dropoff).
pub fn table1_bound(alg: TableAlgorithm, objective: Objective, s_equals_t: bool) -> f64 {
    use Objective::{Latency, Sum};
    use TableAlgorithm::*;
    match (alg, objective, s_equals_t) {
        (Ma1U, Sum, false) => 2.0,
        (Ma1U, Sum, true) => 1.5,
        (Ma1U, Latency, false) => 3.0,
        (Ma1U, Latency, true) => 2.0,
        (Ma2Mu, Sum, false) => 3.0,
        (Ma2Mu, Sum, true) => 1.5,
        (Ma2Mu, Latency, _) => 2.0,
        (Ta1, Latency, true) => 2.0,
        (Ta1, _, _) => 3.0,
        (Ta2, Sum, _) => 4.0,
        (Ta2, Latency, _) => 2.0,
        (Ca1U, Sum, false) => 2.0,
        (Ca1U, Sum, true) => 7.0 / 5.0,
        (Ca1U, Latency, false) => 3.0,
        (Ca1U, Latency, true) => 8.0 / 5.0,
        (Ca2Mu, Sum, false) => 3.0,
        (Ca2Mu, Sum, true) => 10.0 / 7.0,
        (Ca2Mu, Latency, false) => 5.0 / 3.0,
        (Ca2Mu, Latency, true) => 3.0 / 2.0,
    }
}

/// One empirical ratio measurement against the exact optimum.
#[derive(Debug, Clone, Serialize)]
pub struct RatioRecord {
    pub instance_digest: String,
    pub algorithm: String,
    pub objective: Objective,
    pub s_equals_t: bool,
    pub tie_policy: TiePolicy,
    pub value: Time,
    pub optimum: Time,
    /// Absent when the optimum is zero (degenerate instance).
    pub ratio: Option<f64>,
    pub bound: f64,
    pub within_bound: bool,
    pub degenerate: bool,
}

fn make_record(
    inst: &Instance,
    label: String,
    objective: Objective,
    value: Time,
    optimum: Time,
    bound: f64,
) -> RatioRecord {
    let degenerate = optimum <= DEFAULT_TOLERANCE;
    let (ratio, within_bound) = if degenerate {
        // a zero optimum forces a zero algorithm objective instead of a ratio
        (None, value <= DEFAULT_TOLERANCE)
    } else {
        let r = value / optimum;
        (Some(r), r <= bound + DEFAULT_TOLERANCE)
    };
    RatioRecord {
        instance_digest: inst.digest(),
        algorithm: label,
        objective,
        s_equals_t: inst.is_pickup_equals_dropoff(),
        tie_policy: TiePolicy::Adversarial,
        value,
        optimum,
        ratio,
        bound,
        within_bound,
        degenerate,
    }
}

/// Runs one algorithm column under adversarial ties and scores it against
/// the brute-force optimum and the table bound for the instance's variant.
pub fn ratio_check(
    inst: &Instance,
    alg: TableAlgorithm,
    objective: Objective,
) -> Result<RatioRecord, OracleError> {
    let optimum = brute_force_opt(inst, objective)?.objective;
    let report = alg.solve(inst, TiePolicy::Adversarial, objective)?;
    let bound = table1_bound(alg, objective, inst.is_pickup_equals_dropoff());
    Ok(make_record(inst, alg.label().to_string(), objective, report.objective_value(), optimum, bound))
}

/// Parameters of a randomized ratio sweep. Capacity 2 checks the six table
/// columns on both objectives; larger capacities check the generalized
/// transportation algorithms against their `2a-1` and `a` bounds.
#[derive(Debug, Clone)]
pub struct SweepParams {
    pub count: usize,
    pub cars: usize,
    pub capacity: usize,
    pub mode: RequestMode,
    pub seed: u64,
    pub algorithms: Vec<TableAlgorithm>,
}

impl SweepParams {
    pub fn new(count: usize, cars: usize, capacity: usize, mode: RequestMode, seed: u64) -> Self {
        Self { count, cars, capacity, mode, seed, algorithms: TableAlgorithm::ALL.to_vec() }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SummaryEntry {
    pub algorithm: String,
    pub objective: Objective,
    pub bound: f64,
    pub max_ratio: Option<f64>,
    pub checked: usize,
    pub violations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepSummary {
    pub instances: usize,
    pub degenerate: usize,
    pub violations: usize,
    pub entries: Vec<SummaryEntry>,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub records: Vec<RatioRecord>,
    pub summary: SweepSummary,
}

/// Deterministic randomized sweep: `count` instances from the seed, each
/// checked on every applicable (algorithm, objective) bound.
pub fn ratio_sweep(params: &SweepParams) -> Result<SweepOutcome, OracleError> {
    let mut master = ChaCha8Rng::seed_from_u64(params.seed);
    let mut records = Vec::new();
    let mut degenerate_instances = 0usize;
    for _ in 0..params.count {
        let inst_seed = master.random::<u64>();
        let inst = crate::instances::random_instance(
            params.cars,
            params.capacity,
            params.mode,
            inst_seed,
        )?;
        let mut instance_degenerate = false;
        if params.capacity == 2 {
            for objective in [Objective::Sum, Objective::Latency] {
                let optimum = brute_force_opt(&inst, objective)?.objective;
                for &alg in &params.algorithms {
                    let report = alg.solve(&inst, TiePolicy::Adversarial, objective)?;
                    let bound = table1_bound(alg, objective, inst.is_pickup_equals_dropoff());
                    let record = make_record(
                        &inst,
                        alg.label().to_string(),
                        objective,
                        report.objective_value(),
                        optimum,
                        bound,
                    );
                    instance_degenerate |= record.degenerate;
                    records.push(record);
                }
            }
        } else {
            let a = params.capacity;
            let sum_opt = brute_force_opt(&inst, Objective::Sum)?.objective;
            let sum_run = ta_general_sum(&inst, a)?;
            records.push(make_record(
                &inst,
                format!("TA({a})-sum"),
                Objective::Sum,
                sum_run.objective_value(),
                sum_opt,
                (2 * a - 1) as f64,
            ));
            let lat_opt = brute_force_opt(&inst, Objective::Latency)?.objective;
            let lat_run = ta_general_lat(&inst, a)?;
            records.push(make_record(
                &inst,
                format!("TA({a})-lat"),
                Objective::Latency,
                lat_run.objective_value(),
                lat_opt,
                a as f64,
            ));
            instance_degenerate = records[records.len() - 2..].iter().any(|r| r.degenerate);
        }
        if instance_degenerate {
            degenerate_instances += 1;
        }
    }
    Ok(SweepOutcome { summary: summarize(params.count, degenerate_instances, &records), records })
}

fn summarize(instances: usize, degenerate: usize, records: &[RatioRecord]) -> SweepSummary {
    let mut entries: Vec<SummaryEntry> = Vec::new();
    for record in records {
        let entry = entries
            .iter_mut()
            .find(|e| e.algorithm == record.algorithm && e.objective == record.objective);
        let entry = match entry {
            Some(e) => e,
            None => {
                entries.push(SummaryEntry {
                    algorithm: record.algorithm.clone(),
                    objective: record.objective,
                    bound: record.bound,
                    max_ratio: None,
                    checked: 0,
                    violations: 0,
                });
                entries.last_mut().expect("just pushed")
            }
        };
        entry.checked += 1;
        if let Some(ratio) = record.ratio {
            entry.max_ratio = Some(entry.max_ratio.map_or(ratio, |m: f64| m.max(ratio)));
        }
        if !record.within_bound {
            entry.violations += 1;
        }
    }
    SweepSummary {
        instances,
        degenerate,
        violations: entries.iter().map(|e| e.violations).sum(),
        entries,
    }
}
