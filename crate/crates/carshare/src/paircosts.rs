//! Serving-cost formulas: the pairwise travel-time and latency of one car
//! serving two requests, their decomposed forms over the asymmetric tables
//! u and mu, exact group evaluators for larger capacities, and allocation
//! totals.
//!
//! For a car at `d` serving requests `i` and `j`, the travel time is the
//! cheapest of the six visit orders that respect pickup-before-dropoff, and
//! it decomposes as `min(w(d,s_i) + u[i][j], w(d,s_j) + u[j][i])` where
//! `u[i][j]` is the cheapest continuation from the first pickup. Latency is
//! analogous with each request paying its own arrival time at its dropoff,
//! decomposing over `mu` with a doubled first leg.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instances::{Allocation, Instance, Request, Visit};
use crate::metric::{DistanceMatrix, LocationId, Time, DEFAULT_TOLERANCE};

/// Largest group size the exact order enumeration accepts; 8 visits means
/// 2520 feasible orders, which is still instant, while 10 visits is not a
/// desk-scale computation.
pub const MAX_GROUP_SIZE: usize = 4;

#[derive(Debug, Error)]
pub enum CostError {
    #[error("group of {size} requests exceeds the exact-search cap of {max}")]
    GroupTooLarge { size: usize, max: usize },
    #[error("groups do not partition the requests: {reason}")]
    NotPartition { reason: String },
}

/// Which serving-cost table weighs a request pair: `U` for travel time,
/// `Mu` for latency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Flavor {
    U,
    Mu,
}

/// The quantity an allocation is scored by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Objective {
    Sum,
    Latency,
}

fn min3(a: Time, b: Time, c: Time) -> Time {
    a.min(b).min(c)
}

/// Travel time from `s_i` through the remaining three stops, `s_i` first and
/// pickups before their dropoffs. Not symmetric in its arguments.
pub fn u_pair(m: &DistanceMatrix, i: Request, j: Request) -> Time {
    let (si, ti, sj, tj) = (i.pickup, i.dropoff, j.pickup, j.dropoff);
    min3(
        m.get(si, sj) + m.get(sj, ti) + m.get(ti, tj),
        m.get(si, sj) + m.get(sj, tj) + m.get(tj, ti),
        m.get(si, ti) + m.get(ti, sj) + m.get(sj, tj),
    )
}

/// Waiting time analogue of [`u_pair`]: both dropoff arrivals measured from
/// `s_i`, minimized over the three continuations starting at `s_i`.
pub fn mu_pair(m: &DistanceMatrix, i: Request, j: Request) -> Time {
    let (si, ti, sj, tj) = (i.pickup, i.dropoff, j.pickup, j.dropoff);
    let via_sj_ti = m.get(si, sj) + m.get(sj, ti);
    let via_sj_tj = m.get(si, sj) + m.get(sj, tj);
    let via_ti = m.get(si, ti);
    min3(
        via_sj_ti + via_sj_ti + m.get(ti, tj),
        via_sj_tj + via_sj_tj + m.get(tj, ti),
        via_ti + via_ti + m.get(ti, sj) + m.get(sj, tj),
    )
}

/// Minimum travel time for the car at `dk` to serve requests `i` and `j`.
pub fn pair_cost(m: &DistanceMatrix, dk: LocationId, i: Request, j: Request) -> Time {
    let decomposed =
        (m.get(dk, i.pickup) + u_pair(m, i, j)).min(m.get(dk, j.pickup) + u_pair(m, j, i));
    debug_assert!(
        (decomposed - pair_cost_routes(m, dk, i, j)).abs() <= DEFAULT_TOLERANCE,
        "decomposed pair cost disagrees with the six-route enumeration"
    );
    decomposed
}

/// Minimum total latency (sum of the two dropoff arrival times) for the car
/// at `dk` to serve requests `i` and `j`.
pub fn pair_wait(m: &DistanceMatrix, dk: LocationId, i: Request, j: Request) -> Time {
    let decomposed = (2.0 * m.get(dk, i.pickup) + mu_pair(m, i, j))
        .min(2.0 * m.get(dk, j.pickup) + mu_pair(m, j, i));
    debug_assert!(
        (decomposed - pair_wait_routes(m, dk, i, j)).abs() <= DEFAULT_TOLERANCE,
        "decomposed pair wait disagrees with the six-order enumeration"
    );
    decomposed
}

/// Travel time by direct enumeration of the six feasible visit orders.
/// Redundant with [`pair_cost`]; kept as a cross-check against transcription
/// slips in the decomposed formula.
pub fn pair_cost_routes(m: &DistanceMatrix, dk: LocationId, i: Request, j: Request) -> Time {
    let mut best = Time::INFINITY;
    for (a, b) in [(i, j), (j, i)] {
        let (sa, ta, sb, tb) = (a.pickup, a.dropoff, b.pickup, b.dropoff);
        let head = m.get(dk, sa);
        best = best
            .min(head + m.get(sa, sb) + m.get(sb, ta) + m.get(ta, tb))
            .min(head + m.get(sa, sb) + m.get(sb, tb) + m.get(tb, ta))
            .min(head + m.get(sa, ta) + m.get(ta, sb) + m.get(sb, tb));
    }
    best
}

/// Latency by direct enumeration of the six feasible visit orders.
pub fn pair_wait_routes(m: &DistanceMatrix, dk: LocationId, i: Request, j: Request) -> Time {
    let mut best = Time::INFINITY;
    for (a, b) in [(i, j), (j, i)] {
        let (sa, ta, sb, tb) = (a.pickup, a.dropoff, b.pickup, b.dropoff);
        let head = m.get(dk, sa);
        // order sa sb ta tb: a alights first
        let arr_a = head + m.get(sa, sb) + m.get(sb, ta);
        best = best.min(arr_a + (arr_a + m.get(ta, tb)));
        // order sa sb tb ta: b alights first
        let arr_b = head + m.get(sa, sb) + m.get(sb, tb);
        best = best.min(arr_b + (arr_b + m.get(tb, ta)));
        // order sa ta sb tb: a served entirely first
        let solo_a = head + m.get(sa, ta);
        best = best.min(solo_a + (solo_a + m.get(ta, sb) + m.get(sb, tb)));
    }
    best
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum RouteObjective {
    TravelTime,
    Latency,
}

struct RouteSearch<'a> {
    metric: &'a DistanceMatrix,
    group: &'a [Request],
    objective: RouteObjective,
    best_value: Time,
    best_order: Vec<Visit>,
    current: Vec<Visit>,
}

impl RouteSearch<'_> {
    /// Depth-first walk over precedence-feasible visit orders in
    /// lexicographic order (request index ascending, pickup before dropoff),
    /// so the first optimum found is the canonical one. Both objectives only
    /// grow along a prefix, which justifies the pruning.
    fn descend(&mut self, at: LocationId, picked: u32, dropped: u32, elapsed: Time, value: Time) {
        if dropped.count_ones() as usize == self.group.len() {
            if value < self.best_value {
                self.best_value = value;
                self.best_order = self.current.clone();
            }
            return;
        }
        if value >= self.best_value {
            return;
        }
        for (r, req) in self.group.iter().enumerate() {
            let bit = 1 << r;
            if picked & bit == 0 {
                let leg = self.metric.get(at, req.pickup);
                let next_value = match self.objective {
                    RouteObjective::TravelTime => value + leg,
                    RouteObjective::Latency => value,
                };
                self.current.push(Visit::Pickup(r));
                self.descend(req.pickup, picked | bit, dropped, elapsed + leg, next_value);
                self.current.pop();
            } else if dropped & bit == 0 {
                let leg = self.metric.get(at, req.dropoff);
                let next_value = match self.objective {
                    RouteObjective::TravelTime => value + leg,
                    RouteObjective::Latency => value + elapsed + leg,
                };
                self.current.push(Visit::Dropoff(r));
                self.descend(req.dropoff, picked, dropped | bit, elapsed + leg, next_value);
                self.current.pop();
            }
        }
    }
}

fn group_route(
    m: &DistanceMatrix,
    dk: LocationId,
    group: &[Request],
    objective: RouteObjective,
) -> Result<(Time, Vec<Visit>), CostError> {
    if group.len() > MAX_GROUP_SIZE {
        return Err(CostError::GroupTooLarge { size: group.len(), max: MAX_GROUP_SIZE });
    }
    if group.is_empty() {
        return Ok((0.0, Vec::new()));
    }
    let mut search = RouteSearch {
        metric: m,
        group,
        objective,
        best_value: Time::INFINITY,
        best_order: Vec::new(),
        current: Vec::with_capacity(2 * group.len()),
    };
    search.descend(dk, 0, 0, 0.0, 0.0);
    Ok((search.best_value, search.best_order))
}

/// Exact minimum travel time for the car at `dk` to serve every request in
/// `group`, over all precedence-feasible visit orders, with the realizing
/// order. Visit payloads index into `group`. Groups above [`MAX_GROUP_SIZE`]
/// are refused rather than approximated.
pub fn group_cost(
    m: &DistanceMatrix,
    dk: LocationId,
    group: &[Request],
) -> Result<(Time, Vec<Visit>), CostError> {
    group_route(m, dk, group, RouteObjective::TravelTime)
}

/// Exact minimum total latency (sum over requests of the arrival time at
/// their dropoff) for the car at `dk` to serve `group`; same conventions as
/// [`group_cost`].
pub fn group_wait(
    m: &DistanceMatrix,
    dk: LocationId,
    group: &[Request],
) -> Result<(Time, Vec<Visit>), CostError> {
    group_route(m, dk, group, RouteObjective::Latency)
}

/// Precomputed `u` and `mu` tables over all ordered request pairs.
#[derive(Debug, Clone)]
pub struct CostTables {
    pub u: Vec<Vec<Time>>,
    pub mu: Vec<Vec<Time>>,
}

impl CostTables {
    pub fn build(m: &DistanceMatrix, requests: &[Request]) -> Self {
        let n = requests.len();
        let mut u = vec![vec![0.0; n]; n];
        let mut mu = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    u[i][j] = u_pair(m, requests[i], requests[j]);
                    mu[i][j] = mu_pair(m, requests[i], requests[j]);
                }
            }
        }
        Self { u, mu }
    }

    pub fn table(&self, flavor: Flavor) -> &Vec<Vec<Time>> {
        match flavor {
            Flavor::U => &self.u,
            Flavor::Mu => &self.mu,
        }
    }
}

fn check_partition(inst: &Instance, groups: &[Vec<usize>]) -> Result<(), CostError> {
    if groups.len() != inst.num_cars() {
        return Err(CostError::NotPartition {
            reason: format!("{} groups for {} cars", groups.len(), inst.num_cars()),
        });
    }
    let mut seen = vec![false; inst.num_requests()];
    for (car, group) in groups.iter().enumerate() {
        if group.len() != inst.capacity() {
            return Err(CostError::NotPartition {
                reason: format!(
                    "car {car} serves {} requests, capacity is {}",
                    group.len(),
                    inst.capacity()
                ),
            });
        }
        for &r in group {
            if r >= seen.len() {
                return Err(CostError::NotPartition {
                    reason: format!("request index {r} out of range"),
                });
            }
            if seen[r] {
                return Err(CostError::NotPartition {
                    reason: format!("request {r} assigned twice"),
                });
            }
            seen[r] = true;
        }
    }
    Ok(())
}

/// Scores a grouping: each car's group is routed optimally for `objective`,
/// the value divided by that car's speed, and the results summed into an
/// [`Allocation`] carrying the realized orders.
pub fn evaluate_allocation(
    inst: &Instance,
    groups: Vec<Vec<usize>>,
    objective: Objective,
) -> Result<Allocation, CostError> {
    check_partition(inst, &groups)?;
    let mut orders = Vec::with_capacity(groups.len());
    let mut total = 0.0;
    for (car, group) in groups.iter().enumerate() {
        let members: Vec<Request> = group.iter().map(|&r| inst.requests()[r]).collect();
        let dk = inst.cars()[car].location;
        let (value, local_order) = match objective {
            Objective::Sum => group_cost(inst.metric(), dk, &members)?,
            Objective::Latency => group_wait(inst.metric(), dk, &members)?,
        };
        total += value / inst.cars()[car].speed;
        orders.push(
            local_order
                .into_iter()
                .map(|v| match v {
                    Visit::Pickup(local) => Visit::Pickup(group[local]),
                    Visit::Dropoff(local) => Visit::Dropoff(group[local]),
                })
                .collect(),
        );
    }
    Ok(Allocation { groups, orders, objective: total })
}

/// Recomputed travel time of an allocation's grouping.
pub fn allocation_cost(inst: &Instance, allocation: &Allocation) -> Result<Time, CostError> {
    Ok(evaluate_allocation(inst, allocation.groups.clone(), Objective::Sum)?.objective)
}

/// Recomputed total latency of an allocation's grouping.
pub fn allocation_wait(inst: &Instance, allocation: &Allocation) -> Result<Time, CostError> {
    Ok(evaluate_allocation(inst, allocation.groups.clone(), Objective::Latency)?.objective)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{fixture_fig1, fixture_fig2, fixture_fig3, Car, Instance};
    use proptest::prelude::*;

    const TOL: f64 = DEFAULT_TOLERANCE;

    fn fig1() -> Instance {
        fixture_fig1()
    }

    #[test]
    fn u_pair_fig1_values() {
        let inst = fig1();
        let r = inst.requests();
        let m = inst.metric();
        // r1=(A,B), r2=(A,C): all three orderings walk three unit edges or two
        assert_eq!(u_pair(m, r[0], r[1]), 2.0);
        // r3=(B,B), r4=(C,C): a single unit hop
        assert_eq!(u_pair(m, r[2], r[3]), 1.0);
    }

    #[test]
    fn u_and_mu_vanish_when_everything_coincides() {
        let m = DistanceMatrix::uniform(1, 0.0);
        let r = Request::at(0);
        assert_eq!(u_pair(&m, r, r), 0.0);
        assert_eq!(mu_pair(&m, r, r), 0.0);
        assert_eq!(pair_cost(&m, 0, r, r), 0.0);
        assert_eq!(pair_wait(&m, 0, r, r), 0.0);
    }

    #[test]
    fn mu_pair_reduces_to_distance_for_stationary_requests() {
        let m = DistanceMatrix::uniform(2, 3.0);
        assert_eq!(mu_pair(&m, Request::at(0), Request::at(1)), 3.0);
        assert_eq!(u_pair(&m, Request::at(0), Request::at(1)), 3.0);
    }

    #[test]
    fn mu_pair_fig1_matches_term_enumeration() {
        let inst = fig1();
        let m = inst.metric();
        let (i, j) = (inst.requests()[0], inst.requests()[2]);
        let (si, ti, sj, tj) = (i.pickup, i.dropoff, j.pickup, j.dropoff);
        let t1 = m.get(si, sj) + m.get(sj, ti);
        let t2 = m.get(si, sj) + m.get(sj, tj);
        let t3 = m.get(si, ti);
        let expected = (t1 + t1 + m.get(ti, tj))
            .min(t2 + t2 + m.get(tj, ti))
            .min(t3 + t3 + m.get(ti, sj) + m.get(sj, tj));
        assert_eq!(mu_pair(m, i, j), expected);
    }

    #[test]
    fn pair_cost_fig_values() {
        let fig1 = fig1();
        let r = fig1.requests();
        assert_eq!(pair_cost(fig1.metric(), 0, r[0], r[2]), 1.0);

        let fig2 = fixture_fig2();
        let r2 = fig2.requests();
        let k1 = fig2.cars()[0].location;
        assert_eq!(pair_cost(fig2.metric(), k1, r2[0], r2[2]), 4.0);
    }

    #[test]
    fn pair_wait_fig3_values() {
        let fig3 = fixture_fig3();
        let r = fig3.requests();
        let k1 = fig3.cars()[0].location;
        // serving the co-located request first keeps both arrivals short
        assert_eq!(pair_wait(fig3.metric(), k1, r[2], r[0]), 2.0);
        let k3 = fig3.cars()[2].location;
        assert_eq!(pair_wait(fig3.metric(), k3, r[4], r[5]), 2.0);
    }

    #[test]
    fn group_cost_matches_pair_cost_at_capacity_two() {
        for inst in [fig1(), fixture_fig2(), fixture_fig3()] {
            let m = inst.metric();
            let reqs = inst.requests();
            for car in inst.cars() {
                for i in 0..reqs.len() {
                    for j in (i + 1)..reqs.len() {
                        let group = [reqs[i], reqs[j]];
                        let (cost, order) = group_cost(m, car.location, &group).unwrap();
                        assert_eq!(cost, pair_cost(m, car.location, reqs[i], reqs[j]));
                        assert_eq!(order.len(), 4);
                        let (wait, _) = group_wait(m, car.location, &group).unwrap();
                        assert_eq!(wait, pair_wait(m, car.location, reqs[i], reqs[j]));
                    }
                }
            }
        }
    }

    #[test]
    fn group_evaluators_handle_degenerate_groups() {
        let m = DistanceMatrix::uniform(1, 0.0);
        let group = vec![Request::at(0); 3];
        assert_eq!(group_cost(&m, 0, &group).unwrap().0, 0.0);
        assert_eq!(group_wait(&m, 0, &group).unwrap().0, 0.0);
        assert_eq!(group_cost(&m, 0, &[]).unwrap().0, 0.0);
        let too_big = vec![Request::at(0); 5];
        assert!(matches!(
            group_cost(&m, 0, &too_big),
            Err(CostError::GroupTooLarge { size: 5, max: 4 })
        ));
    }

    // Independent oracle: all (2a)! permutations of visit slots, filtered to
    // those where every pickup precedes its dropoff.
    fn permutation_filter_optimum(
        m: &DistanceMatrix,
        dk: LocationId,
        group: &[Request],
        latency: bool,
    ) -> Time {
        fn permutations(codes: &[usize]) -> Vec<Vec<usize>> {
            if codes.len() <= 1 {
                return vec![codes.to_vec()];
            }
            let mut out = Vec::new();
            for (pos, &code) in codes.iter().enumerate() {
                let mut rest = codes.to_vec();
                rest.remove(pos);
                for mut tail in permutations(&rest) {
                    tail.insert(0, code);
                    out.push(tail);
                }
            }
            out
        }
        let codes: Vec<usize> = (0..2 * group.len()).collect();
        let mut best = Time::INFINITY;
        'perm: for perm in permutations(&codes) {
            let mut picked = vec![false; group.len()];
            let mut at = dk;
            let mut elapsed = 0.0;
            let mut waited = 0.0;
            for code in perm {
                let r = code / 2;
                let is_dropoff = code % 2 == 1;
                if is_dropoff && !picked[r] {
                    continue 'perm;
                }
                if !is_dropoff && picked[r] {
                    continue 'perm;
                }
                let stop = if is_dropoff { group[r].dropoff } else { group[r].pickup };
                elapsed += m.get(at, stop);
                at = stop;
                if is_dropoff {
                    waited += elapsed;
                } else {
                    picked[r] = true;
                }
            }
            let value = if latency { waited } else { elapsed };
            best = best.min(value);
        }
        best
    }

    #[test]
    fn group_evaluators_match_permutation_filter_oracle_at_capacity_three() {
        for seed in [1u64, 2, 3, 4, 5] {
            let inst = crate::instances::random_instance(
                2,
                3,
                crate::instances::RequestMode::General,
                seed,
            )
            .unwrap();
            let m = inst.metric();
            let group: Vec<Request> = inst.requests()[0..3].to_vec();
            for car in inst.cars() {
                let (cost, _) = group_cost(m, car.location, &group).unwrap();
                let oracle = permutation_filter_optimum(m, car.location, &group, false);
                assert!((cost - oracle).abs() <= TOL, "cost {cost} vs oracle {oracle}");
                let (wait, _) = group_wait(m, car.location, &group).unwrap();
                let oracle_wait = permutation_filter_optimum(m, car.location, &group, true);
                assert!((wait - oracle_wait).abs() <= TOL);
            }
        }
    }

    #[test]
    fn group_order_is_feasible_and_achieves_the_value() {
        let inst =
            crate::instances::random_instance(2, 3, crate::instances::RequestMode::General, 11)
                .unwrap();
        let m = inst.metric();
        let group: Vec<Request> = inst.requests()[0..3].to_vec();
        let (cost, order) = group_cost(m, 0, &group).unwrap();
        let mut picked = vec![false; group.len()];
        let mut at = 0;
        let mut total = 0.0;
        for visit in &order {
            match visit {
                Visit::Pickup(r) => {
                    picked[*r] = true;
                    total += m.get(at, group[*r].pickup);
                    at = group[*r].pickup;
                }
                Visit::Dropoff(r) => {
                    assert!(picked[*r], "dropoff before pickup");
                    total += m.get(at, group[*r].dropoff);
                    at = group[*r].dropoff;
                }
            }
        }
        assert!((total - cost).abs() <= TOL);
    }

    #[test]
    fn allocation_totals_reproduce_reported_optima() {
        let fig1 = fig1();
        let alloc = evaluate_allocation(&fig1, vec![vec![0, 2], vec![1, 3]], Objective::Sum).unwrap();
        assert_eq!(alloc.objective, 2.0);

        let fig3 = fixture_fig3();
        let alloc =
            evaluate_allocation(&fig3, vec![vec![0, 2], vec![1, 3], vec![4, 5], vec![6, 7]], Objective::Latency)
                .unwrap();
        assert_eq!(alloc.objective, 8.0);
    }

    #[test]
    fn doubling_speeds_halves_the_objective() {
        let fig1 = fig1();
        let fast = Instance::new(
            fig1.metric().clone(),
            fig1.cars().iter().map(|c| Car::with_speed(c.location, 2.0)).collect(),
            fig1.requests().to_vec(),
        )
        .unwrap();
        let groups = vec![vec![0, 2], vec![1, 3]];
        let slow = evaluate_allocation(&fig1, groups.clone(), Objective::Sum).unwrap();
        let quick = evaluate_allocation(&fast, groups, Objective::Sum).unwrap();
        assert_eq!(quick.objective, slow.objective / 2.0);
    }

    #[test]
    fn allocation_rejects_non_partitions() {
        let fig1 = fig1();
        for groups in [
            vec![vec![0, 1], vec![1, 3]],       // duplicate
            vec![vec![0, 1, 2], vec![3]],       // wrong sizes
            vec![vec![0, 1]],                   // missing car
            vec![vec![0, 9], vec![1, 2]],       // out of range
        ] {
            assert!(matches!(
                evaluate_allocation(&fig1, groups, Objective::Sum),
                Err(CostError::NotPartition { .. })
            ));
        }
    }

    #[test]
    fn allocation_cost_and_wait_recompute_from_groups() {
        let fig1 = fig1();
        let alloc = evaluate_allocation(&fig1, vec![vec![0, 1], vec![2, 3]], Objective::Sum).unwrap();
        assert_eq!(allocation_cost(&fig1, &alloc).unwrap(), alloc.objective);
        let wait = allocation_wait(&fig1, &alloc).unwrap();
        let direct =
            evaluate_allocation(&fig1, alloc.groups.clone(), Objective::Latency).unwrap().objective;
        assert_eq!(wait, direct);
    }

    /// Random valid metric: a symmetric nonnegative integer matrix with zero
    /// diagonal, repaired by shortest-path closure.
    fn metric_strategy() -> impl Strategy<Value = DistanceMatrix> {
        (3usize..=6).prop_flat_map(|size| {
            proptest::collection::vec(0u32..=20, size * size).prop_map(move |vals| {
                let mut rows = vec![vec![0.0; size]; size];
                for x in 0..size {
                    for y in (x + 1)..size {
                        let v = vals[x * size + y] as f64;
                        rows[x][y] = v;
                        rows[y][x] = v;
                    }
                }
                let mut m = DistanceMatrix::from_rows(rows).unwrap();
                m.close();
                m
            })
        })
    }

    fn triple_strategy() -> impl Strategy<Value = (DistanceMatrix, LocationId, Request, Request)> {
        metric_strategy().prop_flat_map(|m| {
            let size = m.size();
            (Just(m), 0..size, 0..size, 0..size, 0..size, 0..size).prop_map(
                |(m, dk, si, ti, sj, tj)| (m, dk, Request::new(si, ti), Request::new(sj, tj)),
            )
        })
    }

    proptest! {
        #[test]
        fn closed_matrices_are_metrics(m in metric_strategy()) {
            prop_assert!(m.validate().is_valid());
        }

        #[test]
        fn decomposition_identities_hold((m, dk, i, j) in triple_strategy()) {
            let cost = (m.get(dk, i.pickup) + u_pair(&m, i, j))
                .min(m.get(dk, j.pickup) + u_pair(&m, j, i));
            prop_assert!((cost - pair_cost_routes(&m, dk, i, j)).abs() <= TOL);
            let wait = (2.0 * m.get(dk, i.pickup) + mu_pair(&m, i, j))
                .min(2.0 * m.get(dk, j.pickup) + mu_pair(&m, j, i));
            prop_assert!((wait - pair_wait_routes(&m, dk, i, j)).abs() <= TOL);
        }

        #[test]
        fn reversed_u_is_at_most_doubled((m, _dk, i, j) in triple_strategy()) {
            prop_assert!(u_pair(&m, j, i) <= 2.0 * u_pair(&m, i, j) + TOL);
        }

        #[test]
        fn full_tour_bounds_triple_pair_cost_on_realized_branch((m, dk, i, j) in triple_strategy()) {
            let cost = pair_cost(&m, dk, i, j);
            let first_branch = m.get(dk, i.pickup) + u_pair(&m, i, j);
            if (cost - first_branch).abs() <= TOL {
                let tour = m
                    .path_length(&[dk, i.pickup, i.dropoff, dk, j.pickup, j.dropoff])
                    .unwrap();
                prop_assert!(tour <= 3.0 * cost + TOL);
            }
            let second_branch = m.get(dk, j.pickup) + u_pair(&m, j, i);
            if (cost - second_branch).abs() <= TOL {
                let tour = m
                    .path_length(&[dk, j.pickup, j.dropoff, dk, i.pickup, i.dropoff])
                    .unwrap();
                prop_assert!(tour <= 3.0 * cost + TOL);
            }
        }

        #[test]
        fn doubled_first_leg_bound_holds((m, dk, i, j) in triple_strategy()) {
            // both heuristics' totals combined, capped by the doubled first leg
            let mu_ij = mu_pair(&m, i, j);
            let mu_ji = mu_pair(&m, j, i);
            let via_i = 2.0 * m.path_length(&[dk, i.pickup, i.dropoff]).unwrap()
                + m.path_length(&[i.dropoff, dk, j.pickup, j.dropoff]).unwrap();
            let via_j = 2.0 * m.path_length(&[dk, j.pickup, j.dropoff]).unwrap()
                + m.path_length(&[j.dropoff, dk, i.pickup, i.dropoff]).unwrap();
            let lhs = 2.0 * m.get(dk, i.pickup)
                + 2.0 * m.get(dk, j.pickup)
                + mu_ij
                + mu_ji
                + via_i.min(via_j);
            let rhs = (8.0 * m.get(dk, i.pickup) + 5.0 * mu_ij)
                .min(8.0 * m.get(dk, j.pickup) + 5.0 * mu_ji);
            prop_assert!(lhs <= rhs + TOL);
        }

        #[test]
        fn cost_table_inequalities_hold((m, _dk, i, j) in triple_strategy()) {
            let (u_ij, u_ji) = (u_pair(&m, i, j), u_pair(&m, j, i));
            let (mu_ij, mu_ji) = (mu_pair(&m, i, j), mu_pair(&m, j, i));
            let w_ss = m.get(i.pickup, j.pickup);
            let half_mu = (mu_ij + mu_ji) / 2.0 + w_ss;
            prop_assert!(half_mu <= 3.0 * u_ij.min(u_ji) + TOL);
            prop_assert!(half_mu <= 2.0 * mu_ij.min(mu_ji) + TOL);
            prop_assert!(u_ij + u_ji + 2.0 * w_ss <= 4.0 * mu_ij.min(mu_ji) + TOL);
        }

        #[test]
        fn path_reversal_is_length_preserving(m in metric_strategy(), raw in proptest::collection::vec(0usize..6, 1..6)) {
            let pts: Vec<usize> = raw.into_iter().map(|p| p % m.size()).collect();
            let rev: Vec<usize> = pts.iter().rev().copied().collect();
            let fwd = m.path_length(&pts).unwrap();
            let bwd = m.path_length(&rev).unwrap();
            prop_assert!((fwd - bwd).abs() <= TOL);
        }

        #[test]
        fn detours_never_shorten_paths(m in metric_strategy(), p in 0usize..6, q in 0usize..6, r in 0usize..6) {
            let (p, q, r) = (p % m.size(), q % m.size(), r % m.size());
            let direct = m.path_length(&[p, r]).unwrap();
            let via = m.path_length(&[p, q, r]).unwrap();
            prop_assert!(direct <= via + TOL);
        }
    }
}
