//! Brute-force enumeration of small instances and systems.
//!
//! Constraints are evaluated here from the raw instance fields, not through
//! `model` validation, so agreement with the other backends is a real check.

use thiserror::Error;

use crate::carrental::{Availability, Scenario};
use crate::model::{Certificate, Infeasibility, ProblemInstance, Relation, VarBounds, Witness};
use crate::{Scalar, System};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumerationBudget {
    pub max_points: u64,
    /// Stop collecting after this many witnesses.
    pub max_witnesses: Option<usize>,
}

impl Default for EnumerationBudget {
    fn default() -> Self {
        EnumerationBudget {
            max_points: 1 << 22,
            max_witnesses: None,
        }
    }
}

impl EnumerationBudget {
    pub fn points(max_points: u64) -> Self {
        EnumerationBudget {
            max_points: max_points.max(1),
            max_witnesses: None,
        }
    }

    fn first_only(self) -> Self {
        EnumerationBudget {
            max_witnesses: Some(1),
            ..self
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("state space of {state_space} points exceeds the budget of {budget}")]
    BudgetExceeded { state_space: u128, budget: u64 },
    #[error("variable {0} has no finite range")]
    Unbounded(String),
    #[error("malformed input: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Enumeration {
    /// Feasible points in lexicographic order.
    pub witnesses: Vec<Witness>,
    pub truncated: bool,
    pub state_space: u128,
}

/// A group of arcs that always carry the same value.
#[derive(Debug, Clone)]
struct Unit {
    arcs: Vec<usize>,
    lo: i64,
    hi: i64,
}

fn holds(rel: Relation, lhs: i64, rhs: i64) -> bool {
    match rel {
        Relation::Eq => lhs == rhs,
        Relation::Le => lhs <= rhs,
        Relation::Ge => lhs >= rhs,
    }
}

/// Row-major position without going through the instance helpers.
fn pos(inst: &ProblemInstance, i: usize, j: usize, t: usize) -> usize {
    (i * inst.n_dests + j) * inst.n_periods + t
}

struct InstanceEvaluator<'a> {
    inst: &'a ProblemInstance,
    forbidden: Vec<bool>,
}

impl<'a> InstanceEvaluator<'a> {
    fn new(inst: &'a ProblemInstance) -> Self {
        let mut forbidden = vec![false; inst.n_sources * inst.n_dests * inst.n_periods];
        for a in inst.forbidden.iter() {
            forbidden[pos(inst, a.source, a.dest, a.period)] = true;
        }
        InstanceEvaluator { inst, forbidden }
    }

    fn feasible(&self, x: &[i64]) -> bool {
        let inst = self.inst;
        for (k, &v) in x.iter().enumerate() {
            let b = inst.bounds[k];
            if v < b.lower || b.upper.is_some_and(|u| v > u) || (self.forbidden[k] && v != 0) {
                return false;
            }
        }
        for c in &inst.classes {
            let mut values = c
                .members
                .iter()
                .map(|m| x[pos(inst, m.source, m.dest, m.period)]);
            let Some(first) = values.next() else { continue };
            if values.any(|v| v != first) || c.shared_value.is_some_and(|t| t != first) {
                return false;
            }
        }
        for t in 0..inst.n_periods {
            for i in 0..inst.n_sources {
                let s: i64 = (0..inst.n_dests).map(|j| x[pos(inst, i, j, t)]).sum();
                if !holds(inst.row_relation, s, inst.row_supply[i][t]) {
                    return false;
                }
            }
            for j in 0..inst.n_dests {
                let s: i64 = (0..inst.n_sources).map(|i| x[pos(inst, i, j, t)]).sum();
                if !holds(inst.col_relation, s, inst.col_demand[j][t]) {
                    return false;
                }
            }
        }
        true
    }
}

/// Largest value an arc can take given its bound and any `<=`/`=` balance it
/// sits in, assuming the other arcs of that balance are at their lower bounds.
fn arc_cap(inst: &ProblemInstance, i: usize, j: usize, t: usize) -> Option<i64> {
    let mut cap = inst.bounds[pos(inst, i, j, t)].upper;
    let mut tighten = |c: i64| cap = Some(cap.map_or(c, |old: i64| old.min(c)));
    if inst.row_relation != Relation::Ge {
        let others: i64 = (0..inst.n_dests)
            .filter(|&k| k != j)
            .map(|k| inst.bounds[pos(inst, i, k, t)].lower)
            .sum();
        tighten(inst.row_supply[i][t] - others);
    }
    if inst.col_relation != Relation::Ge {
        let others: i64 = (0..inst.n_sources)
            .filter(|&k| k != i)
            .map(|k| inst.bounds[pos(inst, k, j, t)].lower)
            .sum();
        tighten(inst.col_demand[j][t] - others);
    }
    cap
}

fn instance_units(inst: &ProblemInstance) -> Result<Vec<Unit>, OracleError> {
    let n = inst.n_sources * inst.n_dests * inst.n_periods;
    if inst.bounds.len() != n
        || inst.row_supply.len() != inst.n_sources
        || inst.col_demand.len() != inst.n_dests
        || inst.row_supply.iter().chain(&inst.col_demand).any(|r| r.len() != inst.n_periods)
    {
        return Err(OracleError::Malformed("grid dimensions disagree".into()));
    }
    let mut owner: Vec<Option<usize>> = vec![None; n];
    let mut units: Vec<Unit> = Vec::new();
    let mut fixed: Vec<Option<i64>> = Vec::new();
    for c in &inst.classes {
        let u = units.len();
        let mut arcs = Vec::new();
        for m in &c.members {
            if m.source >= inst.n_sources || m.dest >= inst.n_dests || m.period >= inst.n_periods {
                return Err(OracleError::Malformed(format!("class {} leaves the grid", c.id)));
            }
            let p = pos(inst, m.source, m.dest, m.period);
            match owner[p] {
                Some(other) if other != u => {
                    return Err(OracleError::Malformed(format!("class {} overlaps another class", c.id)))
                }
                Some(_) => {}
                None => {
                    owner[p] = Some(u);
                    arcs.push(p);
                }
            }
        }
        if arcs.is_empty() {
            continue;
        }
        arcs.sort_unstable();
        units.push(Unit { arcs, lo: 0, hi: 0 });
        fixed.push(c.shared_value);
    }
    for (p, o) in owner.iter_mut().enumerate() {
        if o.is_none() {
            *o = Some(units.len());
            units.push(Unit {
                arcs: vec![p],
                lo: 0,
                hi: 0,
            });
            fixed.push(None);
        }
    }
    let forbidden: Vec<usize> = inst
        .forbidden
        .iter()
        .map(|a| pos(inst, a.source, a.dest, a.period))
        .collect();
    for (u, unit) in units.iter_mut().enumerate() {
        let mut lo = i64::MIN;
        let mut hi: Option<i64> = None;
        for &p in &unit.arcs {
            let (i, rest) = (p / (inst.n_dests * inst.n_periods), p % (inst.n_dests * inst.n_periods));
            let (j, t) = (rest / inst.n_periods, rest % inst.n_periods);
            lo = lo.max(inst.bounds[p].lower);
            if let Some(c) = arc_cap(inst, i, j, t) {
                hi = Some(hi.map_or(c, |h| h.min(c)));
            }
        }
        let zero = unit.arcs.iter().any(|p| forbidden.contains(p));
        let pin = match (zero, fixed[u]) {
            (true, Some(v)) if v != 0 => Some(None),
            (true, _) => Some(Some(0)),
            (false, Some(v)) => Some(Some(v)),
            (false, None) => None,
        };
        match pin {
            Some(None) => {
                unit.lo = 0;
                unit.hi = -1;
            }
            Some(Some(v)) => {
                let inside = v >= lo && hi.is_none_or(|h| v <= h);
                unit.lo = v;
                unit.hi = if inside { v } else { v - 1 };
            }
            None => {
                let Some(h) = hi else {
                    let p = unit.arcs[0];
                    return Err(OracleError::Unbounded(format!("arc at position {p}")));
                };
                unit.lo = lo;
                unit.hi = h;
            }
        }
    }
    units.sort_by_key(|u| u.arcs[0]);
    Ok(units)
}

fn state_space(ranges: impl Iterator<Item = (i64, i64)>) -> u128 {
    ranges.fold(1u128, |acc, (lo, hi)| {
        let width = if hi < lo { 0 } else { (hi - lo) as u128 + 1 };
        acc.saturating_mul(width)
    })
}

/// Visits every point of the box in lexicographic order; `visit` returns
/// `false` to stop.
fn odometer(ranges: &[(i64, i64)], mut visit: impl FnMut(&[i64]) -> bool) {
    if ranges.iter().any(|(lo, hi)| hi < lo) {
        return;
    }
    let mut point: Vec<i64> = ranges.iter().map(|r| r.0).collect();
    loop {
        if !visit(&point) {
            return;
        }
        let mut k = point.len();
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            if point[k] < ranges[k].1 {
                point[k] += 1;
                break;
            }
            point[k] = ranges[k].0;
        }
    }
}

fn check_budget(space: u128, budget: EnumerationBudget) -> Result<(), OracleError> {
    if space > budget.max_points as u128 {
        return Err(OracleError::BudgetExceeded {
            state_space: space,
            budget: budget.max_points,
        });
    }
    Ok(())
}

/// All feasible witnesses of an instance.
///
/// Classes and forbidden arcs shrink the enumeration: each class is one
/// coordinate and forbidden arcs are pinned to zero. Every candidate is then
/// checked against all raw constraints.
pub fn enumerate_feasible(
    inst: &ProblemInstance,
    budget: EnumerationBudget,
) -> Result<Enumeration, OracleError> {
    let units = instance_units(inst)?;
    let ranges: Vec<(i64, i64)> = units.iter().map(|u| (u.lo, u.hi)).collect();
    let space = state_space(ranges.iter().copied());
    check_budget(space, budget)?;
    let eval = InstanceEvaluator::new(inst);
    let mut x = vec![0i64; inst.bounds.len()];
    let mut witnesses = Vec::new();
    let mut truncated = false;
    odometer(&ranges, |point| {
        for (unit, &v) in units.iter().zip(point) {
            for &p in &unit.arcs {
                x[p] = v;
            }
        }
        if eval.feasible(&x) {
            witnesses.push(Witness::new(x.clone()));
            if budget.max_witnesses.is_some_and(|m| witnesses.len() >= m) {
                truncated = true;
                return false;
            }
        }
        true
    });
    Ok(Enumeration {
        witnesses,
        truncated,
        state_space: space,
    })
}

fn verdict_from(e: Result<Enumeration, OracleError>) -> Certificate {
    match e {
        Ok(e) => match e.witnesses.into_iter().next() {
            Some(w) => Certificate::Feasible(w),
            None => Certificate::Infeasible(Infeasibility::Exhausted {
                method: "oracle".into(),
                explored: e.state_space.min(u64::MAX as u128) as u64,
            }),
        },
        Err(err) => Certificate::Unknown(err.to_string()),
    }
}

/// Feasible with the lexicographically smallest witness, Infeasible after an
/// empty complete enumeration, Unknown beyond the budget.
pub fn oracle_verdict(inst: &ProblemInstance, budget: EnumerationBudget) -> Certificate {
    verdict_from(enumerate_feasible(inst, budget.first_only()))
}

/// Number of independent coordinates the oracle enumerates.
pub fn effective_variables(inst: &ProblemInstance) -> Result<usize, OracleError> {
    Ok(instance_units(inst)?.iter().filter(|u| u.hi > u.lo).count())
}

/// Objective value at `x`, including both penalty families with their shared
/// values chosen optimally.
fn objective_at(inst: &ProblemInstance, x: &[i64]) -> Option<i64> {
    let obj = inst.objective.as_ref()?;
    let mut total: i64 = obj.linear.iter().zip(x).map(|(c, v)| c * v).sum();
    for (a, w) in &obj.forbidden_penalties {
        total += w * x[pos(inst, a.source, a.dest, a.period)];
    }
    for p in &obj.class_penalties {
        let values: Vec<i64> = p
            .members
            .iter()
            .map(|m| x[pos(inst, m.source, m.dest, m.period)])
            .collect();
        let (vmin, vmax) = (*values.iter().min()?, *values.iter().max()?);
        let lb = p.value_bounds.lower;
        let ub = p.value_bounds.upper.unwrap_or(i64::MAX);
        let (lo, hi) = if ub < vmin {
            (ub, ub)
        } else if lb > vmax {
            (lb, lb)
        } else {
            (lb.max(vmin), ub.min(vmax))
        };
        let best = (lo..=hi)
            .map(|t| values.iter().map(|v| (v - t) * (v - t)).sum::<i64>())
            .min()?;
        total += p.weight * best;
    }
    Some(total)
}

/// Exhaustive minimum of the instance objective over all feasible points;
/// ties go to the lexicographically smallest witness.
pub fn exhaustive_min(
    inst: &ProblemInstance,
    budget: EnumerationBudget,
) -> Result<Option<(i64, Witness)>, OracleError> {
    if inst.objective.is_none() {
        return Err(OracleError::Malformed("instance has no objective".into()));
    }
    let all = enumerate_feasible(
        inst,
        EnumerationBudget {
            max_witnesses: None,
            ..budget
        },
    )?;
    let mut best: Option<(i64, Witness)> = None;
    for w in all.witnesses {
        let Some(v) = objective_at(inst, &w.values) else {
            continue;
        };
        if best.as_ref().is_none_or(|(b, _)| v < *b) {
            best = Some((v, w));
        }
    }
    Ok(best)
}

/// A system constraint scaled to integer coefficients.
struct IntConstraint {
    terms: Vec<(usize, i128)>,
    relation: Relation,
    rhs: i128,
}

fn integer_constraints(system: &System) -> Result<Vec<IntConstraint>, OracleError> {
    let mut out = Vec::new();
    for (c, label) in system.source_constraints() {
        let mut refs: Vec<&crate::Rational> = c.coeffs.values().collect();
        refs.push(&c.rhs);
        let den_lcm = refs
            .iter()
            .fold(num_bigint::BigInt::from(1), |acc, r| num_integer::lcm(acc, r.denom().clone()));
        let scale = crate::Rational::from_integer(den_lcm);
        let to_i128 = |r: &crate::Rational| -> Result<i128, OracleError> {
            let v = (r * &scale).to_integer();
            i128::try_from(v).map_err(|_| OracleError::Malformed(format!("constraint {label} overflows")))
        };
        let mut terms = Vec::with_capacity(c.coeffs.len());
        for (v, a) in &c.coeffs {
            terms.push((*v, to_i128(a)?));
        }
        out.push(IntConstraint {
            terms,
            relation: c.relation,
            rhs: to_i128(&c.rhs)?,
        });
    }
    Ok(out)
}

/// All integer points of a system within `bounds`, one value per variable.
pub fn enumerate_system(
    system: &System,
    bounds: &[VarBounds],
    budget: EnumerationBudget,
) -> Result<Enumeration, OracleError> {
    if bounds.len() != system.variables().len() {
        return Err(OracleError::Malformed(format!(
            "{} bounds for {} variables",
            bounds.len(),
            system.variables().len()
        )));
    }
    let mut ranges = Vec::with_capacity(bounds.len());
    for (v, b) in bounds.iter().enumerate() {
        match b.upper {
            Some(u) => ranges.push((b.lower, u)),
            None => return Err(OracleError::Unbounded(system.name(v).to_string())),
        }
    }
    let space = state_space(ranges.iter().copied());
    check_budget(space, budget)?;
    let rows = integer_constraints(system)?;
    let mut witnesses = Vec::new();
    let mut truncated = false;
    odometer(&ranges, |point| {
        let ok = rows.iter().all(|r| {
            let lhs: i128 = r.terms.iter().map(|(v, a)| a * point[*v] as i128).sum();
            match r.relation {
                Relation::Eq => lhs == r.rhs,
                Relation::Le => lhs <= r.rhs,
                Relation::Ge => lhs >= r.rhs,
            }
        });
        if ok {
            witnesses.push(Witness::new(point.to_vec()));
            if budget.max_witnesses.is_some_and(|m| witnesses.len() >= m) {
                truncated = true;
                return false;
            }
        }
        true
    });
    Ok(Enumeration {
        witnesses,
        truncated,
        state_space: space,
    })
}

pub fn system_verdict(system: &System, bounds: &[VarBounds], budget: EnumerationBudget) -> Certificate {
    verdict_from(enumerate_system(system, bounds, budget.first_only()))
}

/// Whether a rational point satisfies every source constraint of `system`.
pub fn system_holds_at(system: &System, point: &[crate::Rational]) -> bool {
    system.source_constraints().iter().all(|(c, _)| {
        let lhs = c
            .coeffs
            .iter()
            .fold(crate::Rational::from_int(0), |acc, (v, a)| acc + a * &point[*v]);
        match c.relation {
            Relation::Eq => lhs == c.rhs,
            Relation::Le => lhs <= c.rhs,
            Relation::Ge => lhs >= c.rhs,
        }
    })
}

/// Car-level ground truth for a rostered scenario: can every request get
/// its quantity of distinct physical cars, each of an allowed model and
/// available on every day of the request, with no car serving two requests
/// on the same day? `None` without a roster.
pub fn roster_accepts(scenario: &Scenario) -> Option<bool> {
    let Availability::Roster(cars) = &scenario.availability else {
        return None;
    };
    let requests: Vec<(usize, usize, usize)> = scenario
        .requests
        .iter()
        .map(|r| (r.start, r.start + r.duration - 1, r.quantity.max(0) as usize))
        .collect();
    let eligible: Vec<Vec<usize>> = scenario
        .requests
        .iter()
        .map(|r| {
            cars.iter()
                .enumerate()
                .filter(|(_, c)| {
                    r.models.contains(&c.model)
                        && (r.start..r.start + r.duration).all(|d| c.days.contains(&d))
                })
                .map(|(k, _)| k)
                .collect()
        })
        .collect();
    // busy[car] lists the day ranges the car already serves.
    let mut busy: Vec<Vec<(usize, usize)>> = vec![Vec::new(); cars.len()];
    Some(place(0, &requests, &eligible, &mut busy))
}

fn place(
    r: usize,
    requests: &[(usize, usize, usize)],
    eligible: &[Vec<usize>],
    busy: &mut Vec<Vec<(usize, usize)>>,
) -> bool {
    if r == requests.len() {
        return true;
    }
    let (start, end, qty) = requests[r];
    let free: Vec<usize> = eligible[r]
        .iter()
        .copied()
        .filter(|&c| busy[c].iter().all(|&(s, e)| e < start || end < s))
        .collect();
    choose(&free, qty, 0, &mut Vec::new(), &mut |chosen| {
        for &c in chosen {
            busy[c].push((start, end));
        }
        let ok = place(r + 1, requests, eligible, busy);
        for &c in chosen {
            busy[c].pop();
        }
        ok
    })
}

/// Tries every `k`-subset of `items`; stops at the first accepted one.
fn choose(
    items: &[usize],
    k: usize,
    from: usize,
    chosen: &mut Vec<usize>,
    accept: &mut dyn FnMut(&[usize]) -> bool,
) -> bool {
    if chosen.len() == k {
        return accept(chosen);
    }
    if items.len() - from < k - chosen.len() {
        return false;
    }
    for idx in from..items.len() {
        chosen.push(items[idx]);
        if choose(items, k, idx + 1, chosen, accept) {
            return true;
        }
        chosen.pop();
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fbce::LinearConstraint;
    use crate::model::{ArcIndex, EqualFlowClass, Objective};

    fn assignment_2x2() -> ProblemInstance {
        let mut inst = ProblemInstance::transportation(&[1, 1], &[1, 1]);
        inst.set_all_bounds(VarBounds::binary());
        inst
    }

    #[test]
    fn two_by_two_assignment_has_two_permutations() {
        let e = enumerate_feasible(&assignment_2x2(), EnumerationBudget::default()).unwrap();
        let points: Vec<Vec<i64>> = e.witnesses.into_iter().map(|w| w.values).collect();
        assert_eq!(points, vec![vec![0, 1, 1, 0], vec![1, 0, 0, 1]]);
        assert!(!e.truncated);
    }

    #[test]
    fn verdict_is_lexicographically_smallest() {
        let c = oracle_verdict(&assignment_2x2(), EnumerationBudget::default());
        assert_eq!(c.witness().unwrap().values, vec![0, 1, 1, 0]);
    }

    #[test]
    fn system_sum_to_one() {
        let mut s = System::with_variables(["x", "y"]);
        s.add(LinearConstraint::from_ints(&[(0, 1), (1, 1)], Relation::Eq, 1), "sum");
        let e = enumerate_system(&s, &[VarBounds::binary(); 2], EnumerationBudget::default()).unwrap();
        let points: Vec<Vec<i64>> = e.witnesses.into_iter().map(|w| w.values).collect();
        assert_eq!(points, vec![vec![0, 1], vec![1, 0]]);
    }

    #[test]
    fn budget_is_enforced() {
        let s = System::with_variables(["a", "b", "c"]);
        let err = enumerate_system(&s, &[VarBounds::new(0, 9); 3], EnumerationBudget::points(999)).unwrap_err();
        assert_eq!(
            err,
            OracleError::BudgetExceeded {
                state_space: 1000,
                budget: 999
            }
        );
        assert!(matches!(
            system_verdict(&s, &[VarBounds::new(0, 9); 3], EnumerationBudget::points(999)),
            Certificate::Unknown(_)
        ));
    }

    #[test]
    fn infeasible_instance_is_exhausted() {
        let inst = ProblemInstance::transportation(&[2], &[1]);
        assert!(oracle_verdict(&inst, EnumerationBudget::default()).is_infeasible());
    }

    #[test]
    fn classes_and_forbidden_arcs_reduce_the_space() {
        let mut inst = ProblemInstance::new(1, 2, 2);
        inst.set_all_bounds(VarBounds::binary());
        inst.row_relation = Relation::Le;
        inst.col_relation = Relation::Le;
        inst.row_supply = vec![vec![1, 1]];
        inst.col_demand = vec![vec![1, 1], vec![1, 1]];
        inst.classes.push(EqualFlowClass::new(
            "c",
            vec![ArcIndex::new(0, 0, 0), ArcIndex::new(0, 0, 1)],
        ));
        inst.forbidden.insert(ArcIndex::new(0, 1, 0));
        let e = enumerate_feasible(&inst, EnumerationBudget::default()).unwrap();
        // Class in {0,1}, (0,1,1) in {0,1}, (0,1,0) pinned.
        assert_eq!(e.state_space, 4);
        assert_eq!(e.witnesses.len(), 3);
        assert_eq!(effective_variables(&inst).unwrap(), 2);
    }

    #[test]
    fn exhaustive_min_prefers_cheap_route() {
        let mut inst = ProblemInstance::transportation(&[1], &[1, 0]);
        inst.col_relation = Relation::Le;
        inst.col_demand = vec![vec![1], vec![1]];
        inst.objective = Some(Objective {
            linear: vec![5, 2],
            ..Default::default()
        });
        let (v, w) = exhaustive_min(&inst, EnumerationBudget::default()).unwrap().unwrap();
        assert_eq!((v, w.values), (2, vec![0, 1]));
    }
}
