//! Exact integer feasibility and minimization by depth-first search with
//! interval propagation.
//!
//! Rows are taken from the system's live (normalized) constraints, whose
//! coefficients are coprime integers, so propagation runs in `i128` with the
//! right-hand side rounded down. Objectives stay in the system's scalar type.

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::fbce::{self, ConstraintSystem, VarId};
use crate::model::{
    validate_witness, witness_violation, Certificate, Infeasibility, ProblemInstance, VarBounds,
    Witness,
};
use crate::reform::{self, ContractedSystem};
use crate::scalar::Scalar;
use crate::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BranchPolicy {
    #[default]
    FirstUnassigned,
    /// Smallest remaining domain first.
    MostConstrained,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ObjectiveMode {
    #[default]
    Feasibility,
    Minimize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchConfig {
    pub node_limit: u64,
    pub time_limit: Option<Duration>,
    pub branch_policy: BranchPolicy,
    pub objective_mode: ObjectiveMode,
    /// Eliminate singleton-occurrence variables before searching.
    pub presolve: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            node_limit: 5_000_000,
            time_limit: Some(Duration::from_secs(60)),
            branch_policy: BranchPolicy::FirstUnassigned,
            objective_mode: ObjectiveMode::Feasibility,
            presolve: true,
        }
    }
}

impl SearchConfig {
    pub fn minimize() -> Self {
        SearchConfig {
            objective_mode: ObjectiveMode::Minimize,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchStatus {
    Complete,
    LimitHit,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchResult<F = Rational> {
    pub certificate: Certificate<F>,
    pub objective_value: Option<F>,
    pub nodes_explored: u64,
    pub status: SearchStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SearchError {
    #[error("variable {0} has no finite bound after propagation")]
    Unbounded(String),
    #[error("expected {expected} variable bounds, got {found}")]
    BoundsLength { expected: usize, found: usize },
    #[error("coefficient of {0} does not fit in 64 bits")]
    Overflow(String),
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
}

/// `weight * (sum terms + constant)^2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SquareTerm<F> {
    pub weight: F,
    pub terms: Vec<(VarId, F)>,
    pub constant: F,
}

/// Linear plus weighted-square objective over system variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Objective<F> {
    pub linear: Vec<(VarId, F)>,
    pub constant: F,
    pub squares: Vec<SquareTerm<F>>,
}

impl<F: Scalar> Default for Objective<F> {
    fn default() -> Self {
        Objective {
            linear: Vec::new(),
            constant: F::zero(),
            squares: Vec::new(),
        }
    }
}

impl<F: Scalar> Objective<F> {
    pub fn linear(terms: Vec<(VarId, F)>) -> Self {
        Objective {
            linear: terms,
            ..Default::default()
        }
    }

    pub fn evaluate(&self, point: &[i64]) -> F {
        let lin = self
            .linear
            .iter()
            .fold(self.constant.clone(), |acc, (v, c)| {
                acc + c.clone() * F::from_int(point[*v])
            });
        self.squares.iter().fold(lin, |acc, sq| {
            let e = sq.terms.iter().fold(sq.constant.clone(), |e, (v, c)| {
                e + c.clone() * F::from_int(point[*v])
            });
            acc + sq.weight.clone() * e.clone() * e
        })
    }

    /// Admissible lower bound over a box of domains.
    fn lower_bound(&self, dom: &[(i128, i128)]) -> F {
        let at = |x: i128| F::from_int(x as i64);
        let lin = self.linear.iter().fold(self.constant.clone(), |acc, (v, c)| {
            let (lo, hi) = dom[*v];
            let a = c.clone() * at(lo);
            let b = c.clone() * at(hi);
            acc + a.min(b)
        });
        self.squares.iter().fold(lin, |acc, sq| {
            let (mut lo, mut hi) = (sq.constant.clone(), sq.constant.clone());
            for (v, c) in &sq.terms {
                let (dl, dh) = dom[*v];
                let a = c.clone() * at(dl);
                let b = c.clone() * at(dh);
                lo = lo + a.clone().min(b.clone());
                hi = hi + a.max(b);
            }
            let m = if !lo.is_positive() && !hi.is_negative() {
                F::zero()
            } else if lo.is_positive() {
                lo.clone() * lo.clone()
            } else {
                hi.clone() * hi.clone()
            };
            if sq.weight.is_negative() {
                acc + sq.weight.clone() * (lo.clone() * lo).max(hi.clone() * hi)
            } else {
                acc + sq.weight.clone() * m
            }
        })
    }
}

const NEG_INF: i128 = i128::MIN / 4;
const POS_INF: i128 = i128::MAX / 4;

/// `a·x <= rhs` in integers, for rows with integral coefficients.
#[derive(Debug, Clone)]
struct IntRow {
    terms: Vec<(VarId, i128)>,
    rhs: i128,
}

fn floor_div(a: i128, b: i128) -> i128 {
    let q = a / b;
    if (a % b != 0) && ((a < 0) != (b < 0)) {
        q - 1
    } else {
        q
    }
}

fn ceil_div(a: i128, b: i128) -> i128 {
    -floor_div(-a, b)
}

/// Tightens domains to a fixpoint. Returns `false` on a wipe-out.
fn propagate(rows: &[IntRow], watch: &[Vec<usize>], dom: &mut [(i128, i128)], seeds: &[usize]) -> bool {
    let mut queued = vec![false; rows.len()];
    let mut queue: Vec<usize> = Vec::new();
    for &r in seeds {
        if !queued[r] {
            queued[r] = true;
            queue.push(r);
        }
    }
    while let Some(r) = queue.pop() {
        queued[r] = false;
        let row = &rows[r];
        let mut min_fin: i128 = 0;
        let mut n_inf = 0usize;
        for &(v, a) in &row.terms {
            let (lo, hi) = dom[v];
            let bound = if a > 0 { lo } else { hi };
            if bound <= NEG_INF || bound >= POS_INF {
                n_inf += 1;
            } else {
                min_fin += a * bound;
            }
        }
        if n_inf == 0 && min_fin > row.rhs {
            return false;
        }
        if n_inf > 1 {
            continue;
        }
        for &(v, a) in &row.terms {
            let (lo, hi) = dom[v];
            let bound = if a > 0 { lo } else { hi };
            let own_inf = bound <= NEG_INF || bound >= POS_INF;
            if n_inf == 1 && !own_inf {
                continue;
            }
            let rest = if own_inf { min_fin } else { min_fin - a * bound };
            let slack = row.rhs - rest;
            let changed = if a > 0 {
                let nh = floor_div(slack, a);
                if nh < hi {
                    dom[v].1 = nh;
                    true
                } else {
                    false
                }
            } else {
                let nl = ceil_div(slack, a);
                if nl > lo {
                    dom[v].0 = nl;
                    true
                } else {
                    false
                }
            };
            if changed {
                if dom[v].0 > dom[v].1 {
                    return false;
                }
                for &other in &watch[v] {
                    if other != r && !queued[other] {
                        queued[other] = true;
                        queue.push(other);
                    }
                }
            }
        }
    }
    true
}

struct Searcher<'a, F: Scalar> {
    sys: &'a ConstraintSystem<F>,
    rows: Vec<IntRow>,
    watch: Vec<Vec<usize>>,
    vars: Vec<VarId>,
    objective: Option<&'a Objective<F>>,
    cfg: &'a SearchConfig,
    nodes: u64,
    started: Instant,
    limit_hit: bool,
    best: Option<(F, Vec<i64>)>,
}

impl<F: Scalar> Searcher<'_, F> {
    fn out_of_budget(&mut self) -> bool {
        if self.nodes >= self.cfg.node_limit {
            self.limit_hit = true;
        } else if self.nodes % 1024 == 0 {
            if let Some(t) = self.cfg.time_limit {
                if self.started.elapsed() > t {
                    self.limit_hit = true;
                }
            }
        }
        self.limit_hit
    }

    fn pick(&self, dom: &[(i128, i128)]) -> Option<VarId> {
        let open = self.vars.iter().copied().filter(|&v| dom[v].0 < dom[v].1);
        match self.cfg.branch_policy {
            BranchPolicy::FirstUnassigned => open.min(),
            BranchPolicy::MostConstrained => open.min_by_key(|&v| (dom[v].1 - dom[v].0, v)),
        }
    }

    /// Returns `true` to stop the whole search.
    fn dfs(&mut self, dom: Vec<(i128, i128)>) -> bool {
        self.nodes += 1;
        if self.out_of_budget() {
            return true;
        }
        let minimizing = self.cfg.objective_mode == ObjectiveMode::Minimize && self.objective.is_some();
        if minimizing {
            if let (Some(obj), Some((best, _))) = (self.objective, &self.best) {
                if obj.lower_bound(&dom) >= *best {
                    return false;
                }
            }
        }
        let Some(var) = self.pick(&dom) else {
            return self.leaf(&dom, minimizing);
        };
        let (lo, hi) = dom[var];
        for value in lo..=hi {
            let mut child = dom.clone();
            child[var] = (value, value);
            if propagate(&self.rows, &self.watch, &mut child, &self.watch[var]) && self.dfs(child) {
                return true;
            }
        }
        false
    }

    fn leaf(&mut self, dom: &[(i128, i128)], minimizing: bool) -> bool {
        let mut point: Vec<F> = vec![F::zero(); self.sys.variables().len()];
        for &v in &self.vars {
            point[v] = F::from_int(dom[v].0 as i64);
        }
        if !fbce::complete_point(self.sys, &mut point) {
            return false;
        }
        let Some(values) = point.iter().map(|p| p.to_int()).collect::<Option<Vec<i64>>>() else {
            return false;
        };
        if !minimizing {
            self.best = Some((F::zero(), values));
            return true;
        }
        let value = self.objective.expect("minimizing").evaluate(&values);
        if self.best.as_ref().is_none_or(|(b, _)| value < *b) {
            self.best = Some((value, values));
        }
        false
    }
}

/// Integer search over the live rows of `system`.
///
/// `bounds` has one entry per system variable. Infinite bounds are accepted
/// as long as propagation from the rows makes them finite. Variables already
/// eliminated from `system` are recovered from its elimination stages; leaves
/// where that recovery fails to land on integers are rejected.
pub fn solve<F: Scalar>(
    system: &ConstraintSystem<F>,
    bounds: &[VarBounds],
    objective: Option<&Objective<F>>,
    cfg: &SearchConfig,
) -> Result<SearchResult<F>, SearchError> {
    let n = system.variables().len();
    if bounds.len() != n {
        return Err(SearchError::BoundsLength {
            expected: n,
            found: bounds.len(),
        });
    }
    let vars = system.live_variables();
    let mut rows = Vec::new();
    for r in system.rows() {
        let mut terms = Vec::with_capacity(r.coeffs().len());
        for (v, a) in r.coeffs() {
            match a.to_int() {
                Some(a) => terms.push((*v, a as i128)),
                None => return Err(SearchError::Overflow(system.name(*v).to_string())),
            }
        }
        let rhs = r
            .rhs()
            .floor_int()
            .ok_or_else(|| SearchError::Overflow("right-hand side".into()))?;
        rows.push(IntRow {
            terms,
            rhs: rhs as i128,
        });
    }
    let mut watch = vec![Vec::new(); n];
    for (k, r) in rows.iter().enumerate() {
        for (v, _) in &r.terms {
            watch[*v].push(k);
        }
    }
    let mut dom: Vec<(i128, i128)> = bounds
        .iter()
        .map(|b| (b.lower as i128, b.upper.map_or(POS_INF, |u| u as i128)))
        .collect();
    let started = Instant::now();
    let all: Vec<usize> = (0..rows.len()).collect();
    let root_ok = dom.iter().all(|(l, h)| l <= h) && propagate(&rows, &watch, &mut dom, &all);
    if root_ok {
        for &v in &vars {
            if dom[v].1 >= POS_INF || dom[v].0 <= NEG_INF {
                return Err(SearchError::Unbounded(system.name(v).to_string()));
            }
        }
    }
    let mut s = Searcher {
        sys: system,
        rows,
        watch,
        vars,
        objective,
        cfg,
        nodes: 0,
        started,
        limit_hit: false,
        best: None,
    };
    if root_ok {
        s.dfs(dom);
    } else {
        s.nodes = 1;
    }
    let minimizing = cfg.objective_mode == ObjectiveMode::Minimize;
    let (certificate, objective_value, status) = match (s.best.take(), s.limit_hit) {
        (Some((value, w)), limit) => {
            let status = if limit {
                SearchStatus::LimitHit
            } else {
                SearchStatus::Complete
            };
            let obj = match (minimizing, objective) {
                (true, Some(_)) => Some(value),
                (_, Some(o)) => Some(o.evaluate(&w)),
                _ => None,
            };
            (Certificate::Feasible(Witness::new(w)), obj, status)
        }
        (None, true) => (
            Certificate::Unknown(format!("search limit reached after {} nodes", s.nodes)),
            None,
            SearchStatus::LimitHit,
        ),
        (None, false) => (
            Certificate::Infeasible(Infeasibility::Exhausted {
                method: "search".into(),
                explored: s.nodes,
            }),
            None,
            SearchStatus::Complete,
        ),
    };
    Ok(SearchResult {
        certificate,
        objective_value,
        nodes_explored: s.nodes,
        status,
    })
}

/// Variables whose elimination keeps integer feasibility exact: they occur in
/// one multi-variable row with a unit coefficient, all of that row's
/// coefficients are integral, and their other rows are plain bounds.
fn singleton_candidates<F: Scalar>(sys: &ConstraintSystem<F>) -> Vec<VarId> {
    // Rows `a·x <= b` and `-a·x <= c` count as one occurrence.
    let rows = sys.rows();
    let mut occurrences: BTreeMap<VarId, BTreeSet<Vec<(VarId, F)>>> = BTreeMap::new();
    for r in rows.iter() {
        if r.coeffs().len() >= 2 {
            let flip = r.coeffs()[0].1.is_negative();
            let key: Vec<(VarId, F)> = r
                .coeffs()
                .iter()
                .map(|(v, a)| (*v, if flip { -a.clone() } else { a.clone() }))
                .collect();
            for (v, _) in r.coeffs() {
                occurrences.entry(*v).or_default().insert(key.clone());
            }
        }
    }
    occurrences
        .into_iter()
        .filter(|(v, keys)| {
            keys.len() == 1 && {
                let key = keys.iter().next().expect("one key");
                key.iter().any(|(u, a)| u == v && a.abs().is_one())
                    && key.iter().all(|(_, a)| a.to_int().is_some())
                    && rows
                        .iter()
                        .filter(|o| o.coeff(*v).is_some() && o.coeffs().len() == 1)
                        .all(|o| o.rhs().to_int().is_some())
            }
        })
        .map(|(v, _)| v)
        .collect()
}

/// Eliminates singleton-occurrence variables one at a time, re-checking the
/// condition after each step.
pub fn presolve<F: Scalar>(system: &ConstraintSystem<F>) -> ConstraintSystem<F> {
    let mut sys = system.clone();
    while let Some(v) = singleton_candidates(&sys).into_iter().next() {
        sys = fbce::eliminate(&sys, v);
        if sys.contradiction().is_some() {
            break;
        }
    }
    sys
}

/// Search result on an instance, with the contracted system it ran on.
#[derive(Debug, Clone)]
pub struct InstanceSolution {
    pub result: SearchResult<Rational>,
    pub contracted: ContractedSystem,
    /// Values of every system variable when feasible.
    pub assignment: Option<Vec<i64>>,
}

impl InstanceSolution {
    /// Values of the shared-value variables of penalized classes.
    pub fn penalty_values(&self) -> BTreeMap<String, i64> {
        let mut out = BTreeMap::new();
        if let Some(a) = &self.assignment {
            for (id, v) in &self.contracted.penalty_vars {
                out.insert(id.clone(), a[*v]);
            }
        }
        out
    }
}

/// Contracts classes, optionally presolves, searches, and expands the
/// result back onto the instance grid.
pub fn solve_instance(instance: &ProblemInstance, cfg: &SearchConfig) -> Result<SearchResult, SearchError> {
    solve_instance_detailed(instance, cfg).map(|s| s.result)
}

pub fn solve_instance_detailed(
    instance: &ProblemInstance,
    cfg: &SearchConfig,
) -> Result<InstanceSolution, SearchError> {
    let violations = instance.validate();
    if let Some(v) = violations.first() {
        return Err(SearchError::InvalidInstance(v.to_string()));
    }
    let contracted = reform::contract_classes(instance);
    if let Some(reason) = &contracted.infeasible {
        return Ok(InstanceSolution {
            result: SearchResult {
                certificate: Certificate::Infeasible(Infeasibility::Construction(reason.clone())),
                objective_value: None,
                nodes_explored: 0,
                status: SearchStatus::Complete,
            },
            contracted,
            assignment: None,
        });
    }
    let objective = match cfg.objective_mode {
        ObjectiveMode::Minimize => contracted.objective.as_ref(),
        ObjectiveMode::Feasibility => None,
    };
    let system = if cfg.presolve && objective.is_none() {
        presolve(&contracted.system)
    } else {
        contracted.system.clone()
    };
    let mut result = solve(&system, &contracted.bounds, objective, cfg)?;
    let mut assignment = None;
    if let Certificate::Feasible(w) = &result.certificate {
        let grid = contracted.expand(&w.values);
        debug_assert!(
            validate_witness(instance, &grid).unwrap_or(false),
            "expanded witness fails: {:?}",
            witness_violation(instance, &grid)
        );
        assignment = Some(w.values.clone());
        result.certificate = Certificate::Feasible(grid);
    }
    Ok(InstanceSolution {
        result,
        contracted,
        assignment,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fbce::LinearConstraint;
    use crate::model::{ArcIndex, EqualFlowClass, ProblemKind, Relation};

    type Sys = ConstraintSystem<Rational>;
    type C = LinearConstraint<Rational>;

    fn binary_pair(rhs: i64) -> Sys {
        let mut s = Sys::with_variables(["x", "y"]);
        s.add(C::from_ints(&[(0, 1), (1, 1)], Relation::Eq, rhs), "sum");
        s
    }

    #[test]
    fn first_witness_is_ascending_first_unassigned() {
        let s = binary_pair(1);
        let r = solve(&s, &[VarBounds::binary(); 2], None, &SearchConfig::default()).unwrap();
        assert_eq!(r.status, SearchStatus::Complete);
        assert_eq!(r.certificate.witness().unwrap().values, vec![0, 1]);
    }

    #[test]
    fn impossible_sum_is_infeasible_and_complete() {
        let s = binary_pair(3);
        let r = solve(&s, &[VarBounds::binary(); 2], None, &SearchConfig::default()).unwrap();
        assert_eq!(r.status, SearchStatus::Complete);
        assert!(r.certificate.is_infeasible());
    }

    #[test]
    fn unbounded_variable_is_an_error() {
        let mut s = Sys::with_variables(["x", "y"]);
        s.add(C::from_ints(&[(0, 1), (1, -1)], Relation::Le, 0), "c");
        let e = solve(&s, &[VarBounds::nonnegative(); 2], None, &SearchConfig::default());
        assert_eq!(e.unwrap_err(), SearchError::Unbounded("x".into()));
    }

    #[test]
    fn node_limit_yields_unknown() {
        // a = b and c = d make the sum even; propagation alone misses it.
        let mut s = Sys::with_variables(["a", "b", "c", "d"]);
        s.add(C::from_ints(&[(0, 1), (1, -1)], Relation::Eq, 0), "ab");
        s.add(C::from_ints(&[(2, 1), (3, -1)], Relation::Eq, 0), "cd");
        s.add(C::from_ints(&[(0, 1), (1, 1), (2, 1), (3, 1)], Relation::Eq, 5), "odd");
        let cfg = SearchConfig {
            node_limit: 2,
            ..Default::default()
        };
        let r = solve(&s, &[VarBounds::new(0, 3); 4], None, &cfg).unwrap();
        let full = solve(&s, &[VarBounds::new(0, 3); 4], None, &SearchConfig::default()).unwrap();
        assert!(full.certificate.is_infeasible());
        assert_eq!(r.status, SearchStatus::LimitHit);
        assert!(matches!(r.certificate, Certificate::Unknown(_)));
    }

    #[test]
    fn minimize_finds_exhaustive_optimum() {
        // minimize 3x + 2y + (x - y)^2 subject to x + y >= 3 over [0,3]^2.
        let mut s = Sys::with_variables(["x", "y"]);
        s.add(C::from_ints(&[(0, 1), (1, 1)], Relation::Ge, 3), "cover");
        let q = |v: i64| Rational::from_int(v);
        let obj = Objective {
            linear: vec![(0, q(3)), (1, q(2))],
            constant: q(0),
            squares: vec![SquareTerm {
                weight: q(1),
                terms: vec![(0, q(1)), (1, q(-1))],
                constant: q(0),
            }],
        };
        let mut best = None;
        for x in 0..=3 {
            for y in 0..=3 {
                if x + y >= 3 {
                    let v = 3 * x + 2 * y + (x - y) * (x - y);
                    best = Some(best.map_or(v, |b: i64| b.min(v)));
                }
            }
        }
        let r = solve(&s, &[VarBounds::new(0, 3); 2], Some(&obj), &SearchConfig::minimize()).unwrap();
        assert_eq!(r.objective_value, Some(q(best.unwrap())));
    }

    #[test]
    fn presolve_removes_slack_like_variables() {
        // x + s = 2 with s in [0,1] only appears once.
        let mut s = Sys::with_variables(["x", "s"]);
        s.add(C::from_ints(&[(0, 1), (1, 1)], Relation::Eq, 2), "row");
        s.add_bounds(0, VarBounds::new(0, 5));
        s.add_bounds(1, VarBounds::new(0, 1));
        let p = presolve(&s);
        assert_eq!(p.live_variables().len(), 1);
        let r = solve(&p, &[VarBounds::new(0, 5), VarBounds::new(0, 1)], None, &SearchConfig::default()).unwrap();
        let w = r.certificate.witness().unwrap();
        assert_eq!(w.values[0] + w.values[1], 2);
    }

    #[test]
    fn assignment_instance_yields_permutation() {
        let mut inst = ProblemInstance::transportation(&[1, 1], &[1, 1]);
        inst.kind = ProblemKind::Assignment;
        inst.set_all_bounds(VarBounds::binary());
        let r = solve_instance(&inst, &SearchConfig::default()).unwrap();
        let w = r.certificate.witness().unwrap();
        assert!(validate_witness(&inst, w).unwrap());
        assert_eq!(w.values.iter().sum::<i64>(), 2);
    }

    #[test]
    fn class_forcing_forbidden_arc_is_infeasible() {
        // Two periods; the route (0,0) must carry 1 in period 0 but is
        // forbidden in period 1 while tied by a class.
        let mut inst = ProblemInstance::new(1, 1, 2);
        inst.set_all_bounds(VarBounds::binary());
        inst.row_supply = vec![vec![1, 0]];
        inst.col_demand = vec![vec![1, 0]];
        let a = ArcIndex::new(0, 0, 0);
        let b = ArcIndex::new(0, 0, 1);
        inst.classes.push(EqualFlowClass::new("t", vec![a, b]));
        let r = solve_instance(&inst, &SearchConfig::default()).unwrap();
        assert!(r.certificate.is_infeasible());
        assert_eq!(r.status, SearchStatus::Complete);
    }
}
