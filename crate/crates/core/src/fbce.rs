//! Fourier–Motzkin elimination with dominance pruning over exact rationals.
//!
//! Every constraint is kept internally as `a·x <= b`. Equalities enter as two
//! such rows. Derived rows remember the parents and multipliers they were
//! built from, so an empty projection always comes with a replayable
//! nonnegative combination of input rows that reads `0 <= -1`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::{self, Write as _};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use crate::model::{Certificate, Infeasibility, Relation, VarBounds, Witness};
use crate::scalar::Scalar;

pub type VarId = usize;

/// A constraint as written by a caller: `sum coeffs * x  (relation)  rhs`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearConstraint<F> {
    pub coeffs: BTreeMap<VarId, F>,
    pub relation: Relation,
    pub rhs: F,
}

impl<F: Scalar> LinearConstraint<F> {
    pub fn new(relation: Relation, rhs: F) -> Self {
        LinearConstraint {
            coeffs: BTreeMap::new(),
            relation,
            rhs,
        }
    }

    /// Adds `coef * var`, summing with any existing coefficient.
    pub fn with(mut self, var: VarId, coef: F) -> Self {
        self.add_term(var, coef);
        self
    }

    pub fn add_term(&mut self, var: VarId, coef: F) {
        let entry = self.coeffs.entry(var).or_insert_with(F::zero);
        *entry = entry.clone() + coef;
        if entry.is_zero() {
            self.coeffs.remove(&var);
        }
    }

    /// Integer-coefficient shorthand.
    pub fn from_ints(terms: &[(VarId, i64)], relation: Relation, rhs: i64) -> Self {
        let mut c = LinearConstraint::new(relation, F::from_int(rhs));
        for &(v, a) in terms {
            c.add_term(v, F::from_int(a));
        }
        c
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn lhs_at(&self, point: &[F]) -> F {
        self.coeffs
            .iter()
            .fold(F::zero(), |acc, (v, a)| acc + a.clone() * point[*v].clone())
    }

    pub fn holds_at(&self, point: &[F]) -> bool {
        let lhs = self.lhs_at(point);
        match self.relation {
            Relation::Eq => lhs == self.rhs,
            Relation::Le => lhs <= self.rhs,
            Relation::Ge => lhs >= self.rhs,
        }
    }
}

static NEXT_ROW: AtomicU64 = AtomicU64::new(0);

/// Internal inequality `coeffs · x <= rhs` with its derivation.
#[derive(Debug)]
pub struct Row<F> {
    coeffs: Vec<(VarId, F)>,
    rhs: F,
    origin: Origin<F>,
    seq: u64,
}

#[derive(Debug)]
pub enum Origin<F> {
    /// Input row `index` of the owning system.
    Input { index: usize, label: String },
    /// `sum multiplier * parent`, all multipliers positive.
    Combination { terms: Vec<(F, Arc<Row<F>>)> },
}

impl<F: Scalar> Row<F> {
    fn new(coeffs: Vec<(VarId, F)>, rhs: F, origin: Origin<F>) -> Arc<Self> {
        Arc::new(Row {
            coeffs,
            rhs,
            origin,
            seq: NEXT_ROW.fetch_add(1, Ordering::Relaxed),
        })
    }

    pub fn coeffs(&self) -> &[(VarId, F)] {
        &self.coeffs
    }

    pub fn rhs(&self) -> &F {
        &self.rhs
    }

    pub fn origin(&self) -> &Origin<F> {
        &self.origin
    }

    pub fn coeff(&self, var: VarId) -> Option<&F> {
        self.coeffs
            .binary_search_by_key(&var, |(v, _)| *v)
            .ok()
            .map(|i| &self.coeffs[i].1)
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `0 <= negative`.
    pub fn is_contradiction(&self) -> bool {
        self.coeffs.is_empty() && self.rhs.is_negative()
    }

    pub fn has_unit_coefficients(&self) -> bool {
        self.coeffs.iter().all(|(_, a)| a.abs().is_one())
    }

    pub fn satisfied_by(&self, point: &[F]) -> bool {
        let lhs = self
            .coeffs
            .iter()
            .fold(F::zero(), |acc, (v, a)| acc + a.clone() * point[*v].clone());
        lhs <= self.rhs
    }

    fn parents(&self) -> Vec<&Arc<Row<F>>> {
        match &self.origin {
            Origin::Input { .. } => Vec::new(),
            Origin::Combination { terms } => terms.iter().map(|(_, p)| p).collect(),
        }
    }
}

/// `sum m_k * row_k`, dropping zero coefficients.
fn combine<F: Scalar>(terms: &[(F, &Row<F>)]) -> (Vec<(VarId, F)>, F) {
    let mut acc: BTreeMap<VarId, F> = BTreeMap::new();
    let mut rhs = F::zero();
    for (m, row) in terms {
        for (v, a) in &row.coeffs {
            let e = acc.entry(*v).or_insert_with(F::zero);
            *e = e.clone() + m.clone() * a.clone();
        }
        rhs = rhs + m.clone() * row.rhs.clone();
    }
    (acc.into_iter().filter(|(_, a)| !a.is_zero()).collect(), rhs)
}

/// Positive factor bringing a row to its canonical form: coprime integer
/// coefficients, or `rhs = -1` for a contradictory constant row.
fn normal_scale<F: Scalar>(coeffs: &[(VarId, F)], rhs: &F) -> F {
    if coeffs.is_empty() {
        if rhs.is_negative() {
            F::one() / rhs.abs()
        } else {
            F::one()
        }
    } else {
        let refs: Vec<&F> = coeffs.iter().map(|(_, a)| a).collect();
        F::primitive_scale(&refs)
    }
}

/// Builds the normalized row `scale * sum(m_k * parent_k)`.
fn derive<F: Scalar>(terms: Vec<(F, Arc<Row<F>>)>) -> Arc<Row<F>> {
    let borrowed: Vec<(F, &Row<F>)> = terms.iter().map(|(m, r)| (m.clone(), r.as_ref())).collect();
    let (coeffs, rhs) = combine(&borrowed);
    let s = normal_scale(&coeffs, &rhs);
    let coeffs = coeffs.into_iter().map(|(v, a)| (v, a * s.clone())).collect();
    let rhs = rhs * s.clone();
    let terms = terms.into_iter().map(|(m, r)| (m * s.clone(), r)).collect();
    Row::new(coeffs, rhs, Origin::Combination { terms })
}

/// Canonical live version of a raw input row.
fn normalize_input<F: Scalar>(row: &Arc<Row<F>>) -> Arc<Row<F>> {
    let s = normal_scale(&row.coeffs, &row.rhs);
    if s.is_one() {
        row.clone()
    } else {
        derive(vec![(F::one(), row.clone())])
    }
}

/// How `project` orders eliminations.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum OrderPolicy {
    /// Fewest `positive x negative` row pairs first, ties by name.
    #[default]
    MinPairs,
    /// Ascending variable id.
    Ascending,
    /// The listed variables first, in order; the rest by `MinPairs`.
    Fixed(Vec<VarId>),
}

/// One elimination step as seen by the growth audit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepRecord {
    pub step: usize,
    pub variable: String,
    pub before: usize,
    pub after: usize,
    /// Variables not yet eliminated after this step.
    pub live_variables: usize,
    pub max_support: usize,
    /// Every live row has coefficients in {0, ±1} after this step.
    pub unit_coefficients: bool,
}

/// Rows containing one variable at the moment it was eliminated.
#[derive(Debug, Clone)]
struct Stage<F> {
    var: VarId,
    rows: Vec<Arc<Row<F>>>,
}

/// A finite system of rational linear inequalities over named variables.
#[derive(Debug, Clone)]
pub struct ConstraintSystem<F> {
    variables: Vec<String>,
    /// Constraints as the caller wrote them, for independent evaluation.
    source: Vec<(LinearConstraint<F>, String)>,
    /// Raw `<=` rows; equalities contribute two.
    inputs: Vec<Arc<Row<F>>>,
    live: Vec<Arc<Row<F>>>,
    eliminated: Vec<bool>,
    initial_count: usize,
    steps: Vec<StepRecord>,
    stages: Vec<Stage<F>>,
}

impl<F: Scalar> Default for ConstraintSystem<F> {
    fn default() -> Self {
        ConstraintSystem {
            variables: Vec::new(),
            source: Vec::new(),
            inputs: Vec::new(),
            live: Vec::new(),
            eliminated: Vec::new(),
            initial_count: 0,
            steps: Vec::new(),
            stages: Vec::new(),
        }
    }
}

impl<F: Scalar> ConstraintSystem<F> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_variables<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Self {
        let mut sys = Self::new();
        for n in names {
            sys.add_variable(n);
        }
        sys
    }

    /// Returns the id of `name`, adding it if new.
    pub fn add_variable(&mut self, name: impl Into<String>) -> VarId {
        let name = name.into();
        if let Some(id) = self.var(&name) {
            return id;
        }
        self.variables.push(name);
        self.eliminated.push(false);
        self.variables.len() - 1
    }

    pub fn var(&self, name: &str) -> Option<VarId> {
        self.variables.iter().position(|v| v == name)
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn name(&self, var: VarId) -> &str {
        &self.variables[var]
    }

    pub fn is_eliminated(&self, var: VarId) -> bool {
        self.eliminated[var]
    }

    pub fn live_variables(&self) -> Vec<VarId> {
        (0..self.variables.len())
            .filter(|&v| !self.eliminated[v])
            .collect()
    }

    /// Constraints exactly as added.
    pub fn source_constraints(&self) -> &[(LinearConstraint<F>, String)] {
        &self.source
    }

    pub fn inputs(&self) -> &[Arc<Row<F>>] {
        &self.inputs
    }

    /// Current (normalized, pruned) rows.
    pub fn rows(&self) -> &[Arc<Row<F>>] {
        &self.live
    }

    pub fn len(&self) -> usize {
        self.live.len()
    }

    pub fn is_empty(&self) -> bool {
        self.live.is_empty()
    }

    pub fn steps(&self) -> &[StepRecord] {
        &self.steps
    }

    /// Adds a constraint. Variables must already exist.
    pub fn add(&mut self, c: LinearConstraint<F>, label: impl Into<String>) {
        let label = label.into();
        assert!(
            c.coeffs.keys().all(|&v| v < self.variables.len()),
            "constraint {label} references an unknown variable"
        );
        let le = |sign: F, tag: &str, sys: &mut Self| {
            let coeffs = c
                .coeffs
                .iter()
                .map(|(v, a)| (*v, a.clone() * sign.clone()))
                .collect();
            let index = sys.inputs.len();
            let row = Row::new(
                coeffs,
                c.rhs.clone() * sign,
                Origin::Input {
                    index,
                    label: format!("{label}{tag}"),
                },
            );
            sys.inputs.push(row.clone());
            sys.push_live(normalize_input(&row));
        };
        match c.relation {
            Relation::Le => le(F::one(), "", self),
            Relation::Ge => le(-F::one(), "", self),
            Relation::Eq => {
                le(F::one(), "(<=)", self);
                le(-F::one(), "(>=)", self);
            }
        }
        self.source.push((c, label));
        self.initial_count = self.live.len();
    }

    /// Adds `lower <= x` and, when finite, `x <= upper`.
    pub fn add_bounds(&mut self, var: VarId, bounds: VarBounds) {
        let name = self.variables[var].clone();
        self.add(
            LinearConstraint::new(Relation::Ge, F::from_int(bounds.lower)).with(var, F::one()),
            format!("lb[{name}]"),
        );
        if let Some(u) = bounds.upper {
            self.add(
                LinearConstraint::new(Relation::Le, F::from_int(u)).with(var, F::one()),
                format!("ub[{name}]"),
            );
        }
    }

    fn push_live(&mut self, row: Arc<Row<F>>) {
        let dup = self
            .live
            .iter()
            .any(|r| r.coeffs == row.coeffs && r.rhs == row.rhs);
        if !dup {
            self.live.push(row);
        }
    }

    /// First live contradiction, if any.
    pub fn contradiction(&self) -> Option<&Arc<Row<F>>> {
        self.live.iter().find(|r| r.is_contradiction())
    }

    pub fn row_to_string(&self, row: &Row<F>) -> String {
        let mut s = String::new();
        if row.coeffs.is_empty() {
            s.push('0');
        }
        for (k, (v, a)) in row.coeffs.iter().enumerate() {
            let name = &self.variables[*v];
            let mag = a.abs();
            let sign = if a.is_negative() { "-" } else { "+" };
            if k == 0 {
                if a.is_negative() {
                    s.push('-');
                }
            } else {
                let _ = write!(s, " {sign} ");
            }
            if mag.is_one() {
                s.push_str(name);
            } else {
                let _ = write!(s, "{mag} {name}");
            }
        }
        let _ = write!(s, " <= {}", row.rhs);
        s
    }

    /// Whether `point` (one value per variable) satisfies every input row.
    pub fn satisfied_by(&self, point: &[F]) -> bool {
        self.inputs.iter().all(|r| r.satisfied_by(point))
    }

    /// Whether `point` satisfies every live row, as opposed to the inputs.
    pub fn live_satisfied_by(&self, point: &[F]) -> bool {
        self.live.iter().all(|r| r.satisfied_by(point))
    }
}

impl<F: Scalar> fmt::Display for ConstraintSystem<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in &self.live {
            writeln!(f, "{}", self.row_to_string(row))?;
        }
        Ok(())
    }
}

/// Variables that a single row forces to be nonnegative.
fn nonnegative_vars<F: Scalar>(rows: &[Arc<Row<F>>]) -> BTreeSet<VarId> {
    rows.iter()
        .filter(|r| is_nonneg_witness(r))
        .map(|r| r.coeffs[0].0)
        .collect()
}

/// `-k x <= b` with `k > 0`, `b <= 0`.
fn is_nonneg_witness<F: Scalar>(row: &Row<F>) -> bool {
    row.coeffs.len() == 1 && row.coeffs[0].1.is_negative() && !row.rhs.is_positive()
}

/// Whether `strong` alone implies `weak` given the nonnegative variables.
///
/// `weak - strong` must be `<= 0` on the nonnegative orthant of the touched
/// variables, and `strong.rhs <= weak.rhs`.
fn implies<F: Scalar>(strong: &Row<F>, weak: &Row<F>, nonneg: &BTreeSet<VarId>) -> bool {
    if strong.rhs > weak.rhs {
        return false;
    }
    let (mut i, mut j) = (0, 0);
    let (a, b) = (&strong.coeffs, &weak.coeffs);
    let zero = F::zero();
    while i < a.len() || j < b.len() {
        let (var, sa, wb) = match (a.get(i), b.get(j)) {
            (Some((va, ca)), Some((vb, cb))) if va == vb => {
                i += 1;
                j += 1;
                (*va, ca, cb)
            }
            (Some((va, ca)), Some((vb, _))) if va < vb => {
                i += 1;
                (*va, ca, &zero)
            }
            (Some((va, ca)), None) => {
                i += 1;
                (*va, ca, &zero)
            }
            (_, Some((vb, cb))) => {
                j += 1;
                (*vb, &zero, cb)
            }
            (None, None) => unreachable!(),
        };
        if wb == sa {
            continue;
        }
        if wb > sa || !nonneg.contains(&var) {
            return false;
        }
    }
    true
}

/// Removes duplicate, vacuous and singly-dominated rows.
///
/// A contradictory row replaces the whole system. Otherwise kept: for each
/// coefficient vector, the row with the smallest rhs; then any
/// row implied by another kept row under [`implies`] is dropped, except the
/// rows that establish nonnegativity of a variable.
pub fn dominance_prune<F: Scalar>(system: &ConstraintSystem<F>) -> ConstraintSystem<F> {
    let mut out = system.clone();
    out.live = prune_rows(&system.live);
    out
}

fn prune_rows<F: Scalar>(rows: &[Arc<Row<F>>]) -> Vec<Arc<Row<F>>> {
    if let Some(c) = rows.iter().find(|r| r.is_contradiction()) {
        return vec![c.clone()];
    }
    // Tightest row per coefficient vector; one canonical contradiction.
    let mut best: HashMap<&[(VarId, F)], usize> = HashMap::new();
    let mut order: Vec<usize> = Vec::new();
    for (k, r) in rows.iter().enumerate() {
        if r.is_constant() && !r.rhs.is_negative() {
            continue;
        }
        match best.get(r.coeffs.as_slice()) {
            Some(&prev) if rows[prev].rhs <= r.rhs => {}
            Some(&prev) => {
                let slot = order.iter().position(|&o| o == prev).expect("tracked");
                order[slot] = k;
                best.insert(&r.coeffs, k);
            }
            None => {
                best.insert(&r.coeffs, k);
                order.push(k);
            }
        }
    }
    let kept: Vec<Arc<Row<F>>> = order.into_iter().map(|k| rows[k].clone()).collect();

    let nonneg = nonnegative_vars(&kept);
    let mut alive = vec![true; kept.len()];
    for w in 0..kept.len() {
        let weak = &kept[w];
        if weak.is_constant() || is_nonneg_witness(weak) {
            continue;
        }
        let dominated = (0..kept.len())
            .any(|s| s != w && alive[s] && !kept[s].is_constant() && implies(&kept[s], weak, &nonneg));
        if dominated {
            alive[w] = false;
        }
    }
    kept.into_iter()
        .zip(alive)
        .filter_map(|(r, a)| a.then_some(r))
        .collect()
}

/// Pivots `tab` on (`r`, `c`) and records `c` as basic in row `r`.
fn pivot<F: Scalar>(tab: &mut [Vec<F>], basis: &mut [usize], r: usize, c: usize) {
    let p = tab[r][c].clone();
    for x in tab[r].iter_mut() {
        *x = x.clone() / p.clone();
    }
    let prow = tab[r].clone();
    for (k, row) in tab.iter_mut().enumerate() {
        if k == r || row[c].is_zero() {
            continue;
        }
        let f = row[c].clone();
        for (x, y) in row.iter_mut().zip(&prow) {
            *x = x.clone() - f.clone() * y.clone();
        }
    }
    basis[r] = c;
}

/// Minimizes `cost · z` over the tableau's columns `< allowed` with Bland's
/// rule. The last column holds the right-hand side. `None` when unbounded.
fn simplex<F: Scalar>(tab: &mut [Vec<F>], basis: &mut [usize], cost: &[F], allowed: usize) -> Option<F> {
    let last = tab.first().map_or(0, |r| r.len() - 1);
    loop {
        let reduced = |c: usize| {
            tab.iter()
                .zip(basis.iter())
                .fold(cost[c].clone(), |acc, (row, &b)| acc - cost[b].clone() * row[c].clone())
        };
        let Some(enter) = (0..allowed).find(|&c| !basis.contains(&c) && reduced(c).is_negative()) else {
            let value = tab
                .iter()
                .zip(basis.iter())
                .fold(F::zero(), |acc, (row, &b)| acc + cost[b].clone() * row[last].clone());
            return Some(value);
        };
        let mut leave: Option<(F, usize, usize)> = None;
        for (r, row) in tab.iter().enumerate() {
            if row[enter].is_positive() {
                let ratio = row[last].clone() / row[enter].clone();
                let better = match &leave {
                    None => true,
                    Some((q, _, b)) => ratio < *q || (ratio == *q && basis[r] < *b),
                };
                if better {
                    leave = Some((ratio, r, basis[r]));
                }
            }
        }
        let (_, r, _) = leave?;
        pivot(tab, basis, r, enter);
    }
}

/// Whether `rows` imply `target` over the rationals: some `y >= 0` has
/// `y · A = target.coeffs` and `y · b <= target.rhs`, found by a two-phase
/// simplex. An unbounded dual means `rows` are empty, which also implies it.
fn implied<F: Scalar>(rows: &[Arc<Row<F>>], target: &Row<F>) -> bool {
    let vars: Vec<VarId> = rows
        .iter()
        .flat_map(|r| r.coeffs.iter().map(|(v, _)| *v))
        .chain(target.coeffs.iter().map(|(v, _)| *v))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let (m, n) = (rows.len(), vars.len());
    let width = m + n + 1;
    let mut tab: Vec<Vec<F>> = vars
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let mut row = vec![F::zero(); width];
            for (k, r) in rows.iter().enumerate() {
                if let Some(a) = r.coeff(v) {
                    row[k] = a.clone();
                }
            }
            row[m + i] = F::one();
            row[m + n] = target.coeff(v).cloned().unwrap_or_else(F::zero);
            if row[m + n].is_negative() {
                for x in row.iter_mut().take(m) {
                    *x = -x.clone();
                }
                row[m + n] = -row[m + n].clone();
            }
            row
        })
        .collect();
    let mut basis: Vec<usize> = (m..m + n).collect();
    let mut phase1 = vec![F::zero(); width - 1];
    for c in phase1.iter_mut().skip(m) {
        *c = F::one();
    }
    match simplex(&mut tab, &mut basis, &phase1, m + n) {
        Some(v) if v.is_zero() => {}
        _ => return false,
    }
    // Drive artificials out of the basis; rows that cannot be are dependent.
    let mut r = 0;
    while r < tab.len() {
        if basis[r] >= m {
            match (0..m).find(|&c| !tab[r][c].is_zero()) {
                Some(c) => pivot(&mut tab, &mut basis, r, c),
                None => {
                    tab.remove(r);
                    basis.remove(r);
                    continue;
                }
            }
        }
        r += 1;
    }
    let mut cost: Vec<F> = rows.iter().map(|r| r.rhs.clone()).collect();
    cost.resize(width - 1, F::zero());
    match simplex(&mut tab, &mut basis, &cost, m) {
        Some(v) => v <= target.rhs,
        None => true,
    }
}

/// Drops every row implied by the remaining ones, leaving an irredundant
/// description of the same rational set.
pub fn redundancy_prune<F: Scalar>(system: &ConstraintSystem<F>) -> ConstraintSystem<F> {
    let mut out = dominance_prune(system);
    out.live = remove_redundant(out.live);
    out
}

fn remove_redundant<F: Scalar>(mut rows: Vec<Arc<Row<F>>>) -> Vec<Arc<Row<F>>> {
    if rows.iter().any(|r| r.is_contradiction()) {
        return rows;
    }
    let mut k = rows.len();
    while k > 0 {
        k -= 1;
        if rows[k].is_constant() {
            continue;
        }
        let others: Vec<Arc<Row<F>>> = rows
            .iter()
            .enumerate()
            .filter_map(|(j, r)| (j != k).then(|| r.clone()))
            .collect();
        if implied(&others, &rows[k]) {
            rows.remove(k);
        }
    }
    rows
}

/// One Fourier–Motzkin step on `var`, followed by dominance pruning.
pub fn eliminate<F: Scalar>(system: &ConstraintSystem<F>, var: VarId) -> ConstraintSystem<F> {
    let mut out = system.clone();
    eliminate_in_place(&mut out, var, false);
    out
}

fn eliminate_in_place<F: Scalar>(sys: &mut ConstraintSystem<F>, var: VarId, redundant_rows: bool) {
    let before = sys.live.len();
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    let mut rest = Vec::new();
    for r in sys.live.drain(..) {
        match r.coeff(var) {
            Some(a) if a.is_positive() => pos.push(r),
            Some(_) => neg.push(r),
            None => rest.push(r),
        }
    }
    let mut combined = Vec::with_capacity(pos.len() * neg.len());
    for p in &pos {
        let mp = F::one() / p.coeff(var).expect("positive row").clone();
        for n in &neg {
            let mn = F::one() / n.coeff(var).expect("negative row").abs();
            combined.push(derive(vec![(mp.clone(), p.clone()), (mn, n.clone())]));
        }
    }
    // Deterministic merge order before pruning.
    combined.sort_by(|a, b| (&a.coeffs, &a.rhs).cmp(&(&b.coeffs, &b.rhs)));
    let stage_rows: Vec<_> = pos.iter().chain(neg.iter()).cloned().collect();
    rest.extend(combined);
    sys.live = prune_rows(&rest);
    if redundant_rows {
        sys.live = remove_redundant(std::mem::take(&mut sys.live));
    }
    sys.eliminated[var] = true;
    sys.stages.push(Stage {
        var,
        rows: stage_rows,
    });
    let live_variables = sys.eliminated.iter().filter(|e| !**e).count();
    sys.steps.push(StepRecord {
        step: sys.steps.len() + 1,
        variable: sys.variables[var].clone(),
        before,
        after: sys.live.len(),
        live_variables,
        max_support: sys.live.iter().map(|r| r.coeffs.len()).max().unwrap_or(0),
        unit_coefficients: sys.live.iter().all(|r| r.has_unit_coefficients()),
    });
}

/// Next variable to eliminate among `candidates`.
fn pick_min_pairs<F: Scalar>(sys: &ConstraintSystem<F>, candidates: &BTreeSet<VarId>) -> Option<VarId> {
    candidates
        .iter()
        .map(|&v| {
            let (mut p, mut n) = (0usize, 0usize);
            for r in &sys.live {
                match r.coeff(v) {
                    Some(a) if a.is_positive() => p += 1,
                    Some(_) => n += 1,
                    None => {}
                }
            }
            (p * n, sys.variables[v].clone(), v)
        })
        .min()
        .map(|(_, _, v)| v)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FbceConfig {
    pub order: OrderPolicy,
    /// Abandon elimination once a step leaves more live rows than this.
    pub max_constraints: usize,
    /// Also remove rows implied jointly by others after every step, testing
    /// each with a nested elimination of at most this many rows.
    pub redundant_rows: bool,
}

impl Default for FbceConfig {
    fn default() -> Self {
        FbceConfig {
            order: OrderPolicy::MinPairs,
            max_constraints: 2_000,
            redundant_rows: false,
        }
    }
}

/// A system restricted to a subset of its variables.
#[derive(Debug, Clone)]
pub struct Projection<F> {
    pub kept_variables: Vec<VarId>,
    pub system: ConstraintSystem<F>,
    /// Elimination stopped at the constraint limit; `system` is partial.
    pub truncated: bool,
}

/// Eliminates every variable outside `keep`.
pub fn project<F: Scalar>(
    system: &ConstraintSystem<F>,
    keep: &BTreeSet<VarId>,
    order: &OrderPolicy,
) -> Projection<F> {
    project_with(
        system,
        keep,
        &FbceConfig {
            order: order.clone(),
            max_constraints: usize::MAX,
            redundant_rows: false,
        },
    )
}

pub fn project_with<F: Scalar>(
    system: &ConstraintSystem<F>,
    keep: &BTreeSet<VarId>,
    cfg: &FbceConfig,
) -> Projection<F> {
    let mut sys = system.clone();
    let mut todo: BTreeSet<VarId> = sys
        .live_variables()
        .into_iter()
        .filter(|v| !keep.contains(v))
        .collect();
    let mut fixed: Vec<VarId> = match &cfg.order {
        OrderPolicy::Fixed(list) => list.iter().rev().copied().collect(),
        _ => Vec::new(),
    };
    let mut truncated = false;
    while !todo.is_empty() {
        if sys.contradiction().is_some() {
            break;
        }
        let next = loop {
            match fixed.pop() {
                Some(v) if todo.contains(&v) => break Some(v),
                Some(_) => continue,
                None => break None,
            }
        };
        let var = match (next, &cfg.order) {
            (Some(v), _) => v,
            (None, OrderPolicy::Ascending) => *todo.iter().next().expect("non-empty"),
            (None, _) => pick_min_pairs(&sys, &todo).expect("non-empty"),
        };
        todo.remove(&var);
        eliminate_in_place(&mut sys, var, cfg.redundant_rows);
        if sys.live.len() > cfg.max_constraints {
            truncated = true;
            break;
        }
    }
    let kept_variables = keep.iter().copied().filter(|&v| v < sys.variables.len()).collect();
    Projection {
        kept_variables,
        system: sys,
        truncated,
    }
}

/// A nonnegative combination of input rows equal to `0 <= negative`.
#[derive(Debug, Clone)]
pub struct Refutation<F> {
    pub contradiction: Arc<Row<F>>,
    /// Multiplier per input row index.
    pub farkas: Vec<(usize, F)>,
    labels: Vec<String>,
}

impl<F: PartialEq> PartialEq for Refutation<F> {
    fn eq(&self, other: &Self) -> bool {
        self.farkas == other.farkas
    }
}

impl<F: Eq> Eq for Refutation<F> {}

impl<F: Scalar> Refutation<F> {
    fn from_row(sys: &ConstraintSystem<F>, row: Arc<Row<F>>) -> Self {
        let farkas = flatten(&row);
        let labels = farkas
            .iter()
            .map(|(i, _)| match &sys.inputs[*i].origin {
                Origin::Input { label, .. } => label.clone(),
                Origin::Combination { .. } => unreachable!("inputs are leaves"),
            })
            .collect();
        Refutation {
            contradiction: row,
            farkas,
            labels,
        }
    }

    /// Input rows used, with their multipliers.
    pub fn chain(&self) -> impl Iterator<Item = (&str, &F)> + '_ {
        self.labels
            .iter()
            .map(String::as_str)
            .zip(self.farkas.iter().map(|(_, m)| m))
    }

    /// Immediate parents of the final contradictory row.
    pub fn parent_count(&self) -> usize {
        self.contradiction.parents().len()
    }

    /// Recomputes every derived row of the chain from its parents and the
    /// flattened combination from the inputs; both must match exactly.
    pub fn replay(&self, system: &ConstraintSystem<F>) -> bool {
        if !self.contradiction.is_contradiction() {
            return false;
        }
        let mut stack = vec![self.contradiction.clone()];
        let mut seen = BTreeSet::new();
        while let Some(row) = stack.pop() {
            if !seen.insert(row.seq) {
                continue;
            }
            if let Origin::Combination { terms } = &row.origin {
                if terms.iter().any(|(m, _)| !m.is_positive()) {
                    return false;
                }
                let borrowed: Vec<(F, &Row<F>)> =
                    terms.iter().map(|(m, r)| (m.clone(), r.as_ref())).collect();
                let (coeffs, rhs) = combine(&borrowed);
                if coeffs != row.coeffs || rhs != row.rhs {
                    return false;
                }
                stack.extend(terms.iter().map(|(_, p)| p.clone()));
            }
        }
        let mut terms = Vec::with_capacity(self.farkas.len());
        for (i, m) in &self.farkas {
            let Some(input) = system.inputs.get(*i) else {
                return false;
            };
            if !m.is_positive() {
                return false;
            }
            terms.push((m.clone(), input.as_ref()));
        }
        let (coeffs, rhs) = combine(&terms);
        coeffs.is_empty() && rhs == self.contradiction.rhs
    }

    pub fn describe(&self, system: &ConstraintSystem<F>) -> String {
        let mut s = String::new();
        for (i, m) in &self.farkas {
            let row = &system.inputs[*i];
            let label = match &row.origin {
                Origin::Input { label, .. } => label.as_str(),
                Origin::Combination { .. } => "?",
            };
            let _ = writeln!(s, "  {m} x [{label}] {}", system.row_to_string(row));
        }
        let _ = write!(s, "  => {}", system.row_to_string(&self.contradiction));
        s
    }
}

/// Input multipliers of a derived row, by reverse topological accumulation.
fn flatten<F: Scalar>(row: &Arc<Row<F>>) -> Vec<(usize, F)> {
    let mut nodes: BTreeMap<u64, Arc<Row<F>>> = BTreeMap::new();
    let mut stack = vec![row.clone()];
    while let Some(r) = stack.pop() {
        if nodes.contains_key(&r.seq) {
            continue;
        }
        stack.extend(r.parents().into_iter().cloned());
        nodes.insert(r.seq, r);
    }
    let mut weight: HashMap<u64, F> = HashMap::new();
    weight.insert(row.seq, F::one());
    let mut out: BTreeMap<usize, F> = BTreeMap::new();
    // Parents always carry smaller sequence numbers than their children.
    for (seq, node) in nodes.iter().rev() {
        let Some(w) = weight.get(seq).cloned() else {
            continue;
        };
        match &node.origin {
            Origin::Input { index, .. } => {
                let e = out.entry(*index).or_insert_with(F::zero);
                *e = e.clone() + w;
            }
            Origin::Combination { terms } => {
                for (m, p) in terms {
                    let e = weight.entry(p.seq).or_insert_with(F::zero);
                    *e = e.clone() + w.clone() * m.clone();
                }
            }
        }
    }
    out.into_iter().collect()
}

/// Result of a full elimination run.
#[derive(Debug, Clone)]
pub struct CertifyRun<F> {
    pub certificate: Certificate<F>,
    /// The system after the last elimination step.
    pub eliminated: ConstraintSystem<F>,
}

impl<F: Scalar> CertifyRun<F> {
    pub fn growth(&self) -> GrowthReport {
        constraint_growth_report(&self.eliminated)
    }
}

/// Eliminates every variable with the default configuration.
pub fn certify<F: Scalar>(system: &ConstraintSystem<F>) -> Certificate<F> {
    certify_with(system, &FbceConfig::default()).certificate
}

/// Eliminates every variable. A contradiction yields `Infeasible` with a
/// replayable refutation; otherwise back-substitution through the recorded
/// stages looks for an integer point, giving `Feasible` when every choice
/// lands on an integer, and `Unknown` when it does not.
pub fn certify_with<F: Scalar>(system: &ConstraintSystem<F>, cfg: &FbceConfig) -> CertifyRun<F> {
    let mut start = prune_system(system);
    if cfg.redundant_rows {
        start.live = remove_redundant(std::mem::take(&mut start.live));
        start.initial_count = start.live.len();
    }
    let proj = project_with(&start, &BTreeSet::new(), cfg);
    let sys = proj.system;
    let certificate = if let Some(row) = sys.contradiction() {
        Certificate::Infeasible(Infeasibility::Derived(Refutation::from_row(&sys, row.clone())))
    } else if proj.truncated {
        Certificate::Unknown(format!(
            "constraint limit {} exceeded during elimination",
            cfg.max_constraints
        ))
    } else {
        match back_substitute(&sys) {
            Some(values) => Certificate::Feasible(Witness::new(values)),
            None => Certificate::Unknown(
                "rationally feasible; integer status needs search".to_string(),
            ),
        }
    };
    CertifyRun {
        certificate,
        eliminated: sys,
    }
}

fn prune_system<F: Scalar>(system: &ConstraintSystem<F>) -> ConstraintSystem<F> {
    let mut s = dominance_prune(system);
    s.initial_count = s.live.len();
    s
}

/// Integer point chosen stage by stage in reverse elimination order.
fn back_substitute<F: Scalar>(sys: &ConstraintSystem<F>) -> Option<Vec<i64>> {
    let mut point: Vec<F> = vec![F::zero(); sys.variables.len()];
    if !complete_point(sys, &mut point) {
        return None;
    }
    point.iter().map(|p| p.to_int()).collect()
}

/// Fills the eliminated variables of `point` from the recorded stages, given
/// values for the live ones, preferring the integer closest to zero within
/// each stage's interval. Returns whether the completed point is integral
/// and satisfies every input row.
pub(crate) fn complete_point<F: Scalar>(sys: &ConstraintSystem<F>, point: &mut [F]) -> bool {
    for stage in sys.stages.iter().rev() {
        let v = stage.var;
        let mut lo: Option<F> = None;
        let mut hi: Option<F> = None;
        for row in &stage.rows {
            let a = row.coeff(v).expect("stage rows mention the variable").clone();
            let rest = row
                .coeffs
                .iter()
                .filter(|(u, _)| *u != v)
                .fold(F::zero(), |acc, (u, c)| acc + c.clone() * point[*u].clone());
            let bound = (row.rhs.clone() - rest) / a.clone();
            if a.is_positive() {
                hi = Some(hi.map_or(bound.clone(), |h: F| h.min(bound)));
            } else {
                lo = Some(lo.map_or(bound.clone(), |l: F| l.max(bound)));
            }
        }
        let mut value: i64 = 0;
        if let Some(l) = &lo {
            if F::from_int(value) < *l {
                let Some(c) = l.ceil_int() else { return false };
                value = c;
            }
        }
        if let Some(h) = &hi {
            if F::from_int(value) > *h {
                let Some(f) = h.floor_int() else { return false };
                value = f;
            }
        }
        let fv = F::from_int(value);
        if lo.as_ref().is_some_and(|l| fv < *l) || hi.as_ref().is_some_and(|h| fv > *h) {
            return false;
        }
        point[v] = fv;
    }
    point.iter().all(|p| p.to_int().is_some()) && sys.satisfied_by(point)
}

/// Constraint counts per elimination step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrowthReport {
    /// Live rows before the first step, then after each step.
    pub counts: Vec<usize>,
    /// Live variables matching each entry of `counts`.
    pub live_variables: Vec<usize>,
    pub max_support: Vec<usize>,
    pub unit_coefficients: Vec<bool>,
    pub steps: Vec<StepRecord>,
}

impl GrowthReport {
    /// Every count is within `2^live` (all entries, or only those whose rows
    /// kept {0, ±1} coefficients when `unit_only`).
    pub fn within_binary_bound(&self, unit_only: bool) -> bool {
        self.counts
            .iter()
            .zip(&self.live_variables)
            .zip(&self.unit_coefficients)
            .filter(|(_, unit)| !unit_only || **unit)
            .all(|((&c, &live), _)| live >= 63 || c <= 1usize << live)
    }

    pub fn trace_lines(&self) -> Vec<String> {
        self.steps
            .iter()
            .map(|s| {
                format!(
                    "step {}: eliminated {}, constraints {} → {}",
                    s.step, s.variable, s.before, s.after
                )
            })
            .collect()
    }
}

/// Step-indexed constraint counts of a system's elimination history.
pub fn constraint_growth_report<F: Scalar>(system: &ConstraintSystem<F>) -> GrowthReport {
    let initial_live = system.variables.len();
    let initial_unit = system.inputs.iter().all(|r| r.has_unit_coefficients());
    let initial_support = system.inputs.iter().map(|r| r.coeffs.len()).max().unwrap_or(0);
    let mut report = GrowthReport {
        counts: vec![system.initial_count],
        live_variables: vec![initial_live],
        max_support: vec![initial_support],
        unit_coefficients: vec![initial_unit],
        steps: system.steps.clone(),
    };
    for s in &system.steps {
        report.counts.push(s.after);
        report.live_variables.push(s.live_variables);
        report.max_support.push(s.max_support);
        report.unit_coefficients.push(s.unit_coefficients);
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;

    type Sys = ConstraintSystem<Rational>;
    type C = LinearConstraint<Rational>;

    fn q(v: i64) -> Rational {
        Rational::from_int(v)
    }

    #[test]
    fn opposite_bounds_eliminate_to_contradiction() {
        let mut s = Sys::with_variables(["x"]);
        s.add(C::from_ints(&[(0, 1)], Relation::Ge, 1), "a");
        s.add(C::from_ints(&[(0, 1)], Relation::Le, 0), "b");
        let e = eliminate(&s, 0);
        assert_eq!(e.len(), 1);
        assert!(e.rows()[0].is_contradiction());
        assert_eq!(e.row_to_string(&e.rows()[0]), "0 <= -1");
    }

    #[test]
    fn coupling_row_is_absorbed_by_the_bound() {
        let mut s = Sys::with_variables(["x", "y"]);
        s.add_bounds(0, VarBounds::binary());
        s.add_bounds(1, VarBounds::binary());
        s.add(C::from_ints(&[(0, 1), (1, 1)], Relation::Ge, 1), "c");
        let e = eliminate(&s, 0);
        let mut rows: Vec<String> = e.rows().iter().map(|r| e.row_to_string(r)).collect();
        rows.sort();
        assert_eq!(rows, vec!["-y <= 0", "y <= 1"]);
    }

    #[test]
    fn prune_keeps_tighter_parallel_row() {
        let mut s = Sys::with_variables(["x", "y"]);
        s.add(C::from_ints(&[(0, 1), (1, 1)], Relation::Ge, 1), "a");
        s.add(C::from_ints(&[(0, 1), (1, 1)], Relation::Ge, 0), "b");
        let p = dominance_prune(&s);
        assert_eq!(p.len(), 1);
        assert_eq!(p.row_to_string(&p.rows()[0]), "-x - y <= -1");
    }

    #[test]
    fn prune_drops_superset_row_over_nonnegative_vars() {
        let mut s = Sys::with_variables(["x", "y"]);
        s.add(C::from_ints(&[(0, 1)], Relation::Ge, 0), "x>=0");
        s.add(C::from_ints(&[(1, 1)], Relation::Ge, 0), "y>=0");
        s.add(C::from_ints(&[(0, 1)], Relation::Ge, 1), "x>=1");
        s.add(C::from_ints(&[(0, 1), (1, 1)], Relation::Ge, 1), "x+y>=1");
        let p = dominance_prune(&s);
        let mut rows: Vec<String> = p.rows().iter().map(|r| p.row_to_string(r)).collect();
        rows.sort();
        assert_eq!(rows, vec!["-x <= -1", "-y <= 0"]);
    }

    #[test]
    fn redundancy_prune_drops_jointly_implied_row() {
        let mut s = Sys::with_variables(["x", "y"]);
        s.add(C::from_ints(&[(0, 1)], Relation::Le, 1), "x<=1");
        s.add(C::from_ints(&[(1, 1)], Relation::Le, 1), "y<=1");
        s.add(C::from_ints(&[(0, 1), (1, 1)], Relation::Le, 3), "x+y<=3");
        assert_eq!(dominance_prune(&s).len(), 3);
        let p = redundancy_prune(&s);
        let mut rows: Vec<String> = p.rows().iter().map(|r| p.row_to_string(r)).collect();
        rows.sort();
        assert_eq!(rows, vec!["x <= 1", "y <= 1"]);
    }

    #[test]
    fn redundancy_prune_keeps_facets() {
        let mut s = Sys::with_variables(["x", "y"]);
        s.add(C::from_ints(&[(0, 1)], Relation::Ge, 0), "x>=0");
        s.add(C::from_ints(&[(1, 1)], Relation::Ge, 0), "y>=0");
        s.add(C::from_ints(&[(0, 1), (1, 1)], Relation::Le, 1), "x+y<=1");
        s.add(C::from_ints(&[(0, 1)], Relation::Le, 1), "x<=1");
        assert_eq!(redundancy_prune(&s).len(), 3);
    }

    #[test]
    fn contradiction_replaces_the_system() {
        let mut s = Sys::with_variables(["x"]);
        s.add(C::from_ints(&[(0, 1)], Relation::Le, 1), "a");
        s.add(C::from_ints(&[], Relation::Le, -1), "b");
        let p = dominance_prune(&s);
        assert_eq!(p.len(), 1);
        assert!(p.contradiction().is_some());
    }

    #[test]
    fn prune_of_empty_system_is_empty() {
        assert!(dominance_prune(&Sys::new()).is_empty());
    }

    #[test]
    fn equality_is_stored_as_two_rows() {
        let mut s = Sys::with_variables(["x"]);
        s.add(C::from_ints(&[(0, 2)], Relation::Eq, 4), "e");
        assert_eq!(s.inputs().len(), 2);
        let mut rows: Vec<String> = s.rows().iter().map(|r| s.row_to_string(r)).collect();
        rows.sort();
        assert_eq!(rows, vec!["-x <= -2", "x <= 2"]);
    }

    #[test]
    fn refutation_has_two_parents_and_replays() {
        let mut s = Sys::with_variables(["x"]);
        s.add(C::from_ints(&[(0, 1)], Relation::Ge, 1), "a");
        s.add(C::from_ints(&[(0, 1)], Relation::Le, 0), "b");
        let Certificate::Infeasible(Infeasibility::Derived(r)) = certify(&s) else {
            panic!("expected refutation");
        };
        assert_eq!(r.parent_count(), 2);
        assert!(r.replay(&s));
        let labels: Vec<&str> = r.chain().map(|(l, _)| l).collect();
        assert_eq!(labels, vec!["a", "b"]);
    }

    #[test]
    fn rational_scaling_refutation_replays() {
        // 2x + 3y >= 7, x <= 1, y <= 1  has no point at all.
        let mut s = Sys::with_variables(["x", "y"]);
        s.add(C::from_ints(&[(0, 2), (1, 3)], Relation::Ge, 7), "c");
        s.add(C::from_ints(&[(0, 1)], Relation::Le, 1), "ux");
        s.add(C::from_ints(&[(1, 1)], Relation::Le, 1), "uy");
        let Certificate::Infeasible(Infeasibility::Derived(r)) = certify(&s) else {
            panic!("expected refutation");
        };
        assert!(r.replay(&s));
        let m: BTreeMap<usize, Rational> = r.farkas.iter().cloned().collect();
        // 1*(-2x-3y<=-7) + 2*(x<=1) + 3*(y<=1) = 0 <= -2, scaled to -1.
        assert_eq!(&m[&0] * q(2), q(1));
    }

    #[test]
    fn feasible_system_back_substitutes_an_integer_point() {
        let mut s = Sys::with_variables(["x", "y"]);
        s.add_bounds(0, VarBounds::binary());
        s.add_bounds(1, VarBounds::binary());
        s.add(C::from_ints(&[(0, 1), (1, 1)], Relation::Eq, 1), "sum");
        let Certificate::Feasible(w) = certify(&s) else {
            panic!("expected witness")
        };
        assert_eq!(w.values.iter().sum::<i64>(), 1);
    }

    #[test]
    fn fractional_only_system_is_unknown() {
        // 2x = 1 has a rational but no integer solution.
        let mut s = Sys::with_variables(["x"]);
        s.add(C::from_ints(&[(0, 2)], Relation::Eq, 1), "half");
        assert!(matches!(certify(&s), Certificate::Unknown(_)));
    }

    #[test]
    fn projection_keeping_everything_is_identity() {
        let mut s = Sys::with_variables(["x", "y"]);
        s.add_bounds(0, VarBounds::binary());
        s.add(C::from_ints(&[(0, 1), (1, -1)], Relation::Le, 0), "c");
        let keep: BTreeSet<VarId> = [0, 1].into();
        let p = project(&s, &keep, &OrderPolicy::default());
        assert_eq!(p.system.len(), s.len());
        assert!(p.system.steps().is_empty());
    }

    #[test]
    fn projection_onto_nothing_of_feasible_system_is_trivially_true() {
        let mut s = Sys::with_variables(["x", "y"]);
        s.add_bounds(0, VarBounds::binary());
        s.add_bounds(1, VarBounds::binary());
        s.add(C::from_ints(&[(0, 1), (1, 1)], Relation::Le, 1), "c");
        let p = project(&s, &BTreeSet::new(), &OrderPolicy::default());
        assert!(p.system.is_empty());
    }

    #[test]
    fn growth_report_shapes() {
        let mut s = Sys::with_variables(["x"]);
        s.add_bounds(0, VarBounds::new(0, 3));
        let run = certify_with(&s, &FbceConfig::default());
        let g = run.growth();
        assert_eq!(g.counts.len(), 2);
        assert!(g.counts[1] <= g.counts[0]);
        assert_eq!(g.trace_lines(), vec!["step 1: eliminated x, constraints 2 → 0"]);

        let empty = Sys::new();
        let run = certify_with(&empty, &FbceConfig::default());
        assert_eq!(run.growth().counts, vec![0]);
    }

    #[test]
    fn min_pairs_order_breaks_ties_by_name() {
        let mut s = Sys::with_variables(["b", "a"]);
        s.add_bounds(0, VarBounds::binary());
        s.add_bounds(1, VarBounds::binary());
        let run = certify_with(&s, &FbceConfig::default());
        let names: Vec<_> = run.eliminated.steps().iter().map(|s| s.variable.as_str()).collect();
        assert_eq!(names, vec!["a", "b"]);
    }

    #[test]
    fn works_over_machine_ratios_too() {
        type Small = num_rational::Ratio<i64>;
        let mut s = ConstraintSystem::<Small>::with_variables(["x", "y"]);
        s.add(LinearConstraint::from_ints(&[(0, 1), (1, 1)], Relation::Ge, 3), "c");
        s.add_bounds(0, VarBounds::binary());
        s.add_bounds(1, VarBounds::binary());
        assert!(certify(&s).is_infeasible());
    }
}
