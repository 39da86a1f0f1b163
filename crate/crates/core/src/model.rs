//! Same-route equal-flow problem instances, witnesses and certificates.
//!
//! An instance is a dense `sources x dests x periods` grid of integer arc
//! variables with per-(source, period) row balances, per-(dest, period) column
//! balances, bounds, equal-flow classes and forbidden arcs. Arc positions are
//! row-major: source, then destination, then period.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fbce::Refutation;
use crate::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ArcIndex {
    pub source: usize,
    pub dest: usize,
    pub period: usize,
}

impl ArcIndex {
    pub const fn new(source: usize, dest: usize, period: usize) -> Self {
        ArcIndex {
            source,
            dest,
            period,
        }
    }
}

impl fmt::Display for ArcIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.source, self.dest, self.period)
    }
}

/// Integer bounds of one arc; `upper == None` is +infinity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VarBounds {
    pub lower: i64,
    pub upper: Option<i64>,
}

impl VarBounds {
    pub const fn new(lower: i64, upper: i64) -> Self {
        VarBounds {
            lower,
            upper: Some(upper),
        }
    }

    pub const fn nonnegative() -> Self {
        VarBounds {
            lower: 0,
            upper: None,
        }
    }

    pub const fn binary() -> Self {
        VarBounds::new(0, 1)
    }

    pub fn contains(&self, v: i64) -> bool {
        v >= self.lower && self.upper.is_none_or(|u| v <= u)
    }

    pub fn is_valid(&self) -> bool {
        self.upper.is_none_or(|u| self.lower <= u)
    }

    /// Intersection of two boxes; may be empty (`lower > upper`).
    pub fn intersect(&self, other: &VarBounds) -> VarBounds {
        let upper = match (self.upper, other.upper) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, None) => a,
            (None, b) => b,
        };
        VarBounds {
            lower: self.lower.max(other.lower),
            upper,
        }
    }
}

impl Default for VarBounds {
    fn default() -> Self {
        VarBounds::nonnegative()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
}

impl Relation {
    pub fn holds(self, lhs: i64, rhs: i64) -> bool {
        match self {
            Relation::Eq => lhs == rhs,
            Relation::Le => lhs <= rhs,
            Relation::Ge => lhs >= rhs,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Eq => "=",
            Relation::Le => "<=",
            Relation::Ge => ">=",
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// Arcs tied to one shared integer value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EqualFlowClass {
    pub id: String,
    pub members: Vec<ArcIndex>,
    pub shared_value: Option<i64>,
}

impl EqualFlowClass {
    pub fn new(id: impl Into<String>, members: Vec<ArcIndex>) -> Self {
        EqualFlowClass {
            id: id.into(),
            members,
            shared_value: None,
        }
    }

    pub fn fixed(mut self, value: i64) -> Self {
        self.shared_value = Some(value);
        self
    }
}

/// Arcs whose flow is fixed to zero.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForbiddenSet {
    arcs: BTreeSet<ArcIndex>,
}

impl ForbiddenSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, arc: ArcIndex) -> bool {
        self.arcs.insert(arc)
    }

    pub fn remove(&mut self, arc: &ArcIndex) -> bool {
        self.arcs.remove(arc)
    }

    pub fn contains(&self, arc: &ArcIndex) -> bool {
        self.arcs.contains(arc)
    }

    pub fn len(&self) -> usize {
        self.arcs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arcs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &ArcIndex> + '_ {
        self.arcs.iter()
    }
}

impl FromIterator<ArcIndex> for ForbiddenSet {
    fn from_iter<I: IntoIterator<Item = ArcIndex>>(iter: I) -> Self {
        ForbiddenSet {
            arcs: iter.into_iter().collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    #[default]
    Transportation,
    Assignment,
    Generalized,
    /// Class equalities moved into a quadratic objective.
    GeneralizedQuadratic,
}

/// `weight * sum over members of (x_member - t)^2`, where `t` is a free
/// integer within `value_bounds`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassPenalty {
    pub id: String,
    pub members: Vec<ArcIndex>,
    pub weight: i64,
    pub value_bounds: VarBounds,
}

/// Linear arc costs plus the penalty terms introduced by reformulation.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Objective {
    /// One cost per arc, row-major.
    pub linear: Vec<i64>,
    /// `weight * x_arc` for arcs whose forbidden constraint was dropped.
    pub forbidden_penalties: Vec<(ArcIndex, i64)>,
    pub class_penalties: Vec<ClassPenalty>,
}

impl Objective {
    pub fn zero(arc_count: usize) -> Self {
        Objective {
            linear: vec![0; arc_count],
            ..Default::default()
        }
    }

    pub fn has_penalties(&self) -> bool {
        !self.forbidden_penalties.is_empty() || !self.class_penalties.is_empty()
    }
}

/// Dimensions of an instance; its product is the size of the problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Symbol {
    pub sources: usize,
    pub dests: usize,
    pub periods: usize,
}

impl Symbol {
    pub fn size(&self) -> usize {
        self.sources * self.dests * self.periods
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemInstance {
    pub n_sources: usize,
    pub n_dests: usize,
    pub n_periods: usize,
    /// `row_supply[i][tau]`.
    pub row_supply: Vec<Vec<i64>>,
    /// `col_demand[j][tau]`.
    pub col_demand: Vec<Vec<i64>>,
    pub row_relation: Relation,
    pub col_relation: Relation,
    /// One entry per arc, row-major.
    pub bounds: Vec<VarBounds>,
    pub classes: Vec<EqualFlowClass>,
    pub forbidden: ForbiddenSet,
    pub objective: Option<Objective>,
    pub integral: bool,
    pub kind: ProblemKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("witness has {found} values, instance has {expected} arcs")]
    WitnessLength { expected: usize, found: usize },
    #[error("{component} index {value} out of range (< {limit})")]
    OutOfRange {
        component: &'static str,
        value: usize,
        limit: usize,
    },
    #[error("instance dimensions are inconsistent: {0}")]
    Malformed(String),
}

impl ProblemInstance {
    /// Balanced-by-relation grid with zero balances and `[0, inf)` bounds.
    pub fn new(n_sources: usize, n_dests: usize, n_periods: usize) -> Self {
        let arcs = n_sources * n_dests * n_periods;
        ProblemInstance {
            n_sources,
            n_dests,
            n_periods,
            row_supply: vec![vec![0; n_periods]; n_sources],
            col_demand: vec![vec![0; n_periods]; n_dests],
            row_relation: Relation::Eq,
            col_relation: Relation::Eq,
            bounds: vec![VarBounds::nonnegative(); arcs],
            classes: Vec::new(),
            forbidden: ForbiddenSet::new(),
            objective: None,
            integral: true,
            kind: ProblemKind::Transportation,
        }
    }

    /// Single-period transportation instance with `[0, inf)` bounds.
    pub fn transportation(supply: &[i64], demand: &[i64]) -> Self {
        let mut inst = ProblemInstance::new(supply.len(), demand.len(), 1);
        for (i, &b) in supply.iter().enumerate() {
            inst.row_supply[i][0] = b;
        }
        for (j, &a) in demand.iter().enumerate() {
            inst.col_demand[j][0] = a;
        }
        inst
    }

    pub fn symbol(&self) -> Symbol {
        Symbol {
            sources: self.n_sources,
            dests: self.n_dests,
            periods: self.n_periods,
        }
    }

    pub fn arc_count(&self) -> usize {
        self.symbol().size()
    }

    pub fn contains_arc(&self, arc: &ArcIndex) -> bool {
        arc.source < self.n_sources && arc.dest < self.n_dests && arc.period < self.n_periods
    }

    /// Row-major position of an in-range arc.
    pub fn arc_pos(&self, arc: &ArcIndex) -> usize {
        debug_assert!(self.contains_arc(arc), "arc {arc} outside grid");
        (arc.source * self.n_dests + arc.dest) * self.n_periods + arc.period
    }

    pub fn arc_at(&self, pos: usize) -> ArcIndex {
        let period = pos % self.n_periods;
        let rest = pos / self.n_periods;
        ArcIndex::new(rest / self.n_dests, rest % self.n_dests, period)
    }

    /// All arcs in row-major order.
    pub fn arcs(&self) -> impl Iterator<Item = ArcIndex> + '_ {
        (0..self.n_sources).flat_map(move |i| {
            (0..self.n_dests)
                .flat_map(move |j| (0..self.n_periods).map(move |t| ArcIndex::new(i, j, t)))
        })
    }

    pub fn bounds_of(&self, arc: &ArcIndex) -> VarBounds {
        self.bounds[self.arc_pos(arc)]
    }

    pub fn set_bounds(&mut self, arc: &ArcIndex, bounds: VarBounds) {
        let pos = self.arc_pos(arc);
        self.bounds[pos] = bounds;
    }

    pub fn set_all_bounds(&mut self, bounds: VarBounds) {
        self.bounds.iter_mut().for_each(|b| *b = bounds);
    }

    pub fn is_forbidden(&self, arc: &ArcIndex) -> bool {
        self.forbidden.contains(arc)
    }

    /// Arc position to class position, or `None` when classes overlap or
    /// reference arcs outside the grid.
    pub fn class_index(&self) -> Option<Vec<Option<usize>>> {
        let mut index = vec![None; self.arc_count()];
        for (c, class) in self.classes.iter().enumerate() {
            for m in &class.members {
                if !self.contains_arc(m) {
                    return None;
                }
                let slot = &mut index[self.arc_pos(m)];
                match slot {
                    Some(prev) if *prev != c => return None,
                    _ => *slot = Some(c),
                }
            }
        }
        Some(index)
    }

    /// Arcs matching the fixed components of `pattern`, row-major.
    pub fn class_of(&self, pattern: ArcPattern) -> Result<Vec<ArcIndex>, ModelError> {
        let checks = [
            ("source", pattern.source, self.n_sources),
            ("dest", pattern.dest, self.n_dests),
            ("period", pattern.period, self.n_periods),
        ];
        for (component, value, limit) in checks {
            if let Some(value) = value {
                if value >= limit {
                    return Err(ModelError::OutOfRange {
                        component,
                        value,
                        limit,
                    });
                }
            }
        }
        Ok(self.arcs().filter(|a| pattern.matches(a)).collect())
    }

    /// All well-formedness violations, sorted.
    pub fn validate(&self) -> Vec<Violation> {
        validate_instance(self)
    }
}

/// Partial arc coordinates; `None` components are wildcards.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ArcPattern {
    pub source: Option<usize>,
    pub dest: Option<usize>,
    pub period: Option<usize>,
}

impl ArcPattern {
    pub fn any() -> Self {
        Self::default()
    }

    pub fn source(mut self, i: usize) -> Self {
        self.source = Some(i);
        self
    }

    pub fn dest(mut self, j: usize) -> Self {
        self.dest = Some(j);
        self
    }

    pub fn period(mut self, t: usize) -> Self {
        self.period = Some(t);
        self
    }

    pub fn matches(&self, arc: &ArcIndex) -> bool {
        self.source.is_none_or(|i| i == arc.source)
            && self.dest.is_none_or(|j| j == arc.dest)
            && self.period.is_none_or(|t| t == arc.period)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Error)]
pub enum Violation {
    #[error("{field}: expected {expected} entries, found {found}")]
    Dimension {
        field: String,
        expected: usize,
        found: usize,
    },
    #[error("{context} references arc {arc} outside the grid")]
    ArcOutOfRange { context: String, arc: ArcIndex },
    #[error("arc {arc}: lower bound exceeds upper bound")]
    InvertedBounds { arc: ArcIndex },
    #[error("row ({source_index},{period}): negative supply {value}")]
    NegativeSupply {
        source_index: usize,
        period: usize,
        value: i64,
    },
    #[error("column ({dest},{period}): negative demand {value}")]
    NegativeDemand {
        dest: usize,
        period: usize,
        value: i64,
    },
    #[error("class {class}: no members")]
    EmptyClass { class: String },
    #[error("class id {class} used more than once")]
    DuplicateClassId { class: String },
    #[error("class {class}: arc {arc} listed twice")]
    DuplicateMember { class: String, arc: ArcIndex },
    #[error("arc {arc} belongs to classes {first} and {second}")]
    ClassOverlap {
        arc: ArcIndex,
        first: String,
        second: String,
    },
    #[error("class {class}: shared value {value} outside bounds of arc {arc}")]
    ClassValueOutOfBounds {
        class: String,
        arc: ArcIndex,
        value: i64,
    },
    #[error("class {class}: arc {arc} is forbidden but the rest of the class is not")]
    PartiallyForbiddenClass { class: String, arc: ArcIndex },
    #[error("assignment arc {arc}: bounds must be [0,1]")]
    AssignmentBounds { arc: ArcIndex },
    #[error("assignment column ({dest},{period}): demand must be 1, found {value}")]
    AssignmentDemand {
        dest: usize,
        period: usize,
        value: i64,
    },
    #[error("objective: expected {expected} linear costs, found {found}")]
    ObjectiveLength { expected: usize, found: usize },
    #[error("instance must be integral")]
    NotIntegral,
}

/// Checks every structural invariant of `instance`.
///
/// Violations are data: the result is empty iff the instance is well formed.
/// Output is sorted, so it does not depend on class or forbidden-set order.
pub fn validate_instance(instance: &ProblemInstance) -> Vec<Violation> {
    let mut out = Vec::new();
    let arcs = instance.arc_count();

    let mut dim = |field: String, expected: usize, found: usize| {
        if expected != found {
            out.push(Violation::Dimension {
                field,
                expected,
                found,
            });
        }
    };
    dim("row_supply".into(), instance.n_sources, instance.row_supply.len());
    dim("col_demand".into(), instance.n_dests, instance.col_demand.len());
    dim("bounds".into(), arcs, instance.bounds.len());
    for (i, row) in instance.row_supply.iter().enumerate() {
        dim(format!("row_supply[{i}]"), instance.n_periods, row.len());
    }
    for (j, col) in instance.col_demand.iter().enumerate() {
        dim(format!("col_demand[{j}]"), instance.n_periods, col.len());
    }
    if !out.is_empty() {
        out.sort();
        return out;
    }

    if !instance.integral {
        out.push(Violation::NotIntegral);
    }
    for (i, row) in instance.row_supply.iter().enumerate() {
        for (t, &value) in row.iter().enumerate() {
            if value < 0 {
                out.push(Violation::NegativeSupply {
                    source_index: i,
                    period: t,
                    value,
                });
            }
        }
    }
    for (j, col) in instance.col_demand.iter().enumerate() {
        for (t, &value) in col.iter().enumerate() {
            if value < 0 {
                out.push(Violation::NegativeDemand {
                    dest: j,
                    period: t,
                    value,
                });
            }
        }
    }
    for arc in instance.arcs() {
        if !instance.bounds_of(&arc).is_valid() {
            out.push(Violation::InvertedBounds { arc });
        }
    }
    for arc in instance.forbidden.iter() {
        if !instance.contains_arc(arc) {
            out.push(Violation::ArcOutOfRange {
                context: "forbidden set".into(),
                arc: *arc,
            });
        }
    }

    let mut owner: Vec<Option<usize>> = vec![None; arcs];
    let mut seen_ids = BTreeSet::new();
    for (c, class) in instance.classes.iter().enumerate() {
        if !seen_ids.insert(class.id.as_str()) {
            out.push(Violation::DuplicateClassId {
                class: class.id.clone(),
            });
        }
        if class.members.is_empty() {
            out.push(Violation::EmptyClass {
                class: class.id.clone(),
            });
        }
        let mut members = BTreeSet::new();
        for m in &class.members {
            if !instance.contains_arc(m) {
                out.push(Violation::ArcOutOfRange {
                    context: format!("class {}", class.id),
                    arc: *m,
                });
                continue;
            }
            if !members.insert(*m) {
                out.push(Violation::DuplicateMember {
                    class: class.id.clone(),
                    arc: *m,
                });
                continue;
            }
            let pos = instance.arc_pos(m);
            match owner[pos] {
                Some(prev) => {
                    // Name the pair in a canonical order.
                    let (a, b) = {
                        let (x, y) = (&instance.classes[prev].id, &class.id);
                        if x <= y {
                            (x, y)
                        } else {
                            (y, x)
                        }
                    };
                    out.push(Violation::ClassOverlap {
                        arc: *m,
                        first: a.clone(),
                        second: b.clone(),
                    });
                }
                None => owner[pos] = Some(c),
            }
            if let Some(v) = class.shared_value {
                if !instance.bounds_of(m).contains(v) {
                    out.push(Violation::ClassValueOutOfBounds {
                        class: class.id.clone(),
                        arc: *m,
                        value: v,
                    });
                }
            }
        }
        let forbidden: Vec<_> = members
            .iter()
            .filter(|m| instance.forbidden.contains(m))
            .collect();
        if !forbidden.is_empty() && forbidden.len() != members.len() {
            for arc in forbidden {
                out.push(Violation::PartiallyForbiddenClass {
                    class: class.id.clone(),
                    arc: *arc,
                });
            }
        }
    }

    if instance.kind == ProblemKind::Assignment {
        for arc in instance.arcs() {
            if instance.bounds_of(&arc) != VarBounds::binary() {
                out.push(Violation::AssignmentBounds { arc });
            }
        }
        for (j, col) in instance.col_demand.iter().enumerate() {
            for (t, &value) in col.iter().enumerate() {
                if value != 1 {
                    out.push(Violation::AssignmentDemand {
                        dest: j,
                        period: t,
                        value,
                    });
                }
            }
        }
    }

    if let Some(obj) = &instance.objective {
        if obj.linear.len() != arcs {
            out.push(Violation::ObjectiveLength {
                expected: arcs,
                found: obj.linear.len(),
            });
        }
        for (arc, _) in &obj.forbidden_penalties {
            if !instance.contains_arc(arc) {
                out.push(Violation::ArcOutOfRange {
                    context: "forbidden penalty".into(),
                    arc: *arc,
                });
            }
        }
        for p in &obj.class_penalties {
            for m in &p.members {
                if !instance.contains_arc(m) {
                    out.push(Violation::ArcOutOfRange {
                        context: format!("class penalty {}", p.id),
                        arc: *m,
                    });
                }
            }
        }
    }

    out.sort();
    out.dedup();
    out
}

/// Integer value per arc, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Witness {
    pub values: Vec<i64>,
}

impl Witness {
    pub fn new(values: Vec<i64>) -> Self {
        Witness { values }
    }

    pub fn zeros(len: usize) -> Self {
        Witness {
            values: vec![0; len],
        }
    }

    pub fn get(&self, instance: &ProblemInstance, arc: &ArcIndex) -> i64 {
        self.values[instance.arc_pos(arc)]
    }

    pub fn set(&mut self, instance: &ProblemInstance, arc: &ArcIndex, v: i64) {
        let pos = instance.arc_pos(arc);
        self.values[pos] = v;
    }
}

/// Whether `w` satisfies every hard constraint of `instance` exactly.
pub fn validate_witness(instance: &ProblemInstance, w: &Witness) -> Result<bool, ModelError> {
    if w.values.len() != instance.arc_count() {
        return Err(ModelError::WitnessLength {
            expected: instance.arc_count(),
            found: w.values.len(),
        });
    }
    if instance.row_supply.len() != instance.n_sources
        || instance.col_demand.len() != instance.n_dests
        || instance.bounds.len() != instance.arc_count()
    {
        return Err(ModelError::Malformed(
            "balance or bound vectors do not match the grid".into(),
        ));
    }
    Ok(witness_violation(instance, w).is_none())
}

/// First violated constraint of `w`, described for diagnostics.
pub fn witness_violation(instance: &ProblemInstance, w: &Witness) -> Option<String> {
    for arc in instance.arcs() {
        let v = w.get(instance, &arc);
        if !instance.bounds_of(&arc).contains(v) {
            return Some(format!("arc {arc}: value {v} outside bounds"));
        }
        if v != 0 && instance.is_forbidden(&arc) {
            return Some(format!("arc {arc}: forbidden arc carries {v}"));
        }
    }
    for class in &instance.classes {
        let Some(first) = class.members.first() else {
            continue;
        };
        let t = class.shared_value.unwrap_or_else(|| w.get(instance, first));
        for m in &class.members {
            if w.get(instance, m) != t {
                return Some(format!("class {}: arc {m} differs from {t}", class.id));
            }
        }
    }
    for i in 0..instance.n_sources {
        for t in 0..instance.n_periods {
            let lhs: i64 = (0..instance.n_dests)
                .map(|j| w.get(instance, &ArcIndex::new(i, j, t)))
                .sum();
            let rhs = instance.row_supply[i][t];
            if !instance.row_relation.holds(lhs, rhs) {
                return Some(format!(
                    "row ({i},{t}): {lhs} {} {rhs} fails",
                    instance.row_relation
                ));
            }
        }
    }
    for j in 0..instance.n_dests {
        for t in 0..instance.n_periods {
            let lhs: i64 = (0..instance.n_sources)
                .map(|i| w.get(instance, &ArcIndex::new(i, j, t)))
                .sum();
            let rhs = instance.col_demand[j][t];
            if !instance.col_relation.holds(lhs, rhs) {
                return Some(format!(
                    "column ({j},{t}): {lhs} {} {rhs} fails",
                    instance.col_relation
                ));
            }
        }
    }
    None
}

/// Feasibility verdict with evidence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Certificate<F = Rational> {
    Feasible(Witness),
    Infeasible(Infeasibility<F>),
    Unknown(String),
}

/// Why an instance or system has no integer point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Infeasibility<F = Rational> {
    /// A nonnegative combination of input rows that reads `0 <= negative`.
    Derived(Refutation<F>),
    /// Exhaustive search or enumeration found nothing.
    Exhausted { method: String, explored: u64 },
    /// Total supply and total demand differ.
    Imbalance { supply: i64, demand: i64 },
    /// The instance contradicts itself before any solving.
    Construction(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Feasible,
    Infeasible,
    Unknown,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Feasible => "FEASIBLE",
            Verdict::Infeasible => "INFEASIBLE",
            Verdict::Unknown => "UNKNOWN",
        })
    }
}

impl<F> Certificate<F> {
    pub fn verdict(&self) -> Verdict {
        match self {
            Certificate::Feasible(_) => Verdict::Feasible,
            Certificate::Infeasible(_) => Verdict::Infeasible,
            Certificate::Unknown(_) => Verdict::Unknown,
        }
    }

    pub fn witness(&self) -> Option<&Witness> {
        match self {
            Certificate::Feasible(w) => Some(w),
            _ => None,
        }
    }

    pub fn is_feasible(&self) -> bool {
        matches!(self, Certificate::Feasible(_))
    }

    pub fn is_infeasible(&self) -> bool {
        matches!(self, Certificate::Infeasible(_))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> ProblemInstance {
        let mut inst = ProblemInstance::transportation(&[1], &[1]);
        inst.set_all_bounds(VarBounds::binary());
        inst
    }

    #[test]
    fn minimal_balanced_instance_is_valid() {
        assert!(validate_instance(&minimal()).is_empty());
    }

    #[test]
    fn fixed_class_value_must_fit_bounds() {
        let mut inst = minimal();
        inst.classes
            .push(EqualFlowClass::new("t", vec![ArcIndex::new(0, 0, 0)]).fixed(2));
        assert_eq!(
            validate_instance(&inst),
            vec![Violation::ClassValueOutOfBounds {
                class: "t".into(),
                arc: ArcIndex::new(0, 0, 0),
                value: 2
            }]
        );
    }

    #[test]
    fn overlapping_classes_are_reported() {
        let mut inst = ProblemInstance::new(1, 2, 1);
        let arc = ArcIndex::new(0, 1, 0);
        inst.classes.push(EqualFlowClass::new("a", vec![arc]));
        inst.classes.push(EqualFlowClass::new("b", vec![arc]));
        let v = validate_instance(&inst);
        assert_eq!(
            v,
            vec![Violation::ClassOverlap {
                arc,
                first: "a".into(),
                second: "b".into()
            }]
        );
        assert!(inst.class_index().is_none());
    }

    #[test]
    fn partially_forbidden_class_is_rejected_but_whole_class_is_fine() {
        let mut inst = ProblemInstance::new(1, 1, 2);
        let a = ArcIndex::new(0, 0, 0);
        let b = ArcIndex::new(0, 0, 1);
        inst.classes.push(EqualFlowClass::new("c", vec![a, b]));
        inst.forbidden.insert(a);
        assert!(matches!(
            validate_instance(&inst).as_slice(),
            [Violation::PartiallyForbiddenClass { .. }]
        ));
        inst.forbidden.insert(b);
        assert!(validate_instance(&inst).is_empty());
    }

    #[test]
    fn assignment_kind_requires_unit_structure() {
        let mut inst = ProblemInstance::transportation(&[1, 1], &[1, 2]);
        inst.kind = ProblemKind::Assignment;
        let v = validate_instance(&inst);
        assert!(v.iter().any(|x| matches!(x, Violation::AssignmentBounds { .. })));
        assert!(v
            .iter()
            .any(|x| matches!(x, Violation::AssignmentDemand { dest: 1, value: 2, .. })));
    }

    #[test]
    fn validation_ignores_enumeration_order() {
        let mut a = ProblemInstance::new(2, 2, 2);
        a.classes.push(EqualFlowClass::new("x", vec![ArcIndex::new(0, 0, 0)]));
        a.classes.push(EqualFlowClass::new("y", vec![ArcIndex::new(0, 0, 0)]));
        a.forbidden.insert(ArcIndex::new(5, 0, 0));
        a.forbidden.insert(ArcIndex::new(0, 9, 0));
        let mut b = a.clone();
        b.classes.reverse();
        assert_eq!(validate_instance(&a), validate_instance(&b));
        assert_eq!(validate_instance(&a), validate_instance(&a));
    }

    #[test]
    fn witness_checks() {
        let mut inst = ProblemInstance::transportation(&[1, 1], &[1, 1]);
        inst.set_all_bounds(VarBounds::binary());
        assert!(validate_witness(&inst, &Witness::new(vec![1, 0, 0, 1])).unwrap());
        assert!(!validate_witness(&inst, &Witness::zeros(4)).unwrap());
        assert!(validate_witness(&inst, &Witness::zeros(3)).is_err());

        let mut inst = ProblemInstance::new(1, 1, 2);
        inst.row_supply = vec![vec![1, 0]];
        inst.col_demand = vec![vec![1, 0]];
        inst.classes.push(EqualFlowClass::new(
            "t",
            vec![ArcIndex::new(0, 0, 0), ArcIndex::new(0, 0, 1)],
        ));
        assert!(!validate_witness(&inst, &Witness::new(vec![1, 0])).unwrap());
    }

    #[test]
    fn class_patterns_select_grid_slices() {
        let inst = ProblemInstance::new(2, 2, 2);
        assert_eq!(inst.class_of(ArcPattern::any().source(0)).unwrap().len(), 4);
        assert_eq!(
            inst.class_of(ArcPattern::any().source(0).dest(1)).unwrap(),
            vec![ArcIndex::new(0, 1, 0), ArcIndex::new(0, 1, 1)]
        );
        assert_eq!(inst.class_of(ArcPattern::any()).unwrap().len(), 8);
        assert!(inst.class_of(ArcPattern::any().period(2)).is_err());
    }

    #[test]
    fn symbol_matches_grid_traversal() {
        let inst = ProblemInstance::new(3, 2, 4);
        assert_eq!(inst.symbol().size(), inst.arcs().count());
        for (pos, arc) in inst.arcs().enumerate() {
            assert_eq!(inst.arc_pos(&arc), pos);
            assert_eq!(inst.arc_at(pos), arc);
        }
    }
}
