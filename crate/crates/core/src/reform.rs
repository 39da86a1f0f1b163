//! Reformulations of equal-flow instances.
//!
//! - class contraction into a [`System`] for elimination and search,
//! - block-diagonal stacking of per-period problems,
//! - penalty forms for forbidden arcs (linear) and class equalities
//!   (quadratic),
//! - the transportation/assignment correspondence for equibounded problems,
//! - variable splitting over availability pools,
//! - the north-west corner certificate for plain balanced problems.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::fbce::{LinearConstraint, VarId};
use crate::model::{
    validate_witness, ArcIndex, Certificate, ClassPenalty, EqualFlowClass, ForbiddenSet,
    Infeasibility, Objective, ProblemInstance, ProblemKind, Relation, Symbol, VarBounds, Witness,
};
use crate::search::{self, SquareTerm};
use crate::{Rational, Scalar, System};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReformError {
    #[error("period instance {index} has symbol {found:?}, expected {expected:?}")]
    DimensionMismatch {
        index: usize,
        expected: Symbol,
        found: Symbol,
    },
    #[error("no period instances to stack")]
    NothingToStack,
    #[error("{0}")]
    Unsupported(String),
    #[error("class {class} is not equibounded; split its variables first")]
    Unequibounded { class: String },
    #[error("class {class} is not a same-route class over consecutive periods")]
    NotSameRoute { class: String },
    #[error("witness does not satisfy the instance")]
    InvalidWitness,
    #[error("pool {pool}: negative capacity {value} at column ({dest},{period})")]
    NegativeCapacity {
        pool: String,
        dest: usize,
        period: usize,
        value: i64,
    },
    #[error("pool capacities at column ({dest},{period}) sum to {found}, expected {expected}")]
    PartitionMismatch {
        dest: usize,
        period: usize,
        expected: i64,
        found: i64,
    },
    #[error("no consistent slot assignment for destination {dest}")]
    SlotConflict { dest: usize },
}

fn arc_name(arc: &ArcIndex) -> String {
    format!("x_{}_{}_{}", arc.source, arc.dest, arc.period)
}

fn q(v: i64) -> Rational {
    Rational::from_int(v)
}

/// Largest finite value any arc can take: its own upper bound, or the
/// balance of a `<=`/`=` row or column it sits in.
fn effective_upper(instance: &ProblemInstance, arc: &ArcIndex) -> Option<i64> {
    let mut cap = instance.bounds_of(arc).upper;
    let lower_ok = instance.bounds.iter().all(|b| b.lower >= 0);
    if lower_ok {
        if instance.row_relation != Relation::Ge {
            let b = instance.row_supply[arc.source][arc.period];
            cap = Some(cap.map_or(b, |c| c.min(b)));
        }
        if instance.col_relation != Relation::Ge {
            let a = instance.col_demand[arc.dest][arc.period];
            cap = Some(cap.map_or(a, |c| c.min(a)));
        }
    }
    cap
}

/// A class-contracted instance: one variable per class and per free arc.
#[derive(Debug, Clone)]
pub struct ContractedSystem {
    pub system: System,
    /// One entry per system variable.
    pub bounds: Vec<VarBounds>,
    /// Variable carrying each arc, row-major; `None` for forbidden arcs.
    pub arc_var: Vec<Option<VarId>>,
    /// Variable of each class; `None` when the whole class is forbidden.
    pub class_var: Vec<Option<VarId>>,
    /// Shared-value variables of penalized classes, by class id.
    pub penalty_vars: Vec<(String, VarId)>,
    pub objective: Option<search::Objective<Rational>>,
    /// Set when the instance contradicts itself before solving.
    pub infeasible: Option<String>,
}

impl ContractedSystem {
    /// Grid witness from one value per system variable.
    pub fn expand(&self, values: &[i64]) -> Witness {
        Witness::new(
            self.arc_var
                .iter()
                .map(|v| v.map_or(0, |v| values[v]))
                .collect(),
        )
    }

    /// System point of a grid witness, if the witness respects the
    /// contraction (equal class members, zero forbidden arcs). Penalty
    /// variables are set to zero.
    pub fn contract_witness(&self, w: &Witness) -> Option<Vec<i64>> {
        let mut point: Vec<Option<i64>> = vec![None; self.system.variables().len()];
        for (pos, var) in self.arc_var.iter().enumerate() {
            let value = w.values[pos];
            match var {
                None if value != 0 => return None,
                None => {}
                Some(v) => match point[*v] {
                    Some(prev) if prev != value => return None,
                    _ => point[*v] = Some(value),
                },
            }
        }
        Some(point.into_iter().map(|p| p.unwrap_or(0)).collect())
    }
}

/// Replaces every class by one variable, substitutes forbidden arcs by zero,
/// and emits the balance rows and bounds as a rational system.
///
/// Coefficients of class members in one row are summed. Penalty terms of the
/// instance objective become linear and square terms over the new variables.
pub fn contract_classes(instance: &ProblemInstance) -> ContractedSystem {
    let mut system = System::new();
    let mut bounds: Vec<VarBounds> = Vec::new();
    let mut arc_var: Vec<Option<VarId>> = vec![None; instance.arc_count()];
    let mut class_var: Vec<Option<VarId>> = vec![None; instance.classes.len()];
    let mut infeasible: Option<String> = None;
    let owner = instance.class_index().unwrap_or_else(|| vec![None; instance.arc_count()]);

    for (c, class) in instance.classes.iter().enumerate() {
        let all_forbidden = !class.members.is_empty()
            && class.members.iter().all(|m| instance.is_forbidden(m));
        if all_forbidden {
            let lower_positive = class.members.iter().any(|m| instance.bounds_of(m).lower > 0);
            if class.shared_value.is_some_and(|v| v != 0) || lower_positive {
                infeasible.get_or_insert_with(|| {
                    format!("class {} is forbidden but must be nonzero", class.id)
                });
            }
        }
        let _ = c;
    }

    for (pos, arc) in instance.arcs().enumerate() {
        if instance.is_forbidden(&arc) {
            if instance.bounds_of(&arc).lower > 0 {
                infeasible.get_or_insert_with(|| {
                    format!("forbidden arc {arc} has a positive lower bound")
                });
            }
            continue;
        }
        match owner[pos] {
            Some(c) => {
                let var = match class_var[c] {
                    Some(v) => v,
                    None => {
                        let class = &instance.classes[c];
                        let v = system.add_variable(class.id.clone());
                        let mut b = class
                            .members
                            .iter()
                            .fold(VarBounds::nonnegative(), |acc, m| acc.intersect(&instance.bounds_of(m)));
                        if class.members.iter().all(|m| instance.bounds_of(m).lower < 0) {
                            b.lower = class
                                .members
                                .iter()
                                .map(|m| instance.bounds_of(m).lower)
                                .max()
                                .unwrap_or(0);
                        }
                        if let Some(t) = class.shared_value {
                            b = b.intersect(&VarBounds::new(t, t));
                        }
                        if !b.is_valid() {
                            infeasible.get_or_insert_with(|| {
                                format!("class {} has empty common bounds", class.id)
                            });
                        }
                        bounds.push(b);
                        class_var[c] = Some(v);
                        v
                    }
                };
                arc_var[pos] = Some(var);
            }
            None => {
                let v = system.add_variable(arc_name(&arc));
                bounds.push(instance.bounds_of(&arc));
                arc_var[pos] = Some(v);
            }
        }
    }

    let mut penalty_vars = Vec::new();
    if let Some(obj) = &instance.objective {
        for p in &obj.class_penalties {
            let v = system.add_variable(format!("t:{}", p.id));
            bounds.push(p.value_bounds);
            penalty_vars.push((p.id.clone(), v));
        }
    }

    for i in 0..instance.n_sources {
        for t in 0..instance.n_periods {
            let mut c = LinearConstraint::new(instance.row_relation, q(instance.row_supply[i][t]));
            for j in 0..instance.n_dests {
                let pos = instance.arc_pos(&ArcIndex::new(i, j, t));
                if let Some(v) = arc_var[pos] {
                    c.add_term(v, q(1));
                }
            }
            system.add(c, format!("row[{i},{t}]"));
        }
    }
    for j in 0..instance.n_dests {
        for t in 0..instance.n_periods {
            let mut c = LinearConstraint::new(instance.col_relation, q(instance.col_demand[j][t]));
            for i in 0..instance.n_sources {
                let pos = instance.arc_pos(&ArcIndex::new(i, j, t));
                if let Some(v) = arc_var[pos] {
                    c.add_term(v, q(1));
                }
            }
            system.add(c, format!("col[{j},{t}]"));
        }
    }
    for (v, b) in bounds.iter().enumerate() {
        if b.is_valid() {
            system.add_bounds(v, *b);
        }
    }

    let objective = instance.objective.as_ref().map(|obj| {
        let mut linear: BTreeMap<VarId, Rational> = BTreeMap::new();
        let mut add = |v: VarId, c: i64| {
            let e = linear.entry(v).or_insert_with(|| q(0));
            *e += q(c);
        };
        for (pos, &c) in obj.linear.iter().enumerate() {
            if let (Some(v), true) = (arc_var.get(pos).copied().flatten(), c != 0) {
                add(v, c);
            }
        }
        for (arc, w) in &obj.forbidden_penalties {
            if let Some(v) = arc_var[instance.arc_pos(arc)] {
                add(v, *w);
            }
        }
        let mut squares = Vec::new();
        for (p, (_, t)) in obj.class_penalties.iter().zip(&penalty_vars) {
            for m in &p.members {
                let mut terms = vec![(*t, q(-1))];
                if let Some(v) = arc_var[instance.arc_pos(m)] {
                    terms.insert(0, (v, q(1)));
                }
                squares.push(SquareTerm {
                    weight: q(p.weight),
                    terms,
                    constant: q(0),
                });
            }
        }
        search::Objective {
            linear: linear.into_iter().filter(|(_, c)| *c != q(0)).collect(),
            constant: q(0),
            squares,
        }
    });

    ContractedSystem {
        system,
        bounds,
        arc_var,
        class_var,
        penalty_vars,
        objective,
        infeasible,
    }
}

/// Stacks single-period instances into one block-diagonal instance.
///
/// Period `p` occupies sources `p*n_i..` and destinations `p*n_j..`; every
/// off-block arc is forbidden. `classes` are given in per-period coordinates,
/// with `period` naming the instance, and are remapped onto the blocks.
pub fn stack_by_index(
    instances: &[ProblemInstance],
    classes: &[EqualFlowClass],
) -> Result<ProblemInstance, ReformError> {
    let first = instances.first().ok_or(ReformError::NothingToStack)?;
    let expected = Symbol {
        sources: first.n_sources,
        dests: first.n_dests,
        periods: 1,
    };
    for (index, inst) in instances.iter().enumerate() {
        if inst.symbol() != expected {
            return Err(ReformError::DimensionMismatch {
                index,
                expected,
                found: inst.symbol(),
            });
        }
        if inst.row_relation != first.row_relation || inst.col_relation != first.col_relation {
            return Err(ReformError::Unsupported(format!(
                "period instance {index} uses different balance relations"
            )));
        }
    }
    let (ni, nj, np) = (first.n_sources, first.n_dests, instances.len());
    let mut out = ProblemInstance::new(ni * np, nj * np, 1);
    out.row_relation = first.row_relation;
    out.col_relation = first.col_relation;
    let all_assignment = instances.iter().all(|i| i.kind == ProblemKind::Assignment);
    out.kind = if instances.iter().all(|i| i.kind == first.kind) {
        first.kind
    } else {
        ProblemKind::Generalized
    };
    if all_assignment {
        out.set_all_bounds(VarBounds::binary());
    }
    let block = |p: usize, arc: &ArcIndex| ArcIndex::new(p * ni + arc.source, p * nj + arc.dest, 0);
    let has_objective = instances.iter().any(|i| i.objective.is_some());
    let mut linear = vec![0; out.arc_count()];

    for (p, inst) in instances.iter().enumerate() {
        for i in 0..ni {
            out.row_supply[p * ni + i][0] = inst.row_supply[i][0];
        }
        for j in 0..nj {
            out.col_demand[p * nj + j][0] = inst.col_demand[j][0];
        }
        for arc in inst.arcs() {
            let target = block(p, &arc);
            out.set_bounds(&target, inst.bounds_of(&arc));
            if inst.is_forbidden(&arc) {
                out.forbidden.insert(target);
            }
            if let Some(obj) = &inst.objective {
                let pos = out.arc_pos(&target);
                linear[pos] = obj.linear[inst.arc_pos(&arc)];
            }
        }
        for class in &inst.classes {
            out.classes.push(EqualFlowClass {
                id: format!("p{p}:{}", class.id),
                members: class.members.iter().map(|m| block(p, m)).collect(),
                shared_value: class.shared_value,
            });
        }
    }
    for class in classes {
        let mut members = Vec::with_capacity(class.members.len());
        for m in &class.members {
            if m.period >= np || m.source >= ni || m.dest >= nj {
                return Err(ReformError::Unsupported(format!(
                    "class {} references arc {m} outside the period instances",
                    class.id
                )));
            }
            members.push(block(m.period, &ArcIndex::new(m.source, m.dest, 0)));
        }
        out.classes.push(EqualFlowClass {
            id: class.id.clone(),
            members,
            shared_value: class.shared_value,
        });
    }
    for arc in out.arcs().collect::<Vec<_>>() {
        if arc.source / ni != arc.dest / nj {
            out.forbidden.insert(arc);
        }
    }
    if has_objective {
        out.objective = Some(Objective {
            linear,
            ..Default::default()
        });
    }
    Ok(out)
}

/// Penalty weights for dualized constraints.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PenaltyConfig {
    pub lambda: i64,
    /// Per forbidden arc weight; arcs not listed use `lambda`.
    pub forbidden_weights: BTreeMap<ArcIndex, i64>,
}

impl PenaltyConfig {
    pub fn new(lambda: i64) -> Self {
        PenaltyConfig {
            lambda,
            forbidden_weights: BTreeMap::new(),
        }
    }

    /// `1 + sum |c| * (largest finite arc value)`, which exceeds the spread
    /// of the linear cost over all admissible points.
    pub fn default_for(instance: &ProblemInstance) -> Self {
        PenaltyConfig::new(default_lambda(instance))
    }

    fn weight(&self, arc: &ArcIndex) -> i64 {
        self.forbidden_weights.get(arc).copied().unwrap_or(self.lambda)
    }
}

pub fn default_lambda(instance: &ProblemInstance) -> i64 {
    let max_upper = instance
        .arcs()
        .filter_map(|a| effective_upper(instance, &a))
        .max()
        .unwrap_or(0)
        .max(0);
    let cost: i64 = instance
        .objective
        .as_ref()
        .map_or(0, |o| o.linear.iter().map(|c| c.abs()).sum());
    1 + cost * max_upper
}

/// Moves forbidden-arc constraints into the objective as `weight * x_arc`.
///
/// Each forbidden arc contributes its own term, so a forbidden class of `k`
/// members costs `k * weight * t`.
pub fn penalize_forbidden(instance: &ProblemInstance, cfg: &PenaltyConfig) -> ProblemInstance {
    let mut out = instance.clone();
    let mut obj = out
        .objective
        .take()
        .unwrap_or_else(|| Objective::zero(instance.arc_count()));
    for arc in instance.forbidden.iter() {
        obj.forbidden_penalties.push((*arc, cfg.weight(arc)));
    }
    out.forbidden = ForbiddenSet::new();
    out.objective = Some(obj);
    out
}

/// Moves class equalities into the objective as
/// `lambda * sum (x_member - t)^2`, with `t` a free integer within the
/// members' common bounds.
pub fn penalize_equality(instance: &ProblemInstance, cfg: &PenaltyConfig) -> ProblemInstance {
    let mut out = instance.clone();
    if instance.classes.is_empty() {
        return out;
    }
    let mut obj = out
        .objective
        .take()
        .unwrap_or_else(|| Objective::zero(instance.arc_count()));
    for class in &instance.classes {
        let mut value_bounds = class.members.iter().fold(
            VarBounds {
                lower: i64::MIN,
                upper: None,
            },
            |acc, m| {
                let b = instance.bounds_of(m);
                acc.intersect(&VarBounds {
                    lower: b.lower,
                    upper: effective_upper(instance, m),
                })
            },
        );
        if let Some(t) = class.shared_value {
            value_bounds = value_bounds.intersect(&VarBounds::new(t, t));
        }
        obj.class_penalties.push(ClassPenalty {
            id: class.id.clone(),
            members: class.members.clone(),
            weight: cfg.lambda,
            value_bounds,
        });
    }
    out.classes.clear();
    out.objective = Some(obj);
    out.kind = ProblemKind::GeneralizedQuadratic;
    out
}

/// Both penalty forms.
pub fn penalize(instance: &ProblemInstance, cfg: &PenaltyConfig) -> ProblemInstance {
    penalize_equality(&penalize_forbidden(instance, cfg), cfg)
}

/// Objective value split into its parts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ObjectiveBreakdown {
    pub cost: i64,
    pub forbidden_penalty: i64,
    pub equality_penalty: i64,
}

impl ObjectiveBreakdown {
    pub fn penalty(&self) -> i64 {
        self.forbidden_penalty + self.equality_penalty
    }

    pub fn total(&self) -> i64 {
        self.cost + self.penalty()
    }
}

/// Evaluates the instance objective at `w`; `shared` holds the value of each
/// penalized class's `t` by class id (missing ids count as zero).
pub fn objective_breakdown(
    instance: &ProblemInstance,
    w: &Witness,
    shared: &BTreeMap<String, i64>,
) -> ObjectiveBreakdown {
    let Some(obj) = &instance.objective else {
        return ObjectiveBreakdown::default();
    };
    let cost = obj.linear.iter().zip(&w.values).map(|(c, x)| c * x).sum();
    let forbidden_penalty = obj
        .forbidden_penalties
        .iter()
        .map(|(arc, weight)| weight * w.get(instance, arc))
        .sum();
    let equality_penalty = obj
        .class_penalties
        .iter()
        .map(|p| {
            let t = shared.get(&p.id).copied().unwrap_or(0);
            p.weight
                * p.members
                    .iter()
                    .map(|m| {
                        let d = w.get(instance, m) - t;
                        d * d
                    })
                    .sum::<i64>()
        })
        .sum();
    ObjectiveBreakdown {
        cost,
        forbidden_penalty,
        equality_penalty,
    }
}

/// Correspondence between transportation destinations and unit slots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlotMap {
    /// Destination count of the transportation side.
    pub n_dests: usize,
    /// Transportation destination of each assignment column.
    pub slot_dest: Vec<usize>,
}

impl SlotMap {
    pub fn slots_of(&self, dest: usize) -> impl Iterator<Item = usize> + '_ {
        self.slot_dest
            .iter()
            .enumerate()
            .filter(move |(_, d)| **d == dest)
            .map(|(s, _)| s)
    }
}

/// An assignment instance equivalent to a transportation instance, with a
/// witness corresponding to a given transportation witness.
#[derive(Debug, Clone)]
pub struct AssignmentLift {
    pub instance: ProblemInstance,
    pub witness: Witness,
    pub slots: SlotMap,
}

/// Checks the conditions under which the unit-slot expansion is exact.
fn check_equivalence_preconditions(instance: &ProblemInstance) -> Result<(), ReformError> {
    for class in &instance.classes {
        let Some(first) = class.members.first() else {
            continue;
        };
        let b = instance.bounds_of(first);
        if class.members.iter().any(|m| instance.bounds_of(m) != b) {
            return Err(ReformError::Unequibounded {
                class: class.id.clone(),
            });
        }
        let mut periods: Vec<usize> = class.members.iter().map(|m| m.period).collect();
        periods.sort_unstable();
        let same_route = class
            .members
            .iter()
            .all(|m| m.source == first.source && m.dest == first.dest);
        let consecutive = periods.windows(2).all(|w| w[1] == w[0] + 1);
        if !same_route || !consecutive {
            return Err(ReformError::NotSameRoute {
                class: class.id.clone(),
            });
        }
    }
    if instance.col_relation == Relation::Ge {
        return Err(ReformError::Unsupported(
            "destination demands must be '=' or '<=' to become unit slots".into(),
        ));
    }
    for (j, col) in instance.col_demand.iter().enumerate() {
        if col.windows(2).any(|w| w[0] != w[1]) {
            return Err(ReformError::Unsupported(format!(
                "destination {j} has a demand that varies over periods"
            )));
        }
    }
    for arc in instance.arcs() {
        let b = instance.bounds_of(&arc);
        if b.lower != 0 {
            return Err(ReformError::Unsupported(format!(
                "arc {arc} has a nonzero lower bound"
            )));
        }
        if let Some(u) = b.upper {
            if u < instance.col_demand[arc.dest][arc.period] {
                return Err(ReformError::Unsupported(format!(
                    "arc {arc} has an upper bound below its destination demand"
                )));
            }
        }
    }
    Ok(())
}

/// Expands every destination into unit slots and every transportation flow
/// into slot assignments.
///
/// Routes are processed by starting period (then source); each takes the
/// lowest-index slots free throughout its class's periods, so surplus slots
/// stay unused at the high end. Classes become one class per slot.
pub fn assignment_from_transportation(
    instance: &ProblemInstance,
    w: &Witness,
) -> Result<AssignmentLift, ReformError> {
    if !validate_witness(instance, w).map_err(|_| ReformError::InvalidWitness)? {
        return Err(ReformError::InvalidWitness);
    }
    check_equivalence_preconditions(instance)?;
    let demand: Vec<usize> = instance
        .col_demand
        .iter()
        .map(|c| c.first().copied().unwrap_or(0).max(0) as usize)
        .collect();
    let mut slot_dest = Vec::new();
    let mut first_slot = Vec::with_capacity(instance.n_dests);
    for (j, &a) in demand.iter().enumerate() {
        first_slot.push(slot_dest.len());
        slot_dest.extend(std::iter::repeat_n(j, a));
    }
    let slots = SlotMap {
        n_dests: instance.n_dests,
        slot_dest,
    };
    let ns = slots.slot_dest.len();

    let mut out = ProblemInstance::new(instance.n_sources, ns, instance.n_periods);
    out.row_supply = instance.row_supply.clone();
    out.row_relation = instance.row_relation;
    out.col_relation = instance.col_relation;
    out.col_demand = vec![vec![1; instance.n_periods]; ns];
    out.set_all_bounds(VarBounds::binary());
    out.kind = ProblemKind::Assignment;
    for arc in instance.forbidden.iter() {
        for s in slots.slots_of(arc.dest) {
            out.forbidden.insert(ArcIndex::new(arc.source, s, arc.period));
        }
    }
    let owner = instance
        .class_index()
        .ok_or_else(|| ReformError::Unsupported("classes overlap".into()))?;
    for class in &instance.classes {
        let Some(first) = class.members.first() else {
            continue;
        };
        for (k, s) in slots.slots_of(first.dest).enumerate() {
            out.classes.push(EqualFlowClass {
                id: format!("{}/{k}", class.id),
                members: class
                    .members
                    .iter()
                    .map(|m| ArcIndex::new(m.source, s, m.period))
                    .collect(),
                shared_value: class.shared_value.map(|_| 0).filter(|_| false),
            });
        }
    }
    if let Some(obj) = &instance.objective {
        let mut linear = vec![0; out.arc_count()];
        for arc in out.arcs() {
            let orig = ArcIndex::new(arc.source, slots.slot_dest[arc.dest], arc.period);
            linear[out.arc_pos(&arc)] = obj.linear[instance.arc_pos(&orig)];
        }
        out.objective = Some(Objective {
            linear,
            ..Default::default()
        });
    }

    // Items per destination: (start, end, source, flow).
    let mut witness = Witness::zeros(out.arc_count());
    for j in 0..instance.n_dests {
        let mut items: Vec<(usize, usize, usize, i64, Vec<usize>)> = Vec::new();
        let mut seen_class = BTreeSet::new();
        for i in 0..instance.n_sources {
            for t in 0..instance.n_periods {
                let arc = ArcIndex::new(i, j, t);
                let flow = w.get(instance, &arc);
                match owner[instance.arc_pos(&arc)] {
                    Some(c) => {
                        if seen_class.insert(c) {
                            let periods: Vec<usize> =
                                instance.classes[c].members.iter().map(|m| m.period).collect();
                            let lo = *periods.iter().min().expect("non-empty");
                            let hi = *periods.iter().max().expect("non-empty");
                            items.push((lo, hi, i, flow, periods));
                        }
                    }
                    None => items.push((t, t, i, flow, vec![t])),
                }
            }
        }
        items.sort_by_key(|(lo, hi, i, _, _)| (*lo, *hi, *i));
        let base = first_slot[j];
        let mut used = vec![vec![false; demand[j]]; instance.n_periods];
        for (_, _, i, flow, periods) in items {
            let mut taken = 0;
            for k in 0..demand[j] {
                if taken == flow {
                    break;
                }
                if periods.iter().all(|&t| !used[t][k]) {
                    for &t in &periods {
                        used[t][k] = true;
                        witness.set(&out, &ArcIndex::new(i, base + k, t), 1);
                    }
                    taken += 1;
                }
            }
            if taken < flow {
                return Err(ReformError::SlotConflict { dest: j });
            }
        }
    }
    debug_assert!(validate_witness(&out, &witness).unwrap_or(false));
    Ok(AssignmentLift {
        instance: out,
        witness,
        slots,
    })
}

/// Aggregates unit slots back into destinations: demands add up, slot
/// classes with the same route and periods merge, and an arc is forbidden
/// when all of its slots are.
pub fn transportation_from_assignment(
    assignment: &ProblemInstance,
    slots: &SlotMap,
    w: &Witness,
) -> Result<(ProblemInstance, Witness), ReformError> {
    if slots.slot_dest.len() != assignment.n_dests {
        return Err(ReformError::Unsupported(format!(
            "slot map covers {} columns, assignment has {}",
            slots.slot_dest.len(),
            assignment.n_dests
        )));
    }
    if !validate_witness(assignment, w).map_err(|_| ReformError::InvalidWitness)? {
        return Err(ReformError::InvalidWitness);
    }
    let (ni, nj, np) = (assignment.n_sources, slots.n_dests, assignment.n_periods);
    let mut out = ProblemInstance::new(ni, nj, np);
    out.row_supply = assignment.row_supply.clone();
    out.row_relation = assignment.row_relation;
    out.col_relation = assignment.col_relation;
    let mut witness = Witness::zeros(out.arc_count());
    for (s, &j) in slots.slot_dest.iter().enumerate() {
        for t in 0..np {
            out.col_demand[j][t] += assignment.col_demand[s][t];
        }
    }
    for arc in out.arcs().collect::<Vec<_>>() {
        let count = slots.slots_of(arc.dest).count() as i64;
        out.set_bounds(&arc, VarBounds::new(0, count));
        let mut all_forbidden = count > 0;
        let mut flow = 0;
        for s in slots.slots_of(arc.dest) {
            let slot_arc = ArcIndex::new(arc.source, s, arc.period);
            all_forbidden &= assignment.is_forbidden(&slot_arc);
            flow += w.get(assignment, &slot_arc);
        }
        if all_forbidden {
            out.forbidden.insert(arc);
        }
        witness.set(&out, &arc, flow);
    }
    let mut routes: BTreeMap<(usize, usize, Vec<usize>), String> = BTreeMap::new();
    for class in &assignment.classes {
        let Some(first) = class.members.first() else {
            continue;
        };
        let j = slots.slot_dest[first.dest];
        let mut periods: Vec<usize> = class.members.iter().map(|m| m.period).collect();
        periods.sort_unstable();
        let route_ok = class
            .members
            .iter()
            .all(|m| m.source == first.source && m.dest == first.dest);
        if !route_ok {
            return Err(ReformError::NotSameRoute {
                class: class.id.clone(),
            });
        }
        let id = class.id.split('/').next().unwrap_or(&class.id).to_string();
        routes.entry((first.source, j, periods)).or_insert(id);
    }
    for ((i, j, periods), id) in routes {
        out.classes.push(EqualFlowClass::new(
            id,
            periods.into_iter().map(|t| ArcIndex::new(i, j, t)).collect(),
        ));
    }
    if let Some(obj) = &assignment.objective {
        let mut linear = vec![0; out.arc_count()];
        for arc in assignment.arcs() {
            let target = ArcIndex::new(arc.source, slots.slot_dest[arc.dest], arc.period);
            linear[out.arc_pos(&target)] = obj.linear[assignment.arc_pos(&arc)];
        }
        out.objective = Some(Objective {
            linear,
            ..Default::default()
        });
    }
    Ok((out, witness))
}

/// One supply pool of a variable split.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pool {
    pub name: String,
    /// Suffix appended to class ids for this pool's half.
    pub suffix: String,
    /// Column capacity per `[dest][period]`.
    pub capacity: Vec<Vec<i64>>,
    /// Upper bound of this pool's copy of an arc, where it is tighter than
    /// the original bound.
    pub arc_caps: BTreeMap<ArcIndex, i64>,
}

/// How column capacities divide between pools.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionSpec {
    pub pools: Vec<Pool>,
}

impl PartitionSpec {
    /// Stable pool `+` (available across every class span) and transient
    /// pool `-` with per-arc caps.
    pub fn two_way(
        stable: Vec<Vec<i64>>,
        transient: Vec<Vec<i64>>,
        transient_caps: BTreeMap<ArcIndex, i64>,
    ) -> Self {
        PartitionSpec {
            pools: vec![
                Pool {
                    name: "stable".into(),
                    suffix: "+".into(),
                    capacity: stable,
                    arc_caps: BTreeMap::new(),
                },
                Pool {
                    name: "transient".into(),
                    suffix: "-".into(),
                    capacity: transient,
                    arc_caps: transient_caps,
                },
            ],
        }
    }
}

/// An instance whose arcs were split into one copy per pool.
#[derive(Debug, Clone)]
pub struct SplitInstance {
    pub base: ProblemInstance,
    pub original: Symbol,
    /// Original arc to its copies, in pool order.
    pub mapping: BTreeMap<ArcIndex, Vec<ArcIndex>>,
    pub pool_names: Vec<String>,
}

impl SplitInstance {
    pub fn plus(&self, arc: &ArcIndex) -> Option<ArcIndex> {
        self.mapping.get(arc).and_then(|v| v.first().copied())
    }

    pub fn minus(&self, arc: &ArcIndex) -> Option<ArcIndex> {
        self.mapping.get(arc).and_then(|v| v.get(1).copied())
    }

    /// Sums the copies of every arc back onto the original grid.
    pub fn recombine(&self, w: &Witness) -> Witness {
        let grid = ProblemInstance::new(
            self.original.sources,
            self.original.dests,
            self.original.periods,
        );
        let mut out = Witness::zeros(grid.arc_count());
        for (arc, parts) in &self.mapping {
            let v = parts.iter().map(|p| w.get(&self.base, p)).sum();
            out.set(&grid, arc, v);
        }
        out
    }
}

/// Splits every arc into one copy per pool.
///
/// Copy `k` of arc `(i, j, t)` is `(i, k*n_dests + j, t)`. Each column of the
/// split instance has its pool's capacity, every class is duplicated onto
/// each pool, forbidden arcs are forbidden in every pool, and pool arc caps
/// tighten the copies' upper bounds. The columns must be capacities (`<=`)
/// and pool capacities must add up to the original ones.
pub fn split_variables(
    instance: &ProblemInstance,
    partition: &PartitionSpec,
) -> Result<SplitInstance, ReformError> {
    if instance.col_relation != Relation::Le {
        return Err(ReformError::Unsupported(
            "splitting needs '<=' capacity columns".into(),
        ));
    }
    if instance.bounds.iter().any(|b| b.lower != 0) {
        return Err(ReformError::Unsupported(
            "splitting needs zero lower bounds".into(),
        ));
    }
    let (ni, nj, np) = (instance.n_sources, instance.n_dests, instance.n_periods);
    for pool in &partition.pools {
        if pool.capacity.len() != nj || pool.capacity.iter().any(|c| c.len() != np) {
            return Err(ReformError::Unsupported(format!(
                "pool {} capacity is not {nj}x{np}",
                pool.name
            )));
        }
        for (j, col) in pool.capacity.iter().enumerate() {
            for (t, &value) in col.iter().enumerate() {
                if value < 0 {
                    return Err(ReformError::NegativeCapacity {
                        pool: pool.name.clone(),
                        dest: j,
                        period: t,
                        value,
                    });
                }
            }
        }
        for (arc, &cap) in &pool.arc_caps {
            if cap < 0 {
                return Err(ReformError::NegativeCapacity {
                    pool: pool.name.clone(),
                    dest: arc.dest,
                    period: arc.period,
                    value: cap,
                });
            }
        }
    }
    for j in 0..nj {
        for t in 0..np {
            let found: i64 = partition.pools.iter().map(|p| p.capacity[j][t]).sum();
            let expected = instance.col_demand[j][t];
            if found != expected {
                return Err(ReformError::PartitionMismatch {
                    dest: j,
                    period: t,
                    expected,
                    found,
                });
            }
        }
    }

    let k = partition.pools.len();
    let mut out = ProblemInstance::new(ni, nj * k, np);
    out.row_supply = instance.row_supply.clone();
    out.row_relation = instance.row_relation;
    out.col_relation = instance.col_relation;
    out.kind = ProblemKind::Generalized;
    let mut mapping: BTreeMap<ArcIndex, Vec<ArcIndex>> = BTreeMap::new();
    for (p, pool) in partition.pools.iter().enumerate() {
        for j in 0..nj {
            out.col_demand[p * nj + j] = pool.capacity[j].clone();
        }
    }
    let mut linear = instance.objective.as_ref().map(|_| vec![0; out.arc_count()]);
    for arc in instance.arcs() {
        let b = instance.bounds_of(&arc);
        let copies: Vec<ArcIndex> = (0..k)
            .map(|p| ArcIndex::new(arc.source, p * nj + arc.dest, arc.period))
            .collect();
        for (pool, copy) in partition.pools.iter().zip(&copies) {
            let mut cb = b;
            if let Some(&cap) = pool.arc_caps.get(&arc) {
                cb = cb.intersect(&VarBounds::new(0, cap));
            }
            out.set_bounds(copy, cb);
            if instance.is_forbidden(&arc) {
                out.forbidden.insert(*copy);
            }
            if let (Some(lin), Some(obj)) = (linear.as_mut(), &instance.objective) {
                lin[out.arc_pos(copy)] = obj.linear[instance.arc_pos(&arc)];
            }
        }
        mapping.insert(arc, copies);
    }
    for class in &instance.classes {
        for (p, pool) in partition.pools.iter().enumerate() {
            out.classes.push(EqualFlowClass {
                id: format!("{}{}", class.id, pool.suffix),
                members: class
                    .members
                    .iter()
                    .map(|m| ArcIndex::new(m.source, p * nj + m.dest, m.period))
                    .collect(),
                shared_value: None,
            });
        }
    }
    if let Some(linear) = linear {
        out.objective = Some(Objective {
            linear,
            ..Default::default()
        });
    }
    Ok(SplitInstance {
        base: out,
        original: instance.symbol(),
        mapping,
        pool_names: partition.pools.iter().map(|p| p.name.clone()).collect(),
    })
}

/// North-west corner certificate for a plain balanced transportation
/// problem: one period, `=` balances, no classes, no forbidden arcs and no
/// finite upper bounds.
pub fn nw_corner(instance: &ProblemInstance) -> Certificate {
    let plain = instance.n_periods == 1
        && instance.classes.is_empty()
        && instance.forbidden.is_empty()
        && instance.row_relation == Relation::Eq
        && instance.col_relation == Relation::Eq
        && instance.bounds.iter().all(|b| b.lower == 0 && b.upper.is_none())
        && instance.validate().is_empty();
    if !plain {
        return Certificate::Unknown("not plain balanced".into());
    }
    let mut supply: Vec<i64> = instance.row_supply.iter().map(|r| r[0]).collect();
    let mut demand: Vec<i64> = instance.col_demand.iter().map(|c| c[0]).collect();
    let (s, d) = (supply.iter().sum::<i64>(), demand.iter().sum::<i64>());
    if s != d {
        return Certificate::Infeasible(Infeasibility::Imbalance {
            supply: s,
            demand: d,
        });
    }
    let mut w = Witness::zeros(instance.arc_count());
    let (mut i, mut j) = (0, 0);
    while i < instance.n_sources && j < instance.n_dests {
        let x = supply[i].min(demand[j]);
        w.set(instance, &ArcIndex::new(i, j, 0), x);
        supply[i] -= x;
        demand[j] -= x;
        if supply[i] == 0 {
            i += 1;
        } else {
            j += 1;
        }
    }
    Certificate::Feasible(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::search::{solve, solve_instance, SearchConfig};

    #[test]
    fn stacking_two_2x2_periods_forbids_eight_arcs() {
        let p = ProblemInstance::transportation(&[1, 1], &[1, 1]);
        let s = stack_by_index(&[p.clone(), p], &[]).unwrap();
        assert_eq!((s.n_sources, s.n_dests, s.n_periods), (4, 4, 1));
        assert_eq!(s.forbidden.len(), 8);
        assert!(s.validate().is_empty());
    }

    #[test]
    fn stacking_one_period_adds_nothing() {
        let p = ProblemInstance::transportation(&[2, 1], &[1, 2]);
        let s = stack_by_index(std::slice::from_ref(&p), &[]).unwrap();
        assert!(s.forbidden.is_empty());
        assert_eq!(s.row_supply, p.row_supply);
    }

    #[test]
    fn stacking_three_1x2_periods_matches_grid_scan() {
        let p = ProblemInstance::transportation(&[1], &[1, 0]);
        let s = stack_by_index(&[p.clone(), p.clone(), p], &[]).unwrap();
        let scanned = s
            .arcs()
            .filter(|a| a.source != a.dest / 2)
            .count();
        assert_eq!(scanned, 12);
        assert_eq!(s.forbidden.len(), scanned);
    }

    #[test]
    fn stacking_rejects_mismatched_dimensions() {
        let a = ProblemInstance::transportation(&[1], &[1]);
        let b = ProblemInstance::transportation(&[1, 1], &[2]);
        assert!(matches!(
            stack_by_index(&[a, b], &[]),
            Err(ReformError::DimensionMismatch { index: 1, .. })
        ));
    }

    #[test]
    fn forbidden_penalty_forms() {
        let inst = ProblemInstance::transportation(&[1], &[1]);
        let out = penalize_forbidden(&inst, &PenaltyConfig::new(100));
        assert!(!out.objective.unwrap().has_penalties());

        let mut inst = ProblemInstance::new(1, 1, 3);
        let members: Vec<ArcIndex> = (0..3).map(|t| ArcIndex::new(0, 0, t)).collect();
        inst.classes.push(EqualFlowClass::new("t", members.clone()));
        inst.set_all_bounds(VarBounds::binary());
        for m in &members {
            inst.forbidden.insert(*m);
        }
        inst.row_relation = Relation::Le;
        inst.col_relation = Relation::Le;
        inst.row_supply = vec![vec![1; 3]];
        inst.col_demand = vec![vec![1; 3]];
        let out = penalize_forbidden(&inst, &PenaltyConfig::new(100));
        assert!(out.forbidden.is_empty());
        // Per-member expansion with every member at t = 1.
        let w = Witness::new(vec![1, 1, 1]);
        let b = objective_breakdown(&out, &w, &BTreeMap::new());
        assert_eq!(b.forbidden_penalty, 300);
        let c = contract_classes(&out);
        let obj = c.objective.unwrap();
        assert_eq!(obj.linear, vec![(0, q(300))]);
    }

    #[test]
    fn single_forbidden_arc_penalty() {
        let mut inst = ProblemInstance::transportation(&[1, 0], &[1]);
        inst.forbidden.insert(ArcIndex::new(1, 0, 0));
        inst.objective = Some(Objective::zero(2));
        let out = penalize_forbidden(&inst, &PenaltyConfig::new(100));
        let obj = out.objective.unwrap();
        assert_eq!(obj.forbidden_penalties, vec![(ArcIndex::new(1, 0, 0), 100)]);
        assert!(obj.linear.iter().all(|c| *c == 0));
    }

    #[test]
    fn equality_penalty_value() {
        let mut inst = ProblemInstance::new(1, 1, 2);
        inst.set_all_bounds(VarBounds::binary());
        inst.row_relation = Relation::Le;
        inst.col_relation = Relation::Le;
        inst.row_supply = vec![vec![1, 1]];
        inst.col_demand = vec![vec![1, 1]];
        inst.classes.push(EqualFlowClass::new(
            "c",
            vec![ArcIndex::new(0, 0, 0), ArcIndex::new(0, 0, 1)],
        ));
        let out = penalize_equality(&inst, &PenaltyConfig::new(10));
        assert!(out.classes.is_empty());
        assert_eq!(out.kind, ProblemKind::GeneralizedQuadratic);
        let p = &out.objective.as_ref().unwrap().class_penalties[0];
        assert_eq!((p.weight, p.value_bounds), (10, VarBounds::binary()));
        let shared = BTreeMap::from([("c".to_string(), 1)]);
        let b = objective_breakdown(&out, &Witness::new(vec![1, 0]), &shared);
        assert_eq!(b.equality_penalty, 10);

        let none = ProblemInstance::transportation(&[1], &[1]);
        assert_eq!(penalize_equality(&none, &PenaltyConfig::new(10)), none);
    }

    #[test]
    fn default_lambda_dominates_cost_spread() {
        let mut inst = ProblemInstance::transportation(&[2, 1], &[1, 2]);
        inst.set_all_bounds(VarBounds::new(0, 2));
        inst.objective = Some(Objective {
            linear: vec![1, -3, 2, 0],
            ..Default::default()
        });
        assert_eq!(default_lambda(&inst), 1 + 6 * 2);
    }

    #[test]
    fn contraction_sums_class_coefficients() {
        let mut inst = ProblemInstance::new(1, 2, 1);
        inst.row_supply = vec![vec![2]];
        inst.col_demand = vec![vec![1], vec![1]];
        inst.set_all_bounds(VarBounds::binary());
        inst.classes.push(EqualFlowClass::new(
            "t",
            vec![ArcIndex::new(0, 0, 0), ArcIndex::new(0, 1, 0)],
        ));
        let c = contract_classes(&inst);
        assert_eq!(c.system.variables(), &["t".to_string()]);
        let row = c
            .system
            .source_constraints()
            .iter()
            .find(|(_, l)| l == "row[0,0]")
            .unwrap();
        assert_eq!(row.0.coeffs.get(&0), Some(&q(2)));
    }

    #[test]
    fn contraction_without_classes_keeps_every_arc() {
        let inst = ProblemInstance::transportation(&[1, 1], &[1, 1]);
        let c = contract_classes(&inst);
        assert_eq!(c.system.variables().len(), 4);
        // 2 rows + 2 columns + 4 lower bounds.
        assert_eq!(c.system.source_constraints().len(), 8);
    }

    #[test]
    fn contraction_flags_forbidden_nonzero_class() {
        let mut inst = ProblemInstance::new(1, 1, 2);
        let members = vec![ArcIndex::new(0, 0, 0), ArcIndex::new(0, 0, 1)];
        inst.classes.push(EqualFlowClass::new("t", members.clone()).fixed(1));
        for m in members {
            inst.forbidden.insert(m);
        }
        assert!(contract_classes(&inst).infeasible.is_some());
        let r = solve_instance(&inst, &SearchConfig::default()).unwrap();
        assert!(matches!(
            r.certificate,
            Certificate::Infeasible(Infeasibility::Construction(_))
        ));
    }

    #[test]
    fn contraction_round_trips_witnesses() {
        let mut inst = ProblemInstance::new(2, 1, 2);
        inst.set_all_bounds(VarBounds::binary());
        inst.row_supply = vec![vec![1, 1], vec![0, 0]];
        inst.col_demand = vec![vec![1, 1]];
        inst.classes.push(EqualFlowClass::new(
            "r",
            vec![ArcIndex::new(0, 0, 0), ArcIndex::new(0, 0, 1)],
        ));
        let c = contract_classes(&inst);
        let w = Witness::new(vec![1, 1, 0, 0]);
        let point = c.contract_witness(&w).unwrap();
        assert_eq!(c.expand(&point), w);
        let r = solve(&c.system, &c.bounds, None, &SearchConfig::default()).unwrap();
        assert!(validate_witness(&inst, &c.expand(&r.certificate.witness().unwrap().values)).unwrap());
    }

    #[test]
    fn nw_corner_examples() {
        let inst = ProblemInstance::transportation(&[3, 2], &[2, 3]);
        let Certificate::Feasible(w) = nw_corner(&inst) else {
            panic!("balanced")
        };
        assert_eq!(w.values, vec![2, 1, 0, 2]);
        assert!(validate_witness(&inst, &w).unwrap());

        let one = ProblemInstance::transportation(&[1], &[1]);
        assert_eq!(nw_corner(&one).witness().unwrap().values, vec![1]);

        let bad = ProblemInstance::transportation(&[2], &[1]);
        assert!(matches!(
            nw_corner(&bad),
            Certificate::Infeasible(Infeasibility::Imbalance { supply: 2, demand: 1 })
        ));

        let mut capped = ProblemInstance::transportation(&[1], &[1]);
        capped.set_all_bounds(VarBounds::binary());
        assert!(matches!(nw_corner(&capped), Certificate::Unknown(_)));
    }

    fn single_route(b: i64, a: i64, rel: Relation) -> ProblemInstance {
        let mut inst = ProblemInstance::transportation(&[b], &[a]);
        inst.col_relation = rel;
        inst
    }

    #[test]
    fn assignment_lift_fills_all_slots() {
        let inst = single_route(2, 2, Relation::Eq);
        let lift = assignment_from_transportation(&inst, &Witness::new(vec![2])).unwrap();
        assert_eq!(lift.witness.values, vec![1, 1]);
        assert!(lift.instance.validate().is_empty());
        assert!(validate_witness(&lift.instance, &lift.witness).unwrap());
    }

    #[test]
    fn assignment_lift_takes_lowest_slot_on_surplus() {
        let inst = single_route(1, 2, Relation::Le);
        let w = Witness::new(vec![1]);
        let a = assignment_from_transportation(&inst, &w).unwrap();
        let b = assignment_from_transportation(&inst, &w).unwrap();
        assert_eq!(a.witness.values, vec![1, 0]);
        assert_eq!(a.witness, b.witness);
        let (_, back) = transportation_from_assignment(&a.instance, &a.slots, &a.witness).unwrap();
        assert_eq!(back, w);
    }

    #[test]
    fn assignment_lift_of_zero_flow() {
        let inst = single_route(0, 1, Relation::Le);
        let lift = assignment_from_transportation(&inst, &Witness::new(vec![0])).unwrap();
        assert_eq!(lift.witness.values, vec![0]);
        let (t, back) =
            transportation_from_assignment(&lift.instance, &lift.slots, &lift.witness).unwrap();
        assert_eq!(back.values, vec![0]);
        assert!(validate_witness(&t, &back).unwrap());
    }

    #[test]
    fn unequibounded_class_is_sent_to_splitting() {
        let mut inst = ProblemInstance::new(1, 1, 2);
        inst.col_relation = Relation::Le;
        inst.col_demand = vec![vec![1, 1]];
        inst.set_bounds(&ArcIndex::new(0, 0, 0), VarBounds::new(0, 1));
        inst.classes.push(EqualFlowClass::new(
            "c",
            vec![ArcIndex::new(0, 0, 0), ArcIndex::new(0, 0, 1)],
        ));
        let e = assignment_from_transportation(&inst, &Witness::zeros(2)).unwrap_err();
        assert!(matches!(e, ReformError::Unequibounded { .. }));
        assert!(e.to_string().contains("split"));
    }

    #[test]
    fn split_rejects_negative_transient_capacity() {
        let mut inst = ProblemInstance::new(1, 1, 1);
        inst.col_relation = Relation::Le;
        inst.col_demand = vec![vec![1]];
        let partition = PartitionSpec::two_way(vec![vec![2]], vec![vec![-1]], BTreeMap::new());
        assert!(matches!(
            split_variables(&inst, &partition),
            Err(ReformError::NegativeCapacity { .. })
        ));
    }

    #[test]
    fn split_duplicates_classes_and_recombines() {
        let mut inst = ProblemInstance::new(1, 1, 2);
        inst.row_relation = Relation::Ge;
        inst.col_relation = Relation::Le;
        inst.row_supply = vec![vec![1, 1]];
        inst.col_demand = vec![vec![1, 1]];
        inst.classes.push(EqualFlowClass::new(
            "c",
            vec![ArcIndex::new(0, 0, 0), ArcIndex::new(0, 0, 1)],
        ));
        let partition = PartitionSpec::two_way(vec![vec![1, 1]], vec![vec![0, 0]], BTreeMap::new());
        let split = split_variables(&inst, &partition).unwrap();
        assert!(split.base.validate().is_empty());
        let ids: Vec<&str> = split.base.classes.iter().map(|c| c.id.as_str()).collect();
        assert_eq!(ids, vec!["c+", "c-"]);
        let r = solve_instance(&split.base, &SearchConfig::default()).unwrap();
        let w = r.certificate.witness().unwrap();
        let back = split.recombine(w);
        assert!(validate_witness(&inst, &back).unwrap());
        assert_eq!(split.plus(&ArcIndex::new(0, 0, 1)), Some(ArcIndex::new(0, 0, 1)));
        assert_eq!(split.minus(&ArcIndex::new(0, 0, 1)), Some(ArcIndex::new(0, 1, 1)));
    }
}
