//! JSON formats for instances, constraint systems and rental scenarios.
//!
//! Instance:
//!
//! ```json
//! {"dims": [2, 2, 1], "row_supply": [[1], [1]], "col_demand": [[1], [1]],
//!  "row_rel": "=", "col_rel": "=",
//!  "bounds": {"default": [0, 1], "overrides": [{"arc": [0, 1, 0], "lo": 0, "hi": null}]},
//!  "classes": [{"id": "t_01", "members": [[0, 1, 0]], "value": null}],
//!  "forbidden": [[1, 1, 0]], "cost": {"linear": [0, 1, 1, 0]}}
//! ```
//!
//! Optional extras: `"kind"`, and in `"cost"` the penalty lists `"forbidden"`
//! (`{"arc", "weight"}`) and `"classes"` (`{"id", "members", "weight", "lo",
//! "hi"}`).
//!
//! System: `{"variables": ["x", "y"], "constraints": [{"coeffs": {"x": 1,
//! "y": "1/2"}, "rel": "<=", "rhs": 3}], "bounds": {"x": [0, 1]}}`, with
//! rationals as integers or `"p/q"` strings and `null` for an infinite upper
//! bound. Variables without bounds default to `[0, null]`.
//!
//! Errors carry a JSON pointer to the offending value.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::carrental::Scenario;
use crate::fbce::LinearConstraint;
use crate::model::{
    ArcIndex, ClassPenalty, EqualFlowClass, ForbiddenSet, Objective, ProblemInstance, ProblemKind,
    Relation, VarBounds,
};
use crate::{Rational, Scalar, System};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JsonError {
    /// JSON pointer, empty for the document root.
    pub pointer: String,
    pub message: String,
}

impl fmt::Display for JsonError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let at = if self.pointer.is_empty() { "/" } else { &self.pointer };
        write!(f, "at {at}: {}", self.message)
    }
}

impl std::error::Error for JsonError {}

fn err(pointer: impl Into<String>, message: impl Into<String>) -> JsonError {
    JsonError {
        pointer: pointer.into(),
        message: message.into(),
    }
}

fn pointer_of(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        out.push('/');
        match seg {
            Segment::Seq { index } => out.push_str(&index.to_string()),
            Segment::Map { key } => out.push_str(&key.replace('~', "~0").replace('/', "~1")),
            Segment::Enum { variant } => out.push_str(variant),
            Segment::Unknown => out.push('?'),
        }
    }
    out
}

fn from_str_with_path<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T, JsonError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let pointer = pointer_of(e.path());
        err(pointer, e.into_inner().to_string())
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoundOverride {
    arc: [usize; 3],
    lo: i64,
    hi: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoundsDoc {
    default: (i64, Option<i64>),
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    overrides: Vec<BoundOverride>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClassDoc {
    id: String,
    members: Vec<[usize; 3]>,
    #[serde(default)]
    value: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ForbiddenPenaltyDoc {
    arc: [usize; 3],
    weight: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClassPenaltyDoc {
    id: String,
    members: Vec<[usize; 3]>,
    weight: i64,
    lo: i64,
    hi: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CostDoc {
    linear: Vec<i64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    forbidden: Vec<ForbiddenPenaltyDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    classes: Vec<ClassPenaltyDoc>,
}

fn default_bounds() -> BoundsDoc {
    BoundsDoc {
        default: (0, None),
        overrides: Vec::new(),
    }
}

fn default_rel() -> Relation {
    Relation::Eq
}

fn is_transportation(k: &ProblemKind) -> bool {
    *k == ProblemKind::Transportation
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceDoc {
    dims: [usize; 3],
    row_supply: Vec<Vec<i64>>,
    col_demand: Vec<Vec<i64>>,
    #[serde(default = "default_rel")]
    row_rel: Relation,
    #[serde(default = "default_rel")]
    col_rel: Relation,
    #[serde(default = "default_bounds")]
    bounds: BoundsDoc,
    #[serde(default)]
    classes: Vec<ClassDoc>,
    #[serde(default)]
    forbidden: Vec<[usize; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cost: Option<CostDoc>,
    #[serde(default, skip_serializing_if = "is_transportation")]
    kind: ProblemKind,
}

fn arc_of(a: [usize; 3]) -> ArcIndex {
    ArcIndex::new(a[0], a[1], a[2])
}

fn triple(a: &ArcIndex) -> [usize; 3] {
    [a.source, a.dest, a.period]
}

fn check_arc(dims: [usize; 3], a: [usize; 3], pointer: String) -> Result<ArcIndex, JsonError> {
    if a[0] >= dims[0] || a[1] >= dims[1] || a[2] >= dims[2] {
        return Err(err(pointer, format!("arc {a:?} is outside dims {dims:?}")));
    }
    Ok(arc_of(a))
}

fn check_grid(rows: &[Vec<i64>], n: usize, periods: usize, name: &str) -> Result<(), JsonError> {
    if rows.len() != n {
        return Err(err(format!("/{name}"), format!("expected {n} rows, found {}", rows.len())));
    }
    for (k, r) in rows.iter().enumerate() {
        if r.len() != periods {
            return Err(err(
                format!("/{name}/{k}"),
                format!("expected {periods} periods, found {}", r.len()),
            ));
        }
    }
    Ok(())
}

impl InstanceDoc {
    fn into_instance(self) -> Result<ProblemInstance, JsonError> {
        let dims = self.dims;
        let [ni, nj, nt] = dims;
        check_grid(&self.row_supply, ni, nt, "row_supply")?;
        check_grid(&self.col_demand, nj, nt, "col_demand")?;
        let mut inst = ProblemInstance::new(ni, nj, nt);
        inst.row_supply = self.row_supply;
        inst.col_demand = self.col_demand;
        inst.row_relation = self.row_rel;
        inst.col_relation = self.col_rel;
        inst.kind = self.kind;
        let (lo, hi) = self.bounds.default;
        inst.set_all_bounds(VarBounds { lower: lo, upper: hi });
        for (k, o) in self.bounds.overrides.iter().enumerate() {
            let arc = check_arc(dims, o.arc, format!("/bounds/overrides/{k}/arc"))?;
            inst.set_bounds(&arc, VarBounds { lower: o.lo, upper: o.hi });
        }
        for (k, c) in self.classes.into_iter().enumerate() {
            let mut members = Vec::with_capacity(c.members.len());
            for (m, a) in c.members.iter().enumerate() {
                members.push(check_arc(dims, *a, format!("/classes/{k}/members/{m}"))?);
            }
            inst.classes.push(EqualFlowClass {
                id: c.id,
                members,
                shared_value: c.value,
            });
        }
        let mut forbidden = ForbiddenSet::new();
        for (k, a) in self.forbidden.iter().enumerate() {
            forbidden.insert(check_arc(dims, *a, format!("/forbidden/{k}"))?);
        }
        inst.forbidden = forbidden;
        if let Some(cost) = self.cost {
            if cost.linear.len() != inst.arc_count() {
                return Err(err(
                    "/cost/linear",
                    format!("expected {} coefficients, found {}", inst.arc_count(), cost.linear.len()),
                ));
            }
            let mut obj = Objective {
                linear: cost.linear,
                ..Default::default()
            };
            for (k, f) in cost.forbidden.iter().enumerate() {
                let arc = check_arc(dims, f.arc, format!("/cost/forbidden/{k}/arc"))?;
                obj.forbidden_penalties.push((arc, f.weight));
            }
            for (k, c) in cost.classes.into_iter().enumerate() {
                let mut members = Vec::with_capacity(c.members.len());
                for (m, a) in c.members.iter().enumerate() {
                    members.push(check_arc(dims, *a, format!("/cost/classes/{k}/members/{m}"))?);
                }
                obj.class_penalties.push(ClassPenalty {
                    id: c.id,
                    members,
                    weight: c.weight,
                    value_bounds: VarBounds {
                        lower: c.lo,
                        upper: c.hi,
                    },
                });
            }
            inst.objective = Some(obj);
        }
        Ok(inst)
    }

    fn from_instance(inst: &ProblemInstance) -> Self {
        let mut freq: BTreeMap<(i64, Option<i64>), usize> = BTreeMap::new();
        for b in &inst.bounds {
            *freq.entry((b.lower, b.upper)).or_insert(0) += 1;
        }
        let default = freq
            .iter()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
            .map(|(k, _)| *k)
            .unwrap_or((0, Some(1)));
        let overrides = inst
            .arcs()
            .zip(&inst.bounds)
            .filter(|(_, b)| (b.lower, b.upper) != default)
            .map(|(a, b)| BoundOverride {
                arc: triple(&a),
                lo: b.lower,
                hi: b.upper,
            })
            .collect();
        InstanceDoc {
            dims: [inst.n_sources, inst.n_dests, inst.n_periods],
            row_supply: inst.row_supply.clone(),
            col_demand: inst.col_demand.clone(),
            row_rel: inst.row_relation,
            col_rel: inst.col_relation,
            bounds: BoundsDoc { default, overrides },
            classes: inst
                .classes
                .iter()
                .map(|c| ClassDoc {
                    id: c.id.clone(),
                    members: c.members.iter().map(triple).collect(),
                    value: c.shared_value,
                })
                .collect(),
            forbidden: inst.forbidden.iter().map(triple).collect(),
            cost: inst.objective.as_ref().map(|o| CostDoc {
                linear: o.linear.clone(),
                forbidden: o
                    .forbidden_penalties
                    .iter()
                    .map(|(a, w)| ForbiddenPenaltyDoc {
                        arc: triple(a),
                        weight: *w,
                    })
                    .collect(),
                classes: o
                    .class_penalties
                    .iter()
                    .map(|p| ClassPenaltyDoc {
                        id: p.id.clone(),
                        members: p.members.iter().map(triple).collect(),
                        weight: p.weight,
                        lo: p.value_bounds.lower,
                        hi: p.value_bounds.upper,
                    })
                    .collect(),
            }),
            kind: inst.kind,
        }
    }
}

/// Parses an instance; structural problems are reported with pointers, model
/// validation is left to the caller.
pub fn parse_instance(text: &str) -> Result<ProblemInstance, JsonError> {
    from_str_with_path::<InstanceDoc>(text)?.into_instance()
}

pub fn instance_to_value(inst: &ProblemInstance) -> Value {
    serde_json::to_value(InstanceDoc::from_instance(inst)).expect("instance documents serialize")
}

/// Pretty, deterministic instance JSON.
pub fn instance_to_json(inst: &ProblemInstance) -> String {
    serde_json::to_string_pretty(&instance_to_value(inst)).expect("values serialize")
}

/// An integer or `"p/q"` string.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
enum Number {
    Int(i64),
    Text(String),
}

impl Number {
    fn rational(&self, pointer: &str) -> Result<Rational, JsonError> {
        match self {
            Number::Int(v) => Ok(Rational::from_int(*v)),
            Number::Text(s) => Rational::parse_ratio(s)
                .ok_or_else(|| err(pointer, format!("{s:?} is not an integer or p/q rational"))),
        }
    }

    fn of(r: &Rational) -> Number {
        match r.to_int() {
            Some(v) => Number::Int(v),
            None => Number::Text(format!("{}/{}", r.numer(), r.denom())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConstraintDoc {
    coeffs: BTreeMap<String, Number>,
    rel: Relation,
    rhs: Number,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemDoc {
    variables: Vec<String>,
    constraints: Vec<ConstraintDoc>,
    #[serde(default)]
    bounds: BTreeMap<String, (i64, Option<i64>)>,
}

/// A system with one bound per variable. Bounds are also added to the system
/// as `lb[..]`/`ub[..]` rows.
pub fn parse_system(text: &str) -> Result<(System, Vec<VarBounds>), JsonError> {
    let doc: SystemDoc = from_str_with_path(text)?;
    let mut sys = System::new();
    for (k, v) in doc.variables.iter().enumerate() {
        if sys.var(v).is_some() {
            return Err(err(format!("/variables/{k}"), format!("duplicate variable {v}")));
        }
        sys.add_variable(v.clone());
    }
    for (k, c) in doc.constraints.iter().enumerate() {
        let mut lc = LinearConstraint::new(c.rel, c.rhs.rational(&format!("/constraints/{k}/rhs"))?);
        for (name, a) in &c.coeffs {
            let p = format!("/constraints/{k}/coeffs/{name}");
            let var = sys
                .var(name)
                .ok_or_else(|| err(p.clone(), format!("unknown variable {name}")))?;
            lc.add_term(var, a.rational(&p)?);
        }
        let label = c.label.clone().unwrap_or_else(|| format!("c{k}"));
        sys.add(lc, label);
    }
    let mut bounds = vec![VarBounds::nonnegative(); doc.variables.len()];
    for (name, (lo, hi)) in &doc.bounds {
        let var = sys
            .var(name)
            .ok_or_else(|| err(format!("/bounds/{name}"), format!("unknown variable {name}")))?;
        let b = VarBounds { lower: *lo, upper: *hi };
        if !b.is_valid() {
            return Err(err(format!("/bounds/{name}"), "lower bound exceeds upper bound"));
        }
        bounds[var] = b;
    }
    for (v, b) in bounds.iter().enumerate() {
        sys.add_bounds(v, *b);
    }
    Ok((sys, bounds))
}

/// JSON for a system's source constraints (bound rows excluded) and bounds.
pub fn system_to_json(sys: &System, bounds: &[VarBounds]) -> String {
    let constraints = sys
        .source_constraints()
        .iter()
        .filter(|(_, label)| !label.starts_with("lb[") && !label.starts_with("ub["))
        .map(|(c, label)| ConstraintDoc {
            coeffs: c
                .coeffs
                .iter()
                .map(|(v, a)| (sys.name(*v).to_string(), Number::of(a)))
                .collect(),
            rel: c.relation,
            rhs: Number::of(&c.rhs),
            label: Some(label.clone()),
        })
        .collect();
    let doc = SystemDoc {
        variables: sys.variables().to_vec(),
        constraints,
        bounds: bounds
            .iter()
            .enumerate()
            .map(|(v, b)| (sys.name(v).to_string(), (b.lower, b.upper)))
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("system documents serialize")
}

pub fn parse_scenario(text: &str) -> Result<Scenario, JsonError> {
    from_str_with_path(text)
}

pub fn scenario_to_json(s: &Scenario) -> String {
    serde_json::to_string_pretty(s).expect("scenarios serialize")
}

/// Any input the CLI accepts.
#[derive(Debug, Clone)]
pub enum Document {
    Instance(ProblemInstance),
    System(System, Vec<VarBounds>),
    Scenario(Scenario),
}

/// Dispatches on the top-level keys: `dims` for instances, `variables` for
/// systems, `horizon` for scenarios.
pub fn parse_document(text: &str) -> Result<Document, JsonError> {
    let value: Value = serde_json::from_str(text).map_err(|e| err("", e.to_string()))?;
    let Value::Object(map) = &value else {
        return Err(err("", "expected a JSON object"));
    };
    if map.contains_key("dims") {
        parse_instance(text).map(Document::Instance)
    } else if map.contains_key("variables") {
        parse_system(text).map(|(s, b)| Document::System(s, b))
    } else if map.contains_key("horizon") {
        parse_scenario(text).map(Document::Scenario)
    } else {
        Err(err("", "expected an instance (dims), a system (variables) or a scenario (horizon)"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::carrental::{Availability, Car, RentalRequest};

    const MINIMAL: &str = r#"{"dims":[1,1,1],"row_supply":[[1]],"col_demand":[[1]],
        "row_rel":"=","col_rel":"=","bounds":{"default":[0,1],"overrides":[]},
        "classes":[],"forbidden":[],"cost":{"linear":[0]}}"#;

    #[test]
    fn minimal_instance_parses() {
        let inst = parse_instance(MINIMAL).unwrap();
        assert_eq!(inst.symbol().size(), 1);
        assert_eq!(inst.bounds, vec![VarBounds::binary()]);
        assert!(inst.validate().is_empty());
        assert_eq!(parse_instance(&instance_to_json(&inst)).unwrap(), inst);
    }

    #[test]
    fn errors_carry_pointers() {
        let bad = MINIMAL.replace(r#""classes":[]"#, r#""classes":[{"id":"c","members":[[0,0,"x"]]}]"#);
        let e = parse_instance(&bad).unwrap_err();
        assert_eq!(e.pointer, "/classes/0/members/0/2");

        let out = MINIMAL.replace(r#""forbidden":[]"#, r#""forbidden":[[0,3,0]]"#);
        assert_eq!(parse_instance(&out).unwrap_err().pointer, "/forbidden/0");

        let short = MINIMAL.replace(r#""col_demand":[[1]]"#, r#""col_demand":[[1,2]]"#);
        assert_eq!(parse_instance(&short).unwrap_err().pointer, "/col_demand/0");

        let unknown = MINIMAL.replace(r#""dims""#, r#""extra":1,"dims""#);
        assert!(parse_instance(&unknown).is_err());
    }

    #[test]
    fn rich_instance_round_trips() {
        let mut inst = ProblemInstance::new(2, 1, 2);
        inst.row_relation = Relation::Le;
        inst.set_bounds(&ArcIndex::new(1, 0, 1), VarBounds { lower: 0, upper: None });
        inst.classes.push(EqualFlowClass::new("t", vec![ArcIndex::new(0, 0, 0), ArcIndex::new(0, 0, 1)]).fixed(1));
        inst.forbidden.insert(ArcIndex::new(1, 0, 0));
        inst.kind = ProblemKind::GeneralizedQuadratic;
        inst.objective = Some(Objective {
            linear: vec![1, 2, 3, 4],
            forbidden_penalties: vec![(ArcIndex::new(1, 0, 0), 9)],
            class_penalties: vec![ClassPenalty {
                id: "p".into(),
                members: vec![ArcIndex::new(0, 0, 0)],
                weight: 5,
                value_bounds: VarBounds::binary(),
            }],
        });
        let text = instance_to_json(&inst);
        assert_eq!(parse_instance(&text).unwrap(), inst);
        assert_eq!(instance_to_json(&parse_instance(&text).unwrap()), text);
    }

    #[test]
    fn system_parses_rationals_and_bounds() {
        let text = r#"{"variables":["x","y"],
            "constraints":[{"coeffs":{"x":1,"y":"1/2"},"rel":"<=","rhs":"3/2"}],
            "bounds":{"x":[0,1]}}"#;
        let (sys, bounds) = parse_system(text).unwrap();
        assert_eq!(bounds, vec![VarBounds::binary(), VarBounds::nonnegative()]);
        let c = &sys.source_constraints()[0].0;
        assert_eq!(c.coeffs[&1], Rational::new(1.into(), 2.into()));
        let (again, b2) = parse_system(&system_to_json(&sys, &bounds)).unwrap();
        assert_eq!(b2, bounds);
        assert_eq!(again.source_constraints()[0].0, *c);
    }

    #[test]
    fn system_unknown_variable_pointer() {
        let text = r#"{"variables":["x"],"constraints":[{"coeffs":{"z":1},"rel":">=","rhs":1}]}"#;
        assert_eq!(parse_system(text).unwrap_err().pointer, "/constraints/0/coeffs/z");
    }

    #[test]
    fn scenario_round_trips() {
        let text = r#"{"horizon":2,"models":["b0"],
            "availability":{"roster":[{"model":"b0","days":[1,2]}]},
            "requests":[{"id":"r1","start":1,"duration":2,"models":["b0"],"quantity":1}]}"#;
        let s = parse_scenario(text).unwrap();
        assert_eq!(
            s.availability,
            Availability::Roster(vec![Car {
                model: "b0".into(),
                days: [1, 2].into_iter().collect()
            }])
        );
        assert_eq!(
            s.requests[0],
            RentalRequest {
                id: "r1".into(),
                start: 1,
                duration: 2,
                models: vec!["b0".into()],
                quantity: 1
            }
        );
        assert_eq!(parse_scenario(&scenario_to_json(&s)).unwrap(), s);
        assert!(matches!(parse_document(text).unwrap(), Document::Scenario(_)));
    }
}
