//! Car-rental acceptance: can every request be served?
//!
//! Requests are rows, models are columns and days are periods. Days are
//! 1-based in scenarios and reports, 0-based on instance grids.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    validate_witness, ArcIndex, Certificate, EqualFlowClass, ProblemInstance, ProblemKind, Relation,
    VarBounds, Witness,
};
use crate::pipeline::{self, DecideOptions, Method};
use crate::reform::{self, PartitionSpec, Pool, ReformError, SplitInstance};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RentalRequest {
    pub id: String,
    /// First day, 1-based.
    pub start: usize,
    pub duration: usize,
    pub models: Vec<String>,
    pub quantity: i64,
}

impl RentalRequest {
    /// Last day, 1-based.
    pub fn end(&self) -> usize {
        self.start + self.duration - 1
    }

    pub fn covers(&self, day: usize) -> bool {
        self.start <= day && day <= self.end()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Car {
    pub model: String,
    /// Available days, 1-based.
    pub days: BTreeSet<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Availability {
    /// Cars per `[day][model]`.
    Counts(Vec<Vec<i64>>),
    Roster(Vec<Car>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub horizon: usize,
    pub models: Vec<String>,
    pub availability: Availability,
    pub requests: Vec<RentalRequest>,
}

/// Counts per `[day][model]` derived from a scenario.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FleetAvailability {
    pub horizon: usize,
    pub models: Vec<String>,
    pub counts: Vec<Vec<i64>>,
    pub roster: Option<Vec<Car>>,
}

impl FleetAvailability {
    /// `m_bd` with 0-based model and day.
    pub fn count(&self, model: usize, day: usize) -> i64 {
        self.counts[day][model]
    }

    /// Whether every model has the same count on every day.
    pub fn is_constant(&self) -> bool {
        self.counts.windows(2).all(|w| w[0] == w[1])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RentalError {
    #[error("scenario has no days")]
    EmptyHorizon,
    #[error("scenario has no models")]
    NoModels,
    #[error("duplicate model {0}")]
    DuplicateModel(String),
    #[error("request {id}: {reason}")]
    BadRequest { id: String, reason: String },
    #[error("availability: {0}")]
    BadAvailability(String),
    #[error("case 1 needs one-day requests; request {0} spans several days, use case 2 or 3")]
    NeedsCase2(String),
    #[error("case 2 needs a constant fleet; model {model} changes on day {day}, use case 3")]
    NeedsCase3 { model: String, day: usize },
    #[error("negative derived capacity for model {model} on day {day}")]
    NegativeCapacity { model: String, day: usize },
    #[error(transparent)]
    Reform(#[from] ReformError),
}

impl Scenario {
    pub fn model_index(&self, name: &str) -> Option<usize> {
        self.models.iter().position(|m| m == name)
    }

    /// Checks the scenario and derives per-day counts.
    pub fn fleet(&self) -> Result<FleetAvailability, RentalError> {
        if self.horizon == 0 {
            return Err(RentalError::EmptyHorizon);
        }
        if self.models.is_empty() {
            return Err(RentalError::NoModels);
        }
        let mut seen = BTreeSet::new();
        for m in &self.models {
            if !seen.insert(m) {
                return Err(RentalError::DuplicateModel(m.clone()));
            }
        }
        let mut ids = BTreeSet::new();
        for r in &self.requests {
            let bad = |reason: &str| RentalError::BadRequest {
                id: r.id.clone(),
                reason: reason.to_string(),
            };
            if !ids.insert(&r.id) {
                return Err(bad("duplicate id"));
            }
            if r.start < 1 || r.duration < 1 || r.end() > self.horizon {
                return Err(bad("window leaves the horizon"));
            }
            if r.models.is_empty() {
                return Err(bad("no allowed models"));
            }
            if let Some(m) = r.models.iter().find(|m| self.model_index(m).is_none()) {
                return Err(bad(&format!("unknown model {m}")));
            }
            if r.quantity < 1 {
                return Err(bad("quantity must be at least 1"));
            }
        }
        let (nd, nb) = (self.horizon, self.models.len());
        let (counts, roster) = match &self.availability {
            Availability::Counts(c) => {
                if c.len() != nd || c.iter().any(|row| row.len() != nb) {
                    return Err(RentalError::BadAvailability(format!(
                        "counts must be {nd} days by {nb} models"
                    )));
                }
                if c.iter().flatten().any(|v| *v < 0) {
                    return Err(RentalError::BadAvailability("negative count".into()));
                }
                (c.clone(), None)
            }
            Availability::Roster(cars) => {
                let mut counts = vec![vec![0; nb]; nd];
                for (k, car) in cars.iter().enumerate() {
                    let b = self.model_index(&car.model).ok_or_else(|| {
                        RentalError::BadAvailability(format!("car {k} has unknown model {}", car.model))
                    })?;
                    for &d in &car.days {
                        if d < 1 || d > nd {
                            return Err(RentalError::BadAvailability(format!(
                                "car {k} lists day {d} outside the horizon"
                            )));
                        }
                        counts[d - 1][b] += 1;
                    }
                }
                (counts, Some(cars.clone()))
            }
        };
        Ok(FleetAvailability {
            horizon: nd,
            models: self.models.clone(),
            counts,
            roster,
        })
    }

    fn allowed(&self, r: &RentalRequest, b: usize) -> bool {
        r.models.iter().any(|m| *m == self.models[b])
    }
}

/// Availability split into the all-horizon pool and the transient rest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AvailabilityDecomposition {
    /// Cars of each model available on every day.
    pub m_bt: Vec<i64>,
    /// `m_bd - m_bT` per `[model][day]`.
    pub m_bd_prime: Vec<Vec<i64>>,
    /// Per `(request, model)`: transient cars covering the whole window.
    pub window_caps: BTreeMap<(usize, usize), i64>,
}

/// With a roster, pools come from actual car availability. Counts alone use
/// the min rule: `m_bT = min_d m_bd` and a window cap is the window minimum
/// less `m_bT`.
pub fn decompose_availability(scenario: &Scenario) -> Result<AvailabilityDecomposition, RentalError> {
    let fleet = scenario.fleet()?;
    let (nb, nd) = (scenario.models.len(), scenario.horizon);
    let all_days = |c: &Car| (1..=nd).all(|d| c.days.contains(&d));
    let m_bt: Vec<i64> = match &fleet.roster {
        Some(cars) => (0..nb)
            .map(|b| {
                cars.iter()
                    .filter(|c| c.model == scenario.models[b] && all_days(c))
                    .count() as i64
            })
            .collect(),
        None => (0..nb)
            .map(|b| (0..nd).map(|d| fleet.count(b, d)).min().unwrap_or(0))
            .collect(),
    };
    let mut m_bd_prime = vec![vec![0; nd]; nb];
    for b in 0..nb {
        for d in 0..nd {
            let v = fleet.count(b, d) - m_bt[b];
            if v < 0 {
                return Err(RentalError::NegativeCapacity {
                    model: scenario.models[b].clone(),
                    day: d + 1,
                });
            }
            m_bd_prime[b][d] = v;
        }
    }
    let mut window_caps = BTreeMap::new();
    for (i, r) in scenario.requests.iter().enumerate() {
        for b in 0..nb {
            let covering = match &fleet.roster {
                Some(cars) => cars
                    .iter()
                    .filter(|c| c.model == scenario.models[b] && (r.start..=r.end()).all(|d| c.days.contains(&d)))
                    .count() as i64,
                None => (r.start..=r.end()).map(|d| fleet.count(b, d - 1)).min().unwrap_or(0),
            };
            let cap = covering - m_bt[b];
            if cap < 0 {
                return Err(RentalError::NegativeCapacity {
                    model: scenario.models[b].clone(),
                    day: r.start,
                });
            }
            window_caps.insert((i, b), cap);
        }
    }
    Ok(AvailabilityDecomposition {
        m_bt,
        m_bd_prime,
        window_caps,
    })
}

/// Requests as rows, with demand `n_i` on each day of the window and zero
/// elsewhere, forbidding disallowed models and days outside windows.
fn request_grid(scenario: &Scenario, capacity: &[Vec<i64>]) -> ProblemInstance {
    let (nr, nb, nd) = (scenario.requests.len(), scenario.models.len(), scenario.horizon);
    let mut inst = ProblemInstance::new(nr, nb, nd);
    inst.kind = ProblemKind::Generalized;
    inst.row_relation = Relation::Ge;
    inst.col_relation = Relation::Le;
    for (i, r) in scenario.requests.iter().enumerate() {
        for d in 0..nd {
            inst.row_supply[i][d] = if r.covers(d + 1) { r.quantity } else { 0 };
            for b in 0..nb {
                if !r.covers(d + 1) || !scenario.allowed(r, b) {
                    inst.forbidden.insert(ArcIndex::new(i, b, d));
                }
            }
        }
    }
    for b in 0..nb {
        for d in 0..nd {
            inst.col_demand[b][d] = capacity[d][b];
        }
    }
    inst.set_all_bounds(VarBounds::nonnegative());
    inst
}

fn window_classes(scenario: &Scenario, inst: &mut ProblemInstance) {
    for (i, r) in scenario.requests.iter().enumerate() {
        for b in 0..scenario.models.len() {
            if scenario.allowed(r, b) {
                let members = (r.start..=r.end()).map(|d| ArcIndex::new(i, b, d - 1)).collect();
                inst.classes.push(EqualFlowClass::new(format!("{}:{}", r.id, scenario.models[b]), members));
            }
        }
    }
}

/// One instance per day over the requests of that day.
#[derive(Debug, Clone)]
pub struct DayInstance {
    /// 1-based day.
    pub day: usize,
    /// Scenario request index of each row.
    pub requests: Vec<usize>,
    pub instance: ProblemInstance,
}

/// Independent single-day problems. Counts may vary by day, since days do
/// not interact when every request lasts one day.
pub fn build_case1(scenario: &Scenario) -> Result<Vec<DayInstance>, RentalError> {
    let fleet = scenario.fleet()?;
    if let Some(r) = scenario.requests.iter().find(|r| r.duration != 1) {
        return Err(RentalError::NeedsCase2(r.id.clone()));
    }
    let nb = scenario.models.len();
    let mut out = Vec::with_capacity(scenario.horizon);
    for day in 1..=scenario.horizon {
        let requests: Vec<usize> = (0..scenario.requests.len())
            .filter(|&i| scenario.requests[i].start == day)
            .collect();
        let mut inst = ProblemInstance::new(requests.len(), nb, 1);
        inst.kind = ProblemKind::Transportation;
        inst.row_relation = Relation::Ge;
        inst.col_relation = Relation::Le;
        for (row, &i) in requests.iter().enumerate() {
            let r = &scenario.requests[i];
            inst.row_supply[row][0] = r.quantity;
            for b in 0..nb {
                if !scenario.allowed(r, b) {
                    inst.forbidden.insert(ArcIndex::new(row, b, 0));
                }
            }
        }
        for b in 0..nb {
            inst.col_demand[b][0] = fleet.count(b, day - 1);
        }
        out.push(DayInstance {
            day,
            requests,
            instance: inst,
        });
    }
    Ok(out)
}

/// One instance over (request, model, day) with a class per request and
/// allowed model across the request window.
pub fn build_case2(scenario: &Scenario) -> Result<ProblemInstance, RentalError> {
    let fleet = scenario.fleet()?;
    if let Some((b, d)) = first_change(&fleet) {
        return Err(RentalError::NeedsCase3 {
            model: scenario.models[b].clone(),
            day: d + 1,
        });
    }
    let mut inst = request_grid(scenario, &fleet.counts);
    window_classes(scenario, &mut inst);
    Ok(inst)
}

fn first_change(fleet: &FleetAvailability) -> Option<(usize, usize)> {
    if let Some(cars) = &fleet.roster {
        if let Some(car) = cars.iter().find(|c| c.days.len() != fleet.horizon) {
            let day = (1..=fleet.horizon).find(|d| !car.days.contains(d)).unwrap_or(1);
            let b = fleet.models.iter().position(|m| *m == car.model).unwrap_or(0);
            return Some((b, day - 1));
        }
    }
    for d in 1..fleet.horizon {
        for b in 0..fleet.models.len() {
            if fleet.counts[d][b] != fleet.counts[0][b] {
                return Some((b, d));
            }
        }
    }
    None
}

/// How Case 3 divides the fleet between pools.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Case3Form {
    /// Stable pool `m_bT` and one transient pool `m_bd'` with per-window
    /// caps. Without a roster this is the only form available; with
    /// overlapping windows it can admit scenarios no car assignment serves.
    TwoWay,
    /// One pool per distinct availability pattern of the roster. A request
    /// may draw from a pool only if the pattern covers its window. Exact.
    Patterns,
    /// `Patterns` with a roster, `TwoWay` without.
    Auto,
}

/// Split-variable instance: `x = x+ + x-` (or one part per pool), with
/// classes duplicated onto every part.
pub fn build_case3(scenario: &Scenario, form: Case3Form) -> Result<SplitInstance, RentalError> {
    let fleet = scenario.fleet()?;
    let base = {
        let mut inst = request_grid(scenario, &fleet.counts);
        window_classes(scenario, &mut inst);
        inst
    };
    let (nb, nd) = (scenario.models.len(), scenario.horizon);
    let use_patterns = match form {
        Case3Form::Patterns => {
            if fleet.roster.is_none() {
                return Err(RentalError::BadAvailability(
                    "pattern pools need a car roster".into(),
                ));
            }
            true
        }
        Case3Form::TwoWay => false,
        Case3Form::Auto => fleet.roster.is_some(),
    };
    let partition = if use_patterns {
        let cars = fleet.roster.as_ref().expect("roster checked");
        let mut patterns: BTreeMap<Vec<usize>, Vec<Vec<i64>>> = BTreeMap::new();
        let full: Vec<usize> = (1..=nd).collect();
        patterns.entry(full.clone()).or_insert_with(|| vec![vec![0; nd]; nb]);
        for car in cars {
            let days: Vec<usize> = car.days.iter().copied().collect();
            let b = scenario.model_index(&car.model).expect("validated");
            let cap = patterns.entry(days.clone()).or_insert_with(|| vec![vec![0; nd]; nb]);
            for d in days {
                cap[b][d - 1] += 1;
            }
        }
        let mut order: Vec<Vec<usize>> = vec![full.clone()];
        order.extend(patterns.keys().filter(|p| **p != full).cloned());
        let pools = order
            .into_iter()
            .map(|days| {
                let capacity = patterns[&days].clone();
                let mut arc_caps = BTreeMap::new();
                for (i, r) in scenario.requests.iter().enumerate() {
                    if !(r.start..=r.end()).all(|d| days.contains(&d)) {
                        for b in 0..nb {
                            for d in r.start..=r.end() {
                                arc_caps.insert(ArcIndex::new(i, b, d - 1), 0);
                            }
                        }
                    }
                }
                let name = if days.len() == nd {
                    "T".to_string()
                } else {
                    format!(
                        "days{}",
                        days.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("_")
                    )
                };
                let suffix = if days.len() == nd { "+".to_string() } else { format!("@{name}") };
                Pool {
                    name,
                    suffix,
                    capacity,
                    arc_caps,
                }
            })
            .collect();
        PartitionSpec { pools }
    } else {
        let dec = decompose_availability(scenario)?;
        let stable = (0..nb).map(|b| vec![dec.m_bt[b]; nd]).collect();
        let transient = dec.m_bd_prime.clone();
        let mut caps = BTreeMap::new();
        for (&(i, b), &cap) in &dec.window_caps {
            let r = &scenario.requests[i];
            for d in r.start..=r.end() {
                caps.insert(ArcIndex::new(i, b, d - 1), cap);
            }
        }
        PartitionSpec::two_way(stable, transient, caps)
    };
    Ok(reform::split_variables(&base, &partition)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RentalCase {
    One,
    Two,
    Three,
}

impl RentalCase {
    pub fn number(self) -> u8 {
        match self {
            RentalCase::One => 1,
            RentalCase::Two => 2,
            RentalCase::Three => 3,
        }
    }
}

/// The weakest case whose preconditions hold.
pub fn select_case(scenario: &Scenario) -> Result<RentalCase, RentalError> {
    let fleet = scenario.fleet()?;
    if scenario.requests.iter().all(|r| r.duration == 1) {
        Ok(RentalCase::One)
    } else if first_change(&fleet).is_none() {
        Ok(RentalCase::Two)
    } else {
        Ok(RentalCase::Three)
    }
}

/// Cars of one model given to one request on one day.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Allocation {
    pub request: String,
    pub model: String,
    /// 1-based.
    pub day: usize,
    pub count: i64,
}

#[derive(Debug, Clone)]
pub struct Acceptance {
    pub case: RentalCase,
    pub method: Method,
    pub certificate: Certificate,
    /// Nonzero allocations when feasible, sorted by request order then model
    /// then day.
    pub allocations: Option<Vec<Allocation>>,
    pub nodes: u64,
}

/// Folds day certificates: Feasible only if all are, else the first
/// Infeasible, else the first Unknown.
fn combine(certs: Vec<Certificate>) -> Certificate {
    if let Some(bad) = certs.iter().find(|c| c.is_infeasible()) {
        return bad.clone();
    }
    if let Some(u) = certs.iter().find(|c| !c.is_feasible()) {
        return u.clone();
    }
    Certificate::Feasible(Witness::new(Vec::new()))
}

/// Decides whether every request can be accepted. `case` of `None` selects
/// the weakest sufficient case; Case 3 uses [`Case3Form::Auto`].
pub fn accept_requests(
    scenario: &Scenario,
    case: Option<RentalCase>,
    method: Method,
    opts: &DecideOptions,
) -> Result<Acceptance, RentalError> {
    let case = match case {
        Some(c) => c,
        None => select_case(scenario)?,
    };
    let (nr, nb, nd) = (scenario.requests.len(), scenario.models.len(), scenario.horizon);
    let grid = ProblemInstance::new(nr, nb, nd);
    let mut table = Witness::zeros(grid.arc_count());
    let mut nodes = 0;
    let certificate = match case {
        RentalCase::One => {
            let days = build_case1(scenario)?;
            let mut certs = Vec::with_capacity(days.len());
            for day in &days {
                let d = pipeline::decide(&day.instance, method, opts);
                nodes += d.stats.nodes.unwrap_or(0);
                if let Certificate::Feasible(w) = &d.certificate {
                    debug_assert!(validate_witness(&day.instance, w).unwrap_or(false));
                    for (row, &i) in day.requests.iter().enumerate() {
                        for b in 0..nb {
                            let v = w.get(&day.instance, &ArcIndex::new(row, b, 0));
                            table.set(&grid, &ArcIndex::new(i, b, day.day - 1), v);
                        }
                    }
                }
                certs.push(d.certificate);
            }
            match combine(certs) {
                Certificate::Feasible(_) => Certificate::Feasible(table.clone()),
                other => other,
            }
        }
        RentalCase::Two => {
            let inst = build_case2(scenario)?;
            let d = pipeline::decide(&inst, method, opts);
            nodes = d.stats.nodes.unwrap_or(0);
            d.certificate
        }
        RentalCase::Three => {
            let split = build_case3(scenario, Case3Form::Auto)?;
            let d = pipeline::decide(&split.base, method, opts);
            nodes = d.stats.nodes.unwrap_or(0);
            match d.certificate {
                Certificate::Feasible(w) => Certificate::Feasible(split.recombine(&w)),
                other => other,
            }
        }
    };
    let allocations = certificate.witness().map(|w| {
        let mut out = Vec::new();
        for (i, r) in scenario.requests.iter().enumerate() {
            for b in 0..nb {
                for d in 0..nd {
                    let count = w.get(&grid, &ArcIndex::new(i, b, d));
                    if count != 0 {
                        out.push(Allocation {
                            request: r.id.clone(),
                            model: scenario.models[b].clone(),
                            day: d + 1,
                            count,
                        });
                    }
                }
            }
        }
        out
    });
    Ok(Acceptance {
        case,
        method,
        certificate,
        allocations,
        nodes,
    })
}

/// Re-checks an allocation table against the scenario directly: windows,
/// allowed models, quantities, daily counts, and constant per-request model
/// counts across each window.
pub fn allocations_valid(scenario: &Scenario, allocations: &[Allocation]) -> bool {
    let Ok(fleet) = scenario.fleet() else {
        return false;
    };
    let mut per: BTreeMap<(&str, &str), BTreeMap<usize, i64>> = BTreeMap::new();
    let mut daily: BTreeMap<(&str, usize), i64> = BTreeMap::new();
    for a in allocations {
        let Some(r) = scenario.requests.iter().find(|r| r.id == a.request) else {
            return false;
        };
        if a.count < 0 || !r.covers(a.day) || !r.models.contains(&a.model) {
            return false;
        }
        *per.entry((&r.id, &a.model)).or_default().entry(a.day).or_insert(0) += a.count;
        *daily.entry((&a.model, a.day)).or_insert(0) += a.count;
    }
    for ((model, day), used) in &daily {
        let b = scenario.model_index(model).expect("checked");
        if *used > fleet.count(b, day - 1) {
            return false;
        }
    }
    for r in &scenario.requests {
        for m in &r.models {
            let days = per.get(&(r.id.as_str(), m.as_str()));
            let first = days.and_then(|d| d.get(&r.start)).copied().unwrap_or(0);
            if (r.start..=r.end()).any(|d| days.and_then(|x| x.get(&d)).copied().unwrap_or(0) != first) {
                return false;
            }
        }
        for d in r.start..=r.end() {
            let total: i64 = r
                .models
                .iter()
                .map(|m| per.get(&(r.id.as_str(), m.as_str())).and_then(|x| x.get(&d)).copied().unwrap_or(0))
                .sum();
            if total < r.quantity {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{self, roster_accepts, EnumerationBudget};

    fn request(id: &str, start: usize, duration: usize, models: &[&str], quantity: i64) -> RentalRequest {
        RentalRequest {
            id: id.into(),
            start,
            duration,
            models: models.iter().map(|m| m.to_string()).collect(),
            quantity,
        }
    }

    fn car(model: &str, days: &[usize]) -> Car {
        Car {
            model: model.into(),
            days: days.iter().copied().collect(),
        }
    }

    fn s_fleet(quantity: i64) -> Scenario {
        Scenario {
            horizon: 2,
            models: vec!["b0".into()],
            availability: Availability::Roster(vec![car("b0", &[1]), car("b0", &[1, 2]), car("b0", &[2])]),
            requests: vec![request("r1", 1, 2, &["b0"], quantity)],
        }
    }

    fn opts() -> DecideOptions {
        DecideOptions::default()
    }

    #[test]
    fn s_fleet_decomposition() {
        let dec = decompose_availability(&s_fleet(1)).unwrap();
        assert_eq!(dec.m_bt, vec![1]);
        assert_eq!(dec.m_bd_prime, vec![vec![1, 1]]);
        assert_eq!(dec.window_caps[&(0, 0)], 0);
    }

    #[test]
    fn s_fleet_counts_only_uses_min_rule() {
        let mut s = s_fleet(1);
        s.availability = Availability::Counts(vec![vec![2], vec![2]]);
        let dec = decompose_availability(&s).unwrap();
        // Counts cannot tell S2 apart from a pair of one-day cars.
        assert_eq!(dec.m_bt, vec![2]);
        assert_eq!(dec.m_bd_prime, vec![vec![0, 0]]);
    }

    #[test]
    fn constant_fleet_has_no_transient_pool() {
        let s = Scenario {
            horizon: 3,
            models: vec!["b0".into()],
            availability: Availability::Counts(vec![vec![5]; 3]),
            requests: vec![request("r", 1, 2, &["b0"], 1)],
        };
        let dec = decompose_availability(&s).unwrap();
        assert_eq!(dec.m_bt, vec![5]);
        assert!(dec.window_caps.values().all(|c| *c == 0));
        for row in &dec.m_bd_prime {
            assert!(row.iter().all(|v| *v == 0));
        }
    }

    #[test]
    fn s_fleet_verdicts() {
        for form in [Case3Form::TwoWay, Case3Form::Patterns] {
            let one = build_case3(&s_fleet(1), form).unwrap();
            let two = build_case3(&s_fleet(2), form).unwrap();
            let b = EnumerationBudget::default();
            assert!(oracle::oracle_verdict(&one.base, b).is_feasible());
            assert!(oracle::oracle_verdict(&two.base, b).is_infeasible());
            assert!(!oracle::enumerate_feasible(&one.base, b).unwrap().witnesses.is_empty());
            assert!(oracle::enumerate_feasible(&two.base, b).unwrap().witnesses.is_empty());
        }
        let a = accept_requests(&s_fleet(1), Some(RentalCase::Three), Method::Search, &opts()).unwrap();
        assert!(a.certificate.is_feasible());
        let table = a.allocations.unwrap();
        assert!(allocations_valid(&s_fleet(1), &table));
        assert_eq!(table.iter().map(|x| x.count).sum::<i64>(), 2);
        let a = accept_requests(&s_fleet(2), Some(RentalCase::Three), Method::Search, &opts()).unwrap();
        assert!(a.certificate.is_infeasible());
    }

    #[test]
    fn two_way_split_over_admits_with_overlapping_windows() {
        // A covers days 1-3, B only day 2; r1 wants days 1-2, r2 days 2-3.
        let s = Scenario {
            horizon: 4,
            models: vec!["b0".into()],
            availability: Availability::Roster(vec![car("b0", &[1, 2, 3]), car("b0", &[2])]),
            requests: vec![request("r1", 1, 2, &["b0"], 1), request("r2", 2, 2, &["b0"], 1)],
        };
        assert_eq!(roster_accepts(&s), Some(false));
        let b = EnumerationBudget::default();
        let two_way = build_case3(&s, Case3Form::TwoWay).unwrap();
        assert!(oracle::oracle_verdict(&two_way.base, b).is_feasible());
        let patterns = build_case3(&s, Case3Form::Patterns).unwrap();
        assert!(oracle::oracle_verdict(&patterns.base, b).is_infeasible());
    }

    #[test]
    fn case1_examples() {
        let one = Scenario {
            horizon: 1,
            models: vec!["b0".into()],
            availability: Availability::Counts(vec![vec![1]]),
            requests: vec![request("r", 1, 1, &["b0"], 1)],
        };
        assert!(accept_requests(&one, None, Method::Search, &opts()).unwrap().certificate.is_feasible());

        let over = Scenario {
            requests: vec![request("a", 1, 1, &["b0"], 2), request("b", 1, 1, &["b0"], 1)],
            availability: Availability::Counts(vec![vec![2]]),
            ..one.clone()
        };
        assert!(accept_requests(&over, None, Method::Search, &opts()).unwrap().certificate.is_infeasible());

        let pick_b1 = Scenario {
            models: vec!["b0".into(), "b1".into()],
            availability: Availability::Counts(vec![vec![0, 1]]),
            requests: vec![request("r", 1, 1, &["b0", "b1"], 1)],
            ..one
        };
        let days = build_case1(&pick_b1).unwrap();
        assert!(days[0].instance.forbidden.is_empty());
        let cert = oracle::oracle_verdict(&days[0].instance, EnumerationBudget::default());
        assert_eq!(cert.witness().unwrap().values, vec![0, 1]);
    }

    #[test]
    fn case1_rejects_multi_day_requests() {
        let e = build_case1(&s_fleet(1)).unwrap_err();
        assert!(e.to_string().contains("case 2"));
    }

    #[test]
    fn case2_examples() {
        let base = Scenario {
            horizon: 2,
            models: vec!["b0".into()],
            availability: Availability::Counts(vec![vec![1], vec![1]]),
            requests: vec![request("r", 1, 2, &["b0"], 1)],
        };
        let inst = build_case2(&base).unwrap();
        assert_eq!(inst.classes.len(), 1);
        let cert = oracle::oracle_verdict(&inst, EnumerationBudget::default());
        assert_eq!(cert.witness().unwrap().values, vec![1, 1]);

        let overlap = Scenario {
            horizon: 3,
            availability: Availability::Counts(vec![vec![1]; 3]),
            requests: vec![request("a", 1, 2, &["b0"], 1), request("b", 2, 2, &["b0"], 1)],
            ..base.clone()
        };
        let inst = build_case2(&overlap).unwrap();
        assert!(oracle::oracle_verdict(&inst, EnumerationBudget::default()).is_infeasible());

        let single = Scenario {
            requests: vec![request("r", 2, 1, &["b0"], 1)],
            ..base
        };
        let inst = build_case2(&single).unwrap();
        assert_eq!(inst.classes[0].members.len(), 1);
        assert_eq!(inst.forbidden.len(), 1);
    }

    #[test]
    fn case2_rejects_maintenance() {
        let e = build_case2(&s_fleet(1)).unwrap_err();
        assert!(matches!(e, RentalError::NeedsCase3 { .. }));
    }

    #[test]
    fn auto_case_selection() {
        let mut s = s_fleet(1);
        assert_eq!(select_case(&s).unwrap(), RentalCase::Three);
        s.availability = Availability::Counts(vec![vec![2], vec![2]]);
        assert_eq!(select_case(&s).unwrap(), RentalCase::Two);
        s.requests[0].duration = 1;
        assert_eq!(select_case(&s).unwrap(), RentalCase::One);
    }

    #[test]
    fn invalid_requests_are_rejected() {
        let mut s = s_fleet(1);
        s.requests[0].duration = 3;
        assert!(matches!(s.fleet(), Err(RentalError::BadRequest { .. })));
        let mut s = s_fleet(1);
        s.requests[0].models = vec!["zz".into()];
        assert!(s.fleet().is_err());
    }
}
