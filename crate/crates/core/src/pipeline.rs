//! Backend dispatch: one instance, one method, one certificate.

use std::fmt;
use std::str::FromStr;

use crate::fbce::{self, FbceConfig, GrowthReport};
use crate::model::{validate_witness, Certificate, Infeasibility, ProblemInstance};
use crate::oracle::{self, EnumerationBudget};
use crate::reform::{self, ObjectiveBreakdown, PenaltyConfig};
use crate::search::{self, SearchConfig, SearchStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Fbce,
    Search,
    Oracle,
    Penalty,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Fbce => "fbce",
            Method::Search => "search",
            Method::Oracle => "oracle",
            Method::Penalty => "penalty",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fbce" => Ok(Method::Fbce),
            "search" => Ok(Method::Search),
            "oracle" => Ok(Method::Oracle),
            "penalty" => Ok(Method::Penalty),
            other => Err(format!("unknown method {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct DecideOptions {
    /// Penalty weight; the instance default when absent.
    pub lambda: Option<i64>,
    pub search: SearchConfig,
    pub fbce: FbceConfig,
    pub budget: EnumerationBudget,
}

/// Backend statistics for a decision.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Stats {
    pub nodes: Option<u64>,
    pub growth: Option<GrowthReport>,
    pub penalty: Option<ObjectiveBreakdown>,
    pub lambda: Option<i64>,
}

#[derive(Debug, Clone)]
pub struct Decision {
    pub certificate: Certificate,
    pub stats: Stats,
    /// The system an FBCE refutation refers to.
    pub system: Option<crate::System>,
}

fn from_search(r: Result<search::InstanceSolution, search::SearchError>) -> (Certificate, Option<search::InstanceSolution>) {
    match r {
        Ok(s) => (s.result.certificate.clone(), Some(s)),
        Err(e) => (Certificate::Unknown(e.to_string()), None),
    }
}

/// Decides an instance with the chosen backend. Every `Feasible` witness is
/// on the instance grid.
pub fn decide(instance: &ProblemInstance, method: Method, opts: &DecideOptions) -> Decision {
    let mut stats = Stats::default();
    let mut system = None;
    let certificate = match method {
        Method::Search => {
            let (cert, sol) = from_search(search::solve_instance_detailed(instance, &opts.search));
            stats.nodes = sol.map(|s| s.result.nodes_explored);
            cert
        }
        Method::Oracle => oracle::oracle_verdict(instance, opts.budget),
        Method::Fbce => {
            if let Some(v) = instance.validate().first() {
                Certificate::Unknown(format!("invalid instance: {v}"))
            } else {
                let contracted = reform::contract_classes(instance);
                if let Some(reason) = &contracted.infeasible {
                    Certificate::Infeasible(Infeasibility::Construction(reason.clone()))
                } else {
                    let run = fbce::certify_with(&contracted.system, &opts.fbce);
                    stats.growth = Some(run.growth());
                    system = Some(contracted.system.clone());
                    match run.certificate {
                        Certificate::Feasible(w) => Certificate::Feasible(contracted.expand(&w.values)),
                        other => other,
                    }
                }
            }
        }
        Method::Penalty => {
            let lambda = opts.lambda.unwrap_or_else(|| reform::default_lambda(instance));
            stats.lambda = Some(lambda);
            let penalized = reform::penalize(instance, &PenaltyConfig::new(lambda));
            let cfg = SearchConfig {
                objective_mode: search::ObjectiveMode::Minimize,
                ..opts.search.clone()
            };
            let (cert, sol) = from_search(search::solve_instance_detailed(&penalized, &cfg));
            match (cert, sol) {
                (Certificate::Feasible(w), Some(sol)) => {
                    stats.nodes = Some(sol.result.nodes_explored);
                    let b = reform::objective_breakdown(&penalized, &w, &sol.penalty_values());
                    stats.penalty = Some(b);
                    if b.penalty() == 0 && validate_witness(instance, &w).unwrap_or(false) {
                        Certificate::Feasible(w)
                    } else if sol.result.status == SearchStatus::Complete {
                        Certificate::Infeasible(Infeasibility::Exhausted {
                            method: format!("penalty minimum {} > 0", b.penalty()),
                            explored: sol.result.nodes_explored,
                        })
                    } else {
                        Certificate::Unknown("search limit reached before a zero-penalty point".into())
                    }
                }
                (cert, sol) => {
                    stats.nodes = sol.map(|s| s.result.nodes_explored);
                    cert
                }
            }
        }
    };
    Decision {
        certificate,
        stats,
        system,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ArcIndex, VarBounds};

    #[test]
    fn all_methods_agree_on_balanced_instance() {
        let inst = ProblemInstance::transportation(&[1, 1], &[1, 1]);
        for m in [Method::Fbce, Method::Search, Method::Oracle, Method::Penalty] {
            let d = decide(&inst, m, &DecideOptions::default());
            let w = d.certificate.witness().unwrap_or_else(|| panic!("{m}: {:?}", d.certificate));
            assert!(validate_witness(&inst, w).unwrap(), "{m}");
        }
    }

    #[test]
    fn penalty_method_reports_zero_on_feasible() {
        let inst = ProblemInstance::transportation(&[1], &[1]);
        let d = decide(&inst, Method::Penalty, &DecideOptions::default());
        assert_eq!(d.stats.penalty.unwrap().penalty(), 0);
    }

    #[test]
    fn penalty_method_refutes_forbidden_only_route() {
        let mut inst = ProblemInstance::transportation(&[1], &[1]);
        inst.set_all_bounds(VarBounds::binary());
        inst.forbidden.insert(ArcIndex::new(0, 0, 0));
        let d = decide(&inst, Method::Penalty, &DecideOptions::default());
        assert!(d.certificate.is_infeasible());
        assert!(d.stats.penalty.unwrap().penalty() > 0);
    }

    #[test]
    fn method_names_round_trip() {
        for m in [Method::Fbce, Method::Search, Method::Oracle, Method::Penalty] {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
    }
}
