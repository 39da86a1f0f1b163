use std::collections::BTreeMap;

use eqflow::cli::{generate_instance, GenConfig};
use eqflow::fbce;
use eqflow::json::{instance_to_json, parse_instance};
use eqflow::model::validate_witness;
use eqflow::oracle::{self, EnumerationBudget};
use eqflow::reform::{contract_classes, default_lambda, objective_breakdown, penalize, PenaltyConfig};
use eqflow::search::{self, SearchConfig};
use eqflow::{Constraint, ProblemInstance, Rational, Relation, Scalar, System};
use proptest::prelude::*;

fn small_instance() -> impl Strategy<Value = ProblemInstance> {
    (1usize..=2, 1usize..=2, 1usize..=3, 0.0f64..=0.5, 0.0f64..=0.3, any::<u64>()).prop_map(
        |(i, j, t, class_density, forbidden_density, seed)| {
            generate_instance(&GenConfig {
                dims: [i, j, t],
                class_density,
                forbidden_density,
                seed,
                max_bound: 1,
            })
        },
    )
}

fn all_points(inst: &ProblemInstance) -> Vec<eqflow::Witness> {
    oracle::enumerate_feasible(inst, EnumerationBudget::default())
        .expect("small instance")
        .witnesses
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn penalty_matches_cost_exactly_on_feasible_points(inst in small_instance()) {
        let lambda = default_lambda(&inst);
        let penalized = penalize(&inst, &PenaltyConfig::new(lambda));
        let obj = penalized.objective.clone().unwrap_or_default();
        for w in all_points(&penalized) {
            let mut shared = BTreeMap::new();
            for p in &obj.class_penalties {
                let values: Vec<i64> = p.members.iter().map(|m| w.get(&penalized, m)).collect();
                let lo = *values.iter().min().unwrap_or(&0);
                let hi = *values.iter().max().unwrap_or(&0);
                let best = (lo..=hi)
                    .min_by_key(|t| values.iter().map(|v| (v - t) * (v - t)).sum::<i64>())
                    .unwrap_or(0);
                shared.insert(p.id.clone(), best);
            }
            let b = objective_breakdown(&penalized, &w, &shared);
            let original_ok = validate_witness(&inst, &w).unwrap_or(false);
            if original_ok {
                prop_assert_eq!(b.penalty(), 0);
            } else {
                prop_assert!(b.penalty() >= lambda);
            }
        }
    }

    #[test]
    fn contraction_round_trips_feasible_points(inst in small_instance()) {
        let c = contract_classes(&inst);
        for w in all_points(&inst) {
            let point = c.contract_witness(&w).expect("feasible points respect classes");
            prop_assert_eq!(c.expand(&point), w);
        }
    }

    #[test]
    fn search_agrees_with_oracle(inst in small_instance()) {
        let s = search::solve_instance(&inst, &SearchConfig::default()).expect("valid");
        let o = oracle::oracle_verdict(&inst, EnumerationBudget::default());
        prop_assert_eq!(s.certificate.verdict(), o.verdict());
    }

    #[test]
    fn instance_json_round_trips(inst in small_instance()) {
        let back = parse_instance(&instance_to_json(&inst)).expect("own output parses");
        prop_assert_eq!(back, inst);
    }

    #[test]
    fn pruning_preserves_rational_points(
        rows in prop::collection::vec((prop::collection::vec(-2i64..=2, 3), -2i64..=3), 1..8),
        points in prop::collection::vec(prop::collection::vec(-8i64..=8, 3), 50),
    ) {
        let mut sys = System::with_variables(["x", "y", "z"]);
        for (coeffs, rhs) in &rows {
            let mut c = Constraint::new(Relation::Le, Rational::from_int(*rhs));
            for (v, a) in coeffs.iter().enumerate() {
                if *a != 0 {
                    c.add_term(v, Rational::from_int(*a));
                }
            }
            sys.add(c, "r");
        }
        let pruned = [fbce::dominance_prune(&sys), fbce::redundancy_prune(&sys)];
        for p in &points {
            let q: Vec<Rational> = p.iter().map(|v| Rational::new((*v).into(), 2.into())).collect();
            for s in &pruned {
                prop_assert_eq!(s.live_satisfied_by(&q), sys.live_satisfied_by(&q));
            }
        }
    }
}
