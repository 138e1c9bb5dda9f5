use proptest::prelude::*;

use rulingset::derand::{check_precondition, conditional_psi_sum, select_parameters, Epsilon, ParamOverrides};
use rulingset::graph::{is_two_ruling_set, Coloring, Graph};
use rulingset::kwise::Seed;
use rulingset::linial::reduce_to_fixpoint;
use rulingset::oracle::{enumerate_expectation, Statistic};
use rulingset::ruling::{deterministic_two_ruling_set, FallbackStrategy, RulingConfig, RulingError};
use rulingset::sim::ModelKind;

fn graph_strategy(max_n: usize) -> impl Strategy<Value = Graph> {
    (2..=max_n).prop_flat_map(|n| {
        proptest::collection::vec((0..n, 0..n), 0..(n * n / 3).max(1)).prop_map(move |pairs| {
            let mut edges: Vec<(usize, usize)> = pairs
                .into_iter()
                .filter(|(u, v)| u != v)
                .map(|(u, v)| (u.min(v), u.max(v)))
                .collect();
            edges.sort_unstable();
            edges.dedup();
            Graph::from_edges(n, &edges).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn output_is_always_a_two_ruling_set(g in graph_strategy(40), sweep in any::<bool>(), clique in any::<bool>()) {
        let config = RulingConfig {
            mode: if clique { ModelKind::Clique } else { ModelKind::Mpc },
            fallback: if sweep { FallbackStrategy::Sweep } else { FallbackStrategy::Gather },
            degree_floor_const: 0.0,
            overrides: ParamOverrides { k: Some(2), ..ParamOverrides::default() },
            ..RulingConfig::default()
        };
        match deterministic_two_ruling_set(&g, &config) {
            Ok(res) => {
                if g.max_degree() >= 16 {
                    prop_assert!(!res.iterations.is_empty());
                }
                prop_assert!(is_two_ruling_set(&g, &res.set));
                prop_assert!(res.iterations.iter().all(|it| it.bad_vertices == 0));
                res.transcript.audit(&config.model(g.n()).unwrap()).unwrap();
            }
            Err(RulingError::PreconditionFailed { report, .. }) => prop_assert!(!report.ok),
            Err(e) => prop_assert!(false, "unexpected error {e}"),
        }
    }

    #[test]
    fn engine_matches_the_oracle(g in graph_strategy(12)) {
        prop_assume!(g.max_degree() >= 2);
        let col = reduce_to_fixpoint(&g, &Coloring::identity(g.n())).unwrap().coloring;
        let overrides = ParamOverrides { k: Some(2), ..ParamOverrides::default() };
        let p = select_parameters(g.n(), g.max_degree(), Epsilon::ONE_THIRD, 1, col.palette_size(), &overrides).unwrap();
        let report = check_precondition(&g, &col, &p).unwrap();
        let psi = enumerate_expectation(&g, &col, &p, Statistic::Psi, 1 << 20).unwrap();
        prop_assert_eq!(report.expected_psi, psi);
        prop_assert_eq!(
            report.expected_edges,
            enumerate_expectation(&g, &col, &p, Statistic::EdgeCount, 1 << 20).unwrap()
        );
        let total = conditional_psi_sum(&g, &col, &p, &Seed::uncommitted(p.family())).unwrap();
        prop_assert_eq!(psi * (1u128 << p.seed_bits()), num_rational::Ratio::from_integer(total));
    }
}
