use proptest::prelude::*;
use qualpert_cli::document::{ProblemDocument, Term};
use qualpert_cli::run;

fn terms(n: usize) -> impl Strategy<Value = Vec<Term>> {
    prop::collection::vec(
        (-1e3f64..1e3, prop::collection::vec(0u32..4, n))
            .prop_map(|(coef, exps)| Term { coef, exps }),
        1..5,
    )
}

fn document() -> impl Strategy<Value = ProblemDocument> {
    (1usize..4, 1usize..4).prop_flat_map(|(n, m)| {
        (
            prop::collection::vec(terms(n), m),
            prop::option::of(terms(n)),
            prop::option::of(prop::collection::btree_set(1..=m, 1..=m)),
        )
            .prop_map(move |(inequalities, objective, pert)| ProblemDocument {
                name: "random".into(),
                description: String::new(),
                provenance: String::new(),
                num_vars: n,
                objective,
                inequalities,
                equalities: Vec::new(),
                perturbable: pert.map(|s| s.into_iter().collect()),
                sample_box: Some(vec![[-1.0, 1.0]; n]),
            })
    })
}

fn stdout_of(args: &[String]) -> (i32, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run(
        std::iter::once("qualpert".to_string()).chain(args.iter().cloned()),
        &mut out,
        &mut err,
    );
    (code, String::from_utf8(out).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn documents_survive_json(doc in document()) {
        let back = ProblemDocument::from_json(&doc.to_json()).unwrap();
        prop_assert_eq!(&back, &doc);
        let prob = doc.to_instance().unwrap();
        let again = ProblemDocument::from_instance(&prob, "", "").to_instance().unwrap();
        for (a, b) in prob.inequalities().zip(again.inequalities()) {
            prop_assert_eq!(a, b);
        }
        prop_assert_eq!(prob.perturbable(), again.perturbable());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn stochastic_commands_repeat(seed in any::<u32>()) {
        let seed = seed.to_string();
        let sweep: Vec<String> = ["mfcq", "--problem", "tangent_discs", "--alpha", "0.3", "--sweep", "--samples", "30", "--seed", &seed]
            .iter().map(|s| s.to_string()).collect();
        let scan: Vec<String> = ["scan", "--problem", "interval_pair", "--window=-1,1", "--starts", "20", "--seed", &seed, "--format", "json"]
            .iter().map(|s| s.to_string()).collect();
        for args in [sweep, scan] {
            let first = stdout_of(&args);
            prop_assert!(first.1.contains(&seed));
            prop_assert_eq!(&first, &stdout_of(&args));
        }
    }
}
