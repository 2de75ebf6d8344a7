mod oracles;

use qualpert_core::qualification::{
    check_mfcq_hull, check_mfcq_lp, sweep_mfcq, SweepConfig, SweepReport,
};
use qualpert_core::{
    catalog, CatalogParams, MfcqTolerances, PerturbationSpec, Polynomial, ProblemInstance, Verdict,
};

fn cases() -> Vec<(ProblemInstance, f64)> {
    let cat = |name: &str| catalog(name, &CatalogParams::default()).unwrap();
    vec![
        (cat("cusp"), 0.1),
        (cat("cusp"), -0.1),
        (cat("cusp_boxed"), 0.05),
        (cat("tangent_discs"), 0.2),
        (cat("ball_box"), 6.8),
        (cat("ball_box"), 5.0),
        (cat("grid_boxes"), 25.0),
        (cat("interval_pair"), 0.5),
    ]
}

fn sweep(prob: &ProblemInstance, alpha: f64, samples: usize, seed: u64) -> SweepReport {
    let cfg = SweepConfig {
        samples,
        seed,
        with_hull: true,
        ..Default::default()
    };
    sweep_mfcq(prob, &PerturbationSpec::Diagonal(alpha), &cfg).unwrap()
}

#[test]
fn lp_and_hull_agree_outside_degenerate_band() {
    for (prob, alpha) in cases() {
        let rep = sweep(&prob, alpha, 60, 3);
        assert!(!rep.points.is_empty(), "{}", prob.name());
        for pt in &rep.points {
            let lp = &pt.certificate;
            let hull = pt.hull.as_ref().unwrap();
            if lp.verdict != Verdict::Degenerate && hull.verdict != Verdict::Degenerate {
                assert_eq!(lp.verdict, hull.verdict, "{} at {:?}", prob.name(), pt.x);
            }
            if lp.margin > 1e-8 || hull.margin > 1e-8 {
                assert_ne!(lp.verdict, Verdict::Fails);
                assert_ne!(hull.verdict, Verdict::Fails);
            }
        }
    }
}

#[test]
fn hull_distance_matches_simplex_grid() {
    for (prob, alpha) in cases() {
        let rep = sweep(&prob, alpha, 30, 8);
        for pt in &rep.points {
            let hull = pt.hull.as_ref().unwrap();
            let idx = &hull.active_set.indices;
            if idx.is_empty() || idx.len() > 3 {
                continue;
            }
            let grads: Vec<Vec<f64>> = idx
                .iter()
                .map(|&i| prob.inequality(i).eval_grad(&pt.x))
                .collect();
            let want = oracles::hull_distance_grid(&grads, 1000);
            assert!(
                (hull.hull_distance - want).abs() <= 1e-3 * (1.0 + want),
                "{}: {} vs {want}",
                prob.name(),
                hull.hull_distance
            );
            assert!(hull.hull_distance <= want + 1e-12);
        }
    }
}

#[test]
fn fails_certificates_replay() {
    let tols = MfcqTolerances::default();
    let cusp = catalog("cusp", &CatalogParams::default()).unwrap();
    let ball = catalog(
        "ball_box",
        &CatalogParams {
            a: Some(vec![0.4, 0.2]),
            ..Default::default()
        },
    )
    .unwrap();
    let points: Vec<(&ProblemInstance, f64, Vec<f64>)> = vec![
        (&cusp, 0.0, vec![0.0, 0.0]),
        // the ball touches the corner (-1,-1) at alpha = 8 - 1.4^2 - 1.2^2
        (&ball, 8.0 - 1.96 - 1.44, vec![-1.0, -1.0]),
        // and the face x1 = -1 at (-1, 0.2)
        (&ball, 8.0 - 1.96, vec![-1.0, 0.2]),
    ];
    for (prob, alpha, x) in points {
        let pert = PerturbationSpec::Diagonal(alpha);
        for cert in [
            check_mfcq_lp(prob, &pert, &x, &tols).unwrap(),
            check_mfcq_hull(prob, &pert, &x, &tols).unwrap(),
        ] {
            assert_eq!(cert.verdict, Verdict::Fails, "{} at {x:?}", prob.name());
            let total: f64 = cert.lambda.iter().sum();
            assert!((total - 1.0).abs() <= 1e-9 && cert.lambda.iter().all(|&l| l >= -1e-12));
            // recompute the combination from scratch
            let mut v = vec![0.0; x.len()];
            for (&i, &l) in cert.active_set.indices.iter().zip(&cert.lambda) {
                for (vk, gk) in v.iter_mut().zip(prob.inequality(i).eval_grad(&x)) {
                    *vk += l * gk;
                }
            }
            let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            assert!(norm <= tols.tol, "{}: replay {norm}", prob.name());
        }
    }
}

fn scaled(prob: &ProblemInstance, c: &[f64]) -> ProblemInstance {
    let gs: Vec<Polynomial> = prob
        .inequalities()
        .zip(c)
        .map(|(g, &ci)| g.scale(ci))
        .collect();
    ProblemInstance::new("scaled", prob.num_vars(), gs, vec![]).unwrap()
}

#[test]
fn verdicts_survive_constraint_scaling() {
    let tols = MfcqTolerances::default();
    for (prob, alpha) in cases() {
        let m = prob.num_inequalities();
        let bounds = prob.bounds(&PerturbationSpec::Diagonal(alpha)).unwrap();
        let rep = sweep(&prob, alpha, 40, 21);
        for c in [
            vec![0.5; m],
            (0..m).map(|i| 1.0 + 2.0 * i as f64).collect::<Vec<_>>(),
        ] {
            let sp = scaled(&prob, &c);
            let pert =
                PerturbationSpec::Vector(bounds.iter().zip(&c).map(|(b, ci)| b * ci).collect());
            for pt in &rep.points {
                let before = pt.certificate.verdict;
                if before == Verdict::Degenerate
                    || (before == Verdict::Holds && pt.certificate.margin < 1e-6)
                {
                    continue;
                }
                let after = check_mfcq_lp(&sp, &pert, &pt.x, &tols).unwrap().verdict;
                assert_eq!(before, after, "{} at {:?} scale {c:?}", prob.name(), pt.x);
            }
        }
    }
}

#[test]
fn regular_level_sweeps_hold() {
    for (prob, alpha) in [
        (catalog("cusp", &CatalogParams::default()).unwrap(), 0.1),
        (catalog("cusp", &CatalogParams::default()).unwrap(), -0.1),
    ] {
        let rep = sweep(&prob, alpha, 300, 1);
        assert!(
            rep.all_hold(),
            "{} alpha={alpha}: {} fails",
            prob.name(),
            rep.fails
        );
    }
}
