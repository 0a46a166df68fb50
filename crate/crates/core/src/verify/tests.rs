use rand::Rng;

use super::*;
use crate::linalg::dist;
use crate::measure::Atom;
use crate::polytope::shapes::axis_normals;
use crate::rng::stream;

fn cube() -> Polytope {
    Polytope::new(cube_spec(3, 1.0)).unwrap()
}

fn cube_measure() -> DiscreteMeasure {
    let atoms = axis_normals(3).into_iter().map(|v| Atom { v, alpha: 4.0 }).collect();
    DiscreteMeasure::new(3, atoms).unwrap()
}

#[test]
fn cube_residual_vanishes() {
    let r = residual(&cube(), &cube_measure(), 0.5, 1.0, ChordMethod::Auto, &EstimatorOptions::default()).unwrap();
    assert!(r.max_rel < 1e-12, "{}", r.max_rel);
    assert!(r.per_atom.iter().all(|a| a.matched));
    let mc = residual(
        &cube(),
        &cube_measure(),
        0.5,
        1.0,
        ChordMethod::MonteCarlo,
        &EstimatorOptions::new(50_000, 3),
    )
    .unwrap();
    for a in &mc.per_atom {
        assert!((a.achieved - a.target).abs() < 4.0 * a.std_error + 1e-12, "{a:?}");
    }
}

#[test]
fn unmatched_atom_is_flagged() {
    let mut atoms: Vec<Atom> = axis_normals(3).into_iter().map(|v| Atom { v, alpha: 4.0 }).collect();
    let s = 1.0 / 3f64.sqrt();
    atoms.push(Atom { v: vec![s, s, s], alpha: 1.0 });
    let mu = DiscreteMeasure::new(3, atoms).unwrap();
    let r = residual(&cube(), &mu, 0.5, 1.0, ChordMethod::Auto, &EstimatorOptions::default()).unwrap();
    let last = r.per_atom.last().unwrap();
    assert!(!last.matched);
    assert_eq!(last.achieved, 0.0);
    assert_eq!(r.max_rel, 1.0);
}

#[test]
fn variational_check_square_examples() {
    let square = cube_spec(2, 1.0);
    let opts = EstimatorOptions::default();
    let c = variational_check(&square, &[1.0, 0.0, 0.0, 0.0], 1.0, 1e-4, ChordMethod::Auto, &opts).unwrap();
    assert!((c.lhs - 2.0).abs() < 1e-9 && (c.rhs - 2.0).abs() < 1e-12, "{c:?}");
    assert!(c.gap < 3.0);

    let h = default_step(&square);
    let c = variational_check(&square, &[1.0; 4], 2.0, h, ChordMethod::Auto, &opts).unwrap();
    let i2 = chord_integral_quadrature(&Polytope::new(square).unwrap(), 2.0, &Normalization::default()).unwrap();
    // Euler relation: degree n + q - 1 = 3
    assert!((c.lhs - 3.0 * i2.value).abs() < 1e-6 * c.lhs, "{c:?}");
    assert!(c.gap < 3.0, "{c:?}");
}

#[test]
fn variational_check_monte_carlo() {
    for seed in 0..3u64 {
        let spec = random_spec(3, 8, 0.7, 1.3, 40 + seed);
        let mut rng = stream(seed, 1);
        let beta: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let opts = EstimatorOptions::new(100_000, seed);
        let c = variational_check(&spec, &beta, 1.5, default_step(&spec), ChordMethod::MonteCarlo, &opts).unwrap();
        assert!(c.gap < 3.0, "seed {seed}: {c:?}");
        assert!(c.lhs_std_error < 0.05 * c.rhs.abs().max(0.1), "{c:?}");
    }
}

fn small_battery() -> Battery {
    let mut b = Battery::default_battery(1);
    b.shapes.retain(|s| s.name == "square" || s.name == "cube" || s.name == "polygon-1");
    b.qs = vec![0.5, 1.0, 3.0];
    b.ps = vec![0.3];
    b.samples = 40_000;
    b.sandwich = vec![(2, 2)];
    b
}

#[test]
fn small_battery_passes_and_is_deterministic() {
    let b = small_battery();
    let a = run_battery(&b, 7, Normalization::default());
    for r in a.rows.iter().filter(|r| !r.pass) {
        eprintln!("{r:?}");
    }
    assert!(a.all_pass());
    let again = run_battery(&b, 7, Normalization::default());
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&again).unwrap());
}

#[test]
fn injected_faults_are_caught() {
    let b = small_battery();
    let faults = [
        Normalization { unit_ball: 1.01, ..Default::default() },
        Normalization { sphere_area: 1.01, ..Default::default() },
        Normalization { measure_factor: 1.01, ..Default::default() },
        Normalization { line_measure: 1.01, ..Default::default() },
    ];
    for (k, fault) in faults.into_iter().enumerate() {
        let report = run_battery(&b, 7, fault);
        assert!(report.failed > 0, "fault {k} went unnoticed");
        if k == 0 {
            assert!(report.rows.iter().any(|r| r.check == "total-measure" && !r.pass));
        }
    }
}

#[test]
fn battery_round_trips_through_json() {
    let b = Battery::default_battery(3);
    let back: Battery = serde_json::from_str(&serde_json::to_string(&b).unwrap()).unwrap();
    // normals are renormalized on input, so compare to rounding
    assert_eq!((&b.qs, &b.ps, b.samples), (&back.qs, &back.ps, back.samples));
    for (x, y) in b.shapes.iter().zip(&back.shapes) {
        assert_eq!(x.name, y.name);
        assert_eq!(x.spec.offsets(), y.spec.offsets());
        for (u, v) in x.spec.normals().iter().zip(y.spec.normals()) {
            assert!(dist(u, v) < 1e-15);
        }
    }
}
