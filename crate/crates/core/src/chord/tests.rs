use std::f64::consts::PI;

use proptest::prelude::*;

use super::*;
use crate::polytope::shapes::{box_spec, cube_spec, random_spec};

fn unit_square() -> Polytope {
    Polytope::new(box_spec(&[0.0, 0.0], &[1.0, 1.0])).unwrap()
}

fn cube() -> Polytope {
    Polytope::new(cube_spec(3, 1.0)).unwrap()
}

fn within(a: &ChordEstimate, want: f64, sigmas: f64) -> bool {
    (a.value - want).abs() <= sigmas * a.uncertainty() + 1e-12 * want.abs()
}

fn agree(a: &ChordEstimate, b: &ChordEstimate) -> bool {
    (a.value - b.value).abs() <= 3.0 * a.uncertainty().hypot(b.uncertainty()) + 1e-9 * a.value.abs()
}

#[test]
fn ball_constants() {
    assert!((unit_ball_volume(2) - PI).abs() < 1e-15);
    assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-15);
    assert!((sphere_area(2) - 2.0 * PI).abs() < 1e-15);
    assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-14);
    for n in 2..9 {
        // |S^{n-1}| = n omega_n, computed along separate recursions
        assert!((sphere_area(n) - n as f64 * unit_ball_volume(n)).abs() < 1e-12);
    }
}

#[test]
fn planar_quadrature_closed_forms() {
    let sq = unit_square();
    let norm = Normalization::default();
    let i1 = chord_integral_quadrature(&sq, 1.0, &norm).unwrap();
    let i0 = chord_integral_quadrature(&sq, 0.0, &norm).unwrap();
    let i3 = chord_integral_quadrature(&sq, 3.0, &norm).unwrap();
    assert!((i1.value - 1.0).abs() < 1e-10);
    assert!((i0.value - 4.0 / PI).abs() < 1e-10);
    assert!((i3.value - 3.0 / PI).abs() < 1e-10);
    assert!((closed_form_i0(&sq) - 4.0 / PI).abs() < 1e-14);
    assert_eq!(i1.std_error, 0.0);
    assert!(i1.samples > 0);
}

#[test]
fn volume_form_examples() {
    let sq = unit_square();
    let opts = EstimatorOptions::new(200_000, 1);
    let i1 = chord_integral(&sq, 1.0, &opts).unwrap();
    assert!((i1.value - 1.0).abs() < 1e-12);
    let i3 = chord_integral(&sq, 3.0, &opts).unwrap();
    assert!(within(&i3, 3.0 / PI, 3.0), "{i3:?}");
    assert!(i3.std_error > 0.0);
    assert!(matches!(chord_integral(&sq, 0.0, &opts), Err(Error::Parameter(_))));
    assert!(chord_integral(&sq, -1.0, &opts).is_err());
}

#[test]
fn line_form_examples() {
    let sq = unit_square();
    let opts = EstimatorOptions::new(400_000, 2);
    let i1 = chord_integral_lines(&sq, 1.0, &opts).unwrap();
    assert!(within(&i1, 1.0, 3.0), "{i1:?}");
    let i0 = chord_integral_lines(&sq, 0.0, &opts).unwrap();
    assert!(within(&i0, 4.0 / PI, 3.0), "{i0:?}");
    let lines = chord_integral_lines(&sq, 2.0, &opts).unwrap();
    let volume = chord_integral(&sq, 2.0, &opts).unwrap();
    assert!(agree(&lines, &volume), "{lines:?} {volume:?}");
}

#[test]
fn estimators_agree_with_quadrature() {
    let p = Polytope::new(random_spec(2, 7, 0.4, 1.3, 5)).unwrap();
    let norm = Normalization::default();
    let opts = EstimatorOptions::new(200_000, 9);
    for q in [0.5, 1.5, 2.0] {
        let quad = chord_integral_quadrature(&p, q, &norm).unwrap();
        let vol = chord_integral(&p, q, &opts).unwrap();
        let lines = chord_integral_lines(&p, q, &opts).unwrap();
        assert!(agree(&quad, &vol), "q={q} {quad:?} {vol:?}");
        assert!(agree(&quad, &lines), "q={q} {quad:?} {lines:?}");
    }
}

#[test]
fn estimators_are_reproducible() {
    let sq = unit_square();
    let opts = EstimatorOptions::new(10_000, 4);
    assert_eq!(chord_integral(&sq, 0.5, &opts).unwrap(), chord_integral(&sq, 0.5, &opts).unwrap());
    assert_eq!(chord_integral_lines(&sq, 0.5, &opts).unwrap(), chord_integral_lines(&sq, 0.5, &opts).unwrap());
    let other = EstimatorOptions::new(10_000, 5);
    assert_ne!(chord_integral(&sq, 0.5, &opts).unwrap(), chord_integral(&sq, 0.5, &other).unwrap());
}

#[test]
fn dual_volume_identities() {
    let opts = EstimatorOptions::default();
    for (p, x) in [
        (Polytope::new(cube_spec(2, 1.0)).unwrap(), vec![0.3, -0.9]),
        (Polytope::new(random_spec(2, 9, 0.5, 1.2, 3)).unwrap(), vec![0.1, 0.2]),
        (cube(), vec![0.3, -0.9, 0.5]),
        (Polytope::new(random_spec(3, 10, 0.5, 1.2, 4)).unwrap(), vec![0.1, -0.2, 0.05]),
    ] {
        let n = p.dim();
        let v0 = dual_volume(&p, &x, 0.0, &opts).unwrap();
        let vn = dual_volume(&p, &x, n as f64, &opts).unwrap();
        assert!((v0.value - unit_ball_volume(n)).abs() < 1e-6 * unit_ball_volume(n), "{v0:?}");
        assert!((vn.value - p.volume()).abs() < 1e-6 * p.volume(), "{vn:?}");
    }
}

#[test]
fn dual_volume_of_square_at_center() {
    // int_0^{2 pi} rho = 8 int_0^{pi/4} sec = 8 ln(1 + sqrt 2)
    let p = Polytope::new(cube_spec(2, 1.0)).unwrap();
    let opts = EstimatorOptions::default();
    let v1 = dual_volume(&p, &[0.0, 0.0], 1.0, &opts).unwrap();
    let exact = 4.0 * (1.0 + 2f64.sqrt()).ln();
    assert!((v1.value - exact).abs() < 1e-10);

    // direct Monte Carlo over directions
    let mut rng = crate::rng::stream(77, 0);
    let mut m = crate::rng::Moments::default();
    for _ in 0..1_000_000 {
        let u = crate::rng::unit_vector(&mut rng, 2);
        m.push(p.radial_function(&[0.0, 0.0], &u).unwrap());
    }
    let mc = PI * m.mean;
    assert!((v1.value - mc).abs() < 3.0 * PI * m.std_error());

    assert!(matches!(
        dual_volume(&p, &[1.0, 0.0], 1.0, &opts),
        Err(Error::NotInterior { .. })
    ));
}

#[test]
fn dual_volume_four_dimensional_monte_carlo() {
    let p = Polytope::new(cube_spec(4, 1.0)).unwrap();
    let x = [0.1, 0.0, -0.2, 0.3];
    let v0 = dual_volume(&p, &x, 0.0, &EstimatorOptions::new(10_000, 1)).unwrap();
    assert!((v0.value - unit_ball_volume(4)).abs() < 1e-12);
    let v4 = dual_volume(&p, &x, 4.0, &EstimatorOptions::new(400_000, 1)).unwrap();
    assert!(within(&v4, 16.0, 4.0), "{v4:?}");
}

#[test]
fn chord_measure_q1_is_area() {
    let opts = EstimatorOptions::new(1000, 3);
    let c = cube();
    for f in chord_measure(&c, 1.0, &opts).unwrap() {
        assert!((f.value - 4.0).abs() < 1e-12);
    }
    let p = Polytope::new(random_spec(2, 8, 0.4, 1.3, 1)).unwrap();
    let quad = chord_measure_quadrature(&p, 1.0, &Normalization::default()).unwrap();
    for (f, a) in quad.iter().zip(p.facet_areas()) {
        assert!((f.value - a).abs() < 1e-12 * (1.0 + a));
    }
}

#[test]
fn cube_chord_measure_is_symmetric() {
    let c = cube();
    let f = chord_measure(&c, 2.0, &EstimatorOptions::new(40_000, 8)).unwrap();
    for a in &f {
        for b in &f {
            assert!(agree(a, b), "{a:?} {b:?}");
        }
    }
}

#[test]
fn euler_relation_planar_quadrature() {
    let norm = Normalization::default();
    for seed in 0..4 {
        let p = Polytope::new(random_spec(2, 6 + seed as usize, 0.3, 1.4, seed)).unwrap();
        for q in [0.5, 1.5, 2.0, 3.0] {
            let f = chord_measure_quadrature(&p, q, &norm).unwrap();
            let i = chord_integral_quadrature(&p, q, &norm).unwrap();
            let lhs: f64 = f.iter().zip(p.tight_offsets()).map(|(f, h)| f.value * h).sum();
            let rhs = (1.0 + q) * i.value;
            assert!((lhs - rhs).abs() < 1e-7 * rhs, "seed {seed} q {q}: {lhs} vs {rhs}");
        }
    }
}

#[test]
fn planar_quadrature_matches_derivative_of_i() {
    // F_q is the derivative of I_q in the offsets. The offsets are left
    // untightened: a constraint tightened onto a single vertex would make
    // I_q non-differentiable there.
    let norm = Normalization::default();
    let spec = random_spec(2, 7, 0.4, 1.3, 12);
    let p = Polytope::new(spec.clone()).unwrap();
    let z = spec.offsets().to_vec();
    let beta: Vec<f64> = (0..z.len()).map(|i| ((i * 7 + 3) % 5) as f64 / 5.0 - 0.4).collect();
    let h = 1e-5;
    for q in [0.5, 2.0] {
        let at = |t: f64| {
            let zt: Vec<f64> = z.iter().zip(&beta).map(|(z, b)| z + t * b).collect();
            chord_integral_quadrature(&Polytope::new(spec.with_offsets(zt)).unwrap(), q, &norm)
                .unwrap()
                .value
        };
        let fd = (at(h) - at(-h)) / (2.0 * h);
        let f = chord_measure_quadrature(&p, q, &norm).unwrap();
        let pairing: f64 = f.iter().zip(&beta).map(|(f, b)| f.value * b).sum();
        assert!((fd - pairing).abs() < 1e-5 * pairing.abs().max(1.0), "q {q}: {fd} vs {pairing}");
    }
}

#[test]
fn monte_carlo_measure_matches_quadrature() {
    let p = Polytope::new(random_spec(2, 6, 0.4, 1.3, 2)).unwrap();
    let quad = chord_measure_quadrature(&p, 2.0, &Normalization::default()).unwrap();
    let mc = chord_measure(&p, 2.0, &EstimatorOptions::new(100_000, 6)).unwrap();
    for (a, b) in quad.iter().zip(&mc) {
        assert!(agree(a, b), "{a:?} {b:?}");
    }
}

#[test]
fn lp_and_cone_measures_on_cube() {
    let c = cube();
    let opts = EstimatorOptions::new(1000, 1);
    for f in lp_chord_measure(&c, 0.5, 1.0, ChordMethod::MonteCarlo, &opts).unwrap() {
        assert!((f.value - 4.0).abs() < 1e-12);
    }
    let g = cone_chord_measure(&c, 1.0, ChordMethod::Auto, &opts).unwrap();
    for f in &g {
        assert!((f.value - 4.0 / 3.0).abs() < 1e-12);
    }
    assert!((total(&g).value - 8.0).abs() < 1e-12);

    // p = 1 multiplies by 1
    let p = Polytope::new(random_spec(2, 6, 0.4, 1.3, 2)).unwrap();
    let f = chord_functionals(&p, 2.0, ChordMethod::Quadrature, &opts).unwrap().f_q;
    let f1 = lp_chord_measure(&p, 1.0, 2.0, ChordMethod::Quadrature, &opts).unwrap();
    for (a, b) in f.iter().zip(&f1) {
        assert!((a.value - b.value).abs() < 1e-14);
    }
}

#[test]
fn cone_measure_total_is_chord_integral() {
    let p = Polytope::new(random_spec(2, 7, 0.4, 1.3, 21)).unwrap();
    let opts = EstimatorOptions::default();
    for q in [0.5, 2.0] {
        let g = total(&cone_chord_measure(&p, q, ChordMethod::Quadrature, &opts).unwrap());
        let i = chord_integral_quadrature(&p, q, &opts.normalization).unwrap();
        assert!((g.value - i.value).abs() < 1e-7 * i.value);
    }
}

#[test]
fn origin_outside_is_rejected() {
    let p = Polytope::new(box_spec(&[1.0, 1.0], &[2.0, 2.0])).unwrap();
    let opts = EstimatorOptions::default();
    assert!(matches!(
        lp_chord_measure(&p, 0.5, 1.0, ChordMethod::Auto, &opts),
        Err(Error::OriginOutside { .. })
    ));
    assert!(lp_chord_measure(&unit_square(), 0.5, 1.0, ChordMethod::Auto, &opts).is_ok());
    assert!(lp_chord_measure(&unit_square(), 1.5, 1.0, ChordMethod::Auto, &opts).is_err());
}

#[test]
fn exact_paths_match_quadrature() {
    let p = Polytope::new(random_spec(2, 8, 0.4, 1.3, 4)).unwrap();
    let opts = EstimatorOptions::default();
    for q in [1.0, 3.0] {
        let exact = chord_functionals(&p, q, ChordMethod::Exact, &opts).unwrap();
        let quad = chord_functionals(&p, q, ChordMethod::Quadrature, &opts).unwrap();
        assert!((exact.i_q.value - quad.i_q.value).abs() < 1e-9 * quad.i_q.value);
        for (a, b) in exact.f_q.iter().zip(&quad.f_q) {
            assert!((a.value - b.value).abs() < 1e-8 * (1.0 + b.value), "q {q}: {a:?} {b:?}");
        }
    }
    assert!(chord_functionals(&p, 2.0, ChordMethod::Exact, &opts).is_err());
    assert!(chord_functionals(&cube(), 2.0, ChordMethod::Quadrature, &opts).is_err());
}

#[test]
fn lp_measure_scaling_on_cube() {
    let opts = EstimatorOptions::new(50_000, 3);
    let c = cube();
    let c2 = c.scaled(2.0).unwrap();
    let (p_exp, q) = (0.5, 2.0);
    let a = lp_chord_measure(&c, p_exp, q, ChordMethod::MonteCarlo, &opts).unwrap();
    let b = lp_chord_measure(&c2, p_exp, q, ChordMethod::MonteCarlo, &opts).unwrap();
    let k = 2f64.powf(3.0 + q - p_exp - 1.0);
    for (a, b) in a.iter().zip(&b) {
        assert!(agree(&a.scaled(k), b), "{a:?} {b:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn planar_homogeneity_and_translation(seed in 0u64..500, q in 0.3f64..3.5, t in 0.4f64..2.5, dx in -1.0f64..1.0, dy in -1.0f64..1.0) {
        let norm = Normalization::default();
        let p = Polytope::new(random_spec(2, 7, 0.4, 1.3, seed)).unwrap();
        let i = chord_integral_quadrature(&p, q, &norm).unwrap().value;
        let it = chord_integral_quadrature(&p.scaled(t).unwrap(), q, &norm).unwrap().value;
        prop_assert!((it - t.powf(1.0 + q) * i).abs() < 1e-8 * it);
        let moved = p.translated(&[dx, dy]).unwrap();
        let im = chord_integral_quadrature(&moved, q, &norm).unwrap().value;
        prop_assert!((im - i).abs() < 1e-8 * i);
        let f = chord_measure_quadrature(&p, q, &norm).unwrap();
        let fm = chord_measure_quadrature(&moved, q, &norm).unwrap();
        for (a, b) in f.iter().zip(&fm) {
            prop_assert!((a.value - b.value).abs() < 1e-7 * (1.0 + a.value));
        }
    }

    #[test]
    fn chord_integral_is_monotone_under_inclusion(seed in 0u64..500, q in 0.0f64..3.0) {
        let norm = Normalization::default();
        let spec = random_spec(2, 6, 0.4, 1.3, seed);
        let p = Polytope::new(spec.clone()).unwrap();
        let bigger = Polytope::new(spec.with_offsets(spec.offsets().iter().map(|z| z + 0.1).collect())).unwrap();
        let a = chord_integral_quadrature(&p, q, &norm).unwrap().value;
        let b = chord_integral_quadrature(&bigger, q, &norm).unwrap().value;
        prop_assert!(b > a);
    }
}
