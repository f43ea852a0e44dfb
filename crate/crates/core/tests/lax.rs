use std::sync::Arc;

use curvkit::domain::{make_domain, Domain, Field};
use curvkit::identities::Sampler;
use curvkit::lax::{coefficient_scan, equivalence_witness, LaxExample, NlsVariant, SG_COEFFICIENT};
use curvkit::sim::{nls_soliton_field, sg_integrate, toda_evolve, Boundary, Method, SolverConfig};
use curvkit::{Shape, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn entry_norm(f: &Field, r: usize, c: usize) -> f64 {
    f.entry(r, c).unwrap().max_norm().unwrap()
}

fn toda_field(side: usize) -> Field {
    let mut row1 = vec![0.0; side];
    row1[side / 2] = 0.5;
    toda_evolve(&vec![0.0; side], &row1, side - 2).unwrap()
}

fn perturb(q: &Field, site: &[i64], eps: f64) -> Field {
    let d = q.domain().clone();
    let pts = q.region().points();
    let mut samples = q.grid_samples().unwrap().to_vec();
    let k = pts.iter().position(|p| p.as_slice() == site).unwrap();
    samples[k] += C64::new(eps, 0.0);
    Field::grid(&d, Shape::SCALAR, q.region().clone(), samples).unwrap()
}

fn sg_solution(coefficient: f64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let init: Vec<f64> = (0..64).map(|_| rng.gen_range(-0.1..0.1)).collect();
    let cfg =
        SolverConfig::new(1e-3, 1000, Method::Rk4, Boundary::PrescribedEdge).recording_every(10);
    sg_integrate(&init, &|_| 0.0, 1.0, coefficient, &cfg).unwrap()
}

fn xt_domain(a: f64, b: f64, h: f64) -> Arc<Domain> {
    Arc::new(make_domain(0, 2, &[], &[(a, b), (0.0, 1.0)], &[h, h]).unwrap())
}

#[test]
fn toda_recursion_field_is_flat_for_every_lambda() {
    let q = toda_field(64);
    let ex = LaxExample::toda(q, 1.0).unwrap();
    for row in ex.spectral_scan(&[0.5, 1.0, 2.0]).unwrap() {
        assert!(row.residual <= 1e-10, "λ = {}: {}", row.param, row.residual);
    }
}

#[test]
fn toda_structural_zeros_for_arbitrary_positive_fields() {
    let d = Arc::new(make_domain(2, 0, &[(0, 11), (0, 11)], &[], &[]).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..10 {
        let samples = (0..144)
            .map(|_| C64::new(rng.gen_range(0.2..3.0), 0.0))
            .collect();
        let u = Field::grid(&d, Shape::SCALAR, d.full_box(), samples).unwrap();
        let lambda = rng.gen_range(0.5..2.0);
        let f = LaxExample::toda_from_u(u, lambda)
            .unwrap()
            .curvature_field()
            .unwrap();
        assert!(entry_norm(&f, 0, 1) <= 1e-12);
        assert!(entry_norm(&f, 1, 0) <= 1e-12);
        assert!(entry_norm(&f, 1, 1) <= 1e-12);
        assert!(entry_norm(&f, 0, 0) > 1e-3);
    }
}

#[test]
fn toda_perturbation_is_detected_and_scales_with_lambda() {
    let q = toda_field(64);
    let bad = perturb(&q, &[30, 32], 0.1);
    let rows = equivalence_witness(
        &[
            ("exact".into(), LaxExample::toda(q.clone(), 1.0).unwrap()),
            (
                "perturbed".into(),
                LaxExample::toda(bad.clone(), 1.0).unwrap(),
            ),
        ],
        &[0.5, 1.0, 2.0],
    )
    .unwrap();
    assert!(rows[0].worst_curvature() <= 1e-10 && rows[0].equation <= 1e-10);
    assert!(rows[1].curvature.iter().all(|c| c.1 > 1e-3));
    assert!(rows[1].equation > 1e-3);
    assert!(rows.iter().all(|r| r.consistent(1e-6)));

    let per_lambda: Vec<f64> = rows[1]
        .curvature
        .iter()
        .map(|(l, r)| r / l.unwrap())
        .collect();
    for v in &per_lambda {
        assert!((v - per_lambda[0]).abs() <= 1e-10 * per_lambda[0]);
    }
}

#[test]
fn toda_residual_is_linear_in_the_perturbation() {
    let q = toda_field(32);
    let r = |eps: f64| {
        LaxExample::toda(perturb(&q, &[15, 16], eps), 1.0)
            .unwrap()
            .zero_curvature_residual()
            .unwrap()
            .max_norm()
            .unwrap()
    };
    let ratio = r(1e-2) / r(1e-3);
    assert!((10.0 / 3.0..=30.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn sg_solution_is_flat_for_every_k() {
    let theta = sg_solution(SG_COEFFICIENT);
    let ex = LaxExample::sine_gordon(theta, 1.0, 1.0).unwrap();
    for row in ex.spectral_scan(&[0.5, 1.0, 2.0]).unwrap() {
        assert!(row.residual <= 1e-7, "k = {}: {}", row.param, row.residual);
    }
    assert!(ex.reduced_equation_residual().unwrap().max_norm().unwrap() <= 1e-7);
}

#[test]
fn sg_off_diagonal_vanishes_for_arbitrary_theta() {
    let mut s = Sampler::new(41);
    for _ in 0..20 {
        let d = s.domain(1, 1, 8).unwrap();
        let z = s.field(&d, Shape::SCALAR);
        let theta = z.add(&z.conj()).unwrap().scale_real(0.5);
        let gamma = s.rng().gen_range(0.2..2.0);
        let k = s.rng().gen_range(0.3..3.0);
        let f = LaxExample::sine_gordon(theta, gamma, k)
            .unwrap()
            .curvature_field()
            .unwrap();
        assert!(entry_norm(&f, 0, 1) <= 1e-12);
        assert!(entry_norm(&f, 1, 0) <= 1e-12);
        assert!(entry_norm(&f, 0, 0) > 1e-6);
    }
}

#[test]
fn sg_coefficient_scan_selects_four() {
    let rows = coefficient_scan(&[1.0, 2.0, 4.0], |c| {
        LaxExample::sine_gordon(sg_solution(c), 1.0, 1.0)
    })
    .unwrap();
    assert!(rows[0].residual > 1e-2 && rows[1].residual > 1e-2);
    assert!(rows[2].residual <= 1e-7);
}

#[test]
fn sg_perturbation_breaks_both_residuals() {
    let theta = sg_solution(SG_COEFFICIENT);
    let pts = theta.region().points();
    let samples = theta.grid_samples().unwrap().to_vec();
    let nt = samples.len() / pts.len();
    let mut bumped = samples.clone();
    for v in bumped.iter_mut().skip(30 * nt).take(nt) {
        *v += C64::new(0.1, 0.0);
    }
    let d = theta.domain().clone();
    let bad = Field::grid(&d, Shape::SCALAR, theta.region().clone(), bumped).unwrap();
    let rows = equivalence_witness(
        &[
            (
                "solution".into(),
                LaxExample::sine_gordon(theta, 1.0, 1.0).unwrap(),
            ),
            (
                "bumped".into(),
                LaxExample::sine_gordon(bad, 1.0, 1.0).unwrap(),
            ),
        ],
        &[1.0, 2.0],
    )
    .unwrap();
    assert!(rows[0].worst_curvature() <= 1e-7);
    assert!(rows[1].worst_curvature() > 1e-3 && rows[1].equation > 1e-3);
}

#[test]
fn nls_soliton_flattens_the_corrected_connection() {
    let d = xt_domain(-5.0, 5.0, 0.1);
    let u = nls_soliton_field(&d).unwrap();
    let ex = LaxExample::nls(u.clone(), NlsVariant::Corrected).unwrap();
    assert!(ex.zero_curvature_residual().unwrap().max_norm().unwrap() <= 1e-9);
    assert!(ex.reduced_equation_residual().unwrap().max_norm().unwrap() <= 1e-9);
    let printed = LaxExample::nls(u, NlsVariant::AsPrinted)
        .unwrap()
        .curvature_field()
        .unwrap();
    assert!(entry_norm(&printed, 0, 0) > 1e-2);
    assert!(entry_norm(&printed, 1, 1) > 1e-2);
}

#[test]
fn nls_residual_has_the_conjugate_pairing() {
    let mut s = Sampler::new(51);
    for _ in 0..10 {
        let d = s.domain(0, 2, 4).unwrap();
        let u = s.field(&d, Shape::SCALAR);
        let f = LaxExample::nls(u, NlsVariant::Corrected)
            .unwrap()
            .curvature_field()
            .unwrap();
        assert!(entry_norm(&f, 0, 0) <= 1e-12);
        assert!(entry_norm(&f, 1, 1) <= 1e-12);
        let z11 = f.entry(1, 0).unwrap().neg();
        let z22 = f.entry(0, 1).unwrap();
        assert!(z22.sub(&z11.conj()).unwrap().max_norm().unwrap() <= 1e-12);
        assert!(z22.max_norm().unwrap() > 1e-3);
    }
}

#[test]
fn nls_grid_residual_converges_at_second_order() {
    let r: Vec<f64> = [0.1, 0.05, 0.025]
        .iter()
        .map(|&h| {
            let u = nls_soliton_field(&xt_domain(-5.0, 5.0, h))
                .unwrap()
                .materialize()
                .unwrap();
            LaxExample::nls(u, NlsVariant::Corrected)
                .unwrap()
                .zero_curvature_residual()
                .unwrap()
                .max_norm()
                .unwrap()
        })
        .collect();
    for w in r.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!((order - 2.0).abs() <= 0.3, "order {order} from {r:?}");
    }
}

#[test]
fn reduced_equations_vanish_on_trivial_fields() {
    let d = xt_domain(-1.0, 1.0, 0.5);
    let nls = LaxExample::nls(Field::zeros(&d, Shape::SCALAR), NlsVariant::Corrected).unwrap();
    assert_eq!(
        nls.reduced_equation_residual().unwrap().max_norm().unwrap(),
        0.0
    );
    let sd = Arc::new(make_domain(1, 1, &[(0, 5)], &[(0.0, 1.0)], &[0.25]).unwrap());
    let sg = LaxExample::sine_gordon(Field::zeros(&sd, Shape::SCALAR), 1.0, 2.0).unwrap();
    assert_eq!(
        sg.reduced_equation_residual().unwrap().max_norm().unwrap(),
        0.0
    );
    let td = Arc::new(make_domain(2, 0, &[(0, 5), (0, 5)], &[], &[]).unwrap());
    let toda = LaxExample::toda(Field::scalar(&td, C64::new(0.7, 0.0)), 1.0).unwrap();
    assert!(
        toda.reduced_equation_residual()
            .unwrap()
            .max_norm()
            .unwrap()
            <= 1e-15
    );
    assert!(equivalence_witness(&[], &[1.0]).is_err());
    assert!(nls.with_spectral(1.0).is_err());
}
