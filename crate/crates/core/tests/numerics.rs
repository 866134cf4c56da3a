use iqi_core::numerics::{hermitian_dot, null_projector, orthonormalize, ComplexMatrix, ProjectionBasis};
use iqi_core::{Complex64, IqiError};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn norm(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn complex_vec(len: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), len)
        .prop_map(|v| v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect())
}

fn pilot_strategy() -> impl Strategy<Value = Vec<Complex64>> {
    (4usize..=64)
        .prop_flat_map(complex_vec)
        .prop_filter("pilot must not vanish", |p| norm(p) > 1e-3)
}

/// Naive product `A B` with explicit index loops.
fn product(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(a.rows(), b.cols());
    for r in 0..a.rows() {
        for c in 0..b.cols() {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..a.cols() {
                acc += a[(r, k)] * b[(k, c)];
            }
            out[(r, c)] = acc;
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projector_annihilates_pilot(p in pilot_strategy()) {
        let qp = null_projector(&p).unwrap();
        let out = qp.apply(&p).unwrap();
        prop_assert!(norm(&out) <= 1e-10 * norm(&p));
    }

    #[test]
    fn projector_is_hermitian_and_idempotent(p in pilot_strategy()) {
        let qp = null_projector(&p).unwrap();
        prop_assert!(qp.max_abs_diff(&qp.adjoint()) <= 1e-10);
        prop_assert!(product(&qp, &qp).max_abs_diff(&qp) <= 1e-10);
    }

    #[test]
    fn basis_rows_are_orthonormal_and_null_the_pilot(p in pilot_strategy()) {
        let basis = ProjectionBasis::from_pilot(&p).unwrap();
        prop_assert_eq!(basis.dim(), p.len() - 1);
        let gram = product(basis.q(), &basis.q().adjoint());
        prop_assert!(gram.max_abs_diff(&ComplexMatrix::identity(p.len() - 1)) <= 1e-10);
        prop_assert!(norm(&basis.project(&p).unwrap()) <= 1e-10 * norm(&p));
    }

    #[test]
    fn basis_spans_the_projector(p in pilot_strategy()) {
        // Q^H Q must give back the projector it was built from
        let qp = null_projector(&p).unwrap();
        let basis = orthonormalize(&qp).unwrap();
        let back = product(&basis.q().adjoint(), basis.q());
        prop_assert!(back.max_abs_diff(&qp) <= 1e-10);
    }

    #[test]
    fn projection_never_adds_energy((p, x) in (4usize..=64).prop_flat_map(|l| (complex_vec(l), complex_vec(l)))) {
        prop_assume!(norm(&p) > 1e-3);
        let basis = ProjectionBasis::from_pilot(&p).unwrap();
        prop_assert!(norm(&basis.project(&x).unwrap()) <= norm(&x) * (1.0 + 1e-12));
    }

    #[test]
    fn hermitian_dot_conjugates_first(a in complex_vec(6), b in complex_vec(6)) {
        let ab = hermitian_dot(&a, &b).unwrap();
        let ba = hermitian_dot(&b, &a).unwrap();
        prop_assert!((ab - ba.conj()).norm() <= 1e-14);
        let mut re = 0.0;
        let mut im = 0.0;
        for (x, y) in a.iter().zip(&b) {
            re += x.re * y.re + x.im * y.im;
            im += x.re * y.im - x.im * y.re;
        }
        prop_assert!((ab.re - re).abs() <= 1e-14 && (ab.im - im).abs() <= 1e-14);
    }
}

#[test]
fn projected_white_noise_stays_white() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let len = 8;
    let pilot: Vec<Complex64> = (0..len)
        .map(|_| Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)))
        .collect();
    let basis = ProjectionBasis::from_pilot(&pilot).unwrap();
    let dim = basis.dim();

    let variance = 2.0;
    let sigma = (variance / 2.0f64).sqrt();
    let draws = 20_000;
    let mut cov = vec![Complex64::new(0.0, 0.0); dim * dim];
    for _ in 0..draws {
        let z: Vec<Complex64> = (0..len)
            .map(|_| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                Complex64::new(re, im) * sigma
            })
            .collect();
        let y = basis.project(&z).unwrap();
        for r in 0..dim {
            for c in 0..dim {
                cov[r * dim + c] += y[r] * y[c].conj();
            }
        }
    }
    for r in 0..dim {
        for c in 0..dim {
            let v = cov[r * dim + c] / draws as f64;
            let want = if r == c { variance } else { 0.0 };
            assert!((v - want).norm() < 0.05 * variance, "cov[{r},{c}] = {v}");
        }
    }
}

#[test]
fn dependent_rows_report_achieved_rank() {
    // a rank-1 "projector" has only one usable row
    let p = [
        Complex64::new(1.0, 0.0),
        Complex64::new(1.0, 0.0),
        Complex64::new(1.0, 0.0),
    ];
    let mut m = ComplexMatrix::zeros(3, 3);
    for r in 0..3 {
        for c in 0..3 {
            m[(r, c)] = p[r] * p[c].conj() / 3.0;
        }
    }
    match orthonormalize(&m) {
        Err(IqiError::RankDeficient { achieved, expected }) => {
            assert_eq!((achieved, expected), (1, 2));
        }
        other => panic!("expected a rank error, got {other:?}"),
    }
}

#[test]
fn zero_and_short_pilots_are_rejected() {
    let zero = vec![Complex64::new(0.0, 0.0); 4];
    assert!(matches!(null_projector(&zero), Err(IqiError::InvalidPilot(_))));
    assert!(matches!(
        null_projector(&[Complex64::new(1.0, 0.0)]),
        Err(IqiError::InvalidPilot(_))
    ));
    assert!(hermitian_dot(&zero, &zero[..3]).is_err());
}
