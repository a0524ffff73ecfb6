use ndarray::Array2;
use num_complex::Complex64;
use proptest::prelude::*;
use spinlace_core::response::finite_time_ft;
use spinlace_core::symmetry::verify_eigenoperator;
use spinlace_core::{build, PauliString, PauliSum, SpinLaceSpec, StateVector, TimeSeries};

const MAX_SITES: usize = 4;

fn string(n: usize) -> impl Strategy<Value = PauliString> {
    let mask = (1u64 << n) - 1;
    (any::<u64>(), any::<u64>())
        .prop_map(move |(x, z)| PauliString::from_masks(n, x & mask, z & mask).unwrap())
}

fn coeff() -> impl Strategy<Value = Complex64> {
    (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(re, im)| Complex64::new(re, im))
}

fn sum(n: usize) -> impl Strategy<Value = PauliSum> {
    prop::collection::vec((string(n), coeff()), 1..8)
        .prop_map(move |terms| PauliSum::from_terms(n, terms).unwrap())
}

fn dense(op: &PauliSum) -> Array2<Complex64> {
    op.to_matrix(MAX_SITES).unwrap()
}

fn max_diff(a: &Array2<Complex64>, b: &Array2<Complex64>) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn string_products_match_matrices(
        (a, b) in (1..=MAX_SITES).prop_flat_map(|n| (string(n), string(n)))
    ) {
        let (phase, c) = a.multiply(&b).unwrap();
        let one = Complex64::new(1.0, 0.0);
        let lhs = dense(&PauliSum::from_string(a, one)).dot(&dense(&PauliSum::from_string(b, one)));
        let rhs = dense(&PauliSum::from_string(c, phase.to_complex()));
        prop_assert!(max_diff(&lhs, &rhs) < 1e-14);
        // the product is again a single string, and strings square to one
        let (p2, sq) = a.multiply(&a).unwrap();
        prop_assert!(sq.is_identity());
        prop_assert_eq!(p2.exponent(), 0);
        prop_assert_eq!(a.commutes_with(&b), b.commutes_with(&a));
    }

    #[test]
    fn commutator_is_antisymmetric_and_satisfies_jacobi(
        (a, b, c) in (1..=MAX_SITES).prop_flat_map(|n| (sum(n), sum(n), sum(n)))
    ) {
        let ab = a.commutator(&b).unwrap();
        let ba = b.commutator(&a).unwrap();
        prop_assert!(ab.add(&ba).unwrap().hs_norm() < 1e-12);
        let jacobi = a.commutator(&b.commutator(&c).unwrap()).unwrap()
            .add(&b.commutator(&c.commutator(&a).unwrap()).unwrap()).unwrap()
            .add(&c.commutator(&a.commutator(&b).unwrap()).unwrap()).unwrap();
        prop_assert!(jacobi.hs_norm() < 1e-12);
        let want = dense(&a).dot(&dense(&b)) - dense(&b).dot(&dense(&a));
        prop_assert!(max_diff(&dense(&ab), &want) < 1e-12);
    }

    #[test]
    fn matvec_matches_dense_product((op, seed) in (1..=MAX_SITES).prop_flat_map(|n| (sum(n), any::<u64>()))) {
        let v = StateVector::random(op.n_sites(), seed);
        let want = dense(&op).dot(&ndarray::Array1::from(v.amplitudes().to_vec()));
        let got = op.matvec(&v).unwrap();
        let err = got.amplitudes().iter().zip(want.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        prop_assert!(err < 1e-12);
    }

    #[test]
    fn transform_is_linear(
        xs in prop::collection::vec(coeff(), 2..40),
        ys in prop::collection::vec(coeff(), 2..40),
        a in coeff(),
        b in coeff(),
        dt in 0.01f64..0.5,
    ) {
        let n = xs.len().min(ys.len());
        let times: Vec<f64> = (0..n).map(|k| k as f64 * dt).collect();
        let x = TimeSeries::new(times.clone(), xs[..n].to_vec(), "x").unwrap();
        let y = TimeSeries::new(times, ys[..n].to_vec(), "y").unwrap();
        let omegas = [0.0, 0.3, 1.7, 6.2];
        let fx = finite_time_ft(&x, &omegas).unwrap();
        let fy = finite_time_ft(&y, &omegas).unwrap();
        let fxy = finite_time_ft(&x.combine(a, &y, b).unwrap(), &omegas).unwrap();
        for k in 0..omegas.len() {
            let want = a * fx.values[k] + b * fy.values[k];
            prop_assert!((fxy.values[k] - want).norm() < 1e-12);
        }
    }

    #[test]
    fn frequency_ignores_scale_and_phase(
        seed in any::<u64>(),
        spread in 0.0f64..1.0,
        scale in 1e-3f64..1e3,
        angle in -3.2f64..3.2,
    ) {
        let lace = build(&SpinLaceSpec::ordered(3, 1.3, [0.7, -1.1, 0.4]).with_disorder(seed, spread, spread)).unwrap();
        for (_, a) in lace.symmetries().unwrap() {
            let base = verify_eigenoperator(&lace.hamiltonian, &a).unwrap();
            let scaled = a.scaled(Complex64::from_polar(scale, angle));
            let other = verify_eigenoperator(&lace.hamiltonian, &scaled).unwrap();
            prop_assert!((base.omega - other.omega).abs() < 1e-12);
            prop_assert!(base.residual < 1e-12 && other.residual < 1e-12);
            prop_assert!((base.omega + 2.0 * 1.3).abs() < 1e-12);
            prop_assert!(base.operator.sub(&other.operator).unwrap().hs_norm() < 1e-12);
        }
    }
}
