use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use ripcert::counterexample::{generate_example, generate_with_basis, verify_example};
use ripcert::linalg::{sym_eig, DenseMatrix, Vector};
use ripcert::objective::{criticality_certificate, default_tolerances, evaluate, Scale};

fn gaussian_vec(rng: &mut ChaCha8Rng, n: usize) -> Vector {
    Vector::from_fn(n, |_, _| StandardNormal.sample(rng))
}

fn col(v: &Vector) -> DenseMatrix {
    DenseMatrix::from_column_slice(v.len(), 1, v.as_slice())
}

#[test]
fn family_is_half_rip_with_spurious_point() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for n in 2..=8 {
        for s in 0..5u64 {
            let z = gaussian_vec(&mut rng, n);
            let inst = generate_example(&z, 100 * n as u64 + s).unwrap();
            let report = verify_example(&inst).unwrap();
            assert!(report.passed(), "n={n} seed={s}: {:?}", report.failures);
            assert!((report.f_value / report.truth_norm_sq - 0.75).abs() <= 1e-9);

            let rec = inst.instance(Scale::One);
            let x = col(&inst.spurious_x);
            let (tg, th) = default_tolerances(&rec, &x);
            let cert = criticality_certificate(&rec, &x, tg, th).unwrap();
            assert!(cert.is_second_order && cert.f_value > 0.0);
        }
    }
}

#[test]
fn gram_spectrum_within_half_band() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for n in 2..=8 {
        let inst = generate_example(&gaussian_vec(&mut rng, n), n as u64).unwrap();
        let eig = sym_eig(&inst.operator.gram()).unwrap();
        assert!(eig.min() >= 0.5 - 1e-9 && eig.max() <= 1.5 + 1e-9);
    }
}

#[test]
fn half_scale_conversions() {
    let inst = generate_with_basis(&Vector::from_vec(vec![1.0, 0.0]), DenseMatrix::identity(2, 2)).unwrap();
    let x = col(&inst.spurious_x);
    let ev = evaluate(&inst.instance(Scale::Half), &x).unwrap();
    assert!((ev.f - 0.375).abs() <= 1e-14);
    assert!((ev.hess - DenseMatrix::from_diagonal(&Vector::from_vec(vec![0.0, 2.0]))).norm() <= 1e-13);
    let shifted = evaluate(&inst.instance(Scale::Half), &x).unwrap().hess - &x * x.transpose() * 4.0;
    assert!(sym_eig(&shifted).unwrap().min() >= -1e-12);
}

#[test]
fn collinear_point_is_not_critical() {
    let z = Vector::from_vec(vec![0.5, 1.0, -0.5]);
    let inst = generate_example(&z, 4).unwrap();
    let rec = inst.instance(Scale::One);
    let x = col(&(&z * 0.5));
    let (tg, th) = default_tolerances(&rec, &x);
    let cert = criticality_certificate(&rec, &x, tg, th).unwrap();
    assert!(cert.grad_norm > 1e-3);
    assert!(!cert.is_second_order);
}

// f*(x) = ‖z‖⁴ f̂(Pᵀx/‖z‖) + ‖x‖⁴ − ‖Pᵀx‖⁴, P = [u₁ u₂], f̂ the 2x2 example.
#[test]
fn reduction_to_two_dimensions() {
    let canonical = generate_with_basis(&Vector::from_vec(vec![1.0, 0.0]), DenseMatrix::identity(2, 2)).unwrap();
    let small = canonical.instance(Scale::One);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for n in [3, 5, 8] {
        let z = gaussian_vec(&mut rng, n);
        let inst = generate_example(&z, 9).unwrap();
        let rec = inst.instance(Scale::One);
        let p = inst.basis.columns(0, 2).into_owned();
        let nz = z.norm();
        for _ in 0..20 {
            let x = gaussian_vec(&mut rng, n);
            let px = p.transpose() * &x;
            let f = evaluate(&rec, &col(&x)).unwrap().f;
            let f_hat = evaluate(&small, &col(&(&px / nz))).unwrap().f;
            let want = nz.powi(4) * f_hat + x.norm().powi(4) - px.norm().powi(4);
            assert!((f - want).abs() <= 1e-8 * (1.0 + f.abs()), "n={n}: {f} vs {want}");
        }
    }
}
