use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use ripcert::closedform::{canonical_pair, delta_lower, PolarParams};
use ripcert::counterexample::generate_example;
use ripcert::linalg::{from_rows, orth_basis, DenseMatrix, Vector};
use ripcert::lmi::{build_lower_lmi, build_upper_lmi, delta_exact, recover_minimizer, reduce, verify_certificates, LmiStatus};
use ripcert::objective::rip_constant_fullspace;
use ripcert::sdp::SolverOptions;
use serde::Deserialize;

#[derive(Deserialize)]
struct Reference {
    name: String,
    x: Vec<Vec<f64>>,
    z: Vec<Vec<f64>>,
    delta: f64,
}

fn references() -> Vec<(String, DenseMatrix, DenseMatrix, f64)> {
    let refs: Vec<Reference> = serde_json::from_str(include_str!("data/delta_reference.json")).unwrap();
    refs.into_iter().map(|r| (r.name, from_rows(&r.x).unwrap(), from_rows(&r.z).unwrap(), r.delta)).collect()
}

fn gaussian(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DenseMatrix {
    DenseMatrix::from_fn(r, c, |_, _| StandardNormal.sample(rng))
}

fn col(v: Vector) -> DenseMatrix {
    DenseMatrix::from_column_slice(v.len(), 1, v.as_slice())
}

fn delta(x: &DenseMatrix, z: &DenseMatrix) -> f64 {
    delta_exact(x, z, &SolverOptions::default()).unwrap().delta
}

fn random_orthonormal(rng: &mut ChaCha8Rng, n: usize, k: usize) -> DenseMatrix {
    orth_basis(&gaussian(rng, n, k))
}

#[test]
fn matches_reference_values() {
    for (name, x, z, want) in references() {
        let sol = delta_exact(&x, &z, &SolverOptions::default()).unwrap();
        assert!((sol.delta - want).abs() <= 1e-6, "{name}: {} vs {want}", sol.delta);
        if name == "collinear" {
            assert_eq!(sol.status, LmiStatus::InfeasibleAtDeltaBelowOne);
        } else {
            assert_eq!(sol.status, LmiStatus::Optimal, "{name}");
        }
    }
}

#[test]
fn certificates_hold_on_references() {
    for (name, x, z, _) in references() {
        let pair = reduce(&x, &z).unwrap();
        let sol = build_upper_lmi(&pair).unwrap().solve(&SolverOptions::default()).unwrap();
        if sol.status != LmiStatus::Optimal {
            continue;
        }
        let report = verify_certificates(&sol, &pair).unwrap();
        assert!(report.max_violation() <= 1e-8, "{name}: {report:?}");
        assert!(report.lifted.is_some());
    }
}

#[test]
fn dual_objective_matches_primal() {
    let opts = SolverOptions::default();
    for (name, x, z, _) in references().into_iter().filter(|r| r.0 != "collinear") {
        let pair = reduce(&x, &z).unwrap();
        let problem = build_upper_lmi(&pair).unwrap();
        let sol = problem.solve(&opts).unwrap();
        let dual = problem.check_dual(&sol.dual, &sol.compact_duals).unwrap();
        assert!((dual.objective - sol.delta).abs() <= 10.0 * opts.gap_tol, "{name}: {} vs {}", dual.objective, sol.delta);
    }
}

#[test]
fn upper_and_lower_agree_on_range() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let opts = SolverOptions::default();
    for (n, r) in [(4, 1), (4, 1), (4, 2)] {
        let x = gaussian(&mut rng, n, r);
        let z = gaussian(&mut rng, n, r);
        let upper = delta_exact(&x, &z, &opts).unwrap();
        let p = orth_basis(&DenseMatrix::from_columns(&x.column_iter().chain(z.column_iter()).map(|c| c.into_owned()).collect::<Vec<_>>()));
        let lower = build_lower_lmi(&x, &z, &p).unwrap().solve(&opts).unwrap();
        assert!((upper.delta - lower.delta).abs() <= 1e-6, "{} vs {}", upper.delta, lower.delta);
        assert!(upper.gap.abs() <= 1e-7 && lower.gap.abs() <= 1e-7);
    }
}

#[test]
fn upper_and_lower_agree_rank_two_n5() {
    // The equality map of the lower problem here has repeated singular values.
    let x = from_rows(&[
        vec![1.4085695476052649, -0.7857149480157865],
        vec![0.5430004981516771, 0.3642085671673623],
        vec![0.7633965249901502, 1.1781981594160245],
        vec![-0.5025840515879716, 1.422792463907797],
        vec![0.6508670294061183, -0.3124155618026127],
    ])
    .unwrap();
    let z = from_rows(&[
        vec![1.6048108079456223, -0.3692016528826005],
        vec![2.7786200324502195, 0.6198378013794533],
        vec![1.0733095718850536, 0.08700539870044642],
        vec![-0.9905612775874669, -0.3233943577453725],
        vec![1.0820197139291157, -0.6206022047690252],
    ])
    .unwrap();
    let opts = SolverOptions::default();
    let upper = delta_exact(&x, &z, &opts).unwrap();
    let p = orth_basis(&DenseMatrix::from_columns(&x.column_iter().chain(z.column_iter()).map(|c| c.into_owned()).collect::<Vec<_>>()));
    let problem = build_lower_lmi(&x, &z, &p).unwrap();
    let lower = problem.solve(&opts).unwrap();
    assert!((upper.delta - 0.96594833).abs() <= 1e-6, "{}", upper.delta);
    assert!((upper.delta - lower.delta).abs() <= 1e-6, "{} vs {}", upper.delta, lower.delta);
    let report = problem.check(&lower).unwrap();
    assert!(report.primal_eq_residual <= 1e-8 && report.hessian_min_eig >= -1e-8, "{report:?}");
}

#[test]
fn lower_bound_grows_with_subspace() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let opts = SolverOptions::default();
    let n = 3;
    let x = gaussian(&mut rng, n, 1);
    let z = gaussian(&mut rng, n, 1);
    let exact = delta(&x, &z);
    let full = random_orthonormal(&mut rng, n, n);
    let mut last = 0.0;
    for k in 1..=n {
        let p = full.columns(0, k).into_owned();
        let d = build_lower_lmi(&x, &z, &p).unwrap().solve(&opts).unwrap().delta;
        assert!(d >= last - 1e-7, "k = {k}: {d} < {last}");
        assert!(d <= exact + 1e-7, "k = {k}: {d} > {exact}");
        last = d;
    }
    assert!((last - exact).abs() <= 1e-6);
}

#[test]
fn projection_invariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for (rho, phi) in [(0.6f64, 1.2f64), (1.3, 0.7)] {
        let (x, z) = canonical_pair(rho, phi);
        let base = delta(&col(x.clone()), &col(z.clone()));
        let p = random_orthonormal(&mut rng, 5, 2);
        let lifted = delta(&(&p * col(x)), &(&p * col(z)));
        assert!((base - lifted).abs() <= 1e-6, "{base} vs {lifted}");
    }
    let x = gaussian(&mut rng, 3, 2);
    let z = gaussian(&mut rng, 3, 2);
    let q = random_orthonormal(&mut rng, 3, 3);
    assert!((delta(&x, &z) - delta(&(&q * &x), &(&q * &z))).abs() <= 1e-6);
}

#[test]
fn scale_invariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let x = gaussian(&mut rng, 3, 1);
    let z = gaussian(&mut rng, 3, 1);
    let base = delta(&x, &z);
    for t in [1e-2, 0.3, 7.0, 1e2] {
        assert!((delta(&(&x * t), &(&z * t)) - base).abs() <= 1e-6, "t = {t}");
    }
}

#[test]
fn quadrant_symmetry() {
    for (rho, phi) in [(0.5f64, 0.9f64), (1.2, 0.3)] {
        let (x, z) = canonical_pair(rho, phi);
        let base = delta(&col(x.clone()), &col(z.clone()));
        let flips = [Vector::from_vec(vec![x[0], -x[1]]), Vector::from_vec(vec![-x[0], x[1]]), Vector::from_vec(vec![-x[0], -x[1]])];
        for f in flips {
            assert!((delta(&col(f), &col(z.clone())) - base).abs() <= 1e-6);
        }
    }
}

#[test]
fn recovered_operator_attains_delta() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for (n, r) in [(2, 1), (4, 1), (3, 2)] {
        let x = gaussian(&mut rng, n, r);
        let z = gaussian(&mut rng, n, r);
        let pair = reduce(&x, &z).unwrap();
        let sol = build_upper_lmi(&pair).unwrap().solve(&SolverOptions::default()).unwrap();
        let op = recover_minimizer(&sol, &pair).unwrap();
        let want = ripcert::lmi::lifted_kernel(&sol, &pair).unwrap();
        assert!((op.gram() - want).norm() <= 1e-8);
        assert!((rip_constant_fullspace(&op) - sol.delta).abs() <= 1e-6, "n={n} r={r}");
    }
}

#[test]
fn closed_form_bound_is_below_exact() {
    for (rho, deg) in [(0.2, 10.0), (0.5, 55.0), (0.8, 80.0), (1.0, 45.0), (1.7, 60.0), (0.7, 90.0)] {
        let p = PolarParams::from_degrees(rho, deg).unwrap();
        let (x, z) = canonical_pair(rho, p.phi);
        let exact = delta(&col(x), &col(z));
        assert!(delta_lower(&p).delta_lb <= exact + 1e-6, "({rho}, {deg})");
    }
}

#[test]
fn counterexample_point_is_sharp() {
    let z = Vector::from_vec(vec![0.4, -1.1, 0.3, 0.9]);
    let inst = generate_example(&z, 2).unwrap();
    let d = delta(&col(inst.spurious_x.clone()), &col(z));
    assert!((d - 0.5).abs() <= 1e-3, "{d}");
}

#[test]
fn global_minimum_is_rejected() {
    let z = DenseMatrix::from_column_slice(2, 1, &[1.0, 2.0]);
    assert!(matches!(delta_exact(&(-&z), &z, &SolverOptions::default()), Err(ripcert::Error::NotSpurious)));
}
