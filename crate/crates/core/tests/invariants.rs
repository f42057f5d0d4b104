use ndarray::Array2;
use num_complex::Complex64;
use proptest::prelude::*;

use qbc_core::folding::Folding;
use qbc_core::grids::{parity_permutation, Grid};
use qbc_core::numerics::{conjugate, hermitian_eigen, hermitian_eigenvalues, max_abs, propagate};
use qbc_core::operators::{
    build_circle_laplacian, build_interval_hamiltonian, compute_current, BoundarySpec, PhysicalConstants,
};
use qbc_core::reduction::{
    reduce_hamiltonian, split_even_odd, u_minus, u_minus_adjoint, u_plus, u_plus_adjoint, ParitySector, Sign,
};
use qbc_core::{ComplexVector, HermitianOperator};

fn unit() -> PhysicalConstants {
    PhysicalConstants::default()
}

fn complex_vec(n: usize) -> impl Strategy<Value = ComplexVector> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n)
        .prop_map(|v| ComplexVector::from_vec(v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect()).unwrap())
}

fn hermitian(n: usize) -> impl Strategy<Value = HermitianOperator> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n * n).prop_map(move |v| {
        let mut m = Array2::<Complex64>::zeros((n, n));
        for i in 0..n {
            m[[i, i]] = Complex64::new(v[i * n + i].0, 0.0);
            for j in i + 1..n {
                let z = Complex64::new(v[i * n + j].0, v[i * n + j].1);
                m[[i, j]] = z;
                m[[j, i]] = z.conj();
            }
        }
        HermitianOperator::new(m, "random").unwrap()
    })
}

/// `exp(iA)` from the eigendecomposition of a Hermitian `A`.
fn unitary_from(a: &HermitianOperator) -> Array2<Complex64> {
    let e = hermitian_eigen(a).unwrap();
    let n = a.dim();
    let mut u = Array2::<Complex64>::zeros((n, n));
    for (k, &l) in e.eigenvalues.iter().enumerate() {
        let q = e.eigenvectors[k].as_slice();
        let phase = Complex64::from_polar(1.0, l);
        for i in 0..n {
            for j in 0..n {
                u[[i, j]] += phase * q[i] * q[j].conj();
            }
        }
    }
    u
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn eigen_round_trip(a in (2usize..24).prop_flat_map(hermitian)) {
        let e = hermitian_eigen(&a).unwrap();
        let back = e.reconstruct();
        prop_assert!(max_abs(&(&back - a.matrix())) < 1e-11);
        prop_assert!(e.orthonormality_defect() < 1e-11);
        prop_assert!(e.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn conjugation_keeps_the_spectrum(
        (a, b) in (2usize..20).prop_flat_map(|n| (hermitian(n), hermitian(n)))
    ) {
        let u = unitary_from(&b);
        let before = hermitian_eigenvalues(&a).unwrap();
        let after = hermitian_eigenvalues(&conjugate(&a, &u).unwrap()).unwrap();
        let err = before.iter().zip(&after).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        prop_assert!(err < 1e-10, "{err:.3e}");
    }

    #[test]
    fn fold_unfold_is_unitary(
        (n, line, psi) in (2usize..64, any::<bool>()).prop_flat_map(|(half, line)| {
            let points = if line { 2 * half + 1 } else { 2 * half };
            (Just(half), Just(line), complex_vec(points))
        })
    ) {
        let g = if line { Grid::truncated_line(n, 20.0).unwrap() } else { Grid::circle(2 * n).unwrap() };
        let f = Folding::new(&g).unwrap();
        let s = f.fold(&psi).unwrap();
        prop_assert!((s.norm() - g.norm(&psi)).abs() < 1e-12);
        prop_assert!(f.unfold(&s).unwrap().max_abs_diff(&psi) < 1e-12);
    }

    #[test]
    fn current_is_odd_under_parity(psi in complex_vec(96)) {
        let g = Grid::circle(96).unwrap();
        let p = parity_permutation(&g).unwrap();
        let j = compute_current(&psi, &g, &unit()).unwrap();
        let jp = compute_current(&p.apply(&psi).unwrap(), &g, &unit()).unwrap();
        for k in 0..j.len() {
            prop_assert!((j[k] + jp[p.image(k)]).abs() < 1e-10);
        }
    }

    #[test]
    fn sector_maps_are_isometries(psi in complex_vec(64)) {
        let circle = Grid::circle(64).unwrap();
        let interval = Grid::matched_interval(&circle).unwrap();
        let (even, odd) = split_even_odd(&psi, &circle).unwrap();
        let sum = ComplexVector::new(even.as_array() + odd.as_array()).unwrap();
        prop_assert!(sum.max_abs_diff(&psi) < 1e-14);
        let e = u_plus(&even, &circle).unwrap();
        let o = u_minus(&odd, &circle).unwrap();
        prop_assert!((interval.norm(&e) - circle.norm(&even)).abs() < 1e-12);
        prop_assert!((interval.norm(&o) - circle.norm(&odd)).abs() < 1e-12);
        prop_assert!(u_plus_adjoint(&e, &interval).unwrap().max_abs_diff(&even) < 1e-12);
        prop_assert!(u_minus_adjoint(&o, &interval).unwrap().max_abs_diff(&odd) < 1e-12);
        for sign in [Sign::Plus, Sign::Minus] {
            let sector = ParitySector::new(&circle, sign).unwrap();
            let c = circle.to_coefficients(&psi).unwrap();
            let d = sector.restrict(&c).unwrap();
            prop_assert!(sector.restrict(&sector.extend(&d).unwrap()).unwrap().max_abs_diff(&d) < 1e-12);
        }
    }

    #[test]
    fn sector_dynamics_match_circle_dynamics(d in complex_vec(33), t in 0.0f64..3.0) {
        let interval = Grid::interval(32).unwrap();
        let circle = Grid::matched_circle(&interval).unwrap();
        let h = build_circle_laplacian(&circle, &unit()).unwrap();
        let sector = ParitySector::new(&circle, Sign::Plus).unwrap();
        let reduced = reduce_hamiltonian(&h, &circle, Sign::Plus).unwrap();
        let full = propagate(&hermitian_eigen(&h).unwrap(), &sector.extend(&d).unwrap(), t, 1.0).unwrap();
        let part = propagate(&hermitian_eigen(&reduced).unwrap(), &d, t, 1.0).unwrap();
        prop_assert!(sector.restrict(&full).unwrap().max_abs_diff(&part) < 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn union_identity(n in 2usize..=512) {
        let interval = Grid::interval(n).unwrap();
        let circle = Grid::matched_circle(&interval).unwrap();
        let c = unit();
        let full = hermitian_eigenvalues(&build_circle_laplacian(&circle, &c).unwrap()).unwrap();
        let mut merged = hermitian_eigenvalues(&build_interval_hamiltonian(&interval, &BoundarySpec::Neumann, &c).unwrap()).unwrap();
        merged.extend(hermitian_eigenvalues(&build_interval_hamiltonian(&interval, &BoundarySpec::Dirichlet, &c).unwrap()).unwrap());
        merged.sort_by(f64::total_cmp);
        prop_assert_eq!(merged.len(), full.len());
        let err = full.iter().zip(&merged).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        // roundoff grows with the top of the spectrum, ~ 4/h² at large n
        let tol = 1e-10f64.max(1e-14 * full[full.len() - 1]);
        prop_assert!(err <= tol, "n={} err={:.3e}", n, err);
    }
}
