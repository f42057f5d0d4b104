//! `H_f` against the free Neumann Hamiltonian through `U_f`, and against
//! `p_f²/2m` away from the kinks.

use std::f64::consts::PI;

use num_complex::Complex64;
use qbc_core::deformation::{apply_Uf, build_deformed, make_feps, MetricDeformation};
use qbc_core::grids::Grid;
use qbc_core::operators::PhysicalConstants;
use qbc_core::ComplexVector;

fn unit() -> PhysicalConstants {
    PhysicalConstants::default()
}

/// `⟨U_f ξ, H_f U_f ψ⟩` in coefficient coordinates.
fn deformed_form(d: &MetricDeformation, n: usize, xi: impl Fn(f64) -> f64, psi: impl Fn(f64) -> f64) -> f64 {
    let g = Grid::interval(n).unwrap();
    let ops = build_deformed(d, &g, &unit()).unwrap();
    let a = g.to_coefficients(&apply_Uf(&g.sample_real(xi), d, &g).unwrap()).unwrap();
    let b = g.to_coefficients(&apply_Uf(&g.sample_real(psi), d, &g).unwrap()).unwrap();
    a.dot(&ops.h_f.apply(&b).unwrap()).re
}

#[test]
fn form_values_converge_to_the_neumann_ones() {
    // ⟨cos 2x, H (cos 2x + cos 3x / 2)⟩ = π and ⟨cos 3x, H(...)⟩ = 9π/8
    let psi = |x: f64| (2.0 * x).cos() + 0.5 * (3.0 * x).cos();
    let cases: [(fn(f64) -> f64, f64); 2] = [(|x| (2.0 * x).cos(), PI), (|x| (3.0 * x).cos(), 9.0 * PI / 8.0)];
    for (eps, a) in [(0.1, 5.0), (0.05, 10.0)] {
        let d = make_feps(eps, a).unwrap();
        for (xi, exact) in cases {
            let coarse = (deformed_form(&d, 1000, xi, psi) - exact).abs();
            let fine = (deformed_form(&d, 4000, xi, psi) - exact).abs();
            assert!(fine < coarse, "eps={eps}: {coarse:.3e} -> {fine:.3e}");
            assert!(fine < 1e-3 * exact, "eps={eps}: {fine:.3e}");
        }
    }
}

/// Max relative gap between `H_f φ` and `p_f² φ / 2m` over nodes in
/// `(lo, hi)`, for a smooth bump supported there.
fn momentum_gap(d: &MetricDeformation, n: usize, lo: f64, hi: f64) -> f64 {
    let c = unit();
    let g = Grid::interval(n).unwrap();
    let ops = build_deformed(d, &g, &c).unwrap();
    let y = g.nodes();
    let bump = |t: f64| {
        if t <= lo || t >= hi {
            0.0
        } else {
            let s = (2.0 * t - lo - hi) / (hi - lo);
            (1.0 - s * s).powi(4)
        }
    };
    let phi = g.to_coefficients(&g.sample_real(bump)).unwrap();
    let hphi = ops.h_f.apply(&phi).unwrap();
    let pphi = ops.p_f.apply(&ops.p_f.apply(&phi).unwrap()).unwrap();
    let rhs: Vec<Complex64> = (0..phi.dim()).map(|j| pphi[j] / (2.0 * c.mass)).collect();
    let rhs = ComplexVector::from_vec(rhs).unwrap();
    let scale = hphi.as_slice().iter().map(|z| z.norm()).fold(0.0, f64::max);
    (0..phi.dim()).filter(|&j| y[j] > lo && y[j] < hi).map(|j| (hphi[j] - rhs[j]).norm()).fold(0.0, f64::max) / scale
}

#[test]
fn deformed_hamiltonian_is_momentum_squared() {
    let d = make_feps(0.1, 5.0).unwrap();
    let layer = d.layer_end();
    // inside the left layer and in the bulk, away from the kinks
    for (lo, hi) in [(0.2 * layer, 0.8 * layer), (PI / 4.0, 3.0 * PI / 4.0)] {
        let coarse = momentum_gap(&d, 2000, lo, hi);
        let fine = momentum_gap(&d, 4000, lo, hi);
        assert!(fine < 0.3 * coarse, "[{lo:.3}, {hi:.3}]: {coarse:.3e} -> {fine:.3e}");
        assert!(fine < 5e-3, "[{lo:.3}, {hi:.3}]: {fine:.3e}");
    }
}

#[test]
fn layer_action_is_variable_mass_minus_potential() {
    // -c(g² φ'' + 2 g g' φ') - V φ with V = (ħ²/8m)(g'² + 2 g g'')
    let c = unit();
    let d = make_feps(0.1, 5.0).unwrap();
    let layer = d.layer_end();
    let (lo, hi) = (0.2 * layer, 0.8 * layer);
    let bump = |t: f64| {
        if t <= lo || t >= hi {
            0.0
        } else {
            let s = (2.0 * t - lo - hi) / (hi - lo);
            (1.0 - s * s).powi(4)
        }
    };
    let mut gaps = Vec::new();
    for n in [2000, 4000] {
        let g = Grid::interval(n).unwrap();
        let h = g.spacing();
        let ops = build_deformed(&d, &g, &c).unwrap();
        let phi = g.sample_real(bump);
        let hphi = g.from_coefficients(&ops.h_f.apply(&g.to_coefficients(&phi).unwrap()).unwrap()).unwrap();
        let y = g.nodes();
        let k = c.kinetic_scale();
        let mut gap: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for j in 1..y.len() - 1 {
            if y[j] <= lo || y[j] >= hi {
                continue;
            }
            let d1 = (phi[j + 1] - phi[j - 1]).re / (2.0 * h);
            let d2 = (phi[j + 1] - 2.0 * phi[j] + phi[j - 1]).re / (h * h);
            let (gv, gp) = (d.g(y[j]), d.g_prime(y[j]));
            let want = -k * (gv * gv * d2 + 2.0 * gv * gp * d1) - d.potential(y[j], &c) * phi[j].re;
            gap = gap.max((hphi[j].re - want).abs());
            scale = scale.max(hphi[j].re.abs());
        }
        gaps.push(gap / scale);
    }
    assert!(gaps[1] < 0.3 * gaps[0] && gaps[1] < 5e-3, "{gaps:?}");
}
