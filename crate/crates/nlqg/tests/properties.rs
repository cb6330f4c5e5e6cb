//! Property tests for the structural invariants.

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

use nlqg::density::{partial_trace_b, trace_distance, DensityMatrix};
use nlqg::dg::{dg_bracket, dg_rhs, DGParams, RSpec};
use nlqg::field::{ParticleSel, WaveField};
use nlqg::grid::GridSpec;
use nlqg::cosmo::energy_conditions;

fn small_grid() -> GridSpec {
    GridSpec::new(1, 16, 8.0).unwrap()
}

fn amplitude_strategy(n: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n)
        .prop_map(|v| v.into_iter().map(|(re, im)| Complex64::new(re, im)).collect())
}

fn normalized_pair_field() -> impl Strategy<Value = WaveField> {
    let g = small_grid();
    amplitude_strategy(g.node_count(2)).prop_filter_map("norm too small", move |amps| {
        let mut f = WaveField::new(g, 2, amps).ok()?;
        f.normalize().ok()?;
        Some(f)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn plane_wave_derivative_is_exact(mode in -31i64..32) {
        let g = GridSpec::new(1, 64, 16.0).unwrap();
        let f = WaveField::plane_wave(g, &[mode]).unwrap();
        let d = f.gradient(0).unwrap();
        let k = 2.0 * std::f64::consts::PI * mode as f64 / g.length;
        // relative to the derivative's own scale (1 + |k|) |psi|
        let scale = (1.0 + k.abs()) / g.length.sqrt();
        for (a, b) in d.amplitudes().iter().zip(f.amplitudes()) {
            let err = (a - Complex64::new(0.0, k) * b).norm();
            prop_assert!(err <= 1e-12 * scale, "mode {mode}: err {err:e}");
        }
    }

    #[test]
    fn partial_trace_is_hermitian_unit_trace(phi in normalized_pair_field()) {
        let rho = partial_trace_b(&phi).unwrap();
        prop_assert!(rho.hermiticity_defect() <= 1e-12);
        prop_assert!((rho.trace() - 1.0).abs() <= 1e-10);
        // positive semidefinite down to roundoff
        let min_ev = rho.eigenvalues().into_iter().fold(f64::INFINITY, f64::min);
        prop_assert!(min_ev >= -1e-10, "min eigenvalue {min_ev:e}");
    }

    #[test]
    fn purity_matches_schmidt_spectrum(phi in normalized_pair_field()) {
        let rho = partial_trace_b(&phi).unwrap();
        let n = phi.grid().points;
        let dx = phi.grid().dx();
        let m = DMatrix::from_fn(n, n, |i, j| phi.amplitudes()[i * n + j]);
        let svd = m.svd(false, false);
        let purity_svd: f64 = svd.singular_values.iter().map(|s| (s * dx).powi(4)).sum();
        prop_assert!((rho.purity() - purity_svd).abs() <= 1e-8);
    }

    #[test]
    fn trace_distance_triangle_inequality(
        a in normalized_pair_field(),
        b in normalized_pair_field(),
        c in normalized_pair_field(),
    ) {
        let ra = partial_trace_b(&a).unwrap();
        let rb = partial_trace_b(&b).unwrap();
        let rc = partial_trace_b(&c).unwrap();
        let dab = trace_distance(&ra, &rb).unwrap();
        let dbc = trace_distance(&rb, &rc).unwrap();
        let dac = trace_distance(&ra, &rc).unwrap();
        prop_assert!(dac <= dab + dbc + 1e-10);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&dab));
    }

    #[test]
    fn pure_state_density_matrix_from_two_routes(
        re in -1.0f64..1.0, im in -1.0f64..1.0, k in 0i64..8
    ) {
        // |psi><psi| built directly agrees with the partial trace of
        // psi (x) chi for any fixed normalized chi
        let g = small_grid();
        let mut psi = WaveField::plane_wave(g, &[k]).unwrap();
        let bump = WaveField::gaussian(g, &[4.0], &[0.9], &[0.0]).unwrap();
        psi.axpy(Complex64::new(re, im), &bump).unwrap();
        psi.normalize().unwrap();
        let chi = WaveField::gaussian(g, &[4.0], &[1.0], &[1.0]).unwrap();
        let phi = WaveField::product(&chi, &psi).unwrap();
        let from_trace = partial_trace_b(&phi).unwrap();
        let direct = DensityMatrix::from_pure(&psi).unwrap();
        let d = trace_distance(&from_trace, &direct).unwrap();
        prop_assert!(d <= 1e-10, "distance {d:e}");
    }

    #[test]
    fn dg_rhs_degree_one_homogeneity(
        log_mag in -1.0f64..1.0,
        phase in 0.0f64..(2.0 * std::f64::consts::PI),
    ) {
        let g = GridSpec::new(1, 64, 16.0).unwrap();
        let mut params = DGParams::new(1.0, 1.0, 0.04).unwrap();
        params.r_spec = RSpec { coeffs: [0.1, 0.0, 0.2, 0.0, 0.1] };
        let f = WaveField::gaussian(g, &[8.0], &[1.0], &[0.7]).unwrap();
        let z = Complex64::from_polar(10f64.powf(log_mag), phase);
        let base = dg_rhs(&f, &params).unwrap();
        let mut scaled = f.clone();
        for a in scaled.amplitudes_mut() { *a *= z; }
        let rhs = dg_rhs(&scaled, &params).unwrap();
        let rho = f.density();
        let rho_max = rho.iter().cloned().fold(0.0, f64::max);
        let scale = base.amplitudes().iter().map(|v| v.norm()).fold(0.0, f64::max);
        for (i, (r, b)) in rhs.amplitudes().iter().zip(base.amplitudes()).enumerate() {
            if rho[i] < 1e-6 * rho_max { continue; }
            prop_assert!((r - z * b).norm() <= 1e-8 * z.norm() * scale);
        }
    }

    #[test]
    fn plane_wave_transparency(mode in -100i64..100) {
        let g = GridSpec::new(1, 256, 32.0).unwrap();
        let params = DGParams::new(1.0, 1.0, 1.0).unwrap();
        let f = WaveField::plane_wave(g, &[mode]).unwrap();
        let b = dg_bracket(&f, ParticleSel::All, &params).unwrap();
        let k = 2.0 * std::f64::consts::PI * mode as f64 / g.length;
        let amp = 1.0 / g.length.sqrt();
        let bound = 1e-12 * (1.0 + 1.1 * k * k * amp);
        let max = b.amplitudes().iter().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!(max <= bound, "mode {mode}: {max:e} > {bound:e}");
    }

    #[test]
    fn dominant_implies_weak(rho in 0.0f64..10.0, p in -10.0f64..10.0) {
        let r = energy_conditions(rho, p);
        if r.dominant {
            prop_assert!(r.weak);
        }
    }
}
