//! Radial problems with semi-analytic references.

use forch_core::engineering::{self, PipelineConfig};
use forch_core::solver::{self, CmcProblem, PssProblem, SolverControls};
use forch_core::transform::{self, LiftOptions};
use forch_core::{Domain, Error, GppcPolynomial};

fn annulus(n_r: usize, n_t: usize) -> Domain {
    Domain::annulus(1.0, 2.0, n_r, n_t).unwrap()
}

fn laws() -> Vec<(&'static str, GppcPolynomial)> {
    vec![
        ("darcy", GppcPolynomial::darcy(1.0).unwrap()),
        ("two_term", GppcPolynomial::two_term(1.0, 1.0).unwrap()),
        ("power", GppcPolynomial::from_pairs(&[(1.0, 0.0), (0.5, 0.5)]).unwrap()),
        ("three_term", GppcPolynomial::three_term(1.0, 1.0, 1.0).unwrap()),
    ]
}

/// Max nodal error against the oracle at every radius of the grid.
fn oracle_error(g: &GppcPolynomial, n_r: usize, n_t: usize) -> f64 {
    let d = annulus(n_r, n_t);
    let sol = solver::solve_pss(&PssProblem::new(d, g.clone(), 1.0).unwrap()).unwrap();
    let o = engineering::radial_oracle(g, 1.0, 2.0, 1.0, n_r + 1).unwrap();
    (0..d.len()).map(|k| (sol.field.values[k] - o.u[d.split(k).0]).abs()).fold(0.0, f64::max)
}

#[test]
fn pss_matches_oracle_at_second_order() {
    for (name, g) in laws() {
        let coarse = oracle_error(&g, 32, 16);
        let fine = oracle_error(&g, 64, 16);
        let ratio = coarse / fine;
        assert!(ratio >= 3.5, "{name}: error ratio {ratio} ({coarse:e} -> {fine:e})");
        assert!(fine < 5e-4, "{name}: error {fine:e}");
    }
}

#[test]
fn darcy_reference_value_and_flux() {
    let d = annulus(64, 16);
    let g = GppcPolynomial::darcy(1.0).unwrap();
    let sol = solver::solve_pss(&PssProblem::new(d, g.clone(), 1.0).unwrap()).unwrap();
    let u2 = sol.field.at(64, 0);
    assert!((u2 - (2.0 * 2f64.ln() - 0.75)).abs() < 1e-3);
    let q = 3.0 * std::f64::consts::PI;
    assert!((sol.inner_flux - q).abs() / q < 1e-9);
    let pi = engineering::productivity_index(&sol.field, &g, 1.0).unwrap();
    assert!(pi.diagnostics.flux_relative_error.unwrap() < 1e-3);
    assert!(pi.diagnostics.energy_drawdown_difference.unwrap() < 1e-3);
    assert!(pi.flux_identity_error() < 1e-12);
}

#[test]
fn pi_routes_agree() {
    let g = GppcPolynomial::darcy(1.0).unwrap();
    let oracle = engineering::radial_oracle(&g, 1.0, 2.0, 1.0, 257).unwrap();
    let cfg = PipelineConfig {
        domain: annulus(64, 32),
        g: g.clone(),
        a: 1.0,
        chi: None,
        well_profile: None,
        controls: SolverControls::default(),
    };
    let out = engineering::pi_pipeline(&cfg).unwrap();
    let r = &out.report;
    let rel = |a: f64, b: f64| (a - b).abs() / b;
    assert!(rel(r.cmc.pi_energy, oracle.pi_energy) < 1e-2, "{} vs {}", r.cmc.pi_energy, oracle.pi_energy);
    assert!(rel(r.direct.pi_energy, oracle.pi_energy) < 1e-2);
    assert!(r.relative_difference < 1e-2);
    assert!((r.chi - 0.5 * r.chi_max).abs() < 1e-15);

    // A different law reuses the cached xi and only the PI moves.
    let g2 = GppcPolynomial::two_term(1.0, 1.0).unwrap();
    let again = out.cached.productivity_index(&g2).unwrap();
    assert_eq!(again.q, r.cmc.q);
    assert!(again.pi_energy < r.cmc.pi_energy);
}

#[test]
fn darcy_pi_is_homogeneous_in_a() {
    let g = GppcPolynomial::darcy(1.0).unwrap();
    let d = annulus(32, 8);
    let pi = |a: f64| {
        let sol = solver::solve_pss(&PssProblem::new(d, g.clone(), a).unwrap()).unwrap();
        engineering::productivity_index(&sol.field, &g, a).unwrap().pi_energy
    };
    let (one, two) = (pi(1.0), pi(2.0));
    assert!((one - two).abs() / one < 1e-8);
}

#[test]
fn quadratic_term_lowers_pi() {
    let d = annulus(32, 8);
    let pi = |g: GppcPolynomial| {
        let sol = solver::solve_pss(&PssProblem::new(d, g.clone(), 1.0).unwrap()).unwrap();
        engineering::productivity_index(&sol.field, &g, 1.0).unwrap().pi_energy
    };
    let darcy = pi(GppcPolynomial::darcy(1.0).unwrap());
    let quad = pi(GppcPolynomial::from_pairs(&[(1.0, 0.0), (0.3, 2.0)]).unwrap());
    assert!(quad < darcy);
}

#[test]
fn lift_round_trip_two_term() {
    let g = GppcPolynomial::two_term(1.0, 1.0).unwrap();
    let d = annulus(64, 32);
    let sol = solver::solve_pss(&PssProblem::new(d, g.clone(), 1.0).unwrap()).unwrap();
    let chi = 0.5 * transform::chi_max(&sol.field, &g).unwrap();
    let opts = LiftOptions { pss_constant: Some(1.0), ..Default::default() };
    let lift = transform::lift_to_cmc(&sol.field, &g, chi, &opts).unwrap();
    assert!(lift.report.tau_identity_error < 1e-8);
    assert!(lift.report.path_discrepancy < 1e-8);
    let back = transform::recover_forchheimer(&lift.grad_tilde, &g, chi).unwrap();
    let eta = forch_core::grid::gradient(&sol.field).norm("eta");
    let cutoff = 0.01 * eta.max_abs();
    for (e, r) in eta.values.iter().zip(&back.eta.values) {
        if *e > cutoff {
            assert!((e - r).abs() / e < 1e-4);
        }
    }
    // The reconstructed graph solves the CMC equation to discretization accuracy.
    assert!(lift.report.cmc_residual.unwrap() < 0.05, "{:?}", lift.report.cmc_residual);
}

#[test]
fn graph_recovery_from_cmc_solution() {
    let g = GppcPolynomial::darcy(1.0).unwrap();
    let chi = 0.5;
    let dt = Domain::annulus(chi, 2.0 * chi, 64, 16).unwrap();
    let sol = solver::solve_cmc(&CmcProblem::new(dt, 1.0, vec![0.0; 16]).unwrap()).unwrap();
    let rec = transform::recover_from_graph(&sol.field, &g, chi).unwrap();
    // |v| = (4 - r²)/(2r) on the unscaled annulus.
    for k in 0..dt.len() {
        let r = 1.0 + dt.split(k).0 as f64 / 64.0;
        let exact = (4.0 - r * r) / (2.0 * r);
        assert!((rec.speed.values[k] - exact).abs() < 2e-3, "r = {r}");
    }
}

fn radial_cmc(a: f64) -> Result<solver::Solution, Error> {
    let dt = annulus(32, 8);
    solver::solve_cmc(&CmcProblem::new(dt, a, vec![0.0; 8]).unwrap())
}

#[test]
fn cmc_solvability_threshold() {
    // max |A(r² - 4)/(2r)| on [1, 2] is 1.5 A, reached at r = 1.
    let ok = radial_cmc(0.6).unwrap();
    assert!(ok.history.last().unwrap().xi_max.is_finite());
    match radial_cmc(1.1 / 1.5) {
        Err(Error::CmcNonexistence { history, .. }) => assert!(!history.is_empty()),
        other => panic!("expected nonexistence, got {:?}", other.map(|s| s.residual)),
    }
}

#[test]
fn radial_cmc_matches_first_integral() {
    let (chi, a) = (0.5_f64, 1.0);
    let (rw, rr) = (chi, 2.0 * chi);
    let n = 64;
    let dt = Domain::annulus(rw, rr, n, 8).unwrap();
    let sol = solver::solve_cmc(&CmcProblem::new(dt, a, vec![0.0; 8]).unwrap()).unwrap();
    // ũ' = T/√(1-T²), T = A(r² - R²)/(2r).
    let slope = |r: f64| {
        let t = a * (r * r - rr * rr) / (2.0 * r);
        t / (1.0 - t * t).sqrt()
    };
    for i in (0..=n).step_by(8) {
        let r = rw + (rr - rw) * i as f64 / n as f64;
        let exact = forch_core::quadrature::adaptive_simpson(slope, rw, r, 1e-12).unwrap();
        assert!((sol.field.at(i, 3) - exact).abs() < 1e-3, "r = {r}");
    }
}
