//! Velocity, total flux and Productivity Index, the radial reference
//! solution, and the CMC route to the Productivity Index.
//!
//! For a pseudo-steady-state profile the total flux through the well is
//! `Q = A|U|` and the Productivity Index can be computed two ways:
//!
//! ```text
//!   PI_energy   = Q² / ∫_U g(|v|)|v|² dx
//!   PI_drawdown = Q / ((1/|U|)∫_U u dx - (1/|Γ_i|)∮_{Γ_i} u dσ)
//! ```
//!
//! The energy form only needs `|v|`, which is what the CMC route produces.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gppc::GppcPolynomial;
use crate::grid::{self, BoundaryTag, Domain, ScalarField, VectorField};
use crate::quadrature::adaptive_simpson;
use crate::solver::{self, CmcProblem, Mobility, PssProblem, SolverControls};
use crate::transform::{self, LiftOptions};

/// `v = -K(|∇u|)∇u` at every node.
pub fn velocity(u: &ScalarField, g: &GppcPolynomial) -> Result<VectorField> {
    solver::flux_field(u, Mobility::Forchheimer(g))
}

/// `A` from a prescribed total flux `Q`.
pub fn a_from_q(q: f64, domain: &Domain) -> f64 {
    q / domain.area()
}

/// `∫_U |v|^{α+2} dx` for one momentum-law term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TermEnergy {
    pub a: f64,
    pub alpha: f64,
    /// Moment `∫ |v|^{α+2}`, without the coefficient.
    pub moment: f64,
    /// `a · moment`.
    pub energy: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct PiDiagnostics {
    /// `|∮_{Γ_i} v·N - Q| / Q` from nodal velocities; absent without a profile.
    pub flux_relative_error: Option<f64>,
    /// `|PI_energy - PI_drawdown| / PI_energy`.
    pub energy_drawdown_difference: Option<f64>,
    /// Final residual of the solve that produced the field.
    pub solver_residual: Option<f64>,
    pub solver_iterations: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PiReport {
    pub q: f64,
    pub a: f64,
    pub area: f64,
    pub energy: f64,
    pub pi_energy: f64,
    pub pi_drawdown: Option<f64>,
    pub terms: Vec<TermEnergy>,
    pub chi: Option<f64>,
    pub diagnostics: PiDiagnostics,
}

impl PiReport {
    /// Energy form for a different momentum law with `|v|` held fixed.
    /// Needs the moments of `speed` for the new exponents, hence the field.
    pub fn reevaluate(&self, speed: &ScalarField, g: &GppcPolynomial) -> Result<PiReport> {
        let mut report = energy_report(speed, g, self.a)?;
        report.chi = self.chi;
        Ok(report)
    }

    /// `Q = A|U|` check; zero when the report is internally consistent.
    pub fn flux_identity_error(&self) -> f64 {
        (self.q - self.a * self.area).abs() / (self.a * self.area).abs().max(f64::MIN_POSITIVE)
    }
}

/// Energy-form report from a speed field `|v|` on `U`.
pub fn energy_report(speed: &ScalarField, g: &GppcPolynomial, a: f64) -> Result<PiReport> {
    let area = speed.domain.area();
    let q = a * area;
    let mut terms = Vec::with_capacity(g.terms().len());
    for t in g.terms() {
        let moment = grid::integrate(&speed.map("moment", |s| s.powf(t.alpha + 2.0)));
        terms.push(TermEnergy { a: t.a, alpha: t.alpha, moment, energy: t.a * moment });
    }
    let energy: f64 = terms.iter().map(|t| t.energy).sum();
    if !(energy > 0.0) || !energy.is_finite() {
        return Err(Error::ZeroEnergy);
    }
    Ok(PiReport {
        q,
        a,
        area,
        energy,
        pi_energy: q * q / energy,
        pi_drawdown: None,
        terms,
        chi: None,
        diagnostics: PiDiagnostics::default(),
    })
}

/// Both Productivity Index formulas for a PSS profile `u`.
pub fn productivity_index(u: &ScalarField, g: &GppcPolynomial, a: f64) -> Result<PiReport> {
    if let Some(node) = u.values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { name: u.name.clone(), node });
    }
    let v = velocity(u, g)?;
    let mut report = energy_report(&v.norm("v_abs"), g, a)?;
    let drawdown = grid::integrate(u) / report.area - grid::boundary_mean(u, BoundaryTag::Inner);
    let pi_drawdown = report.q / drawdown;
    let flux = grid::boundary_integral(&v, BoundaryTag::Inner);
    report.diagnostics.flux_relative_error = Some((flux - report.q).abs() / report.q.abs());
    report.diagnostics.energy_drawdown_difference =
        Some((report.pi_energy - pi_drawdown).abs() / report.pi_energy.abs());
    report.pi_drawdown = Some(pi_drawdown);
    Ok(report)
}

/// Radial reference solution on the annulus `r_w < r < R`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialOracle {
    pub r: Vec<f64>,
    pub u: Vec<f64>,
    pub speed: Vec<f64>,
    pub eta: Vec<f64>,
    pub q: f64,
    pub energy: f64,
    pub pi_energy: f64,
    pub pi_drawdown: f64,
}

const ORACLE_TOLERANCE: f64 = 1e-10;

/// Semi-analytic radial profile: `|v| = A(R²-r²)/(2r)`, `η = g(|v|)|v|`,
/// `u(r) = ∫_{r_w}^r η`.
pub fn radial_oracle(g: &GppcPolynomial, r_w: f64, r_outer: f64, a: f64, samples: usize) -> Result<RadialOracle> {
    if !(r_w > 0.0 && r_outer > r_w && r_outer.is_finite()) {
        return Err(Error::InvalidDomain(format!("need 0 < r_w < R, got r_w = {r_w}, R = {r_outer}")));
    }
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::Domain(format!("A = {a} must be positive")));
    }
    if samples < 2 {
        return Err(Error::Domain("radial oracle needs at least two samples".into()));
    }
    let speed_at = |r: f64| (a * (r_outer * r_outer - r * r) / (2.0 * r)).max(0.0);
    let eta_at = |r: f64| {
        let s = speed_at(r);
        g.eval_unchecked(s) * s
    };
    let step = (r_outer - r_w) / (samples - 1) as f64;
    let r: Vec<f64> = (0..samples).map(|k| if k == samples - 1 { r_outer } else { r_w + k as f64 * step }).collect();
    let piece_tol = ORACLE_TOLERANCE / samples as f64;
    let mut u = Vec::with_capacity(samples);
    u.push(0.0);
    for w in r.windows(2) {
        let last = *u.last().expect("nonempty");
        u.push(last + adaptive_simpson(eta_at, w[0], w[1], piece_tol)?);
    }
    let speed: Vec<f64> = r.iter().map(|&x| speed_at(x)).collect();
    let eta: Vec<f64> = r.iter().map(|&x| eta_at(x)).collect();

    let area = std::f64::consts::PI * (r_outer * r_outer - r_w * r_w);
    let q = a * area;
    let tau = std::f64::consts::TAU;
    let energy = tau
        * adaptive_simpson(
            |x| {
                let s = speed_at(x);
                g.eval_unchecked(s) * s * s * x
            },
            r_w,
            r_outer,
            ORACLE_TOLERANCE,
        )?;
    // ∫_U u dx = π ∫ (R² - r²) η dr after integrating by parts; u(r_w) = 0.
    let u_integral =
        0.5 * tau * adaptive_simpson(|x| (r_outer * r_outer - x * x) * eta_at(x), r_w, r_outer, ORACLE_TOLERANCE)?;
    if !(energy > 0.0) {
        return Err(Error::ZeroEnergy);
    }
    Ok(RadialOracle { r, u, speed, eta, q, energy, pi_energy: q * q / energy, pi_drawdown: q / (u_integral / area) })
}

impl RadialOracle {
    /// `u` at radius `r`, integrated directly.
    pub fn u_at(g: &GppcPolynomial, r_w: f64, r_outer: f64, a: f64, r: f64) -> Result<f64> {
        adaptive_simpson(
            |x| {
                let s = (a * (r_outer * r_outer - x * x) / (2.0 * x)).max(0.0);
                g.eval_unchecked(s) * s
            },
            r_w,
            r,
            ORACLE_TOLERANCE,
        )
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["r", "u", "v_abs", "eta"])?;
        for k in 0..self.r.len() {
            w.write_record([
                self.r[k].to_string(),
                self.u[k].to_string(),
                self.speed[k].to_string(),
                self.eta[k].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

/// Inputs of the Productivity Index pipeline.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub domain: Domain,
    pub g: GppcPolynomial,
    pub a: f64,
    /// Scaling factor; `None` uses half of `χ_max` of the direct solution.
    pub chi: Option<f64>,
    /// Well data on `Γ_i`; `None` means `φ = 0`.
    pub well_profile: Option<Vec<f64>>,
    pub controls: SolverControls,
}

/// `ξ = |∇̃ũ|` from steps 1–3, reusable for any momentum law.
#[derive(Debug, Clone)]
pub struct CachedXi {
    /// Lives on the unscaled domain `U`; node `k` of `D̃` maps to node `k` of `U`.
    pub xi: ScalarField,
    pub chi: f64,
    pub a: f64,
}

impl CachedXi {
    /// Steps 4–6: `τ = ξ/√(1+ξ²)`, `|v| = τ/χ`, then the energy form.
    pub fn productivity_index(&self, g: &GppcPolynomial) -> Result<PiReport> {
        let speed = self.speed();
        let v_max = speed.max_abs();
        if !(self.chi * v_max < 1.0) {
            let node = speed.values.iter().position(|s| *s == v_max).unwrap_or(0);
            return Err(Error::ChiOutOfRange { chi: self.chi, chi_max: 1.0 / v_max, node });
        }
        let mut report = energy_report(&speed, g, self.a)?;
        report.chi = Some(self.chi);
        Ok(report)
    }

    pub fn speed(&self) -> ScalarField {
        let chi = self.chi;
        self.xi.map("v_abs", |xi| xi / (1.0 + xi * xi).sqrt() / chi)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PipelineReport {
    pub chi: f64,
    pub chi_max: f64,
    /// Energy form from the CMC route.
    pub cmc: PiReport,
    /// Both forms from solving the PSS problem directly.
    pub direct: PiReport,
    /// `|PI_cmc - PI_direct| / PI_direct`, energy forms.
    pub relative_difference: f64,
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub report: PipelineReport,
    pub cached: CachedXi,
    pub u: ScalarField,
    pub u_tilde: ScalarField,
}

/// Productivity Index through the CMC graph on `χU`, checked against the
/// direct PSS solve.
pub fn pi_pipeline(cfg: &PipelineConfig) -> Result<PipelineOutput> {
    let psi = cfg.well_profile.clone().unwrap_or_else(|| vec![0.0; cfg.domain.nodes()[1]]);
    let pss = PssProblem::with_profile(cfg.domain, cfg.g.clone(), cfg.a, psi)?.with_controls(cfg.controls);
    let direct_sol = solver::solve_pss(&pss)?;
    let mut direct = productivity_index(&direct_sol.field, &cfg.g, cfg.a)?;
    direct.diagnostics.solver_residual = Some(direct_sol.residual);
    direct.diagnostics.solver_iterations = Some(direct_sol.history.len());
    let chi_max = transform::chi_max(&direct_sol.field, &cfg.g)?;
    let chi = cfg.chi.unwrap_or(0.5 * chi_max);
    direct.chi = Some(chi);

    // Step 1: D̃ = χU.
    let domain_tilde = cfg.domain.scaled(chi)?;
    let boundary = if cfg.well_profile.is_none() {
        vec![0.0; cfg.domain.nodes()[1]]
    } else {
        let lift = transform::lift_to_cmc(&direct_sol.field, &cfg.g, chi, &LiftOptions::default())?;
        lift.u_tilde.values[..cfg.domain.nodes()[1]].to_vec()
    };
    // Step 2: CMC graph with mean curvature A/2.
    let cmc = CmcProblem::new(domain_tilde, cfg.a, boundary)?.with_controls(cfg.controls);
    let cmc_sol = solver::solve_cmc(&cmc)?;
    // Step 3: ξ = |∇̃ũ|, carried back to the nodes of U.
    let xi_tilde = grid::gradient(&cmc_sol.field).norm("xi");
    let cached = CachedXi { xi: ScalarField::new(cfg.domain, "xi", xi_tilde.values)?, chi, a: cfg.a };
    // Steps 4-6.
    let mut report = cached.productivity_index(&cfg.g)?;
    report.diagnostics.solver_residual = Some(cmc_sol.residual);
    report.diagnostics.solver_iterations = Some(cmc_sol.history.len());

    let relative_difference = (report.pi_energy - direct.pi_energy).abs() / direct.pi_energy;
    Ok(PipelineOutput {
        report: PipelineReport { chi, chi_max, cmc: report, direct, relative_difference },
        cached,
        u: direct_sol.field,
        u_tilde: cmc_sol.field,
    })
}
