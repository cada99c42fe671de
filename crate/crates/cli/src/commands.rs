use std::path::{Path, PathBuf};

use forch_core::engineering::{self, PipelineConfig};
use forch_core::grid::{self, Shape};
use forch_core::io::{self, FieldMetadata};
use forch_core::solver::{self, CmcProblem, IterationRecord, PssProblem, Solution};
use forch_core::transform::{self, LiftOptions};
use forch_core::{Error, ScalarField};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{RunConfig, WellData};
use crate::error::CliError;

pub struct Context {
    pub cfg: RunConfig,
    pub out: PathBuf,
    pub quiet: bool,
    pub command: &'static str,
    pub config_path: PathBuf,
}

impl Context {
    fn path(&self, file: &str) -> PathBuf {
        self.out.join(file)
    }

    fn say(&self, line: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", line.as_ref());
        }
    }

    fn write_json<T: Serialize>(&self, file: &str, value: &T) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(value).map_err(Error::from)?;
        let path = self.path(file);
        std::fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))
    }

    fn write_field(&self, file: &str, f: &ScalarField, meta: &mut Vec<FieldMetadata>) -> Result<(), CliError> {
        io::save_scalar_csv(f, &self.path(file)).map_err(|e| output_error(&self.path(file), e))?;
        meta.push(FieldMetadata::for_field(f));
        Ok(())
    }

    fn write_log(&self, file: &str, history: &[IterationRecord]) -> Result<(), CliError> {
        let mut text = String::with_capacity(96 * history.len());
        for r in history {
            text.push_str(&r.to_json_line());
            text.push('\n');
        }
        let path = self.path(file);
        std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))
    }

    /// Sidecar holding everything that may differ between identical runs.
    fn write_metadata(&self, fields: Vec<FieldMetadata>) -> Result<(), CliError> {
        let created = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map_or(0, |d| d.as_secs());
        self.write_json(
            "metadata.json",
            &json!({
                "command": self.command,
                "version": env!("CARGO_PKG_VERSION"),
                "config": self.config_path,
                "domain": self.cfg.domain,
                "a": self.cfg.a(),
                "created_unix_seconds": created,
                "fields": fields,
            }),
        )
    }

    fn solve_pss(&self) -> Result<Solution, CliError> {
        let cfg = &self.cfg;
        let prob = PssProblem::with_profile(cfg.domain, cfg.g.clone(), cfg.a(), cfg.well_values())?
            .with_controls(cfg.controls);
        solver::solve_pss(&prob).map_err(|e| {
            if let Error::NotConverged { history } = &e {
                let _ = self.write_log("solver_log.jsonl", history);
            }
            e.into()
        })
    }

    /// Profile to transform: the configured input field, or a fresh solve.
    fn profile(&self) -> Result<(ScalarField, bool), CliError> {
        match &self.cfg.input_field {
            Some(p) => Ok((io::load_scalar_csv(self.cfg.domain, "u", p)?, false)),
            None => Ok((self.solve_pss()?.field, true)),
        }
    }
}

fn output_error(path: &Path, e: Error) -> CliError {
    match e {
        Error::Io(io) => CliError::io(path, io),
        other => other.into(),
    }
}

pub fn pss(ctx: &Context) -> Result<bool, CliError> {
    let a = ctx.cfg.a();
    let sol = ctx.solve_pss()?;
    let mut meta = Vec::new();
    ctx.write_field("u.csv", &sol.field, &mut meta)?;
    let v = engineering::velocity(&sol.field, &ctx.cfg.g)?;
    io::save_vector_csv(&v, &ctx.path("v.csv")).map_err(|e| output_error(&ctx.path("v.csv"), e))?;
    ctx.write_log("solver_log.jsonl", &sol.history)?;
    ctx.write_metadata(meta)?;
    match engineering::productivity_index(&sol.field, &ctx.cfg.g, a) {
        Ok(mut pi) => {
            pi.diagnostics.solver_residual = Some(sol.residual);
            pi.diagnostics.solver_iterations = Some(sol.history.len());
            ctx.write_json("pi_report.json", &pi)?;
            ctx.say(format!(
                "pss: {} iterations, Q = {:.6}, PI_energy = {:.6}, PI_drawdown = {:.6}",
                sol.history.len(),
                pi.q,
                pi.pi_energy,
                pi.pi_drawdown.unwrap_or(f64::NAN)
            ));
            Ok(true)
        }
        Err(e) => {
            ctx.write_json("pi_report.json", &json!({ "a": a, "error": e.to_string() }))?;
            Err(e.into())
        }
    }
}

pub fn cmc(ctx: &Context) -> Result<bool, CliError> {
    let cfg = &ctx.cfg;
    let prob = CmcProblem::new(cfg.domain, cfg.a(), cfg.well_values())?.with_controls(cfg.controls);
    let sol = match solver::solve_cmc(&prob) {
        Ok(s) => s,
        Err(e) => {
            if let Error::CmcNonexistence { history, .. } | Error::NotConverged { history } = &e {
                ctx.write_log("solver_log.jsonl", history)?;
            }
            return Err(e.into());
        }
    };
    let mut meta = Vec::new();
    ctx.write_field("u_tilde.csv", &sol.field, &mut meta)?;
    ctx.write_log("solver_log.jsonl", &sol.history)?;
    let xi_max = grid::gradient(&sol.field).norm("xi").max_abs();
    ctx.write_json(
        "cmc_report.json",
        &json!({
            "a": prob.a,
            "mean_curvature": prob.mean_curvature(),
            "iterations": sol.history.len(),
            "residual": sol.residual,
            "inner_flux": sol.inner_flux,
            "xi_max": xi_max,
        }),
    )?;
    ctx.write_metadata(meta)?;
    ctx.say(format!("cmc: {} iterations, xi_max = {xi_max:.6}", sol.history.len()));
    Ok(true)
}

pub fn transform(ctx: &Context) -> Result<bool, CliError> {
    let cfg = &ctx.cfg;
    let (u, solved) = ctx.profile()?;
    let chi = match cfg.chi {
        Some(c) => c,
        None => 0.5 * transform::chi_max(&u, &cfg.g)?,
    };
    let opts = LiftOptions { pss_constant: Some(cfg.a()), ..Default::default() };
    let lift = transform::lift_to_cmc(&u, &cfg.g, chi, &opts)?;
    let back = transform::recover_forchheimer(&lift.grad_tilde, &cfg.g, chi)?;
    let eta = grid::gradient(&u).norm("eta");
    let cutoff = 0.01 * eta.max_abs();
    let round_trip = eta
        .values
        .iter()
        .zip(&back.eta.values)
        .filter(|(e, _)| **e > cutoff)
        .fold(0.0_f64, |m, (e, r)| m.max((e - r).abs() / e));

    let mut meta = Vec::new();
    if solved {
        ctx.write_field("u.csv", &u, &mut meta)?;
    }
    ctx.write_field("u_tilde.csv", &lift.u_tilde, &mut meta)?;
    ctx.write_field("mu.csv", &lift.mu, &mut meta)?;
    ctx.write_field("eta_recovered.csv", &back.eta, &mut meta)?;
    let mut report = serde_json::to_value(lift.report).map_err(Error::from)?;
    report["round_trip_eta_error"] = json!(round_trip);
    ctx.write_json("transform_report.json", &report)?;
    ctx.write_metadata(meta)?;
    ctx.say(format!(
        "transform: chi = {chi:.6} (chi_max = {:.6}), xi_max = {:.6}, round trip error = {round_trip:.3e}",
        lift.report.chi_max, lift.report.xi_max
    ));
    Ok(true)
}

pub fn pi_pipeline(ctx: &Context) -> Result<bool, CliError> {
    let cfg = &ctx.cfg;
    let well_profile = match cfg.well {
        WellData::Zero => None,
        WellData::Table(_) => Some(cfg.well_values()),
    };
    let out = engineering::pi_pipeline(&PipelineConfig {
        domain: cfg.domain,
        g: cfg.g.clone(),
        a: cfg.a(),
        chi: cfg.chi,
        well_profile,
        controls: cfg.controls,
    })?;
    let mut meta = Vec::new();
    ctx.write_field("u.csv", &out.u, &mut meta)?;
    ctx.write_field("u_tilde.csv", &out.u_tilde, &mut meta)?;
    ctx.write_json("pipeline_report.json", &out.report)?;
    ctx.write_metadata(meta)?;
    let r = &out.report;
    ctx.say(format!(
        "pi-pipeline: chi = {:.6}, PI (CMC route) = {:.6}, PI (direct) = {:.6}, relative difference = {:.3e}",
        r.chi, r.cmc.pi_energy, r.direct.pi_energy, r.relative_difference
    ));
    Ok(true)
}

pub fn oracle(ctx: &Context) -> Result<bool, CliError> {
    let cfg = &ctx.cfg;
    let Shape::Annulus { r_inner, r_outer } = cfg.domain.shape else {
        return Err(CliError::config_message("$.domain.kind", "the radial oracle needs an annulus"));
    };
    if cfg.well != WellData::Zero {
        return Err(CliError::config_message("$.phi", "the radial oracle needs zero well data"));
    }
    let o = engineering::radial_oracle(&cfg.g, r_inner, r_outer, cfg.a(), cfg.domain.cells[0] + 1)?;
    let path = ctx.path("oracle.csv");
    o.save_csv(&path).map_err(|e| output_error(&path, e))?;
    ctx.write_json(
        "oracle_report.json",
        &json!({
            "q": o.q,
            "energy": o.energy,
            "pi_energy": o.pi_energy,
            "pi_drawdown": o.pi_drawdown,
            "samples": o.r.len(),
        }),
    )?;
    ctx.write_metadata(Vec::new())?;
    ctx.say(format!(
        "oracle: u(R) = {:.6}, Q = {:.6}, PI = {:.6}",
        o.u.last().copied().unwrap_or(0.0),
        o.q,
        o.pi_energy
    ));
    Ok(true)
}

#[derive(Debug, Serialize)]
struct Check {
    name: &'static str,
    passed: bool,
    value: f64,
    tolerance: f64,
}

fn check(name: &'static str, value: f64, tolerance: f64) -> Check {
    Check { name, passed: value <= tolerance, value, tolerance }
}

/// Number of `ξ` samples per decade for the mobility checks.
const DECADE_SAMPLES: usize = 20;

pub fn verify(ctx: &Context) -> Result<bool, CliError> {
    let cfg = &ctx.cfg;
    let g = &cfg.g;
    let a = cfg.a();
    let mut checks = Vec::new();

    let mut worst_roundtrip = 0.0_f64;
    for k in 0..=60 {
        let s = 1e-3 * 10f64.powf(k as f64 / 10.0);
        let back = g.invert_sg(s * g.eval(s)?)?;
        worst_roundtrip = worst_roundtrip.max((back - s).abs() / s);
    }
    checks.push(check("gppc_inversion_round_trip", worst_roundtrip, 1e-10));

    let mut xi = vec![0.0];
    xi.extend((0..=9 * DECADE_SAMPLES).map(|k| 1e-3 * 10f64.powf(k as f64 / DECADE_SAMPLES as f64)));
    let k_values: Vec<f64> = xi.iter().map(|&x| g.big_k(x)).collect::<Result<_, _>>()?;
    let increases = k_values.windows(2).fold(0.0_f64, |m, w| m.max(w[1] - w[0]));
    checks.push(check("mobility_monotone", increases, 0.0));
    let bounds = g.k_bounds_witness(&xi)?;
    checks.push(check("mobility_bound_ratio", bounds.c1 / bounds.c0, 1e3));

    let sol = ctx.solve_pss()?;
    let q = a * cfg.domain.area();
    checks.push(check("conservative_flux_identity", (sol.inner_flux - q).abs() / q.abs(), 1e-6));
    let pi = engineering::productivity_index(&sol.field, g, a)?;
    checks.push(check("nodal_flux_identity", pi.diagnostics.flux_relative_error.unwrap_or(f64::NAN), 1e-3));
    if cfg.well == WellData::Zero {
        checks.push(check(
            "pi_energy_equals_drawdown",
            pi.diagnostics.energy_drawdown_difference.unwrap_or(f64::NAN),
            1e-3,
        ));
        if let Shape::Annulus { r_inner, r_outer } = cfg.domain.shape {
            let n1 = cfg.domain.cells[0];
            let o = engineering::radial_oracle(g, r_inner, r_outer, a, n1 + 1)?;
            let err = (0..cfg.domain.len())
                .map(|k| (sol.field.values[k] - o.u[cfg.domain.split(k).0]).abs())
                .fold(0.0_f64, f64::max);
            let h = (r_outer - r_inner) / n1 as f64;
            checks.push(check("radial_oracle_nodal_error", err, ORACLE_CONSTANT * h * h));
        }
    }

    let compat = transform::check_compatibility(&sol.field);
    let h = cfg.domain.max_spacing();
    checks.push(check("level_curve_compatibility", compat, 10.0 * h * h));
    if compat <= transform::COMPATIBILITY_TOLERANCE {
        let chi = match cfg.chi {
            Some(c) => c,
            None => 0.5 * transform::chi_max(&sol.field, g)?,
        };
        let lift = transform::lift_to_cmc(&sol.field, g, chi, &LiftOptions::default())?;
        checks.push(check("tau_identity", lift.report.tau_identity_error, 1e-8));
        let back = transform::recover_forchheimer(&lift.grad_tilde, g, chi)?;
        let eta = grid::gradient(&sol.field).norm("eta");
        let cutoff = 0.01 * eta.max_abs();
        let rt = eta
            .values
            .iter()
            .zip(&back.eta.values)
            .filter(|(e, _)| **e > cutoff)
            .fold(0.0_f64, |m, (e, r)| m.max((e - r).abs() / e));
        checks.push(check("transform_round_trip", rt, 1e-4));
    }

    let passed = checks.iter().all(|c| c.passed);
    for c in &checks {
        ctx.say(format!(
            "{} {}: {:.3e} (tolerance {:.1e})",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.tolerance
        ));
    }
    ctx.write_json("verify_report.json", &json!({ "passed": passed, "checks": checks }) as &Value)?;
    ctx.write_metadata(Vec::new())?;
    Ok(passed)
}

/// `C` in the `C·h²` bound on the radial nodal error.
const ORACLE_CONSTANT: f64 = 20.0;
