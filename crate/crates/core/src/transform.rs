//! Explicit map between pseudo-steady-state profiles and CMC graphs.
//!
//! Given a profile `u` with `∇·(K(|∇u|)∇u) = -A` whose level curves are also
//! level curves of `|∇u|`, the graph `ũ` on the scaled domain
//! `D̃ = χ D` with
//!
//! ```text
//!   ∇̃ũ = μ ∇u,     μ = -χ K(|∇u|) / √(1 - χ² K(|∇u|)² |∇u|²),     0 < χ < 1/|v|_max
//! ```
//!
//! solves `∇̃·(∇̃ũ / √(1 + |∇̃ũ|²)) = A`. Conversely, with `ξ = |∇̃ũ|` and
//! `τ = ξ/√(1+ξ²)`, the flow speed is `|v| = τ/χ`, the pressure gradient
//! magnitude is `η = g(|v|)|v|`, and `∇u = -η ∇̃ũ / ξ`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gppc::GppcPolynomial;
use crate::grid::{self, Domain, ScalarField, VectorField};
use crate::solver::{self, Mobility};

/// Default tolerance on the normalized level-curve compatibility residual.
pub const COMPATIBILITY_TOLERANCE: f64 = 1e-6;

/// Max over interior nodes of
/// `|(u_x u_xy + u_y u_yy) u_x - (u_x u_xx + u_y u_xy) u_y| / (1 + |∇u|³ |D²u|)`.
///
/// Zero exactly when `u` and `|∇u|` share level curves.
pub fn check_compatibility(u: &ScalarField) -> f64 {
    let d = u.domain;
    let grad = grid::gradient(u);
    let (uxx, uxy, uyy) = grid::hessian(u);
    let [n1, n2] = d.nodes();
    let mut worst = 0.0_f64;
    for k in 0..d.len() {
        let (i, j) = d.split(k);
        if i == 0 || i == n1 - 1 || (!d.is_polar() && (j == 0 || j == n2 - 1)) {
            continue;
        }
        let (ux, uy) = (grad.x[k], grad.y[k]);
        let lhs = (ux * uxy[k] + uy * uyy[k]) * ux;
        let rhs = (ux * uxx[k] + uy * uxy[k]) * uy;
        let grad_norm = ux.hypot(uy);
        let hess_norm = (uxx[k] * uxx[k] + 2.0 * uxy[k] * uxy[k] + uyy[k] * uyy[k]).sqrt();
        worst = worst.max((lhs - rhs).abs() / (1.0 + grad_norm.powi(3) * hess_norm));
    }
    worst
}

/// `1 / max |K(|∇u|) ∇u|`.
pub fn chi_max(u: &ScalarField, g: &GppcPolynomial) -> Result<f64> {
    let v = solver::flux_field(u, Mobility::Forchheimer(g))?;
    let v_max = v.norm("speed").max_abs();
    if v_max == 0.0 {
        return Err(Error::DegenerateGradient);
    }
    Ok(1.0 / v_max)
}

/// `μ(χ, η)` for a single gradient magnitude; `None` when `χ K(η) η >= 1`.
pub fn mu_value(g: &GppcPolynomial, chi: f64, eta: f64) -> Result<Option<f64>> {
    let k = g.big_k(eta)?;
    let tau = chi * k * eta;
    if tau >= 1.0 {
        return Ok(None);
    }
    Ok(Some(-chi * k / (1.0 - tau * tau).sqrt()))
}

fn check_chi(chi: f64) -> Result<()> {
    if chi > 0.0 && chi.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("chi = {chi} must be positive")))
    }
}

/// Transformation function `μ` at every node.
pub fn mu_field(u: &ScalarField, g: &GppcPolynomial, chi: f64) -> Result<ScalarField> {
    check_chi(chi)?;
    let eta = grid::gradient(u).norm("eta");
    let mut values = Vec::with_capacity(eta.values.len());
    for (node, &e) in eta.values.iter().enumerate() {
        match mu_value(g, chi, e)? {
            Some(mu) => values.push(mu),
            None => return Err(Error::ChiOutOfRange { chi, chi_max: chi_max(u, g).unwrap_or(f64::INFINITY), node }),
        }
    }
    ScalarField::new(u.domain, "mu", values)
}

#[derive(Debug, Clone)]
pub struct LiftOptions {
    /// Anchor node with `ũ = 0`; defaults to the first `Γ_i` node.
    pub base_node: Option<usize>,
    pub compatibility_tolerance: f64,
    /// PSS constant of `u`, used only to report the CMC residual.
    pub pss_constant: Option<f64>,
}

impl Default for LiftOptions {
    fn default() -> Self {
        LiftOptions { base_node: None, compatibility_tolerance: COMPATIBILITY_TOLERANCE, pss_constant: None }
    }
}

/// Diagnostics of a lift; serialized as the transform report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransformReport {
    pub chi: f64,
    pub chi_max: f64,
    pub compatibility_residual: f64,
    /// Largest circulation of `∇̃ũ` around a grid cell.
    pub curl_diagnostic: f64,
    /// Largest disagreement between the two staircase integration orders.
    pub path_discrepancy: f64,
    pub xi_max: f64,
    /// Max `|ξ - χKη/√(1-(χKη)²)|` over nodes.
    pub tau_identity_error: f64,
    /// Max pointwise `|∇̃·(∇̃ũ/√(1+|∇̃ũ|²)) - A|` off `Γ̃_i`, when `A` is known.
    pub cmc_residual: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Lift {
    pub u_tilde: ScalarField,
    pub domain_tilde: Domain,
    /// `∇̃ũ = μ∇u` at every node of `D̃`.
    pub grad_tilde: VectorField,
    pub mu: ScalarField,
    pub report: TransformReport,
}

/// Lifts a compatible profile to the graph `ũ` on `D̃ = χ D`.
///
/// `ũ` is reconstructed by trapezoidal staircase integration of `∇̃ũ`,
/// first along the second grid axis through the base node, then along the
/// first axis.
pub fn lift_to_cmc(u: &ScalarField, g: &GppcPolynomial, chi: f64, opts: &LiftOptions) -> Result<Lift> {
    check_chi(chi)?;
    let d = u.domain;
    let compatibility = check_compatibility(u);
    if !(compatibility <= opts.compatibility_tolerance) {
        return Err(Error::Compatibility { residual: compatibility, tolerance: opts.compatibility_tolerance });
    }
    let chi_max = chi_max(u, g)?;
    let grad = grid::gradient(u);
    let mut mu = Vec::with_capacity(d.len());
    let mut tau_identity_error = 0.0_f64;
    let mut xi_max = 0.0_f64;
    let (mut gx, mut gy) = (Vec::with_capacity(d.len()), Vec::with_capacity(d.len()));
    for k in 0..d.len() {
        let eta = grad.x[k].hypot(grad.y[k]);
        let m = mu_value(g, chi, eta)?.ok_or(Error::ChiOutOfRange { chi, chi_max, node: k })?;
        mu.push(m);
        gx.push(m * grad.x[k]);
        gy.push(m * grad.y[k]);
        let xi = gx[k].hypot(gy[k]);
        let tau = chi * g.big_k(eta)? * eta;
        tau_identity_error = tau_identity_error.max((xi - tau / (1.0 - tau * tau).sqrt()).abs());
        xi_max = xi_max.max(xi);
    }
    let domain_tilde = d.scaled(chi)?;
    let grad_tilde = VectorField::new(domain_tilde, gx, gy)?;
    let base = opts.base_node.unwrap_or(0);
    if base >= d.len() {
        return Err(Error::Domain(format!("base node {base} outside the grid")));
    }
    let (w1, w2) = logical_components(&grad_tilde);
    let axis2_first = staircase(&domain_tilde, &w1, &w2, base, true);
    let axis1_first = staircase(&domain_tilde, &w1, &w2, base, false);
    let path_discrepancy = axis2_first.iter().zip(&axis1_first).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
    let curl_diagnostic = max_circulation(&domain_tilde, &w1, &w2);
    let u_tilde = ScalarField::new(domain_tilde, "u_tilde", axis2_first)?;

    let cmc_residual = match opts.pss_constant {
        Some(a) => {
            let r = solver::pointwise_residual(&u_tilde, Mobility::Cmc, -a)?;
            let n2 = domain_tilde.nodes()[1];
            Some(r.iter().skip(n2).fold(0.0_f64, |m, v| m.max(v.abs())))
        }
        None => None,
    };
    Ok(Lift {
        u_tilde,
        domain_tilde,
        grad_tilde,
        mu: ScalarField::new(d, "mu", mu)?,
        report: TransformReport {
            chi,
            chi_max,
            compatibility_residual: compatibility,
            curl_diagnostic,
            path_discrepancy,
            xi_max,
            tau_identity_error,
            cmc_residual,
        },
    })
}

/// Components of a Cartesian vector field along the logical grid
/// directions, scaled by the metric: `(w·e_1, h_2 w·e_2)` so that
/// `dũ = w_1 dq_1 + w_2 dq_2`.
fn logical_components(w: &VectorField) -> (Vec<f64>, Vec<f64>) {
    let d = w.domain;
    if !d.is_polar() {
        return (w.x.clone(), w.y.clone());
    }
    (0..d.len())
        .map(|k| {
            let (i, j) = d.split(k);
            let r = d.coord1(i);
            let (s, c) = d.coord2(j).sin_cos();
            (c * w.x[k] + s * w.y[k], r * (-s * w.x[k] + c * w.y[k]))
        })
        .unzip()
}

fn staircase(d: &Domain, w1: &[f64], w2: &[f64], base: usize, axis2_first: bool) -> Vec<f64> {
    let [n1, n2] = d.nodes();
    let (h1, h2) = d.spacing();
    let (i0, j0) = d.split(base);
    // Cumulative trapezoid sums along a row (axis 2) or a column (axis 1) from the base index.
    let along2 = |i: usize| -> Vec<f64> {
        let mut out = vec![0.0; n2];
        for j in (j0 + 1)..n2 {
            let (a, b) = (d.index(i, j - 1), d.index(i, j));
            out[j] = out[j - 1] + 0.5 * h2 * (w2[a] + w2[b]);
        }
        for j in (0..j0).rev() {
            let (a, b) = (d.index(i, j), d.index(i, j + 1));
            out[j] = out[j + 1] - 0.5 * h2 * (w2[a] + w2[b]);
        }
        out
    };
    let along1 = |j: usize| -> Vec<f64> {
        let mut out = vec![0.0; n1];
        for i in (i0 + 1)..n1 {
            let (a, b) = (d.index(i - 1, j), d.index(i, j));
            out[i] = out[i - 1] + 0.5 * h1 * (w1[a] + w1[b]);
        }
        for i in (0..i0).rev() {
            let (a, b) = (d.index(i, j), d.index(i + 1, j));
            out[i] = out[i + 1] - 0.5 * h1 * (w1[a] + w1[b]);
        }
        out
    };
    let mut u = vec![0.0; d.len()];
    if axis2_first {
        let row = along2(i0);
        for (j, &start) in row.iter().enumerate() {
            for (i, v) in along1(j).into_iter().enumerate() {
                u[d.index(i, j)] = start + v;
            }
        }
    } else {
        let col = along1(j0);
        for (i, &start) in col.iter().enumerate() {
            for (j, v) in along2(i).into_iter().enumerate() {
                u[d.index(i, j)] = start + v;
            }
        }
    }
    u
}

fn max_circulation(d: &Domain, w1: &[f64], w2: &[f64]) -> f64 {
    let [n1, n2] = d.nodes();
    let (h1, h2) = d.spacing();
    let cols = if d.periodic2() { n2 } else { n2 - 1 };
    let mut worst = 0.0_f64;
    for i in 0..n1 - 1 {
        for j in 0..cols {
            let jn = (j + 1) % n2;
            let (a, b, c, e) = (d.index(i, j), d.index(i + 1, j), d.index(i + 1, jn), d.index(i, jn));
            let circulation = 0.5 * h1 * (w1[a] + w1[b]) + 0.5 * h2 * (w2[b] + w2[c])
                - 0.5 * h1 * (w1[e] + w1[c])
                - 0.5 * h2 * (w2[a] + w2[e]);
            worst = worst.max(circulation.abs());
        }
    }
    worst
}

/// Forchheimer quantities recovered from a CMC gradient field.
#[derive(Debug, Clone)]
pub struct Recovered {
    /// `τ = ξ/√(1+ξ²)`.
    pub tau: ScalarField,
    /// `|v| = τ/χ`.
    pub speed: ScalarField,
    /// `η = g(|v|)|v| = |∇u|`.
    pub eta: ScalarField,
    /// `∇u = -η ∇̃ũ/ξ`, on the unscaled domain.
    pub grad_u: VectorField,
}

/// Pointwise inverse map `ξ ↦ (τ, |v|, η)`.
pub fn xi_to_eta(g: &GppcPolynomial, chi: f64, xi: f64) -> Result<(f64, f64, f64)> {
    if !(xi >= 0.0) || !xi.is_finite() {
        return Err(Error::Domain(format!("xi = {xi} must be finite and nonnegative")));
    }
    let tau = xi / (1.0 + xi * xi).sqrt();
    let speed = tau / chi;
    let eta = g.eval(speed)? * speed;
    Ok((tau, speed, eta))
}

/// Recovers `η`, `|v|` and `∇u` from `∇̃ũ` given on the scaled grid.
pub fn recover_forchheimer(grad_tilde: &VectorField, g: &GppcPolynomial, chi: f64) -> Result<Recovered> {
    check_chi(chi)?;
    let dt = grad_tilde.domain;
    let d = dt.scaled(1.0 / chi)?;
    let n = dt.len();
    let (mut tau, mut speed, mut eta) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    let (mut gx, mut gy) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for k in 0..n {
        let (wx, wy) = (grad_tilde.x[k], grad_tilde.y[k]);
        let xi = wx.hypot(wy);
        let (t, s, e) = xi_to_eta(g, chi, xi)?;
        tau.push(t);
        speed.push(s);
        eta.push(e);
        if xi == 0.0 {
            gx.push(0.0);
            gy.push(0.0);
        } else {
            gx.push(-e * wx / xi);
            gy.push(-e * wy / xi);
        }
    }
    Ok(Recovered {
        tau: ScalarField::new(d, "tau", tau)?,
        speed: ScalarField::new(d, "v_abs", speed)?,
        eta: ScalarField::new(d, "eta", eta)?,
        grad_u: VectorField::new(d, gx, gy)?,
    })
}

/// [`recover_forchheimer`] with `∇̃ũ` taken from the discrete gradient of `ũ`.
pub fn recover_from_graph(u_tilde: &ScalarField, g: &GppcPolynomial, chi: f64) -> Result<Recovered> {
    recover_forchheimer(&grid::gradient(u_tilde), g, chi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn darcy() -> GppcPolynomial {
        GppcPolynomial::darcy(1.0).unwrap()
    }

    fn radial_darcy(n_r: usize, n_t: usize) -> ScalarField {
        let d = Domain::annulus(1.0, 2.0, n_r, n_t).unwrap();
        ScalarField::from_fn(d, "u", |x, y| {
            let r = x.hypot(y);
            2.0 * r.ln() - (r * r - 1.0) / 4.0
        })
    }

    #[test]
    fn linear_field_is_compatible() {
        let d = Domain::rectangle((0.0, 1.0), (0.0, 1.0), 8, 8).unwrap();
        assert_eq!(check_compatibility(&ScalarField::from_fn(d, "u", |x, _| x)), 0.0);
    }

    #[test]
    fn anisotropic_paraboloid_is_incompatible() {
        let d = Domain::rectangle((-1.0, 1.0), (-1.0, 1.0), 40, 40).unwrap();
        let u = ScalarField::from_fn(d, "u", |x, y| x * x + 2.0 * y * y);
        assert!(check_compatibility(&u) > 0.1);
    }

    #[test]
    fn radial_field_is_compatible() {
        let u = radial_darcy(32, 16);
        assert!(check_compatibility(&u) < 1e-12);
    }

    #[test]
    fn mu_examples() {
        let mu = mu_value(&darcy(), 0.5, 1.5).unwrap().unwrap();
        assert!((mu + 0.5 / (1.0_f64 - 0.5625).sqrt()).abs() < 1e-15);
        assert!((mu + 0.7559).abs() < 1e-4);
        assert_eq!(mu_value(&darcy(), 0.25, 0.0).unwrap(), Some(-0.25));
        assert_eq!(mu_value(&darcy(), 1.0, 1.0).unwrap(), None);
        let small = mu_value(&darcy(), 1e-9, 1.5).unwrap().unwrap();
        assert!(small < 0.0 && small > -1.1e-9);
    }

    #[test]
    fn chi_max_degenerate_field() {
        let d = Domain::annulus(1.0, 2.0, 8, 8).unwrap();
        let u = ScalarField::from_fn(d, "u", |_, _| 3.0);
        assert!(matches!(chi_max(&u, &darcy()), Err(Error::DegenerateGradient)));
    }

    #[test]
    fn mu_field_rejects_large_chi() {
        let u = radial_darcy(32, 8);
        let cm = chi_max(&u, &darcy()).unwrap();
        assert!((cm - 2.0 / 3.0).abs() < 1e-3);
        match mu_field(&u, &darcy(), 1.01 * cm) {
            Err(Error::ChiOutOfRange { node, .. }) => assert_eq!(u.domain.split(node).0, 0),
            other => panic!("expected chi error, got {other:?}"),
        }
        assert!(mu_field(&u, &darcy(), 0.5 * cm).unwrap().values.iter().all(|m| *m < 0.0));
    }

    #[test]
    fn lift_of_constant_field() {
        let d = Domain::annulus(1.0, 2.0, 8, 8).unwrap();
        let u = ScalarField::from_fn(d, "u", |_, _| 2.0);
        let opts = LiftOptions { pss_constant: Some(0.0), ..Default::default() };
        // chi_max is unbounded for a constant field.
        assert!(matches!(lift_to_cmc(&u, &darcy(), 0.5, &opts), Err(Error::DegenerateGradient)));
    }

    #[test]
    fn lift_refuses_incompatible_fields() {
        let d = Domain::rectangle((-1.0, 1.0), (-1.0, 1.0), 20, 20).unwrap();
        let u = ScalarField::from_fn(d, "u", |x, y| 0.01 * (x * x + 2.0 * y * y));
        let r = lift_to_cmc(&u, &darcy(), 0.1, &LiftOptions::default());
        assert!(matches!(r, Err(Error::Compatibility { .. })));
    }

    #[test]
    fn lift_of_linear_field_on_rectangle() {
        let d = Domain::rectangle((0.0, 1.0), (0.0, 2.0), 10, 10).unwrap();
        let u = ScalarField::from_fn(d, "u", |x, y| 0.3 * x + 0.4 * y);
        let lift = lift_to_cmc(&u, &darcy(), 1.0, &LiftOptions::default()).unwrap();
        // |v| = 0.5, mu = -1/sqrt(1 - 0.25)
        let mu = -1.0 / 0.75_f64.sqrt();
        for k in 0..d.len() {
            let (x, y) = d.scaled(1.0).unwrap().position(d.split(k).0, d.split(k).1);
            assert!((lift.u_tilde.values[k] - mu * (0.3 * x + 0.4 * y)).abs() < 1e-12);
        }
        assert!(lift.report.path_discrepancy < 1e-12);
    }

    #[test]
    fn lift_example_values() {
        let u = radial_darcy(64, 16);
        let lift = lift_to_cmc(&u, &darcy(), 0.5, &LiftOptions::default()).unwrap();
        let k = u.domain.index(0, 0);
        let xi = lift.grad_tilde.x[k].hypot(lift.grad_tilde.y[k]);
        // tau = 0.75 at the well, up to the one-sided derivative error.
        assert!((xi - 0.75 / (1.0_f64 - 0.5625).sqrt()).abs() < 1e-3);
        assert!(lift.report.tau_identity_error < 1e-12);
        assert!(lift.report.path_discrepancy < 1e-6);
        assert_eq!(lift.domain_tilde, u.domain.scaled(0.5).unwrap());
    }

    #[test]
    fn inverse_examples() {
        let g = darcy();
        assert_eq!(xi_to_eta(&g, 0.5, 0.0).unwrap(), (0.0, 0.0, 0.0));
        let xi = 0.75 / (1.0_f64 - 0.5625).sqrt();
        let (tau, speed, eta) = xi_to_eta(&g, 0.5, xi).unwrap();
        assert!((tau - 0.75).abs() < 1e-14);
        assert!((speed - 1.5).abs() < 1e-14);
        assert!((eta - 1.5).abs() < 1e-14);
        let (tau, speed, _) = xi_to_eta(&g, 0.5, 1e6).unwrap();
        assert!(tau < 1.0 && 1.0 - tau < 1e-11);
        assert!((speed - 2.0).abs() < 1e-10);
        assert!(xi_to_eta(&g, 0.5, f64::NAN).is_err());
    }

    #[test]
    fn inverse_handles_rest_state() {
        let d = Domain::annulus(0.5, 1.0, 4, 6).unwrap();
        let zero = VectorField::new(d, vec![0.0; d.len()], vec![0.0; d.len()]).unwrap();
        let rec = recover_forchheimer(&zero, &darcy(), 0.5).unwrap();
        assert!(rec.grad_u.x.iter().chain(&rec.grad_u.y).all(|v| *v == 0.0));
        assert_eq!(rec.eta.domain, Domain::annulus(1.0, 2.0, 4, 6).unwrap());
    }
}
