//! Pointwise differential geometry of graphs `z = u(x, y)` and of the
//! generalized graphs obtained from the modified velocities
//! `r̃_x = (χ, 0, μ u_x)`, `r̃_y = (0, χ, μ u_y)`.
//!
//! The Gauss map is oriented with a positive vertical component, so a
//! sphere cap opening downward has negative mean curvature and
//! `Δ_g u = 2H` holds with matching signs.

use serde::Serialize;

use crate::error::{Error, Result};

/// Default absolute tolerance on `μ_x u_y - μ_y u_x`.
pub const COMPATIBILITY_TOLERANCE: f64 = 1e-8;

/// Pointwise 2-jet of a graph function.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct GraphJet {
    pub u: f64,
    pub u_x: f64,
    pub u_y: f64,
    pub u_xx: f64,
    pub u_xy: f64,
    pub u_yy: f64,
}

impl GraphJet {
    pub fn is_finite(&self) -> bool {
        [self.u, self.u_x, self.u_y, self.u_xx, self.u_xy, self.u_yy].iter().all(|v| v.is_finite())
    }

    fn grad_sq(&self) -> f64 {
        self.u_x * self.u_x + self.u_y * self.u_y
    }
}

/// First and second fundamental forms, Gauss map and mean curvature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FundamentalForms {
    pub g11: f64,
    pub g12: f64,
    pub g22: f64,
    pub h11: f64,
    pub h12: f64,
    pub h22: f64,
    pub normal: [f64; 3],
    pub mean_curvature: f64,
}

impl FundamentalForms {
    fn assemble(g: [f64; 3], h: [f64; 3], normal: [f64; 3]) -> Self {
        let [g11, g12, g22] = g;
        let [h11, h12, h22] = h;
        let det = g11 * g22 - g12 * g12;
        let trace = (g22 * h11 - 2.0 * g12 * h12 + g11 * h22) / det;
        FundamentalForms { g11, g12, g22, h11, h12, h22, normal, mean_curvature: 0.5 * trace }
    }

    pub fn metric_det(&self) -> f64 {
        self.g11 * self.g22 - self.g12 * self.g12
    }

    /// Weingarten map `S = g⁻¹ h` as a row-major 2x2 matrix.
    pub fn shape_operator(&self) -> [[f64; 2]; 2] {
        let det = self.metric_det();
        let (i11, i12, i22) = (self.g22 / det, -self.g12 / det, self.g11 / det);
        [
            [i11 * self.h11 + i12 * self.h12, i11 * self.h12 + i12 * self.h22],
            [i12 * self.h11 + i22 * self.h12, i12 * self.h12 + i22 * self.h22],
        ]
    }
}

pub fn fundamental_forms(j: &GraphJet) -> FundamentalForms {
    let grad2 = j.grad_sq();
    let w = (1.0 + grad2).sqrt();
    let g = [1.0 + j.u_x * j.u_x, j.u_x * j.u_y, 1.0 + j.u_y * j.u_y];
    let h = [j.u_xx / w, j.u_xy / w, j.u_yy / w];
    let normal = [-j.u_x / w, -j.u_y / w, 1.0 / w];
    FundamentalForms::assemble(g, h, normal)
}

/// `(1/√det g) g^{ij} ∂_i ∂_j u` for the graph metric.
pub fn laplace_beltrami(j: &GraphJet) -> f64 {
    let g11 = 1.0 + j.u_x * j.u_x;
    let g12 = j.u_x * j.u_y;
    let g22 = 1.0 + j.u_y * j.u_y;
    let det = g11 * g22 - g12 * g12;
    let (i11, i12, i22) = (g22 / det, -g12 / det, g11 / det);
    (i11 * j.u_xx + 2.0 * i12 * j.u_xy + i22 * j.u_yy) / det.sqrt()
}

/// Graph jet together with the transformation parameters `χ`, `μ` and the
/// gradient of `μ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModifiedJet {
    pub jet: GraphJet,
    pub chi: f64,
    pub mu: f64,
    pub mu_x: f64,
    pub mu_y: f64,
}

impl ModifiedJet {
    /// `μ_x u_y - μ_y u_x`; zero when `(r̃_x)_y = (r̃_y)_x`.
    pub fn compatibility_residual(&self) -> f64 {
        self.mu_x * self.jet.u_y - self.mu_y * self.jet.u_x
    }

    /// Modified velocity vectors `(r̃_x, r̃_y)`.
    pub fn velocities(&self) -> ([f64; 3], [f64; 3]) {
        ([self.chi, 0.0, self.mu * self.jet.u_x], [0.0, self.chi, self.mu * self.jet.u_y])
    }

    /// Closed-form `Δ_g̃ ũ` of the generalized graph, written out term by term.
    pub fn laplace_beltrami_closed_form(&self) -> f64 {
        let j = &self.jet;
        let (chi, mu) = (self.chi, self.mu);
        let chi2 = chi * chi;
        let mu2 = mu * mu;
        let w3 = (chi2 + mu2 * j.grad_sq()).powf(1.5);
        let second = mu * (chi2 + mu2 * j.u_y * j.u_y) * j.u_xx - 2.0 * mu * mu2 * j.u_x * j.u_y * j.u_xy
            + mu * (chi2 + mu2 * j.u_x * j.u_x) * j.u_yy;
        second / (chi * w3) + chi * (j.u_x * self.mu_x + j.u_y * self.mu_y) / w3
    }
}

/// Fundamental forms of the generalized graph with velocities `r̃_x, r̃_y`.
pub fn modified_forms(m: &ModifiedJet) -> Result<FundamentalForms> {
    modified_forms_with_tolerance(m, COMPATIBILITY_TOLERANCE)
}

pub fn modified_forms_with_tolerance(m: &ModifiedJet, tolerance: f64) -> Result<FundamentalForms> {
    if !(m.chi > 0.0) || !m.chi.is_finite() {
        return Err(Error::Domain(format!("chi = {} must be positive", m.chi)));
    }
    let residual = m.compatibility_residual();
    if !(residual.abs() <= tolerance) {
        return Err(Error::Compatibility { residual: residual.abs(), tolerance });
    }
    let j = &m.jet;
    let (chi, mu) = (m.chi, m.mu);
    let chi2 = chi * chi;
    let mu2 = mu * mu;
    let w = (chi2 + mu2 * j.grad_sq()).sqrt();
    let g = [chi2 + mu2 * (j.u_x * j.u_x), mu2 * (j.u_x * j.u_y), chi2 + mu2 * (j.u_y * j.u_y)];
    // The two expressions for h̃_12 agree under compatibility; average them.
    let h12 = 0.5 * ((mu * j.u_xy + j.u_x * m.mu_y) + (mu * j.u_xy + j.u_y * m.mu_x));
    let h = [chi * (mu * j.u_xx + j.u_x * m.mu_x) / w, chi * h12 / w, chi * (mu * j.u_yy + j.u_y * m.mu_y) / w];
    let normal = [-mu * j.u_x / w, -mu * j.u_y / w, chi / w];
    Ok(FundamentalForms::assemble(g, h, normal))
}
