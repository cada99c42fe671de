//! Damped Picard iteration for the quasilinear problems
//!
//! ```text
//!   ∇·(K(|∇u|) ∇u) = -A   in U,   ∂u/∂N = 0 on Γ_e,   u = φ on Γ_i     (PSS profile)
//!   ∇·(∇ũ / √(1+|∇ũ|²)) = A                                           (CMC graph)
//! ```
//!
//! Each outer step freezes the mobility at cell faces, solves the resulting
//! symmetric positive definite finite-volume system by Jacobi-preconditioned
//! conjugate gradients and relaxes the update with a damping factor.

use serde::Serialize;

use crate::error::{Error, FailureKind, Result};
use crate::gppc::GppcPolynomial;
use crate::grid::{self, BoundaryTag, Domain, ScalarField, VectorField};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
#[serde(default)]
pub struct SolverControls {
    pub max_iterations: usize,
    /// Relaxation `θ ∈ (0, 1]` applied to each Picard update.
    pub damping: f64,
    /// Stop when the max nodal update is below `update_tolerance * (1 + max|u|)` ...
    pub update_tolerance: f64,
    /// ... and the L² residual of the PDE is below `residual_tolerance * max(1, |A|)`.
    pub residual_tolerance: f64,
    pub cg_tolerance: f64,
    pub cg_max_iterations: usize,
    /// Consecutive growth steps of `ξ_max` after which a CMC solve is declared divergent.
    pub growth_window: usize,
}

impl Default for SolverControls {
    fn default() -> Self {
        SolverControls {
            max_iterations: 2000,
            damping: 0.7,
            update_tolerance: 1e-9,
            residual_tolerance: 1e-8,
            cg_tolerance: 1e-12,
            cg_max_iterations: 20_000,
            growth_window: 50,
        }
    }
}

impl SolverControls {
    pub fn validate(&self) -> Result<()> {
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::Domain(format!("damping {} outside (0, 1]", self.damping)));
        }
        if self.max_iterations == 0 || self.cg_max_iterations == 0 {
            return Err(Error::Domain("iteration caps must be positive".into()));
        }
        if !(self.update_tolerance > 0.0 && self.residual_tolerance > 0.0 && self.cg_tolerance > 0.0) {
            return Err(Error::Domain("tolerances must be positive".into()));
        }
        Ok(())
    }
}

/// One line of the solver log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Max nodal change of the damped update.
    pub update: f64,
    /// L² residual of the nonlinear equation at the iterate the step started from.
    pub residual: f64,
    /// Largest face gradient magnitude.
    pub xi_max: f64,
    pub damping: f64,
    pub cg_iterations: usize,
}

impl IterationRecord {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("record serializes")
    }
}

/// Pseudo-steady-state profile problem.
#[derive(Debug, Clone)]
pub struct PssProblem {
    pub domain: Domain,
    pub g: GppcPolynomial,
    /// PSS constant: the pressure declines as `-A t`.
    pub a: f64,
    /// Dirichlet profile `φ` on the `Γ_i` nodes, with zero boundary mean.
    pub phi: Vec<f64>,
    /// Additive constant `B` of `p̄ = -A t + B + u`; carried along, never used by the solve.
    pub b: f64,
    pub controls: SolverControls,
}

impl PssProblem {
    /// Problem with `φ = 0`.
    pub fn new(domain: Domain, g: GppcPolynomial, a: f64) -> Result<Self> {
        let n = domain.nodes()[1];
        Self::with_profile(domain, g, a, vec![0.0; n])
    }

    /// Problem with well data `ψ` on `Γ_i`; `ψ` is split into its boundary
    /// mean (stored as `B`) and the zero-mean profile `φ`.
    pub fn with_profile(domain: Domain, g: GppcPolynomial, a: f64, psi: Vec<f64>) -> Result<Self> {
        if !a.is_finite() {
            return Err(Error::Domain(format!("A = {a} must be finite")));
        }
        let n = domain.nodes()[1];
        if psi.len() != n {
            return Err(Error::Shape { expected: n, got: psi.len() });
        }
        let b = inner_mean(&domain, &psi);
        let phi = psi.iter().map(|v| v - b).collect();
        Ok(PssProblem { domain, g, a, phi, b, controls: SolverControls::default() })
    }

    pub fn with_controls(mut self, controls: SolverControls) -> Self {
        self.controls = controls;
        self
    }

    fn validate(&self) -> Result<()> {
        self.controls.validate()?;
        if let Some(node) = self.phi.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { name: "phi".into(), node });
        }
        let scale = 1.0 + self.phi.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let mean = inner_mean(&self.domain, &self.phi);
        if mean.abs() > 1e-10 * scale {
            return Err(Error::Domain(format!("phi has nonzero boundary mean {mean:e}")));
        }
        Ok(())
    }
}

/// Constant-mean-curvature graph problem on a (scaled) domain.
#[derive(Debug, Clone)]
pub struct CmcProblem {
    pub domain: Domain,
    /// Right-hand side; the graph has mean curvature `A / 2`.
    pub a: f64,
    /// Dirichlet data for `ũ` on the `Γ̃_i` nodes.
    pub boundary: Vec<f64>,
    pub controls: SolverControls,
}

impl CmcProblem {
    pub fn new(domain: Domain, a: f64, boundary: Vec<f64>) -> Result<Self> {
        let n = domain.nodes()[1];
        if boundary.len() != n {
            return Err(Error::Shape { expected: n, got: boundary.len() });
        }
        if !a.is_finite() {
            return Err(Error::Domain(format!("A = {a} must be finite")));
        }
        if let Some(node) = boundary.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { name: "cmc boundary".into(), node });
        }
        Ok(CmcProblem { domain, a, boundary, controls: SolverControls::default() })
    }

    pub fn with_controls(mut self, controls: SolverControls) -> Self {
        self.controls = controls;
        self
    }

    /// Mean curvature of the sought graph.
    pub fn mean_curvature(&self) -> f64 {
        0.5 * self.a
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub field: ScalarField,
    pub history: Vec<IterationRecord>,
    /// Final L² residual of the discrete nonlinear equation.
    pub residual: f64,
    /// `∮_{Γ_i} (-K ∇u)·N dσ` from the conservative face fluxes.
    pub inner_flux: f64,
}

/// Mobility used at cell faces.
#[derive(Debug, Clone, Copy)]
pub enum Mobility<'a> {
    Forchheimer(&'a GppcPolynomial),
    /// `1 / √(1 + ξ²)`.
    Cmc,
}

impl Mobility<'_> {
    pub fn eval(&self, xi: f64) -> Result<f64> {
        let k = match self {
            Mobility::Forchheimer(g) => g.big_k(xi)?,
            Mobility::Cmc => 1.0 / (1.0 + xi * xi).sqrt(),
        };
        if !(k > 0.0) || !k.is_finite() {
            return Err(Error::Invariant(format!("mobility K({xi}) = {k} is not positive")));
        }
        Ok(k)
    }
}

pub fn solve_pss(prob: &PssProblem) -> Result<Solution> {
    prob.validate()?;
    let op = FluxOperator::new(prob.domain, Mobility::Forchheimer(&prob.g), prob.a);
    let mut sol = picard(&op, &prob.phi, &prob.controls, None)?;
    sol.field.name = "u".into();
    Ok(sol)
}

pub fn solve_cmc(prob: &CmcProblem) -> Result<Solution> {
    prob.controls.validate()?;
    let op = FluxOperator::new(prob.domain, Mobility::Cmc, -prob.a);
    let mut sol = picard(&op, &prob.boundary, &prob.controls, Some(prob.controls.growth_window))?;
    sol.field.name = "u_tilde".into();
    Ok(sol)
}

/// Nodal flux field `-K(|∇u|) ∇u`.
pub fn flux_field(u: &ScalarField, mobility: Mobility<'_>) -> Result<VectorField> {
    let grad = grid::gradient(u);
    let mut x = Vec::with_capacity(grad.x.len());
    let mut y = Vec::with_capacity(grad.y.len());
    for (gx, gy) in grad.x.iter().zip(&grad.y) {
        let k = mobility.eval(gx.hypot(*gy))?;
        x.push(-k * gx);
        y.push(-k * gy);
    }
    VectorField::new(u.domain, x, y)
}

/// Pointwise residual of `∇·(K ∇u) + source = 0` in flux form, at the
/// non-Dirichlet nodes (zero on `Γ_i`).
pub fn pointwise_residual(u: &ScalarField, mobility: Mobility<'_>, source: f64) -> Result<Vec<f64>> {
    let op = FluxOperator::new(u.domain, mobility, source);
    let faces = op.face_mobilities(&u.values)?;
    let r = op.residual(&faces, &u.values);
    let d = u.domain;
    Ok(r.iter()
        .enumerate()
        .map(|(k, v)| {
            let (i, j) = d.split(k);
            v / d.cell_area(i, j)
        })
        .collect())
}

fn inner_mean(d: &Domain, values: &[f64]) -> f64 {
    let mut f = ScalarField::zeros(*d, "boundary");
    for (j, v) in values.iter().enumerate() {
        f.values[d.index(0, j)] = *v;
    }
    grid::boundary_mean(&f, BoundaryTag::Inner)
}

struct FaceMobilities {
    /// Faces between `(i, j)` and `(i + 1, j)`, indexed by `i * n2 + j`.
    axis1: Vec<f64>,
    /// Faces between `(i, j)` and `(i, j + 1)`.
    axis2: Vec<f64>,
    xi_max: f64,
}

/// Finite-volume operator `-∇·(K ∇u)` with `Γ_i` Dirichlet rows and
/// natural (zero-flux) conditions elsewhere, plus the source `A`.
struct FluxOperator<'a> {
    domain: Domain,
    mobility: Mobility<'a>,
    /// `-∇·(K∇u) = source`.
    source: f64,
    area: Vec<f64>,
    t1: Vec<f64>,
    t2: Vec<f64>,
}

impl<'a> FluxOperator<'a> {
    fn new(domain: Domain, mobility: Mobility<'a>, source: f64) -> Self {
        let [n1, n2] = domain.nodes();
        let mut t1 = vec![0.0; n1 * n2];
        let mut t2 = vec![0.0; n1 * n2];
        for i in 0..n1 {
            for j in 0..n2 {
                let k = i * n2 + j;
                if i + 1 < n1 {
                    t1[k] = domain.face1_coef(i, j);
                }
                if domain.periodic2() || j + 1 < n2 {
                    t2[k] = domain.face2_coef(i, j);
                }
            }
        }
        FluxOperator { area: domain.weights(), domain, mobility, source, t1, t2 }
    }

    fn n2(&self) -> usize {
        self.domain.nodes()[1]
    }

    fn east(&self, i: usize, j: usize) -> usize {
        let n2 = self.n2();
        i * n2 + (j + 1) % n2
    }

    fn face_mobilities(&self, u: &[f64]) -> Result<FaceMobilities> {
        let d = &self.domain;
        let [n1, n2] = d.nodes();
        let (h1, h2) = d.spacing();
        let field = ScalarField { domain: *d, name: String::new(), units: String::new(), values: u.to_vec() };
        let (du1, du2) = grid::logical_gradient(&field);
        let polar = d.is_polar();
        let mut axis1 = vec![0.0; n1 * n2];
        let mut axis2 = vec![0.0; n1 * n2];
        let mut xi_max = 0.0_f64;
        for i in 0..n1 {
            let r = d.coord1(i);
            for j in 0..n2 {
                let k = i * n2 + j;
                if self.t1[k] != 0.0 {
                    let kn = k + n2;
                    let normal = (u[kn] - u[k]) / h1;
                    let metric = if polar { r + 0.5 * h1 } else { 1.0 };
                    let tangential = 0.5 * (du2[k] + du2[kn]) / metric;
                    let xi = normal.hypot(tangential);
                    xi_max = xi_max.max(xi);
                    axis1[k] = self.mobility.eval(xi)?;
                }
                if self.t2[k] != 0.0 && i > 0 {
                    let ke = self.east(i, j);
                    let metric = if polar { r } else { 1.0 };
                    let tangential = (u[ke] - u[k]) / (h2 * metric);
                    let normal = 0.5 * (du1[k] + du1[ke]);
                    let xi = normal.hypot(tangential);
                    xi_max = xi_max.max(xi);
                    axis2[k] = self.mobility.eval(xi)?;
                }
            }
        }
        Ok(FaceMobilities { axis1, axis2, xi_max })
    }

    /// `y = M x` on the unknown (non-`Γ_i`) nodes; Dirichlet rows are zero.
    fn apply(&self, faces: &FaceMobilities, x: &[f64], y: &mut [f64]) {
        let [n1, n2] = self.domain.nodes();
        y.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..n1 {
            for j in 0..n2 {
                let k = i * n2 + j;
                let c1 = self.t1[k] * faces.axis1[k];
                if c1 != 0.0 {
                    let kn = k + n2;
                    let flux = c1 * (x[k] - x[kn]);
                    if i > 0 {
                        y[k] += flux;
                    }
                    y[kn] -= flux;
                }
                let c2 = self.t2[k] * faces.axis2[k];
                if c2 != 0.0 {
                    let ke = self.east(i, j);
                    let flux = c2 * (x[k] - x[ke]);
                    y[k] += flux;
                    y[ke] -= flux;
                }
            }
        }
        for v in y.iter_mut().take(n2) {
            *v = 0.0;
        }
    }

    fn diagonal(&self, faces: &FaceMobilities) -> Vec<f64> {
        let [n1, n2] = self.domain.nodes();
        let mut diag = vec![0.0; n1 * n2];
        for i in 0..n1 {
            for j in 0..n2 {
                let k = i * n2 + j;
                let c1 = self.t1[k] * faces.axis1[k];
                diag[k] += c1;
                diag[k + n2 * usize::from(i + 1 < n1)] += c1;
                let c2 = self.t2[k] * faces.axis2[k];
                diag[k] += c2;
                diag[self.east(i, j)] += c2;
            }
        }
        diag
    }

    /// `b - M u` on the unknown nodes, where `b = source * area`.
    fn residual(&self, faces: &FaceMobilities, u: &[f64]) -> Vec<f64> {
        let mut mu = vec![0.0; u.len()];
        self.apply(faces, u, &mut mu);
        let n2 = self.n2();
        mu.iter().enumerate().map(|(k, m)| if k < n2 { 0.0 } else { self.source * self.area[k] - m }).collect()
    }

    /// L² norm of the pointwise residual.
    fn residual_norm(&self, faces: &FaceMobilities, u: &[f64]) -> f64 {
        let r = self.residual(faces, u);
        let sum: f64 = r.iter().zip(&self.area).map(|(r, a)| r * r / a).sum();
        (sum / self.domain.area()).sqrt()
    }

    /// `∮_{Γ_i} (-K∇u)·N`: face fluxes out of the first row plus the
    /// source carried by the `Γ_i` half cells.
    fn inner_flux(&self, faces: &FaceMobilities, u: &[f64]) -> f64 {
        let n2 = self.n2();
        (0..n2).map(|j| self.t1[j] * faces.axis1[j] * (u[j + n2] - u[j]) + self.source * self.area[j]).sum()
    }

    /// Solves `M z = rhs` with `z = dirichlet` on `Γ_i`, starting from `x0`.
    fn solve_linear(
        &self,
        faces: &FaceMobilities,
        x0: &[f64],
        dirichlet: &[f64],
        tol: f64,
        max_it: usize,
    ) -> Result<(Vec<f64>, usize)> {
        let n2 = self.n2();
        let len = x0.len();
        let mut x = x0.to_vec();
        x[..n2].copy_from_slice(dirichlet);
        let diag = self.diagonal(faces);
        let b: Vec<f64> = (0..len).map(|k| if k < n2 { 0.0 } else { self.source * self.area[k] }).collect();
        let mut ax = vec![0.0; len];
        self.apply(faces, &x, &mut ax);
        let mut r: Vec<f64> = (0..len).map(|k| if k < n2 { 0.0 } else { b[k] - ax[k] }).collect();
        let b_norm = dot(&b, &b).sqrt().max(dot(&r, &r).sqrt()).max(f64::MIN_POSITIVE);
        let precondition = |r: &[f64], z: &mut [f64]| {
            for k in 0..len {
                z[k] = if k < n2 { 0.0 } else { r[k] / diag[k] };
            }
        };
        let mut z = vec![0.0; len];
        precondition(&r, &mut z);
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        let mut ap = vec![0.0; len];
        for it in 0..max_it {
            if dot(&r, &r).sqrt() <= tol * b_norm {
                return Ok((x, it));
            }
            self.apply(faces, &p, &mut ap);
            let pap = dot(&p, &ap);
            if !(pap > 0.0) {
                return Err(Error::LinearSolver(format!("operator not positive definite (pAp = {pap:e})")));
            }
            let alpha = rz / pap;
            for k in n2..len {
                x[k] += alpha * p[k];
                r[k] -= alpha * ap[k];
            }
            precondition(&r, &mut z);
            let rz_next = dot(&r, &z);
            let beta = rz_next / rz;
            rz = rz_next;
            for k in n2..len {
                p[k] = z[k] + beta * p[k];
            }
        }
        if dot(&r, &r).sqrt() <= tol * b_norm {
            Ok((x, max_it))
        } else {
            Err(Error::LinearSolver(format!("CG did not reach relative residual {tol:e} in {max_it} iterations")))
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Divergence test for CMC iterations: `ξ_max` keeps growing and its
/// increments are not shrinking.
fn growth_detected(history: &[IterationRecord], window: usize) -> bool {
    if history.len() < window + 2 {
        return false;
    }
    let xi: Vec<f64> = history[history.len() - window - 2..].iter().map(|h| h.xi_max).collect();
    let increments: Vec<f64> = xi.windows(2).map(|w| w[1] - w[0]).collect();
    let all_growing = increments.iter().all(|d| *d > 0.0);
    all_growing && increments[increments.len() - 1] >= increments[0]
}

const XI_DIVERGENCE_CAP: f64 = 1e8;

fn picard(
    op: &FluxOperator<'_>,
    dirichlet: &[f64],
    controls: &SolverControls,
    growth_window: Option<usize>,
) -> Result<Solution> {
    let d = op.domain;
    let n2 = d.nodes()[1];
    let mut u = vec![0.0; d.len()];
    u[..n2].copy_from_slice(dirichlet);
    let residual_scale = op.source.abs().max(1.0);
    let mut linear = u.clone();
    let mut history = Vec::new();
    let theta = controls.damping;
    for iteration in 0..controls.max_iterations {
        let faces = op.face_mobilities(&u)?;
        let residual = op.residual_norm(&faces, &u);
        let (w, cg_iterations) =
            op.solve_linear(&faces, &linear, dirichlet, controls.cg_tolerance, controls.cg_max_iterations)?;
        let mut update = 0.0_f64;
        let mut u_max = 0.0_f64;
        for (uk, wk) in u.iter_mut().zip(&w) {
            let next = *uk + theta * (wk - *uk);
            update = update.max((next - *uk).abs());
            u_max = u_max.max(next.abs());
            *uk = next;
        }
        linear = w;
        history.push(IterationRecord {
            iteration,
            update,
            residual,
            xi_max: faces.xi_max,
            damping: theta,
            cg_iterations,
        });

        if u.iter().any(|v| !v.is_finite()) || !faces.xi_max.is_finite() {
            return Err(match growth_window {
                Some(_) => Error::CmcNonexistence { kind: FailureKind::Diverged, history },
                None => Error::NotConverged { history },
            });
        }
        if let Some(window) = growth_window {
            if faces.xi_max > XI_DIVERGENCE_CAP || growth_detected(&history, window) {
                return Err(Error::CmcNonexistence { kind: FailureKind::Diverged, history });
            }
        }
        if update <= controls.update_tolerance * (1.0 + u_max)
            && residual <= controls.residual_tolerance * residual_scale
        {
            let faces = op.face_mobilities(&u)?;
            let residual = op.residual_norm(&faces, &u);
            let inner_flux = op.inner_flux(&faces, &u);
            let field = ScalarField::new(d, "solution", u)?;
            return Ok(Solution { field, history, residual, inner_flux });
        }
    }
    Err(match growth_window {
        Some(_) => Error::CmcNonexistence { kind: FailureKind::Stalled, history },
        None => Error::NotConverged { history },
    })
}
