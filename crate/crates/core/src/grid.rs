//! Structured node-centered grids over annuli (polar, boundary fitted) and
//! rectangles, with discrete fields, differential operators and quadrature.
//!
//! Nodes are indexed by `(i, j)`: `i` runs along the first axis (radius, or
//! `x` on rectangles) and `j` along the second (angle, periodic, or `y`).
//! Storage is row-major with `i` as the outer index. The inner boundary
//! `Γ_i` is the row `i = 0` (the well circle, or the `x = x_min` edge); every
//! other boundary node belongs to `Γ_e`.

use std::f64::consts::PI;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    Annulus { r_inner: f64, r_outer: f64 },
    Rectangle { x_min: f64, x_max: f64, y_min: f64, y_max: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryTag {
    /// Accessible boundary (the well).
    Inner,
    /// Exterior, impermeable boundary.
    Exterior,
}

impl FromStr for BoundaryTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inner" | "gamma_i" | "well" => Ok(BoundaryTag::Inner),
            "exterior" | "gamma_e" | "outer" => Ok(BoundaryTag::Exterior),
            other => Err(Error::UnknownTag(other.to_string())),
        }
    }
}

/// Grid geometry: shape plus cell counts along each axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub shape: Shape,
    pub cells: [usize; 2],
}

impl Domain {
    pub fn annulus(r_inner: f64, r_outer: f64, n_r: usize, n_theta: usize) -> Result<Self> {
        Self::new(Shape::Annulus { r_inner, r_outer }, [n_r, n_theta])
    }

    pub fn rectangle(x: (f64, f64), y: (f64, f64), n_x: usize, n_y: usize) -> Result<Self> {
        Self::new(Shape::Rectangle { x_min: x.0, x_max: x.1, y_min: y.0, y_max: y.1 }, [n_x, n_y])
    }

    pub fn new(shape: Shape, cells: [usize; 2]) -> Result<Self> {
        match shape {
            Shape::Annulus { r_inner, r_outer } => {
                if !(r_inner > 0.0 && r_inner < r_outer && r_outer.is_finite()) {
                    return Err(Error::InvalidDomain(format!(
                        "annulus needs 0 < r_inner < r_outer, got ({r_inner}, {r_outer})"
                    )));
                }
                if cells[0] < 2 || cells[1] < 3 {
                    return Err(Error::InvalidDomain("annulus needs at least 3 radial and 3 angular nodes".into()));
                }
            }
            Shape::Rectangle { x_min, x_max, y_min, y_max } => {
                if !(x_min < x_max && y_min < y_max) || ![x_min, x_max, y_min, y_max].iter().all(|v| v.is_finite()) {
                    return Err(Error::InvalidDomain("rectangle needs min < max on both axes".into()));
                }
                if cells[0] < 2 || cells[1] < 2 {
                    return Err(Error::InvalidDomain("rectangle needs at least 3 nodes per direction".into()));
                }
            }
        }
        Ok(Domain { shape, cells })
    }

    pub fn with_cells(&self, cells: [usize; 2]) -> Result<Self> {
        Self::new(self.shape, cells)
    }

    pub fn is_polar(&self) -> bool {
        matches!(self.shape, Shape::Annulus { .. })
    }

    /// Node counts along each axis.
    pub fn nodes(&self) -> [usize; 2] {
        if self.is_polar() {
            [self.cells[0] + 1, self.cells[1]]
        } else {
            [self.cells[0] + 1, self.cells[1] + 1]
        }
    }

    pub fn len(&self) -> usize {
        let [n1, n2] = self.nodes();
        n1 * n2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.nodes()[1] + j
    }

    #[inline]
    pub fn split(&self, k: usize) -> (usize, usize) {
        let n2 = self.nodes()[1];
        (k / n2, k % n2)
    }

    fn bounds1(&self) -> (f64, f64) {
        match self.shape {
            Shape::Annulus { r_inner, r_outer } => (r_inner, r_outer),
            Shape::Rectangle { x_min, x_max, .. } => (x_min, x_max),
        }
    }

    fn bounds2(&self) -> (f64, f64) {
        match self.shape {
            Shape::Annulus { .. } => (0.0, 2.0 * PI),
            Shape::Rectangle { y_min, y_max, .. } => (y_min, y_max),
        }
    }

    /// Grid spacings `(h1, h2)` in logical coordinates (radius/angle or x/y).
    pub fn spacing(&self) -> (f64, f64) {
        let (a1, b1) = self.bounds1();
        let (a2, b2) = self.bounds2();
        ((b1 - a1) / self.cells[0] as f64, (b2 - a2) / self.cells[1] as f64)
    }

    /// Largest physical node spacing.
    pub fn max_spacing(&self) -> f64 {
        let (h1, h2) = self.spacing();
        match self.shape {
            Shape::Annulus { r_outer, .. } => h1.max(r_outer * h2),
            Shape::Rectangle { .. } => h1.max(h2),
        }
    }

    pub fn coord1(&self, i: usize) -> f64 {
        let (a, b) = self.bounds1();
        if i == self.cells[0] {
            b
        } else {
            a + i as f64 * self.spacing().0
        }
    }

    pub fn coord2(&self, j: usize) -> f64 {
        let (a, b) = self.bounds2();
        if !self.is_polar() && j == self.cells[1] {
            b
        } else {
            a + j as f64 * self.spacing().1
        }
    }

    /// Cartesian position of node `(i, j)`.
    pub fn position(&self, i: usize, j: usize) -> (f64, f64) {
        let (c1, c2) = (self.coord1(i), self.coord2(j));
        if self.is_polar() {
            (c1 * c2.cos(), c1 * c2.sin())
        } else {
            (c1, c2)
        }
    }

    /// Extent of the dual cell of node `i` along axis 1, clipped to the domain.
    fn dual1(&self, i: usize) -> (f64, f64) {
        let h = self.spacing().0;
        let c = self.coord1(i);
        let lo = if i == 0 { c } else { c - 0.5 * h };
        let hi = if i == self.cells[0] { c } else { c + 0.5 * h };
        (lo, hi)
    }

    fn dual2_width(&self, j: usize) -> f64 {
        let h = self.spacing().1;
        if !self.is_polar() && (j == 0 || j == self.cells[1]) {
            0.5 * h
        } else {
            h
        }
    }

    /// Area of the control volume around node `(i, j)`.
    pub fn cell_area(&self, i: usize, j: usize) -> f64 {
        let (lo, hi) = self.dual1(i);
        let w2 = self.dual2_width(j);
        if self.is_polar() {
            0.5 * w2 * (hi * hi - lo * lo)
        } else {
            (hi - lo) * w2
        }
    }

    /// Quadrature weights (control-volume areas) for every node.
    pub fn weights(&self) -> Vec<f64> {
        (0..self.len())
            .map(|k| {
                let (i, j) = self.split(k);
                self.cell_area(i, j)
            })
            .collect()
    }

    /// Exact area `|U|`.
    pub fn area(&self) -> f64 {
        let (a1, b1) = self.bounds1();
        let (a2, b2) = self.bounds2();
        if self.is_polar() {
            PI * (b1 * b1 - a1 * a1)
        } else {
            (b1 - a1) * (b2 - a2)
        }
    }

    /// Geometric transmissibility of the face between nodes `(i, j)` and
    /// `(i + 1, j)`: face length over node distance.
    pub fn face1_coef(&self, i: usize, j: usize) -> f64 {
        let (h1, _) = self.spacing();
        let w2 = self.dual2_width(j);
        if self.is_polar() {
            let rf = self.coord1(i) + 0.5 * h1;
            rf * w2 / h1
        } else {
            w2 / h1
        }
    }

    /// Transmissibility of the face between `(i, j)` and `(i, j + 1)`
    /// (wrapping in angle on polar grids).
    pub fn face2_coef(&self, i: usize, _j: usize) -> f64 {
        let (_, h2) = self.spacing();
        let (lo, hi) = self.dual1(i);
        if self.is_polar() {
            (hi / lo).ln() / h2
        } else {
            (hi - lo) / h2
        }
    }

    /// Angular faces wrap around; rectangle `y` faces do not.
    pub fn periodic2(&self) -> bool {
        self.is_polar()
    }

    pub fn tag(&self, i: usize, j: usize) -> Option<BoundaryTag> {
        let [n1, n2] = self.nodes();
        if i == 0 {
            Some(BoundaryTag::Inner)
        } else if i == n1 - 1 || (!self.is_polar() && (j == 0 || j == n2 - 1)) {
            Some(BoundaryTag::Exterior)
        } else {
            None
        }
    }

    pub fn boundary_nodes(&self, tag: BoundaryTag) -> Vec<usize> {
        (0..self.len())
            .filter(|&k| {
                let (i, j) = self.split(k);
                self.tag(i, j) == Some(tag)
            })
            .collect()
    }

    /// Length of the tagged boundary.
    pub fn boundary_length(&self, tag: BoundaryTag) -> f64 {
        match (self.shape, tag) {
            (Shape::Annulus { r_inner, .. }, BoundaryTag::Inner) => 2.0 * PI * r_inner,
            (Shape::Annulus { r_outer, .. }, BoundaryTag::Exterior) => 2.0 * PI * r_outer,
            (Shape::Rectangle { y_min, y_max, .. }, BoundaryTag::Inner) => y_max - y_min,
            (Shape::Rectangle { x_min, x_max, y_min, y_max }, BoundaryTag::Exterior) => {
                2.0 * (x_max - x_min) + (y_max - y_min)
            }
        }
    }

    /// The same grid with every coordinate multiplied by `chi`.
    pub fn scaled(&self, chi: f64) -> Result<Self> {
        if !(chi > 0.0 && chi.is_finite()) {
            return Err(Error::Domain(format!("scale factor {chi} must be positive")));
        }
        let shape = match self.shape {
            Shape::Annulus { r_inner, r_outer } => Shape::Annulus { r_inner: chi * r_inner, r_outer: chi * r_outer },
            Shape::Rectangle { x_min, x_max, y_min, y_max } => {
                Shape::Rectangle { x_min: chi * x_min, x_max: chi * x_max, y_min: chi * y_min, y_max: chi * y_max }
            }
        };
        Domain::new(shape, self.cells)
    }

    fn check_len(&self, got: usize) -> Result<()> {
        if got == self.len() {
            Ok(())
        } else {
            Err(Error::Shape { expected: self.len(), got })
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub domain: Domain,
    pub name: String,
    pub units: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub domain: Domain,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl ScalarField {
    pub fn new(domain: Domain, name: &str, values: Vec<f64>) -> Result<Self> {
        domain.check_len(values.len())?;
        if let Some(node) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { name: name.to_string(), node });
        }
        Ok(ScalarField { domain, name: name.to_string(), units: "dimensionless".to_string(), values })
    }

    pub fn zeros(domain: Domain, name: &str) -> Self {
        ScalarField {
            domain,
            name: name.to_string(),
            units: "dimensionless".to_string(),
            values: vec![0.0; domain.len()],
        }
    }

    /// Samples `f(x, y)` at every node.
    pub fn from_fn(domain: Domain, name: &str, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = (0..domain.len())
            .map(|k| {
                let (i, j) = domain.split(k);
                let (x, y) = domain.position(i, j);
                f(x, y)
            })
            .collect();
        ScalarField { domain, name: name.to_string(), units: "dimensionless".to_string(), values }
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.domain.index(i, j)]
    }

    pub fn map(&self, name: &str, f: impl Fn(f64) -> f64) -> Self {
        ScalarField {
            domain: self.domain,
            name: name.to_string(),
            units: self.units.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl VectorField {
    pub fn new(domain: Domain, x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        domain.check_len(x.len())?;
        domain.check_len(y.len())?;
        if let Some(node) = x.iter().chain(&y).position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { name: "vector".into(), node: node % domain.len() });
        }
        Ok(VectorField { domain, x, y })
    }

    pub fn from_fn(domain: Domain, f: impl Fn(f64, f64) -> (f64, f64)) -> Self {
        let (x, y) = (0..domain.len())
            .map(|k| {
                let (i, j) = domain.split(k);
                let (px, py) = domain.position(i, j);
                f(px, py)
            })
            .unzip();
        VectorField { domain, x, y }
    }

    pub fn norm(&self, name: &str) -> ScalarField {
        ScalarField {
            domain: self.domain,
            name: name.to_string(),
            units: "dimensionless".to_string(),
            values: self.x.iter().zip(&self.y).map(|(a, b)| a.hypot(*b)).collect(),
        }
    }
}

/// Second-order derivative of nodal data along axis 1 (one-sided at ends).
fn diff1(d: &Domain, v: &[f64]) -> Vec<f64> {
    let [n1, n2] = d.nodes();
    let h = d.spacing().0;
    let mut out = vec![0.0; v.len()];
    for i in 0..n1 {
        for j in 0..n2 {
            let f = |ii: usize| v[ii * n2 + j];
            out[i * n2 + j] = if i == 0 {
                (-3.0 * f(0) + 4.0 * f(1) - f(2)) / (2.0 * h)
            } else if i == n1 - 1 {
                (3.0 * f(i) - 4.0 * f(i - 1) + f(i - 2)) / (2.0 * h)
            } else {
                (f(i + 1) - f(i - 1)) / (2.0 * h)
            };
        }
    }
    out
}

/// Second-order derivative along axis 2 (periodic on polar grids).
fn diff2(d: &Domain, v: &[f64]) -> Vec<f64> {
    let [n1, n2] = d.nodes();
    let h = d.spacing().1;
    let periodic = d.periodic2();
    let mut out = vec![0.0; v.len()];
    for i in 0..n1 {
        let row = &v[i * n2..(i + 1) * n2];
        for j in 0..n2 {
            out[i * n2 + j] = if periodic {
                (row[(j + 1) % n2] - row[(j + n2 - 1) % n2]) / (2.0 * h)
            } else if j == 0 {
                (-3.0 * row[0] + 4.0 * row[1] - row[2]) / (2.0 * h)
            } else if j == n2 - 1 {
                (3.0 * row[j] - 4.0 * row[j - 1] + row[j - 2]) / (2.0 * h)
            } else {
                (row[j + 1] - row[j - 1]) / (2.0 * h)
            };
        }
    }
    out
}

/// Logical derivatives `(∂_1 f, ∂_2 f)`: `(∂_r f, ∂_θ f)` on annuli.
pub fn logical_gradient(f: &ScalarField) -> (Vec<f64>, Vec<f64>) {
    (diff1(&f.domain, &f.values), diff2(&f.domain, &f.values))
}

/// Cartesian gradient of a nodal field.
pub fn gradient(f: &ScalarField) -> VectorField {
    let d = f.domain;
    let (d1, d2) = logical_gradient(f);
    if !d.is_polar() {
        return VectorField { domain: d, x: d1, y: d2 };
    }
    let mut gx = vec![0.0; d.len()];
    let mut gy = vec![0.0; d.len()];
    for k in 0..d.len() {
        let (i, j) = d.split(k);
        let r = d.coord1(i);
        let (s, c) = d.coord2(j).sin_cos();
        let dr = d1[k];
        let dt = d2[k] / r;
        gx[k] = c * dr - s * dt;
        gy[k] = s * dr + c * dt;
    }
    VectorField { domain: d, x: gx, y: gy }
}

/// Cartesian divergence `∂_x w_x + ∂_y w_y` of a nodal vector field.
pub fn divergence(w: &VectorField) -> ScalarField {
    let d = w.domain;
    let component =
        |values: &[f64]| ScalarField { domain: d, name: String::new(), units: String::new(), values: values.to_vec() };
    let gx = gradient(&component(&w.x));
    let gy = gradient(&component(&w.y));
    ScalarField {
        domain: d,
        name: "divergence".into(),
        units: "dimensionless".into(),
        values: gx.x.iter().zip(&gy.y).map(|(a, b)| a + b).collect(),
    }
}

/// Nodal Hessian `(f_xx, f_xy, f_yy)`, with the mixed derivative averaged
/// over both differentiation orders.
pub fn hessian(f: &ScalarField) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let g = gradient(f);
    let gx = gradient(&ScalarField { domain: f.domain, name: String::new(), units: String::new(), values: g.x });
    let gy = gradient(&ScalarField { domain: f.domain, name: String::new(), units: String::new(), values: g.y });
    let xy = gx.y.iter().zip(&gy.x).map(|(a, b)| 0.5 * (a + b)).collect();
    (gx.x, xy, gy.y)
}

/// `∫_U f dx` with control-volume weights.
pub fn integrate(f: &ScalarField) -> f64 {
    integrate_values(&f.domain, &f.values)
}

pub(crate) fn integrate_values(d: &Domain, values: &[f64]) -> f64 {
    let [n1, n2] = d.nodes();
    let mut total = 0.0;
    for i in 0..n1 {
        let mut row = 0.0;
        for j in 0..n2 {
            row += d.cell_area(i, j) * values[i * n2 + j];
        }
        total += row;
    }
    total
}

/// Quadrature nodes on the tagged boundary: `(node, weight, outward normal)`.
fn boundary_quadrature(d: &Domain, tag: BoundaryTag) -> Vec<(usize, f64, (f64, f64))> {
    let [n1, n2] = d.nodes();
    let (h1, h2) = d.spacing();
    let mut out = Vec::new();
    match (d.shape, tag) {
        (Shape::Annulus { r_inner, .. }, BoundaryTag::Inner) => {
            for j in 0..n2 {
                let (s, c) = d.coord2(j).sin_cos();
                out.push((d.index(0, j), r_inner * h2, (-c, -s)));
            }
        }
        (Shape::Annulus { r_outer, .. }, BoundaryTag::Exterior) => {
            for j in 0..n2 {
                let (s, c) = d.coord2(j).sin_cos();
                out.push((d.index(n1 - 1, j), r_outer * h2, (c, s)));
            }
        }
        (Shape::Rectangle { .. }, BoundaryTag::Inner) => {
            for j in 0..n2 {
                let w = if j == 0 || j == n2 - 1 { 0.5 * h2 } else { h2 };
                out.push((d.index(0, j), w, (-1.0, 0.0)));
            }
        }
        (Shape::Rectangle { .. }, BoundaryTag::Exterior) => {
            for j in 0..n2 {
                let w = if j == 0 || j == n2 - 1 { 0.5 * h2 } else { h2 };
                out.push((d.index(n1 - 1, j), w, (1.0, 0.0)));
            }
            for i in 0..n1 {
                let w = if i == 0 || i == n1 - 1 { 0.5 * h1 } else { h1 };
                out.push((d.index(i, 0), w, (0.0, -1.0)));
                out.push((d.index(i, n2 - 1), w, (0.0, 1.0)));
            }
        }
    }
    out
}

/// `∮ w · N dσ` over the tagged boundary, `N` the outward normal of `U`.
pub fn boundary_integral(w: &VectorField, tag: BoundaryTag) -> f64 {
    boundary_quadrature(&w.domain, tag).into_iter().map(|(k, wt, (nx, ny))| wt * (w.x[k] * nx + w.y[k] * ny)).sum()
}

/// Same as [`boundary_integral`] with the tag given by name.
pub fn boundary_integral_named(w: &VectorField, tag: &str) -> Result<f64> {
    Ok(boundary_integral(w, tag.parse()?))
}

/// `∮ f dσ` over the tagged boundary.
pub fn boundary_scalar_integral(f: &ScalarField, tag: BoundaryTag) -> f64 {
    boundary_quadrature(&f.domain, tag).into_iter().map(|(k, wt, _)| wt * f.values[k]).sum()
}

/// Boundary average `(1/|Γ|) ∮ f dσ`.
pub fn boundary_mean(f: &ScalarField, tag: BoundaryTag) -> f64 {
    let len: f64 = boundary_quadrature(&f.domain, tag).iter().map(|q| q.1).sum();
    boundary_scalar_integral(f, tag) / len
}

#[cfg(test)]
mod tests {
    use super::*;

    fn annulus(n: usize, m: usize) -> Domain {
        Domain::annulus(1.0, 2.0, n, m).unwrap()
    }

    #[test]
    fn rejects_bad_geometry() {
        assert!(Domain::annulus(2.0, 1.0, 8, 8).is_err());
        assert!(Domain::annulus(0.0, 1.0, 8, 8).is_err());
        assert!(Domain::annulus(1.0, 2.0, 1, 8).is_err());
        assert!(Domain::rectangle((0.0, 0.0), (0.0, 1.0), 4, 4).is_err());
    }

    #[test]
    fn tags_partition_the_boundary() {
        for d in [annulus(4, 6), Domain::rectangle((0.0, 1.0), (0.0, 2.0), 4, 5).unwrap()] {
            let inner = d.boundary_nodes(BoundaryTag::Inner);
            let outer = d.boundary_nodes(BoundaryTag::Exterior);
            assert!(inner.iter().all(|k| !outer.contains(k)));
            assert_eq!(inner.len(), d.nodes()[1]);
        }
        assert!("nowhere".parse::<BoundaryTag>().is_err());
    }

    #[test]
    fn areas_sum_to_domain_area() {
        let d = annulus(16, 12);
        assert!((d.weights().iter().sum::<f64>() - 3.0 * PI).abs() < 1e-12);
        let one = ScalarField::from_fn(d, "one", |_, _| 1.0);
        assert!((integrate(&one) / (3.0 * PI) - 1.0).abs() < 1e-6);
        let r = Domain::rectangle((0.0, 2.0), (-1.0, 0.5), 7, 5).unwrap();
        assert!((r.weights().iter().sum::<f64>() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn gradient_of_constant_and_linear() {
        let d = annulus(8, 16);
        let g = gradient(&ScalarField::from_fn(d, "c", |_, _| 4.0));
        assert!(g.x.iter().chain(&g.y).all(|v| *v == 0.0));

        let r = Domain::rectangle((0.0, 1.0), (0.0, 1.0), 5, 7).unwrap();
        let g = gradient(&ScalarField::from_fn(r, "x", |x, _| x));
        assert!(g.x.iter().all(|v| (v - 1.0).abs() < 1e-13));
        assert!(g.y.iter().all(|v| v.abs() < 1e-13));
    }

    #[test]
    fn constant_vector_has_zero_divergence() {
        for d in [annulus(8, 16), Domain::rectangle((0.0, 1.0), (0.0, 1.0), 6, 6).unwrap()] {
            let div = divergence(&VectorField::from_fn(d, |_, _| (0.3, -1.1)));
            assert!(div.max_abs() < 1e-12);
        }
    }

    fn radial_gradient_error(n: usize) -> f64 {
        let d = annulus(n, 16);
        let f = ScalarField::from_fn(d, "u", |x, y| {
            let r = x.hypot(y);
            2.0 * r.ln() - (r * r - 1.0) / 4.0
        });
        let g = gradient(&f);
        (0..d.len())
            .map(|k| {
                let (x, y) = d.position(d.split(k).0, d.split(k).1);
                let r = x.hypot(y);
                let radial = (g.x[k] * x + g.y[k] * y) / r;
                (radial - (2.0 / r - r / 2.0)).abs()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn radial_gradient_converges_second_order() {
        let coarse = radial_gradient_error(16);
        let fine = radial_gradient_error(32);
        assert!(coarse < 1e-2);
        assert!(coarse / fine >= 3.5, "ratio {}", coarse / fine);
    }

    #[test]
    fn inner_flux_of_radial_oracle() {
        let d = annulus(128, 64);
        // v = (4 - r^2)/(2r) pointing toward the well.
        let v = VectorField::from_fn(d, |x, y| {
            let r = x.hypot(y);
            let s = -(4.0 - r * r) / (2.0 * r) / r;
            (s * x, s * y)
        });
        let q = boundary_integral(&v, BoundaryTag::Inner);
        assert!((q / (3.0 * PI) - 1.0).abs() < 1e-4);
        assert!(boundary_integral_named(&v, "gamma_e").unwrap().abs() < 1e-12);
        assert!(boundary_integral_named(&v, "sideways").is_err());
    }

    #[test]
    fn scaling_preserves_topology() {
        let d = annulus(8, 8).scaled(0.5).unwrap();
        assert_eq!(d.shape, Shape::Annulus { r_inner: 0.5, r_outer: 1.0 });
        assert!(annulus(8, 8).scaled(0.0).is_err());
    }
}
