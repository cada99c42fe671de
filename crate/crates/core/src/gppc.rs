//! Generalized polynomials with positive coefficients (GPPC) and the
//! nonlinear mobility they induce.
//!
//! A GPPC `g(s) = Σ a_j s^{α_j}` with `0 = α_0 < α_1 < ... < α_k` and
//! `a_j > 0` defines the momentum law `g(|v|) v = -∇p`. Because
//! `(s g(s))' >= g(0) > 0`, the map `s -> s g(s)` is invertible on
//! `[0, ∞)`; its inverse `G` gives the flow speed from the pressure
//! gradient magnitude and `K(ξ) = 1 / g(G(ξ))` is the mobility in
//! `v = -K(|∇p|) ∇p`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One term `a s^alpha` of a GPPC.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub a: f64,
    pub alpha: f64,
}

/// A validated GPPC. Serialized as a list of `{a, alpha}` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Term>", into = "Vec<Term>")]
pub struct GppcPolynomial {
    terms: Vec<Term>,
}

const MAX_ROOT_ITERATIONS: usize = 200;

impl GppcPolynomial {
    /// Builds a GPPC from its terms.
    ///
    /// Terms with a zero coefficient are dropped. The remaining terms must
    /// have positive finite coefficients, finite exponents that are
    /// strictly increasing, and a constant leading term (`alpha = 0`).
    pub fn new(terms: impl IntoIterator<Item = Term>) -> Result<Self> {
        let terms: Vec<Term> = terms.into_iter().filter(|t| t.a != 0.0).collect();
        if terms.is_empty() {
            return Err(Error::InvalidGppc("no nonzero terms".into()));
        }
        for (j, t) in terms.iter().enumerate() {
            if !t.a.is_finite() || t.a < 0.0 {
                return Err(Error::InvalidGppc(format!("term {j}: coefficient {} must be positive", t.a)));
            }
            if !t.alpha.is_finite() || t.alpha < 0.0 {
                return Err(Error::InvalidGppc(format!("term {j}: exponent {} must be nonnegative", t.alpha)));
            }
        }
        if terms[0].alpha != 0.0 {
            return Err(Error::InvalidGppc("first exponent must be 0 so that g(0) > 0".into()));
        }
        if let Some(j) = terms.windows(2).position(|w| w[1].alpha <= w[0].alpha) {
            return Err(Error::InvalidGppc(format!("exponents must be strictly increasing (terms {j} and {})", j + 1)));
        }
        Ok(Self { terms })
    }

    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        Self::new(pairs.iter().map(|&(a, alpha)| Term { a, alpha }))
    }

    /// Darcy's law, `g(s) = alpha`.
    pub fn darcy(alpha: f64) -> Result<Self> {
        Self::from_pairs(&[(alpha, 0.0)])
    }

    /// Two-term Forchheimer law, `g(s) = alpha + beta s`.
    pub fn two_term(alpha: f64, beta: f64) -> Result<Self> {
        Self::from_pairs(&[(alpha, 0.0), (beta, 1.0)])
    }

    /// Power law, `g(s) = a + c^n s^(n-1)` for `n` in `[1, 2]`.
    ///
    /// For `n = 1` the two terms share the exponent 0 and are merged.
    pub fn power(a: f64, c: f64, n: f64) -> Result<Self> {
        if !(1.0..=2.0).contains(&n) {
            return Err(Error::InvalidGppc(format!("power-law index n = {n} outside [1, 2]")));
        }
        let cn = c.powf(n);
        if n == 1.0 {
            Self::from_pairs(&[(a + cn, 0.0)])
        } else {
            Self::from_pairs(&[(a, 0.0), (cn, n - 1.0)])
        }
    }

    /// Power law with the conventional choice `c = (n - 1) sqrt(beta)`.
    pub fn power_from_beta(alpha: f64, beta: f64, n: f64) -> Result<Self> {
        Self::power(alpha, (n - 1.0) * beta.sqrt(), n)
    }

    /// Three-term law, `g(s) = a + b s + c s^2`.
    pub fn three_term(a: f64, b: f64, c: f64) -> Result<Self> {
        Self::from_pairs(&[(a, 0.0), (b, 1.0), (c, 2.0)])
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    /// Largest exponent `α_k`.
    pub fn degree(&self) -> f64 {
        self.terms.last().map_or(0.0, |t| t.alpha)
    }

    /// Decay exponent `a = deg / (deg + 1)` of the mobility bound.
    pub fn bound_exponent(&self) -> f64 {
        let d = self.degree();
        d / (d + 1.0)
    }

    pub fn is_darcy(&self) -> bool {
        self.terms.len() == 1
    }

    /// `g(0) = a_0`.
    pub fn g0(&self) -> f64 {
        self.terms[0].a
    }

    /// Evaluates `g(s)`.
    pub fn eval(&self, s: f64) -> Result<f64> {
        check_nonnegative("s", s)?;
        Ok(self.eval_unchecked(s))
    }

    pub(crate) fn eval_unchecked(&self, s: f64) -> f64 {
        self.terms.iter().map(|t| t.a * pow0(s, t.alpha)).sum()
    }

    /// `s g(s)` and its derivative `Σ a_j (α_j + 1) s^α_j`.
    fn sg_and_slope(&self, s: f64) -> (f64, f64) {
        let mut value = 0.0;
        let mut slope = 0.0;
        for t in &self.terms {
            let p = pow0(s, t.alpha);
            value += t.a * p;
            slope += t.a * (t.alpha + 1.0) * p;
        }
        (s * value, slope)
    }

    /// `G(ξ)`: the unique `s >= 0` with `s g(s) = ξ`.
    pub fn invert_sg(&self, xi: f64) -> Result<f64> {
        check_nonnegative("xi", xi)?;
        if xi == 0.0 {
            return Ok(0.0);
        }
        if self.is_darcy() {
            return Ok(xi / self.g0());
        }
        // s g(s) >= s g(0), so the root lies in [0, xi / g(0)].
        let mut lo = 0.0;
        let mut hi = xi / self.g0();
        let mut s = hi;
        for _ in 0..MAX_ROOT_ITERATIONS {
            let (f, df) = self.sg_and_slope(s);
            let f = f - xi;
            if f == 0.0 {
                return Ok(s);
            }
            if f > 0.0 {
                hi = s;
            } else {
                lo = s;
            }
            let mut next = s - f / df;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            let step = (next - s).abs();
            s = next;
            if step <= 1e-15 * s || hi - lo <= 1e-15 * hi {
                return Ok(s);
            }
        }
        let (f, _) = self.sg_and_slope(s);
        Err(Error::RootNotConverged { iterations: MAX_ROOT_ITERATIONS, residual: (f - xi).abs() })
    }

    /// Mobility `K(ξ) = 1 / g(G(ξ))`.
    pub fn big_k(&self, xi: f64) -> Result<f64> {
        if self.is_darcy() {
            check_nonnegative("xi", xi)?;
            return Ok(1.0 / self.g0());
        }
        let s = self.invert_sg(xi)?;
        Ok(1.0 / self.eval_unchecked(s))
    }

    /// Empirical constants of the bound `C0/(1+ξ^a) <= K(ξ) <= C1/(1+ξ^a)`
    /// over the given samples.
    pub fn k_bounds_witness(&self, xi_samples: &[f64]) -> Result<KBounds> {
        if xi_samples.is_empty() {
            return Err(Error::Domain("no samples for K bound witness".into()));
        }
        let a = self.bound_exponent();
        let mut c0 = f64::INFINITY;
        let mut c1 = 0.0_f64;
        for &xi in xi_samples {
            let scaled = self.big_k(xi)? * (1.0 + pow0(xi, a));
            c0 = c0.min(scaled);
            c1 = c1.max(scaled);
        }
        Ok(KBounds { c0, c1, a })
    }
}

/// Constants of the two-sided mobility bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KBounds {
    pub c0: f64,
    pub c1: f64,
    pub a: f64,
}

impl TryFrom<Vec<Term>> for GppcPolynomial {
    type Error = Error;

    fn try_from(terms: Vec<Term>) -> Result<Self> {
        Self::new(terms)
    }
}

impl From<GppcPolynomial> for Vec<Term> {
    fn from(g: GppcPolynomial) -> Self {
        g.terms
    }
}

/// `s^alpha` with `0^0 = 1` and `0^alpha = 0` for `alpha > 0`.
pub(crate) fn pow0(s: f64, alpha: f64) -> f64 {
    if alpha == 0.0 {
        1.0
    } else if s == 0.0 {
        0.0
    } else if alpha == 1.0 {
        s
    } else if alpha == 2.0 {
        s * s
    } else {
        s.powf(alpha)
    }
}

fn check_nonnegative(name: &str, x: f64) -> Result<()> {
    if x.is_nan() || x < 0.0 {
        Err(Error::Domain(format!("{name} = {x} must be nonnegative")))
    } else {
        Ok(())
    }
}
