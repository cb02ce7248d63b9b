use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Polynomial with vector coefficients, `a_0 + a_1 t + … + a_n tⁿ`.
///
/// Coefficients are stored lowest order first. Serialises as
/// `{"coeffs": [[...], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolynomialRepr", into = "PolynomialRepr")]
pub struct VectorPolynomial {
    dim: usize,
    coeffs: Vec<DVector<f64>>,
}

#[derive(Serialize, Deserialize)]
struct PolynomialRepr {
    coeffs: Vec<Vec<f64>>,
}

impl TryFrom<PolynomialRepr> for VectorPolynomial {
    type Error = Error;

    fn try_from(r: PolynomialRepr) -> Result<Self> {
        let coeffs = r.coeffs.into_iter().map(DVector::from_vec).collect();
        Self::new(coeffs)
    }
}

impl From<VectorPolynomial> for PolynomialRepr {
    fn from(p: VectorPolynomial) -> Self {
        PolynomialRepr {
            coeffs: p.coeffs.iter().map(|c| c.as_slice().to_vec()).collect(),
        }
    }
}

impl VectorPolynomial {
    pub fn new(coeffs: Vec<DVector<f64>>) -> Result<Self> {
        let dim = coeffs
            .first()
            .map(|c| c.len())
            .ok_or_else(|| Error::Parameter("polynomial needs at least one coefficient".into()))?;
        if dim == 0 {
            return Err(Error::Parameter("polynomial dimension must be positive".into()));
        }
        for (j, c) in coeffs.iter().enumerate() {
            if c.len() != dim {
                return Err(Error::Parameter(format!(
                    "coefficient a_{j} has dimension {}, expected {dim}",
                    c.len()
                )));
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::Parameter(format!("coefficient a_{j} is not finite")));
            }
        }
        Ok(Self { dim, coeffs })
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        Self::new(rows.iter().map(|r| DVector::from_row_slice(r)).collect())
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            coeffs: vec![DVector::zeros(dim)],
        }
    }

    pub fn constant(value: DVector<f64>) -> Self {
        Self {
            dim: value.len(),
            coeffs: vec![value],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Formal degree (`len − 1`); trailing zero coefficients still count.
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Degree ignoring trailing zero coefficients; `None` for the zero polynomial.
    pub fn effective_degree(&self) -> Option<usize> {
        self.coeffs.iter().rposition(|c| c.iter().any(|&v| v != 0.0))
    }

    pub fn coeffs(&self) -> &[DVector<f64>] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.effective_degree().is_none()
    }

    /// Horner evaluation.
    pub fn eval(&self, t: f64) -> DVector<f64> {
        let mut acc = DVector::zeros(self.dim);
        self.eval_into(t, &mut acc);
        acc
    }

    pub fn eval_into(&self, t: f64, out: &mut DVector<f64>) {
        out.fill(0.0);
        for c in self.coeffs.iter().rev() {
            *out *= t;
            *out += c;
        }
    }

    /// `q`-th derivative with respect to `t`.
    pub fn derivative(&self, q: usize) -> Self {
        let mut p = self.clone();
        for _ in 0..q {
            if p.coeffs.len() == 1 {
                return Self::zero(self.dim);
            }
            p.coeffs = p
                .coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(j, c)| c * j as f64)
                .collect();
        }
        p
    }

    /// `q`-th forward difference in the integer argument, `Δp(k) = p(k+1) − p(k)`.
    pub fn forward_difference(&self, q: usize) -> Self {
        let mut p = self.clone();
        for _ in 0..q {
            if p.coeffs.len() == 1 {
                return Self::zero(self.dim);
            }
            let shifted = p.shifted(1.0);
            p.coeffs = shifted
                .coeffs
                .iter()
                .zip(&p.coeffs)
                .map(|(a, b)| a - b)
                .take(p.coeffs.len() - 1)
                .collect();
        }
        p
    }

    /// Coefficients of `t ↦ p(t + h)`.
    pub fn shifted(&self, h: f64) -> Self {
        // repeated synthetic division (Taylor shift)
        let mut c: Vec<DVector<f64>> = self.coeffs.clone();
        let n = c.len();
        for i in 0..n {
            for j in (i..n - 1).rev() {
                let next = c[j + 1].clone();
                c[j] += next * h;
            }
        }
        Self {
            dim: self.dim,
            coeffs: c,
        }
    }

    /// Antiderivative vanishing at zero.
    pub fn antiderivative(&self) -> Self {
        let mut coeffs = vec![DVector::zeros(self.dim)];
        coeffs.extend(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(j, c)| c / (j as f64 + 1.0)),
        );
        Self {
            dim: self.dim,
            coeffs,
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }
}

/// Which operator `D` denotes: the time derivative or the forward difference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TimeDomain {
    Continuous,
    Discrete,
}

impl VectorPolynomial {
    /// `D^q` in the given domain.
    pub fn apply_operator(&self, domain: TimeDomain, q: usize) -> Self {
        match domain {
            TimeDomain::Continuous => self.derivative(q),
            TimeDomain::Discrete => self.forward_difference(q),
        }
    }

    /// `[p, Dp, …, D^{len-1} p]`.
    pub fn operator_chain(&self, domain: TimeDomain, len: usize) -> Vec<Self> {
        (0..len).map(|q| self.apply_operator(domain, q)).collect()
    }
}

/// `Σ_{i=0..n} (−1)^i C(n,i) x[k+n−i]`, the closed form of `Δⁿ x[k]`.
pub fn binomial_difference(x: &[f64], n: usize, k: usize) -> f64 {
    let mut binom = 1.0;
    let mut acc = 0.0;
    for i in 0..=n {
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        acc += sign * binom * x[k + n - i];
        binom = binom * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// Forward difference of a sampled series (length shrinks by one).
pub fn difference_series(x: &[f64]) -> Vec<f64> {
    x.windows(2).map(|w| w[1] - w[0]).collect()
}

/// Running sum `Σ_{i<k} x[i]` for `k = 0..=len`.
pub fn running_sum(x: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len() + 1);
    let mut acc = 0.0;
    out.push(acc);
    for v in x {
        acc += v;
        out.push(acc);
    }
    out
}
