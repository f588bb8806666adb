//! Fields over a coordinate chart, evaluated on jets.
//!
//! Every field is a closure from the coordinate jets `x^i` to component jets.
//! Closures must build constants from their inputs (`x.constant_like(..)` or
//! the `f64` operator impls) so the same field works for any jet dimension;
//! the Kaluza-Klein assembly relies on this to evaluate 3-chart fields on
//! 4-dimensional jets.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::{Jet, MAX_ORDER};
use crate::tensor::{permutation_sign, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Signature {
    Euclidean,
    /// One negative direction, taken to be the last axis.
    Lorentzian,
}

impl Signature {
    /// `+1` for Euclidean, `-1` for Lorentzian.
    pub fn sign(self) -> f64 {
        match self {
            Signature::Euclidean => 1.0,
            Signature::Lorentzian => -1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Signature::Euclidean => "euclidean",
            Signature::Lorentzian => "lorentzian",
        }
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

type ScalarFn = dyn Fn(&[Jet]) -> Result<Jet> + Send + Sync;
type ComponentsFn = dyn Fn(&[Jet]) -> Result<Vec<Jet>> + Send + Sync;

#[derive(Clone)]
pub struct ScalarField(Arc<ScalarFn>);

impl ScalarField {
    pub fn new(f: impl Fn(&[Jet]) -> Result<Jet> + Send + Sync + 'static) -> Self {
        ScalarField(Arc::new(f))
    }

    pub fn zero() -> Self {
        ScalarField::new(|x| Ok(x[0].zero_like()))
    }

    pub fn eval(&self, x: &[Jet]) -> Result<Jet> {
        (self.0)(x)
    }

    pub fn value_at(&self, point: &[f64]) -> Result<f64> {
        Ok(self.eval(&Jet::variables(point, 0)?)?.value())
    }
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("ScalarField(..)")
    }
}

/// Covariant vector field `a_μ`.
#[derive(Clone)]
pub struct CovectorField {
    len: usize,
    f: Arc<ComponentsFn>,
}

impl CovectorField {
    pub fn new(len: usize, f: impl Fn(&[Jet]) -> Result<Vec<Jet>> + Send + Sync + 'static) -> Self {
        CovectorField { len, f: Arc::new(f) }
    }

    pub fn zero(len: usize) -> Self {
        CovectorField::new(len, move |x| Ok(vec![x[0].zero_like(); len]))
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn eval(&self, x: &[Jet]) -> Result<Vec<Jet>> {
        let v = (self.f)(x)?;
        if v.len() != self.len {
            return Err(Error::Dimension {
                context: "covector field",
                expected: self.len,
                found: v.len(),
            });
        }
        Ok(v)
    }
}

impl fmt::Debug for CovectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CovectorField(len = {})", self.len)
    }
}

/// Signature-tagged metric `g_{ij}` on a `dim`-dimensional chart.
#[derive(Clone)]
pub struct MetricField {
    name: String,
    dim: usize,
    signature: Signature,
    f: Arc<ComponentsFn>,
}

impl fmt::Debug for MetricField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MetricField")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("signature", &self.signature)
            .finish()
    }
}

/// Metric, inverse and volume factor as jets at one point.
#[derive(Debug, Clone)]
pub struct MetricJets {
    pub point: Vec<f64>,
    pub metric: Tensor<Jet>,
    pub inverse: Tensor<Jet>,
    pub det: Jet,
    pub sqrt_abs_det: Jet,
}

impl MetricField {
    /// `f` returns the `dim × dim` components row-major; the result is
    /// symmetrized on evaluation.
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        signature: Signature,
        f: impl Fn(&[Jet]) -> Result<Vec<Jet>> + Send + Sync + 'static,
    ) -> Self {
        MetricField {
            name: name.into(),
            dim,
            signature,
            f: Arc::new(f),
        }
    }

    /// Constant diagonal metric.
    pub fn diagonal(name: impl Into<String>, diag: Vec<f64>, signature: Signature) -> Self {
        let n = diag.len();
        MetricField::new(name, n, signature, move |x| {
            let mut out = vec![x[0].zero_like(); n * n];
            for i in 0..n {
                out[i * n + i] = x[0].constant_like(diag[i]);
            }
            Ok(out)
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn signature(&self) -> Signature {
        self.signature
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Symmetrized components evaluated on the given coordinate jets.
    pub fn components(&self, x: &[Jet]) -> Result<Tensor<Jet>> {
        if x.len() != self.dim {
            return Err(Error::Dimension {
                context: "metric chart",
                expected: self.dim,
                found: x.len(),
            });
        }
        let raw = (self.f)(x)?;
        let n = self.dim;
        if raw.len() != n * n {
            return Err(Error::Dimension {
                context: "metric components",
                expected: n * n,
                found: raw.len(),
            });
        }
        Ok(Tensor::from_fn(n, 2, |i| {
            let (a, b) = (i[0], i[1]);
            if a == b {
                raw[a * n + a]
            } else {
                (raw[a * n + b] + raw[b * n + a]) * 0.5
            }
        }))
    }

    /// Plain component values at `point`.
    pub fn values_at(&self, point: &[f64]) -> Result<Tensor<f64>> {
        Ok(self.components(&Jet::variables(point, 0)?)?.values())
    }

    /// Metric, inverse and determinant jets at `point` to the given order.
    pub fn jets_at(&self, point: &[f64], order: usize) -> Result<MetricJets> {
        let x = Jet::variables(point, order)?;
        let metric = self.components(&x)?;
        let n = self.dim;
        let g0 = DMatrix::from_fn(n, n, |i, j| metric[[i, j]].value());
        let det0 = g0.determinant();
        let scale = g0.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !det0.is_finite() || det0.abs() < 1e-12 * scale.powi(n as i32) {
            return Err(Error::SingularMetric {
                point: point.to_vec(),
                det: det0,
            });
        }
        let inverse = jet_inverse(&metric, &g0);
        let det = jet_det(&metric);
        let sqrt_abs_det = (det * det0.signum()).sqrt();
        Ok(MetricJets {
            point: point.to_vec(),
            metric,
            inverse,
            det,
            sqrt_abs_det,
        })
    }
}

/// `(g0 + N)^{-1} = Σ_k (−A N)^k A` with `A = g0^{-1}`, exact in the
/// truncated algebra because `N` has no constant part.
fn jet_inverse(g: &Tensor<Jet>, g0: &DMatrix<f64>) -> Tensor<Jet> {
    let n = g.dim();
    let a = g0.clone().try_inverse().expect("checked nonsingular");
    let proto = g[[0, 0]];
    let a_jet = Tensor::from_fn(n, 2, |i| proto.constant_like(a[(i[0], i[1])]));
    // M = −A·N
    let m = Tensor::from_fn(n, 2, |i| {
        let mut s = proto.zero_like();
        for k in 0..n {
            let mut nk = g[[k, i[1]]];
            nk = nk - nk.value();
            s += nk * (-a[(i[0], k)]);
        }
        s
    });
    let mut x = a_jet.clone();
    for _ in 0..MAX_ORDER.min(proto.order()) {
        x = Tensor::from_fn(n, 2, |i| {
            let mut s = a_jet[[i[0], i[1]]];
            for k in 0..n {
                s += m[[i[0], k]] * x[[k, i[1]]];
            }
            s
        });
    }
    x
}

/// Leibniz expansion; fine for n ≤ 4.
pub(crate) fn jet_det(g: &Tensor<Jet>) -> Jet {
    let n = g.dim();
    let mut total = g[[0, 0]].zero_like();
    let mut perm: Vec<usize> = (0..n).collect();
    permutations(&mut perm, 0, &mut |p| {
        let s = permutation_sign(p);
        let mut term = g[[0, p[0]]];
        for (row, &col) in p.iter().enumerate().skip(1) {
            term *= g[[row, col]];
        }
        total += term * f64::from(s);
    });
    total
}

pub(crate) fn permutations(p: &mut Vec<usize>, k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == p.len() {
        visit(p);
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permutations(p, k + 1, visit);
        p.swap(k, i);
    }
}
