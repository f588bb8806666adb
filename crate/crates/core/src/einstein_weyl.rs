//! Weyl geometry on a 3-metric: the torsion-free connection preserving the
//! conformal class, its curvature, and the Einstein-Weyl residuals.

use serde::Serialize;

use crate::error::Result;
use crate::field::{CovectorField, MetricField, ScalarField};
use crate::geometry::{
    christoffel, covariant_divergence, ricci_from_riemann, riemann_from_connection, Connection, CurvatureBundle,
    TensorJets, METRIC_ORDER,
};
use crate::jet::Jet;
use crate::kaluza_klein::{reduce, KKTriple};
use crate::residual::Residual;
use crate::tensor::{transform_all, Tensor};

/// A 3-metric with a Weyl potential `w_μ`.
#[derive(Debug, Clone)]
pub struct WeylStructure {
    pub g3: MetricField,
    pub w: CovectorField,
}

impl WeylStructure {
    pub fn new(g3: MetricField, w: CovectorField) -> Self {
        WeylStructure { g3, w }
    }

    /// The reduced 3-metric of `kk` with `w = sign · f`.
    pub fn from_kk(kk: &KKTriple, sign: f64) -> Self {
        WeylStructure {
            g3: kk.g3.clone(),
            w: kk.field_strength_covector(sign),
        }
    }
}

struct WeylJets {
    conn: Connection,
    bundle: CurvatureBundle,
    w: Vec<Jet>,
    w_up: Vec<Jet>,
    /// `w^λ_{μν}`.
    gamma: Tensor<Jet>,
    /// `d_μ w_ν`.
    dw: Tensor<Jet>,
}

impl WeylJets {
    fn new(ws: &WeylStructure, point: &[f64]) -> Result<Self> {
        let conn = christoffel(&ws.g3, point)?;
        let w = ws.w.eval(&Jet::variables(point, METRIC_ORDER)?)?;
        let w_up = conn.raise(&w);
        let g = &conn.metric;
        let gamma = Tensor::from_fn(3, 3, |i| {
            let (l, m, n) = (i[0], i[1], i[2]);
            let mut s = conn.christoffel[[l, m, n]] + w_up[l] * g[[m, n]];
            if l == n {
                s -= w[m];
            }
            if l == m {
                s -= w[n];
            }
            s
        });
        let dw = conn.covariant_derivative_covector(&w);
        let bundle = CurvatureBundle::from_connection(conn.clone());
        Ok(WeylJets {
            conn,
            bundle,
            w,
            w_up,
            gamma,
            dw,
        })
    }

    fn values(v: &[Jet]) -> Vec<f64> {
        v.iter().map(Jet::value).collect()
    }

    /// Symmetrized `d_(μ w_ν)` values.
    fn dw_sym(&self) -> Tensor<f64> {
        let d = self.dw.values();
        Tensor::from_fn(3, 2, |i| 0.5 * (d[[i[0], i[1]]] + d[[i[1], i[0]]]))
    }

    fn w_squared(&self) -> f64 {
        Self::values(&self.w)
            .iter()
            .zip(Self::values(&self.w_up))
            .map(|(a, b)| a * b)
            .sum()
    }
}

/// `w^λ_{μν} = Γ^λ_{μν} + w^λ g_μν − w_μ δ^λ_ν − w_ν δ^λ_μ`.
pub fn weyl_connection(ws: &WeylStructure, point: &[f64]) -> Result<Tensor<f64>> {
    Ok(WeylJets::new(ws, point)?.gamma.values())
}

/// `∇^W_λ g_μν − 2 w_λ g_μν`, judged against the size of `∂_λ g_μν`.
pub fn compatibility(ws: &WeylStructure, point: &[f64]) -> Result<Residual> {
    let j = WeylJets::new(ws, point)?;
    let g = j.conn.metric_values();
    let gamma = j.gamma.values();
    let w = WeylJets::values(&j.w);
    let mut max = 0.0f64;
    let mut scale = 0.0f64;
    for l in 0..3 {
        for m in 0..3 {
            for n in 0..3 {
                let dg = j.conn.metric[[m, n]].derivative(&[l]);
                let mut nabla = dg;
                for s in 0..3 {
                    nabla -= gamma[[s, l, m]] * g[[s, n]] + gamma[[s, l, n]] * g[[m, s]];
                }
                let target = 2.0 * w[l] * g[[m, n]];
                max = max.max((nabla - target).abs());
                scale = scale.max(dg.abs()).max(target.abs());
            }
        }
    }
    Ok(Residual::new(max, scale))
}

/// Curvature of the Weyl connection, with the same index layout as the
/// Riemann tensor: `^W r^K_{LMN}`, `^W r_MN = ^W r^K_{MKN}`.
#[derive(Debug, Clone)]
pub struct WeylCurvature {
    pub connection: Tensor<f64>,
    pub riemann: Tensor<f64>,
    pub ricci: Tensor<f64>,
    pub scalar: f64,
    pub ricci_sym: Tensor<f64>,
    pub ricci_antisym: Tensor<f64>,
    /// `r_μν + d_(μ w_ν) + w_μ w_ν + g_μν(d_λ w^λ − w_λ w^λ)`.
    pub ricci_sym_closed_form: Tensor<f64>,
    /// Disagreement of `ricci_sym` with the closed form.
    pub two_path: Residual,
    /// `^W r_[μν] / (∂_μ w_ν − ∂_ν w_μ)`, fitted over the components; `None`
    /// when `w` is curl-free.
    pub curl_coefficient: Option<f64>,
}

pub fn weyl_curvature(ws: &WeylStructure, point: &[f64]) -> Result<WeylCurvature> {
    let j = WeylJets::new(ws, point)?;
    let riemann = riemann_from_connection(&j.gamma);
    let ricci = ricci_from_riemann(&riemann).values();
    let ginv = j.conn.inverse_values();
    let g = j.conn.metric_values();
    let scalar = ginv.dot(&ricci);
    let ricci_sym = Tensor::from_fn(3, 2, |i| 0.5 * (ricci[[i[0], i[1]]] + ricci[[i[1], i[0]]]));
    let ricci_antisym = Tensor::from_fn(3, 2, |i| 0.5 * (ricci[[i[0], i[1]]] - ricci[[i[1], i[0]]]));

    let r = j.bundle.ricci.values();
    let dws = j.dw_sym();
    let w = WeylJets::values(&j.w);
    let div_w = ginv.dot(&j.dw.values());
    let w2 = j.w_squared();
    let closed = Tensor::from_fn(3, 2, |i| {
        let (m, n) = (i[0], i[1]);
        r[[m, n]] + dws[[m, n]] + w[m] * w[n] + g[[m, n]] * (div_w - w2)
    });
    let scale = ricci_sym.max_abs().max(closed.max_abs()).max(r.max_abs());
    let two_path = Residual::new(ricci_sym.max_abs_diff(&closed), scale);

    let curl = Tensor::from_fn(3, 2, |i| j.w[i[1]].derivative(&[i[0]]) - j.w[i[0]].derivative(&[i[1]]));
    let norm = curl.dot(&curl);
    let curl_coefficient = (norm > 0.0).then(|| ricci_antisym.dot(&curl) / norm);

    Ok(WeylCurvature {
        connection: j.gamma.values(),
        riemann: riemann.values(),
        ricci,
        scalar,
        ricci_sym,
        ricci_antisym,
        ricci_sym_closed_form: closed,
        two_path,
        curl_coefficient,
    })
}

/// Einstein-Weyl residual
/// `r_μν − ⅓g r + d_(μ w_ν) − ⅓g d·w + w_μ w_ν − ⅓g w²` (covariant).
#[derive(Debug, Clone)]
pub struct EwResidual {
    pub tensor: Tensor<f64>,
    /// `g^μν` times the residual.
    pub trace: f64,
    /// `^W r_(μν) − ⅓ g_μν ^W r` from the Weyl curvature.
    pub curvature_form: Tensor<f64>,
    /// Agreement of the two forms.
    pub agreement: Residual,
    /// Largest ingredient: `r_μν`, `d_(μ w_ν)` or `w_μ w_ν`.
    pub scale: f64,
}

impl EwResidual {
    pub fn residual(&self) -> Residual {
        Residual::new(self.tensor.max_abs(), self.scale)
    }

    /// One index raised: `E^μ_ν`.
    pub fn mixed(&self, inverse: &Tensor<f64>) -> Tensor<f64> {
        Tensor::from_fn(3, 2, |i| {
            (0..3).map(|a| inverse[[i[0], a]] * self.tensor[[a, i[1]]]).sum::<f64>()
        })
    }
}

pub fn ew_residual(ws: &WeylStructure, point: &[f64]) -> Result<EwResidual> {
    let j = WeylJets::new(ws, point)?;
    let wc = weyl_curvature(ws, point)?;
    let g = j.conn.metric_values();
    let ginv = j.conn.inverse_values();
    let r = j.bundle.ricci.values();
    let rs = j.bundle.scalar.value();
    let dws = j.dw_sym();
    let div_w = ginv.dot(&dws);
    let w = WeylJets::values(&j.w);
    let w2 = j.w_squared();
    let tensor = Tensor::from_fn(3, 2, |i| {
        let (m, n) = (i[0], i[1]);
        r[[m, n]] - g[[m, n]] * rs / 3.0 + dws[[m, n]] - g[[m, n]] * div_w / 3.0 + w[m] * w[n] - g[[m, n]] * w2 / 3.0
    });
    let curvature_form = Tensor::from_fn(3, 2, |i| wc.ricci_sym[[i[0], i[1]]] - g[[i[0], i[1]]] * wc.scalar / 3.0);
    let ww = Tensor::from_fn(3, 2, |i| w[i[0]] * w[i[1]]);
    let scale = r.max_abs().max(dws.max_abs()).max(ww.max_abs());
    Ok(EwResidual {
        trace: ginv.dot(&tensor),
        agreement: Residual::new(
            tensor.max_abs_diff(&curvature_form),
            scale.max(curvature_form.max_abs()),
        ),
        tensor,
        curvature_form,
        scale,
    })
}

/// `(e^{2σ} g, w + ∂σ)`.
pub fn gauge_transform(ws: &WeylStructure, sigma: &ScalarField) -> WeylStructure {
    let g = ws.g3.clone();
    let s = sigma.clone();
    let g3 = MetricField::new(format!("{}-gauged", g.name()), g.dim(), g.signature(), move |x| {
        let factor = (s.eval(x)? * 2.0).exp();
        Ok(g.components(x)?.as_slice().iter().map(|c| *c * factor).collect())
    });
    let w = ws.w.clone();
    let s = sigma.clone();
    let w = CovectorField::new(w.len(), move |x| {
        let sv = s.eval(x)?;
        Ok(w.eval(x)?
            .iter()
            .enumerate()
            .map(|(m, wm)| *wm + sv.partial(m))
            .collect())
    });
    WeylStructure { g3, w }
}

/// Both sides of the integrand identity
/// `d^(μ w^ν) d_(μ w_ν) = (Λ − ½r + ½w²) d·w − d^μ(r_μν w^ν − ½w_μ r + ½w_μ w²)`,
/// which holds up to the term `X^μν d_μ w_ν` built from the residual
/// `X_μν = r_μν + d_(μ w_ν) + w_μ w_ν − Λ g_μν`, `Λ` its one-third trace.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GauduchonCheck {
    pub lhs: f64,
    pub rhs: f64,
    /// `(Λ − ½r + ½w²) d·w`.
    pub first_term: f64,
    /// `X^μν d_μ w_ν`; zero wherever `X` vanishes.
    pub residual_term: f64,
    pub lambda: f64,
    /// `lhs − rhs − residual_term`.
    pub identity: Residual,
}

pub fn gauduchon_identity(ws: &WeylStructure, point: &[f64]) -> Result<GauduchonCheck> {
    let j = WeylJets::new(ws, point)?;
    let g = j.conn.metric_values();
    let ginv = j.conn.inverse_values();
    let r = j.bundle.ricci.values();
    let rs = j.bundle.scalar;
    let dw = j.dw.values();
    let dws = j.dw_sym();
    let dws_up = transform_all(&dws, &ginv);
    let w = WeylJets::values(&j.w);
    let w2 = j.w_squared();
    let div_w = ginv.dot(&dw);
    let lhs = dws_up.dot(&dws);
    let lambda = (rs.value() + div_w + w2) / 3.0;
    let x = Tensor::from_fn(3, 2, |i| {
        let (m, n) = (i[0], i[1]);
        r[[m, n]] + dws[[m, n]] + w[m] * w[n] - lambda * g[[m, n]]
    });
    let residual_term = transform_all(&x, &ginv).dot(&dw);
    let first_term = (lambda - 0.5 * rs.value() + 0.5 * w2) * div_w;

    // V_μ = r_μν w^ν − ½ w_μ r + ½ w_μ w², raised for the divergence
    let mut w2j = j.w[0] * j.w_up[0];
    for a in 1..3 {
        w2j += j.w[a] * j.w_up[a];
    }
    let v_down: Vec<Jet> = (0..3)
        .map(|m| {
            let mut s = j.w[m] * rs * -0.5 + j.w[m] * w2j * 0.5;
            for n in 0..3 {
                s += j.bundle.ricci[[m, n]] * j.w_up[n];
            }
            s
        })
        .collect();
    let v_up = j.conn.raise(&v_down);
    let div_v = covariant_divergence(&j.conn, &TensorJets::Vector(v_up))[0];
    let rhs = first_term - div_v;
    let scale = lhs
        .abs()
        .max(first_term.abs())
        .max(div_v.abs())
        .max(residual_term.abs());
    Ok(GauduchonCheck {
        lhs,
        rhs,
        first_term,
        residual_term,
        lambda,
        identity: Residual::new((lhs - rhs - residual_term).abs(), scale),
    })
}

/// `d_(μ w_ν)` at a point.
pub fn killing_tensor(ws: &WeylStructure, point: &[f64]) -> Result<Tensor<f64>> {
    let j = WeylJets::new(ws, point)?;
    Ok(j.conn.killing_residual(&j.w).0)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct GaugeFixedCheck {
    /// `r_μν − ⅓g r + w_μ w_ν − ⅓g w²`, worst over the points.
    pub ew12: Residual,
    /// `d_(μ w_ν)`, worst over the points.
    pub killing: Residual,
}

pub fn gauge_fixed_check(ws: &WeylStructure, points: &[Vec<f64>]) -> Result<GaugeFixedCheck> {
    let mut ew12 = Residual::ZERO;
    let mut killing = Residual::ZERO;
    for p in points {
        let j = WeylJets::new(ws, p)?;
        let g = j.conn.metric_values();
        let r = j.bundle.ricci.values();
        let rs = j.bundle.scalar.value();
        let w = WeylJets::values(&j.w);
        let w2 = j.w_squared();
        let t = Tensor::from_fn(3, 2, |i| {
            let (m, n) = (i[0], i[1]);
            r[[m, n]] - g[[m, n]] * rs / 3.0 + w[m] * w[n] - g[[m, n]] * w2 / 3.0
        });
        let ww = Tensor::from_fn(3, 2, |i| w[i[0]] * w[i[1]]);
        ew12 = ew12.worst(Residual::new(t.max_abs(), r.max_abs().max(ww.max_abs())));
        killing = killing.worst(j.conn.killing_residual(&j.w).1);
    }
    Ok(GaugeFixedCheck { ew12, killing })
}

/// Sweep of `r − 5f²` and of the Killing residual of `F^μ`.
#[derive(Debug, Clone, Serialize)]
pub struct Ew21Check {
    /// Mean of `r − 5f²`.
    pub c_estimate: f64,
    /// Largest deviation from the mean.
    pub spread: f64,
    pub values: Vec<f64>,
    /// Largest `|r|` or `5f²` seen.
    pub scale: f64,
    /// `d_(μ F_ν)`, worst over the points.
    pub f_killing: Residual,
}

impl Ew21Check {
    pub fn spread_residual(&self) -> Residual {
        Residual::new(self.spread, self.c_estimate.abs() + self.scale)
    }
}

pub fn ew21_constancy(kk: &KKTriple, points: &[Vec<f64>]) -> Result<Ew21Check> {
    let mut values = Vec::with_capacity(points.len());
    let mut scale = 0.0f64;
    let mut f_killing = Residual::ZERO;
    for p in points {
        let red = reduce(kk, p)?;
        values.push(red.ew21_value());
        scale = scale.max(red.scalar.abs()).max(5.0 * red.f2.abs());
        f_killing = f_killing.worst(red.f_killing);
    }
    let c_estimate = if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    };
    let spread = values.iter().fold(0.0f64, |m, v| m.max((v - c_estimate).abs()));
    Ok(Ew21Check {
        c_estimate,
        spread,
        values,
        scale,
        f_killing,
    })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::field::Signature;

    fn flat3() -> MetricField {
        MetricField::diagonal("flat3", vec![1.0; 3], Signature::Euclidean)
    }

    fn constant_w(w: [f64; 3]) -> CovectorField {
        CovectorField::new(3, move |x| Ok(w.iter().map(|v| x[0].constant_like(*v)).collect()))
    }

    fn random_pair(seed: u64) -> WeylStructure {
        let s = seed as f64 * 0.173;
        let g3 = MetricField::new("rand3", 3, Signature::Euclidean, move |x| {
            let (a, b, c) = (x[0], x[1], x[2]);
            Ok(vec![
                1.2 + (a * (0.5 + s)).sin() * 0.3,
                a * b * 0.1 + s * 0.05,
                (c * 0.4).cos() * 0.1,
                a * b * 0.1 + s * 0.05,
                1.7 + b * b * 0.2,
                b * c * 0.07,
                (c * 0.4).cos() * 0.1,
                b * c * 0.07,
                1.4 + (a * c * (0.3 + s)).exp() * 0.2,
            ])
        });
        let w = CovectorField::new(3, move |x| {
            Ok(vec![
                (x[1] * (1.0 + s)).sin() * 0.4 + x[2] * 0.1,
                x[0] * x[2] * 0.3 - s * 0.2,
                (x[0] + x[1]).cos() * 0.25,
            ])
        });
        WeylStructure::new(g3, w)
    }

    fn round_s3() -> MetricField {
        MetricField::new("s3", 3, Signature::Euclidean, |x| {
            let (chi, th) = (x[0], x[1]);
            let z = chi.zero_like();
            let s2 = chi.sin() * chi.sin();
            Ok(vec![
                chi.constant_like(1.0),
                z,
                z,
                z,
                s2,
                z,
                z,
                z,
                s2 * th.sin() * th.sin(),
            ])
        })
    }

    const P: [f64; 3] = [0.3, -0.2, 0.5];

    #[test]
    fn zero_potential_gives_christoffel_and_ricci() {
        let g = random_pair(1).g3;
        let ws = WeylStructure::new(g.clone(), CovectorField::zero(3));
        let w = weyl_connection(&ws, &P).unwrap();
        let gamma = christoffel(&g, &P).unwrap().christoffel.values();
        assert_eq!(w, gamma);
        let wc = weyl_curvature(&ws, &P).unwrap();
        let ric = crate::geometry::curvature_bundle(&g, &P).unwrap().ricci.values();
        assert!(wc.ricci.max_abs_diff(&ric) < 1e-14);
    }

    #[test]
    fn constant_potential_connection() {
        let ws = WeylStructure::new(flat3(), constant_w([1.0, 0.0, 0.0]));
        let w = weyl_connection(&ws, &[0.0; 3]).unwrap();
        assert_eq!(w[[0, 0, 0]], -1.0);
    }

    #[test]
    fn random_pairs_compatibility_and_two_paths() {
        for seed in 0..10 {
            let ws = random_pair(seed);
            assert!(compatibility(&ws, &P).unwrap().within(1e-10));
            let wc = weyl_curvature(&ws, &P).unwrap();
            assert!(wc.two_path.within(1e-9), "{seed}: {:?}", wc.two_path);
            assert!((wc.curl_coefficient.unwrap() + 1.5).abs() < 1e-12);
        }
    }

    #[test]
    fn residual_is_traceless_and_matches_curvature_form() {
        for seed in 0..10 {
            let e = ew_residual(&random_pair(seed), &P).unwrap();
            assert!(e.trace.abs() < 1e-12);
            assert!(e.agreement.within(1e-9), "{:?}", e.agreement);
        }
        let flat = ew_residual(&WeylStructure::new(flat3(), CovectorField::zero(3)), &P).unwrap();
        assert_eq!(flat.tensor.max_abs(), 0.0);
    }

    #[test]
    fn gradient_potential_is_gauge_equivalent_to_rescaled_metric() {
        let sigma = ScalarField::new(|x| Ok(x[0] * 0.3 + (x[1] * x[2]).sin() * 0.2));
        let s = sigma.clone();
        let w = CovectorField::new(3, move |x| {
            let v = s.eval(x)?;
            Ok((0..3).map(|m| v.partial(m)).collect())
        });
        let wc = weyl_curvature(&WeylStructure::new(flat3(), w), &P).unwrap();
        let s = sigma.clone();
        let rescaled = MetricField::new("rescaled", 3, Signature::Euclidean, move |x| {
            let f = (s.eval(x)? * -2.0).exp();
            let z = x[0].zero_like();
            Ok(vec![f, z, z, z, f, z, z, z, f])
        });
        let ric = crate::geometry::curvature_bundle(&rescaled, &P).unwrap().ricci.values();
        assert!(wc.ricci_sym.max_abs_diff(&ric) < 1e-12 * ric.max_abs());
    }

    #[test]
    fn gauge_transform_group_law_and_identity() {
        let ws = random_pair(3);
        let s1 = ScalarField::new(|x| Ok(x[0] * x[1] * 0.2));
        let s2 = ScalarField::new(|x| Ok((x[2] * 0.5).sin() * 0.3));
        let twice = gauge_transform(&gauge_transform(&ws, &s1), &s2);
        let once = gauge_transform(
            &ws,
            &ScalarField::new(|x| Ok(x[0] * x[1] * 0.2 + (x[2] * 0.5).sin() * 0.3)),
        );
        let x = Jet::variables(&P, 2).unwrap();
        let (a, b) = (twice.g3.values_at(&P).unwrap(), once.g3.values_at(&P).unwrap());
        assert!(a.max_abs_diff(&b) < 1e-15);
        let (wa, wb) = (twice.w.eval(&x).unwrap(), once.w.eval(&x).unwrap());
        assert!(wa.iter().zip(&wb).all(|(p, q)| (p.value() - q.value()).abs() < 1e-15));

        let same = gauge_transform(&ws, &ScalarField::zero());
        assert_eq!(same.g3.values_at(&P).unwrap(), ws.g3.values_at(&P).unwrap());
    }

    #[test]
    fn covariant_residual_is_gauge_invariant() {
        let ws = random_pair(5);
        let sigma = ScalarField::new(|x| Ok(x[0] * 0.4 - x[1] * x[2] * 0.3 + (x[2]).cos() * 0.2));
        let e0 = ew_residual(&ws, &P).unwrap();
        let moved = gauge_transform(&ws, &sigma);
        let e1 = ew_residual(&moved, &P).unwrap();
        assert!(e0.tensor.max_abs_diff(&e1.tensor) < 1e-10 * e0.tensor.max_abs());

        // one raised index picks up the factor e^{−2σ}
        let factor = (-2.0 * sigma.value_at(&P).unwrap()).exp();
        let m0 = e0.mixed(&ws.g3.values_at(&P).map(|g| inverse3(&g)).unwrap());
        let m1 = e1.mixed(&moved.g3.values_at(&P).map(|g| inverse3(&g)).unwrap());
        assert!(m1.max_abs_diff(&m0.scaled(factor)) < 1e-10 * m0.max_abs());
    }

    fn inverse3(g: &Tensor<f64>) -> Tensor<f64> {
        let m = nalgebra::Matrix3::from_fn(|i, j| g[[i, j]]).try_inverse().unwrap();
        Tensor::from_fn(3, 2, |i| m[(i[0], i[1])])
    }

    #[test]
    fn flat_with_gradient_gauge_stays_einstein_weyl() {
        let ws = WeylStructure::new(flat3(), CovectorField::zero(3));
        let moved = gauge_transform(&ws, &ScalarField::new(|x| Ok(x[0])));
        let w = moved.w.eval(&Jet::variables(&P, 2).unwrap()).unwrap();
        assert_eq!(w.iter().map(Jet::value).collect::<Vec<_>>(), vec![1.0, 0.0, 0.0]);
        let e = ew_residual(&moved, &P).unwrap();
        assert!(e.tensor.max_abs() < 1e-14);
    }

    #[test]
    fn gauduchon_identity_on_random_pairs() {
        for seed in 0..10 {
            let g = gauduchon_identity(&random_pair(seed), &P).unwrap();
            assert!(g.identity.within(1e-10), "{seed}: {g:?}");
        }
        let g = gauduchon_identity(
            &WeylStructure::new(round_s3(), CovectorField::zero(3)),
            &[1.0, 1.0, 0.0],
        )
        .unwrap();
        assert_eq!((g.lhs, g.first_term), (0.0, 0.0));
    }

    #[test]
    fn gauge_fixed_examples() {
        let pts = vec![vec![1.0, 1.0, 0.3], vec![0.6, 2.0, 1.0]];
        let c = gauge_fixed_check(&WeylStructure::new(round_s3(), CovectorField::zero(3)), &pts).unwrap();
        assert!(c.ew12.within(1e-12) && c.killing.max_abs == 0.0);

        let w = CovectorField::new(3, |x| Ok(vec![x[0], x[0].zero_like(), x[0].zero_like()]));
        let k = killing_tensor(&WeylStructure::new(flat3(), w), &P).unwrap();
        assert_eq!(k[[0, 0]], 1.0);
        assert_eq!(k.max_abs(), 1.0);
    }

    #[test]
    fn taub_nut_with_field_strength_potential() {
        let m = 1.0;
        let g3 = MetricField::new("tn3", 3, Signature::Euclidean, move |x| {
            let (r, th) = (x[0], x[1]);
            let v = 1.0 + m / r;
            let z = r.zero_like();
            let v2 = v * v;
            let s = th.sin();
            Ok(vec![v2, z, z, z, v2 * r * r, z, z, z, v2 * r * r * s * s])
        });
        let a = CovectorField::new(3, move |x| {
            let z = x[0].zero_like();
            Ok(vec![z, z, (1.0 - x[1].cos()) * m])
        });
        let kk = KKTriple::new(ScalarField::zero(), a, g3, Signature::Euclidean).unwrap();
        // c = +k here, so the potential is w = −f
        let ws = WeylStructure::from_kk(&kk, -1.0);
        let p = [2.0, PI / 3.0, 0.4];
        let e = ew_residual(&ws, &p).unwrap();
        assert!(e.residual().within(1e-10), "{:?}", e.residual());
        let g = gauduchon_identity(&ws, &p).unwrap();
        assert!(g.first_term.abs() < 1e-14);
    }

    #[test]
    fn flat_ew21() {
        let kk = KKTriple::new(
            ScalarField::zero(),
            CovectorField::zero(3),
            flat3(),
            Signature::Euclidean,
        )
        .unwrap();
        let c = ew21_constancy(&kk, &[vec![0.1, 0.2, 0.3], vec![1.0, -1.0, 0.0]]).unwrap();
        assert_eq!((c.c_estimate, c.spread), (0.0, 0.0));
    }
}
