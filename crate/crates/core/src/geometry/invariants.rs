use crate::error::{Error, Result};
use crate::field::{MetricField, ScalarField};
use crate::jet::Jet;
use crate::residual::Residual;
use crate::tensor::{permutation_sign, Tensor};

use super::{christoffel, curvature_bundle, orientation, Connection, CurvatureBundle, Variance};

fn require_dim4(found: usize, context: &'static str) -> Result<()> {
    if found != 4 {
        return Err(Error::Dimension {
            context,
            expected: 4,
            found,
        });
    }
    Ok(())
}

/// `½ · ½ ε^{CDMN} T^{AB}_{MN} T_{ABCD}` for a tensor given all-up.
fn half_dual_contraction(t_up: &Tensor<f64>, g: &Tensor<f64>, eps_up: &Tensor<f64>) -> f64 {
    let n = t_up.dim();
    let t_down = crate::tensor::transform_all(t_up, g);
    let mixed = Tensor::from_fn(n, 4, |i| {
        let mut s = 0.0;
        for c in 0..n {
            for d in 0..n {
                s += t_up[[i[0], i[1], c, d]] * g[[c, i[2]]] * g[[d, i[3]]];
            }
        }
        s
    });
    let mut total = 0.0;
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    let mut dual = 0.0;
                    for m in 0..n {
                        for q in 0..n {
                            let e = eps_up[[c, d, m, q]];
                            if e != 0.0 {
                                dual += e * mixed[[a, b, m, q]];
                            }
                        }
                    }
                    total += 0.5 * dual * t_down[[a, b, c, d]];
                }
            }
        }
    }
    0.5 * total
}

/// Chern-Pontryagin density from the Riemann and from the Weyl tensor:
/// `P = ½ *R^{ABCD} R_{ABCD} = ½ *C^{ABCD} C_{ABCD}`.
pub fn pontryagin(bundle: &CurvatureBundle) -> Result<(f64, f64)> {
    require_dim4(bundle.dim(), "Pontryagin density")?;
    let g = bundle.connection.metric_values();
    let eps = bundle.connection.epsilon(Variance::Up);
    let from_riemann = half_dual_contraction(&bundle.riemann_up(), &g, &eps);
    let from_weyl = half_dual_contraction(&bundle.weyl_up, &g, &eps);
    Ok((from_riemann, from_weyl))
}

pub fn pontryagin_full(metric: &MetricField, point: &[f64]) -> Result<(f64, f64)> {
    require_dim4(metric.dim(), "Pontryagin density")?;
    pontryagin(&curvature_bundle(metric, point)?)
}

/// `(C^{ABCD} C_{ABCD}, *C^{ABCD} *C_{ABCD})`.
pub fn weyl_squared(bundle: &CurvatureBundle) -> Result<(f64, f64)> {
    let dual = bundle.dual_weyl()?;
    let g = bundle.connection.metric_values();
    let c2 = bundle.weyl_up.dot(&bundle.weyl_down);
    let dual_down = crate::tensor::transform_all(dual, &g);
    Ok((c2, dual.dot(&dual_down)))
}

#[derive(Debug, Clone)]
pub struct ChernSimons {
    /// `J^A`.
    pub current: Vec<f64>,
    /// `(1/√|g|) ∂_A(√|g| J^A)`.
    pub divergence: f64,
    /// `P` from the Riemann tensor at the same point.
    pub pontryagin: f64,
    /// `divergence / P`, when `P` is distinguishable from zero.
    pub ratio: Option<f64>,
}

/// `J^A = ε^{ABCD}(Γ^E_{BF} ∂_C Γ^F_{DE} + ⅔ Γ^E_{BF} Γ^F_{CG} Γ^G_{DE})` and its
/// divergence. `√|g| J^A` is built directly from the permutation symbol, so
/// its derivatives need no derivative of the volume factor.
pub fn chern_simons_current(metric: &MetricField, point: &[f64]) -> Result<ChernSimons> {
    require_dim4(metric.dim(), "Chern-Simons current")?;
    let conn = christoffel(metric, point)?;
    let n = 4;
    let gamma = &conn.christoffel;
    let dgamma = Tensor::from_fn(n, 4, |i| gamma[[i[0], i[1], i[2]]].partial(i[3]));
    let sign = orientation(conn.signature);
    let zero = dgamma[[0, 0, 0, 0]].zero_like();
    let mut density = vec![zero; n];
    for (a, slot) in density.iter_mut().enumerate() {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    let s = permutation_sign(&[a, b, c, d]);
                    if s == 0 {
                        continue;
                    }
                    let mut term = zero;
                    for e in 0..n {
                        for f in 0..n {
                            term += gamma[[e, b, f]] * dgamma[[f, d, e, c]];
                            for g in 0..n {
                                term += gamma[[e, b, f]] * gamma[[f, c, g]] * gamma[[g, d, e]] * (2.0 / 3.0);
                            }
                        }
                    }
                    *slot += term * (sign * f64::from(s));
                }
            }
        }
    }
    let root = conn.sqrt_abs_det.value();
    let current = density.iter().map(|j| j.value() / root).collect();
    let divergence = (0..n).map(|a| density[a].partial(a).value()).sum::<f64>() / root;

    let bundle = CurvatureBundle::from_connection(conn);
    let (p, _) = pontryagin(&bundle)?;
    let scale = bundle.riemann_down().max_abs().max(bundle.term_scale());
    let ratio = (p.abs() > 1e-8 * scale.powi(2).max(f64::MIN_POSITIVE)).then(|| divergence / p);
    Ok(ChernSimons {
        current,
        divergence,
        pontryagin: p,
        ratio,
    })
}

/// Contravariant tensor components as jets, to be differentiated.
#[derive(Debug, Clone)]
pub enum TensorJets {
    Vector(Vec<Jet>),
    Rank2(Tensor<Jet>),
}

/// `d_μ T^{μ…}`: divergence on the first index, with a Christoffel
/// correction for every index. Jets must have order ≥ 1.
pub fn covariant_divergence(conn: &Connection, t: &TensorJets) -> Vec<f64> {
    let n = conn.dim();
    let gamma = conn.christoffel.values();
    // Γ^μ_{μλ}
    let trace: Vec<f64> = (0..n).map(|l| (0..n).map(|m| gamma[[m, m, l]]).sum()).collect();
    match t {
        TensorJets::Vector(v) => {
            let mut s = 0.0;
            for m in 0..n {
                s += v[m].partial(m).value() + trace[m] * v[m].value();
            }
            vec![s]
        }
        TensorJets::Rank2(t) => (0..n)
            .map(|nu| {
                let mut s = 0.0;
                for m in 0..n {
                    s += t[[m, nu]].partial(m).value();
                    s += trace[m] * t[[m, nu]].value();
                    for l in 0..n {
                        s += gamma[[nu, m, l]] * t[[m, l]].value();
                    }
                }
                s
            })
            .collect(),
    }
}

/// Divergence of a tensor field built from the connection at `point`.
pub fn divergence_of(
    metric: &MetricField,
    point: &[f64],
    field: impl Fn(&Connection) -> Result<TensorJets>,
) -> Result<Vec<f64>> {
    let conn = christoffel(metric, point)?;
    let t = field(&conn)?;
    Ok(covariant_divergence(&conn, &t))
}

/// `d_A G^{AB}` of the Einstein tensor, judged against the largest
/// `∂_A G^{BC}`.
pub fn einstein_divergence(metric: &MetricField, point: &[f64]) -> Result<Residual> {
    let conn = christoffel(metric, point)?;
    let b = CurvatureBundle::from_connection(conn.clone());
    let ric_up = conn.raise2(&b.ricci);
    let n = conn.dim();
    let g = Tensor::from_fn(n, 2, |i| {
        ric_up[[i[0], i[1]]] - conn.inverse[[i[0], i[1]]] * b.scalar * 0.5
    });
    let mut scale = 0.0f64;
    for t in g.as_slice() {
        for a in 0..n {
            scale = scale.max(t.partial(a).value().abs());
        }
    }
    let div = covariant_divergence(&conn, &TensorJets::Rank2(g));
    Ok(Residual::new(div.iter().fold(0.0f64, |m, d| m.max(d.abs())), scale))
}

/// `e^{2σ} g`.
pub fn conformal_rescale(metric: &MetricField, sigma: &ScalarField) -> MetricField {
    let (g, s) = (metric.clone(), sigma.clone());
    let n = metric.dim();
    MetricField::new(format!("{}-rescaled", metric.name()), n, metric.signature(), move |x| {
        let w = (s.eval(x)? * 2.0).exp();
        Ok(g.components(x)?.as_slice().iter().map(|c| *c * w).collect())
    })
}

/// Change of `C^A_{BCD}` under `g → e^{2σ} g`.
pub fn weyl_conformal_residual(metric: &MetricField, sigma: &ScalarField, point: &[f64]) -> Result<Residual> {
    let a = curvature_bundle(metric, point)?;
    let b = curvature_bundle(&conformal_rescale(metric, sigma), point)?;
    let (wa, wb) = (a.weyl_mixed(), b.weyl_mixed());
    Ok(Residual::new(wa.max_abs_diff(&wb), wa.max_abs().max(a.term_scale())))
}
