//! Kaluza-Klein reduction of a 4-metric along the Killing direction `∂_4`.
//!
//! A 4-metric with `x⁴`-independent components is written as
//!
//! ```text
//! euclidean:  g_MN = e^{2σ} [[g_μν + a_μ a_ν,  a_μ], [a_ν,  1]]
//! lorentzian: g_MN = e^{2σ} [[g_μν − a_μ a_ν, −a_μ], [−a_ν, −1]]
//! ```
//!
//! The reduced data are `f^λ = ε^{λμν}∂_μ a_ν`, the traceless tensors
//! `c_μν = ½(r_μν − ⅓g_μν r ± (f_μ f_ν − ⅓g_μν f²))` and `k_μν = ½ d_(μ f_ν)`,
//! and `F^μ = ε^{μνλ} d_ν f_λ`. The Weyl tensor of the σ-stripped 4-metric is
//! expressed through `c` and `k`, and its Pontryagin density is `8 c^μν k_μν`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{jet_det, CovectorField, MetricField, ScalarField, Signature};
use crate::geometry::{
    christoffel, covariant_divergence, curvature_bundle, pontryagin, weyl_squared, Connection, CurvatureBundle,
    TensorJets,
};
use crate::jet::Jet;
use crate::residual::{Residual, ZERO_SCALE};
use crate::tensor::{permutation_sign, Tensor};

/// Default relative tolerance of [`classify_point`].
pub const DEFAULT_CLASS_TOL: f64 = 1e-8;

/// Absolute bound on `∂_4 g_MN` accepted by [`extract_kk`], relative to the
/// largest metric component (at least 1).
pub const KILLING_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct KKTriple {
    pub sigma: ScalarField,
    /// `a_μ` over the 3-chart.
    pub a: CovectorField,
    /// Positive definite 3-metric.
    pub g3: MetricField,
    pub signature: Signature,
}

impl KKTriple {
    pub fn new(sigma: ScalarField, a: CovectorField, g3: MetricField, signature: Signature) -> Result<Self> {
        if g3.dim() != 3 {
            return Err(Error::Dimension {
                context: "Kaluza-Klein 3-metric",
                expected: 3,
                found: g3.dim(),
            });
        }
        if a.len() != 3 {
            return Err(Error::Dimension {
                context: "Kaluza-Klein potential",
                expected: 3,
                found: a.len(),
            });
        }
        if g3.signature() != Signature::Euclidean {
            return Err(Error::Signature("the reduced 3-metric must be Euclidean".into()));
        }
        Ok(KKTriple {
            sigma,
            a,
            g3,
            signature,
        })
    }

    /// Same data with `σ = 0`.
    pub fn stripped(&self) -> KKTriple {
        KKTriple {
            sigma: ScalarField::zero(),
            ..self.clone()
        }
    }

    pub fn sigma_at(&self, point: &[f64]) -> Result<f64> {
        self.sigma.value_at(&point[..3])
    }

    /// `f_μ` as a covector field, times `sign`. Input jets of order `N` give
    /// output of order `N − 1`.
    pub fn field_strength_covector(&self, sign: f64) -> CovectorField {
        let g3 = self.g3.clone();
        let a = self.a.clone();
        CovectorField::new(3, move |x| {
            let g = g3.components(x)?;
            let av = a.eval(x)?;
            let root = jet_det(&g).sqrt();
            let curl: Vec<Jet> = (0..3)
                .map(|l| {
                    let mut s = x[0].zero_like();
                    for m in 0..3 {
                        for n in 0..3 {
                            let e = permutation_sign(&[l, m, n]);
                            if e != 0 {
                                s += av[n].partial(m) * f64::from(e);
                            }
                        }
                    }
                    s / root
                })
                .collect();
            Ok((0..3)
                .map(|m| {
                    let mut s = g[[m, 0]] * curl[0];
                    for l in 1..3 {
                        s += g[[m, l]] * curl[l];
                    }
                    s * sign
                })
                .collect())
        })
    }
}

/// The 4-metric of the ansatz, including the conformal factor.
pub fn assemble_kk(kk: &KKTriple) -> MetricField {
    let s = kk.signature.sign();
    let data = kk.clone();
    let name = format!("{}-assembled", kk.g3.name());
    MetricField::new(name, 4, kk.signature, move |x| {
        let x3 = &x[..3];
        let g = data.g3.components(x3)?;
        let a = data.a.eval(x3)?;
        let w = (data.sigma.eval(x3)? * 2.0).exp();
        let mut out = Vec::with_capacity(16);
        for m in 0..4 {
            for n in 0..4 {
                let v = match (m, n) {
                    (3, 3) => x[0].constant_like(s),
                    (3, n) => a[n] * s,
                    (m, 3) => a[m] * s,
                    (m, n) => g[[m, n]] + a[m] * a[n] * s,
                };
                out.push(v * w);
            }
        }
        Ok(out)
    })
}

/// Invert the ansatz. `check_points` are 4-chart points at which the
/// components must be independent of `x⁴` and `g_44` must carry the sign
/// required by `signature`.
pub fn extract_kk(metric4: &MetricField, signature: Signature, check_points: &[Vec<f64>]) -> Result<KKTriple> {
    if metric4.dim() != 4 {
        return Err(Error::Dimension {
            context: "Kaluza-Klein extraction",
            expected: 4,
            found: metric4.dim(),
        });
    }
    let s = signature.sign();
    for p in check_points {
        let g = metric4.components(&Jet::variables(p, 1)?)?;
        let scale = g.as_slice().iter().fold(1.0f64, |m, v| m.max(v.value().abs()));
        for row in 0..4 {
            for col in row..4 {
                let d = g[[row, col]].derivative(&[3]);
                if d.abs() > KILLING_TOL * scale {
                    return Err(Error::NotKilling {
                        row,
                        col,
                        residual: d,
                        point: p.clone(),
                    });
                }
            }
        }
        let g44 = g[[3, 3]].value();
        if g44 * s <= 0.0 {
            return Err(Error::Signature(format!(
                "g_44 = {g44} at {p:?} has the wrong sign for a {signature} reduction"
            )));
        }
    }

    let m4 = metric4.clone();
    let components = move |x: &[Jet]| -> Result<Tensor<Jet>> {
        let mut x4 = x[..3].to_vec();
        x4.push(x[0].zero_like());
        m4.components(&x4)
    };
    let comp = components.clone();
    let sigma = ScalarField::new(move |x| Ok((comp(x)?[[3, 3]] * s).ln() * 0.5));
    let comp = components.clone();
    let a = CovectorField::new(3, move |x| {
        let g = comp(x)?;
        Ok((0..3).map(|m| g[[m, 3]] / g[[3, 3]]).collect())
    });
    let comp = components;
    let g3 = MetricField::new(
        format!("{}-reduced", metric4.name()),
        3,
        Signature::Euclidean,
        move |x| {
            let g = comp(x)?;
            let g44 = g[[3, 3]];
            let conformal = (g44 * s).recip();
            let mut out = Vec::with_capacity(9);
            for m in 0..3 {
                for n in 0..3 {
                    let am = g[[m, 3]] / g44;
                    let an = g[[n, 3]] / g44;
                    out.push(g[[m, n]] * conformal - am * an * s);
                }
            }
            Ok(out)
        },
    );
    KKTriple::new(sigma, a, g3, signature)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PointClass {
    #[serde(rename = "trivial")]
    Trivial,
    #[serde(rename = "electric")]
    Electric,
    #[serde(rename = "magnetic")]
    Magnetic,
    #[serde(rename = "null_general")]
    NullGeneral,
    #[serde(rename = "nonzero_P")]
    NonzeroP,
}

impl PointClass {
    pub fn as_str(self) -> &'static str {
        match self {
            PointClass::Trivial => "trivial",
            PointClass::Electric => "electric",
            PointClass::Magnetic => "magnetic",
            PointClass::NullGeneral => "null_general",
            PointClass::NonzeroP => "nonzero_P",
        }
    }
}

impl std::fmt::Display for PointClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Jets of the 3-geometry and of `f` at one point.
struct ReducedJets {
    conn: Connection,
    bundle: CurvatureBundle,
    a: Vec<f64>,
    f_up: Vec<Jet>,
    f_down: Vec<Jet>,
    /// `d_μ f_ν`.
    df: Tensor<Jet>,
    sign: f64,
}

impl ReducedJets {
    fn new(kk: &KKTriple, point: &[f64]) -> Result<Self> {
        let point = &point[..3];
        let conn = christoffel(&kk.g3, point)?;
        let x = Jet::variables(point, crate::geometry::METRIC_ORDER)?;
        let a = kk.a.eval(&x)?;
        let eps = conn.epsilon_up_jets();
        let f_up: Vec<Jet> = (0..3)
            .map(|l| {
                let mut s = a[0].partial(0).zero_like();
                for m in 0..3 {
                    for n in 0..3 {
                        if m != n && l != m && l != n {
                            s += eps[[l, m, n]] * a[n].partial(m);
                        }
                    }
                }
                s
            })
            .collect();
        let f_down = conn.lower(&f_up);
        let df = conn.covariant_derivative_covector(&f_down);
        let bundle = CurvatureBundle::from_connection(conn.clone());
        Ok(ReducedJets {
            conn,
            bundle,
            a: a.iter().map(Jet::value).collect(),
            f_up,
            f_down,
            df,
            sign: kk.signature.sign(),
        })
    }

    fn f2(&self) -> Jet {
        let mut s = self.f_up[0] * self.f_down[0];
        for i in 1..3 {
            s += self.f_up[i] * self.f_down[i];
        }
        s
    }

    fn reduce(&self) -> ReducedBundle {
        let g = self.conn.metric_values();
        let ginv = self.conn.inverse_values();
        let ric = self.bundle.ricci.values();
        let r = self.bundle.scalar.value();
        let fu: Vec<f64> = self.f_up.iter().map(Jet::value).collect();
        let fd: Vec<f64> = self.f_down.iter().map(Jet::value).collect();
        let f2: f64 = fu.iter().zip(&fd).map(|(a, b)| a * b).sum();
        let df = self.df.values();
        let s = self.sign;
        let c = Tensor::from_fn(3, 2, |i| {
            let (m, n) = (i[0], i[1]);
            0.5 * (ric[[m, n]] - g[[m, n]] * r / 3.0 + s * (fd[m] * fd[n] - g[[m, n]] * f2 / 3.0))
        });
        let k = Tensor::from_fn(3, 2, |i| 0.25 * (df[[i[0], i[1]]] + df[[i[1], i[0]]]));
        let c_up = crate::tensor::transform_all(&c, &ginv);
        let k_up = crate::tensor::transform_all(&k, &ginv);
        let c_dot_k = c_up.dot(&k);

        // F^μ = ε^{μνλ} d_ν f_λ, kept as jets for its Killing residual
        let eps = self.conn.epsilon_up_jets();
        let big_f_up: Vec<Jet> = (0..3)
            .map(|m| {
                let mut acc = self.df[[0, 0]].zero_like();
                for nu in 0..3 {
                    for l in 0..3 {
                        if m != nu && m != l && nu != l {
                            acc += eps[[m, nu, l]] * self.df[[nu, l]];
                        }
                    }
                }
                acc
            })
            .collect();
        let big_f_down = self.conn.lower(&big_f_up);
        let (_, f_killing) = self.conn.killing_residual(&big_f_down);
        let divergence_f = covariant_divergence(&self.conn, &TensorJets::Vector(self.f_up.clone()))[0];

        let mut scale = ric.max_abs().max(df.max_abs()).max(self.bundle.term_scale());
        for m in 0..3 {
            for n in 0..3 {
                scale = scale.max((fd[m] * fd[n]).abs());
            }
        }
        let c_norm = c_up.dot(&c).abs().sqrt();
        let k_norm = k_up.dot(&k).abs().sqrt();
        let trace_c = ginv.dot(&c);
        let trace_k = ginv.dot(&k);
        let mut out = ReducedBundle {
            point: self.conn.point.clone(),
            signature: if s > 0.0 {
                Signature::Euclidean
            } else {
                Signature::Lorentzian
            },
            metric: g,
            inverse: ginv,
            a: self.a.clone(),
            ricci: ric,
            scalar: r,
            f_up: fu,
            f_down: fd,
            f2,
            df,
            c,
            k,
            c_norm,
            k_norm,
            c_dot_k,
            trace_c,
            trace_k,
            p_reduced: 8.0 * c_dot_k,
            big_f: big_f_up.iter().map(Jet::value).collect(),
            f_killing,
            divergence_f,
            scale,
            point_class: PointClass::Trivial,
        };
        out.point_class = out.classify(DEFAULT_CLASS_TOL);
        out
    }
}

/// Reduced quantities at one point of the 3-chart (index positions as
/// named: `c`, `k`, `df` are covariant).
#[derive(Debug, Clone)]
pub struct ReducedBundle {
    pub point: Vec<f64>,
    pub signature: Signature,
    pub metric: Tensor<f64>,
    pub inverse: Tensor<f64>,
    pub a: Vec<f64>,
    pub ricci: Tensor<f64>,
    pub scalar: f64,
    pub f_up: Vec<f64>,
    pub f_down: Vec<f64>,
    pub f2: f64,
    /// `d_μ f_ν`.
    pub df: Tensor<f64>,
    pub c: Tensor<f64>,
    pub k: Tensor<f64>,
    pub c_norm: f64,
    pub k_norm: f64,
    pub c_dot_k: f64,
    pub trace_c: f64,
    pub trace_k: f64,
    /// `8 c^μν k_μν`.
    pub p_reduced: f64,
    /// `F^μ`.
    pub big_f: Vec<f64>,
    /// `d_(μ F_ν)`.
    pub f_killing: Residual,
    /// `d_μ f^μ`.
    pub divergence_f: f64,
    /// Largest input to `c` and `k`: Ricci, `f_μ f_ν`, `d_μ f_ν` and the
    /// Christoffel terms of the 3-metric.
    pub scale: f64,
    /// Class at [`DEFAULT_CLASS_TOL`].
    pub point_class: PointClass,
}

impl ReducedBundle {
    /// `tol` is relative: norms are compared with `tol · scale`, and the
    /// orthogonality test uses `|c·k| < tol ‖c‖ ‖k‖`.
    pub fn classify(&self, tol: f64) -> PointClass {
        let abs_tol = tol * self.scale.max(ZERO_SCALE);
        let c_small = self.c_norm < abs_tol;
        let k_small = self.k_norm < abs_tol;
        match (c_small, k_small) {
            (true, true) => PointClass::Trivial,
            (false, true) => PointClass::Electric,
            (true, false) => PointClass::Magnetic,
            (false, false) if self.c_dot_k.abs() < tol * self.c_norm * self.k_norm => PointClass::NullGeneral,
            (false, false) => PointClass::NonzeroP,
        }
    }

    /// Tracelessness of `c` and `k` relative to their norms.
    pub fn trace_residual(&self) -> Residual {
        Residual::new(self.trace_c.abs(), self.c_norm.max(self.scale))
            .worst(Residual::new(self.trace_k.abs(), self.k_norm.max(self.scale)))
    }

    /// `c = sign·k` componentwise.
    pub fn duality_residual(&self, sign: f64) -> Residual {
        let diff = self.c.max_abs_diff(&self.k.scaled(sign));
        Residual::new(diff, self.c.max_abs().max(self.k.max_abs()))
    }

    /// `r − 5f²`.
    pub fn ew21_value(&self) -> f64 {
        self.scalar - 5.0 * self.f2
    }
}

pub fn reduce(kk: &KKTriple, point: &[f64]) -> Result<ReducedBundle> {
    Ok(ReducedJets::new(kk, point)?.reduce())
}

pub fn field_strength(kk: &KKTriple, point: &[f64]) -> Result<Vec<f64>> {
    Ok(reduce(kk, point)?.f_up)
}

pub fn c_tensor(kk: &KKTriple, point: &[f64]) -> Result<Tensor<f64>> {
    Ok(reduce(kk, point)?.c)
}

pub fn k_tensor(kk: &KKTriple, point: &[f64]) -> Result<Tensor<f64>> {
    Ok(reduce(kk, point)?.k)
}

/// `F^μ`.
pub fn curl_of_field_strength(kk: &KKTriple, point: &[f64]) -> Result<Vec<f64>> {
    Ok(reduce(kk, point)?.big_f)
}

pub fn pontryagin_reduced(kk: &KKTriple, point: &[f64]) -> Result<f64> {
    Ok(reduce(kk, point)?.p_reduced)
}

pub fn classify_point(kk: &KKTriple, point: &[f64], tol: f64) -> Result<PointClass> {
    Ok(reduce(kk, point)?.classify(tol))
}

/// 4-chart point on the `x⁴ = 0` slice.
pub fn point4(point: &[f64]) -> Vec<f64> {
    let mut p = point[..3].to_vec();
    p.push(point.get(3).copied().unwrap_or(0.0));
    p
}

/// Deviations of the directly computed Weyl tensor of the σ-stripped metric
/// from the reduced formulas.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ReductionResiduals {
    /// `C^{μνλτ} = 2(g^{μ[λ}c^{τ]ν} − g^{ν[λ}c^{τ]μ})`.
    pub weyl_projector: Residual,
    /// `C^{μνλτ} = −ε^{μνα}ε^{λτβ}c_αβ`.
    pub weyl_epsilon: Residual,
    /// `C^{μνλ4} + C^{μνλτ}a_τ = −ε^{μντ}k^λ_τ`.
    pub weyl_mixed: Residual,
    /// `*C^{στμν} = ε^{μνα}g_αβ(C^{στβ4} + C^{στβλ}a_λ)`.
    pub dual_spatial: Residual,
    /// `*C^{στμ4} + *C^{στμν}a_ν = ±½ε^{μαβ}g_αγ g_βδ C^{στγδ}`, with the
    /// minus sign in Lorentzian signature.
    pub dual_mixed: Residual,
}

impl ReductionResiduals {
    pub fn worst(&self) -> Residual {
        self.weyl_projector
            .worst(self.weyl_epsilon)
            .worst(self.weyl_mixed)
            .worst(self.dual_spatial)
            .worst(self.dual_mixed)
    }
}

/// Pontryagin density three ways, and the Weyl-block split of the σ-stripped
/// density.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PontryaginCheck {
    /// From the Riemann tensor of the full metric.
    pub riemann: f64,
    /// From the Weyl tensor of the full metric.
    pub weyl: f64,
    /// `8 c^μν k_μν`.
    pub reduced: f64,
    pub sigma: f64,
    /// `e^{−4σ} · 8 c^μν k_μν`.
    pub restored: f64,
    /// `½ *C^{αβγδ}C_αβγδ`, `2 *C^{αβγ4}C_αβγ4`, `2 *C^{α4β4}C_α4β4` of the
    /// σ-stripped metric.
    pub blocks: [f64; 3],
    /// Curvature scale of the full metric, squared.
    pub scale: f64,
}

impl PontryaginCheck {
    /// Worst mutual disagreement of the three evaluations.
    pub fn residual(&self) -> Residual {
        let vals = [self.riemann, self.weyl, self.restored];
        let mut max = 0.0f64;
        for i in 0..3 {
            for j in i + 1..3 {
                max = max.max((vals[i] - vals[j]).abs());
            }
        }
        let size = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        // relative where the density is resolvable, absolute at curvature scale otherwise
        if size > 1e-8 * self.scale {
            Residual::new(max, size)
        } else {
            Residual::new(max, self.scale)
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct FootnoteCheck {
    pub weyl_squared: f64,
    pub dual_weyl_squared: f64,
    /// `8(c·c ± k·k)`.
    pub reduced: f64,
    pub residual: Residual,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct DualityCheck {
    /// `c = +k` and `c = −k`.
    pub reduced_plus: Residual,
    pub reduced_minus: Residual,
    /// `*C = +C` and `*C = −C` for the σ-stripped metric.
    pub weyl_plus: Residual,
    pub weyl_minus: Residual,
}

/// Everything evaluated at one point of a reduction: the reduced bundle and
/// the curvature of the σ-stripped 4-metric.
pub struct KKPoint {
    pub reduced: ReducedBundle,
    pub stripped: CurvatureBundle,
    jets: ReducedJets,
    kk: KKTriple,
}

impl KKPoint {
    pub fn new(kk: &KKTriple, point: &[f64]) -> Result<Self> {
        let jets = ReducedJets::new(kk, point)?;
        let reduced = jets.reduce();
        let stripped = curvature_bundle(&assemble_kk(&kk.stripped()), &point4(point))?;
        Ok(KKPoint {
            reduced,
            stripped,
            jets,
            kk: kk.clone(),
        })
    }

    pub fn reduction_residuals(&self) -> Result<ReductionResiduals> {
        let r = &self.reduced;
        let c4 = &self.stripped.weyl_up;
        let d4 = self.stripped.dual_weyl()?;
        let g = &r.metric;
        let ginv = &r.inverse;
        let a = &r.a;
        let eps = epsilon3(r.metric.clone());
        let k_mixed = Tensor::from_fn(3, 2, |i| (0..3).map(|x| ginv[[i[0], x]] * r.k[[x, i[1]]]).sum::<f64>());
        let c_up = crate::tensor::transform_all(&r.c, ginv);
        let scale = c4.max_abs().max(d4.max_abs());

        // C^{μνλ4} + C^{μνλτ}a_τ and its dual analogue
        let shifted = |t: &Tensor<f64>, m: usize, n: usize, l: usize| -> f64 {
            t[[m, n, l, 3]] + (0..3).map(|x| t[[m, n, l, x]] * a[x]).sum::<f64>()
        };

        let mut proj = 0.0f64;
        let mut eps_form = 0.0f64;
        let mut mixed = 0.0f64;
        let mut dual1 = 0.0f64;
        let mut dual2 = 0.0f64;
        let dual_sign = r.signature.sign();
        for m in 0..3 {
            for n in 0..3 {
                for l in 0..3 {
                    for t in 0..3 {
                        let c = c4[[m, n, l, t]];
                        let p = ginv[[m, l]] * c_up[[t, n]] - ginv[[m, t]] * c_up[[l, n]] - ginv[[n, l]] * c_up[[t, m]]
                            + ginv[[n, t]] * c_up[[l, m]];
                        proj = proj.max((c - p).abs());
                        let mut e = 0.0;
                        for x in 0..3 {
                            for y in 0..3 {
                                e -= eps[[m, n, x]] * eps[[l, t, y]] * r.c[[x, y]];
                            }
                        }
                        eps_form = eps_form.max((c - e).abs());

                        // dual, spatial: indices σ=m, τ=n, μ=l, ν=t
                        let mut rhs = 0.0;
                        for x in 0..3 {
                            for y in 0..3 {
                                rhs += eps[[l, t, x]] * g[[x, y]] * shifted(c4, m, n, y);
                            }
                        }
                        dual1 = dual1.max((d4[[m, n, l, t]] - rhs).abs());
                    }
                    let lhs = shifted(c4, m, n, l);
                    let rhs: f64 = -(0..3).map(|t| eps[[m, n, t]] * k_mixed[[l, t]]).sum::<f64>();
                    mixed = mixed.max((lhs - rhs).abs());

                    let lhs = shifted(d4, m, n, l);
                    let mut rhs = 0.0;
                    for x in 0..3 {
                        for y in 0..3 {
                            for gg in 0..3 {
                                for d in 0..3 {
                                    rhs += eps[[l, x, y]] * g[[x, gg]] * g[[y, d]] * c4[[m, n, gg, d]];
                                }
                            }
                        }
                    }
                    dual2 = dual2.max((lhs - dual_sign * 0.5 * rhs).abs());
                }
            }
        }
        Ok(ReductionResiduals {
            weyl_projector: Residual::new(proj, scale),
            weyl_epsilon: Residual::new(eps_form, scale),
            weyl_mixed: Residual::new(mixed, scale),
            dual_spatial: Residual::new(dual1, scale),
            dual_mixed: Residual::new(dual2, scale),
        })
    }

    pub fn pontryagin(&self) -> Result<PontryaginCheck> {
        let p4 = point4(&self.reduced.point);
        let full = curvature_bundle(&assemble_kk(&self.kk), &p4)?;
        let (riemann, weyl) = pontryagin(&full)?;
        let sigma = self.kk.sigma_at(&p4)?;
        let reduced = self.reduced.p_reduced;
        let blocks = self.pontryagin_blocks()?;
        let scale = full.riemann_down().max_abs().max(full.term_scale()).powi(2);
        Ok(PontryaginCheck {
            riemann,
            weyl,
            reduced,
            sigma,
            restored: (-4.0 * sigma).exp() * reduced,
            blocks,
            scale,
        })
    }

    fn pontryagin_blocks(&self) -> Result<[f64; 3]> {
        let d = self.stripped.dual_weyl()?;
        let c = &self.stripped.weyl_down;
        let mut out = [0.0; 3];
        for a in 0..3 {
            for b in 0..3 {
                for g in 0..3 {
                    for dd in 0..3 {
                        out[0] += 0.5 * d[[a, b, g, dd]] * c[[a, b, g, dd]];
                    }
                    out[1] += 2.0 * d[[a, b, g, 3]] * c[[a, b, g, 3]];
                }
                out[2] += 2.0 * d[[a, 3, b, 3]] * c[[a, 3, b, 3]];
            }
        }
        Ok(out)
    }

    pub fn footnote(&self) -> Result<FootnoteCheck> {
        let (c2, d2) = weyl_squared(&self.stripped)?;
        let r = &self.reduced;
        let c_up = crate::tensor::transform_all(&r.c, &r.inverse);
        let k_up = crate::tensor::transform_all(&r.k, &r.inverse);
        let reduced = 8.0 * (c_up.dot(&r.c) + r.signature.sign() * k_up.dot(&r.k));
        let residual = Residual::new((c2 - reduced).abs(), c2.abs().max(reduced.abs()));
        Ok(FootnoteCheck {
            weyl_squared: c2,
            dual_weyl_squared: d2,
            reduced,
            residual,
        })
    }

    pub fn duality(&self) -> Result<DualityCheck> {
        let d = self.stripped.dual_weyl()?;
        let c = &self.stripped.weyl_up;
        let scale = c.max_abs().max(d.max_abs());
        Ok(DualityCheck {
            reduced_plus: self.reduced.duality_residual(1.0),
            reduced_minus: self.reduced.duality_residual(-1.0),
            weyl_plus: Residual::new(d.max_abs_diff(c), scale),
            weyl_minus: Residual::new(d.max_abs_diff(&c.scaled(-1.0)), scale),
        })
    }

    pub fn currents(&self) -> Currents {
        currents_from(&self.jets)
    }
}

fn epsilon3(g: Tensor<f64>) -> Tensor<f64> {
    let det = nalgebra::Matrix3::from_fn(|i, j| g[[i, j]]).determinant();
    let inv_root = 1.0 / det.abs().sqrt();
    Tensor::from_fn(3, 3, |i| f64::from(permutation_sign(i)) * inv_root)
}

pub fn reduced_weyl_check(kk: &KKTriple, point: &[f64]) -> Result<ReductionResiduals> {
    KKPoint::new(kk, point)?.reduction_residuals()
}

pub fn pontryagin_check(kk: &KKTriple, point: &[f64]) -> Result<PontryaginCheck> {
    KKPoint::new(kk, point)?.pontryagin()
}

pub fn footnote_check(kk: &KKTriple, point: &[f64]) -> Result<FootnoteCheck> {
    KKPoint::new(kk, point)?.footnote()
}

/// The three currents of the reduced constraint analysis and their
/// divergences.
#[derive(Debug, Clone, Serialize)]
pub struct Currents {
    /// `j = f²`.
    pub scalar: f64,
    /// `∂_μ j`.
    pub scalar_gradient: Vec<f64>,
    /// `j^{μν} = g^{μν}(r ∓ 2f²) ± 6f^μ f^ν`.
    pub tensor: Vec<f64>,
    /// `d_μ j^{μν}`.
    pub tensor_divergence: Vec<f64>,
    /// `j^μ = r^{μν}f_ν − ½ r f^μ ± ½ f² f^μ`.
    pub vector: Vec<f64>,
    /// `d_μ j^μ`.
    pub vector_divergence: f64,
    /// `(r^{μν} − ⅓g^{μν}r ± f^μ f^ν ∓ ⅓g^{μν}f²) d_μ f_ν`, expanded directly.
    pub constraint_contraction: f64,
    /// `r^{μν} d_μ f_ν ± ½ d_μ(f² f^μ)`.
    pub constraint_divergence_form: f64,
    /// `8 c^μν k_μν`.
    pub p_reduced: f64,
    /// Curvature scale of the divergence terms.
    pub scale: f64,
}

pub fn currents(kk: &KKTriple, point: &[f64]) -> Result<Currents> {
    Ok(currents_from(&ReducedJets::new(kk, point)?))
}

fn currents_from(j: &ReducedJets) -> Currents {
    let s = j.sign;
    let conn = &j.conn;
    let f2 = j.f2();
    let r = j.bundle.scalar;
    let ric_up = conn.raise2(&j.bundle.ricci);
    let inv = &conn.inverse;
    let fu = &j.f_up;

    let scalar_gradient: Vec<f64> = (0..3).map(|m| f2.partial(m).value()).collect();
    let tensor = Tensor::from_fn(3, 2, |i| {
        let (m, n) = (i[0], i[1]);
        inv[[m, n]] * (r - f2 * (2.0 * s)) + fu[m] * fu[n] * (6.0 * s)
    });
    let tensor_divergence = covariant_divergence(conn, &TensorJets::Rank2(tensor.clone()));
    let vector: Vec<Jet> = (0..3)
        .map(|m| {
            let mut acc = fu[m] * r * -0.5 + f2 * fu[m] * (0.5 * s);
            for n in 0..3 {
                acc += ric_up[[m, n]] * j.f_down[n];
            }
            acc
        })
        .collect();
    let vector_divergence = covariant_divergence(conn, &TensorJets::Vector(vector.clone()))[0];

    let df = j.df.values();
    let ginv = conn.inverse_values();
    let ric_up_v = ric_up.values();
    let fv: Vec<f64> = fu.iter().map(Jet::value).collect();
    let f2v = f2.value();
    let rv = r.value();
    let mut contraction = 0.0;
    let mut ricci_df = 0.0;
    for m in 0..3 {
        for n in 0..3 {
            let t = ric_up_v[[m, n]] - ginv[[m, n]] * rv / 3.0 + s * (fv[m] * fv[n] - ginv[[m, n]] * f2v / 3.0);
            contraction += t * df[[m, n]];
            ricci_df += ric_up_v[[m, n]] * df[[m, n]];
        }
    }
    let cubic: Vec<Jet> = fu.iter().map(|f| f2 * *f).collect();
    let cubic_div = covariant_divergence(conn, &TensorJets::Vector(cubic))[0];
    let divergence_form = ricci_df + 0.5 * s * cubic_div;

    let mut scale = ricci_df.abs().max(cubic_div.abs()).max(contraction.abs());
    for t in tensor.as_slice() {
        for a in 0..3 {
            scale = scale.max(t.partial(a).value().abs());
        }
    }
    let reduced = j.reduce();
    Currents {
        scalar: f2v,
        scalar_gradient,
        tensor: tensor.values().as_slice().to_vec(),
        tensor_divergence,
        vector: vector.iter().map(Jet::value).collect(),
        vector_divergence,
        constraint_contraction: contraction,
        constraint_divergence_form: divergence_form,
        p_reduced: reduced.p_reduced,
        scale,
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;

    fn flat3() -> MetricField {
        MetricField::diagonal("flat3", vec![1.0; 3], Signature::Euclidean)
    }

    fn triple(a: CovectorField, sig: Signature) -> KKTriple {
        KKTriple::new(ScalarField::zero(), a, flat3(), sig).unwrap()
    }

    fn rotation_potential() -> CovectorField {
        CovectorField::new(3, |x| Ok(vec![x[1] * -0.5, x[0] * 0.5, x[0].zero_like()]))
    }

    fn taub_nut(m: f64) -> KKTriple {
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
        let sigma = ScalarField::new(move |x| Ok((1.0 + m / x[0]).ln() * -0.5));
        KKTriple::new(sigma, a, g3, Signature::Euclidean).unwrap()
    }

    /// Generic smooth data.
    fn wobbly(sig: Signature) -> KKTriple {
        let g3 = MetricField::new("w3", 3, Signature::Euclidean, |x| {
            let (a, b, c) = (x[0], x[1], x[2]);
            Ok(vec![
                1.0 + a * a / 5.0,
                a * b / 7.0,
                a.zero_like(),
                a * b / 7.0,
                2.0 + c.sin() / 3.0,
                b / 9.0,
                a.zero_like(),
                b / 9.0,
                1.5 + a * c / 8.0,
            ])
        });
        let a = CovectorField::new(3, |x| {
            Ok(vec![
                x[1].sin() * x[2] / 3.0,
                x[0] * x[0] / 4.0 + x[2] / 5.0,
                x[0] * x[1] / 2.0,
            ])
        });
        let sigma = ScalarField::new(|x| Ok(x[0] * 0.2 - x[2] * x[1] * 0.1));
        KKTriple::new(sigma, a, g3, sig).unwrap()
    }

    fn kerr(m: f64, a: f64) -> MetricField {
        MetricField::new("kerr", 4, Signature::Lorentzian, move |x| {
            let (r, th) = (x[0], x[1]);
            let z = r.zero_like();
            let (s, c) = (th.sin(), th.cos());
            let sigma = r * r + a * a * c * c;
            let delta = r * r - 2.0 * m * r + a * a;
            let gpp = (r * r + a * a + 2.0 * m * a * a * r * s * s / sigma) * s * s;
            let gtp = -2.0 * m * a * r * s * s / sigma;
            let gtt = -(1.0 - 2.0 * m * r / sigma);
            Ok(vec![
                sigma / delta,
                z,
                z,
                z,
                z,
                sigma,
                z,
                z,
                z,
                z,
                gpp,
                gtp,
                z,
                z,
                gtp,
                gtt,
            ])
        })
    }

    #[test]
    fn assembles_identity_and_minkowski() {
        let e = assemble_kk(&triple(CovectorField::zero(3), Signature::Euclidean));
        let g = e.values_at(&[0.3, 0.2, 0.1, 0.0]).unwrap();
        assert_eq!(
            g.as_slice(),
            Tensor::from_fn(4, 2, |i| f64::from(u8::from(i[0] == i[1]))).as_slice()
        );
        let l = assemble_kk(&triple(CovectorField::zero(3), Signature::Lorentzian));
        let g = l.values_at(&[0.3, 0.2, 0.1, 0.0]).unwrap();
        assert_eq!([g[[0, 0]], g[[1, 1]], g[[2, 2]], g[[3, 3]]], [1.0, 1.0, 1.0, -1.0]);
    }

    #[test]
    fn taub_nut_line_element() {
        let m = 1.0;
        let g = assemble_kk(&taub_nut(m)).values_at(&[2.0, PI / 3.0, 0.0, 0.0]).unwrap();
        let (r, th) = (2.0, PI / 3.0);
        let v = 1.0 + m / r;
        let ap = m * (1.0 - th.cos());
        // V^{-1}(dτ + a)^2 + V(dr² + r²dθ² + r² sin²θ dφ²)
        assert!((g[[0, 0]] - v).abs() < 1e-14);
        assert!((g[[1, 1]] - v * r * r).abs() < 1e-14);
        assert!((g[[2, 2]] - (v * r * r * th.sin().powi(2) + ap * ap / v)).abs() < 1e-14);
        assert!((g[[2, 3]] - ap / v).abs() < 1e-14);
        assert!((g[[3, 3]] - 1.0 / v).abs() < 1e-14);
    }

    #[test]
    fn extract_round_trip() {
        let tn = taub_nut(1.0);
        let m4 = assemble_kk(&tn);
        let p = vec![1.7, 1.0, 0.4, 0.0];
        let back = assemble_kk(&extract_kk(&m4, Signature::Euclidean, std::slice::from_ref(&p)).unwrap());
        let (g0, g1) = (m4.values_at(&p).unwrap(), back.values_at(&p).unwrap());
        assert!(g0.max_abs_diff(&g1) < 1e-12 * g0.max_abs());
    }

    #[test]
    fn extract_schwarzschild_and_kerr() {
        let p = vec![4.0, 1.0, 0.0, 0.0];
        let kk = extract_kk(&kerr(1.0, 0.0), Signature::Lorentzian, std::slice::from_ref(&p)).unwrap();
        assert!((kk.sigma_at(&p).unwrap() - 0.5 * 0.5f64.ln()).abs() < 1e-15);
        let a = kk.a.eval(&Jet::variables(&p[..3], 0).unwrap()).unwrap();
        assert!(a.iter().all(|x| x.value() == 0.0));

        let p = vec![5.0, PI / 4.0, 0.0, 0.0];
        let metric = kerr(1.0, 0.6);
        let g = metric.values_at(&p).unwrap();
        let kk = extract_kk(&metric, Signature::Lorentzian, std::slice::from_ref(&p)).unwrap();
        let a = kk.a.eval(&Jet::variables(&p[..3], 0).unwrap()).unwrap();
        assert!((a[2].value() - g[[2, 3]] / g[[3, 3]]).abs() < 1e-15);
    }

    #[test]
    fn extract_rejects_bad_input() {
        let moving = MetricField::new("moving", 4, Signature::Euclidean, |x| {
            let z = x[0].zero_like();
            let one = x[0].constant_like(1.0);
            Ok(vec![
                one + x[3] * 0.1,
                z,
                z,
                z,
                z,
                one,
                z,
                z,
                z,
                z,
                one,
                z,
                z,
                z,
                z,
                one,
            ])
        });
        let p = vec![vec![0.0; 4]];
        assert!(matches!(
            extract_kk(&moving, Signature::Euclidean, &p),
            Err(Error::NotKilling { row: 0, col: 0, .. })
        ));
        let mink = MetricField::diagonal("mink", vec![1.0, 1.0, 1.0, -1.0], Signature::Lorentzian);
        assert!(matches!(
            extract_kk(&mink, Signature::Euclidean, &p),
            Err(Error::Signature(_))
        ));
    }

    #[test]
    fn constant_curl() {
        let kk = triple(rotation_potential(), Signature::Euclidean);
        let r = reduce(&kk, &[0.3, -0.7, 0.2]).unwrap();
        assert_eq!(r.f_up, vec![0.0, 0.0, 1.0]);
        assert!(r.big_f.iter().all(|v| *v == 0.0));
        let r = reduce(&triple(CovectorField::zero(3), Signature::Euclidean), &[0.1, 0.2, 0.3]).unwrap();
        assert!(r.f_up.iter().all(|v| *v == 0.0) && r.c.max_abs() == 0.0 && r.k.max_abs() == 0.0);
        assert_eq!(r.point_class, PointClass::Trivial);
    }

    #[test]
    fn monopole_field() {
        // f^r = ε^{rθφ} ∂_θ a_φ with √g = V³ r² sinθ
        let m = 1.0;
        let (r, th) = (2.0, 1.1);
        let red = reduce(&taub_nut(m), &[r, th, 0.3]).unwrap();
        let v: f64 = 1.0 + m / r;
        let expected = m / (v.powi(3) * r * r);
        assert!((red.f_up[0] - expected).abs() < 1e-14);
        assert!(red.f_up[1].abs() < 1e-15 && red.f_up[2].abs() < 1e-15);
    }

    #[test]
    fn taub_nut_is_self_dual() {
        let tn = taub_nut(1.0);
        for p in [[2.0, 1.0, 0.3], [0.7, 2.1, 4.0], [4.5, 0.4, 1.0]] {
            let kp = KKPoint::new(&tn, &p).unwrap();
            let d = kp.duality().unwrap();
            assert!(d.reduced_plus.within(1e-10), "{d:?}");
            assert!(d.weyl_plus.within(1e-10), "{d:?}");
            assert!(kp.reduction_residuals().unwrap().worst().within(1e-10));
        }
    }

    #[test]
    fn reduction_formulas_on_generic_data() {
        for sig in [Signature::Euclidean, Signature::Lorentzian] {
            let kk = wobbly(sig);
            let kp = KKPoint::new(&kk, &[0.3, 0.7, 0.2]).unwrap();
            let res = kp.reduction_residuals().unwrap();
            assert!(res.worst().within(1e-10), "{sig}: {res:?}");
            let r = &kp.reduced;
            assert!(r.trace_residual().within(1e-12));
            assert!(r.divergence_f.abs() < 1e-12);

            let fp = kp.footnote().unwrap();
            assert!(fp.residual.within(1e-10), "{sig}: {fp:?}");

            let p = kp.pontryagin().unwrap();
            assert!(p.residual().within(1e-9), "{sig}: {p:?}");
            let stripped_sum: f64 = p.blocks.iter().sum();
            assert!((stripped_sum - p.reduced).abs() < 1e-10 * p.reduced.abs());
        }
    }

    #[test]
    fn lorentzian_double_dual_squares_flip() {
        let kp = KKPoint::new(&wobbly(Signature::Lorentzian), &[0.3, 0.7, 0.2]).unwrap();
        let fp = kp.footnote().unwrap();
        assert!((fp.dual_weyl_squared + fp.weyl_squared).abs() < 1e-10 * fp.weyl_squared.abs());
    }

    #[test]
    fn kerr_reduction() {
        let p = [5.0, PI / 4.0, 0.0, 0.0];
        let kk = extract_kk(&kerr(1.0, 0.6), Signature::Lorentzian, &[p.to_vec()]).unwrap();
        let kp = KKPoint::new(&kk, &p).unwrap();
        assert!(kp.reduction_residuals().unwrap().worst().within(1e-8));
        let pc = kp.pontryagin().unwrap();
        assert!((pc.riemann - 0.000_731_117_696_813_447_3).abs() < 1e-12);
        assert!(pc.residual().within(1e-8), "{pc:?}");
        assert_eq!(kp.reduced.point_class, PointClass::NonzeroP);

        let cur = kp.currents();
        assert!((cur.vector_divergence - cur.constraint_contraction).abs() < 1e-9 * cur.scale);
        assert!((cur.vector_divergence - cur.constraint_divergence_form).abs() < 1e-9 * cur.scale);
        assert!((cur.vector_divergence - cur.p_reduced / 2.0).abs() < 1e-9 * cur.scale);
    }

    #[test]
    fn schwarzschild_is_electric() {
        let p = [4.0, 1.0, 0.5, 0.0];
        let kk = extract_kk(&kerr(1.0, 0.0), Signature::Lorentzian, &[p.to_vec()]).unwrap();
        let r = reduce(&kk, &p).unwrap();
        assert_eq!(r.k.max_abs(), 0.0);
        assert!(r.c_norm > 0.0);
        assert_eq!(r.point_class, PointClass::Electric);
        assert_eq!(r.p_reduced, 0.0);
    }

    #[test]
    fn classification_is_monotone_in_tolerance() {
        let order = |c: PointClass| match c {
            PointClass::Trivial => 0,
            PointClass::Electric | PointClass::Magnetic => 1,
            PointClass::NullGeneral => 2,
            PointClass::NonzeroP => 3,
        };
        let r = reduce(&wobbly(Signature::Euclidean), &[0.3, 0.7, 0.2]).unwrap();
        let mut last = 4;
        for e in -12..3 {
            let c = order(r.classify(10f64.powi(e)));
            assert!(c <= last);
            last = c;
        }
    }

    #[test]
    fn currents_without_field_strength() {
        let kk = triple(CovectorField::zero(3), Signature::Euclidean);
        let c = currents(&kk, &[0.1, 0.2, 0.3]).unwrap();
        assert_eq!(c.scalar, 0.0);
        assert!(c.vector.iter().all(|v| *v == 0.0));
        assert_eq!(c.tensor, vec![0.0; 9]);
    }
}
