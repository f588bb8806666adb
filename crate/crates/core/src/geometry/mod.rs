//! Curvature of a metric field at a point.
//!
//! Everything starts from one metric query at jet order 3. Christoffel symbols
//! come out at order 2, the Riemann tensor at order 1, so curvature-built
//! quantities still carry first derivatives for covariant divergences and the
//! Chern-Simons current.

mod invariants;

pub use invariants::{
    chern_simons_current, conformal_rescale, covariant_divergence, divergence_of, einstein_divergence, pontryagin,
    pontryagin_full, weyl_conformal_residual, weyl_squared, ChernSimons, TensorJets,
};

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::field::{MetricField, MetricJets, Signature};
use crate::jet::Jet;
use crate::residual::Residual;
use crate::tensor::{permutation_sign, transform_all, Tensor};

/// Jet order at which metrics are queried.
pub const METRIC_ORDER: usize = 3;

/// Sign of `ε^{12…n}·√|g|`. Lorentzian charts put time last and use
/// `ε^{1234} = −1/√|g|`, so that `ε_{1234} = +√|g|`; with this choice the
/// reduced Pontryagin density keeps the same sign in both signatures.
pub fn orientation(signature: Signature) -> f64 {
    match signature {
        Signature::Euclidean => 1.0,
        Signature::Lorentzian => -1.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variance {
    Up,
    Down,
}

/// Metric data and Levi-Civita connection at one point.
#[derive(Debug, Clone)]
pub struct Connection {
    pub point: Vec<f64>,
    pub signature: Signature,
    pub metric: Tensor<Jet>,
    pub inverse: Tensor<Jet>,
    pub det: Jet,
    pub sqrt_abs_det: Jet,
    /// `Γ^a_{bc}`, symmetric in `b, c`.
    pub christoffel: Tensor<Jet>,
}

impl Connection {
    pub fn from_jets(mj: MetricJets, signature: Signature) -> Self {
        let christoffel = levi_civita(&mj.metric, &mj.inverse);
        Connection {
            point: mj.point,
            signature,
            metric: mj.metric,
            inverse: mj.inverse,
            det: mj.det,
            sqrt_abs_det: mj.sqrt_abs_det,
            christoffel,
        }
    }

    pub fn dim(&self) -> usize {
        self.metric.dim()
    }

    pub fn metric_values(&self) -> Tensor<f64> {
        self.metric.values()
    }

    pub fn inverse_values(&self) -> Tensor<f64> {
        self.inverse.values()
    }

    pub fn epsilon(&self, variance: Variance) -> Tensor<f64> {
        epsilon_values(
            self.dim(),
            self.sqrt_abs_det.value(),
            self.det.value().signum(),
            orientation(self.signature),
            variance,
        )
    }

    /// `ε^{…}` as jets (the density `ε̃` divided by the `√|g|` jet).
    pub fn epsilon_up_jets(&self) -> Tensor<Jet> {
        let inv_sqrt = self.sqrt_abs_det.recip() * orientation(self.signature);
        let zero = inv_sqrt.zero_like();
        Tensor::from_fn(self.dim(), self.dim(), |i| match permutation_sign(i) {
            0 => zero,
            s => inv_sqrt * f64::from(s),
        })
    }

    /// Lower the index of a contravariant vector of jets.
    pub fn lower(&self, v: &[Jet]) -> Vec<Jet> {
        let n = self.dim();
        (0..n)
            .map(|a| {
                let mut s = self.metric[[a, 0]] * v[0];
                for b in 1..n {
                    s += self.metric[[a, b]] * v[b];
                }
                s
            })
            .collect()
    }

    pub fn raise(&self, v: &[Jet]) -> Vec<Jet> {
        let n = self.dim();
        (0..n)
            .map(|a| {
                let mut s = self.inverse[[a, 0]] * v[0];
                for b in 1..n {
                    s += self.inverse[[a, b]] * v[b];
                }
                s
            })
            .collect()
    }

    /// Raise both indices of a covariant rank-2 jet tensor.
    pub fn raise2(&self, t: &Tensor<Jet>) -> Tensor<Jet> {
        let n = self.dim();
        let half = Tensor::from_fn(n, 2, |i| {
            let mut s = self.inverse[[i[0], 0]] * t[[0, i[1]]];
            for a in 1..n {
                s += self.inverse[[i[0], a]] * t[[a, i[1]]];
            }
            s
        });
        Tensor::from_fn(n, 2, |i| {
            let mut s = half[[i[0], 0]] * self.inverse[[0, i[1]]];
            for b in 1..n {
                s += half[[i[0], b]] * self.inverse[[b, i[1]]];
            }
            s
        })
    }

    /// Covariant derivative `d_a V_b` of a covector given as jets.
    pub fn covariant_derivative_covector(&self, v: &[Jet]) -> Tensor<Jet> {
        let n = self.dim();
        Tensor::from_fn(n, 2, |i| {
            let (a, b) = (i[0], i[1]);
            let mut s = v[b].partial(a);
            for l in 0..n {
                s -= self.christoffel[[l, a, b]] * v[l];
            }
            s
        })
    }

    /// Killing residual `d_(a V_b)` of a covector, judged against the larger
    /// of its two ingredients `∂_a V_b` and `Γ^l_{ab} V_l`.
    pub fn killing_residual(&self, v: &[Jet]) -> (Tensor<f64>, Residual) {
        let n = self.dim();
        let d = self.covariant_derivative_covector(v).values();
        let sym = Tensor::from_fn(n, 2, |i| 0.5 * (d[[i[0], i[1]]] + d[[i[1], i[0]]]));
        let mut scale = 0.0f64;
        for a in 0..n {
            for b in 0..n {
                scale = scale.max(v[b].partial(a).value().abs());
                let g: f64 = (0..n).map(|l| self.christoffel[[l, a, b]].value() * v[l].value()).sum();
                scale = scale.max(g.abs());
            }
        }
        let max = sym.max_abs();
        (sym, Residual::new(max, scale))
    }
}

/// `Γ^λ_{μν} = ½ g^{λσ}(∂_μ g_{σν} + ∂_ν g_{σμ} − ∂_σ g_{μν})`.
fn levi_civita(g: &Tensor<Jet>, ginv: &Tensor<Jet>) -> Tensor<Jet> {
    let n = g.dim();
    // dg[[s, a, m]] = ∂_m g_{sa}
    let dg = Tensor::from_fn(n, 3, |i| g[[i[0], i[1]]].partial(i[2]));
    let lowered = Tensor::from_fn(n, 3, |i| {
        let (s, m, nu) = (i[0], i[1], i[2]);
        (dg[[s, nu, m]] + dg[[s, m, nu]] - dg[[m, nu, s]]) * 0.5
    });
    Tensor::from_fn(n, 3, |i| {
        let (l, m, nu) = (i[0], i[1], i[2]);
        let mut s = ginv[[l, 0]] * lowered[[0, m, nu]];
        for sg in 1..n {
            s += ginv[[l, sg]] * lowered[[sg, m, nu]];
        }
        s
    })
}

/// `R^K_{LMN} = ∂_M Γ^K_{NL} − ∂_N Γ^K_{ML} + Γ^K_{MP}Γ^P_{NL} − Γ^K_{NP}Γ^P_{ML}`
/// for any (not necessarily symmetric) connection given as jets.
pub fn riemann_from_connection(gamma: &Tensor<Jet>) -> Tensor<Jet> {
    let n = gamma.dim();
    let dgamma = Tensor::from_fn(n, 4, |i| gamma[[i[0], i[1], i[2]]].partial(i[3]));
    Tensor::from_fn(n, 4, |i| {
        let (k, l, m, nn) = (i[0], i[1], i[2], i[3]);
        let mut s = dgamma[[k, nn, l, m]] - dgamma[[k, m, l, nn]];
        for p in 0..n {
            s += gamma[[k, m, p]] * gamma[[p, nn, l]] - gamma[[k, nn, p]] * gamma[[p, m, l]];
        }
        s
    })
}

/// Ricci contraction `R_{MN} = R^K_{MKN}`.
pub fn ricci_from_riemann(riemann: &Tensor<Jet>) -> Tensor<Jet> {
    let n = riemann.dim();
    Tensor::from_fn(n, 2, |i| {
        let mut s = riemann[[0, i[0], 0, i[1]]];
        for k in 1..n {
            s += riemann[[k, i[0], k, i[1]]];
        }
        s
    })
}

pub fn christoffel(metric: &MetricField, point: &[f64]) -> Result<Connection> {
    let mj = metric.jets_at(point, METRIC_ORDER)?;
    Ok(Connection::from_jets(mj, metric.signature()))
}

/// Totally antisymmetric tensor, `ε^{1…n} = s/√|g|` with `s` from
/// [`orientation`]; the covariant version is the fully lowered one.
pub fn epsilon_tensor(metric: &MetricField, point: &[f64], variance: Variance) -> Result<Tensor<f64>> {
    let mj = metric.jets_at(point, 0)?;
    Ok(epsilon_values(
        metric.dim(),
        mj.sqrt_abs_det.value(),
        mj.det.value().signum(),
        orientation(metric.signature()),
        variance,
    ))
}

fn epsilon_values(dim: usize, sqrt_abs_det: f64, det_sign: f64, sign: f64, variance: Variance) -> Tensor<f64> {
    let factor = match variance {
        Variance::Up => sign / sqrt_abs_det,
        Variance::Down => sign * det_sign * sqrt_abs_det,
    };
    Tensor::from_fn(dim, dim, |i| f64::from(permutation_sign(i)) * factor)
}

/// Curvature tensors at one point.
#[derive(Debug, Clone)]
pub struct CurvatureBundle {
    pub connection: Connection,
    /// `R^K_{LMN}` (order-1 jets).
    pub riemann: Tensor<Jet>,
    pub ricci: Tensor<Jet>,
    pub scalar: Jet,
    /// `S_{MN} = R_{MN} − R g_{MN}/(2(n−1))`.
    pub schouten: Tensor<f64>,
    pub weyl_up: Tensor<f64>,
    pub weyl_down: Tensor<f64>,
    /// `*C^{ABMN} = ½ ε^{MNRS} C^{AB}_{RS}`, dimension 4 only.
    pub dual_weyl: Option<Tensor<f64>>,
    pub sqrt_abs_det: f64,
}

pub fn curvature_bundle(metric: &MetricField, point: &[f64]) -> Result<CurvatureBundle> {
    Ok(CurvatureBundle::from_connection(christoffel(metric, point)?))
}

/// Apply `½ ε^{MNRS}` to the last index pair of a contravariant rank-4 tensor.
fn dualize(t_up: &Tensor<f64>, g: &Tensor<f64>, eps_up: &Tensor<f64>) -> Tensor<f64> {
    let n = t_up.dim();
    // t^{AB}_{RS}
    let mixed = Tensor::from_fn(n, 4, |i| {
        let mut s = 0.0;
        for c in 0..n {
            for d in 0..n {
                s += t_up[[i[0], i[1], c, d]] * g[[c, i[2]]] * g[[d, i[3]]];
            }
        }
        s
    });
    Tensor::from_fn(n, 4, |i| {
        let mut s = 0.0;
        for r in 0..n {
            for q in 0..n {
                let e = eps_up[[i[2], i[3], r, q]];
                if e != 0.0 {
                    s += e * mixed[[i[0], i[1], r, q]];
                }
            }
        }
        0.5 * s
    })
}

impl CurvatureBundle {
    pub fn from_connection(connection: Connection) -> Self {
        let n = connection.dim();
        let riemann = riemann_from_connection(&connection.christoffel);
        let ricci = ricci_from_riemann(&riemann);
        let mut scalar = connection.inverse[[0, 0]] * ricci[[0, 0]];
        for a in 0..n {
            for b in 0..n {
                if a + b > 0 {
                    scalar += connection.inverse[[a, b]] * ricci[[a, b]];
                }
            }
        }

        let g = connection.metric_values();
        let ginv = connection.inverse_values();
        let ric = ricci.values();
        let r = scalar.value();
        let schouten = Tensor::from_fn(n, 2, |i| {
            ric[[i[0], i[1]]] - r * g[[i[0], i[1]]] / (2.0 * (n as f64 - 1.0))
        });
        let s_up = transform_all(&schouten, &ginv);
        let riemann_up = riemann_all_up(&riemann.values(), &ginv);
        // Weight-½ antisymmetrization brackets; the coupling 2/(n−2) makes every
        // trace vanish (n = 4 gives the unit coupling).
        let coupling = if n > 2 { 2.0 / (n as f64 - 2.0) } else { 0.0 };
        let weyl_up = Tensor::from_fn(n, 4, |i| {
            let (k, l, m, nn) = (i[0], i[1], i[2], i[3]);
            let kterm = 0.5 * (ginv[[k, m]] * s_up[[nn, l]] - ginv[[k, nn]] * s_up[[m, l]]);
            let lterm = 0.5 * (ginv[[l, m]] * s_up[[nn, k]] - ginv[[l, nn]] * s_up[[m, k]]);
            riemann_up[[k, l, m, nn]] - coupling * (kterm - lterm)
        });
        let weyl_down = transform_all(&weyl_up, &g);
        let dual_weyl = (n == 4).then(|| dualize(&weyl_up, &g, &connection.epsilon(Variance::Up)));
        let sqrt_abs_det = connection.sqrt_abs_det.value();
        CurvatureBundle {
            connection,
            riemann,
            ricci,
            scalar,
            schouten,
            weyl_up,
            weyl_down,
            dual_weyl,
            sqrt_abs_det,
        }
    }

    pub fn dim(&self) -> usize {
        self.connection.dim()
    }

    pub fn point(&self) -> &[f64] {
        &self.connection.point
    }

    pub fn signature(&self) -> Signature {
        self.connection.signature
    }

    pub fn christoffel_values(&self) -> Tensor<f64> {
        self.connection.christoffel.values()
    }

    /// `R_{KLMN}`.
    pub fn riemann_down(&self) -> Tensor<f64> {
        let n = self.dim();
        let g = self.connection.metric_values();
        let r = self.riemann.values();
        Tensor::from_fn(n, 4, |i| (0..n).map(|a| g[[i[0], a]] * r[[a, i[1], i[2], i[3]]]).sum())
    }

    /// `R^{KLMN}`.
    pub fn riemann_up(&self) -> Tensor<f64> {
        riemann_all_up(&self.riemann.values(), &self.connection.inverse_values())
    }

    pub fn kretschmann(&self) -> f64 {
        self.riemann_up().dot(&self.riemann_down())
    }

    /// `C^A_{BCD}`.
    pub fn weyl_mixed(&self) -> Tensor<f64> {
        let n = self.dim();
        let c = &self.weyl_down;
        let ginv = self.connection.inverse_values();
        Tensor::from_fn(n, 4, |i| {
            (0..n).map(|a| ginv[[i[0], a]] * c[[a, i[1], i[2], i[3]]]).sum()
        })
    }

    pub fn dual_weyl(&self) -> Result<&Tensor<f64>> {
        self.dual_weyl.as_ref().ok_or(Error::Dimension {
            context: "dual Weyl tensor",
            expected: 4,
            found: self.dim(),
        })
    }

    /// Apply the duality operation to `*C`, giving `**C`.
    pub fn double_dual_weyl(&self) -> Result<Tensor<f64>> {
        let dual = self.dual_weyl()?;
        Ok(dualize(
            dual,
            &self.connection.metric_values(),
            &self.connection.epsilon(Variance::Up),
        ))
    }

    /// Magnitude of the terms summed into the Riemann tensor; used as the
    /// natural scale when the curvature itself is near zero.
    pub fn term_scale(&self) -> f64 {
        let gamma = self.christoffel_values();
        let mut s = 0.0f64;
        for g in self.connection.christoffel.as_slice() {
            for a in 0..self.dim() {
                s = s.max(g.partial(a).value().abs());
            }
        }
        s.max(gamma.max_abs().powi(2))
    }

    pub fn invariant_residuals(&self) -> BundleResiduals {
        let n = self.dim();
        let rd = self.riemann_down();
        let rm = self.riemann.values();
        let scale = rd.max_abs();
        let mut antisym_last = 0.0f64;
        let mut antisym_first = 0.0f64;
        let mut pair = 0.0f64;
        let mut bianchi = 0.0f64;
        for k in 0..n {
            for l in 0..n {
                for m in 0..n {
                    for q in 0..n {
                        antisym_last = antisym_last.max((rm[[k, l, m, q]] + rm[[k, l, q, m]]).abs());
                        antisym_first = antisym_first.max((rd[[k, l, m, q]] + rd[[l, k, m, q]]).abs());
                        pair = pair.max((rd[[k, l, m, q]] - rd[[m, q, k, l]]).abs());
                        bianchi = bianchi.max((rm[[k, l, m, q]] + rm[[k, m, q, l]] + rm[[k, q, l, m]]).abs());
                    }
                }
            }
        }
        let g = self.connection.metric_values();
        let c = &self.weyl_up;
        let wscale = c.max_abs().max(scale);
        let mut trace = 0.0f64;
        // contract every pair of slots with the metric
        let pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
        for &(p, q) in &pairs {
            for x in 0..n {
                for y in 0..n {
                    let mut s = 0.0;
                    for a in 0..n {
                        for b in 0..n {
                            let mut idx = [0usize; 4];
                            let free = (0..4).filter(|s| *s != p && *s != q).collect::<Vec<_>>();
                            idx[p] = a;
                            idx[q] = b;
                            idx[free[0]] = x;
                            idx[free[1]] = y;
                            s += g[[a, b]] * c[idx];
                        }
                    }
                    trace = trace.max(s.abs());
                }
            }
        }
        BundleResiduals {
            riemann_antisym_last: Residual::new(antisym_last, scale),
            riemann_antisym_first: Residual::new(antisym_first, scale),
            riemann_pair_symmetry: Residual::new(pair, scale),
            first_bianchi: Residual::new(bianchi, rm.max_abs()),
            weyl_trace: Residual::new(trace, wscale),
        }
    }
}

fn riemann_all_up(mixed: &Tensor<f64>, ginv: &Tensor<f64>) -> Tensor<f64> {
    let n = mixed.dim();
    let mut cur = mixed.clone();
    for slot in 1..4 {
        cur = Tensor::from_fn(n, 4, |i| {
            let mut j = [i[0], i[1], i[2], i[3]];
            (0..n)
                .map(|a| {
                    j[slot] = a;
                    ginv[[i[slot], a]] * cur[j]
                })
                .sum()
        });
    }
    cur
}

#[derive(Debug, Clone, Copy)]
pub struct BundleResiduals {
    pub riemann_antisym_last: Residual,
    pub riemann_antisym_first: Residual,
    pub riemann_pair_symmetry: Residual,
    pub first_bianchi: Residual,
    pub weyl_trace: Residual,
}

impl BundleResiduals {
    pub fn worst(&self) -> Residual {
        self.riemann_antisym_last
            .worst(self.riemann_antisym_first)
            .worst(self.riemann_pair_symmetry)
            .worst(self.first_bianchi)
            .worst(self.weyl_trace)
    }
}

/// Checks once per process that the Weyl coupling leaves every trace zero on
/// a generic metric. Returns the worst relative trace found.
pub fn weyl_self_test() -> f64 {
    static RESULT: OnceLock<f64> = OnceLock::new();
    *RESULT.get_or_init(|| {
        let metric = MetricField::new("self-test", 4, Signature::Euclidean, |x| {
            let (a, b, c, d) = (x[0], x[1], x[2], x[3]);
            let z = a.zero_like();
            Ok(vec![
                1.0 + a * a * 0.3 + d * 0.1,
                b * c * 0.1,
                z,
                a * 0.05,
                b * c * 0.1,
                1.2 + (b * 0.4).sin(),
                c * d * 0.1,
                z,
                z,
                c * d * 0.1,
                2.0 + (a * c * 0.2).exp(),
                b * 0.07,
                a * 0.05,
                z,
                b * 0.07,
                1.5 + d * d * 0.2,
            ])
        });
        let bundle = curvature_bundle(&metric, &[0.2, -0.3, 0.5, 0.1]).expect("regular self-test metric");
        let trace = bundle.invariant_residuals().weyl_trace.relative();
        assert!(trace < 1e-12, "Weyl tensor is not traceless: {trace:e}");
        trace
    })
}
