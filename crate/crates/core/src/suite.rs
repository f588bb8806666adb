//! Verification and scan runs over a catalog entry.

use std::collections::BTreeMap;

use crate::catalog::{GeometryEntry, GeometryKind};
use crate::einstein_weyl::{
    compatibility, ew21_constancy, ew_residual, gauduchon_identity, gauge_fixed_check, weyl_curvature, WeylStructure,
};
use crate::error::{Error, Result};
use crate::field::{CovectorField, MetricField, ScalarField, Signature};
use crate::geometry::{
    chern_simons_current, curvature_bundle, einstein_divergence, pontryagin, weyl_conformal_residual, CurvatureBundle,
};
use crate::kaluza_klein::{assemble_kk, currents, extract_kk, KKPoint, KKTriple, PointClass, DEFAULT_CLASS_TOL};
use crate::report::{CheckRecord, ConfigEcho, Findings, Report, ScanRecord, Status};
use crate::residual::Residual;
use crate::sampling::PointSpec;

pub const DEFAULT_RESIDUAL_TOL: f64 = 1e-8;
pub const DEFAULT_POINTS: usize = 100;
pub const DEFAULT_SEED: u64 = 1;
/// Allowed relative spread of `div J / P` across points.
pub const CHERN_SIMONS_RATIO_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub geometry: String,
    pub params: Vec<(String, f64)>,
    pub points: PointSpec,
    pub residual_tol: f64,
    pub class_tol: f64,
    pub signature: Option<Signature>,
}

impl RunConfig {
    pub fn new(geometry: impl Into<String>) -> Self {
        RunConfig {
            geometry: geometry.into(),
            params: Vec::new(),
            points: PointSpec::Random {
                count: DEFAULT_POINTS,
                seed: DEFAULT_SEED,
            },
            residual_tol: DEFAULT_RESIDUAL_TOL,
            class_tol: DEFAULT_CLASS_TOL,
            signature: None,
        }
    }

    /// Resolve the geometry and apply the signature override.
    pub fn entry(&self) -> Result<GeometryEntry> {
        let e = crate::catalog::resolve(&self.geometry, &self.params)?;
        match self.signature {
            Some(s) => e.with_signature(s),
            None => Ok(e),
        }
    }

    fn echo(&self, entry: &GeometryEntry) -> ConfigEcho {
        ConfigEcho {
            geometry: entry.name.clone(),
            kind: entry.kind.as_str().to_string(),
            signature: entry.signature.as_str().to_string(),
            coordinates: entry.coordinates.clone(),
            params: entry.params.iter().map(|p| (p.name.clone(), p.value)).collect(),
            points: self.points.clone(),
            residual_tol: self.residual_tol,
            class_tol: self.class_tol,
        }
    }
}

/// Worst residual of one check over a point set, or the first failure.
struct Sweep {
    id: &'static str,
    formula: &'static str,
    tol: f64,
    worst: Residual,
    points: usize,
    error: Option<String>,
}

impl Sweep {
    fn new(id: &'static str, formula: &'static str, tol: f64) -> Self {
        Sweep {
            id,
            formula,
            tol,
            worst: Residual::ZERO,
            points: 0,
            error: None,
        }
    }

    fn add(&mut self, point: &[f64], r: Result<Residual>) {
        if self.error.is_some() {
            return;
        }
        match r {
            Ok(r) => {
                self.worst = self.worst.worst(r);
                self.points += 1;
            }
            Err(e) => self.error = Some(format!("at {point:?}: {e}")),
        }
    }

    fn record(&self) -> CheckRecord {
        match &self.error {
            Some(e) => CheckRecord::failed(self.id, self.formula, self.tol, e.clone()),
            None => CheckRecord::from_residual(self.id, self.formula, self.worst, self.tol, self.points),
        }
    }
}

/// Disagreement of two evaluations of a density, relative where it is
/// resolvable and absolute at `scale` otherwise.
fn agreement(a: f64, b: f64, scale: f64) -> Residual {
    let size = a.abs().max(b.abs());
    if size > 1e-8 * scale {
        Residual::new((a - b).abs(), size)
    } else {
        Residual::new((a - b).abs(), scale)
    }
}

fn sample(entry: &GeometryEntry, cfg: &RunConfig) -> Result<Vec<Vec<f64>>> {
    let pts = cfg.points.points(&entry.domain)?;
    if pts.is_empty() {
        return Err(Error::InvalidParameter("empty sample point set".into()));
    }
    Ok(pts)
}

/// Smooth conformal factor used for the invariance check.
fn test_sigma() -> ScalarField {
    ScalarField::new(|x| Ok(x[0].sin() * 0.1 + x[1] * x[2] * 0.05))
}

fn metric_checks(
    metric: &MetricField,
    pts4: &[Vec<f64>],
    tol: f64,
    out: &mut Vec<CheckRecord>,
    findings: &mut Findings,
) {
    let dim4 = metric.dim() == 4;
    let mut inv = Sweep::new(
        "curvature.bundle_invariants",
        "R_ABCD = -R_BACD = -R_ABDC = R_CDAB, R_A[BCD] = 0, C^A_BAD = 0",
        tol,
    );
    let mut bianchi = Sweep::new("curvature.einstein_divergence", "d_A (R^AB - g^AB R/2) = 0", tol);
    let mut conformal = Sweep::new(
        "curvature.weyl_conformal_invariance",
        "C^A_BCD[exp(2s) g] = C^A_BCD[g] for s = sin(x1)/10 + x2 x3/20",
        tol,
    );
    let mut dd = Sweep::new(
        "curvature.double_dual",
        "**C = C (euclidean), **C = -C (lorentzian)",
        tol,
    );
    let mut pont = Sweep::new(
        "pontryagin.riemann_weyl",
        "(1/2) *R^AB_CD R_AB^CD = (1/2) *C^AB_CD C_AB^CD",
        tol,
    );
    let mut ratios: Vec<f64> = Vec::new();
    let mut cs_zero = Sweep::new("chern_simons.divergence", "div J = const * P", CHERN_SIMONS_RATIO_TOL);

    let sign = metric.signature().sign();
    let bundle = |p: &[f64]| -> Result<CurvatureBundle> { curvature_bundle(metric, p) };
    for p in pts4 {
        let b = bundle(p);
        let b = match b {
            Ok(b) => b,
            Err(e) => {
                let msg = format!("at {p:?}: {e}");
                for s in [&mut inv, &mut bianchi, &mut conformal, &mut dd, &mut pont, &mut cs_zero] {
                    if s.error.is_none() {
                        s.error = Some(msg.clone());
                    }
                }
                continue;
            }
        };
        inv.add(p, Ok(b.invariant_residuals().worst()));
        bianchi.add(p, einstein_divergence(metric, p));
        if dim4 {
            conformal.add(p, weyl_conformal_residual(metric, &test_sigma(), p));
            dd.add(
                p,
                b.double_dual_weyl().map(|d| {
                    Residual::new(
                        d.max_abs_diff(&b.weyl_up.scaled(sign)),
                        b.weyl_up.max_abs().max(b.term_scale()),
                    )
                }),
            );
            let scale = b.term_scale().powi(2);
            pont.add(p, pontryagin(&b).map(|(r, w)| agreement(r, w, scale)));
            match chern_simons_current(metric, p) {
                Ok(cs) => match cs.ratio {
                    Some(r) => {
                        ratios.push(r);
                        cs_zero.points += 1;
                    }
                    None => cs_zero.add(p, Ok(Residual::new(cs.divergence.abs(), scale))),
                },
                Err(e) => cs_zero.add(p, Err(e)),
            }
        }
    }
    out.push(inv.record());
    out.push(bianchi.record());
    if !dim4 {
        return;
    }
    out.push(conformal.record());
    out.push(dd.record());
    out.push(pont.record());

    let mut cs = cs_zero.record();
    if cs.status != Status::Fail && !ratios.is_empty() {
        let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
        let spread = ratios.iter().fold(0.0f64, |m, r| m.max((r - mean).abs()));
        let r = Residual::new(spread, mean.abs());
        findings.chern_simons_ratio = Some(mean);
        let zero_part = cs.max_residual.unwrap_or(0.0);
        cs.max_residual = Some(r.relative().max(zero_part));
        cs.scale = Some(mean.abs());
        cs.status = if r.within(CHERN_SIMONS_RATIO_TOL) && cs.status == Status::Pass {
            Status::Pass
        } else {
            Status::Fail
        };
        let note = format!(
            "ratio div J / P = {mean:.12e} at {} points; |div J| checked at the other {}",
            ratios.len(),
            cs.points - ratios.len()
        );
        cs = cs.with_note(note);
    } else if cs.status != Status::Fail {
        cs = cs.with_note("P vanishes at every point; residual is |div J| at curvature scale squared");
    }
    out.push(cs);
}

fn kk_checks(
    entry: &GeometryEntry,
    kk: &KKTriple,
    metric4: &MetricField,
    pts: &[Vec<f64>],
    cfg: &RunConfig,
    out: &mut Vec<CheckRecord>,
    findings: &mut Findings,
) {
    let tol = cfg.residual_tol;
    let euclidean = kk.signature == Signature::Euclidean;
    let pts4: Vec<Vec<f64>> = pts.iter().map(|p| entry.point4(p)).collect();
    let pts3: Vec<Vec<f64>> = pts.iter().map(|p| p[..3].to_vec()).collect();

    let mut round = Sweep::new(
        "kk.ansatz_round_trip",
        "assemble(extract(g_AB)) = g_AB with g_44 = s exp(2 sigma)",
        tol,
    );
    let reextracted = extract_kk(metric4, kk.signature, &pts4).map(|k| assemble_kk(&k));
    for p in &pts4 {
        round.add(
            p,
            reextracted
                .as_ref()
                .map_err(|e| Error::Field(e.to_string()))
                .and_then(|g2| {
                    let (a, b) = (metric4.values_at(p)?, g2.values_at(p)?);
                    Ok(Residual::new(a.max_abs_diff(&b), a.max_abs()))
                }),
        );
    }
    out.push(round.record());

    let mut red = Sweep::new(
        "kk.reduced_weyl",
        "C_ABCD and *C_ABCD of the sigma-stripped metric = reduced expressions in c_mn, k_mn, F^m",
        tol,
    );
    let mut trace = Sweep::new("kk.traceless", "c^m_m = k^m_m = 0", tol);
    let mut pont = Sweep::new("kk.pontryagin_reduced", "P[g] = exp(-4 sigma) 8 c^mn k_mn", tol);
    let mut foot = Sweep::new(
        "kk.footnote",
        "C^ABCD C_ABCD = 8 (c^mn c_mn + k^mn k_mn) (euclidean), 8 (c^mn c_mn - k^mn k_mn) (lorentzian)",
        tol,
    );
    let mut divf = Sweep::new("kk.f_divergence", "d_m f^m = 0", tol);
    let mut vector = Sweep::new(
        "currents.vector",
        "d_m j^m = (r^mn - g^mn r/3 + s f^m f^n - s g^mn f^2/3) d_m f_n = P/2, j^m = r^mn f_n - r f^m/2 + s f^2 f^m/2",
        tol,
    );
    let mut tensor = Sweep::new(
        "currents.tensor",
        "d_m j^mn = 0, j^mn = g^mn (r - 2 s f^2) + 6 s f^m f^n (when c_mn = 0)",
        tol,
    );
    let mut scalar = Sweep::new(
        "currents.scalar",
        "d_m f^2 = 0 (when k_mn = 0 and f^n d_n f^m = 0)",
        tol,
    );
    let mut geodesic = Residual::ZERO;
    let mut duals = [Residual::ZERO; 4];
    let mut duality_error: Option<String> = None;
    let mut classes: Vec<PointClass> = Vec::new();

    for p in &pts4 {
        let point = match KKPoint::new(kk, p) {
            Ok(k) => k,
            Err(e) => {
                let msg = format!("at {p:?}: {e}");
                for s in [
                    &mut red,
                    &mut trace,
                    &mut pont,
                    &mut foot,
                    &mut divf,
                    &mut vector,
                    &mut tensor,
                    &mut scalar,
                ] {
                    if s.error.is_none() {
                        s.error = Some(msg.clone());
                    }
                }
                duality_error.get_or_insert(msg);
                continue;
            }
        };
        let r = &point.reduced;
        classes.push(r.classify(cfg.class_tol));
        red.add(p, point.reduction_residuals().map(|x| x.worst()));
        trace.add(p, Ok(r.trace_residual()));
        pont.add(p, point.pontryagin().map(|x| x.residual()));
        foot.add(p, point.footnote().map(|x| x.residual));
        divf.add(p, Ok(Residual::new(r.divergence_f.abs(), r.scale)));
        match point.duality() {
            Ok(d) => {
                for (acc, v) in duals
                    .iter_mut()
                    .zip([d.reduced_plus, d.reduced_minus, d.weyl_plus, d.weyl_minus])
                {
                    *acc = acc.worst(v);
                }
            }
            Err(e) => {
                duality_error.get_or_insert(format!("at {p:?}: {e}"));
            }
        }
        let c = point.currents();
        let half_p = 0.5 * c.p_reduced;
        let v = agreement(c.vector_divergence, c.constraint_contraction, c.scale)
            .worst(agreement(c.vector_divergence, c.constraint_divergence_form, c.scale))
            .worst(agreement(c.vector_divergence, half_p, c.scale));
        vector.add(p, Ok(v));
        let td = c.tensor_divergence.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        tensor.add(p, Ok(Residual::new(td, c.scale)));
        let sg = c.scalar_gradient.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        scalar.add(p, Ok(Residual::new(sg, r.scale)));
        let acc: Vec<f64> = (0..3)
            .map(|m| (0..3).map(|n| r.f_up[n] * r.df[[n, m]]).sum::<f64>())
            .collect();
        let ga = acc.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        geodesic = geodesic.worst(Residual::new(ga, r.scale));
    }

    let mut counts = BTreeMap::new();
    for c in &classes {
        *counts.entry(c.as_str().to_string()).or_insert(0) += 1;
    }
    findings.class_counts = counts;
    let c_zero = classes
        .iter()
        .all(|c| matches!(c, PointClass::Trivial | PointClass::Magnetic));
    let k_zero = classes
        .iter()
        .all(|c| matches!(c, PointClass::Trivial | PointClass::Electric));
    let class_list = findings
        .class_counts
        .iter()
        .map(|(k, v)| format!("{k} {v}"))
        .collect::<Vec<_>>()
        .join(", ");

    out.push(red.record());
    out.push(trace.record());
    out.push(pont.record());
    out.push(foot.record());
    out.push(divf.record());
    out.push(vector.record());
    let t = tensor.record();
    out.push(if c_zero || t.status == Status::Fail && tensor.error.is_some() {
        t
    } else {
        t.not_applicable(format!("needs c_mn = 0 at every point; sampled classes: {class_list}"))
    });
    let s = scalar.record();
    out.push(
        if s.status == Status::Fail && scalar.error.is_some() || k_zero && geodesic.within(cfg.class_tol) {
            s
        } else if !k_zero {
            s.not_applicable(format!("needs k_mn = 0 at every point; sampled classes: {class_list}"))
        } else {
            s.not_applicable(format!("f is not geodesic (relative {:.3e})", geodesic.relative()))
        },
    );

    // duality and the Einstein-Weyl correspondence
    let dual_formula = "c_mn = +k_mn <=> *C = +C, c_mn = -k_mn <=> *C = -C";
    let [rp, rm, wp, wm] = duals;
    let mut ew_signs: Vec<f64> = Vec::new();
    let duality = if !euclidean {
        findings.self_duality = Some("not applicable (lorentzian)".into());
        CheckRecord::from_residual("kk.duality", dual_formula, rp.worst(rm), tol, pts.len())
            .not_applicable("not applicable (lorentzian)")
    } else if let Some(e) = duality_error {
        CheckRecord::failed("kk.duality", dual_formula, tol, e)
    } else {
        let (plus, minus) = (rp.within(tol), rm.within(tol));
        let consistent = plus == wp.within(tol) && minus == wm.within(tol);
        let (label, r) = match (plus, minus) {
            (true, true) => ("conformally flat", rp.worst(rm).worst(wp).worst(wm)),
            (true, false) => ("self-dual", rp.worst(wp)),
            (false, true) => ("anti-self-dual", rm.worst(wm)),
            (false, false) => ("neither", if rp.relative() < rm.relative() { rp } else { rm }),
        };
        findings.self_duality = Some(label.to_string());
        if plus {
            ew_signs.push(-1.0);
        }
        if minus {
            ew_signs.push(1.0);
        }
        let rec = CheckRecord::from_residual("kk.duality", dual_formula, r, tol, pts.len());
        if !consistent {
            CheckRecord {
                status: Status::Fail,
                ..rec
            }
            .with_note(format!(
                "reduced and 4-dimensional duality disagree: c-k {:.3e}, c+k {:.3e}, *C-C {:.3e}, *C+C {:.3e}",
                rp.relative(),
                rm.relative(),
                wp.relative(),
                wm.relative()
            ))
        } else if label == "neither" {
            rec.not_applicable("neither self-dual nor anti-self-dual")
        } else {
            rec.with_note(label)
        }
    };
    out.push(duality);

    ew_checks_kk(
        kk,
        &pts3,
        tol,
        &ew_signs,
        euclidean && c_zero && k_zero,
        &class_list,
        out,
        findings,
    );
}

#[allow(clippy::too_many_arguments)]
fn ew_checks_kk(
    kk: &KKTriple,
    pts3: &[Vec<f64>],
    tol: f64,
    signs: &[f64],
    conformally_flat: bool,
    class_list: &str,
    out: &mut Vec<CheckRecord>,
    findings: &mut Findings,
) {
    let euclidean = kk.signature == Signature::Euclidean;
    let base_sign = signs.first().copied().unwrap_or(1.0);
    let ws = WeylStructure::from_kk(kk, base_sign);
    identity_checks(&ws, pts3, tol, out);
    let potential = |s: f64| if s < 0.0 { "w = -f" } else { "w = +f" };

    let ew_formula = "Wr_(mn) - g_mn Wr/3 = 0 for the Weyl connection of (g_mn, w_m = -+f_m)";
    let mut ew = Sweep::new("ew.einstein_weyl", ew_formula, tol);
    let tried: Vec<f64> = if signs.is_empty() {
        vec![-1.0, 1.0]
    } else {
        signs.to_vec()
    };
    for s in &tried {
        let ws = WeylStructure::from_kk(kk, *s);
        for p in pts3 {
            ew.add(p, ew_residual(&ws, p).map(|r| r.residual()));
        }
    }
    let rec = ew.record();
    out.push(if !euclidean {
        rec.not_applicable("not applicable (lorentzian)")
    } else if signs.is_empty() {
        rec.not_applicable("needs self-dual or anti-self-dual data")
    } else {
        let label = if signs.len() == 2 {
            "w = +-f".to_string()
        } else {
            potential(signs[0]).to_string()
        };
        findings.einstein_weyl_potential = Some(label.clone());
        rec.with_note(label)
    });

    let premise = format!(
        "follows from the gauge-fixed system, which needs c_mn = k_mn = 0 here (non-compact chart); sampled classes: {class_list}"
    );
    let gate = |rec: CheckRecord| -> CheckRecord {
        if rec.status == Status::Fail && rec.max_residual.is_none() {
            rec
        } else if !euclidean {
            rec.not_applicable("not applicable (lorentzian)")
        } else if !conformally_flat {
            rec.not_applicable(premise.clone())
        } else {
            rec
        }
    };

    let gf_formula = "r_mn - g_mn r/3 + w_m w_n - g_mn w^2/3 = 0";
    let kill_formula = "d_(m w_n) = 0";
    let (gf, kill) = match gauge_fixed_check(&ws, pts3) {
        Ok(g) => (
            CheckRecord::from_residual("ew.gauge_fixed", gf_formula, g.ew12, tol, pts3.len()),
            CheckRecord::from_residual("ew.weyl_potential_killing", kill_formula, g.killing, tol, pts3.len()),
        ),
        Err(e) => (
            CheckRecord::failed("ew.gauge_fixed", gf_formula, tol, e.to_string()),
            CheckRecord::failed("ew.weyl_potential_killing", kill_formula, tol, e.to_string()),
        ),
    };
    out.push(gate(gf));
    out.push(gate(kill));

    let const_formula = "r - 5 f^2 = const";
    let fk_formula = "d_(m F_n) = 0, F^m = eps^mnl d_n f_l";
    match ew21_constancy(kk, pts3) {
        Ok(c) => {
            if euclidean {
                findings.c_estimate = Some(c.c_estimate);
                findings.c_spread = Some(c.spread);
            }
            let note = format!("mean {:.12e}, spread {:.3e}", c.c_estimate, c.spread);
            let rec = CheckRecord::from_residual("ew.constancy", const_formula, c.spread_residual(), tol, pts3.len());
            let rec = gate(rec);
            let rec = match rec.note {
                Some(n) => CheckRecord {
                    note: Some(format!("{note}; {n}")),
                    ..rec
                },
                None => rec.with_note(note),
            };
            out.push(rec);
            out.push(gate(CheckRecord::from_residual(
                "ew.f_killing",
                fk_formula,
                c.f_killing,
                tol,
                pts3.len(),
            )));
        }
        Err(e) => {
            out.push(CheckRecord::failed("ew.constancy", const_formula, tol, e.to_string()));
            out.push(CheckRecord::failed("ew.f_killing", fk_formula, tol, e.to_string()));
        }
    }
}

/// Pure-calculus identities of a Weyl structure.
fn identity_checks(ws: &WeylStructure, pts3: &[Vec<f64>], tol: f64, out: &mut Vec<CheckRecord>) {
    let mut compat = Sweep::new("ew.compatibility", "D_l g_mn = 2 w_l g_mn", tol);
    let mut two = Sweep::new(
        "ew.two_path",
        "Wr_(mn) from the commutator = r_mn + d_(m w_n) + w_m w_n + g_mn (d.w - w^2)",
        tol,
    );
    let mut gaud = Sweep::new(
        "ew.gauduchon",
        "divergence identity for the traceless Weyl-Ricci tensor contracted with w",
        tol,
    );
    for p in pts3 {
        compat.add(p, compatibility(ws, p));
        two.add(p, weyl_curvature(ws, p).map(|c| c.two_path));
        gaud.add(p, gauduchon_identity(ws, p).map(|g| g.identity));
    }
    out.push(compat.record());
    out.push(two.record());
    out.push(gaud.record());
}

fn metric3_checks(g3: &MetricField, pts: &[Vec<f64>], tol: f64, out: &mut Vec<CheckRecord>, findings: &mut Findings) {
    let ws = WeylStructure::new(g3.clone(), CovectorField::zero(3));
    identity_checks(&ws, pts, tol, out);
    let mut ew = Sweep::new("ew.einstein_weyl", "r_mn - g_mn r/3 = 0 (w = 0)", tol);
    for p in pts {
        ew.add(p, ew_residual(&ws, p).map(|r| r.residual()));
    }
    let ew = ew.record();
    let holds = ew.status == Status::Pass;
    if holds {
        findings.einstein_weyl_potential = Some("w = 0".into());
    }
    let gf_formula = "r_mn - g_mn r/3 + w_m w_n - g_mn w^2/3 = 0";
    let kill_formula = "d_(m w_n) = 0";
    let gate = |r: CheckRecord| {
        if holds || r.max_residual.is_none() {
            r
        } else {
            r.not_applicable("not Einstein-Weyl with w = 0")
        }
    };
    let (gf, kill) = match gauge_fixed_check(&ws, pts) {
        Ok(g) => (
            CheckRecord::from_residual("ew.gauge_fixed", gf_formula, g.ew12, tol, pts.len()),
            CheckRecord::from_residual("ew.weyl_potential_killing", kill_formula, g.killing, tol, pts.len()),
        ),
        Err(e) => (
            CheckRecord::failed("ew.gauge_fixed", gf_formula, tol, e.to_string()),
            CheckRecord::failed("ew.weyl_potential_killing", kill_formula, tol, e.to_string()),
        ),
    };
    out.push(if holds || ew.max_residual.is_none() {
        ew
    } else {
        ew.not_applicable("property does not hold for this metric")
    });
    out.push(gate(gf));
    out.push(gate(kill));
}

/// Run every check applicable to the entry's kind.
pub fn verify(entry: &GeometryEntry, cfg: &RunConfig) -> Result<Report> {
    let pts = sample(entry, cfg)?;
    let tol = cfg.residual_tol;
    let mut checks = Vec::new();
    let mut findings = Findings::default();
    match entry.kind {
        GeometryKind::Metric3 => {
            let g3 = entry
                .metric3()
                .ok_or_else(|| Error::Field("metric3 entry without a 3-metric".into()))?;
            metric_checks(g3, &pts, tol, &mut checks, &mut findings);
            metric3_checks(g3, &pts, tol, &mut checks, &mut findings);
        }
        GeometryKind::Metric4 | GeometryKind::KkTriple => {
            let metric4 = entry
                .metric4()
                .ok_or_else(|| Error::Field("entry without a 4-metric".into()))?;
            let pts4: Vec<Vec<f64>> = pts.iter().map(|p| entry.point4(p)).collect();
            metric_checks(&metric4, &pts4, tol, &mut checks, &mut findings);
            match entry.kk_triple(&pts4) {
                Ok(Some(kk)) => kk_checks(entry, &kk, &metric4, &pts, cfg, &mut checks, &mut findings),
                Ok(None) => {}
                Err(e) => {
                    let at = pts4.iter().find(|p| entry.kk_triple(std::slice::from_ref(*p)).is_err());
                    checks.push(CheckRecord::failed(
                        "kk.ansatz_round_trip",
                        "assemble(extract(g_AB)) = g_AB with g_44 = s exp(2 sigma)",
                        tol,
                        match at {
                            Some(p) => format!("at {p:?}: {e}"),
                            None => e.to_string(),
                        },
                    ))
                }
            }
        }
    }
    let mut report = Report::new("verify", cfg.echo(entry), checks);
    report.findings = Some(findings);
    Ok(report)
}

/// Per-point Pontryagin densities and classes.
pub fn scan(entry: &GeometryEntry, cfg: &RunConfig) -> Result<Report> {
    if entry.kind == GeometryKind::Metric3 {
        return Err(Error::InvalidParameter(format!(
            "scan needs a metric4 or kk_triple geometry; `{}` is metric3",
            entry.name
        )));
    }
    let pts = sample(entry, cfg)?;
    let pts4: Vec<Vec<f64>> = pts.iter().map(|p| entry.point4(p)).collect();
    let kk = entry
        .kk_triple(&pts4)?
        .ok_or_else(|| Error::Field("entry has no Kaluza-Klein form".into()))?;
    let mut rows = Vec::with_capacity(pts.len());
    let mut checks = Vec::new();
    for (p, p4) in pts.iter().zip(&pts4) {
        let row = KKPoint::new(&kk, p4).and_then(|k| {
            let pc = k.pontryagin()?;
            Ok(ScanRecord {
                coordinates: p.clone(),
                p_full: pc.riemann,
                p_reduced: k.reduced.p_reduced,
                class: k.reduced.classify(cfg.class_tol),
                c_norm: k.reduced.c_norm,
                k_norm: k.reduced.k_norm,
            })
        });
        match row {
            Ok(r) => rows.push(r),
            Err(e) => checks.push(CheckRecord::failed(
                "scan.evaluation",
                "all sample points evaluate",
                0.0,
                format!("at {p:?}: {e}"),
            )),
        }
    }
    checks.truncate(1);
    let mut report = Report::new("scan", cfg.echo(entry), checks);
    report.points = rows;
    Ok(report)
}

/// Reduced currents at one point of a Kaluza-Klein entry; re-exported for
/// callers that want the raw numbers.
pub fn currents_at(entry: &GeometryEntry, point: &[f64]) -> Result<crate::kaluza_klein::Currents> {
    let p4 = entry.point4(point);
    let kk = entry
        .kk_triple(std::slice::from_ref(&p4))?
        .ok_or_else(|| Error::Field("entry has no Kaluza-Klein form".into()))?;
    currents(&kk, &p4)
}
