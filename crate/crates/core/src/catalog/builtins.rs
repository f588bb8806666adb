use std::f64::consts::PI;

use super::{apply_overrides, Geometry, GeometryEntry, GeometryKind, Interval, Parameter};
use crate::error::{Error, Result};
use crate::field::{CovectorField, MetricField, ScalarField, Signature};
use crate::kaluza_klein::KKTriple;

const NAMES: [&str; 8] = [
    "flat_euclidean4",
    "flat_twisted4",
    "flat_lorentzian4",
    "sphere3",
    "taub_nut",
    "schwarzschild",
    "kerr",
    "conformally_flat_kk",
];

pub fn builtin_names() -> &'static [&'static str] {
    &NAMES
}

fn params(spec: &[(&str, f64)]) -> Vec<Parameter> {
    spec.iter()
        .map(|(n, v)| Parameter {
            name: n.to_string(),
            default: *v,
            value: *v,
        })
        .collect()
}

fn coords(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn box3() -> Vec<Interval> {
    vec![Interval::new(-1.0, 1.0); 3]
}

fn require(ok: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParameter(msg()))
    }
}

/// Instantiate a built-in geometry with parameter overrides.
pub fn builtin(name: &str, overrides: &[(String, f64)]) -> Result<GeometryEntry> {
    let (mut ps, kind, signature) = match name {
        "flat_euclidean4" => (vec![], GeometryKind::Metric4, Signature::Euclidean),
        "flat_lorentzian4" => (vec![], GeometryKind::Metric4, Signature::Lorentzian),
        "flat_twisted4" => (params(&[("omega", 0.5)]), GeometryKind::Metric4, Signature::Euclidean),
        "sphere3" => (params(&[("R", 1.0)]), GeometryKind::Metric3, Signature::Euclidean),
        "taub_nut" => (params(&[("m", 1.0)]), GeometryKind::KkTriple, Signature::Euclidean),
        "schwarzschild" => (params(&[("M", 1.0)]), GeometryKind::Metric4, Signature::Lorentzian),
        "kerr" => (
            params(&[("M", 1.0), ("a", 0.6)]),
            GeometryKind::Metric4,
            Signature::Lorentzian,
        ),
        "conformally_flat_kk" => (
            params(&[("omega", 0.5), ("beta", 0.2)]),
            GeometryKind::KkTriple,
            Signature::Euclidean,
        ),
        _ => return Err(Error::UnknownGeometry(name.to_string())),
    };
    apply_overrides(&mut ps, overrides, name)?;
    let p = |n: &str| ps.iter().find(|q| q.name == n).map_or(0.0, |q| q.value);

    let (coordinates, domain, provenance, geometry) = match name {
        "flat_euclidean4" => (
            coords(&["x", "y", "z", "tau"]),
            [box3(), vec![Interval::new(0.0, 1.0)]].concat(),
            "flat Euclidean space, Cartesian coordinates",
            Geometry::Metric(MetricField::diagonal(name, vec![1.0; 4], signature)),
        ),
        "flat_lorentzian4" => (
            coords(&["x", "y", "z", "t"]),
            [box3(), vec![Interval::new(0.0, 1.0)]].concat(),
            "Minkowski space, time last",
            Geometry::Metric(MetricField::diagonal(name, vec![1.0, 1.0, 1.0, -1.0], signature)),
        ),
        "flat_twisted4" => (
            coords(&["x", "y", "z", "tau"]),
            [box3(), vec![Interval::new(0.0, 1.0)]].concat(),
            "flat Euclidean space in coordinates rotating with tau at rate omega",
            Geometry::Metric(twisted(p("omega"))),
        ),
        "sphere3" => {
            let r = p("R");
            require(r > 0.0, || format!("sphere3 needs R > 0, got {r}"))?;
            (
                coords(&["chi", "theta", "phi"]),
                vec![
                    Interval::new(0.3, PI - 0.3),
                    Interval::new(0.3, PI - 0.3),
                    Interval::new(0.0, 2.0 * PI),
                ],
                "round 3-sphere of radius R",
                Geometry::Metric(sphere(r)),
            )
        }
        "taub_nut" => {
            let m = p("m");
            require(m >= 0.0, || format!("taub_nut needs m >= 0, got {m}"))?;
            (
                coords(&["r", "theta", "phi"]),
                vec![
                    Interval::new(0.5, 5.0),
                    Interval::new(0.3, PI - 0.3),
                    Interval::new(0.0, 2.0 * PI),
                ],
                "Gibbons-Hawking form with V = 1 + m/r and monopole potential a_phi = m(1 - cos theta)",
                Geometry::Kk(taub_nut(m)?),
            )
        }
        "schwarzschild" => {
            let m = p("M");
            require(m > 0.0, || format!("schwarzschild needs M > 0, got {m}"))?;
            (
                coords(&["r", "theta", "phi", "t"]),
                vec![
                    Interval::new(2.5 * m, 10.0 * m),
                    Interval::new(0.3, PI - 0.3),
                    Interval::new(0.0, 2.0 * PI),
                    Interval::new(0.0, 1.0),
                ],
                "Schwarzschild exterior, reduced along the static Killing vector",
                Geometry::Metric(kerr_metric(name, m, 0.0)),
            )
        }
        "kerr" => {
            let (m, a) = (p("M"), p("a"));
            require(m > 0.0, || format!("kerr needs M > 0, got {m}"))?;
            require(a.abs() < m, || format!("kerr needs |a| < M, got a = {a}, M = {m}"))?;
            (
                coords(&["r", "theta", "phi", "t"]),
                vec![
                    Interval::new(2.5 * m, 10.0 * m),
                    Interval::new(0.3, PI - 0.3),
                    Interval::new(0.0, 2.0 * PI),
                    Interval::new(0.0, 1.0),
                ],
                "Kerr in Boyer-Lindquist coordinates outside the ergoregion, reduced along the stationary Killing vector",
                Geometry::Metric(kerr_metric(name, m, a)),
            )
        }
        "conformally_flat_kk" => (
            coords(&["x", "y", "z"]),
            box3(),
            "reduction of flat_twisted4 with an extra conformal factor exp(2 beta x z)",
            Geometry::Kk(conformally_flat(p("omega"), p("beta"))?),
        ),
        _ => unreachable!(),
    };
    Ok(GeometryEntry {
        name: name.to_string(),
        kind,
        signature,
        coordinates,
        params: ps,
        domain,
        provenance: provenance.to_string(),
        geometry,
    })
}

/// `(dx − ωy dτ)² + (dy + ωx dτ)² + dz² + dτ²`.
fn twisted(omega: f64) -> MetricField {
    MetricField::new("flat_twisted4", 4, Signature::Euclidean, move |x| {
        let (one, zero) = (x[0].constant_like(1.0), x[0].zero_like());
        let gxt = x[1] * -omega;
        let gyt = x[0] * omega;
        let gtt = (x[0] * x[0] + x[1] * x[1]) * (omega * omega) + 1.0;
        Ok(vec![
            one, zero, zero, gxt, zero, one, zero, gyt, zero, zero, one, zero, gxt, gyt, zero, gtt,
        ])
    })
}

fn sphere(r: f64) -> MetricField {
    MetricField::new("sphere3", 3, Signature::Euclidean, move |x| {
        let z = x[0].zero_like();
        let s = x[0].sin();
        let r2 = r * r;
        let g22 = s * s * r2;
        let st = x[1].sin();
        Ok(vec![x[0].constant_like(r2), z, z, z, g22, z, z, z, g22 * st * st])
    })
}

fn taub_nut(m: f64) -> Result<KKTriple> {
    let g3 = MetricField::new("taub_nut", 3, Signature::Euclidean, move |x| {
        let (r, th) = (x[0], x[1]);
        let z = r.zero_like();
        let v = (r.recip() * m + 1.0).powi(2);
        let s = th.sin();
        Ok(vec![v, z, z, z, v * r * r, z, z, z, v * r * r * s * s])
    });
    let a = CovectorField::new(3, move |x| {
        let z = x[0].zero_like();
        Ok(vec![z, z, (1.0 - x[1].cos()) * m])
    });
    let sigma = ScalarField::new(move |x| Ok((x[0].recip() * m + 1.0).try_ln()? * -0.5));
    KKTriple::new(sigma, a, g3, Signature::Euclidean)
}

/// Boyer-Lindquist Kerr with time last; `a = 0` is Schwarzschild.
fn kerr_metric(name: &str, m: f64, a: f64) -> MetricField {
    MetricField::new(name, 4, Signature::Lorentzian, move |x| {
        let (r, th) = (x[0], x[1]);
        let z = r.zero_like();
        let (s, c) = (th.sin(), th.cos());
        let s2 = s * s;
        let rho2 = r * r + c * c * (a * a);
        let delta = r * r - r * (2.0 * m) + a * a;
        let gpp = (r * r + a * a + r * s2 * (2.0 * m * a * a) / rho2) * s2;
        let gtp = r * s2 * (-2.0 * m * a) / rho2;
        let gtt = r * (2.0 * m) / rho2 - 1.0;
        Ok(vec![
            rho2.try_div(&delta)?,
            z,
            z,
            z,
            z,
            rho2,
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

/// Reduction of [`twisted`] with an additional `σ → σ + βxz`.
fn conformally_flat(omega: f64, beta: f64) -> Result<KKTriple> {
    let q = move |x: &[crate::jet::Jet]| (x[0] * x[0] + x[1] * x[1]) * (omega * omega) + 1.0;
    let a = CovectorField::new(3, move |x| {
        let qi = q(x).recip();
        Ok(vec![x[1] * qi * -omega, x[0] * qi * omega, x[0].zero_like()])
    });
    let g3 = MetricField::new("conformally_flat_kk", 3, Signature::Euclidean, move |x| {
        let qi = q(x).recip();
        let av = [x[1] * qi * -omega, x[0] * qi * omega, x[0].zero_like()];
        let mut out = Vec::with_capacity(9);
        for m in 0..3 {
            for n in 0..3 {
                let d = if m == n { qi } else { qi.zero_like() };
                out.push(d - av[m] * av[n]);
            }
        }
        Ok(out)
    });
    let sigma = ScalarField::new(move |x| Ok(q(x).ln() * 0.5 + x[0] * x[2] * beta));
    KKTriple::new(sigma, a, g3, Signature::Euclidean)
}
