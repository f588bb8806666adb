//! Sample point sets over a domain box.
//!
//! Random points come from xoshiro256** seeded through SplitMix64 (the
//! reference seeding of the generator's authors). Each coordinate is
//! `lo + u·(hi − lo)` with `u = (next_u64 >> 11) · 2⁻⁵³`, drawn in axis order
//! point by point, so any implementation of the two reference algorithms
//! reproduces the same sets.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;
use serde::Serialize;

use crate::catalog::Interval;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum PointSpec {
    Random {
        count: usize,
        seed: u64,
    },
    /// Points per axis; missing trailing axes use one point at the midpoint.
    Grid {
        counts: Vec<usize>,
    },
    Explicit {
        points: Vec<Vec<f64>>,
    },
}

/// Uniform draws in `[0, 1)` with 53 random bits.
pub struct Sampler(Xoshiro256StarStar);

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Sampler(Xoshiro256StarStar::seed_from_u64(seed))
    }

    pub fn unit(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn point(&mut self, domain: &[Interval]) -> Vec<f64> {
        domain.iter().map(|iv| iv.lo + self.unit() * (iv.hi - iv.lo)).collect()
    }
}

pub fn random_points(domain: &[Interval], count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut s = Sampler::new(seed);
    (0..count).map(|_| s.point(domain)).collect()
}

/// Tensor grid with the first axis varying slowest. One point on an axis
/// sits at the midpoint; more include both endpoints.
pub fn grid_points(domain: &[Interval], counts: &[usize]) -> Result<Vec<Vec<f64>>> {
    if counts.len() > domain.len() || counts.contains(&0) {
        return Err(Error::InvalidParameter(format!(
            "grid needs 1 to {} positive counts, got {counts:?}",
            domain.len()
        )));
    }
    let axes: Vec<Vec<f64>> = domain
        .iter()
        .enumerate()
        .map(|(i, iv)| match counts.get(i).copied().unwrap_or(1) {
            1 => vec![0.5 * (iv.lo + iv.hi)],
            n => (0..n)
                .map(|k| iv.lo + (iv.hi - iv.lo) * k as f64 / (n - 1) as f64)
                .collect(),
        })
        .collect();
    let mut out = vec![Vec::new()];
    for axis in &axes {
        out = out
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |v| {
                    let mut q = p.clone();
                    q.push(*v);
                    q
                })
            })
            .collect();
    }
    Ok(out)
}

impl PointSpec {
    /// Number of points described.
    pub fn count(&self) -> usize {
        match self {
            PointSpec::Random { count, .. } => *count,
            PointSpec::Grid { counts } => counts.iter().product(),
            PointSpec::Explicit { points } => points.len(),
        }
    }

    pub fn points(&self, domain: &[Interval]) -> Result<Vec<Vec<f64>>> {
        match self {
            PointSpec::Random { count, seed } => Ok(random_points(domain, *count, *seed)),
            PointSpec::Grid { counts } => grid_points(domain, counts),
            PointSpec::Explicit { points } => {
                for p in points {
                    if p.len() != domain.len() {
                        return Err(Error::Dimension {
                            context: "explicit sample point",
                            expected: domain.len(),
                            found: p.len(),
                        });
                    }
                }
                Ok(points.clone())
            }
        }
    }
}

/// Parse `"10"` or `"10,3,1"`.
pub fn parse_grid(spec: &str) -> Result<Vec<usize>> {
    spec.split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| Error::InvalidParameter(format!("bad grid spec `{spec}`")))
        })
        .collect()
}

/// Parse `"x1,x2,..;y1,y2,.."`.
pub fn parse_point_list(spec: &str) -> Result<Vec<Vec<f64>>> {
    spec.split(';')
        .map(|p| {
            p.split(',')
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| Error::InvalidParameter(format!("bad point list `{spec}`")))
                })
                .collect()
        })
        .collect()
}
