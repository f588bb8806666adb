use serde::Serialize;

/// Below this magnitude a compared quantity is treated as zero and the
/// residual is read as an absolute number.
pub const ZERO_SCALE: f64 = 1e-9;

/// Largest absolute deviation of a check, with the magnitude it is judged
/// against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Residual {
    pub max_abs: f64,
    pub scale: f64,
}

impl Residual {
    pub const ZERO: Residual = Residual {
        max_abs: 0.0,
        scale: 0.0,
    };

    pub fn new(max_abs: f64, scale: f64) -> Self {
        Residual { max_abs, scale }
    }

    /// Relative to `scale`, or absolute when `scale` is below [`ZERO_SCALE`].
    pub fn relative(&self) -> f64 {
        if self.scale > ZERO_SCALE {
            self.max_abs / self.scale
        } else {
            self.max_abs
        }
    }

    pub fn within(&self, tol: f64) -> bool {
        self.relative() < tol
    }

    /// Worst case of the two, each keeping its own scale.
    pub fn worst(self, other: Residual) -> Residual {
        if other.relative() > self.relative() || other.relative().is_nan() {
            other
        } else {
            self
        }
    }

    /// Combine across sample points: worst deviation against the largest scale.
    pub fn merge(self, other: Residual) -> Residual {
        Residual {
            max_abs: self.max_abs.max(other.max_abs),
            scale: self.scale.max(other.scale),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiny_scale_reads_absolute() {
        assert_eq!(Residual::new(1e-14, 1e-15).relative(), 1e-14);
        assert_eq!(Residual::new(0.25, 0.5).relative(), 0.5);
    }
}
