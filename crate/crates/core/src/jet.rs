//! Truncated multivariate Taylor expansions ("jets").
//!
//! A [`Jet`] carries the Taylor coefficients of a scalar function at a point,
//! up to total degree 3 in up to 4 variables. Coefficients are the normalized
//! ones, `c_α = ∂^α f / α!`, stored once per multi-index in graded
//! lexicographic order. Because the order is graded, a jet of order `k` uses a
//! prefix of the order-3 layout, so truncation is a slice operation and one
//! multiplication table serves every order.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::sync::OnceLock;

use thiserror::Error;

pub const MAX_ORDER: usize = 3;
pub const MAX_DIM: usize = 4;
/// Number of multi-indices of degree ≤ 3 in 4 variables.
pub const MAX_COEFFS: usize = 35;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum JetError {
    #[error("domain error in `{op}`: argument value {value}")]
    Domain { op: &'static str, value: f64 },
    #[error("variable index {index} out of range for dim {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("truncation order {0} exceeds the supported maximum of 3")]
    OrderOutOfRange(usize),
    #[error("dimension {0} not supported (expected 1..=4)")]
    DimOutOfRange(usize),
    #[error("operands disagree: dim {left} vs {right}")]
    DimMismatch { left: usize, right: usize },
    #[error("`{op}` expects {expected} operand(s), got {found}")]
    Arity {
        op: &'static str,
        expected: usize,
        found: usize,
    },
}

/// Multi-index layout and product/derivative tables for one dimension.
struct Layout {
    exps: Vec<[u8; MAX_DIM]>,
    /// `counts[k]` = number of multi-indices with degree ≤ k.
    counts: [usize; MAX_ORDER + 1],
    /// `(a, b, out)` triples sorted by `out`.
    products: Vec<(u8, u8, u8)>,
    /// `product_len[k]` = number of leading product entries with `out < counts[k]`.
    product_len: [usize; MAX_ORDER + 1],
    /// Per axis: `(source, target, factor)` for the partial derivative.
    partials: Vec<Vec<(u8, u8, f64)>>,
}

impl Layout {
    fn build(dim: usize) -> Self {
        let mut exps = Vec::new();
        let mut counts = [0; MAX_ORDER + 1];
        for degree in 0..=MAX_ORDER {
            let mut level = Vec::new();
            push_exponents(dim, degree, 0, &mut [0u8; MAX_DIM], &mut level);
            exps.extend(level);
            counts[degree] = exps.len();
        }
        let position = |e: &[u8; MAX_DIM]| exps.iter().position(|x| x == e);

        let mut products = Vec::new();
        for (i, a) in exps.iter().enumerate() {
            for (j, b) in exps.iter().enumerate() {
                let mut sum = [0u8; MAX_DIM];
                for k in 0..MAX_DIM {
                    sum[k] = a[k] + b[k];
                }
                if degree(&sum) <= MAX_ORDER {
                    let out = position(&sum).expect("sum of exponents is in the layout");
                    products.push((i as u8, j as u8, out as u8));
                }
            }
        }
        products.sort_by_key(|&(a, b, out)| (out, a, b));
        let mut product_len = [0; MAX_ORDER + 1];
        for k in 0..=MAX_ORDER {
            product_len[k] = products
                .iter()
                .take_while(|&&(_, _, out)| (out as usize) < counts[k])
                .count();
        }

        let mut partials = Vec::with_capacity(dim);
        for axis in 0..dim {
            let mut table = Vec::new();
            for (target, e) in exps.iter().enumerate() {
                if degree(e) >= MAX_ORDER {
                    continue;
                }
                let mut raised = *e;
                raised[axis] += 1;
                let source = position(&raised).expect("raised exponent is in the layout");
                table.push((source as u8, target as u8, f64::from(raised[axis])));
            }
            partials.push(table);
        }

        Layout {
            exps,
            counts,
            products,
            product_len,
            partials,
        }
    }
}

fn degree(e: &[u8; MAX_DIM]) -> usize {
    e.iter().map(|&x| x as usize).sum()
}

// Lexicographic with the first axis varying slowest: x0^2 before x0 x1.
fn push_exponents(
    dim: usize,
    remaining: usize,
    axis: usize,
    current: &mut [u8; MAX_DIM],
    out: &mut Vec<[u8; MAX_DIM]>,
) {
    if axis + 1 == dim {
        current[axis] = remaining as u8;
        out.push(*current);
        current[axis] = 0;
        return;
    }
    for k in (0..=remaining).rev() {
        current[axis] = k as u8;
        push_exponents(dim, remaining - k, axis + 1, current, out);
    }
    current[axis] = 0;
}

fn layout(dim: usize) -> &'static Layout {
    static LAYOUTS: OnceLock<Vec<Layout>> = OnceLock::new();
    let all = LAYOUTS.get_or_init(|| (1..=MAX_DIM).map(Layout::build).collect());
    &all[dim - 1]
}

/// Truncated Taylor expansion of a scalar at a point.
#[derive(Clone, Copy)]
pub struct Jet {
    dim: u8,
    order: u8,
    c: [f64; MAX_COEFFS],
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet")
            .field("dim", &self.dim)
            .field("order", &self.order)
            .field("coeffs", &self.coeffs())
            .finish()
    }
}

impl PartialEq for Jet {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.order == other.order && self.coeffs() == other.coeffs()
    }
}

fn check_shape(dim: usize, order: usize) -> Result<(), JetError> {
    if !(1..=MAX_DIM).contains(&dim) {
        return Err(JetError::DimOutOfRange(dim));
    }
    if order > MAX_ORDER {
        return Err(JetError::OrderOutOfRange(order));
    }
    Ok(())
}

impl Jet {
    /// Constant function. Panics if `dim` or `order` is out of range; use
    /// [`Jet::try_constant`] for unchecked input.
    pub fn constant(value: f64, dim: usize, order: usize) -> Jet {
        Self::try_constant(value, dim, order).expect("valid jet shape")
    }

    pub fn try_constant(value: f64, dim: usize, order: usize) -> Result<Jet, JetError> {
        check_shape(dim, order)?;
        let mut c = [0.0; MAX_COEFFS];
        c[0] = value;
        Ok(Jet {
            dim: dim as u8,
            order: order as u8,
            c,
        })
    }

    /// The coordinate function `x^index` expanded at `value`.
    pub fn variable(index: usize, value: f64, dim: usize, order: usize) -> Result<Jet, JetError> {
        check_shape(dim, order)?;
        if index >= dim {
            return Err(JetError::IndexOutOfRange { index, dim });
        }
        let mut jet = Jet::try_constant(value, dim, order)?;
        if order >= 1 {
            // degree-1 entries follow the constant, one per axis in axis order
            jet.c[1 + index] = 1.0;
        }
        Ok(jet)
    }

    /// All coordinate functions at `point`.
    pub fn variables(point: &[f64], order: usize) -> Result<Vec<Jet>, JetError> {
        (0..point.len())
            .map(|i| Jet::variable(i, point[i], point.len(), order))
            .collect()
    }

    /// Constant with the same shape as `self`.
    pub fn constant_like(&self, value: f64) -> Jet {
        let mut c = [0.0; MAX_COEFFS];
        c[0] = value;
        Jet {
            dim: self.dim,
            order: self.order,
            c,
        }
    }

    pub fn zero_like(&self) -> Jet {
        self.constant_like(0.0)
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn order(&self) -> usize {
        self.order as usize
    }

    pub fn len(&self) -> usize {
        layout(self.dim()).counts[self.order()]
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.c[..self.len()]
    }

    /// Exponent vectors matching [`Jet::coeffs`] entry for entry.
    pub fn exponents(&self) -> &'static [[u8; MAX_DIM]] {
        &layout(self.dim()).exps[..self.len()]
    }

    /// Normalized Taylor coefficient for the exponent vector `alpha`.
    pub fn coeff(&self, alpha: &[u8]) -> f64 {
        let mut e = [0u8; MAX_DIM];
        for (k, &a) in alpha.iter().enumerate().take(MAX_DIM) {
            e[k] = a;
        }
        if alpha.len() > self.dim() || degree(&e) > self.order() {
            return 0.0;
        }
        layout(self.dim())
            .exps
            .iter()
            .position(|x| *x == e)
            .map_or(0.0, |i| self.c[i])
    }

    /// Partial derivative along the listed axes, e.g. `[0, 0, 2]` is ∂₀∂₀∂₂.
    /// Returns 0 beyond the truncation order.
    pub fn derivative(&self, axes: &[usize]) -> f64 {
        let mut e = [0u8; MAX_DIM];
        for &a in axes {
            if a >= self.dim() {
                return 0.0;
            }
            e[a] += 1;
        }
        let factorial: f64 = e
            .iter()
            .map(|&k| (1..=k as u32).map(f64::from).product::<f64>())
            .product();
        self.coeff(&e[..self.dim()]) * factorial
    }

    pub fn gradient(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.derivative(&[i])).collect()
    }

    /// Jet of `∂f/∂x^axis`; the order drops by one (order-0 input gives an
    /// order-0 zero).
    pub fn partial(&self, axis: usize) -> Jet {
        assert!(axis < self.dim(), "axis {axis} out of range");
        let order = self.order().saturating_sub(1);
        let mut out = Jet {
            dim: self.dim,
            order: order as u8,
            c: [0.0; MAX_COEFFS],
        };
        if self.order == 0 {
            return out;
        }
        let n = layout(self.dim()).counts[order];
        for &(src, dst, factor) in &layout(self.dim()).partials[axis] {
            if (dst as usize) < n {
                out.c[dst as usize] = factor * self.c[src as usize];
            }
        }
        out
    }

    pub fn truncate(&self, order: usize) -> Jet {
        let order = order.min(self.order());
        let mut out = *self;
        out.order = order as u8;
        let n = layout(self.dim()).counts[order];
        out.c[n..].iter_mut().for_each(|x| *x = 0.0);
        out
    }

    fn meet(&self, other: &Jet) -> (usize, usize) {
        assert_eq!(
            self.dim, other.dim,
            "jet dimension mismatch: {} vs {}",
            self.dim, other.dim
        );
        (self.dim(), self.order().min(other.order()))
    }

    fn shaped(dim: usize, order: usize) -> Jet {
        Jet {
            dim: dim as u8,
            order: order as u8,
            c: [0.0; MAX_COEFFS],
        }
    }

    /// Jet whose derivatives vanish up to `self`'s order; the nilpotent part.
    fn nilpotent(&self) -> Jet {
        let mut d = *self;
        d.c[0] = 0.0;
        d
    }

    /// `Σ_k derivs[k]/k! · δ^k` where `δ = self - value`: composition with a
    /// univariate function whose derivatives at `value` are `derivs`.
    fn compose(&self, derivs: [f64; MAX_ORDER + 1]) -> Jet {
        let delta = self.nilpotent();
        let mut out = self.constant_like(derivs[0]);
        let mut power = self.constant_like(1.0);
        let mut factorial = 1.0;
        for (k, &d) in derivs.iter().enumerate().skip(1).take(self.order()) {
            power *= delta;
            factorial *= k as f64;
            out += power * (d / factorial);
        }
        out
    }

    pub fn recip(&self) -> Jet {
        let v = self.value();
        let r = 1.0 / v;
        self.compose([r, -r * r, 2.0 * r * r * r, -6.0 * r * r * r * r])
    }

    pub fn try_recip(&self) -> Result<Jet, JetError> {
        if self.value() == 0.0 {
            return Err(JetError::Domain { op: "div", value: 0.0 });
        }
        Ok(self.recip())
    }

    pub fn try_div(&self, rhs: &Jet) -> Result<Jet, JetError> {
        if self.dim != rhs.dim {
            return Err(JetError::DimMismatch {
                left: self.dim(),
                right: rhs.dim(),
            });
        }
        Ok(*self * rhs.try_recip()?)
    }

    pub fn powi(&self, n: i32) -> Jet {
        if n < 0 {
            return self.recip().powi(-n);
        }
        let mut result = self.constant_like(1.0);
        let mut base = *self;
        let mut e = n as u32;
        while e > 0 {
            if e & 1 == 1 {
                result *= base;
            }
            e >>= 1;
            if e > 0 {
                base = base * base;
            }
        }
        result
    }

    pub fn try_powi(&self, n: i32) -> Result<Jet, JetError> {
        if n < 0 && self.value() == 0.0 {
            return Err(JetError::Domain {
                op: "pow_int",
                value: 0.0,
            });
        }
        Ok(self.powi(n))
    }

    pub fn sqrt(&self) -> Jet {
        let v = self.value();
        let s = v.sqrt();
        self.compose([s, 0.5 / s, -0.25 / (s * v), 0.375 / (s * v * v)])
    }

    pub fn try_sqrt(&self) -> Result<Jet, JetError> {
        if self.value() <= 0.0 {
            return Err(JetError::Domain {
                op: "sqrt",
                value: self.value(),
            });
        }
        Ok(self.sqrt())
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        self.compose([e; 4])
    }

    pub fn ln(&self) -> Jet {
        let v = self.value();
        let r = 1.0 / v;
        self.compose([v.ln(), r, -r * r, 2.0 * r * r * r])
    }

    pub fn try_ln(&self) -> Result<Jet, JetError> {
        if self.value() <= 0.0 {
            return Err(JetError::Domain {
                op: "ln",
                value: self.value(),
            });
        }
        Ok(self.ln())
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        self.compose([s, c, -s, -c])
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        self.compose([c, -s, -c, s])
    }

    pub fn tan(&self) -> Jet {
        let t = self.value().tan();
        let sec2 = 1.0 + t * t;
        self.compose([t, sec2, 2.0 * t * sec2, sec2 * (2.0 + 6.0 * t * t)])
    }

    pub fn try_tan(&self) -> Result<Jet, JetError> {
        if self.value().cos() == 0.0 {
            return Err(JetError::Domain {
                op: "tan",
                value: self.value(),
            });
        }
        Ok(self.tan())
    }
}

/// Operations available to expression evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JetOp {
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    PowInt(i32),
    Sqrt,
    Exp,
    Ln,
    Sin,
    Cos,
    Tan,
}

impl JetOp {
    pub fn name(&self) -> &'static str {
        match self {
            JetOp::Add => "add",
            JetOp::Sub => "sub",
            JetOp::Mul => "mul",
            JetOp::Div => "div",
            JetOp::Neg => "neg",
            JetOp::PowInt(_) => "pow_int",
            JetOp::Sqrt => "sqrt",
            JetOp::Exp => "exp",
            JetOp::Ln => "ln",
            JetOp::Sin => "sin",
            JetOp::Cos => "cos",
            JetOp::Tan => "tan",
        }
    }

    fn arity(&self) -> usize {
        match self {
            JetOp::Add | JetOp::Sub | JetOp::Mul | JetOp::Div => 2,
            _ => 1,
        }
    }

    /// Checked application: domain violations become [`JetError::Domain`].
    pub fn apply(&self, args: &[Jet]) -> Result<Jet, JetError> {
        if args.len() != self.arity() {
            return Err(JetError::Arity {
                op: self.name(),
                expected: self.arity(),
                found: args.len(),
            });
        }
        if args.len() == 2 && args[0].dim != args[1].dim {
            return Err(JetError::DimMismatch {
                left: args[0].dim(),
                right: args[1].dim(),
            });
        }
        let x = &args[0];
        Ok(match self {
            JetOp::Add => *x + args[1],
            JetOp::Sub => *x - args[1],
            JetOp::Mul => *x * args[1],
            JetOp::Div => x.try_div(&args[1])?,
            JetOp::Neg => -*x,
            JetOp::PowInt(n) => x.try_powi(*n)?,
            JetOp::Sqrt => x.try_sqrt()?,
            JetOp::Exp => x.exp(),
            JetOp::Ln => x.try_ln()?,
            JetOp::Sin => x.sin(),
            JetOp::Cos => x.cos(),
            JetOp::Tan => x.try_tan()?,
        })
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        let (dim, order) = self.meet(&rhs);
        let mut out = Jet::shaped(dim, order);
        for i in 0..layout(dim).counts[order] {
            out.c[i] = self.c[i] + rhs.c[i];
        }
        out
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        let (dim, order) = self.meet(&rhs);
        let mut out = Jet::shaped(dim, order);
        for i in 0..layout(dim).counts[order] {
            out.c[i] = self.c[i] - rhs.c[i];
        }
        out
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        let (dim, order) = self.meet(&rhs);
        let table = layout(dim);
        let mut out = Jet::shaped(dim, order);
        for &(a, b, k) in &table.products[..table.product_len[order]] {
            out.c[k as usize] += self.c[a as usize] * rhs.c[b as usize];
        }
        out
    }
}

/// Unchecked division; a zero value part yields non-finite coefficients, as
/// with `f64`. Use [`Jet::try_div`] where the error matters.
impl Div for Jet {
    type Output = Jet;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: Jet) -> Jet {
        self * rhs.recip()
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(mut self) -> Jet {
        self.c.iter_mut().for_each(|x| *x = -*x);
        self
    }
}

impl AddAssign for Jet {
    fn add_assign(&mut self, rhs: Jet) {
        *self = *self + rhs;
    }
}

impl SubAssign for Jet {
    fn sub_assign(&mut self, rhs: Jet) {
        *self = *self - rhs;
    }
}

impl MulAssign for Jet {
    fn mul_assign(&mut self, rhs: Jet) {
        *self = *self * rhs;
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, rhs: f64) -> Jet {
        self.c[0] += rhs;
        self
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    fn sub(mut self, rhs: f64) -> Jet {
        self.c[0] -= rhs;
        self
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(mut self, rhs: f64) -> Jet {
        let n = self.len();
        self.c[..n].iter_mut().for_each(|x| *x *= rhs);
        self
    }
}

impl Div<f64> for Jet {
    type Output = Jet;
    fn div(self, rhs: f64) -> Jet {
        self * (1.0 / rhs)
    }
}

impl Add<Jet> for f64 {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        rhs + self
    }
}

impl Sub<Jet> for f64 {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        -rhs + self
    }
}

impl Mul<Jet> for f64 {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        rhs * self
    }
}

impl Div<Jet> for f64 {
    type Output = Jet;
    fn div(self, rhs: Jet) -> Jet {
        rhs.recip() * self
    }
}

/// Sum of jets; `None` for an empty iterator.
pub fn sum<I: IntoIterator<Item = Jet>>(iter: I) -> Option<Jet> {
    iter.into_iter().reduce(|a, b| a + b)
}


#[cfg(test)]
mod properties {
    use proptest::prelude::*;

    use super::*;

    fn shape() -> impl Strategy<Value = (usize, usize)> {
        (1..=MAX_DIM, 0..=MAX_ORDER)
    }

    fn jet_with(dim: usize, order: usize) -> impl Strategy<Value = Jet> {
        let len = layout(dim).counts[order];
        proptest::collection::vec(-2.0..2.0f64, len).prop_map(move |v| {
            let mut j = Jet::constant(0.0, dim, order);
            j.c[..len].copy_from_slice(&v);
            j
        })
    }

    fn triple() -> impl Strategy<Value = (Jet, Jet, Jet)> {
        shape().prop_flat_map(|(d, o)| (jet_with(d, o), jet_with(d, o), jet_with(d, o)))
    }

    fn close(a: &Jet, b: &Jet, tol: f64) -> bool {
        a.dim == b.dim
            && a.order == b.order
            && a.coeffs()
                .iter()
                .zip(b.coeffs())
                .all(|(x, y)| (x - y).abs() <= tol * (1.0 + x.abs().max(y.abs())))
    }

    proptest! {
        #[test]
        fn addition_is_a_group((a, b, c) in triple()) {
            prop_assert_eq!(a + b, b + a);
            prop_assert!(close(&((a + b) + c), &(a + (b + c)), 1e-15));
            prop_assert_eq!(a - a, a.zero_like());
            prop_assert_eq!(a + a.zero_like(), a);
        }

        #[test]
        fn multiplication_is_commutative_and_associative((a, b, c) in triple()) {
            // same terms, summed in a different order
            prop_assert!(close(&(a * b), &(b * a), 1e-15));
            prop_assert!(close(&((a * b) * c), &(a * (b * c)), 1e-13));
            prop_assert_eq!(a * a.constant_like(1.0), a);
        }

        #[test]
        fn multiplication_distributes((a, b, c) in triple()) {
            prop_assert!(close(&(a * (b + c)), &(a * b + a * c), 1e-13));
        }

        #[test]
        fn truncation_is_a_ring_map((a, b, _c) in triple(), k in 0..=MAX_ORDER) {
            let k = k.min(a.order());
            prop_assert!(close(&(a * b).truncate(k), &(a.truncate(k) * b.truncate(k)), 1e-14));
            prop_assert_eq!((a + b).truncate(k), a.truncate(k) + b.truncate(k));
        }

        #[test]
        fn reciprocal_inverts((a, _b, _c) in triple(), shift in 0.5..3.0f64) {
            let u = a * 0.1 + shift;
            prop_assert!(close(&(u * u.recip()), &u.constant_like(1.0), 1e-12));
        }

        #[test]
        fn elementary_identities((a, _b, _c) in triple()) {
            let one = a.constant_like(1.0);
            let s = a.sin();
            let c = a.cos();
            prop_assert!(close(&(s * s + c * c), &one, 1e-12));
            let u = a * 0.2 + 2.0;
            prop_assert!(close(&u.ln().exp(), &u, 1e-12));
            prop_assert!(close(&(u.sqrt() * u.sqrt()), &u, 1e-12));
            prop_assert!(close(&u.powi(3), &(u * u * u), 1e-12));
        }
    }
}
