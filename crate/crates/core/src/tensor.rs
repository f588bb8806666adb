//! Dense small tensors over a runtime dimension.

use std::ops::{Index, IndexMut};

use crate::jet::Jet;

/// Rank-`rank` array with every index running over `0..dim`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T> {
    dim: usize,
    rank: usize,
    data: Vec<T>,
}

impl<T> Tensor<T> {
    pub fn from_fn(dim: usize, rank: usize, mut f: impl FnMut(&[usize]) -> T) -> Self {
        let len = dim.pow(rank as u32);
        let mut data = Vec::with_capacity(len);
        let mut idx = vec![0usize; rank];
        for _ in 0..len {
            data.push(f(&idx));
            for slot in idx.iter_mut().rev() {
                *slot += 1;
                if *slot < dim {
                    break;
                }
                *slot = 0;
            }
        }
        Tensor { dim, rank, data }
    }

    pub fn try_from_fn<E>(dim: usize, rank: usize, mut f: impl FnMut(&[usize]) -> Result<T, E>) -> Result<Self, E> {
        let mut err = None;
        let t = Tensor::from_fn(dim, rank, |i| match f(i) {
            Ok(v) => Some(v),
            Err(e) => {
                err.get_or_insert(e);
                None
            }
        });
        match err {
            Some(e) => Err(e),
            None => Ok(Tensor {
                dim,
                rank,
                data: t.data.into_iter().map(|v| v.expect("no error")).collect(),
            }),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.rank, "index rank mismatch");
        idx.iter().fold(0, |acc, &i| {
            debug_assert!(i < self.dim);
            acc * self.dim + i
        })
    }

    pub fn get(&self, idx: &[usize]) -> &T {
        &self.data[self.offset(idx)]
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Tensor<U> {
        Tensor {
            dim: self.dim,
            rank: self.rank,
            data: self.data.iter().map(f).collect(),
        }
    }
}

impl<T, const N: usize> Index<[usize; N]> for Tensor<T> {
    type Output = T;
    fn index(&self, idx: [usize; N]) -> &T {
        &self.data[self.offset(&idx)]
    }
}

impl<T, const N: usize> IndexMut<[usize; N]> for Tensor<T> {
    fn index_mut(&mut self, idx: [usize; N]) -> &mut T {
        let o = self.offset(&idx);
        &mut self.data[o]
    }
}

impl Tensor<f64> {
    pub fn zeros(dim: usize, rank: usize) -> Self {
        Tensor::from_fn(dim, rank, |_| 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn max_abs_diff(&self, other: &Tensor<f64>) -> f64 {
        assert_eq!(self.data.len(), other.data.len());
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Full contraction `Σ a_i b_i` over identical index layouts.
    pub fn dot(&self, other: &Tensor<f64>) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn scaled(&self, s: f64) -> Tensor<f64> {
        self.map(|x| x * s)
    }
}

impl Tensor<Jet> {
    pub fn values(&self) -> Tensor<f64> {
        self.map(Jet::value)
    }
}

/// Sign of the permutation `p` of `0..p.len()`; 0 if an entry repeats.
pub fn permutation_sign(p: &[usize]) -> i32 {
    let mut sign = 1;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            if p[i] == p[j] {
                return 0;
            }
            if p[i] > p[j] {
                sign = -sign;
            }
        }
    }
    sign
}

/// Raise or lower every index of a rank-2 or rank-4 value tensor with `m`
/// (contracting each slot with the matching row of `m`).
pub fn transform_all(t: &Tensor<f64>, m: &Tensor<f64>) -> Tensor<f64> {
    let n = t.dim();
    match t.rank() {
        1 => Tensor::from_fn(n, 1, |i| (0..n).map(|a| m[[i[0], a]] * t[[a]]).sum()),
        2 => Tensor::from_fn(n, 2, |i| {
            let mut s = 0.0;
            for a in 0..n {
                for b in 0..n {
                    s += m[[i[0], a]] * m[[i[1], b]] * t[[a, b]];
                }
            }
            s
        }),
        4 => {
            // one slot at a time keeps this at n^5 rather than n^8
            let mut cur = t.clone();
            for slot in 0..4 {
                cur = Tensor::from_fn(n, 4, |i| {
                    let mut j = [i[0], i[1], i[2], i[3]];
                    (0..n)
                        .map(|a| {
                            j[slot] = a;
                            m[[i[slot], a]] * cur[j]
                        })
                        .sum()
                });
            }
            cur
        }
        r => panic!("transform_all: unsupported rank {r}"),
    }
}
