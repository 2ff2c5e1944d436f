//! Uniform partitions of an interval.

use crate::error::{Result, WfemError};

/// Uniform mesh of `(a, b)` with `n_elems` elements `[x_k, x_{k+1}]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh1D {
    a: f64,
    b: f64,
    h: f64,
    nodes: Vec<f64>,
}

/// Relative position of two elements, which decides the quadrature used on their product.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PairClass {
    Identical,
    Adjacent,
    Disjoint,
}

/// Classify the element pair `(k, l)`.
pub fn element_pair_class(k: usize, l: usize) -> PairClass {
    match k.abs_diff(l) {
        0 => PairClass::Identical,
        1 => PairClass::Adjacent,
        _ => PairClass::Disjoint,
    }
}

impl Mesh1D {
    pub fn uniform(a: f64, b: f64, n_elems: usize) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) || a >= b {
            return Err(WfemError::Argument(format!("empty interval ({a}, {b})")));
        }
        if n_elems < 2 {
            return Err(WfemError::Argument(format!("need at least 2 elements, got {n_elems}")));
        }
        let h = (b - a) / n_elems as f64;
        let mut nodes: Vec<f64> = (0..=n_elems).map(|k| a + k as f64 * h).collect();
        nodes[n_elems] = b;
        Ok(Self { a, b, h, nodes })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn n_elems(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn element(&self, k: usize) -> (f64, f64) {
        (self.nodes[k], self.nodes[k + 1])
    }

    /// Index of the element containing `x` (the left one at interior nodes).
    /// `None` outside `[a, b]`.
    pub fn locate(&self, x: f64) -> Option<usize> {
        if !(x >= self.a && x <= self.b) {
            return None;
        }
        let k = ((x - self.a) / self.h).floor() as usize;
        Some(k.min(self.n_elems() - 1))
    }

    pub fn touches_left(&self, k: usize) -> bool {
        k == 0
    }

    pub fn touches_right(&self, k: usize) -> bool {
        k + 1 == self.n_elems()
    }
}

/// Free-function spelling of [`Mesh1D::uniform`].
pub fn build_uniform_mesh(a: f64, b: f64, n_elems: usize) -> Result<Mesh1D> {
    Mesh1D::uniform(a, b, n_elems)
}
