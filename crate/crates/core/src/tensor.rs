//! Dense tensors over a chart point, with jet or plain real components.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::jet::{Jet, JetSpace};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variance {
    Co,
    Contra,
}

pub use Variance::{Co, Contra};

/// Conformal weight annotation, stored as twice the weight so that
/// half-integers are exact. Bookkeeping only; never used in arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Weight(pub i32);

impl Weight {
    pub fn whole(w: i32) -> Self {
        Weight(2 * w)
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / 2.0
    }
}

/// Iterates over all index tuples of `rank` slots with extent `n`.
pub fn for_each_index(n: usize, rank: usize, mut f: impl FnMut(&[usize])) {
    let mut idx = vec![0usize; rank];
    let total = n.pow(rank as u32);
    for _ in 0..total {
        f(&idx);
        for s in (0..rank).rev() {
            idx[s] += 1;
            if idx[s] < n {
                break;
            }
            idx[s] = 0;
        }
    }
}

fn flat(n: usize, idx: &[usize]) -> usize {
    idx.iter().fold(0, |acc, &i| acc * n + i)
}

/// Tensor whose components are jets (so that it can be differentiated again).
#[derive(Debug, Clone)]
pub struct JetTensor {
    n: usize,
    slots: Vec<Variance>,
    comps: Vec<Jet>,
    pub weight: Weight,
}

impl JetTensor {
    pub fn from_fn(n: usize, slots: &[Variance], mut f: impl FnMut(&[usize]) -> Jet) -> Self {
        let mut comps = Vec::with_capacity(n.pow(slots.len() as u32));
        for_each_index(n, slots.len(), |idx| comps.push(f(idx)));
        JetTensor { n, slots: slots.to_vec(), comps, weight: Weight::default() }
    }

    pub fn try_from_fn<E>(
        n: usize,
        slots: &[Variance],
        mut f: impl FnMut(&[usize]) -> Result<Jet, E>,
    ) -> Result<Self, E> {
        let mut comps = Vec::with_capacity(n.pow(slots.len() as u32));
        let mut err = None;
        for_each_index(n, slots.len(), |idx| {
            if err.is_some() {
                return;
            }
            match f(idx) {
                Ok(j) => comps.push(j),
                Err(e) => err = Some(e),
            }
        });
        match err {
            Some(e) => Err(e),
            None => Ok(JetTensor { n, slots: slots.to_vec(), comps, weight: Weight::default() }),
        }
    }

    pub fn zeros(space: &Arc<JetSpace>, n: usize, slots: &[Variance]) -> Self {
        Self::from_fn(n, slots, |_| Jet::zero(space))
    }

    /// A scalar (rank-0) tensor.
    pub fn scalar(j: Jet) -> Self {
        JetTensor { n: j.dim(), slots: Vec::new(), comps: vec![j], weight: Weight::default() }
    }

    pub fn with_weight(mut self, w: Weight) -> Self {
        self.weight = w;
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rank(&self) -> usize {
        self.slots.len()
    }

    pub fn slots(&self) -> &[Variance] {
        &self.slots
    }

    pub fn comps(&self) -> &[Jet] {
        &self.comps
    }

    pub fn at(&self, idx: &[usize]) -> &Jet {
        debug_assert_eq!(idx.len(), self.slots.len());
        &self.comps[flat(self.n, idx)]
    }

    pub fn space(&self) -> &Arc<JetSpace> {
        self.comps[0].space()
    }

    /// Smallest component order.
    pub fn order(&self) -> usize {
        self.comps.iter().map(|j| j.order()).min().unwrap_or(0)
    }

    pub fn value(&self) -> TensorValue {
        TensorValue {
            n: self.n,
            slots: self.slots.clone(),
            comps: self.comps.iter().map(|j| j.value()).collect(),
            weight: self.weight,
        }
    }

    pub fn map(&self, f: impl Fn(&Jet) -> Jet) -> Self {
        JetTensor { n: self.n, slots: self.slots.clone(), comps: self.comps.iter().map(f).collect(), weight: self.weight }
    }

    pub fn zip(&self, other: &JetTensor, f: impl Fn(&Jet, &Jet) -> Jet) -> Self {
        assert_eq!(self.comps.len(), other.comps.len(), "tensor shape mismatch");
        JetTensor {
            n: self.n,
            slots: self.slots.clone(),
            comps: self.comps.iter().zip(&other.comps).map(|(a, b)| f(a, b)).collect(),
            weight: self.weight,
        }
    }

    pub fn add(&self, other: &JetTensor) -> Self {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &JetTensor) -> Self {
        self.zip(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|j| j.scale(s))
    }

    pub fn mul_scalar(&self, s: &Jet) -> Self {
        self.map(|j| j * s)
    }

    pub fn truncate(&self, order: usize) -> Self {
        self.map(|j| j.truncate(order))
    }

    /// Reorders slots: output slot `k` is input slot `perm[k]`.
    pub fn permute(&self, perm: &[usize]) -> Self {
        let slots: Vec<Variance> = perm.iter().map(|&p| self.slots[p]).collect();
        let mut src = vec![0usize; perm.len()];
        JetTensor::from_fn(self.n, &slots, |idx| {
            for (k, &p) in perm.iter().enumerate() {
                src[p] = idx[k];
            }
            self.at(&src).clone()
        })
        .with_weight(self.weight)
    }
}

/// Tensor with real components at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorValue {
    pub n: usize,
    pub slots: Vec<Variance>,
    pub comps: Vec<f64>,
    pub weight: Weight,
}

impl TensorValue {
    pub fn from_fn(n: usize, slots: &[Variance], mut f: impl FnMut(&[usize]) -> f64) -> Self {
        let mut comps = Vec::with_capacity(n.pow(slots.len() as u32));
        for_each_index(n, slots.len(), |idx| comps.push(f(idx)));
        TensorValue { n, slots: slots.to_vec(), comps, weight: Weight::default() }
    }

    pub fn zeros(n: usize, slots: &[Variance]) -> Self {
        Self::from_fn(n, slots, |_| 0.0)
    }

    pub fn at(&self, idx: &[usize]) -> f64 {
        self.comps[flat(self.n, idx)]
    }

    pub fn rank(&self) -> usize {
        self.slots.len()
    }

    /// Max-norm of the components.
    pub fn max_abs(&self) -> f64 {
        self.comps.iter().fold(0.0, |m, &c| m.max(libm::fabs(c)))
    }

    pub fn sub(&self, other: &TensorValue) -> TensorValue {
        assert_eq!(self.comps.len(), other.comps.len(), "tensor shape mismatch");
        TensorValue {
            n: self.n,
            slots: self.slots.clone(),
            comps: self.comps.iter().zip(&other.comps).map(|(a, b)| a - b).collect(),
            weight: self.weight,
        }
    }

    pub fn scale(&self, s: f64) -> TensorValue {
        TensorValue { comps: self.comps.iter().map(|c| c * s).collect(), ..self.clone() }
    }

    /// Max-norm distance to another tensor of the same shape.
    pub fn max_diff(&self, other: &TensorValue) -> f64 {
        self.sub(other).max_abs()
    }
}

/// Max-norm difference of the values of two jet tensors.
pub fn max_value_diff(a: &JetTensor, b: &JetTensor) -> f64 {
    a.value().max_diff(&b.value())
}
