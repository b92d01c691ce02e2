//! Symmetric tensors over R^d in compressed multi-index storage.
//!
//! A symmetric order-q tensor is stored as a map from non-decreasing
//! multi-indices (i_1 <= ... <= i_q) to the tensor entry shared by all
//! arrangements of that index. The number of arrangements (the multinomial
//! multiplicity) is recomputed where sums over the full index range are
//! needed, so norms and inner products read
//!
//!   <f, g> = sum_alpha  mult(alpha) f_alpha g_alpha.
//!
//! Dense tensors exist only as an exchange/test format; every production
//! operation stays in compressed form, so orders up to the moment cap never
//! materialise d^q entries.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

pub type MultiIndex = Vec<u32>;

/// Number of distinct arrangements of a sorted multi-index: q! / prod(m_j!).
pub fn multiplicity(index: &[u32]) -> f64 {
    let mut acc = 1.0f64;
    let mut run = 1u64;
    let mut pos = 1u64;
    for w in 1..index.len() {
        pos += 1;
        if index[w] == index[w - 1] {
            run += 1;
        } else {
            run = 1;
        }
        // incremental multinomial: multiply by pos, divide by run length
        acc = acc * pos as f64 / run as f64;
    }
    acc
}

/// Merge two sorted multi-indices.
pub fn merge_sorted(a: &[u32], b: &[u32]) -> MultiIndex {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            out.push(a[i]);
            i += 1;
        } else {
            out.push(b[j]);
            j += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Multiset difference u \ a, assuming a is a sub-multiset of u.
fn multiset_remove(u: &[u32], a: &[u32]) -> MultiIndex {
    let mut out = Vec::with_capacity(u.len() - a.len());
    let mut j = 0;
    for &x in u {
        if j < a.len() && a[j] == x {
            j += 1;
        } else {
            out.push(x);
        }
    }
    debug_assert_eq!(j, a.len());
    out
}

fn is_sub_multiset(a: &[u32], w: &[u32]) -> bool {
    let mut j = 0;
    for &x in a {
        while j < w.len() && w[j] < x {
            j += 1;
        }
        if j >= w.len() || w[j] != x {
            return false;
        }
        j += 1;
    }
    true
}

/// All sorted sub-multisets of size r of the sorted multiset u.
fn sub_multisets(u: &[u32], r: usize) -> Vec<MultiIndex> {
    // distinct values with counts
    let mut vals: Vec<(u32, usize)> = Vec::new();
    for &x in u {
        match vals.last_mut() {
            Some((v, c)) if *v == x => *c += 1,
            _ => vals.push((x, 1)),
        }
    }
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(r);
    fn rec(
        vals: &[(u32, usize)],
        pos: usize,
        remaining: usize,
        current: &mut MultiIndex,
        out: &mut Vec<MultiIndex>,
    ) {
        if remaining == 0 {
            out.push(current.clone());
            return;
        }
        if pos >= vals.len() {
            return;
        }
        let avail: usize = vals[pos..].iter().map(|&(_, c)| c).sum();
        if avail < remaining {
            return;
        }
        let (v, c) = vals[pos];
        let take_max = c.min(remaining);
        for take in (0..=take_max).rev() {
            let before = current.len();
            for _ in 0..take {
                current.push(v);
            }
            rec(vals, pos + 1, remaining - take, current, out);
            current.truncate(before);
        }
    }
    rec(&vals, 0, r, &mut current, &mut out);
    out
}

/// Dense order-q tensor over R^d in row-major layout; the raw-input format
/// for `symmetrize` and the expanded view used by test oracles.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    dim: usize,
    order: usize,
    data: Vec<f64>,
}

pub const DENSE_CAP: usize = 1 << 22;

fn dense_len(dim: usize, order: usize) -> Result<usize> {
    let mut len = 1usize;
    for _ in 0..order {
        len = len
            .checked_mul(dim)
            .filter(|&l| l <= DENSE_CAP)
            .ok_or_else(|| {
                Error::Capacity(format!(
                    "dense tensor of order {order} over R^{dim} exceeds {DENSE_CAP} entries"
                ))
            })?;
    }
    Ok(len)
}

impl DenseTensor {
    pub fn zeros(dim: usize, order: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("tensor dimension must be positive"));
        }
        let len = dense_len(dim, order)?;
        Ok(DenseTensor {
            dim,
            order,
            data: vec![0.0; len],
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    fn offset(&self, idx: &[u32]) -> usize {
        debug_assert_eq!(idx.len(), self.order);
        let mut off = 0usize;
        for &i in idx {
            debug_assert!((i as usize) < self.dim);
            off = off * self.dim + i as usize;
        }
        off
    }

    pub fn get(&self, idx: &[u32]) -> f64 {
        self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[u32], value: f64) {
        let off = self.offset(idx);
        self.data[off] = value;
    }

    /// Iterate all index tuples in row-major order.
    pub fn for_each(&self, mut f: impl FnMut(&[u32], f64)) {
        let mut idx = vec![0u32; self.order];
        for (off, &v) in self.data.iter().enumerate() {
            let mut rem = off;
            for k in (0..self.order).rev() {
                idx[k] = (rem % self.dim) as u32;
                rem /= self.dim;
            }
            f(&idx, v);
        }
    }
}

/// Symmetric order-q kernel f in H^{(.) q} with H = R^d.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "KernelRepr", into = "KernelRepr")]
pub struct SymmetricKernel {
    order: usize,
    dim: usize,
    coeffs: BTreeMap<MultiIndex, f64>,
}

/// Serialized layout: order, dim, list of [sorted multi-index, coefficient].
#[derive(Serialize, Deserialize)]
struct KernelRepr {
    order: usize,
    dim: usize,
    coeffs: Vec<(MultiIndex, f64)>,
}

impl From<SymmetricKernel> for KernelRepr {
    fn from(k: SymmetricKernel) -> Self {
        KernelRepr {
            order: k.order,
            dim: k.dim,
            coeffs: k.coeffs.into_iter().collect(),
        }
    }
}

impl TryFrom<KernelRepr> for SymmetricKernel {
    type Error = Error;

    fn try_from(r: KernelRepr) -> Result<Self> {
        let mut k = SymmetricKernel::zero(r.dim, r.order)?;
        for (idx, c) in r.coeffs {
            if idx.len() != r.order {
                return Err(Error::invalid(format!(
                    "multi-index {idx:?} does not have order {}",
                    r.order
                )));
            }
            if idx.windows(2).any(|w| w[0] > w[1]) {
                return Err(Error::invalid(format!(
                    "multi-index {idx:?} is not sorted"
                )));
            }
            if idx.iter().any(|&i| i as usize >= r.dim) {
                return Err(Error::invalid(format!(
                    "multi-index {idx:?} out of range for dim {}",
                    r.dim
                )));
            }
            k.add_entry(&idx, c);
        }
        Ok(k)
    }
}

impl SymmetricKernel {
    pub fn zero(dim: usize, order: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("kernel dimension must be positive"));
        }
        Ok(SymmetricKernel {
            order,
            dim,
            coeffs: BTreeMap::new(),
        })
    }

    /// Order-0 kernel holding the scalar c.
    pub fn constant(dim: usize, c: f64) -> Result<Self> {
        let mut k = SymmetricKernel::zero(dim, 0)?;
        k.add_entry(&[], c);
        Ok(k)
    }

    /// Order-1 kernel from a coordinate vector.
    pub fn from_vector(h: &[f64]) -> Result<Self> {
        let mut k = SymmetricKernel::zero(h.len(), 1)?;
        for (i, &c) in h.iter().enumerate() {
            k.add_entry(&[i as u32], c);
        }
        Ok(k)
    }

    /// h^{tensor q} for a coordinate vector h (symmetric by construction).
    pub fn power_of_vector(h: &[f64], order: usize) -> Result<Self> {
        let mut k = SymmetricKernel::zero(h.len(), order)?;
        if order == 0 {
            k.add_entry(&[], 1.0);
            return Ok(k);
        }
        let mut stack: Vec<(MultiIndex, f64)> = vec![(Vec::new(), 1.0)];
        for _ in 0..order {
            let mut next = Vec::new();
            for (idx, c) in stack {
                let start = idx.last().copied().unwrap_or(0);
                for i in start as usize..h.len() {
                    if h[i] == 0.0 {
                        continue;
                    }
                    let mut id2 = idx.clone();
                    id2.push(i as u32);
                    next.push((id2, c * h[i]));
                }
            }
            stack = next;
        }
        // entries built over sorted tuples only; the tensor value at a sorted
        // tuple is the plain product of coordinates
        for (idx, _) in stack {
            let value: f64 = idx.iter().map(|&i| h[i as usize]).product();
            k.set_entry(&idx, value);
        }
        Ok(k)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&MultiIndex, f64)> {
        self.coeffs.iter().map(|(k, &v)| (k, v))
    }

    pub fn entry_count(&self) -> usize {
        self.coeffs.len()
    }

    /// Tensor entry at an arbitrary (not necessarily sorted) tuple.
    pub fn get(&self, idx: &[u32]) -> f64 {
        let mut s = idx.to_vec();
        s.sort_unstable();
        self.coeffs.get(&s).copied().unwrap_or(0.0)
    }

    pub fn set_entry(&mut self, sorted_idx: &[u32], value: f64) {
        debug_assert!(sorted_idx.windows(2).all(|w| w[0] <= w[1]));
        debug_assert_eq!(sorted_idx.len(), self.order);
        if value == 0.0 {
            self.coeffs.remove(sorted_idx);
        } else {
            self.coeffs.insert(sorted_idx.to_vec(), value);
        }
    }

    pub fn add_entry(&mut self, sorted_idx: &[u32], value: f64) {
        debug_assert!(sorted_idx.windows(2).all(|w| w[0] <= w[1]));
        debug_assert_eq!(sorted_idx.len(), self.order);
        let slot = self.coeffs.entry(sorted_idx.to_vec()).or_insert(0.0);
        *slot += value;
        if *slot == 0.0 {
            self.coeffs.remove(sorted_idx);
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = self.clone();
        if s == 0.0 {
            out.coeffs.clear();
            return out;
        }
        for v in out.coeffs.values_mut() {
            *v *= s;
        }
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(self.dim, other.dim));
        }
        if self.order != other.order {
            return Err(Error::invalid(format!(
                "cannot add kernels of orders {} and {}",
                self.order, other.order
            )));
        }
        let mut out = self.clone();
        for (idx, v) in other.entries() {
            out.add_entry(idx, v);
        }
        Ok(out)
    }

    /// <f, g> over the full index range, from compressed storage.
    pub fn inner(&self, other: &Self) -> Result<f64> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(self.dim, other.dim));
        }
        if self.order != other.order {
            return Err(Error::invalid(format!(
                "inner product needs equal orders, got {} and {}",
                self.order, other.order
            )));
        }
        let (small, large) = if self.coeffs.len() <= other.coeffs.len() {
            (self, other)
        } else {
            (other, self)
        };
        let mut acc = 0.0;
        for (idx, v) in small.entries() {
            if let Some(&w) = large.coeffs.get(idx) {
                acc += multiplicity(idx) * v * w;
            }
        }
        Ok(acc)
    }

    pub fn norm_sq(&self) -> f64 {
        self.entries()
            .map(|(idx, v)| multiplicity(idx) * v * v)
            .sum()
    }

    /// Slice f(., i): the order-(q-1) kernel obtained by pinning one slot.
    pub fn slice(&self, i: u32) -> Self {
        let mut out = SymmetricKernel {
            order: self.order.saturating_sub(1),
            dim: self.dim,
            coeffs: BTreeMap::new(),
        };
        if self.order == 0 {
            return out;
        }
        for (idx, v) in self.entries() {
            if let Ok(pos) = idx.binary_search(&i) {
                let mut rest = idx.clone();
                rest.remove(pos);
                out.set_entry(&rest, v);
            }
        }
        out
    }

    pub fn to_dense(&self) -> Result<DenseTensor> {
        let mut d = DenseTensor::zeros(self.dim, self.order)?;
        let mut tuple = vec![0u32; self.order];
        fill_dense(&mut d, self, &mut tuple, 0);
        return Ok(d);

        fn fill_dense(
            d: &mut DenseTensor,
            k: &SymmetricKernel,
            tuple: &mut [u32],
            pos: usize,
        ) {
            if pos == tuple.len() {
                let v = k.get(tuple);
                if v != 0.0 {
                    d.set(tuple, v);
                }
                return;
            }
            for i in 0..k.dim as u32 {
                tuple[pos] = i;
                fill_dense(d, k, tuple, pos + 1);
            }
        }
    }
}

/// Symmetrization: average of the raw tensor over all index permutations.
///
/// Per sorted multi-index this is the mean over the distinct arrangements,
/// since each arrangement is hit by the same number of permutations.
pub fn symmetrize(raw: &DenseTensor) -> SymmetricKernel {
    let mut sums: BTreeMap<MultiIndex, f64> = BTreeMap::new();
    raw.for_each(|idx, v| {
        let mut s = idx.to_vec();
        s.sort_unstable();
        *sums.entry(s).or_insert(0.0) += v;
    });
    let mut out = SymmetricKernel {
        order: raw.order(),
        dim: raw.dim(),
        coeffs: BTreeMap::new(),
    };
    for (idx, total) in sums {
        let value = total / multiplicity(&idx);
        out.set_entry(&idx, value);
    }
    out
}

/// Raw contraction f (x)_r g kept in grouped compressed form: the output
/// tensor is symmetric inside its first p-r slots and inside its last q-r
/// slots separately, so one value per pair of sorted groups suffices.
#[derive(Debug, Clone)]
pub struct PairTensor {
    dim: usize,
    left_order: usize,
    right_order: usize,
    vals: BTreeMap<(MultiIndex, MultiIndex), f64>,
}

impl PairTensor {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn left_order(&self) -> usize {
        self.left_order
    }

    pub fn right_order(&self) -> usize {
        self.right_order
    }

    pub fn norm_sq(&self) -> f64 {
        self.vals
            .iter()
            .map(|((b, g), v)| multiplicity(b) * multiplicity(g) * v * v)
            .sum()
    }

    pub fn inner(&self, other: &Self) -> Result<f64> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(self.dim, other.dim));
        }
        if self.left_order != other.left_order || self.right_order != other.right_order {
            return Err(Error::invalid(
                "pair-tensor inner product needs matching group orders",
            ));
        }
        let mut acc = 0.0;
        for (key, v) in &self.vals {
            if let Some(w) = other.vals.get(key) {
                acc += multiplicity(&key.0) * multiplicity(&key.1) * v * w;
            }
        }
        Ok(acc)
    }

    pub fn to_dense(&self) -> Result<DenseTensor> {
        let order = self.left_order + self.right_order;
        let mut d = DenseTensor::zeros(self.dim, order)?;
        let mut tuple = vec![0u32; order];
        let split = self.left_order;
        fill(self, &mut d, &mut tuple, 0, split);
        return Ok(d);

        fn fill(p: &PairTensor, d: &mut DenseTensor, tuple: &mut [u32], pos: usize, split: usize) {
            if pos == tuple.len() {
                let mut left = tuple[..split].to_vec();
                let mut right = tuple[split..].to_vec();
                left.sort_unstable();
                right.sort_unstable();
                if let Some(&v) = p.vals.get(&(left, right)) {
                    if v != 0.0 {
                        d.set(tuple, v);
                    }
                }
                return;
            }
            for i in 0..p.dim as u32 {
                tuple[pos] = i;
                fill(p, d, tuple, pos + 1, split);
            }
        }
    }
}

fn check_contraction_args(
    f: &SymmetricKernel,
    g: &SymmetricKernel,
    r: usize,
) -> Result<()> {
    if f.dim != g.dim {
        return Err(Error::DimensionMismatch(f.dim, g.dim));
    }
    if r > f.order.min(g.order) {
        return Err(Error::invalid(format!(
            "contraction order {r} exceeds min({}, {})",
            f.order, g.order
        )));
    }
    Ok(())
}

/// Raw contraction of order r:
/// (f (x)_r g)(t, s) = sum_{a in [d]^r} f(t, a) g(s, a).
pub fn contract_pair(f: &SymmetricKernel, g: &SymmetricKernel, r: usize) -> Result<PairTensor> {
    check_contraction_args(f, g, r)?;
    let mut vals: BTreeMap<(MultiIndex, MultiIndex), f64> = BTreeMap::new();
    for (u, fu) in f.entries() {
        for a in sub_multisets(u, r) {
            let beta = multiset_remove(u, &a);
            let m_a = multiplicity(&a);
            for (w, gw) in g.entries() {
                if !is_sub_multiset(&a, w) {
                    continue;
                }
                let gamma = multiset_remove(w, &a);
                *vals.entry((beta.clone(), gamma)).or_insert(0.0) += m_a * fu * gw;
            }
        }
    }
    vals.retain(|_, v| *v != 0.0);
    Ok(PairTensor {
        dim: f.dim,
        left_order: f.order - r,
        right_order: g.order - r,
        vals,
    })
}

/// Symmetrized contraction f (~x)_r g as a compressed symmetric kernel.
///
/// Derivation: symmetrizing the raw contraction at a sorted output index
/// alpha averages over its arrangements; grouping arrangements by the split
/// (beta from f's free slots, gamma from g's) gives
///   S_alpha = (1/m_alpha) sum_{beta + gamma = alpha} m_beta m_gamma v(beta, gamma),
/// and the forward accumulation below scatters each (f-entry, g-entry,
/// contracted multiset) triple into exactly that sum.
pub fn contract_sym(f: &SymmetricKernel, g: &SymmetricKernel, r: usize) -> Result<SymmetricKernel> {
    check_contraction_args(f, g, r)?;
    let out_order = f.order + g.order - 2 * r;
    let mut out = SymmetricKernel::zero(f.dim, out_order)?;
    let mut sums: BTreeMap<MultiIndex, f64> = BTreeMap::new();
    for (u, fu) in f.entries() {
        for a in sub_multisets(u, r) {
            let beta = multiset_remove(u, &a);
            let m_a = multiplicity(&a);
            let m_beta = multiplicity(&beta);
            for (w, gw) in g.entries() {
                if !is_sub_multiset(&a, w) {
                    continue;
                }
                let gamma = multiset_remove(w, &a);
                let alpha = merge_sorted(&beta, &gamma);
                *sums.entry(alpha).or_insert(0.0) += m_beta * multiplicity(&gamma) * m_a * fu * gw;
            }
        }
    }
    for (alpha, total) in sums {
        let value = total / multiplicity(&alpha);
        out.set_entry(&alpha, value);
    }
    Ok(out)
}

/// The contraction operation of the public API: the raw dense tensor of
/// order p+q-2r together with its symmetrization. Dense materialisation is
/// capped; the compressed routes above have no such limit.
pub fn contract(
    f: &SymmetricKernel,
    g: &SymmetricKernel,
    r: usize,
) -> Result<(DenseTensor, SymmetricKernel)> {
    let pair = contract_pair(f, g, r)?;
    let dense = pair.to_dense()?;
    let sym = contract_sym(f, g, r)?;
    Ok((dense, sym))
}
