//! Independent oracles for the integration tests. Everything here is a
//! deliberately naive second route: dense loops instead of compressed
//! storage, Wick pairings instead of trace formulas, quadrature instead of
//! closed forms, Box-Muller instead of the inverse CDF. None of it touches
//! the implementation paths it is used to check.

#![allow(dead_code)]

use qvbound::chaos::SymmetricKernel;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

// ---------------------------------------------------------------------------
// dense tensors with explicit loops

#[derive(Clone)]
pub struct DenseOracle {
    pub dim: usize,
    pub order: usize,
    pub data: Vec<f64>,
}

impl DenseOracle {
    pub fn zeros(dim: usize, order: usize) -> Self {
        DenseOracle {
            dim,
            order,
            data: vec![0.0; dim.pow(order as u32)],
        }
    }

    pub fn offset(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.dim + i)
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: f64) {
        let off = self.offset(idx);
        self.data[off] = v;
    }

    pub fn from_kernel(k: &SymmetricKernel) -> Self {
        let mut d = DenseOracle::zeros(k.dim(), k.order());
        let mut idx = vec![0usize; k.order()];
        loop {
            let as_u32: Vec<u32> = idx.iter().map(|&i| i as u32).collect();
            let off = d.offset(&idx);
            d.data[off] = k.get(&as_u32);
            if !next_tuple(&mut idx, k.dim()) {
                break;
            }
        }
        d
    }

    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn inner(&self, other: &DenseOracle) -> f64 {
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| a * b)
            .sum()
    }
}

/// Advance a mixed-radix tuple; false when the sweep wraps around.
pub fn next_tuple(idx: &mut [usize], dim: usize) -> bool {
    for slot in idx.iter_mut().rev() {
        *slot += 1;
        if *slot < dim {
            return true;
        }
        *slot = 0;
    }
    false
}

/// All permutations of 0..n (Heap's algorithm).
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut items: Vec<usize> = (0..n).collect();
    let mut out = Vec::new();
    fn rec(k: usize, items: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k <= 1 {
            out.push(items.clone());
            return;
        }
        for i in 0..k {
            rec(k - 1, items, out);
            if k % 2 == 0 {
                items.swap(i, k - 1);
            } else {
                items.swap(0, k - 1);
            }
        }
    }
    rec(n, &mut items, &mut out);
    out
}

/// Symmetrization by the literal average over all q! permutations.
pub fn symmetrize_naive(raw: &DenseOracle) -> DenseOracle {
    let q = raw.order;
    let perms = permutations(q);
    let mut out = DenseOracle::zeros(raw.dim, q);
    let mut idx = vec![0usize; q];
    loop {
        let mut acc = 0.0;
        let mut permuted = vec![0usize; q];
        for perm in &perms {
            for (slot, &p) in permuted.iter_mut().zip(perm.iter()) {
                *slot = idx[p];
            }
            acc += raw.get(&permuted);
        }
        let off = out.offset(&idx);
        out.data[off] = acc / perms.len() as f64;
        if !next_tuple(&mut idx, raw.dim) {
            break;
        }
    }
    out
}

/// Contraction by the literal summation over r shared indices:
/// out(t, s) = sum_{a in [d]^r} f(t, a) g(s, a).
pub fn contract_naive(f: &DenseOracle, g: &DenseOracle, r: usize) -> DenseOracle {
    assert_eq!(f.dim, g.dim);
    let d = f.dim;
    let (p, q) = (f.order, g.order);
    let mut out = DenseOracle::zeros(d, p + q - 2 * r);
    let mut free = vec![0usize; p + q - 2 * r];
    loop {
        let (t, s) = free.split_at(p - r);
        let mut acc = 0.0;
        let mut a = vec![0usize; r];
        loop {
            let mut fi = t.to_vec();
            fi.extend_from_slice(&a);
            let mut gi = s.to_vec();
            gi.extend_from_slice(&a);
            acc += f.get(&fi) * g.get(&gi);
            if r == 0 || !next_tuple(&mut a, d) {
                break;
            }
        }
        let off = out.offset(&free);
        out.data[off] = acc;
        if free.is_empty() || !next_tuple(&mut free, d) {
            break;
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Box-Muller Gaussian source (independent of the inverse-CDF sampler)

pub struct BoxMuller {
    rng: ChaCha12Rng,
    spare: Option<f64>,
}

impl BoxMuller {
    pub fn new(seed: u64) -> Self {
        BoxMuller {
            rng: ChaCha12Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    fn uniform(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / 9007199254740992.0)
    }

    pub fn next(&mut self) -> f64 {
        if let Some(v) = self.spare.take() {
            return v;
        }
        let (u1, u2) = (self.uniform(), self.uniform());
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(radius * angle.sin());
        radius * angle.cos()
    }

    pub fn fill(&mut self, out: &mut [f64]) {
        for slot in out {
            *slot = self.next();
        }
    }
}

// ---------------------------------------------------------------------------
// Isserlis / Wick machinery for E[(sum_a (xi_a^2 - 1))^k]

/// Perfect matchings of the legs 0..2k that never pair the two legs of the
/// same factor (legs 2a and 2a+1 belong to factor a).
pub fn valid_leg_pairings(k: usize) -> Vec<Vec<(usize, usize)>> {
    let mut out = Vec::new();
    let mut used = vec![false; 2 * k];
    let mut cur = Vec::with_capacity(k);
    fn rec(
        used: &mut Vec<bool>,
        cur: &mut Vec<(usize, usize)>,
        out: &mut Vec<Vec<(usize, usize)>>,
    ) {
        let first = match used.iter().position(|&u| !u) {
            Some(i) => i,
            None => {
                out.push(cur.clone());
                return;
            }
        };
        used[first] = true;
        for second in (first + 1)..used.len() {
            if used[second] || second / 2 == first / 2 {
                continue;
            }
            used[second] = true;
            cur.push((first, second));
            rec(used, cur, out);
            cur.pop();
            used[second] = false;
        }
        used[first] = false;
    }
    rec(&mut used, &mut cur, &mut out);
    out
}

/// E[prod_a H_2(xi_{t_a})] for jointly standard Gaussians with correlation
/// matrix entries corr(i, j): the Wick sum over valid leg pairings.
fn wick_h2_product(tuple: &[usize], pairings: &[Vec<(usize, usize)>], corr: &dyn Fn(usize, usize) -> f64) -> f64 {
    let mut acc = 0.0;
    for pairing in pairings {
        let mut term = 1.0;
        for &(l1, l2) in pairing {
            term *= corr(tuple[l1 / 2], tuple[l2 / 2]);
            if term == 0.0 {
                break;
            }
        }
        acc += term;
    }
    acc
}

fn multiset_permutation_count(tuple: &[usize]) -> f64 {
    let mut acc = 1.0f64;
    let mut run = 1u64;
    for w in 1..tuple.len() {
        if tuple[w] == tuple[w - 1] {
            run += 1;
        } else {
            run = 1;
        }
        acc = acc * (w as f64 + 1.0) / run as f64;
    }
    acc
}

/// Brute-force E[(sum_{a<n} (xi_a^2 - 1))^k] by enumerating sorted index
/// tuples (with multiplicities) and all valid Wick pairings of the 2k legs.
pub fn leg_pairing_centered_moment(rho_tab: &[f64], n: usize, k: usize) -> f64 {
    let pairings = valid_leg_pairings(k);
    let corr = |i: usize, j: usize| rho_tab[i.abs_diff(j)];
    let mut acc = 0.0;
    let mut tuple = vec![0usize; k];
    loop {
        acc += multiset_permutation_count(&tuple) * wick_h2_product(&tuple, &pairings, &corr);
        // advance sorted tuple
        let mut pos = k;
        loop {
            if pos == 0 {
                return acc;
            }
            pos -= 1;
            if tuple[pos] + 1 < n {
                let v = tuple[pos] + 1;
                for slot in tuple.iter_mut().skip(pos) {
                    *slot = v;
                }
                break;
            }
        }
    }
}

/// tr(R^m) for m = 1..=m_max by dense matrix products.
pub fn toeplitz_traces(rho_tab: &[f64], n: usize, m_max: usize) -> Vec<f64> {
    let at = |i: usize, j: usize| rho_tab[i.abs_diff(j)];
    let mut power: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| at(i, j)).collect()).collect();
    let base = power.clone();
    let mut traces = Vec::with_capacity(m_max);
    traces.push((0..n).map(|i| power[i][i]).sum());
    for _ in 1..m_max {
        let mut next = vec![vec![0.0f64; n]; n];
        for i in 0..n {
            for (kcol, prow) in base.iter().enumerate() {
                let coeff = power[i][kcol];
                if coeff == 0.0 {
                    continue;
                }
                for j in 0..n {
                    next[i][j] += coeff * prow[j];
                }
            }
        }
        power = next;
        traces.push((0..n).map(|i| power[i][i]).sum());
    }
    traces
}

/// All set partitions of 0..k as block lists.
pub fn set_partitions(k: usize) -> Vec<Vec<Vec<usize>>> {
    let mut out = Vec::new();
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    fn rec(item: usize, k: usize, blocks: &mut Vec<Vec<usize>>, out: &mut Vec<Vec<Vec<usize>>>) {
        if item == k {
            out.push(blocks.clone());
            return;
        }
        for b in 0..blocks.len() {
            blocks[b].push(item);
            rec(item + 1, k, blocks, out);
            blocks[b].pop();
        }
        blocks.push(vec![item]);
        rec(item + 1, k, blocks, out);
        blocks.pop();
    }
    rec(0, k, &mut blocks, &mut out);
    out
}

/// E[(sum_a (xi_a^2 - 1))^k] through the cumulant collapse of the same Wick
/// sum: joined pairings form cycles, a cycle over m factors contributes
/// 2^{m-1} (m-1)! tr(R^m), and summing over cycle covers is the classical
/// moments-from-cumulants expansion over singleton-free set partitions.
pub fn trace_centered_moment(rho_tab: &[f64], n: usize, k: usize) -> f64 {
    let traces = toeplitz_traces(rho_tab, n, k);
    let cumulant = |m: usize| -> f64 {
        // kappa_m for m >= 2; kappa_1 = 0 after centering
        if m < 2 {
            return 0.0;
        }
        let mut fact = 1.0f64;
        for i in 2..m {
            fact *= i as f64;
        }
        2f64.powi(m as i32 - 1) * fact * traces[m - 1]
    };
    let mut acc = 0.0;
    'partition: for partition in set_partitions(k) {
        let mut term = 1.0;
        for block in &partition {
            if block.len() < 2 {
                continue 'partition;
            }
            term *= cumulant(block.len());
        }
        acc += term;
    }
    acc
}

/// E(N^k) for the standard normal: (k-1)!! for even k, 0 for odd.
pub fn gaussian_moment(k: usize) -> f64 {
    if k % 2 == 1 {
        return 0.0;
    }
    let mut acc = 1.0f64;
    let mut m = k as i64 - 1;
    while m > 1 {
        acc *= m as f64;
        m -= 2;
    }
    acc
}

// ---------------------------------------------------------------------------
// Gauss-Legendre quadrature and the integral representation of rho

/// Nodes and weights of N-point Gauss-Legendre quadrature on [-1, 1],
/// by Newton iteration on the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0f64; n];
    let mut weights = vec![0.0f64; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            // Legendre P_n(x) and derivative by the three-term recurrence
            let mut p0 = 1.0f64;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        // recompute derivative at the converged node for the weight
        let mut p0 = 1.0f64;
        let mut p1 = x;
        for k in 2..=n {
            let kf = k as f64;
            let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
            p0 = p1;
            p1 = p2;
        }
        let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Extended-precision-quality oracle for rho at lags r >= 2, from the
/// cancellation-free integral representation
///   rho(r) = H (2H-1) int_0^1 int_0^1 (r + u - v)^{2H-2} du dv
/// (exact identity: the second difference of x^{2H} is the double integral
/// of its second derivative). The integrand is smooth for r >= 2, so
/// 48-point tensor Gauss-Legendre reaches ~1e-15 relative accuracy.
pub fn rho_quadrature_oracle(r: u64, h: f64) -> f64 {
    assert!(r >= 2);
    if h == 0.5 {
        return 0.0;
    }
    let (nodes, weights) = gauss_legendre(48);
    let to_unit = |t: f64| 0.5 * (t + 1.0);
    let mut acc = 0.0;
    for (u_node, u_w) in nodes.iter().zip(weights.iter()) {
        let u = to_unit(*u_node);
        for (v_node, v_w) in nodes.iter().zip(weights.iter()) {
            let v = to_unit(*v_node);
            acc += u_w * v_w * (r as f64 + u - v).powf(2.0 * h - 2.0);
        }
    }
    // each half-interval substitution contributes a factor 1/2
    h * (2.0 * h - 1.0) * acc * 0.25
}

// ---------------------------------------------------------------------------
// small helpers

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

pub fn rho_table_oracle(n: usize, h: f64) -> Vec<f64> {
    (0..=n)
        .map(|r| qvbound::fbm::rho(r as i64, h).expect("valid H"))
        .collect()
}
