//! Finite chaos expansions Z = sum_q I_q(f_q) and their exact algebra.
//!
//! The product of two expansions follows the multiplication formula
//!   I_p(f) I_q(g) = sum_{r=0}^{p^q} r! C(p,r) C(q,r) I_{p+q-2r}(f (~x)_r g),
//! which closes the class under multiplication and turns moment computation
//! into repeated products followed by reading off the order-0 coefficient.

use crate::chaos::kernel::{contract_sym, multiplicity, MultiIndex, SymmetricKernel};
use crate::error::{Error, Result};
use crate::stein;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Hard ceiling for intermediate chaos order in moment computations.
pub const MOMENT_ORDER_CAP: usize = 32;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "ExpansionRepr", into = "ExpansionRepr")]
pub struct ChaosExpansion {
    dim: usize,
    kernels: BTreeMap<usize, SymmetricKernel>,
}

#[derive(Serialize, Deserialize)]
struct ExpansionRepr {
    dim: usize,
    kernels: Vec<SymmetricKernel>,
}

impl From<ChaosExpansion> for ExpansionRepr {
    fn from(z: ChaosExpansion) -> Self {
        ExpansionRepr {
            dim: z.dim,
            kernels: z.kernels.into_values().collect(),
        }
    }
}

impl TryFrom<ExpansionRepr> for ChaosExpansion {
    type Error = Error;

    fn try_from(r: ExpansionRepr) -> Result<Self> {
        let mut z = ChaosExpansion::zero(r.dim)?;
        for k in r.kernels {
            if k.dim() != r.dim {
                return Err(Error::DimensionMismatch(k.dim(), r.dim));
            }
            if z.kernels.contains_key(&k.order()) {
                return Err(Error::invalid(format!(
                    "duplicate kernel of order {}",
                    k.order()
                )));
            }
            z.set_kernel(k);
        }
        Ok(z)
    }
}

impl ChaosExpansion {
    pub fn zero(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("expansion dimension must be positive"));
        }
        Ok(ChaosExpansion {
            dim,
            kernels: BTreeMap::new(),
        })
    }

    /// The deterministic constant c (order-0 term only).
    pub fn constant(dim: usize, c: f64) -> Result<Self> {
        let mut z = ChaosExpansion::zero(dim)?;
        z.set_kernel(SymmetricKernel::constant(dim, c)?);
        Ok(z)
    }

    /// X(h) = I_1(h), the Gaussian with variance ||h||^2.
    pub fn gaussian(h: &[f64]) -> Result<Self> {
        ChaosExpansion::from_kernel(SymmetricKernel::from_vector(h)?)
    }

    /// Z = I_q(f) living in a single chaos.
    pub fn from_kernel(f: SymmetricKernel) -> Result<Self> {
        let mut z = ChaosExpansion::zero(f.dim())?;
        z.set_kernel(f);
        Ok(z)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn set_kernel(&mut self, k: SymmetricKernel) {
        debug_assert_eq!(k.dim(), self.dim);
        if k.is_zero() {
            self.kernels.remove(&k.order());
        } else {
            self.kernels.insert(k.order(), k);
        }
    }

    pub fn kernel(&self, order: usize) -> Option<&SymmetricKernel> {
        self.kernels.get(&order)
    }

    pub fn orders(&self) -> impl Iterator<Item = usize> + '_ {
        self.kernels.keys().copied()
    }

    pub fn kernels(&self) -> impl Iterator<Item = (usize, &SymmetricKernel)> {
        self.kernels.iter().map(|(&q, k)| (q, k))
    }

    pub fn max_order(&self) -> usize {
        self.kernels.keys().next_back().copied().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.kernels.is_empty()
    }

    /// E(Z): the order-0 coefficient.
    pub fn expectation(&self) -> f64 {
        self.kernels.get(&0).map(|k| k.get(&[])).unwrap_or(0.0)
    }

    /// E(Z^2) by the isometry: sum_q q! ||f_q||^2 (plus the squared mean).
    pub fn second_moment(&self) -> f64 {
        self.kernels
            .iter()
            .map(|(&q, k)| crate::special::factorial(q as u64) * k.norm_sq())
            .sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.expectation();
        self.second_moment() - m * m
    }

    /// Projection J_q onto the order-q chaos.
    pub fn project(&self, order: usize) -> Result<Self> {
        let mut z = ChaosExpansion::zero(self.dim)?;
        if let Some(k) = self.kernels.get(&order) {
            z.set_kernel(k.clone());
        }
        Ok(z)
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut z = ChaosExpansion {
            dim: self.dim,
            kernels: BTreeMap::new(),
        };
        for k in self.kernels.values() {
            z.set_kernel(k.scale(s));
        }
        z
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(self.dim, other.dim));
        }
        let mut z = self.clone();
        for (q, k) in other.kernels() {
            let merged = match z.kernels.get(&q) {
                Some(own) => own.add(k)?,
                None => k.clone(),
            };
            z.set_kernel(merged);
        }
        Ok(z)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-1.0))
    }

    pub fn add_constant(&self, c: f64) -> Result<Self> {
        self.add(&ChaosExpansion::constant(self.dim, c)?)
    }

    /// Product of the represented random variables, by the multiplication
    /// formula applied bilinearly across kernel pairs.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(self.dim, other.dim));
        }
        let mut out = ChaosExpansion::zero(self.dim)?;
        let mut acc: BTreeMap<usize, SymmetricKernel> = BTreeMap::new();
        for (p, f) in self.kernels() {
            for (q, g) in other.kernels() {
                for r in 0..=p.min(q) {
                    let coeff = crate::special::factorial(r as u64)
                        * crate::special::binomial(p as u64, r as u64)
                        * crate::special::binomial(q as u64, r as u64);
                    let term = contract_sym(f, g, r)?.scale(coeff);
                    let order = p + q - 2 * r;
                    let merged = match acc.get(&order) {
                        Some(existing) => existing.add(&term)?,
                        None => term,
                    };
                    acc.insert(order, merged);
                }
            }
        }
        for (_, k) in acc {
            out.set_kernel(k);
        }
        Ok(out)
    }

    /// Z^k by repeated multiplication.
    pub fn power(&self, k: u32) -> Result<Self> {
        if k == 0 {
            return ChaosExpansion::constant(self.dim, 1.0);
        }
        let mut acc = self.clone();
        for _ in 1..k {
            acc = acc.multiply(self)?;
        }
        Ok(acc)
    }

    /// Exact k-th moment: expand Z^k, read the order-0 coefficient.
    ///
    /// Guarded by the order cap q_max * k <= 32; beyond that the factorial
    /// coefficients and entry counts stop being trustworthy or affordable.
    pub fn exact_moment(&self, k: u32) -> Result<f64> {
        if k < 1 {
            return Err(Error::invalid("moment index must be >= 1"));
        }
        let top = self.max_order() * k as usize;
        if top > MOMENT_ORDER_CAP {
            return Err(Error::Capacity(format!(
                "moment computation would reach chaos order {top} > {MOMENT_ORDER_CAP}"
            )));
        }
        Ok(self.power(k)?.expectation())
    }

    pub fn central_moment(&self, k: u32) -> Result<f64> {
        let centered = self.add_constant(-self.expectation())?;
        centered.exact_moment(k)
    }

    /// The polynomial realization of Z under i.i.d. standard Gaussian
    /// coordinates: each basis kernel maps to a product of Hermite
    /// polynomials in the coordinates it touches.
    pub fn to_polynomial(&self) -> ChaosPolynomial {
        let mut terms = Vec::new();
        for (_, k) in self.kernels() {
            for (idx, c) in k.entries() {
                let coeff = c * multiplicity(idx);
                terms.push((hermite_profile(idx), coeff));
            }
        }
        ChaosPolynomial {
            dim: self.dim,
            terms,
        }
    }
}

/// Collapse a sorted multi-index into (variable, repeat-count) pairs.
fn hermite_profile(idx: &MultiIndex) -> Vec<(usize, u32)> {
    let mut profile: Vec<(usize, u32)> = Vec::new();
    for &i in idx {
        match profile.last_mut() {
            Some((v, c)) if *v == i as usize => *c += 1,
            _ => profile.push((i as usize, 1)),
        }
    }
    profile
}

/// Evaluator produced by [`ChaosExpansion::to_polynomial`].
#[derive(Debug, Clone)]
pub struct ChaosPolynomial {
    dim: usize,
    terms: Vec<(Vec<(usize, u32)>, f64)>,
}

impl ChaosPolynomial {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, z: &[f64]) -> f64 {
        debug_assert_eq!(z.len(), self.dim);
        let mut acc = 0.0;
        for (profile, coeff) in &self.terms {
            let mut term = *coeff;
            for &(var, reps) in profile {
                term *= stein::hermite(reps, z[var]);
            }
            acc += term;
        }
        acc
    }
}
