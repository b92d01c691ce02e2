//! Randomized self-test of the chaos algebra: every structural identity the
//! rest of the crate leans on, exercised on randomly generated kernels with
//! d <= 4 and q <= 3. The CLI `tensor-selftest` subcommand prints one line
//! per identity; the acceptance suite asserts them all.

use crate::chaos::expansion::ChaosExpansion;
use crate::chaos::kernel::{contract_sym, MultiIndex, SymmetricKernel};
use crate::chaos::operators::{
    apply_l, apply_l_inverse, malliavin_derivative, stein_kernel_inner, variance_of_stein_kernel,
};
use crate::error::Result;
use crate::rng::NormalStream;
use crate::special::{binomial, factorial};

#[derive(Debug, Clone)]
pub struct IdentityReport {
    pub name: &'static str,
    pub cases: usize,
    pub max_err: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl IdentityReport {
    fn new(name: &'static str, cases: usize, max_err: f64, tolerance: f64) -> Self {
        IdentityReport {
            name,
            cases,
            max_err,
            tolerance,
            passed: max_err <= tolerance,
        }
    }
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// L2 norm of an expansion, sqrt(E Z^2), used to measure kernel-by-kernel
/// equality of two expansions.
fn l2(z: &ChaosExpansion) -> f64 {
    z.second_moment().sqrt()
}

fn sorted_indices(dim: usize, order: usize) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(order);
    fn rec(dim: usize, order: usize, start: u32, cur: &mut MultiIndex, out: &mut Vec<MultiIndex>) {
        if cur.len() == order {
            out.push(cur.clone());
            return;
        }
        for i in start..dim as u32 {
            cur.push(i);
            rec(dim, order, i, cur, out);
            cur.pop();
        }
    }
    rec(dim, order, 0, &mut cur, &mut out);
    out
}

pub fn random_kernel(stream: &mut NormalStream, dim: usize, order: usize) -> SymmetricKernel {
    let mut k = SymmetricKernel::zero(dim, order).expect("positive dim");
    for idx in sorted_indices(dim, order) {
        k.set_entry(&idx, 2.0 * stream.next_uniform() - 1.0);
    }
    k
}

fn random_unit_variance_chaos(stream: &mut NormalStream, dim: usize, order: usize) -> ChaosExpansion {
    let k = random_kernel(stream, dim, order);
    let z = ChaosExpansion::from_kernel(k).expect("valid kernel");
    let m2 = z.second_moment();
    z.scale(1.0 / m2.sqrt())
}

fn random_expansion(
    stream: &mut NormalStream,
    dim: usize,
    max_order: usize,
    centered: bool,
) -> ChaosExpansion {
    let mut z = ChaosExpansion::zero(dim).expect("positive dim");
    for q in 0..=max_order {
        if q == 0 {
            if !centered {
                z = z
                    .add_constant(2.0 * stream.next_uniform() - 1.0)
                    .expect("same dim");
            }
            continue;
        }
        z.set_kernel(random_kernel(stream, dim, q));
    }
    z
}

fn dims_for(case: usize) -> usize {
    1 + case % 4
}

fn orders_for(case: usize) -> usize {
    1 + case % 3
}

/// Run the full identity suite on `cases` random kernels per identity.
pub fn run_identity_suite(seed: u64, cases: usize) -> Result<Vec<IdentityReport>> {
    let mut reports = Vec::new();
    let mut stream = NormalStream::new(seed, 0);

    // multiplication formula: the expansion product must evaluate to the
    // pointwise product of the factors under the Hermite realization
    {
        let mut max_err = 0.0f64;
        for case in 0..cases {
            let dim = dims_for(case);
            let f = random_expansion(&mut stream, dim, 1 + case % 2, false);
            let g = random_expansion(&mut stream, dim, 1 + (case / 2) % 2, false);
            let prod = f.multiply(&g)?;
            let (pf, pg, pp) = (f.to_polynomial(), g.to_polynomial(), prod.to_polynomial());
            for _ in 0..5 {
                let z: Vec<f64> = (0..dim).map(|_| stream.next_normal()).collect();
                max_err = max_err.max(rel_err(pp.eval(&z), pf.eval(&z) * pg.eval(&z)));
            }
        }
        reports.push(IdentityReport::new("multiplication-formula", cases, max_err, 1e-10));
    }

    // isometry: E(I_q(f)^2) = q! ||f||^2, moment route vs kernel route
    {
        let mut max_err = 0.0f64;
        for case in 0..cases {
            let dim = dims_for(case);
            let q = orders_for(case);
            let k = random_kernel(&mut stream, dim, q);
            let z = ChaosExpansion::from_kernel(k.clone())?;
            let by_moment = z.exact_moment(2)?;
            let by_kernel = factorial(q as u64) * k.norm_sq();
            max_err = max_err.max(rel_err(by_moment, by_kernel));
        }
        reports.push(IdentityReport::new("isometry", cases, max_err, 1e-12));
    }

    // aa1: <DZ, -DL^{-1}Z> - 1 equals the contraction expansion, kernel by kernel
    {
        let mut max_err = 0.0f64;
        for case in 0..cases {
            let dim = dims_for(case);
            let q = orders_for(case);
            let z = random_unit_variance_chaos(&mut stream, dim, q);
            let lhs = stein_kernel_inner(&z, &z)?.add_constant(-1.0)?;
            let f = z.kernel(q).expect("single chaos");
            let mut rhs = ChaosExpansion::zero(dim)?;
            for r in 1..q {
                let c = q as f64
                    * factorial((r - 1) as u64)
                    * binomial((q - 1) as u64, (r - 1) as u64).powi(2);
                rhs.set_kernel(contract_sym(f, f, r)?.scale(c));
            }
            max_err = max_err.max(l2(&lhs.sub(&rhs)?));
        }
        reports.push(IdentityReport::new("aa1", cases, max_err, 1e-10));
    }

    // lm-control-1d: the contraction formula for Var((1/q)||DZ||^2) equals
    // the direct exact-moment computation
    {
        let mut max_err = 0.0f64;
        for case in 0..cases {
            let dim = dims_for(case);
            let q = orders_for(case);
            let z = random_unit_variance_chaos(&mut stream, dim, q);
            let by_formula = variance_of_stein_kernel(&z)?;
            let w = stein_kernel_inner(&z, &z)?;
            let direct = w.exact_moment(2)? - w.expectation().powi(2);
            max_err = max_err.max(rel_err(by_formula, direct));
        }
        reports.push(IdentityReport::new("lm-control-1d", cases, max_err, 1e-10));
    }

    // aa3: E(Z^4) - 3 equals the weighted contraction-norm sum
    {
        let mut max_err = 0.0f64;
        for case in 0..cases {
            let dim = dims_for(case);
            let q = orders_for(case);
            let z = random_unit_variance_chaos(&mut stream, dim, q);
            let by_moment = z.exact_moment(4)? - 3.0;
            let f = z.kernel(q).expect("single chaos");
            let mut by_contraction = 0.0;
            for r in 1..q {
                by_contraction += (3.0 / q as f64)
                    * r as f64
                    * factorial(r as u64).powi(2)
                    * binomial(q as u64, r as u64).powi(4)
                    * factorial((2 * q - 2 * r) as u64)
                    * contract_sym(f, f, r)?.norm_sq();
            }
            max_err = max_err.max(rel_err(by_moment, by_contraction));
        }
        reports.push(IdentityReport::new("aa3", cases, max_err, 1e-10));
    }

    // momentdordre4: Var((1/q)||DZ||^2) <= ((q-1)/(3q)) (E Z^4 - 3)
    {
        let mut max_violation = 0.0f64;
        for case in 0..cases {
            let dim = dims_for(case);
            let q = orders_for(case);
            let z = random_unit_variance_chaos(&mut stream, dim, q);
            let var = variance_of_stein_kernel(&z)?;
            let gap = (q as f64 - 1.0) / (3.0 * q as f64) * (z.exact_moment(4)? - 3.0);
            max_violation = max_violation.max(var - gap);
        }
        reports.push(IdentityReport::new("momentdordre4", cases, max_violation, 1e-10));
    }

    // k1: delta D Z = -L Z, with the divergence realized coordinatewise as
    // delta(u) = sum_i ( X(e_i) u_i - D_i u_i )
    {
        let mut max_err = 0.0f64;
        for case in 0..cases {
            let dim = dims_for(case);
            let z = random_expansion(&mut stream, dim, orders_for(case), false);
            let dz = malliavin_derivative(&z);
            let mut delta = ChaosExpansion::zero(dim)?;
            for (i, ui) in dz.iter().enumerate() {
                let mut e = vec![0.0; dim];
                e[i] = 1.0;
                let xi = ChaosExpansion::gaussian(&e)?;
                delta = delta.add(&xi.multiply(ui)?)?;
                delta = delta.sub(&malliavin_derivative(ui)[i])?;
            }
            let minus_l = apply_l(&z).scale(-1.0);
            max_err = max_err.max(l2(&delta.sub(&minus_l)?));
        }
        reports.push(IdentityReport::new("k1-delta-d", cases, max_err, 1e-10));
    }

    // Lmoins1: L L^{-1} Z = Z - E(Z), exactly, kernel by kernel
    {
        let mut max_err = 0.0f64;
        for case in 0..cases {
            let dim = dims_for(case);
            let z = random_expansion(&mut stream, dim, orders_for(case), false);
            let lhs = apply_l(&apply_l_inverse(&z));
            let rhs = z.add_constant(-z.expectation())?;
            let diff = lhs.sub(&rhs)?;
            max_err = max_err.max(l2(&diff) + diff.expectation().abs());
        }
        reports.push(IdentityReport::new("l-pseudo-inverse", cases, max_err, 1e-10));
    }

    // ivangioformula with polynomial f of degree <= 3:
    // E[Z f(F)] = E[f'(F) <DF, -DL^{-1}Z>]
    {
        let mut max_err = 0.0f64;
        for case in 0..cases {
            let dim = dims_for(case);
            let z = random_expansion(&mut stream, dim, 1 + case % 3, true);
            let f_var = random_expansion(&mut stream, dim, 1 + case % 2, false);
            let coeffs: Vec<f64> = (0..4).map(|_| 2.0 * stream.next_uniform() - 1.0).collect();

            // f(x) = c0 + c1 x + c2 x^2 + c3 x^3, f'(x) = c1 + 2 c2 x + 3 c3 x^2
            let f2 = f_var.multiply(&f_var)?;
            let f3 = f2.multiply(&f_var)?;
            let poly_f = ChaosExpansion::constant(dim, coeffs[0])?
                .add(&f_var.scale(coeffs[1]))?
                .add(&f2.scale(coeffs[2]))?
                .add(&f3.scale(coeffs[3]))?;
            let poly_fp = ChaosExpansion::constant(dim, coeffs[1])?
                .add(&f_var.scale(2.0 * coeffs[2]))?
                .add(&f2.scale(3.0 * coeffs[3]))?;

            let lhs = z.multiply(&poly_f)?.expectation();
            let inner = stein_kernel_inner(&f_var, &z)?;
            let rhs = poly_fp.multiply(&inner)?.expectation();
            max_err = max_err.max(rel_err(lhs, rhs));
        }
        reports.push(IdentityReport::new("ivangio-polynomial", cases, max_err, 1e-10));
    }

    // hypercontractivity at p = 4: E(Z^4) <= 3^{2q} for unit-variance chaos
    {
        let mut max_violation = 0.0f64;
        for case in 0..cases {
            let dim = dims_for(case);
            let q = orders_for(case);
            let z = random_unit_variance_chaos(&mut stream, dim, q);
            let m4 = z.exact_moment(4)?;
            max_violation = max_violation.max(m4 - 3f64.powi(2 * q as i32));
        }
        reports.push(IdentityReport::new("hypercontractivity-p4", cases, max_violation, 1e-10));
    }

    // commutativity and associativity of the product
    {
        let mut max_err = 0.0f64;
        for case in 0..cases {
            let dim = dims_for(case);
            let f = random_expansion(&mut stream, dim, 1 + case % 2, false);
            let g = random_expansion(&mut stream, dim, 1 + (case / 3) % 2, false);
            let h = random_expansion(&mut stream, dim, 1, false);
            let fg = f.multiply(&g)?;
            let gf = g.multiply(&f)?;
            max_err = max_err.max(l2(&fg.sub(&gf)?));
            let left = fg.multiply(&h)?;
            let right = f.multiply(&g.multiply(&h)?)?;
            let scale = l2(&left).max(1.0);
            max_err = max_err.max(l2(&left.sub(&right)?) / scale);
        }
        reports.push(IdentityReport::new("multiply-commutative-associative", cases, max_err, 1e-10));
    }

    // serialization round-trip through the documented JSON layout
    {
        let mut max_err = 0.0f64;
        for case in 0..cases.min(20) {
            let dim = dims_for(case);
            let z = random_expansion(&mut stream, dim, orders_for(case), false);
            let text = serde_json::to_string(&z).map_err(|e| {
                crate::error::Error::InvalidArgument(format!("serialize failed: {e}"))
            })?;
            let back: ChaosExpansion = serde_json::from_str(&text).map_err(|e| {
                crate::error::Error::InvalidArgument(format!("deserialize failed: {e}"))
            })?;
            max_err = max_err.max(l2(&z.sub(&back)?));
        }
        reports.push(IdentityReport::new("serde-roundtrip", cases.min(20), max_err, 0.0));
    }

    Ok(reports)
}
