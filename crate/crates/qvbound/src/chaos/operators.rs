//! Malliavin operators on finite chaos expansions: the derivative D, the
//! Ornstein-Uhlenbeck generator L with its pseudo-inverse, the inner product
//! <DF, -DL^{-1}Z> that drives every Stein-type bound, and the contraction
//! identities for Var((1/q)||DZ||^2).

use crate::chaos::expansion::ChaosExpansion;
use crate::chaos::kernel::contract_sym;
use crate::error::{Error, Result};
use crate::special::{binomial, factorial};

pub const UNIT_VARIANCE_TOL: f64 = 1e-10;
pub const CENTERED_TOL: f64 = 1e-10;

/// D Z as a vector of d expansions: D_i Z = sum_q q I_{q-1}(f_q(., i)).
pub fn malliavin_derivative(z: &ChaosExpansion) -> Vec<ChaosExpansion> {
    let dim = z.dim();
    let mut out: Vec<ChaosExpansion> = (0..dim)
        .map(|_| ChaosExpansion::zero(dim).expect("positive dim"))
        .collect();
    for (q, kernel) in z.kernels() {
        if q == 0 {
            continue;
        }
        for (i, slot) in out.iter_mut().enumerate() {
            let slice = kernel.slice(i as u32).scale(q as f64);
            if !slice.is_zero() {
                let merged = match slot.kernel(q - 1) {
                    Some(existing) => existing.add(&slice).expect("same shape"),
                    None => slice,
                };
                slot.set_kernel(merged);
            }
        }
    }
    out
}

/// L Z = sum_q (-q) J_q Z.
pub fn apply_l(z: &ChaosExpansion) -> ChaosExpansion {
    let mut out = ChaosExpansion::zero(z.dim()).expect("positive dim");
    for (q, kernel) in z.kernels() {
        if q == 0 {
            continue;
        }
        out.set_kernel(kernel.scale(-(q as f64)));
    }
    out
}

/// L^{-1} Z = sum_{q>=1} (-1/q) J_q Z; the order-0 term is dropped.
pub fn apply_l_inverse(z: &ChaosExpansion) -> ChaosExpansion {
    let mut out = ChaosExpansion::zero(z.dim()).expect("positive dim");
    for (q, kernel) in z.kernels() {
        if q == 0 {
            continue;
        }
        out.set_kernel(kernel.scale(-1.0 / q as f64));
    }
    out
}

/// <DF, -DL^{-1}Z> as a chaos expansion, computed by componentwise
/// multiplication and summation. Requires E(Z) = 0.
pub fn stein_kernel_inner(f: &ChaosExpansion, z: &ChaosExpansion) -> Result<ChaosExpansion> {
    if f.dim() != z.dim() {
        return Err(Error::DimensionMismatch(f.dim(), z.dim()));
    }
    if z.expectation().abs() > CENTERED_TOL {
        return Err(Error::invalid(format!(
            "stein_kernel_inner needs a centered Z, got mean {}",
            z.expectation()
        )));
    }
    let df = malliavin_derivative(f);
    let dlz = malliavin_derivative(&apply_l_inverse(z).scale(-1.0));
    let mut acc = ChaosExpansion::zero(f.dim())?;
    for (a, b) in df.iter().zip(dlz.iter()) {
        acc = acc.add(&a.multiply(b)?)?;
    }
    Ok(acc)
}

/// Checks that Z sits in a single chaos of order >= 1 and returns that order.
fn single_chaos_order(z: &ChaosExpansion) -> Result<usize> {
    let mut orders = z.orders();
    match (orders.next(), orders.next()) {
        (Some(q), None) if q >= 1 => Ok(q),
        _ => Err(Error::invalid(
            "expected a random variable living in a single Wiener chaos of order >= 1",
        )),
    }
}

/// Var((1/q)||DZ||^2) for unit-variance Z = I_q(f), by the contraction sum
///   sum_{r=1}^{q-1} (r/q)^2 r!^2 C(q,r)^4 (2q-2r)! || f (~x)_r f ||^2.
pub fn variance_of_stein_kernel(z: &ChaosExpansion) -> Result<f64> {
    let q = single_chaos_order(z)?;
    let var = z.second_moment();
    if (var - 1.0).abs() > UNIT_VARIANCE_TOL {
        return Err(Error::invalid(format!(
            "variance_of_stein_kernel needs E(Z^2) = 1, got {var}"
        )));
    }
    let f = z.kernel(q).expect("single chaos order exists");
    let mut acc = 0.0;
    for r in 1..q {
        let c = (r as f64 / q as f64).powi(2)
            * factorial(r as u64).powi(2)
            * binomial(q as u64, r as u64).powi(4)
            * factorial((2 * q - 2 * r) as u64);
        acc += c * contract_sym(f, f, r)?.norm_sq();
    }
    Ok(acc)
}

/// E(Z^4) - 3 for unit-variance Z = I_q(f), by the contraction sum
///   (3/q) sum_{r=1}^{q-1} r r!^2 C(q,r)^4 (2q-2r)! || f (~x)_r f ||^2.
pub fn fourth_cumulant_by_contractions(z: &ChaosExpansion) -> Result<f64> {
    let q = single_chaos_order(z)?;
    let var = z.second_moment();
    if (var - 1.0).abs() > UNIT_VARIANCE_TOL {
        return Err(Error::invalid(format!(
            "fourth cumulant contraction formula needs E(Z^2) = 1, got {var}"
        )));
    }
    let f = z.kernel(q).expect("single chaos order exists");
    let mut acc = 0.0;
    for r in 1..q {
        let c = (3.0 / q as f64)
            * r as f64
            * factorial(r as u64).powi(2)
            * binomial(q as u64, r as u64).powi(4)
            * factorial((2 * q - 2 * r) as u64);
        acc += c * contract_sym(f, f, r)?.norm_sq();
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chaos::kernel::SymmetricKernel;

    fn unit_h2(dim: usize, i: u32) -> ChaosExpansion {
        // I2(e_i (x) e_i)/sqrt(2): unit-variance element of the 2nd chaos
        let mut k = SymmetricKernel::zero(dim, 2).unwrap();
        k.set_entry(&[i, i], 1.0 / 2f64.sqrt());
        ChaosExpansion::from_kernel(k).unwrap()
    }

    #[test]
    fn derivative_of_first_chaos_is_constant_vector() {
        let h = [0.3, -1.2, 0.0];
        let z = ChaosExpansion::gaussian(&h).unwrap();
        let d = malliavin_derivative(&z);
        for (i, di) in d.iter().enumerate() {
            assert_eq!(di.max_order(), 0);
            assert!((di.expectation() - h[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn derivative_of_h2() {
        // Z = I2(h (x) h), ||h|| = 1: D_i Z = 2 h_i I1(h)
        let h = [0.6, 0.8];
        let mut k = SymmetricKernel::zero(2, 2).unwrap();
        k.set_entry(&[0, 0], h[0] * h[0]);
        k.set_entry(&[0, 1], h[0] * h[1]);
        k.set_entry(&[1, 1], h[1] * h[1]);
        let z = ChaosExpansion::from_kernel(k).unwrap();
        let d = malliavin_derivative(&z);
        for i in 0..2 {
            let expect = ChaosExpansion::gaussian(&h).unwrap().scale(2.0 * h[i]);
            let diff = d[i].sub(&expect).unwrap();
            assert!(diff.is_zero() || diff.second_moment() < 1e-28);
        }
    }

    #[test]
    fn l_inverse_on_single_chaos_and_constants() {
        let z = unit_h2(2, 0);
        let li = apply_l_inverse(&z);
        let expect = z.scale(-0.5);
        assert!(li.sub(&expect).unwrap().second_moment() < 1e-30);

        let c = ChaosExpansion::constant(2, 4.2).unwrap();
        assert!(apply_l_inverse(&c).is_zero());
    }

    #[test]
    fn l_l_inverse_recenters() {
        // mixed orders 1..3 plus a constant
        let mut z = ChaosExpansion::constant(3, 2.5).unwrap();
        let mut k1 = SymmetricKernel::zero(3, 1).unwrap();
        k1.set_entry(&[1], 0.7);
        z.set_kernel(k1);
        let mut k3 = SymmetricKernel::zero(3, 3).unwrap();
        k3.set_entry(&[0, 1, 2], -0.4);
        k3.set_entry(&[2, 2, 2], 0.9);
        z.set_kernel(k3);

        let recovered = apply_l(&apply_l_inverse(&z));
        let centered = z.add_constant(-z.expectation()).unwrap();
        let diff = recovered.sub(&centered).unwrap();
        assert!(diff.second_moment() + diff.expectation().abs() < 1e-28);
    }

    #[test]
    fn stein_inner_for_unit_gaussian_is_one() {
        let z = ChaosExpansion::gaussian(&[0.6, 0.8]).unwrap();
        let w = stein_kernel_inner(&z, &z).unwrap();
        assert_eq!(w.max_order(), 0);
        assert!((w.expectation() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn stein_inner_expectation_is_second_moment() {
        let z = unit_h2(3, 1);
        let w = stein_kernel_inner(&z, &z).unwrap();
        assert!((w.expectation() - 1.0).abs() < 1e-14);

        // and for a non-normalized single-chaos element, E<DZ,-DL^{-1}Z> = E(Z^2)
        let mut k = SymmetricKernel::zero(3, 2).unwrap();
        k.set_entry(&[0, 1], 0.3);
        k.set_entry(&[2, 2], -1.1);
        let z = ChaosExpansion::from_kernel(k).unwrap();
        let w = stein_kernel_inner(&z, &z).unwrap();
        assert!((w.expectation() - z.second_moment()).abs() < 1e-13);
    }

    #[test]
    fn stein_inner_rejects_uncentered() {
        let z = ChaosExpansion::constant(2, 1.0).unwrap();
        assert!(stein_kernel_inner(&z, &z).is_err());
    }

    #[test]
    fn variance_of_stein_kernel_first_chaos_is_zero() {
        let z = ChaosExpansion::gaussian(&[1.0, 0.0]).unwrap();
        assert_eq!(variance_of_stein_kernel(&z).unwrap(), 0.0);
    }

    #[test]
    fn variance_formula_matches_direct_moments_q2() {
        let z = unit_h2(2, 0);
        let by_formula = variance_of_stein_kernel(&z).unwrap();
        let w = stein_kernel_inner(&z, &z).unwrap();
        let direct = w.exact_moment(2).unwrap() - w.expectation().powi(2);
        assert!((by_formula - direct).abs() < 1e-12);
        // for (z^2-1)/sqrt(2): (1/2)||D Z||^2 = z^2 = 1 + H2(z), variance 2
        assert!((by_formula - 2.0).abs() < 1e-12);
    }

    #[test]
    fn variance_formula_single_basis_q3() {
        // f = e1^{(x)3} normalized: E(Z^2) = 3! c^2 = 1
        let c = 1.0 / 6f64.sqrt();
        let mut k = SymmetricKernel::zero(2, 3).unwrap();
        k.set_entry(&[0, 0, 0], c);
        let z = ChaosExpansion::from_kernel(k).unwrap();
        let by_formula = variance_of_stein_kernel(&z).unwrap();
        let w = stein_kernel_inner(&z, &z).unwrap();
        let direct = w.exact_moment(2).unwrap() - w.expectation().powi(2);
        assert!((by_formula - direct).abs() < 1e-12);
    }

    #[test]
    fn variance_requires_unit_variance_and_single_chaos() {
        let mut k = SymmetricKernel::zero(2, 2).unwrap();
        k.set_entry(&[0, 0], 1.0);
        let z = ChaosExpansion::from_kernel(k).unwrap();
        assert!(variance_of_stein_kernel(&z).is_err());

        let mixed = unit_h2(2, 0)
            .add(&ChaosExpansion::gaussian(&[0.1, 0.0]).unwrap())
            .unwrap();
        assert!(variance_of_stein_kernel(&mixed).is_err());
    }

    #[test]
    fn fourth_cumulant_contraction_matches_moments() {
        let z = unit_h2(2, 1);
        let by_contraction = fourth_cumulant_by_contractions(&z).unwrap();
        let by_moment = z.exact_moment(4).unwrap() - 3.0;
        assert!((by_contraction - by_moment).abs() < 1e-12);
    }
}
