//! Right inverses of the linear operators that govern the contact-line
//! unfolding `w`.
//!
//! Non-resonant, variables `(xi, rho)`:
//! `L = xi d_xi + (3-n) rho d_rho - 1`.
//! Resonant with `3 - n = 1/m`, variables `(xi, rho, sigma)`:
//! `L = m xi d_xi + rho d_rho + m (sigma + rho^m) d_sigma - m`.

use super::{indices, Series2, Series3, SeriesCoeffs};
use crate::error::{Error, Result};
use crate::model::ResonanceClass;
use crate::scalar::Scalar;

/// Divisors smaller than this signal a misclassified resonant exponent.
pub const RES_GUARD: f64 = 1e-9;

pub fn apply_t_nonresonant<T: Scalar>(phi: &Series2<T>, sc: &SeriesCoeffs<T>) -> Result<Series2<T>> {
    for e in [[0, 0], [1, 0]] {
        if !phi.get(e).is_zero() {
            return Err(Error::IndexViolation(e.to_vec()));
        }
    }
    let mut out = Series2::zeros(phi.deg());
    for e @ [j, l] in indices::<2>(phi.deg()) {
        if e == [0, 0] || e == [1, 0] {
            continue;
        }
        let div = T::from_i64(j as i64) + sc.three_minus_n.clone() * T::from_i64(l as i64) - T::one();
        if div.abs().to_f64() < RES_GUARD {
            return Err(Error::ResonantDivisor { index: e.to_vec(), divisor: div.to_f64() });
        }
        let c = phi.get(e);
        if !c.is_zero() {
            out.set(e, c / div);
        }
    }
    Ok(out)
}

pub fn forward_nonresonant<T: Scalar>(t: &Series2<T>, sc: &SeriesCoeffs<T>) -> Series2<T> {
    let a = &t.euler(0) + &t.euler(1).scale(&sc.three_minus_n);
    &a - t
}

pub fn apply_t_resonant<T: Scalar>(phi: &Series3<T>, m: u32) -> Result<Series3<T>> {
    for e in [[0, 0, 0], [1, 0, 0], [0, 0, 1]] {
        if !phi.get(e).is_zero() {
            return Err(Error::IndexViolation(e.to_vec()));
        }
    }
    let deg = phi.deg();
    let mi = m as usize;
    let mt = T::from_i64(m as i64);
    let mut out = Series3::zeros(deg);
    // the correction couples (j, l, p) to (j, l - m, p + 1): sweep by l
    let mut order = indices::<3>(deg);
    order.sort_by_key(|e| (e[1], e[0] + e[1] + e[2]));
    for e @ [j, l, p] in order {
        if e == [0, 0, 0] || e == [1, 0, 0] || e == [0, mi, 0] {
            continue;
        }
        if e == [0, 0, 1] {
            out.set(e, phi.get([0, mi, 0]) / mt.clone());
            continue;
        }
        let mut num = phi.get(e);
        if l >= mi {
            let prev = out.get([j, l - mi, p + 1]);
            num = num - mt.clone() * T::from_i64(p as i64 + 1) * prev;
        }
        let div = T::from_i64((mi * j + l + mi * p) as i64 - m as i64);
        if !num.is_zero() {
            out.set(e, num / div);
        }
    }
    Ok(out)
}

pub fn forward_resonant<T: Scalar>(t: &Series3<T>, m: u32) -> Series3<T> {
    let mt = T::from_i64(m as i64);
    let mut e = [0; 3];
    e[1] = m as usize;
    let ds = t.partial(2);
    let a = &t.euler(0).scale(&mt) + &t.euler(1);
    let b = &(&t.euler(2) + &ds.shift(e)).scale(&mt);
    &(&a + b) - &t.scale(&mt)
}

/// Smallest divisor modulus over the truncation; its reciprocal bounds the
/// weighted norm of the non-resonant inverse.
pub fn divisor_floor<T: Scalar>(sc: &SeriesCoeffs<T>, deg: usize) -> f64 {
    match sc.class {
        ResonanceClass::Resonant { .. } => 1.0,
        ResonanceClass::NonResonant => indices::<2>(deg)
            .into_iter()
            .filter(|e| *e != [0, 0] && *e != [1, 0])
            .map(|[j, l]| (j as f64 + sc.three_minus_n.to_f64() * l as f64 - 1.0).abs())
            .fold(f64::INFINITY, f64::min),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Params;
    use num::BigRational;
    use proptest::prelude::*;

    fn sc(n: f64) -> SeriesCoeffs<f64> {
        SeriesCoeffs::new(&Params::new(n, 1.0).unwrap())
    }

    #[test]
    fn nonresonant_examples() {
        let s = sc(1.5);
        let t = apply_t_nonresonant(&Series2::monomial([0, 1], 1.0, 4), &s).unwrap();
        assert_eq!(t, Series2::monomial([0, 1], 2.0, 4));
        let t = apply_t_nonresonant(&Series2::monomial([2, 0], 1.0, 4), &s).unwrap();
        assert_eq!(t, Series2::monomial([2, 0], 1.0, 4));
        let t = apply_t_nonresonant(&Series2::monomial([1, 1], 1.0, 4), &s).unwrap();
        assert_eq!(t, Series2::monomial([1, 1], 1.0 / 1.5, 4));
    }

    #[test]
    fn nonresonant_rejects_excluded_indices() {
        let s = sc(1.5);
        let r = apply_t_nonresonant(&Series2::monomial([1, 0], 1.0, 4), &s);
        assert!(matches!(r, Err(Error::IndexViolation(_))));
    }

    #[test]
    fn nonresonant_guard_trips_on_resonant_n() {
        let mut s = sc(1.5);
        s.three_minus_n = 0.5; // n = 2.5 masquerading as non-resonant
        let r = apply_t_nonresonant(&Series2::monomial([0, 1], 1.0, 4), &s);
        assert!(matches!(r, Err(Error::ResonantDivisor { .. })));
    }

    #[test]
    fn resonant_examples() {
        let t = apply_t_resonant(&Series3::monomial([0, 1, 0], 1.0, 4), 2).unwrap();
        assert_eq!(t, Series3::monomial([0, 1, 0], -1.0, 4));
        let t = apply_t_resonant(&Series3::monomial([2, 0, 0], 1.0, 4), 3).unwrap();
        assert_eq!(t, Series3::monomial([2, 0, 0], 1.0 / 3.0, 4));
    }

    #[test]
    fn resonant_rho_squared_m1() {
        let phi = Series3::<BigRational>::monomial([0, 2, 0], BigRational::from_integer(1.into()), 5);
        let t = apply_t_resonant(&phi, 1).unwrap();
        assert_eq!(forward_resonant(&t, 1), phi);
        assert!(num::Zero::is_zero(&t.get([0, 1, 0])));
    }

    #[test]
    fn resonant_normalisation() {
        let mut phi = Series3::<f64>::zeros(6);
        phi.set([0, 2, 0], 3.0);
        phi.set([1, 1, 1], 1.0);
        let t = apply_t_resonant(&phi, 2).unwrap();
        assert_eq!(t.get([0, 2, 0]), 0.0);
        assert_eq!(t.get([0, 0, 1]), 1.5);
        assert_eq!(t.get([1, 0, 0]), 0.0);
        assert!(matches!(
            apply_t_resonant(&Series3::monomial([0, 0, 1], 1.0, 4), 2),
            Err(Error::IndexViolation(_))
        ));
    }

    fn admissible2(v: Vec<i32>, deg: usize) -> Series2<BigRational> {
        let mut s = Series2::zeros(deg);
        for (e, c) in indices::<2>(deg).into_iter().zip(v) {
            if e != [0, 0] && e != [1, 0] {
                s.set(e, BigRational::from_integer(c.into()));
            }
        }
        s
    }

    fn admissible3(v: Vec<i32>, deg: usize) -> Series3<BigRational> {
        let mut s = Series3::zeros(deg);
        for (e, c) in indices::<3>(deg).into_iter().zip(v) {
            if e != [0, 0, 0] && e != [1, 0, 0] && e != [0, 0, 1] {
                s.set(e, BigRational::from_integer(c.into()));
            }
        }
        s
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn nonresonant_inverse_exact(v in proptest::collection::vec(-5i32..5, 28), n in prop_oneof![Just(0.5), Just(1.25), Just(1.75), Just(2.25)]) {
            let phi = admissible2(v, 6);
            let s = SeriesCoeffs::<BigRational>::new(&Params::new(n, 1.0).unwrap());
            let t = apply_t_nonresonant(&phi, &s).unwrap();
            prop_assert_eq!(forward_nonresonant(&t, &s), phi);
        }

        #[test]
        fn resonant_inverse_exact(v in proptest::collection::vec(-5i32..5, 84), m in 1u32..4) {
            let phi = admissible3(v, 6);
            let t = apply_t_resonant(&phi, m).unwrap();
            prop_assert_eq!(forward_resonant(&t, m), phi);
        }

        #[test]
        fn nonresonant_bounded(v in proptest::collection::vec(-5.0f64..5.0, 28), eps in 0.05f64..0.9) {
            let s = sc(1.5);
            let mut phi = Series2::<f64>::zeros(6);
            for (e, c) in indices::<2>(6).into_iter().zip(v) {
                if e != [0, 0] && e != [1, 0] {
                    phi.set(e, c);
                }
            }
            let t = apply_t_nonresonant(&phi, &s).unwrap();
            let bound = phi.eps_norm_weighted(eps, [1, 2]) / divisor_floor(&s, 6);
            prop_assert!(t.eps_norm_weighted(eps, [1, 2]) <= bound * (1.0 + 1e-12));
        }
    }
}
