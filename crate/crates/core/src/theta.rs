//! Theta-series coefficients: representation numbers by lattice-point
//! enumeration, the closed-form Eisenstein coefficients for prime
//! discriminant, the dual Eisenstein series, and the cusp remainder.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::enumerate;
use crate::error::{Error, Result};
use crate::exactmath::{multiplicative_bundle, CharacterMod, Rational, WideInt};
use crate::qform::QuadForm;

/// Aligned coefficient data of theta_Q = E + C up to a cutoff:
/// representation numbers r(n), Eisenstein coefficients a_E(n), and the
/// cusp remainder a_C(n) = r(n) - a_E(n), all exact.
#[derive(Debug, Clone)]
pub struct ThetaBlock {
    pub n_max: u64,
    pub r: Vec<u64>,
    pub a_e: Vec<Rational>,
    pub a_c: Vec<Rational>,
}

impl ThetaBlock {
    pub fn compute(q: &QuadForm, n_max: u64) -> Result<Self> {
        let r = representation_counts(q, n_max)?;
        let a_e = eisenstein_coeffs(q, n_max)?;
        let a_c = cusp_coeffs(&r, &a_e)?;
        debug_assert!(a_c[0].is_zero());
        Ok(ThetaBlock { n_max, r, a_e, a_c })
    }

    /// CSV rows `n,r,aE_num,aE_den,aC_num,aC_den`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,r,aE_num,aE_den,aC_num,aC_den\n");
        for n in 0..=self.n_max as usize {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                n,
                self.r[n],
                self.a_e[n].numer(),
                self.a_e[n].denom(),
                self.a_c[n].numer(),
                self.a_c[n].denom()
            ));
        }
        out
    }
}

/// r_Q(n) for 0 <= n <= n_max by exhaustive enumeration of all integer
/// vectors with Q(x) <= n_max.
pub fn representation_counts(q: &QuadForm, n_max: u64) -> Result<Vec<u64>> {
    enumerate::histogram(q.gram(), n_max, 4)
}

/// Ternary variant used by the family verifier: the fourth row and column
/// of the Gram must vanish and the fourth coordinate is pinned to zero.
pub fn representation_counts_ternary(gram3: &[[i64; 3]; 3], n_max: u64) -> Result<Vec<u64>> {
    let mut gram = [[0i64; 4]; 4];
    for i in 0..3 {
        for j in 0..3 {
            gram[i][j] = gram3[i][j];
        }
    }
    enumerate::histogram(&gram, n_max, 3)
}

fn prime_disc_1mod4(q: &QuadForm) -> Result<u64> {
    let p = q.prime_disc()?;
    if p % 4 != 1 {
        return Err(Error::UnsupportedForm(format!(
            "Eisenstein formulas need disc = 1 mod 4, got {p}"
        )));
    }
    Ok(p)
}

/// Exact a_E(n) for 0 <= n <= n_max:
/// a_E(n) = -(2 / L(-1,chi_p)) sum_{d|n} (p n / d - d) chi_p(d), a_E(0) = 1.
pub fn eisenstein_coeffs(q: &QuadForm, n_max: u64) -> Result<Vec<Rational>> {
    let p = prime_disc_1mod4(q)?;
    let chi = CharacterMod::new(p)?;
    let l = crate::exactmath::l_value_minus1(p)?;
    let scale = -BigRational::from(BigInt::from(2)) / l;
    let mut sums = vec![0i128; n_max as usize + 1];
    for d in 1..=n_max {
        let c = chi.eval_u64(d) as i128;
        if c == 0 {
            continue;
        }
        let mut n = d;
        while n <= n_max {
            sums[n as usize] += c * (p as i128 * (n / d) as i128 - d as i128);
            n += d;
        }
    }
    let mut out = Vec::with_capacity(n_max as usize + 1);
    out.push(BigRational::one());
    for n in 1..=n_max {
        out.push(&scale * BigRational::from(BigInt::from(sums[n as usize])));
    }
    Ok(out)
}

/// Exact dual Eisenstein coefficients for 1 <= n <= n_max (index 0 holds 1):
/// a_{E*}(n) = (2 / L(-1,chi_p)) sum_{d|n} d (chi_p(d) - chi_p(n/d)).
pub fn eisenstein_dual_coeffs(q: &QuadForm, n_max: u64) -> Result<Vec<Rational>> {
    let p = prime_disc_1mod4(q)?;
    let chi = CharacterMod::new(p)?;
    let l = crate::exactmath::l_value_minus1(p)?;
    let scale = BigRational::from(BigInt::from(2)) / l;
    let mut sums = vec![0i128; n_max as usize + 1];
    for d in 1..=n_max {
        let mut n = d;
        while n <= n_max {
            let diff = (chi.eval_u64(d) - chi.eval_u64(n / d)) as i128;
            if diff != 0 {
                sums[n as usize] += d as i128 * diff;
            }
            n += d;
        }
    }
    let mut out = Vec::with_capacity(n_max as usize + 1);
    out.push(BigRational::one());
    for n in 1..=n_max {
        out.push(&scale * BigRational::from(BigInt::from(sums[n as usize])));
    }
    Ok(out)
}

/// a_C(n) = r(n) - a_E(n), exactly. Errors when the arrays disagree in length.
pub fn cusp_coeffs(r: &[u64], a_e: &[Rational]) -> Result<Vec<Rational>> {
    if r.len() != a_e.len() {
        return Err(Error::Argument(format!(
            "length mismatch: {} representation counts vs {} Eisenstein coefficients",
            r.len(),
            a_e.len()
        )));
    }
    Ok(r.iter()
        .zip(a_e)
        .map(|(&rn, ae)| BigRational::from(BigInt::from(rn)) - ae)
        .collect())
}

/// The lower bound 24 (p-1) phi(n) / p^(3/2), kept as the exact pair
/// (numerator, p) so comparisons square instead of taking roots.
#[derive(Debug, Clone)]
pub struct EisensteinLowerBound {
    /// 24 (p-1) phi(n)
    pub numerator: WideInt,
    pub p: u64,
}

impl EisensteinLowerBound {
    /// bound <= r exactly: num / p^(3/2) <= r  iff  num^2 <= r^2 p^3
    /// (both sides nonnegative whenever r >= 0).
    pub fn le_rational(&self, r: &Rational) -> bool {
        if r.is_negative() {
            return false;
        }
        let lhs = &self.numerator * &self.numerator;
        let rhs = r * r * BigRational::from(BigInt::from(self.p).pow(3));
        BigRational::from(lhs) <= rhs
    }

    pub fn to_f64(&self) -> f64 {
        let n = self.numerator.to_f64().unwrap_or(f64::MAX);
        n / (self.p as f64).powf(1.5)
    }
}

/// Pointwise Eisenstein lower bound 24 (p-1) phi(n) / p^(3/2).
pub fn eisenstein_lower_bound(p: u64, n: u64) -> Result<EisensteinLowerBound> {
    if n == 0 {
        return Err(Error::Argument("eisenstein_lower_bound needs n >= 1".into()));
    }
    let bundle = multiplicative_bundle(&BigInt::from(n))?;
    Ok(EisensteinLowerBound {
        numerator: BigInt::from(24) * BigInt::from(p - 1) * bundle.phi,
        p,
    })
}
