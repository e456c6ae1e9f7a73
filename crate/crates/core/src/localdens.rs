//! Local solution counting mod prime powers with Good/Zero/Bad type
//! splitting, exact local densities beta_q(n), and the product test
//! against the closed-form Eisenstein coefficients.
//!
//! Odd primes go through the diagonal local normal form; per-coordinate
//! value distributions are convolved, so no q^{4v} enumeration is ever
//! needed on the production path. The prime 2 is handled by direct
//! counting at v = ord_2(n) + 3 with a stabilization check.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exactmath::{small_primes, CharacterMod, Rational, WideInt};
use crate::qform::QuadForm;
use crate::theta;

/// Direct-enumeration budget: 16^v vector scans are refused beyond this.
const DYADIC_BUDGET: u64 = 1 << 31;

/// Convolution budget: arrays of length q^v.
const CONV_BUDGET: u64 = 30_000;

/// One coordinate of the local normal form q^valuation * unit * x^2.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalBlock {
    pub valuation: u32,
    pub unit: Rational,
}

/// Good/Zero/Bad partition of the solutions of Q(x) = n mod q^v.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TypeCounts {
    pub q: u64,
    pub v: u32,
    pub n: u64,
    #[serde(serialize_with = "crate::report::bigint_as_string")]
    pub good: WideInt,
    #[serde(serialize_with = "crate::report::bigint_as_string")]
    pub zero: WideInt,
    #[serde(serialize_with = "crate::report::bigint_as_string")]
    pub bad: WideInt,
}

impl TypeCounts {
    pub fn total(&self) -> WideInt {
        &self.good + &self.zero + &self.bad
    }
}

/// Exact local density with the exponent the limit stabilized at.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalDensityReport {
    pub q: u64,
    pub n: u64,
    pub beta: Rational,
    pub stabilized_at: u32,
}

fn val_q(x: &Rational, q: u64) -> i64 {
    debug_assert!(!x.is_zero());
    let qb = BigInt::from(q);
    let mut v = 0i64;
    let mut num = x.numer().abs();
    while (&num % &qb).is_zero() {
        num /= &qb;
        v += 1;
    }
    let mut den = x.denom().clone();
    while (&den % &qb).is_zero() {
        den /= &qb;
        v -= 1;
    }
    v
}

/// Diagonalization of Q over the q-adic integers (odd q) into four blocks
/// q^{v_j} u_j x_j^2 with q-unit u_j, by symmetric pivoting on entries of
/// minimal valuation; blocks are returned sorted by valuation.
pub fn local_normal_form(q: &QuadForm, prime: u64) -> Result<Vec<LocalBlock>> {
    if prime == 2 {
        return Err(Error::UnsupportedForm(
            "dyadic normal form not supported; densities at 2 use direct counting".into(),
        ));
    }
    if !crate::exactmath::is_prime_u64(prime) {
        return Err(Error::Argument(format!("{prime} is not prime")));
    }
    let mut b: Vec<Vec<Rational>> = (0..4)
        .map(|i| (0..4).map(|j| BigRational::new(q.gram()[i][j].into(), 2.into())).collect())
        .collect();
    let mut active: Vec<usize> = (0..4).collect();
    let mut blocks = Vec::new();
    while !active.is_empty() {
        // entry of minimal valuation, preferring the diagonal
        let mut best: Option<(i64, usize, usize)> = None;
        for &i in &active {
            for &j in &active {
                if b[i][j].is_zero() {
                    continue;
                }
                let v = val_q(&b[i][j], prime);
                let better = match best {
                    None => true,
                    Some((bv, bi, bj)) => {
                        v < bv || (v == bv && i == j && bi != bj)
                    }
                };
                if better {
                    best = Some((v, i, j));
                }
            }
        }
        let (_, i, j) = best.ok_or_else(|| Error::Argument("degenerate form".into()))?;
        if i != j {
            // move the minimum onto the diagonal: x_i -> x_i + x_j
            for k in 0..4 {
                let s = &b[i][k] + &b[j][k];
                b[i][k] = s;
            }
            for k in 0..4 {
                let s = &b[k][i] + &b[k][j];
                b[k][i] = s;
            }
        }
        let piv = i;
        let d = b[piv][piv].clone();
        debug_assert!(!d.is_zero());
        let others: Vec<usize> = active.iter().copied().filter(|&r| r != piv).collect();
        // row operations first (the pivot row must stay intact while every
        // f_r is consumed), then clear the pivot row and column; the
        // remaining block is already the correct Schur complement because
        // b[r][piv] = f_r * d exactly
        for &r in &others {
            let f = &b[r][piv] / &d;
            if !f.is_zero() {
                for c in 0..4 {
                    let s = &b[r][c] - &f * &b[piv][c];
                    b[r][c] = s;
                }
            }
        }
        for &r in &others {
            b[r][piv] = BigRational::zero();
            b[piv][r] = BigRational::zero();
        }
        let v = val_q(&d, prime);
        debug_assert!(v >= 0, "positive definite integral form has nonnegative local valuations");
        let unit = d / BigRational::from(BigInt::from(prime).pow(v as u32));
        blocks.push(LocalBlock { valuation: v as u32, unit });
        active.retain(|&r| r != piv);
    }
    blocks.sort_by_key(|blk| blk.valuation);
    Ok(blocks)
}

fn mod_inverse(a: u64, m: u64) -> u64 {
    // extended gcd; a coprime to m
    let (mut old_r, mut r) = (a as i128, m as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let qt = old_r / r;
        (old_r, r) = (r, old_r - qt * r);
        (old_s, s) = (s, old_s - qt * s);
    }
    debug_assert_eq!(old_r, 1);
    old_s.rem_euclid(m as i128) as u64
}

fn unit_mod(u: &Rational, m: u64) -> u64 {
    let mb = BigInt::from(m);
    let num = u.numer().mod_floor_u64(&mb);
    let den = u.denom().mod_floor_u64(&mb);
    ((num as u128 * mod_inverse(den, m) as u128) % m as u128) as u64
}

trait ModFloorU64 {
    fn mod_floor_u64(&self, m: &BigInt) -> u64;
}

impl ModFloorU64 for BigInt {
    fn mod_floor_u64(&self, m: &BigInt) -> u64 {
        self.mod_floor(m).to_u64().expect("residue fits u64")
    }
}

/// Value distribution of one block q^vj * u * x^2 over x in Z/q^v,
/// optionally restricted to x = 0 mod q.
fn block_distribution(blk: &LocalBlock, q: u64, v: u32, restrict_zero: bool) -> Vec<u64> {
    let m = q.pow(v);
    let mut dist = vec![0u64; m as usize];
    let factor = if blk.valuation >= v {
        0
    } else {
        let mut f = unit_mod(&blk.unit, m);
        for _ in 0..blk.valuation {
            f = ((f as u128 * q as u128) % m as u128) as u64;
        }
        f
    };
    let step = if restrict_zero { q } else { 1 };
    let mut x = 0u64;
    while x < m {
        let t = ((x as u128 * x as u128) % m as u128 * factor as u128 % m as u128) as u64;
        dist[t as usize] += 1;
        x += step;
    }
    dist
}

/// Counts of Q = t mod q^v for every residue t, with optional
/// per-coordinate zero restrictions, by convolving block distributions.
fn convolved_counts(
    blocks: &[LocalBlock],
    q: u64,
    v: u32,
    restrict: &[bool; 4],
) -> Result<Vec<u64>> {
    let m = q.pow(v);
    if m > CONV_BUDGET {
        return Err(Error::Resource(format!(
            "modulus {q}^{v} exceeds the convolution budget {CONV_BUDGET}"
        )));
    }
    let m = m as usize;
    let mut cur = vec![0u64; m];
    cur[0] = 1;
    for (j, blk) in blocks.iter().enumerate() {
        let dist = block_distribution(blk, q, v, restrict[j]);
        let mut next = vec![0u64; m];
        for (a, &ca) in cur.iter().enumerate() {
            if ca == 0 {
                continue;
            }
            for (bb, &db) in dist.iter().enumerate() {
                if db != 0 {
                    let idx = (a + bb) % m;
                    next[idx] += ca * db;
                }
            }
        }
        cur = next;
    }
    Ok(cur)
}

fn s_sets(blocks: &[LocalBlock]) -> ([bool; 4], u32, u32, u32) {
    let mut s0_mask = [false; 4];
    let (mut s0, mut s1, mut s2) = (0u32, 0u32, 0u32);
    for (j, blk) in blocks.iter().enumerate() {
        match blk.valuation {
            0 => {
                s0_mask[j] = true;
                s0 += 1;
            }
            1 => s1 += 1,
            _ => s2 += 1,
        }
    }
    (s0_mask, s0, s1, s2)
}

/// Good-type count mod q (v = 1): solutions with some unit-block coordinate
/// nonzero mod q.
fn good_count_mod_q(blocks: &[LocalBlock], q: u64, n: u64) -> Result<u64> {
    let (s0_mask, _, _, _) = s_sets(blocks);
    let total = convolved_counts(blocks, q, 1, &[false; 4])?;
    let nog = convolved_counts(blocks, q, 1, &s0_mask)?;
    Ok(total[(n % q) as usize] - nog[(n % q) as usize])
}

/// Valuation shift for the Bad-I image form: unit blocks move up one power,
/// everything else moves down one.
fn bad1_image(blocks: &[LocalBlock]) -> Vec<LocalBlock> {
    let mut out: Vec<LocalBlock> = blocks
        .iter()
        .map(|blk| LocalBlock {
            valuation: if blk.valuation == 0 { 1 } else { blk.valuation - 1 },
            unit: blk.unit.clone(),
        })
        .collect();
    out.sort_by_key(|b| b.valuation);
    out
}

/// r_{q^v}(n) for odd q computed through the reduction maps: good-type
/// stabilization from level 1, the zero-type map of multiplicity q^4, and
/// the two bad-type maps. The exhaustive q^{4v} scan exists only in tests.
pub fn count_via_reduction(q: &QuadForm, prime: u64, v: u32, n: u64) -> Result<WideInt> {
    if prime == 2 {
        return Err(Error::UnsupportedForm("reduction maps are for odd primes".into()));
    }
    let blocks = local_normal_form(q, prime)?;
    count_via_reduction_blocks(&blocks, prime, v, n)
}

fn count_via_reduction_blocks(blocks: &[LocalBlock], q: u64, v: u32, n: u64) -> Result<WideInt> {
    if v == 0 {
        return Ok(BigInt::one());
    }
    let (_, s0, s1, s2) = s_sets(blocks);
    let qb = BigInt::from(q);

    // good part stabilizes at level 1
    let good1 = good_count_mod_q(blocks, q, n)?;
    let mut total = BigInt::from(good1) * qb.pow(3 * (v - 1));

    if v == 1 {
        if n % q == 0 {
            // zero type is the origin; bad types fill the S1/S2 coordinates
            total += BigInt::one();
            let bad1 = (qb.pow(s1) - 1u32) * qb.pow(s2);
            let bad2 = qb.pow(s2) - 1u32;
            total += bad1 + bad2;
        }
        return Ok(total);
    }

    // zero type: multiplicity q^4 onto level v-2 at n/q^2
    if n % (q * q) == 0 {
        let sub = count_via_reduction_blocks(blocks, q, v - 2, n / (q * q))?;
        total += qb.pow(4) * sub;
    }

    // bad type I: multiplicity q^{s1+s2} onto good solutions of the image
    // form at level v-1, target n/q
    if s1 > 0 && n % q == 0 {
        let image = bad1_image(blocks);
        let good_img = good_count_mod_q(&image, q, n / q)?;
        total += qb.pow(s1 + s2) * BigInt::from(good_img) * qb.pow(3 * (v - 2));
    }

    // bad type II: needs S2 and q^2 | n
    if s2 > 0 && n % (q * q) == 0 {
        if v == 2 {
            // x_{S0 u S1} = 0 mod q, x_{S2} free but not all = 0 mod q
            total += qb.pow(s0 + s1) * (qb.pow(2 * s2) - qb.pow(s2));
        } else {
            // multiplicity q^{8-s0-s1} onto level v-2 counts with the S2
            // coordinates not all divisible by q
            let mut image: Vec<LocalBlock> = blocks.to_vec();
            let mut s2_mask = [false; 4];
            for (j, blk) in image.iter_mut().enumerate() {
                if blk.valuation >= 2 {
                    blk.valuation -= 2;
                    s2_mask[j] = true;
                }
            }
            let tot = convolved_counts(&image, q, v - 2, &[false; 4])?;
            let res = convolved_counts(&image, q, v - 2, &s2_mask)?;
            let m = q.pow(v - 2);
            let target = ((n / (q * q)) % m) as usize;
            let restricted = tot[target] - res[target];
            total += qb.pow(8 - s0 - s1) * BigInt::from(restricted);
        }
    }

    Ok(total)
}

/// Good/Zero/Bad counts at level v. Odd q goes through the normal form and
/// convolution; q = 2 uses direct enumeration and requires odd discriminant
/// (where all blocks are unimodular, so Good means primitive).
pub fn count_types(q: &QuadForm, prime: u64, v: u32, n: u64) -> Result<TypeCounts> {
    if v == 0 {
        return Err(Error::Argument("type counts need v >= 1".into()));
    }
    if prime == 2 {
        return count_types_dyadic(q, v, n);
    }
    let blocks = local_normal_form(q, prime)?;
    let (s0_mask, _, _, _) = s_sets(&blocks);
    let m = prime.pow(v);
    if m > CONV_BUDGET {
        return Err(Error::Resource(format!(
            "modulus {prime}^{v} exceeds the convolution budget {CONV_BUDGET}"
        )));
    }
    let idx = (n % m) as usize;
    let total = convolved_counts(&blocks, prime, v, &[false; 4])?[idx];
    let no_good = convolved_counts(&blocks, prime, v, &s0_mask)?[idx];
    let zero = convolved_counts(&blocks, prime, v, &[true; 4])?[idx];
    Ok(TypeCounts {
        q: prime,
        v,
        n,
        good: BigInt::from(total - no_good),
        zero: BigInt::from(zero),
        bad: BigInt::from(no_good - zero),
    })
}

fn count_types_dyadic(q: &QuadForm, v: u32, n: u64) -> Result<TypeCounts> {
    if q.disc().is_even() {
        return Err(Error::UnsupportedForm(
            "dyadic type counts need odd discriminant (unimodular at 2)".into(),
        ));
    }
    let m = 1u64 << v;
    if m.pow(4) > DYADIC_BUDGET {
        return Err(Error::Resource(format!(
            "direct count over 16^{v} vectors exceeds the enumeration budget"
        )));
    }
    let target = n % m;
    let (mut good, mut zero) = (0u64, 0u64);
    let gram = q.gram();
    let mi = m as i64;
    let mut x = [0i64; 4];
    for x0 in 0..mi {
        x[0] = x0;
        for x1 in 0..mi {
            x[1] = x1;
            for x2 in 0..mi {
                x[2] = x2;
                for x3 in 0..mi {
                    x[3] = x3;
                    let val = crate::enumerate::q_value(gram, &x).rem_euclid(mi);
                    if val as u64 == target {
                        if x.iter().all(|&c| c % 2 == 0) {
                            zero += 1;
                        } else {
                            good += 1;
                        }
                    }
                }
            }
        }
    }
    Ok(TypeCounts {
        q: 2,
        v,
        n,
        good: BigInt::from(good),
        zero: BigInt::from(zero),
        bad: BigInt::zero(),
    })
}

/// Exact beta_q(n) = lim r_{q^v}(n)/q^{3v}. Odd q: evaluated at the
/// stabilizing level v = 2 ord_q(n) + 1 through the reduction maps, and
/// cross-checked one level higher. q = 2: direct counting at
/// v = ord_2(n) + 3 with the same stabilization check.
pub fn local_density(q: &QuadForm, prime: u64, n: u64) -> Result<LocalDensityReport> {
    if n == 0 {
        return Err(Error::Argument("local density needs n >= 1".into()));
    }
    if prime == 2 {
        return local_density_dyadic(q, n);
    }
    let ord = {
        let mut k = 0u32;
        let mut m = n;
        while m % prime == 0 {
            m /= prime;
            k += 1;
        }
        k
    };
    let v = 2 * ord + 1;
    let count = count_via_reduction(q, prime, v, n)?;
    let beta = BigRational::new(count, BigInt::from(prime).pow(3 * v));
    let count_next = count_via_reduction(q, prime, v + 1, n)?;
    let beta_next = BigRational::new(count_next, BigInt::from(prime).pow(3 * (v + 1)));
    if beta != beta_next {
        return Err(Error::Verification(format!(
            "density at q={prime}, n={n} failed to stabilize at v={v}"
        )));
    }
    Ok(LocalDensityReport { q: prime, n, beta, stabilized_at: v })
}

/// Residue counts of Q over (Z/2^v)^4 for all residues at once.
fn dyadic_counts(gram: &[[i64; 4]; 4], v: u32) -> Result<Vec<u64>> {
    let m = 1i64 << v;
    if (m as u64).pow(4) > DYADIC_BUDGET {
        return Err(Error::Resource(format!(
            "direct count over 16^{v} vectors exceeds the enumeration budget"
        )));
    }
    let mut counts = vec![0u64; m as usize];
    let mask = m - 1;
    let mut x = [0i64; 4];
    for x0 in 0..m {
        x[0] = x0;
        for x1 in 0..m {
            x[1] = x1;
            for x2 in 0..m {
                x[2] = x2;
                for x3 in 0..m {
                    x[3] = x3;
                    let val = crate::enumerate::q_value(gram, &x) & mask;
                    counts[val as usize] += 1;
                }
            }
        }
    }
    Ok(counts)
}

fn local_density_dyadic(q: &QuadForm, n: u64) -> Result<LocalDensityReport> {
    let ord = n.trailing_zeros().min(63);
    let ord = if n == 0 { 0 } else { ord };
    let v = ord + 3;
    let c1 = dyadic_counts(q.gram(), v)?;
    let c2 = dyadic_counts(q.gram(), v + 1)?;
    let m1 = 1u64 << v;
    let m2 = 1u64 << (v + 1);
    let beta = BigRational::new(BigInt::from(c1[(n % m1) as usize]), BigInt::from(m1).pow(3));
    let beta_next = BigRational::new(BigInt::from(c2[(n % m2) as usize]), BigInt::from(m2).pow(3));
    if beta != beta_next {
        return Err(Error::Verification(format!(
            "dyadic density at n={n} not stable between v={v} and v={}",
            v + 1
        )));
    }
    Ok(LocalDensityReport { q: 2, n, beta, stabilized_at: v })
}

/// beta_infinity(n) = 4 pi^2 n / sqrt(det A).
pub fn beta_infinity(q: &QuadForm, n: u64) -> f64 {
    let det = q.disc().to_f64().expect("disc fits f64");
    4.0 * std::f64::consts::PI.powi(2) * n as f64 / det.sqrt()
}

/// Everything the Siegel product comparison produces for one (Q, n, B).
#[derive(Debug, Clone, Serialize)]
pub struct SiegelReport {
    pub p: u64,
    pub n: u64,
    pub cutoff: u64,
    /// beta_inf * beta_2 * prod of beta_q over odd q <= cutoff
    pub product: f64,
    pub a_e: f64,
    /// prod over cutoff < q <= 10^5, q not dividing 2pn, of 1 - chi_p(q)/q^2
    pub tail_estimate: f64,
    /// | product / a_E(n) - tail_estimate |
    pub deviation: f64,
    /// | product / a_E(n) - 1 |
    pub relative_error: f64,
}

/// Truncated Siegel product against the exact Eisenstein coefficient.
pub fn siegel_product_check(q: &QuadForm, n: u64, cutoff: u64) -> Result<SiegelReport> {
    if cutoff < 50 {
        return Err(Error::Argument("Siegel check needs a prime cutoff >= 50".into()));
    }
    if n == 0 {
        return Err(Error::Argument("Siegel check needs n >= 1".into()));
    }
    let p = q.prime_disc()?;
    let chi = CharacterMod::new(p)?;

    let mut product = beta_infinity(q, n);
    product *= rational_to_f64(&local_density(q, 2, n)?.beta);
    for &qq in small_primes() {
        let qq = qq as u64;
        if qq > cutoff {
            break;
        }
        if qq == 2 {
            continue;
        }
        product *= rational_to_f64(&local_density(q, qq, n)?.beta);
    }

    let a_e = rational_to_f64(&theta::eisenstein_coeffs(q, n)?[n as usize]);

    let mut tail = 1.0f64;
    for &qq in small_primes() {
        let qq = qq as u64;
        if qq <= cutoff {
            continue;
        }
        if 2 % qq == 0 || p % qq == 0 || n % qq == 0 {
            continue;
        }
        let c = chi.eval_u64(qq) as f64;
        tail *= 1.0 - c / (qq as f64 * qq as f64);
    }

    let deviation = (product / a_e - tail).abs();
    let relative_error = (product / a_e - 1.0).abs();
    Ok(SiegelReport { p, n, cutoff, product, a_e, tail_estimate: tail, deviation, relative_error })
}

pub(crate) fn rational_to_f64(r: &Rational) -> f64 {
    r.numer().to_f64().unwrap_or(f64::MAX) / r.denom().to_f64().unwrap_or(1.0)
}

/// Local representability: beta_q(n) > 0 for every prime. Only primes
/// dividing 2 * disc * n can vanish; the rest are positive because a
/// nondegenerate form in >= 3 variables over Z/q lifts by Hensel.
pub fn is_locally_represented(q: &QuadForm, n: u64) -> Result<bool> {
    if n == 0 {
        return Ok(true);
    }
    // odd primes dividing disc or n
    let disc_u = q
        .disc()
        .to_u64()
        .ok_or_else(|| Error::UnsupportedForm("discriminant too large".into()))?;
    let mut to_check: Vec<u64> = Vec::new();
    for (f, _) in crate::exactmath::factor_u64(disc_u) {
        if f > 2 {
            to_check.push(f);
        }
    }
    for (f, _) in crate::exactmath::factor_u64(n) {
        if f > 2 && !to_check.contains(&f) {
            to_check.push(f);
        }
    }
    for prime in to_check {
        if local_density(q, prime, n)?.beta.is_zero() {
            return Ok(false);
        }
    }
    // the prime 2: for odd discriminant, descend by squares and look for a
    // primitive solution mod 8 (good-type counts stabilize from there)
    if disc_u % 2 == 1 {
        let mut m = n;
        loop {
            if primitive_solution_mod8(q, m) {
                return Ok(true);
            }
            if m % 4 == 0 {
                m /= 4;
            } else {
                return Ok(false);
            }
        }
    }
    Ok(!local_density(q, 2, n)?.beta.is_zero())
}

fn primitive_solution_mod8(q: &QuadForm, n: u64) -> bool {
    let gram = q.gram();
    let target = (n % 8) as i64;
    let mut x = [0i64; 4];
    for x0 in 0..8 {
        x[0] = x0;
        for x1 in 0..8 {
            x[1] = x1;
            for x2 in 0..8 {
                x[2] = x2;
                for x3 in 0..8 {
                    x[3] = x3;
                    if x.iter().all(|&c| c % 2 == 0) {
                        continue;
                    }
                    if crate::enumerate::q_value(gram, &x).rem_euclid(8) == target {
                        return true;
                    }
                }
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactmath::rational;

    fn family(p: i64) -> QuadForm {
        QuadForm::from_gram([[2, 1, 1, 1], [1, 2, 1, 1], [1, 1, 2, 1], [1, 1, 1, (p + 3) / 4]])
            .unwrap()
    }

    fn two_i() -> QuadForm {
        QuadForm::from_gram([[2, 0, 0, 0], [0, 2, 0, 0], [0, 0, 2, 0], [0, 0, 0, 2]]).unwrap()
    }

    /// Exhaustive oracle over (Z/q^v)^4 on the raw Gram matrix.
    fn brute_counts(q: &QuadForm, m: u64) -> Vec<u64> {
        let mut counts = vec![0u64; m as usize];
        let mi = m as i64;
        let mut x = [0i64; 4];
        for x0 in 0..mi {
            x[0] = x0;
            for x1 in 0..mi {
                x[1] = x1;
                for x2 in 0..mi {
                    x[2] = x2;
                    for x3 in 0..mi {
                        x[3] = x3;
                        let val = crate::enumerate::q_value(q.gram(), &x).rem_euclid(mi);
                        counts[val as usize] += 1;
                    }
                }
            }
        }
        counts
    }

    #[test]
    fn normal_form_shapes() {
        let q = two_i();
        let nf = local_normal_form(&q, 3).unwrap();
        assert!(nf.iter().all(|b| b.valuation == 0), "unit diagonal at q=3");

        for p in [13u64, 29, 101] {
            let q = family(p as i64);
            let nf = local_normal_form(&q, p).unwrap();
            let vals: Vec<u32> = nf.iter().map(|b| b.valuation).collect();
            assert_eq!(vals, vec![0, 0, 0, 1], "one ramified block at q=p={p}");
        }

        // valuations sum to ord_q(disc)
        let q = family(13);
        for prime in [3u64, 5, 7, 13] {
            let nf = local_normal_form(&q, prime).unwrap();
            let total: u32 = nf.iter().map(|b| b.valuation).sum();
            let mut d = 13u64;
            let mut ord = 0;
            while d % prime == 0 {
                d /= prime;
                ord += 1;
            }
            assert_eq!(total, ord, "sum of valuations at q={prime}");
        }

        assert!(local_normal_form(&q, 2).is_err());
    }

    #[test]
    fn reduction_counts_match_exhaustive() {
        let q13 = family(13);
        for prime in [3u64, 5] {
            for v in 1..=2u32 {
                let m = prime.pow(v);
                let brute = brute_counts(&q13, m);
                for n in [0u64, 1, 2, 3, prime, 2 * prime, prime * prime, prime * prime + 1] {
                    let red = count_via_reduction(&q13, prime, v, n).unwrap();
                    assert_eq!(
                        red,
                        WideInt::from(brute[(n % m) as usize]),
                        "q={prime} v={v} n={n}"
                    );
                }
            }
        }
    }

    #[test]
    fn type_counts_match_exhaustive() {
        let q13 = family(13);
        // at q = 13, v = 1: classify by hand from the brute count
        let tc = count_types(&q13, 13, 1, 0).unwrap();
        let brute = brute_counts(&q13, 13);
        assert_eq!(tc.total(), WideInt::from(brute[0]));
        assert_eq!(tc.zero, WideInt::from(1u32), "only the origin is zero type at v=1");
        // bad = solutions supported on the single ramified coordinate
        assert_eq!(tc.bad, WideInt::from(12u32), "q - 1 bad solutions");

        let tc1 = count_types(&q13, 3, 1, 1).unwrap();
        assert_eq!(tc1.zero, WideInt::zero());
        assert_eq!(tc1.bad, WideInt::zero());
        assert_eq!(tc1.good, WideInt::from(brute_counts(&q13, 3)[1]));
    }

    #[test]
    fn good_type_stabilization() {
        // r^Good_{q^{k+1}}(n) = q^3 r^Good_{q^k}(n) at q = 3, k = 1
        let q13 = family(13);
        for n in [1u64, 2, 3, 6, 9] {
            let a = count_types(&q13, 3, 1, n).unwrap();
            let b = count_types(&q13, 3, 2, n).unwrap();
            assert_eq!(b.good, a.good * WideInt::from(27u32), "good stabilization at n={n}");
        }
    }

    #[test]
    fn zero_map_multiplicity() {
        // fibers of x -> x/q from zero-type solutions mod q^2 over solutions
        // mod q^0 (a single point) have size q^4
        let q13 = family(13);
        let tc = count_types(&q13, 3, 2, 9).unwrap();
        assert_eq!(tc.zero, WideInt::from(81u32), "q^4 zero solutions of 9 mod 9");
        // against brute force: solutions x = 3y counted directly
        let brute = brute_counts(&q13, 9);
        let total = WideInt::from(brute[0]);
        assert_eq!(tc.total(), total);
    }

    #[test]
    fn densities_match_known_values() {
        // beta_p(1) = 1 - 1/p
        for p in [5u64, 13, 29] {
            let q = family(p as i64);
            let r = local_density(&q, p, 1).unwrap();
            assert_eq!(r.beta, rational(p as i64 - 1, p as i64), "beta_p(1) at p={p}");
        }
        // beta_2(1) = (4 - chi_p(2))/4
        for p in [5u64, 13, 29] {
            let q = family(p as i64);
            let chi = CharacterMod::new(p).unwrap();
            let r = local_density(&q, 2, 1).unwrap();
            assert_eq!(
                r.beta,
                rational(4 - chi.eval_u64(2) as i64, 4),
                "beta_2(1) at p={p}"
            );
        }
        // beta_3(1) for disc 13: 1 - chi_13(3)/9 = 8/9
        let q13 = family(13);
        let r = local_density(&q13, 3, 1).unwrap();
        assert_eq!(r.beta, rational(8, 9));
    }

    #[test]
    fn unramified_densities_formula() {
        // beta_q(n) = 1 - chi_p(q)/q^2 for q not dividing 2 p n
        let q13 = family(13);
        let chi = CharacterMod::new(13).unwrap();
        for prime in [3u64, 5, 7, 11, 17, 19, 23, 29, 31, 37, 41, 43, 47] {
            let r = local_density(&q13, prime, 1).unwrap();
            let expect = BigRational::one()
                - rational(chi.eval_u64(prime) as i64, (prime * prime) as i64);
            assert_eq!(r.beta, expect, "beta_{prime}(1)");
        }
    }

    #[test]
    fn density_with_zero_descent() {
        // n = q^2 exercises the zero map; compare against the convolution
        // count at the stabilized level
        let q13 = family(13);
        let blocks = local_normal_form(&q13, 5).unwrap();
        let r = local_density(&q13, 5, 25).unwrap();
        let conv = convolved_counts(&blocks, 5, 3, &[false; 4]).unwrap();
        let direct = BigRational::new(BigInt::from(conv[(25 % 125) as usize]), BigInt::from(5u64.pow(9)));
        assert_eq!(r.beta, direct);
        assert_eq!(r.stabilized_at, 5);
    }

    #[test]
    fn beta_infinity_values() {
        let q13 = family(13);
        let b1 = beta_infinity(&q13, 1);
        assert!((b1 - 4.0 * std::f64::consts::PI.powi(2) / 13f64.sqrt()).abs() < 1e-12);
        let b2 = beta_infinity(&q13, 2);
        assert!((b2 - 2.0 * b1).abs() < 1e-12, "linear in n");
    }

    #[test]
    fn siegel_product_small() {
        let q5 = family(5);
        let rep = siegel_product_check(&q5, 1, 100).unwrap();
        assert!((rep.a_e - 20.0).abs() < 1e-9);
        assert!(rep.deviation <= 1e-3, "deviation {} too large", rep.deviation);
        // deviation shrinks as the cutoff grows
        let rep2 = siegel_product_check(&q5, 1, 500).unwrap();
        assert!(rep2.deviation < rep.deviation);
        assert!(siegel_product_check(&q5, 1, 10).is_err());
    }

    #[test]
    fn local_representability() {
        let q101 = family(101);
        for n in 1..=200u64 {
            assert!(
                is_locally_represented(&q101, n).unwrap(),
                "n={n} should be locally represented by the disc-101 form"
            );
        }
        // global representation implies local
        let q229 = family(229);
        let r = theta::representation_counts(&q229, 50).unwrap();
        for n in 1..=50u64 {
            if r[n as usize] > 0 {
                assert!(is_locally_represented(&q229, n).unwrap());
            }
        }
        // 14 is excepted for p = 229 but still locally represented (the
        // obstruction is archimedean-free; the failure is global)
        assert!(is_locally_represented(&q229, 14).unwrap());
    }

    #[test]
    fn dyadic_density_even_discriminant() {
        // x^2+y^2+z^2+w^2 (disc 16): the direct counter handles the even
        // discriminant; every n is represented over Z_2
        let q = two_i();
        for n in [1u64, 2, 3, 4, 7] {
            let r = local_density(&q, 2, n).unwrap();
            assert!(r.beta > BigRational::zero(), "beta_2({n}) for the sum of four squares");
        }
        // ord_2(n) <= 2 keeps the direct counter well inside its budget
        for n in (1..=40u64).filter(|n| n.trailing_zeros() < 3) {
            assert!(is_locally_represented(&q, n).unwrap(), "n={n}");
        }
    }

    #[test]
    fn dyadic_budget_error() {
        let q = family(13);
        match local_density(&q, 2, 1 << 12) {
            Err(Error::Resource(_)) => {}
            other => panic!("expected resource error, got {other:?}"),
        }
    }
}
