//! Exact integer and rational arithmetic: factorization, multiplicative
//! functions, quadratic characters, divisor-record lookups, and the
//! character L-value at -1 used throughout the Eisenstein machinery.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use once_cell::sync::OnceCell;

use crate::error::{Error, Result};

/// Exact signed integer. Arbitrary precision; all call sites here stay well
/// within 2^200.
pub type WideInt = BigInt;

/// Exact rational number, always in lowest terms with positive denominator.
pub type Rational = BigRational;

pub fn rational(num: i64, den: i64) -> Rational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

const SMALL_PRIME_LIMIT: u32 = 1_000_000;

static SMALL_PRIMES: OnceCell<Vec<u32>> = OnceCell::new();

/// Primes up to 10^6, sieved once and shared by every caller.
pub fn small_primes() -> &'static [u32] {
    SMALL_PRIMES.get_or_init(|| {
        let n = SMALL_PRIME_LIMIT as usize;
        let mut composite = vec![false; n + 1];
        let mut primes = Vec::with_capacity(78_498);
        for i in 2..=n {
            if !composite[i] {
                primes.push(i as u32);
                let mut j = i * i;
                while j <= n {
                    composite[j] = true;
                    j += i;
                }
            }
        }
        primes
    })
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin for u64 (the 12-base certificate covers all of u64).
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &p in &[2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d & 1 == 0 {
        d >>= 1;
        s += 1;
    }
    'witness: for &a in &[2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 0..s - 1 {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Pollard rho (Brent variant). `n` must be composite, odd, with no factor
/// below 10^6.
fn pollard_rho(n: u64) -> u64 {
    let mut c = 1u64;
    loop {
        let mut x = 2u64;
        let mut y = 2u64;
        let mut d = 1u64;
        let f = |v: u64| (mul_mod(v, v, n) + c) % n;
        let mut count = 0u64;
        while d == 1 {
            x = f(x);
            y = f(f(y));
            d = x.abs_diff(y).gcd(&n);
            count += 1;
            if count > 1 << 24 {
                break;
            }
        }
        if d != n && d != 1 {
            return d;
        }
        c += 1;
    }
}

/// Prime factorization of a u64: trial division over the shared prime table,
/// then Miller-Rabin plus Pollard rho on what remains.
pub fn factor_u64(n: u64) -> Vec<(u64, u32)> {
    assert!(n >= 1);
    let mut out: Vec<(u64, u32)> = Vec::new();
    let mut rem = n;
    for &p in small_primes() {
        let p = p as u64;
        if p * p > rem {
            break;
        }
        if rem % p == 0 {
            let mut e = 0;
            while rem % p == 0 {
                rem /= p;
                e += 1;
            }
            out.push((p, e));
        }
    }
    if rem > 1 {
        let mut stack = vec![rem];
        let mut large: Vec<u64> = Vec::new();
        while let Some(m) = stack.pop() {
            if is_prime_u64(m) {
                large.push(m);
            } else {
                let d = pollard_rho(m);
                stack.push(d);
                stack.push(m / d);
            }
        }
        large.sort_unstable();
        let mut i = 0;
        while i < large.len() {
            let p = large[i];
            let mut e = 0;
            while i < large.len() && large[i] == p {
                e += 1;
                i += 1;
            }
            out.push((p, e));
        }
    }
    out.sort_unstable();
    out
}

/// Factorization entry point for wide integers; refuses |n| > 2^64 since no
/// caller needs multiplicative data that far out.
pub fn factor(n: &WideInt) -> Result<Vec<(u64, u32)>> {
    if n.is_zero() {
        return Err(Error::Argument("cannot factor 0".into()));
    }
    let mag = n.abs();
    let v = mag
        .to_u64()
        .ok_or_else(|| Error::Argument(format!("factorization refused for |n| = {mag} > 2^64")))?;
    Ok(factor_u64(v))
}

/// phi, tau, sigma, mu, omega of one argument, all from a single factorization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiplicativeBundle {
    pub phi: WideInt,
    pub tau: u64,
    pub sigma: WideInt,
    pub mu: i8,
    pub omega: u32,
}

pub fn multiplicative_bundle(n: &WideInt) -> Result<MultiplicativeBundle> {
    if n.sign() != num_bigint::Sign::Plus {
        return Err(Error::Argument(format!("multiplicative functions need n >= 1, got {n}")));
    }
    let factors = factor(n)?;
    let mut phi = BigInt::one();
    let mut tau = 1u64;
    let mut sigma = BigInt::one();
    let mut mu = 1i8;
    for &(p, e) in &factors {
        let pb = BigInt::from(p);
        phi *= (&pb - 1) * pb.pow(e - 1);
        tau *= (e + 1) as u64;
        sigma *= (pb.pow(e + 1) - 1) / (&pb - 1);
        mu = if e > 1 { 0 } else { -mu };
    }
    Ok(MultiplicativeBundle { phi, tau, sigma, mu, omega: factors.len() as u32 })
}

pub fn phi_u64(n: u64) -> u64 {
    let mut out = n;
    for (p, _) in factor_u64(n) {
        out = out / p * (p - 1);
    }
    out
}

pub fn tau_u64(n: u64) -> u64 {
    factor_u64(n).iter().map(|&(_, e)| (e + 1) as u64).product()
}

/// Legendre symbol (n|p) for an odd prime p, extended by complete
/// multiplicativity and period p (this is the quadratic character mod p).
pub fn kronecker(p: u64, n: &WideInt) -> Result<i8> {
    if p < 3 || p % 2 == 0 || !is_prime_u64(p) {
        return Err(Error::Argument(format!("modulus {p} is not an odd prime")));
    }
    let r = n.mod_floor(&BigInt::from(p)).to_u64().expect("residue fits");
    Ok(legendre_u64(r, p))
}

fn legendre_u64(n: u64, p: u64) -> i8 {
    let n = n % p;
    if n == 0 {
        return 0;
    }
    // binary Jacobi symbol; p is an odd prime so this is the Legendre symbol
    let (mut a, mut m, mut sign) = (n, p, 1i8);
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            if m % 8 == 3 || m % 8 == 5 {
                sign = -sign;
            }
        }
        std::mem::swap(&mut a, &mut m);
        if a % 4 == 3 && m % 4 == 3 {
            sign = -sign;
        }
        a %= m;
    }
    debug_assert_eq!(m, 1);
    sign
}

/// Quadratic character mod an odd prime, with a cached residue table.
#[derive(Debug, Clone)]
pub struct CharacterMod {
    modulus: u64,
    table: Vec<i8>,
}

impl CharacterMod {
    pub fn new(p: u64) -> Result<Self> {
        if p < 3 || p % 2 == 0 || !is_prime_u64(p) {
            return Err(Error::Argument(format!("character modulus {p} is not an odd prime")));
        }
        let table = (0..p).map(|r| legendre_u64(r, p)).collect();
        Ok(CharacterMod { modulus: p, table })
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn eval_u64(&self, n: u64) -> i8 {
        self.table[(n % self.modulus) as usize]
    }

    pub fn eval_i64(&self, n: i64) -> i8 {
        let m = self.modulus as i64;
        self.table[n.rem_euclid(m) as usize]
    }

    pub fn eval(&self, n: &WideInt) -> i8 {
        let r = n.mod_floor(&BigInt::from(self.modulus)).to_u64().expect("residue fits");
        self.table[r as usize]
    }
}

/// A divisor-count record: `value` is the smallest integer whose tau reaches
/// `tau`, and successive records carry strictly increasing tau.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TauRecord {
    pub value: WideInt,
    pub tau: u64,
}

const RECORD_PRIMES: [u64; 26] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89,
    97, 101,
];

/// All tau records up to `limit`, found by depth-first search over
/// non-increasing exponent patterns on consecutive primes. Any m has a
/// rearrangement of this shape that is no larger and has the same number of
/// divisors, so only these candidates can set records.
pub fn tau_records(limit: &WideInt) -> Result<Vec<TauRecord>> {
    if limit < &BigInt::one() {
        return Err(Error::Argument(format!("tau record limit must be >= 1, got {limit}")));
    }
    if limit.bits() > 129 {
        return Err(Error::Argument(format!("tau record limit {limit} exceeds 2^128")));
    }
    let mut best: Vec<(BigInt, u64)> = vec![(BigInt::one(), 1)];

    fn dfs(
        idx: usize,
        value: &BigInt,
        tau: u64,
        max_exp: u32,
        limit: &BigInt,
        best: &mut Vec<(BigInt, u64)>,
    ) {
        if idx >= RECORD_PRIMES.len() {
            return;
        }
        let p = BigInt::from(RECORD_PRIMES[idx]);
        let mut v = value.clone();
        for e in 1..=max_exp {
            v *= &p;
            if &v > limit {
                break;
            }
            best.push((v.clone(), tau * (e as u64 + 1)));
            dfs(idx + 1, &v, tau * (e as u64 + 1), e, limit, best);
        }
    }
    dfs(0, &BigInt::one(), 1, 130, limit, &mut best);

    best.sort();
    let mut records = Vec::new();
    let mut top = 0u64;
    for (value, tau) in best {
        if tau > top {
            top = tau;
            records.push(TauRecord { value, tau });
        }
    }
    Ok(records)
}

/// M(X) = max tau(m) over 1 <= m <= X, together with the smallest witness
/// attaining it.
pub fn max_tau(limit: &WideInt) -> Result<(u64, WideInt)> {
    let records = tau_records(limit)?;
    let last = records.last().expect("records never empty");
    Ok((last.tau, last.value.clone()))
}

/// Precomputed record table for repeated M(X) lookups below a fixed ceiling.
#[derive(Debug, Clone)]
pub struct TauRecordTable {
    records: Vec<TauRecord>,
    ceiling: WideInt,
}

impl TauRecordTable {
    pub fn new(ceiling: WideInt) -> Result<Self> {
        let records = tau_records(&ceiling)?;
        Ok(TauRecordTable { records, ceiling })
    }

    pub fn max_tau(&self, x: &WideInt) -> Result<u64> {
        if x > &self.ceiling {
            return Err(Error::Argument(format!("M({x}) lookup above table ceiling {}", self.ceiling)));
        }
        if x < &BigInt::one() {
            return Err(Error::Argument("M(x) needs x >= 1".into()));
        }
        let idx = self.records.partition_point(|r| r.value <= *x);
        Ok(self.records[idx - 1].tau)
    }
}

/// L(-1, chi_p) for p prime, p = 1 mod 4, via the generalized Bernoulli sum
/// L(-1, chi) = -B_{2,chi}/2 with B_{2,chi} = p * sum_a chi(a) B_2(a/p).
pub fn l_value_minus1(p: u64) -> Result<Rational> {
    if !is_prime_u64(p) || p % 4 != 1 {
        return Err(Error::Argument(format!(
            "L(-1, chi_p) needs p prime with p = 1 mod 4, got {p}"
        )));
    }
    let chi = CharacterMod::new(p)?;
    let pq = BigRational::from(BigInt::from(p));
    let sixth = rational(1, 6);
    let mut sum = BigRational::zero();
    for a in 1..=p {
        let c = chi.eval_u64(a);
        if c == 0 {
            continue;
        }
        let x = BigRational::new(BigInt::from(a), BigInt::from(p));
        let b2 = &x * &x - &x + &sixth;
        if c == 1 {
            sum += b2;
        } else {
            sum -= b2;
        }
    }
    let b2chi = pq * sum;
    Ok(-b2chi / BigRational::from(BigInt::from(2)))
}

/// Largest integer x with x^k <= n (n >= 0).
pub fn integer_kth_root(n: &WideInt, k: u32) -> WideInt {
    assert!(k >= 1 && !n.is_negative());
    if n.is_zero() || n.is_one() || k == 1 {
        return n.clone();
    }
    let bits = n.bits();
    let mut hi = BigInt::one() << (bits / k as u64 + 1);
    let mut lo = BigInt::zero();
    while &lo < &(&hi - 1) {
        let mid: BigInt = (&lo + &hi) / 2;
        if mid.pow(k) <= *n {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// floor(c * base^(num/den)) computed exactly: x <= c * b^(num/den) iff
/// x^den * c_den^den <= c_num^den * b^num.
pub fn floor_scaled_power(c: &Rational, base: u64, num: u32, den: u32) -> Result<WideInt> {
    if c <= &BigRational::zero() {
        return Err(Error::Argument("floor_scaled_power needs a positive coefficient".into()));
    }
    let lhs_scale = c.denom().pow(den);
    let rhs = c.numer().pow(den) * BigInt::from(base).pow(num);
    // initial guess by k-th root of rhs/lhs_scale, then exact adjustment
    let mut x = integer_kth_root(&(&rhs / &lhs_scale), den);
    while (&x + 1u32).pow(den) * &lhs_scale <= rhs {
        x += 1;
    }
    while x.pow(den) * &lhs_scale > rhs {
        x -= 1;
    }
    Ok(x)
}
