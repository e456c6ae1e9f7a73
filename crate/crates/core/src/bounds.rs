//! Analytic machinery and explicit constants: modified Bessel functions
//! K0/K1, the psi kernel and its lattice sums, the truncated Petersson
//! norm of the cusp part, and the inequality suite (norm bounds, dual
//! count bounds, representation lower bound, sufficiency threshold).

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exactmath::{
    self, floor_scaled_power, multiplicative_bundle, rational, TauRecordTable, WideInt,
};
use crate::localdens::rational_to_f64;
use crate::qform::{jacobi_decompose, min_nonzero, QuadForm};
use crate::theta;

const EULER_GAMMA: f64 = 0.5772156649015328606;

/// Coefficient of M(25.09 p^(35/6))/p^(1/4) in the Petersson norm bound.
const PETERSSON_TAIL_COEFF: f64 = 3216.66;
/// Sharper constant carried by the cusp-part head inequality.
const CUSP_HEAD_COEFF: f64 = 3216.6524;
/// Prefactor of the cusp correction in the representation lower bound.
const REP_BOUND_COEFF: f64 = 23.85;
/// Eisenstein-part head bound: (337.26 log(p+2) + 206.64)/p.
const EIS_HEAD_LOG_COEFF: f64 = 337.26;
const EIS_HEAD_CONST: f64 = 206.64;
/// Dual counting bounds: sum_{n<=x} r*(n) <= 179.12 sqrt(x) for x <= p and
/// 178.37 x^2 p^(-3/2) for x >= p.
const DUAL_SUM_SMALL: f64 = 179.12;
const DUAL_SUM_LARGE: f64 = 178.37;
/// Pointwise dual bound coefficients.
const DUAL_POINT_CUBE: f64 = 29.328;
const DUAL_POINT_QUART: f64 = 10.764;
/// tau(n) <= n^(1.538 log 2 / log log n) for n >= 3.
const TAU_EXPONENT: f64 = 1.538 * std::f64::consts::LN_2;

// sqrt(x) e^x K_nu(x) on x >= 2, Chebyshev series in t = (8/x - 2)/2.
#[allow(clippy::excessive_precision)]
const CHEB_K0_LARGE: [f64; 22] = [
    2.4403030820659554547,
    -0.031448101311964500543,
    0.0015698838857300533749,
    -0.00012849549581627802638,
    0.000013949813718876499364,
    -1.8317555227191194848e-6,
    2.7668136394450150761e-7,
    -4.6604898976879476656e-8,
    8.5740340174142260858e-9,
    -1.6975345093890615156e-9,
    3.5773972814003284467e-10,
    -7.9574892444773970266e-11,
    1.855949114954926528e-11,
    -4.5145978833745185189e-12,
    1.1403405882073426268e-12,
    -2.9800969231481386837e-13,
    8.0328907750673888306e-14,
    -2.2275133267438305145e-14,
    6.3400764762144947727e-15,
    -1.8485933777630631744e-15,
    5.5120559953640532628e-16,
    -1.6782311153289422448e-16,
];
#[allow(clippy::excessive_precision)]
const CHEB_K1_LARGE: [f64; 22] = [
    2.7206261904844426694,
    0.10392373657681723844,
    -0.0028578168596227793868,
    0.00019521551847135163111,
    -0.0000193619797416608296,
    2.4064849478372171171e-6,
    -3.5019606030878125421e-7,
    5.7410841254500492923e-8,
    -1.0345762465678097027e-8,
    2.0150497551970346161e-9,
    -4.1903547593419255838e-10,
    9.2183151876053141141e-11,
    -2.1299678384277909932e-11,
    5.1396396734823428498e-12,
    -1.2891739609498212415e-12,
    3.3484196660522013005e-13,
    -8.9767051820091062824e-14,
    2.4771544242169948255e-14,
    -7.0198370891490792501e-15,
    2.0387031660728717609e-15,
    -6.0570472663644099607e-16,
    1.8380935641906321549e-16,
];

fn clenshaw(cs: &[f64], t: f64) -> f64 {
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for &c in cs.iter().skip(1).rev() {
        let b0 = 2.0 * t * b1 - b2 + c;
        b2 = b1;
        b1 = b0;
    }
    t * b1 - b2 + cs[0] / 2.0
}

/// K_0(x) or K_1(x) with relative error well under 1e-12: the ascending
/// log series for x <= 2, and the exponentially scaled Chebyshev-corrected
/// asymptotic form sqrt(pi/2x) e^{-x} (1 + ...) for x > 2.
pub fn bessel_k(order: u8, x: f64) -> Result<f64> {
    if order > 1 {
        return Err(Error::Argument(format!("Bessel order {order} not supported")));
    }
    if !(x > 0.0) {
        return Err(Error::Argument(format!("K_{order} needs x > 0, got {x}")));
    }
    if x <= 2.0 {
        Ok(bessel_k_series(order, x))
    } else {
        let cs = if order == 0 { &CHEB_K0_LARGE[..] } else { &CHEB_K1_LARGE[..] };
        let t = (8.0 / x - 2.0) / 2.0;
        Ok(clenshaw(cs, t) * (-x).exp() / x.sqrt())
    }
}

fn bessel_k_series(order: u8, x: f64) -> f64 {
    let t = x * x / 4.0;
    let lg = (x / 2.0).ln();
    if order == 0 {
        // K0 = -(ln(x/2) + gamma) I0 + sum_{k>=1} H_k t^k/(k!)^2
        let mut i0 = 1.0;
        let mut extra = 0.0;
        let mut term = 1.0;
        let mut h = 0.0;
        for k in 1..200 {
            term *= t / ((k * k) as f64);
            h += 1.0 / k as f64;
            i0 += term;
            extra += term * h;
            if term < 1e-20 * i0 {
                break;
            }
        }
        -(lg + EULER_GAMMA) * i0 + extra
    } else {
        // K1 = ln(x/2) I1 + 1/x - (x/4) sum (H_k + H_{k+1} - 2 gamma) t^k/(k!(k+1)!)
        let mut i1_sum = 1.0; // sum t^k/(k!(k+1)!)
        let mut corr = 1.0 - 2.0 * EULER_GAMMA; // k = 0 term of the digamma sum
        let mut term = 1.0;
        let mut hk = 0.0;
        let mut hk1 = 1.0;
        for k in 1..200 {
            term *= t / ((k * (k + 1)) as f64);
            hk += 1.0 / k as f64;
            hk1 += 1.0 / (k + 1) as f64;
            i1_sum += term;
            corr += term * (hk + hk1 - 2.0 * EULER_GAMMA);
            if term < 1e-20 * i1_sum {
                break;
            }
        }
        let i1 = x / 2.0 * i1_sum;
        lg * i1 + 1.0 / x - x / 4.0 * corr
    }
}

/// psi(x) = -(6/pi) x K1(4 pi x) + 24 x^2 K0(4 pi x); psi(0) is pinned to
/// 3/(2 pi^2).
pub fn psi(x: f64) -> Result<f64> {
    if x < 0.0 {
        return Err(Error::Argument(format!("psi needs x >= 0, got {x}")));
    }
    if x == 0.0 {
        return Ok(3.0 / (2.0 * std::f64::consts::PI.powi(2)));
    }
    let z = 4.0 * std::f64::consts::PI * x;
    if z > 740.0 {
        return Ok(0.0); // below the f64 underflow horizon
    }
    let k0 = bessel_k(0, z)?;
    let k1 = bessel_k(1, z)?;
    Ok(-6.0 / std::f64::consts::PI * x * k1 + 24.0 * x * x * k0)
}

/// sum_{d >= 1} psi(d x), truncated once the geometric tail bound
/// 6 sqrt(2) (dx)^(3/2) e^(-4 pi dx) / (1 - e^(-4 pi x)) drops below tol.
pub fn psi_sum(x: f64, tol: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Argument(format!("psi_sum needs x > 0, got {x}")));
    }
    if !(tol > 0.0) {
        return Err(Error::Argument("psi_sum needs tol > 0".into()));
    }
    let four_pi = 4.0 * std::f64::consts::PI;
    let denom = 1.0 - (-four_pi * x).exp();
    let mut sum = 0.0;
    let mut d = 1u64;
    loop {
        sum += psi(d as f64 * x)?;
        d += 1;
        let dx = d as f64 * x;
        let tail = 6.0 * 2f64.sqrt() * dx.powf(1.5) * (-four_pi * dx).exp() / denom;
        if tail < tol {
            break;
        }
        if d > 10_000_000 {
            return Err(Error::Resource("psi_sum failed to converge".into()));
        }
    }
    Ok(sum)
}

/// Closed interval [lo, hi] with outward-rounded arithmetic. The widening
/// is a relative 1e-12 slop per operation, ample for inequalities with
/// orders of magnitude of slack.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

const WIDEN_REL: f64 = 1e-12;
const WIDEN_ABS: f64 = 1e-300;

fn down(x: f64) -> f64 {
    x - x.abs() * WIDEN_REL - WIDEN_ABS
}

fn up(x: f64) -> f64 {
    x + x.abs() * WIDEN_REL + WIDEN_ABS
}

impl Interval {
    pub fn point(x: f64) -> Self {
        Interval { lo: down(x), hi: up(x) }
    }

    pub fn exact_zero() -> Self {
        Interval { lo: 0.0, hi: 0.0 }
    }

    pub fn new(lo: f64, hi: f64) -> Self {
        assert!(lo <= hi);
        Interval { lo, hi }
    }

    pub fn from_rational(r: &BigRational) -> Self {
        if r.is_zero() {
            return Interval::exact_zero();
        }
        Interval::point(rational_to_f64(r))
    }

    pub fn add(self, other: Interval) -> Interval {
        Interval { lo: down(self.lo + other.lo), hi: up(self.hi + other.hi) }
    }

    pub fn mul(self, other: Interval) -> Interval {
        let cands = [
            self.lo * other.lo,
            self.lo * other.hi,
            self.hi * other.lo,
            self.hi * other.hi,
        ];
        let lo = cands.iter().cloned().fold(f64::MAX, f64::min);
        let hi = cands.iter().cloned().fold(f64::MIN, f64::max);
        Interval { lo: down(lo), hi: up(hi) }
    }

    pub fn scale(self, c: f64) -> Interval {
        self.mul(Interval::point(c))
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// dim S_2(Gamma_0(p), chi_p) = 2 floor((p-5)/24) for prime p = 1 mod 4.
pub fn cuspform_dim(p: u64) -> Result<u64> {
    if !exactmath::is_prime_u64(p) || p % 4 != 1 {
        return Err(Error::Argument(format!("cusp dimension needs a prime p = 1 mod 4, got {p}")));
    }
    let s = 2 * ((p - 5) / 24);
    assert!((s as f64) <= p as f64 / 12.0, "dimension exceeds p/12");
    Ok(s)
}

/// Lower bound 3p / (208 pi^4 (p+1) log p) on the Petersson norm of a
/// newform of prime level p.
pub fn newform_norm_lower_bound(p: u64) -> Result<f64> {
    if p < 5 {
        return Err(Error::Argument(format!("newform norm bound needs p >= 5, got {p}")));
    }
    let pf = p as f64;
    Ok(3.0 * pf / (208.0 * std::f64::consts::PI.powi(4) * (pf + 1.0) * pf.ln()))
}

/// All constants the explicit inequalities need for one form: the norm
/// bound A on <C,C>, the newform floor B, the cusp dimension s, and the
/// assembled coefficient bound C_Q <= sqrt(A s / B).
#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub p: u64,
    pub min_q_star: u64,
    /// M(25.09 p^(35/6))
    pub m_value: u64,
    pub a: f64,
    pub b: f64,
    pub s: u64,
    pub c_q_bound: f64,
}

impl BoundReport {
    /// `force` waives the p >= 101 hypothesis the constants were derived
    /// under (useful for exploration, not for verification).
    pub fn compute(q: &QuadForm, force: bool) -> Result<BoundReport> {
        let p = q.prime_disc()?;
        if p < 101 && !force {
            return Err(Error::Hypothesis(format!(
                "norm bound constants require p >= 101 (got {p}); pass force to evaluate anyway"
            )));
        }
        let min_q_star = min_nonzero(&q.dual())?
            .to_u64()
            .ok_or_else(|| Error::Resource("min Q* out of range".into()))?;
        let cutoff = floor_scaled_power(&rational(2509, 100), p, 35, 6)?;
        let (m_value, _witness) = exactmath::max_tau(&cutoff)?;
        let pf = p as f64;
        let a = 1.0 / min_q_star as f64 + PETERSSON_TAIL_COEFF * m_value as f64 / pf.powf(0.25);
        let b = newform_norm_lower_bound(p)?;
        let s = cuspform_dim(p)?;
        let c_q_bound = (a * s as f64 / b).sqrt();
        Ok(BoundReport { p, min_q_star, m_value, a, b, s, c_q_bound })
    }

    /// Upper bound on <C, C>: 1/min Q* + 3216.66 M(25.09 p^(35/6)) / p^(1/4).
    pub fn petersson_norm_bound(&self) -> f64 {
        self.a
    }

    /// The coefficient sqrt((1/12)(1 + 1/p)(208 pi^4 / 3) ) that multiplies
    /// sqrt(p log p A); it is at most 23.85 once p >= 101.
    pub fn rep_bound_coefficient(&self) -> f64 {
        let pf = self.p as f64;
        ((1.0 / 12.0) * (1.0 + 1.0 / pf) * 208.0 * std::f64::consts::PI.powi(4) / 3.0).sqrt()
    }

    /// Lower bound on r_Q(n):
    /// (24/p^(3/2))(p-1) phi(n) - 23.85 sqrt(p log p A) tau(n) sqrt(n).
    pub fn representation_lower_bound(&self, n: u64) -> Result<f64> {
        if n == 0 {
            return Err(Error::Argument("representation bound needs n >= 1".into()));
        }
        let bundle = multiplicative_bundle(&BigInt::from(n))?;
        let phi = bundle.phi.to_f64().unwrap();
        let tau = bundle.tau as f64;
        let pf = self.p as f64;
        let main = 24.0 / pf.powf(1.5) * (pf - 1.0) * phi;
        let cusp = REP_BOUND_COEFF * (pf * pf.ln() * self.a).sqrt() * tau * (n as f64).sqrt();
        Ok(main - cusp)
    }

    /// Envelope version of the lower bound, valid for every n >= 3: phi is
    /// replaced by n/(e^gamma loglog n + 3/loglog n) from below and tau by
    /// n^(1.538 log2/loglog n) from above.
    pub fn representation_lower_bound_envelope(&self, n: f64) -> f64 {
        let pf = self.p as f64;
        let ll = n.ln().ln();
        let phi_lower = n / (EULER_GAMMA.exp() * ll + 3.0 / ll);
        let tau_upper = n.powf(TAU_EXPONENT / ll);
        let main = 24.0 / pf.powf(1.5) * (pf - 1.0) * phi_lower;
        let cusp = REP_BOUND_COEFF * (pf * pf.ln() * self.a).sqrt() * tau_upper * n.sqrt();
        main - cusp
    }
}

/// Explicit threshold N0 with r_Q(n) > 0 guaranteed for every n >= N0.
#[derive(Debug, Clone, Serialize)]
pub struct ThresholdReport {
    pub p: u64,
    /// Crossing of the monotone envelope, found by bisection in u = log n.
    #[serde(serialize_with = "crate::report::bigint_as_string")]
    pub analytic: WideInt,
    /// Downward integer refinement along the envelope.
    #[serde(serialize_with = "crate::report::bigint_as_string")]
    pub refined: WideInt,
}

/// Smallest N0 (as an envelope certificate) with the representation lower
/// bound positive for all n >= N0.
pub fn sufficient_threshold(report: &BoundReport) -> Result<ThresholdReport> {
    // g(u) = log of envelope main term minus log of envelope cusp term as a
    // function of u = log n; increasing for u >= 12
    let pf = report.p as f64;
    let c1 = (24.0 / pf.powf(1.5) * (pf - 1.0)).ln();
    let c2 = (REP_BOUND_COEFF * (pf * pf.ln() * report.a).sqrt()).ln();
    let g = |u: f64| -> f64 {
        let lu = u.ln();
        c1 + u - (EULER_GAMMA.exp() * lu + 3.0 / lu).ln() - c2 - u / 2.0 - TAU_EXPONENT * u / lu
    };
    // monotonicity guard on a coarse grid
    let mut prev = g(12.0);
    let mut u = 12.0;
    while u < 400.0 {
        let next = g(u + 0.5);
        if next < prev {
            return Err(Error::Verification("threshold envelope not monotone".into()));
        }
        prev = next;
        u += 0.5;
    }
    let mut hi = 16.0;
    while g(hi) <= 0.0 {
        hi *= 1.5;
        if hi > 400.0 {
            return Err(Error::Resource("threshold search out of range".into()));
        }
    }
    let mut lo = 12.0;
    if g(lo) > 0.0 {
        hi = lo;
    }
    for _ in 0..200 {
        let mid = (lo + hi) / 2.0;
        if g(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let analytic = float_to_bigint_ceil(hi.exp());
    // refine downward by integer bisection against the monotone envelope
    // (limited by f64 granularity once N is astronomically large)
    let mut ilo = BigInt::from(16u32);
    let mut ihi = analytic.clone();
    while &ilo + 1u32 < ihi {
        let mid: BigInt = (&ilo + &ihi) / 2;
        let mf = mid.to_f64().unwrap_or(f64::MAX);
        if report.representation_lower_bound_envelope(mf) > 0.0 {
            ihi = mid;
        } else {
            ilo = mid;
        }
    }
    let refined = ihi;
    Ok(ThresholdReport { p: report.p, analytic, refined })
}

fn float_to_bigint_ceil(x: f64) -> WideInt {
    if x < 1e18 {
        BigInt::from(x.ceil() as u64)
    } else {
        // build from the mantissa to keep all bits
        let bits = x.to_bits();
        let exp = ((bits >> 52) & 0x7ff) as i64 - 1075;
        let mant = (bits & ((1u64 << 52) - 1)) | (1u64 << 52);
        let mut v = BigInt::from(mant);
        if exp >= 0 {
            v <<= exp as u32;
        } else {
            let shifted: BigInt = &v >> ((-exp) as u32);
            let back: BigInt = &shifted << ((-exp) as u32);
            if back != v {
                v = shifted + 1u32;
            } else {
                v = shifted;
            }
        }
        v
    }
}

/// Interval enclosure of <C, C> = (p/(p+1)) sum_n 2^(omega(gcd(n,p)))
/// a_{C*}(n)^2 / n * sum_d psi(d sqrt(n/p)): the head over n <= n_trunc is
/// summed from exact dual data, the tail is bounded by the psi_sum decay
/// together with the quadratic growth bound on dual representation counts.
pub fn petersson_norm_estimate(q: &QuadForm, n_trunc: u64) -> Result<Interval> {
    let p = q.prime_disc()?;
    if n_trunc < 4 * p {
        return Err(Error::Argument(format!(
            "Petersson truncation {n_trunc} below the minimum 4p = {}",
            4 * p
        )));
    }
    let dual = q.dual();
    let r_star = theta::representation_counts(&dual, n_trunc)?;
    let a_e_star = theta::eisenstein_dual_coeffs(q, n_trunc)?;

    let pf = p as f64;
    let front = Interval::point(pf / (pf + 1.0));
    let mut head = Interval::exact_zero();
    for n in 1..=n_trunc {
        let ac = BigRational::from(BigInt::from(r_star[n as usize])) - &a_e_star[n as usize];
        if ac.is_zero() {
            continue;
        }
        let ac2 = Interval::from_rational(&(&ac * &ac));
        let weight = if n % p == 0 { 2.0 } else { 1.0 };
        let ps = psi_sum((n as f64 / pf).sqrt(), 1e-16)?;
        let term = ac2
            .scale(weight / n as f64)
            .mul(Interval::point(ps));
        head = head.add(term);
    }
    head = head.mul(front);

    let tail = petersson_tail_bound(p, n_trunc);
    Ok(Interval::new(head.lo.min(head.lo), up(head.hi + tail)))
}

/// Upper bound on the n > n_trunc remainder of the Petersson sum, over
/// dyadic blocks [2^j N, 2^(j+1) N) anchored at the truncation point,
/// using sum psi(d x) <= 9 x^(3/2) e^(-4 pi x) together with
/// sum_{n<=x} r*(n) <= 178.37 x^2 p^(-3/2) and
/// a_E*(n) <= (4 pi^4 / 3 p^(3/2)) * 1.44 n sqrt(log(n+2)).
fn petersson_tail_bound(p: u64, n_trunc: u64) -> f64 {
    let pf = p as f64;
    let nf = n_trunc as f64;
    let sigma_coeff = 4.0 * std::f64::consts::PI.powi(4) / 3.0 * 1.44 / pf.powf(1.5);
    let mut tail = 0.0f64;
    for j in 0..200 {
        let lo = nf * 2f64.powi(j);
        let hi = nf * 2f64.powi(j + 1);
        let r_sum = DUAL_SUM_LARGE * hi * hi / pf.powf(1.5);
        let sum_r_sq = r_sum * r_sum;
        let ae_max_sq = (sigma_coeff * hi).powi(2) * (hi + 2.0).ln();
        let sum_ae_sq = lo * ae_max_sq;
        // psi_sum(sqrt(n/p)) is decreasing, so the left endpoint dominates
        let x_lo = (lo / pf).sqrt();
        let psi_block = 9.0 * (hi / pf).powf(0.75) * (-4.0 * std::f64::consts::PI * x_lo).exp();
        let block = (pf / (pf + 1.0))
            * (2.0 / lo)
            * (2.0 * sum_r_sq + 2.0 * sum_ae_sq)
            * psi_block;
        tail += block;
        if block < 1e-80 * tail.max(1e-300) || block == 0.0 {
            break;
        }
    }
    tail * 1.0001
}

/// Head of the Eisenstein contribution to the norm, to compare against
/// (337.26 log(p+2) + 206.64)/p.
pub fn eisenstein_part_head(q: &QuadForm, n_trunc: u64) -> Result<(f64, f64)> {
    let p = q.prime_disc()?;
    let a_e_star = theta::eisenstein_dual_coeffs(q, n_trunc)?;
    let pf = p as f64;
    let mut head = 0.0;
    for n in 1..=n_trunc {
        let ae = rational_to_f64(&a_e_star[n as usize]);
        if ae == 0.0 {
            continue;
        }
        let weight = if n % p == 0 { 2.0 } else { 1.0 };
        head += weight * 2.0 * ae * ae / n as f64 * psi_sum((n as f64 / pf).sqrt(), 1e-16)?;
    }
    head *= pf / (pf + 1.0);
    let rhs = (EIS_HEAD_LOG_COEFF * (pf + 2.0).ln() + EIS_HEAD_CONST) / pf;
    Ok((head, rhs))
}

/// Head of the representation-count contribution, to compare against
/// 1/min Q* + 3216.6524 M(25.09 p^(35/6)) / p^(1/4).
pub fn cusp_part_head(q: &QuadForm, n_trunc: u64, report: &BoundReport) -> Result<(f64, f64)> {
    let p = q.prime_disc()?;
    let dual = q.dual();
    let r_star = theta::representation_counts(&dual, n_trunc)?;
    let pf = p as f64;
    let mut head = 0.0;
    for n in 1..=n_trunc {
        let r = r_star[n as usize] as f64;
        if r == 0.0 {
            continue;
        }
        let weight = if n % p == 0 { 2.0 } else { 1.0 };
        head += weight * 2.0 * r * r / n as f64 * psi_sum((n as f64 / pf).sqrt(), 1e-16)?;
    }
    head *= pf / (pf + 1.0);
    let rhs = 1.0 / report.min_q_star as f64
        + CUSP_HEAD_COEFF * report.m_value as f64 / pf.powf(0.25);
    Ok((head, rhs))
}

/// One verified inequality for the report table.
#[derive(Debug, Clone, Serialize)]
pub struct LemmaRow {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub holds: bool,
}

impl LemmaRow {
    fn new(name: &str, lhs: f64, rhs: f64) -> Self {
        LemmaRow { name: name.into(), lhs, rhs, margin: rhs - lhs, holds: lhs <= rhs }
    }
}

/// Grid and pointwise checks of the dual counting bounds on one form.
#[derive(Debug, Clone, Serialize)]
pub struct DualSumReport {
    pub p: u64,
    pub x_max: u64,
    pub rows: Vec<LemmaRow>,
    pub all_hold: bool,
}

/// Verifies, for the dual of a prime-discriminant form:
/// the cumulative polynomial bound, the two split bounds 179.12 sqrt(x)
/// (x <= p) and 178.37 x^2 p^(-3/2) (x >= p), and the pointwise bounds
/// through M(25.09 n p^(29/6)).
pub fn dual_sum_checks(q: &QuadForm, x_max: u64, force: bool) -> Result<DualSumReport> {
    let p = q.prime_disc()?;
    if p < 17 && !force {
        return Err(Error::Hypothesis(format!("dual sum bounds require p >= 17, got {p}")));
    }
    let dual = q.dual();
    let r_star = theta::representation_counts(&dual, x_max)?;
    let dec = jacobi_decompose(q)?;
    let a_star = dec.a_star.as_ref().expect("prime disc has dual coefficients");
    let a1s = rational_to_f64(&a_star[0]);
    let a2s = rational_to_f64(&a_star[1]);
    let a4s = rational_to_f64(&a_star[3]);
    let pf = p as f64;

    // one record table covers every pointwise lookup
    let ceiling = floor_scaled_power(&rational(2509 * x_max as i64, 100), p, 29, 6)?;
    let table = TauRecordTable::new(ceiling)?;

    let mut cum = 0u64;
    let mut worst_poly = f64::MAX;
    let mut worst_small = f64::MAX;
    let mut worst_large = f64::MAX;
    let mut worst_point = f64::MAX;
    let mut worst_indiv = f64::MAX;
    let mut lhs_poly = (0.0, 0.0);
    let mut lhs_small = (0.0, 0.0);
    let mut lhs_large = (0.0, 0.0);
    let mut lhs_point = (0.0, 0.0);
    let mut lhs_indiv = (0.0, 0.0);

    for n in 1..=x_max {
        cum += r_star[n as usize];
        let x = n as f64;
        let lhs = cum as f64;

        let poly = 64.0 * x * x / pf.powf(1.5)
            + 75.52 * x.powf(1.5) / pf
            + 30.49 * x / pf.sqrt()
            + 8.11 * x.sqrt()
            + 1.0;
        if poly - lhs < worst_poly {
            worst_poly = poly - lhs;
            lhs_poly = (lhs, poly);
        }
        if n <= p {
            let rhs = DUAL_SUM_SMALL * x.sqrt();
            if rhs - lhs < worst_small {
                worst_small = rhs - lhs;
                lhs_small = (lhs, rhs);
            }
        }
        if n >= p {
            let rhs = DUAL_SUM_LARGE * x * x / pf.powf(1.5);
            if rhs - lhs < worst_large {
                worst_large = rhs - lhs;
                lhs_large = (lhs, rhs);
            }
        }

        // pointwise bounds
        let m_val = table.max_tau(&floor_scaled_power(
            &rational(2509 * n as i64, 100),
            p,
            29,
            6,
        )?)? as f64;
        let r = r_star[n as usize] as f64;
        let rhs_point = 2.0 * (2.0 * (x / a1s).sqrt() + 1.0) * (2.0 * (x / a2s).sqrt() + 1.0) * m_val;
        if rhs_point - r < worst_point {
            worst_point = rhs_point - r;
            lhs_point = (r, rhs_point);
        }
        let rhs_indiv = (DUAL_POINT_CUBE * x / pf * a4s.powf(1.0 / 3.0)
            + DUAL_POINT_QUART * (x / pf).sqrt() * a4s.powf(0.25)
            + 2.0)
            * m_val;
        if rhs_indiv - r < worst_indiv {
            worst_indiv = rhs_indiv - r;
            lhs_indiv = (r, rhs_indiv);
        }
    }

    let rows = vec![
        LemmaRow::new("dual_cumulative_polynomial", lhs_poly.0, lhs_poly.1),
        LemmaRow::new("dual_cumulative_sqrt_below_p", lhs_small.0, lhs_small.1),
        LemmaRow::new("dual_cumulative_quadratic_above_p", lhs_large.0, lhs_large.1),
        LemmaRow::new("dual_pointwise_record_divisor", lhs_point.0, lhs_point.1),
        LemmaRow::new("dual_pointwise_min_coefficient", lhs_indiv.0, lhs_indiv.1),
    ];
    let all_hold = rows.iter().all(|r| r.holds);
    Ok(DualSumReport { p, x_max, rows, all_hold })
}

/// Excepted values n <= n_max (r_Q(n) = 0), their sum, and context scales.
#[derive(Debug, Clone, Serialize)]
pub struct ExceptionsReport {
    pub n_max: u64,
    pub excepted: Vec<u64>,
    #[serde(serialize_with = "crate::report::bigint_as_string")]
    pub sum: WideInt,
    /// p^(5/2), for scale only; the comparison is asymptotic, not pass/fail.
    pub p_pow_5_2: f64,
    /// p^3 / (min Q*)^2, the other asymptotic scale.
    pub p_cubed_over_min_sq: f64,
}

pub fn exceptions_sum_report(q: &QuadForm, n_max: u64) -> Result<ExceptionsReport> {
    if n_max == 0 {
        return Err(Error::Argument("exceptions report needs n_max >= 1".into()));
    }
    let r = theta::representation_counts(q, n_max)?;
    let excepted: Vec<u64> = (1..=n_max).filter(|&n| r[n as usize] == 0).collect();
    let sum: BigInt = excepted.iter().map(|&n| BigInt::from(n)).sum();
    let p = q.prime_disc().map(|p| p as f64).unwrap_or(f64::NAN);
    let min_star = min_nonzero(&q.dual())?.to_f64().unwrap_or(f64::NAN);
    Ok(ExceptionsReport {
        n_max,
        excepted,
        sum,
        p_pow_5_2: p.powf(2.5),
        p_cubed_over_min_sq: p.powi(3) / (min_star * min_star),
    })
}

/// Every inequality the report table tracks, evaluated on one form.
pub fn lemma_table(q: &QuadForm, n_trunc: u64, force: bool) -> Result<Vec<LemmaRow>> {
    let report = BoundReport::compute(q, force)?;
    let mut rows = Vec::new();

    let (eis_lhs, eis_rhs) = eisenstein_part_head(q, n_trunc)?;
    rows.push(LemmaRow::new("eisenstein_part_head", eis_lhs, eis_rhs));

    let (cusp_lhs, cusp_rhs) = cusp_part_head(q, n_trunc, &report)?;
    rows.push(LemmaRow::new("cusp_part_head", cusp_lhs, cusp_rhs));

    let est = petersson_norm_estimate(q, n_trunc)?;
    rows.push(LemmaRow::new("petersson_norm_vs_bound", est.hi, report.petersson_norm_bound()));

    rows.push(LemmaRow::new(
        "rep_bound_coefficient_cap",
        report.rep_bound_coefficient(),
        REP_BOUND_COEFF,
    ));

    let dual = dual_sum_checks(q, (2 * report.p).min(2000), force)?;
    rows.extend(dual.rows);

    Ok(rows)
}
