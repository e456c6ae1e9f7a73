//! Shared test utilities: the slow high-precision Bessel oracle and the
//! exhaustive local counting oracle, both independent of the library's
//! production code paths.

#![allow(dead_code)]

pub mod bessel_oracle;

use num_bigint::BigInt;
use num_rational::BigRational;
use quatform::qform::QuadForm;
use rand::rngs::StdRng;
use rand::Rng;

pub fn family_gram(p: u64) -> [[i64; 4]; 4] {
    let w = ((p + 3) / 4) as i64;
    [[2, 1, 1, 1], [1, 2, 1, 1], [1, 1, 2, 1], [1, 1, 1, w]]
}

pub fn family(p: u64) -> QuadForm {
    QuadForm::from_gram(family_gram(p)).unwrap()
}

/// Random unimodular matrix: a short product of elementary shears.
pub fn random_unimodular(rng: &mut StdRng, shears: usize) -> [[i64; 4]; 4] {
    let mut u = [[0i64; 4]; 4];
    for i in 0..4 {
        u[i][i] = 1;
    }
    for _ in 0..shears {
        let i = rng.gen_range(0..4);
        let mut j = rng.gen_range(0..4);
        while j == i {
            j = rng.gen_range(0..4);
        }
        let t: i64 = [-2i64, -1, 1, 2][rng.gen_range(0..4)];
        for c in 0..4 {
            u[i][c] += t * u[j][c];
        }
    }
    u
}

/// Primes p = 5 mod 8 up to a cap.
pub fn family_primes(cap: u64) -> Vec<u64> {
    (0..)
        .map(|k| 5 + 8 * k)
        .take_while(|&p| p <= cap)
        .filter(|&p| quatform::exactmath::is_prime_u64(p))
        .collect()
}

/// Exhaustive solution counts of Q over (Z/m)^4 straight from the Gram
/// matrix; the oracle for everything the localdens module computes.
pub fn exhaustive_counts_mod(q: &QuadForm, m: u64) -> Vec<u64> {
    let mut counts = vec![0u64; m as usize];
    let mi = m as i64;
    let g = q.gram();
    for x0 in 0..mi {
        for x1 in 0..mi {
            for x2 in 0..mi {
                for x3 in 0..mi {
                    let mut two_q: i64 = 0;
                    let x = [x0, x1, x2, x3];
                    for i in 0..4 {
                        let mut row = 0i64;
                        for j in 0..4 {
                            row += g[i][j] * x[j];
                        }
                        two_q += row * x[i];
                    }
                    counts[((two_q / 2).rem_euclid(mi)) as usize] += 1;
                }
            }
        }
    }
    counts
}

/// Exhaustive representation counts over an exact coordinate box derived
/// from (B^{-1})_{ii}: |x_i|^2 <= (B^{-1})_{ii} * n_max for Q(x) <= n_max.
pub fn exhaustive_representation_counts(q: &QuadForm, n_max: u64) -> Vec<u64> {
    // exact inverse of B = A/2 via Gauss-Jordan in rationals
    let g = q.gram();
    let mut aug: Vec<Vec<BigRational>> = (0..4)
        .map(|i| {
            (0..4)
                .map(|j| BigRational::new(g[i][j].into(), 2.into()))
                .chain((0..4).map(|j| {
                    if i == j {
                        BigRational::from(BigInt::from(1))
                    } else {
                        BigRational::from(BigInt::from(0))
                    }
                }))
                .collect()
        })
        .collect();
    for i in 0..4 {
        let piv = (i..4).find(|&r| !num_traits::Zero::is_zero(&aug[r][i])).unwrap();
        aug.swap(i, piv);
        let d = aug[i][i].clone();
        for c in 0..8 {
            let v = &aug[i][c] / &d;
            aug[i][c] = v;
        }
        for r in 0..4 {
            if r != i && !num_traits::Zero::is_zero(&aug[r][i]) {
                let f = aug[r][i].clone();
                for c in 0..8 {
                    let v = &aug[r][c] - &f * &aug[i][c];
                    aug[r][c] = v;
                }
            }
        }
    }
    let mut bounds = [0i64; 4];
    for i in 0..4 {
        let bii = &aug[i][4 + i];
        let cap = bii * BigRational::from(BigInt::from(n_max));
        let capf = num_traits::ToPrimitive::to_f64(&cap.numer().clone()).unwrap()
            / num_traits::ToPrimitive::to_f64(&cap.denom().clone()).unwrap();
        bounds[i] = capf.sqrt().floor() as i64 + 1;
    }
    let mut out = vec![0u64; n_max as usize + 1];
    for x0 in -bounds[0]..=bounds[0] {
        for x1 in -bounds[1]..=bounds[1] {
            for x2 in -bounds[2]..=bounds[2] {
                for x3 in -bounds[3]..=bounds[3] {
                    let v = q.value(&[x0, x1, x2, x3]);
                    if v >= 0 && (v as u64) <= n_max {
                        out[v as usize] += 1;
                    }
                }
            }
        }
    }
    out
}
