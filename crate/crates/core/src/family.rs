//! The almost-universal family Q_p for primes p = 5 mod 8, its predicted
//! exception set {n < p/8 : n = 4^k(16l + 14)}, and the two ternary forms
//! that drive the verification.

use num_rational::BigRational;
use serde::Serialize;

use crate::enumerate;
use crate::error::{Error, Result};
use crate::exactmath::{is_prime_u64, rational, WideInt};
use crate::qform::QuadForm;
use crate::theta;

/// Q_p = x^2 + y^2 + z^2 + ((p+3)/8) w^2 + xy + xz + xw + yz + yw + zw,
/// for p prime, p = 5 mod 8; its discriminant is p.
#[derive(Debug, Clone)]
pub struct FamilyForm {
    pub p: u64,
    pub form: QuadForm,
}

pub fn family_form(p: u64) -> Result<FamilyForm> {
    if !is_prime_u64(p) || p % 8 != 5 {
        return Err(Error::Argument(format!("family forms need a prime p = 5 mod 8, got {p}")));
    }
    let w_diag = ((p + 3) / 4) as i64;
    let form = QuadForm::from_gram([
        [2, 1, 1, 1],
        [1, 2, 1, 1],
        [1, 1, 2, 1],
        [1, 1, 1, w_diag],
    ])?;
    debug_assert_eq!(form.disc(), &WideInt::from(p));
    Ok(FamilyForm { p, form })
}

/// Exceptions the classification predicts below n_max: all n < p/8 of the
/// shape 4^k (16 l + 14).
pub fn predicted_exceptions(p: u64, n_max: u64) -> Result<Vec<u64>> {
    if !is_prime_u64(p) || p % 8 != 5 {
        return Err(Error::Argument(format!("family forms need a prime p = 5 mod 8, got {p}")));
    }
    let mut out = Vec::new();
    let mut pow4 = 1u64;
    loop {
        let mut l = 0u64;
        loop {
            let n = pow4 * (16 * l + 14);
            // n < p/8 exactly: 8n < p
            if 8 * n >= p || n > n_max {
                break;
            }
            out.push(n);
            l += 1;
        }
        if pow4 * 14 * 8 >= p || pow4 * 14 > n_max {
            break;
        }
        pow4 *= 4;
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// Outcome of comparing enumerated exceptions against the prediction.
#[derive(Debug, Clone, Serialize)]
pub struct ExceptionSet {
    pub p: u64,
    pub n_max: u64,
    pub computed: Vec<u64>,
    pub predicted: Vec<u64>,
    pub matches: bool,
}

/// Enumerates r_{Q_p}(n) up to n_max and compares the zero set with the
/// predicted exceptions.
///
/// ```
/// let set = quatform::family::verify_family(229, 500).unwrap();
/// assert!(set.matches);
/// assert_eq!(set.computed, vec![14]);
/// ```
pub fn verify_family(p: u64, n_max: u64) -> Result<ExceptionSet> {
    let fam = family_form(p)?;
    let r = theta::representation_counts(&fam.form, n_max)?;
    let computed: Vec<u64> = (1..=n_max).filter(|&n| r[n as usize] == 0).collect();
    let predicted = predicted_exceptions(p, n_max)?;
    let matches = computed == predicted;
    Ok(ExceptionSet { p, n_max, computed, predicted, matches })
}

const TERNARY_GRAM: [[i64; 3]; 3] = [[2, 1, 1], [1, 2, 1], [1, 1, 2]];

/// Zero set of x^2 + xy + xz + y^2 + yz + z^2 up to n_max, with the mod-32
/// obstruction classes cross-checked on the way out.
pub fn ternary_exceptions(n_max: u64) -> Result<Vec<u64>> {
    let r = theta::representation_counts_ternary(&TERNARY_GRAM, n_max)?;
    let out: Vec<u64> = (1..=n_max).filter(|&n| r[n as usize] == 0).collect();
    // every excepted class must be 14 or 30 mod 32 after peeling squares of 2
    for &n in &out {
        let mut m = n;
        while m % 4 == 0 {
            m /= 4;
        }
        if m % 32 != 14 && m % 32 != 30 {
            return Err(Error::Verification(format!(
                "ternary exception {n} escapes the mod-32 classes"
            )));
        }
    }
    Ok(out)
}

/// Solution counts of the ternary form mod 32, split into all solutions and
/// primitive ones, for the local obstruction check.
pub fn ternary_mod32_classes() -> ([u64; 32], [u64; 32]) {
    let mut all = [0u64; 32];
    let mut primitive = [0u64; 32];
    let mut gram4 = [[0i64; 4]; 4];
    for i in 0..3 {
        for j in 0..3 {
            gram4[i][j] = TERNARY_GRAM[i][j];
        }
    }
    for x in 0..32i64 {
        for y in 0..32i64 {
            for z in 0..32i64 {
                let v = enumerate::q_value(&gram4, &[x, y, z, 0]).rem_euclid(32) as usize;
                all[v] += 1;
                if x % 2 != 0 || y % 2 != 0 || z % 2 != 0 {
                    primitive[v] += 1;
                }
            }
        }
    }
    (all, primitive)
}

/// Witness for N = X^2 + 2 Y^2 + 6 Z^2 in the normalized shape X = 4z + 1,
/// Y = 3y + z + 1, Z = 2x + y + z + 1, for N = 9 mod 24. All eight sign
/// choices and both congruence branches are searched.
pub fn ternary_construction(n_val: u64) -> Result<(i64, i64, i64)> {
    if n_val % 24 != 9 {
        return Err(Error::Argument(format!("construction needs N = 9 mod 24, got {n_val}")));
    }
    let n = n_val as i64;
    let bound = (n as f64).sqrt() as i64 + 1;
    for x_abs in 0..=bound {
        for &bx in &[1i64, -1] {
            let big_x = x_abs * bx;
            if x_abs == 0 && bx < 0 {
                continue;
            }
            let rem_x = n - big_x * big_x;
            if rem_x < 0 {
                continue;
            }
            let ybound = ((rem_x / 2) as f64).sqrt() as i64 + 1;
            for y_abs in 0..=ybound {
                for &by in &[1i64, -1] {
                    let big_y = y_abs * by;
                    if y_abs == 0 && by < 0 {
                        continue;
                    }
                    let rem = rem_x - 2 * big_y * big_y;
                    if rem < 0 || rem % 6 != 0 {
                        continue;
                    }
                    let z2 = rem / 6;
                    let zr = (z2 as f64).sqrt().round() as i64;
                    let z_abs = if zr * zr == z2 {
                        zr
                    } else if (zr - 1) * (zr - 1) == z2 {
                        zr - 1
                    } else if (zr + 1) * (zr + 1) == z2 {
                        zr + 1
                    } else {
                        continue;
                    };
                    for &bz in &[1i64, -1] {
                        let big_z = z_abs * bz;
                        if z_abs == 0 && bz < 0 {
                            continue;
                        }
                        if let Some(t) = normalize(n, big_x, big_y, big_z) {
                            return Ok(t);
                        }
                    }
                }
            }
        }
    }
    Err(Error::Verification(format!(
        "no normalized representation of {n_val} by X^2 + 2Y^2 + 6Z^2"
    )))
}

fn normalize(n: i64, big_x: i64, big_y: i64, big_z: i64) -> Option<(i64, i64, i64)> {
    if big_x.rem_euclid(4) != 1 {
        return None;
    }
    let z = (big_x - 1) / 4;
    if (big_y - z - 1).rem_euclid(3) != 0 {
        return None;
    }
    let y = (big_y - z - 1) / 3;
    if (big_z - y - z - 1).rem_euclid(2) != 0 {
        return None;
    }
    let x = (big_z - y - z - 1) / 2;
    debug_assert_eq!(
        n,
        (4 * z + 1).pow(2) + 2 * (3 * y + z + 1).pow(2) + 6 * (2 * x + y + z + 1).pow(2)
    );
    Some((x, y, z))
}

/// The rational diagonalization identity of the family form:
/// Q_p = (x + (y+z+w)/2)^2 + (3/4)(y + (z+w)/3)^2 + (2/3)(z + w/4)^2 + (p/8) w^2,
/// checked symbolically through the unreduced split of the Gram matrix.
pub fn family_diagonalization_identity(p: u64) -> Result<bool> {
    let fam = family_form(p)?;
    let ldl = enumerate::ldl_of_half_gram(fam.form.gram(), 4)?;
    let expect_a = [
        rational(1, 1),
        rational(3, 4),
        rational(2, 3),
        BigRational::new((p as i64).into(), 8.into()),
    ];
    let expect_m: [(usize, usize, BigRational); 6] = [
        (0, 1, rational(1, 2)),
        (0, 2, rational(1, 2)),
        (0, 3, rational(1, 2)),
        (1, 2, rational(1, 3)),
        (1, 3, rational(1, 3)),
        (2, 3, rational(1, 4)),
    ];
    let mut ok = ldl.a == expect_a;
    for (i, j, v) in expect_m {
        ok &= ldl.m[i][j] == v;
    }
    Ok(ok)
}

/// Q_p((x, y, z, 1)) as an exact integer, for the expansion identity
/// n = m + (p+3)/8 with 24m + 9 = (4z+1)^2 + 2(3y+z+1)^2 + 6(2x+y+z+1)^2.
pub fn family_value_at_unit_w(p: u64, x: i64, y: i64, z: i64) -> Result<WideInt> {
    let fam = family_form(p)?;
    let v = fam.form.value(&[x, y, z, 1]);
    Ok(WideInt::from(v))
}
