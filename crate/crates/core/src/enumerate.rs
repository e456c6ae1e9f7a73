//! Lattice-point enumeration for quaternary forms. Interval bounds per
//! coordinate come from an exact LDL split of the Gram matrix, widened in
//! floating point and re-checked with exact integer arithmetic so rounding
//! can never drop a vector.

use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exactmath::Rational;

/// Relative widening applied to floating-point interval endpoints.
const WIDEN: f64 = 1e-9;

/// Histogram memory cap for representation-count runs (entries).
const HISTOGRAM_CAP: u64 = 1 << 25;

/// Exact unit-upper-triangular split B = M^T D M of a symmetric positive
/// definite rational matrix: D = diag(a), M has ones on the diagonal and
/// m[i][j] above it.
#[derive(Debug, Clone)]
pub(crate) struct Ldl {
    pub a: Vec<Rational>,
    pub m: Vec<Vec<Rational>>,
    pub dims: usize,
}

pub(crate) fn ldl_of_half_gram(gram: &[[i64; 4]; 4], dims: usize) -> Result<Ldl> {
    let mut b: Vec<Vec<Rational>> = (0..dims)
        .map(|i| (0..dims).map(|j| BigRational::new(gram[i][j].into(), 2.into())).collect())
        .collect();
    let mut a = vec![BigRational::zero(); dims];
    let mut m: Vec<Vec<Rational>> = vec![vec![BigRational::zero(); dims]; dims];
    for i in 0..dims {
        let d = b[i][i].clone();
        if d <= BigRational::zero() {
            return Err(Error::Argument("matrix is not positive definite".into()));
        }
        for j in (i + 1)..dims {
            m[i][j] = &b[i][j] / &d;
        }
        for j in (i + 1)..dims {
            for k in j..dims {
                let upd = &b[j][k] - &d * &m[i][j] * &m[i][k];
                b[j][k] = upd.clone();
                b[k][j] = upd;
            }
        }
        a[i] = d;
    }
    Ok(Ldl { a, m, dims })
}

fn to_f64(r: &Rational) -> f64 {
    r.numer().to_f64().unwrap_or(f64::MAX) / r.denom().to_f64().unwrap_or(1.0)
}

/// Q(x) = x^T (gram/2) x, exactly, in integer arithmetic (the Gram has even
/// diagonal so the value is integral).
#[inline]
pub(crate) fn q_value(gram: &[[i64; 4]; 4], x: &[i64; 4]) -> i64 {
    let mut two_q = 0i64;
    for i in 0..4 {
        let mut row = 0i64;
        for j in 0..4 {
            row += gram[i][j] * x[j];
        }
        two_q += row * x[i];
    }
    debug_assert!(two_q % 2 == 0);
    two_q / 2
}

struct Bounds {
    a: [f64; 4],
    m: [[f64; 4]; 4],
}

impl Bounds {
    fn new(ldl: &Ldl) -> Self {
        let mut a = [1.0f64; 4];
        let mut m = [[0.0f64; 4]; 4];
        for i in 0..ldl.dims {
            a[i] = to_f64(&ldl.a[i]);
            for j in (i + 1)..ldl.dims {
                m[i][j] = to_f64(&ldl.m[i][j]);
            }
        }
        Bounds { a, m }
    }

    /// Widened integer range of x_i given the remaining budget and the
    /// already-fixed outer coordinates.
    fn coord_range(&self, i: usize, budget: f64, x: &[i64; 4], dims: usize) -> (i64, i64) {
        let mut center = 0.0;
        for j in (i + 1)..dims {
            center -= self.m[i][j] * x[j] as f64;
        }
        let radius = (budget.max(0.0) / self.a[i]).sqrt();
        let slack = WIDEN * (center.abs() + radius + 1.0);
        let lo = (center - radius - slack).ceil() as i64;
        let hi = (center + radius + slack).floor() as i64;
        (lo, hi)
    }

    /// Budget left after fixing coordinate i (outer coordinates already fixed).
    fn spend(&self, i: usize, budget: f64, x: &[i64; 4], dims: usize) -> f64 {
        let mut inner = x[i] as f64;
        for j in (i + 1)..dims {
            inner += self.m[i][j] * x[j] as f64;
        }
        budget - self.a[i] * inner * inner
    }
}

/// Exact representation counts r[0..=n_max] for Q over the active
/// coordinates (dims = 3 treats the form as ternary, pinning x_4 = 0).
/// The outermost coordinate is sharded across threads; per-shard integer
/// tallies merge by addition, so the result is independent of thread count.
pub(crate) fn histogram(gram: &[[i64; 4]; 4], n_max: u64, dims: usize) -> Result<Vec<u64>> {
    if n_max >= HISTOGRAM_CAP {
        return Err(Error::Resource(format!(
            "representation-count cutoff {n_max} exceeds the in-memory histogram cap {HISTOGRAM_CAP}"
        )));
    }
    let ldl = ldl_of_half_gram(gram, dims)?;
    let bounds = Bounds::new(&ldl);
    let budget = n_max as f64;
    let outer = dims - 1;
    let (lo, hi) = bounds.coord_range(outer, budget, &[0i64; 4], dims);

    let merged = (lo..=hi)
        .into_par_iter()
        .fold(
            || vec![0u64; n_max as usize + 1],
            |mut tally, x_outer| {
                let mut x = [0i64; 4];
                x[outer] = x_outer;
                let rem = bounds.spend(outer, budget, &x, dims);
                if rem >= -WIDEN * (budget.abs() + 1.0) - 1.0 {
                    descend(gram, &bounds, dims, outer - 1, rem, &mut x, n_max, &mut tally);
                }
                tally
            },
        )
        .reduce(
            || vec![0u64; n_max as usize + 1],
            |mut a, b| {
                for (av, bv) in a.iter_mut().zip(b) {
                    *av += bv;
                }
                a
            },
        );
    Ok(merged)
}

fn descend(
    gram: &[[i64; 4]; 4],
    bounds: &Bounds,
    dims: usize,
    level: usize,
    budget: f64,
    x: &mut [i64; 4],
    n_max: u64,
    tally: &mut [u64],
) {
    if level == 0 {
        let (lo, hi) = bounds.coord_range(0, budget, x, dims);
        for x0 in lo..=hi {
            x[0] = x0;
            let q = q_value(gram, x);
            if q >= 0 && (q as u64) <= n_max {
                tally[q as usize] += 1;
            }
        }
        x[0] = 0;
        return;
    }
    let (lo, hi) = bounds.coord_range(level, budget, x, dims);
    for xi in lo..=hi {
        x[level] = xi;
        let rem = bounds.spend(level, budget, x, dims);
        // keep descending even when the float budget dips slightly negative;
        // the exact check at the leaf is authoritative
        if rem >= -WIDEN * (budget.abs() + 1.0) - 1.0 {
            descend(gram, bounds, dims, level - 1, rem, x, n_max, tally);
        }
    }
    x[level] = 0;
}

/// All nonzero vectors with 1 <= Q(x) <= n_max, exact, serial. Intended for
/// short-vector work where n_max is small.
pub(crate) fn short_vectors(gram: &[[i64; 4]; 4], n_max: u64, dims: usize) -> Result<Vec<([i64; 4], u64)>> {
    let ldl = ldl_of_half_gram(gram, dims)?;
    let bounds = Bounds::new(&ldl);
    let mut out = Vec::new();
    let mut x = [0i64; 4];
    collect(gram, &bounds, dims, dims - 1, n_max as f64, &mut x, n_max, &mut out);
    Ok(out)
}

fn collect(
    gram: &[[i64; 4]; 4],
    bounds: &Bounds,
    dims: usize,
    level: usize,
    budget: f64,
    x: &mut [i64; 4],
    n_max: u64,
    out: &mut Vec<([i64; 4], u64)>,
) {
    let (lo, hi) = bounds.coord_range(level, budget, x, dims);
    for xi in lo..=hi {
        x[level] = xi;
        if level == 0 {
            let q = q_value(gram, x);
            if q >= 1 && (q as u64) <= n_max {
                out.push((*x, q as u64));
            }
        } else {
            let rem = bounds.spend(level, budget, x, dims);
            if rem >= -WIDEN * (budget.abs() + 1.0) - 1.0 {
                collect(gram, bounds, dims, level - 1, rem, x, n_max, out);
            }
        }
    }
    x[level] = 0;
}
