//! Exact solution of dense integer systems by elimination modulo many word
//! sized primes, recombined with Garner's algorithm.
//!
//! For `M x = b` with `M` nonsingular, `det(M) x` is an integer vector whose
//! entries are Cramer determinants. Both are bounded by the product of the
//! row norms of `[M | b]`, so enough primes pin them down exactly.

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rayon::prelude::*;

const TOP: u64 = (1 << 62) - 1;

fn mul(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

fn pow(mut a: u64, mut e: u64, p: u64) -> u64 {
    let mut r = 1u64;
    while e > 0 {
        if e & 1 == 1 {
            r = mul(r, a, p);
        }
        a = mul(a, a, p);
        e >>= 1;
    }
    r
}

fn inv(a: u64, p: u64) -> u64 {
    pow(a, p - 2, p)
}

/// Deterministic Miller-Rabin for 64-bit inputs.
fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for &b in &BASES {
        if n.is_multiple_of(b) {
            return n == b;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'outer: for &b in &BASES {
        let mut x = pow(b, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul(x, x, n);
            if x == n - 1 {
                continue 'outer;
            }
        }
        return false;
    }
    true
}

fn primes_below(mut from: u64, count: usize) -> Vec<u64> {
    let mut out = Vec::with_capacity(count);
    from |= 1;
    while out.len() < count {
        from -= 2;
        if is_prime(from) {
            out.push(from);
        }
    }
    out
}

fn reduce(v: i64, p: u64) -> u64 {
    v.rem_euclid(p as i64) as u64
}

/// `det` and `det * x` modulo `p`, or `None` if `M` is singular there.
fn solve_mod(n: usize, m: &[i64], rhs: &[i64], p: u64) -> Option<(u64, Vec<u64>)> {
    let w = n + 1;
    let mut a = vec![0u64; n * w];
    for i in 0..n {
        for j in 0..n {
            a[i * w + j] = reduce(m[i * n + j], p);
        }
        a[i * w + n] = reduce(rhs[i], p);
    }
    let mut det = 1u64;
    for k in 0..n {
        let piv = (k..n).find(|&i| a[i * w + k] != 0)?;
        if piv != k {
            for j in 0..w {
                a.swap(k * w + j, piv * w + j);
            }
            det = (p - det) % p;
        }
        let akk = a[k * w + k];
        det = mul(det, akk, p);
        let ik = inv(akk, p);
        for j in k..w {
            a[k * w + j] = mul(a[k * w + j], ik, p);
        }
        let (head, tail) = a.split_at_mut((k + 1) * w);
        let pivot_row = &head[k * w..];
        tail.chunks_mut(w).for_each(|row| {
            let f = row[k];
            if f != 0 {
                for j in k..w {
                    let s = mul(f, pivot_row[j], p);
                    row[j] = if row[j] >= s { row[j] - s } else { row[j] + p - s };
                }
            }
        });
    }
    let mut x = vec![0u64; n];
    for i in (0..n).rev() {
        let mut s = a[i * w + n];
        for j in i + 1..n {
            let t = mul(a[i * w + j], x[j], p);
            s = if s >= t { s - t } else { s + p - t };
        }
        x[i] = s;
    }
    Some((det, x.iter().map(|&v| mul(v, det, p)).collect()))
}

/// Bits needed for a symmetric residue range containing every Cramer
/// determinant of `[M | b]`.
fn bound_bits(n: usize, m: &[i64], rhs: &[i64]) -> f64 {
    (0..n)
        .map(|i| {
            let sq: f64 = m[i * n..(i + 1) * n].iter().map(|&v| (v as f64).powi(2)).sum::<f64>() + (rhs[i] as f64).powi(2);
            0.5 * sq.max(1.0).log2()
        })
        .sum::<f64>()
        + 2.0
}

/// Solves `M x = b` exactly, returning `(det M, det M * x)`; `None` if `M`
/// is singular.
pub(crate) fn solve_integer_system(n: usize, m: &[i64], rhs: &[i64]) -> Option<(BigInt, Vec<BigInt>)> {
    if n == 0 {
        return Some((BigInt::one(), Vec::new()));
    }
    let need = bound_bits(n, m, rhs);
    let mut residues: Vec<(u64, u64, Vec<u64>)> = Vec::new();
    let mut bits = 0f64;
    let mut next = TOP;
    let mut failures = 0usize;
    while bits < need {
        let want = ((need - bits) / 61.0).ceil() as usize + 1;
        let primes = primes_below(next, want);
        next = *primes.last().unwrap();
        let solved: Vec<Option<(u64, Vec<u64>)>> = primes.par_iter().map(|&p| solve_mod(n, m, rhs, p)).collect();
        for (p, s) in primes.into_iter().zip(solved) {
            match s {
                Some((det, y)) => {
                    bits += (p as f64).log2();
                    residues.push((p, det, y));
                }
                None => failures += 1,
            }
        }
        // a nonsingular matrix is singular modulo only a few large primes
        if failures > 64 && residues.is_empty() {
            return None;
        }
    }
    let primes: Vec<u64> = residues.iter().map(|r| r.0).collect();
    let det = crt(&primes, &residues.iter().map(|r| r.1).collect::<Vec<_>>());
    if det.is_zero() {
        return None;
    }
    let ys: Vec<BigInt> = (0..n)
        .into_par_iter()
        .map(|i| crt(&primes, &residues.iter().map(|r| r.2[i]).collect::<Vec<_>>()))
        .collect();
    Some((det, ys))
}

/// Garner's algorithm, result in the symmetric range.
fn crt(primes: &[u64], res: &[u64]) -> BigInt {
    let k = primes.len();
    let mut c = vec![0u64; k];
    for j in 0..k {
        let p = primes[j];
        let mut t = res[j];
        for i in 0..j {
            let diff = (t + p - c[i] % p) % p;
            t = mul(diff, inv(primes[i] % p, p), p);
        }
        c[j] = t;
    }
    let mut v = BigInt::zero();
    for j in (0..k).rev() {
        v = v * BigInt::from(primes[j]) + BigInt::from(c[j]);
    }
    let modulus: BigInt = primes.iter().fold(BigInt::one(), |acc, &p| acc * BigInt::from(p));
    if &v * 2 > modulus {
        v -= modulus;
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_system() {
        // [[2, 1], [1, 3]] x = [3, 5] -> x = (4/5, 7/5), det 5
        let (det, y) = solve_integer_system(2, &[2, 1, 1, 3], &[3, 5]).unwrap();
        assert_eq!(det, BigInt::from(5));
        assert_eq!(y, vec![BigInt::from(4), BigInt::from(7)]);
    }

    #[test]
    fn negative_and_singular() {
        let (det, y) = solve_integer_system(2, &[0, -1, 1, 0], &[-7, 2]).unwrap();
        assert_eq!(det, BigInt::from(1));
        assert_eq!(y, vec![BigInt::from(2), BigInt::from(7)]);
        assert!(solve_integer_system(2, &[1, 2, 2, 4], &[1, 1]).is_none());
    }

    #[test]
    fn primes_are_prime() {
        assert!(is_prime(1_000_000_007));
        assert!(!is_prime(1_000_000_007 * 3));
        assert_eq!(primes_below(20, 3), vec![19, 17, 13]);
    }
}
