//! Small integer helpers shared by the number-theoretic modules.

pub fn is_prime(n: i64) -> bool {
    if n < 2 {
        return false;
    }
    if n < 4 {
        return true;
    }
    if n % 2 == 0 {
        return false;
    }
    let mut d = 3;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// Primes strictly below `bound`.
pub fn primes_below(bound: i64) -> Vec<i64> {
    (2..bound.max(2)).filter(|&n| is_prime(n)).collect()
}

/// Distinct prime divisors of `|n|`, ascending.
pub fn prime_divisors(n: i64) -> Vec<i64> {
    let mut n = n.unsigned_abs() as i64;
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            while n % d == 0 {
                n /= d;
            }
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push(n);
    }
    out
}

pub fn is_squarefree(n: i64) -> bool {
    if n == 0 {
        return false;
    }
    let mut n = n.unsigned_abs() as i64;
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            n /= d;
            if n % d == 0 {
                return false;
            }
        }
        d += 1;
    }
    true
}

/// Squarefree kernel keeping the sign: `n = kernel * square`.
pub fn squarefree_part(n: i64) -> i64 {
    assert!(n != 0, "squarefree part of zero");
    let sign = n.signum();
    let mut m = n.unsigned_abs() as i64;
    let mut out = 1;
    let mut d = 2;
    while d * d <= m {
        let mut e = 0;
        while m % d == 0 {
            m /= d;
            e += 1;
        }
        if e % 2 == 1 {
            out *= d;
        }
        d += 1;
    }
    sign * out * m
}

/// p-adic valuation of a nonzero integer.
pub fn valuation(n: i64, p: i64) -> u32 {
    assert!(n != 0);
    let mut n = n;
    let mut v = 0;
    while n % p == 0 {
        n /= p;
        v += 1;
    }
    v
}

pub fn mod_pow(base: i64, mut exp: u64, modulus: i64) -> i64 {
    let m = modulus as i128;
    let mut b = (base as i128).rem_euclid(m);
    let mut acc: i128 = 1 % m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * b % m;
        }
        b = b * b % m;
        exp >>= 1;
    }
    acc as i64
}

/// Integer square root (floor) of a nonnegative integer.
pub fn isqrt(n: i64) -> i64 {
    assert!(n >= 0);
    let mut r = (n as f64).sqrt() as i64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

pub fn is_power_of_two(n: u64) -> bool {
    n != 0 && n & (n - 1) == 0
}
