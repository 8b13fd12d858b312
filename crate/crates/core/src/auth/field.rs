//! Arithmetic modulo a prime that fits in 64 bits.

/// The Mersenne prime 2^61 − 1.
pub const M61: u64 = (1 << 61) - 1;

#[inline]
fn reduce_m61(x: u128) -> u64 {
    // x < 2^122, so two folds suffice.
    let folded = (x & M61 as u128) + (x >> 61);
    let folded = ((folded & M61 as u128) + (folded >> 61)) as u64;
    if folded >= M61 {
        folded - M61
    } else {
        folded
    }
}

/// `a * b mod p` with the full 128-bit product.
#[inline]
pub fn mul_mod(a: u64, b: u64, p: u64) -> u64 {
    let prod = a as u128 * b as u128;
    if p == M61 {
        reduce_m61(prod)
    } else {
        (prod % p as u128) as u64
    }
}

#[inline]
pub fn add_mod(a: u64, b: u64, p: u64) -> u64 {
    let s = a as u128 + b as u128;
    (s % p as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, p: u64) -> u64 {
    let mut acc = 1 % p;
    base %= p;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, p);
        }
        base = mul_mod(base, base, p);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin; these witnesses cover every 64-bit input.
pub fn is_prime(n: u64) -> bool {
    const WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &w in &WITNESSES {
        if n % w == 0 {
            return n == w;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &a in &WITNESSES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}
