//! Carry-less arithmetic on packed GF(2) polynomials.
//!
//! A polynomial is a little-endian word slice: bit `i` of word `w` is the
//! coefficient of `z^(64w + i)`.

const BASE_WORDS: usize = 24;

/// 64×64 → 128-bit carry-less product.
pub(crate) fn clmul(a: u64, b: u64) -> u128 {
    #[cfg(target_arch = "x86_64")]
    {
        if std::arch::is_x86_feature_detected!("pclmulqdq") {
            // SAFETY: feature checked at runtime just above.
            return unsafe { hw::clmul(a, b) };
        }
    }
    soft_clmul(a, b)
}

fn soft_clmul(a: u64, b: u64) -> u128 {
    let mut table = [0u128; 16];
    for k in 1..16 {
        table[k] = if k & 1 == 1 { table[k - 1] ^ a as u128 } else { table[k >> 1] << 1 };
    }
    let mut r = 0u128;
    for nib in (0..16).rev() {
        r = (r << 4) ^ table[((b >> (4 * nib)) & 0xf) as usize];
    }
    r
}

#[cfg(target_arch = "x86_64")]
mod hw {
    use std::arch::x86_64::*;

    #[target_feature(enable = "pclmulqdq,sse2")]
    pub(super) unsafe fn clmul(a: u64, b: u64) -> u128 {
        let p = _mm_clmulepi64_si128(_mm_set_epi64x(0, a as i64), _mm_set_epi64x(0, b as i64), 0x00);
        let lo = _mm_cvtsi128_si64(p) as u64;
        let hi = _mm_extract_epi64::<1>(p) as u64;
        ((hi as u128) << 64) | lo as u128
    }

    #[target_feature(enable = "pclmulqdq,sse2,sse4.1")]
    pub(super) unsafe fn schoolbook(a: &[u64], b: &[u64], out: &mut [u64]) {
        for (i, &x) in a.iter().enumerate() {
            if x == 0 {
                continue;
            }
            let xv = _mm_set_epi64x(0, x as i64);
            for (j, &y) in b.iter().enumerate() {
                let p = _mm_clmulepi64_si128(xv, _mm_set_epi64x(0, y as i64), 0x00);
                out[i + j] ^= _mm_cvtsi128_si64(p) as u64;
                out[i + j + 1] ^= _mm_extract_epi64::<1>(p) as u64;
            }
        }
    }
}

fn schoolbook(a: &[u64], b: &[u64], out: &mut [u64]) {
    #[cfg(target_arch = "x86_64")]
    {
        if std::arch::is_x86_feature_detected!("pclmulqdq") && std::arch::is_x86_feature_detected!("sse4.1") {
            // SAFETY: features checked at runtime just above.
            unsafe { hw::schoolbook(a, b, out) };
            return;
        }
    }
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            let p = soft_clmul(x, y);
            out[i + j] ^= p as u64;
            out[i + j + 1] ^= (p >> 64) as u64;
        }
    }
}

/// Product of two polynomials; the result has `a.len() + b.len()` words.
pub(crate) fn poly_mul(a: &[u64], b: &[u64]) -> Vec<u64> {
    let n = a.len().max(b.len());
    let mut out = vec![0u64; 2 * n];
    if n > 0 {
        let mut pa = a.to_vec();
        pa.resize(n, 0);
        let mut pb = b.to_vec();
        pb.resize(n, 0);
        karatsuba(&pa, &pb, &mut out);
    }
    out.truncate(a.len() + b.len());
    out
}

/// `out` (len 2n, zeroed) ^= a·b for equal-length `a`, `b`.
fn karatsuba(a: &[u64], b: &[u64], out: &mut [u64]) {
    let n = a.len();
    if n <= BASE_WORDS {
        schoolbook(a, b, out);
        return;
    }
    let m = n / 2;
    let h = n - m;
    let (a0, a1) = a.split_at(m);
    let (b0, b1) = b.split_at(m);

    let mut z0 = vec![0u64; 2 * m];
    karatsuba(a0, b0, &mut z0);
    let mut z2 = vec![0u64; 2 * h];
    karatsuba(a1, b1, &mut z2);

    let mut sa = a1.to_vec();
    let mut sb = b1.to_vec();
    for i in 0..m {
        sa[i] ^= a0[i];
        sb[i] ^= b0[i];
    }
    let mut z1 = vec![0u64; 2 * h];
    karatsuba(&sa, &sb, &mut z1);
    for (i, &w) in z0.iter().enumerate() {
        z1[i] ^= w;
    }
    for (i, &w) in z2.iter().enumerate() {
        z1[i] ^= w;
    }

    for (i, &w) in z0.iter().enumerate() {
        out[i] ^= w;
    }
    for (i, &w) in z1.iter().enumerate() {
        out[m + i] ^= w;
    }
    for (i, &w) in z2.iter().enumerate() {
        out[2 * m + i] ^= w;
    }
}

/// Multiplication in GF(2^64) modulo `x^64 + x^4 + x^3 + x + 1`.
pub(crate) fn gf64_mul(a: u64, b: u64) -> u64 {
    let p = clmul(a, b);
    let lo = p as u64;
    let hi = (p >> 64) as u64;
    let spill = (hi >> 63) ^ (hi >> 61) ^ (hi >> 60);
    let r = lo ^ hi ^ (hi << 1) ^ (hi << 3) ^ (hi << 4);
    r ^ spill ^ (spill << 1) ^ (spill << 3) ^ (spill << 4)
}
