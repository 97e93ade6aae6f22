//! Arithmetic modulo `p^w` on `u64` words, and capped-precision p-adic
//! scalars (valuation + unit part).
//!
//! The working exponent `w` is chosen once per run with enough headroom
//! over the target precision `N` that intermediate denominators (from
//! `p^{-n}`, factorials, `log χ(γ_n)`, ...) never push a value below the
//! precision the caller asked for without being noticed.

use crate::{Error, Result};

/// Fixed arithmetic modulus `p^w` with `p^w < 2^62`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ZpCtx {
    pub p: u64,
    pub w: u32,
    pub pw: u64,
}

impl ZpCtx {
    pub fn new(p: u64, w: u32) -> Result<Self> {
        if p < 3 || !is_prime(p) {
            return Err(Error::Invalid(format!("p = {p} must be an odd prime")));
        }
        let mut pw: u64 = 1;
        for _ in 0..w {
            pw = pw
                .checked_mul(p)
                .filter(|&m| m < (1u64 << 62))
                .ok_or_else(|| Error::Invalid(format!("p^w = {p}^{w} exceeds word range")))?;
        }
        Ok(ZpCtx { p, w, pw })
    }

    /// Largest exponent w with p^w < 2^62.
    pub fn max_exponent(p: u64) -> u32 {
        let mut w = 0;
        let mut acc: u64 = 1;
        while let Some(next) = acc.checked_mul(p).filter(|&m| m < (1u64 << 62)) {
            acc = next;
            w += 1;
        }
        w
    }

    #[inline]
    pub fn reduce(&self, a: i64) -> u64 {
        a.rem_euclid(self.pw as i64) as u64
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.pw {
            s - self.pw
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.pw - b
        }
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.pw - a
        }
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        ((a as u128 * b as u128) % self.pw as u128) as u64
    }

    pub fn pow(&self, mut a: u64, mut e: u64) -> u64 {
        let mut r = 1u64 % self.pw;
        while e > 0 {
            if e & 1 == 1 {
                r = self.mul(r, a);
            }
            a = self.mul(a, a);
            e >>= 1;
        }
        r
    }

    /// p-adic valuation of a residue; `w` for 0.
    pub fn val(&self, mut a: u64) -> u32 {
        if a == 0 {
            return self.w;
        }
        let mut v = 0;
        while a % self.p == 0 {
            a /= self.p;
            v += 1;
        }
        v
    }

    /// Inverse of a unit mod p^w.
    pub fn inv(&self, a: u64) -> Result<u64> {
        if a % self.p == 0 {
            return Err(Error::Precision(format!("inverting non-unit {a} mod {}^{}", self.p, self.w)));
        }
        // (Z/p^w)^* has order p^{w-1}(p-1)
        let order = self.pw / self.p * (self.p - 1);
        Ok(self.pow(a, order - 1))
    }

    /// Exact division a / p^k; errors if p^k does not divide a.
    pub fn div_pk(&self, a: u64, k: u32) -> Result<u64> {
        let mut r = a;
        for _ in 0..k {
            if r % self.p != 0 {
                return Err(Error::Precision(format!("{a} not divisible by {}^{}", self.p, k)));
            }
            r /= self.p;
        }
        Ok(r)
    }

    /// The Teichmüller representative congruent to `a` mod p: the unique
    /// (p-1)-st root of unity lifting `a`, or 0.
    pub fn teichmuller(&self, a: u64) -> u64 {
        let mut x = a % self.pw;
        if x % self.p == 0 {
            return 0;
        }
        // x -> x^p converges to the fixed point; w iterations suffice.
        for _ in 0..self.w {
            x = self.pow(x, self.p);
        }
        x
    }

    /// Reduce a residue mod p^k (k <= w).
    #[inline]
    pub fn cap(&self, a: u64, k: u32) -> u64 {
        if k >= self.w {
            a
        } else {
            a % self.p.pow(k)
        }
    }
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// A p-adic scalar: `p^val * unit`, with the unit part known modulo
/// `p^prec` (relative precision). The canonical zero uses `val = i32::MAX`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PadicScalar {
    pub val: i32,
    pub unit: u64,
    pub prec: i32,
}

impl PadicScalar {
    pub const ZERO_VAL: i32 = i32::MAX;

    pub fn zero() -> Self {
        PadicScalar { val: Self::ZERO_VAL, unit: 0, prec: i32::MAX }
    }

    pub fn is_zero(&self) -> bool {
        self.val == Self::ZERO_VAL
    }

    /// Build from an integer residue, declared exact mod p^w.
    pub fn from_residue(zp: &ZpCtx, a: u64) -> Self {
        if a % zp.pw == 0 {
            return Self::zero();
        }
        let v = zp.val(a);
        let unit = zp.div_pk(a, v).expect("valuation divides");
        PadicScalar { val: v as i32, unit, prec: (zp.w - v) as i32 }
    }

    pub fn from_i64(zp: &ZpCtx, a: i64) -> Self {
        Self::from_residue(zp, zp.reduce(a))
    }

    pub fn one() -> Self {
        PadicScalar { val: 0, unit: 1, prec: i32::MAX }
    }

    fn capped(zp: &ZpCtx, val: i32, unit: u64, prec: i32) -> Self {
        if prec <= 0 {
            // nothing is known
            return PadicScalar { val: 0, unit: 0, prec: 0 };
        }
        let prec = prec.min(zp.w as i32);
        let u = zp.cap(unit, prec as u32);
        if u == 0 {
            // indistinguishable from zero at this precision
            return PadicScalar { val: val.saturating_add(prec), unit: 0, prec: 0 };
        }
        PadicScalar { val, unit: u, prec }
    }

    pub fn mul(&self, zp: &ZpCtx, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        Self::capped(zp, self.val + other.val, zp.mul(self.unit, other.unit), self.prec.min(other.prec))
    }

    pub fn inv(&self, zp: &ZpCtx) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::Precision("inverting zero".into()));
        }
        Ok(Self::capped(zp, -self.val, zp.inv(self.unit)?, self.prec))
    }

    pub fn add(&self, zp: &ZpCtx, other: &Self) -> Self {
        if self.is_zero() {
            return *other;
        }
        if other.is_zero() {
            return *self;
        }
        let v = self.val.min(other.val);
        // absolute precisions
        let abs = (self.val.saturating_add(self.prec)).min(other.val.saturating_add(other.prec));
        let a = shift_up(zp, self.unit, (self.val - v) as u32);
        let b = shift_up(zp, other.unit, (other.val - v) as u32);
        let s = zp.add(a, b);
        if s == 0 {
            return PadicScalar { val: abs, unit: 0, prec: 0 };
        }
        let extra = zp.val(s);
        let unit = zp.div_pk(s, extra).expect("valuation divides");
        let val = v + extra as i32;
        Self::capped(zp, val, unit, abs - val)
    }

    pub fn neg(&self, zp: &ZpCtx) -> Self {
        if self.is_zero() {
            return *self;
        }
        PadicScalar { val: self.val, unit: zp.neg(self.unit), prec: self.prec }
    }

    pub fn pow(&self, zp: &ZpCtx, e: u32) -> Self {
        let mut r = Self::one();
        for _ in 0..e {
            r = r.mul(zp, self);
        }
        r
    }

    /// Residue mod p^k of a non-negative-valuation scalar.
    pub fn residue(&self, zp: &ZpCtx, k: u32) -> Result<u64> {
        if self.is_zero() {
            return Ok(0);
        }
        if self.val < 0 {
            return Err(Error::Precision(format!("negative valuation {} has no residue", self.val)));
        }
        if (self.prec as i64) < k as i64 {
            return Err(Error::Precision(format!("scalar known to {} digits, {k} requested", self.prec)));
        }
        let mut r = self.unit % zp.p.pow(k);
        for _ in 0..self.val.min(k as i32) {
            r = zp.mul(r, zp.p) % zp.p.pow(k);
        }
        if self.val >= k as i32 {
            return Ok(0);
        }
        Ok(zp.cap(zp.mul(zp.pow(zp.p, self.val as u64), self.unit), k))
    }
}

#[inline]
fn shift_up(zp: &ZpCtx, a: u64, k: u32) -> u64 {
    zp.mul(a, zp.pow(zp.p, k as u64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modular_basics() {
        let zp = ZpCtx::new(5, 8).unwrap();
        assert_eq!(zp.pw, 390625);
        assert_eq!(zp.mul(zp.pw - 1, zp.pw - 1), 1);
        let a = 12346u64;
        assert_eq!(zp.mul(a, zp.inv(a % zp.pw).unwrap()), 1);
        assert_eq!(zp.val(250), 3);
        assert_eq!(zp.val(0), 8);
    }

    #[test]
    fn teichmuller_values() {
        // a = 1 -> 1, a = p-1 -> -1, multiplicativity
        let zp = ZpCtx::new(5, 3).unwrap();
        assert_eq!(zp.teichmuller(1), 1);
        assert_eq!(zp.teichmuller(4), zp.pw - 1);
        // p=5, N=3: teichmuller(2) = 57 mod 125 (fixed point of x -> x^5 from 2)
        assert_eq!(zp.teichmuller(2), 57);
        for a in 1..5 {
            for b in 1..5 {
                let ab = (a * b) % 5;
                assert_eq!(zp.teichmuller(ab), zp.mul(zp.teichmuller(a), zp.teichmuller(b)));
            }
        }
        // (p-1)-st power is 1
        for a in 1..5u64 {
            assert_eq!(zp.pow(zp.teichmuller(a), 4), 1);
        }
    }

    #[test]
    fn scalar_arithmetic_tracks_valuation() {
        let zp = ZpCtx::new(3, 10).unwrap();
        let a = PadicScalar::from_i64(&zp, 18); // 2 * 3^2
        assert_eq!(a.val, 2);
        assert_eq!(a.unit, 2);
        let b = PadicScalar::from_i64(&zp, -18);
        let s = a.add(&zp, &b);
        assert!(s.is_zero() || s.prec == 0);
        let c = a.mul(&zp, &a); // 4 * 3^4
        assert_eq!(c.val, 4);
        assert_eq!(c.unit, 4);
        let inv = a.inv(&zp).unwrap();
        let one = a.mul(&zp, &inv);
        assert_eq!(one.val, 0);
        assert_eq!(one.unit, 1);
    }
}
