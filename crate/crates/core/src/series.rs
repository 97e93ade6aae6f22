//! Truncated Laurent series over O_K carrying the operator package of the
//! cyclotomic theory: the Frobenius substitution `φ(X) = (1+X)^p - 1`, its
//! left inverse `ψ`, the differential `∂ = (1+X) d/dX` with its inverse on
//! the `ψ = 0` part, the Γ-action `X ↦ (1+X)^a - 1`, residues, and
//! evaluation at `ζ_{p^n} - 1`.
//!
//! A series is stored as `p^{-shift} * (integral coefficient block)` with
//! an absolute p-adic precision `prec` and an X-window: coefficients are
//! known for degrees `lo .. lo+len` and zero below `lo`. All operations
//! propagate both precisions; nothing is rounded silently.

use crate::unram::{OkCtx, OkElem};
use crate::zp::ZpCtx;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Series {
    pub lo: i64,
    pub c: Vec<OkElem>,
    pub shift: i32,
    pub prec: i32,
}

/// A K-valued scalar `p^{-shift} * c`, known mod `p^prec`.
#[derive(Debug, Clone)]
pub struct ScaledOk {
    pub c: OkElem,
    pub shift: i32,
    pub prec: i32,
}

impl ScaledOk {
    pub fn zero(ok: &OkCtx) -> Self {
        ScaledOk { c: ok.zero(), shift: 0, prec: ok.zp.w as i32 }
    }

    pub fn from_ok(ok: &OkCtx, c: OkElem) -> Self {
        ScaledOk { c, shift: 0, prec: ok.zp.w as i32 }
    }

    /// semantic valuation, floored at what the precision can certify
    pub fn val(&self, ok: &OkCtx) -> i32 {
        let sv = ok.val(&self.c) as i32;
        sv.min(self.prec + self.shift) - self.shift
    }

    pub fn is_zero_mod(&self, ok: &OkCtx, n: i32) -> bool {
        self.val(ok) >= n.min(self.prec)
    }

    pub fn mul(&self, ok: &OkCtx, other: &Self) -> Self {
        // error(xy) = x e2 + y e1 + e1 e2: bound via the actual valuations
        let va = self.val(ok);
        let vb = other.val(ok);
        let shift = self.shift + other.shift;
        ScaledOk {
            c: ok.mul(&self.c, &other.c),
            shift,
            prec: (va + other.prec).min(vb + self.prec).min(ok.zp.w as i32 - shift.max(0)),
        }
    }

    pub fn add(&self, ok: &OkCtx, other: &Self) -> Self {
        let s = self.shift.max(other.shift);
        let a = ok.mul_pk(&self.c, (s - self.shift) as u32);
        let b = ok.mul_pk(&other.c, (s - other.shift) as u32);
        ScaledOk { c: ok.add(&a, &b), shift: s, prec: self.prec.min(other.prec) }
    }

    pub fn sub(&self, ok: &OkCtx, other: &Self) -> Self {
        let neg = ScaledOk { c: ok.neg(&other.c), shift: other.shift, prec: other.prec };
        self.add(ok, &neg)
    }

    pub fn scal_int(&self, ok: &OkCtx, s: i64) -> Self {
        ScaledOk { c: ok.scal(ok.zp.reduce(s), &self.c), shift: self.shift, prec: self.prec }
    }

    /// divide by p^k (tracked as extra shift)
    pub fn div_pk(&self, k: i32) -> Self {
        ScaledOk { c: self.c.clone(), shift: self.shift + k, prec: self.prec - k }
    }

    /// reduce the scale so the stored part is not uniformly divisible by p
    pub fn normalize(&self, ok: &OkCtx) -> Self {
        if self.shift <= 0 {
            return self.clone();
        }
        let v = ok.val(&self.c).min(self.shift as u32);
        if v == 0 {
            return self.clone();
        }
        ScaledOk { c: ok.div_pk(&self.c, v).unwrap(), shift: self.shift - v as i32, prec: self.prec }
    }

    pub fn inv(&self, ok: &OkCtx) -> Result<Self> {
        let v = ok.val(&self.c);
        if v >= self.prec.max(0) as u32 + self.shift.max(0) as u32 && v >= ok.zp.w {
            return Err(Error::Precision("inverting zero scalar".into()));
        }
        let u = ok.div_pk(&self.c, v)?;
        let ui = ok.inv(&u)?;
        // semantic = p^{v - shift} u: inverse = p^{shift - v} u^{-1}
        Ok(ScaledOk { c: ui, shift: v as i32 - self.shift, prec: self.prec - 2 * (v as i32 - self.shift) })
    }

    pub fn trace(&self, ok: &OkCtx) -> crate::zp::PadicScalar {
        let t = ok.trace(&self.c);
        let mut s = crate::zp::PadicScalar::from_residue(&ok.zp, t);
        if !s.is_zero() {
            s.val -= self.shift;
            // absolute semantic precision is prec: relative = prec - val
            s.prec = self.prec - s.val;
            if s.prec <= 0 {
                return crate::zp::PadicScalar { val: self.prec, unit: 0, prec: 0 };
            }
        }
        s
    }
}

impl Series {
    pub fn xprec(&self) -> i64 {
        self.lo + self.c.len() as i64
    }

    pub fn zero(ok: &OkCtx, xprec: i64) -> Self {
        let lo = xprec.min(0);
        Series { lo, c: vec![ok.zero(); (xprec - lo) as usize], shift: 0, prec: ok.zp.w as i32 }
    }

    pub fn from_coeffs(ok: &OkCtx, lo: i64, c: Vec<OkElem>) -> Self {
        Series { lo, c, shift: 0, prec: ok.zp.w as i32 }
    }

    pub fn monomial(ok: &OkCtx, deg: i64, coeff: OkElem, xprec: i64) -> Self {
        let mut s = Series { lo: deg, c: vec![ok.zero(); (xprec - deg).max(1) as usize], shift: 0, prec: ok.zp.w as i32 };
        s.c[0] = coeff;
        s
    }

    pub fn one(ok: &OkCtx, xprec: i64) -> Self {
        Self::monomial(ok, 0, ok.one(), xprec)
    }

    pub fn coeff(&self, ok: &OkCtx, d: i64) -> OkElem {
        if d < self.lo || d >= self.xprec() {
            ok.zero()
        } else {
            self.c[(d - self.lo) as usize].clone()
        }
    }

    /// semantic coefficient as a scaled scalar
    pub fn coeff_scaled(&self, ok: &OkCtx, d: i64) -> ScaledOk {
        ScaledOk { c: self.coeff(ok, d), shift: self.shift, prec: self.prec }
    }

    pub fn is_zero(&self, ok: &OkCtx) -> bool {
        self.c.iter().all(|x| ok.is_zero(x))
    }

    /// drop exact-zero coefficients below degree 0 (shrink the pole)
    pub fn trim(mut self, ok: &OkCtx) -> Self {
        let mut k = 0;
        while k < self.c.len() && self.lo + (k as i64) < 0 && ok.is_zero(&self.c[k]) {
            k += 1;
        }
        if k > 0 {
            self.c.drain(..k);
            self.lo += k as i64;
        }
        self
    }

    /// reduce the stored scale by the common p-power of the coefficients
    pub fn normalize(mut self, ok: &OkCtx) -> Self {
        if self.shift <= 0 {
            return self;
        }
        let v = self
            .c
            .iter()
            .map(|x| ok.val(x))
            .min()
            .unwrap_or(0)
            .min(self.shift as u32);
        if v > 0 {
            for x in &mut self.c {
                *x = ok.div_pk(x, v).unwrap();
            }
            self.shift -= v as i32;
        }
        self
    }

    pub fn truncate_x(mut self, xprec: i64) -> Self {
        if xprec < self.xprec() {
            let keep = (xprec - self.lo).max(0) as usize;
            self.c.truncate(keep);
            if xprec < self.lo {
                self.lo = xprec;
            }
        }
        self
    }

    /// extend the stored window with zeros up to `xprec` (declares the tail
    /// known-zero; use only for constructions, not results of truncations)
    pub fn extend_zero(mut self, ok: &OkCtx, xprec: i64) -> Self {
        while self.xprec() < xprec {
            self.c.push(ok.zero());
        }
        self
    }

    pub fn pole_order(&self, ok: &OkCtx) -> i64 {
        for (i, x) in self.c.iter().enumerate() {
            let d = self.lo + i as i64;
            if d >= 0 {
                return 0;
            }
            if !ok.is_zero(x) {
                return -d;
            }
        }
        0
    }
}

impl Default for Series {
    fn default() -> Self {
        Series { lo: 0, c: vec![], shift: 0, prec: i32::MAX }
    }
}

/// Precomputed substitution: rows give the image of X^d for d in lo_in..hi_in.
pub struct SubstTable {
    pub lo_in: i64,
    pub rows: Vec<Series>,
}

/// Context for series arithmetic: the window, pole capacity, and the
/// standard elements q = φ(X)/X, q^{-1}, log(1+X)/X, X/log(1+X).
pub struct SeriesCtx<'a> {
    pub ok: &'a OkCtx,
    /// default window for positive series
    pub m: usize,
    /// maximal representable pole order
    pub pole_cap: usize,
    pub q: Series,
    pub q_inv: Series,
    pub t_over_x_small: Series,
    pub x_over_t_small: Series,
    /// small window used for t-pole resolutions
    pub j_window: i64,
}

impl<'a> SeriesCtx<'a> {
    pub fn new(ok: &'a OkCtx, m: usize, j_max: usize) -> Self {
        let zp = &ok.zp;
        let p = zp.p;
        // q = p + binom(p,2) X + ... + X^{p-1}
        let mut qc = Vec::with_capacity(p as usize);
        let mut binom_row = vec![0u64; p as usize + 1];
        binom_row[0] = 1;
        for _ in 0..p {
            for j in (1..=p as usize).rev() {
                binom_row[j] = zp.add(binom_row[j], binom_row[j - 1]);
            }
        }
        for i in 1..=p as usize {
            qc.push(ok.from_u64(binom_row[i]));
        }
        let q = Series::from_coeffs(ok, 0, qc);
        let pole_cap = (p as usize - 1) * (zp.w as usize + 1) + j_max + 8;
        // q^{-1} = X^{1-p} * sum_j (-p s(X) X^{1-p})^j, s = (q - X^{p-1})/p
        let mut s_poly = vec![ok.zero(); p as usize - 1];
        for i in 0..p as usize - 1 {
            s_poly[i] = ok.div_pk(&q.c[i], 1).unwrap();
        }
        let window = m as i64 + pole_cap as i64 + 2;
        let mut q_inv = Series::from_coeffs(ok, -(pole_cap as i64), vec![ok.zero(); pole_cap + window as usize]);
        {
            let s_ser = Series::from_coeffs(ok, 0, s_poly);
            let mut sj = Series::one(ok, window + pole_cap as i64);
            for j in 0..zp.w as i64 {
                let deg = (1 - p as i64) * (j + 1);
                if deg < -(pole_cap as i64) {
                    break;
                }
                let coef = zp.pow(p, j as u64);
                let sign = j % 2 == 0;
                for (i, x) in sj.c.iter().enumerate() {
                    let d = deg + sj.lo + i as i64;
                    if d < q_inv.lo || d >= q_inv.xprec() {
                        continue;
                    }
                    let idx = (d - q_inv.lo) as usize;
                    let t = ok.scal(coef, x);
                    q_inv.c[idx] = if sign { ok.add(&q_inv.c[idx], &t) } else { ok.sub(&q_inv.c[idx], &t) };
                }
                sj = mul_raw(ok, &sj, &s_ser, window + pole_cap as i64);
            }
        }
        let q_inv = q_inv.trim(ok);
        // log(1+X)/X on the small window, with its denominators scaled out
        let j_window = (j_max as i64 + 10).min(m as i64);
        let vmax = {
            let mut v = 0u32;
            let mut k = p as i64;
            while k <= j_window + 1 {
                v += 1;
                k *= p as i64;
            }
            v
        };
        let mut tx = Series { lo: 0, c: Vec::new(), shift: vmax as i32, prec: zp.w as i32 - vmax as i32 };
        for j in 0..j_window {
            let jp1 = zp.reduce(j + 1);
            let v = zp.val(jp1);
            let u = zp.div_pk(jp1, v).unwrap();
            let mag = zp.mul(zp.pow(p, (vmax - v) as u64), zp.inv(u).unwrap());
            let val = if j % 2 == 0 { mag } else { zp.neg(mag) };
            tx.c.push(ok.from_u64(val));
        }
        let xt = invert_unit(ok, &tx).expect("log(1+X)/X has unit constant term");
        SeriesCtx { ok, m, pole_cap, q, q_inv, t_over_x_small: tx, x_over_t_small: xt, j_window }
    }

    pub fn zp(&self) -> &ZpCtx {
        &self.ok.zp
    }

    /// exponent-reduction modulus for (1+X)^a: only a mod p^{w + log_p(window) + 1} matters
    fn exp_modulus(&self, window: i64) -> u128 {
        let zp = self.zp();
        let mut extra = 1u32;
        let mut k = zp.p as i64;
        while k < window.max(2) {
            extra += 1;
            k *= zp.p as i64;
        }
        (zp.p as u128).pow(zp.w + extra)
    }

    /// (1+X)^a - 1 for a a unit given mod p^w, on the requested window
    pub fn onepx_pow_minus_one(&self, a: u64, window: i64) -> Series {
        let ok = self.ok;
        let modulus = self.exp_modulus(window);
        let mut e = a as u128 % modulus;
        let mut base = Series::from_coeffs(ok, 0, vec![ok.one(), ok.one()]).extend_zero(ok, window.min(2).max(2)).truncate_x(window);
        let mut acc = Series::one(ok, window);
        while e > 0 {
            if e & 1 == 1 {
                acc = mul_raw(ok, &acc, &base, window);
            }
            base = mul_raw(ok, &base, &base, window);
            e >>= 1;
        }
        acc = acc.extend_zero(ok, window);
        acc.c[0] = ok.sub(&acc.c[0], &ok.one());
        acc
    }

    /// Substitution table for X ↦ g (valuation exactly 1), input degrees lo_in..hi_in.
    pub fn subst_table(&self, g: &Series, lo_in: i64, hi_in: i64, window: i64) -> Result<SubstTable> {
        let ok = self.ok;
        let mut rows: Vec<Series> = Vec::with_capacity((hi_in - lo_in).max(0) as usize);
        let mut pos: Vec<Series> = vec![Series::one(ok, window)];
        for d in 1..=hi_in.max(0) {
            let prev = &pos[(d - 1) as usize];
            pos.push(mul_raw(ok, prev, g, window));
        }
        let mut neg: Vec<Series> = Vec::new();
        if lo_in < 0 {
            // ginv has lowest degree -1, so each power costs one degree of
            // validity: build at an extended window and truncate the rows
            let wext = window + (-lo_in) + 2;
            let ginv = laurent_invert(ok, g, wext)?;
            let mut acc = Series::one(ok, wext);
            for _ in 0..(-lo_in) {
                acc = mul_raw(ok, &acc, &ginv, wext);
                neg.push(acc.clone().truncate_x(window));
            }
        }
        for d in lo_in..hi_in {
            if d >= 0 {
                rows.push(pos[d as usize].clone());
            } else {
                rows.push(neg[(-d - 1) as usize].clone());
            }
        }
        Ok(SubstTable { lo_in, rows })
    }

    /// Apply a substitution table, twisting coefficients by σ^frob_twist.
    /// Rows must be integral (shift 0); precision comes from the argument.
    pub fn apply_subst(&self, table: &SubstTable, f: &Series, frob_twist: i64, window: i64) -> Series {
        let ok = self.ok;
        let out_lo = table.rows.iter().map(|r| r.lo).min().unwrap_or(0).min(0);
        let mut out = Series {
            lo: out_lo,
            c: vec![ok.zero(); (window - out_lo).max(0) as usize],
            shift: f.shift,
            prec: f.prec,
        };
        for (i, x) in f.c.iter().enumerate() {
            if ok.is_zero(x) {
                continue;
            }
            let d = f.lo + i as i64;
            let idx = d - table.lo_in;
            assert!(
                idx >= 0 && (idx as usize) < table.rows.len(),
                "substitution table covers {}..{} but degree {d} appeared",
                table.lo_in,
                table.lo_in + table.rows.len() as i64
            );
            let row = &table.rows[idx as usize];
            debug_assert_eq!(row.shift, 0);
            let xc = ok.frobenius_pow(x, frob_twist);
            for (j, rc) in row.c.iter().enumerate() {
                if ok.is_zero(rc) {
                    continue;
                }
                let dd = row.lo + j as i64;
                if dd < out.lo || dd >= out.xprec() {
                    continue;
                }
                let t = ok.mul(&xc, rc);
                let k = (dd - out.lo) as usize;
                out.c[k] = ok.add(&out.c[k], &t);
            }
        }
        out.trim(ok)
    }
}

/// plain product of stored blocks (shifts add, prec = min), truncated to `window`
pub fn mul_raw(ok: &OkCtx, a: &Series, b: &Series, window: i64) -> Series {
    let lo = a.lo + b.lo;
    let len = ((window - lo).max(0) as usize).min(a.c.len() + b.c.len());
    let mut c = vec![ok.zero(); len];
    for (i, x) in a.c.iter().enumerate() {
        if ok.is_zero(x) {
            continue;
        }
        for (j, y) in b.c.iter().enumerate() {
            let k = i + j;
            if k >= len {
                break;
            }
            if ok.is_zero(y) {
                continue;
            }
            let t = ok.mul(x, y);
            c[k] = ok.add(&c[k], &t);
        }
    }
    Series { lo, c, shift: a.shift + b.shift, prec: a.prec.min(b.prec) }
}

/// smallest semantic coefficient valuation of the stored window
pub fn min_val(ok: &OkCtx, a: &Series) -> i32 {
    a.c.iter().map(|x| ok.val(x)).min().unwrap_or(ok.zp.w) as i32 - a.shift
}

fn mul_raw_scaled(ok: &OkCtx, a: &Series, b: &Series, window: i64) -> Series {
    let mut r = mul_raw(ok, a, b, window);
    let va = min_val(ok, a).min(a.prec);
    let vb = min_val(ok, b).min(b.prec);
    r.prec = (va + b.prec).min(vb + a.prec).min(ok.zp.w as i32 - r.shift.max(0));
    r
}

/// invert a series whose semantic constant term (degree 0) is a unit
pub fn invert_unit(ok: &OkCtx, f: &Series) -> Result<Series> {
    if f.lo != 0 {
        return Err(Error::Invalid("invert_unit expects lowest degree 0".into()));
    }
    let v0 = ok.val(&f.c[0]);
    if f.shift < 0 || v0 != f.shift as u32 {
        return Err(Error::Precision("constant term is not a semantic unit".into()));
    }
    let a0 = ok.div_pk(&f.c[0], v0).unwrap();
    let a0inv = ok.inv(&a0)?;
    let n = f.c.len();
    // b_0 = a0^{-1}; b_k = -a0^{-1} sum_{i=1..k} f_i b_{k-i}  (semantic coefficients)
    let mut coeffs: Vec<ScaledOk> = Vec::with_capacity(n);
    coeffs.push(ScaledOk { c: a0inv.clone(), shift: 0, prec: f.prec });
    for k in 1..n {
        let mut acc = ScaledOk::zero(ok);
        for i in 1..=k {
            let ai = ScaledOk { c: f.c[i].clone(), shift: f.shift, prec: f.prec };
            acc = acc.add(ok, &ai.mul(ok, &coeffs[k - i]));
        }
        let b = ScaledOk { c: ok.neg(&ok.mul(&acc.c, &a0inv)), shift: acc.shift, prec: acc.prec };
        coeffs.push(b.normalize(ok));
    }
    assemble_scaled(ok, 0, coeffs)
}

/// Laurent inverse of a series of exact valuation 1
pub fn laurent_invert(ok: &OkCtx, g: &Series, window: i64) -> Result<Series> {
    let mut u = g.clone().trim(ok);
    while !u.c.is_empty() && ok.is_zero(&u.c[0]) {
        u.c.remove(0);
        u.lo += 1;
    }
    if u.lo != 1 {
        return Err(Error::Invalid("laurent_invert expects valuation exactly 1".into()));
    }
    u.lo = 0;
    let uinv = invert_unit(ok, &u)?;
    let mut r = uinv.truncate_x(window + 1);
    r.lo -= 1;
    Ok(r)
}

fn assemble_scaled(ok: &OkCtx, lo: i64, coeffs: Vec<ScaledOk>) -> Result<Series> {
    let shift = coeffs.iter().map(|x| x.shift).max().unwrap_or(0).max(0);
    let prec = coeffs.iter().map(|x| x.prec).min().unwrap_or(i32::MAX);
    let mut c = Vec::with_capacity(coeffs.len());
    for x in coeffs {
        c.push(ok.mul_pk(&x.c, (shift - x.shift) as u32));
    }
    Ok(Series { lo, c, shift, prec })
}

// ---- arithmetic ----

pub fn add(ok: &OkCtx, a: &Series, b: &Series) -> Series {
    let lo = a.lo.min(b.lo);
    let hi = a.xprec().min(b.xprec());
    let shift = a.shift.max(b.shift);
    let mut c = vec![ok.zero(); (hi - lo).max(0) as usize];
    for (i, slot) in c.iter_mut().enumerate() {
        let d = lo + i as i64;
        let x = ok.mul_pk(&a.coeff(ok, d), (shift - a.shift) as u32);
        let y = ok.mul_pk(&b.coeff(ok, d), (shift - b.shift) as u32);
        *slot = ok.add(&x, &y);
    }
    Series { lo, c, shift, prec: a.prec.min(b.prec) }
}

pub fn sub(ok: &OkCtx, a: &Series, b: &Series) -> Series {
    add(ok, a, &neg(ok, b))
}

pub fn neg(ok: &OkCtx, a: &Series) -> Series {
    Series { lo: a.lo, c: a.c.iter().map(|x| ok.neg(x)).collect(), shift: a.shift, prec: a.prec }
}

pub fn scal(ok: &OkCtx, s: &OkElem, a: &Series) -> Series {
    Series { lo: a.lo, c: a.c.iter().map(|x| ok.mul(s, x)).collect(), shift: a.shift, prec: a.prec }
}

pub fn scal_scaled(ok: &OkCtx, s: &ScaledOk, a: &Series) -> Series {
    let mut r = scal(ok, &s.c, a);
    r.shift += s.shift;
    let vs = s.val(ok).min(s.prec);
    let va = min_val(ok, a).min(a.prec);
    r.prec = (vs + a.prec).min(va + s.prec).min(ok.zp.w as i32 - r.shift.max(0));
    r
}

/// multiply by p^k (k < 0 divides by p, tracked by the scale)
pub fn mul_pk(a: &Series, k: i32) -> Series {
    Series { lo: a.lo, c: a.c.clone(), shift: a.shift - k, prec: a.prec + k }
}

pub fn mul(ok: &OkCtx, a: &Series, b: &Series) -> Series {
    let window = (a.xprec() + b.lo).min(b.xprec() + a.lo);
    mul_raw_scaled(ok, a, b, window)
}

pub fn mul_window(ok: &OkCtx, a: &Series, b: &Series, window: i64) -> Series {
    let natural = (a.xprec() + b.lo).min(b.xprec() + a.lo);
    mul_raw_scaled(ok, a, b, window.min(natural))
}

pub fn powi(ok: &OkCtx, a: &Series, e: u32, window: i64) -> Series {
    let mut r = Series::one(ok, window);
    for _ in 0..e {
        r = mul_raw_scaled(ok, &r, a, window);
    }
    r
}

pub fn frob_coeffs(ok: &OkCtx, a: &Series, e: i64) -> Series {
    Series { lo: a.lo, c: a.c.iter().map(|x| ok.frobenius_pow(x, e)).collect(), shift: a.shift, prec: a.prec }
}

// ---- the operator package ----

/// φ: substitutes X ↦ (1+X)^p - 1 and applies σ to coefficients.
pub fn phi(ctx: &SeriesCtx, f: &Series) -> Result<Series> {
    phi_capped(ctx, f, None)
}

/// φ with the output pole clipped at `cap`: the dropped deep-pole terms
/// carry p-valuation at least (depth - cap)/(p-1), which block operators
/// account for through their effective exponent.
pub fn phi_capped(ctx: &SeriesCtx, f: &Series, cap: Option<i64>) -> Result<Series> {
    let ok = ctx.ok;
    let f = f.clone().trim(ok);
    let window = f.xprec();
    let pole = f.pole_order(ok);
    if pole as usize > ctx.pole_cap {
        return Err(Error::Pole(format!("φ input pole {pole} exceeds capacity {}", ctx.pole_cap)));
    }
    // positive part by Horner against φ(X) = X q
    let phix = {
        let mut s = ctx.q.clone();
        s.lo += 1;
        s
    };
    let mut acc = Series::zero(ok, window);
    for d in (0..f.xprec()).rev() {
        acc = mul_raw(ok, &acc, &phix, window);
        acc = acc.extend_zero(ok, window);
        if acc.lo > 0 {
            let mut ext = vec![ok.zero(); acc.lo as usize];
            ext.extend(acc.c);
            acc.c = ext;
            acc.lo = 0;
        }
        let cd = ok.frobenius(&f.coeff(ok, d));
        if !ok.is_zero(&cd) {
            acc.c[0] = ok.add(&acc.c[0], &cd);
        }
    }
    acc.shift = f.shift;
    acc.prec = f.prec;
    let mut result = acc;
    if pole > 0 {
        let wext = window + pole;
        let mut qinv_m = Series::one(ok, wext);
        for m in 1..=pole {
            qinv_m = mul_raw(ok, &qinv_m, &ctx.q_inv, wext);
            let cm = ok.frobenius(&f.coeff(ok, -m));
            if ok.is_zero(&cm) {
                continue;
            }
            let mut term = scal(ok, &cm, &qinv_m);
            term.lo -= m;
            term = term.truncate_x(window);
            term.shift = f.shift;
            term.prec = f.prec;
            result = add(ok, &result, &term);
        }
        if let Some(cap) = cap {
            if result.lo < -cap {
                let cut = (-cap - result.lo) as usize;
                result.c.drain(..cut.min(result.c.len()));
                result.lo = -cap;
            }
        } else if result.pole_order(ok) as usize > ctx.pole_cap {
            return Err(Error::Pole("φ output pole exceeds capacity".into()));
        }
    }
    Ok(result.trim(ok))
}

/// Γ-action: X ↦ (1+X)^a - 1 for a unit a; coefficients are fixed.
pub fn gamma_act(ctx: &SeriesCtx, a: u64, f: &Series) -> Result<Series> {
    let ok = ctx.ok;
    let f = f.clone().trim(ok);
    let window = f.xprec();
    let pole = f.pole_order(ok);
    if pole as usize > ctx.pole_cap {
        return Err(Error::Pole("γ input pole exceeds capacity".into()));
    }
    let g = ctx.onepx_pow_minus_one(a, window + pole);
    let table = ctx.subst_table(&g, f.lo.min(0) - 0 + f.lo.min(0) * 0 + f.lo, f.xprec(), window)?;
    Ok(ctx.apply_subst(&table, &f, 0, window).trim(ok))
}

/// the (1+X)-basis coefficients of a pole-free series on its window
pub fn to_onepx_basis(ctx: &SeriesCtx, f: &Series) -> Result<Vec<OkElem>> {
    let ok = ctx.ok;
    if f.pole_order(ok) > 0 {
        return Err(Error::Invalid("(1+X)-basis needs a pole-free series".into()));
    }
    let n = f.xprec().max(0) as usize;
    let zp = &ok.zp;
    let mut b = vec![ok.zero(); n];
    let mut row: Vec<u64> = vec![1];
    for j in 0..n {
        if j > 0 {
            let mut next = vec![0u64; j + 1];
            next[0] = 1;
            for i in 1..j {
                next[i] = zp.add(row[i - 1], row[i]);
            }
            next[j] = 1;
            row = next;
        }
        let aj = f.coeff(ok, j as i64);
        if ok.is_zero(&aj) {
            continue;
        }
        for i in 0..=j {
            let sign = (j - i) % 2 == 0;
            let t = ok.scal(row[i], &aj);
            b[i] = if sign { ok.add(&b[i], &t) } else { ok.sub(&b[i], &t) };
        }
    }
    Ok(b)
}

pub fn from_onepx_basis(ctx: &SeriesCtx, b: &[OkElem], shift: i32, prec: i32) -> Series {
    let ok = ctx.ok;
    let zp = &ok.zp;
    let n = b.len();
    let mut c = vec![ok.zero(); n];
    let mut row: Vec<u64> = vec![1];
    for i in 0..n {
        if i > 0 {
            let mut next = vec![0u64; i + 1];
            next[0] = 1;
            for k in 1..i {
                next[k] = zp.add(row[k - 1], row[k]);
            }
            next[i] = 1;
            row = next;
        }
        if ok.is_zero(&b[i]) {
            continue;
        }
        for j in 0..=i {
            let t = ok.scal(row[j], &b[i]);
            c[j] = ok.add(&c[j], &t);
        }
    }
    Series { lo: 0, c, shift, prec }
}

/// ψ applied to a series whose stored tail is declared exact (a genuine
/// polynomial): on the (1+X)-basis it keeps exponents divisible by p,
/// divides them by p, and applies σ^{-1}. Poles are routed through
/// X^{-P} = φ(X^{-P}) q^P.
pub fn psi_exact(ctx: &SeriesCtx, f: &Series) -> Result<Series> {
    let ok = ctx.ok;
    let f = f.clone().trim(ok);
    let pole = f.pole_order(ok);
    if pole == 0 {
        let mut g = f.clone();
        if g.lo < 0 {
            // drop the known-zero pole slots
            let cut = (-g.lo) as usize;
            g.c.drain(..cut.min(g.c.len()));
            g.lo = 0;
        }
        if g.lo > 0 {
            let mut ext = vec![ok.zero(); g.lo as usize];
            ext.extend(g.c);
            g.c = ext;
            g.lo = 0;
        }
        let b = to_onepx_basis(ctx, &g)?;
        let p = ctx.zp().p as usize;
        let out_n = b.len().div_ceil(p);
        let mut ob = vec![ok.zero(); out_n];
        for (i, slot) in ob.iter_mut().enumerate() {
            let src = i * p;
            if src < b.len() {
                *slot = ok.frobenius_inv(&b[src]);
            }
        }
        return Ok(from_onepx_basis(ctx, &ob, f.shift, f.prec));
    }
    if pole as usize > ctx.pole_cap {
        return Err(Error::Pole("ψ input pole exceeds capacity".into()));
    }
    let mut shifted = f.clone();
    shifted.lo += pole;
    let qp = powi(ok, &ctx.q, pole as u32, shifted.xprec());
    let prod = mul(ok, &qp, &shifted);
    let mut res = psi_exact(ctx, &prod)?;
    res.lo -= pole;
    Ok(res.trim(ok))
}

/// p-valuation floor for the influence of the unknown tail beyond degree
/// `a` on the ψ-output (or on window (1+X)-coordinates) at degree `e`:
/// errors arrive through X^{B(p-1)} q^{-B}-type expansions and so cost
/// ceil(p (B - e)/(p-1)) - 1 powers of p, B = floor(a/p).
pub fn psi_tail_val(p: u64, a: i64, e: i64) -> i32 {
    let b = a.div_euclid(p as i64);
    if e >= b {
        return 0;
    }
    let k = b - e;
    let num = (p as i64) * k;
    let den = p as i64 - 1;
    (num.div_euclid(den) + if num % den != 0 { 1 } else { 0 } - 1).max(0) as i32
}

/// ψ on a series whose tail beyond the stored window is unknown: the
/// output is truncated to the degrees certified to `n_target` p-digits.
pub fn psi(ctx: &SeriesCtx, f: &Series, n_target: i32) -> Result<Series> {
    let p = ctx.zp().p;
    let f2 = f.clone().trim(ctx.ok);
    let pole = f2.pole_order(ctx.ok);
    // effective positive window entering the basis rule after the
    // q^P X^P premultiplication is unchanged: A = xprec + pole*0
    let a = f2.xprec();
    let b = a.div_euclid(p as i64);
    let mut e_max = -1;
    for e in (0..=b).rev() {
        if psi_tail_val(p, a, e) >= n_target {
            e_max = e;
            break;
        }
    }
    if e_max < 0 {
        return Err(Error::Truncation {
            what: format!("ψ at target precision {n_target} needs a larger window"),
            needed: p as i64 * (n_target as i64 * (p as i64 - 1) / p as i64 + 2),
            have: a,
        });
    }
    let full = psi_exact(ctx, &f2)?;
    let mut out = full.truncate_x(e_max);
    out.lo = out.lo.max(-pole);
    out.prec = out.prec.min(n_target);
    Ok(out)
}

/// ∂ = (1+X) d/dX on Laurent series; the window shrinks by one.
pub fn partial(ok: &OkCtx, f: &Series) -> Series {
    let lo = if f.lo <= 0 { f.lo - 1 } else { f.lo - 1 };
    let hi = f.xprec() - 1;
    let len = (hi - lo).max(0) as usize;
    let mut c = vec![ok.zero(); len];
    for (i, x) in f.c.iter().enumerate() {
        let d = f.lo + i as i64;
        if d == 0 || ok.is_zero(x) {
            continue;
        }
        let dx = ok.scal(ok.zp.reduce(d), x);
        for deg in [d - 1, d] {
            if deg < lo || deg >= hi {
                continue;
            }
            let k = (deg - lo) as usize;
            c[k] = ok.add(&c[k], &dx);
        }
    }
    (Series { lo, c, shift: f.shift, prec: f.prec }).trim(ok)
}

/// ∂^{-e} on a ψ=0 series (prime-to-p (1+X)-support, so exact);
/// e < 0 applies ∂^{|e|} instead.
pub fn partial_inv_psi0(ctx: &SeriesCtx, f: &Series, e: i64) -> Result<Series> {
    let ok = ctx.ok;
    let zp = ctx.zp();
    let b = to_onepx_basis(ctx, f)?;
    let mut out = Vec::with_capacity(b.len());
    for (a, x) in b.iter().enumerate() {
        if a % zp.p as usize == 0 {
            if (ok.val(x) as i32 - f.shift) < f.prec.min(zp.w as i32 - f.shift) {
                return Err(Error::Invalid(format!(
                    "∂^{{-1}} on a series that is not ψ=0 ((1+X)^{a} appears)"
                )));
            }
            out.push(ok.zero());
            continue;
        }
        let au = zp.reduce(a as i64);
        let factor = if e >= 0 { zp.inv(zp.pow(au, e as u64))? } else { zp.pow(au, (-e) as u64) };
        out.push(ok.scal(factor, x));
    }
    Ok(from_onepx_basis(ctx, &out, f.shift, f.prec))
}

/// residue: the X^{-1} coefficient
pub fn residue(ok: &OkCtx, f: &Series) -> ScaledOk {
    f.coeff_scaled(ok, -1)
}

/// res(f dX/(1+X)): the X^{-1} coefficient of f/(1+X)
pub fn residue_form(ctx: &SeriesCtx, f: &Series) -> ScaledOk {
    let ok = ctx.ok;
    let n = (f.xprec() - f.lo).max(1) as usize;
    let inv =
        Series::from_coeffs(ok, 0, (0..n).map(|j| if j % 2 == 0 { ok.one() } else { ok.from_i64(-1) }).collect());
    let prod = mul(ok, f, &inv);
    residue(ok, &prod)
}

/// A cyclotomic value with its scale and certified precision.
#[derive(Debug, Clone)]
pub struct CycScaled {
    pub v: crate::cyclo::CycloElem,
    pub shift: i32,
    pub prec: i32,
}

/// Evaluate at X = ζ_{p^n} - 1. The discarded tail has valuation
/// >= xprec / e_n; the call fails (reporting the window it would need)
/// if that undercuts `want_prec`.
pub fn eval_at_level(
    ctx: &SeriesCtx,
    cy: &crate::cyclo::CycloCtx,
    f: &Series,
    n: u32,
    want_prec: i32,
) -> Result<CycScaled> {
    let ok = ctx.ok;
    let f2 = f.clone().trim(ok);
    if f2.pole_order(ok) > 0 {
        return Err(Error::Pole("evaluation at ζ - 1 requires cancelling poles first".into()));
    }
    let e_n = ((ctx.zp().p - 1) * ctx.zp().p.pow(n - 1)) as i64;
    let tail = (f2.xprec() / e_n) as i32 - f2.shift;
    let prec = f2.prec.min(tail);
    if prec < want_prec {
        return Err(Error::Truncation {
            what: format!("eval at level {n} certifies only {prec} digits, {want_prec} requested"),
            needed: (want_prec + f2.shift).max(0) as i64 * e_n,
            have: f2.xprec(),
        });
    }
    let mut z = cy.zero(ok, n)?;
    if z.c.len() > 1 {
        z.c[1] = ok.one();
    }
    let mut acc = cy.zero(ok, n)?;
    let start = f2.lo.max(0);
    for d in (start..f2.xprec()).rev() {
        acc = cy.mul(ok, &acc, &z)?;
        let mut t = cy.zero(ok, n)?;
        t.c[0] = f2.coeff(ok, d);
        acc = cy.add(ok, &acc, &t);
    }
    if start > 0 {
        let zpow = cy.pow(ok, &z, start as u64)?;
        acc = cy.mul(ok, &acc, &zpow)?;
    }
    Ok(CycScaled { v: acc, shift: f2.shift, prec })
}

/// semantic equality mod (p^n_target, X^x_target)
pub fn eq_mod(ok: &OkCtx, a: &Series, b: &Series, n_target: i32, x_target: i64) -> bool {
    let d = sub(ok, a, b);
    if d.prec < n_target || d.xprec() < x_target {
        return false;
    }
    for (i, x) in d.c.iter().enumerate() {
        let deg = d.lo + i as i64;
        if deg >= x_target {
            continue;
        }
        if (ok.val(x) as i32 - d.shift) < n_target {
            return false;
        }
    }
    true
}

/// ψ=0 certificate: prime-to-p support in the (1+X)-basis
#[derive(Debug, Clone)]
pub struct PsiZero(pub Series);

impl PsiZero {
    pub fn certify(ctx: &SeriesCtx, f: Series, tol: i32) -> Result<PsiZero> {
        let ok = ctx.ok;
        let b = to_onepx_basis(ctx, &f)?;
        for (a, x) in b.iter().enumerate() {
            if a % ctx.zp().p as usize == 0 && (ok.val(x) as i32 - f.shift) < tol {
                return Err(Error::Invalid(format!(
                    "ψ=0 certificate failed at (1+X)^{a}: valuation {} < {tol}",
                    ok.val(x) as i32 - f.shift
                )));
            }
        }
        Ok(PsiZero(f))
    }

    /// build from prime-to-p (1+X)-basis coefficients
    pub fn from_basis(ctx: &SeriesCtx, b: &[OkElem]) -> Result<PsiZero> {
        for (a, x) in b.iter().enumerate() {
            if a % ctx.zp().p as usize == 0 && !ctx.ok.is_zero(x) {
                return Err(Error::Invalid("basis entry at p-divisible exponent".into()));
            }
        }
        Ok(PsiZero(from_onepx_basis(ctx, b, 0, ctx.zp().w as i32)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cyclo::CycloCtx;
    use crate::unram::OkCtx;
    use crate::zp::ZpCtx;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup(p: u64, f: usize) -> OkCtx {
        OkCtx::new(ZpCtx::new(p, 14).unwrap(), f).unwrap()
    }

    fn rand_series(ok: &OkCtx, rng: &mut ChaCha8Rng, m: i64) -> Series {
        let c = (0..m)
            .map(|_| {
                let coords = (0..ok.f).map(|_| rng.gen_range(0..ok.zp.pw)).collect();
                crate::unram::OkElem { c: coords }
            })
            .collect();
        Series::from_coeffs(ok, 0, c)
    }

    #[test]
    fn phi_of_x_and_t() {
        let ok = setup(3, 1);
        let ctx = SeriesCtx::new(&ok, 32, 8);
        let x = Series::monomial(&ok, 1, ok.one(), 32);
        let fx = phi(&ctx, &x).unwrap();
        let expect = ctx.onepx_pow_minus_one(3, 32);
        assert!(eq_mod(&ok, &fx, &expect, 14, 32));
        let one = Series::one(&ok, 32);
        assert!(eq_mod(&ok, &phi(&ctx, &one).unwrap(), &one, 14, 32));
        // φ(t) = p t on the small window
        let t = mul(&ok, &Series::monomial(&ok, 1, ok.one(), ctx.j_window + 1), &ctx.t_over_x_small);
        let ft = phi(&ctx, &t).unwrap();
        let pt = scal(&ok, &ok.from_u64(3), &t);
        assert!(eq_mod(&ok, &ft, &pt, 9, ft.xprec().min(pt.xprec())));
    }

    #[test]
    fn psi_phi_identity_and_projector() {
        let ok = setup(3, 2);
        let ctx = SeriesCtx::new(&ok, 36, 8);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            // treat f as an exact polynomial: compute φ on the tripled window
            let f = rand_series(&ok, &mut rng, 36).extend_zero(&ok, 3 * 36 + 1);
            let pf = phi(&ctx, &f).unwrap();
            let ppf = psi_exact(&ctx, &pf).unwrap();
            assert!(eq_mod(&ok, &ppf, &f, 14, 36), "ψ∘φ = id");
        }
        // graded variant: truncated φ-image still certifies the target window
        let f = rand_series(&ok, &mut rng, 36);
        let pf = phi(&ctx, &f).unwrap();
        let ppf = psi(&ctx, &pf, 8).unwrap();
        assert!(ppf.xprec() >= 6);
        assert!(eq_mod(&ok, &ppf, &f.clone().truncate_x(ppf.xprec()), 8, ppf.xprec()));
        let onepx = Series::from_coeffs(&ok, 0, vec![ok.one(), ok.one()]).extend_zero(&ok, 36);
        let p1 = psi_exact(&ctx, &onepx).unwrap();
        assert!(p1.is_zero(&ok), "ψ(1+X) = 0");
        // ψ((1+X)^{pj}) carries σ^{-1}
        let mut f6 = ctx.onepx_pow_minus_one(6, 36);
        f6.c[0] = ok.add(&f6.c[0], &ok.one());
        let pf = psi_exact(&ctx, &f6).unwrap();
        let mut expect = ctx.onepx_pow_minus_one(2, 12);
        expect.c[0] = ok.add(&expect.c[0], &ok.one());
        assert!(eq_mod(&ok, &pf, &expect, 14, 12));
        // φψ is the averaging projector in the (1+X)-basis
        let g = {
            let mut a = ctx.onepx_pow_minus_one(5, 36);
            a.c[0] = ok.add(&a.c[0], &ok.one());
            let mut b = ctx.onepx_pow_minus_one(6, 36);
            b.c[0] = ok.add(&b.c[0], &ok.one());
            add(&ok, &a, &b)
        };
        let proj = phi(&ctx, &psi_exact(&ctx, &g).unwrap()).unwrap();
        let mut expect2 = ctx.onepx_pow_minus_one(6, 12);
        expect2.c[0] = ok.add(&expect2.c[0], &ok.one());
        assert!(eq_mod(&ok, &proj, &expect2, 14, 12));
    }

    #[test]
    fn gamma_action_is_a_group_action() {
        let ok = setup(5, 1);
        let ctx = SeriesCtx::new(&ok, 24, 6);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let f = rand_series(&ok, &mut rng, 24);
        let id = gamma_act(&ctx, 1, &f).unwrap();
        assert!(eq_mod(&ok, &id, &f, 14, 24));
        let (a, b) = (7u64, 11u64);
        let ab = gamma_act(&ctx, a, &gamma_act(&ctx, b, &f).unwrap()).unwrap();
        let ba = gamma_act(&ctx, ok.zp.mul(a, b), &f).unwrap();
        assert!(eq_mod(&ok, &ab, &ba, 12, 20));
        // Γ-equivariance of ψ on the graded-certified window
        let fw = f.clone().extend_zero(&ok, 5 * 24 + 1);
        let pf = psi(&ctx, &gamma_act(&ctx, a, &fw).unwrap(), 8).unwrap();
        let fp = gamma_act(&ctx, a, &psi_exact(&ctx, &fw).unwrap()).unwrap();
        let win = pf.xprec().min(12);
        assert!(win >= 10);
        assert!(eq_mod(&ok, &pf, &fp.clone().truncate_x(win), 8, win));
        let gf = gamma_act(&ctx, a, &phi(&ctx, &f).unwrap()).unwrap();
        let fg = phi(&ctx, &gamma_act(&ctx, a, &f).unwrap()).unwrap();
        assert!(eq_mod(&ok, &gf, &fg, 12, 20));
    }

    #[test]
    fn gamma_acts_on_poles() {
        let ok = setup(3, 1);
        let ctx = SeriesCtx::new(&ok, 20, 6);
        // γ_a(1/X) * γ_a(X) = 1
        let xinv = Series::monomial(&ok, -1, ok.one(), 16);
        let ga_inv = gamma_act(&ctx, 5, &xinv).unwrap();
        let x = Series::monomial(&ok, 1, ok.one(), 16);
        let ga_x = gamma_act(&ctx, 5, &x).unwrap();
        let prod = mul(&ok, &ga_inv, &ga_x);
        assert!(eq_mod(&ok, &prod, &Series::one(&ok, prod.xprec()), 14, prod.xprec()));
    }

    #[test]
    fn partial_relations() {
        let ok = setup(3, 1);
        let ctx = SeriesCtx::new(&ok, 30, 8);
        let mut f = ctx.onepx_pow_minus_one(7, 30);
        f.c[0] = ok.add(&f.c[0], &ok.one());
        let df = partial(&ok, &f);
        let af = scal(&ok, &ok.from_u64(7), &f);
        assert!(eq_mod(&ok, &df, &af, 14, 29));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = rand_series(&ok, &mut rng, 30);
        let lhs = partial(&ok, &phi(&ctx, &g).unwrap());
        let rhs = scal(&ok, &ok.from_u64(3), &phi(&ctx, &partial(&ok, &g)).unwrap());
        assert!(eq_mod(&ok, &lhs, &rhs, 14, 28), "∂φ = pφ∂");
        let mut h = ctx.onepx_pow_minus_one(5, 30);
        h.c[0] = ok.add(&h.c[0], &ok.one());
        let dh = partial_inv_psi0(&ctx, &h, 1).unwrap();
        let back = partial_inv_psi0(&ctx, &dh, -1).unwrap();
        assert!(eq_mod(&ok, &back, &h, 14, 30));
        let r = residue_form(&ctx, &partial(&ok, &g));
        assert!(r.is_zero_mod(&ok, 14), "res(∂f dX/(1+X)) = 0");
    }

    #[test]
    fn psi_on_laurent_and_residues() {
        let ok = setup(3, 1);
        let ctx = SeriesCtx::new(&ok, 30, 8);
        let xinv = Series::monomial(&ok, -1, ok.one(), 10);
        let p = psi_exact(&ctx, &xinv).unwrap();
        let diff = sub(&ok, &p, &xinv);
        for (i, x) in diff.c.iter().enumerate() {
            let d = diff.lo + i as i64;
            if d < 2 {
                assert!(ok.val(x) >= 12, "ψ(1/X) = 1/X at degree {d}");
            }
        }
        assert_eq!(residue(&ok, &xinv).c, ok.one());
        let f = Series::one(&ok, 10);
        assert!(residue(&ok, &f).is_zero_mod(&ok, 14));
    }

    #[test]
    fn eval_at_cyclotomic_points() {
        let ok = setup(3, 1);
        let ctx = SeriesCtx::new(&ok, 60, 8);
        let cy = CycloCtx::new(&ok, 2).unwrap();
        let x = Series::monomial(&ok, 1, ok.one(), 60);
        let v = eval_at_level(&ctx, &cy, &x, 1, 8).unwrap();
        let z = cy.zeta(&ok, 1).unwrap();
        let mut zm1 = z.clone();
        zm1.c[0] = ok.sub(&zm1.c[0], &ok.one());
        assert_eq!(v.v, zm1);
        // eval(φ f, 2) = eval(f, 1) embedded (σ trivial for f = 1)
        let fx = phi(&ctx, &x).unwrap();
        let v2 = eval_at_level(&ctx, &cy, &fx, 2, 6).unwrap();
        let z1_in_2 = cy.embed(&ok, &zm1, 2).unwrap();
        let diff = cy.sub(&ok, &v2.v, &z1_in_2);
        assert!(cy.coord_val(&ok, &diff) >= 6);
        // a Φ_{p}(1+X)-multiple evaluates to 0
        let lvl = cy.level(1).unwrap();
        let phi_poly =
            Series::from_coeffs(&ok, 0, lvl.modulus.iter().map(|&a| ok.from_u64(a)).collect()).extend_zero(&ok, 60);
        let ev = eval_at_level(&ctx, &cy, &phi_poly, 1, 8).unwrap();
        assert!(cy.coord_val(&ok, &ev.v) >= 8);
    }

    #[test]
    fn tail_audit_rejects_small_windows() {
        let ok = setup(5, 1);
        let ctx = SeriesCtx::new(&ok, 16, 6);
        let cy = CycloCtx::new(&ok, 2).unwrap();
        let x = Series::monomial(&ok, 1, ok.one(), 16);
        assert!(eval_at_level(&ctx, &cy, &x, 2, 8).is_err());
    }

    #[test]
    fn q_inverse_is_exact() {
        for (p, f) in [(3u64, 1usize), (5, 2)] {
            let ok = setup(p, f);
            let ctx = SeriesCtx::new(&ok, 24, 6);
            let prod = mul(&ok, &ctx.q, &ctx.q_inv);
            assert!(eq_mod(&ok, &prod, &Series::one(&ok, prod.xprec()), 14, prod.xprec()));
        }
    }

    #[test]
    fn unit_inversion_with_denominators() {
        // X/log(1+X) carries denominators of valuation about -window/(p-1);
        // at the runtime word size (N + headroom) the target precision survives
        let ok = OkCtx::new(ZpCtx::new(3, 20).unwrap(), 1).unwrap();
        let ctx = SeriesCtx::new(&ok, 24, 8);
        let prod = mul(&ok, &ctx.t_over_x_small, &ctx.x_over_t_small);
        assert!(prod.prec >= 8, "inverse precision {} too small", prod.prec);
        assert!(eq_mod(&ok, &prod, &Series::one(&ok, prod.xprec()), 8, prod.xprec()));
    }
}
