//! The unramified extension `O_K = Z_p[u]/(m(u))` of degree f, with its
//! arithmetic Frobenius, trace and norm.
//!
//! The modulus m(u) is a fixed monic lift of an irreducible polynomial
//! over F_p, shipped in `data/unramified_moduli.txt`; Frobenius is
//! precomputed once as the matrix of σ in the power basis, obtained by
//! Hensel-lifting the p-power map on the root u.

use crate::zp::ZpCtx;
use crate::{Error, Result};

const MODULI_TABLE: &str = include_str!("../data/unramified_moduli.txt");

/// An element of O_K in the power basis: c[0] + c[1] u + ... + c[f-1] u^{f-1},
/// coefficients mod p^w.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OkElem {
    pub c: Vec<u64>,
}

/// Context for O_K arithmetic at fixed working modulus.
#[derive(Debug, Clone)]
pub struct OkCtx {
    pub zp: ZpCtx,
    pub f: usize,
    /// monic modulus, length f+1, constant term first
    pub modulus: Vec<u64>,
    /// column j = σ(u^j) in the power basis
    frob: Vec<Vec<u64>>,
    /// column j = σ^{-1}(u^j)
    frob_inv: Vec<Vec<u64>>,
}

pub fn lookup_modulus(p: u64, f: usize) -> Result<Vec<u64>> {
    for line in MODULI_TABLE.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        let lp: u64 = toks[0].parse().map_err(|_| Error::Invalid("bad moduli table".into()))?;
        let lf: usize = toks[1].parse().map_err(|_| Error::Invalid("bad moduli table".into()))?;
        if lp == p && lf == f {
            let mut coeffs = Vec::with_capacity(f + 1);
            for t in &toks[2..] {
                // base-p digit list, low digit first, '.'-separated
                let mut v: u64 = 0;
                let mut scale: u64 = 1;
                for d in t.split('.') {
                    let d: u64 = d.parse().map_err(|_| Error::Invalid("bad digit".into()))?;
                    v += d * scale;
                    scale *= p;
                }
                coeffs.push(v);
            }
            if coeffs.len() != f + 1 || *coeffs.last().unwrap() != 1 {
                return Err(Error::Invalid(format!("modulus entry for ({p},{f}) is not monic of degree {f}")));
            }
            return Ok(coeffs);
        }
    }
    Err(Error::Unsupported(format!("no unramified modulus shipped for (p, f) = ({p}, {f})")))
}

impl OkCtx {
    pub fn new(zp: ZpCtx, f: usize) -> Result<Self> {
        let modulus = lookup_modulus(zp.p, f)?;
        let mut ctx = OkCtx { zp, f, modulus, frob: vec![], frob_inv: vec![] };
        // residual irreducibility: no roots in F_p (enough for f <= 3)
        if f >= 2 && f <= 3 {
            for a in 0..zp.p {
                let mut acc = 0u64;
                let mut pw = 1u64;
                for c in &ctx.modulus {
                    acc = (acc + c % zp.p * pw) % zp.p;
                    pw = pw * a % zp.p;
                }
                if acc == 0 {
                    return Err(Error::Invalid(format!("modulus for ({}, {f}) reducible mod p", zp.p)));
                }
            }
        }
        ctx.build_frobenius()?;
        Ok(ctx)
    }

    pub fn zero(&self) -> OkElem {
        OkElem { c: vec![0; self.f] }
    }

    pub fn one(&self) -> OkElem {
        let mut e = self.zero();
        e.c[0] = 1;
        e
    }

    pub fn gen(&self) -> OkElem {
        let mut e = self.zero();
        if self.f > 1 {
            e.c[1] = 1;
        } else {
            // degree 1: u is the root of the linear modulus, -c0
            e.c[0] = self.zp.neg(self.modulus[0]);
        }
        e
    }

    pub fn from_u64(&self, a: u64) -> OkElem {
        let mut e = self.zero();
        e.c[0] = a % self.zp.pw;
        e
    }

    pub fn from_i64(&self, a: i64) -> OkElem {
        self.from_u64(self.zp.reduce(a))
    }

    pub fn is_zero(&self, a: &OkElem) -> bool {
        a.c.iter().all(|&x| x == 0)
    }

    pub fn add(&self, a: &OkElem, b: &OkElem) -> OkElem {
        OkElem { c: a.c.iter().zip(&b.c).map(|(&x, &y)| self.zp.add(x, y)).collect() }
    }

    pub fn sub(&self, a: &OkElem, b: &OkElem) -> OkElem {
        OkElem { c: a.c.iter().zip(&b.c).map(|(&x, &y)| self.zp.sub(x, y)).collect() }
    }

    pub fn neg(&self, a: &OkElem) -> OkElem {
        OkElem { c: a.c.iter().map(|&x| self.zp.neg(x)).collect() }
    }

    pub fn scal(&self, s: u64, a: &OkElem) -> OkElem {
        OkElem { c: a.c.iter().map(|&x| self.zp.mul(s, x)).collect() }
    }

    pub fn mul(&self, a: &OkElem, b: &OkElem) -> OkElem {
        let f = self.f;
        let mut prod = vec![0u64; 2 * f - 1];
        for i in 0..f {
            if a.c[i] == 0 {
                continue;
            }
            for j in 0..f {
                prod[i + j] = self.zp.add(prod[i + j], self.zp.mul(a.c[i], b.c[j]));
            }
        }
        // reduce by the monic modulus
        for k in (f..2 * f - 1).rev() {
            let lead = prod[k];
            if lead == 0 {
                continue;
            }
            prod[k] = 0;
            for j in 0..f {
                let t = self.zp.mul(lead, self.modulus[j]);
                prod[k - f + j] = self.zp.sub(prod[k - f + j], t);
            }
        }
        prod.truncate(f);
        OkElem { c: prod }
    }

    pub fn pow(&self, a: &OkElem, mut e: u64) -> OkElem {
        let mut base = a.clone();
        let mut r = self.one();
        while e > 0 {
            if e & 1 == 1 {
                r = self.mul(&r, &base);
            }
            base = self.mul(&base, &base);
            e >>= 1;
        }
        r
    }

    /// min p-valuation over coordinates (the valuation of the element,
    /// since O_K/p is a field and the power basis reduces mod p).
    pub fn val(&self, a: &OkElem) -> u32 {
        a.c.iter().map(|&x| self.zp.val(x)).min().unwrap_or(self.zp.w)
    }

    pub fn is_unit(&self, a: &OkElem) -> bool {
        self.val(a) == 0
    }

    /// exact division by p^k
    pub fn div_pk(&self, a: &OkElem, k: u32) -> Result<OkElem> {
        let mut c = Vec::with_capacity(self.f);
        for &x in &a.c {
            c.push(self.zp.div_pk(x, k)?);
        }
        Ok(OkElem { c })
    }

    pub fn mul_pk(&self, a: &OkElem, k: u32) -> OkElem {
        let pk = self.zp.pow(self.zp.p, k as u64);
        self.scal(pk, a)
    }

    /// Inverse of a unit, by solving the multiplication matrix.
    pub fn inv(&self, a: &OkElem) -> Result<OkElem> {
        if !self.is_unit(a) {
            return Err(Error::Precision("inverting a non-unit of O_K".into()));
        }
        let f = self.f;
        // columns: a * u^j
        let mut cols = Vec::with_capacity(f);
        let mut uj = self.one();
        for _ in 0..f {
            cols.push(self.mul(a, &uj));
            uj = self.mul(&uj, &self.gen());
        }
        // solve sum_j x_j (a u^j) = 1 by Gaussian elimination mod p^w
        let mut m = vec![vec![0u64; f + 1]; f];
        for i in 0..f {
            for j in 0..f {
                m[i][j] = cols[j].c[i];
            }
        }
        m[0][f] = 1;
        gauss_solve_unit(&self.zp, &mut m, f)
            .map(|x| OkElem { c: x })
            .ok_or_else(|| Error::Precision("unit inversion failed".into()))
    }

    fn apply_matrix(&self, mat: &[Vec<u64>], a: &OkElem) -> OkElem {
        let f = self.f;
        let mut out = self.zero();
        for j in 0..f {
            if a.c[j] == 0 {
                continue;
            }
            for i in 0..f {
                out.c[i] = self.zp.add(out.c[i], self.zp.mul(a.c[j], mat[j][i]));
            }
        }
        out
    }

    /// Arithmetic Frobenius σ (σ(x) ≡ x^p mod p, order f, fixes Z_p).
    pub fn frobenius(&self, a: &OkElem) -> OkElem {
        if self.f == 1 {
            return a.clone();
        }
        self.apply_matrix(&self.frob, a)
    }

    pub fn frobenius_inv(&self, a: &OkElem) -> OkElem {
        if self.f == 1 {
            return a.clone();
        }
        self.apply_matrix(&self.frob_inv, a)
    }

    pub fn frobenius_pow(&self, a: &OkElem, e: i64) -> OkElem {
        let f = self.f as i64;
        let e = e.rem_euclid(f);
        let mut r = a.clone();
        for _ in 0..e {
            r = self.frobenius(&r);
        }
        r
    }

    /// Tr_{K/Q_p}: sum of the f Frobenius conjugates; returns the Z_p-coordinate.
    pub fn trace(&self, a: &OkElem) -> u64 {
        let mut s = self.zero();
        let mut x = a.clone();
        for _ in 0..self.f {
            s = self.add(&s, &x);
            x = self.frobenius(&x);
        }
        debug_assert!(s.c[1..].iter().all(|&v| v == 0), "trace must land in Z_p");
        s.c[0]
    }

    /// Nm_{K/Q_p}: product of the f Frobenius conjugates.
    pub fn norm(&self, a: &OkElem) -> u64 {
        let mut s = self.one();
        let mut x = a.clone();
        for _ in 0..self.f {
            s = self.mul(&s, &x);
            x = self.frobenius(&x);
        }
        debug_assert!(s.c[1..].iter().all(|&v| v == 0), "norm must land in Z_p");
        s.c[0]
    }

    fn eval_modulus(&self, x: &OkElem) -> OkElem {
        let mut acc = self.zero();
        for &c in self.modulus.iter().rev() {
            acc = self.mul(&acc, x);
            acc = self.add(&acc, &self.from_u64(c));
        }
        acc
    }

    fn eval_modulus_deriv(&self, x: &OkElem) -> OkElem {
        let mut acc = self.zero();
        for k in (1..=self.f).rev() {
            acc = self.mul(&acc, x);
            let ck = self.zp.mul(self.modulus[k], k as u64);
            acc = self.add(&acc, &self.from_u64(ck));
        }
        acc
    }

    fn build_frobenius(&mut self) -> Result<()> {
        let f = self.f;
        if f == 1 {
            self.frob = vec![vec![1]];
            self.frob_inv = vec![vec![1]];
            return Ok(());
        }
        // Hensel-lift the root: r ≡ u^p mod p, m(r) = 0 mod p^w
        let mut r = self.pow(&self.gen(), self.zp.p);
        for _ in 0..self.zp.w + 1 {
            let mr = self.eval_modulus(&r);
            if self.is_zero(&mr) {
                break;
            }
            let dr = self.eval_modulus_deriv(&r);
            let corr = self.mul(&mr, &self.inv(&dr)?);
            r = self.sub(&r, &corr);
        }
        if !self.is_zero(&self.eval_modulus(&r)) {
            return Err(Error::Invalid("Frobenius root lift did not converge".into()));
        }
        // matrix columns: σ(u^j) = r^j
        let mut frob = Vec::with_capacity(f);
        let mut rj = self.one();
        for _ in 0..f {
            frob.push(rj.c.clone());
            rj = self.mul(&rj, &r);
        }
        self.frob = frob;
        // inverse = (f-1)-fold iterate
        let mut inv = Vec::with_capacity(f);
        let mut uj = self.one();
        for _ in 0..f {
            let mut x = uj.clone();
            for _ in 0..f - 1 {
                x = self.apply_matrix(&self.frob, &x);
            }
            inv.push(x.c.clone());
            uj = self.mul(&uj, &self.gen());
        }
        self.frob_inv = inv;
        Ok(())
    }
}

/// Solve a small linear system with an augmented column, requiring unit pivots.
fn gauss_solve_unit(zp: &ZpCtx, m: &mut [Vec<u64>], n: usize) -> Option<Vec<u64>> {
    for col in 0..n {
        let piv = (col..n).find(|&r| m[r][col] % zp.p != 0)?;
        m.swap(col, piv);
        let inv = zp.inv(m[col][col]).ok()?;
        for j in col..=n {
            m[col][j] = zp.mul(m[col][j], inv);
        }
        for r in 0..n {
            if r != col && m[r][col] != 0 {
                let factor = m[r][col];
                for j in col..=n {
                    let t = zp.mul(factor, m[col][j]);
                    m[r][j] = zp.sub(m[r][j], t);
                }
            }
        }
    }
    Some((0..n).map(|i| m[i][n]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(p: u64, f: usize) -> OkCtx {
        OkCtx::new(ZpCtx::new(p, 8).unwrap(), f).unwrap()
    }

    #[test]
    fn frobenius_is_ring_map_of_order_f() {
        for (p, f) in [(3u64, 2usize), (5, 2), (7, 2), (5, 3)] {
            let k = ctx(p, f);
            let mut rng: u64 = 0x12345;
            let mut rand_elem = || {
                let c: Vec<u64> = (0..f)
                    .map(|_| {
                        rng = rng.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                        rng % k.zp.pw
                    })
                    .collect();
                OkElem { c }
            };
            for _ in 0..25 {
                let a = rand_elem();
                let b = rand_elem();
                // homomorphism
                assert_eq!(k.frobenius(&k.mul(&a, &b)), k.mul(&k.frobenius(&a), &k.frobenius(&b)));
                assert_eq!(k.frobenius(&k.add(&a, &b)), k.add(&k.frobenius(&a), &k.frobenius(&b)));
                // order f
                let mut x = a.clone();
                for _ in 0..f {
                    x = k.frobenius(&x);
                }
                assert_eq!(x, a);
                // inverse
                assert_eq!(k.frobenius_inv(&k.frobenius(&a)), a);
                // sigma(x) = x^p mod p
                let fr = k.frobenius(&a);
                let xp = k.pow(&a, p);
                for i in 0..f {
                    assert_eq!(fr.c[i] % p, xp.c[i] % p);
                }
            }
            // fixes Z_p
            let z = k.from_u64(1234 % k.zp.pw);
            assert_eq!(k.frobenius(&z), z);
        }
    }

    #[test]
    fn trace_and_norm() {
        let k = ctx(5, 2);
        // trace(1) = f
        assert_eq!(k.trace(&k.one()), 2);
        // trace(u) = -(coefficient of u^{f-1} in m) = -4 mod 5^8
        let tr_u = k.trace(&k.gen());
        assert_eq!(tr_u, k.zp.neg(4));
        // conjugation invariance
        let a = OkElem { c: vec![17, 23] };
        assert_eq!(k.trace(&k.frobenius(&a)), k.trace(&a));
        // norm(u) = (-1)^f * constant term = 2
        assert_eq!(k.norm(&k.gen()), 2);
        // norm multiplicative
        let b = OkElem { c: vec![5, 1] };
        assert_eq!(k.norm(&k.mul(&a, &b)), k.zp.mul(k.norm(&a), k.norm(&b)));
    }

    #[test]
    fn inversion() {
        let k = ctx(3, 2);
        let a = OkElem { c: vec![2, 5] };
        let inv = k.inv(&a).unwrap();
        assert_eq!(k.mul(&a, &inv), k.one());
    }
}
