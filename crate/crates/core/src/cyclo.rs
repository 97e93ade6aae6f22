//! The cyclotomic layers `O_{K_n} = O_K[z]/(Φ_{p^n}(1+z))`, with the
//! Galois action of `(Z/p^n)^×`, compatible embeddings between levels,
//! and the trace down to O_K.
//!
//! `1 + z` is the chosen primitive p^n-th root of unity at each level;
//! level m embeds into level n (m <= n) by `z ↦ (1+z)^{p^{n-m}} - 1`,
//! which makes the chosen roots into a compatible system.

use crate::unram::{OkCtx, OkElem};
use crate::{Error, Result};

/// An element of O_K[ζ_{p^level}] as a polynomial in z of degree < (p-1)p^{level-1}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycloElem {
    pub level: u32,
    pub c: Vec<OkElem>,
}

/// Reduction data for one level.
#[derive(Debug, Clone)]
pub struct CycloLevel {
    pub level: u32,
    pub degree: usize,
    /// Φ_{p^level}(1+z), monic of degree `degree`, constant term first.
    pub modulus: Vec<u64>,
}

#[derive(Debug, Clone)]
pub struct CycloCtx {
    pub levels: Vec<CycloLevel>,
}

impl CycloCtx {
    pub fn new(ok: &OkCtx, n_max: u32) -> Result<Self> {
        let p = ok.zp.p;
        let mut levels = Vec::new();
        for n in 1..=n_max {
            let degree = ((p - 1) * p.pow(n - 1)) as usize;
            // Φ_{p^n}(1+z) = sum_{i=0}^{p-1} (1+z)^{i p^{n-1}}, expanded with
            // Pascal rows (degrees here are at most a few hundred).
            let q = p.pow(n - 1) as usize;
            let mut coeffs = vec![0u64; degree + 1];
            coeffs[0] = 1; // i = 0 term
            let mut row = vec![0u64; degree + 1];
            row[0] = 1;
            let mut e = 0usize;
            for _ in 1..p as usize {
                let target = e + q;
                while e < target {
                    let mut next = vec![0u64; degree + 1];
                    next[0] = row[0];
                    for j in 1..=degree {
                        next[j] = ok.zp.add(row[j], row[j - 1]);
                    }
                    row = next;
                    e += 1;
                }
                for j in 0..=degree {
                    coeffs[j] = ok.zp.add(coeffs[j], row[j]);
                }
            }
            if coeffs[degree] != 1 {
                return Err(Error::Invalid("cyclotomic modulus not monic".into()));
            }
            levels.push(CycloLevel { level: n, degree, modulus: coeffs });
        }
        Ok(CycloCtx { levels })
    }

    pub fn level(&self, n: u32) -> Result<&CycloLevel> {
        self.levels
            .get(n as usize - 1)
            .ok_or_else(|| Error::Invalid(format!("cyclotomic level {n} exceeds configured maximum")))
    }

    pub fn zero(&self, ok: &OkCtx, n: u32) -> Result<CycloElem> {
        let lv = self.level(n)?;
        Ok(CycloElem { level: n, c: vec![ok.zero(); lv.degree] })
    }

    pub fn from_ok(&self, ok: &OkCtx, n: u32, a: &OkElem) -> Result<CycloElem> {
        let mut e = self.zero(ok, n)?;
        e.c[0] = a.clone();
        Ok(e)
    }

    pub fn one(&self, ok: &OkCtx, n: u32) -> Result<CycloElem> {
        self.from_ok(ok, n, &ok.one())
    }

    /// ζ_{p^n} = 1 + z at level n.
    pub fn zeta(&self, ok: &OkCtx, n: u32) -> Result<CycloElem> {
        let mut e = self.one(ok, n)?;
        if e.c.len() > 1 {
            e.c[1] = ok.one();
        } else {
            return Err(Error::Invalid("level-1 ring has degree >= 2 for p >= 3".into()));
        }
        Ok(e)
    }

    pub fn add(&self, ok: &OkCtx, a: &CycloElem, b: &CycloElem) -> CycloElem {
        debug_assert_eq!(a.level, b.level);
        CycloElem {
            level: a.level,
            c: a.c.iter().zip(&b.c).map(|(x, y)| ok.add(x, y)).collect(),
        }
    }

    pub fn sub(&self, ok: &OkCtx, a: &CycloElem, b: &CycloElem) -> CycloElem {
        debug_assert_eq!(a.level, b.level);
        CycloElem {
            level: a.level,
            c: a.c.iter().zip(&b.c).map(|(x, y)| ok.sub(x, y)).collect(),
        }
    }

    pub fn scal(&self, ok: &OkCtx, s: &OkElem, a: &CycloElem) -> CycloElem {
        CycloElem { level: a.level, c: a.c.iter().map(|x| ok.mul(s, x)).collect() }
    }

    pub fn is_zero(&self, ok: &OkCtx, a: &CycloElem) -> bool {
        a.c.iter().all(|x| ok.is_zero(x))
    }

    pub fn mul(&self, ok: &OkCtx, a: &CycloElem, b: &CycloElem) -> Result<CycloElem> {
        debug_assert_eq!(a.level, b.level);
        let lv = self.level(a.level)?;
        let d = lv.degree;
        let mut prod = vec![ok.zero(); 2 * d - 1];
        for i in 0..d {
            if ok.is_zero(&a.c[i]) {
                continue;
            }
            for j in 0..d {
                if ok.is_zero(&b.c[j]) {
                    continue;
                }
                let t = ok.mul(&a.c[i], &b.c[j]);
                prod[i + j] = ok.add(&prod[i + j], &t);
            }
        }
        for k in (d..2 * d - 1).rev() {
            if ok.is_zero(&prod[k]) {
                continue;
            }
            let lead = prod[k].clone();
            prod[k] = ok.zero();
            for j in 0..d {
                if lv.modulus[j] == 0 {
                    continue;
                }
                let t = ok.scal(lv.modulus[j], &lead);
                prod[k - d + j] = ok.sub(&prod[k - d + j], &t);
            }
        }
        prod.truncate(d);
        Ok(CycloElem { level: a.level, c: prod })
    }

    pub fn pow(&self, ok: &OkCtx, a: &CycloElem, mut e: u64) -> Result<CycloElem> {
        let mut base = a.clone();
        let mut r = self.one(ok, a.level)?;
        while e > 0 {
            if e & 1 == 1 {
                r = self.mul(ok, &r, &base)?;
            }
            base = self.mul(ok, &base, &base)?;
            e >>= 1;
        }
        Ok(r)
    }

    /// (1+z)^a at level n.
    pub fn zeta_pow(&self, ok: &OkCtx, n: u32, a: u64) -> Result<CycloElem> {
        self.pow(ok, &self.zeta(ok, n)?, a)
    }

    /// Coefficient-wise Frobenius of O_K (fixes z).
    pub fn frobenius_coeffs(&self, ok: &OkCtx, a: &CycloElem, e: i64) -> CycloElem {
        CycloElem { level: a.level, c: a.c.iter().map(|x| ok.frobenius_pow(x, e)).collect() }
    }

    /// Galois action ζ ↦ ζ^a for a prime to p (acts trivially on O_K).
    pub fn galois(&self, ok: &OkCtx, x: &CycloElem, a: u64) -> Result<CycloElem> {
        let n = x.level;
        let za = self.zeta_pow(ok, n, a)?; // (1+z)^a
        // evaluate x's polynomial at (1+z)^a - 1 by Horner
        let mut w = self.zero(ok, n)?;
        w.c[0] = ok.from_i64(-1);
        let arg = self.add(ok, &za, &w); // (1+z)^a - 1
        let mut acc = self.zero(ok, n)?;
        for i in (0..x.c.len()).rev() {
            acc = self.mul(ok, &acc, &arg)?;
            let mut t = self.zero(ok, n)?;
            t.c[0] = x.c[i].clone();
            acc = self.add(ok, &acc, &t);
        }
        Ok(acc)
    }

    /// Embed a level-m element into level n >= m via z ↦ (1+z)^{p^{n-m}} - 1.
    pub fn embed(&self, ok: &OkCtx, x: &CycloElem, n: u32) -> Result<CycloElem> {
        let m = x.level;
        if n < m {
            return Err(Error::Invalid("cannot embed downward".into()));
        }
        if n == m {
            return Ok(x.clone());
        }
        let e = ok.zp.p.pow(n - m);
        let zp_n = self.zeta_pow(ok, n, e)?;
        let mut w = self.zero(ok, n)?;
        w.c[0] = ok.from_i64(-1);
        let arg = self.add(ok, &zp_n, &w);
        let mut acc = self.zero(ok, n)?;
        for i in (0..x.c.len()).rev() {
            acc = self.mul(ok, &acc, &arg)?;
            let mut t = self.zero(ok, n)?;
            t.c[0] = x.c[i].clone();
            acc = self.add(ok, &acc, &t);
        }
        Ok(acc)
    }

    /// Tr_{K_n/K}: sum over Gal(K_n/K) = (Z/p^n)^× acting by ζ ↦ ζ^a.
    pub fn trace_to_k(&self, ok: &OkCtx, x: &CycloElem) -> Result<OkElem> {
        let n = x.level;
        let pn = ok.zp.p.pow(n);
        let mut acc = self.zero(ok, n)?;
        for a in 1..pn {
            if a % ok.zp.p == 0 {
                continue;
            }
            let g = self.galois(ok, x, a)?;
            acc = self.add(ok, &acc, &g);
        }
        for i in 1..acc.c.len() {
            if !ok.is_zero(&acc.c[i]) {
                return Err(Error::Invalid("trace did not land in O_K".into()));
            }
        }
        Ok(acc.c[0].clone())
    }

    /// Relative trace K_n -> K_m (m <= n): sum over Gal(K_n/K_m) = 1 + p^m Z / p^n.
    pub fn trace_to_level(&self, ok: &OkCtx, x: &CycloElem, m: u32) -> Result<CycloElem> {
        let n = x.level;
        if m > n {
            return Err(Error::Invalid("trace target above source".into()));
        }
        if m == n {
            return Ok(x.clone());
        }
        let pn = ok.zp.p.pow(n);
        let pm = ok.zp.p.pow(m);
        let mut acc = self.zero(ok, n)?;
        let mut a = 1u64;
        loop {
            let g = self.galois(ok, x, a)?;
            acc = self.add(ok, &acc, &g);
            a = (a + pm) % pn;
            if a == 1 {
                break;
            }
        }
        // acc is Gal(K_n/K_m)-invariant; express in level-m coordinates by
        // solving against the embedded level-m power basis.
        self.restrict(ok, &acc, m)
    }

    /// Express a Galois-invariant level-n element in level-m coordinates.
    pub fn restrict(&self, ok: &OkCtx, x: &CycloElem, m: u32) -> Result<CycloElem> {
        let n = x.level;
        let lvm = self.level(m)?;
        let dm = lvm.degree;
        let dn = self.level(n)?.degree;
        // basis: embeddings of z_m^j, j < dm
        let mut zm = self.zero(ok, m)?;
        if zm.c.len() > 1 {
            zm.c[1] = ok.one();
        }
        let zm_n = self.embed(ok, &zm, n)?;
        let mut basis = Vec::with_capacity(dm);
        let mut acc = self.one(ok, n)?;
        for _ in 0..dm {
            basis.push(acc.clone());
            acc = self.mul(ok, &acc, &zm_n)?;
        }
        // solve the (dn x dm) system basis * c = x over O_K coordinates;
        // the embedded basis is unimodular-triangular enough for Gaussian
        // elimination with unit pivots on the O_K-coordinate expansion.
        let zp = &ok.zp;
        let f = ok.f;
        let rows = dn * f;
        let cols = dm * f;
        let mut mat = vec![vec![0u64; cols + 1]; rows];
        for (bj, b) in basis.iter().enumerate() {
            for i in 0..dn {
                for fi in 0..f {
                    for fj in 0..f {
                        // multiplication by O_K scalar c: contributes c * u^fj coordinates
                        // column index: bj * f + fj ; row: i * f + fi
                        // entry: coefficient of u^fi in b.c[i] * u^fj
                        let mut uj = ok.zero();
                        uj.c[fj] = 1;
                        let prod = ok.mul(&b.c[i], &uj);
                        mat[i * f + fi][bj * f + fj] = prod.c[fi];
                    }
                }
            }
        }
        for i in 0..dn {
            for fi in 0..f {
                mat[i * f + fi][cols] = x.c[i].c[fi];
            }
        }
        let sol = gauss_solve_rect(zp, &mut mat, rows, cols)
            .ok_or_else(|| Error::Invalid("element not in the requested subfield".into()))?;
        let mut out = self.zero(ok, m)?;
        for j in 0..dm {
            for fj in 0..f {
                out.c[j].c[fj] = sol[j * f + fj];
            }
        }
        Ok(out)
    }

    /// Evaluate the level-n cyclotomic polynomial at an element (for tests).
    pub fn eval_cyclotomic(&self, ok: &OkCtx, n: u32, x: &CycloElem) -> Result<CycloElem> {
        let lv = self.level(n)?;
        let mut acc = self.zero(ok, x.level)?;
        // Φ(1+z) coefficients are in Z; evaluate at x where "z" := x
        for k in (0..=lv.degree).rev() {
            acc = self.mul(ok, &acc, x)?;
            let mut t = self.zero(ok, x.level)?;
            t.c[0] = ok.from_u64(lv.modulus[k]);
            acc = self.add(ok, &acc, &t);
        }
        Ok(acc)
    }

    /// min valuation over O_K coordinates: (e_n * v_p)(x), the valuation in
    /// the ramified normalization where v(z) = 1 at level 1... here simply
    /// the p-valuation floor of all coordinates (integral model).
    pub fn coord_val(&self, ok: &OkCtx, x: &CycloElem) -> u32 {
        x.c.iter().map(|c| ok.val(c)).min().unwrap_or(ok.zp.w)
    }
}

/// Gaussian elimination for a rectangular system with unit pivots; returns
/// one solution of M x = b (last column) if it exists.
fn gauss_solve_rect(zp: &crate::zp::ZpCtx, m: &mut [Vec<u64>], rows: usize, cols: usize) -> Option<Vec<u64>> {
    let mut pivot_of_col = vec![usize::MAX; cols];
    let mut r = 0;
    for c in 0..cols {
        if r >= rows {
            break;
        }
        let piv = (r..rows).find(|&i| m[i][c] % zp.p != 0);
        let piv = match piv {
            Some(i) => i,
            None => continue,
        };
        m.swap(r, piv);
        let inv = zp.inv(m[r][c]).ok()?;
        for j in c..=cols {
            m[r][j] = zp.mul(m[r][j], inv);
        }
        for i in 0..rows {
            if i != r && m[i][c] != 0 {
                let factor = m[i][c];
                for j in c..=cols {
                    let t = zp.mul(factor, m[r][j]);
                    m[i][j] = zp.sub(m[i][j], t);
                }
            }
        }
        pivot_of_col[c] = r;
        r += 1;
    }
    // consistency: remaining rows must have zero rhs
    for i in r..rows {
        if m[i][cols] != 0 {
            return None;
        }
    }
    let mut x = vec![0u64; cols];
    for c in 0..cols {
        if pivot_of_col[c] != usize::MAX {
            x[c] = m[pivot_of_col[c]][cols];
        }
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zp::ZpCtx;

    fn setup(p: u64, f: usize, n_max: u32) -> (OkCtx, CycloCtx) {
        let ok = OkCtx::new(ZpCtx::new(p, 8).unwrap(), f).unwrap();
        let cy = CycloCtx::new(&ok, n_max).unwrap();
        (ok, cy)
    }

    #[test]
    fn cyclotomic_relations() {
        let (ok, cy) = setup(3, 1, 2);
        // Φ_{p^n}(ζ_{p^n}) = 0 exactly
        for n in 1..=2 {
            let z = cy.zeta(&ok, n).unwrap();
            let mut zm1 = z.clone();
            zm1.c[0] = ok.sub(&zm1.c[0], &ok.one()); // z itself
            let v = cy.eval_cyclotomic(&ok, n, &zm1).unwrap();
            assert!(cy.is_zero(&ok, &v), "cyclotomic polynomial must vanish at level {n}");
        }
        // (1+z)^{p^n} = 1, (1+z)^{p^{n-1}} != 1
        let z2 = cy.zeta(&ok, 2).unwrap();
        assert_eq!(cy.pow(&ok, &z2, 9).unwrap(), cy.one(&ok, 2).unwrap());
        assert_ne!(cy.pow(&ok, &z2, 3).unwrap(), cy.one(&ok, 2).unwrap());
    }

    #[test]
    fn compatible_system_and_traces() {
        let (ok, cy) = setup(3, 1, 2);
        // zeta(2)^p maps to zeta(1): embed zeta(1) and compare
        let z1 = cy.zeta(&ok, 1).unwrap();
        let z2p = cy.pow(&ok, &cy.zeta(&ok, 2).unwrap(), 3).unwrap();
        assert_eq!(cy.embed(&ok, &z1, 2).unwrap(), z2p);
        // trace_{K_1/K}(1) = p - 1
        let one = cy.one(&ok, 1).unwrap();
        assert_eq!(cy.trace_to_k(&ok, &one).unwrap(), ok.from_u64(2));
        // trace_{K_1/K}(zeta_p) = -1
        let z = cy.zeta(&ok, 1).unwrap();
        assert_eq!(cy.trace_to_k(&ok, &z).unwrap(), ok.from_i64(-1));
        // norm of (zeta(1) - 1) from K_1 to K equals p: product of conjugates
        let mut zm1 = z.clone();
        zm1.c[0] = ok.sub(&zm1.c[0], &ok.one());
        let mut prod = cy.one(&ok, 1).unwrap();
        for a in [1u64, 2] {
            let g = cy.galois(&ok, &zm1, a).unwrap();
            prod = cy.mul(&ok, &prod, &g).unwrap();
        }
        assert_eq!(prod, cy.from_ok(&ok, 1, &ok.from_u64(3)).unwrap());
    }

    #[test]
    fn relative_trace_down_one_level() {
        let (ok, cy) = setup(3, 2, 2);
        // Tr_{K_2/K_1}(zeta_9) = sum of zeta_9^a over a in {1, 4, 7} = zeta_9(1 + z3-powers)...
        let z2 = cy.zeta(&ok, 2).unwrap();
        let tr = cy.trace_to_level(&ok, &z2, 1).unwrap();
        // the three conjugates ζ,ζ^4,ζ^7 = ζ(1 + ζ_3 + ζ_3^2) = 0
        assert!(cy.is_zero(&ok, &tr));
        // and Tr(zeta_9^3) = 3 * zeta_3
        let z2c = cy.pow(&ok, &z2, 3).unwrap();
        let tr3 = cy.trace_to_level(&ok, &z2c, 1).unwrap();
        let expect = cy.scal(&ok, &ok.from_u64(3), &cy.zeta(&ok, 1).unwrap());
        assert_eq!(tr3, expect);
    }
}
