//! The truncated Iwasawa algebra `Λ = Z_p[Δ] ⊗ Z_p[[Γ_1]]` and its
//! fraction-adjacent extension H(Γ): per-idempotent-component polynomials
//! in `T = γ_1 - 1` mod `(p^w, T^{M_Λ})`, with evaluation at finite-order
//! characters, ℓ-operators, Γ_h-factors, Weierstrass preparation,
//! characteristic ideals and determinant descent.

use crate::cyclo::{CycloCtx, CycloElem};
use crate::unram::OkCtx;
use crate::zp::ZpCtx;
use crate::{Error, Result};

/// scaled Z_p-scalar `p^{-shift} v` known mod `p^prec`
#[derive(Debug, Clone, Copy)]
pub struct ScaledZp {
    pub v: u64,
    pub shift: i32,
    pub prec: i32,
}

impl ScaledZp {
    pub fn val(&self, zp: &ZpCtx) -> i32 {
        (zp.val(self.v) as i32).min(self.prec + self.shift) - self.shift
    }

    pub fn mul(&self, zp: &ZpCtx, o: &Self) -> Self {
        ScaledZp {
            v: zp.mul(self.v, o.v),
            shift: self.shift + o.shift,
            prec: (self.val(zp) + o.prec).min(o.val(zp) + self.prec),
        }
    }

    pub fn unit_part(&self, zp: &ZpCtx) -> Result<(i32, u64)> {
        if self.v == 0 {
            return Err(Error::Precision("zero scalar has no unit part".into()));
        }
        let e = zp.val(self.v);
        Ok((e as i32 - self.shift, zp.div_pk(self.v, e)?))
    }
}

/// polynomial in T mod (p^w, T^len), stored as `p^{-shift} * integral`
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QpPoly {
    pub c: Vec<u64>,
    pub shift: i32,
    pub prec: i32,
}

impl QpPoly {
    pub fn zero(zp: &ZpCtx, len: usize) -> Self {
        QpPoly { c: vec![0; len], shift: 0, prec: zp.w as i32 }
    }

    pub fn konst(zp: &ZpCtx, v: u64, len: usize) -> Self {
        let mut p = Self::zero(zp, len);
        p.c[0] = v % zp.pw;
        p
    }

    pub fn t(zp: &ZpCtx, len: usize) -> Self {
        let mut p = Self::zero(zp, len);
        if len > 1 {
            p.c[1] = 1;
        }
        p
    }

    pub fn len(&self) -> usize {
        self.c.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().all(|&x| x == 0)
    }

    pub fn add(&self, zp: &ZpCtx, o: &Self) -> Self {
        let len = self.len().min(o.len());
        let shift = self.shift.max(o.shift);
        let mut c = vec![0u64; len];
        for (i, slot) in c.iter_mut().enumerate() {
            let a = zp.mul(self.c[i], zp.pow(zp.p, (shift - self.shift) as u64));
            let b = zp.mul(o.c[i], zp.pow(zp.p, (shift - o.shift) as u64));
            *slot = zp.add(a, b);
        }
        QpPoly { c, shift, prec: self.prec.min(o.prec) }
    }

    pub fn neg(&self, zp: &ZpCtx) -> Self {
        QpPoly { c: self.c.iter().map(|&x| zp.neg(x)).collect(), shift: self.shift, prec: self.prec }
    }

    pub fn sub(&self, zp: &ZpCtx, o: &Self) -> Self {
        self.add(zp, &o.neg(zp))
    }

    pub fn min_val(&self, zp: &ZpCtx) -> i32 {
        self.c.iter().map(|&x| zp.val(x)).min().unwrap_or(zp.w) as i32 - self.shift
    }

    pub fn mul(&self, zp: &ZpCtx, o: &Self) -> Self {
        let len = self.len().min(o.len());
        let mut c = vec![0u64; len];
        for i in 0..self.len() {
            if self.c[i] == 0 {
                continue;
            }
            for j in 0..o.len() {
                if i + j >= len {
                    break;
                }
                let t = zp.mul(self.c[i], o.c[j]);
                c[i + j] = zp.add(c[i + j], t);
            }
        }
        let va = self.min_val(zp).min(self.prec);
        let vb = o.min_val(zp).min(o.prec);
        let shift = self.shift + o.shift;
        let prec = (va + o.prec).min(vb + self.prec).min(zp.w as i32 - shift.max(0));
        QpPoly { c, shift, prec }
    }

    pub fn scal(&self, zp: &ZpCtx, s: u64) -> Self {
        QpPoly { c: self.c.iter().map(|&x| zp.mul(x, s)).collect(), shift: self.shift, prec: self.prec }
    }

    pub fn normalize(mut self, zp: &ZpCtx) -> Self {
        if self.shift <= 0 {
            return self;
        }
        let v = self.c.iter().map(|&x| zp.val(x)).min().unwrap_or(0).min(self.shift as u32);
        if v > 0 {
            for x in self.c.iter_mut() {
                *x = zp.div_pk(*x, v).unwrap();
            }
            self.shift -= v as i32;
        }
        self
    }

    /// evaluate at T = u - 1 for a unit u of Z_p
    pub fn eval_unit_minus_one(&self, zp: &ZpCtx, u: u64) -> ScaledZp {
        let x = zp.sub(u % zp.pw, 1);
        let mut acc = 0u64;
        for &ck in self.c.iter().rev() {
            acc = zp.add(zp.mul(acc, x), ck);
        }
        ScaledZp { v: acc, shift: self.shift, prec: self.prec }
    }

    /// evaluate at T = z - 1 for a cyclotomic unit z
    pub fn eval_cyclo(&self, ok: &OkCtx, cy: &CycloCtx, z: &CycloElem) -> Result<crate::series::CycScaled> {
        let mut x = z.clone();
        x.c[0] = ok.sub(&x.c[0], &ok.one());
        let mut acc = cy.zero(ok, z.level)?;
        for &ck in self.c.iter().rev() {
            acc = cy.mul(ok, &acc, &x)?;
            let mut t = cy.zero(ok, z.level)?;
            t.c[0] = ok.from_u64(ck);
            acc = cy.add(ok, &acc, &t);
        }
        Ok(crate::series::CycScaled { v: acc, shift: self.shift, prec: self.prec })
    }

    /// ω_k(T) = (1+T)^{p^k} - 1, a distinguished polynomial of degree p^k
    pub fn omega(zp: &ZpCtx, k: u32, len: usize) -> Self {
        let e = zp.p.pow(k);
        let mut c = vec![0u64; len];
        let mut b: u64 = 1;
        for j in 1..len.min(e as usize + 1) {
            let num = zp.mul(b, zp.reduce((e - j as u64 + 1) as i64));
            let jv = zp.val(zp.reduce(j as i64));
            let ju = zp.div_pk(zp.reduce(j as i64), jv).unwrap();
            b = zp.div_pk(zp.mul(num, zp.inv(ju).unwrap()), jv).unwrap();
            c[j] = b;
        }
        QpPoly { c, shift: 0, prec: zp.w as i32 }
    }
}

/// An element of truncated Λ (H(Γ) when `h_flag`): one polynomial per
/// torsion-idempotent component δ_0, ..., δ_{p-2}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LambdaElem {
    pub comps: Vec<QpPoly>,
    pub h_flag: bool,
}

impl LambdaElem {
    pub fn zero(zp: &ZpCtx, len: usize) -> Self {
        LambdaElem { comps: vec![QpPoly::zero(zp, len); zp.p as usize - 1], h_flag: false }
    }

    pub fn one(zp: &ZpCtx, len: usize) -> Self {
        let mut e = Self::zero(zp, len);
        for c in e.comps.iter_mut() {
            c.c[0] = 1;
        }
        e
    }

    /// δ_i as an element (projector onto component i)
    pub fn idempotent(zp: &ZpCtx, i: usize, len: usize) -> Self {
        let mut e = Self::zero(zp, len);
        e.comps[i].c[0] = 1;
        e
    }

    pub fn add(&self, zp: &ZpCtx, o: &Self) -> Self {
        LambdaElem {
            comps: self.comps.iter().zip(&o.comps).map(|(a, b)| a.add(zp, b)).collect(),
            h_flag: self.h_flag || o.h_flag,
        }
    }

    pub fn mul(&self, zp: &ZpCtx, o: &Self) -> Self {
        LambdaElem {
            comps: self.comps.iter().zip(&o.comps).map(|(a, b)| a.mul(zp, b)).collect(),
            h_flag: self.h_flag || o.h_flag,
        }
    }

    pub fn sub(&self, zp: &ZpCtx, o: &Self) -> Self {
        LambdaElem {
            comps: self.comps.iter().zip(&o.comps).map(|(a, b)| a.sub(zp, b)).collect(),
            h_flag: self.h_flag || o.h_flag,
        }
    }

    /// evaluation at χ^j on the matching component: T ↦ χ(γ_1)^j - 1
    pub fn eval_chi_power(&self, zp: &ZpCtx, chi_gamma1: u64, j: i64) -> ScaledZp {
        let pm1 = zp.p as i64 - 1;
        let comp = j.rem_euclid(pm1) as usize;
        let u = pow_signed(zp, chi_gamma1, j);
        self.comps[comp].eval_unit_minus_one(zp, u)
    }
}

pub fn pow_signed(zp: &ZpCtx, a: u64, e: i64) -> u64 {
    if e >= 0 {
        zp.pow(a, e as u64)
    } else {
        zp.inv(zp.pow(a, (-e) as u64)).expect("unit")
    }
}

/// truncated p-adic log of a 1-unit
pub fn log_unit_arg(zp: &ZpCtx, u: u64) -> u64 {
    let x = zp.sub(u % zp.pw, 1);
    debug_assert!(zp.val(x) >= 1, "log needs a 1-unit");
    let mut acc = 0u64;
    let mut xj = 1u64;
    for j in 1..=(zp.w as u64 + 1) {
        xj = zp.mul(xj, x);
        if xj == 0 {
            break;
        }
        let jv = zp.val(zp.reduce(j as i64));
        let ju = zp.div_pk(zp.reduce(j as i64), jv).unwrap();
        let term = zp.mul(zp.div_pk(xj, jv).unwrap_or(0), zp.inv(ju).unwrap());
        acc = if j % 2 == 1 { zp.add(acc, term) } else { zp.sub(acc, term) };
    }
    acc
}

/// ℓ_m = m - log(1+T)/log χ(γ_1) as one H-flagged component polynomial
pub fn ell_poly(zp: &ZpCtx, chi_gamma1: u64, m: i64, len: usize) -> QpPoly {
    let mut vmax = 0u32;
    let mut k = zp.p;
    while (k as usize) <= len {
        vmax += 1;
        k *= zp.p;
    }
    let logchi = log_unit_arg(zp, chi_gamma1);
    let lv = zp.val(logchi);
    let lu = zp.div_pk(logchi, lv).unwrap();
    let luinv = zp.inv(lu).unwrap();
    let scale = vmax + lv;
    let mut c = vec![0u64; len];
    c[0] = zp.mul(zp.reduce(m), zp.pow(zp.p, scale as u64));
    for (j, slot) in c.iter_mut().enumerate().skip(1) {
        let jv = zp.val(zp.reduce(j as i64));
        let ju = zp.div_pk(zp.reduce(j as i64), jv).unwrap();
        let juinv = zp.inv(ju).unwrap();
        let e = scale as i32 - jv as i32 - lv as i32;
        assert!(e >= 0, "ℓ-operator scale underflow");
        let mag = zp.mul(zp.mul(zp.pow(zp.p, e as u64), juinv), luinv);
        *slot = if j % 2 == 1 { zp.neg(mag) } else { mag };
    }
    QpPoly { c, shift: scale as i32, prec: zp.w as i32 - scale as i32 }
}

/// ℓ_m as a full H(Γ)-element (the same polynomial on every component)
pub fn ell_operator(zp: &ZpCtx, chi_gamma1: u64, m: i64, len: usize) -> LambdaElem {
    let p = ell_poly(zp, chi_gamma1, m, len);
    LambdaElem { comps: vec![p; zp.p as usize - 1], h_flag: true }
}

/// Γ_h(V) = prod_{j > -h} ℓ_{-j}^{dim Fil^j} for filtration data
/// (jump j, dim_{Q_p} Fil^j) with Fil^{-h} full
pub fn gamma_h_factor(zp: &ZpCtx, chi_gamma1: u64, fil_dims: &[(i64, usize)], h: i64, len: usize) -> QpPoly {
    let mut acc = QpPoly::konst(zp, 1, len);
    for &(j, dim) in fil_dims {
        if j <= -h {
            continue;
        }
        let l = ell_poly(zp, chi_gamma1, -j, len);
        for _ in 0..dim {
            acc = acc.mul(zp, &l);
        }
    }
    acc
}

/// Weierstrass data: g = p^mu * unit * dist, dist monic of degree `deg`
/// with p-divisible lower coefficients.
#[derive(Debug, Clone)]
pub struct WeierstrassForm {
    pub mu: i32,
    pub deg: usize,
    pub dist: QpPoly,
    pub unit: QpPoly,
    pub prec: i32,
}

pub fn weierstrass(zp: &ZpCtx, g0: &QpPoly) -> Result<WeierstrassForm> {
    let g = g0.clone().normalize(zp);
    let mv = g.c.iter().map(|&x| zp.val(x)).min().unwrap_or(zp.w);
    if mv >= zp.w {
        return Err(Error::Precision("Weierstrass preparation of zero".into()));
    }
    let mu = mv as i32 - g.shift;
    let mut f = QpPoly {
        c: g.c.iter().map(|&x| zp.div_pk(x, mv).unwrap()).collect(),
        shift: 0,
        prec: g.prec + g.shift - mv as i32,
    };
    let deg = f.c.iter().position(|&x| x % zp.p != 0).expect("unit coefficient exists after scaling");
    let len = f.len();
    let digits = f.prec.min(zp.w as i32);
    if digits <= 0 {
        return Err(Error::Precision("no certified digits for Weierstrass preparation".into()));
    }
    f.prec = digits;
    let mut pdist = QpPoly::zero(zp, len.max(deg + 1));
    pdist.c[deg] = 1;
    let mut unit = QpPoly::zero(zp, len);
    for j in deg..len {
        unit.c[j - deg] = f.c[j] % zp.p;
    }
    let u0 = unit.c[0] % zp.p;
    let u0inv_modp = {
        let mut r = 1u64;
        for _ in 0..zp.p - 2 {
            r = r * u0 % zp.p;
        }
        r
    };
    for digit in 1..digits as u32 {
        let prod = unit.mul(zp, &pdist);
        let diff = f.sub(zp, &prod);
        let pd = zp.pow(zp.p, digit as u64);
        let mut e = vec![0u64; len];
        for j in 0..len.min(diff.len()) {
            if diff.c[j] % pd != 0 {
                return Err(Error::Precision("Weierstrass digit lift failed".into()));
            }
            e[j] = diff.c[j] / pd % zp.p;
        }
        let mut dp = vec![0u64; deg];
        if deg > 0 {
            let mut uinv = vec![0u64; deg];
            uinv[0] = u0inv_modp;
            for k2 in 1..deg {
                let mut acc = 0u64;
                for i in 1..=k2 {
                    let ui = unit.c.get(i).copied().unwrap_or(0) % zp.p;
                    acc = (acc + ui * uinv[k2 - i]) % zp.p;
                }
                uinv[k2] = (zp.p - acc) * u0inv_modp % zp.p;
            }
            for k2 in 0..deg {
                let mut acc = 0u64;
                for i in 0..=k2 {
                    acc = (acc + e[i] * uinv[k2 - i]) % zp.p;
                }
                dp[k2] = acc;
            }
        }
        let mut rem = e.clone();
        for (i, &dpi) in dp.iter().enumerate() {
            if dpi == 0 {
                continue;
            }
            for j in 0..len {
                if i + j >= len {
                    break;
                }
                let t = unit.c[j] % zp.p * dpi % zp.p;
                rem[i + j] = (rem[i + j] + zp.p - t) % zp.p;
            }
        }
        for (j, &r) in rem.iter().enumerate().take(deg) {
            if r != 0 {
                return Err(Error::Precision(format!("Weierstrass lift: residue at T^{j}")));
            }
        }
        for k2 in 0..deg {
            pdist.c[k2] = zp.add(pdist.c[k2], zp.mul(dp[k2], pd));
        }
        for j in deg..len {
            unit.c[j - deg] = zp.add(unit.c[j - deg], zp.mul(rem[j], pd));
        }
    }
    unit.prec = digits;
    pdist.prec = digits;
    pdist.c.truncate(deg + 1);
    Ok(WeierstrassForm { mu, deg, dist: pdist, unit, prec: digits })
}

/// h = q P + r with deg r < deg for a distinguished polynomial P
pub fn divmod_distinguished(zp: &ZpCtx, h: &QpPoly, pdist: &QpPoly, deg: usize) -> (QpPoly, QpPoly) {
    debug_assert_eq!(pdist.c[deg], 1);
    let len = h.len();
    let mut q = QpPoly { c: vec![0; len], shift: h.shift, prec: h.prec };
    let mut r = QpPoly { c: vec![0; deg.max(1)], shift: h.shift, prec: h.prec };
    let mut rem = h.c.clone();
    for digit in 0..zp.w {
        let pd = zp.pow(zp.p, digit as u64);
        let mut qd = vec![0u64; len];
        let mut rd = vec![0u64; deg.max(1)];
        let mut any = false;
        for j in 0..len {
            let d = rem[j] / pd % zp.p;
            if d != 0 {
                any = true;
            }
            if j >= deg {
                qd[j - deg] = d;
            } else {
                rd[j] = d;
            }
        }
        if !any {
            continue;
        }
        for j in 0..len {
            if qd[j] != 0 {
                q.c[j] = zp.add(q.c[j], zp.mul(qd[j], pd));
            }
        }
        for (j, &rdj) in rd.iter().enumerate().take(deg) {
            if rdj != 0 {
                r.c[j] = zp.add(r.c[j], zp.mul(rdj, pd));
            }
        }
        for (i, &qdi) in qd.iter().enumerate() {
            if qdi == 0 {
                continue;
            }
            for k2 in 0..=deg {
                if i + k2 >= len {
                    break;
                }
                let t = zp.mul(zp.mul(qdi, pd), pdist.c[k2]);
                rem[i + k2] = zp.sub(rem[i + k2], t);
            }
        }
        for (j, &rdj) in rd.iter().enumerate().take(deg) {
            if rdj != 0 {
                rem[j] = zp.sub(rem[j], zp.mul(rdj, pd));
            }
        }
    }
    (q, r)
}

/// A characteristic ideal in Weierstrass-normal form, one factor per
/// Λ-component.
#[derive(Debug, Clone)]
pub struct CharIdeal {
    pub comps: Vec<WeierstrassForm>,
}

impl CharIdeal {
    pub fn eq_mod(&self, zp: &ZpCtx, other: &CharIdeal, digits: i32) -> bool {
        if self.comps.len() != other.comps.len() {
            return false;
        }
        for (a, b) in self.comps.iter().zip(&other.comps) {
            if a.mu != b.mu || a.deg != b.deg {
                return false;
            }
            let d = a.dist.sub(zp, &b.dist);
            let dig = digits.min(a.prec).min(b.prec);
            if d.c.iter().any(|&x| ((zp.val(x) as i32) - d.shift) < dig) {
                return false;
            }
        }
        true
    }
}

/// determinant over one component (cofactor expansion; inputs are small)
pub fn poly_det(zp: &ZpCtx, m: &[Vec<QpPoly>]) -> QpPoly {
    let n = m.len();
    assert!(n > 0, "empty determinant");
    if n == 1 {
        return m[0][0].clone();
    }
    let len = m[0][0].len();
    let mut acc = QpPoly::zero(zp, len);
    for (j, entry) in m[0].iter().enumerate() {
        if entry.is_zero() {
            continue;
        }
        let minor: Vec<Vec<QpPoly>> = m[1..]
            .iter()
            .map(|row| row.iter().enumerate().filter(|&(k, _)| k != j).map(|(_, x)| x.clone()).collect())
            .collect();
        let sub = entry.mul(zp, &poly_det(zp, &minor));
        acc = if j % 2 == 0 { acc.add(zp, &sub) } else { acc.sub(zp, &sub) };
    }
    acc
}

/// characteristic ideal of a module presented by a square matrix over Λ
pub fn char_ideal(zp: &ZpCtx, presentation: &[Vec<LambdaElem>]) -> Result<CharIdeal> {
    let ncomp = zp.p as usize - 1;
    let mut comps = Vec::with_capacity(ncomp);
    for i in 0..ncomp {
        let m: Vec<Vec<QpPoly>> =
            presentation.iter().map(|row| row.iter().map(|e| e.comps[i].clone()).collect()).collect();
        let det = poly_det(zp, &m);
        comps.push(weierstrass(zp, &det)?);
    }
    Ok(CharIdeal { comps })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zp() -> ZpCtx {
        ZpCtx::new(3, 12).unwrap()
    }

    #[test]
    fn idempotent_algebra() {
        let zp = zp();
        let len = 16;
        let mut sum = LambdaElem::zero(&zp, len);
        for i in 0..2 {
            let d = LambdaElem::idempotent(&zp, i, len);
            assert_eq!(d.mul(&zp, &d), d, "idempotent");
            for j in 0..2 {
                if i != j {
                    let e = LambdaElem::idempotent(&zp, j, len);
                    assert!(d.mul(&zp, &e).comps.iter().all(|c| c.is_zero()), "orthogonal");
                }
            }
            sum = sum.add(&zp, &d);
        }
        assert_eq!(sum, LambdaElem::one(&zp, len));
    }

    #[test]
    fn ell_operator_values() {
        let zp = zp();
        let chi = 4u64; // 1 + p
        let len = 20;
        let l3 = ell_poly(&zp, chi, 3, len);
        let l0 = ell_poly(&zp, chi, 0, len);
        let d = l3.sub(&zp, &l0);
        let v = d.eval_unit_minus_one(&zp, 1);
        assert_eq!(zp.val(zp.sub(v.v, zp.mul(3, zp.pow(zp.p, v.shift as u64)))), zp.w);
        for (m, j) in [(0i64, 1i64), (2, 3), (5, -2)] {
            let l = ell_poly(&zp, chi, m, len);
            let u = pow_signed(&zp, chi, j);
            let v = l.eval_unit_minus_one(&zp, u);
            let expect = zp.mul(zp.reduce(m - j), zp.pow(zp.p, v.shift as u64));
            let diff = zp.sub(v.v, expect);
            assert!(
                zp.val(diff) as i32 - v.shift >= v.prec.min(8),
                "ℓ_{m} at χ^{j}: valuation {}",
                zp.val(diff) as i32 - v.shift
            );
        }
    }

    #[test]
    fn weierstrass_preparation() {
        let zp = zp();
        let len = 16;
        let mut dist = QpPoly::zero(&zp, len);
        dist.c[0] = 3;
        dist.c[1] = 3;
        dist.c[2] = 1;
        let mut unit = QpPoly::zero(&zp, len);
        unit.c[0] = 2;
        unit.c[1] = 1;
        unit.c[2] = 7;
        let g = dist.mul(&zp, &unit).scal(&zp, 9);
        let w = weierstrass(&zp, &g).unwrap();
        assert_eq!(w.mu, 2);
        assert_eq!(w.deg, 2);
        for j in 0..=2 {
            assert_eq!(w.dist.c[j], dist.c[j], "distinguished coefficient {j}");
        }
        let back = w.unit.mul(&zp, &w.dist).scal(&zp, zp.pow(3, w.mu as u64));
        let d = back.sub(&zp, &g);
        assert!(d.c.iter().all(|&x| x == 0));
    }

    #[test]
    fn divmod_by_distinguished() {
        let zp = zp();
        let len = 16;
        let mut pd = QpPoly::zero(&zp, len);
        pd.c[0] = 6;
        pd.c[1] = 3;
        pd.c[2] = 1;
        let mut h = QpPoly::zero(&zp, len);
        for (j, v) in [(0usize, 17u64), (1, 5), (3, 2), (5, 11)] {
            h.c[j] = v;
        }
        let (q, r) = divmod_distinguished(&zp, &h, &pd, 2);
        let mut back = q.mul(&zp, &pd);
        let rpad = QpPoly {
            c: {
                let mut c = r.c.clone();
                c.resize(len, 0);
                c
            },
            shift: r.shift,
            prec: r.prec,
        };
        back = back.add(&zp, &rpad);
        let d = back.sub(&zp, &h);
        for j in 0..len - 2 {
            assert_eq!(d.c[j], 0, "coefficient {j}");
        }
    }

    #[test]
    fn char_ideal_of_twisted_line() {
        let zp = zp();
        let len = 16;
        let chi = 4u64;
        let j = 1i64;
        let mut f = LambdaElem::zero(&zp, len);
        let comp = (j.rem_euclid(2)) as usize;
        f.comps[comp] = QpPoly::t(&zp, len).neg(&zp);
        f.comps[comp].c[0] = zp.sub(zp.pow(chi, j as u64), 1);
        f.comps[1 - comp] = QpPoly::konst(&zp, 1, len);
        let ci = char_ideal(&zp, &[vec![f]]).unwrap();
        assert_eq!(ci.comps[comp].deg, 1);
        assert_eq!(ci.comps[comp].mu, 0);
        let c0 = ci.comps[comp].dist.c[0];
        assert_eq!(c0, zp.neg(zp.sub(zp.pow(chi, j as u64), 1)));
        assert_eq!(ci.comps[1 - comp].deg, 0);
    }

    #[test]
    fn omega_polynomial() {
        let zp = zp();
        let om = QpPoly::omega(&zp, 1, 16);
        assert_eq!(&om.c[..5], &[0, 3, 3, 1, 0]);
    }
}
