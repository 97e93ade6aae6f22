//! Characters of `G_n = Gal(K_n/K) ≅ (Z/p^n)^×`, Gauss sums, local
//! ε-constants of abelian and crystalline data, Γ*-factors, and the
//! β-trivialization element of the group ring.
//!
//! Character values of p-power order live in the cyclotomic layer
//! `O_K[ζ_{p^{n-1}}]`; Gauss sums additionally need `ζ_{p^{a(η)}}`, so all
//! value-ring work happens at the level covering both.

use crate::cyclo::CycloCtx;
use crate::repn::FilteredPhiModule;
use crate::series::{CycScaled, ScaledOk};
use crate::unram::OkCtx;
use crate::zp::{PadicScalar, ZpCtx};
use crate::Result;
use std::collections::BTreeMap;

/// A character of (Z/p^n)^×: tame Teichmüller exponent and wild exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CharacterOfGn {
    pub level: u32,
    /// exponent of the Teichmüller character, mod p-1
    pub tame: u32,
    /// wild exponent mod p^{level-1}
    pub wild: u64,
}

impl CharacterOfGn {
    pub fn trivial(level: u32) -> Self {
        CharacterOfGn { level, tame: 0, wild: 0 }
    }

    pub fn is_trivial(&self) -> bool {
        self.tame == 0 && self.wild == 0
    }

    pub fn inverse(&self, p: u64) -> Self {
        let pm1 = (p - 1) as u32;
        let wild_mod = p.pow(self.level - 1);
        CharacterOfGn {
            level: self.level,
            tame: (pm1 - self.tame % pm1) % pm1,
            wild: (wild_mod - self.wild % wild_mod) % wild_mod,
        }
    }

    /// conductor exponent a(η): 0 for trivial, 1 for tame-only, else
    /// level - v_p(wild)
    pub fn conductor(&self, p: u64) -> u32 {
        if self.wild != 0 {
            let mut v = 0u32;
            let mut w = self.wild;
            while w % p == 0 {
                w /= p;
                v += 1;
            }
            self.level - v
        } else if self.tame != 0 {
            1
        } else {
            0
        }
    }

    pub fn all(p: u64, level: u32) -> Vec<CharacterOfGn> {
        let mut out = Vec::new();
        for tame in 0..(p - 1) as u32 {
            for wild in 0..p.pow(level - 1) {
                out.push(CharacterOfGn { level, tame, wild });
            }
        }
        out
    }
}

/// The fixed value ring for character computations: `O_K[ζ_{p^L}]` with a
/// discrete-log table for 1 + p.
pub struct ValueRing<'a> {
    pub ok: &'a OkCtx,
    pub cy: &'a CycloCtx,
    pub level: u32,
    dlog: Vec<u64>,
    dlog_level: u32,
}

impl<'a> ValueRing<'a> {
    pub fn new(ok: &'a OkCtx, cy: &'a CycloCtx, level: u32, dlog_level: u32) -> Result<Self> {
        let zp = &ok.zp;
        let pn = zp.p.pow(dlog_level);
        let mut dlog = vec![0u64; pn as usize];
        let base = zp.cap(1 + zp.p, dlog_level);
        let mut x = 1u64;
        for e in 0..pn {
            if (x as usize) < dlog.len() {
                dlog[x as usize] = e;
            }
            x = x * base % pn;
            if x == 1 {
                break;
            }
        }
        cy.level(level)?;
        Ok(ValueRing { ok, cy, level, dlog, dlog_level })
    }

    pub fn one(&self) -> Result<CycScaled> {
        Ok(CycScaled { v: self.cy.one(self.ok, self.level)?, shift: 0, prec: self.ok.zp.w as i32 })
    }

    pub fn zero(&self) -> Result<CycScaled> {
        Ok(CycScaled { v: self.cy.zero(self.ok, self.level)?, shift: 0, prec: self.ok.zp.w as i32 })
    }

    pub fn from_scaled_ok(&self, s: &ScaledOk) -> Result<CycScaled> {
        Ok(CycScaled { v: self.cy.from_ok(self.ok, self.level, &s.c)?, shift: s.shift, prec: s.prec })
    }

    pub fn add(&self, a: &CycScaled, b: &CycScaled) -> CycScaled {
        let s = a.shift.max(b.shift);
        let pa = self.ok.zp.pow(self.ok.zp.p, (s - a.shift) as u64);
        let pb = self.ok.zp.pow(self.ok.zp.p, (s - b.shift) as u64);
        let av = self.cy.scal(self.ok, &self.ok.from_u64(pa), &a.v);
        let bv = self.cy.scal(self.ok, &self.ok.from_u64(pb), &b.v);
        CycScaled { v: self.cy.add(self.ok, &av, &bv), shift: s, prec: a.prec.min(b.prec) }
    }

    pub fn mul(&self, a: &CycScaled, b: &CycScaled) -> Result<CycScaled> {
        let va = (self.cy.coord_val(self.ok, &a.v) as i32 - a.shift).min(a.prec);
        let vb = (self.cy.coord_val(self.ok, &b.v) as i32 - b.shift).min(b.prec);
        let shift = a.shift + b.shift;
        Ok(CycScaled {
            v: self.cy.mul(self.ok, &a.v, &b.v)?,
            shift,
            prec: (va + b.prec).min(vb + a.prec).min(self.ok.zp.w as i32 - shift.max(0)),
        })
    }

    pub fn neg(&self, a: &CycScaled) -> CycScaled {
        CycScaled { v: self.cy.scal(self.ok, &self.ok.from_i64(-1), &a.v), shift: a.shift, prec: a.prec }
    }

    pub fn scal_ok(&self, s: &ScaledOk, a: &CycScaled) -> CycScaled {
        let shift = a.shift + s.shift;
        let va = (self.cy.coord_val(self.ok, &a.v) as i32 - a.shift).min(a.prec);
        let vs = (self.ok.val(&s.c) as i32 - s.shift).min(s.prec);
        CycScaled {
            v: self.cy.scal(self.ok, &s.c, &a.v),
            shift,
            prec: (va + s.prec).min(vs + a.prec).min(self.ok.zp.w as i32 - shift.max(0)),
        }
    }

    pub fn val(&self, a: &CycScaled) -> i32 {
        (self.cy.coord_val(self.ok, &a.v) as i32).min(a.prec + a.shift) - a.shift
    }

    pub fn is_zero_mod(&self, a: &CycScaled, digits: i32) -> bool {
        self.val(a) >= digits.min(a.prec)
    }

    pub fn eq_mod(&self, a: &CycScaled, b: &CycScaled, digits: i32) -> bool {
        let d = self.add(a, &self.neg(b));
        self.is_zero_mod(&d, digits)
    }

    /// ζ_{p^k}^e inside the level-L ring (k <= L)
    pub fn zeta_pow(&self, k: u32, e: u64) -> Result<CycScaled> {
        let zp = &self.ok.zp;
        let lift = zp.p.pow(self.level - k);
        let exp = e % zp.p.pow(k) * lift % zp.p.pow(self.level);
        let v = self.cy.zeta_pow(self.ok, self.level, exp)?;
        Ok(CycScaled { v, shift: 0, prec: zp.w as i32 })
    }

    /// η(a) for a prime to p
    pub fn char_value(&self, eta: &CharacterOfGn, a: u64) -> Result<CycScaled> {
        let zp = &self.ok.zp;
        let pn = zp.p.pow(self.dlog_level);
        let a = a % pn;
        debug_assert!(a % zp.p != 0);
        let teich = zp.teichmuller(a);
        let tame_val = zp.pow(teich, eta.tame as u64);
        let unit1 = zp.cap(zp.mul(a, zp.inv(teich).unwrap()), self.dlog_level);
        let e = self.dlog[unit1 as usize];
        let mut out = if eta.level >= 2 && eta.wild != 0 {
            let modw = zp.p.pow(eta.level - 1);
            self.zeta_pow(eta.level - 1, eta.wild % modw * (e % modw) % modw)?
        } else {
            self.one()?
        };
        out.v = self.cy.scal(self.ok, &self.ok.from_u64(tame_val), &out.v);
        Ok(out)
    }

    /// Galois coefficient twist ζ ↦ ζ^a (fixes O_K)
    pub fn galois(&self, x: &CycScaled, a: u64) -> Result<CycScaled> {
        Ok(CycScaled { v: self.cy.galois(self.ok, &x.v, a)?, shift: x.shift, prec: x.prec })
    }
}

/// τ(η) = Σ_{a ∈ (Z/p^k)^×} η^{-1}(a) ζ_{p^k}^a with k = a(η); τ(trivial) = 1
pub fn gauss_sum(vr: &ValueRing, eta: &CharacterOfGn) -> Result<CycScaled> {
    let p = vr.ok.zp.p;
    let k = eta.conductor(p);
    if k == 0 {
        return vr.one();
    }
    let pk = p.pow(k);
    let inv = eta.inverse(p);
    let mut acc = vr.zero()?;
    for a in 1..pk {
        if a % p == 0 {
            continue;
        }
        let cv = vr.char_value(&inv, a)?;
        let z = vr.zeta_pow(k, a)?;
        let term = vr.mul(&cv, &z)?;
        acc = vr.add(&acc, &term);
    }
    Ok(acc)
}

/// The finite-sum form of the abelian ε-integral: the sum over residues
/// u ∈ O_K/p^k of η^{-1}(Nm u) ζ_{p^k}^{Tr u}, with η^{-1} extended by zero
/// off the units (k = a(η) >= 1; the unramified case is normalized to 1).
pub fn tate_integral_oracle(vr: &ValueRing, eta: &CharacterOfGn) -> Result<CycScaled> {
    let ok = vr.ok;
    let p = ok.zp.p;
    let k = eta.conductor(p);
    if k == 0 {
        return vr.one();
    }
    let pk = p.pow(k);
    let inv = eta.inverse(p);
    let f = ok.f;
    let mut acc = vr.zero()?;
    let total = pk.pow(f as u32);
    for idx in 0..total {
        let mut u = ok.zero();
        let mut t = idx;
        for c in u.c.iter_mut().take(f) {
            *c = t % pk;
            t /= pk;
        }
        let nm = ok.norm(&u) % pk;
        if nm % p == 0 {
            continue;
        }
        let tr = ok.trace(&u) % pk;
        let cv = vr.char_value(&inv, nm)?;
        let z = vr.zeta_pow(k, tr)?;
        let term = vr.mul(&cv, &z)?;
        acc = vr.add(&acc, &term);
    }
    Ok(acc)
}

/// ε(η, ψ_K, μ_K) in closed form: (-1)^{(f-1)a(η)} τ(η)^f
pub fn epsilon_abelian(vr: &ValueRing, eta: &CharacterOfGn) -> Result<CycScaled> {
    let f = vr.ok.f as u32;
    let a = eta.conductor(vr.ok.zp.p);
    let tau = gauss_sum(vr, eta)?;
    let mut acc = vr.one()?;
    for _ in 0..f {
        acc = vr.mul(&acc, &tau)?;
    }
    if (f - 1) * a % 2 == 1 {
        acc = vr.neg(&acc);
    }
    Ok(acc)
}

/// λ(L/K, ψ, μ_L, μ_K) = (-1)^{(f-1) n(ψ)} for unramified L/K of degree f
pub fn lambda_unramified(f: u32, n_psi: i64) -> i64 {
    if (f as i64 - 1) * n_psi % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Γ*(i) = (i-1)! for i > 0, (-1)^i / (-i)! for i <= 0
pub fn gamma_star(zp: &ZpCtx, i: i64) -> PadicScalar {
    if i > 0 {
        factorial(zp, (i - 1) as u64)
    } else {
        let f = factorial(zp, (-i) as u64);
        let mut inv = f.inv(zp).expect("factorial is nonzero");
        if i % 2 != 0 {
            inv = inv.neg(zp);
        }
        inv
    }
}

pub fn factorial(zp: &ZpCtx, m: u64) -> PadicScalar {
    let mut val = 0i32;
    let mut unit = 1u64;
    for j in 2..=m {
        let jr = zp.reduce(j as i64);
        let v = zp.val(jr);
        val += v as i32;
        unit = zp.mul(unit, zp.div_pk(jr, v).unwrap());
    }
    PadicScalar { val, unit, prec: zp.w as i32 }
}

/// Γ*(V) = prod_i Γ*(-i)^{h_i(V) [K:Q_p]}
pub fn gamma_star_v(zp: &ZpCtx, fm: &FilteredPhiModule, f: usize) -> PadicScalar {
    let mut acc = PadicScalar::one();
    for (i, mult) in fm.h_multiplicities() {
        let g = gamma_star(zp, -i);
        for _ in 0..mult * f {
            acc = acc.mul(zp, &g);
        }
    }
    acc
}

/// An element of the G_n-group ring with value-ring coefficients.
#[derive(Debug, Clone)]
pub struct GroupRingElem {
    pub level: u32,
    pub coeff: BTreeMap<u64, CycScaled>,
}

impl GroupRingElem {
    pub fn zero(level: u32) -> Self {
        GroupRingElem { level, coeff: BTreeMap::new() }
    }

    pub fn group_elements(p: u64, level: u32) -> Vec<u64> {
        (1..p.pow(level)).filter(|a| a % p != 0).collect()
    }

    pub fn add(&self, vr: &ValueRing, o: &Self) -> Result<Self> {
        let mut out = self.clone();
        for (a, v) in &o.coeff {
            let e = out.coeff.entry(*a).or_insert(vr.zero()?);
            *e = vr.add(e, v);
        }
        Ok(out)
    }

    pub fn scal(&self, vr: &ValueRing, s: &CycScaled) -> Result<Self> {
        let mut out = GroupRingElem::zero(self.level);
        for (a, v) in &self.coeff {
            out.coeff.insert(*a, vr.mul(v, s)?);
        }
        Ok(out)
    }

    pub fn mul(&self, vr: &ValueRing, o: &Self) -> Result<Self> {
        let pn = vr.ok.zp.p.pow(self.level);
        let mut out = GroupRingElem::zero(self.level);
        for (a, va) in &self.coeff {
            for (b, vb) in &o.coeff {
                let c = a * b % pn;
                let t = vr.mul(va, vb)?;
                let e = out.coeff.entry(c).or_insert(vr.zero()?);
                *e = vr.add(e, &t);
            }
        }
        Ok(out)
    }

    /// the involution g ↦ g^{-1}
    pub fn involution(&self, vr: &ValueRing) -> Result<Self> {
        let zp = &vr.ok.zp;
        let pn = zp.p.pow(self.level);
        let phi = pn / zp.p * (zp.p - 1);
        let mut out = GroupRingElem::zero(self.level);
        for (a, v) in &self.coeff {
            let mut inv = 1u64;
            let mut base = *a;
            let mut e = phi - 1;
            while e > 0 {
                if e & 1 == 1 {
                    inv = inv * base % pn;
                }
                base = base * base % pn;
                e >>= 1;
            }
            out.coeff.insert(inv, v.clone());
        }
        Ok(out)
    }

    /// e_η = (1/#G_n) Σ_g η^{-1}(g) g
    pub fn idempotent(vr: &ValueRing, level: u32, eta: &CharacterOfGn) -> Result<Self> {
        let zp = &vr.ok.zp;
        let pn = zp.p.pow(level);
        let inv_pm1 = zp.inv(zp.reduce((zp.p - 1) as i64)).unwrap();
        let inv = eta.inverse(zp.p);
        let mut out = GroupRingElem::zero(level);
        for a in 1..pn {
            if a % zp.p == 0 {
                continue;
            }
            let v = vr.char_value(&inv, a)?;
            let s = ScaledOk { c: vr.ok.from_u64(inv_pm1), shift: level as i32 - 1, prec: zp.w as i32 };
            out.coeff.insert(a, vr.scal_ok(&s, &v));
        }
        Ok(out)
    }

    /// Σ c_a η(a)
    pub fn apply_char(&self, vr: &ValueRing, eta: &CharacterOfGn) -> Result<CycScaled> {
        let mut acc = vr.zero()?;
        for (a, v) in &self.coeff {
            let cv = vr.char_value(eta, *a)?;
            let t = vr.mul(v, &cv)?;
            acc = vr.add(&acc, &t);
        }
        Ok(acc)
    }
}

/// η-component of the crystalline ε-constant:
/// det(φ | D_cris)^{a(η)} τ(η^{-1})^{f d}
pub fn epsilon_crystalline_component(
    vr: &ValueRing,
    fm: &FilteredPhiModule,
    eta: &CharacterOfGn,
) -> Result<CycScaled> {
    let ok = vr.ok;
    let a = eta.conductor(ok.zp.p);
    let fd = ok.f * fm.d;
    let tau = gauss_sum(vr, &eta.inverse(ok.zp.p))?;
    let mut acc = vr.one()?;
    for _ in 0..fd {
        acc = vr.mul(&acc, &tau)?;
    }
    let det = det_phi(ok, fm)?;
    for _ in 0..a {
        acc = vr.scal_ok(&det, &acc);
    }
    Ok(acc)
}

pub fn det_phi(ok: &OkCtx, fm: &FilteredPhiModule) -> Result<ScaledOk> {
    fn det_rec(ok: &OkCtx, m: &[Vec<ScaledOk>]) -> ScaledOk {
        let n = m.len();
        if n == 1 {
            return m[0][0].clone();
        }
        let mut acc = ScaledOk::zero(ok);
        for j in 0..n {
            if ok.is_zero(&m[0][j].c) {
                continue;
            }
            let minor: Vec<Vec<ScaledOk>> = m[1..]
                .iter()
                .map(|row| row.iter().enumerate().filter(|&(k2, _)| k2 != j).map(|(_, x)| x.clone()).collect())
                .collect();
            let mut t = m[0][j].mul(ok, &det_rec(ok, &minor));
            if j % 2 == 1 {
                t.c = ok.neg(&t.c);
            }
            acc = acc.add(ok, &t);
        }
        acc
    }
    Ok(det_rec(ok, &fm.phi))
}

/// The β-trivialization element at level n:
/// `c^{fd} Γ*(V) q_K^{-nd} ( Σ_{η≠1} det(φ)^{-a(η)} e_η + (-1)^{fd} q_K^d e_1 ) α`.
///
/// `c^{fd}` is carried as a flag (conjugation acts on value rings by
/// ζ ↦ ζ^{-1}); α is the comparison unit, supplied by the caller (the
/// built-in twists use the scalar-extension normalization).
pub struct BetaElement {
    pub elem: GroupRingElem,
    pub conj: bool,
    pub scale_val: i32,
}

pub fn beta_element(vr: &ValueRing, fm: &FilteredPhiModule, alpha: &ScaledOk, n: u32) -> Result<BetaElement> {
    let ok = vr.ok;
    let zp = &ok.zp;
    let d = fm.d;
    let fd = ok.f * d;
    let gs = gamma_star_v(zp, fm, ok.f);
    let det = det_phi(ok, fm)?;
    let det_inv = det.inv(ok)?;
    let mut acc = GroupRingElem::zero(n);
    for eta in CharacterOfGn::all(zp.p, n) {
        let e = GroupRingElem::idempotent(vr, n, &eta)?;
        let factor = if eta.is_trivial() {
            let mut s = ScaledOk::from_ok(ok, ok.from_u64(zp.pow(zp.p, fd as u64)));
            if fd % 2 == 1 {
                s.c = ok.neg(&s.c);
            }
            s
        } else {
            let a = eta.conductor(zp.p);
            let mut s = ScaledOk::from_ok(ok, ok.one());
            for _ in 0..a {
                s = s.mul(ok, &det_inv);
            }
            s
        };
        acc = acc.add(vr, &e.scal(vr, &vr.from_scaled_ok(&factor)?)?)?;
    }
    // global scale Γ*(V) q_K^{-nd} α
    let mut scale = if gs.is_zero() {
        ScaledOk::zero(ok)
    } else {
        ScaledOk { c: ok.from_u64(gs.unit), shift: -gs.val, prec: zp.w as i32 }
    };
    scale.shift += (n as usize * ok.f * d) as i32;
    scale = scale.mul(ok, alpha);
    let elem = acc.scal(vr, &vr.from_scaled_ok(&scale)?)?;
    Ok(BetaElement { elem, conj: fd % 2 == 1, scale_val: -gs.val - (n as usize * ok.f * d) as i32 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prec::{Precision, Tower};
    use crate::repn::RepData;

    fn tower(p: u64, f: usize, n_max: u32) -> Tower {
        Tower::new(Precision { p, n_prec: 8, m_trunc: 32, f, n_max, j_max: 8 }).unwrap()
    }

    #[test]
    fn conductors() {
        let p = 5u64;
        assert_eq!(CharacterOfGn::trivial(2).conductor(p), 0);
        assert_eq!(CharacterOfGn { level: 2, tame: 1, wild: 0 }.conductor(p), 1);
        assert_eq!(CharacterOfGn { level: 2, tame: 0, wild: 1 }.conductor(p), 2);
        assert_eq!(CharacterOfGn { level: 3, tame: 2, wild: 5 }.conductor(p), 2);
    }

    #[test]
    fn quadratic_gauss_sum_squares_to_p() {
        let t = tower(5, 1, 2);
        let vr = ValueRing::new(&t.ok, &t.cyclo, 2, 2).unwrap();
        let eta = CharacterOfGn { level: 1, tame: 2, wild: 0 };
        let tau = gauss_sum(&vr, &eta).unwrap();
        let sq = vr.mul(&tau, &tau).unwrap();
        let five = CycScaled { v: t.cyclo.from_ok(&t.ok, 2, &t.ok.from_u64(5)).unwrap(), shift: 0, prec: 20 };
        assert!(vr.eq_mod(&sq, &five, 12), "τ(quadratic)^2 = 5");
    }

    #[test]
    fn gauss_product_conjugate() {
        for p in [3u64, 5] {
            let t = tower(p, 1, 2);
            let vr = ValueRing::new(&t.ok, &t.cyclo, 2, 2).unwrap();
            for eta in CharacterOfGn::all(p, 2) {
                if eta.is_trivial() {
                    continue;
                }
                let tau = gauss_sum(&vr, &eta).unwrap();
                let tau_bar = gauss_sum(&vr, &eta.inverse(p)).unwrap();
                let prod = vr.mul(&tau, &tau_bar).unwrap();
                let k = eta.conductor(p);
                let pk = t.zp().p.pow(k);
                let sign = vr.char_value(&eta, t.zp().p.pow(2) - 1).unwrap();
                let mut expect = sign.clone();
                expect.v = t.cyclo.scal(&t.ok, &t.ok.from_u64(pk), &expect.v);
                assert!(vr.eq_mod(&prod, &expect, 10), "η = {eta:?}");
            }
        }
    }

    #[test]
    fn closed_form_matches_tate_sum() {
        for (p, f) in [(3u64, 1usize), (3, 2), (5, 1), (5, 2)] {
            let t = tower(p, f, 2);
            let vr = ValueRing::new(&t.ok, &t.cyclo, 2, 2).unwrap();
            for eta in CharacterOfGn::all(p, 2) {
                if eta.is_trivial() {
                    continue;
                }
                let closed = epsilon_abelian(&vr, &eta).unwrap();
                let oracle = tate_integral_oracle(&vr, &eta).unwrap();
                assert!(vr.eq_mod(&closed, &oracle, 12), "p={p} f={f} η={eta:?}");
            }
        }
    }

    #[test]
    fn unramified_sign() {
        assert_eq!(lambda_unramified(1, 7), 1);
        assert_eq!(lambda_unramified(2, 1), -1);
        assert_eq!(lambda_unramified(3, 4), 1);
    }

    #[test]
    fn gamma_star_values() {
        let zp = ZpCtx::new(5, 8).unwrap();
        let g3 = gamma_star(&zp, 3);
        assert_eq!((g3.val, g3.unit), (0, 2));
        let g1 = gamma_star(&zp, 1);
        assert_eq!((g1.val, g1.unit), (0, 1));
        let gm2 = gamma_star(&zp, -2);
        assert_eq!(gm2.val, 0);
        assert_eq!(zp.mul(gm2.unit, 2), 1);
        let g6 = gamma_star(&zp, 6);
        assert_eq!(g6.val, 1);
    }

    #[test]
    fn idempotent_completeness() {
        let t = tower(3, 1, 2);
        let vr = ValueRing::new(&t.ok, &t.cyclo, 2, 2).unwrap();
        let mut sum = GroupRingElem::zero(2);
        let chars = CharacterOfGn::all(3, 2);
        for eta in &chars {
            let e = GroupRingElem::idempotent(&vr, 2, eta).unwrap();
            let ee = e.mul(&vr, &e).unwrap();
            for (a, v) in &ee.coeff {
                let d = vr.add(v, &vr.neg(e.coeff.get(a).unwrap()));
                assert!(vr.is_zero_mod(&d, 8), "idempotent square at {a}");
            }
            sum = sum.add(&vr, &e).unwrap();
        }
        for (a, v) in &sum.coeff {
            if *a == 1 {
                let one = vr.one().unwrap();
                assert!(vr.eq_mod(v, &one, 8), "identity coefficient");
            } else {
                assert!(vr.is_zero_mod(v, 8), "coefficient at {a}");
            }
        }
        let e1 = GroupRingElem::idempotent(&vr, 2, &chars[1]).unwrap();
        let e2 = GroupRingElem::idempotent(&vr, 2, &chars[2]).unwrap();
        let prod = e1.mul(&vr, &e2).unwrap();
        for v in prod.coeff.values() {
            assert!(vr.is_zero_mod(v, 8));
        }
    }

    #[test]
    fn galois_equivariance_of_epsilon() {
        // the coefficient automorphism ζ ↦ ζ^a twists both the Gauss-sum
        // argument and the character's own p-power-order values:
        // g_a(τ(η)) = η'(a) τ(η') with η' = (tame, a·wild)
        let t = tower(5, 1, 2);
        let vr = ValueRing::new(&t.ok, &t.cyclo, 2, 2).unwrap();
        for eta in [CharacterOfGn { level: 2, tame: 1, wild: 0 }, CharacterOfGn { level: 2, tame: 3, wild: 2 }] {
            let tau = gauss_sum(&vr, &eta).unwrap();
            for a in [2u64, 7, 11] {
                let twisted = CharacterOfGn { level: eta.level, tame: eta.tame, wild: eta.wild * a % 5 };
                let lhs = vr.galois(&tau, a).unwrap();
                let tau2 = gauss_sum(&vr, &twisted).unwrap();
                let rhs = vr.mul(&vr.char_value(&twisted, a).unwrap(), &tau2).unwrap();
                assert!(vr.eq_mod(&lhs, &rhs, 10), "equivariance at a={a}, η={eta:?}");
            }
        }
    }

    #[test]
    fn beta_structure() {
        let t = tower(3, 1, 2);
        let vr = ValueRing::new(&t.ok, &t.cyclo, 2, 2).unwrap();
        let rep = RepData::tate(0, t.ok.one());
        let fm = rep.filtered_module(&t.ok);
        let alpha = ScaledOk::from_ok(&t.ok, t.ok.one());
        let b1 = beta_element(&vr, &fm, &alpha, 1).unwrap();
        // trivial-character coefficient: (-1)^{fd} q_K^d q_K^{-nd} Γ* α = -1
        let triv = CharacterOfGn::trivial(1);
        let v0 = b1.elem.apply_char(&vr, &triv).unwrap();
        let minus1 = vr.neg(&vr.one().unwrap());
        assert!(vr.eq_mod(&v0, &minus1, 8), "trivial-character coefficient");
        // nontrivial tame character: q_K^{-n} det(φ)^{-1} has valuation -1
        let eta = CharacterOfGn { level: 1, tame: 1, wild: 0 };
        let v1 = b1.elem.apply_char(&vr, &eta).unwrap();
        assert_eq!(vr.val(&v1), -1, "η≠1 coefficient valuation");
        // doubling n divides coefficients by q_K^d
        let b2 = beta_element(&vr, &fm, &alpha, 2).unwrap();
        let eta2 = CharacterOfGn { level: 2, tame: 1, wild: 0 };
        let v2 = b2.elem.apply_char(&vr, &eta2).unwrap();
        assert_eq!(vr.val(&v2), -2, "valuation drops with n");
        assert!(!b1.conj || fm.d * t.ok.f % 2 == 1);
    }
}
