//! Run-wide precision configuration and the assembled coefficient tower.

use crate::cyclo::CycloCtx;
use crate::unram::OkCtx;
use crate::zp::ZpCtx;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// The truncation discipline for a run: compute mod p^N and mod X^M over
/// the degree-f unramified extension, with cyclotomic levels up to n_max
/// and E-series summation cut off at j_max.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Precision {
    pub p: u64,
    /// target p-adic precision exponent N
    pub n_prec: u32,
    /// series truncation degree M
    pub m_trunc: usize,
    /// unramified degree f = [K : Q_p]
    pub f: usize,
    /// largest cyclotomic level needed
    pub n_max: u32,
    /// summation cutoff for the E-series
    pub j_max: usize,
}

impl Precision {
    pub fn validate(&self) -> Result<()> {
        if self.p < 3 {
            return Err(Error::Invalid("p must be an odd prime >= 3".into()));
        }
        if self.n_prec < 1 || self.m_trunc < 2 || self.n_max < 1 || self.j_max < 1 || self.f < 1 {
            return Err(Error::Invalid("precision parameters must be >= 1 (and M >= 2)".into()));
        }
        Ok(())
    }

    /// q_K = p^f, the residue-field cardinality.
    pub fn q_k(&self) -> u64 {
        self.p.pow(self.f as u32)
    }
}

/// The assembled coefficient tower Z/p^w ⊂ O_K ⊂ O_K[ζ_{p^n}], built once
/// per run. The working exponent w carries headroom over the target N so
/// denominators surfacing in intermediate steps stay visible.
#[derive(Debug, Clone)]
pub struct Tower {
    pub prec: Precision,
    pub ok: OkCtx,
    pub cyclo: CycloCtx,
    /// working exponent actually used for word arithmetic
    pub w: u32,
}

impl Tower {
    pub fn new(prec: Precision) -> Result<Self> {
        Self::with_headroom(prec, 12)
    }

    pub fn with_headroom(prec: Precision, headroom: u32) -> Result<Self> {
        prec.validate()?;
        let cap = ZpCtx::max_exponent(prec.p);
        let w = (prec.n_prec + headroom).min(cap);
        if w < prec.n_prec {
            return Err(Error::Invalid(format!("requested N = {} exceeds word capacity for p = {}", prec.n_prec, prec.p)));
        }
        let zp = ZpCtx::new(prec.p, w)?;
        let ok = OkCtx::new(zp, prec.f)?;
        let cyclo = CycloCtx::new(&ok, prec.n_max)?;
        Ok(Tower { prec, ok, cyclo, w })
    }

    pub fn zp(&self) -> &ZpCtx {
        &self.ok.zp
    }

    /// χ(γ_1) is pinned to 1 + p (γ_1 the chosen topological generator of
    /// the level-1 congruence quotient); everything downstream is relative
    /// to this choice.
    pub fn chi_gamma1(&self) -> u64 {
        1 + self.prec.p
    }

    /// χ(γ_n) = χ(γ_1)^{p^{n-1}} mod p^w.
    pub fn chi_gamma_n(&self, n: u32) -> u64 {
        let zp = self.zp();
        zp.pow(self.chi_gamma1(), zp.p.pow(n - 1))
    }

    /// v_p(log χ(γ_n)) = n for χ(γ_1) = 1 + p; the unit part of
    /// log χ(γ_n) / p^n, computed from the truncated p-adic logarithm.
    pub fn log_chi_gamma_n_unit(&self, n: u32) -> u64 {
        let zp = self.zp();
        // log(1+p) = p - p^2/2 + p^3/3 - ... ; v_p(term j) = j - v_p(j) >= j - log_p(j)
        // work with the series for log(1+p)/p directly: sum (-1)^{j+1} p^{j-1} / j
        let mut acc: u64 = 0;
        let mut sign = true;
        let _ = n;
        for j in 1..(zp.w as u64 + 2) {
            let vj = zp.val(zp.reduce(j as i64));
            // term = p^{j-1} / j ; stop when j - 1 - v_p(j) >= w
            if (j - 1) as i64 - vj as i64 >= zp.w as i64 {
                break;
            }
            let inv_j = zp.inv(zp.div_pk(zp.reduce(j as i64), vj).unwrap()).unwrap();
            // p^{j-1-vj}
            let term = zp.mul(zp.pow(zp.p, (j - 1) - vj as u64), inv_j);
            acc = if sign { zp.add(acc, term) } else { zp.sub(acc, term) };
            sign = !sign;
            
            
        }
        // log χ(γ_n) = p^{n-1} * log(1+p): unit part unchanged
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub fn default_prec(p: u64, f: usize) -> Precision {
        Precision { p, n_prec: 8, m_trunc: 64, f, n_max: 2, j_max: 10 }
    }

    #[test]
    fn tower_builds() {
        for (p, f) in [(3u64, 1usize), (3, 2), (5, 1), (5, 2)] {
            let t = Tower::new(default_prec(p, f)).unwrap();
            assert!(t.w >= 8);
            assert_eq!(t.prec.q_k(), p.pow(f as u32));
        }
    }

    #[test]
    fn log_chi_unit() {
        let t = Tower::new(default_prec(3, 1)).unwrap();
        let zp = t.zp();
        // log(1+3)/3 = 1 - 3/2 + 9/3 - 27/4 + ... mod 3^w
        let u = t.log_chi_gamma_n_unit(1);
        // check: exp-side sanity: (1+p) = exp(log(1+p)) truncated; instead verify
        // against an independent direct summation at lower precision
        let mut acc: i128 = 0;
        let modulus = 3i128.pow(8);
        // sum_{j=1}^{20} (-1)^{j+1} 3^{j-1}/j with exact rational handling mod 3^8:
        // only j with v_3(j) < j-1 matter; compute via modular inverse of unit part
        for j in 1i128..20 {
            let vj = {
                let mut v = 0;
                let mut jj = j;
                while jj % 3 == 0 {
                    jj /= 3;
                    v += 1;
                }
                v
            };
            let e = (j - 1) - vj;
            if e >= 8 {
                continue;
            }
            let ju = {
                let mut jj = j;
                while jj % 3 == 0 {
                    jj /= 3;
                }
                jj
            };
            // inverse of ju mod 3^8
            let mut inv = 1i128;
            let phi = 3i128.pow(7) * 2;
            let mut b = ju % modulus;
            let mut e2 = phi - 1;
            while e2 > 0 {
                if e2 & 1 == 1 {
                    inv = inv * b % modulus;
                }
                b = b * b % modulus;
                e2 >>= 1;
            }
            let term = 3i128.pow(e as u32) * inv % modulus;
            acc = (acc + if j % 2 == 1 { term } else { modulus - term }) % modulus;
        }
        assert_eq!(u % 3u64.pow(8), acc as u64 % 3u64.pow(8));
    }
}
