//! Exact linear algebra over Z/p^w: Smith normal form with valuation
//! pivoting, kernels, solving, lattice spans and indices.
//!
//! Over the local ring Z/p^w every matrix is equivalent to a diagonal of
//! p-powers; the divisor exponents drive all rank/torsion bookkeeping.
//! An exponent that reaches the working precision w is indistinguishable
//! from zero, which callers must treat as "free" subject to stability.

use crate::zp::ZpCtx;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub a: Vec<u64>,
}

impl Mat {
    pub fn zero(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, a: vec![0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zero(n, n);
        for i in 0..n {
            m.a[i * n + i] = 1;
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<u64>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        let mut a = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c);
            a.extend(row);
        }
        Mat { rows: r, cols: c, a }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.a[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: u64) {
        self.a[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[u64] {
        &self.a[i * self.cols..(i + 1) * self.cols]
    }

    pub fn mul(&self, zp: &ZpCtx, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows);
        let mut out = Mat::zero(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let x = self.get(i, k);
                if x == 0 {
                    continue;
                }
                for j in 0..other.cols {
                    let t = zp.mul(x, other.get(k, j));
                    let idx = i * other.cols + j;
                    out.a[idx] = zp.add(out.a[idx], t);
                }
            }
        }
        out
    }

    pub fn apply(&self, zp: &ZpCtx, v: &[u64]) -> Vec<u64> {
        assert_eq!(self.cols, v.len());
        let mut out = vec![0u64; self.rows];
        for (i, slot) in out.iter_mut().enumerate() {
            let mut acc = 0u64;
            for j in 0..self.cols {
                acc = zp.add(acc, zp.mul(self.get(i, j), v[j]));
            }
            *slot = acc;
        }
        out
    }

    pub fn transpose(&self) -> Mat {
        let mut out = Mat::zero(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }
}

/// L * A * R = diag(p^{e_1}, p^{e_2}, ...), exponents ascending order not
/// guaranteed; an exponent >= w stands for 0.
pub struct Smith {
    pub divisors: Vec<u32>,
    pub l: Mat,
    pub l_inv: Mat,
    pub r: Mat,
}

pub fn smith(zp: &ZpCtx, a0: &Mat) -> Smith {
    let mut a = a0.clone();
    let (rows, cols) = (a.rows, a.cols);
    let n = rows.min(cols);
    let mut l = Mat::identity(rows);
    let mut l_inv = Mat::identity(rows);
    let mut r = Mat::identity(cols);
    let mut divisors = vec![zp.w; n];
    for k in 0..n {
        let mut best: Option<(usize, usize, u32)> = None;
        'search: for i in k..rows {
            for j in k..cols {
                let v = a.get(i, j);
                if v == 0 {
                    continue;
                }
                let e = zp.val(v);
                if best.map_or(true, |(_, _, be)| e < be) {
                    best = Some((i, j, e));
                    if e == 0 {
                        break 'search;
                    }
                }
            }
        }
        let (pi, pj, pe) = match best {
            None => break,
            Some(x) => x,
        };
        if pi != k {
            swap_rows(&mut a, pi, k);
            swap_rows(&mut l, pi, k);
            swap_cols(&mut l_inv, pi, k);
        }
        if pj != k {
            swap_cols(&mut a, pj, k);
            swap_cols(&mut r, pj, k);
        }
        let piv = a.get(k, k);
        let u = zp.div_pk(piv, pe).unwrap();
        let uinv = zp.inv(u).unwrap();
        scale_row(zp, &mut a, k, uinv);
        scale_row(zp, &mut l, k, uinv);
        scale_col(zp, &mut l_inv, k, u);
        for i in 0..rows {
            if i == k {
                continue;
            }
            let v = a.get(i, k);
            if v == 0 {
                continue;
            }
            let c = zp.div_pk(v, pe).unwrap();
            row_sub(zp, &mut a, i, k, c);
            row_sub(zp, &mut l, i, k, c);
            col_add(zp, &mut l_inv, k, i, c);
        }
        for j in 0..cols {
            if j == k {
                continue;
            }
            let v = a.get(k, j);
            if v == 0 {
                continue;
            }
            let c = zp.div_pk(v, pe).unwrap();
            col_sub(zp, &mut a, j, k, c);
            col_sub(zp, &mut r, j, k, c);
        }
        divisors[k] = pe;
    }
    Smith { divisors, l, l_inv, r }
}

fn swap_rows(m: &mut Mat, i: usize, j: usize) {
    if i == j {
        return;
    }
    for c in 0..m.cols {
        m.a.swap(i * m.cols + c, j * m.cols + c);
    }
}

fn swap_cols(m: &mut Mat, i: usize, j: usize) {
    if i == j {
        return;
    }
    for rr in 0..m.rows {
        m.a.swap(rr * m.cols + i, rr * m.cols + j);
    }
}

fn scale_row(zp: &ZpCtx, m: &mut Mat, i: usize, s: u64) {
    for c in 0..m.cols {
        let idx = i * m.cols + c;
        m.a[idx] = zp.mul(m.a[idx], s);
    }
}

fn scale_col(zp: &ZpCtx, m: &mut Mat, j: usize, s: u64) {
    for rr in 0..m.rows {
        let idx = rr * m.cols + j;
        m.a[idx] = zp.mul(m.a[idx], s);
    }
}

fn row_sub(zp: &ZpCtx, m: &mut Mat, i: usize, k: usize, c: u64) {
    for cc in 0..m.cols {
        let t = zp.mul(c, m.a[k * m.cols + cc]);
        let idx = i * m.cols + cc;
        m.a[idx] = zp.sub(m.a[idx], t);
    }
}

fn col_sub(zp: &ZpCtx, m: &mut Mat, j: usize, k: usize, c: u64) {
    for rr in 0..m.rows {
        let t = zp.mul(c, m.a[rr * m.cols + k]);
        let idx = rr * m.cols + j;
        m.a[idx] = zp.sub(m.a[idx], t);
    }
}

fn col_add(zp: &ZpCtx, m: &mut Mat, k: usize, i: usize, c: u64) {
    for rr in 0..m.rows {
        let t = zp.mul(c, m.a[rr * m.cols + i]);
        let idx = rr * m.cols + k;
        m.a[idx] = zp.add(m.a[idx], t);
    }
}

impl Smith {
    /// right-kernel generators of A, including p-power torsion directions
    pub fn kernel(&self, zp: &ZpCtx) -> Vec<Vec<u64>> {
        let mut out = Vec::new();
        let n = self.divisors.len();
        for (i, &e) in self.divisors.iter().enumerate() {
            if e == 0 {
                continue;
            }
            let scale = if e >= zp.w { 1 } else { zp.pow(zp.p, (zp.w - e) as u64) };
            let mut v = vec![0u64; self.r.rows];
            for rr in 0..self.r.rows {
                v[rr] = zp.mul(self.r.get(rr, i), scale);
            }
            out.push(v);
        }
        for j in n..self.r.cols {
            let mut v = vec![0u64; self.r.rows];
            for rr in 0..self.r.rows {
                v[rr] = self.r.get(rr, j);
            }
            out.push(v);
        }
        out
    }

    /// kernel directions whose divisor is zero to working precision
    pub fn free_kernel(&self, zp: &ZpCtx) -> Vec<Vec<u64>> {
        let mut out = Vec::new();
        let n = self.divisors.len();
        for (i, &e) in self.divisors.iter().enumerate() {
            if e < zp.w {
                continue;
            }
            let mut v = vec![0u64; self.r.rows];
            for rr in 0..self.r.rows {
                v[rr] = self.r.get(rr, i);
            }
            out.push(v);
        }
        for j in n..self.r.cols {
            let mut v = vec![0u64; self.r.rows];
            for rr in 0..self.r.rows {
                v[rr] = self.r.get(rr, j);
            }
            out.push(v);
        }
        out
    }

    /// solve A x = b; the reported loss is the largest pivot exponent used
    pub fn solve(&self, zp: &ZpCtx, b: &[u64]) -> Result<(Vec<u64>, u32)> {
        let lb = self.l.apply(zp, b);
        let n = self.divisors.len();
        let mut y = vec![0u64; self.r.rows];
        let mut loss = 0u32;
        for (i, &lbi) in lb.iter().enumerate() {
            if i < n && self.divisors[i] < zp.w {
                let e = self.divisors[i];
                if lbi == 0 {
                    continue;
                }
                if zp.val(lbi) < e {
                    return Err(Error::Precision(format!(
                        "inconsistent system: rhs valuation {} < pivot {e}",
                        zp.val(lbi)
                    )));
                }
                y[i] = zp.div_pk(lbi, e)?;
                loss = loss.max(e);
            } else if lbi != 0 {
                return Err(Error::Precision("inconsistent system: rhs outside image".into()));
            }
        }
        Ok((self.r.apply(zp, &y), loss))
    }

    /// solve A x = b up to p^{tol_val}: rhs components of valuation >=
    /// tol_val are treated as zero; the solution then satisfies
    /// A x = b mod p^{tol_val}
    pub fn solve_tol(&self, zp: &ZpCtx, b: &[u64], tol_val: u32) -> Result<(Vec<u64>, u32)> {
        let lb = self.l.apply(zp, b);
        let n = self.divisors.len();
        let mut y = vec![0u64; self.r.rows];
        let mut loss = 0u32;
        for (i, &lbi) in lb.iter().enumerate() {
            if lbi == 0 || zp.val(lbi) >= tol_val {
                continue;
            }
            if i < n && self.divisors[i] < zp.w {
                let e = self.divisors[i];
                if zp.val(lbi) < e {
                    return Err(Error::Precision(format!(
                        "inconsistent system: rhs valuation {} < pivot {e}",
                        zp.val(lbi)
                    )));
                }
                y[i] = zp.div_pk(lbi, e)?;
                loss = loss.max(e);
            } else {
                return Err(Error::Precision(format!(
                    "inconsistent system at tolerance {tol_val}: residual valuation {}",
                    zp.val(lbi)
                )));
            }
        }
        Ok((self.r.apply(zp, &y), loss))
    }

    pub fn det_val(&self) -> u64 {
        self.divisors.iter().map(|&e| e as u64).sum()
    }

    /// exponents capped at w, ascending
    pub fn sorted_divisors(&self) -> Vec<u32> {
        let mut d = self.divisors.clone();
        d.sort_unstable();
        d
    }
}

/// Row-span of the given vectors in (Z/p^w)^n, reduced to a staircase
/// basis by valuation pivoting.
#[derive(Debug, Clone)]
pub struct Lattice {
    pub basis: Mat,
    /// (column, exponent) per basis row
    pub pivots: Vec<(usize, u32)>,
}

pub fn lattice_span(zp: &ZpCtx, gens: &[Vec<u64>], n: usize) -> Lattice {
    let mut basis: Vec<Vec<u64>> = Vec::new();
    let mut pivots: Vec<(usize, u32)> = Vec::new();
    let mut queue: Vec<Vec<u64>> = gens.to_vec();
    while let Some(mut v) = queue.pop() {
        // reduce against the basis until stable
        loop {
            let mut changed = false;
            for (b, &(col, e)) in basis.iter().zip(&pivots) {
                let x = v[col];
                if x != 0 && zp.val(x) >= e {
                    let c = zp.div_pk(x, e).unwrap();
                    for j in 0..n {
                        let t = zp.mul(c, b[j]);
                        v[j] = zp.sub(v[j], t);
                    }
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        if v.iter().all(|&x| x == 0) {
            continue;
        }
        let (col, e) = v
            .iter()
            .enumerate()
            .filter(|(_, &x)| x != 0)
            .map(|(j, &x)| (j, zp.val(x)))
            .min_by_key(|&(_, e)| e)
            .unwrap();
        let u = zp.div_pk(v[col], e).unwrap();
        let uinv = zp.inv(u).unwrap();
        for x in v.iter_mut() {
            *x = zp.mul(*x, uinv);
        }
        // existing rows may now reduce against v: requeue any that do
        let mut i = 0;
        while i < basis.len() {
            let x = basis[i][col];
            if x != 0 && zp.val(x) >= e {
                let row = basis.remove(i);
                pivots.remove(i);
                queue.push(row);
            } else {
                i += 1;
            }
        }
        basis.push(v);
        pivots.push((col, e));
    }
    let mut order: Vec<usize> = (0..basis.len()).collect();
    order.sort_by_key(|&i| pivots[i].0);
    let basis_m = Mat::from_rows(order.iter().map(|&i| basis[i].clone()).collect());
    let pivots = order.iter().map(|&i| pivots[i]).collect();
    Lattice { basis: if basis_m.rows == 0 { Mat::zero(0, n) } else { basis_m }, pivots }
}

impl Lattice {
    pub fn rank(&self) -> usize {
        self.basis.rows
    }

    /// membership solver: Smith form of basis^T, built once per lattice
    pub fn solver(&self, zp: &ZpCtx) -> LatticeSolver {
        LatticeSolver { sm: smith(zp, &self.basis.transpose()), rank: self.basis.rows }
    }

    pub fn coords(&self, zp: &ZpCtx, v: &[u64]) -> Result<Vec<u64>> {
        self.solver(zp).coords(zp, v)
    }

    pub fn contains(&self, zp: &ZpCtx, v: &[u64]) -> bool {
        self.coords(zp, v).is_ok()
    }
}

/// solves x * basis = v through the Smith form of basis^T
pub struct LatticeSolver {
    sm: Smith,
    rank: usize,
}

impl LatticeSolver {
    pub fn coords(&self, zp: &ZpCtx, v: &[u64]) -> Result<Vec<u64>> {
        let (x, _loss) = self.sm.solve(zp, v)?;
        Ok(x[..self.rank].to_vec())
    }

    /// coordinates with residuals below p^{tol_val} dropped
    pub fn coords_tol(&self, zp: &ZpCtx, v: &[u64], tol_val: u32) -> Result<Vec<u64>> {
        let (x, _loss) = self.sm.solve_tol(zp, v, tol_val)?;
        Ok(x[..self.rank].to_vec())
    }
}

/// valuation of [L1 : L2] for L2 ⊆ L1 of equal rank
pub fn lattice_index(zp: &ZpCtx, l1: &Lattice, l2: &Lattice) -> Result<u64> {
    if l1.rank() != l2.rank() {
        return Err(Error::Invalid(format!("rank mismatch {} vs {}", l1.rank(), l2.rank())));
    }
    let solver = l1.solver(zp);
    let mut rows = Vec::with_capacity(l2.rank());
    for i in 0..l2.rank() {
        rows.push(solver.coords(zp, l2.basis.row(i))?);
    }
    let m = Mat::from_rows(rows);
    let s = smith(zp, &m);
    if s.divisors.iter().any(|&e| e >= zp.w) {
        return Err(Error::Precision("index not finite at working precision".into()));
    }
    Ok(s.det_val())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_mat(zp: &ZpCtx, rng: &mut ChaCha8Rng, r: usize, c: usize) -> Mat {
        let mut m = Mat::zero(r, c);
        for i in 0..r {
            for j in 0..c {
                m.set(i, j, rng.gen_range(0..zp.pw));
            }
        }
        m
    }

    #[test]
    fn smith_decomposition_holds() {
        let zp = ZpCtx::new(3, 9).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..25 {
            let r = rng.gen_range(1..6);
            let c = rng.gen_range(1..6);
            let mut a = rand_mat(&zp, &mut rng, r, c);
            for idx in 0..a.a.len() {
                if rng.gen_bool(0.3) {
                    a.a[idx] = zp.mul(a.a[idx], zp.pow(3, rng.gen_range(0..4)));
                }
            }
            let s = smith(&zp, &a);
            let lar = s.l.mul(&zp, &a).mul(&zp, &s.r);
            for i in 0..r {
                for j in 0..c {
                    let expect = if i == j && i < s.divisors.len() && s.divisors[i] < zp.w {
                        zp.pow(3, s.divisors[i] as u64)
                    } else {
                        0
                    };
                    assert_eq!(lar.get(i, j), expect, "at ({i},{j})");
                }
            }
            let li = s.l.mul(&zp, &s.l_inv);
            assert_eq!(li, Mat::identity(r));
            for v in s.kernel(&zp) {
                let av = a.apply(&zp, &v);
                assert!(av.iter().all(|&x| x == 0));
            }
        }
    }

    #[test]
    fn solve_roundtrip() {
        let zp = ZpCtx::new(5, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let n = rng.gen_range(2..5);
            let a = rand_mat(&zp, &mut rng, n, n);
            let x: Vec<u64> = (0..n).map(|_| rng.gen_range(0..zp.pw)).collect();
            let b = a.apply(&zp, &x);
            let s = smith(&zp, &a);
            let (x2, _loss) = s.solve(&zp, &b).unwrap();
            assert_eq!(a.apply(&zp, &x2), b);
        }
    }

    #[test]
    fn lattice_span_and_index() {
        let zp = ZpCtx::new(3, 8).unwrap();
        let l1 = lattice_span(&zp, &[vec![1, 0], vec![0, 1]], 2);
        let l2 = lattice_span(&zp, &[vec![3, 0], vec![0, 9]], 2);
        assert_eq!(lattice_index(&zp, &l1, &l2).unwrap(), 3);
        let l3 = lattice_span(&zp, &[vec![1, 1], vec![1, 4]], 2);
        assert_eq!(lattice_index(&zp, &l1, &l3).unwrap(), 1);
        assert!(l2.contains(&zp, &[3, 9]));
        assert!(!l2.contains(&zp, &[1, 0]));
    }

    #[test]
    fn lattice_random_consistency() {
        let zp = ZpCtx::new(3, 10).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let n = 4;
            let gens: Vec<Vec<u64>> = (0..6)
                .map(|_| {
                    (0..n)
                        .map(|_| zp.mul(rng.gen_range(0..zp.pw), zp.pow(3, rng.gen_range(0..2))))
                        .collect()
                })
                .collect();
            let l = lattice_span(&zp, &gens, n);
            for g in &gens {
                assert!(l.contains(&zp, g), "generator must lie in its own span");
            }
            let gm = Mat::from_rows(gens.clone()).transpose();
            let s = smith(&zp, &gm);
            for i in 0..l.rank() {
                assert!(s.solve(&zp, l.basis.row(i)).is_ok(), "basis row escapes the generator span");
            }
        }
    }
}
