//! Representation data: built-in rank-1 twists `Z_p(-r) ⊗ unr(λ)` and
//! their direct sums, raw Wach-module matrices, the lattice conditions a
//! Wach module must satisfy, and the filtered φ-module extracted from the
//! Γ-invariants of the scalar-extended module.

use crate::cyclo::CycloCtx;
use crate::linalg::{lattice_span, smith, Mat};
use crate::series::{self, ScaledOk, Series, SeriesCtx};
use crate::unram::{OkCtx, OkElem};
use crate::zp::ZpCtx;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// the filtered φ-module attached to a crystalline object: φ-matrix over K
/// and the multiset of filtration jumps (one per basis vector)
#[derive(Debug, Clone)]
pub struct FilteredPhiModule {
    pub d: usize,
    pub phi: Vec<Vec<ScaledOk>>,
    /// jump position r_i of basis vector i (dim Fil^j = #{i : r_i >= j})
    pub jumps: Vec<i64>,
}

impl FilteredPhiModule {
    pub fn dim_fil(&self, j: i64) -> usize {
        self.jumps.iter().filter(|&&r| r >= j).count()
    }

    /// dim over Q_p of Fil^j
    pub fn dim_fil_qp(&self, f: usize, j: i64) -> usize {
        self.dim_fil(j) * f
    }

    pub fn t_h(&self) -> i64 {
        self.jumps.iter().sum()
    }

    pub fn largest_jump(&self) -> i64 {
        self.jumps.iter().copied().max().unwrap_or(0)
    }

    /// multiplicity profile h_i = dim gr^i
    pub fn h_multiplicities(&self) -> Vec<(i64, usize)> {
        let mut out: Vec<(i64, usize)> = Vec::new();
        for &r in &self.jumps {
            if let Some(e) = out.iter_mut().find(|(j, _)| *j == r) {
                e.1 += 1;
            } else {
                out.push((r, 1));
            }
        }
        out.sort_by_key(|&(j, _)| j);
        out
    }

    /// filtration data as (j, dim_{Q_p} Fil^j) for j in 1..=h (what the
    /// Γ-factors consume)
    pub fn fil_profile_qp(&self, f: usize) -> Vec<(i64, usize)> {
        let h = self.largest_jump();
        (1..=h).map(|j| (j, self.dim_fil_qp(f, j))).collect()
    }

    /// v_p of the Z_p-lattice index [M : φ M] = f * t_H for admissible data
    pub fn index_phi_val(&self, ok: &OkCtx) -> Result<i64> {
        // det over K via cofactor on the scaled entries, then the norm
        let det = scaled_det(ok, &self.phi)?;
        let v = det.val(ok) as i64;
        Ok(v * ok.f as i64)
    }
}

fn scaled_det(ok: &OkCtx, m: &[Vec<ScaledOk>]) -> Result<ScaledOk> {
    let n = m.len();
    if n == 1 {
        return Ok(m[0][0].clone());
    }
    let mut acc = ScaledOk::zero(ok);
    for j in 0..n {
        if ok.is_zero(&m[0][j].c) {
            continue;
        }
        let minor: Vec<Vec<ScaledOk>> = m[1..]
            .iter()
            .map(|row| row.iter().enumerate().filter(|&(k, _)| k != j).map(|(_, x)| x.clone()).collect())
            .collect();
        let mut t = m[0][j].mul(ok, &scaled_det(ok, &minor)?);
        if j % 2 == 1 {
            t.c = ok.neg(&t.c);
        }
        acc = acc.add(ok, &t);
    }
    Ok(acc)
}

/// A rank-1 crystalline lattice `Z_p(-r) ⊗ unr(λ)` with r >= 0 and λ a
/// unit of O_K; the Frobenius on its crystalline module is λ p^r.
#[derive(Debug, Clone, PartialEq)]
pub struct Rank1Twist {
    pub r: i64,
    pub lambda: OkElem,
}

/// A representation usable by the toolkit: a direct sum of rank-1 twists
/// (general crystalline data enters only through raw Wach matrices, which
/// are validated but not run through the exponential-kernel machinery).
#[derive(Debug, Clone, PartialEq)]
pub struct RepData {
    pub comps: Vec<Rank1Twist>,
}

impl RepData {
    pub fn tate(r: i64, lambda: OkElem) -> Self {
        RepData { comps: vec![Rank1Twist { r, lambda }] }
    }

    pub fn dim(&self) -> usize {
        self.comps.len()
    }

    pub fn height(&self) -> i64 {
        self.comps.iter().map(|c| c.r).max().unwrap_or(0)
    }

    /// positivity: all twists r >= 0
    pub fn is_positive(&self) -> bool {
        self.comps.iter().all(|c| c.r >= 0)
    }

    pub fn filtered_module(&self, ok: &OkCtx) -> FilteredPhiModule {
        let d = self.dim();
        let mut phi = vec![vec![ScaledOk::zero(ok); d]; d];
        for (i, c) in self.comps.iter().enumerate() {
            let pk = ok.zp.pow(ok.zp.p, c.r.max(0) as u64);
            phi[i][i] = ScaledOk::from_ok(ok, ok.scal(pk, &c.lambda));
        }
        FilteredPhiModule { d, phi, jumps: self.comps.iter().map(|c| c.r).collect() }
    }

    /// the dual-side data T^*(-h): rank-1 factors (h - r_i, λ_i^{-1})
    pub fn dual_minus_h(&self, ok: &OkCtx) -> Result<RepData> {
        let h = self.height();
        let mut comps = Vec::with_capacity(self.comps.len());
        for c in &self.comps {
            comps.push(Rank1Twist { r: h - c.r, lambda: ok.inv(&c.lambda)? });
        }
        Ok(RepData { comps })
    }

    /// detects a Q_p(m)-type subquotient at working precision: some λ_i is
    /// a root of unity (its Teichmüller correction is trivial)
    pub fn has_cyclotomic_subquotient(&self, ok: &OkCtx) -> bool {
        self.comps.iter().any(|c| {
            // λ of finite order iff λ^{p^f - 1}-ish Teichmüller: check
            // λ = ω(λ mod p) exactly at working precision
            let teich = teichmuller_ok(ok, &c.lambda);
            c.lambda == teich
        })
    }
}

/// Teichmüller lift of the residue of an O_K-unit (coordinate-wise fixed
/// point of x ↦ x^{q})
pub fn teichmuller_ok(ok: &OkCtx, a: &OkElem) -> OkElem {
    let q = ok.zp.p.pow(ok.f as u32);
    let mut x = a.clone();
    for _ in 0..ok.zp.w as usize + 1 {
        x = ok.pow(&x, q);
    }
    x
}

/// Wach-module data: matrices of φ and of the two Γ-generators in a fixed
/// basis, over the positive truncated series ring.
#[derive(Debug, Clone)]
pub struct WachModule {
    pub rank: usize,
    pub p_mat: Vec<Vec<Series>>,
    pub g_delta: Vec<Vec<Series>>,
    pub g_gamma1: Vec<Vec<Series>>,
    pub height: i64,
}

/// chosen generators of Γ = Δ × Γ_1: δ acts through the Teichmüller lift
/// of the smallest primitive root, γ_1 through 1 + p
pub fn delta_generator(zp: &ZpCtx) -> u64 {
    let g = (2..zp.p).find(|&g| is_primitive_root(zp.p, g)).expect("primitive root exists");
    zp.teichmuller(g)
}

fn is_primitive_root(p: u64, g: u64) -> bool {
    let mut seen = 1u64;
    let mut x = g % p;
    let mut count = 1;
    while x != 1 {
        x = x * g % p;
        count += 1;
        if count > p {
            return false;
        }
    }
    seen = count;
    seen == p - 1
}

/// the rank-1 Wach module of `Z_p(-r) ⊗ unr(λ)`: φ-matrix λ q^r, γ-matrix
/// (γ(X)/X)^r χ(γ)^{-r}
pub fn tate_twist_wach(ctx: &SeriesCtx, tw: &Rank1Twist, window: i64) -> Result<WachModule> {
    if tw.r < 0 {
        return Err(Error::Invalid("Wach data here requires r >= 0 (positive twist)".into()));
    }
    let ok = ctx.ok;
    let zp = ctx.zp();
    let qr = series::powi(ok, &ctx.q, tw.r as u32, window);
    let p_mat = vec![vec![series::scal(ok, &tw.lambda, &qr)]];
    let gmat = |a: u64| -> Result<Series> {
        let gx = ctx.onepx_pow_minus_one(a, window + 1);
        let mut gx_over_x = gx;
        gx_over_x.lo -= 1;
        let pow = series::powi(ok, &gx_over_x, tw.r as u32, window).trim(ok);
        let ainv_r = crate::lambda::pow_signed(zp, a, -tw.r);
        Ok(series::scal(ok, &ok.from_u64(ainv_r), &pow))
    };
    let g_delta = vec![vec![gmat(delta_generator(zp))?]];
    let g_gamma1 = vec![vec![gmat(1 + zp.p)?]];
    Ok(WachModule { rank: 1, p_mat, g_delta, g_gamma1, height: tw.r })
}

pub fn wach_direct_sum(modules: &[WachModule], ok: &OkCtx, window: i64) -> WachModule {
    let rank: usize = modules.iter().map(|m| m.rank).sum();
    let height = modules.iter().map(|m| m.height).max().unwrap_or(0);
    let block = |pick: fn(&WachModule) -> &Vec<Vec<Series>>| -> Vec<Vec<Series>> {
        let mut out = vec![vec![Series::zero(ok, window); rank]; rank];
        let mut off = 0;
        for m in modules {
            let b = pick(m);
            for i in 0..m.rank {
                for j in 0..m.rank {
                    out[off + i][off + j] = b[i][j].clone();
                }
            }
            off += m.rank;
        }
        out
    };
    WachModule {
        rank,
        p_mat: block(|m| &m.p_mat),
        g_delta: block(|m| &m.g_delta),
        g_gamma1: block(|m| &m.g_gamma1),
        height,
    }
}

/// Report of the Wach-lattice conditions: trivial Γ mod X, the
/// φΓ-commutation cocycles, and the q^h-containment.
#[derive(Debug, Clone, Default)]
pub struct WachReport {
    pub violations: Vec<String>,
}

impl WachReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

fn mat_apply_series(
    ctx: &SeriesCtx,
    mat: &[Vec<Series>],
    op: &dyn Fn(&Series) -> Result<Series>,
    v: &[Series],
) -> Result<Vec<Series>> {
    let ok = ctx.ok;
    let n = mat.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut acc = Series::zero(ok, v[0].xprec());
        for (j, vj) in v.iter().enumerate() {
            let tv = op(vj)?;
            let t = series::mul(ok, &mat[i][j], &tv);
            acc = series::add(ok, &acc, &t);
        }
        out.push(acc);
    }
    Ok(out)
}

/// matrix product where the right factor's entries get an operator applied
/// first (semilinear composition: (A ∘op B)_{ij} = sum_k A_{ik} op(B_{kj}))
fn mat_mul_op(
    ctx: &SeriesCtx,
    a: &[Vec<Series>],
    b: &[Vec<Series>],
    op: &dyn Fn(&Series) -> Result<Series>,
) -> Result<Vec<Vec<Series>>> {
    let ok = ctx.ok;
    let n = a.len();
    let mut out = vec![vec![Series::zero(ok, a[0][0].xprec()); n]; n];
    for i in 0..n {
        for j in 0..n {
            let mut acc = Series::zero(ok, a[0][0].xprec());
            for (k, row) in b.iter().enumerate() {
                let tb = op(&row[j])?;
                let t = series::mul(ok, &a[i][k], &tb);
                acc = series::add(ok, &acc, &t);
            }
            out[i][j] = acc;
        }
    }
    Ok(out)
}

/// the Wach-lattice conditions, checked to `tol` p-digits on a window
pub fn validate_wach(ctx: &SeriesCtx, w: &WachModule, tol: i32) -> Result<WachReport> {
    let ok = ctx.ok;
    let zp = ctx.zp();
    let mut report = WachReport::default();
    let window = w.p_mat[0][0].xprec().min(ctx.m as i64);
    // (i) Γ trivial mod X
    for (name, g) in [("delta", &w.g_delta), ("gamma1", &w.g_gamma1)] {
        for i in 0..w.rank {
            for j in 0..w.rank {
                let c0 = g[i][j].coeff_scaled(ok, 0);
                let idv = if i == j { ScaledOk::from_ok(ok, ok.one()) } else { ScaledOk::zero(ok) };
                if !c0.sub(ok, &idv).is_zero_mod(ok, tol) {
                    report.violations.push(format!("{name} not identity mod X at entry ({i},{j})"));
                }
            }
        }
    }
    // (ii) commutation: G γ(P) = P φ(G) for both generators; δ and γ_1 commute
    let delta_a = delta_generator(zp);
    let gam_a = 1 + zp.p;
    for (name, g, a) in [("delta", &w.g_delta, delta_a), ("gamma1", &w.g_gamma1, gam_a)] {
        let lhs = mat_mul_op(ctx, g, &w.p_mat, &|s| series::gamma_act(ctx, a, s))?;
        let rhs = mat_mul_op(ctx, &w.p_mat, g, &|s| series::phi(ctx, s))?;
        for i in 0..w.rank {
            for j in 0..w.rank {
                if !series::eq_mod(ok, &lhs[i][j], &rhs[i][j], tol, window.min(lhs[i][j].xprec())) {
                    report.violations.push(format!("φΓ-commutation fails for {name} at ({i},{j})"));
                }
            }
        }
    }
    {
        let lhs = mat_mul_op(ctx, &w.g_delta, &w.g_gamma1, &|s| series::gamma_act(ctx, delta_a, s))?;
        let rhs = mat_mul_op(ctx, &w.g_gamma1, &w.g_delta, &|s| series::gamma_act(ctx, gam_a, s))?;
        for i in 0..w.rank {
            for j in 0..w.rank {
                if !series::eq_mod(ok, &lhs[i][j], &rhs[i][j], tol, window.min(lhs[i][j].xprec())) {
                    report.violations.push(format!("ΔΓ_1-commutation fails at ({i},{j})"));
                }
            }
        }
    }
    // (iii) q^h-containment: q^h e_i in the A^+-span of the φ-matrix columns,
    // solved as coefficient-level linear algebra on the X-window
    let win = (window / 2).max(8);
    let solve_window = win;
    if let Err(e) = q_h_containment(ctx, w, solve_window, tol) {
        report.violations.push(format!("q^h-containment: {e}"));
    }
    Ok(report)
}

fn q_h_containment(ctx: &SeriesCtx, w: &WachModule, win: i64, _tol: i32) -> Result<()> {
    let ok = ctx.ok;
    let zp = ctx.zp();
    let rank = w.rank;
    let f = ok.f;
    // unknowns: coefficients of b_j(X) for degrees < win; equations: the
    // coefficients of sum_j b_j * Pcol_j - q^h e_i for degrees < win
    let ncols = rank * win as usize * f;
    let nrows = rank * win as usize * f;
    let mut cols: Vec<Vec<u64>> = Vec::with_capacity(ncols);
    for j in 0..rank {
        for d in 0..win {
            for fi in 0..f {
                let mut uj = ok.zero();
                uj.c[fi] = 1;
                let b = Series::monomial(ok, d, uj, win);
                // column vector: (sum over target index i of P_{ij} * b)
                let mut col = vec![0u64; nrows];
                for i in 0..rank {
                    let prod = series::mul_window(ok, &w.p_mat[i][j], &b, win);
                    for dd in 0..win {
                        let cc = prod.coeff(ok, dd);
                        for ff in 0..f {
                            col[(i * win as usize + dd as usize) * f + ff] = cc.c[ff];
                        }
                    }
                }
                cols.push(col);
            }
        }
    }
    let mut mat = Mat::zero(nrows, ncols);
    for (cidx, col) in cols.iter().enumerate() {
        for (ridx, &v) in col.iter().enumerate() {
            mat.set(ridx, cidx, v);
        }
    }
    let sm = smith(zp, &mat);
    let qh = series::powi(ok, &ctx.q, w.height.max(0) as u32, win);
    for i in 0..rank {
        let mut rhs = vec![0u64; nrows];
        for dd in 0..win {
            let cc = qh.coeff(ok, dd);
            for ff in 0..f {
                rhs[(i * win as usize + dd as usize) * f + ff] = cc.c[ff];
            }
        }
        let (_, loss) = sm.solve(zp, &rhs).map_err(|_| {
            Error::Invalid(format!("q^h e_{i} is not in the φ-image span on the window"))
        })?;
        if loss as i32 > zp.w as i32 / 2 {
            return Err(Error::Precision(format!("q^h-containment solve lost {loss} digits")));
        }
    }
    Ok(())
}

/// Γ-invariants of the scalar-extended module and the induced filtered
/// φ-module: kernel of both generator actions on the coefficient window,
/// filtration jumps read from the vanishing order along Φ_p(1+X).
///
/// Runs on a deliberately small window (wide windows let near-invariant
/// junk creep toward working precision) and re-solves on a larger one as a
/// stability check.
pub fn dcris_from_wach(ctx: &SeriesCtx, cy: &CycloCtx, w: &WachModule, tol: i32) -> Result<FilteredPhiModule> {
    let p = ctx.zp().p as i64;
    let base = (8 + (p - 1) * (w.height + 2)).clamp(12, 28);
    let avail = w.p_mat[0][0].xprec().min(ctx.m as i64);
    if avail < base + p {
        return Err(Error::Truncation { what: "invariant solve".into(), needed: base + p, have: avail });
    }
    let first = dcris_window(ctx, cy, w, tol, base)?;
    let second = dcris_window(ctx, cy, w, tol, (base + p).min(avail))?;
    if first.jumps != second.jumps {
        return Err(Error::Unstable(format!(
            "filtration jumps changed with the window: {:?} vs {:?}",
            first.jumps, second.jumps
        )));
    }
    Ok(second)
}

fn dcris_window(ctx: &SeriesCtx, cy: &CycloCtx, w: &WachModule, tol: i32, win: i64) -> Result<FilteredPhiModule> {
    let ok = ctx.ok;
    let zp = ctx.zp();
    let rank = w.rank;
    let f = ok.f;
    let dim = rank * win as usize * f;
    let delta_a = delta_generator(zp);
    let gam_a = 1 + zp.p;
    // stack the two operators (G γ(v) - v) vertically
    let mut mat = Mat::zero(2 * dim, dim);
    for j in 0..rank {
        for d in 0..win {
            for fi in 0..f {
                let mut uj = ok.zero();
                uj.c[fi] = 1;
                let mut v = vec![Series::zero(ok, win); rank];
                v[j] = Series::monomial(ok, d, uj, win);
                let col_idx = (j * win as usize + d as usize) * f + fi;
                for (block, (g, a)) in [(&w.g_delta, delta_a), (&w.g_gamma1, gam_a)].iter().enumerate() {
                    let gv = mat_apply_series(ctx, g, &|s| series::gamma_act(ctx, *a, s), &v)?;
                    for i in 0..rank {
                        let diff = series::sub(ok, &gv[i], &v[i]);
                        for dd in 0..win {
                            let cc = diff.coeff(ok, dd);
                            for ff in 0..f {
                                let row = block * dim + (i * win as usize + dd as usize) * f + ff;
                                mat.set(row, col_idx, cc.c[ff]);
                            }
                        }
                    }
                }
            }
        }
    }
    let sm = smith(zp, &mat);
    // near-kernel junk bounds the usable precision of everything downstream
    let junk_max = sm.divisors.iter().copied().filter(|&e| e > 0 && e < zp.w).max().unwrap_or(0);
    let tol_val = zp.w.saturating_sub(junk_max + 1);
    if (tol_val as i32) < tol {
        return Err(Error::Precision(format!(
            "invariant solve certifies only {tol_val} digits (junk divisor {junk_max}), {tol} requested"
        )));
    }
    let kernel = sm.free_kernel(zp);
    // group kernel vectors into O_K-lines: expect f * rank of them
    if kernel.len() != f * rank {
        return Err(Error::Precision(format!(
            "invariant space has Z_p-dimension {} (expected {}): precision too low",
            kernel.len(),
            f * rank
        )));
    }
    // pick K-basis: reduce the kernel as an O_K-module; use lattice span on
    // coordinates grouped by (component, degree) and select representatives
    // whose leading O_K-coordinates are independent
    let to_vecs = |kv: &Vec<u64>| -> Vec<Series> {
        let mut out = Vec::with_capacity(rank);
        for j in 0..rank {
            let mut s = Series::zero(ok, win);
            for d in 0..win {
                let mut e = ok.zero();
                for ff in 0..f {
                    e.c[ff] = kv[(j * win as usize + d as usize) * f + ff];
                }
                s.c[d as usize] = e;
            }
            out.push(s);
        }
        out
    };
    let mut reps: Vec<Vec<Series>> = Vec::new();
    let mut chosen_rows: Vec<Vec<u64>> = Vec::new();
    for kv in &kernel {
        if reps.len() == rank {
            break;
        }
        // O_K-independence test on the candidate list via Z_p-span growth
        let mut trial = chosen_rows.clone();
        for ff in 0..f {
            // multiply by u^ff: acts on coordinate blocks
            let mut v = vec![0u64; kv.len()];
            let vecs = to_vecs(kv);
            for (j, s) in vecs.iter().enumerate() {
                let mut uj = ok.zero();
                uj.c[ff] = 1;
                let su = series::scal(ok, &uj, s);
                for d in 0..win {
                    let cc = su.coeff(ok, d);
                    for f2 in 0..f {
                        v[(j * win as usize + d as usize) * f + f2] = cc.c[f2];
                    }
                }
            }
            trial.push(v);
        }
        let before = lattice_span(zp, &chosen_rows, dim).rank();
        let after = lattice_span(zp, &trial, dim).rank();
        if after >= before + f {
            chosen_rows = trial;
            reps.push(to_vecs(kv));
        }
    }
    if reps.len() != rank {
        return Err(Error::Precision("could not extract a K-basis of the invariants".into()));
    }
    // filtration jumps: vanishing order along Φ_p(1+X) of each invariant
    // vector (the index of the invariant lattice in the module lattice)
    let phi_p: Vec<u64> = cy.level(1)?.modulus.clone();
    let mut jumps = Vec::with_capacity(rank);
    for v in &reps {
        let mut order = 0i64;
        let mut cur: Vec<Series> = v.clone();
        'outer: loop {
            // tolerance relative to the current vector's size (quotients by
            // the monic cyclotomic factor pick up 1/p per step)
            let vmin = cur
                .iter()
                .map(|s| series::min_val(ok, s))
                .min()
                .unwrap_or(0);
            let mut next = Vec::with_capacity(rank);
            for s in &cur {
                match divide_by_phi1(ok, &phi_p, s, vmin + tol) {
                    Some(q) => next.push(q),
                    None => break 'outer,
                }
            }
            cur = next;
            order += 1;
            if order > w.height + 2 {
                break;
            }
        }
        jumps.push(order);
    }
    jumps.sort_unstable();
    // induced φ: φ(v_l) = sum_m c_{ml} v_m; solve on coordinates
    let mut phi_images: Vec<Vec<u64>> = Vec::new();
    for v in &reps {
        let pv = mat_apply_series(ctx, &w.p_mat, &|s| series::phi(ctx, s), v)?;
        let mut flat = vec![0u64; dim];
        for (j, s) in pv.iter().enumerate() {
            let scaled = s.clone();
            for d in 0..win {
                let cc = scaled.coeff(ok, d);
                for ff in 0..f {
                    flat[(j * win as usize + d as usize) * f + ff] = cc.c[ff];
                }
            }
        }
        phi_images.push(flat);
    }
    // basis matrix: columns = reps coordinates scaled by u^ff
    let mut basis_cols: Vec<Vec<u64>> = Vec::new();
    for v in &reps {
        for ff in 0..f {
            let mut flat = vec![0u64; dim];
            for (j, s) in v.iter().enumerate() {
                let mut uj = ok.zero();
                uj.c[ff] = 1;
                let su = series::scal(ok, &uj, s);
                for d in 0..win {
                    let cc = su.coeff(ok, d);
                    for f2 in 0..f {
                        flat[(j * win as usize + d as usize) * f + f2] = cc.c[f2];
                    }
                }
            }
            basis_cols.push(flat);
        }
    }
    let bmat = Mat::from_rows(basis_cols).transpose();
    let bsm = smith(zp, &bmat);
    let mut phi = vec![vec![ScaledOk::zero(ok); rank]; rank];
    for (l, img) in phi_images.iter().enumerate() {
        let (sol, _loss) = bsm.solve_tol(zp, img, tol_val).map_err(|_| {
            Error::Precision("φ-image escapes the invariant span (precision too low)".into())
        })?;
        for m in 0..rank {
            let mut e = ok.zero();
            for ff in 0..f {
                e.c[ff] = sol[m * f + ff];
            }
            phi[m][l] = ScaledOk { c: e, shift: 0, prec: tol_val as i32 };
        }
    }
    Ok(FilteredPhiModule { d: rank, phi, jumps })
}

/// exact-enough division by the monic level-1 cyclotomic polynomial in
/// 1+X; returns None when the remainder is nonzero at the absolute
/// valuation threshold `tol_abs`
fn divide_by_phi1(ok: &OkCtx, phi_p: &[u64], s: &Series, tol_abs: i32) -> Option<Series> {
    let deg = phi_p.len() - 1;
    let mut rem = s.clone();
    if rem.lo != 0 {
        if rem.lo < 0 {
            return None;
        }
        let mut ext = vec![ok.zero(); rem.lo as usize];
        ext.extend(rem.c);
        rem.c = ext;
        rem.lo = 0;
    }
    let n = rem.c.len();
    if n <= deg {
        return None;
    }
    let mut q = vec![ok.zero(); n - deg];
    for d in (deg..n).rev() {
        let lead = rem.c[d].clone();
        if ok.is_zero(&lead) {
            continue;
        }
        q[d - deg] = lead.clone();
        for (k, &pc) in phi_p.iter().enumerate() {
            if pc == 0 {
                continue;
            }
            let t = ok.scal(pc, &lead);
            rem.c[d - deg + k] = ok.sub(&rem.c[d - deg + k], &t);
        }
    }
    // remainder must vanish to tolerance
    for x in rem.c.iter().take(deg) {
        if ((ok.val(x) as i32) - s.shift) < tol_abs.min(s.prec) {
            return None;
        }
    }
    Some(Series { lo: 0, c: q, shift: s.shift, prec: s.prec })
}

// ---- representation spec files and the CLI grammar ----

/// serialized series: little-endian coefficient list from degree `lo`;
/// each coefficient is one base-p digit string per O_K-coordinate
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeriesRepr {
    pub lo: i64,
    pub shift: i32,
    pub coeffs: Vec<Vec<String>>,
}

pub fn digits_to_u64(p: u64, s: &str) -> Result<u64> {
    let mut v: u64 = 0;
    let mut scale: u64 = 1;
    for d in s.split('.') {
        let d: u64 = d.trim().parse().map_err(|_| Error::Invalid(format!("bad digit string {s}")))?;
        if d >= p {
            return Err(Error::Invalid(format!("digit {d} out of range for base {p}")));
        }
        v = v
            .checked_add(d.checked_mul(scale).ok_or_else(|| Error::Invalid("digit overflow".into()))?)
            .ok_or_else(|| Error::Invalid("digit overflow".into()))?;
        scale = scale.saturating_mul(p);
    }
    Ok(v)
}

pub fn u64_to_digits(p: u64, mut v: u64) -> String {
    if v == 0 {
        return "0".into();
    }
    let mut out = Vec::new();
    while v > 0 {
        out.push((v % p).to_string());
        v /= p;
    }
    out.join(".")
}

impl SeriesRepr {
    pub fn from_series(ok: &OkCtx, s: &Series) -> Self {
        SeriesRepr {
            lo: s.lo,
            shift: s.shift,
            coeffs: s
                .c
                .iter()
                .map(|e| e.c.iter().map(|&v| u64_to_digits(ok.zp.p, v)).collect())
                .collect(),
        }
    }

    pub fn to_series(&self, ok: &OkCtx) -> Result<Series> {
        let mut c = Vec::with_capacity(self.coeffs.len());
        for co in &self.coeffs {
            if co.len() != ok.f {
                return Err(Error::Invalid(format!("coefficient has {} coordinates, expected {}", co.len(), ok.f)));
            }
            let mut e = ok.zero();
            for (i, s) in co.iter().enumerate() {
                e.c[i] = digits_to_u64(ok.zp.p, s)? % ok.zp.pw;
            }
            c.push(e);
        }
        Ok(Series { lo: self.lo, c, shift: self.shift, prec: ok.zp.w as i32 })
    }
}

/// representation spec file schema
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RepFile {
    TateTwist {
        r: i64,
        /// λ as one base-p digit string per O_K-coordinate
        lambda: Vec<String>,
    },
    Sum {
        summands: Vec<RepFile>,
    },
    Raw {
        rank: usize,
        height: i64,
        phi: Vec<Vec<SeriesRepr>>,
        g_delta: Vec<Vec<SeriesRepr>>,
        g_gamma1: Vec<Vec<SeriesRepr>>,
    },
}

impl RepFile {
    pub fn to_rep_data(&self, ok: &OkCtx) -> Result<RepData> {
        match self {
            RepFile::TateTwist { r, lambda } => {
                let mut e = ok.zero();
                if lambda.len() != ok.f {
                    return Err(Error::Invalid(format!("λ needs {} coordinates", ok.f)));
                }
                for (i, s) in lambda.iter().enumerate() {
                    e.c[i] = digits_to_u64(ok.zp.p, s)? % ok.zp.pw;
                }
                if !ok.is_unit(&e) {
                    return Err(Error::Invalid("λ must be a unit of O_K".into()));
                }
                Ok(RepData::tate(-*r.min(&0) + 0.max(*r) * 0 + *r, e))
            }
            RepFile::Sum { summands } => {
                let mut comps = Vec::new();
                for s in summands {
                    comps.extend(s.to_rep_data(ok)?.comps);
                }
                Ok(RepData { comps })
            }
            RepFile::Raw { .. } => Err(Error::Unsupported(
                "raw Wach matrices are validated via the wach suite, not run through the kernel machinery".into(),
            )),
        }
    }

    pub fn to_wach(&self, ctx: &SeriesCtx, window: i64) -> Result<WachModule> {
        match self {
            RepFile::Raw { rank, height, phi, g_delta, g_gamma1 } => {
                let conv = |m: &Vec<Vec<SeriesRepr>>| -> Result<Vec<Vec<Series>>> {
                    m.iter().map(|row| row.iter().map(|s| s.to_series(ctx.ok)).collect()).collect()
                };
                Ok(WachModule {
                    rank: *rank,
                    p_mat: conv(phi)?,
                    g_delta: conv(g_delta)?,
                    g_gamma1: conv(g_gamma1)?,
                    height: *height,
                })
            }
            other => {
                let rep = other.to_rep_data(ctx.ok)?;
                let mods: Result<Vec<WachModule>> =
                    rep.comps.iter().map(|c| tate_twist_wach(ctx, c, window)).collect();
                Ok(wach_direct_sum(&mods?, ctx.ok, window))
            }
        }
    }
}

/// CLI grammar: `tate:<-r>[*unramified:<λ>]`, `sum(<spec>,<spec>)`, `raw:<path>`
pub fn parse_rep_spec(ok: &OkCtx, s: &str) -> Result<RepFile> {
    let s = s.trim();
    if let Some(rest) = s.strip_prefix("sum(") {
        let inner = rest.strip_suffix(')').ok_or_else(|| Error::Invalid("unbalanced sum(...)".into()))?;
        // split at top-level commas
        let mut parts = Vec::new();
        let mut depth = 0usize;
        let mut cur = String::new();
        for ch in inner.chars() {
            match ch {
                '(' => {
                    depth += 1;
                    cur.push(ch);
                }
                ')' => {
                    depth -= 1;
                    cur.push(ch);
                }
                ',' if depth == 0 => {
                    parts.push(cur.clone());
                    cur.clear();
                }
                _ => cur.push(ch),
            }
        }
        if !cur.trim().is_empty() {
            parts.push(cur);
        }
        let summands: Result<Vec<RepFile>> = parts.iter().map(|p| parse_rep_spec(ok, p)).collect();
        return Ok(RepFile::Sum { summands: summands? });
    }
    if let Some(rest) = s.strip_prefix("tate:") {
        let (rs, lam) = match rest.split_once('*') {
            None => (rest, None),
            Some((a, b)) => (a, Some(b)),
        };
        let minus_r: i64 = rs
            .trim()
            .parse()
            .map_err(|_| Error::Invalid(format!("bad twist exponent {rs}")))?;
        if minus_r > 0 {
            return Err(Error::Invalid("positive lattices need tate:<-r> with r >= 0".into()));
        }
        let lambda = match lam {
            None => vec![u64_to_digits(ok.zp.p, 1); ok.f],
            Some(l) => {
                let l = l
                    .strip_prefix("unramified:")
                    .ok_or_else(|| Error::Invalid("expected unramified:<λ digits>".into()))?;
                l.split(',').map(|x| x.trim().to_string()).collect()
            }
        };
        let mut lam_vec = lambda;
        while lam_vec.len() < ok.f {
            lam_vec.push("0".into());
        }
        return Ok(RepFile::TateTwist { r: -minus_r, lambda: lam_vec });
    }
    if let Some(path) = s.strip_prefix("raw:") {
        let text = std::fs::read_to_string(path.trim())
            .map_err(|e| Error::Invalid(format!("cannot read representation file {path}: {e}")))?;
        let rf: RepFile =
            serde_json::from_str(&text).map_err(|e| Error::Invalid(format!("bad representation file: {e}")))?;
        return Ok(rf);
    }
    Err(Error::Invalid(format!("unknown representation spec `{s}`")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prec::{Precision, Tower};

    fn tower(p: u64, f: usize) -> Tower {
        Tower::new(Precision { p, n_prec: 8, m_trunc: 48, f, n_max: 2, j_max: 8 }).unwrap()
    }

    #[test]
    fn tate_twists_validate() {
        for (p, f) in [(3u64, 1usize), (5, 1), (3, 2)] {
            let t = tower(p, f);
            let ctx = SeriesCtx::new(&t.ok, t.prec.m_trunc, t.prec.j_max);
            for r in 0..=2i64 {
                let tw = Rank1Twist { r, lambda: t.ok.from_u64(1 + p) };
                let w = tate_twist_wach(&ctx, &tw, 40).unwrap();
                let rep = validate_wach(&ctx, &w, 6).unwrap();
                assert!(rep.passed(), "r={r} p={p} f={f}: {:?}", rep.violations);
            }
        }
    }

    #[test]
    fn perturbed_module_fails_validation() {
        let t = tower(3, 1);
        let ctx = SeriesCtx::new(&t.ok, t.prec.m_trunc, t.prec.j_max);
        let tw = Rank1Twist { r: 1, lambda: t.ok.one() };
        let mut w = tate_twist_wach(&ctx, &tw, 40).unwrap();
        // shift the γ_1-matrix off the identity at X^0
        w.g_gamma1[0][0].c[0] = t.ok.add(&w.g_gamma1[0][0].c[0], &t.ok.one());
        let rep = validate_wach(&ctx, &w, 6).unwrap();
        assert!(!rep.passed());
        assert!(rep.violations.iter().any(|v| v.contains("identity mod X")));
    }

    #[test]
    fn dcris_of_twists() {
        let t = tower(3, 1);
        let ctx = SeriesCtx::new(&t.ok, t.prec.m_trunc, t.prec.j_max);
        for (r, lam) in [(0i64, 1u64), (1, 4), (2, 2)] {
            let tw = Rank1Twist { r, lambda: t.ok.from_u64(lam) };
            let w = tate_twist_wach(&ctx, &tw, 40).unwrap();
            let dc = dcris_from_wach(&ctx, &t.cyclo, &w, 5).unwrap();
            assert_eq!(dc.d, 1);
            assert_eq!(dc.jumps, vec![r], "filtration jump for r={r}");
            // φ = λ p^r on the invariant line
            let val = dc.phi[0][0].val(&t.ok);
            assert_eq!(val as i64, r, "φ-valuation for r={r}");
        }
        // direct sum concatenates
        let w1 = tate_twist_wach(&ctx, &Rank1Twist { r: 1, lambda: t.ok.one() }, 40).unwrap();
        let w2 = tate_twist_wach(&ctx, &Rank1Twist { r: 2, lambda: t.ok.from_u64(2) }, 40).unwrap();
        let sum = wach_direct_sum(&[w1, w2], &t.ok, 40);
        let dc = dcris_from_wach(&ctx, &t.cyclo, &sum, 5).unwrap();
        assert_eq!(dc.jumps, vec![1, 2]);
        assert_eq!(dc.t_h(), 3);
        assert_eq!(dc.largest_jump(), 2);
    }

    #[test]
    fn rep_spec_grammar() {
        let t = tower(5, 1);
        let rf = parse_rep_spec(&t.ok, "tate:-1").unwrap();
        let rd = rf.to_rep_data(&t.ok).unwrap();
        assert_eq!(rd.comps[0].r, 1);
        let rf2 = parse_rep_spec(&t.ok, "sum(tate:-1*unramified:2,tate:-2)").unwrap();
        let rd2 = rf2.to_rep_data(&t.ok).unwrap();
        assert_eq!(rd2.dim(), 2);
        assert_eq!(rd2.comps[0].lambda, t.ok.from_u64(2));
        assert_eq!(rd2.height(), 2);
        // digit strings
        assert_eq!(digits_to_u64(5, "2.1").unwrap(), 7);
        assert_eq!(u64_to_digits(5, 7), "2.1");
    }

    #[test]
    fn filtered_module_bookkeeping() {
        let t = tower(3, 2);
        let rep = RepData {
            comps: vec![
                Rank1Twist { r: 1, lambda: t.ok.from_u64(2) },
                Rank1Twist { r: 2, lambda: t.ok.gen() },
            ],
        };
        let fm = rep.filtered_module(&t.ok);
        assert_eq!(fm.t_h(), 3);
        assert_eq!(fm.dim_fil(1), 2);
        assert_eq!(fm.dim_fil(2), 1);
        assert_eq!(fm.dim_fil_qp(2, 2), 2);
        // index [M : φM] = p^{f t_H}
        assert_eq!(fm.index_phi_val(&t.ok).unwrap(), 2 * 3);
        // admissibility bookkeeping for the rank-1 factors holds by construction
        assert!(!rep.has_cyclotomic_subquotient(&t.ok));
        let rep2 = RepData::tate(1, t.ok.one());
        assert!(rep2.has_cyclotomic_subquotient(&t.ok));
    }
}
