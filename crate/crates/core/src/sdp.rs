//! Self-contained first-order conic solver for small dense semidefinite
//! programs.
//!
//! Problems are expressed over a free variable vector `x` as
//!
//! ```text
//!   minimize    c . x
//!   subject to  L x  = r          (equality rows)
//!               G x <= h          (inequality rows)
//!               F_k(x) + G_k  PSD (one affine matrix expression per block)
//! ```
//!
//! which is assembled into the conic form `A x + s = b`, `s in K` with
//! `K = {0}^m_eq x R+^m_ineq x PSD(d_1) x ... x PSD(d_k)`, PSD blocks stored
//! in svec form (upper triangle, off-diagonals scaled by sqrt(2)).
//!
//! The solver is an over-relaxed ADMM on this splitting: the x-update solves
//! a ridge-regularized least-squares problem against a cached Cholesky factor
//! of `sigma0 I + A^T A`, the s-update projects onto `K` via dense
//! eigendecompositions, and the scaled dual `u` accumulates the residual.
//! Ruiz equilibration (uniform per PSD block) plus residual-balancing updates
//! of the penalty keep the iteration well-conditioned. Everything is
//! deterministic: fixed iteration order, no threads, no wall-clock decisions.
//!
//! Infeasibility is never certified here; callers quantify infeasibility
//! through the eta-max formulation (`solve_feasibility_eta`), which maximizes
//! the margin `eta` such that selected blocks dominate `eta I`.

use crate::linalg::sym_eig;
use crate::{CtxError, Result};
use serde::Serialize;

/// Sparse linear functional on the variable vector.
pub type SparseVec = Vec<(usize, f64)>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Sense {
    Min,
    Max,
}

/// Handle to a PSD block of an [`SdpProblem`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockId(pub usize);

#[derive(Clone, Debug)]
struct PsdBlockSpec {
    dim: usize,
    /// Affine expansion per upper-triangle entry (i <= j), unscaled.
    map: Vec<Vec<(usize, f64)>>,
    constant: Vec<f64>,
}

impl PsdBlockSpec {
    fn tri_index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i <= j && j < self.dim);
        j * (j + 1) / 2 + i
    }
}

/// A multi-block semidefinite program over a free variable vector.
#[derive(Clone, Debug)]
pub struct SdpProblem {
    num_vars: usize,
    objective: SparseVec,
    obj_offset: f64,
    sense: Sense,
    eq: Vec<(SparseVec, f64)>,
    ineq_le: Vec<(SparseVec, f64)>,
    blocks: Vec<PsdBlockSpec>,
}

impl SdpProblem {
    pub fn new(num_vars: usize) -> Self {
        Self {
            num_vars,
            objective: Vec::new(),
            obj_offset: 0.0,
            sense: Sense::Min,
            eq: Vec::new(),
            ineq_le: Vec::new(),
            blocks: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn add_var(&mut self) -> usize {
        self.num_vars += 1;
        self.num_vars - 1
    }

    pub fn minimize(&mut self, terms: SparseVec, offset: f64) {
        self.objective = terms;
        self.obj_offset = offset;
        self.sense = Sense::Min;
    }

    pub fn maximize(&mut self, terms: SparseVec, offset: f64) {
        self.objective = terms;
        self.obj_offset = offset;
        self.sense = Sense::Max;
    }

    pub fn add_eq(&mut self, terms: SparseVec, rhs: f64) {
        self.eq.push((Self::merge(terms), rhs));
    }

    /// `terms . x <= rhs`
    pub fn add_ineq_le(&mut self, terms: SparseVec, rhs: f64) {
        self.ineq_le.push((Self::merge(terms), rhs));
    }

    /// `terms . x >= rhs`
    pub fn add_ineq_ge(&mut self, terms: SparseVec, rhs: f64) {
        let neg: SparseVec = terms.into_iter().map(|(i, v)| (i, -v)).collect();
        self.ineq_le.push((Self::merge(neg), -rhs));
    }

    /// Adds an empty PSD block of side `dim`; fill it with
    /// [`block_entry_add`](Self::block_entry_add) and
    /// [`block_entry_const`](Self::block_entry_const).
    pub fn add_psd_block(&mut self, dim: usize) -> BlockId {
        let len = dim * (dim + 1) / 2;
        self.blocks.push(PsdBlockSpec { dim, map: vec![Vec::new(); len], constant: vec![0.0; len] });
        BlockId(self.blocks.len() - 1)
    }

    /// Adds `coeff * x[var]` to entry (i, j), i <= j, of the block's affine
    /// matrix expression (the mirror entry is implied).
    pub fn block_entry_add(&mut self, b: BlockId, i: usize, j: usize, var: usize, coeff: f64) {
        let (i, j) = (i.min(j), i.max(j));
        let idx = self.blocks[b.0].tri_index(i, j);
        self.blocks[b.0].map[idx].push((var, coeff));
    }

    pub fn block_entry_const(&mut self, b: BlockId, i: usize, j: usize, val: f64) {
        let (i, j) = (i.min(j), i.max(j));
        let idx = self.blocks[b.0].tri_index(i, j);
        self.blocks[b.0].constant[idx] += val;
    }

    pub fn block_dim(&self, b: BlockId) -> usize {
        self.blocks[b.0].dim
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    fn merge(mut terms: SparseVec) -> SparseVec {
        terms.sort_by_key(|&(i, _)| i);
        let mut out: SparseVec = Vec::with_capacity(terms.len());
        for (i, v) in terms {
            match out.last_mut() {
                Some((j, w)) if *j == i => *w += v,
                _ => out.push((i, v)),
            }
        }
        out.retain(|&(_, v)| v != 0.0);
        out
    }

    /// Spec-style constructor: one PSD block per side length, with the block
    /// entries themselves as the variables. Returns the problem plus an
    /// indexer per block mapping entry (i, j), i <= j, to its variable.
    pub fn with_variable_blocks(dims: &[usize]) -> (Self, Vec<BlockVars>) {
        let mut total = 0usize;
        let mut indexers = Vec::with_capacity(dims.len());
        for &d in dims {
            indexers.push(BlockVars { dim: d, base: total });
            total += d * (d + 1) / 2;
        }
        let mut p = Self::new(total);
        for (k, &d) in dims.iter().enumerate() {
            let b = p.add_psd_block(d);
            for j in 0..d {
                for i in 0..=j {
                    let v = indexers[k].var(i, j);
                    p.block_entry_add(b, i, j, v, 1.0);
                }
            }
        }
        (p, indexers)
    }
}

/// Maps upper-triangle entries of a variable block to variable indices.
#[derive(Clone, Copy, Debug)]
pub struct BlockVars {
    dim: usize,
    base: usize,
}

/// Variables for a complex Hermitian matrix `X = A + iB` constrained PSD via
/// the real embedding `[[A, -B], [B, A]]` (PSD iff `X` is).
///
/// `A` is symmetric (upper-triangle variables), `B` skew-symmetric
/// (strict-upper-triangle variables).
#[derive(Clone, Copy, Debug)]
pub struct HermitianVars {
    dim: usize,
    re_base: usize,
    im_base: usize,
}

impl HermitianVars {
    /// Appends the variables and the embedded 2n x 2n PSD block.
    pub fn add_to(p: &mut SdpProblem, dim: usize) -> (Self, BlockId) {
        let re_base = p.num_vars;
        p.num_vars += dim * (dim + 1) / 2;
        let im_base = p.num_vars;
        p.num_vars += dim * (dim - 1) / 2;
        let hv = Self { dim, re_base, im_base };
        let b = p.add_psd_block(2 * dim);
        for j in 0..dim {
            for i in 0..=j {
                let v = hv.re_var(i, j);
                p.block_entry_add(b, i, j, v, 1.0);
                p.block_entry_add(b, i + dim, j + dim, v, 1.0);
            }
        }
        // Upper-right block holds -B.
        for i in 0..dim {
            for j in 0..dim {
                if let Some((v, sign)) = hv.im_var(i, j) {
                    p.block_entry_add(b, i, j + dim, v, -sign);
                }
            }
        }
        (hv, b)
    }

    /// Variable for `Re X[i][j]` (i <= j after ordering).
    pub fn re_var(&self, i: usize, j: usize) -> usize {
        let (i, j) = (i.min(j), i.max(j));
        debug_assert!(j < self.dim);
        self.re_base + j * (j + 1) / 2 + i
    }

    /// Variable and sign for `Im X[i][j]`; `None` on the diagonal.
    pub fn im_var(&self, i: usize, j: usize) -> Option<(usize, f64)> {
        use std::cmp::Ordering;
        match i.cmp(&j) {
            Ordering::Equal => None,
            Ordering::Less => Some((self.im_base + j * (j - 1) / 2 + i, 1.0)),
            Ordering::Greater => Some((self.im_base + i * (i - 1) / 2 + j, -1.0)),
        }
    }

    /// Pins `X[i][j] = value` (both real and imaginary parts).
    pub fn pin(&self, p: &mut SdpProblem, i: usize, j: usize, value: crate::linalg::C64) {
        let (i, j, value) = if i <= j { (i, j, value) } else { (j, i, value.conj()) };
        p.add_eq(vec![(self.re_var(i, j), 1.0)], value.re);
        if let Some((v, sign)) = self.im_var(i, j) {
            p.add_eq(vec![(v, sign)], value.im);
        } else {
            debug_assert!(value.im.abs() < 1e-12);
        }
    }

    /// Functional for the real part of `tr(X W)` with Hermitian `W`.
    pub fn trace_product_terms(&self, w: &crate::linalg::HermitianMatrix) -> SparseVec {
        assert_eq!(w.dim(), self.dim);
        let mut terms: SparseVec = Vec::new();
        for i in 0..self.dim {
            terms.push((self.re_var(i, i), w.get(i, i).re));
            for j in (i + 1)..self.dim {
                let wij = w.get(i, j);
                terms.push((self.re_var(i, j), 2.0 * wij.re));
                if let Some((v, sign)) = self.im_var(i, j) {
                    // Re tr(XW) = sum Re X_ij Re W_ij + Im X_ij Im W_ij (doubled off-diag)
                    terms.push((v, 2.0 * sign * wij.im));
                }
            }
        }
        SdpProblem::merge(terms)
    }

    /// Reconstructs the complex matrix from a solved variable vector.
    pub fn extract(&self, x: &[f64]) -> crate::linalg::HermitianMatrix {
        let mut m = crate::linalg::HermitianMatrix::zeros(self.dim);
        for j in 0..self.dim {
            for i in 0..=j {
                let re = x[self.re_var(i, j)];
                let im = match self.im_var(i, j) {
                    Some((v, sign)) => sign * x[v],
                    None => 0.0,
                };
                m.set_sym(i, j, crate::linalg::C64::new(re, im));
            }
        }
        m
    }
}

impl BlockVars {
    /// Variable holding entry (i, j) = (j, i) of the block.
    pub fn var(&self, i: usize, j: usize) -> usize {
        let (i, j) = (i.min(j), i.max(j));
        debug_assert!(j < self.dim);
        self.base + j * (j + 1) / 2 + i
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

/// Solver configuration.
#[derive(Clone, Debug, Serialize)]
pub struct SolveCfg {
    /// Target for normalized primal/dual residuals and duality gap.
    pub tol: f64,
    pub max_iter: usize,
    pub rho0: f64,
    /// Over-relaxation parameter in (1, 2); 1.0 disables relaxation.
    pub alpha: f64,
    /// Ridge weight of the x-update, relative to rho.
    pub sigma0: f64,
    pub check_every: usize,
    /// Anderson-acceleration memory (0 disables acceleration).
    pub aa_memory: usize,
    /// Feasibility level at which relaxation bounds are still accepted with
    /// their dual certificate when the target tolerance is out of reach
    /// (degenerate instances with sublinear tails).
    pub accept_tol: f64,
    /// Seed recorded for reproducibility bookkeeping; the solve itself is
    /// deterministic and does not draw random numbers.
    pub seed: u64,
}

impl Default for SolveCfg {
    fn default() -> Self {
        Self {
            tol: crate::tol::SOLVER,
            max_iter: 60_000,
            rho0: 1.0,
            alpha: 1.0,
            sigma0: 1e-6,
            check_every: 25,
            aa_memory: 16,
            accept_tol: 1e-6,
            seed: 0,
        }
    }
}

/// Safeguarded type-II Anderson acceleration over a fixed-point iteration.
///
/// Keeps the last `memory` iterate/residual differences and proposes the
/// extrapolated point `G(z) - (dZ + dF) gamma` with `gamma` solving a small
/// regularized least-squares problem. The caller handles safeguarding.
struct Anderson {
    memory: usize,
    z_prev: Vec<f64>,
    f_prev: Vec<f64>,
    dz: std::collections::VecDeque<Vec<f64>>,
    df: std::collections::VecDeque<Vec<f64>>,
    /// gram_rows[i][j] = df_i . df_j for j <= i (kept in step with df).
    gram_rows: std::collections::VecDeque<Vec<f64>>,
    have_prev: bool,
}

impl Anderson {
    fn new(memory: usize, dim: usize) -> Self {
        Self {
            memory,
            z_prev: vec![0.0; dim],
            f_prev: vec![0.0; dim],
            dz: std::collections::VecDeque::new(),
            df: std::collections::VecDeque::new(),
            gram_rows: std::collections::VecDeque::new(),
            have_prev: false,
        }
    }

    fn reset(&mut self) {
        self.dz.clear();
        self.df.clear();
        self.gram_rows.clear();
        self.have_prev = false;
    }

    /// Feeds the pair (z, F(z)=Gz - z) and returns an accelerated candidate
    /// for the next iterate, or `None` when history is insufficient.
    fn propose(&mut self, z: &[f64], f: &[f64], gz: &[f64]) -> Option<Vec<f64>> {
        if self.memory == 0 {
            return None;
        }
        if self.have_prev {
            let dz: Vec<f64> = z.iter().zip(self.z_prev.iter()).map(|(a, b)| a - b).collect();
            let df: Vec<f64> = f.iter().zip(self.f_prev.iter()).map(|(a, b)| a - b).collect();
            let mut row: Vec<f64> = self
                .df
                .iter()
                .map(|old| old.iter().zip(df.iter()).map(|(a, b)| a * b).sum())
                .collect();
            row.push(df.iter().map(|a| a * a).sum());
            self.dz.push_back(dz);
            self.df.push_back(df);
            self.gram_rows.push_back(row);
            if self.dz.len() > self.memory {
                self.dz.pop_front();
                self.df.pop_front();
                self.gram_rows.pop_front();
                for r in self.gram_rows.iter_mut() {
                    r.remove(0);
                }
            }
        }
        self.z_prev.copy_from_slice(z);
        self.f_prev.copy_from_slice(f);
        self.have_prev = true;
        let m = self.df.len();
        if m == 0 {
            return None;
        }
        // gamma = argmin || f - dF gamma ||^2 with Tikhonov regularization.
        let mut gram = vec![0.0; m * m];
        let mut rhs = vec![0.0; m];
        let mut scale = 0.0f64;
        for i in 0..m {
            for j in 0..=i {
                let v = self.gram_rows[i][j];
                gram[i * m + j] = v;
                gram[j * m + i] = v;
            }
            scale = scale.max(self.gram_rows[i][i]);
            rhs[i] = self.df[i].iter().zip(f.iter()).map(|(a, b)| a * b).sum();
        }
        let reg = (scale * 1e-12).max(1e-300);
        for i in 0..m {
            gram[i * m + i] += reg;
        }
        let gamma = solve_small(&mut gram, &mut rhs, m)?;
        let mut out = gz.to_vec();
        for i in 0..m {
            let g = gamma[i];
            if g == 0.0 {
                continue;
            }
            for (o, (dz, df)) in out.iter_mut().zip(self.dz[i].iter().zip(self.df[i].iter())) {
                *o -= g * (dz + df);
            }
        }
        Some(out)
    }
}

/// In-place Gaussian elimination with partial pivoting for tiny systems.
fn solve_small(a: &mut [f64], b: &mut [f64], n: usize) -> Option<Vec<f64>> {
    for col in 0..n {
        let mut piv = col;
        for r in (col + 1)..n {
            if a[r * n + col].abs() > a[piv * n + col].abs() {
                piv = r;
            }
        }
        if a[piv * n + col].abs() < 1e-300 {
            return None;
        }
        if piv != col {
            for c in 0..n {
                a.swap(col * n + c, piv * n + c);
            }
            b.swap(col, piv);
        }
        let d = a[col * n + col];
        for r in (col + 1)..n {
            let f = a[r * n + col] / d;
            if f == 0.0 {
                continue;
            }
            for c in col..n {
                a[r * n + c] -= f * a[col * n + c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let mut acc = b[r];
        for c in (r + 1)..n {
            acc -= a[r * n + c] * x[c];
        }
        x[r] = acc / a[r * n + r];
    }
    Some(x)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SolveStatus {
    Optimal,
    InfeasibleCertified,
    Unbounded,
    MaxIter,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Residuals {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
}

#[derive(Clone, Debug)]
pub struct SdpSolution {
    pub status: SolveStatus,
    /// Primal objective in the problem's stated sense, including the offset.
    pub objective: f64,
    /// Lagrangian dual objective in the problem's stated sense. For a
    /// maximization this value certifies an upper bound on the optimum
    /// whenever the dual residual is small, even before the duality gap has
    /// closed; the converse holds for minimization.
    pub dual_objective: f64,
    pub x: Vec<f64>,
    /// Cone-feasible PSD block values, dense row-major.
    pub blocks: Vec<(usize, Vec<f64>)>,
    /// Dual multipliers per assembled constraint row.
    pub dual: Vec<f64>,
    pub residuals: Residuals,
    pub iterations: usize,
}

impl SdpSolution {
    /// True when both feasibility residuals meet `tol` (the duality gap may
    /// still be closing); the dual objective is then a certified bound.
    pub fn feasibility_converged(&self, tol: f64) -> bool {
        self.residuals.primal <= tol && self.residuals.dual <= tol
    }
}

impl SdpSolution {
    pub fn block_matrix(&self, b: BlockId) -> &(usize, Vec<f64>) {
        &self.blocks[b.0]
    }
}

// -- assembled conic data ----------------------------------------------------

const SQRT2: f64 = std::f64::consts::SQRT_2;

struct Csr {
    rows: usize,
    ptr: Vec<usize>,
    idx: Vec<usize>,
    val: Vec<f64>,
}

impl Csr {
    fn from_rows(rows: &[SparseVec]) -> Self {
        let mut ptr = Vec::with_capacity(rows.len() + 1);
        let mut idx = Vec::new();
        let mut val = Vec::new();
        ptr.push(0);
        for r in rows {
            for &(c, v) in r {
                idx.push(c);
                val.push(v);
            }
            ptr.push(idx.len());
        }
        Self { rows: rows.len(), ptr, idx, val }
    }

    fn mul(&self, x: &[f64], out: &mut [f64]) {
        for r in 0..self.rows {
            let mut acc = 0.0;
            for k in self.ptr[r]..self.ptr[r + 1] {
                acc += self.val[k] * x[self.idx[k]];
            }
            out[r] = acc;
        }
    }

    fn mul_transpose(&self, y: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for r in 0..self.rows {
            let yr = y[r];
            if yr == 0.0 {
                continue;
            }
            for k in self.ptr[r]..self.ptr[r + 1] {
                out[self.idx[k]] += self.val[k] * yr;
            }
        }
    }
}

#[derive(Clone, Copy)]
enum ConeSeg {
    Zero { start: usize, len: usize },
    Nonneg { start: usize, len: usize },
    Psd { start: usize, dim: usize },
}

struct Assembled {
    a_rows: Vec<SparseVec>,
    b: Vec<f64>,
    cones: Vec<ConeSeg>,
    /// Row range per original PSD block, for extraction.
    block_rows: Vec<(usize, usize)>,
}

fn assemble(p: &SdpProblem) -> Assembled {
    let mut a_rows: Vec<SparseVec> = Vec::new();
    let mut b: Vec<f64> = Vec::new();
    let mut cones = Vec::new();
    if !p.eq.is_empty() {
        cones.push(ConeSeg::Zero { start: 0, len: p.eq.len() });
        for (terms, rhs) in &p.eq {
            a_rows.push(terms.clone());
            b.push(*rhs);
        }
    }
    if !p.ineq_le.is_empty() {
        cones.push(ConeSeg::Nonneg { start: a_rows.len(), len: p.ineq_le.len() });
        for (terms, rhs) in &p.ineq_le {
            a_rows.push(terms.clone());
            b.push(*rhs);
        }
    }
    let mut block_rows = Vec::new();
    for spec in &p.blocks {
        let start = a_rows.len();
        cones.push(ConeSeg::Psd { start, dim: spec.dim });
        for j in 0..spec.dim {
            for i in 0..=j {
                let scale = if i == j { 1.0 } else { SQRT2 };
                let idx = spec.tri_index(i, j);
                // s = F(x) + G  =>  row of A is -F, rhs is G.
                let row: SparseVec = SdpProblem::merge(
                    spec.map[idx].iter().map(|&(v, c)| (v, -c * scale)).collect(),
                );
                a_rows.push(row);
                b.push(spec.constant[idx] * scale);
            }
        }
        block_rows.push((start, a_rows.len()));
    }
    Assembled { a_rows, b, cones, block_rows }
}

/// Uniform scale per PSD block, individual scales elsewhere.
fn ruiz_equilibrate(
    a_rows: &mut [SparseVec],
    cones: &[ConeSeg],
    num_vars: usize,
    iters: usize,
) -> (Vec<f64>, Vec<f64>) {
    let m = a_rows.len();
    let mut dr = vec![1.0; m];
    let mut dc = vec![1.0; num_vars];
    for _ in 0..iters {
        let mut row_norm = vec![0.0f64; m];
        let mut col_norm = vec![0.0f64; num_vars];
        for (r, row) in a_rows.iter().enumerate() {
            for &(c, v) in row {
                let av = v.abs();
                row_norm[r] = row_norm[r].max(av);
                col_norm[c] = col_norm[c].max(av);
            }
        }
        // Per-cone uniform row scaling for PSD segments.
        let mut row_scale = vec![1.0f64; m];
        for seg in cones {
            match *seg {
                ConeSeg::Psd { start, dim } => {
                    let len = dim * (dim + 1) / 2;
                    let mx = row_norm[start..start + len].iter().fold(0.0f64, |a, &b| a.max(b));
                    let s = if mx > 0.0 { 1.0 / mx.sqrt() } else { 1.0 };
                    for r in start..start + len {
                        row_scale[r] = s;
                    }
                }
                ConeSeg::Zero { start, len } | ConeSeg::Nonneg { start, len } => {
                    for r in start..start + len {
                        row_scale[r] =
                            if row_norm[r] > 0.0 { 1.0 / row_norm[r].sqrt() } else { 1.0 };
                    }
                }
            }
        }
        let col_scale: Vec<f64> = col_norm
            .iter()
            .map(|&v| if v > 0.0 { 1.0 / v.sqrt() } else { 1.0 })
            .collect();
        for (r, row) in a_rows.iter_mut().enumerate() {
            for (c, v) in row.iter_mut() {
                *v *= row_scale[r] * col_scale[*c];
            }
        }
        for r in 0..m {
            dr[r] *= row_scale[r];
        }
        for c in 0..num_vars {
            dc[c] *= col_scale[c];
        }
    }
    (dr, dc)
}

// -- dense Cholesky -----------------------------------------------------------

struct Cholesky {
    n: usize,
    l: Vec<f64>,  // row-major lower triangle (full square storage)
    lt: Vec<f64>, // transpose of l, for a contiguous backward solve
}

impl Cholesky {
    fn factor(n: usize, m: &[f64]) -> Result<Self> {
        let mut l = m.to_vec();
        for i in 0..n {
            for j in 0..=i {
                let dot: f64 = {
                    let ri = &l[i * n..i * n + j];
                    let rj = &l[j * n..j * n + j];
                    ri.iter().zip(rj.iter()).map(|(a, b)| a * b).sum()
                };
                let sum = l[i * n + j] - dot;
                if i == j {
                    if sum <= 0.0 {
                        return Err(CtxError::Solver(format!(
                            "cholesky pivot {i} not positive: {sum:.3e}"
                        )));
                    }
                    l[i * n + j] = sum.sqrt();
                } else {
                    l[i * n + j] = sum / l[j * n + j];
                }
            }
        }
        let mut lt = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                lt[j * n + i] = l[i * n + j];
            }
        }
        Ok(Self { n, l, lt })
    }

    fn solve(&self, rhs: &[f64], out: &mut [f64]) {
        let n = self.n;
        out.copy_from_slice(rhs);
        for i in 0..n {
            let dot: f64 = self.l[i * n..i * n + i]
                .iter()
                .zip(out[..i].iter())
                .map(|(a, b)| a * b)
                .sum();
            out[i] = (out[i] - dot) / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let row = &self.lt[i * n..(i + 1) * n];
            let dot: f64 = row[i + 1..]
                .iter()
                .zip(out[i + 1..].iter())
                .map(|(a, b)| a * b)
                .sum();
            out[i] = (out[i] - dot) / row[i];
        }
    }
}

// -- cone projection -----------------------------------------------------------

fn project_cone(s: &mut [f64], cones: &[ConeSeg]) -> Result<()> {
    for seg in cones {
        match *seg {
            ConeSeg::Zero { start, len } => {
                s[start..start + len].iter_mut().for_each(|v| *v = 0.0);
            }
            ConeSeg::Nonneg { start, len } => {
                s[start..start + len].iter_mut().for_each(|v| *v = v.max(0.0));
            }
            ConeSeg::Psd { start, dim } => {
                let len = dim * (dim + 1) / 2;
                project_psd(&mut s[start..start + len], dim)?;
            }
        }
    }
    Ok(())
}

fn svec_to_dense(s: &[f64], dim: usize, out: &mut [f64]) {
    let mut k = 0;
    for j in 0..dim {
        for i in 0..=j {
            let v = if i == j { s[k] } else { s[k] / SQRT2 };
            out[i * dim + j] = v;
            out[j * dim + i] = v;
            k += 1;
        }
    }
}

fn dense_to_svec(m: &[f64], dim: usize, out: &mut [f64]) {
    let mut k = 0;
    for j in 0..dim {
        for i in 0..=j {
            out[k] = if i == j { m[i * dim + i] } else { m[i * dim + j] * SQRT2 };
            k += 1;
        }
    }
}

fn project_psd(s: &mut [f64], dim: usize) -> Result<()> {
    let mut dense = vec![0.0; dim * dim];
    svec_to_dense(s, dim, &mut dense);
    let (vals, vecs) = sym_eig(dim, &dense)?;
    let npos = vals.iter().filter(|&&l| l > 0.0).count();
    let nneg = dim - npos;
    let mut proj;
    if npos <= nneg {
        // Build from the positive part.
        proj = vec![0.0; dim * dim];
        for (k, &l) in vals.iter().enumerate().take(npos) {
            for i in 0..dim {
                let w = l * vecs[i * dim + k];
                if w == 0.0 {
                    continue;
                }
                for j in i..dim {
                    proj[i * dim + j] += w * vecs[j * dim + k];
                }
            }
        }
    } else {
        // Cheaper to subtract the negative part from the input.
        proj = dense;
        for (k, &l) in vals.iter().enumerate().skip(npos) {
            for i in 0..dim {
                let w = l * vecs[i * dim + k];
                if w == 0.0 {
                    continue;
                }
                for j in i..dim {
                    proj[i * dim + j] -= w * vecs[j * dim + k];
                }
            }
        }
    }
    for i in 0..dim {
        for j in 0..i {
            proj[i * dim + j] = proj[j * dim + i];
        }
    }
    dense_to_svec(&proj, dim, s);
    Ok(())
}

// -- solver --------------------------------------------------------------------

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Solves the program. Returns the best iterate with status `MaxIter` when
/// the iteration cap is reached before the tolerance; callers must treat that
/// as inconclusive, never as a bound.
pub fn solve(p: &SdpProblem, cfg: &SolveCfg) -> Result<SdpSolution> {
    let n = p.num_vars;
    let asm = assemble(p);
    let m = asm.a_rows.len();
    if m == 0 {
        return Err(CtxError::Solver("problem has no constraints".into()));
    }

    // Original-unit data for residual reporting.
    let a0 = Csr::from_rows(&asm.a_rows);
    let mut c0 = vec![0.0; n];
    let sign = match p.sense {
        Sense::Min => 1.0,
        Sense::Max => -1.0,
    };
    for &(i, v) in &p.objective {
        c0[i] += sign * v;
    }
    let b0 = asm.b.clone();

    // Scaled copy.
    let mut rows = asm.a_rows.clone();
    let (dr, dc) = ruiz_equilibrate(&mut rows, &asm.cones, n, 15);
    let a = Csr::from_rows(&rows);
    let mut bh: Vec<f64> = (0..m).map(|r| b0[r] * dr[r]).collect();
    let mut ch: Vec<f64> = (0..n).map(|i| c0[i] * dc[i]).collect();
    let sigma_b = 1.0 / norm2(&bh).max(1.0);
    let sigma_c = 1.0 / norm2(&ch).max(1.0);
    for v in bh.iter_mut() {
        *v *= sigma_b;
    }
    for v in ch.iter_mut() {
        *v *= sigma_c;
    }

    // Normal matrix and factorization.
    let mut h = vec![0.0; n * n];
    for r in 0..a.rows {
        for k1 in a.ptr[r]..a.ptr[r + 1] {
            let (i, vi) = (a.idx[k1], a.val[k1]);
            for k2 in a.ptr[r]..a.ptr[r + 1] {
                let (j, vj) = (a.idx[k2], a.val[k2]);
                if j >= i {
                    h[i * n + j] += vi * vj;
                }
            }
        }
    }
    for i in 0..n {
        for j in 0..i {
            h[i * n + j] = h[j * n + i];
        }
        h[i * n + i] += cfg.sigma0;
    }
    let chol = Cholesky::factor(n, &h)?;

    // Fixed-point state z = [x; s; u]; one ADMM sweep maps z -> G(z).
    let dim_z = n + 2 * m;
    let mut z = vec![0.0; dim_z];
    let mut gz = vec![0.0; dim_z];
    let mut rho = cfg.rho0;

    let mut ax = vec![0.0; m];
    let mut rhs = vec![0.0; n];
    let mut atv = vec![0.0; n];
    let mut tmp_m = vec![0.0; m];
    let mut xbuf = vec![0.0; n];
    let mut best: Option<(f64, SdpSolution)> = None;
    let mut aa = Anderson::new(cfg.aa_memory, dim_z);
    let mut fvec = vec![0.0; dim_z];
    let mut fallback = vec![0.0; dim_z];
    let mut f_at_fallback = f64::INFINITY;
    let mut aa_active = false;
    let mut gap_stall = 0usize;
    let mut gap_stall_ref = f64::INFINITY;
    let mut escalations = 0usize;
    // Escalations intentionally push rho beyond the balancing clamp.
    fn esc_scale(escalations: usize) -> f64 {
        10f64.powi(escalations as i32)
    }

    let unscale = |x: &[f64], s: &[f64], u: &[f64], rho: f64| {
        let xo: Vec<f64> = (0..n).map(|i| x[i] * dc[i] / sigma_b).collect();
        let so: Vec<f64> = (0..m).map(|r| s[r] / dr[r] / sigma_b).collect();
        let yo: Vec<f64> = (0..m).map(|r| rho * u[r] * dr[r] / sigma_c).collect();
        (xo, so, yo)
    };

    let mut iter = 0;
    while iter < cfg.max_iter {
        iter += 1;
        // One ADMM sweep from z into gz.
        {
            let (xs, rest) = z.split_at(n);
            let (ss, us) = rest.split_at(m);
            for r in 0..m {
                tmp_m[r] = bh[r] - ss[r] - us[r];
            }
            a.mul_transpose(&tmp_m, &mut atv);
            for i in 0..n {
                rhs[i] = cfg.sigma0 * xs[i] + atv[i] - ch[i] / rho;
            }
            chol.solve(&rhs, &mut xbuf);
            a.mul(&xbuf, &mut ax);
            if cfg.alpha != 1.0 {
                for r in 0..m {
                    ax[r] = cfg.alpha * ax[r] + (1.0 - cfg.alpha) * (bh[r] - ss[r]);
                }
            }
            let (gx, grest) = gz.split_at_mut(n);
            let (gs, gu) = grest.split_at_mut(m);
            gx.copy_from_slice(&xbuf);
            for r in 0..m {
                gs[r] = bh[r] - ax[r] - us[r];
            }
            project_cone(gs, &asm.cones)?;
            for r in 0..m {
                gu[r] = us[r] + ax[r] + gs[r] - bh[r];
            }
        }
        for i in 0..dim_z {
            fvec[i] = gz[i] - z[i];
        }
        let fnorm = norm2(&fvec);

        // Safeguard: if an accelerated move made the fixed-point residual
        // blow up, fall back to the last plain iterate and clear history.
        if aa_active && fnorm > 1.5 * f_at_fallback && f_at_fallback.is_finite() {
            z.copy_from_slice(&fallback);
            aa.reset();
            aa_active = false;
            continue;
        }
        fallback.copy_from_slice(&gz);
        f_at_fallback = fnorm;

        // Residual bookkeeping happens at the plain iterate gz.
        if iter % cfg.check_every == 0 || iter == cfg.max_iter {
            let (xs, rest) = gz.split_at(n);
            let (ss, us) = rest.split_at(m);
            let (xo, so, yo) = unscale(xs, ss, us, rho);
            let mut axo = vec![0.0; m];
            a0.mul(&xo, &mut axo);
            let mut pr_vec = vec![0.0; m];
            for r in 0..m {
                pr_vec[r] = axo[r] + so[r] - b0[r];
            }
            let pr = norm2(&pr_vec) / (1.0 + norm2(&b0).max(norm2(&axo)).max(norm2(&so)));
            let mut aty = vec![0.0; n];
            a0.mul_transpose(&yo, &mut aty);
            let mut dr_vec = vec![0.0; n];
            for i in 0..n {
                dr_vec[i] = c0[i] + aty[i];
            }
            let drn = norm2(&dr_vec) / (1.0 + norm2(&c0));
            let pobj: f64 = c0.iter().zip(xo.iter()).map(|(a, b)| a * b).sum();
            let dobj: f64 = -b0.iter().zip(yo.iter()).map(|(a, b)| a * b).sum::<f64>();
            let gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());

            if std::env::var_os("CTXDIM_SOLVER_TRACE").is_some() && iter % 2000 == 0 {
                eprintln!(
                    "iter {iter:>6}  pr {pr:.3e}  dr {drn:.3e}  gap {gap:.3e}  rho {rho:.3e}  pobj {pobj:.8}  fp {fnorm:.3e}"
                );
            }
            let score = pr.max(drn).max(gap);
            let make_solution = |status: SolveStatus| -> SdpSolution {
                let mut blocks = Vec::new();
                for (bi, &(start, end)) in asm.block_rows.iter().enumerate() {
                    let dim = p.blocks[bi].dim;
                    let mut dense = vec![0.0; dim * dim];
                    svec_to_dense(&so[start..end], dim, &mut dense);
                    blocks.push((dim, dense));
                }
                SdpSolution {
                    status,
                    objective: sign * pobj + p.obj_offset,
                    dual_objective: sign * dobj + p.obj_offset,
                    x: xo.clone(),
                    blocks,
                    dual: yo.clone(),
                    residuals: Residuals { primal: pr, dual: drn, gap },
                    iterations: iter,
                }
            };
            if best.as_ref().map_or(true, |(bs, _)| score < *bs) {
                best = Some((score, make_solution(SolveStatus::MaxIter)));
            }
            if pr < cfg.tol && drn < cfg.tol && gap < cfg.tol {
                return Ok(make_solution(SolveStatus::Optimal));
            }
            // Degenerate instances settle into sublinear gap decay with the
            // feasibility residuals already small. Detect "less than 2x gap
            // progress per 1000 iterations" and escalate the penalty, which
            // restarts progress; when escalation stops helping there is
            // nothing more to extract.
            gap_stall += 1;
            if gap_stall >= 40 {
                let slow = pr < 50.0 * cfg.tol
                    && drn < 50.0 * cfg.tol
                    && gap > 100.0 * cfg.tol
                    && gap > 0.5 * gap_stall_ref;
                if slow {
                    if escalations < 3 {
                        escalations += 1;
                        if std::env::var_os("CTXDIM_SOLVER_TRACE").is_some() {
                            eprintln!(
                                "iter {iter:>6}  escalate rho {rho:.3e} -> {:.3e} (pr {pr:.2e} dr {drn:.2e} gap {gap:.2e})",
                                rho * 10.0
                            );
                        }
                        let rho_new = rho * 10.0;
                        let f = rho / rho_new;
                        for v in gz[n + m..].iter_mut() {
                            *v *= f;
                        }
                        rho = rho_new;
                        aa.reset();
                        aa_active = false;
                        gap_stall = 0;
                        gap_stall_ref = f64::INFINITY;
                        z.copy_from_slice(&gz);
                        fallback.copy_from_slice(&gz);
                        continue;
                    }
                    return Ok(make_solution(SolveStatus::MaxIter));
                }
                gap_stall = 0;
                gap_stall_ref = gap;
            }
            // Penalty adaptation: balance the feasibility residuals, and
            // escalate when the duality gap lags both of them (a symptom of
            // degenerate instances where small steps stall the objective).
            if iter % (cfg.check_every * 40) == 0 && pr.max(drn) > cfg.tol {
                let ratio = (pr / drn.max(1e-300)).sqrt().clamp(0.2, 5.0);
                if ratio > 1.5 || ratio < 0.67 {
                    let rho_new =
                        (rho * ratio).clamp(cfg.rho0 * 1e-4, cfg.rho0 * 1e4 * esc_scale(escalations));
                    if rho_new != rho {
                        let f = rho / rho_new;
                        for v in gz[n + m..].iter_mut() {
                            *v *= f;
                        }
                        rho = rho_new;
                        aa.reset();
                        aa_active = false;
                        gap_stall = 0;
                        gap_stall_ref = f64::INFINITY;
                        z.copy_from_slice(&gz);
                        fallback.copy_from_slice(&gz);
                        continue;
                    }
                }
            }
        }

        match aa.propose(&z, &fvec, &gz) {
            Some(zaa) => {
                z.copy_from_slice(&zaa);
                aa_active = true;
            }
            None => {
                z.copy_from_slice(&gz);
                aa_active = false;
            }
        }
    }
    let (_, sol) = best.expect("at least one residual check ran");
    Ok(sol)
}

/// Feasibility margin: appends a free variable `eta`, replaces each listed
/// block expression `B_k(x)` by `B_k(x) - eta I`, and maximizes `eta`.
///
/// The returned margin is the dual objective once both feasibility
/// residuals converge — a certified upper bound on the true `eta_max`, so
/// `eta_max < -margin` rigorously certifies infeasibility of the original
/// problem. `eta_max >= 0` means the block constraints admit a solution
/// with that margin.
pub fn solve_feasibility_eta(
    p: &SdpProblem,
    lhs_blocks: &[BlockId],
    cfg: &SolveCfg,
) -> Result<(f64, SdpSolution)> {
    let mut q = p.clone();
    let eta = q.add_var();
    for &b in lhs_blocks {
        let dim = q.block_dim(b);
        for i in 0..dim {
            q.block_entry_add(b, i, i, eta, -1.0);
        }
    }
    q.maximize(vec![(eta, 1.0)], 0.0);
    let mut sol = solve(&q, cfg)?;
    let eta_max = if sol.feasibility_converged(cfg.tol) {
        sol.dual_objective
    } else {
        sol.x[eta]
    };
    if sol.feasibility_converged(cfg.tol) && eta_max < -crate::tol::MARGIN {
        sol.status = SolveStatus::InfeasibleCertified;
    }
    Ok((eta_max, sol))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solve_default(p: &SdpProblem) -> SdpSolution {
        solve(p, &SolveCfg::default()).unwrap()
    }

    #[test]
    fn trivial_trace_minimization() {
        // min tr(X), X psd 2x2, X_00 = 1  ->  value 1.
        let (mut p, vars) = SdpProblem::with_variable_blocks(&[2]);
        let v = vars[0];
        p.minimize(vec![(v.var(0, 0), 1.0), (v.var(1, 1), 1.0)], 0.0);
        p.add_eq(vec![(v.var(0, 0), 1.0)], 1.0);
        let sol = solve_default(&p);
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.objective - 1.0).abs() < 1e-6, "objective {}", sol.objective);
        let (dim, xm) = sol.block_matrix(BlockId(0));
        assert_eq!(*dim, 2);
        assert!(xm[3].abs() < 1e-6, "X_11 should vanish");
    }

    #[test]
    fn weak_duality_and_feasibility_of_report() {
        let (mut p, vars) = SdpProblem::with_variable_blocks(&[3]);
        let v = vars[0];
        // min X_00 + 2 X_11 + 3 X_22 with X_01 = 0.3, X_12 = -0.2, diag sum = 2.
        p.minimize(
            vec![(v.var(0, 0), 1.0), (v.var(1, 1), 2.0), (v.var(2, 2), 3.0)],
            0.0,
        );
        p.add_eq(vec![(v.var(0, 1), 1.0)], 0.3);
        p.add_eq(vec![(v.var(1, 2), 1.0)], -0.2);
        p.add_eq(
            vec![(v.var(0, 0), 1.0), (v.var(1, 1), 1.0), (v.var(2, 2), 1.0)],
            2.0,
        );
        let sol = solve_default(&p);
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!(sol.residuals.primal < 1e-8);
        assert!(sol.residuals.dual < 1e-8);
        assert!(sol.residuals.gap < 1e-8);
    }

    #[test]
    fn inequalities_clamp() {
        // max x s.t. x <= 2, x free scalar, X = [x] psd means x >= 0.
        let (mut p, vars) = SdpProblem::with_variable_blocks(&[1]);
        let v = vars[0].var(0, 0);
        p.maximize(vec![(v, 1.0)], 0.0);
        p.add_ineq_le(vec![(v, 1.0)], 2.0);
        let sol = solve_default(&p);
        assert!((sol.objective - 2.0).abs() < 1e-7);
        // and a >= constraint
        let (mut p2, vars2) = SdpProblem::with_variable_blocks(&[1]);
        let w = vars2[0].var(0, 0);
        p2.minimize(vec![(w, 1.0)], 0.0);
        p2.add_ineq_ge(vec![(w, 1.0)], 1.5);
        let sol2 = solve_default(&p2);
        assert!((sol2.objective - 1.5).abs() < 1e-7);
    }

    /// Lovász theta of C5 in the Gram form: X_00 = 1, X_ii = X_0i,
    /// X_ij = 0 on edges, X psd, maximize sum X_ii. Expected sqrt(5).
    #[test]
    fn lovasz_theta_c5() {
        let edges = [(1usize, 2usize), (2, 3), (3, 4), (4, 5), (5, 1)];
        let (mut p, vars) = SdpProblem::with_variable_blocks(&[6]);
        let v = vars[0];
        p.maximize((1..=5).map(|i| (v.var(i, i), 1.0)).collect(), 0.0);
        p.add_eq(vec![(v.var(0, 0), 1.0)], 1.0);
        for i in 1..=5 {
            p.add_eq(vec![(v.var(i, i), 1.0), (v.var(0, i), -1.0)], 0.0);
        }
        for &(a, b) in &edges {
            p.add_eq(vec![(v.var(a, b), 1.0)], 0.0);
        }
        let sol = solve_default(&p);
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!(
            (sol.objective - 5f64.sqrt()).abs() < 1e-4,
            "theta(C5) = {} vs sqrt(5)",
            sol.objective
        );
    }

    #[test]
    fn eta_feasibility_positive_for_feasible_system() {
        // {X psd 2x2, X_00 = 1} is strictly feasible: eta_max = 1.
        let (mut p, vars) = SdpProblem::with_variable_blocks(&[2]);
        let v = vars[0];
        p.add_eq(vec![(v.var(0, 0), 1.0)], 1.0);
        let (eta, sol) = solve_feasibility_eta(&p, &[BlockId(0)], &SolveCfg::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((eta - 1.0).abs() < 1e-6, "eta_max {eta}");
    }

    #[test]
    fn eta_feasibility_negative_for_infeasible_system() {
        // X psd 1x1 with X_00 = -1 is infeasible; eta_max = -1.
        let (mut p, vars) = SdpProblem::with_variable_blocks(&[1]);
        let v = vars[0];
        p.add_eq(vec![(v.var(0, 0), 1.0)], -1.0);
        let (eta, sol) = solve_feasibility_eta(&p, &[BlockId(0)], &SolveCfg::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::InfeasibleCertified);
        assert!((eta + 1.0).abs() < 1e-6, "eta_max {eta}");
    }

    #[test]
    fn deterministic_given_same_input() {
        let build = || {
            let (mut p, vars) = SdpProblem::with_variable_blocks(&[4]);
            let v = vars[0];
            p.maximize(
                (0..4).map(|i| (v.var(i, i), ((i + 1) as f64).sin())).collect(),
                0.0,
            );
            p.add_eq((0..4).map(|i| (v.var(i, i), 1.0)).collect(), 1.0);
            p.add_eq(vec![(v.var(0, 1), 1.0), (v.var(2, 3), 0.5)], 0.1);
            p
        };
        let s1 = solve_default(&build());
        let s2 = solve_default(&build());
        assert_eq!(s1.iterations, s2.iterations);
        assert_eq!(s1.x, s2.x);
        assert_eq!(s1.objective, s2.objective);
    }
}
