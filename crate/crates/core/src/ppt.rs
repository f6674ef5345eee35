//! Symmetrized two-copy PPT relaxations.
//!
//! The rank-constrained Gram problems are relaxed to convex programs over an
//! unnormalized two-copy state. After symmetrization the state is described
//! by a pair `(Phi_I, Phi_V)` of real symmetric matrices on
//! `C^{n+1} ⊗ C^{n+1}` with `Phi_V = V Phi_I`, where `V` is the swap. Since
//! both matrices are symmetric, `Phi_I` commutes with `V`, so in the swap
//! eigenbasis it block-diagonalizes into a symmetric-sector block `Phi_+`
//! (dimension N(N+1)/2) and an antisymmetric-sector block `Phi_-`
//! (dimension N(N-1)/2), with `Phi_V = Phi_+ ⊕ (-Phi_-)`. The free variables
//! here are the upper triangles of `Phi_+` and `Phi_-`.
//!
//! The cone constraints shared by every relaxation are
//!
//! ```text
//!   Phi_I + Phi_V >= 0        <=>  Phi_+ >= 0   (antisymmetric sector is 0)
//!   Phi_I - Phi_V >= 0        <=>  Phi_- >= 0   (symmetric sector is 0)
//!   Phi_I^{T1} >= 0
//!   Phi_I^{T1} + d Phi_V^{T1} >= 0
//! ```
//!
//! where `T1` is the partial transpose on the first factor. The identically
//! zero sectors of the first two constraints are dropped: they carry no
//! information, and in the eta-max form they would only clamp the margin at
//! zero without changing any verdict.

use crate::graph::Graph;
use crate::sdp::{BlockId, SdpProblem, SparseVec};
use std::collections::BTreeMap;

/// Index bookkeeping for the two-copy space `C^N ⊗ C^N` split into swap
/// eigensectors.
#[derive(Clone, Debug)]
pub struct TwoCopySpace {
    n1: usize,
    sym_dim: usize,
    asym_dim: usize,
}

const SQRT_HALF: f64 = std::f64::consts::FRAC_1_SQRT_2;

impl TwoCopySpace {
    pub fn new(n1: usize) -> Self {
        Self { n1, sym_dim: n1 * (n1 + 1) / 2, asym_dim: n1 * (n1 - 1) / 2 }
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn sym_dim(&self) -> usize {
        self.sym_dim
    }

    pub fn asym_dim(&self) -> usize {
        self.asym_dim
    }

    /// Number of free variables: both upper triangles.
    pub fn num_vars(&self) -> usize {
        tri(self.sym_dim) + tri(self.asym_dim)
    }

    fn sym_index(&self, a: usize, b: usize) -> usize {
        let (a, b) = (a.min(b), a.max(b));
        b * (b + 1) / 2 + a
    }

    fn asym_index(&self, a: usize, b: usize) -> usize {
        let (a, b) = (a.min(b), a.max(b));
        debug_assert!(a < b);
        b * (b - 1) / 2 + a
    }

    fn var_plus(&self, s: usize, t: usize) -> usize {
        let (s, t) = (s.min(t), s.max(t));
        t * (t + 1) / 2 + s
    }

    fn var_minus(&self, s: usize, t: usize) -> usize {
        let (s, t) = (s.min(t), s.max(t));
        tri(self.sym_dim) + t * (t + 1) / 2 + s
    }

    /// Expansion of `Phi_I[(a,b),(c,e)]` over the free variables.
    ///
    /// Each product-space entry touches at most one entry of `Phi_+` and one
    /// of `Phi_-`.
    pub fn phi_i_entry(&self, a: usize, b: usize, c: usize, e: usize) -> Vec<(usize, f64)> {
        let mut out = Vec::with_capacity(2);
        let qp = |x: usize, y: usize| if x == y { 1.0 } else { SQRT_HALF };
        let cp = qp(a, b) * qp(c, e);
        out.push((self.var_plus(self.sym_index(a, b), self.sym_index(c, e)), cp));
        if a != b && c != e {
            let sgn = |x: usize, y: usize| if x < y { SQRT_HALF } else { -SQRT_HALF };
            let cm = sgn(a, b) * sgn(c, e);
            out.push((self.var_minus(self.asym_index(a, b), self.asym_index(c, e)), cm));
        }
        out
    }

    /// Expansion of `Phi_V[(a,b),(c,e)] = Phi_I[(b,a),(c,e)]`.
    pub fn phi_v_entry(&self, a: usize, b: usize, c: usize, e: usize) -> Vec<(usize, f64)> {
        self.phi_i_entry(b, a, c, e)
    }

    /// Accumulates `scale * (alpha Phi_I + beta Phi_V)[(a,b),(c,e)]`.
    fn mix_entry(
        &self,
        alpha: f64,
        beta: f64,
        a: usize,
        b: usize,
        c: usize,
        e: usize,
        acc: &mut BTreeMap<usize, f64>,
        scale: f64,
    ) {
        if alpha != 0.0 {
            for (v, co) in self.phi_i_entry(a, b, c, e) {
                *acc.entry(v).or_insert(0.0) += scale * alpha * co;
            }
        }
        if beta != 0.0 {
            for (v, co) in self.phi_v_entry(a, b, c, e) {
                *acc.entry(v).or_insert(0.0) += scale * beta * co;
            }
        }
    }

    /// Reconstructs dense `Phi_I` and `Phi_V` (row-major, N^2 x N^2) from a
    /// solved variable vector.
    pub fn reconstruct(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n1 = self.n1;
        let dim = n1 * n1;
        let mut phi_i = vec![0.0; dim * dim];
        let mut phi_v = vec![0.0; dim * dim];
        for p in 0..dim {
            let (a, b) = (p / n1, p % n1);
            for q in 0..dim {
                let (c, e) = (q / n1, q % n1);
                let mut vi = 0.0;
                for (v, co) in self.phi_i_entry(a, b, c, e) {
                    vi += co * x[v];
                }
                phi_i[p * dim + q] = vi;
                let mut vv = 0.0;
                for (v, co) in self.phi_v_entry(a, b, c, e) {
                    vv += co * x[v];
                }
                phi_v[p * dim + q] = vv;
            }
        }
        (phi_i, phi_v)
    }
}

fn tri(d: usize) -> usize {
    d * (d + 1) / 2
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Sector {
    Plus,
    Minus,
}

/// Product-space representatives of a sector basis vector for the unordered
/// pair (a <= b), with their expansion weights.
fn sector_reps(sector: Sector, a: usize, b: usize) -> Vec<((usize, usize), f64)> {
    match sector {
        Sector::Plus => {
            if a == b {
                vec![((a, a), 1.0)]
            } else {
                vec![((a, b), SQRT_HALF), ((b, a), SQRT_HALF)]
            }
        }
        Sector::Minus => vec![((a, b), SQRT_HALF), ((b, a), -SQRT_HALF)],
    }
}

/// The pair of symmetrized component matrices, reconstructed densely for
/// certificates and reports.
#[derive(Clone, Debug)]
pub struct SymmetrizedPair {
    pub n1: usize,
    pub phi_i: Vec<f64>,
    pub phi_v: Vec<f64>,
}

impl SymmetrizedPair {
    pub fn from_solution(space: &TwoCopySpace, x: &[f64]) -> Self {
        let (phi_i, phi_v) = space.reconstruct(x);
        Self { n1: space.n1(), phi_i, phi_v }
    }
}

/// A symmetrized relaxation assembled over `(Phi_+, Phi_-)`, before its
/// objective or eta augmentation is applied.
pub struct PptAssembly {
    pub space: TwoCopySpace,
    pub problem: SdpProblem,
    /// The four cone blocks: `2 Phi_+`, `2 Phi_-`, `Phi_I^{T1}`,
    /// `Phi_I^{T1} + d Phi_V^{T1}`.
    pub cone_blocks: Vec<BlockId>,
    /// Weights (alpha, beta) of the pinned combination
    /// `M = alpha Phi_I + beta Phi_V` used by the constraint rows.
    pub mix: (f64, f64),
    /// Auxiliary variables mirroring the reduced operator `T[k,l]`, k <= l,
    /// so pin rows stay sparse. Installed on first use.
    reduced_vars: Option<Vec<usize>>,
}

impl PptAssembly {
    /// Lays out variables and the cone blocks common to all symmetrized
    /// relaxations; `mix` selects the pinned combination (`(d, 1)` for the
    /// membership system, `(d^2, d)` for the bound relaxations).
    ///
    /// Both partial-transpose constraints again commute with the swap (for
    /// any `M` in the commutant, `(V M^{T1} V) = M^{T1}` follows from the
    /// symmetry of `M`), so all cone constraints split into swap sectors:
    /// six blocks of side `sym_dim` or `asym_dim` instead of two of side
    /// `N^2`.
    pub fn new(n1: usize, d: usize, mix: (f64, f64)) -> Self {
        let space = TwoCopySpace::new(n1);
        let mut problem = SdpProblem::new(space.num_vars());
        let mut cone_blocks = Vec::with_capacity(6);

        // 2 Phi_+ >= 0
        let bp = problem.add_psd_block(space.sym_dim());
        for t in 0..space.sym_dim() {
            for s in 0..=t {
                problem.block_entry_add(bp, s, t, space.var_plus(s, t), 2.0);
            }
        }
        cone_blocks.push(bp);
        // 2 Phi_- >= 0
        let bm = problem.add_psd_block(space.asym_dim());
        for t in 0..space.asym_dim() {
            for s in 0..=t {
                problem.block_entry_add(bm, s, t, space.var_minus(s, t), 2.0);
            }
        }
        cone_blocks.push(bm);

        // Partial-transpose blocks, per swap sector. The sector compression
        // of an operator entry ((a,b),(c,e)) averages the representative
        // product-space pairs with the sector weights.
        let df = d as f64;
        for sector in [Sector::Plus, Sector::Minus] {
            let (sdim, pairs): (usize, Vec<(usize, usize)>) = match sector {
                Sector::Plus => (
                    space.sym_dim(),
                    (0..n1).flat_map(|b| (0..=b).map(move |a| (a, b))).collect(),
                ),
                Sector::Minus => (
                    space.asym_dim(),
                    (0..n1).flat_map(|b| (0..b).map(move |a| (a, b))).collect(),
                ),
            };
            let bt1 = problem.add_psd_block(sdim);
            let bt2 = problem.add_psd_block(sdim);
            for (t_idx, &(c, e)) in pairs.iter().enumerate() {
                for (s_idx, &(a, b)) in pairs.iter().enumerate().take(t_idx + 1) {
                    let mut acc1: BTreeMap<usize, f64> = BTreeMap::new();
                    let mut acc2: BTreeMap<usize, f64> = BTreeMap::new();
                    for (p, wp) in sector_reps(sector, a, b) {
                        for (q, wq) in sector_reps(sector, c, e) {
                            let w = wp * wq;
                            // Phi_I^{T1}[p, q] = Phi_I[(q.0, p.1), (p.0, q.1)]
                            space.mix_entry(1.0, 0.0, q.0, p.1, p.0, q.1, &mut acc1, w);
                            space.mix_entry(1.0, 0.0, q.0, p.1, p.0, q.1, &mut acc2, w);
                            // Phi_V^{T1}[p, q] = Phi_I[(p.1, q.0), (p.0, q.1)]
                            space.mix_entry(df, 0.0, p.1, q.0, p.0, q.1, &mut acc2, w);
                        }
                    }
                    for (v, co) in acc1 {
                        if co != 0.0 {
                            problem.block_entry_add(bt1, s_idx, t_idx, v, co);
                        }
                    }
                    for (v, co) in acc2 {
                        if co != 0.0 {
                            problem.block_entry_add(bt2, s_idx, t_idx, v, co);
                        }
                    }
                }
            }
            cone_blocks.push(bt1);
            cone_blocks.push(bt2);
        }

        Self { space, problem, cone_blocks, mix, reduced_vars: None }
    }

    /// Linear expansion of `M[(a,b),(c,e)]` for `M = alpha Phi_I + beta Phi_V`.
    pub fn m_entry(&self, a: usize, b: usize, c: usize, e: usize) -> BTreeMap<usize, f64> {
        let mut acc = BTreeMap::new();
        self.space.mix_entry(self.mix.0, self.mix.1, a, b, c, e, &mut acc, 1.0);
        acc
    }

    /// Expansion of the reduced operator `T[k,l] = sum_a M[(a,k),(a,l)]`.
    pub fn reduced_entry(&self, k: usize, l: usize) -> BTreeMap<usize, f64> {
        let mut acc = BTreeMap::new();
        for a in 0..self.space.n1() {
            self.space.mix_entry(self.mix.0, self.mix.1, a, k, a, l, &mut acc, 1.0);
        }
        acc
    }

    /// Trace functional `alpha tr(Phi_I) + beta tr(Phi_V)`.
    pub fn trace_functional(&self, alpha: f64, beta: f64) -> SparseVec {
        let mut acc = BTreeMap::new();
        let n1 = self.space.n1();
        for a in 0..n1 {
            for b in 0..n1 {
                self.space.mix_entry(alpha, beta, a, b, a, b, &mut acc, 1.0);
            }
        }
        acc.into_iter().filter(|&(_, v)| v != 0.0).collect()
    }

    /// Auxiliary mirror of the reduced operator: variables `t[k,l]` with
    /// defining rows `T[k,l] - t[k,l] = 0`, so the many pin rows that
    /// reference `T` stay sparse.
    fn reduced_var(&mut self, k: usize, l: usize) -> usize {
        if self.reduced_vars.is_none() {
            let n1 = self.space.n1();
            let mut vars = Vec::with_capacity(n1 * (n1 + 1) / 2);
            for l2 in 0..n1 {
                for k2 in 0..=l2 {
                    let t = self.problem.add_var();
                    let mut row: SparseVec = self
                        .reduced_entry(k2, l2)
                        .into_iter()
                        .filter(|&(_, v)| v != 0.0)
                        .collect();
                    row.push((t, -1.0));
                    self.problem.add_eq(row, 0.0);
                    vars.push(t);
                }
            }
            self.reduced_vars = Some(vars);
        }
        let (k, l) = (k.min(l), k.max(l));
        self.reduced_vars.as_ref().unwrap()[l * (l + 1) / 2 + k]
    }

    /// Emits the operator equation `M[(hi, .), (lo, .)] = factor * T` as
    /// scalar rows, with `T` the reduced operator above. For `hi == lo` the
    /// operator is symmetric and only the upper triangle is emitted.
    pub fn add_pin_rows(&mut self, hi: usize, lo: usize, factor: f64) {
        let n1 = self.space.n1();
        for k in 0..n1 {
            let lmin = if hi == lo { k } else { 0 };
            for l in lmin..n1 {
                let mut acc = self.m_entry(hi, k, lo, l);
                if factor != 0.0 {
                    let t = self.reduced_var(k, l);
                    *acc.entry(t).or_insert(0.0) -= factor;
                }
                let row: SparseVec = acc.into_iter().filter(|&(_, v)| v != 0.0).collect();
                if !row.is_empty() {
                    self.problem.add_eq(row, 0.0);
                }
            }
        }
    }
}

/// Symmetrized membership feasibility system for the pin values `mu0[i] =
/// sqrt(p_i)` on graph `g` at dimension `d`; the combination `d Phi_I +
/// Phi_V` carries every pin, each against the reduced operator.
///
/// Feasibility is then quantified with
/// [`solve_feasibility_eta`](crate::sdp::solve_feasibility_eta) over
/// `cone_blocks`.
pub fn membership_system(g: &Graph, mu0: &[f64], d: usize) -> PptAssembly {
    let n = g.n();
    let n1 = n + 1;
    let mut asm = PptAssembly::new(n1, d, (d as f64, 1.0));
    let df = d as f64;
    let tr = asm.trace_functional(df * df, df);
    asm.problem.add_eq(tr, (n1 * n1) as f64);
    let inv_n1 = 1.0 / n1 as f64;
    for i in 0..n1 {
        asm.add_pin_rows(i, i, inv_n1);
    }
    for i in 1..n1 {
        asm.add_pin_rows(i, 0, mu0[i - 1] * inv_n1);
    }
    for &(u, v) in g.edges() {
        asm.add_pin_rows(v.max(u), v.min(u), 0.0);
    }
    asm
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{partial_transpose_first, swap_operator, HermitianMatrix};
    use crate::rng::XRng;

    #[test]
    fn reconstruction_respects_swap_structure() {
        let n1 = 4;
        let space = TwoCopySpace::new(n1);
        let mut rng = XRng::new(1);
        let x: Vec<f64> = (0..space.num_vars()).map(|_| rng.next_normal()).collect();
        let (phi_i, phi_v) = space.reconstruct(&x);
        let dim = n1 * n1;
        let v = swap_operator(n1);
        // phi_v == V * phi_i entrywise, and both components are symmetric.
        for p in 0..dim {
            for q in 0..dim {
                let mut acc = 0.0;
                for r in 0..dim {
                    acc += v.get(p, r).re * phi_i[r * dim + q];
                }
                assert!((acc - phi_v[p * dim + q]).abs() < 1e-12);
                assert!((phi_i[p * dim + q] - phi_i[q * dim + p]).abs() < 1e-12);
                assert!((phi_v[p * dim + q] - phi_v[q * dim + p]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn partial_transpose_blocks_match_dense() {
        let n1 = 3;
        let d = 2usize;
        let space = TwoCopySpace::new(n1);
        let mut rng = XRng::new(2);
        let x: Vec<f64> = (0..space.num_vars()).map(|_| rng.next_normal()).collect();
        let (phi_i, phi_v) = space.reconstruct(&x);
        let dim = n1 * n1;
        let hi = HermitianMatrix::from_real(dim, &phi_i).unwrap();
        let hv = HermitianMatrix::from_real(dim, &phi_v).unwrap();
        let pt_i = partial_transpose_first(&hi, n1).unwrap();
        let pt_v = partial_transpose_first(&hv, n1).unwrap();
        // Entry map agrees with the dense partial transpose.
        for p in 0..dim {
            let (a, b) = (p / n1, p % n1);
            for q in p..dim {
                let (c, e) = (q / n1, q % n1);
                let mut acc = 0.0;
                for (v, co) in space.phi_i_entry(c, b, a, e) {
                    acc += co * x[v];
                }
                assert!((acc - pt_i.get(p, q).re).abs() < 1e-12);
                let mut acc2 = acc;
                for (v, co) in space.phi_i_entry(b, c, a, e) {
                    acc2 += d as f64 * co * x[v];
                }
                let want = pt_i.get(p, q).re + d as f64 * pt_v.get(p, q).re;
                assert!((acc2 - want).abs() < 1e-12);
            }
        }
        // Both partial transposes stay in the swap commutant, which is what
        // lets the cone blocks split into swap sectors.
        let v = swap_operator(n1);
        for m in [&pt_i, &pt_v] {
            for p in 0..dim {
                for q in 0..dim {
                    let mut lhs = 0.0;
                    let mut rhs = 0.0;
                    for r in 0..dim {
                        lhs += v.get(p, r).re * m.get(r, q).re;
                        rhs += m.get(p, r).re * v.get(r, q).re;
                    }
                    assert!((lhs - rhs).abs() < 1e-12, "partial transpose left the commutant");
                }
            }
        }
    }

    #[test]
    fn trace_functional_matches_dense() {
        let n1 = 4;
        let d = 3usize;
        let asm = PptAssembly::new(n1, d, (d as f64, 1.0));
        let mut rng = XRng::new(3);
        let x: Vec<f64> = (0..asm.space.num_vars()).map(|_| rng.next_normal()).collect();
        let (phi_i, phi_v) = asm.space.reconstruct(&x);
        let dim = n1 * n1;
        let tr_i: f64 = (0..dim).map(|p| phi_i[p * dim + p]).sum();
        let tr_v: f64 = (0..dim).map(|p| phi_v[p * dim + p]).sum();
        let df = d as f64;
        let f = asm.trace_functional(df * df, df);
        let got: f64 = f.iter().map(|&(v, co)| co * x[v]).sum();
        assert!((got - (df * df * tr_i + df * tr_v)).abs() < 1e-10);
    }
}
