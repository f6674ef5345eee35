//! Dense Hermitian matrix kernel.
//!
//! Everything here is self-contained: a Householder tridiagonalization with
//! implicit-shift QL iteration for real symmetric matrices, and a complex
//! Hermitian eigensolver built on top of it through the standard real
//! embedding `A + iB -> [[A, -B], [B, A]]`. Matrix sizes in this crate stay
//! around 100x100, so dense O(n^3) routines are the right tool.
//!
//! The module also provides the Gram-matrix constructions used by the
//! membership and bound solvers: rank-capped PSD truncation (Eckart-Young on
//! the PSD cone), vector-system extraction from a low-rank Gram matrix, the
//! partial transpose on the first tensor factor, and the swap operator.

use crate::{tol, CtxError, Result};

pub use num_complex::Complex64 as C64;

const EPS: f64 = f64::EPSILON;

// ---------------------------------------------------------------------------
// Real symmetric eigensolver (tred2 + tql2, descending order)
// ---------------------------------------------------------------------------

/// Householder reduction of a real symmetric matrix to tridiagonal form,
/// accumulating the orthogonal transform in `a` (row-major, n x n).
fn tred2(n: usize, a: &mut [f64], d: &mut [f64], e: &mut [f64]) {
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0;
        if l > 0 {
            let mut scale = 0.0;
            for k in 0..=l {
                scale += a[i * n + k].abs();
            }
            if scale == 0.0 {
                e[i] = a[i * n + l];
            } else {
                for k in 0..=l {
                    a[i * n + k] /= scale;
                    h += a[i * n + k] * a[i * n + k];
                }
                let f = a[i * n + l];
                let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                a[i * n + l] = f - g;
                let mut f_acc = 0.0;
                for j in 0..=l {
                    a[j * n + i] = a[i * n + j] / h;
                    let mut g = 0.0;
                    for k in 0..=j {
                        g += a[j * n + k] * a[i * n + k];
                    }
                    for k in (j + 1)..=l {
                        g += a[k * n + j] * a[i * n + k];
                    }
                    e[j] = g / h;
                    f_acc += e[j] * a[i * n + j];
                }
                let hh = f_acc / (h + h);
                for j in 0..=l {
                    let f = a[i * n + j];
                    let g = e[j] - hh * f;
                    e[j] = g;
                    for k in 0..=j {
                        a[j * n + k] -= f * e[k] + g * a[i * n + k];
                    }
                }
            }
        } else {
            e[i] = a[i * n + l];
        }
        d[i] = h;
    }
    d[0] = 0.0;
    e[0] = 0.0;
    for i in 0..n {
        if d[i] != 0.0 {
            for j in 0..i {
                let mut g = 0.0;
                for k in 0..i {
                    g += a[i * n + k] * a[k * n + j];
                }
                for k in 0..i {
                    a[k * n + j] -= g * a[k * n + i];
                }
            }
        }
        d[i] = a[i * n + i];
        a[i * n + i] = 1.0;
        for j in 0..i {
            a[j * n + i] = 0.0;
            a[i * n + j] = 0.0;
        }
    }
}

/// QL iteration with implicit shifts on a symmetric tridiagonal matrix,
/// rotating the eigenvector accumulator `z` along the way.
fn tql2(n: usize, d: &mut [f64], e: &mut [f64], z: &mut [f64]) -> Result<()> {
    if n <= 1 {
        return Ok(());
    }
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    // Absolute deflation floor: off-diagonals this small relative to the
    // matrix scale are noise, and purely relative tests can cycle forever on
    // blocks of near-zero eigenvalues.
    let anorm = d
        .iter()
        .map(|v| v.abs())
        .chain(e.iter().map(|v| v.abs()))
        .fold(0.0f64, f64::max);
    let floor = EPS * anorm * 1e-6 + f64::MIN_POSITIVE;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= EPS * dd + floor {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 80 {
                return Err(CtxError::Solver(format!(
                    "tql2 failed to converge after 80 sweeps (n={n}, l={l}, m={m}, e[l]={:.3e}, d[l]={:.3e}, d[l+1]={:.3e}, anorm={anorm:.3e})",
                    e[l],
                    d[l],
                    d[l.min(n - 2) + 1]
                )));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            let denom = g + if g >= 0.0 { r.abs() } else { -r.abs() };
            g = d[m] - d[l] + e[l] / denom;
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut underflow = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for k in 0..n {
                    f = z[k * n + i + 1];
                    z[k * n + i + 1] = s * z[k * n + i] + c * f;
                    z[k * n + i] = c * z[k * n + i] - s * f;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Eigendecomposition of a dense real symmetric matrix (row-major `a`).
///
/// Returns eigenvalues in descending order and the orthonormal eigenvectors
/// as the columns of a row-major n x n matrix.
pub fn sym_eig(n: usize, a: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    assert_eq!(a.len(), n * n);
    if n == 0 {
        return Ok((vec![], vec![]));
    }
    let mut z = a.to_vec();
    // Symmetrize defensively; callers pass matrices that are symmetric up to
    // rounding and tred2 reads only one triangle consistently either way.
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (z[i * n + j] + z[j * n + i]);
            z[i * n + j] = v;
            z[j * n + i] = v;
        }
    }
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tred2(n, &mut z, &mut d, &mut e);
    tql2(n, &mut d, &mut e, &mut z)?;
    // Sort descending, permuting eigenvector columns.
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| d[j].partial_cmp(&d[i]).unwrap_or(std::cmp::Ordering::Equal));
    let vals: Vec<f64> = idx.iter().map(|&i| d[i]).collect();
    let mut vecs = vec![0.0; n * n];
    for (new_col, &old_col) in idx.iter().enumerate() {
        for k in 0..n {
            vecs[k * n + new_col] = z[k * n + old_col];
        }
    }
    Ok((vals, vecs))
}

// ---------------------------------------------------------------------------
// Hermitian matrices
// ---------------------------------------------------------------------------

/// Dense complex Hermitian matrix, row-major storage.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl HermitianMatrix {
    /// Validating constructor: entries must be finite and Hermitian within
    /// the symmetry tolerance.
    pub fn new(dim: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(CtxError::Dimension(format!(
                "expected {} entries for dim {}, got {}",
                dim * dim,
                dim,
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(CtxError::NonFinite);
        }
        let scale = data.iter().map(|z| z.norm()).fold(1.0_f64, f64::max);
        let mut worst = 0.0_f64;
        for i in 0..dim {
            for j in 0..=i {
                let asym = (data[i * dim + j] - data[j * dim + i].conj()).norm();
                worst = worst.max(asym);
            }
        }
        if worst > tol::HERM * scale {
            return Err(CtxError::NotHermitian(worst));
        }
        let mut m = Self { dim, data };
        m.resymmetrize();
        Ok(m)
    }

    /// Construct without validation; callers guarantee Hermitian symmetry.
    pub(crate) fn from_raw(dim: usize, data: Vec<C64>) -> Self {
        debug_assert_eq!(data.len(), dim * dim);
        Self { dim, data }
    }

    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![C64::new(0.0, 0.0); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = C64::new(1.0, 0.0);
        }
        m
    }

    /// Real matrix lifted to complex storage.
    pub fn from_real(dim: usize, data: &[f64]) -> Result<Self> {
        Self::new(dim, data.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.dim + j]
    }

    /// Set entry (i, j) and its conjugate mirror.
    pub fn set_sym(&mut self, i: usize, j: usize, v: C64) {
        self.data[i * self.dim + j] = v;
        self.data[j * self.dim + i] = v.conj();
        if i == j {
            self.data[i * self.dim + i] = C64::new(v.re, 0.0);
        }
    }

    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    fn resymmetrize(&mut self) {
        let n = self.dim;
        for i in 0..n {
            self.data[i * n + i] = C64::new(self.data[i * n + i].re, 0.0);
            for j in 0..i {
                let v = 0.5 * (self.data[i * n + j] + self.data[j * n + i].conj());
                self.data[i * n + j] = v;
                self.data[j * n + i] = v.conj();
            }
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i].re).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let data = self
            .data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| a - b)
            .collect();
        Self { dim: self.dim, data }
    }

    pub fn distance_frobenius(&self, other: &Self) -> f64 {
        self.sub(other).frobenius_norm()
    }

    /// Real part of the Frobenius inner product `tr(A^† B)`.
    pub fn inner(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| (a.conj() * b).re)
            .sum()
    }

    /// Eigendecomposition with eigenvalues sorted descending and orthonormal
    /// eigenvectors returned column by column.
    ///
    /// Reconstruction satisfies `||A - U diag(w) U^†||_F <= 1e-10 max(1, ||A||_F)`.
    pub fn eig(&self) -> Result<(Vec<f64>, Vec<Vec<C64>>)> {
        let n = self.dim;
        if n == 0 {
            return Ok((vec![], vec![]));
        }
        // Real fast path.
        if self.data.iter().all(|z| z.im == 0.0) {
            let a: Vec<f64> = self.data.iter().map(|z| z.re).collect();
            let (vals, vecs) = sym_eig(n, &a)?;
            let cols = (0..n)
                .map(|j| (0..n).map(|k| C64::new(vecs[k * n + j], 0.0)).collect())
                .collect();
            return Ok((vals, cols));
        }
        // Embed A + iB as [[A, -B], [B, A]]; each eigenvalue appears twice and
        // the complex eigenvectors are recovered as u + iv from (u; v).
        let m = 2 * n;
        let mut em = vec![0.0; m * m];
        for i in 0..n {
            for j in 0..n {
                let z = self.data[i * n + j];
                em[i * m + j] = z.re;
                em[i * m + (j + n)] = -z.im;
                em[(i + n) * m + j] = z.im;
                em[(i + n) * m + (j + n)] = z.re;
            }
        }
        let (vals2, vecs2) = sym_eig(m, &em)?;
        let accept_tol = (0.5 / (n as f64).sqrt()).min(0.1);
        let mut vals: Vec<f64> = Vec::with_capacity(n);
        let mut cols: Vec<Vec<C64>> = Vec::with_capacity(n);
        for idx in 0..m {
            if cols.len() == n {
                break;
            }
            let mut z: Vec<C64> = (0..n)
                .map(|k| C64::new(vecs2[k * m + idx], vecs2[(k + n) * m + idx]))
                .collect();
            for q in &cols {
                let ip: C64 = q.iter().zip(z.iter()).map(|(a, b)| a.conj() * b).sum();
                for (zi, qi) in z.iter_mut().zip(q.iter()) {
                    *zi -= ip * qi;
                }
            }
            let nrm = z.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            if nrm > accept_tol {
                for v in &mut z {
                    *v /= nrm;
                }
                vals.push(vals2[idx]);
                cols.push(z);
            }
        }
        if cols.len() != n {
            return Err(CtxError::Solver(
                "hermitian eigensolver failed to recover a full eigenbasis".into(),
            ));
        }
        Ok((vals, cols))
    }

    /// Largest eigenvalue.
    pub fn lambda_max(&self) -> Result<f64> {
        Ok(self.eig()?.0[0])
    }

    /// Rebuild `sum_k w_k v_k v_k^†` from selected eigenpairs.
    fn from_eigenpairs(dim: usize, pairs: &[(f64, &Vec<C64>)]) -> Self {
        let mut data = vec![C64::new(0.0, 0.0); dim * dim];
        for (w, v) in pairs {
            for i in 0..dim {
                let vi = v[i];
                for j in 0..dim {
                    data[i * dim + j] += w * vi * v[j].conj();
                }
            }
        }
        let mut m = Self { dim, data };
        m.resymmetrize();
        m
    }

    /// Nearest (Frobenius) PSD matrix of rank at most `d`: keeps the largest
    /// `d` nonnegative eigenvalues and drops everything else. If fewer than
    /// `d` eigenvalues are nonnegative, only those are kept.
    pub fn psd_truncate(&self, d: usize) -> Result<Self> {
        assert!(d >= 1, "rank cap must be at least 1");
        let (vals, vecs) = self.eig()?;
        let kept: Vec<(f64, &Vec<C64>)> = vals
            .iter()
            .take(d)
            .zip(vecs.iter())
            .filter(|(l, _)| **l >= 0.0)
            .map(|(l, v)| (*l, v))
            .collect();
        Ok(Self::from_eigenpairs(self.dim, &kept))
    }

    /// Projection onto the PSD cone (no rank cap).
    pub fn psd_project(&self) -> Result<Self> {
        self.psd_truncate(self.dim.max(1))
    }

    /// Numerical rank: eigenvalues at or below `RANK_REL * lambda_max` count
    /// as zero.
    pub fn numerical_rank(&self) -> Result<usize> {
        let (vals, _) = self.eig()?;
        let top = vals.first().copied().unwrap_or(0.0).max(0.0);
        let cut = tol::RANK_REL * top.max(1e-300);
        Ok(vals.iter().filter(|&&l| l > cut).count())
    }
}

// ---------------------------------------------------------------------------
// Vector systems and Gram constructions
// ---------------------------------------------------------------------------

/// A handle vector plus one representative vector per graph vertex.
///
/// Certificates store unit vectors; zero vectors are tolerated only where a
/// calling scheme explicitly allows them (the relaxed "tilde" constructions).
#[derive(Clone, Debug)]
pub struct VectorSystem {
    pub dim: usize,
    pub handle: Vec<C64>,
    pub reps: Vec<Vec<C64>>,
}

/// Below this norm a representative counts as the zero vector.
pub const ZERO_VEC_TOL: f64 = 1e-9;

impl VectorSystem {
    pub fn new(dim: usize, handle: Vec<C64>, reps: Vec<Vec<C64>>) -> Self {
        Self { dim, handle, reps }
    }

    pub fn n(&self) -> usize {
        self.reps.len()
    }

    pub fn rep_norm(&self, i: usize) -> f64 {
        self.reps[i].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_zero_rep(&self, i: usize) -> bool {
        self.rep_norm(i) <= ZERO_VEC_TOL
    }

    /// `c_i = <psi_i | phi>`.
    pub fn overlap(&self, i: usize) -> C64 {
        self.reps[i]
            .iter()
            .zip(self.handle.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `p_i = |<phi | psi_i>|^2` for each vertex.
    pub fn probabilities(&self) -> Vec<f64> {
        (0..self.n()).map(|i| self.overlap(i).norm_sqr()).collect()
    }

    fn inner_rep(&self, i: usize, j: usize) -> C64 {
        self.reps[i]
            .iter()
            .zip(self.reps[j].iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Checks unit norms (handle and nonzero representatives) and edge
    /// orthogonality against `edges` (1-based vertex pairs).
    pub fn validate(&self, edges: &[(usize, usize)], allow_zero: bool) -> Result<()> {
        let hnorm = self.handle.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (hnorm - 1.0).abs() > tol::NORM {
            return Err(CtxError::Certificate(format!(
                "handle vector norm {hnorm} deviates from 1"
            )));
        }
        for i in 0..self.n() {
            let nrm = self.rep_norm(i);
            if nrm <= ZERO_VEC_TOL {
                if !allow_zero {
                    return Err(CtxError::Certificate(format!(
                        "vertex {} carries a zero vector but the scheme forbids it",
                        i + 1
                    )));
                }
                continue;
            }
            if (nrm - 1.0).abs() > tol::NORM {
                return Err(CtxError::Certificate(format!(
                    "vector {} norm {} deviates from 1",
                    i + 1,
                    nrm
                )));
            }
        }
        for &(u, v) in edges {
            let (i, j) = (u - 1, v - 1);
            if self.is_zero_rep(i) || self.is_zero_rep(j) {
                continue;
            }
            let ip = self.inner_rep(i, j).norm();
            if ip > tol::ORTH {
                return Err(CtxError::Certificate(format!(
                    "edge ({u},{v}) violates orthogonality: |<psi_{u}|psi_{v}>| = {ip:.3e}"
                )));
            }
        }
        Ok(())
    }

    /// Pads all vectors with zeros to live in a larger space.
    pub fn embed(&self, new_dim: usize) -> Self {
        assert!(new_dim >= self.dim);
        let pad = |v: &Vec<C64>| {
            let mut w = v.clone();
            w.resize(new_dim, C64::new(0.0, 0.0));
            w
        };
        Self {
            dim: new_dim,
            handle: pad(&self.handle),
            reps: self.reps.iter().map(pad).collect(),
        }
    }
}

/// Gram matrix of `(phi, psi_1, ..., psi_n)`.
///
/// With `phase_align` set, each representative is pre-multiplied by
/// `exp(-i gamma_i)` with `gamma_i = arg <phi|psi_i>`, which makes the
/// first row real nonnegative (`sqrt(p_i)` for unit vectors).
pub fn gram_from_vectors(v: &VectorSystem, phase_align: bool) -> HermitianMatrix {
    let n = v.n();
    let mut vecs: Vec<Vec<C64>> = Vec::with_capacity(n + 1);
    vecs.push(v.handle.clone());
    for i in 0..n {
        if phase_align && !v.is_zero_rep(i) {
            // <phi|psi_i> = conj(overlap); rotate so the overlap is real >= 0.
            let o = v.overlap(i).conj();
            let phase = if o.norm() > 0.0 { o / o.norm() } else { C64::new(1.0, 0.0) };
            vecs.push(v.reps[i].iter().map(|z| z * phase.conj()).collect());
        } else {
            vecs.push(v.reps[i].clone());
        }
    }
    gram_of(&vecs)
}

/// Gram matrix of `(phi, c_1 psi_1, ..., c_n psi_n)` with `c_i = <psi_i|phi>`.
///
/// This is the scaled scheme behind the relaxed bound `theta~_d`: diagonal
/// entries equal the first-row entries (`X_ii = X_0i = |<phi|psi_i>|^2`).
pub fn overlap_scaled_gram(v: &VectorSystem) -> HermitianMatrix {
    let n = v.n();
    let mut vecs: Vec<Vec<C64>> = Vec::with_capacity(n + 1);
    vecs.push(v.handle.clone());
    for i in 0..n {
        let c = v.overlap(i);
        vecs.push(v.reps[i].iter().map(|z| c * z).collect());
    }
    gram_of(&vecs)
}

fn gram_of(vecs: &[Vec<C64>]) -> HermitianMatrix {
    let m = vecs.len();
    let mut g = HermitianMatrix::zeros(m);
    for i in 0..m {
        for j in i..m {
            let ip: C64 = vecs[i]
                .iter()
                .zip(vecs[j].iter())
                .map(|(a, b)| a.conj() * b)
                .sum();
            g.set_sym(i, j, ip);
        }
    }
    g
}

/// Extracts `d`-dimensional vectors whose Gram matrix reproduces `x`.
///
/// Requires `x` to be PSD with numerical rank at most `d`; otherwise the
/// offending eigenvalue mass is reported. Row 0 becomes the handle vector.
pub fn vectors_from_gram(x: &HermitianMatrix, d: usize) -> Result<VectorSystem> {
    assert!(d >= 1);
    let (vals, vecs) = x.eig()?;
    let dim = x.dim();
    let top = vals.first().copied().unwrap_or(0.0).max(0.0);
    let cut = tol::RANK_REL * top.max(1e-300);
    let mut offending = 0.0;
    for (k, &l) in vals.iter().enumerate() {
        if l < -cut {
            offending += l * l;
        } else if k >= d && l > cut {
            offending += l * l;
        }
    }
    if offending > 0.0 {
        return Err(CtxError::RankOverflow { rank: d, mass: offending.sqrt() });
    }
    let keep = d.min(dim);
    let mut rows: Vec<Vec<C64>> = Vec::with_capacity(dim);
    for i in 0..dim {
        let mut w = vec![C64::new(0.0, 0.0); d];
        for k in 0..keep {
            let l = vals[k].max(0.0);
            w[k] = l.sqrt() * vecs[k][i].conj();
        }
        rows.push(w);
    }
    let handle = rows.remove(0);
    Ok(VectorSystem::new(d, handle, rows))
}

// ---------------------------------------------------------------------------
// Tensor-product helpers
// ---------------------------------------------------------------------------

/// Partial transpose on the first tensor factor of a `(block^2) x (block^2)`
/// matrix: entry ((i,k),(j,l)) moves to ((j,k),(i,l)). Involutive.
pub fn partial_transpose_first(a: &HermitianMatrix, block: usize) -> Result<HermitianMatrix> {
    let dim = block * block;
    if a.dim() != dim {
        return Err(CtxError::Dimension(format!(
            "partial transpose expects dim {} for block {}, got {}",
            dim,
            block,
            a.dim()
        )));
    }
    let mut out = vec![C64::new(0.0, 0.0); dim * dim];
    for i in 0..block {
        for k in 0..block {
            for j in 0..block {
                for l in 0..block {
                    let src = (j * block + k) * dim + (i * block + l);
                    let dst = (i * block + k) * dim + (j * block + l);
                    out[dst] = a.entries()[src];
                }
            }
        }
    }
    Ok(HermitianMatrix::from_raw(dim, out))
}

/// Swap operator `V (x ⊗ y) = y ⊗ x` on two `block`-dimensional factors.
/// A symmetric permutation matrix with `V^2 = I`.
pub fn swap_operator(block: usize) -> HermitianMatrix {
    let dim = block * block;
    let mut m = HermitianMatrix::zeros(dim);
    for i in 0..block {
        for j in 0..block {
            m.set_sym(i * block + j, j * block + i, C64::new(1.0, 0.0));
        }
    }
    // set_sym writes both mirror entries; diagonal cells (i==j) are 1.
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::XRng;

    fn random_hermitian(n: usize, rng: &mut XRng) -> HermitianMatrix {
        let mut m = HermitianMatrix::zeros(n);
        for i in 0..n {
            for j in i..n {
                if i == j {
                    m.set_sym(i, j, C64::new(rng.next_normal(), 0.0));
                } else {
                    m.set_sym(i, j, rng.next_cnormal());
                }
            }
        }
        m
    }

    fn reconstruct(vals: &[f64], vecs: &[Vec<C64>], dim: usize) -> HermitianMatrix {
        let pairs: Vec<(f64, &Vec<C64>)> = vals.iter().copied().zip(vecs.iter()).collect();
        HermitianMatrix::from_eigenpairs(dim, &pairs)
    }

    #[test]
    fn eig_identity() {
        let m = HermitianMatrix::identity(3);
        let (vals, _) = m.eig().unwrap();
        for v in vals {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn eig_diag_descending() {
        let mut m = HermitianMatrix::zeros(2);
        m.set_sym(0, 0, C64::new(-1.0, 0.0));
        m.set_sym(1, 1, C64::new(2.0, 0.0));
        let (vals, vecs) = m.eig().unwrap();
        assert!((vals[0] - 2.0).abs() < 1e-12);
        assert!((vals[1] + 1.0).abs() < 1e-12);
        assert!(vecs[0][1].norm() > 0.999);
        assert!(vecs[1][0].norm() > 0.999);
    }

    #[test]
    fn eig_matches_characteristic_roots_2x2() {
        // [[a, b], [conj(b), c]] has eigenvalues (a+c)/2 ± sqrt(((a-c)/2)^2 + |b|^2)
        let (a, c) = (1.3, -0.4);
        let b = C64::new(0.7, -0.2);
        let mut m = HermitianMatrix::zeros(2);
        m.set_sym(0, 0, C64::new(a, 0.0));
        m.set_sym(1, 1, C64::new(c, 0.0));
        m.set_sym(0, 1, b);
        let disc = (((a - c) / 2.0).powi(2) + b.norm_sqr()).sqrt();
        let (vals, _) = m.eig().unwrap();
        assert!((vals[0] - ((a + c) / 2.0 + disc)).abs() < 1e-12);
        assert!((vals[1] - ((a + c) / 2.0 - disc)).abs() < 1e-12);
    }

    #[test]
    fn eig_matches_characteristic_roots_3x3_circulant() {
        // Real symmetric circulant on 3 points: eigenvalues a + 2b cos(2 pi k / 3).
        let (a, b) = (0.5, 0.25);
        let mut m = HermitianMatrix::zeros(3);
        for i in 0..3 {
            m.set_sym(i, i, C64::new(a, 0.0));
        }
        for (i, j) in [(0, 1), (1, 2), (0, 2)] {
            m.set_sym(i, j, C64::new(b, 0.0));
        }
        let (vals, _) = m.eig().unwrap();
        let mut expect = [a + 2.0 * b, a - b, a - b];
        expect.sort_by(|x, y| y.partial_cmp(x).unwrap());
        for (got, want) in vals.iter().zip(expect.iter()) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn eig_reconstruction_residual() {
        let mut rng = XRng::new(11);
        for n in [1, 2, 3, 5, 8, 13, 20] {
            let m = random_hermitian(n, &mut rng);
            let (vals, vecs) = m.eig().unwrap();
            let rec = reconstruct(&vals, &vecs, n);
            let err = m.distance_frobenius(&rec);
            let bound = 1e-10 * m.frobenius_norm().max(1.0);
            assert!(err <= bound, "n={n}: residual {err} > {bound}");
            for w in vals.windows(2) {
                assert!(w[0] >= w[1]);
            }
        }
    }

    #[test]
    fn eig_handles_degenerate_spectra() {
        // Rank-1 complex projector padded with an exactly degenerate kernel.
        let mut rng = XRng::new(5);
        let v = rng.normal_cvec(6);
        let nrm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let v: Vec<C64> = v.iter().map(|z| z / nrm).collect();
        let mut m = HermitianMatrix::zeros(6);
        for i in 0..6 {
            for j in i..6 {
                m.set_sym(i, j, v[i] * v[j].conj());
            }
        }
        let (vals, vecs) = m.eig().unwrap();
        assert!((vals[0] - 1.0).abs() < 1e-10);
        for &l in &vals[1..] {
            assert!(l.abs() < 1e-10);
        }
        let rec = reconstruct(&vals, &vecs, 6);
        assert!(m.distance_frobenius(&rec) < 1e-10);
    }

    #[test]
    fn psd_truncate_diagonal_case() {
        let mut m = HermitianMatrix::zeros(3);
        m.set_sym(0, 0, C64::new(3.0, 0.0));
        m.set_sym(1, 1, C64::new(1.0, 0.0));
        m.set_sym(2, 2, C64::new(-2.0, 0.0));
        let t = m.psd_truncate(2).unwrap();
        assert!((t.get(0, 0).re - 3.0).abs() < 1e-12);
        assert!((t.get(1, 1).re - 1.0).abs() < 1e-12);
        assert!(t.get(2, 2).norm() < 1e-12);
    }

    #[test]
    fn psd_truncate_fixed_point() {
        let mut rng = XRng::new(17);
        let d = 2;
        let n = 5;
        // Random PSD of rank d.
        let l: Vec<Vec<C64>> = (0..n).map(|_| rng.normal_cvec(d)).collect();
        let mut m = HermitianMatrix::zeros(n);
        for i in 0..n {
            for j in i..n {
                let ip: C64 = l[i].iter().zip(l[j].iter()).map(|(a, b)| b.conj() * a).sum();
                m.set_sym(i, j, ip);
            }
        }
        let t = m.psd_truncate(d).unwrap();
        assert!(m.distance_frobenius(&t) < 1e-9 * m.frobenius_norm().max(1.0));
    }

    #[test]
    fn psd_truncate_beats_random_competitors() {
        let mut rng = XRng::new(23);
        for _ in 0..5 {
            let n = 4;
            let d = 1;
            let a = random_hermitian(n, &mut rng);
            let best = a.psd_truncate(d).unwrap();
            let best_dist = a.distance_frobenius(&best);
            // Scaled top-eigenvector competitors plus random rank-1 PSD draws.
            let (vals, vecs) = a.eig().unwrap();
            for scale in [0.5, 0.9, 1.0, 1.1, 2.0] {
                let w = vals[0].max(0.0) * scale;
                let comp = HermitianMatrix::from_eigenpairs(n, &[(w, &vecs[0])]);
                assert!(best_dist <= a.distance_frobenius(&comp) + 1e-9);
            }
            for _ in 0..50 {
                let v = rng.normal_cvec(n);
                let nrm2 = v.iter().map(|z| z.norm_sqr()).sum::<f64>();
                let w = rng.next_f64() * 2.0 * vals[0].abs().max(1.0) / nrm2.max(1e-12);
                let comp = HermitianMatrix::from_eigenpairs(n, &[(w, &v)]);
                assert!(best_dist <= a.distance_frobenius(&comp) + 1e-9);
            }
        }
    }

    #[test]
    fn gram_round_trip() {
        let mut rng = XRng::new(31);
        for _ in 0..10 {
            let d = 3;
            let n = 6;
            let handle = unitize(rng.normal_cvec(d));
            let reps: Vec<Vec<C64>> = (0..n).map(|_| unitize(rng.normal_cvec(d))).collect();
            let vs = VectorSystem::new(d, handle, reps);
            let g = gram_from_vectors(&vs, false);
            let back = vectors_from_gram(&g, d).unwrap();
            let g2 = gram_from_vectors(&back, false);
            assert!(g.distance_frobenius(&g2) < 1e-7, "gram not reproduced");
        }
    }

    #[test]
    fn gram_phase_alignment_makes_row0_real() {
        let mut rng = XRng::new(37);
        let d = 4;
        let handle = unitize(rng.normal_cvec(d));
        let reps: Vec<Vec<C64>> = (0..5).map(|_| unitize(rng.normal_cvec(d))).collect();
        let vs = VectorSystem::new(d, handle, reps);
        let g = gram_from_vectors(&vs, true);
        for j in 1..=5 {
            let v = g.get(0, j);
            assert!(v.im.abs() < 1e-12 && v.re >= -1e-12, "row 0 not aligned: {v}");
        }
    }

    #[test]
    fn orthonormal_basis_gram_example() {
        // phi equal to the first basis vector: X_00 = X_11 = X_01 = 1.
        let d = 3;
        let mut handle = vec![C64::new(0.0, 0.0); d];
        handle[0] = C64::new(1.0, 0.0);
        let reps: Vec<Vec<C64>> = (0..d)
            .map(|i| {
                let mut v = vec![C64::new(0.0, 0.0); d];
                v[i] = C64::new(1.0, 0.0);
                v
            })
            .collect();
        let vs = VectorSystem::new(d, handle, reps);
        let g = gram_from_vectors(&vs, true);
        assert!((g.get(0, 0).re - 1.0).abs() < 1e-12);
        assert!((g.get(1, 1).re - 1.0).abs() < 1e-12);
        assert!((g.get(0, 1).re - 1.0).abs() < 1e-12);
        assert!(g.get(0, 2).norm() < 1e-12);
        assert!(g.get(0, 3).norm() < 1e-12);
    }

    #[test]
    fn vectors_from_identity_gram() {
        let g = HermitianMatrix::identity(3);
        let vs = vectors_from_gram(&g, 3).unwrap();
        assert!((vs.handle.iter().map(|z| z.norm_sqr()).sum::<f64>() - 1.0).abs() < 1e-10);
        for i in 0..2 {
            assert!((vs.rep_norm(i) - 1.0).abs() < 1e-10);
        }
        let p = vs.probabilities();
        for v in p {
            assert!(v.abs() < 1e-10);
        }
    }

    #[test]
    fn rank_overflow_reported() {
        let g = HermitianMatrix::identity(4);
        let err = vectors_from_gram(&g, 2).unwrap_err();
        match err {
            CtxError::RankOverflow { rank, mass } => {
                assert_eq!(rank, 2);
                assert!(mass > 1.0);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn partial_transpose_product_case() {
        let mut rng = XRng::new(41);
        let b = 3;
        let a1 = random_hermitian(b, &mut rng);
        let a2 = random_hermitian(b, &mut rng);
        // A ⊗ B
        let dim = b * b;
        let mut kron = HermitianMatrix::zeros(dim);
        for i in 0..b {
            for k in 0..b {
                for j in 0..b {
                    for l in 0..b {
                        let v = a1.get(i, j) * a2.get(k, l);
                        kron = {
                            let mut m = kron;
                            m.set_sym(i * b + k, j * b + l, v);
                            m
                        };
                    }
                }
            }
        }
        let pt = partial_transpose_first(&kron, b).unwrap();
        for i in 0..b {
            for k in 0..b {
                for j in 0..b {
                    for l in 0..b {
                        let want = a1.get(j, i) * a2.get(k, l);
                        let got = pt.get(i * b + k, j * b + l);
                        assert!((want - got).norm() < 1e-12);
                    }
                }
            }
        }
        // Involution and trace preservation.
        let back = partial_transpose_first(&pt, b).unwrap();
        assert!(back.distance_frobenius(&kron) < 1e-12);
        assert!((pt.trace() - kron.trace()).abs() < 1e-12);
    }

    #[test]
    fn partial_transpose_of_swap_is_scaled_max_entangled() {
        let b = 4;
        let v = swap_operator(b);
        let pt = partial_transpose_first(&v, b).unwrap();
        // b * |omega><omega| with omega = sum_i |ii> / sqrt(b)
        for i in 0..b {
            for k in 0..b {
                for j in 0..b {
                    for l in 0..b {
                        let want = if i == k && j == l { 1.0 } else { 0.0 };
                        let got = pt.get(i * b + k, j * b + l).re;
                        assert!((want - got).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn swap_operator_involution_and_action() {
        let b = 3;
        let v = swap_operator(b);
        // V^2 = I via entries of V*V.
        for p in 0..b * b {
            for q in 0..b * b {
                let mut acc = C64::new(0.0, 0.0);
                for r in 0..b * b {
                    acc += v.get(p, r) * v.get(r, q);
                }
                let want = if p == q { 1.0 } else { 0.0 };
                assert!((acc.re - want).abs() < 1e-12 && acc.im.abs() < 1e-12);
            }
        }
        let mut rng = XRng::new(43);
        let x = rng.normal_cvec(b);
        let y = rng.normal_cvec(b);
        let mut xy = vec![C64::new(0.0, 0.0); b * b];
        let mut yx = vec![C64::new(0.0, 0.0); b * b];
        for i in 0..b {
            for j in 0..b {
                xy[i * b + j] = x[i] * y[j];
                yx[i * b + j] = y[i] * x[j];
            }
        }
        for p in 0..b * b {
            let mut acc = C64::new(0.0, 0.0);
            for r in 0..b * b {
                acc += v.get(p, r) * xy[r];
            }
            assert!((acc - yx[p]).norm() < 1e-12);
        }
    }

    #[test]
    fn non_hermitian_rejected() {
        let data = vec![
            C64::new(1.0, 0.0),
            C64::new(0.5, 0.0),
            C64::new(0.4, 0.0),
            C64::new(1.0, 0.0),
        ];
        assert!(HermitianMatrix::new(2, data).is_err());
    }

    fn unitize(mut v: Vec<C64>) -> Vec<C64> {
        let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in &mut v {
            *z /= n;
        }
        v
    }
}
