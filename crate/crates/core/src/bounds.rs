//! Lower and upper bounds for the dimension-restricted weighted Lovász
//! numbers `theta_d(G, w)` and their zero-vector relaxation
//! `theta~_d(G, w)`.
//!
//! Lower bounds come from seesaw schemes whose accepted output is always a
//! replay-verified feasible point (a rank-`d` Gram matrix or a vector
//! system); an unverified run reports "no bound" instead of a value. Upper
//! bounds come from semidefinite relaxations: the rank-free Gram relaxation
//! with basis-identity clique cuts, and the symmetrized two-copy PPT
//! relaxations, optionally strengthened by clique cuts and by a lower-bound
//! cut (which must itself be justified by a verified lower bound, rounded
//! down).

use crate::graph::{Graph, VertexSubset};
use crate::linalg::{vectors_from_gram, HermitianMatrix, VectorSystem, C64};
use crate::ppt::PptAssembly;
use crate::rng::XRng;
use crate::sdp::{solve, Residuals, SdpProblem, SolveCfg, SolveStatus};
use crate::{tol, CtxError, Result};
use serde::Serialize;

/// Vertex weights; any sign is permitted (the spectral lower-bound method
/// additionally requires strictly positive weights).
#[derive(Clone, Debug)]
pub struct WeightVector {
    pub w: Vec<f64>,
}

impl WeightVector {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.iter().any(|v| !v.is_finite()) {
            return Err(CtxError::Config("weights must be finite".into()));
        }
        Ok(Self { w })
    }

    pub fn ones(n: usize) -> Self {
        Self { w: vec![1.0; n] }
    }

    pub fn validate_for(&self, g: &Graph) -> Result<()> {
        if self.w.len() != g.n() {
            return Err(CtxError::Config(format!(
                "weight vector length {} does not match graph order {}",
                self.w.len(),
                g.n()
            )));
        }
        Ok(())
    }

    pub fn max_abs(&self) -> f64 {
        self.w.iter().fold(0.0f64, |a, &b| a.max(b.abs()))
    }

    pub fn min_abs(&self) -> f64 {
        self.w.iter().fold(f64::INFINITY, |a, &b| a.min(b.abs()))
    }

    pub fn all_positive(&self) -> bool {
        self.w.iter().all(|&v| v > 0.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BoundKind {
    Lower,
    Upper,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BoundTarget {
    /// Unrestricted Lovász number (valid upper bound for every dimension).
    Theta,
    /// `theta_d`.
    ThetaD(usize),
    /// `theta~_d` (zero vectors allowed).
    ThetaTildeD(usize),
}

/// Certificate attached to a bound.
#[derive(Clone, Debug)]
pub enum BoundCertificate {
    /// Replay-verified vector realization (lower bounds).
    Vectors(VectorSystem),
    /// Replay-verified feasible Gram matrix (lower bounds, tilde scheme).
    Gram(HermitianMatrix),
    /// Solver residuals (upper bounds from relaxations).
    Dual { residuals: Residuals, iterations: usize },
}

/// A verified bound with its provenance.
#[derive(Clone, Debug)]
pub struct BoundReport {
    pub kind: BoundKind,
    pub target: BoundTarget,
    pub value: f64,
    pub method: &'static str,
    pub certificate: BoundCertificate,
    /// Configuration snapshot (penalty, epsilon, cuts, tolerances).
    pub config_note: String,
}

/// Clique-cut configuration for the PPT upper bound.
#[derive(Clone, Debug, Default)]
pub struct Cuts {
    /// Add basis-identity clique cuts for all d-cliques of the graph.
    pub cliques: bool,
    /// Lower-bound cut; must be justified by a verified lower bound.
    pub theta_cut: Option<ThetaCut>,
}

#[derive(Clone, Debug)]
pub struct ThetaCut {
    /// The cut value, already rounded down.
    pub theta: f64,
    /// The verified lower bound justifying the cut, when available for
    /// hygiene checking.
    pub justified_by: Option<f64>,
}

impl ThetaCut {
    /// Rounds a verified lower bound down to 1e-4 resolution, the safe way
    /// to feed a bound back as a cut.
    pub fn from_verified_lower(lower: f64) -> Self {
        let theta = (lower * 1e4).floor() / 1e4;
        Self { theta, justified_by: Some(lower) }
    }

    pub fn unchecked(theta: f64) -> Self {
        Self { theta, justified_by: None }
    }

    fn validate(&self) -> Result<()> {
        if let Some(lower) = self.justified_by {
            let rounded = (lower * 1e4).floor() / 1e4;
            if self.theta > rounded + 1e-12 {
                return Err(CtxError::ThetaCut { theta: self.theta, lower });
            }
        }
        Ok(())
    }
}

/// Seesaw configuration.
#[derive(Clone, Debug, Serialize)]
pub struct SeesawCfg {
    /// Penalty weight; defaults to `10 max_i |w_i|` when `None`.
    pub eta: Option<f64>,
    /// Spectral-method epsilon; defaults to `min_i |w_i| / 10` when `None`.
    pub epsilon: Option<f64>,
    pub restarts: usize,
    pub max_iters: usize,
    /// Iteration budget of the penalty-free polish phase.
    pub polish_iters: usize,
    pub seed: u64,
    pub solver: SolveCfg,
}

impl Default for SeesawCfg {
    fn default() -> Self {
        Self {
            eta: None,
            epsilon: None,
            restarts: 20,
            max_iters: 1500,
            polish_iters: 500,
            seed: 0,
            solver: SolveCfg::default(),
        }
    }
}

// ---------------------------------------------------------------------------
// Unrestricted Lovász number
// ---------------------------------------------------------------------------

/// Weighted Lovász number through the Gram (theta-body) SDP:
/// maximize `sum w_i X_ii` over `X >= 0`, `X_00 = 1`, `X_ii = X_0i`, and
/// `X_ij = 0` on edges. An upper bound for `theta_d` at every `d`.
pub fn lovasz_theta(g: &Graph, w: &WeightVector, solver: &SolveCfg) -> Result<BoundReport> {
    w.validate_for(g)?;
    let sol = solve(&theta_body_problem(g, w).0, solver)?;
    if !sol.feasibility_converged(solver.tol.max(solver.accept_tol)) {
        return Err(CtxError::Solver(format!(
            "lovasz theta solve stopped at residuals {:?}",
            sol.residuals
        )));
    }
    Ok(BoundReport {
        kind: BoundKind::Upper,
        target: BoundTarget::Theta,
        value: sol.dual_objective,
        method: "lovasz-sdp",
        certificate: BoundCertificate::Dual {
            residuals: sol.residuals,
            iterations: sol.iterations,
        },
        config_note: format!("tol={:.0e}", solver.tol),
    })
}

fn theta_body_problem(g: &Graph, w: &WeightVector) -> (SdpProblem, crate::sdp::BlockVars) {
    let n1 = g.n() + 1;
    let (mut prob, vars) = SdpProblem::with_variable_blocks(&[n1]);
    let v = vars[0];
    prob.maximize((1..=g.n()).map(|i| (v.var(i, i), w.w[i - 1])).collect(), 0.0);
    prob.add_eq(vec![(v.var(0, 0), 1.0)], 1.0);
    for i in 1..=g.n() {
        prob.add_eq(vec![(v.var(i, i), 1.0), (v.var(0, i), -1.0)], 0.0);
    }
    for &(a, b) in g.edges() {
        prob.add_eq(vec![(v.var(a, b), 1.0)], 0.0);
    }
    (prob, v)
}

// ---------------------------------------------------------------------------
// Lower bounds: penalty seesaw on the unit-diagonal Gram form
// ---------------------------------------------------------------------------

fn resolve_eta(w: &WeightVector, cfg: &SeesawCfg) -> Result<f64> {
    let eta = cfg.eta.unwrap_or_else(|| {
        let m = w.max_abs();
        if m > 0.0 {
            10.0 * m
        } else {
            1.0
        }
    });
    let pole = w.w.iter().fold(0.0f64, |a, &b| a.max(b / 2.0));
    if eta <= pole || eta <= 0.0 {
        return Err(CtxError::Config(format!(
            "penalty eta={eta} must be positive and exceed max_i w_i / 2 = {pole}"
        )));
    }
    Ok(eta)
}

/// One analytic X-update of the penalty seesaw: pins on diagonal and edges,
/// amplified copy of the handle row, plain copy elsewhere.
fn seesaw_x_update(g: &Graph, w: &WeightVector, eta: f64, y: &HermitianMatrix) -> HermitianMatrix {
    let n = g.n();
    let mut x = y.clone();
    for i in 0..=n {
        x.set_sym(i, i, C64::new(1.0, 0.0));
    }
    for &(u, v) in g.edges() {
        x.set_sym(u, v, C64::new(0.0, 0.0));
    }
    for i in 1..=n {
        let scale = 2.0 * eta / (2.0 * eta - w.w[i - 1]);
        x.set_sym(0, i, y.get(0, i) * scale);
    }
    x
}

/// Affine projection used by the penalty-free polish phase.
fn quad_affine_project(g: &Graph, y: &HermitianMatrix) -> HermitianMatrix {
    let n = g.n();
    let mut x = y.clone();
    for i in 0..=n {
        x.set_sym(i, i, C64::new(1.0, 0.0));
    }
    for &(u, v) in g.edges() {
        x.set_sym(u, v, C64::new(0.0, 0.0));
    }
    x
}

fn quad_objective(w: &WeightVector, x: &HermitianMatrix) -> f64 {
    (1..=w.w.len()).map(|i| w.w[i - 1] * x.get(0, i).norm_sqr()).sum()
}

fn random_rank_d_psd(n: usize, d: usize, rng: &mut XRng) -> HermitianMatrix {
    let cols: Vec<Vec<C64>> = (0..n).map(|_| rng.normal_cvec(d)).collect();
    let mut y = HermitianMatrix::zeros(n);
    for i in 0..n {
        for j in i..n {
            let ip: C64 = cols[i].iter().zip(cols[j].iter()).map(|(a, b)| b.conj() * a).sum();
            y.set_sym(i, j, ip);
        }
    }
    let tr = y.trace();
    if tr > 1e-12 {
        let mut z = HermitianMatrix::zeros(n);
        let scale = n as f64 / tr;
        for i in 0..n {
            for j in i..n {
                z.set_sym(i, j, y.get(i, j) * scale);
            }
        }
        z
    } else {
        HermitianMatrix::identity(n)
    }
}

/// Vectors from a converged rank-`d` Gram with unit diagonal; unitized and
/// orthogonality-checked against the graph.
fn extract_unit_system(y: &HermitianMatrix, d: usize, g: &Graph) -> Result<VectorSystem> {
    let mut vs = vectors_from_gram(y, d)?;
    let hn = vs.handle.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if hn > 1e-12 {
        for z in &mut vs.handle {
            *z /= hn;
        }
    }
    for i in 0..vs.reps.len() {
        let nrm = vs.rep_norm(i);
        if nrm > 1e-12 {
            for z in &mut vs.reps[i] {
                *z /= nrm;
            }
        }
    }
    vs.validate(g.edges(), false)?;
    Ok(vs)
}

fn value_from_vectors(w: &WeightVector, vs: &VectorSystem) -> f64 {
    let probs = vs.probabilities();
    w.w.iter().zip(probs.iter()).map(|(wi, pi)| wi * pi).sum()
}

/// Lower bound on `theta_d(G, w)` by the penalty seesaw on the unit-diagonal
/// Gram form, followed by a penalty-free polish phase and certificate
/// extraction. The reported value is recomputed from the replayed vector
/// system; runs that never reach a feasible rank-`d` point return
/// [`CtxError::NoBound`].
pub fn lower_seesaw(g: &Graph, w: &WeightVector, d: usize, cfg: &SeesawCfg) -> Result<BoundReport> {
    w.validate_for(g)?;
    if d == 0 {
        return Err(CtxError::Config("dimension must be at least 1".into()));
    }
    let eta = resolve_eta(w, cfg)?;
    let n1 = g.n() + 1;
    let mut best: Option<(f64, VectorSystem)> = None;
    let mut best_residual = f64::INFINITY;
    for r in 0..cfg.restarts {
        let mut rng = XRng::for_restart(cfg.seed, r as u64);
        let mut y = random_rank_d_psd(n1, d, &mut rng);
        let mut prev_obj = f64::NEG_INFINITY;
        for _ in 0..cfg.max_iters {
            let x = seesaw_x_update(g, w, eta, &y);
            y = x.psd_truncate(d)?;
            let obj = quad_objective(w, &x) - eta * x.distance_frobenius(&y).powi(2);
            if obj - prev_obj < 1e-12 * obj.abs().max(1.0) {
                break;
            }
            prev_obj = obj;
        }
        // Polish: alternating projection between the pinned affine set and
        // the rank-capped PSD cone.
        let mut res = f64::INFINITY;
        for _ in 0..cfg.polish_iters {
            let x = quad_affine_project(g, &y);
            y = x.psd_truncate(d)?;
            res = x.distance_frobenius(&y);
            if res < 1e-9 {
                break;
            }
        }
        best_residual = best_residual.min(res);
        if res < tol::ZERO {
            if let Ok(vs) = extract_unit_system(&y, d, g) {
                let value = value_from_vectors(w, &vs);
                if best.as_ref().map_or(true, |(bv, _)| value > *bv) {
                    best = Some((value, vs));
                }
            }
        }
    }
    match best {
        Some((value, vs)) => Ok(BoundReport {
            kind: BoundKind::Lower,
            target: BoundTarget::ThetaD(d),
            value,
            method: "seesaw-quadratic",
            certificate: BoundCertificate::Vectors(vs),
            config_note: format!("eta={eta}, restarts={}, seed={}", cfg.restarts, cfg.seed),
        }),
        None => Err(CtxError::NoBound { best_residual, restarts: cfg.restarts }),
    }
}

// ---------------------------------------------------------------------------
// Lower bounds: spectral (lambda-max) method for positive weights
// ---------------------------------------------------------------------------

/// Lower bound on `theta_d(G, w)` for strictly positive weights via the
/// spectral seesaw: alternate the SDP step `max tr(M X)` over the weighted
/// Gram set `{M >= 0, M_ii = w_i, edge zeros}` with the analytic update
/// `X = U diag(1+eps, 1 x (d-1), 0 x (n-d)) U^†` from the
/// eigendecomposition of `M`. A restart is accepted only when the final `M`
/// has numerical rank at most `d`; the bound is replayed from unit vectors.
pub fn lower_lambda_max(
    g: &Graph,
    w: &WeightVector,
    d: usize,
    cfg: &SeesawCfg,
) -> Result<BoundReport> {
    w.validate_for(g)?;
    if !w.all_positive() {
        return Err(CtxError::Config(
            "the spectral lower bound requires strictly positive weights".into(),
        ));
    }
    if d == 0 {
        return Err(CtxError::Config("dimension must be at least 1".into()));
    }
    let n = g.n();
    let d_eff = d.min(n);
    let eps = cfg.epsilon.unwrap_or_else(|| (w.min_abs() / 10.0).max(1e-6));
    if eps <= 0.0 {
        return Err(CtxError::Config("epsilon must be positive".into()));
    }
    let mut spectrum = vec![0.0; n];
    spectrum[0] = 1.0 + eps;
    for s in spectrum.iter_mut().take(d_eff).skip(1) {
        *s = 1.0;
    }
    let mut best: Option<(f64, VectorSystem)> = None;
    let mut best_tail = f64::INFINITY;
    for r in 0..cfg.restarts {
        let mut rng = XRng::for_restart(cfg.seed.wrapping_add(0x1a3b), r as u64);
        let frame = rng.orthonormal_frame(n, n);
        let mut x_star = weighted_projector(&frame, &spectrum);
        let mut m_star;
        let mut prev = f64::NEG_INFINITY;
        let mut tail;
        let mut guard = 0;
        loop {
            m_star = spectral_sdp_step(g, w, &x_star, &cfg.solver)?;
            let (vals, vecs) = m_star.eig()?;
            tail = vals[d_eff..].iter().map(|l| l.max(0.0)).sum::<f64>();
            let obj: f64 = m_star.inner(&x_star);
            x_star = weighted_projector(&vecs, &spectrum);
            guard += 1;
            if obj - prev < 1e-10 * obj.abs().max(1.0) || guard > 200 {
                break;
            }
            prev = obj;
        }
        best_tail = best_tail.min(tail);
        let (vals, _) = m_star.eig()?;
        let lmax = vals[0];
        if tail <= tol::RANK_REL * lmax.max(1e-300) {
            if let Ok(vs) = spectral_replay(g, w, &m_star, d_eff) {
                let vs = if d > d_eff { vs.embed(d) } else { vs };
                let value = value_from_vectors(w, &vs);
                if best.as_ref().map_or(true, |(bv, _)| value > *bv) {
                    best = Some((value, vs));
                }
            }
        }
    }
    match best {
        Some((value, vs)) => Ok(BoundReport {
            kind: BoundKind::Lower,
            target: BoundTarget::ThetaD(d),
            value,
            method: "seesaw-spectral",
            certificate: BoundCertificate::Vectors(vs),
            config_note: format!("eps={eps}, restarts={}, seed={}", cfg.restarts, cfg.seed),
        }),
        None => Err(CtxError::NoBound { best_residual: best_tail, restarts: cfg.restarts }),
    }
}

fn weighted_projector(cols: &[Vec<C64>], weights: &[f64]) -> HermitianMatrix {
    let n = cols[0].len();
    let mut m = HermitianMatrix::zeros(n);
    for (k, wk) in weights.iter().enumerate() {
        if *wk == 0.0 {
            continue;
        }
        for i in 0..n {
            for j in i..n {
                let cur = m.get(i, j);
                m.set_sym(i, j, cur + wk * cols[k][i] * cols[k][j].conj());
            }
        }
    }
    m
}

/// SDP step: maximize `tr(M X*)` over `M >= 0` with `M_ii = w_i` and edge
/// zeros (complex Hermitian through the real embedding).
fn spectral_sdp_step(
    g: &Graph,
    w: &WeightVector,
    x_star: &HermitianMatrix,
    solver: &SolveCfg,
) -> Result<HermitianMatrix> {
    let n = g.n();
    let mut prob = SdpProblem::new(0);
    let (hv, _) = crate::sdp::HermitianVars::add_to(&mut prob, n);
    for i in 0..n {
        hv.pin(&mut prob, i, i, C64::new(w.w[i], 0.0));
    }
    for &(u, v) in g.edges() {
        hv.pin(&mut prob, u - 1, v - 1, C64::new(0.0, 0.0));
    }
    prob.maximize(hv.trace_product_terms(x_star), 0.0);
    let sol = solve(&prob, solver)?;
    if sol.status != SolveStatus::Optimal {
        return Err(CtxError::Solver(format!(
            "spectral SDP step stopped at residuals {:?}",
            sol.residuals
        )));
    }
    Ok(hv.extract(&sol.x))
}

/// Unit vectors from the weighted Gram `M` (row i holds sqrt(w_i) psi_i),
/// with the handle taken as the top eigenvector of
/// `sum_i w_i |psi_i><psi_i|`.
fn spectral_replay(
    g: &Graph,
    w: &WeightVector,
    m_star: &HermitianMatrix,
    d: usize,
) -> Result<VectorSystem> {
    let truncated = m_star.psd_truncate(d)?;
    let scaled = vectors_from_gram(&truncated, d)?;
    let n = g.n();
    let mut all = Vec::with_capacity(n);
    all.push(scaled.handle.clone());
    all.extend(scaled.reps.iter().cloned());
    let mut reps: Vec<Vec<C64>> = Vec::with_capacity(n);
    for col in all.iter() {
        let nrm = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let mut v = col.clone();
        if nrm > 1e-12 {
            for z in &mut v {
                *z /= nrm;
            }
        }
        reps.push(v);
    }
    let mut frame_op = HermitianMatrix::zeros(d);
    for (i, psi) in reps.iter().enumerate() {
        for a in 0..d {
            for b in a..d {
                let cur = frame_op.get(a, b);
                frame_op.set_sym(a, b, cur + w.w[i] * psi[a] * psi[b].conj());
            }
        }
    }
    let (_, vecs) = frame_op.eig()?;
    let vs = VectorSystem::new(d, vecs[0].clone(), reps);
    vs.validate(g.edges(), false)?;
    Ok(vs)
}

// ---------------------------------------------------------------------------
// Lower bounds: tilde scheme (zero vectors allowed)
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum TildeVariant {
    /// Penalty seesaw with an analytic affine update.
    Frobenius,
    /// Projector seesaw with an SDP step.
    Projector,
}

/// Analytic maximizer of `sum w_i X_ii - eta ||X - Y||_F^2` over the tilde
/// affine set (`X_00 = 1`, `X_ii = X_0i` real, edge zeros, rest free).
fn tilde_x_update(g: &Graph, w: &WeightVector, eta: f64, y: &HermitianMatrix) -> HermitianMatrix {
    let n = g.n();
    let mut x = y.clone();
    x.set_sym(0, 0, C64::new(1.0, 0.0));
    for &(u, v) in g.edges() {
        x.set_sym(u, v, C64::new(0.0, 0.0));
    }
    for i in 1..=n {
        let t = (w.w[i - 1] + 4.0 * eta * y.get(0, i).re + 2.0 * eta * y.get(i, i).re)
            / (6.0 * eta);
        x.set_sym(i, i, C64::new(t, 0.0));
        x.set_sym(0, i, C64::new(t, 0.0));
    }
    x
}

/// Affine projection for the tilde polish phase (the penalty's infinite
/// limit): nearest point with `X_00 = 1`, `X_ii = X_0i`, edge zeros.
fn tilde_affine_project(g: &Graph, y: &HermitianMatrix) -> HermitianMatrix {
    let n = g.n();
    let mut x = y.clone();
    x.set_sym(0, 0, C64::new(1.0, 0.0));
    for &(u, v) in g.edges() {
        x.set_sym(u, v, C64::new(0.0, 0.0));
    }
    for i in 1..=n {
        let t = (2.0 * y.get(0, i).re + y.get(i, i).re) / 3.0;
        x.set_sym(i, i, C64::new(t, 0.0));
        x.set_sym(0, i, C64::new(t, 0.0));
    }
    x
}

fn tilde_objective(w: &WeightVector, x: &HermitianMatrix) -> f64 {
    (1..=w.w.len()).map(|i| w.w[i - 1] * x.get(i, i).re).sum()
}

/// Validates a tilde-feasible rank-`d` Gram certificate and returns its
/// objective value.
pub fn verify_tilde_gram(
    g: &Graph,
    w: &WeightVector,
    x: &HermitianMatrix,
    d: usize,
) -> Result<f64> {
    if (x.get(0, 0).re - 1.0).abs() > tol::CERT {
        return Err(CtxError::Certificate("tilde Gram: X_00 must be 1".into()));
    }
    for i in 1..=g.n() {
        let diff = (x.get(i, i) - x.get(0, i)).norm();
        if diff > tol::CERT {
            return Err(CtxError::Certificate(format!(
                "tilde Gram: X_{i}{i} and X_0{i} differ by {diff:.3e}"
            )));
        }
    }
    for &(u, v) in g.edges() {
        if x.get(u, v).norm() > tol::CERT {
            return Err(CtxError::Certificate(format!(
                "tilde Gram: edge ({u},{v}) entry is {:.3e}",
                x.get(u, v).norm()
            )));
        }
    }
    let (vals, _) = x.eig()?;
    let top = vals.first().copied().unwrap_or(0.0).max(1e-300);
    if vals.iter().any(|&l| l < -tol::RANK_REL * top) {
        return Err(CtxError::Certificate("tilde Gram: not PSD within tolerance".into()));
    }
    let tail: f64 = vals.iter().skip(d).map(|&l| l.max(0.0)).sum();
    if tail > tol::RANK_REL * top {
        return Err(CtxError::RankOverflow { rank: d, mass: tail });
    }
    Ok(tilde_objective(w, x))
}

/// Lower bound on `theta~_d(G, w)` via seesaw on the overlap-scaled Gram
/// form, where zero vectors are implicitly allowed (`X_ii = X_0i = 0`). The
/// certificate is the feasible rank-`d` Gram matrix itself.
pub fn lower_tilde_seesaw(
    g: &Graph,
    w: &WeightVector,
    d: usize,
    variant: TildeVariant,
    cfg: &SeesawCfg,
) -> Result<BoundReport> {
    w.validate_for(g)?;
    if d == 0 {
        return Err(CtxError::Config("dimension must be at least 1".into()));
    }
    let eta = resolve_eta(w, cfg)?;
    let n1 = g.n() + 1;
    let mut best: Option<(f64, HermitianMatrix)> = None;
    let mut best_residual = f64::INFINITY;
    for r in 0..cfg.restarts {
        let mut rng = XRng::for_restart(cfg.seed.wrapping_add(0x7e1de), r as u64);
        let (x, res) = match variant {
            TildeVariant::Frobenius => {
                let mut y = random_rank_d_psd(n1, d, &mut rng);
                let mut prev = f64::NEG_INFINITY;
                for _ in 0..cfg.max_iters {
                    let x = tilde_x_update(g, w, eta, &y);
                    y = x.psd_truncate(d)?;
                    let obj = tilde_objective(w, &x) - eta * x.distance_frobenius(&y).powi(2);
                    if obj - prev < 1e-12 * obj.abs().max(1.0) {
                        break;
                    }
                    prev = obj;
                }
                let mut res = f64::INFINITY;
                let mut x = tilde_affine_project(g, &y);
                for _ in 0..cfg.polish_iters {
                    x = tilde_affine_project(g, &y);
                    y = x.psd_truncate(d)?;
                    res = x.distance_frobenius(&y);
                    if res < 1e-10 {
                        break;
                    }
                }
                (x, res)
            }
            TildeVariant::Projector => {
                let frame = rng.orthonormal_frame(n1, n1 - d.min(n1 - 1));
                let mut p_star = projector_from_frame(&frame, n1);
                let mut x_star = HermitianMatrix::zeros(n1);
                let mut prev = f64::NEG_INFINITY;
                let mut tail = f64::INFINITY;
                for _ in 0..cfg.max_iters.min(60) {
                    x_star = tilde_projector_sdp(g, w, eta, &p_star, &cfg.solver)?;
                    let (vals, vecs) = x_star.eig()?;
                    tail = vals[d.min(vals.len())..].iter().map(|l| l.max(0.0)).sum::<f64>();
                    if tail < 1e-9 {
                        break;
                    }
                    let cols: Vec<Vec<C64>> = vecs[d.min(vecs.len())..].to_vec();
                    p_star = projector_from_frame(&cols, n1);
                    let obj = tilde_objective(w, &x_star) - eta * x_star.inner(&p_star);
                    if obj - prev < 1e-11 * obj.abs().max(1.0) {
                        break;
                    }
                    prev = obj;
                }
                (x_star, tail)
            }
        };
        best_residual = best_residual.min(res);
        if res < tol::ZERO {
            if let Ok(xd) = x.psd_truncate(d) {
                if let Ok(value) = verify_tilde_gram(g, w, &xd, d) {
                    if best.as_ref().map_or(true, |(bv, _)| value > *bv) {
                        best = Some((value, xd));
                    }
                }
            }
        }
    }
    match best {
        Some((value, x)) => Ok(BoundReport {
            kind: BoundKind::Lower,
            target: BoundTarget::ThetaTildeD(d),
            value,
            method: match variant {
                TildeVariant::Frobenius => "tilde-seesaw-frobenius",
                TildeVariant::Projector => "tilde-seesaw-projector",
            },
            certificate: BoundCertificate::Gram(x),
            config_note: format!("eta={eta}, restarts={}, seed={}", cfg.restarts, cfg.seed),
        }),
        None => Err(CtxError::NoBound { best_residual, restarts: cfg.restarts }),
    }
}

fn projector_from_frame(cols: &[Vec<C64>], dim: usize) -> HermitianMatrix {
    let mut p = HermitianMatrix::zeros(dim);
    for col in cols {
        for i in 0..dim {
            for j in i..dim {
                let cur = p.get(i, j);
                p.set_sym(i, j, cur + col[i] * col[j].conj());
            }
        }
    }
    p
}

/// SDP step of the tilde projector variant: maximize
/// `sum w_i X_ii - eta tr(P X)` over the tilde affine set with `X >= 0`.
fn tilde_projector_sdp(
    g: &Graph,
    w: &WeightVector,
    eta: f64,
    p_star: &HermitianMatrix,
    solver: &SolveCfg,
) -> Result<HermitianMatrix> {
    let n = g.n();
    let n1 = n + 1;
    let mut prob = SdpProblem::new(0);
    let (hv, _) = crate::sdp::HermitianVars::add_to(&mut prob, n1);
    hv.pin(&mut prob, 0, 0, C64::new(1.0, 0.0));
    for &(u, v) in g.edges() {
        hv.pin(&mut prob, u, v, C64::new(0.0, 0.0));
    }
    for i in 1..=n {
        prob.add_eq(vec![(hv.re_var(i, i), 1.0), (hv.re_var(0, i), -1.0)], 0.0);
        if let Some((v, sign)) = hv.im_var(0, i) {
            prob.add_eq(vec![(v, sign)], 0.0);
        }
    }
    let mut terms = hv.trace_product_terms(p_star);
    for t in terms.iter_mut() {
        t.1 *= -eta;
    }
    for i in 1..=n {
        terms.push((hv.re_var(i, i), w.w[i - 1]));
    }
    prob.maximize(terms, 0.0);
    let sol = solve(&prob, solver)?;
    if sol.status != SolveStatus::Optimal {
        return Err(CtxError::Solver(format!(
            "tilde projector step stopped at residuals {:?}",
            sol.residuals
        )));
    }
    Ok(hv.extract(&sol.x))
}

// ---------------------------------------------------------------------------
// Lower bound at full rank: realize the unrestricted optimum
// ---------------------------------------------------------------------------

/// For `d >= n + 1` the rank cap is inactive and the unrestricted optimum is
/// realizable: solve the Lovász SDP, extract vectors, and fill any
/// zero-probability vertices with unit vectors orthogonal to their
/// neighborhoods and the handle.
pub fn lower_from_theta(
    g: &Graph,
    w: &WeightVector,
    d: usize,
    solver: &SolveCfg,
) -> Result<BoundReport> {
    w.validate_for(g)?;
    let n = g.n();
    let n1 = n + 1;
    if d < n1 {
        return Err(CtxError::Config(format!(
            "full-rank realization needs d >= n + 1 (got d={d}, n={n})"
        )));
    }
    let (prob, v) = theta_body_problem(g, w);
    let sol = solve(&prob, solver)?;
    if sol.status != SolveStatus::Optimal {
        return Err(CtxError::Solver("lovasz SDP did not converge".into()));
    }
    let mut x = HermitianMatrix::zeros(n1);
    for i in 0..n1 {
        for j in i..n1 {
            x.set_sym(i, j, C64::new(sol.x[v.var(i, j)], 0.0));
        }
    }
    let x = x.psd_project()?;
    let scaled = vectors_from_gram(&x, n1)?;
    let mut handle = scaled.handle.clone();
    let hn = handle.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for z in &mut handle {
        *z /= hn;
    }
    let mut reps: Vec<Vec<C64>> = Vec::with_capacity(n);
    for i in 0..n {
        let nrm = scaled.rep_norm(i);
        if nrm > 1e-6 {
            reps.push(scaled.reps[i].iter().map(|z| z / nrm).collect());
        } else {
            reps.push(vec![C64::new(0.0, 0.0); n1]);
        }
    }
    for i in 0..n {
        if reps[i].iter().map(|z| z.norm_sqr()).sum::<f64>() > 0.5 {
            continue;
        }
        // Zero-probability vertex: orthogonal to handle and all neighbors.
        let mut constraints: Vec<Vec<C64>> = vec![handle.clone()];
        for j in 0..n {
            if g.has_edge(i + 1, j + 1) {
                constraints.push(reps[j].clone());
            }
        }
        reps[i] = orthogonal_unit(&constraints, n1)?;
    }
    let vs = VectorSystem::new(n1, handle, reps);
    vs.validate(g.edges(), false)?;
    let value = value_from_vectors(w, &vs);
    let vs = if d > n1 { vs.embed(d) } else { vs };
    Ok(BoundReport {
        kind: BoundKind::Lower,
        target: BoundTarget::ThetaD(d),
        value,
        method: "theta-realization",
        certificate: BoundCertificate::Vectors(vs),
        config_note: format!("tol={:.0e}", solver.tol),
    })
}

/// A unit vector orthogonal to all given vectors (which number < dim).
fn orthogonal_unit(constraints: &[Vec<C64>], dim: usize) -> Result<Vec<C64>> {
    for k in 0..dim {
        let mut v = vec![C64::new(0.0, 0.0); dim];
        v[k] = C64::new(1.0, 0.0);
        for c in constraints {
            let cn: f64 = c.iter().map(|z| z.norm_sqr()).sum();
            if cn < 1e-18 {
                continue;
            }
            let ip: C64 = c.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
            for (vi, ci) in v.iter_mut().zip(c.iter()) {
                *vi -= ip / cn * ci;
            }
        }
        let nrm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if nrm > 1e-6 {
            for z in &mut v {
                *z /= nrm;
            }
            return Ok(v);
        }
    }
    Err(CtxError::Certificate(
        "no orthogonal direction available for a zero-probability vertex".into(),
    ))
}

// ---------------------------------------------------------------------------
// Upper bounds
// ---------------------------------------------------------------------------

/// PPT relaxation of the unit-diagonal (quadratic) form. The bound may be
/// weak; it is reported as-is with solver residuals.
pub fn upper_quad_ppt(
    g: &Graph,
    w: &WeightVector,
    d: usize,
    solver: &SolveCfg,
) -> Result<BoundReport> {
    w.validate_for(g)?;
    if d == 0 {
        return Err(CtxError::Config("dimension must be at least 1".into()));
    }
    let n = g.n();
    let n1 = n + 1;
    let df = d as f64;
    let mut asm = PptAssembly::new(n1, d, (df * df, df));
    let tr = asm.trace_functional(df * df, df);
    asm.problem.add_eq(tr, (n1 * n1) as f64);
    for &(u, v) in g.edges() {
        asm.add_pin_rows(v.max(u), v.min(u), 0.0);
    }
    let inv_n1 = 1.0 / n1 as f64;
    for i in 0..n1 {
        asm.add_pin_rows(i, i, inv_n1);
    }
    let mut obj = std::collections::BTreeMap::new();
    for i in 1..=n {
        for (var, co) in asm.m_entry(i, 0, 0, i) {
            *obj.entry(var).or_insert(0.0) += w.w[i - 1] * co;
        }
    }
    asm.problem.maximize(obj.into_iter().collect(), 0.0);
    let sol = solve(&asm.problem, solver)?;
    if !sol.feasibility_converged(solver.tol.max(solver.accept_tol)) {
        return Err(CtxError::Solver(format!(
            "quad PPT relaxation stopped at residuals {:?}",
            sol.residuals
        )));
    }
    Ok(BoundReport {
        kind: BoundKind::Upper,
        target: BoundTarget::ThetaD(d),
        value: sol.dual_objective,
        method: "ppt-quadratic",
        certificate: BoundCertificate::Dual {
            residuals: sol.residuals,
            iterations: sol.iterations,
        },
        config_note: format!("tol={:.0e}", solver.tol),
    })
}

/// PPT relaxation of the overlap-scaled (tilde) form, optionally
/// strengthened by basis-identity clique cuts and a lower-bound cut.
///
/// Without cuts the value bounds `theta~_d` (hence also `theta_d`); the
/// cuts are valid for `theta_d`, so with any cut active the bound targets
/// `theta_d`.
pub fn upper_tilde_ppt(
    g: &Graph,
    w: &WeightVector,
    d: usize,
    cuts: &Cuts,
    solver: &SolveCfg,
) -> Result<BoundReport> {
    w.validate_for(g)?;
    if d == 0 {
        return Err(CtxError::Config("dimension must be at least 1".into()));
    }
    let n = g.n();
    let n1 = n + 1;
    let df = d as f64;
    let mut asm = PptAssembly::new(n1, d, (df * df, df));
    let norm_row: Vec<(usize, f64)> = asm.m_entry(0, 0, 0, 0).into_iter().collect();
    asm.problem.add_eq(norm_row, 1.0);
    // Redundant but load-bearing compactification: the handle rows, the swap
    // symmetry and 2x2 PSD minors force every diagonal entry of the pinned
    // combination below the normalized corner (D_ik <= D_0k = D_k0 <= D_00),
    // so these bounds do not change the optimum. Stating them explicitly
    // keeps the iterates in a compact region.
    for i in 0..n1 {
        for k in 0..n1 {
            let row: Vec<(usize, f64)> = asm.m_entry(i, k, i, k).into_iter().collect();
            asm.problem.add_ineq_le(row, 1.0);
        }
    }
    for &(u, v) in g.edges() {
        asm.add_pin_rows(v.max(u), v.min(u), 0.0);
    }
    // Handle-row identification: M'[(i,k),(0,l)] = M'[(i,k),(i,l)].
    for i in 1..=n {
        for k in 0..n1 {
            for l in 0..n1 {
                let mut acc = asm.m_entry(i, k, 0, l);
                for (var, co) in asm.m_entry(i, k, i, l) {
                    *acc.entry(var).or_insert(0.0) -= co;
                }
                let row: Vec<(usize, f64)> = acc.into_iter().filter(|&(_, v)| v != 0.0).collect();
                if !row.is_empty() {
                    asm.problem.add_eq(row, 0.0);
                }
            }
        }
    }
    let mut notes = vec![format!("tol={:.0e}", solver.tol)];
    if cuts.cliques {
        let mut used = 0usize;
        if d <= n {
            for clique in g.enumerate_cliques(d) {
                used += 1;
                for k in 0..n1 {
                    for l in k..n1 {
                        let mut acc = std::collections::BTreeMap::new();
                        for &i in clique.members() {
                            for (var, co) in asm.m_entry(i, k, i, l) {
                                *acc.entry(var).or_insert(0.0) += co;
                            }
                        }
                        for (var, co) in asm.m_entry(0, k, 0, l) {
                            *acc.entry(var).or_insert(0.0) -= co;
                        }
                        let row: Vec<(usize, f64)> =
                            acc.into_iter().filter(|&(_, v)| v != 0.0).collect();
                        if !row.is_empty() {
                            asm.problem.add_eq(row, 0.0);
                        }
                    }
                }
            }
        }
        notes.push(format!("clique-cuts={used}"));
    }
    if let Some(tc) = &cuts.theta_cut {
        tc.validate()?;
        // Operator inequality sum_i w_i R_i - theta R_0 >= 0 as a PSD block,
        // with R_j[k,l] = M'[(j,k),(j,l)].
        let blk = asm.problem.add_psd_block(n1);
        for k in 0..n1 {
            for l in k..n1 {
                let mut acc = std::collections::BTreeMap::new();
                for i in 1..=n {
                    for (var, co) in asm.m_entry(i, k, i, l) {
                        *acc.entry(var).or_insert(0.0) += w.w[i - 1] * co;
                    }
                }
                for (var, co) in asm.m_entry(0, k, 0, l) {
                    *acc.entry(var).or_insert(0.0) -= tc.theta * co;
                }
                for (var, co) in acc {
                    if co != 0.0 {
                        asm.problem.block_entry_add(blk, k, l, var, co);
                    }
                }
            }
        }
        notes.push(format!("theta-cut={}", tc.theta));
    }
    let mut obj = std::collections::BTreeMap::new();
    for i in 1..=n {
        for (var, co) in asm.m_entry(0, i, 0, i) {
            *obj.entry(var).or_insert(0.0) += w.w[i - 1] * co;
        }
    }
    asm.problem.maximize(obj.into_iter().collect(), 0.0);
    let sol = solve(&asm.problem, solver)?;
    if !sol.feasibility_converged(solver.tol.max(solver.accept_tol)) {
        return Err(CtxError::Solver(format!(
            "tilde PPT relaxation stopped at residuals {:?}",
            sol.residuals
        )));
    }
    let target = if cuts.cliques || cuts.theta_cut.is_some() {
        BoundTarget::ThetaD(d)
    } else {
        BoundTarget::ThetaTildeD(d)
    };
    Ok(BoundReport {
        kind: BoundKind::Upper,
        target,
        value: sol.dual_objective,
        method: "ppt-tilde",
        certificate: BoundCertificate::Dual {
            residuals: sol.residuals,
            iterations: sol.iterations,
        },
        config_note: notes.join(", "),
    })
}

/// Rank-free relaxation of the overlap-scaled Gram form with basis-identity
/// equalities (`sum_{i in clique} X_0i = 1`) for the supplied or
/// auto-enumerated d-cliques.
pub fn upper_ray_sdp(
    g: &Graph,
    w: &WeightVector,
    d: usize,
    cliques: Option<Vec<VertexSubset>>,
    solver: &SolveCfg,
) -> Result<BoundReport> {
    w.validate_for(g)?;
    if d == 0 {
        return Err(CtxError::Config("dimension must be at least 1".into()));
    }
    let n = g.n();
    let cliques = match cliques {
        Some(cs) => {
            for c in &cs {
                c.validate(g)?;
                if c.len() != d {
                    return Err(CtxError::CliqueSize(c.members().to_vec(), d));
                }
                for (idx, &a) in c.members().iter().enumerate() {
                    for &b in &c.members()[idx + 1..] {
                        if !g.has_edge(a, b) {
                            return Err(CtxError::CliqueSize(c.members().to_vec(), d));
                        }
                    }
                }
            }
            cs
        }
        None => {
            if d <= n {
                g.enumerate_cliques(d)
            } else {
                Vec::new()
            }
        }
    };
    let (mut prob, v) = theta_body_problem(g, w);
    for c in &cliques {
        prob.add_eq(c.members().iter().map(|&i| (v.var(0, i), 1.0)).collect(), 1.0);
    }
    let sol = solve(&prob, solver)?;
    if !sol.feasibility_converged(solver.tol.max(solver.accept_tol)) {
        return Err(CtxError::Solver(format!(
            "ray relaxation stopped at residuals {:?}",
            sol.residuals
        )));
    }
    Ok(BoundReport {
        kind: BoundKind::Upper,
        target: BoundTarget::ThetaD(d),
        value: sol.dual_objective,
        method: "ray-sdp",
        certificate: BoundCertificate::Dual {
            residuals: sol.residuals,
            iterations: sol.iterations,
        },
        config_note: format!("cliques={}, tol={:.0e}", cliques.len(), solver.tol),
    })
}

// ---------------------------------------------------------------------------
// Induced-subgraph maximization and the gap report
// ---------------------------------------------------------------------------

/// Maximizes a per-subgraph bound over all nonempty induced subgraphs
/// (`theta~_d(G, w) = max over S of theta_d(G[S], w[S])`).
pub fn tilde_via_subgraphs<F>(
    g: &Graph,
    w: &WeightVector,
    cap: usize,
    mut op: F,
) -> Result<BoundReport>
where
    F: FnMut(&Graph, &WeightVector) -> Option<BoundReport>,
{
    w.validate_for(g)?;
    if g.n() > cap {
        return Err(CtxError::Config(format!(
            "subgraph enumeration capped at {cap} vertices (graph has {})",
            g.n()
        )));
    }
    let mut best: Option<BoundReport> = None;
    for s in VertexSubset::enumerate_all(g.n()) {
        let (sub, map) = g.induced_subgraph(&s)?;
        let wsub = WeightVector::new(map.iter().map(|&old| w.w[old - 1]).collect())?;
        if let Some(rep) = op(&sub, &wsub) {
            if best.as_ref().map_or(true, |b| rep.value > b.value) {
                best = Some(rep);
            }
        }
    }
    let mut best = best.ok_or(CtxError::NoBound { best_residual: f64::INFINITY, restarts: 0 })?;
    best.method = "tilde-subgraphs";
    if let BoundTarget::ThetaD(d) = best.target {
        best.target = BoundTarget::ThetaTildeD(d);
    }
    Ok(best)
}

/// Full pipeline report on one `(G, w, d)` instance.
#[derive(Debug)]
pub struct GapReport {
    pub alpha: usize,
    pub theta: BoundReport,
    pub lower_theta_d: Option<BoundReport>,
    pub upper_theta_d: Option<BoundReport>,
    pub lower_tilde_d: Option<BoundReport>,
    pub upper_tilde_d: Option<BoundReport>,
    /// Certified separation: the tilde lower bound strictly exceeds the
    /// theta_d upper bound (beyond stacked tolerances).
    pub tilde_exceeds_theta_d: bool,
    /// theta_d bounds agree with theta within 1e-4 (rank cap inactive).
    pub theta_d_attains_theta: bool,
}

/// Runs the full bound pipeline: independence number, unrestricted theta,
/// verified lower bounds for `theta_d` and `theta~_d`, and the strongest
/// upper bounds (clique cuts plus a self-derived lower-bound cut).
pub fn gap_report(g: &Graph, w: &WeightVector, d: usize, cfg: &SeesawCfg) -> Result<GapReport> {
    w.validate_for(g)?;
    let alpha = g.independence_number();
    let theta = lovasz_theta(g, w, &cfg.solver)?;
    let n1 = g.n() + 1;
    let lower_theta_d = if d >= n1 {
        lower_from_theta(g, w, d, &cfg.solver).ok()
    } else {
        lower_seesaw(g, w, d, cfg).ok()
    };
    let lower_tilde_d = if d >= n1 {
        lower_theta_d.clone().map(|mut b| {
            b.target = BoundTarget::ThetaTildeD(d);
            b
        })
    } else {
        lower_tilde_seesaw(g, w, d, TildeVariant::Frobenius, cfg).ok()
    };
    let (upper_theta_d, upper_tilde_d) = if d >= n1 {
        (Some(theta.clone()), Some(theta.clone()))
    } else {
        let upper_tilde = upper_tilde_ppt(g, w, d, &Cuts::default(), &cfg.solver).ok();
        let cuts_strong = Cuts {
            cliques: true,
            theta_cut: lower_theta_d.as_ref().map(|b| ThetaCut::from_verified_lower(b.value)),
        };
        let upper_theta = upper_tilde_ppt(g, w, d, &cuts_strong, &cfg.solver).ok();
        (upper_theta, upper_tilde)
    };
    let tilde_exceeds_theta_d = match (&lower_tilde_d, &upper_theta_d) {
        (Some(lo), Some(up)) => lo.value > up.value + 2.0 * tol::CERT,
        _ => false,
    };
    let theta_d_attains_theta = match &lower_theta_d {
        Some(lo) => (lo.value - theta.value).abs() <= 1e-4,
        None => false,
    };
    Ok(GapReport {
        alpha,
        theta,
        lower_theta_d,
        upper_theta_d,
        lower_tilde_d,
        upper_tilde_d,
        tilde_exceeds_theta_d,
        theta_d_attains_theta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fast_cfg() -> SeesawCfg {
        SeesawCfg { restarts: 6, ..Default::default() }
    }

    #[test]
    fn theta_complete_graph_is_one() {
        let g = Graph::complete(4).unwrap();
        let w = WeightVector::ones(4);
        let b = lovasz_theta(&g, &w, &SolveCfg::default()).unwrap();
        assert!((b.value - 1.0).abs() < 1e-6, "theta(K4) = {}", b.value);
    }

    #[test]
    fn theta_edgeless_graph_is_n() {
        let g = Graph::edgeless(5).unwrap();
        let w = WeightVector::ones(5);
        let b = lovasz_theta(&g, &w, &SolveCfg::default()).unwrap();
        assert!((b.value - 5.0).abs() < 1e-6, "theta = {}", b.value);
    }

    #[test]
    fn theta_c5_is_sqrt5() {
        let g = Graph::cycle(5).unwrap();
        let w = WeightVector::ones(5);
        let b = lovasz_theta(&g, &w, &SolveCfg::default()).unwrap();
        assert!((b.value - 5f64.sqrt()).abs() < 1e-4, "theta(C5) = {}", b.value);
    }

    #[test]
    fn seesaw_on_complete_graph_reaches_one() {
        // K_d in dimension d: an orthonormal basis achieves exactly 1.
        let d = 3;
        let g = Graph::complete(d).unwrap();
        let w = WeightVector::ones(d);
        let b = lower_seesaw(&g, &w, d, &fast_cfg()).unwrap();
        assert!(b.value >= 1.0 - 1e-6, "seesaw K3 value {}", b.value);
        assert!(b.value <= 1.0 + 1e-6);
    }

    #[test]
    fn lambda_max_edgeless_reaches_n() {
        // All representatives aligned with the handle: value n at d = 1.
        let g = Graph::edgeless(4).unwrap();
        let w = WeightVector::ones(4);
        let b = lower_lambda_max(&g, &w, 1, &fast_cfg()).unwrap();
        assert!(b.value >= 4.0 - 1e-5, "lambda-max value {}", b.value);
    }

    #[test]
    fn lambda_max_requires_positive_weights() {
        let g = Graph::edgeless(3).unwrap();
        let w = WeightVector::new(vec![1.0, -1.0, 1.0]).unwrap();
        assert!(lower_lambda_max(&g, &w, 1, &fast_cfg()).is_err());
    }

    #[test]
    fn tilde_single_vertex() {
        let g = Graph::edgeless(1).unwrap();
        let w = WeightVector::ones(1);
        let b = lower_tilde_seesaw(&g, &w, 1, TildeVariant::Frobenius, &fast_cfg()).unwrap();
        assert!((b.value - 1.0).abs() < 1e-6, "tilde single vertex {}", b.value);
    }

    #[test]
    fn seesaw_pole_condition_enforced() {
        let g = Graph::edgeless(2).unwrap();
        let w = WeightVector::new(vec![4.0, 1.0]).unwrap();
        let cfg = SeesawCfg { eta: Some(1.5), ..fast_cfg() };
        assert!(lower_seesaw(&g, &w, 1, &cfg).is_err());
    }

    #[test]
    fn ray_sdp_complete_graph_with_clique_is_tight() {
        let d = 3;
        let g = Graph::complete(d).unwrap();
        let w = WeightVector::ones(d);
        let clique = VertexSubset::new((1..=d).collect()).unwrap();
        let b = upper_ray_sdp(&g, &w, d, Some(vec![clique]), &SolveCfg::default()).unwrap();
        assert!((b.value - 1.0).abs() < 1e-6, "ray K3 with basis identity {}", b.value);
    }

    #[test]
    fn ray_sdp_rejects_wrong_clique_size() {
        let g = Graph::complete(4).unwrap();
        let w = WeightVector::ones(4);
        let clique = VertexSubset::new(vec![1, 2]).unwrap();
        assert!(upper_ray_sdp(&g, &w, 3, Some(vec![clique]), &SolveCfg::default()).is_err());
    }

    #[test]
    fn theta_cut_hygiene() {
        let tc = ThetaCut { theta: 3.34, justified_by: Some(3.3333) };
        assert!(tc.validate().is_err());
        let ok = ThetaCut::from_verified_lower(3.33338);
        assert!((ok.theta - 3.3333).abs() < 1e-12);
        assert!(ok.validate().is_ok());
    }

    #[test]
    fn full_rank_lower_matches_theta_on_c5() {
        let g = Graph::cycle(5).unwrap();
        let w = WeightVector::ones(5);
        let solver = SolveCfg::default();
        let theta = lovasz_theta(&g, &w, &solver).unwrap();
        let lower = lower_from_theta(&g, &w, 6, &solver).unwrap();
        assert!(
            (lower.value - theta.value).abs() < 1e-4,
            "theta {} vs realization {}",
            theta.value,
            lower.value
        );
    }

    #[test]
    fn subgraph_maximization_dominates_full_graph() {
        let g = Graph::cycle(5).unwrap();
        let w = WeightVector::ones(5);
        let solver = SolveCfg::default();
        let full = lovasz_theta(&g, &w, &solver).unwrap().value;
        let rep = tilde_via_subgraphs(&g, &w, 12, |sub, wsub| {
            lovasz_theta(sub, wsub, &solver).ok().map(|mut b| {
                b.target = BoundTarget::ThetaD(99);
                b
            })
        })
        .unwrap();
        assert!(rep.value >= full - 1e-8);
    }
}
