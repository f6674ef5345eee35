//! Membership certification: decide whether a behavior `p` on graph `G` is
//! realizable in dimension `d`.
//!
//! The decision problem is equivalent to the existence of an (n+1) x (n+1)
//! Hermitian Gram matrix with pinned entries
//!
//! ```text
//!   X_0i = sqrt(p_i),   X_ii = 1,   X_ij = 0 on edges,
//!   X >= 0,  rank(X) <= d,
//! ```
//!
//! which is attacked from two sides:
//!
//! * **inner certification** — two alternating schemes (a Frobenius-nearest
//!   alternation between the pinned affine set and the rank-capped PSD cone,
//!   and a projector seesaw whose SDP step minimizes `tr(XP)`); a converged
//!   run yields vectors that are replay-verified before a verdict is issued;
//! * **outer refutation** — the symmetrized two-copy PPT feasibility system,
//!   quantified by its margin `eta_max`; a margin below `-1e-6` certifies
//!   non-membership.
//!
//! `theta_body_membership` decides the rank-free problem (membership in the
//! unrestricted theta body), which is a plain SDP feasibility question.

use crate::graph::Graph;
use crate::linalg::{vectors_from_gram, HermitianMatrix, VectorSystem, C64};
use crate::ppt::membership_system;
use crate::rng::XRng;
use crate::sdp::{
    solve, solve_feasibility_eta, BlockId, HermitianVars, Residuals, SdpProblem, SolveCfg,
    SolveStatus,
};
use crate::{tol, CtxError, Result};
use serde::Serialize;
use std::collections::BTreeMap;

/// A probability vector attached to the vertices of an exclusivity graph.
#[derive(Clone, Debug)]
pub struct Behavior {
    pub graph: Graph,
    pub p: Vec<f64>,
}

impl Behavior {
    pub fn new(graph: Graph, p: Vec<f64>) -> Result<Self> {
        if p.len() != graph.n() {
            return Err(CtxError::Behavior(format!(
                "behavior length {} does not match graph order {}",
                p.len(),
                graph.n()
            )));
        }
        if let Some(v) = p.iter().find(|v| !v.is_finite() || **v < 0.0 || **v > 1.0) {
            return Err(CtxError::Behavior(format!("probability {v} outside [0, 1]")));
        }
        Ok(Self { graph, p })
    }

    pub fn n(&self) -> usize {
        self.p.len()
    }

    pub fn sqrt_p(&self) -> Vec<f64> {
        self.p.iter().map(|v| v.sqrt()).collect()
    }
}

/// The pinned entries of the Gram candidate for a behavior: diagonal ones,
/// handle-row square roots, and edge zeros. Keys are (i, j) with i <= j over
/// indices 0..=n (0 is the handle row).
#[derive(Clone, Debug)]
pub struct PinSet {
    pub n: usize,
    entries: BTreeMap<(usize, usize), C64>,
}

impl PinSet {
    pub fn get(&self, i: usize, j: usize) -> Option<C64> {
        let key = (i.min(j), i.max(j));
        self.entries.get(&key).map(|v| if i <= j { *v } else { v.conj() })
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(usize, usize), &C64)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Upper-triangle pairs carrying no pin (the free variables of the
    /// completion problem).
    pub fn free_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..=self.n {
            for j in i..=self.n {
                if !self.entries.contains_key(&(i, j)) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Overwrites the pinned entries of `y`, leaving free entries untouched.
    pub fn overwrite(&self, y: &HermitianMatrix) -> HermitianMatrix {
        let mut x = y.clone();
        for (&(i, j), &v) in &self.entries {
            x.set_sym(i, j, v);
        }
        x
    }

    /// Maximum pin violation of a matrix.
    pub fn violation(&self, x: &HermitianMatrix) -> f64 {
        self.entries
            .iter()
            .map(|(&(i, j), &v)| (x.get(i, j) - v).norm())
            .fold(0.0, f64::max)
    }
}

/// Builds the pin map of Observation-style Gram completion for a behavior.
pub fn pins_for(b: &Behavior) -> PinSet {
    let n = b.n();
    let mut entries = BTreeMap::new();
    for i in 0..=n {
        entries.insert((i, i), C64::new(1.0, 0.0));
    }
    for (i, &pi) in b.p.iter().enumerate() {
        entries.insert((0, i + 1), C64::new(pi.sqrt(), 0.0));
    }
    for &(u, v) in b.graph.edges() {
        entries.insert((u.min(v), u.max(v)), C64::new(0.0, 0.0));
    }
    PinSet { n, entries }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum VerdictStatus {
    Inside,
    Outside,
    Inconclusive,
}

/// Certificate payload attached to a verdict.
#[derive(Clone, Debug)]
pub enum Certificate {
    /// Replay-verified realization (Inside).
    Vectors(VectorSystem),
    /// Feasibility margin and solver residuals (Outside / outer runs).
    EtaMax { eta_max: f64, residuals: Residuals },
    /// Best alternating residual across restarts (Inconclusive).
    BestResidual(f64),
}

#[derive(Clone, Debug)]
pub struct Verdict {
    pub status: VerdictStatus,
    pub method: &'static str,
    pub certificate: Certificate,
    pub iterations: usize,
    pub seed: u64,
    pub wall_ms: u64,
}

impl Verdict {
    /// Replay-verifies a vector certificate against the behavior before
    /// issuing Inside: unit norms, edge orthogonality, and probability
    /// reproduction within the certificate tolerance.
    fn verified_inside(
        b: &Behavior,
        vs: VectorSystem,
        method: &'static str,
        iterations: usize,
        seed: u64,
        wall_ms: u64,
    ) -> Result<Self> {
        vs.validate(b.graph.edges(), false)?;
        let probs = vs.probabilities();
        for (i, (&got, &want)) in probs.iter().zip(b.p.iter()).enumerate() {
            if (got - want).abs() > tol::CERT {
                return Err(CtxError::Certificate(format!(
                    "probability {} replays to {:.9} but the behavior pins {:.9}",
                    i + 1,
                    got,
                    want
                )));
            }
        }
        Ok(Self {
            status: VerdictStatus::Inside,
            method,
            certificate: Certificate::Vectors(vs),
            iterations,
            seed,
            wall_ms,
        })
    }

    pub fn eta_max(&self) -> Option<f64> {
        match &self.certificate {
            Certificate::EtaMax { eta_max, .. } => Some(*eta_max),
            _ => None,
        }
    }

    pub fn vectors(&self) -> Option<&VectorSystem> {
        match &self.certificate {
            Certificate::Vectors(vs) => Some(vs),
            _ => None,
        }
    }

    pub fn best_residual(&self) -> Option<f64> {
        match &self.certificate {
            Certificate::BestResidual(r) => Some(*r),
            _ => None,
        }
    }
}

/// Configuration shared by the membership routines.
#[derive(Clone, Debug, Serialize)]
pub struct MembershipCfg {
    pub restarts: usize,
    /// Iteration cap per restart of the Frobenius alternation.
    pub max_iters: usize,
    /// Outer-iteration cap per restart of the projector method.
    pub max_outer: usize,
    /// Residual level at which the alternation counts as converged to zero.
    pub tol_zero: f64,
    pub seed: u64,
    pub solver: SolveCfg,
}

impl Default for MembershipCfg {
    fn default() -> Self {
        Self {
            restarts: 20,
            max_iters: 4000,
            max_outer: 60,
            tol_zero: tol::ZERO,
            seed: 0,
            solver: SolveCfg::default(),
        }
    }
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
        let scale = n as f64 / tr;
        let mut z = HermitianMatrix::zeros(n);
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

/// Normalizes handle and representatives to exact unit length (zero vectors
/// are left alone), absorbing the small diagonal drift of a converged Gram.
fn unitize_system(mut vs: VectorSystem) -> VectorSystem {
    let hn = vs.handle.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if hn > 1e-12 {
        for z in &mut vs.handle {
            *z /= hn;
        }
    }
    for i in 0..vs.reps.len() {
        let nrm = vs.rep_norm(i);
        if nrm > crate::linalg::ZERO_VEC_TOL {
            for z in &mut vs.reps[i] {
                *z /= nrm;
            }
        }
    }
    vs
}

/// Inner certification by alternating Frobenius-nearest maps: overwrite the
/// pinned entries, then truncate to the nearest rank-`d` PSD matrix. The
/// residual `||X - Y||_F` is nonincreasing; convergence to zero yields a
/// vector certificate.
pub fn inner_frobenius(b: &Behavior, d: usize, cfg: &MembershipCfg) -> Result<Verdict> {
    if d == 0 {
        return Err(CtxError::Config("dimension must be at least 1".into()));
    }
    let start = std::time::Instant::now();
    let pins = pins_for(b);
    let n1 = b.n() + 1;
    let mut best_res = f64::INFINITY;
    let mut total_iters = 0usize;
    for r in 0..cfg.restarts {
        let mut rng = XRng::for_restart(cfg.seed, r as u64);
        let mut y = random_rank_d_psd(n1, d, &mut rng);
        let mut prev = f64::INFINITY;
        let mut stall = 0usize;
        let mut res = f64::INFINITY;
        for _ in 0..cfg.max_iters {
            total_iters += 1;
            let x = pins.overwrite(&y);
            y = x.psd_truncate(d)?;
            res = x.distance_frobenius(&y);
            if res < 1e-9 {
                break;
            }
            if prev - res < 1e-14 * res.max(1.0) {
                stall += 1;
                if stall > 60 {
                    break;
                }
            } else {
                stall = 0;
            }
            prev = res;
        }
        best_res = best_res.min(res);
        if res < cfg.tol_zero {
            let vs = unitize_system(vectors_from_gram(&y, d)?);
            match Verdict::verified_inside(
                b,
                vs,
                "inner-frobenius",
                total_iters,
                cfg.seed,
                start.elapsed().as_millis() as u64,
            ) {
                Ok(v) => return Ok(v),
                Err(_) => continue,
            }
        }
    }
    Ok(Verdict {
        status: VerdictStatus::Inconclusive,
        method: "inner-frobenius",
        certificate: Certificate::BestResidual(best_res),
        iterations: total_iters,
        seed: cfg.seed,
        wall_ms: start.elapsed().as_millis() as u64,
    })
}

/// Builds the SDP `min tr(X P)` over `X >= 0` with the behavior pins, as a
/// complex Hermitian block.
fn projector_step(
    pins: &PinSet,
    n1: usize,
    p_star: &HermitianMatrix,
    solver: &SolveCfg,
) -> Result<HermitianMatrix> {
    let mut prob = SdpProblem::new(0);
    let (hv, _) = HermitianVars::add_to(&mut prob, n1);
    for (&(i, j), &v) in pins.iter() {
        hv.pin(&mut prob, i, j, v);
    }
    prob.minimize(hv.trace_product_terms(p_star), 0.0);
    let sol = solve(&prob, solver)?;
    if sol.status != SolveStatus::Optimal {
        return Err(CtxError::Solver(format!(
            "projector step did not reach tolerance: residuals {:?}",
            sol.residuals
        )));
    }
    Ok(hv.extract(&sol.x))
}

/// Inner certification by the projector seesaw: alternate the SDP step
/// `min tr(X P)` with the analytic projector update (the projector onto the
/// bottom `n+1-d` eigenvectors of the current `X`). `tr(XP) -> 0` certifies
/// a rank-`d` completion.
pub fn inner_projector(b: &Behavior, d: usize, cfg: &MembershipCfg) -> Result<Verdict> {
    if d == 0 {
        return Err(CtxError::Config("dimension must be at least 1".into()));
    }
    let start = std::time::Instant::now();
    let n1 = b.n() + 1;
    if d >= n1 {
        // Rank cap inactive: defer to the rank-free SDP feasibility test.
        let mut v = theta_body_membership(b, cfg)?;
        v.method = "inner-projector";
        return Ok(v);
    }
    let pins = pins_for(b);
    let corank = n1 - d;
    let mut best_tail = f64::INFINITY;
    let mut total_outer = 0usize;
    for r in 0..cfg.restarts {
        let mut rng = XRng::for_restart(cfg.seed.wrapping_add(0x5ee5aa), r as u64);
        let frame = rng.orthonormal_frame(n1, corank);
        let mut p_star = HermitianMatrix::zeros(n1);
        for col in &frame {
            for i in 0..n1 {
                for j in i..n1 {
                    let cur = p_star.get(i, j);
                    p_star.set_sym(i, j, cur + col[i] * col[j].conj());
                }
            }
        }
        let mut tail = f64::INFINITY;
        let mut x_star = HermitianMatrix::zeros(n1);
        let mut prev_tail = f64::INFINITY;
        for _ in 0..cfg.max_outer {
            total_outer += 1;
            x_star = projector_step(&pins, n1, &p_star, &cfg.solver)?;
            let (vals, vecs) = x_star.eig()?;
            tail = vals[d..].iter().map(|l| l.max(0.0)).sum::<f64>();
            if tail < cfg.tol_zero {
                break;
            }
            let pairs: Vec<(f64, &Vec<C64>)> = vecs[d..].iter().map(|v| (1.0, v)).collect();
            p_star = hermitian_from_pairs(n1, &pairs);
            if prev_tail - tail < 1e-12 {
                break;
            }
            prev_tail = tail;
        }
        best_tail = best_tail.min(tail);
        if tail < cfg.tol_zero {
            let xd = x_star.psd_truncate(d)?;
            let vs = unitize_system(vectors_from_gram(&xd, d)?);
            match Verdict::verified_inside(
                b,
                vs,
                "inner-projector",
                total_outer,
                cfg.seed,
                start.elapsed().as_millis() as u64,
            ) {
                Ok(v) => return Ok(v),
                Err(_) => continue,
            }
        }
    }
    Ok(Verdict {
        status: VerdictStatus::Inconclusive,
        method: "inner-projector",
        certificate: Certificate::BestResidual(best_tail),
        iterations: total_outer,
        seed: cfg.seed,
        wall_ms: start.elapsed().as_millis() as u64,
    })
}

fn hermitian_from_pairs(dim: usize, pairs: &[(f64, &Vec<C64>)]) -> HermitianMatrix {
    let mut m = HermitianMatrix::zeros(dim);
    for (w, v) in pairs {
        for i in 0..dim {
            for j in i..dim {
                let cur = m.get(i, j);
                m.set_sym(i, j, cur + w * v[i] * v[j].conj());
            }
        }
    }
    m
}

/// Outer refutation through the symmetrized two-copy PPT system. A margin
/// `eta_max < -1e-6` certifies that no rank-`d` completion exists; the PPT
/// level can never certify membership, so the alternative is Inconclusive.
pub fn outer_ppt(b: &Behavior, d: usize, cfg: &MembershipCfg) -> Result<Verdict> {
    if d == 0 {
        return Err(CtxError::Config("dimension must be at least 1".into()));
    }
    let start = std::time::Instant::now();
    let asm = membership_system(&b.graph, &b.sqrt_p(), d);
    let (eta_max, sol) = solve_feasibility_eta(&asm.problem, &asm.cone_blocks, &cfg.solver)?;
    let status = if sol.status == SolveStatus::InfeasibleCertified {
        VerdictStatus::Outside
    } else {
        VerdictStatus::Inconclusive
    };
    Ok(Verdict {
        status,
        method: "outer-ppt",
        certificate: Certificate::EtaMax { eta_max, residuals: sol.residuals },
        iterations: sol.iterations,
        seed: cfg.seed,
        wall_ms: start.elapsed().as_millis() as u64,
    })
}

/// Rank-free membership in the theta body: feasibility of `{X >= 0, pins}`
/// via the eta margin. Inside comes with unrestricted-dimension vectors
/// extracted from the feasible completion.
pub fn theta_body_membership(b: &Behavior, cfg: &MembershipCfg) -> Result<Verdict> {
    let start = std::time::Instant::now();
    let n1 = b.n() + 1;
    let (mut prob, vars) = SdpProblem::with_variable_blocks(&[n1]);
    let v = vars[0];
    let pins = pins_for(b);
    for (&(i, j), &val) in pins.iter() {
        prob.add_eq(vec![(v.var(i, j), 1.0)], val.re);
    }
    let (eta_max, sol) = solve_feasibility_eta(&prob, &[BlockId(0)], &cfg.solver)?;
    let wall_ms = start.elapsed().as_millis() as u64;
    if sol.feasibility_converged(cfg.solver.tol) && eta_max >= -tol::MARGIN {
        // Rebuild X from the variables and extract vectors of its rank.
        let mut x = HermitianMatrix::zeros(n1);
        for i in 0..n1 {
            for j in i..n1 {
                x.set_sym(i, j, C64::new(sol.x[v.var(i, j)], 0.0));
            }
        }
        let x = x.psd_project()?;
        let rank = x.numerical_rank()?.max(1);
        if let Ok(vs) = vectors_from_gram(&x, rank) {
            if let Ok(verdict) = Verdict::verified_inside(
                b,
                unitize_system(vs),
                "theta-body",
                sol.iterations,
                cfg.seed,
                wall_ms,
            ) {
                return Ok(verdict);
            }
        }
        // Feasible but extraction failed replay: report the margin honestly.
        return Ok(Verdict {
            status: VerdictStatus::Inconclusive,
            method: "theta-body",
            certificate: Certificate::EtaMax { eta_max, residuals: sol.residuals },
            iterations: sol.iterations,
            seed: cfg.seed,
            wall_ms,
        });
    }
    let status = if sol.status == SolveStatus::InfeasibleCertified {
        VerdictStatus::Outside
    } else {
        VerdictStatus::Inconclusive
    };
    Ok(Verdict {
        status,
        method: "theta-body",
        certificate: Certificate::EtaMax { eta_max, residuals: sol.residuals },
        iterations: sol.iterations,
        seed: cfg.seed,
        wall_ms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_vertex_behavior(p: f64) -> Behavior {
        Behavior::new(Graph::edgeless(1).unwrap(), vec![p]).unwrap()
    }

    #[test]
    fn behavior_validation() {
        assert!(Behavior::new(Graph::edgeless(2).unwrap(), vec![0.5]).is_err());
        assert!(Behavior::new(Graph::edgeless(1).unwrap(), vec![1.5]).is_err());
    }

    #[test]
    fn pins_cover_expected_entries() {
        let g = Graph::new(2, &[(1, 2)]).unwrap();
        let b = Behavior::new(g, vec![0.25, 1.0]).unwrap();
        let pins = pins_for(&b);
        assert_eq!(pins.get(0, 0).unwrap().re, 1.0);
        assert_eq!(pins.get(1, 1).unwrap().re, 1.0);
        assert_eq!(pins.get(0, 1).unwrap().re, 0.5);
        assert_eq!(pins.get(0, 2).unwrap().re, 1.0);
        assert_eq!(pins.get(1, 2).unwrap().re, 0.0);
        assert_eq!(pins.get(2, 1).unwrap().re, 0.0);
        // free pairs on a 3x3 candidate: none besides the pinned ones here.
        assert!(pins.free_pairs().is_empty());
        assert_eq!(pins.len(), 6);
    }

    #[test]
    fn pins_single_vertex_unit() {
        let b = single_vertex_behavior(1.0);
        let pins = pins_for(&b);
        assert_eq!(pins.len(), 3);
        assert_eq!(pins.get(0, 1).unwrap().re, 1.0);
    }

    #[test]
    fn inner_frobenius_single_vertex() {
        let b = single_vertex_behavior(1.0);
        let cfg = MembershipCfg { restarts: 3, ..Default::default() };
        let v = inner_frobenius(&b, 1, &cfg).unwrap();
        assert_eq!(v.status, VerdictStatus::Inside);
        let vs = v.vectors().unwrap();
        // phi = psi_1 up to phase
        assert!((vs.probabilities()[0] - 1.0).abs() < 1e-7);
    }

    #[test]
    fn inner_projector_single_vertex() {
        let b = single_vertex_behavior(1.0);
        let cfg = MembershipCfg { restarts: 2, ..Default::default() };
        let v = inner_projector(&b, 1, &cfg).unwrap();
        assert_eq!(v.status, VerdictStatus::Inside);
    }

    #[test]
    fn triangle_uniform_half_is_outside_theta_body() {
        // Sum of probabilities on a clique cannot exceed 1.
        let g = Graph::complete(3).unwrap();
        let b = Behavior::new(g, vec![0.5, 0.5, 0.5]).unwrap();
        let cfg = MembershipCfg::default();
        let v = theta_body_membership(&b, &cfg).unwrap();
        assert_eq!(v.status, VerdictStatus::Outside);
        assert!(v.eta_max().unwrap() < -tol::MARGIN);
    }

    #[test]
    fn triangle_basis_is_inside_theta_body() {
        let g = Graph::complete(3).unwrap();
        let b = Behavior::new(g, vec![0.5, 0.3, 0.2]).unwrap();
        let cfg = MembershipCfg::default();
        let v = theta_body_membership(&b, &cfg).unwrap();
        assert_eq!(v.status, VerdictStatus::Inside);
        let vs = v.vectors().unwrap();
        let probs = vs.probabilities();
        for (got, want) in probs.iter().zip(b.p.iter()) {
            assert!((got - want).abs() < 1e-6);
        }
    }

    #[test]
    fn outer_ppt_accepts_realizable_triangle_behavior() {
        let g = Graph::complete(3).unwrap();
        let b = Behavior::new(g, vec![0.5, 0.3, 0.2]).unwrap();
        let cfg = MembershipCfg::default();
        let v = outer_ppt(&b, 3, &cfg).unwrap();
        assert_eq!(v.status, VerdictStatus::Inconclusive);
        assert!(v.eta_max().unwrap() > -tol::MARGIN);
    }

    #[test]
    fn outer_ppt_refutes_clique_overflow() {
        let g = Graph::complete(3).unwrap();
        let b = Behavior::new(g, vec![0.9, 0.9, 0.9]).unwrap();
        let cfg = MembershipCfg::default();
        let v = outer_ppt(&b, 3, &cfg).unwrap();
        assert_eq!(v.status, VerdictStatus::Outside);
        assert!(v.eta_max().unwrap() < -tol::MARGIN);
    }

    #[test]
    fn planted_membership_certified_by_both_inner_methods() {
        // Plant: random orthogonal representation of a path graph in d = 2.
        let g = Graph::new(3, &[(1, 2), (2, 3)]).unwrap();
        let mut rng = XRng::new(77);
        let d = 2;
        let psi1 = rng.orthonormal_frame(d, 1).remove(0);
        // psi2 orthogonal to psi1, psi3 orthogonal to psi2.
        let psi2 = orthogonal_complement_vec(&psi1, &mut rng);
        let psi3 = orthogonal_complement_vec(&psi2, &mut rng);
        let phi = rng.orthonormal_frame(d, 1).remove(0);
        let vs = VectorSystem::new(d, phi, vec![psi1, psi2, psi3]);
        vs.validate(g.edges(), false).unwrap();
        let b = Behavior::new(g.clone(), vs.probabilities()).unwrap();
        let cfg = MembershipCfg { restarts: 10, ..Default::default() };
        let vf = inner_frobenius(&b, d, &cfg).unwrap();
        assert_eq!(vf.status, VerdictStatus::Inside);
        let vp = inner_projector(&b, d, &cfg).unwrap();
        assert_eq!(vp.status, VerdictStatus::Inside);
    }

    fn orthogonal_complement_vec(v: &[C64], rng: &mut XRng) -> Vec<C64> {
        // In C^2 the orthogonal complement of a unit vector is a line.
        let _ = rng;
        vec![-v[1].conj(), v[0].conj()]
    }
}
