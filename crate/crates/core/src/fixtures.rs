//! Built-in fixtures: the nine-vertex graph `gkk`, its four reference
//! behaviors, and the analytic rank-3 witness family for the relaxed bound.
//!
//! The `gkk` graph is a "bug" graph (two triangles {1,2,3} and {4,7,8}
//! bridged by the edge {1,4} and the paths 2-5-7 and 3-6-8) with a ninth
//! vertex attached to the two path midpoints 5 and 6. The fixture is pinned
//! by combinatorial invariants rather than an external edge list:
//!
//! * independence number 3, attained by {1, 6, 7};
//! * exactly two 3-cliques, {1, 2, 3} and {4, 7, 8};
//! * the witness family below satisfies every edge orthogonality, and its
//!   overlap-scaled Gram matrix reaches sum 3.3380 at `a = 0.5121`.
//!
//! `validate_gkk` asserts the combinatorial pins; the numerical pins are
//! covered by the test suites.

use crate::graph::{Graph, VertexSubset};
use crate::linalg::{HermitianMatrix, VectorSystem, C64};
use crate::membership::Behavior;
use crate::{CtxError, Result};

/// Edge list of the built-in nine-vertex graph.
pub const GKK_EDGES: [(usize, usize); 13] = [
    (1, 2),
    (1, 3),
    (1, 4),
    (2, 3),
    (2, 5),
    (3, 6),
    (4, 7),
    (4, 8),
    (5, 7),
    (5, 9),
    (6, 8),
    (6, 9),
    (7, 8),
];

/// The built-in nine-vertex exclusivity graph.
pub fn gkk() -> Graph {
    Graph::new(9, &GKK_EDGES).expect("builtin graph is valid")
}

/// Checks the combinatorial pins of the `gkk` fixture.
pub fn validate_gkk(g: &Graph) -> Result<()> {
    if g.independence_number() != 3 {
        return Err(CtxError::Graph("gkk: independence number must be 3".into()));
    }
    let witness = VertexSubset::new(vec![1, 6, 7])?;
    if !g.is_independent_set(&witness) {
        return Err(CtxError::Graph("gkk: {1,6,7} must be independent".into()));
    }
    let triangles = g.enumerate_cliques(3);
    let expect: Vec<Vec<usize>> = vec![vec![1, 2, 3], vec![4, 7, 8]];
    let got: Vec<Vec<usize>> = triangles.iter().map(|t| t.members().to_vec()).collect();
    if got != expect {
        return Err(CtxError::Graph(format!("gkk: 3-cliques {got:?} differ from {expect:?}")));
    }
    Ok(())
}

/// Uniform behavior: every probability 1/3.
pub fn p1() -> Behavior {
    Behavior::new(gkk(), vec![1.0 / 3.0; 9]).unwrap()
}

/// (1/2, 1/4, 1/4, 1/2, 0, 0, 1/4, 1/4, 1).
pub fn p2() -> Behavior {
    Behavior::new(
        gkk(),
        vec![0.5, 0.25, 0.25, 0.5, 0.0, 0.0, 0.25, 0.25, 1.0],
    )
    .unwrap()
}

/// Midpoint of p1 and p2: (5/12, 7/24, 7/24, 5/12, 1/6, 1/6, 7/24, 7/24, 2/3).
pub fn p3() -> Behavior {
    let a = p1().p;
    let b = p2().p;
    let mid: Vec<f64> = a.iter().zip(b.iter()).map(|(x, y)| 0.5 * (x + y)).collect();
    Behavior::new(gkk(), mid).unwrap()
}

/// (1/3, 1/3, 1/3, 0, 2/3, 1/3, 0, 0, 1/3).
pub fn p4() -> Behavior {
    let t = 1.0 / 3.0;
    Behavior::new(gkk(), vec![t, t, t, 0.0, 2.0 * t, t, 0.0, 0.0, t]).unwrap()
}

pub fn behavior_by_name(name: &str) -> Option<Behavior> {
    match name {
        "p1" => Some(p1()),
        "p2" => Some(p2()),
        "p3" => Some(p3()),
        "p4" => Some(p4()),
        _ => None,
    }
}

/// Parameter value at which the witness family attains 3.3380.
pub const WITNESS_A: f64 = 0.5121;

/// Analytic rank-3 witness family for the relaxed bound on `gkk`.
///
/// Nine unit vectors in C^3 (vertex 8 carries the zero vector) satisfying
/// every edge orthogonality of `gkk`; the handle is the top eigenvector of
/// `sum_i |psi_i><psi_i|`. The overlap-scaled Gram matrix of the system is a
/// rank-3 feasible point of the relaxed ("tilde") program, with objective
/// `sum_i X_ii = 3.3380` at `a = 0.5121`.
pub fn tilde_witness_vectors(a: f64) -> Result<VectorSystem> {
    if !(0.0..1.0).contains(&a) || a == 0.0 {
        return Err(CtxError::Config(format!("witness parameter a={a} outside (0, 1)")));
    }
    let b = (1.0 - a * a).sqrt();
    let s = (1.0 + a * a).sqrt();
    let r2 = std::f64::consts::FRAC_1_SQRT_2;
    let re = |v: [f64; 3]| -> Vec<C64> { v.iter().map(|&x| C64::new(x, 0.0)).collect() };
    let reps: Vec<Vec<C64>> = vec![
        re([1.0, 0.0, 0.0]),
        re([0.0, 1.0, 0.0]),
        re([0.0, 0.0, 1.0]),
        re([0.0, a, b]),
        re([r2, 0.0, r2]),
        re([b, a, 0.0]),
        re([a / s, b / s, -a / s]),
        re([0.0, 0.0, 0.0]),
        re([a / s, -b / s, -a / s]),
    ];
    // Handle = top eigenvector of the frame operator sum psi psi^†.
    let mut frame = HermitianMatrix::zeros(3);
    for v in &reps {
        for i in 0..3 {
            for j in i..3 {
                let cur = frame.get(i, j);
                frame.set_sym(i, j, cur + v[i] * v[j].conj());
            }
        }
    }
    let (_, vecs) = frame.eig()?;
    let handle = vecs[0].clone();
    Ok(VectorSystem::new(3, handle, reps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::overlap_scaled_gram;

    #[test]
    fn gkk_pins_hold() {
        let g = gkk();
        validate_gkk(&g).unwrap();
        assert_eq!(g.n(), 9);
        assert_eq!(g.edges().len(), 13);
    }

    #[test]
    fn behaviors_are_consistent() {
        let (a, b, c) = (p1(), p2(), p3());
        for i in 0..9 {
            assert!((c.p[i] - 0.5 * (a.p[i] + b.p[i])).abs() < 1e-15);
        }
        assert_eq!(p4().p[4], 2.0 / 3.0);
    }

    #[test]
    fn witness_satisfies_edges_and_value() {
        let vs = tilde_witness_vectors(WITNESS_A).unwrap();
        vs.validate(gkk().edges(), true).unwrap();
        let x = overlap_scaled_gram(&vs);
        // Constraints of the relaxed program: X_00 = 1, X_ii = X_0i, edge zeros.
        assert!((x.get(0, 0).re - 1.0).abs() < 1e-12);
        for i in 1..=9 {
            assert!((x.get(i, i).re - x.get(0, i).re).abs() < 1e-12);
            assert!(x.get(0, i).im.abs() < 1e-12);
        }
        for &(u, v) in gkk().edges() {
            assert!(x.get(u, v).norm() < 1e-12, "edge ({u},{v}) entry nonzero");
        }
        let total: f64 = (1..=9).map(|i| x.get(i, i).re).sum();
        assert!((total - 3.3380).abs() < 1e-4, "witness value {total}");
    }

    #[test]
    fn witness_value_is_stationary_near_a() {
        // The reported optimum should not improve by more than rounding noise
        // in a small neighborhood of a = 0.5121.
        let base: f64 = {
            let x = overlap_scaled_gram(&tilde_witness_vectors(WITNESS_A).unwrap());
            (1..=9).map(|i| x.get(i, i).re).sum()
        };
        for da in [-0.01, 0.01] {
            let x = overlap_scaled_gram(&tilde_witness_vectors(WITNESS_A + da).unwrap());
            let v: f64 = (1..=9).map(|i| x.get(i, i).re).sum();
            assert!(v <= base + 2e-4, "a+{da}: {v} vs {base}");
        }
    }
}
