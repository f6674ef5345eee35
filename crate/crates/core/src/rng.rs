//! Small deterministic random number generator for seeded restarts.
//!
//! Restart policies must produce bit-identical streams across platforms and
//! runs, so we use a fixed splitmix64 core instead of an external generator.

use crate::linalg::C64;

/// splitmix64 generator with Box-Muller normal sampling.
#[derive(Clone, Debug)]
pub struct XRng {
    state: u64,
    cached_normal: Option<f64>,
}

impl XRng {
    pub fn new(seed: u64) -> Self {
        Self { state: seed, cached_normal: None }
    }

    /// Derives an independent stream for restart `index` of a seeded run.
    pub fn for_restart(seed: u64, index: u64) -> Self {
        let mut base = Self::new(seed ^ 0x9e37_79b9_7f4a_7c15);
        for _ in 0..4 {
            base.next_u64();
        }
        Self::new(base.next_u64().wrapping_add(index.wrapping_mul(0xbf58_476d_1ce4_e5b9)))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn next_usize(&mut self, bound: usize) -> usize {
        (self.next_f64() * bound as f64) as usize % bound.max(1)
    }

    /// Standard normal via Box-Muller.
    pub fn next_normal(&mut self) -> f64 {
        if let Some(v) = self.cached_normal.take() {
            return v;
        }
        let mut u1 = self.next_f64();
        if u1 < 1e-300 {
            u1 = 1e-300;
        }
        let u2 = self.next_f64();
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (2.0 * std::f64::consts::PI * u2).sin_cos();
        self.cached_normal = Some(r * s);
        r * c
    }

    /// Complex standard normal (real and imaginary parts each N(0,1)).
    pub fn next_cnormal(&mut self) -> C64 {
        C64::new(self.next_normal(), self.next_normal())
    }

    pub fn normal_cvec(&mut self, len: usize) -> Vec<C64> {
        (0..len).map(|_| self.next_cnormal()).collect()
    }

    /// Columns of a Haar-ish random orthonormal frame in C^dim, built by
    /// Gram-Schmidt on complex Gaussian vectors.
    pub fn orthonormal_frame(&mut self, dim: usize, cols: usize) -> Vec<Vec<C64>> {
        assert!(cols <= dim);
        let mut frame: Vec<Vec<C64>> = Vec::with_capacity(cols);
        while frame.len() < cols {
            let mut v = self.normal_cvec(dim);
            for q in &frame {
                let ip: C64 = q.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
                for (vi, qi) in v.iter_mut().zip(q.iter()) {
                    *vi -= ip * qi;
                }
            }
            let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm > 1e-8 {
                for z in &mut v {
                    *z /= norm;
                }
                frame.push(v);
            }
        }
        frame
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_streams() {
        let mut a = XRng::new(7);
        let mut b = XRng::new(7);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn normals_have_sane_moments() {
        let mut r = XRng::new(42);
        let n = 20000;
        let (mut s1, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let x = r.next_normal();
            s1 += x;
            s2 += x * x;
        }
        let mean = s1 / n as f64;
        let var = s2 / n as f64 - mean * mean;
        assert!(mean.abs() < 0.05, "mean {mean}");
        assert!((var - 1.0).abs() < 0.1, "var {var}");
    }

    #[test]
    fn frames_are_orthonormal() {
        let mut r = XRng::new(3);
        let f = r.orthonormal_frame(5, 3);
        for i in 0..3 {
            for j in 0..3 {
                let ip: C64 = f[i].iter().zip(f[j].iter()).map(|(a, b)| a.conj() * b).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((ip - want).norm() < 1e-12);
            }
        }
    }
}
