//! Constant interaction coefficients `c_ij`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InteractionMatrix {
    c: [[f64; 3]; 3],
    c_hat: f64,
}

impl Default for InteractionMatrix {
    /// `c = I − (1/3)·ones` with coercivity constant `2/3`.
    fn default() -> Self {
        let mut c = [[-1.0 / 3.0; 3]; 3];
        for (i, row) in c.iter_mut().enumerate() {
            row[i] += 1.0;
        }
        Self { c, c_hat: 2.0 / 3.0 }
    }
}

impl InteractionMatrix {
    /// Accepts any finite matrix; the structural conditions are checked by
    /// [`InteractionMatrix::row_col_defect`] and [`InteractionMatrix::coercivity_gap`].
    pub fn new(c: [[f64; 3]; 3], c_hat: f64) -> Result<Self> {
        if !c.iter().flatten().all(|v| v.is_finite()) {
            return Err(Error::param("c", "entries must be finite"));
        }
        if !(c_hat > 0.0 && c_hat.is_finite()) {
            return Err(Error::param("c_hat", format!("must be positive, got {c_hat}")));
        }
        Ok(Self { c, c_hat })
    }

    pub fn c(&self) -> &[[f64; 3]; 3] {
        &self.c
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.c[i][j]
    }

    pub fn c_hat(&self) -> f64 {
        self.c_hat
    }

    /// Largest absolute row or column sum.
    pub fn row_col_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..3 {
            let row: f64 = self.c[i].iter().sum();
            let col: f64 = (0..3).map(|j| self.c[j][i]).sum();
            worst = worst.max(row.abs()).max(col.abs());
        }
        worst
    }

    /// `−Σ_{i≠j} c_ij|ξ_i − ξ_j|² − ĉ(|ξ1 − ξ0|² + |ξ2 − ξ0|²)` for one triple.
    pub fn coercivity_gap(&self, xi: &[[f64; 3]; 3]) -> f64 {
        let d2 = |a: &[f64; 3], b: &[f64; 3]| -> f64 {
            a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
        };
        let mut lhs = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    lhs -= self.c[i][j] * d2(&xi[i], &xi[j]);
                }
            }
        }
        lhs - self.c_hat * (d2(&xi[1], &xi[0]) + d2(&xi[2], &xi[0]))
    }

    /// Smallest coercivity gap over `samples` random triples in `[-1, 1]^9`.
    pub fn sampled_coercivity(&self, samples: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..samples)
            .map(|_| {
                let mut xi = [[0.0; 3]; 3];
                for v in xi.iter_mut().flatten() {
                    *v = rng.gen_range(-1.0..=1.0);
                }
                self.coercivity_gap(&xi)
            })
            .fold(f64::INFINITY, f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_balanced_and_coercive() {
        let c = InteractionMatrix::default();
        assert!(c.row_col_defect() < 1e-15);
        assert!(c.sampled_coercivity(1000, 7) >= -1e-10);
        // closed form: the gap equals (2/3)|ξ1 − ξ2|²
        let xi = [[0.0; 3], [1.0, 0.0, 0.0], [0.0, 2.0, 0.0]];
        assert!((c.coercivity_gap(&xi) - 2.0 / 3.0 * 5.0).abs() < 1e-14);
    }

    #[test]
    fn too_large_c_hat_is_detected() {
        let c = InteractionMatrix::new(*InteractionMatrix::default().c(), 1.0).unwrap();
        assert!(c.sampled_coercivity(1000, 7) < 0.0);
    }

    #[test]
    fn rejects_bad_entries() {
        assert!(InteractionMatrix::new([[f64::NAN; 3]; 3], 1.0).is_err());
        assert!(InteractionMatrix::new([[0.0; 3]; 3], 0.0).is_err());
    }
}
