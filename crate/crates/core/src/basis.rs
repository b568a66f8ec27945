//! Neumann-Laplacian cosine eigenbasis on the unit interval or unit square.
//!
//! Fields live either as modal coefficients against the orthonormal family
//! `e_0 = 1`, `e_k(x) = √2 cos(kπx)` (tensor products in 2D), or as values
//! on `N` midpoint nodes `x_j = (j + 1/2)/N` per axis. Midpoint quadrature
//! integrates products of modes `k, l < N` exactly, so the discrete family
//! is orthonormal and the transforms below are exact on the span.

use std::f64::consts::{PI, SQRT_2};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dim {
    One,
    Two,
}

impl Dim {
    pub fn as_usize(self) -> usize {
        match self {
            Dim::One => 1,
            Dim::Two => 2,
        }
    }

    pub fn from_usize(d: usize) -> Result<Self> {
        match d {
            1 => Ok(Dim::One),
            2 => Ok(Dim::Two),
            _ => Err(Error::param("dim", format!("must be 1 or 2, got {d}"))),
        }
    }
}

/// Truncation and quadrature sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BasisSpec {
    pub dim: Dim,
    /// Highest retained mode index `m` per axis.
    pub modes: usize,
    /// Quadrature nodes per axis.
    pub grid_n: usize,
}

impl BasisSpec {
    pub fn new(dim: Dim, modes: usize, grid_n: usize) -> Result<Self> {
        let spec = Self { dim, modes, grid_n };
        spec.check()?;
        Ok(spec)
    }

    /// Smallest dealiased grid for `modes`.
    pub fn min_grid(modes: usize) -> usize {
        (3 * (modes + 1)).div_ceil(2)
    }

    pub fn check(&self) -> Result<()> {
        if self.modes < 1 {
            return Err(Error::param("modes", "need m >= 1"));
        }
        if self.grid_n < Self::min_grid(self.modes) {
            return Err(Error::param(
                "grid_n",
                format!(
                    "N = {} violates the 3/2 dealiasing bound N >= {} for m = {}",
                    self.grid_n,
                    Self::min_grid(self.modes),
                    self.modes
                ),
            ));
        }
        Ok(())
    }

    pub fn modes_per_axis(&self) -> usize {
        self.modes + 1
    }

    pub fn n_modes(&self) -> usize {
        self.modes_per_axis().pow(self.dim.as_usize() as u32)
    }

    pub fn n_nodes(&self) -> usize {
        self.grid_n.pow(self.dim.as_usize() as u32)
    }
}

/// Modal coefficients; mode 0 carries the mean.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalField(pub Vec<f64>);

/// Values at the quadrature nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField(pub Vec<f64>);

impl ModalField {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Mean over the unit domain (`e_0 ≡ 1`).
    pub fn mean(&self) -> f64 {
        self.0[0]
    }

    pub fn dot(&self, other: &ModalField) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl GridField {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

/// Precomputed basis tables for one [`BasisSpec`].
#[derive(Debug, Clone)]
pub struct Basis {
    spec: BasisSpec,
    /// `table[j * (m+1) + k] = e_k(x_j)` on one axis.
    table: Vec<f64>,
    nodes_1d: Vec<f64>,
    eigenvalues: Vec<f64>,
    /// Boundary quadrature: (weight, mode values) per boundary node.
    boundary: Vec<(f64, Vec<f64>)>,
}

/// Axis eigenfunction `e_k` at `x` on `[0, 1]`.
pub fn axis_mode(k: usize, x: f64) -> f64 {
    if k == 0 {
        1.0
    } else {
        SQRT_2 * (k as f64 * PI * x).cos()
    }
}

impl Basis {
    pub fn new(spec: BasisSpec) -> Result<Self> {
        spec.check()?;
        let n = spec.grid_n;
        let mp = spec.modes_per_axis();
        let nodes_1d: Vec<f64> = (0..n).map(|j| (j as f64 + 0.5) / n as f64).collect();
        let mut table = Vec::with_capacity(n * mp);
        for &x in &nodes_1d {
            table.extend((0..mp).map(|k| axis_mode(k, x)));
        }
        let lam1: Vec<f64> = (0..mp).map(|k| (k as f64 * PI).powi(2)).collect();
        let eigenvalues = match spec.dim {
            Dim::One => lam1,
            Dim::Two => {
                let mut v = Vec::with_capacity(mp * mp);
                for &a in &lam1 {
                    v.extend(lam1.iter().map(|&b| a + b));
                }
                v
            }
        };
        let boundary = match spec.dim {
            // Counting measure at the two endpoints.
            Dim::One => [0.0, 1.0]
                .iter()
                .map(|&x| (1.0, (0..mp).map(|k| axis_mode(k, x)).collect()))
                .collect(),
            Dim::Two => {
                let w = 1.0 / n as f64;
                let mut b = Vec::with_capacity(4 * n);
                for &fixed in &[0.0, 1.0] {
                    for &s in &nodes_1d {
                        for (x, y) in [(fixed, s), (s, fixed)] {
                            let mut vals = Vec::with_capacity(mp * mp);
                            for k1 in 0..mp {
                                let ex = axis_mode(k1, x);
                                vals.extend((0..mp).map(|k2| ex * axis_mode(k2, y)));
                            }
                            b.push((w, vals));
                        }
                    }
                }
                b
            }
        };
        Ok(Self {
            spec,
            table,
            nodes_1d,
            eigenvalues,
            boundary,
        })
    }

    pub fn spec(&self) -> &BasisSpec {
        &self.spec
    }

    pub fn n_modes(&self) -> usize {
        self.spec.n_modes()
    }

    pub fn n_nodes(&self) -> usize {
        self.spec.n_nodes()
    }

    /// Eigenvalues `λ_k` of `−Δ` in flattened mode order.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Node coordinates along one axis.
    pub fn axis_nodes(&self) -> &[f64] {
        &self.nodes_1d
    }

    /// Quadrature weight of every node (cell volume).
    pub fn node_weight(&self) -> f64 {
        1.0 / self.n_nodes() as f64
    }

    /// Node coordinates in flattened order (`x` slow, `y` fast in 2D).
    pub fn node_coords(&self) -> Vec<Vec<f64>> {
        match self.spec.dim {
            Dim::One => self.nodes_1d.iter().map(|&x| vec![x]).collect(),
            Dim::Two => {
                let mut v = Vec::with_capacity(self.n_nodes());
                for &x in &self.nodes_1d {
                    for &y in &self.nodes_1d {
                        v.push(vec![x, y]);
                    }
                }
                v
            }
        }
    }

    pub fn number_of_boundary_nodes(&self) -> usize {
        self.boundary.len()
    }

    fn check_modal(&self, a: &ModalField) -> Result<()> {
        if a.len() != self.n_modes() {
            return Err(Error::SizeMismatch {
                expected: self.n_modes(),
                found: a.len(),
            });
        }
        Ok(())
    }

    fn check_grid(&self, g: &GridField) -> Result<()> {
        if g.len() != self.n_nodes() {
            return Err(Error::SizeMismatch {
                expected: self.n_nodes(),
                found: g.len(),
            });
        }
        Ok(())
    }

    /// Midpoint-quadrature projection `P_m` of grid values onto the modes.
    pub fn forward(&self, g: &GridField) -> Result<ModalField> {
        self.check_grid(g)?;
        let n = self.spec.grid_n;
        let mp = self.spec.modes_per_axis();
        let w = 1.0 / n as f64;
        let pass = |src: &[f64], out: &mut [f64]| {
            // out[k] = w Σ_j table[j,k] src[j]
            out.iter_mut().for_each(|v| *v = 0.0);
            for (j, &s) in src.iter().enumerate() {
                let row = &self.table[j * mp..(j + 1) * mp];
                for (o, &t) in out.iter_mut().zip(row) {
                    *o += t * s;
                }
            }
            out.iter_mut().for_each(|v| *v *= w);
        };
        match self.spec.dim {
            Dim::One => {
                let mut out = vec![0.0; mp];
                pass(&g.0, &mut out);
                Ok(ModalField(out))
            }
            Dim::Two => {
                // y-pass per x row, then x-pass per y mode.
                let mut partial = vec![0.0; n * mp];
                for j1 in 0..n {
                    pass(&g.0[j1 * n..(j1 + 1) * n], &mut partial[j1 * mp..(j1 + 1) * mp]);
                }
                let mut out = vec![0.0; mp * mp];
                let mut col = vec![0.0; n];
                let mut res = vec![0.0; mp];
                for k2 in 0..mp {
                    for j1 in 0..n {
                        col[j1] = partial[j1 * mp + k2];
                    }
                    pass(&col, &mut res);
                    for k1 in 0..mp {
                        out[k1 * mp + k2] = res[k1];
                    }
                }
                Ok(ModalField(out))
            }
        }
    }

    /// Pointwise synthesis `Σ a_k e_k(x_j)`.
    pub fn inverse(&self, a: &ModalField) -> Result<GridField> {
        self.check_modal(a)?;
        let n = self.spec.grid_n;
        let mp = self.spec.modes_per_axis();
        let pass = |src: &[f64], out: &mut [f64]| {
            for (j, o) in out.iter_mut().enumerate() {
                let row = &self.table[j * mp..(j + 1) * mp];
                *o = row.iter().zip(src).map(|(t, s)| t * s).sum();
            }
        };
        match self.spec.dim {
            Dim::One => {
                let mut out = vec![0.0; n];
                pass(&a.0, &mut out);
                Ok(GridField(out))
            }
            Dim::Two => {
                // x-pass per y mode, then y-pass per x node.
                let mut partial = vec![0.0; n * mp];
                let mut col = vec![0.0; mp];
                let mut res = vec![0.0; n];
                for k2 in 0..mp {
                    for k1 in 0..mp {
                        col[k1] = a.0[k1 * mp + k2];
                    }
                    pass(&col, &mut res);
                    for j1 in 0..n {
                        partial[j1 * mp + k2] = res[j1];
                    }
                }
                let mut out = vec![0.0; n * n];
                for j1 in 0..n {
                    pass(&partial[j1 * mp..(j1 + 1) * mp], &mut out[j1 * n..(j1 + 1) * n]);
                }
                Ok(GridField(out))
            }
        }
    }

    /// Modal Laplacian: coefficient `k` scaled by `−λ_k`.
    pub fn laplacian_modal(&self, a: &ModalField) -> ModalField {
        ModalField(a.0.iter().zip(&self.eigenvalues).map(|(c, l)| -l * c).collect())
    }

    /// `‖∇u‖²` for `u` in the span, by Parseval.
    pub fn grad_norm_sq(&self, a: &ModalField) -> f64 {
        a.0.iter().zip(&self.eigenvalues).map(|(c, l)| l * c * c).sum()
    }

    /// Values of the truncated series at the boundary quadrature nodes.
    pub fn boundary_trace(&self, a: &ModalField) -> Result<Vec<f64>> {
        self.check_modal(a)?;
        Ok(self
            .boundary
            .iter()
            .map(|(_, vals)| vals.iter().zip(&a.0).map(|(e, c)| e * c).sum())
            .collect())
    }

    /// Per-mode boundary integrals `∮ v e_k ds`.
    pub fn boundary_load(&self, values: &[f64]) -> Result<ModalField> {
        if values.len() != self.boundary.len() {
            return Err(Error::SizeMismatch {
                expected: self.boundary.len(),
                found: values.len(),
            });
        }
        let mut out = vec![0.0; self.n_modes()];
        for ((w, vals), &v) in self.boundary.iter().zip(values) {
            for (o, e) in out.iter_mut().zip(vals) {
                *o += w * v * e;
            }
        }
        Ok(ModalField(out))
    }

    /// `∮ u v ds` with boundary quadrature.
    pub fn boundary_integral(&self, values: &[f64]) -> f64 {
        self.boundary.iter().zip(values).map(|((w, _), v)| w * v).sum()
    }

    /// `∫ g dx` (equal to the mean on the unit domain).
    pub fn integrate(&self, g: &GridField) -> f64 {
        g.0.iter().sum::<f64>() * self.node_weight()
    }

    pub fn mean(&self, g: &GridField) -> f64 {
        self.integrate(g)
    }

    /// `∫ f g dx` by midpoint quadrature.
    pub fn inner(&self, f: &GridField, g: &GridField) -> f64 {
        f.0.iter().zip(&g.0).map(|(a, b)| a * b).sum::<f64>() * self.node_weight()
    }

    /// Evaluate the series at an arbitrary point (1D only uses `x[0]`).
    pub fn eval_at(&self, a: &ModalField, x: &[f64]) -> f64 {
        let mp = self.spec.modes_per_axis();
        match self.spec.dim {
            Dim::One => (0..mp).map(|k| a.0[k] * axis_mode(k, x[0])).sum(),
            Dim::Two => {
                let mut s = 0.0;
                for k1 in 0..mp {
                    let ex = axis_mode(k1, x[0]);
                    for k2 in 0..mp {
                        s += a.0[k1 * mp + k2] * ex * axis_mode(k2, x[1]);
                    }
                }
                s
            }
        }
    }

    /// Sample a function of the node coordinates.
    pub fn sample(&self, f: impl Fn(&[f64]) -> f64) -> GridField {
        GridField(self.node_coords().iter().map(|x| f(x)).collect())
    }

    /// Row-major `n_nodes × n_modes` table of `e_k` at every node.
    pub fn mode_matrix(&self) -> Vec<f64> {
        let mp = self.spec.modes_per_axis();
        match self.spec.dim {
            Dim::One => self.table.clone(),
            Dim::Two => {
                let n = self.spec.grid_n;
                let mut out = Vec::with_capacity(self.n_nodes() * self.n_modes());
                for jx in 0..n {
                    for jy in 0..n {
                        for k1 in 0..mp {
                            let ex = self.table[jx * mp + k1];
                            out.extend((0..mp).map(|k2| ex * self.table[jy * mp + k2]));
                        }
                    }
                }
                out
            }
        }
    }

    /// Zero-pad or truncate modal coefficients to another spec of the same dimension.
    pub fn resize_modal(a: &ModalField, from: &BasisSpec, to: &BasisSpec) -> ModalField {
        let (fm, tm) = (from.modes_per_axis(), to.modes_per_axis());
        match from.dim {
            Dim::One => {
                let mut v = vec![0.0; tm];
                for (k, c) in a.0.iter().take(tm).enumerate() {
                    v[k] = *c;
                }
                ModalField(v)
            }
            Dim::Two => {
                let mut v = vec![0.0; tm * tm];
                for k1 in 0..fm.min(tm) {
                    for k2 in 0..fm.min(tm) {
                        v[k1 * tm + k2] = a.0[k1 * fm + k2];
                    }
                }
                ModalField(v)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basis1(m: usize, n: usize) -> Basis {
        Basis::new(BasisSpec::new(Dim::One, m, n).unwrap()).unwrap()
    }

    #[test]
    fn spec_rejects_aliasing_grid() {
        assert!(BasisSpec::new(Dim::One, 32, 49).is_err());
        assert!(BasisSpec::new(Dim::One, 32, 50).is_ok());
        assert!(BasisSpec::new(Dim::One, 0, 10).is_err());
        assert!(Dim::from_usize(3).is_err());
    }

    #[test]
    fn forward_constant() {
        let b = basis1(8, 16);
        let a = b.forward(&GridField(vec![1.0; 16])).unwrap();
        assert!((a.0[0] - 1.0).abs() < 1e-15);
        assert!(a.0[1..].iter().all(|c| c.abs() < 1e-15));
    }

    #[test]
    fn forward_cos_pi_x_matches_dense_quadrature() {
        let b = basis1(8, 16);
        let g = b.sample(|x| (PI * x[0]).cos());
        let a = b.forward(&g).unwrap();
        // Dense midpoint quadrature oracle of <cos(πx), √2 cos(πx)>.
        let n = 10_000;
        let oracle: f64 = (0..n)
            .map(|j| {
                let x = (j as f64 + 0.5) / n as f64;
                (PI * x).cos() * SQRT_2 * (PI * x).cos()
            })
            .sum::<f64>()
            / n as f64;
        assert!((a.0[1] - oracle).abs() < 1e-10);
        assert!((a.0[1] - 1.0 / SQRT_2).abs() < 1e-12);
        for (k, c) in a.0.iter().enumerate() {
            if k != 1 {
                assert!(c.abs() < 1e-14, "mode {k} = {c}");
            }
        }
    }

    #[test]
    fn laplacian_examples() {
        let b = basis1(4, 8);
        let mut a = ModalField::zeros(5);
        a.0[0] = 3.0;
        a.0[1] = 1.0;
        a.0[2] = 1.0;
        let l = b.laplacian_modal(&a);
        assert_eq!(l.0[0], 0.0);
        assert!((l.0[1] + PI * PI).abs() < 1e-14);
        assert!((l.0[2] + 4.0 * PI * PI).abs() < 1e-13);
    }

    #[test]
    fn boundary_trace_examples() {
        let b = basis1(4, 8);
        let constant = ModalField(vec![2.5, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(b.boundary_trace(&constant).unwrap(), vec![2.5, 2.5]);
        let cos1 = ModalField(vec![0.0, 1.0 / SQRT_2, 0.0, 0.0, 0.0]);
        let t = b.boundary_trace(&cos1).unwrap();
        assert!((t[0] - 1.0).abs() < 1e-15 && (t[1] + 1.0).abs() < 1e-15);
        let cos2 = ModalField(vec![0.0, 0.0, 1.0 / SQRT_2, 0.0, 0.0]);
        let t = b.boundary_trace(&cos2).unwrap();
        assert!((t[0] - 1.0).abs() < 1e-15 && (t[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn boundary_load_examples() {
        let b = basis1(4, 8);
        let l = b.boundary_load(&[1.0, 1.0]).unwrap();
        assert_eq!(l.0[0], 2.0);
        let l = b.boundary_load(&[1.0, -1.0]).unwrap();
        // e_1(0) = √2, e_1(1) = −√2: 1·√2 + (−1)(−√2)
        let oracle = 1.0 * SQRT_2 + (-1.0) * (-SQRT_2);
        assert!((l.0[1] - oracle).abs() < 1e-15);
        assert!((l.0[1] - 2.0 * SQRT_2).abs() < 1e-15);
        let z = b.boundary_load(&[0.0, 0.0]).unwrap();
        assert!(z.0.iter().all(|&c| c == 0.0));
        assert!(b.boundary_load(&[1.0]).is_err());
    }

    #[test]
    fn gram_matrix_is_identity() {
        for (m, n) in [(8, 14), (8, 16), (32, 96)] {
            let b = basis1(m, n);
            for k in 0..=m {
                for l in 0..=m {
                    let mut ek = ModalField::zeros(m + 1);
                    ek.0[k] = 1.0;
                    let mut el = ModalField::zeros(m + 1);
                    el.0[l] = 1.0;
                    let g = b.inner(&b.inverse(&ek).unwrap(), &b.inverse(&el).unwrap());
                    let want = if k == l { 1.0 } else { 0.0 };
                    assert!((g - want).abs() < 1e-12, "m={m} n={n} k={k} l={l} g={g}");
                }
            }
        }
    }

    #[test]
    fn size_mismatch_errors() {
        let b = basis1(4, 8);
        assert!(matches!(
            b.forward(&GridField(vec![0.0; 7])),
            Err(Error::SizeMismatch { expected: 8, found: 7 })
        ));
        assert!(b.inverse(&ModalField(vec![0.0; 4])).is_err());
    }

    #[test]
    fn two_dimensional_round_trip_and_eigenvalues() {
        let b = Basis::new(BasisSpec::new(Dim::Two, 4, 8).unwrap()).unwrap();
        let a = ModalField((0..25).map(|i| ((i * 7) % 5) as f64 - 2.0).collect());
        let g = b.inverse(&a).unwrap();
        let back = b.forward(&g).unwrap();
        for (x, y) in a.0.iter().zip(&back.0) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!((b.eigenvalues()[5 + 2] - 5.0 * PI * PI).abs() < 1e-12);
        // Boundary: 4 edges, constant field integrates to the perimeter.
        let c = ModalField((0..25).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect());
        let tr = b.boundary_trace(&c).unwrap();
        assert!((b.boundary_integral(&tr) - 4.0).abs() < 1e-14);
        // Point evaluation agrees with grid synthesis.
        let coords = b.node_coords();
        assert!((b.eval_at(&a, &coords[11]) - g.0[11]).abs() < 1e-12);
    }

    #[test]
    fn mode_matrix_matches_synthesis() {
        for spec in [BasisSpec::new(Dim::One, 5, 9).unwrap(), BasisSpec::new(Dim::Two, 3, 6).unwrap()] {
            let b = Basis::new(spec).unwrap();
            let e = b.mode_matrix();
            let k = b.n_modes();
            for l in 0..k {
                let mut a = ModalField::zeros(k);
                a.0[l] = 1.0;
                let g = b.inverse(&a).unwrap();
                for (j, v) in g.0.iter().enumerate() {
                    assert!((e[j * k + l] - v).abs() < 1e-13);
                }
            }
        }
    }
}
