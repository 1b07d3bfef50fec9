//! 2×2 real symmetric matrices: eigen-decomposition and square-root factors.

use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sym2<F> {
    pub xx: F,
    pub xy: F,
    pub yy: F,
}

#[derive(Debug, Clone, Copy)]
pub struct Eigen2<F> {
    /// Ascending eigenvalues.
    pub values: [F; 2],
    /// Unit eigenvectors, `vectors[k]` belongs to `values[k]`.
    pub vectors: [[F; 2]; 2],
}

impl<F: Real> Sym2<F> {
    pub fn new(xx: F, xy: F, yy: F) -> Self {
        Sym2 { xx, xy, yy }
    }

    pub fn zero() -> Self {
        Sym2::new(F::zero(), F::zero(), F::zero())
    }

    pub fn from_array(m: [[F; 2]; 2]) -> Self {
        Sym2::new(m[0][0], m[0][1], m[1][1])
    }

    pub fn to_array(self) -> [[F; 2]; 2] {
        [[self.xx, self.xy], [self.xy, self.yy]]
    }

    pub fn det(&self) -> F {
        self.xx * self.yy - self.xy * self.xy
    }

    pub fn scale(self, k: F) -> Self {
        Sym2::new(self.xx * k, self.xy * k, self.yy * k)
    }

    pub fn eigen(&self) -> Eigen2<F> {
        let two = F::of(2.0);
        let mean = (self.xx + self.yy) / two;
        let half_diff = (self.xx - self.yy) / two;
        let rad = half_diff.hypot(self.xy);
        let lo = mean - rad;
        let hi = mean + rad;
        // eigenvector of `hi`: angle psi with tan(2 psi) = 2 xy / (xx - yy)
        let psi = self.xy.atan2(half_diff) / two;
        let (s, c) = psi.sin_cos();
        Eigen2 {
            values: [lo, hi],
            vectors: [[-s, c], [c, s]],
        }
    }

    /// Smallest eigenvalue in closed form.
    pub fn min_eigenvalue(&self) -> F {
        self.eigen().values[0]
    }

    /// A factor `L` with `L Lᵀ = self`, built from the eigen-decomposition.
    /// Negative round-off eigenvalues are clamped to zero.
    pub fn sqrt_factor(&self) -> [[F; 2]; 2] {
        let e = self.eigen();
        let r0 = e.values[0].max(F::zero()).sqrt();
        let r1 = e.values[1].max(F::zero()).sqrt();
        let [v0, v1] = e.vectors;
        [[v0[0] * r0, v1[0] * r1], [v0[1] * r0, v1[1] * r1]]
    }

    /// Quadratic form `dᵀ self⁻¹ d`.
    pub fn inv_quad(&self, dx: F, dy: F) -> F {
        (self.yy * dx * dx - F::of(2.0) * self.xy * dx * dy + self.xx * dy * dy) / self.det()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_reconstructs_matrix() {
        let m = Sym2::new(0.3_f64, -0.07, 0.11);
        let e = m.eigen();
        for k in 0..2 {
            let v = e.vectors[k];
            let mv = [m.xx * v[0] + m.xy * v[1], m.xy * v[0] + m.yy * v[1]];
            assert!((mv[0] - e.values[k] * v[0]).abs() < 1e-14);
            assert!((mv[1] - e.values[k] * v[1]).abs() < 1e-14);
        }
        assert!(e.values[0] <= e.values[1]);
    }

    #[test]
    fn sqrt_factor_squares_back() {
        let m = Sym2::new(2.0_f64, 0.5, 1.0);
        let l = m.sqrt_factor();
        let xx = l[0][0] * l[0][0] + l[0][1] * l[0][1];
        let xy = l[0][0] * l[1][0] + l[0][1] * l[1][1];
        let yy = l[1][0] * l[1][0] + l[1][1] * l[1][1];
        assert!((xx - 2.0).abs() < 1e-14 && (xy - 0.5).abs() < 1e-14 && (yy - 1.0).abs() < 1e-14);
    }

    #[test]
    fn diagonal_and_isotropic() {
        let m = Sym2::new(4.0_f64, 0.0, 1.0);
        assert_eq!(m.eigen().values, [1.0, 4.0]);
        let iso = Sym2::new(0.25_f64, 0.0, 0.25);
        assert!((iso.min_eigenvalue() - 0.25).abs() < 1e-16);
    }
}
