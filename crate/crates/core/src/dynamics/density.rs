use nalgebra::Matrix3;
use num_complex::Complex64;

/// State of one atom group: a 3x3 density matrix in the basis
/// |1> (initial ground), |2> (storage ground), |3> (excited).
///
/// Indices are zero-based in code, so `rho.get(0, 1)` is rho12.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityMatrix(pub Matrix3<Complex64>);

impl DensityMatrix {
    /// Pure state |level><level|, `level` in 0..3.
    pub fn pure_level(level: usize) -> Self {
        assert!(level < 3, "level index out of range");
        let mut m = Matrix3::zeros();
        m[(level, level)] = Complex64::new(1.0, 0.0);
        DensityMatrix(m)
    }

    /// All population in |1>.
    pub fn ground() -> Self {
        Self::pure_level(0)
    }

    /// Projector c c^dagger onto a (not necessarily normalized) amplitude vector.
    pub fn from_amplitudes(c: [Complex64; 3]) -> Self {
        let mut m = Matrix3::zeros();
        for i in 0..3 {
            for j in 0..3 {
                m[(i, j)] = c[i] * c[j].conj();
            }
        }
        DensityMatrix(m)
    }

    pub fn matrix(&self) -> &Matrix3<Complex64> {
        &self.0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.0[(i, j)]
    }

    pub fn population(&self, level: usize) -> f64 {
        self.0[(level, level)].re
    }

    pub fn rho12(&self) -> Complex64 {
        self.0[(0, 1)]
    }

    pub fn rho13(&self) -> Complex64 {
        self.0[(0, 2)]
    }

    pub fn rho23(&self) -> Complex64 {
        self.0[(1, 2)]
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    /// Largest |rho_ij - conj(rho_ji)|.
    pub fn hermiticity_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                worst = worst.max((self.0[(i, j)] - self.0[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// (rho + rho^dagger) / 2
    pub fn symmetrized(&self) -> Self {
        DensityMatrix((self.0 + self.0.adjoint()) * Complex64::new(0.5, 0.0))
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        self.symmetrized()
            .0
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Largest elementwise modulus of the difference.
    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        (self.0 - other.0).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

impl Default for DensityMatrix {
    fn default() -> Self {
        Self::ground()
    }
}
