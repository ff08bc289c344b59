//! Dense complex-matrix primitives.
//!
//! Everything the simulator needs from linear algebra lives here: tensor
//! products, partial traces, Hermitian spectral decomposition, unitary
//! propagators, Gibbs states and the trace distance. States and operators are
//! all [`ComplexMatrix`] values.

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use thiserror::Error;

/// Max-element tolerance used to decide whether an operator is Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Tolerance used by the density-matrix validity check.
pub const DENSITY_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian (max |A - A^dag| = {deviation:e})")]
    NotHermitian { deviation: f64 },
    #[error("invalid subsystem selection: {0}")]
    InvalidSubsystems(String),
    #[error("inverse temperature must be finite and non-negative, got {0}")]
    InvalidInverseTemperature(f64),
    #[error("not a density matrix: {0}")]
    NotDensityMatrix(String),
}

/// Dense square-or-rectangular matrix of complex entries.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix(DMatrix<C64>);

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self(DMatrix::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    /// Builds a matrix from row slices. Panics on ragged input.
    pub fn from_rows(rows: &[Vec<C64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self(DMatrix::from_fn(r, c, |i, j| C64::new(rows[i][j], 0.0)))
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self(DMatrix::from_fn(rows, cols, f))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = C64::new(d, 0.0);
        }
        m
    }

    /// Projector `|psi><psi|` onto a (not necessarily normalised) vector.
    pub fn projector(psi: &[C64]) -> Self {
        let n = psi.len();
        Self::from_fn(n, n, |i, j| psi[i] * psi[j].conj())
    }

    pub fn from_inner(inner: DMatrix<C64>) -> Self {
        Self(inner)
    }

    pub fn inner(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<C64> {
        self.0
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(&self.0 * C64::new(s, 0.0))
    }

    pub fn scale_c(&self, s: C64) -> Self {
        Self(&self.0 * s)
    }

    /// Largest absolute value among the entries.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.0.shape(), other.0.shape(), "shape mismatch");
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `max |A - A^dag|`; infinite for non-square input.
    pub fn hermiticity_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows();
        let mut dev: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_deviation() <= tol
    }

    /// `(A + A^dag) / 2`.
    pub fn hermitian_part(&self) -> Self {
        Self((&self.0 + self.0.adjoint()) * C64::new(0.5, 0.0))
    }

    pub fn commutator(&self, other: &Self) -> Self {
        Self(&self.0 * &other.0 - &other.0 * &self.0)
    }

    /// `Tr(self * other)` without forming the product.
    pub fn trace_product(&self, other: &Self) -> C64 {
        assert_eq!(self.cols(), other.rows());
        assert_eq!(self.rows(), other.cols());
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..self.rows() {
            for k in 0..self.cols() {
                acc += self[(i, k)] * other[(k, i)];
            }
        }
        acc
    }

    pub fn purity(&self) -> f64 {
        self.trace_product(self).re
    }

    /// Checks the density-matrix invariants: Hermitian, unit trace and
    /// eigenvalues no smaller than `-tol`.
    pub fn check_density_matrix(&self, tol: f64) -> Result<(), LinalgError> {
        if !self.is_square() {
            return Err(LinalgError::NotSquare { rows: self.rows(), cols: self.cols() });
        }
        let dev = self.hermiticity_deviation();
        if dev > tol {
            return Err(LinalgError::NotDensityMatrix(format!("hermiticity deviation {dev:e}")));
        }
        let tr = self.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > tol {
            return Err(LinalgError::NotDensityMatrix(format!("trace {tr}")));
        }
        let spec = hermitian_eig(self)?;
        let min = spec.eigenvalues[0];
        if min < -tol {
            return Err(LinalgError::NotDensityMatrix(format!("negative eigenvalue {min:e}")));
        }
        Ok(())
    }

    pub fn is_density_matrix(&self, tol: f64) -> bool {
        self.check_density_matrix(tol).is_ok()
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows(), self.cols())?;
        for i in 0..self.rows() {
            write!(f, "  ")?;
            for j in 0..self.cols() {
                let z = self[(i, j)];
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, idx: (usize, usize)) -> &C64 {
        &self.0[idx]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, idx: (usize, usize)) -> &mut C64 {
        &mut self.0[idx]
    }
}

impl<'a> Add<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 + &rhs.0)
    }
}

impl Add for ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(self.0 + rhs.0)
    }
}

impl AddAssign<&ComplexMatrix> for ComplexMatrix {
    fn add_assign(&mut self, rhs: &ComplexMatrix) {
        self.0 += &rhs.0;
    }
}

impl<'a> Sub<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 - &rhs.0)
    }
}

impl Sub for ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(self.0 - rhs.0)
    }
}

impl<'a> Mul<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(matmul(&self.0, &rhs.0))
    }
}

impl Mul for ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: ComplexMatrix) -> ComplexMatrix {
        &self * &rhs
    }
}

/// Dense product through a blocked complex GEMM kernel; nalgebra's generic
/// complex product is several times slower at the sizes used here.
pub fn matmul(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    let (m, k) = a.shape();
    let (k2, n) = b.shape();
    assert_eq!(k, k2, "matmul: inner dimensions differ ({k} vs {k2})");
    let mut c = DMatrix::<C64>::zeros(m, n);
    if m == 0 || n == 0 || k == 0 {
        return c;
    }
    // Column-major storage: row stride 1, column stride = number of rows.
    // SAFETY: Complex64 is #[repr(C)] { re, im }, layout-identical to [f64; 2],
    // and all pointers/strides describe the full extent of the three buffers.
    unsafe {
        matrixmultiply::zgemm(
            matrixmultiply::CGemmOption::Standard,
            matrixmultiply::CGemmOption::Standard,
            m,
            k,
            n,
            [1.0, 0.0],
            a.as_ptr() as *const [f64; 2],
            1,
            m as isize,
            b.as_ptr() as *const [f64; 2],
            1,
            k as isize,
            [0.0, 0.0],
            c.as_mut_ptr() as *mut [f64; 2],
            1,
            m as isize,
        );
    }
    c
}

impl Neg for ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        ComplexMatrix(-self.0)
    }
}

/// Kronecker product `a (x) b`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix(a.0.kronecker(&b.0))
}

/// Kronecker product of a list of factors, left to right.
pub fn kron_all<'a>(factors: impl IntoIterator<Item = &'a ComplexMatrix>) -> ComplexMatrix {
    factors
        .into_iter()
        .fold(ComplexMatrix::identity(1), |acc, f| kron(&acc, f))
}

/// Reduces `rho` onto the subsystems in `keep`, tracing out the rest.
///
/// Subsystems are numbered left to right in tensor order; the kept factors
/// stay in their original order regardless of the order given in `keep`.
pub fn partial_trace(
    rho: &ComplexMatrix,
    dims: &[usize],
    keep: &[usize],
) -> Result<ComplexMatrix, LinalgError> {
    let total: usize = dims.iter().product();
    if !rho.is_square() {
        return Err(LinalgError::NotSquare { rows: rho.rows(), cols: rho.cols() });
    }
    if dims.is_empty() || dims.contains(&0) || total != rho.rows() {
        return Err(LinalgError::DimensionMismatch {
            expected: format!("product of dims {dims:?}"),
            found: format!("{}", rho.rows()),
        });
    }
    if keep.is_empty() {
        return Err(LinalgError::InvalidSubsystems("keep set is empty".into()));
    }
    let mut kept = vec![false; dims.len()];
    for &k in keep {
        if k >= dims.len() {
            return Err(LinalgError::InvalidSubsystems(format!(
                "index {k} out of range for {} subsystems",
                dims.len()
            )));
        }
        if kept[k] {
            return Err(LinalgError::InvalidSubsystems(format!("index {k} repeated")));
        }
        kept[k] = true;
    }

    let keep_dims: Vec<usize> = dims.iter().zip(&kept).filter(|(_, &k)| k).map(|(&d, _)| d).collect();
    let trace_dims: Vec<usize> = dims.iter().zip(&kept).filter(|(_, &k)| !k).map(|(&d, _)| d).collect();
    let dk: usize = keep_dims.iter().product();
    let dt: usize = trace_dims.iter().product();

    // Map (kept multi-index, traced multi-index) -> flat index of the full space.
    let mut strides = vec![1usize; dims.len()];
    for s in (0..dims.len().saturating_sub(1)).rev() {
        strides[s] = strides[s + 1] * dims[s + 1];
    }
    let flat = |k_idx: usize, t_idx: usize| -> usize {
        let mut k_rem = k_idx;
        let mut t_rem = t_idx;
        let mut out = 0;
        for s in (0..dims.len()).rev() {
            let digit = if kept[s] {
                let d = k_rem % dims[s];
                k_rem /= dims[s];
                d
            } else {
                let d = t_rem % dims[s];
                t_rem /= dims[s];
                d
            };
            out += digit * strides[s];
        }
        out
    };

    let mut red = ComplexMatrix::zeros(dk, dk);
    for t in 0..dt {
        for i in 0..dk {
            let fi = flat(i, t);
            for j in 0..dk {
                red[(i, j)] += rho[(fi, flat(j, t))];
            }
        }
    }
    Ok(red)
}

/// Eigen-decomposition of a Hermitian matrix: ascending eigenvalues and an
/// orthonormal eigenvector basis stored column-wise.
#[derive(Clone, Debug)]
pub struct HermitianSpectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl HermitianSpectrum {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `V f(diag(lambda)) V^dag` for a complex-valued spectral function.
    pub fn map(&self, f: impl Fn(f64) -> C64) -> ComplexMatrix {
        let v = &self.eigenvectors.0;
        let mut scaled = v.clone();
        for (j, &lam) in self.eigenvalues.iter().enumerate() {
            let fj = f(lam);
            for i in 0..v.nrows() {
                scaled[(i, j)] *= fj;
            }
        }
        ComplexMatrix(matmul(&scaled, &v.adjoint()))
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.map(|l| C64::new(l, 0.0))
    }
}

/// Spectral decomposition of a Hermitian matrix.
///
/// Input is symmetrised as `(A + A^dag)/2` before decomposing so roundoff in
/// the builders does not leak into the eigenvectors.
pub fn hermitian_eig(h: &ComplexMatrix) -> Result<HermitianSpectrum, LinalgError> {
    if !h.is_square() {
        return Err(LinalgError::NotSquare { rows: h.rows(), cols: h.cols() });
    }
    let deviation = h.hermiticity_deviation();
    if deviation > HERMITIAN_TOL {
        return Err(LinalgError::NotHermitian { deviation });
    }
    let sym = h.hermitian_part().0;
    let eig = sym.symmetric_eigen();
    let n = h.rows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let eigenvectors = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok(HermitianSpectrum { eigenvalues, eigenvectors: ComplexMatrix(eigenvectors) })
}

/// `exp(-i h t)` through the spectral decomposition of `h`.
pub fn unitary_exp(h: &ComplexMatrix, t: f64) -> Result<ComplexMatrix, LinalgError> {
    let spec = hermitian_eig(h)?;
    Ok(spec.map(|l| C64::from_polar(1.0, -l * t)))
}

/// Gibbs state `exp(-beta h) / Tr exp(-beta h)`.
pub fn thermal_state(h: &ComplexMatrix, beta: f64) -> Result<ComplexMatrix, LinalgError> {
    if !beta.is_finite() || beta < 0.0 {
        return Err(LinalgError::InvalidInverseTemperature(beta));
    }
    let spec = hermitian_eig(h)?;
    // Shift by the ground energy so large beta cannot overflow.
    let e0 = spec.eigenvalues[0];
    let z: f64 = spec.eigenvalues.iter().map(|&e| (-beta * (e - e0)).exp()).sum();
    Ok(spec.map(|e| C64::new((-beta * (e - e0)).exp() / z, 0.0)))
}

/// Trace distance `1/2 Tr |r1 - r2|`.
pub fn trace_distance(r1: &ComplexMatrix, r2: &ComplexMatrix) -> Result<f64, LinalgError> {
    if r1.rows() != r2.rows() || r1.cols() != r2.cols() {
        return Err(LinalgError::DimensionMismatch {
            expected: format!("{}x{}", r1.rows(), r1.cols()),
            found: format!("{}x{}", r2.rows(), r2.cols()),
        });
    }
    let diff = (r1 - r2).hermitian_part();
    if diff.rows() == 2 {
        // Closed form for qubits: the difference is traceless up to roundoff,
        // so the eigenvalues are t/2 +- sqrt((a-d)^2/4 + |b|^2).
        let a = diff[(0, 0)].re;
        let d = diff[(1, 1)].re;
        let b = diff[(0, 1)];
        let mean = 0.5 * (a + d);
        let radius = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
        let dist = 0.5 * ((mean + radius).abs() + (mean - radius).abs());
        return Ok(dist.clamp(0.0, 1.0));
    }
    let spec = hermitian_eig(&diff)?;
    let dist = 0.5 * spec.eigenvalues.iter().map(|l| l.abs()).sum::<f64>();
    Ok(dist.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn pauli_x() -> ComplexMatrix {
        ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])
    }

    fn pauli_z() -> ComplexMatrix {
        ComplexMatrix::from_real_diagonal(&[1.0, -1.0])
    }

    #[test]
    fn kron_of_identities_is_identity() {
        let k = kron(&ComplexMatrix::identity(2), &ComplexMatrix::identity(3));
        assert_eq!(k, ComplexMatrix::identity(6));
    }

    #[test]
    fn kron_sigma_x_identity_is_block_antidiagonal() {
        let k = kron(&pauli_x(), &ComplexMatrix::identity(2));
        let expected = ComplexMatrix::from_real_rows(&[
            &[0.0, 0.0, 1.0, 0.0],
            &[0.0, 0.0, 0.0, 1.0],
            &[1.0, 0.0, 0.0, 0.0],
            &[0.0, 1.0, 0.0, 0.0],
        ]);
        assert_eq!(k, expected);
    }

    #[test]
    fn partial_trace_of_bell_state_is_maximally_mixed() {
        let s = FRAC_1_SQRT_2;
        let phi = ComplexMatrix::projector(&[c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(s, 0.0)]);
        let red = partial_trace(&phi, &[2, 2], &[0]).unwrap();
        assert!(red.max_abs_diff(&ComplexMatrix::identity(2).scale(0.5)) < 1e-15);
    }

    #[test]
    fn partial_trace_keeps_original_order() {
        let a = ComplexMatrix::from_real_diagonal(&[0.25, 0.75]);
        let b = ComplexMatrix::from_real_diagonal(&[0.5, 0.3, 0.2]);
        let cc = ComplexMatrix::from_real_diagonal(&[0.9, 0.1]);
        let abc = kron_all([&a, &b, &cc]);
        let red = partial_trace(&abc, &[2, 3, 2], &[2, 0]).unwrap();
        assert!(red.max_abs_diff(&kron(&a, &cc)) < 1e-15);
    }

    #[test]
    fn partial_trace_rejects_bad_dims() {
        let rho = ComplexMatrix::identity(6).scale(1.0 / 6.0);
        assert!(matches!(
            partial_trace(&rho, &[2, 2], &[0]),
            Err(LinalgError::DimensionMismatch { .. })
        ));
        assert!(partial_trace(&rho, &[2, 3], &[]).is_err());
        assert!(partial_trace(&rho, &[2, 3], &[2]).is_err());
        assert!(partial_trace(&rho, &[2, 3], &[0, 0]).is_err());
    }

    #[test]
    fn eig_of_diagonal() {
        let h = ComplexMatrix::from_real_diagonal(&[1.0, 0.0, -1.0]);
        let spec = hermitian_eig(&h).unwrap();
        assert_eq!(spec.eigenvalues, vec![-1.0, 0.0, 1.0]);
        // Eigenvectors are a permutation (up to phase) of the standard basis.
        for j in 0..3 {
            let col_max = (0..3).map(|i| spec.eigenvectors[(i, j)].norm()).fold(0.0, f64::max);
            assert!((col_max - 1.0).abs() < 1e-14);
        }
        assert!((spec.eigenvectors[(2, 0)].norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn eig_of_sigma_x() {
        let spec = hermitian_eig(&pauli_x()).unwrap();
        assert!((spec.eigenvalues[0] + 1.0).abs() < 1e-14);
        assert!((spec.eigenvalues[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let m = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert!(matches!(hermitian_eig(&m), Err(LinalgError::NotHermitian { .. })));
    }

    #[test]
    fn unitary_exp_at_zero_time_is_identity() {
        let u = unitary_exp(&pauli_x(), 0.0).unwrap();
        assert!(u.max_abs_diff(&ComplexMatrix::identity(2)) < 1e-15);
    }

    #[test]
    fn unitary_exp_sigma_z_pi_is_minus_identity() {
        let u = unitary_exp(&pauli_z(), PI).unwrap();
        assert!(u.max_abs_diff(&ComplexMatrix::identity(2).scale(-1.0)) < 1e-14);
    }

    #[test]
    fn thermal_state_infinite_temperature() {
        let h = ComplexMatrix::from_real_diagonal(&[-3.0, 0.0, 3.0]);
        let rho = thermal_state(&h, 0.0).unwrap();
        assert!(rho.max_abs_diff(&ComplexMatrix::identity(3).scale(1.0 / 3.0)) < 1e-15);
    }

    #[test]
    fn thermal_state_zero_temperature_limit() {
        let h = ComplexMatrix::from_real_diagonal(&[-3.0, 0.0, 3.0]);
        let rho = thermal_state(&h, 1e3).unwrap();
        let ground = ComplexMatrix::from_real_diagonal(&[1.0, 0.0, 0.0]);
        assert!(rho.max_abs_diff(&ground) < 1e-15);
    }

    #[test]
    fn thermal_state_populations() {
        let h = ComplexMatrix::from_real_diagonal(&[-3.0, 0.0, 3.0]);
        let rho = thermal_state(&h, 0.25).unwrap();
        // Direct scalar evaluation of the Boltzmann weights.
        let w = [(0.75f64).exp(), 1.0, (-0.75f64).exp()];
        let z: f64 = w.iter().sum();
        for i in 0..3 {
            assert!((rho[(i, i)].re - w[i] / z).abs() < 1e-14);
        }
        assert!(rho.check_density_matrix(DENSITY_TOL).is_ok());
    }

    #[test]
    fn thermal_state_rejects_negative_beta() {
        let h = pauli_z();
        assert!(thermal_state(&h, -1.0).is_err());
        assert!(thermal_state(&h, f64::NAN).is_err());
    }

    #[test]
    fn trace_distance_examples() {
        let zero = ComplexMatrix::from_real_diagonal(&[1.0, 0.0]);
        let one = ComplexMatrix::from_real_diagonal(&[0.0, 1.0]);
        let plus = ComplexMatrix::from_real_rows(&[&[0.5, 0.5], &[0.5, 0.5]]);
        assert!(trace_distance(&zero, &zero).unwrap().abs() < 1e-15);
        assert!((trace_distance(&zero, &one).unwrap() - 1.0).abs() < 1e-15);
        // Bloch vectors (0,0,1) and (1,0,0): half the Euclidean distance.
        assert!((trace_distance(&zero, &plus).unwrap() - FRAC_1_SQRT_2).abs() < 1e-14);
    }

    #[test]
    fn trace_distance_rejects_mismatch() {
        let a = ComplexMatrix::identity(2).scale(0.5);
        let b = ComplexMatrix::identity(3).scale(1.0 / 3.0);
        assert!(trace_distance(&a, &b).is_err());
    }

    #[test]
    fn density_check_catches_negative_eigenvalue() {
        let bad = ComplexMatrix::from_real_diagonal(&[1.2, -0.2]);
        assert!(!bad.is_density_matrix(DENSITY_TOL));
        let good = ComplexMatrix::from_real_diagonal(&[0.2, 0.8]);
        assert!(good.is_density_matrix(DENSITY_TOL));
    }
}
