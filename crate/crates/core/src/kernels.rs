//! Kernel functions, Gram matrices and kernel vectors.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};

/// An ordered set of fixed-dimension input points, stored contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct Points {
    dim: usize,
    coords: Vec<f64>,
}

impl Points {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            coords: Vec::new(),
        }
    }

    pub fn from_flat(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter {
                name: "dim",
                value: 0.0,
            });
        }
        if coords.len() % dim != 0 {
            return Err(Error::LengthMismatch {
                expected: coords.len() / dim * dim + dim,
                found: coords.len(),
            });
        }
        Ok(Self { dim, coords })
    }

    /// One-dimensional points.
    pub fn from_scalars(xs: &[f64]) -> Self {
        Self {
            dim: 1,
            coords: xs.to_vec(),
        }
    }

    pub fn push(&mut self, x: &[f64]) -> Result<()> {
        check_dim(self.dim, x)?;
        self.coords.extend_from_slice(x);
        Ok(())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn len(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.coords.len() / self.dim
        }
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim.max(1))
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.coords
    }
}

#[inline]
pub(crate) fn check_dim(expected: usize, x: &[f64]) -> Result<()> {
    if x.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            found: x.len(),
        });
    }
    Ok(())
}

type FeatureFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;

/// Explicit feature map `φ: R^n_x → R^n_phi`, giving the kernel
/// `k(x, x') = φ(x)ᵀφ(x')`.
#[derive(Clone)]
pub struct FeatureMap {
    n_phi: usize,
    map: Arc<FeatureFn>,
}

impl FeatureMap {
    pub fn new<F>(n_phi: usize, map: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        if n_phi == 0 {
            return Err(Error::InvalidParameter {
                name: "n_phi",
                value: 0.0,
            });
        }
        Ok(Self {
            n_phi,
            map: Arc::new(map),
        })
    }

    #[inline]
    pub fn n_phi(&self) -> usize {
        self.n_phi
    }

    /// Evaluates `φ(x)`, checking the declared output dimension.
    pub fn features(&self, x: &[f64]) -> Result<Vec<f64>> {
        let phi = (self.map)(x);
        if phi.len() != self.n_phi {
            return Err(Error::DimensionMismatch {
                expected: self.n_phi,
                found: phi.len(),
            });
        }
        Ok(phi)
    }
}

impl fmt::Debug for FeatureMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FeatureMap")
            .field("n_phi", &self.n_phi)
            .finish_non_exhaustive()
    }
}

/// Kernel family and hyperparameters.
#[derive(Debug, Clone)]
pub enum KernelSpec {
    /// `σ² exp(−‖x−x'‖² / (2 l²))`.
    SquaredExponential {
        amplitude: f64,
        lengthscale: f64,
    },
    FiniteFeature(FeatureMap),
}

impl KernelSpec {
    pub fn squared_exponential(amplitude: f64, lengthscale: f64) -> Result<Self> {
        if !(amplitude > 0.0) || !amplitude.is_finite() {
            return Err(Error::InvalidParameter {
                name: "sigma_se",
                value: amplitude,
            });
        }
        if !(lengthscale > 0.0) || !lengthscale.is_finite() {
            return Err(Error::InvalidParameter {
                name: "l_se",
                value: lengthscale,
            });
        }
        Ok(KernelSpec::SquaredExponential {
            amplitude,
            lengthscale,
        })
    }

    pub fn finite_feature(map: FeatureMap) -> Self {
        KernelSpec::FiniteFeature(map)
    }

    pub fn feature_map(&self) -> Option<&FeatureMap> {
        match self {
            KernelSpec::FiniteFeature(m) => Some(m),
            KernelSpec::SquaredExponential { .. } => None,
        }
    }

    /// `k(x, x')`.
    pub fn eval(&self, x: &[f64], x_prime: &[f64]) -> Result<f64> {
        if x.len() != x_prime.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                found: x_prime.len(),
            });
        }
        match self {
            KernelSpec::SquaredExponential {
                amplitude,
                lengthscale,
            } => {
                let d2: f64 = x.iter().zip(x_prime).map(|(a, b)| (a - b) * (a - b)).sum();
                Ok(se(*amplitude, *lengthscale, d2))
            }
            KernelSpec::FiniteFeature(map) => {
                let a = map.features(x)?;
                let b = map.features(x_prime)?;
                Ok(dot(&a, &b))
            }
        }
    }

    /// `k(x, x)`.
    pub fn diag(&self, x: &[f64]) -> Result<f64> {
        match self {
            KernelSpec::SquaredExponential { amplitude, .. } => Ok(amplitude * amplitude),
            KernelSpec::FiniteFeature(map) => {
                let a = map.features(x)?;
                Ok(dot(&a, &a))
            }
        }
    }

    /// Gram matrix `K_ij = k(x_i, x_j)`, built from the upper triangle and
    /// mirrored so that it is exactly symmetric.
    pub fn gram(&self, xs: &Points) -> Result<GramMatrix> {
        let n = xs.len();
        let mut m = Matrix::zeros(n, n);
        match self {
            KernelSpec::FiniteFeature(map) => {
                let feats = xs
                    .iter()
                    .map(|x| map.features(x))
                    .collect::<Result<Vec<_>>>()?;
                for i in 0..n {
                    for j in i..n {
                        let v = dot(&feats[i], &feats[j]);
                        m.set(i, j, v);
                        m.set(j, i, v);
                    }
                }
            }
            KernelSpec::SquaredExponential { .. } => {
                for i in 0..n {
                    for j in i..n {
                        let v = self.eval(xs.get(i), xs.get(j))?;
                        m.set(i, j, v);
                        m.set(j, i, v);
                    }
                }
            }
        }
        Ok(GramMatrix(m))
    }

    /// `(k(x, x_1), …, k(x, x_D))`.
    pub fn vector(&self, xs: &Points, x: &[f64]) -> Result<Vec<f64>> {
        if !xs.is_empty() {
            check_dim(xs.dim(), x)?;
        }
        match self {
            KernelSpec::FiniteFeature(map) => {
                let fx = map.features(x)?;
                xs.iter()
                    .map(|xi| Ok(dot(&map.features(xi)?, &fx)))
                    .collect()
            }
            KernelSpec::SquaredExponential { .. } => xs.iter().map(|xi| self.eval(x, xi)).collect(),
        }
    }

    /// Cross-kernel block `C_ig = k(x_i, p_g)` as a row-major
    /// `|xs| × |ps|` buffer.
    pub fn cross(&self, xs: &Points, ps: &Points) -> Result<Vec<f64>> {
        let (n, g) = (xs.len(), ps.len());
        if n > 0 && g > 0 && xs.dim() != ps.dim() {
            return Err(Error::DimensionMismatch {
                expected: xs.dim(),
                found: ps.dim(),
            });
        }
        let mut out = Vec::with_capacity(n * g);
        match self {
            KernelSpec::SquaredExponential {
                amplitude,
                lengthscale,
            } => {
                for xi in xs.iter() {
                    for p in ps.iter() {
                        let d2: f64 = xi.iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum();
                        out.push(se(*amplitude, *lengthscale, d2));
                    }
                }
            }
            KernelSpec::FiniteFeature(map) => {
                let fp = ps
                    .iter()
                    .map(|p| map.features(p))
                    .collect::<Result<Vec<_>>>()?;
                for xi in xs.iter() {
                    let fx = map.features(xi)?;
                    out.extend(fp.iter().map(|f| dot(&fx, f)));
                }
            }
        }
        Ok(out)
    }

    /// RKHS norm of `f = Σ c_i k(·, z_i)`, i.e. `sqrt(cᵀ K_z c)`.
    pub fn rkhs_norm_of_expansion(&self, centers: &Points, coeffs: &[f64]) -> Result<f64> {
        if centers.len() != coeffs.len() {
            return Err(Error::LengthMismatch {
                expected: centers.len(),
                found: coeffs.len(),
            });
        }
        let k = self.gram(centers)?;
        let q = k.matrix().quadratic_form(coeffs)?;
        Ok(libm::sqrt(q.max(0.0)))
    }
}

#[inline]
fn se(amplitude: f64, lengthscale: f64, d2: f64) -> f64 {
    amplitude * amplitude * libm::exp(-d2 / (2.0 * lengthscale * lengthscale))
}

/// Symmetric positive semi-definite kernel matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix(Matrix);

impl GramMatrix {
    /// Wraps an explicitly given matrix; it must be square and exactly
    /// symmetric. Positive semi-definiteness is the caller's responsibility.
    pub fn from_symmetric(m: Matrix) -> Result<Self> {
        if m.rows() != m.cols() {
            return Err(Error::DimensionMismatch {
                expected: m.rows(),
                found: m.cols(),
            });
        }
        for i in 0..m.rows() {
            for j in 0..i {
                if m.get(i, j) != m.get(j, i) {
                    return Err(Error::InvalidParameter {
                        name: "gram_symmetry",
                        value: m.get(i, j),
                    });
                }
            }
        }
        Ok(GramMatrix(m))
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn se_default() -> KernelSpec {
        KernelSpec::squared_exponential(4.21, 3.59).unwrap()
    }

    #[test]
    fn se_at_zero_distance_is_amplitude_squared() {
        let k = se_default();
        let v = k.eval(&[1.3], &[1.3]).unwrap();
        assert!((v - 17.7241).abs() < 1e-12);
    }

    #[test]
    fn se_at_one_lengthscale() {
        let k = se_default();
        let v = k.eval(&[0.0], &[3.59]).unwrap();
        let expected = 4.21f64.powi(2) * (-0.5f64).exp();
        assert!((v - expected).abs() < 1e-12);
        assert!((v - 10.7500).abs() < 1e-3);
        assert!(k.eval(&[0.0], &[1e3]).unwrap() < 1e-300);
    }

    #[test]
    fn finite_feature_inner_product() {
        let map = FeatureMap::new(2, |x| vec![1.0, x[0]]).unwrap();
        let k = KernelSpec::finite_feature(map);
        assert_eq!(k.eval(&[2.0], &[3.0]).unwrap(), 7.0);
    }

    #[test]
    fn feature_map_wrong_length_rejected() {
        let map = FeatureMap::new(3, |x| vec![x[0]]).unwrap();
        let k = KernelSpec::finite_feature(map);
        assert!(matches!(
            k.eval(&[1.0], &[1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn dimension_mismatch_is_error() {
        let k = se_default();
        assert_eq!(
            k.eval(&[0.0, 1.0], &[0.0]),
            Err(Error::DimensionMismatch {
                expected: 2,
                found: 1
            })
        );
        let xs = Points::from_scalars(&[0.0]);
        assert!(k.vector(&xs, &[0.0, 0.0]).is_err());
    }

    #[test]
    fn invalid_hyperparameters() {
        assert!(KernelSpec::squared_exponential(0.0, 1.0).is_err());
        assert!(KernelSpec::squared_exponential(1.0, -1.0).is_err());
        assert!(KernelSpec::squared_exponential(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn gram_small_cases() {
        let k = se_default();
        let empty = k.gram(&Points::new(1)).unwrap();
        assert_eq!(empty.dim(), 0);
        let one = k.gram(&Points::from_scalars(&[0.7])).unwrap();
        assert_eq!(one.matrix().get(0, 0), 4.21 * 4.21);
        let two = k.gram(&Points::from_scalars(&[0.0, 3.59])).unwrap();
        assert!((two.matrix().get(0, 0) - 17.7241).abs() < 1e-12);
        assert!((two.matrix().get(0, 1) - 10.7500).abs() < 1e-3);
        assert_eq!(two.matrix().get(0, 1), two.matrix().get(1, 0));
    }

    #[test]
    fn kernel_vector_cases() {
        let k = se_default();
        assert!(k.vector(&Points::new(1), &[0.0]).unwrap().is_empty());
        let xs = Points::from_scalars(&[0.0]);
        let v = k.vector(&xs, &[3.59]).unwrap();
        assert!((v[0] - 10.7500).abs() < 1e-3);
        let xs = Points::from_scalars(&[2.0, -1.0]);
        assert_eq!(k.vector(&xs, &[2.0]).unwrap()[0], 4.21 * 4.21);
    }

    #[test]
    fn cross_matches_vector() {
        let k = se_default();
        let xs = Points::from_scalars(&[-1.0, 0.5, 2.0]);
        let ps = Points::from_scalars(&[0.0, 4.0]);
        let c = k.cross(&xs, &ps).unwrap();
        for (g, p) in ps.iter().enumerate() {
            let v = k.vector(&xs, p).unwrap();
            for i in 0..3 {
                assert_eq!(c[i * 2 + g], v[i]);
            }
        }
    }

    #[test]
    fn rkhs_norm_cases() {
        let k = se_default();
        let z = Points::from_scalars(&[0.0, 1.5]);
        assert_eq!(k.rkhs_norm_of_expansion(&z, &[0.0, 0.0]).unwrap(), 0.0);
        let z1 = Points::from_scalars(&[0.3]);
        assert!((k.rkhs_norm_of_expansion(&z1, &[1.0]).unwrap() - 4.21).abs() < 1e-12);
        // Explicit 2×2 quadratic form.
        let c = [0.8, -1.7];
        let k00 = k.eval(&[0.0], &[0.0]).unwrap();
        let k01 = k.eval(&[0.0], &[1.5]).unwrap();
        let k11 = k.eval(&[1.5], &[1.5]).unwrap();
        let brute = (c[0] * c[0] * k00 + 2.0 * c[0] * c[1] * k01 + c[1] * c[1] * k11).sqrt();
        assert!((k.rkhs_norm_of_expansion(&z, &c).unwrap() - brute).abs() < 1e-12);
        assert!(k.rkhs_norm_of_expansion(&z, &[1.0]).is_err());
    }
}
