//! Real symplectic matrices under the interleaved quadrature convention.
//!
//! The phase-space vector is ordered (x1, p1, x2, p2, ...) and the symplectic
//! form is the block diagonal of [[0, 1], [-1, 0]]. The vacuum variance is 1/2
//! per quadrature. Every module in the crate references this one convention.

use nalgebra::{DMatrix, Matrix2};

use crate::error::{Error, Result};

/// Absolute max-norm tolerance for symplectic membership.
pub const TOL_SYM: f64 = 1e-9;
/// Tolerance for decomposition round trips.
pub const TOL_RECON: f64 = 1e-9;
/// Vacuum variance per quadrature.
pub const VACUUM_VARIANCE: f64 = 0.5;

/// Diagonal squeeze generator s1 = [[1, 0], [0, -1]].
pub fn s1() -> Matrix2<f64> {
    Matrix2::new(1.0, 0.0, 0.0, -1.0)
}

/// Off-diagonal squeeze generator s2 = [[0, 1], [1, 0]].
pub fn s2() -> Matrix2<f64> {
    Matrix2::new(0.0, 1.0, 1.0, 0.0)
}

/// Rotation generator s3 = [[0, -1], [1, 0]].
pub fn s3() -> Matrix2<f64> {
    Matrix2::new(0.0, -1.0, 1.0, 0.0)
}

/// One of the three sp(2, R) generators, indexed 1..=3.
pub fn sp2_generator(i: usize) -> Result<Matrix2<f64>> {
    match i {
        1 => Ok(s1()),
        2 => Ok(s2()),
        3 => Ok(s3()),
        _ => Err(Error::GeneratorIndex(i)),
    }
}

/// The symplectic form J of size 2m x 2m.
pub fn symplectic_form(m: usize) -> Result<DMatrix<f64>> {
    if m == 0 {
        return Err(Error::ZeroModes);
    }
    let mut j = DMatrix::zeros(2 * m, 2 * m);
    for k in 0..m {
        j[(2 * k, 2 * k + 1)] = 1.0;
        j[(2 * k + 1, 2 * k)] = -1.0;
    }
    Ok(j)
}

/// Max-norm defect of the symplectic condition, ||M^T J M - J||_max.
pub fn symplectic_defect(m: &DMatrix<f64>) -> Result<f64> {
    let (rows, cols) = m.shape();
    if rows != cols || rows % 2 != 0 {
        return Err(Error::BadDimension { rows, cols });
    }
    if rows == 0 {
        return Ok(0.0);
    }
    let j = symplectic_form(rows / 2)?;
    let defect = m.transpose() * &j * m - j;
    Ok(defect.iter().fold(0.0f64, |a, x| a.max(x.abs())))
}

/// Whether M satisfies the symplectic condition within `tol`.
pub fn is_symplectic(m: &DMatrix<f64>, tol: f64) -> Result<bool> {
    Ok(symplectic_defect(m)? <= tol)
}

/// A validated real symplectic matrix on `modes` modes.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticMatrix {
    modes: usize,
    entries: DMatrix<f64>,
}

impl SymplecticMatrix {
    /// Validates the symplectic condition at `tol` and wraps the matrix.
    pub fn new(entries: DMatrix<f64>, tol: f64) -> Result<Self> {
        let defect = symplectic_defect(&entries)?;
        if defect > tol {
            return Err(Error::NotSymplectic { defect, tol });
        }
        Ok(Self {
            modes: entries.nrows() / 2,
            entries,
        })
    }

    /// Wraps without checking. Callers must guarantee the invariant.
    pub(crate) fn new_unchecked(entries: DMatrix<f64>) -> Self {
        Self {
            modes: entries.nrows() / 2,
            entries,
        }
    }

    pub fn identity(modes: usize) -> Self {
        Self {
            modes,
            entries: DMatrix::identity(2 * modes, 2 * modes),
        }
    }

    pub fn from_sp2(s: &Matrix2<f64>, tol: f64) -> Result<Self> {
        Self::new(DMatrix::from_fn(2, 2, |r, c| s[(r, c)]), tol)
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.entries
    }

    pub fn defect(&self) -> f64 {
        symplectic_defect(&self.entries).expect("validated shape")
    }
}

/// Rotation by `theta`: exp(theta * s3) = [[cos, -sin], [sin, cos]].
pub fn rotation(theta: f64) -> Matrix2<f64> {
    let (s, c) = theta.sin_cos();
    Matrix2::new(c, -s, s, c)
}

/// Axis-aligned squeeze diag(e^r, e^-r).
pub fn squeeze(r: f64) -> Matrix2<f64> {
    Matrix2::new(r.exp(), 0.0, 0.0, (-r).exp())
}

/// Wraps an angle into (-pi, pi].
pub fn wrap_angle(theta: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let mut t = theta % two_pi;
    if t <= -std::f64::consts::PI {
        t += two_pi;
    } else if t > std::f64::consts::PI {
        t -= two_pi;
    }
    t
}

// cosh-like and sinh-like parts of exp on the generator discriminant.
// c(d) = sum d^k/(2k)!, s(d) = sum d^k/(2k+1)!; series used near d = 0.
fn cs_pair(d: f64) -> (f64, f64) {
    if d.abs() < 1e-12 {
        let c = 1.0 + d / 2.0 + d * d / 24.0 + d * d * d / 720.0;
        let s = 1.0 + d / 6.0 + d * d / 120.0 + d * d * d / 5040.0;
        (c, s)
    } else if d > 0.0 {
        let w = d.sqrt();
        (w.cosh(), w.sinh() / w)
    } else {
        let w = (-d).sqrt();
        (w.cos(), w.sin() / w)
    }
}

/// exp(alpha s1 + beta s2 + gamma s3), in closed form.
///
/// Uses the Cayley-Hamilton split on the discriminant alpha^2 + beta^2 -
/// gamma^2, with a series fallback near the degenerate (parabolic) case.
pub fn sp2_exp(alpha: f64, beta: f64, gamma: f64) -> Matrix2<f64> {
    let x = Matrix2::new(alpha, beta - gamma, beta + gamma, -alpha);
    let d = alpha * alpha + beta * beta - gamma * gamma;
    let (c, s) = cs_pair(d);
    Matrix2::identity() * c + x * s
}

/// Result of a 2x2 symplectic logarithm.
#[derive(Debug, Clone, PartialEq)]
pub enum Sp2Log {
    /// S = exp(alpha s1 + beta s2 + gamma s3).
    Single { alpha: f64, beta: f64, gamma: f64 },
    /// No single real logarithm exists (trace <= -2); the two exponent
    /// triples multiply (first factor leftmost) to S.
    Double([(f64, f64, f64); 2]),
}

// Extract (alpha, beta, gamma) from a traceless generator matrix.
fn exponent_coords(x: &Matrix2<f64>) -> (f64, f64, f64) {
    (
        (x[(0, 0)] - x[(1, 1)]) / 2.0,
        (x[(0, 1)] + x[(1, 0)]) / 2.0,
        (x[(1, 0)] - x[(0, 1)]) / 2.0,
    )
}

// Principal logarithm of a 2x2 symplectic matrix with trace > -2.
fn sp2_principal_log(s: &Matrix2<f64>) -> (f64, f64, f64) {
    let t = (s[(0, 0)] + s[(1, 1)]) / 2.0;
    let w = *s - Matrix2::identity() * t;
    // X = f(t) * W with f = u/sinh(u), cosh(u) = t (trace > 2) or
    // f = theta/sin(theta), cos(theta) = t (|trace| < 2).
    let e = t - 1.0;
    let f = if e.abs() < 1e-6 {
        1.0 - e / 3.0 + 2.0 * e * e / 15.0
    } else if t > 1.0 {
        let u = (t + (t * t - 1.0).sqrt()).ln();
        u / u.sinh()
    } else {
        let theta = t.clamp(-1.0, 1.0).acos();
        theta / theta.sin()
    };
    exponent_coords(&(w * f))
}

/// Logarithm of a 2x2 symplectic matrix.
///
/// For trace > -2 a single real exponent triple is returned. Otherwise no
/// real logarithm exists in one factor and a two-factor split is returned.
pub fn sp2_log(s: &Matrix2<f64>) -> Result<Sp2Log> {
    let d = DMatrix::from_fn(2, 2, |r, c| s[(r, c)]);
    let defect = symplectic_defect(&d)?;
    if defect > TOL_SYM {
        return Err(Error::NotSymplectic {
            defect,
            tol: TOL_SYM,
        });
    }
    let trace = s[(0, 0)] + s[(1, 1)];
    if trace > -2.0 + 1e-12 {
        let (alpha, beta, gamma) = sp2_principal_log(s);
        return Ok(Sp2Log::Single { alpha, beta, gamma });
    }
    let half_pi = std::f64::consts::FRAC_PI_2;
    if (s + Matrix2::identity()).norm() < 1e-9 {
        // -identity: split into two quarter rotations.
        return Ok(Sp2Log::Double([(0.0, 0.0, half_pi), (0.0, 0.0, half_pi)]));
    }
    // S = R(pi) * (-S), and -S has trace >= 2, hence a real logarithm.
    let neg = -*s;
    let (alpha, beta, gamma) = sp2_principal_log(&neg);
    Ok(Sp2Log::Double([
        (0.0, 0.0, std::f64::consts::PI),
        (alpha, beta, gamma),
    ]))
}

/// Euler (rotation-squeeze-rotation) decomposition of a 2x2 symplectic matrix.
///
/// Returns (theta1, r, theta2) with r >= 0 and angles in (-pi, pi] such that
/// rotation(theta1) * diag(e^r, e^-r) * rotation(theta2) reproduces the input.
/// A pure rotation reports r = 0 and theta2 = 0.
pub fn euler_decompose(s: &Matrix2<f64>) -> Result<(f64, f64, f64)> {
    let d = DMatrix::from_fn(2, 2, |r, c| s[(r, c)]);
    let defect = symplectic_defect(&d)?;
    if defect > TOL_SYM {
        return Err(Error::NotSymplectic {
            defect,
            tol: TOL_SYM,
        });
    }
    let p = s * s.transpose();
    let half_gap = ((p[(0, 0)] - p[(1, 1)]) / 2.0).hypot(p[(0, 1)]);
    let mean = (p[(0, 0)] + p[(1, 1)]) / 2.0;
    let lam_max = mean + half_gap;
    if half_gap < 1e-14 * mean.max(1.0) {
        // Pure rotation; fold everything into theta1.
        let theta1 = wrap_angle(s[(1, 0)].atan2(s[(0, 0)]));
        return Ok((theta1, 0.0, 0.0));
    }
    let r = 0.5 * lam_max.ln();
    let theta1 = 0.5 * (2.0 * p[(0, 1)]).atan2(p[(0, 0)] - p[(1, 1)]);
    let q = squeeze(-r) * rotation(theta1).transpose() * s;
    let theta2 = wrap_angle(q[(1, 0)].atan2(q[(0, 0)]));
    Ok((wrap_angle(theta1), r, theta2))
}

/// Spectral norm (largest singular value) via the symmetric eigenproblem.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let gram = m.transpose() * m;
    let eig = gram.symmetric_eigen();
    eig.eigenvalues
        .iter()
        .fold(0.0f64, |a, x| a.max(x.max(0.0)))
        .sqrt()
}

/// Max-norm of a matrix.
pub fn max_norm(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |a, x| a.max(x.abs()))
}
