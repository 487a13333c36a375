//! Covariance-matrix representation of Gaussian states.
//!
//! States are second-moment matrices over the interleaved quadratures with
//! vacuum variance 1/2. First moments are not tracked.

use nalgebra::{DMatrix, Matrix2};

use crate::basis::cradle_basis;
use crate::error::{Error, Result};
use crate::symplectic::{symplectic_form, SymplecticMatrix};

/// Heisenberg-bound slack applied when validating physicality.
pub const PHYSICALITY_SLACK: f64 = 1e-9;
/// Log-negativity above this threshold counts as an entangled pair.
pub const ENTANGLEMENT_THRESHOLD: f64 = 1e-9;

/// Symmetric second-moment matrix of a Gaussian state on `modes` modes.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    modes: usize,
    entries: DMatrix<f64>,
}

impl CovarianceMatrix {
    /// Validates symmetry and the Heisenberg bound, then wraps the matrix.
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        let (rows, cols) = entries.shape();
        if rows != cols || rows % 2 != 0 || rows == 0 {
            return Err(Error::BadDimension { rows, cols });
        }
        let asym = (&entries - entries.transpose())
            .iter()
            .fold(0.0f64, |a, x| a.max(x.abs()));
        if asym > 1e-12 {
            return Err(Error::NotSymmetric(asym));
        }
        let nus = symplectic_eigenvalues(&entries)?;
        if let Some(min) = nus.last() {
            if *min < 0.5 - PHYSICALITY_SLACK {
                return Err(Error::Unphysical(*min));
            }
        }
        Ok(Self {
            modes: rows / 2,
            entries,
        })
    }

    pub(crate) fn new_unchecked(entries: DMatrix<f64>) -> Self {
        Self {
            modes: entries.nrows() / 2,
            entries,
        }
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

    /// 2x2 block for the quadratures of 1-based mode `n`.
    pub fn mode_block(&self, n: usize) -> Matrix2<f64> {
        let o = 2 * (n - 1);
        Matrix2::new(
            self.entries[(o, o)],
            self.entries[(o, o + 1)],
            self.entries[(o + 1, o)],
            self.entries[(o + 1, o + 1)],
        )
    }

    pub fn symplectic_eigenvalues(&self) -> Vec<f64> {
        symplectic_eigenvalues(&self.entries).expect("validated symmetric")
    }
}

/// Vacuum state (1/2) * identity on `m` modes.
pub fn vacuum_state(m: usize) -> CovarianceMatrix {
    CovarianceMatrix::new_unchecked(DMatrix::identity(2 * m, 2 * m) * 0.5)
}

/// Congruence action sigma -> M sigma M^T of a symplectic transformation.
pub fn apply_symplectic(sigma: &CovarianceMatrix, m: &SymplecticMatrix) -> Result<CovarianceMatrix> {
    if sigma.modes() != m.modes() {
        return Err(Error::DimensionMismatch {
            left: 2 * sigma.modes(),
            right: 2 * m.modes(),
        });
    }
    let raw = m.matrix() * sigma.matrix() * m.matrix().transpose();
    // Symmetrize to absorb roundoff drift.
    let sym = (&raw + raw.transpose()) * 0.5;
    Ok(CovarianceMatrix::new_unchecked(sym))
}

fn symmetric_sqrt(sigma: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = sigma.clone().symmetric_eigen();
    let n = sigma.nrows();
    let mut out = DMatrix::zeros(n, n);
    for k in 0..n {
        let lam = eig.eigenvalues[k].max(0.0).sqrt();
        let v = eig.eigenvectors.column(k);
        for r in 0..n {
            for c in 0..n {
                out[(r, c)] += lam * v[r] * v[c];
            }
        }
    }
    out
}

/// Symplectic eigenvalues of a symmetric matrix, deduplicated into one value
/// per mode, descending.
///
/// Computed as the singular values of sigma^(1/2) J sigma^(1/2), which come
/// in equal pairs.
pub fn symplectic_eigenvalues(sigma: &DMatrix<f64>) -> Result<Vec<f64>> {
    let (rows, cols) = sigma.shape();
    if rows != cols || rows % 2 != 0 || rows == 0 {
        return Err(Error::BadDimension { rows, cols });
    }
    let asym = (sigma - sigma.transpose())
        .iter()
        .fold(0.0f64, |a, x| a.max(x.abs()));
    if asym > 1e-12 {
        return Err(Error::NotSymmetric(asym));
    }
    let root = symmetric_sqrt(sigma);
    let j = symplectic_form(rows / 2)?;
    let a = &root * j * &root;
    let mut sv: Vec<f64> = a.singular_values().iter().copied().collect();
    sv.sort_by(|x, y| y.partial_cmp(x).unwrap());
    Ok(sv.into_iter().step_by(2).collect())
}

/// Converts a site-basis covariance on N modes to the cradle basis,
/// returning the leading (N-1)-mode block and the trailing total-displacement
/// 2x2 block separately.
pub fn site_to_cradle(sigma_site: &CovarianceMatrix) -> Result<(CovarianceMatrix, Matrix2<f64>)> {
    let n = sigma_site.modes();
    if n < 2 {
        return Err(Error::ChainTooShort(n));
    }
    let basis = cradle_basis(n)?;
    let c = basis.phase_space_matrix();
    let full = c * sigma_site.matrix() * c.transpose();
    let lead = full.view((0, 0), (2 * n - 2, 2 * n - 2)).clone_owned();
    let o = 2 * n - 2;
    let sum = Matrix2::new(
        full[(o, o)],
        full[(o, o + 1)],
        full[(o + 1, o)],
        full[(o + 1, o + 1)],
    );
    Ok((CovarianceMatrix::new_unchecked(lead), sum))
}

/// Inverse of [`site_to_cradle`] for states with no cradle/sum correlations,
/// which is every state reachable by spring couplings from vacuum.
pub fn cradle_to_site(
    sigma_cradle: &CovarianceMatrix,
    sum_block: &Matrix2<f64>,
) -> Result<CovarianceMatrix> {
    let n = sigma_cradle.modes() + 1;
    let basis = cradle_basis(n)?;
    let c = basis.phase_space_matrix();
    let mut full = DMatrix::zeros(2 * n, 2 * n);
    full.view_mut((0, 0), (2 * n - 2, 2 * n - 2))
        .copy_from(sigma_cradle.matrix());
    let o = 2 * n - 2;
    for r in 0..2 {
        for k in 0..2 {
            full[(o + r, o + k)] = sum_block[(r, k)];
        }
    }
    let site = c.transpose() * full * c;
    let sym = (&site + site.transpose()) * 0.5;
    Ok(CovarianceMatrix::new_unchecked(sym))
}

/// Which two-site combination an ellipse describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EllipseKind {
    Sum,
    Difference,
}

impl EllipseKind {
    pub fn label(&self) -> &'static str {
        match self {
            EllipseKind::Sum => "sum",
            EllipseKind::Difference => "difference",
        }
    }
}

/// Principal axes of a single 2x2 quadrature uncertainty ellipse.
#[derive(Debug, Clone, PartialEq)]
pub struct EllipseReport {
    /// 1-based site pair; equal entries denote a single-site ellipse.
    pub pair: (usize, usize),
    pub kind: EllipseKind,
    pub semi_major: f64,
    pub semi_minor: f64,
    /// Principal angle of the major axis in (-pi/2, pi/2]; 0 for circles.
    pub angle: f64,
}

fn ellipse_of_block(block: &Matrix2<f64>, pair: (usize, usize), kind: EllipseKind) -> EllipseReport {
    let a = block[(0, 0)];
    let b = 0.5 * (block[(0, 1)] + block[(1, 0)]);
    let c = block[(1, 1)];
    let mean = 0.5 * (a + c);
    let half_gap = (0.5 * (a - c)).hypot(b);
    let (lam_max, lam_min) = (mean + half_gap, (mean - half_gap).max(0.0));
    let angle = if half_gap < 1e-12 * mean.max(1.0) {
        0.0
    } else {
        let mut t = 0.5 * (2.0 * b).atan2(a - c);
        if t <= -std::f64::consts::FRAC_PI_2 {
            t += std::f64::consts::PI;
        }
        t
    };
    EllipseReport {
        pair,
        kind,
        semi_major: lam_max.sqrt(),
        semi_minor: lam_min.sqrt(),
        angle,
    }
}

fn two_site_block(sigma: &DMatrix<f64>, n: usize, m: usize, sign: f64) -> Matrix2<f64> {
    let (on, om) = (2 * (n - 1), 2 * (m - 1));
    let b = |r: usize, c: usize| {
        0.5 * (sigma[(on + r, on + c)]
            + sigma[(om + r, om + c)]
            + sign * sigma[(on + r, om + c)]
            + sign * sigma[(om + r, on + c)])
    };
    Matrix2::new(b(0, 0), b(0, 1), b(1, 0), b(1, 1))
}

/// Uncertainty ellipses for the sum and difference coordinates of sites n, m.
///
/// For n == m the single-site ellipse is returned (as a sum entry) and no
/// difference ellipse exists.
pub fn pair_ellipses(
    sigma_site: &CovarianceMatrix,
    n: usize,
    m: usize,
) -> Result<(EllipseReport, Option<EllipseReport>)> {
    let modes = sigma_site.modes();
    for site in [n, m] {
        if site == 0 || site > modes {
            return Err(Error::SiteOutOfRange { site, max: modes });
        }
    }
    if n == m {
        let block = sigma_site.mode_block(n);
        return Ok((ellipse_of_block(&block, (n, n), EllipseKind::Sum), None));
    }
    let sum = two_site_block(sigma_site.matrix(), n, m, 1.0);
    let diff = two_site_block(sigma_site.matrix(), n, m, -1.0);
    Ok((
        ellipse_of_block(&sum, (n, m), EllipseKind::Sum),
        Some(ellipse_of_block(&diff, (n, m), EllipseKind::Difference)),
    ))
}

/// Logarithmic negativity of the reduced two-site state of sites n, m.
///
/// The partial transpose flips the momentum sign of the second site; the
/// result is max(0, -ln(2 nu_min)) from its smaller symplectic eigenvalue.
pub fn log_negativity(sigma_site: &CovarianceMatrix, n: usize, m: usize) -> Result<f64> {
    let modes = sigma_site.modes();
    for site in [n, m] {
        if site == 0 || site > modes {
            return Err(Error::SiteOutOfRange { site, max: modes });
        }
    }
    if n == m {
        return Err(Error::DimensionMismatch { left: n, right: m });
    }
    let sigma = sigma_site.matrix();
    let idx = [2 * (n - 1), 2 * (n - 1) + 1, 2 * (m - 1), 2 * (m - 1) + 1];
    let mut reduced = DMatrix::zeros(4, 4);
    for r in 0..4 {
        for c in 0..4 {
            reduced[(r, c)] = sigma[(idx[r], idx[c])];
        }
    }
    // Momentum sign flip on the second site.
    for k in 0..4 {
        reduced[(3, k)] = -reduced[(3, k)];
        reduced[(k, 3)] = -reduced[(k, 3)];
    }
    let nus = symplectic_eigenvalues(&reduced)?;
    let nu_min = *nus.last().expect("two-mode spectrum");
    Ok((-(2.0 * nu_min).ln()).max(0.0))
}

/// Number of unordered site pairs whose log-negativity exceeds `threshold`.
pub fn entangled_pair_count(sigma_site: &CovarianceMatrix, threshold: f64) -> usize {
    let modes = sigma_site.modes();
    let mut count = 0;
    for n in 1..=modes {
        for m in (n + 1)..=modes {
            if log_negativity(sigma_site, n, m).expect("sites in range") > threshold {
                count += 1;
            }
        }
    }
    count
}
