//! Squeezed pseudo-phonon targets.
//!
//! Pseudo-phonon modes are the discrete-Fourier collective modes of the
//! finite chain, with crystal momentum 2 pi k / N. Squeezing one of them (or
//! correlating a pair) produces a highly non-local Gaussian state; the k = 0
//! mode is the conserved total displacement and cannot be targeted.

use nalgebra::DMatrix;

use crate::basis::cradle_basis;
use crate::error::{Error, Result};
use crate::symplectic::{symplectic_defect, SymplecticMatrix};

/// Target transformation squeezing phonon modes k1, k2 by xi.
///
/// k1 == k2 squeezes a single phonon mode; distinct indices produce a
/// two-mode squeezed phonon pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhononTarget {
    pub chain_length: usize,
    pub k1: i64,
    pub k2: i64,
    pub xi: f64,
}

/// Allowed phonon index range for a chain of length n:
/// -n/2+1 ..= n/2 for even n, -(n-1)/2 ..= (n-1)/2 for odd n.
pub fn phonon_index_range(n: usize) -> (i64, i64) {
    let n = n as i64;
    if n % 2 == 0 {
        (-n / 2 + 1, n / 2)
    } else {
        (-(n - 1) / 2, (n - 1) / 2)
    }
}

impl PhononTarget {
    pub fn new(chain_length: usize, k1: i64, k2: i64, xi: f64) -> Result<Self> {
        if chain_length < 2 {
            return Err(Error::ChainTooShort(chain_length));
        }
        if xi < 0.0 {
            return Err(Error::NegativeSqueeze(xi));
        }
        let (lo, hi) = phonon_index_range(chain_length);
        for k in [k1, k2] {
            if k == 0 {
                return Err(Error::ZeroModeTargeted);
            }
            if k < lo || k > hi {
                return Err(Error::BadPhononIndex {
                    k,
                    n: chain_length,
                });
            }
        }
        Ok(Self {
            chain_length,
            k1,
            k2,
            xi,
        })
    }
}

/// Real orthogonal-symplectic 2N x 2N matrix mapping site quadratures to
/// phonon quadratures, modes ordered by ascending k.
///
/// Row pair for k at site n carries the rotation block by 2 pi k n / N over
/// sqrt(N); the k = 0 rows are the uniform total displacement.
pub fn phonon_mode_matrix(n: usize) -> Result<DMatrix<f64>> {
    if n < 2 {
        return Err(Error::ChainTooShort(n));
    }
    let (lo, hi) = phonon_index_range(n);
    let scale = 1.0 / (n as f64).sqrt();
    let mut r = DMatrix::zeros(2 * n, 2 * n);
    for (slot, k) in (lo..=hi).enumerate() {
        for site in 1..=n {
            let theta = std::f64::consts::TAU * (k as f64) * (site as f64) / (n as f64);
            let (s, c) = theta.sin_cos();
            let (row, col) = (2 * slot, 2 * (site - 1));
            r[(row, col)] = c * scale;
            r[(row, col + 1)] = -s * scale;
            r[(row + 1, col)] = s * scale;
            r[(row + 1, col + 1)] = c * scale;
        }
    }
    Ok(r)
}

/// Builds the cradle-basis symplectic matrix realizing the phonon target.
///
/// The transformation is assembled in the phonon frame (cosh on the targeted
/// quadratures, -sinh cross terms fixing the squeezing orientation),
/// certified to leave the k = 0 sector untouched, conjugated into the cradle
/// basis, and truncated to the controllable N-1 modes.
pub fn phonon_target_symplectic(target: &PhononTarget) -> Result<SymplecticMatrix> {
    let n = target.chain_length;
    let (lo, _) = phonon_index_range(n);
    let slot = |k: i64| 2 * (k - lo) as usize;
    let (c, s) = (target.xi.cosh(), target.xi.sinh());

    let mut q = DMatrix::identity(2 * n, 2 * n);
    let (a, b) = (slot(target.k1), slot(target.k2));
    // x_k1' = c x_k1 - s p_k2, p_k1' = c p_k1 - s x_k2, and symmetrically.
    q[(a, a)] = c;
    q[(a + 1, a + 1)] = c;
    q[(b, b)] = c;
    q[(b + 1, b + 1)] = c;
    if a == b {
        q[(a, a + 1)] = -s;
        q[(a + 1, a)] = -s;
    } else {
        q[(a, b + 1)] = -s;
        q[(a + 1, b)] = -s;
        q[(b, a + 1)] = -s;
        q[(b + 1, a)] = -s;
    }

    let r = phonon_mode_matrix(n)?;
    let site = r.transpose() * &q * &r;

    // The k = 0 sector must decouple exactly.
    let zero = slot(0);
    let mut defect = 0.0f64;
    for col in 0..2 * n {
        for row in [zero, zero + 1] {
            let expect = if row == col { 1.0 } else { 0.0 };
            defect = defect.max((q[(row, col)] - expect).abs());
            defect = defect.max((q[(col, row)] - expect).abs());
        }
    }
    if defect > 1e-10 {
        return Err(Error::ZeroModeCoupling(defect));
    }

    let sym_defect = symplectic_defect(&site)?;
    if sym_defect > 1e-10 {
        return Err(Error::NotSymplectic {
            defect: sym_defect,
            tol: 1e-10,
        });
    }

    let basis = cradle_basis(n)?;
    let cps = basis.phase_space_matrix();
    let cradle = cps * site * cps.transpose();
    let dim = 2 * n - 2;
    let mut tail_defect = 0.0f64;
    for k in 0..2 * n {
        for r in dim..2 * n {
            let er = if r == k { 1.0 } else { 0.0 };
            tail_defect = tail_defect.max((cradle[(r, k)] - er).abs());
            tail_defect = tail_defect.max((cradle[(k, r)] - er).abs());
        }
    }
    if tail_defect > 1e-10 {
        return Err(Error::ZeroModeCoupling(tail_defect));
    }
    let lead = cradle.view((0, 0), (dim, dim)).clone_owned();
    SymplecticMatrix::new(lead, 1e-9)
}
