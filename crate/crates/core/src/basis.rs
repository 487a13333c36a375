//! Cradle-mode basis machinery.
//!
//! The cradle basis replaces the N site coordinates with N-1 collective modes
//! plus the total displacement. Cradle mode j moves the first j oscillators in
//! phase with amplitude 1/sqrt(j(j+1)) and oscillator j+1 against them with
//! amplitude sqrt(j/(j+1)); the last row is the uniform total displacement.
//! A spring coupling at site n acts on cradle modes n-1 and n only, through
//! the block-diagonal embedding `embed_coupling`.

use nalgebra::{DMatrix, Matrix2, Matrix4};

use crate::error::{Error, Result};
use crate::symplectic::{sp2_generator, symplectic_defect, SymplecticMatrix, TOL_SYM};

/// Orthogonal change of basis between site and cradle coordinates.
#[derive(Debug, Clone)]
pub struct CradleBasis {
    n_oscillators: usize,
    position: DMatrix<f64>,
    phase_space: DMatrix<f64>,
}

impl CradleBasis {
    pub fn n_oscillators(&self) -> usize {
        self.n_oscillators
    }

    /// N x N orthogonal matrix; rows 1..N-1 are cradle modes, row N is the
    /// total displacement.
    pub fn position_matrix(&self) -> &DMatrix<f64> {
        &self.position
    }

    /// 2N x 2N symplectic matrix applying the position matrix to both
    /// quadratures under the interleaved ordering.
    pub fn phase_space_matrix(&self) -> &DMatrix<f64> {
        &self.phase_space
    }
}

/// Builds the cradle basis for a chain of N >= 2 oscillators.
pub fn cradle_basis(n: usize) -> Result<CradleBasis> {
    if n < 2 {
        return Err(Error::ChainTooShort(n));
    }
    let mut c = DMatrix::zeros(n, n);
    for j in 1..n {
        let amp = 1.0 / ((j * (j + 1)) as f64).sqrt();
        for site in 0..j {
            c[(j - 1, site)] = amp;
        }
        c[(j - 1, j)] = -(j as f64 / (j + 1) as f64).sqrt();
    }
    let uniform = 1.0 / (n as f64).sqrt();
    for site in 0..n {
        c[(n - 1, site)] = uniform;
    }
    let mut ps = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for k in 0..n {
            ps[(2 * i, 2 * k)] = c[(i, k)];
            ps[(2 * i + 1, 2 * k + 1)] = c[(i, k)];
        }
    }
    Ok(CradleBasis {
        n_oscillators: n,
        position: c,
        phase_space: ps,
    })
}

/// The 4x4 coupling block P_n(S) for a site n > 1.
pub fn p_block(n: usize, s: &Matrix2<f64>) -> Matrix4<f64> {
    let nf = n as f64;
    let a = (nf + 1.0) / (2.0 * nf);
    let b = (nf - 1.0) / (2.0 * nf);
    let c = (nf * nf - 1.0).sqrt() / (2.0 * nf);
    let id = Matrix2::identity();
    let tl = id * a + s * b;
    let off = (id - s) * c;
    let br = id * b + s * a;
    let mut p = Matrix4::zeros();
    p.fixed_view_mut::<2, 2>(0, 0).copy_from(&tl);
    p.fixed_view_mut::<2, 2>(0, 2).copy_from(&off);
    p.fixed_view_mut::<2, 2>(2, 0).copy_from(&off);
    p.fixed_view_mut::<2, 2>(2, 2).copy_from(&br);
    p
}

/// A single-site coupling embedded into the cradle-mode phase space.
#[derive(Debug, Clone)]
pub struct EmbeddedCoupling {
    pub site: usize,
    pub inner: Matrix2<f64>,
    pub matrix: SymplecticMatrix,
}

/// Embeds the Sp(2, R) action `s` of the spring at site `n` (acting on the
/// relative coordinates of oscillators n, n+1) into the 2(N-1)-dimensional
/// cradle phase space.
pub fn embed_coupling(n: usize, s: &Matrix2<f64>, chain_length: usize) -> Result<EmbeddedCoupling> {
    if chain_length < 2 {
        return Err(Error::ChainTooShort(chain_length));
    }
    let n_modes = chain_length - 1;
    if n == 0 || n > n_modes {
        return Err(Error::SiteOutOfRange {
            site: n,
            max: n_modes,
        });
    }
    let d2 = DMatrix::from_fn(2, 2, |r, c| s[(r, c)]);
    let defect = symplectic_defect(&d2)?;
    if defect > TOL_SYM {
        return Err(Error::NotSymplectic {
            defect,
            tol: TOL_SYM,
        });
    }
    let mut m = DMatrix::identity(2 * n_modes, 2 * n_modes);
    if n == 1 {
        m.view_mut((0, 0), (2, 2)).copy_from(&d2);
    } else {
        let p = p_block(n, s);
        let off = 2 * (n - 2);
        for r in 0..4 {
            for c in 0..4 {
                m[(off + r, off + c)] = p[(r, c)];
            }
        }
    }
    Ok(EmbeddedCoupling {
        site: n,
        inner: *s,
        matrix: SymplecticMatrix::new_unchecked(m),
    })
}

// Checks membership in span{s1, s2, s3} (the traceless 2x2 matrices) and
// returns the residual trace magnitude.
fn span_residual(s: &Matrix2<f64>) -> f64 {
    (s[(0, 0)] + s[(1, 1)]).abs()
}

/// The generator d_n(s) of the embedded coupling, a 2*n_modes square matrix.
///
/// For n = 1 this is `s` in the top-left corner; for n > 1 the only nonzero
/// entries are the 4x4 block (1/2n) [[(n-1)s, -sqrt(n^2-1)s], [-sqrt(n^2-1)s,
/// (n+1)s]] on the diagonal at modes n-1, n.
pub fn generator(n: usize, s: &Matrix2<f64>, n_modes: usize) -> Result<DMatrix<f64>> {
    if n_modes == 0 {
        return Err(Error::ZeroModes);
    }
    if n == 0 || n > n_modes {
        return Err(Error::SiteOutOfRange {
            site: n,
            max: n_modes,
        });
    }
    let residual = span_residual(s);
    if residual > 1e-12 {
        return Err(Error::OutsideGeneratorSpan(residual));
    }
    let mut m = DMatrix::zeros(2 * n_modes, 2 * n_modes);
    if n == 1 {
        m.view_mut((0, 0), (2, 2))
            .copy_from(&DMatrix::from_fn(2, 2, |r, c| s[(r, c)]));
    } else {
        let nf = n as f64;
        let diag_lo = (nf - 1.0) / (2.0 * nf);
        let diag_hi = (nf + 1.0) / (2.0 * nf);
        let off = -(nf * nf - 1.0).sqrt() / (2.0 * nf);
        let base = 2 * (n - 2);
        for r in 0..2 {
            for c in 0..2 {
                let v = s[(r, c)];
                m[(base + r, base + c)] = diag_lo * v;
                m[(base + r, base + 2 + c)] = off * v;
                m[(base + 2 + r, base + c)] = off * v;
                m[(base + 2 + r, base + 2 + c)] = diag_hi * v;
            }
        }
    }
    Ok(m)
}

/// Commutator of the corner generator (s_i at mode n-1) with the coupling
/// block p_n(s_j), returned as the active 4x4 block.
///
/// Top-left ((n-1)/2n)[s_i, s_j], top-right -(sqrt(n^2-1)/2n) s_i s_j,
/// bottom-left +(sqrt(n^2-1)/2n) s_j s_i, bottom-right zero.
pub fn coupling_commutator(i: usize, j: usize, n: usize) -> Result<Matrix4<f64>> {
    if n < 2 {
        return Err(Error::SiteOutOfRange { site: n, max: 1 });
    }
    let si = sp2_generator(i)?;
    let sj = sp2_generator(j)?;
    let nf = n as f64;
    let root = (nf * nf - 1.0).sqrt() / (2.0 * nf);
    let comm = (si * sj - sj * si) * ((nf - 1.0) / (2.0 * nf));
    let tr = si * sj * (-root);
    let bl = sj * si * root;
    let mut out = Matrix4::zeros();
    out.fixed_view_mut::<2, 2>(0, 0).copy_from(&comm);
    out.fixed_view_mut::<2, 2>(0, 2).copy_from(&tr);
    out.fixed_view_mut::<2, 2>(2, 0).copy_from(&bl);
    Ok(out)
}

/// Outcome of the iterated commutator closure.
#[derive(Debug, Clone)]
pub struct LieClosure {
    /// Dimension of the generated Lie algebra.
    pub dimension: usize,
    /// Independent directions added per round (round 0 = the seed set).
    pub added_per_round: Vec<usize>,
}

// Modified Gram-Schmidt insertion. Returns true if the candidate carried a
// new independent direction. Vectors in `basis` are orthonormal.
fn mgs_insert(basis: &mut Vec<Vec<f64>>, candidate: &[f64], rel_tol: f64) -> bool {
    let scale = candidate
        .iter()
        .fold(0.0f64, |a, x| a + x * x)
        .sqrt()
        .max(1.0);
    let mut v = candidate.to_vec();
    for _ in 0..2 {
        for b in basis.iter() {
            let dot: f64 = b.iter().zip(v.iter()).map(|(x, y)| x * y).sum();
            for (vi, bi) in v.iter_mut().zip(b.iter()) {
                *vi -= dot * bi;
            }
        }
    }
    let norm: f64 = v.iter().fold(0.0f64, |a, x| a + x * x).sqrt();
    if norm <= rel_tol * scale {
        return false;
    }
    for vi in v.iter_mut() {
        *vi /= norm;
    }
    basis.push(v);
    true
}

fn vectorize(m: &DMatrix<f64>) -> Vec<f64> {
    m.as_slice().to_vec()
}

/// Closes a set of matrices under commutation, tracking the span dimension.
///
/// Each round orthonormalizes new commutators against the accumulated basis
/// by modified Gram-Schmidt; directions with relative singular content below
/// 1e-9 are discarded. Iteration stops after a full round adds nothing.
pub fn lie_closure(seed: &[DMatrix<f64>]) -> LieClosure {
    const REL_TOL: f64 = 1e-9;
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut members: Vec<DMatrix<f64>> = Vec::new();
    let mut added_per_round = Vec::new();

    let mut added = 0usize;
    for g in seed {
        if mgs_insert(&mut basis, &vectorize(g), REL_TOL) {
            members.push(g.clone());
            added += 1;
        }
    }
    added_per_round.push(added);

    let mut frontier_start = 0usize;
    loop {
        let frontier_end = members.len();
        let mut added = 0usize;
        for a in frontier_start..frontier_end {
            for b in 0..frontier_end {
                if a == b {
                    continue;
                }
                let comm = &members[a] * &members[b] - &members[b] * &members[a];
                if mgs_insert(&mut basis, &vectorize(&comm), REL_TOL) {
                    members.push(comm);
                    added += 1;
                }
            }
        }
        added_per_round.push(added);
        if added == 0 {
            break;
        }
        frontier_start = frontier_end;
    }
    LieClosure {
        dimension: basis.len(),
        added_per_round,
    }
}

/// Dimension of the Lie algebra generated by all coupling generators
/// {d_n(s_i) : 1 <= n <= n_modes, i in 1..=3}.
pub fn controllability_dimension(n_modes: usize) -> Result<usize> {
    if n_modes == 0 {
        return Err(Error::ZeroModes);
    }
    let mut seed = Vec::with_capacity(3 * n_modes);
    for n in 1..=n_modes {
        for i in 1..=3 {
            seed.push(generator(n, &sp2_generator(i)?, n_modes)?);
        }
    }
    Ok(lie_closure(&seed).dimension)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symplectic::{is_symplectic, max_norm, s1, sp2_exp};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    // Site-basis action of a spring at site n: the given 2x2 on the relative
    // plane of oscillators n, n+1, identity elsewhere.
    pub(crate) fn site_action(n: usize, s: &Matrix2<f64>, chain: usize) -> DMatrix<f64> {
        let dim = 2 * chain;
        let mut v = DMatrix::zeros(dim, 2);
        let inv = 1.0 / 2f64.sqrt();
        v[(2 * (n - 1), 0)] = inv;
        v[(2 * n, 0)] = -inv;
        v[(2 * (n - 1) + 1, 1)] = inv;
        v[(2 * n + 1, 1)] = -inv;
        let s_d = DMatrix::from_fn(2, 2, |r, c| s[(r, c)]);
        DMatrix::identity(dim, dim) + &v * (s_d - DMatrix::identity(2, 2)) * v.transpose()
    }

    fn random_sp2(rng: &mut ChaCha8Rng) -> Matrix2<f64> {
        sp2_exp(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        )
    }

    #[test]
    fn cradle_rows() {
        let b = cradle_basis(2).unwrap();
        let inv = 1.0 / 2f64.sqrt();
        let c = b.position_matrix();
        assert!((c[(0, 0)] - inv).abs() < 1e-15);
        assert!((c[(0, 1)] + inv).abs() < 1e-15);
        assert!((c[(1, 0)] - inv).abs() < 1e-15);
        assert!((c[(1, 1)] - inv).abs() < 1e-15);

        for n in 2..=9 {
            let b = cradle_basis(n).unwrap();
            let c = b.position_matrix();
            let uniform = 1.0 / (n as f64).sqrt();
            for site in 0..n {
                assert!((c[(n - 1, site)] - uniform).abs() < 1e-15);
            }
            let gram = c.transpose() * c;
            assert!(max_norm(&(gram - DMatrix::identity(n, n))) < 1e-14);
            assert!(is_symplectic(b.phase_space_matrix(), 1e-12).unwrap());
        }
        assert!(cradle_basis(1).is_err());
    }

    #[test]
    fn embed_corner_and_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = random_sp2(&mut rng);
        let e = embed_coupling(1, &s, 4).unwrap();
        let m = e.matrix.matrix();
        for r in 0..2 {
            for c in 0..2 {
                assert!((m[(r, c)] - s[(r, c)]).abs() < 1e-15);
            }
        }
        for r in 2..6 {
            for c in 2..6 {
                let expect = if r == c { 1.0 } else { 0.0 };
                assert!((m[(r, c)] - expect).abs() < 1e-15);
            }
        }
        for n in 1..=3 {
            let e = embed_coupling(n, &Matrix2::identity(), 4).unwrap();
            assert!(max_norm(&(e.matrix.matrix() - DMatrix::identity(6, 6))) < 1e-15);
        }
        assert!(embed_coupling(4, &Matrix2::identity(), 4).is_err());
        assert!(embed_coupling(0, &Matrix2::identity(), 4).is_err());
    }

    #[test]
    fn embed_matches_conjugation_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for chain in 2..=6 {
            let basis = cradle_basis(chain).unwrap();
            let cps = basis.phase_space_matrix();
            for n in 1..chain {
                let s = random_sp2(&mut rng);
                let d = embed_coupling(n, &s, chain).unwrap();
                let full = cps * site_action(n, &s, chain) * cps.transpose();
                // Sum-mode rows and columns stay exactly at identity.
                let dim = 2 * chain;
                for k in 0..dim {
                    for r in dim - 2..dim {
                        let expect = if r == k { 1.0 } else { 0.0 };
                        assert!((full[(r, k)] - expect).abs() < 1e-12);
                        assert!((full[(k, r)] - expect).abs() < 1e-12);
                    }
                }
                let lead = full.view((0, 0), (dim - 2, dim - 2)).clone_owned();
                assert!(max_norm(&(lead - d.matrix.matrix())) < 1e-12);
            }
        }
    }

    #[test]
    fn embed_homomorphism() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..100 {
            let chain = rng.gen_range(2..=7);
            let n = rng.gen_range(1..chain);
            let s1m = random_sp2(&mut rng);
            let s2m = random_sp2(&mut rng);
            let lhs = embed_coupling(n, &s1m, chain).unwrap().matrix.into_inner()
                * embed_coupling(n, &s2m, chain).unwrap().matrix.into_inner();
            let rhs = embed_coupling(n, &(s1m * s2m), chain)
                .unwrap()
                .matrix
                .into_inner();
            assert!(max_norm(&(lhs - rhs)) < 1e-10);
        }
    }

    #[test]
    fn distant_couplings_commute() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let chain = 7usize;
        for n in 1..chain {
            for m in 1..chain {
                if n.abs_diff(m) < 2 {
                    continue;
                }
                let a = embed_coupling(n, &random_sp2(&mut rng), chain)
                    .unwrap()
                    .matrix
                    .into_inner();
                let b = embed_coupling(m, &random_sp2(&mut rng), chain)
                    .unwrap()
                    .matrix
                    .into_inner();
                assert!(max_norm(&(&a * &b - &b * &a)) < 1e-12);
            }
        }
    }

    // Reference exponential independent of the closed forms above.
    fn series_exp(x: &DMatrix<f64>) -> DMatrix<f64> {
        let n = x.nrows();
        let norm = x.norm();
        let s = if norm > 0.5 {
            (norm / 0.5).log2().ceil() as u32
        } else {
            0
        };
        let b = x / 2f64.powi(s as i32);
        let mut sum = DMatrix::identity(n, n);
        let mut term = DMatrix::identity(n, n);
        for k in 1..40 {
            term = &term * &b / k as f64;
            sum += &term;
        }
        let mut out = sum;
        for _ in 0..s {
            out = &out * &out;
        }
        out
    }

    #[test]
    fn generator_exponentiates_to_embedding() {
        let n_modes = 3;
        for n in 1..=3usize {
            for i in 1..=3usize {
                for t in [0.1, 1.0] {
                    let s = sp2_generator(i).unwrap() * t;
                    let d = generator(n, &s, n_modes).unwrap();
                    let lhs = series_exp(&d);
                    let inner = sp2_exp(
                        if i == 1 { t } else { 0.0 },
                        if i == 2 { t } else { 0.0 },
                        if i == 3 { t } else { 0.0 },
                    );
                    let rhs = embed_coupling(n, &inner, n_modes + 1)
                        .unwrap()
                        .matrix
                        .into_inner();
                    assert!(
                        max_norm(&(lhs.clone() - &rhs)) < 1e-12,
                        "n={n} i={i} t={t}"
                    );
                }
            }
        }
    }

    #[test]
    fn generator_corner_zero_and_span() {
        let g = generator(1, &s1(), 3).unwrap();
        for r in 0..6 {
            for c in 0..6 {
                let expect = if r < 2 && c < 2 { s1()[(r, c)] } else { 0.0 };
                assert_eq!(g[(r, c)], expect);
            }
        }
        let z = generator(2, &Matrix2::zeros(), 3).unwrap();
        assert!(max_norm(&z) == 0.0);
        let outside = Matrix2::new(1.0, 0.0, 0.0, 1.0);
        assert!(matches!(
            generator(2, &outside, 3),
            Err(Error::OutsideGeneratorSpan(_))
        ));
    }

    #[test]
    fn commutator_block_examples() {
        // i = j = 1, n = 2: top-left commutes away, off-diagonals are
        // -+ sqrt(3)/4 identity since s1^2 = 1.
        let c = coupling_commutator(1, 1, 2).unwrap();
        let root = 3f64.sqrt() / 4.0;
        for r in 0..2 {
            for k in 0..2 {
                assert!(c[(r, k)].abs() < 1e-15);
                assert!(c[(2 + r, 2 + k)].abs() < 1e-15);
                let id = if r == k { 1.0 } else { 0.0 };
                assert!((c[(r, 2 + k)] + root * id).abs() < 1e-15);
                assert!((c[(2 + r, k)] - root * id).abs() < 1e-15);
            }
        }
        assert!(coupling_commutator(1, 4, 2).is_err());
        assert!(coupling_commutator(1, 1, 1).is_err());
    }

    #[test]
    fn commutator_matches_brute_force() {
        // Direct commutator of the corner generator with the full embedded
        // generator, restricted to the active window.
        for n in 2..=6usize {
            let n_modes = n;
            let base = 2 * (n - 2);
            for i in 1..=3usize {
                for j in 1..=3usize {
                    let mut corner = DMatrix::zeros(2 * n_modes, 2 * n_modes);
                    corner
                        .view_mut((base, base), (2, 2))
                        .copy_from(&DMatrix::from_fn(2, 2, |r, c| {
                            sp2_generator(i).unwrap()[(r, c)]
                        }));
                    let dn = generator(n, &sp2_generator(j).unwrap(), n_modes).unwrap();
                    let brute = &corner * &dn - &dn * &corner;
                    let block = coupling_commutator(i, j, n).unwrap();
                    for r in 0..4 {
                        for c in 0..4 {
                            assert!(
                                (brute[(base + r, base + c)] - block[(r, c)]).abs() < 1e-12,
                                "i={i} j={j} n={n}"
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn commutator_independence_counts() {
        // For a two-mode pair, the six seed generators plus the equal-index
        // commutators span one extra direction; the mixed-index commutators
        // add three more, closing at dim sp(4) = 10.
        let n_modes = 2;
        let span_dim = |set: &[DMatrix<f64>]| {
            let mut basis = Vec::new();
            set.iter()
                .filter(|m| mgs_insert(&mut basis, &vectorize(m), 1e-9))
                .count()
        };
        let mut seed = Vec::new();
        for n in 1..=2 {
            for i in 1..=3 {
                seed.push(generator(n, &sp2_generator(i).unwrap(), n_modes).unwrap());
            }
        }
        assert_eq!(span_dim(&seed), 6);
        let comm = |i: usize, j: usize| {
            let a = generator(1, &sp2_generator(i).unwrap(), n_modes).unwrap();
            let b = generator(2, &sp2_generator(j).unwrap(), n_modes).unwrap();
            &a * &b - &b * &a
        };
        let mut with_equal = seed.clone();
        for i in 1..=3 {
            with_equal.push(comm(i, i));
        }
        assert_eq!(span_dim(&with_equal), 7);
        let mut with_all = with_equal.clone();
        for i in 1..=3 {
            for j in 1..=3 {
                if i != j {
                    with_all.push(comm(i, j));
                }
            }
        }
        assert_eq!(span_dim(&with_all), 10);
    }

    #[test]
    fn controllability_dimensions() {
        assert_eq!(controllability_dimension(1).unwrap(), 3);
        assert_eq!(controllability_dimension(2).unwrap(), 10);
        for m in 3..=5usize {
            assert_eq!(controllability_dimension(m).unwrap(), m * (2 * m + 1));
        }
    }

    #[test]
    fn closure_saturates() {
        let n_modes = 3;
        let mut seed = Vec::new();
        for n in 1..=n_modes {
            for i in 1..=3 {
                seed.push(generator(n, &sp2_generator(i).unwrap(), n_modes).unwrap());
            }
        }
        let closure = lie_closure(&seed);
        assert_eq!(closure.dimension, n_modes * (2 * n_modes + 1));
        assert_eq!(*closure.added_per_round.last().unwrap(), 0);
    }
}
