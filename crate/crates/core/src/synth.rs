//! Factorization of symplectic targets into nearest-neighbor coupling steps.
//!
//! The synthesizer peels off one cradle mode at a time: a sweep of three-step
//! coupling sequences reproduces the last row pair of the target, so dividing
//! it out leaves a target on one mode fewer. Each three-step stage is solved
//! by damped least squares over the nine exponent coordinates with seeded
//! random restarts.

use nalgebra::{DMatrix, DVector, Matrix2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::basis::{embed_coupling, p_block};
use crate::error::{Error, Result};
use crate::gaussian::{
    apply_symplectic, cradle_to_site, entangled_pair_count, log_negativity, vacuum_state,
    ENTANGLEMENT_THRESHOLD,
};
use crate::lm::{minimize, LmOptions};
use crate::symplectic::{
    sp2_exp, sp2_log, spectral_norm, symplectic_defect, Sp2Log, SymplecticMatrix,
    TOL_SYM,
};

/// Row-matching tolerance for a single decorrelation stage.
pub const TOL_BLOCK: f64 = 1e-10;
/// Verification tolerance for a full plan (spectral norm).
pub const TOL_PLAN: f64 = 1e-8;
/// Steps whose inner matrix is this close to identity are dropped.
pub const TRIM_TOL: f64 = 1e-12;
/// Random restart budget per stage.
pub const MAX_RESTARTS: usize = 32;

/// Worst-case step count for a chain of length n: 3n(n-1)/2.
pub fn step_bound(chain_length: usize) -> usize {
    3 * chain_length * (chain_length - 1) / 2
}

/// One physical operation: an Sp(2, R) element applied to the relative
/// coordinates of oscillators `site`, `site` + 1.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingStep {
    pub site: usize,
    pub inner: Matrix2<f64>,
}

/// An ordered coupling sequence realizing `target`, steps applied
/// left-to-right in time.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisPlan {
    pub chain_length: usize,
    pub steps: Vec<CouplingStep>,
    pub target: SymplecticMatrix,
    pub residual: f64,
    pub seed: u64,
}

impl SynthesisPlan {
    /// Product of the embedded steps, later steps multiplying from the left.
    pub fn matrix(&self) -> DMatrix<f64> {
        plan_matrix(self.chain_length, &self.steps)
    }
}

pub(crate) fn plan_matrix(chain_length: usize, steps: &[CouplingStep]) -> DMatrix<f64> {
    let dim = 2 * (chain_length - 1);
    let mut total = DMatrix::identity(dim, dim);
    for step in steps {
        let emb = embed_coupling(step.site, &step.inner, chain_length)
            .expect("plan steps stay in range");
        total = emb.matrix.into_inner() * total;
    }
    total
}

/// Synthesis options; the column-variant flag switches to the factorization
/// that matches the target's last columns instead of its last rows.
#[derive(Debug, Clone)]
pub struct SynthOptions {
    pub column_variant: bool,
    pub max_restarts: usize,
}

impl Default for SynthOptions {
    fn default() -> Self {
        Self {
            column_variant: false,
            max_restarts: MAX_RESTARTS,
        }
    }
}

/// Constraint for one three-step stage.
#[derive(Debug, Clone)]
pub enum TripleGoal {
    /// Match only the trailing block of the working row pair.
    Block(Matrix2<f64>),
    /// Match the two trailing blocks (final stage).
    Pair(Matrix2<f64>, Matrix2<f64>),
}

/// Solution of one stage: the triple D_n(s1) D_{n-1}(s2) D_n(s3) together
/// with the residual and the leftover row blocks it hands to later stages.
#[derive(Debug, Clone)]
pub struct TripleSolution {
    pub s1: Matrix2<f64>,
    pub s2: Matrix2<f64>,
    pub s3: Matrix2<f64>,
    pub residual: f64,
    pub leftover: (Matrix2<f64>, Matrix2<f64>),
}

// Window restriction of D_n(S): local modes are (n-2, n-1, n) for n >= 3 and
// (1, 2) for n = 2.
fn window_high(n: usize, s: &Matrix2<f64>) -> DMatrix<f64> {
    let p = p_block(n, s);
    if n == 2 {
        DMatrix::from_fn(4, 4, |r, c| p[(r, c)])
    } else {
        let mut m = DMatrix::identity(6, 6);
        for r in 0..4 {
            for c in 0..4 {
                m[(2 + r, 2 + c)] = p[(r, c)];
            }
        }
        m
    }
}

fn window_low(n: usize, s: &Matrix2<f64>) -> DMatrix<f64> {
    if n == 2 {
        let mut m = DMatrix::identity(4, 4);
        m[(0, 0)] = s[(0, 0)];
        m[(0, 1)] = s[(0, 1)];
        m[(1, 0)] = s[(1, 0)];
        m[(1, 1)] = s[(1, 1)];
        m
    } else {
        let p = p_block(n - 1, s);
        let mut m = DMatrix::identity(6, 6);
        for r in 0..4 {
            for c in 0..4 {
                m[(r, c)] = p[(r, c)];
            }
        }
        m
    }
}

fn window_width(n: usize) -> usize {
    if n == 2 {
        4
    } else {
        6
    }
}

// Input row pair [0 | l1 | l2] over the stage window.
fn window_input(n: usize, l1: &Matrix2<f64>, l2: &Matrix2<f64>) -> DMatrix<f64> {
    let w = window_width(n);
    let mut m = DMatrix::zeros(2, w);
    for r in 0..2 {
        for c in 0..2 {
            m[(r, w - 4 + c)] = l1[(r, c)];
            m[(r, w - 2 + c)] = l2[(r, c)];
        }
    }
    m
}

fn triple_rows(
    n: usize,
    input: &DMatrix<f64>,
    params: &[f64],
) -> DMatrix<f64> {
    let a = sp2_exp(params[0], params[1], params[2]);
    let b = sp2_exp(params[3], params[4], params[5]);
    let c = sp2_exp(params[6], params[7], params[8]);
    input * window_high(n, &a) * window_low(n, &b) * window_high(n, &c)
}

fn stage_residual(n: usize, input: &DMatrix<f64>, goal: &TripleGoal, params: &[f64]) -> DVector<f64> {
    let rows = triple_rows(n, input, params);
    let w = window_width(n);
    match goal {
        TripleGoal::Block(g) => {
            let mut out = DVector::zeros(4);
            for r in 0..2 {
                for c in 0..2 {
                    out[2 * r + c] = rows[(r, w - 2 + c)] - g[(r, c)];
                }
            }
            out
        }
        TripleGoal::Pair(g1, g2) => {
            let mut out = DVector::zeros(8);
            for r in 0..2 {
                for c in 0..2 {
                    out[2 * r + c] = rows[(r, w - 4 + c)] - g1[(r, c)];
                    out[4 + 2 * r + c] = rows[(r, w - 2 + c)] - g2[(r, c)];
                }
            }
            out
        }
    }
}

// Analytic initialization on the branch s2 = s3 = identity: the trailing
// block of input * D_n(A) is linear in A, so solve for A and project it back
// onto the group through its determinant.
fn analytic_init(
    n: usize,
    l1: &Matrix2<f64>,
    l2: &Matrix2<f64>,
    goal: &TripleGoal,
) -> Option<[f64; 9]> {
    let g = match goal {
        TripleGoal::Block(g) => *g,
        TripleGoal::Pair(_, g2) => *g2,
    };
    let nf = n as f64;
    let a_coef = (nf + 1.0) / (2.0 * nf);
    let b_coef = (nf - 1.0) / (2.0 * nf);
    let c_coef = (nf * nf - 1.0).sqrt() / (2.0 * nf);
    // trailing block = (l1 c + l2 b) + (l2 a - l1 c) A
    let m = l2 * a_coef - l1 * c_coef;
    let rhs = g - (l1 * c_coef + l2 * b_coef);
    let det = m.determinant();
    if det.abs() < 1e-9 {
        return None;
    }
    let a = m.try_inverse()? * rhs;
    let det_a = a.determinant();
    if det_a <= 1e-9 {
        return None;
    }
    let a = a / det_a.sqrt();
    match sp2_log(&a) {
        Ok(Sp2Log::Single { alpha, beta, gamma }) => {
            Some([alpha, beta, gamma, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0])
        }
        _ => None,
    }
}

/// Solves one three-step stage at site `n`: find s1, s2, s3 so the working
/// row pair `(l1, l2)` maps onto the goal blocks under
/// D_n(s1) D_{n-1}(s2) D_n(s3).
pub fn solve_triple(
    n: usize,
    l1: &Matrix2<f64>,
    l2: &Matrix2<f64>,
    goal: &TripleGoal,
    rng: &mut ChaCha8Rng,
    max_restarts: usize,
) -> Result<TripleSolution> {
    if n < 2 {
        return Err(Error::SiteOutOfRange { site: n, max: 1 });
    }
    let input = window_input(n, l1, l2);
    let objective = |p: &[f64]| stage_residual(n, &input, goal, p);
    let opts = LmOptions {
        cost_tolerance: (TOL_BLOCK * 0.1) * (TOL_BLOCK * 0.1),
        ..LmOptions::default()
    };

    let mut starts: Vec<[f64; 9]> = Vec::new();
    if let Some(init) = analytic_init(n, l1, l2, goal) {
        starts.push(init);
    }
    starts.push([0.0; 9]);

    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut attempts = 0usize;
    loop {
        let start = if attempts < starts.len() {
            starts[attempts]
        } else if attempts < starts.len() + max_restarts {
            let mut s = [0.0; 9];
            for v in s.iter_mut() {
                *v = rng.gen_range(-1.0..1.0);
            }
            s
        } else {
            break;
        };
        attempts += 1;
        let (params, residual) = minimize(&objective, &start, &opts);
        if best.as_ref().map_or(true, |(_, r)| residual < *r) {
            best = Some((params, residual));
        }
        if residual <= TOL_BLOCK {
            break;
        }
    }

    let (params, residual) = best.expect("at least one start");
    if residual > TOL_BLOCK {
        return Err(Error::SolverFailure {
            mode: 0,
            site: n,
            residual,
            restarts: attempts,
        });
    }
    let rows = triple_rows(n, &input, &params);
    let w = window_width(n);
    let block = |off: usize| {
        Matrix2::new(
            rows[(0, off)],
            rows[(0, off + 1)],
            rows[(1, off)],
            rows[(1, off + 1)],
        )
    };
    let leftover = if n == 2 {
        (Matrix2::zeros(), Matrix2::zeros())
    } else {
        (block(0), block(2))
    };
    let _ = w;
    Ok(TripleSolution {
        s1: sp2_exp(params[0], params[1], params[2]),
        s2: sp2_exp(params[3], params[4], params[5]),
        s3: sp2_exp(params[6], params[7], params[8]),
        residual,
        leftover,
    })
}

fn matrix_block(m: &DMatrix<f64>, row_mode: usize, col_mode: usize) -> Matrix2<f64> {
    let (r, c) = (2 * row_mode, 2 * col_mode);
    Matrix2::new(m[(r, c)], m[(r, c + 1)], m[(r + 1, c)], m[(r + 1, c + 1)])
}

fn near_identity(s: &Matrix2<f64>) -> bool {
    (s - Matrix2::identity()).amax() < TRIM_TOL
}

fn decorrelate_with_rng(
    t: &SymplecticMatrix,
    rng: &mut ChaCha8Rng,
    max_restarts: usize,
) -> Result<(Vec<CouplingStep>, SymplecticMatrix)> {
    let m = t.modes();
    if m == 0 {
        return Ok((Vec::new(), SymplecticMatrix::identity(0)));
    }
    if m == 1 {
        let inner = matrix_block(t.matrix(), 0, 0);
        let steps = if near_identity(&inner) {
            Vec::new()
        } else {
            vec![CouplingStep { site: 1, inner }]
        };
        return Ok((steps, SymplecticMatrix::identity(0)));
    }

    let tm = t.matrix();
    // Stage solutions by site, solved top site first.
    let mut stages: Vec<(usize, TripleSolution)> = Vec::new();
    let mut l1 = Matrix2::zeros();
    let mut l2 = Matrix2::identity();
    for n in (2..=m).rev() {
        let goal = if n == 2 {
            TripleGoal::Pair(
                matrix_block(tm, m - 1, 0),
                matrix_block(tm, m - 1, 1),
            )
        } else {
            TripleGoal::Block(matrix_block(tm, m - 1, n - 1))
        };
        let solution =
            solve_triple(n, &l1, &l2, &goal, rng, max_restarts).map_err(|e| match e {
                Error::SolverFailure {
                    site,
                    residual,
                    restarts,
                    ..
                } => Error::SolverFailure {
                    mode: m,
                    site,
                    residual,
                    restarts,
                },
                other => other,
            })?;
        l1 = solution.leftover.0;
        l2 = solution.leftover.1;
        stages.push((n, solution));
    }

    // Emit in time order: lowest site first, each triple rightmost first.
    let mut steps = Vec::with_capacity(3 * (m - 1));
    for (n, sol) in stages.iter().rev() {
        steps.push(CouplingStep {
            site: *n,
            inner: sol.s3,
        });
        steps.push(CouplingStep {
            site: *n - 1,
            inner: sol.s2,
        });
        steps.push(CouplingStep {
            site: *n,
            inner: sol.s1,
        });
    }

    let chain_length = m + 1;
    let fragment_matrix = plan_matrix(chain_length, &steps);
    let reduced_full = tm
        * fragment_matrix
            .clone()
            .try_inverse()
            .expect("symplectic product is invertible");

    // The divided-out factor must leave the last mode exactly decorrelated.
    let mut structure_defect = 0.0f64;
    for k in 0..2 * m {
        for r in 2 * m - 2..2 * m {
            let expect = if r == k { 1.0 } else { 0.0 };
            structure_defect = structure_defect.max((reduced_full[(r, k)] - expect).abs());
            structure_defect = structure_defect.max((reduced_full[(k, r)] - expect).abs());
        }
    }
    if structure_defect > 1e-7 {
        return Err(Error::SolverFailure {
            mode: m,
            site: m,
            residual: structure_defect,
            restarts: 0,
        });
    }
    let lead = reduced_full
        .view((0, 0), (2 * m - 2, 2 * m - 2))
        .clone_owned();
    Ok((steps, SymplecticMatrix::new_unchecked(lead)))
}

/// Finds a coupling fragment whose matrix reproduces the last row pair of
/// `t`, so that dividing it out decorrelates the last cradle mode. Returns
/// the fragment (time-ordered) and the reduced target on one mode fewer.
pub fn decorrelate_last(
    t: &SymplecticMatrix,
    seed: u64,
) -> Result<(Vec<CouplingStep>, SymplecticMatrix)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    decorrelate_with_rng(t, &mut rng, MAX_RESTARTS)
}

/// Factorizes `target` into nearest-neighbor coupling steps.
///
/// Deterministic for a given (target, seed); the plan is trimmed of identity
/// steps, verified, and guaranteed to stay within the 3N(N-1)/2 step bound.
pub fn synthesize(target: &SymplecticMatrix, seed: u64) -> Result<SynthesisPlan> {
    synthesize_with(target, seed, &SynthOptions::default())
}

pub fn synthesize_with(
    target: &SymplecticMatrix,
    seed: u64,
    options: &SynthOptions,
) -> Result<SynthesisPlan> {
    let defect = symplectic_defect(target.matrix())?;
    if defect > TOL_SYM {
        return Err(Error::NotSymplectic {
            defect,
            tol: TOL_SYM,
        });
    }
    let n_modes = target.modes();
    if n_modes == 0 {
        return Err(Error::ZeroModes);
    }
    let chain_length = n_modes + 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let working = if options.column_variant {
        SymplecticMatrix::new_unchecked(target.matrix().transpose())
    } else {
        target.clone()
    };

    let mut fragments: Vec<Vec<CouplingStep>> = Vec::with_capacity(n_modes);
    let mut current = working;
    while current.modes() > 0 {
        let (frag, reduced) = decorrelate_with_rng(&current, &mut rng, options.max_restarts)?;
        fragments.push(frag);
        current = reduced;
    }

    let mut steps: Vec<CouplingStep> = Vec::new();
    if options.column_variant {
        // Columns of the original are rows of the transpose: transpose each
        // inner and reverse all ordering.
        for frag in fragments.iter().rev() {
            for step in frag.iter().rev() {
                steps.push(CouplingStep {
                    site: step.site,
                    inner: step.inner.transpose(),
                });
            }
        }
    } else {
        for frag in fragments {
            steps.extend(frag);
        }
    }
    steps.retain(|s| !near_identity(&s.inner));
    debug_assert!(steps.len() <= step_bound(chain_length));

    let mut plan = SynthesisPlan {
        chain_length,
        steps,
        target: target.clone(),
        residual: f64::NAN,
        seed,
    };
    let residual = verify_plan(&mut plan);
    if residual > TOL_PLAN {
        return Err(Error::SolverFailure {
            mode: n_modes,
            site: 0,
            residual,
            restarts: 0,
        });
    }
    Ok(plan)
}

/// Spectral-norm distance between the plan's step product and its target;
/// the result is also stored on the plan.
pub fn verify_plan(plan: &mut SynthesisPlan) -> f64 {
    let residual = spectral_norm(&(plan.matrix() - plan.target.matrix()));
    plan.residual = residual;
    residual
}

/// State of the chain after one synthesis step.
#[derive(Debug, Clone)]
pub struct TraceRecord {
    /// 0 for the initial vacuum record, then 1-based step numbers.
    pub step: usize,
    /// Site of the step that produced this record (None for the initial one).
    pub site: Option<usize>,
    /// Entangled pairs at the standard threshold.
    pub pair_count: usize,
    /// Pairs available among oscillators touched so far.
    pub touched_bound: usize,
    /// Log-negativity for every unordered site pair, lexicographic order.
    pub negativity: Vec<((usize, usize), f64)>,
}

/// Propagates vacuum through the plan step by step, recording the entangled
/// pair count against the bound set by the oscillators touched so far.
pub fn correlation_trace(plan: &SynthesisPlan) -> Result<Vec<TraceRecord>> {
    let mut checked = plan.clone();
    let residual = verify_plan(&mut checked);
    if residual > TOL_PLAN {
        return Err(Error::SolverFailure {
            mode: plan.chain_length - 1,
            site: 0,
            residual,
            restarts: 0,
        });
    }
    let n = plan.chain_length;
    let vac_sum = Matrix2::identity() * 0.5;
    let mut sigma_c = vacuum_state(n - 1);
    let mut touched: Vec<bool> = vec![false; n + 1];
    let mut records = Vec::with_capacity(plan.steps.len() + 1);

    let record = |step: usize,
                  site: Option<usize>,
                  sigma_c: &crate::gaussian::CovarianceMatrix,
                  touched: &[bool]|
     -> Result<TraceRecord> {
        let site_state = cradle_to_site(sigma_c, &vac_sum)?;
        let mut negativity = Vec::new();
        for a in 1..=n {
            for b in (a + 1)..=n {
                negativity.push(((a, b), log_negativity(&site_state, a, b)?));
            }
        }
        let pair_count = entangled_pair_count(&site_state, ENTANGLEMENT_THRESHOLD);
        let involved = touched.iter().filter(|t| **t).count();
        Ok(TraceRecord {
            step,
            site,
            pair_count,
            touched_bound: involved * involved.saturating_sub(1) / 2,
            negativity,
        })
    };

    records.push(record(0, None, &sigma_c, &touched)?);
    for (i, step) in plan.steps.iter().enumerate() {
        let emb = embed_coupling(step.site, &step.inner, n)?;
        sigma_c = apply_symplectic(&sigma_c, &emb.matrix)?;
        touched[step.site] = true;
        touched[step.site + 1] = true;
        records.push(record(i + 1, Some(step.site), &sigma_c, &touched)?);
    }

    // The propagated endpoint must reproduce the target state's pair count.
    let target_sigma = apply_symplectic(&vacuum_state(n - 1), &plan.target)?;
    let target_site = cradle_to_site(&target_sigma, &vac_sum)?;
    let expected = entangled_pair_count(&target_site, ENTANGLEMENT_THRESHOLD);
    let got = records.last().expect("initial record").pair_count;
    if got != expected {
        return Err(Error::TraceMismatch { got, expected });
    }
    Ok(records)
}
