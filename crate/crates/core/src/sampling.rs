//! Seeded generators for random symplectic test targets.
//!
//! Targets are bounded products of embedded couplings with exponents drawn
//! uniformly from [-1, 1], which keeps them symplectic by construction and
//! reasonably conditioned.

use nalgebra::{DMatrix, Matrix2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::basis::embed_coupling;
use crate::symplectic::{sp2_exp, SymplecticMatrix};

/// A random Sp(2, R) element with exponent coordinates in [-scale, scale].
pub fn random_sp2(rng: &mut ChaCha8Rng, scale: f64) -> Matrix2<f64> {
    sp2_exp(
        rng.gen_range(-scale..scale),
        rng.gen_range(-scale..scale),
        rng.gen_range(-scale..scale),
    )
}

/// A random symplectic target on `modes` cradle modes, built as a product of
/// 3 * modes embedded couplings.
pub fn random_target(modes: usize, rng: &mut ChaCha8Rng) -> SymplecticMatrix {
    let chain = modes + 1;
    let mut total = DMatrix::identity(2 * modes, 2 * modes);
    for _ in 0..3 * modes {
        let site = rng.gen_range(1..=modes);
        let s = random_sp2(rng, 1.0);
        let emb = embed_coupling(site, &s, chain).expect("sampled site in range");
        total = emb.matrix.into_inner() * total;
    }
    SymplecticMatrix::new_unchecked(total)
}
