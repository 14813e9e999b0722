//! Random generators for valid channel instances.
//!
//! Every generator returns matrices that pass [`TransitionMatrix::new`] and
//! whose powers reach the steady state (to the convergence tolerance) within
//! the default lag cap, so finite-lag checks of limiting behavior are
//! meaningful on every draw.

use rand_core::RngCore;

use super::{Matrix3, RewardVector, TransitionMatrix};

const MAX_ATTEMPTS: usize = 100_000;

/// Uniform draw on `[0, 1)` with 53 random bits.
#[inline]
pub fn uniform<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform draw on the probability simplex (flat Dirichlet).
fn simplex_row<R: RngCore + ?Sized>(rng: &mut R) -> [f64; 3] {
    let (mut a, mut b) = (uniform(rng), uniform(rng));
    if a > b {
        core::mem::swap(&mut a, &mut b);
    }
    [a, b - a, 1.0 - b]
}

/// Accepts `raw` only if it validates and mixes within the default lag cap.
fn admit(raw: Matrix3) -> Option<TransitionMatrix> {
    TransitionMatrix::new(raw).ok().filter(TransitionMatrix::mixes_within_cap)
}

const PERMUTATIONS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

/// A random valid transition matrix.
///
/// Three rows are drawn uniformly on the simplex and blended toward the
/// identity by a random weight in `[0, 0.5)`. The rows are then tried in
/// every assignment to the three states (starting from a random one) and
/// the first assignment that validates is returned; otherwise the draw is
/// rejected and repeated.
pub fn random_valid_matrix<R: RngCore + ?Sized>(rng: &mut R) -> TransitionMatrix {
    for _ in 0..MAX_ATTEMPTS {
        let rows = [simplex_row(rng), simplex_row(rng), simplex_row(rng)];
        let blend = 0.5 * uniform(rng);
        let start = (rng.next_u32() % 6) as usize;
        for offset in 0..6 {
            let perm = PERMUTATIONS[(start + offset) % 6];
            let mut raw = [[0.0; 3]; 3];
            for (i, row) in raw.iter_mut().enumerate() {
                for j in 0..3 {
                    let diag = if i == j { 1.0 } else { 0.0 };
                    row[j] = blend * diag + (1.0 - blend) * rows[perm[i]][j];
                }
            }
            if let Some(p) = admit(raw) {
                return p;
            }
        }
    }
    panic!("no valid matrix after {MAX_ATTEMPTS} attempts");
}

/// `alpha = (0, a2, 1)` with `a2` uniform on `[0, 1]`.
pub fn random_reward<R: RngCore + ?Sized>(rng: &mut R) -> RewardVector {
    RewardVector::normalized(uniform(rng)).expect("uniform draw lies in [0, 1]")
}

/// A random valid matrix with a constant middle column (`p12 = p22 = p32`)
/// and `p23 p31 >= p21 p13`.
///
/// Rows are `(a_i, c, 1 - c - a_i)` with `a_1 >= a_2 >= a_3`, which satisfies
/// every column ordering for any `c`.
pub fn random_equal_middle_matrix<R: RngCore + ?Sized>(rng: &mut R) -> TransitionMatrix {
    for _ in 0..MAX_ATTEMPTS {
        let c = 0.05 + 0.85 * uniform(rng);
        let rest = 1.0 - c;
        let mut a = [rest * uniform(rng), rest * uniform(rng), rest * uniform(rng)];
        a.sort_by(|x, y| y.total_cmp(x));
        let raw = [[a[0], c, rest - a[0]], [a[1], c, rest - a[1]], [a[2], c, rest - a[2]]];
        if raw[1][2] * raw[2][0] < raw[1][0] * raw[0][2] {
            continue;
        }
        if let Some(p) = admit(raw) {
            return p;
        }
    }
    panic!("no equal-middle-column matrix after {MAX_ATTEMPTS} attempts");
}

/// A random valid matrix with `p21 = p31`, so states 2 and 3 lump together
/// when `alpha2 = alpha3`.
pub fn random_mergeable_matrix<R: RngCore + ?Sized>(rng: &mut R) -> TransitionMatrix {
    for _ in 0..MAX_ATTEMPTS {
        let b = 0.02 + 0.4 * uniform(rng);
        let p11 = b + (1.0 - b) * uniform(rng);
        let p12 = (1.0 - p11) * uniform(rng);
        let p23 = (1.0 - b) * uniform(rng);
        let p33 = (1.0 - b) * uniform(rng);
        let raw = [[p11, p12, 1.0 - p11 - p12], [b, 1.0 - b - p23, p23], [b, 1.0 - b - p33, p33]];
        if let Some(p) = admit(raw) {
            return p;
        }
    }
    panic!("no mergeable matrix after {MAX_ATTEMPTS} attempts");
}
