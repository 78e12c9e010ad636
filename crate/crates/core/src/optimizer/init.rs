//! Seeded initial assignments and codes.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{CuhError, Result};
use crate::model::{BinaryCodeMatrix, ClusterAssignment};

const G_STREAM: u64 = 1;
const B_STREAM: u64 = 2;

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Tiles a random permutation of the `c` cluster ids over the first
/// `c·⌊n/c⌋` items (item `i` gets `perm[i mod c]`); the remaining items take
/// distinct clusters drawn without replacement.
pub fn init_g(n: usize, c: usize, seed: u64) -> Result<ClusterAssignment> {
    if c == 0 {
        return Err(CuhError::InvalidArgument("need at least one cluster".into()));
    }
    if n < c {
        return Err(CuhError::InvalidArgument(format!(
            "cannot spread {n} items over {c} clusters"
        )));
    }
    let mut rng = rng_for(seed, G_STREAM);
    let mut perm: Vec<usize> = (0..c).collect();
    perm.shuffle(&mut rng);
    let full = c * (n / c);
    let mut assign: Vec<usize> = (0..full).map(|i| perm[i % c]).collect();
    let mut extra: Vec<usize> = (0..c).collect();
    extra.shuffle(&mut rng);
    assign.extend(extra.into_iter().take(n - full));
    ClusterAssignment::new(assign, c)
}

/// Each row gets `⌈n/2⌉` entries `+1` and `⌊n/2⌋` entries `−1` at shuffled positions.
pub fn init_b(r: usize, n: usize, seed: u64) -> Result<BinaryCodeMatrix> {
    if r == 0 || n == 0 {
        return Err(CuhError::InvalidArgument(format!(
            "code matrix needs r >= 1 and n >= 1, got r={r}, n={n}"
        )));
    }
    let mut rng = rng_for(seed, B_STREAM);
    let mut b = DMatrix::zeros(r, n);
    let mut row: Vec<f64> = (0..n).map(|i| if i < n.div_ceil(2) { 1.0 } else { -1.0 }).collect();
    for j in 0..r {
        row.shuffle(&mut rng);
        for (i, &v) in row.iter().enumerate() {
            b[(j, i)] = v;
        }
    }
    BinaryCodeMatrix::new(b)
}
