//! Packs ±1 codes into 64-bit words and ranks them by popcount distance.

use cuh::index::{distances, pack, rank_all, search_radius, search_topk, QueryCode};
use cuh::BinaryCodeMatrix;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> cuh::Result<()> {
    let (r, n) = (70, 12);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let signs = DMatrix::from_fn(r, n, |_, _| if rng.random_bool(0.5) { 1.0 } else { -1.0 });
    let db = pack(&BinaryCodeMatrix::new(signs.clone())?);
    println!("{} codes of {} bits, {} words each", db.count(), db.code_length(), db.words_per_code());

    // Item 5 with its first 6 bits flipped.
    let query = QueryCode::from_signs((0..r).map(|j| if j < 6 { -signs[(j, 5)] } else { signs[(j, 5)] }));
    println!("distances {:?}", distances(&db, &query)?);
    println!("top 3 {:?}", search_topk(&db, &query, 3)?.neighbors);
    println!("full ranking {:?}", rank_all(&db, &query)?.ids().collect::<Vec<_>>());
    println!("within radius 30: {:?}", search_radius(&db, &query, 30)?.ids().collect::<Vec<_>>());
    Ok(())
}
