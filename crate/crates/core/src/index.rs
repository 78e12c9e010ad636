//! Packed binary codes and linear-scan Hamming retrieval.
//!
//! Bit `j` of an item lives in word `j / 64`, at bit position `j % 64`.
//! A `+1` code entry is a set bit, `−1` is clear. Padding bits past the code
//! length are always zero, so popcount over whole words is exact.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::DMatrix;

use crate::error::{CuhError, Result};
use crate::model::BinaryCodeMatrix;

pub const WORD_BITS: usize = 64;

pub fn words_per_code(code_length: usize) -> usize {
    code_length.div_ceil(WORD_BITS)
}

fn last_word_mask(code_length: usize) -> u64 {
    match code_length % WORD_BITS {
        0 => u64::MAX,
        rem => (1u64 << rem) - 1,
    }
}

/// `N` codes of `r` bits, `⌈r/64⌉` words each.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PackedCodeMatrix {
    words: Vec<u64>,
    code_length: usize,
    count: usize,
}

impl PackedCodeMatrix {
    /// Wraps raw words; rejects a wrong word count or stray padding bits.
    pub fn from_words(words: Vec<u64>, code_length: usize, count: usize) -> Result<Self> {
        if code_length == 0 {
            return Err(CuhError::InvalidArgument("code length must be at least 1".into()));
        }
        let stride = words_per_code(code_length);
        if words.len() != stride * count {
            return Err(CuhError::dim("packed code words", stride * count, words.len()));
        }
        let mask = last_word_mask(code_length);
        if let Some(i) = (0..count).find(|i| words[i * stride + stride - 1] & !mask != 0) {
            return Err(CuhError::InvalidArgument(format!(
                "code {i} has bits set beyond position {code_length}"
            )));
        }
        Ok(PackedCodeMatrix {
            words,
            code_length,
            count,
        })
    }

    pub fn code_length(&self) -> usize {
        self.code_length
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn words_per_code(&self) -> usize {
        words_per_code(self.code_length)
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn code(&self, item: usize) -> &[u64] {
        let stride = self.words_per_code();
        &self.words[item * stride..(item + 1) * stride]
    }

    pub fn query(&self, item: usize) -> QueryCode {
        QueryCode {
            bits: self.code(item).to_vec(),
            code_length: self.code_length,
        }
    }
}

/// A single packed code of `r` bits.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QueryCode {
    bits: Vec<u64>,
    code_length: usize,
}

impl QueryCode {
    /// Packs a sequence of ±1-valued reals (anything `> 0` sets the bit).
    pub fn from_signs(values: impl IntoIterator<Item = f64>) -> Self {
        let mut bits = Vec::new();
        let mut code_length = 0;
        for (j, v) in values.into_iter().enumerate() {
            if j % WORD_BITS == 0 {
                bits.push(0);
            }
            if v > 0.0 {
                bits[j / WORD_BITS] |= 1u64 << (j % WORD_BITS);
            }
            code_length = j + 1;
        }
        QueryCode { bits, code_length }
    }

    pub fn code_length(&self) -> usize {
        self.code_length
    }

    pub fn words(&self) -> &[u64] {
        &self.bits
    }

    /// `+1.0` / `−1.0` per bit.
    pub fn to_signs(&self) -> Vec<f64> {
        (0..self.code_length)
            .map(|j| {
                if self.bits[j / WORD_BITS] >> (j % WORD_BITS) & 1 == 1 {
                    1.0
                } else {
                    -1.0
                }
            })
            .collect()
    }
}

pub fn pack(codes: &BinaryCodeMatrix) -> PackedCodeMatrix {
    let r = codes.code_length();
    let n = codes.count();
    let stride = words_per_code(r);
    let mut words = vec![0u64; stride * n];
    for (i, col) in codes.matrix().column_iter().enumerate() {
        for (j, &v) in col.iter().enumerate() {
            if v > 0.0 {
                words[i * stride + j / WORD_BITS] |= 1u64 << (j % WORD_BITS);
            }
        }
    }
    PackedCodeMatrix {
        words,
        code_length: r,
        count: n,
    }
}

pub fn unpack(packed: &PackedCodeMatrix) -> BinaryCodeMatrix {
    let r = packed.code_length;
    let b = DMatrix::from_fn(r, packed.count, |j, i| {
        if packed.code(i)[j / WORD_BITS] >> (j % WORD_BITS) & 1 == 1 {
            1.0
        } else {
            -1.0
        }
    });
    BinaryCodeMatrix::from_signs(&b)
}

#[inline]
fn popcount_distance(a: &[u64], b: &[u64]) -> u32 {
    a.iter().zip(b).map(|(x, y)| (x ^ y).count_ones()).sum()
}

pub fn hamming_distance(a: &QueryCode, b: &QueryCode) -> Result<u32> {
    if a.code_length != b.code_length {
        return Err(CuhError::dim("hamming_distance", a.code_length, b.code_length));
    }
    Ok(popcount_distance(&a.bits, &b.bits))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Neighbor {
    pub distance: u32,
    pub id: usize,
}

/// Items in ascending `(distance, id)` order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SearchResult {
    pub neighbors: Vec<Neighbor>,
}

impl SearchResult {
    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.neighbors.iter().map(|n| n.id)
    }
}

fn check_query(db: &PackedCodeMatrix, q: &QueryCode) -> Result<()> {
    if db.code_length != q.code_length {
        return Err(CuhError::dim("hamming search", db.code_length, q.code_length));
    }
    Ok(())
}

/// Distance from `q` to every database item, in item order.
pub fn distances(db: &PackedCodeMatrix, q: &QueryCode) -> Result<Vec<u32>> {
    check_query(db, q)?;
    Ok((0..db.count)
        .map(|i| popcount_distance(db.code(i), &q.bits))
        .collect())
}

/// The `k` nearest items by Hamming distance, ties broken by ascending id.
pub fn search_topk(db: &PackedCodeMatrix, q: &QueryCode, k: usize) -> Result<SearchResult> {
    if k == 0 {
        return Err(CuhError::InvalidArgument("k must be at least 1".into()));
    }
    if db.is_empty() {
        return Err(CuhError::InvalidArgument("cannot search an empty database".into()));
    }
    check_query(db, q)?;
    let k = k.min(db.count);
    if k == db.count {
        return rank_all(db, q);
    }
    // Max-heap of the k best seen so far; the root is the current worst.
    let mut heap: BinaryHeap<Neighbor> = BinaryHeap::with_capacity(k + 1);
    for id in 0..db.count {
        let candidate = Neighbor {
            distance: popcount_distance(db.code(id), &q.bits),
            id,
        };
        if heap.len() < k {
            heap.push(candidate);
        } else if let Some(worst) = heap.peek() {
            if candidate.cmp(worst) == Ordering::Less {
                heap.pop();
                heap.push(candidate);
            }
        }
    }
    Ok(SearchResult {
        neighbors: heap.into_sorted_vec(),
    })
}

/// Full ranking of the database via a counting sort on distance.
pub fn rank_all(db: &PackedCodeMatrix, q: &QueryCode) -> Result<SearchResult> {
    if db.is_empty() {
        return Err(CuhError::InvalidArgument("cannot search an empty database".into()));
    }
    let dist = distances(db, q)?;
    let mut buckets = vec![0usize; db.code_length + 2];
    for &d in &dist {
        buckets[d as usize + 1] += 1;
    }
    for j in 1..buckets.len() {
        buckets[j] += buckets[j - 1];
    }
    let mut neighbors = vec![Neighbor { distance: 0, id: 0 }; db.count];
    for (id, &distance) in dist.iter().enumerate() {
        let slot = &mut buckets[distance as usize];
        neighbors[*slot] = Neighbor { distance, id };
        *slot += 1;
    }
    Ok(SearchResult { neighbors })
}

/// Every item within `radius` of `q`, sorted like [`search_topk`].
pub fn search_radius(db: &PackedCodeMatrix, q: &QueryCode, radius: u32) -> Result<SearchResult> {
    let dist = distances(db, q)?;
    let mut neighbors: Vec<Neighbor> = dist
        .into_iter()
        .enumerate()
        .filter(|&(_, d)| d <= radius)
        .map(|(id, distance)| Neighbor { distance, id })
        .collect();
    neighbors.sort_unstable();
    Ok(SearchResult { neighbors })
}
