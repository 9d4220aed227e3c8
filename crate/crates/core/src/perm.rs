//! Variable permutations acting on truth tables.
//!
//! Tables of up to 7 variables fit in a `u128`; swapping two variables is a
//! single delta-swap. All permutations of `n` variables are visited with
//! Heap's algorithm, which needs exactly `n! - 1` transpositions.

use std::sync::OnceLock;

/// Largest variable count handled by the `u128` fast path.
pub const FAST_VARS: usize = 7;

const fn swap_mask(i: usize, j: usize) -> u128 {
    let mut mask = 0u128;
    let mut p = 0;
    while p < 128 {
        if (p >> i) & 1 == 1 && (p >> j) & 1 == 0 {
            mask |= 1u128 << p;
        }
        p += 1;
    }
    mask
}

const fn build_masks() -> [[u128; FAST_VARS]; FAST_VARS] {
    let mut out = [[0u128; FAST_VARS]; FAST_VARS];
    let mut i = 0;
    while i < FAST_VARS {
        let mut j = i + 1;
        while j < FAST_VARS {
            out[i][j] = swap_mask(i, j);
            j += 1;
        }
        i += 1;
    }
    out
}

static MASKS: [[u128; FAST_VARS]; FAST_VARS] = build_masks();

/// Exchanges the roles of variables `i` and `j` in a packed truth table.
#[inline]
pub fn swap_vars_u128(table: u128, i: usize, j: usize) -> u128 {
    let (i, j) = if i < j { (i, j) } else { (j, i) };
    if i == j {
        return table;
    }
    let delta = (1u32 << j) - (1u32 << i);
    let mask = MASKS[i][j];
    let t = ((table >> delta) ^ table) & mask;
    table ^ t ^ (t << delta)
}

/// Lazily yields the transpositions of Heap's algorithm for `n` elements.
#[derive(Debug, Clone)]
pub struct HeapSwaps {
    n: usize,
    counters: Vec<usize>,
    i: usize,
}

impl HeapSwaps {
    pub fn new(n: usize) -> Self {
        HeapSwaps {
            n,
            counters: vec![0; n],
            i: 1,
        }
    }
}

impl Iterator for HeapSwaps {
    type Item = (usize, usize);

    fn next(&mut self) -> Option<(usize, usize)> {
        while self.i < self.n {
            if self.counters[self.i] < self.i {
                let swap = if self.i.is_multiple_of(2) {
                    (0, self.i)
                } else {
                    (self.counters[self.i], self.i)
                };
                self.counters[self.i] += 1;
                self.i = 1;
                return Some(swap);
            }
            self.counters[self.i] = 0;
            self.i += 1;
        }
        None
    }
}

/// Cached transposition sequence for `n <= FAST_VARS` variables.
pub fn heap_swaps(n: usize) -> &'static [(u8, u8)] {
    static CACHE: OnceLock<Vec<Vec<(u8, u8)>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| {
        (0..=FAST_VARS)
            .map(|n| HeapSwaps::new(n).map(|(a, b)| (a as u8, b as u8)).collect())
            .collect()
    });
    &cache[n]
}

/// Minimum table over every permutation of the first `n` variables.
pub fn canonical_u128(table: u128, n: usize) -> u128 {
    debug_assert!(n <= FAST_VARS);
    let mut cur = table;
    let mut best = table;
    for &(a, b) in heap_swaps(n) {
        cur = swap_vars_u128(cur, a as usize, b as usize);
        if cur < best {
            best = cur;
        }
    }
    best
}

/// Applies an arbitrary permutation (`perm[i]` is the new name of variable
/// `i`) to a packed table of `n` variables.
pub fn permute_u128(table: u128, perm: &[usize]) -> u128 {
    let n = perm.len();
    let mut out = 0u128;
    for m in 0..(1usize << n) {
        if (table >> m) & 1 == 1 {
            let mut image = 0usize;
            for (i, &target) in perm.iter().enumerate() {
                if (m >> i) & 1 == 1 {
                    image |= 1 << target;
                }
            }
            out |= 1u128 << image;
        }
    }
    out
}
