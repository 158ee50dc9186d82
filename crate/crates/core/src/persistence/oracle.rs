//! Brute-force reference computations for checking [`reduce_barcode`](super::reduce_barcode).
//!
//! Everything here works directly on sublevel chain groups with Gaussian
//! elimination over Z/2 and never looks at a barcode.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{FilteredComplex, Generator};

/// Rank of `H_k({filtration < s}) → H_k({filtration < t})`.
///
/// Computed as `dim(Z_k(s) + B_k(t)) − dim B_k(t)`.
pub fn sublevel_rank(c: &FilteredComplex, s: f64, t: f64, k: i32) -> usize {
    assert!(s <= t);
    assert!(c.len() <= 64, "oracle handles at most 64 generators");
    let cycles = cycles_below(c, s, k);
    let boundaries = boundaries_below(c, t, k);
    let mut both = cycles;
    both.extend_from_slice(&boundaries);
    span_dimension(&both) - span_dimension(&boundaries)
}

/// `dim H_k` of the whole complex.
pub fn homology_dimension(c: &FilteredComplex, k: i32) -> usize {
    let z = cycles_below(c, f64::INFINITY, k);
    let b = boundaries_below(c, f64::INFINITY, k);
    span_dimension(&z) - span_dimension(&b)
}

fn chain_boundary(c: &FilteredComplex, g: usize) -> u64 {
    c.boundary[g].iter().fold(0u64, |acc, &i| acc ^ (1u64 << i))
}

/// Basis of the degree-`k` cycles supported on generators of filtration `< level`.
fn cycles_below(c: &FilteredComplex, level: f64, k: i32) -> Vec<u64> {
    let mut basis: Vec<(u64, u64)> = Vec::new(); // (image, chain), images with distinct top bits
    let mut cycles = Vec::new();
    for (g, gen) in c.generators.iter().enumerate() {
        if gen.degree != k || !(gen.filtration < level) {
            continue;
        }
        let mut img = chain_boundary(c, g);
        let mut chain = 1u64 << g;
        loop {
            if img == 0 {
                cycles.push(chain);
                break;
            }
            let top = 63 - img.leading_zeros();
            match basis.iter().find(|(b, _)| 63 - b.leading_zeros() == top) {
                Some(&(b, bc)) => {
                    img ^= b;
                    chain ^= bc;
                }
                None => {
                    basis.push((img, chain));
                    break;
                }
            }
        }
    }
    cycles
}

fn boundaries_below(c: &FilteredComplex, level: f64, k: i32) -> Vec<u64> {
    c.generators
        .iter()
        .enumerate()
        .filter(|(_, g)| g.degree == k + 1 && g.filtration < level)
        .map(|(i, _)| chain_boundary(c, i))
        .collect()
}

pub fn span_dimension(vectors: &[u64]) -> usize {
    let mut basis: Vec<u64> = Vec::new();
    for &v in vectors {
        let mut v = v;
        for &b in &basis {
            v = v.min(v ^ b);
        }
        if v != 0 {
            basis.push(v);
            basis.sort_unstable_by(|a, b| b.cmp(a));
        }
    }
    basis.len()
}

/// Random valid filtered complex with up to `max_generators` generators in
/// degrees 0..=2. Filtrations are drawn from a small grid so ties occur.
pub fn random_complex(seed: u64, max_generators: usize) -> FilteredComplex {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(0..=max_generators);
    let mut draws: Vec<(f64, i32)> = (0..n)
        .map(|_| (rng.random_range(0..6) as f64 * 0.5, rng.random_range(0..3)))
        .collect();
    draws.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut generators = Vec::with_capacity(n);
    let mut boundary: Vec<Vec<usize>> = Vec::with_capacity(n);
    for (idx, &(filtration, degree)) in draws.iter().enumerate() {
        let partial = FilteredComplex {
            generators: generators.clone(),
            boundary: boundary.clone(),
        };
        let mut col = Vec::new();
        if degree > 0 {
            let cycles = cycles_below(&partial, f64::INFINITY, degree - 1);
            let mut chain = 0u64;
            for z in cycles {
                if rng.random_bool(0.6) {
                    chain ^= z;
                }
            }
            col = (0..idx).filter(|&i| chain >> i & 1 == 1).collect();
        }
        generators.push(Generator {
            id: format!("g{idx}"),
            degree,
            filtration,
        });
        boundary.push(col);
    }
    let c = FilteredComplex {
        generators,
        boundary,
    };
    permuted(&c, seed.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

/// Same complex with generators listed in a random order.
pub fn permuted(c: &FilteredComplex, seed: u64) -> FilteredComplex {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..c.len()).collect();
    perm.shuffle(&mut rng);
    // new index of old generator i is perm[i]
    let mut generators = vec![None; c.len()];
    let mut boundary = vec![Vec::new(); c.len()];
    for (old, &new) in perm.iter().enumerate() {
        generators[new] = Some(c.generators[old].clone());
        boundary[new] = c.boundary[old].iter().map(|&i| perm[i]).collect();
    }
    FilteredComplex {
        generators: generators.into_iter().map(Option::unwrap).collect(),
        boundary,
    }
}

/// Filtration values, midpoints between them, points just off each value and
/// points outside the range.
pub fn probe_levels(c: &FilteredComplex) -> Vec<f64> {
    let mut values: Vec<f64> = c.generators.iter().map(|g| g.filtration).collect();
    values.sort_by(f64::total_cmp);
    values.dedup();
    let mut levels = vec![-1.0];
    for (i, &v) in values.iter().enumerate() {
        levels.extend([v - 1e-9, v, v + 1e-9]);
        if let Some(&next) = values.get(i + 1) {
            levels.push(0.5 * (v + next));
        }
    }
    levels.push(values.last().copied().unwrap_or(0.0) + 1.0);
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    levels
}
