//! Brute-force reference implementations shared by the test targets.

#![allow(dead_code)]

use prcmark::gf2::BitVec;
use prcmark::prc::{keygen, PrcKey, PrcParams};

/// Minimum alignment cost by enumerating every alignment path.
///
/// Diagonal steps cost `2(d_H - 0.5)` for a decoded frame and 1 for a null
/// one; skipping either side costs 1.
pub fn brute_force_alignment(reference: &[BitVec], decoded: &[Option<BitVec>]) -> f64 {
    fn sub(r: &BitVec, d: &Option<BitVec>) -> f64 {
        match d {
            None => 1.0,
            Some(d) => {
                let diff = r.iter().zip(d.iter()).filter(|(a, b)| a != b).count();
                2.0 * (diff as f64 / r.len() as f64 - 0.5)
            }
        }
    }
    fn walk(r: &[BitVec], d: &[Option<BitVec>], acc: f64, best: &mut f64) {
        if r.is_empty() && d.is_empty() {
            *best = best.min(acc);
            return;
        }
        if !r.is_empty() && !d.is_empty() {
            walk(&r[1..], &d[1..], acc + sub(&r[0], &d[0]), best);
        }
        if !d.is_empty() {
            walk(r, &d[1..], acc + 1.0, best);
        }
        if !r.is_empty() {
            walk(&r[1..], d, acc + 1.0, best);
        }
    }
    let mut best = f64::INFINITY;
    walk(reference, decoded, 0.0, &mut best);
    best
}

/// Every codeword of the key with the message it carries, by enumerating
/// all `2^g` coefficient vectors.
pub fn all_codewords(key: &PrcKey) -> Vec<(BitVec, BitVec)> {
    let g = key.dimension();
    assert!(g <= 16, "enumeration over 2^{g} codewords");
    (0..1u64 << g)
        .map(|u| {
            let coeffs = BitVec::from_bools(&(0..g).map(|b| u >> b & 1 == 1).collect::<Vec<_>>());
            let mut word = BitVec::zeros(key.n());
            for (b, on) in coeffs.iter().enumerate() {
                if on {
                    word.xor_assign(&key.generator().col_vec(b));
                }
            }
            word.xor_assign(key.otp());
            (word, coeffs.slice(0, key.k_msg()))
        })
        .collect()
}

/// Maximum-likelihood codeword for received values `s` in (-1, 1), where
/// `(1 + s_i) / 2` is the probability that bit `i` is 0. Returns the
/// message and whether the maximum is unique.
pub fn ml_decode(codewords: &[(BitVec, BitVec)], s: &[f64]) -> (BitVec, bool) {
    let score = |word: &BitVec| -> f64 {
        s.iter()
            .enumerate()
            .map(|(i, &v)| {
                let sign = if word.get(i) { -1.0 } else { 1.0 };
                ((1.0 + sign * v) / 2.0).max(1e-300).ln()
            })
            .sum()
    };
    let scored: Vec<f64> = codewords.iter().map(|(w, _)| score(w)).collect();
    let best = scored
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap();
    let ties = scored
        .iter()
        .filter(|&&v| (v - scored[best]).abs() < 1e-9)
        .count();
    (codewords[best].1.clone(), ties == 1)
}

/// A small key whose code dimension is at most 12, found by trying seeds
/// from `seed` upwards.
pub fn small_key(seed: u64) -> PrcKey {
    for s in seed.. {
        let n = 16 + (s % 9) as usize;
        let params = PrcParams::new(n, 4)
            .with_pad(2)
            .with_checks(n - 10)
            .with_fpr(0.3);
        if let Ok(key) = keygen(&params, s) {
            if key.dimension() <= 12 {
                return key;
            }
        }
    }
    unreachable!()
}
