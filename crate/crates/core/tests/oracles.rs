//! Checks against independent reference computations: brute-force
//! enumeration, numeric integration and Monte-Carlo estimates.

mod common;

use std::collections::HashSet;

use prcmark::channel::{self, ChannelParams};
use prcmark::gf2::BitVec;
use prcmark::latent::{FrameLatent, LatentShape, VideoLatent};
use prcmark::prc::{keygen, PrcParams, SoftSignal};
use prcmark::schedule::MessageSchedule;
use prcmark::temporal::{edit_distance, hamming, temporal_match, AlignOp, ALIGN_SLACK};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use common::{all_codewords, brute_force_alignment, ml_decode, small_key};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn signs_of(bits: &BitVec) -> Vec<f64> {
    bits.iter().map(|b| if b { -1.0 } else { 1.0 }).collect()
}

#[test]
fn parity_times_generator_vanishes_entrywise() {
    let params = PrcParams::new(20, 2).with_pad(2).with_checks(8);
    let key = keygen(&params, 1).unwrap();
    let (p, g) = (key.parity(), key.generator());
    for i in 0..p.rows() {
        for j in 0..g.cols() {
            let dot = (0..20).filter(|&k| p.get(i, k) && g.get(k, j)).count();
            assert_eq!(dot % 2, 0, "entry ({i}, {j})");
        }
    }
}

#[test]
fn codeword_elements_are_unbiased() {
    let mut r = rng(1);
    let (mut sum, mut count) = (0i64, 0usize);
    for k in 0..20 {
        let key = keygen(&PrcParams::new(1024, 64), 100 + k).unwrap();
        for _ in 0..50 {
            let m = BitVec::random(64, &mut r);
            let c = key.encode(&m, &mut r).unwrap();
            sum += c.values().iter().map(|&v| v as i64).sum::<i64>();
            count += c.len();
        }
    }
    assert!(count >= 1_000_000);
    let mean = sum as f64 / count as f64;
    assert!(mean.abs() <= 0.005, "mean {mean}");
}

#[test]
fn independent_noise_is_rejected() {
    let key = keygen(&PrcParams::new(1024, 64), 3).unwrap();
    let mut r = rng(3);
    let absent = (0..1000)
        .filter(|_| {
            let v: Vec<f64> = (0..1024)
                .map(|_| if r.random::<bool>() { 1.0 } else { -1.0 })
                .collect();
            key.decode(&SoftSignal::new(v).unwrap())
                .unwrap()
                .message
                .is_none()
        })
        .count();
    assert!(
        absent as f64 / 1000.0 >= 1.0 - key.params().fpr,
        "{absent}/1000"
    );
}

#[test]
fn belief_propagation_matches_ml_for_single_flips() {
    let mut r = rng(4);
    let mut compared = 0;
    for inst in 0..200u64 {
        let key = small_key(1000 + inst * 7);
        let words = all_codewords(&key);
        let m = BitVec::random(key.k_msg(), &mut r);
        let mut bits = key.encode(&m, &mut r).unwrap().bits().clone();
        if inst % 2 == 1 {
            bits.flip(r.random_range(0..key.n()));
        }
        let s = signs_of(&bits);
        let out = key.decode(&SoftSignal::new(s.clone()).unwrap()).unwrap();
        let (ml, unique) = ml_decode(&words, &s.iter().map(|v| v * 0.9).collect::<Vec<_>>());
        if let Some(got) = out.message {
            if unique {
                assert_eq!(got, ml, "instance {inst}");
                compared += 1;
            }
        }
    }
    assert!(compared >= 50, "only {compared} comparable instances");
}

#[test]
fn belief_propagation_rarely_departs_from_ml_on_soft_inputs() {
    let mut r = rng(5);
    let (mut compared, mut departures) = (0, 0);
    for inst in 0..200u64 {
        let key = small_key(5000 + inst * 7);
        let words = all_codewords(&key);
        let m = BitVec::random(key.k_msg(), &mut r);
        let c = key.encode(&m, &mut r).unwrap();
        // Gaussian channel at rho = 0.8, reported as posterior signs
        let alpha = 0.8 / (1.0f64 - 0.64).sqrt();
        let normal = Normal::new(0.0, 1.0).unwrap();
        let s: Vec<f64> = c
            .values()
            .iter()
            .map(|&x| {
                let (z, xi): (f64, f64) =
                    (StandardNormal.sample(&mut r), StandardNormal.sample(&mut r));
                let y = 0.8 * x as f64 * z.abs() + 0.6 * xi;
                (2.0 * normal.cdf(alpha * y) - 1.0).clamp(-0.999999, 0.999999)
            })
            .collect();
        let out = key.decode(&SoftSignal::new(s.clone()).unwrap()).unwrap();
        let (ml, unique) = ml_decode(&words, &s);
        if let (Some(got), true) = (out.message, unique) {
            compared += 1;
            departures += usize::from(got != ml);
        }
    }
    // sum-product is not a maximum-likelihood decoder; on heavy soft noise
    // it occasionally settles on a codeword other than the ML one
    assert!(compared >= 50, "only {compared} comparable instances");
    assert!(
        departures * 20 <= compared,
        "{departures}/{compared} differ from ML"
    );
}

#[test]
fn check_satisfaction_follows_piling_up() {
    let key = keygen(&PrcParams::new(16384, 512), 6).unwrap();
    let mut r = rng(6);
    let trials = 8;
    let mut total = 0.0;
    for _ in 0..trials {
        let m = BitVec::random(512, &mut r);
        let mut bits = key.encode(&m, &mut r).unwrap().bits().clone();
        for i in 0..key.n() {
            if r.random::<f64>() < 0.1 {
                bits.flip(i);
            }
        }
        let (sat, _) = key
            .detect_zero_bit(&SoftSignal::new(signs_of(&bits)).unwrap())
            .unwrap();
        total += sat;
    }
    let expected = (1.0 + 0.8f64.powi(3)) / 2.0;
    assert!((expected - 0.756).abs() < 1e-12);
    let mean = total / trials as f64;
    assert!((mean - expected).abs() <= 0.02, "mean {mean}");
}

#[test]
fn gaussian_latents_have_unit_moments() {
    let shape = LatentShape::new(1, 1000, 1000).unwrap();
    let f = FrameLatent::<f64>::sample_gaussian(shape, &mut rng(7));
    let n = f.values().len() as f64;
    let mean = f.values().iter().sum::<f64>() / n;
    let var = f.values().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    assert!(mean.abs() <= 0.005, "mean {mean}");
    assert!((var - 1.0).abs() <= 0.01, "var {var}");
}

#[test]
fn schedule_entries_are_distinct() {
    let s = MessageSchedule::build(256, 512, 8).unwrap();
    let set: HashSet<&BitVec> = s.messages().iter().collect();
    assert_eq!(set.len(), 256);
}

#[test]
fn window_starts_are_uniform() {
    let s = MessageSchedule::build(32, 16, 9).unwrap();
    let mut r = rng(9);
    let mut hist = [0usize; 17];
    for _ in 0..10_000 {
        hist[s.assign_window(16, &mut r).unwrap().start] += 1;
    }
    let e = 10_000.0 / 17.0;
    let chi2: f64 = hist.iter().map(|&o| (o as f64 - e).powi(2) / e).sum();
    let critical = ChiSquared::new(16.0).unwrap().inverse_cdf(0.99);
    assert!(chi2 < critical, "chi2 {chi2} >= {critical}");
}

#[test]
fn flip_rate_matches_numeric_integral() {
    let rho = 0.9f64;
    let sigma = (1.0 - rho * rho).sqrt();
    let normal = Normal::new(0.0, 1.0).unwrap();
    // P(flip) = 2 ∫_0^∞ φ(x) Φ(−ρx/σ) dx, composite Simpson on [0, 12]
    let steps = 20_000;
    let h = 12.0 / steps as f64;
    let f = |x: f64| {
        2.0 * (-(x * x) / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt()
            * normal.cdf(-rho * x / sigma)
    };
    let mut integral = f(0.0) + f(12.0);
    for i in 1..steps {
        integral += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    integral *= h / 3.0;
    approx::assert_abs_diff_eq!(channel::flip_probability(rho), integral, epsilon = 1e-6);

    let shape = LatentShape::new(1, 1000, 1000).unwrap();
    let x = FrameLatent::<f64>::sample_gaussian(shape, &mut rng(10));
    let video = VideoLatent::new(vec![x]).unwrap();
    let y = channel::invert(&video, &ChannelParams::new(rho, 10).unwrap()).unwrap();
    let flips = video.frames()[0]
        .values()
        .iter()
        .zip(y.frames()[0].values())
        .filter(|(a, b)| (**a < 0.0) != (**b < 0.0))
        .count();
    let rate = flips as f64 / 1e6;
    assert!(
        (rate - integral).abs() <= 0.005,
        "rate {rate} vs {integral}"
    );
}

#[test]
fn soft_signs_are_the_gaussian_posterior() {
    // P(x > 0 | y) for x ~ N(0,1), y = ρx + σξ is Φ(ρy / σ)
    let rho = 0.7f64;
    let sigma = (1.0 - rho * rho).sqrt();
    let normal = Normal::new(0.0, 1.0).unwrap();
    let shape = LatentShape::new(1, 1, 5).unwrap();
    let ys = [-2.0, -0.3, 0.0, 0.4, 1.5];
    let frame = FrameLatent::<f64>::new(shape, ys.to_vec()).unwrap();
    let soft = frame.soft_signs(rho);
    for (y, s) in ys.iter().zip(soft.values()) {
        let p = normal.cdf(rho * y / sigma);
        assert!((s - (2.0 * p - 1.0)).abs() < 1e-9);
    }
}

#[test]
fn random_messages_are_half_apart() {
    let mut r = rng(11);
    let pairs = 10_000;
    let mean = (0..pairs)
        .map(|_| hamming(&BitVec::random(512, &mut r), &BitVec::random(512, &mut r)).unwrap())
        .sum::<f64>()
        / pairs as f64;
    let sigma = (0.25 / (512.0 * pairs as f64)).sqrt();
    assert!((mean - 0.5).abs() <= 3.0 * sigma, "mean {mean}");
}

fn random_instance(r: &mut ChaCha8Rng) -> (Vec<BitVec>, Vec<Option<BitVec>>) {
    let a = r.random_range(1..=6);
    let b = r.random_range(0..=6);
    let reference: Vec<BitVec> = (0..a).map(|_| BitVec::random(8, r)).collect();
    let decoded = (0..b)
        .map(|_| match r.random_range(0..4) {
            0 => None,
            1 => Some(BitVec::random(8, r)),
            _ => {
                let mut m = reference[r.random_range(0..a)].clone();
                if r.random::<bool>() {
                    m.flip(r.random_range(0..8));
                }
                Some(m)
            }
        })
        .collect();
    (reference, decoded)
}

fn path_cost(reference: &[BitVec], decoded: &[Option<BitVec>], ops: &[AlignOp]) -> f64 {
    let (mut i, mut j) = (0, 0);
    let mut cost = 0.0;
    for op in ops {
        match *op {
            AlignOp::Match { i: a, j: b } | AlignOp::Substitute { i: a, j: b } => {
                assert_eq!((a, b), (i, j));
                cost += match &decoded[b] {
                    Some(d) => 2.0 * (hamming(&reference[a], d).unwrap() - 0.5),
                    None => 1.0,
                };
                i += 1;
                j += 1;
            }
            AlignOp::Insert { j: b } => {
                assert_eq!(b, j);
                cost += 1.0;
                j += 1;
            }
            AlignOp::Delete { i: a } => {
                assert_eq!(a, i);
                cost += 1.0;
                i += 1;
            }
        }
    }
    assert_eq!((i, j), (reference.len(), decoded.len()));
    cost
}

#[test]
fn edit_distance_matches_exhaustive_enumeration() {
    let mut r = rng(12);
    for inst in 0..500 {
        let (reference, decoded) = random_instance(&mut r);
        let (cost, ops) = edit_distance(&reference, &decoded).unwrap();
        let brute = brute_force_alignment(&reference, &decoded);
        assert!(
            (cost - brute).abs() < 1e-9,
            "instance {inst}: {cost} vs {brute}"
        );
        assert!((path_cost(&reference, &decoded, &ops) - cost).abs() < 1e-9);
    }
}

#[test]
fn temporal_match_minimizes_over_starts_and_tails() {
    let mut r = rng(13);
    for inst in 0..100u64 {
        let schedule = MessageSchedule::build(10, 8, inst).unwrap();
        let m = r.random_range(1..=4);
        let decoded: Vec<Option<BitVec>> = (0..m)
            .map(|_| match r.random_range(0..3) {
                0 => None,
                1 => Some(BitVec::random(8, &mut r)),
                _ => Some(schedule.messages()[r.random_range(0..10)].clone()),
            })
            .collect();
        let found = temporal_match(&schedule, &decoded, None).unwrap();
        let mut brute = f64::INFINITY;
        for s in 0..10 {
            let end = (s + m + ALIGN_SLACK).min(10);
            for e in s..=end {
                let cost = if e == s {
                    m as f64
                } else {
                    brute_force_alignment(&schedule.messages()[s..e], &decoded)
                };
                brute = brute.min(cost);
            }
        }
        assert!((found.path.cost - brute).abs() < 1e-9, "instance {inst}");
    }
}
