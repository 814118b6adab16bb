//! The extended message list and per-video window assignment.
//!
//! A schedule is a list of `L` distinct frame messages regenerated from
//! `(seed, L, k_msg)`. Each video embeds the contiguous slice starting at a
//! uniformly drawn start index.

use std::collections::HashSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf2::BitVec;
use crate::rng::{self, tag};

pub const DEFAULT_SCHEDULE_LEN: usize = 256;
pub const DEFAULT_MAX_FRAMES: usize = 64;

const MAX_DRAWS_PER_ENTRY: usize = 64;

/// What a verifier needs to regenerate the schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleParams {
    pub seed: u64,
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MessageSchedule {
    messages: Vec<BitVec>,
    k_msg: usize,
    seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowAssignment {
    pub start: usize,
    pub messages: Vec<BitVec>,
}

impl WindowAssignment {
    pub fn frames(&self) -> usize {
        self.messages.len()
    }
}

impl MessageSchedule {
    /// Draws `len` distinct uniform `k_msg`-bit messages.
    pub fn build(len: usize, k_msg: usize, seed: u64) -> Result<Self> {
        if len < 2 {
            return Err(Error::InvalidParams(format!(
                "schedule length {len} must be at least 2"
            )));
        }
        if k_msg == 0 {
            return Err(Error::InvalidParams("k_msg must be positive".into()));
        }
        let mut rng = rng::stream(seed, &[tag::SCHEDULE, len as u64, k_msg as u64]);
        let mut seen = HashSet::with_capacity(len);
        let mut messages = Vec::with_capacity(len);
        let mut draws = 0;
        while messages.len() < len {
            if draws >= len * MAX_DRAWS_PER_ENTRY {
                return Err(Error::DuplicateCollision {
                    wanted: len,
                    bits: k_msg,
                });
            }
            draws += 1;
            let m = BitVec::random(k_msg, &mut rng);
            if seen.insert(m.clone()) {
                messages.push(m);
            }
        }
        Ok(Self {
            messages,
            k_msg,
            seed,
        })
    }

    pub fn from_params(params: ScheduleParams, k_msg: usize) -> Result<Self> {
        Self::build(params.len, k_msg, params.seed)
    }

    pub fn len(&self) -> usize {
        self.messages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.messages.is_empty()
    }

    pub fn k_msg(&self) -> usize {
        self.k_msg
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn messages(&self) -> &[BitVec] {
        &self.messages
    }

    pub fn get(&self, i: usize) -> Option<&BitVec> {
        self.messages.get(i)
    }

    /// The window of `frames` messages starting at `start`.
    pub fn window(&self, start: usize, frames: usize) -> Result<WindowAssignment> {
        if start + frames > self.len() {
            return Err(Error::Index(format!(
                "window [{start}, {}) exceeds schedule length {}",
                start + frames,
                self.len()
            )));
        }
        Ok(WindowAssignment {
            start,
            messages: self.messages[start..start + frames].to_vec(),
        })
    }

    /// Samples a start uniformly from `[0, L - frames]`.
    pub fn assign_window<R: Rng + ?Sized>(
        &self,
        frames: usize,
        rng: &mut R,
    ) -> Result<WindowAssignment> {
        if frames == 0 || frames + 1 > self.len() {
            return Err(Error::Length {
                expected: self.len() - 1,
                actual: frames,
            });
        }
        let start = rng.random_range(0..=self.len() - frames);
        self.window(start, frames)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::chi_squared_sf;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn entries_are_distinct_and_reproducible() {
        let a = MessageSchedule::build(256, 512, 9).unwrap();
        let b = MessageSchedule::build(256, 512, 9).unwrap();
        assert_eq!(a, b);
        let set: HashSet<_> = a.messages().iter().collect();
        assert_eq!(set.len(), 256);
        assert!(a.messages().iter().all(|m| m.len() == 512));
        assert_ne!(a, MessageSchedule::build(256, 512, 10).unwrap());
    }

    #[test]
    fn one_bit_messages_exhaust_the_space() {
        let s = MessageSchedule::build(2, 1, 3).unwrap();
        let mut bits: Vec<bool> = s.messages().iter().map(|m| m.get(0)).collect();
        bits.sort();
        assert_eq!(bits, vec![false, true]);
        assert!(matches!(
            MessageSchedule::build(3, 1, 3),
            Err(Error::DuplicateCollision { .. })
        ));
    }

    #[test]
    fn window_is_a_contiguous_slice() {
        let s = MessageSchedule::build(256, 64, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            let w = s.assign_window(16, &mut rng).unwrap();
            assert!(w.start <= 240);
            for (i, m) in w.messages.iter().enumerate() {
                assert_eq!(m, &s.messages()[w.start + i]);
            }
        }
    }

    #[test]
    fn boundary_and_oversized_windows() {
        let s = MessageSchedule::build(32, 16, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let w = s.assign_window(31, &mut rng).unwrap();
            assert!(w.start <= 1);
        }
        assert!(matches!(
            s.assign_window(32, &mut rng),
            Err(Error::Length { .. })
        ));
        assert!(s.assign_window(0, &mut rng).is_err());
    }

    #[test]
    fn start_index_is_uniform() {
        let s = MessageSchedule::build(32, 16, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let draws = 10_000;
        let mut hist = [0usize; 17];
        for _ in 0..draws {
            hist[s.assign_window(16, &mut rng).unwrap().start] += 1;
        }
        let expected = draws as f64 / 17.0;
        let chi2: f64 = hist
            .iter()
            .map(|&h| (h as f64 - expected).powi(2) / expected)
            .sum();
        assert!(chi_squared_sf(chi2, 16.0) > 0.01, "chi2 = {chi2}");
    }
}
