//! Encoding to ±1 codewords and soft-decision decoding.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::bp::sum_product;
use super::key::PrcKey;
use crate::error::{check_len, Error, Result};
use crate::gf2::BitVec;
use crate::scalar::Scalar;

/// Smallest channel reliability used when the signal looks like noise.
const MIN_RELIABILITY: f64 = 1e-3;

/// A ±1 codeword, stored as bits (0 ↦ +1, 1 ↦ −1).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Codeword {
    bits: BitVec,
}

impl Codeword {
    pub fn from_bits(bits: BitVec) -> Self {
        Self { bits }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &BitVec {
        &self.bits
    }

    #[inline]
    pub fn sign(&self, i: usize) -> i8 {
        if self.bits.get(i) {
            -1
        } else {
            1
        }
    }

    pub fn values(&self) -> Vec<i8> {
        (0..self.len()).map(|i| self.sign(i)).collect()
    }

    pub fn to_signal<T: Scalar>(&self) -> SoftSignal<T> {
        SoftSignal {
            values: (0..self.len())
                .map(|i| T::of(self.sign(i) as f64))
                .collect(),
        }
    }
}

/// Per-element sign confidence in `[-1, 1]`; `+1` is a certain `+1` symbol,
/// `0` carries no information.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftSignal<T> {
    values: Vec<T>,
}

impl<T: Scalar> SoftSignal<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        if let Some(i) = values
            .iter()
            .position(|v| !v.is_finite() || v.abs() > T::one())
        {
            return Err(Error::InvalidParams(format!(
                "soft value {} at {i} outside [-1, 1]",
                values[i]
            )));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Hard decision per element (negative means bit 1).
    pub fn hard_bits(&self) -> BitVec {
        let mut out = BitVec::zeros(self.len());
        for (i, v) in self.values.iter().enumerate() {
            if *v < T::zero() {
                out.set(i, true);
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodeOutcome {
    /// The recovered payload, or `None` when the frame is rejected.
    pub message: Option<BitVec>,
    /// Fraction of parity checks satisfied by the received signs.
    pub parity_satisfaction: f64,
    /// Fraction of positions where the re-encoded codeword matches the
    /// received signs (zero when nothing was decoded).
    pub agreement: f64,
    pub bp_iterations: usize,
    pub converged: bool,
}

impl PrcKey {
    /// Encodes `message` with fresh random padding drawn from `rng`.
    pub fn encode<R: Rng + ?Sized>(&self, message: &BitVec, rng: &mut R) -> Result<Codeword> {
        check_len(self.k_msg(), message.len())?;
        let pad = BitVec::random(self.dimension() - self.k_msg(), rng);
        let mut codeword = self.encode_with_pad(message, &pad)?;
        if self.params.eta > 0.0 {
            for i in 0..self.n() {
                if rng.random::<f64>() < self.params.eta {
                    codeword.bits.flip(i);
                }
            }
        }
        Ok(codeword)
    }

    /// Noiseless encoding with explicit padding of `g - k_msg` bits.
    pub fn encode_with_pad(&self, message: &BitVec, pad: &BitVec) -> Result<Codeword> {
        check_len(self.k_msg(), message.len())?;
        check_len(self.dimension() - self.k_msg(), pad.len())?;
        let mut bits = self.generator.mul_vec(&message.concat(pad));
        bits.xor_assign(&self.otp);
        Ok(Codeword { bits })
    }

    /// Number of checks satisfied by `bits` (already stripped of the pad).
    fn satisfied(&self, bits: &BitVec) -> usize {
        self.graph.satisfied_checks(bits)
    }

    fn parity_fraction(&self, satisfied: usize) -> f64 {
        if self.params.r == 0 {
            1.0
        } else {
            satisfied as f64 / self.params.r as f64
        }
    }

    /// Parity-check presence test on the hard signs of `signal`.
    ///
    /// Returns the fraction of satisfied checks and whether that count is
    /// significant at the key's false-positive rate.
    pub fn detect_zero_bit<T: Scalar>(&self, signal: &SoftSignal<T>) -> Result<(f64, bool)> {
        check_len(self.n(), signal.len())?;
        let mut bits = signal.hard_bits();
        bits.xor_assign(&self.otp);
        let sat = self.satisfied(&bits);
        Ok((self.parity_fraction(sat), sat as u64 >= self.accept_count))
    }

    /// Recovers the payload from a possibly corrupted signal.
    pub fn decode<T: Scalar>(&self, signal: &SoftSignal<T>) -> Result<DecodeOutcome> {
        check_len(self.n(), signal.len())?;
        let clamp = T::of(self.params.llr_clamp);
        // strip the pad: flip the sign wherever the pad bit is set
        let stripped: Vec<T> = signal
            .values()
            .iter()
            .enumerate()
            .map(|(i, &v)| if self.otp.get(i) { -v } else { v })
            .collect();
        let received = {
            let mut b = BitVec::zeros(self.n());
            for (i, v) in stripped.iter().enumerate() {
                if *v < T::zero() {
                    b.set(i, true);
                }
            }
            b
        };
        let satisfied = self.satisfied(&received);
        let parity_satisfaction = self.parity_fraction(satisfied);
        let rejected = DecodeOutcome {
            message: None,
            parity_satisfaction,
            agreement: 0.0,
            bp_iterations: 0,
            converged: false,
        };
        if (satisfied as u64) < self.accept_count {
            return Ok(rejected);
        }

        // Hard signs carry no reliability of their own; scale them by the
        // channel reliability implied by the check satisfaction rate,
        // E[prod of t signs] = (1 - 2p)^t.
        let hard = stripped.iter().all(|v| v.abs() >= clamp);
        let reliability = if hard && self.params.r > 0 {
            let bias = (2.0 * parity_satisfaction - 1.0).max(0.0);
            T::of(
                bias.powf(1.0 / self.params.t as f64)
                    .clamp(MIN_RELIABILITY, self.params.llr_clamp),
            )
        } else {
            T::one()
        };
        let two = T::of(2.0);
        let llr: Vec<T> = stripped
            .iter()
            .map(|&v| two * (v * reliability).max(-clamp).min(clamp).atanh())
            .collect();

        let bp = sum_product(&self.graph, &llr, self.params.max_bp_iters);
        if !bp.converged {
            return Ok(DecodeOutcome {
                bp_iterations: bp.iterations,
                ..rejected
            });
        }
        let mut at_pivots = BitVec::zeros(self.dimension());
        for (j, &p) in self.pivot_rows.iter().enumerate() {
            if bp.hard.get(p) {
                at_pivots.set(j, true);
            }
        }
        let u = self.recovery.mul_vec(&at_pivots);
        let reencoded = self.generator.mul_vec(&u);
        if reencoded != bp.hard {
            // cannot happen for a consistent key: every solution of the
            // checks lies in the span of the generator
            return Ok(DecodeOutcome {
                bp_iterations: bp.iterations,
                ..rejected
            });
        }
        let agreement = 1.0 - reencoded.hamming(&received) as f64 / self.n() as f64;
        Ok(DecodeOutcome {
            message: Some(u.slice(0, self.k_msg())),
            parity_satisfaction,
            agreement,
            bp_iterations: bp.iterations,
            converged: true,
        })
    }
}
