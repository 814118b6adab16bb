use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_K_PAD: usize = 64;
pub const DEFAULT_SPARSITY: usize = 3;
pub const DEFAULT_FPR: f64 = 1e-6;
pub const DEFAULT_MAX_BP_ITERS: usize = 100;
pub const DEFAULT_LLR_CLAMP: f64 = 1.0 - 1e-6;

/// Parameters of the pseudorandom code.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrcParams {
    /// Codeword length (latent elements per frame).
    pub n: usize,
    /// Payload bits per frame.
    pub k_msg: usize,
    /// Minimum number of random padding bits.
    pub k_pad: usize,
    /// Number of parity checks.
    pub r: usize,
    /// Ones per parity check.
    pub t: usize,
    /// Encode-time Bernoulli noise rate.
    pub eta: f64,
    /// Per-frame false-positive target.
    pub fpr: f64,
    pub max_bp_iters: usize,
    pub llr_clamp: f64,
}

impl PrcParams {
    /// Defaults for a given frame size and payload: `r = n - k_msg - k_pad`,
    /// the largest parity count that still leaves room for the payload.
    pub fn new(n: usize, k_msg: usize) -> Self {
        let k_pad = DEFAULT_K_PAD.min(n.saturating_sub(k_msg));
        Self {
            n,
            k_msg,
            k_pad,
            r: n.saturating_sub(k_msg + k_pad),
            t: DEFAULT_SPARSITY,
            eta: 0.0,
            fpr: DEFAULT_FPR,
            max_bp_iters: DEFAULT_MAX_BP_ITERS,
            llr_clamp: DEFAULT_LLR_CLAMP,
        }
    }

    pub fn with_sparsity(mut self, t: usize) -> Self {
        self.t = t;
        self
    }

    pub fn with_pad(mut self, k_pad: usize) -> Self {
        self.k_pad = k_pad;
        self.r = self.n.saturating_sub(self.k_msg + k_pad);
        self
    }

    pub fn with_checks(mut self, r: usize) -> Self {
        self.r = r;
        self
    }

    pub fn with_fpr(mut self, fpr: f64) -> Self {
        self.fpr = fpr;
        self
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }

    /// Required null-space dimension.
    pub fn min_dimension(&self) -> usize {
        self.k_msg + self.k_pad
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        if self.n == 0 {
            return bad("n must be positive".into());
        }
        if self.k_msg == 0 {
            return bad("k_msg must be positive".into());
        }
        if self.k_msg + self.k_pad > self.n {
            return bad(format!(
                "k_msg + k_pad = {} exceeds n = {}",
                self.k_msg + self.k_pad,
                self.n
            ));
        }
        if self.t < 2 {
            return bad(format!("sparsity t = {} must be at least 2", self.t));
        }
        if self.r > 0 && self.t > self.n {
            return bad(format!("sparsity t = {} exceeds n = {}", self.t, self.n));
        }
        if !(0.0..0.5).contains(&self.eta) {
            return bad(format!("eta = {} must lie in [0, 0.5)", self.eta));
        }
        if !(self.fpr > 0.0 && self.fpr < 1.0) {
            return bad(format!("fpr = {} must lie in (0, 1)", self.fpr));
        }
        if !(self.llr_clamp > 0.0 && self.llr_clamp < 1.0) {
            return bad(format!("llr_clamp = {} must lie in (0, 1)", self.llr_clamp));
        }
        if u32::try_from(self.n).is_err() || u32::try_from(self.r).is_err() {
            return bad("dimensions must fit in 32 bits".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_the_redundancy_budget() {
        let p = PrcParams::new(16384, 512);
        assert_eq!(p.k_pad, 64);
        assert_eq!(p.r, 16384 - 576);
        assert_eq!(p.t, 3);
        p.validate().unwrap();
    }

    #[test]
    fn rejects_bad_values() {
        let base = PrcParams::new(64, 8);
        assert!(base.clone().with_sparsity(1).validate().is_err());
        assert!(base.clone().with_eta(0.5).validate().is_err());
        assert!(base.clone().with_fpr(0.0).validate().is_err());
        let mut p = base.clone();
        p.llr_clamp = 1.0;
        assert!(p.validate().is_err());
        let mut p = base;
        p.k_msg = 0;
        assert!(p.validate().is_err());
    }
}
