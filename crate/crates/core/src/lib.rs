//! Pseudorandom-code watermarking for video latents.
//!
//! Each frame's initial Gaussian latent carries a pseudorandom codeword in its
//! signs. Frames take consecutive messages from a keyed schedule, so a
//! verifier can decode frames independently, realign them against the
//! schedule after frames are dropped, inserted or swapped, and test the
//! alignment cost against random sequences.

pub mod channel;
pub mod error;
pub mod experiment;
pub mod gf2;
pub mod latent;
pub mod prc;
pub mod rng;
pub mod scalar;
pub mod schedule;
pub mod stats;
pub mod temporal;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type FrameLatentF32 = latent::FrameLatent<f32>;
pub type FrameLatentF64 = latent::FrameLatent<f64>;
pub type VideoLatentF32 = latent::VideoLatent<f32>;
pub type VideoLatentF64 = latent::VideoLatent<f64>;
pub type SoftSignalF32 = prc::SoftSignal<f32>;
pub type SoftSignalF64 = prc::SoftSignal<f64>;
