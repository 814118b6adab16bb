//! Gaussian initial latents and sign modulation.
//!
//! A watermarked latent keeps the magnitudes of a standard-normal draw and
//! takes its signs from a codeword, so each element is still standard normal
//! when the codeword signs are uniform.

pub mod vmlt;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf2::BitVec;
use crate::prc::{Codeword, PrcKey, SoftSignal};
use crate::rng::{self, tag};
use crate::scalar::Scalar;

/// Channels × height × width of one frame latent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatentShape {
    pub c: usize,
    pub h: usize,
    pub w: usize,
}

impl LatentShape {
    pub fn new(c: usize, h: usize, w: usize) -> Result<Self> {
        let s = Self { c, h, w };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.c == 0 || self.h == 0 || self.w == 0 {
            return Err(Error::InvalidParams(format!(
                "latent shape ({}, {}, {}) has an empty axis",
                self.c, self.h, self.w
            )));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.c * self.h * self.w
    }

    pub fn dims(&self) -> [usize; 3] {
        [self.c, self.h, self.w]
    }
}

impl Default for LatentShape {
    fn default() -> Self {
        Self { c: 4, h: 64, w: 64 }
    }
}

impl std::fmt::Display for LatentShape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {}, {})", self.c, self.h, self.w)
    }
}

/// One frame's latent tensor, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameLatent<T> {
    shape: LatentShape,
    values: Vec<T>,
}

impl<T: Scalar> FrameLatent<T> {
    pub fn new(shape: LatentShape, values: Vec<T>) -> Result<Self> {
        shape.validate()?;
        if values.len() != shape.n() {
            return Err(Error::ShapeMismatch(format!(
                "{} values for shape {shape}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams(
                "latent contains non-finite values".into(),
            ));
        }
        Ok(Self { shape, values })
    }

    /// I.i.d. standard-normal entries.
    pub fn sample_gaussian<R: Rng + ?Sized>(shape: LatentShape, rng: &mut R) -> Self {
        let values = (0..shape.n())
            .map(|_| T::of(rng.sample::<f64, _>(StandardNormal)))
            .collect();
        Self { shape, values }
    }

    pub fn shape(&self) -> LatentShape {
        self.shape
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    /// Element at `(channel, row, col)`.
    pub fn at(&self, c: usize, y: usize, x: usize) -> T {
        self.values[(c * self.shape.h + y) * self.shape.w + x]
    }

    /// Hard signs as a soft signal; zero maps to `+1`.
    pub fn extract_signs(&self) -> SoftSignal<T> {
        let values = self
            .values
            .iter()
            .map(|&v| if v < T::zero() { -T::one() } else { T::one() })
            .collect();
        SoftSignal::new(values).expect("signs lie in [-1, 1]")
    }

    /// Posterior sign confidence `2Φ(αy) − 1` for a latent observed through
    /// the Gaussian channel `y = ρx + sqrt(1 − ρ²)ξ`, with `α = ρ / sqrt(1 − ρ²)`.
    pub fn soft_signs(&self, rho: f64) -> SoftSignal<T> {
        if rho >= 1.0 {
            return self.extract_signs();
        }
        let alpha = rho / (1.0 - rho * rho).sqrt();
        let values = self
            .values
            .iter()
            .map(|&v| {
                // 2Φ(z) − 1 = erf(z / √2)
                T::of(statrs::function::erf::erf(
                    alpha * v.as_f64() / std::f64::consts::SQRT_2,
                ))
            })
            .collect();
        SoftSignal::new(values).expect("erf lies in [-1, 1]")
    }
}

/// `codeword_j · |noise_j|` element-wise.
pub fn embed_frame<T: Scalar>(
    codeword: &Codeword,
    noise: &FrameLatent<T>,
) -> Result<FrameLatent<T>> {
    if codeword.len() != noise.values.len() {
        return Err(Error::ShapeMismatch(format!(
            "codeword of length {} for latent shape {}",
            codeword.len(),
            noise.shape
        )));
    }
    let bits = codeword.bits();
    let values = noise
        .values
        .iter()
        .enumerate()
        .map(|(j, &v)| if bits.get(j) { -v.abs() } else { v.abs() })
        .collect();
    Ok(FrameLatent {
        shape: noise.shape,
        values,
    })
}

/// An ordered list of same-shaped frame latents.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoLatent<T> {
    frames: Vec<FrameLatent<T>>,
}

impl<T: Scalar> VideoLatent<T> {
    pub fn new(frames: Vec<FrameLatent<T>>) -> Result<Self> {
        let Some(first) = frames.first() else {
            return Err(Error::InvalidParams(
                "a video needs at least one frame".into(),
            ));
        };
        let shape = first.shape;
        if let Some(bad) = frames.iter().find(|f| f.shape != shape) {
            return Err(Error::ShapeMismatch(format!(
                "frame shape {} differs from {shape}",
                bad.shape
            )));
        }
        Ok(Self { frames })
    }

    pub fn shape(&self) -> LatentShape {
        self.frames[0].shape
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn frames(&self) -> &[FrameLatent<T>] {
        &self.frames
    }

    pub fn frames_mut(&mut self) -> &mut [FrameLatent<T>] {
        &mut self.frames
    }

    pub fn into_frames(self) -> Vec<FrameLatent<T>> {
        self.frames
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbedOptions {
    /// Leave frame 0 as plain Gaussian noise.
    pub skip_first_frame: bool,
}

/// Embeds one message per frame. Frame `i` draws its noise and its codeword
/// padding from substreams of `seed` indexed by `i`.
pub fn embed_video<T: Scalar>(
    key: &PrcKey,
    messages: &[BitVec],
    shape: LatentShape,
    seed: u64,
    options: EmbedOptions,
) -> Result<VideoLatent<T>> {
    if shape.n() != key.n() {
        return Err(Error::ShapeMismatch(format!(
            "latent shape {shape} has {} elements, key expects {}",
            shape.n(),
            key.n()
        )));
    }
    let frames = messages
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let mut noise_rng = rng::stream(seed, &[tag::NOISE, i as u64]);
            let noise = FrameLatent::sample_gaussian(shape, &mut noise_rng);
            if i == 0 && options.skip_first_frame {
                return Ok(noise);
            }
            let mut enc_rng = rng::stream(seed, &[tag::ENCODE, i as u64]);
            let codeword = key.encode(m, &mut enc_rng)?;
            embed_frame(&codeword, &noise)
        })
        .collect::<Result<Vec<_>>>()?;
    VideoLatent::new(frames)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prc::{keygen, PrcParams};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn gaussian_is_reproducible() {
        let shape = LatentShape::new(1, 1, 4).unwrap();
        let a = FrameLatent::<f64>::sample_gaussian(shape, &mut ChaCha8Rng::seed_from_u64(3));
        let b = FrameLatent::<f64>::sample_gaussian(shape, &mut ChaCha8Rng::seed_from_u64(3));
        let c = FrameLatent::<f64>::sample_gaussian(shape, &mut ChaCha8Rng::seed_from_u64(4));
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn sign_algebra() {
        let shape = LatentShape::new(1, 1, 2).unwrap();
        let noise = FrameLatent::new(shape, vec![-0.5f64, 2.0]).unwrap();
        let cw = Codeword::from_bits(BitVec::from_bools(&[true, true]));
        assert_eq!(embed_frame(&cw, &noise).unwrap().values(), &[-0.5, -2.0]);
        let plus = Codeword::from_bits(BitVec::zeros(2));
        assert_eq!(embed_frame(&plus, &noise).unwrap().values(), &[0.5, 2.0]);
    }

    #[test]
    fn extract_maps_zero_to_plus() {
        let shape = LatentShape::new(1, 1, 3).unwrap();
        let f = FrameLatent::new(shape, vec![-0.2f32, 0.0, 3.1]).unwrap();
        assert_eq!(f.extract_signs().values(), &[-1.0, 1.0, 1.0]);
    }

    #[test]
    fn shape_errors() {
        assert!(LatentShape::new(0, 2, 2).is_err());
        let shape = LatentShape::new(1, 2, 2).unwrap();
        assert!(matches!(
            FrameLatent::new(shape, vec![0.0f64; 3]),
            Err(Error::ShapeMismatch(_))
        ));
        let noise = FrameLatent::new(shape, vec![1.0f64; 4]).unwrap();
        let cw = Codeword::from_bits(BitVec::zeros(5));
        assert!(matches!(
            embed_frame(&cw, &noise),
            Err(Error::ShapeMismatch(_))
        ));
        assert!(VideoLatent::<f64>::new(vec![]).is_err());
    }

    #[test]
    fn row_major_indexing() {
        let shape = LatentShape::new(2, 2, 3).unwrap();
        let f = FrameLatent::new(shape, (0..12).map(|v| v as f64).collect()).unwrap();
        assert_eq!(f.at(1, 0, 2), 8.0);
        assert_eq!(f.at(0, 1, 0), 3.0);
    }

    #[test]
    fn soft_signs_follow_the_posterior() {
        let shape = LatentShape::new(1, 1, 3).unwrap();
        let f = FrameLatent::new(shape, vec![0.0f64, 1.0, -1.0]).unwrap();
        let s = f.soft_signs(0.6);
        // α = 0.75, Φ(0.75) = 0.773373
        assert_eq!(s.values()[0], 0.0);
        assert!((s.values()[1] - (2.0 * 0.773_372_7 - 1.0)).abs() < 1e-6);
        assert!((s.values()[1] + s.values()[2]).abs() < 1e-12);
    }

    #[test]
    fn video_embedding_uses_independent_frames() {
        let key = keygen(&PrcParams::new(256, 16), 1).unwrap();
        let shape = LatentShape::new(1, 16, 16).unwrap();
        let mut r = ChaCha8Rng::seed_from_u64(0);
        let msgs: Vec<BitVec> = (0..4).map(|_| BitVec::random(16, &mut r)).collect();
        let v: VideoLatent<f64> =
            embed_video(&key, &msgs, shape, 5, EmbedOptions::default()).unwrap();
        assert_eq!(v.len(), 4);
        assert_ne!(v.frames()[0].values(), v.frames()[1].values());
        for (frame, m) in v.frames().iter().zip(&msgs) {
            let out = key.decode(&frame.extract_signs()).unwrap();
            assert_eq!(out.message.as_ref(), Some(m));
        }
        let skipped: VideoLatent<f64> = embed_video(
            &key,
            &msgs,
            shape,
            5,
            EmbedOptions {
                skip_first_frame: true,
            },
        )
        .unwrap();
        assert!(key
            .decode(&skipped.frames()[0].extract_signs())
            .unwrap()
            .message
            .is_none());
        assert_eq!(skipped.frames()[1], v.frames()[1]);
        let wrong = LatentShape::new(1, 8, 8).unwrap();
        assert!(embed_video::<f64>(&key, &msgs, wrong, 5, EmbedOptions::default()).is_err());
    }
}
