//! A parametric stand-in for generation followed by DDIM inversion, plus
//! temporal and spatial attacks.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::latent::{FrameLatent, VideoLatent};
use crate::prc::SoftSignal;
use crate::rng::{self, tag};
use crate::scalar::Scalar;

/// How recovered latents are turned into decoder input.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignMode {
    /// Signs only.
    #[default]
    Hard,
    /// Posterior sign confidence under the channel model.
    Soft,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    /// Correlation between the embedded and recovered latent; 1 is perfect.
    pub rho: f64,
    #[serde(default)]
    pub mode: SignMode,
    #[serde(default)]
    pub seed: u64,
    /// Frame 0 comes back as pure noise (image-to-video conditioning).
    #[serde(default)]
    pub first_frame_lost: bool,
}

impl ChannelParams {
    pub fn new(rho: f64, seed: u64) -> Result<Self> {
        let p = Self {
            rho,
            mode: SignMode::Hard,
            seed,
            first_frame_lost: false,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_mode(mut self, mode: SignMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(Error::InvalidParams(format!(
                "rho = {} must lie in [0, 1]",
                self.rho
            )));
        }
        Ok(())
    }

    fn frame_rho(&self, index: usize) -> f64 {
        if index == 0 && self.first_frame_lost {
            0.0
        } else {
            self.rho
        }
    }

    /// Decoder input for one recovered frame. The verifier does not know
    /// which frames were lost, so soft mode assumes the nominal fidelity.
    pub fn observe<T: Scalar>(&self, frame: &FrameLatent<T>) -> SoftSignal<T> {
        match self.mode {
            SignMode::Hard => frame.extract_signs(),
            SignMode::Soft => frame.soft_signs(self.rho),
        }
    }
}

/// Probability that the channel flips the sign of a standard-normal element.
pub fn flip_probability(rho: f64) -> f64 {
    rho.clamp(-1.0, 1.0).acos() / std::f64::consts::PI
}

/// Inverse of [`flip_probability`].
pub fn rho_for_flip(p: f64) -> f64 {
    (std::f64::consts::PI * p.clamp(0.0, 0.5)).cos()
}

/// `rho·x + sqrt(1 − rho²)·ξ` element-wise, with independent noise per frame.
pub fn invert<T: Scalar>(
    latents: &VideoLatent<T>,
    params: &ChannelParams,
) -> Result<VideoLatent<T>> {
    params.validate()?;
    let frames = latents
        .frames()
        .iter()
        .enumerate()
        .map(|(i, frame)| {
            let rho = params.frame_rho(i);
            if rho == 1.0 {
                return frame.clone();
            }
            let mut rng = rng::stream(params.seed, &[tag::CHANNEL, i as u64]);
            let a = T::of(rho);
            let b = T::of((1.0 - rho * rho).sqrt());
            let values = frame
                .values()
                .iter()
                .map(|&x| a * x + b * T::of(rng.sample::<f64, _>(StandardNormal)))
                .collect();
            FrameLatent::new(frame.shape(), values).expect("finite by construction")
        })
        .collect();
    VideoLatent::new(frames)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpatialKind {
    Blur,
    Jitter,
    Compress,
}

impl SpatialKind {
    /// Fraction of fidelity lost at full severity.
    pub fn kappa(self) -> f64 {
        match self {
            SpatialKind::Blur => 0.25,
            SpatialKind::Jitter => 0.15,
            SpatialKind::Compress => 0.35,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum AttackSpec {
    Swap { i: usize, j: usize },
    Insert { position: usize, count: usize },
    Drop { indices: Vec<usize> },
    Spatial { filter: SpatialKind, severity: f64 },
}

impl AttackSpec {
    pub fn is_temporal(&self) -> bool {
        !matches!(self, AttackSpec::Spatial { .. })
    }

    pub fn label(&self) -> String {
        match self {
            AttackSpec::Swap { i, j } => format!("swap({i};{j})"),
            AttackSpec::Insert { position, count } => format!("insert({position};{count})"),
            AttackSpec::Drop { indices } => {
                let parts: Vec<String> = indices.iter().map(|i| i.to_string()).collect();
                format!("drop({})", parts.join(";"))
            }
            AttackSpec::Spatial { filter, severity } => {
                format!("{}({severity})", format!("{filter:?}").to_lowercase())
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            AttackSpec::Spatial { severity, .. } if !(0.0..=1.0).contains(severity) => Err(
                Error::InvalidSpec(format!("severity {severity} must lie in [0, 1]")),
            ),
            AttackSpec::Insert { count: 0, .. } => {
                Err(Error::InvalidSpec("insert count must be positive".into()))
            }
            AttackSpec::Drop { indices } if indices.is_empty() => {
                Err(Error::InvalidSpec("drop needs at least one index".into()))
            }
            _ => Ok(()),
        }
    }
}

/// Applies a temporal attack to any frame sequence. Inserted items come from
/// `fresh`, which is handed `rng`.
pub fn apply_temporal<X, R: Rng + ?Sized>(
    seq: &mut Vec<X>,
    spec: &AttackSpec,
    rng: &mut R,
    mut fresh: impl FnMut(&mut R) -> X,
) -> Result<()> {
    spec.validate()?;
    let len = seq.len();
    match spec {
        AttackSpec::Swap { i, j } => {
            if *i >= len || *j >= len {
                return Err(Error::Index(format!("swap({i}, {j}) on {len} frames")));
            }
            seq.swap(*i, *j);
        }
        AttackSpec::Insert { position, count } => {
            if *position > len {
                return Err(Error::Index(format!(
                    "insert at {position} on {len} frames"
                )));
            }
            let items: Vec<X> = (0..*count).map(|_| fresh(rng)).collect();
            seq.splice(*position..*position, items);
        }
        AttackSpec::Drop { indices } => {
            let mut sorted = indices.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != indices.len() {
                return Err(Error::InvalidSpec("drop indices repeat".into()));
            }
            if let Some(&bad) = sorted.iter().find(|&&i| i >= len) {
                return Err(Error::Index(format!("drop({bad}) on {len} frames")));
            }
            if sorted.len() == len {
                return Err(Error::Index("drop would remove every frame".into()));
            }
            for &i in sorted.iter().rev() {
                seq.remove(i);
            }
        }
        AttackSpec::Spatial { .. } => {
            return Err(Error::InvalidSpec(format!(
                "{} is not a temporal attack",
                spec.label()
            )))
        }
    }
    Ok(())
}

/// Lowers fidelity for a spatial attack: `rho·(1 − κ·severity)`.
pub fn apply_spatial(params: &ChannelParams, spec: &AttackSpec) -> Result<ChannelParams> {
    spec.validate()?;
    match spec {
        AttackSpec::Spatial { filter, severity } => Ok(ChannelParams {
            rho: params.rho * (1.0 - filter.kappa() * severity),
            ..*params
        }),
        _ => Err(Error::InvalidSpec(format!(
            "{} is not a spatial attack",
            spec.label()
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::latent::LatentShape;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(0)
    }

    #[test]
    fn drop_preserves_order() {
        let mut v: Vec<usize> = (0..16).collect();
        apply_temporal(
            &mut v,
            &AttackSpec::Drop { indices: vec![3] },
            &mut rng(),
            |_| 99,
        )
        .unwrap();
        assert_eq!(v.len(), 15);
        assert_eq!(v[..3], [0, 1, 2]);
        assert_eq!(v[3], 4);
    }

    #[test]
    fn swap_is_an_involution() {
        let orig: Vec<usize> = (0..16).collect();
        let mut v = orig.clone();
        let s = AttackSpec::Swap { i: 0, j: 15 };
        apply_temporal(&mut v, &s, &mut rng(), |_| 0).unwrap();
        assert_eq!((v[0], v[15]), (15, 0));
        apply_temporal(&mut v, &s, &mut rng(), |_| 0).unwrap();
        assert_eq!(v, orig);
    }

    #[test]
    fn insert_places_fresh_items() {
        let mut v: Vec<i32> = (0..4).collect();
        let s = AttackSpec::Insert {
            position: 2,
            count: 2,
        };
        apply_temporal(&mut v, &s, &mut rng(), |_| -1).unwrap();
        assert_eq!(v, vec![0, 1, -1, -1, 2, 3]);
        let s = AttackSpec::Insert {
            position: 6,
            count: 1,
        };
        apply_temporal(&mut v, &s, &mut rng(), |_| -2).unwrap();
        assert_eq!(v.last(), Some(&-2));
    }

    #[test]
    fn out_of_range_specs_fail() {
        let mut v: Vec<u8> = vec![0; 4];
        let cases = [
            AttackSpec::Swap { i: 0, j: 4 },
            AttackSpec::Insert {
                position: 5,
                count: 1,
            },
            AttackSpec::Drop { indices: vec![4] },
            AttackSpec::Drop {
                indices: vec![0, 1, 2, 3],
            },
        ];
        for c in &cases {
            assert!(matches!(
                apply_temporal(&mut v, c, &mut rng(), |_| 0),
                Err(Error::Index(_))
            ));
        }
        assert_eq!(v.len(), 4);
        let spatial = AttackSpec::Spatial {
            filter: SpatialKind::Blur,
            severity: 0.5,
        };
        assert!(matches!(
            apply_temporal(&mut v, &spatial, &mut rng(), |_| 0),
            Err(Error::InvalidSpec(_))
        ));
    }

    #[test]
    fn spatial_map() {
        let p = ChannelParams::new(0.9, 0).unwrap();
        let blur = |severity| AttackSpec::Spatial {
            filter: SpatialKind::Blur,
            severity,
        };
        assert_eq!(apply_spatial(&p, &blur(0.0)).unwrap().rho, 0.9);
        assert!((apply_spatial(&p, &blur(1.0)).unwrap().rho - 0.675).abs() < 1e-12);
        assert!(apply_spatial(&p, &blur(1.5)).is_err());
        assert!(matches!(
            apply_spatial(&p, &AttackSpec::Drop { indices: vec![0] }),
            Err(Error::InvalidSpec(_))
        ));
    }

    #[test]
    fn perfect_fidelity_is_identity_and_first_frame_can_be_lost() {
        let shape = LatentShape::new(1, 4, 4).unwrap();
        let mut r = rng();
        let v = VideoLatent::new(
            (0..3)
                .map(|_| FrameLatent::<f64>::sample_gaussian(shape, &mut r))
                .collect(),
        )
        .unwrap();
        let p = ChannelParams::new(1.0, 3).unwrap();
        assert_eq!(invert(&v, &p).unwrap(), v);
        let lost = ChannelParams {
            first_frame_lost: true,
            ..p
        };
        let out = invert(&v, &lost).unwrap();
        assert_ne!(out.frames()[0], v.frames()[0]);
        assert_eq!(out.frames()[1..], v.frames()[1..]);
        assert!(ChannelParams::new(1.1, 0).is_err());
    }

    #[test]
    fn flip_probability_endpoints() {
        assert_eq!(flip_probability(1.0), 0.0);
        assert!((flip_probability(0.0) - 0.5).abs() < 1e-15);
        assert!((rho_for_flip(flip_probability(0.7)) - 0.7).abs() < 1e-12);
    }

    #[test]
    fn attack_json_shape() {
        let a: AttackSpec = serde_json::from_str(r#"{"kind":"drop","indices":[3,7]}"#).unwrap();
        assert_eq!(
            a,
            AttackSpec::Drop {
                indices: vec![3, 7]
            }
        );
        let s: AttackSpec =
            serde_json::from_str(r#"{"kind":"spatial","filter":"compress","severity":0.5}"#)
                .unwrap();
        assert_eq!(s.label(), "compress(0.5)");
    }
}
