//! Seeded synthetic cohort generator.
//!
//! Stream order: for each subject (in order) one global amplitude gain, then
//! one offset per channel in canonical order, then one emulation intensity
//! per class in canonical order; then for each class in canonical order and
//! each cycle, 13x11 standard-normal noise draws in canonical channel order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::channel::{ChannelId, Feature, Side};
use super::cycle::{Channels, Dataset, GaitCycle, SubjectId, Waveform, TIMEPOINTS};
use super::label::ClassLabel;
use super::templates::{base_curve, to_trial_time, PERIOD};

/// Identifier of the only supported RNG: ChaCha with 8 rounds (`rand_chacha`).
pub const RNG_ALGORITHM: &str = "chacha8";

/// Default for [`GeneratorConfig::emulation_variation`].
pub const EMULATION_VARIATION: f64 = 0.3;

/// Nominal effect sizes in degrees, multiplied by `class_effect_scale`.
pub mod effects {
    /// Knee flexion added early in stance and removed late in stance.
    pub const BOUNCY_STANCE_DEG: f64 = 15.0;
    /// Knee flexion peak after compression.
    pub const STIFF_KNEE_CAP_DEG: f64 = 15.0;
    pub const CROUCHED_KNEE_DEG: f64 = 40.0;
    pub const CROUCHED_HIP_DEG: f64 = 30.0;
    pub const FOOT_ROTATION_DEG: f64 = 20.0;
    pub const SWING_ABDUCTION_DEG: f64 = 15.0;
    pub const ABDUCTION_EXTERNAL_ROTATION_DEG: f64 = 10.0;
    /// Degrees of subject variation per unit of relative amplitude gain.
    pub const AMPLITUDE_REFERENCE_DEG: f64 = 20.0;
}

/// Limb-relative BOUNCY profile: flexion at 10-20%, re-extension at 40%.
const BOUNCY_PROFILE: [f64; PERIOD] = [0.0, 1.0, 1.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
/// Limb-relative swing window (60-90%).
const SWING_PROFILE: [f64; PERIOD] = [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeneratorConfig {
    pub n_subjects: usize,
    pub cycles_per_class: usize,
    pub rng_seed: u64,
    pub rng_algorithm: String,
    pub noise_sd_deg: f64,
    pub subject_variation_sd_deg: f64,
    pub class_effect_scale: f64,
    /// Log-scale SD of each subject's per-class emulation intensity; 0 makes
    /// every subject perform every pattern at nominal strength.
    pub emulation_variation: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            n_subjects: 20,
            cycles_per_class: 3,
            rng_seed: 42,
            rng_algorithm: RNG_ALGORITHM.to_string(),
            noise_sd_deg: 1.0,
            subject_variation_sd_deg: 2.0,
            class_effect_scale: 1.0,
            emulation_variation: EMULATION_VARIATION,
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ConfigError {
    #[error("n_subjects must be positive")]
    NoSubjects,
    #[error("cycles_per_class must be positive")]
    NoCycles,
    #[error("{field} must be a finite non-negative number, got {value}")]
    BadMagnitude { field: &'static str, value: f64 },
    #[error("unsupported rng_algorithm `{0}` (expected `chacha8`)")]
    UnknownRng(String),
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n_subjects == 0 {
            return Err(ConfigError::NoSubjects);
        }
        if self.cycles_per_class == 0 {
            return Err(ConfigError::NoCycles);
        }
        for (field, value) in [
            ("noise_sd_deg", self.noise_sd_deg),
            ("subject_variation_sd_deg", self.subject_variation_sd_deg),
            ("class_effect_scale", self.class_effect_scale),
            ("emulation_variation", self.emulation_variation),
        ] {
            if !value.is_finite() || value < 0.0 {
                return Err(ConfigError::BadMagnitude { field, value });
            }
        }
        if self.rng_algorithm != RNG_ALGORITHM {
            return Err(ConfigError::UnknownRng(self.rng_algorithm.clone()));
        }
        Ok(())
    }
}

/// Per-trial transform parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformParams {
    pub noise_sd_deg: f64,
    pub class_effect_scale: f64,
}

impl From<&GeneratorConfig> for TransformParams {
    fn from(c: &GeneratorConfig) -> Self {
        TransformParams {
            noise_sd_deg: c.noise_sd_deg,
            class_effect_scale: c.class_effect_scale,
        }
    }
}

pub fn subject_name(index: usize, n_subjects: usize) -> SubjectId {
    let width = n_subjects.to_string().len().max(2);
    SubjectId::new(format!("S{:0width$}", index + 1))
}

pub fn generate_dataset(config: &GeneratorConfig) -> Result<Dataset, ConfigError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let params = TransformParams::from(config);
    let mut cycles = Vec::with_capacity(config.n_subjects * ClassLabel::ALL.len() * config.cycles_per_class);
    for s in 0..config.n_subjects {
        let subject_id = subject_name(s, config.n_subjects);
        let base = subject_base(config.subject_variation_sd_deg, &mut rng);
        let intensity = emulation_intensities(config.emulation_variation, &mut rng);
        for (label, strength) in ClassLabel::ALL.into_iter().zip(intensity) {
            let params = TransformParams {
                class_effect_scale: params.class_effect_scale * strength,
                ..params
            };
            for cycle_index in 0..config.cycles_per_class {
                let channels = apply_class_transform(&base, label, params, &mut rng);
                cycles.push(GaitCycle {
                    subject_id: subject_id.clone(),
                    label,
                    cycle_index: cycle_index as u32,
                    channels,
                });
            }
        }
    }
    Ok(Dataset::from_cycles(cycles))
}

/// Mean-one lognormal multipliers of the class effect, one per class.
pub fn emulation_intensities<R: Rng + ?Sized>(sigma: f64, rng: &mut R) -> [f64; ClassLabel::ALL.len()] {
    std::array::from_fn(|_| (sigma * normal(rng) - 0.5 * sigma * sigma).exp())
}

/// NORMAL templates with one subject's amplitude gain and channel offsets.
pub fn subject_base<R: Rng + ?Sized>(variation_sd: f64, rng: &mut R) -> Channels {
    let gain = 1.0 + variation_sd / effects::AMPLITUDE_REFERENCE_DEG * normal(rng);
    let offsets: [f64; ChannelId::COUNT] = std::array::from_fn(|_| variation_sd * normal(rng));
    Channels::from_fn(|id| {
        let curve = base_curve(id.feature());
        let mean = curve.iter().sum::<f64>() / PERIOD as f64;
        let own = curve.map(|v| mean + gain * (v - mean) + offsets[id.ordinal()]);
        to_trial_time(id.side(), &own)
    })
}

/// Applies a class signature to a subject's NORMAL base and adds smooth noise.
///
/// Bilateral signatures are defined in each limb's own phase and mapped onto
/// trial time, so the left limb sees them half a cycle later. Unilateral
/// signatures touch right-side channels only.
pub fn apply_class_transform<R: Rng + ?Sized>(
    base: &Channels,
    label: ClassLabel,
    params: TransformParams,
    rng: &mut R,
) -> Channels {
    let scale = params.class_effect_scale;
    let mut out = base.clone();
    for id in ChannelId::ALL {
        let wave = &mut out[id];
        let side = id.side();
        let bilateral = side != Side::Center;
        match (label, id.feature()) {
            (ClassLabel::Bouncy, Feature::KneeFlexion) => {
                add_in_own_phase(wave, side, &BOUNCY_PROFILE, effects::BOUNCY_STANCE_DEG * scale);
            }
            (ClassLabel::Stiff, Feature::KneeFlexion) => {
                let peak = wave.iter().cloned().fold(f64::MIN, f64::max);
                if peak > effects::STIFF_KNEE_CAP_DEG {
                    let factor = 1.0 - scale * (1.0 - effects::STIFF_KNEE_CAP_DEG / peak);
                    wave.iter_mut().for_each(|v| *v *= factor);
                }
            }
            (ClassLabel::Crouched, Feature::KneeFlexion) if bilateral => {
                add_constant(wave, effects::CROUCHED_KNEE_DEG * scale);
            }
            (ClassLabel::Crouched, Feature::HipFlexion) => {
                add_constant(wave, effects::CROUCHED_HIP_DEG * scale);
            }
            (ClassLabel::LimbAbduction, Feature::HipAdduction) if side == Side::Right => {
                add_in_own_phase(wave, side, &SWING_PROFILE, effects::SWING_ABDUCTION_DEG * scale);
            }
            (ClassLabel::LimbAbduction, Feature::HipRotation) if side == Side::Right => {
                add_constant(wave, effects::ABDUCTION_EXTERNAL_ROTATION_DEG * scale);
            }
            (ClassLabel::InwardFoot, Feature::HipRotation) if side == Side::Right => {
                add_constant(wave, -effects::FOOT_ROTATION_DEG * scale);
            }
            (ClassLabel::OutwardFoot, Feature::HipRotation) if side == Side::Right => {
                add_constant(wave, effects::FOOT_ROTATION_DEG * scale);
            }
            _ => {}
        }
    }
    for id in ChannelId::ALL {
        let noise = smooth_noise(params.noise_sd_deg, rng);
        for (v, n) in out[id].iter_mut().zip(noise) {
            *v += n;
        }
    }
    out
}

fn add_constant(wave: &mut Waveform, delta: f64) {
    wave.iter_mut().for_each(|v| *v += delta);
}

fn add_in_own_phase(wave: &mut Waveform, side: Side, profile: &[f64; PERIOD], amplitude: f64) {
    let shifted = to_trial_time(side, profile);
    for (v, p) in wave.iter_mut().zip(shifted) {
        *v += amplitude * p;
    }
}

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Gaussian draws on the 11 points followed by a 3-point moving average
/// (2-point at the ends).
fn smooth_noise<R: Rng + ?Sized>(sd: f64, rng: &mut R) -> Waveform {
    let raw: Waveform = std::array::from_fn(|_| sd * normal(rng));
    std::array::from_fn(|i| {
        let lo = i.saturating_sub(1);
        let hi = (i + 1).min(TIMEPOINTS - 1);
        let window = &raw[lo..=hi];
        window.iter().sum::<f64>() / window.len() as f64
    })
}
