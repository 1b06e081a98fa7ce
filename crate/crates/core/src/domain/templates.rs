use std::collections::BTreeMap;
use std::sync::LazyLock;

use serde::Deserialize;

use super::channel::{ChannelId, Feature, Side};
use super::cycle::{Waveform, TIMEPOINTS};

/// Samples per limb-relative cycle before the closing 100% point.
pub(crate) const PERIOD: usize = TIMEPOINTS - 1;
/// Half a cycle, in samples.
pub(crate) const HALF_PERIOD: usize = PERIOD / 2;

#[derive(Deserialize)]
struct TemplateFile {
    phase_shift_percent: u32,
    curves: BTreeMap<String, CurveEntry>,
}

#[derive(Deserialize)]
struct CurveEntry {
    samples: Vec<f64>,
}

static CURVES: LazyLock<BTreeMap<Feature, [f64; PERIOD]>> = LazyLock::new(|| {
    let file: TemplateFile =
        serde_json::from_str(include_str!("../../data/normal_templates.json")).expect("shipped template file parses");
    assert_eq!(file.phase_shift_percent, 50);
    Feature::ALL
        .into_iter()
        .map(|f| {
            let entry = file
                .curves
                .get(f.as_str())
                .unwrap_or_else(|| panic!("template for {} missing", f.as_str()));
            let samples: [f64; PERIOD] = entry.samples.as_slice().try_into().expect("templates carry 10 samples");
            (f, samples)
        })
        .collect()
});

/// Limb-relative base curve of a feature (10 samples, 0%..90%).
pub fn base_curve(feature: Feature) -> [f64; PERIOD] {
    CURVES[&feature]
}

/// Maps a limb-relative periodic profile onto the trial's time axis. Right
/// and pelvis channels start at their own contact; left is advanced 50%.
pub fn to_trial_time(side: Side, own_phase: &[f64; PERIOD]) -> Waveform {
    let shift = match side {
        Side::Left => HALF_PERIOD,
        Side::Right | Side::Center => 0,
    };
    std::array::from_fn(|i| own_phase[(i + shift) % PERIOD])
}

/// Fixed NORMAL-class waveform for a channel.
pub fn normal_template(channel: ChannelId) -> Waveform {
    to_trial_time(channel.side(), &base_curve(channel.feature()))
}
