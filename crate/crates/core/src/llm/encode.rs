//! Hierarchical JSON payloads: feature -> side -> timepoint.

use serde_json::Value;
use thiserror::Error;

use crate::domain::channel::Feature;
use crate::domain::{ChannelId, Channels, GaitCycle, TIMEPOINTS, TIMEPOINT_PERCENT};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum DecodeError {
    #[error("payload is not valid JSON: {0}")]
    Json(String),
    #[error("payload is missing {0}")]
    Missing(String),
    #[error("value at {0} is not a number")]
    NotNumber(String),
}

/// Rounds half away from zero to two decimals and renders the result.
pub fn round2(v: f64) -> String {
    // `{:.2}` rounds the exact binary value correctly but breaks exact ties
    // to even; exact ties at two decimals only occur for multiples of 1/8.
    let scaled = v * 8.0;
    let v = if scaled == scaled.trunc() && (v * 100.0).fract().abs() == 0.5 {
        v + v.signum() * 1e-3
    } else {
        v
    };
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".to_string()
    } else {
        s
    }
}

pub fn timepoint_key(t: usize) -> String {
    format!("t{}", TIMEPOINT_PERCENT[t])
}

/// Features in canonical order, each with its sides in canonical order.
pub(crate) fn feature_groups() -> Vec<(Feature, Vec<ChannelId>)> {
    let mut groups: Vec<(Feature, Vec<ChannelId>)> = Vec::new();
    for ch in ChannelId::ALL {
        match groups.last_mut() {
            Some((f, chans)) if *f == ch.feature() => chans.push(ch),
            _ => groups.push((ch.feature(), vec![ch])),
        }
    }
    groups
}

/// Writes `{"feature": {"side": {...leaf...}}}` with `leaf` rendering the
/// per-channel object body.
pub(crate) fn render_hierarchy(mut leaf: impl FnMut(ChannelId, &mut String)) -> String {
    let mut out = String::with_capacity(4096);
    out.push('{');
    for (fi, (feature, chans)) in feature_groups().into_iter().enumerate() {
        if fi > 0 {
            out.push(',');
        }
        out.push('"');
        out.push_str(feature.as_str());
        out.push_str("\":{");
        for (si, ch) in chans.into_iter().enumerate() {
            if si > 0 {
                out.push(',');
            }
            out.push('"');
            out.push_str(ch.side().as_str());
            out.push_str("\":{");
            leaf(ch, &mut out);
            out.push('}');
        }
        out.push('}');
    }
    out.push('}');
    out
}

pub fn encode_channels(channels: &Channels) -> String {
    render_hierarchy(|ch, out| {
        for (t, v) in channels[ch].iter().enumerate() {
            if t > 0 {
                out.push(',');
            }
            out.push('"');
            out.push_str(&timepoint_key(t));
            out.push_str("\":");
            out.push_str(&round2(*v));
        }
    })
}

/// Compact JSON text of one cycle, values rounded to two decimals.
pub fn encode_trial(cycle: &GaitCycle) -> String {
    encode_channels(&cycle.channels)
}

pub(crate) fn leaf(root: &Value, ch: ChannelId) -> Result<&Value, DecodeError> {
    root.get(ch.feature().as_str())
        .and_then(|f| f.get(ch.side().as_str()))
        .ok_or_else(|| DecodeError::Missing(ch.to_string()))
}

pub fn decode_channels_value(root: &Value) -> Result<Channels, DecodeError> {
    let mut out = Channels::from_fn(|_| [0.0; TIMEPOINTS]);
    for ch in ChannelId::ALL {
        let obj = leaf(root, ch)?;
        for t in 0..TIMEPOINTS {
            let key = timepoint_key(t);
            let v = obj
                .get(&key)
                .ok_or_else(|| DecodeError::Missing(format!("{ch}.{key}")))?;
            out[ch][t] = v
                .as_f64()
                .ok_or_else(|| DecodeError::NotNumber(format!("{ch}.{key}")))?;
        }
    }
    Ok(out)
}

/// Inverse of [`encode_channels`] up to the rounding.
pub fn decode_channels(text: &str) -> Result<Channels, DecodeError> {
    let root: Value = serde_json::from_str(text).map_err(|e| DecodeError::Json(e.to_string()))?;
    decode_channels_value(&root)
}
