use std::fmt;
use std::str::FromStr;

use ndarray::Array4;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{FluidSpec, VideoConfig};
use crate::{Error, Result};

/// A single (non-composite) background pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BasePattern {
    /// White noise at level 1..=3; each level doubles the cell size.
    Noise(u8),
    Checkerboard,
    /// Seeded random noise/checker pattern from a large procedural family,
    /// used to diversify synthetic data.
    Procedural(u16),
}

/// Background pattern identifier, serialized as `noise-scale-1`,
/// `checkerboard` or `multi(<left>,<right>)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PatternId {
    Single(BasePattern),
    Multi { left: BasePattern, right: BasePattern },
}

impl PatternId {
    pub const NOISE_1: PatternId = PatternId::Single(BasePattern::Noise(1));
    pub const NOISE_2: PatternId = PatternId::Single(BasePattern::Noise(2));
    pub const NOISE_3: PatternId = PatternId::Single(BasePattern::Noise(3));
    pub const CHECKERBOARD: PatternId = PatternId::Single(BasePattern::Checkerboard);

    /// The four patterns of the recording protocol.
    pub fn standard() -> [PatternId; 4] {
        [Self::NOISE_1, Self::NOISE_2, Self::NOISE_3, Self::CHECKERBOARD]
    }
}

impl fmt::Display for BasePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasePattern::Noise(k) => write!(f, "noise-scale-{k}"),
            BasePattern::Checkerboard => f.write_str("checkerboard"),
            BasePattern::Procedural(k) => write!(f, "procedural-{k}"),
        }
    }
}

impl FromStr for BasePattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "checkerboard" {
            return Ok(BasePattern::Checkerboard);
        }
        if let Some(k) = s.strip_prefix("procedural-") {
            return k
                .parse()
                .map(BasePattern::Procedural)
                .map_err(|_| Error::Domain(format!("unknown pattern id `{s}`")));
        }
        match s.strip_prefix("noise-scale-").map(str::parse::<u8>) {
            Some(Ok(k)) if (1..=3).contains(&k) => Ok(BasePattern::Noise(k)),
            _ => Err(Error::Domain(format!("unknown pattern id `{s}`"))),
        }
    }
}

impl fmt::Display for PatternId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PatternId::Single(p) => p.fmt(f),
            PatternId::Multi { left, right } => write!(f, "multi({left},{right})"),
        }
    }
}

impl FromStr for PatternId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(inner) = s.strip_prefix("multi(").and_then(|r| r.strip_suffix(')')) {
            let (l, r) = inner
                .split_once(',')
                .ok_or_else(|| Error::Domain(format!("malformed multi pattern `{s}`")))?;
            return Ok(PatternId::Multi {
                left: l.parse()?,
                right: r.parse()?,
            });
        }
        Ok(PatternId::Single(s.parse()?))
    }
}

impl Serialize for PatternId {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PatternId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Real,
    Synthetic,
}

/// Stirring protocol of one recording.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixingCondition {
    pub omega_rpm: f64,
    pub pattern_id: PatternId,
    pub lighting_id: u8,
    /// Seconds of constant rotation before the impeller stops.
    pub steady_duration: f64,
    /// Seconds of free decay after the stop.
    pub decay_duration: f64,
}

impl MixingCondition {
    pub fn validate(&self, clip_duration: f64) -> Result<()> {
        if !(0.0..=1000.0).contains(&self.omega_rpm) {
            return Err(Error::Domain(format!("omega {} rpm outside [0, 1000]", self.omega_rpm)));
        }
        if self.lighting_id > 4 {
            return Err(Error::Domain(format!("lighting id {} outside 0..=4", self.lighting_id)));
        }
        if !(self.steady_duration >= 0.0) || !(self.decay_duration >= 0.0) {
            return Err(Error::Domain("schedule durations must be non-negative".into()));
        }
        let total = self.steady_duration + self.decay_duration;
        if (total - clip_duration).abs() > 1e-9 * clip_duration.max(1.0) {
            return Err(Error::Domain(format!(
                "steady + decay = {total} s does not match clip duration {clip_duration} s"
            )));
        }
        Ok(())
    }
}

/// A labelled clip: frames `[T, H, W, 3]` plus how and what was recorded.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoSample {
    pub sample_id: String,
    pub frames: Array4<u8>,
    pub condition: MixingCondition,
    pub fluid: FluidSpec,
    pub source: Source,
}

impl VideoSample {
    pub fn validate(&self, video: &VideoConfig) -> Result<()> {
        let (t, h, w, c) = self.frames.dim();
        let expected = (
            usize::from(video.frames),
            usize::from(video.height),
            usize::from(video.width),
            3,
        );
        if (t, h, w, c) != expected {
            return Err(Error::Shape {
                axis: "frames",
                detail: format!(
                    "sample {} has {:?}, expected {:?}",
                    self.sample_id,
                    (t, h, w, c),
                    expected
                ),
            });
        }
        self.condition.validate(video.duration())?;
        self.fluid.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pattern_ids_round_trip_through_strings() {
        let ids = [
            PatternId::NOISE_1,
            PatternId::NOISE_3,
            PatternId::CHECKERBOARD,
            PatternId::Single(BasePattern::Procedural(17)),
            PatternId::Multi {
                left: BasePattern::Noise(1),
                right: BasePattern::Checkerboard,
            },
        ];
        for id in ids {
            let s = id.to_string();
            assert_eq!(s.parse::<PatternId>().unwrap(), id);
            let json = serde_json::to_string(&id).unwrap();
            assert_eq!(serde_json::from_str::<PatternId>(&json).unwrap(), id);
        }
        assert_eq!(
            "multi(noise-scale-1,noise-scale-3)"
                .parse::<PatternId>()
                .unwrap()
                .to_string(),
            "multi(noise-scale-1,noise-scale-3)"
        );
        assert!("noise-scale-4".parse::<PatternId>().is_err());
        assert!("stripes".parse::<PatternId>().is_err());
    }

    #[test]
    fn schedule_must_fill_the_clip() {
        let mut c = MixingCondition {
            omega_rpm: 300.0,
            pattern_id: PatternId::NOISE_1,
            lighting_id: 0,
            steady_duration: 2.5,
            decay_duration: 2.5,
        };
        c.validate(5.0).unwrap();
        assert!(c.validate(4.0).is_err());
        c.lighting_id = 5;
        assert!(c.validate(5.0).is_err());
    }
}
