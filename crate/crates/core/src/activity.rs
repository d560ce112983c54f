//! Activity annotations attached to sensor windows.
//!
//! Text form (used in manifests and CSV files):
//! - `scratch:<location>` and `non-scratch:<interaction>` for the detection
//!   study, e.g. `scratch:forearm-wrist`, `non-scratch:clapping`;
//! - `<force>-force-<speed>-speed` for the intensity study combos, e.g.
//!   `high-force-low-speed`;
//! - `<surface>-set<k>-level<l>` for instructed 1-5 intensity sets, e.g.
//!   `skin-set2-level4`;
//! - `unspecified`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown activity '{0}'")]
pub struct ParseActivityError(pub String);

macro_rules! named_enum {
    ($name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum $name { $($variant),+ }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self { $($name::$variant => $text),+ }
            }

            fn parse(s: &str) -> Option<Self> {
                match s { $($text => Some($name::$variant),)+ _ => None }
            }
        }
    };
}

named_enum!(ScratchLocation {
    HandFingers => "hand-fingers",
    ForearmWrist => "forearm-wrist",
    InsideElbow => "inside-elbow",
    Neck => "neck",
    Head => "head",
    BehindKnees => "behind-knees",
    Ankles => "ankles",
});

named_enum!(Interaction {
    HandWaving => "hand-waving",
    KeyboardTyping => "keyboard-typing",
    PhoneSwiping => "phone-swiping",
    Writing => "writing",
    TableTapping => "table-tapping",
    AirScratching => "air-scratching",
    Clapping => "clapping",
});

named_enum!(Level {
    Low => "low",
    Medium => "medium",
    High => "high",
});

named_enum!(Surface {
    Tablet => "tablet",
    Skin => "skin",
});

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub enum Activity {
    Scratch(ScratchLocation),
    NonScratch(Interaction),
    Combo {
        force: Level,
        speed: Level,
    },
    Instructed {
        surface: Surface,
        set: u8,
        level: u8,
    },
    #[default]
    Unspecified,
}

impl Activity {
    /// Binary detection target; `None` for activities outside the detection study.
    pub fn scratch_target(&self) -> Option<bool> {
        match self {
            Activity::Scratch(_) => Some(true),
            Activity::NonScratch(_) => Some(false),
            _ => None,
        }
    }
}

impl fmt::Display for Activity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Activity::Scratch(loc) => write!(f, "scratch:{}", loc.as_str()),
            Activity::NonScratch(i) => write!(f, "non-scratch:{}", i.as_str()),
            Activity::Combo { force, speed } => {
                write!(f, "{}-force-{}-speed", force.as_str(), speed.as_str())
            }
            Activity::Instructed { surface, set, level } => {
                write!(f, "{}-set{}-level{}", surface.as_str(), set, level)
            }
            Activity::Unspecified => f.write_str("unspecified"),
        }
    }
}

impl FromStr for Activity {
    type Err = ParseActivityError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseActivityError(s.to_string());
        if s == "unspecified" || s.is_empty() {
            return Ok(Activity::Unspecified);
        }
        if let Some(loc) = s.strip_prefix("scratch:") {
            return ScratchLocation::parse(loc).map(Activity::Scratch).ok_or_else(err);
        }
        if let Some(i) = s.strip_prefix("non-scratch:") {
            return Interaction::parse(i).map(Activity::NonScratch).ok_or_else(err);
        }
        if let Some(rest) = s.strip_suffix("-speed") {
            let (force, speed) = rest.split_once("-force-").ok_or_else(err)?;
            return Ok(Activity::Combo {
                force: Level::parse(force).ok_or_else(err)?,
                speed: Level::parse(speed).ok_or_else(err)?,
            });
        }
        let mut parts = s.splitn(3, '-');
        let surface = parts.next().and_then(Surface::parse).ok_or_else(err)?;
        let set = parts
            .next()
            .and_then(|p| p.strip_prefix("set"))
            .and_then(|n| n.parse().ok())
            .ok_or_else(err)?;
        let level = parts
            .next()
            .and_then(|p| p.strip_prefix("level"))
            .and_then(|n| n.parse().ok())
            .ok_or_else(err)?;
        Ok(Activity::Instructed { surface, set, level })
    }
}

impl Serialize for Activity {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Activity {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_form_round_trips() {
        let mut all = vec![Activity::Unspecified];
        all.extend(ScratchLocation::ALL.iter().map(|&l| Activity::Scratch(l)));
        all.extend(Interaction::ALL.iter().map(|&i| Activity::NonScratch(i)));
        for &force in Level::ALL {
            for &speed in Level::ALL {
                all.push(Activity::Combo { force, speed });
            }
        }
        all.push(Activity::Instructed {
            surface: Surface::Skin,
            set: 2,
            level: 5,
        });
        for a in all {
            assert_eq!(a.to_string().parse::<Activity>().unwrap(), a);
        }
    }

    #[test]
    fn rejects_unknown() {
        for bad in ["scratch:elbow", "mid-force-low-speed", "skin-set-level1", "floor-set1-level1"] {
            assert!(bad.parse::<Activity>().is_err(), "{bad}");
        }
    }

    #[test]
    fn detection_targets() {
        assert_eq!(Activity::Scratch(ScratchLocation::Neck).scratch_target(), Some(true));
        assert_eq!(
            Activity::NonScratch(Interaction::Clapping).scratch_target(),
            Some(false)
        );
        assert_eq!(Activity::Unspecified.scratch_target(), None);
    }
}
