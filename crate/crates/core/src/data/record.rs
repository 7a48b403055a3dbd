use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const N_FEATURES: usize = 7;

/// Raw (unscaled) feature vector in schema order.
pub type Features = [f64; N_FEATURES];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feature {
    PileSize,
    PileLength,
    HammerWeight,
    DropHeight,
    Distance,
    SensorLocation,
    SensorDirection,
}

impl Feature {
    pub const ALL: [Feature; N_FEATURES] = [
        Feature::PileSize,
        Feature::PileLength,
        Feature::HammerWeight,
        Feature::DropHeight,
        Feature::Distance,
        Feature::SensorLocation,
        Feature::SensorDirection,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Feature::PileSize => "pile_size",
            Feature::PileLength => "pile_length",
            Feature::HammerWeight => "hammer_weight",
            Feature::DropHeight => "drop_height",
            Feature::Distance => "distance",
            Feature::SensorLocation => "sensor_location",
            Feature::SensorDirection => "sensor_direction",
        }
    }

    /// Column name in the CSV schema.
    pub fn column(self) -> &'static str {
        match self {
            Feature::PileSize => "pile_size_mm",
            Feature::PileLength => "pile_length_m",
            Feature::HammerWeight => "hammer_weight_ton",
            Feature::DropHeight => "drop_height_m",
            Feature::Distance => "distance_m",
            Feature::SensorLocation => "sensor_location",
            Feature::SensorDirection => "sensor_direction",
        }
    }

    /// Range covered by the field campaign, for extrapolation warnings.
    /// Categorical features have none.
    pub fn observed_range(self) -> Option<(f64, f64)> {
        match self {
            Feature::PileSize => Some((250.0, 800.0)),
            Feature::PileLength => Some((10.0, 32.0)),
            Feature::HammerWeight => Some((3.0, 12.5)),
            Feature::DropHeight => Some((0.3, 0.9)),
            Feature::Distance => Some((3.0, 80.0)),
            Feature::SensorLocation | Feature::SensorDirection => None,
        }
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SensorLocation {
    Ground = 1,
    Footing = 2,
    Building = 3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SensorDirection {
    Longitudinal = 1,
    Transverse = 2,
    Vertical = 3,
}

macro_rules! coded_enum {
    ($ty:ident, $what:literal, [$($variant:ident => $code:literal, [$($alias:literal),*]),*]) => {
        impl $ty {
            pub const ALL: [$ty; 3] = [$($ty::$variant),*];

            pub fn code(self) -> u8 {
                self as u8
            }

            pub fn from_code(code: i64) -> Option<Self> {
                match code {
                    $($code => Some($ty::$variant),)*
                    _ => None,
                }
            }

            pub fn name(self) -> &'static str {
                match self {
                    $($ty::$variant => stringify!($variant),)*
                }
            }
        }

        impl FromStr for $ty {
            type Err = String;

            fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
                let lower = s.trim().to_ascii_lowercase();
                $(
                    if lower == stringify!($variant).to_ascii_lowercase() $(|| lower == $alias)* {
                        return Ok($ty::$variant);
                    }
                )*
                Err(format!("unknown {} `{}`", $what, s.trim()))
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }
    };
}

coded_enum!(SensorLocation, "sensor location", [
    Ground => 1, ["on ground"],
    Footing => 2, ["on footing"],
    Building => 3, ["on building"]
]);

coded_enum!(SensorDirection, "sensor direction", [
    Longitudinal => 1, [],
    Transverse => 2, ["lateral"],
    Vertical => 3, []
]);

/// One pile-driving observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PileDrivingRecord {
    /// Pile size, mm.
    pub pile_size: f64,
    /// Pile length, m.
    pub pile_length: f64,
    /// Hammer weight, ton.
    pub hammer_weight: f64,
    /// Hammer drop height, m.
    pub drop_height: f64,
    /// Distance from the pile to the sensor, m.
    pub distance: f64,
    pub sensor_location: SensorLocation,
    pub sensor_direction: SensorDirection,
    /// Measured peak particle velocity, mm/s. Absent for prediction inputs.
    pub ppv: Option<f64>,
}

impl PileDrivingRecord {
    pub fn features(&self) -> Features {
        [
            self.pile_size,
            self.pile_length,
            self.hammer_weight,
            self.drop_height,
            self.distance,
            f64::from(self.sensor_location.code()),
            f64::from(self.sensor_direction.code()),
        ]
    }

    /// Rebuild a record from a raw feature vector. Categorical entries are
    /// rounded to the nearest code.
    pub fn from_features(f: &Features, ppv: Option<f64>) -> Result<Self> {
        let loc = SensorLocation::from_code(f[5].round() as i64)
            .ok_or_else(|| Error::Domain(format!("sensor_location code {} outside 1..=3", f[5])))?;
        let dir = SensorDirection::from_code(f[6].round() as i64)
            .ok_or_else(|| Error::Domain(format!("sensor_direction code {} outside 1..=3", f[6])))?;
        Ok(Self {
            pile_size: f[0],
            pile_length: f[1],
            hammer_weight: f[2],
            drop_height: f[3],
            distance: f[4],
            sensor_location: loc,
            sensor_direction: dir,
            ppv,
        })
    }

    /// Checks that every numeric feature is positive and finite.
    /// The error names the offending column.
    pub fn validate(&self) -> std::result::Result<(), (Feature, String)> {
        let f = self.features();
        for feat in &Feature::ALL[..5] {
            let v = f[feat.index()];
            if !v.is_finite() || v <= 0.0 {
                return Err((*feat, format!("must be a positive number, got {v}")));
            }
        }
        Ok(())
    }

    pub fn ppv_error(&self) -> Option<String> {
        match self.ppv {
            Some(p) if !p.is_finite() || p <= 0.0 => Some(format!("must be a positive number, got {p}")),
            _ => None,
        }
    }

    /// Hammer potential energy `W g h` in joules, with W in kg.
    pub fn hammer_energy(&self) -> f64 {
        hammer_energy(self.hammer_weight, self.drop_height)
    }

    /// Messages for numeric inputs outside the range observed in the field data.
    pub fn extrapolation_warnings(&self) -> Vec<String> {
        let f = self.features();
        Feature::ALL
            .iter()
            .filter_map(|feat| {
                let (lo, hi) = feat.observed_range()?;
                let v = f[feat.index()];
                (v < lo || v > hi).then(|| {
                    format!(
                        "{} = {v} is outside the training range [{lo}, {hi}]; prediction is an extrapolation",
                        feat.column()
                    )
                })
            })
            .collect()
    }
}

pub const GRAVITY: f64 = 9.81;

pub fn hammer_energy(hammer_weight_ton: f64, drop_height_m: f64) -> f64 {
    hammer_weight_ton * 1000.0 * GRAVITY * drop_height_m
}
