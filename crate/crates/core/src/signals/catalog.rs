//! Catalog files: sensor geometry, noise scales, and the object list.
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "sensors": { "cells": 7, "force_per_cell": 3, "temp_per_cell": 1,
//!                "accel_per_cell": 1, "sample_rate_hz": 100.0, "ambient_c": 25.0 },
//!   "noise": { "force_sd": 0.02, "accel_sd": 0.002, "temp_sd": 0.02,
//!              "force_jitter": 0.12, "texture_jitter": 0.15, "thermal_jitter": 0.12 },
//!   "objects": [ { "id": 1, "label": "sponge", "stiffness_coeff": 0.4,
//!                  "roughness_amp": 2.0, "roughness_freq": 4.0,
//!                  "thermal_time_const": 8.0, "thermal_equilib_delta": -0.5 } ]
//! }
//! ```
//!
//! `sensors` and `noise` may be omitted and take the defaults shown by
//! [`SensorLayout::default`] and [`NoiseScales::default`]. Unknown keys are
//! rejected.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ObjectSpec, SignalError};

pub const CATALOG_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorLayout {
    /// skin cells `N_s`
    pub cells: usize,
    /// normal-force sensors per cell `N_f`
    pub force_per_cell: usize,
    /// temperature sensors per cell `N_t`
    pub temp_per_cell: usize,
    /// accelerometers per cell `N_a`
    pub accel_per_cell: usize,
    pub sample_rate_hz: f64,
    pub ambient_c: f64,
}

impl Default for SensorLayout {
    fn default() -> Self {
        Self {
            cells: 7,
            force_per_cell: 3,
            temp_per_cell: 1,
            accel_per_cell: 1,
            sample_rate_hz: 100.0,
            ambient_c: 25.0,
        }
    }
}

/// White-noise standard deviations per sample, plus relative log-normal
/// jitter of each modality's latent level per trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseScales {
    /// N
    pub force_sd: f64,
    /// g
    pub accel_sd: f64,
    /// °C
    pub temp_sd: f64,
    pub force_jitter: f64,
    pub texture_jitter: f64,
    pub thermal_jitter: f64,
}

impl NoiseScales {
    pub fn zero() -> Self {
        Self {
            force_sd: 0.0,
            accel_sd: 0.0,
            temp_sd: 0.0,
            force_jitter: 0.0,
            texture_jitter: 0.0,
            thermal_jitter: 0.0,
        }
    }
}

impl Default for NoiseScales {
    fn default() -> Self {
        Self {
            force_sd: 0.02,
            accel_sd: 0.002,
            temp_sd: 0.02,
            force_jitter: 0.12,
            texture_jitter: 0.15,
            thermal_jitter: 0.12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Catalog {
    pub schema_version: u32,
    #[serde(default)]
    pub sensors: SensorLayout,
    #[serde(default)]
    pub noise: NoiseScales,
    pub objects: Vec<ObjectSpec>,
}

impl Catalog {
    pub fn object(&self, id: u32) -> Option<&ObjectSpec> {
        self.objects.iter().find(|o| o.id == id)
    }

    pub fn validate(&self) -> Result<(), SignalError> {
        let schema = |field: &str, reason: String| SignalError::Schema {
            field: field.into(),
            reason,
        };
        if self.schema_version != CATALOG_SCHEMA_VERSION {
            return Err(schema(
                "schema_version",
                format!("expected {CATALOG_SCHEMA_VERSION}, got {}", self.schema_version),
            ));
        }
        let s = &self.sensors;
        for (name, v) in [
            ("sensors.cells", s.cells),
            ("sensors.force_per_cell", s.force_per_cell),
            ("sensors.temp_per_cell", s.temp_per_cell),
            ("sensors.accel_per_cell", s.accel_per_cell),
        ] {
            if v == 0 {
                return Err(schema(name, "must be at least 1".into()));
            }
        }
        if !(s.sample_rate_hz.is_finite() && s.sample_rate_hz > 0.0) {
            return Err(schema("sensors.sample_rate_hz", format!("must be > 0, got {}", s.sample_rate_hz)));
        }
        if !s.ambient_c.is_finite() {
            return Err(schema("sensors.ambient_c", "must be finite".into()));
        }
        let n = &self.noise;
        for (name, v) in [
            ("noise.force_sd", n.force_sd),
            ("noise.accel_sd", n.accel_sd),
            ("noise.temp_sd", n.temp_sd),
            ("noise.force_jitter", n.force_jitter),
            ("noise.texture_jitter", n.texture_jitter),
            ("noise.thermal_jitter", n.thermal_jitter),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(schema(name, format!("must be finite and >= 0, got {v}")));
            }
        }
        if self.objects.is_empty() {
            return Err(schema("objects", "catalog must list at least one object".into()));
        }
        let mut seen = BTreeSet::new();
        for (i, o) in self.objects.iter().enumerate() {
            o.validate(&format!("objects[{i}]"))?;
            if !seen.insert(o.id) {
                return Err(schema(&format!("objects[{i}].id"), format!("duplicate id {}", o.id)));
            }
        }
        Ok(())
    }
}

pub fn parse_catalog(text: &str) -> Result<Catalog, SignalError> {
    let catalog: Catalog = serde_json::from_str(text).map_err(|e| SignalError::Schema {
        field: "<document>".into(),
        reason: e.to_string(),
    })?;
    catalog.validate()?;
    Ok(catalog)
}

pub fn load_catalog(path: impl AsRef<Path>) -> Result<Catalog, SignalError> {
    parse_catalog(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(objects: &str) -> String {
        format!(r#"{{"schema_version": 1, "objects": [{objects}]}}"#)
    }

    const OBJ: &str = r#"{"id": 1, "stiffness_coeff": 1.0, "roughness_amp": 0.5,
        "roughness_freq": 2.0, "thermal_time_const": 3.0, "thermal_equilib_delta": -1.0}"#;

    #[test]
    fn shipped_catalog_has_fifteen_objects() {
        let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/desk_catalog.json");
        let c = load_catalog(path).unwrap();
        let ids: Vec<u32> = c.objects.iter().map(|o| o.id).collect();
        assert_eq!(ids, (1..=15).collect::<Vec<_>>());
    }

    #[test]
    fn defaults_fill_sensors_and_noise() {
        let c = parse_catalog(&doc(OBJ)).unwrap();
        assert_eq!(c.sensors, SensorLayout::default());
        assert_eq!(c.objects[0].id, 1);
    }

    #[test]
    fn empty_object_list_is_rejected() {
        let err = parse_catalog(&doc("")).unwrap_err();
        assert!(matches!(err, SignalError::Schema { ref field, .. } if field == "objects"));
    }

    #[test]
    fn negative_stiffness_names_field() {
        let bad = OBJ.replace("\"stiffness_coeff\": 1.0", "\"stiffness_coeff\": -1");
        let err = parse_catalog(&doc(&bad)).unwrap_err();
        assert!(err.to_string().contains("stiffness_coeff"), "{err}");
    }

    #[test]
    fn duplicate_ids_rejected() {
        let err = parse_catalog(&doc(&format!("{OBJ},{OBJ}"))).unwrap_err();
        assert!(err.to_string().contains("duplicate id 1"));
    }

    #[test]
    fn unknown_keys_rejected() {
        let bad = OBJ.replace("\"id\": 1,", "\"id\": 1, \"colour\": \"red\",");
        assert!(parse_catalog(&doc(&bad)).is_err());
    }
}
