use serde::{Deserialize, Serialize};

use super::SignalError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ActionKind {
    Pressing,
    Sliding,
    StaticContact,
}

/// Action parameter vector, shaped by the action kind.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ActionParams {
    Pressing { depth_mm: f64, duration_s: f64 },
    Sliding { force_n: f64, speed_cm_s: f64, duration_s: f64 },
    StaticContact { depth_mm: f64, duration_s: f64 },
}

impl ActionParams {
    pub fn kind(&self) -> ActionKind {
        match self {
            ActionParams::Pressing { .. } => ActionKind::Pressing,
            ActionParams::Sliding { .. } => ActionKind::Sliding,
            ActionParams::StaticContact { .. } => ActionKind::StaticContact,
        }
    }

    pub fn duration_s(&self) -> f64 {
        match *self {
            ActionParams::Pressing { duration_s, .. }
            | ActionParams::Sliding { duration_s, .. }
            | ActionParams::StaticContact { duration_s, .. } => duration_s,
        }
    }

    /// Flat parameter vector `θ`: `(d, t)` for pressing and static contact,
    /// `(F, v, t)` for sliding.
    pub fn to_vec(&self) -> Vec<f64> {
        match *self {
            ActionParams::Pressing { depth_mm, duration_s }
            | ActionParams::StaticContact { depth_mm, duration_s } => vec![depth_mm, duration_s],
            ActionParams::Sliding {
                force_n,
                speed_cm_s,
                duration_s,
            } => vec![force_n, speed_cm_s, duration_s],
        }
    }

    pub fn from_vec(kind: ActionKind, theta: &[f64]) -> Option<Self> {
        match (kind, theta) {
            (ActionKind::Pressing, &[d, t]) => Some(ActionParams::Pressing {
                depth_mm: d,
                duration_s: t,
            }),
            (ActionKind::StaticContact, &[d, t]) => Some(ActionParams::StaticContact {
                depth_mm: d,
                duration_s: t,
            }),
            (ActionKind::Sliding, &[f, v, t]) => Some(ActionParams::Sliding {
                force_n: f,
                speed_cm_s: v,
                duration_s: t,
            }),
            _ => None,
        }
    }
}

/// A named, parameterized exploratory action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExploratoryAction {
    pub name: String,
    pub params: ActionParams,
}

/// Names of the standard action set, in canonical order.
pub const STANDARD_ACTIONS: [&str; 7] = ["P1", "P2", "S1", "S2", "S3", "S4", "C1"];

impl ExploratoryAction {
    pub fn pressing(name: &str, depth_mm: f64, duration_s: f64) -> Self {
        Self {
            name: name.into(),
            params: ActionParams::Pressing { depth_mm, duration_s },
        }
    }

    pub fn sliding(name: &str, force_n: f64, speed_cm_s: f64, duration_s: f64) -> Self {
        Self {
            name: name.into(),
            params: ActionParams::Sliding {
                force_n,
                speed_cm_s,
                duration_s,
            },
        }
    }

    pub fn static_contact(name: &str, depth_mm: f64, duration_s: f64) -> Self {
        Self {
            name: name.into(),
            params: ActionParams::StaticContact { depth_mm, duration_s },
        }
    }

    /// Builds an action from a kind and a flat `θ`, rejecting shape mismatches
    /// and non-positive components.
    pub fn from_kind(name: &str, kind: ActionKind, theta: &[f64]) -> Result<Self, SignalError> {
        let params = ActionParams::from_vec(kind, theta).ok_or_else(|| SignalError::InvalidAction {
            name: name.into(),
            reason: format!("{kind:?} takes {} parameters, got {}", if kind == ActionKind::Sliding { 3 } else { 2 }, theta.len()),
        })?;
        let action = Self {
            name: name.into(),
            params,
        };
        action.validate()?;
        Ok(action)
    }

    /// The seven actions used in the desk experiments:
    /// P1 (1 mm, 3 s), P2 (2 mm, 3 s), S1..S4 (0.1/0.2 N at 1/5 cm/s for 1 s),
    /// and C1 (2 mm, 15 s).
    pub fn standard(name: &str) -> Option<Self> {
        let a = match name {
            "P1" => Self::pressing("P1", 1.0, 3.0),
            "P2" => Self::pressing("P2", 2.0, 3.0),
            "S1" => Self::sliding("S1", 0.1, 1.0, 1.0),
            "S2" => Self::sliding("S2", 0.1, 5.0, 1.0),
            "S3" => Self::sliding("S3", 0.2, 1.0, 1.0),
            "S4" => Self::sliding("S4", 0.2, 5.0, 1.0),
            "C1" => Self::static_contact("C1", 2.0, 15.0),
            _ => return None,
        };
        Some(a)
    }

    pub fn standard_set() -> Vec<Self> {
        STANDARD_ACTIONS
            .iter()
            .map(|n| Self::standard(n).expect("standard name"))
            .collect()
    }

    pub fn kind(&self) -> ActionKind {
        self.params.kind()
    }

    pub fn validate(&self) -> Result<(), SignalError> {
        for v in self.params.to_vec() {
            if !(v.is_finite() && v > 0.0) {
                return Err(SignalError::InvalidAction {
                    name: self.name.clone(),
                    reason: format!("parameters must be strictly positive, got {v}"),
                });
            }
        }
        Ok(())
    }
}
