//! Finite-size conversion engine: distributions in level/multiplicity form,
//! the majorization order, fidelity, storage conditioning, maximal
//! conversion fidelities (deterministic brute-force and exact majorization),
//! and maximal convertible numbers.
//!
//! # JSON format
//!
//! Distributions interchange as either a dense probability vector or
//! level/multiplicity pairs:
//!
//! ```json
//! {"probs": [0.75, 0.25]}
//! ```
//!
//! or `{"levels": [[0.5, 1], [0.25, 2]]}`. Serialization always emits the
//! `levels` form with linear-space values, which is lossless at desk scale
//! (it underflows for astronomically sized i.i.d. powers, which have no
//! sensible dense rendering anyway).

mod distribution;
mod solver;
mod storage;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use distribution::{fidelity, is_majorized, Distribution, Level};
pub use solver::{kkt_certificate, max_fidelity_majorization, ConversionResult};
pub use storage::{
    condition_to_storage, iid_power, max_convertible_number, max_fidelity_deterministic,
    max_fidelity_majorization_with_storage, ConversionMode, IID_COMPOSITION_BUDGET,
};

#[derive(Debug, Error)]
pub enum MajorizationError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("capacity error: {0}")]
    Capacity(String),
    #[error("size error: {0}")]
    Size(String),
}

/// Wire form of a distribution: dense probabilities or level pairs.
#[derive(Debug, Serialize, Deserialize)]
struct DistributionJson {
    #[serde(skip_serializing_if = "Option::is_none")]
    probs: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    levels: Option<Vec<(f64, u64)>>,
}

impl Distribution {
    /// Parse the JSON interchange form.
    pub fn from_json(json: &str) -> Result<Self, MajorizationError> {
        let wire: DistributionJson = serde_json::from_str(json)
            .map_err(|e| MajorizationError::InvalidInput(format!("bad distribution JSON: {e}")))?;
        match (wire.probs, wire.levels) {
            (Some(p), None) => Self::from_probs(&p),
            (None, Some(l)) => Self::from_levels(&l),
            _ => Err(MajorizationError::InvalidInput(
                "distribution JSON needs exactly one of \"probs\" or \"levels\"".into(),
            )),
        }
    }

    /// Emit the JSON interchange form (levels, linear space).
    pub fn to_json(&self) -> String {
        let levels: Vec<(f64, u64)> = self
            .levels()
            .iter()
            .map(|l| (l.log_p.exp(), l.log_mult.exp().round() as u64))
            .collect();
        serde_json::to_string(&DistributionJson {
            probs: None,
            levels: Some(levels),
        })
        .expect("serialization of plain numbers cannot fail")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        let d = Distribution::from_json(r#"{"probs": [0.75, 0.25]}"#).unwrap();
        assert_eq!(d.support_count(), Some(2));
        let d2 = Distribution::from_json(&d.to_json()).unwrap();
        assert_eq!(d.levels().len(), d2.levels().len());
        for (a, b) in d.levels().iter().zip(d2.levels()) {
            assert!((a.log_p - b.log_p).abs() < 1e-12);
        }
        let lv = Distribution::from_json(r#"{"levels": [[0.5, 1], [0.25, 2]]}"#).unwrap();
        assert_eq!(lv.support_count(), Some(3));
        assert!(Distribution::from_json(r#"{}"#).is_err());
        assert!(Distribution::from_json(r#"{"probs": [0.5], "levels": [[0.5,1]]}"#).is_err());
    }
}
