//! The five bundled treatment parameterizations.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Architecture, GameParams};

const PRESETS_TOML: &str = include_str!("../presets/treatments.toml");

/// Treatment names in presentation order.
pub const TREATMENT_NAMES: [&str; 5] = [
    "N5_LowCost",
    "N5_HighCost",
    "N9_LowCost1",
    "N9_LowCost2",
    "N9_HighCost",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Treatment {
    pub name: String,
    pub params: GameParams,
    pub equilibrium_networks: Vec<Architecture>,
}

#[derive(Deserialize)]
struct PresetEntry {
    #[serde(flatten)]
    params: GameParams,
    equilibrium_networks: Vec<Architecture>,
}

fn presets() -> &'static BTreeMap<String, Treatment> {
    static PRESETS: OnceLock<BTreeMap<String, Treatment>> = OnceLock::new();
    PRESETS.get_or_init(|| {
        let raw: BTreeMap<String, PresetEntry> =
            toml::from_str(PRESETS_TOML).expect("bundled treatment presets parse");
        raw.into_iter()
            .map(|(name, entry)| {
                entry.params.validate().expect("bundled preset is valid");
                let treatment = Treatment {
                    name: name.clone(),
                    params: entry.params,
                    equilibrium_networks: entry.equilibrium_networks,
                };
                (name, treatment)
            })
            .collect()
    })
}

impl Treatment {
    pub fn by_name(name: &str) -> Result<Treatment> {
        presets()
            .get(name)
            .cloned()
            .ok_or_else(|| Error::UnknownTreatment(name.to_string()))
    }

    /// All presets in presentation order.
    pub fn all() -> Vec<Treatment> {
        TREATMENT_NAMES
            .iter()
            .map(|name| Treatment::by_name(name).expect("preset exists"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_carry_table_values() {
        let expect = [
            ("N5_LowCost", 5, 0.4, 1.0, 1),
            ("N5_HighCost", 5, 0.4, 3.9, 3),
            ("N9_LowCost1", 9, 0.25, 1.0, 1),
            ("N9_LowCost2", 9, 0.4, 1.0, 1),
            ("N9_HighCost", 9, 0.25, 2.5, 3),
        ];
        for (name, n, lambda, kappa, eq_count) in expect {
            let t = Treatment::by_name(name).unwrap();
            assert_eq!(t.params.n, n);
            assert_eq!(t.params.lambda, lambda);
            assert_eq!(t.params.kappa, kappa);
            assert_eq!(t.params.theta, 10.0);
            assert_eq!(t.params.beta, 4.0);
            assert_eq!(t.params.effort_min, 0.0);
            assert_eq!(t.params.effort_max, 20.0);
            assert_eq!(t.equilibrium_networks.len(), eq_count);
        }
        assert_eq!(Treatment::all().len(), 5);
    }

    #[test]
    fn unknown_name_is_an_error() {
        assert!(matches!(
            Treatment::by_name("N7_Whatever"),
            Err(Error::UnknownTreatment(_))
        ));
    }
}
