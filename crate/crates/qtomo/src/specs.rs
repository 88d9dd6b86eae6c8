//! Bundled experiment recipes (the `specs/` directory, embedded).

use crate::ensemble::{specs_from_value, ExperimentSpec};
use crate::{usage, AppError};

/// Name → embedded JSON for the shipped experiment files.
pub const BUNDLED: [(&str, &str); 6] = [
    ("fig2a", include_str!("../specs/fig2a.json")),
    ("fig3", include_str!("../specs/fig3.json")),
    ("fig5", include_str!("../specs/fig5.json")),
    ("fig6", include_str!("../specs/fig6.json")),
    ("fig7b", include_str!("../specs/fig7b.json")),
    ("fig8", include_str!("../specs/fig8.json")),
];

pub fn bundled_names() -> Vec<&'static str> {
    BUNDLED.iter().map(|(name, _)| *name).collect()
}

/// Loads a bundled spec (or suite) by name.
pub fn load_bundled(name: &str) -> Result<Vec<ExperimentSpec>, AppError> {
    let text = BUNDLED
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| *text)
        .ok_or_else(|| {
            usage(format!(
                "unknown bundled experiment '{name}' (available: {})",
                bundled_names().join(", ")
            ))
        })?;
    let value: serde_json::Value =
        serde_json::from_str(text).expect("bundled specs are valid JSON");
    specs_from_value(value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_bundled_specs_parse() {
        for (name, _) in BUNDLED {
            let specs = load_bundled(name).unwrap();
            assert!(!specs.is_empty(), "{name} is empty");
        }
        assert_eq!(load_bundled("fig5").unwrap().len(), 6);
        assert!(load_bundled("fig3").unwrap()[0].purity_sweep.is_some());
        assert!(load_bundled("nope").is_err());
    }
}
