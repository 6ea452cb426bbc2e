//! Instance files: `{"game": <name>, "params": {…}, "noise": {"sigma": σ}}`.

use std::path::Path;

use serde::Deserialize;
use serde_json::Value;

use super::{GameKind, GameSpec, NoiseModel};
use crate::error::{Error, Result};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NoiseEntry {
    sigma: f64,
}

/// Parses an instance from a JSON value. `key` prefixes configuration
/// error locations (for instances embedded in an experiment config).
pub fn parse_instance(value: &Value, key: &str) -> Result<GameSpec> {
    let at = |k: &str| if key.is_empty() { k.to_string() } else { format!("{key}.{k}") };
    let obj = value
        .as_object()
        .ok_or_else(|| Error::config(at("game"), "instance must be a JSON object"))?;
    if let Some(k) = obj.keys().find(|k| !matches!(k.as_str(), "game" | "params" | "noise")) {
        return Err(Error::config(at(k), "unknown key"));
    }
    let name = obj
        .get("game")
        .and_then(Value::as_str)
        .ok_or_else(|| Error::config(at("game"), "missing or not a string"))?;
    let tagged = serde_json::json!({
        "game": name,
        "params": obj.get("params").cloned().unwrap_or(Value::Object(Default::default())),
    });
    let kind: GameKind =
        serde_json::from_value(tagged).map_err(|e| Error::config(at("params"), format!("{name}: {e}")))?;
    let noise = match obj.get("noise") {
        None | Some(Value::Null) => NoiseModel::None,
        Some(v) => {
            let entry: NoiseEntry =
                serde_json::from_value(v.clone()).map_err(|e| Error::config(at("noise"), e.to_string()))?;
            NoiseModel::gaussian(entry.sigma).map_err(|_| Error::config(at("noise.sigma"), "must be ≥ 0"))?
        }
    };
    let spec = GameSpec { kind, noise };
    spec.validate().map_err(|e| match e {
        Error::Config { key: k, message } => Error::Config {
            key: at(&k),
            message,
        },
        other => other,
    })?;
    Ok(spec)
}

pub fn load_instance(path: &Path) -> Result<GameSpec> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::config("game", format!("cannot read {}: {e}", path.display())))?;
    let value: Value =
        serde_json::from_str(&text).map_err(|e| Error::config("game", format!("{}: {e}", path.display())))?;
    parse_instance(&value, "")
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn parses_power_instance() {
        let v = json!({
            "game": "power_management",
            "params": {"gain": [[2, 1], [1, 2]], "r_star": [0.5, 0.5], "thermal": [1, 1]},
            "noise": {"sigma": 0.1}
        });
        let g = parse_instance(&v, "").unwrap();
        assert_eq!(g.num_agents(), 2);
        assert_eq!(g.noise, NoiseModel::Gaussian { sigma: 0.1 });
    }

    #[test]
    fn unknown_keys_are_named() {
        let v = json!({"game": "rank_one", "params": {"a": [[1.0]], "b": [0.0]}, "nosie": {}});
        match parse_instance(&v, "instance") {
            Err(Error::Config { key, .. }) => assert_eq!(key, "instance.nosie"),
            other => panic!("{other:?}"),
        }
        let v = json!({"game": "rank_one", "params": {"a": [[1.0]], "b": [0.0], "radius": 1, "extra": 2}});
        match parse_instance(&v, "") {
            Err(Error::Config { key, message }) => {
                assert_eq!(key, "params");
                assert!(message.contains("extra"));
            }
            other => panic!("{other:?}"),
        }
        let v = json!({"game": "chess", "params": {}});
        assert!(matches!(parse_instance(&v, ""), Err(Error::Config { .. })));
    }

    #[test]
    fn nested_targets_and_demands() {
        let v = json!({
            "game": "quadratic_stream",
            "params": {"dim": 2, "beta": 1.0, "targets": {"uniform": {"low": -0.5, "high": 0.5, "seed": 3}}}
        });
        assert!(parse_instance(&v, "").is_ok());
        let v = json!({
            "game": "newsvendor_sa",
            "params": {"price": 2.0, "cost": 1.0, "demand": {"uniform": {"upper": 100.0}}}
        });
        assert!(parse_instance(&v, "").is_ok());
    }

    #[test]
    fn invalid_values_are_config_errors() {
        let v = json!({"game": "newsvendor_ma", "params": {"price": 2.0, "costs": [3.0], "x_bar": [1.0]}});
        assert!(matches!(parse_instance(&v, ""), Err(Error::Config { .. })));
        let v = json!({"game": "power_management", "params": {"gain": [[2]], "r_star": [0.5], "thermal": [1]}, "noise": {"sigma": -1}});
        assert!(matches!(parse_instance(&v, ""), Err(Error::Config { .. })));
    }
}
