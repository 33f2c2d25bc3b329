use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use kamreduce_core::{Problem64, ProblemConfig64, RunReport64};
use serde::Serialize;
use serde_json::Value;

use crate::Global;

pub const CONFIG_SCHEMA: &str = include_str!("../../../schemas/v1/config.schema.json");
pub const REPORT_SCHEMA: &str = include_str!("../../../schemas/v1/report.schema.json");

fn read_json(path: &Path) -> Result<Value> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Validates `doc` against a schema, listing every violation.
pub fn validate(schema: &str, doc: &Value, what: &str) -> Result<()> {
    let schema: Value = serde_json::from_str(schema).expect("shipped schema is valid JSON");
    let validator = jsonschema::validator_for(&schema).expect("shipped schema compiles");
    let errors: Vec<String> = validator
        .iter_errors(doc)
        .map(|e| format!("{} at '{}'", e, e.instance_path()))
        .collect();
    if !errors.is_empty() {
        bail!(
            "{what} does not match schema v1:\n  {}",
            errors.join("\n  ")
        );
    }
    Ok(())
}

/// Reads, schema-checks and window-checks the problem configuration.
pub fn load_problem(g: &Global) -> Result<Problem64> {
    let path = g
        .config
        .as_ref()
        .ok_or_else(|| anyhow!("--config is required"))?;
    let doc = read_json(path)?;
    validate(CONFIG_SCHEMA, &doc, "configuration")?;
    let mut cfg: ProblemConfig64 = serde_json::from_value(doc).context("decoding configuration")?;
    if let Some(seed) = g.seed {
        cfg.seed = seed;
    }
    Problem64::new(cfg).map_err(|e| anyhow!(e))
}

pub fn load_report(path: &Path) -> Result<RunReport64> {
    let doc = read_json(path)?;
    validate(REPORT_SCHEMA, &doc, "report")?;
    serde_json::from_value(doc).context("decoding report")
}

pub fn out_path(g: &Global, name: &str) -> Result<PathBuf> {
    fs::create_dir_all(&g.out).with_context(|| format!("creating {}", g.out.display()))?;
    Ok(g.out.join(name))
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn write_csv<I, R>(path: &Path, rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut w =
        csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn minimal() -> Value {
        json!({
            "n": 1, "d": 1, "v": [1.0], "omega": [0.7], "W": {},
            "schedule": {"eps0": 1e-3, "rho": 0.05, "ell": 2.0, "beta": 0.5, "gamma0": 0.05}
        })
    }

    #[test]
    fn minimal_config_validates() {
        validate(CONFIG_SCHEMA, &minimal(), "configuration").unwrap();
        let cfg: ProblemConfig64 = serde_json::from_value(minimal()).unwrap();
        assert_eq!(cfg.limits.max_steps, 12);
    }

    #[test]
    fn schema_violations_are_listed() {
        let mut c = minimal();
        c["schedule"]["beta"] = json!(1.5);
        c["v"] = json!([-1.0]);
        let msg = validate(CONFIG_SCHEMA, &c, "configuration")
            .unwrap_err()
            .to_string();
        assert!(
            msg.contains("/schedule/beta") && msg.contains("/v/0"),
            "{msg}"
        );
        let mut c = minimal();
        c.as_object_mut().unwrap().remove("omega");
        assert!(validate(CONFIG_SCHEMA, &c, "configuration").is_err());
    }

    #[test]
    fn shipped_schemas_compile() {
        for s in [CONFIG_SCHEMA, REPORT_SCHEMA] {
            let v: Value = serde_json::from_str(s).unwrap();
            assert!(jsonschema::validator_for(&v).is_ok());
        }
    }
}
