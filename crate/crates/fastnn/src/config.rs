//! TOML run configuration: a file is merged over the experiment's defaults,
//! then command-line flags are applied on top.

use std::fs;
use std::path::Path;

use toml::{Table, Value};

use crate::bench::{ExperimentId, ExperimentPlan};
use crate::error::{config_err, CliError, CliResult};

/// Keys every config file must set.
pub const REQUIRED_KEYS: [&str; 2] = ["experiment", "seed"];

/// Recursive merge; tagged tables (those with a `kind` key) replace instead.
fn merge(base: &mut Table, over: Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(Value::Table(b)), Value::Table(o)) if !o.contains_key("kind") => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

pub fn plan_from_toml(text: &str, source: &str, paper_scale: bool) -> CliResult<ExperimentPlan> {
    let file: Table = text
        .parse()
        .map_err(|e: toml::de::Error| CliError::Config(format!("{source}: {}", e.message())))?;
    for key in REQUIRED_KEYS {
        if !file.contains_key(key) {
            return config_err(format!("{source}: missing required key `{key}`"));
        }
    }
    let experiment: ExperimentId = file["experiment"]
        .clone()
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Config(format!("{source}: key `experiment`: {}", e.message())))?;
    let mut base = Table::try_from(ExperimentPlan::defaults(experiment, paper_scale))
        .map_err(|e| CliError::Config(format!("cannot encode defaults: {e}")))?;
    merge(&mut base, file);
    Value::Table(base)
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Config(format!("{source}: {}", e.message().trim())))
}

/// Defaults for `experiment`, overlaid with the file at `path` if given.
pub fn load_plan(experiment: ExperimentId, path: Option<&Path>, paper_scale: bool) -> CliResult<ExperimentPlan> {
    let Some(path) = path else {
        return Ok(ExperimentPlan::defaults(experiment, paper_scale));
    };
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let plan = plan_from_toml(&text, &path.display().to_string(), paper_scale)?;
    if plan.experiment != experiment {
        return config_err(format!(
            "{}: config is for experiment `{}` but `{}` was requested",
            path.display(),
            plan.experiment,
            experiment
        ));
    }
    Ok(plan)
}

/// The resolved plan as TOML; loading it back gives the same plan.
pub fn plan_to_toml(plan: &ExperimentPlan) -> CliResult<String> {
    toml::to_string(plan).map_err(|e| CliError::Config(format!("cannot encode config: {e}")))
}
