use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use coordmech::instance::{assignment_from_value, instance_from_value};
use coordmech::rational::{parse_rational, Rational};
use coordmech::{load_assignment, Assignment, Instance};

/// An instance plus the assignment to evaluate.
pub struct Loaded {
    pub instance: Instance,
    pub assignment: Assignment,
}

/// Reads an instance file or a bundle (`{"instance": .., "nash_assignment": ..}`).
/// Without an explicit assignment file, a bundle's equilibrium is used, and for
/// a bare instance every job goes to its fastest machine.
pub fn load(instance: &Path, assignment: Option<&Path>) -> Result<Loaded> {
    let text = fs::read(instance).with_context(|| format!("reading {}", instance.display()))?;
    let value: serde_json::Value =
        serde_json::from_slice(&text).with_context(|| format!("parsing {}", instance.display()))?;
    let (inst, bundled) = match value.get("instance") {
        Some(inner) => {
            let inst = instance_from_value(inner.clone())?;
            let nash = value
                .get("nash_assignment")
                .map(|x| assignment_from_value(&inst, x.clone()))
                .transpose()?;
            (inst, nash)
        }
        None => (instance_from_value(value)?, None),
    };
    let assignment = match assignment {
        Some(path) => {
            let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
            load_assignment(&inst, &bytes)?
        }
        None => bundled.unwrap_or_else(|| Assignment::fastest(&inst)),
    };
    Ok(Loaded {
        instance: inst,
        assignment,
    })
}

pub fn load_optional_assignment(instance: &Instance, path: Option<&Path>) -> Result<Option<Assignment>> {
    path.map(|p| {
        let bytes = fs::read(p).with_context(|| format!("reading {}", p.display()))?;
        Ok(load_assignment(instance, &bytes)?)
    })
    .transpose()
}

/// Writes `text` to `out` or stdout, with a trailing newline.
pub fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => {
            fs::write(path, format!("{text}\n")).with_context(|| format!("writing {}", path.display()))
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            writeln!(stdout, "{text}")?;
            Ok(())
        }
    }
}

pub fn emit_json<T: serde::Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    emit(out, &serde_json::to_string_pretty(value)?)
}

/// Parses `"3"`, `"1/20"` or a plain decimal such as `"0.05"`, exactly.
pub fn parse_exact(text: &str) -> Result<Rational> {
    let t = text.trim();
    if let Some((int_part, frac)) = t.split_once('.') {
        if frac.is_empty() || !frac.chars().all(|c| c.is_ascii_digit()) {
            bail!("invalid number {text:?}");
        }
        let den = format!("1{}", "0".repeat(frac.len()));
        let sign = if int_part.starts_with('-') { "-" } else { "" };
        let whole = int_part.trim_start_matches(['-', '+']);
        let num = format!("{sign}{}{frac}", if whole.is_empty() { "0" } else { whole });
        return Ok(parse_rational(&format!("{num}/{den}"))?);
    }
    Ok(parse_rational(t)?)
}
