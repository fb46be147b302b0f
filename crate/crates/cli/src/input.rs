//! Input resolution: classes and distributions arrive either as generator
//! specs or as files, and malformed inputs are usage errors (exit code 2),
//! not runtime failures.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use anyhow::Result;
use sqmem::harness::{perturb_distribution, GenSpec};
use sqmem::io::{parse_class_json, parse_class_text, parse_dist_text};
use sqmem::{Calibration, ConceptClass, Distribution};

/// An input-interpretation problem; the top level maps it to exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// Builds a usage error.
pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(UsageError(msg.into()))
}

const GEN_KINDS: [&str; 4] = ["parity:", "sparse_parity:", "threshold:", "random:"];

/// Resolves `--class`: a generator spec (`parity:N`, `sparse_parity:N:K`,
/// `threshold:N`, `random:M:N:SEED`) or a class file (`.json` or text).
/// Generated classes come with their default distribution; files may embed
/// one.
pub fn load_class(spec: &str, cal: &Calibration) -> Result<(ConceptClass, Option<Distribution>)> {
    if let Ok(gen) = GenSpec::from_str(spec) {
        let (class, dist) = gen
            .generate(cal)
            .map_err(|e| usage(format!("--class {spec}: {e}")))?;
        return Ok((class, Some(dist)));
    }
    if GEN_KINDS.iter().any(|k| spec.starts_with(k)) {
        // Looks like a generator spec but did not parse: report that, not a
        // missing file.
        let err = GenSpec::from_str(spec).expect_err("parse failed above");
        return Err(usage(format!("--class {spec}: {err}")));
    }
    let path = Path::new(spec);
    if !path.is_file() {
        return Err(usage(format!(
            "--class {spec}: neither a generator spec (parity:N, sparse_parity:N:K, \
             threshold:N, random:M:N:SEED) nor a readable file"
        )));
    }
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("--class {spec}: {e}")))?;
    let parsed = if path.extension().is_some_and(|x| x == "json") {
        parse_class_json(&text)
    } else {
        parse_class_text(&text)
    };
    parsed.map_err(|e| usage(format!("--class {spec}: {e}")))
}

/// Resolves a distribution argument over `n` points: `auto` (embedded when
/// present, else uniform), `uniform`, or a file of probabilities.
pub fn load_dist(
    spec: &str,
    embedded: Option<Distribution>,
    n: usize,
    flag: &str,
) -> Result<Distribution> {
    let dist = match spec {
        "auto" => match embedded {
            Some(d) => d,
            None => Distribution::uniform(n).map_err(|e| usage(format!("{flag}: {e}")))?,
        },
        "uniform" => Distribution::uniform(n).map_err(|e| usage(format!("{flag}: {e}")))?,
        _ => {
            let path = Path::new(spec);
            if !path.is_file() {
                return Err(usage(format!(
                    "{flag} {spec}: neither 'uniform', 'auto', nor a readable file"
                )));
            }
            let text =
                std::fs::read_to_string(path).map_err(|e| usage(format!("{flag} {spec}: {e}")))?;
            let parsed = if path.extension().is_some_and(|x| x == "json") {
                serde_json::from_str::<Vec<f64>>(&text)
                    .map_err(|e| usage(format!("{flag} {spec}: {e}")))
                    .and_then(|v| {
                        Distribution::new(v).map_err(|e| usage(format!("{flag} {spec}: {e}")))
                    })?
            } else {
                parse_dist_text(&text).map_err(|e| usage(format!("{flag} {spec}: {e}")))?
            };
            parsed
        }
    };
    if dist.len() != n {
        return Err(usage(format!(
            "{flag}: distribution covers {} points but the class domain has {n}",
            dist.len()
        )));
    }
    Ok(dist)
}

/// Resolves a source distribution `--q`: `perturb:MU[:SEED]` for a seeded
/// ratio-perturbation of `p`, or anything [`load_dist`] accepts. Returns the
/// neighborhood radius when the argument implies one.
pub fn load_source_dist(
    spec: &str,
    p: &Distribution,
    seed: u64,
) -> Result<(Distribution, Option<f64>)> {
    if let Some(rest) = spec.strip_prefix("perturb:") {
        let mut parts = rest.split(':');
        let mu: f64 = parts
            .next()
            .filter(|s| !s.is_empty())
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| usage(format!("--q {spec}: expected perturb:MU[:SEED]")))?;
        let pseed: u64 = match parts.next() {
            Some(s) => s
                .parse()
                .map_err(|e| usage(format!("--q {spec}: seed: {e}")))?,
            None => seed,
        };
        if parts.next().is_some() {
            return Err(usage(format!("--q {spec}: expected perturb:MU[:SEED]")));
        }
        let q =
            perturb_distribution(p, mu, pseed).map_err(|e| usage(format!("--q {spec}: {e}")))?;
        return Ok((q, Some(mu)));
    }
    let q = load_dist(spec, None, p.len(), "--q")?;
    Ok((q, None))
}
