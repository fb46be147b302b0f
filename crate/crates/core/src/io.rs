//! Interchange formats for classes, distributions, and oracle traces.
//!
//! # Class files
//!
//! The text form is line oriented; `#` starts a comment and blank lines are
//! ignored:
//!
//! ```text
//! # header: domain size, concept count, optional flags
//! 4 2 01
//! 0.25 0.25 0.25 0.25
//! 1 1 0 0
//! 1 0 1 0
//! ```
//!
//! The header carries `n m` followed by optional flags: `01` declares that
//! concept rows use `{1, 0}` with `0` mapped to `-1`, and `nodist` declares
//! that the probability row is absent (the distribution then lives in a
//! separate file or defaults to uniform at the call site). Without `01`,
//! concept rows use `{+1, -1}`.
//!
//! The JSON form is the [`ClassFile`] structure with keys `domain_size`,
//! `probs` (optional), `concepts`, and `zero_one`.
//!
//! # Distribution files
//!
//! A distribution file is whitespace-separated probabilities; layout and `#`
//! comments are free-form.

use serde::{Deserialize, Serialize};

use crate::domain::{Concept, ConceptClass, Distribution, Domain};
use crate::error::{Error, Result};

/// JSON form of a concept class, with an optional attached distribution.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassFile {
    /// Number of domain points.
    pub domain_size: usize,
    /// Optional probability vector over the domain.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probs: Option<Vec<f64>>,
    /// Concept rows; entries are `{+1, -1}`, or `{1, 0}` when `zero_one`.
    pub concepts: Vec<Vec<i8>>,
    /// Whether concept rows use the `{1, 0}` convention.
    #[serde(default)]
    pub zero_one: bool,
}

impl ClassFile {
    /// Converts the parsed file into validated domain objects.
    pub fn build(&self) -> Result<(ConceptClass, Option<Distribution>)> {
        let domain = Domain::new(self.domain_size)?;
        let concepts = self
            .concepts
            .iter()
            .enumerate()
            .map(|(row, entries)| parse_concept_row(entries, self.domain_size, self.zero_one, row))
            .collect::<Result<Vec<_>>>()?;
        let class = ConceptClass::new(domain, concepts)?;
        let dist = match &self.probs {
            Some(p) => Some(Distribution::new(p.clone())?),
            None => None,
        };
        if let Some(d) = &dist {
            if d.len() != self.domain_size {
                return Err(Error::DimensionMismatch {
                    what: "probability row vs domain size",
                    expected: self.domain_size,
                    got: d.len(),
                });
            }
        }
        Ok((class, dist))
    }

    /// Builds the JSON structure from domain objects.
    pub fn from_parts(class: &ConceptClass, dist: Option<&Distribution>) -> Self {
        ClassFile {
            domain_size: class.domain().size(),
            probs: dist.map(|d| d.probs().to_vec()),
            concepts: class
                .concepts()
                .iter()
                .map(|c| c.labels().to_vec())
                .collect(),
            zero_one: false,
        }
    }
}

fn parse_concept_row(entries: &[i8], n: usize, zero_one: bool, row: usize) -> Result<Concept> {
    if entries.len() != n {
        return Err(Error::Format(format!(
            "concept row {row} has {} entries, expected {n}",
            entries.len()
        )));
    }
    let labels = entries
        .iter()
        .map(|&e| match (zero_one, e) {
            (true, 1) => Ok(1),
            (true, 0) => Ok(-1),
            (false, 1) => Ok(1),
            (false, -1) => Ok(-1),
            _ => Err(Error::Format(format!(
                "concept row {row}: entry {e} not allowed under {} convention",
                if zero_one { "{1,0}" } else { "{+1,-1}" }
            ))),
        })
        .collect::<Result<Vec<i8>>>()?;
    Concept::new(labels)
}

/// Parses the line-oriented text form of a class file.
pub fn parse_class_text(text: &str) -> Result<(ConceptClass, Option<Distribution>)> {
    let mut lines = content_lines(text);
    let header = lines
        .next()
        .ok_or_else(|| Error::Format("class file is empty".into()))?;
    let mut tokens = header.split_whitespace();
    let n: usize = parse_token(tokens.next(), "domain size")?;
    let m: usize = parse_token(tokens.next(), "concept count")?;
    let mut zero_one = false;
    let mut nodist = false;
    for flag in tokens {
        match flag {
            "01" => zero_one = true,
            "nodist" => nodist = true,
            other => return Err(Error::Format(format!("unknown header flag '{other}'"))),
        }
    }
    let probs = if nodist {
        None
    } else {
        let row = lines
            .next()
            .ok_or_else(|| Error::Format("missing probability row".into()))?;
        let values = row
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|e| Error::Format(format!("probability '{t}': {e}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        Some(values)
    };
    let mut concepts = Vec::with_capacity(m);
    for row in 0..m {
        let line = lines
            .next()
            .ok_or_else(|| Error::Format(format!("missing concept row {row} of {m}")))?;
        let entries = line
            .split_whitespace()
            .map(|t| {
                t.parse::<i8>()
                    .map_err(|e| Error::Format(format!("concept row {row} entry '{t}': {e}")))
            })
            .collect::<Result<Vec<i8>>>()?;
        concepts.push(entries);
    }
    if let Some(extra) = lines.next() {
        return Err(Error::Format(format!(
            "unexpected trailing content: '{extra}'"
        )));
    }
    ClassFile {
        domain_size: n,
        probs,
        concepts,
        zero_one,
    }
    .build()
}

/// Writes the line-oriented text form. Concepts are emitted as `{+1, -1}`.
pub fn write_class_text(class: &ConceptClass, dist: Option<&Distribution>) -> String {
    let n = class.domain().size();
    let mut out = String::new();
    match dist {
        Some(d) => {
            out.push_str(&format!("{n} {}\n", class.len()));
            let row: Vec<String> = d.probs().iter().map(|p| format!("{p}")).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        None => out.push_str(&format!("{n} {} nodist\n", class.len())),
    }
    for c in class.concepts() {
        let row: Vec<String> = c.labels().iter().map(|l| format!("{l}")).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

/// Parses the JSON form of a class file.
pub fn parse_class_json(text: &str) -> Result<(ConceptClass, Option<Distribution>)> {
    let file: ClassFile = serde_json::from_str(text)?;
    file.build()
}

/// Writes the JSON form of a class file.
pub fn write_class_json(class: &ConceptClass, dist: Option<&Distribution>) -> Result<String> {
    Ok(serde_json::to_string_pretty(&ClassFile::from_parts(
        class, dist,
    ))?)
}

/// Parses a free-form distribution file: whitespace-separated probabilities.
pub fn parse_dist_text(text: &str) -> Result<Distribution> {
    let values = content_lines(text)
        .flat_map(|l| l.split_whitespace())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|e| Error::Format(format!("probability '{t}': {e}")))
        })
        .collect::<Result<Vec<f64>>>()?;
    Distribution::new(values)
}

fn content_lines(text: &str) -> impl Iterator<Item = &str> {
    text.lines()
        .map(|l| match l.find('#') {
            Some(i) => &l[..i],
            None => l,
        })
        .map(str::trim)
        .filter(|l| !l.is_empty())
}

fn parse_token<T: std::str::FromStr>(tok: Option<&str>, what: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    let tok = tok.ok_or_else(|| Error::Format(format!("missing {what} in header")))?;
    tok.parse()
        .map_err(|e| Error::Format(format!("{what} '{tok}': {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip_with_distribution() {
        let text = "\
# two concepts over four points
4 2
0.25 0.25 0.25 0.25
1 1 -1 -1
-1 1 -1 1
";
        let (class, dist) = parse_class_text(text).unwrap();
        assert_eq!(class.len(), 2);
        assert_eq!(class.domain().size(), 4);
        let dist = dist.unwrap();
        assert_eq!(dist.probs(), &[0.25; 4]);
        let rewritten = write_class_text(&class, Some(&dist));
        let (back, back_dist) = parse_class_text(&rewritten).unwrap();
        assert_eq!(back, class);
        assert_eq!(back_dist.unwrap(), dist);
    }

    #[test]
    fn zero_one_flag_maps_zero_to_minus_one() {
        let text = "2 1 01 nodist\n1 0\n";
        let (class, dist) = parse_class_text(text).unwrap();
        assert!(dist.is_none());
        assert_eq!(class.concept(0).labels(), &[1, -1]);
    }

    #[test]
    fn zero_entry_without_flag_is_rejected() {
        let text = "2 1 nodist\n1 0\n";
        assert!(parse_class_text(text).is_err());
    }

    #[test]
    fn header_errors_are_reported() {
        assert!(parse_class_text("").is_err());
        assert!(parse_class_text("2\n").is_err());
        assert!(parse_class_text("2 1 fancy\n1 1\n").is_err());
        // Row count mismatch.
        assert!(parse_class_text("2 2 nodist\n1 1\n").is_err());
        // Trailing garbage.
        assert!(parse_class_text("2 1 nodist\n1 1\n1 -1\n").is_err());
    }

    #[test]
    fn json_round_trip() {
        let text =
            r#"{"domain_size":2,"probs":[0.5,0.5],"concepts":[[1,-1],[-1,1]],"zero_one":false}"#;
        let (class, dist) = parse_class_json(text).unwrap();
        assert_eq!(class.len(), 2);
        let json = write_class_json(&class, dist.as_ref()).unwrap();
        let (back, back_dist) = parse_class_json(&json).unwrap();
        assert_eq!(back, class);
        assert_eq!(back_dist, dist);
    }

    #[test]
    fn dist_file_is_layout_free() {
        let d = parse_dist_text("0.5\n0.25 # tail\n0.25\n").unwrap();
        assert_eq!(d.probs(), &[0.5, 0.25, 0.25]);
        assert!(parse_dist_text("0.5 0.6").is_err());
    }
}
