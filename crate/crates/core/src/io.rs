//! Line-oriented instance files.
//!
//! ```text
//! # alpha=2/5 w0=20/1 w1=1/1 rho=1/10 eps0=1/10 eps1=1/10 predictions=labels
//! # id,true_type,prediction,release_time
//! 1,0,0,0/1
//! 2,1,0,3/2
//! ```
//!
//! With `predictions=probabilities` the third column holds p̂ as a fraction
//! and the `rho/eps0/eps1` keys may be omitted.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::domain::{
    format_rational, parse_rational, DomainError, Instance, Job, JobType, Parameters, Prediction, PredictionMode,
    PredictionModel,
};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("missing header key {0:?}")]
    MissingKey(&'static str),
    #[error(transparent)]
    Domain(#[from] DomainError),
}

pub fn write_instance(instance: &Instance) -> String {
    let p = instance.params();
    let mut out = String::new();
    let _ = write!(
        out,
        "# alpha={} w0={} w1={}",
        format_rational(&p.alpha()),
        format_rational(&p.w0()),
        format_rational(&p.w1())
    );
    if let Some(m) = instance.model() {
        let _ = write!(
            out,
            " rho={} eps0={} eps1={}",
            format_rational(&m.rho()),
            format_rational(&m.eps0()),
            format_rational(&m.eps1())
        );
    }
    let mode = match instance.mode() {
        PredictionMode::Labels => "labels",
        PredictionMode::Probabilities => "probabilities",
    };
    let _ = writeln!(out, " predictions={mode}");
    out.push_str("# id,true_type,prediction,release_time\n");
    for j in instance.jobs() {
        let pred = match j.prediction {
            Prediction::Label(l) => l.to_string(),
            Prediction::Probability(q) => format_rational(&q),
        };
        let _ = writeln!(out, "{},{},{},{}", j.id, j.true_type, pred, format_rational(&j.release));
    }
    out
}

pub fn read_instance(text: &str) -> Result<Instance, FormatError> {
    let mut header: BTreeMap<String, String> = BTreeMap::new();
    let mut rows = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let lineno = idx + 1;
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            for tok in comment.split_whitespace() {
                if let Some((k, v)) = tok.split_once('=') {
                    header.insert(k.to_string(), v.to_string());
                }
            }
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 4 {
            return Err(FormatError::Syntax { line: lineno, msg: format!("expected 4 columns, got {}", cols.len()) });
        }
        rows.push((lineno, cols.iter().map(|s| s.to_string()).collect::<Vec<_>>()));
    }

    let get = |k: &'static str| header.get(k).ok_or(FormatError::MissingKey(k));
    let params = Parameters::new(
        parse_rational(get("alpha")?)?,
        parse_rational(get("w0")?)?,
        parse_rational(get("w1")?)?,
    )?;
    let model = match (header.get("rho"), header.get("eps0"), header.get("eps1")) {
        (Some(r), Some(e0), Some(e1)) => {
            Some(PredictionModel::new(parse_rational(r)?, parse_rational(e0)?, parse_rational(e1)?)?)
        }
        _ => None,
    };
    let mode = match header.get("predictions").map(String::as_str) {
        None | Some("labels") => PredictionMode::Labels,
        Some("probabilities") => PredictionMode::Probabilities,
        Some(other) => {
            return Err(FormatError::Syntax { line: 1, msg: format!("unknown predictions mode {other:?}") });
        }
    };

    let mut jobs = Vec::with_capacity(rows.len());
    for (lineno, cols) in rows {
        let syntax = |msg: String| FormatError::Syntax { line: lineno, msg };
        let id: usize = cols[0].parse().map_err(|_| syntax(format!("bad id {:?}", cols[0])))?;
        let true_type: JobType = cols[1].parse().map_err(|e: DomainError| syntax(e.to_string()))?;
        let prediction = match mode {
            PredictionMode::Labels => {
                Prediction::Label(cols[2].parse().map_err(|e: DomainError| syntax(e.to_string()))?)
            }
            PredictionMode::Probabilities => {
                Prediction::Probability(parse_rational(&cols[2]).map_err(|e| syntax(e.to_string()))?)
            }
        };
        let release = parse_rational(&cols[3]).map_err(|e| syntax(e.to_string()))?;
        jobs.push(Job::new(id, true_type, prediction).released_at(release));
    }
    Ok(Instance::new(jobs, params, model)?)
}
