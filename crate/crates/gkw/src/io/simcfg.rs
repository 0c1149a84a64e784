//! `key=value` simulation config files.
//!
//! Keys mirror the simulation config fields (n, maf, a, means, sigma,
//! alpha, m_null, m_alt, model, seed, fresh_probs). `maf` and `a` accept
//! comma-separated lists so one file can describe a whole grid of cells.

use super::IoFormatError;
use crate::simkit::{PhenotypeModel, SimConfig};
use std::path::Path;

/// A base config plus the maf and uncertainty grids to sweep.
#[derive(Debug, Clone)]
pub struct SimGrid {
    pub base: SimConfig,
    pub mafs: Vec<f64>,
    pub a_levels: Vec<f64>,
}

impl SimGrid {
    /// Configs for every (maf, a) cell, row-major in maf.
    pub fn cells(&self) -> Vec<SimConfig> {
        let mut out = Vec::new();
        for &maf in &self.mafs {
            for &a in &self.a_levels {
                out.push(SimConfig {
                    maf,
                    a,
                    ..self.base.clone()
                });
            }
        }
        out
    }
}

pub fn load_sim_config(path: &Path) -> Result<SimGrid, IoFormatError> {
    parse_sim_config(&std::fs::read_to_string(path)?)
}

pub fn parse_sim_config(text: &str) -> Result<SimGrid, IoFormatError> {
    let mut base = SimConfig::default();
    let mut mafs = vec![base.maf];
    let mut a_levels = vec![base.a];
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| IoFormatError::InvalidValue {
            line: line_no,
            message: "expected key=value".into(),
        })?;
        let key = key.trim();
        let value = value.trim();
        let bad = |message: String| IoFormatError::InvalidValue {
            line: line_no,
            message,
        };
        match key {
            "n" => base.n = value.parse().map_err(|_| bad(format!("n={value}")))?,
            "maf" => {
                mafs = parse_f64_list(value).map_err(|m| bad(format!("maf: {m}")))?;
                base.maf = mafs[0];
            }
            "a" => {
                a_levels = parse_f64_list(value).map_err(|m| bad(format!("a: {m}")))?;
                base.a = a_levels[0];
            }
            "means" => {
                let v = parse_f64_list(value).map_err(|m| bad(format!("means: {m}")))?;
                if v.len() != 3 {
                    return Err(bad(format!("means needs 3 values, got {}", v.len())));
                }
                base.means = [v[0], v[1], v[2]];
            }
            "sigma" => base.sigma = value.parse().map_err(|_| bad(format!("sigma={value}")))?,
            "alpha" => base.alpha = value.parse().map_err(|_| bad(format!("alpha={value}")))?,
            "m_null" => {
                base.m_null = value.parse().map_err(|_| bad(format!("m_null={value}")))?
            }
            "m_alt" => base.m_alt = value.parse().map_err(|_| bad(format!("m_alt={value}")))?,
            "model" => {
                base.model = PhenotypeModel::parse(value)
                    .ok_or_else(|| bad(format!("unknown model {value:?}")))?
            }
            "seed" => base.seed = value.parse().map_err(|_| bad(format!("seed={value}")))?,
            "fresh_probs" => {
                base.fresh_probs = match value {
                    "true" | "1" | "yes" => true,
                    "false" | "0" | "no" => false,
                    other => return Err(bad(format!("fresh_probs={other}"))),
                }
            }
            other => return Err(bad(format!("unknown key {other:?}"))),
        }
    }
    Ok(SimGrid {
        base,
        mafs,
        a_levels,
    })
}

fn parse_f64_list(value: &str) -> Result<Vec<f64>, String> {
    let out: Result<Vec<f64>, _> = value.split(',').map(|t| t.trim().parse::<f64>()).collect();
    match out {
        Ok(v) if !v.is_empty() => Ok(v),
        _ => Err(format!("cannot parse {value:?} as numbers")),
    }
}
