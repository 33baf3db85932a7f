//! Line-oriented text format for user-defined environments.
//!
//! ```text
//! # comment
//! states 3
//! actions 2
//! features 1
//! discount 0.9
//! observations 6          # optional; defaults to the exact (s, a) channel
//! initial 0 1.0
//! transition 0 1 2 0.75   # s a s' p
//! feature 2 0 0 1.0       # s a k value
//! observation 2 0 4 0.3   # s a o p
//! weights 1.0             # optional ground-truth weights
//! ```
//!
//! Unlisted entries are zero. The header keys must come before any triple.

use ndarray::{Array1, Array3};

use crate::envs::{Environment, EnvironmentKind};
use crate::error::{Error, Result};
use crate::mdp::DiscountedMdp;
use crate::observation::ObservationModel;
use crate::reward::{FeatureMap, FeatureWeights};

#[derive(Default)]
struct Header {
    states: Option<usize>,
    actions: Option<usize>,
    features: Option<usize>,
    observations: Option<usize>,
    discount: Option<f64>,
}

struct Tables {
    transitions: Array3<f64>,
    phi: Array3<f64>,
    observation: Option<Array3<f64>>,
    initial: Array1<f64>,
    weights: Option<Vec<f64>>,
}

fn field<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| Error::parse(line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| Error::parse(line, format!("invalid {what} {tok:?}")))
}

fn index(tok: Option<&str>, line: usize, what: &str, bound: usize) -> Result<usize> {
    let i: usize = field(tok, line, what)?;
    if i >= bound {
        return Err(Error::parse(line, format!("{what} {i} out of range (< {bound})")));
    }
    Ok(i)
}

pub fn parse_environment(text: &str, name: &str) -> Result<Environment> {
    let mut header = Header::default();
    let mut tables: Option<Tables> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut toks = content.split_whitespace();
        let key = toks.next().unwrap_or_default();
        match key {
            "states" | "actions" | "features" | "observations" | "discount" => {
                if tables.is_some() {
                    return Err(Error::parse(line, format!("{key} must precede the tables")));
                }
                let already = match key {
                    "states" => header.states.replace(field(toks.next(), line, key)?).is_some(),
                    "actions" => header.actions.replace(field(toks.next(), line, key)?).is_some(),
                    "features" => header.features.replace(field(toks.next(), line, key)?).is_some(),
                    "observations" => header.observations.replace(field(toks.next(), line, key)?).is_some(),
                    _ => header.discount.replace(field(toks.next(), line, key)?).is_some(),
                };
                if already {
                    return Err(Error::parse(line, format!("duplicate {key}")));
                }
            }
            "initial" | "transition" | "feature" | "observation" | "weights" => {
                if tables.is_none() {
                    let ns = header.states.ok_or_else(|| Error::parse(line, "states not declared"))?;
                    let na = header.actions.ok_or_else(|| Error::parse(line, "actions not declared"))?;
                    let nk = header.features.ok_or_else(|| Error::parse(line, "features not declared"))?;
                    if ns == 0 || na == 0 || nk == 0 {
                        return Err(Error::parse(line, "states, actions and features must be positive"));
                    }
                    tables = Some(Tables {
                        transitions: Array3::zeros((ns, na, ns)),
                        phi: Array3::zeros((ns, na, nk)),
                        observation: header.observations.map(|no| Array3::zeros((ns, na, no))),
                        initial: Array1::zeros(ns),
                        weights: None,
                    });
                }
                let t = tables.as_mut().unwrap();
                let (ns, na, nk) = t.phi.dim();
                match key {
                    "initial" => {
                        let s = index(toks.next(), line, "state", ns)?;
                        t.initial[s] += field::<f64>(toks.next(), line, "probability")?;
                    }
                    "transition" => {
                        let s = index(toks.next(), line, "state", ns)?;
                        let a = index(toks.next(), line, "action", na)?;
                        let n = index(toks.next(), line, "next state", ns)?;
                        t.transitions[[s, a, n]] += field::<f64>(toks.next(), line, "probability")?;
                    }
                    "feature" => {
                        let s = index(toks.next(), line, "state", ns)?;
                        let a = index(toks.next(), line, "action", na)?;
                        let k = index(toks.next(), line, "feature", nk)?;
                        t.phi[[s, a, k]] = field(toks.next(), line, "value")?;
                    }
                    "observation" => {
                        let obs = t
                            .observation
                            .as_mut()
                            .ok_or_else(|| Error::parse(line, "observation entries need an observations count"))?;
                        let no = obs.dim().2;
                        let s = index(toks.next(), line, "state", ns)?;
                        let a = index(toks.next(), line, "action", na)?;
                        let o = index(toks.next(), line, "observation", no)?;
                        obs[[s, a, o]] += field::<f64>(toks.next(), line, "probability")?;
                    }
                    _ => {
                        let w: Vec<f64> = toks
                            .by_ref()
                            .map(|tok| tok.parse().map_err(|_| Error::parse(line, format!("invalid weight {tok:?}"))))
                            .collect::<Result<_>>()?;
                        if w.len() != nk {
                            return Err(Error::parse(line, format!("expected {nk} weights, found {}", w.len())));
                        }
                        t.weights = Some(w);
                    }
                }
                if let Some(extra) = toks.next() {
                    return Err(Error::parse(line, format!("unexpected token {extra:?}")));
                }
            }
            other => return Err(Error::parse(line, format!("unknown key {other:?}"))),
        }
    }
    let t = tables.ok_or_else(|| Error::parse(text.lines().count().max(1), "no tables"))?;
    let discount = header.discount.unwrap_or(0.99);
    let (ns, na, nk) = t.phi.dim();
    let mdp = DiscountedMdp::new(t.transitions, discount, t.initial)?;
    let features = FeatureMap::new(t.phi)?;
    let observation = match t.observation {
        Some(prob) => ObservationModel::new(prob)?,
        None => ObservationModel::identity(ns, na),
    };
    let true_weights = FeatureWeights::new(match t.weights {
        Some(w) => Array1::from(w),
        None => Array1::zeros(nk),
    })?;
    Ok(Environment {
        name: name.to_string(),
        mdp,
        features,
        observation,
        true_weights,
        kind: EnvironmentKind::Custom,
    })
}

pub fn load_environment(path: &std::path::Path) -> Result<Environment> {
    let text = std::fs::read_to_string(path)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "custom".into());
    parse_environment(&text, &name)
}

/// Serialise an environment back into the text format.
pub fn environment_to_text(env: &Environment) -> String {
    use std::fmt::Write;
    let (ns, na) = (env.mdp.num_states(), env.mdp.num_actions());
    let nk = env.features.num_features();
    let no = env.observation.num_observations();
    let mut out = String::new();
    let _ = writeln!(out, "states {ns}\nactions {na}\nfeatures {nk}\ndiscount {}\nobservations {no}", env.mdp.discount());
    for (s, &p) in env.mdp.initial_distribution().iter().enumerate() {
        if p != 0.0 {
            let _ = writeln!(out, "initial {s} {p}");
        }
    }
    for s in 0..ns {
        for a in 0..na {
            for &(n, p) in env.mdp.successors(s, a) {
                let _ = writeln!(out, "transition {s} {a} {n} {p}");
            }
            for k in 0..nk {
                let v = env.features.get(s, a, k);
                if v != 0.0 {
                    let _ = writeln!(out, "feature {s} {a} {k} {v}");
                }
            }
            for o in 0..no {
                let p = env.observation.prob(s, a, o);
                if p != 0.0 {
                    let _ = writeln!(out, "observation {s} {a} {o} {p}");
                }
            }
        }
    }
    let w: Vec<String> = env.true_weights.values().iter().map(|w| w.to_string()).collect();
    let _ = writeln!(out, "weights {}", w.join(" "));
    out
}
