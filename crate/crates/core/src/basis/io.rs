//! Plain-text basis files.
//!
//! ```text
//! # comment lines start with '#'
//! joint_actions 2
//! players 2
//! joint 1
//! p1 0 0.5
//! p2 1
//! joint 2
//! p1 1 0
//! p2 0
//! ```
//!
//! One block per joint action, one labeled line per player. Values are
//! written in shortest round-trip form, so reading a written file gives back
//! the same bits.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::regret::BasisSet;

pub fn write_basis(basis: &BasisSet) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "joint_actions {}", basis.len());
    let _ = writeln!(out, "players {}", basis.num_players());
    for (k, joint) in basis.actions().iter().enumerate() {
        let _ = writeln!(out, "joint {}", k + 1);
        for (i, x) in joint.iter().enumerate() {
            let _ = write!(out, "p{}", i + 1);
            for v in x {
                let _ = write!(out, " {v:?}");
            }
            out.push('\n');
        }
    }
    out
}

fn err(line: usize, message: impl Into<String>) -> Error {
    Error::BasisFormat {
        line,
        message: message.into(),
    }
}

pub fn read_basis(text: &str) -> Result<BasisSet> {
    let mut declared_n = None;
    let mut declared_m = None;
    let mut actions: Vec<Vec<Vec<f64>>> = Vec::new();
    let mut last_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        last_line = line_no;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let key = parts.next().expect("non-empty line");
        let count = |parts: &mut std::str::SplitWhitespace| -> Result<usize> {
            parts
                .next()
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| err(line_no, format!("'{key}' needs a count")))
        };
        match key {
            "joint_actions" => declared_n = Some(count(&mut parts)?),
            "players" => declared_m = Some(count(&mut parts)?),
            "joint" => {
                let k = count(&mut parts)?;
                if k != actions.len() + 1 {
                    return Err(err(line_no, format!("expected joint {}, found {k}", actions.len() + 1)));
                }
                actions.push(Vec::new());
            }
            label if label.starts_with('p') => {
                let player: usize = label[1..]
                    .parse()
                    .map_err(|_| err(line_no, format!("bad player label '{label}'")))?;
                let joint = actions
                    .last_mut()
                    .ok_or_else(|| err(line_no, "player line before any 'joint' header"))?;
                if player != joint.len() + 1 {
                    return Err(err(line_no, format!("expected p{}, found {label}", joint.len() + 1)));
                }
                let values = parts
                    .map(|v| v.parse::<f64>().ok().filter(|x| x.is_finite()))
                    .collect::<Option<Vec<f64>>>()
                    .ok_or_else(|| err(line_no, "non-numeric value"))?;
                joint.push(values);
            }
            other => return Err(err(line_no, format!("unknown key '{other}'"))),
        }
    }

    let n = declared_n.ok_or_else(|| err(last_line, "missing 'joint_actions' line"))?;
    let m = declared_m.ok_or_else(|| err(last_line, "missing 'players' line"))?;
    if actions.len() != n {
        return Err(err(
            last_line,
            format!("declared {n} joint actions, found {}", actions.len()),
        ));
    }
    if let Some(k) = actions.iter().position(|j| j.len() != m) {
        return Err(err(last_line, format!("joint {} does not list {m} players", k + 1)));
    }
    BasisSet::new(actions).map_err(|e| err(last_line, e.to_string()))
}
