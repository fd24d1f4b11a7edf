//! Reader and writer for TNTP `_net.tntp` network files.
//!
//! Node ids are 1-based in files and 0-based everywhere else in the crate.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("missing metadata tag <{0}>")]
    MissingMetadata(String),
    #[error("line {line}: expected 10 fields, found {found}")]
    RowArity { line: usize, found: usize },
    #[error("metadata declares {declared} links but {parsed} rows were parsed")]
    CountMismatch { declared: usize, parsed: usize },
    #[error("line {line}, column {column}: field is not numeric")]
    NonNumericField { line: usize, column: usize },
    #[error("line {line}: node {node} outside 1..={num_nodes}")]
    NodeOutOfRange { line: usize, node: usize, num_nodes: usize },
    #[error("line {line}: {reason}")]
    InvalidLink { line: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkRecord {
    /// 0-based tail node.
    pub init_node: usize,
    /// 0-based head node.
    pub term_node: usize,
    pub capacity: f64,
    pub length: f64,
    pub free_flow_time: f64,
    pub b: f64,
    pub power: f64,
    pub speed: f64,
    pub toll: f64,
    pub link_type: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkData {
    pub num_nodes: usize,
    pub num_links: usize,
    pub first_thru_node: usize,
    pub links: Vec<LinkRecord>,
    /// Metadata tags this crate does not interpret, in file order.
    pub other_metadata: Vec<(String, String)>,
}

impl NetworkData {
    pub fn free_flow_times(&self) -> Vec<f64> {
        self.links.iter().map(|l| l.free_flow_time).collect()
    }

    pub fn capacities(&self) -> Vec<f64> {
        self.links.iter().map(|l| l.capacity).collect()
    }

    pub fn from_file(path: impl AsRef<Path>) -> crate::Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| crate::Error::io(path, e))?;
        Ok(parse_net(&text)?)
    }
}

const NODES: &str = "NUMBER OF NODES";
const LINKS: &str = "NUMBER OF LINKS";
const FIRST_THRU: &str = "FIRST THRU NODE";
const END: &str = "END OF METADATA";

fn parse_count(tag: &str, value: &str, line: usize) -> Result<usize, ParseError> {
    value.trim().parse::<usize>().map_err(|_| ParseError::NonNumericField {
        line,
        column: tag.len() + 3,
    })
}

pub fn parse_net(text: &str) -> Result<NetworkData, ParseError> {
    let mut num_nodes = None;
    let mut num_links = None;
    let mut first_thru_node = None;
    let mut other_metadata = Vec::new();
    let mut in_metadata = true;
    let mut links = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if in_metadata && line.starts_with('<') {
            let Some(close) = line.find('>') else {
                continue;
            };
            let tag = line[1..close].trim();
            let value = line[close + 1..].trim();
            match tag {
                END => in_metadata = false,
                NODES => num_nodes = Some(parse_count(tag, value, line_no)?),
                LINKS => num_links = Some(parse_count(tag, value, line_no)?),
                FIRST_THRU => first_thru_node = Some(parse_count(tag, value, line_no)?),
                _ => other_metadata.push((tag.to_string(), value.to_string())),
            }
            continue;
        }
        if line.starts_with('~') || in_metadata {
            continue;
        }

        let body = line.split(';').next().unwrap_or("");
        let fields: Vec<&str> = body.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() != 10 {
            return Err(ParseError::RowArity {
                line: line_no,
                found: fields.len(),
            });
        }
        let mut values = [0.0f64; 10];
        for (col, f) in fields.iter().enumerate() {
            values[col] = f
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or(ParseError::NonNumericField {
                    line: line_no,
                    column: col + 1,
                })?;
        }
        let node = |v: f64, column: usize| -> Result<usize, ParseError> {
            if v.fract() != 0.0 || v < 1.0 {
                return Err(ParseError::NonNumericField { line: line_no, column });
            }
            Ok(v as usize)
        };
        let init = node(values[0], 1)?;
        let term = node(values[1], 2)?;
        links.push((
            line_no,
            LinkRecord {
                init_node: init - 1,
                term_node: term - 1,
                capacity: values[2],
                length: values[3],
                free_flow_time: values[4],
                b: values[5],
                power: values[6],
                speed: values[7],
                toll: values[8],
                link_type: values[9],
            },
        ));
    }

    let num_nodes = num_nodes.ok_or_else(|| ParseError::MissingMetadata(NODES.into()))?;
    let num_links = num_links.ok_or_else(|| ParseError::MissingMetadata(LINKS.into()))?;
    if links.len() != num_links {
        return Err(ParseError::CountMismatch {
            declared: num_links,
            parsed: links.len(),
        });
    }
    for (line, link) in &links {
        for n in [link.init_node, link.term_node] {
            if n >= num_nodes {
                return Err(ParseError::NodeOutOfRange {
                    line: *line,
                    node: n + 1,
                    num_nodes,
                });
            }
        }
        let reason = if link.init_node == link.term_node {
            Some("self-loop link")
        } else if link.capacity <= 0.0 {
            Some("capacity must be positive")
        } else if link.free_flow_time < 0.0 {
            Some("free flow time must be nonnegative")
        } else {
            None
        };
        if let Some(reason) = reason {
            return Err(ParseError::InvalidLink {
                line: *line,
                reason: reason.into(),
            });
        }
    }

    Ok(NetworkData {
        num_nodes,
        num_links,
        first_thru_node: first_thru_node.unwrap_or(1),
        links: links.into_iter().map(|(_, l)| l).collect(),
        other_metadata,
    })
}

/// Serializes back to TNTP text; `parse_net(&write_net(n)) == n`.
pub fn write_net(net: &NetworkData) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "<{NODES}> {}", net.num_nodes);
    let _ = writeln!(out, "<{FIRST_THRU}> {}", net.first_thru_node);
    let _ = writeln!(out, "<{LINKS}> {}", net.num_links);
    for (tag, value) in &net.other_metadata {
        let _ = writeln!(out, "<{tag}> {value}");
    }
    let _ = writeln!(out, "<{END}>");
    out.push('\n');
    out.push_str("~\tinit_node\tterm_node\tcapacity\tlength\tfree_flow_time\tb\tpower\tspeed\ttoll\tlink_type\t;\n");
    for l in &net.links {
        let _ = writeln!(
            out,
            "\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t;",
            l.init_node + 1,
            l.term_node + 1,
            l.capacity,
            l.length,
            l.free_flow_time,
            l.b,
            l.power,
            l.speed,
            l.toll,
            l.link_type
        );
    }
    out
}

/// Node-link incidence matrix: `+1` at the tail of each link, `-1` at its head.
pub fn build_incidence(net: &NetworkData) -> DMatrix<f64> {
    let mut e = DMatrix::zeros(net.num_nodes, net.links.len());
    for (k, link) in net.links.iter().enumerate() {
        e[(link.init_node, k)] = 1.0;
        e[(link.term_node, k)] = -1.0;
    }
    e
}
