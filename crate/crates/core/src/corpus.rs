//! Text DSL for defining piecewise-linear maps, plus the built-in corpus.
//!
//! The format is line-oriented (`.plmap` files, UTF-8):
//!
//! ```text
//! # comment
//! map tent
//! domain 0 1
//! node 0 0
//! node 1/2 1
//! node 1 0
//! selfmap
//! meta family classic
//! ```
//!
//! Rational literals are `<int>` or `<int>/<posint>`. Nodes must be given in
//! strictly increasing abscissa order; the parser never sorts, so a typo in
//! the node order is caught rather than silently repaired. There is no
//! expression syntax: nodes are the canonical exact representation and slopes
//! are derived.

use crate::interval::Interval;
use crate::plmap::{MapError, PLMap};
use crate::rational::Rational;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parse error at line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CorpusError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("validation error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Validation { line: Option<usize>, message: String },
    #[error("unknown builtin map `{0}`")]
    UnknownBuiltin(String),
    #[error(transparent)]
    Map(#[from] MapError),
}

/// A parsed map definition: name, domain, node list and free-form metadata.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MapSource {
    pub name: String,
    pub domain: (Rational, Rational),
    pub nodes: Vec<(Rational, Rational)>,
    pub selfmap: bool,
    pub metadata: Vec<(String, String)>,
}

impl MapSource {
    pub fn to_map(&self) -> Result<PLMap, CorpusError> {
        self.validate()?;
        let domain = Interval::new(self.domain.0.clone(), self.domain.1.clone()).unwrap();
        let map = if self.selfmap {
            PLMap::with_codomain(self.nodes.clone(), domain)?
        } else {
            PLMap::new(self.nodes.clone())?
        };
        Ok(map)
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        let err = |message: String| CorpusError::Validation {
            line: None,
            message,
        };
        if self.domain.0 >= self.domain.1 {
            return Err(err(format!(
                "domain [{}, {}] is empty or degenerate",
                self.domain.0, self.domain.1
            )));
        }
        if self.nodes.len() < 2 {
            return Err(err("need at least two nodes".into()));
        }
        for w in self.nodes.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(err(format!("duplicate node abscissa {}", w[0].0)));
            }
            if w[0].0 > w[1].0 {
                return Err(err(format!(
                    "nodes out of order: {} after {}",
                    w[1].0, w[0].0
                )));
            }
        }
        if self.nodes.first().unwrap().0 != self.domain.0
            || self.nodes.last().unwrap().0 != self.domain.1
        {
            return Err(err(
                "first and last node abscissae must equal the domain endpoints".into(),
            ));
        }
        if self.selfmap {
            for (x, y) in &self.nodes {
                if *y < self.domain.0 || *y > self.domain.1 {
                    return Err(err(format!(
                        "selfmap declared but node ({x}, {y}) has value outside the domain"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Canonical text form; `parse_map(serialize(..))` reproduces the source
    /// byte for byte after one normalization pass.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        writeln!(out, "map {}", self.name).unwrap();
        writeln!(out, "domain {} {}", self.domain.0, self.domain.1).unwrap();
        for (x, y) in &self.nodes {
            writeln!(out, "node {} {}", x, y).unwrap();
        }
        if self.selfmap {
            writeln!(out, "selfmap").unwrap();
        }
        for (k, v) in &self.metadata {
            writeln!(out, "meta {} {}", k, v).unwrap();
        }
        out
    }
}

fn parse_rational(tok: &str, line: usize, column: usize) -> Result<Rational, ParseError> {
    tok.parse().map_err(|e: crate::rational::ParseRationalError| ParseError {
        line,
        column,
        message: e.to_string(),
    })
}

/// Parses the `.plmap` text format. Structured errors, no panics.
pub fn parse_map(text: &str) -> Result<MapSource, CorpusError> {
    let mut name: Option<String> = None;
    let mut domain: Option<(Rational, Rational)> = None;
    let mut nodes: Vec<(Rational, Rational)> = Vec::new();
    let mut selfmap = false;
    let mut metadata: Vec<(String, String)> = Vec::new();

    for (idx, raw_line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        };
        let mut tokens = Vec::new();
        let mut offset = 0usize;
        for tok in line.split_whitespace() {
            // Column of the token start, 1-based in the uncommented slice.
            let col = line[offset..].find(tok).map(|p| offset + p).unwrap_or(offset);
            tokens.push((tok, col + 1));
            offset = col + tok.len();
        }
        if tokens.is_empty() {
            continue;
        }
        let (keyword, kw_col) = tokens[0];
        let perr = |column: usize, message: String| {
            CorpusError::Parse(ParseError {
                line: lineno,
                column,
                message,
            })
        };
        match keyword {
            "map" => {
                if tokens.len() != 2 {
                    return Err(perr(kw_col, "expected `map <identifier>`".into()));
                }
                let ident = tokens[1].0;
                if !ident
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == ':')
                {
                    return Err(perr(tokens[1].1, format!("invalid identifier `{ident}`")));
                }
                if name.replace(ident.to_string()).is_some() {
                    return Err(perr(kw_col, "duplicate `map` line".into()));
                }
            }
            "domain" => {
                if tokens.len() != 3 {
                    return Err(perr(kw_col, "expected `domain <q> <q>`".into()));
                }
                let lo = parse_rational(tokens[1].0, lineno, tokens[1].1)?;
                let hi = parse_rational(tokens[2].0, lineno, tokens[2].1)?;
                if domain.replace((lo, hi)).is_some() {
                    return Err(perr(kw_col, "duplicate `domain` line".into()));
                }
            }
            "node" => {
                if tokens.len() != 3 {
                    return Err(perr(kw_col, "expected `node <q> <q>`".into()));
                }
                let x = parse_rational(tokens[1].0, lineno, tokens[1].1)?;
                let y = parse_rational(tokens[2].0, lineno, tokens[2].1)?;
                if let Some((px, _)) = nodes.last() {
                    if *px == x {
                        return Err(CorpusError::Validation {
                            line: Some(lineno),
                            message: format!("duplicate node abscissa {x}"),
                        });
                    }
                    if *px > x {
                        return Err(CorpusError::Validation {
                            line: Some(lineno),
                            message: format!("nodes out of order: {x} after {px}"),
                        });
                    }
                }
                nodes.push((x, y));
            }
            "selfmap" => {
                if tokens.len() != 1 {
                    return Err(perr(kw_col, "`selfmap` takes no arguments".into()));
                }
                selfmap = true;
            }
            "meta" => {
                if tokens.len() < 3 {
                    return Err(perr(kw_col, "expected `meta <key> <value>`".into()));
                }
                let key = tokens[1].0.to_string();
                let value = tokens[2..]
                    .iter()
                    .map(|(t, _)| *t)
                    .collect::<Vec<_>>()
                    .join(" ");
                metadata.push((key, value));
            }
            other => {
                return Err(perr(kw_col, format!("unknown keyword `{other}`")));
            }
        }
    }

    let source = MapSource {
        name: name.ok_or(CorpusError::Validation {
            line: None,
            message: "missing `map` line".into(),
        })?,
        domain: domain.ok_or(CorpusError::Validation {
            line: None,
            message: "missing `domain` line".into(),
        })?,
        nodes,
        selfmap,
        metadata,
    };
    source.validate()?;
    Ok(source)
}

fn int_nodes(pairs: &[(i64, i64)]) -> Vec<(Rational, Rational)> {
    pairs
        .iter()
        .map(|(x, y)| (Rational::from_int(*x), Rational::from_int(*y)))
        .collect()
}

/// The classical transitive map family on [1, 2n+1] for n >= 2:
/// f(1) = n+1; f(i) = 2n+3-i for 2 <= i <= n+1; f(j) = 2n+2-j for
/// n+2 <= j <= 2n+1; affine between consecutive integers. All integer nodes
/// are kept even where consecutive segments are collinear, matching the
/// defining data.
pub fn remark2_family(n: u32) -> Result<MapSource, CorpusError> {
    if n < 2 {
        return Err(CorpusError::UnknownBuiltin(format!("remark2:{n}")));
    }
    let n = n as i64;
    let mut pairs = Vec::new();
    pairs.push((1, n + 1));
    for i in 2..=(n + 1) {
        pairs.push((i, 2 * n + 3 - i));
    }
    for j in (n + 2)..=(2 * n + 1) {
        pairs.push((j, 2 * n + 2 - j));
    }
    let source = MapSource {
        name: format!("remark2:{n}"),
        domain: (Rational::from_int(1), Rational::from_int(2 * n + 1)),
        nodes: int_nodes(&pairs),
        selfmap: true,
        metadata: vec![(
            "family".into(),
            format!("one period-{} orbit, no period-{} orbits", 2 * n + 1, 2 * n - 1),
        )],
    };
    source.validate()?;
    Ok(source)
}

/// Built-in corpus maps. `remark2:<n>` selects the parametric family.
pub fn builtin(name: &str) -> Result<MapSource, CorpusError> {
    if let Some(param) = name.strip_prefix("remark2:") {
        let n: u32 = param
            .parse()
            .map_err(|_| CorpusError::UnknownBuiltin(name.to_string()))?;
        return remark2_family(n);
    }
    let source = match name {
        "tent" => MapSource {
            name: "tent".into(),
            domain: (Rational::from_int(0), Rational::from_int(1)),
            nodes: vec![
                (Rational::from_int(0), Rational::from_int(0)),
                (Rational::ratio(1, 2), Rational::from_int(1)),
                (Rational::from_int(1), Rational::from_int(0)),
            ],
            selfmap: true,
            metadata: vec![("family".into(), "full tent map".into())],
        },
        "remark1" => MapSource {
            name: "remark1".into(),
            domain: (Rational::from_int(1), Rational::from_int(9)),
            nodes: int_nodes(&[(1, 4), (6, 9), (7, 2), (8, 3), (9, 1)]),
            selfmap: true,
            metadata: vec![(
                "family".into(),
                "period-9 integer cycle with 3-block image rotation".into(),
            )],
        },
        "remark4" => MapSource {
            name: "remark4".into(),
            domain: (Rational::from_int(0), Rational::from_int(1)),
            nodes: vec![
                (Rational::from_int(0), Rational::ratio(1, 2)),
                (Rational::ratio(1, 4), Rational::from_int(1)),
                (Rational::ratio(1, 2), Rational::ratio(1, 2)),
                (Rational::from_int(1), Rational::from_int(0)),
            ],
            selfmap: true,
            metadata: vec![(
                "family".into(),
                "transitive map that swaps the halves around 1/2".into(),
            )],
        },
        "example7" => MapSource {
            name: "example7".into(),
            domain: (Rational::from_int(0), Rational::from_int(3)),
            nodes: int_nodes(&[(0, 0), (1, 2), (2, 0), (3, 2)]),
            selfmap: true,
            metadata: vec![(
                "family".into(),
                "tent on [0,2] extended symmetrically to [0,3]".into(),
            )],
        },
        other => return Err(CorpusError::UnknownBuiltin(other.to_string())),
    };
    source.validate()?;
    Ok(source)
}

/// Names of the non-parametric builtins plus representative family members.
pub fn builtin_names() -> Vec<&'static str> {
    vec![
        "tent",
        "remark1",
        "remark2:2",
        "remark2:3",
        "remark2:4",
        "remark4",
        "example7",
    ]
}
