//! Edge-list text format.
//!
//! ```text
//! # comment
//! n 3
//! 0 1 1
//! 1 2 2.5
//! ```
//!
//! Blank lines and `#` comments are ignored. The first remaining line must
//! be the `n <count>` header; every later line is `u v w`.

use std::fmt;
use std::str::FromStr;

use super::{check_edge, Edge, WeightedGraph};
use crate::error::{Error, Result};

pub fn parse_graph(text: &str) -> Result<WeightedGraph> {
    let mut n: Option<usize> = None;
    // (edge, line) pairs, so duplicates can name both lines
    let mut edges: Vec<(Edge, usize)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let Some(count) = n else {
            if tokens.len() != 2 || tokens[0] != "n" {
                return Err(Error::format(
                    Some(line_no),
                    format!("expected header `n <count>`, found `{line}`"),
                ));
            }
            let count: usize = tokens[1].parse().map_err(|_| {
                Error::format(Some(line_no), format!("invalid node count `{}`", tokens[1]))
            })?;
            if count == 0 {
                return Err(Error::format(Some(line_no), "node count must be positive"));
            }
            n = Some(count);
            continue;
        };
        if tokens.len() != 3 {
            return Err(Error::format(
                Some(line_no),
                format!("expected `u v w`, found `{line}`"),
            ));
        }
        let parse_node = |t: &str| -> Result<i64> {
            t.parse()
                .map_err(|_| Error::format(Some(line_no), format!("invalid node index `{t}`")))
        };
        let u = parse_node(tokens[0])?;
        let v = parse_node(tokens[1])?;
        let w: f64 = tokens[2]
            .parse()
            .map_err(|_| Error::format(Some(line_no), format!("invalid weight `{}`", tokens[2])))?;
        edges.push((check_edge(count, u, v, w, Some(line_no))?, line_no));
    }

    let n = n.ok_or_else(|| Error::format(None, "missing `n <count>` header"))?;
    edges.sort_by_key(|(e, line)| (e.key(), *line));
    if let Some(pair) = edges.windows(2).find(|p| p[0].0.key() == p[1].0.key()) {
        let (first, second) = (&pair[0], &pair[1]);
        return Err(Error::format(
            Some(second.1),
            format!(
                "duplicate edge ({}, {}), first given at line {}",
                first.0.u, first.0.v, first.1
            ),
        ));
    }
    Ok(WeightedGraph {
        n,
        edges: edges.into_iter().map(|(e, _)| e).collect(),
    })
}

impl FromStr for WeightedGraph {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_graph(s)
    }
}

impl fmt::Display for WeightedGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "n {}", self.n)?;
        for e in &self.edges {
            writeln!(f, "{} {} {}", e.u, e.v, format_sig17(e.w))?;
        }
        Ok(())
    }
}

/// Formats like C's `%.17g`: 17 significant digits, trailing zeros
/// trimmed, exponent notation outside `[1e-5, 1e17)`.
pub fn format_sig17(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0" } else { "0" }.to_string();
    }
    let sci = format!("{:.16e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let negative = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();

    let body = if (-5..17).contains(&exp) {
        if exp >= 0 {
            let split = exp as usize + 1;
            let (int, frac) = digits.split_at(split);
            trim_fraction(int, frac)
        } else {
            let zeros = "0".repeat((-exp - 1) as usize);
            trim_fraction("0", &format!("{zeros}{digits}"))
        }
    } else {
        let (lead, rest) = digits.split_at(1);
        let m = trim_fraction(lead, rest);
        format!("{m}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
    };
    if negative {
        format!("-{body}")
    } else {
        body
    }
}

fn trim_fraction(int: &str, frac: &str) -> String {
    let frac = frac.trim_end_matches('0');
    if frac.is_empty() {
        int.to_string()
    } else {
        format!("{int}.{frac}")
    }
}
