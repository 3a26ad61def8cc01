//! Graph description text.
//!
//! ```text
//! # instrumental variables
//! var X 2
//! Z -> X
//! X -> Y
//! latent U
//! U -> X
//! U -> Y
//! W <-> Y        # fresh latent _L1 with edges _L1 -> W, _L1 -> Y
//! ```

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::graph::{Dag, DagBuilder, Visibility, DEFAULT_STATES};

enum Statement<'a> {
    Edge(&'a str, &'a str),
    Bidirected(&'a str, &'a str),
    Latent(&'a str),
    Var(&'a str, usize),
}

fn valid_name(name: &str) -> bool {
    !name.is_empty() && name.chars().all(|c| c.is_alphanumeric() || c == '_' || c == '.' || c == '\'')
}

fn name_at(line: usize, name: &str) -> Result<&str> {
    if valid_name(name) {
        Ok(name)
    } else {
        Err(Error::Parse { line, message: format!("invalid vertex name {name:?}") })
    }
}

fn parse_line(line: usize, text: &str) -> Result<Statement<'_>> {
    let malformed = |message: String| Error::Parse { line, message };
    if let Some((a, b)) = text.split_once("<->") {
        return Ok(Statement::Bidirected(name_at(line, a.trim())?, name_at(line, b.trim())?));
    }
    if let Some((a, b)) = text.split_once("->") {
        return Ok(Statement::Edge(name_at(line, a.trim())?, name_at(line, b.trim())?));
    }
    let mut words = text.split_whitespace();
    match words.next() {
        Some("latent") => {
            let name = words.next().ok_or_else(|| malformed("latent needs a name".into()))?;
            if words.next().is_some() {
                return Err(malformed("trailing tokens after latent declaration".into()));
            }
            Ok(Statement::Latent(name_at(line, name)?))
        }
        Some("var") => {
            let name = words.next().ok_or_else(|| malformed("var needs a name".into()))?;
            let states = match words.next() {
                None => DEFAULT_STATES,
                Some(tok) => {
                    let tok = tok.trim_start_matches('[').trim_end_matches(']');
                    let k: usize = tok.parse().map_err(|_| malformed(format!("invalid state count {tok:?}")))?;
                    if k < 2 {
                        return Err(malformed(format!("state count must be at least 2, got {k}")));
                    }
                    k
                }
            };
            if words.next().is_some() {
                return Err(malformed("trailing tokens after var declaration".into()));
            }
            Ok(Statement::Var(name_at(line, name)?, states))
        }
        _ => Err(malformed(format!("unrecognised statement {text:?}"))),
    }
}

/// Parses the graph text format into a validated [`Dag`].
///
/// Vertices are numbered in order of first appearance. Each `A <-> B` line
/// introduces a fresh latent `_L<k>` (k counting from 1, skipping names the
/// text already uses) right after its two endpoints.
pub fn parse_graph(text: &str) -> Result<Dag> {
    let mut statements = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let body = raw.split('#').next().unwrap_or("").trim();
        if !body.is_empty() {
            statements.push((i + 1, parse_line(i + 1, body)?));
        }
    }

    let used: HashSet<&str> = statements
        .iter()
        .flat_map(|(_, s)| match *s {
            Statement::Edge(a, b) | Statement::Bidirected(a, b) => vec![a, b],
            Statement::Latent(a) | Statement::Var(a, _) => vec![a],
        })
        .collect();
    let mut next_fresh = 1usize;
    let mut fresh = || loop {
        let name = format!("_L{next_fresh}");
        next_fresh += 1;
        if !used.contains(name.as_str()) {
            return name;
        }
    };

    let mut b = DagBuilder::new();
    let mut declared: HashSet<&str> = HashSet::new();
    let mut latent: HashSet<&str> = HashSet::new();
    let mut has_states: HashSet<&str> = HashSet::new();
    for (line, st) in &statements {
        match *st {
            Statement::Edge(p, c) => {
                b.edge(p, c);
            }
            Statement::Bidirected(x, y) => {
                let l = fresh();
                let xi = b.ensure(x);
                let yi = b.ensure(y);
                let li = b.vertex(&l, Visibility::Latent, DEFAULT_STATES)?;
                b.edge_ids(li, xi).edge_ids(li, yi);
            }
            Statement::Latent(name) => {
                if !declared.insert(name) {
                    return Err(Error::DuplicateVertex(name.to_string()));
                }
                if has_states.contains(name) {
                    return Err(Error::Parse { line: *line, message: format!("{name} declared both var and latent") });
                }
                latent.insert(name);
                let v = b.ensure(name);
                b.set_visibility(v, Visibility::Latent);
            }
            Statement::Var(name, k) => {
                if !declared.insert(name) {
                    return Err(Error::DuplicateVertex(name.to_string()));
                }
                if latent.contains(name) {
                    return Err(Error::Parse { line: *line, message: format!("{name} declared both latent and var") });
                }
                has_states.insert(name);
                let v = b.ensure(name);
                b.set_states(v, k);
            }
        }
    }
    b.build()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_iv_graph() {
        let g = parse_graph("Z -> X\nX -> Y\nlatent U\nU -> X\nU -> Y").unwrap();
        let names: Vec<_> = g.vertices().map(|v| g.name(v)).collect();
        assert_eq!(names, ["Z", "X", "Y", "U"]);
        assert!(g.is_latent(g.id("U").unwrap()));
        assert_eq!(g.edge_count(), 4);
        let (x, y) = (g.id("X").unwrap(), g.id("Y").unwrap());
        assert!(g.has_edge(x, y));
    }

    #[test]
    fn cycle_is_rejected() {
        assert!(matches!(parse_graph("X -> Y\nY -> X"), Err(Error::Cycle(_))));
    }

    #[test]
    fn bidirected_expands_to_fresh_latent() {
        let g = parse_graph("X <-> Z").unwrap();
        let l = g.id("_L1").unwrap();
        assert!(g.is_latent(l));
        assert_eq!(g.children(l), &[g.id("X").unwrap(), g.id("Z").unwrap()]);
        assert_eq!(g.edge_count(), 2);
    }

    #[test]
    fn fresh_names_skip_user_names() {
        let g = parse_graph("_L1 -> A\nA <-> B").unwrap();
        assert!(g.is_observed(g.id("_L1").unwrap()));
        assert!(g.is_latent(g.id("_L2").unwrap()));
    }

    #[test]
    fn latent_with_parent_is_rejected() {
        assert!(matches!(parse_graph("latent U\nX -> U"), Err(Error::LatentWithParent(_))));
    }

    #[test]
    fn duplicate_declaration_is_rejected() {
        assert!(matches!(parse_graph("var X 3\nvar X 2"), Err(Error::DuplicateVertex(_))));
        assert!(matches!(parse_graph("latent U\nlatent U"), Err(Error::DuplicateVertex(_))));
    }

    #[test]
    fn malformed_lines_report_line_numbers() {
        assert!(matches!(parse_graph("X -> Y\nwhat is this"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_graph("X -> "), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_graph("var X 1"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn var_declares_states_and_comments_are_ignored() {
        let g = parse_graph("# header\nvar X [3]\nvar Y 4 # trailing\nX -> Y\nX -> W").unwrap();
        assert_eq!(g.states(g.id("X").unwrap()), 3);
        assert_eq!(g.states(g.id("Y").unwrap()), 4);
        assert_eq!(g.states(g.id("W").unwrap()), 2);
    }

    #[test]
    fn parsing_is_deterministic() {
        let text = "var X\nX <-> Y\nY <-> Z\nZ -> X";
        assert_eq!(parse_graph(text).unwrap(), parse_graph(text).unwrap());
    }
}
