//! Plain-text signed edge lists.
//!
//! One edge per line as `from to weight`, node `0` being the leader.
//! Blank lines and text after `#` are ignored. An optional `followers N`
//! line fixes the follower count; otherwise it is the largest node id.

use std::fs;
use std::path::Path;

use bireg_core::{Edge, GraphError, SignedDigraph};

#[derive(Debug, thiserror::Error)]
pub enum EdgeListError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

pub fn parse_edge_list(text: &str) -> Result<SignedDigraph, EdgeListError> {
    let mut edges = Vec::new();
    let mut followers = None;
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        let syntax = |message: String| EdgeListError::Syntax { line, message };
        match fields.as_slice() {
            ["followers", n] => {
                let n: usize = n.parse().map_err(|_| syntax(format!("invalid follower count {n:?}")))?;
                followers = Some(n);
            }
            [from, to, weight] => {
                let from: usize = from.parse().map_err(|_| syntax(format!("invalid node id {from:?}")))?;
                let to: usize = to.parse().map_err(|_| syntax(format!("invalid node id {to:?}")))?;
                let weight: f64 = weight.parse().map_err(|_| syntax(format!("invalid weight {weight:?}")))?;
                edges.push(Edge::new(from, to, weight));
            }
            _ => return Err(syntax(format!("expected `from to weight`, got {content:?}"))),
        }
    }
    let graph = match followers {
        Some(n) => SignedDigraph::new(n, &edges)?,
        None => SignedDigraph::from_edges(&edges)?,
    };
    Ok(graph)
}

pub fn read_edge_list(path: &Path) -> Result<SignedDigraph, EdgeListError> {
    let text = fs::read_to_string(path).map_err(|source| EdgeListError::Io { path: path.display().to_string(), source })?;
    parse_edge_list(&text)
}

/// Inverse of [`parse_edge_list`]: a `followers` line, then one edge per line.
pub fn format_edge_list(g: &SignedDigraph) -> String {
    let mut out = format!("followers {}\n", g.n_followers());
    for e in g.edges() {
        out.push_str(&format!("{} {} {}\n", e.from, e.to, e.weight));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_blank_lines() {
        let g = parse_edge_list("# leader feeds 1\n0 1 1\n\n1 2 -0.5  # competitive\n").unwrap();
        assert_eq!(g.n_followers(), 2);
        assert_eq!(g.weight(2, 1), -0.5);
    }

    #[test]
    fn explicit_follower_count() {
        let g = parse_edge_list("followers 3\n0 1 1\n").unwrap();
        assert_eq!(g.n_followers(), 3);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = parse_edge_list("0 1 1\n1 two 1\n").unwrap_err();
        assert_eq!(err.to_string(), "line 2: invalid node id \"two\"");
        let err = parse_edge_list("0 1\n").unwrap_err();
        assert!(matches!(err, EdgeListError::Syntax { line: 1, .. }));
        let err = parse_edge_list("1 1 1\n").unwrap_err();
        assert!(matches!(err, EdgeListError::Graph(GraphError::SelfLoop { node: 1 })));
        assert!(matches!(parse_edge_list("# nothing\n"), Err(EdgeListError::Graph(GraphError::NoFollowers))));
    }

    #[test]
    fn round_trip() {
        let g = parse_edge_list("0 1 1\n1 2 -1\n2 3 2.5\n3 1 -1\n").unwrap();
        assert_eq!(parse_edge_list(&format_edge_list(&g)).unwrap(), g);
    }
}
