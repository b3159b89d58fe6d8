//! Plain-text edge lists: one `u v` pair per line, `#` starts a comment.
//!
//! Dumps written by [`write_edge_list`] start with a
//! `# family=... nodes=N edges=M` header. When a `nodes=N` key appears in a
//! comment before the first edge, ids are taken as dense `0..N` (so isolated
//! nodes survive a round trip); otherwise ids are compacted in order of first
//! appearance.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use super::{DropStats, Family, Graph, GraphBuilder, GraphError};

#[derive(Debug, Clone)]
pub struct LoadedGraph {
    pub graph: Graph,
    /// `original_ids[new] = id as written in the file`.
    pub original_ids: Vec<u64>,
    pub dropped: DropStats,
}

impl LoadedGraph {
    /// Maps an id as written in the file to the dense node id.
    pub fn node_for(&self, original: u64) -> Option<usize> {
        // Dense files map ids to themselves.
        if self.original_ids.get(original as usize) == Some(&original) {
            return Some(original as usize);
        }
        self.original_ids.iter().position(|&o| o == original)
    }

    /// Index from file ids to dense ids, for bulk lookups.
    pub fn id_index(&self) -> HashMap<u64, usize> {
        self.original_ids
            .iter()
            .enumerate()
            .map(|(new, &old)| (old, new))
            .collect()
    }
}

pub fn load_edge_list<R: BufRead>(reader: R) -> Result<LoadedGraph, GraphError> {
    let mut declared_nodes: Option<usize> = None;
    let mut seen_edge = false;
    let mut compact: HashMap<u64, usize> = HashMap::new();
    let mut original_ids: Vec<u64> = Vec::new();
    let mut raw: Vec<(usize, usize)> = Vec::new();

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        if let Some(comment) = text.strip_prefix('#') {
            if !seen_edge {
                if let Some(n) = header_node_count(comment, line_no)? {
                    declared_nodes = Some(n);
                }
            }
            continue;
        }
        seen_edge = true;
        let mut fields = text.split_whitespace();
        let (a, b) = match (fields.next(), fields.next(), fields.next()) {
            (Some(a), Some(b), None) => (parse_id(a, line_no)?, parse_id(b, line_no)?),
            _ => {
                return Err(GraphError::Parse {
                    line: line_no,
                    message: format!("expected two node ids, got {text:?}"),
                })
            }
        };
        let (u, v) = match declared_nodes {
            Some(n) => {
                for id in [a, b] {
                    if id >= n as u64 {
                        return Err(GraphError::Parse {
                            line: line_no,
                            message: format!("node id {id} exceeds declared nodes={n}"),
                        });
                    }
                }
                (a as usize, b as usize)
            }
            None => {
                let mut intern = |id: u64| {
                    *compact.entry(id).or_insert_with(|| {
                        original_ids.push(id);
                        original_ids.len() - 1
                    })
                };
                (intern(a), intern(b))
            }
        };
        raw.push((u, v));
    }

    let n = match declared_nodes {
        Some(n) => {
            original_ids = (0..n as u64).collect();
            n
        }
        None => original_ids.len(),
    };
    let mut builder = GraphBuilder::with_capacity(n, raw.len());
    for (u, v) in raw {
        builder.add_edge(u, v)?;
    }
    let (graph, dropped) = builder.build();
    Ok(LoadedGraph {
        graph: graph.with_family(Family::Loaded),
        original_ids,
        dropped,
    })
}

fn parse_id(token: &str, line: usize) -> Result<u64, GraphError> {
    token.parse::<u64>().map_err(|_| GraphError::Parse {
        line,
        message: format!("{token:?} is not a non-negative integer node id"),
    })
}

fn header_node_count(comment: &str, line: usize) -> Result<Option<usize>, GraphError> {
    for token in comment.split_whitespace() {
        if let Some(value) = token.strip_prefix("nodes=") {
            return value.parse().map(Some).map_err(|_| GraphError::Parse {
                line,
                message: format!("bad node count {value:?}"),
            });
        }
    }
    Ok(None)
}

pub fn write_edge_list<W: Write>(g: &Graph, mut out: W) -> Result<(), GraphError> {
    writeln!(
        out,
        "# family={} nodes={} edges={}",
        g.family(),
        g.node_count(),
        g.edge_count()
    )?;
    for (u, v) in g.edges() {
        writeln!(out, "{u} {v}")?;
    }
    out.flush()?;
    Ok(())
}
