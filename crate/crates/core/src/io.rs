//! Text formats: edge lists (`<src> <dst> [prob]`) and node lists (one
//! identifier per line). `#` starts a comment line; LF and CRLF are accepted.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::{IcNetwork, NodeId};
use crate::state::ActivationState;

#[derive(Clone, Debug)]
pub struct LoadedGraph {
    pub network: IcNetwork,
    pub skipped_self_loops: usize,
    /// True when every edge line carried a probability column.
    pub explicit_probabilities: bool,
}

fn content_lines<R: BufRead>(reader: R) -> impl Iterator<Item = (usize, std::io::Result<String>)> {
    reader.lines().enumerate().map(|(i, l)| (i + 1, l))
}

pub fn load_edge_list<R: BufRead>(reader: R, undirected: bool) -> Result<LoadedGraph> {
    let mut ids: Vec<String> = Vec::new();
    let mut index: HashMap<String, NodeId> = HashMap::new();
    let mut edges = Vec::new();
    let mut skipped_self_loops = 0;
    let mut with_prob: Option<bool> = None;

    let mut intern = |id: &str, ids: &mut Vec<String>| -> NodeId {
        if let Some(&i) = index.get(id) {
            return i;
        }
        let i = ids.len();
        ids.push(id.to_string());
        index.insert(id.to_string(), i);
        i
    };

    for (line_no, line) in content_lines(reader) {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let has_prob = match tokens.len() {
            2 => false,
            3 => true,
            n => {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected `<src> <dst> [prob]`, found {n} fields"),
                })
            }
        };
        match with_prob {
            None => with_prob = Some(has_prob),
            Some(prev) if prev != has_prob => {
                return Err(Error::Parse {
                    line: line_no,
                    message: "probability column present on some lines but not others".into(),
                })
            }
            _ => {}
        }
        let p = if has_prob {
            let p: f64 = tokens[2].parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("bad probability `{}`", tokens[2]),
            })?;
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("probability {p} outside [0, 1]"),
                });
            }
            p
        } else {
            0.0
        };
        if tokens[0] == tokens[1] {
            skipped_self_loops += 1;
            continue;
        }
        let u = intern(tokens[0], &mut ids);
        let v = intern(tokens[1], &mut ids);
        edges.push((u, v, p));
        if undirected {
            edges.push((v, u, p));
        }
    }

    if ids.is_empty() {
        return Err(Error::Parse {
            line: 0,
            message: "edge list contains no edges".into(),
        });
    }
    if skipped_self_loops > 0 {
        log::warn!("skipped {skipped_self_loops} self-loop line(s)");
    }
    let explicit = with_prob.unwrap_or(false);
    let mut network = IcNetwork::build(ids, edges)?;
    network.set_has_probabilities(explicit);
    Ok(LoadedGraph {
        network,
        skipped_self_loops,
        explicit_probabilities: explicit,
    })
}

pub fn load_edge_list_file(path: impl AsRef<Path>, undirected: bool) -> Result<LoadedGraph> {
    let file = File::open(path)?;
    load_edge_list(BufReader::new(file), undirected)
}

/// Writes `<src> <dst> <prob>` lines in edge-id order.
pub fn write_edge_list<W: Write>(net: &IcNetwork, mut out: W) -> Result<()> {
    for e in net.edges() {
        writeln!(out, "{} {} {}", net.id(e.tail), net.id(e.head), e.prob)?;
    }
    Ok(())
}

/// Reads one node identifier per line and resolves it against `net`.
pub fn read_node_list<R: BufRead>(reader: R, net: &IcNetwork) -> Result<Vec<NodeId>> {
    let mut nodes = Vec::new();
    for (line_no, line) in content_lines(reader) {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let id = tokens.next().unwrap_or_default();
        if tokens.next().is_some() {
            return Err(Error::Parse {
                line: line_no,
                message: "expected one node identifier per line".into(),
            });
        }
        nodes.push(net.resolve(id)?);
    }
    Ok(nodes)
}

pub fn read_node_list_file(path: impl AsRef<Path>, net: &IcNetwork) -> Result<Vec<NodeId>> {
    let file = File::open(path)?;
    read_node_list(BufReader::new(file), net)
}

pub fn read_state_file(path: impl AsRef<Path>, net: &IcNetwork) -> Result<ActivationState> {
    let active = read_node_list_file(path, net)?;
    ActivationState::from_active(net.node_count(), active)
}

pub fn write_node_list<W: Write>(net: &IcNetwork, nodes: &[NodeId], mut out: W) -> Result<()> {
    for &u in nodes {
        writeln!(out, "{}", net.id(u))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn load(text: &str, undirected: bool) -> Result<LoadedGraph> {
        load_edge_list(text.as_bytes(), undirected)
    }

    fn id_edges(net: &IcNetwork) -> Vec<(String, String, f64)> {
        let mut v: Vec<_> = net
            .edges()
            .map(|e| (net.id(e.tail).to_string(), net.id(e.head).to_string(), e.prob))
            .collect();
        v.sort_by(|a, b| (&a.0, &a.1).cmp(&(&b.0, &b.1)));
        v
    }

    #[test]
    fn directed_lines() {
        let g = load("0 1\n1 2\n", false).unwrap();
        assert_eq!(g.network.node_count(), 3);
        assert_eq!(g.network.edge_count(), 2);
        assert!(g.network.find_edge(0, 1).is_some());
        assert!(g.network.find_edge(1, 2).is_some());
        assert!(!g.explicit_probabilities);
    }

    #[test]
    fn undirected_expansion_with_string_ids() {
        let g = load("a b\n", true).unwrap();
        assert_eq!(g.network.node_count(), 2);
        assert_eq!(g.network.id(0), "a");
        assert!(g.network.find_edge(0, 1).is_some());
        assert!(g.network.find_edge(1, 0).is_some());
    }

    #[test]
    fn duplicates_comments_and_crlf() {
        let g = load("# header\r\n0 1\r\n\r\n0 1\r\n", false).unwrap();
        assert_eq!(g.network.edge_count(), 1);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        match load("0 1\n0 1 2 3\n", false) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(load("0\n", false), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn self_loops_are_counted_and_skipped() {
        let g = load("0 0\n0 1\n", false).unwrap();
        assert_eq!(g.skipped_self_loops, 1);
        assert_eq!(g.network.edge_count(), 1);
    }

    #[test]
    fn probability_column() {
        let g = load("a b 0.25\nb c 1\n", false).unwrap();
        assert!(g.explicit_probabilities);
        assert_eq!(g.network.prob(0), 0.25);
        assert!(load("a b 0.25\nb c\n", false).is_err());
        assert!(load("a b 1.25\n", false).is_err());
    }

    #[test]
    fn node_list_resolution() {
        let g = load("x y\n", false).unwrap();
        let nodes = read_node_list("# c\ny\n".as_bytes(), &g.network).unwrap();
        assert_eq!(nodes, vec![1]);
        assert!(matches!(
            read_node_list("z\n".as_bytes(), &g.network),
            Err(Error::UnknownNode(_))
        ));
    }

    proptest! {
        #[test]
        fn edge_list_round_trip(
            raw in proptest::collection::vec((0usize..12, 0usize..12, 0.0f64..=1.0), 1..40)
        ) {
            let edges: Vec<_> = raw.into_iter().filter(|(u, v, _)| u != v).collect();
            prop_assume!(!edges.is_empty());
            let net = IcNetwork::new(12, edges).unwrap();
            let mut buf = Vec::new();
            write_edge_list(&net, &mut buf).unwrap();
            let back = load_edge_list(buf.as_slice(), false).unwrap().network;
            prop_assert_eq!(id_edges(&net), id_edges(&back));
        }
    }
}
