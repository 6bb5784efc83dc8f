//! Static network graphs: construction, hop distances and diameter.

use std::collections::{BTreeSet, VecDeque};
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type NodeId = usize;

fn default_attempts() -> u32 {
    100
}

/// Declarative description of a graph, as it appears in run configurations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TopologySpec {
    Chain {
        n: usize,
    },
    Ring {
        n: usize,
    },
    Grid {
        rows: usize,
        cols: usize,
    },
    /// Nodes uniform in the unit square, linked when closer than `radius`.
    RandomGeometric {
        n: usize,
        radius: f64,
        seed: u64,
        #[serde(default = "default_attempts")]
        max_attempts: u32,
    },
    /// Plain-text file with one `u v` pair per line.
    EdgeList {
        path: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n: Option<usize>,
    },
    Edges {
        n: usize,
        edges: Vec<(NodeId, NodeId)>,
    },
}

impl TopologySpec {
    pub fn build(&self) -> Result<Topology> {
        match *self {
            TopologySpec::Chain { n } => Topology::chain(n),
            TopologySpec::Ring { n } => Topology::ring(n),
            TopologySpec::Grid { rows, cols } => Topology::grid(rows, cols),
            TopologySpec::RandomGeometric {
                n,
                radius,
                seed,
                max_attempts,
            } => Topology::random_geometric(n, radius, seed, max_attempts),
            TopologySpec::EdgeList { ref path, n } => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
                let edges = parse_edge_list(&text)?;
                let n = n
                    .unwrap_or_else(|| edges.iter().map(|&(u, v)| u.max(v) + 1).max().unwrap_or(0));
                Topology::from_edges(n, &edges)
            }
            TopologySpec::Edges { n, ref edges } => Topology::from_edges(n, edges),
        }
    }
}

/// A connected undirected graph over dense node ids `0..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    adjacency: Vec<Vec<NodeId>>,
    distances: Vec<u32>,
    diameter: u32,
}

impl Topology {
    pub fn from_edges(n: usize, edges: &[(NodeId, NodeId)]) -> Result<Self> {
        if n < 2 {
            return Err(Error::TooFewNodes(n));
        }
        let mut sets = vec![BTreeSet::new(); n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidEdge(u, v, "node id out of range"));
            }
            if u == v {
                return Err(Error::InvalidEdge(u, v, "self-loop"));
            }
            sets[u].insert(v);
            sets[v].insert(u);
        }
        let adjacency: Vec<Vec<NodeId>> =
            sets.into_iter().map(|s| s.into_iter().collect()).collect();
        let rows = all_pairs_distances(&adjacency)?;
        let diameter = rows.iter().flatten().copied().max().unwrap_or(0);
        Ok(Topology {
            adjacency,
            distances: rows.into_iter().flatten().collect(),
            diameter,
        })
    }

    pub fn chain(n: usize) -> Result<Self> {
        let edges: Vec<_> = (1..n.max(1)).map(|i| (i - 1, i)).collect();
        Self::from_edges(n, &edges)
    }

    pub fn ring(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::TooFewNodes(n));
        }
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Self::from_edges(n, &edges)
    }

    pub fn grid(rows: usize, cols: usize) -> Result<Self> {
        let id = |r: usize, c: usize| r * cols + c;
        let mut edges = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                if c + 1 < cols {
                    edges.push((id(r, c), id(r, c + 1)));
                }
                if r + 1 < rows {
                    edges.push((id(r, c), id(r + 1, c)));
                }
            }
        }
        Self::from_edges(rows * cols, &edges)
    }

    pub fn complete(n: usize) -> Result<Self> {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                edges.push((u, v));
            }
        }
        Self::from_edges(n, &edges)
    }

    /// Draws node positions until the disk graph is connected, giving up after
    /// `max_attempts` draws.
    pub fn random_geometric(n: usize, radius: f64, seed: u64, max_attempts: u32) -> Result<Self> {
        if n < 2 {
            return Err(Error::TooFewNodes(n));
        }
        if !(radius > 0.0) {
            return Err(Error::NonPositive("radius", radius));
        }
        let r2 = radius * radius;
        for attempt in 0..max_attempts {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(u64::from(attempt));
            let pts: Vec<(f64, f64)> = (0..n).map(|_| (rng.gen(), rng.gen())).collect();
            let mut edges = Vec::new();
            for u in 0..n {
                for v in u + 1..n {
                    let (dx, dy) = (pts[u].0 - pts[v].0, pts[u].1 - pts[v].1);
                    if dx * dx + dy * dy <= r2 {
                        edges.push((u, v));
                    }
                }
            }
            match Self::from_edges(n, &edges) {
                Ok(t) => return Ok(t),
                Err(Error::Disconnected(..)) => continue,
                Err(e) => return Err(e),
            }
        }
        Err(Error::GeneratorExhausted(max_attempts))
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn neighbors(&self, i: NodeId) -> &[NodeId] {
        &self.adjacency[i]
    }

    pub fn adjacency(&self) -> &[Vec<NodeId>] {
        &self.adjacency
    }

    pub fn distance(&self, i: NodeId, j: NodeId) -> u32 {
        self.distances[i * self.node_count() + j]
    }

    pub fn diameter(&self) -> u32 {
        self.diameter
    }

    pub fn is_edge(&self, i: NodeId, j: NodeId) -> bool {
        self.adjacency[i].binary_search(&j).is_ok()
    }

    /// Undirected edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> Vec<(NodeId, NodeId)> {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(u, ns)| ns.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
            .collect()
    }

    /// Directed edges `(from, to)`, both orientations, in lexicographic order.
    pub fn directed_edges(&self) -> Vec<(NodeId, NodeId)> {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(u, ns)| ns.iter().map(move |&v| (u, v)))
            .collect()
    }
}

/// Breadth-first hop counts between every pair of nodes.
pub fn all_pairs_distances(adjacency: &[Vec<NodeId>]) -> Result<Vec<Vec<u32>>> {
    let n = adjacency.len();
    let mut rows = Vec::with_capacity(n);
    let mut queue = VecDeque::new();
    for src in 0..n {
        let mut dist = vec![u32::MAX; n];
        dist[src] = 0;
        queue.clear();
        queue.push_back(src);
        while let Some(u) = queue.pop_front() {
            for &v in &adjacency[u] {
                if dist[v] == u32::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        if let Some(dst) = dist.iter().position(|&d| d == u32::MAX) {
            return Err(Error::Disconnected(src.min(dst), src.max(dst)));
        }
        rows.push(dist);
    }
    Ok(rows)
}

/// Parses `u v` lines. Blank lines and `#` comments are skipped.
pub fn parse_edge_list(text: &str) -> Result<Vec<(NodeId, NodeId)>> {
    let mut edges = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |reason: String| Error::EdgeListParse {
            line: idx + 1,
            reason,
        };
        let mut parts = line.split_whitespace();
        let mut next = || -> Result<NodeId> {
            let tok = parts
                .next()
                .ok_or_else(|| err("expected two node ids".into()))?;
            tok.parse().map_err(|_| err(format!("bad node id {tok:?}")))
        };
        let (u, v) = (next()?, next()?);
        if parts.next().is_some() {
            return Err(err("trailing tokens".into()));
        }
        edges.push((u, v));
    }
    Ok(edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Floyd-Warshall over the adjacency, independent of the BFS path.
    fn floyd_warshall(adj: &[Vec<NodeId>]) -> Vec<Vec<u64>> {
        let n = adj.len();
        let inf = u64::MAX / 4;
        let mut d = vec![vec![inf; n]; n];
        for i in 0..n {
            d[i][i] = 0;
            for &j in &adj[i] {
                d[i][j] = 1;
            }
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if d[i][k] + d[k][j] < d[i][j] {
                        d[i][j] = d[i][k] + d[k][j];
                    }
                }
            }
        }
        d
    }

    fn shortest_simple_path(adj: &[Vec<NodeId>], from: NodeId, to: NodeId) -> usize {
        fn dfs(
            adj: &[Vec<NodeId>],
            at: NodeId,
            to: NodeId,
            seen: &mut Vec<bool>,
            len: usize,
            best: &mut usize,
        ) {
            if at == to {
                *best = (*best).min(len);
                return;
            }
            for &nx in &adj[at] {
                if !seen[nx] {
                    seen[nx] = true;
                    dfs(adj, nx, to, seen, len + 1, best);
                    seen[nx] = false;
                }
            }
        }
        let mut seen = vec![false; adj.len()];
        seen[from] = true;
        let mut best = usize::MAX;
        dfs(adj, from, to, &mut seen, 0, &mut best);
        best
    }

    #[test]
    fn chain_and_ring_diameters() {
        let c = Topology::chain(5).unwrap();
        assert_eq!(c.diameter(), 4);
        assert_eq!(c.distance(0, 4), 4);
        assert_eq!(Topology::chain(3).unwrap().distance(0, 2), 2);
        assert_eq!(Topology::ring(6).unwrap().diameter(), 3);
        for k in 2..40 {
            assert_eq!(Topology::chain(k).unwrap().diameter() as usize, k - 1);
        }
    }

    #[test]
    fn grid_corners() {
        let g = Topology::grid(3, 3).unwrap();
        assert_eq!(g.diameter(), 4);
        assert_eq!(g.distance(0, 8), 4);
        assert_eq!(shortest_simple_path(g.adjacency(), 0, 8), 4);
    }

    #[test]
    fn complete_graph_is_all_ones() {
        let k4 = Topology::complete(4).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(k4.distance(i, j), u32::from(i != j));
            }
        }
        assert_eq!(k4.diameter(), 1);
    }

    #[test]
    fn rejects_bad_graphs() {
        assert_eq!(Topology::chain(1), Err(Error::TooFewNodes(1)));
        assert_eq!(
            Topology::from_edges(4, &[(0, 1), (2, 3)]),
            Err(Error::Disconnected(0, 2))
        );
        assert!(matches!(
            Topology::from_edges(3, &[(0, 1), (1, 1)]),
            Err(Error::InvalidEdge(1, 1, _))
        ));
        assert!(matches!(
            Topology::from_edges(3, &[(0, 7)]),
            Err(Error::InvalidEdge(0, 7, _))
        ));
        let adj = vec![vec![1], vec![0], vec![]];
        assert_eq!(all_pairs_distances(&adj), Err(Error::Disconnected(0, 2)));
    }

    #[test]
    fn random_geometric_is_connected_and_reproducible() {
        let a = Topology::random_geometric(50, 0.3, 11, 100).unwrap();
        let b = Topology::random_geometric(50, 0.3, 11, 100).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.node_count(), 50);
        assert_eq!(
            Topology::random_geometric(30, 0.01, 1, 3),
            Err(Error::GeneratorExhausted(3))
        );
    }

    #[test]
    fn edge_list_parsing() {
        let text = "# path\n0 1\n1 2\n\n2 3 # tail\n";
        let edges = parse_edge_list(text).unwrap();
        assert_eq!(edges, vec![(0, 1), (1, 2), (2, 3)]);
        let t = Topology::from_edges(4, &edges).unwrap();
        assert_eq!(t.diameter(), 3);
        assert!(matches!(
            parse_edge_list("0 1\n0 x\n"),
            Err(Error::EdgeListParse { line: 2, .. })
        ));
        assert!(parse_edge_list("0\n").is_err());
    }

    #[test]
    fn edge_list_spec_reads_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.txt");
        std::fs::write(&path, "0 1\n1 2\n2 0\n").unwrap();
        let t = TopologySpec::EdgeList { path, n: None }.build().unwrap();
        assert_eq!(t.node_count(), 3);
        assert_eq!(t.diameter(), 1);
    }

    #[test]
    fn bfs_matches_floyd_warshall_on_generated_graphs() {
        let mut graphs = vec![
            Topology::chain(17).unwrap(),
            Topology::ring(16).unwrap(),
            Topology::grid(5, 5).unwrap(),
            Topology::grid(2, 7).unwrap(),
        ];
        for seed in 0..10 {
            graphs.push(Topology::random_geometric(30, 0.35, seed, 200).unwrap());
        }
        for g in graphs {
            let fw = floyd_warshall(g.adjacency());
            let n = g.node_count();
            for i in 0..n {
                for j in 0..n {
                    assert_eq!(u64::from(g.distance(i, j)), fw[i][j]);
                    assert_eq!(g.distance(i, j), g.distance(j, i));
                }
            }
            assert_eq!(
                u64::from(g.diameter()),
                fw.iter().flatten().copied().max().unwrap()
            );
        }
    }
}
