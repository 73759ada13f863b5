//! Scale-free interaction network.
//!
//! Agents only interact along edges of a [`SocialNetwork`]. Networks are
//! grown with Barabási-Albert preferential attachment from a complete core of
//! `m + 1` nodes and are immutable afterwards, so one instance can be shared by
//! every Monte Carlo replicate of a calibration task.

use std::collections::VecDeque;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SocialNetwork {
    adjacency: Vec<Vec<usize>>,
    edges: Vec<(usize, usize)>,
}

impl SocialNetwork {
    /// Builds a network over `n` nodes from undirected pairs.
    ///
    /// Pairs may come in either orientation and any order; self-loops,
    /// duplicates and out-of-range endpoints are rejected.
    pub fn from_edges(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut edges = Vec::new();
        for (a, b) in pairs {
            if a == b {
                return Err(Error::InvalidParameter(format!("self-loop on node {a}")));
            }
            if a >= n || b >= n {
                return Err(Error::InvalidParameter(format!(
                    "edge ({a}, {b}) references a node outside 0..{n}"
                )));
            }
            edges.push((a.min(b), a.max(b)));
        }
        edges.sort_unstable();
        if let Some(w) = edges.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidParameter(format!("duplicate edge ({}, {})", w[0].0, w[0].1)));
        }

        let mut adjacency = vec![Vec::new(); n];
        for &(i, j) in &edges {
            adjacency[i].push(j);
            adjacency[j].push(i);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Ok(Self { adjacency, edges })
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Undirected edges `(i, j)` with `i < j`, in ascending order.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.adjacency[node]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.adjacency[node].len()
    }

    pub fn degrees(&self) -> impl Iterator<Item = usize> + '_ {
        self.adjacency.iter().map(Vec::len)
    }

    pub fn mean_degree(&self) -> f64 {
        if self.adjacency.is_empty() {
            return 0.0;
        }
        2.0 * self.edges.len() as f64 / self.adjacency.len() as f64
    }

    pub fn max_degree(&self) -> usize {
        self.degrees().max().unwrap_or(0)
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency.get(i).is_some_and(|list| list.binary_search(&j).is_ok())
    }

    pub fn is_connected(&self) -> bool {
        let n = self.node_count();
        if n == 0 {
            return true;
        }
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut reached = 1;
        while let Some(v) = queue.pop_front() {
            for &u in &self.adjacency[v] {
                if !seen[u] {
                    seen[u] = true;
                    reached += 1;
                    queue.push_back(u);
                }
            }
        }
        reached == n
    }

    /// Draws a uniformly random edge; a fair coin decides which endpoint is
    /// returned first.
    pub fn random_edge<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(usize, usize)> {
        if self.edges.is_empty() {
            return Err(Error::InvalidState("network has no edges".into()));
        }
        Ok(self.random_edge_unchecked(rng))
    }

    #[inline]
    pub(crate) fn random_edge_unchecked<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, usize) {
        let (i, j) = self.edges[rng.random_range(0..self.edges.len())];
        if rng.random::<bool>() {
            (j, i)
        } else {
            (i, j)
        }
    }

    /// Writes one `i j` pair per line, 0-indexed, ascending.
    pub fn write_edge_list(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = BufWriter::new(fs::File::create(path)?);
        for &(i, j) in &self.edges {
            writeln!(out, "{i} {j}")?;
        }
        out.flush()?;
        Ok(())
    }

    /// Reads an edge list written by [`write_edge_list`](Self::write_edge_list).
    /// Blank lines and `#` comments are skipped.
    pub fn read_edge_list(path: impl AsRef<Path>, n: usize) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        let mut pairs = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split_whitespace().map(str::parse::<usize>);
            match (fields.next(), fields.next(), fields.next()) {
                (Some(Ok(a)), Some(Ok(b)), None) => pairs.push((a, b)),
                _ => {
                    return Err(Error::parse(
                        path,
                        idx as u64 + 1,
                        format!("expected two node indices, got {line:?}"),
                    ))
                }
            }
        }
        Self::from_edges(n, pairs)
    }
}

/// Grows a Barabási-Albert network over `n` nodes where every node after the
/// complete core on `m + 1` nodes attaches `m` edges.
///
/// Targets are drawn from an urn holding every edge endpoint, which makes the
/// draw degree-proportional; repeats within one node's round are redrawn.
pub fn generate_ba(n: usize, m: usize, seed: u64) -> Result<SocialNetwork> {
    if m == 0 {
        return Err(Error::InvalidParameter("edges per new node must be at least 1".into()));
    }
    if n <= m {
        return Err(Error::InvalidParameter(format!("node count {n} must exceed edges per new node {m}")));
    }
    let mut rng = rng::stream(seed);
    let core = m + 1;
    let mut edges = Vec::with_capacity(core * m / 2 + (n - core) * m);
    let mut urn = Vec::with_capacity(2 * edges.capacity());
    for i in 0..core {
        for j in (i + 1)..core {
            edges.push((i, j));
            urn.push(i);
            urn.push(j);
        }
    }

    let mut targets = Vec::with_capacity(m);
    for v in core..n {
        targets.clear();
        while targets.len() < m {
            let t = urn[rng.random_range(0..urn.len())];
            if !targets.contains(&t) {
                targets.push(t);
            }
        }
        for &t in &targets {
            edges.push((t, v));
            urn.push(t);
            urn.push(v);
        }
    }
    SocialNetwork::from_edges(n, edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_structure(net: &SocialNetwork) {
        let mut degree_sum = 0;
        for i in 0..net.node_count() {
            degree_sum += net.degree(i);
            for &j in net.neighbors(i) {
                assert_ne!(i, j);
                assert!(net.has_edge(j, i));
            }
            assert!(net.neighbors(i).windows(2).all(|w| w[0] < w[1]));
        }
        assert_eq!(degree_sum, 2 * net.edge_count());
        assert!(net.is_connected());
    }

    #[test]
    fn minimal_network_is_complete_core() {
        let net = generate_ba(4, 3, 11).unwrap();
        assert_eq!(net.edge_count(), 6);
        assert!(net.degrees().all(|d| d == 3));
        check_structure(&net);
    }

    #[test]
    fn paper_scale_network_has_mean_degree_six() {
        let net = generate_ba(3961, 3, 2023).unwrap();
        check_structure(&net);
        assert_eq!(net.edge_count(), 3 * (3961 - 4) + 6);
        let mean = net.mean_degree();
        assert!((5.9..=6.0).contains(&mean), "mean degree {mean}");
    }

    #[test]
    fn rejects_degenerate_parameters() {
        assert!(matches!(generate_ba(3, 3, 0), Err(Error::InvalidParameter(_))));
        assert!(matches!(generate_ba(10, 0, 0), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn generation_is_deterministic() {
        assert_eq!(generate_ba(300, 3, 5).unwrap(), generate_ba(300, 3, 5).unwrap());
        assert_ne!(generate_ba(300, 3, 5).unwrap(), generate_ba(300, 3, 6).unwrap());
    }

    #[test]
    fn hubs_emerge() {
        let hubbed = (0..100)
            .filter(|&seed| {
                let net = generate_ba(1000, 3, seed).unwrap();
                net.max_degree() as f64 >= 5.0 * net.mean_degree()
            })
            .count();
        assert!(hubbed >= 95, "{hubbed}/100 seeds produced a hub");
    }

    #[test]
    fn single_edge_orientation_is_fair() {
        let net = SocialNetwork::from_edges(2, [(0, 1)]).unwrap();
        let mut rng = rng::stream(3);
        let draws = 20_000;
        let forward = (0..draws).filter(|_| net.random_edge(&mut rng).unwrap() == (0, 1)).count();
        let share = forward as f64 / draws as f64;
        assert!((share - 0.5).abs() < 0.02, "share {share}");
    }

    #[test]
    fn path_graph_edges_are_uniform() {
        let net = SocialNetwork::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        let mut rng = rng::stream(4);
        let draws = 100_000;
        let mut first = 0usize;
        for _ in 0..draws {
            let (i, j) = net.random_edge(&mut rng).unwrap();
            if (i.min(j), i.max(j)) == (0, 1) {
                first += 1;
            }
        }
        // chi-square with one degree of freedom, 0.999 quantile 10.83
        let expected = draws as f64 / 2.0;
        let other = (draws - first) as f64;
        let chi2 = (first as f64 - expected).powi(2) / expected + (other - expected).powi(2) / expected;
        assert!(chi2 < 10.83, "chi2 {chi2}");
        assert!((first as f64 / draws as f64 - 0.5).abs() < 0.02);
    }

    #[test]
    fn every_edge_is_eventually_drawn() {
        let net = generate_ba(100, 3, 9).unwrap();
        let mut hit = vec![false; net.edge_count()];
        let mut rng = rng::stream(10);
        for _ in 0..1_000_000 {
            let (i, j) = net.random_edge(&mut rng).unwrap();
            let key = (i.min(j), i.max(j));
            hit[net.edges().binary_search(&key).unwrap()] = true;
        }
        assert!(hit.iter().all(|&h| h));
    }

    #[test]
    fn empty_network_has_no_random_edge() {
        let net = SocialNetwork::from_edges(3, []).unwrap();
        let mut rng = rng::stream(0);
        assert!(matches!(net.random_edge(&mut rng), Err(Error::InvalidState(_))));
    }

    #[test]
    fn from_edges_rejects_bad_pairs() {
        assert!(SocialNetwork::from_edges(3, [(1, 1)]).is_err());
        assert!(SocialNetwork::from_edges(3, [(0, 1), (1, 0)]).is_err());
        assert!(SocialNetwork::from_edges(3, [(0, 3)]).is_err());
    }

    #[test]
    fn edge_list_file_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.txt");
        let net = generate_ba(50, 3, 1).unwrap();
        net.write_edge_list(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("0 1\n0 2\n"));
        assert_eq!(SocialNetwork::read_edge_list(&path, 50).unwrap(), net);

        std::fs::write(&path, "0 1\n1 x\n").unwrap();
        let err = SocialNetwork::read_edge_list(&path, 50).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }
}
