use std::collections::{BTreeMap, BTreeSet, VecDeque};

use chrono::{DateTime, Duration, Utc};
use num_traits::Num;
use serde::{Deserialize, Serialize};

use super::SignalError;
use crate::corpus::Corpus;

/// Inclusive time range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
}

impl Window {
    pub fn contains(&self, t: DateTime<Utc>) -> bool {
        self.start <= t && t <= self.end
    }
}

/// Undirected interaction graph. Nodes are indexed in user-id order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InteractionGraph {
    nodes: Vec<String>,
    index: BTreeMap<String, usize>,
    adj: Vec<BTreeMap<usize, u32>>,
}

impl InteractionGraph {
    /// Build from node ids and undirected weighted edges. Self-loops are
    /// dropped; repeated edges add up.
    pub fn from_edges<S: AsRef<str>>(nodes: impl IntoIterator<Item = S>, edges: impl IntoIterator<Item = (S, S, u32)>) -> Self {
        let mut ids: BTreeSet<String> = nodes.into_iter().map(|s| s.as_ref().to_string()).collect();
        let edges: Vec<(String, String, u32)> = edges
            .into_iter()
            .map(|(a, b, w)| (a.as_ref().to_string(), b.as_ref().to_string(), w))
            .collect();
        for (a, b, _) in &edges {
            ids.insert(a.clone());
            ids.insert(b.clone());
        }
        let nodes: Vec<String> = ids.into_iter().collect();
        let index: BTreeMap<String, usize> = nodes.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        let mut adj = vec![BTreeMap::new(); nodes.len()];
        for (a, b, w) in edges {
            if a == b || w == 0 {
                continue;
            }
            let (i, j) = (index[&a], index[&b]);
            *adj[i].entry(j).or_insert(0) += w;
            *adj[j].entry(i).or_insert(0) += w;
        }
        Self { nodes, index, adj }
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(BTreeMap::len).sum::<usize>() / 2
    }

    pub fn weight(&self, a: &str, b: &str) -> u32 {
        match (self.index.get(a), self.index.get(b)) {
            (Some(&i), Some(&j)) => self.adj[i].get(&j).copied().unwrap_or(0),
            _ => 0,
        }
    }

    /// Edges `(a, b, weight)` with `a < b`.
    pub fn edges(&self) -> impl Iterator<Item = (&str, &str, u32)> {
        self.adj.iter().enumerate().flat_map(move |(i, nbrs)| {
            nbrs.iter()
                .filter(move |(&j, _)| j > i)
                .map(move |(&j, &w)| (self.nodes[i].as_str(), self.nodes[j].as_str(), w))
        })
    }

    /// Neighbor lists by node index.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        self.adj.iter().map(|m| m.keys().copied().collect()).collect()
    }
}

/// Interactions in `window` (the whole corpus when `None`). Nodes are the
/// authors active in the window plus everyone they interact with.
pub fn build_interaction_graph(corpus: &Corpus, window: Option<Window>) -> InteractionGraph {
    let mut nodes = BTreeSet::new();
    let mut edges = Vec::new();
    for t in corpus.tweets() {
        if window.is_some_and(|w| !w.contains(t.ts)) {
            continue;
        }
        nodes.insert(t.user_id.as_str());
        for target in corpus.interaction_targets(t) {
            edges.push((t.user_id.as_str(), target, 1));
        }
    }
    InteractionGraph::from_edges(nodes, edges)
}

/// Number of distinct neighbors per node.
pub fn degree_centrality(graph: &InteractionGraph) -> BTreeMap<String, usize> {
    graph
        .nodes
        .iter()
        .zip(&graph.adj)
        .map(|(n, nbrs)| (n.clone(), nbrs.len()))
        .collect()
}

/// Unnormalized betweenness over unweighted shortest paths, each unordered
/// pair counted once. Generic so tests can run it in exact arithmetic.
pub fn brandes<T: Num + Clone>(adj: &[Vec<usize>]) -> Vec<T> {
    let n = adj.len();
    let mut cb = vec![T::zero(); n];
    let mut stack = Vec::with_capacity(n);
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut sigma: Vec<T> = vec![T::zero(); n];
    let mut dist: Vec<Option<usize>> = vec![None; n];
    let mut delta: Vec<T> = vec![T::zero(); n];
    let mut queue = VecDeque::new();
    for s in 0..n {
        stack.clear();
        for v in 0..n {
            preds[v].clear();
            sigma[v] = T::zero();
            dist[v] = None;
            delta[v] = T::zero();
        }
        sigma[s] = T::one();
        dist[s] = Some(0);
        queue.push_back(s);
        while let Some(v) = queue.pop_front() {
            stack.push(v);
            let dv = dist[v].expect("queued nodes have a distance");
            for &w in &adj[v] {
                if dist[w].is_none() {
                    dist[w] = Some(dv + 1);
                    queue.push_back(w);
                }
                if dist[w] == Some(dv + 1) {
                    sigma[w] = sigma[w].clone() + sigma[v].clone();
                    preds[w].push(v);
                }
            }
        }
        while let Some(w) = stack.pop() {
            for &v in &preds[w] {
                let share = sigma[v].clone() / sigma[w].clone() * (T::one() + delta[w].clone());
                delta[v] = delta[v].clone() + share;
            }
            if w != s {
                cb[w] = cb[w].clone() + delta[w].clone();
            }
        }
    }
    let two = T::one() + T::one();
    cb.into_iter().map(|x| x / two.clone()).collect()
}

pub fn betweenness_centrality(graph: &InteractionGraph) -> BTreeMap<String, f64> {
    let scores = brandes::<f64>(&graph.adjacency());
    graph.nodes.iter().cloned().zip(scores).collect()
}

/// Sliding windows `[start + i·step, start + i·step + len]` covering
/// `[first, last]`. A span no longer than `len` gives one window equal to
/// the span.
pub fn sliding_windows(first: DateTime<Utc>, last: DateTime<Utc>, len: Duration, step: Duration) -> Vec<Window> {
    let span = last - first;
    if span <= len {
        return vec![Window { start: first, end: last }];
    }
    let extra = (span - len).num_milliseconds();
    let step_ms = step.num_milliseconds();
    let count = (extra + step_ms - 1) / step_ms + 1;
    (0..count)
        .map(|i| {
            let start = first + Duration::milliseconds(i * step_ms);
            Window { start, end: start + len }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetweennessSeries {
    pub windows: Vec<Window>,
    /// One value per window for every user in the corpus.
    pub series: BTreeMap<String, Vec<f64>>,
}

/// Per-window betweenness for every corpus user (0 where absent). Windows
/// are computed on scoped threads; each is independent, so the result does
/// not depend on scheduling.
pub fn betweenness_series(
    corpus: &Corpus,
    window_len: Duration,
    step: Duration,
) -> Result<BetweennessSeries, SignalError> {
    if step <= Duration::zero() || window_len < step {
        return Err(SignalError::InvalidWindow(format!(
            "window {window_len} and step {step} must satisfy window >= step > 0"
        )));
    }
    let (first, last) = corpus.time_span();
    let windows = sliding_windows(first, last, window_len, step);
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    let chunk = windows.len().div_ceil(threads).max(1);
    let per_window: Vec<BTreeMap<String, f64>> = std::thread::scope(|s| {
        let handles: Vec<_> = windows
            .chunks(chunk)
            .map(|part| {
                s.spawn(move || {
                    part.iter()
                        .map(|w| betweenness_centrality(&build_interaction_graph(corpus, Some(*w))))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("window worker panicked"))
            .collect()
    });
    let users = build_interaction_graph(corpus, None).nodes;
    let series = users
        .into_iter()
        .map(|u| {
            let values = per_window.iter().map(|m| m.get(&u).copied().unwrap_or(0.0)).collect();
            (u, values)
        })
        .collect();
    Ok(BetweennessSeries { windows, series })
}
