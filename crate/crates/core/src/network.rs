//! Node centrality indices and force-directed layout for partial-correlation
//! networks.
//!
//! Path-based indices treat `1 / |w_ij|` as the length of edge (i, j), so
//! strong partial correlations are short edges. Every index depends on
//! absolute weights only.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::glasso::PcorNetwork;
use crate::numeric::{mean_sd, replicate_rng};

/// Relative tolerance for treating two path lengths as equal.
const PATH_TIE: f64 = 1e-10;

/// How closeness handles nodes that cannot reach every other node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ClosenessMode {
    /// Closeness is 0 for any node with an unreachable target.
    #[default]
    ZeroIfDisconnected,
    /// Sum distances over reachable nodes only (0 for isolated nodes).
    Component,
}

/// Centrality index selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CentralityIndex {
    Strength,
    Closeness,
    Betweenness,
}

impl CentralityIndex {
    pub const ALL: [CentralityIndex; 3] =
        [CentralityIndex::Strength, CentralityIndex::Closeness, CentralityIndex::Betweenness];

    pub fn as_str(&self) -> &'static str {
        match self {
            CentralityIndex::Strength => "strength",
            CentralityIndex::Closeness => "closeness",
            CentralityIndex::Betweenness => "betweenness",
        }
    }
}

/// Raw and standardized centralities per node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentralityTable {
    pub strength: Vec<f64>,
    pub closeness: Vec<f64>,
    pub betweenness: Vec<f64>,
    pub z_strength: Vec<f64>,
    pub z_closeness: Vec<f64>,
    pub z_betweenness: Vec<f64>,
}

impl CentralityTable {
    pub fn index(&self, which: CentralityIndex) -> &[f64] {
        match which {
            CentralityIndex::Strength => &self.strength,
            CentralityIndex::Closeness => &self.closeness,
            CentralityIndex::Betweenness => &self.betweenness,
        }
    }
}

/// Node coordinates in [-1, 1]^2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    pub coords: Vec<(f64, f64)>,
    pub seed: u64,
}

/// Sum of absolute edge weights per node.
pub fn strength(net: &PcorNetwork) -> Vec<f64> {
    let p = net.dim();
    (0..p).map(|i| (0..p).map(|j| net.weight(i, j).abs()).sum()).collect()
}

fn adjacency(net: &PcorNetwork) -> Vec<Vec<(usize, f64)>> {
    let p = net.dim();
    (0..p)
        .map(|i| {
            (0..p)
                .filter(|&j| net.has_edge(i, j))
                .map(|j| (j, 1.0 / net.weight(i, j).abs()))
                .collect()
        })
        .collect()
}

#[derive(PartialEq)]
struct Entry {
    dist: f64,
    node: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.dist.total_cmp(&self.dist).then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn nearly_equal(a: f64, b: f64) -> bool {
    (a - b).abs() <= PATH_TIE * a.abs().max(b.abs())
}

/// Single-source shortest paths with path counts and predecessor lists.
struct ShortestPaths {
    dist: Vec<f64>,
    sigma: Vec<f64>,
    preds: Vec<Vec<usize>>,
    /// Nodes in order of non-decreasing distance.
    order: Vec<usize>,
}

fn dijkstra(adj: &[Vec<(usize, f64)>], source: usize) -> ShortestPaths {
    let p = adj.len();
    let mut dist = vec![f64::INFINITY; p];
    let mut sigma = vec![0.0; p];
    let mut preds = vec![Vec::new(); p];
    let mut done = vec![false; p];
    let mut order = Vec::with_capacity(p);
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    sigma[source] = 1.0;
    heap.push(Entry { dist: 0.0, node: source });
    while let Some(Entry { dist: d, node: v }) = heap.pop() {
        if done[v] || d > dist[v] {
            continue;
        }
        done[v] = true;
        order.push(v);
        for &(u, len) in &adj[v] {
            if done[u] {
                continue;
            }
            let alt = dist[v] + len;
            if dist[u].is_finite() && nearly_equal(alt, dist[u]) {
                sigma[u] += sigma[v];
                preds[u].push(v);
            } else if alt < dist[u] {
                dist[u] = alt;
                sigma[u] = sigma[v];
                preds[u] = vec![v];
                heap.push(Entry { dist: alt, node: u });
            }
        }
    }
    ShortestPaths { dist, sigma, preds, order }
}

/// Inverse of the summed shortest-path distances to every other node.
pub fn closeness(net: &PcorNetwork) -> Vec<f64> {
    closeness_with(net, ClosenessMode::ZeroIfDisconnected)
}

pub fn closeness_with(net: &PcorNetwork, mode: ClosenessMode) -> Vec<f64> {
    let adj = adjacency(net);
    (0..net.dim())
        .map(|i| {
            let sp = dijkstra(&adj, i);
            let others = sp.dist.iter().enumerate().filter(|&(j, _)| j != i);
            let total: f64 = match mode {
                ClosenessMode::ZeroIfDisconnected => {
                    if sp.dist.iter().any(|d| d.is_infinite()) {
                        return 0.0;
                    }
                    others.map(|(_, d)| d).sum()
                }
                ClosenessMode::Component => others.filter(|(_, d)| d.is_finite()).map(|(_, d)| d).sum(),
            };
            if total > 0.0 {
                1.0 / total
            } else {
                0.0
            }
        })
        .collect()
}

/// Weighted betweenness (Brandes). Each unordered pair {s, t} contributes
/// the fraction of its shortest paths passing through a node; equal-length
/// paths share credit.
pub fn betweenness(net: &PcorNetwork) -> Vec<f64> {
    let p = net.dim();
    let adj = adjacency(net);
    let mut bc = vec![0.0; p];
    for s in 0..p {
        let sp = dijkstra(&adj, s);
        let mut delta = vec![0.0; p];
        for &w in sp.order.iter().rev() {
            for &v in &sp.preds[w] {
                delta[v] += sp.sigma[v] / sp.sigma[w] * (1.0 + delta[w]);
            }
            if w != s {
                bc[w] += delta[w];
            }
        }
    }
    // Every unordered pair was counted from both endpoints.
    bc.iter().map(|b| b / 2.0).collect()
}

/// z-scores with the sample standard deviation; a constant vector maps to
/// all zeros.
pub fn standardize(values: &[f64]) -> Vec<f64> {
    if values.len() < 2 {
        return vec![0.0; values.len()];
    }
    let (mean, sd) = mean_sd(values);
    if !(sd > 1e-12 * mean.abs().max(1.0)) {
        return vec![0.0; values.len()];
    }
    values.iter().map(|v| (v - mean) / sd).collect()
}

/// All three indices with their z-scores.
pub fn centrality_table(net: &PcorNetwork) -> CentralityTable {
    let strength = strength(net);
    let closeness = closeness(net);
    let betweenness = betweenness(net);
    CentralityTable {
        z_strength: standardize(&strength),
        z_closeness: standardize(&closeness),
        z_betweenness: standardize(&betweenness),
        strength,
        closeness,
        betweenness,
    }
}

/// Weighted Fruchterman-Reingold layout, 500 iterations.
pub fn layout_fr(net: &PcorNetwork, seed: u64) -> Layout {
    layout_fr_iter(net, seed, 500)
}

/// Weighted Fruchterman-Reingold on the absolute weight matrix.
pub fn layout_fr_iter(net: &PcorNetwork, seed: u64, iterations: usize) -> Layout {
    let abs = net.weights().map(f64::abs);
    layout_weights(&abs, seed, iterations)
}

/// Layout for several networks at once, computed on the element-wise mean
/// of their absolute weight matrices so the networks can be drawn with the
/// same node placement.
pub fn average_layout(nets: &[PcorNetwork], seed: u64) -> Layout {
    let p = nets.first().map_or(0, |n| n.dim());
    let mut mean = DMatrix::zeros(p, p);
    for net in nets {
        mean += net.weights().map(f64::abs);
    }
    if !nets.is_empty() {
        mean /= nets.len() as f64;
    }
    layout_weights(&mean, seed, 500)
}

/// Repulsion k^2/d between every pair, attraction |w| d^2/k along edges,
/// displacement capped by a linearly cooling temperature.
fn layout_weights(abs_w: &DMatrix<f64>, seed: u64, iterations: usize) -> Layout {
    let p = abs_w.nrows();
    if p == 0 {
        return Layout { coords: Vec::new(), seed };
    }
    if p == 1 {
        return Layout { coords: vec![(0.0, 0.0)], seed };
    }
    let mut rng = replicate_rng(seed, 0);
    let mut pos: Vec<(f64, f64)> =
        (0..p).map(|_| (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    let area = 4.0;
    let k = (area / p as f64).sqrt();
    let t0 = 0.2;
    for it in 0..iterations {
        let temp = t0 * (1.0 - it as f64 / iterations as f64) + 1e-4;
        let mut disp = vec![(0.0, 0.0); p];
        for i in 0..p {
            for j in (i + 1)..p {
                let dx = pos[i].0 - pos[j].0;
                let dy = pos[i].1 - pos[j].1;
                let d = (dx * dx + dy * dy).sqrt().max(1e-9);
                let mut f = k * k / d;
                let w = abs_w[(i, j)];
                if w > 0.0 {
                    f -= w * d * d / k;
                }
                let (fx, fy) = (dx / d * f, dy / d * f);
                disp[i].0 += fx;
                disp[i].1 += fy;
                disp[j].0 -= fx;
                disp[j].1 -= fy;
            }
        }
        for i in 0..p {
            let (dx, dy) = disp[i];
            let len = (dx * dx + dy * dy).sqrt();
            if len > 0.0 {
                let step = len.min(temp);
                pos[i].0 += dx / len * step;
                pos[i].1 += dy / len * step;
            }
        }
    }
    Layout { coords: normalize(&pos), seed }
}

/// Rescales each axis to span [-1, 1] (a degenerate axis maps to 0).
fn normalize(pos: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let span = |vals: Vec<f64>| {
        let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    };
    let (x0, x1) = span(pos.iter().map(|p| p.0).collect());
    let (y0, y1) = span(pos.iter().map(|p| p.1).collect());
    let scale = |v: f64, lo: f64, hi: f64| {
        if hi - lo > 1e-12 {
            2.0 * (v - lo) / (hi - lo) - 1.0
        } else {
            0.0
        }
    };
    pos.iter().map(|&(x, y)| (scale(x, x0, x1), scale(y, y0, y1))).collect()
}
