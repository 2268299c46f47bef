//! Test inputs and independent oracles shared by the integration tests.
#![allow(dead_code)]

pub mod literal;

use std::collections::BTreeMap;

use supplyshock::graph::{build_network, Built};
use supplyshock::Direction;

/// Small deterministic generator for test inputs.
pub struct TestRng(u64);

impl TestRng {
    pub fn new(seed: u64) -> Self {
        TestRng(seed ^ 0x5DEE_CE66_D1CE_4E5B)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    pub fn f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }
}

/// Random directed graph on `n` nodes without self-loops or parallel edges.
pub fn random_edges(rng: &mut TestRng, n: usize, p: f64) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for s in 0..n {
        for t in 0..n {
            if s != t && rng.f64() < p {
                edges.push((s, t));
            }
        }
    }
    edges
}

/// Random DAG: edges only go from lower to higher index.
pub fn random_dag(rng: &mut TestRng, n: usize, p: f64) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for s in 0..n {
        for t in s + 1..n {
            if rng.f64() < p {
                edges.push((s, t));
            }
        }
    }
    edges
}

/// Firm id whose lexicographic order matches the numeric order.
pub fn fid(i: usize) -> String {
    format!("n{i:05}")
}

/// Builds a network from index edges. Firms without edges are dropped, so
/// network indices are those produced by [`compact`].
pub fn build_indexed(edges: &[(usize, usize)], labels: &[String]) -> Built {
    let firms: BTreeMap<String, String> = labels
        .iter()
        .enumerate()
        .map(|(i, l)| (fid(i), l.clone()))
        .collect();
    let named: Vec<(String, String)> = edges.iter().map(|&(s, t)| (fid(s), fid(t))).collect();
    build_network(&named, &firms).expect("valid test graph")
}

/// Drops nodes without edges and renumbers the rest in order.
pub fn compact(n: usize, edges: &[(usize, usize)]) -> (usize, Vec<(usize, usize)>, Vec<usize>) {
    let mut used = vec![false; n];
    for &(s, t) in edges {
        used[s] = true;
        used[t] = true;
    }
    let kept: Vec<usize> = (0..n).filter(|&i| used[i]).collect();
    let mut new_index = vec![usize::MAX; n];
    for (k, &i) in kept.iter().enumerate() {
        new_index[i] = k;
    }
    let edges = edges
        .iter()
        .map(|&(s, t)| (new_index[s], new_index[t]))
        .collect();
    (kept.len(), edges, kept)
}

/// `E^cd` straight from the definitions: dense distress rows from the
/// literal cascade, degree sizes, per-firm regional shares averaged over
/// the firms of each origin region.
pub fn naive_exposure(
    n: usize,
    edges: &[(usize, usize)],
    region_of: &[usize],
    n_regions: usize,
    direction: Direction,
) -> Vec<Vec<f64>> {
    let mut k = vec![0.0; n];
    for &(s, t) in edges {
        k[s] += 1.0;
        k[t] += 1.0;
    }
    let mut q_region = vec![0.0; n_regions];
    let mut count = vec![0usize; n_regions];
    for i in 0..n {
        q_region[region_of[i]] += k[i];
        count[region_of[i]] += 1;
    }
    let mut e = vec![vec![0.0; n_regions]; n_regions];
    for i in 0..n {
        let (h, _) = literal::cascade(n, edges, &[i], direction);
        let mut lost = vec![0.0; n_regions];
        for j in 0..n {
            lost[region_of[j]] += h[j] * k[j];
        }
        for d in 0..n_regions {
            e[region_of[i]][d] += lost[d] / q_region[d];
        }
    }
    for (c, row) in e.iter_mut().enumerate() {
        for v in row.iter_mut() {
            *v /= count[c] as f64;
        }
    }
    e
}

/// Gini of the population-expanded per-head values: the mean absolute
/// difference over all ordered pairs of people divided by twice the mean.
pub fn pairwise_gini(values: &[f64], populations: &[u32]) -> f64 {
    let mut people = Vec::new();
    for (v, &p) in values.iter().zip(populations) {
        for _ in 0..p {
            people.push(v / p as f64);
        }
    }
    let n = people.len() as f64;
    let mean = people.iter().sum::<f64>() / n;
    let mut total = 0.0;
    for a in &people {
        for b in &people {
            total += (a - b).abs();
        }
    }
    total / (2.0 * n * n * mean)
}

/// Least squares by the normal equations `(X'X) b = X'y`, solved with
/// Gauss-Jordan elimination and partial pivoting. `x` holds columns and
/// gets an intercept column prepended. Returns estimates and standard
/// errors.
pub fn normal_equations(y: &[f64], x: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let n = y.len();
    let mut cols = vec![vec![1.0; n]];
    cols.extend(x.iter().cloned());
    let p = cols.len();
    let mut xtx = vec![vec![0.0; p]; p];
    let mut xty = vec![0.0; p];
    for a in 0..p {
        for b in 0..p {
            xtx[a][b] = (0..n).map(|i| cols[a][i] * cols[b][i]).sum();
        }
        xty[a] = (0..n).map(|i| cols[a][i] * y[i]).sum();
    }
    // Augment with identity to get the inverse along the way.
    let mut m: Vec<Vec<f64>> = (0..p)
        .map(|r| {
            let mut row = xtx[r].clone();
            row.extend((0..p).map(|c| if c == r { 1.0 } else { 0.0 }));
            row.push(xty[r]);
            row
        })
        .collect();
    for col in 0..p {
        let pivot = (col..p)
            .max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
            .unwrap();
        m.swap(col, pivot);
        let d = m[col][col];
        for v in m[col].iter_mut() {
            *v /= d;
        }
        for r in 0..p {
            if r != col {
                let f = m[r][col];
                if f != 0.0 {
                    for c in 0..2 * p + 1 {
                        m[r][c] -= f * m[col][c];
                    }
                }
            }
        }
    }
    let beta: Vec<f64> = (0..p).map(|r| m[r][2 * p]).collect();
    let rss: f64 = (0..n)
        .map(|i| {
            let fit: f64 = (0..p).map(|a| beta[a] * cols[a][i]).sum();
            (y[i] - fit).powi(2)
        })
        .sum();
    let sigma2 = rss / (n - p) as f64;
    let se = (0..p).map(|a| (sigma2 * m[a][p + a]).sqrt()).collect();
    (beta, se)
}

/// Pearson r from raw moments.
pub fn raw_pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let syy: f64 = y.iter().map(|v| v * v).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
}

/// Hand-built preprocessing instance of 40 firms and the firms and links
/// that must survive with a 30-firm threshold and region `X` excluded.
pub struct PreprocessCase {
    pub edges: Vec<(String, String)>,
    pub firms: BTreeMap<String, String>,
    pub surviving_firms: Vec<String>,
    pub surviving_edges: Vec<(String, String)>,
}

/// Region `BIG` has 34 firms b00..b33, `SMALL` has s0..s2 and `X`
/// (excluded) has x0..x2.
///
/// - b00..b26 form a chain; b27 and b28 supply each other.
/// - b29 only has a self-loop and is dropped when the network is built.
/// - b30 is only supplied by s0 and b31 only supplies x0, so both become
///   isolated once their partner regions are gone.
/// - b26 → b32 appears twice, b05 → b06 repeats a chain link and b03 has a
///   self-loop next to its chain links.
/// - b33 supplies b32 and b00.
///
/// 31 BIG firms survive, one more than the threshold.
pub fn preprocess_case() -> PreprocessCase {
    let mut firms = BTreeMap::new();
    for i in 0..34 {
        firms.insert(format!("b{i:02}"), "BIG".to_string());
    }
    for i in 0..3 {
        firms.insert(format!("s{i}"), "SMALL".to_string());
        firms.insert(format!("x{i}"), "X".to_string());
    }
    let chain: Vec<(String, String)> = (0..26)
        .map(|i| (format!("b{i:02}"), format!("b{:02}", i + 1)))
        .collect();
    let mut edges = chain.clone();
    for (a, b) in [
        ("b27", "b28"),
        ("b28", "b27"),
        ("b29", "b29"),
        ("s0", "b30"),
        ("b31", "x0"),
        ("b26", "b32"),
        ("b26", "b32"),
        ("b05", "b06"),
        ("b03", "b03"),
        ("b33", "b32"),
        ("b33", "b00"),
        ("s0", "s1"),
        ("s1", "s2"),
        ("s2", "b00"),
        ("b12", "s1"),
        ("x0", "x1"),
        ("x1", "x2"),
        ("x2", "b10"),
    ] {
        edges.push((a.to_string(), b.to_string()));
    }

    let mut surviving_firms: Vec<String> = (0..29).map(|i| format!("b{i:02}")).collect();
    surviving_firms.push("b32".into());
    surviving_firms.push("b33".into());
    let mut surviving_edges = chain;
    for (a, b) in [
        ("b27", "b28"),
        ("b28", "b27"),
        ("b26", "b32"),
        ("b33", "b32"),
        ("b33", "b00"),
    ] {
        surviving_edges.push((a.to_string(), b.to_string()));
    }
    surviving_edges.sort();
    PreprocessCase {
        edges,
        firms,
        surviving_firms,
        surviving_edges,
    }
}
