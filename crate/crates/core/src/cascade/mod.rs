//! Distress propagation on a supply network.
//!
//! Every firm carries a distress level `h` in `[0, 1]` and a state: active,
//! distressed or inactive. Seeds start fully distressed. In each synchronous
//! step every distressed firm passes `h / k_in(customer)` of its previous
//! level to each customer, then becomes inactive for good. A firm that
//! receives distress while active turns distressed and propagates in the
//! next step. Inactive firms keep accumulating distress (capped at 1) but
//! never pass it on. The cascade ends when no firm is distressed.
//!
//! Upstream cascades run the same rule on the transposed network, so the
//! weight a supplier receives from a failed customer is `1 / k_out`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Partition, SupplyNetwork};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Direction {
    /// Supply shortage travelling from suppliers to customers.
    #[serde(rename = "down")]
    Downstream,
    /// Demand loss travelling from customers to suppliers.
    #[serde(rename = "up")]
    Upstream,
}

impl Direction {
    pub fn label(self) -> &'static str {
        match self {
            Direction::Downstream => "down",
            Direction::Upstream => "up",
        }
    }

    pub fn parse(s: &str) -> Option<Direction> {
        match s {
            "down" | "downstream" => Some(Direction::Downstream),
            "up" | "upstream" => Some(Direction::Upstream),
            _ => None,
        }
    }
}

impl std::fmt::Display for Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Final distress of one cascade: one row of the distress matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CascadeResult {
    pub seeds: Vec<usize>,
    /// Number of synchronous steps until no firm was distressed.
    pub steps: usize,
    distress: Vec<(u32, f64)>,
}

impl CascadeResult {
    /// Firms with positive distress, sorted by index.
    pub fn distress(&self) -> &[(u32, f64)] {
        &self.distress
    }

    /// Distress of firm `i` (zero when unaffected).
    pub fn h(&self, i: usize) -> f64 {
        self.distress
            .binary_search_by_key(&(i as u32), |&(j, _)| j)
            .map(|pos| self.distress[pos].1)
            .unwrap_or(0.0)
    }

    pub fn affected(&self) -> usize {
        self.distress.len()
    }

    pub fn to_dense(&self, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        for &(i, h) in &self.distress {
            out[i as usize] = h;
        }
        out
    }

    /// Size-weighted share of total size lost, including the seeds.
    pub fn debt_rank(&self, sizes: &[f64]) -> f64 {
        let total: f64 = sizes.iter().sum();
        let lost: f64 = self
            .distress
            .iter()
            .map(|&(j, h)| h * sizes[j as usize])
            .sum();
        lost / total
    }
}

/// A step with at least `n / DENSE_STEP_RATIO` receivers finds them by
/// scanning all firms rather than sorting the receiver list.
const DENSE_STEP_RATIO: usize = 64;

/// Network prepared for repeated cascades in one direction.
#[derive(Debug)]
pub struct Propagator<'a> {
    offsets: &'a [usize],
    targets: &'a [u32],
    /// In-degree in the propagation direction.
    k_in: Vec<f64>,
}

/// Per-thread scratch space for [`Propagator::run`].
///
/// Index lists live in buffers of length `n + 1` with an explicit length so
/// that appends can be made unconditionally and kept by bumping the length,
/// which avoids unpredictable branches in the inner loops.
#[derive(Debug, Clone)]
pub struct Workspace {
    h: Vec<f64>,
    inflow: Vec<f64>,
    receiving: Vec<u32>,
    /// Firms in order of first distress. Each step's frontier is the slice
    /// of firms added by the previous step.
    touched: Vec<u32>,
    n_touched: usize,
    steps: usize,
}

impl Workspace {
    fn new(n: usize) -> Self {
        Workspace {
            h: vec![0.0; n],
            inflow: vec![0.0; n],
            receiving: vec![0; n + 1],
            touched: vec![0; n + 1],
            n_touched: 0,
            steps: 0,
        }
    }

    fn reset(&mut self) {
        if self.is_dense() {
            self.h.fill(0.0);
        } else {
            for &i in &self.touched[..self.n_touched] {
                self.h[i as usize] = 0.0;
            }
        }
        self.n_touched = 0;
        self.steps = 0;
    }

    /// Firms with positive distress after the last run, in discovery order.
    pub fn affected(&self) -> &[u32] {
        &self.touched[..self.n_touched]
    }

    pub fn h(&self, i: usize) -> f64 {
        self.h[i]
    }

    /// Distress of every firm, zero where unaffected.
    pub fn h_dense(&self) -> &[f64] {
        &self.h
    }

    /// Whether the last cascade reached enough firms that a pass over
    /// [`h_dense`](Self::h_dense) is cheaper than following
    /// [`affected`](Self::affected).
    pub fn is_dense(&self) -> bool {
        self.n_touched * 4 >= self.h.len()
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    fn result(&self, seeds: Vec<usize>) -> CascadeResult {
        let mut distress: Vec<(u32, f64)> = self
            .affected()
            .iter()
            .map(|&i| (i, self.h[i as usize]))
            .collect();
        distress.sort_unstable_by_key(|&(i, _)| i);
        CascadeResult {
            seeds,
            steps: self.steps,
            distress,
        }
    }
}

impl<'a> Propagator<'a> {
    pub fn new(network: &'a SupplyNetwork, direction: Direction) -> Self {
        let ((offsets, targets), (in_offsets, _)) = match direction {
            Direction::Downstream => (network.out_csr(), network.in_csr()),
            Direction::Upstream => (network.in_csr(), network.out_csr()),
        };
        // Firms without incoming links never receive anything, so their
        // entry is never read.
        let k_in = in_offsets
            .windows(2)
            .map(|w| (w[1] - w[0]) as f64)
            .collect();
        Propagator {
            offsets,
            targets,
            k_in,
        }
    }

    pub fn len(&self) -> usize {
        self.k_in.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k_in.is_empty()
    }

    pub fn workspace(&self) -> Workspace {
        Workspace::new(self.len())
    }

    fn check_seeds(&self, seeds: &[usize]) -> Result<Vec<usize>> {
        if seeds.is_empty() {
            return Err(Error::EmptySeedSet);
        }
        let mut seeds = seeds.to_vec();
        seeds.sort_unstable();
        seeds.dedup();
        if let Some(&bad) = seeds.iter().find(|&&s| s >= self.len()) {
            return Err(Error::FirmIndexOutOfRange {
                index: bad,
                len: self.len(),
            });
        }
        Ok(seeds)
    }

    /// Runs one cascade, leaving the outcome in `ws`.
    pub fn run(&self, ws: &mut Workspace, seeds: &[usize]) -> Result<()> {
        self.run_observed(ws, seeds, |_, _| {})
    }

    /// Like [`run`](Self::run), calling `observe(step, h)` with the dense
    /// distress vector after every step.
    pub fn run_observed(
        &self,
        ws: &mut Workspace,
        seeds: &[usize],
        mut observe: impl FnMut(usize, &[f64]),
    ) -> Result<()> {
        let seeds = self.check_seeds(seeds)?;
        ws.reset();
        for &s in &seeds {
            ws.h[s] = 1.0;
            ws.touched[ws.n_touched] = s as u32;
            ws.n_touched += 1;
        }
        observe(0, &ws.h);

        let mut start = 0;
        while start < ws.n_touched {
            let end = ws.n_touched;
            let mut n_recv = 0;
            for &j in &ws.touched[start..end] {
                let j = j as usize;
                let hj = ws.h[j];
                for &i in &self.targets[self.offsets[j]..self.offsets[j + 1]] {
                    let i = i as usize;
                    ws.receiving[n_recv] = i as u32;
                    n_recv += (ws.inflow[i] == 0.0) as usize;
                    ws.inflow[i] += hj;
                }
            }
            // Receivers are handled in index order, so each frontier comes
            // out sorted and later steps walk memory mostly forward. Large
            // steps scan `inflow` directly instead of sorting the list.
            if n_recv * DENSE_STEP_RATIO >= ws.h.len() {
                n_recv = 0;
                for (i, &f) in ws.inflow.iter().enumerate() {
                    ws.receiving[n_recv] = i as u32;
                    n_recv += (f != 0.0) as usize;
                }
            } else {
                ws.receiving[..n_recv].sort_unstable();
            }
            for &i in &ws.receiving[..n_recv] {
                let i = i as usize;
                let old = ws.h[i];
                let new = (old + ws.inflow[i] / self.k_in[i]).min(1.0);
                ws.inflow[i] = 0.0;
                ws.h[i] = new;
                // Zero distress means the firm was still active. `new` can
                // only be zero through floating point underflow.
                ws.touched[ws.n_touched] = i as u32;
                ws.n_touched += (old == 0.0 && new > 0.0) as usize;
            }
            start = end;
            ws.steps += 1;
            observe(ws.steps, &ws.h);
        }
        Ok(())
    }

    pub fn propagate(&self, ws: &mut Workspace, seeds: &[usize]) -> Result<CascadeResult> {
        self.run(ws, seeds)?;
        Ok(ws.result(self.check_seeds(seeds)?))
    }
}

/// Runs a single cascade from `seeds`.
pub fn propagate(
    network: &SupplyNetwork,
    seeds: &[usize],
    direction: Direction,
) -> Result<CascadeResult> {
    let prop = Propagator::new(network, direction);
    let mut ws = prop.workspace();
    prop.propagate(&mut ws, seeds)
}

/// Runs a cascade and records the dense distress vector after every step
/// (index 0 is the initial condition).
pub fn propagate_traced(
    network: &SupplyNetwork,
    seeds: &[usize],
    direction: Direction,
) -> Result<(CascadeResult, Vec<Vec<f64>>)> {
    let prop = Propagator::new(network, direction);
    let mut ws = prop.workspace();
    let mut trace = Vec::new();
    prop.run_observed(&mut ws, seeds, |_, h| trace.push(h.to_vec()))?;
    let seeds = prop.check_seeds(seeds)?;
    Ok((ws.result(seeds), trace))
}

/// DebtRank of a single failing firm: the size-weighted fraction of the
/// whole network lost, counting the seed itself.
pub fn debt_rank(
    network: &SupplyNetwork,
    seed: usize,
    direction: Direction,
    sizes: &[f64],
) -> Result<f64> {
    if sizes.len() != network.len() {
        return Err(Error::LengthMismatch(format!(
            "{} sizes for {} firms",
            sizes.len(),
            network.len()
        )));
    }
    Ok(propagate(network, &[seed], direction)?.debt_rank(sizes))
}

/// Seed firms for a batch run: every firm, or the members of one region.
pub fn seed_firms(network: &SupplyNetwork, filter: Option<(&Partition, usize)>) -> Vec<usize> {
    match filter {
        None => (0..network.len()).collect(),
        Some((partition, region)) => partition
            .members(region)
            .iter()
            .map(|&i| i as usize)
            .collect(),
    }
}

/// Sequential stream of single-firm cascades, one per seed firm.
pub struct ExposureRows<'a> {
    prop: Propagator<'a>,
    ws: Workspace,
    seeds: std::vec::IntoIter<usize>,
}

impl Iterator for ExposureRows<'_> {
    type Item = (usize, CascadeResult);

    fn next(&mut self) -> Option<Self::Item> {
        let seed = self.seeds.next()?;
        let row = self
            .prop
            .propagate(&mut self.ws, &[seed])
            .expect("seed indices come from the network");
        Some((seed, row))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        self.seeds.size_hint()
    }
}

pub fn exposure_rows<'a>(
    network: &'a SupplyNetwork,
    direction: Direction,
    filter: Option<(&Partition, usize)>,
) -> ExposureRows<'a> {
    let prop = Propagator::new(network, direction);
    let ws = prop.workspace();
    ExposureRows {
        prop,
        ws,
        seeds: seed_firms(network, filter).into_iter(),
    }
}

/// Seeds handled by one work item of [`fold_batches`]. Fixed so the
/// grouping of floating point sums does not depend on the thread count.
pub const BATCH_SIZE: usize = 64;

/// Runs one single-firm cascade per seed in parallel and folds the outcomes
/// into one accumulator per batch of [`BATCH_SIZE`] consecutive seeds.
///
/// Accumulators come back in seed order, so merging them sequentially gives
/// results that are bit-identical for any `workers` value (0 means all
/// available cores).
pub fn fold_batches<T, I, F>(
    network: &SupplyNetwork,
    direction: Direction,
    seeds: &[usize],
    workers: usize,
    init: I,
    fold: F,
) -> Result<Vec<T>>
where
    T: Send,
    I: Fn() -> T + Sync,
    F: Fn(&mut T, usize, &Workspace) + Sync,
{
    if let Some(&bad) = seeds.iter().find(|&&s| s >= network.len()) {
        return Err(Error::FirmIndexOutOfRange {
            index: bad,
            len: network.len(),
        });
    }
    let prop = Propagator::new(network, direction);
    let work = || {
        seeds
            .par_chunks(BATCH_SIZE)
            .map_init(
                || prop.workspace(),
                |ws, chunk| {
                    let mut acc = init();
                    for &seed in chunk {
                        prop.run(ws, &[seed]).expect("validated seeds");
                        fold(&mut acc, seed, ws);
                    }
                    acc
                },
            )
            .collect::<Vec<T>>()
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    Ok(pool.install(work))
}
