//! Region-level aggregation of single-firm cascades.
//!
//! Firm sizes are total degrees (`q_i = k_i`) and a region's size is the sum
//! over its members. The exposure of region `d` to firm `i` is the
//! size-weighted share of `d` that is lost when `i` fails, the seed
//! included. Region-to-region exposure averages that over the firms of the
//! origin region.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cascade::{fold_batches, CascadeResult, Direction};
use crate::error::{Error, Result};
use crate::graph::{Partition, SupplyNetwork};
use crate::matrix::{ExposureMatrix, MatrixKind};

/// Share of every region's size lost in one cascade (`E_i^c` for all `c`).
pub fn firm_region_exposure(
    row: &CascadeResult,
    partition: &Partition,
    sizes: &[f64],
) -> Result<Vec<f64>> {
    let totals = checked_region_totals(partition, sizes)?;
    let mut lost = vec![0.0; partition.region_count()];
    for &(j, h) in row.distress() {
        lost[partition.region_of(j as usize)] += h * sizes[j as usize];
    }
    Ok(lost.iter().zip(&totals).map(|(l, q)| l / q).collect())
}

fn checked_region_totals(partition: &Partition, sizes: &[f64]) -> Result<Vec<f64>> {
    if sizes.len() != partition.firm_count() {
        return Err(Error::LengthMismatch(format!(
            "{} sizes for {} firms",
            sizes.len(),
            partition.firm_count()
        )));
    }
    let totals = partition.region_totals(sizes);
    if let Some(c) = totals.iter().position(|&q| q <= 0.0) {
        return Err(Error::ZeroRegionSize(partition.regions()[c].clone()));
    }
    Ok(totals)
}

struct BatchRows {
    /// (origin region, summed weighted exposure row)
    rows: Vec<(usize, Vec<f64>)>,
    lost: Vec<f64>,
    seen: Vec<bool>,
    hit: Vec<usize>,
}

/// Expected exposure matrix `E^cd` with unit failure weight for every firm.
pub fn region_region_exposure(
    network: &SupplyNetwork,
    partition: &Partition,
    direction: Direction,
    workers: usize,
) -> Result<ExposureMatrix> {
    let weights = vec![1.0; network.len()];
    region_region_exposure_weighted(network, partition, direction, &weights, workers)
}

/// `E^cd = Σ_{i∈c} p_i E_i^d / N^c` with per-firm failure weights `p`.
///
/// Cascades run in parallel on `workers` threads and are never stored:
/// each one is reduced to its per-region losses right away.
pub fn region_region_exposure_weighted(
    network: &SupplyNetwork,
    partition: &Partition,
    direction: Direction,
    failure_weights: &[f64],
    workers: usize,
) -> Result<ExposureMatrix> {
    if partition.firm_count() != network.len() {
        return Err(Error::LengthMismatch(format!(
            "partition covers {} firms, network has {}",
            partition.firm_count(),
            network.len()
        )));
    }
    if failure_weights.len() != network.len() {
        return Err(Error::LengthMismatch(format!(
            "{} failure weights for {} firms",
            failure_weights.len(),
            network.len()
        )));
    }
    let r = partition.region_count();
    if let Some(c) = (0..r).find(|&c| partition.size(c) == 0) {
        return Err(Error::EmptyRegion(partition.regions()[c].clone()));
    }
    let sizes = network.degree_sizes();
    let totals = checked_region_totals(partition, &sizes)?;
    let region_of = partition.region_indices();

    // Seeds grouped by origin region so a batch touches few matrix rows.
    let seeds: Vec<usize> = (0..r)
        .flat_map(|c| partition.members(c).iter().map(|&i| i as usize))
        .collect();

    let batches = fold_batches(
        network,
        direction,
        &seeds,
        workers,
        || BatchRows {
            rows: Vec::new(),
            lost: vec![0.0; r],
            seen: vec![false; r],
            hit: Vec::new(),
        },
        |acc, seed, ws| {
            if ws.is_dense() {
                for ((&h, &d), &q) in ws.h_dense().iter().zip(region_of).zip(&sizes) {
                    acc.lost[d as usize] += h * q;
                }
                acc.hit.clear();
                acc.hit.extend(0..r);
            } else {
                for &j in ws.affected() {
                    let j = j as usize;
                    let d = region_of[j] as usize;
                    if !acc.seen[d] {
                        acc.seen[d] = true;
                        acc.hit.push(d);
                    }
                    acc.lost[d] += ws.h(j) * sizes[j];
                }
            }
            let c = region_of[seed] as usize;
            if acc.rows.last().map(|(rc, _)| *rc) != Some(c) {
                acc.rows.push((c, vec![0.0; r]));
            }
            let row = &mut acc.rows.last_mut().unwrap().1;
            let p = failure_weights[seed];
            for &d in &acc.hit {
                row[d] += p * (acc.lost[d] / totals[d]);
                acc.lost[d] = 0.0;
                acc.seen[d] = false;
            }
            acc.hit.clear();
        },
    )?;

    let mut values = vec![0.0; r * r];
    for batch in batches {
        for (c, row) in batch.rows {
            for (dst, v) in values[c * r..(c + 1) * r].iter_mut().zip(row) {
                *dst += v;
            }
        }
    }
    for c in 0..r {
        let n_c = partition.size(c) as f64;
        for v in &mut values[c * r..(c + 1) * r] {
            *v /= n_c;
        }
    }
    ExposureMatrix::new(
        partition.regions().to_vec(),
        values,
        MatrixKind::Expected,
        Some(direction),
    )
}

/// Total degree `k^c` of every region.
pub fn region_degrees(network: &SupplyNetwork, partition: &Partition) -> Vec<f64> {
    partition.region_totals(&network.degree_sizes())
}

/// `V^cd = k^d E^cd`.
pub fn exposed_value(expected: &ExposureMatrix, region_sizes: &[f64]) -> Result<ExposureMatrix> {
    expected.expect_kind(MatrixKind::Expected)?;
    let r = expected.dim();
    if region_sizes.len() != r {
        return Err(Error::LengthMismatch(format!(
            "{} region sizes for a {r}x{r} matrix",
            region_sizes.len()
        )));
    }
    let values = expected
        .values()
        .iter()
        .enumerate()
        .map(|(idx, &e)| region_sizes[idx % r] * e)
        .collect();
    ExposureMatrix::new(
        expected.labels().to_vec(),
        values,
        MatrixKind::ExposedValue,
        expected.direction(),
    )
}

/// Total imported exposure `E^d = Σ_c E^cd` per region and direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExposureProfile {
    pub regions: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub down: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub up: Option<Vec<f64>>,
}

impl ExposureProfile {
    pub fn get(&self, direction: Direction) -> Option<&[f64]> {
        match direction {
            Direction::Downstream => self.down.as_deref(),
            Direction::Upstream => self.up.as_deref(),
        }
    }

    /// Combines the directions of two profiles over the same regions.
    pub fn merge(mut self, other: ExposureProfile) -> Result<ExposureProfile> {
        if self.regions != other.regions {
            return Err(Error::LengthMismatch(
                "profiles cover different regions".into(),
            ));
        }
        self.down = self.down.or(other.down);
        self.up = self.up.or(other.up);
        Ok(self)
    }
}

/// Column sums of an expected exposure matrix, diagonal included. The
/// matrix direction selects the profile slot (downstream when unset).
pub fn total_exposure(expected: &ExposureMatrix) -> Result<ExposureProfile> {
    expected.expect_kind(MatrixKind::Expected)?;
    let r = expected.dim();
    let mut sums = vec![0.0; r];
    for c in 0..r {
        for (s, v) in sums.iter_mut().zip(expected.row(c)) {
            *s += v;
        }
    }
    let mut profile = ExposureProfile {
        regions: expected.labels().to_vec(),
        down: None,
        up: None,
    };
    match expected.direction().unwrap_or(Direction::Downstream) {
        Direction::Downstream => profile.down = Some(sums),
        Direction::Upstream => profile.up = Some(sums),
    }
    Ok(profile)
}

pub const INCOME_GROUPS: [&str; 3] = ["1_low", "2_middle", "3_high"];

/// Which income groups receive the extra regions when the region count is
/// not divisible by three.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TercileRemainder {
    #[default]
    Lower,
    Upper,
}

/// Splits regions into three income groups of (nearly) equal region count
/// by ascending GDP per capita. Extra regions go to the lower groups.
pub fn income_terciles(
    regions: &[String],
    gdp_per_capita: &BTreeMap<String, f64>,
) -> Result<BTreeMap<String, String>> {
    income_terciles_with(regions, gdp_per_capita, TercileRemainder::Lower)
}

pub fn income_terciles_with(
    regions: &[String],
    gdp_per_capita: &BTreeMap<String, f64>,
    remainder: TercileRemainder,
) -> Result<BTreeMap<String, String>> {
    let missing: Vec<String> = regions
        .iter()
        .filter(|r| !gdp_per_capita.contains_key(*r))
        .cloned()
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingMacro(missing));
    }
    let mut sorted: Vec<&String> = regions.iter().collect();
    sorted.sort_by(|a, b| {
        gdp_per_capita[*a]
            .total_cmp(&gdp_per_capita[*b])
            .then_with(|| a.cmp(b))
    });
    let n = sorted.len();
    let base = n / 3;
    let rem = n % 3;
    let sizes = match remainder {
        TercileRemainder::Lower => [
            base + usize::from(rem >= 1),
            base + usize::from(rem >= 2),
            base,
        ],
        TercileRemainder::Upper => [
            base,
            base + usize::from(rem >= 2),
            base + usize::from(rem >= 1),
        ],
    };
    let mut out = BTreeMap::new();
    let mut it = sorted.into_iter();
    for (group, &size) in INCOME_GROUPS.iter().zip(&sizes) {
        for region in it.by_ref().take(size) {
            out.insert(region.clone(), group.to_string());
        }
    }
    Ok(out)
}

/// `E^gh`: exposure between groups of regions, treating each group as one
/// super-region.
pub fn group_exposure(
    network: &SupplyNetwork,
    partition: &Partition,
    groups: &BTreeMap<String, String>,
    direction: Direction,
    workers: usize,
) -> Result<ExposureMatrix> {
    let grouped = partition.coarsen(groups)?;
    region_region_exposure(network, &grouped, direction, workers)
}
