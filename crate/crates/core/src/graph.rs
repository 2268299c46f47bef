//! Immutable supply network and region partition.
//!
//! Edges point from supplier to customer, so goods flow along edge
//! direction. Firms are indexed by the sorted order of their ids, which
//! makes every structure here independent of input row order.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{ExposureMatrix, MatrixKind};

/// Sparse directed graph of firms stored as a pair of CSR adjacency
/// structures (customers and suppliers of every firm).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupplyNetwork {
    firm_ids: Vec<String>,
    out_offsets: Vec<usize>,
    out_targets: Vec<u32>,
    in_offsets: Vec<usize>,
    in_sources: Vec<u32>,
}

fn csr(n: usize, edges: &[(u32, u32)]) -> (Vec<usize>, Vec<u32>) {
    let mut offsets = vec![0usize; n + 1];
    for &(src, _) in edges {
        offsets[src as usize + 1] += 1;
    }
    for i in 0..n {
        offsets[i + 1] += offsets[i];
    }
    let mut cursor = offsets.clone();
    let mut targets = vec![0u32; edges.len()];
    for &(src, dst) in edges {
        targets[cursor[src as usize]] = dst;
        cursor[src as usize] += 1;
    }
    for i in 0..n {
        targets[offsets[i]..offsets[i + 1]].sort_unstable();
    }
    (offsets, targets)
}

impl SupplyNetwork {
    /// Builds a network from already-indexed edges. `firm_ids` must be
    /// strictly increasing; edges must be free of self-loops and duplicates.
    pub fn from_indexed(firm_ids: Vec<String>, edges: &[(u32, u32)]) -> Result<Self> {
        let n = firm_ids.len();
        if n > u32::MAX as usize {
            return Err(Error::InvalidInput(format!("too many firms: {n}")));
        }
        if firm_ids.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput(
                "firm ids must be unique and sorted".into(),
            ));
        }
        for &(s, t) in edges {
            for idx in [s, t] {
                if idx as usize >= n {
                    return Err(Error::FirmIndexOutOfRange {
                        index: idx as usize,
                        len: n,
                    });
                }
            }
            if s == t {
                return Err(Error::InvalidInput(format!(
                    "self-loop at firm `{}`",
                    firm_ids[s as usize]
                )));
            }
        }
        let (out_offsets, out_targets) = csr(n, edges);
        let flipped: Vec<(u32, u32)> = edges.iter().map(|&(s, t)| (t, s)).collect();
        let (in_offsets, in_sources) = csr(n, &flipped);
        let net = SupplyNetwork {
            firm_ids,
            out_offsets,
            out_targets,
            in_offsets,
            in_sources,
        };
        for i in 0..n {
            if net.customers(i).windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidInput(format!(
                    "parallel edge out of firm `{}`",
                    net.firm_ids[i]
                )));
            }
        }
        Ok(net)
    }

    pub fn len(&self) -> usize {
        self.firm_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.firm_ids.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.out_targets.len()
    }

    pub fn firm_ids(&self) -> &[String] {
        &self.firm_ids
    }

    pub fn firm_id(&self, i: usize) -> &str {
        &self.firm_ids[i]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.firm_ids.binary_search_by(|f| f.as_str().cmp(id)).ok()
    }

    /// Customers of firm `i`, sorted ascending.
    pub fn customers(&self, i: usize) -> &[u32] {
        &self.out_targets[self.out_offsets[i]..self.out_offsets[i + 1]]
    }

    /// Suppliers of firm `i`, sorted ascending.
    pub fn suppliers(&self, i: usize) -> &[u32] {
        &self.in_sources[self.in_offsets[i]..self.in_offsets[i + 1]]
    }

    pub fn out_degree(&self, i: usize) -> usize {
        self.out_offsets[i + 1] - self.out_offsets[i]
    }

    pub fn in_degree(&self, i: usize) -> usize {
        self.in_offsets[i + 1] - self.in_offsets[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.in_degree(i) + self.out_degree(i)
    }

    /// Total degrees `k_i` as floating point node sizes.
    pub fn degree_sizes(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.degree(i) as f64).collect()
    }

    pub(crate) fn out_csr(&self) -> (&[usize], &[u32]) {
        (&self.out_offsets, &self.out_targets)
    }

    pub(crate) fn in_csr(&self) -> (&[usize], &[u32]) {
        (&self.in_offsets, &self.in_sources)
    }

    /// All edges as (supplier, customer) index pairs in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.len()).flat_map(move |i| self.customers(i).iter().map(move |&j| (i, j as usize)))
    }

    /// Transposed network: every supplier becomes a customer and vice versa.
    pub fn reverse(&self) -> SupplyNetwork {
        SupplyNetwork {
            firm_ids: self.firm_ids.clone(),
            out_offsets: self.in_offsets.clone(),
            out_targets: self.in_sources.clone(),
            in_offsets: self.out_offsets.clone(),
            in_sources: self.out_targets.clone(),
        }
    }

    /// Keeps only firms with `keep[i]`, dropping their edges and reindexing.
    fn restrict(&self, keep: &[bool]) -> SupplyNetwork {
        let mut new_index = vec![u32::MAX; self.len()];
        let mut ids = Vec::new();
        for (i, id) in self.firm_ids.iter().enumerate() {
            if keep[i] {
                new_index[i] = ids.len() as u32;
                ids.push(id.clone());
            }
        }
        let edges: Vec<(u32, u32)> = self
            .edges()
            .filter(|&(s, t)| keep[s] && keep[t])
            .map(|(s, t)| (new_index[s], new_index[t]))
            .collect();
        SupplyNetwork::from_indexed(ids, &edges).expect("restriction of a valid network")
    }
}

/// Assignment of every firm to exactly one region. Regions are ordered
/// lexicographically by label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    regions: Vec<String>,
    region_of: Vec<u32>,
    members: Vec<Vec<u32>>,
}

impl Partition {
    /// Builds a partition from one label per firm (indexed like the network).
    pub fn from_labels<S: AsRef<str>>(labels: &[S]) -> Partition {
        let set: BTreeSet<&str> = labels.iter().map(|s| s.as_ref()).collect();
        let regions: Vec<String> = set.into_iter().map(str::to_owned).collect();
        let mut members = vec![Vec::new(); regions.len()];
        let region_of = labels
            .iter()
            .enumerate()
            .map(|(i, l)| {
                let c = regions
                    .binary_search_by(|r| r.as_str().cmp(l.as_ref()))
                    .expect("label collected above");
                members[c].push(i as u32);
                c as u32
            })
            .collect();
        Partition {
            regions,
            region_of,
            members,
        }
    }

    pub fn firm_count(&self) -> usize {
        self.region_of.len()
    }

    pub fn region_count(&self) -> usize {
        self.regions.len()
    }

    pub fn regions(&self) -> &[String] {
        &self.regions
    }

    pub fn region_of(&self, firm: usize) -> usize {
        self.region_of[firm] as usize
    }

    pub(crate) fn region_indices(&self) -> &[u32] {
        &self.region_of
    }

    pub fn region_label(&self, firm: usize) -> &str {
        &self.regions[self.region_of(firm)]
    }

    pub fn members(&self, region: usize) -> &[u32] {
        &self.members[region]
    }

    /// Firm count `N^c` of a region.
    pub fn size(&self, region: usize) -> usize {
        self.members[region].len()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.regions
            .binary_search_by(|r| r.as_str().cmp(label))
            .ok()
    }

    /// Per-firm labels, indexed like the network.
    pub fn labels(&self) -> Vec<&str> {
        (0..self.firm_count())
            .map(|i| self.region_label(i))
            .collect()
    }

    /// Coarsens the partition by relabeling every region, e.g. countries to
    /// income groups. Fails when `map` has no entry for a region.
    pub fn coarsen(&self, map: &BTreeMap<String, String>) -> Result<Partition> {
        let missing: Vec<String> = self
            .regions
            .iter()
            .filter(|r| !map.contains_key(*r))
            .cloned()
            .collect();
        if !missing.is_empty() {
            return Err(Error::MissingMacro(missing));
        }
        let labels: Vec<&str> = (0..self.firm_count())
            .map(|i| map[self.region_label(i)].as_str())
            .collect();
        Ok(Partition::from_labels(&labels))
    }

    /// Sum of per-firm `sizes` within every region (`q^c`).
    pub fn region_totals(&self, sizes: &[f64]) -> Vec<f64> {
        self.members
            .iter()
            .map(|m| m.iter().map(|&i| sizes[i as usize]).sum())
            .collect()
    }

    fn restrict(&self, keep: &[bool]) -> Partition {
        let labels: Vec<&str> = (0..self.firm_count())
            .filter(|&i| keep[i])
            .map(|i| self.region_label(i))
            .collect();
        Partition::from_labels(&labels)
    }
}

/// Counts of rows dropped while building a network.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildReport {
    pub input_edges: usize,
    pub self_loops: usize,
    pub duplicate_edges: usize,
    pub isolated_firms: usize,
}

#[derive(Debug, Clone)]
pub struct Built {
    pub network: SupplyNetwork,
    pub partition: Partition,
    pub report: BuildReport,
}

/// Builds the network and partition from raw (supplier, customer) id pairs
/// and a firm → region table.
///
/// Self-loops and duplicate edges are dropped and counted; firms without
/// any remaining edge are dropped as isolated.
pub fn build_network<S: AsRef<str>>(
    edges: &[(S, S)],
    firms: &BTreeMap<String, String>,
) -> Result<Built> {
    if edges.is_empty() {
        return Err(Error::EmptyEdgeList);
    }
    let mut report = BuildReport {
        input_edges: edges.len(),
        ..Default::default()
    };
    let mut used: BTreeSet<&str> = BTreeSet::new();
    let mut kept: Vec<(&str, &str)> = Vec::with_capacity(edges.len());
    for (s, t) in edges {
        let (s, t) = (s.as_ref(), t.as_ref());
        for id in [s, t] {
            if !firms.contains_key(id) {
                return Err(Error::UnknownFirm(id.to_owned()));
            }
        }
        if s == t {
            report.self_loops += 1;
            continue;
        }
        used.insert(s);
        used.insert(t);
        kept.push((s, t));
    }
    if kept.is_empty() {
        return Err(Error::EmptyEdgeList);
    }
    report.isolated_firms = firms.len() - used.len();

    let firm_ids: Vec<String> = used.iter().map(|s| (*s).to_owned()).collect();
    let index = |id: &str| firm_ids.binary_search_by(|f| f.as_str().cmp(id)).unwrap() as u32;
    let mut indexed: Vec<(u32, u32)> = kept.iter().map(|&(s, t)| (index(s), index(t))).collect();
    indexed.sort_unstable();
    let before = indexed.len();
    indexed.dedup();
    report.duplicate_edges = before - indexed.len();

    let labels: Vec<&str> = firm_ids.iter().map(|id| firms[id].as_str()).collect();
    let partition = Partition::from_labels(&labels);
    let network = SupplyNetwork::from_indexed(firm_ids, &indexed)?;
    Ok(Built {
        network,
        partition,
        report,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreprocessConfig {
    /// Regions must contain strictly more firms than this to be kept.
    pub min_firms: usize,
    pub excluded_regions: BTreeSet<String>,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            min_firms: 30,
            excluded_regions: BTreeSet::new(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterReport {
    pub excluded_region_firms: usize,
    pub small_region_firms: usize,
    pub isolated_firms: usize,
    /// Regions dropped by either region rule, sorted.
    pub removed_regions: Vec<String>,
    /// Number of filter passes until nothing changed.
    pub passes: usize,
}

#[derive(Debug, Clone)]
pub struct Preprocessed {
    pub network: SupplyNetwork,
    pub partition: Partition,
    pub report: FilterReport,
}

/// Drops firms in excluded regions and in regions with at most
/// `min_firms` firms, then firms left without edges. The two rules are
/// re-applied until neither removes anything, so the result is a fixpoint.
pub fn preprocess(
    network: &SupplyNetwork,
    partition: &Partition,
    config: &PreprocessConfig,
) -> Result<Preprocessed> {
    let n = network.len();
    if partition.firm_count() != n {
        return Err(Error::LengthMismatch(format!(
            "partition covers {} firms, network has {}",
            partition.firm_count(),
            n
        )));
    }
    let mut keep = vec![true; n];
    let mut report = FilterReport::default();
    let mut removed_regions = BTreeSet::new();

    for (c, label) in partition.regions().iter().enumerate() {
        if config.excluded_regions.contains(label) {
            for &i in partition.members(c) {
                keep[i as usize] = false;
                report.excluded_region_firms += 1;
            }
            removed_regions.insert(label.clone());
        }
    }

    loop {
        report.passes += 1;
        let mut changed = false;

        let mut counts = vec![0usize; partition.region_count()];
        for i in (0..n).filter(|&i| keep[i]) {
            counts[partition.region_of(i)] += 1;
        }
        for (c, &count) in counts.iter().enumerate() {
            if count > 0 && count <= config.min_firms {
                for &i in partition.members(c) {
                    if keep[i as usize] {
                        keep[i as usize] = false;
                        report.small_region_firms += 1;
                    }
                }
                removed_regions.insert(partition.regions()[c].clone());
                changed = true;
            }
        }

        let mut degree = vec![0usize; n];
        for (s, t) in network.edges() {
            if keep[s] && keep[t] {
                degree[s] += 1;
                degree[t] += 1;
            }
        }
        for i in 0..n {
            if keep[i] && degree[i] == 0 {
                keep[i] = false;
                report.isolated_firms += 1;
                changed = true;
            }
        }

        if !changed {
            break;
        }
    }

    if !keep.iter().any(|&k| k) {
        return Err(Error::EmptyAfterPreprocessing);
    }
    let restricted = partition.restrict(&keep);
    // Regions that lost all members to isolation also count as removed.
    for label in partition.regions() {
        if restricted.index_of(label).is_none() {
            removed_regions.insert(label.clone());
        }
    }
    let network = network.restrict(&keep);
    let partition = restricted;
    report.removed_regions = removed_regions.into_iter().collect();
    Ok(Preprocessed {
        network,
        partition,
        report,
    })
}

/// Number of links `A^cd` from firms in region `c` to firms in region `d`.
pub fn link_count_matrix(network: &SupplyNetwork, partition: &Partition) -> ExposureMatrix {
    let r = partition.region_count();
    let mut values = vec![0.0; r * r];
    for (s, t) in network.edges() {
        values[partition.region_of(s) * r + partition.region_of(t)] += 1.0;
    }
    ExposureMatrix::new(
        partition.regions().to_vec(),
        values,
        MatrixKind::LinkCount,
        None,
    )
    .expect("square by construction")
}

/// Average number of out-links of a firm in `c` into `d`: `A^cd / N^c`.
pub fn mean_outlinks(network: &SupplyNetwork, partition: &Partition) -> ExposureMatrix {
    let counts = link_count_matrix(network, partition);
    let r = partition.region_count();
    let values = counts
        .values()
        .iter()
        .enumerate()
        .map(|(idx, &a)| {
            let n_c = partition.size(idx / r);
            if n_c == 0 {
                0.0
            } else {
                a / n_c as f64
            }
        })
        .collect();
    ExposureMatrix::new(
        partition.regions().to_vec(),
        values,
        MatrixKind::MeanOutlinks,
        None,
    )
    .expect("square by construction")
}

/// Per-region degree totals.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionDegree {
    pub region: String,
    /// Sum of total degrees of member firms, `k^c`.
    pub total_degree: u64,
    /// Links leaving the region, `L_e^c`.
    pub export_links: u64,
    /// Links entering the region, `L_i^c`.
    pub import_links: u64,
}

pub fn region_degree_aggregates(
    network: &SupplyNetwork,
    partition: &Partition,
) -> Vec<RegionDegree> {
    let mut out: Vec<RegionDegree> = partition
        .regions()
        .iter()
        .map(|r| RegionDegree {
            region: r.clone(),
            total_degree: 0,
            export_links: 0,
            import_links: 0,
        })
        .collect();
    for (s, t) in network.edges() {
        let (cs, ct) = (partition.region_of(s), partition.region_of(t));
        out[cs].total_degree += 1;
        out[ct].total_degree += 1;
        if cs != ct {
            out[cs].export_links += 1;
            out[ct].import_links += 1;
        }
    }
    out
}
