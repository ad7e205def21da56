//! JSON interchange: state files, region layouts, and machine-readable
//! analysis/sampling reports.
//!
//! Complex numbers are serialized as `[re, im]` pairs throughout. State files
//! carry `local_dims`, optional `coords`, and `amplitudes` in the documented
//! little-endian index order; generated grid states additionally carry a
//! `grid` field so that `rows`/`columns` region families can be resolved.
//! Every report embeds a `schema_version`.

use crate::branches::JointOutcome;
use crate::records::{DetectionSummary, RecordedObservable};
use crate::regions::Region;
use crate::state::{Budget, Lattice, PureState};
use crate::{Error, Result};
use ndarray::prelude::*;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

pub const SCHEMA_VERSION: u32 = 1;

pub type CPair = [f64; 2];

pub fn c_to_pair(z: C64) -> CPair {
    [z.re, z.im]
}

pub fn pair_to_c(p: CPair) -> C64 {
    C64::new(p[0], p[1])
}

fn matrix_to_columns_json(m: &Array2<C64>) -> Vec<Vec<CPair>> {
    (0..m.ncols())
        .map(|j| (0..m.nrows()).map(|i| c_to_pair(m[[i, j]])).collect())
        .collect()
}

/// On-disk state vector.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateFile {
    pub schema_version: u32,
    pub local_dims: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coords: Option<Vec<Vec<f64>>>,
    /// (rows, columns) of a grid-structured state, when applicable.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<(usize, usize)>,
    pub amplitudes: Vec<CPair>,
}

impl StateFile {
    pub fn from_state(state: &PureState, grid: Option<(usize, usize)>) -> Self {
        StateFile {
            schema_version: SCHEMA_VERSION,
            local_dims: state.lattice().local_dims().to_vec(),
            coords: state.lattice().coords().map(|c| c.to_vec()),
            grid,
            amplitudes: state.amplitudes().iter().map(|&z| c_to_pair(z)).collect(),
        }
    }

    pub fn into_state(self, budget: &Budget) -> Result<(PureState, Option<(usize, usize)>)> {
        let lattice = Arc::new(Lattice::new(self.local_dims, self.coords, budget)?);
        let amps: Vec<C64> = self.amplitudes.into_iter().map(pair_to_c).collect();
        Ok((PureState::new(lattice, amps)?, self.grid))
    }
}

pub fn save_state<P: AsRef<Path>>(
    path: P,
    state: &PureState,
    grid: Option<(usize, usize)>,
) -> Result<()> {
    let file = std::fs::File::create(path)?;
    serde_json::to_writer(std::io::BufWriter::new(file), &StateFile::from_state(state, grid))?;
    Ok(())
}

pub fn load_state<P: AsRef<Path>>(
    path: P,
    budget: &Budget,
) -> Result<(PureState, Option<(usize, usize)>)> {
    let mut buf = String::new();
    std::fs::File::open(path)?.read_to_string(&mut buf)?;
    let file: StateFile = serde_json::from_str(&buf)?;
    file.into_state(budget)
}

/// Named record layouts: observable name -> list of regions (site arrays).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LayoutFile {
    pub schema_version: u32,
    pub observables: BTreeMap<String, Vec<Vec<usize>>>,
}

impl LayoutFile {
    pub fn from_observables(observables: &[RecordedObservable]) -> Self {
        let map = observables
            .iter()
            .map(|o| {
                (
                    o.name.clone(),
                    o.records.iter().map(|r| r.region.sites().to_vec()).collect(),
                )
            })
            .collect();
        LayoutFile {
            schema_version: SCHEMA_VERSION,
            observables: map,
        }
    }

    pub fn regions(&self) -> Result<BTreeMap<String, Vec<Region>>> {
        let mut out = BTreeMap::new();
        for (name, regions) in &self.observables {
            let rs: Result<Vec<Region>> =
                regions.iter().map(|r| Region::new(r.clone())).collect();
            out.insert(name.clone(), rs?);
        }
        Ok(out)
    }
}

pub fn save_layout<P: AsRef<Path>>(path: P, layout: &LayoutFile) -> Result<()> {
    let file = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(file), layout)?;
    Ok(())
}

/// Serialized recorded observable: outcome labels, per-region projector range
/// bases (lists of orthonormal column vectors), verification residual,
/// canonicity flag, and gauge dimension.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ObservableJson {
    pub name: String,
    pub outcomes: Vec<String>,
    pub redundancy: usize,
    pub residual: f64,
    pub canonical: bool,
    pub gauge_dimension: usize,
    pub records: Vec<RecordJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecordJson {
    pub region: Vec<usize>,
    /// `ranges[i]` lists the orthonormal basis columns of outcome i's range.
    pub ranges: Vec<Vec<Vec<CPair>>>,
}

impl ObservableJson {
    pub fn new(
        obs: &RecordedObservable,
        residual: f64,
        canonical: bool,
        gauge_dimension: usize,
    ) -> Self {
        ObservableJson {
            name: obs.name.clone(),
            outcomes: (0..obs.num_outcomes()).map(|i| i.to_string()).collect(),
            redundancy: obs.redundancy(),
            residual,
            canonical,
            gauge_dimension,
            records: obs
                .records
                .iter()
                .map(|r| RecordJson {
                    region: r.region.sites().to_vec(),
                    ranges: r.ranges.iter().map(matrix_to_columns_json).collect(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DetectionJson {
    pub pair: (usize, usize),
    pub nontrivial: bool,
    pub canonical: bool,
    pub gauge_dimension: usize,
    pub residual: f64,
}

impl From<&DetectionSummary> for DetectionJson {
    fn from(d: &DetectionSummary) -> Self {
        DetectionJson {
            pair: d.pair,
            nontrivial: d.nontrivial,
            canonical: d.canonical,
            gauge_dimension: d.gauge_dimension,
            residual: d.residual,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BranchJson {
    pub index: Vec<usize>,
    pub weight: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitudes: Option<Vec<CPair>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JointJson {
    pub verdict: String,
    pub failed_checks: Vec<String>,
    pub eigen_residual: f64,
    pub reconstruction_residual: f64,
    pub orthogonality_residual: f64,
    pub entropy: f64,
    pub branches: Vec<BranchJson>,
}

impl JointJson {
    pub fn new(outcome: &JointOutcome, dump_branches: bool) -> Self {
        let verdict = if outcome.verdict.is_compatible() {
            "compatible".to_string()
        } else {
            "incompatible".to_string()
        };
        let failed = match &outcome.verdict {
            crate::branches::CompatibilityVerdict::Compatible => Vec::new(),
            crate::branches::CompatibilityVerdict::Incompatible(d) => {
                d.failed_checks.iter().map(|s| s.to_string()).collect()
            }
        };
        let branches = outcome
            .decomposition
            .weights
            .iter()
            .map(|(idx, &w)| BranchJson {
                index: idx.clone(),
                weight: w,
                amplitudes: if dump_branches {
                    outcome.decomposition.branches.get(idx).map(|v| {
                        v.iter().map(|&z| c_to_pair(z)).collect()
                    })
                } else {
                    None
                },
            })
            .collect();
        JointJson {
            verdict,
            failed_checks: failed,
            eigen_residual: outcome.eigen_residual,
            reconstruction_residual: outcome.reconstruction_residual,
            orthogonality_residual: outcome.orthogonality_residual,
            entropy: crate::branches::branch_entropy(&outcome.decomposition),
            branches,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SphereJson {
    pub ell: f64,
    /// Verdict per detected observable, in report order.
    pub verdicts: Vec<bool>,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct TimingsJson {
    pub scan_ms: f64,
    pub joint_ms: f64,
    pub total_ms: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateMetaJson {
    pub num_sites: usize,
    pub local_dims: Vec<usize>,
    pub total_dim: usize,
}

/// Full analysis report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalyzeReport {
    pub schema_version: u32,
    pub state: StateMetaJson,
    pub tol: f64,
    pub seed: u64,
    pub observables: Vec<ObservableJson>,
    /// pair_cover[i][j]: does observable i pair-cover observable j
    /// (None on the diagonal).
    pub pair_cover: Vec<Vec<Option<bool>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sphere: Option<SphereJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub joint: Option<JointJson>,
    pub detections: Vec<DetectionJson>,
    pub timings: TimingsJson,
}

/// Sampling report file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleReportFile {
    pub schema_version: u32,
    pub estimate: CPair,
    pub std_error: f64,
    pub num_samples: usize,
    pub seed: u64,
    pub records_used: BTreeMap<String, Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<CPair>,
    pub timings: TimingsJson,
}

pub fn write_json_pretty<P: AsRef<Path>, T: Serialize>(path: P, value: &T) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    Ok(())
}

pub fn read_json<P: AsRef<Path>, T: for<'de> Deserialize<'de>>(path: P) -> Result<T> {
    let mut buf = String::new();
    std::fs::File::open(path)?.read_to_string(&mut buf)?;
    Ok(serde_json::from_str(&buf)?)
}

impl Error {
    /// Process exit code for the CLI: 2 config/domain, 3 resource, 4 internal
    /// numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_) | Error::Config(_) | Error::Io(_) | Error::Json(_) => 2,
            Error::Resource(_) => 3,
            Error::Numerical(_) => 4,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::bell_state;

    #[test]
    fn state_file_round_trip() {
        let state = bell_state();
        let file = StateFile::from_state(&state, None);
        let json = serde_json::to_string(&file).unwrap();
        let parsed: StateFile = serde_json::from_str(&json).unwrap();
        let (restored, grid) = parsed.into_state(&Budget::default()).unwrap();
        assert_eq!(grid, None);
        assert_eq!(restored.amplitudes(), state.amplitudes());
        assert_eq!(restored.lattice().local_dims(), state.lattice().local_dims());
    }

    #[test]
    fn layout_round_trip() {
        let obs = crate::corpus::shor_row_observable(2, 2);
        let layout = LayoutFile::from_observables(&[obs]);
        let json = serde_json::to_string(&layout).unwrap();
        let parsed: LayoutFile = serde_json::from_str(&json).unwrap();
        let regions = parsed.regions().unwrap();
        assert_eq!(regions["omega_pm"].len(), 2);
        assert_eq!(regions["omega_pm"][0].sites(), &[0, 1]);
    }
}
