//! Teleportation protocol over ensembles of random Clifford circuits.
//!
//! A trajectory allocates `N` system qubits plus a reference qubit (index
//! `N`), Bell-pairs the reference with the input site, then applies one
//! uniformly random two-qubit Clifford per `1/N` time units on pairs drawn
//! from the geometry. At every checkpoint a copy of the tableau has all
//! system qubits except the output site measured in Z, and records
//! `I = 2·S(reference)` on the copy.

use crate::geometry::{Geometry, GeometryError, PairSampler};
use crate::seed;
use crate::stabilizer::{StabilizerError, StabilizerTableau, TwoQubitClifford};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Stabilizer(#[from] StabilizerError),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("empty sample group for N={n}, t={t}")]
    EmptyGroup { n: usize, t: f64 },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

/// Default checkpoint grid `0, 0.1, …, 6.0`.
pub fn default_checkpoints() -> Vec<f64> {
    (0..=60).map(|k| k as f64 / 10.0).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub geometry: Geometry,
    /// Optional list of sizes (`N`, or `L` on the lattice) overriding the
    /// geometry's own size; one ensemble per size.
    #[serde(default)]
    pub sizes: Option<Vec<usize>>,
    #[serde(default = "default_checkpoints")]
    pub checkpoint_times: Vec<f64>,
    pub n_trajectories: usize,
    pub master_seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(geometry: Geometry, checkpoint_times: Vec<f64>, n_trajectories: usize, master_seed: u64) -> Self {
        Self {
            geometry,
            sizes: None,
            checkpoint_times,
            n_trajectories,
            master_seed,
            output: None,
        }
    }

    pub fn from_json_file(path: &Path) -> Result<Self, ExperimentError> {
        let mut text = String::new();
        File::open(path)
            .and_then(|mut f| f.read_to_string(&mut text))
            .map_err(io_err(path))?;
        serde_json::from_str(&text).map_err(|e| ExperimentError::Config(format!("{}: {e}", path.display())))
    }

    /// Geometries to run, one per requested size.
    pub fn geometries(&self) -> Vec<Geometry> {
        match &self.sizes {
            Some(sizes) => sizes.iter().map(|&s| self.geometry.with_size(s)).collect(),
            None => vec![self.geometry],
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.n_trajectories == 0 {
            return Err(ExperimentError::Config("n_trajectories must be positive".into()));
        }
        if self.checkpoint_times.is_empty() {
            return Err(ExperimentError::Config("no checkpoint times".into()));
        }
        for w in self.checkpoint_times.windows(2) {
            if w[1] <= w[0] {
                return Err(ExperimentError::Config("checkpoint times must be strictly increasing".into()));
            }
        }
        if let Some(&t) = self.checkpoint_times.iter().find(|t| !t.is_finite() || **t < 0.0) {
            return Err(ExperimentError::Config(format!("checkpoint time {t} must be finite and >= 0")));
        }
        if matches!(&self.sizes, Some(s) if s.is_empty()) {
            return Err(ExperimentError::Config("sizes list is empty".into()));
        }
        for g in self.geometries() {
            g.ab_sites()?;
        }
        Ok(())
    }
}

/// Gate count reached at time `t` on `n` qubits.
pub fn gate_count(t: f64, n: usize) -> usize {
    (t * n as f64).round() as usize
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrajectorySeries {
    pub trajectory: usize,
    /// `I_{A:B|M}` in bits at each checkpoint, always 0 or 2.
    pub values: Vec<u8>,
}

/// Measures all system qubits except `output` on a copy of `state` and
/// returns the copy. `state` holds `n_sys` system qubits plus the reference.
pub fn measure_rest<R: rand::Rng + ?Sized>(
    state: &StabilizerTableau,
    n_sys: usize,
    output: usize,
    rng: &mut R,
) -> Result<StabilizerTableau, StabilizerError> {
    let mut copy = state.clone();
    for q in (0..n_sys).filter(|&q| q != output) {
        copy.measure_z(q, rng)?;
    }
    Ok(copy)
}

/// Runs trajectory `traj` for one geometry. Deterministic in
/// `(master_seed, system size, traj)`.
pub fn run_trajectory(
    geometry: &Geometry,
    checkpoints: &[f64],
    master_seed: u64,
    traj: usize,
) -> Result<TrajectorySeries, ExperimentError> {
    let sampler = PairSampler::new(geometry)?;
    let n = geometry.num_qubits();
    let (input, output) = geometry.ab_sites()?;
    let reference = n;
    let labels = |stream: u64| [n as u64, traj as u64, stream];
    let mut circuit_rng = seed::stream(master_seed, &labels(0));
    let mut measure_rng = seed::stream(master_seed, &labels(1));

    let mut state = StabilizerTableau::new(n + 1)?;
    state.entangle_reference(reference, input)?;
    let mut applied = 0usize;
    let mut values = Vec::with_capacity(checkpoints.len());
    for &t in checkpoints {
        let target = gate_count(t, n);
        while applied < target {
            let (i, j) = sampler.sample(&mut circuit_rng);
            let gate = TwoQubitClifford::random(&mut circuit_rng);
            state.apply_clifford2(&gate, i, j)?;
            applied += 1;
        }
        let measured = measure_rest(&state, n, output, &mut measure_rng)?;
        values.push(2 * measured.entropy_bits(&[reference])? as u8);
    }
    Ok(TrajectorySeries {
        trajectory: traj,
        values,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawSample {
    pub family: String,
    pub alpha: Option<f64>,
    #[serde(rename = "N")]
    pub n: usize,
    pub t: f64,
    pub trajectory: usize,
    #[serde(rename = "I")]
    pub i: u8,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleRow {
    pub family: String,
    pub alpha: Option<f64>,
    #[serde(rename = "N")]
    pub n: usize,
    pub t: f64,
    #[serde(rename = "mean_I")]
    pub mean_i: f64,
    pub sem: f64,
    #[serde(rename = "n")]
    pub n_samples: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleTable {
    pub rows: Vec<EnsembleRow>,
    pub raw: Vec<RawSample>,
}

/// Streaming mean/variance that can be merged across disjoint sample sets.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Accumulator {
    pub count: usize,
    pub mean: f64,
    m2: f64,
}

impl Accumulator {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&self, other: &Self) -> Self {
        if self.count == 0 {
            return *other;
        }
        if other.count == 0 {
            return *self;
        }
        let count = self.count + other.count;
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * other.count as f64 / count as f64;
        let m2 = self.m2 + other.m2 + delta * delta * (self.count * other.count) as f64 / count as f64;
        Self { count, mean, m2 }
    }

    /// Sample standard deviation (n−1); zero for a single sample.
    pub fn std(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.m2.max(0.0) / (self.count - 1) as f64).sqrt()
        }
    }

    pub fn sem(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.std() / (self.count as f64).sqrt()
        }
    }
}

/// Total order on `f64` for grouping keys.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Time(f64);
impl Eq for Time {}
impl PartialOrd for Time {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Time {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Groups raw samples by `(family, alpha, N, t)` and reports mean, sample
/// standard error and count. Rows are sorted by `(N, t)`.
pub fn aggregate(samples: &[RawSample]) -> Result<Vec<EnsembleRow>, ExperimentError> {
    if samples.is_empty() {
        return Err(ExperimentError::Config("no samples to aggregate".into()));
    }
    let mut groups: BTreeMap<(String, Option<u64>, usize, Time), Accumulator> = BTreeMap::new();
    for s in samples {
        groups
            .entry((s.family.clone(), s.alpha.map(f64::to_bits), s.n, Time(s.t)))
            .or_default()
            .push(s.i as f64);
    }
    let mut rows: Vec<EnsembleRow> = groups
        .into_iter()
        .map(|((family, alpha, n, t), acc)| EnsembleRow {
            family,
            alpha: alpha.map(f64::from_bits),
            n,
            t: t.0,
            mean_i: acc.mean,
            sem: acc.sem(),
            n_samples: acc.count,
        })
        .collect();
    rows.sort_by(|a, b| (a.n, Time(a.t)).cmp(&(b.n, Time(b.t))));
    Ok(rows)
}

/// Runs all trajectories for every configured size. The result does not
/// depend on the rayon pool size.
pub fn run_ensemble(config: &ExperimentConfig) -> Result<EnsembleTable, ExperimentError> {
    config.validate()?;
    let mut raw = Vec::new();
    for geometry in config.geometries() {
        let series: Vec<TrajectorySeries> = (0..config.n_trajectories)
            .into_par_iter()
            .map(|traj| run_trajectory(&geometry, &config.checkpoint_times, config.master_seed, traj))
            .collect::<Result<_, _>>()?;
        for s in &series {
            for (&t, &i) in config.checkpoint_times.iter().zip(&s.values) {
                raw.push(RawSample {
                    family: geometry.family().to_string(),
                    alpha: geometry.alpha(),
                    n: geometry.num_qubits(),
                    t,
                    trajectory: s.trajectory,
                    i,
                });
            }
        }
    }
    let rows = aggregate(&raw)?;
    Ok(EnsembleTable { rows, raw })
}

fn write_csv<T: Serialize>(path: &Path, records: &[T]) -> Result<(), ExperimentError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
    for r in records {
        w.serialize(r).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, ExperimentError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut r = csv::Reader::from_reader(std::io::BufReader::new(file));
    r.deserialize().collect::<Result<_, _>>().map_err(csv_err(path))
}

/// Writes `family,alpha,N,t,trajectory,I`.
pub fn write_raw_csv(path: &Path, samples: &[RawSample]) -> Result<(), ExperimentError> {
    write_csv(path, samples)
}

pub fn read_raw_csv(path: &Path) -> Result<Vec<RawSample>, ExperimentError> {
    read_csv(path)
}

/// Writes `family,alpha,N,t,mean_I,sem,n`.
pub fn write_aggregate_csv(path: &Path, rows: &[EnsembleRow]) -> Result<(), ExperimentError> {
    write_csv(path, rows)
}

pub fn read_aggregate_csv(path: &Path) -> Result<Vec<EnsembleRow>, ExperimentError> {
    read_csv(path)
}

/// Reads just the header line of a CSV file.
pub fn csv_header(path: &Path) -> Result<String, ExperimentError> {
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(io_err(path))?;
    Ok(text.lines().next().unwrap_or_default().to_string())
}

/// Serializes any value as pretty JSON at `path`.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), ExperimentError> {
    let text = serde_json::to_string_pretty(value).expect("serializable");
    File::create(path)
        .and_then(|mut f| f.write_all(text.as_bytes()).and_then(|_| f.write_all(b"\n")))
        .map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::clifford_group::{two_qubit_teleport_average, CliffordGroup};

    fn sample(n: usize, t: f64, traj: usize, i: u8) -> RawSample {
        RawSample {
            family: "all_to_all".into(),
            alpha: None,
            n,
            t,
            trajectory: traj,
            i,
        }
    }

    #[test]
    fn aggregate_two_samples() {
        let rows = aggregate(&[sample(4, 1.0, 0, 0), sample(4, 1.0, 1, 2)]).unwrap();
        assert_eq!(rows.len(), 1);
        assert!((rows[0].mean_i - 1.0).abs() < 1e-15);
        assert!((rows[0].sem * 2f64.sqrt() - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn aggregate_constant_and_single() {
        let rows = aggregate(&[sample(4, 0.5, 0, 2), sample(4, 0.5, 1, 2), sample(4, 0.5, 2, 2)]).unwrap();
        assert_eq!(rows[0].sem, 0.0);
        let rows = aggregate(&[sample(8, 0.5, 0, 2)]).unwrap();
        assert_eq!((rows[0].mean_i, rows[0].sem, rows[0].n_samples), (2.0, 0.0, 1));
        assert!(aggregate(&[]).is_err());
    }

    #[test]
    fn accumulator_merge_matches_union() {
        let xs = [0.0, 2.0, 2.0, 0.0, 2.0, 2.0, 2.0, 0.0, 0.5];
        let mut whole = Accumulator::default();
        xs.iter().for_each(|&x| whole.push(x));
        let (mut a, mut b) = (Accumulator::default(), Accumulator::default());
        xs[..4].iter().for_each(|&x| a.push(x));
        xs[4..].iter().for_each(|&x| b.push(x));
        let m = a.merge(&b);
        assert_eq!(m.count, whole.count);
        assert!((m.mean - whole.mean).abs() < 1e-14);
        assert!((m.std() - whole.std()).abs() < 1e-14);
    }

    #[test]
    fn checkpoint_zero_is_zero() {
        let g = Geometry::all_to_all(8).unwrap();
        for traj in 0..20 {
            let s = run_trajectory(&g, &[0.0, 1.0, 3.0], 5, traj).unwrap();
            assert_eq!(s.values[0], 0);
            assert!(s.values.iter().all(|&v| v == 0 || v == 2));
        }
    }

    #[test]
    fn trajectory_is_deterministic() {
        let g = Geometry::power_law(16, 1.5).unwrap();
        let a = run_trajectory(&g, &[0.5, 1.0, 2.0], 99, 3).unwrap();
        let b = run_trajectory(&g, &[0.5, 1.0, 2.0], 99, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn post_measurement_state_is_pure_on_ab() {
        let g = Geometry::power_law(12, 1.0).unwrap();
        let (input, output) = g.ab_sites().unwrap();
        let mut rng = seed::stream(1, &[2]);
        let sampler = PairSampler::new(&g).unwrap();
        let n = 12;
        let mut state = StabilizerTableau::new(n + 1).unwrap();
        state.entangle_reference(n, input).unwrap();
        for step in 0..60 {
            let (i, j) = sampler.sample(&mut rng);
            state.apply_clifford2(&TwoQubitClifford::random(&mut rng), i, j).unwrap();
            if step % 6 == 0 {
                let mut r1 = seed::stream(7, &[step]);
                let mut r2 = seed::stream(8, &[step]);
                let m1 = measure_rest(&state, n, output, &mut r1).unwrap();
                let m2 = measure_rest(&state, n, output, &mut r2).unwrap();
                assert_eq!(m1.entropy_bits(&[n, output]).unwrap(), 0);
                assert_eq!(m1.entropy_bits(&[n]).unwrap(), m1.entropy_bits(&[output]).unwrap());
                // entropy does not depend on which outcomes occurred
                assert_eq!(m1.entropy_bits(&[n]).unwrap(), m2.entropy_bits(&[n]).unwrap());
            }
        }
    }

    #[test]
    fn two_qubit_ensemble_matches_group_enumeration() {
        let group = CliffordGroup::enumerate();
        let exact = two_qubit_teleport_average(&group);
        let cfg = ExperimentConfig::new(Geometry::all_to_all(2).unwrap(), vec![5.0], 4000, 21);
        let table = run_ensemble(&cfg).unwrap();
        let row = &table.rows[0];
        assert!(
            (row.mean_i - exact).abs() < 4.0 * row.sem.max(1e-3),
            "{} vs exact {exact}",
            row.mean_i
        );
    }

    #[test]
    fn single_trajectory_ensemble() {
        let cfg = ExperimentConfig::new(Geometry::all_to_all(4).unwrap(), vec![0.0, 2.0], 1, 3);
        let table = run_ensemble(&cfg).unwrap();
        let s = run_trajectory(&cfg.geometry, &cfg.checkpoint_times, 3, 0).unwrap();
        for (row, v) in table.rows.iter().zip(&s.values) {
            assert_eq!(row.mean_i, *v as f64);
            assert_eq!(row.sem, 0.0);
        }
    }

    #[test]
    fn config_validation() {
        let g = Geometry::all_to_all(4).unwrap();
        assert!(ExperimentConfig::new(g, vec![1.0, 0.5], 1, 0).validate().is_err());
        assert!(ExperimentConfig::new(g, vec![-1.0], 1, 0).validate().is_err());
        assert!(ExperimentConfig::new(g, vec![1.0], 0, 0).validate().is_err());
        assert!(ExperimentConfig::new(Geometry::all_to_all(5).unwrap(), vec![1.0], 1, 0)
            .validate()
            .is_err());
    }

    #[test]
    fn csv_headers_match_schema() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig::new(Geometry::power_law(8, 2.0).unwrap(), vec![0.0, 1.0], 3, 1);
        let table = run_ensemble(&cfg).unwrap();
        let raw = dir.path().join("raw.csv");
        let agg = dir.path().join("agg.csv");
        write_raw_csv(&raw, &table.raw).unwrap();
        write_aggregate_csv(&agg, &table.rows).unwrap();
        assert_eq!(csv_header(&raw).unwrap(), "family,alpha,N,t,trajectory,I");
        assert_eq!(csv_header(&agg).unwrap(), "family,alpha,N,t,mean_I,sem,n");
        assert_eq!(read_raw_csv(&raw).unwrap(), table.raw);
        assert_eq!(read_aggregate_csv(&agg).unwrap(), table.rows);
        let err = read_raw_csv(&dir.path().join("missing.csv")).unwrap_err();
        assert!(err.to_string().contains("missing.csv"));
    }
}
