//! Oracle suites shared by `teleport verify` and the acceptance tests.
//!
//! Each suite compares a production code path against an independent
//! reference and returns a [`Check`] with a one-line summary.

use super::chain::chain_magnetization_brute;
use super::clifford_group::CliffordGroup;
use super::dense::{hadamard_matrix, StateVector};
use crate::experiment::run_trajectory;
use crate::geometry::Geometry;
use crate::meanfield::{chain_magnetization, haar};
use crate::seed;
use crate::stabilizer::{StabilizerTableau, TwoQubitClifford, CLIFFORD2_ORDER};
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl std::fmt::Display for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {}: {}", self.name, self.detail)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyOptions {
    pub dense_circuits: usize,
    pub shots: usize,
    pub clifford_draws: usize,
    pub haar_samples: usize,
    pub chain_cases: usize,
    pub protocol_trajectories: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            dense_circuits: 200,
            shots: 2_000,
            clifford_draws: 200_000,
            haar_samples: 100_000,
            chain_cases: 300,
            protocol_trajectories: 4_000,
        }
    }
}

fn subsets(n: usize) -> impl Iterator<Item = Vec<usize>> {
    (1..(1usize << n)).map(move |mask| (0..n).filter(|q| mask >> q & 1 == 1).collect())
}

/// Largest tableau/dense entropy mismatch over all nonempty subsets.
fn entropy_gap(tab: &StabilizerTableau, sv: &StateVector) -> f64 {
    subsets(tab.num_qubits())
        .map(|s| (tab.entropy_bits(&s).unwrap() as f64 - sv.entropy_bits(&s)).abs())
        .fold(0.0, f64::max)
}

/// Random circuits of two-qubit Cliffords and Z measurements on 2–5
/// qubits, run on the tableau and on a state vector. Outcomes drawn by the
/// tableau are imposed on the state vector; entropies of every subset must
/// agree exactly, and final single-qubit outcome frequencies must lie
/// within 4σ of the dense probabilities.
pub fn dense_equivalence(group: &CliffordGroup, circuits: usize, shots: usize, master: u64) -> Check {
    let mut worst_entropy: f64 = 0.0;
    let mut failures = Vec::new();
    let mut compared = 0usize;
    for c in 0..circuits {
        let mut rng = seed::stream(master, &[0xD5, c as u64]);
        let n = rng.gen_range(2..=5);
        let mut tab = StabilizerTableau::new(n).unwrap();
        let mut sv = StateVector::new(n);
        let depth = rng.gen_range(1..=20);
        for _ in 0..depth {
            if rng.gen_bool(0.7) {
                let i = rng.gen_range(0..n);
                let j = (i + rng.gen_range(1..n)) % n;
                let gate = TwoQubitClifford::random(&mut rng);
                tab.apply_clifford2(&gate, i, j).unwrap();
                sv.apply_2q(i, j, group.unitary(&gate).expect("sampled gate is in the group"));
            } else {
                let q = rng.gen_range(0..n);
                let peek = tab.peek_z(q).unwrap();
                let p1 = sv.prob_one(q);
                let consistent = match peek {
                    Some(true) => (p1 - 1.0).abs() < 1e-9,
                    Some(false) => p1.abs() < 1e-9,
                    None => (p1 - 0.5).abs() < 1e-9,
                };
                if !consistent {
                    failures.push(format!("circuit {c}: qubit {q} determinism {peek:?} vs p1={p1:.3}"));
                }
                let outcome = tab.measure_z(q, &mut rng).unwrap();
                if sv.project(q, outcome) < 1e-9 {
                    failures.push(format!("circuit {c}: impossible outcome on qubit {q}"));
                }
            }
            worst_entropy = worst_entropy.max(entropy_gap(&tab, &sv));
        }
        for q in 0..n {
            let p = sv.prob_one(q);
            let ones = (0..shots)
                .filter(|_| tab.clone().measure_z(q, &mut rng).unwrap())
                .count();
            let freq = ones as f64 / shots as f64;
            let sigma = (p * (1.0 - p) / shots as f64).sqrt();
            compared += 1;
            if (freq - p).abs() > 4.0 * sigma + 1e-12 {
                failures.push(format!("circuit {c}: qubit {q} freq {freq:.4} vs p {p:.4}"));
            }
        }
    }
    if worst_entropy > 1e-9 {
        failures.push(format!("entropy mismatch {worst_entropy:.2e}"));
    }
    Check {
        name: "dense-equivalence",
        passed: failures.is_empty(),
        detail: if failures.is_empty() {
            format!("{circuits} circuits, {compared} frequency checks at {shots} shots, entropies exact")
        } else {
            format!("{} failures, first: {}", failures.len(), failures[0])
        },
    }
}

/// Chi-square test of the gate sampler against the enumerated group.
/// Returns the p-value alongside the check.
pub fn clifford_uniformity(group: &CliffordGroup, draws: usize, master: u64) -> (Check, f64) {
    let mut rng = seed::stream(master, &[0xC1]);
    let mut counts = vec![0u64; group.len()];
    let mut outside = 0usize;
    for _ in 0..draws {
        match group.index_of(&TwoQubitClifford::random(&mut rng)) {
            Some(k) => counts[k] += 1,
            None => outside += 1,
        }
    }
    let expected = draws as f64 / group.len() as f64;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let dof = (group.len() - 1) as f64;
    let p = 1.0 - ChiSquared::new(dof).expect("positive dof").cdf(chi2);
    let passed = outside == 0 && group.len() == CLIFFORD2_ORDER && p > 1e-3;
    (
        Check {
            name: "clifford-uniformity",
            passed,
            detail: format!("{draws} draws, χ² = {chi2:.1} on {dof} dof, p = {p:.4}, {outside} outside the group"),
        },
        p,
    )
}

/// Monte-Carlo Haar average against the analytic projector.
pub fn haar_projector(samples: usize, master: u64) -> (Check, f64) {
    let mut rng = seed::stream(master, &[0x4A]);
    let dev = haar::haar_projector_check(samples, &mut rng);
    let p = haar::analytic_projector();
    let idem = haar::max_abs_diff(&haar::matmul16(&p, &p), &p);
    (
        Check {
            name: "haar-projector",
            passed: dev < 5e-3 && idem < 1e-12,
            detail: format!("{samples} samples, max deviation {dev:.2e}, idempotency {idem:.1e}"),
        },
        dev,
    )
}

/// Transfer-matrix chains against exhaustive enumeration, `K ≤ 12`.
pub fn chain_enumeration(cases: usize, master: u64) -> Check {
    let mut rng = seed::stream(master, &[0xCE]);
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let k = rng.gen_range(1..=12);
        let j = rng.gen_range(-3.0..3.0);
        let fields: Vec<f64> = (0..k).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let fast = chain_magnetization(j, &fields).expect("valid chain");
        let slow = chain_magnetization_brute(j, &fields);
        for (a, b) in fast.iter().zip(&slow) {
            worst = worst.max((a - b).abs());
        }
    }
    Check {
        name: "chain-enumeration",
        passed: worst < 1e-10,
        detail: format!("{cases} random chains, max deviation {worst:.1e}"),
    }
}

/// Mean `I` from a dense simulation of the full protocol on `n` qubits of
/// an all-to-all circuit, with its own pair and gate sampling.
fn dense_protocol_means(group: &CliffordGroup, n: usize, times: &[f64], trajectories: usize, master: u64) -> Vec<(f64, f64)> {
    let (input, output) = (0, n / 2);
    let reference = n;
    let mut sums = vec![(0.0, 0.0); times.len()];
    for traj in 0..trajectories {
        let mut rng = seed::stream(master, &[0xDE, traj as u64]);
        let mut sv = StateVector::new(n + 1);
        sv.apply_1q(input, &hadamard_matrix());
        sv.cnot(input, reference);
        let mut applied = 0;
        for (k, &t) in times.iter().enumerate() {
            while applied < (t * n as f64).round() as usize {
                let i = rng.gen_range(0..n);
                let j = (i + rng.gen_range(1..n)) % n;
                let u = &group.elements()[rng.gen_range(0..group.len())].1;
                sv.apply_2q(i, j, u);
                applied += 1;
            }
            let mut m = sv.clone();
            for q in (0..n).filter(|&q| q != output) {
                let one = rng.gen::<f64>() < m.prob_one(q);
                m.project(q, one);
            }
            let i = 2.0 * m.entropy_bits(&[reference]);
            sums[k].0 += i;
            sums[k].1 += i * i;
        }
    }
    let n_t = trajectories as f64;
    sums.iter()
        .map(|&(s, s2)| {
            let mean = s / n_t;
            let var = (s2 / n_t - mean * mean) * n_t / (n_t - 1.0);
            (mean, (var / n_t).sqrt())
        })
        .collect()
}

/// End-to-end protocol on a small all-to-all circuit against the dense
/// simulation; means must agree within 4 combined standard errors.
pub fn protocol_equivalence(group: &CliffordGroup, trajectories: usize, master: u64) -> Check {
    let n = 4;
    let times = [0.5, 1.0, 2.0, 4.0];
    let geometry = Geometry::all_to_all(n).expect("valid size");
    let mut tab_sums = vec![(0.0, 0.0); times.len()];
    for traj in 0..trajectories {
        let series = run_trajectory(&geometry, &times, master, traj).expect("valid trajectory");
        for (k, &v) in series.values.iter().enumerate() {
            tab_sums[k].0 += v as f64;
            tab_sums[k].1 += (v as f64).powi(2);
        }
    }
    let n_t = trajectories as f64;
    let dense = dense_protocol_means(group, n, &times, trajectories, master);
    let mut worst_z: f64 = 0.0;
    let mut parts = Vec::new();
    for (k, &(s, s2)) in tab_sums.iter().enumerate() {
        let mean = s / n_t;
        let se = ((s2 / n_t - mean * mean) / (n_t - 1.0)).max(0.0).sqrt();
        let (dm, dse) = dense[k];
        let z = (mean - dm).abs() / (se * se + dse * dse).sqrt().max(1e-12);
        worst_z = worst_z.max(z);
        parts.push(format!("t={}: {mean:.3} vs {dm:.3}", times[k]));
    }
    Check {
        name: "protocol-equivalence",
        passed: worst_z < 4.0,
        detail: format!("N={n}, {trajectories} trajectories, max |z| {worst_z:.2} ({})", parts.join(", ")),
    }
}

/// Every suite with the given sizes.
pub fn run_all(opts: &VerifyOptions, master: u64) -> Vec<Check> {
    let group = CliffordGroup::enumerate();
    vec![
        dense_equivalence(&group, opts.dense_circuits, opts.shots, master),
        clifford_uniformity(&group, opts.clifford_draws, master).0,
        haar_projector(opts.haar_samples, master).0,
        chain_enumeration(opts.chain_cases, master),
        protocol_equivalence(&group, opts.protocol_trajectories, master),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suite_passes() {
        let opts = VerifyOptions {
            dense_circuits: 30,
            shots: 500,
            clifford_draws: 50_000,
            haar_samples: 100_000,
            chain_cases: 50,
            protocol_trajectories: 1_500,
        };
        for check in run_all(&opts, 3) {
            assert!(check.passed, "{check}");
        }
    }

    #[test]
    fn biased_sampler_is_rejected() {
        // half the draws pinned to one element must fail the χ² test
        let group = CliffordGroup::enumerate();
        let mut counts = vec![0f64; group.len()];
        let draws = 200_000.0;
        counts[0] = draws / 2.0;
        for c in counts.iter_mut().skip(1) {
            *c = draws / 2.0 / (group.len() - 1) as f64;
        }
        let e = draws / group.len() as f64;
        let chi2: f64 = counts.iter().map(|c| (c - e).powi(2) / e).sum();
        let p = 1.0 - ChiSquared::new((group.len() - 1) as f64).unwrap().cdf(chi2);
        assert!(p < 1e-3);
    }
}
