//! Circuit geometries: which qubit pairs receive two-qubit gates, and where
//! the input and output qubits sit.
//!
//! Pair distributions are over unordered pairs `{i, j}`, `i ≠ j`:
//!
//! * `AllToAll`: uniform over all `N(N-1)/2` pairs.
//! * `PowerLaw1D`: ring of `N` sites; a pair at ring separation `r` has
//!   weight `r^{-α}`. A separation is drawn from `r^{-α}` over
//!   `1..=⌊N/2⌋`, with the `r = N/2` term (even `N`) halved since both
//!   directions reach the same partner, then a uniform base site is paired
//!   with `base + r mod N`.
//! * `Lattice2D`: uniform over the `2L²` nearest-neighbour bonds of a
//!   periodic `L×L` square lattice, sites indexed row-major `(row, col) ->
//!   row·L + col`.

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum GeometryError {
    #[error("need at least {min} qubits, got {got}")]
    TooSmall { min: usize, got: usize },
    #[error("power-law exponent must be finite and non-negative, got {0}")]
    BadAlpha(f64),
    #[error("{what} must be even to place the output qubit, got {value}")]
    OddSize { what: &'static str, value: usize },
    #[error("table for {0} qubits is too large to tabulate")]
    TooLarge(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family")]
pub enum Geometry {
    #[serde(rename = "all_to_all")]
    AllToAll {
        #[serde(rename = "N")]
        n: usize,
    },
    #[serde(rename = "power_law_1d")]
    PowerLaw1D {
        #[serde(rename = "N")]
        n: usize,
        alpha: f64,
    },
    #[serde(rename = "lattice_2d")]
    Lattice2D {
        #[serde(rename = "L")]
        l: usize,
    },
}

impl Geometry {
    pub fn all_to_all(n: usize) -> Result<Self, GeometryError> {
        let g = Geometry::AllToAll { n };
        g.validate()?;
        Ok(g)
    }

    pub fn power_law(n: usize, alpha: f64) -> Result<Self, GeometryError> {
        let g = Geometry::PowerLaw1D { n, alpha };
        g.validate()?;
        Ok(g)
    }

    pub fn lattice(l: usize) -> Result<Self, GeometryError> {
        let g = Geometry::Lattice2D { l };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        match *self {
            Geometry::AllToAll { n } | Geometry::PowerLaw1D { n, .. } if n < 2 => {
                Err(GeometryError::TooSmall { min: 2, got: n })
            }
            Geometry::PowerLaw1D { alpha, .. } if !(alpha.is_finite() && alpha >= 0.0) => {
                Err(GeometryError::BadAlpha(alpha))
            }
            // L = 2 would double-count bonds on the periodic lattice.
            Geometry::Lattice2D { l } if l < 3 => Err(GeometryError::TooSmall { min: 3, got: l }),
            _ => Ok(()),
        }
    }

    /// Number of system qubits.
    pub fn num_qubits(&self) -> usize {
        match *self {
            Geometry::AllToAll { n } | Geometry::PowerLaw1D { n, .. } => n,
            Geometry::Lattice2D { l } => l * l,
        }
    }

    /// Linear size entering finite-size scaling: `N` for 1-D and
    /// all-to-all families, `L` on the lattice.
    pub fn linear_size(&self) -> usize {
        match *self {
            Geometry::AllToAll { n } | Geometry::PowerLaw1D { n, .. } => n,
            Geometry::Lattice2D { l } => l,
        }
    }

    /// Same family with a different size (`N`, or `L` for the lattice).
    pub fn with_size(&self, size: usize) -> Self {
        match *self {
            Geometry::AllToAll { .. } => Geometry::AllToAll { n: size },
            Geometry::PowerLaw1D { alpha, .. } => Geometry::PowerLaw1D { n: size, alpha },
            Geometry::Lattice2D { .. } => Geometry::Lattice2D { l: size },
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            Geometry::AllToAll { .. } => "all_to_all",
            Geometry::PowerLaw1D { .. } => "power_law_1d",
            Geometry::Lattice2D { .. } => "lattice_2d",
        }
    }

    pub fn alpha(&self) -> Option<f64> {
        match *self {
            Geometry::PowerLaw1D { alpha, .. } => Some(alpha),
            _ => None,
        }
    }

    /// Input site and the output site placed as far away as the geometry allows.
    pub fn ab_sites(&self) -> Result<(usize, usize), GeometryError> {
        self.validate()?;
        match *self {
            Geometry::AllToAll { n } | Geometry::PowerLaw1D { n, .. } => {
                if n % 2 != 0 {
                    return Err(GeometryError::OddSize { what: "N", value: n });
                }
                Ok((0, n / 2))
            }
            Geometry::Lattice2D { l } => {
                if l % 2 != 0 {
                    return Err(GeometryError::OddSize { what: "L", value: l });
                }
                Ok((0, (l / 2) * l + l / 2))
            }
        }
    }

    /// Separation weights `w(r)` for `r = 1..=⌊N/2⌋` (power law only).
    fn separation_weights(n: usize, alpha: f64) -> Vec<f64> {
        (1..=n / 2)
            .map(|r| {
                let w = (r as f64).powf(-alpha);
                if n % 2 == 0 && r == n / 2 {
                    w / 2.0
                } else {
                    w
                }
            })
            .collect()
    }

    /// Exact table of `(i, j, P(i,j))` with `i < j`.
    pub fn pair_pmf(&self) -> Result<Vec<(usize, usize, f64)>, GeometryError> {
        self.validate()?;
        let n = self.num_qubits();
        if n > 4096 {
            return Err(GeometryError::TooLarge(n));
        }
        let mut weights = Vec::new();
        match *self {
            Geometry::AllToAll { n } => {
                for i in 0..n {
                    for j in (i + 1)..n {
                        weights.push((i, j, 1.0));
                    }
                }
            }
            Geometry::PowerLaw1D { n, alpha } => {
                for i in 0..n {
                    for j in (i + 1)..n {
                        let r = (j - i).min(n - (j - i));
                        weights.push((i, j, (r as f64).powf(-alpha)));
                    }
                }
            }
            Geometry::Lattice2D { l } => {
                for site in 0..l * l {
                    let (row, col) = (site / l, site % l);
                    for nb in [row * l + (col + 1) % l, ((row + 1) % l) * l + col] {
                        weights.push((site.min(nb), site.max(nb), 1.0));
                    }
                }
                weights.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
            }
        }
        let total: f64 = weights.iter().map(|w| w.2).sum();
        Ok(weights.into_iter().map(|(i, j, w)| (i, j, w / total)).collect())
    }

    /// Couplings `J_ij = N·P(i,j)`, summing to `N` over unordered pairs.
    pub fn couplings(&self) -> Result<Vec<(usize, usize, f64)>, GeometryError> {
        let n = self.num_qubits() as f64;
        Ok(self
            .pair_pmf()?
            .into_iter()
            .map(|(i, j, p)| (i, j, n * p))
            .collect())
    }

    /// One-off pair draw; build a [`PairSampler`] for repeated sampling.
    pub fn sample_pair<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(usize, usize), GeometryError> {
        Ok(PairSampler::new(self)?.sample(rng))
    }
}

/// Precomputed sampler for a geometry's pair distribution.
#[derive(Clone, Debug)]
pub struct PairSampler {
    geometry: Geometry,
    separations: Option<WeightedIndex<f64>>,
}

impl PairSampler {
    pub fn new(geometry: &Geometry) -> Result<Self, GeometryError> {
        geometry.validate()?;
        let separations = match *geometry {
            Geometry::PowerLaw1D { n, alpha } => Some(
                WeightedIndex::new(Geometry::separation_weights(n, alpha))
                    .expect("power-law weights are positive"),
            ),
            _ => None,
        };
        Ok(Self {
            geometry: *geometry,
            separations,
        })
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    /// Draws an ordered pair `(i, j)` with `i ≠ j`; the unordered pair
    /// follows [`Geometry::pair_pmf`] and the order is uniformly random.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, usize) {
        let (i, j) = match self.geometry {
            Geometry::AllToAll { n } => {
                let i = rng.gen_range(0..n);
                let mut j = rng.gen_range(0..n - 1);
                if j >= i {
                    j += 1;
                }
                (i, j)
            }
            Geometry::PowerLaw1D { n, .. } => {
                let r = self.separations.as_ref().unwrap().sample(rng) + 1;
                let base = rng.gen_range(0..n);
                (base, (base + r) % n)
            }
            Geometry::Lattice2D { l } => {
                let site = rng.gen_range(0..l * l);
                let (row, col) = (site / l, site % l);
                let nb = if rng.gen::<bool>() {
                    row * l + (col + 1) % l
                } else {
                    ((row + 1) % l) * l + col
                };
                (site, nb)
            }
        };
        if rng.gen::<bool>() {
            (j, i)
        } else {
            (i, j)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashMap;

    fn empirical(g: &Geometry, draws: usize, seed: u64) -> HashMap<(usize, usize), usize> {
        let s = PairSampler::new(g).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut counts = HashMap::new();
        for _ in 0..draws {
            let (i, j) = s.sample(&mut rng);
            assert_ne!(i, j);
            *counts.entry((i.min(j), i.max(j))).or_insert(0) += 1;
        }
        counts
    }

    /// Chi-square statistic of empirical counts against `pair_pmf`, returned
    /// with the degrees of freedom.
    fn chi_square(g: &Geometry, draws: usize, seed: u64) -> (f64, usize) {
        let counts = empirical(g, draws, seed);
        let pmf = g.pair_pmf().unwrap();
        let mut stat = 0.0;
        for &(i, j, p) in &pmf {
            let e = p * draws as f64;
            let o = *counts.get(&(i, j)).unwrap_or(&0) as f64;
            stat += (o - e).powi(2) / e;
        }
        assert_eq!(counts.len(), pmf.len(), "sampled a pair outside the support");
        (stat, pmf.len() - 1)
    }

    #[test]
    fn all_to_all_is_uniform() {
        let g = Geometry::all_to_all(4).unwrap();
        let draws = 100_000;
        let counts = empirical(&g, draws, 1);
        assert_eq!(counts.len(), 6);
        let p = 1.0 / 6.0;
        let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
        for (_, &c) in counts.iter() {
            assert!((c as f64 - p * draws as f64).abs() < 3.0 * sigma);
        }
    }

    #[test]
    fn power_law_alpha_zero_matches_pair_table() {
        let g = Geometry::power_law(8, 0.0).unwrap();
        // Brute force: uniform separation draw, uniform base, partner at +r;
        // the r = N/2 pair is hit from both ends, so its separation weight is halved.
        let mut brute: HashMap<(usize, usize), f64> = HashMap::new();
        let weights = [1.0, 1.0, 1.0, 0.5];
        let z: f64 = weights.iter().sum();
        for (k, w) in weights.iter().enumerate() {
            for base in 0..8 {
                let j = (base + k + 1) % 8;
                *brute.entry((base.min(j), base.max(j))).or_insert(0.0) += w / z / 8.0;
            }
        }
        for (i, j, p) in g.pair_pmf().unwrap() {
            assert!((brute[&(i, j)] - p).abs() < 1e-12);
        }
        let (stat, dof) = chi_square(&g, 100_000, 2);
        let crit = statrs::distribution::ChiSquared::new(dof as f64).unwrap();
        use statrs::distribution::ContinuousCDF;
        assert!(1.0 - crit.cdf(stat) > 1e-3);
    }

    #[test]
    fn power_law_n6_alpha2_table() {
        let g = Geometry::power_law(6, 2.0).unwrap();
        let pmf = g.pair_pmf().unwrap();
        // Separation masses 6·{1, 1/4, (1/9)/2}.
        let sep_mass = [6.0, 6.0 / 4.0, 6.0 / 18.0];
        let z: f64 = sep_mass.iter().sum();
        let mut by_sep = [0.0; 3];
        for &(i, j, p) in &pmf {
            let r = (j - i).min(6 - (j - i));
            by_sep[r - 1] += p;
        }
        for k in 0..3 {
            assert!((by_sep[k] - sep_mass[k] / z).abs() < 1e-12);
        }
        let (stat, dof) = chi_square(&g, 100_000, 3);
        let crit = statrs::distribution::ChiSquared::new(dof as f64).unwrap();
        use statrs::distribution::ContinuousCDF;
        assert!(1.0 - crit.cdf(stat) > 1e-3);
    }

    #[test]
    fn lattice_only_nearest_neighbours() {
        let g = Geometry::lattice(3).unwrap();
        let pmf = g.pair_pmf().unwrap();
        assert_eq!(pmf.len(), 18);
        let counts = empirical(&g, 100_000, 4);
        for (&(i, j), _) in &counts {
            let (ri, ci, rj, cj) = (i / 3, i % 3, j / 3, j % 3);
            let dr = (ri as i64 - rj as i64).rem_euclid(3);
            let dc = (ci as i64 - cj as i64).rem_euclid(3);
            assert!(matches!((dr.min(3 - dr), dc.min(3 - dc)), (1, 0) | (0, 1)));
        }
        let (stat, dof) = chi_square(&g, 100_000, 5);
        let crit = statrs::distribution::ChiSquared::new(dof as f64).unwrap();
        use statrs::distribution::ContinuousCDF;
        assert!(1.0 - crit.cdf(stat) > 1e-3);
    }

    #[test]
    fn normalization_and_couplings() {
        for g in [
            Geometry::all_to_all(16).unwrap(),
            Geometry::power_law(17, 1.5).unwrap(),
            Geometry::power_law(32, 3.0).unwrap(),
            Geometry::lattice(6).unwrap(),
        ] {
            let pmf = g.pair_pmf().unwrap();
            let s: f64 = pmf.iter().map(|e| e.2).sum();
            assert!((s - 1.0).abs() < 1e-12);
            let j: f64 = g.couplings().unwrap().iter().map(|e| e.2).sum();
            assert!((j - g.num_qubits() as f64).abs() < 1e-9);
        }
        let uniform = Geometry::all_to_all(9).unwrap().pair_pmf().unwrap();
        assert!(uniform.iter().all(|e| (e.2 - uniform[0].2).abs() < 1e-15));
    }

    #[test]
    fn alpha_zero_and_all_to_all_share_separation_distribution() {
        for n in [8, 9, 12] {
            let sep = |g: Geometry| {
                let mut s = vec![0.0; n / 2 + 1];
                for (i, j, p) in g.pair_pmf().unwrap() {
                    s[(j - i).min(n - (j - i))] += p;
                }
                s
            };
            let a = sep(Geometry::all_to_all(n).unwrap());
            let b = sep(Geometry::power_law(n, 0.0).unwrap());
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn ab_sites_per_family() {
        assert_eq!(Geometry::power_law(32, 1.0).unwrap().ab_sites().unwrap(), (0, 16));
        assert_eq!(Geometry::lattice(8).unwrap().ab_sites().unwrap(), (0, 36));
        assert_eq!(Geometry::all_to_all(16).unwrap().ab_sites().unwrap(), (0, 8));
        assert!(matches!(
            Geometry::power_law(33, 1.0).unwrap().ab_sites(),
            Err(GeometryError::OddSize { .. })
        ));
        assert!(Geometry::lattice(5).unwrap().ab_sites().is_err());
    }

    #[test]
    fn invalid_geometries_rejected() {
        assert!(Geometry::all_to_all(1).is_err());
        assert!(Geometry::power_law(8, -1.0).is_err());
        assert!(Geometry::power_law(8, f64::NAN).is_err());
        assert!(Geometry::lattice(2).is_err());
    }

    #[test]
    fn json_descriptor_round_trip() {
        let g = Geometry::power_law(64, 1.75).unwrap();
        let s = serde_json::to_string(&g).unwrap();
        assert_eq!(s, r#"{"family":"power_law_1d","N":64,"alpha":1.75}"#);
        let back: Geometry = serde_json::from_str(&s).unwrap();
        assert_eq!(back, g);
        let l: Geometry = serde_json::from_str(r#"{"family":"lattice_2d","L":8}"#).unwrap();
        assert_eq!(l, Geometry::Lattice2D { l: 8 });
    }
}
