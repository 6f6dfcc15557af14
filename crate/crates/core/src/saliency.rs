//! Saliency maps, explanation sets, and top-k index selection.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::StreamRng;
use crate::synthgen::GroundTruthMask;

/// Per-timestep importance weights for one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaliencyMap(Vec<f64>);

impl SaliencyMap {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if let Some(i) = weights.iter().position(|w| !w.is_finite()) {
            return Err(Error::InvalidInput(format!("saliency weight {i} is not finite")));
        }
        Ok(SaliencyMap(weights))
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Indices ordered by descending weight; equal weights keep ascending index order.
    pub fn ranking(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.0.len()).collect();
        // stable sort keeps lower indices first among ties
        order.sort_by(|&a, &b| self.0[b].total_cmp(&self.0[a]));
        order
    }

    /// The `m` highest-weighted indices, returned in ascending index order.
    pub fn top_m(&self, m: usize) -> Vec<usize> {
        let mut top: Vec<usize> = self.ranking().into_iter().take(m).collect();
        top.sort_unstable();
        top
    }
}

/// One saliency map per test instance, in test-set order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationSet {
    pub method_name: String,
    maps: Vec<SaliencyMap>,
}

impl ExplanationSet {
    pub fn new(method_name: impl Into<String>, maps: Vec<SaliencyMap>) -> Result<Self> {
        let method_name = method_name.into();
        if let Some(first) = maps.first() {
            let d = first.len();
            if let Some((i, m)) = maps.iter().enumerate().find(|(_, m)| m.len() != d) {
                return Err(Error::dimension(
                    format!("explanation {method_name:?} map {i} length"),
                    d,
                    m.len(),
                ));
            }
        }
        Ok(ExplanationSet { method_name, maps })
    }

    pub fn maps(&self) -> &[SaliencyMap] {
        &self.maps
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    pub fn series_len(&self) -> usize {
        self.maps.first().map_or(0, SaliencyMap::len)
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.method_name = name.into();
        self
    }

    /// Check alignment with a test set of `n` instances of length `d`.
    pub fn check_shape(&self, n: usize, d: usize) -> Result<()> {
        if self.len() != n || (n > 0 && self.series_len() != d) {
            return Err(Error::dimension(
                format!("explanation {:?} shape (instances x length)", self.method_name),
                format!("{n}x{d}"),
                format!("{}x{}", self.len(), self.series_len()),
            ));
        }
        Ok(())
    }

    /// Replace every weight by its magnitude.
    pub fn absolutize(&self) -> ExplanationSet {
        ExplanationSet {
            method_name: self.method_name.clone(),
            maps: self
                .maps
                .iter()
                .map(|m| SaliencyMap(m.0.iter().map(|w| w.abs()).collect()))
                .collect(),
        }
    }

    /// Headerless CSV, one row per instance.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let write = |w: &mut BufWriter<File>| -> std::io::Result<()> {
            for m in &self.maps {
                let row: Vec<String> = m.0.iter().map(|v| v.to_string()).collect();
                writeln!(w, "{}", row.join(","))?;
            }
            w.flush()
        };
        write(&mut w).map_err(|e| Error::io(path, e))
    }
}

/// Uniform(0, 1) weights, the lower-bound reference explanation.
pub fn random_explanation(d: usize, n: usize, rng: &mut StreamRng) -> ExplanationSet {
    let maps = (0..n)
        .map(|_| SaliencyMap((0..d).map(|_| rng.random::<f64>()).collect()))
        .collect();
    ExplanationSet {
        method_name: "Random".to_string(),
        maps,
    }
}

/// Weight 1 on ground-truth salient steps and 0 elsewhere, for every instance.
pub fn oracle_explanation(mask: &GroundTruthMask, n: usize) -> ExplanationSet {
    let map = SaliencyMap(mask.salient().iter().map(|&s| if s { 1.0 } else { 0.0 }).collect());
    ExplanationSet {
        method_name: "Oracle".to_string(),
        maps: vec![map; n],
    }
}

/// Read a headerless CSV of `expected_n` rows by `expected_d` reals.
///
/// The method name is the file stem.
pub fn load_explanations(path: impl AsRef<Path>, expected_n: usize, expected_d: usize) -> Result<ExplanationSet> {
    let path = path.as_ref();
    let source = path.display().to_string();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(file);
    let mut maps = Vec::with_capacity(expected_n);
    for record in rdr.records() {
        let record = record.map_err(|e| Error::Format {
            path: source.clone(),
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() == 1 && record[0].trim().is_empty() {
            continue;
        }
        if record.len() != expected_d {
            return Err(Error::dimension(
                format!("{source}:{line} column count"),
                expected_d,
                record.len(),
            ));
        }
        let weights = record
            .iter()
            .map(|f| {
                f.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Parse {
                        path: source.clone(),
                        line,
                        value: f.to_string(),
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        maps.push(SaliencyMap(weights));
    }
    if maps.len() != expected_n {
        return Err(Error::dimension(format!("{source} row count"), expected_n, maps.len()));
    }
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "explanation".to_string());
    ExplanationSet::new(name, maps)
}

/// Indices perturbed at threshold `k` percent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopKMask {
    /// Ascending, unique.
    pub indices: Vec<usize>,
    pub k: u32,
}

impl TopKMask {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// `round(k * d / 100)` with halves rounded up, clamped to `[0, d]`.
pub fn top_k_count(k: u32, d: usize) -> usize {
    let k = k.min(100) as usize;
    ((k * d + 50) / 100).min(d)
}

/// The top `k` percent of time steps by weight.
pub fn top_k_mask(map: &SaliencyMap, k: u32) -> TopKMask {
    TopKMask {
        indices: map.top_m(top_k_count(k, map.len())),
        k,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use proptest::prelude::*;

    fn map(w: &[f64]) -> SaliencyMap {
        SaliencyMap::new(w.to_vec()).unwrap()
    }

    #[test]
    fn top_k_examples() {
        let m = map(&[0.1, 0.9, 0.5, 0.2]);
        assert_eq!(top_k_mask(&m, 50).indices, vec![1, 2]);
        assert!(top_k_mask(&m, 0).indices.is_empty());
        assert_eq!(top_k_mask(&m, 100).indices, vec![0, 1, 2, 3]);
        let flat = map(&[1.0; 8]);
        assert_eq!(top_k_mask(&flat, 25).indices, vec![0, 1]);
    }

    #[test]
    fn count_rounds_half_up() {
        assert_eq!(top_k_count(10, 5), 1); // 0.5 -> 1
        assert_eq!(top_k_count(30, 5), 2); // 1.5 -> 2
        assert_eq!(top_k_count(10, 50), 5);
        assert_eq!(top_k_count(100, 50), 50);
        assert_eq!(top_k_count(0, 50), 0);
    }

    #[test]
    fn random_range_and_determinism() {
        let a = random_explanation(50, 100, &mut rng::seeded(0));
        let b = random_explanation(50, 100, &mut rng::seeded(0));
        assert_eq!(a, b);
        assert_eq!(a.len(), 100);
        assert!(a
            .maps()
            .iter()
            .flat_map(|m| m.weights())
            .all(|&w| (0.0..1.0).contains(&w)));
    }

    #[test]
    fn random_weights_are_uniform() {
        // Kolmogorov-Smirnov against U(0,1), 1% critical value 1.63 / sqrt(n).
        let set = random_explanation(50, 100, &mut rng::seeded(42));
        let mut w: Vec<f64> = set.maps().iter().flat_map(|m| m.weights().to_vec()).collect();
        w.sort_by(f64::total_cmp);
        let n = w.len() as f64;
        let ks = w
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let lo = x - i as f64 / n;
                let hi = (i + 1) as f64 / n - x;
                lo.max(hi)
            })
            .fold(0.0, f64::max);
        assert!(ks < 1.63 / n.sqrt(), "KS statistic {ks}");
    }

    #[test]
    fn oracle_matches_mask() {
        let mask = GroundTruthMask::from_indices(5, &[2, 3]).unwrap();
        let o = oracle_explanation(&mask, 3);
        assert_eq!(o.len(), 3);
        for m in o.maps() {
            assert_eq!(m.weights(), &[0.0, 0.0, 1.0, 1.0, 0.0]);
            assert_eq!(top_k_mask(m, 40).indices, mask.indices());
        }
    }

    #[test]
    fn absolutize_examples() {
        let set = ExplanationSet::new("x", vec![map(&[-2.0, 1.0, 0.0])]).unwrap();
        assert_eq!(set.absolutize().maps()[0].weights(), &[2.0, 1.0, 0.0]);
        let pos = ExplanationSet::new("x", vec![map(&[0.5, 1.0])]).unwrap();
        assert_eq!(pos.absolutize(), pos);
    }

    #[test]
    fn csv_round_trip_and_shape_errors() {
        let dir = tempfile::tempdir().unwrap();
        let set = random_explanation(50, 100, &mut rng::seeded(3));
        let path = dir.path().join("Random.csv");
        set.save(&path).unwrap();
        let back = load_explanations(&path, 100, 50).unwrap();
        assert_eq!(back.method_name, "Random");
        for (a, b) in set.maps().iter().zip(back.maps()) {
            for (x, y) in a.weights().iter().zip(b.weights()) {
                assert!((x - y).abs() <= 1e-9);
            }
        }
        assert!(matches!(load_explanations(&path, 99, 50), Err(Error::Dimension { .. })));
        assert!(matches!(
            load_explanations(&path, 100, 49),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn non_finite_weight_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "0.1,inf\n0.2,0.3\n").unwrap();
        assert!(matches!(load_explanations(&path, 2, 2), Err(Error::Parse { .. })));
    }

    proptest! {
        #[test]
        fn nested_masks(weights in prop::collection::vec(-3i32..3, 2..40), k1 in 0u32..=100, k2 in 0u32..=100) {
            let m = map(&weights.iter().map(|&w| w as f64).collect::<Vec<_>>());
            let (lo, hi) = if k1 <= k2 { (k1, k2) } else { (k2, k1) };
            let small = top_k_mask(&m, lo);
            let big = top_k_mask(&m, hi);
            prop_assert_eq!(small.len(), top_k_count(lo, m.len()));
            prop_assert!(small.indices.iter().all(|i| big.indices.contains(i)));
        }

        #[test]
        fn rank_only(weights in prop::collection::vec(-10.0f64..10.0, 2..40), k in 0u32..=100) {
            let m = map(&weights);
            let t = map(&weights.iter().map(|w| (w * 0.5).exp() + 3.0).collect::<Vec<_>>());
            prop_assert_eq!(top_k_mask(&m, k), top_k_mask(&t, k));
        }

        #[test]
        fn absolutize_idempotent(weights in prop::collection::vec(-10.0f64..10.0, 2..20)) {
            let set = ExplanationSet::new("p", vec![map(&weights)]).unwrap();
            let once = set.absolutize();
            prop_assert_eq!(once.absolutize(), once);
        }
    }
}
