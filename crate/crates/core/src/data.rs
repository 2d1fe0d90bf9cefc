//! Dataset ingestion and leakage-free preprocessing: ANOVA-F feature
//! selection and min-max angle scaling fitted on the train pool only,
//! stratified seed-deterministic splits, and a synthetic two-class
//! Gaussian-mixture generator used as the desk-scale stand-in task.

use rand::RngExt;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{Error, Result};
use crate::rng::derive_rng;

pub const ANGLE_EPSILON: f64 = 1e-8;

/// A labeled tabular dataset. Labels are strictly binary.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<u8>,
    pub feature_names: Option<Vec<String>>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_features(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }
}

/// Split sizes plus the seed that freezes them for an entire run.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SplitSpec {
    pub test_size: usize,
    pub val_size: usize,
    pub seed: u64,
}

/// Index sets of the three disjoint splits.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Splits {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Fitted preprocessing state: which features survive the ANOVA filter and
/// the train-pool bounds used for angle scaling. Immutable once fitted.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Preprocessor {
    pub selected_indices: Vec<usize>,
    pub bounds: Vec<(f64, f64)>,
    pub epsilon: f64,
}

/// Parameters of the synthetic stand-in task: class means differ by
/// `margin` on the first `informative` coordinates, everything else is
/// unit Gaussian noise. Balanced and deterministic per seed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n: usize,
    pub d: usize,
    pub informative: usize,
    pub margin: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec { n: 1000, d: 8, informative: 4, margin: 2.0, seed: 0 }
    }
}

/// Load a CSV with a header row; every column except `label_column` must be
/// numeric. Rows with missing or non-finite values are dropped; the second
/// return value counts them.
pub fn load_csv(path: &Path, label_column: &str) -> Result<(Dataset, usize)> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| Error::Data(format!("cannot open {}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| Error::Data(format!("bad header: {e}")))?
        .clone();
    let label_idx = headers
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| Error::Data(format!("label column '{label_column}' not found")))?;
    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != label_idx)
        .map(|(_, h)| h.to_string())
        .collect();

    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut dropped = 0usize;
    for record in reader.records() {
        let record = record.map_err(|e| Error::Data(format!("bad row: {e}")))?;
        let mut row = Vec::with_capacity(feature_names.len());
        let mut ok = record.len() == feature_names.len() + 1;
        let mut label: Option<u8> = None;
        for (i, field) in record.iter().enumerate() {
            if i == label_idx {
                match field.trim().parse::<f64>() {
                    Ok(v) if v == 0.0 => label = Some(0),
                    Ok(v) if v == 1.0 => label = Some(1),
                    Ok(v) => {
                        return Err(Error::Data(format!("non-binary label value {v}")));
                    }
                    Err(_) => ok = false,
                }
            } else {
                match field.trim().parse::<f64>() {
                    Ok(v) if v.is_finite() => row.push(v),
                    _ => ok = false,
                }
            }
        }
        match (ok, label) {
            (true, Some(y)) => {
                features.push(row);
                labels.push(y);
            }
            _ => dropped += 1,
        }
    }
    Ok((Dataset { features, labels, feature_names: Some(feature_names) }, dropped))
}

/// Generate the balanced Gaussian-mixture task.
pub fn synth_generate(spec: &SynthSpec) -> Result<Dataset> {
    if spec.informative > spec.d {
        return Err(Error::Data(format!(
            "informative = {} exceeds dimensionality {}",
            spec.informative, spec.d
        )));
    }
    let mut rng = derive_rng(spec.seed, "synth", &[]);
    let n0 = spec.n / 2;
    let mut features = Vec::with_capacity(spec.n);
    let mut labels = Vec::with_capacity(spec.n);
    for i in 0..spec.n {
        let y = u8::from(i >= n0);
        let shift = if y == 0 { -spec.margin / 2.0 } else { spec.margin / 2.0 };
        let row: Vec<f64> = (0..spec.d)
            .map(|k| {
                let noise: f64 = StandardNormal.sample(&mut rng);
                if k < spec.informative {
                    shift + noise
                } else {
                    noise
                }
            })
            .collect();
        features.push(row);
        labels.push(y);
    }
    // seeded shuffle so class blocks do not survive into downstream code
    let mut order: Vec<usize> = (0..spec.n).collect();
    for i in (1..order.len()).rev() {
        order.swap(i, rng.random_range(0..=i));
    }
    let features = order.iter().map(|&i| features[i].clone()).collect();
    let labels = order.iter().map(|&i| labels[i]).collect();
    Ok(Dataset { features, labels, feature_names: None })
}

/// One-way two-group ANOVA F statistic per feature. Zero within-group
/// variance with non-zero between-group spread gives +inf (ranks first);
/// a feature constant everywhere gives 0.
pub fn anova_f_scores(features: &[Vec<f64>], labels: &[u8]) -> Result<Vec<f64>> {
    let n = labels.len();
    if n < 3 {
        return Err(Error::Data("need at least 3 samples for ANOVA".into()));
    }
    let n1 = labels.iter().filter(|&&y| y == 1).count();
    let n0 = n - n1;
    if n0 == 0 || n1 == 0 {
        return Err(Error::Data("ANOVA needs both classes present".into()));
    }
    let d = features[0].len();
    let mut scores = Vec::with_capacity(d);
    for k in 0..d {
        let (mut s0, mut s1) = (0.0, 0.0);
        for (row, &y) in features.iter().zip(labels) {
            if y == 0 {
                s0 += row[k];
            } else {
                s1 += row[k];
            }
        }
        let m0 = s0 / n0 as f64;
        let m1 = s1 / n1 as f64;
        let m = (s0 + s1) / n as f64;
        let ssb = n0 as f64 * (m0 - m).powi(2) + n1 as f64 * (m1 - m).powi(2);
        let mut ssw = 0.0;
        for (row, &y) in features.iter().zip(labels) {
            let mu = if y == 0 { m0 } else { m1 };
            ssw += (row[k] - mu).powi(2);
        }
        let msb = ssb; // df_between = 1
        let msw = ssw / (n - 2) as f64;
        let f = if msw > 0.0 {
            msb / msw
        } else if msb > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        scores.push(f);
    }
    Ok(scores)
}

/// Indices of the top-K features by F score, ties broken by lower index.
/// Returned sorted ascending, so downstream qubit assignment is stable.
pub fn anova_f_select(features: &[Vec<f64>], labels: &[u8], k: usize) -> Result<Vec<usize>> {
    let scores = anova_f_scores(features, labels)?;
    if k > scores.len() {
        return Err(Error::Data(format!("k = {k} exceeds {} features", scores.len())));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b].partial_cmp(&scores[a]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
    });
    let mut out: Vec<usize> = order.into_iter().take(k).collect();
    out.sort_unstable();
    Ok(out)
}

impl Preprocessor {
    /// Fit on train-pool rows only: ANOVA top-K selection plus per-feature
    /// min/max bounds of the selected columns.
    pub fn fit(features: &[Vec<f64>], labels: &[u8], k: usize) -> Result<Self> {
        let selected = anova_f_select(features, labels, k)?;
        let bounds = selected
            .iter()
            .map(|&idx| {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for row in features {
                    lo = lo.min(row[idx]);
                    hi = hi.max(row[idx]);
                }
                (lo, hi)
            })
            .collect();
        Ok(Preprocessor { selected_indices: selected, bounds, epsilon: ANGLE_EPSILON })
    }

    /// Scale a full-width feature row into angles:
    /// `x' = pi (x - a) / (b - a + eps)`, clamped into [0, pi] for values
    /// outside the train-pool range.
    pub fn angle_scale(&self, row: &[f64]) -> Vec<f64> {
        self.selected_indices
            .iter()
            .zip(&self.bounds)
            .map(|(&idx, &(a, b))| {
                let x = std::f64::consts::PI * (row[idx] - a) / (b - a + self.epsilon);
                x.clamp(0.0, std::f64::consts::PI)
            })
            .collect()
    }

    pub fn transform(&self, features: &[Vec<f64>]) -> Vec<Vec<f64>> {
        features.iter().map(|r| self.angle_scale(r)).collect()
    }
}

/// Stratified, seed-deterministic, disjoint test/val/train-pool splits.
/// Per-class allocations use proportional rounding so class ratios stay
/// within one sample of the global ratio.
pub fn make_splits(dataset: &Dataset, spec: &SplitSpec) -> Result<Splits> {
    let n = dataset.len();
    if spec.test_size + spec.val_size >= n {
        return Err(Error::Data(format!(
            "test {} + val {} must be smaller than N = {n}",
            spec.test_size, spec.val_size
        )));
    }
    let mut by_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, &y) in dataset.labels.iter().enumerate() {
        by_class[y as usize].push(i);
    }
    if by_class[0].is_empty() || by_class[1].is_empty() {
        return Err(Error::Data("both classes must be present".into()));
    }
    let mut rng = derive_rng(spec.seed, "splits", &[]);
    for class in &mut by_class {
        for i in (1..class.len()).rev() {
            class.swap(i, rng.random_range(0..=i));
        }
    }

    // proportional floor allocation; the fractional remainder goes to
    // class 0 only when its fraction dominates
    let alloc = |want: usize, avail: [usize; 2]| -> Result<[usize; 2]> {
        let total = (avail[0] + avail[1]) as f64;
        let exact0 = want as f64 * avail[0] as f64 / total;
        let mut take = [exact0.floor() as usize, 0usize];
        take[1] = want - take[0];
        let frac0 = exact0 - exact0.floor();
        if frac0 > 0.5 && take[0] + 1 <= avail[0] && take[1] >= 1 {
            take[0] += 1;
            take[1] -= 1;
        }
        if take[0] > avail[0] || take[1] > avail[1] {
            return Err(Error::Data("split sizes infeasible for class balance".into()));
        }
        if want > 0 && (take[0] == 0 || take[1] == 0) {
            return Err(Error::Data("split too small to hold both classes".into()));
        }
        Ok(take)
    };

    let avail = [by_class[0].len(), by_class[1].len()];
    let test_take = alloc(spec.test_size, avail)?;
    let remaining = [avail[0] - test_take[0], avail[1] - test_take[1]];
    let val_take = alloc(spec.val_size, remaining)?;
    if remaining[0] - val_take[0] == 0 || remaining[1] - val_take[1] == 0 {
        return Err(Error::Data("train pool lost a class".into()));
    }

    let mut test = Vec::with_capacity(spec.test_size);
    let mut val = Vec::with_capacity(spec.val_size);
    let mut train = Vec::new();
    for c in 0..2 {
        let class = &by_class[c];
        test.extend_from_slice(&class[..test_take[c]]);
        val.extend_from_slice(&class[test_take[c]..test_take[c] + val_take[c]]);
        train.extend_from_slice(&class[test_take[c] + val_take[c]..]);
    }
    test.sort_unstable();
    val.sort_unstable();
    train.sort_unstable();
    Ok(Splits { train, val, test })
}

/// Gather rows of a dataset by index.
pub fn gather(dataset: &Dataset, idx: &[usize]) -> (Vec<Vec<f64>>, Vec<u8>) {
    let features = idx.iter().map(|&i| dataset.features[i].clone()).collect();
    let labels = idx.iter().map(|&i| dataset.labels[i]).collect();
    (features, labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn synth_is_balanced_and_deterministic() {
        let spec = SynthSpec { n: 100, d: 6, informative: 3, margin: 2.0, seed: 9 };
        let ds = synth_generate(&spec).unwrap();
        assert_eq!(ds.len(), 100);
        let ones: usize = ds.labels.iter().map(|&y| y as usize).sum();
        assert_eq!(ones, 50);
        let ds2 = synth_generate(&spec).unwrap();
        assert_eq!(ds.features, ds2.features);
        assert_eq!(ds.labels, ds2.labels);
    }

    /// Linear discriminant along the class-mean direction; the independent
    /// oracle for the synthetic task's learnable headroom.
    pub fn linear_oracle_accuracy(ds: &Dataset) -> f64 {
        let d = ds.num_features();
        let mut mean0 = vec![0.0; d];
        let mut mean1 = vec![0.0; d];
        let (mut n0, mut n1) = (0.0, 0.0);
        for (row, &y) in ds.features.iter().zip(&ds.labels) {
            let (m, n) = if y == 0 { (&mut mean0, &mut n0) } else { (&mut mean1, &mut n1) };
            for (mi, xi) in m.iter_mut().zip(row) {
                *mi += xi;
            }
            *n += 1.0;
        }
        mean0.iter_mut().for_each(|x| *x /= n0);
        mean1.iter_mut().for_each(|x| *x /= n1);
        let w: Vec<f64> = mean1.iter().zip(&mean0).map(|(a, b)| a - b).collect();
        let mid: Vec<f64> = mean1.iter().zip(&mean0).map(|(a, b)| (a + b) / 2.0).collect();
        let thresh: f64 = w.iter().zip(&mid).map(|(wi, mi)| wi * mi).sum();
        let mut correct = 0usize;
        for (row, &y) in ds.features.iter().zip(&ds.labels) {
            let score: f64 = w.iter().zip(row).map(|(wi, xi)| wi * xi).sum();
            let pred = u8::from(score > thresh);
            correct += usize::from(pred == y);
        }
        correct as f64 / ds.len() as f64
    }

    #[test]
    fn synth_margin_controls_separability() {
        let strong =
            synth_generate(&SynthSpec { n: 2000, d: 8, informative: 8, margin: 3.0, seed: 1 })
                .unwrap();
        assert!(linear_oracle_accuracy(&strong) >= 0.95);

        let none =
            synth_generate(&SynthSpec { n: 2000, d: 8, informative: 0, margin: 3.0, seed: 1 })
                .unwrap();
        let acc = linear_oracle_accuracy(&none);
        assert!((acc - 0.5).abs() < 0.06, "no signal => chance accuracy, got {acc}");
    }

    #[test]
    fn anova_matches_brute_force_on_toy_set() {
        // 10 samples, 2 features; brute-force one-way ANOVA per feature
        let features = vec![
            vec![1.0, 5.0],
            vec![1.2, 4.0],
            vec![0.8, 6.0],
            vec![1.1, 5.5],
            vec![0.9, 4.5],
            vec![3.0, 5.2],
            vec![3.2, 4.8],
            vec![2.8, 5.9],
            vec![3.1, 4.2],
            vec![2.9, 5.1],
        ];
        let labels = vec![0, 0, 0, 0, 0, 1, 1, 1, 1, 1];
        let scores = anova_f_scores(&features, &labels).unwrap();

        for k in 0..2 {
            let g0: Vec<f64> = (0..5).map(|i| features[i][k]).collect();
            let g1: Vec<f64> = (5..10).map(|i| features[i][k]).collect();
            let m0 = g0.iter().sum::<f64>() / 5.0;
            let m1 = g1.iter().sum::<f64>() / 5.0;
            let m = (m0 + m1) / 2.0;
            let ssb = 5.0 * (m0 - m).powi(2) + 5.0 * (m1 - m).powi(2);
            let ssw: f64 = g0.iter().map(|x| (x - m0).powi(2)).sum::<f64>()
                + g1.iter().map(|x| (x - m1).powi(2)).sum::<f64>();
            let want = ssb / (ssw / 8.0);
            assert!((scores[k] - want).abs() < 1e-10, "feature {k}");
        }
        assert!(scores[0] > scores[1], "feature 0 separates the classes");
    }

    #[test]
    fn anova_degenerate_features() {
        let features = vec![vec![2.0, 0.0], vec![2.0, 0.0], vec![2.0, 1.0], vec![2.0, 1.0]];
        let labels = vec![0, 0, 1, 1];
        let scores = anova_f_scores(&features, &labels).unwrap();
        assert_eq!(scores[0], 0.0, "constant feature scores zero");
        assert!(scores[1].is_infinite(), "label-equal feature has zero within variance");
        let sel = anova_f_select(&features, &labels, 1).unwrap();
        assert_eq!(sel, vec![1]);
    }

    #[test]
    fn angle_scaling_boundaries() {
        let pre = Preprocessor {
            selected_indices: vec![0],
            bounds: vec![(0.0, 2.0)],
            epsilon: ANGLE_EPSILON,
        };
        assert_eq!(pre.angle_scale(&[0.0])[0], 0.0);
        assert!((pre.angle_scale(&[2.0])[0] - std::f64::consts::PI).abs() < 1e-7);
        assert!((pre.angle_scale(&[1.0])[0] - std::f64::consts::FRAC_PI_2).abs() < 1e-7);
        // clamped outside the train range
        assert_eq!(pre.angle_scale(&[99.0])[0], std::f64::consts::PI);
        assert_eq!(pre.angle_scale(&[-99.0])[0], 0.0);
    }

    #[test]
    fn splits_are_stratified_and_deterministic() {
        let ds = synth_generate(&SynthSpec { n: 100, d: 4, informative: 2, margin: 1.0, seed: 3 })
            .unwrap();
        let spec = SplitSpec { test_size: 20, val_size: 10, seed: 11 };
        let s1 = make_splits(&ds, &spec).unwrap();
        let s2 = make_splits(&ds, &spec).unwrap();
        assert_eq!(s1.test, s2.test);
        assert_eq!(s1.val, s2.val);
        assert_eq!(s1.train, s2.train);
        assert_eq!((s1.test.len(), s1.val.len(), s1.train.len()), (20, 10, 70));

        // disjoint, and both classes in every split
        let mut all: Vec<usize> = s1.test.iter().chain(&s1.val).chain(&s1.train).copied().collect();
        all.sort_unstable();
        all.dedup();
        assert_eq!(all.len(), 100);
        for split in [&s1.test, &s1.val, &s1.train] {
            let ones: usize = split.iter().map(|&i| ds.labels[i] as usize).sum();
            assert!(ones > 0 && ones < split.len());
        }
    }

    #[test]
    fn split_ratio_within_one_sample() {
        let ds = synth_generate(&SynthSpec { n: 1000, d: 3, informative: 1, margin: 1.0, seed: 5 })
            .unwrap();
        let spec = SplitSpec { test_size: 200, val_size: 100, seed: 2 };
        let s = make_splits(&ds, &spec).unwrap();
        let global = ds.labels.iter().map(|&y| y as f64).sum::<f64>() / ds.len() as f64;
        for split in [&s.test, &s.val, &s.train] {
            let ones: f64 = split.iter().map(|&i| ds.labels[i] as f64).sum();
            let want = global * split.len() as f64;
            assert!((ones - want).abs() <= 1.0, "{ones} vs {want}");
        }
    }

    #[test]
    fn infeasible_split_rejected() {
        let ds = synth_generate(&SynthSpec { n: 30, d: 2, informative: 1, margin: 1.0, seed: 0 })
            .unwrap();
        assert!(make_splits(&ds, &SplitSpec { test_size: 20, val_size: 10, seed: 0 }).is_err());
    }

    #[test]
    fn leakage_freedom() {
        let ds = synth_generate(&SynthSpec { n: 200, d: 6, informative: 3, margin: 2.0, seed: 7 })
            .unwrap();
        let spec = SplitSpec { test_size: 40, val_size: 20, seed: 1 };
        let splits = make_splits(&ds, &spec).unwrap();
        let (train_x, train_y) = gather(&ds, &splits.train);
        let pre = Preprocessor::fit(&train_x, &train_y, 3).unwrap();

        // perturbing val/test rows never changes the fitted preprocessor
        let mut tampered = ds.clone();
        for &i in splits.val.iter().chain(&splits.test) {
            for x in &mut tampered.features[i] {
                *x += 1000.0;
            }
        }
        let (tx, ty) = gather(&tampered, &splits.train);
        let pre2 = Preprocessor::fit(&tx, &ty, 3).unwrap();
        assert_eq!(pre.selected_indices, pre2.selected_indices);
        assert_eq!(pre.bounds, pre2.bounds);
    }

    #[test]
    fn csv_ingestion() {
        let dir = std::env::temp_dir().join(format!("quasar_csv_{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("toy.csv");
        let mut f = std::fs::File::create(&path).unwrap();
        writeln!(f, "a,b,label").unwrap();
        writeln!(f, "1.0,2.0,0").unwrap();
        writeln!(f, "3.0,4.0,1").unwrap();
        writeln!(f, "5.0,6.0,1").unwrap();
        drop(f);
        let (ds, dropped) = load_csv(&path, "label").unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(dropped, 0);
        assert_eq!(ds.feature_names.as_deref(), Some(&["a".to_string(), "b".to_string()][..]));

        let mut f = std::fs::File::create(&path).unwrap();
        writeln!(f, "a,b,label").unwrap();
        writeln!(f, "1.0,2.0,0").unwrap();
        writeln!(f, "NaN,4.0,1").unwrap();
        writeln!(f, "5.0,6.0,1").unwrap();
        drop(f);
        let (ds, dropped) = load_csv(&path, "label").unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(dropped, 1);

        let mut f = std::fs::File::create(&path).unwrap();
        writeln!(f, "a,b,label").unwrap();
        writeln!(f, "1.0,2.0,2").unwrap();
        drop(f);
        assert!(load_csv(&path, "label").is_err(), "non-binary label");
        assert!(load_csv(&path, "missing").is_err());
        std::fs::remove_dir_all(&dir).ok();
    }
}
