use super::StatsError;

/// Rows are gold labels, columns are predictions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    labels: Vec<String>,
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new<S: AsRef<str>>(labels: &[S]) -> Self {
        let n = labels.len();
        Self {
            labels: labels.iter().map(|l| l.as_ref().to_string()).collect(),
            counts: vec![vec![0; n]; n],
        }
    }

    pub fn from_pairs<S: AsRef<str>, G: AsRef<str>, P: AsRef<str>>(
        labels: &[S],
        golds: &[G],
        preds: &[P],
    ) -> Result<Self, StatsError> {
        if golds.len() != preds.len() {
            return Err(StatsError::LengthMismatch {
                golds: golds.len(),
                preds: preds.len(),
            });
        }
        let mut m = Self::new(labels);
        for (g, p) in golds.iter().zip(preds) {
            m.add(g.as_ref(), p.as_ref())?;
        }
        Ok(m)
    }

    fn index(&self, label: &str) -> Result<usize, StatsError> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| StatsError::UnknownLabel(label.to_string()))
    }

    pub fn add(&mut self, gold: &str, pred: &str) -> Result<(), StatsError> {
        let (g, p) = (self.index(gold)?, self.index(pred)?);
        self.counts[g][p] += 1;
        Ok(())
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn count(&self, gold: usize, pred: usize) -> u64 {
        self.counts[gold][pred]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    fn support(&self, class: usize) -> u64 {
        self.counts[class].iter().sum()
    }

    fn predicted(&self, class: usize) -> u64 {
        self.counts.iter().map(|row| row[class]).sum()
    }

    /// F1 of one class; 0 when precision + recall is 0.
    pub fn class_f1(&self, class: usize) -> f64 {
        let tp = self.counts[class][class] as f64;
        let ratio = |num: f64, den: u64| if den == 0 { 0.0 } else { num / den as f64 };
        let precision = ratio(tp, self.predicted(class));
        let recall = ratio(tp, self.support(class));
        if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        }
    }

    /// Per-class F1 averaged with gold-support weights.
    pub fn weighted_f1(&self) -> Result<f64, StatsError> {
        let total = self.total();
        if total == 0 {
            return Err(StatsError::Empty);
        }
        let sum: f64 = (0..self.labels.len())
            .map(|c| self.support(c) as f64 * self.class_f1(c))
            .sum();
        Ok(sum / total as f64)
    }
}

pub fn weighted_f1<S: AsRef<str>, G: AsRef<str>, P: AsRef<str>>(
    golds: &[G],
    preds: &[P],
    labels: &[S],
) -> Result<f64, StatsError> {
    if golds.is_empty() && preds.is_empty() {
        return Err(StatsError::Empty);
    }
    ConfusionMatrix::from_pairs(labels, golds, preds)?.weighted_f1()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Brute force: for every class count tp/fp/fn by scanning the pairs.
    fn oracle(golds: &[usize], preds: &[usize], k: usize) -> f64 {
        let n = golds.len() as f64;
        (0..k)
            .map(|c| {
                let (mut tp, mut fp, mut fn_) = (0.0, 0.0, 0.0);
                for (&g, &p) in golds.iter().zip(preds) {
                    match (g == c, p == c) {
                        (true, true) => tp += 1.0,
                        (false, true) => fp += 1.0,
                        (true, false) => fn_ += 1.0,
                        _ => {}
                    }
                }
                let support = tp + fn_;
                let f1 = if tp == 0.0 { 0.0 } else { 2.0 * tp / (2.0 * tp + fp + fn_) };
                support / n * f1
            })
            .sum()
    }

    #[test]
    fn perfect_prediction() {
        let g = ["a", "b", "b", "c"];
        assert_eq!(weighted_f1(&g, &g, &["a", "b", "c"]).unwrap(), 1.0);
    }

    #[test]
    fn hand_computed_two_thirds() {
        let f = weighted_f1(&["p", "p", "n"], &["p", "n", "n"], &["p", "n"]).unwrap();
        assert!((f - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn errors() {
        let empty: [&str; 0] = [];
        assert_eq!(weighted_f1(&empty, &empty, &["a"]), Err(StatsError::Empty));
        assert!(matches!(
            weighted_f1(&["a"], &["a", "a"], &["a"]),
            Err(StatsError::LengthMismatch { .. })
        ));
        assert_eq!(
            weighted_f1(&["a"], &["z"], &["a"]),
            Err(StatsError::UnknownLabel("z".into()))
        );
    }

    #[test]
    fn equals_macro_f1_when_supports_equal() {
        let golds = ["a", "a", "b", "b", "c", "c"];
        let preds = ["a", "b", "b", "c", "c", "a"];
        let labels = ["a", "b", "c"];
        let m = ConfusionMatrix::from_pairs(&labels, &golds, &preds).unwrap();
        let macro_f1 = (0..3).map(|c| m.class_f1(c)).sum::<f64>() / 3.0;
        assert!((m.weighted_f1().unwrap() - macro_f1).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn matches_brute_force(pairs in proptest::collection::vec((0usize..4, 0usize..4), 1..30)) {
            let labels = ["w", "x", "y", "z"];
            let golds: Vec<&str> = pairs.iter().map(|p| labels[p.0]).collect();
            let preds: Vec<&str> = pairs.iter().map(|p| labels[p.1]).collect();
            let g: Vec<usize> = pairs.iter().map(|p| p.0).collect();
            let p: Vec<usize> = pairs.iter().map(|p| p.1).collect();
            let f = weighted_f1(&golds, &preds, &labels).unwrap();
            prop_assert!((f - oracle(&g, &p, 4)).abs() <= 1e-12);
            prop_assert!((0.0..=1.0).contains(&f));
        }

        #[test]
        fn permutation_invariant(pairs in proptest::collection::vec((0usize..3, 0usize..3), 1..20), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let labels = ["a", "b", "c"];
            let mut shuffled = pairs.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let score = |ps: &[(usize, usize)]| {
                let g: Vec<&str> = ps.iter().map(|p| labels[p.0]).collect();
                let q: Vec<&str> = ps.iter().map(|p| labels[p.1]).collect();
                weighted_f1(&g, &q, &labels).unwrap()
            };
            prop_assert!((score(&pairs) - score(&shuffled)).abs() <= 1e-12);
        }
    }
}
