//! Accuracy (`T / N`), confusion matrices and comparison tables.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{predict, IanParams, Instance};
use crate::NUM_CLASSES;

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    /// Row label in comparison tables, usually the model variant.
    pub variant: String,
    /// Column label in comparison tables, e.g. `restaurants`.
    pub dataset: String,
    pub correct: usize,
    pub total: usize,
    pub accuracy: f64,
    /// `confusion[gold][pred]`.
    pub confusion: [[usize; NUM_CLASSES]; NUM_CLASSES],
}

impl EvalReport {
    pub fn with_labels(mut self, variant: impl Into<String>, dataset: impl Into<String>) -> Self {
        self.variant = variant.into();
        self.dataset = dataset.into();
        self
    }

    /// Unweighted mean of per-class F1. Not part of the headline metric;
    /// classes with no gold and no predicted instances are skipped.
    pub fn macro_f1(&self) -> f64 {
        let mut sum = 0.0;
        let mut classes = 0;
        for c in 0..NUM_CLASSES {
            let tp = self.confusion[c][c] as f64;
            let gold: usize = self.confusion[c].iter().sum();
            let pred: usize = (0..NUM_CLASSES).map(|g| self.confusion[g][c]).sum();
            if gold == 0 && pred == 0 {
                continue;
            }
            classes += 1;
            if tp > 0.0 {
                let p = tp / pred as f64;
                let r = tp / gold as f64;
                sum += 2.0 * p * r / (p + r);
            }
        }
        if classes == 0 {
            0.0
        } else {
            sum / classes as f64
        }
    }
}

pub fn accuracy(preds: &[usize], golds: &[usize]) -> Result<EvalReport> {
    if preds.len() != golds.len() {
        return Err(Error::shape("accuracy", format!("{} predictions", preds.len()), format!("{} gold labels", golds.len())));
    }
    if preds.is_empty() {
        return Err(Error::Empty("evaluation set"));
    }
    let mut confusion = [[0usize; NUM_CLASSES]; NUM_CLASSES];
    for (&p, &g) in preds.iter().zip(golds) {
        if p >= NUM_CLASSES || g >= NUM_CLASSES {
            return Err(Error::OutOfRange { what: "class", index: p.max(g), size: NUM_CLASSES });
        }
        confusion[g][p] += 1;
    }
    let correct = (0..NUM_CLASSES).map(|c| confusion[c][c]).sum();
    Ok(EvalReport {
        variant: String::new(),
        dataset: String::new(),
        correct,
        total: preds.len(),
        accuracy: correct as f64 / preds.len() as f64,
        confusion,
    })
}

/// Predicts every labeled instance (in parallel, order-stable) and scores it.
pub fn evaluate(p: &IanParams, instances: &[Instance]) -> Result<EvalReport> {
    let pairs = instances
        .par_iter()
        .map(|inst| {
            let gold = inst.label.ok_or_else(|| Error::Invalid(format!("instance {} has no label", inst.id)))?;
            Ok((predict(p, inst)?, gold))
        })
        .collect::<Result<Vec<(usize, usize)>>>()?;
    let (preds, golds): (Vec<usize>, Vec<usize>) = pairs.into_iter().unzip();
    Ok(accuracy(&preds, &golds)?.with_labels(p.variant.name(), ""))
}

fn ordered_unique<'a>(items: impl Iterator<Item = &'a str>) -> Vec<&'a str> {
    let mut out: Vec<&str> = Vec::new();
    for s in items {
        if !out.contains(&s) {
            out.push(s);
        }
    }
    out
}

/// Aligned text table: one row per variant, one accuracy column per
/// dataset (both in order of first appearance). The best accuracy in each
/// column is marked with `*`, ties all marked. Macro-F1 columns follow and
/// are marked `†` as supplementary.
pub fn compare_variants(reports: &[EvalReport]) -> String {
    let variants = ordered_unique(reports.iter().map(|r| r.variant.as_str()));
    let datasets = ordered_unique(reports.iter().map(|r| r.dataset.as_str()));
    let find = |v: &str, d: &str| reports.iter().find(|r| r.variant == v && r.dataset == d);
    let best: Vec<f64> =
        datasets.iter().map(|d| reports.iter().filter(|r| r.dataset == *d).map(|r| r.accuracy).fold(f64::NEG_INFINITY, f64::max)).collect();

    let mut header = vec!["model".to_string()];
    header.extend(datasets.iter().map(|d| if d.is_empty() { "accuracy".to_string() } else { d.to_string() }));
    header.extend(datasets.iter().map(|d| if d.is_empty() { "macro-F1†".to_string() } else { format!("{d} macro-F1†") }));

    let mut rows = vec![header];
    for v in &variants {
        let mut row = vec![v.to_string()];
        for (k, d) in datasets.iter().enumerate() {
            row.push(match find(v, d) {
                Some(r) => format!("{:.4}{}", r.accuracy, if r.accuracy == best[k] { "*" } else { " " }),
                None => "-".to_string(),
            });
        }
        for d in &datasets {
            row.push(find(v, d).map_or("-".to_string(), |r| format!("{:.4}", r.macro_f1())));
        }
        rows.push(row);
    }

    let ncols = rows[0].len();
    let widths: Vec<usize> = (0..ncols).map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for (i, row) in rows.iter().enumerate() {
        let line: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(c, cell)| {
                let pad = widths[c] - cell.chars().count();
                if c == 0 {
                    format!("{cell}{}", " ".repeat(pad))
                } else {
                    format!("{}{cell}", " ".repeat(pad))
                }
            })
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
        if i == 0 {
            out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (ncols - 1)));
            out.push('\n');
        }
    }
    out.push_str("* best accuracy per dataset; † supplementary metric\n");
    out
}

/// Machine-readable form: `variant dataset correct total accuracy macro_f1`,
/// tab-separated, with a header row.
pub fn reports_to_tsv(reports: &[EvalReport]) -> String {
    let mut out = String::from("variant\tdataset\tcorrect\ttotal\taccuracy\tmacro_f1\n");
    for r in reports {
        out.push_str(&format!("{}\t{}\t{}\t{}\t{}\t{}\n", r.variant, r.dataset, r.correct, r.total, r.accuracy, r.macro_f1()));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{prop, prop_assert, prop_assert_eq, proptest, Just, Strategy};

    #[test]
    fn accuracy_examples() {
        let r = accuracy(&[0, 1, 2], &[0, 1, 2]).unwrap();
        assert_eq!(r.accuracy, 1.0);
        let r = accuracy(&[0, 1, 2, 0], &[0, 1, 1, 0]).unwrap();
        assert_eq!(r.accuracy, 0.75);
        assert_eq!(r.confusion[1][2], 1);
        assert_eq!(r.confusion.iter().flatten().sum::<usize>(), 4);
        assert!(accuracy(&[0], &[0, 1]).is_err());
        assert!(accuracy(&[], &[]).is_err());
    }

    #[test]
    fn majority_on_laptop_test_counts() {
        let golds: Vec<usize> = [(0, 341), (1, 169), (2, 128)].iter().flat_map(|&(c, n)| std::iter::repeat_n(c, n)).collect();
        let r = accuracy(&vec![0; golds.len()], &golds).unwrap();
        assert_eq!((r.correct, r.total), (341, 638));
        assert!((r.accuracy - 0.534).abs() < 5e-4);
    }

    fn report(v: &str, d: &str, correct: usize, total: usize) -> EvalReport {
        let mut confusion = [[0; 3]; 3];
        confusion[0][0] = correct;
        confusion[1][0] = total - correct;
        EvalReport { variant: v.into(), dataset: d.into(), correct, total, accuracy: correct as f64 / total as f64, confusion }
    }

    #[test]
    fn comparison_table_layout() {
        let one = compare_variants(&[report("ian", "restaurants", 3, 4)]);
        let body: Vec<&str> = one.lines().collect();
        assert_eq!(body.len(), 4);
        assert!(body[2].starts_with("ian") && body[2].contains("0.7500*"));

        let t = compare_variants(&[report("lstm", "laptops", 1, 2), report("ian", "laptops", 1, 2), report("td-lstm", "laptops", 1, 4)]);
        let rows: Vec<&str> = t.lines().skip(2).take(3).collect();
        let names: Vec<&str> = rows.iter().map(|r| r.split_whitespace().next().unwrap()).collect();
        assert_eq!(names, ["lstm", "ian", "td-lstm"]);
        assert!(rows[0].contains("0.5000*") && rows[1].contains("0.5000*"));
        assert!(!rows[2].contains('*'));

        let tsv = reports_to_tsv(&[report("ian", "restaurants", 3, 4)]);
        let fields: Vec<&str> = tsv.lines().nth(1).unwrap().split('\t').collect();
        assert_eq!(&fields[..5], ["ian", "restaurants", "3", "4", "0.75"]);
        // class 0: P = 3/4, R = 1; class 1: F1 = 0; class 2 absent
        let f1: f64 = fields[5].parse().unwrap();
        assert!((f1 - (2.0 * 0.75 / 1.75) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn macro_f1_perfect() {
        let r = accuracy(&[0, 1, 2], &[0, 1, 2]).unwrap();
        assert_eq!(r.macro_f1(), 1.0);
    }

    fn pairs() -> impl Strategy<Value = Vec<(usize, usize)>> {
        prop::collection::vec((0usize..3, 0usize..3), 1..60)
    }

    proptest! {
        #[test]
        fn joint_permutation_invariance(v in pairs().prop_flat_map(|v| { let n = v.len(); (Just(v), Just(n)) })) {
            let (v, n) = v;
            let (p, g): (Vec<usize>, Vec<usize>) = v.iter().copied().unzip();
            let a = accuracy(&p, &g).unwrap();
            let (p2, g2): (Vec<usize>, Vec<usize>) = v.iter().rev().copied().unzip();
            let b = accuracy(&p2, &g2).unwrap();
            prop_assert_eq!(&a, &b);
            prop_assert!(a.accuracy >= 0.0 && a.accuracy <= 1.0);
            prop_assert_eq!(a.confusion.iter().flatten().sum::<usize>(), n);
        }

        #[test]
        fn majority_accuracy_is_top_class_frequency(golds in prop::collection::vec(0usize..3, 1..80)) {
            let label = crate::model::majority_label(golds.iter().copied());
            let r = accuracy(&vec![label; golds.len()], &golds).unwrap();
            let top = (0..3).map(|c| golds.iter().filter(|&&g| g == c).count()).max().unwrap();
            prop_assert_eq!(r.correct, top);
            prop_assert_eq!(r.accuracy, top as f64 / golds.len() as f64);
        }
    }
}
