//! Accuracy, agreement and reliability metrics over predictions.

use std::fmt::Write as _;

use crate::error::{check_dim, Error, Result};

/// Everything the metrics need about one evaluated instance.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRecord {
    pub fused_label: usize,
    pub fused_uncertainty: f64,
    pub true_label: usize,
    pub view_labels: Vec<usize>,
    pub view_trust: Vec<f64>,
}

impl PredictionRecord {
    pub fn is_correct(&self) -> bool {
        self.fused_label == self.true_label
    }
}

fn nonempty<T>(items: &[T], what: &str) -> Result<()> {
    if items.is_empty() {
        Err(Error::domain(format!("{what} needs at least one record")))
    } else {
        Ok(())
    }
}

/// Fraction of records whose fused label equals the true label.
pub fn top1(records: &[PredictionRecord]) -> Result<f64> {
    nonempty(records, "top-1 accuracy")?;
    Ok(records.iter().filter(|r| r.is_correct()).count() as f64 / records.len() as f64)
}

/// Fleiss' kappa with one rater per column of `view_labels` (M items × V
/// raters).
pub fn fleiss_kappa(view_labels: &[Vec<usize>], num_classes: usize) -> Result<f64> {
    let m = view_labels.len();
    if m < 2 {
        return Err(Error::domain("Fleiss' kappa needs at least 2 items"));
    }
    let raters = view_labels[0].len();
    if raters < 2 {
        return Err(Error::domain("Fleiss' kappa needs at least 2 raters"));
    }
    let mut counts = vec![vec![0usize; num_classes]; m];
    for (row, labels) in counts.iter_mut().zip(view_labels) {
        check_dim(raters, labels.len())?;
        for &k in labels {
            if k >= num_classes {
                return Err(Error::domain(format!(
                    "label {k} out of range for {num_classes} classes"
                )));
            }
            row[k] += 1;
        }
    }
    fleiss_kappa_counts(&counts)
}

/// Fleiss' kappa from an item × category count table with a constant
/// number of ratings per item.
pub fn fleiss_kappa_counts(counts: &[Vec<usize>]) -> Result<f64> {
    let m = counts.len();
    if m == 0 {
        return Err(Error::domain("Fleiss' kappa needs at least one item"));
    }
    let n: usize = counts[0].iter().sum();
    if n < 2 || counts.iter().any(|row| row.iter().sum::<usize>() != n) {
        return Err(Error::domain(
            "every item needs the same number (≥ 2) of ratings",
        ));
    }
    let nf = n as f64;
    let total = m as f64 * nf;
    let mut p_bar = 0.0;
    let mut marginals = vec![0.0; counts[0].len()];
    for row in counts {
        let agree: f64 = row.iter().map(|&c| (c * c) as f64).sum::<f64>() - nf;
        p_bar += agree / (nf * (nf - 1.0));
        for (acc, &c) in marginals.iter_mut().zip(row) {
            *acc += c as f64;
        }
    }
    p_bar /= m as f64;
    let p_e: f64 = marginals.iter().map(|c| (c / total).powi(2)).sum();
    if p_bar == 1.0 {
        return Ok(1.0);
    }
    if p_e == 1.0 {
        return Err(Error::Undefined(
            "Fleiss' kappa is undefined when chance agreement is 1".into(),
        ));
    }
    Ok((p_bar - p_e) / (1.0 - p_e))
}

/// Fraction of records where strictly more than half of the views predict
/// the true label.
pub fn mvagt(records: &[PredictionRecord]) -> Result<f64> {
    nonempty(records, "MVAGT")?;
    let hits = records
        .iter()
        .filter(|r| {
            let correct = r.view_labels.iter().filter(|&&l| l == r.true_label).count();
            2 * correct > r.view_labels.len()
        })
        .count();
    Ok(hits as f64 / records.len() as f64)
}

/// AUROC of fused uncertainty as a detector of incorrect predictions.
/// Ties count one half.
pub fn auroc_uncertainty(records: &[PredictionRecord]) -> Result<f64> {
    let mut scored: Vec<(f64, bool)> = records
        .iter()
        .map(|r| (r.fused_uncertainty, !r.is_correct()))
        .collect();
    let positives = scored.iter().filter(|s| s.1).count();
    let negatives = scored.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::Undefined(
            "AUROC needs at least one correct and one incorrect prediction".into(),
        ));
    }
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    // Sum of midranks of the positives (Mann–Whitney U).
    let mut rank_sum = 0.0;
    let mut start = 0;
    while start < scored.len() {
        let mut end = start;
        while end + 1 < scored.len() && scored[end + 1].0 == scored[start].0 {
            end += 1;
        }
        let midrank = (start + end) as f64 / 2.0 + 1.0;
        rank_sum += midrank * scored[start..=end].iter().filter(|s| s.1).count() as f64;
        start = end + 1;
    }
    let (p, n) = (positives as f64, negatives as f64);
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

/// Fraction of positions where the two label vectors differ.
pub fn conflict_ratio(labels_a: &[usize], labels_b: &[usize]) -> Result<f64> {
    check_dim(labels_a.len(), labels_b.len())?;
    nonempty(labels_a, "conflict ratio")?;
    let differ = labels_a
        .iter()
        .zip(labels_b)
        .filter(|(a, b)| a != b)
        .count();
    Ok(differ as f64 / labels_a.len() as f64)
}

/// Pairwise conflict ratios between the per-view predictions.
pub fn conflict_matrix(records: &[PredictionRecord]) -> Result<Vec<Vec<f64>>> {
    nonempty(records, "conflict matrix")?;
    let v = records[0].view_labels.len();
    let columns: Vec<Vec<usize>> = (0..v)
        .map(|j| records.iter().map(|r| r.view_labels[j]).collect())
        .collect();
    let mut out = vec![vec![0.0; v]; v];
    for a in 0..v {
        for b in a + 1..v {
            let cr = conflict_ratio(&columns[a], &columns[b])?;
            out[a][b] = cr;
            out[b][a] = cr;
        }
    }
    Ok(out)
}

/// The headline metrics of one evaluation. Metrics that are undefined for
/// the given records are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub instances: usize,
    pub flagged: usize,
    pub top1: f64,
    pub fleiss_kappa: Option<f64>,
    pub mvagt: f64,
    pub auroc: Option<f64>,
    pub conflict: Vec<Vec<f64>>,
}

impl MetricsReport {
    pub fn compute(
        records: &[PredictionRecord],
        num_classes: usize,
        flagged: usize,
    ) -> Result<Self> {
        let views: Vec<Vec<usize>> = records.iter().map(|r| r.view_labels.clone()).collect();
        Ok(Self {
            instances: records.len(),
            flagged,
            top1: top1(records)?,
            fleiss_kappa: fleiss_kappa(&views, num_classes).ok(),
            mvagt: mvagt(records)?,
            auroc: auroc_uncertainty(records).ok(),
            conflict: conflict_matrix(records)?,
        })
    }

    /// `key = value` lines.
    pub fn to_text(&self) -> String {
        let opt = |x: Option<f64>| x.map_or_else(|| "undefined".to_string(), |v| format!("{v:.6}"));
        format!(
            "instances = {}\nflagged = {}\ntop1 = {:.6}\nfleiss_kappa = {}\nmvagt = {:.6}\nauroc = {}\n",
            self.instances,
            self.flagged,
            self.top1,
            opt(self.fleiss_kappa),
            self.mvagt,
            opt(self.auroc)
        )
    }

    pub const CSV_HEADER: &'static str = "instances,flagged,top1,fleiss_kappa,mvagt,auroc";

    /// One CSV row matching [`MetricsReport::CSV_HEADER`]; undefined metrics
    /// are empty fields.
    pub fn to_csv_row(&self) -> String {
        let opt = |x: Option<f64>| x.map_or_else(String::new, |v| format!("{v:.16e}"));
        format!(
            "{},{},{:.16e},{},{:.16e},{}",
            self.instances,
            self.flagged,
            self.top1,
            opt(self.fleiss_kappa),
            self.mvagt,
            opt(self.auroc)
        )
    }

    /// The conflict-ratio matrix with a `view1..viewV` header row.
    pub fn conflict_csv(&self) -> String {
        let mut out = String::new();
        let header: Vec<String> = (1..=self.conflict.len())
            .map(|v| format!("view{v}"))
            .collect();
        writeln!(out, "{}", header.join(",")).expect("writing to a String");
        for row in &self.conflict {
            let cells: Vec<String> = row.iter().map(|x| format!("{x:.16e}")).collect();
            writeln!(out, "{}", cells.join(",")).expect("writing to a String");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(fused: usize, truth: usize, views: &[usize], u: f64) -> PredictionRecord {
        PredictionRecord {
            fused_label: fused,
            fused_uncertainty: u,
            true_label: truth,
            view_labels: views.to_vec(),
            view_trust: vec![1.0; views.len()],
        }
    }

    #[test]
    fn top1_counts() {
        let rs = [
            record(0, 0, &[0], 0.1),
            record(1, 1, &[0], 0.1),
            record(2, 2, &[0], 0.1),
            record(2, 1, &[0], 0.1),
        ];
        assert_eq!(top1(&rs).unwrap(), 0.75);
        assert_eq!(top1(&rs[..3]).unwrap(), 1.0);
        assert!(top1(&[]).is_err());
    }

    #[test]
    fn kappa_degenerate_cases() {
        let agree = vec![vec![1, 1, 1], vec![0, 0, 0], vec![2, 2, 2]];
        assert_eq!(fleiss_kappa(&agree, 3).unwrap(), 1.0);
        let same = vec![vec![1, 1], vec![1, 1]];
        assert_eq!(fleiss_kappa(&same, 2).unwrap(), 1.0);
        let disagree = vec![vec![0, 1], vec![1, 0], vec![0, 1], vec![1, 0]];
        assert_eq!(fleiss_kappa(&disagree, 2).unwrap(), -1.0);
        assert!(fleiss_kappa(&[vec![0, 1]], 2).is_err());
        assert!(fleiss_kappa(&[vec![0], vec![1]], 2).is_err());
        assert!(fleiss_kappa(&[vec![0, 2], vec![1, 1]], 2).is_err());
    }

    #[test]
    fn mvagt_strict_majority() {
        assert_eq!(mvagt(&[record(0, 0, &[0, 0, 0], 0.0)]).unwrap(), 1.0);
        assert_eq!(mvagt(&[record(0, 0, &[0, 0, 1], 0.0)]).unwrap(), 1.0);
        assert_eq!(mvagt(&[record(0, 0, &[0, 1, 1], 0.0)]).unwrap(), 0.0);
        assert_eq!(mvagt(&[record(0, 0, &[0, 1], 0.0)]).unwrap(), 0.0);
    }

    #[test]
    fn auroc_cases() {
        let separated = [
            record(0, 0, &[0], 0.1),
            record(0, 0, &[0], 0.2),
            record(1, 0, &[0], 0.5),
            record(1, 0, &[0], 0.9),
        ];
        assert_eq!(auroc_uncertainty(&separated).unwrap(), 1.0);
        let tied = [
            record(0, 0, &[0], 0.3),
            record(1, 0, &[0], 0.3),
            record(1, 0, &[0], 0.3),
        ];
        assert_eq!(auroc_uncertainty(&tied).unwrap(), 0.5);
        assert!(auroc_uncertainty(&separated[..2]).is_err());
    }

    #[test]
    fn conflict_cases() {
        assert_eq!(conflict_ratio(&[1, 2, 3], &[1, 2, 3]).unwrap(), 0.0);
        assert_eq!(conflict_ratio(&[0, 0], &[1, 1]).unwrap(), 1.0);
        assert_eq!(conflict_ratio(&[0, 1, 2, 0], &[0, 2, 2, 1]).unwrap(), 0.5);
        assert!(conflict_ratio(&[0], &[0, 1]).is_err());
        let rs = [record(0, 0, &[0, 1, 0], 0.0), record(0, 0, &[1, 1, 0], 0.0)];
        let m = conflict_matrix(&rs).unwrap();
        assert_eq!(m[0][1], 0.5);
        assert_eq!(m[1][0], 0.5);
        assert_eq!(m[1][2], 1.0);
        assert!((0..3).all(|i| m[i][i] == 0.0));
    }

    #[test]
    fn report_formats() {
        let rs = [record(0, 0, &[0, 0], 0.1), record(1, 0, &[0, 1], 0.4)];
        let rep = MetricsReport::compute(&rs, 2, 1).unwrap();
        assert!(rep.to_text().contains("top1 = 0.500000"));
        assert_eq!(
            rep.to_csv_row().split(',').count(),
            MetricsReport::CSV_HEADER.split(',').count()
        );
        assert_eq!(rep.conflict_csv().lines().count(), 3);
    }
}
