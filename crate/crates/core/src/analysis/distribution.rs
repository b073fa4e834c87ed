use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::kind::PredictionKind;
use crate::session::PredictionEvent;

/// Prediction counts per kind for one ground-truth label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistributionRow {
    pub label: String,
    pub counts: BTreeMap<PredictionKind, u64>,
    pub total: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistributionTable {
    pub rows: Vec<DistributionRow>,
}

impl DistributionTable {
    pub fn row(&self, label: &str) -> Option<&DistributionRow> {
        self.rows.iter().find(|r| r.label == label)
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// `label,correct,segmentation,similarity,wild,no_recognition,total`
    pub fn to_csv(&self) -> Vec<u8> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let mut header = vec!["label"];
        header.extend(PredictionKind::ALL.iter().map(|k| k.as_str()));
        header.push("total");
        w.write_record(&header).expect("in-memory write");
        for row in &self.rows {
            let mut fields = vec![row.label.clone()];
            fields.extend(PredictionKind::ALL.iter().map(|k| row.counts[k].to_string()));
            fields.push(row.total.to_string());
            w.write_record(&fields).expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }
}

/// Counts predictions per ground-truth label and kind.
///
/// Rows follow `label_order` (usually repository order); labels missing from
/// it come after, in order of first appearance. Labels with no events get no
/// row.
pub fn per_label_distribution(events: &[PredictionEvent], label_order: &[&str]) -> DistributionTable {
    let mut rows: Vec<DistributionRow> = Vec::new();
    let mut index: HashMap<&str, usize> = HashMap::new();
    for e in events {
        let i = *index.entry(&e.ground_truth).or_insert_with(|| {
            rows.push(DistributionRow {
                label: e.ground_truth.clone(),
                counts: PredictionKind::ALL.into_iter().map(|k| (k, 0)).collect(),
                total: 0,
            });
            rows.len() - 1
        });
        *rows[i].counts.entry(e.kind).or_default() += 1;
        rows[i].total += 1;
    }
    let rank = |label: &str| label_order.iter().position(|l| *l == label).unwrap_or(usize::MAX);
    // Stable sort keeps first-appearance order among unlisted labels.
    rows.sort_by_key(|r| rank(&r.label));
    DistributionTable { rows }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(label: &str, kind: PredictionKind) -> PredictionEvent {
        PredictionEvent {
            seq: 1,
            trial_index: 1,
            ground_truth: label.into(),
            kind,
            predicted_label: None,
            confidence: None,
            correct: kind == PredictionKind::Correct,
            accuracy_after: 0.0,
            timestamp_ms: 0,
        }
    }

    #[test]
    fn empty_input() {
        assert!(per_label_distribution(&[], &["oats"]).is_empty());
    }

    #[test]
    fn all_correct() {
        let events: Vec<_> = (0..10).map(|_| ev("oats", PredictionKind::Correct)).collect();
        let t = per_label_distribution(&events, &["oats", "flour"]);
        assert_eq!(t.rows.len(), 1);
        assert_eq!(t.row("oats").unwrap().counts[&PredictionKind::Correct], 10);
        assert_eq!(t.row("oats").unwrap().total, 10);
    }

    #[test]
    fn repository_order_then_appearance() {
        let events = vec![
            ev("rice", PredictionKind::Wild),
            ev("flour", PredictionKind::Similarity),
            ev("beans", PredictionKind::Correct),
            ev("oats", PredictionKind::Correct),
        ];
        let t = per_label_distribution(&events, &["oats", "flour"]);
        let labels: Vec<_> = t.rows.iter().map(|r| r.label.as_str()).collect();
        assert_eq!(labels, ["oats", "flour", "rice", "beans"]);
        let csv = String::from_utf8(t.to_csv()).unwrap();
        assert_eq!(
            csv.lines().next().unwrap(),
            "label,correct,segmentation,similarity,wild,no_recognition,total"
        );
        assert_eq!(csv.lines().nth(2).unwrap(), "flour,0,0,1,0,0,1");
    }
}
