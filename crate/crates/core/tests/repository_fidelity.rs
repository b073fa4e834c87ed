use proptest::prelude::*;
use woz_core::repository::RepositoryError;
use woz_core::{ErrorRepository, PredictionKind};

const TABLE1: &[u8] = include_bytes!("fixtures/table1.csv");

#[test]
fn table1_lookups() {
    let repo = ErrorRepository::parse("table1", TABLE1).unwrap();
    assert_eq!(
        repo.lookup("oats", PredictionKind::Segmentation).unwrap(),
        Some("cinnamon")
    );
    assert_eq!(repo.lookup("oats", PredictionKind::Similarity).unwrap(), Some("flour"));
    assert_eq!(repo.lookup("oats", PredictionKind::Wild).unwrap(), Some("carrots"));
    assert_eq!(
        repo.lookup("flour", PredictionKind::Segmentation).unwrap(),
        Some("salt")
    );
    assert_eq!(repo.lookup("flour", PredictionKind::Similarity).unwrap(), Some("oats"));
    assert_eq!(repo.lookup("flour", PredictionKind::Wild).unwrap(), Some("maple syrup"));
    assert_eq!(repo.lookup("oats", PredictionKind::Correct).unwrap(), Some("oats"));
    for gt in ["oats", "flour"] {
        assert_eq!(repo.lookup(gt, PredictionKind::NoRecognition).unwrap(), None);
    }
    assert!(matches!(
        repo.lookup("salt", PredictionKind::Wild),
        Err(RepositoryError::UnknownGroundTruth(_))
    ));
}

#[test]
fn table1_round_trips_byte_identically() {
    let repo = ErrorRepository::parse("table1", TABLE1).unwrap();
    assert_eq!(repo.to_csv(), TABLE1);
}

/// Reads the `correctAnswer` column straight from the CSV.
fn direct_column(bytes: &[u8]) -> Vec<String> {
    let mut r = csv::Reader::from_reader(bytes);
    let idx = r.headers().unwrap().iter().position(|h| h == "correctAnswer").unwrap();
    r.records().map(|rec| rec.unwrap()[idx].trim().to_string()).collect()
}

#[test]
fn ground_truths_match_column() {
    let repo = ErrorRepository::parse("table1", TABLE1).unwrap();
    assert_eq!(repo.ground_truths(), direct_column(TABLE1));
}

fn label() -> impl Strategy<Value = String> {
    "[a-z][a-z ]{0,10}[a-z]"
}

proptest! {
    #[test]
    fn generated_repositories(rows in prop::collection::vec((label(), label(), label(), label(), any::<bool>()), 1..20)) {
        let mut seen = std::collections::HashSet::new();
        let mut text = String::from("ID,correctAnswer,segmentationError,similarityError,wildError,noRecognitionError\n");
        let mut kept = Vec::new();
        // Half the rows leave the no-recognition column empty; output always says `null`.
        let mut expected = text.clone();
        for (gt, seg, sim, wild, empty_norec) in rows {
            if !seen.insert(gt.clone()) || [&seg, &sim, &wild].contains(&&gt) {
                continue;
            }
            let id = kept.len();
            text.push_str(&format!("{id},{gt},{seg},{sim},{wild},{}\n", if empty_norec { "" } else { "null" }));
            expected.push_str(&format!("{id},{gt},{seg},{sim},{wild},null\n"));
            kept.push((gt, seg, sim, wild));
        }
        prop_assume!(!kept.is_empty());
        let repo = ErrorRepository::parse("gen", text.as_bytes()).unwrap();
        prop_assert_eq!(repo.ground_truths(), direct_column(text.as_bytes()));
        prop_assert_eq!(repo.to_csv(), expected.as_bytes());
        for (gt, seg, sim, wild) in &kept {
            prop_assert_eq!(repo.lookup(gt, PredictionKind::Segmentation).unwrap(), Some(seg.as_str()));
            prop_assert_eq!(repo.lookup(gt, PredictionKind::Similarity).unwrap(), Some(sim.as_str()));
            prop_assert_eq!(repo.lookup(gt, PredictionKind::Wild).unwrap(), Some(wild.as_str()));
            prop_assert_eq!(repo.lookup(gt, PredictionKind::NoRecognition).unwrap(), None);
        }
    }
}
