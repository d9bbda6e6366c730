mod common;

use std::collections::BTreeMap;

use common::{factor_dataset, published_counts, CountRow};
use tabrisk::epi::{adjusted_or, contingency, crude_or, factor_table, FactorOptions};

fn blocks(rows: &[CountRow]) -> BTreeMap<&str, Vec<&CountRow>> {
    let mut m: BTreeMap<&str, Vec<&CountRow>> = BTreeMap::new();
    for r in rows {
        m.entry(r.feature.as_str()).or_default().push(r);
    }
    m
}

#[test]
fn counts_round_trip_through_contingency() {
    let rows = published_counts();
    for (feature, group) in blocks(&rows) {
        let table = contingency(&factor_dataset(&group), feature).unwrap();
        for (t, r) in table.iter().zip(&group) {
            assert_eq!(
                (t.anemic, t.not_anemic),
                (r.anemic, r.not_anemic),
                "{feature}"
            );
        }
    }
}

#[test]
fn single_covariate_adjusted_equals_crude() {
    let rows = published_counts();
    for (feature, group) in blocks(&rows) {
        let ds = factor_dataset(&group);
        let crude = crude_or(
            &contingency(&ds, feature).unwrap(),
            &group[0].category,
            false,
        )
        .unwrap();
        let adjusted = adjusted_or(&ds, &BTreeMap::new()).unwrap();
        assert_eq!(adjusted.len(), group.len() - 1);
        for a in adjusted {
            let k = group.iter().position(|r| r.category == a.category).unwrap();
            let c = crude[k].unwrap();
            assert!(
                (a.odds_ratio - c).abs() < 1e-8 * c,
                "{feature}/{}: {} vs {c}",
                a.category,
                a.odds_ratio
            );
            assert!(a.ci_low < a.odds_ratio && a.odds_ratio < a.ci_high);
        }
    }
}

#[test]
fn swapping_reference_inverts_binary_odds_ratio() {
    let rows = published_counts();
    let group: Vec<&CountRow> = rows.iter().filter(|r| r.feature == "fever").collect();
    let ds = factor_dataset(&group);
    let table = contingency(&ds, "fever").unwrap();
    let forward = crude_or(&table, "No", false).unwrap()[1].unwrap();
    let backward = crude_or(&table, "Yes", false).unwrap()[0].unwrap();
    assert!((forward * backward - 1.0).abs() < 1e-12);

    let swapped: BTreeMap<String, String> = [("fever".to_string(), "Yes".to_string())].into();
    let a = adjusted_or(&ds, &BTreeMap::new()).unwrap()[0].clone();
    let b = adjusted_or(&ds, &swapped).unwrap()[0].clone();
    assert_eq!(b.category, "No");
    assert!((a.beta + b.beta).abs() < 1e-9);
    assert!((a.se - b.se).abs() < 1e-9);
    assert!((a.ci_low * b.ci_high - 1.0).abs() < 1e-9);
}

#[test]
fn factor_table_marks_references() {
    let rows = published_counts();
    let group: Vec<&CountRow> = rows.iter().filter(|r| r.feature == "province").collect();
    let table = factor_table(&factor_dataset(&group), &FactorOptions::default()).unwrap();
    assert_eq!(table.len(), 7);
    assert!(table[0].is_reference && table[0].adjusted_or.is_none());
    assert!(table[1..]
        .iter()
        .all(|r| !r.is_reference && r.p_value.is_some()));
    let total: usize = table.iter().map(|r| r.total).sum();
    assert_eq!(total, 1855);
}
