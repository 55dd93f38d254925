//! Upper-quartile selection and chain construction against brute-force
//! oracles.

use ndarray::Array2;
use proptest::prelude::*;
use violation_embed::catalog::load_keyword_catalog;
use violation_embed::relation::{
    build_chains, find_category_violation, quartile_threshold, read_chains, upper_quartile_select,
    write_chains, Link, OperationLink, QuartileScope, RelationChain,
};
use violation_embed::similarity::SimilarityMatrix;
use violation_embed::vocab::Vocabulary;

/// Percentile by position `0.75 (n + 1)` on the sorted values, computed in
/// floating point.
fn oracle_percentile(values: &[f64]) -> f64 {
    let mut s = values.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = s.len() as f64;
    let pos = (0.75 * (n + 1.0)).clamp(1.0, n);
    let lo = pos.floor();
    let frac = pos - lo;
    let lo = lo as usize - 1;
    if frac == 0.0 {
        s[lo]
    } else {
        s[lo] + frac * (s[lo + 1] - s[lo])
    }
}

/// Indices kept for a row: at or above the percentile, ranked by counting
/// how many kept columns beat each one.
fn oracle_select(row: &[f64], threshold: f64, k: usize) -> Vec<usize> {
    let kept: Vec<usize> = (0..row.len()).filter(|&j| row[j] >= threshold).collect();
    let mut ranked = vec![None; kept.len()];
    for &j in &kept {
        let rank = kept.iter().filter(|&&o| row[o] > row[j] || (row[o] == row[j] && o < j)).count();
        ranked[rank] = Some(j);
    }
    ranked.into_iter().flatten().take(k).collect()
}

fn labels(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

fn grid_value() -> impl Strategy<Value = f64> {
    prop_oneof![(-10i32..=10).prop_map(|i| i as f64 / 10.0), -1.0f64..1.0]
}

fn values(r: usize, c: usize) -> impl Strategy<Value = Array2<f64>> {
    prop::collection::vec(grid_value(), r * c).prop_map(move |v| Array2::from_shape_vec((r, c), v).unwrap())
}

fn triple() -> impl Strategy<Value = (SimilarityMatrix, SimilarityMatrix, SimilarityMatrix)> {
    (1usize..5, 1usize..6, 1usize..6).prop_flat_map(|(l, o, c)| {
        (values(l, c), values(l, o), values(o, c)).prop_map(move |(lc, lo, oc)| {
            (
                SimilarityMatrix::new(labels("L", l), labels("C", c), lc).unwrap(),
                SimilarityMatrix::new(labels("L", l), labels("O", o), lo).unwrap(),
                SimilarityMatrix::new(labels("O", o), labels("C", c), oc).unwrap(),
            )
        })
    })
}

fn oracle_links(m: &SimilarityMatrix, row: usize, k: usize) -> Vec<Link> {
    let r = m.values.row(row).to_vec();
    oracle_select(&r, oracle_percentile(&r), k)
        .into_iter()
        .map(|j| Link { label: m.col_labels[j].clone(), similarity: r[j] })
        .collect()
}

fn oracle_chains(
    lc: &SimilarityMatrix,
    lo: &SimilarityMatrix,
    oc: &SimilarityMatrix,
    k: usize,
) -> Vec<RelationChain> {
    (0..lc.nrows())
        .map(|i| RelationChain {
            location: lc.row_labels[i].clone(),
            location_contaminants: oracle_links(lc, i, k),
            operations: oracle_links(lo, i, k)
                .into_iter()
                .map(|op| {
                    let r = oc.row_labels.iter().position(|l| *l == op.label).unwrap();
                    OperationLink {
                        operation: op.label,
                        similarity: op.similarity,
                        contaminants: oracle_links(oc, r, k),
                    }
                })
                .collect(),
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn quartile_select_matches_oracle(row in (1usize..=12).prop_flat_map(|n| values(1, n))) {
        let m = SimilarityMatrix::new(labels("r", 1), labels("c", row.ncols()), row.clone()).unwrap();
        let r = row.row(0).to_vec();
        prop_assert_eq!(quartile_threshold(&r), oracle_percentile(&r));
        let expect: Vec<(String, f64)> = oracle_select(&r, oracle_percentile(&r), usize::MAX)
            .into_iter()
            .map(|j| (format!("c{j}"), r[j]))
            .collect();
        prop_assert_eq!(upper_quartile_select(&m, 0), expect);
    }

    #[test]
    fn raising_a_value_keeps_it_selected(
        row in (1usize..=12).prop_flat_map(|n| values(1, n)),
        pick in any::<prop::sample::Index>(),
        bump in 0.0f64..1.0,
    ) {
        let m = SimilarityMatrix::new(labels("r", 1), labels("c", row.ncols()), row.clone()).unwrap();
        let before = upper_quartile_select(&m, 0);
        let target = before[pick.index(before.len())].0.clone();
        let j: usize = target[1..].parse().unwrap();
        let mut raised = row.clone();
        raised[[0, j]] = (raised[[0, j]] + bump).min(1.0);
        let m2 = SimilarityMatrix::new(labels("r", 1), labels("c", row.ncols()), raised).unwrap();
        prop_assert!(upper_quartile_select(&m2, 0).iter().any(|(l, _)| *l == target));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn chains_match_brute_force((lc, lo, oc) in triple(), k in 1usize..4) {
        let chains = build_chains(&lc, &lo, &oc, k, QuartileScope::PerRow).unwrap();
        prop_assert_eq!(&chains, &oracle_chains(&lc, &lo, &oc, k));
        for c in &chains {
            prop_assert!(c.location_contaminants.len() <= k && !c.location_contaminants.is_empty());
            prop_assert!(c.operations.len() <= k && !c.operations.is_empty());
            prop_assert!(c.location_contaminants.windows(2).all(|w| w[0].similarity >= w[1].similarity));
        }
    }

    #[test]
    fn chains_ignore_column_order(
        (lc, lo, oc) in triple(),
        seed in any::<u64>(),
        k in 1usize..4,
    ) {
        // distinct values so the index tie-break never applies
        let distinct = |m: &SimilarityMatrix| {
            let mut v: Vec<f64> = m.values.iter().copied().collect();
            v.sort_by(f64::total_cmp);
            v.windows(2).all(|w| w[0] != w[1])
        };
        prop_assume!(distinct(&lc) && distinct(&lo) && distinct(&oc));
        let permute = |m: &SimilarityMatrix, salt: u64| {
            let mut order: Vec<usize> = (0..m.ncols()).collect();
            order.sort_by_key(|j| (*j as u64 + 1).wrapping_mul(seed ^ salt).rotate_left(17));
            let values = Array2::from_shape_fn(m.values.dim(), |(i, j)| m.values[[i, order[j]]]);
            let cols = order.iter().map(|&j| m.col_labels[j].clone()).collect();
            SimilarityMatrix::new(m.row_labels.clone(), cols, values).unwrap()
        };
        let a = build_chains(&lc, &lo, &oc, k, QuartileScope::PerRow).unwrap();
        let b = build_chains(&permute(&lc, 1), &permute(&lo, 2), &permute(&oc, 3), k, QuartileScope::PerRow)
            .unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn chain_tokens_stay_in_their_categories((lc, lo, oc) in triple(), global in any::<bool>()) {
        let scope = if global { QuartileScope::Global } else { QuartileScope::PerRow };
        let chains = build_chains(&lc, &lo, &oc, 3, scope).unwrap();
        let mut text = String::new();
        let mut counts = Vec::new();
        for (cat, ls) in [("Location", &lc.row_labels), ("Operation", &lo.col_labels), ("Contaminant", &lc.col_labels)] {
            for l in ls {
                text.push_str(&format!("{cat}\t{l}\n"));
                counts.push((l.clone(), 50));
            }
        }
        let vocab = Vocabulary::from_counts(counts, 0);
        let catalog = load_keyword_catalog(&text, &vocab, 30, |s| s.to_string()).unwrap().catalog;
        prop_assert_eq!(find_category_violation(&chains, &catalog), None);
    }

    #[test]
    fn chain_export_round_trips((lc, lo, oc) in triple(), k in 1usize..4) {
        let chains = build_chains(&lc, &lo, &oc, k, QuartileScope::PerRow).unwrap();
        let mut buf = Vec::new();
        write_chains(&chains, &mut buf).unwrap();
        prop_assert_eq!(read_chains(&buf[..]).unwrap(), chains);
    }
}

#[test]
fn hand_built_triple_matches_enumeration() {
    // 2 locations x 2 operations x 2 contaminants; every row has a unique max
    let m = |r: &str, c: &str, v: [[f64; 2]; 2]| {
        SimilarityMatrix::new(labels(r, 2), labels(c, 2), Array2::from_shape_fn((2, 2), |(i, j)| v[i][j]))
            .unwrap()
    };
    let lc = m("L", "C", [[0.2, 0.7], [0.9, -0.1]]);
    let lo = m("L", "O", [[0.6, 0.5], [0.1, 0.3]]);
    let oc = m("O", "C", [[0.4, 0.45], [0.8, 0.0]]);
    let chains = build_chains(&lc, &lo, &oc, 3, QuartileScope::PerRow).unwrap();
    assert_eq!(chains, oracle_chains(&lc, &lo, &oc, 3));
    let summary: Vec<String> = chains
        .iter()
        .map(|c| {
            format!(
                "{}:{}:{}>{}",
                c.location,
                c.location_contaminants[0].label,
                c.operations[0].operation,
                c.operations[0].contaminants[0].label
            )
        })
        .collect();
    assert_eq!(summary, ["L0:C1:O0>C1", "L1:C0:O1>C0"]);
}
