use ndarray::{Array1, Array2};
use proptest::prelude::*;
use violation_embed::similarity::{cosine, pairwise_matrix, VectorSource};
use violation_embed::skipgram::{load_model, save_model, EmbeddingModel};
use violation_embed::vocab::Vocabulary;

fn nonzero_vec(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, d).prop_filter("non-zero", |v| v.iter().any(|x| x.abs() > 1e-3))
}

fn vec_pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1usize..12).prop_flat_map(|d| (nonzero_vec(d), nonzero_vec(d)))
}

fn model(v: usize, d: usize) -> impl Strategy<Value = EmbeddingModel> {
    prop::collection::vec(nonzero_vec(d), v).prop_map(move |rows| {
        let flat: Vec<f64> = rows.into_iter().flatten().collect();
        let input = Array2::from_shape_vec((v, d), flat).unwrap();
        let vocab = Vocabulary::from_ordered((0..v).map(|i| (format!("t{i}"), 1)).collect(), v as u64);
        EmbeddingModel::from_parts(input, Array2::zeros((v, d)), vocab)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn cosine_properties((a, b) in vec_pair(), scale in 1e-3f64..1e3) {
        let (a, b) = (Array1::from(a), Array1::from(b));
        let ab = cosine(a.view(), b.view()).unwrap();
        prop_assert_eq!(ab, cosine(b.view(), a.view()).unwrap());
        prop_assert!((-1.0..=1.0).contains(&ab));
        prop_assert!((cosine(a.view(), a.view()).unwrap() - 1.0).abs() <= 1e-12);
        let scaled = &a * scale;
        prop_assert!((cosine(scaled.view(), b.view()).unwrap() - ab).abs() <= 1e-12);
        let flipped = &a * -scale;
        prop_assert!((cosine(flipped.view(), b.view()).unwrap() + ab).abs() <= 1e-12);
    }
}

proptest! {
    #[test]
    fn transposed_matrix_swaps_axes(
        m in (2usize..8, 1usize..6).prop_flat_map(|(v, d)| model(v, d)),
        picks in prop::collection::vec((any::<prop::sample::Index>(), any::<bool>()), 1..10),
    ) {
        let v = m.vocab_size();
        let mut rows = Vec::new();
        let mut cols = Vec::new();
        for (ix, to_rows) in &picks {
            let t = m.vocab.token(ix.index(v));
            if *to_rows { rows.push(t) } else { cols.push(t) }
        }
        prop_assume!(!rows.is_empty() && !cols.is_empty());
        let rc = pairwise_matrix(&m, &rows, &cols, VectorSource::Input).unwrap().matrix;
        let cr = pairwise_matrix(&m, &cols, &rows, VectorSource::Input).unwrap().matrix;
        prop_assert_eq!(&rc.transpose().values, &cr.values);
        prop_assert!(rc.values.iter().all(|x| (-1.0..=1.0).contains(x)));
        for (i, &j) in rc.row_max_col.iter().enumerate() {
            prop_assert!(rc.values.row(i).iter().all(|x| *x <= rc.values[[i, j]]));
        }
        for (j, &i) in rc.col_max_row.iter().enumerate() {
            prop_assert!(rc.values.column(j).iter().all(|x| *x <= rc.values[[i, j]]));
        }
    }

    #[test]
    fn saved_model_keeps_cosines(m in (2usize..10, 1usize..8).prop_flat_map(|(v, d)| model(v, d))) {
        let mut buf = Vec::new();
        save_model(&m, &mut buf).unwrap();
        let back = load_model(&buf[..]).unwrap();
        let toks: Vec<&str> = m.vocab.tokens().iter().map(String::as_str).collect();
        let before = pairwise_matrix(&m, &toks, &toks, VectorSource::Input).unwrap().matrix;
        let after = pairwise_matrix(&back, &toks, &toks, VectorSource::Input).unwrap().matrix;
        for (x, y) in before.values.iter().zip(after.values.iter()) {
            prop_assert!((x - y).abs() <= 1e-6);
        }
    }
}
