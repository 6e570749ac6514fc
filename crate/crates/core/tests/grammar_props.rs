use icy_core::game::{build_game_dataset, load_game_dataset, save_game_dataset, GameDatasetName};
use icy_core::transform::{decode_rot, encode_rot};
use icy_core::{generate_grammar, load_grammar, save_grammar, Geometry, GrammarKind, Message};
use proptest::prelude::*;

fn geometry_strategy() -> impl Strategy<Value = Geometry> {
    (1usize..4, 2usize..5, 1usize..4, 2usize..5).prop_filter_map("valid geometry", |(a, v, w, s)| {
        Geometry::new(a, v, a * w, s).ok()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rot_round_trips(v in 2usize..10, msg in proptest::collection::vec(0usize..100, 1..30)) {
        let m = Message(msg.into_iter().map(|s| s % v).collect());
        prop_assert_eq!(decode_rot(&encode_rot(&m, v), v), m);
    }

    #[test]
    fn generation_is_deterministic_and_covering(geo in geometry_strategy(), seed in 0u64..1000, k in 0usize..7) {
        let kind = GrammarKind::ALL[k];
        let a = generate_grammar(kind, geo, seed).unwrap();
        let b = generate_grammar(kind, geo, seed).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.symbols().len(), geo.num_objects() * geo.c_len);
        if kind != GrammarKind::Proj {
            prop_assert!(a.is_injective());
        }
    }

    #[test]
    fn concat_words_are_local(seed in 0u64..1000) {
        let geo = Geometry::reduced();
        let g = generate_grammar(GrammarKind::Concat, geo, seed).unwrap();
        let c_w = geo.word_len();
        // objects differing only in attribute 1 share blocks 0 and 2
        let a = g.message(geo.index_of(&icy_core::ObjectVec(vec![2, 0, 5])));
        let b = g.message(geo.index_of(&icy_core::ObjectVec(vec![2, 3, 5])));
        prop_assert_eq!(&a[..c_w], &b[..c_w]);
        prop_assert_eq!(&a[2 * c_w..], &b[2 * c_w..]);
        prop_assert_ne!(&a[c_w..2 * c_w], &b[c_w..2 * c_w]);
    }
}

#[test]
fn files_round_trip_at_reduced_geometry() {
    let dir = tempfile::tempdir().unwrap();
    for kind in GrammarKind::ALL {
        let g = generate_grammar(kind, Geometry::reduced(), 17).unwrap();
        let path = dir.path().join(format!("{kind}.json"));
        save_grammar(&g, &path).unwrap();
        let first = std::fs::read(&path).unwrap();
        let back = load_grammar(&path).unwrap();
        assert_eq!(back, g);
        save_grammar(&back, &path).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), first, "{kind}: rewrite not byte-identical");
    }
}

#[test]
fn game_dataset_file_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("eng.json");
    let d = build_game_dataset(GameDatasetName::Eng, GrammarKind::Shufdet, 3, 3).unwrap();
    save_game_dataset(&d, &path).unwrap();
    let back = load_game_dataset(&path).unwrap();
    assert_eq!(back, d);
    assert_eq!(back.items.len(), 25);
    assert_eq!(back.holdout_items().count(), 3);
    assert_eq!(back.attribute_order, vec!["color", "shape"]);
}
