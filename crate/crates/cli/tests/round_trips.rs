use proptest::prelude::*;
use tpns::{Grid, Params, PhysicalField};
use tpns_cli::config::Config;
use tpns_cli::field_io::{self, FieldError};

fn name() -> impl Strategy<Value = String> {
    "[a-z][a-z0-9_-]{0,7}"
}

fn value() -> impl Strategy<Value = String> {
    "[A-Za-z0-9.,+ -]{0,12}".prop_map(|v| v.trim().to_string())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn config_display_parses_back(
        top in prop::collection::btree_map(name(), value(), 0..4),
        sections in prop::collection::btree_map(name(), prop::collection::btree_map(name(), value(), 1..4), 0..4),
    ) {
        let mut cfg = Config::default();
        for (k, v) in &top {
            cfg.set(k, v.clone());
        }
        for (s, entries) in &sections {
            for (k, v) in entries {
                cfg.set(&format!("{s}.{k}"), v.clone());
            }
        }
        let back = Config::parse(&cfg.to_string()).unwrap();
        prop_assert_eq!(back, cfg);
    }

    #[test]
    fn config_parse_never_panics(text in "[\\[\\]a-z=#;. \n0-9]{0,80}") {
        if let Ok(cfg) = Config::parse(&text) {
            prop_assert_eq!(Config::parse(&cfg.to_string()).unwrap(), cfg);
        }
    }

    #[test]
    fn field_files_round_trip_bit_exactly(
        dims in (prop::sample::select(vec![4usize, 6]), prop::sample::select(vec![4usize, 8]), prop::sample::select(vec![4usize, 6, 8])),
        box_len in prop::array::uniform3(1e-3f64..1e3),
        period in 1e-3f64..1e3,
        lambda in -1e3f64..1e3,
        components in prop::sample::select(vec![1usize, 3]),
        seed in any::<u64>(),
    ) {
        let (n1, n2, m) = dims;
        let g = Grid::new(box_len, [n1, n2, n1], m, Params::new(lambda, period).unwrap()).unwrap();
        let f = tpns::forcing::random_field(seed, components, &g).unwrap();
        let bytes = field_io::encode(&f);
        let back = field_io::decode(&bytes).unwrap();
        prop_assert_eq!(&**back.grid(), &*g);
        for c in 0..components {
            prop_assert_eq!(back.component(c), f.component(c));
        }
        prop_assert!(field_io::decode_on(&bytes, &g).is_ok());
    }

    #[test]
    fn truncated_field_files_are_rejected(cut in 1usize..600) {
        let g = Grid::cube(4, 4, Params::new(1.0, 1.0).unwrap()).unwrap();
        let bytes = field_io::encode(&PhysicalField::zeros(g, 3));
        let cut = cut.min(bytes.len());
        prop_assert!(matches!(field_io::decode(&bytes[..bytes.len() - cut]), Err(FieldError::Malformed(_))));
    }
}

#[test]
fn fuzz_seeds_decode_as_intended() {
    let corpus = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus");
    let read = |name: &str| std::fs::read(corpus.join(name)).unwrap();
    let scalar = field_io::decode(&read("field_decode/scalar_zero.field")).unwrap();
    assert_eq!((scalar.components(), scalar.max_abs()), (1, 0.0));
    let vector = field_io::decode(&read("field_decode/vector_trig.field")).unwrap();
    assert_eq!((vector.components(), vector.grid().box_len()), (3, [1.0, 2.0, 3.5]));
    assert!(matches!(field_io::decode(&read("field_decode/truncated.field")), Err(FieldError::Malformed(_))));

    let text = |name: &str| String::from_utf8(read(name)).unwrap();
    let solve = Config::parse(&text("config_parse/solve.ini")).unwrap();
    assert_eq!(solve.get("forcing.preset"), Some("trig"));
    assert!(Config::parse(&text("config_parse/file_forcing.ini")).is_ok());
    assert!(Config::parse(&text("config_parse/bad_header.ini")).is_err());
}
