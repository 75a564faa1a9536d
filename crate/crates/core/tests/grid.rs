mod common;

use proptest::prelude::*;
use terracast::grid::{
    read_grid, read_land_cover, validate_dataset, write_env_layer, write_land_cover, ClassId, Dataset, EnvKind,
    EnvLayer, GridKind, LandCoverGrid, Raster, Violation,
};

#[test]
fn single_cell_parse() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("one.asc");
    std::fs::write(&p, "ncols 1\nnrows 1\nnodata -9999\n3\n").unwrap();
    let Raster::LandCover(g) = read_grid(&p, GridKind::LandCover { class_count: 5 }).unwrap() else {
        panic!("expected a land-cover grid");
    };
    assert_eq!(g.dims(), (1, 1));
    assert_eq!(g.get(0, 0), ClassId::new(3, 5));
}

#[test]
fn rewrite_is_canonical_and_stable() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("messy.asc");
    std::fs::write(&src, "ncols   3\nnrows 2\nnodata -1\n 1  2 -1\n2 2\t1 \n").unwrap();
    let g = read_land_cover(&src, 2).unwrap();
    let once = dir.path().join("once.asc");
    write_land_cover(&g, &once).unwrap();
    let twice = dir.path().join("twice.asc");
    write_land_cover(&read_land_cover(&once, 2).unwrap(), &twice).unwrap();
    let a = std::fs::read(&once).unwrap();
    assert_eq!(a, std::fs::read(&twice).unwrap());
    assert_eq!(String::from_utf8(a).unwrap(), "ncols 3\nnrows 2\nnodata -1\n1 2 -1\n2 2 1\n");
}

#[test]
fn nodata_cell_matches_line_reader() {
    let text = "ncols 3\nnrows 3\nnodata -9999\n1 2 1\n2 -9999 2\n1 1 2\n";
    let g = LandCoverGrid::parse(text, 2).unwrap();
    let mut expected = Vec::new();
    for (r, line) in text.lines().skip(3).enumerate() {
        for (c, tok) in line.split(' ').enumerate() {
            if tok == "-9999" {
                expected.push((r, c));
            }
        }
    }
    let found: Vec<_> = (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).filter(|&(i, j)| g.get(i, j).is_none()).collect();
    assert_eq!(found, expected);
    assert_eq!(expected, vec![(1, 1)]);
}

#[test]
fn malformed_inputs_are_rejected() {
    assert!(LandCoverGrid::parse("ncols 2\nnrows 1\nnodata -9999\n1\n", 3).is_err());
    assert!(LandCoverGrid::parse("ncols 1\nnrows 1\nnodata -9999\n7\n", 3).is_err());
    assert!(LandCoverGrid::parse("nrows 1\nncols 1\nnodata -9999\n1\n", 3).is_err());
    assert!(EnvLayer::parse("ncols 1\nnrows 1\nnodata -9999\n1.5\n", "geo", EnvKind::Categorical { category_count: 3 }).is_err());
}

fn two_date() -> Dataset {
    let a = LandCoverGrid::from_raw(2, 2, &[1, 2, 0, 1]).unwrap();
    let b = LandCoverGrid::from_raw(2, 2, &[2, 2, 0, 1]).unwrap();
    Dataset { class_names: vec!["a".into(), "b".into()], covers: vec![a, b], env_layers: vec![] }
}

#[test]
fn validation_examples() {
    assert_eq!(validate_dataset(&two_date()), vec![]);

    let mut d = two_date();
    d.env_layers.push(EnvLayer::new("wide", EnvKind::Numeric, 2, 3, vec![Some(0.0); 6]).unwrap());
    let v = validate_dataset(&d);
    assert_eq!(v.len(), 1);
    assert!(matches!(v[0], Violation::DimensionMismatch { .. }));

    let mut d = two_date();
    d.covers[1].set(1, 0, ClassId::new(2, 2));
    assert_eq!(validate_dataset(&d), vec![Violation::NodataInconsistent { row: 1, col: 0, cover: 1 }]);
}

fn arb_cover() -> impl Strategy<Value = (usize, LandCoverGrid)> {
    (1usize..8, 1usize..8, 2usize..10).prop_flat_map(|(rows, cols, k)| {
        prop::collection::vec(0u16..=k as u16, rows * cols)
            .prop_map(move |raw| (k, LandCoverGrid::from_raw(rows, cols, &raw).unwrap()))
    })
}

proptest! {
    #[test]
    fn land_cover_round_trip((k, g) in arb_cover()) {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.asc");
        write_land_cover(&g, &p).unwrap();
        let back = read_land_cover(&p, k).unwrap();
        prop_assert_eq!(back.cells(), g.cells());
        prop_assert_eq!(back.dims(), g.dims());
    }

    #[test]
    fn numeric_layer_round_trip(values in prop::collection::vec(prop::option::of(-1e6f64..1e6), 1..40)) {
        let n = values.len();
        let layer = EnvLayer::new("elev", EnvKind::Numeric, 1, n, values).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.asc");
        write_env_layer(&layer, &p).unwrap();
        let back = EnvLayer::parse(&std::fs::read_to_string(&p).unwrap(), "elev", EnvKind::Numeric).unwrap();
        prop_assert_eq!(back.cells(), layer.cells());
    }

    #[test]
    fn validation_detects_injected_nodata(
        (_, g) in arb_cover(),
        cell in any::<prop::sample::Index>(),
    ) {
        let mut filled = g.clone();
        for i in 0..g.rows() {
            for j in 0..g.cols() {
                if g.get(i, j).is_none() {
                    filled.set(i, j, Some(ClassId::from_index(0)));
                }
            }
        }
        let mut d = Dataset { class_names: (0..9).map(|c| c.to_string()).collect(), covers: vec![filled.clone(), filled], env_layers: vec![] };
        prop_assert!(validate_dataset(&d).is_empty());
        let idx = cell.index(g.rows() * g.cols());
        let (i, j) = (idx / g.cols(), idx % g.cols());
        d.covers[1].set(i, j, None);
        prop_assert_eq!(validate_dataset(&d), vec![Violation::NodataInconsistent { row: i, col: j, cover: 1 }]);
    }
}
