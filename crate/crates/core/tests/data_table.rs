mod common;

use proptest::prelude::*;
use rfimpute::table::{
    correlation_rho, dataset_stats, read_csv_from, write_csv_to, Column, MixedTable,
};

fn column_strategy(n: usize) -> impl Strategy<Value = Column> {
    let numeric = proptest::collection::vec(proptest::option::weighted(0.8, -1e6f64..1e6), n)
        .prop_map(|mut v| {
            if v.iter().all(Option::is_none) {
                v[0] = Some(0.25);
            }
            Column::numeric("num", v)
        });
    let factor = proptest::collection::vec(
        proptest::option::weighted(
            0.8,
            prop_oneof![Just("lv a"), Just("b,c"), Just("q\"uote"), Just("z")],
        ),
        n,
    )
    .prop_map(|mut v| {
        if v.iter().all(Option::is_none) {
            v[0] = Some("z");
        }
        Column::factor_from_strings("fac", v)
    });
    prop_oneof![numeric, factor]
}

fn table_strategy() -> impl Strategy<Value = MixedTable> {
    (1usize..15, 1usize..6).prop_flat_map(|(n, p)| {
        proptest::collection::vec(column_strategy(n), p).prop_map(|cols| {
            let cols = cols
                .into_iter()
                .enumerate()
                .map(|(j, c)| rename(c, &format!("v{j}")))
                .collect();
            MixedTable::new(cols).unwrap()
        })
    })
}

fn rename(c: Column, name: &str) -> Column {
    if c.is_numeric() {
        Column::from_f64(name, c.values().to_vec())
    } else {
        let cells: Vec<Option<String>> = (0..c.len())
            .map(|i| c.level(i).map(str::to_owned))
            .collect();
        Column::factor_from_strings(name, cells)
    }
}

/// Off-diagonal norm by a direct double loop over column pairs.
fn rho_oracle(cols: &[Vec<f64>]) -> f64 {
    let p = cols.len();
    let mut total = 0.0;
    for j in 0..p {
        let mut s = 0.0;
        for k in 0..j {
            let r = common::pearson(&cols[k], &cols[j]);
            s += r * r;
        }
        total += s.sqrt();
    }
    total / (p * (p - 1) / 2) as f64
}

fn numeric_table(cols: &[Vec<f64>]) -> MixedTable {
    MixedTable::new(
        cols.iter()
            .enumerate()
            .map(|(j, c)| Column::from_f64(format!("x{j}"), c.clone()))
            .collect(),
    )
    .unwrap()
}

fn numeric_block() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (2usize..9, 5usize..30).prop_flat_map(|(p, n)| {
        proptest::collection::vec(proptest::collection::vec(-50.0f64..50.0, n), p)
    })
}

proptest! {
    #[test]
    fn csv_round_trip_is_identity(t in table_strategy()) {
        let mut buf = Vec::new();
        write_csv_to(&t, &mut buf).unwrap();
        let back = read_csv_from(buf.as_slice(), None).unwrap();
        prop_assert_eq!(back.n_rows(), t.n_rows());
        for j in 0..t.n_cols() {
            let (a, b) = (t.column(j), back.column(j));
            prop_assert_eq!(a.kind(), b.kind());
            prop_assert_eq!(a.missing_mask(), b.missing_mask());
            for i in 0..a.len() {
                prop_assert_eq!(a.get(i).map(f64::to_bits), b.get(i).map(f64::to_bits));
            }
        }
    }

    #[test]
    fn rho_matches_pairwise_oracle(cols in numeric_block()) {
        let t = numeric_table(&cols);
        let rho = correlation_rho(&t).unwrap();
        prop_assert!((rho - rho_oracle(&cols)).abs() < 1e-10);
    }

    #[test]
    fn rho_invariant_under_permutation_and_affine_maps(
        cols in numeric_block(),
        shift in -100.0f64..100.0,
        scale in prop_oneof![-20.0f64..-0.1, 0.1f64..20.0],
        rot in 0usize..30,
    ) {
        let base = correlation_rho(&numeric_table(&cols)).unwrap();
        let n = cols[0].len();
        let mut moved: Vec<Vec<f64>> = cols
            .iter()
            .map(|c| (0..n).map(|i| c[(i + rot) % n]).collect())
            .collect();
        for v in moved[0].iter_mut() {
            *v = shift + scale * *v;
        }
        let rho = correlation_rho(&numeric_table(&moved)).unwrap();
        prop_assert!((rho - base).abs() < 1e-9);
    }
}

#[test]
fn rho_single_pair_is_abs_r() {
    let x = vec![1.0, 2.0, 4.0, 3.0, 7.0];
    let y = vec![2.0, 1.0, -3.0, 0.5, -4.0];
    let t = numeric_table(&[x.clone(), y.clone()]);
    assert!((correlation_rho(&t).unwrap() - common::pearson(&x, &y).abs()).abs() < 1e-12);
    let dup = numeric_table(&[x.clone(), x]);
    assert!((correlation_rho(&dup).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn rho_of_independent_columns_is_small() {
    let mut rng = rfimpute::seed::rng(11);
    let cols: Vec<Vec<f64>> = (0..3)
        .map(|_| (0..10_000).map(|_| common::normal(&mut rng)).collect())
        .collect();
    let t = numeric_table(&cols);
    let rho = correlation_rho(&t).unwrap();
    assert!((rho - rho_oracle(&cols)).abs() < 1e-12);
    assert!(rho < 0.03, "rho {rho}");
}

#[test]
fn factor_and_constant_columns_do_not_enter_rho() {
    let x = vec![1.0, 2.0, 4.0, 3.0];
    let y = vec![2.0, 1.0, -3.0, 0.5];
    let t = MixedTable::new(vec![
        Column::from_f64("x", x.clone()),
        Column::factor_from_strings("f", ["a", "b", "a", "b"].map(Some)),
        Column::from_f64("c", vec![5.0; 4]),
        Column::from_f64("y", y.clone()),
    ])
    .unwrap();
    assert!((correlation_rho(&t).unwrap() - common::pearson(&x, &y).abs()).abs() < 1e-12);
}

#[test]
fn info_and_complexity() {
    let t = common::mixed_table(100, 1);
    let t = MixedTable::new(
        (0..10)
            .map(|j| Column::from_f64(format!("c{j}"), t.column(0).values().to_vec()))
            .collect(),
    )
    .unwrap();
    let s = dataset_stats(&t).unwrap();
    assert!((s.info - 1.0).abs() < 1e-12);
    assert!((s.complexity - 3.0).abs() < 1e-12);
    let one = MixedTable::new(vec![Column::from_f64("a", vec![1.0])]).unwrap();
    let s = dataset_stats(&one).unwrap();
    assert_eq!((s.info, s.complexity, s.rho), (0.0, 0.0, None));
}
