use fastnn::bench::{EstimatorId, ExperimentId, ExperimentPlan};
use fastnn::config::{plan_from_toml, plan_to_toml};
use fastnn::csvio::{parse_table, RowRange, SplitSpec, Standardizer};
use fastnn::error::CliError;
use fastnn_core::RowMatrix;
use proptest::prelude::*;

fn table(text: &str) -> Result<fastnn::csvio::Table, CliError> {
    parse_table(text.as_bytes(), "t.csv")
}

#[test]
fn parses_headered_numeric_csv() {
    let t = table("a, b ,y\n1,2,3\n4,5e-1,-6\n").unwrap();
    assert_eq!(t.names, ["a", "b", "y"]);
    assert_eq!(t.data.rows, 2);
    assert_eq!(t.data.row(1), [4.0, 0.5, -6.0]);
    let (d, names) = t.dataset("y", None).unwrap();
    assert_eq!(names, ["a", "b"]);
    assert_eq!(d.y, [3.0, -6.0]);
    assert_eq!(d.x.row(0), [1.0, 2.0]);
}

#[test]
fn nan_and_inf_cells_are_located() {
    for bad in ["NaN", "inf", "-inf"] {
        let e = table(&format!("a,y\n1,2\n3,{bad}\n")).unwrap_err();
        let msg = e.to_string();
        assert!(
            msg.contains("row 2") && msg.contains("line 3") && msg.contains("`y`"),
            "{msg}"
        );
        assert_eq!(e.exit_code(), 2);
    }
    let msg = table("a,y\nx,2\n").unwrap_err().to_string();
    assert!(
        msg.contains("row 1") && msg.contains("`a`") && msg.contains("`x`"),
        "{msg}"
    );
}

#[test]
fn ragged_rows_are_rejected() {
    let e = table("a,y\n1,2\n3\n").unwrap_err();
    assert_eq!(e.exit_code(), 2);
}

#[test]
fn response_must_appear_exactly_once() {
    let t = table("a,y,y\n1,2,3\n").unwrap();
    assert!(t.dataset("y", None).unwrap_err().to_string().contains("2 times"));
    assert!(t.dataset("z", None).unwrap_err().to_string().contains("not found"));
    let t = table("a,y\n1,2\n").unwrap();
    assert!(t.dataset("y", Some(&["y".to_string()])).is_err());
}

#[test]
fn row_range_parsing() {
    assert_eq!("3..10".parse::<RowRange>().unwrap(), RowRange { start: 3, end: 10 });
    assert!("3-10".parse::<RowRange>().is_err());
    assert!("a..3".parse::<RowRange>().is_err());
}

#[test]
fn explicit_row_splits() {
    let s = SplitSpec::Rows {
        train: RowRange { start: 0, end: 6 },
        valid: RowRange { start: 6, end: 8 },
        test: None,
    };
    let ix = s.indices(10, 0).unwrap();
    assert_eq!(ix.train, (0..6).collect::<Vec<_>>());
    assert_eq!(ix.valid, [6, 7]);
    assert_eq!(ix.test, [8, 9]);
    let overlap = SplitSpec::Rows {
        train: RowRange { start: 0, end: 6 },
        valid: RowRange { start: 5, end: 8 },
        test: None,
    };
    assert!(overlap.indices(10, 0).is_err());
    assert!(s.indices(7, 0).is_err());
}

proptest! {
    #[test]
    fn ratio_split_partitions_rows(
        n in 10usize..300,
        split in 0.3f64..1.0,
        inner in 0.2f64..0.9,
        seed in any::<u64>(),
        repeat in 0usize..5,
    ) {
        let s = SplitSpec::Ratio { split, inner_split: inner, split_seed: seed };
        let ix = s.indices(n, repeat).unwrap();
        let pool = (split * n as f64).round() as usize;
        let mut all: Vec<usize> = ix.train.iter().chain(&ix.valid).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..pool).collect::<Vec<_>>());
        prop_assert_eq!(ix.test, (pool..n).collect::<Vec<_>>());
        prop_assert_eq!(ix.train.len(), (inner * pool as f64).round() as usize);
        prop_assert_eq!(s.indices(n, repeat).unwrap().train, ix.train);
    }

    #[test]
    fn standardized_columns_have_zero_mean_unit_scale(
        vals in prop::collection::vec(-50.0f64..50.0, 30),
    ) {
        let x = RowMatrix::from_vec(10, 3, vals).unwrap();
        let s = Standardizer::fit(&x);
        let z = s.apply(&x).unwrap();
        for j in 0..3 {
            let c = z.column(j);
            let mean = c.iter().sum::<f64>() / 10.0;
            let var = c.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 10.0;
            prop_assert!(mean.abs() < 1e-9);
            prop_assert!((var - 1.0).abs() < 1e-9 || var < 1e-20);
        }
    }
}

#[test]
fn standardizer_rejects_wrong_width_and_keeps_constant_columns() {
    let x = RowMatrix::from_rows(&[vec![1.0, 5.0], vec![3.0, 5.0]]).unwrap();
    let s = Standardizer::fit(&x);
    assert_eq!(s.scales[1], 1.0);
    assert_eq!(s.apply(&x).unwrap().column(1), [0.0, 0.0]);
    assert!(s.apply(&RowMatrix::zeros(2, 3)).is_err());
}

#[test]
fn config_missing_required_key_names_it() {
    let e = plan_from_toml("experiment = \"exp1\"\n", "c.toml", false).unwrap_err();
    assert_eq!(e.exit_code(), 2);
    assert!(e.to_string().contains("`seed`"), "{e}");
    let e = plan_from_toml("seed = 1\n", "c.toml", false).unwrap_err();
    assert!(e.to_string().contains("`experiment`"), "{e}");
}

#[test]
fn config_unknown_keys_rejected() {
    for text in [
        "experiment = \"exp1\"\nseed = 1\ntrails = 3\n",
        "experiment = \"exp1\"\nseed = 1\n[arch]\nwidht = 3\n",
        "experiment = \"exp1\"\nseed = 1\n[train]\nlearning_rate = 0.1\n",
    ] {
        let e = plan_from_toml(text, "c.toml", false).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().contains("unknown field"), "{e}");
    }
}

#[test]
fn config_overlays_defaults() {
    let text = "experiment = \"exp2\"\nseed = 9\np = [40]\n[arch]\nwidth = 12\n[train]\nepochs = 7\n";
    let plan = plan_from_toml(text, "c.toml", false).unwrap();
    let base = ExperimentPlan::defaults(ExperimentId::Exp2, false);
    assert_eq!(plan.seed, 9);
    assert_eq!(plan.p, [40]);
    assert_eq!(plan.arch.width, 12);
    assert_eq!(plan.arch.depth, base.arch.depth);
    assert_eq!(plan.train.epochs, 7);
    assert_eq!(plan.train.lr, base.train.lr);
    assert_eq!(plan.estimators, base.estimators);
}

#[test]
fn config_real_data_split_replaces_kind() {
    let text = "experiment = \"real-data\"\nseed = 1\n[data]\npath = \"d.csv\"\nresponse = \"y\"\n\
                [data.split]\nkind = \"rows\"\ntrain = { start = 0, end = 50 }\nvalid = { start = 50, end = 70 }\n";
    let plan = plan_from_toml(text, "c.toml", false).unwrap();
    let data = plan.data.unwrap();
    assert!(matches!(data.split, SplitSpec::Rows { test: None, .. }));
    assert!(data.standardize);
}

#[test]
fn resolved_config_round_trips_for_every_experiment() {
    for exp in ExperimentId::ALL {
        for paper in [false, true] {
            let plan = ExperimentPlan::defaults(exp, paper);
            let text = plan_to_toml(&plan).unwrap();
            let back = plan_from_toml(&text, "echo", paper).unwrap();
            assert_eq!(back, plan, "{exp} paper={paper}");
        }
    }
    let mut plan = ExperimentPlan::defaults(ExperimentId::FastSim, false);
    plan.estimators = vec![EstimatorId::FastNn, EstimatorId::Lasso];
    plan.noise_var = Some(0.5);
    plan.train.input_dropout = 0.25;
    let back = plan_from_toml(&plan_to_toml(&plan).unwrap(), "echo", false).unwrap();
    assert_eq!(back, plan);
}
