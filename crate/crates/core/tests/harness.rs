use std::collections::BTreeSet;

use iqi_core::estimation::Method;
use iqi_core::harness::{
    cells, export, read_csv, run_sweep, run_sweep_with, run_trial, trial_seed, Format, Recipe, SimConfig, TrialContext,
};
use iqi_core::metrics::CdfCurve;
use iqi_core::parallel::Execution;

fn small(recipe: Recipe, trials: usize) -> SimConfig {
    let mut cfg = SimConfig::recipe(recipe);
    cfg.trials = trials;
    cfg
}

#[test]
fn run_trial_is_deterministic() {
    let cfg = SimConfig::default();
    let cell = cells(&cfg)[0];
    let a = run_trial(&cfg, &cell, 99).unwrap();
    let b = run_trial(&cfg, &cell, 99).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.len(), Method::ALL.len());
    let c = run_trial(&cfg, &cell, 100).unwrap();
    assert_ne!(a[0].output_sir_db, c[0].output_sir_db);
}

#[test]
fn uncompensated_trial_sits_at_irr() {
    let cfg = SimConfig {
        methods: vec![Method::Uncompensated],
        ..Default::default()
    };
    let cell = cells(&cfg)[0];
    for seed in 0..5 {
        let s = run_trial(&cfg, &cell, seed).unwrap();
        assert!((s[0].output_sir_db - 24.42).abs() < 0.2, "{}", s[0].output_sir_db);
    }
}

#[test]
fn noise_free_static_trial_is_near_perfect() {
    let mut cfg = SimConfig::default();
    cfg.set("snr-db", "inf").unwrap();
    cfg.set("doppler-hz", "0").unwrap();
    cfg.set("sir-in-db", "-10").unwrap();
    cfg.methods = vec![Method::SubspaceProduct, Method::SubspaceLse];
    let cell = cells(&cfg)[0];
    for seed in 0..10 {
        for s in run_trial(&cfg, &cell, seed).unwrap() {
            assert!(s.output_sir_db >= 80.0, "{:?}", s);
        }
    }
}

#[test]
fn recipes_produce_expected_curves() {
    let fig3 = run_sweep(&small(Recipe::Fig3, 20)).unwrap();
    assert_eq!(fig3.cells.len(), 8);
    let groups: BTreeSet<String> = fig3
        .cells
        .iter()
        .map(|c| format!("{}|{}|{}|{}", c.method, c.cell.snr_db, c.cell.sir_in_db, c.cell.frames))
        .collect();
    assert_eq!(groups.len(), 8);
    assert!(fig3.find(Method::Blind, 35.0, -10.0, 10).is_some());

    let fig4 = run_sweep(&small(Recipe::Fig4, 20)).unwrap();
    assert_eq!(fig4.cells.len(), 6);
    assert!(fig4.cells.iter().all(|c| c.cdf.as_ref().unwrap().len() == 20));
}

#[test]
fn single_trial_is_a_single_step() {
    let cfg = SimConfig {
        trials: 1,
        ..Default::default()
    };
    let result = run_sweep(&cfg).unwrap();
    for c in &result.cells {
        let cdf = c.cdf.as_ref().unwrap();
        assert_eq!(cdf.probs, vec![1.0]);
        assert_eq!(c.summary.median_sir_db, Some(cdf.values[0]));
    }
}

#[test]
fn csv_round_trip() {
    let cfg = small(Recipe::Fig3, 15);
    let result = run_sweep(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fig3.csv");
    export(&result, &path, Format::Csv).unwrap();

    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("method,snr_db,sir_in_db,frames,sir_db,cdf_prob\n"));
    assert!(text.ends_with('\n'));

    let rows = read_csv(&path).unwrap();
    assert_eq!(rows.len(), 8 * 15);
    let groups: BTreeSet<String> = rows
        .iter()
        .map(|r| format!("{}|{}|{}|{}", r.method, r.snr_db, r.sir_in_db, r.frames))
        .collect();
    assert_eq!(groups.len(), 8);
    for cell in &result.cells {
        let cdf = cell.cdf.as_ref().unwrap();
        let mine: Vec<_> = rows
            .iter()
            .filter(|r| r.method == cell.method && r.sir_in_db == cell.cell.sir_in_db && r.frames == cell.cell.frames)
            .collect();
        let values: Vec<f64> = mine.iter().map(|r| r.sir_db).collect();
        let probs: Vec<f64> = mine.iter().map(|r| r.cdf_prob).collect();
        assert_eq!(values, cdf.values);
        assert_eq!(probs, cdf.probs);
    }
}

#[test]
fn json_export_carries_summary_and_provenance() {
    let mut cfg = small(Recipe::Fig4, 10);
    cfg.snr_db.push(f64::INFINITY);
    let result = run_sweep(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fig4.json");
    export(&result, &path, Format::Json).unwrap();
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["provenance"]["seed"], 1);
    assert_eq!(v["cells"].as_array().unwrap().len(), 8);
    assert_eq!(v["cells"][6]["snr_db"], "inf");
    assert!(v["cells"][0]["summary"]["median_sir_db"].is_number());
    assert_eq!(v["cells"][0]["curve"]["cdf_prob"].as_array().unwrap().len(), 10);
    assert_eq!(v["config"]["snr_db"][3], "inf");
}

#[test]
fn no_methods_gives_header_only_csv() {
    let mut cfg = SimConfig::default();
    cfg.methods.clear();
    cfg.trials = 3;
    let result = run_sweep(&cfg).unwrap();
    assert!(result.cells.is_empty());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.csv");
    export(&result, &path, Format::Csv).unwrap();
    assert_eq!(
        std::fs::read_to_string(&path).unwrap(),
        "method,snr_db,sir_in_db,frames,sir_db,cdf_prob\n"
    );
    assert!(read_csv(&path).unwrap().is_empty());
}

#[test]
fn export_errors_name_the_path() {
    let result = run_sweep(&small(Recipe::Fig4, 2)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("missing").join("out.csv");
    let err = export(&result, &path, Format::Csv).unwrap_err();
    assert!(err.to_string().contains("missing"), "{err}");
}

#[test]
fn trial_order_does_not_matter() {
    let cfg = small(Recipe::Fig4, 30);
    let swept = run_sweep(&cfg).unwrap();
    let ctx = TrialContext::new(&cfg).unwrap();
    for cell in cells(&cfg) {
        let mut values = Vec::new();
        for trial in (0..cfg.trials).rev() {
            let rec = ctx.run_trial(&cell, trial, trial_seed(cfg.seed, cell.index, trial));
            values.extend(
                rec.samples()
                    .into_iter()
                    .filter(|s| s.method == Method::Blind)
                    .map(|s| s.output_sir_db),
            );
        }
        let reversed = CdfCurve::from_values(values).unwrap();
        let original = swept
            .find(Method::Blind, cell.snr_db, cell.sir_in_db, cell.frames)
            .unwrap();
        assert_eq!(original.cdf.as_ref().unwrap(), &reversed);
    }
}

#[test]
fn sequential_and_parallel_agree() {
    let cfg = small(Recipe::Fig3, 25);
    let a = run_sweep_with(&cfg, Execution::Sequential).unwrap();
    let b = run_sweep_with(&cfg, Execution::Parallel).unwrap();
    assert_eq!(a, b);
}

#[test]
fn blind_is_more_biased_than_subspace() {
    let cfg = SimConfig {
        trials: 300,
        methods: vec![Method::SubspaceProduct, Method::Blind],
        ..Default::default()
    };
    let result = run_sweep(&cfg).unwrap();
    let sub = result.find(Method::SubspaceProduct, 35.0, 0.0, 1).unwrap();
    let blind = result.find(Method::Blind, 35.0, 0.0, 1).unwrap();
    assert!(blind.summary.mean_nmse.unwrap() > sub.summary.mean_nmse.unwrap());
    assert!(blind.summary.median_sir_db.unwrap() < sub.summary.median_sir_db.unwrap());
}

#[test]
fn invalid_configs_are_rejected() {
    let cfg = SimConfig {
        trials: 0,
        ..Default::default()
    };
    assert!(run_sweep(&cfg).is_err());
    let mut cfg = SimConfig::default();
    cfg.frame.zc_root = 2;
    assert!(run_sweep(&cfg).is_err());
}
