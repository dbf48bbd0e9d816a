use dplr_core::experiment::*;

fn spec() -> ExperimentSpec {
    let mut s = ExperimentSpec::new(DataSource::Synthetic {
        n: 600,
        d: 4,
        separation: 2.0,
        seed: 3,
    });
    s.repetitions = 3;
    s.max_rounds = 4;
    s.gd.epochs = 10;
    s.root_seed = 21;
    s
}

#[test]
fn default_epsilon_grid_gives_six_rows_per_algorithm() {
    let report = sweep_epsilon(&spec(), &DEFAULT_EPSILON_GRID).unwrap();
    assert_eq!(report.rows.len(), 18);
    for alg in ["NOISELESS", "OFPA", "OFAA"] {
        let values: Vec<f64> = report.rows_for(alg).map(|r| r.sweep_value).collect();
        assert_eq!(values, DEFAULT_EPSILON_GRID.to_vec());
    }
    assert_eq!(report.rows_for("ALG1").count(), 0);
}

#[test]
fn noiseless_rows_do_not_depend_on_epsilon() {
    let report = sweep_epsilon(&spec(), &[0.1, 0.8, 3.2]).unwrap();
    let rows: Vec<_> = report.rows_for("NOISELESS").collect();
    for r in &rows[1..] {
        assert!((r.mean_miscls - rows[0].mean_miscls).abs() < 0.002);
        assert_eq!(r.mean_miscls, rows[0].mean_miscls);
        assert_eq!(r.rounds_used, rows[0].rounds_used);
    }
}

#[test]
fn full_rate_matches_a_plain_run_at_the_fixed_budget() {
    let s = spec();
    let card = sweep_cardinality(&s, &DEFAULT_CARDINALITY_GRID).unwrap();
    assert_eq!(card.rows.len(), 15);
    let plain = sweep_epsilon(&s, &[s.epsilon]).unwrap();
    for alg in ["NOISELESS", "OFPA", "OFAA"] {
        let a = card.row(alg, 1.0).unwrap();
        let b = plain.row(alg, s.epsilon).unwrap();
        assert_eq!((a.mean_miscls, a.std_miscls, a.rounds_used), (b.mean_miscls, b.std_miscls, b.rounds_used));
    }
}

#[test]
fn full_width_projection_matches_an_unprojected_run() {
    let s = spec();
    let dims = sweep_dimensionality(&s, &[1, 2, 4]).unwrap();
    assert_eq!(dims.rows.len(), 9);
    let plain = sweep_epsilon(&s, &[s.epsilon]).unwrap();
    for alg in ["NOISELESS", "OFPA", "OFAA"] {
        assert_eq!(dims.row(alg, 4.0).unwrap().mean_miscls, plain.row(alg, s.epsilon).unwrap().mean_miscls);
    }
}

#[test]
fn bank_marketing_style_grid_gives_five_rows_per_algorithm() {
    let mut s = spec();
    s.source = DataSource::Synthetic {
        n: 400,
        d: 17,
        separation: 2.0,
        seed: 1,
    };
    s.repetitions = 1;
    s.max_rounds = 1;
    let report = sweep_dimensionality(&s, &[5, 8, 11, 14, 17]).unwrap();
    for alg in ["NOISELESS", "OFPA", "OFAA"] {
        assert_eq!(report.rows_for(alg).count(), 5);
    }
}

#[test]
fn timing_rows_are_positive() {
    let mut s = spec();
    s.algorithms.push(Algorithm::Alg1);
    let report = time_training(&s, &[0.8]).unwrap();
    assert_eq!(report.rows.len(), 4);
    for r in &report.rows {
        assert!(r.mean_seconds > 0.0, "{}", r.algorithm);
    }
    // observation only; the ordering is hardware-dependent
    for r in &report.rows {
        eprintln!("{:>9}: {:.6} s", r.algorithm, r.mean_seconds);
    }
}

#[test]
fn same_spec_renders_identical_reports() {
    let s = spec();
    let a = render_report(&sweep_cardinality(&s, &[0.4, 1.0]).unwrap());
    let b = render_report(&sweep_cardinality(&s, &[0.4, 1.0]).unwrap());
    assert_eq!(a, b);
    let mut other = s.clone();
    other.root_seed += 1;
    assert_ne!(a, render_report(&sweep_cardinality(&other, &[0.4, 1.0]).unwrap()));
}

#[test]
fn bad_sweeps_are_rejected() {
    let s = spec();
    assert!(sweep_epsilon(&s, &[]).is_err());
    assert!(sweep_epsilon(&s, &[0.0]).is_err());
    assert!(sweep_cardinality(&s, &[0.0]).is_err());
    assert!(sweep_dimensionality(&s, &[5]).is_err());
    assert!(sweep_dimensionality(&s, &[0]).is_err());
}
