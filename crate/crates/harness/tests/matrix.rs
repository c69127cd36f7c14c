use proptest::prelude::*;
use wormsim::detector::TimelinePoint;
use wormsim::{Protocol, ScenarioConfig};
use wormsim_harness::matrix::{decode_timeline, encode_timeline};
use wormsim_harness::{read_rows, run_matrix, summarize, write_rows, ExperimentMatrix, MatrixError, ResultRow};

fn short(hours: f64) -> ScenarioConfig {
    ScenarioConfig {
        sim_duration: hours * 3600.0,
        ..ScenarioConfig::default()
    }
}

fn row(protocol: Protocol, node_total: usize, seed: u64, success: f64) -> ResultRow {
    ResultRow {
        node_total,
        protocol,
        seed,
        true_detections: (success / 20.0) as usize,
        false_detections: 0,
        success_rate: success,
        false_alarm_rate: 0.0,
        mean_detection_time: Some(2400.0),
        wall_time: 1.0,
        timeline: "1800:0:0;2400:1:0".into(),
    }
}

#[test]
fn one_row_per_cell_in_cell_order() {
    let matrix = ExperimentMatrix {
        seeds: vec![3],
        base_config: short(0.25),
        ..ExperimentMatrix::default()
    };
    let rows = run_matrix(&matrix).unwrap();
    assert_eq!(rows.len(), 16);
    let cells: Vec<_> = rows.iter().map(|r| r.cell()).collect();
    assert_eq!(cells, matrix.cells());
}

#[test]
fn duplicate_seed_gives_duplicate_rows() {
    let matrix = ExperimentMatrix {
        node_totals: vec![58],
        protocols: vec![Protocol::Epidemic],
        seeds: vec![4, 4],
        base_config: short(1.0),
    };
    let rows = run_matrix(&matrix).unwrap();
    assert!(rows[0].same_outcome(&rows[1]));
}

#[test]
fn invalid_cell_rejects_the_whole_matrix() {
    let matrix = ExperimentMatrix {
        node_totals: vec![58, 10],
        ..ExperimentMatrix::default()
    };
    match run_matrix(&matrix) {
        Err(MatrixError::InvalidCell { cell, .. }) => assert_eq!(cell.node_total, 10),
        other => panic!("expected an invalid cell, got {other:?}"),
    }
    let empty = ExperimentMatrix {
        seeds: vec![],
        ..ExperimentMatrix::default()
    };
    assert!(matches!(run_matrix(&empty), Err(MatrixError::Empty("seeds"))));
}

#[test]
fn single_row_summary_is_the_row() {
    let r = row(Protocol::Prophet, 64, 1, 80.0);
    let t = summarize(&[r.clone()], 5);
    assert_eq!(t.cells.len(), 1);
    let c = &t.cells[0];
    assert_eq!((c.success_rate.mean, c.success_rate.std), (80.0, 0.0));
    assert_eq!(c.true_detections.mean, 4.0);
    assert_eq!(c.mean_detection_time.unwrap().mean, 2400.0);
}

#[test]
fn two_rows_average() {
    let rows = [row(Protocol::Epidemic, 58, 1, 80.0), row(Protocol::Epidemic, 58, 2, 100.0)];
    let c = &summarize(&rows, 5).cells[0];
    assert_eq!(c.success_rate.mean, 90.0);
    assert!((c.success_rate.std - 200f64.sqrt()).abs() < 1e-12);
}

#[test]
fn series_rates_follow_the_timeline() {
    let t = summarize(&[row(Protocol::Epidemic, 58, 1, 20.0)], 5);
    assert_eq!(t.series[0].points, vec![(1800.0, 0, 0.0), (2400.0, 1, 20.0)]);
    assert!(t.series_csv().starts_with("protocol,node_total,seed,time,true_pairs,success_rate\nepidemic,58,1,1800,0,0\n"));
}

#[test]
fn timeline_keeps_only_changes() {
    let pts = [(1800.0, 0, 0), (2400.0, 0, 0), (3000.0, 2, 0), (3600.0, 2, 0)]
        .map(|(time, true_pairs, false_pairs)| TimelinePoint {
            time,
            true_pairs,
            false_pairs,
        });
    let text = encode_timeline(&pts);
    assert_eq!(text, "1800:0:0;3000:2:0");
    assert_eq!(decode_timeline(&text).unwrap(), vec![pts[0], pts[2]]);
    assert!(decode_timeline("1800:0").is_err());
    assert!(decode_timeline("").unwrap().is_empty());
}

fn arb_row() -> impl Strategy<Value = ResultRow> {
    (
        prop::sample::select(vec![58usize, 64, 70, 76]),
        prop::sample::select(Protocol::ALL.to_vec()),
        0u64..1000,
        0usize..=5,
        0usize..=5,
        prop::option::of(0.0f64..43200.0),
        0.0f64..100.0,
        prop::collection::vec((0usize..=5, 0usize..=3), 0..6),
    )
        .prop_map(|(node_total, protocol, seed, t, f, mdt, wall, steps)| {
            let points: Vec<TimelinePoint> = steps
                .into_iter()
                .enumerate()
                .map(|(i, (true_pairs, false_pairs))| TimelinePoint {
                    time: 1800.0 + 600.0 * i as f64,
                    true_pairs,
                    false_pairs,
                })
                .collect();
            ResultRow {
                node_total,
                protocol,
                seed,
                true_detections: t,
                false_detections: f,
                success_rate: t as f64 * 20.0,
                false_alarm_rate: f as f64 * 20.0,
                mean_detection_time: mdt,
                wall_time: wall,
                timeline: encode_timeline(&points),
            }
        })
}

proptest! {
    #[test]
    fn csv_round_trips(rows in prop::collection::vec(arb_row(), 1..20)) {
        let mut buf = Vec::new();
        write_rows(&rows, &mut buf).unwrap();
        prop_assert_eq!(read_rows(buf.as_slice()).unwrap(), rows);
    }

    #[test]
    fn summary_means_lie_within_their_rows(rows in prop::collection::vec(arb_row(), 1..40)) {
        for c in summarize(&rows, 5).cells {
            let mine: Vec<&ResultRow> = rows.iter().filter(|r| r.protocol == c.protocol && r.node_total == c.node_total).collect();
            prop_assert_eq!(mine.len(), c.runs);
            for (stat, f) in [
                (c.success_rate, (|r: &ResultRow| r.success_rate) as fn(&ResultRow) -> f64),
                (c.false_alarm_rate, |r: &ResultRow| r.false_alarm_rate),
                (c.wall_time, |r: &ResultRow| r.wall_time),
            ] {
                let lo = mine.iter().map(|r| f(r)).fold(f64::INFINITY, f64::min);
                let hi = mine.iter().map(|r| f(r)).fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(stat.mean >= lo - 1e-9 && stat.mean <= hi + 1e-9);
                prop_assert_eq!((stat.min, stat.max), (lo, hi));
            }
        }
    }
}
