mod common;

use chrono::{TimeZone, Utc};
use common::Lti;
use railtherm::data::{
    build_hankel, fuse, read_summary, read_trajectories, resample, segment_filter, write_summary,
    write_trajectories, RawRecordSet, SegmentSummary,
};
use railtherm::harness::{raw_records, run_closed_loop, ParamFile, Profile, Scenario, ScenarioConfig};
use railtherm::predictor::{fit, read_model, write_model, FitOptions, RankFallback};

fn deactivated_log(hours: f64) -> railtherm::harness::RunLog {
    let sc = Scenario {
        config: ScenarioConfig {
            duration_s: hours * 3600.0,
            profile: Some(Profile::MarchLike),
            ..ScenarioConfig::default()
        },
        params: ParamFile::default(),
        schedule: Profile::MarchLike.generate(hours * 3600.0 + 3600.0, 60.0).unwrap(),
        model: None,
    };
    run_closed_loop(&sc, false).unwrap()
}

#[test]
fn raw_records_to_trajectories_on_disk() {
    let log = deactivated_log(12.0);
    let start = Utc.with_ymd_and_hms(2024, 3, 1, 0, 0, 0).unwrap();
    let raw = raw_records(&log, start, 60.0, (46.95, 7.44)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    raw.write_dir(&dir.path().join("raw")).unwrap();
    let raw = RawRecordSet::read_dir(&dir.path().join("raw")).unwrap();

    let streams = fuse(&raw).unwrap();
    let mut summaries = Vec::new();
    for period in [60.0, 300.0] {
        let (trajs, summary) = segment_filter(&resample(&streams, period).unwrap(), 18);
        assert_eq!(summary, SegmentSummary::of(&trajs, period));
        let out = dir.path().join(format!("{period}s"));
        write_trajectories(&out, &trajs).unwrap();
        assert_eq!(read_trajectories(&out).unwrap(), trajs);
        summaries.push(summary);
    }
    assert_eq!(summaries[0].trajectories, 1);
    assert_eq!(summaries[0].mean_points, 721.0);
    assert_eq!(summaries[1].mean_points, 145.0);

    let path = dir.path().join("summary.csv");
    write_summary(&path, &summaries).unwrap();
    assert_eq!(read_summary(&path).unwrap(), summaries);
}

#[test]
fn fitted_model_survives_a_file_round_trip() {
    let sys = Lti::random(4, 11);
    let h = build_hankel(&[sys.simulate(500, 3, "a")], 5, 4).unwrap();
    let m = fit(&h, &FitOptions::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    write_model(&path, &m).unwrap();
    let back = read_model(&path).unwrap();
    assert_eq!(back.phi, m.phi);
    assert_eq!(back.h, m.h);
    assert_eq!(back.meta, m.meta);
}

#[test]
fn fallbacks_predict_alike_on_rank_deficient_data() {
    let sys = Lti::random(5, 12);
    let train = sys.simulate(600, 4, "a");
    let test = sys.simulate(200, 5, "b");
    let h = build_hankel(&[train], 6, 6).unwrap();
    let pinv = fit(&h, &FitOptions::default()).unwrap();
    let ridge = fit(
        &h,
        &FitOptions {
            fallback: RankFallback::Ridge { scale: 1e-12 },
            ..FitOptions::default()
        },
    )
    .unwrap();
    let scaled = fit(
        &h,
        &FitOptions {
            standardize: true,
            ..FitOptions::default()
        },
    )
    .unwrap();
    for m in [&pinv, &ridge, &scaled] {
        let mae = m.evaluate_mae(std::slice::from_ref(&test)).unwrap();
        assert!(mae.per_step.iter().all(|v| *v < 1e-6), "{:?}", mae.per_step);
    }
}
