use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use flate2::write::GzEncoder;
use flate2::Compression;
use hstraffic::generator::{generate_synthetic, GeneratorSpec};
use hstraffic::netstats::{pooled_from_csv, QuantityKind};
use hstraffic::pipeline::{
    emit_report, run_analyze, InputSource, PipelineError, RunConfig, MANIFEST_FILE,
};
use hstraffic::topology::{CoreRule, TOPOLOGY_CSV_HEADER};
use hstraffic::zm::{model_distribution, AlphaGrid, ZmParams};

fn mixture() -> GeneratorSpec {
    GeneratorSpec {
        n_isolated_pairs: 300,
        supernode_leaf_count: 600,
        core_size: 15,
        core_density: 0.3,
        core_leaf_count: 60,
        seed: 21,
        ..Default::default()
    }
}

fn write_csv(
    dir: &Path,
    name: &str,
    spec: &GeneratorSpec,
    packets: u64,
    noise_every: usize,
) -> PathBuf {
    let (stream, _) = generate_synthetic(spec, packets).unwrap();
    let mut text = String::new();
    for (i, r) in stream.enumerate() {
        if noise_every > 0 && i % noise_every == 0 {
            text.push_str(&format!("{},9.9.9.9,8.8.8.8,UDP,4\n", r.timestamp_us));
        }
        text.push_str(&r.to_csv_line());
        text.push('\n');
    }
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn file_config(paths: Vec<PathBuf>, sizes: &[usize]) -> RunConfig {
    let mut cfg = RunConfig::new(InputSource::Files {
        paths,
        header: false,
    });
    cfg.window_sizes = Some(sizes.to_vec());
    cfg.alpha_grid = AlphaGrid::new(0.5, 3.0, 0.05).unwrap();
    cfg
}

#[test]
fn invalid_packets_are_skipped_and_counted() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write_csv(dir.path(), "p.csv", &mixture(), 3_000, 10);
    let b = run_analyze(&file_config(vec![csv], &[1_000])).unwrap();
    assert_eq!(b.ingest.total_valid, 3_000);
    assert_eq!(b.ingest.total_skipped, 300);
    assert_eq!(b.results[0].windows.len(), 3);
}

#[test]
fn gzip_and_plain_inputs_agree() {
    let dir = tempfile::tempdir().unwrap();
    let plain = write_csv(dir.path(), "p.csv", &mixture(), 4_000, 0);
    let gz = dir.path().join("p.csv.gz");
    let mut enc = GzEncoder::new(fs::File::create(&gz).unwrap(), Compression::default());
    enc.write_all(&fs::read(&plain).unwrap()).unwrap();
    enc.finish().unwrap();

    let a = run_analyze(&file_config(vec![plain], &[1_000])).unwrap();
    let b = run_analyze(&file_config(vec![gz.clone()], &[1_000])).unwrap();
    let strip = |files: &std::collections::BTreeMap<String, String>| {
        files
            .iter()
            .filter(|(k, _)| k.as_str() != MANIFEST_FILE)
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect::<Vec<_>>()
    };
    assert_eq!(strip(&a.files), strip(&b.files));
}

#[test]
fn windows_span_file_boundaries() {
    let dir = tempfile::tempdir().unwrap();
    let first = write_csv(dir.path(), "a.csv", &mixture(), 1_500, 0);
    let second = write_csv(
        dir.path(),
        "b.csv",
        &GeneratorSpec {
            seed: 22,
            ..mixture()
        },
        1_500,
        0,
    );
    let b = run_analyze(&file_config(vec![first, second], &[1_000])).unwrap();
    assert_eq!(b.results[0].windows.len(), 3);
    assert_eq!(b.ingest.trailing_discarded, 0);
}

#[test]
fn report_files_parse_back() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write_csv(dir.path(), "p.csv", &mixture(), 5_000, 0);
    let bundle = run_analyze(&file_config(vec![csv], &[1_000, 2_000])).unwrap();
    let out = dir.path().join("out");
    emit_report(&bundle, &out, false).unwrap();

    for r in &bundle.results {
        for q in &r.quantities {
            let text =
                fs::read_to_string(out.join(format!("pooled_{}_nv{}.csv", q.kind, r.n_v))).unwrap();
            let back = pooled_from_csv(&text, q.pooled.d_max).unwrap();
            assert_eq!(back, q.pooled);

            let fit: serde_json::Value = serde_json::from_str(
                &fs::read_to_string(out.join(format!("fit_{}_nv{}.json", q.kind, r.n_v))).unwrap(),
            )
            .unwrap();
            for key in [
                "alpha",
                "delta",
                "loss",
                "leaf",
                "d_max",
                "bins_used",
                "grid",
            ] {
                assert!(fit.get(key).is_some(), "missing {key}");
            }
            assert_eq!(fit["grid"]["step"], 0.05);
        }
    }
    let topo = fs::read_to_string(out.join("topology_nv2000_w1.csv")).unwrap();
    assert_eq!(topo.lines().next().unwrap(), TOPOLOGY_CSV_HEADER);

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join(MANIFEST_FILE)).unwrap()).unwrap();
    assert_eq!(manifest["ingest"]["total_valid"], 5_000);
    let windows: Vec<u64> = manifest["window_sizes"]
        .as_array()
        .unwrap()
        .iter()
        .map(|w| w["windows"].as_u64().unwrap())
        .collect();
    assert_eq!(windows, vec![5, 2]);
    for entry in manifest["files"].as_array().unwrap() {
        assert!(out.join(entry["name"].as_str().unwrap()).exists());
    }

    assert!(matches!(
        emit_report(&bundle, &out, false),
        Err(PipelineError::OutputExists(_))
    ));
    emit_report(&bundle, &out, true).unwrap();
}

#[test]
fn strict_core_rule_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write_csv(dir.path(), "p.csv", &mixture(), 2_000, 0);
    let cfg = file_config(vec![csv], &[1_000]).with_core_rule(CoreRule::StrictInequality);
    let b = run_analyze(&cfg).unwrap();
    assert!(b.files[MANIFEST_FILE].contains("strict_inequality"));
}

#[test]
fn zm_stream_fits_generator_alpha() {
    let spec = GeneratorSpec {
        degree_model: Some(ZmParams::new(1.8, 2.0, 10_000).unwrap()),
        seed: 31,
        ..Default::default()
    };
    let mut cfg = RunConfig::new(InputSource::Synthetic {
        spec,
        packets: 1_000_000,
    });
    cfg.window_sizes = Some(vec![100_000]);
    cfg.quantities = vec![QuantityKind::SourceFanOut];
    cfg.workers = 4;
    let b = run_analyze(&cfg).unwrap();
    let q = &b.results[0].quantities[0];
    assert_eq!(q.pooled.n_windows, 10);

    // Per-bin agreement with the generating model, within 3σ of the
    // window-to-window spread, on every bin the fit would use.
    let model = model_distribution(
        &ZmParams::new(1.8, 2.0, 10_000).unwrap(),
        QuantityKind::SourceFanOut,
    );
    for i in 0..q.pooled.len().min(model.len()) {
        let (d, s) = (q.pooled.values[i], q.pooled.sigmas[i]);
        if d > s {
            assert!(
                (d - model.values[i]).abs() <= 3.0 * s,
                "bin {i}: data {d} sigma {s} model {}",
                model.values[i]
            );
        }
    }
    let fit = q.fit.as_ref().unwrap();
    assert!(
        (fit.params.alpha - 1.8).abs() <= 0.1,
        "alpha {}",
        fit.params.alpha
    );
}
