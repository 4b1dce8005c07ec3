use std::fs;

use lehmberg::runner::{parse_config, run_sweep, PointStatus, RunKind, MANIFEST_FILE};

const SWEEP: &str = r#"
preset = "Rb87-diamond"

[parameters]
separation_nm = 140.0

[[sweep]]
axis = "delta2"
start = -4.0
stop = 4.0
points = 9
"#;

fn run_in(dir: &std::path::Path, workers: usize, kind: RunKind, text: &str) -> lehmberg::runner::RunManifest {
    let mut cfg = parse_config(text).unwrap();
    cfg.output.dir = dir.to_path_buf();
    cfg.workers = Some(workers);
    run_sweep(&cfg, kind).unwrap()
}

#[test]
fn outputs_are_byte_identical_across_worker_counts() {
    let tmp = tempfile::tempdir().unwrap();
    for kind in [RunKind::G2, RunKind::Spectra] {
        let a = tmp.path().join(format!("{kind}-1"));
        let b = tmp.path().join(format!("{kind}-3"));
        let ma = run_in(&a, 1, kind, SWEEP);
        let mb = run_in(&b, 3, kind, SWEEP);
        assert_eq!(ma.config_hash.len(), 64);
        assert_eq!(ma.points.len(), 9);
        assert!(ma.points.iter().all(|p| p.status != PointStatus::Failed));
        assert_eq!(ma.exit_code(), 0);
        for path in &ma.outputs {
            let name = path.file_name().unwrap();
            if name == MANIFEST_FILE {
                continue;
            }
            assert_eq!(fs::read(path).unwrap(), fs::read(b.join(name)).unwrap(), "{name:?}");
        }
        let again = tmp.path().join(format!("{kind}-again"));
        run_in(&again, 2, kind, SWEEP);
        let first = ma.outputs.iter().find(|p| p.file_name().unwrap() != MANIFEST_FILE).unwrap();
        assert_eq!(fs::read(first).unwrap(), fs::read(again.join(first.file_name().unwrap())).unwrap());
        assert_eq!(mb.points.len(), 9);
    }
}

#[test]
fn manifest_lists_every_point_once() {
    let tmp = tempfile::tempdir().unwrap();
    let text = "preset = \"Rb87-diamond\"\n[[sweep]]\naxis = \"separation_nm\"\nvalues = [60.0, 120.0, 240.0]\n[[sweep]]\naxis = \"delta1\"\nvalues = [-70.0, -60.0]\n";
    let m = run_in(tmp.path(), 2, RunKind::Channels, text);
    let indices: Vec<usize> = m.points.iter().map(|p| p.index).collect();
    assert_eq!(indices, (0..6).collect::<Vec<_>>());
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join(MANIFEST_FILE)).unwrap()).unwrap();
    assert_eq!(manifest["command"], "channels");
    assert_eq!(manifest["points"].as_array().unwrap().len(), 6);
    let table = fs::read_to_string(tmp.path().join("channels.csv")).unwrap();
    assert_eq!(table.lines().count(), 1 + 6 * 4);
    assert!(table.starts_with("r12_nm,transition,gamma_plus,gamma_minus\n"));
}
