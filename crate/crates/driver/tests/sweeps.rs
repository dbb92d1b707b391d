use std::path::Path;

use breathing_driver::config::{EngineKind, ExperimentConfig};
use breathing_driver::contour::Match;
use breathing_driver::sweep::{load_manifest, manifest_path};
use breathing_driver::{gp_hyperbola_overlay, sweep, ContourTable, SweepOptions};

fn base(dir: &Path, kind: EngineKind) -> ExperimentConfig {
    let mut c = ExperimentConfig::default();
    c.engine.kind = kind;
    c.output.cache_dir = dir.join("cache");
    c.output.dir = dir.join("out");
    c
}

fn light_gp(dir: &Path) -> ExperimentConfig {
    let mut c = base(dir, EngineKind::Gp);
    c.run.periods = 30.0;
    c.gp.nodes = 512;
    c
}

#[test]
fn resumed_sweep_runs_only_missing_points() {
    let tmp = tempfile::tempdir().unwrap();
    let mut c = base(tmp.path(), EngineKind::Ed);
    c.ed.n_orbitals = 6;
    c.run.periods = 40.0;
    c.sweep.g = vec![0.5, 1.0, 2.0];
    c.sweep.n = vec![2, 3];
    let partial = sweep(&c, &SweepOptions { max_points: Some(4), ..Default::default() }).unwrap();
    assert_eq!((partial.computed, partial.skipped), (4, 0));
    assert_eq!(partial.table.rows.len(), 4);

    // wipe the run cache so a recomputed point would be visible as work
    std::fs::remove_dir_all(tmp.path().join("cache")).unwrap();
    let full = sweep(&c, &SweepOptions::default()).unwrap();
    assert_eq!((full.computed, full.skipped), (2, 4));
    assert_eq!(full.table.rows.len(), 6);
    assert!(full.table.is_rectangular());
    let cached_runs = std::fs::read_dir(tmp.path().join("cache")).unwrap().count();
    assert_eq!(cached_runs, 2);

    let again = sweep(&c, &SweepOptions::default()).unwrap();
    assert_eq!((again.computed, again.skipped), (0, 6));
    assert_eq!(again.table, full.table);
    assert_eq!(load_manifest(&manifest_path(&c)).unwrap().len(), 6);
}

#[test]
fn torn_manifest_line_is_recomputed() {
    let tmp = tempfile::tempdir().unwrap();
    let mut c = base(tmp.path(), EngineKind::Analytic);
    c.sweep.g = vec![0.5, 1.0];
    c.sweep.n = vec![2];
    sweep(&c, &SweepOptions::default()).unwrap();
    let path = manifest_path(&c);
    let text = std::fs::read_to_string(&path).unwrap();
    let cut = text.trim_end().rfind('\n').unwrap() + 1;
    std::fs::write(&path, format!("{}1.0,2,o", &text[..cut])).unwrap();
    let r = sweep(&c, &SweepOptions::default()).unwrap();
    assert_eq!((r.computed, r.skipped), (1, 1));
    assert_eq!(r.table.rows.len(), 2);
    assert_eq!(std::fs::read_to_string(&path).unwrap(), text);
}

#[test]
fn failing_point_is_recorded_and_sweep_continues() {
    let tmp = tempfile::tempdir().unwrap();
    let mut c = light_gp(tmp.path());
    c.run.periods = 4.0;
    c.gp.nodes = 256;
    c.gp.half_width = Some(6.0);
    c.sweep.g = vec![0.1, 20.0];
    c.sweep.n = vec![11];
    let r = sweep(&c, &SweepOptions::default()).unwrap();
    assert_eq!(r.computed, 2);
    assert_eq!(r.table.rows.len(), 1);
    assert_eq!(r.failures.len(), 1);
    let (g, n, msg) = &r.failures[0];
    assert_eq!((*g, *n), (20.0, 11));
    assert!(msg.contains("box"), "{msg}");
    // failures are final; a rerun does not retry them
    let again = sweep(&c, &SweepOptions::default()).unwrap();
    assert_eq!((again.computed, again.failures.len()), (0, 1));
}

#[test]
fn budget_refuses_oversized_sweep() {
    let tmp = tempfile::tempdir().unwrap();
    let mut c = light_gp(tmp.path());
    c.sweep.g = vec![0.1, 0.2];
    c.sweep.n = vec![11, 21];
    let err = sweep(&c, &SweepOptions { budget_seconds: Some(1e-3), ..Default::default() }).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(!manifest_path(&c).exists());
}

#[test]
fn mean_field_sweep_depends_on_lambda_only() {
    let tmp = tempfile::tempdir().unwrap();
    let mut c = light_gp(tmp.path());
    c.sweep.g = vec![0.1, 0.2, 0.4];
    c.sweep.n = vec![11, 21, 41];
    let r = sweep(&c, &SweepOptions::default()).unwrap();
    assert!(r.failures.is_empty(), "{:?}", r.failures);
    let t = &r.table;
    assert_eq!(t.rows.len(), 9);

    // equal Λ = g(N − 1) gives the identical row frequency
    for (a, b) in [((0.2, 11), (0.1, 21)), ((0.4, 11), (0.2, 21)), ((0.4, 21), (0.2, 41)), ((0.4, 11), (0.1, 41))] {
        let (fa, fb) = (t.get(a.0, a.1).unwrap().frequency, t.get(b.0, b.1).unwrap().frequency);
        assert_eq!(fa, fb, "{a:?} vs {b:?}");
    }
    // stronger coupling softens the mode at fixed g
    for g in [0.1, 0.2, 0.4] {
        let f: Vec<f64> = [11, 21, 41].iter().map(|&n| t.get(g, n).unwrap().frequency).collect();
        assert!(f[0] > f[1] && f[1] > f[2], "g={g}: {f:?}");
    }

    let overlay = gp_hyperbola_overlay(t, &[1.85, 1.80]).unwrap();
    assert_eq!(overlay.reference_n, Some(41));
    let exact: Vec<_> = overlay.deviations.iter().filter(|d| d.matched == Match::Exact).collect();
    assert!(exact.len() >= 6, "{:?}", overlay.deviations);
    for d in exact {
        assert_eq!(d.deviation, Some(0.0), "{d:?}");
    }

    // the table survives a write/read cycle bit for bit
    let p = tmp.path().join("contour.csv");
    t.write(&p, &[]).unwrap();
    let mut back = ContourTable::read(&p).unwrap();
    back.sort();
    let mut orig = t.clone();
    orig.sort();
    assert_eq!(back, orig);
}

#[test]
fn few_body_deviation_shrinks_toward_reference_column() {
    let tmp = tempfile::tempdir().unwrap();
    let mut c = base(tmp.path(), EngineKind::Ed);
    c.ed.n_orbitals = 9;
    c.sweep.g = vec![0.125, 0.25, 0.5, 1.0];
    c.sweep.n = vec![2, 3, 5];
    let r = sweep(&c, &SweepOptions::default()).unwrap();
    assert!(r.failures.is_empty(), "{:?}", r.failures);
    let o = gp_hyperbola_overlay(&r.table, &[]).unwrap();
    assert_eq!(o.reference_n, Some(5));
    let dev = |g: f64, n: usize| {
        o.deviations.iter().find(|d| d.g == g && d.n_particles == n).and_then(|d| d.deviation).unwrap()
    };
    // Λ = 0.5 and Λ = 1 occur at N = 2, 3 and 5
    for (g2, g3) in [(0.5, 0.25), (1.0, 0.5)] {
        let (d2, d3) = (dev(g2, 2), dev(g3, 3));
        assert!(d2.abs() > 1e-3, "Λ={g2}: N=2 deviation {d2}");
        assert!(d2.abs() > d3.abs(), "Λ={g2}: {d2} vs {d3}");
    }
}

#[test]
fn empty_table_gives_empty_overlay() {
    let o = gp_hyperbola_overlay(&ContourTable::default(), &[1.9]).unwrap();
    assert!(o.hyperbolas.is_empty() && o.deviations.is_empty());
    assert_eq!(o.reference_n, None);
}
