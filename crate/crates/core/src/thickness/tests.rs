use super::*;
use crate::phantom::{make_shell, make_slab, voxel_center, ShellSpec};

fn slab_field() -> PotentialField {
    let s = classify_surfaces(&make_slab(10.0, 1.0, 20.0).unwrap()).unwrap();
    solve_laplace(&s, 1e-6, 20_000).unwrap()
}

fn shell_run(r_in: f64, r_out: f64, spacing: f64) -> ThicknessRun {
    let labels = make_shell(&ShellSpec::new(r_in, r_out, spacing)).unwrap();
    measure(&labels, &ThicknessConfig::default()).unwrap()
}

#[test]
fn slab_streamline_is_straight_and_spans_the_wall() {
    let f = slab_field();
    for &seed in f.epi_set().iter().step_by(37) {
        let l = trace_streamline(&f, seed, 0.25).unwrap();
        assert_eq!(l.termination, Termination::ReachedEndo);
        assert!((l.length_mm - 10.0).abs() <= 0.75, "length {}", l.length_mm);
        let first = l.points[0];
        for p in &l.points {
            assert!((p[0] - first[0]).abs() < 1e-4 && (p[1] - first[1]).abs() < 1e-4, "{:?} vs {:?}", p, first);
        }
        assert!(l.points.windows(2).all(|w| w[1][2] < w[0][2]));
    }
}

#[test]
fn shell_streamline_runs_radially_inward() {
    let spec = ShellSpec::new(10.0, 15.0, 1.0);
    let labels = make_shell(&spec).unwrap();
    let f = solve_laplace(&classify_surfaces(&labels).unwrap(), 1e-6, 20_000).unwrap();
    let c = spec.center_mm();
    let radius = |p: [f64; 3]| ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2) + (p[2] - c[2]).powi(2)).sqrt();
    for &seed in f.epi_set().iter().step_by(53) {
        let l = trace_streamline(&f, seed, 0.25).unwrap();
        assert_eq!(l.termination, Termination::ReachedEndo);
        assert!((l.length_mm - 5.0).abs() <= 1.0, "length {}", l.length_mm);
        let radii: Vec<f64> = l.points.iter().map(|&p| radius(p)).collect();
        assert!(radii.windows(2).all(|w| w[1] < w[0] + 1e-9));
        // Direction from the seed stays close to the radial direction.
        let s = voxel_center(f.dims(), f.spacing(), seed);
        let e = *l.points.last().unwrap();
        let (u, v) = ([s[0] - c[0], s[1] - c[1], s[2] - c[2]], [s[0] - e[0], s[1] - e[1], s[2] - e[2]]);
        let cos = (u[0] * v[0] + u[1] * v[1] + u[2] * v[2])
            / ((u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt() * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt());
        assert!(cos > 0.95, "cos {cos}");
    }
}

#[test]
fn thin_wall_terminates_immediately() {
    // Two layers: every epicardial seed faces the endocardium directly.
    let s = classify_surfaces(&make_slab(2.0, 1.0, 6.0).unwrap()).unwrap();
    let f = solve_laplace(&s, 1e-6, 100).unwrap();
    let step = 0.25;
    for &seed in f.epi_set() {
        let l = trace_streamline(&f, seed, step).unwrap();
        assert_eq!(l.termination, Termination::ReachedEndo);
        assert!(l.points.len() >= 2);
        assert!(l.length_mm <= 2.0 * step + 3f64.sqrt() + 1.0, "length {}", l.length_mm);
    }
}

#[test]
fn seeds_must_be_epicardial() {
    let f = slab_field();
    let endo = f.endo_set()[0];
    assert_eq!(trace_streamline(&f, endo, 0.25), Err(ThicknessError::NotAnEpicardialSeed(endo)));
    assert_eq!(trace_streamline(&f, usize::MAX, 0.25), Err(ThicknessError::NotAnEpicardialSeed(usize::MAX)));
    assert_eq!(trace_streamline(&f, f.epi_set()[0], 0.0), Err(ThicknessError::InvalidStep(0.0)));
}

#[test]
fn length_never_below_chord() {
    let run = shell_run(6.0, 10.0, 1.0);
    for l in &run.streamlines {
        assert!(l.length_mm + 1e-12 >= l.chord_mm());
        assert!((l.length_mm - polyline_length(&l.points)).abs() < 1e-12);
    }
}

#[test]
fn shell_thickness_statistics() {
    let run = shell_run(10.0, 15.0, 1.0);
    let s = run.map.stats().unwrap();
    assert!((s.median - 5.0).abs() <= 0.75, "median {}", s.median);
    assert!(s.max <= 6.5, "max {}", s.max);
    assert!(run.map.reached_fraction() >= 0.95);
    assert!(s.median <= s.p95 && s.p95 <= s.max);
}

#[test]
fn slab_thickness_is_degenerate() {
    let labels = make_slab(10.0, 1.0, 20.0).unwrap();
    let run = measure(&labels, &ThicknessConfig::default()).unwrap();
    let s = run.map.stats().unwrap();
    assert!(s.max - s.median <= 0.5);
    assert!((s.median - 10.0).abs() <= 0.75);
    assert_eq!(run.map.reached_fraction(), 1.0);
}

#[test]
fn ed_es_shells_differ_by_a_millimeter() {
    let ed = shell_run(10.0, 15.0, 1.0);
    let es = shell_run(11.0, 15.0, 1.0);
    let pair = thickness_stats_pair(&ed.map, &es.map).unwrap();
    assert!((pair.ed.median - 5.0).abs() <= 0.75, "{}", pair.ed.median);
    assert!((pair.es.median - 4.0).abs() <= 0.75, "{}", pair.es.median);
    let same = thickness_stats_pair(&ed.map, &ed.map).unwrap();
    assert_eq!(same.ed, same.es);
}

#[test]
fn report_and_csv_shapes() {
    let run = measure(&make_slab(4.0, 1.0, 3.0).unwrap(), &ThicknessConfig::default()).unwrap();
    let report = ThicknessReport::new(&run.map, Some(&run.map)).unwrap();
    assert_eq!(report.units, "mm");
    assert_eq!(report.es, Some(report.ed));
    let json = serde_json::to_value(&report).unwrap();
    assert!(json["ed"]["median"].is_f64() && json["es"]["p95"].is_f64());

    let mut buf = Vec::new();
    write_streamlines_csv(&mut buf, run.field.dims(), &run.streamlines).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(STREAMLINE_CSV_HEADER));
    let rows: Vec<&str> = lines.collect();
    let total: usize = run.streamlines.iter().map(|l| l.points.len()).sum();
    assert_eq!(rows.len(), total);
    assert!(rows[0].starts_with("0,0,5,0,") && rows[0].ends_with(",ReachedEndo"));
}

#[test]
fn tracing_is_deterministic() {
    let a = shell_run(5.0, 8.0, 1.0);
    let b = shell_run(5.0, 8.0, 1.0);
    assert_eq!(a.streamlines, b.streamlines);
    assert_eq!(a.field.values(), b.field.values());
}
