use std::time::Instant;

use slocc_core::catalog;
use slocc_core::critical::classify_system;
use slocc_core::{Branch, SearchOptions};

fn summary(points: &[slocc_core::CriticalPoint]) -> Vec<(String, f64, u32)> {
    points.iter().map(|p| (p.spectrum.to_string(), p.variance, p.morse_index)).collect()
}

#[test]
fn three_qubits_single_threaded() {
    let opts = SearchOptions { parallel: false, ..SearchOptions::default() };
    let t = Instant::now();
    let c = classify_system(catalog::qubits3(), None, &opts).unwrap();
    eprintln!("three qubits: {:?} in {:?}", summary(&c.points), t.elapsed());
    let got: Vec<(f64, u32)> = c.points.iter().map(|p| ((p.variance * 1e6).round() / 1e6, p.morse_index)).collect();
    let expected = [(4.5, 0), (4.333333, 2), (4.0, 6), (4.0, 6), (4.0, 6), (3.0, 8)];
    assert_eq!(got.len(), expected.len(), "{got:?}");
    for ((v, i), (ev, ei)) in got.iter().zip(expected) {
        assert!((v - ev).abs() < 1e-6 && *i == ei, "{got:?}");
    }
    assert_eq!(c.points[0].branch, Branch::ZeroMomentum);
    assert!(c.points.iter().all(|p| p.residual < 1e-8));
}

#[test]
fn wedge_three_five() {
    let t = Instant::now();
    let c = classify_system(catalog::wedge35(), None, &SearchOptions::default()).unwrap();
    eprintln!("wedge: {:?} in {:?} ({} candidates)", summary(&c.points), t.elapsed(), c.candidates);
    assert_eq!(c.candidates, 6);
    let got: Vec<(f64, u32)> = c.points.iter().map(|p| ((p.variance * 1e6).round() / 1e6, p.morse_index)).collect();
    assert_eq!(got, vec![(7.0, 0), (6.0, 6)]);
    assert!(c.points.iter().all(|p| p.branch == Branch::Sweep));
}
