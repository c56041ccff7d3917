use lcks::dynamics::{fd_derivative, integrate_section, sweep, GridAxis};
use lcks::problem::ProblemFile;
use lcks::Gauge;

fn one_axis(steps: usize, horizon: f64) -> [GridAxis; 1] {
    [GridAxis {
        steps,
        h: horizon / steps as f64,
    }]
}

#[test]
fn residual_falls_fourth_order_under_refinement() {
    let p = ProblemFile::punctured_plane(1).build().unwrap();
    let x = p.system.darboux_field().unwrap();
    let inside = |z: &[f64]| p.bundle().contains(z);
    let residual = |steps| {
        integrate_section(&x, &[1.0, 0.0, 1.0, 0.0], &one_axis(steps, 0.5), &[0], &inside)
            .unwrap()
            .hdw_residual
    };
    let (coarse, fine) = (residual(25), residual(50));
    assert!(coarse / fine >= 8.0, "{coarse:e} / {fine:e}");
}

#[test]
fn energy_changes_at_the_conformal_rate() {
    // ι_XΩ_θ = d_θH gives dH/dt = H·ϑ(X) along integral curves.
    let p = ProblemFile::punctured_plane(1).build().unwrap();
    let x = p.system.field(Gauge::MinNorm);
    let inside = |z: &[f64]| p.bundle().contains(z);
    let grid = sweep(&x, &[1.0, 0.0, 1.0, 0.0], &one_axis(1000, 1.0), &[0], &inside).unwrap();
    let h = p.system.hamiltonian();
    let vartheta = p.bundle().vartheta();
    let mut worst: f64 = 0.0;
    for i in 0..=1000 {
        let z = grid.point(&[i]);
        let dz = fd_derivative(&grid, &[i], 0).unwrap();
        let gradient = lcks::calculus::FormField::scalar(h.clone())
            .exterior_derivative()
            .unwrap()
            .evaluate(z)
            .unwrap()
            .components();
        let rate: f64 = gradient.iter().zip(&dz).map(|(g, v)| g * v).sum();
        let lee = vartheta.evaluate(&z[..2]).unwrap().components();
        let expected = h.eval(z).unwrap() * (lee[0] * dz[0] + lee[1] * dz[1]);
        worst = worst.max((rate - expected).abs());
    }
    assert!(worst < 1e-5, "{worst:e}");
}

#[test]
fn two_time_sections_report_their_path_defect() {
    let p = ProblemFile::punctured_plane(2).build().unwrap();
    let x = p.system.field(Gauge::DarbouxDiagonal);
    let inside = |z: &[f64]| p.bundle().contains(z);
    let axes = [GridAxis { steps: 20, h: 0.01 }; 2];
    let start = [1.0, 0.0, 1.0, 0.0, 0.5, 0.5];
    let forward = integrate_section(&x, &start, &axes, &[0, 1], &inside).unwrap();
    let backward = integrate_section(&x, &start, &axes, &[1, 0], &inside).unwrap();
    assert_eq!(forward.grid.len(), 441);
    assert!(forward.path_defect.is_finite());
    assert!((forward.path_defect - backward.path_defect).abs() < 1e-12);
    assert_eq!(forward.grid.point(&[0, 0]), backward.grid.point(&[0, 0]));
}
