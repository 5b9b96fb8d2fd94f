//! Homogenization and diffusion-limit behaviour of the fine solvers.

use multiscale::elliptic::{EllipticSolver, Media};
use multiscale::linalg::relative_l2;
use multiscale::local::{BoundaryData, LocalProblem};
use multiscale::partition::Grid;
use multiscale::rte::{CollisionKernel, Ordinates, RteSolver};

/// L2 distance to the homogenized solution `x(1-x)/(2 a*)`, `a* = √3`.
fn homogenization_gap(eps: f64) -> f64 {
    let cells = (32.0 / eps).round() as usize;
    let grid = Grid::unit(1, cells).unwrap();
    let s = EllipticSolver::new(&grid, &Media::preset("periodic_1d", eps).unwrap()).unwrap();
    let u = s.solve_dirichlet(&[0.0, 0.0], &vec![1.0; cells - 1]).unwrap();
    let h = 1.0 / cells as f64;
    let a_star = 3f64.sqrt();
    (0..=cells)
        .map(|i| {
            let x = i as f64 * h;
            (u[i] - x * (1.0 - x) / (2.0 * a_star)).powi(2) * h
        })
        .sum::<f64>()
        .sqrt()
}

#[test]
fn periodic_media_homogenize_at_first_order() {
    let coarse = homogenization_gap(1.0 / 8.0);
    let fine = homogenization_gap(1.0 / 32.0);
    // Quartering ε should cut the gap roughly fourfold.
    let ratio = coarse / fine;
    assert!((3.0..6.0).contains(&ratio), "gap ratio {ratio}");
}

#[test]
fn transport_density_approaches_diffusion() {
    let ords = Ordinates::gauss_legendre(16).unwrap();
    let gap = |eps: f64| {
        let cells = (8.0 / eps).round() as usize;
        let grid = Grid::unit(1, cells).unwrap();
        let s = RteSolver::new(grid.axes[0], &ords, &CollisionKernel::isotropic(1.0, eps).unwrap()).unwrap();
        let bd = BoundaryData::incoming(&grid, &ords, |_| 1.0, |_| 2.0);
        let rho = s.velocity_average(&s.solve(&bd.values).unwrap());
        let lin: Vec<f64> = (0..=cells).map(|i| 1.0 + grid.coords(i)[0]).collect();
        let keep = |v: &[f64]| v[cells / 5..=4 * cells / 5].to_vec();
        relative_l2(&keep(&rho), &keep(&lin))
    };
    let (a, b) = (gap(0.25), gap(1.0 / 16.0));
    assert!(b < a, "{a} then {b}");
    assert!(b < 0.02, "gap {b}");
}
