use multiscale::basis::{interface_sites, offline_full_basis, offline_interface_basis, online_assemble, online_assemble_lifted};
use multiscale::elliptic::{EllipticSolver, Media};
use multiscale::linalg::relative_l2;
use multiscale::local::{BoundaryData, LocalProblem};
use multiscale::partition::{Grid, Partition};

fn setup() -> (Grid, Partition, Vec<EllipticSolver>, BoundaryData, Vec<f64>) {
    let grid = Grid::unit(2, 24).unwrap();
    let media = Media::preset("fig3_channel", 1.0).unwrap();
    let part = Partition::build(&grid, &[2, 2], 4).unwrap();
    let bd = BoundaryData::dirichlet(&grid, |p| p[0] * p[0] - p[1]);
    let exact = EllipticSolver::new(&grid, &media).unwrap().solve(&bd.values).unwrap();
    let solvers = (0..part.len()).map(|m| EllipticSolver::for_patch(&part, m, &media).unwrap()).collect();
    (grid, part, solvers, bd, exact)
}

#[test]
fn full_bases_reproduce_the_global_solution() {
    let (_, part, solvers, bd, exact) = setup();
    let bases: Vec<_> = solvers.iter().enumerate().map(|(m, s)| offline_full_basis(s, m).unwrap()).collect();
    let asm = online_assemble(&part, &bases, &bd).unwrap();
    assert_eq!(asm.online_solves, 0);
    assert!(relative_l2(&asm.solution, &exact) < 1e-9);
}

#[test]
fn lifted_error_falls_as_interface_bases_grow() {
    let (_, part, solvers, bd, exact) = setup();
    let err = |k: usize| {
        let bases: Vec<_> = solvers
            .iter()
            .enumerate()
            .map(|(m, s)| offline_interface_basis(&part, s, m, k, 300 + m as u64).unwrap())
            .collect();
        relative_l2(&online_assemble_lifted(&part, &solvers, &bases, &bd).unwrap().solution, &exact)
    };
    let full = interface_sites(&part, &solvers[0], 0).len();
    assert!(full < solvers[0].boundary_len());
    let (small, large, complete) = (err(4), err(full / 2), err(full));
    assert!(large < small, "{small} then {large}");
    assert!(complete < 1e-9, "{complete}");
}
