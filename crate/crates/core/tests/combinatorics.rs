mod common;

use hsm::combinatorics::{
    boundary_size, count_saws_from, delete_path_matrix, enumerate_saws, enumerate_spanning_trees, kirchhoff_count,
    matrix_tree_check, off_path_degrees, path_expansion, Path,
};
use hsm::linalg::det_minor;
use hsm::model::{build_a, build_d};
use hsm::{Boundary, FieldConfig, Lattice, ModelParams, PinningScheme};

const SQUARE_WALKS: [u64; 13] = [1, 4, 12, 36, 100, 284, 780, 2172, 5916, 16268, 44100, 120292, 324932];
const CUBIC_WALKS: [u64; 13] = [
    1, 6, 30, 150, 726, 3534, 16926, 81390, 387966, 1853886, 8809878, 41934150, 198842742,
];

fn centered(d: usize, max_len: usize) -> (Lattice, usize) {
    let extent = 2 * max_len + 1;
    let lat = Lattice::new(&vec![extent; d], Boundary::Neumann).unwrap();
    let center = lat.index(&vec![max_len; d]).unwrap();
    (lat, center)
}

#[test]
fn square_lattice_walk_counts() {
    let (lat, c) = centered(2, 12);
    assert_eq!(count_saws_from(&lat, c, 12).unwrap(), SQUARE_WALKS);
}

#[test]
fn cubic_lattice_walk_counts() {
    let (lat, c) = centered(3, 12);
    let counts = count_saws_from(&lat, c, 12).unwrap();
    assert_eq!(counts, CUBIC_WALKS);
    for (n, &cn) in counts.iter().enumerate() {
        assert!(cn as f64 <= 2.0 * 5f64.powi(n as i32));
    }
}

#[test]
fn opposite_corners_of_a_square() {
    let lat = Lattice::new(&[2, 2], Boundary::Neumann).unwrap();
    let walks = enumerate_saws(&lat, 0, 3, 10).unwrap();
    assert_eq!(walks.len(), 2);
    assert!(walks.iter().all(|w| w.len() == 2));
}

#[test]
fn walks_between_two_sites_agree_with_endpoint_counts() {
    // Summing walks to every endpoint reproduces the walk counts from the origin.
    let lat = Lattice::new(&[4, 4], Boundary::Neumann).unwrap();
    let max_len = 6;
    let counts = count_saws_from(&lat, 5, max_len).unwrap();
    let mut by_len = vec![0u64; max_len + 1];
    by_len[0] = 1;
    for y in (0..lat.size()).filter(|&y| y != 5) {
        for w in enumerate_saws(&lat, 5, y, max_len).unwrap() {
            assert_eq!((w.start(), w.end()), (5, y));
            by_len[w.len()] += 1;
        }
    }
    assert_eq!(by_len, counts);
}

#[test]
fn spanning_tree_count_is_kirchhoff() {
    let lattices = [
        Lattice::chain(5).unwrap(),
        Lattice::new(&[2, 2], Boundary::Neumann).unwrap(),
        Lattice::new(&[2, 3], Boundary::Neumann).unwrap(),
        Lattice::new(&[3, 3], Boundary::Neumann).unwrap(),
        Lattice::new(&[4], Boundary::Periodic).unwrap(),
        Lattice::new(&[3, 3], Boundary::Periodic).unwrap(),
        Lattice::new(&[2, 2, 2], Boundary::Neumann).unwrap(),
    ];
    // Known counts: path 1, 4-cycle 4, 2x3 grid 15, 3x3 grid 192, 4-cycle 4, 3x3 torus 11664, cube 384.
    let known = [1usize, 4, 15, 192, 4, 11664, 384];
    for (lat, &k) in lattices.iter().zip(&known) {
        let trees = enumerate_spanning_trees(lat).unwrap();
        assert_eq!(trees.len(), k, "{:?}", lat.extents());
        assert!((kirchhoff_count(lat) - k as f64).abs() < 1e-6 * k as f64);
        for t in &trees {
            assert_eq!(t.edges().len(), lat.size() - 1);
        }
    }
}

#[test]
fn matrix_tree_against_permutation_determinant() {
    let lat = Lattice::new(&[2, 3], Boundary::Neumann).unwrap();
    let params = ModelParams::new(0.7, lat, PinningScheme::Single { site: 4, eps: 0.3 }).unwrap();
    let config = FieldConfig::new(vec![0.4, -1.2, 0.9, 0.0, 2.1, -0.5]).unwrap();
    let check = matrix_tree_check(&params, &config).unwrap();
    let oracle = common::det_of(&build_a(&params, &config).unwrap());
    assert!((check.rhs - oracle).abs() < 1e-10 * oracle.abs());
    assert!(check.relative_error() < 1e-10);
}

#[test]
fn path_expansion_on_model_matrix() {
    let lat = Lattice::new(&[2, 3], Boundary::Neumann).unwrap();
    let params =
        ModelParams::new(1.3, lat, PinningScheme::Custom(vec![0.5, 0.0, 0.0, 0.0, 0.0, 2.0])).unwrap();
    let config = FieldConfig::new(vec![1.0, -0.3, 0.2, 0.7, -1.5, 0.1]).unwrap();
    let d = build_d(&params, &config).unwrap();
    let det = common::det_of(&d);
    for x in 0..6 {
        for y in 0..6 {
            let got = path_expansion(&d, x, y).unwrap();
            let oracle = common::adjugate_entry(&d, x, y);
            assert!((got - oracle).abs() < 1e-10 * det.abs(), "({x},{y})");
        }
    }
}

#[test]
fn deleted_matrix_is_principal_submatrix() {
    let lat = Lattice::new(&[3, 3], Boundary::Neumann).unwrap();
    let params = ModelParams::new(0.4, lat.clone(), PinningScheme::Uniform { eps: 0.2 }).unwrap();
    let config = FieldConfig::new((0..9).map(|i| (i as f64 * 0.37).sin() * 2.0).collect()).unwrap();
    let d = build_d(&params, &config).unwrap();
    let gamma = Path::new(&lat, vec![0, 1, 4, 7]).unwrap();
    let deleted = delete_path_matrix(&params, &config, &gamma).unwrap();
    assert_eq!(deleted.sites, vec![2, 3, 5, 6, 8]);
    for (a, &i) in deleted.sites.iter().enumerate() {
        for (b, &k) in deleted.sites.iter().enumerate() {
            assert!((deleted.matrix[(a, b)] - d[(i, k)]).abs() < 1e-13 * (1.0 + d[(i, k)].abs()));
        }
    }
    let det = deleted.matrix.determinant();
    assert!((det - det_minor(&d, gamma.sites())).abs() < 1e-12 * det.abs());
    // Site 3 touches path sites 0 and 4.
    let eps3 = 0.2 + 0.4 * (config.get(0).exp() + config.get(4).exp());
    assert!((deleted.eps_tilde[1] - eps3).abs() < 1e-14);
    assert_eq!(off_path_degrees(&lat, &gamma), vec![1, 1, 2, 2]);
    assert_eq!(boundary_size(&lat, &gamma), 5);
}

#[test]
fn invalid_paths_are_rejected() {
    let lat = Lattice::new(&[3, 3], Boundary::Neumann).unwrap();
    assert!(Path::new(&lat, vec![0, 2]).is_err());
    assert!(Path::new(&lat, vec![0, 1, 0]).is_err());
    assert!(Path::new(&lat, vec![]).is_err());
    assert!(Path::new(&lat, vec![9]).is_err());
}
