//! Exact combinatorial engines: self-avoiding walks, the path expansion of
//! `M⁻¹_xy det M`, path-deleted matrices, spanning trees and the matrix-tree
//! identity for the single-pinning matrix `A`.

use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::linalg::{self, det_minor, Matrix};
use crate::model::{build_a, build_d, FieldConfig, ModelParams};

/// Self-avoiding nearest-neighbor walk `x = j_0, j_1, …, j_m = y`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Path(Vec<usize>);

impl Path {
    /// Validate that consecutive sites are lattice neighbors and no site repeats.
    pub fn new(lattice: &Lattice, sites: Vec<usize>) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::InvalidPath("empty path".into()));
        }
        for &s in &sites {
            lattice.check_site(s)?;
        }
        if let Some(w) = sites.windows(2).find(|w| !lattice.are_neighbors(w[0], w[1])) {
            return Err(Error::InvalidPath(format!("{} and {} are not neighbors", w[0], w[1])));
        }
        let mut seen = vec![false; lattice.size()];
        for &s in &sites {
            if std::mem::replace(&mut seen[s], true) {
                return Err(Error::InvalidPath(format!("site {s} visited twice")));
            }
        }
        Ok(Path(sites))
    }

    pub fn sites(&self) -> &[usize] {
        &self.0
    }

    /// Number of edges.
    pub fn len(&self) -> usize {
        self.0.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn start(&self) -> usize {
        self.0[0]
    }

    pub fn end(&self) -> usize {
        self.0[self.0.len() - 1]
    }

    pub fn contains(&self, site: usize) -> bool {
        self.0.contains(&site)
    }

    fn mask(&self, n: usize) -> Vec<bool> {
        let mut m = vec![false; n];
        for &s in &self.0 {
            m[s] = true;
        }
        m
    }
}

/// Depth-first enumeration of simple paths from `x` to `y` in the graph given
/// by `next`, with at most `max_len` edges.
fn simple_paths<F>(n: usize, x: usize, y: usize, max_len: usize, next: F) -> Vec<Vec<usize>>
where
    F: Fn(usize) -> Vec<usize>,
{
    fn walk<F: Fn(usize) -> Vec<usize>>(
        current: &mut Vec<usize>,
        visited: &mut [bool],
        y: usize,
        max_len: usize,
        next: &F,
        out: &mut Vec<Vec<usize>>,
    ) {
        let here = *current.last().expect("path is never empty");
        if here == y {
            out.push(current.clone());
            return;
        }
        if current.len() > max_len {
            return;
        }
        for k in next(here) {
            if !visited[k] {
                visited[k] = true;
                current.push(k);
                walk(current, visited, y, max_len, next, out);
                current.pop();
                visited[k] = false;
            }
        }
    }
    let mut visited = vec![false; n];
    visited[x] = true;
    let mut out = Vec::new();
    walk(&mut vec![x], &mut visited, y, max_len, &next, &mut out);
    out
}

/// All self-avoiding walks from `x` to `y` with at most `max_len` steps, in
/// depth-first order following [`Lattice::neighbors`].
pub fn enumerate_saws(lattice: &Lattice, x: usize, y: usize, max_len: usize) -> Result<Vec<Path>> {
    lattice.check_site(x)?;
    lattice.check_site(y)?;
    if x == y {
        return Err(Error::InvalidParameter("walk endpoints must differ".into()));
    }
    let paths = simple_paths(lattice.size(), x, y, max_len, |j| {
        lattice.neighbors(j).expect("valid site").to_vec()
    });
    Ok(paths.into_iter().map(Path).collect())
}

/// Number of self-avoiding walks starting at `x`, indexed by length `0..=max_len`.
pub fn count_saws_from(lattice: &Lattice, x: usize, max_len: usize) -> Result<Vec<u64>> {
    fn walk(lattice: &Lattice, here: usize, depth: usize, max_len: usize, visited: &mut [bool], counts: &mut [u64]) {
        counts[depth] += 1;
        if depth == max_len {
            return;
        }
        for &k in lattice.neighbors(here).expect("valid site") {
            if !visited[k] {
                visited[k] = true;
                walk(lattice, k, depth + 1, max_len, visited, counts);
                visited[k] = false;
            }
        }
    }
    lattice.check_site(x)?;
    let mut counts = vec![0u64; max_len + 1];
    let mut visited = vec![false; lattice.size()];
    visited[x] = true;
    walk(lattice, x, 0, max_len, &mut visited, &mut counts);
    Ok(counts)
}

/// `Σ_γ (−M_{x j₁})(−M_{j₁ j₂})⋯(−M_{j_m y}) · det_{Λ∖γ} M` over self-avoiding
/// paths `γ` from `x` to `y` in the directed support graph of `M`. Equals
/// `(M⁻¹)_xy det M` (the `(y, x)` cofactor) for every square `M`.
pub fn path_expansion(m: &Matrix, x: usize, y: usize) -> Result<f64> {
    let n = m.n();
    for idx in [x, y] {
        if idx >= n {
            return Err(Error::SiteOutOfRange { site: idx, size: n });
        }
    }
    let paths = simple_paths(n, x, y, n, |i| (0..n).filter(|&j| j != i && m[(i, j)] != 0.0).collect());
    Ok(paths
        .iter()
        .map(|p| {
            let weight: f64 = p.windows(2).map(|w| -m[(w[0], w[1])]).product();
            weight * det_minor(m, p)
        })
        .sum())
}

/// Determinant as a sum over covers of `{0..n}` by disjoint directed loops,
/// each loop weighted by `M_jj` (length one) or `−Π(−M_{j_i j_{i+1}})`.
pub fn loop_gas_determinant(m: &Matrix) -> f64 {
    fn cover(m: &Matrix, covered: &mut [bool]) -> f64 {
        let Some(start) = covered.iter().position(|&c| !c) else {
            return 1.0;
        };
        covered[start] = true;
        // Fixed point.
        let mut total = m[(start, start)] * cover(m, covered);
        // Loops through `start` of length >= 2, grown one site at a time.
        let mut stack = vec![start];
        total += extend(m, covered, &mut stack, 1.0);
        covered[start] = false;
        total
    }
    fn extend(m: &Matrix, covered: &mut [bool], stack: &mut Vec<usize>, product: f64) -> f64 {
        let last = *stack.last().unwrap();
        let mut total = 0.0;
        for k in 0..m.n() {
            if covered[k] {
                continue;
            }
            let step = -m[(last, k)];
            if step == 0.0 {
                continue;
            }
            covered[k] = true;
            stack.push(k);
            let p = product * step;
            let close = -m[(k, stack[0])];
            if close != 0.0 {
                total += -(p * close) * cover(m, covered);
            }
            total += extend(m, covered, stack, p);
            stack.pop();
            covered[k] = false;
        }
        total
    }
    let mut covered = vec![false; m.n()];
    cover(m, &mut covered)
}

/// `D` restricted to the complement of a path, written with modified pinning.
#[derive(Debug, Clone, PartialEq)]
pub struct PathDeleted {
    /// Complement sites `Λ∖γ`, ascending; row `a` of `matrix` is site `sites[a]`.
    pub sites: Vec<usize>,
    pub matrix: Matrix,
    /// `ε̃_i = ε_i + β Σ_{k ∈ γ, k∼i} e^{t_k}` for each complement site.
    pub eps_tilde: Vec<f64>,
}

/// Build `D̃` on `Λ∖γ` from its own definition: `−β` on complement pairs and
/// diagonal `β Σ_{k∉γ, k∼i} e^{t_k − t_i} + ε̃_i e^{−t_i}`.
pub fn delete_path_matrix(params: &ModelParams, config: &FieldConfig, gamma: &Path) -> Result<PathDeleted> {
    let lat = params.lattice();
    if config.len() != lat.size() {
        return Err(Error::SizeMismatch { expected: lat.size(), got: config.len() });
    }
    for &s in gamma.sites() {
        lat.check_site(s)?;
    }
    let t = config.as_slice();
    let beta = params.beta();
    let on_path = gamma.mask(lat.size());
    let sites: Vec<usize> = (0..lat.size()).filter(|&j| !on_path[j]).collect();
    let eps_tilde: Vec<f64> = sites
        .iter()
        .map(|&i| {
            params.epsilons()[i]
                + beta
                    * lat.neighbors(i).expect("valid site").iter().filter(|&&k| on_path[k]).map(|&k| t[k].exp()).sum::<f64>()
        })
        .collect();
    let mut matrix = Matrix::zeros(sites.len());
    for (a, &i) in sites.iter().enumerate() {
        let mut diag = eps_tilde[a] * (-t[i]).exp();
        for (b, &k) in sites.iter().enumerate() {
            if lat.are_neighbors(i, k) {
                matrix[(a, b)] = -beta;
                diag += beta * (t[k] - t[i]).exp();
            }
        }
        matrix[(a, a)] = diag;
    }
    Ok(PathDeleted { sites, matrix, eps_tilde })
}

/// Sites off the path that neighbor it: `|∂γ|`.
pub fn boundary_size(lattice: &Lattice, gamma: &Path) -> usize {
    let on_path = gamma.mask(lattice.size());
    (0..lattice.size())
        .filter(|&j| !on_path[j] && lattice.neighbors(j).expect("valid site").iter().any(|&k| on_path[k]))
        .count()
}

/// `d_k^γ`: for each path site, the number of its neighbors off the path.
pub fn off_path_degrees(lattice: &Lattice, gamma: &Path) -> Vec<usize> {
    let on_path = gamma.mask(lattice.size());
    gamma
        .sites()
        .iter()
        .map(|&k| lattice.neighbors(k).expect("valid site").iter().filter(|&&j| !on_path[j]).count())
        .collect()
}

/// Edge set of a spanning tree, edges as `(j, k)` with `j < k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SpanningTree(pub Vec<(usize, usize)>);

impl SpanningTree {
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.0
    }
}

pub const MAX_TREE_SITES: usize = 9;

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn find(&self, mut a: usize) -> usize {
        while self.parent[a] != a {
            a = self.parent[a];
        }
        a
    }
}

/// All spanning trees of the lattice graph by include/exclude branching over
/// the edge list: including an edge contracts its endpoints, excluding deletes
/// it. Branches that would close a cycle or cannot reach `N − 1` edges are cut.
pub fn enumerate_spanning_trees(lattice: &Lattice) -> Result<Vec<SpanningTree>> {
    let n = lattice.size();
    if n > MAX_TREE_SITES {
        return Err(Error::TooLarge { what: "spanning-tree enumeration lattice", size: n, max: MAX_TREE_SITES });
    }
    fn branch(
        edges: &[(usize, usize)],
        next: usize,
        need: usize,
        uf: &mut UnionFind,
        chosen: &mut Vec<(usize, usize)>,
        out: &mut Vec<SpanningTree>,
    ) {
        if chosen.len() == need {
            out.push(SpanningTree(chosen.clone()));
            return;
        }
        if edges.len() - next < need - chosen.len() {
            return;
        }
        let (a, b) = edges[next];
        let (ra, rb) = (uf.find(a), uf.find(b));
        if ra != rb {
            uf.parent[rb] = ra;
            chosen.push((a, b));
            branch(edges, next + 1, need, uf, chosen, out);
            chosen.pop();
            uf.parent[rb] = rb;
        }
        branch(edges, next + 1, need, uf, chosen, out);
    }
    let mut uf = UnionFind { parent: (0..n).collect() };
    let mut out = Vec::new();
    branch(lattice.edges(), 0, n - 1, &mut uf, &mut Vec::new(), &mut out);
    Ok(out)
}

/// Number of spanning trees from Kirchhoff's theorem: the determinant of the
/// graph Laplacian with row and column 0 removed.
pub fn kirchhoff_count(lattice: &Lattice) -> f64 {
    let n = lattice.size();
    let lap = Matrix::from_fn(n, |i, j| {
        if i == j {
            lattice.degree(i) as f64
        } else if lattice.are_neighbors(i, j) {
            -1.0
        } else {
            0.0
        }
    });
    det_minor(&lap, &[0])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatrixTreeCheck {
    /// `det A`.
    pub lhs: f64,
    /// `ε₀ e^{t₀} Σ_T Π_{(jj')∈T} β e^{t_j + t_j'}`.
    pub rhs: f64,
}

impl MatrixTreeCheck {
    pub fn relative_error(&self) -> f64 {
        (self.lhs - self.rhs).abs() / self.rhs.abs().max(f64::MIN_POSITIVE)
    }
}

fn single_pin(params: &ModelParams) -> Result<(usize, f64)> {
    params
        .pinning()
        .single_site()
        .ok_or_else(|| Error::PinningMismatch("requires the single-pinning scheme".into()))
}

/// Both sides of the matrix-tree expansion of `det A` under single pinning.
pub fn matrix_tree_check(params: &ModelParams, config: &FieldConfig) -> Result<MatrixTreeCheck> {
    let (root, eps) = single_pin(params)?;
    let t = config.as_slice();
    let a = build_a(params, config)?;
    let trees = enumerate_spanning_trees(params.lattice())?;
    let beta = params.beta();
    let tree_sum: f64 = trees
        .iter()
        .map(|tree| tree.edges().iter().map(|&(j, k)| beta * (t[j] + t[k]).exp()).product::<f64>())
        .sum();
    Ok(MatrixTreeCheck { lhs: a.determinant(), rhs: eps * t[root].exp() * tree_sum })
}

/// `ε₀ e^{t₀} (A⁻¹)_{0x}`, identically one under single pinning at site `0`.
pub fn single_pinning_identity(params: &ModelParams, config: &FieldConfig, x: usize) -> Result<f64> {
    let (root, eps) = single_pin(params)?;
    params.lattice().check_site(x)?;
    let factor = linalg::factor(&build_a(params, config)?)?;
    Ok(eps * config.get(root).exp() * factor.inverse_entry(root, x)?)
}

/// `ε₀ e^{−t_x} (D⁻¹)_{0x}`, the same identity written through `D`.
pub fn single_pinning_identity_d(params: &ModelParams, config: &FieldConfig, x: usize) -> Result<f64> {
    let (root, eps) = single_pin(params)?;
    params.lattice().check_site(x)?;
    let factor = linalg::factor(&build_d(params, config)?)?;
    Ok(eps * (-config.get(x)).exp() * factor.inverse_entry(root, x)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Boundary;
    use crate::model::PinningScheme;

    #[test]
    fn chain_has_one_walk() {
        let lat = Lattice::chain(5).unwrap();
        let w = enumerate_saws(&lat, 0, 3, 10).unwrap();
        assert_eq!(w.len(), 1);
        assert_eq!(w[0].len(), 3);
        assert!(enumerate_saws(&lat, 0, 3, 2).unwrap().is_empty());
        assert!(enumerate_saws(&lat, 1, 1, 2).is_err());
    }

    #[test]
    fn square_block_opposite_corners() {
        let lat = Lattice::new(&[2, 2], Boundary::Neumann).unwrap();
        let w = enumerate_saws(&lat, 0, 3, 10).unwrap();
        assert_eq!(w.len(), 2);
        assert!(w.iter().all(|p| p.len() == 2));
    }

    #[test]
    fn known_square_lattice_counts() {
        // Self-avoiding walks on Z^2 by length (n = 0..=10).
        let known = [1u64, 4, 12, 36, 100, 284, 780, 2172, 5916, 16268, 44100];
        let lat = Lattice::new(&[25, 25], Boundary::Neumann).unwrap();
        let centre = lat.index(&[12, 12]).unwrap();
        assert_eq!(count_saws_from(&lat, centre, 10).unwrap(), known);
    }

    #[test]
    fn two_by_two_path_expansion() {
        let m = Matrix::from_rows(&[vec![2.0, 3.0], vec![5.0, 7.0]]).unwrap();
        assert_eq!(path_expansion(&m, 0, 1).unwrap(), -3.0);
        assert_eq!(path_expansion(&m, 1, 0).unwrap(), -5.0);
        assert_eq!(path_expansion(&m, 0, 0).unwrap(), 7.0);
    }

    #[test]
    fn loop_gas_small() {
        let m = Matrix::from_rows(&[vec![2.0, 3.0], vec![5.0, 7.0]]).unwrap();
        assert_eq!(loop_gas_determinant(&m), -1.0);
        assert_eq!(loop_gas_determinant(&Matrix::zeros(0)), 1.0);
    }

    #[test]
    fn path_validation() {
        let lat = Lattice::chain(4).unwrap();
        assert!(Path::new(&lat, vec![0, 2]).is_err());
        assert!(Path::new(&lat, vec![0, 1, 0]).is_err());
        assert!(Path::new(&lat, vec![]).is_err());
        assert!(Path::new(&lat, vec![0, 9]).is_err());
        assert_eq!(Path::new(&lat, vec![1, 2, 3]).unwrap().len(), 2);
    }

    #[test]
    fn boundary_sizes() {
        let chain = Lattice::chain(6).unwrap();
        let g = Path::new(&chain, vec![2, 3]).unwrap();
        assert_eq!(boundary_size(&chain, &g), 2);
        let all = Path::new(&chain, (0..6).collect()).unwrap();
        assert_eq!(boundary_size(&chain, &all), 0);

        let big = Lattice::new(&[9, 9], Boundary::Neumann).unwrap();
        let row: Vec<usize> = (2..=6).map(|c| big.index(&[4, c]).unwrap()).collect();
        let g = Path::new(&big, row).unwrap();
        // A straight walk of 4 steps touches 2·5 side sites plus 2 end sites.
        assert_eq!(boundary_size(&big, &g), 12);
        assert!(boundary_size(&big, &g) <= 2 * g.sites().len() + 2);
    }

    #[test]
    fn tree_counts() {
        assert_eq!(enumerate_spanning_trees(&Lattice::chain(5).unwrap()).unwrap().len(), 1);
        let block = Lattice::new(&[2, 2], Boundary::Neumann).unwrap();
        assert_eq!(enumerate_spanning_trees(&block).unwrap().len(), 4);
        assert!((kirchhoff_count(&block) - 4.0).abs() < 1e-12);
        let big = Lattice::new(&[2, 5], Boundary::Neumann).unwrap();
        assert!(enumerate_spanning_trees(&big).is_err());
    }

    #[test]
    fn zero_field_path_deletion() {
        let lat = Lattice::new(&[3, 3], Boundary::Neumann).unwrap();
        let p = ModelParams::new(0.4, lat.clone(), PinningScheme::Uniform { eps: 0.1 }).unwrap();
        let g = Path::new(&lat, vec![0, 1, 4]).unwrap();
        let del = delete_path_matrix(&p, &FieldConfig::zeros(9), &g).unwrap();
        for (a, &i) in del.sites.iter().enumerate() {
            let touching = lat.neighbors(i).unwrap().iter().filter(|k| g.contains(**k)).count();
            assert!((del.eps_tilde[a] - (0.1 + 0.4 * touching as f64)).abs() < 1e-15);
        }
        let whole = Path::new(&lat, vec![0, 1, 2, 5, 4, 3, 6, 7, 8]).unwrap();
        let empty = delete_path_matrix(&p, &FieldConfig::zeros(9), &whole).unwrap();
        assert_eq!(empty.matrix.n(), 0);
        assert_eq!(empty.matrix.determinant(), 1.0);
    }

    #[test]
    fn matrix_tree_unit_weights() {
        let pin = PinningScheme::Single { site: 0, eps: 1.0 };
        let p = ModelParams::new(1.0, Lattice::chain(2).unwrap(), pin.clone()).unwrap();
        let c = matrix_tree_check(&p, &FieldConfig::zeros(2)).unwrap();
        assert!((c.lhs - 1.0).abs() < 1e-14 && (c.rhs - 1.0).abs() < 1e-14);
        assert!((single_pinning_identity(&p, &FieldConfig::zeros(2), 1).unwrap() - 1.0).abs() < 1e-14);

        let block = Lattice::new(&[2, 2], Boundary::Neumann).unwrap();
        let p = ModelParams::new(1.0, block, pin).unwrap();
        let c = matrix_tree_check(&p, &FieldConfig::zeros(4)).unwrap();
        assert!((c.rhs - 4.0).abs() < 1e-14);
        assert!((c.lhs - 4.0).abs() < 1e-12);
    }

    #[test]
    fn wrong_pinning_mode() {
        let p = ModelParams::new(1.0, Lattice::chain(3).unwrap(), PinningScheme::Uniform { eps: 0.2 }).unwrap();
        assert!(matches!(matrix_tree_check(&p, &FieldConfig::zeros(3)), Err(Error::PinningMismatch(_))));
        assert!(single_pinning_identity(&p, &FieldConfig::zeros(3), 0).is_err());
    }
}
