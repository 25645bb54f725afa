//! Finite hypercubic lattices.
//!
//! Sites are indexed row-major (last axis fastest) so that tabular output is
//! reproducible. Periodic lattices require every extent to be at least 3; for
//! smaller extents the `−` and `+` neighbors would coincide (or equal the site
//! itself) and the nearest-neighbor graph would stop being simple.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Boundary {
    Periodic,
    Neumann,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    extents: Vec<usize>,
    boundary: Boundary,
    strides: Vec<usize>,
    size: usize,
    adjacency: Vec<Vec<usize>>,
    edges: Vec<(usize, usize)>,
}

impl Lattice {
    pub fn new(extents: &[usize], boundary: Boundary) -> Result<Self> {
        if extents.is_empty() {
            return Err(Error::InvalidLattice("dimension must be at least 1".into()));
        }
        if let Some(&bad) = extents.iter().find(|&&l| l == 0) {
            return Err(Error::InvalidLattice(format!("extent {bad} must be positive")));
        }
        if boundary == Boundary::Periodic {
            if let Some(&bad) = extents.iter().find(|&&l| l < 3) {
                return Err(Error::InvalidLattice(format!(
                    "periodic extent {bad} is below 3; wrapped neighbors would coincide"
                )));
            }
        }
        let size = extents
            .iter()
            .try_fold(1usize, |acc, &l| acc.checked_mul(l))
            .ok_or_else(|| Error::InvalidLattice("site count overflows".into()))?;

        let mut strides = vec![1usize; extents.len()];
        for axis in (0..extents.len().saturating_sub(1)).rev() {
            strides[axis] = strides[axis + 1] * extents[axis + 1];
        }

        let mut lattice = Lattice {
            extents: extents.to_vec(),
            boundary,
            strides,
            size,
            adjacency: Vec::new(),
            edges: Vec::new(),
        };
        lattice.adjacency = (0..size).map(|j| lattice.compute_neighbors(j)).collect();
        lattice.edges = lattice
            .adjacency
            .iter()
            .enumerate()
            .flat_map(|(j, nbrs)| nbrs.iter().filter(move |&&k| k > j).map(move |&k| (j, k)))
            .collect();
        Ok(lattice)
    }

    /// Open chain of `n` sites.
    pub fn chain(n: usize) -> Result<Self> {
        Self::new(&[n], Boundary::Neumann)
    }

    pub fn dim(&self) -> usize {
        self.extents.len()
    }

    pub fn extents(&self) -> &[usize] {
        &self.extents
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    /// Number of sites `N`.
    pub fn size(&self) -> usize {
        self.size
    }

    /// Unordered nearest-neighbor pairs `(j, k)` with `j < k`, each listed once.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn check_site(&self, site: usize) -> Result<()> {
        if site < self.size {
            Ok(())
        } else {
            Err(Error::SiteOutOfRange { site, size: self.size })
        }
    }

    pub fn coords(&self, site: usize) -> Result<Vec<usize>> {
        self.check_site(site)?;
        Ok(self.coords_unchecked(site))
    }

    fn coords_unchecked(&self, site: usize) -> Vec<usize> {
        self.strides
            .iter()
            .zip(&self.extents)
            .map(|(&s, &l)| (site / s) % l)
            .collect()
    }

    pub fn index(&self, coords: &[usize]) -> Result<usize> {
        if coords.len() != self.dim() {
            return Err(Error::SizeMismatch { expected: self.dim(), got: coords.len() });
        }
        let mut site = 0;
        for ((&c, &l), &s) in coords.iter().zip(&self.extents).zip(&self.strides) {
            if c >= l {
                return Err(Error::InvalidLattice(format!("coordinate {c} outside extent {l}")));
            }
            site += c * s;
        }
        Ok(site)
    }

    fn compute_neighbors(&self, site: usize) -> Vec<usize> {
        let coords = self.coords_unchecked(site);
        let mut out = Vec::with_capacity(2 * self.dim());
        for axis in 0..self.dim() {
            let l = self.extents[axis];
            let c = coords[axis];
            let stride = self.strides[axis];
            match self.boundary {
                Boundary::Neumann => {
                    if c > 0 {
                        out.push(site - stride);
                    }
                    if c + 1 < l {
                        out.push(site + stride);
                    }
                }
                Boundary::Periodic => {
                    let down = (c + l - 1) % l;
                    let up = (c + 1) % l;
                    out.push(site - c * stride + down * stride);
                    out.push(site - c * stride + up * stride);
                }
            }
        }
        out
    }

    /// Nearest neighbors of `site`, in axis order with the `−` neighbor first.
    pub fn neighbors(&self, site: usize) -> Result<&[usize]> {
        self.check_site(site)?;
        Ok(&self.adjacency[site])
    }

    /// Coordination number of `site`.
    pub fn degree(&self, site: usize) -> usize {
        self.adjacency[site].len()
    }

    pub fn are_neighbors(&self, a: usize, b: usize) -> bool {
        a < self.size && self.adjacency[a].contains(&b)
    }

    fn axis_offsets(&self, x: usize, y: usize) -> Result<Vec<usize>> {
        let cx = self.coords(x)?;
        let cy = self.coords(y)?;
        Ok(cx
            .iter()
            .zip(&cy)
            .zip(&self.extents)
            .map(|((&a, &b), &l)| {
                let delta = a.abs_diff(b);
                match self.boundary {
                    Boundary::Neumann => delta,
                    Boundary::Periodic => delta.min(l - delta),
                }
            })
            .collect())
    }

    /// Euclidean distance, periodized under periodic boundaries.
    pub fn distance(&self, x: usize, y: usize) -> Result<f64> {
        let offsets = self.axis_offsets(x, y)?;
        Ok(offsets.iter().map(|&o| (o * o) as f64).sum::<f64>().sqrt())
    }

    /// L1 (graph) distance: the length of a shortest nearest-neighbor path.
    pub fn graph_distance(&self, x: usize, y: usize) -> Result<usize> {
        Ok(self.axis_offsets(x, y)?.iter().sum())
    }

    /// Breadth-first graph distances from a set of sources (`usize::MAX` if unreachable).
    pub fn distances_from(&self, sources: &[usize]) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.size];
        let mut queue = std::collections::VecDeque::new();
        for &s in sources {
            if s < self.size && dist[s] != 0 {
                dist[s] = 0;
                queue.push_back(s);
            }
        }
        while let Some(j) = queue.pop_front() {
            for &k in &self.adjacency[j] {
                if dist[k] == usize::MAX {
                    dist[k] = dist[j] + 1;
                    queue.push_back(k);
                }
            }
        }
        dist
    }
}
