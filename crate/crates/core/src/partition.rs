//! Uniform lattices, overlapping box partitions and partition-of-unity weights.
//!
//! Nodes are numbered with the x index running fastest. A patch is an
//! axis-aligned box of nodes; its boundary ring carries Dirichlet (or
//! incoming) data and its interior is solved for.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform subdivision of `[lo, hi]` into `cells` intervals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub cells: usize,
}

impl Axis {
    pub fn new(lo: f64, hi: f64, cells: usize) -> Result<Self> {
        if !(hi > lo) || cells == 0 || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "axis [{lo}, {hi}] with {cells} cells"
            )));
        }
        Ok(Self { lo, hi, cells })
    }

    /// Axis from a mesh width; `(hi - lo) / h` must be an integer to 1e-9.
    pub fn from_spacing(lo: f64, hi: f64, h: f64) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::InvalidParameter(format!("mesh width {h}")));
        }
        let ratio = (hi - lo) / h;
        let cells = ratio.round();
        if (ratio - cells).abs() > 1e-9 * ratio.abs().max(1.0) {
            return Err(Error::InvalidParameter(format!(
                "extent {} is not a multiple of h = {h}",
                hi - lo
            )));
        }
        Self::new(lo, hi, cells as usize)
    }

    pub fn nodes(&self) -> usize {
        self.cells + 1
    }

    pub fn h(&self) -> f64 {
        (self.hi - self.lo) / self.cells as f64
    }

    pub fn coord(&self, i: usize) -> f64 {
        if i == self.cells {
            self.hi
        } else {
            self.lo + i as f64 * self.h()
        }
    }
}

/// Tensor-product lattice in one or two dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub axes: Vec<Axis>,
}

impl Grid {
    pub fn new_1d(x: Axis) -> Self {
        Self { axes: vec![x] }
    }

    pub fn new_2d(x: Axis, y: Axis) -> Self {
        Self { axes: vec![x, y] }
    }

    /// Unit interval or unit square with `cells` intervals per axis.
    pub fn unit(dim: usize, cells: usize) -> Result<Self> {
        let ax = Axis::new(0.0, 1.0, cells)?;
        match dim {
            1 => Ok(Self::new_1d(ax)),
            2 => Ok(Self::new_2d(ax, ax)),
            _ => Err(Error::InvalidParameter(format!("dimension {dim}"))),
        }
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(Axis::nodes).collect()
    }

    pub fn node_count(&self) -> usize {
        self.axes.iter().map(Axis::nodes).product()
    }

    pub fn index(&self, ij: &[usize]) -> usize {
        match ij {
            [i] => *i,
            [i, j] => i + self.axes[0].nodes() * j,
            _ => panic!("index arity {}", ij.len()),
        }
    }

    pub fn multi_index(&self, node: usize) -> Vec<usize> {
        match self.dim() {
            1 => vec![node],
            _ => {
                let nx = self.axes[0].nodes();
                vec![node % nx, node / nx]
            }
        }
    }

    pub fn coords(&self, node: usize) -> Vec<f64> {
        self.multi_index(node)
            .iter()
            .zip(&self.axes)
            .map(|(&i, ax)| ax.coord(i))
            .collect()
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.multi_index(node)
            .iter()
            .zip(&self.axes)
            .any(|(&i, ax)| i == 0 || i == ax.cells)
    }

    /// Global boundary nodes: endpoints in 1D, counterclockwise from the
    /// origin corner in 2D.
    pub fn boundary_nodes(&self) -> Vec<usize> {
        let ranges: Vec<(usize, usize)> = self.axes.iter().map(|a| (0, a.cells)).collect();
        ring_order(&ranges)
            .into_iter()
            .map(|ij| self.index(&ij))
            .collect()
    }

    /// Evaluates `f` at every node.
    pub fn sample(&self, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
        (0..self.node_count()).map(|n| f(&self.coords(n))).collect()
    }
}

/// Ring of a box given by inclusive index ranges, as multi-indices.
fn ring_order(ranges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    match ranges {
        [(a, b)] => vec![vec![*a], vec![*b]],
        [(x0, x1), (y0, y1)] => {
            let mut out = Vec::new();
            for i in *x0..=*x1 {
                out.push(vec![i, *y0]);
            }
            for j in y0 + 1..=*y1 {
                out.push(vec![*x1, j]);
            }
            for i in (*x0..*x1).rev() {
                out.push(vec![i, *y1]);
            }
            for j in (y0 + 1..*y1).rev() {
                out.push(vec![*x0, j]);
            }
            out
        }
        _ => panic!("unsupported dimension"),
    }
}

/// One box `K_m` of a partition.
#[derive(Debug, Clone, Serialize)]
pub struct Patch {
    pub id: usize,
    /// Inclusive global index range per axis.
    pub ranges: Vec<(usize, usize)>,
    /// Global node index of each local node (x fastest).
    pub nodes: Vec<usize>,
    /// Local indices of the box boundary, ordered like [`Grid::boundary_nodes`].
    pub ring: Vec<usize>,
    /// Local indices of the nodes this patch owns (`K̃_m`), ascending.
    pub interior: Vec<usize>,
    /// Local indices of the non-ring nodes, ascending.
    pub inner: Vec<usize>,
    pub neighbors: Vec<usize>,
}

impl Patch {
    pub fn shape(&self) -> Vec<usize> {
        self.ranges.iter().map(|(a, b)| b - a + 1).collect()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Local index of global node `node`, if the patch contains it.
    pub fn local_index(&self, grid: &Grid, node: usize) -> Option<usize> {
        let ij = grid.multi_index(node);
        let mut local = 0;
        let mut stride = 1;
        for (k, (&g, &(a, b))) in ij.iter().zip(&self.ranges).enumerate() {
            if g < a || g > b {
                return None;
            }
            local += (g - a) * stride;
            stride *= self.ranges[k].1 - self.ranges[k].0 + 1;
        }
        Some(local)
    }

    /// Sub-grid covering this patch.
    pub fn local_grid(&self, grid: &Grid) -> Grid {
        let axes = grid
            .axes
            .iter()
            .zip(&self.ranges)
            .map(|(ax, &(a, b))| Axis {
                lo: ax.coord(a),
                hi: ax.coord(b),
                cells: b - a,
            })
            .collect();
        Grid { axes }
    }
}

/// Overlapping decomposition of a grid with partition-of-unity weights.
#[derive(Debug, Clone, Serialize)]
pub struct Partition {
    pub grid: Grid,
    pub counts: Vec<usize>,
    pub overlap: usize,
    pub patches: Vec<Patch>,
    /// Per-patch weights `χ_m` on the patch's local nodes.
    pub chi: Vec<Vec<f64>>,
    /// Owning patch of every global node.
    pub owner: Vec<usize>,
}

/// Per-axis patch ranges and 1D weights.
fn axis_layout(cells: usize, count: usize, overlap: usize) -> Result<Vec<((usize, usize), Vec<f64>)>> {
    let cuts: Vec<usize> = (0..=count)
        .map(|i| ((i * cells) as f64 / count as f64).round() as usize)
        .collect();
    if count > 1 {
        for w in cuts.windows(2) {
            if w[1] - w[0] <= overlap {
                return Err(Error::DegenerateOverlap(format!(
                    "overlap {overlap} is not smaller than patch core width {} on an axis of {cells} cells",
                    w[1] - w[0]
                )));
            }
        }
    }
    let lo_shift = overlap / 2;
    let hi_shift = overlap - lo_shift;
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let lo = if i == 0 { 0 } else { cuts[i] - lo_shift };
        let hi = if i + 1 == count { cells } else { cuts[i + 1] + hi_shift };
        let weights = (lo..=hi)
            .map(|t| {
                let mut w: f64 = 1.0;
                if i > 0 && t <= cuts[i] + hi_shift {
                    w = w.min((t - lo) as f64 / overlap as f64);
                }
                if i + 1 < count && t >= cuts[i + 1] - lo_shift {
                    w = w.min((hi - t) as f64 / overlap as f64);
                }
                w
            })
            .collect();
        out.push(((lo, hi), weights));
    }
    Ok(out)
}

impl Partition {
    /// Tensor-product partition with `counts[d]` patches along axis `d`.
    /// Adjacent patches share a band of `overlap` cells (`overlap + 1` nodes).
    pub fn build(grid: &Grid, counts: &[usize], overlap: usize) -> Result<Self> {
        if counts.len() != grid.dim() {
            return Err(Error::DimensionMismatch {
                what: "patch counts",
                expected: grid.dim(),
                got: counts.len(),
            });
        }
        if counts.iter().any(|&c| c == 0) {
            return Err(Error::InvalidParameter("patch count must be at least 1".into()));
        }
        if overlap == 0 {
            return Err(Error::InvalidParameter("overlap must be at least 1".into()));
        }
        let layouts: Vec<_> = grid
            .axes
            .iter()
            .zip(counts)
            .map(|(ax, &c)| axis_layout(ax.cells, c, overlap))
            .collect::<Result<_>>()?;

        let mut patches = Vec::new();
        let mut chi = Vec::new();
        let combos: Vec<Vec<usize>> = match grid.dim() {
            1 => (0..counts[0]).map(|i| vec![i]).collect(),
            _ => (0..counts[1])
                .flat_map(|j| (0..counts[0]).map(move |i| vec![i, j]))
                .collect(),
        };
        for (id, combo) in combos.iter().enumerate() {
            let ranges: Vec<(usize, usize)> =
                combo.iter().enumerate().map(|(d, &i)| layouts[d][i].0).collect();
            let axis_w: Vec<&Vec<f64>> =
                combo.iter().enumerate().map(|(d, &i)| &layouts[d][i].1).collect();
            let shape: Vec<usize> = ranges.iter().map(|(a, b)| b - a + 1).collect();
            let mut nodes = Vec::new();
            let mut weights = Vec::new();
            match grid.dim() {
                1 => {
                    for i in 0..shape[0] {
                        nodes.push(ranges[0].0 + i);
                        weights.push(axis_w[0][i]);
                    }
                }
                _ => {
                    for j in 0..shape[1] {
                        for i in 0..shape[0] {
                            nodes.push(grid.index(&[ranges[0].0 + i, ranges[1].0 + j]));
                            weights.push(axis_w[0][i] * axis_w[1][j]);
                        }
                    }
                }
            }
            let local_ranges: Vec<(usize, usize)> = shape.iter().map(|&s| (0, s - 1)).collect();
            let ring: Vec<usize> = ring_order(&local_ranges)
                .into_iter()
                .map(|ij| match ij.as_slice() {
                    [i] => *i,
                    [i, j] => i + shape[0] * j,
                    _ => unreachable!(),
                })
                .collect();
            let mut on_ring = vec![false; nodes.len()];
            for &r in &ring {
                on_ring[r] = true;
            }
            let inner = (0..nodes.len()).filter(|&l| !on_ring[l]).collect();
            patches.push(Patch {
                id,
                ranges,
                nodes,
                ring,
                interior: Vec::new(),
                inner,
                neighbors: Vec::new(),
            });
            chi.push(weights);
        }

        // Renormalize so the weights sum to one exactly.
        let n = grid.node_count();
        let mut total = vec![0.0; n];
        for (p, w) in patches.iter().zip(&chi) {
            for (&g, &v) in p.nodes.iter().zip(w) {
                total[g] += v;
            }
        }
        for (p, w) in patches.iter().zip(chi.iter_mut()) {
            for (&g, v) in p.nodes.iter().zip(w.iter_mut()) {
                *v /= total[g];
            }
        }

        // Owner: largest weight, ties to the lowest patch index.
        let mut owner = vec![usize::MAX; n];
        let mut best = vec![f64::NEG_INFINITY; n];
        for (m, (p, w)) in patches.iter().zip(&chi).enumerate() {
            for (&g, &v) in p.nodes.iter().zip(w) {
                if v > best[g] {
                    best[g] = v;
                    owner[g] = m;
                }
            }
        }
        for m in 0..patches.len() {
            let p = &patches[m];
            let interior: Vec<usize> = (0..p.nodes.len()).filter(|&l| owner[p.nodes[l]] == m).collect();
            let neighbors = (0..patches.len())
                .filter(|&k| k != m && boxes_intersect(&p.ranges, &patches[k].ranges))
                .collect();
            patches[m].interior = interior;
            patches[m].neighbors = neighbors;
        }
        Ok(Self {
            grid: grid.clone(),
            counts: counts.to_vec(),
            overlap,
            patches,
            chi,
            owner,
        })
    }

    pub fn len(&self) -> usize {
        self.patches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patches.is_empty()
    }

    fn components(&self, len: usize, nodes: usize, what: &'static str) -> Result<usize> {
        if nodes == 0 || len == 0 || len % nodes != 0 {
            return Err(Error::DimensionMismatch { what, expected: nodes, got: len });
        }
        Ok(len / nodes)
    }

    /// Copies a global field (with any number of components per node, node
    /// major) into patch-local ordering.
    pub fn restrict(&self, field: &[f64], m: usize) -> Result<Vec<f64>> {
        let c = self.components(field.len(), self.grid.node_count(), "global field")?;
        let p = &self.patches[m];
        let mut out = Vec::with_capacity(p.nodes.len() * c);
        for &g in &p.nodes {
            out.extend_from_slice(&field[g * c..(g + 1) * c]);
        }
        Ok(out)
    }

    /// Places a local field into a zero global field.
    pub fn extend_by_zero(&self, local: &[f64], m: usize) -> Result<Vec<f64>> {
        let p = &self.patches[m];
        let c = self.components(local.len(), p.nodes.len(), "local field")?;
        let mut out = vec![0.0; self.grid.node_count() * c];
        for (l, &g) in p.nodes.iter().enumerate() {
            out[g * c..(g + 1) * c].copy_from_slice(&local[l * c..(l + 1) * c]);
        }
        Ok(out)
    }

    /// `Σ_m χ_m · u_m` with each local field extended by zero.
    pub fn pou_blend(&self, locals: &[Vec<f64>]) -> Result<Vec<f64>> {
        if locals.len() != self.patches.len() {
            return Err(Error::DimensionMismatch {
                what: "local fields",
                expected: self.patches.len(),
                got: locals.len(),
            });
        }
        let c = self.components(locals[0].len(), self.patches[0].nodes.len(), "local field")?;
        let mut out = vec![0.0; self.grid.node_count() * c];
        for ((p, w), u) in self.patches.iter().zip(&self.chi).zip(locals) {
            if u.len() != p.nodes.len() * c {
                return Err(Error::DimensionMismatch {
                    what: "local field",
                    expected: p.nodes.len() * c,
                    got: u.len(),
                });
            }
            for (l, (&g, &wt)) in p.nodes.iter().zip(w).enumerate() {
                for k in 0..c {
                    out[g * c + k] += wt * u[l * c + k];
                }
            }
        }
        Ok(out)
    }

    /// Nodes in `K_m ∩ K_n` as (global, local in m, local in n).
    pub fn shared_nodes(&self, m: usize, n: usize) -> Vec<(usize, usize, usize)> {
        let pm = &self.patches[m];
        let pn = &self.patches[n];
        pm.nodes
            .iter()
            .enumerate()
            .filter_map(|(lm, &g)| pn.local_index(&self.grid, g).map(|ln| (g, lm, ln)))
            .collect()
    }

    /// Global chi weight field for one patch, for export.
    pub fn chi_global(&self, m: usize) -> Vec<f64> {
        self.extend_by_zero(&self.chi[m], m).expect("chi sized to patch")
    }

    pub fn summary_json(&self) -> serde_json::Value {
        let patches: Vec<_> = self
            .patches
            .iter()
            .zip(&self.chi)
            .map(|(p, w)| {
                serde_json::json!({
                    "id": p.id,
                    "ranges": p.ranges,
                    "neighbors": p.neighbors,
                    "ring_size": p.ring.len(),
                    "interior_size": p.interior.len(),
                    "chi": w,
                })
            })
            .collect();
        serde_json::json!({
            "grid": self.grid,
            "counts": self.counts,
            "overlap": self.overlap,
            "patches": patches,
        })
    }
}

fn boxes_intersect(a: &[(usize, usize)], b: &[(usize, usize)]) -> bool {
    a.iter().zip(b).all(|(&(a0, a1), &(b0, b1))| a0 <= b1 && b0 <= a1)
}
