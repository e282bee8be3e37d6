//! Block structure shared by the density-matrix propagators.
//!
//! Basis states are grouped into components of the graph formed by the
//! Hamiltonian and the loss operator `sum L^dagger L`. A density matrix is
//! stored as dense blocks `(a, b)` over the pairs of components reachable
//! from the initial state under the jump operators.

use std::collections::{BTreeSet, HashMap, VecDeque};

use nalgebra::{DMatrix, DMatrixView};

use crate::qspace::{Operator, C64};

#[derive(Clone, Debug)]
pub struct Partition {
    comp_of: Vec<usize>,
    local_of: Vec<usize>,
    members: Vec<Vec<usize>>,
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

impl Partition {
    /// Connected components of the union of the sparsity patterns.
    pub fn from_operators<'a>(dim: usize, ops: impl IntoIterator<Item = &'a Operator>) -> Self {
        let mut parent: Vec<usize> = (0..dim).collect();
        for op in ops {
            for (r, c, _) in op.entries() {
                let (ra, rb) = (find(&mut parent, r), find(&mut parent, c));
                if ra != rb {
                    let (lo, hi) = (ra.min(rb), ra.max(rb));
                    parent[hi] = lo;
                }
            }
        }
        let mut comp_of = vec![usize::MAX; dim];
        let mut local_of = vec![0; dim];
        let mut members: Vec<Vec<usize>> = Vec::new();
        let mut root_comp: HashMap<usize, usize> = HashMap::new();
        for i in 0..dim {
            let root = find(&mut parent, i);
            let c = *root_comp.entry(root).or_insert_with(|| {
                members.push(Vec::new());
                members.len() - 1
            });
            comp_of[i] = c;
            local_of[i] = members[c].len();
            members[c].push(i);
        }
        Partition {
            comp_of,
            local_of,
            members,
        }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn comp_of(&self, i: usize) -> usize {
        self.comp_of[i]
    }

    pub fn local_of(&self, i: usize) -> usize {
        self.local_of[i]
    }

    pub fn members(&self, c: usize) -> &[usize] {
        &self.members[c]
    }

    pub fn size(&self, c: usize) -> usize {
        self.members[c].len()
    }

    /// Dense restriction of `op` to rows in `to` and columns in `from`.
    pub fn restrict(&self, op: &Operator, to: usize, from: usize) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.size(to), self.size(from));
        for &r in self.members(to) {
            for (c, v) in op.row(r) {
                if self.comp_of[c] == from {
                    m[(self.local_of[r], self.local_of[c])] = v;
                }
            }
        }
        m
    }
}

#[derive(Clone, Debug)]
pub struct JumpBlock {
    pub from: usize,
    pub to: usize,
    /// `|to| x |from|` restriction of the jump operator.
    pub mat: DMatrix<C64>,
    pub adj: DMatrix<C64>,
}

/// Jump operators cut into component blocks plus the per-component loss
/// operator `sum_k L_k^dagger L_k`.
#[derive(Clone, Debug)]
pub struct Dissipation {
    pub jumps: Vec<Vec<JumpBlock>>,
    pub loss: Vec<DMatrix<C64>>,
}

impl Dissipation {
    pub fn new(partition: &Partition, lindblads: &[Operator]) -> Self {
        let mut jumps = Vec::with_capacity(lindblads.len());
        let mut loss: Vec<DMatrix<C64>> = (0..partition.len())
            .map(|c| DMatrix::zeros(partition.size(c), partition.size(c)))
            .collect();
        for l in lindblads {
            let mut pairs = BTreeSet::new();
            for (r, c, _) in l.entries() {
                pairs.insert((partition.comp_of(c), partition.comp_of(r)));
            }
            let blocks: Vec<JumpBlock> = pairs
                .into_iter()
                .map(|(from, to)| {
                    let mat = partition.restrict(l, to, from);
                    let adj = mat.adjoint();
                    JumpBlock { from, to, mat, adj }
                })
                .collect();
            for b in &blocks {
                loss[b.from] += &b.adj * &b.mat;
            }
            jumps.push(blocks);
        }
        Dissipation { jumps, loss }
    }

    pub fn is_empty(&self) -> bool {
        self.jumps.iter().all(|j| j.is_empty())
    }
}

/// Component pairs carrying density-matrix blocks, with flat offsets.
/// Each block is stored column-major.
#[derive(Clone, Debug)]
pub struct BlockLayout {
    pub pairs: Vec<(usize, usize)>,
    pub offsets: Vec<usize>,
    index: HashMap<(usize, usize), usize>,
}

impl BlockLayout {
    /// Closure of `initial` under simultaneous left/right action of each jump.
    pub fn reachable(
        partition: &Partition,
        dissipation: &Dissipation,
        initial: impl IntoIterator<Item = (usize, usize)>,
    ) -> Self {
        let mut seen: BTreeSet<(usize, usize)> = BTreeSet::new();
        let mut queue: VecDeque<(usize, usize)> = VecDeque::new();
        for p in initial {
            if seen.insert(p) {
                queue.push_back(p);
            }
        }
        while let Some((a, b)) = queue.pop_front() {
            for blocks in &dissipation.jumps {
                for left in blocks.iter().filter(|j| j.from == a) {
                    for right in blocks.iter().filter(|j| j.from == b) {
                        let p = (left.to, right.to);
                        if seen.insert(p) {
                            queue.push_back(p);
                        }
                    }
                }
            }
        }
        let pairs: Vec<(usize, usize)> = seen.into_iter().collect();
        let mut offsets = Vec::with_capacity(pairs.len() + 1);
        offsets.push(0);
        for &(a, b) in &pairs {
            offsets.push(offsets.last().unwrap() + partition.size(a) * partition.size(b));
        }
        let index = pairs.iter().enumerate().map(|(i, &p)| (p, i)).collect();
        BlockLayout {
            pairs,
            offsets,
            index,
        }
    }

    pub fn len(&self) -> usize {
        *self.offsets.last().unwrap_or(&0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn pair_index(&self, a: usize, b: usize) -> Option<usize> {
        self.index.get(&(a, b)).copied()
    }

    pub fn block<'d>(&self, data: &'d [C64], p: usize, partition: &Partition) -> DMatrixView<'d, C64> {
        let (a, b) = self.pairs[p];
        DMatrixView::from_slice(
            &data[self.offsets[p]..self.offsets[p + 1]],
            partition.size(a),
            partition.size(b),
        )
    }
}

/// Density matrix stored blockwise over a [`BlockLayout`].
#[derive(Clone, Debug)]
pub struct BlockDensity<'a> {
    pub partition: &'a Partition,
    pub layout: &'a BlockLayout,
    pub data: Vec<C64>,
}

impl<'a> BlockDensity<'a> {
    pub fn from_dense(partition: &'a Partition, layout: &'a BlockLayout, rho: &DMatrix<C64>) -> Self {
        let mut data = vec![C64::new(0.0, 0.0); layout.len()];
        for (p, &(a, b)) in layout.pairs.iter().enumerate() {
            let (ma, mb) = (partition.members(a), partition.members(b));
            let off = layout.offsets[p];
            for (j, &gj) in mb.iter().enumerate() {
                for (i, &gi) in ma.iter().enumerate() {
                    data[off + i + j * ma.len()] = rho[(gi, gj)];
                }
            }
        }
        BlockDensity {
            partition,
            layout,
            data,
        }
    }

    pub fn element(&self, r: usize, c: usize) -> C64 {
        let (a, b) = (self.partition.comp_of(r), self.partition.comp_of(c));
        match self.layout.pair_index(a, b) {
            Some(p) => {
                let rows = self.partition.size(a);
                self.data[self.layout.offsets[p]
                    + self.partition.local_of(r)
                    + self.partition.local_of(c) * rows]
            }
            None => C64::new(0.0, 0.0),
        }
    }

    pub fn to_dense(&self, dim: usize) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(dim, dim);
        for (p, &(a, b)) in self.layout.pairs.iter().enumerate() {
            let blk = self.layout.block(&self.data, p, self.partition);
            for (j, &gj) in self.partition.members(b).iter().enumerate() {
                for (i, &gi) in self.partition.members(a).iter().enumerate() {
                    m[(gi, gj)] = blk[(i, j)];
                }
            }
        }
        m
    }

    pub fn trace(&self) -> C64 {
        let mut tr = C64::new(0.0, 0.0);
        for (p, &(a, b)) in self.layout.pairs.iter().enumerate() {
            if a == b {
                let blk = self.layout.block(&self.data, p, self.partition);
                tr += blk.trace();
            }
        }
        tr
    }

    /// Largest `|rho - rho^dagger|` entry.
    pub fn hermitian_deviation(&self) -> f64 {
        let mut dev: f64 = 0.0;
        for (p, &(a, b)) in self.layout.pairs.iter().enumerate() {
            let blk = self.layout.block(&self.data, p, self.partition);
            match self.layout.pair_index(b, a) {
                Some(q) => {
                    let other = self.layout.block(&self.data, q, self.partition);
                    dev = dev.max(max_abs((blk - other.adjoint()).iter()));
                }
                None => dev = dev.max(max_abs(blk.iter())),
            }
        }
        dev
    }

    /// Smallest eigenvalue of the hermitian part, taken over groups of
    /// components linked by stored off-diagonal blocks.
    pub fn min_eigenvalue(&self) -> f64 {
        let n = self.partition.len();
        let mut parent: Vec<usize> = (0..n).collect();
        let mut used = vec![false; n];
        for &(a, b) in &self.layout.pairs {
            used[a] = true;
            used[b] = true;
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
        let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
        for c in 0..n {
            if used[c] {
                let r = find(&mut parent, c);
                groups.entry(r).or_default().push(c);
            }
        }
        let mut min = f64::INFINITY;
        let mut roots: Vec<_> = groups.keys().copied().collect();
        roots.sort_unstable();
        for root in roots {
            let comps = &groups[&root];
            let globals: Vec<usize> = comps
                .iter()
                .flat_map(|&c| self.partition.members(c).iter().copied())
                .collect();
            let m = globals.len();
            let mut dense = DMatrix::zeros(m, m);
            for (i, &gi) in globals.iter().enumerate() {
                for (j, &gj) in globals.iter().enumerate() {
                    dense[(i, j)] = self.element(gi, gj);
                }
            }
            let herm = (&dense + dense.adjoint()).scale(0.5);
            min = min.min(herm.symmetric_eigenvalues().min());
        }
        min
    }
}

pub(crate) fn max_abs<'x>(it: impl Iterator<Item = &'x C64>) -> f64 {
    it.map(|z| z.norm()).fold(0.0, f64::max)
}
