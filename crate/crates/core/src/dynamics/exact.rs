//! Krylov propagation of the block-sparse Liouvillian in the bare basis.

use nalgebra::{DMatrix, DMatrixView, DMatrixViewMut};

use super::blocks::{BlockDensity, BlockLayout, Dissipation, Partition};
use super::krylov::{Krylov, KrylovOptions};
use super::TWO_PI;
use crate::error::Result;
use crate::qspace::{Operator, C64};

struct Source {
    from_pair: usize,
    left: DMatrix<C64>,
    right_adj: DMatrix<C64>,
}

pub(crate) struct Liouvillian<'a> {
    partition: &'a Partition,
    layout: &'a BlockLayout,
    left: Vec<Option<DMatrix<C64>>>,
    right: Vec<Option<DMatrix<C64>>>,
    sources: Vec<Vec<Source>>,
}

impl<'a> Liouvillian<'a> {
    pub(crate) fn new(
        h: &Operator,
        partition: &'a Partition,
        dissipation: &Dissipation,
        layout: &'a BlockLayout,
    ) -> Self {
        let mut left = vec![None; partition.len()];
        let mut right = vec![None; partition.len()];
        let i2pi = C64::new(0.0, TWO_PI);
        let pi = C64::new(std::f64::consts::PI, 0.0);
        for &(a, b) in &layout.pairs {
            for c in [a, b] {
                if left[c].is_none() {
                    let hc = partition.restrict(h, c, c);
                    let k = &dissipation.loss[c];
                    left[c] = Some(-(&hc * i2pi) - k * pi);
                    right[c] = Some(&hc * i2pi - k * pi);
                }
            }
        }
        let mut sources: Vec<Vec<Source>> = (0..layout.pairs.len()).map(|_| Vec::new()).collect();
        for (q, &(c, d)) in layout.pairs.iter().enumerate() {
            for blocks in &dissipation.jumps {
                for l in blocks.iter().filter(|j| j.from == c) {
                    for r in blocks.iter().filter(|j| j.from == d) {
                        let p = layout
                            .pair_index(l.to, r.to)
                            .expect("layout closed under jumps");
                        sources[p].push(Source {
                            from_pair: q,
                            left: &l.mat * C64::new(TWO_PI, 0.0),
                            right_adj: r.adj.clone(),
                        });
                    }
                }
            }
        }
        Liouvillian {
            partition,
            layout,
            left,
            right,
            sources,
        }
    }

    pub(crate) fn apply(&self, x: &[C64], y: &mut [C64]) {
        let zero = C64::new(0.0, 0.0);
        let one = C64::new(1.0, 0.0);
        for (p, &(a, b)) in self.layout.pairs.iter().enumerate() {
            let (ra, cb) = (self.partition.size(a), self.partition.size(b));
            let (lo, hi) = (self.layout.offsets[p], self.layout.offsets[p + 1]);
            let xp = DMatrixView::from_slice(&x[lo..hi], ra, cb);
            let mut yp = DMatrixViewMut::from_slice(&mut y[lo..hi], ra, cb);
            yp.gemm(one, self.left[a].as_ref().unwrap(), &xp, zero);
            yp.gemm(one, &xp, self.right[b].as_ref().unwrap(), one);
            for s in &self.sources[p] {
                let xq = self.layout.block(x, s.from_pair, self.partition);
                let tmp = &s.left * xq;
                yp.gemm(one, &tmp, &s.right_adj, one);
            }
        }
    }

    /// Crude upper bound on the operator norm, used for the first step size.
    pub(crate) fn norm_estimate(&self) -> f64 {
        let one_norm = |m: &DMatrix<C64>| {
            m.column_iter()
                .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
                .fold(0.0, f64::max)
        };
        let mut best: f64 = 0.0;
        for (p, &(a, b)) in self.layout.pairs.iter().enumerate() {
            let mut v = one_norm(self.left[a].as_ref().unwrap()) + one_norm(self.right[b].as_ref().unwrap());
            for s in &self.sources[p] {
                v += one_norm(&s.left) * one_norm(&s.right_adj);
            }
            best = best.max(v);
        }
        best
    }
}

pub(crate) fn run<'a>(
    h: &Operator,
    partition: &'a Partition,
    dissipation: &Dissipation,
    layout: &'a BlockLayout,
    start: BlockDensity<'a>,
    times: &[f64],
    krylov: &KrylovOptions,
    observe: &mut dyn FnMut(&BlockDensity, f64),
) -> Result<BlockDensity<'a>> {
    let liouvillian = Liouvillian::new(h, partition, dissipation, layout);
    let anorm = liouvillian.norm_estimate();
    let mut state = start;
    let mut prop = Krylov::new(state.data.len(), |x: &[C64], y: &mut [C64]| liouvillian.apply(x, y), anorm, *krylov);
    let mut t_prev = 0.0;
    for &t in times {
        prop.advance(&mut state.data, t - t_prev, t_prev)?;
        t_prev = t;
        observe(&state, t);
    }
    Ok(state)
}
