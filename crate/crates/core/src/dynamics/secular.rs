//! Dressed-basis propagation of the master equation.
//!
//! In the eigenbasis of each Hamiltonian component every density-matrix
//! element `X_ij` rotates at `E_i - E_j`. Modes are sorted by frequency and
//! split into clusters wherever the gap between neighbours reaches the
//! cutoff; the dissipator is kept only inside clusters, where it is
//! exponentiated exactly. Couplings dropped between clusters oscillate at
//! least at the cutoff frequency, far faster than any dissipative rate.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DMatrixView, DMatrixViewMut, DVectorView, DVectorViewMut};

use super::blocks::{BlockDensity, BlockLayout, Dissipation, Partition};
use super::krylov::{Krylov, KrylovOptions};
use super::{Spectrum, TWO_PI};
use crate::error::Result;
use crate::qspace::{Operator, C64};

struct Cluster {
    modes: Vec<usize>,
    center: f64,
    generator: DMatrix<C64>,
}

struct Forward {
    to_pair: usize,
    left: usize,
    right: usize,
}

/// Propagator of the cluster generator over one step length.
enum Step {
    Dense(BTreeMap<u64, DMatrix<C64>>),
    Krylov,
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn run<'a>(
    h: &Operator,
    partition: &'a Partition,
    dissipation: &Dissipation,
    layout: &'a BlockLayout,
    start: BlockDensity<'a>,
    times: &[f64],
    cutoff_mhz: f64,
    krylov: &KrylovOptions,
    observe: &mut dyn FnMut(&BlockDensity, f64),
) -> Result<BlockDensity<'a>> {
    let zero = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let used: Vec<usize> = {
        let mut u: Vec<usize> = layout.pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
        u.sort_unstable();
        u.dedup();
        u
    };
    let spectrum = Spectrum::new(h, partition, used.iter().copied());
    let vecs = |c: usize| spectrum.vectors[c].as_ref().expect("component in layout");
    let energies = |c: usize| spectrum.energies[c].as_ref().expect("component in layout");

    // Dissipator pieces in the dressed basis.
    let loss: Vec<Option<DMatrix<C64>>> = (0..partition.len())
        .map(|c| {
            spectrum.vectors[c]
                .as_ref()
                .map(|v| v.adjoint() * &dissipation.loss[c] * v)
        })
        .collect();
    let mut dressed_jumps: Vec<DMatrix<C64>> = Vec::new();
    let mut jump_index: Vec<Vec<(usize, usize, usize)>> = Vec::new(); // (from, to, id) per operator
    for blocks in &dissipation.jumps {
        let mut list = Vec::new();
        for b in blocks {
            if spectrum.vectors[b.from].is_some() && spectrum.vectors[b.to].is_some() {
                dressed_jumps.push(vecs(b.to).adjoint() * &b.mat * vecs(b.from));
                list.push((b.from, b.to, dressed_jumps.len() - 1));
            }
        }
        jump_index.push(list);
    }
    let mut forward: Vec<Vec<Forward>> = (0..layout.pairs.len()).map(|_| Vec::new()).collect();
    for (q, &(c, d)) in layout.pairs.iter().enumerate() {
        for list in &jump_index {
            for &(_, to_l, l) in list.iter().filter(|j| j.0 == c) {
                for &(_, to_r, r) in list.iter().filter(|j| j.0 == d) {
                    let p = layout.pair_index(to_l, to_r).expect("layout closed under jumps");
                    forward[q].push(Forward {
                        to_pair: p,
                        left: l,
                        right: r,
                    });
                }
            }
        }
    }

    // Mode frequencies and clusters.
    let n_modes = layout.len();
    let mut freq = vec![0.0; n_modes];
    let mut pair_of = vec![0usize; n_modes];
    for (p, &(a, b)) in layout.pairs.iter().enumerate() {
        let (ea, eb) = (energies(a), energies(b));
        let rows = ea.len();
        for j in 0..eb.len() {
            for i in 0..rows {
                let m = layout.offsets[p] + i + j * rows;
                freq[m] = ea[i] - eb[j];
                pair_of[m] = p;
            }
        }
    }
    let mut order: Vec<usize> = (0..n_modes).collect();
    order.sort_by(|&x, &y| freq[x].total_cmp(&freq[y]).then(x.cmp(&y)));
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (k, &m) in order.iter().enumerate() {
        if k == 0 || freq[m] - freq[order[k - 1]] >= cutoff_mhz {
            groups.push(Vec::new());
        }
        groups.last_mut().unwrap().push(m);
    }
    let mut loc = vec![(0usize, 0usize); n_modes];
    for (g, modes) in groups.iter().enumerate() {
        for (k, &m) in modes.iter().enumerate() {
            loc[m] = (g, k);
        }
    }

    let pi = std::f64::consts::PI;
    let clusters: Vec<Cluster> = groups
        .into_iter()
        .enumerate()
        .map(|(g, modes)| {
            let s = modes.len();
            let center = modes.iter().map(|&m| freq[m]).sum::<f64>() / s as f64;
            let mut gen = DMatrix::<C64>::zeros(s, s);
            for (col, &q) in modes.iter().enumerate() {
                gen[(col, col)] += C64::new(0.0, -TWO_PI * (freq[q] - center));
                let pq = pair_of[q];
                let (c, d) = layout.pairs[pq];
                let rows_c = partition.size(c);
                let local = q - layout.offsets[pq];
                let (k, l) = (local % rows_c, local / rows_c);
                let mut add = |row: usize, v: C64| {
                    let (gr, lr) = loc[row];
                    if gr == g {
                        gen[(lr, col)] += v;
                    }
                };
                let kc = loss[c].as_ref().unwrap();
                for i in 0..rows_c {
                    let v = kc[(i, k)];
                    if v != zero {
                        add(layout.offsets[pq] + i + l * rows_c, -v * pi);
                    }
                }
                let kd = loss[d].as_ref().unwrap();
                for j in 0..partition.size(d) {
                    let v = kd[(l, j)];
                    if v != zero {
                        add(layout.offsets[pq] + k + j * rows_c, -v * pi);
                    }
                }
                for f in &forward[pq] {
                    let (a, b) = layout.pairs[f.to_pair];
                    let (la, rb) = (&dressed_jumps[f.left], &dressed_jumps[f.right]);
                    let rows_a = partition.size(a);
                    for j in 0..partition.size(b) {
                        let rv = rb[(j, l)].conj();
                        if rv == zero {
                            continue;
                        }
                        for i in 0..rows_a {
                            let lv = la[(i, k)];
                            if lv != zero {
                                add(layout.offsets[f.to_pair] + i + j * rows_a, lv * rv * TWO_PI);
                            }
                        }
                    }
                }
            }
            Cluster {
                modes,
                center,
                generator: gen,
            }
        })
        .collect();
    log::debug!(
        "secular propagator: {} modes in {} clusters, largest {}",
        n_modes,
        clusters.len(),
        clusters.iter().map(|c| c.modes.len()).max().unwrap_or(0)
    );

    // Initial state in the dressed basis, scattered into cluster vectors.
    let mut dressed = vec![zero; n_modes];
    for (p, &(a, b)) in layout.pairs.iter().enumerate() {
        let rho = layout.block(&start.data, p, partition);
        let x = vecs(a).adjoint() * rho * vecs(b);
        dressed[layout.offsets[p]..layout.offsets[p + 1]].copy_from_slice(x.as_slice());
    }
    let mut amps: Vec<Vec<C64>> = clusters
        .iter()
        .map(|c| c.modes.iter().map(|&m| dressed[m]).collect())
        .collect();

    let steps: Vec<f64> = times
        .iter()
        .scan(0.0, |prev, &t| {
            let dt = t - *prev;
            *prev = t;
            Some(dt)
        })
        .collect();
    let distinct: Vec<u64> = {
        let mut d: Vec<u64> = steps.iter().filter(|&&dt| dt > 0.0).map(|dt| dt.to_bits()).collect();
        d.sort_unstable();
        d.dedup();
        d
    };
    let steppers: Vec<Step> = clusters
        .iter()
        .map(|c| {
            let s = c.modes.len();
            let dense = s <= 48 || (distinct.len() <= 3 && steps.len() * 4 >= s);
            if dense {
                Step::Dense(
                    distinct
                        .iter()
                        .map(|&bits| (bits, (&c.generator * C64::new(f64::from_bits(bits), 0.0)).exp()))
                        .collect(),
                )
            } else {
                Step::Krylov
            }
        })
        .collect();
    let one_norm = |m: &DMatrix<C64>| {
        m.column_iter()
            .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    };
    let mut krylovs: Vec<Option<Krylov<_>>> = clusters
        .iter()
        .zip(&steppers)
        .map(|(c, st)| match st {
            Step::Krylov => {
                let gen = &c.generator;
                let s = c.modes.len();
                Some(Krylov::new(
                    s,
                    move |x: &[C64], y: &mut [C64]| {
                        let xv = DVectorView::from_slice(x, s);
                        let mut yv = DVectorViewMut::from_slice(y, s);
                        yv.gemv(one, gen, &xv, zero);
                    },
                    one_norm(gen),
                    *krylov,
                ))
            }
            Step::Dense(_) => None,
        })
        .collect();

    let mut state = start;
    let mut t_now = 0.0;
    let mut scratch = vec![zero; 0];
    for (&t, &dt) in times.iter().zip(&steps) {
        if dt > 0.0 {
            for (ci, stepper) in steppers.iter().enumerate() {
                match stepper {
                    Step::Dense(props) => {
                        let prop = &props[&dt.to_bits()];
                        let s = amps[ci].len();
                        scratch.resize(s, zero);
                        {
                            let xv = DVectorView::from_slice(&amps[ci], s);
                            let mut yv = DVectorViewMut::from_slice(&mut scratch, s);
                            yv.gemv(one, prop, &xv, zero);
                        }
                        amps[ci].copy_from_slice(&scratch);
                    }
                    Step::Krylov => {
                        krylovs[ci]
                            .as_mut()
                            .unwrap()
                            .advance(&mut amps[ci], dt, t_now)?;
                    }
                }
            }
        }
        t_now = t;
        // Back to the bare basis.
        for (ci, c) in clusters.iter().enumerate() {
            let phase = C64::from_polar(1.0, -TWO_PI * c.center * t);
            for (k, &m) in c.modes.iter().enumerate() {
                dressed[m] = amps[ci][k] * phase;
            }
        }
        for (p, &(a, b)) in layout.pairs.iter().enumerate() {
            let (ra, cb) = (partition.size(a), partition.size(b));
            let (lo, hi) = (layout.offsets[p], layout.offsets[p + 1]);
            let x = DMatrixView::from_slice(&dressed[lo..hi], ra, cb);
            let tmp = vecs(a) * x;
            let mut out = DMatrixViewMut::from_slice(&mut state.data[lo..hi], ra, cb);
            out.gemm(one, &tmp, &vecs(b).adjoint(), zero);
        }
        observe(&state, t);
    }
    Ok(state)
}
