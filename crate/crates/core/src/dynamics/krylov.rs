//! Adaptive Krylov evaluation of `exp(t A) v` with a posteriori error
//! control (Arnoldi with an augmented Hessenberg exponential).

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qspace::C64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KrylovOptions {
    /// Krylov subspace dimension.
    pub dim: usize,
    /// Local error tolerance per microsecond of propagated time, relative
    /// to the norm of the initial vector.
    pub tol: f64,
    pub max_steps: usize,
    pub max_rejections: usize,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        KrylovOptions {
            dim: 30,
            tol: 1e-10,
            max_steps: 2_000_000,
            max_rejections: 20,
        }
    }
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn round_step(t: f64) -> f64 {
    let s = 10f64.powf(t.log10().floor() - 1.0);
    (t / s).ceil() * s
}

/// Propagator state carried between successive calls so the step-size
/// estimate survives across output times.
pub struct Krylov<F> {
    apply: F,
    n: usize,
    opts: KrylovOptions,
    norm_estimate: f64,
    next_step: Option<f64>,
    basis: Vec<Vec<C64>>,
    pub steps: usize,
    pub matvecs: usize,
}

impl<F: FnMut(&[C64], &mut [C64])> Krylov<F> {
    /// `apply(x, y)` must overwrite `y` with `A x`.
    pub fn new(n: usize, apply: F, norm_estimate: f64, opts: KrylovOptions) -> Self {
        let m = opts.dim.min(n).max(1);
        Krylov {
            apply,
            n,
            opts: KrylovOptions { dim: m, ..opts },
            norm_estimate: norm_estimate.max(f64::MIN_POSITIVE),
            next_step: None,
            basis: vec![vec![C64::new(0.0, 0.0); n]; m + 1],
            steps: 0,
            matvecs: 0,
        }
    }

    /// Advances `w` in place by `exp(t A)`. `t0` only labels errors.
    pub fn advance(&mut self, w: &mut [C64], t: f64, t0: f64) -> Result<()> {
        assert_eq!(w.len(), self.n);
        if t == 0.0 {
            return Ok(());
        }
        let m = self.opts.dim;
        let tol = self.opts.tol;
        let (gamma, delta) = (0.9, 1.2);
        let anorm = self.norm_estimate;
        let mut beta = norm(w);
        if beta == 0.0 {
            return Ok(());
        }
        let tol_abs = tol * beta;
        let mut t_now = 0.0;
        let mut t_new = match self.next_step {
            Some(s) => s,
            None => {
                let mf = (m + 1) as f64;
                let fact = (mf / std::f64::consts::E).powf(mf)
                    * (2.0 * std::f64::consts::PI * mf).sqrt();
                round_step((1.0 / anorm) * ((fact * tol) / (4.0 * anorm)).powf(1.0 / m as f64))
            }
        };
        let mut p = vec![C64::new(0.0, 0.0); self.n];
        while t_now < t {
            self.steps += 1;
            if self.steps > self.opts.max_steps {
                return Err(Error::Propagation {
                    time: t0 + t_now,
                    reason: "Krylov step budget exhausted".into(),
                });
            }
            let mut t_step = (t - t_now).min(t_new);
            for (b, x) in self.basis[0].iter_mut().zip(w.iter()) {
                *b = *x / beta;
            }
            let mut h = DMatrix::<C64>::zeros(m + 2, m + 2);
            let mut mb = m;
            let mut happy = false;
            for j in 0..m {
                (self.apply)(&self.basis[j], &mut p);
                self.matvecs += 1;
                for i in 0..=j {
                    let hij = dot(&self.basis[i], &p);
                    h[(i, j)] = hij;
                    for (pk, bk) in p.iter_mut().zip(&self.basis[i]) {
                        *pk -= hij * bk;
                    }
                }
                let s = norm(&p);
                if s * (t - t_now) <= 1e-3 * tol {
                    happy = true;
                    mb = j + 1;
                    t_step = t - t_now;
                    break;
                }
                h[(j + 1, j)] = C64::new(s, 0.0);
                for (b, x) in self.basis[j + 1].iter_mut().zip(&p) {
                    *b = *x / s;
                }
            }
            let mut avnorm = 0.0;
            if !happy {
                h[(m + 1, m)] = C64::new(1.0, 0.0);
                (self.apply)(&self.basis[m], &mut p);
                self.matvecs += 1;
                avnorm = norm(&p);
            }
            let mut rejections = 0;
            let mut xm = 1.0 / m as f64;
            let (f, err_loc) = loop {
                let mx = if happy { mb } else { m + 2 };
                let sub = h.view((0, 0), (mx, mx)).scale(t_step).into_owned();
                let f = sub.exp();
                if happy {
                    break (f, 0.0);
                }
                let phi1 = (beta * f[(m, 0)]).norm();
                let phi2 = (beta * f[(m + 1, 0)] * avnorm).norm();
                let err = if phi1 > 10.0 * phi2 {
                    xm = 1.0 / m as f64;
                    phi2
                } else if phi1 > phi2 {
                    xm = 1.0 / m as f64;
                    phi1 * phi2 / (phi1 - phi2)
                } else {
                    xm = 1.0 / (m as f64 - 1.0).max(1.0);
                    phi1
                };
                if err <= delta * t_step * tol_abs {
                    break (f, err);
                }
                rejections += 1;
                if rejections > self.opts.max_rejections {
                    return Err(Error::Propagation {
                        time: t0 + t_now,
                        reason: format!("Krylov step rejected {rejections} times (error {err:e})"),
                    });
                }
                t_step = round_step(gamma * t_step * (t_step * tol_abs / err).powf(xm));
                if !(t_step > 0.0) || t_step < 1e-14 * t.max(1.0) {
                    return Err(Error::Propagation {
                        time: t0 + t_now,
                        reason: "Krylov step size underflow".into(),
                    });
                }
            };
            let mx = if happy { mb } else { m + 1 };
            for x in w.iter_mut() {
                *x = C64::new(0.0, 0.0);
            }
            for k in 0..mx {
                let c = beta * f[(k, 0)];
                for (x, b) in w.iter_mut().zip(&self.basis[k]) {
                    *x += c * b;
                }
            }
            beta = norm(w);
            t_now += t_step;
            if !happy {
                let ratio = (t_step * tol_abs / err_loc.max(anorm * f64::EPSILON * beta)).powf(xm);
                t_new = round_step(gamma * t_step * ratio);
                self.next_step = Some(t_new);
            }
            if !beta.is_finite() {
                return Err(Error::Propagation {
                    time: t0 + t_now,
                    reason: "non-finite state".into(),
                });
            }
        }
        Ok(())
    }
}

/// One-shot `exp(t A) v`.
pub fn expv(
    t: f64,
    apply: impl FnMut(&[C64], &mut [C64]),
    norm_estimate: f64,
    v: &[C64],
    opts: KrylovOptions,
) -> Result<Vec<C64>> {
    let mut w = v.to_vec();
    let mut k = Krylov::new(v.len(), apply, norm_estimate, opts);
    k.advance(&mut w, t, 0.0)?;
    Ok(w)
}
