//! Distributed vectors and matrix-free Krylov solvers.
//!
//! Vectors are chunked per rank. Every inner product is reduced through
//! [`comm::PlaneLayout`] slots so iteration histories, and therefore solutions,
//! are bitwise independent of the rank count.

use crate::comm::PlaneLayout;
use crate::{Error, Result};
use rayon::prelude::*;

/// Rank-chunked vector with a per-element reduction slot.
#[derive(Debug, Clone)]
pub struct DistVec {
    pub chunks: Vec<Vec<f64>>,
}

/// Shared layout: per-element plane slots, one array per rank chunk.
#[derive(Debug, Clone)]
pub struct VecLayout {
    pub slots: Vec<Vec<u32>>,
    pub planes: PlaneLayout,
}

impl DistVec {
    pub fn zeros_like(layout: &VecLayout) -> Self {
        DistVec { chunks: layout.slots.iter().map(|s| vec![0.0; s.len()]).collect() }
    }

    pub fn len(&self) -> usize {
        self.chunks.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn fill(&mut self, v: f64) {
        for c in &mut self.chunks {
            c.fill(v);
        }
    }

    pub fn copy_from(&mut self, other: &DistVec) {
        for (a, b) in self.chunks.iter_mut().zip(&other.chunks) {
            a.copy_from_slice(b);
        }
    }

    pub fn axpy(&mut self, alpha: f64, x: &DistVec) {
        self.chunks.par_iter_mut().zip(x.chunks.par_iter()).for_each(|(a, b)| {
            for (ai, bi) in a.iter_mut().zip(b) {
                *ai += alpha * bi;
            }
        });
    }

    /// self = x + alpha * self (used by CG direction updates).
    pub fn xpay(&mut self, x: &DistVec, alpha: f64) {
        self.chunks.par_iter_mut().zip(x.chunks.par_iter()).for_each(|(a, b)| {
            for (ai, bi) in a.iter_mut().zip(b) {
                *ai = bi + alpha * *ai;
            }
        });
    }

    pub fn scale(&mut self, alpha: f64) {
        for c in &mut self.chunks {
            for v in c.iter_mut() {
                *v *= alpha;
            }
        }
    }
}

impl VecLayout {
    /// Deterministic inner product: per-plane partials summed in plane order.
    pub fn dot(&self, x: &DistVec, y: &DistVec, scratch: &mut Vec<f64>) -> f64 {
        let partials: Vec<Vec<(u32, f64)>> = self
            .slots
            .par_iter()
            .zip(x.chunks.par_iter().zip(y.chunks.par_iter()))
            .map(|(slots, (xc, yc))| {
                let mut acc: Vec<(u32, f64)> = Vec::new();
                let mut last = u32::MAX;
                for ((&s, &a), &b) in slots.iter().zip(xc).zip(yc) {
                    let v = a * b;
                    if s == last {
                        acc.last_mut().unwrap().1 += v;
                    } else {
                        acc.push((s, v));
                        last = s;
                    }
                }
                acc
            })
            .collect();
        self.planes.reduce(&partials, scratch)
    }

    pub fn norm2(&self, x: &DistVec, scratch: &mut Vec<f64>) -> f64 {
        self.dot(x, x, scratch).max(0.0).sqrt()
    }
}

/// Preconditioned conjugate gradients with closures for the operator and the
/// (symmetric) preconditioner. Returns the iteration count.
#[allow(clippy::too_many_arguments)]
pub fn pcg(
    layout: &VecLayout,
    mut apply: impl FnMut(&DistVec, &mut DistVec),
    mut precon: impl FnMut(&DistVec, &mut DistVec),
    b: &DistVec,
    x: &mut DistVec,
    abs_tol: f64,
    rel_tol: f64,
    max_iter: usize,
) -> Result<usize> {
    let mut scratch = Vec::new();
    let mut r = DistVec::zeros_like(layout);
    let mut z = DistVec::zeros_like(layout);
    let mut p = DistVec::zeros_like(layout);
    let mut ap = DistVec::zeros_like(layout);

    apply(x, &mut ap);
    r.copy_from(b);
    r.axpy(-1.0, &ap);
    let r0 = layout.norm2(&r, &mut scratch);
    let target = (rel_tol * r0).max(abs_tol);
    if r0 <= target {
        return Ok(0);
    }
    precon(&r, &mut z);
    p.copy_from(&z);
    let mut rz = layout.dot(&r, &z, &mut scratch);
    for it in 1..=max_iter {
        apply(&p, &mut ap);
        let pap = layout.dot(&p, &ap, &mut scratch);
        if pap.abs() < 1e-300 {
            return Err(Error::LinearSolverStall(format!("pAp = {pap} at iteration {it}")));
        }
        let alpha = rz / pap;
        x.axpy(alpha, &p);
        r.axpy(-alpha, &ap);
        let rn = layout.norm2(&r, &mut scratch);
        if rn <= target {
            return Ok(it);
        }
        precon(&r, &mut z);
        let rz_new = layout.dot(&r, &z, &mut scratch);
        let beta = rz_new / rz;
        rz = rz_new;
        p.xpay(&z, beta);
    }
    Err(Error::LinearSolverStall(format!(
        "PCG did not reach {target:.3e} in {max_iter} iterations"
    )))
}

/// Restarted GMRES(m), right-preconditioned. Returns total iterations.
#[allow(clippy::too_many_arguments)]
pub fn gmres(
    layout: &VecLayout,
    mut apply: impl FnMut(&DistVec, &mut DistVec),
    mut precon: impl FnMut(&DistVec, &mut DistVec),
    b: &DistVec,
    x: &mut DistVec,
    abs_tol: f64,
    rel_tol: f64,
    restart: usize,
    max_iter: usize,
) -> Result<usize> {
    let mut scratch = Vec::new();
    let mut total = 0;
    let mut w = DistVec::zeros_like(layout);
    let mut mz = DistVec::zeros_like(layout);

    let mut r = DistVec::zeros_like(layout);
    apply(x, &mut w);
    r.copy_from(b);
    r.axpy(-1.0, &w);
    let r0 = layout.norm2(&r, &mut scratch);
    let target = (rel_tol * r0).max(abs_tol);
    if r0 <= target {
        return Ok(0);
    }
    let mut beta = r0;

    loop {
        let m = restart;
        let mut basis: Vec<DistVec> = Vec::with_capacity(m + 1);
        let mut h = vec![vec![0.0f64; m]; m + 1];
        let mut cs = vec![0.0f64; m];
        let mut sn = vec![0.0f64; m];
        let mut g = vec![0.0f64; m + 1];
        g[0] = beta;
        let mut v0 = DistVec::zeros_like(layout);
        v0.copy_from(&r);
        v0.scale(1.0 / beta);
        basis.push(v0);

        let mut k_used = 0;
        for k in 0..m {
            precon(&basis[k], &mut mz);
            apply(&mz, &mut w);
            // modified Gram-Schmidt
            for i in 0..=k {
                let hik = layout.dot(&w, &basis[i], &mut scratch);
                h[i][k] = hik;
                w.axpy(-hik, &basis[i]);
            }
            let hkk = layout.norm2(&w, &mut scratch);
            h[k + 1][k] = hkk;
            // Givens rotations
            for i in 0..k {
                let t = cs[i] * h[i][k] + sn[i] * h[i + 1][k];
                h[i + 1][k] = -sn[i] * h[i][k] + cs[i] * h[i + 1][k];
                h[i][k] = t;
            }
            let denom = (h[k][k] * h[k][k] + hkk * hkk).sqrt();
            if denom < 1e-300 {
                k_used = k;
                break;
            }
            cs[k] = h[k][k] / denom;
            sn[k] = hkk / denom;
            h[k][k] = denom;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            total += 1;
            k_used = k + 1;
            let res = g[k + 1].abs();
            if res <= target || hkk < 1e-300 {
                break;
            }
            let mut vk = DistVec::zeros_like(layout);
            vk.copy_from(&w);
            vk.scale(1.0 / hkk);
            basis.push(vk);
            if total >= max_iter {
                break;
            }
        }

        // back substitution
        let mut y = vec![0.0f64; k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for j in i + 1..k_used {
                s -= h[i][j] * y[j];
            }
            y[i] = s / h[i][i];
        }
        // x += M^-1 (V y)
        let mut update = DistVec::zeros_like(layout);
        for (i, &yi) in y.iter().enumerate() {
            update.axpy(yi, &basis[i]);
        }
        precon(&update, &mut mz);
        x.axpy(1.0, &mz);

        apply(x, &mut w);
        r.copy_from(b);
        r.axpy(-1.0, &w);
        beta = layout.norm2(&r, &mut scratch);
        if beta <= target {
            return Ok(total);
        }
        if total >= max_iter {
            return Err(Error::LinearSolverStall(format!(
                "GMRES at residual {beta:.3e}, target {target:.3e}, after {total} iterations"
            )));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_layout(n: usize) -> VecLayout {
        // one rank, every element its own plane
        VecLayout {
            slots: vec![(0..n as u32).collect()],
            planes: PlaneLayout::new(&[n]),
        }
    }

    fn apply_dense(a: &[Vec<f64>]) -> impl FnMut(&DistVec, &mut DistVec) + '_ {
        move |x, y| {
            let xc = &x.chunks[0];
            let yc = &mut y.chunks[0];
            for (i, row) in a.iter().enumerate() {
                yc[i] = row.iter().zip(xc).map(|(aij, xj)| aij * xj).sum();
            }
        }
    }

    fn spd_system(n: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
        // 1D Laplacian plus identity, rhs of ones
        let mut a = vec![vec![0.0; n]; n];
        for i in 0..n {
            a[i][i] = 3.0;
            if i > 0 {
                a[i][i - 1] = -1.0;
            }
            if i + 1 < n {
                a[i][i + 1] = -1.0;
            }
        }
        (a, vec![1.0; n])
    }

    #[test]
    fn pcg_solves_spd() {
        let n = 40;
        let (a, b) = spd_system(n);
        let layout = dense_layout(n);
        let bvec = DistVec { chunks: vec![b.clone()] };
        let mut x = DistVec::zeros_like(&layout);
        pcg(&layout, apply_dense(&a), |r, z| z.copy_from(r), &bvec, &mut x, 1e-12, 0.0, 500)
            .unwrap();
        // residual check
        let mut r = vec![0.0; n];
        for i in 0..n {
            r[i] = b[i] - a[i].iter().zip(&x.chunks[0]).map(|(v, xj)| v * xj).sum::<f64>();
        }
        let rn: f64 = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(rn < 1e-11, "residual {rn}");
    }

    #[test]
    fn gmres_solves_nonsymmetric() {
        let n = 40;
        let (mut a, b) = spd_system(n);
        for i in 0..n - 1 {
            a[i][i + 1] = -1.4; // break symmetry
        }
        let layout = dense_layout(n);
        let bvec = DistVec { chunks: vec![b.clone()] };
        let mut x = DistVec::zeros_like(&layout);
        gmres(&layout, apply_dense(&a), |r, z| z.copy_from(r), &bvec, &mut x, 1e-12, 0.0, 20, 500)
            .unwrap();
        let mut rn = 0.0;
        for i in 0..n {
            let ri = b[i] - a[i].iter().zip(&x.chunks[0]).map(|(v, xj)| v * xj).sum::<f64>();
            rn += ri * ri;
        }
        assert!(rn.sqrt() < 1e-11, "residual {}", rn.sqrt());
    }
}
