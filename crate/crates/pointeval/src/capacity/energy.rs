//! Discrete q-Dirichlet energy on uniform grids.
//!
//! The energy of a node field u is
//!
//! ```text
//!   E_q(u) = sum over cells |G(u)|^q * h^n
//! ```
//!
//! where `G(u)` is the cell-centered gradient: along each axis, the average of
//! the 2^{n-1} one-sided corner differences of that cell. `G` is linear in u,
//! so the energy is exactly q-homogeneous. The smoothed variant replaces
//! `|G|^q` by `(|G|^2 + delta^2)^{q/2}` to keep the integrand differentiable
//! at zero gradient for q < 2.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};

/// Cells per parallel work block in the fused energy/flux pass.
const ROW_BLOCK: usize = 64;

/// Precomputed cell/corner addressing for one grid.
pub(crate) struct CellTables {
    pub dim: usize,
    pub ncorners: usize,
    pub corner_offsets: Vec<usize>,
    pub cell_shape: Vec<usize>,
    pub node_strides: Vec<usize>,
    pub rows: usize,
    pub row_len: usize,
    pub ncells: usize,
    /// 1 / 2^{dim-1}: corner differences averaged per axis.
    pub inv_pair: f64,
}

impl CellTables {
    pub fn new(grid: &Grid) -> CellTables {
        let dim = grid.dim();
        let node_strides = grid.strides();
        let ncorners = 1usize << dim;
        let corner_offsets: Vec<usize> = (0..ncorners)
            .map(|c| {
                (0..dim)
                    .filter(|a| c >> a & 1 == 1)
                    .map(|a| node_strides[a])
                    .sum()
            })
            .collect();
        let cell_shape = grid.cell_shape();
        let row_len = cell_shape[dim - 1];
        let ncells = cell_shape.iter().product();
        CellTables {
            dim,
            ncorners,
            corner_offsets,
            cell_shape,
            node_strides,
            rows: ncells / row_len,
            row_len,
            ncells,
            inv_pair: 1.0 / (1usize << (dim - 1)) as f64,
        }
    }

    /// Node index of the low corner of the first cell in row `r`.
    fn row_base(&self, r: usize) -> usize {
        let mut rem = r;
        let mut base = 0usize;
        for a in (0..self.dim - 1).rev() {
            base += (rem % self.cell_shape[a]) * self.node_strides[a];
            rem /= self.cell_shape[a];
        }
        base
    }
}

#[inline]
fn pow_q_half(s: f64, q: f64) -> f64 {
    // s^{q/2} with fast paths for the exponents the solver actually uses
    if q == 2.0 {
        s
    } else if q == 1.5 {
        let r = s.sqrt();
        r * r.sqrt()
    } else {
        s.powf(0.5 * q)
    }
}

/// Smoothed energy; when `flux` is nonempty it is filled with the per-cell
/// vector `q (|G|^2 + delta^2)^{q/2-1} G`, the cell factor of the energy
/// gradient. Deterministic for any thread count.
pub(crate) fn energy_flux(
    u: &[f64],
    t: &CellTables,
    h: f64,
    q: f64,
    delta: f64,
    flux: Option<&mut [f64]>,
) -> f64 {
    match t.dim {
        2 => energy_flux_impl::<2>(u, t, h, q, delta, flux),
        3 => energy_flux_impl::<3>(u, t, h, q, delta, flux),
        4 => energy_flux_impl::<4>(u, t, h, q, delta, flux),
        _ => panic!("cell energies support ambient dimensions 2..=4"),
    }
}

fn energy_flux_impl<const DIM: usize>(
    u: &[f64],
    t: &CellTables,
    h: f64,
    q: f64,
    delta: f64,
    mut flux: Option<&mut [f64]>,
) -> f64 {
    let hn = h.powi(DIM as i32);
    let scale = t.inv_pair / h;
    let d2 = delta * delta;
    let nblocks = t.rows.div_ceil(ROW_BLOCK);
    let mut offsets = [0usize; 16];
    offsets[..t.ncorners].copy_from_slice(&t.corner_offsets);

    let run_block = |b: usize, flux_chunk: Option<&mut [f64]>| -> f64 {
        let ncorners = 1usize << DIM;
        let r0 = b * ROW_BLOCK;
        let r1 = ((b + 1) * ROW_BLOCK).min(t.rows);
        let mut acc = 0.0;
        let mut corners = [0.0f64; 16];
        let mut g = [0.0f64; DIM];
        let mut out_pos = 0usize;
        let mut fl = flux_chunk;
        for r in r0..r1 {
            let base = t.row_base(r);
            for k in 0..t.row_len {
                let node = base + k;
                for c in 0..ncorners {
                    corners[c] = u[node + offsets[c]];
                }
                let mut s = d2;
                for a in 0..DIM {
                    let mut diff = 0.0;
                    for (c, v) in corners[..ncorners].iter().enumerate() {
                        if c >> a & 1 == 1 {
                            diff += v;
                        } else {
                            diff -= v;
                        }
                    }
                    let ga = diff * scale;
                    g[a] = ga;
                    s += ga * ga;
                }
                let w = pow_q_half(s, q);
                acc += w;
                if let Some(chunk) = fl.as_deref_mut() {
                    let fac = if s > 0.0 { q * w / s } else { 0.0 };
                    for &ga in &g {
                        chunk[out_pos] = fac * ga;
                        out_pos += 1;
                    }
                }
            }
        }
        acc * hn
    };

    let partials: Vec<f64> = match flux.as_deref_mut() {
        Some(buf) => buf
            .par_chunks_mut(ROW_BLOCK * t.row_len * DIM)
            .enumerate()
            .map(|(b, chunk)| run_block(b, Some(chunk)))
            .collect(),
        None => (0..nblocks).into_par_iter().map(|b| run_block(b, None)).collect(),
    };
    partials.iter().sum()
}

/// Adjoint of the cell-gradient map: accumulates the per-cell flux into the
/// energy gradient with respect to node values.
pub(crate) fn gather_gradient(flux: &[f64], t: &CellTables, grid: &Grid, h: f64, out: &mut [f64]) {
    match t.dim {
        2 => gather_gradient_impl::<2>(flux, t, grid, h, out),
        3 => gather_gradient_impl::<3>(flux, t, grid, h, out),
        4 => gather_gradient_impl::<4>(flux, t, grid, h, out),
        _ => panic!("cell energies support ambient dimensions 2..=4"),
    }
}

fn gather_gradient_impl<const DIM: usize>(
    flux: &[f64],
    t: &CellTables,
    grid: &Grid,
    h: f64,
    out: &mut [f64],
) {
    // d/du of sum w(G) h^n: each corner sees inv_pair/h per axis, times h^n
    let scale = h.powi(DIM as i32) * t.inv_pair / h;
    let mut shape = [0usize; DIM];
    shape.copy_from_slice(grid.shape());
    let mut cell_shape = [0usize; DIM];
    cell_shape.copy_from_slice(&t.cell_shape);
    let mut cell_strides = [1usize; DIM];
    for a in (0..DIM - 1).rev() {
        cell_strides[a] = cell_strides[a + 1] * cell_shape[a + 1];
    }
    out.par_chunks_mut(4096).enumerate().for_each(|(b, chunk)| {
        let ncorners = 1usize << DIM;
        let mut multi_v = vec![0usize; DIM];
        grid.multi_index(b * 4096, &mut multi_v);
        let mut multi = [0usize; DIM];
        multi.copy_from_slice(&multi_v);
        for (k, slot) in chunk.iter_mut().enumerate() {
            if k > 0 {
                for a in (0..DIM).rev() {
                    multi[a] += 1;
                    if multi[a] < shape[a] {
                        break;
                    }
                    multi[a] = 0;
                }
            }
            let mut acc = 0.0;
            'corner: for c in 0..ncorners {
                let mut cell = 0usize;
                for a in 0..DIM {
                    let bit = (c >> a) & 1;
                    // the node is corner `c` of the cell at multi - bit
                    let Some(ca) = multi[a].checked_sub(bit) else {
                        continue 'corner;
                    };
                    if ca >= cell_shape[a] {
                        continue 'corner;
                    }
                    cell += ca * cell_strides[a];
                }
                let f = &flux[cell * DIM..cell * DIM + DIM];
                for a in 0..DIM {
                    if c >> a & 1 == 1 {
                        acc += f[a];
                    } else {
                        acc -= f[a];
                    }
                }
            }
            *slot = acc * scale;
        }
    });
}

/// One Jacobi relaxation sweep: each node becomes the mean of its 2n axis
/// neighbors (missing neighbors count as zero).
pub(crate) fn jacobi_sweep(u: &[f64], grid: &Grid, out: &mut [f64]) {
    let dim = grid.dim();
    let shape = grid.shape().to_vec();
    let strides = grid.strides();
    let inv = 1.0 / (2 * dim) as f64;
    out.par_chunks_mut(4096).enumerate().for_each(|(b, chunk)| {
        let mut multi = vec![0usize; dim];
        grid.multi_index(b * 4096, &mut multi);
        let mut idx = b * 4096;
        for (k, slot) in chunk.iter_mut().enumerate() {
            if k > 0 {
                idx += 1;
                for a in (0..dim).rev() {
                    multi[a] += 1;
                    if multi[a] < shape[a] {
                        break;
                    }
                    multi[a] = 0;
                }
            }
            let mut acc = 0.0;
            for a in 0..dim {
                if multi[a] > 0 {
                    acc += u[idx - strides[a]];
                }
                if multi[a] + 1 < shape[a] {
                    acc += u[idx + strides[a]];
                }
            }
            *slot = acc * inv;
        }
    });
}

fn check_exponent(q: f64, dim: usize) -> Result<()> {
    if !(q > 1.0 && q < dim as f64) || !q.is_finite() {
        return Err(Error::ExponentRange { q, lo: 1.0, hi: dim as f64 });
    }
    Ok(())
}

/// The discrete q-Dirichlet energy of a field whose grid has ambient
/// dimension 2d, for 1 < q < 2d.
pub fn q_energy(u: &ScalarField, q: f64) -> Result<f64> {
    check_exponent(q, u.grid().dim())?;
    Ok(raw_energy(u, q))
}

/// Same sum without the exponent-range contract; used by the cutoff
/// diagnostics which evaluate gradient integrands at exponent 2d.
pub(crate) fn raw_energy(u: &ScalarField, exponent: f64) -> f64 {
    let t = CellTables::new(u.grid());
    energy_flux(u.values(), &t, u.grid().spacing(), exponent, 0.0, None)
}

/// Per-cell visitor: cell gradient components and mean corner values of two
/// fields on one grid. Sequential; used by diagnostics, not the solver.
pub(crate) fn for_each_cell_pair(
    a: &ScalarField,
    b: &ScalarField,
    mut visit: impl FnMut(&[f64], f64, &[f64], f64),
) {
    let grid = a.grid();
    let t = CellTables::new(grid);
    let h = grid.spacing();
    let scale = t.inv_pair / h;
    let mean = 1.0 / t.ncorners as f64;
    let mut ga = [0.0f64; 4];
    let mut gb = [0.0f64; 4];
    for r in 0..t.rows {
        let base = t.row_base(r);
        for k in 0..t.row_len {
            let node = base + k;
            let mut mean_a = 0.0;
            let mut mean_b = 0.0;
            for axis in 0..t.dim {
                ga[axis] = 0.0;
                gb[axis] = 0.0;
            }
            for (c, &off) in t.corner_offsets.iter().enumerate() {
                let va = a.values()[node + off];
                let vb = b.values()[node + off];
                mean_a += va;
                mean_b += vb;
                for axis in 0..t.dim {
                    let sign = if c >> axis & 1 == 1 { 1.0 } else { -1.0 };
                    ga[axis] += sign * va;
                    gb[axis] += sign * vb;
                }
            }
            for axis in 0..t.dim {
                ga[axis] *= scale;
                gb[axis] *= scale;
            }
            visit(&ga[..t.dim], mean_a * mean, &gb[..t.dim], mean_b * mean);
        }
    }
}
