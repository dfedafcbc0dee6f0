//! Fourier–Duhamel solver on a periodic box.
//!
//! The box is periodic under the left translations `(2Lx k, 0, 0)` and
//! `(0, 2Ly m, 0)`; on that quotient the equation is solved exactly in the
//! sheared coordinate `X = x − (t − t_c) y`, where the transport term
//! disappears and each Fourier mode obeys
//! `∂t v̂ = −|η − (t − t_c) ξ|² v̂ + f̂_sh`. Its integrating factor is
//! explicit. Whenever `t − t_c` leaves `[−P/2, P/2]` with `P = Lx/Ly` the
//! shear centre advances by `P`, which on the lattice is an exact index
//! shift in `η`.

use super::source::Source;
use crate::discretization::io::write_field;
use crate::discretization::transform::{fft_axes, Direction};
use crate::discretization::{Field, Grid};
use crate::error::{invalid, Error, Result};
use crate::kernel::FRAC_ORDER;
use crate::quadrature::Rule;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Right-hand side of `Lu = f`.
#[derive(Clone, Copy)]
pub enum SourceTerm<'a> {
    Callable(&'a dyn Source),
    Sampled(&'a Field),
}

impl SourceTerm<'_> {
    pub fn d(&self) -> usize {
        match self {
            SourceTerm::Callable(s) => s.d(),
            SourceTerm::Sampled(f) => f.grid.d,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Spectral,
    Quadrature,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub steps: usize,
    pub remaps: usize,
    /// Share of source energy in the outer quarter of the frequency band.
    pub source_tail: f64,
    /// Same for the solution.
    pub solution_tail: f64,
    /// Strong-form residual, see [`residual_l`].
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub u: Field,
    pub lap_y_u: Field,
    pub frac_x_u: Field,
    /// `∂_{y_i} u` for each component, when requested.
    pub grad_y_u: Option<Vec<Field>>,
    /// The (periodised) source sampled on the grid.
    pub source: Field,
    pub method: Method,
    pub grid: Grid,
    pub diagnostics: Diagnostics,
}

impl Solution {
    /// Writes every field in the binary + JSON sidecar format.
    pub fn write(&self, dir: &Path) -> Result<()> {
        write_field(&self.u, dir, "u")?;
        write_field(&self.lap_y_u, dir, "lap_y_u")?;
        write_field(&self.frac_x_u, dir, "frac_x_u")?;
        write_field(&self.source, dir, "source")?;
        if let Some(g) = &self.grad_y_u {
            for (i, f) in g.iter().enumerate() {
                write_field(f, dir, &format!("grad_y{}_u", i + 1))?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralControls {
    /// Gauss–Legendre nodes per Duhamel step.
    pub gauss_nodes: usize,
    /// Largest tolerated share of energy in the outer quarter band.
    pub tail_tol: f64,
    pub grad_y: bool,
}

impl Default for SpectralControls {
    fn default() -> Self {
        Self { gauss_nodes: 6, tail_tol: 1e-5, grad_y: false }
    }
}

pub fn solve_spectral(f: SourceTerm, grid: &Grid) -> Result<Solution> {
    solve_spectral_with(f, grid, &SpectralControls::default())
}

pub fn solve_spectral_with(f: SourceTerm, grid: &Grid, controls: &SpectralControls) -> Result<Solution> {
    let (ya, ta) = match (grid.y, grid.t) {
        (Some(y), Some(t)) => (y, t),
        _ => return invalid("the spectral solver needs x, y and t axes"),
    };
    if !(grid.x.periodic && ya.periodic) || ta.periodic {
        return invalid("x and y must be periodic and t non-periodic");
    }
    if !(1..=2).contains(&grid.d) {
        return invalid("the spectral solver handles d = 1 and d = 2");
    }
    if f.d() != grid.d {
        return Err(Error::DimensionMismatch { expected: grid.d, got: f.d() });
    }
    if let SourceTerm::Sampled(field) = f {
        if field.grid != *grid {
            return invalid("sampled source lives on a different grid");
        }
    }
    if controls.gauss_nodes == 0 {
        return invalid("at least one quadrature node per step is required");
    }
    let ctx = Ctx::new(grid, f);
    let source = ctx.physical_source();
    let peak = source.max_abs();
    let first = source.t_slice(0).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if first > 1e-8 * peak {
        return invalid(format!(
            "source does not vanish at the start of the time window (|f| = {first:.2e} against max {peak:.2e})"
        ));
    }

    let nt = ta.n;
    let dt = ta.spacing();
    let substeps = match f {
        SourceTerm::Callable(s) => (dt / s.feature_scale().t).ceil().max(1.0) as usize,
        SourceTerm::Sampled(_) => 1,
    };
    let h = dt / substeps as f64;
    let rule = Rule::gauss_legendre(controls.gauss_nodes);
    let period = grid.x.half_length / ya.half_length;
    let s_len = grid.slice_len();
    let d = grid.d;

    let mut tc = (ta.node(0) / period).round() * period;
    let mut v = vec![Complex64::default(); s_len];
    let mut buf = vec![Complex64::default(); s_len];
    let mut tmp = vec![Complex64::default(); s_len];
    let mut outputs = Outputs::new(nt, s_len, d, controls.grad_y);
    let mut tails = Tails::default();
    let mut remaps = 0;
    let mut steps = 0;

    for n in 0..nt - 1 {
        let t0 = ta.node(n);
        for sub in 0..substeps {
            let a = t0 + sub as f64 * h;
            let b = a + h;
            while 0.5 * (a + b) - tc > 0.5 * period {
                ctx.modes.remap(&v, &mut tmp);
                std::mem::swap(&mut v, &mut tmp);
                tc += period;
                remaps += 1;
            }
            let (al, be) = (a - tc, b - tc);
            let m = &ctx.modes;
            v.par_iter_mut().enumerate().for_each(|(k, vk)| *vk *= (-m.phi(k, al, be)).exp());
            for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                let tau = a + 0.5 * (b - a) * (x + 1.0);
                let w = 0.5 * (b - a) * w;
                if ctx.coefficients(tau, tau - tc, &mut buf) {
                    tails.add(&ctx.modes, &buf);
                    let sg = tau - tc;
                    v.par_iter_mut()
                        .zip(&buf)
                        .enumerate()
                        .for_each(|(k, (vk, c))| *vk += w * (-m.phi(k, sg, be)).exp() * c);
                }
            }
            steps += 1;
        }
        let s = ta.node(n + 1) - tc;
        tails.add_solution(&ctx.modes, &v);
        outputs.store(&ctx, n + 1, &v, s);
    }

    let diag_tail = (tails.source(), tails.solution());
    if diag_tail.0.max(diag_tail.1) > controls.tail_tol {
        return Err(Error::Underresolved {
            reason: format!(
                "spectral tail share {:.2e} (source) / {:.2e} (solution) exceeds {:.1e}",
                diag_tail.0, diag_tail.1, controls.tail_tol
            ),
            suggested_n: 2 * ya.n.max(grid.x.n),
        });
    }

    let mk = |values: Vec<f64>| Field { grid: grid.clone(), values };
    let mut sol = Solution {
        u: mk(outputs.u),
        lap_y_u: mk(outputs.lap),
        frac_x_u: mk(outputs.frac),
        grad_y_u: outputs.grad.map(|g| g.into_iter().map(mk).collect()),
        source,
        method: Method::Spectral,
        grid: grid.clone(),
        diagnostics: Diagnostics { steps, remaps, source_tail: diag_tail.0, solution_tail: diag_tail.1, residual: 0.0 },
    };
    sol.diagnostics.residual = residual_l(&sol, &sol.source)?;
    Ok(sol)
}

#[derive(Default)]
struct Tails {
    src_outer: f64,
    src_total: f64,
    sol_outer: f64,
    sol_total: f64,
}

impl Tails {
    fn split(modes: &Modes, c: &[Complex64]) -> (f64, f64) {
        let mut outer = 0.0;
        let mut total = 0.0;
        for (k, v) in c.iter().enumerate() {
            let e = v.norm_sqr();
            total += e;
            if modes.outer[k] {
                outer += e;
            }
        }
        (outer, total)
    }
    fn add(&mut self, modes: &Modes, c: &[Complex64]) {
        let (o, t) = Self::split(modes, c);
        self.src_outer += o;
        self.src_total += t;
    }
    fn add_solution(&mut self, modes: &Modes, c: &[Complex64]) {
        let (o, t) = Self::split(modes, c);
        self.sol_outer += o;
        self.sol_total += t;
    }
    fn source(&self) -> f64 {
        if self.src_total > 0.0 {
            self.src_outer / self.src_total
        } else {
            0.0
        }
    }
    fn solution(&self) -> f64 {
        if self.sol_total > 0.0 {
            self.sol_outer / self.sol_total
        } else {
            0.0
        }
    }
}

struct Outputs {
    u: Vec<f64>,
    lap: Vec<f64>,
    frac: Vec<f64>,
    grad: Option<Vec<Vec<f64>>>,
    s_len: usize,
}

impl Outputs {
    fn new(nt: usize, s_len: usize, d: usize, grad: bool) -> Self {
        let z = || vec![0.0; nt * s_len];
        Self { u: z(), lap: z(), frac: z(), grad: grad.then(|| (0..d).map(|_| z()).collect()), s_len }
    }

    fn store(&mut self, ctx: &Ctx, n: usize, v: &[Complex64], s: f64) {
        let m = &ctx.modes;
        let range = n * self.s_len..(n + 1) * self.s_len;
        let put = |dst: &mut [f64], mult: &(dyn Fn(usize) -> Complex64 + Sync)| {
            let spec: Vec<Complex64> = v.par_iter().enumerate().map(|(k, c)| c * mult(k)).collect();
            dst.copy_from_slice(&ctx.to_physical(spec, s));
        };
        put(&mut self.u[range.clone()], &|_| Complex64::new(1.0, 0.0));
        put(&mut self.lap[range.clone()], &|k| Complex64::new(-m.sheared_eta_sq(k, s), 0.0));
        put(&mut self.frac[range.clone()], &|k| Complex64::new(m.a[k].powf(0.5 * FRAC_ORDER), 0.0));
        if let Some(g) = &mut self.grad {
            for (i, gi) in g.iter_mut().enumerate() {
                put(&mut gi[range.clone()], &|k| Complex64::new(0.0, m.eta_i(k, i) - s * m.xi_i(k, i)));
            }
        }
    }
}

/// Per-mode tables on the spatial lattice `[x_1..x_d, y_1..y_d]`.
pub(crate) struct Modes {
    d: usize,
    nx: usize,
    ny: usize,
    xi: Vec<f64>,
    eta: Vec<f64>,
    /// `|ξ|²`, `ξ·η`, `|η|²`.
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
    /// `(−1)^{Σm + Σl}`, zero on Nyquist modes.
    sign: Vec<f64>,
    outer: Vec<bool>,
    remap_from: Vec<Option<(usize, f64)>>,
}

impl Modes {
    pub(crate) fn new(grid: &Grid) -> Self {
        let ya = grid.y.expect("y axis");
        let (d, nx, ny) = (grid.d, grid.x.n, ya.n);
        let xi = grid.x.frequencies();
        let eta = ya.frequencies();
        let xb = grid.x_block();
        let len = grid.slice_len();
        let (mut a, mut b, mut c) = (vec![0.0; len], vec![0.0; len], vec![0.0; len]);
        let mut sign = vec![0.0; len];
        let mut outer = vec![false; len];
        let mut remap_from = vec![None; len];
        let mut mi = vec![0usize; d];
        let mut li = vec![0usize; d];
        for k in 0..len {
            Grid::unflatten(k % xb, nx, &mut mi);
            Grid::unflatten(k / xb, ny, &mut li);
            let mut nyquist = false;
            let mut parity = 0i64;
            let mut src = 0usize;
            let mut ok = true;
            let mut m_sum = 0i64;
            for i in 0..d {
                let ms = grid.x.mode(mi[i]);
                let ls = ya.mode(li[i]);
                a[k] += xi[mi[i]] * xi[mi[i]];
                b[k] += xi[mi[i]] * eta[li[i]];
                c[k] += eta[li[i]] * eta[li[i]];
                nyquist |= mi[i] == nx / 2 || li[i] == ny / 2;
                parity += ms + ls;
                m_sum += ms;
                outer[k] |= 8 * ms.unsigned_abs() as usize > 3 * nx || 8 * ls.unsigned_abs() as usize > 3 * ny;
                let shifted = ls + ms;
                if 2 * shifted.unsigned_abs() as usize >= ny {
                    ok = false;
                }
                let l_src = shifted.rem_euclid(ny as i64) as usize;
                src += l_src * ny.pow(i as u32);
            }
            sign[k] = if nyquist {
                0.0
            } else if parity.rem_euclid(2) == 0 {
                1.0
            } else {
                -1.0
            };
            if ok && !nyquist {
                let sg = if m_sum.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                remap_from[k] = Some((k % xb + xb * src, sg));
            }
        }
        Self { d, nx, ny, xi, eta, a, b, c, sign, outer, remap_from }
    }

    /// `∫_α^β |η − sξ|² ds`.
    #[inline]
    fn phi(&self, k: usize, al: f64, be: f64) -> f64 {
        self.c[k] * (be - al) - self.b[k] * (be * be - al * al) + self.a[k] * (be * be * be - al * al * al) / 3.0
    }

    #[inline]
    fn sheared_eta_sq(&self, k: usize, s: f64) -> f64 {
        self.c[k] - 2.0 * s * self.b[k] + s * s * self.a[k]
    }

    fn component(&self, k: usize, i: usize) -> (usize, usize) {
        let xb = self.nx.pow(self.d as u32);
        let m = (k % xb) / self.nx.pow(i as u32) % self.nx;
        let l = (k / xb) / self.ny.pow(i as u32) % self.ny;
        (m, l)
    }

    fn xi_i(&self, k: usize, i: usize) -> f64 {
        self.xi[self.component(k, i).0]
    }

    fn eta_i(&self, k: usize, i: usize) -> f64 {
        self.eta[self.component(k, i).1]
    }

    /// Re-expresses the sheared coefficients about `t_c + P`.
    fn remap(&self, v: &[Complex64], out: &mut [Complex64]) {
        out.par_iter_mut().zip(&self.remap_from).for_each(|(o, r)| {
            *o = match r {
                Some((src, sg)) => v[*src] * *sg,
                None => Complex64::default(),
            }
        });
    }
}

struct Ctx<'a> {
    grid: &'a Grid,
    src: SourceTerm<'a>,
    modes: Modes,
    shape: Vec<usize>,
    x_axes: Vec<usize>,
    y_axes: Vec<usize>,
    /// `N / |box|`, the factor from continuous transform to DFT coefficient.
    scale: f64,
}

impl<'a> Ctx<'a> {
    fn new(grid: &'a Grid, src: SourceTerm<'a>) -> Self {
        let d = grid.d;
        let ya = grid.y.expect("y axis");
        let shape: Vec<usize> = grid.shape()[..2 * d].to_vec();
        let vol = (2.0 * grid.x.half_length).powi(d as i32) * (2.0 * ya.half_length).powi(d as i32);
        Self {
            grid,
            src,
            modes: Modes::new(grid),
            shape,
            x_axes: (0..d).collect(),
            y_axes: (d..2 * d).collect(),
            scale: grid.slice_len() as f64 / vol,
        }
    }

    /// DFT coefficients of the sheared, periodised source at time `tau`
    /// and shear `s`. Returns `false` if the source vanishes there.
    fn coefficients(&self, tau: f64, s: f64, out: &mut [Complex64]) -> bool {
        let m = &self.modes;
        match self.src {
            SourceTerm::Callable(f) if f.has_closed_transform() => {
                if !f.sheared_transform(tau, s, &m.xi, &m.eta, out) {
                    return false;
                }
                let sc = self.scale;
                out.par_iter_mut().zip(&m.sign).for_each(|(o, sg)| *o *= sc * sg);
                true
            }
            SourceTerm::Callable(f) => {
                let sb = f.support();
                if tau < sb.t.0 || tau > sb.t.1 {
                    return false;
                }
                let grid = self.grid;
                let ya = grid.y.expect("y axis");
                let (lx, ly) = (grid.x.half_length, ya.half_length);
                let d = grid.d;
                out.par_chunks_mut(1 << 10).enumerate().for_each(|(ch, chunk)| {
                    let mut x = vec![0.0; d];
                    let mut y = vec![0.0; d];
                    for (j, o) in chunk.iter_mut().enumerate() {
                        grid.coords(ch * (1 << 10) + j, &mut x, &mut y);
                        for i in 0..d {
                            x[i] += s * y[i];
                        }
                        *o = Complex64::new(periodized(f, &sb, &x, &y, tau, lx, ly), 0.0);
                    }
                });
                fft_axes(out, &self.shape, &(0..2 * d).collect::<Vec<_>>(), Direction::Forward);
                out.par_iter_mut().zip(&m.sign).for_each(|(o, sg)| *o *= sg.abs());
                true
            }
            SourceTerm::Sampled(field) => {
                let slice = interpolate_in_time(field, tau);
                if slice.iter().all(|v| *v == 0.0) {
                    return false;
                }
                for (o, v) in out.iter_mut().zip(&slice) {
                    *o = Complex64::new(*v, 0.0);
                }
                fft_axes(out, &self.shape, &self.x_axes, Direction::Forward);
                self.shear_phase(out, s, 1.0);
                fft_axes(out, &self.shape, &self.y_axes, Direction::Forward);
                out.par_iter_mut().zip(&m.sign).for_each(|(o, sg)| *o *= sg.abs());
                true
            }
        }
    }

    /// Multiplies an (x-mode, y-node) array by `exp(dir · i s Σ ξ_i y_i)`.
    fn shear_phase(&self, data: &mut [Complex64], s: f64, dir: f64) {
        let ya = self.grid.y.expect("y axis");
        let (nx, ny, d) = (self.grid.x.n, ya.n, self.grid.d);
        let xi = &self.modes.xi;
        let table: Vec<Complex64> = (0..nx * ny)
            .map(|idx| Complex64::from_polar(1.0, dir * s * xi[idx % nx] * ya.node(idx / nx)))
            .collect();
        if d == 1 {
            data.par_iter_mut().zip(&table).for_each(|(v, p)| *v *= p);
            return;
        }
        let xb = self.grid.x_block();
        data.par_chunks_mut(xb).enumerate().for_each(|(yk, chunk)| {
            let mut l = vec![0usize; d];
            let mut m = vec![0usize; d];
            Grid::unflatten(yk, ny, &mut l);
            for (xk, v) in chunk.iter_mut().enumerate() {
                Grid::unflatten(xk, nx, &mut m);
                for i in 0..d {
                    *v *= table[m[i] + nx * l[i]];
                }
            }
        });
    }

    /// Sheared coefficients at shear `s` to physical-frame node values.
    fn to_physical(&self, mut spec: Vec<Complex64>, s: f64) -> Vec<f64> {
        fft_axes(&mut spec, &self.shape, &self.y_axes, Direction::Inverse);
        self.shear_phase(&mut spec, s, -1.0);
        fft_axes(&mut spec, &self.shape, &self.x_axes, Direction::Inverse);
        spec.into_iter().map(|c| c.re).collect()
    }

    /// The periodised source sampled at every node.
    fn physical_source(&self) -> Field {
        let grid = self.grid;
        match self.src {
            SourceTerm::Sampled(f) => f.clone(),
            SourceTerm::Callable(f) if f.has_closed_transform() => {
                let s_len = grid.slice_len();
                let mut values = vec![0.0; grid.len()];
                let mut buf = vec![Complex64::default(); s_len];
                for n in 0..grid.nt() {
                    if self.coefficients(grid.t_node(n), 0.0, &mut buf) {
                        let mut c = buf.clone();
                        fft_axes(&mut c, &self.shape, &(0..2 * grid.d).collect::<Vec<_>>(), Direction::Inverse);
                        for (v, c) in values[n * s_len..(n + 1) * s_len].iter_mut().zip(&c) {
                            *v = c.re;
                        }
                    }
                }
                Field { grid: grid.clone(), values }
            }
            SourceTerm::Callable(f) => {
                let sb = f.support();
                let ya = grid.y.expect("y axis");
                let (lx, ly) = (grid.x.half_length, ya.half_length);
                Field::from_fn(grid.clone(), |x, y, t| periodized(f, &sb, x, y, t, lx, ly))
            }
        }
    }
}

/// `Σ f(x + 2Lx k + 2Ly m t, y + 2Ly m, t)` over the images meeting the
/// support box.
fn periodized(f: &dyn Source, sb: &super::source::SupportBox, x: &[f64], y: &[f64], t: f64, lx: f64, ly: f64) -> f64 {
    let d = x.len();
    let mut images: Vec<Vec<(f64, f64)>> = Vec::with_capacity(d);
    for i in 0..d {
        let mut list = Vec::new();
        let (ylo, yhi) = sb.y[i];
        let (xlo, xhi) = sb.x[i];
        let m0 = ((ylo - y[i]) / (2.0 * ly)).ceil() as i64;
        let m1 = ((yhi - y[i]) / (2.0 * ly)).floor() as i64;
        for m in m0..=m1 {
            let yy = y[i] + 2.0 * ly * m as f64;
            let x0 = x[i] + 2.0 * ly * m as f64 * t;
            let k0 = ((xlo - x0) / (2.0 * lx)).ceil() as i64;
            let k1 = ((xhi - x0) / (2.0 * lx)).floor() as i64;
            for k in k0..=k1 {
                list.push((x0 + 2.0 * lx * k as f64, yy));
            }
        }
        if list.is_empty() {
            return 0.0;
        }
        images.push(list);
    }
    let mut acc = 0.0;
    let mut xs = vec![0.0; d];
    let mut ys = vec![0.0; d];
    let mut idx = vec![0usize; d];
    loop {
        for i in 0..d {
            xs[i] = images[i][idx[i]].0;
            ys[i] = images[i][idx[i]].1;
        }
        acc += f.eval(&xs, &ys, t);
        let mut i = 0;
        loop {
            idx[i] += 1;
            if idx[i] < images[i].len() {
                break;
            }
            idx[i] = 0;
            i += 1;
            if i == d {
                return acc;
            }
        }
    }
}

/// Cubic Lagrange interpolation of the `(x, y)` slices in time.
fn interpolate_in_time(field: &Field, tau: f64) -> Vec<f64> {
    let ta = field.grid.t.expect("t axis");
    let nt = ta.n;
    let pos = (tau - ta.node(0)) / ta.spacing();
    let base = (pos.floor() as i64 - 1).clamp(0, nt as i64 - 4) as usize;
    let nodes: Vec<f64> = (0..4).map(|j| (base + j) as f64).collect();
    let w: Vec<f64> = (0..4)
        .map(|j| {
            (0..4).filter(|&k| k != j).map(|k| (pos - nodes[k]) / (nodes[j] - nodes[k])).product()
        })
        .collect();
    let s_len = field.grid.slice_len();
    let mut out = vec![0.0; s_len];
    for (j, wj) in w.iter().enumerate() {
        for (o, v) in out.iter_mut().zip(field.t_slice(base + j)) {
            *o += wj * v;
        }
    }
    out
}

/// Fornberg weights for the first derivative at `x0` from the given nodes.
pub(crate) fn derivative_weights(x0: f64, nodes: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    // c[j][k]: weight of node j for the k-th derivative, k ∈ {0, 1}.
    let mut c = vec![[0.0f64; 2]; n];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - x0;
    for i in 1..n {
        let mn = i.min(1);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - x0;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|w| w[1]).collect()
}

/// `‖∂t u − Δy u + y·∇x u − f‖₂ / ‖f‖₂` on the grid.
///
/// `∇x` is spectral, `Δy u` is taken from the solution, and `∂t` uses
/// nine-point finite differences (one-sided near the ends) because the
/// time axis is not periodic. With `f = 0` the absolute residual is
/// returned.
pub fn residual_l(solution: &Solution, f: &Field) -> Result<f64> {
    let grid = &solution.grid;
    if f.grid != *grid {
        return invalid("source and solution live on different grids");
    }
    let ta = grid.t.ok_or_else(|| Error::InvalidArgument("residual needs a time axis".into()))?;
    let nt = ta.n;
    let d = grid.d;
    let s_len = grid.slice_len();
    let shape: Vec<usize> = grid.shape()[..2 * d].to_vec();
    let xi = grid.x.frequencies();
    let xb = grid.x_block();
    let ya = grid.y.expect("y axis");
    let width = 9.min(nt);
    let u = &solution.u.values;

    let per_slice: Vec<(f64, f64)> = (0..nt)
        .into_par_iter()
        .map(|n| {
            let lo = n.saturating_sub(width / 2).min(nt - width);
            let nodes: Vec<f64> = (lo..lo + width).map(|j| ta.node(j)).collect();
            let w = derivative_weights(ta.node(n), &nodes);
            let mut r = vec![0.0; s_len];
            for (j, wj) in w.iter().enumerate() {
                let sl = &u[(lo + j) * s_len..(lo + j + 1) * s_len];
                for (rv, v) in r.iter_mut().zip(sl) {
                    *rv += wj * v;
                }
            }
            let slice = &u[n * s_len..(n + 1) * s_len];
            let mut c: Vec<Complex64> = slice.iter().map(|v| Complex64::new(*v, 0.0)).collect();
            fft_axes(&mut c, &shape, &(0..d).collect::<Vec<_>>(), Direction::Forward);
            let mut m = vec![0usize; d];
            let mut l = vec![0usize; d];
            for i in 0..d {
                let mut g = c.clone();
                for (k, gk) in g.iter_mut().enumerate() {
                    Grid::unflatten(k % xb, grid.x.n, &mut m);
                    let mode = m[i];
                    *gk *= if mode == grid.x.n / 2 { Complex64::default() } else { Complex64::new(0.0, xi[mode]) };
                }
                fft_axes(&mut g, &shape, &(0..d).collect::<Vec<_>>(), Direction::Inverse);
                for (k, (rv, gk)) in r.iter_mut().zip(&g).enumerate() {
                    Grid::unflatten(k / xb, ya.n, &mut l);
                    *rv += ya.node(l[i]) * gk.re;
                }
            }
            let lap = &solution.lap_y_u.values[n * s_len..(n + 1) * s_len];
            let fs = f.t_slice(n);
            let mut rr = 0.0;
            let mut ff = 0.0;
            for k in 0..s_len {
                let e = r[k] - lap[k] - fs[k];
                rr += e * e;
                ff += fs[k] * fs[k];
            }
            (rr, ff)
        })
        .collect();
    let rr: f64 = per_slice.iter().map(|p| p.0).sum();
    let ff: f64 = per_slice.iter().map(|p| p.1).sum();
    Ok(if ff > 0.0 { (rr / ff).sqrt() } else { (rr * grid.cell_volume()).sqrt() })
}
