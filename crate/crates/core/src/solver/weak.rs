//! Weak-form check of `−Δy u + y·∇x u = f` against random smooth bumps.

use crate::discretization::{lp_norm, Field, Grid};
use crate::error::{invalid, Result};
use crate::rng;
use rand::Rng;

/// `φ(x, y) = exp(−1/(1 − q))` with `q = |(x − a)/r_x|² + |(y − b)/r_y|²`.
#[derive(Debug, Clone, PartialEq)]
pub struct TestBump {
    pub center_x: Vec<f64>,
    pub center_y: Vec<f64>,
    pub radius_x: f64,
    pub radius_y: f64,
}

/// Values of a test bump and the derivatives the pairing needs.
struct Jet {
    value: f64,
    /// `Δy φ + y·∇x φ`.
    adjoint: f64,
    /// Largest magnitude among all partial derivatives of order ≤ 2.
    c2: f64,
}

impl TestBump {
    fn jet(&self, x: &[f64], y: &[f64]) -> Jet {
        let d = x.len();
        let mut zs = Vec::with_capacity(2 * d);
        let mut rs = Vec::with_capacity(2 * d);
        for i in 0..d {
            zs.push(x[i] - self.center_x[i]);
            rs.push(self.radius_x);
        }
        for i in 0..d {
            zs.push(y[i] - self.center_y[i]);
            rs.push(self.radius_y);
        }
        let q: f64 = zs.iter().zip(&rs).map(|(z, r)| (z / r) * (z / r)).sum();
        if q >= 1.0 {
            return Jet { value: 0.0, adjoint: 0.0, c2: 0.0 };
        }
        let e = 1.0 - q;
        let psi = (-1.0 / e).exp();
        let d1 = -psi / (e * e);
        let d2 = psi * (1.0 / e.powi(4) - 2.0 / e.powi(3));
        // ∂_a φ = ψ′ · 2 z_a / r_a², ∂_a ∂_b φ = ψ″ (2 z_a / r_a²)(2 z_b / r_b²) + ψ′ 2 δ_ab / r_a².
        let g: Vec<f64> = zs.iter().zip(&rs).map(|(z, r)| 2.0 * z / (r * r)).collect();
        let mut adjoint = 0.0;
        for i in 0..d {
            let a = d + i;
            adjoint += d2 * g[a] * g[a] + d1 * 2.0 / (rs[a] * rs[a]);
            adjoint += y[i] * d1 * g[i];
        }
        let mut c2 = psi.abs();
        for a in 0..2 * d {
            c2 = c2.max((d1 * g[a]).abs());
            for b in 0..2 * d {
                let diag = if a == b { d1 * 2.0 / (rs[a] * rs[a]) } else { 0.0 };
                c2 = c2.max((d2 * g[a] * g[b] + diag).abs());
            }
        }
        Jet { value: psi, adjoint, c2 }
    }
}

/// Random bumps whose support lies inside the grid window.
pub fn random_test_bumps(grid: &Grid, n: usize, seed: u64) -> Result<Vec<TestBump>> {
    let ya = grid.y.ok_or_else(|| crate::Error::InvalidArgument("test bumps need a y axis".into()))?;
    let (lx, ly) = (grid.x.half_length, ya.half_length);
    let mut r = rng::stream(seed, 0);
    Ok((0..n)
        .map(|_| {
            let radius_x = lx * r.random_range(0.35..0.5);
            let radius_y = ly * r.random_range(0.35..0.5);
            let cx = (0..grid.d).map(|_| r.random_range(-0.9..0.9) * (lx - radius_x)).collect();
            let cy = (0..grid.d).map(|_| r.random_range(-0.9..0.9) * (ly - radius_y)).collect();
            TestBump { center_x: cx, center_y: cy, radius_x, radius_y }
        })
        .collect())
}

/// One pairing: `⟨u, Δyφ + y·∇xφ⟩`, `⟨f, φ⟩`, `⟨b, φ⟩` and `‖φ‖_{C²}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pairing {
    pub u_adjoint: f64,
    pub f_phi: f64,
    pub b_phi: f64,
    pub phi_c2: f64,
}

impl Pairing {
    /// `⟨u, Δyφ + y·∇xφ⟩ + ⟨f, φ⟩ − ⟨b, φ⟩`.
    pub fn defect(&self) -> f64 {
        self.u_adjoint + self.f_phi - self.b_phi
    }
}

/// Pairs `u`, `f` and an optional boundary term with each test bump.
pub fn pairings(u: &Field, f: &Field, boundary: Option<&Field>, bumps: &[TestBump]) -> Result<Vec<Pairing>> {
    let grid = &u.grid;
    if f.grid != *grid || boundary.is_some_and(|b| b.grid != *grid) {
        return invalid("fields live on different grids");
    }
    if grid.y.is_none() || grid.t.is_some() {
        return invalid("weak check expects fields over (x, y)");
    }
    let cell = grid.cell_volume();
    let d = grid.d;
    Ok(bumps
        .iter()
        .map(|phi| {
            let mut p = Pairing { u_adjoint: 0.0, f_phi: 0.0, b_phi: 0.0, phi_c2: 0.0 };
            let mut x = vec![0.0; d];
            let mut y = vec![0.0; d];
            for idx in 0..grid.len() {
                grid.coords(idx, &mut x, &mut y);
                let j = phi.jet(&x, &y);
                if j.value == 0.0 {
                    continue;
                }
                p.u_adjoint += u.values[idx] * j.adjoint * cell;
                p.f_phi += f.values[idx] * j.value * cell;
                if let Some(b) = boundary {
                    p.b_phi += b.values[idx] * j.value * cell;
                }
                p.phi_c2 = p.phi_c2.max(j.c2);
            }
            p
        })
        .collect())
}

/// `max_φ |⟨u, Δyφ + y·∇xφ⟩ + ⟨f, φ⟩| / (‖u‖₂ ‖φ‖_{C²})` over `n_test`
/// random bumps. With `u = 0` the denominator drops `‖u‖₂`.
pub fn weak_solution_check(u: &Field, f: &Field, n_test: usize, seed: u64) -> Result<f64> {
    let bumps = random_test_bumps(&u.grid, n_test, seed)?;
    let norm = lp_norm(u, 2.0)?;
    let scale = if norm > 0.0 { norm } else { 1.0 };
    Ok(pairings(u, f, None, &bumps)?
        .iter()
        .filter(|p| p.phi_c2 > 0.0)
        .map(|p| p.defect().abs() / (scale * p.phi_c2))
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian_pair(n: usize) -> (Field, Field) {
        // u = exp(−x² − y²) gives f = −Δy u + y ∂x u = (2 − 4y² − 2xy) u.
        let g = Grid::xy(1, [4.0, 4.0], [n, n]).unwrap();
        let u = Field::from_fn(g.clone(), |x, y, _| (-x[0] * x[0] - y[0] * y[0]).exp());
        let f = Field::from_fn(g, |x, y, _| {
            (2.0 - 4.0 * y[0] * y[0] - 2.0 * x[0] * y[0]) * (-x[0] * x[0] - y[0] * y[0]).exp()
        });
        (u, f)
    }

    #[test]
    fn exact_pair_converges_and_noise_fails() {
        let (u, f) = gaussian_pair(128);
        let clean = weak_solution_check(&u, &f, 5, 3).unwrap();
        assert!(clean < 1e-3, "clean residual {clean}");
        let (u2, f2) = gaussian_pair(256);
        assert!(weak_solution_check(&u2, &f2, 5, 3).unwrap() < 0.1 * clean);

        let mut r = rng::stream(9, 0);
        let noisy = Field {
            grid: u.grid.clone(),
            values: u.values.iter().map(|v| v + 0.1 * r.random_range(-1.0..1.0)).collect(),
        };
        let bad = weak_solution_check(&noisy, &f, 5, 3).unwrap();
        assert!(bad > 10.0 * clean, "noisy {bad} clean {clean}");
        let z = Field::zeros(u.grid.clone());
        assert_eq!(weak_solution_check(&z, &z, 5, 3).unwrap(), 0.0);
    }
}
