use super::Field;
use crate::error::{invalid, Result};
use crate::quadrature::pairwise_sum;
use serde::{Deserialize, Serialize};

/// Which axes form the inner norm; the outer norm is always over `y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    /// `L^q_y L^p_{x,t}` on a field over `(x, y, t)`.
    XtInner,
    /// `L^q_y L^p_x` on a field over `(x, y)`.
    XInner,
}

/// `L^q_y L^p_{inner}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormSpec {
    pub p: f64,
    pub q: f64,
    pub layout: Layout,
}

fn check_exponent(p: f64) -> Result<()> {
    if p.is_nan() || p < 1.0 {
        return invalid(format!("Lebesgue exponent must be in [1, ∞], got {p}"));
    }
    Ok(())
}

/// `(Σ |f|^p · cell)^{1/p}`, or the maximum for `p = ∞`.
pub fn lp_norm(field: &Field, p: f64) -> Result<f64> {
    check_exponent(p)?;
    if p.is_infinite() {
        return Ok(field.max_abs());
    }
    let powered: Vec<f64> = field.values.iter().map(|v| v.abs().powf(p)).collect();
    Ok((pairwise_sum(&powered) * field.grid.cell_volume()).powf(1.0 / p))
}

/// Inner `L^p` over `(x, t)` (or `x`) at each `y` node, then `L^q` over `y`.
pub fn mixed_norm(field: &Field, spec: NormSpec) -> Result<f64> {
    check_exponent(spec.p)?;
    check_exponent(spec.q)?;
    let g = &field.grid;
    let ya = match g.y {
        Some(a) => a,
        None => return invalid("mixed norm needs a y axis"),
    };
    match (spec.layout, g.t.is_some()) {
        (Layout::XtInner, false) => return invalid("layout expects a time axis but the field has none"),
        (Layout::XInner, true) => return invalid("layout has no time axis but the field has one"),
        _ => {}
    }
    let xb = g.x_block();
    let yb = g.y_block();
    let nt = g.nt();
    let inner_cell = g.x.spacing().powi(g.d as i32) * g.t.map_or(1.0, |a| a.spacing());
    let outer_cell = ya.spacing().powi(g.d as i32);
    let mut inner = vec![0.0; yb];
    let mut buf = vec![0.0; xb * nt];
    for (iy, slot) in inner.iter_mut().enumerate() {
        for k in 0..nt {
            let base = (k * yb + iy) * xb;
            buf[k * xb..(k + 1) * xb].copy_from_slice(&field.values[base..base + xb]);
        }
        *slot = if spec.p.is_infinite() {
            buf.iter().fold(0.0f64, |m, v| m.max(v.abs()))
        } else {
            for v in buf.iter_mut() {
                *v = v.abs().powf(spec.p);
            }
            (pairwise_sum(&buf) * inner_cell).powf(1.0 / spec.p)
        };
    }
    if spec.q.is_infinite() {
        return Ok(inner.iter().fold(0.0f64, |m, v| m.max(*v)));
    }
    for v in inner.iter_mut() {
        *v = v.powf(spec.q);
    }
    Ok((pairwise_sum(&inner) * outer_cell).powf(1.0 / spec.q))
}

/// `sup_λ λ·|{|f| > λ}|`, computed exactly from the sorted magnitudes:
/// the supremum is `max_k v_(k) · k · cell` over the decreasing order.
pub fn weak_l1(field: &Field) -> f64 {
    let mut v: Vec<f64> = field.values.iter().map(|v| v.abs()).filter(|v| *v > 0.0).collect();
    v.sort_unstable_by(|a, b| b.total_cmp(a));
    let cell = field.grid.cell_volume();
    v.iter().enumerate().fold(0.0f64, |m, (k, val)| m.max(val * (k + 1) as f64 * cell))
}
