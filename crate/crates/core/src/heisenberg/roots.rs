use std::f64::consts::TAU;

use super::harper::{gcd, irrep};
use crate::error::{Error, Result};
use crate::freealg::MatrixTuple;

/// `n`-dimensional representation with `π(c) = e^{2πik/n} I`: the irrep at
/// `k/n` in lowest terms, repeated until the dimension is exactly `n`.
pub fn root_rep(n: i64, k: i64) -> Result<MatrixTuple> {
    if n < 1 || k < 0 || k >= n {
        return Err(Error::InvalidInput(format!("root_rep needs 0 <= k < n, got n={n}, k={k}")));
    }
    let g = gcd(k, n);
    let block = irrep(k / g, n / g, 0.0, 0.0)?;
    let mut rep = block.clone();
    for _ in 1..g {
        rep = rep.direct_sum(&block)?;
    }
    Ok(rep)
}

/// Image of a representation under the unital functional
/// `ρ ↦ (tr ρ((c+c*)/2), tr ρ((c-c*)/(2i))) / dim`.
pub fn root_projection(rep: &MatrixTuple) -> (f64, f64) {
    let c = rep.get(2);
    let n = rep.dim() as f64;
    let tr = c.trace() / n;
    (tr.re, tr.im)
}

fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// A point `(x, y)` with the reduced fraction `(k, n)` it came from.
pub type HullVertex = ((f64, f64), (i64, i64));

/// Extreme points of `conv{e^{2πik/n} : n ≤ n_max, 0 ≤ k < n}` as
/// `((x, y), (k, n))` with `k/n` reduced, counter-clockwise from `(1, 0)`.
pub fn roots_hull(n_max: i64) -> Result<Vec<HullVertex>> {
    if n_max < 1 {
        return Err(Error::InvalidInput("n_max must be at least 1".into()));
    }
    let mut pts: Vec<HullVertex> = Vec::new();
    for n in 1..=n_max {
        for k in 0..n {
            if gcd(k, n) == 1 {
                let t = TAU * k as f64 / n as f64;
                pts.push(((t.cos(), t.sin()), (k, n)));
            }
        }
    }
    // Andrew's monotone chain; points on the circle are all extreme, and the
    // strict turn test keeps every one of them.
    let mut sorted = pts.clone();
    sorted.sort_by(|a, b| a.0 .0.total_cmp(&b.0 .0).then(a.0 .1.total_cmp(&b.0 .1)));
    if sorted.len() <= 2 {
        return Ok(order_by_angle(sorted));
    }
    let mut lower: Vec<HullVertex> = Vec::new();
    for p in &sorted {
        while lower.len() >= 2 && cross(lower[lower.len() - 2].0, lower[lower.len() - 1].0, p.0) <= 1e-15 {
            lower.pop();
        }
        lower.push(*p);
    }
    let mut upper: Vec<HullVertex> = Vec::new();
    for p in sorted.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2].0, upper[upper.len() - 1].0, p.0) <= 1e-15 {
            upper.pop();
        }
        upper.push(*p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    Ok(order_by_angle(lower))
}

fn order_by_angle(mut v: Vec<HullVertex>) -> Vec<HullVertex> {
    v.sort_by(|a, b| (a.1 .0 * b.1 .1).cmp(&(b.1 .0 * a.1 .1)));
    v
}
