//! Analytic charts evaluated in jet arithmetic.

use std::fmt;
use std::sync::Arc;

use nalgebra::SMatrix;

use crate::error::{GeomError, Result};
use crate::jet::{self, Jet, Jet4, MAX_ORDER, NVARS};

/// An analytic map ℝ⁴ ⊃ U → ℝ⁵ written once over jets.
pub trait ChartFn: Send + Sync {
    fn eval(&self, u: &[Jet; NVARS]) -> Result<[Jet; 5]>;
}

impl<F> ChartFn for F
where
    F: Fn(&[Jet; NVARS]) -> Result<[Jet; 5]> + Send + Sync,
{
    fn eval(&self, u: &[Jet; NVARS]) -> Result<[Jet; 5]> {
        self(u)
    }
}

/// Axis-aligned parameter box; periodic axes wrap.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChartDomain {
    pub lo: [f64; NVARS],
    pub hi: [f64; NVARS],
    pub periodic: [bool; NVARS],
}

impl ChartDomain {
    pub fn contains(&self, u: &[f64; NVARS]) -> bool {
        (0..NVARS).all(|v| self.periodic[v] || (u[v] > self.lo[v] && u[v] < self.hi[v]))
    }

    /// Map a point of the unit cube into the domain, keeping `margin` (relative)
    /// away from non-periodic boundaries.
    pub fn from_unit(&self, t: [f64; NVARS], margin: f64) -> [f64; NVARS] {
        std::array::from_fn(|v| {
            let s = if self.periodic[v] { t[v] } else { margin + (1.0 - 2.0 * margin) * t[v] };
            self.lo[v] + s * (self.hi[v] - self.lo[v])
        })
    }
}

/// A chart: parameter domain, analytic evaluator, normal orientation and the
/// per-axis base node counts of its quadrature grid.
#[derive(Clone)]
pub struct ChartMap {
    pub domain: ChartDomain,
    pub map: Arc<dyn ChartFn>,
    /// Sign applied to the cross-product normal.
    pub orientation: f64,
    pub base_nodes: [usize; NVARS],
}

impl fmt::Debug for ChartMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ChartMap")
            .field("domain", &self.domain)
            .field("orientation", &self.orientation)
            .field("base_nodes", &self.base_nodes)
            .finish()
    }
}

impl ChartMap {
    /// Plain evaluation of Φ.
    pub fn point(&self, u: [f64; NVARS]) -> Result<[f64; 5]> {
        let p = self.map.eval(&jet::seed(u, 0))?;
        Ok(std::array::from_fn(|i| p[i].value()))
    }
}

/// The `order`-jet of Φ at `u`.
pub fn chart_jet(c: &ChartMap, u: [f64; NVARS], order: usize) -> Result<Jet4> {
    if order > MAX_ORDER {
        return Err(GeomError::Domain(format!("jet order {order} exceeds {MAX_ORDER}")));
    }
    if !c.domain.contains(&u) {
        return Err(GeomError::Domain(format!("point {u:?} outside chart domain")));
    }
    let phi = Jet4::new(c.map.eval(&jet::seed(u, order))?.to_vec());
    if order >= 1 {
        let j = SMatrix::<f64, 5, 4>::from_fn(|a, i| phi.component(a).d(i));
        let sv = j.singular_values();
        let (lo, hi) = (sv.min(), sv.max());
        if !(lo > 1e-10 * hi) {
            return Err(GeomError::Degeneracy(format!(
                "Jacobian singular values {lo:e}/{hi:e} at {u:?}"
            )));
        }
    }
    Ok(phi)
}

/// Comparison of jet coefficients with finite differences.
#[derive(Clone, Debug)]
pub struct FdReport {
    /// Max over |α| ≥ 1 of the discrepancy, relative to the largest coefficient of that order.
    pub max_rel: f64,
    pub worst_alpha: [u8; NVARS],
}

fn central_stencil(m: u8) -> Vec<(f64, f64)> {
    // m-th central difference with half-integer offsets for odd m.
    let m = m as i32;
    (0..=m)
        .map(|j| {
            let binom = (0..j).fold(1.0, |b, t| b * (m - t) as f64 / (t + 1) as f64);
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            (m as f64 / 2.0 - j as f64, sign * binom)
        })
        .collect()
}

fn fd_partial(c: &ChartMap, u: [f64; NVARS], alpha: [u8; NVARS], h: f64) -> Result<Vec<f64>> {
    let stencils: Vec<_> = alpha.iter().map(|&m| central_stencil(m)).collect();
    let mut acc = vec![0.0; 5];
    let mut idx = [0usize; NVARS];
    loop {
        let mut p = u;
        let mut w = 1.0;
        for v in 0..NVARS {
            let (off, cw) = stencils[v][idx[v]];
            p[v] += off * h;
            w *= cw;
        }
        let x = c.point(p)?;
        for a in 0..5 {
            acc[a] += w * x[a];
        }
        let mut v = 0;
        loop {
            if v == NVARS {
                let hk = h.powi(alpha.iter().map(|&x| x as i32).sum());
                return Ok(acc.into_iter().map(|s| s / hk).collect());
            }
            idx[v] += 1;
            if idx[v] < stencils[v].len() {
                break;
            }
            idx[v] = 0;
            v += 1;
        }
    }
}

/// Validate the `order`-jet at `u` against Richardson-extrapolated central
/// differences with steps `h` and `h/2`.
pub fn fd_validate(c: &ChartMap, u: [f64; NVARS], order: usize, h: f64) -> Result<FdReport> {
    let jet = chart_jet(c, u, order)?;
    let mut worst = (0.0, [0u8; NVARS]);
    for k in 1..=order {
        let alphas: Vec<[u8; NVARS]> = jet::multi_indices(k)
            .iter()
            .copied()
            .filter(|a| a.iter().map(|&x| x as usize).sum::<usize>() == k)
            .collect();
        let mut scale = 0.0f64;
        let mut diffs = Vec::new();
        for a in &alphas {
            let f1 = fd_partial(c, u, *a, h)?;
            let f2 = fd_partial(c, u, *a, h / 2.0)?;
            let fact = jet::alpha_factorial(*a);
            let exact = jet.coeff(*a);
            let mut d = 0.0f64;
            for i in 0..5 {
                let fd = (4.0 * f2[i] - f1[i]) / 3.0 / fact;
                scale = scale.max(exact[i].abs());
                d = d.max((fd - exact[i]).abs());
            }
            diffs.push((d, *a));
        }
        let scale = scale.max(1e-300);
        for (d, a) in diffs {
            if d / scale > worst.0 {
                worst = (d / scale, a);
            }
        }
    }
    Ok(FdReport { max_rel: worst.0, worst_alpha: worst.1 })
}
