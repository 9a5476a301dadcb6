//! Conformal transformations of ℝ⁵ acting on atlases, and the checks that the
//! energies are invariant and that Y transforms by a Lorentz matrix.

use std::sync::Arc;

use nalgebra::{DMatrix, Matrix5};
use serde::{Deserialize, Serialize};

use crate::cgm::{cgm_jets, mv_value};
use crate::chart::{chart_jet, ChartMap};
use crate::energy::functional_set;
use crate::error::{GeomError, Result};
use crate::geometry::JetGeometry;
use crate::jet::{self, Jet, NVARS};
use crate::minkowski::{eta, eta_dot, lorentz_residual, Mat7, MinkowskiVec};
use crate::surfaces::{quadrature_grid, SurfaceAtlas};

/// Smallest admissible distance from an inversion center to the surface.
pub const INVERSION_CUTOFF: f64 = 1e-3;

/// One conformal map of ℝ⁵.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MoebiusPrimitive {
    Translation { v: [f64; 5] },
    /// Row-major matrix in SO(5).
    Rotation { matrix: [[f64; 5]; 5] },
    Dilation { lambda: f64 },
    /// `x ↦ c + (x − c)/|x − c|²`.
    Inversion { center: [f64; 5] },
}

impl MoebiusPrimitive {
    /// Rotation by `angle` in the `(i, j)` coordinate plane.
    pub fn plane_rotation(i: usize, j: usize, angle: f64) -> Self {
        let mut m = Matrix5::identity();
        let (s, c) = angle.sin_cos();
        m[(i, i)] = c;
        m[(j, j)] = c;
        m[(i, j)] = -s;
        m[(j, i)] = s;
        MoebiusPrimitive::Rotation { matrix: std::array::from_fn(|a| std::array::from_fn(|b| m[(a, b)])) }
    }

    fn validate(&self) -> Result<()> {
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        match self {
            MoebiusPrimitive::Translation { v } if !finite(v) => Err(GeomError::Validation("translation must be finite".into())),
            MoebiusPrimitive::Inversion { center } if !finite(center) => {
                Err(GeomError::Validation("inversion center must be finite".into()))
            }
            MoebiusPrimitive::Dilation { lambda } if !(lambda.is_finite() && *lambda > 0.0) => {
                Err(GeomError::Validation("dilation factor must be positive".into()))
            }
            MoebiusPrimitive::Rotation { matrix } => {
                let m = Matrix5::from_fn(|a, b| matrix[a][b]);
                let orth = (m.transpose() * m - Matrix5::identity()).amax();
                if !(orth < 1e-10) || !((m.determinant() - 1.0).abs() < 1e-10) {
                    return Err(GeomError::Validation(format!("rotation is not in SO(5) (|OᵀO − I| = {orth:e})")));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    fn apply_jets(&self, x: &[Jet; 5]) -> Result<[Jet; 5]> {
        Ok(match self {
            MoebiusPrimitive::Translation { v } => std::array::from_fn(|a| x[a].add_scalar(v[a])),
            MoebiusPrimitive::Rotation { matrix } => std::array::from_fn(|a| {
                let t: Vec<Jet> = (0..5).map(|b| x[b].scale(matrix[a][b])).collect();
                jet::sum(&t)
            }),
            MoebiusPrimitive::Dilation { lambda } => std::array::from_fn(|a| x[a].scale(*lambda)),
            MoebiusPrimitive::Inversion { center } => {
                let d: [Jet; 5] = std::array::from_fn(|a| x[a].add_scalar(-center[a]));
                let r2 = jet::dot(&d, &d);
                let dist = r2.value().sqrt();
                if !(dist >= INVERSION_CUTOFF) {
                    return Err(GeomError::Domain(format!(
                        "surface point at distance {dist:e} from the inversion center (cutoff {INVERSION_CUTOFF:e})"
                    )));
                }
                let inv = r2.recip()?;
                std::array::from_fn(|a| (&d[a] * &inv).add_scalar(center[a]))
            }
        })
    }
}

/// A composition of primitives, applied first to last.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MoebiusMap {
    pub steps: Vec<MoebiusPrimitive>,
}

impl MoebiusMap {
    pub fn identity() -> Self {
        MoebiusMap::default()
    }

    pub fn then(mut self, p: MoebiusPrimitive) -> Self {
        self.steps.push(p);
        self
    }

    /// `m ∘ self`: apply `self` first.
    pub fn followed_by(&self, m: &MoebiusMap) -> Self {
        MoebiusMap { steps: self.steps.iter().chain(&m.steps).cloned().collect() }
    }

    pub fn validate(&self) -> Result<()> {
        self.steps.iter().try_for_each(MoebiusPrimitive::validate)
    }

    /// Inversions reverse the orientation of ℝ⁵.
    pub fn reverses_orientation(&self) -> bool {
        self.steps.iter().filter(|p| matches!(p, MoebiusPrimitive::Inversion { .. })).count() % 2 == 1
    }

    pub fn apply_jets(&self, x: &[Jet; 5]) -> Result<[Jet; 5]> {
        let mut y = x.clone();
        for p in &self.steps {
            y = p.apply_jets(&y)?;
        }
        Ok(y)
    }

    pub fn apply_point(&self, x: [f64; 5]) -> Result<[f64; 5]> {
        let j: [Jet; 5] = std::array::from_fn(|a| Jet::constant(x[a], 0));
        let y = self.apply_jets(&j)?;
        Ok(std::array::from_fn(|a| y[a].value()))
    }
}

/// Compose every chart with `m`. The normal is the pushforward of the old one,
/// so the orientation flag flips under an odd number of inversions. The map is
/// checked at the level-0 quadrature nodes; later evaluations closer than the
/// cutoff to an inversion center fail at that node.
pub fn apply_moebius(m: &MoebiusMap, atlas: &SurfaceAtlas) -> Result<SurfaceAtlas> {
    m.validate()?;
    let grid = quadrature_grid(atlas, 0);
    for (ci, (c, cg)) in atlas.charts.iter().zip(&grid.charts).enumerate() {
        for k in 0..cg.len() {
            let (u, _) = cg.node(k);
            let x = c.point(u)?;
            m.apply_point(x)
                .map_err(|e| GeomError::AtNode { chart: ci, node: u, source: Box::new(e) })?;
        }
    }
    let flip = if m.reverses_orientation() { -1.0 } else { 1.0 };
    Ok(atlas.map_charts(format!("moebius({})", atlas.name), |c| {
        let inner = Arc::clone(&c.map);
        let mm = m.clone();
        ChartMap {
            domain: c.domain,
            map: Arc::new(move |u: &[Jet; NVARS]| mm.apply_jets(&inner.eval(u)?)),
            orientation: c.orientation * flip,
            base_nodes: c.base_nodes,
        }
    }))
}

/// Before/after values of one functional.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Drift {
    pub name: String,
    pub before: Option<f64>,
    pub after: Option<f64>,
    /// `|after − before| / max(|before|, |after|, 1)`.
    pub drift: Option<f64>,
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub level: usize,
    pub drifts: Vec<Drift>,
}

impl InvarianceReport {
    pub fn max_drift(&self) -> f64 {
        self.drifts.iter().filter_map(|d| d.drift).fold(0.0, f64::max)
    }

    pub fn get(&self, name: &str) -> Option<&Drift> {
        self.drifts.iter().find(|d| d.name == name)
    }
}

/// Drift of E_GR, E_P, 𝒫 and 𝒮 under `m`. 𝒮 is compared only when
/// defined on both surfaces; otherwise its entry carries a note.
pub fn invariance_check(m: &MoebiusMap, atlas: &SurfaceAtlas, level: usize, with_scal: bool) -> Result<InvarianceReport> {
    let image = apply_moebius(m, atlas)?;
    let a = functional_set(atlas, level, with_scal)?;
    let b = functional_set(&image, level, with_scal)?;
    let entry = |name: &str, x: Option<f64>, y: Option<f64>| {
        let drift = x.zip(y).map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(1.0));
        let note = match (with_scal || name != "scal_functional", x.is_some(), y.is_some()) {
            (false, _, _) => Some("not requested".to_string()),
            (true, true, true) => None,
            _ => Some("undefined: umbilic points or sign change of det Å".to_string()),
        };
        Drift { name: name.to_string(), before: x, after: y, drift, note }
    };
    Ok(InvarianceReport {
        level,
        drifts: vec![
            entry("e_gr", Some(a.e_gr), Some(b.e_gr)),
            entry("e_p", Some(a.e_p), Some(b.e_p)),
            entry("paneitz", Some(a.paneitz), Some(b.paneitz)),
            entry("scal_functional", a.scal_functional, b.scal_functional),
        ],
    })
}

/// Least-squares fit of `Y_Θ(p) = M Y(p)` over sample points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Equivariance {
    /// Row-major 7×7 matrix.
    pub m: [[f64; 7]; 7],
    pub lorentz_residual: f64,
    /// `max_p |Y_Θ(p) − M Y(p)|_e / max_p |Y_Θ(p)|_e`.
    pub fit_residual: f64,
    pub samples: usize,
    /// Dimension of the span of the sampled Y. When it is 6, M is fitted on
    /// that hyperplane and extended by mapping its η-normal to the η-normal of
    /// the image hyperplane.
    pub span_rank: usize,
}

impl Equivariance {
    pub fn matrix(&self) -> Mat7 {
        Mat7::from_fn(|a, b| self.m[a][b])
    }
}

fn y_at(c: &ChartMap, u: [f64; NVARS]) -> Result<MinkowskiVec> {
    let jet = chart_jet(c, u, 2)?;
    let jg = JetGeometry::new(&jet, c.orientation)?;
    Ok(mv_value(&cgm_jets(&jg).y))
}

/// Unit η-normal of the hyperplane Euclidean-orthogonal to `w`, with its η-square.
fn eta_normal(w: MinkowskiVec) -> Result<(MinkowskiVec, f64)> {
    let nv = eta() * w;
    let s = eta_dot(&nv, &nv);
    if !(s.abs() > 1e-8 * nv.norm_squared()) {
        return Err(GeomError::Rank("sampled Y span a degenerate (null) hyperplane".into()));
    }
    Ok((nv / s.abs().sqrt(), s.signum()))
}

fn null_direction(m: &DMatrix<f64>) -> MinkowskiVec {
    let svd = m.clone().svd(false, true);
    let vt = svd.v_t.expect("right singular vectors requested");
    let k = svd.singular_values.imin();
    MinkowskiVec::from_fn(|a, _| vt[(k, a)])
}

/// Extend a fit determined only on a hyperplane V by sending the unit η-normal
/// of V to the unit η-normal of the image hyperplane (sign with det M > 0).
fn complete_on_normal(m0: &Mat7, p: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<Mat7> {
    let (nrm, sigma) = eta_normal(null_direction(p))?;
    let (img, sigma2) = eta_normal(null_direction(q))?;
    if sigma != sigma2 {
        return Err(GeomError::Rank("image hyperplane has a different causal type".into()));
    }
    let proj = (nrm * nrm.transpose() * eta()) * sigma;
    let base = m0 * (Mat7::identity() - proj);
    let mut m = base + (img * nrm.transpose() * eta()) * sigma;
    if m.determinant() < 0.0 {
        m = base - (img * nrm.transpose() * eta()) * sigma;
    }
    Ok(m)
}

/// Fit M from at least 7 points; the 7×7 entries are solved freely and the
/// η-orthogonality of the result is only measured.
pub fn equivariance_check(m: &MoebiusMap, atlas: &SurfaceAtlas, points: &[(usize, [f64; NVARS])]) -> Result<Equivariance> {
    if points.len() < 7 {
        return Err(GeomError::Validation(format!("need at least 7 sample points, got {}", points.len())));
    }
    let image = apply_moebius(m, atlas)?;
    let n = points.len();
    let mut p = DMatrix::zeros(n, 7);
    let mut q = DMatrix::zeros(n, 7);
    for (i, &(c, u)) in points.iter().enumerate() {
        let chart = atlas.charts.get(c).ok_or_else(|| GeomError::Validation(format!("no chart {c}")))?;
        let wrap = |e: GeomError| GeomError::AtNode { chart: c, node: u, source: Box::new(e) };
        let y = y_at(chart, u).map_err(wrap)?;
        let yt = y_at(&image.charts[c], u).map_err(wrap)?;
        for a in 0..7 {
            p[(i, a)] = y[a];
            q[(i, a)] = yt[a];
        }
    }
    let svd = p.clone().svd(true, true);
    let smax = svd.singular_values.max().max(1e-300);
    let rank = svd.singular_values.iter().filter(|&&s| s > 1e-9 * smax).count();
    if rank < 6 {
        return Err(GeomError::Rank(format!(
            "conformal Gauss map values span a {rank}-dimensional subspace; M is not determined (Y is constant on round spheres)"
        )));
    }
    let mt = svd.solve(&q, 1e-9 * smax).map_err(|e| GeomError::Rank(e.to_string()))?;
    let mut mm = Mat7::from_fn(|a, b| mt[(b, a)]);
    if rank == 6 {
        mm = complete_on_normal(&mm, &p, &q)?;
    }
    let fit = p * &mt - &q;
    let scale = (0..n).map(|i| q.row(i).norm()).fold(0.0, f64::max).max(1e-300);
    let fit_residual = (0..n).map(|i| fit.row(i).norm()).fold(0.0, f64::max) / scale;
    Ok(Equivariance {
        m: std::array::from_fn(|a| std::array::from_fn(|b| mm[(a, b)])),
        lorentz_residual: lorentz_residual(&mm),
        fit_residual,
        samples: n,
        span_rank: rank,
    })
}
