//! Pointwise identity suite: every algebraic and differential identity of the
//! immersion and its conformal Gauss map evaluated at sample points.

use serde::{Deserialize, Serialize};

use crate::cgm::{cgm_frame, scal_bar_from_metric, second_form_raw};
use crate::chart::{chart_jet, ChartMap};
use crate::error::{GeomError, Result};
use crate::geometry::{codazzi_residual, simons_residual, JetGeometry};
use crate::jet::NVARS;
use crate::surfaces::{sample_points, SurfaceAtlas};
use crate::traceless::TracelessPair;
use nalgebra::Matrix4;

/// Residuals at one point, each already relative to its natural scale.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointIdentities {
    /// `|Y|² = 1`, `⟨Y,ν⟩ = 0`, `⟨∂Y,ν⟩ = 0`, `|ν|² = 0`.
    pub cgm_relations: f64,
    /// `ḡ = Åg⁻¹Å` against `⟨∂Y,∂Y⟩`.
    pub g_bar: f64,
    /// `⟨ν,ν*⟩ = −2/f`.
    pub nu_nustar: f64,
    /// Closed forms of `B*`, `Bν`, b⃗, `Γ̄` and `⟨∂²Y,ν⟩ = Å` against raw jets.
    pub second_form: f64,
    /// `Scal_ḡ` from the Gauss equation of Y against the curvature of `Åg⁻¹Å`.
    pub scal_bar: f64,
    pub codazzi: f64,
    pub simons: f64,
    /// Cayley–Hamilton relations of `g⁻¹Å`.
    pub ch_pack: f64,
    /// `det_g A` against its expansion in H and the traces of Å.
    pub det_a: f64,
}

fn rel_mat(a: &Matrix4<f64>, b: &Matrix4<f64>) -> f64 {
    (a - b).amax() / a.amax().max(b.amax()).max(1e-300)
}

/// Needs an umbilic-free point with `f` above tolerance; uses order-4 jets.
pub fn point_identities(c: &ChartMap, u: [f64; NVARS]) -> Result<PointIdentities> {
    let jet = chart_jet(c, u, 4)?;
    let jg = JetGeometry::new(&jet, c.orientation)?;
    let frame = cgm_frame(&jg, true)?;
    let basic = frame.basic_residuals();
    let dual = frame.dual.as_ref().expect("dual frame computed");
    let dres = dual.residuals(&frame);
    let second = frame.second.as_ref().expect("second form computed");
    let raw = second_form_raw(&frame, &jg)?;
    let b_vec_scale = second.b_vec.amax().max(raw.b_vec.amax()).max(1e-300);
    let second_form = [
        rel_mat(&second.b_star, &raw.b_star),
        rel_mat(&second.b_nu, &raw.b_nu),
        rel_mat(&frame.a_ring, &raw.ddy_nu),
        (second.b_vec - raw.b_vec).amax() / b_vec_scale,
        (0..4).map(|k| rel_mat(&second.gamma_bar[k], &raw.gamma_bar[k])).fold(0.0, f64::max),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    let sm = scal_bar_from_metric(&jg)?;
    let pair = TracelessPair::new(frame.g, frame.a_ring);
    let pack = pair.ch_pack();
    let exp = pair.det_a_expansion(frame.h);
    let det_scale = frame.h.powi(4).max(pack.tr2 * pack.tr2).max(exp.lhs.abs()).max(1e-300);
    Ok(PointIdentities {
        cgm_relations: basic.y_unit.max(basic.y_nu).max(basic.dy_nu).max(basic.nu_null),
        g_bar: basic.g_bar,
        nu_nustar: dres.nu_nustar,
        second_form,
        scal_bar: (second.scal_bar - sm).abs() / second.scal_bar.abs().max(sm.abs()).max(1.0),
        codazzi: codazzi_residual(&jet)?,
        simons: simons_residual(&jet)?,
        ch_pack: pack.residual.max(pack.tr4_residual).max(pack.det8_residual),
        det_a: exp.residual / det_scale,
    })
}

/// Largest residual of each identity over the sample, with its tolerance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteEntry {
    pub name: String,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointwiseSuite {
    pub surface: String,
    pub points: usize,
    pub entries: Vec<SuiteEntry>,
}

/// Hypothesis guards for sample points: the closed forms need Å safely
/// invertible, and high-order jets need a chart that is not close to a
/// coordinate singularity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Conditioning {
    /// Smallest admissible `|det Å| / |Å|⁴_g`.
    pub det_floor: f64,
    /// Largest admissible condition number of the chart metric.
    pub metric_ceiling: f64,
}

/// Guard for the identity suite. Below `|det Å|/|Å|⁴ = 1e−6` the metric
/// `ḡ = Åg⁻¹Å` has condition number above ~1e12 and the raw jet routes lose
/// most of their digits.
pub const SUITE_CONDITIONING: Conditioning = Conditioning { det_floor: 1e-6, metric_ceiling: f64::INFINITY };

/// Guard for order-6 checks, which also lose digits near polar-coordinate
/// singularities of the chart.
pub const EL_CONDITIONING: Conditioning = Conditioning { det_floor: 1e-6, metric_ceiling: 1e3 };

/// Below this fraction of `|A|²_g`, `|Å|²_g` is indistinguishable from
/// round-off and the point counts as umbilic.
const UMBILIC_FRACTION: f64 = 1e-8;

/// `|det Å| / |Å|⁴_g` (zero at umbilic points) and the condition number of g
/// at a point.
pub fn point_conditioning(c: &ChartMap, u: [f64; NVARS]) -> Result<(f64, f64)> {
    let jet = chart_jet(c, u, 2)?;
    let jg = JetGeometry::new(&jet, c.orientation)?;
    let g = crate::geometry::jmat_value(&jg.g);
    let p = TracelessPair::new(g, crate::geometry::jmat_value(&jg.a_ring)).ch_pack();
    let h = jg.h.value();
    let umbilic = p.tr2 <= UMBILIC_FRACTION * (p.tr2 + 4.0 * h * h);
    let ratio = if umbilic { 0.0 } else { p.det.abs() / (p.tr2 * p.tr2) };
    let ev = g.symmetric_eigenvalues();
    Ok((ratio, ev.max() / ev.min()))
}

/// The first `count` points of the seeded sequence passing `guard`, and the
/// number of points passed over.
pub fn conditioned_points(
    atlas: &SurfaceAtlas,
    count: usize,
    seed: u64,
    guard: Conditioning,
) -> Result<(Vec<(usize, [f64; NVARS])>, usize)> {
    let mut want = count;
    for _ in 0..8 {
        let mut keep = Vec::with_capacity(count);
        let mut rejected = 0;
        for (c, u) in sample_points(atlas, want, seed) {
            if keep.len() == count {
                break;
            }
            let (ratio, cond) = point_conditioning(&atlas.charts[c], u)?;
            if ratio >= guard.det_floor && cond <= guard.metric_ceiling {
                keep.push((c, u));
            } else {
                rejected += 1;
            }
        }
        if keep.len() == count {
            return Ok((keep, rejected));
        }
        want *= 2;
    }
    Err(GeomError::Unsupported(format!(
        "fewer than {count} sample points are umbilic-free and pass {guard:?}"
    )))
}

impl PointwiseSuite {
    pub fn pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }
}

/// Default tolerances of the suite, by identity name.
pub const SUITE_TOLERANCES: [(&str, f64); 9] = [
    ("cgm_relations", 1e-10),
    ("g_bar", 1e-10),
    ("nu_nustar", 1e-9),
    ("second_form", 1e-7),
    ("scal_bar", 1e-6),
    ("codazzi", 1e-7),
    ("simons", 1e-7),
    ("ch_pack", 1e-10),
    ("det_a", 1e-10),
];

fn as_array(p: &PointIdentities) -> [f64; 9] {
    [p.cgm_relations, p.g_bar, p.nu_nustar, p.second_form, p.scal_bar, p.codazzi, p.simons, p.ch_pack, p.det_a]
}

/// Run the suite at the given points. A failure at a point is reported with
/// its chart coordinates.
pub fn pointwise_suite(atlas: &SurfaceAtlas, points: &[(usize, [f64; NVARS])]) -> Result<PointwiseSuite> {
    let mut worst = [0.0f64; 9];
    for &(c, u) in points {
        let chart = atlas.charts.get(c).ok_or_else(|| GeomError::Validation(format!("no chart {c}")))?;
        let p = point_identities(chart, u).map_err(|e| GeomError::AtNode { chart: c, node: u, source: Box::new(e) })?;
        for (w, r) in worst.iter_mut().zip(as_array(&p)) {
            *w = w.max(r);
        }
    }
    let entries = SUITE_TOLERANCES
        .iter()
        .zip(worst)
        .map(|(&(name, tol), r)| SuiteEntry { name: name.to_string(), max_residual: r, tolerance: tol, pass: r <= tol })
        .collect();
    Ok(PointwiseSuite { surface: atlas.name.clone(), points: points.len(), entries })
}
