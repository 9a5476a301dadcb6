//! Integrands and global values of E_GR, E_P, 𝒫 and 𝒮, Gauss–Bonnet, and the
//! integral identities relating them.

use std::f64::consts::PI;

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use crate::cgm::{cgm_basic, cgm_jets, mv_grad, mv_hess, second_form_y, CgmFrame};
use crate::error::{GeomError, Result};
use crate::geometry::{Depth, JetGeometry, ShapeData};
use crate::minkowski::{eta_dot, MinkowskiVec};
use crate::surfaces::{integrate_many, make_surface, Node, SurfaceAtlas, SurfaceKind, SurfaceSpec};
use crate::traceless::TracelessPair;

/// Both displayed forms of the E_GR density.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EgrIntegrand {
    /// `|∇H|² − H²|Å|² + 3H⁴`.
    pub traceless_form: f64,
    /// `|∇H|² − H²|A|² + 7H⁴`.
    pub full_form: f64,
}

impl EgrIntegrand {
    pub fn value(&self) -> f64 {
        self.traceless_form
    }

    pub fn discrepancy(&self) -> f64 {
        (self.traceless_form - self.full_form).abs()
            / self.traceless_form.abs().max(self.full_form.abs()).max(1e-300)
    }
}

pub fn egr_integrand(sd: &ShapeData) -> Result<EgrIntegrand> {
    let dh2 = sd
        .grad_h_norm2()
        .ok_or_else(|| GeomError::Domain("E_GR density needs ∇H (order ≥ 3 jet)".into()))?;
    let h2 = sd.h * sd.h;
    Ok(EgrIntegrand {
        traceless_form: dh2 - h2 * sd.norm2(&sd.a_ring) + 3.0 * h2 * h2,
        full_form: dh2 - h2 * sd.norm2(&sd.a) + 7.0 * h2 * h2,
    })
}

/// `⟨Y, P_gY⟩` density in closed form and, when available, from raw jets of Y.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpIntegrand {
    /// `4|∇H|² + ⅓|Å|⁴ + 2H²|Å|² − 4H trÅ³ + 2trÅ⁴`.
    pub closed_form: f64,
    /// `|ΔY|² + ⅔Scal|∇Y|² − 2Ric(∇Y,∇Y)`.
    pub raw_form: Option<f64>,
    /// `|ΔY|²_η` from jets, to compare with `4|∇H|² + |Å|⁴`.
    pub lap_y2: Option<f64>,
}

pub fn ep_closed(sd: &ShapeData) -> Result<f64> {
    let dh2 = sd
        .grad_h_norm2()
        .ok_or_else(|| GeomError::Domain("Paneitz density needs ∇H (order ≥ 3 jet)".into()))?;
    let p = TracelessPair::new(sd.g, sd.a_ring).ch_pack();
    let h = sd.h;
    Ok(4.0 * dh2 + p.tr2 * p.tr2 / 3.0 + 2.0 * h * h * p.tr2 - 4.0 * h * p.tr3 + 2.0 * p.tr4)
}

/// `Δ_g Y` from the jets of Y; needs an order ≥ 4 chart jet.
pub fn laplacian_y(jg: &JetGeometry) -> Result<MinkowskiVec> {
    if jg.order < 4 {
        return Err(GeomError::Domain("Δ_g Y needs an order ≥ 4 jet".into()));
    }
    let cj = cgm_jets(jg);
    let dy = mv_grad(&cj.y);
    let ddy = mv_hess(&cj.y);
    let mut out = MinkowskiVec::zeros();
    for i in 0..4 {
        for j in 0..4 {
            let gij = jg.g_inv[i][j].value();
            let mut v = ddy[i][j];
            for k in 0..4 {
                v -= jg.gamma[k][i][j].value() * dy[k];
            }
            out += gij * v;
        }
    }
    Ok(out)
}

pub fn ep_integrand(sd: &ShapeData, frame: &CgmFrame, jg: &JetGeometry) -> Result<EpIntegrand> {
    let closed_form = ep_closed(sd)?;
    if jg.order < 4 {
        return Ok(EpIntegrand { closed_form, raw_form: None, lap_y2: None });
    }
    let ly = laplacian_y(jg)?;
    let lap_y2 = eta_dot(&ly, &ly);
    let gi = &sd.g_inv;
    let grad_y2 = (gi * frame.g_bar).trace();
    let ric_yy = (gi * sd.ric * gi * frame.g_bar).trace();
    let raw = lap_y2 + 2.0 * sd.scal / 3.0 * grad_y2 - 2.0 * ric_yy;
    Ok(EpIntegrand { closed_form, raw_form: Some(raw), lap_y2: Some(lap_y2) })
}

/// Densities accumulated in a single pass over the quadrature nodes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Densities {
    pub volume: f64,
    pub egr: f64,
    pub egr_full: f64,
    pub ep_closed: f64,
    pub ep_raw: f64,
    pub paneitz_functional: f64,
    pub det_a_full: f64,
    pub det_a_ring: f64,
    pub grad_h2: f64,
    pub grad_a_ring2: f64,
    pub h2_a2: f64,
    pub h_tr3: f64,
    pub a4: f64,
    pub ep_bound: f64,
    /// `|det Å|`, the density of `dvol_ḡ`.
    pub vol_bar: f64,
    /// `Scal_ḡ |det Å|`.
    pub scal_bar_vol: f64,
    /// Volume where `det Å > 0`.
    pub positive: f64,
    /// Volume where `det Å < 0`.
    pub negative: f64,
    /// Volume of nodes where the dual frame or ḡ is unavailable.
    pub umbilic: f64,
}

const N_DENS: usize = 19;

impl Densities {
    fn to_vec(self) -> Vec<f64> {
        vec![
            self.volume,
            self.egr,
            self.egr_full,
            self.ep_closed,
            self.ep_raw,
            self.paneitz_functional,
            self.det_a_full,
            self.det_a_ring,
            self.grad_h2,
            self.grad_a_ring2,
            self.h2_a2,
            self.h_tr3,
            self.a4,
            self.ep_bound,
            self.vol_bar,
            self.scal_bar_vol,
            self.positive,
            self.negative,
            self.umbilic,
        ]
    }

    fn from_vec(v: &[f64]) -> Self {
        Densities {
            volume: v[0],
            egr: v[1],
            egr_full: v[2],
            ep_closed: v[3],
            ep_raw: v[4],
            paneitz_functional: v[5],
            det_a_full: v[6],
            det_a_ring: v[7],
            grad_h2: v[8],
            grad_a_ring2: v[9],
            h2_a2: v[10],
            h_tr3: v[11],
            a4: v[12],
            ep_bound: v[13],
            vol_bar: v[14],
            scal_bar_vol: v[15],
            positive: v[16],
            negative: v[17],
            umbilic: v[18],
        }
    }
}

/// All densities at one node. With `with_scal_bar` the chart jet must have
/// order ≥ 4; nodes where ḡ degenerates are counted in `umbilic`.
pub fn node_densities(node: &Node, with_scal_bar: bool) -> Result<Densities> {
    let jg = JetGeometry::new(node.jet, node.orientation)?;
    let sd = ShapeData::from_jets(&jg, Depth::WithDerivatives)?;
    let mut frame = cgm_basic(&jg)?;
    let e = egr_integrand(&sd)?;
    let ep = ep_integrand(&sd, &frame, &jg)?;
    let p = frame.pack;
    let h = sd.h;
    let degenerate = p.tr2 <= 1e-16 * sd.norm2(&sd.a) || TracelessPair::new(sd.g, sd.a_ring).is_singular();
    let dh2 = sd.grad_h_norm2().unwrap_or(0.0);
    let det_a_full = (sd.g_inv * sd.a).determinant();
    let mut d = Densities {
        volume: 1.0,
        egr: e.traceless_form,
        egr_full: e.full_form,
        ep_closed: ep.closed_form,
        ep_raw: ep.raw_form.unwrap_or(f64::NAN),
        paneitz_functional: 0.25 * (ep.closed_form - 4.0 / 3.0 * p.tr2 * p.tr2 - 4.0 * p.det),
        det_a_full,
        det_a_ring: p.det,
        grad_h2: dh2,
        grad_a_ring2: sd.nabla_a_ring_norm2().unwrap_or(0.0),
        h2_a2: h * h * p.tr2,
        h_tr3: h * p.tr3,
        a4: p.tr2 * p.tr2,
        ep_bound: 4.0 * dh2 + p.tr2 * p.tr2 / 3.0,
        vol_bar: p.det.abs(),
        scal_bar_vol: 0.0,
        positive: if !degenerate && p.det > 0.0 { 1.0 } else { 0.0 },
        negative: if !degenerate && p.det < 0.0 { 1.0 } else { 0.0 },
        umbilic: if degenerate { 1.0 } else { 0.0 },
    };
    if with_scal_bar && !degenerate {
        match second_form_y(&mut frame, &jg) {
            Ok(()) => d.scal_bar_vol = frame.second.as_ref().unwrap().scal_bar * p.det.abs(),
            Err(GeomError::Singular { .. }) | Err(GeomError::Degeneracy(_)) => d.umbilic = 1.0,
            Err(e) => return Err(e),
        }
    }
    Ok(d)
}

/// Integrated densities at a level.
pub fn integrate_densities(atlas: &SurfaceAtlas, level: usize, with_scal_bar: bool) -> Result<Densities> {
    let order = if with_scal_bar { 4 } else { 3 };
    let v = integrate_many(atlas, level, order, N_DENS, |node| {
        node_densities(node, with_scal_bar).map(Densities::to_vec)
    })?;
    Ok(Densities::from_vec(&v))
}

/// Value of one functional with its refinement estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionalValue {
    pub value: f64,
    pub level: usize,
    /// `|I(level) − I(level−1)|`.
    pub convergence: Option<f64>,
}

fn fv(level: usize, cur: f64, prev: Option<f64>) -> FunctionalValue {
    FunctionalValue { value: cur, level, convergence: prev.map(|p| (cur - p).abs()) }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityResiduals {
    /// `|E_GR − 4π²χ − 𝒫|` relative to the largest term.
    pub duality_p: Option<f64>,
    /// `|E_GR − 4π²χ − 𝒮|` relative to the largest term.
    pub duality_s: Option<f64>,
    /// `|∫det A − (4π²/3)χ| / max(1, vol)`.
    pub gauss_bonnet: Option<f64>,
    pub grad_h_identity: Option<f64>,
    pub scal_bar_integral: Option<f64>,
    /// `|E_P(closed) − E_P(raw)|` relative to `max(|E_P|, vol)`.
    pub ep_forms: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub surface: String,
    pub level: usize,
    pub euler_characteristic: Option<i32>,
    pub volume: f64,
    pub e_gr: FunctionalValue,
    pub e_p: FunctionalValue,
    pub paneitz: FunctionalValue,
    /// Absent when the surface has umbilic points or det Å changes sign.
    pub scal_functional: Option<FunctionalValue>,
    /// `(ε/2)∫(6(2−ε) − Scal_ḡ) dvol_ḡ`, which differs from 𝒮 when ε = −1.
    pub scal_functional_display: Option<f64>,
    pub det_a_integral: FunctionalValue,
    pub ep_lower_bound: f64,
    pub residuals: IdentityResiduals,
    pub umbilic_free: bool,
    pub epsilon: Option<f64>,
    /// Why 𝒮 is absent, if it is.
    pub scal_functional_note: Option<String>,
}

fn rel(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

/// `Σ ε`: sign of det Å when constant over the grid, with the region volumes.
fn epsilon_of(d: &Densities) -> Option<f64> {
    if d.umbilic > 0.0 {
        return None;
    }
    match (d.positive > 0.0, d.negative > 0.0) {
        (true, false) => Some(1.0),
        (false, true) => Some(-1.0),
        _ => None,
    }
}

/// `𝒮 = (ε/2)∫(6 − Scal_ḡ) dvol_ḡ` from integrated densities.
///
/// Combining the integral formula for `Scal_ḡ` with the expansion of `det A`
/// gives `∫Scal_ḡ dvol_ḡ − 6ε∫det A = 6vol_ḡ − 2εE_GR` for either sign of ε,
/// since `ε det Å = |det Å|`. The constant `6(2−ε)` agrees with 6 only when
/// ε = 1; that variant is kept as [`scal_functional_display`].
fn scal_functional(d: &Densities, eps: f64) -> f64 {
    0.5 * eps * (6.0 * d.vol_bar - d.scal_bar_vol)
}

/// `(ε/2)∫(6(2−ε) − Scal_ḡ) dvol_ḡ`, equal to 𝒮 when ε = 1.
pub fn scal_functional_display(vol_bar: f64, scal_bar_vol: f64, eps: f64) -> f64 {
    0.5 * eps * (6.0 * (2.0 - eps) * vol_bar - scal_bar_vol)
}

/// Right side of the integral identity for `∫ Scal_ḡ dvol_ḡ`.
fn scal_bar_identity_rhs(d: &Densities, eps: f64) -> f64 {
    12.0 * d.vol_bar - eps * (2.0 * d.grad_h2 + d.h2_a2 - 2.0 * d.h_tr3)
}

/// `(1/12)∫(|∇Å|² + 4H²|Å|² + 4H trÅ³ − |Å|⁴)`.
fn grad_h_identity_rhs(d: &Densities) -> f64 {
    (d.grad_a_ring2 + 4.0 * d.h2_a2 + 4.0 * d.h_tr3 - d.a4) / 12.0
}

/// E_GR, E_P, 𝒫, `∫det A` and, when requested and defined, 𝒮 at one level.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionalSet {
    pub e_gr: f64,
    pub e_p: f64,
    pub paneitz: f64,
    pub scal_functional: Option<f64>,
    pub det_a: f64,
}

pub fn functional_set(atlas: &SurfaceAtlas, level: usize, with_scal: bool) -> Result<FunctionalSet> {
    let d = integrate_densities(atlas, level, with_scal)?;
    let scal_functional = if with_scal && atlas.closed { epsilon_of(&d).map(|e| scal_functional(&d, e)) } else { None };
    Ok(FunctionalSet { e_gr: d.egr, e_p: d.ep_closed, paneitz: d.paneitz_functional, scal_functional, det_a: d.det_a_full })
}

/// Whether to evaluate 𝒮, which needs order-4 jets and an umbilic-free surface.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalRequest {
    Off,
    /// Evaluate when the hypotheses hold, otherwise record why not.
    IfDefined,
    /// Fail with an unsupported-hypothesis error when they do not hold.
    Required,
}

/// Compute every functional and identity residual at `level` (and `level−1`
/// for convergence estimates). Requesting 𝒮 also enables its integral
/// identity and the raw Paneitz route.
pub fn functional_values(atlas: &SurfaceAtlas, level: usize, scal: ScalRequest) -> Result<EnergyReport> {
    let with_scal_bar = scal != ScalRequest::Off;
    let d = integrate_densities(atlas, level, with_scal_bar)?;
    let prev = if level > 0 { Some(integrate_densities(atlas, level - 1, with_scal_bar)?) } else { None };
    let chi = atlas.euler_characteristic;
    let closed = atlas.closed;
    let eps = epsilon_of(&d);
    let umbilic_free = d.umbilic == 0.0 && (d.positive == 0.0 || d.negative == 0.0);
    let p_val = d.paneitz_functional;
    if scal == ScalRequest::Required {
        if !closed {
            return Err(GeomError::Unsupported("𝒮 needs a closed surface".into()));
        }
        if eps.is_none() {
            return Err(GeomError::Unsupported("𝒮 needs det Å ≠ 0 with constant sign on the surface".into()));
        }
    }
    let mut note = None;
    let s_val = if !with_scal_bar {
        note = Some("not requested".to_string());
        None
    } else if !closed {
        note = Some("surface is not closed".to_string());
        None
    } else if let Some(e) = eps {
        Some(fv(level, scal_functional(&d, e), prev.as_ref().and_then(|p| epsilon_of(p).map(|e| scal_functional(p, e)))))
    } else {
        note = Some("det Å vanishes or changes sign on the surface".to_string());
        None
    };
    let topo = chi.map(|c| 4.0 * PI * PI * c as f64);
    let duality = |other: f64| -> Option<f64> {
        let t = topo?;
        if !closed {
            return None;
        }
        Some((d.egr - t - other).abs() / d.egr.abs().max(other.abs()).max(t.abs()).max(1e-300))
    };
    let residuals = IdentityResiduals {
        duality_p: duality(p_val),
        duality_s: s_val.and_then(|s| duality(s.value)),
        gauss_bonnet: chi
            .filter(|_| closed)
            .map(|c| (d.det_a_full - 4.0 * PI * PI / 3.0 * c as f64).abs() / d.volume.max(1.0)),
        grad_h_identity: closed.then(|| {
            let rhs = grad_h_identity_rhs(&d);
            rel(d.grad_h2, rhs, d.volume)
        }),
        scal_bar_integral: if closed && with_scal_bar {
            eps.map(|e| rel(d.scal_bar_vol, scal_bar_identity_rhs(&d, e), d.vol_bar.max(1e-300)))
        } else {
            None
        },
        ep_forms: with_scal_bar.then(|| (d.ep_closed - d.ep_raw).abs() / d.ep_closed.abs().max(d.volume)),
    };
    let pv = prev.as_ref();
    Ok(EnergyReport {
        surface: atlas.name.clone(),
        level,
        euler_characteristic: chi,
        volume: d.volume,
        e_gr: fv(level, d.egr, pv.map(|p| p.egr)),
        e_p: fv(level, d.ep_closed, pv.map(|p| p.ep_closed)),
        paneitz: fv(level, p_val, pv.map(|p| p.paneitz_functional)),
        scal_functional: s_val,
        scal_functional_display: s_val.and(eps).map(|e| scal_functional_display(d.vol_bar, d.scal_bar_vol, e)),
        det_a_integral: fv(level, d.det_a_full, pv.map(|p| p.det_a_full)),
        ep_lower_bound: d.ep_bound,
        residuals,
        umbilic_free,
        epsilon: eps,
        scal_functional_note: note,
    })
}

/// `|∫|∇H|² − (1/12)∫(|∇Å|² + 4H²|Å|² + 4H trÅ³ − |Å|⁴)|` relative to
/// `max(|LHS|, |RHS|, vol)`.
pub fn grad_h_identity_residual(atlas: &SurfaceAtlas, level: usize) -> Result<f64> {
    if !atlas.closed {
        return Err(GeomError::Unsupported("integral identity needs a closed surface".into()));
    }
    let d = integrate_densities(atlas, level, false)?;
    Ok(rel(d.grad_h2, grad_h_identity_rhs(&d), d.volume))
}

/// Residual of `∫Scal_ḡ dvol_ḡ = 12vol_ḡ − ε∫(2|∇H|² + H²|Å|² − 2H trÅ³)`,
/// relative to `max(|LHS|, |RHS|, vol_ḡ)`.
pub fn scal_bar_integral_residual(atlas: &SurfaceAtlas, level: usize) -> Result<f64> {
    if !atlas.closed {
        return Err(GeomError::Unsupported("integral identity needs a closed surface".into()));
    }
    let d = integrate_densities(atlas, level, true)?;
    let eps = epsilon_of(&d).ok_or_else(|| {
        GeomError::Unsupported("det Å must be nonzero with constant sign on the surface".into())
    })?;
    Ok(rel(d.scal_bar_vol, scal_bar_identity_rhs(&d, eps), d.vol_bar))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpBound {
    pub e_p: f64,
    /// `∫ 4|∇H|² + ⅓|Å|⁴`.
    pub lower_bound: f64,
}

pub fn ep_lower_bound_check(atlas: &SurfaceAtlas, level: usize) -> Result<EpBound> {
    if !atlas.closed {
        return Err(GeomError::Unsupported("E_P lower bound needs a closed surface".into()));
    }
    let d = integrate_densities(atlas, level, false)?;
    Ok(EpBound { e_p: d.ep_closed, lower_bound: d.ep_bound })
}

/// `∫ E_GR density` over the patch `[0,L]² × 𝕊²`.
pub fn neck_scaling(l: f64, level: usize) -> Result<f64> {
    if !(l > 0.0) {
        return Err(GeomError::Validation("L must be positive".into()));
    }
    let atlas = make_surface(&SurfaceSpec::new(SurfaceKind::PatchR2xS2 { side: l }))?;
    Ok(integrate_densities(&atlas, level, false)?.egr)
}

/// Max over nodes of `|E_GR density + 1/16|` on the `[0,L]² × 𝕊²` patch.
pub fn neck_density_deviation(l: f64, level: usize) -> Result<f64> {
    let atlas = make_surface(&SurfaceSpec::new(SurfaceKind::PatchR2xS2 { side: l }))?;
    let grid = crate::surfaces::quadrature_grid(&atlas, level);
    let c = &atlas.charts[0];
    let mut worst = 0.0f64;
    for k in 0..grid.charts[0].len() {
        let (u, _) = grid.charts[0].node(k);
        let jet = crate::chart::chart_jet(c, u, 3)?;
        let sd = crate::geometry::shape_data(&jet, c.orientation, Depth::WithDerivatives)?;
        worst = worst.max((egr_integrand(&sd)?.value() + 1.0 / 16.0).abs());
    }
    Ok(worst)
}

/// `|Å|²_g` convenience for a lower-index traceless form.
pub fn a_ring_norm2(g_inv: &Matrix4<f64>, a_ring: &Matrix4<f64>) -> f64 {
    (g_inv * a_ring * g_inv * a_ring).trace()
}
