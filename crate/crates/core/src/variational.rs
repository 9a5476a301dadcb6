//! Euler–Lagrange machinery for 𝒮 and 𝒫: the G-vector and pointwise relation
//! for 𝒮, the fields E_Y, V and C_Y of 𝒫, the identities they satisfy for every
//! immersion, and checks on variations through conformal Gauss maps.
//!
//! Everything here is computed from chart jets so that the displays can be
//! differentiated exactly; the sixth-order quantities need order-6 jets.

use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::cgm::{cgm_basic, dual_null_frame, g_bar_jets, mv_value};
use crate::chart::{chart_jet, ChartMap};
use crate::error::{GeomError, Result};
use crate::geometry::{
    christoffel_from_metric, jmat_det, jmat_inverse, jmat_mul, jmat_sym, jmat_value, ricci_jets,
    trace_g, JGamma, JMat, JetGeometry,
};
use crate::jet::{self, Jet, Jet4, NVARS};
use crate::minkowski::{eta_dot, eta_dot_jet, wedge, Mat7, MinkowskiVec, WedgeMatrix};
use crate::surfaces::{integrate_many, Node, SurfaceAtlas};
use crate::traceless::TracelessPair;

/// Jet-valued vector of ℝ^{6,1}.
pub type MvJet = [Jet; 7];

fn mv_scale(v: &MvJet, s: &Jet) -> MvJet {
    std::array::from_fn(|a| &v[a] * s)
}

fn mv_sub(a: &MvJet, b: &MvJet) -> MvJet {
    std::array::from_fn(|i| &a[i] - &b[i])
}

fn mv_deriv(v: &MvJet, i: usize) -> MvJet {
    std::array::from_fn(|a| v[a].deriv(i))
}

fn mv_sum(terms: &[MvJet]) -> MvJet {
    std::array::from_fn(|a| jet::sum(terms.iter().map(|t| &t[a])))
}

fn mv_apply(m: &Mat7, v: &MvJet) -> MvJet {
    std::array::from_fn(|a| {
        let t: Vec<Jet> = (0..7).map(|b| v[b].scale(m[(a, b)])).collect();
        jet::sum(&t)
    })
}

fn contract_up(m: &JMat, x: &[MvJet; 4]) -> [MvJet; 4] {
    std::array::from_fn(|k| {
        let t: Vec<MvJet> = (0..4).map(|l| mv_scale(&x[l], &m[k][l])).collect();
        mv_sum(&t)
    })
}

/// Scalar fields used as variation speeds, test functions and coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScalarField {
    Constant { value: f64 },
    /// `⟨coeffs, Φ⟩ + offset`, a restriction of an affine function of ℝ⁵.
    Linear { coeffs: [f64; 5], offset: f64 },
    /// `amplitude · sin(frequency · u_axis)` in chart coordinates.
    ChartSine { axis: usize, frequency: f64, amplitude: f64 },
}

impl ScalarField {
    pub fn jet(&self, u: [f64; NVARS], phi: &[Jet; 5], order: usize) -> Result<Jet> {
        Ok(match self {
            ScalarField::Constant { value } => Jet::constant(*value, order),
            ScalarField::Linear { coeffs, offset } => {
                let t: Vec<Jet> = (0..5).map(|a| phi[a].truncate(order).scale(coeffs[a])).collect();
                jet::sum(&t).add_scalar(*offset)
            }
            ScalarField::ChartSine { axis, frequency, amplitude } => {
                if *axis >= NVARS {
                    return Err(GeomError::Validation(format!("chart axis {axis} out of range")));
                }
                Jet::variable(u[*axis], *axis, order).scale(*frequency).sin().scale(*amplitude)
            }
        })
    }
}

/// Jets of Y, ν and the intrinsic curvature of g at one point.
#[derive(Clone, Debug)]
pub struct ElJets {
    pub jg: JetGeometry,
    pub y: MvJet,
    pub nu: MvJet,
    /// `|Å|²_g = |∇Y|²_{g,η}`.
    pub a2: Jet,
    /// `det_g Å`.
    pub det_a: Jet,
    /// `Ric_g = 4H A − A g⁻¹ A`.
    pub ric: JMat,
    pub scal: Jet,
    /// `g⁻¹Å` as jets.
    pub shape: JMat,
}

impl ElJets {
    pub fn new(phi: &Jet4, orientation: f64) -> Result<Self> {
        if phi.order() < 4 {
            return Err(GeomError::Domain("Euler–Lagrange fields need an order ≥ 4 jet".into()));
        }
        let jg = JetGeometry::new(phi, orientation)?;
        let cj = crate::cgm::cgm_jets(&jg);
        let shape = jmat_mul(&jg.g_inv, &jg.a_ring);
        let sq = jmat_mul(&shape, &shape);
        let a2 = jet::sum((0..4).map(|i| &sq[i][i]));
        let det_a = jmat_det(&shape);
        let ag = jmat_mul(&jg.a, &jg.g_inv);
        let aga = jmat_mul(&ag, &jg.a);
        let ric = jmat_sym(|i, j| (&jg.h * &jg.a[i][j]).scale(4.0) - &aga[i][j]);
        let scal = trace_g(&jg.g_inv, &ric);
        Ok(ElJets { y: cj.y, nu: cj.nu, a2, det_a, ric, scal, shape, jg })
    }

    /// `(∇^g v)^k = g^{kl} ∂_l v`.
    pub fn grad_up(&self, v: &MvJet) -> [MvJet; 4] {
        let d: [MvJet; 4] = std::array::from_fn(|l| mv_deriv(v, l));
        contract_up(&self.jg.g_inv, &d)
    }

    /// `div_g X = ∂_k X^k + Γ^k_kl X^l` for an ℝ^{6,1}-valued vector field.
    pub fn div(&self, x: &[MvJet; 4]) -> MvJet {
        let mut terms = Vec::with_capacity(8);
        for k in 0..4 {
            terms.push(mv_deriv(&x[k], k));
            let tr: Vec<Jet> = (0..4).map(|m| self.jg.gamma[m][m][k].clone()).collect();
            terms.push(mv_scale(&x[k], &jet::sum(&tr)));
        }
        mv_sum(&terms)
    }

    pub fn div_scalar(&self, x: &[Jet; 4]) -> Jet {
        let mut terms = Vec::with_capacity(8);
        for k in 0..4 {
            terms.push(x[k].deriv(k));
            let tr: Vec<Jet> = (0..4).map(|m| self.jg.gamma[m][m][k].clone()).collect();
            terms.push(&x[k] * &jet::sum(&tr));
        }
        jet::sum(&terms)
    }

    pub fn lap(&self, v: &MvJet) -> MvJet {
        self.div(&self.grad_up(v))
    }

    pub fn lap_scalar(&self, f: &Jet) -> Jet {
        self.jg.laplacian(f)
    }

    /// `(∇^g f)^k` for a scalar jet.
    pub fn grad_up_scalar(&self, f: &Jet) -> [Jet; 4] {
        std::array::from_fn(|k| jet::sum((0..4).map(|l| &self.jg.g_inv[k][l] * &f.deriv(l)).collect::<Vec<_>>().iter()))
    }

    /// Whether Å is invertible here.
    pub fn umbilic_free(&self) -> bool {
        !TracelessPair::new(jmat_value(&self.jg.g), jmat_value(&self.jg.a_ring)).is_singular()
    }

    pub fn epsilon(&self) -> f64 {
        self.det_a.value().signum()
    }
}

/// Jets of the induced geometry of Y: ḡ, its Levi-Civita connection, the
/// second fundamental form `B_ij = ∇̄²_ij Y + ḡ_ij Y` and its curvature.
#[derive(Clone, Debug)]
pub struct BarJets {
    pub g_bar: JMat,
    pub g_bar_inv: JMat,
    pub gamma_bar: JGamma,
    pub b: [[MvJet; 4]; 4],
    /// `¼ ḡ^{ij} B_ij`.
    pub b_vec: MvJet,
    pub ric_bar: JMat,
    pub scal_bar: Jet,
}

pub fn bar_jets(el: &ElJets) -> Result<BarJets> {
    if !el.umbilic_free() {
        return Err(GeomError::Singular { det: el.det_a.value() });
    }
    let dy: [MvJet; 4] = std::array::from_fn(|i| mv_deriv(&el.y, i));
    // `Åg⁻¹Å` keeps one more order than `⟨∂Y, ∂Y⟩`.
    let g_bar = g_bar_jets(&el.jg);
    let (g_bar_inv, _) = jmat_inverse(&g_bar)?;
    let gamma_bar = christoffel_from_metric(&g_bar, &g_bar_inv);
    let (ric_bar, scal_bar) = ricci_jets(&g_bar_inv, &gamma_bar);
    let mut b: [[MvJet; 4]; 4] = std::array::from_fn(|_| std::array::from_fn(|_| el.y.clone()));
    for i in 0..4 {
        for j in i..4 {
            let mut terms = vec![mv_deriv(&dy[i], j), mv_scale(&el.y, &g_bar[i][j])];
            for k in 0..4 {
                terms.push(mv_scale(&dy[k], &(-&gamma_bar[k][i][j])));
            }
            b[i][j] = mv_sum(&terms);
            b[j][i] = b[i][j].clone();
        }
    }
    let bv: Vec<MvJet> = (0..16).map(|k| mv_scale(&b[k / 4][k % 4], &g_bar_inv[k / 4][k % 4])).collect();
    let b_vec = mv_sum(&bv).map(|x| x.scale(0.25));
    Ok(BarJets { g_bar, g_bar_inv, gamma_bar, b, b_vec, ric_bar, scal_bar })
}

/// Constant in `Scal_ḡ/2 − κ` multiplying b⃗ in G.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalConstant {
    /// κ = 3, the variation of `(ε/2)∫(6 − Scal_ḡ)dvol_ḡ`.
    Derived,
    /// κ = 3(2−ε), as displayed alongside 𝒮.
    Displayed,
}

impl ScalConstant {
    pub fn kappa(self, eps: f64) -> f64 {
        match self {
            ScalConstant::Derived => 3.0,
            ScalConstant::Displayed => 3.0 * (2.0 - eps),
        }
    }
}

/// `G = −⟨Ric_ḡ, B⟩_ḡ + 4(Scal_ḡ/2 − κ) b⃗` as jets.
pub fn g_vector_jets(bar: &BarJets, kappa: f64) -> MvJet {
    let r_up = jmat_mul(&jmat_mul(&bar.g_bar_inv, &bar.ric_bar), &bar.g_bar_inv);
    let mut terms: Vec<MvJet> = (0..16).map(|k| mv_scale(&bar.b[k / 4][k % 4], &(-&r_up[k / 4][k % 4]))).collect();
    let c = (bar.scal_bar.scale(0.5)).add_scalar(-kappa).scale(4.0);
    terms.push(mv_scale(&bar.b_vec, &c));
    mv_sum(&terms)
}

/// Values and consistency checks of the G-vector at one point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GVectorReport {
    pub g: [f64; 7],
    pub epsilon: f64,
    pub kappa: f64,
    /// `⟨ν, G⟩_η` from the vector.
    pub nu_g: f64,
    /// `−⟨Ric_ḡ, Å⟩_ḡ + tr_ḡ(Å)(Scal_ḡ/2 − κ)`.
    pub nu_g_formula: f64,
    /// The same with `+⟨Ric_ḡ, Å⟩_ḡ`.
    pub nu_g_formula_plus: f64,
    /// `max_i |⟨G, ∂_iY⟩| / (|G|_e |∂_iY|_e)`.
    pub tangency: f64,
    /// `|⟨G, Y⟩| / |G|_e`.
    pub y_component: f64,
    /// `tr_ḡ Å` by contraction.
    pub trace_bar: f64,
    /// `tr_g Å³ / (3 det_g Å)`.
    pub trace_bar_closed: f64,
}

impl GVectorReport {
    pub fn formula_residual(&self) -> f64 {
        rel(self.nu_g, self.nu_g_formula)
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

pub fn g_vector(el: &ElJets, constant: ScalConstant) -> Result<GVectorReport> {
    if el.jg.order < 4 {
        return Err(GeomError::Domain("G needs an order ≥ 4 jet".into()));
    }
    let bar = bar_jets(el)?;
    let eps = el.epsilon();
    let kappa = constant.kappa(eps);
    let g = mv_value(&g_vector_jets(&bar, kappa));
    let nu = mv_value(&el.nu);
    let y = mv_value(&el.y);
    let gbi = jmat_value(&bar.g_bar_inv);
    let ric = jmat_value(&bar.ric_bar);
    let a = jmat_value(&el.jg.a_ring);
    let ric_a = (gbi * ric * gbi * a).trace();
    let t = (gbi * a).trace();
    let sc = bar.scal_bar.value();
    let ge = g.norm().max(1e-300);
    let tangency = (0..4)
        .map(|i| {
            let d = MinkowskiVec::from_fn(|a, _| el.y[a].d(i));
            eta_dot(&g, &d).abs() / (ge * d.norm().max(1e-300))
        })
        .fold(0.0, f64::max);
    let s = jmat_value(&el.shape);
    let tr3 = (s * s * s).trace();
    Ok(GVectorReport {
        g: g.into(),
        epsilon: eps,
        kappa,
        nu_g: eta_dot(&nu, &g),
        nu_g_formula: -ric_a + t * (sc / 2.0 - kappa),
        nu_g_formula_plus: ric_a + t * (sc / 2.0 - kappa),
        tangency,
        y_component: eta_dot(&g, &y).abs() / ge,
        trace_bar: t,
        trace_bar_closed: tr3 / (3.0 * el.det_a.value()),
    })
}

/// The four terms of the pointwise relation for critical points of 𝒮.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElSReport {
    pub terms: [f64; 4],
    /// `|Σ terms|`.
    pub residual: f64,
    /// `Σ |terms|`, for normalization.
    pub scale: f64,
}

/// Evaluate the displayed four-term Euler–Lagrange expression of 𝒮; needs
/// order-6 jets. The third term is taken as displayed, without a `det Å` factor.
pub fn el_residual_s(el: &ElJets, constant: ScalConstant) -> Result<ElSReport> {
    if el.jg.order < 6 {
        return Err(GeomError::Domain("the pointwise relation for 𝒮 needs order-6 jets".into()));
    }
    let bar = bar_jets(el)?;
    let eps = el.epsilon();
    let gj = g_vector_jets(&bar, constant.kappa(eps));
    let mut frame = cgm_basic(&el.jg)?;
    dual_null_frame(&mut frame, &el.jg)?;
    let dual = frame.dual.as_ref().unwrap();
    let ns = dual.nu_star;
    let nu = &el.nu;
    let nu_g = eta_dot_jet(nu, &gj);
    let q = &el.det_a * &nu_g;
    let pair = dual.pairing();
    let gv = mv_value(&gj);
    let t1 = eps * (eta_dot(&ns, &gv) - pair / 4.0 * el.a2.value() * nu_g.value()) * el.det_a.value();
    let t2 = -0.25 * eta_dot(&mv_value(&el.lap(&mv_scale(nu, &q))), &ns);
    let gnu = el.grad_up(nu);
    let x3: [MvJet; 4] = std::array::from_fn(|k| mv_scale(&gnu[k], &nu_g));
    let t3 = 0.5 * eta_dot(&ns, &mv_value(&el.div(&x3)));
    // W_k = det Å ⟨ν,G⟩ Å_kl ḡ^{lm} ∂_m H ν, raised with g and differentiated.
    let dh: [Jet; 4] = std::array::from_fn(|m| el.jg.h.deriv(m));
    let bar_h: [Jet; 4] =
        std::array::from_fn(|l| jet::sum(&(0..4).map(|m| &bar.g_bar_inv[l][m] * &dh[m]).collect::<Vec<_>>()));
    let w: [Jet; 4] = std::array::from_fn(|k| {
        let s = jet::sum(&(0..4).map(|l| &el.jg.a_ring[k][l] * &bar_h[l]).collect::<Vec<_>>());
        &q * &s
    });
    let w_up: [MvJet; 4] = std::array::from_fn(|k| {
        let s = jet::sum(&(0..4).map(|j| &el.jg.g_inv[k][j] * &w[j]).collect::<Vec<_>>());
        mv_scale(nu, &s)
    });
    let t4 = -eta_dot(&mv_value(&el.div(&w_up)), &ns);
    let terms = [t1, t2, t3, t4];
    Ok(ElSReport {
        terms,
        residual: terms.iter().sum::<f64>().abs(),
        scale: terms.iter().map(|t| t.abs()).sum(),
    })
}

/// Sign convention for the `det Å` factor in front of b⃗ in E_Y.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BTermSign {
    /// `4|det Å| b⃗`, as displayed.
    Absolute,
    /// `4 det Å b⃗`, the variation of `−ε dvol_ḡ`. Agrees with a finite
    /// difference of the action; the two differ when ε = −1.
    #[default]
    Signed,
}

impl BTermSign {
    /// The factor multiplying `4b⃗`.
    pub fn factor(self, det_a: f64) -> f64 {
        match self {
            BTermSign::Absolute => det_a.abs(),
            BTermSign::Signed => det_a,
        }
    }

    /// Coefficient of `tr Å³` in `⟨ν,E_Y⟩` that this convention produces.
    pub fn ey_nu_coefficient(self, eps: f64) -> f64 {
        match self {
            BTermSign::Absolute => -4.0 + eps / 3.0,
            BTermSign::Signed => -4.0 + 1.0 / 3.0,
        }
    }
}

/// Pointwise values of E_Y, V, C_Y and their ingredients.
#[derive(Clone, Debug)]
pub struct EyField {
    pub y: MinkowskiVec,
    pub dy: [MinkowskiVec; 4],
    pub nu: MinkowskiVec,
    pub dnu: [MinkowskiVec; 4],
    pub g_inv: Matrix4<f64>,
    /// `E_Y = (16/3)Δ_{g,4}Y + 2P_gY + b_term`.
    pub e_y: MinkowskiVec,
    pub lap4: MinkowskiVec,
    pub paneitz: MinkowskiVec,
    /// `4|det Å| b⃗` (or `4 det Å b⃗`), zero where Å is singular.
    pub b_term: MinkowskiVec,
    /// `−2 div V + b_term`, the same field assembled from V.
    pub e_y_from_v: MinkowskiVec,
    /// `V^k`.
    pub v: [MinkowskiVec; 4],
    /// `(∇^ḡY)^k`, zero where Å is singular.
    pub grad_bar_y: [MinkowskiVec; 4],
    /// `(∇^gY)^k`.
    pub grad_y: [MinkowskiVec; 4],
    pub lap_y: MinkowskiVec,
    pub det_a: f64,
    pub tr3: f64,
    pub epsilon: f64,
    pub sign: BTermSign,
}

fn mv_vals(x: &[MvJet; 4]) -> [MinkowskiVec; 4] {
    std::array::from_fn(|k| mv_value(&x[k]))
}

/// Jets of `V^k` and of the pieces of E_Y.
struct EyJets {
    lap_y: MvJet,
    grad_y: [MvJet; 4],
    v: [MvJet; 4],
    lap4: MvJet,
    paneitz: MvJet,
    grad_bar_y: Option<[MvJet; 4]>,
    b_vec: Option<MvJet>,
}

fn ey_jets(el: &ElJets) -> Result<EyJets> {
    let grad_y = el.grad_up(&el.y);
    let lap_y = el.div(&grad_y);
    let grad_lap = el.grad_up(&lap_y);
    let ric_up = jmat_mul(&jmat_mul(&el.jg.g_inv, &el.ric), &el.jg.g_inv);
    let ric_grad: [MvJet; 4] = std::array::from_fn(|k| {
        let t: Vec<MvJet> = (0..4).map(|l| {
            let d = mv_deriv(&el.y, l);
            mv_scale(&d, &ric_up[k][l])
        }).collect();
        mv_sum(&t)
    });
    let s23 = el.scal.scale(2.0 / 3.0);
    let a83 = el.a2.scale(8.0 / 3.0);
    let v: [MvJet; 4] = std::array::from_fn(|k| {
        mv_sum(&[
            grad_lap[k].clone().map(|x| -x),
            mv_scale(&grad_y[k], &s23),
            ric_grad[k].clone().map(|x| x.scale(-2.0)),
            mv_scale(&grad_y[k], &(-&a83)),
        ])
    });
    let w4: [MvJet; 4] = std::array::from_fn(|k| mv_scale(&grad_y[k], &el.a2));
    let lap4 = el.div(&w4);
    let inner: [MvJet; 4] = std::array::from_fn(|k| {
        mv_sub(&mv_scale(&grad_y[k], &s23), &ric_grad[k].clone().map(|x| x.scale(2.0)))
    });
    let lap2 = el.lap(&lap_y);
    let paneitz = mv_sub(&lap2, &el.div(&inner));
    let (grad_bar_y, b_vec) = if el.umbilic_free() {
        let bar = bar_jets(el)?;
        let d: [MvJet; 4] = std::array::from_fn(|l| mv_deriv(&el.y, l));
        (Some(contract_up(&bar.g_bar_inv, &d)), Some(bar.b_vec))
    } else {
        (None, None)
    };
    Ok(EyJets { lap_y, grad_y, v, lap4, paneitz, grad_bar_y, b_vec })
}

/// E_Y and companions at one point; needs order-6 jets.
pub fn ey_field(el: &ElJets, sign: BTermSign) -> Result<EyField> {
    if el.jg.order < 6 {
        return Err(GeomError::Domain("E_Y needs order-6 jets (Δ²Y)".into()));
    }
    let j = ey_jets(el)?;
    let det = el.det_a.value();
    let factor = sign.factor(det);
    let b_term = j.b_vec.as_ref().map(|b| 4.0 * factor * mv_value(b)).unwrap_or_else(MinkowskiVec::zeros);
    let lap4 = mv_value(&j.lap4);
    let paneitz = mv_value(&j.paneitz);
    let div_v = mv_value(&el.div(&j.v));
    let s = jmat_value(&el.shape);
    Ok(EyField {
        y: mv_value(&el.y),
        dy: std::array::from_fn(|i| MinkowskiVec::from_fn(|a, _| el.y[a].d(i))),
        nu: mv_value(&el.nu),
        dnu: std::array::from_fn(|i| MinkowskiVec::from_fn(|a, _| el.nu[a].d(i))),
        g_inv: jmat_value(&el.jg.g_inv),
        e_y: 16.0 / 3.0 * lap4 + 2.0 * paneitz + b_term,
        lap4,
        paneitz,
        b_term,
        e_y_from_v: -2.0 * div_v + b_term,
        v: mv_vals(&j.v),
        grad_bar_y: j.grad_bar_y.as_ref().map(mv_vals).unwrap_or([MinkowskiVec::zeros(); 4]),
        grad_y: mv_vals(&j.grad_y),
        lap_y: mv_value(&j.lap_y),
        det_a: det,
        tr3: (s * s * s).trace(),
        epsilon: det.signum(),
        sign,
    })
}

impl EyField {
    /// `max_i |⟨∂_iY, E_Y⟩| / (|∂_iY|_e |E_Y|_e)`.
    pub fn tangent_residual(&self) -> f64 {
        let e = self.e_y.norm();
        if e == 0.0 {
            return 0.0;
        }
        (0..4)
            .map(|i| eta_dot(&self.dy[i], &self.e_y).abs() / (self.dy[i].norm().max(1e-300) * e))
            .fold(0.0, f64::max)
    }

    /// Largest `|⟨∂_iY, E_Y⟩|` without normalization.
    pub fn tangent_components(&self) -> [f64; 4] {
        std::array::from_fn(|i| eta_dot(&self.dy[i], &self.e_y))
    }

    /// Noether current `C_Y = Y∧(2V − δ∇^ḡY) + 2∇^gY∧ΔY`, one wedge per vector
    /// index, with δ the b⃗ factor of this field (`det Å` or `|det Å|`).
    pub fn c_y(&self) -> [WedgeMatrix; 4] {
        let d = self.sign.factor(self.det_a);
        std::array::from_fn(|k| {
            wedge(&self.y, &(2.0 * self.v[k] - d * self.grad_bar_y[k])) + wedge(&self.grad_y[k], &(2.0 * self.lap_y))
        })
    }

    /// `C_Y` paired with a generator: `⟨ṀY, 2V − δ∇^ḡY⟩ + 2⟨Ṁ∇^gY, ΔY⟩`.
    pub fn c_y_paired(&self, mdot: &Mat7) -> Vector4<f64> {
        let d = self.sign.factor(self.det_a);
        Vector4::from_fn(|k, _| {
            eta_dot(&(mdot * self.y), &(2.0 * self.v[k] - d * self.grad_bar_y[k]))
                + 2.0 * eta_dot(&(mdot * self.grad_y[k]), &self.lap_y)
        })
    }

    /// The displayed current `Y∧(V + |det Å|∇^ḡY) + ∇^gY∧ΔY`. Its divergence
    /// does not cancel `⟨ṀY,E_Y⟩`.
    pub fn c_y_displayed(&self) -> [WedgeMatrix; 4] {
        std::array::from_fn(|k| {
            wedge(&self.y, &(self.v[k] + self.det_a.abs() * self.grad_bar_y[k])) + wedge(&self.grad_y[k], &self.lap_y)
        })
    }
}

/// Both sides of the identity for `⟨ν, E_Y⟩`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EyNuReport {
    pub lhs: f64,
    /// `4 div_g ⟨∇^gν, Å·∇²ν⟩`.
    pub div_term: f64,
    pub tr3: f64,
    pub epsilon: f64,
    /// Coefficient of `tr Å³` for the b⃗ convention used.
    pub coefficient: f64,
    /// Residual against `div_term + coefficient · tr Å³`.
    pub residual: f64,
    /// Residual against the displayed `div_term + (−4 + 4ε/3) tr Å³`.
    pub residual_displayed: f64,
}

fn ey_nu_div_term(el: &ElJets) -> Jet {
    let jg = &el.jg;
    let a_up = jmat_mul(&jmat_mul(&jg.g_inv, &jg.a_ring), &jg.g_inv);
    // Å^{ij} ∇²_ij ν
    let mut terms = Vec::with_capacity(16);
    for i in 0..4 {
        for j in 0..4 {
            let mut h = mv_deriv(&mv_deriv(&el.nu, i), j);
            for m in 0..4 {
                h = mv_sub(&h, &mv_scale(&mv_deriv(&el.nu, m), &jg.gamma[m][i][j]));
            }
            terms.push(mv_scale(&h, &a_up[i][j]));
        }
    }
    let a_hess = mv_sum(&terms);
    let gnu = el.grad_up(&el.nu);
    let x: [Jet; 4] = std::array::from_fn(|k| eta_dot_jet(&gnu[k], &a_hess));
    el.div_scalar(&x).scale(4.0)
}

/// Residual of `⟨ν,E_Y⟩ = 4div_g(⟨∇^gν, Å·∇²ν⟩) + c·tr Å³`, relative to the
/// largest term and floored at `|Å|³_g` (tr Å³ and ⟨ν,E_Y⟩ both vanish on
/// ℝ²×𝕊²). Needs order-6 jets and det Å ≠ 0.
pub fn ey_nu_residual(el: &ElJets, sign: BTermSign) -> Result<EyNuReport> {
    let f = ey_field(el, sign)?;
    if !el.umbilic_free() {
        return Err(GeomError::Singular { det: f.det_a });
    }
    let lhs = eta_dot(&f.nu, &f.e_y);
    let div_term = ey_nu_div_term(el).value();
    let eps = f.epsilon;
    let floor = el.a2.value().max(0.0).powf(1.5);
    let res = |c: f64| {
        let rhs = div_term + c * f.tr3;
        (lhs - rhs).abs() / lhs.abs().max(div_term.abs()).max((4.0 * f.tr3).abs()).max(floor).max(1e-300)
    };
    let coefficient = sign.ey_nu_coefficient(eps);
    Ok(EyNuReport {
        lhs,
        div_term,
        tr3: f.tr3,
        epsilon: eps,
        coefficient,
        residual: res(coefficient),
        residual_displayed: res(-4.0 + 4.0 * eps / 3.0),
    })
}

/// Jet of `det Å` or `|det Å|`.
fn b_factor_jet(el: &ElJets, sign: BTermSign) -> Jet {
    el.det_a.scale(sign.factor(el.det_a.value()) / el.det_a.value())
}

/// Residual of the pointwise Noether identity `⟨ṀY, E_Y⟩ + div_g C = 0` for a
/// generator Ṁ, with `C = a⟨ṀY,V⟩ + a⟨Ṁ∇^gY,ΔY⟩ + cδ⟨ṀY,∇^ḡY⟩` and δ the b⃗
/// factor of `sign`. The identity holds for `a = 2, c = −1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoetherReport {
    pub pairing: f64,
    pub divergence: f64,
    pub residual: f64,
}

pub fn noether_residual(el: &ElJets, mdot: &Mat7, sign: BTermSign, a: f64, c: f64) -> Result<NoetherReport> {
    let f = ey_field(el, sign)?;
    let j = ey_jets(el)?;
    let my = mv_apply(mdot, &el.y);
    let delta = b_factor_jet(el, sign);
    let x: [Jet; 4] = std::array::from_fn(|k| {
        let mut s = eta_dot_jet(&my, &j.v[k]).scale(a);
        s = s + eta_dot_jet(&mv_apply(mdot, &j.grad_y[k]), &j.lap_y).scale(a);
        if let Some(gb) = &j.grad_bar_y {
            s = s + (&delta * &eta_dot_jet(&my, &gb[k])).scale(c);
        }
        s
    });
    let divergence = el.div_scalar(&x).value();
    let pairing = eta_dot(&(mdot * f.y), &f.e_y);
    Ok(NoetherReport {
        pairing,
        divergence,
        residual: (pairing + divergence).abs() / pairing.abs().max(divergence.abs()).max(1e-300),
    })
}

/// Results of the conservation-law harness over a closed surface.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConservationReport {
    /// `∫ φ [div_g W − ¼Δ_g q] dvol_g` in weak form, `W` and `q` as displayed.
    pub weak_residual: f64,
    /// `∫ div_g(C_Y(Ṁ)) dvol_g`, zero by the divergence theorem.
    pub divergence_integral: f64,
    /// `∫ |C_Y(Ṁ)|_g dvol_g`, the natural scale of the divergence integral.
    pub flux_scale: f64,
    pub level: usize,
}

fn conservation_node(node: &Node, mdot: &Mat7, test: &ScalarField) -> Result<Vec<f64>> {
    let el = ElJets::new(node.jet, node.orientation)?;
    let f = ey_field(&el, BTermSign::default())?;
    let j = ey_jets(&el)?;
    let gi = f.g_inv;
    let my = mv_apply(mdot, &el.y);
    let q0 = eta_dot_jet(&my, &el.nu);
    let e_nu = eta_dot(&f.nu, &f.e_y);
    let dq0 = Vector4::from_fn(|i, _| q0.d(i));
    let grad_q0 = gi * dq0;
    let nu_e = Vector4::from_fn(|i, _| eta_dot(&f.dnu[i], &f.e_y));
    let grad_nu_e = gi * nu_e;
    let cy = f.c_y_paired(mdot);
    let w = 0.5 * e_nu * grad_q0 - q0.value() * grad_nu_e - cy;
    let q = q0.value() * e_nu;
    let phi = test.jet(node.u, &el.jg.phi, 2)?;
    let dphi = Vector4::from_fn(|i, _| phi.d(i));
    let lap_phi = el.jg.laplacian(&phi.truncate(2)).value();
    let lowered_w = (f.g_inv.try_inverse().unwrap_or_else(Matrix4::zeros)) * w;
    let weak = -(lowered_w.dot(&dphi)) - 0.25 * q * lap_phi;
    // Strong divergence of C_Y(Ṁ) from its jets.
    let delta = b_factor_jet(&el, f.sign);
    let c: [Jet; 4] = std::array::from_fn(|k| {
        let mut s = (eta_dot_jet(&my, &j.v[k]) + eta_dot_jet(&mv_apply(mdot, &j.grad_y[k]), &j.lap_y)).scale(2.0);
        if let Some(gb) = &j.grad_bar_y {
            s = s - &delta * &eta_dot_jet(&my, &gb[k]);
        }
        s
    });
    let div_c = el.div_scalar(&c).value();
    let g = gi.try_inverse().unwrap_or_else(Matrix4::zeros);
    let cnorm = (cy.transpose() * g * cy)[0].max(0.0).sqrt();
    Ok(vec![weak, div_c, cnorm])
}

/// Conservation-law harness for a generator Ṁ of so(6,1), tested against `test`.
/// Needs a closed surface; every node is evaluated with order-6 jets.
pub fn conservation_residual(atlas: &SurfaceAtlas, mdot: &Mat7, level: usize, test: &ScalarField) -> Result<ConservationReport> {
    if !atlas.closed {
        return Err(GeomError::Unsupported("conservation harness needs a closed surface".into()));
    }
    let v = integrate_many(atlas, level, 6, 3, |node| conservation_node(node, mdot, test))?;
    Ok(ConservationReport { weak_residual: v[0], divergence_integral: v[1], flux_scale: v[2], level })
}

/// A variation field along Y at one point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariationField {
    pub provenance: VariationProvenance,
    pub z: [f64; 7],
    /// `⟨Z, Y⟩_η`, zero for fields tangent to 𝕊^{5,1}.
    pub y_pairing: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VariationProvenance {
    NormalVariation { r: ScalarField, dt: f64 },
    AmbientConformal { generator: Vec<f64> },
}

/// The two constraint residuals of a variation through conformal Gauss maps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstraintResiduals {
    /// `|⟨ν, Δ_gẎ − |∇Y|²Ẏ⟩|`.
    pub laplace: f64,
    /// `|⟨ν, ∇Ẏ⟩|_g`.
    pub gradient: f64,
    /// Euclidean size of Ẏ, for scale.
    pub y_dot: f64,
    pub field: VariationField,
}

fn y_jets_of(phi: &[Jet; 5], orientation: f64) -> Result<MvJet> {
    let j4 = Jet4::new(phi.to_vec());
    let jg = JetGeometry::new(&j4, orientation)?;
    Ok(crate::cgm::cgm_jets(&jg).y)
}

/// Ẏ by central differences of `Y(Φ ± dt·r·n)` at one chart point, and its
/// constraint residuals. Uses order-5 chart jets.
pub fn variation_constraint_at(chart: &ChartMap, u: [f64; NVARS], r: &ScalarField, dt: f64) -> Result<ConstraintResiduals> {
    if !(dt > 0.0) {
        return Err(GeomError::Validation("dt must be positive".into()));
    }
    let jet = chart_jet(chart, u, 5)?;
    let el = ElJets::new(&jet, chart.orientation)?;
    let jg = &el.jg;
    let rj = r.jet(u, &jg.phi, 5)?;
    let shifted = |t: f64| -> [Jet; 5] { std::array::from_fn(|a| &jg.phi[a] + &(&rj * &jg.n[a]).scale(t)) };
    let yp = y_jets_of(&shifted(dt), chart.orientation)?;
    let ym = y_jets_of(&shifted(-dt), chart.orientation)?;
    let ydot: MvJet = std::array::from_fn(|a| (&yp[a] - &ym[a]).scale(0.5 / dt));
    let nu = mv_value(&el.nu);
    let lap = mv_value(&el.lap(&ydot));
    let yd = mv_value(&ydot);
    let laplace = eta_dot(&nu, &(lap - el.a2.value() * yd)).abs();
    let d = Vector4::from_fn(|i, _| {
        let di = MinkowskiVec::from_fn(|a, _| ydot[a].d(i));
        eta_dot(&nu, &di)
    });
    let gi = jmat_value(&jg.g_inv);
    let gradient = (d.transpose() * gi * d)[0].max(0.0).sqrt();
    let y = mv_value(&el.y);
    Ok(ConstraintResiduals {
        laplace,
        gradient,
        y_dot: yd.norm(),
        field: VariationField {
            provenance: VariationProvenance::NormalVariation { r: r.clone(), dt },
            z: yd.into(),
            y_pairing: eta_dot(&yd, &y),
        },
    })
}

/// Maximum constraint residuals over sample points, at `dt` and `dt/2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstraintCheck {
    pub dt: f64,
    pub laplace: f64,
    pub gradient: f64,
    pub laplace_half: f64,
    pub gradient_half: f64,
    pub y_pairing: f64,
    pub y_dot: f64,
}

impl ConstraintCheck {
    /// `res(dt) / res(dt/2)` for both constraints; 4 for a second-order error.
    pub fn richardson_ratios(&self) -> (f64, f64) {
        (self.laplace / self.laplace_half, self.gradient / self.gradient_half)
    }
}

pub fn variation_constraint_check(atlas: &SurfaceAtlas, points: &[(usize, [f64; NVARS])], r: &ScalarField, dt: f64) -> Result<ConstraintCheck> {
    let mut out = ConstraintCheck {
        dt,
        laplace: 0.0,
        gradient: 0.0,
        laplace_half: 0.0,
        gradient_half: 0.0,
        y_pairing: 0.0,
        y_dot: 0.0,
    };
    for &(c, u) in points {
        let chart = atlas.charts.get(c).ok_or_else(|| GeomError::Validation(format!("no chart {c}")))?;
        let a = variation_constraint_at(chart, u, r, dt)?;
        let b = variation_constraint_at(chart, u, r, dt / 2.0)?;
        out.laplace = out.laplace.max(a.laplace);
        out.gradient = out.gradient.max(a.gradient);
        out.laplace_half = out.laplace_half.max(b.laplace);
        out.gradient_half = out.gradient_half.max(b.gradient);
        out.y_pairing = out.y_pairing.max(a.field.y_pairing.abs());
        out.y_dot = out.y_dot.max(a.y_dot);
    }
    Ok(out)
}

/// Residuals of `⟨ν, Δ(αᵏ∂_kν) − |∇Y|²αᵏ∂_kν⟩ = −2div α` and
/// `⟨ν, Δ(βν) − |∇Y|²βν⟩ = −4β`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LcgmResiduals {
    pub alpha_lhs: f64,
    pub alpha_rhs: f64,
    pub beta_lhs: f64,
    pub beta_rhs: f64,
}

impl LcgmResiduals {
    pub fn alpha_residual(&self) -> f64 {
        (self.alpha_lhs - self.alpha_rhs).abs() / self.alpha_rhs.abs().max(1.0)
    }

    pub fn beta_residual(&self) -> f64 {
        (self.beta_lhs - self.beta_rhs).abs() / self.beta_rhs.abs().max(1.0)
    }
}

/// Needs order ≥ 4 jets (`Δ` of `∂ν` and the curvature of g).
pub fn lcgm_test_identities(el: &ElJets, u: [f64; NVARS], alpha: &[ScalarField; 4], beta: &ScalarField) -> Result<LcgmResiduals> {
    let order = el.jg.order;
    let phi = &el.jg.phi;
    let a: [Jet; 4] = {
        let v: Vec<Jet> = alpha.iter().map(|f| f.jet(u, phi, order)).collect::<Result<_>>()?;
        std::array::from_fn(|k| v[k].clone())
    };
    let b = beta.jet(u, phi, order)?;
    let nu = mv_value(&el.nu);
    let a2 = el.a2.value();
    let terms: Vec<MvJet> = (0..4).map(|k| mv_scale(&mv_deriv(&el.nu, k), &a[k])).collect();
    let field = mv_sum(&terms);
    let alpha_lhs = eta_dot(&nu, &(mv_value(&el.lap(&field)) - a2 * mv_value(&field)));
    let alpha_rhs = -2.0 * el.div_scalar(&a).value();
    let bn = mv_scale(&el.nu, &b);
    let beta_lhs = eta_dot(&nu, &(mv_value(&el.lap(&bn)) - a2 * mv_value(&bn)));
    Ok(LcgmResiduals { alpha_lhs, alpha_rhs, beta_lhs, beta_rhs: -4.0 * b.value() })
}
