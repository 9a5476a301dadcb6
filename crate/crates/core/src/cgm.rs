//! Conformal Gauss map `Y : Σ → 𝕊^{5,1}` and its induced geometry: the
//! metric ḡ = Å², the dual null frame (ν, ν*), the second fundamental form
//! of Y, its mean curvature vector and the scalar curvature of ḡ.

use nalgebra::{Matrix4, SMatrix, Vector4, Vector5};

use crate::error::{GeomError, Result};
use crate::geometry::{
    cov_deriv, curvature_from_metric, jmat_sym, jmat_value, JMat, JetGeometry, JetTensor,
};
use crate::jet::{self, Jet};
use crate::minkowski::{eta_dot, null_lift, null_lift_jet, MinkowskiVec};
use crate::traceless::{ChPack, InvTraceless, TracelessPair};

/// Jets of Y and of the null lift ν of Φ.
#[derive(Clone, Debug)]
pub struct CgmJets {
    pub y: [Jet; 7],
    pub nu: [Jet; 7],
}

/// `Y = Hν + (n, ⟨n,Φ⟩, ⟨n,Φ⟩)`.
pub fn cgm_jets(jg: &JetGeometry) -> CgmJets {
    let nu = null_lift_jet(&jg.phi);
    let np = jet::dot(&jg.n, &jg.phi);
    let y = std::array::from_fn(|a| {
        let extra = if a < 5 { jg.n[a].clone() } else { np.clone() };
        &jg.h * &nu[a] + extra
    });
    CgmJets { y, nu }
}

pub fn mv_value(v: &[Jet; 7]) -> MinkowskiVec {
    MinkowskiVec::from_fn(|a, _| v[a].value())
}

pub fn mv_partial(v: &[Jet; 7], alpha: [u8; 4]) -> MinkowskiVec {
    MinkowskiVec::from_fn(|a, _| v[a].partial(alpha))
}

fn unit(i: usize) -> [u8; 4] {
    let mut a = [0u8; 4];
    a[i] += 1;
    a
}

fn unit2(i: usize, j: usize) -> [u8; 4] {
    let mut a = unit(i);
    a[j] += 1;
    a
}

/// Values of `∂_i v` for a jet-valued Minkowski vector.
pub fn mv_grad(v: &[Jet; 7]) -> [MinkowskiVec; 4] {
    std::array::from_fn(|i| mv_partial(v, unit(i)))
}

/// Values of `∂_ij v`.
pub fn mv_hess(v: &[Jet; 7]) -> [[MinkowskiVec; 4]; 4] {
    std::array::from_fn(|i| std::array::from_fn(|j| mv_partial(v, unit2(i, j))))
}

/// Dual null frame data; requires Å invertible and `f` above tolerance.
#[derive(Clone, Debug)]
pub struct DualFrame {
    /// `H² + |∇^ḡH|²_ḡ`.
    pub f: f64,
    pub phi_star: Vector5<f64>,
    pub nu_star: MinkowskiVec,
    pub a_inv: InvTraceless,
    pub g_bar_inv: Matrix4<f64>,
    /// `ḡ⁻¹∂H`.
    pub grad_bar_h: Vector4<f64>,
}

/// Second fundamental form of Y in the normal frame `(ν, ν*)`:
/// `B = Bν·ν + B*·ν*`.
#[derive(Clone, Debug)]
pub struct SecondForm {
    pub b_star: Matrix4<f64>,
    pub b_nu: Matrix4<f64>,
    pub b_vec: MinkowskiVec,
    /// `gamma_bar[k][(i,j)] = Γ̄^k_ij`.
    pub gamma_bar: [Matrix4<f64>; 4],
    pub hess_bar_h: Matrix4<f64>,
    pub lap_bar_h: f64,
    /// `tr_ḡ Å`.
    pub t: f64,
    /// `|B|²_η` by contraction of the two components.
    pub b_norm2: f64,
    /// `|B|²_η` from its closed form in H and Å.
    pub b_norm2_formula: f64,
    /// `16|b⃗|²_η` by contraction.
    pub b_vec16: f64,
    pub b_vec16_formula: f64,
    /// `12 − |B|² + 16|b⃗|²`.
    pub scal_bar: f64,
}

/// Pointwise frame of the conformal Gauss map.
#[derive(Clone, Debug)]
pub struct CgmFrame {
    pub y: MinkowskiVec,
    pub dy: [MinkowskiVec; 4],
    pub nu: MinkowskiVec,
    pub dnu: [MinkowskiVec; 4],
    pub phi: Vector5<f64>,
    pub g: Matrix4<f64>,
    pub g_inv: Matrix4<f64>,
    pub h: f64,
    pub grad_h: Vector4<f64>,
    pub a_ring: Matrix4<f64>,
    /// `Å g⁻¹ Å`.
    pub g_bar: Matrix4<f64>,
    pub pack: ChPack,
    pub det_a: f64,
    /// Sign of `det_g Å` (0 at umbilic-degenerate points).
    pub epsilon: f64,
    /// `det[n, ∂₁Φ, …, ∂₄Φ]`, the signed chart volume.
    pub signed_vol: f64,
    pub dual: Option<DualFrame>,
    pub second: Option<SecondForm>,
}

fn mat_from(m: &JMat) -> Matrix4<f64> {
    jmat_value(m)
}

/// `Y`, `∂Y`, `ν`, ḡ and `det Å`; needs a chart jet of order ≥ 3.
pub fn cgm_basic(jg: &JetGeometry) -> Result<CgmFrame> {
    if jg.order < 3 {
        return Err(GeomError::Domain("conformal Gauss map derivatives need an order ≥ 3 jet".into()));
    }
    let cj = cgm_jets(jg);
    let g = mat_from(&jg.g);
    let g_inv = mat_from(&jg.g_inv);
    let a_ring = mat_from(&jg.a_ring);
    let pack = TracelessPair::new(g, a_ring).ch_pack();
    Ok(CgmFrame {
        y: mv_value(&cj.y),
        dy: mv_grad(&cj.y),
        nu: mv_value(&cj.nu),
        dnu: mv_grad(&cj.nu),
        phi: Vector5::from_fn(|a, _| jg.phi[a].value()),
        g,
        g_inv,
        h: jg.h.value(),
        grad_h: Vector4::from_fn(|i, _| jg.h.d(i)),
        a_ring,
        g_bar: a_ring * g_inv * a_ring,
        pack,
        det_a: pack.det,
        epsilon: if pack.det > 0.0 {
            1.0
        } else if pack.det < 0.0 {
            -1.0
        } else {
            0.0
        },
        signed_vol: jg.orientation * jg.vol.value(),
        dual: None,
        second: None,
    })
}

/// Residuals of the basic relations of Y, each relative to its natural scale.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BasicResiduals {
    /// `| |Y|² − 1 |`.
    pub y_unit: f64,
    /// `|⟨Y,ν⟩|`, relative to `|ν|_e`.
    pub y_nu: f64,
    /// `max |⟨∂Y,ν⟩|`, relative to `|∂Y|_e |ν|_e`.
    pub dy_nu: f64,
    /// `|ν|²` relative to `|ν|²_e`.
    pub nu_null: f64,
    /// Gram matrix of ∂Y against Å², relative to `|Å|²`.
    pub g_bar: f64,
    /// `∂Y` against `(∂H)ν − Å_i^l ∂_lν`, relative to the Euclidean size of ∂Y's parts.
    pub dy_formula: f64,
}

impl CgmFrame {
    pub fn basic_residuals(&self) -> BasicResiduals {
        let nu_e = self.nu.norm();
        let dy_e = self.dy.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let gram = Matrix4::from_fn(|i, j| eta_dot(&self.dy[i], &self.dy[j]));
        let a2 = self.pack.tr2.abs().max(1e-300);
        let mixed = self.a_ring * self.g_inv;
        let mut dyf = 0.0f64;
        let mut dys = 0.0f64;
        for i in 0..4 {
            let mut v = self.grad_h[i] * self.nu;
            for l in 0..4 {
                v -= mixed[(i, l)] * self.dnu[l];
            }
            dyf = dyf.max((v - self.dy[i]).amax());
            dys = dys.max((self.grad_h[i] * self.nu).amax()).max(self.dy[i].amax());
        }
        BasicResiduals {
            y_unit: (eta_dot(&self.y, &self.y) - 1.0).abs(),
            y_nu: eta_dot(&self.y, &self.nu).abs() / nu_e.max(1.0),
            dy_nu: (0..4).map(|i| eta_dot(&self.dy[i], &self.nu).abs()).fold(0.0, f64::max)
                / (dy_e * nu_e).max(1e-300).max(nu_e),
            nu_null: eta_dot(&self.nu, &self.nu).abs() / (nu_e * nu_e).max(1.0),
            g_bar: (gram - self.g_bar).amax() / (a2 * self.g.amax()).max(1e-300),
            dy_formula: dyf / dys.max(1e-300),
        }
    }

    /// `|det_g Å|`, the density of `dvol_ḡ` against `dvol_g`.
    pub fn vol_ratio(&self) -> f64 {
        self.det_a.abs()
    }
}

/// Relative tolerance on `f` below which the dual frame is refused.
pub fn f_tolerance(a_norm2: f64) -> f64 {
    1e-10 * (1.0 + a_norm2)
}

/// Compute `Φ*`, `ν*` and `f`; fills `frame.dual`.
pub fn dual_null_frame(frame: &mut CgmFrame, jg: &JetGeometry) -> Result<()> {
    let pair = TracelessPair::new(frame.g, frame.a_ring);
    let a_inv = pair.inv_traceless()?;
    let up = a_inv.upper;
    let g_bar_inv = up * frame.g * up;
    let grad_bar_h = g_bar_inv * frame.grad_h;
    let f = frame.h * frame.h + frame.grad_h.dot(&grad_bar_h);
    if !(f > f_tolerance(frame.pack.tr2)) {
        return Err(GeomError::Degeneracy(format!("f = {f:e} below tolerance")));
    }
    let n = Vector5::from_fn(|a, _| jg.n[a].value());
    let beta = up * frame.grad_h;
    let mut phi_star = frame.phi + (2.0 * frame.h / f) * n;
    for k in 0..4 {
        let dk = Vector5::from_fn(|a, _| jg.dphi[k][a].value());
        phi_star -= (2.0 * beta[k] / f) * dk;
    }
    let nu_star = null_lift(&phi_star);
    frame.dual = Some(DualFrame { f, phi_star, nu_star, a_inv, g_bar_inv, grad_bar_h });
    Ok(())
}

/// Residuals of the dual-frame relations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DualResiduals {
    /// `|⟨ν,ν*⟩ + 2/f|·f/2`.
    pub nu_nustar: f64,
    pub y_nustar: f64,
    pub dy_nustar: f64,
    pub nustar_null: f64,
}

impl DualFrame {
    pub fn residuals(&self, frame: &CgmFrame) -> DualResiduals {
        let ns = &self.nu_star;
        let scale = ns.norm().max(1.0);
        let dy_e = frame.dy.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1e-300);
        DualResiduals {
            nu_nustar: (eta_dot(&frame.nu, ns) + 2.0 / self.f).abs() * self.f / 2.0,
            y_nustar: eta_dot(&frame.y, ns).abs() / scale,
            dy_nustar: (0..4).map(|i| eta_dot(&frame.dy[i], ns).abs()).fold(0.0, f64::max) / (dy_e * scale),
            nustar_null: eta_dot(ns, ns).abs() / (scale * scale),
        }
    }

    /// `⟨ν, ν*⟩`, equal to `−2/f`.
    pub fn pairing(&self) -> f64 {
        -2.0 / self.f
    }
}

/// Closed-form Christoffel symbols of ḡ.
pub fn gamma_bar_closed(frame: &CgmFrame, dual: &DualFrame, nabla_a_ring: &[Matrix4<f64>; 4], gamma: &[Matrix4<f64>; 4]) -> [Matrix4<f64>; 4] {
    let up = dual.a_inv.upper;
    let mixed = dual.a_inv.endo; // (Å⁻¹)^k_i
    let gh = frame.grad_h;
    std::array::from_fn(|k| {
        Matrix4::from_fn(|i, j| {
            let mut s = gamma[k][(i, j)] + dual.grad_bar_h[k] * frame.a_ring[(i, j)] - mixed[(k, i)] * gh[j];
            for b in 0..4 {
                s += up[(k, b)] * nabla_a_ring[i][(j, b)];
            }
            s
        })
    })
}

/// Christoffel symbols of ḡ from `⟨∂²Y, ∂Y⟩ ḡ⁻¹`; needs an order ≥ 4 chart jet.
pub fn gamma_bar_raw(cj: &CgmJets, g_bar_inv: &Matrix4<f64>) -> [Matrix4<f64>; 4] {
    let dy = mv_grad(&cj.y);
    let ddy = mv_hess(&cj.y);
    let low: Vec<Matrix4<f64>> = (0..4).map(|l| Matrix4::from_fn(|i, j| eta_dot(&ddy[i][j], &dy[l]))).collect();
    std::array::from_fn(|k| {
        let mut m = Matrix4::zeros();
        for l in 0..4 {
            m += g_bar_inv[(k, l)] * low[l];
        }
        m
    })
}

/// Second fundamental form, mean curvature vector and `Scal_ḡ` by the closed
/// forms; needs the dual frame and an order ≥ 4 chart jet. Fills `frame.second`.
pub fn second_form_y(frame: &mut CgmFrame, jg: &JetGeometry) -> Result<()> {
    if jg.order < 4 {
        return Err(GeomError::Domain("second fundamental form of Y needs an order ≥ 4 jet".into()));
    }
    if frame.dual.is_none() {
        dual_null_frame(frame, jg)?;
    }
    let dual = frame.dual.as_ref().unwrap();
    let na = cov_deriv(&JetTensor::from_jmat(&jg.a_ring), &jg.gamma);
    let nabla: [Matrix4<f64>; 4] = std::array::from_fn(|i| Matrix4::from_fn(|j, k| na.value(&[i, j, k])));
    let gamma: [Matrix4<f64>; 4] = std::array::from_fn(|k| jmat_value(&jg.gamma[k]));
    let gamma_bar = gamma_bar_closed(frame, dual, &nabla, &gamma);
    let hess = Matrix4::from_fn(|i, j| {
        let mut s = jg.h.d2(i, j);
        for k in 0..4 {
            s -= gamma_bar[k][(i, j)] * frame.grad_h[k];
        }
        s
    });
    let f = dual.f;
    let h = frame.h;
    let gbi = dual.g_bar_inv;
    let b_star = -(f / 2.0) * frame.a_ring;
    let b_nu = hess + h * frame.g_bar + (f / 2.0) * frame.a_ring;
    let tr_bar = |m: &Matrix4<f64>| (gbi * m).trace();
    let pair_bar = |a: &Matrix4<f64>, b: &Matrix4<f64>| (gbi * a * gbi * b.transpose()).trace();
    let t = tr_bar(&frame.a_ring);
    let lap_bar_h = tr_bar(&hess);
    let c = dual.pairing();
    let b_norm2 = 2.0 * c * pair_bar(&b_nu, &b_star);
    let b_vec = 0.25 * (tr_bar(&b_nu) * frame.nu + tr_bar(&b_star) * dual.nu_star);
    let b_vec16 = 16.0 * eta_dot(&b_vec, &b_vec);
    let a_bar2 = pair_bar(&frame.a_ring, &frame.a_ring);
    let b_norm2_formula = 2.0 * (pair_bar(&frame.a_ring, &hess) + h * t) + f * a_bar2;
    let b_vec16_formula = 2.0 * t * (lap_bar_h + 4.0 * h) + f * t * t;
    let scal_bar = 12.0 - b_norm2 + b_vec16;
    frame.second = Some(SecondForm {
        b_star,
        b_nu,
        b_vec,
        gamma_bar,
        hess_bar_h: hess,
        lap_bar_h,
        t,
        b_norm2,
        b_norm2_formula,
        b_vec16,
        b_vec16_formula,
        scal_bar,
    });
    Ok(())
}

/// Raw-jet counterparts of the second fundamental form.
#[derive(Clone, Debug)]
pub struct SecondFormRaw {
    /// `⟨∂²Y, ν⟩`, equal to Å.
    pub ddy_nu: Matrix4<f64>,
    pub b_star: Matrix4<f64>,
    pub b_nu: Matrix4<f64>,
    /// Projection of `¼ ḡ^{ij} ∂²_ij Y` onto the normal plane.
    pub b_vec: MinkowskiVec,
    pub gamma_bar: [Matrix4<f64>; 4],
}

pub fn second_form_raw(frame: &CgmFrame, jg: &JetGeometry) -> Result<SecondFormRaw> {
    let dual = frame.dual.as_ref().ok_or_else(|| GeomError::Domain("dual frame missing".into()))?;
    if jg.order < 4 {
        return Err(GeomError::Domain("raw second form needs an order ≥ 4 jet".into()));
    }
    let cj = cgm_jets(jg);
    let ddy = mv_hess(&cj.y);
    let c = dual.pairing();
    let ddy_nu = Matrix4::from_fn(|i, j| eta_dot(&ddy[i][j], &frame.nu));
    let ddy_ns = Matrix4::from_fn(|i, j| eta_dot(&ddy[i][j], &dual.nu_star));
    let mut w = MinkowskiVec::zeros();
    for i in 0..4 {
        for j in 0..4 {
            w += 0.25 * dual.g_bar_inv[(i, j)] * ddy[i][j];
        }
    }
    let b_vec = (eta_dot(&w, &dual.nu_star) * frame.nu + eta_dot(&w, &frame.nu) * dual.nu_star) / c;
    Ok(SecondFormRaw {
        ddy_nu,
        b_star: ddy_nu / c,
        b_nu: ddy_ns / c,
        b_vec,
        gamma_bar: gamma_bar_raw(&cj, &dual.g_bar_inv),
    })
}

/// Jets of ḡ = Å g⁻¹ Å.
pub fn g_bar_jets(jg: &JetGeometry) -> JMat {
    let m: JMat = std::array::from_fn(|i| {
        std::array::from_fn(|l| {
            let t: Vec<Jet> = (0..4).map(|j| &jg.a_ring[i][j] * &jg.g_inv[j][l]).collect();
            jet::sum(&t)
        })
    });
    jmat_sym(|i, k| {
        let t: Vec<Jet> = (0..4).map(|l| &m[i][l] * &jg.a_ring[l][k]).collect();
        jet::sum(&t)
    })
}

/// Scalar curvature of ḡ by differentiating its Christoffel symbols; needs an
/// order ≥ 4 chart jet.
pub fn scal_bar_from_metric(jg: &JetGeometry) -> Result<f64> {
    if jg.order < 4 {
        return Err(GeomError::Domain("curvature of ḡ needs an order ≥ 4 jet".into()));
    }
    Ok(curvature_from_metric(&g_bar_jets(jg))?.scal)
}

/// `Scal_ḡ` via the Gauss equation of Y in 𝕊^{5,1}.
pub fn scal_bar(frame: &CgmFrame) -> Option<f64> {
    frame.second.as_ref().map(|s| s.scal_bar)
}

/// `det[Y, ∂₁Y, …, ∂₄Y, ν, ξ]` with `ξ = (0,…,0,1,1)`, normalized by
/// `−det[n, ∂₁Φ, …, ∂₄Φ]`. Expanding along the two light-cone rows gives
/// `−det_g Å · det[n, ∂Φ]`, so the normalized value is `det_g Å` and its sign is ε.
pub fn orientation_det(frame: &CgmFrame) -> f64 {
    let mut m = SMatrix::<f64, 7, 7>::zeros();
    m.set_column(0, &frame.y);
    for i in 0..4 {
        m.set_column(i + 1, &frame.dy[i]);
    }
    m.set_column(5, &frame.nu);
    let mut xi = MinkowskiVec::zeros();
    xi[5] = 1.0;
    xi[6] = 1.0;
    m.set_column(6, &xi);
    -m.determinant() / frame.signed_vol
}

/// Frame with as much structure as the jet order and the immersion allow.
pub fn cgm_frame(jg: &JetGeometry, want_second: bool) -> Result<CgmFrame> {
    let mut frame = cgm_basic(jg)?;
    dual_null_frame(&mut frame, jg)?;
    if want_second {
        second_form_y(&mut frame, jg)?;
    }
    Ok(frame)
}
