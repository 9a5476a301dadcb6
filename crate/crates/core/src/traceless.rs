//! Algebra of g-symmetric traceless 4×4 forms: Cayley–Hamilton relations,
//! closed-form inverse, the expansion of det A and the (ω,ω,−ω,−ω) pattern.
//!
//! Traces and determinants are those of the endomorphism `S = g⁻¹Å`.

use nalgebra::Matrix4;

use crate::error::{GeomError, Result};

/// Metric and traceless form sharing an index position (both lower).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TracelessPair {
    pub g: Matrix4<f64>,
    pub a_ring: Matrix4<f64>,
}

/// Traces of powers and determinant, with the residuals of the quartic relations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChPack {
    pub tr2: f64,
    pub tr3: f64,
    pub tr4: f64,
    pub det: f64,
    /// `|Å⁴ − ½tr₂Å² − ⅓tr₃Å + det·g|_g / |Å|⁴_g`.
    pub residual: f64,
    /// `|tr₄ − ½tr₂² + 4det| / |Å|⁴_g`.
    pub tr4_residual: f64,
    /// `|8det − |Å|⁴ + 2tr₄| / |Å|⁴_g`.
    pub det8_residual: f64,
}

/// Closed-form inverse with its consistency checks.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InvTraceless {
    /// Endomorphism `S⁻¹`.
    pub endo: Matrix4<f64>,
    /// Matrix inverse of lower Å, i.e. `S⁻¹g⁻¹`.
    pub upper: Matrix4<f64>,
    pub trace: f64,
    pub norm2: f64,
    /// Max-norm of `S·S⁻¹ − I`.
    pub identity_residual: f64,
    /// Relative mismatch of `tr S⁻¹` with `tr₃/(3det)`.
    pub trace_residual: f64,
    /// Relative mismatch of `|Å⁻¹|²_g` with `(tr₂·det + tr₃²/9)/det²`.
    pub norm_residual: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DetExpansion {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

impl TracelessPair {
    pub fn new(g: Matrix4<f64>, a_ring: Matrix4<f64>) -> Self {
        TracelessPair { g, a_ring }
    }

    /// Remove the g-trace of an arbitrary symmetric form.
    pub fn from_symmetric(g: Matrix4<f64>, a: Matrix4<f64>) -> Result<Self> {
        let g_inv = inverse(&g)?;
        let h = (g_inv * a).trace() / 4.0;
        Ok(TracelessPair { g, a_ring: a - h * g })
    }

    pub fn g_inv(&self) -> Matrix4<f64> {
        inverse(&self.g).expect("metric must be invertible")
    }

    pub fn endo(&self) -> Matrix4<f64> {
        self.g_inv() * self.a_ring
    }

    /// `tr_g Å`, relative to `|Å|_g`.
    pub fn trace_defect(&self) -> f64 {
        let s = self.endo();
        s.trace().abs() / (s * s).trace().abs().sqrt().max(1e-300)
    }

    /// `|T|_g` for a lower-index form.
    pub fn norm_g(&self, t: &Matrix4<f64>) -> f64 {
        let m = self.g_inv() * t;
        (m * m).trace().max(0.0).sqrt()
    }

    pub fn ch_pack(&self) -> ChPack {
        let s = self.endo();
        let s2 = s * s;
        let s3 = s2 * s;
        let s4 = s3 * s;
        let tr2 = s2.trace();
        let tr3 = s3.trace();
        let tr4 = s4.trace();
        let det = s.determinant();
        let scale = (tr2 * tr2).max(f64::MIN_POSITIVE);
        let ch = s4 - 0.5 * tr2 * s2 - tr3 / 3.0 * s + det * Matrix4::identity();
        // |g·X|_g for an endomorphism X equals sqrt(tr(X Xᵀ_g)); use the lowered form.
        let ch_norm = self.norm_g(&(self.g * ch));
        let nz = |x: f64| if tr2 == 0.0 { 0.0 } else { x / scale };
        ChPack {
            tr2,
            tr3,
            tr4,
            det,
            residual: nz(ch_norm),
            tr4_residual: nz((tr4 - 0.5 * tr2 * tr2 + 4.0 * det).abs()),
            det8_residual: nz((8.0 * det - tr2 * tr2 + 2.0 * tr4).abs()),
        }
    }

    /// Whether `|det| ≤ 1e−10·(|Å|²/4)²`.
    pub fn is_singular(&self) -> bool {
        let p = self.ch_pack();
        p.det.abs() <= 1e-10 * (p.tr2 / 4.0).powi(2)
    }

    pub fn inv_traceless(&self) -> Result<InvTraceless> {
        let p = self.ch_pack();
        if p.det.abs() <= 1e-10 * (p.tr2 / 4.0).powi(2) || p.det == 0.0 {
            return Err(GeomError::Singular { det: p.det });
        }
        let s = self.endo();
        let id = Matrix4::identity();
        let endo = -(s * s * s - 0.5 * p.tr2 * s - p.tr3 / 3.0 * id) / p.det;
        let upper = endo * self.g_inv();
        let trace = endo.trace();
        let norm2 = (endo * endo).trace();
        Ok(InvTraceless {
            endo,
            upper,
            trace,
            norm2,
            identity_residual: (s * endo - id).amax(),
            trace_residual: rel(trace, p.tr3 / (3.0 * p.det)),
            norm_residual: rel(norm2, (p.tr2 * p.det + p.tr3 * p.tr3 / 9.0) / (p.det * p.det)),
        })
    }

    /// `det_g(Å + Hg)` against its expansion in `H` and the invariants of Å.
    pub fn det_a_expansion(&self, h: f64) -> DetExpansion {
        let p = self.ch_pack();
        let lhs = (self.endo() + h * Matrix4::identity()).determinant();
        let rhs = h.powi(4) - 0.5 * h * h * p.tr2 + h * p.tr3 / 3.0 + p.tr2 * p.tr2 / 8.0 - p.tr4 / 4.0;
        DetExpansion { lhs, rhs, residual: (lhs - rhs).abs() }
    }

    /// `Some(ω)` iff `Å² = ω²g`, the eigenvalue pattern `(ω,ω,−ω,−ω)`.
    pub fn conformal_pattern(&self, tol: f64) -> Option<f64> {
        let s = self.endo();
        let tr2 = (s * s).trace();
        if tr2 <= 0.0 {
            return Some(0.0).filter(|_| tr2 == 0.0);
        }
        let w2 = tr2 / 4.0;
        let dev = s * s - w2 * Matrix4::identity();
        let dev_norm = self.norm_g(&(self.g * dev));
        if dev_norm > tol * w2 {
            return None;
        }
        // Å² = ω²g with trace zero forces the (ω,ω,−ω,−ω) pattern.
        Some(w2.sqrt())
    }
}

/// Predicate with the default relative tolerance `1e−9`.
pub fn conformal_pattern_predicate(p: &TracelessPair) -> (bool, f64) {
    match p.conformal_pattern(1e-9) {
        Some(w) => (true, w),
        None => (false, 0.0),
    }
}

fn inverse(m: &Matrix4<f64>) -> Result<Matrix4<f64>> {
    m.try_inverse().ok_or_else(|| GeomError::Degeneracy("singular metric".into()))
}
