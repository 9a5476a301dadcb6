//! Induced metric, normal, second fundamental form and curvature of an
//! immersion Σ⁴ → ℝ⁵, together with the classical identities they satisfy.
//!
//! Everything is first computed as jets ([`JetGeometry`]) so that covariant
//! derivatives of any field are available to the order the chart jet allows;
//! [`ShapeData`] is the pointwise value bundle.

use nalgebra::{Matrix4, Vector4, Vector5};

use crate::error::{GeomError, Result};
use crate::jet::{self, Jet, Jet4};

/// 4×4 matrix of jets, row-major `m[i][j]`.
pub type JMat = [[Jet; 4]; 4];
/// Christoffel symbols as jets, `gamma[k][i][j] = Γ^k_ij`.
pub type JGamma = [JMat; 4];

pub fn jmat_from_fn(mut f: impl FnMut(usize, usize) -> Jet) -> JMat {
    std::array::from_fn(|i| std::array::from_fn(|j| f(i, j)))
}

pub fn jmat_value(m: &JMat) -> Matrix4<f64> {
    Matrix4::from_fn(|i, j| m[i][j].value())
}

/// Symmetric jet matrix from a function evaluated on `i ≤ j` only.
pub fn jmat_sym(mut f: impl FnMut(usize, usize) -> Jet) -> JMat {
    let mut upper: Vec<Vec<Option<Jet>>> = vec![vec![None; 4]; 4];
    for i in 0..4 {
        for j in i..4 {
            upper[i][j] = Some(f(i, j));
        }
    }
    jmat_from_fn(|i, j| upper[i.min(j)][i.max(j)].clone().unwrap())
}

pub fn jmat_mul(a: &JMat, b: &JMat) -> JMat {
    jmat_from_fn(|i, j| {
        let mut acc = &a[i][0] * &b[0][j];
        for k in 1..4 {
            acc = acc + &a[i][k] * &b[k][j];
        }
        acc
    })
}

/// Determinant of a 4×4 jet matrix.
pub fn jmat_det(m: &JMat) -> Jet {
    let a = |i: usize, j: usize| &m[i][j];
    let s = |c0: usize, c1: usize| a(0, c0) * a(1, c1) - a(1, c0) * a(0, c1);
    let c = |c0: usize, c1: usize| a(2, c0) * a(3, c1) - a(3, c0) * a(2, c1);
    s(0, 1) * c(2, 3) - s(0, 2) * c(1, 3) + s(0, 3) * c(1, 2) + s(1, 2) * c(0, 3) - s(1, 3) * c(0, 2)
        + s(2, 3) * c(0, 1)
}

/// Inverse and determinant of a 4×4 jet matrix through 2×2 minors.
pub fn jmat_inverse(m: &JMat) -> Result<(JMat, Jet)> {
    let a = |i: usize, j: usize| &m[i][j];
    let s0 = a(0, 0) * a(1, 1) - a(1, 0) * a(0, 1);
    let s1 = a(0, 0) * a(1, 2) - a(1, 0) * a(0, 2);
    let s2 = a(0, 0) * a(1, 3) - a(1, 0) * a(0, 3);
    let s3 = a(0, 1) * a(1, 2) - a(1, 1) * a(0, 2);
    let s4 = a(0, 1) * a(1, 3) - a(1, 1) * a(0, 3);
    let s5 = a(0, 2) * a(1, 3) - a(1, 2) * a(0, 3);
    let c5 = a(2, 2) * a(3, 3) - a(3, 2) * a(2, 3);
    let c4 = a(2, 1) * a(3, 3) - a(3, 1) * a(2, 3);
    let c3 = a(2, 1) * a(3, 2) - a(3, 1) * a(2, 2);
    let c2 = a(2, 0) * a(3, 3) - a(3, 0) * a(2, 3);
    let c1 = a(2, 0) * a(3, 2) - a(3, 0) * a(2, 2);
    let c0 = a(2, 0) * a(3, 1) - a(3, 0) * a(2, 1);
    let det = &s0 * &c5 - &s1 * &c4 + &s2 * &c3 + &s3 * &c2 - &s4 * &c1 + &s5 * &c0;
    let inv_det = det.recip()?;
    let t = |x: &Jet, p: &Jet, y: &Jet, q: &Jet, z: &Jet, r: &Jet| x * p - y * q + z * r;
    let b = [
        [
            t(a(1, 1), &c5, a(1, 2), &c4, a(1, 3), &c3),
            -t(a(0, 1), &c5, a(0, 2), &c4, a(0, 3), &c3),
            t(a(3, 1), &s5, a(3, 2), &s4, a(3, 3), &s3),
            -t(a(2, 1), &s5, a(2, 2), &s4, a(2, 3), &s3),
        ],
        [
            -t(a(1, 0), &c5, a(1, 2), &c2, a(1, 3), &c1),
            t(a(0, 0), &c5, a(0, 2), &c2, a(0, 3), &c1),
            -t(a(3, 0), &s5, a(3, 2), &s2, a(3, 3), &s1),
            t(a(2, 0), &s5, a(2, 2), &s2, a(2, 3), &s1),
        ],
        [
            t(a(1, 0), &c4, a(1, 1), &c2, a(1, 3), &c0),
            -t(a(0, 0), &c4, a(0, 1), &c2, a(0, 3), &c0),
            t(a(3, 0), &s4, a(3, 1), &s2, a(3, 3), &s0),
            -t(a(2, 0), &s4, a(2, 1), &s2, a(2, 3), &s0),
        ],
        [
            -t(a(1, 0), &c3, a(1, 1), &c1, a(1, 2), &c0),
            t(a(0, 0), &c3, a(0, 1), &c1, a(0, 2), &c0),
            -t(a(3, 0), &s3, a(3, 1), &s1, a(3, 2), &s0),
            t(a(2, 0), &s3, a(2, 1), &s1, a(2, 2), &s0),
        ],
    ];
    Ok((jmat_from_fn(|i, j| &b[i][j] * &inv_det), det))
}

/// Generalized cross product of four vectors of ℝ⁵: the vector `N` with
/// `det[N, v₁, v₂, v₃, v₄] = |N|²`.
pub fn cross5(v: &[[Jet; 5]; 4]) -> [Jet; 5] {
    // Laplace expansion along the first two columns of the 5×4 matrix minus a row.
    let pairs: Vec<(usize, usize)> = (0..5).flat_map(|p| (p + 1..5).map(move |q| (p, q))).collect();
    let minor = |c0: usize, c1: usize, p: usize, q: usize| &v[c0][p] * &v[c1][q] - &v[c0][q] * &v[c1][p];
    let m12: Vec<Jet> = pairs.iter().map(|&(p, q)| minor(0, 1, p, q)).collect();
    let m34: Vec<Jet> = pairs.iter().map(|&(p, q)| minor(2, 3, p, q)).collect();
    let pidx = |p: usize, q: usize| pairs.iter().position(|&x| x == (p, q)).unwrap();
    std::array::from_fn(|row| {
        let rows: Vec<usize> = (0..5).filter(|&r| r != row).collect();
        let mut acc: Option<Jet> = None;
        for a in 0..4 {
            for b in a + 1..4 {
                let rest: Vec<usize> = (0..4).filter(|&x| x != a && x != b).collect();
                let sign = if (a + b + 1) % 2 == 0 { 1.0 } else { -1.0 };
                let term = &m12[pidx(rows[a], rows[b])] * &m34[pidx(rows[rest[0]], rows[rest[1]])];
                let term = term.scale(sign);
                acc = Some(match acc {
                    None => term,
                    Some(s) => s + term,
                });
            }
        }
        let cof_sign = if row % 2 == 0 { 1.0 } else { -1.0 };
        acc.unwrap().scale(cof_sign)
    })
}

/// Fully covariant tensor field of rank `r` with jet entries; entry
/// `(a₀,…,a_{r−1})` sits at `Σ a_s 4^{r−1−s}`.
#[derive(Clone, Debug)]
pub struct JetTensor {
    pub rank: usize,
    pub data: Vec<Jet>,
}

fn split_index(mut idx: usize, rank: usize) -> Vec<usize> {
    let mut out = vec![0; rank];
    for s in (0..rank).rev() {
        out[s] = idx % 4;
        idx /= 4;
    }
    out
}

fn join_index(a: &[usize]) -> usize {
    a.iter().fold(0, |acc, &x| acc * 4 + x)
}

impl JetTensor {
    pub fn scalar(f: Jet) -> Self {
        JetTensor { rank: 0, data: vec![f] }
    }

    pub fn from_covector(v: &[Jet; 4]) -> Self {
        JetTensor { rank: 1, data: v.to_vec() }
    }

    pub fn from_jmat(m: &JMat) -> Self {
        JetTensor { rank: 2, data: (0..16).map(|k| m[k / 4][k % 4].clone()).collect() }
    }

    pub fn get(&self, idx: &[usize]) -> &Jet {
        &self.data[join_index(idx)]
    }

    pub fn value(&self, idx: &[usize]) -> f64 {
        self.get(idx).value()
    }

    pub fn to_jmat(&self) -> JMat {
        assert_eq!(self.rank, 2);
        jmat_from_fn(|i, j| self.data[4 * i + j].clone())
    }

    pub fn max_abs_value(&self) -> f64 {
        self.data.iter().map(|x| x.value().abs()).fold(0.0, f64::max)
    }
}

/// Levi-Civita covariant derivative `(∇T)_{i a₁…a_r}`, the new slot first.
pub fn cov_deriv(t: &JetTensor, gamma: &JGamma) -> JetTensor {
    let r = t.rank;
    let n = 4usize.pow(r as u32 + 1);
    let data = (0..n)
        .map(|idx| {
            let ix = split_index(idx, r + 1);
            let (i, a) = (ix[0], &ix[1..]);
            let mut acc = t.get(a).deriv(i);
            for s in 0..r {
                let mut b = a.to_vec();
                for m in 0..4 {
                    b[s] = m;
                    acc = acc - &gamma[m][i][a[s]] * t.get(&b);
                }
            }
            acc
        })
        .collect();
    JetTensor { rank: r + 1, data }
}

/// Jets of all first- and second-order quantities of the immersion.
#[derive(Clone, Debug)]
pub struct JetGeometry {
    pub order: usize,
    pub orientation: f64,
    pub phi: [Jet; 5],
    pub dphi: [[Jet; 5]; 4],
    pub g: JMat,
    pub g_inv: JMat,
    /// `√det g`, which equals the length of the cross-product normal.
    pub vol: Jet,
    pub n: [Jet; 5],
    pub a: JMat,
    pub h: Jet,
    pub a_ring: JMat,
    pub gamma: JGamma,
}

impl JetGeometry {
    /// Requires a chart jet of order at least 2.
    pub fn new(phi: &Jet4, orientation: f64) -> Result<Self> {
        let order = phi.order();
        if order < 2 || phi.target_dim() != 5 {
            return Err(GeomError::Domain(format!(
                "need an order ≥ 2 jet of a map into R^5 (got order {order}, dim {})",
                phi.target_dim()
            )));
        }
        let p: [Jet; 5] = std::array::from_fn(|a| phi.component(a).clone());
        let dphi: [[Jet; 5]; 4] = std::array::from_fn(|i| std::array::from_fn(|a| p[a].deriv(i)));
        let g = jmat_sym(|i, j| jet::dot(&dphi[i], &dphi[j]));
        let big_n = cross5(&dphi);
        let vol2 = jet::dot(&big_n, &big_n);
        if !(vol2.value() > 0.0) {
            return Err(GeomError::Degeneracy("vanishing volume element".into()));
        }
        let vol = vol2.sqrt()?;
        let inv_vol = vol.recip()?.scale(orientation);
        let n: [Jet; 5] = std::array::from_fn(|a| &big_n[a] * &inv_vol);
        let (g_inv, _) = jmat_inverse(&g)?;
        let ddphi: JMat5 = std::array::from_fn(|i| std::array::from_fn(|j| {
            std::array::from_fn(|a| dphi[i][a].deriv(j))
        }));
        let a = jmat_sym(|i, j| jet::dot(&ddphi[i][j], &n));
        // Γ_{ij,l} = ⟨∂_ij Φ, ∂_l Φ⟩, then raise l.
        let low: Vec<JMat> = (0..4).map(|l| jmat_sym(|i, j| jet::dot(&ddphi[i][j], &dphi[l]))).collect();
        let gamma: JGamma = std::array::from_fn(|k| {
            jmat_sym(|i, j| {
                let terms: Vec<Jet> = (0..4).map(|l| &g_inv[k][l] * &low[l][i][j]).collect();
                jet::sum(&terms)
            })
        });
        let h = trace_g(&g_inv, &a).scale(0.25);
        let a_ring = jmat_sym(|i, j| &a[i][j] - &h * &g[i][j]);
        Ok(JetGeometry { order, orientation, phi: p, dphi, g, g_inv, vol, n, a, h, a_ring, gamma })
    }

    pub fn grad(&self, f: &Jet) -> [Jet; 4] {
        std::array::from_fn(|i| f.deriv(i))
    }

    /// Covariant Hessian `∂²f − Γ ∂f`.
    pub fn hessian(&self, f: &Jet) -> JMat {
        let d: [Jet; 4] = self.grad(f);
        jmat_sym(|i, j| {
            let mut acc = d[i].deriv(j);
            for k in 0..4 {
                acc = acc - &self.gamma[k][i][j] * &d[k];
            }
            acc
        })
    }

    pub fn laplacian(&self, f: &Jet) -> Jet {
        trace_g(&self.g_inv, &self.hessian(f))
    }

    /// Divergence `g^{ij}(∂_i X_j − Γ^k_ij X_k)` of a covector field.
    pub fn div_covector(&self, x: &[Jet; 4]) -> Jet {
        let m = jmat_from_fn(|i, j| {
            let mut acc = x[j].deriv(i);
            for k in 0..4 {
                acc = acc - &self.gamma[k][i][j] * &x[k];
            }
            acc
        });
        trace_g(&self.g_inv, &m)
    }

    /// Lower-index covector from a vector field: `X_i = g_ij X^j`.
    pub fn lower(&self, v: &[Jet; 4]) -> [Jet; 4] {
        std::array::from_fn(|i| {
            let t: Vec<Jet> = (0..4).map(|j| &self.g[i][j] * &v[j]).collect();
            jet::sum(&t)
        })
    }

    /// Raise a covector: `X^i = g^{ij} X_j`.
    pub fn raise(&self, v: &[Jet; 4]) -> [Jet; 4] {
        std::array::from_fn(|i| {
            let t: Vec<Jet> = (0..4).map(|j| &self.g_inv[i][j] * &v[j]).collect();
            jet::sum(&t)
        })
    }
}

type JMat5 = [[[Jet; 5]; 4]; 4];

/// `tr_g M = g^{ij} M_ij` for a jet matrix.
pub fn trace_g(g_inv: &JMat, m: &JMat) -> Jet {
    let mut terms = Vec::with_capacity(16);
    for i in 0..4 {
        for j in 0..4 {
            terms.push(&g_inv[i][j] * &m[i][j]);
        }
    }
    jet::sum(&terms)
}

/// Riemann tensor with all indices down; for the unit sphere
/// `R_ijkl = g_ik g_jl − g_il g_jk`.
#[derive(Clone, Debug, PartialEq)]
pub struct Riem(pub Vec<f64>);

impl Riem {
    pub fn zero() -> Self {
        Riem(vec![0.0; 256])
    }

    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.0[((i * 4 + j) * 4 + k) * 4 + l]
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, l: usize, v: f64) {
        self.0[((i * 4 + j) * 4 + k) * 4 + l] = v;
    }

    pub fn max_abs_diff(&self, o: &Riem) -> f64 {
        self.0.iter().zip(&o.0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|a| a.abs()).fold(0.0, f64::max)
    }

    /// `Ric_ik = g^{jl} R_ijkl`.
    pub fn ricci(&self, g_inv: &Matrix4<f64>) -> Matrix4<f64> {
        Matrix4::from_fn(|i, k| {
            let mut s = 0.0;
            for j in 0..4 {
                for l in 0..4 {
                    s += g_inv[(j, l)] * self.get(i, j, k, l);
                }
            }
            s
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Curvature {
    pub riem: Riem,
    pub ric: Matrix4<f64>,
    pub scal: f64,
}

/// Derivative depth requested from [`shape_data`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Depth {
    Basic,
    WithDerivatives,
}

/// Pointwise geometry of the immersion.
#[derive(Clone, Debug)]
pub struct ShapeData {
    pub phi: Vector5<f64>,
    pub dphi: [Vector5<f64>; 4],
    pub g: Matrix4<f64>,
    pub g_inv: Matrix4<f64>,
    /// `√det g`.
    pub vol: f64,
    /// `gamma[k][(i, j)] = Γ^k_ij`.
    pub gamma: [Matrix4<f64>; 4],
    pub n: Vector5<f64>,
    pub a: Matrix4<f64>,
    pub h: f64,
    pub a_ring: Matrix4<f64>,
    pub grad_h: Option<Vector4<f64>>,
    /// Needs a chart jet of order 4.
    pub hess_h: Option<Matrix4<f64>>,
    /// `nabla_a_ring[i][(j, k)] = ∇_i Å_jk`.
    pub nabla_a_ring: Option<[Matrix4<f64>; 4]>,
    pub riem: Riem,
    pub ric: Matrix4<f64>,
    pub scal: f64,
}

impl ShapeData {
    pub fn from_jets(jg: &JetGeometry, depth: Depth) -> Result<Self> {
        if depth == Depth::WithDerivatives && jg.order < 3 {
            return Err(GeomError::Domain("derivatives need an order ≥ 3 jet".into()));
        }
        let v5 = |p: &[Jet; 5]| Vector5::from_fn(|a, _| p[a].value());
        let mut sd = ShapeData {
            phi: v5(&jg.phi),
            dphi: std::array::from_fn(|i| v5(&jg.dphi[i])),
            g: jmat_value(&jg.g),
            g_inv: jmat_value(&jg.g_inv),
            vol: jg.vol.value(),
            gamma: std::array::from_fn(|k| jmat_value(&jg.gamma[k])),
            n: v5(&jg.n),
            a: jmat_value(&jg.a),
            h: jg.h.value(),
            a_ring: jmat_value(&jg.a_ring),
            grad_h: None,
            hess_h: None,
            nabla_a_ring: None,
            riem: Riem::zero(),
            ric: Matrix4::zeros(),
            scal: 0.0,
        };
        if depth == Depth::WithDerivatives {
            sd.grad_h = Some(Vector4::from_fn(|i, _| jg.h.d(i)));
            let na = cov_deriv(&JetTensor::from_jmat(&jg.a_ring), &jg.gamma);
            sd.nabla_a_ring = Some(std::array::from_fn(|i| Matrix4::from_fn(|j, k| na.value(&[i, j, k]))));
            if jg.order >= 4 {
                sd.hess_h = Some(jmat_value(&jg.hessian(&jg.h)));
            }
        }
        let c = curvature_from_gauss(&sd);
        sd.riem = c.riem;
        sd.ric = c.ric;
        sd.scal = c.scal;
        Ok(sd)
    }

    /// `|T|²_g` of a symmetric 2-tensor.
    pub fn norm2(&self, t: &Matrix4<f64>) -> f64 {
        let m = self.g_inv * t;
        (m * m).trace()
    }

    /// `|∇H|²_g`.
    pub fn grad_h_norm2(&self) -> Option<f64> {
        self.grad_h.map(|d| (d.transpose() * self.g_inv * d)[0])
    }

    /// `|∇Å|²_g`.
    pub fn nabla_a_ring_norm2(&self) -> Option<f64> {
        let na = self.nabla_a_ring.as_ref()?;
        let gi = &self.g_inv;
        let mut s = 0.0;
        for i in 0..4 {
            for p in 0..4 {
                s += gi[(i, p)] * (gi * na[i] * gi * na[p]).trace();
            }
        }
        Some(s)
    }
}

/// Pointwise shape data of a chart jet.
pub fn shape_data(phi: &Jet4, orientation: f64, depth: Depth) -> Result<ShapeData> {
    ShapeData::from_jets(&JetGeometry::new(phi, orientation)?, depth)
}

/// Curvature through the Gauss equation `R_ijkl = A_ik A_jl − A_il A_jk`.
pub fn curvature_from_gauss(sd: &ShapeData) -> Curvature {
    let a = &sd.a;
    let mut riem = Riem::zero();
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                for l in 0..4 {
                    riem.set(i, j, k, l, a[(i, k)] * a[(j, l)] - a[(i, l)] * a[(j, k)]);
                }
            }
        }
    }
    let ric = 4.0 * sd.h * a - a * sd.g_inv * a;
    let scal = 16.0 * sd.h * sd.h - sd.norm2(a);
    Curvature { riem, ric, scal }
}

/// Christoffel symbols `½ g^{kl}(∂_i g_jl + ∂_j g_il − ∂_l g_ij)` of a metric given as jets.
pub fn christoffel_from_metric(g: &JMat, g_inv: &JMat) -> JGamma {
    let dg: [JMat; 4] = std::array::from_fn(|l| jmat_from_fn(|i, j| g[i][j].deriv(l)));
    let low: Vec<JMat> = (0..4)
        .map(|l| jmat_sym(|i, j| (&dg[i][j][l] + &dg[j][i][l] - &dg[l][i][j]).scale(0.5)))
        .collect();
    std::array::from_fn(|k| {
        jmat_sym(|i, j| {
            let t: Vec<Jet> = (0..4).map(|l| &g_inv[k][l] * &low[l][i][j]).collect();
            jet::sum(&t)
        })
    })
}

/// Curvature of a metric given as jets of order at least 2, from `∂Γ + ΓΓ`.
pub fn curvature_from_metric(g: &JMat) -> Result<Curvature> {
    let (g_inv, _) = jmat_inverse(g)?;
    let gamma = christoffel_from_metric(g, &g_inv);
    let gv = jmat_value(g);
    let giv = jmat_value(&g_inv);
    let gam = |m: usize, i: usize, j: usize| gamma[m][i][j].value();
    // R_{ijl}^m = ∂_iΓ^m_jl − ∂_jΓ^m_il + Γ^m_ip Γ^p_jl − Γ^m_jp Γ^p_il
    let mut riem = Riem::zero();
    for i in 0..4 {
        for j in 0..4 {
            for l in 0..4 {
                let mut up = [0.0; 4];
                for (m, u) in up.iter_mut().enumerate() {
                    let mut s = gamma[m][j][l].d(i) - gamma[m][i][l].d(j);
                    for p in 0..4 {
                        s += gam(m, i, p) * gam(p, j, l) - gam(m, j, p) * gam(p, i, l);
                    }
                    *u = s;
                }
                for k in 0..4 {
                    let v: f64 = (0..4).map(|m| gv[(k, m)] * up[m]).sum();
                    riem.set(i, j, k, l, v);
                }
            }
        }
    }
    let ric = riem.ricci(&giv);
    let scal = (giv * ric).trace();
    Ok(Curvature { riem, ric, scal })
}

/// Ricci tensor and scalar curvature as jets, from Christoffel jets of a metric.
/// The result has two orders fewer than the metric.
pub fn ricci_jets(g_inv: &JMat, gamma: &JGamma) -> (JMat, Jet) {
    let ric = jmat_sym(|j, l| {
        let mut terms = Vec::with_capacity(40);
        for i in 0..4 {
            terms.push(gamma[i][j][l].deriv(i));
            terms.push(-gamma[i][i][l].deriv(j));
            for p in 0..4 {
                terms.push(&gamma[i][i][p] * &gamma[p][j][l]);
                terms.push(-(&gamma[i][j][p] * &gamma[p][i][l]));
            }
        }
        jet::sum(&terms)
    });
    let scal = trace_g(g_inv, &ric);
    (ric, scal)
}

/// Intrinsic curvature of the induced metric, independent of the Gauss equation.
pub fn curvature_from_christoffel(phi: &Jet4) -> Result<Curvature> {
    if phi.order() < 3 {
        return Err(GeomError::Domain("intrinsic curvature needs an order ≥ 3 jet".into()));
    }
    let jg = JetGeometry::new(phi, 1.0)?;
    curvature_from_metric(&jg.g)
}

fn need_order(phi: &Jet4, k: usize, what: &str) -> Result<()> {
    if phi.order() < k {
        return Err(GeomError::Domain(format!("{what} needs an order ≥ {k} jet")));
    }
    Ok(())
}

/// Values of a covariant tensor with every slot raised by `g⁻¹`.
pub fn raise_all(vals: &[f64], rank: usize, g_inv: &Matrix4<f64>) -> Vec<f64> {
    let mut cur = vals.to_vec();
    let stride = |s: usize| 4usize.pow((rank - 1 - s) as u32);
    for s in 0..rank {
        let st = stride(s);
        let next: Vec<f64> = (0..cur.len())
            .map(|idx| {
                let a = (idx / st) % 4;
                let base = idx - a * st;
                (0..4).map(|m| g_inv[(a, m)] * cur[base + m * st]).sum()
            })
            .collect();
        cur = next;
    }
    cur
}

/// `|T|²_g` of a covariant tensor given by its values.
pub fn tensor_norm2(vals: &[f64], rank: usize, g_inv: &Matrix4<f64>) -> f64 {
    raise_all(vals, rank, g_inv).iter().zip(vals).map(|(a, b)| a * b).sum()
}

fn values(t: &JetTensor) -> Vec<f64> {
    t.data.iter().map(Jet::value).collect()
}

/// Codazzi `∇_i A_jk = ∇_j A_ik` together with `div Å = 3∇H`. Each residual
/// is a g-norm relative to the g-norm of `∇A`, floored by `|A|²_g`; the larger is returned.
pub fn codazzi_residual(phi: &Jet4) -> Result<f64> {
    need_order(phi, 3, "Codazzi residual")?;
    let jg = JetGeometry::new(phi, 1.0)?;
    let gi = jmat_value(&jg.g_inv);
    let a = jmat_value(&jg.a);
    let na = values(&cov_deriv(&JetTensor::from_jmat(&jg.a), &jg.gamma));
    let swapped: Vec<f64> = (0..64).map(|k| na[k] - na[((k % 16) / 4) * 16 + (k / 16) * 4 + k % 4]).collect();
    let scale = tensor_norm2(&na, 3, &gi).sqrt().max((gi * a * gi * a).trace());
    let codazzi = tensor_norm2(&swapped, 3, &gi).sqrt();
    let nar = values(&cov_deriv(&JetTensor::from_jmat(&jg.a_ring), &jg.gamma));
    let div: Vec<f64> = (0..4)
        .map(|k| {
            let mut d = -3.0 * jg.h.d(k);
            for i in 0..4 {
                for j in 0..4 {
                    d += gi[(i, j)] * nar[i * 16 + j * 4 + k];
                }
            }
            d
        })
        .collect();
    let div_res = tensor_norm2(&div, 1, &gi).sqrt();
    Ok(codazzi.max(div_res) / scale.max(1e-300))
}

/// Simons' identity `ΔA = 4∇²H + 4H A² − |A|² A`: g-norm of the residual
/// relative to the largest term, floored by `|A|³_g`.
pub fn simons_residual(phi: &Jet4) -> Result<f64> {
    need_order(phi, 4, "Simons residual")?;
    let jg = JetGeometry::new(phi, 1.0)?;
    let na = cov_deriv(&JetTensor::from_jmat(&jg.a), &jg.gamma);
    let nna = cov_deriv(&na, &jg.gamma);
    let gi = jmat_value(&jg.g_inv);
    let a = jmat_value(&jg.a);
    let h = jg.h.value();
    let hess = jmat_value(&jg.hessian(&jg.h));
    let a2 = a * gi * a;
    let norm_a = (gi * a * gi * a).trace();
    let lap = Matrix4::from_fn(|i, j| {
        let mut s = 0.0;
        for k in 0..4 {
            for l in 0..4 {
                s += gi[(k, l)] * nna.value(&[k, l, i, j]);
            }
        }
        s
    });
    let terms = [lap, 4.0 * hess, 4.0 * h * a2, norm_a * a];
    let res = terms[0] - terms[1] - terms[2] + terms[3];
    let nrm = |m: &Matrix4<f64>| (gi * m * gi * m.transpose()).trace().max(0.0).sqrt();
    let scale = terms.iter().map(nrm).fold(norm_a.powf(1.5), f64::max);
    Ok(nrm(&res) / scale.max(1e-300))
}

/// Terms of the identity for `ΔScal`, in order: `ΔScal`,
/// `−8∇_i∇_j(A^{ij}H − 4H²g^{ij})`, `32|∇H|²`, `−2|∇A|²`, `−8H²|Å|²`,
/// `−8H trÅ³`, `2|Å|⁴`.
pub fn laplace_scal_terms(phi: &Jet4) -> Result<[f64; 7]> {
    need_order(phi, 4, "Laplacian of Scal")?;
    let jg = JetGeometry::new(phi, 1.0)?;
    let ga = jmat_mul(&jg.g_inv, &jg.a);
    let ga2 = jmat_mul(&ga, &ga);
    let norm_a = jet::sum([&ga2[0][0], &ga2[1][1], &ga2[2][2], &ga2[3][3]]);
    let scal = (&jg.h * &jg.h).scale(16.0) - norm_a;
    let lap_scal = jg.laplacian(&scal).value();
    let h2 = &jg.h * &jg.h;
    let t = jmat_sym(|i, j| &jg.a[i][j] * &jg.h - (&h2 * &jg.g[i][j]).scale(4.0));
    let ddt = cov_deriv(&cov_deriv(&JetTensor::from_jmat(&t), &jg.gamma), &jg.gamma);
    let gi = jmat_value(&jg.g_inv);
    let mut dd = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            for a in 0..4 {
                for b in 0..4 {
                    dd += gi[(i, a)] * gi[(j, b)] * ddt.value(&[i, j, a, b]);
                }
            }
        }
    }
    let sd = ShapeData::from_jets(&jg, Depth::WithDerivatives)?;
    let grad_h2 = sd.grad_h_norm2().unwrap();
    let na = values(&cov_deriv(&JetTensor::from_jmat(&jg.a), &jg.gamma));
    let grad_a2 = tensor_norm2(&na, 3, &gi);
    let p = crate::traceless::TracelessPair::new(sd.g, sd.a_ring).ch_pack();
    let h = sd.h;
    Ok([
        lap_scal,
        -8.0 * dd,
        32.0 * grad_h2,
        -2.0 * grad_a2,
        -8.0 * h * h * p.tr2,
        -8.0 * h * p.tr3,
        2.0 * p.tr2 * p.tr2,
    ])
}

/// Residual of the `ΔScal` identity relative to its largest term, floored by `|A|⁴_g`.
pub fn laplace_scal_residual(phi: &Jet4) -> Result<f64> {
    let t = laplace_scal_terms(phi)?;
    let sd = shape_data(phi, 1.0, Depth::Basic)?;
    let floor = sd.norm2(&sd.a).powi(2);
    let rhs: f64 = t[1..].iter().sum();
    let scale = t.iter().fold(floor, |s, x| s.max(x.abs()));
    Ok((t[0] - rhs).abs() / scale.max(1e-300))
}
