//! Linear algebra on ℝ^{6,1} with η = diag(1,1,1,1,1,1,−1).

use nalgebra::{SMatrix, SVector};

use crate::jet::Jet;

/// Vector of ℝ^{6,1}; the last coordinate is timelike.
pub type MinkowskiVec = SVector<f64, 7>;
/// Real 7×7 matrix.
pub type Mat7 = SMatrix<f64, 7, 7>;

/// The metric η as a matrix.
pub fn eta() -> Mat7 {
    let mut m = Mat7::identity();
    m[(6, 6)] = -1.0;
    m
}

pub fn eta_dot(u: &MinkowskiVec, v: &MinkowskiVec) -> f64 {
    u.iter().zip(v.iter()).take(6).map(|(a, b)| a * b).sum::<f64>() - u[6] * v[6]
}

pub fn eta_norm2(u: &MinkowskiVec) -> f64 {
    eta_dot(u, u)
}

/// η pairing of jet-valued vectors.
pub fn eta_dot_jet(u: &[Jet; 7], v: &[Jet; 7]) -> Jet {
    let mut acc = &u[0] * &v[0];
    for i in 1..6 {
        acc = acc + &u[i] * &v[i];
    }
    acc - &u[6] * &v[6]
}

/// Antisymmetric matrix `(a∧b)^{ij} = aⁱbʲ − aʲbⁱ`, stored with raw upper indices.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WedgeMatrix(pub Mat7);

pub fn wedge(a: &MinkowskiVec, b: &MinkowskiVec) -> WedgeMatrix {
    WedgeMatrix(a * b.transpose() - b * a.transpose())
}

impl WedgeMatrix {
    pub fn zero() -> Self {
        WedgeMatrix(Mat7::zeros())
    }

    pub fn entries(&self) -> &Mat7 {
        &self.0
    }

    /// Pairing with a generator `Ṁ` of so(6,1): for `w = a∧b` this equals `⟨Ṁa, b⟩_η`.
    pub fn contract_generator(&self, mdot: &Mat7) -> f64 {
        let em = eta() * mdot;
        -0.5 * em.component_mul(&self.0).sum()
    }
}

impl std::ops::Add for WedgeMatrix {
    type Output = WedgeMatrix;
    fn add(self, o: WedgeMatrix) -> WedgeMatrix {
        WedgeMatrix(self.0 + o.0)
    }
}

/// Max-norm of `MᵀηM − η`; zero exactly for Lorentz transformations.
pub fn lorentz_residual(m: &Mat7) -> f64 {
    let e = eta();
    (m.transpose() * e * m - e).amax()
}

/// Null lift `(x, (|x|²−1)/2, (|x|²+1)/2)` of a point of ℝ⁵.
pub fn null_lift(x: &SVector<f64, 5>) -> MinkowskiVec {
    let r2 = x.norm_squared();
    MinkowskiVec::from_fn(|i, _| match i {
        0..=4 => x[i],
        5 => 0.5 * (r2 - 1.0),
        _ => 0.5 * (r2 + 1.0),
    })
}

/// Null lift of a jet-valued point.
pub fn null_lift_jet(x: &[Jet; 5]) -> [Jet; 7] {
    let r2 = crate::jet::dot(x, x);
    std::array::from_fn(|i| match i {
        0..=4 => x[i].clone(),
        5 => (&r2).add_scalar(-1.0).scale(0.5),
        _ => (&r2).add_scalar(1.0).scale(0.5),
    })
}

/// Generator of a rotation in the coordinate plane `(i, j)` with `i, j < 6`.
pub fn rotation_generator(i: usize, j: usize) -> Mat7 {
    let mut m = Mat7::zeros();
    m[(i, j)] = -1.0;
    m[(j, i)] = 1.0;
    m
}

/// Generator of a boost mixing spatial coordinate `i` with the time coordinate.
pub fn boost_generator(i: usize) -> Mat7 {
    let mut m = Mat7::zeros();
    m[(i, 6)] = 1.0;
    m[(6, i)] = 1.0;
    m
}
