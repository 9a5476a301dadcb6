//! Truncated multivariate Taylor expansions in four variables.
//!
//! A [`Jet`] of order `K` stores the coefficients `∂^α f / α!` for every
//! multi-index with `|α| ≤ K`, in graded lexicographic order. Because the
//! order-`k` coefficients form a prefix of the order-`K` ones, truncation is a
//! slice and products are a precomputed convolution.

use std::ops::{Add, Mul, Neg, Sub};
use std::sync::OnceLock;

use crate::error::{GeomError, Result};

/// Number of base variables.
pub const NVARS: usize = 4;
/// Highest supported truncation order.
pub const MAX_ORDER: usize = 6;

struct Tables {
    alphas: Vec<[u8; NVARS]>,
    count: [usize; MAX_ORDER + 1],
    lookup: Vec<u32>,
    up: Vec<[u32; NVARS]>,
    mul_offsets: Vec<usize>,
    mul_pairs: Vec<(u16, u16)>,
}

const NONE: u32 = u32::MAX;

fn key(a: &[u8; NVARS]) -> usize {
    let b = MAX_ORDER + 1;
    ((a[0] as usize * b + a[1] as usize) * b + a[2] as usize) * b + a[3] as usize
}

fn tables() -> &'static Tables {
    static T: OnceLock<Tables> = OnceLock::new();
    T.get_or_init(|| {
        let mut alphas = Vec::new();
        let mut count = [0; MAX_ORDER + 1];
        for d in 0..=MAX_ORDER as u8 {
            for a0 in (0..=d).rev() {
                for a1 in (0..=d - a0).rev() {
                    for a2 in (0..=d - a0 - a1).rev() {
                        alphas.push([a0, a1, a2, d - a0 - a1 - a2]);
                    }
                }
            }
            count[d as usize] = alphas.len();
        }
        let b = MAX_ORDER + 1;
        let mut lookup = vec![NONE; b * b * b * b];
        for (i, a) in alphas.iter().enumerate() {
            lookup[key(a)] = i as u32;
        }
        let up = alphas
            .iter()
            .map(|a| {
                let mut r = [NONE; NVARS];
                for (v, slot) in r.iter_mut().enumerate() {
                    let mut b = *a;
                    b[v] += 1;
                    if b.iter().map(|&x| x as usize).sum::<usize>() <= MAX_ORDER {
                        *slot = lookup[key(&b)];
                    }
                }
                r
            })
            .collect();
        let mut mul_offsets = vec![0];
        let mut mul_pairs = Vec::new();
        for c in &alphas {
            for (i, a) in alphas.iter().enumerate() {
                if (0..NVARS).all(|v| a[v] <= c[v]) {
                    let rest = [c[0] - a[0], c[1] - a[1], c[2] - a[2], c[3] - a[3]];
                    mul_pairs.push((i as u16, lookup[key(&rest)] as u16));
                }
            }
            mul_offsets.push(mul_pairs.len());
        }
        Tables { alphas, count, lookup, up, mul_offsets, mul_pairs }
    })
}

/// Number of coefficients of a jet of the given order, `C(4+K, 4)`.
pub fn coeff_count(order: usize) -> usize {
    tables().count[order]
}

/// Multi-indices of all coefficients up to `order`, in storage order.
pub fn multi_indices(order: usize) -> &'static [[u8; NVARS]] {
    &tables().alphas[..coeff_count(order)]
}

/// Storage position of a multi-index, if it is within [`MAX_ORDER`].
pub fn index_of(alpha: [u8; NVARS]) -> Option<usize> {
    if alpha.iter().map(|&x| x as usize).sum::<usize>() > MAX_ORDER {
        return None;
    }
    let i = tables().lookup[key(&alpha)];
    (i != NONE).then_some(i as usize)
}

/// `α!` for a multi-index.
pub fn alpha_factorial(alpha: [u8; NVARS]) -> f64 {
    alpha.iter().map(|&a| (1..=a as u32).product::<u32>() as f64).product()
}

/// Scalar jet in four variables.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    order: usize,
    c: Vec<f64>,
}

impl Jet {
    pub fn zero(order: usize) -> Self {
        assert!(order <= MAX_ORDER, "jet order {order} exceeds {MAX_ORDER}");
        Jet { order, c: vec![0.0; coeff_count(order)] }
    }

    pub fn constant(value: f64, order: usize) -> Self {
        let mut j = Jet::zero(order);
        j.c[0] = value;
        j
    }

    /// The jet of `u ↦ u_var` at a point where `u_var = value`.
    pub fn variable(value: f64, var: usize, order: usize) -> Self {
        let mut j = Jet::constant(value, order);
        if order >= 1 {
            j.c[1 + var] = 1.0;
        }
        j
    }

    pub fn from_coeffs(order: usize, c: Vec<f64>) -> Self {
        assert_eq!(c.len(), coeff_count(order), "coefficient count mismatch for order {order}");
        Jet { order, c }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.c
    }

    /// Coefficient `∂^α f / α!`, zero beyond the truncation order.
    pub fn coeff(&self, alpha: [u8; NVARS]) -> f64 {
        match index_of(alpha) {
            Some(i) if i < self.c.len() => self.c[i],
            _ => 0.0,
        }
    }

    /// Partial derivative `∂^α f` at the expansion point.
    pub fn partial(&self, alpha: [u8; NVARS]) -> f64 {
        self.coeff(alpha) * alpha_factorial(alpha)
    }

    /// First partial derivative `∂_i f` at the expansion point.
    pub fn d(&self, i: usize) -> f64 {
        self.c[1 + i]
    }

    /// Second partial derivative `∂_i ∂_j f` at the expansion point.
    pub fn d2(&self, i: usize, j: usize) -> f64 {
        let mut a = [0u8; NVARS];
        a[i] += 1;
        a[j] += 1;
        self.partial(a)
    }

    pub fn truncate(&self, order: usize) -> Jet {
        let order = order.min(self.order);
        Jet { order, c: self.c[..coeff_count(order)].to_vec() }
    }

    /// Jet of `∂f/∂u_var`, one order lower.
    pub fn deriv(&self, var: usize) -> Jet {
        assert!(self.order >= 1, "cannot differentiate an order-0 jet");
        let t = tables();
        let n = coeff_count(self.order - 1);
        let c = (0..n)
            .map(|i| {
                let k = t.up[i][var] as usize;
                (t.alphas[i][var] as f64 + 1.0) * self.c[k]
            })
            .collect();
        Jet { order: self.order - 1, c }
    }

    pub fn scale(&self, s: f64) -> Jet {
        Jet { order: self.order, c: self.c.iter().map(|x| x * s).collect() }
    }

    pub fn add_scalar(&self, s: f64) -> Jet {
        let mut r = self.clone();
        r.c[0] += s;
        r
    }

    fn zip(&self, o: &Jet, f: impl Fn(f64, f64) -> f64) -> Jet {
        let order = self.order.min(o.order);
        let n = coeff_count(order);
        Jet { order, c: (0..n).map(|i| f(self.c[i], o.c[i])).collect() }
    }

    /// Truncated product at the smaller of the two orders.
    pub fn mul_jet(&self, o: &Jet) -> Jet {
        let order = self.order.min(o.order);
        let t = tables();
        let n = coeff_count(order);
        let mut c = vec![0.0; n];
        for (k, ck) in c.iter_mut().enumerate() {
            let mut s = 0.0;
            for &(i, j) in &t.mul_pairs[t.mul_offsets[k]..t.mul_offsets[k + 1]] {
                s += self.c[i as usize] * o.c[j as usize];
            }
            *ck = s;
        }
        Jet { order, c }
    }

    /// Composition `φ ∘ f` given `taylor[m] = φ^{(m)}(f(0)) / m!` for `m ≤ K`.
    pub fn compose(&self, taylor: &[f64]) -> Jet {
        let k = self.order;
        assert!(taylor.len() > k, "need {} Taylor coefficients", k + 1);
        let mut delta = self.clone();
        delta.c[0] = 0.0;
        let mut r = Jet::constant(taylor[k], k);
        for m in (0..k).rev() {
            r = r.mul_jet(&delta).add_scalar(taylor[m]);
        }
        r
    }

    pub fn recip(&self) -> Result<Jet> {
        let a = self.value();
        if a == 0.0 || !a.is_finite() {
            return Err(GeomError::Domain(format!("reciprocal of jet with value {a}")));
        }
        let mut t = Vec::with_capacity(self.order + 1);
        let mut p = 1.0 / a;
        for _ in 0..=self.order {
            t.push(p);
            p *= -1.0 / a;
        }
        Ok(self.compose(&t))
    }

    /// Real power `f^p` for a positive base value.
    pub fn powf(&self, p: f64) -> Result<Jet> {
        let a = self.value();
        if a <= 0.0 || !a.is_finite() {
            return Err(GeomError::Domain(format!("power {p} of jet with value {a}")));
        }
        let mut t = Vec::with_capacity(self.order + 1);
        let mut binom = 1.0;
        for m in 0..=self.order {
            t.push(binom * a.powf(p - m as f64));
            binom *= (p - m as f64) / (m as f64 + 1.0);
        }
        Ok(self.compose(&t))
    }

    pub fn sqrt(&self) -> Result<Jet> {
        self.powf(0.5)
    }

    pub fn div(&self, o: &Jet) -> Result<Jet> {
        Ok(self.mul_jet(&o.recip()?))
    }

    fn compose_periodic(&self, derivs: [f64; 4]) -> Jet {
        let mut t = Vec::with_capacity(self.order + 1);
        let mut fact = 1.0;
        for m in 0..=self.order {
            if m > 0 {
                fact *= m as f64;
            }
            t.push(derivs[m % 4] / fact);
        }
        self.compose(&t)
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        self.compose_periodic([s, c, -s, -c])
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        self.compose_periodic([c, -s, -c, s])
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        let mut t = Vec::with_capacity(self.order + 1);
        let mut fact = 1.0;
        for m in 0..=self.order {
            if m > 0 {
                fact *= m as f64;
            }
            t.push(e / fact);
        }
        self.compose(&t)
    }

    pub fn ln(&self) -> Result<Jet> {
        let a = self.value();
        if a <= 0.0 || !a.is_finite() {
            return Err(GeomError::Domain(format!("logarithm of jet with value {a}")));
        }
        let mut t = vec![a.ln()];
        for m in 1..=self.order {
            let sign = if m % 2 == 1 { 1.0 } else { -1.0 };
            t.push(sign / (m as f64 * a.powi(m as i32)));
        }
        Ok(self.compose(&t))
    }

    /// Evaluate the truncated polynomial at displacement `h`.
    pub fn eval_at(&self, h: [f64; NVARS]) -> f64 {
        multi_indices(self.order)
            .iter()
            .zip(&self.c)
            .map(|(a, c)| c * (0..NVARS).map(|v| h[v].powi(a[v] as i32)).product::<f64>())
            .sum()
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $body:expr) => {
        impl $tr<&Jet> for &Jet {
            type Output = Jet;
            fn $m(self, o: &Jet) -> Jet {
                $body(self, o)
            }
        }
        impl $tr<Jet> for Jet {
            type Output = Jet;
            fn $m(self, o: Jet) -> Jet {
                $body(&self, &o)
            }
        }
        impl $tr<&Jet> for Jet {
            type Output = Jet;
            fn $m(self, o: &Jet) -> Jet {
                $body(&self, o)
            }
        }
        impl $tr<Jet> for &Jet {
            type Output = Jet;
            fn $m(self, o: Jet) -> Jet {
                $body(self, &o)
            }
        }
    };
}

binop!(Add, add, |a: &Jet, b: &Jet| a.zip(b, |x, y| x + y));
binop!(Sub, sub, |a: &Jet, b: &Jet| a.zip(b, |x, y| x - y));
binop!(Mul, mul, |a: &Jet, b: &Jet| a.mul_jet(b));

impl Mul<f64> for &Jet {
    type Output = Jet;
    fn mul(self, s: f64) -> Jet {
        self.scale(s)
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, s: f64) -> Jet {
        self.scale(s)
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

/// Sum of products `Σ aᵢ bᵢ` over paired jets.
pub fn dot(a: &[Jet], b: &[Jet]) -> Jet {
    let mut it = a.iter().zip(b);
    let (x, y) = it.next().expect("empty dot product");
    it.fold(x * y, |acc, (x, y)| acc + x * y)
}

/// Sum of jets, at the smallest order among them.
pub fn sum<'a>(terms: impl IntoIterator<Item = &'a Jet>) -> Jet {
    let mut it = terms.into_iter();
    let first = it.next().expect("empty jet sum").clone();
    it.fold(first, |acc, x| acc + x)
}

/// Vector-valued jet: one scalar jet per target component.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet4 {
    comps: Vec<Jet>,
}

impl Jet4 {
    pub fn new(comps: Vec<Jet>) -> Self {
        assert!(!comps.is_empty());
        let order = comps.iter().map(Jet::order).min().unwrap();
        Jet4 { comps: comps.into_iter().map(|c| c.truncate(order)).collect() }
    }

    pub fn target_dim(&self) -> usize {
        self.comps.len()
    }

    pub fn order(&self) -> usize {
        self.comps[0].order()
    }

    pub fn comps(&self) -> &[Jet] {
        &self.comps
    }

    pub fn component(&self, i: usize) -> &Jet {
        &self.comps[i]
    }

    pub fn value(&self) -> Vec<f64> {
        self.comps.iter().map(Jet::value).collect()
    }

    pub fn partial(&self, alpha: [u8; NVARS]) -> Vec<f64> {
        self.comps.iter().map(|c| c.partial(alpha)).collect()
    }

    pub fn coeff(&self, alpha: [u8; NVARS]) -> Vec<f64> {
        self.comps.iter().map(|c| c.coeff(alpha)).collect()
    }
}

/// Seed the four coordinate jets at a base point.
pub fn seed(u: [f64; NVARS], order: usize) -> [Jet; NVARS] {
    std::array::from_fn(|v| Jet::variable(u[v], v, order))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_are_binomial() {
        for k in 0..=MAX_ORDER {
            let expect = (1..=4).fold(1usize, |b, t| b * (k + t) / t);
            assert_eq!(coeff_count(k), expect);
        }
    }

    #[test]
    fn square_of_variable() {
        let x = Jet::variable(0.3, 0, 2);
        let y = &x * &x;
        assert!((y.value() - 0.09).abs() < 1e-15);
        assert!((y.d(0) - 0.6).abs() < 1e-15);
        assert!((y.d2(0, 0) - 2.0).abs() < 1e-15);
        assert_eq!(y.coeff([2, 0, 0, 0]), 1.0);
    }

    #[test]
    fn sqrt_of_constant_has_no_derivatives() {
        let c = Jet::constant(4.0, 5).sqrt().unwrap();
        assert_eq!(c.value(), 2.0);
        assert!(c.coeffs()[1..].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn reciprocal_at_zero_fails() {
        assert!(matches!(Jet::variable(0.0, 1, 3).recip(), Err(GeomError::Domain(_))));
    }

    #[test]
    fn one_variable_series() {
        let x = Jet::variable(0.0, 2, 6);
        let s = x.sin();
        let e = x.exp();
        let r = x.add_scalar(1.0).recip().unwrap();
        for m in 0..=6u8 {
            let a = [0, 0, m, 0];
            let f: f64 = (1..=m as u32).map(|t| t as f64).product();
            let sin_m = [0.0, 1.0, 0.0, -1.0][m as usize % 4] / f;
            assert!((s.coeff(a) - sin_m).abs() < 1e-15);
            assert!((e.coeff(a) - 1.0 / f).abs() < 1e-15);
            assert!((r.coeff(a) - if m % 2 == 0 { 1.0 } else { -1.0 }).abs() < 1e-14);
        }
    }

    #[test]
    fn derivative_lowers_order() {
        let x = Jet::variable(1.0, 0, 4);
        let y = Jet::variable(2.0, 1, 4);
        let f = &(&x * &x) * &y;
        let fx = f.deriv(0);
        assert_eq!(fx.order(), 3);
        assert!((fx.value() - 4.0).abs() < 1e-14);
        assert!((fx.d(1) - 2.0).abs() < 1e-14);
        assert!((f.d2(0, 1) - 2.0).abs() < 1e-14);
    }
}
