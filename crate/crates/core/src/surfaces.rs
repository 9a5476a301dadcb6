//! Model hypersurfaces with analytic charts, tensor-product quadrature and
//! deterministic atlas integration.

use std::f64::consts::PI;
use std::sync::Arc;

use gauss_quad::GaussLegendre;
use nalgebra::{SMatrix, Vector5};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chart::{chart_jet, ChartDomain, ChartFn, ChartMap};
use crate::error::{GeomError, Result};
use crate::geometry::cross5;
use crate::jet::{self, Jet, Jet4, NVARS};

/// Model surface kinds. `Custom` wraps an externally built atlas and is not serializable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SurfaceKind {
    RoundSphere {
        radius: f64,
        #[serde(default)]
        center: [f64; 5],
    },
    TorusOfRevolution {
        major: f64,
        minor: f64,
    },
    /// Radial graph `r₀(1 + ε ω₁ω₂) ω` over the unit sphere.
    PerturbedSphere {
        radius: f64,
        amplitude: f64,
    },
    /// Torus whose tube radius is modulated by `1 + ε ω₁ω₂`.
    PerturbedTorus {
        major: f64,
        minor: f64,
        amplitude: f64,
    },
    #[serde(rename = "patch_r2xs2")]
    PatchR2xS2 {
        side: f64,
    },
    #[serde(rename = "patch_rxs3")]
    PatchRxS3 {
        length: f64,
    },
    #[serde(skip)]
    Custom(CustomAtlas),
}

/// Handle to a user-supplied atlas; equality is identity.
#[derive(Clone, Debug)]
pub struct CustomAtlas(pub Arc<SurfaceAtlas>);

impl PartialEq for CustomAtlas {
    fn eq(&self, o: &Self) -> bool {
        Arc::ptr_eq(&self.0, &o.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceSpec {
    #[serde(rename = "shape")]
    pub kind: SurfaceKind,
    /// Reverse the default normal (the default makes H > 0 on round spheres).
    #[serde(default)]
    pub flip_orientation: bool,
}

impl SurfaceSpec {
    pub fn new(kind: SurfaceKind) -> Self {
        SurfaceSpec { kind, flip_orientation: false }
    }

    pub fn unit_sphere() -> Self {
        Self::new(SurfaceKind::RoundSphere { radius: 1.0, center: [0.0; 5] })
    }

    pub fn torus(major: f64, minor: f64) -> Self {
        Self::new(SurfaceKind::TorusOfRevolution { major, minor })
    }

    pub fn flipped(mut self) -> Self {
        self.flip_orientation = !self.flip_orientation;
        self
    }

    /// Short identifier used in reports.
    pub fn label(&self) -> String {
        let base = match &self.kind {
            SurfaceKind::RoundSphere { radius, .. } => format!("sphere:{radius}"),
            SurfaceKind::TorusOfRevolution { major, minor } => format!("torus:{major},{minor}"),
            SurfaceKind::PerturbedSphere { radius, amplitude } => {
                format!("perturbed-sphere:{radius},{amplitude}")
            }
            SurfaceKind::PerturbedTorus { major, minor, amplitude } => {
                format!("perturbed-torus:{major},{minor},{amplitude}")
            }
            SurfaceKind::PatchR2xS2 { side } => format!("r2xs2:{side}"),
            SurfaceKind::PatchRxS3 { length } => format!("rxs3:{length}"),
            SurfaceKind::Custom(a) => format!("custom:{}", a.0.name),
        };
        if self.flip_orientation {
            format!("{base}:flipped")
        } else {
            base
        }
    }
}

/// Charts with pairwise disjoint quadrature domains (so every partition
/// weight is 1), the Euler characteristic when closed, and a name.
#[derive(Clone, Debug)]
pub struct SurfaceAtlas {
    pub name: String,
    pub charts: Vec<ChartMap>,
    pub closed: bool,
    pub euler_characteristic: Option<i32>,
}

impl SurfaceAtlas {
    /// Apply `f` to every chart map, keeping domains and quadrature layout.
    pub fn map_charts(&self, name: String, f: impl Fn(&ChartMap) -> ChartMap) -> SurfaceAtlas {
        SurfaceAtlas {
            name,
            charts: self.charts.iter().map(f).collect(),
            closed: self.closed,
            euler_characteristic: self.euler_characteristic,
        }
    }
}

fn cj(x: f64, order: usize) -> Jet {
    Jet::constant(x, order)
}

/// Unit 3-sphere coordinates `(cosψ, sinψ cosϑ, sinψ sinϑ cosφ, sinψ sinϑ sinφ)`.
fn s3_point(psi: &Jet, th: &Jet, ph: &Jet) -> [Jet; 4] {
    let (sp, st) = (psi.sin(), th.sin());
    let spst = &sp * &st;
    [psi.cos(), &sp * &th.cos(), &spst * &ph.cos(), &spst * &ph.sin()]
}

/// Unit 4-sphere coordinates with the first axis polar.
fn s4_point(u: &[Jet; 4]) -> [Jet; 5] {
    let s1 = u[0].sin();
    let w = s3_point(&u[1], &u[2], &u[3]);
    [u[0].cos(), &s1 * &w[0], &s1 * &w[1], &s1 * &w[2], &s1 * &w[3]]
}

fn check(cond: bool, msg: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(GeomError::Validation(msg.into()))
    }
}

fn finite(xs: &[f64]) -> bool {
    xs.iter().all(|x| x.is_finite())
}

/// Choose the sign so that the normal has positive pairing with `inward`
/// at the centre of the domain.
fn orient(map: &Arc<dyn ChartFn>, domain: &ChartDomain, inward: &dyn Fn(&[f64; 5]) -> [f64; 5]) -> Result<f64> {
    let u = domain.from_unit([0.37, 0.41, 0.43, 0.29], 0.0);
    let p = map.eval(&jet::seed(u, 1))?;
    let cols: [[Jet; 5]; 4] = std::array::from_fn(|i| std::array::from_fn(|a| p[a].deriv(i)));
    let n = cross5(&cols);
    let x: [f64; 5] = std::array::from_fn(|a| p[a].value());
    let r = inward(&x);
    let s: f64 = (0..5).map(|a| n[a].value() * r[a]).sum();
    if s == 0.0 {
        return Err(GeomError::Degeneracy("cannot orient chart".into()));
    }
    Ok(s.signum())
}

fn chart(
    map: Arc<dyn ChartFn>,
    domain: ChartDomain,
    base_nodes: [usize; 4],
    inward: &dyn Fn(&[f64; 5]) -> [f64; 5],
    flip: bool,
) -> Result<ChartMap> {
    let s = orient(&map, &domain, inward)?;
    Ok(ChartMap { domain, map, orientation: if flip { -s } else { s }, base_nodes })
}

fn sphere_domain() -> ChartDomain {
    ChartDomain { lo: [0.0; 4], hi: [PI / 2.0, PI, PI, 2.0 * PI], periodic: [false, false, false, true] }
}

fn torus_domain() -> ChartDomain {
    ChartDomain { lo: [0.0; 4], hi: [2.0 * PI, PI, PI, 2.0 * PI], periodic: [true, false, false, true] }
}

/// Two polar charts (north and mirrored south) of a radial graph `ρ(ω)ω + c`.
fn radial_atlas(
    name: String,
    radius: f64,
    center: [f64; 5],
    amplitude: f64,
    flip: bool,
) -> Result<SurfaceAtlas> {
    let mut charts = Vec::new();
    for mirror in [1.0, -1.0] {
        let map: Arc<dyn ChartFn> = Arc::new(move |u: &[Jet; 4]| {
            let k = u[0].order();
            let mut w = s4_point(u);
            w[0] = w[0].scale(mirror);
            let rho = if amplitude == 0.0 {
                cj(radius, k)
            } else {
                (&w[0] * &w[1]).scale(radius * amplitude).add_scalar(radius)
            };
            Ok(std::array::from_fn(|a| (&rho * &w[a]).add_scalar(center[a])))
        });
        let inward = move |x: &[f64; 5]| -> [f64; 5] { std::array::from_fn(|a| center[a] - x[a]) };
        charts.push(chart(map, sphere_domain(), [4, 6, 6, 8], &inward, flip)?);
    }
    Ok(SurfaceAtlas { name, charts, closed: true, euler_characteristic: Some(2) })
}

fn torus_atlas(name: String, major: f64, minor: f64, amplitude: f64, flip: bool) -> Result<SurfaceAtlas> {
    let map: Arc<dyn ChartFn> = Arc::new(move |u: &[Jet; 4]| {
        let w = s3_point(&u[1], &u[2], &u[3]);
        let tube = if amplitude == 0.0 {
            cj(minor, u[0].order())
        } else {
            (&w[0] * &w[1]).scale(minor * amplitude).add_scalar(minor)
        };
        let rad = (&tube * &u[0].cos()).add_scalar(major);
        Ok([&rad * &w[0], &rad * &w[1], &rad * &w[2], &rad * &w[3], &tube * &u[0].sin()])
    });
    let inward = move |x: &[f64; 5]| -> [f64; 5] {
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + x[3] * x[3]).sqrt();
        let s = major / r;
        [x[0] * (s - 1.0), x[1] * (s - 1.0), x[2] * (s - 1.0), x[3] * (s - 1.0), -x[4]]
    };
    let c = chart(map, torus_domain(), [8, 4, 4, 6], &inward, flip)?;
    Ok(SurfaceAtlas { name, charts: vec![c], closed: true, euler_characteristic: Some(0) })
}

/// Build the atlas of a model surface.
pub fn make_surface(spec: &SurfaceSpec) -> Result<SurfaceAtlas> {
    let name = spec.label();
    let flip = spec.flip_orientation;
    match &spec.kind {
        SurfaceKind::RoundSphere { radius, center } => {
            check(finite(center) && radius.is_finite() && *radius > 0.0, "sphere radius must be positive")?;
            radial_atlas(name, *radius, *center, 0.0, flip)
        }
        SurfaceKind::PerturbedSphere { radius, amplitude } => {
            check(radius.is_finite() && *radius > 0.0, "sphere radius must be positive")?;
            // ω₁ω₂ ∈ [−½, ½], so |ε| < 1 keeps ρ ≥ r₀/2 > 0 and the radial graph immersed.
            check(amplitude.is_finite() && amplitude.abs() < 1.0, "perturbation amplitude must satisfy |ε| < 1")?;
            radial_atlas(name, *radius, [0.0; 5], *amplitude, flip)
        }
        SurfaceKind::TorusOfRevolution { major, minor } => {
            check(
                major.is_finite() && minor.is_finite() && *minor > 0.0 && major > minor,
                "torus needs R > a > 0",
            )?;
            torus_atlas(name, *major, *minor, 0.0, flip)
        }
        SurfaceKind::PerturbedTorus { major, minor, amplitude } => {
            check(
                major.is_finite() && minor.is_finite() && *minor > 0.0 && major > minor,
                "torus needs R > a > 0",
            )?;
            check(
                amplitude.is_finite() && minor * (1.0 + 0.5 * amplitude.abs()) < *major && amplitude.abs() < 1.0,
                "tube modulation must keep the tube inside R and positive",
            )?;
            torus_atlas(name, *major, *minor, *amplitude, flip)
        }
        SurfaceKind::PatchR2xS2 { side } => {
            check(side.is_finite() && *side > 0.0, "patch side must be positive")?;
            let map: Arc<dyn ChartFn> = Arc::new(|u: &[Jet; 4]| {
                let s = u[2].sin();
                Ok([u[0].clone(), u[1].clone(), u[2].cos(), &s * &u[3].cos(), &s * &u[3].sin()])
            });
            let domain = ChartDomain { lo: [0.0; 4], hi: [*side, *side, PI, 2.0 * PI], periodic: [false, false, false, true] };
            let inward = |x: &[f64; 5]| [0.0, 0.0, -x[2], -x[3], -x[4]];
            let c = chart(map, domain, [2, 2, 6, 8], &inward, flip)?;
            Ok(SurfaceAtlas { name, charts: vec![c], closed: false, euler_characteristic: None })
        }
        SurfaceKind::PatchRxS3 { length } => {
            check(length.is_finite() && *length > 0.0, "patch length must be positive")?;
            let map: Arc<dyn ChartFn> = Arc::new(|u: &[Jet; 4]| {
                let w = s3_point(&u[1], &u[2], &u[3]);
                let [a, b, c, d] = w;
                Ok([u[0].clone(), a, b, c, d])
            });
            let domain = ChartDomain { lo: [0.0; 4], hi: [*length, PI, PI, 2.0 * PI], periodic: [false, false, false, true] };
            let inward = |x: &[f64; 5]| [0.0, -x[1], -x[2], -x[3], -x[4]];
            let c = chart(map, domain, [2, 4, 4, 6], &inward, flip)?;
            Ok(SurfaceAtlas { name, charts: vec![c], closed: false, euler_characteristic: None })
        }
        SurfaceKind::Custom(a) => {
            let mut atlas = (*a.0).clone();
            if flip {
                for c in &mut atlas.charts {
                    c.orientation = -c.orientation;
                }
            }
            Ok(atlas)
        }
    }
}

/// Closed-form principal curvatures and mean curvature at a parameter point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExactReference {
    /// Principal curvatures in increasing order.
    pub principal: [f64; 4],
    pub h: f64,
    pub a_norm2: f64,
}

impl ExactReference {
    fn new(mut k: [f64; 4], sign: f64) -> Self {
        for x in &mut k {
            *x *= sign;
        }
        k.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ExactReference { principal: k, h: k.iter().sum::<f64>() / 4.0, a_norm2: k.iter().map(|x| x * x).sum() }
    }
}

/// Closed-form reference at a parameter point `u` of chart `chart`.
pub fn exact_reference(spec: &SurfaceSpec, chart: usize, u: [f64; 4]) -> Result<ExactReference> {
    let _ = chart;
    let sign = if spec.flip_orientation { -1.0 } else { 1.0 };
    match &spec.kind {
        SurfaceKind::RoundSphere { radius, .. } => Ok(ExactReference::new([1.0 / radius; 4], sign)),
        SurfaceKind::TorusOfRevolution { major, minor } => {
            let c = u[0].cos();
            let k = c / (major + minor * c);
            Ok(ExactReference::new([1.0 / minor, k, k, k], sign))
        }
        SurfaceKind::PatchR2xS2 { .. } => Ok(ExactReference::new([0.0, 0.0, 1.0, 1.0], sign)),
        SurfaceKind::PatchRxS3 { .. } => Ok(ExactReference::new([0.0, 1.0, 1.0, 1.0], sign)),
        SurfaceKind::PerturbedSphere { .. } | SurfaceKind::PerturbedTorus { .. } | SurfaceKind::Custom(_) => {
            Err(GeomError::NoReference)
        }
    }
}

/// Per-axis node counts at a refinement level: `round(base·2^{level/2})`.
pub fn node_counts(base: [usize; 4], level: usize) -> [usize; 4] {
    let f = 2f64.powf(level as f64 / 2.0);
    std::array::from_fn(|v| ((base[v] as f64 * f).round() as usize).max(2))
}

/// One-dimensional rule on `[lo, hi]`: trapezoid if periodic, Gauss–Legendre otherwise.
pub fn axis_rule(lo: f64, hi: f64, n: usize, periodic: bool) -> Vec<(f64, f64)> {
    let len = hi - lo;
    if periodic {
        let h = len / n as f64;
        (0..n).map(|k| (lo + (k as f64 + 0.5) * h, h)).collect()
    } else {
        let gl = GaussLegendre::new(n.max(2)).expect("Gauss-Legendre degree ≥ 2");
        let mut v: Vec<(f64, f64)> = gl
            .iter()
            .map(|(x, w)| (lo + 0.5 * (x + 1.0) * len, 0.5 * len * w))
            .collect();
        v.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        v
    }
}

/// Tensor-product grid of one chart.
#[derive(Clone, Debug, PartialEq)]
pub struct ChartGrid {
    pub axes: [Vec<(f64, f64)>; 4],
}

impl ChartGrid {
    pub fn len(&self) -> usize {
        self.axes.iter().map(Vec::len).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Node `k` in row-major order (last axis fastest) and its weight.
    pub fn node(&self, mut k: usize) -> ([f64; 4], f64) {
        let mut u = [0.0; 4];
        let mut w = 1.0;
        for v in (0..4).rev() {
            let n = self.axes[v].len();
            let (x, wx) = self.axes[v][k % n];
            u[v] = x;
            w *= wx;
            k /= n;
        }
        (u, w)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureGrid {
    pub level: usize,
    pub charts: Vec<ChartGrid>,
}

impl QuadratureGrid {
    pub fn len(&self) -> usize {
        self.charts.iter().map(ChartGrid::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn quadrature_grid(atlas: &SurfaceAtlas, level: usize) -> QuadratureGrid {
    let charts = atlas
        .charts
        .iter()
        .map(|c| {
            let n = node_counts(c.base_nodes, level);
            let d = &c.domain;
            ChartGrid { axes: std::array::from_fn(|v| axis_rule(d.lo[v], d.hi[v], n[v], d.periodic[v])) }
        })
        .collect();
    QuadratureGrid { level, charts }
}

/// Neumaier-compensated running sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated sum in the given order.
pub fn neumaier_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut s = NeumaierSum::default();
    for x in xs {
        s.add(x);
    }
    s.value()
}

/// Evaluation context handed to integrands.
pub struct Node<'a> {
    pub chart: usize,
    pub u: [f64; NVARS],
    pub jet: &'a Jet4,
    pub orientation: f64,
}

/// `√det g` from the first derivatives of a chart jet.
pub fn volume_element(jet: &Jet4) -> f64 {
    let j = SMatrix::<f64, 5, 4>::from_fn(|a, i| jet.component(a).d(i));
    (j.transpose() * j).determinant().max(0.0).sqrt()
}

/// Point of ℝ⁵ from a chart jet.
pub fn jet_point(jet: &Jet4) -> Vector5<f64> {
    Vector5::from_fn(|a, _| jet.component(a).value())
}

/// Integrate several fields at once: `Σ w·f·√det g` per component, evaluated
/// in parallel and reduced in the fixed node order with compensated sums.
pub fn integrate_many<F>(atlas: &SurfaceAtlas, level: usize, order: usize, n_out: usize, field: F) -> Result<Vec<f64>>
where
    F: Fn(&Node) -> Result<Vec<f64>> + Sync,
{
    let grid = quadrature_grid(atlas, level);
    let mut sums = vec![NeumaierSum::default(); n_out];
    for (ci, (c, cg)) in atlas.charts.iter().zip(&grid.charts).enumerate() {
        let vals: Vec<Result<Vec<f64>>> = (0..cg.len())
            .into_par_iter()
            .map(|k| {
                let (u, w) = cg.node(k);
                let wrap = |e: GeomError| GeomError::AtNode { chart: ci, node: u, source: Box::new(e) };
                let jet = chart_jet(c, u, order).map_err(wrap)?;
                let node = Node { chart: ci, u, jet: &jet, orientation: c.orientation };
                let f = field(&node).map_err(wrap)?;
                let s = w * volume_element(&jet);
                Ok(f.into_iter().map(|x| x * s).collect())
            })
            .collect();
        for v in vals {
            let v = v?;
            if v.len() != n_out {
                return Err(GeomError::Validation(format!("integrand returned {} values, expected {n_out}", v.len())));
            }
            for (s, x) in sums.iter_mut().zip(v) {
                s.add(x);
            }
        }
    }
    Ok(sums.iter().map(NeumaierSum::value).collect())
}

/// Integral with the refinement estimate `|I(ℓ) − I(ℓ−1)|` (absent at level 0).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Integral {
    pub value: f64,
    pub level: usize,
    pub error_estimate: Option<f64>,
}

pub fn integrate<F>(atlas: &SurfaceAtlas, level: usize, order: usize, field: F) -> Result<Integral>
where
    F: Fn(&Node) -> Result<f64> + Sync,
{
    let one = |n: &Node| field(n).map(|x| vec![x]);
    let value = integrate_many(atlas, level, order, 1, one)?[0];
    let error_estimate = if level > 0 {
        Some((value - integrate_many(atlas, level - 1, order, 1, one)?[0]).abs())
    } else {
        None
    };
    Ok(Integral { value, level, error_estimate })
}

/// Riemannian volume.
pub fn volume(atlas: &SurfaceAtlas, level: usize) -> Result<f64> {
    Ok(integrate_many(atlas, level, 1, 1, |_| Ok(vec![1.0]))?[0])
}

/// Radical inverse of `k` in base `b`.
fn radical_inverse(mut k: u64, b: u64) -> f64 {
    let (mut x, mut f) = (0.0, 1.0 / b as f64);
    while k > 0 {
        x += (k % b) as f64 * f;
        k /= b;
        f /= b as f64;
    }
    x
}

/// Seeded low-discrepancy sample of chart points: a Halton sequence in bases
/// 2, 3, 5, 7 with a random Cranley–Patterson shift, mapped into each chart
/// domain with a relative margin of 1e−2 from non-periodic edges. Points are
/// dealt to the charts in turn.
pub fn sample_points(atlas: &SurfaceAtlas, count: usize, seed: u64) -> Vec<(usize, [f64; NVARS])> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let shift: [f64; NVARS] = std::array::from_fn(|_| rng.gen::<f64>());
    const BASES: [u64; NVARS] = [2, 3, 5, 7];
    (0..count)
        .map(|k| {
            let c = k % atlas.charts.len();
            let t = std::array::from_fn(|v| (radical_inverse(k as u64 + 1, BASES[v]) + shift[v]).fract());
            (c, atlas.charts[c].domain.from_unit(t, 1e-2))
        })
        .collect()
}
