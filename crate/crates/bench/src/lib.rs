//! Shared fixtures for the benchmarks.

use confgauss::jet::NVARS;
use confgauss::surfaces::{make_surface, sample_points, SurfaceAtlas, SurfaceKind, SurfaceSpec};

/// The perturbed torus used throughout the benchmarks, with `n` sample points.
pub fn perturbed_torus(n: usize) -> (SurfaceAtlas, Vec<(usize, [f64; NVARS])>) {
    let spec = SurfaceSpec::new(SurfaceKind::PerturbedTorus { major: 2.0, minor: 1.0, amplitude: 0.1 });
    let atlas = make_surface(&spec).expect("valid surface");
    let pts = sample_points(&atlas, n, 1);
    (atlas, pts)
}
