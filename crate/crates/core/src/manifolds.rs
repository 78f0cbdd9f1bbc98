//! Synthetic data manifolds: uniform samplers and nearest-point projections.
//!
//! Built-in kinds, with their default embeddings:
//!
//! | kind            | intrinsic | ambient | shape                                              |
//! |-----------------|-----------|---------|----------------------------------------------------|
//! | Hypercube       | d         | D >= d  | `[-c/2, c/2]^d`, remaining coordinates 0            |
//! | Hypersphere     | D - 1     | D       | sphere of radius r centered at the origin          |
//! | Wave            | 2         | 3       | chain of half-circles in (x, z), extruded along y  |
//! | SwissRoll       | 2         | 3       | `(t cos t, h, t sin t)`, scaled to unit diameter    |
//! | DeformedSphere  | 2         | 3       | `r = 1 + a sin(3 theta) sin(2 phi)`                 |
//! | External        | given     | D       | a dense point sample standing in for the manifold  |
//!
//! Samplers draw from the uniform surface (or volume) measure. `project`
//! returns the closest point of the manifold in the ambient Euclidean metric;
//! when the closest point is not unique the lexicographically smallest
//! candidate wins, except at the center of a hypersphere, which maps to
//! `(r, 0, ..., 0)`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use crate::nnindex::NnIndex;
use crate::rng::{self, Rng};
use crate::{sq_dist, Error, PointCloud, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WaveParams {
    /// Radius of every half-circle.
    pub radius: f64,
    /// Number of half-circles along x; they alternate above and below z = 0.
    pub arcs: usize,
    /// Extent of the extrusion along y, starting at 0.
    pub width: f64,
}

impl Default for WaveParams {
    fn default() -> Self {
        Self {
            radius: 0.5,
            arcs: 4,
            width: 2.0,
        }
    }
}

impl WaveParams {
    /// Length of the input range `[0, 2 r arcs]`.
    pub fn input_length(&self) -> f64 {
        2.0 * self.radius * self.arcs as f64
    }

    /// Height of the profile curve at input `x` (clamped to the input range).
    pub fn profile(&self, x: f64) -> f64 {
        let r = self.radius;
        let k = ((x / (2.0 * r)).floor().max(0.0) as usize).min(self.arcs - 1);
        let center = (2 * k + 1) as f64 * r;
        let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
        let u = x - center;
        sign * (r * r - u * u).max(0.0).sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SwissRollParams {
    pub t_min: f64,
    pub t_max: f64,
    pub height: f64,
    /// Multiplier applied to the raw parametrization; chosen at construction
    /// so the roll has unit diameter.
    pub scale: f64,
}

impl SwissRollParams {
    pub fn new(t_min: f64, t_max: f64, height: f64) -> Result<Self> {
        if !(t_min >= 0.0 && t_max > t_min && height > 0.0) {
            return Err(Error::invalid(
                "swiss roll needs 0 <= t_min < t_max and height > 0",
            ));
        }
        let mut p = Self {
            t_min,
            t_max,
            height,
            scale: 1.0,
        };
        p.scale = 1.0 / p.raw_diameter();
        Ok(p)
    }

    // Largest distance between two points of the unscaled roll: the in-plane
    // spiral diameter combined with the full height.
    fn raw_diameter(&self) -> f64 {
        let m = 1200;
        let pts: Vec<(f64, f64)> = (0..=m)
            .map(|i| {
                let t = self.t_min + (self.t_max - self.t_min) * i as f64 / m as f64;
                (t * t.cos(), t * t.sin())
            })
            .collect();
        let mut best: f64 = 0.0;
        for (i, a) in pts.iter().enumerate() {
            for b in &pts[i + 1..] {
                best = best.max((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2));
            }
        }
        (best + self.height * self.height).sqrt()
    }

    fn arc_length(t: f64) -> f64 {
        0.5 * (t * (1.0 + t * t).sqrt() + t.asinh())
    }

    /// Inverse of the spiral arc length, by safeguarded Newton iteration.
    fn t_at_arc_length(&self, s: f64) -> f64 {
        let (s0, s1) = (Self::arc_length(self.t_min), Self::arc_length(self.t_max));
        let mut lo = self.t_min;
        let mut hi = self.t_max;
        let mut t = self.t_min + (self.t_max - self.t_min) * (s - s0) / (s1 - s0);
        for _ in 0..100 {
            let f = Self::arc_length(t) - s;
            if f > 0.0 {
                hi = t;
            } else {
                lo = t;
            }
            let mut next = t - f / (1.0 + t * t).sqrt();
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - t).abs() <= 1e-15 * t.abs().max(1.0) {
                return next;
            }
            t = next;
        }
        t
    }

    fn curve(&self, t: f64) -> (f64, f64) {
        (self.scale * t * t.cos(), self.scale * t * t.sin())
    }

    pub fn area(&self) -> f64 {
        self.scale
            * self.scale
            * self.height
            * (Self::arc_length(self.t_max) - Self::arc_length(self.t_min))
    }
}

impl Default for SwissRollParams {
    fn default() -> Self {
        Self::new(1.5 * PI, 4.5 * PI, 10.0).expect("default swiss roll parameters are valid")
    }
}

/// A point sample treated as a dense stand-in for an unknown manifold.
pub struct ExternalManifold {
    cloud: PointCloud,
    index: NnIndex,
}

impl ExternalManifold {
    pub fn new(cloud: PointCloud) -> Result<Self> {
        let index = NnIndex::build(&cloud)?;
        Ok(Self { cloud, index })
    }

    pub fn cloud(&self) -> &PointCloud {
        &self.cloud
    }
}

impl fmt::Debug for ExternalManifold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ExternalManifold")
            .field("points", &self.cloud.len())
            .field("dim", &self.cloud.dim())
            .finish()
    }
}

#[derive(Clone, Debug)]
pub enum ManifoldKind {
    Hypercube { side: f64 },
    Hypersphere { radius: f64 },
    Wave(WaveParams),
    SwissRoll(SwissRollParams),
    DeformedSphere { amplitude: f64 },
    External(Arc<ExternalManifold>),
}

impl ManifoldKind {
    pub fn name(&self) -> &'static str {
        match self {
            ManifoldKind::Hypercube { .. } => "cube",
            ManifoldKind::Hypersphere { .. } => "sphere",
            ManifoldKind::Wave(_) => "wave",
            ManifoldKind::SwissRoll(_) => "swissroll",
            ManifoldKind::DeformedSphere { .. } => "deformed_sphere",
            ManifoldKind::External(_) => "external",
        }
    }
}

/// Parametric description of a data manifold.
#[derive(Clone, Debug)]
pub struct ManifoldSpec {
    kind: ManifoldKind,
    intrinsic_dim: usize,
    ambient_dim: usize,
}

impl ManifoldSpec {
    /// `[-side/2, side/2]^d` in the first `d` coordinates of `R^ambient`.
    pub fn hypercube(d: usize, ambient: usize, side: f64) -> Result<Self> {
        if d == 0 || d > ambient {
            return Err(Error::invalid(format!(
                "hypercube needs 1 <= d <= ambient (got d = {d}, ambient = {ambient})"
            )));
        }
        if !(side > 0.0 && side.is_finite()) {
            return Err(Error::invalid("hypercube side must be positive"));
        }
        Ok(Self {
            kind: ManifoldKind::Hypercube { side },
            intrinsic_dim: d,
            ambient_dim: ambient,
        })
    }

    /// The sphere of radius `radius` in `R^ambient`.
    pub fn hypersphere(ambient: usize, radius: f64) -> Result<Self> {
        if ambient < 2 {
            return Err(Error::invalid("hypersphere needs ambient dimension >= 2"));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::invalid("hypersphere radius must be positive"));
        }
        Ok(Self {
            kind: ManifoldKind::Hypersphere { radius },
            intrinsic_dim: ambient - 1,
            ambient_dim: ambient,
        })
    }

    pub fn wave(params: WaveParams) -> Result<Self> {
        if !(params.radius > 0.0 && params.width > 0.0 && params.arcs >= 1) {
            return Err(Error::invalid(
                "wave needs radius > 0, width > 0 and at least one arc",
            ));
        }
        Ok(Self {
            kind: ManifoldKind::Wave(params),
            intrinsic_dim: 2,
            ambient_dim: 3,
        })
    }

    pub fn swiss_roll(params: SwissRollParams) -> Self {
        Self {
            kind: ManifoldKind::SwissRoll(params),
            intrinsic_dim: 2,
            ambient_dim: 3,
        }
    }

    pub fn deformed_sphere(amplitude: f64) -> Result<Self> {
        if !(amplitude.abs() < 1.0) {
            return Err(Error::invalid("deformation amplitude must lie in (-1, 1)"));
        }
        Ok(Self {
            kind: ManifoldKind::DeformedSphere { amplitude },
            intrinsic_dim: 2,
            ambient_dim: 3,
        })
    }

    /// A manifold known only through a dense sample. `intrinsic_dim` is the
    /// caller's belief (often unknown; use the ambient dimension then).
    pub fn external(cloud: PointCloud, intrinsic_dim: usize) -> Result<Self> {
        let ambient = cloud.dim();
        if intrinsic_dim == 0 || intrinsic_dim > ambient {
            return Err(Error::invalid(
                "external manifold needs 1 <= intrinsic_dim <= ambient",
            ));
        }
        Ok(Self {
            kind: ManifoldKind::External(Arc::new(ExternalManifold::new(cloud)?)),
            intrinsic_dim,
            ambient_dim: ambient,
        })
    }

    pub fn kind(&self) -> &ManifoldKind {
        &self.kind
    }

    pub fn intrinsic_dim(&self) -> usize {
        self.intrinsic_dim
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    /// Riemannian volume of the manifold, when known in closed form.
    pub fn volume(&self) -> Option<f64> {
        match &self.kind {
            ManifoldKind::Hypercube { side } => Some(side.powi(self.intrinsic_dim as i32)),
            ManifoldKind::Hypersphere { radius } => {
                let n = self.ambient_dim as f64;
                Some(2.0 * PI.powf(n / 2.0) / libm::tgamma(n / 2.0) * radius.powf(n - 1.0))
            }
            ManifoldKind::Wave(w) => Some(w.arcs as f64 * PI * w.radius * w.width),
            ManifoldKind::SwissRoll(s) => Some(s.area()),
            ManifoldKind::DeformedSphere { .. } | ManifoldKind::External(_) => None,
        }
    }

    /// Draws `n` i.i.d. uniform points; deterministic in `(self, n, seed)`.
    pub fn sample_uniform(&self, n: usize, seed: u64) -> Result<PointCloud> {
        let mut rng = rng::seeded(seed, rng::stream::DATASET);
        self.sample_uniform_with(n, &mut rng)
    }

    /// Like [`ManifoldSpec::sample_uniform`], drawing from `rng`. The `k`-th
    /// point only depends on the first `k` points' draws, so clouds from the
    /// same stream are nested in `n`.
    pub fn sample_uniform_with(&self, n: usize, rng: &mut Rng) -> Result<PointCloud> {
        if n == 0 {
            return Err(Error::invalid("sample size n must be at least 1"));
        }
        let dim = self.ambient_dim;
        let mut coords = vec![0.0; n * dim];
        match &self.kind {
            ManifoldKind::Hypercube { side } => {
                for p in coords.chunks_exact_mut(dim) {
                    for c in p.iter_mut().take(self.intrinsic_dim) {
                        *c = side * (rng.random::<f64>() - 0.5);
                    }
                }
            }
            ManifoldKind::Hypersphere { radius } => {
                for p in coords.chunks_exact_mut(dim) {
                    gaussian_direction(rng, p);
                    p.iter_mut().for_each(|c| *c *= radius);
                }
            }
            ManifoldKind::Wave(w) => {
                for p in coords.chunks_exact_mut(dim) {
                    let k = ((rng.random::<f64>() * w.arcs as f64) as usize).min(w.arcs - 1);
                    let theta = PI * rng.random::<f64>();
                    let center = (2 * k + 1) as f64 * w.radius;
                    let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
                    p[0] = center - w.radius * theta.cos();
                    p[1] = w.width * rng.random::<f64>();
                    p[2] = sign * w.radius * theta.sin();
                }
            }
            ManifoldKind::SwissRoll(s) => {
                let s0 = SwissRollParams::arc_length(s.t_min);
                let s1 = SwissRollParams::arc_length(s.t_max);
                for p in coords.chunks_exact_mut(dim) {
                    let t = s.t_at_arc_length(s0 + (s1 - s0) * rng.random::<f64>());
                    let (x, z) = s.curve(t);
                    p[0] = x;
                    p[1] = s.scale * s.height * rng.random::<f64>();
                    p[2] = z;
                }
            }
            ManifoldKind::DeformedSphere { amplitude } => {
                let a = *amplitude;
                let bound = (1.0 + a.abs())
                    * ((1.0 + a.abs()).powi(2) + 45.0 * a * a).sqrt();
                for p in coords.chunks_exact_mut(dim) {
                    loop {
                        gaussian_direction(rng, p);
                        let (theta, phi) = sphere_angles(p);
                        let w = deformed_area_weight(a, theta, phi);
                        debug_assert!(w <= bound * (1.0 + 1e-12));
                        if rng.random::<f64>() * bound < w {
                            let r = deformed_radius(a, theta, phi);
                            p.iter_mut().for_each(|c| *c *= r);
                            break;
                        }
                    }
                }
            }
            ManifoldKind::External(_) => {
                return Err(Error::Unsupported(
                    "an external manifold has no uniform sampler; subsample its reference cloud instead"
                        .into(),
                ))
            }
        }
        Ok(PointCloud::from_raw(dim, coords))
    }

    /// Closest point of the manifold to `y`.
    pub fn project(&self, y: &[f64]) -> Result<Vec<f64>> {
        Error::check_dim(self.ambient_dim, y.len())?;
        if y.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("cannot project a non-finite point"));
        }
        let mut out = y.to_vec();
        self.project_into(y, &mut out);
        Ok(out)
    }

    /// In-place form of [`ManifoldSpec::project`]; `y` must be finite and of
    /// ambient dimension.
    pub fn project_into(&self, y: &[f64], out: &mut [f64]) {
        match &self.kind {
            ManifoldKind::Hypercube { side } => {
                let h = side / 2.0;
                for (k, (o, c)) in out.iter_mut().zip(y).enumerate() {
                    *o = if k < self.intrinsic_dim {
                        c.clamp(-h, h)
                    } else {
                        0.0
                    };
                }
            }
            ManifoldKind::Hypersphere { radius } => {
                let norm = sq_dist(y, &vec![0.0; y.len()]).sqrt();
                if norm == 0.0 {
                    out.iter_mut().for_each(|o| *o = 0.0);
                    out[0] = *radius;
                } else {
                    for (o, c) in out.iter_mut().zip(y) {
                        *o = radius * c / norm;
                    }
                }
            }
            ManifoldKind::Wave(w) => {
                let (x, z) = project_wave_profile(w, y[0], y[2]);
                out[0] = x;
                out[1] = y[1].clamp(0.0, w.width);
                out[2] = z;
            }
            ManifoldKind::SwissRoll(s) => {
                let (x, z) = project_spiral(s, y[0], y[2]);
                out[0] = x;
                out[1] = y[1].clamp(0.0, s.scale * s.height);
                out[2] = z;
            }
            ManifoldKind::DeformedSphere { amplitude } => {
                let p = project_deformed_sphere(*amplitude, [y[0], y[1], y[2]]);
                out.copy_from_slice(&p);
            }
            ManifoldKind::External(ext) => {
                let (i, _) = ext.index.nearest_unchecked(y);
                out.copy_from_slice(ext.cloud.point(i));
            }
        }
    }
}

/// A wave sample for the conditional task: input `x` (coordinate 0) drawn
/// uniformly on the input range, `y` uniform on the extrusion and `z = w(x)`.
#[derive(Clone, Debug)]
pub struct ConditionalSample {
    pub cloud: PointCloud,
    /// Index of the conditioning coordinate.
    pub input_axis: usize,
}

pub fn sample_conditional_wave(
    spec: &ManifoldSpec,
    n: usize,
    seed: u64,
) -> Result<ConditionalSample> {
    let mut rng = rng::seeded(seed, rng::stream::DATASET);
    sample_conditional_wave_with(spec, n, &mut rng)
}

pub fn sample_conditional_wave_with(
    spec: &ManifoldSpec,
    n: usize,
    rng: &mut Rng,
) -> Result<ConditionalSample> {
    let ManifoldKind::Wave(w) = spec.kind() else {
        return Err(Error::Unsupported(format!(
            "conditional sampling needs a wave manifold, got {}",
            spec.kind().name()
        )));
    };
    if n == 0 {
        return Err(Error::invalid("sample size n must be at least 1"));
    }
    let mut coords = Vec::with_capacity(3 * n);
    for _ in 0..n {
        let x = w.input_length() * rng.random::<f64>();
        let y = w.width * rng.random::<f64>();
        coords.extend_from_slice(&[x, y, w.profile(x)]);
    }
    Ok(ConditionalSample {
        cloud: PointCloud::from_raw(3, coords),
        input_axis: 0,
    })
}

fn gaussian_direction(rng: &mut Rng, p: &mut [f64]) {
    loop {
        for c in p.iter_mut() {
            *c = StandardNormal.sample(rng);
        }
        let norm = p.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm > 0.0 {
            p.iter_mut().for_each(|c| *c /= norm);
            return;
        }
    }
}

fn lex_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if x < y {
            return true;
        }
        if x > y {
            return false;
        }
    }
    false
}

// Keeps the closer candidate, the lexicographically smaller one on ties.
fn better(cand: (f64, [f64; 2]), best: &mut (f64, [f64; 2])) {
    if cand.0 < best.0 || (cand.0 == best.0 && lex_less(&cand.1, &best.1)) {
        *best = cand;
    }
}

fn project_wave_profile(w: &WaveParams, x: f64, z: f64) -> (f64, f64) {
    let r = w.radius;
    let mut best = (f64::INFINITY, [0.0, 0.0]);
    for k in 0..w.arcs {
        let cx = (2 * k + 1) as f64 * r;
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let (u, v) = (x - cx, z);
        let ends = [[cx - r, 0.0], [cx + r, 0.0]];
        if sign * v >= 0.0 {
            let norm = u.hypot(v);
            if norm == 0.0 {
                // Every arc point is at distance r; the left end is smallest.
                better((r * r, ends[0]), &mut best);
            } else {
                let p = [cx + r * u / norm, r * v / norm];
                better((sq_dist(&[x, z], &p), p), &mut best);
            }
        } else {
            for e in ends {
                better((sq_dist(&[x, z], &e), e), &mut best);
            }
        }
    }
    (best.1[0], best.1[1])
}

fn project_spiral(s: &SwissRollParams, x: f64, z: f64) -> (f64, f64) {
    let target = [x, z];
    let dist = |t: f64| {
        let (a, b) = s.curve(t);
        sq_dist(&[a, b], &target)
    };
    // Coarse scan, then golden-section refinement around every local minimum
    // of the scan (layers of the roll give several).
    let m = 2000;
    let ts: Vec<f64> = (0..=m)
        .map(|i| s.t_min + (s.t_max - s.t_min) * i as f64 / m as f64)
        .collect();
    let ds: Vec<f64> = ts.iter().map(|&t| dist(t)).collect();
    let mut best = (f64::INFINITY, [0.0, 0.0]);
    for i in 0..=m {
        let left = if i == 0 { f64::INFINITY } else { ds[i - 1] };
        let right = if i == m { f64::INFINITY } else { ds[i + 1] };
        if ds[i] <= left && ds[i] <= right {
            let lo = ts[i.saturating_sub(1)];
            let hi = ts[(i + 1).min(m)];
            let t = golden_min(dist, lo, hi);
            let (a, b) = s.curve(t);
            better((dist(t), [a, b]), &mut best);
        }
    }
    (best.1[0], best.1[1])
}

fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-15 * (a.abs() + b.abs()).max(1.0) {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let mid = 0.5 * (a + b);
    // Endpoints of the final bracket may be the true minimizer at a boundary.
    [a, mid, b]
        .into_iter()
        .min_by(|x, y| f(*x).total_cmp(&f(*y)))
        .unwrap()
}

fn sphere_angles(u: &[f64]) -> (f64, f64) {
    let theta = u[2].clamp(-1.0, 1.0).acos();
    let phi = u[1].atan2(u[0]);
    (theta, phi)
}

fn deformed_radius(a: f64, theta: f64, phi: f64) -> f64 {
    1.0 + a * (3.0 * theta).sin() * (2.0 * phi).sin()
}

// Surface area element relative to the unit-sphere element sin(theta).
fn deformed_area_weight(a: f64, theta: f64, phi: f64) -> f64 {
    let r = deformed_radius(a, theta, phi);
    let r_theta = 3.0 * a * (3.0 * theta).cos() * (2.0 * phi).sin();
    // d r / d phi divided by sin(theta); sin(3t)/sin(t) = 3 - 4 sin^2 t.
    let r_phi_over_sin = 2.0 * a * (3.0 - 4.0 * theta.sin().powi(2)) * (2.0 * phi).cos();
    r * (r * r + r_theta * r_theta + r_phi_over_sin * r_phi_over_sin).sqrt()
}

fn deformed_point(a: f64, theta: f64, phi: f64) -> [f64; 3] {
    let r = deformed_radius(a, theta, phi);
    [
        r * theta.sin() * phi.cos(),
        r * theta.sin() * phi.sin(),
        r * theta.cos(),
    ]
}

fn project_deformed_sphere(a: f64, y: [f64; 3]) -> [f64; 3] {
    let cost = |t: f64, p: f64| sq_dist(&deformed_point(a, t, p), &y);
    let mut seeds = Vec::new();
    let norm = (y[0] * y[0] + y[1] * y[1] + y[2] * y[2]).sqrt();
    if norm > 0.0 {
        let u = [y[0] / norm, y[1] / norm, y[2] / norm];
        let (t, p) = sphere_angles(&u);
        // A point on the surface is its own projection.
        let on = deformed_point(a, t, p);
        if sq_dist(&on, &y) == 0.0 {
            return y;
        }
        seeds.push((t, p));
    }
    let (nt, np) = (24, 48);
    let mut grid_best = (f64::INFINITY, (0.0, 0.0));
    for i in 0..=nt {
        let t = PI * i as f64 / nt as f64;
        for j in 0..np {
            let p = -PI + 2.0 * PI * j as f64 / np as f64;
            let c = cost(t, p);
            if c < grid_best.0 {
                grid_best = (c, (t, p));
            }
        }
    }
    seeds.push(grid_best.1);

    let mut best = (f64::INFINITY, [0.0; 3]);
    for (t0, p0) in seeds {
        let (t, p) = refine_patch(&cost, t0, p0);
        let pt = deformed_point(a, t, p);
        let c = sq_dist(&pt, &y);
        if c < best.0 || (c == best.0 && lex_less(&pt, &best.1)) {
            best = (c, pt);
        }
    }
    best.1
}

// Damped Newton on (theta, phi) with finite-difference derivatives; theta is
// kept in [0, pi].
fn refine_patch<F: Fn(f64, f64) -> f64>(cost: &F, mut t: f64, mut p: f64) -> (f64, f64) {
    let mut c = cost(t, p);
    let mut lambda = 1e-3;
    for _ in 0..200 {
        let h = 1e-5;
        let ct = (cost(t + h, p) - cost(t - h, p)) / (2.0 * h);
        let cp = (cost(t, p + h) - cost(t, p - h)) / (2.0 * h);
        let ctt = (cost(t + h, p) - 2.0 * c + cost(t - h, p)) / (h * h);
        let cpp = (cost(t, p + h) - 2.0 * c + cost(t, p - h)) / (h * h);
        let ctp = (cost(t + h, p + h) - cost(t + h, p - h) - cost(t - h, p + h)
            + cost(t - h, p - h))
            / (4.0 * h * h);
        let mut improved = false;
        for _ in 0..30 {
            let (a11, a22) = (ctt.abs() + lambda, cpp.abs() + lambda);
            let det = a11 * a22 - ctp * ctp;
            let (dt, dp) = if det > 0.0 {
                ((a22 * ct - ctp * cp) / det, (a11 * cp - ctp * ct) / det)
            } else {
                (ct / a11, cp / a22)
            };
            let nt = (t - dt).clamp(0.0, PI);
            let np = p - dp;
            let nc = cost(nt, np);
            if nc < c {
                let moved = (nt - t).abs() + (np - p).abs();
                t = nt;
                p = np;
                c = nc;
                lambda = (lambda / 3.0).max(1e-12);
                improved = true;
                if moved < 1e-15 {
                    return (t, p);
                }
                break;
            }
            lambda *= 4.0;
        }
        if !improved {
            break;
        }
    }
    (t, p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn cube_sample_stays_on_its_axes() {
        let spec = ManifoldSpec::hypercube(1, 3, 1.0).unwrap();
        let c = spec.sample_uniform(10, 3).unwrap();
        for p in c.iter() {
            assert!((-0.5..=0.5).contains(&p[0]));
            assert_eq!((p[1], p[2]), (0.0, 0.0));
        }
    }

    #[test]
    fn sphere_sample_has_radius() {
        let spec = ManifoldSpec::hypersphere(3, 2.0).unwrap();
        for p in spec.sample_uniform(100, 11).unwrap().iter() {
            let r = p.iter().map(|c| c * c).sum::<f64>().sqrt();
            assert!((r - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sphere_mean_is_near_origin() {
        // Coordinates of a uniform unit-sphere point have variance 1/3, so the
        // mean of 1e5 draws has std sqrt(1/3)/sqrt(1e5) ~ 1.8e-3; 0.02 is > 10 sigma.
        let spec = ManifoldSpec::hypersphere(3, 1.0).unwrap();
        for seed in [0, 1, 99] {
            let m = spec.sample_uniform(100_000, seed).unwrap().mean().unwrap();
            assert!(m.iter().all(|c| c.abs() < 0.02), "{m:?}");
        }
    }

    #[test]
    fn projection_examples() {
        let sphere = ManifoldSpec::hypersphere(3, 1.0).unwrap();
        assert_eq!(
            sphere.project(&[2.0, 0.0, 0.0]).unwrap(),
            vec![1.0, 0.0, 0.0]
        );
        assert_eq!(
            sphere.project(&[0.0, 0.0, 0.0]).unwrap(),
            vec![1.0, 0.0, 0.0]
        );
        let square = ManifoldSpec::hypercube(2, 2, 1.0).unwrap();
        assert_eq!(square.project(&[0.7, 0.1]).unwrap(), vec![0.5, 0.1]);
        assert!(sphere.project(&[f64::NAN, 0.0, 0.0]).is_err());
        assert!(sphere.project(&[1.0, 0.0]).is_err());
    }

    #[test]
    fn wave_projection_ties_and_corners() {
        let spec = ManifoldSpec::wave(WaveParams::default()).unwrap();
        // Center of the first (upper) arc: every arc point is at distance 0.5;
        // the leftmost end wins.
        assert!(close(
            &spec.project(&[0.5, 1.0, 0.0]).unwrap(),
            &[0.0, 1.0, 0.0],
            1e-15
        ));
        // Above the first arc apex.
        assert!(close(
            &spec.project(&[0.5, 3.0, 2.0]).unwrap(),
            &[0.5, 2.0, 0.5],
            1e-15
        ));
        // Below an upper arc the nearest point is on the neighboring lower arc.
        let p = spec.project(&[0.9, 0.5, -0.3]).unwrap();
        assert!((p[0] - 1.0).powi(2) + p[2].powi(2) - 0.25 < 1e-12);
        assert!(p[2] <= 0.0 && p[0] >= 1.0);
    }

    #[test]
    fn wave_profile_values() {
        let w = WaveParams::default();
        assert_eq!(w.profile(0.5), 0.5);
        assert_eq!(w.profile(1.5), -0.5);
        assert_eq!(w.profile(0.0), 0.0);
        assert_eq!(w.profile(w.input_length()), 0.0);
    }

    #[test]
    fn conditional_wave_is_on_graph() {
        let spec = ManifoldSpec::wave(WaveParams::default()).unwrap();
        let s = sample_conditional_wave(&spec, 5, 1).unwrap();
        assert_eq!(s.input_axis, 0);
        for p in s.cloud.iter() {
            assert_eq!(p[2], WaveParams::default().profile(p[0]));
        }
        let cube = ManifoldSpec::hypercube(1, 1, 1.0).unwrap();
        assert!(sample_conditional_wave(&cube, 5, 1).is_err());
    }

    #[test]
    fn sampler_errors() {
        let spec = ManifoldSpec::hypersphere(3, 1.0).unwrap();
        assert!(spec.sample_uniform(0, 0).is_err());
        let ext = ManifoldSpec::external(spec.sample_uniform(10, 0).unwrap(), 2).unwrap();
        assert!(matches!(
            ext.sample_uniform(5, 0),
            Err(Error::Unsupported(_))
        ));
        assert!(ManifoldSpec::hypercube(3, 2, 1.0).is_err());
        assert!(ManifoldSpec::hypersphere(3, -1.0).is_err());
    }

    #[test]
    fn external_projects_to_reference_point() {
        let cloud = PointCloud::from_rows(&[vec![0.0, 0.0], vec![1.0, 1.0]]).unwrap();
        let ext = ManifoldSpec::external(cloud, 1).unwrap();
        assert_eq!(ext.project(&[0.9, 0.7]).unwrap(), vec![1.0, 1.0]);
    }

    #[test]
    fn swiss_roll_has_unit_diameter_scale() {
        let s = SwissRollParams::default();
        assert!((s.raw_diameter() * s.scale - 1.0).abs() < 1e-12);
        let t = s.t_at_arc_length(SwissRollParams::arc_length(2.0 * PI));
        assert!((t - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn deformed_sphere_projection_of_off_surface_point() {
        let spec = ManifoldSpec::deformed_sphere(0.3).unwrap();
        let y = [0.3, -0.2, 1.6];
        let p = spec.project(&y).unwrap();
        // The residual is normal to the surface: compare against a dense scan.
        let mut scan = f64::INFINITY;
        for i in 0..=400 {
            for j in 0..800 {
                let q = deformed_point(
                    0.3,
                    PI * i as f64 / 400.0,
                    -PI + 2.0 * PI * j as f64 / 800.0,
                );
                scan = scan.min(sq_dist(&q, &y));
            }
        }
        assert!(sq_dist(&p, &y) <= scan + 1e-9);
    }
}
