//! Isometric group actions with closed-form orbit distances.
//!
//! Three kinds are built in:
//!
//! - `Identity`: the trivial group.
//! - `AxisTranslation`: continuous translations along a set of axes, each
//!   periodic with its own period (torus identification). The orbit of a
//!   point is the full line through it along every translated axis, so the
//!   squared orbit distance ignores those coordinates.
//! - `AxisRotation`: rotations about a coordinate axis. They act on the plane
//!   spanned by the two lowest-indexed coordinates other than the axis; the
//!   orbit of a point is a circle, and the squared orbit distance is
//!   `(rho_y - rho_z)^2` plus the squared differences of the fixed coordinates.
//!
//! [`canonicalize`] maps a point to a representative of its orbit such that
//! `orbit_sq_dist(y, z) = |canonicalize(y) - canonicalize(z)|^2`, which lets
//! the kd-tree answer quotient nearest-neighbor queries exactly.

use std::f64::consts::PI;

use crate::{sq_dist, Error, PointCloud, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum GroupKind {
    Identity,
    AxisTranslation {
        axes: Vec<usize>,
        periods: Vec<f64>,
        /// Lower end of the fundamental domain on each axis.
        origins: Vec<f64>,
    },
    AxisRotation {
        axis: usize,
    },
}

/// Orbit volume of a group acting on a manifold.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OrbitVolume {
    /// Trivial group: every orbit is a single point.
    Unit,
    Constant(f64),
    /// Orbits do not share a common volume on this manifold.
    Varying,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroupSpec {
    kind: GroupKind,
    ambient_dim: usize,
}

impl GroupSpec {
    pub fn identity(ambient_dim: usize) -> Self {
        Self {
            kind: GroupKind::Identity,
            ambient_dim,
        }
    }

    /// Translations along `axes`; the fundamental domain on axis `k` is
    /// `[origins[k], origins[k] + periods[k])`.
    pub fn translation(
        ambient_dim: usize,
        axes: Vec<usize>,
        periods: Vec<f64>,
        origins: Vec<f64>,
    ) -> Result<Self> {
        if axes.is_empty() || axes.len() != periods.len() || axes.len() != origins.len() {
            return Err(Error::invalid(
                "translation needs one period and one origin per translated axis",
            ));
        }
        let mut sorted = axes.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != axes.len() || axes.iter().any(|&a| a >= ambient_dim) {
            return Err(Error::invalid(
                "translation axes must be distinct and < ambient dimension",
            ));
        }
        if periods.iter().any(|p| !(*p > 0.0 && p.is_finite()))
            || origins.iter().any(|o| !o.is_finite())
        {
            return Err(Error::invalid(
                "translation periods must be positive and origins finite",
            ));
        }
        Ok(Self {
            kind: GroupKind::AxisTranslation {
                axes,
                periods,
                origins,
            },
            ambient_dim,
        })
    }

    /// Periodic translation along the first `k` axes of a hypercube of side
    /// `side` centered at the origin.
    pub fn cube_translation(ambient_dim: usize, k: usize, side: f64) -> Result<Self> {
        Self::translation(
            ambient_dim,
            (0..k).collect(),
            vec![side; k],
            vec![-side / 2.0; k],
        )
    }

    pub fn rotation(ambient_dim: usize, axis: usize) -> Result<Self> {
        if ambient_dim < 3 || axis >= ambient_dim {
            return Err(Error::invalid(
                "axis rotation needs ambient dimension >= 3 and a valid axis",
            ));
        }
        Ok(Self {
            kind: GroupKind::AxisRotation { axis },
            ambient_dim,
        })
    }

    pub fn kind(&self) -> &GroupKind {
        &self.kind
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn is_identity(&self) -> bool {
        matches!(self.kind, GroupKind::Identity)
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            GroupKind::Identity => "identity",
            GroupKind::AxisTranslation { .. } => "translation",
            GroupKind::AxisRotation { .. } => "rotation",
        }
    }

    /// `d_Omega - d_{Omega/G}` for a manifold on which the action is free.
    pub fn quotient_dim_reduction(&self) -> usize {
        match &self.kind {
            GroupKind::Identity => 0,
            GroupKind::AxisTranslation { axes, .. } => axes.len(),
            GroupKind::AxisRotation { .. } => 1,
        }
    }

    /// Coordinates of the rotation plane.
    fn rotation_plane(axis: usize) -> (usize, usize) {
        let mut others = (0..).filter(|&k| k != axis);
        (others.next().unwrap(), others.next().unwrap())
    }

    fn check(&self, y: &[f64]) -> Result<()> {
        Error::check_dim(self.ambient_dim, y.len())?;
        if y.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("point has a non-finite coordinate"));
        }
        Ok(())
    }

    /// Squared distance from `y` to the orbit of `z`, in closed form.
    pub fn orbit_sq_dist(&self, y: &[f64], z: &[f64]) -> Result<f64> {
        self.check(y)?;
        self.check(z)?;
        Ok(self.orbit_sq_dist_unchecked(y, z))
    }

    pub(crate) fn orbit_sq_dist_unchecked(&self, y: &[f64], z: &[f64]) -> f64 {
        match &self.kind {
            GroupKind::Identity => sq_dist(y, z),
            GroupKind::AxisTranslation { axes, .. } => {
                let mut acc = 0.0;
                for k in 0..y.len() {
                    if !axes.contains(&k) {
                        let d = y[k] - z[k];
                        acc += d * d;
                    }
                }
                acc
            }
            GroupKind::AxisRotation { axis } => {
                let (p, q) = Self::rotation_plane(*axis);
                let mut acc = 0.0;
                for k in 0..y.len() {
                    let d = if k == p {
                        y[p].hypot(y[q]) - z[p].hypot(z[q])
                    } else if k == q {
                        0.0
                    } else {
                        y[k] - z[k]
                    };
                    acc += d * d;
                }
                acc
            }
        }
    }

    /// Representative of the orbit of `y`.
    ///
    /// Rotation: the point of the orbit in the half-plane where the first
    /// plane coordinate is `>= 0` and the second is 0; points on the axis are
    /// fixed. Translation: every translated coordinate moves to the center of
    /// its fundamental domain.
    pub fn canonicalize(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.check(y)?;
        let mut out = y.to_vec();
        self.canonicalize_into(y, &mut out);
        Ok(out)
    }

    pub(crate) fn canonicalize_into(&self, y: &[f64], out: &mut [f64]) {
        out.copy_from_slice(y);
        match &self.kind {
            GroupKind::Identity => {}
            GroupKind::AxisTranslation {
                axes,
                periods,
                origins,
            } => {
                for ((&a, p), o) in axes.iter().zip(periods).zip(origins) {
                    out[a] = o + p / 2.0;
                }
            }
            GroupKind::AxisRotation { axis } => {
                let (p, q) = Self::rotation_plane(*axis);
                out[p] = y[p].hypot(y[q]);
                out[q] = 0.0;
            }
        }
    }

    /// Canonical representatives of every point of `cloud`.
    pub fn canonicalize_cloud(&self, cloud: &PointCloud) -> Result<PointCloud> {
        Error::check_dim(self.ambient_dim, cloud.dim())?;
        cloud.map_points(self.ambient_dim, |src, dst| {
            self.canonicalize_into(src, dst)
        })
    }

    /// Closest point of the orbit of `z` to `y` (a minimizer of the orbit
    /// distance). For rotations with `y` on the axis every orbit point is a
    /// minimizer and `z` itself is returned.
    pub fn nearest_orbit_point(&self, y: &[f64], z: &[f64]) -> Result<Vec<f64>> {
        self.check(y)?;
        self.check(z)?;
        let mut out = z.to_vec();
        match &self.kind {
            GroupKind::Identity => {}
            GroupKind::AxisTranslation { axes, .. } => {
                for &a in axes {
                    out[a] = y[a];
                }
            }
            GroupKind::AxisRotation { axis } => {
                let (p, q) = Self::rotation_plane(*axis);
                let ry = y[p].hypot(y[q]);
                if ry > 0.0 {
                    let rz = z[p].hypot(z[q]);
                    out[p] = rz * y[p] / ry;
                    out[q] = rz * y[q] / ry;
                }
            }
        }
        Ok(out)
    }

    /// Applies the group element with parameter `params` (one angle for a
    /// rotation, one offset per translated axis) without wrapping.
    pub fn act(&self, params: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        self.check(y)?;
        let mut out = y.to_vec();
        match &self.kind {
            GroupKind::Identity => {}
            GroupKind::AxisTranslation { axes, .. } => {
                Error::check_dim(axes.len(), params.len())?;
                for (&a, t) in axes.iter().zip(params) {
                    out[a] += t;
                }
            }
            GroupKind::AxisRotation { axis } => {
                Error::check_dim(1, params.len())?;
                rotate(Self::rotation_plane(*axis), params[0], y, &mut out);
            }
        }
        Ok(out)
    }

    /// Discretized orbit augmentation `G(D)`.
    ///
    /// Rotation: each point at `K` equally spaced angles `2 pi j / K`.
    /// Translation: each point at the `K^k` offsets `j period / K` on the `k`
    /// translated axes, wrapped into the fundamental domain. Identity returns
    /// the input unchanged. Output is grouped by base point.
    pub fn augment(&self, cloud: &PointCloud, k: usize) -> Result<PointCloud> {
        if k == 0 {
            return Err(Error::invalid("orbit discretization K must be at least 1"));
        }
        Error::check_dim(self.ambient_dim, cloud.dim())?;
        let dim = self.ambient_dim;
        match &self.kind {
            GroupKind::Identity => Ok(cloud.clone()),
            GroupKind::AxisRotation { axis } => {
                let plane = Self::rotation_plane(*axis);
                let mut coords = vec![0.0; cloud.len() * k * dim];
                let mut chunks = coords.chunks_exact_mut(dim);
                for y in cloud.iter() {
                    for j in 0..k {
                        let out = chunks.next().unwrap();
                        out.copy_from_slice(y);
                        rotate(plane, 2.0 * PI * j as f64 / k as f64, y, out);
                    }
                }
                PointCloud::new(dim, coords)
            }
            GroupKind::AxisTranslation {
                axes,
                periods,
                origins,
            } => {
                let per_point = k
                    .checked_pow(axes.len() as u32)
                    .ok_or_else(|| Error::invalid("translation augmentation is too large"))?;
                let mut coords = Vec::with_capacity(cloud.len() * per_point * dim);
                let mut digits = vec![0usize; axes.len()];
                for y in cloud.iter() {
                    for m in 0..per_point {
                        let mut rest = m;
                        for d in digits.iter_mut() {
                            *d = rest % k;
                            rest /= k;
                        }
                        let start = coords.len();
                        coords.extend_from_slice(y);
                        let out = &mut coords[start..];
                        for (((&a, p), o), &j) in axes.iter().zip(periods).zip(origins).zip(&digits)
                        {
                            out[a] = wrap(y[a] + j as f64 * p / k as f64, *o, *p);
                        }
                    }
                }
                PointCloud::new(dim, coords)
            }
        }
    }

    /// Common orbit volume `|G|`. Rotation orbits are circles whose length
    /// depends on the distance to the axis, so they never share one in
    /// general; the translation volume assumes the translated coordinates
    /// span a full period on the manifold.
    pub fn orbit_volume(&self) -> OrbitVolume {
        match &self.kind {
            GroupKind::Identity => OrbitVolume::Unit,
            GroupKind::AxisTranslation { periods, .. } => {
                OrbitVolume::Constant(periods.iter().product())
            }
            GroupKind::AxisRotation { .. } => OrbitVolume::Varying,
        }
    }
}

fn rotate((p, q): (usize, usize), angle: f64, y: &[f64], out: &mut [f64]) {
    let (s, c) = angle.sin_cos();
    out[p] = c * y[p] - s * y[q];
    out[q] = s * y[p] + c * y[q];
}

fn wrap(v: f64, origin: f64, period: f64) -> f64 {
    let w = origin + (v - origin).rem_euclid(period);
    // rem_euclid can round up to exactly `period`.
    if w >= origin + period {
        origin
    } else {
        w
    }
}

/// Periodic squared distance on the translated axes plus Euclidean on the
/// rest: the metric that translation augmentations preserve.
pub fn torus_sq_dist(group: &GroupSpec, y: &[f64], z: &[f64]) -> f64 {
    match &group.kind {
        GroupKind::AxisTranslation { axes, periods, .. } => {
            let mut acc = 0.0;
            for k in 0..y.len() {
                let mut d = (y[k] - z[k]).abs();
                if let Some(pos) = axes.iter().position(|&a| a == k) {
                    let p = periods[pos];
                    d = d.rem_euclid(p);
                    d = d.min(p - d);
                }
                acc += d * d;
            }
            acc
        }
        _ => sq_dist(y, z),
    }
}

/// The prediction space `G(D)`: a dataset together with the group acting on
/// it, either evaluated in closed form or materialized with `K` samples per
/// orbit.
#[derive(Clone, Debug)]
pub struct OrbitCloud {
    pub base: PointCloud,
    pub group: GroupSpec,
    /// `None` means the orbit is used analytically.
    pub discretization: Option<usize>,
}

impl OrbitCloud {
    pub fn analytic(base: PointCloud, group: GroupSpec) -> Result<Self> {
        Error::check_dim(group.ambient_dim(), base.dim())?;
        Ok(Self {
            base,
            group,
            discretization: None,
        })
    }

    pub fn discretized(base: PointCloud, group: GroupSpec, k: usize) -> Result<Self> {
        Error::check_dim(group.ambient_dim(), base.dim())?;
        if k == 0 {
            return Err(Error::invalid("orbit discretization K must be at least 1"));
        }
        Ok(Self {
            base,
            group,
            discretization: Some(k),
        })
    }

    /// Materialized points; `None` for an analytic orbit cloud.
    pub fn materialize(&self) -> Option<Result<PointCloud>> {
        self.discretization
            .map(|k| self.group.augment(&self.base, k))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn orbit_distance_examples() {
        let id = GroupSpec::identity(2);
        assert_eq!(id.orbit_sq_dist(&[1.0, 0.0], &[0.0, 0.0]).unwrap(), 1.0);
        let rot = GroupSpec::rotation(3, 2).unwrap();
        assert_eq!(
            rot.orbit_sq_dist(&[2.0, 0.0, 0.0], &[0.0, 1.0, 0.0])
                .unwrap(),
            1.0
        );
        assert_eq!(
            rot.orbit_sq_dist(&[0.0, 1.0, 0.0], &[1.0, 0.0, 0.0])
                .unwrap(),
            0.0
        );
        assert!(rot.orbit_sq_dist(&[0.0, 1.0], &[1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn circle_distance_matches_fine_angle_scan() {
        let rot = GroupSpec::rotation(3, 2).unwrap();
        let (y, z) = ([2.0, 0.0, 0.0], [0.0, 1.0, 0.0]);
        let m = 1_000_000;
        let scan = (0..m)
            .map(|j| sq_dist(&y, &rot.act(&[2.0 * PI * j as f64 / m as f64], &z).unwrap()))
            .fold(f64::INFINITY, f64::min);
        assert!((scan - 1.0).abs() < 1e-10);
    }

    #[test]
    fn augment_examples() {
        let id = GroupSpec::identity(3);
        let cloud = PointCloud::from_rows(&[vec![1.0, 0.0, 0.0], vec![0.2, 0.3, 0.4]]).unwrap();
        assert_eq!(id.augment(&cloud, 7).unwrap(), cloud);

        let rot = GroupSpec::rotation(3, 2).unwrap();
        let one = PointCloud::from_rows(&[vec![1.0, 0.0, 0.0]]).unwrap();
        let quarter = rot.augment(&one, 4).unwrap();
        let expect = [
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [-1.0, 0.0, 0.0],
            [0.0, -1.0, 0.0],
        ];
        for (p, e) in quarter.iter().zip(expect) {
            assert!(close(p, &e, 1e-12), "{p:?} vs {e:?}");
        }

        let many = rot.augment(&cloud, 360).unwrap();
        for (i, p) in many.iter().enumerate() {
            let b = cloud.point(i / 360);
            assert!((p[2] - b[2]).abs() < 1e-12);
            assert!((p[0].hypot(p[1]) - b[0].hypot(b[1])).abs() < 1e-12);
        }
        assert!(rot.augment(&one, 0).is_err());
    }

    #[test]
    fn translation_wraps_into_domain() {
        let g = GroupSpec::cube_translation(2, 1, 1.0).unwrap();
        let c = PointCloud::from_rows(&[vec![0.4, 0.1]]).unwrap();
        let a = g.augment(&c, 4).unwrap();
        let xs: Vec<f64> = a.iter().map(|p| p[0]).collect();
        assert!(close(&xs, &[0.4, -0.35, -0.1, 0.15], 1e-12), "{xs:?}");
        assert!(a.iter().all(|p| p[1] == 0.1));
        assert_eq!(
            g.orbit_sq_dist(&[0.3, 0.5], &[-0.2, 0.1]).unwrap(),
            (0.4f64).powi(2)
        );
    }

    #[test]
    fn canonicalize_examples() {
        let rot = GroupSpec::rotation(3, 2).unwrap();
        assert_eq!(
            rot.canonicalize(&[0.0, 2.0, 5.0]).unwrap(),
            vec![2.0, 0.0, 5.0]
        );
        assert_eq!(
            rot.canonicalize(&[0.0, 0.0, 3.0]).unwrap(),
            vec![0.0, 0.0, 3.0]
        );
        let tr = GroupSpec::translation(3, vec![1], vec![2.0], vec![0.0]).unwrap();
        assert_eq!(
            tr.canonicalize(&[0.3, 1.7, -0.2]).unwrap(),
            vec![0.3, 1.0, -0.2]
        );
    }

    #[test]
    fn rotation_about_x_uses_yz_plane() {
        let rot = GroupSpec::rotation(3, 0).unwrap();
        assert_eq!(
            rot.canonicalize(&[5.0, 0.0, -3.0]).unwrap(),
            vec![5.0, 3.0, 0.0]
        );
        assert_eq!(rot.quotient_dim_reduction(), 1);
    }

    #[test]
    fn nearest_orbit_point_attains_distance() {
        let rot = GroupSpec::rotation(3, 2).unwrap();
        let (y, z) = ([0.3, -1.2, 0.4], [0.5, 0.5, -0.1]);
        let p = rot.nearest_orbit_point(&y, &z).unwrap();
        assert!((sq_dist(&y, &p) - rot.orbit_sq_dist(&y, &z).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn invalid_specs() {
        assert!(GroupSpec::rotation(2, 0).is_err());
        assert!(GroupSpec::translation(2, vec![0, 0], vec![1.0, 1.0], vec![0.0, 0.0]).is_err());
        assert!(GroupSpec::translation(2, vec![0], vec![0.0], vec![0.0]).is_err());
        assert!(GroupSpec::translation(2, vec![3], vec![1.0], vec![0.0]).is_err());
    }
}
