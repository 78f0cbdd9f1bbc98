//! Deterministic DDIM sampling with the exact score of a dataset orbit.
//!
//! The forward process at step `t` is `y_t = sqrt(a_t) z + sqrt(1 - a_t) e`
//! with `z` uniform on `G(D)`, so the marginal is a Gaussian mixture and its
//! score is available in closed form:
//!
//! ```text
//! s_t(y) = -(y - sqrt(a_t) m_t(y)) / (1 - a_t),   m_t(y) = sum_j W_j z_j
//! ```
//!
//! where `W` is the softmax of `-|y - sqrt(a_t) z_j|^2 / (2 (1 - a_t))`.
//! Continuous orbits are replaced by `K` equally spaced group elements per
//! data point.
//!
//! With `e = -sqrt(1 - a_t) s_t(y)` the DDIM update
//! `y_{t-1} = sqrt(a_{t-1}) y0 + sqrt(1 - a_{t-1}) e`,
//! `y0 = (y - sqrt(1 - a_t) e) / sqrt(a_t)` simplifies to `y0 = m_t(y)`,
//! which is what [`ScoreField::ddim_step`] computes.

use std::f64::consts::PI;

use rand_distr::{Distribution, StandardNormal};

use crate::groups::GroupKind;
use crate::nnindex::NnIndex;
use crate::rng;
use crate::{Error, GroupSpec, PointCloud, Result};

const ALPHA_FIRST: f64 = 0.9999;
const ALPHA_LAST: f64 = 1e-4;
/// Trajectories with a coordinate beyond this magnitude are abandoned.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

pub const DEFAULT_K: usize = 256;
pub const MAX_K: usize = 16_384;
const K_TOLERANCE: f64 = 1e-6;
const N_PROBES: usize = 10;
const PROBE_NOISE: f64 = 0.05;

/// Cumulative signal levels `alpha[0..=T]`, with `alpha[0] = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Schedule {
    alpha: Vec<f64>,
}

impl Schedule {
    /// `alpha` linear in the step from 0.9999 at `t = 1` to 1e-4 at `t = T`.
    pub fn linear(steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::invalid("schedule needs at least one step"));
        }
        let mut alpha = Vec::with_capacity(steps + 1);
        alpha.push(1.0);
        if steps == 1 {
            alpha.push(ALPHA_LAST);
        } else {
            for t in 1..=steps {
                let s = (t - 1) as f64 / (steps - 1) as f64;
                alpha.push(ALPHA_FIRST + s * (ALPHA_LAST - ALPHA_FIRST));
            }
        }
        Ok(Self { alpha })
    }

    pub fn from_alphas(alpha: Vec<f64>) -> Result<Self> {
        if alpha.len() < 2 || alpha[0] != 1.0 {
            return Err(Error::invalid(
                "alpha must start at 1 and have at least one step",
            ));
        }
        if alpha.windows(2).any(|w| !(w[1] < w[0])) || alpha.iter().any(|a| !(*a > 0.0)) {
            return Err(Error::invalid(
                "alpha must be positive and strictly decreasing",
            ));
        }
        Ok(Self { alpha })
    }

    pub fn steps(&self) -> usize {
        self.alpha.len() - 1
    }

    pub fn alpha(&self, t: usize) -> f64 {
        self.alpha[t]
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alpha
    }

    /// Temperature `2 (1 - a_t) / a_t`.
    pub fn beta(&self, t: usize) -> f64 {
        2.0 * (1.0 - self.alpha[t]) / self.alpha[t]
    }
}

/// Exact score of the noised uniform distribution on a (discretized) orbit
/// of a dataset.
#[derive(Clone, Debug)]
pub struct ScoreField {
    dataset: PointCloud,
    group: GroupSpec,
    schedule: Schedule,
    quadrature_k: usize,
    refinements: usize,
    components: PointCloud,
}

/// One score evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreEval {
    pub score: Vec<f64>,
    /// Posterior mean of the clean point.
    pub mean: Vec<f64>,
    /// Sum of the normalized mixture weights; 1 up to rounding.
    pub weight_sum: f64,
}

impl ScoreField {
    /// Field with `K` orbit samples per data point, or an adaptively chosen
    /// `K` when `quadrature_k` is `None` (ignored for the trivial group).
    pub fn new(
        dataset: PointCloud,
        group: GroupSpec,
        schedule: Schedule,
        quadrature_k: Option<usize>,
    ) -> Result<Self> {
        if dataset.is_empty() {
            return Err(Error::Empty("diffusion dataset has no points".into()));
        }
        Error::check_dim(group.ambient_dim(), dataset.dim())?;
        let continuous = !group.is_identity();
        let k = if continuous {
            quadrature_k.unwrap_or(DEFAULT_K)
        } else {
            1
        };
        if k == 0 {
            return Err(Error::invalid("orbit quadrature K must be at least 1"));
        }
        let components = group.augment(&dataset, k)?;
        let mut field = Self {
            dataset,
            group,
            schedule,
            quadrature_k: k,
            refinements: 0,
            components,
        };
        if continuous && quadrature_k.is_none() {
            field.refine()?;
        }
        Ok(field)
    }

    // Doubles K until doubling again moves the score by less than the
    // tolerance (relative) at every probe point, or K reaches the cap.
    fn refine(&mut self) -> Result<()> {
        let t = (1..=self.schedule.steps())
            .find(|&t| (1.0 - self.schedule.alpha(t)).sqrt() >= PROBE_NOISE)
            .unwrap_or(self.schedule.steps());
        let a = self.schedule.alpha(t);
        let mut r = rng::seeded(0, rng::stream::PROBE);
        let dim = self.dataset.dim();
        let mut probes = Vec::with_capacity(N_PROBES);
        for _ in 0..N_PROBES {
            let z = self
                .dataset
                .point(rand::Rng::random_range(&mut r, 0..self.dataset.len()));
            let p: Vec<f64> = (0..dim)
                .map(|k| {
                    a.sqrt() * z[k]
                        + (1.0 - a).sqrt() * Distribution::<f64>::sample(&StandardNormal, &mut r)
                })
                .collect();
            probes.push(p);
        }
        let mut current: Vec<Vec<f64>> = probes
            .iter()
            .map(|p| self.eval_unchecked(p, t).score)
            .collect();
        while self.quadrature_k < MAX_K {
            let k = self.quadrature_k * 2;
            let finer = Self {
                components: self.group.augment(&self.dataset, k)?,
                quadrature_k: k,
                refinements: self.refinements + 1,
                ..self.clone()
            };
            let next: Vec<Vec<f64>> = probes
                .iter()
                .map(|p| finer.eval_unchecked(p, t).score)
                .collect();
            let change = current
                .iter()
                .zip(&next)
                .map(|(a, b)| crate::sq_dist(a, b).sqrt() / norm(b).max(f64::MIN_POSITIVE))
                .fold(0.0, f64::max);
            if change < K_TOLERANCE {
                break;
            }
            *self = finer;
            current = next;
        }
        Ok(())
    }

    pub fn dataset(&self) -> &PointCloud {
        &self.dataset
    }

    pub fn group(&self) -> &GroupSpec {
        &self.group
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    pub fn quadrature_k(&self) -> usize {
        self.quadrature_k
    }

    /// Number of times adaptive refinement doubled `K`.
    pub fn refinements(&self) -> usize {
        self.refinements
    }

    /// Mixture components: the dataset or its discretized orbit.
    pub fn components(&self) -> &PointCloud {
        &self.components
    }

    pub fn dim(&self) -> usize {
        self.dataset.dim()
    }

    fn check_step(&self, y: &[f64], t: usize) -> Result<()> {
        Error::check_dim(self.dim(), y.len())?;
        if t == 0 {
            return Err(Error::invalid("the score is singular at t = 0"));
        }
        if t > self.schedule.steps() {
            return Err(Error::invalid(format!(
                "step {t} exceeds T = {}",
                self.schedule.steps()
            )));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("point has a non-finite coordinate"));
        }
        Ok(())
    }

    /// Score at `y` for step `1 <= t <= T`.
    pub fn score(&self, y: &[f64], t: usize) -> Result<Vec<f64>> {
        Ok(self.evaluate(y, t)?.score)
    }

    pub fn evaluate(&self, y: &[f64], t: usize) -> Result<ScoreEval> {
        self.check_step(y, t)?;
        Ok(self.eval_unchecked(y, t))
    }

    fn eval_unchecked(&self, y: &[f64], t: usize) -> ScoreEval {
        let a = self.schedule.alpha(t);
        let sa = a.sqrt();
        let var = 1.0 - a;
        let dim = self.dim();
        let mut logw = Vec::with_capacity(self.components.len());
        let mut top = f64::NEG_INFINITY;
        for c in self.components.iter() {
            let mut d2 = 0.0;
            for k in 0..dim {
                let d = y[k] - sa * c[k];
                d2 += d * d;
            }
            let lw = -d2 / (2.0 * var);
            top = top.max(lw);
            logw.push(lw);
        }
        let mut total = 0.0;
        let mut mean = vec![0.0; dim];
        for (lw, c) in logw.iter_mut().zip(self.components.iter()) {
            let w = (*lw - top).exp();
            *lw = w;
            total += w;
            for k in 0..dim {
                mean[k] += w * c[k];
            }
        }
        let mut weight_sum = 0.0;
        for w in &logw {
            weight_sum += w / total;
        }
        for m in mean.iter_mut() {
            *m /= total;
        }
        let score = (0..dim).map(|k| -(y[k] - sa * mean[k]) / var).collect();
        ScoreEval {
            score,
            mean,
            weight_sum,
        }
    }

    /// One deterministic DDIM step from `t` to `t - 1`.
    pub fn ddim_step(&self, y: &[f64], t: usize) -> Result<Vec<f64>> {
        self.check_step(y, t)?;
        let mut out = vec![0.0; y.len()];
        self.step_into(y, t, &mut out);
        Ok(out)
    }

    fn step_into(&self, y: &[f64], t: usize, out: &mut [f64]) {
        let m = self.eval_unchecked(y, t).mean;
        let a = self.schedule.alpha(t);
        let prev = self.schedule.alpha(t - 1);
        let noise_scale = (1.0 - prev).sqrt() / (1.0 - a).sqrt();
        for k in 0..y.len() {
            let eps_part = y[k] - a.sqrt() * m[k];
            out[k] = prev.sqrt() * m[k] + noise_scale * eps_part;
        }
    }

    /// Runs the reverse flow from `n_samples` standard normal starts.
    /// Trajectory `i` draws its start from its own stream of `seed`.
    pub fn reverse_sample(&self, n_samples: usize, seed: u64) -> Result<SampleOutput> {
        self.reverse_sample_traced(n_samples, seed, false)
    }

    pub fn reverse_sample_traced(
        &self,
        n_samples: usize,
        seed: u64,
        trace: bool,
    ) -> Result<SampleOutput> {
        if n_samples == 0 {
            return Err(Error::invalid("n_samples must be at least 1"));
        }
        let dim = self.dim();
        let mut starts = Vec::with_capacity(n_samples * dim);
        for i in 0..n_samples {
            let mut r = rng::seeded(seed, rng::stream::TRAJECTORY + i as u64);
            for _ in 0..dim {
                starts.push(StandardNormal.sample(&mut r));
            }
        }
        self.reverse_from(&PointCloud::new(dim, starts)?, trace)
    }

    /// Runs the reverse flow from the given `y_T`.
    pub fn reverse_from(&self, starts: &PointCloud, trace: bool) -> Result<SampleOutput> {
        Error::check_dim(self.dim(), starts.dim())?;
        if starts.is_empty() {
            return Err(Error::Empty("no starting points".into()));
        }
        let dim = self.dim();
        let steps = self.schedule.steps();
        let mut endpoints = Vec::with_capacity(starts.len() * dim);
        let mut diverged = Vec::new();
        let mut rows = Vec::new();
        let mut y = vec![0.0; dim];
        let mut next = vec![0.0; dim];
        for (i, start) in starts.iter().enumerate() {
            y.copy_from_slice(start);
            if trace {
                rows.push(TraceRow {
                    sample: i,
                    t: steps,
                    point: y.clone(),
                });
            }
            for t in (1..=steps).rev() {
                self.step_into(&y, t, &mut next);
                if next.iter().any(|v| !(v.abs() <= DIVERGENCE_LIMIT)) {
                    diverged.push(i);
                    break;
                }
                std::mem::swap(&mut y, &mut next);
                if trace {
                    rows.push(TraceRow {
                        sample: i,
                        t: t - 1,
                        point: y.clone(),
                    });
                }
            }
            endpoints.extend_from_slice(&y);
        }
        Ok(SampleOutput {
            endpoints: PointCloud::new(dim, endpoints)?,
            diverged,
            trace: rows,
        })
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub sample: usize,
    pub t: usize,
    pub point: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct SampleOutput {
    /// One row per trajectory; a diverged trajectory keeps its last
    /// in-bounds state.
    pub endpoints: PointCloud,
    /// Indices of trajectories stopped by the divergence guard.
    pub diverged: Vec<usize>,
    pub trace: Vec<TraceRow>,
}

/// Maximum and mean squared orbit distance from each endpoint to the closest
/// dataset orbit.
pub fn endpoint_orbit_error(
    endpoints: &PointCloud,
    dataset: &PointCloud,
    group: &GroupSpec,
) -> Result<(f64, f64)> {
    let d = endpoint_orbit_distances(endpoints, dataset, group)?;
    let max = d.iter().copied().fold(0.0, f64::max);
    Ok((max, d.iter().sum::<f64>() / d.len() as f64))
}

/// Per-endpoint squared orbit distance to the closest dataset orbit.
pub fn endpoint_orbit_distances(
    endpoints: &PointCloud,
    dataset: &PointCloud,
    group: &GroupSpec,
) -> Result<Vec<f64>> {
    if endpoints.is_empty() || dataset.is_empty() {
        return Err(Error::Empty(
            "endpoint orbit error needs endpoints and a dataset".into(),
        ));
    }
    Error::check_dim(group.ambient_dim(), dataset.dim())?;
    Error::check_dim(group.ambient_dim(), endpoints.dim())?;
    let index = NnIndex::build(&group.canonicalize_cloud(dataset)?)?;
    let canon = group.canonicalize_cloud(endpoints)?;
    Ok(canon.iter().map(|y| index.nearest_unchecked(y).1).collect())
}

/// Largest gap between consecutive endpoint angles in the rotation plane.
pub fn max_angular_gap(endpoints: &PointCloud, group: &GroupSpec) -> Result<f64> {
    let GroupKind::AxisRotation { axis } = group.kind() else {
        return Err(Error::Unsupported(
            "angular gap needs a rotation group".into(),
        ));
    };
    Error::check_dim(group.ambient_dim(), endpoints.dim())?;
    if endpoints.is_empty() {
        return Err(Error::Empty("no endpoints".into()));
    }
    let mut plane = (0..).filter(|k| k != axis);
    let (p, q) = (plane.next().unwrap(), plane.next().unwrap());
    let mut angles: Vec<f64> = endpoints
        .iter()
        .map(|y| y[q].atan2(y[p]).rem_euclid(2.0 * PI))
        .collect();
    angles.sort_by(f64::total_cmp);
    let wrap = angles[0] + 2.0 * PI - angles[angles.len() - 1];
    Ok(angles.windows(2).map(|w| w[1] - w[0]).fold(wrap, f64::max))
}

/// Cosine between `-(1 - a_t) s_t(y)` and `y - y_t*` for each `t`, where
/// `y_t* = sqrt(a_t) z*` and `z*` is the orbit point closest to
/// `y / sqrt(a_t)`.
///
/// Fails when the closest orbit is not unique at `y` (the Laplace argument
/// needs the minimum to be reached at a single point).
pub fn score_concentration_check(
    field: &ScoreField,
    y: &[f64],
    t_values: &[usize],
) -> Result<Vec<f64>> {
    Error::check_dim(field.dim(), y.len())?;
    let group = field.group();
    let mut d: Vec<f64> = field
        .dataset()
        .iter()
        .map(|z| group.orbit_sq_dist_unchecked(y, z))
        .collect();
    d.sort_by(f64::total_cmp);
    let on_axis = match group.kind() {
        GroupKind::AxisRotation { axis } => {
            let mut plane = (0..).filter(|k| k != axis);
            let (p, q) = (plane.next().unwrap(), plane.next().unwrap());
            y[p] == 0.0 && y[q] == 0.0
        }
        _ => false,
    };
    if on_axis || (d.len() > 1 && d[1] - d[0] <= 1e-6) {
        return Err(Error::Degenerate(
            "the closest orbit point is not unique, so the minimum is not reached at a unique point".into(),
        ));
    }
    let mut out = Vec::with_capacity(t_values.len());
    for &t in t_values {
        let s = field.score(y, t)?;
        let a = field.schedule().alpha(t);
        let scaled: Vec<f64> = y.iter().map(|v| v / a.sqrt()).collect();
        let (best, _) = field
            .dataset()
            .iter()
            .map(|z| group.orbit_sq_dist_unchecked(&scaled, z))
            .enumerate()
            .fold(
                (0, f64::INFINITY),
                |acc, (i, v)| if v < acc.1 { (i, v) } else { acc },
            );
        let z_star = group.nearest_orbit_point(&scaled, field.dataset().point(best))?;
        let u: Vec<f64> = s.iter().map(|v| -(1.0 - a) * v).collect();
        let v: Vec<f64> = y
            .iter()
            .zip(&z_star)
            .map(|(y, z)| y - a.sqrt() * z)
            .collect();
        let denom = norm(&u) * norm(&v);
        if denom == 0.0 {
            return Err(Error::Degenerate(
                "y coincides with its closest noised orbit point".into(),
            ));
        }
        let dot: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
        out.push(dot / denom);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cloud(rows: &[&[f64]]) -> PointCloud {
        PointCloud::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn schedule_is_linear_and_decreasing() {
        let s = Schedule::linear(100).unwrap();
        assert_eq!(s.steps(), 100);
        assert_eq!(s.alpha(0), 1.0);
        assert_eq!(s.alpha(1), 0.9999);
        assert!((s.alpha(100) - 1e-4).abs() < 1e-15);
        assert!(s.alphas().windows(2).all(|w| w[1] < w[0]));
        assert!((1..=100).all(|t| s.beta(t) > 0.0));
        assert!(Schedule::linear(0).is_err());
        assert!(Schedule::from_alphas(vec![1.0, 0.5, 0.6]).is_err());
    }

    #[test]
    fn single_point_score_is_exact() {
        let z = [0.3, -0.2, 0.5];
        let f = ScoreField::new(
            cloud(&[&z]),
            GroupSpec::identity(3),
            Schedule::linear(50).unwrap(),
            None,
        )
        .unwrap();
        let y = [1.0, 0.5, -0.25];
        for t in [1, 10, 50] {
            let a = f.schedule().alpha(t);
            let s = f.score(&y, t).unwrap();
            for k in 0..3 {
                let want = -(y[k] - a.sqrt() * z[k]) / (1.0 - a);
                assert!((s[k] - want).abs() <= 1e-12 * want.abs().max(1.0));
            }
        }
        assert!(f.score(&y, 0).is_err());
        assert!(f.score(&y, 51).is_err());
    }

    #[test]
    fn symmetric_pair_has_zero_score_at_origin() {
        let f = ScoreField::new(
            cloud(&[&[1.0, 2.0], &[-1.0, -2.0]]),
            GroupSpec::identity(2),
            Schedule::linear(20).unwrap(),
            None,
        )
        .unwrap();
        for t in 1..=20 {
            let e = f.evaluate(&[0.0, 0.0], t).unwrap();
            assert!(e.score.iter().all(|v| v.abs() < 1e-12));
            assert!((e.weight_sum - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn last_step_returns_posterior_mean() {
        let f = ScoreField::new(
            cloud(&[&[0.5, 0.5]]),
            GroupSpec::identity(2),
            Schedule::linear(10).unwrap(),
            None,
        )
        .unwrap();
        assert_eq!(f.ddim_step(&[3.0, -1.0], 1).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn single_point_endpoints_hit_it() {
        let z = [0.2, -0.7];
        let f = ScoreField::new(
            cloud(&[&z]),
            GroupSpec::identity(2),
            Schedule::linear(100).unwrap(),
            None,
        )
        .unwrap();
        let out = f.reverse_sample(50, 3).unwrap();
        assert!(out.diverged.is_empty());
        for p in out.endpoints.iter() {
            assert!(crate::sq_dist(p, &z).sqrt() < 1e-3);
        }
    }

    #[test]
    fn trace_records_every_step() {
        let f = ScoreField::new(
            cloud(&[&[1.0]]),
            GroupSpec::identity(1),
            Schedule::linear(5).unwrap(),
            None,
        )
        .unwrap();
        let out = f.reverse_sample_traced(2, 0, true).unwrap();
        assert_eq!(out.trace.len(), 12);
        assert_eq!(out.trace[0].t, 5);
        assert_eq!(out.trace[5].t, 0);
        assert_eq!(out.trace[5].point, out.endpoints.point(0).to_vec());
        assert!(f.reverse_sample(0, 0).is_err());
    }

    #[test]
    fn orbit_error_of_subset_and_augmentation() {
        let g = GroupSpec::rotation(3, 2).unwrap();
        let d = cloud(&[&[1.0, 0.0, 0.0], &[0.0, 0.6, 0.8]]);
        assert_eq!(endpoint_orbit_error(&d, &d, &g).unwrap(), (0.0, 0.0));
        let aug = g.augment(&d, 64).unwrap();
        let (max, _) = endpoint_orbit_error(&aug, &d, &g).unwrap();
        assert!(max < 1e-20);
        assert!(endpoint_orbit_error(&PointCloud::empty(3), &d, &g).is_err());
    }

    #[test]
    fn angular_gap_of_even_angles() {
        let g = GroupSpec::rotation(3, 2).unwrap();
        let aug = g.augment(&cloud(&[&[1.0, 0.0, 0.0]]), 8).unwrap();
        let gap = max_angular_gap(&aug, &g).unwrap();
        assert!((gap - PI / 4.0).abs() < 1e-12);
        assert!(max_angular_gap(&aug, &GroupSpec::identity(3)).is_err());
    }

    #[test]
    fn concentration_single_point_and_tie() {
        let f = ScoreField::new(
            cloud(&[&[0.0, 1.0]]),
            GroupSpec::identity(2),
            Schedule::linear(100).unwrap(),
            None,
        )
        .unwrap();
        for c in score_concentration_check(&f, &[0.4, 0.2], &[80, 40, 10, 1]).unwrap() {
            assert!((c - 1.0).abs() < 1e-12);
        }
        let f = ScoreField::new(
            cloud(&[&[1.0, 0.0], &[-1.0, 0.0]]),
            GroupSpec::identity(2),
            Schedule::linear(100).unwrap(),
            None,
        )
        .unwrap();
        assert!(matches!(
            score_concentration_check(&f, &[0.0, 0.3], &[10]),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn adaptive_k_stays_at_default_for_unit_orbits() {
        let g = GroupSpec::rotation(3, 2).unwrap();
        let f = ScoreField::new(
            cloud(&[&[1.0, 0.0, 0.0]]),
            g,
            Schedule::linear(100).unwrap(),
            None,
        )
        .unwrap();
        assert!(f.quadrature_k() >= DEFAULT_K);
        assert_eq!(f.components().len(), f.quadrature_k());
        assert!(f.quadrature_k() <= MAX_K);
    }
}
