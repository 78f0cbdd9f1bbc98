//! Representation-gap estimators.
//!
//! The gap of a prediction space `P` with respect to a manifold is the mean,
//! over points `y` drawn uniformly on the manifold, of the squared distance
//! from `y` to the nearest point of `P`. For an orbit-augmented dataset the
//! distance is the closed-form orbit distance, never a discretized orbit.
//!
//! The conditional variant works on the wave task: inputs `x`, targets
//! `(y, z)` and a predictor whose graph `{(x', f(x'))}` is the prediction
//! space.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::manifolds::{sample_conditional_wave_with, ConditionalSample, ManifoldKind, WaveParams};
use crate::nnindex::NnIndex;
use crate::rng::{self, Rng};
use crate::{Error, GroupSpec, ManifoldSpec, OrbitCloud, PointCloud, Result};

/// Default number of evaluation points.
pub const DEFAULT_N_EVAL: usize = 1000;
/// Default number of predictor evaluations for the conditional inner minimum.
pub const DEFAULT_GRID_SIZE: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GapMode {
    Iid,
    Optimal,
}

impl GapMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            GapMode::Iid => "iid",
            GapMode::Optimal => "optimal",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GapMetric {
    SqEuclidean,
    /// Squared great-circle distance; hypersphere only.
    SqGeodesic,
    /// Squared orbit distance of a group action.
    Quotient,
}

impl GapMetric {
    pub fn as_str(&self) -> &'static str {
        match self {
            GapMetric::SqEuclidean => "sq_euclidean",
            GapMetric::SqGeodesic => "sq_geodesic",
            GapMetric::Quotient => "quotient",
        }
    }
}

/// A Monte Carlo estimate of a representation gap.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GapEstimate {
    pub value: f64,
    /// Sample standard deviation of the per-point distances over `sqrt(n_eval)`.
    pub std_error: f64,
    pub n_dataset: usize,
    pub n_eval: usize,
    pub seed: u64,
    pub mode: GapMode,
    pub metric: GapMetric,
}

/// The set of points a model can produce.
#[derive(Clone, Debug)]
pub enum PredictionSpace {
    Discrete(PointCloud),
    OrbitAugmented(OrbitCloud),
    DiffusionEndpoints(PointCloud),
}

impl PredictionSpace {
    fn dataset_size(&self) -> usize {
        match self {
            PredictionSpace::Discrete(c) | PredictionSpace::DiffusionEndpoints(c) => c.len(),
            PredictionSpace::OrbitAugmented(o) => o.base.len(),
        }
    }
}

/// Nearest-point oracle for a prediction space.
struct Target {
    index: NnIndex,
    group: Option<GroupSpec>,
}

impl Target {
    fn new(pred: &PredictionSpace) -> Result<Self> {
        match pred {
            PredictionSpace::Discrete(c) | PredictionSpace::DiffusionEndpoints(c) => {
                if c.is_empty() {
                    return Err(Error::Empty("prediction space has no points".into()));
                }
                Ok(Self {
                    index: NnIndex::build(c)?,
                    group: None,
                })
            }
            PredictionSpace::OrbitAugmented(o) => {
                if o.base.is_empty() {
                    return Err(Error::Empty("prediction space has no points".into()));
                }
                match o.materialize() {
                    Some(points) => Ok(Self {
                        index: NnIndex::build(&points?)?,
                        group: None,
                    }),
                    None => Ok(Self {
                        index: NnIndex::build(&o.group.canonicalize_cloud(&o.base)?)?,
                        group: Some(o.group.clone()),
                    }),
                }
            }
        }
    }

    fn sq_dist(&self, y: &[f64], scratch: &mut [f64]) -> f64 {
        match &self.group {
            None => self.index.nearest_unchecked(y).1,
            Some(g) => {
                g.canonicalize_into(y, scratch);
                self.index.nearest_unchecked(scratch).1
            }
        }
    }
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Per-point squared distances from `eval` to the prediction space.
pub fn distances_to(pred: &PredictionSpace, eval: &PointCloud) -> Result<Vec<f64>> {
    let target = Target::new(pred)?;
    Error::check_dim(target.index.dim(), eval.dim())?;
    let mut scratch = vec![0.0; eval.dim()];
    Ok(eval
        .iter()
        .map(|y| target.sq_dist(y, &mut scratch))
        .collect())
}

/// Gap of `pred` measured on a fixed evaluation cloud (held-out points of an
/// external manifold, or a shared evaluation sample).
pub fn gap_on_points(pred: &PredictionSpace, eval: &PointCloud, seed: u64) -> Result<GapEstimate> {
    if eval.is_empty() {
        return Err(Error::Empty("evaluation cloud has no points".into()));
    }
    let d = distances_to(pred, eval)?;
    let (value, std_error) = mean_and_se(&d);
    Ok(GapEstimate {
        value,
        std_error,
        n_dataset: pred.dataset_size(),
        n_eval: eval.len(),
        seed,
        mode: GapMode::Iid,
        metric: metric_of(pred),
    })
}

fn metric_of(pred: &PredictionSpace) -> GapMetric {
    match pred {
        PredictionSpace::OrbitAugmented(o) if !o.group.is_identity() => GapMetric::Quotient,
        _ => GapMetric::SqEuclidean,
    }
}

/// Fresh uniform evaluation sample for `(spec, n_eval, seed)`.
pub fn eval_sample(spec: &ManifoldSpec, n_eval: usize, seed: u64) -> Result<PointCloud> {
    let mut rng = rng::seeded(seed, rng::stream::EVAL);
    spec.sample_uniform_with(n_eval, &mut rng)
}

/// Monte Carlo estimate of the gap from `n_eval` fresh uniform points.
pub fn gap(
    spec: &ManifoldSpec,
    pred: &PredictionSpace,
    n_eval: usize,
    seed: u64,
) -> Result<GapEstimate> {
    gap_with_metric(spec, pred, n_eval, seed, GapMetric::SqEuclidean)
}

/// [`gap`] with an explicit metric. `SqGeodesic` converts nearest chord
/// lengths on a hypersphere into squared arc lengths (the nearest point is
/// the same under both).
pub fn gap_with_metric(
    spec: &ManifoldSpec,
    pred: &PredictionSpace,
    n_eval: usize,
    seed: u64,
    metric: GapMetric,
) -> Result<GapEstimate> {
    if n_eval == 0 {
        return Err(Error::invalid("n_eval must be at least 1"));
    }
    let eval = eval_sample(spec, n_eval, seed)?;
    let mut est = gap_on_points(pred, &eval, seed)?;
    match metric {
        GapMetric::SqEuclidean | GapMetric::Quotient => {}
        GapMetric::SqGeodesic => {
            let ManifoldKind::Hypersphere { radius } = spec.kind() else {
                return Err(Error::Unsupported(
                    "geodesic gap is only defined on a hypersphere".into(),
                ));
            };
            if !matches!(
                pred,
                PredictionSpace::Discrete(_) | PredictionSpace::DiffusionEndpoints(_)
            ) {
                return Err(Error::Unsupported(
                    "geodesic gap needs a discrete prediction space".into(),
                ));
            }
            let d: Vec<f64> = distances_to(pred, &eval)?
                .into_iter()
                .map(|c2| {
                    let chord = c2.sqrt().min(2.0 * radius);
                    (2.0 * radius * (chord / (2.0 * radius)).asin()).powi(2)
                })
                .collect();
            let (value, std_error) = mean_and_se(&d);
            est.value = value;
            est.std_error = std_error;
            est.metric = GapMetric::SqGeodesic;
        }
    }
    Ok(est)
}

/// Prediction space of an i.i.d. dataset under `group`: the dataset itself
/// or its analytic orbit.
pub fn prediction_space(dataset: PointCloud, group: &GroupSpec) -> Result<PredictionSpace> {
    if group.is_identity() {
        Ok(PredictionSpace::Discrete(dataset))
    } else {
        Ok(PredictionSpace::OrbitAugmented(OrbitCloud::analytic(
            dataset,
            group.clone(),
        )?))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurvePoint {
    pub n: usize,
    pub seed: u64,
    pub estimate: GapEstimate,
}

fn check_grid(n_values: &[usize], seeds: &[u64]) -> Result<()> {
    if n_values.is_empty() || seeds.is_empty() {
        return Err(Error::invalid(
            "a gap curve needs at least one n and one seed",
        ));
    }
    if n_values.contains(&0) {
        return Err(Error::invalid("dataset sizes must be at least 1"));
    }
    if n_values.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("dataset sizes must be non-decreasing"));
    }
    Ok(())
}

/// Gap of i.i.d. datasets over a grid of sizes and seeds, ordered by
/// `(n, seed)` position in the inputs.
///
/// For a given seed the datasets are nested (the size-`n` dataset is the
/// first `n` points of one draw) and share a single evaluation sample, which
/// keeps each per-seed curve smooth in `n`.
pub fn random_gap_curve(
    spec: &ManifoldSpec,
    group: &GroupSpec,
    n_values: &[usize],
    seeds: &[u64],
    n_eval: usize,
) -> Result<Vec<CurvePoint>> {
    check_grid(n_values, seeds)?;
    Error::check_dim(spec.ambient_dim(), group.ambient_dim())?;
    let n_max = *n_values.last().unwrap();
    let mut per_seed = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        per_seed.push((
            spec.sample_uniform(n_max, seed)?,
            eval_sample(spec, n_eval, seed)?,
        ));
    }
    let mut out = Vec::with_capacity(n_values.len() * seeds.len());
    for &n in n_values {
        for (&seed, (full, eval)) in seeds.iter().zip(&per_seed) {
            let pred = prediction_space(full.prefix(n), group)?;
            out.push(CurvePoint {
                n,
                seed,
                estimate: gap_on_points(&pred, eval, seed)?,
            });
        }
    }
    Ok(out)
}

/// Optimal-dataset counterpart of [`random_gap_curve`].
pub fn optimal_gap_curve(
    spec: &ManifoldSpec,
    group: &GroupSpec,
    n_values: &[usize],
    seeds: &[u64],
    opts: crate::quantize::OptimalOptions,
) -> Result<Vec<CurvePoint>> {
    check_grid(n_values, seeds)?;
    let mut out = Vec::with_capacity(n_values.len() * seeds.len());
    for &n in n_values {
        for &seed in seeds {
            let (estimate, _) = crate::quantize::optimal_gap(spec, group, n, seed, opts)?;
            out.push(CurvePoint { n, seed, estimate });
        }
    }
    Ok(out)
}

/// Gap of per-class datasets, weighted by class probability (uniform unless
/// `weights` is given). Every class uses the same evaluation seed.
pub fn discrete_conditional_gap(
    class_datasets: &BTreeMap<String, PointCloud>,
    class_manifolds: &BTreeMap<String, ManifoldSpec>,
    group: &GroupSpec,
    n_eval: usize,
    seed: u64,
    weights: Option<&BTreeMap<String, f64>>,
) -> Result<GapEstimate> {
    if class_datasets.is_empty() {
        return Err(Error::Empty("no classes".into()));
    }
    for key in class_datasets.keys().chain(class_manifolds.keys()) {
        if !class_datasets.contains_key(key) || !class_manifolds.contains_key(key) {
            return Err(Error::invalid(format!(
                "class {key:?} is missing a dataset or a manifold"
            )));
        }
    }
    let uniform = 1.0 / class_datasets.len() as f64;
    if let Some(w) = weights {
        let total: f64 = class_datasets
            .keys()
            .map(|k| w.get(k).copied().unwrap_or(f64::NAN))
            .sum();
        if !((total - 1.0).abs() < 1e-9) {
            return Err(Error::invalid(
                "class weights must cover every class and sum to 1",
            ));
        }
    }
    let mut value = 0.0;
    let mut var = 0.0;
    let mut n_dataset = 0;
    let mut n_total_eval = 0;
    let mut metric = GapMetric::SqEuclidean;
    for (key, data) in class_datasets {
        let w = weights.map_or(uniform, |w| w[key]);
        let pred = prediction_space(data.clone(), group)?;
        let est = gap(&class_manifolds[key], &pred, n_eval, seed)?;
        value += w * est.value;
        var += (w * est.std_error).powi(2);
        n_dataset += est.n_dataset;
        n_total_eval += est.n_eval;
        metric = est.metric;
    }
    Ok(GapEstimate {
        value,
        std_error: var.sqrt(),
        n_dataset,
        n_eval: n_total_eval,
        seed,
        mode: GapMode::Iid,
        metric,
    })
}

/// Target function of an analytic predictor: writes `f(x)` into the slice.
pub type TargetFn = Arc<dyn Fn(f64, &mut [f64]) + Send + Sync>;

#[derive(Clone)]
pub enum PredictorKind {
    /// Target of the nearest training input (ties toward the smaller input).
    NearestInput,
    /// Linear interpolation between consecutive training inputs, constant
    /// beyond the extreme inputs.
    PiecewiseLinear1D,
    /// A closed-form function of the input.
    Analytic(TargetFn),
}

impl fmt::Debug for PredictorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PredictorKind::NearestInput => f.write_str("NearestInput"),
            PredictorKind::PiecewiseLinear1D => f.write_str("PiecewiseLinear1D"),
            PredictorKind::Analytic(_) => f.write_str("Analytic"),
        }
    }
}

/// A deterministic predictor `x -> f(x)` on a one-dimensional input, with
/// the group under which its predictions are compared.
///
/// Points of the joint space are `(x, target...)`; the group acts on joint
/// points, so a translation along a target axis makes the predictor
/// equivariant to that translation.
#[derive(Clone, Debug)]
pub struct Predictor {
    kind: PredictorKind,
    inputs: Vec<f64>,
    targets: Vec<f64>,
    target_dim: usize,
    group: GroupSpec,
    lipschitz: Option<f64>,
}

impl Predictor {
    /// Trains on `(input, targets)` pairs given as joint points of a
    /// conditional sample.
    pub fn fit(
        kind: PredictorKind,
        training: &ConditionalSample,
        group: GroupSpec,
    ) -> Result<Self> {
        let dim = training.cloud.dim();
        let axis = training.input_axis;
        let mut inputs = Vec::with_capacity(training.cloud.len());
        let mut targets = Vec::with_capacity(training.cloud.len() * (dim - 1));
        for p in training.cloud.iter() {
            inputs.push(p[axis]);
            targets.extend(
                p.iter()
                    .enumerate()
                    .filter(|(k, _)| *k != axis)
                    .map(|(_, v)| *v),
            );
        }
        if axis != 0 {
            return Err(Error::Unsupported(
                "predictors expect the input on coordinate 0".into(),
            ));
        }
        Self::from_pairs(kind, inputs, targets, dim - 1, group)
    }

    pub fn from_pairs(
        kind: PredictorKind,
        inputs: Vec<f64>,
        targets: Vec<f64>,
        target_dim: usize,
        group: GroupSpec,
    ) -> Result<Self> {
        Error::check_dim(1 + target_dim, group.ambient_dim())?;
        if matches!(kind, PredictorKind::Analytic(_)) {
            return Ok(Self {
                kind,
                inputs: Vec::new(),
                targets: Vec::new(),
                target_dim,
                group,
                lipschitz: None,
            });
        }
        if inputs.is_empty() {
            return Err(Error::Empty(
                "predictor needs at least one training pair".into(),
            ));
        }
        Error::check_dim(inputs.len() * target_dim, targets.len())?;
        if inputs.iter().chain(&targets).any(|v| !v.is_finite()) {
            return Err(Error::invalid("training pairs must be finite"));
        }
        let mut order: Vec<usize> = (0..inputs.len()).collect();
        order.sort_by(|&a, &b| inputs[a].total_cmp(&inputs[b]).then(a.cmp(&b)));
        let sorted_inputs: Vec<f64> = order.iter().map(|&i| inputs[i]).collect();
        let mut sorted_targets = Vec::with_capacity(targets.len());
        for &i in &order {
            sorted_targets.extend_from_slice(&targets[i * target_dim..(i + 1) * target_dim]);
        }
        let mut p = Self {
            kind,
            inputs: sorted_inputs,
            targets: sorted_targets,
            target_dim,
            group,
            lipschitz: None,
        };
        if matches!(p.kind, PredictorKind::PiecewiseLinear1D) {
            p.lipschitz = Some(p.max_segment_slope());
        }
        Ok(p)
    }

    /// The exact target function of a wave: `(width / 2, w(x))`.
    pub fn exact_wave(params: WaveParams, group: GroupSpec) -> Result<Self> {
        let f: TargetFn = Arc::new(move |x, out| {
            out[0] = params.width / 2.0;
            out[1] = params.profile(x);
        });
        Self::from_pairs(PredictorKind::Analytic(f), Vec::new(), Vec::new(), 2, group)
    }

    pub fn kind(&self) -> &PredictorKind {
        &self.kind
    }

    pub fn group(&self) -> &GroupSpec {
        &self.group
    }

    pub fn target_dim(&self) -> usize {
        self.target_dim
    }

    /// Lipschitz constant in the quotient target metric; known exactly for
    /// piecewise-linear predictors only.
    pub fn lipschitz(&self) -> Option<f64> {
        self.lipschitz
    }

    /// Lipschitz constant with respect to the squared loss itself,
    /// `l(f(x), f(x')) <= L l(x, x')`, which is the square of [`Self::lipschitz`].
    /// This is the constant for which `E / (1 + L) <= R` holds under squared loss.
    pub fn loss_lipschitz(&self) -> Option<f64> {
        self.lipschitz.map(|s| s * s)
    }

    fn target(&self, i: usize) -> &[f64] {
        &self.targets[i * self.target_dim..(i + 1) * self.target_dim]
    }

    // Largest quotient-metric slope between consecutive training pairs.
    fn max_segment_slope(&self) -> f64 {
        let dim = 1 + self.target_dim;
        let mut a = vec![0.0; dim];
        let mut b = vec![0.0; dim];
        let mut best: f64 = 0.0;
        for i in 1..self.inputs.len() {
            let dx = self.inputs[i] - self.inputs[i - 1];
            if dx <= 0.0 {
                continue;
            }
            // Same input on both ends isolates the target part of the metric.
            a[0] = 0.0;
            b[0] = 0.0;
            a[1..].copy_from_slice(self.target(i - 1));
            b[1..].copy_from_slice(self.target(i));
            let d = self.group.orbit_sq_dist_unchecked(&a, &b).sqrt();
            best = best.max(d / dx);
        }
        best
    }

    /// Writes `f(x)` into `out` (length `target_dim`).
    pub fn predict_into(&self, x: f64, out: &mut [f64]) {
        match &self.kind {
            PredictorKind::Analytic(f) => f(x, out),
            PredictorKind::NearestInput => {
                let i = self.inputs.partition_point(|&v| v < x);
                let pick = if i == 0 {
                    0
                } else if i == self.inputs.len() {
                    i - 1
                } else if self.inputs[i] == x || (self.inputs[i] - x) < (x - self.inputs[i - 1]) {
                    i
                } else {
                    i - 1
                };
                out.copy_from_slice(self.target(pick));
            }
            PredictorKind::PiecewiseLinear1D => {
                let i = self.inputs.partition_point(|&v| v < x);
                if i == self.inputs.len() {
                    out.copy_from_slice(self.target(i - 1));
                } else if i == 0 || self.inputs[i] == x {
                    out.copy_from_slice(self.target(i));
                } else {
                    let (x0, x1) = (self.inputs[i - 1], self.inputs[i]);
                    let s = (x - x0) / (x1 - x0);
                    for (k, o) in out.iter_mut().enumerate() {
                        let (a, b) = (self.target(i - 1)[k], self.target(i)[k]);
                        *o = a + s * (b - a);
                    }
                }
            }
        }
    }

    pub fn predict(&self, x: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.target_dim];
        self.predict_into(x, &mut out);
        out
    }
}

/// Per-sample conditional gap and generalization error on one shared
/// evaluation sample.
#[derive(Clone, Debug)]
pub struct ConditionalPair {
    pub gap_samples: Vec<f64>,
    pub gen_samples: Vec<f64>,
    pub seed: u64,
    pub n_dataset: usize,
    pub grid_size: usize,
    pub lipschitz: Option<f64>,
    pub metric: GapMetric,
}

impl ConditionalPair {
    pub fn gap(&self) -> GapEstimate {
        let (value, std_error) = mean_and_se(&self.gap_samples);
        GapEstimate {
            value,
            std_error,
            n_dataset: self.n_dataset,
            n_eval: self.gap_samples.len(),
            seed: self.seed,
            mode: GapMode::Iid,
            metric: self.metric,
        }
    }

    pub fn gen_error(&self) -> f64 {
        mean_and_se(&self.gen_samples).0
    }

    pub fn gen_std_error(&self) -> f64 {
        mean_and_se(&self.gen_samples).1
    }

    /// Standard error of the paired difference `gen - gap`.
    pub fn upper_sigma(&self) -> f64 {
        let d: Vec<f64> = self
            .gen_samples
            .iter()
            .zip(&self.gap_samples)
            .map(|(e, r)| e - r)
            .collect();
        mean_and_se(&d).1
    }

    /// Standard error of the paired difference `gap - gen / (1 + l)`.
    pub fn lower_sigma(&self, l: f64) -> f64 {
        let d: Vec<f64> = self
            .gap_samples
            .iter()
            .zip(&self.gen_samples)
            .map(|(r, e)| r - e / (1.0 + l))
            .collect();
        mean_and_se(&d).1
    }
}

/// Conditional gap and generalization error of `pred` on a wave, sharing one
/// sample of `n_eval` inputs.
///
/// For an evaluation point `z = (x, y, w(x))` the gap term is the smallest
/// (quotient) squared distance from `z` to the predictor graph evaluated on
/// `grid_size` evenly spaced inputs together with `x` itself; the error term
/// is the distance to `(x, f(x))`. The gap term therefore never exceeds the
/// error term.
pub fn conditional_pair(
    spec: &ManifoldSpec,
    pred: &Predictor,
    n_eval: usize,
    seed: u64,
    grid_size: usize,
) -> Result<ConditionalPair> {
    let ManifoldKind::Wave(w) = spec.kind() else {
        return Err(Error::Unsupported(
            "conditional gap is defined on the wave manifold".into(),
        ));
    };
    if n_eval == 0 || grid_size < 2 {
        return Err(Error::invalid(
            "conditional gap needs n_eval >= 1 and grid_size >= 2",
        ));
    }
    Error::check_dim(spec.ambient_dim(), 1 + pred.target_dim)?;
    let group = &pred.group;
    let dim = spec.ambient_dim();
    let len = w.input_length();
    let mut graph = vec![0.0; grid_size * dim];
    let mut raw = vec![0.0; dim];
    for (j, out) in graph.chunks_exact_mut(dim).enumerate() {
        raw[0] = len * j as f64 / (grid_size - 1) as f64;
        pred.predict_into(raw[0], &mut raw[1..]);
        group.canonicalize_into(&raw, out);
    }
    let index = NnIndex::build(&PointCloud::new(dim, graph)?)?;

    let mut rng: Rng = rng::seeded(seed, rng::stream::EVAL);
    let eval = sample_conditional_wave_with(spec, n_eval, &mut rng)?;
    let mut gap_samples = Vec::with_capacity(n_eval);
    let mut gen_samples = Vec::with_capacity(n_eval);
    let mut canon = vec![0.0; dim];
    for z in eval.cloud.iter() {
        raw[0] = z[0];
        pred.predict_into(z[0], &mut raw[1..]);
        let gen = group.orbit_sq_dist_unchecked(z, &raw);
        group.canonicalize_into(z, &mut canon);
        let grid = index.nearest_unchecked(&canon).1;
        gen_samples.push(gen);
        gap_samples.push(grid.min(gen));
    }
    Ok(ConditionalPair {
        gap_samples,
        gen_samples,
        seed,
        n_dataset: pred.inputs.len(),
        grid_size,
        lipschitz: pred.lipschitz,
        metric: if group.is_identity() {
            GapMetric::SqEuclidean
        } else {
            GapMetric::Quotient
        },
    })
}

/// Conditional representation gap with the default grid density.
pub fn conditional_gap(
    spec: &ManifoldSpec,
    pred: &Predictor,
    n_eval: usize,
    seed: u64,
) -> Result<GapEstimate> {
    Ok(conditional_pair(spec, pred, n_eval, seed, DEFAULT_GRID_SIZE)?.gap())
}

/// Generalization error `E[l_Y(y(x), f(x))]` on the same evaluation sample
/// [`conditional_gap`] draws for `seed`.
pub fn gen_error(spec: &ManifoldSpec, pred: &Predictor, n_eval: usize, seed: u64) -> Result<f64> {
    Ok(conditional_pair(spec, pred, n_eval, seed, DEFAULT_GRID_SIZE)?.gen_error())
}
