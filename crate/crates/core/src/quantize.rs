//! Optimally diverse datasets: k-means++ seeding followed by Lloyd
//! iterations whose centroids are snapped back onto the manifold.
//!
//! The quantization target is a dense uniform reference sample of the
//! manifold. With a non-trivial group every step runs on canonical orbit
//! representatives, so assignment uses the exact quotient distance and the
//! resulting dataset is optimal for the quotient.

use rand::Rng as _;

use crate::nnindex::NnIndex;
use crate::repgap::{GapEstimate, GapMetric, GapMode};
use crate::rng::{self, Rng};
use crate::{sq_dist, Error, GroupSpec, ManifoldKind, ManifoldSpec, PointCloud, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LloydOptions {
    pub max_iter: usize,
    /// Stop once the relative decrease of the error falls below this.
    pub tol: f64,
}

impl Default for LloydOptions {
    fn default() -> Self {
        Self {
            max_iter: 200,
            tol: 1e-6,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimalOptions {
    /// Size of the uniform reference sample the quantizer fits. Ignored for
    /// external manifolds, whose reference cloud is used as is.
    pub reference_size: usize,
    pub restarts: usize,
    pub lloyd: LloydOptions,
}

impl Default for OptimalOptions {
    fn default() -> Self {
        Self {
            reference_size: 100_000,
            restarts: 8,
            lloyd: LloydOptions::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct QuantizerResult {
    /// Centroids on the manifold (canonical representatives for a group).
    pub centroids: PointCloud,
    /// Mean squared (quotient) distance from the reference to its centroid.
    pub quantization_error: f64,
    /// Standard error of `quantization_error` as a mean over reference points.
    pub std_error: f64,
    /// Number of centroid updates performed.
    pub iterations: usize,
    pub converged: bool,
    /// Error after each assignment step, starting with the initial centroids.
    pub error_history: Vec<f64>,
}

/// Picks `n` distinct sample points by D^2 weighting. The first pick is
/// uniform; later picks are proportional to the squared distance to the
/// nearest pick so far. If every remaining point coincides with a pick the
/// next pick is uniform among the unpicked points.
pub fn kmeanspp_init(sample: &PointCloud, n: usize, seed: u64) -> Result<PointCloud> {
    let mut rng = rng::seeded(seed, rng::stream::INIT);
    let picks = kmeanspp_indices(sample, n, &mut rng)?;
    Ok(sample.select(&picks))
}

pub fn kmeanspp_indices(sample: &PointCloud, n: usize, rng: &mut Rng) -> Result<Vec<usize>> {
    if n == 0 {
        return Err(Error::invalid("number of centroids must be at least 1"));
    }
    if n > sample.len() {
        return Err(Error::invalid(format!(
            "cannot pick {n} distinct points from a sample of {}",
            sample.len()
        )));
    }
    let mut picked = vec![false; sample.len()];
    let mut picks = Vec::with_capacity(n);
    let first = rng.random_range(0..sample.len());
    picked[first] = true;
    picks.push(first);
    let mut d2: Vec<f64> = sample
        .iter()
        .map(|p| sq_dist(p, sample.point(first)))
        .collect();
    d2[first] = 0.0;
    while picks.len() < n {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let u = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut choice = None;
            for (i, w) in d2.iter().enumerate() {
                if *w > 0.0 {
                    acc += w;
                    choice = Some(i);
                    if acc > u {
                        break;
                    }
                }
            }
            choice.expect("positive total weight has a positive entry")
        } else {
            let free: Vec<usize> = (0..sample.len()).filter(|&i| !picked[i]).collect();
            free[rng.random_range(0..free.len())]
        };
        picked[next] = true;
        picks.push(next);
        let c = sample.point(next).to_vec();
        for (i, p) in sample.iter().enumerate() {
            if picked[i] {
                d2[i] = 0.0;
            } else {
                d2[i] = d2[i].min(sq_dist(p, &c));
            }
        }
    }
    Ok(picks)
}

/// Lloyd iterations on the manifold (no group).
pub fn lloyd(
    spec: &ManifoldSpec,
    init: &PointCloud,
    reference: &PointCloud,
    opts: LloydOptions,
) -> Result<QuantizerResult> {
    lloyd_quotient(
        spec,
        &GroupSpec::identity(spec.ambient_dim()),
        init,
        reference,
        opts,
    )
}

/// Lloyd iterations in quotient coordinates.
///
/// Each round assigns every reference point to its nearest centroid, records
/// the mean error, and moves each centroid to `canonicalize(project(mean))`
/// of its cell. A centroid whose cell is empty is re-seeded at the reference
/// point farthest from its assigned centroid (distinct points, largest first).
pub fn lloyd_quotient(
    spec: &ManifoldSpec,
    group: &GroupSpec,
    init: &PointCloud,
    reference: &PointCloud,
    opts: LloydOptions,
) -> Result<QuantizerResult> {
    let dim = spec.ambient_dim();
    Error::check_dim(dim, init.dim())?;
    Error::check_dim(dim, reference.dim())?;
    Error::check_dim(dim, group.ambient_dim())?;
    if init.is_empty() {
        return Err(Error::Empty(
            "Lloyd needs at least one initial centroid".into(),
        ));
    }
    if reference.is_empty() {
        return Err(Error::Empty(
            "Lloyd needs a non-empty reference sample".into(),
        ));
    }
    let reference = group.canonicalize_cloud(reference)?;
    let k = init.len();
    let mut centroids = vec![0.0; k * dim];
    let mut scratch = vec![0.0; dim];
    for (src, dst) in init.iter().zip(centroids.chunks_exact_mut(dim)) {
        snap(spec, group, src, dst, &mut scratch);
    }

    let m = reference.len();
    let mut assign = vec![0usize; m];
    let mut dist = vec![0.0; m];
    let mut history = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    loop {
        let index = NnIndex::build(&PointCloud::from_raw(dim, centroids.clone()))?;
        for (i, p) in reference.iter().enumerate() {
            let (j, d) = index.nearest_unchecked(p);
            assign[i] = j;
            dist[i] = d;
        }
        let err = dist.iter().sum::<f64>() / m as f64;
        if let Some(&prev) = history.last() {
            if prev <= 0.0 || (prev - err) / prev < opts.tol {
                history.push(err);
                converged = true;
                break;
            }
        }
        history.push(err);
        if err == 0.0 {
            converged = true;
            break;
        }
        if iterations >= opts.max_iter {
            break;
        }

        let mut sums = vec![0.0; k * dim];
        let mut counts = vec![0usize; k];
        for (i, p) in reference.iter().enumerate() {
            let j = assign[i];
            counts[j] += 1;
            for (s, c) in sums[j * dim..(j + 1) * dim].iter_mut().zip(p) {
                *s += c;
            }
        }
        let empty: Vec<usize> = (0..k).filter(|&j| counts[j] == 0).collect();
        if !empty.is_empty() {
            let mut order: Vec<usize> = (0..m).collect();
            order.sort_by(|&a, &b| dist[b].total_cmp(&dist[a]).then(a.cmp(&b)));
            let mut used: Vec<&[f64]> = Vec::new();
            let mut candidates = order.into_iter();
            for &j in &empty {
                let p = loop {
                    match candidates.next() {
                        Some(i) => {
                            let p = reference.point(i);
                            if !used.contains(&p) {
                                break Some(p);
                            }
                        }
                        None => break None,
                    }
                };
                if let Some(p) = p {
                    centroids[j * dim..(j + 1) * dim].copy_from_slice(p);
                    used.push(p);
                }
            }
        }
        for j in 0..k {
            if counts[j] == 0 {
                continue;
            }
            let mean: Vec<f64> = sums[j * dim..(j + 1) * dim]
                .iter()
                .map(|s| s / counts[j] as f64)
                .collect();
            snap(
                spec,
                group,
                &mean,
                &mut centroids[j * dim..(j + 1) * dim],
                &mut scratch,
            );
        }
        iterations += 1;
    }

    let err = *history.last().unwrap();
    let var = dist.iter().map(|d| (d - err).powi(2)).sum::<f64>() / (m.max(2) - 1) as f64;
    Ok(QuantizerResult {
        centroids: PointCloud::new(dim, centroids)?,
        quantization_error: err,
        std_error: (var / m as f64).sqrt(),
        iterations,
        converged,
        error_history: history,
    })
}

fn snap(spec: &ManifoldSpec, group: &GroupSpec, y: &[f64], out: &mut [f64], scratch: &mut [f64]) {
    group.canonicalize_into(y, scratch);
    spec.project_into(scratch, out);
    scratch.copy_from_slice(out);
    group.canonicalize_into(scratch, out);
}

/// Uniform reference sample for quantizing `spec` (the stored cloud for an
/// external manifold).
pub fn reference_sample(spec: &ManifoldSpec, size: usize, seed: u64) -> Result<PointCloud> {
    match spec.kind() {
        ManifoldKind::External(ext) => Ok(ext.cloud().clone()),
        _ => {
            let mut rng = rng::seeded(seed, rng::stream::REFERENCE);
            spec.sample_uniform_with(size, &mut rng)
        }
    }
}

/// Best quantization over `opts.restarts` k-means++/Lloyd runs: an estimate
/// of the optimal gap `R*_n`. The estimate is the quantization error over the
/// reference sample, so `n_eval` equals the reference size.
pub fn optimal_gap(
    spec: &ManifoldSpec,
    group: &GroupSpec,
    n: usize,
    seed: u64,
    opts: OptimalOptions,
) -> Result<(GapEstimate, QuantizerResult)> {
    if n == 0 {
        return Err(Error::invalid("dataset size n must be at least 1"));
    }
    if opts.restarts == 0 {
        return Err(Error::invalid("restarts must be at least 1"));
    }
    let reference = reference_sample(spec, opts.reference_size, seed)?;
    if n > reference.len() {
        return Err(Error::invalid(format!(
            "dataset size {n} exceeds the reference sample size {}",
            reference.len()
        )));
    }
    let canonical = group.canonicalize_cloud(&reference)?;
    let mut best: Option<QuantizerResult> = None;
    for r in 0..opts.restarts {
        let mut rng = rng::seeded(rng::worker_seed(seed, r as u64), rng::stream::INIT);
        let picks = kmeanspp_indices(&canonical, n, &mut rng)?;
        let result = lloyd_quotient(
            spec,
            group,
            &canonical.select(&picks),
            &canonical,
            opts.lloyd,
        )?;
        if best
            .as_ref()
            .is_none_or(|b| result.quantization_error < b.quantization_error)
        {
            best = Some(result);
        }
    }
    let best = best.expect("at least one restart");
    let estimate = GapEstimate {
        value: best.quantization_error,
        std_error: best.std_error,
        n_dataset: n,
        n_eval: reference.len(),
        seed,
        mode: GapMode::Optimal,
        metric: if group.is_identity() {
            GapMetric::SqEuclidean
        } else {
            GapMetric::Quotient
        },
    };
    Ok((estimate, best))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn interval() -> ManifoldSpec {
        ManifoldSpec::hypercube(1, 1, 1.0).unwrap()
    }

    #[test]
    fn kmeanspp_full_pick_is_permutation() {
        let s = interval().sample_uniform(50, 1).unwrap();
        let mut idx = kmeanspp_indices(&s, 50, &mut rng::seeded(3, 0)).unwrap();
        idx.sort_unstable();
        assert_eq!(idx, (0..50).collect::<Vec<_>>());
    }

    #[test]
    fn kmeanspp_handles_duplicates_and_errors() {
        let s = PointCloud::from_rows(&vec![vec![1.0]; 5]).unwrap();
        let mut idx = kmeanspp_indices(&s, 5, &mut rng::seeded(0, 0)).unwrap();
        idx.sort_unstable();
        assert_eq!(idx, vec![0, 1, 2, 3, 4]);
        assert!(kmeanspp_init(&s, 6, 0).is_err());
        assert!(kmeanspp_init(&s, 0, 0).is_err());
    }

    #[test]
    fn kmeanspp_single_pick_is_uniform() {
        let s = PointCloud::from_rows(&(0..4).map(|i| vec![i as f64]).collect::<Vec<_>>()).unwrap();
        let mut counts = [0usize; 4];
        for seed in 0..4000 {
            let p = kmeanspp_init(&s, 1, seed).unwrap();
            counts[p.point(0)[0] as usize] += 1;
        }
        // Binomial(4000, 1/4): std ~ 27.
        assert!(
            counts.iter().all(|&c| (c as f64 - 1000.0).abs() < 150.0),
            "{counts:?}"
        );
    }

    #[test]
    fn lloyd_on_empty_inputs_fails() {
        let spec = interval();
        let r = spec.sample_uniform(10, 0).unwrap();
        assert!(lloyd(&spec, &PointCloud::empty(1), &r, LloydOptions::default()).is_err());
        assert!(lloyd(&spec, &r, &PointCloud::empty(1), LloydOptions::default()).is_err());
    }

    #[test]
    fn empty_cell_is_reseeded_at_farthest_point() {
        let spec = interval();
        let reference = PointCloud::from_rows(&[vec![-0.5], vec![-0.4], vec![0.5]]).unwrap();
        // Two identical centroids: the second one owns no point.
        let init = PointCloud::from_rows(&[vec![-0.45], vec![-0.45]]).unwrap();
        let r = lloyd(
            &spec,
            &init,
            &reference,
            LloydOptions {
                max_iter: 1,
                tol: 0.0,
            },
        )
        .unwrap();
        assert_eq!(r.iterations, 1);
        let mut c: Vec<f64> = r.centroids.iter().map(|p| p[0]).collect();
        c.sort_by(f64::total_cmp);
        // The first centroid owned every point and moves to their mean.
        assert!((c[0] + 0.4 / 3.0).abs() < 1e-15);
        assert_eq!(c[1], 0.5);
    }
}
