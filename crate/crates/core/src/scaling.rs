//! Asymptotic constants, log-log slope fits and intrinsic dimension.
//!
//! For a `d`-dimensional manifold of volume `V` and a group with orbit volume
//! `|G|`, the gap of an i.i.d. dataset of size `n` behaves like
//! `|G| J_d V^{2/d} / n^{2/d}` and that of an optimal dataset like
//! `|G| J*_d V^{2/d} / n^{2/d}`. A log-log fit of gap against `n` therefore
//! has slope `-2/d`.

use std::f64::consts::{E, PI};

use crate::{Error, Result};

/// How trustworthy a quantization constant is.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConstantKind {
    Exact,
    /// Large-dimension asymptotic `d / (2 pi e)`.
    Approximation,
    /// Measured by running the quantizer.
    Empirical,
}

impl ConstantKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ConstantKind::Exact => "exact",
            ConstantKind::Approximation => "approximation",
            ConstantKind::Empirical => "empirical",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SamplingMode {
    Random,
    Optimal,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZadorConstants {
    pub d: usize,
    pub j_random: f64,
    pub j_optimal: f64,
    pub j_optimal_kind: ConstantKind,
}

impl ZadorConstants {
    pub fn new(d: usize) -> Result<Self> {
        let (j_optimal, j_optimal_kind) = j_optimal(d)?;
        Ok(Self {
            d,
            j_random: j_random(d)?,
            j_optimal,
            j_optimal_kind,
        })
    }
}

fn check_d(d: usize) -> Result<()> {
    if d == 0 {
        Err(Error::invalid("dimension d must be at least 1"))
    } else {
        Ok(())
    }
}

/// Nearest-neighbor constant `J_d = Gamma(2/d + 1) Gamma(d/2 + 1)^{2/d} / pi`.
pub fn j_random(d: usize) -> Result<f64> {
    check_d(d)?;
    let d = d as f64;
    // Through log-gamma so large d does not overflow.
    let log = libm::lgamma(2.0 / d + 1.0) + (2.0 / d) * libm::lgamma(d / 2.0 + 1.0);
    Ok(log.exp() / PI)
}

/// Optimal quantization constant: exact for `d <= 2`, `d / (2 pi e)` beyond.
pub fn j_optimal(d: usize) -> Result<(f64, ConstantKind)> {
    check_d(d)?;
    Ok(match d {
        1 => (1.0 / 12.0, ConstantKind::Exact),
        2 => (5.0 / (18.0 * 3f64.sqrt()), ConstantKind::Exact),
        _ => (d as f64 / (2.0 * PI * E), ConstantKind::Approximation),
    })
}

/// Volume functional of a uniform density on a region of the given measure.
/// Both the random and the optimal functional reduce to `measure^{2/d}`.
pub fn volume_functional_uniform(measure: f64, d: usize, _mode: SamplingMode) -> Result<f64> {
    check_d(d)?;
    if !(measure > 0.0 && measure.is_finite()) {
        return Err(Error::invalid("measure must be positive"));
    }
    Ok(measure.powf(2.0 / d as f64))
}

/// Size of the optimal dataset whose gap matches an i.i.d. dataset of size
/// `n`: `n (J*_d / J_d)^{d/2}`.
pub fn effective_sample_size(d: usize, n: usize) -> Result<f64> {
    let ratio = j_optimal(d)?.0 / j_random(d)?;
    Ok(n as f64 * ratio.powf(d as f64 / 2.0))
}

/// Theoretical gap `|G| J V / n^{2/d}` and the kind of constant used.
pub fn predicted_gap(
    d: usize,
    n: usize,
    measure: f64,
    group_volume: f64,
    mode: SamplingMode,
) -> Result<(f64, ConstantKind)> {
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    if !(group_volume > 0.0) {
        return Err(Error::invalid("group volume must be positive"));
    }
    let (j, kind) = match mode {
        SamplingMode::Random => (j_random(d)?, ConstantKind::Exact),
        SamplingMode::Optimal => j_optimal(d)?,
    };
    let v = volume_functional_uniform(measure, d, mode)?;
    Ok((group_volume * j * v / (n as f64).powf(2.0 / d as f64), kind))
}

/// Result of an ordinary least-squares fit of `ln gap` on `ln n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// `-2 / slope`; `None` unless the slope is negative.
    pub estimated_dim: Option<f64>,
    pub points_used: usize,
}

pub fn fit_loglog(curve: &[(f64, f64)]) -> Result<ScalingFit> {
    fit_loglog_dropping(curve, 0)
}

/// [`fit_loglog`] after discarding the `drop_smallest` smallest-`n` points.
pub fn fit_loglog_dropping(curve: &[(f64, f64)], drop_smallest: usize) -> Result<ScalingFit> {
    if curve.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::invalid("curve sizes n must be strictly increasing"));
    }
    let pts = curve.get(drop_smallest..).unwrap_or(&[]);
    if pts.len() < 3 {
        return Err(Error::invalid(format!(
            "a log-log fit needs at least 3 points, {} remain",
            pts.len()
        )));
    }
    if let Some(&(n, g)) = pts.iter().find(|(n, g)| !(*n > 0.0) || !(*g > 0.0)) {
        return Err(Error::invalid(format!(
            "log-log fit needs positive n and gap, got n = {n}, gap = {g}"
        )));
    }
    let xs: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r_squared = if ss_tot > 0.0 {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(ScalingFit {
        slope,
        intercept,
        r_squared,
        estimated_dim: (slope < 0.0).then(|| -2.0 / slope),
        points_used: pts.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn j_random_closed_forms() {
        assert!((j_random(1).unwrap() - 0.5).abs() < 1e-15);
        assert!((j_random(2).unwrap() - 1.0 / PI).abs() < 1e-15);
        // Gamma(3/2) Gamma(3)^{1/2} / pi = (sqrt(pi)/2) sqrt(2) / pi.
        let expect = (PI.sqrt() / 2.0) * 2f64.sqrt() / PI;
        assert!((j_random(4).unwrap() - expect).abs() < 1e-14);
        assert!((expect - 0.398942).abs() < 1e-6);
        assert!(j_random(0).is_err());
    }

    #[test]
    fn j_optimal_values() {
        assert_eq!(j_optimal(1).unwrap(), (1.0 / 12.0, ConstantKind::Exact));
        let (j2, k2) = j_optimal(2).unwrap();
        assert!((j2 - 0.160375).abs() < 1e-6 && k2 == ConstantKind::Exact);
        let (j10, k10) = j_optimal(10).unwrap();
        assert!((j10 - 0.585498).abs() < 1e-6 && k10 == ConstantKind::Approximation);
    }

    #[test]
    fn volume_functional_examples() {
        for d in 1..6 {
            for mode in [SamplingMode::Random, SamplingMode::Optimal] {
                assert_eq!(volume_functional_uniform(1.0, d, mode).unwrap(), 1.0);
            }
        }
        assert!(
            (volume_functional_uniform(4.0, 2, SamplingMode::Optimal).unwrap() - 4.0).abs() < 1e-15
        );
        assert!(
            (volume_functional_uniform(8.0, 1, SamplingMode::Random).unwrap() - 64.0).abs() < 1e-12
        );
    }

    #[test]
    fn effective_sample_size_examples() {
        assert!((effective_sample_size(1, 100).unwrap() - 100.0 / 6f64.sqrt()).abs() < 1e-12);
        assert!((effective_sample_size(1, 100).unwrap() - 40.8).abs() < 0.05);
        assert!((effective_sample_size(2, 100).unwrap() - 50.38).abs() < 0.01);
        assert_eq!(effective_sample_size(3, 0).unwrap(), 0.0);
    }

    #[test]
    fn predicted_gap_examples() {
        let (g, _) = predicted_gap(1, 10, 1.0, 1.0, SamplingMode::Optimal).unwrap();
        assert!((g - 1.0 / 1200.0).abs() < 1e-15);
        let (g, _) = predicted_gap(1, 10, 1.0, 1.0, SamplingMode::Random).unwrap();
        assert!((g - 1.0 / 200.0).abs() < 1e-15);
        let (g, _) = predicted_gap(2, 100, 1.0, 1.0, SamplingMode::Random).unwrap();
        assert!((g - 0.003183).abs() < 1e-6);
        let (_, kind) = predicted_gap(3, 100, 1.0, 1.0, SamplingMode::Optimal).unwrap();
        assert_eq!(kind, ConstantKind::Approximation);
    }

    #[test]
    fn fit_examples() {
        let ns = [10.0, 20.0, 40.0, 80.0];
        let c: Vec<_> = ns.iter().map(|&n| (n, 7.0 / (n * n))).collect();
        let f = fit_loglog(&c).unwrap();
        assert!((f.slope + 2.0).abs() < 1e-12);
        assert!((f.estimated_dim.unwrap() - 1.0).abs() < 1e-12);
        let c: Vec<_> = ns.iter().map(|&n| (n, 7.0 / n.powf(2.0 / 3.0))).collect();
        assert!((fit_loglog(&c).unwrap().estimated_dim.unwrap() - 3.0).abs() < 1e-10);
        let flat: Vec<_> = ns.iter().map(|&n| (n, 0.3)).collect();
        let f = fit_loglog(&flat).unwrap();
        assert_eq!(f.slope, 0.0);
        assert_eq!(f.estimated_dim, None);
    }

    #[test]
    fn fit_errors_and_dropping() {
        assert!(fit_loglog(&[(1.0, 1.0), (2.0, 0.5)]).is_err());
        assert!(fit_loglog(&[(1.0, 1.0), (2.0, 0.0), (3.0, 0.1)]).is_err());
        assert!(fit_loglog(&[(1.0, 1.0), (1.0, 0.5), (3.0, 0.1)]).is_err());
        let c = [
            (1.0, 5.0),
            (2.0, 0.25),
            (4.0, 1.0 / 16.0),
            (8.0, 1.0 / 64.0),
        ];
        let f = fit_loglog_dropping(&c, 1).unwrap();
        assert_eq!(f.points_used, 3);
        assert!((f.slope + 2.0).abs() < 1e-12);
    }
}
