//! Manifolds, groups and options assembled from configuration keys.

use std::f64::consts::PI;

use repgap_core::groups::OrbitVolume;
use repgap_core::manifolds::{SwissRollParams, WaveParams};
use repgap_core::quantize::{LloydOptions, OptimalOptions};
use repgap_core::{GapMetric, GapMode, GroupSpec, ManifoldKind, ManifoldSpec};

use crate::config::{Config, FloatList, SizeList};
use crate::error::{CliError, Context, Result};

pub fn manifold(cfg: &Config) -> Result<ManifoldSpec> {
    let kind: String = cfg.get("manifold.kind", "sphere".to_string())?;
    let spec = match kind.as_str() {
        "cube" => {
            let d: usize = cfg.get("manifold.d", 1)?;
            let ambient: usize = cfg.get("manifold.ambient", d)?;
            let side: f64 = cfg.get("manifold.side", 1.0)?;
            ManifoldSpec::hypercube(d, ambient, side)
        }
        "sphere" => {
            let ambient: usize = cfg.get("manifold.ambient", 3)?;
            let r: f64 = cfg.get("manifold.r", 1.0)?;
            ManifoldSpec::hypersphere(ambient, r)
        }
        "wave" => {
            let d = WaveParams::default();
            let params = WaveParams {
                radius: cfg.get("manifold.r", d.radius)?,
                arcs: cfg.get("manifold.arcs", d.arcs)?,
                width: cfg.get("manifold.width", d.width)?,
            };
            ManifoldSpec::wave(params)
        }
        "swissroll" => {
            let t_min: f64 = cfg.get("manifold.t_min", 1.5 * PI)?;
            let t_max: f64 = cfg.get("manifold.t_max", 4.5 * PI)?;
            let height: f64 = cfg.get("manifold.height", 10.0)?;
            SwissRollParams::new(t_min, t_max, height).map(ManifoldSpec::swiss_roll)
        }
        "deformed_sphere" => ManifoldSpec::deformed_sphere(cfg.get("manifold.amplitude", 0.3)?),
        other => return Err(CliError::config(format!(
            "manifold.kind = {other:?}: expected cube, sphere, wave, swissroll or deformed_sphere"
        ))),
    };
    spec.context(|| format!("building manifold {kind}"))
}

/// The group acting on `ambient`-dimensional points. Translation defaults
/// come from `manifold` when one is given: the cube translates along axis 0
/// over its side, the wave along its width.
pub fn group(cfg: &Config, ambient: usize, manifold: Option<&ManifoldSpec>) -> Result<GroupSpec> {
    let kind: String = cfg.get("group.kind", "identity".to_string())?;
    match kind.as_str() {
        "identity" => Ok(GroupSpec::identity(ambient)),
        "rotation" => {
            let axis: usize = cfg.get("group.axis", ambient.saturating_sub(1))?;
            GroupSpec::rotation(ambient, axis).context(|| "building rotation group".into())
        }
        "translation" => {
            let defaults = match manifold.map(|m| m.kind()) {
                Some(ManifoldKind::Hypercube { side }) => {
                    Some((vec![0], vec![*side], vec![-side / 2.0]))
                }
                Some(ManifoldKind::Wave(w)) => Some((vec![1], vec![w.width], vec![0.0])),
                _ => None,
            };
            let (axes, periods, origins) = match defaults {
                Some((a, p, o)) => (
                    cfg.get("group.axes", SizeList(a))?.0,
                    cfg.get("group.periods", FloatList(p))?.0,
                    cfg.get("group.origins", FloatList(o))?.0,
                ),
                None => (
                    cfg.require::<SizeList>("group.axes")?.0,
                    cfg.require::<FloatList>("group.periods")?.0,
                    cfg.require::<FloatList>("group.origins")?.0,
                ),
            };
            GroupSpec::translation(ambient, axes, periods, origins)
                .context(|| "building translation group".into())
        }
        other => Err(CliError::config(format!(
            "group.kind = {other:?}: expected identity, rotation or translation"
        ))),
    }
}

pub fn mode(cfg: &Config) -> Result<GapMode> {
    let raw: String = cfg.get("mode", "iid".to_string())?;
    match raw.as_str() {
        "iid" => Ok(GapMode::Iid),
        "optimal" => Ok(GapMode::Optimal),
        other => Err(CliError::config(format!(
            "mode = {other:?}: expected iid or optimal"
        ))),
    }
}

/// `auto` picks the quotient metric for a nontrivial group and squared
/// Euclidean distance otherwise.
pub fn metric(cfg: &Config, group: &GroupSpec) -> Result<GapMetric> {
    let raw: String = cfg.get("metric", "auto".to_string())?;
    match raw.as_str() {
        "auto" if group.is_identity() => Ok(GapMetric::SqEuclidean),
        "auto" | "quotient" => Ok(GapMetric::Quotient),
        "sq_euclidean" => Ok(GapMetric::SqEuclidean),
        "sq_geodesic" => Ok(GapMetric::SqGeodesic),
        other => Err(CliError::config(format!(
            "metric = {other:?}: expected auto, sq_euclidean, sq_geodesic or quotient"
        ))),
    }
}

pub fn optimal_options(cfg: &Config) -> Result<OptimalOptions> {
    let d = OptimalOptions::default();
    Ok(OptimalOptions {
        reference_size: cfg.get("quantize.reference_size", d.reference_size)?,
        restarts: cfg.get("quantize.restarts", d.restarts)?,
        lloyd: LloydOptions {
            max_iter: cfg.get("quantize.max_iter", d.lloyd.max_iter)?,
            tol: cfg.get("quantize.tol", d.lloyd.tol)?,
        },
    })
}

/// Dataset sizes; must be non-empty and strictly increasing.
pub fn n_grid(cfg: &Config) -> Result<Vec<usize>> {
    let grid = cfg
        .get("n_grid", SizeList(vec![32, 64, 128, 256, 512, 1024]))?
        .0;
    if grid.is_empty() || grid.contains(&0) {
        return Err(CliError::config("n_grid must list positive sizes"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CliError::config("n_grid must be strictly increasing"));
    }
    Ok(grid)
}

pub fn orbit_volume_label(group: &GroupSpec) -> serde_json::Value {
    match group.orbit_volume() {
        OrbitVolume::Unit => serde_json::json!(1.0),
        OrbitVolume::Constant(v) => serde_json::json!(v),
        OrbitVolume::Varying => serde_json::json!("varying"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_build_the_unit_sphere() {
        let cfg = Config::default();
        let m = manifold(&cfg).unwrap();
        assert_eq!((m.intrinsic_dim(), m.ambient_dim()), (2, 3));
        let g = group(&cfg, 3, Some(&m)).unwrap();
        assert!(g.is_identity());
        assert_eq!(cfg.resolved()["manifold.r"], "1");
    }

    #[test]
    fn translation_defaults_follow_the_manifold() {
        let cfg =
            Config::parse("manifold.kind=wave\nmanifold.width=3\ngroup.kind=translation").unwrap();
        let m = manifold(&cfg).unwrap();
        let g = group(&cfg, 3, Some(&m)).unwrap();
        assert_eq!(g.orbit_volume(), OrbitVolume::Constant(3.0));
        assert_eq!(cfg.resolved()["group.axes"], "1");

        let cfg = Config::parse("group.kind=translation").unwrap();
        let m = manifold(&cfg).unwrap();
        assert!(matches!(group(&cfg, 3, Some(&m)), Err(CliError::Config(_))));
    }

    #[test]
    fn bad_values_are_config_errors() {
        for text in [
            "manifold.kind=torus",
            "mode=best",
            "n_grid=64,32",
            "group.kind=scaling",
        ] {
            let cfg = Config::parse(text).unwrap();
            let r = manifold(&cfg)
                .and_then(|m| group(&cfg, 3, Some(&m)))
                .and_then(|_| mode(&cfg))
                .and_then(|_| n_grid(&cfg));
            assert_eq!(r.unwrap_err().exit_code(), 2, "{text}");
        }
        let cfg = Config::parse("manifold.kind=cube\nmanifold.d=0").unwrap();
        assert_eq!(manifold(&cfg).unwrap_err().exit_code(), 2);
    }
}
