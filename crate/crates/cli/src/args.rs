//! Command-line surface. Every flag is shorthand for a config key; the
//! effective configuration is the config file, then flags, then `--set`
//! overrides, each layer replacing the keys it mentions.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::Config;
use crate::error::Result;

#[derive(Debug, Parser)]
#[command(
    name = "repgap",
    version,
    about = "Representation-gap scaling experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a uniform sample from a manifold and write it as a cloud file.
    Sample(Knobs),
    /// Fit an optimal quantizer (k-means++ and Lloyd) of size n.
    Quantize(Knobs),
    /// Estimate the representation gap of one dataset.
    Gap(Knobs),
    /// Gap curve over n_grid and seeds, with a log-log fit.
    Scaling(Knobs),
    /// Intrinsic dimension of an ingested cloud from held-out gaps.
    Dimfit(Knobs),
    /// Reverse diffusion with the analytic score of a dataset orbit.
    Diffuse(Knobs),
    /// Table of nearest-neighbor constants and effective sample sizes.
    Constants(Knobs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Sample(_) => "sample",
            Command::Quantize(_) => "quantize",
            Command::Gap(_) => "gap",
            Command::Scaling(_) => "scaling",
            Command::Dimfit(_) => "dimfit",
            Command::Diffuse(_) => "diffuse",
            Command::Constants(_) => "constants",
        }
    }

    pub fn knobs(&self) -> &Knobs {
        match self {
            Command::Sample(k)
            | Command::Quantize(k)
            | Command::Gap(k)
            | Command::Scaling(k)
            | Command::Dimfit(k)
            | Command::Diffuse(k)
            | Command::Constants(k) => k,
        }
    }
}

#[derive(Debug, Default, Args)]
pub struct Knobs {
    /// Config file of key=value lines.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Override any config key (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,

    /// manifold.kind: cube, sphere, wave, swissroll or deformed_sphere.
    #[arg(long)]
    pub manifold: Option<String>,
    /// manifold.d (cube dimension).
    #[arg(long)]
    pub d: Option<String>,
    /// manifold.ambient
    #[arg(long)]
    pub ambient: Option<String>,
    /// manifold.side
    #[arg(long)]
    pub side: Option<String>,
    /// manifold.r (sphere or wave radius).
    #[arg(long)]
    pub r: Option<String>,
    /// manifold.arcs
    #[arg(long)]
    pub arcs: Option<String>,
    /// manifold.width
    #[arg(long)]
    pub width: Option<String>,
    /// manifold.amplitude
    #[arg(long)]
    pub amplitude: Option<String>,
    /// manifold.t_min
    #[arg(long)]
    pub t_min: Option<String>,
    /// manifold.t_max
    #[arg(long)]
    pub t_max: Option<String>,
    /// manifold.height
    #[arg(long)]
    pub height: Option<String>,

    /// group.kind: identity, rotation or translation.
    #[arg(long)]
    pub group: Option<String>,
    /// group.axis (rotation axis).
    #[arg(long)]
    pub axis: Option<String>,
    /// group.axes (translated axes).
    #[arg(long)]
    pub axes: Option<String>,
    /// group.periods
    #[arg(long)]
    pub periods: Option<String>,
    /// group.origins
    #[arg(long)]
    pub origins: Option<String>,

    /// n (dataset size).
    #[arg(long)]
    pub n: Option<String>,
    /// seed
    #[arg(long)]
    pub seed: Option<String>,
    /// n_grid: "32,64,128" or "2^5..2^10".
    #[arg(long)]
    pub n_grid: Option<String>,
    /// seeds: "0..5" or "1,4,9".
    #[arg(long)]
    pub seeds: Option<String>,
    /// mode: iid or optimal.
    #[arg(long)]
    pub mode: Option<String>,
    /// n_eval
    #[arg(long)]
    pub n_eval: Option<String>,
    /// metric: auto, sq_euclidean, sq_geodesic or quotient.
    #[arg(long)]
    pub metric: Option<String>,

    /// diffusion.T (number of steps).
    #[arg(long)]
    pub steps: Option<String>,
    /// diffusion.n_samples
    #[arg(long)]
    pub samples: Option<String>,
    /// diffusion.K: orbit quadrature size, or auto.
    #[arg(long)]
    pub k: Option<String>,

    /// out: output file (sample) or directory.
    #[arg(long)]
    pub out: Option<String>,
    /// input: cloud file to analyse (dimfit).
    #[arg(long)]
    pub input: Option<String>,
    /// data.path: dataset cloud replacing a manifold sample.
    #[arg(long)]
    pub data: Option<String>,
}

impl Knobs {
    fn flags(&self) -> [(&'static str, &Option<String>); 28] {
        [
            ("manifold.kind", &self.manifold),
            ("manifold.d", &self.d),
            ("manifold.ambient", &self.ambient),
            ("manifold.side", &self.side),
            ("manifold.r", &self.r),
            ("manifold.arcs", &self.arcs),
            ("manifold.width", &self.width),
            ("manifold.amplitude", &self.amplitude),
            ("manifold.t_min", &self.t_min),
            ("manifold.t_max", &self.t_max),
            ("manifold.height", &self.height),
            ("group.kind", &self.group),
            ("group.axis", &self.axis),
            ("group.axes", &self.axes),
            ("group.periods", &self.periods),
            ("group.origins", &self.origins),
            ("n", &self.n),
            ("seed", &self.seed),
            ("n_grid", &self.n_grid),
            ("seeds", &self.seeds),
            ("mode", &self.mode),
            ("n_eval", &self.n_eval),
            ("metric", &self.metric),
            ("diffusion.T", &self.steps),
            ("diffusion.n_samples", &self.samples),
            ("diffusion.K", &self.k),
            ("out", &self.out),
            ("input", &self.input),
        ]
    }

    pub fn to_config(&self) -> Result<Config> {
        let mut cfg = match &self.config {
            Some(path) => Config::from_file(path)?,
            None => Config::default(),
        };
        for (key, value) in self.flags() {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        if let Some(v) = &self.data {
            cfg.set("data.path", v)?;
        }
        for pair in &self.set {
            cfg.set_pair(pair)?;
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_map_to_keys_and_set_wins() {
        let cli = Cli::try_parse_from([
            "repgap",
            "sample",
            "--manifold",
            "sphere",
            "--r",
            "2",
            "--n",
            "10",
            "--set",
            "manifold.r=3",
        ])
        .unwrap();
        assert_eq!(cli.command.name(), "sample");
        let cfg = cli.command.knobs().to_config().unwrap();
        assert_eq!(cfg.require::<String>("manifold.kind").unwrap(), "sphere");
        assert_eq!(cfg.require::<f64>("manifold.r").unwrap(), 3.0);
        assert_eq!(cfg.require::<usize>("n").unwrap(), 10);
    }

    #[test]
    fn unknown_flags_are_usage_errors() {
        let err = Cli::try_parse_from(["repgap", "gap", "--radius", "1"]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
