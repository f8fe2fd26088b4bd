use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use vbamap::commands;
use vbamap::{ConfigFile, RunConfig};

/// County survey-versus-baseline difference estimates, significance maps and
/// diagnostics.
#[derive(Parser)]
#[command(name = "vbamap", version)]
struct Cli {
    /// More logging on stderr (repeat for debug output).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate area differences, standard errors and diagnostics.
    Estimate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        inputs: Inputs,
    },
    /// Render choropleth SVGs (and QQ plots) from results.
    Map {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        inputs: Inputs,
        #[command(flatten)]
        display: Display,
        /// Comma-separated: difference, pvalue, combined, qq.
        #[arg(long)]
        mode: Option<String>,
    },
    /// Write a seeded synthetic dataset with a truth manifest.
    Synth {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        synth: SynthArgs,
    },
    /// Write the viewer's JSON bundle.
    Bundle {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        inputs: Inputs,
        #[command(flatten)]
        display: Display,
        /// Largest tolerated share of geoids missing from geometry or results.
        #[arg(long)]
        max_mismatch: Option<String>,
    },
}

#[derive(Args)]
struct Common {
    /// `key = value` settings file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<String>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    jobs: Option<String>,
    /// vacancy, pph, or both (comma-separated).
    #[arg(long)]
    variable: Option<String>,
}

#[derive(Args)]
struct Inputs {
    #[arg(long)]
    microdata: Option<String>,
    #[arg(long)]
    baseline: Option<String>,
    /// A results.csv written by `estimate` (map and bundle only).
    #[arg(long)]
    results: Option<String>,
    /// GeoJSON FeatureCollection with GEOID properties (map and bundle only).
    #[arg(long)]
    geometry: Option<String>,
    /// Replicate variance factor; default 4/R.
    #[arg(long)]
    sdr_factor: Option<String>,
}

#[derive(Args)]
struct Display {
    /// min_lon,min_lat,max_lon,max_lat
    #[arg(long, allow_hyphen_values = true)]
    bbox: Option<String>,
    /// Two-digit state FIPS codes, comma-separated.
    #[arg(long)]
    state: Option<String>,
    /// One value, or vacancy=..,pph=..
    #[arg(long)]
    magnitude_break: Option<String>,
    /// Saturations at 1%, 5%, 10% (a trailing 0 is allowed).
    #[arg(long)]
    alpha_ladder: Option<String>,
    /// conus, alaska, or lat1,lat2,lon0,lat0
    #[arg(long, allow_hyphen_values = true)]
    projection: Option<String>,
    #[arg(long)]
    width: Option<String>,
    #[arg(long)]
    height: Option<String>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    areas: Option<String>,
    #[arg(long)]
    units_min: Option<String>,
    #[arg(long)]
    units_max: Option<String>,
    /// Share of areas given a planted difference.
    #[arg(long)]
    altered_fraction: Option<String>,
    /// Planted difference in design standard errors.
    #[arg(long)]
    effect_se: Option<String>,
    #[arg(long)]
    replicates: Option<String>,
}

type Flags = BTreeMap<String, String>;

fn put(flags: &mut Flags, key: &str, value: &Option<String>) {
    if let Some(v) = value {
        flags.insert(key.to_owned(), v.clone());
    }
}

impl Common {
    fn collect(&self, f: &mut Flags) -> Result<Option<ConfigFile>> {
        put(f, "out", &self.out);
        put(f, "jobs", &self.jobs);
        put(f, "variable", &self.variable);
        self.config.as_deref().map(ConfigFile::load).transpose()
    }
}

impl Inputs {
    fn collect(&self, f: &mut Flags) {
        put(f, "microdata", &self.microdata);
        put(f, "baseline", &self.baseline);
        put(f, "results", &self.results);
        put(f, "geometry", &self.geometry);
        put(f, "sdr-factor", &self.sdr_factor);
    }
}

impl Display {
    fn collect(&self, f: &mut Flags) {
        put(f, "bbox", &self.bbox);
        put(f, "state", &self.state);
        put(f, "magnitude-break", &self.magnitude_break);
        put(f, "alpha-ladder", &self.alpha_ladder);
        put(f, "projection", &self.projection);
        put(f, "width", &self.width);
        put(f, "height", &self.height);
    }
}

impl SynthArgs {
    fn collect(&self, f: &mut Flags) {
        put(f, "seed", &self.seed);
        put(f, "areas", &self.areas);
        put(f, "units-min", &self.units_min);
        put(f, "units-max", &self.units_max);
        put(f, "altered-fraction", &self.altered_fraction);
        put(f, "effect-se", &self.effect_se);
        put(f, "replicates", &self.replicates);
    }
}

fn run(command: Command) -> Result<()> {
    let mut flags = Flags::new();
    match command {
        Command::Estimate { common, inputs } => {
            let file = common.collect(&mut flags)?;
            inputs.collect(&mut flags);
            let out = commands::cmd_estimate(&RunConfig::resolve(&flags, file.as_ref())?)?;
            eprintln!("estimated {} area results", out.results.len());
        }
        Command::Map {
            common,
            inputs,
            display,
            mode,
        } => {
            let file = common.collect(&mut flags)?;
            inputs.collect(&mut flags);
            display.collect(&mut flags);
            put(&mut flags, "mode", &mode);
            for path in commands::cmd_map(&RunConfig::resolve(&flags, file.as_ref())?)? {
                eprintln!("wrote {}", path.display());
            }
        }
        Command::Synth { common, synth } => {
            let file = common.collect(&mut flags)?;
            synth.collect(&mut flags);
            let data = commands::cmd_synth(&RunConfig::resolve(&flags, file.as_ref())?)?;
            eprintln!("generated {} areas", data.areas.len());
        }
        Command::Bundle {
            common,
            inputs,
            display,
            max_mismatch,
        } => {
            let file = common.collect(&mut flags)?;
            inputs.collect(&mut flags);
            display.collect(&mut flags);
            put(&mut flags, "max-mismatch", &max_mismatch);
            let path = commands::cmd_bundle(&RunConfig::resolve(&flags, file.as_ref())?)?;
            eprintln!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .target(env_logger::Target::Stderr)
        .init();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        super::Cli::command().debug_assert();
    }
}
