//! Command-line front end: strict config parsing, experiment dispatch and
//! deterministic emission of curve CSVs and verdict reports.
//!
//! Every run writes three kinds of artifacts into the output directory:
//! `report.json` (verdicts, checks, full experiment data), one CSV with
//! the curve or table of the experiment, and `manifest.json` holding the
//! fully materialized parameter snapshot. Numbers in CSVs are printed in
//! scientific notation with 12 significant digits and rows follow a fixed
//! order, so re-running with the same parameters reproduces the files
//! byte for byte. Files are written to a temporary name and renamed, so
//! partial artifacts never appear.
//!
//! Physical quantities in configs and flags are strings with an explicit
//! unit: `"0.128 eV"`, `"1 nm"`, `"1e-10 eV·m"`. A bare number is
//! rejected, as is a unit of the wrong dimension.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::experiments::{
    init_arm_alpha_full_turn, run_beamsplitter_check, run_dj_cases, run_grover_targets,
    run_init_sweep, run_nand, coupler_seed, ExperimentError, OperatingPoint, PAD_LEN,
};
use crate::gatesim::{GroverTarget, OracleCase};
use crate::lattice::{build_device, transverse_mode_energy, GridSpec, RashbaAxis, Segment};
use crate::negf::{transmission_sweep, Contacts, NegfParams};
use crate::scatter::interferometer_probabilities;
use crate::Spin;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("unit error in {field}: {detail}")]
    Unit { field: String, detail: String },
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("{experiment} run failed: {source}")]
    Run {
        experiment: &'static str,
        #[source]
        source: ExperimentError,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

// ---------------------------------------------------------------------------
// quantity strings
// ---------------------------------------------------------------------------

const ENERGY_UNITS: &[(&str, f64)] = &[("eV", 1.0), ("meV", 1e-3)];
const LENGTH_UNITS: &[(&str, f64)] = &[("nm", 1e-9), ("m", 1.0)];
const COUPLING_UNITS: &[(&str, f64)] = &[
    ("eV·m", 1.0),
    ("eV*m", 1.0),
    ("eV·nm", 1e-9),
    ("eV*nm", 1e-9),
];

fn parse_scaled(
    field: &str,
    text: &str,
    units: &[(&str, f64)],
    kind: &str,
) -> Result<f64, CliError> {
    let unit_list = || {
        units
            .iter()
            .map(|(u, _)| format!("\"{u}\""))
            .collect::<Vec<_>>()
            .join(", ")
    };
    let mut it = text.split_whitespace();
    let (Some(num), Some(unit), None) = (it.next(), it.next(), it.next()) else {
        return Err(CliError::Unit {
            field: field.to_string(),
            detail: format!(
                "expected \"<value> <unit>\" with a {kind} unit ({}), got {text:?}",
                unit_list()
            ),
        });
    };
    let value: f64 = num.parse().map_err(|_| CliError::Unit {
        field: field.to_string(),
        detail: format!("{num:?} is not a number"),
    })?;
    let scale = units
        .iter()
        .find(|(u, _)| *u == unit)
        .map(|(_, s)| *s)
        .ok_or_else(|| CliError::Unit {
            field: field.to_string(),
            detail: format!("{unit:?} is not a {kind} unit (expected {})", unit_list()),
        })?;
    Ok(value * scale)
}

/// Flag text wins over config text; absent both, the default applies.
fn quantity(
    field: &str,
    flag: &Option<String>,
    file: &Option<String>,
    default: f64,
    units: &[(&str, f64)],
    kind: &str,
) -> Result<f64, CliError> {
    match flag.as_ref().or(file.as_ref()) {
        Some(text) => parse_scaled(field, text, units, kind),
        None => Ok(default),
    }
}

fn parse_spin(field: &str, text: &str) -> Result<Spin, CliError> {
    match text {
        "up" => Ok(Spin::Up),
        "down" => Ok(Spin::Down),
        other => Err(CliError::Invalid(format!(
            "{field}: expected \"up\" or \"down\", got {other:?}"
        ))),
    }
}

// ---------------------------------------------------------------------------
// raw config file (strict TOML)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    /// Optional safety latch: must equal the subcommand when present.
    experiment: Option<String>,
    device: Option<RawDevice>,
    dj: Option<RawDj>,
    grover: Option<RawGrover>,
    nand: Option<RawNand>,
    init: Option<RawInit>,
    beamsplit: Option<RawBeamsplit>,
    transmission: Option<RawTransmission>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDevice {
    spacing: Option<String>,
    effective_mass: Option<f64>,
    channel_width: Option<usize>,
    wall: Option<String>,
    kinetic_energy: Option<String>,
    band_offset: Option<String>,
    eta: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDj {
    case: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrover {
    target: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNand {
    pseudo_in: Option<usize>,
    spin_in: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInit {
    alpha_min: Option<String>,
    alpha_max: Option<String>,
    steps: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBeamsplit {
    energy: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTransmission {
    kinetic_min: Option<String>,
    kinetic_max: Option<String>,
    steps: Option<usize>,
    device: Option<RawProbe>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProbe {
    kind: Option<String>,
    channel: Option<usize>,
    height: Option<String>,
    length_sites: Option<usize>,
    coupling: Option<String>,
    axis: Option<String>,
}

fn parse_config(path: &Path) -> Result<RawConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    toml::from_str(&text).map_err(|e| CliError::Parse(e.to_string()))
}

// ---------------------------------------------------------------------------
// resolved snapshot
// ---------------------------------------------------------------------------

/// Device parameters with every default materialized, in base units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolvedDevice {
    pub spacing_m: f64,
    pub effective_mass: f64,
    pub channel_width: usize,
    pub wall_ev: f64,
    /// Injection energy above the band offset and first subband edge.
    pub kinetic_energy_ev: f64,
    pub band_offset_ev: f64,
    pub eta_ev: f64,
}

impl ResolvedDevice {
    pub fn operating_point(&self) -> OperatingPoint {
        let grid = GridSpec {
            a_m: self.spacing_m,
            m_eff: self.effective_mass,
        };
        let e1 = transverse_mode_energy(self.channel_width, grid.hopping_ev(), 1);
        OperatingPoint {
            grid,
            channel_width: self.channel_width,
            wall_potential_ev: self.wall_ev,
            band_offset_ev: self.band_offset_ev,
            e_op_ev: self.band_offset_ev + e1 + self.kinetic_energy_ev,
            params: NegfParams {
                eta_ev: self.eta_ev,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ResolvedProbe {
    Pristine,
    Barrier {
        channel: usize,
        height_ev: f64,
        length_sites: usize,
    },
    Coupler {
        height_ev: f64,
        length_sites: usize,
    },
    Rotation {
        channel: usize,
        coupling_evm: f64,
        length_sites: usize,
        axis: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "kebab-case")]
pub enum ResolvedExperiment {
    Dj {
        case: String,
    },
    Grover {
        target: String,
    },
    Nand {
        pseudo_in: usize,
        spin_in: Spin,
    },
    InitSweep {
        alpha_min_evm: f64,
        alpha_max_evm: f64,
        steps: usize,
    },
    Beamsplit {
        energy_ev: f64,
    },
    Transmission {
        kinetic_min_ev: f64,
        kinetic_max_ev: f64,
        steps: usize,
        probe: ResolvedProbe,
    },
}

impl ResolvedExperiment {
    fn name(&self) -> &'static str {
        match self {
            ResolvedExperiment::Dj { .. } => "dj",
            ResolvedExperiment::Grover { .. } => "grover",
            ResolvedExperiment::Nand { .. } => "nand",
            ResolvedExperiment::InitSweep { .. } => "init-sweep",
            ResolvedExperiment::Beamsplit { .. } => "beamsplit",
            ResolvedExperiment::Transmission { .. } => "transmission",
        }
    }
}

/// Complete reproducible description of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedConfig {
    pub device: ResolvedDevice,
    pub run: ResolvedExperiment,
}

/// Written beside the outputs; `resolved` alone reproduces them.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub artifact_version: String,
    pub config_path: Option<String>,
    pub resolved: ResolvedConfig,
    pub outputs: Vec<String>,
}

// ---------------------------------------------------------------------------
// command line
// ---------------------------------------------------------------------------

#[derive(Debug, Parser)]
#[command(
    name = "spinwire",
    version,
    about = "Spin-resolved transport experiments on coupled nanowires",
    after_help = "Set RAYON_NUM_THREADS to cap the worker threads used by the solvers."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
struct CommonArgs {
    /// TOML config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Re-run the resolved snapshot of a previous manifest.json verbatim.
    #[arg(long, conflicts_with = "config")]
    from_manifest: Option<PathBuf>,
    /// Output directory for report.json, the curve CSV and manifest.json.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Grid spacing, e.g. "1 nm".
    #[arg(long)]
    spacing: Option<String>,
    /// Effective mass as a fraction of the electron mass.
    #[arg(long)]
    effective_mass: Option<f64>,
    /// Rows per channel.
    #[arg(long)]
    channel_width: Option<usize>,
    /// Potential of the separating wall, e.g. "1e6 eV".
    #[arg(long)]
    wall: Option<String>,
    /// Injection energy above the first subband edge, e.g. "0.128 eV".
    #[arg(long)]
    kinetic_energy: Option<String>,
    /// Constant background potential, e.g. "0 eV".
    #[arg(long)]
    band_offset: Option<String>,
    /// Solver broadening, e.g. "1e-12 eV".
    #[arg(long)]
    eta: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Classify the four one-bit oracles as constant or balanced.
    Dj {
        #[command(flatten)]
        common: CommonArgs,
        /// Oracle case: f0, f1, f2, f3 or all.
        #[arg(long)]
        case: Option<String>,
    },
    /// Single-iteration search over the four port/spin states.
    Grover {
        #[command(flatten)]
        common: CommonArgs,
        /// Marked state: 0-up, 0-down, 1-up, 1-down or all.
        #[arg(long)]
        target: Option<String>,
    },
    /// Inverting logic element with an up-filtered collector.
    Nand {
        #[command(flatten)]
        common: CommonArgs,
        /// Input port whose outcome is highlighted in the report.
        #[arg(long)]
        pseudo_in: Option<usize>,
        /// Input spin whose outcome is highlighted: up or down.
        #[arg(long)]
        spin_in: Option<String>,
    },
    /// Sweep the interferometer arm coupling against the ideal curves.
    InitSweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Lowest arm coupling, e.g. "0 eV·m".
        #[arg(long)]
        alpha_min: Option<String>,
        /// Highest arm coupling, e.g. "1e-10 eV·m".
        #[arg(long)]
        alpha_max: Option<String>,
        /// Number of sweep points (at least 2).
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Verify the analytic 50/50 splitter design and its embedding.
    Beamsplit {
        #[command(flatten)]
        common: CommonArgs,
        /// Reference energy of the analytic design, e.g. "1 eV".
        #[arg(long)]
        energy: Option<String>,
    },
    /// Raw spin-resolved transmission sweep over a probe device.
    Transmission {
        #[command(flatten)]
        common: CommonArgs,
        /// Lowest kinetic energy, e.g. "0.004 eV".
        #[arg(long)]
        kinetic_min: Option<String>,
        /// Highest kinetic energy, e.g. "0.16 eV".
        #[arg(long)]
        kinetic_max: Option<String>,
        /// Number of energy points (at least 2).
        #[arg(long)]
        steps: Option<usize>,
    },
}

impl Command {
    fn common(&self) -> &CommonArgs {
        match self {
            Command::Dj { common, .. }
            | Command::Grover { common, .. }
            | Command::Nand { common, .. }
            | Command::InitSweep { common, .. }
            | Command::Beamsplit { common, .. }
            | Command::Transmission { common, .. } => common,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Command::Dj { .. } => "dj",
            Command::Grover { .. } => "grover",
            Command::Nand { .. } => "nand",
            Command::InitSweep { .. } => "init-sweep",
            Command::Beamsplit { .. } => "beamsplit",
            Command::Transmission { .. } => "transmission",
        }
    }
}

// ---------------------------------------------------------------------------
// resolution
// ---------------------------------------------------------------------------

fn resolve_device(args: &CommonArgs, raw: &RawDevice) -> Result<ResolvedDevice, CliError> {
    let spacing_m = quantity(
        "device.spacing",
        &args.spacing,
        &raw.spacing,
        1e-9,
        LENGTH_UNITS,
        "length",
    )?;
    let effective_mass = args.effective_mass.or(raw.effective_mass).unwrap_or(0.05);
    let channel_width = args.channel_width.or(raw.channel_width).unwrap_or(10);
    let wall_ev = quantity(
        "device.wall",
        &args.wall,
        &raw.wall,
        1e6,
        ENERGY_UNITS,
        "energy",
    )?;
    let kinetic_energy_ev = quantity(
        "device.kinetic_energy",
        &args.kinetic_energy,
        &raw.kinetic_energy,
        0.128,
        ENERGY_UNITS,
        "energy",
    )?;
    let band_offset_ev = quantity(
        "device.band_offset",
        &args.band_offset,
        &raw.band_offset,
        0.0,
        ENERGY_UNITS,
        "energy",
    )?;
    let eta_ev = quantity(
        "device.eta",
        &args.eta,
        &raw.eta,
        NegfParams::default().eta_ev,
        ENERGY_UNITS,
        "energy",
    )?;

    if !(spacing_m.is_finite() && spacing_m > 0.0) {
        return Err(CliError::Invalid(format!(
            "device.spacing must be positive, got {spacing_m:e} m"
        )));
    }
    if !(effective_mass.is_finite() && effective_mass > 0.0) {
        return Err(CliError::Invalid(format!(
            "device.effective_mass must be positive, got {effective_mass}"
        )));
    }
    if channel_width == 0 {
        return Err(CliError::Invalid(
            "device.channel_width must be at least 1".to_string(),
        ));
    }
    if !wall_ev.is_finite() || !band_offset_ev.is_finite() {
        return Err(CliError::Invalid(
            "device.wall and device.band_offset must be finite".to_string(),
        ));
    }
    if !(eta_ev.is_finite() && eta_ev > 0.0) {
        return Err(CliError::Invalid(format!(
            "device.eta must be positive, got {eta_ev:e} eV"
        )));
    }
    let t = GridSpec {
        a_m: spacing_m,
        m_eff: effective_mass,
    }
    .hopping_ev();
    let window = transverse_mode_energy(channel_width.max(2), t, 2)
        - transverse_mode_energy(channel_width.max(2), t, 1);
    if !(kinetic_energy_ev > 0.0 && kinetic_energy_ev < window) {
        return Err(CliError::Invalid(format!(
            "device.kinetic_energy {kinetic_energy_ev:e} eV leaves the single-mode window (0, {window:e}) eV"
        )));
    }

    Ok(ResolvedDevice {
        spacing_m,
        effective_mass,
        channel_width,
        wall_ev,
        kinetic_energy_ev,
        band_offset_ev,
        eta_ev,
    })
}

fn dj_cases_of(case: &str) -> Result<Vec<OracleCase>, CliError> {
    Ok(match case {
        "all" => OracleCase::ALL.to_vec(),
        "f0" => vec![OracleCase::F0],
        "f1" => vec![OracleCase::F1],
        "f2" => vec![OracleCase::F2],
        "f3" => vec![OracleCase::F3],
        other => {
            return Err(CliError::Invalid(format!(
                "dj.case: expected f0, f1, f2, f3 or all, got {other:?}"
            )))
        }
    })
}

fn grover_targets_of(target: &str) -> Result<Vec<GroverTarget>, CliError> {
    Ok(match target {
        "all" => GroverTarget::ALL.to_vec(),
        "0-up" => vec![GroverTarget {
            pseudo: 0,
            spin: Spin::Up,
        }],
        "0-down" => vec![GroverTarget {
            pseudo: 0,
            spin: Spin::Down,
        }],
        "1-up" => vec![GroverTarget {
            pseudo: 1,
            spin: Spin::Up,
        }],
        "1-down" => vec![GroverTarget {
            pseudo: 1,
            spin: Spin::Down,
        }],
        other => {
            return Err(CliError::Invalid(format!(
                "grover.target: expected 0-up, 0-down, 1-up, 1-down or all, got {other:?}"
            )))
        }
    })
}

fn resolve_probe(raw: &RawProbe, op: &OperatingPoint) -> Result<ResolvedProbe, CliError> {
    let kind = raw.kind.as_deref().unwrap_or("pristine");
    let reject = |field: &str, present: bool| -> Result<(), CliError> {
        if present {
            Err(CliError::Invalid(format!(
                "transmission.device.{field} does not apply to kind {kind:?}"
            )))
        } else {
            Ok(())
        }
    };
    match kind {
        "pristine" => {
            reject("channel", raw.channel.is_some())?;
            reject("height", raw.height.is_some())?;
            reject("length_sites", raw.length_sites.is_some())?;
            reject("coupling", raw.coupling.is_some())?;
            reject("axis", raw.axis.is_some())?;
            Ok(ResolvedProbe::Pristine)
        }
        "barrier" => {
            reject("coupling", raw.coupling.is_some())?;
            reject("axis", raw.axis.is_some())?;
            let channel = raw.channel.unwrap_or(0);
            let height_ev = match &raw.height {
                Some(text) => {
                    parse_scaled("transmission.device.height", text, ENERGY_UNITS, "energy")?
                }
                None => 6e-3,
            };
            let length_sites = raw.length_sites.unwrap_or(12);
            if channel > 1 {
                return Err(CliError::Invalid(
                    "transmission.device.channel must be 0 or 1".to_string(),
                ));
            }
            if length_sites == 0 {
                return Err(CliError::Invalid(
                    "transmission.device.length_sites must be at least 1".to_string(),
                ));
            }
            Ok(ResolvedProbe::Barrier {
                channel,
                height_ev,
                length_sites,
            })
        }
        "coupler" => {
            reject("channel", raw.channel.is_some())?;
            reject("coupling", raw.coupling.is_some())?;
            reject("axis", raw.axis.is_some())?;
            let (seed_v2, seed_len) = coupler_seed(op).map_err(|e| {
                CliError::Invalid(format!("no analytic coupler seed at this energy: {e}"))
            })?;
            let height_ev = match &raw.height {
                Some(text) => {
                    parse_scaled("transmission.device.height", text, ENERGY_UNITS, "energy")?
                }
                None => seed_v2,
            };
            let length_sites = raw.length_sites.unwrap_or(seed_len);
            if length_sites == 0 {
                return Err(CliError::Invalid(
                    "transmission.device.length_sites must be at least 1".to_string(),
                ));
            }
            Ok(ResolvedProbe::Coupler {
                height_ev,
                length_sites,
            })
        }
        "rotation" => {
            reject("height", raw.height.is_some())?;
            let channel = raw.channel.unwrap_or(0);
            let coupling_evm = match &raw.coupling {
                Some(text) => parse_scaled(
                    "transmission.device.coupling",
                    text,
                    COUPLING_UNITS,
                    "spin-orbit coupling",
                )?,
                None => 1e-10,
            };
            let length_sites = raw.length_sites.unwrap_or(25);
            let axis = raw.axis.clone().unwrap_or_else(|| "y".to_string());
            if channel > 1 {
                return Err(CliError::Invalid(
                    "transmission.device.channel must be 0 or 1".to_string(),
                ));
            }
            if length_sites == 0 {
                return Err(CliError::Invalid(
                    "transmission.device.length_sites must be at least 1".to_string(),
                ));
            }
            if axis != "y" && axis != "z" {
                return Err(CliError::Invalid(format!(
                    "transmission.device.axis must be \"y\" or \"z\", got {axis:?}"
                )));
            }
            Ok(ResolvedProbe::Rotation {
                channel,
                coupling_evm,
                length_sites,
                axis,
            })
        }
        other => Err(CliError::Invalid(format!(
            "transmission.device.kind: expected pristine, barrier, coupler or rotation, got {other:?}"
        ))),
    }
}

fn resolve(command: &Command, raw: &RawConfig) -> Result<ResolvedConfig, CliError> {
    if let Some(named) = &raw.experiment {
        if named != command.name() {
            return Err(CliError::Invalid(format!(
                "config is for experiment {named:?} but the subcommand is {:?}",
                command.name()
            )));
        }
    }
    let empty_device = RawDevice::default();
    let device = resolve_device(
        command.common(),
        raw.device.as_ref().unwrap_or(&empty_device),
    )?;
    let op = device.operating_point();

    let run = match command {
        Command::Dj { case, .. } => {
            let raw_dj = raw.dj.clone().unwrap_or_default();
            let case = case.clone().or(raw_dj.case).unwrap_or_else(|| "all".into());
            dj_cases_of(&case)?;
            ResolvedExperiment::Dj { case }
        }
        Command::Grover { target, .. } => {
            let raw_g = raw.grover.clone().unwrap_or_default();
            let target = target
                .clone()
                .or(raw_g.target)
                .unwrap_or_else(|| "all".into());
            grover_targets_of(&target)?;
            ResolvedExperiment::Grover { target }
        }
        Command::Nand {
            pseudo_in, spin_in, ..
        } => {
            let raw_n = raw.nand.clone().unwrap_or_default();
            let pseudo_in = pseudo_in.or(raw_n.pseudo_in).unwrap_or(0);
            if pseudo_in > 1 {
                return Err(CliError::Invalid(
                    "nand.pseudo_in must be 0 or 1".to_string(),
                ));
            }
            let spin_text = spin_in
                .clone()
                .or(raw_n.spin_in)
                .unwrap_or_else(|| "up".into());
            ResolvedExperiment::Nand {
                pseudo_in,
                spin_in: parse_spin("nand.spin_in", &spin_text)?,
            }
        }
        Command::InitSweep {
            alpha_min,
            alpha_max,
            steps,
            ..
        } => {
            let raw_i = raw.init.clone().unwrap_or_default();
            let alpha_min_evm = quantity(
                "init.alpha_min",
                alpha_min,
                &raw_i.alpha_min,
                0.0,
                COUPLING_UNITS,
                "spin-orbit coupling",
            )?;
            let alpha_max_evm = quantity(
                "init.alpha_max",
                alpha_max,
                &raw_i.alpha_max,
                init_arm_alpha_full_turn(&op),
                COUPLING_UNITS,
                "spin-orbit coupling",
            )?;
            let steps = steps.or(raw_i.steps).unwrap_or(17);
            if !(0.0..=5e-10).contains(&alpha_min_evm) || !(0.0..=5e-10).contains(&alpha_max_evm) {
                return Err(CliError::Invalid(
                    "init sweep couplings must lie in [0, 5e-10] eV·m".to_string(),
                ));
            }
            if alpha_min_evm >= alpha_max_evm {
                return Err(CliError::Invalid(format!(
                    "init.alpha_min {alpha_min_evm:e} must lie below init.alpha_max {alpha_max_evm:e}"
                )));
            }
            if steps < 2 {
                return Err(CliError::Invalid(
                    "init.steps must be at least 2".to_string(),
                ));
            }
            ResolvedExperiment::InitSweep {
                alpha_min_evm,
                alpha_max_evm,
                steps,
            }
        }
        Command::Beamsplit { energy, .. } => {
            let raw_b = raw.beamsplit.clone().unwrap_or_default();
            let energy_ev = quantity(
                "beamsplit.energy",
                energy,
                &raw_b.energy,
                1.0,
                ENERGY_UNITS,
                "energy",
            )?;
            if !(energy_ev.is_finite() && energy_ev > 0.0) {
                return Err(CliError::Invalid(format!(
                    "beamsplit.energy must be positive, got {energy_ev:e} eV"
                )));
            }
            ResolvedExperiment::Beamsplit { energy_ev }
        }
        Command::Transmission {
            kinetic_min,
            kinetic_max,
            steps,
            ..
        } => {
            let raw_t = raw.transmission.clone().unwrap_or_default();
            let kinetic_min_ev = quantity(
                "transmission.kinetic_min",
                kinetic_min,
                &raw_t.kinetic_min,
                4e-3,
                ENERGY_UNITS,
                "energy",
            )?;
            let kinetic_max_ev = quantity(
                "transmission.kinetic_max",
                kinetic_max,
                &raw_t.kinetic_max,
                0.16,
                ENERGY_UNITS,
                "energy",
            )?;
            let steps = steps.or(raw_t.steps).unwrap_or(25);
            if !(kinetic_min_ev > 0.0 && kinetic_min_ev < kinetic_max_ev) {
                return Err(CliError::Invalid(format!(
                    "transmission window [{kinetic_min_ev:e}, {kinetic_max_ev:e}] eV must ascend from above zero"
                )));
            }
            if !(2..=10_000).contains(&steps) {
                return Err(CliError::Invalid(
                    "transmission.steps must lie in [2, 10000]".to_string(),
                ));
            }
            let probe = resolve_probe(&raw_t.device.unwrap_or_default(), &op)?;
            ResolvedExperiment::Transmission {
                kinetic_min_ev,
                kinetic_max_ev,
                steps,
                probe,
            }
        }
    };

    Ok(ResolvedConfig { device, run })
}

// ---------------------------------------------------------------------------
// checks and artifacts
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
struct Check {
    name: String,
    pass: bool,
    observed: String,
    requirement: String,
}

fn check_le(name: &str, value: f64, limit: f64) -> Check {
    Check {
        name: name.to_string(),
        pass: value <= limit,
        observed: sci(value),
        requirement: format!("<= {}", sci(limit)),
    }
}

fn check_ge(name: &str, value: f64, limit: f64) -> Check {
    Check {
        name: name.to_string(),
        pass: value >= limit,
        observed: sci(value),
        requirement: format!(">= {}", sci(limit)),
    }
}

fn check_true(name: &str, value: bool) -> Check {
    Check {
        name: name.to_string(),
        pass: value,
        observed: value.to_string(),
        requirement: "true".to_string(),
    }
}

/// Scientific notation with 12 significant digits; the fixed CSV format.
fn sci(x: f64) -> String {
    format!("{x:.11e}")
}

struct Artifacts {
    pass: bool,
    checks: Vec<Check>,
    data: serde_json::Value,
    csv_name: &'static str,
    csv: String,
}

fn to_data<T: Serialize>(value: &T) -> serde_json::Value {
    serde_json::to_value(value).expect("reports serialize")
}

fn run_experiment(resolved: &ResolvedConfig) -> Result<Artifacts, CliError> {
    let op = resolved.device.operating_point();
    match &resolved.run {
        ResolvedExperiment::Dj { case } => {
            let cases = dj_cases_of(case)?;
            let report = run_dj_cases(&op, &cases).map_err(|source| CliError::Run {
                experiment: "dj",
                source,
            })?;
            let mut checks = Vec::new();
            let mut csv = String::from(
                "case,p_port0,p_port1,ideal_p0,ideal_p1,contrast,verdict,correct\n",
            );
            for c in &report.cases {
                checks.push(check_true(
                    &format!("{} classified correctly", c.case.label()),
                    c.verdict_correct,
                ));
                checks.push(check_ge(
                    &format!("{} port contrast", c.case.label()),
                    c.contrast.contrast(),
                    10.0,
                ));
                let verdict = match c.verdict {
                    Some(v) => to_data(&v).as_str().unwrap_or("?").to_string(),
                    None => "withheld".to_string(),
                };
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{},{},{},{}",
                    c.case.label(),
                    sci(c.p_port0),
                    sci(c.p_port1),
                    sci(c.ideal_p0),
                    sci(c.ideal_p1),
                    sci(c.contrast.contrast()),
                    verdict,
                    c.verdict_correct
                );
            }
            Ok(Artifacts {
                pass: report.all_verdicts_correct,
                checks,
                data: to_data(&report),
                csv_name: "dj.csv",
                csv,
            })
        }
        ResolvedExperiment::Grover { target } => {
            let targets = grover_targets_of(target)?;
            let report = run_grover_targets(&op, &targets).map_err(|source| CliError::Run {
                experiment: "grover",
                source,
            })?;
            let mut checks = Vec::new();
            let mut csv = String::from(
                "target_pseudo,target_spin,p0_up,p0_down,p1_up,p1_down,dominant_pseudo,dominant_spin,dominant_share,found\n",
            );
            let mut pass = true;
            for c in &report.cases {
                let name = format!("{}-{}", c.target.pseudo, c.target.spin.label());
                checks.push(check_true(&format!("target {name} found"), c.found_target));
                checks.push(check_ge(
                    &format!("target {name} dominant share"),
                    c.p_target_normalized,
                    0.9,
                ));
                pass &= c.found_target && c.p_target_normalized >= 0.9;
                let m = c.currents.as_array();
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{},{},{},{},{},{}",
                    c.target.pseudo,
                    c.target.spin.label(),
                    sci(m[0]),
                    sci(m[1]),
                    sci(m[2]),
                    sci(m[3]),
                    c.dominant.pseudo,
                    c.dominant.spin.label(),
                    sci(c.p_target_normalized),
                    c.found_target
                );
            }
            Ok(Artifacts {
                pass,
                checks,
                data: to_data(&report),
                csv_name: "grover.csv",
                csv,
            })
        }
        ResolvedExperiment::Nand { pseudo_in, spin_in } => {
            let report = run_nand(&op).map_err(|source| CliError::Run {
                experiment: "nand",
                source,
            })?;
            let mut checks = vec![
                check_true("truth table matches the ideal gate", report.truth_table_correct),
                check_ge(
                    "high/low contrast",
                    report.contrast.contrast(),
                    10.0,
                ),
                check_le("spin-flip leakage", report.spin_flip_leak, 1e-6),
            ];
            let mut csv = String::from("pseudo_in,spin_in,p_high,ideal_high,measured_high\n");
            for i in &report.inputs {
                if i.channel == *pseudo_in && i.spin == *spin_in {
                    checks.push(check_true(
                        &format!(
                            "selected input ({}, {}) classified correctly",
                            pseudo_in,
                            spin_in.label()
                        ),
                        i.measured_high == i.ideal_high,
                    ));
                }
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{}",
                    i.channel,
                    i.spin.label(),
                    sci(i.p_high),
                    i.ideal_high,
                    i.measured_high
                );
            }
            let pass = checks.iter().all(|c| c.pass);
            Ok(Artifacts {
                pass,
                checks,
                data: to_data(&report),
                csv_name: "nand.csv",
                csv,
            })
        }
        ResolvedExperiment::InitSweep {
            alpha_min_evm,
            alpha_max_evm,
            steps,
        } => {
            let report = run_init_sweep(&op, *alpha_min_evm, *alpha_max_evm, *steps).map_err(
                |source| CliError::Run {
                    experiment: "init-sweep",
                    source,
                },
            )?;
            let mut checks = vec![
                check_le("rms deviation from the ideal curves", report.rms_error, 0.05),
                check_le(
                    "transmission sum conservation defect",
                    report.conservation_defect,
                    1e-3,
                ),
                check_le(
                    "half-turn calibration error vs 1e-10 eV·m",
                    report.alpha_pi_rel_error,
                    0.10,
                ),
                check_ge(
                    "spin-flip fraction at the calibrated coupling",
                    report.calibrated_flip_fraction,
                    0.999,
                ),
            ];
            // endpoint verdicts only apply when the sweep spans the full
            // turn from zero coupling
            let first = report.points.first().expect("nonempty sweep");
            let last = report.points.last().expect("nonempty sweep");
            if first.theta_rad < 1e-2 {
                checks.push(check_ge(
                    "port-1 up fraction at zero coupling",
                    report.endpoint_port1_up,
                    0.95,
                ));
            }
            if (last.theta_rad - 2.0 * std::f64::consts::PI).abs() < 1e-2 {
                checks.push(check_ge(
                    "port-0 up fraction at the full-turn coupling",
                    report.endpoint_port0_up,
                    0.95,
                ));
            }
            let mut csv = String::from(
                "alpha_eVm,theta_rad,p0_up,p0_down,p1_up,p1_down,analytic_p0_up,analytic_p0_down,analytic_p1_up,analytic_p1_down\n",
            );
            for p in &report.points {
                let m = p.currents.as_array();
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{},{},{},{},{},{}",
                    sci(p.alpha_evm),
                    sci(p.theta_rad),
                    sci(m[0]),
                    sci(m[1]),
                    sci(m[2]),
                    sci(m[3]),
                    sci(p.analytic[0]),
                    sci(p.analytic[1]),
                    sci(p.analytic[2]),
                    sci(p.analytic[3])
                );
            }
            let pass = checks.iter().all(|c| c.pass);
            Ok(Artifacts {
                pass,
                checks,
                data: to_data(&report),
                csv_name: "init_sweep.csv",
                csv,
            })
        }
        ResolvedExperiment::Beamsplit { energy_ev } => {
            let report =
                run_beamsplitter_check(&op, *energy_ev).map_err(|source| CliError::Run {
                    experiment: "beamsplit",
                    source,
                })?;
            let checks = vec![
                check_le(
                    "deviation from the quarter-turn splitter matrix",
                    report.matrix_deviation,
                    1e-9,
                ),
                check_le("unitarity residual", report.unitarity_residual, 1e-10),
                check_le(
                    "coincidence deviation from 1",
                    (report.coincidence - 1.0).abs(),
                    1e-9,
                ),
                check_le(
                    "interferometer closed-form deviation",
                    report.interferometer_max_deviation,
                    1e-9,
                ),
                check_le(
                    "embedded straight split deviation from 1/2",
                    (report.t_straight - 0.5).abs(),
                    0.05,
                ),
                check_le(
                    "embedded cross split deviation from 1/2",
                    (report.t_cross - 0.5).abs(),
                    0.05,
                ),
            ];
            let mut csv = String::from("theta_rad,p0_up,p0_down,p1_up,p1_down\n");
            for i in 0..41 {
                let theta = 2.0 * std::f64::consts::PI * i as f64 / 40.0;
                let p = interferometer_probabilities(theta, 0, Spin::Up);
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{}",
                    sci(theta),
                    sci(p.p0_up),
                    sci(p.p0_down),
                    sci(p.p1_up),
                    sci(p.p1_down)
                );
            }
            let pass = checks.iter().all(|c| c.pass);
            Ok(Artifacts {
                pass,
                checks,
                data: to_data(&report),
                csv_name: "beamsplit.csv",
                csv,
            })
        }
        ResolvedExperiment::Transmission {
            kinetic_min_ev,
            kinetic_max_ev,
            steps,
            probe,
        } => {
            let inner = match probe {
                ResolvedProbe::Pristine => Vec::new(),
                ResolvedProbe::Barrier {
                    channel,
                    height_ev,
                    length_sites,
                } => vec![Segment::Barrier {
                    channel: *channel,
                    v_ev: *height_ev,
                    len: *length_sites,
                }],
                ResolvedProbe::Coupler {
                    height_ev,
                    length_sites,
                } => vec![Segment::Coupler {
                    v2_ev: *height_ev,
                    len: *length_sites,
                }],
                ResolvedProbe::Rotation {
                    channel,
                    coupling_evm,
                    length_sites,
                    axis,
                } => vec![Segment::Rashba {
                    channel: *channel,
                    alpha_evm: *coupling_evm,
                    axis: if axis == "y" {
                        RashbaAxis::RotateY
                    } else {
                        RashbaAxis::RotateZ
                    },
                    len: *length_sites,
                }],
            };
            let mut segments = vec![Segment::Plain { len: PAD_LEN }];
            segments.extend(inner);
            segments.push(Segment::Plain { len: PAD_LEN });
            let dev = build_device(&op.device_spec(segments)).map_err(|source| CliError::Run {
                experiment: "transmission",
                source: source.into(),
            })?;
            let floor = op.band_offset_ev
                + transverse_mode_energy(op.channel_width, op.hopping_ev(), 1);
            let energies: Vec<f64> = (0..*steps)
                .map(|i| {
                    floor
                        + kinetic_min_ev
                        + (kinetic_max_ev - kinetic_min_ev) * i as f64 / (*steps - 1) as f64
                })
                .collect();
            let table = transmission_sweep(&dev, &Contacts::open(), &energies, &op.params)
                .map_err(|source| CliError::Run {
                    experiment: "transmission",
                    source: source.into(),
                })?;

            let mut csv = String::from("E_eV,in_port,in_spin,out_port,out_spin,T\n");
            let mut t_min = f64::INFINITY;
            let mut row_sum_max = f64::NEG_INFINITY;
            for res in &table {
                for in_port in 0..2 {
                    for in_spin in Spin::BOTH {
                        let mut row_sum = 0.0;
                        for out_port in 0..2 {
                            for out_spin in Spin::BOTH {
                                let t = res.get(in_port, in_spin, out_port, out_spin);
                                t_min = t_min.min(t);
                                row_sum += t;
                                let _ = writeln!(
                                    csv,
                                    "{},{},{},{},{},{}",
                                    sci(res.e_ev),
                                    in_port,
                                    in_spin.label(),
                                    out_port,
                                    out_spin.label(),
                                    sci(t)
                                );
                            }
                        }
                        row_sum_max = row_sum_max.max(row_sum);
                    }
                }
            }
            let checks = vec![
                check_ge("smallest resolved transmission", t_min, -1e-9),
                check_le(
                    "largest per-input transmitted sum",
                    row_sum_max,
                    1.0 + 1e-6,
                ),
            ];
            let pass = checks.iter().all(|c| c.pass);
            #[derive(Serialize)]
            struct TransmissionData {
                energies_ev: Vec<f64>,
                t_min: f64,
                row_sum_max: f64,
            }
            Ok(Artifacts {
                pass,
                checks,
                data: to_data(&TransmissionData {
                    energies_ev: energies,
                    t_min,
                    row_sum_max,
                }),
                csv_name: "transmission.csv",
                csv,
            })
        }
    }
}

// ---------------------------------------------------------------------------
// emission
// ---------------------------------------------------------------------------

fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<(), CliError> {
    let wrap = |source: std::io::Error| CliError::Write {
        path: dir.join(name).display().to_string(),
        source,
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(wrap)?;
    tmp.write_all(bytes).map_err(wrap)?;
    tmp.persist(dir.join(name)).map_err(|e| wrap(e.error))?;
    Ok(())
}

#[derive(Serialize)]
struct Report<'a> {
    experiment: &'static str,
    pass: bool,
    checks: &'a [Check],
    data: &'a serde_json::Value,
}

fn pretty(value: &impl Serialize) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("reports serialize");
    bytes.push(b'\n');
    bytes
}

fn execute(cli: Cli) -> Result<bool, CliError> {
    let common = cli.command.common().clone();
    let resolved = if let Some(manifest_path) = &common.from_manifest {
        let text = std::fs::read_to_string(manifest_path).map_err(|source| CliError::Io {
            path: manifest_path.display().to_string(),
            source,
        })?;
        let manifest: RunManifest =
            serde_json::from_str(&text).map_err(|e| CliError::Parse(e.to_string()))?;
        if manifest.resolved.run.name() != cli.command.name() {
            return Err(CliError::Invalid(format!(
                "manifest is for experiment {:?} but the subcommand is {:?}",
                manifest.resolved.run.name(),
                cli.command.name()
            )));
        }
        manifest.resolved
    } else {
        let raw = match &common.config {
            Some(path) => parse_config(path)?,
            None => RawConfig::default(),
        };
        resolve(&cli.command, &raw)?
    };

    let artifacts = run_experiment(&resolved)?;

    let manifest = RunManifest {
        artifact_version: env!("CARGO_PKG_VERSION").to_string(),
        config_path: common
            .config
            .as_ref()
            .map(|p| p.display().to_string()),
        resolved: resolved.clone(),
        outputs: vec![
            "report.json".to_string(),
            artifacts.csv_name.to_string(),
            "manifest.json".to_string(),
        ],
    };
    let report = Report {
        experiment: resolved.run.name(),
        pass: artifacts.pass,
        checks: &artifacts.checks,
        data: &artifacts.data,
    };

    std::fs::create_dir_all(&common.out).map_err(|source| CliError::Write {
        path: common.out.display().to_string(),
        source,
    })?;
    write_atomic(&common.out, "report.json", &pretty(&report))?;
    write_atomic(&common.out, artifacts.csv_name, artifacts.csv.as_bytes())?;
    write_atomic(&common.out, "manifest.json", &pretty(&manifest))?;

    for c in &artifacts.checks {
        println!(
            "[{}] {}: {} (require {})",
            if c.pass { "pass" } else { "FAIL" },
            c.name,
            c.observed,
            c.requirement
        );
    }
    println!(
        "{}: {} -> {}",
        resolved.run.name(),
        if artifacts.pass { "PASS" } else { "FAIL" },
        common.out.display()
    );
    Ok(artifacts.pass)
}

/// Entry point for the binary; returns the process exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprint!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprint!(": {s}");
                source = s.source();
            }
            eprintln!();
            2
        }
    }
}
