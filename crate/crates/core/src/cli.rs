//! Command-line front end.
//!
//! Tabular output is CSV with `#`-prefixed header comments; the first comment
//! echoes the fully resolved command line so that re-running it reproduces
//! the file byte for byte. `find-area` writes a JSON array.
//!
//! Exit codes: 0 success, 2 usage or validation error, 3 numerical failure,
//! 4 every critical-area row failed, 1 I/O error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::analysis::{critical_area_table, scan_area, scan_phase, ScanResult, DEFAULT_BRACKET, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::hamiltonian::Frame;
use crate::propagator::{propagate, Integrator, PropagateOptions};
use crate::pulse::{evaluate_fields, Chirality, GridSpec, PulseConfig, DEFAULT_STEPS};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_ANALYSIS: i32 = 4;

const DEFAULT_TAUS: [f64; 4] = [0.6, 0.8, 1.0, 1.2];
const DEFAULT_AREA_PI: f64 = 1.234;

#[derive(Debug, Parser)]
#[command(name = "chiral-sta", version, about = "Enantiomer-selective population transfer in a three-state loop")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[command(flatten)]
    pub opts: RunConfig,

    /// JSON object of defaults whose keys are the long flag names
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// P, S and Q pulse shapes and the mixing angle on the time grid
    Pulses,
    /// Populations of |1>, |2>, |3> (final row, or every step with --record)
    Propagate,
    /// P3 of both enantiomers over a range of pulse areas or Q phases
    Scan {
        #[arg(value_enum)]
        kind: ScanKind,
    },
    /// Critical pulse area where the R-handed P3 vanishes, per delay
    FindArea,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScanKind {
    Area,
    Phase,
}

/// Flags shared by every subcommand. The same keys are accepted in the
/// `--config` file; flags given on the command line win.
#[derive(Debug, Clone, Default, PartialEq, Args, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct RunConfig {
    /// Pulse delay tau (same time unit as --width)
    #[arg(long, global = true)]
    pub tau: Option<f64>,
    /// Pulse width T
    #[arg(long, global = true)]
    pub width: Option<f64>,
    /// P and S pulse area in units of pi
    #[arg(long, global = true)]
    pub area: Option<f64>,
    /// Q phase in radians
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub phase: Option<f64>,
    /// Enantiomer handedness: L or R
    #[arg(long, global = true)]
    pub chirality: Option<Chirality>,
    /// Multiplier on the counterdiabatic Q pulse
    #[arg(long, global = true)]
    pub q_scale: Option<f64>,
    /// Time steps per propagation
    #[arg(long, global = true)]
    pub steps: Option<usize>,
    /// Half-width of the symmetric time window (default tau/2 + 5 T)
    #[arg(long, global = true)]
    pub tmax: Option<f64>,
    /// Number of scan points
    #[arg(long, global = true)]
    pub points: Option<usize>,
    /// Lower end of the area scan, units of pi
    #[arg(long, global = true)]
    pub amin: Option<f64>,
    /// Upper end of the area scan, units of pi
    #[arg(long, global = true)]
    pub amax: Option<f64>,
    /// Critical-area search bracket "lo,hi" in units of pi
    #[arg(long, global = true)]
    pub bracket: Option<String>,
    /// Critical-area tolerance in units of pi
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Comma-separated delays tau/T for find-area
    #[arg(long, global = true)]
    pub taus: Option<String>,
    /// Propagation frame: bare or adiabatic
    #[arg(long, global = true)]
    pub frame: Option<Frame>,
    /// Stepper: midpoint or magnus4
    #[arg(long, global = true)]
    pub integrator: Option<Integrator>,
    /// Write every time step instead of the final row
    #[arg(long, global = true)]
    #[serde(default)]
    pub record: bool,
    /// Output file (default: standard output)
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

impl RunConfig {
    /// `self` with every field set in `over` replaced.
    pub fn overlay(self, over: RunConfig) -> RunConfig {
        RunConfig {
            tau: over.tau.or(self.tau),
            width: over.width.or(self.width),
            area: over.area.or(self.area),
            phase: over.phase.or(self.phase),
            chirality: over.chirality.or(self.chirality),
            q_scale: over.q_scale.or(self.q_scale),
            steps: over.steps.or(self.steps),
            tmax: over.tmax.or(self.tmax),
            points: over.points.or(self.points),
            amin: over.amin.or(self.amin),
            amax: over.amax.or(self.amax),
            bracket: over.bracket.or(self.bracket),
            tol: over.tol.or(self.tol),
            taus: over.taus.or(self.taus),
            frame: over.frame.or(self.frame),
            integrator: over.integrator.or(self.integrator),
            record: over.record || self.record,
            out: over.out.or(self.out),
        }
    }

    pub fn from_json_file(path: &Path) -> Result<RunConfig> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text)
            .map_err(|e| Error::invalid(format!("{}: {e}", path.display())))
    }
}

/// A [`RunConfig`] with defaults filled in and every value validated.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub pulse: PulseConfig,
    pub area_pi: f64,
    pub grid: GridSpec,
    pub t_max: f64,
    pub points: Option<usize>,
    pub amin: f64,
    pub amax: f64,
    pub bracket: (f64, f64),
    pub tol: f64,
    pub taus: Vec<f64>,
    pub frame: Frame,
    pub integrator: Integrator,
    pub record: bool,
    pub out: Option<PathBuf>,
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| Error::invalid(format!("not a number: {x:?}")))
        })
        .collect()
}

fn finite(name: &str, x: f64) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::invalid(format!("--{name} must be finite, got {x}")))
    }
}

impl Settings {
    pub fn resolve(rc: &RunConfig) -> Result<Settings> {
        let tau = finite("tau", rc.tau.unwrap_or(1.0))?;
        let width = finite("width", rc.width.unwrap_or(1.0))?;
        let area_pi = finite("area", rc.area.unwrap_or(DEFAULT_AREA_PI))?;
        if area_pi < 0.0 {
            return Err(Error::invalid(format!("--area must be >= 0, got {area_pi}")));
        }
        let base = PulseConfig {
            omega0: 0.0,
            tau,
            width,
            phi: finite("phase", rc.phase.unwrap_or(std::f64::consts::FRAC_PI_2))?,
            chirality: rc.chirality.unwrap_or(Chirality::L),
            q_scale: rc.q_scale.unwrap_or(1.0),
        }
        .validate()?;
        // phase is echoed and applied as given, not folded
        let pulse = PulseConfig {
            phi: rc.phase.unwrap_or(std::f64::consts::FRAC_PI_2),
            ..base.with_area_pi(area_pi)?
        };

        let steps = rc.steps.unwrap_or(DEFAULT_STEPS);
        if steps == 0 {
            return Err(Error::invalid("--steps must be >= 1"));
        }
        if let Some(t) = rc.tmax {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::invalid(format!("--tmax must be > 0, got {t}")));
            }
        }
        let grid = GridSpec {
            n_steps: steps,
            t_max: rc.tmax,
        };
        let t_max = rc.tmax.unwrap_or_else(|| pulse.default_half_window());

        if let Some(n) = rc.points {
            if n < 2 {
                return Err(Error::invalid(format!("--points must be >= 2, got {n}")));
            }
        }
        let amin = finite("amin", rc.amin.unwrap_or(0.1))?;
        let amax = finite("amax", rc.amax.unwrap_or(3.0))?;

        let bracket = match &rc.bracket {
            None => DEFAULT_BRACKET,
            Some(s) => match parse_list(s)?.as_slice() {
                &[lo, hi] if lo.is_finite() && hi.is_finite() && lo < hi => (lo, hi),
                _ => return Err(Error::invalid(format!("--bracket needs lo,hi with lo < hi, got {s:?}"))),
            },
        };
        let tol = rc.tol.unwrap_or(DEFAULT_TOL);
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(Error::invalid(format!("--tol must be > 0, got {tol}")));
        }
        let taus = match &rc.taus {
            None => DEFAULT_TAUS.to_vec(),
            Some(s) => parse_list(s)?,
        };
        if let Some(bad) = taus.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
            return Err(Error::invalid(format!("--taus entries must be > 0, got {bad}")));
        }

        Ok(Settings {
            pulse,
            area_pi,
            grid,
            t_max,
            points: rc.points,
            amin,
            amax,
            bracket,
            tol,
            taus,
            frame: rc.frame.unwrap_or_default(),
            integrator: rc.integrator.unwrap_or_default(),
            record: rc.record,
            out: rc.out.clone(),
        })
    }

    fn time_grid(&self) -> Result<crate::pulse::TimeGrid> {
        crate::pulse::TimeGrid::new(-self.t_max, self.t_max, self.grid.n_steps)
    }

    /// The shared physical flags, in echo order.
    fn pulse_flags(&self) -> String {
        let p = &self.pulse;
        format!(
            "--tau {} --width {} --area {} --phase {} --chirality {} --q-scale {} --steps {} --tmax {}",
            p.tau, p.width, self.area_pi, p.phi, p.chirality, p.q_scale, self.grid.n_steps, self.t_max
        )
    }
}

/// Fixed nine-significant-digit scientific formatting.
pub fn num(x: f64) -> String {
    format!("{x:.8e}")
}

fn csv_row(out: &mut String, values: &[f64]) {
    let cells: Vec<String> = values.iter().map(|&x| num(x)).collect();
    out.push_str(&cells.join(","));
    out.push('\n');
}

fn render_pulses(s: &Settings) -> Result<String> {
    let grid = s.time_grid()?;
    let mut out = format!("# chiral-sta pulses {}\n", s.pulse_flags());
    out.push_str("t,omega_p,omega_s,omega_q,theta\n");
    for t in grid.nodes() {
        let f = evaluate_fields(&s.pulse, t);
        csv_row(&mut out, &[t, f.omega_p, f.omega_s, f.omega_q, f.theta]);
    }
    Ok(out)
}

fn render_propagate(s: &Settings) -> Result<String> {
    let grid = s.time_grid()?;
    let opts = PropagateOptions {
        frame: s.frame,
        integrator: s.integrator,
        record: s.record,
    };
    let res = propagate(&s.pulse, &grid, opts)?;
    let mut out = format!(
        "# chiral-sta propagate {} --frame {} --integrator {}{}\n",
        s.pulse_flags(),
        s.frame,
        s.integrator,
        if s.record { " --record" } else { "" }
    );
    let _ = writeln!(out, "# norm_drift={}", num(res.norm_drift));
    out.push_str("t,p1,p2,p3\n");
    match &res.trajectory {
        Some(rows) => {
            for row in rows {
                let [p1, p2, p3] = row.bare_populations;
                csv_row(&mut out, &[row.t, p1, p2, p3]);
            }
        }
        None => {
            let [p1, p2, p3] = res.populations;
            csv_row(&mut out, &[grid.t_end, p1, p2, p3]);
        }
    }
    Ok(out)
}

fn render_scan(s: &Settings, kind: ScanKind) -> Result<String> {
    let (scan, flags): (ScanResult, String) = match kind {
        ScanKind::Area => {
            let n = s.points.unwrap_or(300);
            (
                scan_area(&s.pulse, s.amin, s.amax, n, &s.grid)?,
                format!("area {} --points {n} --amin {} --amax {}", s.pulse_flags(), s.amin, s.amax),
            )
        }
        ScanKind::Phase => {
            let n = s.points.unwrap_or(360);
            (scan_phase(&s.pulse, n, &s.grid)?, format!("phase {} --points {n}", s.pulse_flags()))
        }
    };
    let mut out = format!("# chiral-sta scan {flags}\n");
    let _ = writeln!(out, "# param={}", scan.parameter.name());
    out.push_str("param,p3_L,p3_R,contrast\n");
    for row in &scan.rows {
        csv_row(&mut out, &[row.value, row.p3_l, row.p3_r, row.contrast]);
    }
    Ok(out)
}

#[derive(Debug, Serialize)]
#[serde(untagged)]
enum AreaEntry {
    Found {
        #[serde(rename = "tau_over_T")]
        tau_over_t: f64,
        area_star_pi: f64,
        p3_min: f64,
    },
    Failed {
        #[serde(rename = "tau_over_T")]
        tau_over_t: f64,
        error: String,
    },
}

/// Returns the JSON document and whether at least one row succeeded.
fn render_find_area(s: &Settings) -> Result<(String, bool)> {
    let table = critical_area_table(&s.taus, s.bracket, &s.grid, s.tol);
    let any_ok = table.iter().any(|r| r.is_ok());
    let entries: Vec<AreaEntry> = s
        .taus
        .iter()
        .zip(table)
        .map(|(&tau, row)| match row {
            Ok(c) => AreaEntry::Found {
                tau_over_t: c.tau_over_t,
                area_star_pi: c.area_star,
                p3_min: c.p3_min,
            },
            Err(e) => AreaEntry::Failed {
                tau_over_t: tau,
                error: e.to_string(),
            },
        })
        .collect();
    let mut doc = serde_json::to_string_pretty(&entries).expect("plain data serializes");
    doc.push('\n');
    Ok((doc, any_ok || s.taus.is_empty()))
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidArgument(_) => EXIT_USAGE,
        Error::NumericalFailure { .. } => EXIT_NUMERICAL,
        Error::Bracket { .. } => EXIT_ANALYSIS,
        Error::Io { .. } => EXIT_IO,
    }
}

fn emit(text: &str, out_path: Option<&Path>, stdout: &mut dyn Write) -> Result<()> {
    match out_path {
        Some(path) => fs::write(path, text).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        }),
        None => stdout.write_all(text.as_bytes()).map_err(|source| Error::Io {
            path: PathBuf::from("<stdout>"),
            source,
        }),
    }
}

fn execute(cli: &Cli, stdout: &mut dyn Write) -> Result<i32> {
    let file_cfg = match &cli.config {
        Some(path) => RunConfig::from_json_file(path)?,
        None => RunConfig::default(),
    };
    let settings = Settings::resolve(&file_cfg.overlay(cli.opts.clone()))?;
    let (text, code) = match cli.command {
        Command::Pulses => (render_pulses(&settings)?, EXIT_OK),
        Command::Propagate => (render_propagate(&settings)?, EXIT_OK),
        Command::Scan { kind } => (render_scan(&settings, kind)?, EXIT_OK),
        Command::FindArea => {
            let (doc, ok) = render_find_area(&settings)?;
            (doc, if ok { EXIT_OK } else { EXIT_ANALYSIS })
        }
    };
    emit(&text, settings.out.as_deref(), stdout)?;
    Ok(code)
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return e.exit_code();
        }
    };
    match execute(&cli, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "chiral-sta: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overlay_prefers_flags() {
        let file = RunConfig {
            tau: Some(0.6),
            area: Some(2.0),
            record: true,
            ..Default::default()
        };
        let flags = RunConfig {
            tau: Some(1.2),
            ..Default::default()
        };
        let merged = file.overlay(flags);
        assert_eq!(merged.tau, Some(1.2));
        assert_eq!(merged.area, Some(2.0));
        assert!(merged.record);
    }

    #[test]
    fn config_file_rejects_unknown_keys() {
        let err = serde_json::from_str::<RunConfig>(r#"{"tau": 1.0, "bogus": 2}"#);
        assert!(err.is_err());
        let ok: RunConfig = serde_json::from_str(r#"{"q-scale": 0.5, "chirality": "R", "frame": "adiabatic"}"#).unwrap();
        assert_eq!(ok.q_scale, Some(0.5));
        assert_eq!(ok.chirality, Some(Chirality::R));
        assert_eq!(ok.frame, Some(Frame::Adiabatic));
    }

    #[test]
    fn defaults_resolve_to_reference_point() {
        let s = Settings::resolve(&RunConfig::default()).unwrap();
        assert_eq!(s.pulse.tau, 1.0);
        assert_eq!(s.t_max, 5.5);
        assert_eq!(s.bracket, DEFAULT_BRACKET);
        assert_eq!(s.taus, DEFAULT_TAUS.to_vec());
        assert!((crate::pulse::pulse_area(&s.pulse) - 1.234 * std::f64::consts::PI).abs() < 1e-14);
    }

    #[test]
    fn validation_failures() {
        let bad = [
            RunConfig { width: Some(0.0), ..Default::default() },
            RunConfig { area: Some(-1.0), ..Default::default() },
            RunConfig { steps: Some(0), ..Default::default() },
            RunConfig { points: Some(1), ..Default::default() },
            RunConfig { bracket: Some("2,1".into()), ..Default::default() },
            RunConfig { bracket: Some("1".into()), ..Default::default() },
            RunConfig { tol: Some(0.0), ..Default::default() },
            RunConfig { taus: Some("1,x".into()), ..Default::default() },
            RunConfig { taus: Some("1,-1".into()), ..Default::default() },
            RunConfig { tmax: Some(-1.0), ..Default::default() },
        ];
        for rc in bad {
            assert!(Settings::resolve(&rc).is_err(), "{rc:?}");
        }
        let empty = Settings::resolve(&RunConfig { taus: Some(String::new()), ..Default::default() }).unwrap();
        assert!(empty.taus.is_empty());
    }

    #[test]
    fn error_exit_codes() {
        assert_eq!(exit_code(&Error::NumericalFailure { drift: 1e-3, limit: 1e-6 }), EXIT_NUMERICAL);
        assert_eq!(exit_code(&Error::invalid("x")), EXIT_USAGE);
        assert_eq!(exit_code(&Error::Bracket { lo: 0.3, hi: 2.5 }), EXIT_ANALYSIS);
    }

    #[test]
    fn number_format() {
        assert_eq!(num(1.0), "1.00000000e0");
        assert_eq!(num(-0.00123456789), "-1.23456789e-3");
    }
}
