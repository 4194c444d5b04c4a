//! Angular sweeps over the detection angle `θ1`, figure presets, oracle
//! cross-checks and CSV/JSON output.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{couplings, CouplingSet, LatticeGeometry, ModeKind, ModeSpec};
use crate::observables::{self, CavityParams};
use crate::oracle::{self, OracleReport, DEFAULT_CAP};
use crate::states::{self, mean_filling, AtomicState, Table1Report};

/// Relative threshold for the exact oracle check.
pub const CHECK_TOLERANCE: f64 = 1e-8;

/// Monte Carlo deviations must stay within this many standard errors.
pub const MC_SIGMAS: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateKind {
    Mi,
    Sf,
    Coherent,
}

impl std::str::FromStr for StateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mi" => Ok(StateKind::Mi),
            "sf" => Ok(StateKind::Sf),
            "coherent" => Ok(StateKind::Coherent),
            other => Err(Error::config("state", format!("unknown state `{other}` (mi, sf, coherent)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Normalization {
    #[serde(rename = "raw")]
    Raw,
    #[serde(rename = "per-nk")]
    PerNk,
}

impl std::str::FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(Normalization::Raw),
            "per-nk" => Ok(Normalization::PerNk),
            other => Err(Error::config("normalize", format!("unknown normalization `{other}` (raw, per-nk)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn extension(&self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::config("format", format!("unknown format `{other}` (csv, json)"))),
        }
    }
}

/// Which oracle, if any, accompanies the closed-form columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OracleMode {
    None,
    Exact { cap: u64 },
    MonteCarlo { samples: u64, seed: u64 },
}

/// Full description of one angular sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub state: StateKind,
    /// Total (mean) atom number `N`.
    pub atoms: f64,
    /// Site count `M`.
    pub sites: usize,
    /// Illuminated sites `K`; `None` means all `M`.
    pub illuminated: Option<usize>,
    /// First illuminated site `j0` (1-based).
    pub first_site: usize,
    pub period: f64,
    pub probe: ModeKind,
    pub lambda0: f64,
    pub theta0: f64,
    pub detect: ModeKind,
    pub lambda1: f64,
    pub theta1_start: f64,
    pub theta1_stop: f64,
    pub points: usize,
    pub cavity: CavityParams,
    /// Quadrature angle `φ`.
    pub phi: f64,
    pub normalize: Normalization,
    pub oracle: OracleMode,
}

impl Default for ScanConfig {
    /// Superfluid, `N = M = K = 30`, transverse traveling probe, `d = λ/2`,
    /// 361 points over `[−π, π]`.
    fn default() -> Self {
        ScanConfig {
            state: StateKind::Sf,
            atoms: 30.0,
            sites: 30,
            illuminated: None,
            first_site: 1,
            period: 1.0,
            probe: ModeKind::Traveling,
            lambda0: 2.0,
            theta0: 0.0,
            detect: ModeKind::Traveling,
            lambda1: 2.0,
            theta1_start: -PI,
            theta1_stop: PI,
            points: 361,
            cavity: CavityParams::default(),
            phi: 0.0,
            normalize: Normalization::Raw,
            oracle: OracleMode::None,
        }
    }
}

/// Named figure presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Two traveling waves, `N = M = K = 30`, `θ0 = 0`.
    Fig2,
    /// As [`Preset::Fig2`] with half the lattice lit, `K = 15`.
    Fig2c,
    /// Two standing waves, `N = M = K = 30`, `θ0 = 0.1π`.
    Fig3,
}

impl Preset {
    pub fn config(self) -> ScanConfig {
        let base = ScanConfig {
            normalize: Normalization::PerNk,
            ..ScanConfig::default()
        };
        match self {
            Preset::Fig2 => base,
            Preset::Fig2c => ScanConfig {
                illuminated: Some(15),
                ..base
            },
            Preset::Fig3 => ScanConfig {
                probe: ModeKind::Standing,
                detect: ModeKind::Standing,
                theta0: 0.1 * PI,
                ..base
            },
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig2 => "fig2",
            Preset::Fig2c => "fig2c",
            Preset::Fig3 => "fig3",
        }
    }
}

/// Partial configuration, as read from a JSON config file or the command
/// line. Keys mirror the CLI flag names.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanOverrides {
    pub state: Option<StateKind>,
    #[serde(rename = "N")]
    pub atoms: Option<f64>,
    #[serde(rename = "M")]
    pub sites: Option<usize>,
    #[serde(rename = "K")]
    pub illuminated: Option<usize>,
    pub j0: Option<usize>,
    pub d: Option<f64>,
    pub lambda0: Option<f64>,
    pub lambda1: Option<f64>,
    pub theta0: Option<f64>,
    pub probe: Option<ModeKind>,
    pub detect: Option<ModeKind>,
    pub points: Option<usize>,
    pub theta1_start: Option<f64>,
    pub theta1_stop: Option<f64>,
    pub normalize: Option<Normalization>,
    pub g0: Option<f64>,
    pub a0: Option<f64>,
    pub delta_0a: Option<f64>,
    pub delta_01: Option<f64>,
    pub kappa: Option<f64>,
    pub phi: Option<f64>,
    pub oracle: Option<bool>,
    pub mc: Option<u64>,
    pub seed: Option<u64>,
    pub cap: Option<u64>,
    pub out: Option<String>,
    pub format: Option<OutputFormat>,
}

impl ScanOverrides {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Values set in `self` win over those in `base`.
    pub fn layered_over(&self, base: &ScanOverrides) -> ScanOverrides {
        macro_rules! pick {
            ($($f:ident),*) => { ScanOverrides { $($f: self.$f.clone().or_else(|| base.$f.clone()),)* } };
        }
        pick!(
            state, atoms, sites, illuminated, j0, d, lambda0, lambda1, theta0, probe, detect, points,
            theta1_start, theta1_stop, normalize, g0, a0, delta_0a, delta_01, kappa, phi, oracle, mc,
            seed, cap, out, format
        )
    }

    pub fn apply(&self, cfg: &mut ScanConfig) {
        macro_rules! set {
            ($($src:ident => $dst:ident),*) => { $(if let Some(v) = self.$src { cfg.$dst = v; })* };
        }
        set!(
            state => state, atoms => atoms, sites => sites, j0 => first_site, d => period,
            lambda0 => lambda0, lambda1 => lambda1, theta0 => theta0, probe => probe,
            detect => detect, points => points, theta1_start => theta1_start,
            theta1_stop => theta1_stop, normalize => normalize, phi => phi
        );
        if self.illuminated.is_some() {
            cfg.illuminated = self.illuminated;
        }
        let cav = &mut cfg.cavity;
        if let Some(v) = self.g0 {
            cav.g0 = v;
        }
        if let Some(v) = self.a0 {
            cav.a0 = v;
        }
        if let Some(v) = self.delta_0a {
            cav.delta_0a = v;
        }
        if let Some(v) = self.delta_01 {
            cav.delta_01 = v;
        }
        if let Some(v) = self.kappa {
            cav.kappa = v;
        }
        let cap = self.cap.unwrap_or(DEFAULT_CAP);
        if let Some(samples) = self.mc {
            cfg.oracle = OracleMode::MonteCarlo {
                samples,
                seed: self.seed.unwrap_or(0),
            };
        } else if self.oracle == Some(true) || self.cap.is_some() {
            cfg.oracle = OracleMode::Exact { cap };
        }
    }
}

/// Validated building blocks of a scan.
#[derive(Debug, Clone)]
pub struct ScanSetup {
    pub state: AtomicState,
    pub geometry: LatticeGeometry,
    pub probe: ModeSpec,
    pub detect: ModeSpec,
    pub thetas: Vec<f64>,
}

impl ScanSetup {
    /// Mean atom number in the illuminated window, `N_K = n K`.
    pub fn nk(&self) -> f64 {
        mean_filling(&self.state) * self.geometry.illuminated() as f64
    }

    pub fn couplings_at(&self, theta1: f64) -> Result<CouplingSet> {
        let detect = self.detect.with_angle(theta1)?;
        Ok(couplings(&self.geometry, &self.probe, &detect))
    }
}

fn field<T>(name: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Config { .. } => e,
        other => Error::config(name, other.to_string()),
    })
}

impl ScanConfig {
    pub fn build_state(&self) -> Result<AtomicState> {
        let n = self.atoms;
        if !(n.is_finite() && n >= 0.0) {
            return Err(Error::config("N", format!("atom number must be finite and >= 0, got {n}")));
        }
        if self.sites == 0 {
            return Err(Error::config("M", "site count must be at least 1"));
        }
        let integral = |what: &str| {
            if n.fract() != 0.0 || n > u32::MAX as f64 {
                Err(Error::config("N", format!("{what} needs an integer atom number, got {n}")))
            } else {
                Ok(n as u32)
            }
        };
        match self.state {
            StateKind::Mi => {
                let atoms = integral("a Mott insulator")?;
                if atoms as usize % self.sites != 0 {
                    return Err(Error::config(
                        "N",
                        format!("a Mott insulator needs N divisible by M = {}, got {atoms}", self.sites),
                    ));
                }
                field("M", AtomicState::mott((atoms as usize / self.sites) as u32, self.sites))
            }
            StateKind::Sf => field("M", AtomicState::superfluid(integral("a superfluid")?, self.sites)),
            StateKind::Coherent => field("N", AtomicState::coherent(n, self.sites)),
        }
    }

    /// Checks every field and returns the objects a scan works with.
    pub fn setup(&self) -> Result<ScanSetup> {
        let state = self.build_state()?;
        let k = self.illuminated.unwrap_or(self.sites);
        if k == 0 || k > self.sites {
            return Err(Error::config("K", format!("need 1 <= K <= M = {}, got {k}", self.sites)));
        }
        if self.first_site == 0 || self.first_site + k - 1 > self.sites {
            return Err(Error::config(
                "j0",
                format!("window j0 = {} with K = {k} does not fit in M = {}", self.first_site, self.sites),
            ));
        }
        let geometry = field("d", LatticeGeometry::new(self.sites, self.period, k, self.first_site))?;
        let probe = field("lambda0", ModeSpec::new(self.probe, self.lambda0, 0.0))?;
        let probe = field("theta0", probe.with_angle(self.theta0))?;
        let detect = field("lambda1", ModeSpec::new(self.detect, self.lambda1, 0.0))?;
        if self.points < 2 {
            return Err(Error::config("points", format!("need at least 2 grid points, got {}", self.points)));
        }
        for (name, v) in [("theta1_start", self.theta1_start), ("theta1_stop", self.theta1_stop)] {
            if !(-PI..=PI).contains(&v) {
                return Err(Error::config(name, format!("must lie in [-π, π], got {v}")));
            }
        }
        if self.theta1_start >= self.theta1_stop {
            return Err(Error::config("theta1_stop", "grid stop must exceed start"));
        }
        field("cavity", self.cavity.validate())?;
        if !self.phi.is_finite() {
            return Err(Error::config("phi", "must be finite"));
        }
        let setup = ScanSetup {
            state,
            geometry,
            probe,
            detect,
            thetas: theta_grid(self.theta1_start, self.theta1_stop, self.points),
        };
        if self.normalize == Normalization::PerNk && setup.nk() == 0.0 {
            return Err(Error::config("normalize", "per-nk normalization needs N_K > 0"));
        }
        if let OracleMode::MonteCarlo { samples: 0, .. } = self.oracle {
            return Err(Error::config("mc", "at least one sample is required"));
        }
        Ok(setup)
    }
}

/// `points` angles from `start` to `stop` inclusive. The endpoints and, for
/// symmetric grids with odd `points`, the midpoint are hit exactly.
pub fn theta_grid(start: f64, stop: f64, points: usize) -> Vec<f64> {
    let last = (points - 1) as f64;
    (0..points)
        .map(|i| {
            let t = i as f64 / last;
            start * (1.0 - t) + stop * t
        })
        .collect()
}

/// One grid point of a scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputRow {
    pub theta1: f64,
    pub classical_intensity: f64,
    pub dstar_d: f64,
    pub r: f64,
    pub abs_d4: f64,
    pub photon_number: f64,
    pub photon_variance: f64,
    pub quad_variance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dstar_d_per_nk: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_per_nk: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_dstar_d: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_abs_d4: Option<f64>,
}

const BASE_COLUMNS: [&str; 8] = [
    "theta1",
    "classical_intensity",
    "dstar_d",
    "r",
    "abs_d4",
    "photon_number",
    "photon_variance",
    "quad_variance",
];

impl OutputRow {
    fn columns(&self) -> Vec<(&'static str, f64)> {
        let mut cols = vec![
            ("theta1", self.theta1),
            ("classical_intensity", self.classical_intensity),
            ("dstar_d", self.dstar_d),
            ("r", self.r),
            ("abs_d4", self.abs_d4),
            ("photon_number", self.photon_number),
            ("photon_variance", self.photon_variance),
            ("quad_variance", self.quad_variance),
        ];
        let optional = [
            ("dstar_d_per_nk", self.dstar_d_per_nk),
            ("r_per_nk", self.r_per_nk),
            ("oracle_dstar_d", self.oracle_dstar_d),
            ("oracle_r", self.oracle_r),
            ("oracle_abs_d4", self.oracle_abs_d4),
        ];
        cols.extend(optional.into_iter().filter_map(|(name, v)| v.map(|v| (name, v))));
        cols
    }
}

fn run_oracle(mode: OracleMode, state: &AtomicState, c: &CouplingSet) -> Result<Option<OracleReport>> {
    match mode {
        OracleMode::None => Ok(None),
        OracleMode::Exact { cap } => oracle::exact_expectations(state, c, cap).map(Some),
        OracleMode::MonteCarlo { samples, seed } => oracle::mc_expectations(state, c, samples, seed).map(Some),
    }
}

/// Evaluates the sweep. Grid points run in parallel; rows come back in grid
/// order and do not depend on the worker count.
pub fn run_scan(cfg: &ScanConfig) -> Result<Vec<OutputRow>> {
    let setup = cfg.setup()?;
    let nk = setup.nk();
    setup
        .thetas
        .par_iter()
        .map(|&theta1| {
            let c = setup.couplings_at(theta1)?;
            let rep = observables::evaluate(&c, &setup.state, &cfg.cavity, cfg.phi);
            let oracle = run_oracle(cfg.oracle, &setup.state, &c)?;
            let per_nk = cfg.normalize == Normalization::PerNk;
            Ok(OutputRow {
                theta1,
                classical_intensity: rep.classical_intensity,
                dstar_d: rep.dstar_d,
                r: rep.r,
                abs_d4: rep.abs_d4,
                photon_number: rep.photon_number,
                photon_variance: rep.photon_variance,
                quad_variance: rep.quad_variance,
                dstar_d_per_nk: per_nk.then(|| rep.dstar_d / nk),
                r_per_nk: per_nk.then(|| rep.r / nk),
                oracle_dstar_d: oracle.map(|o| o.e_dstar_d),
                oracle_r: oracle.map(|o| o.noise_r()),
                oracle_abs_d4: oracle.map(|o| o.e_abs_d4),
            })
        })
        .collect()
}

/// `|a − b|` relative to the largest of `|a|`, `|b|` and `magnitude`, where
/// `magnitude` is the size of the terms that produced the values. Quantities
/// that vanish by cancellation (the amplitude in a diffraction minimum, `R`
/// at a maximum) are then judged against their natural scale.
pub fn relative_deviation(a: f64, b: f64, magnitude: f64) -> f64 {
    let diff = (a - b).abs();
    if diff == 0.0 {
        return 0.0;
    }
    diff / a.abs().max(b.abs()).max(magnitude).max(f64::MIN_POSITIVE)
}

/// The moments `E[|D'|^p]` of `D' = Σ |A_i| n_i`, an upper bound on the size
/// of every term entering the order-`p` moments of `D`.
pub fn moment_magnitudes(c: &CouplingSet, s: &AtomicState) -> MomentMagnitudes {
    let abs = CouplingSet::from_coefficients(
        c.first_site(),
        c.coefficients().iter().map(|a| Complex64::new(a.norm(), 0.0)).collect(),
    );
    MomentMagnitudes {
        first: observables::expected_d(&abs, s).re,
        second: observables::expected_dstar_d(&abs, s),
        fourth: observables::fourth_moment_abs_d4(&abs, s),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentMagnitudes {
    pub first: f64,
    pub second: f64,
    pub fourth: f64,
}

/// Largest deviation seen for one observable during a check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckEntry {
    pub observable: &'static str,
    pub max_abs: f64,
    pub max_rel: f64,
    /// Largest `|deviation| / stderr` (Monte Carlo only).
    pub max_sigmas: Option<f64>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub method: &'static str,
    pub points: usize,
    pub entries: Vec<CheckEntry>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.passed)
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "oracle check ({}, {} grid points)", self.method, self.points)?;
        for e in &self.entries {
            write!(
                f,
                "  {:<10} max_abs={:.3e} max_rel={:.3e}",
                e.observable, e.max_abs, e.max_rel
            )?;
            if let Some(s) = e.max_sigmas {
                write!(f, " max_sigmas={s:.2}")?;
            }
            writeln!(f, " {}", if e.passed { "PASS" } else { "FAIL" })?;
        }
        write!(f, "{}", if self.passed() { "PASS" } else { "FAIL" })
    }
}

const CHECKED: [&str; 5] = ["E[D]", "E[|D|^2]", "E[|D|^4]", "E[D^2]", "R"];

/// Compares every closed-form moment with the oracle on the scan grid.
///
/// Exact oracles pass when every relative deviation is below
/// [`CHECK_TOLERANCE`]; Monte Carlo oracles pass when every deviation is
/// within [`MC_SIGMAS`] standard errors.
pub fn run_oracle_check(cfg: &ScanConfig) -> Result<CheckReport> {
    let setup = cfg.setup()?;
    let mode = match cfg.oracle {
        OracleMode::None => OracleMode::Exact { cap: DEFAULT_CAP },
        other => other,
    };
    let per_point: Vec<[(f64, f64, Option<f64>); 5]> = setup
        .thetas
        .par_iter()
        .map(|&theta1| {
            let c = setup.couplings_at(theta1)?;
            let s = &setup.state;
            let o = run_oracle(mode, s, &c)?.expect("oracle mode is set");
            let mag = moment_magnitudes(&c, s);
            let closed_d = observables::expected_d(&c, s);
            let closed_dd = observables::expected_dstar_d(&c, s);
            let closed_d4 = observables::fourth_moment_abs_d4(&c, s);
            let closed_d2 = observables::expected_d2(&c, s);
            let closed_r = observables::noise_r(&c, s);
            let se = o.stderr;
            // Zero-variance samples (e.g. a fixed total atom number at a diffraction
            // order) leave only rounding error, which the exact tolerance covers.
            let entry = |dev: f64, rel: f64, err: Option<f64>| {
                let sigmas = err.map(|e| if rel < CHECK_TOLERANCE { 0.0 } else { dev / e });
                (dev, rel, sigmas)
            };
            let dev_d = (closed_d - o.e_d).norm();
            let dev_dd = (closed_dd - o.e_dstar_d).abs();
            let dev_d4 = (closed_d4 - o.e_abs_d4).abs();
            let dev_d2 = (closed_d2 - o.e_d2).norm();
            let dev_r = (closed_r - o.noise_r()).abs();
            Ok([
                entry(
                    dev_d,
                    relative_deviation(0.0, dev_d, mag.first.max(closed_d.norm())),
                    se.map(|e| e.e_d.norm()),
                ),
                entry(
                    dev_dd,
                    relative_deviation(closed_dd, o.e_dstar_d, mag.second),
                    se.map(|e| e.e_dstar_d),
                ),
                entry(
                    dev_d4,
                    relative_deviation(closed_d4, o.e_abs_d4, mag.fourth),
                    se.map(|e| e.e_abs_d4),
                ),
                entry(
                    dev_d2,
                    relative_deviation(0.0, dev_d2, mag.second.max(closed_d2.norm())),
                    se.map(|e| e.e_d2.norm()),
                ),
                entry(
                    dev_r,
                    relative_deviation(closed_r, o.noise_r(), mag.second),
                    // R inherits the error of E[|D|²] and |E[D]|².
                    se.map(|e| e.e_dstar_d + 2.0 * o.e_d.norm() * e.e_d.norm()),
                ),
            ])
        })
        .collect::<Result<_>>()?;

    let monte_carlo = matches!(mode, OracleMode::MonteCarlo { .. });
    let entries = CHECKED
        .iter()
        .enumerate()
        .map(|(i, &name)| {
            let max_abs = per_point.iter().map(|p| p[i].0).fold(0.0, f64::max);
            let max_rel = per_point.iter().map(|p| p[i].1).fold(0.0, f64::max);
            let max_sigmas = monte_carlo.then(|| {
                per_point
                    .iter()
                    .map(|p| p[i].2.unwrap_or(0.0))
                    .fold(0.0, f64::max)
            });
            let passed = match max_sigmas {
                Some(s) => s <= MC_SIGMAS,
                None => max_rel < CHECK_TOLERANCE,
            };
            CheckEntry {
                observable: name,
                max_abs,
                max_rel,
                max_sigmas,
                passed,
            }
        })
        .collect();
    Ok(CheckReport {
        method: if monte_carlo { "monte-carlo" } else { "exact" },
        points: setup.thetas.len(),
        entries,
    })
}

/// Formats a float for CSV: scientific notation with 16 significant digits.
fn csv_number(x: f64) -> String {
    format!("{x:.15e}")
}

/// Writes rows as CSV (header line, LF endings) or as a JSON array of row
/// objects. An empty row set yields a header-only CSV.
pub fn write_rows<W: Write>(rows: &[OutputRow], format: OutputFormat, mut out: W) -> std::io::Result<()> {
    match format {
        OutputFormat::Csv => {
            let header: Vec<&str> = match rows.first() {
                Some(r) => r.columns().iter().map(|(name, _)| *name).collect(),
                None => BASE_COLUMNS.to_vec(),
            };
            writeln!(out, "{}", header.join(","))?;
            for row in rows {
                let line: Vec<String> = row.columns().iter().map(|&(_, v)| csv_number(v)).collect();
                writeln!(out, "{}", line.join(","))?;
            }
            Ok(())
        }
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut out, rows).map_err(std::io::Error::other)?;
            writeln!(out)
        }
    }
}

/// [`write_rows`] to a file, with the path attached to any I/O error.
pub fn emit(rows: &[OutputRow], format: OutputFormat, path: &Path) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = std::fs::File::create(path).map_err(io_err)?;
    let mut writer = std::io::BufWriter::new(file);
    write_rows(rows, format, &mut writer).map_err(io_err)?;
    writer.flush().map_err(io_err)
}

/// Table 1 statistics of the configured state over its `K`-site window.
pub fn table1_for(cfg: &ScanConfig) -> Result<Table1Report> {
    let setup = cfg.setup()?;
    states::table1(&setup.state, setup.geometry.illuminated())
}

pub fn write_table1<W: Write>(report: &Table1Report, format: OutputFormat, mut out: W) -> std::io::Result<()> {
    match format {
        OutputFormat::Csv => {
            writeln!(out, "n2,var_n,nk2,var_nk,nanb,cov")?;
            let values = [report.n2, report.var_n, report.nk2, report.var_nk, report.nanb, report.cov];
            let line: Vec<String> = values.iter().map(|&v| csv_number(v)).collect();
            writeln!(out, "{}", line.join(","))
        }
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut out, report).map_err(std::io::Error::other)?;
            writeln!(out)
        }
    }
}
