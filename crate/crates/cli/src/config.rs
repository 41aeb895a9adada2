//! Experiment configuration: a TOML file plus `--key value` overrides.
//!
//! A config file is a flat table. Keys that belong to one experiment kind
//! may also live in a table named after that kind; those tables are merged
//! over the top level when that kind runs and ignored otherwise, so one file
//! can carry several experiments.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use hbvm_core::missions::{mission_newton, SolveSettings, HALO_GUESS_AMPLITUDES, LYAPUNOV_GUESS_AMPLITUDE};
use hbvm_core::NewtonOptions;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Ivp,
    LyapunovPeriod,
    LyapunovEnergy,
    HaloPeriod,
    HaloEnergy,
    HillTransfer,
    HaloTransfer,
    Continuation,
}

impl Kind {
    pub const ALL: [Kind; 8] = [
        Kind::Ivp,
        Kind::LyapunovPeriod,
        Kind::LyapunovEnergy,
        Kind::HaloPeriod,
        Kind::HaloEnergy,
        Kind::HillTransfer,
        Kind::HaloTransfer,
        Kind::Continuation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kind::Ivp => "ivp",
            Kind::LyapunovPeriod => "lyapunov-period",
            Kind::LyapunovEnergy => "lyapunov-energy",
            Kind::HaloPeriod => "halo-period",
            Kind::HaloEnergy => "halo-energy",
            Kind::HillTransfer => "hill-transfer",
            Kind::HaloTransfer => "halo-transfer",
            Kind::Continuation => "continuation",
        }
    }

    /// Everything except `ivp` goes through the global Newton solver.
    fn uses_newton(self) -> bool {
        self != Kind::Ivp
    }
}

impl FromStr for Kind {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Kind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| err(format!("unknown experiment kind `{s}`")))
    }
}

/// Short spellings accepted on the command line.
fn canonical_key(key: &str) -> String {
    match key {
        "H" | "h-target" | "H-target" => "energy".into(),
        "T" | "T-days" => "period_days".into(),
        _ => key.replace('-', "_"),
    }
}

/// Parses an override value as a TOML value, falling back to a bare string.
fn parse_value(raw: &str) -> Value {
    match format!("v = {raw}").parse::<Table>() {
        Ok(mut t) => t.remove("v").expect("single key"),
        Err(_) => Value::String(raw.to_string()),
    }
}

/// `--key value` pairs; a `--key=value` spelling is accepted too.
pub fn parse_overrides(args: &[String]) -> Result<Vec<(String, Value)>, ConfigError> {
    let mut out = Vec::new();
    let mut it = args.iter();
    while let Some(arg) = it.next() {
        let Some(key) = arg.strip_prefix("--") else {
            return Err(err(format!("expected `--key value`, found `{arg}`")));
        };
        let (key, raw) = match key.split_once('=') {
            Some((k, v)) => (k, v.to_string()),
            None => {
                let v = it.next().ok_or_else(|| err(format!("flag `--{key}` needs a value")))?;
                (key, v.clone())
            }
        };
        out.push((canonical_key(key), parse_value(&raw)));
    }
    Ok(out)
}

/// Merged key/value table for one experiment kind.
pub fn merged_table(kind: Kind, file: Option<&Path>, overrides: &[(String, Value)]) -> Result<Table, ConfigError> {
    let mut table = Table::new();
    if let Some(path) = file {
        let text = std::fs::read_to_string(path).map_err(|e| err(format!("cannot read {}: {e}", path.display())))?;
        let mut parsed: Table = text.parse().map_err(|e| err(format!("{}: {e}", path.display())))?;
        let own = parsed.remove(kind.name());
        for k in Kind::ALL {
            parsed.remove(k.name());
        }
        for (k, v) in parsed {
            table.insert(canonical_key(&k), v);
        }
        match own {
            Some(Value::Table(t)) => table.extend(t.into_iter().map(|(k, v)| (canonical_key(&k), v))),
            Some(_) => return Err(err(format!("`{}` must be a table", kind.name()))),
            None => {}
        }
    }
    for (k, v) in overrides {
        table.insert(k.clone(), v.clone());
    }
    if let Some(v) = table.get("kind") {
        if v.as_str() != Some(kind.name()) {
            return Err(err(format!("config is for kind {v}, not `{}`", kind.name())));
        }
        table.remove("kind");
    }
    Ok(table)
}

fn take(table: &mut Table, keys: &[&str]) -> Table {
    keys.iter().filter_map(|k| table.remove(*k).map(|v| (k.to_string(), v))).collect()
}

fn typed<T: DeserializeOwned>(table: Table, what: &str) -> Result<T, ConfigError> {
    T::deserialize(Value::Table(table)).map_err(|e| err(format!("{what}: {}", e.message())))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Method {
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_s")]
    pub s: usize,
    /// Mesh intervals, or steps for `ivp`.
    #[serde(default = "default_n")]
    pub n: usize,
}

fn default_k() -> usize {
    SolveSettings::default().k
}
fn default_s() -> usize {
    SolveSettings::default().s
}
fn default_n() -> usize {
    SolveSettings::default().n
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    /// CSV trajectory.
    pub trajectory: Option<PathBuf>,
    /// JSON report; printed to standard output when absent.
    pub report: Option<PathBuf>,
    /// Gnuplot script plotting the trajectory CSV.
    pub gnuplot: Option<PathBuf>,
    /// Dense-output points per interval in the CSV.
    #[serde(default = "one")]
    pub oversample: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Newton {
    pub tol: Option<f64>,
    pub max_iters: Option<usize>,
    pub max_halvings: Option<usize>,
    pub max_growth: Option<usize>,
}

impl Newton {
    pub fn options(&self) -> NewtonOptions {
        let d = mission_newton();
        NewtonOptions {
            tol: self.tol.unwrap_or(d.tol),
            max_iters: self.max_iters.unwrap_or(d.max_iters),
            max_halvings: self.max_halvings.unwrap_or(d.max_halvings),
            max_growth: self.max_growth.unwrap_or(d.max_growth),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelName {
    Harmonic,
    Pendulum,
    Quartic,
    HenonHeiles,
    Kepler,
    Hill,
    CrtbpPlanar,
    CrtbpSpatial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ivp {
    pub model: ModelName,
    pub y0: Vec<f64>,
    pub h: f64,
    /// Mass ratio; required by the restricted three-body models only.
    pub mu: Option<f64>,
    pub step_tol: Option<f64>,
    pub step_max_iters: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrbitByPeriod {
    pub mu: f64,
    pub period_days: f64,
    pub guess_amplitude: Option<f64>,
    pub guess_amplitudes: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrbitByEnergy {
    pub mu: f64,
    pub energy: f64,
    /// Converge an orbit of this period first and continue from it.
    pub guess_period_days: Option<f64>,
    pub guess_amplitude: Option<f64>,
    pub guess_amplitudes: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HillTransfer {
    pub tf: f64,
    /// `[q1, q2]` at rest in the rotating frame, or a full state; L2 when absent.
    pub start: Option<Vec<f64>>,
    pub end: Vec<f64>,
    /// Earlier final times solved in order, each warm-starting the next.
    #[serde(default)]
    pub tf_steps: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HaloTransfer {
    pub mu: f64,
    pub from_period_days: Option<f64>,
    pub from_energy: Option<f64>,
    pub to_period_days: Option<f64>,
    pub to_energy: Option<f64>,
    /// Transfer time; the mean of the two periods when absent.
    pub transfer_days: Option<f64>,
    /// Endpoint node indices; the highest node of each orbit when absent.
    pub from_node: Option<usize>,
    pub to_node: Option<usize>,
    pub guess_amplitudes: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Driver {
    LyapunovPeriod,
    LyapunovEnergy,
    HaloPeriod,
    HaloEnergy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Continuation {
    pub mu: f64,
    pub driver: Driver,
    /// Periods in days or energies, by driver.
    pub values: Vec<f64>,
    /// Period of the orbit the sweep starts from.
    pub guess_period_days: Option<f64>,
    pub guess_amplitude: Option<f64>,
    pub guess_amplitudes: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Experiment {
    Ivp(Ivp),
    LyapunovPeriod(OrbitByPeriod),
    LyapunovEnergy(OrbitByEnergy),
    HaloPeriod(OrbitByPeriod),
    HaloEnergy(OrbitByEnergy),
    HillTransfer(HillTransfer),
    HaloTransfer(HaloTransfer),
    Continuation(Continuation),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub kind: Kind,
    pub method: Method,
    pub newton: Newton,
    pub outputs: Outputs,
    pub experiment: Experiment,
    /// The merged table, echoed in the report.
    pub echo: Table,
}

impl RunConfig {
    pub fn settings(&self) -> SolveSettings {
        SolveSettings { k: self.method.k, s: self.method.s, n: self.method.n, newton: self.newton.options() }
    }

    pub fn from_table(kind: Kind, table: Table) -> Result<Self, ConfigError> {
        let echo = table.clone();
        let mut rest = table;
        let method: Method = typed(take(&mut rest, &["k", "s", "n"]), "config")?;
        let outputs: Outputs = typed(take(&mut rest, &["trajectory", "report", "gnuplot", "oversample"]), "config")?;
        let newton: Newton = if kind.uses_newton() {
            typed(take(&mut rest, &["tol", "max_iters", "max_halvings", "max_growth"]), "config")?
        } else {
            Newton { tol: None, max_iters: None, max_halvings: None, max_growth: None }
        };
        let what = format!("{} config", kind.name());
        let experiment = match kind {
            Kind::Ivp => Experiment::Ivp(typed(rest, &what)?),
            Kind::LyapunovPeriod => Experiment::LyapunovPeriod(typed(rest, &what)?),
            Kind::LyapunovEnergy => Experiment::LyapunovEnergy(typed(rest, &what)?),
            Kind::HaloPeriod => Experiment::HaloPeriod(typed(rest, &what)?),
            Kind::HaloEnergy => Experiment::HaloEnergy(typed(rest, &what)?),
            Kind::HillTransfer => Experiment::HillTransfer(typed(rest, &what)?),
            Kind::HaloTransfer => Experiment::HaloTransfer(typed(rest, &what)?),
            Kind::Continuation => Experiment::Continuation(typed(rest, &what)?),
        };
        let cfg = RunConfig { kind, method, newton, outputs, experiment, echo };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let Method { k, s, n } = self.method;
        if s == 0 || k < s {
            return Err(err(format!("need k ≥ s ≥ 1, got k = {k}, s = {s}")));
        }
        let min_n = if self.kind == Kind::Ivp { 1 } else { 2 };
        if n < min_n {
            return Err(err(format!("need n ≥ {min_n}, got {n}")));
        }
        if self.outputs.oversample == 0 {
            return Err(err("oversample must be at least 1"));
        }
        if self.outputs.gnuplot.is_some() && self.outputs.trajectory.is_none() {
            return Err(err("field `gnuplot` needs field `trajectory`"));
        }
        let family_fields = |lyapunov: bool, a: &Option<f64>, b: &Option<[f64; 2]>| match (lyapunov, a, b) {
            (true, _, Some(_)) => Err(err("field `guess_amplitudes` applies to halo orbits; use `guess_amplitude`")),
            (false, Some(_), _) => Err(err("field `guess_amplitude` applies to Lyapunov orbits; use `guess_amplitudes`")),
            _ => Ok(()),
        };
        match &self.experiment {
            Experiment::Ivp(c) => {
                if matches!(c.model, ModelName::CrtbpPlanar | ModelName::CrtbpSpatial) && c.mu.is_none() {
                    return Err(err("ivp config: missing field `mu`"));
                }
            }
            Experiment::LyapunovPeriod(c) => family_fields(true, &c.guess_amplitude, &c.guess_amplitudes)?,
            Experiment::HaloPeriod(c) => family_fields(false, &c.guess_amplitude, &c.guess_amplitudes)?,
            Experiment::LyapunovEnergy(c) => family_fields(true, &c.guess_amplitude, &c.guess_amplitudes)?,
            Experiment::HaloEnergy(c) => family_fields(false, &c.guess_amplitude, &c.guess_amplitudes)?,
            Experiment::HaloTransfer(c) => {
                for (side, p, e) in [("from", c.from_period_days, c.from_energy), ("to", c.to_period_days, c.to_energy)] {
                    match (p, e) {
                        (Some(_), Some(_)) => {
                            return Err(err(format!("give only one of `{side}_period_days` and `{side}_energy`")))
                        }
                        (None, None) => return Err(err(format!("halo-transfer config: missing field `{side}_period_days`"))),
                        _ => {}
                    }
                }
                if c.from_period_days.is_none() && c.to_period_days.is_none() {
                    return Err(err("halo-transfer config: missing field `from_period_days` (one orbit must be fixed by its period)"));
                }
            }
            Experiment::Continuation(c) => {
                let lyapunov = matches!(c.driver, Driver::LyapunovPeriod | Driver::LyapunovEnergy);
                family_fields(lyapunov, &c.guess_amplitude, &c.guess_amplitudes)?;
                if c.values.is_empty() {
                    return Err(err("field `values` is empty"));
                }
            }
            Experiment::HillTransfer(_) => {}
        }
        Ok(())
    }
}

pub fn lyapunov_amplitude(a: Option<f64>) -> f64 {
    a.unwrap_or(LYAPUNOV_GUESS_AMPLITUDE)
}

pub fn halo_amplitudes(a: Option<[f64; 2]>) -> (f64, f64) {
    a.map_or(HALO_GUESS_AMPLITUDES, |[x, z]| (x, z))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn overrides(args: &[&str]) -> Vec<(String, Value)> {
        parse_overrides(&args.iter().map(|s| s.to_string()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn override_values_are_typed() {
        let o = overrides(&["--H", "-1.5001", "--k=6", "--guess-period-days", "200", "--y0", "[1, 0.5]", "--model", "kepler"]);
        assert_eq!(o[0], ("energy".into(), Value::Float(-1.5001)));
        assert_eq!(o[1], ("k".into(), Value::Integer(6)));
        assert_eq!(o[2].0, "guess_period_days");
        assert!(o[3].1.is_array());
        assert_eq!(o[4].1, Value::String("kepler".into()));
    }

    #[test]
    fn dangling_flags_and_bare_words_are_rejected() {
        assert!(parse_overrides(&["--k".to_string()]).is_err());
        assert!(parse_overrides(&["k".to_string(), "3".to_string()]).is_err());
    }

    #[test]
    fn missing_and_unknown_fields_are_named() {
        let table = merged_table(Kind::LyapunovEnergy, None, &overrides(&["--mu", "3e-6"])).unwrap();
        let e = RunConfig::from_table(Kind::LyapunovEnergy, table).unwrap_err();
        assert!(e.0.contains("`energy`"), "{e}");

        let table = merged_table(Kind::LyapunovPeriod, None, &overrides(&["--mu", "3e-6", "--period-days", "200", "--tf", "1"])).unwrap();
        let e = RunConfig::from_table(Kind::LyapunovPeriod, table).unwrap_err();
        assert!(e.0.contains("`tf`"), "{e}");
    }

    #[test]
    fn method_constraints() {
        for (k, s, n) in [(2, 3, 10), (2, 0, 10), (4, 2, 1)] {
            let o = overrides(&["--mu", "3e-6", "--period-days", "200"]);
            let mut table = merged_table(Kind::LyapunovPeriod, None, &o).unwrap();
            table.insert("k".into(), Value::Integer(k));
            table.insert("s".into(), Value::Integer(s));
            table.insert("n".into(), Value::Integer(n));
            assert!(RunConfig::from_table(Kind::LyapunovPeriod, table).is_err());
        }
    }

    #[test]
    fn kind_tables_override_the_top_level() {
        let dir = std::env::temp_dir().join(format!("hbvm-config-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("c.toml");
        std::fs::write(&path, "mu = 3e-6\nn = 50\n[halo-period]\nperiod_days = 180.0\nn = 80\n[lyapunov-period]\nperiod_days = 200.0\n").unwrap();
        let cfg = RunConfig::from_table(Kind::HaloPeriod, merged_table(Kind::HaloPeriod, Some(&path), &[]).unwrap()).unwrap();
        assert_eq!(cfg.method.n, 80);
        let Experiment::HaloPeriod(c) = cfg.experiment else { panic!() };
        assert_eq!(c.period_days, 180.0);
        std::fs::remove_dir_all(dir).unwrap();
    }
}
