//! Annealing envelopes `A(s)` (transverse) and `B(s)` (problem).
//!
//! Units: hbar = 1, energies in rad/ns, times in ns.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::fs::File;
use std::io::Read;
use std::path::Path;

/// Default envelope scale, 1 GHz expressed in rad/ns.
pub const DEFAULT_SCALE: f64 = TAU;

/// Unit of the envelope columns in a schedule file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnergyUnit {
    GHz,
    RadPerNs,
}

impl std::str::FromStr for EnergyUnit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ghz" => Ok(EnergyUnit::GHz),
            "rad_per_ns" | "rad/ns" => Ok(EnergyUnit::RadPerNs),
            other => Err(Error::Schedule(format!("unknown energy unit `{other}`"))),
        }
    }
}

/// One row of a tabulated schedule, envelopes in rad/ns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchedulePoint {
    pub s: f64,
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScheduleKind {
    Linear,
    Tabulated(Vec<SchedulePoint>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnealSchedule {
    kind: ScheduleKind,
    gamma0: f64,
    beta0: f64,
    tau_ns: f64,
}

impl AnnealSchedule {
    /// `A(s) = gamma0 (1 - s)`, `B(s) = beta0 s`.
    pub fn linear(gamma0: f64, beta0: f64, tau_ns: f64) -> Result<Self> {
        if !(gamma0 > 0.0 && gamma0.is_finite()) || !(beta0 > 0.0 && beta0.is_finite()) {
            return Err(Error::Schedule(format!(
                "gamma0 and beta0 must be positive, got {gamma0}, {beta0}"
            )));
        }
        Self::check_tau(tau_ns)?;
        Ok(Self {
            kind: ScheduleKind::Linear,
            gamma0,
            beta0,
            tau_ns,
        })
    }

    /// Piecewise-linear schedule through `table`.
    pub fn tabulated(table: Vec<SchedulePoint>, tau_ns: f64) -> Result<Self> {
        validate_table(&table)?;
        Self::check_tau(tau_ns)?;
        let first = table[0];
        let last = table[table.len() - 1];
        Ok(Self {
            kind: ScheduleKind::Tabulated(table),
            gamma0: first.a,
            beta0: last.b,
            tau_ns,
        })
    }

    fn check_tau(tau_ns: f64) -> Result<()> {
        if !(tau_ns > 0.0 && tau_ns.is_finite()) {
            return Err(Error::Schedule(format!("tau_ns must be positive, got {tau_ns}")));
        }
        Ok(())
    }

    /// Same envelope shape, different total duration.
    pub fn with_tau(&self, tau_ns: f64) -> Result<Self> {
        Self::check_tau(tau_ns)?;
        Ok(Self {
            tau_ns,
            ..self.clone()
        })
    }

    pub fn tau_ns(&self) -> f64 {
        self.tau_ns
    }

    pub fn kind(&self) -> &ScheduleKind {
        &self.kind
    }

    pub fn gamma0(&self) -> f64 {
        self.gamma0
    }

    pub fn beta0(&self) -> f64 {
        self.beta0
    }

    /// `(A(s), B(s))` in rad/ns.
    pub fn evaluate(&self, s: f64) -> Result<(f64, f64)> {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::Schedule(format!("s = {s} outside [0, 1]")));
        }
        Ok(self.eval_unchecked(s))
    }

    pub(crate) fn eval_unchecked(&self, s: f64) -> (f64, f64) {
        match &self.kind {
            ScheduleKind::Linear => (self.gamma0 * (1.0 - s), self.beta0 * s),
            ScheduleKind::Tabulated(table) => interpolate(table, s),
        }
    }

    /// Stable text descriptor, used in provenance files and cache keys.
    pub fn descriptor(&self) -> String {
        match &self.kind {
            ScheduleKind::Linear => format!("linear(gamma0={},beta0={})", self.gamma0, self.beta0),
            ScheduleKind::Tabulated(table) => {
                let body: Vec<String> = table
                    .iter()
                    .map(|p| format!("{}:{}:{}", p.s, p.a, p.b))
                    .collect();
                format!("table({})", body.join(";"))
            }
        }
    }
}

fn interpolate(table: &[SchedulePoint], s: f64) -> (f64, f64) {
    let k = table.partition_point(|p| p.s <= s);
    if k == 0 {
        return (table[0].a, table[0].b);
    }
    if k == table.len() {
        let p = table[k - 1];
        return (p.a, p.b);
    }
    let (lo, hi) = (table[k - 1], table[k]);
    let w = (s - lo.s) / (hi.s - lo.s);
    (lo.a + w * (hi.a - lo.a), lo.b + w * (hi.b - lo.b))
}

fn validate_table(table: &[SchedulePoint]) -> Result<()> {
    if table.len() < 2 {
        return Err(Error::Schedule("schedule table needs at least two rows".into()));
    }
    for p in table {
        if !(p.s.is_finite() && p.a.is_finite() && p.b.is_finite()) {
            return Err(Error::Schedule("non-finite schedule value".into()));
        }
        if p.a < 0.0 || p.b < 0.0 {
            return Err(Error::Schedule(format!("negative envelope at s = {}", p.s)));
        }
    }
    if table.windows(2).any(|w| w[1].s <= w[0].s) {
        return Err(Error::Schedule("s values must be strictly increasing".into()));
    }
    if table[0].s != 0.0 {
        return Err(Error::Schedule("schedule must start at s = 0".into()));
    }
    if table[table.len() - 1].s != 1.0 {
        return Err(Error::Schedule("schedule must end at s = 1".into()));
    }
    if table[0].a <= 0.0 {
        return Err(Error::Schedule("A(0) must be positive".into()));
    }
    if table[table.len() - 1].b <= 0.0 {
        return Err(Error::Schedule("B(1) must be positive".into()));
    }
    Ok(())
}

/// Loads an `s,A,B` schedule file.
pub fn load_schedule_csv(path: impl AsRef<Path>, unit: EnergyUnit) -> Result<Vec<SchedulePoint>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_schedule_csv(file, unit)
}

/// Parses an `s,A,B` schedule. GHz envelopes are converted to rad/ns.
pub fn read_schedule_csv<R: Read>(reader: R, unit: EnergyUnit) -> Result<Vec<SchedulePoint>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers: Vec<String> = rdr
        .headers()?
        .iter()
        .map(|h| h.trim().to_ascii_lowercase())
        .collect();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schedule(format!("missing column `{name}`")))
    };
    let (cs, ca, cb) = (col("s")?, col("a")?, col("b")?);
    let scale = match unit {
        EnergyUnit::GHz => TAU,
        EnergyUnit::RadPerNs => 1.0,
    };
    let mut table = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let get = |c: usize| -> Result<f64> {
            rec.get(c)
                .map(str::trim)
                .ok_or_else(|| Error::parse(r + 2, "short row"))?
                .parse::<f64>()
                .map_err(|e| Error::parse(r + 2, e.to_string()))
        };
        table.push(SchedulePoint {
            s: get(cs)?,
            a: get(ca)? * scale,
            b: get(cb)? * scale,
        });
    }
    validate_table(&table)?;
    Ok(table)
}
