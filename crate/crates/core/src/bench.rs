//! Seeded Monte-Carlo experiments: phase-transition sweeps and RIP sweeps.
//!
//! An [`ExperimentSpec`] is read from flat `key = value` text:
//!
//! ```text
//! algo = head-tail          # exact-iht | head-tail | rank-one | two-step | brute | rip
//! ensemble = dense-gaussian # dense-gaussian | rank-one | factorized
//! n = 30
//! s = 2
//! r = 1
//! m = 0.5x, 1x, 2x          # absolute counts or multiples of ceil(r s ln(e n / s))
//! trials_per_cell = 20
//! noise_level = 0
//! success_tol = 1e-4
//! base_seed = 7
//! ```
//!
//! Optional keys: `p` (factorized sketch size, default `ceil(3 s ln(e n / s)) + 10`),
//! `inner` (`matrices` | `vectors`), `max_iters`, `head` (`square` | `anchor` |
//! `rowcol`), `normalized_step` (two-step low-rank stage), `timing` (record wall time in `ms`; off by default so output is
//! byte-reproducible), `probes` and `rip_mode` (RIP sweeps only).
//!
//! Trial `t` of cell `c` uses the seed `derive_seed(base_seed, [c, t])`; the
//! ground truth, the map and the noise draw from independent sub-seeds of it.
//! Trials run in parallel but records are always returned in `(cell, trial)`
//! order, so the CSV depends only on the [`ExperimentSpec`].

use std::fmt::{self, Write as _};
use std::str::FromStr;
use std::time::Instant;

use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::combin::binomial;
use crate::error::{Error, Result};
use crate::measurements::{estimate_rip, FactorInner, MapSpec, MeasurementKind, MeasurementMap, RipMode};
use crate::projections::DEFAULT_ENUMERATION_CAP;
use crate::recovery::{recover, Algorithm, HeadChoice, RecoveryConfig};
use crate::sampling::{derive_seed, rng_from_seed, sample_structured};
use crate::textio::KeyValues;

pub const CSV_HEADER: &str = "algo,ensemble,n,s,r,m,trial,seed,noise,success,rel_error,iters,ms";
pub const RIP_CSV_HEADER: &str =
    "ensemble,n,s,r,m,rep,seed,probes,mode,delta_lower,alpha_hat,beta_hat,ratio";
pub const DEFAULT_PROBES: usize = 200;

const KNOWN_KEYS: &[&str] = &[
    "algo",
    "ensemble",
    "n",
    "s",
    "r",
    "m",
    "trials_per_cell",
    "noise_level",
    "success_tol",
    "base_seed",
    "p",
    "inner",
    "max_iters",
    "head",
    "normalized_step",
    "timing",
    "probes",
    "rip_mode",
];

/// `ceil(r s ln(e n / s))`, the unit for relative measurement counts.
pub fn complexity_unit(n: usize, s: usize, r: usize) -> usize {
    let (n, s, r) = (n as f64, s as f64, r as f64);
    (r * s * (1.0 + (n / s).ln())).ceil() as usize
}

/// Default sketch size of the factorized ensemble: `ceil(3 s ln(e n / s)) + 10`.
pub fn default_sketch_size(n: usize, s: usize) -> usize {
    let (nf, sf) = (n as f64, s as f64);
    (3.0 * sf * (1.0 + (nf / sf).ln())).ceil() as usize + 10
}

/// A measurement count, absolute or relative to [`complexity_unit`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MeasurementCount {
    Absolute(usize),
    Multiple(f64),
}

impl MeasurementCount {
    pub fn resolve(self, n: usize, s: usize, r: usize) -> usize {
        match self {
            Self::Absolute(m) => m,
            Self::Multiple(k) => (k * complexity_unit(n, s, r) as f64).ceil().max(0.0) as usize,
        }
    }
}

impl FromStr for MeasurementCount {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parameter(format!("invalid measurement count `{s}`"));
        match s.strip_suffix('x') {
            Some(k) => {
                let k: f64 = k.trim().parse().map_err(|_| bad())?;
                if !(k.is_finite() && k >= 0.0) {
                    return Err(bad());
                }
                Ok(Self::Multiple(k))
            }
            None => s.parse().map(Self::Absolute).map_err(|_| bad()),
        }
    }
}

impl fmt::Display for MeasurementCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Absolute(m) => write!(f, "{m}"),
            Self::Multiple(k) => write!(f, "{k}x"),
        }
    }
}

/// What a spec sweeps: a recovery algorithm, or RIP estimation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Task {
    Recovery(Algorithm),
    Rip,
}

impl FromStr for Task {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s == "rip" {
            Ok(Self::Rip)
        } else {
            s.parse().map(Self::Recovery)
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Recovery(a) => a.fmt(f),
            Self::Rip => f.write_str("rip"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    pub algo: Task,
    pub ensemble: MeasurementKind,
    pub n: Vec<usize>,
    pub s: Vec<usize>,
    pub r: Vec<usize>,
    pub m: Vec<MeasurementCount>,
    pub trials_per_cell: usize,
    pub noise_level: f64,
    pub success_tol: f64,
    pub base_seed: u64,
    pub p: Option<usize>,
    pub inner: FactorInner,
    pub max_iters: Option<usize>,
    pub head: HeadChoice,
    pub normalized_step: bool,
    pub timing: bool,
    pub probes: usize,
    pub rip_mode: RipMode,
}

impl ExperimentSpec {
    /// A spec with the given grid and defaults for everything else.
    pub fn new(algo: Task, ensemble: MeasurementKind) -> Self {
        Self {
            algo,
            ensemble,
            n: Vec::new(),
            s: Vec::new(),
            r: Vec::new(),
            m: Vec::new(),
            trials_per_cell: 1,
            noise_level: 0.0,
            success_tol: 1e-4,
            base_seed: 0,
            p: None,
            inner: FactorInner::Matrices,
            max_iters: None,
            head: HeadChoice::Square,
            normalized_step: false,
            timing: false,
            probes: DEFAULT_PROBES,
            rip_mode: RipMode::L2,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let kv = KeyValues::parse(text)?;
        kv.check_known(KNOWN_KEYS)?;
        let required = |key: &str| {
            kv.require(key)?;
            Ok::<_, Error>(())
        };
        for key in ["algo", "ensemble", "n", "s", "r", "m", "trials_per_cell", "base_seed"] {
            required(key)?;
        }
        let list = |key: &str| -> Result<Vec<usize>> { Ok(kv.parse_list(key)?.unwrap_or_default()) };
        let mut spec = Self::new(
            kv.parse_value("algo")?.expect("checked"),
            kv.parse_value("ensemble")?.expect("checked"),
        );
        spec.n = list("n")?;
        spec.s = list("s")?;
        spec.r = list("r")?;
        spec.m = kv.parse_list("m")?.unwrap_or_default();
        spec.trials_per_cell = kv.parse_value("trials_per_cell")?.expect("checked");
        spec.base_seed = kv.parse_value("base_seed")?.expect("checked");
        if let Some(v) = kv.parse_value("noise_level")? {
            spec.noise_level = v;
        }
        if let Some(v) = kv.parse_value("success_tol")? {
            spec.success_tol = v;
        }
        spec.p = kv.parse_value("p")?;
        if let Some(v) = kv.parse_value("inner")? {
            spec.inner = v;
        }
        spec.max_iters = kv.parse_value("max_iters")?;
        if let Some(v) = kv.parse_value("head")? {
            spec.head = v;
        }
        if let Some(v) = kv.parse_value("normalized_step")? {
            spec.normalized_step = v;
        }
        if let Some(v) = kv.parse_value("timing")? {
            spec.timing = v;
        }
        if let Some(v) = kv.parse_value("probes")? {
            spec.probes = v;
        }
        if let Some(v) = kv.parse_value("rip_mode")? {
            spec.rip_mode = v;
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n.is_empty() || self.s.is_empty() || self.r.is_empty() || self.m.is_empty() {
            return Err(Error::Parameter("every grid list (n, s, r, m) must be nonempty".into()));
        }
        if self.trials_per_cell == 0 {
            return Err(Error::Parameter("trials_per_cell must be at least 1".into()));
        }
        if !(self.noise_level >= 0.0 && self.noise_level.is_finite()) {
            return Err(Error::Parameter("noise_level must be a finite value >= 0".into()));
        }
        if !(self.success_tol > 0.0) {
            return Err(Error::Parameter("success_tol must be positive".into()));
        }
        if self.probes == 0 {
            return Err(Error::Parameter("probes must be at least 1".into()));
        }
        if self.max_iters == Some(0) {
            return Err(Error::Parameter("max_iters must be at least 1".into()));
        }
        if let Task::Recovery(a) = self.algo {
            if !a.accepts(self.ensemble) {
                return Err(Error::Parameter(format!(
                    "algorithm {a} cannot run on the {} ensemble",
                    self.ensemble
                )));
            }
        }
        Ok(())
    }

    /// Grid cells in sweep order (`n` outermost, `m` innermost).
    pub fn cells(&self) -> Vec<Cell> {
        let mut cells = Vec::new();
        for &n in &self.n {
            for &s in &self.s {
                for &r in &self.r {
                    for &m in &self.m {
                        cells.push(Cell { n, s, r, m: m.resolve(n, s, r) });
                    }
                }
            }
        }
        cells
    }

    fn config(&self) -> RecoveryConfig {
        let mut cfg = RecoveryConfig {
            head_choice: self.head,
            normalized_step: self.normalized_step,
            ..RecoveryConfig::default()
        };
        if let Some(k) = self.max_iters {
            cfg.max_iters = k;
        }
        cfg
    }

    fn map_spec(&self, cell: &Cell, seed: u64) -> MapSpec {
        match self.ensemble {
            MeasurementKind::Factorized => MapSpec::factorized(
                cell.n,
                cell.m,
                self.p.unwrap_or_else(|| default_sketch_size(cell.n, cell.s)),
                self.inner,
                seed,
            ),
            kind => MapSpec::new(kind, cell.n, cell.m, seed),
        }
    }

    /// `Some(reason)` when the cell cannot be run.
    fn infeasibility(&self, cell: &Cell) -> Option<String> {
        let Cell { n, s, r, m } = *cell;
        if s == 0 || s > n || r == 0 || r > s {
            return Some(format!("need 1 <= r <= s <= n, got n={n} s={s} r={r}"));
        }
        if m == 0 {
            return Some("no measurements".into());
        }
        if matches!(self.algo, Task::Recovery(Algorithm::ExactIht | Algorithm::Brute))
            && binomial(n, s) > DEFAULT_ENUMERATION_CAP
        {
            return Some(format!("C({n},{s}) supports exceed the enumeration cap"));
        }
        if self.algo == Task::Recovery(Algorithm::Brute) && s * (s + 1) / 2 > m {
            return Some(format!("brute force needs m >= {}", s * (s + 1) / 2));
        }
        None
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Cell {
    pub n: usize,
    pub s: usize,
    pub r: usize,
    pub m: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum TrialStatus {
    Done {
        success: bool,
        rel_error: f64,
        iters: usize,
        ms: f64,
    },
    Skipped(String),
}

/// One CSV row. Skipped cells produce a single row with `trial = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialRecord {
    pub algo: Task,
    pub ensemble: MeasurementKind,
    pub cell_index: usize,
    pub cell: Cell,
    pub trial: usize,
    pub seed: u64,
    pub noise: f64,
    pub status: TrialStatus,
}

impl TrialRecord {
    pub fn success(&self) -> Option<bool> {
        match self.status {
            TrialStatus::Done { success, .. } => Some(success),
            TrialStatus::Skipped(_) => None,
        }
    }

    pub fn csv_row(&self) -> String {
        let Cell { n, s, r, m } = self.cell;
        let tail = match &self.status {
            TrialStatus::Done { success, rel_error, iters, ms } => {
                format!("{},{rel_error:e},{iters},{ms}", u8::from(*success))
            }
            TrialStatus::Skipped(_) => "skipped,,,".into(),
        };
        format!(
            "{},{},{n},{s},{r},{m},{},{},{},{tail}",
            self.algo, self.ensemble, self.trial, self.seed, self.noise
        )
    }
}

pub fn records_to_csv(records: &[TrialRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for rec in records {
        out.push_str(&rec.csv_row());
        out.push('\n');
    }
    out
}

/// Success counts of one cell.
#[derive(Clone, Debug, PartialEq)]
pub struct CellSummary {
    pub cell: Cell,
    pub trials: usize,
    pub successes: usize,
    pub skipped: bool,
}

impl CellSummary {
    pub fn success_rate(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.successes as f64 / self.trials as f64
        }
    }
}

/// Recomputes per-cell success counts from records (in cell order).
pub fn aggregate(records: &[TrialRecord]) -> Vec<CellSummary> {
    let mut out: Vec<(usize, CellSummary)> = Vec::new();
    for rec in records {
        if out.last().is_none_or(|(idx, _)| *idx != rec.cell_index) {
            out.push((
                rec.cell_index,
                CellSummary { cell: rec.cell, trials: 0, successes: 0, skipped: false },
            ));
        }
        let summary = &mut out.last_mut().expect("pushed").1;
        match rec.success() {
            Some(ok) => {
                summary.trials += 1;
                summary.successes += usize::from(ok);
            }
            None => summary.skipped = true,
        }
    }
    out.into_iter().map(|(_, s)| s).collect()
}

pub fn summary_to_csv(summaries: &[CellSummary]) -> String {
    let mut out = String::from("n,s,r,m,trials,successes,success_rate\n");
    for c in summaries {
        let Cell { n, s, r, m } = c.cell;
        let _ = writeln!(out, "{n},{s},{r},{m},{},{},{}", c.trials, c.successes, c.success_rate());
    }
    out
}

/// Records of a phase-transition sweep and their aggregate table.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseTransition {
    pub records: Vec<TrialRecord>,
    pub summary: Vec<CellSummary>,
}

impl PhaseTransition {
    pub fn to_csv(&self) -> String {
        records_to_csv(&self.records)
    }
}

fn run_trial(spec: &ExperimentSpec, algo: Algorithm, cell: &Cell, seed: u64) -> Result<TrialStatus> {
    let mut rng = rng_from_seed(derive_seed(seed, &[0]));
    let (x, _) = sample_structured(cell.n, cell.s, cell.r, &mut rng)?;
    let map = MeasurementMap::sample(&spec.map_spec(cell, derive_seed(seed, &[1])))?;
    let mut y = map.apply(&x)?;
    if spec.noise_level > 0.0 {
        let y_norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        let std = spec.noise_level * y_norm / (cell.m as f64).sqrt();
        if std > 0.0 {
            let normal = Normal::new(0.0, std).map_err(|e| Error::Parameter(e.to_string()))?;
            let mut noise_rng = rng_from_seed(derive_seed(seed, &[2]));
            for v in &mut y {
                *v += normal.sample(&mut noise_rng);
            }
        }
    }
    let start = Instant::now();
    let result = recover(algo, &map, &y, cell.s, cell.r, &spec.config())?;
    let ms = if spec.timing {
        (start.elapsed().as_secs_f64() * 1e6).round() / 1e3
    } else {
        0.0
    };
    let rel_error = result.relative_error(&x);
    Ok(TrialStatus::Done {
        success: rel_error <= spec.success_tol,
        rel_error,
        iters: result.iterations,
        ms,
    })
}

/// Runs every `(cell, trial)` of a recovery sweep.
pub fn run_phase_transition(spec: &ExperimentSpec) -> Result<PhaseTransition> {
    spec.validate()?;
    let Task::Recovery(algo) = spec.algo else {
        return Err(Error::Parameter("phase-transition sweeps need a recovery algorithm".into()));
    };
    let cells = spec.cells();
    let mut tasks = Vec::new();
    for (c, cell) in cells.iter().enumerate() {
        match spec.infeasibility(cell) {
            Some(reason) => {
                log::warn!("skipping cell n={} s={} r={} m={}: {reason}", cell.n, cell.s, cell.r, cell.m);
                tasks.push((c, 0, Some(reason)));
            }
            None => tasks.extend((0..spec.trials_per_cell).map(|t| (c, t, None))),
        }
    }
    let records = tasks
        .into_par_iter()
        .map(|(c, t, skipped)| {
            let seed = derive_seed(spec.base_seed, &[c as u64, t as u64]);
            let status = match skipped {
                Some(reason) => TrialStatus::Skipped(reason),
                None => run_trial(spec, algo, &cells[c], seed)?,
            };
            Ok(TrialRecord {
                algo: spec.algo,
                ensemble: spec.ensemble,
                cell_index: c,
                cell: cells[c],
                trial: t,
                seed,
                noise: spec.noise_level,
                status,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let summary = aggregate(&records);
    Ok(PhaseTransition { records, summary })
}

/// One RIP estimate of a sweep; `rep` indexes the independent maps per cell.
#[derive(Clone, Debug, PartialEq)]
pub struct RipRecord {
    pub ensemble: MeasurementKind,
    pub cell: Cell,
    pub rep: usize,
    pub seed: u64,
    pub probes: usize,
    pub mode: RipMode,
    pub delta_lower: f64,
    pub alpha_hat: f64,
    pub beta_hat: f64,
}

impl RipRecord {
    pub fn csv_row(&self) -> String {
        let Cell { n, s, r, m } = self.cell;
        format!(
            "{},{n},{s},{r},{m},{},{},{},{},{:e},{:e},{:e},{:e}",
            self.ensemble,
            self.rep,
            self.seed,
            self.probes,
            self.mode,
            self.delta_lower,
            self.alpha_hat,
            self.beta_hat,
            self.beta_hat / self.alpha_hat
        )
    }
}

pub fn rip_records_to_csv(records: &[RipRecord]) -> String {
    let mut out = String::from(RIP_CSV_HEADER);
    out.push('\n');
    for rec in records {
        out.push_str(&rec.csv_row());
        out.push('\n');
    }
    out
}

/// Estimates RIP constants on `trials_per_cell` independent maps per cell.
/// Map `rep` of cell `c` uses `derive_seed(base_seed, [c, rep])`; its probes
/// use a sub-seed of that.
pub fn run_rip_sweep(spec: &ExperimentSpec) -> Result<Vec<RipRecord>> {
    spec.validate()?;
    let cells: Vec<Cell> = spec
        .cells()
        .into_iter()
        .filter(|cell| match spec.infeasibility(cell) {
            Some(reason) => {
                log::warn!("skipping cell n={} s={} r={} m={}: {reason}", cell.n, cell.s, cell.r, cell.m);
                false
            }
            None => true,
        })
        .collect();
    let tasks: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..spec.trials_per_cell).map(move |t| (c, t)))
        .collect();
    tasks
        .into_par_iter()
        .map(|(c, rep)| {
            let cell = &cells[c];
            let seed = derive_seed(spec.base_seed, &[c as u64, rep as u64]);
            let map = MeasurementMap::sample(&spec.map_spec(cell, derive_seed(seed, &[1])))?;
            let est = estimate_rip(&map, cell.s, cell.r, spec.probes, spec.rip_mode, derive_seed(seed, &[3]))?;
            Ok(RipRecord {
                ensemble: spec.ensemble,
                cell: *cell,
                rep,
                seed,
                probes: spec.probes,
                mode: spec.rip_mode,
                delta_lower: est.delta_lower,
                alpha_hat: est.alpha_hat,
                beta_hat: est.beta_hat,
            })
        })
        .collect()
}

/// Runs the sweep described by `spec` and renders its CSV.
pub fn run_to_csv(spec: &ExperimentSpec) -> Result<String> {
    match spec.algo {
        Task::Rip => Ok(rip_records_to_csv(&run_rip_sweep(spec)?)),
        Task::Recovery(_) => Ok(run_phase_transition(spec)?.to_csv()),
    }
}
