//! Batch front-end: TOML run configuration, subcommand dispatch and result files.
//!
//! A run writes three files into the output directory:
//! `result.<run-id>` (JSON record), `trace.<run-id>` (comma-separated table with a header
//! row, when the subcommand has one) and `meta.<run-id>` (versions, timestamp,
//! tolerances). The run id is the subcommand name followed by a hash of the resolved
//! inputs, and the result and trace files depend on nothing else.

use crate::continuation::{continue_orbit, find_escape_epsilon, ContinuationTrace, EpsPath};
use crate::error::{Error, Result};
use crate::family::{Annulus, FoliationParams};
use crate::integrate::{lift_from_section, poincare_orbit, LiftOptions, MapValue};
use crate::melnikov::{
    map_resonant_coefficient, pontryagin_integral, resonant_coefficient, series_coeff_b,
    MelnikovEval, MIN_QUADRATURE_POINTS,
};
use crate::orbits::{
    find_orbits, search_circle, winding_count, OrbitRecord, DEFAULT_WINDING_SAMPLES, RESIDUAL_TOL,
    SEP_TOL,
};
use crate::Complex64;
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

pub const EXIT_OK: i32 = 0;
pub const EXIT_EMPTY: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyConfig {
    #[serde(default = "default_a")]
    pub a: Complex64,
    /// When absent, `i/m + 0.001`, just off the m-th resonance.
    #[serde(default)]
    pub eps: Option<Complex64>,
}

impl Default for FamilyConfig {
    fn default() -> Self {
        Self {
            a: default_a(),
            eps: None,
        }
    }
}

fn default_a() -> Complex64 {
    Complex64::new(0.05, 0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        let d = LiftOptions::default();
        Self {
            rel_tol: d.rel_tol,
            abs_tol: d.abs_tol,
            max_steps: d.max_steps,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputsConfig {
    pub dir: PathBuf,
    pub emit_traces: bool,
}

impl Default for OutputsConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            emit_traces: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub family: FamilyConfig,
    pub m: usize,
    #[serde(rename = "annulus_A0")]
    pub annulus_a0: Annulus,
    pub guard: Annulus,
    pub integrator: IntegratorConfig,
    pub quadrature_points: usize,
    /// Vertices of the continuation path; empty means the segment from `eps` to 0.
    pub path: Vec<Complex64>,
    pub outputs: OutputsConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            family: FamilyConfig::default(),
            m: 2,
            annulus_a0: Annulus::default_a0(),
            guard: Annulus::default_guard(),
            integrator: IntegratorConfig::default(),
            quadrature_points: crate::melnikov::DEFAULT_QUADRATURE_POINTS,
            path: Vec::new(),
            outputs: OutputsConfig::default(),
        }
    }
}

fn config_err(path: &str, message: impl Into<String>) -> Error {
    Error::Config {
        path: path.to_string(),
        message: message.into(),
    }
}

fn check_complex(path: &str, z: Complex64) -> Result<()> {
    if z.re.is_finite() && z.im.is_finite() {
        Ok(())
    } else {
        Err(config_err(path, format!("must be finite, got {z}")))
    }
}

fn check_annulus(path: &str, a: &Annulus) -> Result<()> {
    Annulus::new(a.rho, a.r_outer).map(|_| ()).map_err(|_| {
        config_err(
            path,
            format!(
                "needs 0 < rho < 1 < R, got rho = {}, R = {}",
                a.rho, a.r_outer
            ),
        )
    })
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let de =
            toml::Deserializer::parse(text).map_err(|e| config_err("<document>", e.to_string()))?;
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            config_err(&path, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 1 {
            return Err(config_err("m", "must be at least 1"));
        }
        check_complex("family.a", self.family.a)?;
        if let Some(eps) = self.family.eps {
            check_complex("family.eps", eps)?;
            if eps.norm() > 1.0 {
                return Err(config_err(
                    "family.eps",
                    format!("|eps| = {} exceeds 1", eps.norm()),
                ));
            }
        }
        let it = &self.integrator;
        if !(it.rel_tol > 0.0 && it.rel_tol.is_finite()) {
            return Err(config_err("integrator.rel_tol", "must be positive"));
        }
        if !(it.abs_tol > 0.0 && it.abs_tol.is_finite()) {
            return Err(config_err("integrator.abs_tol", "must be positive"));
        }
        if it.max_steps < 1 {
            return Err(config_err("integrator.max_steps", "must be at least 1"));
        }
        check_annulus("annulus_A0", &self.annulus_a0)?;
        check_annulus("guard", &self.guard)?;
        if !self.annulus_a0.nested_in(&self.guard) {
            return Err(config_err(
                "annulus_A0",
                "must be strictly nested inside guard (guard.rho < rho and R < guard.R)",
            ));
        }
        if self.quadrature_points < MIN_QUADRATURE_POINTS {
            return Err(config_err(
                "quadrature_points",
                format!("must be at least {MIN_QUADRATURE_POINTS}"),
            ));
        }
        if self.path.len() == 1 {
            return Err(config_err("path", "needs at least two vertices"));
        }
        for (i, v) in self.path.iter().enumerate() {
            let p = format!("path[{i}]");
            check_complex(&p, *v)?;
            if v.norm() > 1.0 {
                return Err(config_err(&p, format!("|eps| = {} exceeds 1", v.norm())));
            }
        }
        if let (Some(eps), Some(first)) = (self.family.eps, self.path.first()) {
            if eps != *first {
                return Err(config_err(
                    "path[0]",
                    "must equal family.eps when both are given",
                ));
            }
        }
        if self.outputs.dir.as_os_str().is_empty() {
            return Err(config_err("outputs.dir", "must not be empty"));
        }
        Ok(())
    }

    /// `family.eps`, else the first path vertex, else `i/m + 0.001`.
    pub fn resolved_eps(&self) -> Complex64 {
        self.family
            .eps
            .or_else(|| self.path.first().copied())
            .unwrap_or_else(|| Complex64::new(0.001, 1.0 / self.m as f64))
    }

    pub fn params(&self) -> Result<FoliationParams> {
        FoliationParams::new(self.family.a, self.resolved_eps())
    }

    pub fn lift_options(&self) -> LiftOptions {
        LiftOptions {
            rel_tol: self.integrator.rel_tol,
            abs_tol: self.integrator.abs_tol,
            max_steps: self.integrator.max_steps,
            guard: self.guard,
            ..LiftOptions::default()
        }
    }

    pub fn eps_path(&self) -> Result<EpsPath> {
        let vertices = if self.path.is_empty() {
            vec![self.resolved_eps(), Complex64::new(0.0, 0.0)]
        } else {
            self.path.clone()
        };
        EpsPath::with_default_steps(vertices)
    }
}

fn parse_complex(s: &str) -> std::result::Result<Complex64, String> {
    s.trim()
        .parse::<Complex64>()
        .map_err(|e| format!("`{s}` is not a complex number like 0.1+0.2i: {e:?}"))
}

/// Options shared by every subcommand. Flags override the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// TOML run configuration; built-in defaults are used when omitted.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Period / resonance index.
    #[arg(long)]
    pub m: Option<usize>,
    /// Family constant `a`, e.g. 0.05 or 0.05+0.01i.
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    pub a: Option<Complex64>,
    /// Perturbation parameter `eps`, e.g. 0.001+0.5i.
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    pub eps: Option<Complex64>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Skip the tabular trace file.
    #[arg(long)]
    pub no_traces: bool,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Iterate the return map P from a section point.
    Pmap {
        #[command(flatten)]
        common: CommonArgs,
        /// Section point u with |u| < 1.
        #[arg(long, value_parser = parse_complex, allow_hyphen_values = true, default_value = "0.1")]
        u: Complex64,
        /// Number of iterates.
        #[arg(long, default_value_t = 1)]
        k: usize,
    },
    /// Resonant Melnikov integral at eps = i/m: quadrature against the closed form.
    Melnikov {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_parser = parse_complex, allow_hyphen_values = true, default_value = "0.1")]
        u: Complex64,
    },
    /// Abelian integral of the perturbation over the real oval H = h.
    Pontryagin {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = 2.0)]
        h: f64,
    },
    /// Count m-periodic points inside a circle by the argument principle.
    Winding {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_parser = parse_complex, allow_hyphen_values = true, default_value = "0")]
        center: Complex64,
        /// Circle radius; defaults to the search circle around the predicted orbit.
        #[arg(long)]
        radius: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_WINDING_SAMPLES)]
        samples: usize,
    },
    /// Locate and certify m-periodic orbits of the return map.
    FindOrbit {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Follow the orbits found at the start of the path and report where they escape A0.
    Continue {
        #[command(flatten)]
        common: CommonArgs,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Pmap { .. } => "pmap",
            Command::Melnikov { .. } => "melnikov",
            Command::Pontryagin { .. } => "pontryagin",
            Command::Winding { .. } => "winding",
            Command::FindOrbit { .. } => "find-orbit",
            Command::Continue { .. } => "continue",
        }
    }

    pub fn common(&self) -> &CommonArgs {
        match self {
            Command::Pmap { common, .. }
            | Command::Melnikov { common, .. }
            | Command::Pontryagin { common, .. }
            | Command::Winding { common, .. }
            | Command::FindOrbit { common }
            | Command::Continue { common } => common,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "foliation-lab",
    version,
    about = "Return maps, Melnikov integrals and limit cycles of a perturbed foliation of C²"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Subcommand-specific inputs after defaults are applied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Inputs {
    Pmap {
        u: Complex64,
        k: usize,
    },
    Melnikov {
        u: Complex64,
    },
    Pontryagin {
        h: f64,
    },
    Winding {
        center: Complex64,
        radius: Option<f64>,
        samples: usize,
    },
    FindOrbit,
    Continue,
}

/// Everything a run depends on; its hash is the run id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub inputs: Inputs,
    pub config: RunConfig,
}

impl RunSpec {
    pub fn from_command(cmd: &Command) -> Result<Self> {
        let common = cmd.common();
        let mut config = match &common.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(m) = common.m {
            config.m = m;
        }
        if let Some(a) = common.a {
            config.family.a = a;
        }
        if let Some(eps) = common.eps {
            config.family.eps = Some(eps);
            if let Some(first) = config.path.first_mut() {
                *first = eps;
            }
        }
        if let Some(out) = &common.out {
            config.outputs.dir = out.clone();
        }
        if common.no_traces {
            config.outputs.emit_traces = false;
        }
        config.validate()?;
        let inputs = match cmd {
            Command::Pmap { u, k, .. } => Inputs::Pmap { u: *u, k: *k },
            Command::Melnikov { u, .. } => Inputs::Melnikov { u: *u },
            Command::Pontryagin { h, .. } => Inputs::Pontryagin { h: *h },
            Command::Winding {
                center,
                radius,
                samples,
                ..
            } => Inputs::Winding {
                center: *center,
                radius: *radius,
                samples: *samples,
            },
            Command::FindOrbit { .. } => Inputs::FindOrbit,
            Command::Continue { .. } => Inputs::Continue,
        };
        Ok(Self { inputs, config })
    }

    pub fn command_name(&self) -> &'static str {
        match self.inputs {
            Inputs::Pmap { .. } => "pmap",
            Inputs::Melnikov { .. } => "melnikov",
            Inputs::Pontryagin { .. } => "pontryagin",
            Inputs::Winding { .. } => "winding",
            Inputs::FindOrbit => "find-orbit",
            Inputs::Continue => "continue",
        }
    }

    /// `<subcommand>-<first 16 hex digits of sha256 of the canonical JSON spec>`. The
    /// output directory is left out, so the same inputs get the same id wherever they land.
    pub fn run_id(&self) -> String {
        let mut identity = self.clone();
        identity.config.outputs.dir = PathBuf::new();
        let canonical = serde_json::to_vec(&identity).expect("run spec serializes");
        let digest = Sha256::digest(&canonical);
        let hex: String = digest[..8].iter().map(|b| format!("{b:02x}")).collect();
        format!("{}-{hex}", self.command_name())
    }
}

/// The structured result of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum RunRecord {
    Pmap {
        params: FoliationParams,
        u: Complex64,
        /// `P^j(u)` and `d(P^j)/du` for `j = 1..k`.
        iterates: Vec<MapValue>,
    },
    Melnikov {
        eval: MelnikovEval,
        n_points: usize,
        b_m: f64,
        c_m: f64,
        /// Coefficient of `a u^(m+1)` in `P^m(u) - u` at `eps = i/m`.
        map_coefficient: Complex64,
    },
    Pontryagin {
        params: FoliationParams,
        h: f64,
        n_points: usize,
        value: Complex64,
        closed_form: Complex64,
        abs_error: f64,
    },
    Winding {
        params: FoliationParams,
        m: usize,
        center: Complex64,
        radius: f64,
        samples: usize,
        count: i64,
    },
    FindOrbit {
        params: FoliationParams,
        m: usize,
        search_center: Complex64,
        search_radius: f64,
        winding: Option<i64>,
        orbits: Vec<OrbitRecord>,
        failures: Vec<String>,
    },
    Continue {
        params: FoliationParams,
        m: usize,
        path: Vec<Complex64>,
        annulus_a0: Annulus,
        traces: Vec<ContinuationTrace>,
        escape_eps: Vec<Option<Complex64>>,
        failures: Vec<String>,
    },
}

/// Result of executing a spec, before anything touches the disk.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub record: RunRecord,
    /// Comma-separated table with a header row.
    pub trace: Option<String>,
    pub exit_code: i32,
}

const LIFT_TRACE_HEADER: &str = "orbit,zeta,xi_re,xi_im,h_re,h_im,h_abs";

fn push_lift_rows(
    table: &mut String,
    index: usize,
    u: Complex64,
    turns: usize,
    params: &FoliationParams,
    opts: &LiftOptions,
) {
    let Ok(lift) = lift_from_section(u, turns, params, &opts.with_trace()) else {
        return;
    };
    for p in lift.trace.iter().flatten() {
        let h = p.xi * p.xi;
        let _ = writeln!(
            table,
            "{index},{:?},{:?},{:?},{:?},{:?},{:?}",
            p.zeta.re,
            p.xi.re,
            p.xi.im,
            h.re,
            h.im,
            h.norm()
        );
    }
}

fn execute_pmap(spec: &RunSpec, u: Complex64, k: usize) -> Result<Outcome> {
    let params = spec.config.params()?;
    let opts = spec.config.lift_options();
    let iterates = poincare_orbit(u, k, &params, &opts)?;
    let trace = spec.config.outputs.emit_traces.then(|| {
        let mut t = format!("{LIFT_TRACE_HEADER}\n");
        push_lift_rows(&mut t, 0, u, k, &params, &opts);
        t
    });
    Ok(Outcome {
        record: RunRecord::Pmap {
            params,
            u,
            iterates,
        },
        trace,
        exit_code: EXIT_OK,
    })
}

fn execute_melnikov(spec: &RunSpec, u: Complex64) -> Result<Outcome> {
    let m = spec.config.m;
    let n_points = spec.config.quadrature_points;
    let eval = MelnikovEval::evaluate(m, u, n_points)?;
    Ok(Outcome {
        record: RunRecord::Melnikov {
            eval,
            n_points,
            b_m: series_coeff_b(m),
            c_m: resonant_coefficient(m),
            map_coefficient: map_resonant_coefficient(m),
        },
        trace: None,
        exit_code: EXIT_OK,
    })
}

fn execute_pontryagin(spec: &RunSpec, h: f64) -> Result<Outcome> {
    let params = spec.config.params()?;
    let n_points = spec.config.quadrature_points;
    let value = pontryagin_integral(h, &params, n_points)?;
    let closed_form = Complex64::new(-2.0 * std::f64::consts::PI * h * (h - 1.0), 0.0);
    Ok(Outcome {
        record: RunRecord::Pontryagin {
            params,
            h,
            n_points,
            value,
            closed_form,
            abs_error: (value - closed_form).norm(),
        },
        trace: None,
        exit_code: EXIT_OK,
    })
}

fn execute_winding(
    spec: &RunSpec,
    center: Complex64,
    radius: Option<f64>,
    samples: usize,
) -> Result<Outcome> {
    let params = spec.config.params()?;
    let m = spec.config.m;
    let opts = spec.config.lift_options();
    let radius = match radius {
        Some(r) => r,
        None => search_circle(m, &params)?.1,
    };
    let count = winding_count(center, radius, m, &params, samples, &opts)?;
    Ok(Outcome {
        record: RunRecord::Winding {
            params,
            m,
            center,
            radius,
            samples,
            count,
        },
        trace: None,
        exit_code: EXIT_OK,
    })
}

/// Orbits at the configured parameters, or the failures explaining why there are none.
fn locate(
    m: usize,
    params: &FoliationParams,
    opts: &LiftOptions,
) -> Result<(Vec<OrbitRecord>, Vec<String>)> {
    match find_orbits(m, params, opts) {
        Ok(orbits) => Ok((orbits, Vec::new())),
        Err(Error::EmptyResult { failures, .. }) => Ok((Vec::new(), failures)),
        Err(Error::DegenerateLeadingTerm) => {
            Ok((Vec::new(), vec![Error::DegenerateLeadingTerm.to_string()]))
        }
        Err(e) => Err(e),
    }
}

fn execute_find_orbit(spec: &RunSpec) -> Result<Outcome> {
    let params = spec.config.params()?;
    let m = spec.config.m;
    let opts = spec.config.lift_options();
    let (orbits, mut failures) = locate(m, &params, &opts)?;
    let (search_center, search_radius) = search_circle(m, &params)?;
    let winding = match winding_count(
        search_center,
        search_radius,
        m,
        &params,
        DEFAULT_WINDING_SAMPLES,
        &opts,
    ) {
        Ok(w) => Some(w),
        Err(e) => {
            failures.push(format!("winding count: {e}"));
            None
        }
    };
    let trace = spec.config.outputs.emit_traces.then(|| {
        let mut t = format!("{LIFT_TRACE_HEADER}\n");
        for (i, orbit) in orbits.iter().enumerate() {
            push_lift_rows(&mut t, i, orbit.base_point(), m, &params, &opts);
        }
        t
    });
    let exit_code = if orbits.is_empty() {
        EXIT_EMPTY
    } else {
        EXIT_OK
    };
    Ok(Outcome {
        record: RunRecord::FindOrbit {
            params,
            m,
            search_center,
            search_radius,
            winding,
            orbits,
            failures,
        },
        trace,
        exit_code,
    })
}

const CONTINUATION_TRACE_HEADER: &str = "orbit,s,eps_re,eps_im,u1_re,u1_im,u1_abs,residual,multiplier_re,multiplier_im,h_min,h_max,base_in_a0,loop_in_a0,indeterminate";

fn execute_continue(spec: &RunSpec) -> Result<Outcome> {
    let params = spec.config.params()?;
    let m = spec.config.m;
    let opts = spec.config.lift_options();
    let path = spec.config.eps_path()?;
    let annulus = spec.config.annulus_a0;
    let (orbits, failures) = locate(m, &params, &opts)?;
    let traces = orbits
        .iter()
        .map(|o| continue_orbit(o, &path, &annulus, &opts))
        .collect::<Result<Vec<_>>>()?;
    let escape_eps: Vec<Option<Complex64>> = traces.iter().map(find_escape_epsilon).collect();
    let trace = spec.config.outputs.emit_traces.then(|| {
        let mut t = format!("{CONTINUATION_TRACE_HEADER}\n");
        for (i, tr) in traces.iter().enumerate() {
            for s in &tr.samples {
                let u1 = s.orbit.base_point();
                let _ = writeln!(
                    t,
                    "{i},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{},{},{}",
                    s.s,
                    s.eps.re,
                    s.eps.im,
                    u1.re,
                    u1.im,
                    u1.norm(),
                    s.orbit.residual,
                    s.orbit.multiplier.re,
                    s.orbit.multiplier.im,
                    s.escape.h_extrema.0,
                    s.escape.h_extrema.1,
                    s.escape.base_in_a0,
                    s.escape.loop_in_a0,
                    s.escape.indeterminate
                );
            }
        }
        t
    });
    let exit_code = if escape_eps.iter().any(Option::is_some) {
        EXIT_OK
    } else {
        EXIT_EMPTY
    };
    Ok(Outcome {
        record: RunRecord::Continue {
            params,
            m,
            path: path.vertices.clone(),
            annulus_a0: annulus,
            traces,
            escape_eps,
            failures,
        },
        trace,
        exit_code,
    })
}

/// Run the module operations behind a spec without writing anything.
pub fn execute(spec: &RunSpec) -> Result<Outcome> {
    match spec.inputs {
        Inputs::Pmap { u, k } => execute_pmap(spec, u, k),
        Inputs::Melnikov { u } => execute_melnikov(spec, u),
        Inputs::Pontryagin { h } => execute_pontryagin(spec, h),
        Inputs::Winding {
            center,
            radius,
            samples,
        } => execute_winding(spec, center, radius, samples),
        Inputs::FindOrbit => execute_find_orbit(spec),
        Inputs::Continue => execute_continue(spec),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Meta {
    pub run_id: String,
    pub command: String,
    pub package: String,
    pub version: String,
    pub target_os: String,
    pub target_arch: String,
    pub created_unix_seconds: u64,
    pub spec: RunSpec,
    pub lift_options: LiftOptions,
    pub orbit_residual_tol: f64,
    pub orbit_separation_tol: f64,
    pub exit_code: i32,
}

/// Paths of the files written for one run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunFiles {
    pub result: PathBuf,
    pub trace: Option<PathBuf>,
    pub meta: PathBuf,
}

pub fn record_to_json(record: &RunRecord) -> String {
    let mut s = serde_json::to_string_pretty(record).expect("records serialize");
    s.push('\n');
    s
}

pub fn record_from_json(text: &str) -> Result<RunRecord> {
    serde_json::from_str(text).map_err(|e| Error::Io(format!("malformed result record: {e}")))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn write_outputs(spec: &RunSpec, outcome: &Outcome) -> Result<RunFiles> {
    let dir = &spec.config.outputs.dir;
    std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let run_id = spec.run_id();
    let result = dir.join(format!("result.{run_id}"));
    write_file(&result, &record_to_json(&outcome.record))?;
    let trace = match &outcome.trace {
        Some(table) => {
            let p = dir.join(format!("trace.{run_id}"));
            write_file(&p, table)?;
            Some(p)
        }
        None => None,
    };
    let meta = Meta {
        run_id: run_id.clone(),
        command: spec.command_name().to_string(),
        package: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        target_os: std::env::consts::OS.to_string(),
        target_arch: std::env::consts::ARCH.to_string(),
        created_unix_seconds: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        spec: spec.clone(),
        lift_options: spec.config.lift_options(),
        orbit_residual_tol: RESIDUAL_TOL,
        orbit_separation_tol: SEP_TOL,
        exit_code: outcome.exit_code,
    };
    let meta_path = dir.join(format!("meta.{run_id}"));
    let mut text = serde_json::to_string_pretty(&meta).expect("meta serializes");
    text.push('\n');
    write_file(&meta_path, &text)?;
    Ok(RunFiles {
        result,
        trace,
        meta: meta_path,
    })
}

/// Parse `argv` (program name first), run, write the files and return the exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let outcome = RunSpec::from_command(&cli.command).and_then(|spec| {
        let outcome = execute(&spec)?;
        let files = write_outputs(&spec, &outcome)?;
        Ok((outcome, files))
    });
    match outcome {
        Ok((outcome, files)) => {
            println!("{}", files.result.display());
            outcome.exit_code
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}
