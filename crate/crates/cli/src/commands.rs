use std::fmt::{self, Write as _};
use std::fs;
use std::path::Path;

use fracobs::example::{run_example, ExampleConfig};
use fracobs::hum::{reconstruct as hum_reconstruct, GSpace, Measurements};
use fracobs::regional::{enlarged_observability_test, weak_observability_test, Subregion};
use fracobs::selftest::run_selftest;
use fracobs::sensing::{observe, Convention, ObservationRecord, Sensor, SensorKind, ZoneProfile};
use fracobs::spectral::{propagate, synthesize};

use crate::config::{BuildError, ConfigError, ExperimentConfig, Setup};

/// Tolerance of the weak (single-state) observability verdict.
const WEAK_TOL: f64 = 1e-12;

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Numerical(String),
    Output(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Output(_) => 1,
            Failure::Config(_) => 2,
            Failure::Numerical(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "configuration: {m}"),
            Failure::Numerical(m) => write!(f, "numerical failure: {m}"),
            Failure::Output(m) => write!(f, "output: {m}"),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<BuildError> for Failure {
    fn from(e: BuildError) -> Self {
        if e.source.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Config(e.to_string())
        }
    }
}

impl From<fracobs::Error> for Failure {
    fn from(e: fracobs::Error) -> Self {
        match e {
            fracobs::Error::Io(m) => Failure::Output(m),
            e if e.is_numerical() => Failure::Numerical(e.to_string()),
            e => Failure::Config(e.to_string()),
        }
    }
}

struct Output<'a> {
    dir: &'a Path,
    written: Vec<String>,
}

impl<'a> Output<'a> {
    fn new(dir: &'a Path) -> Result<Self, Failure> {
        fs::create_dir_all(dir).map_err(|e| Failure::Output(format!("{}: {e}", dir.display())))?;
        Ok(Self { dir, written: Vec::new() })
    }

    fn write(&mut self, name: &str, text: &str) -> Result<(), Failure> {
        let path = self.dir.join(name);
        fs::write(&path, text).map_err(|e| Failure::Output(format!("{}: {e}", path.display())))?;
        self.written.push(name.to_string());
        Ok(())
    }

    fn finish(mut self, plot: bool) -> Result<(), Failure> {
        if plot {
            let csvs: Vec<String> = self.written.iter().filter(|n| n.ends_with(".csv")).cloned().collect();
            self.write("plot.py", &plot_script(&csvs))?;
        }
        for name in &self.written {
            println!("wrote {}", self.dir.join(name).display());
        }
        Ok(())
    }
}

/// A matplotlib script drawing every numeric column of each CSV against
/// its first column.
fn plot_script(csvs: &[String]) -> String {
    let mut s = String::from(
        "import csv\nimport os\n\nimport matplotlib.pyplot as plt\n\nHERE = os.path.dirname(os.path.abspath(__file__))\nFILES = [\n",
    );
    for name in csvs {
        let _ = writeln!(s, "    {name:?},");
    }
    s.push_str(
        "]\n\n\
for name in FILES:\n\
\x20   with open(os.path.join(HERE, name)) as fh:\n\
\x20       rows = [r for r in csv.reader(fh) if r and not r[0].startswith(\"#\")]\n\
\x20   header, data = rows[0], rows[1:]\n\
\x20   if not data:\n\
\x20       continue\n\
\x20   cols = list(zip(*[[float(v) for v in r] for r in data]))\n\
\x20   fig, ax = plt.subplots()\n\
\x20   for label, col in zip(header[1:], cols[1:]):\n\
\x20       ax.plot(cols[0], col, label=label)\n\
\x20   ax.set_xlabel(header[0])\n\
\x20   ax.set_title(name)\n\
\x20   ax.legend()\n\
\x20   fig.savefig(os.path.join(HERE, name[:-4] + \".png\"), dpi=120)\n",
    );
    s
}

fn describe_sensor(sensor: &Sensor) -> String {
    match sensor.kind() {
        SensorKind::Pointwise { b } => format!("pointwise b = {b}"),
        SensorKind::Zone { d, profile } => {
            let p = match profile {
                ZoneProfile::Constant(c) => format!("constant {c}"),
                ZoneProfile::Eigenfunction(k) => format!("eigenfunction {k}"),
                ZoneProfile::Samples(g) => format!("{} samples", g.len()),
            };
            format!("zone [{}, {}], profile {p}", d.0, d.1)
        }
    }
}

fn describe_omega(omega: &Subregion) -> String {
    omega.intervals().iter().map(|(a, b)| format!("[{a}, {b}]")).collect::<Vec<_>>().join(" u ")
}

fn header(cfg: &ExperimentConfig, setup: &Setup) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "alpha: {}", cfg.model.alpha);
    let _ = writeln!(s, "horizon: {}", cfg.model.horizon);
    let _ = writeln!(s, "modes: {}", cfg.model.n_modes);
    let _ = writeln!(s, "sensor: {}", describe_sensor(&setup.sensor));
    let _ = writeln!(s, "omega: {}", describe_omega(&setup.omega));
    s
}

pub fn simulate(cfg: &ExperimentConfig, plot: bool) -> Result<(), Failure> {
    let setup = Setup::build(cfg)?;
    let m = &cfg.model;
    let o = &cfg.observation;
    let record = observe(&setup.initial, &setup.sensor, &setup.basis, m.alpha, m.horizon, o.n_times, Convention::Forward)?;
    let noisy = record.with_noise(o.noise, o.seed)?;
    let weak = weak_observability_test(&setup.initial, &setup.sensor, &setup.basis, m.alpha, m.horizon, WEAK_TOL, o.n_times);

    let grid = setup.basis.grid();
    let initial = synthesize(&setup.initial, &setup.basis, &grid)?;
    let mut snapshots = Vec::new();
    for &t in &o.snapshots {
        snapshots.push(synthesize(&propagate(&setup.initial, &setup.basis, t, m.alpha)?, &setup.basis, &grid)?);
    }
    let mut table = String::from("x");
    for t in &o.snapshots {
        let _ = write!(table, ",t={t}");
    }
    table.push('\n');
    for (i, x) in grid.iter().enumerate() {
        let _ = write!(table, "{x:.16e}");
        for snap in &snapshots {
            let _ = write!(table, ",{:.16e}", snap.values[i]);
        }
        table.push('\n');
    }

    let mut summary = header(cfg, &setup);
    let _ = writeln!(summary, "n_times: {}", o.n_times);
    let _ = writeln!(summary, "noise: {}", o.noise);
    let _ = writeln!(summary, "seed: {}", o.seed);
    let peak = record.values.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let _ = writeln!(summary, "max_abs_z_noiseless: {peak:.16e}");
    let _ = writeln!(summary, "y0_norm: {:.16e}", setup.initial.norm());
    match weak {
        Ok(w) => {
            let _ = writeln!(summary, "weakly_observable: {}", w.observable);
        }
        Err(e) => {
            let _ = writeln!(summary, "weakly_observable: n/a ({e})");
        }
    }

    let mut out = Output::new(&cfg.output.dir)?;
    out.write("observation.csv", &noisy.to_csv())?;
    out.write("initial.csv", &initial.to_csv())?;
    out.write("snapshots.csv", &table)?;
    out.write("summary.txt", &summary)?;
    print!("{summary}");
    out.finish(plot)
}

pub fn check(cfg: &ExperimentConfig, plot: bool) -> Result<(), Failure> {
    let setup = Setup::build(cfg)?;
    let m = &cfg.model;
    let opts = cfg.enlarged_options();
    let report =
        enlarged_observability_test(&setup.sensor, &setup.omega, &setup.band, m.alpha, m.horizon, &setup.basis, &opts)?;
    let mut text = header(cfg, &setup);
    text.push_str(&report.to_text());
    let mut out = Output::new(&cfg.output.dir)?;
    out.write("report.txt", &text)?;
    if let Some(w) = &report.witness {
        out.write("witness.csv", &w.to_csv())?;
    }
    print!("{text}");
    out.finish(plot)
}

pub fn reconstruct(cfg: &ExperimentConfig, plot: bool) -> Result<(), Failure> {
    let setup = Setup::build(cfg)?;
    let m = &cfg.model;
    let gspace = GSpace::new(setup.omega.clone(), setup.band.clone(), cfg.reconstruction.trial_dim, &setup.basis)?;
    let external = match &cfg.reconstruction.record {
        Some(path) => Some(ObservationRecord::read_csv(path).map_err(|e| Failure::Config(format!("reconstruction.record: {e}")))?),
        None => None,
    };
    let source = match &external {
        Some(r) => Measurements::Record(r),
        None => Measurements::Simulate { y0: &setup.initial, noise_std: cfg.observation.noise, seed: cfg.observation.seed },
    };
    let r = hum_reconstruct(
        source,
        &setup.sensor,
        &gspace,
        &setup.basis,
        m.alpha,
        m.horizon,
        cfg.reconstruction.eps,
        &cfg.time_quadrature(),
    )?;

    let mut summary = header(cfg, &setup);
    let _ = writeln!(summary, "trial_dim: {}", cfg.reconstruction.trial_dim);
    let _ = writeln!(summary, "source: {}", if external.is_some() { "record" } else { "simulated" });
    if external.is_none() {
        let _ = writeln!(summary, "noise: {}", cfg.observation.noise);
        let _ = writeln!(summary, "seed: {}", cfg.observation.seed);
    }
    if let Some(e) = r.relative_error {
        let _ = writeln!(summary, "relative_error: {e:.16e}");
    }
    let _ = writeln!(summary, "residual: {:.16e}", r.residual);
    let _ = writeln!(summary, "in_band: {}", r.in_band);
    let _ = writeln!(summary, "regularization: {:.16e}", r.regularization_used);
    let eig = &r.gramian_eigenvalues;
    if let (Some(lo), Some(hi)) = (eig.first(), eig.last()) {
        let _ = writeln!(summary, "gramian_eigenvalue_min: {lo:.16e}");
        let _ = writeln!(summary, "gramian_eigenvalue_max: {hi:.16e}");
    }

    let mut out = Output::new(&cfg.output.dir)?;
    out.write("reconstruction.csv", &r.to_csv(gspace.band()))?;
    if external.is_none() {
        out.write("observation.csv", &r.record.to_csv())?;
    }
    out.write("summary.txt", &summary)?;
    print!("{summary}");
    out.finish(plot)
}

pub fn example(cfg: &ExperimentConfig, plot: bool) -> Result<(), Failure> {
    let ex = ExampleConfig {
        alpha: cfg.model.alpha,
        n_modes: cfg.model.n_modes,
        noise_std: cfg.observation.noise,
        seed: cfg.observation.seed,
        eps: cfg.reconstruction.eps,
        quadrature: cfg.time_quadrature(),
        ..ExampleConfig::default()
    };
    let report = run_example(&ex)?;
    let text = report.to_text();
    let mut out = Output::new(&cfg.output.dir)?;
    out.write("example.txt", &text)?;
    out.write("profile.csv", &report.profile_csv())?;
    out.write("reconstruction.csv", &report.reconstruction.to_csv(&report.band))?;
    print!("{text}");
    println!(
        "{} in the domain at b = 1/2",
        if report.null_trace.observable { "weakly observable" } else { "NOT weakly observable" }
    );
    println!("constant (3 sqrt 3 - 1)/(6 pi) = {:.6}", report.constant_closed_form);
    println!("band membership of sin(2 pi x) on omega_1: {}", report.truth_in_band);
    out.finish(plot)
}

pub fn selftest() -> Result<(), Failure> {
    let checks = run_selftest()?;
    let mut failed = 0;
    for c in &checks {
        println!("{c}");
        if c.passed == Some(false) {
            failed += 1;
        }
    }
    if failed > 0 {
        return Err(Failure::Numerical(format!("{failed} self-test check(s) failed")));
    }
    Ok(())
}
