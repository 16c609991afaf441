use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tissue_uq::axon::simulate_with;
use tissue_uq::dispersion::{admittivity, conductivity, permittivity};
use tissue_uq::error::{Error, Result};
use tissue_uq::ffem::{MaterialSpectrum, TissueSpectrum};
use tissue_uq::kl::{kl_realize, truncation_error, KlModel};
use tissue_uq::pipeline::{
    build_kl, mean_material, run_collocation_with, write_report, CollocationPlan, ForwardModel, StudyConfig, Threshold,
    UQResult,
};
use tissue_uq::sparse_grid::smolyak_rule;

/// Stochastic tissue conductivity and activation-threshold statistics.
#[derive(Parser)]
#[command(name = "tissue-uq", version)]
struct Cli {
    /// Study configuration (JSON). Missing fields take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the KL sampling seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true, env = "TISSUE_UQ_THREADS")]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Cole-Cole material law.
    #[command(subcommand)]
    Dispersion(DispersionCmd),
    /// Karhunen-Loève model of the conductivity.
    #[command(subcommand)]
    Kl(KlCmd),
    /// Sparse-grid quadrature.
    #[command(subcommand)]
    Grid(GridCmd),
    /// Volume-conductor solves.
    #[command(subcommand)]
    Field(FieldCmd),
    /// Cable model.
    #[command(subcommand)]
    Axon(AxonCmd),
    /// Activation thresholds of every configured axon for one material.
    Threshold(MaterialArgs),
    /// Full collocation study.
    #[command(subcommand)]
    Uq(UqCmd),
    /// Table, manifest and node thresholds from a saved result.
    Report {
        /// Result document written by `uq run`
        #[arg(long)]
        result: PathBuf,
    },
}

#[derive(Subcommand)]
enum DispersionCmd {
    /// Permittivity, conductivity and admittivity of the mean parameter set.
    Eval {
        #[arg(long, default_value_t = 130.0)]
        f_min: f64,
        #[arg(long, default_value_t = 5e5)]
        f_max: f64,
        #[arg(long, default_value_t = 50)]
        points: usize,
    },
}

#[derive(Subcommand)]
enum KlCmd {
    /// Sample the parameter box and write the truncated model.
    Build,
    /// Conductivity realizations at uniform random KL coordinates.
    Sample {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 10)]
        count: usize,
    },
}

#[derive(Subcommand)]
enum GridCmd {
    /// Nodes and weights of the Smolyak rule.
    Nodes {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        level: u32,
        /// Multiplies the [−1, 1] abscissas.
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
    },
}

#[derive(Args, Clone)]
struct MaterialArgs {
    /// KL model; without it the mean Cole-Cole conductivity is used.
    #[arg(long)]
    model: Option<PathBuf>,
    /// KL coordinates, comma separated (default: all zero).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    y: Vec<f64>,
}

#[derive(Subcommand)]
enum FieldCmd {
    /// One unit-current solve; writes the mesh and nodal potentials.
    Solve {
        #[arg(long, default_value_t = 1e3)]
        frequency: f64,
        #[command(flatten)]
        material: MaterialArgs,
    },
    /// Transfer function along every axon.
    Sweep(MaterialArgs),
}

#[derive(Subcommand)]
enum AxonCmd {
    /// Drive one axon with a scaled unit response.
    Simulate {
        /// Index into the configured distances (0-based).
        #[arg(long, default_value_t = 0)]
        axon: usize,
        /// Stimulus amplitude [A].
        #[arg(long)]
        amplitude: f64,
        #[command(flatten)]
        material: MaterialArgs,
    },
}

#[derive(Subcommand)]
enum UqCmd {
    /// KL build, collocation and report.
    Run {
        /// Reuse a saved KL model instead of building one.
        #[arg(long)]
        model: Option<PathBuf>,
    },
}

fn write(path: &Path, body: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::Io {
            path: dir.display().to_string(),
            source: e,
        })?;
    }
    fs::write(path, body).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })
}

fn material(cfg: &StudyConfig, args: &MaterialArgs) -> Result<TissueSpectrum> {
    match &args.model {
        None if args.y.iter().all(|v| *v == 0.0) => mean_material(cfg),
        None => Err(Error::Config("KL coordinates need --model".into())),
        Some(path) => {
            let model = KlModel::load(path)?;
            let y = if args.y.is_empty() {
                vec![0.0; model.rank()]
            } else {
                args.y.clone()
            };
            TissueSpectrum::from_kl(&model, &y, cfg.dispersion.mean, cfg.field.encapsulation_scale)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => StudyConfig::load(p)?,
        None => StudyConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.kl.seed = seed;
    }
    cfg.validate()?;
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    let out = &cli.out;
    fs::create_dir_all(out).map_err(|e| Error::Io {
        path: out.display().to_string(),
        source: e,
    })?;
    let two_pi = 2.0 * std::f64::consts::PI;

    match cli.cmd {
        Cmd::Dispersion(DispersionCmd::Eval { f_min, f_max, points }) => {
            if !(f_min > 0.0 && f_max > f_min) || points < 2 {
                return Err(Error::Config("need 0 < f_min < f_max and at least 2 points".into()));
            }
            let p = &cfg.dispersion.mean;
            let mut s = String::from("f_hz,omega,eps_r,kappa,sigma_re,sigma_im\n");
            for k in 0..points {
                let f = f_min * (f_max / f_min).powf(k as f64 / (points - 1) as f64);
                let w = two_pi * f;
                let a = admittivity(p, w, None)?.value();
                s += &format!(
                    "{f:e},{w:e},{:e},{:e},{:e},{:e}\n",
                    permittivity(p, w)?,
                    conductivity(p, w)?,
                    a.re,
                    a.im
                );
            }
            write(&out.join("dispersion.csv"), &s)?;
        }
        Cmd::Kl(KlCmd::Build) => {
            let kl = build_kl(&cfg)?;
            let (err, _) = truncation_error(&kl.covariance, &kl.model)?;
            kl.model.save(out.join("kl_model.json"))?;
            let lam = &kl.eigen.values;
            let mut s = String::from("m,lambda,lambda_over_lambda1\n");
            for (m, l) in lam.iter().enumerate().take(10) {
                s += &format!("{},{l:e},{:e}\n", m + 1, l / lam[0]);
            }
            write(&out.join("eigenvalues.csv"), &s)?;
            println!(
                "grid {} points, rank {}, max relative covariance error {err:.3e}",
                kl.model.grid.len(),
                kl.model.rank()
            );
        }
        Cmd::Kl(KlCmd::Sample { model, count }) => {
            use rand::{Rng, SeedableRng};
            let model = KlModel::load(model)?;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.kl.seed);
            let a = cfg.grid.scale;
            let mut cols = Vec::with_capacity(count);
            for _ in 0..count {
                let y: Vec<f64> = (0..model.rank()).map(|_| rng.gen_range(-a..=a)).collect();
                cols.push(kl_realize(&model, &y)?);
            }
            let mut s = String::from("omega,mean");
            for j in 1..=count {
                s += &format!(",s{j}");
            }
            s.push('\n');
            for (i, w) in model.grid.omega.iter().enumerate() {
                s += &format!("{w:e},{:e}", model.mean[i]);
                for c in &cols {
                    s += &format!(",{:e}", c[i]);
                }
                s.push('\n');
            }
            write(&out.join("kl_samples.csv"), &s)?;
        }
        Cmd::Grid(GridCmd::Nodes { dim, level, scale }) => {
            if dim == 0 {
                return Err(Error::Config("dimension must be at least 1".into()));
            }
            let rule = smolyak_rule(dim, level);
            let mut s = (1..=dim).map(|j| format!("y{j}")).collect::<Vec<_>>().join(",") + ",weight\n";
            for (p, w) in rule.scaled_points(scale).iter().zip(&rule.weights) {
                for v in p {
                    s += &format!("{v:e},");
                }
                s += &format!("{w:e}\n");
            }
            write(&out.join(format!("grid_d{dim}_l{level}.csv")), &s)?;
            println!("{} nodes", rule.len());
        }
        Cmd::Field(FieldCmd::Solve { frequency, material: m }) => {
            let fwd = ForwardModel::new(&cfg)?;
            let mat = material(&cfg, &m)?;
            let w = two_pi * frequency;
            let (se, st) = mat.admittivities(w)?;
            let sol = fwd.operator.solve(se, st, w)?;
            fwd.mesh.write_csv(out)?;
            let mut s = String::from("node,r,z,phi_re,phi_im\n");
            for (i, (p, v)) in fwd.mesh.nodes.iter().zip(&sol.phi).enumerate() {
                s += &format!("{i},{:e},{:e},{:e},{:e}\n", p[0], p[1], v.re, v.im);
            }
            write(&out.join("potential.csv"), &s)?;
            println!(
                "{} elements, contact potential {:.6e} V/A",
                fwd.mesh.n_triangles(),
                fwd.operator.contact_potential(&sol)
            );
        }
        Cmd::Field(FieldCmd::Sweep(m)) => {
            let fwd = ForwardModel::new(&cfg)?;
            let tf = fwd.transfer(&material(&cfg, &m)?)?;
            tf.write_csv(out.join("transfer.csv"))?;
            let resp = fwd.reconstruct(tf)?;
            resp.signal.write_csv(out.join("unit_response.csv"))?;
            println!("max discarded imaginary part {:.3e} V/A", resp.realness.max_imag);
        }
        Cmd::Axon(AxonCmd::Simulate {
            axon,
            amplitude,
            material: m,
        }) => {
            let fwd = ForwardModel::new(&cfg)?;
            if axon >= fwd.n_axons() {
                return Err(Error::Config(format!("axon index {axon} out of range")));
            }
            let resp = fwd.unit_response(&material(&cfg, &m)?)?;
            let unit = fwd.axon_signal(&resp, axon);
            let sim = simulate_with(
                &fwd.cable,
                &unit,
                amplitude,
                cfg.stimulus.periods,
                cfg.axon.rest_convention,
            )?;
            sim.write_csv(out.join(format!("axon{axon}_trace.csv")))?;
            println!("metric {:.6e} V, activated {}", sim.metric, sim.activated);
        }
        Cmd::Threshold(m) => {
            let fwd = ForwardModel::new(&cfg)?;
            let resp = fwd.unit_response(&material(&cfg, &m)?)?;
            let found = fwd.thresholds(&resp, None)?;
            let mut s = String::from("axon,distance_m,threshold_A,evaluations\n");
            for (k, (t, d)) in found.iter().zip(&cfg.axon.distances).enumerate() {
                match t {
                    Threshold::Found(r) => s += &format!("{},{d:e},{:e},{}\n", k + 1, r.x, r.evaluations),
                    Threshold::Unreachable { .. } => s += &format!("{},{d:e},,\n", k + 1),
                }
            }
            write(&out.join("thresholds.csv"), &s)?;
            print!("{s}");
        }
        Cmd::Uq(UqCmd::Run { model }) => {
            let model = match model {
                Some(p) => KlModel::load(p)?,
                None => {
                    let m = build_kl(&cfg)?.model;
                    m.save(out.join("kl_model.json"))?;
                    m
                }
            };
            let plan = CollocationPlan::new(model, &cfg)?;
            let fwd = ForwardModel::new(&cfg)?;
            let result = run_collocation_with(&fwd, &plan)?;
            write(&out.join("result.json"), &result.to_json()?)?;
            write_report(&result, out, true)?;
            print!("{}", tissue_uq::pipeline::report::table_csv(&result));
        }
        Cmd::Report { result } => {
            let r = UQResult::load(result)?;
            write_report(&r, out, true)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 3 })
        }
    }
}
