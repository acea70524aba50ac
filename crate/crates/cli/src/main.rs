//! fphi: build fractal graph approximations, probe their heat-semigroup
//! calculus, and run the renormalized stochastic dynamics on them.

mod config;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand};

use fphi_core::besov::{besov_norm_dyadic, besov_norm_integral, BesovParams, NormExp};
use fphi_core::calculus::{calderon_residual, paraproduct, ParaproductReport};
use fphi_core::dpd::{cdi_check, solve_phi, PhiInit};
use fphi_core::ergodic::run_invariant_estimate;
use fphi_core::grid::TGrid;
use fphi_core::regime::{classify, grid_csv, phi4_benchmark, region_grid, ThetaPolicy};
use fphi_core::snapshot::{self, Snapshot};
use fphi_core::spectral::heat_diagnostics;
use fphi_core::{build_space, catalog_lookup, decompose, Field};

use config::{manifest, Overrides, RunConfig};

#[derive(Parser)]
#[command(name = "fphi", version, about = "Renormalized Phi^{n+1} dynamics on fractal graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List catalog fractals or show one entry as JSON.
    Catalog {
        name: Option<String>,
    },
    /// Build a graph approximation; dump adjacency JSON / measure snapshot.
    Space {
        #[arg(long)]
        name: String,
        #[arg(long)]
        level: u32,
        /// Write the human-readable adjacency dump here.
        #[arg(long)]
        adjacency: Option<PathBuf>,
        /// Write the vertex-measure field as an FPHI snapshot here.
        #[arg(long)]
        snapshot: Option<PathBuf>,
    },
    /// Regime classification, the Phi^4 benchmark, and region grids.
    Regime {
        #[command(subcommand)]
        cmd: RegimeCmd,
    },
    /// Heat-kernel diagnostics on a catalog graph.
    Heat {
        #[arg(long)]
        name: String,
        #[arg(long)]
        level: u32,
        #[arg(long)]
        t_min: Option<f64>,
        #[arg(long)]
        t_max: Option<f64>,
        #[arg(long, default_value_t = 16)]
        samples: usize,
        /// Write the diagnostics JSON here (stdout otherwise).
        #[arg(long)]
        json: Option<PathBuf>,
        /// Write the on-diagonal slope raw data as CSV (columns t, p_t(x,x)).
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Besov norm sweep of a field; CSV columns (alpha,p,q,k,value,grid_id).
    Besov {
        #[arg(long)]
        name: String,
        #[arg(long)]
        level: u32,
        /// Comma-separated regularity indices.
        #[arg(long, value_delimiter = ',', default_value = "0.25,0.5,0.75")]
        alphas: Vec<f64>,
        /// Norm exponent p (number or "inf").
        #[arg(long, default_value = "inf")]
        p: String,
        /// Summability exponent q (number or "inf").
        #[arg(long, default_value = "inf")]
        q: String,
        #[arg(long, default_value_t = 2)]
        k: usize,
        /// Field source: random:SEED | eigen:K | snapshot:PATH
        #[arg(long, default_value = "random:1")]
        field: String,
        /// dyadic | integral
        #[arg(long, default_value = "dyadic")]
        form: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Paraproduct decomposition demo: reconstruction error and parts CSV.
    Calculus {
        #[arg(long)]
        name: String,
        #[arg(long)]
        level: u32,
        #[arg(long, default_value_t = 2)]
        b: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Write ParaproductParts as multi-column CSV keyed by vertex.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Ensemble runs of the full dynamics phi = Y + v.
    Simulate {
        /// JSON run configuration; flags below override it.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Coming-down-from-infinity envelope check.
    Cdi {
        #[arg(long)]
        name: String,
        #[arg(long)]
        level: u32,
        #[arg(long, value_delimiter = ',', default_value = "10,100,1000")]
        scales: Vec<f64>,
        #[arg(long, default_value_t = 3)]
        n: u32,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long = "t", default_value_t = 1.0)]
        t_horizon: f64,
        #[arg(long, default_value_t = 1.0)]
        noise: f64,
        #[arg(long, default_value_t = 0.05)]
        epsilon: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Krylov-Bogoliubov time-averaged observables and stationarity verdict.
    Invariant {
        #[arg(long)]
        name: String,
        #[arg(long)]
        level: u32,
        #[arg(long, default_value_t = 200.0)]
        horizon: f64,
        #[arg(long, default_value_t = 2)]
        windows: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.01)]
        dt: f64,
        #[arg(long, default_value_t = 1.0)]
        noise: f64,
        /// Write the report JSON here (stdout otherwise).
        #[arg(long)]
        json: Option<PathBuf>,
        /// Write the per-window CSV here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum RegimeCmd {
    /// Evaluate the admissibility inequalities for one parameter tuple.
    Classify {
        #[arg(long)]
        dh: f64,
        #[arg(long)]
        dw: f64,
        #[arg(long)]
        theta: f64,
        #[arg(long)]
        n: u32,
    },
    /// d_h thresholds for Phi^4 at a given (d_w, theta).
    Phi4 {
        #[arg(long)]
        dw: f64,
        #[arg(long, default_value_t = 1.0)]
        theta: f64,
    },
    /// Verdict grid over the (d_w, d_h) plane; CSV to --out or stdout.
    Grid {
        #[arg(long, default_value_t = 2.0)]
        dw_min: f64,
        #[arg(long, default_value_t = 3.5)]
        dw_max: f64,
        #[arg(long, default_value_t = 2.0)]
        dh_min: f64,
        #[arg(long, default_value_t = 5.0)]
        dh_max: f64,
        /// fixed:THETA or product-minimal
        #[arg(long, default_value = "fixed:1.0")]
        theta_policy: String,
        #[arg(long, default_value_t = 3)]
        n: u32,
        #[arg(long, default_value_t = 64)]
        resolution: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap's default exit code for usage errors is 2, which this
            // tool reserves for resource errors; remap to 1.
            let _ = e.print();
            let code = if e.use_stderr() { 1 } else { 0 };
            std::process::exit(code);
        }
    };
    match run(cli) {
        Ok(()) => {}
        Err(err) => {
            eprintln!("error: {err:#}");
            let code = err
                .downcast_ref::<fphi_core::Error>()
                .map(fphi_core::Error::exit_code)
                .unwrap_or(1);
            std::process::exit(code);
        }
    }
}

fn emit(path: &Option<PathBuf>, contents: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent() {
                if !dir.as_os_str().is_empty() {
                    std::fs::create_dir_all(dir)?;
                }
            }
            std::fs::write(p, contents)?;
        }
        None => {
            if contents.ends_with('\n') {
                print!("{contents}");
            } else {
                println!("{contents}");
            }
        }
    }
    Ok(())
}

fn parse_exp(text: &str) -> anyhow::Result<NormExp> {
    if text == "inf" {
        return Ok(NormExp::Infinity);
    }
    Ok(NormExp::Finite(text.parse::<f64>()?))
}

fn build_sd(name: &str, level: u32) -> anyhow::Result<Arc<fphi_core::SpectralDecomposition>> {
    let spec = catalog_lookup(name)?;
    let graph = build_space(&spec, level)?;
    Ok(Arc::new(decompose(Arc::new(graph))?))
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Catalog { name } => {
            match name {
                Some(n) => {
                    let spec = catalog_lookup(&n)?;
                    println!("{}", serde_json::to_string_pretty(&spec)?);
                }
                None => {
                    for n in fphi_core::space::CATALOG_NAMES {
                        let spec = catalog_lookup(n)?;
                        println!(
                            "{n:10} d_h={:.4} d_w={:.4} theta={:.4} d_s={:.4}",
                            spec.d_h,
                            spec.d_w,
                            spec.theta,
                            spec.d_s()
                        );
                    }
                }
            }
            Ok(())
        }
        Command::Space {
            name,
            level,
            adjacency,
            snapshot: snap_path,
        } => {
            let spec = catalog_lookup(&name)?;
            let graph = build_space(&spec, level)?;
            println!(
                "{} level {level}: {} vertices, {} edges, hop diameter {}, mesh {:.4e}",
                name,
                graph.vertex_count(),
                graph.edges.len(),
                graph.hop_diameter,
                graph.mesh()
            );
            if let Some(p) = adjacency {
                emit(&Some(p), &serde_json::to_string_pretty(&graph.adjacency_dump())?)?;
            }
            if let Some(p) = snap_path {
                let field = Field::new(graph.vertex_measure.clone());
                snapshot::write(&p, &Snapshot::from_field(&field))?;
            }
            Ok(())
        }
        Command::Regime { cmd } => match cmd {
            RegimeCmd::Classify { dh, dw, theta, n } => {
                let report = classify(dh, dw, theta, n)?;
                println!("{}", serde_json::to_string_pretty(&report)?);
                Ok(())
            }
            RegimeCmd::Phi4 { dw, theta } => {
                let b = phi4_benchmark(dw, theta)?;
                println!("{}", serde_json::to_string_pretty(&b)?);
                Ok(())
            }
            RegimeCmd::Grid {
                dw_min,
                dw_max,
                dh_min,
                dh_max,
                theta_policy,
                n,
                resolution,
                out,
            } => {
                let policy = if theta_policy == "product-minimal" {
                    ThetaPolicy::ProductMinimal
                } else if let Some(rest) = theta_policy.strip_prefix("fixed:") {
                    ThetaPolicy::Fixed(rest.parse::<f64>()?)
                } else {
                    anyhow::bail!("theta policy must be fixed:THETA or product-minimal");
                };
                let rows =
                    region_grid((dw_min, dw_max), (dh_min, dh_max), policy, n, resolution)?;
                emit(&out, &grid_csv(&rows))?;
                Ok(())
            }
        },
        Command::Heat {
            name,
            level,
            t_min,
            t_max,
            samples,
            json,
            csv,
        } => {
            let sd = build_sd(&name, level)?;
            let spec = sd.spec().clone();
            let mesh_scale = sd.graph().mesh().powf(spec.d_w);
            let lo = t_min.unwrap_or(2.0 * mesh_scale);
            let hi = t_max.unwrap_or((400.0 * mesh_scale).min(0.05).max(4.0 * lo).min(1.0));
            let diag = heat_diagnostics(&sd, &spec, (lo, hi), samples)?;
            if let Some(p) = &csv {
                let mut s = String::from("t,p_t_xx\n");
                for (t, v) in &diag.ondiag_series {
                    s.push_str(&format!("{t},{v}\n"));
                }
                emit(&Some(p.clone()), &s)?;
            }
            emit(&json, &serde_json::to_string_pretty(&diag)?)?;
            Ok(())
        }
        Command::Besov {
            name,
            level,
            alphas,
            p,
            q,
            k,
            field,
            form,
            out,
        } => {
            let sd = build_sd(&name, level)?;
            let graph = sd.graph();
            let f = match field.split_once(':') {
                Some(("random", seed)) => {
                    let rng = fphi_core::rng::CounterRng::new(seed.parse()?, 0);
                    Field::new(
                        (0..graph.vertex_count())
                            .map(|i| rng.normal(i as u64, 0, 0))
                            .collect(),
                    )
                }
                Some(("eigen", idx)) => sd.eigenfield(idx.parse()?),
                Some(("snapshot", path)) => {
                    let snap = snapshot::read(Path::new(path))?;
                    Field::new(snap.frames[0].clone())
                }
                _ => anyhow::bail!("field must be random:SEED, eigen:K or snapshot:PATH"),
            };
            let pe = parse_exp(&p)?;
            let qe = parse_exp(&q)?;
            let mut csv = String::from("alpha,p,q,k,value,grid_id\n");
            for &alpha in &alphas {
                let params = BesovParams::new(alpha, pe, qe, k);
                let r = match form.as_str() {
                    "dyadic" => besov_norm_dyadic(
                        &sd,
                        &f,
                        &params,
                        fphi_core::besov::default_j_max(graph),
                    )?,
                    "integral" => {
                        let grid = TGrid::besov_default(graph.mesh(), sd.spec().d_w)?;
                        besov_norm_integral(&sd, &f, &params, &grid)?
                    }
                    other => anyhow::bail!("form must be dyadic or integral, got {other:?}"),
                };
                csv.push_str(&format!(
                    "{alpha},{pe},{qe},{k},{},{}\n",
                    r.total, r.quadrature
                ));
            }
            emit(&out, &csv)?;
            Ok(())
        }
        Command::Calculus {
            name,
            level,
            b,
            seed,
            csv,
        } => {
            let sd = build_sd(&name, level)?;
            let rng = fphi_core::rng::CounterRng::new(seed, 0);
            let rough = |lane: u64| {
                Field::new(
                    (0..sd.graph().vertex_count())
                        .map(|i| rng.normal(i as u64, 0, lane))
                        .collect(),
                )
            };
            let smooth = |f: &Field| sd.apply_multiplier(f, |lam| (-0.02 * lam).exp());
            let f = smooth(&rough(1));
            let g = smooth(&rough(2));
            let grid = TGrid::paraproduct_default(sd.lambda_max());
            let parts = paraproduct(&sd, &f, &g, b, &grid)?;
            let err = parts
                .reconstruction()
                .sub(&f.mul_pointwise(&g))
                .sup_norm();
            let report = ParaproductReport {
                b,
                quadrature: parts.quadrature.clone(),
                reconstruction_error: err,
                calderon_residual: calderon_residual(&sd, b),
            };
            println!("{}", serde_json::to_string_pretty(&report)?);
            if let Some(p) = csv {
                emit(&Some(p), &parts.csv())?;
            }
            Ok(())
        }
        Command::Simulate { config, overrides } => {
            let mut cfg = match &config {
                Some(p) => RunConfig::load(p)?,
                None => RunConfig::default(),
            };
            overrides.apply(&mut cfg)?;
            cfg.solver.snapshot_cadence = cfg.outputs.snapshot_cadence;
            cfg.solver.validate()?;

            let sd = build_sd(&cfg.space.name, cfg.space.level)?;
            let dir = cfg.outputs.directory.clone();
            std::fs::create_dir_all(&dir)?;
            std::fs::write(
                dir.join("manifest.json"),
                serde_json::to_string_pretty(&manifest(&cfg))?,
            )?;

            let phi0 = Field::zeros(sd.graph().vertex_count());
            for r in 0..cfg.ensemble.replicas {
                let run = solve_phi(
                    &sd,
                    PhiInit::Field(phi0.clone()),
                    &cfg.solver,
                    cfg.ensemble.seed,
                    r,
                )?;
                if cfg.outputs.formats.iter().any(|f| f == "csv") {
                    std::fs::write(dir.join(format!("replica_{r}.csv")), run.v.csv())?;
                }
                let snap = Snapshot::from_trajectory(&run.phi.field_times, &run.phi.fields)?;
                snapshot::write(&dir.join(format!("replica_{r}.fphi")), &snap)?;
                let last = run.phi.diagnostics.last().expect("nonempty run");
                println!(
                    "replica {r}: t = {:.3}, |v|_2p = {:.5e}, energy = {:.5e}",
                    last.t, last.l2p_norm, last.energy
                );
            }
            let mut stdout = std::io::stdout();
            let _ = writeln!(stdout, "outputs in {}", dir.display());
            Ok(())
        }
        Command::Cdi {
            name,
            level,
            scales,
            n,
            dt,
            t_horizon,
            noise,
            epsilon,
            seed,
            out,
        } => {
            let sd = build_sd(&name, level)?;
            let cfg = fphi_core::dpd::SolverConfig {
                n,
                dt,
                t_horizon,
                epsilon,
                noise_amplitude: noise,
                ..Default::default()
            };
            let report = cdi_check(&sd, &cfg, &scales, seed)?;
            emit(&out, &serde_json::to_string_pretty(&report)?)?;
            Ok(())
        }
        Command::Invariant {
            name,
            level,
            horizon,
            windows,
            seed,
            dt,
            noise,
            json,
            csv,
        } => {
            let sd = build_sd(&name, level)?;
            let cfg = fphi_core::dpd::SolverConfig {
                dt,
                noise_amplitude: noise,
                monitor_p: 4,
                ..Default::default()
            };
            let report = run_invariant_estimate(&sd, &cfg, horizon, windows, seed)?;
            if let Some(p) = &csv {
                emit(&Some(p.clone()), &report.csv())?;
            }
            emit(&json, &serde_json::to_string_pretty(&report)?)?;
            Ok(())
        }
    }
}
