use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use isa_core::experiments::{bench_overestimation, case_study, CASE_DIGITS, CASE_DOMAIN};
use isa_core::oracle::sandwich_check;
use isa_core::problem::{cells_csv, parse_subpaving_json, stats_json, subpaving_csv, subpaving_json, ProblemFile};
use isa_core::setinv::{ism_pass, solve, BoxClass, Engine, IsmPass};
use isa_core::{Error, Grid};

#[derive(Parser)]
#[command(name = "isa", version, about = "Interval superposition arithmetic and set inversion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a set-inversion problem and write subpaving.json, subpaving.csv and stats.json.
    Solve {
        problem: PathBuf,
        #[arg(long)]
        engine: Option<Engine>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long = "grid-n", alias = "grid-N")]
        grid_n: Option<usize>,
        #[arg(long)]
        budget: Option<u64>,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Process each queue level concurrently (same result).
        #[arg(long)]
        parallel: bool,
    },
    /// Overestimation of exp(sin(x1) + sin(x2)cos(x2)) on [0,1]x[0,xbar2] as CSV (N, xbar2, d_H).
    BenchHausdorff {
        #[arg(long = "n", value_delimiter = ',', default_values_t = vec![1usize, 10, 100])]
        grid_n: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = vec![1.0, 5.0, 10.0, 15.0, 20.0])]
        xbar2: Vec<f64>,
        /// Samples per coordinate for the range estimate.
        #[arg(long, default_value_t = 400)]
        samples: usize,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the kinetics parameter-estimation problem file.
    GenerateCaseStudy {
        out: PathBuf,
        /// Significant digits kept in the simulated measurements.
        #[arg(long, default_value_t = CASE_DIGITS)]
        digits: usize,
        #[arg(long, default_value_t = 1e-3)]
        epsilon: f64,
        #[arg(long, default_value = "ism")]
        engine: Engine,
        #[arg(long = "grid-n", alias = "grid-N", default_value_t = 2)]
        grid_n: usize,
    },
    /// Classify the grid cells of the problem domain in one model pass and
    /// write them as CSV (interior, boundary; excluded cells omitted).
    Cells {
        problem: PathBuf,
        #[arg(long = "grid-n", alias = "grid-N")]
        grid_n: Option<usize>,
        #[arg(long, default_value = "cells.csv")]
        out: PathBuf,
    },
    /// Check a written subpaving against the problem by random sampling.
    Verify {
        problem: PathBuf,
        subpaving: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(cmd: Command) -> Result<ExitCode, Error> {
    match cmd {
        Command::Solve {
            problem,
            engine,
            epsilon,
            grid_n,
            budget,
            out_dir,
            parallel,
        } => {
            let mut file = ProblemFile::load(&problem)?;
            if let Some(e) = engine {
                file.engine = Some(e);
            }
            if let Some(e) = epsilon {
                file.epsilon = e;
            }
            if let Some(n) = grid_n {
                file.grid_n = Some(n);
            }
            if let Some(b) = budget {
                file.budget = Some(b);
            }
            let mut p = file.to_problem()?;
            p.parallel = parallel;
            let (mut sp, code) = match solve(&p) {
                Ok(sp) => (sp, ExitCode::SUCCESS),
                Err(Error::BudgetExceeded { iterations, partial }) => {
                    eprintln!("warning: iteration budget exhausted after {iterations} iterations; writing partial result");
                    (*partial, ExitCode::from(2))
                }
                Err(e) => return Err(e),
            };
            sp.canonicalize();
            std::fs::create_dir_all(&out_dir)?;
            write(&out_dir.join("subpaving.json"), &subpaving_json(&sp))?;
            write(&out_dir.join("subpaving.csv"), &subpaving_csv(&sp, p.domain.dim()))?;
            write(&out_dir.join("stats.json"), &stats_json(&p, &sp))?;
            println!(
                "{}: {} iterations, {} interior, {} boundary",
                p.engine,
                sp.stats.iterations,
                sp.interior.len(),
                sp.boundary.len()
            );
            Ok(code)
        }
        Command::BenchHausdorff {
            grid_n,
            xbar2,
            samples,
            out,
        } => {
            let mut csv = String::from("N,xbar2,d_H\n");
            for &n in &grid_n {
                for &x in &xbar2 {
                    let d = bench_overestimation(n, x, samples)?;
                    csv.push_str(&format!("{n},{},{}\n", sig(x), sig(d)));
                }
            }
            match out {
                Some(path) => write(&path, &csv)?,
                None => print!("{csv}"),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::GenerateCaseStudy {
            out,
            digits,
            epsilon,
            engine,
            grid_n,
        } => {
            let file = case_study(digits, CASE_DOMAIN, epsilon, engine, grid_n);
            file.to_problem()?;
            write(&out, &file.to_json())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Cells { problem, grid_n, out } => {
            let file = ProblemFile::load(&problem)?;
            let mut p = file.to_problem()?;
            if let Some(n) = grid_n {
                p.grid_n = n;
            }
            let grid = Arc::new(Grid::new(p.domain.clone(), p.grid_n)?);
            let mut rows: Vec<(&str, isa_core::IntervalBox)> = Vec::new();
            match ism_pass(&p, &p.domain)? {
                IsmPass::Whole(BoxClass::Excluded) => {}
                IsmPass::Whole(class) => {
                    // every cell shares the class of the whole box
                    let label = label(class);
                    for j in isa_core::staircase::CellIter::new(grid.dim(), grid.resolution()) {
                        rows.push((label, grid.cell_box(&j)));
                    }
                }
                IsmPass::Cells(cells) => {
                    for c in cells.into_iter().filter(|c| c.class != BoxClass::Excluded) {
                        rows.push((label(c.class), c.cell));
                    }
                }
            }
            write(&out, &cells_csv(p.domain.dim(), rows.iter().map(|(l, b)| (*l, b))))?;
            let interior = rows.iter().filter(|r| r.0 == "interior").count();
            println!("{} cells: {} interior, {} boundary", grid.cell_count(), interior, rows.len() - interior);
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify {
            problem,
            subpaving,
            samples,
        } => {
            let file = ProblemFile::load(&problem)?;
            let p = file.to_problem()?;
            let sp = parse_subpaving_json(&std::fs::read_to_string(&subpaving)?)?;
            let mut rng = ChaCha8Rng::seed_from_u64(file.seed.unwrap_or(0));
            let report = sandwich_check(&p, &sp, samples, &mut rng);
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(if report.holds() { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
    }
}

fn label(class: BoxClass) -> &'static str {
    match class {
        BoxClass::Interior => "interior",
        BoxClass::Excluded => "excluded",
        BoxClass::Indeterminate => "boundary",
    }
}

fn sig(v: f64) -> String {
    isa_core::problem::sig17(v)
}

fn write(path: &Path, text: &str) -> Result<(), Error> {
    std::fs::write(path, text).map_err(Error::from)
}
