//! pnormlab: maximal output p-norms of linear maps on matrix algebras.
//!
//! Exit codes: 0 success, 1 assertion-mode violation, 2 input error.

mod commands;
mod mapspec;
mod report;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde_json::json;

use commands::SamplerKind;
use report::OutputFormat;

#[derive(Parser)]
#[command(
    name = "pnormlab",
    version,
    about = "Maximal output p-norms, block-norm inequalities, multiplicativity experiments"
)]
struct Cli {
    /// RNG seed; the PNORMLAB_SEED environment variable overrides the
    /// default, and this flag overrides both.
    #[arg(long, global = true, env = "PNORMLAB_SEED", default_value_t = 0)]
    seed: u64,

    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Write the report to this file instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Json)]
    format: OutputFormat,

    /// Omit the timestamp so identical runs produce byte-identical reports.
    #[arg(long, global = true, default_value_t = false)]
    no_timestamp: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Maximal output p-norm of a single map (closed form for qubit maps).
    NuP {
        /// Map spec: name:params (depolarizing:0.5, wh:3, transpose:2,
        /// ad:0.3, identity:2) or @file.json.
        #[arg(long)]
        map: String,
        /// Norm order: a number >= 1 or "inf".
        #[arg(long)]
        p: String,
        #[arg(long, default_value_t = 64)]
        restarts: usize,
    },
    /// Estimate the maximal p-norm of a tensor product map against the
    /// product of the factor estimates.
    TensorNuP {
        #[arg(long)]
        map1: String,
        #[arg(long)]
        map2: String,
        #[arg(long)]
        p: String,
        #[arg(long, default_value_t = 64)]
        restarts: usize,
    },
    /// Fuzz the block-norm inequality at one order (asserted at p = 2 and
    /// p >= 4; exit 1 on any violation).
    CheckThm2 {
        #[arg(long)]
        p: String,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long, default_value_t = 1)]
        dim_min: usize,
        #[arg(long, default_value_t = 8)]
        dim_max: usize,
        #[arg(long, value_enum, default_value_t = SamplerKind::Gaussian)]
        sampler: SamplerKind,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Also verify and emit the six-step proof chain per trial (p >= 4).
        #[arg(long, default_value_t = false)]
        chain: bool,
    },
    /// Exploratory p-sweep of the block-norm inequality (never asserts;
    /// violations are recorded as data).
    SweepThm2 {
        /// Comma-separated grid, e.g. "1,1.5,2,4,8,inf".
        #[arg(long, default_value = "1,1.5,2,3,4,8,inf")]
        p_grid: String,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long, default_value_t = 1)]
        dim_min: usize,
        #[arg(long, default_value_t = 8)]
        dim_max: usize,
        #[arg(long, value_enum, default_value_t = SamplerKind::Gaussian)]
        sampler: SamplerKind,
    },
    /// Tensor-vs-product comparison on random qubit x CP pairs (exit 1 if
    /// any ratio exceeds 1 + 1e-6).
    Multiplicativity {
        #[arg(long, default_value_t = 20)]
        trials: u64,
        /// Comma-separated norm orders (assertable: 2 and >= 4).
        #[arg(long, default_value = "2,4,6")]
        p_list: String,
        /// Comma-separated CP factor dimensions.
        #[arg(long, default_value = "2,3")]
        dims: String,
        #[arg(long, default_value_t = 64)]
        restarts: usize,
        /// Inject a fabricated report entry with this ratio (test fixture).
        #[arg(long, hide = true)]
        fixture_ratio: Option<f64>,
    },
    /// Verify the step-by-step product-norm bound chain on random
    /// special-form instances (exit 1 if any step slack < -1e-9).
    Lemma1Chain {
        #[arg(long, default_value_t = 20)]
        trials: u64,
        /// Orders to check; 2 selects the quadratic variant.
        #[arg(long, default_value = "2,4,6")]
        p_list: String,
        /// Dimension of the CP factor.
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long, default_value_t = 16)]
        restarts: usize,
    },
    /// Decompose a qubit map into a convex combination of at most 13 scaled
    /// extreme maps.
    Decompose {
        #[arg(long)]
        map: String,
        /// Radius of the class C_r the map must belong to.
        #[arg(long)]
        r: f64,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Bisect for the order where the Werner-Holevo entangled witness
    /// overtakes the product bound.
    WhCrossing {
        #[arg(long, default_value_t = 3)]
        d: usize,
        #[arg(long, default_value_t = 4.0)]
        bracket_lo: f64,
        #[arg(long, default_value_t = 5.5)]
        bracket_hi: f64,
        #[arg(long, default_value_t = 0.005)]
        tol: f64,
    },
    /// The transpose counterexample: multiplicativity fails below p = 2.
    TransposeDemo {
        #[arg(long, default_value = "1.5")]
        p: String,
        #[arg(long, default_value_t = 64)]
        restarts: usize,
    },
    /// Canonical diagonal form of a qubit map with conjugation witnesses.
    Canonicalize {
        #[arg(long)]
        map: String,
    },
}

fn config_echo(cli: &Cli) -> serde_json::Value {
    let command = match &cli.command {
        Command::NuP { map, p, restarts } => json!({
            "command": "nu-p", "map": map, "p": p, "restarts": restarts,
        }),
        Command::TensorNuP {
            map1,
            map2,
            p,
            restarts,
        } => json!({
            "command": "tensor-nu-p", "map1": map1, "map2": map2, "p": p, "restarts": restarts,
        }),
        Command::CheckThm2 {
            p,
            trials,
            dim_min,
            dim_max,
            sampler,
            tol,
            chain,
        } => json!({
            "command": "check-thm2", "p": p, "trials": trials, "dim_min": dim_min,
            "dim_max": dim_max, "sampler": format!("{sampler:?}"), "tol": tol, "chain": chain,
        }),
        Command::SweepThm2 {
            p_grid,
            trials,
            dim_min,
            dim_max,
            sampler,
        } => json!({
            "command": "sweep-thm2", "p_grid": p_grid, "trials": trials,
            "dim_min": dim_min, "dim_max": dim_max, "sampler": format!("{sampler:?}"),
        }),
        Command::Multiplicativity {
            trials,
            p_list,
            dims,
            restarts,
            fixture_ratio,
        } => json!({
            "command": "multiplicativity", "trials": trials, "p_list": p_list,
            "dims": dims, "restarts": restarts, "fixture_ratio": fixture_ratio,
        }),
        Command::Lemma1Chain {
            trials,
            p_list,
            d,
            restarts,
        } => json!({
            "command": "lemma1-chain", "trials": trials, "p_list": p_list, "d": d,
            "restarts": restarts,
        }),
        Command::Decompose { map, r, tol } => json!({
            "command": "decompose", "map": map, "r": r, "tol": tol,
        }),
        Command::WhCrossing {
            d,
            bracket_lo,
            bracket_hi,
            tol,
        } => json!({
            "command": "wh-crossing", "d": d, "bracket_lo": bracket_lo,
            "bracket_hi": bracket_hi, "tol": tol,
        }),
        Command::TransposeDemo { p, restarts } => json!({
            "command": "transpose-demo", "p": p, "restarts": restarts,
        }),
        Command::Canonicalize { map } => json!({
            "command": "canonicalize", "map": map,
        }),
    };
    json!({
        "seed": cli.seed,
        "threads": cli.threads,
        "format": format!("{:?}", cli.format),
        "args": command,
    })
}

fn main() {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot size the thread pool: {e}");
            std::process::exit(2);
        }
    }
    let seed = cli.seed;
    let outcome = match &cli.command {
        Command::NuP { map, p, restarts } => commands::run_nu_p(map, p, *restarts, seed),
        Command::TensorNuP {
            map1,
            map2,
            p,
            restarts,
        } => commands::run_tensor_nu_p(map1, map2, p, *restarts, seed),
        Command::CheckThm2 {
            p,
            trials,
            dim_min,
            dim_max,
            sampler,
            tol,
            chain,
        } => commands::run_check_thm2(p, *trials, *dim_min, *dim_max, *sampler, *tol, *chain, seed),
        Command::SweepThm2 {
            p_grid,
            trials,
            dim_min,
            dim_max,
            sampler,
        } => commands::run_sweep_thm2(p_grid, *trials, *dim_min, *dim_max, *sampler, seed),
        Command::Multiplicativity {
            trials,
            p_list,
            dims,
            restarts,
            fixture_ratio,
        } => commands::run_multiplicativity(*trials, p_list, dims, *restarts, seed, *fixture_ratio),
        Command::Lemma1Chain {
            trials,
            p_list,
            d,
            restarts,
        } => commands::run_lemma1_chain(*trials, p_list, *d, *restarts, seed),
        Command::Decompose { map, r, tol } => commands::run_decompose(map, *r, *tol),
        Command::WhCrossing {
            d,
            bracket_lo,
            bracket_hi,
            tol,
        } => commands::run_wh_crossing(*d, *bracket_lo, *bracket_hi, *tol),
        Command::TransposeDemo { p, restarts } => commands::run_transpose_demo(p, *restarts, seed),
        Command::Canonicalize { map } => commands::run_canonicalize(map),
    };

    let outcome = match outcome {
        Ok(o) => o,
        Err(commands::InputError(msg)) => {
            eprintln!("error: {msg}");
            std::process::exit(2);
        }
    };
    for line in &outcome.summary {
        println!("{line}");
    }
    if let Err(e) = report::write_report(
        &outcome,
        config_echo(&cli),
        cli.format,
        cli.output.as_ref(),
        cli.no_timestamp,
    ) {
        eprintln!("error: cannot write report: {e}");
        std::process::exit(2);
    }
    std::process::exit(if outcome.violation_flag { 1 } else { 0 });
}
