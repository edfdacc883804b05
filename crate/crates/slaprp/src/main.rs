use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use slaprp::cli::{
    export_model, instance_hash, load_dir, run_bench, stats_table, status_name, validate_solution, BenchSetup,
    Formulation, SolutionFile,
};
use slaprp::compact::{MipOptions, ModelFormat};
use slaprp::model::{
    generate_guo_instance, generate_random_instance, generate_silva_instance, Instance, Layout, Problem, RandomSpec,
};
use slaprp::routing::Policy;
use slaprp::search::{solve, Branching, SolveConfig, SolveStatus};

const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(name = "slaprp", version, about = "Joint storage assignment and picker routing solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a benchmark instance.
    Generate {
        #[command(subcommand)]
        kind: GenerateKind,
        /// Output file (default: <name>.json in --out-dir).
        #[arg(long, global = true)]
        out: Option<PathBuf>,
        #[arg(long, global = true, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Solve one instance.
    Solve(SolveArgs),
    /// Solve every instance of a directory and write CSV, markdown and JSON reports.
    Bench(BenchArgs),
    /// Write a compact MILP formulation as LP or MPS text.
    Export(ExportArgs),
    /// Check a solution file against its instance.
    Validate {
        instance: PathBuf,
        solution: PathBuf,
    },
}

#[derive(Subcommand)]
enum GenerateKind {
    /// Single block, |S| = 2 x aisles x bays, capacity 2.
    Silva {
        #[arg(long)]
        aisles: u32,
        #[arg(long)]
        bays: u32,
        #[arg(long)]
        orders: usize,
        #[arg(long)]
        order_size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Two-block replenishment instance with 80 SKUs.
    Guo {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        orders: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Free-form single-block instance.
    Random {
        #[arg(long)]
        aisles: u32,
        #[arg(long)]
        bays: u32,
        #[arg(long, default_value_t = 1)]
        capacity: u32,
        #[arg(long)]
        skus: usize,
        #[arg(long)]
        orders: usize,
        #[arg(long, default_value_t = 1)]
        min_size: usize,
        #[arg(long, default_value_t = 3)]
        max_size: usize,
        #[arg(long, default_value_t = 0)]
        fixed: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct ConfigArgs {
    /// Routing policy (default: the instance's `policy` annotation, else optimal).
    #[arg(long)]
    policy: Option<Policy>,
    #[arg(long)]
    branching: Option<Branching>,
    #[arg(long)]
    no_symmetry: bool,
    /// Seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// File of `key = value` solver options.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Extra `key=value` option; may be repeated.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl ConfigArgs {
    fn build(&self) -> Result<SolveConfig, String> {
        let mut c = SolveConfig::default();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            c.apply_file(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        }
        for kv in &self.set {
            let (k, v) = kv.split_once('=').ok_or_else(|| format!("expected key=value, got `{kv}`"))?;
            c.set(k, v)?;
        }
        if let Some(p) = self.policy {
            c.policy = p;
        }
        if let Some(b) = self.branching {
            c.branching = b;
        }
        if self.no_symmetry {
            c.symmetry = false;
        }
        if let Some(t) = self.time_limit {
            c.time_limit = t;
        }
        if let Some(s) = self.seed {
            c.seed = s;
        }
        Ok(c)
    }
}

#[derive(Args)]
struct SolveArgs {
    instance: PathBuf,
    #[command(flatten)]
    config: ConfigArgs,
    /// Solution file (default: <instance>.<policy>.sol.json).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the stats as JSON instead of a table.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct BenchArgs {
    dir: PathBuf,
    /// Comma-separated policies.
    #[arg(long, value_delimiter = ',', default_value = "optimal")]
    policies: Vec<Policy>,
    #[command(flatten)]
    config: ConfigArgs,
    /// Run all four branching/symmetry setups.
    #[arg(long)]
    grid: bool,
    /// Add root-bound columns for every formulation.
    #[arg(long)]
    bounds: bool,
    /// Leave wall times out so reports are reproducible byte for byte.
    #[arg(long)]
    no_timing: bool,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Report prefix; writes <prefix>.csv, .md and .json.
    #[arg(long, default_value = "bench")]
    out: PathBuf,
}

#[derive(Args)]
struct ExportArgs {
    instance: PathBuf,
    /// assignment, mtz, mcf, return, sshape, midpoint or largestgap.
    #[arg(long)]
    formulation: Formulation,
    /// lp or mps.
    #[arg(long, default_value = "lp")]
    format: ModelFormat,
    /// Rewrite indicator rows with big-M coefficients.
    #[arg(long)]
    big_m: bool,
    /// Emit the policy models exactly as written, without corrections.
    #[arg(long)]
    verbatim: bool,
    #[arg(long)]
    out: PathBuf,
}

fn fail(code: u8, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(code)
}

fn load(path: &Path) -> Result<Problem, String> {
    let inst = Instance::load(path).map_err(|e| format!("{}: {e}", path.display()))?;
    Problem::new(inst).map_err(|e| format!("{}: {e}", path.display()))
}

fn cmd_generate(kind: GenerateKind, out: Option<PathBuf>, out_dir: PathBuf) -> ExitCode {
    let inst = match kind {
        GenerateKind::Silva { aisles, bays, orders, order_size, seed } => {
            generate_silva_instance(aisles, bays, orders, order_size, seed)
        }
        GenerateKind::Guo { alpha, orders, seed } => generate_guo_instance(alpha, orders, seed),
        GenerateKind::Random { aisles, bays, capacity, skus, orders, min_size, max_size, fixed, seed } => {
            let spec = RandomSpec {
                layout: Layout::single_block(aisles, bays, capacity),
                n_skus: skus,
                n_orders: orders,
                min_order_size: min_size,
                max_order_size: max_size,
                n_fixed: fixed,
            };
            generate_random_instance(&spec, seed).map(|mut i| {
                i.name = Some(format!("random-{aisles}x{bays}-k{capacity}-s{skus}-o{orders}-{seed}"));
                i
            })
        }
    };
    let inst = match inst {
        Ok(i) => i,
        Err(e) => return fail(EXIT_USAGE, e),
    };
    let path = out.unwrap_or_else(|| out_dir.join(format!("{}.json", inst.name.as_deref().unwrap_or("instance"))));
    if let Err(e) = inst.save(&path) {
        return fail(1, format!("{}: {e}", path.display()));
    }
    let manifest = serde_json::json!({
        "path": path.display().to_string(),
        "name": inst.name,
        "hash": instance_hash(&inst),
        "skus": inst.skus.len(),
        "free_skus": inst.skus.len() - inst.fixed.len(),
        "orders": inst.orders.len(),
        "locations": inst.layout.num_locations(),
    });
    println!("{}", serde_json::to_string_pretty(&manifest).unwrap());
    ExitCode::SUCCESS
}

fn cmd_solve(args: SolveArgs) -> ExitCode {
    let problem = match load(&args.instance) {
        Ok(p) => p,
        Err(e) => return fail(EXIT_USAGE, e),
    };
    let mut config = match args.config.build() {
        Ok(c) => c,
        Err(e) => return fail(EXIT_USAGE, e),
    };
    if args.config.policy.is_none() {
        if let Some(p) = problem.instance.meta.get("policy").and_then(|p| p.parse().ok()) {
            config.policy = p;
        }
    }
    let res = match solve(&problem, &config) {
        Ok(r) => r,
        Err(e) => return fail(1, e),
    };
    let name = problem.instance.name.clone().unwrap_or_else(|| args.instance.display().to_string());
    if args.json {
        let out = serde_json::json!({ "instance": name, "policy": config.policy, "status": status_name(res.status), "stats": res.stats });
        println!("{}", serde_json::to_string_pretty(&out).unwrap());
    } else {
        print!("{}", stats_table(&name, config.policy, res.status, &res.stats));
    }
    if let Some(inc) = &res.incumbent {
        let mut sol = SolutionFile::new(&problem, config.policy, inc);
        sol.stats = Some(res.stats.clone());
        let path = args.out.unwrap_or_else(|| args.instance.with_extension(format!("{}.sol.json", config.policy)));
        if let Err(e) = std::fs::write(&path, sol.to_json() + "\n") {
            return fail(1, format!("{}: {e}", path.display()));
        }
        if !args.json {
            println!("solution    {}", path.display());
        }
    }
    match res.status {
        SolveStatus::Optimal => ExitCode::SUCCESS,
        SolveStatus::Limit => ExitCode::from(3),
        SolveStatus::NoIncumbent => ExitCode::from(4),
    }
}

fn cmd_bench(args: BenchArgs) -> ExitCode {
    let base = match args.config.build() {
        Ok(c) => c,
        Err(e) => return fail(EXIT_USAGE, e),
    };
    let instances = match load_dir(&args.dir) {
        Ok(i) => i,
        Err(e) => return fail(EXIT_USAGE, format!("{}: {e}", args.dir.display())),
    };
    let setups =
        if args.grid { BenchSetup::grid() } else { vec![BenchSetup { branching: base.branching, symmetry: base.symmetry }] };
    let report = run_bench(&instances, &args.policies, &setups, &base, args.bounds, args.jobs);
    let timing = !args.no_timing;
    let md = report.to_markdown(timing);
    let mut json = report.clone();
    if !timing {
        json.rows.iter_mut().for_each(|r| r.time_s = None);
        json.groups.iter_mut().for_each(|g| g.time_s = 0.0);
    }
    let outputs = [
        ("csv", report.to_csv(timing)),
        ("md", md.clone()),
        ("json", serde_json::to_string_pretty(&json).unwrap() + "\n"),
    ];
    for (ext, text) in outputs {
        let path = args.out.with_extension(ext);
        if let Err(e) = std::fs::write(&path, text) {
            return fail(1, format!("{}: {e}", path.display()));
        }
    }
    print!("{md}");
    let failed = report.rows.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        eprintln!("{failed} of {} runs failed; see the error column", report.rows.len());
    }
    ExitCode::SUCCESS
}

fn cmd_export(args: ExportArgs) -> ExitCode {
    let problem = match load(&args.instance) {
        Ok(p) => p,
        Err(e) => return fail(EXIT_USAGE, e),
    };
    let opts = MipOptions { verbatim: args.verbatim };
    match export_model(&problem, args.formulation, opts, args.big_m, args.format, &args.out) {
        Ok(manifest) => {
            println!("model       {}", args.out.display());
            println!("manifest    {}", manifest.display());
            ExitCode::SUCCESS
        }
        Err(e @ slaprp::compact::CompactError::Unsupported(_)) => fail(EXIT_USAGE, e),
        Err(e) => fail(1, e),
    }
}

fn cmd_validate(instance: PathBuf, solution: PathBuf) -> ExitCode {
    let problem = match load(&instance) {
        Ok(p) => p,
        Err(e) => return fail(EXIT_USAGE, e),
    };
    let sol: SolutionFile = match std::fs::read_to_string(&solution)
        .map_err(|e| e.to_string())
        .and_then(|t| serde_json::from_str(&t).map_err(|e| e.to_string()))
    {
        Ok(s) => s,
        Err(e) => return fail(EXIT_USAGE, format!("{}: {e}", solution.display())),
    };
    let diag = validate_solution(&problem, &sol);
    if diag.is_empty() {
        println!("ok: total {}", sol.total);
        return ExitCode::SUCCESS;
    }
    for d in &diag {
        println!("{d}");
    }
    ExitCode::from(1)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Generate { kind, out, out_dir } => cmd_generate(kind, out, out_dir),
        Command::Solve(a) => cmd_solve(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Export(a) => cmd_export(a),
        Command::Validate { instance, solution } => cmd_validate(instance, solution),
    }
}
