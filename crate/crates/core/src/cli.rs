//! The `labelswitch` command-line tool.
//!
//! Subcommands: `relabel` (run methods and write permutations, clusterings,
//! similarity and timings), `permute` (reorder a parameter chain by a
//! permutation set), `simulate` (generate a fixture from a truth
//! configuration), `inject` (apply random per-iteration label switching),
//! and `map-pivot` (print the complete-MAP iteration).
//!
//! Every relabel option can also come from a plain-text configuration file
//! of `key = value` lines (`#` starts a comment); explicit flags win.
//! Exit codes: 0 on success, 1 on usage errors, 2 on data errors.

use crate::chains::{ClassificationChain, Dataset, ParameterChain};
use crate::error::{Error, Result};
use crate::io;
use crate::models::{Model, ModelFamily, ModelKind};
use crate::pipeline::{self, ConstraintChoice, MethodSpec, RelabelResult, RunConfig};
use crate::samplers::{
    self, gibbs_bivariate_normal_mixture, gibbs_normal_mixture, gibbs_poisson_hmm, FixtureChain,
    NormalMixturePrior, NormalWishartPrior, PoissonHmmPrior, TruthSpec,
};
use clap::{Args, Parser, Subcommand};
use ndarray::Array2;
use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "labelswitch",
    version,
    about = "Undo label switching in MCMC samples from mixture and hidden Markov models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run relabelling methods and write permutations, clusterings,
    /// similarity matrix and timings
    Relabel(RelabelArgs),
    /// Reorder an MCMC parameter chain by a permutation set
    Permute(PermuteArgs),
    /// Generate a fixture chain from a truth configuration file
    Simulate(SimulateArgs),
    /// Apply random per-iteration label permutations to a chain
    Inject(InjectArgs),
    /// Print the 1-based index of the complete-MAP iteration
    MapPivot(MapPivotArgs),
}

#[derive(Args, Default)]
struct RelabelArgs {
    /// Configuration file with key = value lines; flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    /// Methods to run, comma separated (STEPHENS, PRA, ECR,
    /// ECR-ITERATIVE-1, ECR-ITERATIVE-2, SJW, AIC, DATA-BASED, USER-PERM)
    #[arg(long, value_delimiter = ',')]
    method: Vec<String>,
    /// Allocation chain (integer m x n)
    #[arg(long)]
    z: Option<PathBuf>,
    /// Parameter chain (float m x K x J)
    #[arg(long)]
    mcmc: Option<PathBuf>,
    /// Classification probabilities (float m x n x K)
    #[arg(long)]
    p: Option<PathBuf>,
    /// Observed data (float n x d)
    #[arg(long)]
    data: Option<PathBuf>,
    /// Allocation pivot(s) for ECR, comma separated (integer n)
    #[arg(long, value_delimiter = ',')]
    zpivot: Vec<PathBuf>,
    /// Parameter pivot for PRA (float K x J)
    #[arg(long)]
    prapivot: Option<PathBuf>,
    /// 1-based parameter index for AIC, or ALL
    #[arg(long)]
    constraint: Option<String>,
    /// True allocations; alignment reference when given (integer n)
    #[arg(long = "ground-truth")]
    ground_truth: Option<PathBuf>,
    /// Likelihood family for SJW: normal, bivariate-normal, poisson-hmm
    #[arg(long)]
    model: Option<String>,
    /// 1-based iteration initializing SJW (default: complete MAP)
    #[arg(long = "sjw-init")]
    sjw_init: Option<usize>,
    /// Convergence threshold for the iterative ECR versions
    #[arg(long = "thr-ecr")]
    thr_ecr: Option<f64>,
    /// Convergence threshold for STEPHENS
    #[arg(long = "thr-ste")]
    thr_ste: Option<f64>,
    /// Convergence threshold for SJW
    #[arg(long = "thr-sjw")]
    thr_sjw: Option<f64>,
    /// Iteration cap for the iterative ECR versions
    #[arg(long = "max-ecr")]
    max_ecr: Option<usize>,
    /// Iteration cap for STEPHENS
    #[arg(long = "max-ste")]
    max_ste: Option<usize>,
    /// Iteration cap for SJW
    #[arg(long = "max-sjw")]
    max_sjw: Option<usize>,
    /// User permutation set(s), comma separated (integer m x K)
    #[arg(long = "user-perm", value_delimiter = ',')]
    user_perm: Vec<PathBuf>,
    /// Output directory
    #[arg(long = "out-dir")]
    out_dir: Option<PathBuf>,
    /// Worker threads for the per-iteration subproblems (default: all cores)
    #[arg(long)]
    threads: Option<usize>,
    /// Recorded in the run summary; relabelling itself is deterministic
    #[arg(long)]
    seed: Option<u64>,
    /// Number of components (default: largest label in z)
    #[arg(long)]
    k: Option<usize>,
}

#[derive(Args)]
struct PermuteArgs {
    /// Parameter chain (float m x K x J)
    #[arg(long)]
    mcmc: PathBuf,
    /// Permutation set (integer m x K)
    #[arg(long)]
    perm: PathBuf,
    /// Destination for the reordered chain
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    /// Truth configuration file (see README for the keys)
    #[arg(long)]
    config: PathBuf,
    /// Output directory
    #[arg(long = "out-dir")]
    out_dir: PathBuf,
    /// Overrides the seed from the configuration file
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct InjectArgs {
    /// Allocation chain to switch (integer m x n)
    #[arg(long)]
    z: PathBuf,
    /// Parameter chain to switch alongside (float m x K x J)
    #[arg(long)]
    mcmc: Option<PathBuf>,
    /// Classification chain to switch alongside (float m x n x K)
    #[arg(long)]
    p: Option<PathBuf>,
    /// Family controlling the parameter action (default: normal)
    #[arg(long)]
    model: Option<String>,
    #[arg(long = "out-dir")]
    out_dir: PathBuf,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    k: Option<usize>,
}

#[derive(Args)]
struct MapPivotArgs {
    /// Likelihood family: normal, bivariate-normal, poisson-hmm
    #[arg(long)]
    model: String,
    #[arg(long)]
    mcmc: PathBuf,
    #[arg(long)]
    z: PathBuf,
    #[arg(long)]
    data: PathBuf,
}

/// Entry point used by the binary; returns the process exit code.
pub fn run_cli<I>(args: I) -> i32
where
    I: IntoIterator<Item = String>,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Relabel(args) => relabel(args),
        Command::Permute(args) => permute(args),
        Command::Simulate(args) => simulate(args),
        Command::Inject(args) => inject(args),
        Command::MapPivot(args) => map_pivot(args),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// `key = value` lines, `#` comments, UTF-8.
fn parse_config_file(path: &Path) -> Result<HashMap<String, String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let mut map = HashMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Usage(format!(
                "{}:{}: expected `key = value`, got `{raw}`",
                path.display(),
                lineno + 1
            ))
        })?;
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

fn parse_from_config<T: std::str::FromStr>(map: &HashMap<String, String>, key: &str) -> Result<Option<T>> {
    match map.get(key) {
        None => Ok(None),
        Some(raw) => raw
            .parse::<T>()
            .map(Some)
            .map_err(|_| Error::Usage(format!("config key `{key}`: cannot parse `{raw}`"))),
    }
}

fn paths_from_config(map: &HashMap<String, String>, key: &str) -> Vec<PathBuf> {
    map.get(key)
        .map(|raw| raw.split(',').map(|s| PathBuf::from(s.trim())).collect())
        .unwrap_or_default()
}

fn merge_relabel_config(args: &mut RelabelArgs) -> Result<()> {
    let Some(path) = &args.config else {
        return Ok(());
    };
    let map = parse_config_file(path)?;
    if args.method.is_empty() {
        if let Some(raw) = map.get("method") {
            args.method = raw.split(',').map(|s| s.trim().to_string()).collect();
        }
    }
    macro_rules! fill_path {
        ($field:ident, $key:literal) => {
            if args.$field.is_none() {
                if let Some(raw) = map.get($key) {
                    args.$field = Some(PathBuf::from(raw));
                }
            }
        };
    }
    fill_path!(z, "z");
    fill_path!(mcmc, "mcmc");
    fill_path!(p, "p");
    fill_path!(data, "data");
    fill_path!(prapivot, "prapivot");
    fill_path!(ground_truth, "ground-truth");
    fill_path!(out_dir, "out-dir");
    if args.zpivot.is_empty() {
        args.zpivot = paths_from_config(&map, "zpivot");
    }
    if args.user_perm.is_empty() {
        args.user_perm = paths_from_config(&map, "user-perm");
    }
    if args.constraint.is_none() {
        args.constraint = map.get("constraint").cloned();
    }
    if args.model.is_none() {
        args.model = map.get("model").cloned();
    }
    macro_rules! fill_parse {
        ($field:ident, $key:literal) => {
            if args.$field.is_none() {
                args.$field = parse_from_config(&map, $key)?;
            }
        };
    }
    fill_parse!(sjw_init, "sjw-init");
    fill_parse!(thr_ecr, "thr-ecr");
    fill_parse!(thr_ste, "thr-ste");
    fill_parse!(thr_sjw, "thr-sjw");
    fill_parse!(max_ecr, "max-ecr");
    fill_parse!(max_ste, "max-ste");
    fill_parse!(max_sjw, "max-sjw");
    fill_parse!(threads, "threads");
    fill_parse!(seed, "seed");
    fill_parse!(k, "k");
    Ok(())
}

fn format_float(v: f64) -> String {
    // 17 significant digits reproduce any f64 exactly
    format!("{v:.16e}")
}

fn relabel(mut args: RelabelArgs) -> Result<()> {
    merge_relabel_config(&mut args)?;
    if args.method.is_empty() {
        return Err(Error::Usage(
            "no method selected; pass --method or a config file".into(),
        ));
    }
    let out_dir = args
        .out_dir
        .clone()
        .ok_or_else(|| Error::Usage("missing --out-dir".into()))?;

    let methods: Vec<MethodSpec> = args
        .method
        .iter()
        .map(|name| name.parse())
        .collect::<Result<_>>()?;

    // load inputs
    let z = args
        .z
        .as_deref()
        .map(|p| io::read_allocation_chain(p, args.k))
        .transpose()?;
    let mcmc = args.mcmc.as_deref().map(io::read_parameter_chain).transpose()?;
    let p = args
        .p
        .as_deref()
        .map(io::read_classification_chain)
        .transpose()?;
    let x = args.data.as_deref().map(io::read_dataset).transpose()?;
    let k = args
        .k
        .or_else(|| z.as_ref().map(|z| z.k()))
        .or_else(|| mcmc.as_ref().map(|m| m.k()))
        .or_else(|| p.as_ref().map(|p| p.k()));

    let mut config = RunConfig::new(methods);
    config.k = k;
    for pivot_path in &args.zpivot {
        config.zpivots.push(io::read_label_vector(pivot_path, k)?);
    }
    if let Some(path) = &args.prapivot {
        config.prapivot = Some(io::read_matrix(path)?);
    }
    if let Some(raw) = &args.constraint {
        config.constraint = if raw.eq_ignore_ascii_case("ALL") {
            ConstraintChoice::All
        } else {
            let idx: usize = raw.parse().map_err(|_| {
                Error::Usage(format!("--constraint expects a 1-based index or ALL, got `{raw}`"))
            })?;
            if idx < 1 {
                return Err(Error::Usage("--constraint indices start at 1".into()));
            }
            ConstraintChoice::Index(idx - 1)
        };
    }
    if let Some(path) = &args.ground_truth {
        config.ground_truth = Some(io::read_label_vector(path, k)?);
    }
    if let Some(raw) = &args.model {
        let kind: ModelKind = raw.parse()?;
        let k = k.ok_or_else(|| Error::Usage("--model needs --k or --z to fix K".into()))?;
        config.model = Some(ModelFamily { kind, k });
    }
    if let Some(idx) = args.sjw_init {
        if idx < 1 {
            return Err(Error::Usage("--sjw-init is 1-based".into()));
        }
        config.sjw_init = Some(idx - 1);
    }
    if let Some(v) = args.thr_ecr {
        config.thr_ecr = v;
    }
    if let Some(v) = args.thr_ste {
        config.thr_ste = v;
    }
    if let Some(v) = args.thr_sjw {
        config.thr_sjw = v;
    }
    if let Some(v) = args.max_ecr {
        config.max_ecr = v;
    }
    if let Some(v) = args.max_ste {
        config.max_ste = v;
    }
    if let Some(v) = args.max_sjw {
        config.max_sjw = v;
    }
    for path in &args.user_perm {
        config.user_perms.push(io::read_permutation_set(path)?);
    }

    let result = in_pool(args.threads, || {
        pipeline::run(&config, mcmc.as_ref(), z.as_ref(), p.as_ref(), x.as_ref())
    })?;

    write_relabel_outputs(&out_dir, &result, &args)
}

fn in_pool<T>(threads: Option<usize>, job: impl FnOnce() -> Result<T> + Send) -> Result<T>
where
    T: Send,
{
    match threads {
        None | Some(0) => job(),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
            pool.install(job)
        }
    }
}

fn write_relabel_outputs(out_dir: &Path, result: &RelabelResult, args: &RelabelArgs) -> Result<()> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::Io {
        path: out_dir.display().to_string(),
        source: e,
    })?;
    for output in &result.outputs {
        let path = out_dir.join(format!("permutations_{}.lsa", output.name));
        io::write_permutation_set(&path, &output.output.permutations)?;
    }
    let rows = result.clusterings();
    io::write_label_matrix(&out_dir.join("clusters.lsa"), &rows)?;
    io::write_float_matrix(&out_dir.join("similarity.lsa"), &result.similarity)?;

    let mut timings = String::new();
    for output in &result.outputs {
        let _ = writeln!(timings, "{} {}", output.name, format_float(output.seconds));
    }
    std::fs::write(out_dir.join("timings.txt"), timings).map_err(|e| Error::Io {
        path: out_dir.join("timings.txt").display().to_string(),
        source: e,
    })?;

    let mut summary = String::new();
    let _ = writeln!(summary, "reference = {}", result.reference);
    if let Some(seed) = args.seed {
        let _ = writeln!(summary, "seed = {seed}");
    }
    if let Some(threads) = args.threads {
        let _ = writeln!(summary, "threads = {threads}");
    }
    for output in &result.outputs {
        let _ = writeln!(
            summary,
            "{}: iterations = {}, converged = {}, final objective = {}",
            output.name,
            output.output.iterations_used,
            output.output.converged,
            output
                .output
                .objective_trace
                .last()
                .map(|v| format_float(*v))
                .unwrap_or_else(|| "n/a".into()),
        );
    }
    let _ = writeln!(summary, "similarity rows: {}", {
        let mut names: Vec<String> = result.outputs.iter().map(|o| o.name.clone()).collect();
        if result.ground_truth.is_some() {
            names.push("GROUND-TRUTH".into());
        }
        names.join(", ")
    });
    std::fs::write(out_dir.join("summary.txt"), summary).map_err(|e| Error::Io {
        path: out_dir.join("summary.txt").display().to_string(),
        source: e,
    })?;
    Ok(())
}

fn permute(args: PermuteArgs) -> Result<()> {
    let mcmc = io::read_parameter_chain(&args.mcmc)?;
    let perms = io::read_permutation_set(&args.perm)?;
    let out = pipeline::permute_mcmc(&mcmc, &perms)?;
    io::write_parameter_chain(&args.out, &out)
}

fn require_key<'m>(map: &'m HashMap<String, String>, key: &str) -> Result<&'m String> {
    map.get(key)
        .ok_or_else(|| Error::Usage(format!("simulate config is missing `{key}`")))
}

fn parse_list(raw: &str, key: &str) -> Result<Vec<f64>> {
    raw.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .map_err(|_| Error::Usage(format!("config key `{key}`: bad value `{}`", tok.trim())))
        })
        .collect()
}

fn expect_len(values: &[f64], len: usize, key: &str) -> Result<()> {
    if values.len() != len {
        return Err(Error::Usage(format!(
            "config key `{key}` needs {len} values, got {}",
            values.len()
        )));
    }
    Ok(())
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let map = parse_config_file(&args.config)?;
    let kind: ModelKind = require_key(&map, "family")?.parse()?;
    let k: usize = require_key(&map, "k")?
        .parse()
        .map_err(|_| Error::Usage("config key `k` must be a positive integer".into()))?;
    let n: usize = require_key(&map, "n")?
        .parse()
        .map_err(|_| Error::Usage("config key `n` must be a positive integer".into()))?;
    let iterations: usize = parse_from_config(&map, "iterations")?.unwrap_or(1100);
    let burn: usize = parse_from_config(&map, "burn")?.unwrap_or(100);
    let seed: u64 = args
        .seed
        .or(parse_from_config(&map, "seed")?)
        .unwrap_or(1);
    let model = ModelFamily { kind, k };

    let mut params = Array2::zeros((k, model.j()));
    match kind {
        ModelKind::UnivariateNormal => {
            let means = parse_list(require_key(&map, "means")?, "means")?;
            let variances = parse_list(require_key(&map, "variances")?, "variances")?;
            let weights = parse_list(require_key(&map, "weights")?, "weights")?;
            expect_len(&means, k, "means")?;
            expect_len(&variances, k, "variances")?;
            expect_len(&weights, k, "weights")?;
            let total: f64 = weights.iter().sum();
            for c in 0..k {
                params[[c, 0]] = means[c];
                params[[c, 1]] = variances[c];
                params[[c, 2]] = weights[c] / total;
            }
        }
        ModelKind::BivariateNormal => {
            let mu1 = parse_list(require_key(&map, "mu1")?, "mu1")?;
            let mu2 = parse_list(require_key(&map, "mu2")?, "mu2")?;
            let s11 = parse_list(require_key(&map, "sigma11")?, "sigma11")?;
            let s22 = parse_list(require_key(&map, "sigma22")?, "sigma22")?;
            let s12 = parse_list(require_key(&map, "sigma12")?, "sigma12")?;
            let weights = parse_list(require_key(&map, "weights")?, "weights")?;
            for (values, key) in [
                (&mu1, "mu1"),
                (&mu2, "mu2"),
                (&s11, "sigma11"),
                (&s22, "sigma22"),
                (&s12, "sigma12"),
                (&weights, "weights"),
            ] {
                expect_len(values, k, key)?;
            }
            let total: f64 = weights.iter().sum();
            for c in 0..k {
                params[[c, 0]] = mu1[c];
                params[[c, 1]] = mu2[c];
                params[[c, 2]] = s11[c];
                params[[c, 3]] = s22[c];
                params[[c, 4]] = s12[c];
                params[[c, 5]] = weights[c] / total;
            }
        }
        ModelKind::PoissonHmm => {
            let lambdas = parse_list(require_key(&map, "lambdas")?, "lambdas")?;
            let transitions = parse_list(require_key(&map, "transitions")?, "transitions")?;
            expect_len(&lambdas, k, "lambdas")?;
            expect_len(&transitions, k * k, "transitions")?;
            for c in 0..k {
                params[[c, 0]] = lambdas[c];
                let row: f64 = transitions[c * k..(c + 1) * k].iter().sum();
                for cc in 0..k {
                    params[[c, 1 + cc]] = transitions[c * k + cc] / row;
                }
            }
        }
    }

    let truth = TruthSpec::new(model, params, n)?;
    let (x, z_true) = samplers::simulate_mixture_data(&truth, seed)?;
    let chain = match kind {
        ModelKind::UnivariateNormal => {
            let prior = NormalMixturePrior::data_scaled(&x);
            gibbs_normal_mixture(&x, k, iterations, burn, seed.wrapping_add(1), &prior)?
        }
        ModelKind::BivariateNormal => {
            let prior = NormalWishartPrior::data_scaled(&x)?;
            gibbs_bivariate_normal_mixture(&x, k, iterations, burn, seed.wrapping_add(1), &prior)?
        }
        ModelKind::PoissonHmm => {
            let prior = PoissonHmmPrior::data_scaled(&x);
            gibbs_poisson_hmm(&x, k, iterations, burn, seed.wrapping_add(1), &prior)?
        }
    };

    let out = &args.out_dir;
    std::fs::create_dir_all(out).map_err(|e| Error::Io {
        path: out.display().to_string(),
        source: e,
    })?;
    io::write_dataset(&out.join("x.lsa"), &x)?;
    io::write_label_vector(&out.join("z_true.lsa"), &z_true)?;
    io::write_parameter_chain(&out.join("mcmc.lsa"), &chain.mcmc)?;
    io::write_allocation_chain(&out.join("z.lsa"), &chain.z)?;
    io::write_classification_chain(&out.join("p.lsa"), &chain.p)?;
    std::fs::write(
        out.join("map_index.txt"),
        format!("{}\n", chain.map_index + 1),
    )
    .map_err(|e| Error::Io {
        path: out.join("map_index.txt").display().to_string(),
        source: e,
    })?;
    let mut summary = String::new();
    let _ = writeln!(summary, "family = {}", kind.name());
    let _ = writeln!(summary, "k = {k}");
    let _ = writeln!(summary, "n = {n}");
    let _ = writeln!(summary, "iterations = {iterations}");
    let _ = writeln!(summary, "burn = {burn}");
    let _ = writeln!(summary, "seed = {seed}");
    let _ = writeln!(summary, "map_index = {}", chain.map_index + 1);
    std::fs::write(out.join("summary.txt"), summary).map_err(|e| Error::Io {
        path: out.join("summary.txt").display().to_string(),
        source: e,
    })?;
    Ok(())
}

fn inject(args: InjectArgs) -> Result<()> {
    let z = io::read_allocation_chain(&args.z, args.k)?;
    let mcmc = args.mcmc.as_deref().map(io::read_parameter_chain).transpose()?;
    let p = args
        .p
        .as_deref()
        .map(io::read_classification_chain)
        .transpose()?;
    let kind: ModelKind = args
        .model
        .as_deref()
        .unwrap_or("normal")
        .parse()?;
    let model = ModelFamily { kind, k: z.k() };

    // assemble a fixture around whatever was supplied; placeholders keep
    // the chain components the caller did not provide
    let (m, n, k) = (z.m(), z.n(), z.k());
    let placeholder_p = || {
        let mut data = ndarray::Array3::zeros((m, n, k));
        for t in 0..m {
            for i in 0..n {
                data[[t, i, 0]] = 1.0;
            }
        }
        ClassificationChain::new(data)
    };
    let placeholder_mcmc = || {
        let mut data = ndarray::Array3::zeros((m, k, model.j()));
        match kind {
            ModelKind::UnivariateNormal => {
                for t in 0..m {
                    for c in 0..k {
                        data[[t, c, 1]] = 1.0;
                        data[[t, c, 2]] = 1.0 / k as f64;
                    }
                }
            }
            ModelKind::BivariateNormal => {
                for t in 0..m {
                    for c in 0..k {
                        data[[t, c, 2]] = 1.0;
                        data[[t, c, 3]] = 1.0;
                        data[[t, c, 5]] = 1.0 / k as f64;
                    }
                }
            }
            ModelKind::PoissonHmm => {
                for t in 0..m {
                    for c in 0..k {
                        data[[t, c, 0]] = 1.0;
                        for cc in 0..k {
                            data[[t, c, 1 + cc]] = 1.0 / k as f64;
                        }
                    }
                }
            }
        }
        ParameterChain::new(data)
    };
    let had_mcmc = mcmc.is_some();
    let had_p = p.is_some();
    let chain = FixtureChain {
        model,
        mcmc: match mcmc {
            Some(c) => c,
            None => placeholder_mcmc()?,
        },
        z,
        p: match p {
            Some(c) => c,
            None => placeholder_p()?,
        },
        map_index: 0,
        x: Dataset::new(Array2::zeros((n, model.data_dim())))?,
        z_true: None,
        seed: args.seed,
    };
    let (switched, applied) = samplers::inject_label_switching(&chain, args.seed)?;

    let out = &args.out_dir;
    std::fs::create_dir_all(out).map_err(|e| Error::Io {
        path: out.display().to_string(),
        source: e,
    })?;
    io::write_allocation_chain(&out.join("z.lsa"), &switched.z)?;
    if had_mcmc {
        io::write_parameter_chain(&out.join("mcmc.lsa"), &switched.mcmc)?;
    }
    if had_p {
        io::write_classification_chain(&out.join("p.lsa"), &switched.p)?;
    }
    io::write_permutation_set(&out.join("permutations_applied.lsa"), &applied)?;
    Ok(())
}

fn map_pivot(args: MapPivotArgs) -> Result<()> {
    let mcmc = io::read_parameter_chain(&args.mcmc)?;
    let kind: ModelKind = args.model.parse()?;
    let model = ModelFamily {
        kind,
        k: mcmc.k(),
    };
    let z = io::read_allocation_chain(&args.z, Some(mcmc.k()))?;
    let x = io::read_dataset(&args.data)?;
    let index = pipeline::select_map_pivot(&model, &mcmc, &z, &x)?;
    println!("{}", index + 1);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_file_parsing() {
        let dir = std::env::temp_dir().join("labelswitch-cli-tests");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("demo.cfg");
        std::fs::write(
            &path,
            "# comment\nmethod = ECR, STEPHENS\nthr-ste = 1e-8\nk = 3\n",
        )
        .unwrap();
        let map = parse_config_file(&path).unwrap();
        assert_eq!(map.get("method").unwrap(), "ECR, STEPHENS");
        assert_eq!(
            parse_from_config::<f64>(&map, "thr-ste").unwrap(),
            Some(1e-8)
        );
        assert_eq!(parse_from_config::<usize>(&map, "k").unwrap(), Some(3));
        assert_eq!(parse_from_config::<usize>(&map, "absent").unwrap(), None);
    }

    #[test]
    fn float_formatting_is_reversible() {
        for v in [1.0 / 3.0, 6.02e23, -0.0, 1e-300] {
            let formatted = format_float(v);
            let back: f64 = formatted.parse().unwrap();
            assert_eq!(back.to_bits(), v.to_bits(), "{formatted}");
        }
    }
}
