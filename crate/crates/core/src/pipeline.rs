//! Orchestrator: run any combination of relabelling methods on one MCMC
//! sample, compute single best clusterings, align every method to a common
//! reference, and report pairwise similarities and per-method timings.

use crate::chains::{AllocationChain, ClassificationChain, Dataset, ParameterChain};
use crate::error::{Error, Result};
use crate::methods::{self, MethodOutput, DEFAULT_MAX_ITER, DEFAULT_THRESHOLD};
use crate::models::{Model, ModelFamily};
use crate::perm::{
    mode_per_observation, Permutation, PermutationSet,
};
use ndarray::Array2;
use std::fmt;
use std::time::Instant;

/// The relabelling methods the orchestrator can dispatch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodSpec {
    Stephens,
    Pra,
    Ecr,
    EcrIterative1,
    EcrIterative2,
    Sjw,
    /// Ordering constraint on one parameter type. The name is kept from
    /// the reference implementation's function of the same name.
    Aic,
    DataBased,
    UserPerm,
}

impl MethodSpec {
    pub const ALL: [MethodSpec; 9] = [
        MethodSpec::Stephens,
        MethodSpec::Pra,
        MethodSpec::Ecr,
        MethodSpec::EcrIterative1,
        MethodSpec::EcrIterative2,
        MethodSpec::Sjw,
        MethodSpec::Aic,
        MethodSpec::DataBased,
        MethodSpec::UserPerm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MethodSpec::Stephens => "STEPHENS",
            MethodSpec::Pra => "PRA",
            MethodSpec::Ecr => "ECR",
            MethodSpec::EcrIterative1 => "ECR-ITERATIVE-1",
            MethodSpec::EcrIterative2 => "ECR-ITERATIVE-2",
            MethodSpec::Sjw => "SJW",
            MethodSpec::Aic => "AIC",
            MethodSpec::DataBased => "DATA-BASED",
            MethodSpec::UserPerm => "USER-PERM",
        }
    }
}

impl fmt::Display for MethodSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for MethodSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        MethodSpec::ALL
            .iter()
            .copied()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                Error::Usage(format!(
                    "unknown method `{s}` (expected one of {})",
                    MethodSpec::ALL.map(|m| m.name()).join(", ")
                ))
            })
    }
}

/// Which parameter type the ordering constraint sorts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintChoice {
    /// 0-based parameter type index.
    Index(usize),
    /// Apply all J ordering constraints, one output per parameter type.
    All,
}

impl Default for ConstraintChoice {
    fn default() -> Self {
        ConstraintChoice::Index(0)
    }
}

/// Inputs and options for one orchestrator run, mirroring the flag set of
/// the `relabel` subcommand.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub methods: Vec<MethodSpec>,
    /// One or more allocation pivots for ECR (0-based labels).
    pub zpivots: Vec<Vec<usize>>,
    pub prapivot: Option<Array2<f64>>,
    pub constraint: ConstraintChoice,
    pub ground_truth: Option<Vec<usize>>,
    pub thr_ecr: f64,
    pub thr_ste: f64,
    pub thr_sjw: f64,
    pub max_ecr: usize,
    pub max_ste: usize,
    pub max_sjw: usize,
    /// 0-based initial iteration for the probabilistic method; defaults to
    /// the complete-MAP iteration.
    pub sjw_init: Option<usize>,
    pub user_perms: Vec<PermutationSet>,
    pub model: Option<ModelFamily>,
    pub k: Option<usize>,
}

impl RunConfig {
    pub fn new(methods: Vec<MethodSpec>) -> Self {
        RunConfig {
            methods,
            zpivots: Vec::new(),
            prapivot: None,
            constraint: ConstraintChoice::default(),
            ground_truth: None,
            thr_ecr: DEFAULT_THRESHOLD,
            thr_ste: DEFAULT_THRESHOLD,
            thr_sjw: DEFAULT_THRESHOLD,
            max_ecr: DEFAULT_MAX_ITER,
            max_ste: DEFAULT_MAX_ITER,
            max_sjw: DEFAULT_MAX_ITER,
            sjw_init: None,
            user_perms: Vec::new(),
            model: None,
            k: None,
        }
    }
}

/// One aligned method output.
#[derive(Debug, Clone)]
pub struct MethodResult {
    /// Display name, e.g. `STEPHENS`, `ECR-2`, `AIC-1`.
    pub name: String,
    pub output: MethodOutput,
    /// Aligned single best clustering (0-based labels).
    pub clustering: Vec<usize>,
    /// Wall-clock seconds spent on the reordering computation only.
    pub seconds: f64,
}

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct RelabelResult {
    pub outputs: Vec<MethodResult>,
    /// `f' x f'` proportion of matching allocations between the aligned
    /// clusterings; the last row/column is the ground truth when supplied.
    pub similarity: Array2<f64>,
    /// Human-readable description of the alignment reference.
    pub reference: String,
    pub ground_truth: Option<Vec<usize>>,
}

impl RelabelResult {
    /// Clusterings in similarity order (methods, then ground truth).
    pub fn clusterings(&self) -> Vec<&[usize]> {
        let mut rows: Vec<&[usize]> = self.outputs.iter().map(|o| o.clustering.as_slice()).collect();
        if let Some(gt) = &self.ground_truth {
            rows.push(gt.as_slice());
        }
        rows
    }
}

fn missing(method: MethodSpec, input: &str) -> Error {
    Error::MissingInput {
        method: method.name().to_string(),
        input: input.to_string(),
    }
}

struct Inputs<'a> {
    mcmc: Option<&'a ParameterChain>,
    z: Option<&'a AllocationChain>,
    p: Option<&'a ClassificationChain>,
    x: Option<&'a Dataset>,
}

impl<'a> Inputs<'a> {
    fn mcmc(&self, m: MethodSpec) -> Result<&'a ParameterChain> {
        self.mcmc.ok_or_else(|| missing(m, "mcmc (--mcmc)"))
    }
    fn z(&self, m: MethodSpec) -> Result<&'a AllocationChain> {
        self.z.ok_or_else(|| missing(m, "z (--z)"))
    }
    fn p(&self, m: MethodSpec) -> Result<&'a ClassificationChain> {
        self.p.ok_or_else(|| missing(m, "p (--p)"))
    }
    fn x(&self, m: MethodSpec) -> Result<&'a Dataset> {
        self.x.ok_or_else(|| missing(m, "data (--data)"))
    }
}

fn check_consistency(inputs: &Inputs<'_>) -> Result<()> {
    let mut m_dim: Option<(usize, &str)> = None;
    let mut n_dim: Option<(usize, &str)> = None;
    let mut k_dim: Option<(usize, &str)> = None;
    let check = |dim: &mut Option<(usize, &'static str)>,
                     value: usize,
                     what: &'static str,
                     name: &'static str|
     -> Result<()> {
        match dim {
            Some((v, source)) if *v != value => Err(Error::DimensionMismatch(format!(
                "{what} disagrees between {source} ({v}) and {name} ({value})"
            ))),
            Some(_) => Ok(()),
            None => {
                *dim = Some((value, name));
                Ok(())
            }
        }
    };
    if let Some(mcmc) = inputs.mcmc {
        check(&mut m_dim, mcmc.m(), "m", "mcmc")?;
        check(&mut k_dim, mcmc.k(), "K", "mcmc")?;
    }
    if let Some(z) = inputs.z {
        check(&mut m_dim, z.m(), "m", "z")?;
        check(&mut k_dim, z.k(), "K", "z")?;
        check(&mut n_dim, z.n(), "n", "z")?;
    }
    if let Some(p) = inputs.p {
        check(&mut m_dim, p.m(), "m", "p")?;
        check(&mut k_dim, p.k(), "K", "p")?;
        check(&mut n_dim, p.n(), "n", "p")?;
    }
    if let Some(x) = inputs.x {
        check(&mut n_dim, x.n(), "n", "data")?;
    }
    Ok(())
}

/// Run the selected methods, compute clusterings, align to the reference
/// (ground truth when supplied, else the first method's clustering), and
/// fill the similarity matrix. Timings measure the reordering computation
/// only, excluding input preparation and alignment.
pub fn run(
    config: &RunConfig,
    mcmc: Option<&ParameterChain>,
    z: Option<&AllocationChain>,
    p: Option<&ClassificationChain>,
    x: Option<&Dataset>,
) -> Result<RelabelResult> {
    if config.methods.is_empty() {
        return Err(Error::Usage("no relabelling method selected".into()));
    }
    let inputs = Inputs { mcmc, z, p, x };
    check_consistency(&inputs)?;

    let z_chain = z.ok_or_else(|| {
        Error::InvalidInput(
            "the orchestrator needs the allocation chain `z` to compute single best clusterings"
                .into(),
        )
    })?;
    let k = config.k.unwrap_or_else(|| z_chain.k());
    if k != z_chain.k() {
        return Err(Error::DimensionMismatch(format!(
            "requested K = {k} but allocations imply K = {}",
            z_chain.k()
        )));
    }
    if let Some(gt) = &config.ground_truth {
        if gt.len() != z_chain.n() {
            return Err(Error::DimensionMismatch(format!(
                "ground truth has length {}, n = {}",
                gt.len(),
                z_chain.n()
            )));
        }
        if let Some(&bad) = gt.iter().find(|&&l| l >= k) {
            return Err(Error::LabelOutOfRange { label: bad + 1, k });
        }
    }

    // execute the methods in the user's order, timing only the reordering
    let mut named: Vec<(String, MethodOutput, f64)> = Vec::new();
    for &method in &config.methods {
        match method {
            MethodSpec::Stephens => {
                let p = inputs.p(method)?;
                let start = Instant::now();
                let out = methods::stephens(p, config.thr_ste, config.max_ste)?;
                named.push((method.name().into(), out, start.elapsed().as_secs_f64()));
            }
            MethodSpec::Pra => {
                let mcmc = inputs.mcmc(method)?;
                let pivot = config
                    .prapivot
                    .as_ref()
                    .ok_or_else(|| missing(method, "prapivot (--prapivot)"))?;
                let start = Instant::now();
                let out = methods::pra(mcmc, pivot.view())?;
                named.push((method.name().into(), out, start.elapsed().as_secs_f64()));
            }
            MethodSpec::Ecr => {
                let z = inputs.z(method)?;
                if config.zpivots.is_empty() {
                    return Err(missing(method, "zpivot (--zpivot)"));
                }
                let multiple = config.zpivots.len() > 1;
                for (idx, pivot) in config.zpivots.iter().enumerate() {
                    let start = Instant::now();
                    let out = methods::ecr(z, pivot)?;
                    let name = if multiple {
                        format!("ECR-{}", idx + 1)
                    } else {
                        "ECR".to_string()
                    };
                    named.push((name, out, start.elapsed().as_secs_f64()));
                }
            }
            MethodSpec::EcrIterative1 => {
                let z = inputs.z(method)?;
                let start = Instant::now();
                let out = methods::ecr_iterative_1(z, config.thr_ecr, config.max_ecr)?;
                named.push((method.name().into(), out, start.elapsed().as_secs_f64()));
            }
            MethodSpec::EcrIterative2 => {
                let z = inputs.z(method)?;
                let p = inputs.p(method)?;
                let start = Instant::now();
                let out = methods::ecr_iterative_2(z, p, config.thr_ecr, config.max_ecr)?;
                named.push((method.name().into(), out, start.elapsed().as_secs_f64()));
            }
            MethodSpec::Sjw => {
                let mcmc = inputs.mcmc(method)?;
                let z = inputs.z(method)?;
                let x = inputs.x(method)?;
                let model = config
                    .model
                    .as_ref()
                    .ok_or_else(|| missing(method, "complete (--model)"))?;
                let init = match config.sjw_init {
                    Some(idx) => idx,
                    None => select_map_pivot(model, mcmc, z, x)?,
                };
                let start = Instant::now();
                let out = methods::sjw(
                    mcmc,
                    z,
                    x,
                    model,
                    init,
                    config.thr_sjw,
                    config.max_sjw,
                )?;
                named.push((method.name().into(), out, start.elapsed().as_secs_f64()));
            }
            MethodSpec::Aic => {
                let mcmc = inputs.mcmc(method)?;
                match config.constraint {
                    ConstraintChoice::Index(s) => {
                        let start = Instant::now();
                        let out = methods::ordering_constraint(mcmc, s)?;
                        named.push((method.name().into(), out, start.elapsed().as_secs_f64()));
                    }
                    ConstraintChoice::All => {
                        for s in 0..mcmc.j() {
                            let start = Instant::now();
                            let out = methods::ordering_constraint(mcmc, s)?;
                            named.push((
                                format!("AIC-{}", s + 1),
                                out,
                                start.elapsed().as_secs_f64(),
                            ));
                        }
                    }
                }
            }
            MethodSpec::DataBased => {
                let z = inputs.z(method)?;
                let x = inputs.x(method)?;
                let start = Instant::now();
                let out = methods::data_based(z, x)?;
                named.push((method.name().into(), out, start.elapsed().as_secs_f64()));
            }
            MethodSpec::UserPerm => {
                if config.user_perms.is_empty() {
                    return Err(missing(method, "userPerm (--user-perm)"));
                }
                let multiple = config.user_perms.len() > 1;
                for (idx, set) in config.user_perms.iter().enumerate() {
                    if set.m() != z_chain.m() || set.k() != k {
                        return Err(Error::DimensionMismatch(format!(
                            "user permutation set {} is {} x {}, expected {} x {k}",
                            idx + 1,
                            set.m(),
                            set.k(),
                            z_chain.m()
                        )));
                    }
                    let start = Instant::now();
                    let out = methods::user_perm(set.clone());
                    let name = if multiple {
                        format!("USER-PERM-{}", idx + 1)
                    } else {
                        "USER-PERM".to_string()
                    };
                    named.push((name, out, start.elapsed().as_secs_f64()));
                }
            }
        }
    }

    // single best clusterings, then alignment to the reference
    let mut clusterings: Vec<Vec<usize>> = Vec::with_capacity(named.len());
    for (_, out, _) in &named {
        clusterings.push(single_best_clustering(z_chain, &out.permutations)?);
    }
    let (reference, reference_desc) = match &config.ground_truth {
        Some(gt) => (gt.clone(), "ground truth".to_string()),
        None => (
            clusterings[0].clone(),
            format!("first method ({})", named[0].0),
        ),
    };

    let mut outputs = Vec::with_capacity(named.len());
    for ((name, mut out, seconds), clustering) in named.into_iter().zip(clusterings) {
        let map = align_to_reference(&clustering, &reference, k)?;
        let aligned: Vec<usize> = clustering.iter().map(|&c| map.as_slice()[c]).collect();
        out.permutations = out.permutations.compose_each(&map.invert())?;
        outputs.push(MethodResult {
            name,
            output: out,
            clustering: aligned,
            seconds,
        });
    }

    let mut rows: Vec<&[usize]> = outputs.iter().map(|o| o.clustering.as_slice()).collect();
    if let Some(gt) = &config.ground_truth {
        rows.push(gt.as_slice());
    }
    let similarity = similarity_matrix(&rows)?;

    Ok(RelabelResult {
        outputs,
        similarity,
        reference: reference_desc,
        ground_truth: config.ground_truth.clone(),
    })
}

/// Relabel every iteration by the stored-convention inverse and take the
/// per-observation mode.
pub fn single_best_clustering(
    z: &AllocationChain,
    perms: &PermutationSet,
) -> Result<Vec<usize>> {
    if perms.m() != z.m() || perms.k() != z.k() {
        return Err(Error::DimensionMismatch(format!(
            "permutation set is {} x {}, allocations are {} x {} with K={}",
            perms.m(),
            perms.k(),
            z.m(),
            z.n(),
            z.k()
        )));
    }
    let (m, n, k) = (z.m(), z.n(), z.k());
    let mut relabelled = Array2::zeros((m, n));
    for t in 0..m {
        let inv = perms.permutation(t).invert();
        let map = inv.as_slice();
        for (i, &zi) in z.iteration(t).iter().enumerate() {
            relabelled[[t, i]] = map[zi];
        }
    }
    Ok(mode_per_observation(relabelled.view(), k))
}

/// Label map `g` maximizing the number of positions with
/// `g(cluster[i]) = reference[i]`, solved on the K x K contingency table.
pub fn align_to_reference(
    cluster: &[usize],
    reference: &[usize],
    k: usize,
) -> Result<Permutation> {
    if cluster.len() != reference.len() {
        return Err(Error::DimensionMismatch(format!(
            "clustering has length {}, reference has length {}",
            cluster.len(),
            reference.len()
        )));
    }
    for &l in cluster.iter().chain(reference.iter()) {
        if l >= k {
            return Err(Error::LabelOutOfRange { label: l + 1, k });
        }
    }
    let mut table = Array2::zeros((k, k));
    for (&r, &c) in reference.iter().zip(cluster.iter()) {
        table[[r, c]] += 1.0;
    }
    let res = crate::assignment::solve_max_assignment(table.view())?;
    Ok(res.perm.invert())
}

/// Proportion of matching entries between every pair of clusterings.
/// The inputs are assumed to be aligned already; no per-pair realignment
/// happens here.
pub fn similarity_matrix(clusterings: &[&[usize]]) -> Result<Array2<f64>> {
    let f = clusterings.len();
    if f == 0 {
        return Err(Error::InvalidInput("no clusterings supplied".into()));
    }
    let n = clusterings[0].len();
    for (idx, c) in clusterings.iter().enumerate() {
        if c.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "clustering {} has length {}, expected {n}",
                idx + 1,
                c.len()
            )));
        }
    }
    let mut sim = Array2::zeros((f, f));
    for a in 0..f {
        sim[[a, a]] = 1.0;
        for b in (a + 1)..f {
            let matches = clusterings[a]
                .iter()
                .zip(clusterings[b].iter())
                .filter(|(x, y)| x == y)
                .count();
            let value = matches as f64 / n as f64;
            sim[[a, b]] = value;
            sim[[b, a]] = value;
        }
    }
    Ok(sim)
}

/// Reorder an MCMC sample: `out[t][k][j] = mcmc[t][perms[t][k]][j]`.
pub fn permute_mcmc(mcmc: &ParameterChain, perms: &PermutationSet) -> Result<ParameterChain> {
    if perms.m() != mcmc.m() || perms.k() != mcmc.k() {
        return Err(Error::DimensionMismatch(format!(
            "permutation set is {} x {}, chain is {} x {} x {}",
            perms.m(),
            perms.k(),
            mcmc.m(),
            mcmc.k(),
            mcmc.j()
        )));
    }
    let mut out = mcmc.data().clone();
    for t in 0..mcmc.m() {
        let row = perms.row(t);
        for (c, &l) in row.iter().enumerate() {
            for j in 0..mcmc.j() {
                out[[t, c, j]] = mcmc.data()[[t, l, j]];
            }
        }
    }
    ParameterChain::new(out)
}

/// Index of the iteration with the largest complete log-likelihood
/// (the complete-MAP draw); ties go to the earliest iteration.
pub fn select_map_pivot(
    model: &dyn Model,
    mcmc: &ParameterChain,
    z: &AllocationChain,
    x: &Dataset,
) -> Result<usize> {
    if mcmc.m() != z.m() {
        return Err(Error::DimensionMismatch(format!(
            "mcmc has m = {}, allocations have m = {}",
            mcmc.m(),
            z.m()
        )));
    }
    let mut best: Option<(usize, f64)> = None;
    for t in 0..mcmc.m() {
        let zt = z.iteration(t).to_vec();
        let ll = model.complete_log_likelihood(mcmc.iteration(t), x, &zt)?;
        if ll.is_finite() {
            match best {
                Some((_, best_ll)) if ll <= best_ll => {}
                _ => best = Some((t, ll)),
            }
        }
    }
    best.map(|(t, _)| t).ok_or_else(|| {
        Error::NonFinite("complete log-likelihood is non-finite at every iteration".into())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assignment::brute_force_assignment;
    use ndarray::{array, Array3};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn alloc_chain(rows: Vec<Vec<usize>>, k: usize) -> AllocationChain {
        let m = rows.len();
        let n = rows[0].len();
        let flat: Vec<usize> = rows.into_iter().flatten().collect();
        AllocationChain::new(Array2::from_shape_vec((m, n), flat).unwrap(), k).unwrap()
    }

    #[test]
    fn align_identity_and_inverse() {
        let reference = vec![0, 1, 2, 0, 1, 2];
        let map = align_to_reference(&reference, &reference, 3).unwrap();
        assert!(map.is_identity());

        // cluster = sigma(reference) aligns back with sigma^-1
        let sigma = Permutation::new(vec![1, 2, 0]).unwrap();
        let cluster: Vec<usize> = reference.iter().map(|&c| sigma.as_slice()[c]).collect();
        let map = align_to_reference(&cluster, &reference, 3).unwrap();
        assert_eq!(map, sigma.invert());
        let aligned: Vec<usize> = cluster.iter().map(|&c| map.as_slice()[c]).collect();
        assert_eq!(aligned, reference);
    }

    #[test]
    fn align_matches_exhaustive_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        for _ in 0..50 {
            let cluster: Vec<usize> = (0..40).map(|_| rng.random_range(0..4)).collect();
            let reference: Vec<usize> = (0..40).map(|_| rng.random_range(0..4)).collect();
            let map = align_to_reference(&cluster, &reference, 4).unwrap();
            let matches = |g: &[usize]| {
                cluster
                    .iter()
                    .zip(reference.iter())
                    .filter(|(&c, &r)| g[c] == r)
                    .count()
            };
            let got = matches(map.as_slice());
            // exhaustive 4! search via the brute-force assignment oracle
            let mut table = Array2::zeros((4, 4));
            for (&r, &c) in reference.iter().zip(cluster.iter()) {
                table[[r, c]] += 1.0;
            }
            let oracle = brute_force_assignment(table.view(), true).unwrap();
            assert_eq!(got as f64, oracle.objective);
        }
    }

    #[test]
    fn similarity_trivia() {
        let a = vec![0usize; 100];
        let sim = similarity_matrix(&[&a, &a]).unwrap();
        assert_eq!(sim, array![[1.0, 1.0], [1.0, 1.0]]);

        let mut b = a.clone();
        b[17] = 1;
        let sim = similarity_matrix(&[a.as_slice(), b.as_slice()]).unwrap();
        assert_eq!(sim[[0, 1]], 0.99);
        assert_eq!(sim[[1, 0]], 0.99);
        assert_eq!(sim[[0, 0]], 1.0);
    }

    #[test]
    fn permute_mcmc_round_trip_and_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let data = Array3::from_shape_fn((7, 4, 3), |_| rng.random::<f64>());
        let mcmc = ParameterChain::new(data).unwrap();
        let id = PermutationSet::identity(7, 4);
        assert_eq!(permute_mcmc(&mcmc, &id).unwrap(), mcmc);

        let mut rows = Array2::zeros((7, 4));
        for t in 0..7 {
            let mut map: Vec<usize> = (0..4).collect();
            rand::seq::SliceRandom::shuffle(map.as_mut_slice(), &mut rng);
            for (c, &l) in map.iter().enumerate() {
                rows[[t, c]] = l;
            }
        }
        let set = PermutationSet::from_rows(rows).unwrap();
        let permuted = permute_mcmc(&mcmc, &set).unwrap();
        let restored = permute_mcmc(&permuted, &set.invert()).unwrap();
        assert_eq!(restored, mcmc);
    }

    #[test]
    fn single_best_clustering_trivia() {
        let z = alloc_chain(vec![vec![0, 1, 1], vec![0, 1, 0], vec![0, 1, 1]], 2);
        let id = PermutationSet::identity(3, 2);
        assert_eq!(single_best_clustering(&z, &id).unwrap(), vec![0, 1, 1]);

        // m = 1: the relabelled single allocation itself
        let z1 = alloc_chain(vec![vec![1, 0]], 2);
        let swap = PermutationSet::from_rows(array![[1, 0]]).unwrap();
        // stored row (2,1): inverse swaps the labels back
        assert_eq!(single_best_clustering(&z1, &swap).unwrap(), vec![0, 1]);
    }

    #[test]
    fn map_pivot_trivia() {
        let model = ModelFamily::univariate_normal(2);
        // iteration 2 matches the data; iteration 1 is far off
        let mut data = Array3::zeros((2, 2, 3));
        for (t, (m0, m1)) in [(50.0, -50.0), (-5.0, 5.0)].iter().enumerate() {
            data[[t, 0, 0]] = *m0;
            data[[t, 1, 0]] = *m1;
            data[[t, 0, 1]] = 1.0;
            data[[t, 1, 1]] = 1.0;
            data[[t, 0, 2]] = 0.5;
            data[[t, 1, 2]] = 0.5;
        }
        let mcmc = ParameterChain::new(data).unwrap();
        let z = alloc_chain(vec![vec![0, 1], vec![0, 1]], 2);
        let x = Dataset::univariate(vec![-5.1, 5.2]).unwrap();
        assert_eq!(select_map_pivot(&model, &mcmc, &z, &x).unwrap(), 1);

        // m = 1 returns the only iteration
        let single = ParameterChain::new(Array3::from_shape_fn((1, 2, 3), |(_, c, j)| {
            [[0.0, 1.0, 0.5], [1.0, 1.0, 0.5]][c][j]
        }))
        .unwrap();
        let z1 = alloc_chain(vec![vec![0, 1]], 2);
        assert_eq!(select_map_pivot(&model, &single, &z1, &x).unwrap(), 0);
    }

    #[test]
    fn run_requires_inputs_per_method() {
        let z = alloc_chain(vec![vec![0, 1, 1]], 2);
        let config = RunConfig::new(vec![MethodSpec::Stephens]);
        let err = run(&config, None, Some(&z), None, None).unwrap_err();
        assert!(err.to_string().contains("STEPHENS"));
        assert!(err.to_string().contains("p"));
        assert_eq!(err.exit_code(), 1);

        let config = RunConfig::new(vec![MethodSpec::Ecr]);
        let err = run(&config, None, Some(&z), None, None).unwrap_err();
        assert!(err.to_string().contains("zpivot"));
    }

    #[test]
    fn run_ecr_on_unswitched_chain() {
        let z = alloc_chain(vec![vec![0, 0, 1, 1]; 5], 2);
        let mut config = RunConfig::new(vec![MethodSpec::Ecr]);
        config.zpivots.push(vec![0, 0, 1, 1]);
        let result = run(&config, None, Some(&z), None, None).unwrap();
        assert_eq!(result.outputs.len(), 1);
        assert_eq!(result.outputs[0].name, "ECR");
        for t in 0..5 {
            assert_eq!(
                result.outputs[0].output.permutations.row(t).to_vec(),
                vec![0, 1]
            );
        }
        assert_eq!(result.outputs[0].clustering, vec![0, 0, 1, 1]);
        assert_eq!(result.similarity, array![[1.0]]);
        assert!(result.reference.contains("ECR"));
    }

    #[test]
    fn reference_is_fixed_point_after_alignment() {
        let z = alloc_chain(
            vec![vec![0, 0, 1, 2], vec![1, 1, 2, 0], vec![0, 0, 1, 2]],
            3,
        );
        let mut config = RunConfig::new(vec![MethodSpec::EcrIterative1]);
        config.ground_truth = Some(vec![2, 2, 0, 1]);
        let result = run(&config, None, Some(&z), None, None).unwrap();
        let map = align_to_reference(&result.outputs[0].clustering, &[2, 2, 0, 1], 3).unwrap();
        assert!(map.is_identity());
        // ground truth occupies the last similarity row
        assert_eq!(result.similarity.nrows(), 2);
        assert_eq!(result.similarity[[1, 1]], 1.0);
    }
}
