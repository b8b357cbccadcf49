use labelswitch::models::Model;
use labelswitch::samplers::*;
use labelswitch::models::ModelFamily;
use ndarray::Array2;

fn main() {
    let mut params = Array2::zeros((4, 6));
    for c in 0..4 {
        let angle = c as f64 * std::f64::consts::PI / 4.0;
        params[[c, 0]] = 2.5 * angle.cos();
        params[[c, 1]] = 2.5 * angle.sin();
        params[[c, 2]] = 1.0;
        params[[c, 3]] = 1.0;
        params[[c, 5]] = 0.25;
    }
    let truth = TruthSpec::new(ModelFamily::bivariate_normal(4), params, 100).unwrap();
    let (x, z_true) = simulate_mixture_data(&truth, 42).unwrap();
    let mut counts = [0; 4];
    for &z in &z_true { counts[z] += 1; }
    println!("true counts: {counts:?}");
    let prior = NormalWishartPrior::data_scaled(&x).unwrap();
    let chain = gibbs_bivariate_normal_mixture(&x, 4, 600, 200, 9, &prior).unwrap();
    println!("map_index {}", chain.map_index);
    let t = chain.map_index;
    let p = chain.mcmc.iteration(t);
    for c in 0..4 {
        println!("comp {c}: mu=({:.2},{:.2}) s11={:.2} s22={:.2} s12={:.2} w={:.3}",
            p[[c,0]], p[[c,1]], p[[c,2]], p[[c,3]], p[[c,4]], p[[c,5]]);
    }
    // count allocations at map iteration
    let mut counts = [0; 4];
    for &z in chain.z.iteration(t) { counts[z] += 1; }
    println!("map alloc counts: {counts:?}");
    // check a few random iterations
    for t in [0, 100, 399] {
        let p = chain.mcmc.iteration(t);
        let mus: Vec<String> = (0..4).map(|c| format!("({:.1},{:.1})w{:.2}", p[[c,0]], p[[c,1]], p[[c,5]])).collect();
        println!("t={t}: {}", mus.join(" "));
    }
    // complete log-likelihood of truth params vs map draw
    let model = ModelFamily::bivariate_normal(4);
    let zt: Vec<usize> = chain.z.iteration(t).to_vec();
    println!("L_c at map draw: {:.2}", model.complete_log_likelihood(chain.mcmc.iteration(t), &x, &zt).unwrap());
    println!("L_c at truth:    {:.2}", model.complete_log_likelihood(truth.params.view(), &x, &z_true).unwrap());
}
