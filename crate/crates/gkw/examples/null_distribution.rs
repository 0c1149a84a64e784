//! Monte Carlo null reference distribution of the statistic.
//!
//! Fixes one probability matrix, draws random rank permutations, and
//! compares the empirical null against the chi-square(2) asymptotics.
//!
//! ```sh
//! cargo run --release --example null_distribution
//! ```

use gkw::dist::{chi2_quantile, chi2_sf, ks_uniform, RngState};
use gkw::gkw::gkw_null_statistics;
use gkw::simkit::{gen_genotypes, gen_prob_matrix};

fn main() {
    let mut rng = RngState::new(2024);
    let n = 1000;
    let genotypes = gen_genotypes(n, 0.2, &mut rng).unwrap();
    let pm = gen_prob_matrix(&genotypes, 0.8, &mut rng).unwrap();

    let n_perm = 10_000;
    let stats = gkw_null_statistics(&pm, n_perm, 7).unwrap();

    let mean: f64 = stats.iter().sum::<f64>() / n_perm as f64;
    println!("permutations: {n_perm}");
    println!("empirical mean {mean:.4} (chi-square(2) mean: 2)");

    let mut sorted = stats.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for q in [0.5, 0.9, 0.95, 0.99] {
        let idx = ((n_perm as f64 * q) as usize).min(n_perm - 1);
        let theoretical = chi2_quantile(q, 2).unwrap();
        println!(
            "quantile {q:>4}: empirical {:>7.4}  chi2(2) {:>7.4}",
            sorted[idx], theoretical
        );
    }

    let pvals: Vec<f64> = stats.iter().map(|&s| chi2_sf(s, 2).unwrap()).collect();
    let (d, p) = ks_uniform(&pvals).unwrap();
    println!("KS uniformity of null p-values: D = {d:.4}, p = {p:.3}");
}
