//! Run every association test on one small probabilistic dataset.
//!
//! ```sh
//! cargo run --release --example single_test
//! ```

use gkw::classic::{dosage, hard_call, kruskal_wallis, ols_slope_test, one_way_anova};
use gkw::dist::{sample_normal, RngState};
use gkw::rank::rank_midrank;
use gkw::simkit::{gen_genotypes, gen_prob_matrix};
use gkw::{gkw_statistic, Method, ProbMatrix};

fn main() {
    // Hard calls and soft calls on a hand-written three-subject block.
    let toy = ProbMatrix::from_rows(&[
        vec![0.925, 0.045, 0.030],
        vec![0.156, 0.102, 0.742],
        vec![0.375, 0.410, 0.215],
    ])
    .unwrap();
    let calls = hard_call(&toy);
    let codes = dosage(&toy);
    println!("subject  p0     p1     p2     hard  soft");
    for j in 0..toy.n() {
        let row = toy.row(j);
        println!(
            "{:>7}  {:.3}  {:.3}  {:.3}  {:>4}  {:.3}",
            j + 1,
            row[0],
            row[1],
            row[2],
            calls.calls[j],
            codes.dosages[j]
        );
    }

    // A larger dataset with real group signal and 20% genotype uncertainty.
    let mut rng = RngState::new(42);
    let n = 120;
    let genotypes = gen_genotypes(n, 0.3, &mut rng).unwrap();
    let pm = gen_prob_matrix(&genotypes, 0.8, &mut rng).unwrap();
    let y: Vec<f64> = genotypes
        .iter()
        .map(|&g| sample_normal(2.0 + 0.4 * g as f64, 1.0, &mut rng).unwrap())
        .collect();
    let rr = rank_midrank(&y).unwrap();

    let hc = hard_call(&pm);
    let hard_codes: Vec<f64> = hc.calls.iter().map(|&g| g as f64).collect();
    let dosages = dosage(&pm).dosages;

    println!("\nn = {n}, effective group sizes {:?}", rounded(&pm.col_sums()));
    println!("test      statistic     df  p-value");
    let results = [
        gkw_statistic(&pm, &rr, true, None).unwrap(),
        kruskal_wallis(&hc.calls, 3, &rr, true)
            .unwrap()
            .tagged(Method::BgKw),
        ols_slope_test(&hard_codes, &y, Method::BgLm).unwrap(),
        one_way_anova(&hc.calls, 3, &y).unwrap(),
        ols_slope_test(&dosages, &y, Method::Dosage).unwrap(),
    ];
    for r in &results {
        println!(
            "{:<8}  {:>10.4}  {:>4}  {:.3e}",
            r.method.tag(),
            r.statistic,
            r.df,
            r.p_value
        );
        for w in &r.warnings {
            println!("          warning: {w}");
        }
    }
}

fn rounded(values: &[f64]) -> Vec<f64> {
    values.iter().map(|v| (v * 10.0).round() / 10.0).collect()
}
