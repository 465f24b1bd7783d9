//! Builds tempered and smoothed labels for increasing decay and evaluates the
//! matching losses for one fixed prediction, including the normalized
//! likelihood that treats smoothed labels as observations.

use mollify::labels::{dirichlet_log_density, one_hot, smooth_label, temper_label};
use mollify::likelihood::{log_normalizer_z, soft_cross_entropy, tempered_log_likelihood, LogProbVector};

fn fmt(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(" ")
}

fn main() -> mollify::Result<()> {
    let classes = 4;
    let y = one_hot(2, classes)?;
    let probs = [0.1, 0.15, 0.6, 0.15];
    let logp = LogProbVector::from_probs(&probs)?;
    let log_z = log_normalizer_z(&logp)?;
    println!("prediction f = [{}], ln Z(f) = {log_z:.6}\n", fmt(&probs));

    println!("{:>5}  {:<24} {:<24} {:>9} {:>9} {:>9} {:>10}", "γ", "tempered", "smoothed", "CE", "−ln p_T", "NLL_Z", "Dir ln p");
    for gamma in [0.0, 0.1, 0.25, 0.5, 0.75, 0.9] {
        let tempered = temper_label(&y, gamma)?;
        let smoothed = smooth_label(&y, gamma)?;
        let ce = soft_cross_entropy(&logp, &smoothed)?;
        let tempered_nll = -tempered_log_likelihood(&logp, y.class_index(), gamma)?;
        // Smoothed-label likelihood Π f^y divided by its normalizer.
        let normalized = ce + log_z;
        let dirichlet = dirichlet_log_density(&probs, &smoothed)?;
        println!(
            "{gamma:>5.2}  {:<24} {:<24} {ce:>9.4} {tempered_nll:>9.4} {normalized:>9.4} {dirichlet:>10.4}",
            fmt(tempered.probs()),
            fmt(smoothed.probs()),
        );
    }

    println!("\nln Z for increasingly confident predictions:");
    for p in [0.25, 0.4, 0.6, 0.8, 0.95, 0.999] {
        let rest = (1.0 - p) / (classes - 1) as f64;
        let mut f = vec![rest; classes];
        f[0] = p;
        println!("  f_0 = {p:<6} ln Z = {:>9.6}", log_normalizer_z(&LogProbVector::from_probs(&f)?)?);
    }
    Ok(())
}
