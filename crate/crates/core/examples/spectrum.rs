//! Lowest levels of the three models across the sweep (for the chain, the
//! critical momentum block).

use qpt_anneal::spectral::diagonalize;
use qpt_anneal::ModelSpec;

fn main() -> qpt_anneal::Result<()> {
    let models = [
        ModelSpec::tfim(8)?,
        ModelSpec::lmgm(32)?,
        ModelSpec::dicke(8, 8)?,
    ];
    for spec in &models {
        println!(
            "{} N={} (dimension {})",
            spec.kind,
            spec.n_qubits,
            spec.effective_dimension()
        );
        for lambda in [-1.0, -0.5, 0.0, 0.5, 1.0] {
            let e = diagonalize(spec, lambda, 4.min(spec.effective_dimension()))?.values;
            let gaps: Vec<String> = e[1..].iter().map(|v| format!("{:.5}", v - e[0])).collect();
            println!(
                "  λ = {lambda:+.1}  E0 = {:+.6}  gaps {}",
                e[0],
                gaps.join(" ")
            );
        }
    }
    Ok(())
}
