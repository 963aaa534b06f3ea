//! Final heating against the scaled velocity and its power-law fit.

use qpt_anneal::config::RunConfig;
use qpt_anneal::run::{resolve_grid, simulate_point};
use qpt_anneal::scaling::{fit_power_law, kzm_window, log_grid, Abscissa, FinalSample};

fn main() -> qpt_anneal::Result<()> {
    let lambdas: Vec<String> = log_grid(0.5, 50.0, 15)
        .iter()
        .map(|l| format!("{l:e}"))
        .collect();
    let cfg = RunConfig::parse(&format!(
        "model = tfim\nsize = 64\nscaled_velocity = {}\noutput_points = 11\n",
        lambdas.join(", ")
    ))?;
    let mut samples = Vec::new();
    for p in resolve_grid(&cfg)? {
        let res = simulate_point(&cfg, &cfg.spec(p.n_qubits)?, &p)?;
        let s = FinalSample::from_trace(&res.observables);
        println!(
            "Λ = {:>8.3}  Q_f = {:.4e}  1-p0 = {:.4}",
            s.scaled_velocity, s.q_final, s.p_excited
        );
        samples.push(s);
    }
    let window = kzm_window(&samples)?;
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .map(|s| (s.scaled_velocity, s.q_final))
        .collect();
    let fit = fit_power_law(&pts, window, Abscissa::ScaledVelocity)?;
    println!(
        "Λ ∈ [{:.2}, {:.2}]: slope {:.3} ± {:.3} from {} points",
        fit.window.0, fit.window.1, fit.slope, fit.slope_stderr, fit.samples
    );
    Ok(())
}
