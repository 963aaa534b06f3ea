//! Growing the adapted-basis truncation of the Dicke model until the final
//! heating settles.

use qpt_anneal::config::{ConvergenceAxis, RunConfig};
use qpt_anneal::run::convergence_sweep;

fn main() -> qpt_anneal::Result<()> {
    let cfg = RunConfig::parse("model = dicke\nsize = 8\ntruncation = 4\nvelocity = 0.1\noutput_points = 11\nconverge_gate = 1e-5\n")?;
    let table = convergence_sweep(&cfg, ConvergenceAxis::Truncation, None)?;
    for r in &table.rows {
        println!(
            "M = {:>3}  Q_f = {:.8e}  ΔQ/Q = {:>9}  ΔE0/E0 = {:>9}",
            r.value,
            r.final_q,
            r.q_change.map_or("-".into(), |c| format!("{c:.1e}")),
            r.energy_change.map_or("-".into(), |c| format!("{c:.1e}"))
        );
    }
    println!("converged at {:?}", table.converged);
    Ok(())
}
