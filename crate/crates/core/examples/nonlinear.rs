//! λ(t) = sign(t)|υt|^κ: the same physical sweep through the eigenbasis and
//! the scaled engine.

use qpt_anneal::dynamics::{
    evolve_eigenbasis, evolve_scaled, output_grid, IntegratorSettings, ScaledTables,
};
use qpt_anneal::schedule::{scaled_velocity, size_factor};
use qpt_anneal::spectral::{GridSpec, ReducedSystem, SpectralSweep, SweepOptions};
use qpt_anneal::{AnnealingSchedule, ModelSpec};

fn main() -> qpt_anneal::Result<()> {
    let n = 64;
    let spec = ModelSpec::lmgm(n)?;
    let exps = spec.exponents();
    let grid = GridSpec::default().build(n, &exps, -1.0, 1.0)?;
    let sweep =
        SpectralSweep::compute(&ReducedSystem::lmgm(n)?, &grid, 6, &SweepOptions::default())?;
    let tables = ScaledTables::from_sweep(&sweep, &exps)?;
    let outputs = output_grid(-1.0, 1.0, 9);
    let sf = size_factor(n, exps.nu);
    let x_out: Vec<f64> = outputs.iter().map(|l| sf * l).collect();
    let settings = IntegratorSettings::default();
    for kappa in [1.0, 2.0, 3.0] {
        let schedule = AnnealingSchedule::new(0.05, kappa, -1.0, 1.0)?;
        let lam = scaled_velocity(n, &schedule, &exps);
        let e = evolve_eigenbasis(&sweep, &schedule, 6, &outputs, &exps, &settings)?;
        let s = evolve_scaled(&tables, n, &exps, lam, kappa, -1.0, &x_out, &settings)?;
        println!("κ = {kappa}: Λ = {lam:.4}");
        for (a, b) in e.rows.iter().zip(&s.rows) {
            println!(
                "  λ = {:+.2}  p0 = {:.10} (eigenbasis) {:.10} (scaled)",
                a.lambda(),
                a.state.population(0),
                b.state.population(0)
            );
        }
    }
    Ok(())
}
