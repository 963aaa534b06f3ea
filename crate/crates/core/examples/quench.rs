//! One sweep of the LMG model in the instantaneous eigenbasis.

use qpt_anneal::dynamics::{evolve_eigenbasis, output_grid, IntegratorSettings};
use qpt_anneal::observables::{emit_trace, EmitOptions};
use qpt_anneal::spectral::{GridSpec, ReducedSystem, SpectralSweep, SweepOptions};
use qpt_anneal::{AnnealingSchedule, ModelSpec};

fn main() -> qpt_anneal::Result<()> {
    let n = 128;
    let levels = 12;
    let spec = ModelSpec::lmgm(n)?;
    let exps = spec.exponents();
    let grid = GridSpec::default().build(n, &exps, -1.0, 1.0)?;
    let sweep = SpectralSweep::compute(
        &ReducedSystem::critical(&spec)?,
        &grid,
        levels,
        &SweepOptions::default(),
    )?;
    let schedule = AnnealingSchedule::linear(0.05)?;
    let outputs = output_grid(-1.0, 1.0, 21);
    let trace = evolve_eigenbasis(
        &sweep,
        &schedule,
        levels,
        &outputs,
        &exps,
        &IntegratorSettings::default(),
    )?;
    let obs = emit_trace(
        &spec,
        &[trace],
        &schedule,
        &exps,
        &EmitOptions {
            n_report: 3,
            n_levels: levels,
        },
    )?;
    println!("Λ = {:.3}", obs.meta.scaled_velocity);
    println!(
        "{:>8} {:>10} {:>12} {:>10} {:>10}",
        "λ", "x", "Q", "p0", "p2"
    );
    for r in &obs.rows {
        println!(
            "{:>8.3} {:>10.3} {:>12.4e} {:>10.6} {:>10.2e}",
            r.lambda, r.x, r.q, r.p[0], r.p[2]
        );
    }
    Ok(())
}
