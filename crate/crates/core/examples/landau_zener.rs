//! Two-level sweep through an avoided crossing of width 2g against the
//! Landau-Zener survival probability.

use std::f64::consts::PI;

use qpt_anneal::dynamics::{evolve_two_level, IntegratorSettings};
use qpt_anneal::AnnealingSchedule;

fn main() -> qpt_anneal::Result<()> {
    let g = 0.05;
    let (start, end) = (-20.0, 20.0);
    for v in [0.002, 0.005, 0.01, 0.02, 0.05] {
        let schedule = AnnealingSchedule::new(v, 1.0, start, end)?;
        let (rows, _) = evolve_two_level(
            |l| [[l, g], [g, -l]],
            &schedule,
            &[end],
            &IntegratorSettings::default(),
        )?;
        let excited = 1.0 - rows[0].state.population(0);
        println!(
            "υ = {v:<6} 1-p0 = {excited:.6}  exp(-πg²/υ) = {:.6}",
            (-PI * g * g / v).exp()
        );
    }
    Ok(())
}
