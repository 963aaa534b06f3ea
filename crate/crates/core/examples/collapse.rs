//! Heating traces of two chain lengths at equal scaled velocity.

use qpt_anneal::config::RunConfig;
use qpt_anneal::run::{resolve_grid, simulate_point};
use qpt_anneal::scaling::collapse_metric;

fn main() -> qpt_anneal::Result<()> {
    let cfg = RunConfig::parse("model = tfim\nsize = 40, 80\nscaled_velocity = 4\n")?;
    let traces = resolve_grid(&cfg)?
        .iter()
        .map(|p| Ok(simulate_point(&cfg, &cfg.spec(p.n_qubits)?, p)?.observables))
        .collect::<qpt_anneal::Result<Vec<_>>>()?;
    let r = collapse_metric(&traces[0], &traces[1], (-10.0, 10.0), ("N=40", "N=80"))?;
    println!("{}", serde_json::to_string_pretty(&r)?);
    Ok(())
}
