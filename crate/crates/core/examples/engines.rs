//! The same quench through every engine.

use qpt_anneal::config::RunConfig;
use qpt_anneal::run::{resolve_grid, simulate_point};

fn main() -> qpt_anneal::Result<()> {
    for (model, engines) in [
        (
            "tfim\nsize = 8",
            &["direct", "eigenbasis", "scaled", "reference"][..],
        ),
        (
            "lmgm\nsize = 16\nlevels = 9",
            &["eigenbasis", "scaled", "reference"][..],
        ),
        (
            "dicke\nsize = 4\ntruncation = 16\nlevels = 16",
            &["eigenbasis", "scaled", "reference"][..],
        ),
    ] {
        for engine in engines {
            let cfg = RunConfig::parse(&format!(
                "model = {model}\nvelocity = 0.1\nengine = {engine}\noutput_points = 11\n"
            ))?;
            let point = &resolve_grid(&cfg)?[0];
            let res = simulate_point(&cfg, &cfg.spec(point.n_qubits)?, point)?;
            let last = res.observables.last();
            println!(
                "{:<6} {:<10} Q_f = {:.10e}  p0 = {:.10}  steps {}",
                cfg.model,
                engine,
                last.q,
                last.p0(),
                res.steps()
            );
        }
    }
    Ok(())
}
