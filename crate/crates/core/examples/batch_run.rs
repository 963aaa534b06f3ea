//! Config-driven batch run with collapse and fit analyses.

use qpt_anneal::config::RunConfig;
use qpt_anneal::run::run;

fn main() -> qpt_anneal::Result<()> {
    let out = std::env::temp_dir().join("qpt-anneal-batch");
    let cfg = RunConfig::parse(&format!(
        "model = lmgm
size = 32, 64
scaled_velocity = 0.5, 1, 2, 4, 8, 16
output_points = 201
collapse = true
fit = true
out = {}
",
        out.display()
    ))?;
    let report = run(&cfg)?;
    for p in &report.points {
        println!("{:<24} Q_f = {:?}", p.dir.display().to_string(), p.final_q);
    }
    for c in &report.collapses {
        println!("collapse {c:?}");
    }
    for f in &report.fits {
        println!("fit {f:?}");
    }
    println!("wrote {}", out.join("report.json").display());
    Ok(())
}
