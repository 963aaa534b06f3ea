//! C(x) and D(x) of the Ising chain at two sizes, against the
//! thermodynamic-limit forms.

use std::f64::consts::PI;

use qpt_anneal::scaling::extract_critical_functions;
use qpt_anneal::spectral::{GridSpec, SweepOptions};
use qpt_anneal::ModelSpec;

fn main() -> qpt_anneal::Result<()> {
    let specs = [ModelSpec::tfim(40)?, ModelSpec::tfim(160)?];
    let tables = extract_critical_functions(
        &specs,
        (-1.0, 1.0),
        &[(1, 0)],
        &GridSpec::default(),
        &SweepOptions::default(),
    )?;
    let table = &tables[0];
    println!(
        "{:>6} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10}",
        "x", "C_40", "C_160", "C_inf", "D_40", "D_160", "D_inf"
    );
    for x in [-20.0, -10.0, -5.0, -2.0, 0.0, 2.0, 5.0, 10.0, 20.0] {
        let c: Vec<f64> = table
            .curves
            .iter()
            .map(|k| k.c_at(x).map(f64::abs))
            .collect::<Result<_, _>>()?;
        let d: Vec<f64> = table
            .curves
            .iter()
            .map(|k| k.d_at(x))
            .collect::<Result<_, _>>()?;
        let r2 = x * x + PI * PI;
        println!(
            "{x:>6.1} {:>10.6} {:>10.6} {:>10.6} {:>10.4} {:>10.4} {:>10.4}",
            c[0],
            c[1],
            0.5 * PI / r2,
            d[0],
            d[1],
            2.0 * r2.sqrt()
        );
    }
    Ok(())
}
