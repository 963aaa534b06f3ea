//! Four-point Lagrange interpolation on non-uniform grids.
//!
//! Tables hold several columns sampled on a shared, strictly increasing
//! abscissa. Evaluation at a grid node returns the stored value exactly.

use crate::error::{Error, Result};

/// Start index and weights of the cubic stencil around `x`.
pub fn stencil(xs: &[f64], x: f64) -> Result<(usize, [f64; 4])> {
    let n = xs.len();
    let (lo, hi) = (xs[0], xs[n - 1]);
    if !(x >= lo && x <= hi) {
        return Err(Error::OutOfRange { lambda: x, lo, hi });
    }
    if n < 4 {
        return Err(Error::Scaling(format!(
            "cubic interpolation needs at least 4 nodes, got {n}"
        )));
    }
    // interval i with xs[i] <= x < xs[i+1]
    let i = xs.partition_point(|&v| v <= x).saturating_sub(1).min(n - 2);
    let start = i.saturating_sub(1).min(n - 4);
    let p = &xs[start..start + 4];
    let mut w = [0.0; 4];
    for j in 0..4 {
        let mut num = 1.0;
        let mut den = 1.0;
        for k in 0..4 {
            if k != j {
                num *= x - p[k];
                den *= p[j] - p[k];
            }
        }
        w[j] = num / den;
    }
    Ok((start, w))
}

/// Interpolate a single sampled function; no extrapolation.
pub fn cubic(xs: &[f64], ys: &[f64], x: f64) -> Result<f64> {
    let (start, w) = stencil(xs, x)?;
    Ok((0..4).map(|j| w[j] * ys[start + j]).sum())
}

/// Row-major table: `rows[i]` holds every column at `xs[i]`.
#[derive(Debug, Clone)]
pub struct CubicTable {
    xs: Vec<f64>,
    cols: usize,
    data: Vec<f64>,
}

impl CubicTable {
    pub fn new(xs: Vec<f64>, cols: usize, data: Vec<f64>) -> Result<Self> {
        if xs.len() < 4 {
            return Err(Error::Scaling("table needs at least 4 nodes".into()));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Scaling(
                "table abscissa must be strictly increasing".into(),
            ));
        }
        if data.len() != xs.len() * cols {
            return Err(Error::Scaling(format!(
                "table data has {} entries, expected {}",
                data.len(),
                xs.len() * cols
            )));
        }
        Ok(Self { xs, cols, data })
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn range(&self) -> (f64, f64) {
        (self.xs[0], self.xs[self.xs.len() - 1])
    }

    pub fn eval_into(&self, x: f64, out: &mut [f64]) -> Result<()> {
        let (start, w) = stencil(&self.xs, x)?;
        out.iter_mut().for_each(|o| *o = 0.0);
        for (j, &wj) in w.iter().enumerate() {
            if wj == 0.0 {
                continue;
            }
            for (o, &v) in out.iter_mut().zip(self.row(start + j)) {
                *o += wj * v;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn nodes_are_reproduced_exactly() {
        let xs = vec![-1.0, -0.3, 0.0, 0.1, 0.7, 2.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| x.sin() + 0.1).collect();
        for (x, y) in xs.iter().zip(&ys) {
            assert_eq!(cubic(&xs, &ys, *x).unwrap(), *y);
        }
    }

    #[test]
    fn out_of_range_is_rejected() {
        let xs = vec![0.0, 1.0, 2.0, 3.0];
        assert!(cubic(&xs, &xs, 3.5).is_err());
        assert!(cubic(&xs, &xs, -1e-9).is_err());
    }

    proptest! {
        #[test]
        fn cubics_are_exact(c in prop::array::uniform4(-3.0f64..3.0), x in 0.0f64..1.0) {
            let xs: Vec<f64> = (0..9).map(|i| (i as f64 / 8.0).powi(2)).collect();
            let p = |t: f64| c[0] + t * (c[1] + t * (c[2] + t * c[3]));
            let ys: Vec<f64> = xs.iter().map(|&t| p(t)).collect();
            prop_assert!((cubic(&xs, &ys, x).unwrap() - p(x)).abs() < 1e-11);
        }
    }

    #[test]
    fn table_columns_interpolate_independently() {
        let xs: Vec<f64> = (0..20).map(|i| i as f64 * 0.1).collect();
        let data: Vec<f64> = xs.iter().flat_map(|&x| [x * x, -x, 1.0]).collect();
        let t = CubicTable::new(xs, 3, data).unwrap();
        let mut out = [0.0; 3];
        t.eval_into(0.537, &mut out).unwrap();
        assert!((out[0] - 0.537f64.powi(2)).abs() < 1e-14);
        assert!((out[1] + 0.537).abs() < 1e-14);
        assert!((out[2] - 1.0).abs() < 1e-14);
    }
}
