//! Matrix elements of the displacement operator between Fock states.

/// Generalized Laguerre polynomial `L_n^{(a)}(x)` by the three-term recurrence.
pub fn laguerre(n: usize, a: f64, x: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 1.0 + a - x;
    for k in 1..n {
        let k = k as f64;
        let next = ((2.0 * k + 1.0 + a - x) * cur - (k + a) * prev) / (k + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// `⟨k'|D(α)|k⟩` for real `α`, with `D(α) = exp(α(a† - a))`.
pub fn displaced_overlap(k_out: usize, k_in: usize, alpha: f64) -> f64 {
    let a2 = alpha * alpha;
    let (lo, hi, sign_alpha) = if k_out >= k_in {
        (k_in, k_out, alpha)
    } else {
        (k_out, k_in, -alpha)
    };
    let d = hi - lo;
    // sqrt(lo!/hi!) without overflow
    let mut ratio = 1.0;
    for j in lo + 1..=hi {
        ratio /= (j as f64).sqrt();
    }
    ratio * sign_alpha.powi(d as i32) * (-0.5 * a2).exp() * laguerre(lo, d as f64, a2)
}
