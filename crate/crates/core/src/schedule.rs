//! Annealing protocol `λ(t) = υ·sign(t)·|t|^κ` and the scaled coordinates
//! built on top of it.
//!
//! Internally every engine integrates in the *sweep variable*
//! `s = sign(λ)|λ|^{1/κ}`, which is the physical time up to the constant
//! factor `υ^{1/κ}`. For `κ = 1` it is simply `λ`. Using `s` keeps the
//! dynamical phase `∫ Δ dt` free of the `|λ|^{(1-κ)/κ}` weight that is
//! singular at the critical point for `κ > 1`.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnealingSchedule {
    velocity: f64,
    kappa: f64,
    lambda_start: f64,
    lambda_end: f64,
}

impl AnnealingSchedule {
    /// Linear sweep from `λ = -1` to `λ = +1`.
    pub fn linear(velocity: f64) -> Result<Self> {
        Self::new(velocity, 1.0, -1.0, 1.0)
    }

    pub fn new(velocity: f64, kappa: f64, lambda_start: f64, lambda_end: f64) -> Result<Self> {
        if !(velocity.is_finite() && velocity > 0.0) {
            return Err(Error::Schedule(format!(
                "velocity must be positive, got {velocity}"
            )));
        }
        if !(kappa.is_finite() && kappa > 0.0) {
            return Err(Error::Schedule(format!(
                "kappa must be positive, got {kappa}"
            )));
        }
        if !(lambda_start < 0.0 && lambda_end > 0.0) {
            return Err(Error::Schedule(format!(
                "sweep [{lambda_start}, {lambda_end}] must cross λ = 0"
            )));
        }
        Ok(Self {
            velocity,
            kappa,
            lambda_start,
            lambda_end,
        })
    }

    pub fn velocity(&self) -> f64 {
        self.velocity
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn lambda_start(&self) -> f64 {
        self.lambda_start
    }

    pub fn lambda_end(&self) -> f64 {
        self.lambda_end
    }

    pub fn is_linear(&self) -> bool {
        self.kappa == 1.0
    }

    pub fn lambda_of_t(&self, t: f64) -> f64 {
        lambda_of_t(self, t)
    }

    /// Inverse of [`lambda_of_t`]: `t = sign(λ)(|λ|/υ)^{1/κ}`.
    pub fn t_of_lambda(&self, lambda: f64) -> f64 {
        let base = lambda.abs() / self.velocity;
        let mag = if self.is_linear() {
            base
        } else {
            base.powf(1.0 / self.kappa)
        };
        mag.copysign(lambda)
    }

    /// Sweep variable `s = sign(λ)|λ|^{1/κ}`.
    pub fn s_of_lambda(&self, lambda: f64) -> f64 {
        power_map(lambda, 1.0 / self.kappa, self.is_linear())
    }

    /// `λ = sign(s)|s|^κ`.
    pub fn lambda_of_s(&self, s: f64) -> f64 {
        power_map(s, self.kappa, self.is_linear())
    }

    /// `dλ/ds = κ|s|^{κ-1}`.
    pub fn dlambda_ds(&self, s: f64) -> f64 {
        if self.is_linear() {
            1.0
        } else {
            self.kappa * s.abs().powf(self.kappa - 1.0)
        }
    }

    /// `dt/ds = υ^{-1/κ}`, the factor turning `∫Δ ds` into a phase.
    pub fn phase_rate(&self) -> f64 {
        if self.is_linear() {
            1.0 / self.velocity
        } else {
            self.velocity.powf(-1.0 / self.kappa)
        }
    }
}

/// `sign(v)|v|^p`, exact for the linear case.
pub(crate) fn power_map(v: f64, p: f64, linear: bool) -> f64 {
    if linear {
        v
    } else {
        v.abs().powf(p).copysign(v)
    }
}

/// `λ(t) = υ·sign(t)·|t|^κ`.
pub fn lambda_of_t(schedule: &AnnealingSchedule, t: f64) -> f64 {
    let mag = if schedule.is_linear() {
        t.abs()
    } else {
        t.abs().powf(schedule.kappa)
    };
    if t == 0.0 {
        return 0.0;
    }
    (schedule.velocity * mag).copysign(t)
}

/// Critical exponents `ν` and `z`, kept as exact rationals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScalingExponents {
    pub nu: Ratio<i64>,
    pub z: Ratio<i64>,
}

impl ScalingExponents {
    pub fn new(nu: Ratio<i64>, z: Ratio<i64>) -> Result<Self> {
        let zero = Ratio::from_integer(0);
        if nu <= zero || z <= zero {
            return Err(Error::Schedule(format!(
                "exponents must be positive, got ν = {nu}, z = {z}"
            )));
        }
        Ok(Self { nu, z })
    }

    /// Ising chain: `ν = z = 1`.
    pub fn ising() -> Self {
        Self {
            nu: Ratio::from_integer(1),
            z: Ratio::from_integer(1),
        }
    }

    /// Fully connected models (LMGM, Dicke): `ν = 3/2`, `z = 1/3`.
    pub fn fully_connected() -> Self {
        Self {
            nu: Ratio::new(3, 2),
            z: Ratio::new(1, 3),
        }
    }

    pub fn nu_f64(&self) -> f64 {
        ratio_f64(self.nu)
    }

    pub fn z_f64(&self) -> f64 {
        ratio_f64(self.z)
    }

    /// Exact `μ = ν/(1 + zν)` of the linear sweep.
    pub fn mu_linear(&self) -> Ratio<i64> {
        self.nu / (Ratio::from_integer(1) + self.z * self.nu)
    }

    /// `μ = κν/(κνz + 1)`; reduces to [`mu_linear`](Self::mu_linear) at `κ = 1`.
    pub fn mu(&self, kappa: f64) -> f64 {
        if kappa == 1.0 {
            return ratio_f64(self.mu_linear());
        }
        let nu = self.nu_f64();
        kappa * nu / (kappa * nu * self.z_f64() + 1.0)
    }

    /// `1/μ = z + 1/(κν)`.
    pub fn inv_mu(&self, kappa: f64) -> f64 {
        if kappa == 1.0 {
            return ratio_f64(self.mu_linear().recip());
        }
        1.0 / self.mu(kappa)
    }
}

fn ratio_f64(r: Ratio<i64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Scaled velocity `Λ = κ^μ υ^{μ/κ} N`; `N υ^μ` for a linear sweep.
pub fn scaled_velocity(
    n_qubits: usize,
    schedule: &AnnealingSchedule,
    exps: &ScalingExponents,
) -> f64 {
    let n = n_qubits as f64;
    let kappa = schedule.kappa();
    let mu = exps.mu(kappa);
    if schedule.is_linear() {
        return n * schedule.velocity().powf(mu);
    }
    kappa.powf(mu) * schedule.velocity().powf(mu / kappa) * n
}

/// Inverse of [`scaled_velocity`] for fixed `N` and `κ`.
pub fn velocity_for_scaled(
    n_qubits: usize,
    scaled: f64,
    kappa: f64,
    exps: &ScalingExponents,
) -> Result<f64> {
    if !(scaled.is_finite() && scaled > 0.0) {
        return Err(Error::Schedule(format!(
            "scaled velocity must be positive, got {scaled}"
        )));
    }
    let n = n_qubits as f64;
    let mu = exps.mu(kappa);
    if kappa == 1.0 {
        return Ok((scaled / n).powf(1.0 / mu));
    }
    Ok((scaled / (n * kappa.powf(mu))).powf(kappa / mu))
}

/// `x = N^{1/ν} λ`.
pub fn scaled_coordinate(n_qubits: usize, lambda: f64, nu: Ratio<i64>) -> f64 {
    size_factor(n_qubits, nu) * lambda
}

/// `N^{1/ν}`.
pub fn size_factor(n_qubits: usize, nu: Ratio<i64>) -> f64 {
    (n_qubits as f64).powf(ratio_f64(nu.recip()))
}
