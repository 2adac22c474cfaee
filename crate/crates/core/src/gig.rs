//! Generalized inverse Gaussian law on `(0, inf)`.
//!
//! Density `h(y) = (psi/chi)^{lambda/2} y^{lambda-1} exp{-(psi y + chi/y)/2}
//! / (2 K_lambda(sqrt(psi chi)))`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfun::{dlogk_dnu, log_bessel_k, log_bessel_k_pair};

/// Smallest concentration accepted for either `psi` or `chi`.
pub const PARAM_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GigParams {
    psi: f64,
    chi: f64,
    lambda: f64,
}

/// `E[Y]`, `E[1/Y]` and `E[log Y]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GigMoments {
    pub e_y: f64,
    pub e_inv_y: f64,
    pub e_log_y: f64,
}

impl GigParams {
    pub fn new(psi: f64, chi: f64, lambda: f64) -> Result<Self> {
        if !(psi.is_finite() && chi.is_finite() && lambda.is_finite()) {
            return Err(Error::Domain(format!(
                "GIG parameters must be finite: psi={psi}, chi={chi}, lambda={lambda}"
            )));
        }
        if psi < PARAM_FLOOR || chi < PARAM_FLOOR {
            return Err(Error::Domain(format!(
                "GIG concentrations must be positive: psi={psi}, chi={chi}"
            )));
        }
        Ok(Self { psi, chi, lambda })
    }

    /// The symmetric law `GIG(omega, omega, lambda)` used as the mixing
    /// distribution of the generalized hyperbolic family.
    pub fn symmetric(omega: f64, lambda: f64) -> Result<Self> {
        Self::new(omega, omega, lambda)
    }

    pub fn psi(&self) -> f64 {
        self.psi
    }

    pub fn chi(&self) -> f64 {
        self.chi
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `sqrt(psi chi)`
    pub fn omega(&self) -> f64 {
        (self.psi * self.chi).sqrt()
    }

    /// `sqrt(chi / psi)`
    pub fn eta(&self) -> f64 {
        (self.chi / self.psi).sqrt()
    }

    pub fn log_density(&self, y: f64) -> Result<f64> {
        if !(y > 0.0) || !y.is_finite() {
            return Err(Error::Domain(format!("GIG density needs y > 0, got {y}")));
        }
        let lambda = self.lambda;
        Ok(0.5 * lambda * (self.psi / self.chi).ln() + (lambda - 1.0) * y.ln()
            - std::f64::consts::LN_2
            - log_bessel_k(lambda, self.omega())?
            - 0.5 * (self.psi * y + self.chi / y))
    }

    /// Moments with `E[1/Y]` in the form `K_{l+1}/K_l / eta - 2 l / chi`.
    pub fn moments(&self) -> Result<GigMoments> {
        let omega = self.omega();
        let eta = self.eta();
        let (lk, lk1) = log_bessel_k_pair(self.lambda, omega)?;
        let ratio = (lk1 - lk).exp();
        Ok(GigMoments {
            e_y: eta * ratio,
            e_inv_y: ratio / eta - 2.0 * self.lambda / self.chi,
            e_log_y: eta.ln() + dlogk_dnu(self.lambda, omega)?,
        })
    }

    /// `E[1/Y]` as `K_{l-1}/K_l / eta`, free of cancellation.
    pub fn e_inv_y_direct(&self) -> Result<f64> {
        let omega = self.omega();
        let (lk_m1, lk) = log_bessel_k_pair(self.lambda - 1.0, omega)?;
        Ok((lk_m1 - lk).exp() / self.eta())
    }

    pub fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let omega = self.omega();
        let eta = self.eta();
        let x = standard_draw(self.lambda.abs(), omega, rng);
        if self.lambda < 0.0 {
            eta / x
        } else {
            eta * x
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Result<Vec<f64>> {
        if n == 0 {
            return Err(Error::Input("sample size must be at least 1".into()));
        }
        Ok((0..n).map(|_| self.sample_one(rng)).collect())
    }
}

fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}

fn gig_mode(lambda: f64, omega: f64) -> f64 {
    if lambda >= 1.0 {
        (((lambda - 1.0) * (lambda - 1.0) + omega * omega).sqrt() + (lambda - 1.0)) / omega
    } else {
        omega / (((1.0 - lambda) * (1.0 - lambda) + omega * omega).sqrt() + (1.0 - lambda))
    }
}

/// One draw from the density proportional to
/// `x^{lambda-1} exp{-omega (x + 1/x) / 2}` with `lambda >= 0`.
///
/// Ratio-of-uniforms with or without mode shift, plus a three-piece hat for
/// the non log-concave corner (small `omega`, `lambda < 1`), after Hörmann
/// and Leydold.
fn standard_draw<R: Rng + ?Sized>(lambda: f64, omega: f64, rng: &mut R) -> f64 {
    if lambda > 2.0 || omega > 3.0 {
        rou_shift(lambda, omega, rng)
    } else if lambda >= 1.0 - 2.25 * omega * omega || omega > 0.2 {
        rou_noshift(lambda, omega, rng)
    } else {
        concave_hat(lambda, omega, rng)
    }
}

fn rou_noshift<R: Rng + ?Sized>(lambda: f64, omega: f64, rng: &mut R) -> f64 {
    let t = 0.5 * (lambda - 1.0);
    let s = 0.25 * omega;
    let xm = gig_mode(lambda, omega);
    let nc = t * xm.ln() - s * (xm + 1.0 / xm);
    let ym = ((lambda + 1.0) + ((lambda + 1.0) * (lambda + 1.0) + omega * omega).sqrt()) / omega;
    let um = (0.5 * (lambda + 1.0) * ym.ln() - s * (ym + 1.0 / ym) - nc).exp();
    loop {
        let u = um * rng.random::<f64>();
        let v = open_unit(rng);
        let x = u / v;
        if x > 0.0 && v.ln() <= t * x.ln() - s * (x + 1.0 / x) - nc {
            return x;
        }
    }
}

fn rou_shift<R: Rng + ?Sized>(lambda: f64, omega: f64, rng: &mut R) -> f64 {
    let t = 0.5 * (lambda - 1.0);
    let s = 0.25 * omega;
    let xm = gig_mode(lambda, omega);
    let nc = t * xm.ln() - s * (xm + 1.0 / xm);

    // roots of the cubic giving the bounding rectangle
    let a = -(2.0 * (lambda + 1.0) / omega + xm);
    let b = 2.0 * (lambda - 1.0) * xm / omega - 1.0;
    let c = xm;
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let fi = (-q / (2.0 * (-(p * p * p) / 27.0).sqrt())).clamp(-1.0, 1.0).acos();
    let fak = 2.0 * (-p / 3.0).sqrt();
    let y1 = fak * (fi / 3.0).cos() - a / 3.0;
    let y2 = fak * (fi / 3.0 + 4.0 / 3.0 * std::f64::consts::PI).cos() - a / 3.0;

    let uplus = (y1 - xm) * (t * y1.ln() - s * (y1 + 1.0 / y1) - nc).exp();
    let uminus = (y2 - xm) * (t * y2.ln() - s * (y2 + 1.0 / y2) - nc).exp();

    loop {
        let u = uminus + rng.random::<f64>() * (uplus - uminus);
        let v = open_unit(rng);
        let x = u / v + xm;
        if x > 0.0 && v.ln() <= t * x.ln() - s * (x + 1.0 / x) - nc {
            return x;
        }
    }
}

fn concave_hat<R: Rng + ?Sized>(lambda: f64, omega: f64, rng: &mut R) -> f64 {
    let xm = gig_mode(lambda, omega);
    let x0 = omega / (1.0 - lambda);
    let k0 = ((lambda - 1.0) * xm.ln() - 0.5 * omega * (xm + 1.0 / xm)).exp();
    let a0 = k0 * x0;

    let (k1, a1, k2, a2) = if x0 >= 2.0 / omega {
        let k2 = x0.powf(lambda - 1.0);
        (0.0, 0.0, k2, k2 * 2.0 * (-omega * x0 / 2.0).exp() / omega)
    } else {
        let k1 = (-omega).exp();
        let a1 = if lambda == 0.0 {
            k1 * (2.0 / (omega * omega)).ln()
        } else {
            k1 / lambda * ((2.0 / omega).powf(lambda) - x0.powf(lambda))
        };
        let k2 = (2.0 / omega).powf(lambda - 1.0);
        (k1, a1, k2, k2 * 2.0 * (-1.0f64).exp() / omega)
    };
    let total = a0 + a1 + a2;
    let tail_start = x0.max(2.0 / omega);

    loop {
        let mut v = total * rng.random::<f64>();
        let (x, hx) = if v <= a0 {
            (x0 * v / a0, k0)
        } else {
            v -= a0;
            if v <= a1 {
                if lambda == 0.0 {
                    let x = omega * (omega.exp() * v).exp();
                    (x, k1 / x)
                } else {
                    let x = (x0.powf(lambda) + lambda / k1 * v).powf(1.0 / lambda);
                    (x, k1 * x.powf(lambda - 1.0))
                }
            } else {
                v -= a1;
                let x = -2.0 / omega
                    * ((-omega / 2.0 * tail_start).exp() - omega / (2.0 * k2) * v).ln();
                (x, k2 * (-omega / 2.0 * x).exp())
            }
        };
        if !(x > 0.0) || !x.is_finite() {
            continue;
        }
        let u = rng.random::<f64>() * hx;
        if u.ln() <= (lambda - 1.0) * x.ln() - omega / 2.0 * (x + 1.0 / x) {
            return x;
        }
    }
}
