//! Bessel functions of the first kind `J_ν(x)` for real `ν >= 0`, `x >= 0`.
//!
//! Small and moderate arguments use the ascending series summed in
//! double-double arithmetic, which absorbs the cancellation between its
//! large alternating terms. Large arguments use Hankel's asymptotic
//! expansion. Orders 1/2 and 3/2 have closed forms.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use statrs::function::gamma::gamma;

use crate::error::{Error, Result};

/// Beyond `max(SERIES_LIMIT, 2ν)` the asymptotic expansion is used.
pub const SERIES_LIMIT: f64 = 25.0;

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    fn from(v: f64) -> Self {
        Dd { hi: v, lo: 0.0 }
    }

    fn two_sum(a: f64, b: f64) -> Self {
        let s = a + b;
        let bb = s - a;
        Dd { hi: s, lo: (a - (s - bb)) + (b - bb) }
    }

    fn fast_two_sum(a: f64, b: f64) -> Self {
        let s = a + b;
        Dd { hi: s, lo: b - (s - a) }
    }

    fn two_prod(a: f64, b: f64) -> Self {
        let p = a * b;
        Dd { hi: p, lo: a.mul_add(b, -p) }
    }

    fn add(self, o: Dd) -> Dd {
        let s = Dd::two_sum(self.hi, o.hi);
        let t = Dd::two_sum(self.lo, o.lo);
        let u = Dd::fast_two_sum(s.hi, s.lo + t.hi);
        Dd::fast_two_sum(u.hi, u.lo + t.lo)
    }

    fn mul(self, o: Dd) -> Dd {
        let p = Dd::two_prod(self.hi, o.hi);
        Dd::fast_two_sum(p.hi, p.lo + (self.hi * o.lo + self.lo * o.hi))
    }

    fn div_f64(self, d: f64) -> Dd {
        let q1 = self.hi / d;
        let r = self.add(Dd::two_prod(q1, d).neg());
        let q2 = r.hi / d;
        Dd::fast_two_sum(q1, q2)
    }

    fn div(self, d: Dd) -> Dd {
        let q1 = self.hi / d.hi;
        let r = self.add(d.mul(Dd::from(q1)).neg());
        let q2 = r.hi / d.hi;
        Dd::fast_two_sum(q1, q2)
    }

    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }

    fn value(self) -> f64 {
        self.hi + self.lo
    }
}

fn check(nu: f64, x: f64) -> Result<()> {
    if !(nu >= 0.0 && nu.is_finite()) {
        return Err(Error::InvalidArgument(format!("Bessel order must be finite and >= 0, got {nu}")));
    }
    if !(x >= 0.0 && x.is_finite()) {
        return Err(Error::InvalidArgument(format!("Bessel argument must be finite and >= 0, got {x}")));
    }
    Ok(())
}

/// `Σ_k t_k` and `Σ_k t_k (ν + 2k)` with `t_k = (-x²/4)^k / (k! (ν+1)_k)`.
fn series_sums(nu: f64, x: f64) -> (f64, f64) {
    let y = Dd::two_prod(x, x).div_f64(4.0).neg();
    let mut term = Dd::from(1.0);
    let mut sum = Dd::from(1.0);
    let mut dsum = Dd::from(nu);
    let mut k = 0.0;
    loop {
        k += 1.0;
        let shifted = Dd::two_sum(nu, k);
        term = term.mul(y).div(shifted.mul(Dd::from(k)));
        sum = sum.add(term);
        dsum = dsum.add(term.mul(shifted.add(Dd::from(k))));
        let small = term.hi.abs() * (nu + 2.0 * k) <= 1e-33 * (sum.hi.abs() + dsum.hi.abs());
        if (k * k > -y.hi && small) || k > 500.0 {
            break;
        }
    }
    (sum.value(), dsum.value())
}

fn series_j(nu: f64, x: f64) -> f64 {
    if x == 0.0 {
        return if nu == 0.0 { 1.0 } else { 0.0 };
    }
    let (s, _) = series_sums(nu, x);
    (0.5 * x).powf(nu) / gamma(nu + 1.0) * s
}

fn series_j_prime(nu: f64, x: f64) -> f64 {
    if x == 0.0 {
        return if nu == 0.0 || nu > 1.0 {
            0.0
        } else if nu == 1.0 {
            0.5
        } else {
            f64::INFINITY
        };
    }
    let (_, ds) = series_sums(nu, x);
    0.5 * (0.5 * x).powf(nu - 1.0) / gamma(nu + 1.0) * ds
}

/// Hankel expansion `J_ν(x) ≈ √(2/(πx)) (P cos ω - Q sin ω)`.
fn asymptotic_j(nu: f64, x: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let (mut p, mut q) = (0.0, 0.0);
    let mut term: f64 = 1.0;
    let mut last = f64::INFINITY;
    for k in 0..200 {
        if term.abs() >= last || term.abs() < 1e-18 {
            break;
        }
        last = term.abs();
        // term = a_k(ν) / x^k, with alternating signs by pairs
        match k % 4 {
            0 => p += term,
            1 => q += term,
            2 => p -= term,
            _ => q -= term,
        }
        let odd = (2 * k + 1) as f64;
        term *= (mu - odd * odd) / ((k + 1) as f64 * 8.0 * x);
    }
    let omega_shift = nu * FRAC_PI_2 + FRAC_PI_4;
    let (sx, cx) = x.sin_cos();
    let (ss, cs) = omega_shift.sin_cos();
    let cos_w = cx * cs + sx * ss;
    let sin_w = sx * cs - cx * ss;
    (2.0 / (PI * x)).sqrt() * (p * cos_w - q * sin_w)
}

fn use_series(nu: f64, x: f64) -> bool {
    x <= SERIES_LIMIT.max(2.0 * nu)
}

/// Closed forms for orders 1/2 and 3/2, where they are accurate.
fn half_integer(nu: f64, x: f64) -> Option<(f64, f64)> {
    let amp = || (2.0 / (PI * x)).sqrt();
    if nu == 0.5 && x > 0.0 {
        let (s, c) = x.sin_cos();
        return Some((amp() * s, amp() * (c - s / (2.0 * x))));
    }
    if nu == 1.5 && x >= 0.5 {
        let (s, c) = x.sin_cos();
        let j = amp() * (s / x - c);
        let j_half = amp() * s;
        return Some((j, j_half - 1.5 / x * j));
    }
    None
}

/// `J_ν(x)`.
pub fn bessel_j(nu: f64, x: f64) -> Result<f64> {
    check(nu, x)?;
    if let Some((j, _)) = half_integer(nu, x) {
        return Ok(j);
    }
    Ok(if use_series(nu, x) { series_j(nu, x) } else { asymptotic_j(nu, x) })
}

/// `J_ν'(x)`; infinite at `x = 0` for `0 < ν < 1`.
pub fn bessel_j_prime(nu: f64, x: f64) -> Result<f64> {
    check(nu, x)?;
    if let Some((_, d)) = half_integer(nu, x) {
        return Ok(d);
    }
    Ok(if use_series(nu, x) { series_j_prime(nu, x) } else { nu / x * asymptotic_j(nu, x) - asymptotic_j(nu + 1.0, x) })
}

/// `J_ν` for a fixed order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesselEval {
    pub order: f64,
}

impl BesselEval {
    pub fn new(order: f64) -> Result<Self> {
        check(order, 0.0)?;
        Ok(BesselEval { order })
    }

    pub fn j(&self, x: f64) -> Result<f64> {
        bessel_j(self.order, x)
    }

    pub fn j_prime(&self, x: f64) -> Result<f64> {
        bessel_j_prime(self.order, x)
    }
}
