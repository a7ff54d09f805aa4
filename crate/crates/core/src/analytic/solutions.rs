//! Closed-form solutions of `-Δu - κ²u = f` used to measure discretization error.

use crate::analytic::bessel::{bessel_j, bessel_j_prime};
use crate::error::{Error, Result};
use crate::mesh::{Point, Rect};
use crate::C64;

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    /// `cos(κr)/κ - c J_0(κr)` with `c` fixing the impedance data to zero.
    Radial { c: C64 },
    /// `J_ξ(κr) cos(ξθ)`, singular at the origin for non-integer `ξ`.
    Corner { xi: f64 },
    /// `Σ c x^a y^b`.
    Polynomial { terms: Vec<(u32, u32, C64)> },
}

/// A solution `u` with its gradient, flux `p = -∇u/(iκ)`, source `f` and boundary datum.
#[derive(Debug, Clone, PartialEq)]
pub struct ManufacturedSolution {
    pub name: String,
    pub kappa: f64,
    pub domain: Rect,
    kind: Kind,
}

fn check_kappa(kappa: f64) -> Result<()> {
    if kappa > 0.0 && kappa.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("wave number must be positive, got {kappa}")))
    }
}

// Arguments are nonnegative by construction; NaN surfaces as non-finite data.
fn j(nu: f64, x: f64) -> f64 {
    bessel_j(nu, x).unwrap_or(f64::NAN)
}

fn jp(nu: f64, x: f64) -> f64 {
    bessel_j_prime(nu, x).unwrap_or(f64::NAN)
}

fn powi(x: f64, k: u32) -> f64 {
    x.powi(k as i32)
}

/// Radial solution on `[-0.5, 0.5]²` with `f = sin(κr)/r`.
pub fn example1(kappa: f64) -> Result<ManufacturedSolution> {
    check_kappa(kappa)?;
    let num = C64::from_polar(1.0, kappa);
    let den = kappa * C64::new(j(0.0, kappa), j(1.0, kappa));
    Ok(ManufacturedSolution {
        name: "ex1".into(),
        kappa,
        domain: Rect::new(-0.5, 0.5, -0.5, 0.5),
        kind: Kind::Radial { c: num / den },
    })
}

/// Homogeneous solution `J_ξ(κr) cos(ξθ)` on `(0,1)×(-0.5,0.5)`, `θ ∈ (-π/2, π/2)`.
pub fn example2(kappa: f64, xi: f64) -> Result<ManufacturedSolution> {
    check_kappa(kappa)?;
    if !(xi > 0.0 && xi.is_finite()) {
        return Err(Error::InvalidArgument(format!("order must be positive, got {xi}")));
    }
    Ok(ManufacturedSolution {
        name: "ex2".into(),
        kappa,
        domain: Rect::new(0.0, 1.0, -0.5, 0.5),
        kind: Kind::Corner { xi },
    })
}

impl ManufacturedSolution {
    /// Polynomial `Σ c x^a y^b` with the matching source term.
    pub fn polynomial(kappa: f64, domain: Rect, terms: Vec<(u32, u32, C64)>) -> Result<Self> {
        check_kappa(kappa)?;
        Ok(ManufacturedSolution { name: "poly".into(), kappa, domain, kind: Kind::Polynomial { terms } })
    }

    /// `u ≡ 0`, `f ≡ 0`.
    pub fn zero(kappa: f64, domain: Rect) -> Result<Self> {
        let mut s = Self::polynomial(kappa, domain, Vec::new())?;
        s.name = "zero".into();
        Ok(s)
    }

    /// Order of the corner solution, if any.
    pub fn xi(&self) -> Option<f64> {
        match self.kind {
            Kind::Corner { xi } => Some(xi),
            _ => None,
        }
    }

    /// Point where derivatives blow up, for graded quadrature.
    pub fn singular_point(&self) -> Option<Point> {
        match self.kind {
            Kind::Corner { xi } if xi.fract() != 0.0 => Some([0.0, 0.0]),
            _ => None,
        }
    }

    pub fn u(&self, p: Point) -> C64 {
        let k = self.kappa;
        match &self.kind {
            Kind::Radial { c } => {
                let r = p[0].hypot(p[1]);
                C64::from((k * r).cos() / k) - c * j(0.0, k * r)
            }
            Kind::Corner { xi } => {
                let r = p[0].hypot(p[1]);
                let theta = p[1].atan2(p[0]);
                C64::from(j(*xi, k * r) * (xi * theta).cos())
            }
            Kind::Polynomial { terms } => terms.iter().map(|&(a, b, c)| c * (powi(p[0], a) * powi(p[1], b))).sum(),
        }
    }

    /// `∇u`; infinite at the origin for the corner solution with `ξ < 1`.
    pub fn grad_u(&self, p: Point) -> [C64; 2] {
        let k = self.kappa;
        let zero = C64::new(0.0, 0.0);
        match &self.kind {
            Kind::Radial { c } => {
                let r = p[0].hypot(p[1]);
                if r == 0.0 {
                    return [zero, zero];
                }
                let du = C64::from(-(k * r).sin()) + c * (k * j(1.0, k * r));
                [du * (p[0] / r), du * (p[1] / r)]
            }
            Kind::Corner { xi } => {
                let r = p[0].hypot(p[1]);
                if r == 0.0 {
                    let gx = if *xi == 1.0 {
                        0.5 * k
                    } else if *xi > 1.0 {
                        0.0
                    } else {
                        f64::INFINITY
                    };
                    return [C64::from(gx), zero];
                }
                let theta = p[1].atan2(p[0]);
                let (st, ct) = theta.sin_cos();
                let (sx, cx) = (xi * theta).sin_cos();
                let radial = k * jp(*xi, k * r) * cx;
                let angular = xi * j(*xi, k * r) / r * sx;
                [C64::from(radial * ct + angular * st), C64::from(radial * st - angular * ct)]
            }
            Kind::Polynomial { terms } => {
                let mut g = [zero, zero];
                for &(a, b, c) in terms {
                    if a > 0 {
                        g[0] += c * (a as f64 * powi(p[0], a - 1) * powi(p[1], b));
                    }
                    if b > 0 {
                        g[1] += c * (b as f64 * powi(p[0], a) * powi(p[1], b - 1));
                    }
                }
                g
            }
        }
    }

    /// Flux `p = -∇u/(iκ)`.
    pub fn p(&self, x: Point) -> [C64; 2] {
        let s = C64::new(0.0, 1.0 / self.kappa);
        let g = self.grad_u(x);
        [g[0] * s, g[1] * s]
    }

    /// Source `f = -Δu - κ²u`.
    pub fn f(&self, p: Point) -> C64 {
        let k = self.kappa;
        match &self.kind {
            Kind::Radial { .. } => {
                let r = p[0].hypot(p[1]);
                if r == 0.0 {
                    C64::from(k)
                } else {
                    C64::from((k * r).sin() / r)
                }
            }
            Kind::Corner { .. } => C64::new(0.0, 0.0),
            Kind::Polynomial { terms } => {
                let mut lap = C64::new(0.0, 0.0);
                for &(a, b, c) in terms {
                    if a > 1 {
                        lap += c * ((a * (a - 1)) as f64 * powi(p[0], a - 2) * powi(p[1], b));
                    }
                    if b > 1 {
                        lap += c * ((b * (b - 1)) as f64 * powi(p[0], a) * powi(p[1], b - 2));
                    }
                }
                -lap - self.u(p) * (k * k)
            }
        }
    }

    /// Source of the first-order system `∇·p + iκu = f/(iκ)`.
    pub fn mixed_source(&self, p: Point) -> C64 {
        self.f(p) / C64::new(0.0, self.kappa)
    }

    /// Boundary datum `-p·n + u`, equal to `(∇u·n + iκu)/(iκ)`.
    pub fn boundary_datum(&self, x: Point, n: [f64; 2]) -> C64 {
        let p = self.p(x);
        -(p[0] * n[0] + p[1] * n[1]) + self.u(x)
    }

    /// Datum `p·n + u` of the minus-sign elliptic projection.
    pub fn boundary_datum_minus(&self, x: Point, n: [f64; 2]) -> C64 {
        let p = self.p(x);
        p[0] * n[0] + p[1] * n[1] + self.u(x)
    }
}
