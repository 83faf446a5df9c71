use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Functional form of the diffusion coefficient `a(z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DiffusionKind {
    /// `a ≡ 1`.
    Constant,
    /// `a(z) = c1 z^α + c2`, the bounding function itself.
    PowerLaw { c1: f64, c2: f64, alpha: f64 },
    /// `a(z) = m z^{m-1}` with `m ≥ 1`, degenerate at `z = 0` when `m > 1`.
    PorousMedium { m: f64 },
}

/// Constants `(c1, c2, α)` with `a(z) ≤ c1 z^α + c2` for every `z ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub c1: f64,
    pub c2: f64,
    pub alpha: f64,
}

impl Certificate {
    /// `c1 z^α + c2`, with `0^0 = 1`.
    pub fn bound_a(&self, z: f64) -> f64 {
        self.c1 * pow0(z, self.alpha) + self.c2
    }

    /// `c1 z^{1+α} / (1+α) + c2 z`, the integrated form of the bound.
    pub fn bound_antiderivative(&self, z: f64) -> f64 {
        self.c1 * z.powf(1.0 + self.alpha) / (1.0 + self.alpha) + self.c2 * z
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffusionLaw {
    pub kind: DiffusionKind,
    pub certificate: Certificate,
}

impl DiffusionLaw {
    pub fn constant() -> Self {
        DiffusionLaw {
            kind: DiffusionKind::Constant,
            certificate: Certificate {
                c1: 0.0,
                c2: 1.0,
                alpha: 0.0,
            },
        }
    }

    pub fn power_law(c1: f64, c2: f64, alpha: f64) -> Result<Self> {
        if !(c1 >= 0.0 && c2 >= 0.0 && c1.is_finite() && c2.is_finite()) {
            return Err(Error::domain(format!(
                "power law needs finite c1, c2 >= 0 (got c1={c1}, c2={c2})"
            )));
        }
        if c1 + c2 <= 0.0 {
            return Err(Error::domain("power law needs c1 + c2 > 0"));
        }
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::domain(format!("power law needs alpha >= 0 (got {alpha})")));
        }
        Ok(DiffusionLaw {
            kind: DiffusionKind::PowerLaw { c1, c2, alpha },
            certificate: Certificate { c1, c2, alpha },
        })
    }

    /// `a(z) = m z^{m-1}`. The certificate is `(c1, c2, α) = (m, 0, m - 1)`,
    /// which is tight.
    pub fn porous_medium(m: f64) -> Result<Self> {
        if !(m >= 1.0 && m.is_finite()) {
            return Err(Error::domain(format!("porous medium exponent must be >= 1 (got {m})")));
        }
        Ok(DiffusionLaw {
            kind: DiffusionKind::PorousMedium { m },
            certificate: Certificate {
                c1: m,
                c2: 0.0,
                alpha: m - 1.0,
            },
        })
    }

    pub fn alpha(&self) -> f64 {
        self.certificate.alpha
    }

    /// True when `a(0) = 0`.
    pub fn is_degenerate(&self) -> bool {
        self.coefficient(0.0) == 0.0
    }

    pub fn eval_a(&self, z: f64) -> Result<f64> {
        check_nonneg(z)?;
        Ok(self.coefficient(z))
    }

    /// `A(z) = ∫_0^z a(s) ds` in closed form.
    pub fn eval_antiderivative(&self, z: f64) -> Result<f64> {
        check_nonneg(z)?;
        Ok(self.antiderivative(z))
    }

    /// Unchecked `a(z)`; callers guarantee `z ≥ 0`.
    #[inline]
    pub fn coefficient(&self, z: f64) -> f64 {
        match self.kind {
            DiffusionKind::Constant => 1.0,
            DiffusionKind::PowerLaw { c1, c2, alpha } => c1 * pow0(z, alpha) + c2,
            DiffusionKind::PorousMedium { m } => m * pow0(z, m - 1.0),
        }
    }

    /// Unchecked `A(z)`; callers guarantee `z ≥ 0`.
    #[inline]
    pub fn antiderivative(&self, z: f64) -> f64 {
        match self.kind {
            DiffusionKind::Constant => z,
            DiffusionKind::PowerLaw { c1, c2, alpha } => {
                c1 * z.powf(1.0 + alpha) / (1.0 + alpha) + c2 * z
            }
            DiffusionKind::PorousMedium { m } => z.powf(m),
        }
    }
}

/// `z^e` with the convention `0^0 = 1`.
#[inline]
pub(crate) fn pow0(z: f64, e: f64) -> f64 {
    if e == 0.0 {
        1.0
    } else {
        z.powf(e)
    }
}

fn check_nonneg(z: f64) -> Result<()> {
    if z >= 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("diffusion law evaluated at z = {z} < 0")))
    }
}
