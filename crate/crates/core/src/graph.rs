//! The constitutive temperature map α of the two-phase Stefan problem, its
//! smooth regularizations α_m, antiderivatives and the φ_h cutoffs.
//!
//! α vanishes on the latent-heat plateau `[-1, 1]` and is affine with slope
//! `slope_liquid` above it and `slope_solid` below it. The regularization
//! α_m agrees with α for `|s| >= 1 + 1/m` and on the band replaces it by the
//! power law
//!
//! ```text
//! α_m(s) = (slope/m) · (|s| / (1 + 1/m))^(m+1) · sign(s)
//! ```
//!
//! which is C¹, odd for symmetric graphs, strictly increasing, and vanishes
//! only at the origin. Its derivative on the band is `slope · (|s|/b)^m`,
//! so it degenerates at `s = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A monotone temperature map `s -> θ(s)` with a (generalized) derivative.
///
/// Implemented by the exact graph and by its regularizations so the solver
/// can step either one.
pub trait Constitutive: Sync {
    fn temperature(&self, s: f64) -> f64;

    /// Derivative, or an element of the generalized derivative at kinks.
    fn slope(&self, s: f64) -> f64;

    /// Enthalpy to store at a Dirichlet node carrying temperature `theta`.
    ///
    /// For graphs with a set-valued inverse `previous` selects the element
    /// closest to the enthalpy the node held before.
    fn enthalpy_for(&self, theta: f64, previous: f64) -> f64;
}

/// The piecewise-linear temperature map with plateau `[-1, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnthalpyGraph {
    slope_solid: f64,
    slope_liquid: f64,
}

impl Default for EnthalpyGraph {
    fn default() -> Self {
        Self::unit()
    }
}

impl EnthalpyGraph {
    /// Both phases with unit conductivity.
    pub fn unit() -> Self {
        Self {
            slope_solid: 1.0,
            slope_liquid: 1.0,
        }
    }

    pub fn new(slope_solid: f64, slope_liquid: f64) -> Result<Self> {
        for (name, v) in [("slope_solid", slope_solid), ("slope_liquid", slope_liquid)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(Self {
            slope_solid,
            slope_liquid,
        })
    }

    pub fn slope_solid(&self) -> f64 {
        self.slope_solid
    }

    pub fn slope_liquid(&self) -> f64 {
        self.slope_liquid
    }

    /// Lipschitz constant of α.
    pub fn lipschitz(&self) -> f64 {
        self.slope_solid.max(self.slope_liquid)
    }

    pub fn is_symmetric(&self) -> bool {
        self.slope_solid == self.slope_liquid
    }

    pub fn alpha(&self, s: f64) -> f64 {
        if s > 1.0 {
            self.slope_liquid * (s - 1.0)
        } else if s < -1.0 {
            self.slope_solid * (s + 1.0)
        } else {
            0.0
        }
    }
}

impl Constitutive for EnthalpyGraph {
    fn temperature(&self, s: f64) -> f64 {
        self.alpha(s)
    }

    fn slope(&self, s: f64) -> f64 {
        if s > 1.0 {
            self.slope_liquid
        } else if s < -1.0 {
            self.slope_solid
        } else {
            0.0
        }
    }

    fn enthalpy_for(&self, theta: f64, previous: f64) -> f64 {
        if theta > 0.0 {
            1.0 + theta / self.slope_liquid
        } else if theta < 0.0 {
            -1.0 + theta / self.slope_solid
        } else {
            previous.clamp(-1.0, 1.0)
        }
    }
}

/// The smooth strictly increasing regularization α_m of an [`EnthalpyGraph`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularizedGraph {
    m: u32,
    base: EnthalpyGraph,
}

impl RegularizedGraph {
    pub fn new(base: EnthalpyGraph, m: u32) -> Result<Self> {
        if m < 1 {
            return Err(Error::invalid("regularization index m must be >= 1"));
        }
        Ok(Self { m, base })
    }

    pub fn unit(m: u32) -> Result<Self> {
        Self::new(EnthalpyGraph::unit(), m)
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn base(&self) -> &EnthalpyGraph {
        &self.base
    }

    /// Half-width `1 + 1/m` of the band on which α_m differs from α.
    pub fn band_edge(&self) -> f64 {
        1.0 + 1.0 / self.m as f64
    }

    fn side_slope(&self, s: f64) -> f64 {
        if s >= 0.0 {
            self.base.slope_liquid
        } else {
            self.base.slope_solid
        }
    }

    fn exponent(&self) -> i32 {
        self.m as i32 + 1
    }

    pub fn alpha_m(&self, s: f64) -> f64 {
        let b = self.band_edge();
        if s.abs() >= b {
            return self.base.alpha(s);
        }
        let mag = self.side_slope(s) / self.m as f64 * (s.abs() / b).powi(self.exponent());
        mag.copysign(s)
    }

    pub fn alpha_m_derivative(&self, s: f64) -> f64 {
        let b = self.band_edge();
        let slope = self.side_slope(s);
        if s.abs() >= b {
            return slope;
        }
        slope * (s.abs() / b).powi(self.m as i32)
    }

    /// The unique `s` with `alpha_m(s) = y`.
    ///
    /// Closed form on every piece; the band inverse is a root of the power law.
    pub fn alpha_m_inverse(&self, y: f64) -> f64 {
        let m = self.m as f64;
        if y >= self.base.slope_liquid / m {
            return 1.0 + y / self.base.slope_liquid;
        }
        if y <= -self.base.slope_solid / m {
            return -1.0 + y / self.base.slope_solid;
        }
        if y == 0.0 {
            return 0.0;
        }
        let slope = self.side_slope(y);
        let r = (m * y.abs() / slope).powf(1.0 / (m + 1.0));
        (self.band_edge() * r).copysign(y)
    }

    /// The antiderivative A_m with `A_m(0) = 0`.
    pub fn antiderivative(&self, s: f64) -> f64 {
        let m = self.m as f64;
        let b = self.band_edge();
        let slope = self.side_slope(s);
        let a = s.abs();
        // ∫_0^a (slope/m)(t/b)^(m+1) dt
        let band = |x: f64| slope / m * b / (m + 2.0) * (x / b).powi(self.exponent() + 1);
        if a <= b {
            band(a)
        } else {
            band(b) + 0.5 * slope * ((a - 1.0).powi(2) - 1.0 / (m * m))
        }
    }
}

impl Constitutive for RegularizedGraph {
    fn temperature(&self, s: f64) -> f64 {
        self.alpha_m(s)
    }

    fn slope(&self, s: f64) -> f64 {
        self.alpha_m_derivative(s)
    }

    fn enthalpy_for(&self, theta: f64, _previous: f64) -> f64 {
        self.alpha_m_inverse(theta)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutoffVariant {
    TwoSided,
    Plus,
    Minus,
}

/// The piecewise-linear cutoff φ_h used to approximate `sign(θ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffProfile {
    variant: CutoffVariant,
    h: f64,
}

impl CutoffProfile {
    pub fn new(variant: CutoffVariant, h: f64) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::invalid(format!("cutoff threshold must be positive, got {h}")));
        }
        Ok(Self { variant, h })
    }

    pub fn variant(&self) -> CutoffVariant {
        self.variant
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    // The ramps are closed at |x| = h so the profile is continuous there.
    fn positive_branch(&self, x: f64) -> f64 {
        let h = self.h;
        if x >= h {
            1.0
        } else if x >= h / 2.0 {
            2.0 / h * x - 1.0
        } else {
            0.0
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self.variant {
            CutoffVariant::TwoSided => {
                if x >= 0.0 {
                    self.positive_branch(x)
                } else {
                    -self.positive_branch(-x)
                }
            }
            CutoffVariant::Plus => {
                if x > 0.0 {
                    self.positive_branch(x)
                } else {
                    0.0
                }
            }
            CutoffVariant::Minus => {
                if x < 0.0 {
                    -self.positive_branch(-x)
                } else {
                    0.0
                }
            }
        }
    }

    /// Pointwise limit as `h -> 0`.
    pub fn limit(variant: CutoffVariant, x: f64) -> f64 {
        let sign = if x > 0.0 {
            1.0
        } else if x < 0.0 {
            -1.0
        } else {
            0.0
        };
        match variant {
            CutoffVariant::TwoSided => sign,
            CutoffVariant::Plus => sign.max(0.0),
            CutoffVariant::Minus => sign.min(0.0),
        }
    }
}
