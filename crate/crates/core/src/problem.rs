//! Coefficients and boundary data of the Helmholtz problem
//! `-div(a ∇u) - κ² u = 0` with `a ∂ₙu - iωβ u = g` on the boundary.

use crate::{Error, Result};
use num_complex::Complex64;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

/// Spatially varying diffusion coefficient `a(x, material)`.
pub type CoefficientFn = Arc<dyn Fn([f64; 2], u32) -> f64 + Send + Sync>;

/// Boundary source `g`.
#[derive(Clone, Debug, PartialEq)]
pub enum BoundarySource {
    /// Data of the exact plane wave `u = exp(-i k d·x)` with `k = ω / (c √a)`,
    /// so that `u` solves the problem for constant coefficients.
    PlaneWaveTrace { direction: [f64; 2] },
    /// `g = iκ (1 - (1, 0)·n) exp(-iκx)`.
    IncomingPlaneWave { kappa: f64 },
    /// `g = iκ exp(-iκx) exp(-y²)` on the boundary side `marker`, zero elsewhere.
    Gaussian { kappa: f64, marker: u32 },
    /// Constant data on every boundary side.
    Constant { re: f64, im: f64 },
    Zero,
}

#[derive(Clone)]
pub struct HelmholtzProblem {
    a: BTreeMap<u32, f64>,
    c: BTreeMap<u32, f64>,
    omega: f64,
    beta: BTreeMap<u32, f64>,
    source: BoundarySource,
    a_field: Option<CoefficientFn>,
}

impl fmt::Debug for HelmholtzProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HelmholtzProblem")
            .field("a", &self.a)
            .field("c", &self.c)
            .field("omega", &self.omega)
            .field("beta", &self.beta)
            .field("source", &self.source)
            .field("a_field", &self.a_field.is_some())
            .finish()
    }
}

impl HelmholtzProblem {
    pub fn new(
        a: BTreeMap<u32, f64>,
        c: BTreeMap<u32, f64>,
        omega: f64,
        beta: BTreeMap<u32, f64>,
        source: BoundarySource,
    ) -> Result<Self> {
        if a.is_empty() || c.is_empty() || beta.is_empty() {
            return Err(Error::Config("coefficient tables must not be empty".into()));
        }
        for (t, &v) in &a {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("a must be positive, got {v} on tag {t}")));
            }
        }
        for (t, &v) in &c {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("c must be positive, got {v} on tag {t}")));
            }
        }
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(Error::Config(format!("omega must be positive, got {omega}")));
        }
        let positive = beta.values().all(|&b| b > 0.0);
        let negative = beta.values().all(|&b| b < 0.0);
        if !(positive || negative) || !beta.values().all(|b| b.is_finite()) {
            return Err(Error::Config("beta must be uniformly positive or uniformly negative".into()));
        }
        match source {
            BoundarySource::PlaneWaveTrace { direction: d } => {
                if ((d[0] * d[0] + d[1] * d[1]).sqrt() - 1.0).abs() > 1e-14 {
                    return Err(Error::Config(format!("plane wave direction {d:?} is not a unit vector")));
                }
            }
            BoundarySource::IncomingPlaneWave { kappa } | BoundarySource::Gaussian { kappa, .. } => {
                if !kappa.is_finite() {
                    return Err(Error::Config("source wavenumber must be finite".into()));
                }
            }
            BoundarySource::Constant { re, im } => {
                if !(re.is_finite() && im.is_finite()) {
                    return Err(Error::Config("constant boundary data must be finite".into()));
                }
            }
            BoundarySource::Zero => {}
        }
        Ok(Self {
            a,
            c,
            omega,
            beta,
            source,
            a_field: None,
        })
    }

    /// Constant coefficients on material tags 0 and 1 and on all four boundary sides.
    pub fn homogeneous(a: f64, c: f64, omega: f64, beta: f64, source: BoundarySource) -> Result<Self> {
        let tags = |v: f64| (0..2).map(|t| (t, v)).collect();
        let sides = (0..4).map(|m| (m, beta)).collect();
        Self::new(tags(a), tags(c), omega, sides, source)
    }

    /// Volume sources are outside the scope of this solver; only `f = 0` is accepted.
    pub fn with_interior_source(self, f: f64) -> Result<Self> {
        if f != 0.0 {
            return Err(Error::Unsupported(
                "nonzero interior source f; only homogeneous interior sources are supported".into(),
            ));
        }
        Ok(self)
    }

    /// Replaces the piecewise constant `a` by a pointwise coefficient.
    pub fn with_a_field(mut self, field: CoefficientFn) -> Self {
        self.a_field = Some(field);
        self
    }

    pub fn with_source(&self, source: BoundarySource) -> Result<Self> {
        let mut p = Self::new(self.a.clone(), self.c.clone(), self.omega, self.beta.clone(), source)?;
        p.a_field = self.a_field.clone();
        Ok(p)
    }

    pub fn with_omega(&self, omega: f64) -> Result<Self> {
        let mut p = Self::new(self.a.clone(), self.c.clone(), omega, self.beta.clone(), self.source.clone())?;
        p.a_field = self.a_field.clone();
        Ok(p)
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn source(&self) -> &BoundarySource {
        &self.source
    }

    pub fn has_a_field(&self) -> bool {
        self.a_field.is_some()
    }

    pub fn a_tag(&self, tag: u32) -> Result<f64> {
        self.a
            .get(&tag)
            .copied()
            .ok_or_else(|| Error::Config(format!("no coefficient a for material tag {tag}")))
    }

    /// Diffusion coefficient at a point of a triangle with the given tag.
    pub fn a_at(&self, x: [f64; 2], tag: u32) -> Result<f64> {
        match &self.a_field {
            Some(f) => Ok(f(x, tag)),
            None => self.a_tag(tag),
        }
    }

    pub fn c_tag(&self, tag: u32) -> Result<f64> {
        self.c
            .get(&tag)
            .copied()
            .ok_or_else(|| Error::Config(format!("no coefficient c for material tag {tag}")))
    }

    /// Wavenumber `κ = ω / c` on a material tag.
    pub fn kappa(&self, tag: u32) -> Result<f64> {
        Ok(self.omega / self.c_tag(tag)?)
    }

    pub fn beta(&self, marker: u32) -> Result<f64> {
        self.beta
            .get(&marker)
            .copied()
            .ok_or_else(|| Error::Config(format!("no coefficient beta for boundary marker {marker}")))
    }

    /// Exact solution belonging to a plane-wave trace source, evaluated with
    /// the coefficients of material `tag`.
    pub fn exact_solution(&self, x: [f64; 2], tag: u32) -> Option<Complex64> {
        match self.source {
            BoundarySource::PlaneWaveTrace { direction: d } => {
                let k = self.plane_wave_k(tag).ok()?;
                Some(Complex64::new(0.0, -k * (d[0] * x[0] + d[1] * x[1])).exp())
            }
            BoundarySource::Zero => Some(Complex64::new(0.0, 0.0)),
            _ => None,
        }
    }

    fn plane_wave_k(&self, tag: u32) -> Result<f64> {
        Ok(self.kappa(tag)? / self.a_tag(tag)?.sqrt())
    }

    /// Boundary data `g` at `x` with outward normal `n` on a facet with the
    /// given boundary marker, adjacent to a triangle with material `tag`.
    pub fn eval_g(&self, x: [f64; 2], n: [f64; 2], marker: u32, tag: u32) -> Result<Complex64> {
        let i = Complex64::new(0.0, 1.0);
        Ok(match self.source {
            BoundarySource::PlaneWaveTrace { direction: d } => {
                let a = self.a_tag(tag)?;
                let k = self.plane_wave_k(tag)?;
                let u = Complex64::new(0.0, -k * (d[0] * x[0] + d[1] * x[1])).exp();
                let dn = d[0] * n[0] + d[1] * n[1];
                -i * k * dn * a * u - i * self.omega * self.beta(marker)? * u
            }
            BoundarySource::IncomingPlaneWave { kappa } => {
                i * kappa * (1.0 - n[0]) * Complex64::new(0.0, -kappa * x[0]).exp()
            }
            BoundarySource::Gaussian { kappa, marker: side } => {
                if marker == side {
                    i * kappa * Complex64::new(0.0, -kappa * x[0]).exp() * (-x[1] * x[1]).exp()
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }
            BoundarySource::Constant { re, im } => Complex64::new(re, im),
            BoundarySource::Zero => Complex64::new(0.0, 0.0),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::marker;

    fn unit(source: BoundarySource) -> HelmholtzProblem {
        HelmholtzProblem::homogeneous(1.0, 1.0, 1.0, 1.0, source).unwrap()
    }

    #[test]
    fn plane_wave_value() {
        let p = unit(BoundarySource::PlaneWaveTrace { direction: [0.6, 0.8] });
        let g = p.eval_g([0.0, 0.0], [-1.0, 0.0], marker::LEFT, 0).unwrap();
        assert!((g - Complex64::new(0.0, -0.4)).norm() < 1e-15);
    }

    #[test]
    fn incoming_wave_vanishes_on_right() {
        let p = unit(BoundarySource::IncomingPlaneWave { kappa: 1.0 });
        let g = p.eval_g([3.0, 0.2], [1.0, 0.0], marker::RIGHT, 0).unwrap();
        assert_eq!(g, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn gaussian_on_left_side() {
        let jx = 10.0;
        let p = unit(BoundarySource::Gaussian {
            kappa: 2.0,
            marker: marker::LEFT,
        });
        let x = -jx / 2.0;
        let g = p.eval_g([x, 0.0], [-1.0, 0.0], marker::LEFT, 0).unwrap();
        let want = Complex64::new(0.0, 2.0) * Complex64::new(0.0, -2.0 * x).exp();
        assert!((g - want).norm() < 1e-14);
        assert_eq!(p.eval_g([x, 0.0], [0.0, 1.0], marker::TOP, 0).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn zero_source() {
        let p = unit(BoundarySource::Zero);
        assert_eq!(p.eval_g([0.3, 0.1], [0.0, -1.0], 0, 0).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn invalid_coefficients_rejected() {
        assert!(HelmholtzProblem::homogeneous(-1.0, 1.0, 1.0, 1.0, BoundarySource::Zero).is_err());
        assert!(HelmholtzProblem::homogeneous(1.0, 0.0, 1.0, 1.0, BoundarySource::Zero).is_err());
        let mixed = [(0, 1.0), (1, -1.0)].into_iter().collect();
        let tags: BTreeMap<u32, f64> = [(0, 1.0)].into_iter().collect();
        assert!(HelmholtzProblem::new(tags.clone(), tags, 1.0, mixed, BoundarySource::Zero).is_err());
        assert!(HelmholtzProblem::homogeneous(1.0, 1.0, 1.0, 1.0, BoundarySource::PlaneWaveTrace {
            direction: [1.0, 1.0]
        })
        .is_err());
    }

    #[test]
    fn interior_source_rejected() {
        let p = unit(BoundarySource::Zero);
        assert!(p.clone().with_interior_source(0.0).is_ok());
        assert!(matches!(p.with_interior_source(1.0), Err(Error::Unsupported(_))));
    }

    #[test]
    fn negative_beta_accepted() {
        let p = HelmholtzProblem::homogeneous(1.0, 1.0, 2.0, -1.0, BoundarySource::Zero).unwrap();
        assert_eq!(p.beta(3).unwrap(), -1.0);
        assert_eq!(p.kappa(0).unwrap(), 2.0);
    }
}
