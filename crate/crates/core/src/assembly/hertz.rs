use std::f64::consts::PI;

use super::Material;
use crate::error::{Error, Result};

/// Hertz law `F = k_H δ^{3/2}` for a sphere pressed onto a flat body.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HertzLaw {
    /// Combined modulus E*, Pa.
    pub effective_modulus: f64,
    pub radius: f64,
    /// k_H = (4/3) E* √R, N/m^{3/2}.
    pub stiffness: f64,
}

impl HertzLaw {
    pub fn new(sphere: &Material, target: &Material, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::invalid(format!("radius must be > 0, got {radius}")));
        }
        let effective_modulus =
            1.0 / (1.0 / sphere.plane_strain_modulus() + 1.0 / target.plane_strain_modulus());
        Ok(HertzLaw {
            effective_modulus,
            radius,
            stiffness: 4.0 / 3.0 * effective_modulus * radius.sqrt(),
        })
    }

    pub fn force(&self, indentation: f64) -> f64 {
        if indentation > 0.0 {
            self.stiffness * indentation * indentation.sqrt()
        } else {
            0.0
        }
    }

    /// Maximum indentation for a mass hitting a rigid half-space at `speed`.
    pub fn peak_indentation(&self, mass: f64, speed: f64) -> f64 {
        (1.25 * mass * speed * speed / self.stiffness).powf(0.4)
    }

    pub fn peak_force(&self, mass: f64, speed: f64) -> f64 {
        self.force(self.peak_indentation(mass, speed))
    }

    /// Classical contact duration on a rigid half-space,
    /// 2.87 (m² / (R E*² v))^{1/5}.
    pub fn rigid_contact_duration(&self, mass: f64, speed: f64) -> f64 {
        2.87 * (mass * mass / (self.radius * self.effective_modulus.powi(2) * speed)).powf(0.2)
    }

    /// Inverse of the tangent stiffness dF/dδ = 1.5 k_H^{2/3} F^{1/3}.
    pub fn tangent_compliance(&self, force: f64) -> f64 {
        1.0 / (1.5 * self.stiffness.powf(2.0 / 3.0) * force.cbrt())
    }

    /// Inverse of the secant stiffness F/δ = k_H^{2/3} F^{1/3}.
    pub fn secant_compliance(&self, force: f64) -> f64 {
        1.0 / (self.stiffness.powf(2.0 / 3.0) * force.cbrt())
    }

    /// Compliance of the linear spring whose rigid-target contact duration
    /// (half period π√(m c)) equals the Hertz duration.
    pub fn duration_matched_compliance(&self, mass: f64, speed: f64) -> f64 {
        let t = self.rigid_contact_duration(mass, speed);
        t * t / (PI * PI * mass)
    }
}

/// How the scalar sphere compliance is derived from the Hertz law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ComplianceRule {
    /// Match the rigid-target Hertz contact duration.
    DurationMatched,
    /// Tangent stiffness at the rigid-target Hertz peak force.
    TangentAtPeak,
    /// Secant stiffness at the rigid-target Hertz peak force.
    SecantAtPeak,
    /// Given value in m/N.
    Fixed(f64),
}

impl ComplianceRule {
    pub fn compliance(&self, law: &HertzLaw, mass: f64, speed: f64) -> f64 {
        match *self {
            ComplianceRule::DurationMatched => law.duration_matched_compliance(mass, speed),
            ComplianceRule::TangentAtPeak => law.tangent_compliance(law.peak_force(mass, speed)),
            ComplianceRule::SecantAtPeak => law.secant_compliance(law.peak_force(mass, speed)),
            ComplianceRule::Fixed(c) => c,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ComplianceRule::DurationMatched => "duration_matched",
            ComplianceRule::TangentAtPeak => "tangent_at_peak",
            ComplianceRule::SecantAtPeak => "secant_at_peak",
            ComplianceRule::Fixed(_) => "fixed",
        }
    }
}
