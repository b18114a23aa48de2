use std::path::{Path, PathBuf};

use ablab::{BeamGeometry, CurrentLoop, InertFluxRing, Pairing, RingMode, Source, ToroidalCoil, Vec3};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub source: SourceSpec,
    #[serde(default)]
    pub beam: BeamSpec,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default)]
    pub outputs: Outputs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceSpec {
    Loop {
        center: [f64; 3],
        normal: [f64; 3],
        radius: f64,
        current: f64,
    },
    Coil {
        center: [f64; 3],
        axis: [f64; 3],
        major_radius: f64,
        minor_radius: f64,
        loop_count: usize,
        /// Exactly one of `linear_charge_density` and `flux` is given; `flux`
        /// is the ideal continuum flux and fixes ρ.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        linear_charge_density: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        flux: Option<f64>,
        liquid_speed: f64,
    },
    InertRing {
        center: [f64; 3],
        axis: [f64; 3],
        major_radius: f64,
        minor_radius: f64,
        flux: f64,
        /// Discrete winding size; absent means the analytic flux tube.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        loop_count: Option<usize>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairingSpec {
    SameSet,
    CrossSet,
}

impl From<PairingSpec> for Pairing {
    fn from(p: PairingSpec) -> Self {
        match p {
            PairingSpec::SameSet => Pairing::SameSet,
            PairingSpec::CrossSet => Pairing::CrossSet,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamSpec {
    pub pairing: PairingSpec,
    pub charge: f64,
    pub slit_separation: f64,
    pub phase_gradient: f64,
    pub fringe_count: usize,
    pub samples: usize,
    pub steps_per_leg: usize,
    pub electron_speed: f64,
    pub beams_per_subbeam: usize,
    pub swap_beams: bool,
}

impl Default for BeamSpec {
    fn default() -> Self {
        BeamSpec {
            pairing: PairingSpec::CrossSet,
            charge: -1.0,
            slit_separation: 1.0,
            phase_gradient: 3.0,
            fringe_count: 4,
            samples: 256,
            steps_per_leg: 32,
            electron_speed: 0.01,
            beams_per_subbeam: 1,
            swap_beams: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Numerics {
    /// Relative tolerance of flux quadratures.
    pub quadrature_tolerance: f64,
    /// Near-wire exclusion radius in units of the loop radius.
    pub near_wire_epsilon: f64,
    /// Steps of the straight flyby used by the Faraday chain suite.
    pub time_steps: usize,
    /// Start distance of that flyby in loop radii.
    pub chain_start_radii: f64,
    /// Seed for the random sample sets of the verification suites.
    pub seed: u64,
}

impl Default for Numerics {
    fn default() -> Self {
        Numerics {
            quadrature_tolerance: ablab::sources::FLUX_REL_TOL,
            near_wire_epsilon: ablab::sources::NEAR_WIRE_EPSILON,
            time_steps: 10_000,
            chain_start_radii: ablab::backreaction::FAR_START,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    /// Default destination of `fields` when `--out` is absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fields_csv: Option<PathBuf>,
    /// Default destination of `fringes` when `--out` is absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fringes_csv: Option<PathBuf>,
}

fn invalid(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Validation(format!("{field}: {msg}"))
}

fn vector(field: &str, a: [f64; 3]) -> Result<Vec3, CliError> {
    Vec3::from_array(a).map_err(|e| invalid(field, e))
}

fn unit(field: &str, a: [f64; 3]) -> Result<Vec3, CliError> {
    let v = vector(field, a)?;
    if (v.norm() - 1.0).abs() > ablab::geometry::UNIT_TOLERANCE {
        return Err(invalid(field, "must be a unit vector"));
    }
    Ok(v)
}

fn positive(field: &str, x: f64) -> Result<(), CliError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, format!("must be positive and finite, got {x}")))
    }
}

fn torus(major: f64, minor: f64) -> Result<(), CliError> {
    positive("source.major_radius", major)?;
    positive("source.minor_radius", minor)?;
    if minor >= major {
        return Err(invalid(
            "source.minor_radius",
            format!("minor_radius ({minor}) must be smaller than major_radius ({major})"),
        ));
    }
    Ok(())
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Parse { source, .. } => CliError::Parse {
                path: path.to_path_buf(),
                source,
            },
            other => other,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let scenario: Scenario = serde_json::from_str(text).map_err(|source| CliError::Parse {
            path: PathBuf::from("<input>"),
            source,
        })?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("scenario serializes");
        s.push('\n');
        s
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let n = &self.numerics;
        positive("numerics.quadrature_tolerance", n.quadrature_tolerance)?;
        positive("numerics.near_wire_epsilon", n.near_wire_epsilon)?;
        positive("numerics.chain_start_radii", n.chain_start_radii)?;
        if n.time_steps < 2 {
            return Err(invalid("numerics.time_steps", "at least 2 steps required"));
        }
        let b = &self.beam;
        positive("beam.slit_separation", b.slit_separation)?;
        positive("beam.phase_gradient", b.phase_gradient)?;
        if !(b.charge.is_finite() && b.charge != 0.0) {
            return Err(invalid("beam.charge", "must be finite and nonzero"));
        }
        if !(b.electron_speed > 0.0 && b.electron_speed < 1.0) {
            return Err(invalid("beam.electron_speed", "must lie in (0, 1)"));
        }
        if let SourceSpec::Coil {
            linear_charge_density,
            flux,
            ..
        } = &self.source
        {
            if linear_charge_density.is_some() == flux.is_some() {
                return Err(invalid(
                    "source.flux",
                    "give exactly one of linear_charge_density and flux",
                ));
            }
        }
        let source = self.build_source()?;
        self.beam_geometry(&source)?;
        Ok(())
    }

    /// The source model; an inert ring in discrete mode is calibrated here,
    /// which costs one flux quadrature.
    pub fn build_source(&self) -> Result<Source, CliError> {
        let eps = self.numerics.near_wire_epsilon;
        match self.source {
            SourceSpec::Loop {
                center,
                normal,
                radius,
                current,
            } => {
                positive("source.radius", radius)?;
                let lp = CurrentLoop::new(vector("source.center", center)?, unit("source.normal", normal)?, radius, current)
                    .and_then(|l| l.with_near_wire_epsilon(eps))
                    .map_err(|e| invalid("source", e))?;
                Ok(Source::Loop(lp))
            }
            SourceSpec::Coil {
                center,
                axis,
                major_radius,
                minor_radius,
                loop_count,
                linear_charge_density,
                flux,
                liquid_speed,
            } => {
                torus(major_radius, minor_radius)?;
                if loop_count == 0 {
                    return Err(invalid("source.loop_count", "must be at least 1"));
                }
                let (c, a) = (vector("source.center", center)?, unit("source.axis", axis)?);
                let coil = match (linear_charge_density, flux) {
                    (Some(rho), None) => {
                        ToroidalCoil::new(c, a, major_radius, minor_radius, loop_count, rho, liquid_speed)
                    }
                    (None, Some(phi)) => {
                        ToroidalCoil::for_flux(c, a, major_radius, minor_radius, loop_count, phi, liquid_speed)
                    }
                    _ => {
                        return Err(invalid(
                            "source.flux",
                            "give exactly one of linear_charge_density and flux",
                        ))
                    }
                }
                .and_then(|coil| coil.with_near_wire_epsilon(eps))
                .map_err(|e| invalid("source", e))?;
                Ok(Source::Coil(coil))
            }
            SourceSpec::InertRing {
                center,
                axis,
                major_radius,
                minor_radius,
                flux,
                loop_count,
            } => {
                torus(major_radius, minor_radius)?;
                let ring = InertFluxRing::new(
                    vector("source.center", center)?,
                    unit("source.axis", axis)?,
                    major_radius,
                    minor_radius,
                    flux,
                )
                .map_err(|e| invalid("source", e))?;
                match loop_count {
                    None => Ok(Source::Ring(ring)),
                    Some(0) => Err(invalid("source.loop_count", "must be at least 1")),
                    Some(n) => Ok(Source::Ring(
                        ring.with_mode(RingMode::Discrete { loop_count: n })
                            .map_err(CliError::Core)?,
                    )),
                }
            }
        }
    }

    pub fn beam_geometry(&self, source: &Source) -> Result<BeamGeometry, CliError> {
        let b = &self.beam;
        let mut geom = BeamGeometry::around(source, b.slit_separation, b.phase_gradient)
            .map_err(|e| invalid("beam", e))?;
        geom.fringe_count = b.fringe_count;
        geom.samples = b.samples;
        geom.steps_per_leg = b.steps_per_leg;
        geom.electron_speed = b.electron_speed;
        geom.beams_per_subbeam = b.beams_per_subbeam;
        geom.swap_beams = b.swap_beams;
        geom.validate().map_err(|e| invalid("beam", e))?;
        Ok(geom)
    }

    pub fn kind(&self) -> &'static str {
        match self.source {
            SourceSpec::Loop { .. } => "loop",
            SourceSpec::Coil { .. } => "coil",
            SourceSpec::InertRing { .. } => "inert_ring",
        }
    }
}
