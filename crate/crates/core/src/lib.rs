//! Numerical laboratory for the magnetic Aharonov-Bohm setting: fields of
//! current loops, toroidal coils and inert flux rings, electron path phases,
//! the back-reaction of a responsive source on the phase, and two-beam
//! interference patterns.

pub mod backreaction;
pub mod elliptic;
pub mod error;
pub mod geometry;
pub mod interference;
pub mod phase;
pub mod quadrature;
pub mod sources;
pub mod topology;

pub use error::{Error, Result};
pub use geometry::{Circle, Disk, Frame, Rotation, Sample, Trajectory, Vec3};
pub use interference::{BeamGeometry, InterferencePattern, Pairing};
pub use phase::{ElectronState, PhaseResult};
pub use sources::{
    CurrentLoop, FieldSample, FieldSource, InertFluxRing, RingMode, Source, ToroidalCoil,
};
pub use topology::linking_number;
