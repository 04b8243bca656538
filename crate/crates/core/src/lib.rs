pub mod basis;
pub mod calibrate;
pub mod dressed;
pub mod error;
pub mod gates;
pub mod hamiltonian;
pub mod montecarlo;
pub mod ode;
pub mod physics;
pub mod propagator;
pub mod ramps;

pub use basis::{Ket, Level, C64};
pub use dressed::{DressedAnalytics, StartSide};
pub use error::{CalibrationFailure, Error, Result};
pub use hamiltonian::{BDModelParams, TwoAtomOperator};
pub use physics::{AtomDrive, PhysicsParams};
pub use ramps::{ConstantDrive, DriveSchedule, RampSchedule, RampShape};
pub use calibrate::{calibrate_hold, ramp_observables, Adjustable, Calibration, CalibrationReport, CalibrationSpec, RampObservables};
pub use gates::{AngleSet, Axis, GateReport, Protocol};
pub use montecarlo::{FiducialSource, FidelityEstimate, NoiseModel, NoiseRealization, ProtocolSetup, SweepCell};
pub use propagator::{DriveOffsets, InitialState, LogicalBlock, Method, PropagationSettings, TrajectoryResult};
