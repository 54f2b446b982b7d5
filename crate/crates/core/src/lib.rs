//! Operational-probabilistic theories at desk scale.
//!
//! Three concrete theories share one interface ([`TheoryModel`]): finite
//! classical probability, complex quantum theory and real quantum theory.
//! On top of it sit circuits, state and transformation norms,
//! purification and dilation, the Choi isomorphism and a battery of
//! axiom checks.

pub mod axioms;
pub mod circuit;
pub mod choi;
pub mod cone;
pub mod dilation;
pub mod ec;
pub mod error;
pub mod io;
pub mod linalg;
pub mod lp;
pub mod metrology;
pub mod protocols;
pub mod tensor;
pub mod theory;

pub use circuit::dsl::{parse_script, print_script, DslEnv, DslError, DslErrorKind, Script};
pub use circuit::{compose_par, compose_seq, evaluate, Circuit, Evaluation, Payload, Test};
pub use cone::Cone;
pub use error::{Error, Result};
pub use theory::{
    check_channel, classical_model, model_for, quantum_model, real_quantum_model, ChannelCheck,
    ClassicalModel, EffectVec, HilbertModel, LinearMap, MapClass, MapTag, StateVec, SystemLabel,
    TheoryId, TheoryModel,
};
pub use axioms::{run_battery, AxiomReport, BatteryConfig, CheckId, Verdict};
pub use choi::{faithful_pair, link, retrieve, store, FaithfulPair};
pub use dilation::{purify, stinespring, Dilation, Purification};
pub use ec::{is_correctable, CodeSpec, Correctability};
pub use metrology::{discriminate, state_norm, transformation_norm, SeesawBudget};
pub use protocols::{deterministic_teleport, entanglement_swap, pauli_twirl, TeleportationRun};
pub use linalg::{CMat, CVec, RMat, C64};
