//! Systems, coordinate vectors and the pluggable model-theory interface.

mod basis;
mod classical;
mod hilbert;

use std::fmt;
use std::str::FromStr;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::cone::Cone;
use crate::error::{check_len, Error, Result};
use crate::linalg::{CMat, RMat};

pub use basis::HermBasis;
pub use classical::ClassicalModel;
pub use hilbert::{paulis, HilbertModel};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TheoryId {
    Classical,
    Quantum,
    RealQuantum,
}

impl TheoryId {
    pub const ALL: [TheoryId; 3] = [TheoryId::Quantum, TheoryId::Classical, TheoryId::RealQuantum];

    pub fn as_str(self) -> &'static str {
        match self {
            TheoryId::Classical => "classical",
            TheoryId::Quantum => "quantum",
            TheoryId::RealQuantum => "real-quantum",
        }
    }
}

impl fmt::Display for TheoryId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TheoryId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "classical" => Ok(TheoryId::Classical),
            "quantum" => Ok(TheoryId::Quantum),
            "real-quantum" => Ok(TheoryId::RealQuantum),
            other => Err(Error::invalid(format!("unknown theory '{other}'"))),
        }
    }
}

/// A wire type: theory plus an ordered list of atomic factor dimensions.
/// The empty factor list is the trivial system.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SystemLabel {
    pub theory: TheoryId,
    #[serde(rename = "dims")]
    pub factors: Vec<usize>,
}

impl SystemLabel {
    pub fn atom(theory: TheoryId, d: usize) -> Self {
        Self {
            theory,
            factors: vec![d],
        }
    }

    pub fn trivial(theory: TheoryId) -> Self {
        Self {
            theory,
            factors: Vec::new(),
        }
    }

    pub fn composite(theory: TheoryId, factors: Vec<usize>) -> Self {
        Self { theory, factors }
    }

    /// Simplex size (classical) or Hilbert-space dimension.
    pub fn local_dim(&self) -> usize {
        self.factors.iter().product()
    }

    /// `D(A) = dim S_R(A)`.
    pub fn coord_dim(&self) -> usize {
        let n = self.local_dim();
        match self.theory {
            TheoryId::Classical => n,
            TheoryId::Quantum => n * n,
            TheoryId::RealQuantum => n * (n + 1) / 2,
        }
    }

    /// Coordinate dimension of each factor taken alone.
    pub fn factor_coord_dims(&self) -> Vec<usize> {
        self.factors
            .iter()
            .map(|&d| SystemLabel::atom(self.theory, d).coord_dim())
            .collect()
    }

    pub fn is_trivial(&self) -> bool {
        self.local_dim() == 1
    }

    pub fn tensor(&self, other: &SystemLabel) -> Result<SystemLabel> {
        if self.theory != other.theory {
            return Err(Error::invalid(format!(
                "cannot compose {} with {}",
                self.theory, other.theory
            )));
        }
        let mut factors = self.factors.clone();
        factors.extend_from_slice(&other.factors);
        Ok(SystemLabel::composite(self.theory, factors))
    }

    pub fn sub(&self, keep: &[usize]) -> SystemLabel {
        SystemLabel::composite(self.theory, keep.iter().map(|&i| self.factors[i]).collect())
    }
}

impl fmt::Display for SystemLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let dims: Vec<String> = self.factors.iter().map(|d| d.to_string()).collect();
        write!(f, "{}[{}]", self.theory, dims.join("x"))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVec {
    pub system: SystemLabel,
    pub coords: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EffectVec {
    pub system: SystemLabel,
    pub coords: Vec<f64>,
}

impl StateVec {
    pub fn new(system: SystemLabel, coords: Vec<f64>) -> Result<Self> {
        check_len(system.coord_dim(), coords.len())?;
        Ok(Self { system, coords })
    }

    pub fn pair(&self, a: &EffectVec) -> f64 {
        crate::linalg::dot(&self.coords, &a.coords)
    }

    pub fn scale(&self, s: f64) -> StateVec {
        StateVec {
            system: self.system.clone(),
            coords: self.coords.iter().map(|v| v * s).collect(),
        }
    }

    pub fn add_scaled(&self, other: &StateVec, s: f64) -> Result<StateVec> {
        check_len(self.coords.len(), other.coords.len())?;
        Ok(StateVec {
            system: self.system.clone(),
            coords: self.coords.iter().zip(&other.coords).map(|(a, b)| a + s * b).collect(),
        })
    }

    pub fn sub(&self, other: &StateVec) -> Result<StateVec> {
        self.add_scaled(other, -1.0)
    }
}

impl EffectVec {
    pub fn new(system: SystemLabel, coords: Vec<f64>) -> Result<Self> {
        check_len(system.coord_dim(), coords.len())?;
        Ok(Self { system, coords })
    }

    pub fn scale(&self, s: f64) -> EffectVec {
        EffectVec {
            system: self.system.clone(),
            coords: self.coords.iter().map(|v| v * s).collect(),
        }
    }

    pub fn add_scaled(&self, other: &EffectVec, s: f64) -> Result<EffectVec> {
        check_len(self.coords.len(), other.coords.len())?;
        Ok(EffectVec {
            system: self.system.clone(),
            coords: self.coords.iter().zip(&other.coords).map(|(a, b)| a + s * b).collect(),
        })
    }

    pub fn sub(&self, other: &EffectVec) -> Result<EffectVec> {
        self.add_scaled(other, -1.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MapTag {
    Unconstrained,
    Transformation,
    Channel,
    Reversible,
}

/// A transformation in coordinates: a real `D(B) × D(A)` matrix. Hilbert
/// models may attach a Kraus realization, which the real-quantum model needs
/// to lift maps onto composites.
#[derive(Clone, Debug)]
pub struct LinearMap {
    pub input: SystemLabel,
    pub output: SystemLabel,
    pub matrix: RMat,
    pub tag: MapTag,
    pub realization: Option<Vec<CMat>>,
}

impl LinearMap {
    pub fn new(input: SystemLabel, output: SystemLabel, matrix: RMat, tag: MapTag) -> Result<Self> {
        check_len(output.coord_dim(), matrix.nrows())?;
        check_len(input.coord_dim(), matrix.ncols())?;
        Ok(Self {
            input,
            output,
            matrix,
            tag,
            realization: None,
        })
    }

    pub fn identity(a: &SystemLabel) -> Self {
        let n = a.coord_dim();
        let mut m = Self {
            input: a.clone(),
            output: a.clone(),
            matrix: RMat::identity(n, n),
            tag: MapTag::Reversible,
            realization: None,
        };
        if a.theory != TheoryId::Classical {
            m.realization = Some(vec![CMat::identity(a.local_dim(), a.local_dim())]);
        }
        m
    }

    pub fn apply(&self, x: &StateVec) -> Result<StateVec> {
        if x.system.coord_dim() != self.input.coord_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input.coord_dim(),
                found: x.coords.len(),
            });
        }
        let v = &self.matrix * nalgebra::DVector::from_column_slice(&x.coords);
        Ok(StateVec {
            system: self.output.clone(),
            coords: v.iter().copied().collect(),
        })
    }

    /// Heisenberg action `a ↦ a ∘ M` on effects of the output.
    pub fn pullback(&self, a: &EffectVec) -> Result<EffectVec> {
        check_len(self.output.coord_dim(), a.coords.len())?;
        let v = self.matrix.transpose() * nalgebra::DVector::from_column_slice(&a.coords);
        Ok(EffectVec {
            system: self.input.clone(),
            coords: v.iter().copied().collect(),
        })
    }

    /// `other ∘ self`.
    pub fn then(&self, other: &LinearMap) -> Result<LinearMap> {
        check_len(self.output.coord_dim(), other.input.coord_dim())?;
        let tag = match (self.tag, other.tag) {
            (MapTag::Reversible, MapTag::Reversible) => MapTag::Reversible,
            (a, b) if a == MapTag::Unconstrained || b == MapTag::Unconstrained => MapTag::Unconstrained,
            (a, b) if a == MapTag::Transformation || b == MapTag::Transformation => {
                MapTag::Transformation
            }
            _ => MapTag::Channel,
        };
        let realization = match (&self.realization, &other.realization) {
            (Some(k1), Some(k2)) => Some(
                k2.iter()
                    .flat_map(|b| k1.iter().map(move |a| b * a))
                    .collect(),
            ),
            _ => None,
        };
        Ok(LinearMap {
            input: self.input.clone(),
            output: other.output.clone(),
            matrix: &other.matrix * &self.matrix,
            tag,
            realization,
        })
    }

    pub fn scale(&self, s: f64) -> LinearMap {
        LinearMap {
            input: self.input.clone(),
            output: self.output.clone(),
            matrix: &self.matrix * s,
            tag: if s == 1.0 { self.tag } else { MapTag::Unconstrained },
            realization: if s >= 0.0 {
                self.realization
                    .as_ref()
                    .map(|ks| ks.iter().map(|k| k * crate::linalg::cr(s.sqrt())).collect())
            } else {
                None
            },
        }
    }

    /// `self − other`, an unconstrained map.
    pub fn sub(&self, other: &LinearMap) -> Result<LinearMap> {
        check_len(self.matrix.nrows(), other.matrix.nrows())?;
        check_len(self.matrix.ncols(), other.matrix.ncols())?;
        Ok(LinearMap {
            input: self.input.clone(),
            output: self.output.clone(),
            matrix: &self.matrix - &other.matrix,
            tag: MapTag::Unconstrained,
            realization: None,
        })
    }

    /// `self + other`; Kraus realizations concatenate.
    pub fn add(&self, other: &LinearMap) -> Result<LinearMap> {
        check_len(self.matrix.nrows(), other.matrix.nrows())?;
        check_len(self.matrix.ncols(), other.matrix.ncols())?;
        let realization = match (&self.realization, &other.realization) {
            (Some(a), Some(b)) => Some(a.iter().chain(b).cloned().collect()),
            _ => None,
        };
        Ok(LinearMap {
            input: self.input.clone(),
            output: self.output.clone(),
            matrix: &self.matrix + &other.matrix,
            tag: MapTag::Unconstrained,
            realization,
        })
    }

    pub fn with_tag(mut self, tag: MapTag) -> Self {
        self.tag = tag;
        self
    }

    pub fn max_abs_diff(&self, other: &LinearMap) -> f64 {
        if self.matrix.shape() != other.matrix.shape() {
            return f64::INFINITY;
        }
        crate::linalg::max_abs_real(&(&self.matrix - &other.matrix))
    }
}

/// Output of purification: pure state on `A ⊗ Ã` and the purifying system.
#[derive(Clone, Debug)]
pub struct Purified {
    pub state: StateVec,
    pub purifying: SystemLabel,
}

/// Capabilities every model theory provides. Systems are passed explicitly;
/// the model's default dimension only fixes `system()`.
pub trait TheoryModel: Send + Sync + fmt::Debug {
    fn id(&self) -> TheoryId;
    fn default_dim(&self) -> usize;

    fn system(&self) -> SystemLabel {
        SystemLabel::atom(self.id(), self.default_dim())
    }

    fn atom(&self, d: usize) -> Result<SystemLabel> {
        if d < 1 {
            return Err(Error::invalid("system dimension must be positive"));
        }
        Ok(SystemLabel::atom(self.id(), d))
    }

    fn compose(&self, a: &SystemLabel, b: &SystemLabel) -> Result<SystemLabel> {
        self.own(a)?;
        self.own(b)?;
        a.tensor(b)
    }

    fn own(&self, a: &SystemLabel) -> Result<()> {
        if a.theory != self.id() {
            return Err(Error::invalid(format!(
                "system {a} does not belong to theory {}",
                self.id()
            )));
        }
        Ok(())
    }

    /// Polyhedral state cone when one exists.
    fn state_cone(&self, a: &SystemLabel) -> Option<Cone>;
    fn effect_cone(&self, a: &SystemLabel) -> Option<Cone>;
    fn contains_state(&self, x: &StateVec, tol: f64) -> Result<bool>;
    /// `0 ≤ a ≤ e` on normalized states.
    fn contains_effect(&self, a: &EffectVec, tol: f64) -> Result<bool>;
    /// `min ⟨a, ρ⟩` over normalized states; non-negative iff `a` is in the dual cone.
    fn min_on_states(&self, a: &EffectVec) -> Result<f64>;
    fn deterministic_effect(&self, a: &SystemLabel) -> EffectVec;
    fn embed_product(&self, x: &StateVec, y: &StateVec) -> Result<StateVec>;
    fn embed_product_effects(&self, a: &EffectVec, b: &EffectVec) -> Result<EffectVec>;
    /// `M ⊗ I_B`.
    fn lift_local(&self, m: &LinearMap, b: &SystemLabel) -> Result<LinearMap>;
    fn tensor_maps(&self, m1: &LinearMap, m2: &LinearMap) -> Result<LinearMap>;
    fn marginal(&self, x: &StateVec, keep: &[usize]) -> Result<StateVec>;
    fn random_pure_state(&self, a: &SystemLabel, rng: &mut dyn RngCore) -> StateVec;
    fn random_state(&self, a: &SystemLabel, rng: &mut dyn RngCore) -> StateVec;
    fn random_reversible(&self, a: &SystemLabel, rng: &mut dyn RngCore) -> LinearMap;
    fn invariant_state(&self, a: &SystemLabel) -> StateVec;
    fn op_norm(&self, delta: &StateVec) -> f64;
    fn effect_norm(&self, delta: &EffectVec) -> f64;
    fn is_pure(&self, x: &StateVec, tol: f64) -> bool;
    fn purify(&self, x: &StateVec) -> Result<Purified>;
    /// Effect maximizing `⟨a, δ⟩` (projector onto the positive part).
    fn positive_part_effect(&self, delta: &StateVec) -> EffectVec;
    /// A finite set of normalized pure states spanning `S_R(A)`.
    fn spanning_states(&self, a: &SystemLabel) -> Vec<StateVec>;
    /// Minimum eigenvalue (or entry) of the map lifted with an equal-size
    /// ancilla; non-negative iff the map is completely positive.
    fn positivity_margin(&self, m: &LinearMap) -> Result<f64>;

    fn as_hilbert(&self) -> Option<&HilbertModel> {
        None
    }
}

pub fn quantum_model(d: usize) -> Result<HilbertModel> {
    HilbertModel::new(d, false)
}

pub fn real_quantum_model(d: usize) -> Result<HilbertModel> {
    HilbertModel::new(d, true)
}

pub fn classical_model(n: usize) -> Result<ClassicalModel> {
    ClassicalModel::new(n)
}

pub fn model_for(theory: TheoryId, d: usize) -> Result<Box<dyn TheoryModel>> {
    Ok(match theory {
        TheoryId::Classical => Box::new(classical_model(d)?),
        TheoryId::Quantum => Box::new(quantum_model(d)?),
        TheoryId::RealQuantum => Box::new(real_quantum_model(d)?),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MapClass {
    Channel,
    Transformation,
    Neither,
}

#[derive(Clone, Debug, Serialize)]
pub struct ChannelCheck {
    pub class: MapClass,
    /// `max |e_B ∘ M − e_A|`.
    pub normalization_residual: f64,
    /// Lifted-positivity margin; `None` when the model cannot decide it.
    pub positivity_margin: Option<f64>,
    /// `min ⟨e_A − e_B ∘ M, ρ⟩` over normalized states.
    pub subnormalization_margin: f64,
}

pub fn check_channel(m: &LinearMap, model: &dyn TheoryModel) -> ChannelCheck {
    check_channel_tol(m, model, 1e-10)
}

pub fn check_channel_tol(m: &LinearMap, model: &dyn TheoryModel, tol: f64) -> ChannelCheck {
    let ea = model.deterministic_effect(&m.input);
    let eb = model.deterministic_effect(&m.output);
    let pulled = m.pullback(&eb).expect("map output matches its own system");
    let diff = ea.sub(&pulled).expect("same system");
    let normalization_residual = diff.coords.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let positivity_margin = match model.positivity_margin(m) {
        Ok(v) => Some(v),
        Err(e) => {
            log::debug!("positivity undecided: {e}");
            None
        }
    };
    let subnormalization_margin = model.min_on_states(&diff).unwrap_or(f64::NEG_INFINITY);
    let positive = positivity_margin.is_some_and(|v| v >= -tol);
    let class = if !positive {
        MapClass::Neither
    } else if normalization_residual <= tol {
        MapClass::Channel
    } else if subnormalization_margin >= -tol {
        MapClass::Transformation
    } else {
        MapClass::Neither
    };
    ChannelCheck {
        class,
        normalization_residual,
        positivity_margin,
        subnormalization_margin,
    }
}
