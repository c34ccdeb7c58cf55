//! Gate vocabulary shared by the encoder and the simulator.

use serde::{Deserialize, Serialize};

use crate::pauli::PauliString;

/// A circuit element on the full register.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub enum Gate {
    H(usize),
    S(usize),
    Sdg(usize),
    Cx { control: usize, target: usize },
    /// `exp(-i theta P)`.
    PauliExp { theta: f64, string: PauliString },
    /// Applies `op` on the branch where `control` reads 1.
    ControlledPauli { control: usize, op: PauliString },
}

impl Gate {
    pub fn inverse(&self) -> Gate {
        match self {
            Gate::H(q) => Gate::H(*q),
            Gate::S(q) => Gate::Sdg(*q),
            Gate::Sdg(q) => Gate::S(*q),
            Gate::Cx { control, target } => Gate::Cx { control: *control, target: *target },
            Gate::PauliExp { theta, string } => Gate::PauliExp { theta: -theta, string: *string },
            Gate::ControlledPauli { control, op } => {
                Gate::ControlledPauli { control: *control, op: *op }
            }
        }
    }
}

/// An ordered gate list; gates apply first-to-last.
#[derive(Clone, PartialEq, Debug, Default, Serialize, Deserialize)]
pub struct Circuit {
    pub gates: Vec<Gate>,
}

impl Circuit {
    pub fn new() -> Self {
        Circuit { gates: Vec::new() }
    }

    pub fn push(&mut self, gate: Gate) {
        self.gates.push(gate);
    }

    /// Gate list implementing the inverse unitary.
    pub fn inverted(&self) -> Circuit {
        Circuit { gates: self.gates.iter().rev().map(Gate::inverse).collect() }
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }
}

impl FromIterator<Gate> for Circuit {
    fn from_iter<I: IntoIterator<Item = Gate>>(iter: I) -> Self {
        Circuit { gates: iter.into_iter().collect() }
    }
}
