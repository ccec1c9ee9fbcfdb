//! Molecular graph data model: element vocabulary, valence rules, molecules,
//! and the octet check, plus the MOLG and kekulized-SMILES parsers.

mod molg;
mod smiles;

pub use molg::{parse_molg, parse_molg_many, serialize_molg, serialize_molg_many, MolgError};
pub use smiles::{parse_smiles_kekulized, SmilesError};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The ten chemical elements the models predict over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Element {
    H,
    C,
    N,
    O,
    F,
    P,
    S,
    Cl,
    Br,
    I,
}

/// Number of chemical elements in the vocabulary (excludes MASK).
pub const ELEMENT_COUNT: usize = 10;

/// Token id of the MASK marker. Element ids are `0..ELEMENT_COUNT`.
pub const MASK_TOKEN_ID: usize = ELEMENT_COUNT;

/// Full token vocabulary size: the ten elements plus MASK.
pub const VOCAB_SIZE: usize = ELEMENT_COUNT + 1;

/// All elements in id order.
pub const ELEMENTS: [Element; ELEMENT_COUNT] = [
    Element::H,
    Element::C,
    Element::N,
    Element::O,
    Element::F,
    Element::P,
    Element::S,
    Element::Cl,
    Element::Br,
    Element::I,
];

impl Element {
    /// Stable integer id in `0..ELEMENT_COUNT`.
    pub fn id(self) -> usize {
        self as usize
    }

    pub fn from_id(id: usize) -> Option<Element> {
        ELEMENTS.get(id).copied()
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Element::H => "H",
            Element::C => "C",
            Element::N => "N",
            Element::O => "O",
            Element::F => "F",
            Element::P => "P",
            Element::S => "S",
            Element::Cl => "Cl",
            Element::Br => "Br",
            Element::I => "I",
        }
    }

    pub fn from_symbol(symbol: &str) -> Option<Element> {
        ELEMENTS.iter().copied().find(|e| e.symbol() == symbol)
    }

    /// Standard covalent valence (unpaired valence electrons).
    pub fn valence(self) -> u32 {
        match self {
            Element::H => 1,
            Element::C => 4,
            Element::N => 3,
            Element::O => 2,
            Element::F => 1,
            Element::P => 3,
            Element::S => 2,
            Element::Cl => 1,
            Element::Br => 1,
            Element::I => 1,
        }
    }

    /// Elements whose standard valence equals `bond_count`.
    pub fn valence_group(bond_count: u32) -> impl Iterator<Item = Element> {
        ELEMENTS
            .into_iter()
            .filter(move |e| e.valence() == bond_count)
    }
}

impl std::fmt::Display for Element {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.symbol())
    }
}

/// An observed vertex label: a concrete element, or the MASK marker used in
/// corrupted graphs. MASK never appears in an uncorrupted [`Molecule`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AtomLabel {
    Element(Element),
    Mask,
}

impl AtomLabel {
    /// Token id in `0..VOCAB_SIZE` (MASK is the last id).
    pub fn token_id(self) -> usize {
        match self {
            AtomLabel::Element(e) => e.id(),
            AtomLabel::Mask => MASK_TOKEN_ID,
        }
    }

    pub fn element(self) -> Option<Element> {
        match self {
            AtomLabel::Element(e) => Some(e),
            AtomLabel::Mask => None,
        }
    }
}

/// Errors from molecule construction.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum MoleculeError {
    #[error("molecule must contain at least one atom")]
    Empty,
    #[error("bond matrix is {matrix} atoms but the molecule lists {atoms}")]
    DimensionMismatch { atoms: usize, matrix: usize },
    #[error("molecular graph is disconnected")]
    Disconnected,
}

/// Symmetric bond-order matrix with entries in {0,1,2,3}.
///
/// Zero means no bond; kekulized inputs guarantee integer orders 1..=3.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BondMatrix {
    n: usize,
    orders: Vec<u8>,
}

impl BondMatrix {
    /// An n-atom matrix with no bonds.
    pub fn new(n: usize) -> BondMatrix {
        BondMatrix {
            n,
            orders: vec![0; n * n],
        }
    }

    pub fn atom_count(&self) -> usize {
        self.n
    }

    /// Bond order between atoms `i` and `j` (0 when unbonded).
    pub fn order(&self, i: usize, j: usize) -> u8 {
        assert!(i < self.n && j < self.n, "atom index out of range");
        self.orders[i * self.n + j]
    }

    /// Sets the bond order for both `(i, j)` and `(j, i)`.
    ///
    /// Panics on self-bonds or orders above 3; parsers validate first.
    pub fn set_order(&mut self, i: usize, j: usize, order: u8) {
        assert!(i < self.n && j < self.n, "atom index out of range");
        assert!(i != j, "self-bonds are not allowed");
        assert!(order <= 3, "bond order must be at most 3");
        self.orders[i * self.n + j] = order;
        self.orders[j * self.n + i] = order;
    }

    /// Sum of bond orders incident to atom `i`.
    pub fn covalent_bond_count(&self, i: usize) -> u32 {
        assert!(i < self.n, "atom index {i} out of range for {} atoms", self.n);
        (0..self.n).map(|j| u32::from(self.orders[i * self.n + j])).sum()
    }

    /// Bonded partners of atom `i` with their orders.
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, u8)> + '_ {
        assert!(i < self.n, "atom index out of range");
        (0..self.n).filter_map(move |j| {
            let o = self.orders[i * self.n + j];
            (o > 0).then_some((j, o))
        })
    }

    /// Bonds as `(i, j, order)` with `i < j`, in row-major order.
    pub fn bonds(&self) -> impl Iterator<Item = (usize, usize, u8)> + '_ {
        (0..self.n).flat_map(move |i| {
            (i + 1..self.n).filter_map(move |j| {
                let o = self.orders[i * self.n + j];
                (o > 0).then_some((i, j, o))
            })
        })
    }

    fn is_connected(&self) -> bool {
        if self.n == 0 {
            return false;
        }
        let mut seen = vec![false; self.n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(i) = stack.pop() {
            for (j, _) in self.neighbors(i) {
                if !seen[j] {
                    seen[j] = true;
                    count += 1;
                    stack.push(j);
                }
            }
        }
        count == self.n
    }
}

/// An undirected molecular graph: ordered atoms plus a symmetric bond-order
/// matrix. Immutable after construction and always connected.
#[derive(Debug, Clone, PartialEq)]
pub struct Molecule {
    atoms: Vec<Element>,
    bonds: BondMatrix,
    source_id: Option<String>,
}

impl Molecule {
    pub fn new(
        atoms: Vec<Element>,
        bonds: BondMatrix,
        source_id: Option<String>,
    ) -> Result<Molecule, MoleculeError> {
        if atoms.is_empty() {
            return Err(MoleculeError::Empty);
        }
        if bonds.atom_count() != atoms.len() {
            return Err(MoleculeError::DimensionMismatch {
                atoms: atoms.len(),
                matrix: bonds.atom_count(),
            });
        }
        if !bonds.is_connected() {
            return Err(MoleculeError::Disconnected);
        }
        Ok(Molecule {
            atoms,
            bonds,
            source_id,
        })
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn atoms(&self) -> &[Element] {
        &self.atoms
    }

    pub fn atom(&self, i: usize) -> Element {
        self.atoms[i]
    }

    pub fn bonds(&self) -> &BondMatrix {
        &self.bonds
    }

    pub fn source_id(&self) -> Option<&str> {
        self.source_id.as_deref()
    }

    /// Sum of bond orders incident to atom `i`.
    pub fn covalent_bond_count(&self, i: usize) -> u32 {
        self.bonds.covalent_bond_count(i)
    }

    /// Checks every atom's bond count against its standard valence.
    pub fn octet_check(&self) -> OctetReport {
        let atoms = (0..self.atom_count())
            .map(|i| self.covalent_bond_count(i) == self.atom(i).valence())
            .collect();
        OctetReport::new(atoms)
    }
}

/// Per-atom valence-satisfaction flags from [`Molecule::octet_check`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OctetReport {
    atoms: Vec<bool>,
}

impl OctetReport {
    fn new(atoms: Vec<bool>) -> OctetReport {
        OctetReport { atoms }
    }

    /// True when atom `i`'s bond count equals its valence.
    pub fn atom_satisfied(&self, i: usize) -> bool {
        self.atoms[i]
    }

    pub fn atom_flags(&self) -> &[bool] {
        &self.atoms
    }

    /// True when every atom is satisfied.
    pub fn all_satisfied(&self) -> bool {
        self.atoms.iter().all(|&ok| ok)
    }
}
