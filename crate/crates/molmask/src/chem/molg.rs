//! The MOLG interchange format.
//!
//! Line-oriented UTF-8, one molecule per blank-line-separated block:
//!
//! ```text
//! atoms C H H H H
//! bonds 0-1:1 0-2:1 0-3:1 0-4:1
//! id methane
//! ```
//!
//! The `id` line is optional. Bonds use 0-based atom indices with orders in
//! {1,2,3}; a molecule with a single atom has an empty `bonds` line.

use super::{BondMatrix, Element, Molecule, MoleculeError};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MolgError {
    #[error("line {line}: unknown element symbol '{symbol}'")]
    UnknownElement { symbol: String, line: usize },
    #[error("line {line}: bond order {order} outside 1..=3")]
    BadBondOrder { order: u64, line: usize },
    #[error("line {line}: self-bond on atom {atom}")]
    SelfBond { atom: usize, line: usize },
    #[error("line {line}: duplicate bond {i}-{j} with conflicting order")]
    ConflictingBond { i: usize, j: usize, line: usize },
    #[error("line {line}: atom index {index} out of range for {atoms} atoms")]
    IndexOutOfRange {
        index: usize,
        atoms: usize,
        line: usize,
    },
    #[error("molecular graph is disconnected")]
    Disconnected,
    #[error("line {line}: {message}")]
    Malformed { message: String, line: usize },
    #[error("expected exactly one molecule block, found {found}")]
    BlockCount { found: usize },
}

impl MolgError {
    fn malformed(message: impl Into<String>, line: usize) -> MolgError {
        MolgError::Malformed {
            message: message.into(),
            line,
        }
    }
}

/// Parses a single MOLG block.
pub fn parse_molg(text: &str) -> Result<Molecule, MolgError> {
    let all = parse_molg_many(text)?;
    if all.len() != 1 {
        return Err(MolgError::BlockCount { found: all.len() });
    }
    Ok(all.into_iter().next().unwrap())
}

/// Parses every blank-line-separated block in `text`.
pub fn parse_molg_many(text: &str) -> Result<Vec<Molecule>, MolgError> {
    let mut molecules = Vec::new();
    let mut block: Vec<(usize, &str)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        if raw.trim().is_empty() {
            if !block.is_empty() {
                molecules.push(parse_block(&block)?);
                block.clear();
            }
        } else {
            block.push((line_no, raw.trim()));
        }
    }
    if !block.is_empty() {
        molecules.push(parse_block(&block)?);
    }
    Ok(molecules)
}

fn parse_block(lines: &[(usize, &str)]) -> Result<Molecule, MolgError> {
    let (atoms_line_no, atoms_line) = lines[0];
    let Some(atom_list) = atoms_line.strip_prefix("atoms") else {
        return Err(MolgError::malformed(
            "block must start with an 'atoms' line",
            atoms_line_no,
        ));
    };
    let mut atoms = Vec::new();
    for symbol in atom_list.split_whitespace() {
        let element = Element::from_symbol(symbol).ok_or_else(|| MolgError::UnknownElement {
            symbol: symbol.to_string(),
            line: atoms_line_no,
        })?;
        atoms.push(element);
    }
    if atoms.is_empty() {
        return Err(MolgError::malformed("'atoms' line lists no atoms", atoms_line_no));
    }

    let Some(&(bonds_line_no, bonds_line)) = lines.get(1) else {
        return Err(MolgError::malformed(
            "block is missing its 'bonds' line",
            atoms_line_no,
        ));
    };
    let Some(bond_list) = bonds_line.strip_prefix("bonds") else {
        return Err(MolgError::malformed(
            "second line of a block must be 'bonds'",
            bonds_line_no,
        ));
    };

    let n = atoms.len();
    let mut bonds = BondMatrix::new(n);
    for entry in bond_list.split_whitespace() {
        let (i, j, order) = parse_bond_entry(entry, bonds_line_no)?;
        if i >= n || j >= n {
            return Err(MolgError::IndexOutOfRange {
                index: i.max(j),
                atoms: n,
                line: bonds_line_no,
            });
        }
        if i == j {
            return Err(MolgError::SelfBond {
                atom: i,
                line: bonds_line_no,
            });
        }
        let existing = bonds.order(i, j);
        if existing != 0 && existing != order {
            return Err(MolgError::ConflictingBond {
                i: i.min(j),
                j: i.max(j),
                line: bonds_line_no,
            });
        }
        bonds.set_order(i, j, order);
    }

    let mut source_id = None;
    for &(line_no, line) in &lines[2..] {
        if let Some(id) = line.strip_prefix("id") {
            if source_id.is_some() {
                return Err(MolgError::malformed("duplicate 'id' line", line_no));
            }
            let id = id.trim();
            if id.is_empty() {
                return Err(MolgError::malformed("'id' line is empty", line_no));
            }
            source_id = Some(id.to_string());
        } else {
            return Err(MolgError::malformed(
                format!("unexpected line '{line}'"),
                line_no,
            ));
        }
    }

    Molecule::new(atoms, bonds, source_id).map_err(|e| match e {
        MoleculeError::Disconnected => MolgError::Disconnected,
        other => MolgError::malformed(other.to_string(), atoms_line_no),
    })
}

fn parse_bond_entry(entry: &str, line: usize) -> Result<(usize, usize, u8), MolgError> {
    let bad = || MolgError::malformed(format!("bad bond entry '{entry}'"), line);
    let (pair, order) = entry.split_once(':').ok_or_else(bad)?;
    let (i, j) = pair.split_once('-').ok_or_else(bad)?;
    let i: usize = i.parse().map_err(|_| bad())?;
    let j: usize = j.parse().map_err(|_| bad())?;
    let order: u64 = order.parse().map_err(|_| bad())?;
    if !(1..=3).contains(&order) {
        return Err(MolgError::BadBondOrder { order, line });
    }
    Ok((i, j, order as u8))
}

/// Renders one molecule as a MOLG block (no trailing blank line).
pub fn serialize_molg(molecule: &Molecule) -> String {
    let mut out = String::from("atoms");
    for atom in molecule.atoms() {
        out.push(' ');
        out.push_str(atom.symbol());
    }
    out.push_str("\nbonds");
    for (i, j, order) in molecule.bonds().bonds() {
        out.push_str(&format!(" {i}-{j}:{order}"));
    }
    out.push('\n');
    if let Some(id) = molecule.source_id() {
        out.push_str("id ");
        out.push_str(id);
        out.push('\n');
    }
    out
}

/// Renders molecules as blank-line-separated MOLG blocks.
pub fn serialize_molg_many(molecules: &[Molecule]) -> String {
    let blocks: Vec<String> = molecules.iter().map(serialize_molg).collect();
    blocks.join("\n")
}
