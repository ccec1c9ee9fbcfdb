//! A strict kekulized-SMILES subset importer.
//!
//! Supported: bare vocabulary element symbols (maximal munch, so `Cl` and
//! `Br` work), explicit `-`/`=`/`#` bonds, parenthesised branches, and
//! single-digit ring closures. Everything else (aromatic lowercase atoms,
//! brackets, charges, stereo marks, dot-split components) is rejected with
//! an unsupported-feature error; callers must kekulize first.
//!
//! Hydrogens are materialised as explicit vertices: each parsed atom is
//! topped up with single-bonded H until it reaches its standard valence.
//! Atoms already at or above their valence (hypervalent input) get none.

use super::{BondMatrix, Element, Molecule, MoleculeError};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SmilesError {
    #[error("unsupported SMILES feature at byte {position}: {feature}")]
    Unsupported { feature: String, position: usize },
    #[error("malformed SMILES at byte {position}: {message}")]
    Malformed { message: String, position: usize },
    #[error("ring bond {digit} closed with conflicting order")]
    RingOrderConflict { digit: u8 },
    #[error("ring bond {digit} never closed")]
    UnclosedRing { digit: u8 },
    #[error("{0}")]
    Molecule(#[from] MoleculeError),
}

fn unsupported(feature: impl Into<String>, position: usize) -> SmilesError {
    SmilesError::Unsupported {
        feature: feature.into(),
        position,
    }
}

fn malformed(message: impl Into<String>, position: usize) -> SmilesError {
    SmilesError::Malformed {
        message: message.into(),
        position,
    }
}

struct HeavyAtom {
    element: Element,
    bonds: Vec<(usize, u8)>,
}

/// Parses the supported kekulized subset into an H-explicit [`Molecule`].
pub fn parse_smiles_kekulized(smiles: &str) -> Result<Molecule, SmilesError> {
    let bytes = smiles.as_bytes();
    let mut atoms: Vec<HeavyAtom> = Vec::new();
    let mut branch_stack: Vec<usize> = Vec::new();
    let mut prev_atom: Option<usize> = None;
    let mut pending_order: Option<u8> = None;
    // digit -> (atom index, explicit order if any)
    let mut open_rings: Vec<(u8, usize, Option<u8>)> = Vec::new();
    let mut pos = 0;

    while pos < bytes.len() {
        let c = bytes[pos] as char;
        match c {
            'A'..='Z' => {
                let element = take_element(smiles, &mut pos)?;
                let index = atoms.len();
                atoms.push(HeavyAtom {
                    element,
                    bonds: Vec::new(),
                });
                if let Some(prev) = prev_atom {
                    let order = pending_order.take().unwrap_or(1);
                    atoms[prev].bonds.push((index, order));
                    atoms[index].bonds.push((prev, order));
                } else if pending_order.is_some() {
                    return Err(malformed("bond symbol before the first atom", pos));
                }
                prev_atom = Some(index);
            }
            '-' | '=' | '#' => {
                if pending_order.is_some() {
                    return Err(malformed("two bond symbols in a row", pos));
                }
                pending_order = Some(match c {
                    '-' => 1,
                    '=' => 2,
                    _ => 3,
                });
                pos += 1;
            }
            '(' => {
                let Some(prev) = prev_atom else {
                    return Err(malformed("branch before the first atom", pos));
                };
                branch_stack.push(prev);
                pos += 1;
            }
            ')' => {
                let Some(anchor) = branch_stack.pop() else {
                    return Err(malformed("unmatched ')'", pos));
                };
                prev_atom = Some(anchor);
                pos += 1;
            }
            '1'..='9' => {
                let digit = c as u8 - b'0';
                let Some(here) = prev_atom else {
                    return Err(malformed("ring digit before the first atom", pos));
                };
                let order_here = pending_order.take();
                if let Some(slot) = open_rings.iter().position(|(d, _, _)| *d == digit) {
                    let (_, there, order_there) = open_rings.swap_remove(slot);
                    if there == here {
                        return Err(malformed("ring bond closes on its own atom", pos));
                    }
                    let order = match (order_here, order_there) {
                        (Some(a), Some(b)) if a != b => {
                            return Err(SmilesError::RingOrderConflict { digit })
                        }
                        (Some(o), _) | (_, Some(o)) => o,
                        (None, None) => 1,
                    };
                    atoms[here].bonds.push((there, order));
                    atoms[there].bonds.push((here, order));
                } else {
                    open_rings.push((digit, here, order_here));
                }
                pos += 1;
            }
            'a'..='z' => {
                return Err(unsupported(
                    format!("aromatic atom '{c}' (input must be kekulized)"),
                    pos,
                ))
            }
            '[' | ']' => return Err(unsupported("bracket atom", pos)),
            '+' => return Err(unsupported("charge '+'", pos)),
            '%' => return Err(unsupported("two-digit ring closure '%'", pos)),
            '.' => return Err(unsupported("disconnected component '.'", pos)),
            '/' | '\\' | '@' => return Err(unsupported(format!("stereo mark '{c}'"), pos)),
            '0' => return Err(malformed("ring digit 0", pos)),
            other if other.is_whitespace() => {
                return Err(malformed("whitespace inside SMILES", pos))
            }
            other => return Err(unsupported(format!("token '{other}'"), pos)),
        }
    }

    if let Some((digit, _, _)) = open_rings.first() {
        return Err(SmilesError::UnclosedRing { digit: *digit });
    }
    if !branch_stack.is_empty() {
        return Err(malformed("unclosed '('", bytes.len()));
    }
    if pending_order.is_some() {
        return Err(malformed("dangling bond symbol", bytes.len()));
    }
    if atoms.is_empty() {
        return Err(malformed("no atoms", 0));
    }

    build_with_hydrogens(&atoms).map_err(SmilesError::from)
}

fn take_element(smiles: &str, pos: &mut usize) -> Result<Element, SmilesError> {
    let rest = &smiles[*pos..];
    // Two-letter symbols first.
    for symbol in ["Cl", "Br"] {
        if rest.starts_with(symbol) {
            *pos += symbol.len();
            return Ok(Element::from_symbol(symbol).unwrap());
        }
    }
    let one = &rest[..1];
    match Element::from_symbol(one) {
        Some(e) => {
            *pos += 1;
            Ok(e)
        }
        None => Err(unsupported(format!("element '{one}'"), *pos)),
    }
}

fn build_with_hydrogens(heavy: &[HeavyAtom]) -> Result<Molecule, MoleculeError> {
    let mut elements: Vec<Element> = heavy.iter().map(|a| a.element).collect();
    let mut extra_h = Vec::new();
    for (i, atom) in heavy.iter().enumerate() {
        let used: u32 = atom.bonds.iter().map(|&(_, o)| u32::from(o)).sum();
        let deficit = atom.element.valence().saturating_sub(used);
        for _ in 0..deficit {
            extra_h.push(i);
        }
    }
    let n = elements.len() + extra_h.len();
    let mut bonds = BondMatrix::new(n);
    for (i, atom) in heavy.iter().enumerate() {
        for &(j, order) in &atom.bonds {
            bonds.set_order(i, j, order);
        }
    }
    for (offset, &host) in extra_h.iter().enumerate() {
        let h_index = heavy.len() + offset;
        elements.push(Element::H);
        bonds.set_order(host, h_index, 1);
    }
    Molecule::new(elements, bonds, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn methane_from_bare_carbon() {
        let m = parse_smiles_kekulized("C").unwrap();
        assert_eq!(m.atom_count(), 5);
        assert_eq!(m.atom(0), Element::C);
        assert_eq!(m.atoms().iter().filter(|&&e| e == Element::H).count(), 4);
        assert!(m.octet_check().all_satisfied());
    }

    #[test]
    fn carbon_dioxide_has_no_hydrogens() {
        let m = parse_smiles_kekulized("O=C=O").unwrap();
        assert_eq!(m.atom_count(), 3);
        assert_eq!(m.bonds().order(0, 1), 2);
        assert_eq!(m.bonds().order(1, 2), 2);
        assert!(m.octet_check().all_satisfied());
    }

    #[test]
    fn aromatic_input_rejected() {
        let err = parse_smiles_kekulized("c1ccccc1").unwrap_err();
        assert!(matches!(err, SmilesError::Unsupported { .. }), "{err}");
    }

    #[test]
    fn kekulized_benzene_parses() {
        let m = parse_smiles_kekulized("C1=CC=CC=C1").unwrap();
        assert_eq!(m.atom_count(), 12);
        assert!(m.octet_check().all_satisfied());
        // Every carbon carries exactly one hydrogen.
        for i in 0..6 {
            let h_neighbors = m
                .bonds()
                .neighbors(i)
                .filter(|&(j, _)| m.atom(j) == Element::H)
                .count();
            assert_eq!(h_neighbors, 1);
        }
    }

    #[test]
    fn branches_and_explicit_bonds() {
        // Acetic acid, kekulized: CC(=O)O
        let m = parse_smiles_kekulized("CC(=O)O").unwrap();
        assert_eq!(
            m.atoms().iter().filter(|&&e| e == Element::H).count(),
            4
        );
        assert!(m.octet_check().all_satisfied());
    }

    #[test]
    fn hypervalent_input_gets_no_fill() {
        // Sulfuric-acid-like sulfur: total bond order 6, kept as written.
        let m = parse_smiles_kekulized("OS(=O)(=O)O").unwrap();
        let s = m
            .atoms()
            .iter()
            .position(|&e| e == Element::S)
            .unwrap();
        assert_eq!(m.covalent_bond_count(s), 6);
        assert!(!m.octet_check().atom_satisfied(s));
    }

    #[test]
    fn charges_and_brackets_rejected() {
        assert!(matches!(
            parse_smiles_kekulized("[NH4+]").unwrap_err(),
            SmilesError::Unsupported { .. }
        ));
        assert!(matches!(
            parse_smiles_kekulized("C.C").unwrap_err(),
            SmilesError::Unsupported { .. }
        ));
    }

    #[test]
    fn ring_order_conflict_rejected() {
        let err = parse_smiles_kekulized("C=1CCC-1").unwrap_err();
        assert_eq!(err, SmilesError::RingOrderConflict { digit: 1 });
    }

    #[test]
    fn explicit_ring_order_on_one_side() {
        // Cyclobutene written with the double bond on the ring closure.
        let m = parse_smiles_kekulized("C=1CCC=1").unwrap();
        assert!(m.octet_check().all_satisfied());
    }

    #[test]
    fn unclosed_ring_rejected() {
        assert_eq!(
            parse_smiles_kekulized("C1CC").unwrap_err(),
            SmilesError::UnclosedRing { digit: 1 }
        );
    }

    #[test]
    fn two_letter_elements() {
        let m = parse_smiles_kekulized("ClCBr").unwrap();
        assert_eq!(m.atom(0), Element::Cl);
        assert_eq!(m.atom(2), Element::Br);
        assert!(m.octet_check().all_satisfied());
    }

    #[test]
    fn octet_validity_of_parsed_octet_molecules() {
        for s in ["C", "CC", "C=C", "C#N", "CCO", "CC(C)C", "C1CCCCC1", "FC(F)(F)F"] {
            let m = parse_smiles_kekulized(s).unwrap();
            assert!(m.octet_check().all_satisfied(), "{s}");
        }
    }
}
