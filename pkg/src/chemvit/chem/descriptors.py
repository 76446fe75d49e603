"""Light molecular descriptors: MW, HBD, HBA, RB."""

from __future__ import annotations

from .molecule import ATOMIC_MASSES, Molecule

_DONOR_ACCEPTOR = {7, 8}  # N and O


def molecular_weight(mol: Molecule) -> float:
    """Sum of standard atomic masses including implicit/explicit hydrogens.
    Isotope labels do not change the mass used."""
    h_mass = ATOMIC_MASSES["H"]
    total = 0.0
    for atom in mol.atoms:
        total += ATOMIC_MASSES[atom.element] + atom.h_count * h_mass
    return total


def hydrogen_bond_donors(mol: Molecule) -> int:
    return sum(1 for atom in mol.atoms
               if atom.atomic_number in _DONOR_ACCEPTOR and atom.h_count >= 1)


def hydrogen_bond_acceptors(mol: Molecule) -> int:
    return sum(1 for atom in mol.atoms
               if atom.atomic_number in _DONOR_ACCEPTOR)


def rotatable_bonds(mol: Molecule) -> int:
    """Single non-ring bonds whose endpoints both connect to at least two
    heavy atoms."""
    count = 0
    for bond in mol.bonds:
        if bond.order != 1 or bond.aromatic or bond.in_ring:
            continue
        if not (mol.atoms[bond.a].is_heavy and mol.atoms[bond.b].is_heavy):
            continue
        if mol.heavy_degree(bond.a) >= 2 and mol.heavy_degree(bond.b) >= 2:
            count += 1
    return count


def descriptors(mol: Molecule) -> dict[str, float | int]:
    return {
        "MW": molecular_weight(mol),
        "HBD": hydrogen_bond_donors(mol),
        "HBA": hydrogen_bond_acceptors(mol),
        "RB": rotatable_bonds(mol),
    }
