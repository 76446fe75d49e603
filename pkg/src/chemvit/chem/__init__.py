"""SMILES parsing, canonicalization, reactions and descriptors."""

from .canonical import canonical_ranks, canonical_smiles
from .descriptors import (descriptors, hydrogen_bond_acceptors,
                          hydrogen_bond_donors, molecular_weight,
                          rotatable_bonds)
from .molecule import (ATOMIC_MASSES, ATOMIC_NUMBERS, DEFAULT_VALENCES,
                       ORGANIC_SUBSET, Atom, Bond, Molecule)
from .reaction import (ReactionRecord, canonical_reaction, format_reaction,
                       parse_reaction, split_molecules)
from .smiles import parse_smiles

__all__ = [
    "ATOMIC_MASSES", "ATOMIC_NUMBERS", "DEFAULT_VALENCES", "ORGANIC_SUBSET",
    "Atom", "Bond", "Molecule", "ReactionRecord",
    "canonical_ranks", "canonical_reaction", "canonical_smiles",
    "descriptors", "format_reaction", "hydrogen_bond_acceptors",
    "hydrogen_bond_donors", "molecular_weight", "parse_reaction",
    "parse_smiles", "rotatable_bonds", "split_molecules",
]
