"""Molecular graph model: atoms, bonds, valence rules and ring perception.

The valence model is fixed-table: B 3; C 4; N 3; O 2; P 3/5; S 2/4/6;
halogens 1. Implicit hydrogens are filled only for bare organic-subset
atoms; bracket atoms carry exactly the hydrogen count they were written
with. Aromaticity is taken from the input (lowercase atoms / ':' bonds);
no kekulization or re-perception is performed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import networkx as nx

from ..errors import ParseError

ORGANIC_SUBSET = ("B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I")
AROMATIC_ELEMENTS = ("B", "C", "N", "O", "P", "S")

DEFAULT_VALENCES: dict[str, tuple[int, ...]] = {
    "B": (3,), "C": (4,), "N": (3,), "O": (2,),
    "P": (3, 5), "S": (2, 4, 6),
    "F": (1,), "Cl": (1,), "Br": (1,), "I": (1,),
}

ATOMIC_NUMBERS: dict[str, int] = {
    "H": 1, "He": 2, "Li": 3, "Be": 4, "B": 5, "C": 6, "N": 7, "O": 8,
    "F": 9, "Ne": 10, "Na": 11, "Mg": 12, "Al": 13, "Si": 14, "P": 15,
    "S": 16, "Cl": 17, "Ar": 18, "K": 19, "Ca": 20, "Ti": 22, "Cr": 24,
    "Mn": 25, "Fe": 26, "Co": 27, "Ni": 28, "Cu": 29, "Zn": 30, "Ga": 31,
    "Ge": 32, "As": 33, "Se": 34, "Br": 35, "Kr": 36, "Rb": 37, "Sr": 38,
    "Mo": 42, "Ru": 44, "Rh": 45, "Pd": 46, "Ag": 47, "Cd": 48, "In": 49,
    "Sn": 50, "Sb": 51, "Te": 52, "I": 53, "Xe": 54, "Cs": 55, "Ba": 56,
    "W": 74, "Pt": 78, "Au": 79, "Hg": 80, "Tl": 81, "Pb": 82, "Bi": 83,
}

# IUPAC 2021 standard atomic weights, conventional values to 4 decimals.
ATOMIC_MASSES: dict[str, float] = {
    "H": 1.0080, "He": 4.0026, "Li": 6.9400, "Be": 9.0122, "B": 10.8110,
    "C": 12.0110, "N": 14.0070, "O": 15.9990, "F": 18.9984, "Ne": 20.1797,
    "Na": 22.9898, "Mg": 24.3050, "Al": 26.9815, "Si": 28.0850, "P": 30.9738,
    "S": 32.0600, "Cl": 35.4500, "Ar": 39.9500, "K": 39.0983, "Ca": 40.0780,
    "Ti": 47.8670, "Cr": 51.9961, "Mn": 54.9380, "Fe": 55.8450, "Co": 58.9332,
    "Ni": 58.6934, "Cu": 63.5460, "Zn": 65.3800, "Ga": 69.7230, "Ge": 72.6300,
    "As": 74.9216, "Se": 78.9710, "Br": 79.9040, "Kr": 83.7980, "Rb": 85.4678,
    "Sr": 87.6200, "Mo": 95.9500, "Ru": 101.0700, "Rh": 102.9055, "Pd": 106.4200,
    "Ag": 107.8682, "Cd": 112.4140, "In": 114.8180, "Sn": 118.7100,
    "Sb": 121.7600, "Te": 127.6000, "I": 126.9045, "Xe": 131.2930,
    "Cs": 132.9055, "Ba": 137.3270, "W": 183.8400, "Pt": 195.0840,
    "Au": 196.9666, "Hg": 200.5920, "Tl": 204.3800, "Pb": 207.2000,
    "Bi": 208.9804,
}


@dataclass(frozen=True)
class Atom:
    element: str
    atomic_number: int
    charge: int = 0
    isotope: Optional[int] = None
    aromatic: bool = False
    h_count: int = 0
    from_bracket: bool = False

    @property
    def is_heavy(self) -> bool:
        return self.atomic_number > 1


@dataclass(frozen=True)
class Bond:
    a: int
    b: int
    order: int = 1          # 1, 2 or 3; aromatic bonds store order 1
    aromatic: bool = False
    in_ring: bool = False

    def other(self, idx: int) -> int:
        return self.b if idx == self.a else self.a

    @property
    def key(self) -> tuple:
        """Order/aromaticity identity used in hashing and ranking."""
        return (4, ) if self.aromatic else (self.order, )


def implicit_hydrogens(element: str, aromatic: bool,
                       bond_weights: list[float], offset: int = 0) -> int:
    """Hydrogen count that fills the atom up to its next standard valence.

    Aromatic bonds weigh 1.5; aromatic atoms additionally reserve one
    valence unit for the ring system (so benzene carbons get one H and
    ring-fusion carbons none). Raises on valence overflow.
    """
    valences = DEFAULT_VALENCES.get(element)
    if valences is None:
        return 0
    if aromatic:
        used = len(bond_weights) + 1
        return max(valences[0] - used, 0)
    total = math.ceil(sum(bond_weights))
    for v in valences:
        if v >= total:
            return v - total
    raise ParseError(
        f"valence overflow on {element}: {total} bonds exceed {valences[-1]}",
        offset)


@dataclass(frozen=True)
class Molecule:
    """Immutable atom/bond graph. Build with `Molecule.from_parts` so that
    implicit hydrogens and ring membership get filled in."""

    atoms: tuple[Atom, ...]
    bonds: tuple[Bond, ...]
    stereo_markers_seen: bool = False

    @staticmethod
    def from_parts(atoms: list[Atom], bonds: list[Bond],
                   stereo_markers_seen: bool = False,
                   atom_offsets: Optional[list[int]] = None) -> "Molecule":
        n = len(atoms)
        seen_pairs = set()
        incident: list[list[Bond]] = [[] for _ in range(n)]
        for bond in bonds:
            if not (0 <= bond.a < n and 0 <= bond.b < n) or bond.a == bond.b:
                raise ParseError(f"invalid bond endpoints {bond.a}-{bond.b}")
            pair = frozenset((bond.a, bond.b))
            if pair in seen_pairs:
                raise ParseError(f"duplicate bond between atoms {bond.a} and {bond.b}")
            seen_pairs.add(pair)
            incident[bond.a].append(bond)
            incident[bond.b].append(bond)

        filled = []
        for idx, atom in enumerate(atoms):
            if atom.from_bracket:
                filled.append(atom)
                continue
            weights = [1.5 if b.aromatic else float(b.order) for b in incident[idx]]
            off = atom_offsets[idx] if atom_offsets else None
            h = implicit_hydrogens(atom.element, atom.aromatic, weights, off)
            filled.append(Atom(atom.element, atom.atomic_number, atom.charge,
                               atom.isotope, atom.aromatic, h))

        ring_pairs = set()
        if bonds:
            graph = nx.Graph()
            graph.add_nodes_from(range(n))
            graph.add_edges_from((b.a, b.b) for b in bonds)
            bridges = {frozenset(e) for e in nx.bridges(graph)}
            ring_pairs = {frozenset((b.a, b.b)) for b in bonds
                          if frozenset((b.a, b.b)) not in bridges}
        flagged = tuple(
            Bond(b.a, b.b, b.order, b.aromatic,
                 in_ring=frozenset((b.a, b.b)) in ring_pairs)
            for b in bonds)
        return Molecule(tuple(filled), flagged, stereo_markers_seen)

    @cached_property
    def _adjacency(self) -> tuple[tuple[Bond, ...], ...]:
        table: list[list[Bond]] = [[] for _ in self.atoms]
        for bond in self.bonds:
            table[bond.a].append(bond)
            table[bond.b].append(bond)
        return tuple(tuple(row) for row in table)

    def neighbors(self, idx: int) -> tuple[Bond, ...]:
        return self._adjacency[idx]

    def degree(self, idx: int) -> int:
        return len(self._adjacency[idx])

    def heavy_degree(self, idx: int) -> int:
        return sum(1 for b in self._adjacency[idx]
                   if self.atoms[b.other(idx)].is_heavy)

    @cached_property
    def component_count(self) -> int:
        if not self.atoms:
            return 0
        graph = nx.Graph()
        graph.add_nodes_from(range(len(self.atoms)))
        graph.add_edges_from((b.a, b.b) for b in self.bonds)
        return nx.number_connected_components(graph)

    @property
    def is_connected(self) -> bool:
        return self.component_count <= 1
