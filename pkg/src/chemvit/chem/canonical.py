"""Canonical atom ranking and SMILES emission.

Ranking is iterative neighbour refinement: atoms start from the invariant
(atomic number, charge, degree, H count, aromaticity, isotope) and are
re-ranked by the sorted multiset of (bond kind, neighbour rank) until the
partition stops changing. Remaining ties are broken by perturbing each
tied atom of the lowest-ranked ambiguous class in turn, recursing, and
keeping the lexicographically smallest emitted string, which makes the
result independent of input atom order.
"""

from __future__ import annotations

from ..errors import DisconnectedError, ParseError
from .molecule import (AROMATIC_ELEMENTS, ORGANIC_SUBSET, Atom, Bond,
                       Molecule, implicit_hydrogens)

_MAX_BRANCHES = 20000


def _initial_keys(mol: Molecule) -> list[tuple]:
    keys = []
    for idx, atom in enumerate(mol.atoms):
        keys.append((atom.atomic_number, atom.charge, mol.degree(idx),
                     atom.h_count, atom.aromatic, atom.isotope or 0))
    return keys


def _dense_ranks(keys: list) -> list[int]:
    order = sorted(set(keys))
    lookup = {key: rank for rank, key in enumerate(order)}
    return [lookup[key] for key in keys]


def _refine(mol: Molecule, ranks: list[int]) -> list[int]:
    n = len(ranks)
    while True:
        keys = []
        for idx in range(n):
            nbr = sorted((b.key, ranks[b.other(idx)]) for b in mol.neighbors(idx))
            keys.append((ranks[idx], tuple(nbr)))
        new_ranks = _dense_ranks(keys)
        if new_ranks == ranks:
            return ranks
        ranks = new_ranks


def _discrete_rankings(mol: Molecule, ranks: list[int], budget: list[int]):
    """Yield fully discrete rank assignments reachable by tie-breaking."""
    ranks = _refine(mol, ranks)
    n = len(ranks)
    if len(set(ranks)) == n:
        yield ranks
        return
    classes: dict[int, list[int]] = {}
    for idx, rank in enumerate(ranks):
        classes.setdefault(rank, []).append(idx)
    tied_rank = min(r for r, members in classes.items() if len(members) > 1)
    for idx in classes[tied_rank]:
        budget[0] -= 1
        if budget[0] < 0:
            raise ParseError("canonicalization tie-break budget exceeded")
        doubled = [r * 2 for r in ranks]
        doubled[idx] -= 1
        yield from _discrete_rankings(mol, _dense_ranks(doubled), budget)


def _default_h(mol: Molecule, idx: int) -> int:
    atom = mol.atoms[idx]
    weights = [1.5 if b.aromatic else float(b.order) for b in mol.neighbors(idx)]
    try:
        return implicit_hydrogens(atom.element, atom.aromatic, weights)
    except ParseError:
        return -1


def _atom_token(mol: Molecule, idx: int) -> str:
    atom = mol.atoms[idx]
    symbol = atom.element.lower() if atom.aromatic else atom.element
    bare_ok = (
        atom.element in ORGANIC_SUBSET
        and atom.charge == 0
        and atom.isotope is None
        and (not atom.aromatic or atom.element in AROMATIC_ELEMENTS)
        and _default_h(mol, idx) == atom.h_count
    )
    if bare_ok:
        return symbol
    parts = ["["]
    if atom.isotope is not None:
        parts.append(str(atom.isotope))
    parts.append(symbol)
    if atom.h_count == 1:
        parts.append("H")
    elif atom.h_count > 1:
        parts.append(f"H{atom.h_count}")
    if atom.charge:
        sign = "+" if atom.charge > 0 else "-"
        magnitude = abs(atom.charge)
        parts.append(sign if magnitude == 1 else f"{sign}{magnitude}")
    parts.append("]")
    return "".join(parts)


def _bond_token(mol: Molecule, bond: Bond) -> str:
    both_aromatic = mol.atoms[bond.a].aromatic and mol.atoms[bond.b].aromatic
    if bond.aromatic:
        return "" if both_aromatic else ":"
    if bond.order == 1:
        return "-" if both_aromatic else ""
    return "=" if bond.order == 2 else "#"


def _closure_token(number: int) -> str:
    return str(number) if number < 10 else f"%{number:02d}"


def _emit(mol: Molecule, ranks: list[int]) -> str:
    """Depth-first emission from the lowest-ranked atom, neighbours by rank.

    Pass 1 walks the graph once to fix the tree structure and assign
    ring-closure digits to both endpoints (ancestors are emitted before the
    back edge is discovered, so digits must be known up front). Pass 2
    renders the string from that structure.
    """
    root = min(range(len(ranks)), key=lambda i: ranks[i])
    visited = {root}
    tree: dict[int, list[Bond]] = {}
    digits: dict[int, list[tuple[int, str]]] = {i: [] for i in range(len(ranks))}
    seen_back: set[frozenset] = set()
    counter = [1]

    def explore(idx: int, parent: int | None):
        children = []
        nbrs = sorted((b for b in mol.neighbors(idx) if b.other(idx) != parent),
                      key=lambda b: ranks[b.other(idx)])
        for bond in nbrs:
            other = bond.other(idx)
            if other in visited:
                pair = frozenset((idx, other))
                if pair not in seen_back:
                    seen_back.add(pair)
                    number = counter[0]
                    counter[0] += 1
                    token = _bond_token(mol, bond)
                    digits[other].append((number, token))
                    digits[idx].append((number, token))
            else:
                visited.add(other)
                children.append(bond)
                explore(other, idx)
        tree[idx] = children

    explore(root, None)

    pieces: list[str] = []

    def render(idx: int):
        pieces.append(_atom_token(mol, idx))
        for number, token in sorted(digits[idx]):
            pieces.append(token + _closure_token(number))
        children = tree[idx]
        for pos, bond in enumerate(children):
            last = pos == len(children) - 1
            if not last:
                pieces.append("(")
            pieces.append(_bond_token(mol, bond))
            render(bond.other(idx))
            if not last:
                pieces.append(")")

    render(root)
    return "".join(pieces)


def canonical_ranks(mol: Molecule) -> tuple[int, ...]:
    """Refinement ranks before tie-breaking (ties share a rank)."""
    return tuple(_refine(mol, _dense_ranks(_initial_keys(mol))))


def canonical_smiles(mol: Molecule) -> str:
    """Unique SMILES string for a connected molecule, invariant to the
    input atom order."""
    if not mol.atoms:
        raise ParseError("cannot canonicalize an empty molecule")
    if not mol.is_connected:
        raise DisconnectedError(
            "molecule has multiple components; split on '.' and canonicalize each")
    budget = [_MAX_BRANCHES]
    start = _dense_ranks(_initial_keys(mol))
    best: str | None = None
    for ranks in _discrete_rankings(mol, start, budget):
        emitted = _emit(mol, ranks)
        if best is None or emitted < best:
            best = emitted
    assert best is not None
    return best
