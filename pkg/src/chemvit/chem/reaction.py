"""Reaction strings: reactants>agents>products, each a dot-separated
molecule list."""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import ParseError, ReactionFormatError
from .canonical import canonical_smiles
from .molecule import Molecule
from .smiles import parse_smiles

COMPONENT_NAMES = ("reactants", "agents", "products")


@dataclass(frozen=True)
class ReactionRecord:
    reactants: tuple[Molecule, ...]
    agents: tuple[Molecule, ...]
    products: tuple[Molecule, ...]

    @property
    def components(self) -> tuple[tuple[Molecule, ...], ...]:
        return (self.reactants, self.agents, self.products)


def split_molecules(component: str) -> list[str]:
    """Split a component on top-level dots (dots inside parentheses stay)."""
    parts, depth, start = [], 0, 0
    for pos, ch in enumerate(component):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth = max(depth - 1, 0)
        elif ch == "." and depth == 0:
            parts.append(component[start:pos])
            start = pos + 1
    parts.append(component[start:])
    return [p for p in parts if p]


def parse_reaction(text: str) -> ReactionRecord:
    """Parse 'reactants>agents>products'. The agents component may be
    empty; the products component must contain at least one molecule."""
    pieces = text.split(">")
    if len(pieces) != 3:
        raise ReactionFormatError(
            f"expected 3 '>'-separated components, got {len(pieces)}")
    parsed: list[tuple[Molecule, ...]] = []
    offset = 0
    for name, piece in zip(COMPONENT_NAMES, pieces):
        molecules = []
        for mol_text in split_molecules(piece):
            try:
                molecules.append(parse_smiles(mol_text))
            except ParseError as exc:
                raise ParseError(
                    f"{name} component, {mol_text!r}: {exc}", offset) from exc
        parsed.append(tuple(molecules))
        offset += len(piece) + 1
    if not parsed[2]:
        raise ReactionFormatError("products component is empty")
    return ReactionRecord(*parsed)


def format_reaction(record: ReactionRecord) -> str:
    """Render a record back to reactants>agents>products. Molecules are
    emitted in canonical form, preserving their order within components."""
    return ">".join(
        ".".join(canonical_smiles(mol) for mol in component)
        for component in record.components)


def canonical_reaction(record: ReactionRecord) -> ReactionRecord:
    """Record with every molecule re-parsed from its canonical string."""
    return ReactionRecord(*(
        tuple(parse_smiles(canonical_smiles(mol)) for mol in component)
        for component in record.components))
