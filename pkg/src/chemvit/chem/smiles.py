"""SMILES reader.

Grammar coverage: bare organic-subset atoms (B C N O P S F Cl Br I) and
their aromatic lowercase forms, bracket atoms with isotope / explicit H /
charge, bonds ``- = # :``, branches, ring closures (digits and %nn), and
'.'-separated fragments. Stereo tokens (@, @@, /, \\) are accepted and
discarded with ``stereo_markers_seen`` set on the result. Errors carry the
byte offset of the offending token.
"""

from __future__ import annotations

import re

from ..errors import ParseError
from .molecule import (AROMATIC_ELEMENTS, ATOMIC_NUMBERS, ORGANIC_SUBSET,
                       Atom, Bond, Molecule)

_TWO_LETTER_ORGANIC = ("Cl", "Br")
_BOND_ORDERS = {"-": 1, "=": 2, "#": 3}

_BRACKET = re.compile(
    r"""\[
        (?P<isotope>\d+)?
        (?P<symbol>[A-Z][a-z]?|[bcnops])
        (?P<stereo>@{1,2})?
        (?P<hydro>H\d*)?
        (?P<charge>\+\d+|-\d+|\++|-+)?
        \]""",
    re.VERBOSE,
)


def _parse_charge(text: str) -> int:
    if text[0] == "+":
        return int(text[1:]) if text[1:].isdigit() else len(text)
    return -int(text[1:]) if text[1:].isdigit() else -len(text)


def _bracket_atom(match: re.Match, offset: int) -> tuple[Atom, bool]:
    symbol = match.group("symbol")
    aromatic = symbol[0].islower()
    element = symbol.capitalize() if aromatic else symbol
    if element not in ATOMIC_NUMBERS:
        raise ParseError(f"unknown element symbol {symbol!r}", offset)
    if aromatic and element not in AROMATIC_ELEMENTS:
        raise ParseError(f"{symbol!r} cannot be aromatic", offset)
    hydro = match.group("hydro")
    h_count = 0
    if hydro is not None:
        h_count = int(hydro[1:]) if len(hydro) > 1 else 1
    charge = _parse_charge(match.group("charge")) if match.group("charge") else 0
    isotope = int(match.group("isotope")) if match.group("isotope") else None
    atom = Atom(element=element, atomic_number=ATOMIC_NUMBERS[element],
                charge=charge, isotope=isotope, aromatic=aromatic,
                h_count=h_count, from_bracket=True)
    return atom, match.group("stereo") is not None


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.atoms: list[Atom] = []
        self.offsets: list[int] = []
        self.bonds: list[Bond] = []
        self.prev: int | None = None
        self.pending: tuple[int, bool] | None = None   # (order, aromatic)
        self.pending_offset = 0
        self.branch_stack: list[tuple[int, int]] = []  # (anchor atom, '(' offset)
        self.rings: dict[int, tuple[int, tuple[int, bool] | None, int]] = {}
        self.stereo_seen = False

    def fail(self, message: str, offset: int | None = None):
        raise ParseError(message, self.pos if offset is None else offset)

    def add_atom(self, atom: Atom, offset: int):
        idx = len(self.atoms)
        self.atoms.append(atom)
        self.offsets.append(offset)
        if self.prev is not None:
            self.connect(self.prev, idx, self.pending, offset)
        elif self.pending is not None:
            self.fail("bond symbol with no preceding atom", self.pending_offset)
        self.pending = None
        self.prev = idx

    def connect(self, a: int, b: int, bond: tuple[int, bool] | None, offset: int):
        if bond is None:
            both_aromatic = self.atoms[a].aromatic and self.atoms[b].aromatic
            bond = (1, both_aromatic)
        order, aromatic = bond
        if a == b:
            self.fail("ring bond connects an atom to itself", offset)
        if any(frozenset((x.a, x.b)) == frozenset((a, b)) for x in self.bonds):
            self.fail(f"duplicate bond between atoms {a} and {b}", offset)
        self.bonds.append(Bond(a, b, order, aromatic))

    def ring_closure(self, number: int, offset: int):
        if self.prev is None:
            self.fail("ring closure before any atom", offset)
        if number in self.rings:
            other, other_bond, other_off = self.rings.pop(number)
            bond = self.pending
            if bond is not None and other_bond is not None and bond != other_bond:
                self.fail(f"conflicting bond orders on ring closure {number}", offset)
            self.connect(other, self.prev, bond or other_bond, offset)
            self.pending = None
        else:
            self.rings[number] = (self.prev, self.pending, offset)
            self.pending = None

    def parse(self) -> Molecule:
        text = self.text
        if not text:
            self.fail("empty SMILES", 0)
        while self.pos < len(text):
            start = self.pos
            ch = text[start]
            if ch == "[":
                match = _BRACKET.match(text, start)
                if match is None:
                    self.fail("malformed bracket atom", start)
                atom, stereo = _bracket_atom(match, start)
                self.stereo_seen |= stereo
                self.pos = match.end()
                self.add_atom(atom, start)
            elif ch == "(":
                if self.prev is None:
                    self.fail("branch with no preceding atom", start)
                self.branch_stack.append((self.prev, start))
                self.pos += 1
            elif ch == ")":
                if not self.branch_stack:
                    self.fail("unbalanced ')'", start)
                self.prev = self.branch_stack.pop()[0]
                self.pos += 1
            elif ch in _BOND_ORDERS or ch == ":":
                if self.pending is not None:
                    self.fail("two bond symbols in a row", start)
                self.pending = (1, True) if ch == ":" else (_BOND_ORDERS[ch], False)
                self.pending_offset = start
                self.pos += 1
            elif ch in "/\\":
                if self.pending is not None:
                    self.fail("two bond symbols in a row", start)
                self.stereo_seen = True
                self.pending = (1, False)
                self.pending_offset = start
                self.pos += 1
            elif ch == ".":
                if self.pending is not None:
                    self.fail("'.' cannot follow a bond symbol", start)
                self.prev = None
                self.pos += 1
            elif ch == "%":
                digits = text[start + 1:start + 3]
                if len(digits) != 2 or not digits.isdigit():
                    self.fail("'%' ring closure needs two digits", start)
                self.pos += 3
                self.ring_closure(int(digits), start)
            elif ch.isdigit():
                self.pos += 1
                self.ring_closure(int(ch), start)
            else:
                symbol = None
                if text[start:start + 2] in _TWO_LETTER_ORGANIC:
                    symbol = text[start:start + 2]
                elif ch.upper() in ORGANIC_SUBSET and len(ch) == 1:
                    if ch.islower() and ch.capitalize() not in AROMATIC_ELEMENTS:
                        self.fail(f"unknown symbol {ch!r}", start)
                    symbol = ch
                if symbol is None:
                    self.fail(f"unknown symbol {ch!r}", start)
                aromatic = symbol.islower()
                element = symbol.capitalize() if aromatic else symbol
                self.pos += len(symbol)
                self.add_atom(Atom(element=element,
                                   atomic_number=ATOMIC_NUMBERS[element],
                                   aromatic=aromatic), start)
        if self.branch_stack:
            self.fail("unbalanced '('", self.branch_stack[-1][1])
        if self.pending is not None:
            self.fail("dangling bond symbol", self.pending_offset)
        if self.rings:
            number, (_, _, offset) = next(iter(self.rings.items()))
            self.fail(f"unmatched ring closure {number}", offset)
        if not self.atoms:
            self.fail("no atoms in SMILES", 0)
        return Molecule.from_parts(self.atoms, self.bonds, self.stereo_seen,
                                   self.offsets)


def parse_smiles(text: str) -> Molecule:
    """Parse a SMILES string into a Molecule. Dot-separated input yields a
    disconnected graph; reaction components should be split beforehand."""
    return _Parser(text).parse()
