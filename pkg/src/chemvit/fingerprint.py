"""Topological path fingerprint and Tanimoto similarity.

Every simple path of 0..max_bonds bonds (0 bonds = a lone atom) is encoded
as the alternating sequence of (atomic number, aromatic flag) atom codes
and bond codes (order 1/2/3, or 4 for aromatic), read in whichever
direction is lexicographically smaller, hashed with 64-bit FNV-1a, and
folded onto the bit width with a mask (widths are powers of two).
"""

from __future__ import annotations

from dataclasses import dataclass

from .chem.molecule import Molecule
from .errors import ConfigurationError

DEFAULT_WIDTH = 2048
DEFAULT_MAX_BONDS = 7

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1


def _fnv1a(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h = ((h ^ byte) * _FNV_PRIME) & _MASK64
    return h


@dataclass(frozen=True)
class Fingerprint:
    """Fixed-width bit set stored as an int bitmask."""

    bits: int
    width: int = DEFAULT_WIDTH

    def __post_init__(self):
        if self.width < 1 or self.width & (self.width - 1):
            raise ConfigurationError("fingerprint width must be a power of two")

    @property
    def bit_count(self) -> int:
        return self.bits.bit_count()

    def positions(self) -> tuple[int, ...]:
        return tuple(i for i in range(self.width) if self.bits >> i & 1)

    def to_hex(self) -> str:
        return format(self.bits, f"0{self.width // 4}x")


def _atom_code(mol: Molecule, idx: int) -> tuple[int, int]:
    atom = mol.atoms[idx]
    return (atom.atomic_number, 1 if atom.aromatic else 0)


def path_codes(mol: Molecule, max_bonds: int = DEFAULT_MAX_BONDS) -> set[tuple]:
    """Direction-canonical encodings of all simple paths up to max_bonds."""
    codes: set[tuple] = set()
    for start in range(len(mol.atoms)):
        base = _atom_code(mol, start)
        codes.add((base,))
        stack = [(start, (start,), (base,))]
        while stack:
            atom, path_atoms, enc = stack.pop()
            if len(path_atoms) > max_bonds:
                continue
            for bond in mol.neighbors(atom):
                nxt = bond.other(atom)
                if nxt in path_atoms:
                    continue
                bond_code = 4 if bond.aromatic else bond.order
                nxt_enc = enc + (bond_code, _atom_code(mol, nxt))
                codes.add(min(nxt_enc, nxt_enc[::-1]))
                stack.append((nxt, path_atoms + (nxt,), nxt_enc))
    return codes


def _code_bytes(code: tuple) -> bytes:
    flat: list[int] = []
    for item in code:
        if isinstance(item, tuple):
            flat.extend(item)
        else:
            flat.append(item)
    return bytes(flat)


def fingerprint(mol: Molecule, width: int = DEFAULT_WIDTH,
                max_bonds: int = DEFAULT_MAX_BONDS) -> Fingerprint:
    bits = 0
    mask = width - 1
    if width < 1 or width & mask:
        raise ConfigurationError("fingerprint width must be a power of two")
    for code in path_codes(mol, max_bonds):
        bits |= 1 << (_fnv1a(_code_bytes(code)) & mask)
    return Fingerprint(bits=bits, width=width)


def tanimoto(a: Fingerprint, b: Fingerprint) -> float:
    """|A & B| / |A | B|; two empty fingerprints count as identical."""
    if a.width != b.width:
        raise ConfigurationError(
            f"fingerprint widths differ: {a.width} vs {b.width}")
    union = (a.bits | b.bits).bit_count()
    if union == 0:
        return 1.0
    return (a.bits & b.bits).bit_count() / union
