"""Deterministic 2D molecule rasterizer with exact foreground masks.

The contract is sparsity and mask fidelity, not publication-quality
drawing: every pixel touched by a stroke or glyph is recorded in the
mask, and the same (molecule, style, seed) triple always produces the
same bytes. Layout: rings as regular polygons, acyclic neighbours fanned
around the free arc with a 120-degree zig-zag for plain chains, then a
fixed number of deterministic repulsion passes for overlaps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import networkx as nx
import numpy as np

from .chem.canonical import canonical_ranks
from .chem.molecule import Molecule
from .chem.reaction import ReactionRecord
from .errors import DisconnectedError, UnsupportedInputError

MAX_ATOMS = 64
MARGIN_FRACTION = 0.10
_REPULSION_PASSES = 24
_MIN_SEPARATION = 0.5

PALETTES = (
    ((255, 255, 255), (0, 0, 0)),
    ((250, 245, 235), (30, 30, 60)),
    ((240, 248, 255), (12, 60, 24)),
    ((252, 250, 252), (84, 22, 22)),
)


@dataclass(frozen=True)
class Style:
    canvas_px: int = 448
    stroke_px: float = 2.0
    font_scale: float = 1.0
    background: tuple[int, int, int] = (255, 255, 255)
    line_color: tuple[int, int, int] = (0, 0, 0)


def sample_style(seed: int, canvas_px: int = 448) -> Style:
    """Draw stroke width (1-4 px), font scale and palette from the seed."""
    rng = np.random.default_rng(seed)
    bg, fg = PALETTES[int(rng.integers(len(PALETTES)))]
    stroke = float(1.0 + 3.0 * rng.random())
    font_scale = float(0.8 + 0.5 * rng.random())
    return Style(canvas_px=canvas_px, stroke_px=stroke, font_scale=font_scale,
                 background=bg, line_color=fg)


@dataclass
class Depiction:
    image: np.ndarray            # (H, W, 3) uint8
    mask: np.ndarray             # (H, W) bool, True where painted
    style: Style
    marks: dict = field(default_factory=dict)

    @property
    def coverage(self) -> float:
        return float(self.mask.mean())


# ---------------------------------------------------------------- layout

def _rotate(vec: np.ndarray, degrees: float) -> np.ndarray:
    rad = math.radians(degrees)
    c, s = math.cos(rad), math.sin(rad)
    return np.array([c * vec[0] - s * vec[1], s * vec[0] + c * vec[1]])


def _ring_radius(k: int) -> float:
    return 0.5 / math.sin(math.pi / k)


def _polygon_from_edge(ring: list[int], coords: dict, start_pos: int,
                       orientation: int) -> dict[int, np.ndarray]:
    """Walk the ring from an already-placed edge, turning by the exterior
    angle at each step."""
    k = len(ring)
    ext = orientation * (360.0 / k)
    out: dict[int, np.ndarray] = {}
    a = ring[start_pos]
    b = ring[(start_pos + 1) % k]
    pos = coords[b].copy()
    direction = coords[b] - coords[a]
    for step in range(2, k + 1):
        direction = _rotate(direction, ext)
        pos = pos + direction
        atom = ring[(start_pos + step) % k]
        if atom not in coords:
            out[atom] = pos.copy()
    return out


def _place_ring(ring: list[int], coords: dict, free_dir: np.ndarray | None):
    k = len(ring)
    placed_positions = [p for p, atom in enumerate(ring) if atom in coords]
    edge_pos = None
    for p in range(k):
        if ring[p] in coords and ring[(p + 1) % k] in coords:
            edge_pos = p
            break
    if edge_pos is not None:
        others = [coords[i] for i in coords if i not in ring]
        best = None
        for orientation in (1, -1):
            cand = _polygon_from_edge(ring, coords, edge_pos, orientation)
            if not cand:
                return
            centroid = np.mean(list(cand.values()), axis=0)
            if others:
                score = min(float(np.linalg.norm(centroid - o)) for o in others)
            else:
                score = float(orientation)
            if best is None or score > best[0]:
                best = (score, cand)
        coords.update(best[1])
        return
    radius = _ring_radius(k)
    if placed_positions:
        p = placed_positions[0]
        anchor = coords[ring[p]]
        direction = free_dir if free_dir is not None else np.array([0.0, 1.0])
        center = anchor + direction * radius
        base_angle = math.degrees(math.atan2(-direction[1], -direction[0]))
    else:
        center = np.zeros(2)
        base_angle = 90.0
        p = 0
    for step in range(k):
        atom = ring[(p + step) % k]
        if atom in coords:
            continue
        angle = math.radians(base_angle + 360.0 * step / k)
        coords[atom] = center + radius * np.array([math.cos(angle), math.sin(angle)])


def _free_direction(idx: int, coords: dict, neighbors: list[int]) -> np.ndarray:
    angles = sorted(
        math.atan2(*(coords[n] - coords[idx])[::-1]) for n in neighbors
        if n in coords)
    if not angles:
        return np.array([1.0, 0.0])
    if len(angles) == 1:
        a = angles[0] + math.pi
        return np.array([math.cos(a), math.sin(a)])
    gaps = [(angles[(i + 1) % len(angles)] - angles[i]) % (2 * math.pi)
            for i in range(len(angles))]
    best = int(np.argmax(gaps))
    mid = angles[best] + gaps[best] / 2.0
    return np.array([math.cos(mid), math.sin(mid)])


def _fan_offsets(k: int) -> list[float]:
    if k == 1:
        return [0.0]
    if k == 2:
        return [-60.0, 60.0]
    if k == 3:
        return [-90.0, 0.0, 90.0]
    return [-120.0 + 240.0 * i / (k - 1) for i in range(k)]


def layout_2d(mol: Molecule) -> np.ndarray:
    """Unit-bond-length 2D coordinates, deterministic for a given molecule."""
    n = len(mol.atoms)
    if n > MAX_ATOMS:
        raise UnsupportedInputError(f"molecule has {n} atoms; limit is {MAX_ATOMS}")
    if not mol.is_connected:
        raise DisconnectedError("layout requires a connected molecule")
    if n == 0:
        return np.zeros((0, 2))
    ranks = canonical_ranks(mol)

    def order_key(i: int) -> tuple:
        return (ranks[i], i)

    graph = nx.Graph()
    graph.add_nodes_from(range(n))
    graph.add_edges_from((b.a, b.b) for b in mol.bonds)
    rings = [list(c) for c in nx.cycle_basis(graph)]
    atom_rings: dict[int, list[int]] = {}
    for rid, ring in enumerate(rings):
        for atom in ring:
            atom_rings.setdefault(atom, []).append(rid)
    ring_done = [False] * len(rings)

    coords: dict[int, np.ndarray] = {}
    root = min(range(n), key=order_key)
    depth = {root: 0}
    if root in atom_rings:
        rid = atom_rings[root][0]
        _place_ring(rings[rid], coords, None)
        ring_done[rid] = True
    else:
        coords[root] = np.zeros(2)

    queue = [root]
    visited = {root}
    while queue:
        atom = queue.pop(0)
        nbrs = sorted((b.other(atom) for b in mol.neighbors(atom)), key=order_key)
        for rid in atom_rings.get(atom, ()):  # rings through this atom first
            if not ring_done[rid]:
                free = _free_direction(atom, coords,
                                       [b.other(atom) for b in mol.neighbors(atom)])
                _place_ring(rings[rid], coords, free)
                ring_done[rid] = True
        fresh = [b for b in nbrs if b not in coords]
        if fresh:
            placed_nbrs = [b for b in nbrs if b in coords]
            if len(placed_nbrs) == 1 and len(fresh) == 1:
                incoming = coords[atom] - coords[placed_nbrs[0]]
                sign = 1.0 if depth[atom] % 2 == 0 else -1.0
                direction = _rotate(incoming, sign * 60.0)
                norm = np.linalg.norm(direction)
                direction = direction / norm if norm > 0 else np.array([1.0, 0.0])
                coords[fresh[0]] = coords[atom] + direction
            elif not placed_nbrs:
                for pos, b in enumerate(fresh):
                    angle = math.radians(360.0 * pos / len(fresh))
                    coords[b] = coords[atom] + np.array([math.cos(angle),
                                                         math.sin(angle)])
            else:
                base = _free_direction(atom, coords, placed_nbrs)
                base_angle = math.degrees(math.atan2(base[1], base[0]))
                for off, b in zip(_fan_offsets(len(fresh)), fresh):
                    a = math.radians(base_angle + off)
                    coords[b] = coords[atom] + np.array([math.cos(a), math.sin(a)])
        for b in nbrs:
            if b not in visited:
                visited.add(b)
                depth[b] = depth[atom] + 1
                queue.append(b)

    points = np.array([coords[i] for i in range(n)])
    for _ in range(_REPULSION_PASSES):
        moved = False
        for i in range(n):
            for j in range(i + 1, n):
                delta = points[j] - points[i]
                dist = float(np.linalg.norm(delta))
                if dist >= _MIN_SEPARATION:
                    continue
                if dist < 1e-12:
                    delta = np.array([1.0, 0.0]) if (i + j) % 2 == 0 else np.array([0.0, 1.0])
                    dist = 1e-12
                push = (_MIN_SEPARATION - dist) / 2.0
                step = delta / dist * push
                points[i] -= step
                points[j] += step
                moved = True
        if not moved:
            break
    return points


# ---------------------------------------------------------------- painting

class _Painter:
    def __init__(self, width: int, height: int, background: tuple[int, int, int]):
        self.rgb = np.empty((height, width, 3), dtype=np.float64)
        self.rgb[:] = np.array(background, dtype=np.float64)
        self.mask = np.zeros((height, width), dtype=bool)
        self.width = width
        self.height = height

    def segment(self, p0, p1, stroke: float, color: tuple[int, int, int]):
        """Anti-aliased thick segment; records every touched pixel."""
        p0 = np.asarray(p0, dtype=np.float64)
        p1 = np.asarray(p1, dtype=np.float64)
        half = stroke / 2.0
        pad = half + 1.0
        x_min = max(int(math.floor(min(p0[0], p1[0]) - pad)), 0)
        x_max = min(int(math.ceil(max(p0[0], p1[0]) + pad)), self.width - 1)
        y_min = max(int(math.floor(min(p0[1], p1[1]) - pad)), 0)
        y_max = min(int(math.ceil(max(p0[1], p1[1]) + pad)), self.height - 1)
        if x_min > x_max or y_min > y_max:
            return
        ys, xs = np.mgrid[y_min:y_max + 1, x_min:x_max + 1]
        px = xs + 0.5
        py = ys + 0.5
        seg = p1 - p0
        seg_len2 = float(seg @ seg)
        if seg_len2 < 1e-18:
            dist = np.hypot(px - p0[0], py - p0[1])
        else:
            t = ((px - p0[0]) * seg[0] + (py - p0[1]) * seg[1]) / seg_len2
            t = np.clip(t, 0.0, 1.0)
            dist = np.hypot(px - (p0[0] + t * seg[0]), py - (p0[1] + t * seg[1]))
        cov = np.clip(half + 0.5 - dist, 0.0, 1.0)
        touched = cov > 0.0
        if not touched.any():
            return
        window = self.rgb[y_min:y_max + 1, x_min:x_max + 1]
        window *= (1.0 - cov)[..., None]
        window += cov[..., None] * np.array(color, dtype=np.float64)
        self.mask[y_min:y_max + 1, x_min:x_max + 1] |= touched

    def image(self) -> np.ndarray:
        return np.clip(np.rint(self.rgb), 0, 255).astype(np.uint8)


_GLYPHS: dict[str, tuple[tuple[tuple[float, float], tuple[float, float]], ...]] = {
    "B": (((0, 0), (0, 1)), ((0, 1), (0.8, 1)), ((0.8, 1), (0.8, 0.5)),
          ((0, 0.5), (0.9, 0.5)), ((0.9, 0.5), (0.9, 0)), ((0, 0), (0.9, 0))),
    "C": (((1, 0), (0, 0)), ((0, 0), (0, 1)), ((0, 1), (1, 1))),
    "F": (((0, 0), (0, 1)), ((0, 1), (1, 1)), ((0, 0.5), (0.8, 0.5))),
    "H": (((0, 0), (0, 1)), ((1, 0), (1, 1)), ((0, 0.5), (1, 0.5))),
    "I": (((0.5, 0), (0.5, 1)), ((0.2, 1), (0.8, 1)), ((0.2, 0), (0.8, 0))),
    "N": (((0, 0), (0, 1)), ((0, 1), (1, 0)), ((1, 0), (1, 1))),
    "O": (((0, 0), (0, 1)), ((0, 1), (1, 1)), ((1, 1), (1, 0)), ((1, 0), (0, 0))),
    "P": (((0, 0), (0, 1)), ((0, 1), (1, 1)), ((1, 1), (1, 0.5)), ((1, 0.5), (0, 0.5))),
    "S": (((1, 1), (0, 1)), ((0, 1), (0, 0.5)), ((0, 0.5), (1, 0.5)),
          ((1, 0.5), (1, 0)), ((1, 0), (0, 0))),
    "l": (((0.5, 0), (0.5, 1)),),
    "r": (((0, 0), (0, 0.6)), ((0, 0.6), (0.7, 0.6))),
    "+": (((0.5, 0.1), (0.5, 0.9)), ((0.1, 0.5), (0.9, 0.5))),
    "-": (((0.1, 0.5), (0.9, 0.5)),),
    "0": (((0, 0), (0, 1)), ((0, 1), (1, 1)), ((1, 1), (1, 0)), ((1, 0), (0, 0))),
    "1": (((0.5, 0), (0.5, 1)),),
    "2": (((0, 1), (1, 1)), ((1, 1), (1, 0.5)), ((1, 0.5), (0, 0.5)),
          ((0, 0.5), (0, 0)), ((0, 0), (1, 0))),
    "3": (((0, 1), (1, 1)), ((1, 1), (1, 0)), ((0, 0.5), (1, 0.5)), ((0, 0), (1, 0))),
    "4": (((0, 1), (0, 0.5)), ((0, 0.5), (1, 0.5)), ((1, 1), (1, 0))),
    "5": (((1, 1), (0, 1)), ((0, 1), (0, 0.5)), ((0, 0.5), (1, 0.5)),
          ((1, 0.5), (1, 0)), ((1, 0), (0, 0))),
    "6": (((1, 1), (0, 1)), ((0, 1), (0, 0)), ((0, 0), (1, 0)),
          ((1, 0), (1, 0.5)), ((1, 0.5), (0, 0.5))),
    "7": (((0, 1), (1, 1)), ((1, 1), (0.5, 0))),
    "8": (((0, 0), (0, 1)), ((0, 1), (1, 1)), ((1, 1), (1, 0)), ((1, 0), (0, 0)),
          ((0, 0.5), (1, 0.5))),
    "9": (((1, 0.5), (0, 0.5)), ((0, 0.5), (0, 1)), ((0, 1), (1, 1)),
          ((1, 1), (1, 0))),
}


def _draw_text(painter: _Painter, text: str, center, height: float,
               stroke: float, color) -> tuple[float, float, float, float]:
    """Stroke-font text centered at `center`; returns the painted bbox."""
    advance = 0.85 * height
    width = advance * len(text) - 0.15 * height
    x0 = center[0] - width / 2.0
    y_top = center[1] - height / 2.0
    for pos, ch in enumerate(text):
        strokes = _GLYPHS.get(ch)
        if strokes is None:
            continue
        cx = x0 + pos * advance
        for (ax, ay), (bx, by) in strokes:
            painter.segment(
                (cx + ax * 0.7 * height, y_top + (1.0 - ay) * height),
                (cx + bx * 0.7 * height, y_top + (1.0 - by) * height),
                stroke, color)
    return (x0, y_top, x0 + width, y_top + height)


def _atom_label(mol: Molecule, idx: int) -> str:
    atom = mol.atoms[idx]
    if atom.element == "C" and atom.charge == 0 and len(mol.atoms) > 1:
        return ""
    label = atom.element
    if atom.element != "C" and atom.h_count >= 1:
        label += "H" + (str(atom.h_count) if atom.h_count > 1 else "")
    if atom.charge:
        sign = "+" if atom.charge > 0 else "-"
        label += sign if abs(atom.charge) == 1 else sign + str(abs(atom.charge))
    return label


def _paint_molecule(painter: _Painter, mol: Molecule, points: np.ndarray,
                    style: Style, scale: float, offset: np.ndarray):
    pix = points * scale
    pix[:, 1] = -pix[:, 1]  # raster y grows downward
    pix += offset
    sep = max(0.06 * scale, style.stroke_px + 1.0)
    for bond in mol.bonds:
        p0, p1 = pix[bond.a], pix[bond.b]
        direction = p1 - p0
        norm = float(np.linalg.norm(direction))
        perp = (np.array([-direction[1], direction[0]]) / norm if norm > 0
                else np.array([0.0, 1.0]))
        if bond.order == 2 and not bond.aromatic:
            for s in (-0.5, 0.5):
                painter.segment(p0 + perp * sep * s, p1 + perp * sep * s,
                                style.stroke_px, style.line_color)
        elif bond.order == 3:
            for s in (-1.0, 0.0, 1.0):
                painter.segment(p0 + perp * sep * s, p1 + perp * sep * s,
                                style.stroke_px, style.line_color)
        else:
            painter.segment(p0, p1, style.stroke_px, style.line_color)
    label_h = max(8.0, 0.32 * scale) * style.font_scale
    for idx in range(len(mol.atoms)):
        label = _atom_label(mol, idx)
        if label:
            _draw_text(painter, label, pix[idx], label_h,
                       max(1.0, style.stroke_px * 0.75), style.line_color)


def render(mol: Molecule, style: Style | None = None, seed: int = 0) -> Depiction:
    """Rasterize one molecule on a square canvas."""
    style = style or sample_style(seed)
    points = layout_2d(mol)
    painter = _Painter(style.canvas_px, style.canvas_px, style.background)
    if len(mol.atoms) > 0:
        span = points.max(axis=0) - points.min(axis=0) if len(points) > 1 else np.ones(2)
        span = np.maximum(span, 1.0)
        usable = style.canvas_px * (1.0 - 2.0 * MARGIN_FRACTION)
        scale = float(usable / span.max())
        center_units = (points.max(axis=0) + points.min(axis=0)) / 2.0
        center_px = center_units * scale
        center_px[1] = -center_px[1]
        offset = np.array([style.canvas_px / 2.0, style.canvas_px / 2.0]) - center_px
        _paint_molecule(painter, mol, points, style, scale, offset)
    return Depiction(image=painter.image(), mask=painter.mask, style=style)


def render_reaction(rxn: ReactionRecord, style: Style | None = None,
                    seed: int = 0) -> Depiction:
    """Reactants joined by '+', an arrow with agents above it, then
    products; canvas width grows with content."""
    style = style or sample_style(seed)
    unit = style.canvas_px / 5.0
    entries = []  # (kind, payload, width_units)
    for pos, mol in enumerate(rxn.reactants):
        if pos:
            entries.append(("plus", None, 1.0))
        entries.append(("mol", mol, None))
    entries.append(("arrow", None, 3.0))
    for pos, mol in enumerate(rxn.products):
        if pos:
            entries.append(("plus", None, 1.0))
        entries.append(("mol", mol, None))

    layouts = {}
    for kind, mol, _ in entries:
        if kind == "mol" and id(mol) not in layouts:
            pts = layout_2d(mol)
            if len(pts) > 1:
                pts = pts - pts.min(axis=0)
            layouts[id(mol)] = pts
    agent_layouts = [layout_2d(m) for m in rxn.agents]
    agent_layouts = [p - p.min(axis=0) if len(p) > 1 else p for p in agent_layouts]

    def dims(pts: np.ndarray) -> np.ndarray:
        if len(pts) < 2:
            return np.ones(2)
        return np.maximum(pts.max(axis=0), 1.0)

    total_units = 1.0  # leading margin
    for pos, (kind, mol, width) in enumerate(entries):
        total_units += dims(layouts[id(mol)])[0] if kind == "mol" else width
        total_units += 0.5
    total_units += 0.5  # trailing margin
    width_px = max(int(math.ceil(total_units * unit)), style.canvas_px // 2)
    painter = _Painter(width_px, style.canvas_px, style.background)
    mid_y = style.canvas_px * 0.58
    marks: dict = {"arrow": [], "plus": [], "molecules": []}

    cursor = 1.0 * unit
    for kind, mol, width in entries:
        if kind == "mol":
            pts = layouts[id(mol)]
            w_units, h_units = dims(pts)
            scale = min(unit, style.canvas_px * 0.8 / h_units)
            offset = np.array([cursor, mid_y + h_units * scale / 2.0])
            _paint_molecule(painter, mol, pts, style, scale, offset)
            marks["molecules"].append((cursor, cursor + w_units * scale))
            cursor += w_units * unit + 0.5 * unit
        elif kind == "plus":
            bbox = _draw_text(painter, "+", (cursor + 0.5 * unit, mid_y),
                              0.4 * unit, style.stroke_px, style.line_color)
            marks["plus"].append(bbox)
            cursor += width * unit + 0.5 * unit
        else:  # arrow
            x0, x1 = cursor + 0.4 * unit, cursor + (width - 0.4) * unit
            painter.segment((x0, mid_y), (x1, mid_y), style.stroke_px,
                            style.line_color)
            head = 0.3 * unit
            painter.segment((x1, mid_y), (x1 - head, mid_y - head * 0.6),
                            style.stroke_px, style.line_color)
            painter.segment((x1, mid_y), (x1 - head, mid_y + head * 0.6),
                            style.stroke_px, style.line_color)
            marks["arrow"].append((x0, mid_y - head, x1, mid_y + head))
            agent_scale = 0.45 * unit
            ay = mid_y - 0.6 * unit
            for pts, mol_a in zip(agent_layouts, rxn.agents):
                w_units, h_units = dims(pts)
                s = min(agent_scale, (x1 - x0) / max(w_units, 1.0))
                ox = (x0 + x1) / 2.0 - w_units * s / 2.0
                _paint_molecule(painter, mol_a, pts, style, s,
                                np.array([ox, ay]))
                ay -= h_units * s + 0.2 * unit
            cursor += width * unit + 0.5 * unit

    return Depiction(image=painter.image(), mask=painter.mask, style=style,
                     marks=marks)
