"""Crystal data model, lattice parameter conversion, POSCAR I/O and periodic helpers.

Angles are radians everywhere in this module.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .elements import is_element
from .errors import (
    AngleOutOfRange,
    CountMismatch,
    DegenerateCell,
    NonPositiveLength,
    PoscarSyntaxError,
    UnknownElementSymbol,
)

MAX_SITES = 16
MAX_SPECIES = 3
MAX_LENGTH = 15.0


def wrap_frac(x):
    """Wrap fractional coordinates into [0, 1)."""
    x = np.asarray(x, dtype=float)
    w = x - np.floor(x)
    # x - floor(x) rounds to 1.0 for tiny negative x
    return np.where(w >= 1.0, 0.0, w)


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class Lattice:
    """Three Cartesian lattice vectors stored as rows, in angstrom."""

    vectors: np.ndarray

    def __post_init__(self):
        v = _frozen(self.vectors)
        if v.shape != (3, 3) or not np.all(np.isfinite(v)):
            raise DegenerateCell(f"lattice must be a finite 3x3 matrix, got shape {v.shape}")
        if np.any(np.linalg.norm(v, axis=1) == 0.0):
            raise DegenerateCell("lattice has a zero-length vector")
        if np.linalg.det(v) <= 0.0:
            raise DegenerateCell("lattice vectors must be right-handed and non-degenerate")
        object.__setattr__(self, "vectors", v)

    @property
    def lengths(self) -> np.ndarray:
        return np.linalg.norm(self.vectors, axis=1)

    @property
    def parameters(self) -> tuple[float, ...]:
        return parameters_from_lattice(self)

    @property
    def volume(self) -> float:
        return float(np.linalg.det(self.vectors))

    def to_cartesian(self, frac) -> np.ndarray:
        return np.asarray(frac, dtype=float) @ self.vectors

    def to_fractional(self, cart) -> np.ndarray:
        return np.linalg.solve(self.vectors.T, np.asarray(cart, dtype=float).T).T

    def __eq__(self, other):
        return isinstance(other, Lattice) and np.array_equal(self.vectors, other.vectors)

    def __hash__(self):
        return hash(self.vectors.tobytes())


class AtomSite(NamedTuple):
    species: str
    frac: np.ndarray


@dataclass(frozen=True, eq=False)
class CrystalStructure:
    """A periodic crystal: lattice, per-site species and wrapped fractional coordinates."""

    lattice: Lattice
    species: tuple[str, ...]
    frac: np.ndarray
    comment: str = field(default="")

    def __post_init__(self):
        species = tuple(str(s) for s in self.species)
        frac = np.array(self.frac, dtype=float).reshape(-1, 3)
        if len(species) < 1:
            raise ValueError("a structure needs at least one site")
        if len(species) != len(frac):
            raise ValueError(f"{len(species)} species labels for {len(frac)} coordinates")
        for s in species:
            if not is_element(s):
                raise UnknownElementSymbol(s)
        object.__setattr__(self, "species", species)
        object.__setattr__(self, "frac", _frozen(wrap_frac(frac)))

    @classmethod
    def from_sites(cls, lattice, sites, comment=""):
        sites = list(sites)
        return cls(lattice, [s[0] for s in sites], [s[1] for s in sites], comment)

    @property
    def sites(self) -> list[AtomSite]:
        return [AtomSite(s, f.copy()) for s, f in zip(self.species, self.frac)]

    @property
    def num_sites(self) -> int:
        return len(self.species)

    def __len__(self):
        return len(self.species)

    @property
    def cart(self) -> np.ndarray:
        return self.lattice.to_cartesian(self.frac)

    @property
    def distinct_species(self) -> list[str]:
        """Species in first-appearance order."""
        return list(dict.fromkeys(self.species))

    def formula(self) -> str:
        from .elements import reduced_formula

        return reduced_formula(self.species)

    def translated(self, shift) -> "CrystalStructure":
        return CrystalStructure(self.lattice, self.species, self.frac + np.asarray(shift), self.comment)

    def __repr__(self):
        a, b, c, al, be, ga = self.lattice.parameters
        return (
            f"CrystalStructure({self.formula()}, {self.num_sites} sites, "
            f"abc=({a:.4f}, {b:.4f}, {c:.4f}), "
            f"angles=({np.degrees(al):.2f}, {np.degrees(be):.2f}, {np.degrees(ga):.2f}))"
        )


def lattice_from_parameters(a, b, c, alpha, beta, gamma) -> Lattice:
    """Build lattice vectors with a along x and b in the xy-plane.

    a = a(1, 0, 0)
    b = b(cos g, sin g, 0)
    c = c(cos b, (cos a - cos b cos g) / sin g, sqrt(1 + 2 cos a cos b cos g - cos^2 a - cos^2 b - cos^2 g) / sin g)
    """
    lengths = np.array([a, b, c], dtype=float)
    angles = np.array([alpha, beta, gamma], dtype=float)
    if not np.all(np.isfinite(lengths)) or np.any(lengths <= 0):
        raise NonPositiveLength(f"lattice lengths must be positive, got {lengths.tolist()}")
    if not np.all(np.isfinite(angles)) or np.any(angles <= 0) or np.any(angles >= np.pi):
        raise AngleOutOfRange(f"lattice angles must lie in (0, pi), got {angles.tolist()}")
    ca, cb, cg = np.cos(angles)
    sg = np.sin(gamma)
    root = 1.0 + 2.0 * ca * cb * cg - ca**2 - cb**2 - cg**2
    if root <= 0.0:
        raise DegenerateCell(f"angles {angles.tolist()} do not span a 3-D cell")
    vectors = np.array(
        [
            [a, 0.0, 0.0],
            [b * cg, b * sg, 0.0],
            [c * cb, c * (ca - cb * cg) / sg, c * np.sqrt(root) / sg],
        ]
    )
    return Lattice(vectors)


def parameters_from_lattice(lattice) -> tuple[float, float, float, float, float, float]:
    """Return (a, b, c, alpha, beta, gamma) with angles in radians."""
    v = lattice.vectors if isinstance(lattice, Lattice) else np.asarray(lattice, dtype=float)
    lengths = np.linalg.norm(v, axis=1)
    if np.any(lengths == 0):
        raise DegenerateCell("lattice has a zero-length vector")
    a, b, c = lengths

    def angle(u, w, nu, nw):
        return float(np.arccos(np.clip(np.dot(u, w) / (nu * nw), -1.0, 1.0)))

    alpha = angle(v[1], v[2], b, c)
    beta = angle(v[0], v[2], a, c)
    gamma = angle(v[0], v[1], a, b)
    return float(a), float(b), float(c), alpha, beta, gamma


def min_image_delta(u, v):
    """Periodic difference u - v with every component in [-0.5, 0.5).

    Broadcasts over leading axes.
    """
    d = np.asarray(u, dtype=float) - np.asarray(v, dtype=float)
    return wrap_frac(d + 0.5) - 0.5


def validate_encodable(s: CrystalStructure) -> list[str]:
    """List every size constraint the point-cloud encoding cannot represent (empty if ok)."""
    violations = []
    if s.num_sites > MAX_SITES:
        violations.append(f"site count {s.num_sites} > {MAX_SITES}")
    n_species = len(set(s.species))
    if n_species > MAX_SPECIES:
        violations.append(f"species count {n_species} > {MAX_SPECIES}")
    for name, length in zip("abc", s.lattice.lengths):
        if length > MAX_LENGTH:
            violations.append(f"lattice length {length:g} > {MAX_LENGTH:g} ({name})")
    return violations


# --- POSCAR ---------------------------------------------------------------


def _floats(tokens, lineno, n=None):
    if n is not None and len(tokens) < n:
        raise PoscarSyntaxError(f"expected {n} numbers, got {len(tokens)}", lineno)
    try:
        return [float(t) for t in (tokens[:n] if n else tokens)]
    except ValueError:
        raise PoscarSyntaxError(f"cannot parse numbers from {' '.join(tokens)!r}", lineno) from None


def _clean_symbol(tok: str) -> str:
    # POTCAR-style labels such as "Mg_pv" or "Fe/1a2b"
    return tok.split("_")[0].split("/")[0]


def parse_poscar(text: str) -> CrystalStructure:
    """Parse VASP-5 POSCAR text (species line required) into a structure."""
    lines = text.replace("\r\n", "\n").replace("\r", "\n").split("\n")
    if len(lines) < 8:
        raise PoscarSyntaxError("file too short for a POSCAR", len(lines))

    def line(i):
        if i >= len(lines):
            raise PoscarSyntaxError("unexpected end of file", i + 1)
        return lines[i].split()

    comment = lines[0].strip()
    scale_tok = line(1)
    if not scale_tok:
        raise PoscarSyntaxError("missing scale factor", 2)
    scales = _floats(scale_tok[:3] if len(scale_tok) >= 3 and _all_numeric(scale_tok[:3]) else scale_tok[:1], 2)
    vectors = np.array([_floats(line(2 + i), 3 + i, 3) for i in range(3)])
    if len(scales) == 1:
        s = scales[0]
        if s < 0:
            # negative scale means target cell volume
            vol = abs(np.linalg.det(vectors))
            if vol == 0:
                raise PoscarSyntaxError("cannot rescale a zero-volume cell", 2)
            s = (-s / vol) ** (1.0 / 3.0)
        elif s == 0:
            raise PoscarSyntaxError("scale factor must be non-zero", 2)
        vectors = vectors * s
    else:
        vectors = vectors * np.asarray(scales)[None, :]

    sym_tokens = line(5)
    if not sym_tokens:
        raise PoscarSyntaxError("missing species line", 6)
    if _all_numeric(sym_tokens):
        raise PoscarSyntaxError("VASP-4 POSCAR without species line is not supported", 6)
    symbols = [_clean_symbol(t) for t in sym_tokens]
    for sym in symbols:
        if not is_element(sym):
            raise UnknownElementSymbol(f"line 6: unknown element symbol {sym!r}")

    count_tokens = line(6)
    try:
        counts = [int(t) for t in count_tokens]
    except ValueError:
        raise PoscarSyntaxError(f"cannot parse species counts {' '.join(count_tokens)!r}", 7) from None
    if len(counts) != len(symbols):
        raise PoscarSyntaxError(f"{len(symbols)} species but {len(counts)} counts", 7)
    if any(n < 0 for n in counts) or sum(counts) < 1:
        raise PoscarSyntaxError("species counts must be non-negative with at least one site", 7)

    i = 7
    mode = line(i)
    if mode and mode[0][0] in "sS":
        i += 1
        mode = line(i)
    if not mode or mode[0][0] not in "dDcCkK":
        raise PoscarSyntaxError("coordinate mode must start with 'D' (Direct) or 'C' (Cartesian)", i + 1)
    cartesian = mode[0][0] in "cCkK"
    i += 1

    total = sum(counts)
    coords = []
    while i < len(lines) and lines[i].strip():
        toks = lines[i].split()
        if len(coords) < total:
            coords.append(_floats(toks, i + 1, 3))
        else:
            coords.append(None)
        i += 1
    if len(coords) != total:
        raise CountMismatch(f"counts line declares {total} sites but {len(coords)} coordinate lines follow", 7)

    lattice = Lattice(vectors)
    coords = np.array(coords, dtype=float)
    if cartesian:
        coords = coords * (s if len(scales) == 1 else np.asarray(scales))
        coords = lattice.to_fractional(coords)
    species = [sym for sym, n in zip(symbols, counts) for _ in range(n)]
    return CrystalStructure(lattice, species, coords, comment)


def _all_numeric(tokens) -> bool:
    try:
        [float(t) for t in tokens]
    except ValueError:
        return False
    return True


def write_poscar(s: CrystalStructure) -> str:
    """VASP-5 Direct-mode POSCAR text, species grouped in first-appearance order."""
    order = s.distinct_species
    lines = [s.comment.replace("\n", " ") or s.formula(), "1.0"]
    for row in s.lattice.vectors:
        lines.append(" ".join(f"{x:23.16f}" for x in row))
    lines.append(" ".join(order))
    lines.append(" ".join(str(s.species.count(sym)) for sym in order))
    lines.append("Direct")
    for sym in order:
        for sp, f in zip(s.species, s.frac):
            if sp == sym:
                lines.append(" ".join(f"{x:.16f}" for x in f))
    return "\n".join(lines) + "\n"


def read_poscar(path) -> CrystalStructure:
    with open(path, encoding="utf-8") as fh:
        return parse_poscar(fh.read())


def save_poscar(s: CrystalStructure, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(write_poscar(s))
