"""Crystal <-> 3x128x3 point-cloud tensor codec.

Tensor layout ``x[channel, point, component]``:

* channel 0: fractional position of the site each point stands for,
* channel 1: one-hot element slot of that site,
* channel 2: lattice template, rows 0-63 hold (alpha, beta, gamma) / pi and
  rows 64-127 hold (a, b, c) / 15.

Points are assigned to sites round-robin (point k belongs to site k mod N).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np
from sklearn.cluster import DBSCAN

from .crystal import (
    MAX_LENGTH,
    MAX_SITES,
    CrystalStructure,
    min_image_delta,
    lattice_from_parameters,
    validate_encodable,
    wrap_frac,
)
from .elements import is_element, sort_by_atomic_number
from .errors import (
    DegenerateLattice,
    NoClusters,
    NotEncodable,
    PCCDError,
    SpeciesNotInSlots,
    TensorFormatError,
)

N_CHANNELS = 3
N_POINTS = 128
N_COMPONENTS = 3
SHAPE = (N_CHANNELS, N_POINTS, N_COMPONENTS)
HALF = N_POINTS // 2
LENGTH_SCALE = MAX_LENGTH
ANGLE_SCALE = np.pi


@dataclass(frozen=True)
class ElementSlots:
    """Up to three element symbols, kept in ascending atomic number."""

    symbols: tuple[str, ...]

    def __post_init__(self):
        syms = list(self.symbols)
        if not 1 <= len(syms) <= 3:
            raise ValueError(f"need 1 to 3 element slots, got {len(syms)}")
        if len(set(syms)) != len(syms):
            raise ValueError(f"duplicate element slots: {syms}")
        for s in syms:
            if not is_element(s):
                raise ValueError(f"unknown element symbol {s!r}")
        object.__setattr__(self, "symbols", tuple(sort_by_atomic_number(syms)))

    @classmethod
    def for_structure(cls, s: CrystalStructure) -> "ElementSlots":
        return cls(tuple(set(s.species)))

    def __len__(self):
        return len(self.symbols)

    def index(self, symbol: str) -> int:
        try:
            return self.symbols.index(symbol)
        except ValueError:
            raise SpeciesNotInSlots(f"{symbol} not in slots {list(self.symbols)}") from None

    def one_hot(self, symbol: str) -> np.ndarray:
        v = np.zeros(N_COMPONENTS)
        v[self.index(symbol)] = 1.0
        return v


@dataclass(frozen=True)
class DbscanParams:
    eps: float = 0.05
    min_pts: int = 3

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if self.min_pts < 1:
            raise ValueError("min_pts must be at least 1")


@dataclass
class DecodeDiagnostics:
    n_clusters: int
    noise_points: int
    cluster_sizes: list[int]
    flags: list[str] = field(default_factory=list)

    @property
    def low_confidence(self) -> bool:
        return bool(self.flags)


def encode(s: CrystalStructure, slots: ElementSlots | None = None) -> np.ndarray:
    """Encode a structure into a clean 3x128x3 tensor."""
    violations = validate_encodable(s)
    if violations:
        raise NotEncodable(violations)
    if slots is None:
        slots = ElementSlots.for_structure(s)
    onehots = np.array([slots.one_hot(sym) for sym in s.species])

    site_of_point = np.arange(N_POINTS) % s.num_sites
    x = np.empty(SHAPE)
    x[0] = s.frac[site_of_point]
    x[1] = onehots[site_of_point]
    a, b, c, alpha, beta, gamma = s.lattice.parameters
    x[2, :HALF] = np.array([alpha, beta, gamma]) / ANGLE_SCALE
    x[2, HALF:] = np.array([a, b, c]) / LENGTH_SCALE
    return x


def decode_lattice_channel(channel2) -> tuple[float, ...]:
    """Average the two halves of the lattice channel back into (a, b, c, alpha, beta, gamma)."""
    ch = np.asarray(channel2, dtype=float)
    if ch.shape != (N_POINTS, N_COMPONENTS):
        raise TensorFormatError(f"lattice channel must be {N_POINTS}x{N_COMPONENTS}, got {ch.shape}")
    angles = ch[:HALF].mean(axis=0) * ANGLE_SCALE
    lengths = ch[HALF:].mean(axis=0) * LENGTH_SCALE
    return (*(float(v) for v in lengths), *(float(v) for v in angles))


def periodic_distance_matrix(points) -> np.ndarray:
    p = np.asarray(points, dtype=float)
    d = min_image_delta(p[:, None, :], p[None, :, :])
    return np.sqrt(np.einsum("ijk,ijk->ij", d, d))


def dbscan_periodic(points, params: DbscanParams = DbscanParams()) -> np.ndarray:
    """DBSCAN labels under the minimum-image fractional metric; -1 marks noise."""
    p = np.asarray(points, dtype=float).reshape(-1, 3)
    dist = periodic_distance_matrix(p)
    # sklearn counts the point itself toward min_samples, as in the usual definition
    model = DBSCAN(eps=params.eps, min_samples=params.min_pts, metric="precomputed")
    return model.fit_predict(dist).astype(int)


def periodic_mean(points) -> np.ndarray:
    """Centroid of fractional points around the first point as anchor, wrapped to [0, 1)."""
    p = np.asarray(points, dtype=float).reshape(-1, 3)
    anchor = p[0]
    return wrap_frac(anchor + min_image_delta(p, anchor).mean(axis=0))


def decode(
    x,
    slots: ElementSlots,
    params: DbscanParams = DbscanParams(),
) -> tuple[CrystalStructure, DecodeDiagnostics]:
    """Recover a structure from a (possibly generated) point-cloud tensor.

    Raises NoClusters when DBSCAN finds no atoms and DegenerateLattice when the
    lattice channel does not describe a valid cell.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != SHAPE:
        raise TensorFormatError(f"tensor must have shape {SHAPE}, got {x.shape}")
    positions = wrap_frac(x[0])
    labels = dbscan_periodic(positions, params)
    n_clusters = int(labels.max()) + 1 if labels.size else 0
    noise = int(np.sum(labels < 0))
    if n_clusters == 0:
        raise NoClusters(f"no clusters among {N_POINTS} points ({noise} noise)")

    sizes, species, frac = [], [], []
    n_slots = len(slots)
    for k in range(n_clusters):
        idx = np.flatnonzero(labels == k)
        sizes.append(int(idx.size))
        frac.append(periodic_mean(positions[idx]))
        likelihood = x[1, idx, :n_slots].mean(axis=0)
        species.append(slots.symbols[int(np.argmax(likelihood))])

    params6 = decode_lattice_channel(x[2])
    try:
        lattice = lattice_from_parameters(*params6)
    except PCCDError as exc:
        raise DegenerateLattice(f"decoded lattice parameters {params6} are invalid: {exc}") from exc

    flags = []
    if n_clusters > MAX_SITES:
        flags.append("site count exceeds training ceiling")
    if noise > N_POINTS // 4:
        flags.append(f"{noise} of {N_POINTS} points unassigned")
    diag = DecodeDiagnostics(n_clusters, noise, sizes, flags)
    return CrystalStructure(lattice, species, np.array(frac)), diag


# --- .pct tensor files --------------------------------------------------------

PCT_MAGIC = b"PCCDPCT1"


def tensor_to_bytes(x) -> bytes:
    x = np.asarray(x, dtype=float)
    if x.shape != SHAPE:
        raise TensorFormatError(f"tensor must have shape {SHAPE}, got {x.shape}")
    return PCT_MAGIC + struct.pack("<3I", *SHAPE) + x.astype("<f8").tobytes(order="C")


def tensor_from_bytes(data: bytes) -> np.ndarray:
    n = int(np.prod(SHAPE))
    if len(data) != 8 + 12 + 8 * n:
        raise TensorFormatError(f"expected {8 + 12 + 8 * n} bytes, got {len(data)}")
    if data[:8] != PCT_MAGIC:
        raise TensorFormatError("bad magic, not a .pct tensor file")
    dims = struct.unpack("<3I", data[8:20])
    if dims != SHAPE:
        raise TensorFormatError(f"unsupported tensor dims {dims}")
    return np.frombuffer(data[20:], dtype="<f8").astype(float).reshape(SHAPE)


def save_tensor(x, path) -> None:
    with open(path, "wb") as fh:
        fh.write(tensor_to_bytes(x))


def load_tensor(path) -> np.ndarray:
    with open(path, "rb") as fh:
        return tensor_from_bytes(fh.read())
