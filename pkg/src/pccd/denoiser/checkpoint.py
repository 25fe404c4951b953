"""Binary ``.pccdckpt`` checkpoint format.

Layout (all little-endian)::

    b"PCCDCKP1"  u32 version
    u32 stages  u32 use_attention  u32 time_embed_dim  u32 T  u32 widths[stages]
    u32 n_params   then per parameter: u32 name_len, name (UTF-8), u64 count, f64 values
    u64 adam_step  u32 n_moments  then first moments, then second moments (same section layout)
    8-byte schedule fingerprint

Array shapes are not stored; they follow from the config.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from ..errors import CorruptCheckpoint, VersionMismatch
from .train import AdamState, DenoiserCheckpoint
from .unet import DenoiserConfig, param_shapes

MAGIC = b"PCCDCKP1"
VERSION = 1


def _sections(arrays: dict[str, np.ndarray]) -> bytes:
    out = [struct.pack("<I", len(arrays))]
    for name, arr in arrays.items():
        raw = name.encode("utf-8")
        flat = np.ascontiguousarray(arr, dtype="<f8").ravel()
        out.append(struct.pack("<I", len(raw)) + raw + struct.pack("<Q", flat.size) + flat.tobytes())
    return b"".join(out)


def checkpoint_to_bytes(ckpt: DenoiserCheckpoint) -> bytes:
    cfg = ckpt.config
    head = MAGIC + struct.pack("<I", VERSION)
    head += struct.pack(f"<4I{cfg.stages}I", cfg.stages, int(cfg.use_attention), cfg.time_embed_dim, cfg.T, *cfg.widths)
    body = _sections(ckpt.params)
    body += struct.pack("<Q", ckpt.adam.step)
    # first and second moments share one section count
    body += _sections(ckpt.adam.m) + _sections(ckpt.adam.v)[4:]
    fp = bytes(ckpt.schedule_fingerprint)
    if len(fp) != 8:
        raise ValueError("schedule fingerprint must be 8 bytes")
    return head + body + fp


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if n < 0 or self.pos + n > len(self.data):
            raise CorruptCheckpoint("checkpoint is truncated")
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def section(self, shapes):
        (name_len,) = self.unpack("<I")
        try:
            name = self.take(name_len).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise CorruptCheckpoint("parameter name is not UTF-8") from exc
        (count,) = self.unpack("<Q")
        if name not in shapes:
            raise CorruptCheckpoint(f"unexpected parameter {name!r}")
        if count != int(np.prod(shapes[name])):
            raise CorruptCheckpoint(f"{name}: {count} values, expected shape {shapes[name]}")
        values = np.frombuffer(self.take(8 * count), dtype="<f8").astype(float)
        return name, values.reshape(shapes[name])

    def sections(self, shapes, n):
        out = dict(self.section(shapes) for _ in range(n))
        if list(out) != list(shapes):
            raise CorruptCheckpoint("parameter set does not match the architecture")
        return out


def checkpoint_from_bytes(data: bytes) -> DenoiserCheckpoint:
    r = _Reader(data)
    if r.take(len(MAGIC)) != MAGIC:
        raise CorruptCheckpoint("bad magic; not a .pccdckpt file")
    (version,) = r.unpack("<I")
    if version != VERSION:
        raise VersionMismatch(f"checkpoint version {version}, this build reads {VERSION}")
    stages, attn, emb, T = r.unpack("<4I")
    if not 1 <= stages <= 7:
        raise CorruptCheckpoint(f"implausible stage count {stages}")
    widths = r.unpack(f"<{stages}I")
    try:
        cfg = DenoiserConfig(stages=stages, widths=widths, use_attention=bool(attn), time_embed_dim=emb, T=T)
    except ValueError as exc:
        raise CorruptCheckpoint(f"invalid config block: {exc}") from exc
    shapes = param_shapes(cfg)
    (n,) = r.unpack("<I")
    params = r.sections(shapes, n)
    (step,) = r.unpack("<Q")
    (n_mom,) = r.unpack("<I")
    m = r.sections(shapes, n_mom)
    v = r.sections(shapes, n_mom)
    fp = r.take(8)
    if r.pos != len(data):
        raise CorruptCheckpoint(f"{len(data) - r.pos} trailing bytes")
    return DenoiserCheckpoint(cfg, params, AdamState(m, v, int(step)), fp)


def save_checkpoint(ckpt: DenoiserCheckpoint, path) -> None:
    Path(path).write_bytes(checkpoint_to_bytes(ckpt))


def load_checkpoint(path) -> DenoiserCheckpoint:
    return checkpoint_from_bytes(Path(path).read_bytes())
