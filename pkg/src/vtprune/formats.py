"""Bit-exact serialization: token dumps, bias priors, reports, heatmaps.

Wire layout is little-endian with no padding; reals are IEEE-754 32-bit on
disk and promoted to float64 in memory.  Write-then-read round-trips are
byte-identical by construction.

Token dump (.d2td):   "D2TD" | u8 version=1 | u32 h | u32 w | u32 D |
                      h*w*D f32 features (row-major) | h*w f32 attention
Bias prior (.d2bp):   "D2BP" | u8 version=1 | u32 h | u32 w |
                      u32 sample_count | h*w f32 values
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .core import AttentionGrid, TokenSet
from .debias import BiasPrior
from .errors import (
    BadMagicError,
    InvalidHeaderError,
    NegativeValueError,
    NonFiniteValueError,
    TrailingDataError,
    TruncatedFileError,
    UnsupportedVersionError,
)

__all__ = [
    "DUMP_MAGIC",
    "PRIOR_MAGIC",
    "FORMAT_VERSION",
    "DUMP_SUFFIX",
    "PRIOR_SUFFIX",
    "write_dump",
    "read_dump",
    "write_prior",
    "read_prior",
    "canonical_json",
    "selection_report",
    "write_selection_report",
    "read_selection_report",
    "render_pgm",
]

DUMP_MAGIC = b"D2TD"
PRIOR_MAGIC = b"D2BP"
FORMAT_VERSION = 1
DUMP_SUFFIX = ".d2td"
PRIOR_SUFFIX = ".d2bp"

_DUMP_HEADER = struct.Struct("<4sBIII")
_PRIOR_HEADER = struct.Struct("<4sBIII")


def _to_f32_bytes(arr: np.ndarray, name: str) -> bytes:
    with np.errstate(over="ignore"):
        out = np.ascontiguousarray(arr, dtype="<f4")
    if not np.all(np.isfinite(out)):
        raise NonFiniteValueError(
            f"{name} does not fit 32-bit floats without overflow")
    return out.tobytes()


def write_dump(ts: TokenSet, a_ori: AttentionGrid, path) -> None:
    if ts.h != a_ori.h or ts.w != a_ori.w:
        raise ValueError("token set and attention grid dimensions differ")
    header = _DUMP_HEADER.pack(DUMP_MAGIC, FORMAT_VERSION, ts.h, ts.w, ts.dim)
    payload = _to_f32_bytes(ts.features, "features")
    payload += _to_f32_bytes(a_ori.values, "attention")
    Path(path).write_bytes(header + payload)


def _read_header(data: bytes, header: struct.Struct, magic: bytes, path):
    if len(data) < header.size:
        raise TruncatedFileError(f"{path}: file shorter than header")
    got_magic, version, a, b, c = header.unpack_from(data)
    if got_magic != magic:
        raise BadMagicError(
            f"{path}: bad magic {got_magic!r}, expected {magic!r}")
    if version != FORMAT_VERSION:
        raise UnsupportedVersionError(
            f"{path}: unsupported version {version}")
    return a, b, c


def _f32_field(data: bytes, offset: int, count: int, path) -> tuple[np.ndarray, int]:
    end = offset + 4 * count
    if len(data) < end:
        raise TruncatedFileError(f"{path}: payload truncated")
    arr = np.frombuffer(data, dtype="<f4", count=count, offset=offset)
    return arr.astype(np.float64), end


def read_dump(path) -> tuple[TokenSet, AttentionGrid]:
    data = Path(path).read_bytes()
    h, w, dim = _read_header(data, _DUMP_HEADER, DUMP_MAGIC, path)
    if h < 1 or w < 1 or dim < 1:
        raise InvalidHeaderError(f"{path}: invalid dimensions {h}x{w}x{dim}")
    n = h * w
    feats, offset = _f32_field(data, _DUMP_HEADER.size, n * dim, path)
    attn, offset = _f32_field(data, offset, n, path)
    if len(data) != offset:
        raise TrailingDataError(
            f"{path}: {len(data) - offset} unexpected trailing bytes")
    if not np.all(np.isfinite(feats)) or not np.all(np.isfinite(attn)):
        raise NonFiniteValueError(f"{path}: non-finite values in payload")
    if attn.size and float(attn.min()) < 0.0:
        raise NegativeValueError(f"{path}: negative attention values")
    ts = TokenSet(h=h, w=w, features=feats.reshape(n, dim))
    grid = AttentionGrid(h=h, w=w, values=attn)
    return ts, grid


def write_prior(prior: BiasPrior, path) -> None:
    g = prior.grid
    header = _PRIOR_HEADER.pack(PRIOR_MAGIC, FORMAT_VERSION, g.h, g.w,
                                prior.sample_count)
    Path(path).write_bytes(header + _to_f32_bytes(g.values, "prior values"))


def read_prior(path) -> BiasPrior:
    data = Path(path).read_bytes()
    h, w, sample_count = _read_header(data, _PRIOR_HEADER, PRIOR_MAGIC, path)
    if h < 1 or w < 1 or sample_count < 1:
        raise InvalidHeaderError(
            f"{path}: invalid header fields {h}x{w}, samples={sample_count}")
    vals, offset = _f32_field(data, _PRIOR_HEADER.size, h * w, path)
    if len(data) != offset:
        raise TrailingDataError(
            f"{path}: {len(data) - offset} unexpected trailing bytes")
    if not np.all(np.isfinite(vals)):
        raise NonFiniteValueError(f"{path}: non-finite prior values")
    if float(vals.min()) < 0.0:
        raise NegativeValueError(f"{path}: negative prior values")
    return BiasPrior(grid=AttentionGrid(h=h, w=w, values=vals),
                     sample_count=sample_count)


def _canonical_value(obj) -> str:
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=True)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if not np.isfinite(v):
            raise ValueError("non-finite values are not representable")
        # 9 significant digits; stable under a parse/format round-trip.
        return format(v, ".9g")
    if isinstance(obj, dict):
        items = sorted(obj.items())
        inner = ",".join(f"{json.dumps(str(k))}:{_canonical_value(v)}"
                         for k, v in items)
        return "{" + inner + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ",".join(_canonical_value(v) for v in obj) + "]"
    raise TypeError(f"cannot canonically serialize {type(obj).__name__}")


def canonical_json(obj) -> str:
    """Deterministic JSON text: sorted keys, 9-significant-digit floats,
    trailing newline.  Re-serializing a parsed document reproduces the
    original bytes."""
    return _canonical_value(obj) + "\n"


def selection_report(result, config, *, n: int, grid: tuple[int, int],
                     edge_count: int, prior_resized: bool = False) -> dict:
    """Assemble the report document for one selection run."""
    return {
        "kept": list(result.kept),
        "pivots": list(result.pivots),
        "provenance": list(result.provenance),
        "config": {
            "epsilon": config.epsilon,
            "alpha": config.alpha,
            "theta_sim": config.theta_sim,
            "pivot_ratio": config.pivot_ratio,
            "n": n,
            "layer": config.layer,
        },
        "grid": [grid[0], grid[1]],
        "edge_count": edge_count,
        "excluded_count": result.excluded_count,
        "prior_resized": prior_resized,
    }


def write_selection_report(report: dict, path) -> None:
    Path(path).write_text(canonical_json(report), encoding="ascii")


def read_selection_report(path) -> dict:
    return json.loads(Path(path).read_text(encoding="ascii"))


def render_pgm(grid, path) -> None:
    """Binary PGM (P5, maxval 255) heatmap or keep-mask.

    Float input is min-max scaled per image; a constant image renders
    mid-gray 128.  Boolean input renders 255 for kept and 0 for pruned.
    The header is ``P5\\n{width} {height}\\n255\\n``.
    """
    if isinstance(grid, AttentionGrid):
        mat = grid.as_matrix()
    else:
        mat = np.asarray(grid)
    if mat.ndim != 2 or mat.size == 0:
        raise ValueError("render_pgm requires a nonempty 2-D grid")
    if mat.dtype == np.bool_:
        pixels = np.where(mat, 255, 0).astype(np.uint8)
    else:
        mat = mat.astype(np.float64)
        lo = float(mat.min())
        hi = float(mat.max())
        if hi == lo:
            pixels = np.full(mat.shape, 128, dtype=np.uint8)
        else:
            scaled = (mat - lo) * (255.0 / (hi - lo))
            pixels = np.clip(np.rint(scaled), 0, 255).astype(np.uint8)
    h, w = pixels.shape
    header = f"P5\n{w} {h}\n255\n".encode("ascii")
    Path(path).write_bytes(header + pixels.tobytes())
