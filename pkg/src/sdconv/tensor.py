"""Dense feature-map and filter containers, layer shapes, and the text file format.

Layout is fixed everywhere: feature maps are (y, x, c) row-major, filter banks
are (kh, kw, in_channel, out_channel). Both containers hold read-only float64
arrays so they can be shared freely.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


class ShapeError(ValueError):
    pass


class ParseError(ValueError):
    def __init__(self, msg: str, line: int | None = None):
        self.line = line
        if line is not None:
            msg = f"line {line}: {msg}"
        super().__init__(msg)


def _frozen(data, ndim: int, what: str) -> np.ndarray:
    arr = np.array(data, dtype=np.float64, copy=True)
    if arr.ndim != ndim:
        raise ShapeError(f"{what} needs a rank-{ndim} array, got shape {arr.shape}")
    if any(d < 1 for d in arr.shape):
        raise ShapeError(f"{what} dimensions must be positive, got {arr.shape}")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class Tensor3:
    """Feature map of shape (height, width, channels)."""

    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "data", _frozen(self.data, 3, "Tensor3"))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.data.shape

    def at(self, y: int, x: int, c: int) -> float:
        if not (0 <= y < self.height and 0 <= x < self.width and 0 <= c < self.channels):
            raise IndexError(f"({y}, {x}, {c}) outside tensor of shape {self.shape}")
        return float(self.data[y, x, c])

    def flat(self) -> np.ndarray:
        return self.data.reshape(-1)

    def __eq__(self, other):
        if not isinstance(other, Tensor3):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self.data, other.data))

    def __repr__(self):
        return f"Tensor3(shape={self.shape})"


@dataclass(frozen=True, eq=False)
class FilterBank:
    """Weights indexed (kh, kw, in_channel, out_channel)."""

    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "data", _frozen(self.data, 4, "FilterBank"))

    @property
    def kh(self) -> int:
        return self.data.shape[0]

    @property
    def kw(self) -> int:
        return self.data.shape[1]

    @property
    def in_channels(self) -> int:
        return self.data.shape[2]

    @property
    def out_channels(self) -> int:
        return self.data.shape[3]

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return self.data.shape

    def at(self, kh: int, kw: int, ic: int, oc: int) -> float:
        return float(self.data[kh, kw, ic, oc])

    def flat(self) -> np.ndarray:
        return self.data.reshape(-1)

    def __eq__(self, other):
        if not isinstance(other, FilterBank):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self.data, other.data))

    def __repr__(self):
        return f"FilterBank(shape={self.shape})"


def tensor_new(height: int, width: int, channels: int, values: Iterable[float]) -> Tensor3:
    vals = np.asarray(list(values), dtype=np.float64)
    n = height * width * channels
    if height < 1 or width < 1 or channels < 1:
        raise ShapeError(f"tensor dimensions must be positive: {height}x{width}x{channels}")
    if vals.size != n:
        raise ShapeError(f"expected {n} values for {height}x{width}x{channels}, got {vals.size}")
    return Tensor3(vals.reshape(height, width, channels))


def filter_new(kh: int, kw: int, in_channels: int, out_channels: int,
               values: Iterable[float]) -> FilterBank:
    vals = np.asarray(list(values), dtype=np.float64)
    n = kh * kw * in_channels * out_channels
    if min(kh, kw, in_channels, out_channels) < 1:
        raise ShapeError(f"filter dimensions must be positive: {kh}x{kw}x{in_channels}x{out_channels}")
    if vals.size != n:
        raise ShapeError(f"expected {n} values for filter {kh}x{kw}x{in_channels}x{out_channels}, "
                         f"got {vals.size}")
    return FilterBank(vals.reshape(kh, kw, in_channels, out_channels))


def flat_index(shape: Sequence[int], idx: Sequence[int]) -> int:
    """Row-major offset of ``idx`` in an array of ``shape``."""
    off = 0
    for d, i in zip(shape, idx):
        off = off * d + i
    return off


class LayerKind(str, enum.Enum):
    CONV = "conv"
    DECONV = "deconv"


@dataclass(frozen=True)
class LayerSpec:
    """Shape and stride of one convolution or deconvolution layer.

    ``crop`` removes that many rows/cols from every output edge of a
    deconvolution (the framework-style ``padding`` hyperparameter). Convolutions
    are always valid (no implicit padding) and must tile the input exactly.
    """

    kind: LayerKind
    in_h: int
    in_w: int
    in_c: int
    kh: int
    kw: int
    out_c: int
    stride: int = 1
    crop: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", LayerKind(self.kind))
        for name in ("in_h", "in_w", "in_c", "kh", "kw", "out_c", "stride"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v < 1:
                raise ShapeError(f"{name} must be a positive integer, got {v!r}")
        if self.crop < 0:
            raise ShapeError(f"crop must be nonnegative, got {self.crop}")
        if self.kind is LayerKind.CONV:
            if self.crop:
                raise ShapeError("crop only applies to deconvolution layers")
            for i, k, ax in ((self.in_h, self.kh, "height"), (self.in_w, self.kw, "width")):
                if i < k or (i - k) % self.stride:
                    raise ShapeError(f"conv {ax}: input {i}, kernel {k}, stride {self.stride} "
                                     "is not a valid convolution")
        elif self.out_h < 1 or self.out_w < 1:
            raise ShapeError(f"crop {self.crop} leaves an empty output")

    @property
    def is_deconv(self) -> bool:
        return self.kind is LayerKind.DECONV

    @property
    def full_out_h(self) -> int:
        if self.is_deconv:
            return self.stride * (self.in_h - 1) + self.kh
        return (self.in_h - self.kh) // self.stride + 1

    @property
    def full_out_w(self) -> int:
        if self.is_deconv:
            return self.stride * (self.in_w - 1) + self.kw
        return (self.in_w - self.kw) // self.stride + 1

    @property
    def out_h(self) -> int:
        return self.full_out_h - 2 * self.crop

    @property
    def out_w(self) -> int:
        return self.full_out_w - 2 * self.crop

    @property
    def input_shape(self) -> tuple[int, int, int]:
        return (self.in_h, self.in_w, self.in_c)

    @property
    def output_shape(self) -> tuple[int, int, int]:
        return (self.out_h, self.out_w, self.out_c)

    @property
    def filter_shape(self) -> tuple[int, int, int, int]:
        return (self.kh, self.kw, self.in_c, self.out_c)

    def describe(self) -> str:
        s = (f"{self.kind.value} in={self.in_h}x{self.in_w}x{self.in_c} "
             f"k={self.kh}x{self.kw} out={self.out_c} stride={self.stride}")
        if self.crop:
            s += f" crop={self.crop}"
        return s


# -- text files ---------------------------------------------------------------

def _fmt(v: float) -> str:
    # repr is the shortest string that round-trips a float64
    r = repr(float(v))
    return r[:-2] if r.endswith(".0") else r


def _format(kind: str, dims: Sequence[int], arr: np.ndarray, row_len: int) -> str:
    lines = [kind + " " + " ".join(str(d) for d in dims)]
    flat = arr.reshape(-1)
    for i in range(0, flat.size, row_len):
        lines.append(" ".join(_fmt(v) for v in flat[i:i + row_len]))
    return "\n".join(lines) + "\n"


def format_tensor(t: Tensor3) -> str:
    return _format("tensor", t.shape, t.data, t.width * t.channels)


def format_filter(f: FilterBank) -> str:
    return _format("filter", f.shape, f.data, f.in_channels * f.out_channels * f.kw)


def _parse(text: str, kind: str, ndim: int, source: str) -> np.ndarray:
    header = None
    values: list[float] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if header is None:
            parts = line.split()
            if parts[0] != kind:
                raise ParseError(f"{source}: expected '{kind}' header, got '{parts[0]}'", lineno)
            if len(parts) != ndim + 1:
                raise ParseError(f"{source}: '{kind}' header needs {ndim} dimensions", lineno)
            try:
                dims = [int(p) for p in parts[1:]]
            except ValueError:
                raise ParseError(f"{source}: non-integer dimension in header", lineno) from None
            if any(d < 1 for d in dims):
                raise ParseError(f"{source}: dimensions must be positive", lineno)
            header = (dims, lineno)
            continue
        for tok in line.split():
            try:
                values.append(float(tok))
            except ValueError:
                raise ParseError(f"{source}: non-numeric token {tok!r}", lineno) from None
    if header is None:
        raise ParseError(f"{source}: missing '{kind}' header")
    dims, lineno = header
    expected = int(np.prod(dims))
    if len(values) != expected:
        raise ParseError(f"{source}: header declares {expected} values, found {len(values)}", lineno)
    return np.array(values, dtype=np.float64).reshape(dims)


def parse_tensor(text: str, source: str = "<string>") -> Tensor3:
    return Tensor3(_parse(text, "tensor", 3, source))


def parse_filter(text: str, source: str = "<string>") -> FilterBank:
    return FilterBank(_parse(text, "filter", 4, source))


def read_tensor_file(path) -> Tensor3:
    p = Path(path)
    return parse_tensor(p.read_text(encoding="utf-8"), str(p))


def write_tensor_file(path, t: Tensor3) -> None:
    Path(path).write_text(format_tensor(t), encoding="utf-8")


def read_filter_file(path) -> FilterBank:
    p = Path(path)
    return parse_filter(p.read_text(encoding="utf-8"), str(p))


def write_filter_file(path, f: FilterBank) -> None:
    Path(path).write_text(format_filter(f), encoding="utf-8")
