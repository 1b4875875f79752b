"""Ground-truth convolution, the scatter deconvolution oracle, and zero-insertion (NZP) conversion.

These are deliberately direct loops over the textbook definitions. Every
function accepts an optional :class:`MulCounter` that records how many scalar
multiplications were actually executed, so structural MAC counts can be checked
against real runs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor import FilterBank, ShapeError, Tensor3


class MulCounter:
    """Tally of scalar multiplications performed by the instrumented kernels."""

    def __init__(self):
        self.count = 0

    def add(self, n: int) -> None:
        self.count += int(n)

    def __repr__(self):
        return f"MulCounter({self.count})"


@dataclass(frozen=True)
class ConvParams:
    stride: int = 1
    pad: int = 0

    def __post_init__(self):
        if self.stride < 1:
            raise ShapeError(f"stride must be >= 1, got {self.stride}")
        if self.pad < 0:
            raise ShapeError(f"pad must be >= 0, got {self.pad}")

    def out_dim(self, n: int, k: int) -> int:
        return (n + 2 * self.pad - k) // self.stride + 1


def _check_channels(x: Tensor3, w: FilterBank) -> None:
    if w.in_channels != x.channels:
        raise ShapeError(f"filter expects {w.in_channels} input channels, tensor has {x.channels}")


def conv2d(x: Tensor3, w: FilterBank, params: ConvParams = ConvParams(),
           counter: MulCounter | None = None) -> Tensor3:
    """Direct (cross-correlation) convolution, accumulating in (ic, kh, kw) order."""
    _check_channels(x, w)
    s, p = params.stride, params.pad
    if x.height + 2 * p < w.kh or x.width + 2 * p < w.kw:
        raise ShapeError(f"kernel {w.kh}x{w.kw} larger than padded input "
                         f"{x.height + 2 * p}x{x.width + 2 * p}")
    oh, ow = params.out_dim(x.height, w.kh), params.out_dim(x.width, w.kw)
    src = np.pad(x.data, ((p, p), (p, p), (0, 0))) if p else x.data
    out = np.zeros((oh, ow, w.out_channels))
    ystop, xstop = (oh - 1) * s + 1, (ow - 1) * s + 1
    for ic in range(w.in_channels):
        for kh in range(w.kh):
            for kw in range(w.kw):
                win = src[kh:kh + ystop:s, kw:kw + xstop:s, ic]
                prod = win[:, :, None] * w.data[kh, kw, ic]
                out += prod
                if counter is not None:
                    counter.add(prod.size)
    return Tensor3(out)


def crop_edges(t: Tensor3, crop: int) -> Tensor3:
    """Remove ``crop`` rows/cols from every edge."""
    if crop == 0:
        return t
    if crop < 0 or t.height <= 2 * crop or t.width <= 2 * crop:
        raise ShapeError(f"cannot crop {crop} from each edge of {t.height}x{t.width}")
    return Tensor3(t.data[crop:-crop, crop:-crop])


def deconv2d_oracle(x: Tensor3, w: FilterBank, stride: int, crop: int = 0,
                    counter: MulCounter | None = None) -> Tensor3:
    """Transposed convolution by scatter-accumulate.

    Each input element scales the whole filter and is added into the output at
    offset (ih*s, iw*s). Output is s*(I-1)+K per axis before ``crop``.
    """
    _check_channels(x, w)
    if stride < 1:
        raise ShapeError(f"stride must be >= 1, got {stride}")
    s = stride
    oh, ow = s * (x.height - 1) + w.kh, s * (x.width - 1) + w.kw
    out = np.zeros((oh, ow, w.out_channels))
    for ic in range(x.channels):
        wk = w.data[:, :, ic, :]
        for ih in range(x.height):
            for iw in range(x.width):
                prod = x.data[ih, iw, ic] * wk
                out[ih * s:ih * s + w.kh, iw * s:iw * s + w.kw] += prod
                if counter is not None:
                    counter.add(prod.size)
    return crop_edges(Tensor3(out), crop)


def nzp_expand(x: Tensor3, kh: int, kw: int, stride: int) -> Tensor3:
    """Insert s-1 zeros between neighbours, then pad K-1 zeros on every edge."""
    if stride < 1 or kh < 1 or kw < 1:
        raise ShapeError("stride and kernel sizes must be >= 1")
    s = stride
    h = s * (x.height - 1) + 1 + 2 * (kh - 1)
    wd = s * (x.width - 1) + 1 + 2 * (kw - 1)
    out = np.zeros((h, wd, x.channels))
    out[kh - 1:h - (kh - 1):s, kw - 1:wd - (kw - 1):s] = x.data
    return Tensor3(out)


def rot180(w: FilterBank) -> FilterBank:
    return FilterBank(w.data[::-1, ::-1])


def nzp_deconv2d(x: Tensor3, w: FilterBank, stride: int, crop: int = 0,
                 counter: MulCounter | None = None) -> Tensor3:
    """Deconvolution as a stride-1 convolution of the zero-inserted input with the rotated filter."""
    _check_channels(x, w)
    expanded = nzp_expand(x, w.kh, w.kw, stride)
    out = conv2d(expanded, rot180(w), ConvParams(1, 0), counter=counter)
    return crop_edges(out, crop)
