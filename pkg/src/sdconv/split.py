"""Split deconvolution: one strided deconvolution as s*s stride-1 convolutions.

The filter side (``expand_filter`` then ``split_filters``, bundled by
``plan_split``) runs once per layer and yields a reusable :class:`SplitPlan`.
The per-input side pads the feature map, runs the N small convolutions and
interleaves their outputs back into the deconvolution result.

Axis convention: split index ``n`` selects row phase ``n // s`` and column
phase ``n % s``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .reference import ConvParams, MulCounter, conv2d
from .tensor import FilterBank, ShapeError, Tensor3


class MergeError(RuntimeError):
    """Interleaved outputs do not cover the requested window; indicates a plan bug."""


def ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def split_size(k: int, stride: int) -> int:
    return ceil_div(k, stride)


def filter_pad(k: int, stride: int) -> int:
    return stride * split_size(k, stride) - k


@dataclass(frozen=True)
class MergeMap:
    """Where sub-output element (y, x) of split ``n`` lands in the final output:
    (y*s + n//s - crop_top, x*s + n%s - crop_left)."""

    stride: int
    final_h: int
    final_w: int
    crop_top: int
    crop_left: int

    def __post_init__(self):
        if self.stride < 1 or self.final_h < 1 or self.final_w < 1:
            raise ShapeError("merge map needs positive stride and output size")
        if self.crop_top < 0 or self.crop_left < 0:
            raise ShapeError("merge crop offsets must be nonnegative")

    def target(self, n: int, y: int, x: int) -> tuple[int, int]:
        s = self.stride
        return y * s + n // s - self.crop_top, x * s + n % s - self.crop_left


@dataclass(frozen=True, eq=False)
class SplitPlan:
    stride: int
    kh: int
    kw: int
    kt_h: int
    kt_w: int
    pk_h: int
    pk_w: int
    pi_h: int
    pi_w: int
    n_splits: int
    sub_filters: tuple[FilterBank, ...]

    def merge_map(self, in_h: int, in_w: int, crop: int = 0, crop_bias: int = 0) -> MergeMap:
        """Merge layout for an ``in_h`` x ``in_w`` input.

        The top/left filter padding shifts the interleaved result down/right by
        ``pk``, so the true output starts at (pk_h, pk_w). ``crop_bias`` exists
        only to corrupt the offset in negative-control tests.
        """
        s = self.stride
        return MergeMap(
            stride=s,
            final_h=s * (in_h - 1) + self.kh - 2 * crop,
            final_w=s * (in_w - 1) + self.kw - 2 * crop,
            crop_top=self.pk_h + crop + crop_bias,
            crop_left=self.pk_w + crop + crop_bias,
        )

    def describe(self) -> str:
        return "\n".join([
            f"stride {self.stride}",
            f"kernel {self.kh}x{self.kw}",
            f"split_kernel {self.kt_h}x{self.kt_w}",
            f"filter_pad {self.pk_h} {self.pk_w}",
            f"input_pad {self.pi_h} {self.pi_w}",
            f"splits {self.n_splits}",
            f"crop_offset {self.pk_h} {self.pk_w}",
        ])


def expand_filter(w: FilterBank, stride: int) -> FilterBank:
    """Prepend zero rows on top and zero columns on the left until both
    kernel dims are multiples of ``stride``."""
    if stride < 1:
        raise ShapeError(f"stride must be >= 1, got {stride}")
    pk_h, pk_w = filter_pad(w.kh, stride), filter_pad(w.kw, stride)
    if pk_h == 0 and pk_w == 0:
        return w
    return FilterBank(np.pad(w.data, ((pk_h, 0), (pk_w, 0), (0, 0), (0, 0))))


def split_filters(expanded: FilterBank, stride: int, filter_pad: tuple[int, int] = (0, 0)) -> SplitPlan:
    """Sample the expanded filter with step ``stride`` into s*s rotated sub-filters.

    ``filter_pad`` is the (rows, cols) of zeros ``expand_filter`` added, so the
    plan can recover the original kernel size.
    """
    s = stride
    if s < 1:
        raise ShapeError(f"stride must be >= 1, got {s}")
    keh, kew = expanded.kh, expanded.kw
    if keh % s or kew % s:
        raise ShapeError(f"expanded filter {keh}x{kew} is not divisible by stride {s}")
    kt_h, kt_w = keh // s, kew // s
    pk_h, pk_w = filter_pad
    if not (0 <= pk_h < keh and 0 <= pk_w < kew):
        raise ShapeError(f"filter pad {filter_pad} inconsistent with {keh}x{kew}")
    src = expanded.data
    subs = []
    for n in range(s * s):
        sub = np.zeros((kt_h, kt_w, expanded.in_channels, expanded.out_channels))
        kth = kt_h - 1
        for kh in range(n // s, keh, s):
            ktw = kt_w - 1
            for kw in range(n % s, kew, s):
                sub[kth, ktw] = src[kh, kw]
                ktw -= 1
            kth -= 1
        subs.append(FilterBank(sub))
    return SplitPlan(
        stride=s, kh=keh - pk_h, kw=kew - pk_w,
        kt_h=kt_h, kt_w=kt_w, pk_h=pk_h, pk_w=pk_w,
        pi_h=kt_h - 1, pi_w=kt_w - 1,
        n_splits=s * s, sub_filters=tuple(subs),
    )


def plan_split(w: FilterBank, stride: int) -> SplitPlan:
    """Offline filter preparation: expand, then split."""
    pad = (filter_pad(w.kh, stride), filter_pad(w.kw, stride))
    return split_filters(expand_filter(w, stride), stride, pad)


def unsplit(plan: SplitPlan) -> FilterBank:
    """Invert ``split_filters``: rebuild the expanded filter from the sub-filters."""
    s = plan.stride
    f0 = plan.sub_filters[0]
    out = np.zeros((plan.kt_h * s, plan.kt_w * s, f0.in_channels, f0.out_channels))
    for n, sub in enumerate(plan.sub_filters):
        # destination (kth, ktw) counts down as the source index steps up by s
        out[n // s::s, n % s::s] = sub.data[::-1, ::-1]
    return FilterBank(out)


def pad_input_sd(x: Tensor3, plan: SplitPlan) -> Tensor3:
    """Zero ring of pi_h rows (top and bottom) and pi_w cols (left and right)."""
    if plan.pi_h == 0 and plan.pi_w == 0:
        return x
    return Tensor3(np.pad(x.data, ((plan.pi_h, plan.pi_h), (plan.pi_w, plan.pi_w), (0, 0))))


def merge_outputs(subs: Sequence[Tensor3], mmap: MergeMap) -> Tensor3:
    """Interleave the N split outputs with stride s, then crop to the final window."""
    s = mmap.stride
    if len(subs) != s * s:
        raise ShapeError(f"expected {s * s} split outputs, got {len(subs)}")
    shape = subs[0].shape
    if any(t.shape != shape for t in subs):
        raise ShapeError("split outputs must share one shape")
    h, w, c = shape
    merged = np.zeros((h * s, w * s, c))
    writes = np.zeros((h * s, w * s), dtype=np.int64)
    for n, t in enumerate(subs):
        merged[n // s::s, n % s::s] = t.data
        writes[n // s::s, n % s::s] += 1
    y0, x0 = mmap.crop_top, mmap.crop_left
    y1, x1 = y0 + mmap.final_h, x0 + mmap.final_w
    window = writes[y0:y1, x0:x1]
    if window.shape != (mmap.final_h, mmap.final_w) or np.any(window != 1):
        bad = np.argwhere(np.pad(window, ((0, mmap.final_h - window.shape[0]),
                                          (0, mmap.final_w - window.shape[1])),
                                 constant_values=0) != 1)[0]
        raise MergeError(f"final cell ({bad[0]}, {bad[1]}) not written exactly once "
                         f"(merged {h * s}x{w * s}, window rows {y0}:{y1} cols {x0}:{x1})")
    return Tensor3(merged[y0:y1, x0:x1])


def run_split(x: Tensor3, plan: SplitPlan, crop: int = 0, counter: MulCounter | None = None,
              crop_bias: int = 0) -> Tensor3:
    """Per-input half of split deconvolution using a precomputed plan."""
    if plan.sub_filters[0].in_channels != x.channels:
        raise ShapeError(f"plan expects {plan.sub_filters[0].in_channels} input channels, "
                         f"tensor has {x.channels}")
    padded = pad_input_sd(x, plan)
    subs = [conv2d(padded, f, ConvParams(1, 0), counter=counter) for f in plan.sub_filters]
    sub_shape = (x.height + plan.kt_h - 1, x.width + plan.kt_w - 1)
    assert subs[0].shape[:2] == sub_shape, (subs[0].shape, sub_shape)
    s = plan.stride
    # interleaved size exceeds the true output by exactly the filter padding
    assert s * sub_shape[0] - (s * (x.height - 1) + plan.kh) == plan.pk_h
    assert s * sub_shape[1] - (s * (x.width - 1) + plan.kw) == plan.pk_w
    return merge_outputs(subs, plan.merge_map(x.height, x.width, crop, crop_bias))


def sd_deconv2d(x: Tensor3, w: FilterBank, stride: int, crop: int = 0,
                counter: MulCounter | None = None) -> Tensor3:
    if w.in_channels != x.channels:
        raise ShapeError(f"filter expects {w.in_channels} input channels, tensor has {x.channels}")
    return run_split(x, plan_split(w, stride), crop, counter)
