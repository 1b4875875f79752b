"""Cross-check oracle, NZP and SD deconvolution on seeded whole-number data."""

from __future__ import annotations

import itertools
import os
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .reference import deconv2d_oracle, nzp_deconv2d
from .split import MergeError, plan_split, run_split
from .tensor import FilterBank, LayerKind, LayerSpec, Tensor3

SEED_ENV = "SDCONV_SEED"


def resolve_seed(seed: int | None) -> int:
    if seed is not None:
        return seed
    return int(os.environ.get(SEED_ENV, "0"))


def grid_layers(max_in: int = 5, max_k: int = 5, max_stride: int = 4,
                max_c: int = 3) -> Iterator[LayerSpec]:
    """Every deconvolution shape with dims in 1..max on each axis."""
    r = range(1, max_in + 1)
    k = range(1, max_k + 1)
    c = range(1, max_c + 1)
    for ih, iw, kh, kw, s, ic, oc in itertools.product(r, r, k, k, range(1, max_stride + 1), c, c):
        yield LayerSpec(LayerKind.DECONV, ih, iw, ic, kh, kw, oc, s)


def random_operands(layer: LayerSpec, seed: int, index: int, low: int = -4,
                    high: int = 4) -> tuple[Tensor3, FilterBank]:
    rng = np.random.default_rng([seed, index])
    x = Tensor3(rng.integers(low, high + 1, layer.input_shape))
    w = FilterBank(rng.integers(low, high + 1, layer.filter_shape))
    return x, w


@dataclass(frozen=True)
class LayerCheck:
    index: int
    layer: LayerSpec
    nzp_dev: float
    sd_dev: float
    detail: str = ""

    @property
    def ok(self) -> bool:
        return self.nzp_dev == 0 and self.sd_dev == 0 and not self.detail


def _first_diff(a: Tensor3, b: Tensor3) -> str:
    if a.shape != b.shape:
        return f"shape {a.shape} != oracle {b.shape}"
    y, x, c = np.argwhere(a.data != b.data)[0]
    return f"({y}, {x}, {c}): got {a.data[y, x, c]:g}, oracle {b.data[y, x, c]:g}"


def _dev(a: Tensor3, b: Tensor3) -> float:
    if a.shape != b.shape:
        return float("inf")
    return float(np.max(np.abs(a.data - b.data)))


def check_layer(layer: LayerSpec, seed: int, index: int, crop_bias: int = 0) -> LayerCheck:
    """Run all three realizations on one layer; deviations must be exactly zero."""
    x, w = random_operands(layer, seed, index)
    ref = deconv2d_oracle(x, w, layer.stride, layer.crop)
    nzp = nzp_deconv2d(x, w, layer.stride, layer.crop)
    notes = []
    nzp_dev = _dev(nzp, ref)
    if nzp_dev:
        notes.append("nzp " + _first_diff(nzp, ref))
    try:
        sd = run_split(x, plan_split(w, layer.stride), layer.crop, crop_bias=crop_bias)
    except MergeError as e:
        return LayerCheck(index, layer, nzp_dev, float("inf"), "; ".join(notes + [f"sd {e}"]))
    sd_dev = _dev(sd, ref)
    if sd_dev:
        notes.append("sd " + _first_diff(sd, ref))
    return LayerCheck(index, layer, nzp_dev, sd_dev, "; ".join(notes))
