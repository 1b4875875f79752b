"""Structural MAC and weight-parameter counts for deconvolution realizations.

Sparse-mode counts come from explicit enumeration: for every output position
of every convolution a realization runs, count the kernel offsets whose
activation and/or weight operand is not a structural zero. Only zeros the
transforms introduce (inserted, border, ring, filter padding) are considered;
data values never matter.
"""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .split import filter_pad, plan_split, split_size
from .tensor import FilterBank, LayerSpec, ShapeError


class Mode(str, enum.Enum):
    DENSE = "Dense"
    ASPARSE = "Asparse"
    WSPARSE = "Wsparse"
    AWSPARSE = "AWsparse"

    @property
    def skips_activations(self) -> bool:
        return self in (Mode.ASPARSE, Mode.AWSPARSE)

    @property
    def skips_weights(self) -> bool:
        return self in (Mode.WSPARSE, Mode.AWSPARSE)


class Method(str, enum.Enum):
    DECONV = "Deconv"
    NZP = "NZP"
    SD = "SD"


MODES = tuple(Mode)
METHODS = tuple(Method)


def _require_deconv(layer: LayerSpec) -> None:
    if not layer.is_deconv:
        raise ShapeError(f"expected a deconvolution layer, got {layer.kind.value}")


def window_taps(act_mask: np.ndarray, w_mask: np.ndarray) -> np.ndarray:
    """Per-output count of kernel offsets where both masks are set (stride-1, valid)."""
    win = sliding_window_view(act_mask, w_mask.shape)
    return (win & w_mask).sum(axis=(-2, -1), dtype=np.int64)


def nzp_activation_mask(layer: LayerSpec) -> np.ndarray:
    """True where the zero-inserted, border-padded map holds an original activation."""
    s, kh, kw = layer.stride, layer.kh, layer.kw
    h = s * (layer.in_h - 1) + 1 + 2 * (kh - 1)
    w = s * (layer.in_w - 1) + 1 + 2 * (kw - 1)
    m = np.zeros((h, w), dtype=bool)
    m[kh - 1:h - (kh - 1):s, kw - 1:w - (kw - 1):s] = True
    return m


def sd_activation_mask(layer: LayerSpec) -> np.ndarray:
    pi_h = split_size(layer.kh, layer.stride) - 1
    pi_w = split_size(layer.kw, layer.stride) - 1
    m = np.zeros((layer.in_h + 2 * pi_h, layer.in_w + 2 * pi_w), dtype=bool)
    m[pi_h:pi_h + layer.in_h, pi_w:pi_w + layer.in_w] = True
    return m


def sd_weight_masks(layer: LayerSpec) -> list[np.ndarray]:
    """Structural nonzero pattern of each sub-filter, obtained by splitting an all-ones kernel."""
    plan = plan_split(FilterBank(np.ones((layer.kh, layer.kw, 1, 1))), layer.stride)
    return [f.data[:, :, 0, 0] != 0 for f in plan.sub_filters]


def tap_maps(layer: LayerSpec, method: Method, mode: Mode) -> list[np.ndarray]:
    """Spatial taps per output position, one map per convolution the method runs.

    Multiply by in_c for the per-output MAC count; every output channel sees
    the same structural pattern.
    """
    _require_deconv(layer)
    method, mode = Method(method), Mode(mode)
    if method is Method.DECONV:
        raise ShapeError("native deconvolution has no convolution output maps")
    if method is Method.NZP:
        act = nzp_activation_mask(layer)
        if not mode.skips_activations:
            act = np.ones_like(act)
        # NZP filters carry no structural zeros, so Wsparse skips nothing
        return [window_taps(act, np.ones((layer.kh, layer.kw), dtype=bool))]
    act = sd_activation_mask(layer)
    if not mode.skips_activations:
        act = np.ones_like(act)
    maps = []
    for wm in sd_weight_masks(layer):
        if not mode.skips_weights:
            wm = np.ones_like(wm)
        maps.append(window_taps(act, wm))
    return maps


def nzp_line_taps(layer: LayerSpec) -> np.ndarray:
    """Per-output taps when only all-zero rows of the NZP map are skipped.

    Rows holding original activations are processed across the full kernel
    width, inserted zeros included.
    """
    _require_deconv(layer)
    rows = nzp_activation_mask(layer).any(axis=1)
    live = sliding_window_view(rows, layer.kh).sum(axis=-1, dtype=np.int64)
    ow = layer.full_out_w
    return np.repeat(live[:, None] * layer.kw, ow, axis=1)


def count_deconv_macs(layer: LayerSpec) -> int:
    _require_deconv(layer)
    return layer.in_h * layer.in_w * layer.kh * layer.kw * layer.in_c * layer.out_c


def count_nzp_macs(layer: LayerSpec, mode: Mode = Mode.DENSE) -> int:
    _require_deconv(layer)
    if Mode(mode) in (Mode.DENSE, Mode.WSPARSE):
        oh, ow = layer.full_out_h, layer.full_out_w
        return oh * ow * layer.kh * layer.kw * layer.in_c * layer.out_c
    taps = tap_maps(layer, Method.NZP, mode)[0]
    return int(taps.sum()) * layer.in_c * layer.out_c


def count_sd_macs(layer: LayerSpec, mode: Mode = Mode.DENSE) -> int:
    _require_deconv(layer)
    s = layer.stride
    kt_h, kt_w = split_size(layer.kh, s), split_size(layer.kw, s)
    if Mode(mode) is Mode.DENSE:
        return (s * s * (layer.in_h + kt_h - 1) * (layer.in_w + kt_w - 1)
                * kt_h * kt_w * layer.in_c * layer.out_c)
    total = sum(int(m.sum()) for m in tap_maps(layer, Method.SD, mode))
    return total * layer.in_c * layer.out_c


def count_macs(layer: LayerSpec, method: Method, mode: Mode = Mode.DENSE) -> int:
    method = Method(method)
    if method is Method.DECONV:
        return count_deconv_macs(layer)
    if method is Method.NZP:
        return count_nzp_macs(layer, mode)
    return count_sd_macs(layer, mode)


def count_weight_params(layer: LayerSpec, method: Method, compressed: bool = False) -> tuple[int, int]:
    """(stored parameters, nonzero parameters). Compression stores only the nonzeros."""
    _require_deconv(layer)
    chans = layer.in_c * layer.out_c
    original = layer.kh * layer.kw * chans
    if Method(method) is not Method.SD:
        return original, original
    s = layer.stride
    params = s * s * split_size(layer.kh, s) * split_size(layer.kw, s) * chans
    return (original if compressed else params), original


@dataclass(frozen=True)
class CountReport:
    layer_index: int
    layer: LayerSpec
    method: Method
    mode: Mode
    macs: int
    weight_params: int
    weight_nonzeros: int


def mac_census(network: Sequence[LayerSpec]) -> list[CountReport]:
    """Counts for every deconvolution layer x method x mode. Convolution layers are skipped."""
    rows = []
    for i, layer in enumerate(network):
        if not layer.is_deconv:
            continue
        for method in METHODS:
            params, nz = count_weight_params(layer, method)
            for mode in MODES:
                rows.append(CountReport(i, layer, method, mode,
                                        count_macs(layer, method, mode), params, nz))
    return rows


def census_totals(reports: Iterable[CountReport]) -> dict[tuple[Method, Mode], int]:
    totals: dict[tuple[Method, Mode], int] = {}
    for r in reports:
        key = (r.method, r.mode)
        totals[key] = totals.get(key, 0) + r.macs
    return totals


CENSUS_COLUMNS = ("layer_index", "method", "mode", "macs", "weight_params", "weight_nonzeros")


def census_csv(reports: Iterable[CountReport]) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(CENSUS_COLUMNS)
    for r in reports:
        wr.writerow([r.layer_index, r.method.value, r.mode.value, r.macs,
                     r.weight_params, r.weight_nonzeros])
    return buf.getvalue()


def census_markdown(network: Sequence[LayerSpec], title: str = "network") -> str:
    """MAC table (dense counts) and weight-parameter table, one row per deconvolution layer."""
    deconvs = [(i, l) for i, l in enumerate(network) if l.is_deconv]
    out = [f"## {title}: multiply-accumulate operations", "",
           "| layer | shape | Deconv | NZP | SD | SD (AWsparse) | NZP/SD |",
           "|---|---|---:|---:|---:|---:|---:|"]
    tot = [0, 0, 0, 0]
    for i, l in deconvs:
        v = [count_deconv_macs(l), count_nzp_macs(l), count_sd_macs(l),
             count_sd_macs(l, Mode.AWSPARSE)]
        tot = [a + b for a, b in zip(tot, v)]
        out.append(f"| {i} | {l.describe()} | {v[0]} | {v[1]} | {v[2]} | {v[3]} | "
                   f"{v[1] / v[2]:.3f} |")
    if deconvs:
        out.append(f"| total | | {tot[0]} | {tot[1]} | {tot[2]} | {tot[3]} | "
                   f"{tot[1] / tot[2]:.3f} |")
    out += ["", f"## {title}: weight parameters", "",
            "| layer | shape | Original | SD | SD (compressed) |",
            "|---|---|---:|---:|---:|"]
    ptot = [0, 0, 0]
    for i, l in deconvs:
        v = [count_weight_params(l, Method.DECONV)[0], count_weight_params(l, Method.SD)[0],
             count_weight_params(l, Method.SD, compressed=True)[0]]
        ptot = [a + b for a, b in zip(ptot, v)]
        out.append(f"| {i} | {l.describe()} | {v[0]} | {v[1]} | {v[2]} |")
    if deconvs:
        out.append(f"| total | | {ptot[0]} | {ptot[1]} | {ptot[2]} |")
    return "\n".join(out) + "\n"
