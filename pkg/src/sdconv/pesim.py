"""First-order cycle models of a dot-product array and an output-stationary 2D PE array.

Both models are compute bound: unlimited bandwidth, no buffer effects. Work
per output comes from the analyzer's per-output tap enumeration, so the only
thing a model adds is how that work packs onto its lanes.

Dot-product array: ``d_out`` units each finish a ``d_in``-wide dot product per
cycle; the units cover ``d_out`` output channels of one output pixel. Taps of
one output are compacted before packing (idealized zero skipping).

2D array: ``rows`` x ``cols`` PEs, each accumulating one output activation.
Output positions are walked column by column (y fastest) in groups of
``rows``; output channels fill the ``cols``. A tile takes as long as its
busiest PE. The N split convolutions of SD are tiled one after another.

``nzp_line_skip`` (either config) swaps NZP activation skipping for the
pessimistic variant that only drops all-zero rows of the zero-inserted map.
Idealized NZP skipping already performs nothing but useful products, so it is
a lower bound no realization can beat.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .analyzer import Method, Mode, count_macs, nzp_line_taps, tap_maps
from .split import ceil_div
from .tensor import LayerSpec, ShapeError


class UnsupportedMode(ValueError):
    pass


@dataclass(frozen=True)
class DotArrayConfig:
    d_in: int = 16
    d_out: int = 16
    freq_mhz: float = 800.0
    nzp_line_skip: bool = False

    @property
    def peak(self) -> int:
        return self.d_in * self.d_out


@dataclass(frozen=True)
class Grid2DConfig:
    rows: int = 32
    cols: int = 7
    freq_mhz: float = 800.0
    nzp_line_skip: bool = False

    @property
    def peak(self) -> int:
        return self.rows * self.cols


ARCHS = ("dot", "grid2d")
ARCH_MODES = {
    "dot": (Mode.DENSE, Mode.ASPARSE),
    "grid2d": (Mode.DENSE, Mode.ASPARSE, Mode.WSPARSE, Mode.AWSPARSE),
}
SIM_METHODS = (Method.NZP, Method.SD)


@dataclass(frozen=True)
class CycleReport:
    layer: LayerSpec
    arch: str
    method: Method
    mode: Mode
    cycles: int
    effective_macs: int
    peak: int
    freq_mhz: float

    @property
    def utilization(self) -> float:
        if self.cycles == 0:
            return 0.0
        return self.effective_macs / (self.cycles * self.peak)

    @property
    def time_us(self) -> float:
        return self.cycles / self.freq_mhz


def _check(layer: LayerSpec, method: Method) -> Method:
    if not layer.is_deconv:
        raise ShapeError("cycle models take deconvolution layers")
    method = Method(method)
    if method not in SIM_METHODS:
        raise ShapeError(f"{method.value} cannot run on a convolution processor; use NZP or SD")
    return method


def _maps(layer: LayerSpec, method: Method, mode: Mode, line_skip: bool) -> list[np.ndarray]:
    if line_skip and method is Method.NZP and mode.skips_activations:
        return [nzp_line_taps(layer)]
    return tap_maps(layer, method, mode)


def dot_array_cycles(layer: LayerSpec, method: Method, mode: Mode,
                     cfg: DotArrayConfig = DotArrayConfig()) -> CycleReport:
    method, mode = _check(layer, method), Mode(mode)
    if mode not in ARCH_MODES["dot"]:
        raise UnsupportedMode(f"the dot-product array cannot skip zero weights ({mode.value})")
    maps = _maps(layer, method, mode, cfg.nzp_line_skip)
    per_tile = sum(int(np.sum(-(-(m * layer.in_c) // cfg.d_in))) for m in maps)
    cycles = per_tile * ceil_div(layer.out_c, cfg.d_out)
    return CycleReport(layer, "dot", method, mode, cycles,
                       count_macs(layer, method, mode), cfg.peak, cfg.freq_mhz)


def _tile_max(taps: np.ndarray, rows: int) -> int:
    col_major = taps.T.reshape(-1)
    pad = (-col_major.size) % rows
    tiles = np.pad(col_major, (0, pad)).reshape(-1, rows)
    return int(tiles.max(axis=1).sum())


def grid2d_cycles(layer: LayerSpec, method: Method, mode: Mode,
                  cfg: Grid2DConfig = Grid2DConfig()) -> CycleReport:
    method, mode = _check(layer, method), Mode(mode)
    per_tile = sum(_tile_max(m, cfg.rows) for m in _maps(layer, method, mode, cfg.nzp_line_skip))
    cycles = per_tile * layer.in_c * ceil_div(layer.out_c, cfg.cols)
    return CycleReport(layer, "grid2d", method, mode, cycles,
                       count_macs(layer, method, mode), cfg.peak, cfg.freq_mhz)


def simulate(layer: LayerSpec, arch: str, method: Method, mode: Mode,
             dot: DotArrayConfig = DotArrayConfig(), grid: Grid2DConfig = Grid2DConfig()) -> CycleReport:
    if arch == "dot":
        return dot_array_cycles(layer, method, mode, dot)
    if arch == "grid2d":
        return grid2d_cycles(layer, method, mode, grid)
    raise ValueError(f"unknown architecture {arch!r}")


def geomean(xs: Sequence[float]) -> float:
    return math.exp(sum(math.log(x) for x in xs) / len(xs)) if xs else float("nan")


@dataclass
class SpeedupSummary:
    """Cycle reports of one network plus speedups relative to dense NZP.

    ``geomean`` holds the geometric mean over layers of per-layer speedups;
    ``total_speedup`` compares summed network cycles.
    """

    reports: list[tuple[int, CycleReport]] = field(default_factory=list)
    baseline: dict[tuple[int, str], int] = field(default_factory=dict)
    totals: dict[tuple[str, Method, Mode], int] = field(default_factory=dict)
    macs: dict[tuple[str, Method, Mode], int] = field(default_factory=dict)
    peak: dict[str, int] = field(default_factory=dict)
    geomean: dict[tuple[str, Method, Mode], float] = field(default_factory=dict)
    total_speedup: dict[tuple[str, Method, Mode], float] = field(default_factory=dict)

    def cycles(self, arch: str, method: Method, mode: Mode) -> int:
        return self.totals[(arch, Method(method), Mode(mode))]

    def best(self, arch: str, method: Method) -> tuple[Mode, int]:
        """Fewest-cycle mode for ``method`` on ``arch``; ties go to the simpler mode."""
        cands = [(c, list(Mode).index(m), m) for (a, me, m), c in self.totals.items()
                 if a == arch and me is Method(method)]
        c, _, m = min(cands)
        return m, c


def network_speedup(network: Sequence[LayerSpec], dot: DotArrayConfig = DotArrayConfig(),
                    grid: Grid2DConfig = Grid2DConfig(), archs: Sequence[str] = ARCHS,
                    modes: Sequence[Mode] | None = None) -> SpeedupSummary:
    """Simulate every deconvolution layer on each architecture, NZP and SD, in each supported mode.

    ``modes`` restricts the simulated modes; dense NZP is always computed as
    the baseline.
    """
    summary = SpeedupSummary()
    ratios: dict[tuple[str, Method, Mode], list[float]] = {}
    for arch in archs:
        if arch not in ARCHS:
            raise ValueError(f"unknown architecture {arch!r}")
        summary.peak[arch] = dot.peak if arch == "dot" else grid.peak
        wanted = [m for m in ARCH_MODES[arch] if modes is None or m in modes]
        base_total = 0
        for i, layer in enumerate(network):
            if not layer.is_deconv:
                continue
            base = simulate(layer, arch, Method.NZP, Mode.DENSE, dot, grid).cycles
            summary.baseline[(i, arch)] = base
            base_total += base
            for method in SIM_METHODS:
                for mode in wanted:
                    r = simulate(layer, arch, method, mode, dot, grid)
                    key = (arch, method, mode)
                    summary.reports.append((i, r))
                    summary.totals[key] = summary.totals.get(key, 0) + r.cycles
                    summary.macs[key] = summary.macs.get(key, 0) + r.effective_macs
                    ratios.setdefault(key, []).append(base / r.cycles)
        for key, rs in ratios.items():
            if key[0] == arch:
                summary.geomean[key] = geomean(rs)
                summary.total_speedup[key] = base_total / summary.totals[key]
    return summary


SIM_COLUMNS = ("layer_index", "arch", "method", "mode", "cycles", "utilization", "speedup_vs_nzp_dense")


def simulation_csv(summary: SpeedupSummary) -> str:
    """Per-layer rows followed by one ``total`` row per (arch, method, mode)."""
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(SIM_COLUMNS)
    for i, r in summary.reports:
        b = summary.baseline[(i, r.arch)]
        wr.writerow([i, r.arch, r.method.value, r.mode.value, r.cycles,
                     f"{r.utilization:.6f}", f"{b / r.cycles:.6f}"])
    for key, sp in summary.total_speedup.items():
        arch, method, mode = key
        cyc = summary.totals[key]
        util = summary.macs[key] / (cyc * summary.peak[arch])
        wr.writerow(["total", arch, method.value, mode.value, cyc, f"{util:.6f}", f"{sp:.6f}"])
    return buf.getvalue()


def simulation_markdown(summary: SpeedupSummary, title: str = "network") -> str:
    out = [f"## {title}: cycles and speedup over dense NZP", "",
           "| arch | method | mode | cycles | speedup (total) | speedup (geomean) |",
           "|---|---|---|---:|---:|---:|"]
    for key, sp in summary.total_speedup.items():
        arch, method, mode = key
        out.append(f"| {arch} | {method.value} | {mode.value} | {summary.totals[key]} | "
                   f"{sp:.3f} | {summary.geomean[key]:.3f} |")
    return "\n".join(out) + "\n"
