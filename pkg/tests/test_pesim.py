import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sdconv.analyzer import MODES, Method, Mode, count_macs, tap_maps
from sdconv.pesim import (ARCH_MODES, ARCHS, DotArrayConfig, Grid2DConfig, UnsupportedMode,
                          dot_array_cycles, geomean, grid2d_cycles, network_speedup, simulate,
                          simulation_csv, simulation_markdown)
from sdconv.tensor import LayerSpec, ShapeError


def deconv(i, k, s, ic=1, oc=1, iw=None):
    return LayerSpec("deconv", i, iw or i, ic, k, k, oc, s)


def test_defaults():
    assert (DotArrayConfig().d_in, DotArrayConfig().d_out, DotArrayConfig().freq_mhz) == (16, 16, 800)
    assert (Grid2DConfig().rows, Grid2DConfig().cols) == (32, 7)
    assert DotArrayConfig().peak == 256 and Grid2DConfig().peak == 224


def test_dot_perfect_packing():
    # each SD output has 2x2 taps x 4 channels = 16 = d_in, and 16 output channels fill d_out
    l = deconv(5, 4, 2, ic=4, oc=16)
    r = dot_array_cycles(l, Method.SD, Mode.DENSE)
    assert r.cycles == l.full_out_h * l.full_out_w
    assert r.utilization == 1.0


def test_dot_nzp_asparse_beats_dense():
    l = deconv(6, 3, 2, ic=3, oc=4)
    assert dot_array_cycles(l, Method.NZP, Mode.ASPARSE).cycles < dot_array_cycles(l, Method.NZP, Mode.DENSE).cycles


def test_sd_not_worse_than_nzp_asparse():
    l = deconv(16, 4, 2, ic=16, oc=16)
    assert dot_array_cycles(l, Method.SD, Mode.ASPARSE).cycles <= dot_array_cycles(l, Method.NZP, Mode.ASPARSE).cycles
    # on the grid, idealized per-MAC NZP skipping wins by tile slack; against line skipping SD wins
    line = Grid2DConfig(nzp_line_skip=True)
    assert grid2d_cycles(l, Method.SD, Mode.ASPARSE, line).cycles < grid2d_cycles(l, Method.NZP, Mode.ASPARSE, line).cycles


@pytest.mark.parametrize("mode", [Mode.WSPARSE, Mode.AWSPARSE])
def test_dot_rejects_weight_skipping(mode):
    with pytest.raises(UnsupportedMode):
        dot_array_cycles(deconv(2, 3, 2), Method.SD, mode)


def test_rejects_bad_inputs():
    with pytest.raises(ShapeError):
        grid2d_cycles(LayerSpec("conv", 4, 4, 1, 3, 3, 1), Method.NZP, Mode.DENSE)
    with pytest.raises(ShapeError):
        grid2d_cycles(deconv(2, 3, 2), Method.DECONV, Mode.DENSE)
    with pytest.raises(ValueError):
        simulate(deconv(2, 3, 2), "systolic", Method.SD, Mode.DENSE)


@pytest.mark.parametrize("i,k,s,oc", [(4, 3, 1, 7), (5, 2, 2, 10), (9, 4, 2, 3)])
def test_grid_uniform(i, k, s, oc):
    # dense NZP gives every output the same k*k taps
    l = deconv(i, k, s, ic=2, oc=oc)
    cfg = Grid2DConfig()
    out = l.full_out_h * l.full_out_w
    expect = math.ceil(out / cfg.rows) * math.ceil(oc / cfg.cols) * k * k * 2
    if out % cfg.rows == 0 or l.full_out_h % cfg.rows == 0:
        assert grid2d_cycles(l, Method.NZP, Mode.DENSE, cfg).cycles == expect
    else:
        assert grid2d_cycles(l, Method.NZP, Mode.DENSE, cfg).cycles >= expect


def test_grid_uniform_exact_tiling():
    l = deconv(3, 2, 3, ic=1, oc=7)  # 8x8 output, 64 positions = 2 tiles of 32
    assert grid2d_cycles(l, Method.NZP, Mode.DENSE).cycles == 2 * 1 * 4


@pytest.mark.parametrize("i", [1, 5])
def test_grid_awsparse_beats_wsparse(i):
    l = deconv(i, 3, 2, ic=4, oc=4)
    assert grid2d_cycles(l, Method.SD, Mode.AWSPARSE).cycles < grid2d_cycles(l, Method.SD, Mode.WSPARSE).cycles


@pytest.mark.parametrize("i", range(1, 9))
def test_per_pe_awsparse_beats_wsparse(i):
    cfg = Grid2DConfig(rows=1, cols=1)
    l = deconv(i, 3, 2)
    aw = grid2d_cycles(l, Method.SD, Mode.AWSPARSE, cfg).cycles
    assert aw < grid2d_cycles(l, Method.SD, Mode.WSPARSE, cfg).cycles
    # one PE per output: cycles are exactly the MAC count
    assert aw == count_macs(l, Method.SD, Mode.AWSPARSE)


def test_grid_ratio_near_four():
    l = deconv(32, 4, 2, ic=64, oc=64)
    ratio = grid2d_cycles(l, Method.NZP, Mode.DENSE).cycles / grid2d_cycles(l, Method.SD, Mode.AWSPARSE).cycles
    assert abs(ratio - 4) <= 0.15 * 4


def _all_reports(l, dot=DotArrayConfig(), grid=Grid2DConfig()):
    for arch in ARCHS:
        for method in (Method.NZP, Method.SD):
            for mode in ARCH_MODES[arch]:
                yield simulate(l, arch, method, mode, dot, grid)


layers = st.builds(lambda i, j, k, s, ic, oc: LayerSpec("deconv", i, j, ic, k, k + 1, oc, s),
                   st.integers(1, 6), st.integers(1, 6), st.integers(1, 5), st.integers(1, 4),
                   st.integers(1, 20), st.integers(1, 20))
small_cfgs = st.tuples(st.integers(1, 17), st.integers(1, 17), st.integers(1, 9), st.integers(1, 9))


@settings(max_examples=60, deadline=None)
@given(l=layers, c=small_cfgs, skip=st.booleans())
def test_invariants(l, c, skip):
    dot = DotArrayConfig(c[0], c[1], nzp_line_skip=skip)
    grid = Grid2DConfig(c[2], c[3], nzp_line_skip=skip)
    by_key = {}
    for r in _all_reports(l, dot, grid):
        assert r.cycles * r.peak >= r.effective_macs
        assert 0 < r.utilization <= 1
        by_key[(r.arch, r.method, r.mode)] = r.cycles
    for arch in ARCHS:
        for method in (Method.NZP, Method.SD):
            d, a = by_key[(arch, method, Mode.DENSE)], by_key[(arch, method, Mode.ASPARSE)]
            assert d >= a
            if arch == "grid2d":
                w, aw = by_key[(arch, method, Mode.WSPARSE)], by_key[(arch, method, Mode.AWSPARSE)]
                assert a >= aw and d >= w >= aw


@settings(max_examples=40, deadline=None)
@given(l=layers, c=small_cfgs)
def test_dense_matches_ceil_packing(l, c):
    """With no skipping every output of a method has the same tap count."""
    dot, grid = DotArrayConfig(c[0], c[1]), Grid2DConfig(c[2], c[3])
    for method in (Method.NZP, Method.SD):
        maps = tap_maps(l, method, Mode.DENSE)
        taps = int(maps[0].flat[0])
        pixels = sum(m.size for m in maps)
        assert pixels * taps * l.in_c * l.out_c == count_macs(l, method, Mode.DENSE)
        assert dot_array_cycles(l, method, Mode.DENSE, dot).cycles == \
            pixels * math.ceil(taps * l.in_c / c[0]) * math.ceil(l.out_c / c[1])
        tiles = sum(math.ceil(m.size / c[2]) for m in maps)
        assert grid2d_cycles(l, method, Mode.DENSE, grid).cycles == \
            tiles * taps * l.in_c * math.ceil(l.out_c / c[3])


def test_deterministic():
    l = deconv(7, 3, 2, ic=5, oc=9)
    assert list(_all_reports(l)) == list(_all_reports(l))


def test_line_skip_is_between_ideal_and_dense():
    l = deconv(6, 3, 2, ic=16, oc=16)
    for arch in ARCHS:
        ideal = simulate(l, arch, Method.NZP, Mode.ASPARSE).cycles
        line = simulate(l, arch, Method.NZP, Mode.ASPARSE, DotArrayConfig(nzp_line_skip=True),
                        Grid2DConfig(nzp_line_skip=True)).cycles
        dense = simulate(l, arch, Method.NZP, Mode.DENSE).cycles
        assert ideal < line < dense


def test_geomean():
    assert geomean([2, 8]) == pytest.approx(4)
    assert math.isnan(geomean([]))


def test_speedup_stride_one():
    s = network_speedup([deconv(6, 3, 1, ic=4, oc=4)])
    for arch in ARCHS:
        assert s.total_speedup[(arch, Method.SD, Mode.DENSE)] == 1.0
        assert s.geomean[(arch, Method.NZP, Mode.DENSE)] == 1.0


def test_speedup_ratio_law_network():
    net = [deconv(48, 4, 2, ic=32, oc=32), deconv(64, 4, 2, ic=16, oc=16)]
    s = network_speedup(net)
    for arch in ARCHS:
        assert abs(s.total_speedup[(arch, Method.SD, Mode.ASPARSE)] - 4) <= 0.15 * 4


def test_speedup_additive_and_skips_conv():
    net = [deconv(3, 3, 2, ic=2, oc=3), LayerSpec("conv", 6, 6, 3, 3, 3, 2), deconv(4, 4, 2, ic=3, oc=2)]
    s = network_speedup(net, archs=("grid2d",))
    assert {i for i, _ in s.reports} == {0, 2}
    for mode in MODES:
        parts = sum(simulate(net[i], "grid2d", Method.SD, mode).cycles for i in (0, 2))
        assert s.cycles("grid2d", Method.SD, mode) == parts


def test_speedup_mode_filter_and_best():
    net = [deconv(5, 3, 2, ic=4, oc=4)]
    s = network_speedup(net, modes=[Mode.ASPARSE])
    assert set(m for _, _, m in s.totals) == {Mode.ASPARSE}
    assert s.best("dot", Method.SD)[0] is Mode.ASPARSE
    full = network_speedup(net)
    assert full.best("grid2d", Method.SD)[1] == min(full.cycles("grid2d", Method.SD, m) for m in MODES)


def test_csv_and_markdown():
    net = [deconv(2, 2, 2, ic=1, oc=1)]
    s = network_speedup(net, archs=("dot",), modes=[Mode.DENSE])
    lines = simulation_csv(s).splitlines()
    assert lines[0] == "layer_index,arch,method,mode,cycles,utilization,speedup_vs_nzp_dense"
    # NZP: 4x4 outputs of 4 taps, one cycle each; SD: four 2x2 maps of 1 tap
    assert lines[1] == "0,dot,NZP,Dense,16,0.015625,1.000000"
    assert lines[2] == "0,dot,SD,Dense,16,0.003906,1.000000"
    assert lines[3] == "total,dot,NZP,Dense,16,0.015625,1.000000"
    assert len(lines) == 5
    assert "| dot | SD | Dense | 16 | 1.000 | 1.000 |" in simulation_markdown(s, "t")
