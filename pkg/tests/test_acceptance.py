"""Acceptance criteria 1-8. Each test prints one ``criterion N: PASS|FAIL`` line
and the terminal summary repeats them all (run with ``-s`` to see them inline)."""

import itertools
import math

import numpy as np
import pytest

from conftest import ACCEPTANCE_RESULTS
from oracles import nzp_macs_enum, sd_macs_enum
from sdconv.analyzer import Method, Mode, count_deconv_macs, count_macs, count_weight_params
from sdconv.cli import main
from sdconv.config import FIXTURES, load_fixture
from sdconv.pesim import ARCHS, DotArrayConfig, Grid2DConfig, network_speedup
from sdconv.reference import MulCounter, deconv2d_oracle, nzp_deconv2d
from sdconv.split import plan_split, run_split
from sdconv.tensor import FilterBank, LayerSpec
from sdconv.verify import check_layer, grid_layers, random_operands

from test_cli import CFG, golden

GRID = list(grid_layers())
SEED = 2024


def record(num, ok, detail):
    ACCEPTANCE_RESULTS.append((num, ok, detail))
    print(f"\ncriterion {num}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def test_criterion_1_exactness():
    bad = [r for r in (check_layer(l, SEED, i) for i, l in enumerate(GRID)) if not r.ok]
    detail = f"{len(GRID)} grid layers, {len(bad)} not bitwise equal (seed {SEED})"
    if bad:
        detail += f"; first: {bad[0].layer.describe()} {bad[0].detail}"
    record(1, len(GRID) == 22500 and not bad, detail)


def test_criterion_2_pairing_identity():
    enum_cache = {}
    bad = []
    for l in GRID:
        key = (l.in_h, l.in_w, l.kh, l.kw, l.stride)
        if key not in enum_cache:
            # single-channel enumeration; channels only scale the count
            enum_cache[key] = (nzp_macs_enum(*key, 1, 1, True), sd_macs_enum(*key, 1, 1, True, True))
        ch = l.in_c * l.out_c
        nzp, sd = (v * ch for v in enum_cache[key])
        ref = l.in_h * l.in_w * l.kh * l.kw * ch
        got = (nzp, sd, count_macs(l, Method.NZP, Mode.ASPARSE), count_macs(l, Method.SD, Mode.AWSPARSE))
        if any(v != ref for v in got):
            bad.append((l.describe(), got, ref))
    record(2, not bad, f"{len(GRID)} grid layers, {len(bad)} violations" + (f"; first {bad[0]}" if bad else ""))


def test_criterion_3_ratio_law():
    l = LayerSpec("deconv", 64, 64, 1, 4, 4, 1, 2)
    ratio = count_macs(l, Method.NZP, Mode.DENSE) / count_macs(l, Method.SD, Mode.DENSE)
    record(3, abs(ratio - 4) <= 0.05 * 4, f"NZP/SD dense MAC ratio {ratio:.4f} (target 4 +/- 5%)")


def test_criterion_4_no_overhead():
    layers = [l for l in GRID if l.kh % l.stride == 0 and l.kw % l.stride == 0]
    for name in FIXTURES:
        layers += [l for l in load_fixture(name).layers if l.kh % l.stride == 0 and l.kw % l.stride == 0]
    bad = [l.describe() for l in layers if count_macs(l, Method.SD, Mode.AWSPARSE) != count_deconv_macs(l)]
    record(4, bool(layers) and not bad, f"{len(layers)} layers with s | K, {len(bad)} with overhead")


def test_criterion_5_weight_conservation():
    rng = np.random.default_rng(SEED)
    shapes = sorted({(l.kh, l.kw, l.in_c, l.out_c, l.stride) for l in GRID})
    bad = []
    for kh, kw, ic, oc, s in shapes:
        w = FilterBank(rng.integers(1, 10, (kh, kw, ic, oc)) * rng.choice([-1, 1], (kh, kw, ic, oc)))
        nz = sum(int(np.count_nonzero(f.data)) for f in plan_split(w, s).sub_filters)
        if nz != w.data.size:
            bad.append((kh, kw, ic, oc, s, nz))
    l = LayerSpec("deconv", 4, 4, 8, 3, 3, 8, 2)
    orig = count_weight_params(l, Method.DECONV)[0]
    raw = count_weight_params(l, Method.SD)[0]
    comp = count_weight_params(l, Method.SD, compressed=True)[0]
    ok = not bad and raw * 9 == orig * 16 and comp == orig
    record(5, ok, f"{len(shapes)} filter shapes, {len(bad)} nonzero mismatches; K=3 s=2 "
                  f"SD/original {raw}/{orig} = {raw / orig:.4f}, compressed {comp}")


def test_criterion_6_simulator_ordering():
    dot, grid = DotArrayConfig(nzp_line_skip=True), Grid2DConfig(nzp_line_skip=True)
    lines, ok = [], True
    dcgan_speedups = {}
    for name in FIXTURES:
        s = network_speedup(load_fixture(name).layers, dot, grid)
        for arch in ARCHS:
            _, sd = s.best(arch, Method.SD)
            _, nzp = s.best(arch, Method.NZP)
            dense = s.cycles(arch, Method.NZP, Mode.DENSE)
            if not sd <= nzp <= dense:
                ok = False
                lines.append(f"{name}/{arch} {sd} <= {nzp} <= {dense} violated")
            if name == "dcgan":
                dcgan_speedups[arch] = dense / sd
    for arch, sp in dcgan_speedups.items():
        if not 2 <= sp <= 4.5:
            ok = False
        lines.append(f"dcgan {arch} SD speedup {sp:.2f}")
    record(6, ok, f"{len(FIXTURES)} fixtures x {len(ARCHS)} archs, line-skip NZP; " + ", ".join(lines))


def test_criterion_7_counter_consistency():
    rng = np.random.default_rng(SEED)
    picks = rng.choice(len(GRID), 20, replace=False)
    bad = []
    for idx in picks:
        l = GRID[idx]
        x, w = random_operands(l, SEED, int(idx))
        counters = {m: MulCounter() for m in Method}
        deconv2d_oracle(x, w, l.stride, counter=counters[Method.DECONV])
        nzp_deconv2d(x, w, l.stride, counter=counters[Method.NZP])
        run_split(x, plan_split(w, l.stride), counter=counters[Method.SD])
        for m, c in counters.items():
            if c.count != count_macs(l, m, Mode.DENSE):
                bad.append((l.describe(), m.value, c.count))
    record(7, not bad, f"20 random grid layers x 3 methods, {len(bad)} counter mismatches")


def test_criterion_8_cli_golden(tmp_path, capsys):
    cases = [
        (["verify", CFG, "--seed", "11"], None, "verify.txt"),
        (["analyze", CFG, "--csv", "{out}"], "a.csv", "analyze.csv"),
        (["analyze", CFG, "--markdown", "{out}"], "a.md", "analyze.md"),
        (["simulate", CFG, "--csv", "{out}"], "s.csv", "simulate.csv"),
        (["simulate", CFG, "--markdown", "{out}"], "s.md", "simulate.md"),
        (["simulate", CFG, "--nzp-line-skip", "--csv", "{out}"], "l.csv", "simulate_lineskip.csv"),
    ]
    bad = []
    for argv, out_name, gold in cases:
        for attempt in range(2):
            out = tmp_path / f"{attempt}-{out_name}"
            code = main([a.replace("{out}", str(out)) for a in argv])
            text = capsys.readouterr().out if out_name is None else out.read_text(encoding="utf-8")
            if code != 0 or text != golden(gold):
                bad.append(f"{gold} (run {attempt})")
    record(8, not bad, f"{len(cases)} golden outputs x 2 runs byte-identical" + (f"; differ: {bad}" if bad else ""))
