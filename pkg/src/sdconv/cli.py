"""``sdconv`` command-line tool.

Exit status: 0 success, 1 verification failure, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import analyzer, pesim
from .analyzer import Mode
from .config import FIXTURES, NetworkConfig, load_fixture, read_config
from .reference import ConvParams, conv2d, deconv2d_oracle, nzp_deconv2d
from .split import plan_split, run_split
from .tensor import (ParseError, ShapeError, read_filter_file, read_tensor_file,
                     write_filter_file, write_tensor_file)
from .verify import check_layer, grid_layers, resolve_seed


class UsageError(Exception):
    pass


def _load(spec: str, chained: bool = False) -> NetworkConfig:
    if spec.startswith("fixture:"):
        name = spec.split(":", 1)[1]
        if name not in FIXTURES:
            raise UsageError(f"unknown fixture {name!r}; choose from {', '.join(FIXTURES)}")
        cfg = load_fixture(name)
        if chained:
            cfg.check_chained()
        return cfg
    return read_config(spec, chained)


def _emit(text: str, path: str | None) -> None:
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_split(args) -> int:
    w = read_filter_file(args.filter)
    plan = plan_split(w, args.stride)
    base = args.out
    names = []
    for n, sub in enumerate(plan.sub_filters):
        name = f"{base}.sub{n}.flt"
        write_filter_file(name, sub)
        names.append(name)
    text = plan.describe() + "\n"
    Path(f"{base}.plan.txt").write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    for name in names:
        print(f"wrote {name}")
    return 0


def cmd_verify(args) -> int:
    seed = resolve_seed(args.seed)
    if args.grid:
        m = args.grid_max
        cases = list(enumerate(grid_layers(min(m, 5), min(m, 5), min(m, 4), min(m, 3))))
        label = f"grid (max {m})"
    elif args.config:
        cfg = _load(args.config, args.chained)
        cases = [(i, l) for i, l in enumerate(cfg.layers) if l.is_deconv]
        label = cfg.name
    else:
        raise UsageError("verify needs a config file or --grid")
    failures = 0
    for i, layer in cases:
        r = check_layer(layer, seed, i, crop_bias=args.crop_bias)
        if not r.ok:
            failures += 1
            print(f"MISMATCH layer {i} {layer.describe()}: {r.detail}")
        elif not args.grid or args.verbose:
            print(f"layer {i} {layer.describe()}: nzp max|dev| {r.nzp_dev:g}, "
                  f"sd max|dev| {r.sd_dev:g} ok")
    status = "PASS" if failures == 0 else "FAIL"
    print(f"{status} {label}: {len(cases)} layers, {failures} mismatches, seed {seed}")
    return 0 if failures == 0 else 1


def cmd_analyze(args) -> int:
    cfg = _load(args.config, args.chained)
    reports = analyzer.mac_census(cfg.layers)
    _emit(analyzer.census_csv(reports), args.csv)
    md = analyzer.census_markdown(cfg.layers, cfg.name)
    if args.markdown:
        Path(args.markdown).write_text(md, encoding="utf-8")
    elif not args.csv:
        sys.stdout.write("\n" + md)
    else:
        sys.stdout.write(md)
    return 0


def _parse_modes(text: str | None) -> list[Mode] | None:
    if not text:
        return None
    out = []
    for tok in text.split(","):
        try:
            out.append(Mode(tok.strip()))
        except ValueError:
            raise UsageError(f"unknown mode {tok!r}; choose from "
                             f"{', '.join(m.value for m in Mode)}") from None
    return out


def cmd_simulate(args) -> int:
    cfg = _load(args.config, args.chained)
    archs = pesim.ARCHS if args.arch == "both" else (args.arch,)
    modes = _parse_modes(args.modes)
    if modes:
        for arch in archs:
            bad = [m.value for m in modes if m not in pesim.ARCH_MODES[arch]]
            if bad:
                raise UsageError(f"mode(s) {', '.join(bad)} not supported on {arch}")
    dot = pesim.DotArrayConfig(args.d_in, args.d_out, args.freq, args.nzp_line_skip)
    grid = pesim.Grid2DConfig(args.rows, args.cols, args.freq, args.nzp_line_skip)
    summary = pesim.network_speedup(cfg.layers, dot, grid, archs, modes)
    _emit(pesim.simulation_csv(summary), args.csv)
    if args.markdown:
        Path(args.markdown).write_text(pesim.simulation_markdown(summary, cfg.name), encoding="utf-8")
    return 0


def cmd_run(args) -> int:
    cfg = _load(args.config)
    if len(args.filters) != len(cfg.layers):
        raise UsageError(f"{cfg.name} has {len(cfg.layers)} layers but {len(args.filters)} "
                         "filter files were given")
    x = read_tensor_file(args.input)
    for i, (layer, fpath) in enumerate(zip(cfg.layers, args.filters)):
        where = f"layer {i} ({layer.describe()})"
        if x.shape != layer.input_shape:
            raise ShapeError(f"{where}: expects input {layer.input_shape}, got {x.shape}")
        w = read_filter_file(fpath)
        if w.shape != layer.filter_shape:
            raise ShapeError(f"{where}: expects filter {layer.filter_shape}, {fpath} is {w.shape}")
        if not layer.is_deconv:
            x = conv2d(x, w, ConvParams(layer.stride, 0))
        elif args.method == "oracle":
            x = deconv2d_oracle(x, w, layer.stride, layer.crop)
        elif args.method == "nzp":
            x = nzp_deconv2d(x, w, layer.stride, layer.crop)
        else:
            x = run_split(x, plan_split(w, layer.stride), layer.crop)
    write_tensor_file(args.output, x)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sdconv", description="Split-deconvolution conversion, "
                                "verification and cost analysis.")
    sub = p.add_subparsers(dest="command", required=True)
    cfg_help = "network config file, or fixture:NAME (" + ", ".join(FIXTURES) + ")"

    sp = sub.add_parser("split", help="split a filter file into s*s convolution filters")
    sp.add_argument("filter")
    sp.add_argument("--stride", "-s", type=int, required=True)
    sp.add_argument("--out", "-o", required=True, help="output base name")
    sp.set_defaults(func=cmd_split)

    vp = sub.add_parser("verify", help="check oracle == NZP == SD on seeded whole-number data")
    vp.add_argument("config", nargs="?", help=cfg_help)
    vp.add_argument("--grid", action="store_true", help="use the built-in small-shape grid")
    vp.add_argument("--grid-max", type=int, default=5,
                    help="largest input/kernel size on the grid (stride <= 4, channels <= 3)")
    vp.add_argument("--seed", type=int, default=None)
    vp.add_argument("--chained", action="store_true")
    vp.add_argument("--verbose", "-v", action="store_true")
    vp.add_argument("--crop-bias", type=int, default=0, help=argparse.SUPPRESS)
    vp.set_defaults(func=cmd_verify)

    ap = sub.add_parser("analyze", help="MAC and weight-parameter census")
    ap.add_argument("config", help=cfg_help)
    ap.add_argument("--csv", help="write CSV here instead of stdout")
    ap.add_argument("--markdown", help="write the markdown summary here")
    ap.add_argument("--chained", action="store_true")
    ap.add_argument("--seed", type=int, default=None, help="accepted for uniformity; unused")
    ap.set_defaults(func=cmd_analyze)

    mp = sub.add_parser("simulate", help="cycle estimates on the PE-array models")
    mp.add_argument("config", help=cfg_help)
    mp.add_argument("--arch", choices=("dot", "grid2d", "both"), default="both")
    mp.add_argument("--modes", help="comma-separated subset of Dense,Asparse,Wsparse,AWsparse")
    mp.add_argument("--nzp-line-skip", action="store_true",
                    help="NZP skips only all-zero input rows (pessimistic baseline)")
    mp.add_argument("--d-in", type=int, default=16)
    mp.add_argument("--d-out", type=int, default=16)
    mp.add_argument("--rows", type=int, default=32)
    mp.add_argument("--cols", type=int, default=7)
    mp.add_argument("--freq", type=float, default=800.0, help="clock in MHz")
    mp.add_argument("--csv", help="write CSV here instead of stdout")
    mp.add_argument("--markdown", help="write the markdown summary here")
    mp.add_argument("--chained", action="store_true")
    mp.add_argument("--seed", type=int, default=None, help="accepted for uniformity; unused")
    mp.set_defaults(func=cmd_simulate)

    rp = sub.add_parser("run", help="execute a network on a tensor file")
    rp.add_argument("config", help=cfg_help)
    rp.add_argument("input", help="input tensor file")
    rp.add_argument("filters", nargs="*", help="one filter file per layer")
    rp.add_argument("--method", choices=("oracle", "nzp", "sd"), default="sd")
    rp.add_argument("--output", "-o", required=True)
    rp.set_defaults(func=cmd_run)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ParseError, ShapeError, pesim.UnsupportedMode, OSError) as e:
        print(f"sdconv {args.command}: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
