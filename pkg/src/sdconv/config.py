"""Line-oriented network configs.

Grammar (one statement per line, ``#`` starts a comment line)::

    network NAME
    layer deconv in=HxWxC k=KHxKW out=OC stride=S [crop=C]
    layer conv   in=HxWxC k=KHxKW out=OC stride=S

``network`` is optional (defaults to the file stem) and may appear once,
before any layer. Keys may appear in any order; ``stride`` defaults to 1.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .tensor import LayerKind, LayerSpec, ParseError, ShapeError


@dataclass(frozen=True)
class NetworkConfig:
    name: str
    layers: tuple[LayerSpec, ...] = field(default_factory=tuple)

    def check_chained(self) -> None:
        """Raise if layer i's output shape differs from layer i+1's input shape."""
        for i, (a, b) in enumerate(zip(self.layers, self.layers[1:])):
            if a.output_shape != b.input_shape:
                raise ShapeError(f"layer {i} outputs {'x'.join(map(str, a.output_shape))} but "
                                 f"layer {i + 1} expects {'x'.join(map(str, b.input_shape))}")


_DIMS3 = re.compile(r"^(\d+)x(\d+)x(\d+)$")
_DIMS2 = re.compile(r"^(\d+)x(\d+)$")
_INT = re.compile(r"^\d+$")


def _layer(tokens: list[str], lineno: int) -> LayerSpec:
    if len(tokens) < 2 or tokens[1] not in ("conv", "deconv"):
        raise ParseError("expected 'layer conv' or 'layer deconv'", lineno)
    kv = {}
    for tok in tokens[2:]:
        key, eq, val = tok.partition("=")
        if not eq:
            raise ParseError(f"expected key=value, got {tok!r}", lineno)
        if key in kv:
            raise ParseError(f"duplicate key {key!r}", lineno)
        kv[key] = val
    unknown = set(kv) - {"in", "k", "out", "stride", "crop"}
    if unknown:
        raise ParseError(f"unknown key(s) {', '.join(sorted(unknown))}", lineno)
    for req in ("in", "k", "out"):
        if req not in kv:
            raise ParseError(f"missing {req}=", lineno)
    m_in, m_k = _DIMS3.match(kv["in"]), _DIMS2.match(kv["k"])
    if not m_in:
        raise ParseError(f"in= must look like HxWxC, got {kv['in']!r}", lineno)
    if not m_k:
        raise ParseError(f"k= must look like KHxKW, got {kv['k']!r}", lineno)
    for key in ("out", "stride", "crop"):
        if key in kv and not _INT.match(kv[key]):
            raise ParseError(f"{key}= must be an integer, got {kv[key]!r}", lineno)
    h, w, c = map(int, m_in.groups())
    kh, kw = map(int, m_k.groups())
    try:
        return LayerSpec(LayerKind(tokens[1]), h, w, c, kh, kw, int(kv["out"]),
                         int(kv.get("stride", 1)), int(kv.get("crop", 0)))
    except ShapeError as e:
        raise ParseError(str(e), lineno) from None


def parse_config(text: str, default_name: str = "network", chained: bool = False) -> NetworkConfig:
    name = None
    layers = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        if tokens[0] == "network":
            if name is not None or layers:
                raise ParseError("'network' must appear once, before any layer", lineno)
            if len(tokens) != 2:
                raise ParseError("expected 'network NAME'", lineno)
            name = tokens[1]
        elif tokens[0] == "layer":
            layers.append(_layer(tokens, lineno))
        else:
            raise ParseError(f"unknown statement {tokens[0]!r}", lineno)
    cfg = NetworkConfig(name or default_name, tuple(layers))
    if chained:
        cfg.check_chained()
    return cfg


def format_config(cfg: NetworkConfig) -> str:
    lines = [f"network {cfg.name}"] + [f"layer {l.describe()}" for l in cfg.layers]
    return "\n".join(lines) + "\n"


def read_config(path, chained: bool = False) -> NetworkConfig:
    p = Path(path)
    return parse_config(p.read_text(encoding="utf-8"), p.stem, chained)


FIXTURES = ("dcgan", "fst", "mde", "sngan", "artgan", "gpgan")


def load_fixture(name: str) -> NetworkConfig:
    """Bundled deconvolution stacks shaped after common generative networks."""
    if name not in FIXTURES:
        raise KeyError(f"unknown fixture {name!r}; choose from {', '.join(FIXTURES)}")
    text = resources.files("sdconv.networks").joinpath(f"{name}.cfg").read_text(encoding="utf-8")
    return parse_config(text, name)
