"""Run configuration: flat ``key = value`` sections, strictly validated.

Sections and keys (``*`` marks required keys)::

    [lattice]   dim*, n*, length            (length accepts "2*pi", "pi", floats)
    [spin]      delta                       (comma list of 0 / 0.5, one per axis)
    [target]    kind* (sphere|torus), q*
    [map]       init (constant|equator|identity|random), point, perturbation, max_mode
    [potential] kind* (zero|structured|v1|v2|v3|v4|map_only), lambda, s, h, g, w, v_map
    [spinor]    recipe (zero|kernel|eigen|lowest-positive|eigenvalue:<x>|index:<j>)
    [solver]    tolerance, max_iter, step, spinor_mode, count
    [positivity] cutoff
    [morrey]    p, lambda, field (dphi|psi), epsilon
    [input]     record                      (path of a stored critical-point record)
    [output]    dir
    [run]       seed

``[potential] kind`` is optional when ``[input] record`` is given (the
stored potential is used).  Unknown sections or keys are rejected.
"""
from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError
from .io import config_hash
from .potentials import PotentialSpec

__all__ = ["RunConfig", "load_config", "parse_config", "SCHEMA"]

SCHEMA = {
    "lattice": {"dim", "n", "length"},
    "spin": {"delta"},
    "target": {"kind", "q"},
    "map": {"init", "point", "perturbation", "max_mode"},
    "potential": {"kind", "lambda", "s", "h", "g", "w", "v_map"},
    "spinor": {"recipe"},
    "solver": {"tolerance", "max_iter", "step", "spinor_mode", "count"},
    "positivity": {"cutoff"},
    "morrey": {"p", "lambda", "field", "epsilon"},
    "input": {"record"},
    "output": {"dir"},
    "run": {"seed"},
}

REQUIRED = {"lattice": ("dim", "n"), "target": ("kind", "q")}

_LENGTH = re.compile(r"^\s*(?:([0-9.eE+-]+)\s*\*\s*)?pi\s*$")


@dataclass
class RunConfig:
    dim: int
    n: tuple
    length: tuple
    delta: tuple
    target_kind: str
    q: int
    map_init: str = "constant"
    map_point: tuple | None = None
    perturbation: float = 0.0
    max_mode: int = 1
    potential: PotentialSpec | None = None
    spinor_recipe: str = "zero"
    tolerance: float = 1e-8
    max_iter: int = 5000
    step: float | None = None
    spinor_mode: str = "fixed-eigenmode"
    count: int = 16
    cutoff: int | None = None
    morrey_p: float = 2.0
    morrey_lambda: float | None = None
    morrey_field: str = "dphi"
    epsilon: float | None = None
    record: str | None = None
    output_dir: str = "out"
    seed: int = 0
    source: str = "<config>"
    raw: dict = field(default_factory=dict, repr=False)

    def to_dict(self):
        """Canonical content used for hashing (independent of file layout)."""
        return {k: v for k, v in self.raw.items()}

    @property
    def hash(self):
        return config_hash(self.to_dict())


def _line_numbers(text):
    lines = {}
    section = None
    for no, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if s.startswith("[") and s.endswith("]"):
            section = s[1:-1].strip()
            lines[(section, None)] = no
        elif "=" in s and section is not None and not s.startswith(("#", ";")):
            lines[(section, s.split("=", 1)[0].strip().lower())] = no
    return lines


class _Reader:
    def __init__(self, parser, lines, source):
        self.p = parser
        self.lines = lines
        self.source = source

    def where(self, section, key=None):
        no = self.lines.get((section, key)) or self.lines.get((section, None))
        loc = f"{self.source}:{no}" if no else self.source
        return f"{loc}: [{section}]" + (f" {key}" if key else "")

    def fail(self, section, key, msg):
        raise ConfigurationError(f"{self.where(section, key)}: {msg}")

    def has(self, section, key):
        return self.p.has_option(section, key)

    def get(self, section, key, default=None):
        if not self.has(section, key):
            return default
        return self.p.get(section, key).strip()

    def conv(self, section, key, fn, default=None, what="value"):
        text = self.get(section, key)
        if text is None:
            return default
        try:
            return fn(text)
        except (ValueError, TypeError) as exc:
            self.fail(section, key, f"invalid {what} {text!r}")
            raise AssertionError from exc  # unreachable


def _length(text):
    out = []
    for part in text.split(","):
        m = _LENGTH.match(part)
        if m:
            out.append((float(m.group(1)) if m.group(1) else 1.0) * np.pi)
        else:
            out.append(float(part))
    return tuple(out)


def _floats(text):
    return tuple(float(v) for v in text.split(",") if v.strip())


def _ints(text):
    vals = []
    for v in text.split(","):
        if v.strip():
            f = float(v)
            if f != int(f):
                raise ValueError(v)
            vals.append(int(f))
    return tuple(vals)


def _int(text):
    f = float(text)
    if f != int(f):
        raise ValueError(text)
    return int(f)


def parse_config(text, source="<config>"):
    """Parse and validate configuration text into a :class:`RunConfig`."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigurationError(f"{source}: {exc}") from exc
    r = _Reader(parser, _line_numbers(text), source)

    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigurationError(f"{r.where(section)}: unknown section")
        for key in parser.options(section):
            if key not in SCHEMA[section]:
                r.fail(section, key, "unknown key")
    has_record = r.has("input", "record")
    required = dict(REQUIRED)
    if not has_record:
        required["potential"] = ("kind",)
    for section, keys in required.items():
        for key in keys:
            if not r.has(section, key):
                raise ConfigurationError(
                    f"{source}: missing required key [{section}] {key}")

    dim = r.conv("lattice", "dim", _int, what="integer")
    if dim not in (2, 3):
        r.fail("lattice", "dim", "must be 2 or 3")
    n = r.conv("lattice", "n", _ints, what="integer list")
    if len(n) == 1:
        n = n * dim
    if len(n) != dim or any(v < 4 or v % 2 for v in n):
        r.fail("lattice", "n", "need one even value >= 4 (or one per axis)")
    length = r.conv("lattice", "length", _length, (2 * np.pi,), what="length")
    if len(length) == 1:
        length = length * dim
    if len(length) != dim or any(v <= 0 for v in length):
        r.fail("lattice", "length", "need positive lengths, one or one per axis")

    delta = r.conv("spin", "delta", _floats, (0.0,) * dim, what="phase list")
    if len(delta) != dim or any(d not in (0.0, 0.5) for d in delta):
        r.fail("spin", "delta", f"need {dim} phases, each 0 or 0.5")

    kind = r.get("target", "kind")
    if kind not in ("sphere", "torus"):
        r.fail("target", "kind", "must be sphere or torus")
    q = r.conv("target", "q", _int, what="integer")
    if q < (2 if kind == "sphere" else 1):
        r.fail("target", "q", "ambient dimension too small")

    init = r.get("map", "init", "constant")
    if init not in ("constant", "equator", "identity", "random"):
        r.fail("map", "init", "must be constant, equator, identity or random")
    if init == "identity" and (kind != "torus" or q != dim):
        r.fail("map", "init", "identity needs a torus target with q = dim")
    if init == "equator" and kind != "sphere":
        r.fail("map", "init", "equator needs a sphere target")
    point = r.conv("map", "point", _floats, what="point")
    if point is not None and len(point) != q:
        r.fail("map", "point", f"need {q} coordinates")
    perturbation = r.conv("map", "perturbation", float, 0.0)
    max_mode = r.conv("map", "max_mode", _int, 1, what="integer")

    potential = None
    if r.has("potential", "kind"):
        pkind = r.get("potential", "kind")
        data = {"kind": pkind}
        lam = r.conv("potential", "lambda", float)
        if lam is not None:
            data["lam"] = lam
        s = r.conv("potential", "s", _int, what="integer")
        if s is not None:
            data["s"] = s
        for key, name in (("h", "H"), ("g", "G"), ("w", "W"), ("v_map", "V_map")):
            if r.has("potential", key):
                data[name] = r.get("potential", key)
        try:
            potential = PotentialSpec(**data)
            _check_potential_dims(potential, q)
        except ConfigurationError as exc:
            r.fail("potential", _culprit(str(exc), r), str(exc))

    recipe = r.get("spinor", "recipe", "zero")
    if not (recipe in ("zero", "kernel", "eigen", "lowest-positive")
            or re.match(r"^eigenvalue:[-+0-9.eE]+$", recipe)
            or re.match(r"^index:\d+$", recipe)):
        r.fail("spinor", "recipe", f"unknown recipe {recipe!r}")

    tolerance = r.conv("solver", "tolerance", float, 1e-8)
    if not tolerance > 0:
        r.fail("solver", "tolerance", "must be positive")
    max_iter = r.conv("solver", "max_iter", _int, 5000, what="integer")
    if max_iter < 0:
        r.fail("solver", "max_iter", "must be non-negative")
    step = r.conv("solver", "step", float)
    if step is not None and not step > 0:
        r.fail("solver", "step", "must be positive")
    spinor_mode = r.get("solver", "spinor_mode", "fixed-eigenmode")
    if spinor_mode not in ("fixed-eigenmode", "re-solve-each-step"):
        r.fail("solver", "spinor_mode", "must be fixed-eigenmode or re-solve-each-step")
    count = r.conv("solver", "count", _int, 16, what="integer")
    if count < 1:
        r.fail("solver", "count", "must be positive")
    cutoff = r.conv("positivity", "cutoff", _int, what="integer")
    if cutoff is not None and cutoff < 1:
        r.fail("positivity", "cutoff", "must be positive")

    mp = r.conv("morrey", "p", float, 2.0)
    if not mp >= 1:
        r.fail("morrey", "p", "must be >= 1")
    ml = r.conv("morrey", "lambda", float)
    if ml is not None and not 0 < ml <= dim:
        r.fail("morrey", "lambda", f"must lie in (0, {dim}]")
    mfield = r.get("morrey", "field", "dphi")
    if mfield not in ("dphi", "psi"):
        r.fail("morrey", "field", "must be dphi or psi")
    eps = r.conv("morrey", "epsilon", float)
    if eps is not None and not eps > 0:
        r.fail("morrey", "epsilon", "must be positive")

    seed = r.conv("run", "seed", _int, 0, what="integer")
    raw = {s: {k: parser.get(s, k).strip() for k in sorted(parser.options(s))}
           for s in sorted(parser.sections())}
    return RunConfig(
        dim=dim, n=n, length=length, delta=delta, target_kind=kind, q=q,
        map_init=init, map_point=point, perturbation=perturbation, max_mode=max_mode,
        potential=potential, spinor_recipe=recipe, tolerance=tolerance, max_iter=max_iter,
        step=step, spinor_mode=spinor_mode, count=count, cutoff=cutoff,
        morrey_p=mp, morrey_lambda=ml, morrey_field=mfield, epsilon=eps,
        record=r.get("input", "record"), output_dir=r.get("output", "dir", "out"),
        seed=seed, source=source, raw=raw)


_CULPRITS = (("lam", "lambda"), ("superpotential", "w"), ("even s", "s"),
             ("coefficient function", "g"), ("coefficients have length", None),
             ("coordinate index", None))


def _culprit(message, reader):
    """Best guess at the ``[potential]`` key a construction error refers to."""
    for fragment, key in _CULPRITS:
        if fragment in message:
            if key is None:
                for k in ("w", "g", "h", "v_map"):
                    if reader.has("potential", k):
                        return k
            elif reader.has("potential", key):
                return key
    return "kind"


def _check_potential_dims(V, q):
    for f in (V.H, V.G, V.W, V.V_map):
        if f is not None:
            f._check(q)


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, source=str(path))
