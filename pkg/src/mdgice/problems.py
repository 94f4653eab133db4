"""Built-in test configurations and the plain-text problem config format.

Config files hold one ``key = value`` pair per line; ``#`` starts a
comment.  Keys::

    name      problem label
    system    advection | burgers | euler
    a         advection speed                      (advection)
    gamma     ratio of specific heats              (euler)
    x_lo, x_hi, t_lo, t_hi    space-time domain
    x_i       initial interface abscissa
    left      left initial state, comma separated  (rho, u, p for euler)
    right     right initial state
    n_elem    total element count (fan cells included)
    fan       number of fan cells at x_i (0 for none)
    n_left    number of elements initialized with the left state
    p         polynomial degree
    basis     P | Q
    seed      spread | clustered
    ice_nodes all | top
    init      constant | dg0   (dg0: first solve a dissipative P0 problem on the
              initial mesh and start from its solution)
    lm.<key>  any LmConfig field
"""
from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .dg import Basis
from .mesh import SlabMesh, build_slab
from .physics import SystemDef, primitive_to_conservative


INIT_MODES = ("constant", "dg0")


@dataclass(frozen=True)
class ProblemSpec:
    name: str
    system: SystemDef
    x_lo: float
    x_hi: float
    t_lo: float
    t_hi: float
    left: tuple
    right: tuple
    x_i: float = 0.0
    n_elem: int = 4
    fan: int = 0
    n_left: int | None = None
    p: int = 1
    basis: str = "Q"
    seed: str = "spread"
    ice_nodes: str = "all"
    init: str = "constant"
    lm: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.x_lo < self.x_i < self.x_hi:
            raise ValueError("interface must lie strictly inside the domain")
        if not self.t_hi > self.t_lo:
            raise ValueError("empty time interval")
        if self.fan >= self.n_elem - 1:
            raise ValueError("need at least one plain cell on each side of the fan")
        if not (np.all(np.isfinite(self.left)) and np.all(np.isfinite(self.right))):
            raise ValueError("initial states must be finite")
        if self.init not in INIT_MODES:
            raise ValueError(f"init must be one of {INIT_MODES}")

    @property
    def left_count(self) -> int:
        if self.n_left is not None:
            return self.n_left
        return self.n_elem // 2

    @property
    def left_state(self) -> np.ndarray:
        return primitive_to_conservative(self.system, *self.left)

    @property
    def right_state(self) -> np.ndarray:
        return primitive_to_conservative(self.system, *self.right)

    def initial_condition(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.where((x < self.x_i)[..., None], self.left_state, self.right_state)

    def bottom_abscissae(self) -> np.ndarray:
        plain = self.n_elem - self.fan
        nl = max(1, plain // 2)
        nr = plain - nl
        if nr < 1:
            raise ValueError("need at least one plain cell on each side of the interface")
        return np.concatenate([np.linspace(self.x_lo, self.x_i, nl + 1),
                               np.linspace(self.x_i, self.x_hi, nr + 1)[1:]])

    def build_mesh(self, t_lo=None, t_hi=None) -> SlabMesh:
        fan = (self.x_i, self.fan) if self.fan else None
        return build_slab(self.bottom_abscissae(), self.t_lo if t_lo is None else t_lo,
                          self.t_hi if t_hi is None else t_hi, fan=fan, seed=self.seed)

    def make_basis(self, p: int | None = None) -> Basis:
        return Basis(self.p if p is None else p, self.basis)

    def with_(self, **kw) -> "ProblemSpec":
        return replace(self, **kw)


def initialize_unknowns(spec: ProblemSpec, disc) -> np.ndarray:
    """Piecewise-constant start: the first ``n_left`` elements take the left state."""
    coeffs = np.empty((disc.E, disc.N, disc.m))
    cl = disc.basis.constant_coeffs(spec.left_state)
    cr = disc.basis.constant_coeffs(spec.right_state)
    for e in range(disc.E):
        coeffs[e] = cl if e < spec.left_count else cr
    return disc.pack(coeffs, disc.initial_geometry())


def _euler(g=1.4):
    return SystemDef("euler", gamma=g)


BUILTINS = {
    "sod": ProblemSpec("sod", _euler(1.4), -0.5, 0.5, 0.0, 0.2,
                       (1.0, 0.0, 1.0), (0.125, 0.0, 0.1), 0.0, 8, 6, 7),
    "lax": ProblemSpec("lax", _euler(1.4), -0.5, 0.5, 0.0, 0.15,
                       (0.445, 0.698876404, 3.52773), (0.5, 0.0, 0.571), 0.0, 8, 6, 7),
    "receding123": ProblemSpec("receding123", _euler(1.4), -0.5, 0.5, 0.0, 0.15,
                               (1.0, -2.0, 0.4), (1.0, 2.0, 0.4), 0.0, 16, 14, 8, p=2,
                               init="dg0"),
    "noh": ProblemSpec("noh", _euler(5.0 / 3.0), -0.5, 0.5, 0.0, 1.0,
                       (1.0, 1.0, 1e-6), (1.0, -1.0, 1e-6), 0.0, 4, 2, 2, init="dg0"),
    "lemma1_advection": ProblemSpec("lemma1_advection", SystemDef("advection", a=1.0),
                                    -0.5, 0.5, 0.0, 0.2, (1.0,), (0.0,), 0.0, 4, 0, 2),
    "lemma2_burgers": ProblemSpec("lemma2_burgers", SystemDef("burgers"),
                                  -0.5, 0.5, 0.0, 0.2, (2.0,), (0.0,), 0.0, 4, 0, 2),
}


def builtin(name: str) -> ProblemSpec:
    try:
        return BUILTINS[name]
    except KeyError:
        raise KeyError(f"unknown problem {name!r}; available: {', '.join(sorted(BUILTINS))}") from None


# ------------------------------------------------------------------ config io
_FLOAT_KEYS = ("x_lo", "x_hi", "t_lo", "t_hi", "x_i")
_INT_KEYS = ("n_elem", "fan", "n_left", "p")
_STR_KEYS = ("name", "basis", "seed", "ice_nodes", "init")


def to_config(spec: ProblemSpec) -> str:
    s = spec.system
    lines = [f"name = {spec.name}", f"system = {s.kind}"]
    if s.kind == "advection":
        lines.append(f"a = {s.a!r}")
    if s.kind == "euler":
        lines.append(f"gamma = {s.gamma!r}")
    for k in _FLOAT_KEYS:
        lines.append(f"{k} = {getattr(spec, k)!r}")
    lines.append("left = " + ", ".join(repr(float(v)) for v in spec.left))
    lines.append("right = " + ", ".join(repr(float(v)) for v in spec.right))
    for k in _INT_KEYS:
        v = getattr(spec, k)
        if v is not None:
            lines.append(f"{k} = {v}")
    for k in ("basis", "seed", "ice_nodes", "init"):
        lines.append(f"{k} = {getattr(spec, k)}")
    for k, v in sorted(spec.lm.items()):
        lines.append(f"lm.{k} = {v!r}")
    return "\n".join(lines) + "\n"


def _parse_lines(text: str) -> dict:
    raw = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {n}: expected 'key = value'")
        k, v = (part.strip() for part in line.split("=", 1))
        raw[k] = v
    return raw


def _typed(raw: dict) -> dict:
    kw = {"lm": {}}
    known = {f.name for f in fields(ProblemSpec)}
    for k, v in raw.items():
        if k.startswith("lm."):
            kw["lm"][k[3:]] = float(v) if k[3:] != "max_iter" else int(float(v))
        elif k in ("left", "right"):
            kw[k] = tuple(float(x) for x in v.split(","))
        elif k in _FLOAT_KEYS:
            kw[k] = float(v)
        elif k in _INT_KEYS:
            kw[k] = int(v)
        elif k in _STR_KEYS:
            kw[k] = v
        elif k not in known:
            raise ValueError(f"unknown config key {k!r}")
    return kw


def parse_config(text: str) -> ProblemSpec:
    raw = _parse_lines(text)
    kind = raw.pop("system", "euler")
    sysdef = SystemDef(kind, a=float(raw.pop("a", 1.0)), gamma=float(raw.pop("gamma", 1.4)))
    kw = _typed(raw)
    kw["system"] = sysdef
    kw.setdefault("name", "custom")
    return ProblemSpec(**kw)


def apply_overrides(spec: ProblemSpec, text: str) -> ProblemSpec:
    """Apply ``key = value`` lines on top of ``spec`` (same keys as a config file)."""
    raw = _parse_lines(text)
    sysdef = spec.system
    if {"system", "a", "gamma"} & raw.keys():
        sysdef = SystemDef(raw.pop("system", sysdef.kind), a=float(raw.pop("a", sysdef.a)),
                           gamma=float(raw.pop("gamma", sysdef.gamma)))
    kw = _typed(raw)
    kw["lm"] = {**spec.lm, **kw["lm"]}
    return replace(spec, system=sysdef, **kw)


def load_problem(name_or_path: str) -> ProblemSpec:
    if name_or_path in BUILTINS:
        return BUILTINS[name_or_path]
    path = Path(name_or_path)
    if path.exists():
        return parse_config(path.read_text())
    return builtin(name_or_path)
