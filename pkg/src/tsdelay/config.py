"""Run configuration: ``[scale] [shift] [problem] [certify] [output]`` sections."""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field
from pathlib import Path

from tsdelay import shifts
from tsdelay.errors import ConfigError, ExprSyntaxError
from tsdelay.expr import Compiled, _has_var, evaluate, parse
from tsdelay.shifts import DelayFunction, ShiftSystem
from tsdelay.solver import DelayProblem, TableHistory
from tsdelay.stability import DIVERGENCE_THRESHOLD, SearchGrids

SCALE_KINDS = ("real", "integer", "step", "q", "sqrt", "union")
SHIFT_NAMES = ("default", "real-scaling", "broken-q", "translation")


def _unquote(v: str) -> str:
    v = v.strip()
    if len(v) >= 2 and v[0] == v[-1] and v[0] in "\"'":
        return v[1:-1]
    return v


def constant(text: str, where: str) -> float:
    """A numeric setting; any constant expression (``1/3``, ``2^-6``) is accepted."""
    text = _unquote(text)
    if text.strip() in ("inf", "+inf"):
        return math.inf
    if text.strip() == "-inf":
        return -math.inf
    try:
        e = parse(text)
    except ExprSyntaxError as exc:
        raise ConfigError(f"{where}: {exc}") from None
    if _has_var(e):
        raise ConfigError(f"{where}: expected a constant, got {text!r}")
    return evaluate(e, 0.0, text)


def constants(text: str, where: str) -> list[float]:
    return [constant(part, where) for part in _unquote(text).split(",") if part.strip()]


def _pairs(text: str, where: str) -> list[tuple[float, float]]:
    out = []
    for chunk in _unquote(text).split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        if not (chunk.startswith("(") and chunk.endswith(")")):
            raise ConfigError(f"{where}: expected (x,y) pairs separated by ';', got {chunk!r}")
        parts = chunk[1:-1].split(",")
        if len(parts) != 2:
            raise ConfigError(f"{where}: expected (x,y), got {chunk!r}")
        out.append((constant(parts[0], where), constant(parts[1], where)))
    return out


@dataclass
class RunConfig:
    scale_kind: str = "real"
    step: float = 1.0
    q: float = 2.0
    intervals: list[tuple[float, float]] = field(default_factory=list)
    shift: str = "default"
    t0: float = 0.0
    rebase: float | None = None
    h: float | None = None
    T: float | None = None
    a: str = "0"
    b: str = "0"
    psi: str | None = "1"
    psi_table: list[tuple[float, float]] | None = None
    real_step: float | None = None
    lambdas: list[float] | None = None
    alphas: list[float] | None = None
    Ds: list[float] | None = None
    threshold: float = DIVERGENCE_THRESHOLD
    N: float | None = None
    samples: int = 1000
    out_dir: str | None = None
    prefix: str = ""
    source: str = ""

    # -- builders ---------------------------------------------------------------

    def system(self) -> ShiftSystem:
        k, name = self.scale_kind, self.shift
        if k == "real":
            if name == "real-scaling":
                sys = shifts.real_scaling_system()
            elif name == "default":
                sys = shifts.real_system(self.t0)
            else:
                raise ConfigError(f"[shift] system {name!r} is not available on the real line")
        elif k in ("integer", "step"):
            if name != "default":
                raise ConfigError(f"[shift] system {name!r} is not available on {k}")
            sys = shifts.step_system(self.step if k == "step" else 1.0, self.t0)
        elif k == "q":
            if name == "broken-q":
                sys = shifts.broken_q_system(self.q)
            elif name == "default":
                sys = shifts.q_system(self.q, self.t0 if self.t0 != 0 else 1.0)
            else:
                raise ConfigError(f"[shift] system {name!r} is not available on a q-lattice")
        elif k == "sqrt":
            if name != "default":
                raise ConfigError(f"[shift] system {name!r} is not available on sqrt(N)")
            sys = shifts.sqrt_system(0.0)
            if self.t0 != 0:
                sys = sys.rebase(self.t0)
        elif k == "union":
            if self.intervals != [(-math.inf, 0.0), (1.0, math.inf)] or name not in ("default", "translation"):
                raise ConfigError("[scale] union supports only intervals (-inf,0);(1,inf) with the translation shift")
            sys = shifts.gap_counterexample_system()
        else:
            raise ConfigError(f"[scale] unknown kind {k!r}")
        if self.rebase is not None:
            sys = sys.rebase(self.rebase)
        return sys

    def problem(self) -> DelayProblem:
        if self.h is None:
            raise ConfigError("[problem] h is required")
        if self.T is None:
            raise ConfigError("[problem] T is required")
        df = DelayFunction(self.system(), self.h)
        a = _compile(self.a, "[problem] a")
        b = _compile(self.b, "[problem] b")
        if self.psi_table is not None:
            psi = TableHistory(self.psi_table)
        else:
            psi = _compile(self.psi or "1", "[problem] psi")
        return DelayProblem(df, a, b, psi, self.T)

    def search(self, jobs: int = 1) -> SearchGrids:
        return SearchGrids(self.lambdas, self.alphas, self.Ds, self.threshold, jobs, self.real_step)


def _compile(text: str, where: str) -> Compiled:
    try:
        return Compiled(_unquote(text))
    except ExprSyntaxError as exc:
        raise ConfigError(f"{where}: {exc}") from None


_KEYS = {
    "scale": {"kind", "step", "q", "intervals"},
    "shift": {"system", "t0", "rebase"},
    "problem": {"h", "T", "a", "b", "psi", "psi.table", "real_step"},
    "certify": {"lambdas", "alphas", "Ds", "threshold", "N", "samples"},
    "output": {"dir", "prefix"},
}


def loads(text: str, source: str = "<string>") -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    cp.optionxform = str
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc.message if hasattr(exc, 'message') else exc}".splitlines()[0]) from None
    cfg = RunConfig(source=source)
    for section in cp.sections():
        if section not in _KEYS:
            raise ConfigError(f"{source}: unknown section [{section}]")
        for key in cp[section]:
            if key not in _KEYS[section]:
                raise ConfigError(f"{source}: unknown key {key!r} in [{section}]")
    get = lambda s, k: cp[s][k] if cp.has_option(s, k) else None  # noqa: E731

    if (v := get("scale", "kind")) is not None:
        cfg.scale_kind = _unquote(v)
        if cfg.scale_kind not in SCALE_KINDS:
            raise ConfigError(f"[scale] kind must be one of {', '.join(SCALE_KINDS)}")
    if (v := get("scale", "step")) is not None:
        cfg.step = constant(v, "[scale] step")
    if (v := get("scale", "q")) is not None:
        cfg.q = constant(v, "[scale] q")
    if (v := get("scale", "intervals")) is not None:
        cfg.intervals = _pairs(v, "[scale] intervals")
    if (v := get("shift", "system")) is not None:
        cfg.shift = _unquote(v)
        if cfg.shift not in SHIFT_NAMES:
            raise ConfigError(f"[shift] system must be one of {', '.join(SHIFT_NAMES)}")
    if (v := get("shift", "t0")) is not None:
        cfg.t0 = constant(v, "[shift] t0")
    if (v := get("shift", "rebase")) is not None:
        cfg.rebase = constant(v, "[shift] rebase")
    for key in ("h", "T", "real_step"):
        if (v := get("problem", key)) is not None:
            setattr(cfg, key, constant(v, f"[problem] {key}"))
    for key in ("a", "b", "psi"):
        if (v := get("problem", key)) is not None:
            setattr(cfg, key, _unquote(v))
            _compile(v, f"[problem] {key}")
    if (v := get("problem", "psi.table")) is not None:
        cfg.psi_table = _pairs(v, "[problem] psi.table")
    for key in ("lambdas", "alphas", "Ds"):
        if (v := get("certify", key)) is not None:
            setattr(cfg, key, constants(v, f"[certify] {key}"))
    if (v := get("certify", "threshold")) is not None:
        cfg.threshold = constant(v, "[certify] threshold")
    if (v := get("certify", "N")) is not None:
        cfg.N = constant(v, "[certify] N")
    if (v := get("certify", "samples")) is not None:
        cfg.samples = int(constant(v, "[certify] samples"))
    if (v := get("output", "dir")) is not None:
        cfg.out_dir = _unquote(v)
    if (v := get("output", "prefix")) is not None:
        cfg.prefix = _unquote(v)
    return cfg


def load(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return loads(text, str(path))
