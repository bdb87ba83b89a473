"""Run configuration: a flat INI-style key/value file with optional sections.

Every key has one home section; keys may also appear before any section
header.  The whole file is parsed and validated before anything runs.
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field
from pathlib import Path

from .negf import WireModel

EXPERIMENTS = ("solve", "profiles", "sweep-ratio", "deficit-fit", "distributions", "entropy-shares", "resistance")

# key -> (section, kind)
KEYS: dict[str, tuple[str, str]] = {
    "t": ("model", "float"),
    "N": ("model", "int"),
    "n_values": ("model", "intlist"),
    "gamma_p": ("model", "float"),
    "gamma_list": ("model", "floatlist"),
    "onsite": ("model", "float"),
    "T0": ("thermo", "float"),
    "delta_mu": ("thermo", "float"),
    "mu0": ("thermo", "float"),
    "mode": ("solver", "str"),
    "tol": ("solver", "float"),
    "epsabs": ("solver", "float"),
    "grid_points": ("solver", "int"),
    "max_iter": ("solver", "int"),
    "experiment": ("run", "str"),
    "output_dir": ("run", "str"),
    "sites": ("run", "intlist"),
    "n_min": ("run", "int"),
    "regime": ("run", "str"),
}
SECTIONS = {"model", "thermo", "solver", "run"}
_TOP = "__top__"


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None, key: str | None = None):
        self.line, self.key = line, key
        where = f"line {line}: " if line else ""
        super().__init__(f"{where}{message}")


@dataclass(frozen=True)
class RunConfig:
    experiment: str
    t: float = 2.7
    N: int | None = None
    n_values: tuple[int, ...] = ()
    gamma_p: float | None = None  # gamma_p / t
    gamma_list: tuple[float, ...] = ()
    onsite: float = 0.0
    T0: float = 100.0
    delta_mu: float = 0.1
    mu0: float = 0.0
    mode: str = "sommerfeld"
    tol: float = 1e-10
    epsabs: float = 1e-12
    grid_points: int = 2001
    max_iter: int = 50
    output_dir: str = "out"
    sites: tuple[int, ...] = ()
    n_min: int = 20
    regime: str = "weak"
    source: dict[str, str] = field(default_factory=dict, compare=False)
    warnings: tuple[str, ...] = field(default=(), compare=False)

    @property
    def gammas(self) -> tuple[float, ...]:
        if self.gamma_list:
            return self.gamma_list
        return () if self.gamma_p is None else (self.gamma_p,)

    @property
    def sweep_points(self) -> int:
        if self.experiment in ("sweep-ratio", "deficit-fit"):
            return len(self.n_values) * len(self.gammas)
        if self.experiment == "resistance":
            return len(self.gammas) or (10 if self.regime == "weak" else 16)
        return 1


def _parse_list(raw: str, kind: str, key: str, line: int | None):
    items = []
    for part in re.split(r"[,\s]+", raw.strip()):
        if not part:
            continue
        m = re.fullmatch(r"(-?\d+)\.\.(-?\d+)", part)
        try:
            if m and kind == "intlist":
                lo, hi = int(m.group(1)), int(m.group(2))
                items.extend(range(lo, hi + 1))
            else:
                items.append(int(part) if kind == "intlist" else float(part))
        except ValueError:
            raise ConfigError(f"cannot parse {part!r} in {key}", line, key) from None
    if not items:
        raise ConfigError(f"{key} is empty", line, key)
    return tuple(items)


def _convert(key: str, raw: str, line: int | None):
    kind = KEYS[key][1]
    try:
        if kind == "float":
            return float(raw)
        if kind == "int":
            return int(raw)
        if kind == "str":
            return raw.strip()
    except ValueError:
        raise ConfigError(f"{key} = {raw!r} is not a valid {kind}", line, key) from None
    return _parse_list(raw, kind, key, line)


def _line_numbers(text: str) -> dict[tuple[str, str], int]:
    out = {}
    section = _TOP
    for i, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        if s.startswith("[") and s.endswith("]"):
            section = s[1:-1].strip()
        elif s and not s.startswith(("#", ";")) and ("=" in s or ":" in s):
            key = re.split(r"[=:]", s, maxsplit=1)[0].strip()
            out.setdefault((section, key), i)
    return out


def parse_config(text: str) -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str  # keys are case sensitive (N, T0)
    try:
        parser.read_string(f"[{_TOP}]\n" + text)
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        raise ConfigError(str(exc).replace(f"[{_TOP}]", "top level"), line - 1 if line else None) from None
    lines = _line_numbers(text)
    values: dict[str, object] = {}
    source: dict[str, str] = {}
    for section in parser.sections():
        if section != _TOP and section not in SECTIONS:
            raise ConfigError(f"unknown section [{section}]")
        for key, raw in parser.items(section):
            line = lines.get((section, key))
            if key not in KEYS:
                hint = " (did you mean gamma_p?)" if key.startswith("gamma") else ""
                raise ConfigError(f"unknown key {key!r}{hint}", line, key)
            home = KEYS[key][0]
            if section not in (_TOP, home):
                raise ConfigError(f"key {key!r} belongs in [{home}], not [{section}]", line, key)
            if key in values:
                raise ConfigError(f"duplicate key {key!r}", line, key)
            values[key] = _convert(key, raw, line)
            source[key] = raw.strip()
    if "experiment" not in values:
        raise ConfigError("missing required key 'experiment'", key="experiment")
    cfg = RunConfig(**values, source=source)
    return _validate(cfg, lines)


def load_config(path: str | Path) -> RunConfig:
    text = Path(path).read_text()
    return parse_config(text)


def _validate(cfg: RunConfig, lines: dict) -> RunConfig:
    def fail(msg: str, key: str):
        line = next((v for (s, k), v in lines.items() if k == key), None)
        raise ConfigError(msg, line, key)

    if cfg.experiment not in EXPERIMENTS:
        fail(f"experiment must be one of {', '.join(EXPERIMENTS)}; got {cfg.experiment!r}", "experiment")
    if cfg.mode not in ("sommerfeld", "exact"):
        fail(f"mode must be 'sommerfeld' or 'exact'; got {cfg.mode!r}", "mode")
    if cfg.mode == "exact" and cfg.experiment not in ("solve", "profiles"):
        fail("mode = exact is only available for the solve and profiles experiments", "mode")
    if cfg.regime not in ("weak", "strong"):
        fail(f"regime must be 'weak' or 'strong'; got {cfg.regime!r}", "regime")
    if cfg.T0 <= 0:
        fail("T0 must be > 0 K", "T0")
    if cfg.delta_mu < 0:
        fail("delta_mu must be >= 0 (source held at the higher potential)", "delta_mu")
    if cfg.tol <= 0 or cfg.epsabs <= 0 or cfg.max_iter < 1:
        fail("solver tolerances and max_iter must be positive", "tol")
    if cfg.grid_points < 3 or cfg.grid_points % 2 == 0:
        fail("grid_points must be odd and >= 3 (Simpson's rule)", "grid_points")
    if any(g < 0 for g in cfg.gammas):
        fail("probe couplings must be >= 0", "gamma_p" if cfg.gamma_p is not None else "gamma_list")

    single = cfg.experiment in ("solve", "profiles", "distributions", "entropy-shares")
    if single:
        if cfg.N is None:
            fail(f"experiment {cfg.experiment} needs N", "N")
        if cfg.gamma_p is None:
            fail(f"experiment {cfg.experiment} needs gamma_p", "gamma_p")
    if cfg.experiment in ("sweep-ratio", "deficit-fit"):
        if not cfg.n_values:
            fail(f"experiment {cfg.experiment} needs n_values", "n_values")
        if not cfg.gammas:
            fail(f"experiment {cfg.experiment} needs gamma_list or gamma_p", "gamma_list")
    if cfg.experiment == "deficit-fit" and sum(n >= cfg.n_min for n in cfg.n_values) < 3:
        fail(f"deficit-fit needs at least 3 n_values >= n_min = {cfg.n_min}", "n_values")
    if cfg.experiment == "resistance" and cfg.N is None:
        fail("experiment resistance needs N", "N")
    if cfg.experiment == "resistance" and cfg.gammas and len(cfg.gammas) < 5:
        fail("a resistance fit needs at least 5 couplings in gamma_list", "gamma_list")
    if cfg.experiment == "distributions" and cfg.gamma_p is not None and cfg.gamma_p <= 0:
        fail("distributions need gamma_p > 0", "gamma_p")

    sizes = [cfg.N] if cfg.N is not None else []
    sizes += list(cfg.n_values)
    for n in sizes:
        try:
            for g in cfg.gammas or (0.0,):
                WireModel(n, cfg.t, g * cfg.t, cfg.onsite)
        except ValueError as exc:
            fail(str(exc), "N" if cfg.N is not None else "n_values")
    for s in cfg.sites:
        if cfg.N is not None and not 1 <= s <= cfg.N:
            fail(f"site {s} outside 1..{cfg.N}", "sites")

    warnings = []
    if cfg.delta_mu > 2.0 * cfg.t:
        warnings.append("Sommerfeld validity doubtful: delta_mu exceeds the band half-width 2t")
    if cfg.delta_mu == 0:
        warnings.append("zero bias: the entropy ratio is undefined and will be reported as null")
    if cfg.mode == "exact" and cfg.N is not None and cfg.N > 4:
        warnings.append(f"exact adaptive solve with N = {cfg.N} > 4 may be slow")
    if cfg.onsite != 0.0 and cfg.experiment not in ("solve", "profiles"):
        warnings.append("onsite is only used by the solve and profiles experiments")
    return RunConfig(**{**cfg.__dict__, "warnings": tuple(warnings)})
