"""INI-style run configuration with strict key checking.

Example (every key optional except ``n_cells``; values shown are the defaults)::

    [grid]
    r_max = 20.0
    n_cells = 512            ; required, 16 * 2^k

    [data]
    a_gamma = 0.1
    a_phi = 0.1
    p = 1.0
    w = 1.0
    gamma1_amp = 0.0
    mass_param = 1.0

    [evolution]
    courant = 0.5
    t_end = 8.0
    output_every = 2         ; RK4 steps per stored snapshot
    deterministic = true     ; runs use no random numbers; false is rejected

    [diagnostics]
    cone_apexes = 4.0, 6.0
    flux_slabs = 0.0:4.0
    monitor_apex = 5.0, 4.0  ; (t, r) of the regularity-monitor tip
    monitor_scales = 1.0, 0.5, 0.25
    diamond = -6.0, 6.0, 7.0 ; u0, v0, side of the double-null diamond

    [output]
    dir = out
    snapshot_every = 16      ; write every Nth stored snapshot
    chart_stride = 4
"""
from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

from .errors import ConfigurationError
from .initial_data import DataFamilyParams


def _float(s):
    v = float(s)
    if not math.isfinite(v):
        raise ValueError("must be finite")
    return v


def _int(s):
    return int(s)


def _bool(s):
    low = s.strip().lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError("expected true or false")


def _floats(s):
    return tuple(_float(x) for x in s.split(",") if x.strip())


def _slabs(s):
    out = []
    for item in s.split(","):
        if not item.strip():
            continue
        lo, hi = item.split(":")
        out.append((_float(lo), _float(hi)))
    return tuple(out)


# section -> key -> (parser, default); a default of None marks the key as required
SCHEMA = {
    "grid": {"r_max": (_float, 20.0), "n_cells": (_int, None)},
    "data": {"a_gamma": (_float, 0.1), "a_phi": (_float, 0.1), "p": (_float, 1.0), "w": (_float, 1.0),
             "gamma1_amp": (_float, 0.0), "mass_param": (_float, 1.0)},
    "evolution": {"courant": (_float, 0.5), "t_end": (_float, 8.0), "output_every": (_int, 2),
                  "deterministic": (_bool, True)},
    "diagnostics": {"cone_apexes": (_floats, (4.0, 6.0)), "flux_slabs": (_slabs, ((0.0, 4.0),)),
                    "monitor_apex": (_floats, (5.0, 4.0)), "monitor_scales": (_floats, (1.0, 0.5, 0.25)),
                    "diamond": (_floats, (-6.0, 6.0, 7.0))},
    "output": {"dir": (str, "out"), "snapshot_every": (_int, 16), "chart_stride": (_int, 4)},
}


@dataclass(frozen=True)
class RunConfig:
    r_max: float = 20.0
    n_cells: int = 512
    data: DataFamilyParams = field(default_factory=DataFamilyParams)
    courant: float = 0.5
    t_end: float = 8.0
    output_every: int = 2
    deterministic: bool = True
    cone_apexes: tuple = (4.0, 6.0)
    flux_slabs: tuple = ((0.0, 4.0),)
    monitor_apex: tuple = (5.0, 4.0)
    monitor_scales: tuple = (1.0, 0.5, 0.25)
    diamond: tuple = (-6.0, 6.0, 7.0)
    out_dir: str = "out"
    snapshot_every: int = 16
    chart_stride: int = 4
    source: str = ""

    @property
    def mass_param(self) -> float:
        return self.data.mass_param

    def with_cells(self, n_cells: int) -> "RunConfig":
        return replace(self, n_cells=int(n_cells))


def _line_of(lines, section, key=None):
    """1-based line number of a section header or of a key inside a section."""
    cur = None
    for no, line in enumerate(lines, 1):
        s = line.strip()
        m = re.match(r"^\[(.+)\]$", s)
        if m:
            cur = m.group(1).strip()
            if key is None and cur == section:
                return no
            continue
        if key is not None and cur == section:
            m = re.match(r"^([^=:;#]+?)\s*[=:]", s)
            if m and m.group(1).strip().lower() == key:
                return no
    return 0


def _is_power_of_two(n: int) -> bool:
    return n > 0 and n & (n - 1) == 0


def validate(cfg: RunConfig) -> RunConfig:
    if not 0.0 < cfg.courant <= 1.0:
        raise ConfigurationError("courant must lie in (0, 1]")
    if cfg.n_cells < 16 or cfg.n_cells % 16 or not _is_power_of_two(cfg.n_cells // 16):
        raise ConfigurationError(f"n_cells must be 16 times a power of two, got {cfg.n_cells}")
    if cfg.r_max <= 0:
        raise ConfigurationError(f"r_max must be positive, got {cfg.r_max}")
    if cfg.t_end < 0:
        raise ConfigurationError(f"t_end must be nonnegative, got {cfg.t_end}")
    if cfg.output_every < 1 or cfg.snapshot_every < 1 or cfg.chart_stride < 1:
        raise ConfigurationError("output_every, snapshot_every and chart_stride must be >= 1")
    if not cfg.deterministic:
        raise ConfigurationError("deterministic must be true: the code has no stochastic mode")
    if len(cfg.monitor_apex) != 2:
        raise ConfigurationError("monitor_apex needs two values: t, r")
    if len(cfg.diamond) != 3 or cfg.diamond[2] <= 0:
        raise ConfigurationError("diamond needs three values u0, v0, side with side > 0")
    for lo, hi in cfg.flux_slabs:
        if not 0.0 <= lo < hi:
            raise ConfigurationError(f"flux slab {lo}:{hi} must satisfy 0 <= T0 < T1")
    try:
        cfg.data.validate()
    except Exception as exc:
        raise ConfigurationError(str(exc)) from exc
    return cfg


def parse_config(path) -> RunConfig:
    """Read and validate a configuration file; errors name the key and line."""
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"config file not found: {path}")
    text = path.read_text()
    lines = text.splitlines()
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"), interpolation=None)
    try:
        cp.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise ConfigurationError(f"malformed config: {exc}") from exc
    values = {}
    for section in cp.sections():
        if section not in SCHEMA:
            raise ConfigurationError(f"unknown section [{section}] at line {_line_of(lines, section)}")
        for key, raw in cp.items(section):
            line = _line_of(lines, section, key)
            if key not in SCHEMA[section]:
                raise ConfigurationError(f"unknown key '{key}' in [{section}] at line {line}")
            parser = SCHEMA[section][key][0]
            try:
                values[key] = parser(raw)
            except (ValueError, TypeError) as exc:
                raise ConfigurationError(f"malformed value for '{key}' at line {line}: {raw!r} ({exc})") from exc
    for section, keys in SCHEMA.items():
        for key, (_, default) in keys.items():
            if key in values:
                continue
            if default is None:
                raise ConfigurationError(f"missing required key '{key}' in [{section}]")
            values[key] = default
    data = DataFamilyParams(values["a_gamma"], values["a_phi"], values["p"], values["w"],
                            values["mass_param"], values["gamma1_amp"])
    cfg = RunConfig(
        r_max=values["r_max"], n_cells=values["n_cells"], data=data, courant=values["courant"],
        t_end=values["t_end"], output_every=values["output_every"], deterministic=values["deterministic"],
        cone_apexes=values["cone_apexes"], flux_slabs=values["flux_slabs"],
        monitor_apex=values["monitor_apex"], monitor_scales=values["monitor_scales"],
        diamond=values["diamond"], out_dir=values["dir"], snapshot_every=values["snapshot_every"],
        chart_stride=values["chart_stride"], source=str(path),
    )
    return validate(cfg)
