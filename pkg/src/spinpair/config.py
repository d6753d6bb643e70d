"""Plain-text scenario files.

Format: one ``key = value`` per line, ``#`` starts a comment, ``[section]``
headers group keys. Keys before the first header are top-level. Lists are
comma separated. Example::

    id = fig3
    [geometry]
    x = small-r
    [initial]
    a = 0.7071067811865476
    b = 0.7071067811865476
    [time]
    t_max = 3
    samples = 61

Top level: ``kind`` (scenario | sweep), ``id``, ``observables``, ``baseline``.
``[drive]``: ``chi_over_delta``, ``gamma_over_delta``.
``[options]``: ``im_shift``, ``stark``, ``far_detuned`` (on | off).
``[geometry]``: ``x`` (list; numbers or small-r), ``orientation`` (list).
``[initial]``: ``atom1``, ``atom2`` (superposition | up | down); ``a``, ``b``
(lists of equal length, one initial state per entry).
``[time]``: ``t_max``, ``samples``.
``[sweep]``: ``x_min``, ``x_max``, ``samples``, ``orientation``, ``t_star``,
``observable``.
"""

from __future__ import annotations

import math
from pathlib import Path

from .analytic import SuperpositionCoeffs
from .errors import ConfigError
from .experiments import SMALL_R, InitialState, Scenario, SweepSpec

__all__ = ["parse_config", "parse_config_text"]

_KEYS = {
    "": {"kind", "id", "observables", "baseline"},
    "drive": {"chi_over_delta", "gamma_over_delta"},
    "options": {"im_shift", "stark", "far_detuned"},
    "geometry": {"x", "orientation"},
    "initial": {"atom1", "atom2", "a", "b"},
    "time": {"t_max", "samples"},
    "sweep": {"x_min", "x_max", "samples", "orientation", "t_star", "observable"},
}
_NORM_TOL = 1e-9


class _Entries:
    def __init__(self):
        self.values: dict[tuple[str, str], tuple[str, int]] = {}

    def get(self, section: str, key: str, default=None):
        v = self.values.get((section, key))
        return default if v is None else v

    def require(self, section: str, key: str) -> tuple[str, int]:
        v = self.values.get((section, key))
        if v is None:
            name = f"[{section}] {key}" if section else key
            raise ConfigError("missing required key", name)
        return v

    def sections(self) -> set[str]:
        return {s for s, _ in self.values}


def _tokenize(text: str) -> _Entries:
    entries = _Entries()
    section = ""
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"malformed section header {raw.strip()!r}", line=n)
            section = line[1:-1].strip().lower()
            if section not in _KEYS or not section:
                raise ConfigError(f"unknown section [{section}]", line=n)
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", line=n)
        key, value = (p.strip() for p in line.split("=", 1))
        key = key.lower()
        if key not in _KEYS[section]:
            where = f"[{section}] " if section else ""
            raise ConfigError(f"unknown key {where}{key}", key, n)
        if (section, key) in entries.values:
            raise ConfigError("duplicate key", key, n)
        if not value:
            raise ConfigError("empty value", key, n)
        entries.values[(section, key)] = (value, n)
    return entries


def _float(entry, key: str) -> float:
    value, line = entry
    try:
        v = float(value)
    except ValueError:
        raise ConfigError(f"malformed number {value!r}", key, line) from None
    if not math.isfinite(v):
        raise ConfigError(f"number must be finite, got {value!r}", key, line)
    return v


def _int(entry, key: str) -> int:
    value, line = entry
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"malformed integer {value!r}", key, line) from None


def _list(entry) -> list[str]:
    return [p.strip() for p in entry[0].split(",") if p.strip()]


def _onoff(entry, key: str) -> bool:
    value, line = entry
    if value.lower() in ("on", "true", "yes"):
        return True
    if value.lower() in ("off", "false", "no"):
        return False
    raise ConfigError(f"expected on/off, got {value!r}", key, line)


def _floats(entry, key: str) -> list[float]:
    return [_float((p, entry[1]), key) for p in _list(entry)]


def _separations(entry) -> tuple:
    out = []
    for tok in _list(entry):
        if tok.lower() == SMALL_R:
            out.append(SMALL_R)
            continue
        x = _float((tok, entry[1]), "x")
        if x <= 0:
            raise ConfigError("x must be > 0; x = 0 is singular, use 'small-r' or the closed "
                              "forms in spinpair.analytic", "x", entry[1])
        out.append(x)
    return tuple(out)


def _initial_states(e: _Entries) -> tuple[InitialState, ...]:
    kinds = {}
    for atom in ("atom1", "atom2"):
        entry = e.get("initial", atom, ("superposition", None))
        if entry[0] not in ("superposition", "up", "down"):
            raise ConfigError(f"expected superposition, up or down, got {entry[0]!r}", atom, entry[1])
        kinds[atom] = entry[0]
    if "superposition" not in kinds.values():
        return (InitialState(kinds["atom1"], kinds["atom2"]),)
    a_entry, b_entry = e.require("initial", "a"), e.require("initial", "b")
    a_list, b_list = _floats(a_entry, "a"), _floats(b_entry, "b")
    if len(a_list) != len(b_list):
        raise ConfigError("a and b must list the same number of values", "b", b_entry[1])
    states = []
    for a, b in zip(a_list, b_list):
        if a < 0 or b < 0:
            raise ConfigError("superposition amplitudes must be nonnegative", "a", a_entry[1])
        norm = a * a + b * b
        if abs(norm - 1) > _NORM_TOL:
            raise ConfigError(f"state not normalized: a^2 + b^2 = {norm:.12g}", "b", b_entry[1])
        c = SuperpositionCoeffs(a, b) if abs(norm - 1) <= 1e-12 else SuperpositionCoeffs.normalized(a, b)
        atoms = [c if kinds[k] == "superposition" else kinds[k] for k in ("atom1", "atom2")]
        states.append(InitialState(*atoms))
    return tuple(states)


def _with_line(e: _Entries, err: ConfigError) -> ConfigError:
    if err.line is not None or err.key is None:
        return err
    for (_, key), (_, line) in e.values.items():
        if key == err.key:
            return ConfigError(err.message, err.key, line)
    return err


def _common(e: _Entries) -> dict:
    kw = {}
    for key in ("chi_over_delta", "gamma_over_delta"):
        entry = e.get("drive", key)
        if entry is not None:
            kw[key] = _float(entry, key)
    entry = e.get("options", "im_shift")
    if entry is not None:
        kw["include_im_shift"] = _onoff(entry, "im_shift")
    return kw


def _scenario(e: _Entries) -> Scenario:
    kw = _common(e)
    for key, name in (("stark", "include_stark"), ("far_detuned", "far_detuned")):
        entry = e.get("options", key)
        if entry is not None:
            kw[name] = _onoff(entry, key)
    if "sweep" in e.sections():
        raise ConfigError("[sweep] section requires kind = sweep", "kind")
    kw["id"] = e.require("", "id")[0]
    kw["separations"] = _separations(e.require("geometry", "x"))
    kw["initial"] = _initial_states(e)
    kw["t_max"] = _float(e.require("time", "t_max"), "t_max")
    kw["samples"] = _int(e.require("time", "samples"), "samples")
    if (entry := e.get("geometry", "orientation")) is not None:
        kw["orientations"] = tuple(_list(entry))
    if (entry := e.get("", "observables")) is not None:
        kw["observables"] = tuple(_list(entry))
    if (entry := e.get("", "baseline")) is not None:
        kw["baseline"] = _onoff(entry, "baseline")
    return Scenario(**kw)


def _sweep(e: _Entries) -> SweepSpec:
    kw = _common(e)
    for section in ("geometry", "initial", "time", "options"):
        for key in _KEYS[section]:
            if (section, key) in e.values and not (section, key) == ("options", "im_shift"):
                raise ConfigError("key not used by sweeps", key, e.values[(section, key)][1])
    if (entry := e.get("", "id")) is not None:
        kw["id"] = entry[0]
    kw["x_min"] = _float(e.require("sweep", "x_min"), "x_min")
    kw["x_max"] = _float(e.require("sweep", "x_max"), "x_max")
    if (entry := e.get("sweep", "samples")) is not None:
        kw["samples"] = _int(entry, "samples")
    if (entry := e.get("sweep", "orientation")) is not None:
        kw["orientations"] = tuple(_list(entry))
    if (entry := e.get("sweep", "t_star")) is not None:
        kw["t_star"] = _float(entry, "t_star")
    if (entry := e.get("sweep", "observable")) is not None:
        kw["observable"] = entry[0]
    return SweepSpec(**kw)


def parse_config_text(text: str) -> Scenario | SweepSpec:
    e = _tokenize(text)
    kind = e.get("", "kind", ("scenario", None))
    try:
        if kind[0] == "scenario":
            return _scenario(e)
        if kind[0] == "sweep":
            return _sweep(e)
    except ConfigError as err:
        raise _with_line(e, err) from None
    raise ConfigError(f"kind must be 'scenario' or 'sweep', got {kind[0]!r}", "kind", kind[1])


def parse_config(path) -> Scenario | SweepSpec:
    """Read a scenario or sweep definition from ``path``."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as err:
        raise ConfigError(f"cannot read config file: {err}") from None
    return parse_config_text(text)
