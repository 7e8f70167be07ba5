"""Experiment configuration: TOML ingestion and validation.

A config names one experiment kind, a seed (mandatory: no wall-clock
entropy anywhere), an output directory, and kind-specific parameter
sections.  Validation errors carry the offending field path.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

try:
    import tomllib
except ModuleNotFoundError:                       # Python 3.10
    import tomli as tomllib

import numpy as np

from .symmetry import GroupAction

KINDS = ("check-psh", "flow", "degree", "fibers", "average", "orbit-dim",
         "confine", "verify")


class ConfigError(Exception):
    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass
class ExperimentConfig:
    kind: str
    seed: int
    output: str
    field_expression: str | None
    field_dimension: int | None
    field_domain_radius: float | None
    action_spec: dict | None
    params: dict
    raw: dict
    source_text: str

    @property
    def config_hash(self):
        return hashlib.sha256(self.source_text.encode()).hexdigest()[:16]


def _require(table, key, path, types):
    if key not in table:
        raise ConfigError(f"{path}.{key}" if path else key, "required field is missing")
    value = table[key]
    if not isinstance(value, types):
        names = "/".join(t.__name__ for t in (types if isinstance(types, tuple) else (types,)))
        raise ConfigError(f"{path}.{key}" if path else key,
                          f"expected {names}, got {type(value).__name__}")
    return value


def _optional(table, key, default=None):
    return table.get(key, default)


def load_config(path):
    with open(path, "rb") as fh:
        data = fh.read()
    try:
        raw = tomllib.loads(data.decode("utf-8"))
    except tomllib.TOMLDecodeError as err:
        raise ConfigError(str(path), f"TOML parse error: {err}") from err
    return validate_config(raw, data.decode("utf-8"))


def validate_config(raw, source_text=""):
    kind = _require(raw, "kind", "", str)
    if kind not in KINDS:
        raise ConfigError("kind", f"unknown experiment kind {kind!r}; "
                                  f"expected one of {', '.join(KINDS)}")
    seed = _require(raw, "seed", "", int)
    output = _optional(raw, "output", "pshlab-out")
    if not isinstance(output, str):
        raise ConfigError("output", "expected a string path")

    needs_field = kind in ("check-psh", "flow", "degree", "fibers", "average",
                           "confine")
    expr = dim = radius = None
    if needs_field:
        ftab = _require(raw, "field", "", dict)
        expr = _require(ftab, "expression", "field", str)
        dim = _require(ftab, "dimension", "field", int)
        radius = _optional(ftab, "domain_radius")
        if radius is not None and not isinstance(radius, (int, float)):
            raise ConfigError("field.domain_radius", "expected a number")

    needs_action = kind in ("average", "orbit-dim", "confine")
    action_spec = None
    if needs_action:
        action_spec = _require(raw, "action", "", dict)
        _require(action_spec, "kind", "action", str)

    section = kind.replace("-", "_")
    params = _optional(raw, section, {})
    if not isinstance(params, dict):
        raise ConfigError(section, "expected a table")
    _validate_params(kind, section, params)
    return ExperimentConfig(
        kind=kind, seed=seed, output=output, field_expression=expr,
        field_dimension=dim, field_domain_radius=radius,
        action_spec=action_spec, params=params, raw=raw,
        source_text=source_text)


def _validate_params(kind, section, params):
    if kind == "flow":
        x0 = _require(params, "x0", section, list)
        if not x0:
            raise ConfigError(f"{section}.x0", "expected at least one coordinate")
        # one point: [[re, im], ...]; several starts: [[[re, im], ...], ...]
        points = x0 if isinstance(x0[0], list) and x0[0] and \
            isinstance(x0[0][0], list) else [x0]
        for i, point in enumerate(points):
            for j, entry in enumerate(point):
                if (not isinstance(entry, list) or len(entry) != 2
                        or not all(isinstance(v, (int, float)) for v in entry)):
                    raise ConfigError(f"{section}.x0[{i}][{j}]" if len(points) > 1
                                      else f"{section}.x0[{j}]",
                                      "expected a [re, im] pair per coordinate")
        metric = _optional(params, "metric", "euclidean")
        if metric not in ("euclidean", "kahler"):
            raise ConfigError(f"{section}.metric", f"unknown metric {metric!r}")
    elif kind == "degree":
        levels = _optional(params, "levels", [1.0])
        if (not isinstance(levels, list) or not levels
                or not all(isinstance(v, (int, float)) for v in levels)):
            raise ConfigError(f"{section}.levels", "expected a nonempty number list")
    elif kind == "fibers":
        targets = _optional(params, "targets")
        if targets is not None:
            for i, t in enumerate(targets):
                ok = (isinstance(t, list) and len(t) == 2
                      and all(isinstance(c, list) and len(c) == 2 for c in t))
                if not ok:
                    raise ConfigError(f"{section}.targets[{i}]",
                                      "expected [[re, im], [re, im]]")
    elif kind == "check-psh":
        eps = _optional(params, "epsilon", 1e-8)
        if not isinstance(eps, (int, float)):
            raise ConfigError(f"{section}.epsilon", "expected a number")


def parse_point(entries):
    """[[re, im], ...] -> complex vector."""
    return np.array([complex(re, im) for re, im in entries])


def build_action(spec) -> GroupAction:
    kind = spec["kind"]
    if kind == "circle":
        weights = _require(spec, "weights", "action", list)
        return GroupAction.circle(weights)
    if kind == "torus":
        matrix = _require(spec, "weight_matrix", "action", list)
        return GroupAction.torus(matrix)
    if kind == "su2":
        return GroupAction.su2()
    if kind == "finite":
        mats = _require(spec, "matrices", "action", list)
        out = []
        for m in mats:
            out.append(np.array([[complex(c[0], c[1]) for c in row] for row in m]))
        return GroupAction.finite(out)
    raise ConfigError("action.kind", f"unknown action kind {kind!r}")
