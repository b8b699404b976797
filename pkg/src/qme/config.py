"""JSON run configuration: parsing, validation, defaults and serialisation."""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

import jsonschema
import numpy as np

from .engine import DetectorSpec, SystemSpec
from .errors import ParseError, ValidationError
from .optimizer import SearchConfig

METHODS = ("hybrid", "grid", "both")
SWEEP_KINDS = ("kappa", "coupling", "detuning", "local_vs_global", "robustness", "beta")
_KEY = re.compile(r"^[0-9]+,[0-9]+$")


@lru_cache(maxsize=1)
def schema() -> dict:
    return json.loads(resources.files("qme").joinpath("schema/config.schema.json").read_text(encoding="utf-8"))


@dataclass(frozen=True)
class SweepConfig:
    kind: str = "kappa"
    values: tuple[float, ...] | None = None
    range: tuple[float, float, int] | None = None
    configurations: tuple[str, ...] | None = None
    kappa: float = 0.10
    unit: str = "degrees"
    target: tuple[float, float] | None = None

    def grid(self) -> np.ndarray | None:
        """Explicit grid if one was configured, otherwise None (sweep default applies)."""
        if self.values is not None:
            return np.asarray(self.values, dtype=float)
        if self.range is not None:
            start, stop, num = self.range
            return np.round(np.linspace(start, stop, num), 12)
        return None

    def as_dict(self) -> dict:
        out = {"kind": self.kind, "kappa": self.kappa, "unit": self.unit}
        if self.values is not None:
            out["values"] = list(self.values)
        if self.range is not None:
            out["range"] = {"start": self.range[0], "stop": self.range[1], "num": self.range[2]}
        if self.configurations is not None:
            out["configurations"] = list(self.configurations)
        if self.target is not None:
            out["target"] = {"work": self.target[0], "efficiency": self.target[1]}
        return out


@dataclass(frozen=True, eq=False)
class RunConfig:
    system: SystemSpec
    detectors: tuple[DetectorSpec, ...] = ()
    search: SearchConfig = field(default_factory=SearchConfig)
    method: str = "hybrid"
    grid_points: int = 361
    feedback_mode: str = "local"
    theta: tuple[float, ...] | None = None
    sweep: SweepConfig | None = None
    output_path: str | None = None
    output_format: str | None = None
    branch_policy: str = "all"

    def as_dict(self) -> dict:
        search = self.search.as_dict()
        search.update(method=self.method, grid_points=self.grid_points)
        out = {
            "system": self.system.as_dict(),
            "detectors": [{"site": d.site, "kappa": d.kappa} for d in self.detectors],
            "feedback": {"mode": self.feedback_mode, "theta": None if self.theta is None else list(self.theta)},
            "search": search,
            "output": {"path": self.output_path},
            "branch_policy": self.branch_policy,
        }
        if self.output_format is not None:
            out["output"]["format"] = self.output_format
        if self.sweep is not None:
            out["sweep"] = self.sweep.as_dict()
        return out

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True) + "\n"

    def __eq__(self, other):
        return isinstance(other, RunConfig) and self.as_dict() == other.as_dict()

    __hash__ = None


def _field_name(path) -> str:
    name = ""
    for part in path:
        name += f"[{part}]" if isinstance(part, int) else (f".{part}" if name else str(part))
    return name or "(root)"


def _schema_error_field(err: jsonschema.ValidationError) -> str:
    path = list(err.absolute_path)
    if err.validator == "required":
        missing = [k for k in err.validator_value if k not in err.instance]
        return _field_name(path + missing[:1])
    if err.validator == "additionalProperties" and isinstance(err.instance, dict):
        known = set(err.schema.get("properties", {}))
        patterns = [re.compile(p) for p in err.schema.get("patternProperties", {})]
        extra = sorted(k for k in err.instance if k not in known and not any(p.search(k) for p in patterns))
        return _field_name(path + extra[:1])
    return _field_name(path)


def _validate_schema(data) -> None:
    validator = jsonschema.Draft202012Validator(schema())
    errors = sorted(validator.iter_errors(data), key=lambda e: (len(e.absolute_path), list(map(str, e.absolute_path))))
    if errors:
        err = errors[0]
        raise ValidationError(_schema_error_field(err), err.message)


def _build_system(raw: dict) -> SystemSpec:
    n = raw["n_sites"]
    if len(raw["epsilon"]) != n:
        raise ValidationError("system.epsilon", f"expected {n} values, got {len(raw['epsilon'])}")
    coupling = {}
    for key, value in raw.get("coupling", {}).items():
        j, k = (int(s) for s in key.split(","))
        if not 1 <= j < k <= n:
            raise ValidationError(f"system.coupling.{key}", f"sites must satisfy 1 <= j < k <= {n}")
        coupling[(j, k)] = value
    for name, value in [("beta", raw.get("beta", 1.0))] + [(f"epsilon[{i}]", e) for i, e in enumerate(raw["epsilon"])]:
        if not math.isfinite(value):
            raise ValidationError(f"system.{name}", "must be finite")
    return SystemSpec(n, tuple(raw["epsilon"]), coupling, raw.get("beta", 1.0))


def _build_search(raw: dict) -> SearchConfig:
    kwargs = {k: v for k, v in raw.items() if k not in ("method", "grid_points")}
    if "grid_range" in kwargs:
        lo, hi = kwargs["grid_range"]
        if not lo < hi:
            raise ValidationError("search.grid_range", "lower bound must be below upper bound")
        kwargs["grid_range"] = (float(lo), float(hi))
    return SearchConfig(**kwargs)


def _build_sweep(raw: dict) -> SweepConfig:
    if raw.get("values") is not None and raw.get("range") is not None:
        raise ValidationError("sweep.values", "give either values or range, not both")
    rng = raw.get("range")
    target = raw.get("target")
    configurations = raw.get("configurations")
    return SweepConfig(
        kind=raw.get("kind", "kappa"),
        values=None if raw.get("values") is None else tuple(float(v) for v in raw["values"]),
        range=None if rng is None else (float(rng["start"]), float(rng["stop"]), int(rng["num"])),
        configurations=None if configurations is None else tuple(configurations),
        kappa=float(raw.get("kappa", 0.10)),
        unit=raw.get("unit", "degrees"),
        target=None if target is None else (float(target["work"]), float(target["efficiency"])),
    )


def from_dict(data) -> RunConfig:
    """Validate a decoded JSON document and build a RunConfig with defaults applied."""
    _validate_schema(data)
    system = _build_system(data["system"])
    detectors = []
    for i, d in enumerate(data.get("detectors", [])):
        if d["site"] > system.n_sites:
            raise ValidationError(f"detectors[{i}].site", f"must be <= {system.n_sites}")
        detectors.append(DetectorSpec(d["site"], float(d["kappa"])))

    feedback = data.get("feedback", {})
    mode = feedback.get("mode", "local")
    theta = feedback.get("theta")
    if mode == "global" and system.n_sites != 2:
        raise ValidationError("feedback.mode", "global feedback needs n_sites = 2")
    if theta is not None:
        expected = 1 if mode == "global" else system.n_sites
        if len(theta) != expected:
            raise ValidationError("feedback.theta", f"expected {expected} angles")
        theta = tuple(float(t) for t in theta)

    search_raw = data.get("search", {})
    output = data.get("output", {})
    return RunConfig(
        system=system,
        detectors=tuple(detectors),
        search=_build_search(search_raw),
        method=search_raw.get("method", "hybrid"),
        grid_points=search_raw.get("grid_points", 361),
        feedback_mode=mode,
        theta=theta,
        sweep=None if "sweep" not in data else _build_sweep(data["sweep"]),
        output_path=output.get("path"),
        output_format=output.get("format"),
        branch_policy=data.get("branch_policy", "all"),
    )


def parse_config(text: str) -> RunConfig:
    """Parse JSON configuration text.

    Raises ParseError (with line and column) on malformed JSON and
    ValidationError naming the offending field on invalid content.
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, exc.colno) from None
    return from_dict(data)


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
