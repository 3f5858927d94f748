"""Flat key=value experiment configuration with CLI overrides.

The on-disk format is one ``key = value`` pair per line, ``#`` comments,
and repeated keys for list values (budgets, methods, seeds).  No nesting,
no quoting rules, and the canonical serialization is bit-stable so a
config can be hashed into run metadata.
"""

from __future__ import annotations

import hashlib
import math
import os
from dataclasses import dataclass, field, fields

import numpy as np

from .errors import DomainError, ParseError

__all__ = ["ExperimentConfig", "parse_config_file", "METHODS", "EVALS"]

METHODS = ("netshape", "rand", "degree", "wdegree", "netshield")
EVALS = ("radius", "influence")

_LIST_KEYS = {"budget", "method", "eval", "seed"}
_BOOL_KEYS = {"symmetrize", "plots", "timing", "reselect"}


def parse_config_file(path: str | os.PathLike) -> dict[str, list[str]]:
    """Read a flat config file into key -> list of raw string values."""
    out: dict[str, list[str]] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ParseError(f"expected key = value, got {line!r}", lineno)
            key, _, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            if not key or not value:
                raise ParseError(f"empty key or value in {line!r}", lineno)
            out.setdefault(key, []).append(value)
    return out


def _parse_bool(raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(raw)


@dataclass
class ExperimentConfig:
    """Validated settings shared by the CLI verbs."""

    graph: str | None = None
    format: str = "unweighted"
    symmetrize: bool = False
    weighting: str = "trivalency"
    p_low: float = 0.1
    p_med: float = 0.3
    p_high: float = 0.6
    weight_seed: int = 0
    sir_beta: float = 0.1
    sir_delta: float = 1.0
    target_rho: float | None = None
    mode: str = "node"
    budgets: list[float] = field(default_factory=list)
    methods: list[str] = field(default_factory=lambda: list(METHODS))
    evals: list[str] = field(default_factory=lambda: list(EVALS))
    runs: int = 1000
    n0: int = 1
    selection_samples: int = 1000
    reselect: bool = False
    seeds: list[int] = field(default_factory=lambda: [0])
    eps: float = 0.1
    t_cap: int = 2000
    out: str = "netshape-out"
    threads: int = 1
    plots: bool = False
    timing: bool = False

    def validate(self) -> None:
        bad: list[str] = []
        if self.format not in ("unweighted", "weighted"):
            bad.append(f"format={self.format!r}")
        if self.weighting not in ("trivalency", "native", "sir"):
            bad.append(f"weighting={self.weighting!r}")
        if self.weighting == "native" and self.format != "weighted":
            bad.append("weighting=native requires format=weighted")
        for name in ("p_low", "p_med", "p_high"):
            v = getattr(self, name)
            if not (0.0 < v < 1.0):
                bad.append(f"{name}={v}")
        if self.sir_beta < 0.0:
            bad.append(f"sir_beta={self.sir_beta}")
        if self.sir_delta <= 0.0:
            bad.append(f"sir_delta={self.sir_delta}")
        if self.target_rho is not None and self.target_rho <= 0.0:
            bad.append(f"target_rho={self.target_rho}")
        if self.mode not in ("edge", "node"):
            bad.append(f"mode={self.mode!r}")
        if any(b < 0.0 or not math.isfinite(b) for b in self.budgets):
            bad.append(f"budget={self.budgets}")
        if sorted(set(self.budgets)) != self.budgets:
            bad.append("budget list must be strictly increasing")
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown or not self.methods:
            bad.append(f"method={unknown or self.methods}")
        unknown = [e for e in self.evals if e not in EVALS]
        if unknown or not self.evals:
            bad.append(f"eval={unknown or self.evals}")
        if self.runs < 1:
            bad.append(f"runs={self.runs}")
        if self.n0 < 1:
            bad.append(f"n0={self.n0}")
        if self.selection_samples < 1:
            bad.append(f"selection_samples={self.selection_samples}")
        if not self.seeds:
            bad.append("seed list is empty")
        if not (math.isfinite(self.eps) and self.eps > 0.0):
            bad.append(f"eps={self.eps}")
        if self.t_cap < 1:
            bad.append(f"t_cap={self.t_cap}")
        if self.threads < 1:
            bad.append(f"threads={self.threads}")
        if bad:
            raise DomainError("invalid config: " + ", ".join(bad))

    def check_against_graph(self, n: int, num_edges: int) -> None:
        """Budget bounds depend on the loaded graph, so they are checked late."""
        limit = num_edges if self.mode == "edge" else n
        offending = [b for b in self.budgets if b > limit]
        if offending:
            raise DomainError(
                f"invalid config: budget entries {offending} exceed the "
                f"{self.mode} count {limit}")
        if self.n0 >= n:
            raise DomainError(f"invalid config: n0={self.n0} must be below n={n}")

    def default_budgets(self, n: int, num_edges: int) -> list[float]:
        """16 log-spaced budgets from 1 up to 10 percent of the node count."""
        limit = num_edges if self.mode == "edge" else n
        top = min(max(0.1 * n, 2.0), float(limit))
        grid = np.geomspace(1.0, top, num=16)
        out: list[float] = []
        for b in grid:
            v = float(b)
            if not out or v > out[-1] + 1e-12:
                out.append(v)
        return out

    def canonical_text(self) -> str:
        """Bit-stable flat rendering, one key=value per line, sorted keys."""
        lines: list[str] = []
        for f in sorted(fields(self), key=lambda f: f.name):
            v = getattr(self, f.name)
            if v is None:
                continue
            if isinstance(v, list):
                lines.extend(f"{f.name}={item!r}" for item in v)
            else:
                lines.append(f"{f.name}={v!r}")
        return "\n".join(lines) + "\n"

    def digest(self) -> str:
        return hashlib.sha256(self.canonical_text().encode("utf-8")).hexdigest()

    @classmethod
    def from_sources(cls, file_values: dict[str, list[str]] | None,
                     overrides: dict[str, object]) -> "ExperimentConfig":
        """Merge config-file values with CLI overrides (overrides win)."""
        cfg = cls()
        key_map = {"budget": "budgets", "method": "methods",
                   "eval": "evals", "seed": "seeds"}
        valid = {f.name for f in fields(cfg)} | _LIST_KEYS
        if file_values:
            unknown = sorted(set(file_values) - valid)
            if unknown:
                raise DomainError(f"invalid config: unknown keys {unknown}")
            for key, raws in file_values.items():
                attr = key_map.get(key, key)
                if key not in _LIST_KEYS and len(raws) > 1:
                    raise DomainError(f"invalid config: {key} given {len(raws)} times")
                try:
                    setattr(cfg, attr, _coerce(cfg, attr, key, raws))
                except (ValueError, TypeError):
                    raise DomainError(
                        f"invalid config: bad value for {key}: {raws}") from None
        for attr, value in overrides.items():
            if value is not None:
                setattr(cfg, attr, value)
        cfg.validate()
        return cfg


def _coerce(cfg: ExperimentConfig, attr: str, key: str, raws: list[str]):
    if key == "budget":
        return [float(r) for r in raws]
    if key == "seed":
        return [int(r) for r in raws]
    if key in ("method", "eval"):
        return list(raws)
    if key in _BOOL_KEYS:
        return _parse_bool(raws[0])
    current = getattr(cfg, attr)
    if attr in ("target_rho",):
        return float(raws[0])
    if isinstance(current, bool):
        return _parse_bool(raws[0])
    if isinstance(current, int):
        return int(raws[0])
    if isinstance(current, float):
        return float(raws[0])
    return raws[0]
