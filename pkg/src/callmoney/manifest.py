"""Experiment manifests and bit-stable CSV emission.

A manifest captures everything needed to reproduce an output file:
market parameters, simulation grid, path count, master seed, and the
artifact names.  Every CSV opens with ``#``-prefixed comment lines
echoing the manifest (the first of them is a JSON config document that
:func:`parse_config` accepts back), then a column-name row, then data
rows with 17-significant-digit floats.  No timestamps or environment
details are written, so re-running a command with the same manifest
reproduces each file byte for byte.
"""

from __future__ import annotations

import json
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field

from .engine import SimConfig
from .errors import ParameterError, UsageError
from .model import ModelParams, derive_params

__all__ = [
    "CONFIG_KEYS",
    "ExperimentManifest",
    "build_manifest",
    "parse_config",
    "format_value",
    "write_csv",
]

# Flat config-document schema: key -> (kind, manifest meaning).
CONFIG_KEYS: tuple[tuple[str, str], ...] = (
    ("nu", "float"),
    ("sigma", "float"),
    ("q0", "float"),
    ("V0", "float"),
    ("horizon", "float"),
    ("steps", "int"),
    ("paths", "int"),
    ("seed", "int"),
)


@dataclass(frozen=True)
class ExperimentManifest:
    """Complete, reproducible description of one CLI experiment."""

    name: str
    params: ModelParams
    config: SimConfig
    n_paths: int
    master_seed: int
    strict: bool = True
    decouple_shocks: bool = False
    outputs: tuple[str, ...] = field(default_factory=tuple)

    def config_document(self) -> dict[str, float | int]:
        """The flat key/value document this manifest round-trips with."""
        return {
            "nu": self.params.nu,
            "sigma": self.params.sigma,
            "q0": self.params.q0,
            "V0": self.params.v0,
            "horizon": self.config.horizon_years,
            "steps": self.config.n_steps,
            "paths": self.n_paths,
            "seed": self.master_seed,
        }

    def header_lines(self) -> list[str]:
        p, c = self.params, self.config
        lines = [
            "config: " + json.dumps(self.config_document()),
            f"derived: mu={p.mu!r} r_inf={p.choke_rate!r} b_max={p.max_leverage!r}",
            f"experiment: name={self.name} s0={p.s0!r} record_every={c.record_every}"
            f" strict={'true' if self.strict else 'false'}"
            f" decouple_shocks={'true' if self.decouple_shocks else 'false'}",
        ]
        if self.outputs:
            lines.append("outputs: " + ",".join(self.outputs))
        return lines


def build_manifest(
    name: str,
    *,
    nu: float,
    sigma: float,
    q0: float,
    v0: float,
    horizon: float,
    steps: int,
    paths: int,
    seed: int,
    record_every: int = 1,
    s0: float = 1.0,
    strict: bool = True,
    decouple_shocks: bool = False,
    outputs: Sequence[str] = (),
) -> ExperimentManifest:
    """Validate raw values and assemble a manifest.

    Parameter and domain problems surface as the usual model errors;
    SimConfig validates the grid.
    """
    params = derive_params(q0, v0, s0, nu, sigma, strict=strict)
    config = SimConfig(horizon, steps, record_every=record_every)
    if paths < 1:
        raise ParameterError(f"paths must be >= 1, got {paths}")
    if seed < 0:
        raise ParameterError(f"seed must be >= 0, got {seed}")
    return ExperimentManifest(
        name=name,
        params=params,
        config=config,
        n_paths=int(paths),
        master_seed=int(seed),
        strict=strict,
        decouple_shocks=decouple_shocks,
        outputs=tuple(outputs),
    )


def validate_document(document: Mapping[str, object]) -> dict[str, float | int]:
    """Check a flat config document against the schema.

    Every schema key is required and no others are allowed; type
    problems name the offending key.  Returns plain python values.
    """
    if not isinstance(document, Mapping):
        raise UsageError("config: expected a JSON object with flat keys")
    known = {k for k, _ in CONFIG_KEYS}
    for key in document:
        if key not in known:
            raise UsageError(f"config: unknown key {key!r}")
    values: dict[str, float | int] = {}
    for key, kind in CONFIG_KEYS:
        if key not in document:
            raise UsageError(f"config: missing key {key!r}")
        raw = document[key]
        if isinstance(raw, bool) or not isinstance(raw, (int, float)):
            raise UsageError(f"config key {key!r}: expected a number, got {raw!r}")
        if kind == "int":
            if float(raw) != int(raw):
                raise UsageError(f"config key {key!r}: expected an integer, got {raw!r}")
            values[key] = int(raw)
        else:
            values[key] = float(raw)
    return values


def parse_config(
    document: Mapping[str, object],
    *,
    name: str = "experiment",
    record_every: int = 1,
    strict: bool = True,
) -> ExperimentManifest:
    """Turn a flat config document into a validated manifest."""
    v = validate_document(document)
    return build_manifest(
        name,
        nu=v["nu"],
        sigma=v["sigma"],
        q0=v["q0"],
        v0=v["V0"],
        horizon=v["horizon"],
        steps=v["steps"],
        paths=v["paths"],
        seed=v["seed"],
        record_every=record_every,
        strict=strict,
    )


def format_value(x: object) -> str:
    """Fixed CSV cell formatting: %.17g floats, plain ints and strings."""
    if isinstance(x, str):
        return x
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, int):
        return str(x)
    return format(float(x), ".17g")


def write_csv(
    path: str,
    manifest: ExperimentManifest,
    columns: Sequence[str],
    rows: Iterable[Sequence[object]],
    extra_header: Sequence[str] = (),
) -> None:
    """Write one artifact: manifest echo, extra comments, header, data."""
    with open(path, "w", encoding="ascii", newline="") as fh:
        for line in manifest.header_lines():
            fh.write(f"# {line}\n")
        for line in extra_header:
            fh.write(f"# {line}\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(format_value(cell) for cell in row) + "\n")
