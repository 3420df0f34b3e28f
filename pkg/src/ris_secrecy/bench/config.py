"""Declarative experiment configuration (JSON).

A config file fully determines a run, seeds included. Powers are given
in dBm in the file and converted to watt here.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from ..channel import Geometry, PathLossModel, SystemConfig, dbm_to_watt
from ..errors import ConfigError, DomainError
from ..pgm import PgmOptions
from ..ris_model import CircuitParams, RisParams, params_for_resistance
from ..cpdm import ALLOCATIONS

FAMILIES = (
    "rate_vs_power",
    "rate_vs_M",
    "rate_vs_R",
    "runtime_vs_M",
    "convergence_trace",
    "stepsize_compare",
    "cpdm_vs_M",
    "cpdm_runtime",
)
METHODS = ("practical_pgm", "ideal_pgm", "random_ris", "no_ris", "cpdm")
# starting precoder for every method, built at the method's starting phases:
# direct-channel SVD, top eigen-direction of the power-difference matrix,
# or generalized eigen-directions of Bob's and Eve's covariances
PRECODER_INITS = ("svd", "eigen", "generalized")

# what the sweep values mean for each family
SWEEP_AXIS = {
    "rate_vs_power": "P_dbm",
    "rate_vs_M": "M",
    "rate_vs_R": "R",
    "runtime_vs_M": "M",
    "convergence_trace": "iteration",
    "stepsize_compare": "step",  # 0 selects the adaptive initialisation
    "cpdm_vs_M": "M",
    "cpdm_runtime": "M",
}
INTEGER_AXES = {"M", "iteration"}


@dataclass(frozen=True)
class SystemSpec:
    N_a: int = 4
    N_b: int = 4
    N_e: int = 4
    N_s: int = 4
    M: int = 50
    P_dbm: float = 30.0
    sigma2_b_dbm: float = -110.0
    sigma2_e_dbm: float = -110.0

    def build(self, seed: int, **override) -> SystemConfig:
        d = {**asdict(self), **override}
        return SystemConfig(
            N_a=d["N_a"], N_b=d["N_b"], N_e=d["N_e"], N_s=d["N_s"], M=int(d["M"]),
            P=dbm_to_watt(d["P_dbm"]),
            sigma2_b=dbm_to_watt(d["sigma2_b_dbm"]),
            sigma2_e=dbm_to_watt(d["sigma2_e_dbm"]),
            seed=seed,
        )


@dataclass(frozen=True)
class RisSpec:
    """Either a resistance (fitted or packaged params) or explicit params."""

    R: float = 2.0
    circuit: dict | None = None
    params: dict | None = None

    def circuit_params(self) -> CircuitParams | None:
        if self.circuit is None:
            return None
        c = dict(self.circuit)
        if "C_range" in c:
            c["C_range"] = tuple(c["C_range"])
        return CircuitParams(**c)

    def practical(self, R: float | None = None) -> RisParams:
        R = self.R if R is None else R
        if self.params is not None and R == self.R:
            return RisParams.from_dict(self.params)
        return params_for_resistance(R, self.circuit_params())

    def ideal(self) -> RisParams:
        return params_for_resistance(0.0, self.circuit_params())


@dataclass(frozen=True)
class CpdmSpec:
    allocation: str = "top_mode"
    alternations: int = 1


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    family: str
    sweep: tuple
    n_seeds: int
    methods: tuple
    seed_offset: int = 0
    system: SystemSpec = SystemSpec()
    geometry: Geometry = Geometry()
    path_loss: PathLossModel = PathLossModel()
    ris: RisSpec = RisSpec()
    pgm: PgmOptions = PgmOptions()
    cpdm: CpdmSpec = CpdmSpec()
    timing_repeats: int = 1
    precoder_init: str = "svd"
    output: str = "out"
    extra: dict = field(default_factory=dict)

    @property
    def axis(self) -> str:
        return SWEEP_AXIS[self.family]

    @property
    def seeds(self) -> range:
        return range(self.seed_offset, self.seed_offset + self.n_seeds)

    def to_dict(self) -> dict:
        d = {
            "name": self.name,
            "family": self.family,
            "sweep": list(self.sweep),
            "n_seeds": self.n_seeds,
            "seed_offset": self.seed_offset,
            "methods": list(self.methods),
            "system": asdict(self.system),
            "geometry": {k: list(v) for k, v in asdict(self.geometry).items()},
            "path_loss": asdict(self.path_loss),
            "ris": {k: v for k, v in asdict(self.ris).items() if v is not None},
            "pgm": asdict(self.pgm),
            "cpdm": asdict(self.cpdm),
            "timing_repeats": self.timing_repeats,
            "precoder_init": self.precoder_init,
            "output": self.output,
        }
        if self.extra:
            d["extra"] = dict(self.extra)
        return d


_TOP_KEYS = {f.name for f in fields(ExperimentConfig)}


def _sub(cls, data, what):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"'{what}' must be an object")
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown keys in '{what}': {sorted(unknown)}")
    try:
        return cls(**data)
    except (DomainError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid '{what}': {exc}") from exc


def parse_config(data: dict) -> ExperimentConfig:
    """Validate a decoded JSON object and build an :class:`ExperimentConfig`."""
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(data) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    for key in ("name", "family", "sweep", "n_seeds", "methods"):
        if key not in data:
            raise ConfigError(f"missing required key '{key}'")
    family = data["family"]
    if family not in FAMILIES:
        raise ConfigError(f"family must be one of {FAMILIES}, got {family!r}")

    sweep = data["sweep"]
    if not isinstance(sweep, list) or not sweep:
        raise ConfigError("sweep must be a non-empty list")
    if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in sweep):
        raise ConfigError("sweep values must be numbers")
    if any(b <= a for a, b in zip(sweep, sweep[1:])):
        raise ConfigError("sweep values must be strictly increasing")
    axis = SWEEP_AXIS[family]
    if axis in INTEGER_AXES:
        if not all(float(v).is_integer() for v in sweep):
            raise ConfigError(f"sweep over {axis} must hold integers")
        sweep = [int(v) for v in sweep]
        if sweep[0] < (0 if axis == "iteration" else 1):
            raise ConfigError(f"sweep over {axis} out of range")
    if axis in ("R", "step") and sweep[0] < 0:
        raise ConfigError(f"sweep over {axis} must be non-negative")

    n_seeds = data["n_seeds"]
    if not isinstance(n_seeds, int) or isinstance(n_seeds, bool) or n_seeds < 1:
        raise ConfigError("n_seeds must be an integer >= 1")
    methods = data["methods"]
    if not isinstance(methods, list) or not methods:
        raise ConfigError("methods must be a non-empty list")
    bad = [m for m in methods if m not in METHODS]
    if bad:
        raise ConfigError(f"unknown methods {bad}; choose from {METHODS}")
    if len(set(methods)) != len(methods):
        raise ConfigError("methods must not repeat")
    if family in ("convergence_trace", "stepsize_compare") and set(methods) - {"practical_pgm", "cpdm"}:
        raise ConfigError(f"{family} supports only practical_pgm and cpdm")

    geo_data = data.get("geometry")
    path_loss = data.get("path_loss")
    try:
        geometry = Geometry(**geo_data) if geo_data else Geometry()
        plm = PathLossModel(**path_loss) if path_loss else PathLossModel()
    except (DomainError, TypeError) as exc:
        raise ConfigError(f"invalid geometry or path loss: {exc}") from exc

    system = _sub(SystemSpec, data.get("system"), "system")
    cpdm = _sub(CpdmSpec, data.get("cpdm"), "cpdm")
    if cpdm.allocation not in ALLOCATIONS:
        raise ConfigError(f"cpdm.allocation must be one of {ALLOCATIONS}")
    if cpdm.alternations < 1:
        raise ConfigError("cpdm.alternations must be >= 1")

    timing_repeats = data.get("timing_repeats", 3 if family.endswith("runtime") or family == "runtime_vs_M" else 1)
    if not isinstance(timing_repeats, int) or timing_repeats < 1:
        raise ConfigError("timing_repeats must be an integer >= 1")

    precoder_init = data.get("precoder_init", "svd")
    if precoder_init not in PRECODER_INITS:
        raise ConfigError(f"precoder_init must be one of {PRECODER_INITS}")

    cfg = ExperimentConfig(
        name=str(data["name"]),
        family=family,
        sweep=tuple(sweep),
        n_seeds=n_seeds,
        methods=tuple(methods),
        seed_offset=int(data.get("seed_offset", 0)),
        system=system,
        geometry=geometry,
        path_loss=plm,
        ris=_sub(RisSpec, data.get("ris"), "ris"),
        pgm=_sub(PgmOptions, data.get("pgm"), "pgm"),
        cpdm=cpdm,
        timing_repeats=timing_repeats,
        precoder_init=precoder_init,
        output=str(data.get("output", "out")),
        extra=dict(data.get("extra", {})),
    )
    _dry_validate(cfg)
    return cfg


def _dry_validate(cfg: ExperimentConfig) -> None:
    """Build every object a run would need, so errors surface before any work."""
    try:
        for x in cfg.sweep:
            over = {cfg.axis: x} if cfg.axis in ("M", "P_dbm") else {}
            cfg.system.build(cfg.seed_offset, **over)
        if cfg.axis == "R":
            for R in cfg.sweep:
                cfg.ris.practical(R)
        else:
            cfg.ris.practical()
        if "ideal_pgm" in cfg.methods:
            cfg.ris.ideal()
    except (DomainError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc
    except Exception as exc:  # fit failures and the like
        raise ConfigError(f"cannot prepare RIS parameters: {exc}") from exc


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return parse_config(data)
