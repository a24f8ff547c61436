"""JSON run configuration.

Frequencies are written as ``X/2pi`` in Hz under keys ending in
``_over_2pi_hz``; times in microseconds under keys ending in ``_us``.
Unknown keys are rejected, and every error names the offending key path.
"""
import dataclasses
import json
import math
import typing
from dataclasses import dataclass, field
from typing import List, Optional

from .dynamics import InitialConditions, PhysicalParams
from .errors import ConfigError, DomainError


@dataclass(frozen=True)
class IntegrationSettings:
    t_final_us: float = 220.0
    transient_us: float = 20.0
    dt_us: Optional[float] = None
    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    sample_dt_us: Optional[float] = None
    sample_stride: int = 20
    lyapunov_horizon_us: float = 50.0
    lyapunov_renorm_us: float = 0.01
    lyapunov_perturbation: float = 1e-8


@dataclass(frozen=True)
class AnalysisSettings:
    segment_length: Optional[int] = None
    overlap: float = 0.5
    omega_l_over_2pi_hz: Optional[float] = None
    omega_u_over_2pi_hz: Optional[float] = None
    mode_segment_length: int = 16384
    # synthetic control signal f = A cos(w t), bypassing the dynamics
    tone_amplitude_over_2pi_hz: Optional[float] = None
    tone_freq_over_2pi_hz: Optional[float] = None
    tone_duration_us: Optional[float] = None
    tone_dt_us: Optional[float] = None


@dataclass(frozen=True)
class MemorySettings:
    nu_over_2pi_hz: Optional[float] = None
    g_s_over_2pi_hz: Optional[float] = None
    alpha_d: Optional[float] = None
    gamma_s_over_2pi_hz: Optional[float] = None
    mech_damping_over_2pi_hz: float = 5.0
    m_factor: Optional[float] = None
    n: Optional[float] = None
    temperature_k: Optional[float] = None
    omega1_over_2pi_hz: float = 1e6
    s_list: List[float] = field(default_factory=lambda: [0.0])
    nu_grid_over_2pi_hz: Optional[List[float]] = None
    n_grid: Optional[List[float]] = None


@dataclass(frozen=True)
class InitialSettings:
    alpha1: List[float] = field(default_factory=lambda: [0.0, 0.0])
    alpha2: List[float] = field(default_factory=lambda: [0.0, 0.0])
    beta1: List[float] = field(default_factory=lambda: [1.0, 0.0])
    beta2: List[float] = field(default_factory=lambda: [0.0, 0.0])

    def conditions(self) -> InitialConditions:
        return InitialConditions(*(complex(*getattr(self, k))
                                   for k in ("alpha1", "alpha2", "beta1", "beta2")))


@dataclass(frozen=True)
class RunConfig:
    physical: Optional[PhysicalParams] = None
    initial: InitialSettings = field(default_factory=InitialSettings)
    integration: IntegrationSettings = field(default_factory=IntegrationSettings)
    analysis: AnalysisSettings = field(default_factory=AnalysisSettings)
    memory: MemorySettings = field(default_factory=MemorySettings)

    def to_dict(self) -> dict:
        out = {}
        if self.physical is not None:
            p = self.physical
            out["physical"] = {**p.hz_values(), "flip_drive1_sign": p.flip_drive1_sign,
                               "drive1_phase": p.drive1_phase, "drive2_phase": p.drive2_phase}
        for name in ("initial", "integration", "analysis", "memory"):
            out[name] = {k: v for k, v in dataclasses.asdict(getattr(self, name)).items()
                         if v is not None}
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _coerce(value, hint, path):
    origin = typing.get_origin(hint)
    if origin is typing.Union:
        inner = [a for a in typing.get_args(hint) if a is not type(None)][0]
        return None if value is None else _coerce(value, inner, path)
    if origin in (list, List):
        if not isinstance(value, list):
            raise ConfigError("expected a list", path)
        (inner,) = typing.get_args(hint)
        return [_coerce(v, inner, f"{path}[{i}]") for i, v in enumerate(value)]
    if hint is bool:
        if not isinstance(value, bool):
            raise ConfigError("expected true/false", path)
        return value
    if hint is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError("expected an integer", path)
        return value
    if hint is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError("expected a number", path)
        if not math.isfinite(value):
            raise ConfigError("expected a finite number", path)
        return float(value)
    raise TypeError(hint)


def _section(cls, data, path):
    if not isinstance(data, dict):
        raise ConfigError("expected an object", path)
    hints = typing.get_type_hints(cls)
    names = [f.name for f in dataclasses.fields(cls) if f.init]
    unknown = sorted(set(data) - set(names))
    if unknown:
        raise ConfigError(f"unknown key(s) {unknown}", path)
    kwargs = {k: _coerce(v, hints[k], f"{path}.{k}") for k, v in data.items()}
    for k, v in kwargs.items():
        signed = k.startswith("delta")
        if (k.endswith("_over_2pi_hz") or k.endswith("_us") or k in ("n", "temperature_k")) \
                and not signed and v is not None and not isinstance(v, list) and v < 0:
            raise ConfigError("must be non-negative", f"{path}.{k}")
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc), path) from None
    except DomainError as exc:
        raise ConfigError(str(exc), path) from None


_SECTIONS = {
    "physical": PhysicalParams,
    "initial": InitialSettings,
    "integration": IntegrationSettings,
    "analysis": AnalysisSettings,
    "memory": MemorySettings,
}


def config_from_dict(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("top level must be an object", "<root>")
    unknown = sorted(set(data) - set(_SECTIONS))
    if unknown:
        raise ConfigError(f"unknown section(s) {unknown}", "<root>")
    kwargs = {name: _section(_SECTIONS[name], data[name], name) for name in data}
    init = kwargs.get("initial")
    if init is not None:
        for k in ("alpha1", "alpha2", "beta1", "beta2"):
            if len(getattr(init, k)) != 2:
                raise ConfigError("expected [re, im]", f"initial.{k}")
    integ = kwargs.get("integration")
    if integ is not None:
        if not integ.t_final_us > integ.transient_us:
            raise ConfigError("t_final_us must exceed transient_us", "integration.t_final_us")
        if integ.sample_stride < 1:
            raise ConfigError("must be >= 1", "integration.sample_stride")
    mem = kwargs.get("memory")
    if mem is not None and mem.m_factor is not None and not 0 <= mem.m_factor <= 1:
        raise ConfigError("must lie in [0, 1]", "memory.m_factor")
    return RunConfig(**kwargs)


def loads(text: str, source: str = "<config>") -> RunConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    return config_from_dict(data)


def load(path) -> RunConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return loads(text, str(path))
