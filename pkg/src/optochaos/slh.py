"""SLH algebra restricted to passive-linear couplings and bilinear Hamiltonians.

A component is a triple ``(S, L, H)``.  Coupling operators are linear in the
mode annihilators, ``L_k = sum_j L[k, j] a_j``, and the Hamiltonian is kept as
the coefficient matrix of ``sum_ij H[i, j] a_i^dag a_j``.  Anything nonlinear
(Kerr, optomechanical, drives) travels as an opaque tag and is realized by
:mod:`optochaos.dynamics`.

Under these restrictions the series product only ever generates bilinear
corrections, so every composition is an exact matrix computation.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import DimensionError, UnsupportedContentError

ModeId = str

_TOL = 1e-12


@dataclass(frozen=True)
class CouplingOperator:
    """Linear combination of mode annihilators, stored without zero entries."""

    terms: Mapping[ModeId, complex] = field(default_factory=dict)

    def __post_init__(self):
        canon = {str(k): complex(v) for k, v in self.terms.items() if complex(v) != 0}
        object.__setattr__(self, "terms", canon)

    def __add__(self, other: "CouplingOperator") -> "CouplingOperator":
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out.get(k, 0) + v
        return CouplingOperator(out)

    def __rmul__(self, scalar) -> "CouplingOperator":
        return CouplingOperator({k: scalar * v for k, v in self.terms.items()})

    def __eq__(self, other):
        if not isinstance(other, CouplingOperator):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def coefficient(self, mode: ModeId) -> complex:
        return self.terms.get(mode, 0j)

    def as_vector(self, modes: Sequence[ModeId]) -> np.ndarray:
        missing = set(self.terms) - set(modes)
        if missing:
            raise DimensionError(f"operator acts on modes {sorted(missing)} outside {list(modes)}")
        return np.array([self.terms.get(m, 0j) for m in modes], dtype=complex)

    @classmethod
    def from_vector(cls, modes: Sequence[ModeId], vec) -> "CouplingOperator":
        return cls(dict(zip(modes, vec)))


@dataclass(frozen=True, eq=False)
class SlhTriple:
    """Open-system component ``(S, L, H)`` over an ordered set of modes.

    Attributes:
        modes: ordered mode labels; matrices below are indexed in this order.
        S: ``n_ch x n_ch`` unitary scattering matrix.
        L: ``n_ch x n_modes`` coupling coefficients, one row per channel.
        H: ``n_modes x n_modes`` Hermitian coefficients of ``a_i^dag a_j``.
        tags: labels of non-bilinear Hamiltonian content handled elsewhere.
    """

    modes: tuple
    S: np.ndarray
    L: np.ndarray
    H: np.ndarray
    tags: frozenset = frozenset()

    def __post_init__(self):
        modes = tuple(str(m) for m in self.modes)
        if len(set(modes)) != len(modes):
            raise DimensionError(f"duplicate mode labels in {modes}")
        S = np.array(self.S, dtype=complex, ndmin=2)
        L = np.array(self.L, dtype=complex).reshape(S.shape[0], len(modes))
        H = np.array(self.H, dtype=complex).reshape(len(modes), len(modes))
        if S.shape[0] != S.shape[1]:
            raise DimensionError(f"S must be square, got {S.shape}")
        if np.linalg.norm(S @ S.conj().T - np.eye(S.shape[0])) > _TOL:
            raise ValueError("S is not unitary")
        if np.linalg.norm(H - H.conj().T) > _TOL:
            raise ValueError("H is not Hermitian")
        for name, val in (("modes", modes), ("S", S), ("L", L), ("H", H),
                          ("tags", frozenset(self.tags))):
            object.__setattr__(self, name, val)

    @property
    def n_channels(self) -> int:
        return self.S.shape[0]

    def coupling(self, channel: int = 0) -> CouplingOperator:
        return CouplingOperator.from_vector(self.modes, self.L[channel])

    def hamiltonian_coefficient(self, creation: ModeId, annihilation: ModeId) -> complex:
        """Coefficient of ``a_creation^dag a_annihilation`` in H."""
        return complex(self.H[self.modes.index(creation), self.modes.index(annihilation)])

    def embed(self, modes: Sequence[ModeId]) -> "SlhTriple":
        """Re-express the triple over a larger ordered mode set."""
        modes = tuple(modes)
        idx = [modes.index(m) for m in self.modes]
        L = np.zeros((self.n_channels, len(modes)), dtype=complex)
        H = np.zeros((len(modes), len(modes)), dtype=complex)
        L[:, idx] = self.L
        H[np.ix_(idx, idx)] = self.H
        return SlhTriple(modes, self.S, L, H, self.tags)

    def allclose(self, other: "SlhTriple", atol: float = _TOL) -> bool:
        modes = _merge_modes(self.modes, other.modes)
        a, b = self.embed(modes), other.embed(modes)
        return (a.tags == b.tags
                and a.S.shape == b.S.shape
                and np.allclose(a.S, b.S, rtol=0, atol=atol)
                and np.allclose(a.L, b.L, rtol=0, atol=atol)
                and np.allclose(a.H, b.H, rtol=0, atol=atol))

    def to_dict(self) -> dict:
        def enc(m):
            return [[[float(z.real), float(z.imag)] for z in row] for row in np.atleast_2d(m)]
        return {
            "modes": list(self.modes),
            "S": enc(self.S),
            "L": enc(self.L),
            "H": enc(self.H),
            "tags": sorted(self.tags),
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def _merge_modes(first: Sequence[ModeId], second: Sequence[ModeId]) -> tuple:
    out = list(first)
    out.extend(m for m in second if m not in out)
    return tuple(out)


def identity_component(n_channels: int = 1) -> SlhTriple:
    """Neutral element of the series product."""
    return SlhTriple((), np.eye(n_channels), np.zeros((n_channels, 0)), np.zeros((0, 0)))


def component(mode: ModeId, rate: float, energy: float = 0.0, tags=()) -> SlhTriple:
    """Single-mode cavity ``(I, sqrt(rate) a, energy a^dag a)`` on one channel."""
    return SlhTriple((mode,), np.eye(1), [[math.sqrt(rate)]], [[energy]], frozenset(tags))


def series_product(downstream: SlhTriple, upstream: SlhTriple) -> SlhTriple:
    """``downstream <| upstream``: output of ``upstream`` feeds ``downstream``."""
    if downstream.n_channels != upstream.n_channels:
        raise DimensionError(
            f"channel mismatch: {downstream.n_channels} vs {upstream.n_channels}")
    modes = _merge_modes(upstream.modes, downstream.modes)
    g1, g2 = upstream.embed(modes), downstream.embed(modes)
    S = g2.S @ g1.S
    L = g2.L + g2.S @ g1.L
    # coefficients of L2^dag S2 L1 on a_i^dag a_j
    cross = g2.L.conj().T @ g2.S @ g1.L
    H = g1.H + g2.H + (cross - cross.conj().T) / 2j
    return SlhTriple(modes, S, L, H, g1.tags | g2.tags)


def feedback_compose(g1: SlhTriple, g2: SlhTriple, gf: SlhTriple) -> SlhTriple:
    """Close the loop ``gf <| g2 <| g1``.

    ``g1`` is the controlled system, ``g2`` the controller and ``gf`` the
    return path that re-enters ``g1``'s modes.
    """
    if not (g1.n_channels == g2.n_channels == gf.n_channels):
        raise DimensionError("all three components must share the channel count")
    return series_product(gf, series_product(g2, g1))


def total_dissipation(composed: SlhTriple, channel: int = 0) -> CouplingOperator:
    """Total coupling operator seen by output channel ``channel``."""
    return composed.coupling(channel)


def interaction_coefficient(composed: SlhTriple, mode1: ModeId, mode2: ModeId) -> float:
    """Real ``c`` such that H contains ``c/(2i) (a2^dag a1 - a1^dag a2)``."""
    c = 2j * composed.hamiltonian_coefficient(mode2, mode1)
    if abs(c.imag) > _TOL * max(1.0, abs(c)):
        raise ValueError(f"bilinear term between {mode1} and {mode2} is not antisymmetric")
    return c.real


def langevin_linear_drift(composed: SlhTriple):
    """Linear quantum Langevin coefficients ``da = drift a dt + input_map dB``.

    Returns ``(drift, input_map)`` with ``drift = -iH - L^dag L / 2`` over
    ``composed.modes`` and ``input_map = -L^dag S`` (modes x channels).
    """
    if composed.tags:
        raise UnsupportedContentError(
            f"non-bilinear content {sorted(composed.tags)} must be handled by the dynamics")
    L, S, H = composed.L, composed.S, composed.H
    drift = -1j * H - 0.5 * (L.conj().T @ L)
    input_map = -(L.conj().T @ S)
    return drift, input_map


def feedback_network(gamma1: float, gamma2: float, gamma_f: float,
                     delta1: float = 0.0, delta2: float = 0.0, tags=()) -> SlhTriple:
    """Two-cavity coherent feedback loop used throughout the package.

    Cavity ``a1`` (rate ``gamma1``) feeds controller cavity ``a2`` (rate
    ``gamma2``); the controller output returns to ``a1`` through a port of
    rate ``gamma_f``.  Detunings enter as bilinear ``delta a^dag a`` terms.
    ``tags`` names the nonlinear content carried alongside.
    """
    g1 = component("a1", gamma1, delta1, tags)
    g2 = component("a2", gamma2, delta2)
    gf = component("a1", gamma_f)
    return feedback_compose(g1, g2, gf)
