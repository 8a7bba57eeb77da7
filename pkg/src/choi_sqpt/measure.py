"""Measurement backends: exact expectation values and shot-noise sampling.

Every sampled setting derives its own random stream by hashing a canonical
byte encoding of the setting together with the master seed, so results are
reproducible and independent of evaluation order or concurrent scheduling.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .basis import basis_state, superposition_states
from .channels import QuantumChannel, apply_channel

__all__ = [
    "BackendConfig",
    "MeasurementOutcome",
    "MeasurementSetting",
    "PhysicalityError",
    "exact_expectation",
    "input_state_set",
    "measure_setting",
    "sampled_expectation",
    "tp_complete",
]

# outcome probabilities may poke out of [0, 1] by this much before the
# channel is declared non-physical
PROB_BAND = 1e-9

_MASK64 = (1 << 64) - 1


class PhysicalityError(ValueError):
    """Raised when simulated outcome probabilities are not probabilities."""


def _canon_floats(values) -> str:
    # round to 12 decimals and kill negative zero so equal settings built
    # through different arithmetic hash identically
    return ",".join(format(round(float(v), 12) + 0.0, ".12f") for v in values)


def _canon_complex(arr: np.ndarray) -> str:
    flat = np.asarray(arr).reshape(-1)
    return _canon_floats(np.concatenate([flat.real, flat.imag]))


@dataclass(frozen=True, eq=False)
class MeasurementSetting:
    """One (input pure state, observable) measurement configuration.

    The observable is a 1-d array for a projector |phi><phi| given by the
    vector phi, or a 2-d array for a Hermitian operator measured in its
    eigenbasis.
    """

    input_state: np.ndarray
    observable: np.ndarray

    def __post_init__(self):
        state = np.array(self.input_state, dtype=complex)
        obs = np.array(self.observable, dtype=complex)
        if state.ndim != 1:
            raise ValueError("input state must be a vector")
        if abs(np.linalg.norm(state) - 1.0) > 1e-12:
            raise ValueError("input state must be a unit vector")
        dim = state.shape[0]
        if obs.ndim == 1:
            if obs.shape[0] != dim:
                raise ValueError("projector vector dimension mismatch")
            if abs(np.linalg.norm(obs) - 1.0) > 1e-12:
                raise ValueError("projector vector must be a unit vector")
        elif obs.ndim == 2:
            if obs.shape != (dim, dim):
                raise ValueError("observable dimension mismatch")
            if np.max(np.abs(obs - obs.conj().T)) > 1e-12:
                raise ValueError("observable must be Hermitian")
        else:
            raise ValueError("observable must be a vector or a matrix")
        state.setflags(write=False)
        obs.setflags(write=False)
        object.__setattr__(self, "input_state", state)
        object.__setattr__(self, "observable", obs)

    @property
    def dim(self) -> int:
        return self.input_state.shape[0]

    @property
    def is_projector(self) -> bool:
        return self.observable.ndim == 1

    def canonical_key(self) -> bytes:
        kind = "p" if self.is_projector else "h"
        return (
            f"d={self.dim};in={_canon_complex(self.input_state)};"
            f"obs={kind}:{_canon_complex(self.observable)}"
        ).encode("ascii")


@dataclass(frozen=True)
class MeasurementOutcome:
    """An expectation-value estimate with its statistical uncertainty."""

    value: float
    std_error: float
    shots: int


@dataclass(frozen=True)
class BackendConfig:
    """How expectation values are obtained: exactly or by finite sampling."""

    mode: str = "exact"
    shots: int = 0
    master_seed: int = 0

    def __post_init__(self):
        if self.mode not in ("exact", "sampled"):
            raise ValueError(f"unknown backend mode {self.mode!r}")
        if self.mode == "sampled" and self.shots < 1:
            raise ValueError("sampled mode needs shots >= 1")
        if not 0 <= self.master_seed <= _MASK64:
            raise ValueError("master seed must fit in an unsigned 64-bit integer")

    @property
    def descriptor(self) -> str:
        if self.mode == "exact":
            return "exact"
        return f"sampled(shots={self.shots},seed={self.master_seed})"


def _setting_rng(setting: MeasurementSetting, master_seed: int) -> np.random.Generator:
    digest = hashlib.sha256(setting.canonical_key()).digest()
    words = [int.from_bytes(digest[i : i + 4], "little") for i in range(0, 16, 4)]
    return np.random.default_rng(np.random.SeedSequence([master_seed, *words]))


def _output_state(channel: QuantumChannel, setting: MeasurementSetting) -> np.ndarray:
    if setting.dim != channel.dim:
        raise ValueError(
            f"setting dimension {setting.dim} does not match channel "
            f"dimension {channel.dim}"
        )
    psi = setting.input_state
    return apply_channel(channel, np.outer(psi, psi.conj()))


def exact_expectation(
    channel: QuantumChannel, setting: MeasurementSetting
) -> MeasurementOutcome:
    """Tr[O eps(|psi><psi|)] evaluated without statistical noise."""
    out = _output_state(channel, setting)
    if setting.is_projector:
        phi = setting.observable
        value = (phi.conj() @ out @ phi).real
    else:
        value = np.trace(setting.observable @ out).real
    return MeasurementOutcome(float(value), 0.0, 0)


def _clamp_probability(p: float) -> float:
    if p < -PROB_BAND or p > 1.0 + PROB_BAND:
        raise PhysicalityError(
            f"outcome probability {p} lies outside [0, 1]; the channel is "
            "not completely positive / trace preserving"
        )
    return min(max(p, 0.0), 1.0)


def sampled_expectation(
    channel: QuantumChannel, setting: MeasurementSetting, config: BackendConfig
) -> MeasurementOutcome:
    """Finite-shot estimate of Tr[O eps(|psi><psi|)].

    Projector observables draw a binomial count at the exact success
    probability; Hermitian observables are eigendecomposed and eigenvalues
    sampled from the corresponding outcome distribution.  Deterministic for
    a fixed (master_seed, setting) pair.
    """
    if config.mode != "sampled":
        raise ValueError("sampled_expectation needs a sampled-mode config")
    out = _output_state(channel, setting)
    rng = _setting_rng(setting, config.master_seed)
    shots = config.shots
    if setting.is_projector:
        phi = setting.observable
        p = _clamp_probability(float((phi.conj() @ out @ phi).real))
        hits = rng.binomial(shots, p)
        est = hits / shots
        se = float(np.sqrt(est * (1.0 - est) / shots))
        return MeasurementOutcome(float(est), se, shots)
    evals, evecs = np.linalg.eigh(setting.observable)
    probs = np.array(
        [_clamp_probability(float(p.real)) for p in np.diag(evecs.conj().T @ out @ evecs)]
    )
    total = probs.sum()
    if abs(total - 1.0) > PROB_BAND:
        raise PhysicalityError(
            f"outcome probabilities sum to {total}; the channel is not "
            "trace preserving"
        )
    counts = rng.multinomial(shots, probs / total)
    freq = counts / shots
    est = float(evals @ freq)
    var = float(np.square(evals) @ freq - est * est)
    se = float(np.sqrt(max(var, 0.0) / shots))
    return MeasurementOutcome(est, se, shots)


def measure_setting(
    channel: QuantumChannel, setting: MeasurementSetting, config: BackendConfig
) -> MeasurementOutcome:
    """Dispatch to the backend selected by the config."""
    if config.mode == "exact":
        return exact_expectation(channel, setting)
    return sampled_expectation(channel, setting, config)


def input_state_set(dim: int) -> list[np.ndarray]:
    """The D^2 tomography input states.

    The D computational basis kets followed by, for each pair a < b in
    row-major order, (|a>+|b>)/sqrt2 and (|a>+i|b>)/sqrt2.  Their
    projectors are linearly independent and span operator space.
    """
    if dim < 2:
        raise ValueError("the input state set needs dim >= 2")
    states = [basis_state(a, dim) for a in range(dim)]
    for a in range(dim):
        for b in range(a + 1, dim):
            plus, minus = superposition_states(a, b, dim)
            states.append(plus)
            states.append(minus)
    return states


def tp_complete(partials: Mapping[int, float], dim: int) -> float:
    """Infer the one unmeasured diagonal expectation from normalization.

    Given D-1 of the D diagonal-projector expectations of a
    trace-preserving channel for a fixed input state, the missing one is
    1 minus their sum.
    """
    if len(partials) != dim - 1:
        raise ValueError(
            f"need exactly {dim - 1} diagonal expectations, got {len(partials)}"
        )
    levels = set()
    for level in partials:
        if not 0 <= int(level) < dim:
            raise ValueError(f"level index {level} out of range for dimension {dim}")
        levels.add(int(level))
    if len(levels) != dim - 1:
        raise ValueError("duplicate level indices in partial expectations")
    return 1.0 - float(sum(partials.values()))
