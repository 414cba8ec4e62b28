"""Measurement model: the operator data and everything derived from it.

A model bundles the Hamiltonian H, unobserved dissipation channels Ls, the
diffusive output operator R, drift/diffusion constants c and r, the
compensator scale b, and a finite table of jump channels (z, n, nu, V).
From these it builds the master-equation generator, the characteristic
generator K(k), the per-amplitude jump maps and effects, and the signal
drift. The jump measure is a finite table of atoms: total rate must be
finite for the Bernoulli-step integrator, so infinite-activity measures are
out of scope by construction.

Sign and grouping conventions: V is the full effect operator (the identity
plus the deviation), stored whole because every jump formula conjugates by
V; the generator's jump dissipator subtracts the identity internally. The
amplitude z is used as an exact float key: atoms share a z only when their
z fields compare equal.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Any

import numpy as np

from . import tolerances as tol
from .errors import (
    BadShape,
    DeadChannel,
    NonHermitianH,
    NonPositiveB,
    NonPositiveWeight,
    UnknownAmplitude,
    ZeroAmplitude,
)
from .operators import herm_defect
from .serialization import decode_matrix, encode_matrix


def phi1(z: float, b: float) -> float:
    return z * z / (b * b + z * z)


def phi2(z: float, b: float) -> float:
    return b * b / (b * b + z * z)


@dataclass(frozen=True)
class JumpChannel:
    """One atom of the jump measure: amplitude z, label n, weight nu, effect V."""

    z: float
    n: int
    nu: float
    V: np.ndarray


@dataclass(frozen=True)
class QuasiCompletenessReport:
    c1_holds: bool
    c2_holds: bool
    max_deviation_c2: float


@dataclass(frozen=True)
class MeasurementModel:
    dim: int
    H: np.ndarray
    Ls: tuple[np.ndarray, ...]
    R: np.ndarray
    c: float
    r: float
    b: float
    channels: tuple[JumpChannel, ...]

    @cached_property
    def z_values(self) -> tuple[float, ...]:
        """Distinct jump amplitudes, ascending; the iteration order everywhere."""
        return tuple(sorted({ch.z for ch in self.channels}))

    @cached_property
    def channels_at(self) -> dict[float, tuple[JumpChannel, ...]]:
        table: dict[float, list[JumpChannel]] = {z: [] for z in self.z_values}
        for ch in self.channels:
            table[ch.z].append(ch)
        return {z: tuple(v) for z, v in table.items()}

    @cached_property
    def mu(self) -> dict[float, float]:
        """Total weight mu(z) per distinct amplitude."""
        return {z: sum(ch.nu for ch in self.channels_at[z]) for z in self.z_values}

    @cached_property
    def jump_effects(self) -> dict[float, np.ndarray]:
        """Effect operator per amplitude: weighted average of V'V over labels."""
        out = {}
        for z in self.z_values:
            m = self.mu[z]
            eff = sum(
                (ch.nu / m) * (ch.V.conj().T @ ch.V) for ch in self.channels_at[z]
            )
            out[z] = (eff + eff.conj().T) / 2.0
        return out

    @cached_property
    def total_rate(self) -> float:
        return float(sum(self.mu.values()))

    @cached_property
    def compensator_drift(self) -> float:
        """Integral of phi2(z)*z against the jump measure."""
        return float(sum(phi2(z, self.b) * z * self.mu[z] for z in self.z_values))

    @cached_property
    def effective_drift(self) -> np.ndarray:
        """G with generator(tau) = G tau + tau G' + sum of conjugation terms.

        The conjugation terms are L tau L', R tau R', and nu (V-1) tau (V-1)'
        per channel; G collects -iH minus half the corresponding effects.
        """
        d = self.dim
        eye = np.eye(d, dtype=complex)
        acc = np.zeros((d, d), dtype=complex)
        for L in self.Ls:
            acc += L.conj().T @ L
        acc += self.R.conj().T @ self.R
        for ch in self.channels:
            W = ch.V - eye
            acc += ch.nu * (W.conj().T @ W)
        return -1j * self.H - 0.5 * acc


def _as_matrix(obj: Any, dim: int, what: str) -> np.ndarray:
    if isinstance(obj, np.ndarray):
        m = np.asarray(obj, dtype=complex)
    else:
        m = decode_matrix(obj)
    if m.shape != (dim, dim):
        raise BadShape(f"{what} has shape {m.shape}, expected ({dim}, {dim})")
    if not np.all(np.isfinite(m.real)) or not np.all(np.isfinite(m.imag)):
        raise BadShape(f"{what} contains non-finite entries")
    return m


def _as_real(obj: Any, what: str) -> float:
    try:
        x = float(obj)
    except (TypeError, ValueError) as exc:
        raise BadShape(f"{what} must be a real number") from exc
    if not np.isfinite(x):
        raise BadShape(f"{what} is not finite")
    return x


def validate_model(raw: dict[str, Any]) -> MeasurementModel:
    """Check shapes and invariants of a decoded model and freeze it.

    Accepts matrices either as ndarrays or in the JSON wire encoding.
    Derived per-amplitude aggregates are cached on first access.
    """
    if not isinstance(raw, dict):
        raise BadShape("model must be a JSON object")
    try:
        dim = int(raw["dim"])
    except (KeyError, TypeError, ValueError) as exc:
        raise BadShape(f"bad or missing dim: {exc}") from exc
    if dim < 1:
        raise BadShape(f"dim must be >= 1, got {dim}")
    for key in ("H", "Ls", "R", "c", "r", "b", "channels"):
        if key not in raw:
            raise BadShape(f"missing model field {key!r}")

    H = _as_matrix(raw["H"], dim, "H")
    if herm_defect(H) > tol.HERM_TOL:
        raise NonHermitianH(f"H has Hermiticity defect {herm_defect(H):.3e}")
    if not isinstance(raw["Ls"], (list, tuple)):
        raise BadShape("Ls must be a list of matrices")
    Ls = tuple(_as_matrix(L, dim, f"Ls[{i}]") for i, L in enumerate(raw["Ls"]))
    R = _as_matrix(raw["R"], dim, "R")
    c = _as_real(raw["c"], "c")
    r = _as_real(raw["r"], "r")
    b = _as_real(raw["b"], "b")
    if b <= 0.0:
        raise NonPositiveB(f"b must be > 0, got {b!r}")

    if not isinstance(raw["channels"], (list, tuple)):
        raise BadShape("channels must be a list")
    channels = []
    seen: set[tuple[float, int]] = set()
    for i, entry in enumerate(raw["channels"]):
        if isinstance(entry, JumpChannel):
            z, n, nu, V = entry.z, entry.n, entry.nu, entry.V
        elif isinstance(entry, dict):
            try:
                z = _as_real(entry["z"], f"channels[{i}].z")
                n = int(entry["n"])
                nu = _as_real(entry["nu"], f"channels[{i}].nu")
                V = _as_matrix(entry["V"], dim, f"channels[{i}].V")
            except KeyError as exc:
                raise BadShape(f"channels[{i}] missing field {exc}") from exc
        else:
            raise BadShape(f"channels[{i}] must be an object")
        if z == 0.0:
            raise ZeroAmplitude(f"channels[{i}] has z=0")
        if nu <= 0.0:
            raise NonPositiveWeight(f"channels[{i}] has nu={nu!r}")
        if n < 1:
            raise BadShape(f"channels[{i}] label n must be a positive integer")
        if (z, n) in seen:
            raise BadShape(f"duplicate channel key (z={z!r}, n={n})")
        seen.add((z, n))
        channels.append(JumpChannel(z=z, n=n, nu=nu, V=np.asarray(V, dtype=complex)))

    model = MeasurementModel(
        dim=dim, H=H, Ls=Ls, R=R, c=c, r=r, b=b, channels=tuple(channels)
    )
    # touch the caches so later access is read-only across threads
    model.z_values, model.mu, model.jump_effects, model.effective_drift
    model.total_rate, model.compensator_drift, model.channels_at
    return model


def model_to_dict(model: MeasurementModel) -> dict[str, Any]:
    """Inverse of validate_model: the JSON wire form."""
    return {
        "dim": model.dim,
        "H": encode_matrix(model.H),
        "Ls": [encode_matrix(L) for L in model.Ls],
        "R": encode_matrix(model.R),
        "c": model.c,
        "r": model.r,
        "b": model.b,
        "channels": [
            {"z": ch.z, "n": ch.n, "nu": ch.nu, "V": encode_matrix(ch.V)}
            for ch in model.channels
        ],
    }


def liouvillian(model: MeasurementModel, tau: np.ndarray) -> np.ndarray:
    """Full master-equation generator applied to tau. Trace-free output."""
    G = model.effective_drift
    eye = np.eye(model.dim, dtype=complex)
    out = G @ tau + tau @ G.conj().T
    for L in model.Ls:
        out += L @ tau @ L.conj().T
    out += model.R @ tau @ model.R.conj().T
    for ch in model.channels:
        W = ch.V - eye
        out += ch.nu * (W @ tau @ W.conj().T)
    return out


def jump_map(model: MeasurementModel, z: float, tau: np.ndarray) -> np.ndarray:
    """Completely positive jump map at amplitude z, normalized by mu(z)."""
    group = model.channels_at.get(z)
    if group is None:
        raise UnknownAmplitude(f"no channel at z={z!r}")
    m = model.mu[z]
    out = np.zeros_like(np.asarray(tau, dtype=complex))
    for ch in group:
        out += (ch.nu / m) * (ch.V @ tau @ ch.V.conj().T)
    return out


def jump_effect(model: MeasurementModel, z: float) -> np.ndarray:
    """Positive effect operator dual to the jump map at z."""
    eff = model.jump_effects.get(z)
    if eff is None:
        raise UnknownAmplitude(f"no channel at z={z!r}")
    return eff


def normalized_jump(
    model: MeasurementModel, z: float, tau: np.ndarray, jump_tol: float = tol.JUMP_TOL
) -> np.ndarray:
    """Post-jump state: the jump map output renormalized to unit trace."""
    out = jump_map(model, z, tau)
    tr = float(np.trace(out).real)
    if tr <= jump_tol:
        raise DeadChannel(f"jump at z={z!r} has probability {tr!r} from this state")
    return out / tr


def mean_drift(model: MeasurementModel, tau: np.ndarray) -> float:
    """Expected diffusive signal drift from state tau."""
    return float(np.trace((model.R + model.R.conj().T) @ tau).real)


def jump_intensity(model: MeasurementModel, z: float, rho: np.ndarray) -> float:
    """Relative intensity of the z-channel from state rho (1 at ignorance)."""
    return float(np.trace(jump_effect(model, z) @ rho).real)


def generator_k(model: MeasurementModel, k: float, tau: np.ndarray) -> np.ndarray:
    """Characteristic-function generator K(k) applied to tau; K(0) is the
    master-equation generator."""
    tau = np.asarray(tau, dtype=complex)
    out = liouvillian(model, tau)
    out = out + 1j * k * model.c * tau - 0.5 * model.r**2 * k**2 * tau
    out += 1j * k * model.r * (model.R @ tau + tau @ model.R.conj().T)
    for z in model.z_values:
        m = model.mu[z]
        out += m * (
            (np.exp(1j * k * z) - 1.0) * jump_map(model, z, tau)
            - 1j * k * z * phi2(z, model.b) * tau
        )
    return out


def quasi_completeness_check(model: MeasurementModel) -> QuasiCompletenessReport:
    """Structural test for purity preservation of the a posteriori dynamics.

    c1: every unobserved channel vanishes (spectral norm at most 1e-12).
    c2: within each amplitude the effects agree entrywise, so a jump's
    post-state does not depend on the hidden label.
    """
    c1 = all(
        (L.size == 0 or np.linalg.norm(L, ord=2) <= tol.C1_TOL) for L in model.Ls
    )
    worst = 0.0
    for z in model.z_values:
        group = model.channels_at[z]
        ref = group[0].V
        for ch in group[1:]:
            worst = max(worst, float(np.max(np.abs(ch.V - ref))))
    return QuasiCompletenessReport(
        c1_holds=bool(c1),
        c2_holds=bool(worst <= tol.C2_TOL),
        max_deviation_c2=worst,
    )
