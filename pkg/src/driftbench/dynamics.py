"""Symplectic integration of Fourier-Taylor Hamiltonians and drift measures.

Two schemes: a symmetric second-order splitting when the Hamiltonian
separates cleanly by modes (the angle-average part drifts the angles, the
purely angle-dependent part kicks the actions), and an implicit midpoint
fallback for non-separable truncations.  Both are symplectic; energy along
the trajectory is monitored, never corrected.

Escape and crossing times are reported at sample resolution with a one-step
bracket and no interpolation.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .diophantine import ResonanceFrame, projections
from .series import (
    TWO_PI,
    FourierTaylorSeries,
    Gevrey,
    HamiltonianSystem,
    Regularity,
    split_by_modes,
)

SENTINEL = math.inf


def tau_m_value(m: int, regularity: Regularity) -> float:
    """Stability-time scale: exp(m^(1/alpha)) for Gevrey, m^k* for C^k."""
    if isinstance(regularity, Gevrey):
        return math.exp(m ** (1.0 / regularity.alpha))
    return float(m) ** regularity.k_star


@dataclass(frozen=True)
class TimeBudget:
    """Iteration count m with its regularity-dependent horizon tau_m."""

    m: int
    tau_m: float
    regularity: Regularity

    def __post_init__(self) -> None:
        expected = tau_m_value(self.m, self.regularity)
        if not math.isclose(self.tau_m, expected, rel_tol=1e-12):
            raise ValueError(
                f"tau_m={self.tau_m} inconsistent with m={self.m} and "
                f"{self.regularity} (expected {expected})"
            )

    @classmethod
    def for_m(cls, m: int, regularity: Regularity) -> "TimeBudget":
        return cls(m, tau_m_value(m, regularity), regularity)


@dataclass(frozen=True)
class IntegratorConfig:
    step: float = 1e-2
    scheme: str = "auto"            # auto | split | midpoint
    energy_tol: float = 1e-6
    sample_stride: int = 1
    midpoint_tol: float = 1e-13
    midpoint_max_iter: int = 50

    def __post_init__(self) -> None:
        if self.step <= 0:
            raise ValueError("step must be positive")
        if self.scheme not in ("auto", "split", "midpoint"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.sample_stride < 1:
            raise ValueError("sample_stride must be >= 1")

    def digest(self) -> str:
        key = (
            f"{self.step:.17g}|{self.scheme}|{self.energy_tol:.3g}|"
            f"{self.sample_stride}|{self.midpoint_tol:.3g}|{self.midpoint_max_iter}"
        )
        return hashlib.sha256(key.encode()).hexdigest()[:16]


@dataclass
class TrajectoryRecord:
    """Sampled trajectory with energy monitoring and provenance metadata."""

    times: np.ndarray
    thetas: np.ndarray            # (N, n), angles wrapped to [0, 1)
    actions: np.ndarray           # (N, n)
    energy: np.ndarray
    escaped: bool
    metadata: dict

    def __post_init__(self) -> None:
        diffs = np.diff(self.times)
        if len(diffs) and not (np.all(diffs > 0) or np.all(diffs < 0)):
            raise ValueError("sample times must be strictly monotone")

    @property
    def n(self) -> int:
        return self.thetas.shape[1]

    def energy_deviation(self) -> float:
        """Max |H(t) - H(0)| over the samples (absolute, not endpoint)."""
        return float(np.max(np.abs(self.energy - self.energy[0])))

    def index_at(self, t: float) -> int:
        idx = int(np.searchsorted(self.times, t))
        return min(idx, len(self.times) - 1)


class _FastEval:
    """Precompiled arrays for fast point evaluation of a series."""

    __slots__ = ("K", "L", "C", "center", "is_zero", "theta_only", "action_only")

    def __init__(self, s: FourierTaylorSeries) -> None:
        self.is_zero = s.is_zero
        items = list(s.items())
        n = s.domain.n
        self.K = np.array([k for (k, _), _ in items], dtype=float).reshape(-1, n)
        self.L = np.array([l for (_, l), _ in items], dtype=int).reshape(-1, n)
        self.C = np.array([c for _, c in items], dtype=complex)
        self.center = np.asarray(s.center)
        self.theta_only = bool(np.all(self.L == 0))
        self.action_only = bool(np.all(self.K == 0))

    def value(self, theta: np.ndarray, action: np.ndarray) -> float:
        if self.is_zero:
            return 0.0
        term = self.C.copy()
        if not self.action_only:
            term = term * np.exp(2j * math.pi * (self.K @ theta))
        if not self.theta_only:
            term = term * np.prod((action - self.center) ** self.L, axis=1)
        return float(np.sum(term).real)


class _Flow:
    """Right-hand-side data for one Hamiltonian series."""

    def __init__(self, H: FourierTaylorSeries) -> None:
        n = H.domain.n
        self.n = n
        self.H = _FastEval(H)
        self.dtheta = [_FastEval(H.partial_theta(j)) for j in range(n)]
        self.daction = [_FastEval(H.partial_action(j)) for j in range(n)]

    def grad_theta(self, theta: np.ndarray, action: np.ndarray) -> np.ndarray:
        return np.array([d.value(theta, action) for d in self.dtheta])

    def grad_action(self, theta: np.ndarray, action: np.ndarray) -> np.ndarray:
        return np.array([d.value(theta, action) for d in self.daction])


class _SplitFlow:
    """Strang splitting for H = A(I) + B(theta): drift-kick-drift.

    The stepping runs on plain Python floats: n and the mode counts are tiny
    here, where per-step numpy overhead would dominate the actual arithmetic.
    """

    def __init__(self, A: FourierTaylorSeries, B: FourierTaylorSeries) -> None:
        n = A.domain.n
        self.n = n
        self.center = list(A.center)
        # drift data: for each j, monomials (coef, exponents) of dA/dI_j
        self.gradA = []
        for j in range(n):
            dj = A.partial_action(j)
            self.gradA.append(
                [(c.real, l) for (_, l), c in dj.items()]
            )
        # kick data: one representative per +-k mode pair, c = a + i b
        pairs = []
        seen = set()
        for (k, _), c in B.items():
            if k in seen:
                continue
            seen.add(k)
            seen.add(tuple(-x for x in k))
            pairs.append((k, c.real, c.imag))
        self.kick_modes = pairs

    def _grad_A(self, action: list[float]) -> list[float]:
        diff = [a - c for a, c in zip(action, self.center)]
        out = []
        for monos in self.gradA:
            total = 0.0
            for coef, exps in monos:
                term = coef
                for d, e in zip(diff, exps):
                    if e:
                        term *= d ** e
                total += term
            out.append(total)
        return out

    def run_block(
        self, theta: list[float], action: list[float], dt: float, nsteps: int
    ) -> tuple[list[float], list[float]]:
        n = self.n
        half = 0.5 * dt
        modes = self.kick_modes
        for _ in range(nsteps):
            g = self._grad_A(action)
            for j in range(n):
                theta[j] = (theta[j] + half * g[j]) % 1.0
            for k, a, b in modes:
                phi = 0.0
                for j in range(n):
                    phi += k[j] * theta[j]
                phi *= TWO_PI
                w = 2.0 * (-a * math.sin(phi) - b * math.cos(phi)) * TWO_PI * dt
                for j in range(n):
                    if k[j]:
                        action[j] -= w * k[j]
            g = self._grad_A(action)
            for j in range(n):
                theta[j] = (theta[j] + half * g[j]) % 1.0
        return theta, action


class _MidpointFlow:
    """Implicit midpoint by fixed-point iteration; symplectic for any H."""

    def __init__(self, H: FourierTaylorSeries, tol: float, max_iter: int) -> None:
        self.flow = _Flow(H)
        self.tol = tol
        self.max_iter = max_iter

    def step(self, theta: np.ndarray, action: np.ndarray, dt: float):
        th_mid, ac_mid = theta.copy(), action.copy()
        for _ in range(self.max_iter):
            dth = self.flow.grad_action(th_mid, ac_mid)
            dac = -self.flow.grad_theta(th_mid, ac_mid)
            th_new = theta + 0.5 * dt * dth
            ac_new = action + 0.5 * dt * dac
            delta = max(
                float(np.max(np.abs(th_new - th_mid))),
                float(np.max(np.abs(ac_new - ac_mid))),
            )
            th_mid, ac_mid = th_new, ac_new
            if delta < self.tol:
                break
        else:
            raise RuntimeError("implicit midpoint failed to converge")
        return 2 * th_mid - theta, 2 * ac_mid - action


def _choose_scheme(H: FourierTaylorSeries, cfg: IntegratorConfig) -> str:
    avg, osc = split_by_modes(H)
    separable = osc.action_independent()
    if cfg.scheme == "split":
        if not separable:
            raise ValueError("split scheme requires an angle-only oscillating part")
        return "split"
    if cfg.scheme == "midpoint":
        return "midpoint"
    return "split" if separable else "midpoint"


def integrate(
    system: HamiltonianSystem,
    start: tuple[Sequence[float], Sequence[float]],
    t_max: float,
    cfg: IntegratorConfig | None = None,
    stop_when: Callable[[float, np.ndarray], bool] | None = None,
    seed: int | None = None,
) -> TrajectoryRecord:
    """Integrate from start=(theta0, I0) up to |t| = t_max.

    Negative ``t_max`` integrates backward (the symmetric schemes are their
    own inverses up to roundoff).  The trajectory halts early, flagged
    ``escaped``, if the action leaves the domain ball; ``stop_when(t, I)`` is
    evaluated at sample points for caller-defined early exits.
    """
    cfg = cfg or IntegratorConfig()
    if hasattr(system, "hamiltonian"):  # accept a systems.System bundle
        system = system.hamiltonian
    H = system.total()
    scheme = _choose_scheme(H, cfg)
    if scheme == "split":
        avg, osc = split_by_modes(H)
        stepper = _SplitFlow(avg, osc)
    else:
        stepper = _MidpointFlow(H, cfg.midpoint_tol, cfg.midpoint_max_iter)
    energy_eval = _FastEval(H)
    R = system.domain.R
    direction = 1.0 if t_max >= 0 else -1.0
    dt = direction * cfg.step
    n_steps = int(round(abs(t_max) / cfg.step))
    theta = np.asarray(start[0], dtype=float) % 1.0
    action = np.asarray(start[1], dtype=float).copy()
    times = [0.0]
    thetas = [theta % 1.0]
    actions = [action.copy()]
    energies = [energy_eval.value(theta, action)]
    escaped = False
    k = 0
    th_list, ac_list = list(map(float, theta)), list(map(float, action))
    while k < n_steps:
        block = min(cfg.sample_stride, n_steps - k)
        if scheme == "split":
            th_list, ac_list = stepper.run_block(th_list, ac_list, dt, block)
            theta = np.array(th_list)
            action = np.array(ac_list)
        else:
            for _ in range(block):
                theta, action = stepper.step(theta, action, dt)
            th_list, ac_list = list(map(float, theta)), list(map(float, action))
        k += block
        t = k * dt
        if not np.all(np.isfinite(action)) or not np.all(np.isfinite(theta)):
            raise FloatingPointError(f"non-finite state at t={t}")
        times.append(t)
        thetas.append(theta % 1.0)
        actions.append(action.copy())
        energies.append(energy_eval.value(theta, action))
        if np.max(np.abs(action)) > R:
            escaped = True
            break
        if stop_when is not None and stop_when(t, action):
            break
    meta = {
        "config_hash": cfg.digest(),
        "scheme": scheme,
        "seed": seed,
        "step": cfg.step,
    }
    rec = TrajectoryRecord(
        np.array(times), np.array(thetas), np.array(actions), np.array(energies),
        escaped, meta,
    )
    dev = rec.energy_deviation()
    scale = max(1.0, abs(energies[0]))
    meta["energy_deviation"] = dev
    meta["energy_ok"] = bool(dev <= cfg.energy_tol * scale)
    return rec


def escape_time(
    traj: TrajectoryRecord, center: Sequence[float], radius: float
) -> float:
    """First sample time with |I(t) - center|_inf >= radius, else +inf."""
    center = np.asarray(center, dtype=float)
    dist = np.max(np.abs(traj.actions - center), axis=1)
    if radius > 0 and dist[0] >= radius:
        raise ValueError("trajectory starts outside the ball")
    hits = np.nonzero(dist >= radius)[0]
    if len(hits) == 0:
        return SENTINEL
    return float(traj.times[hits[0]])


@dataclass(frozen=True)
class TransverseDrift:
    """Pi_perp-projected displacement along a trajectory."""

    max_drift: float
    per_sample: np.ndarray
    from_time: float


def transverse_drift(
    traj: TrajectoryRecord, frame: ResonanceFrame, from_time: float = 0.0
) -> TransverseDrift:
    """Sup-norm of Pi_j^perp (I(t) - I(from_time)) per sample, and its max."""
    if from_time < traj.times[0] or from_time > traj.times[-1]:
        raise ValueError("from_time outside the trajectory")
    _, Pperp = projections(frame)
    i0 = traj.index_at(from_time)
    disp = traj.actions[i0:] - traj.actions[i0]
    proj = disp @ Pperp.T
    per_sample = np.max(np.abs(proj), axis=1)
    return TransverseDrift(float(np.max(per_sample)), per_sample, from_time)


@dataclass(frozen=True)
class DriftTime:
    """First-crossing report at sample resolution with a one-step bracket."""

    time: float                       # +inf sentinel when capped
    bracket: tuple[float, float] | None
    capped: bool
    trajectory: TrajectoryRecord

    @property
    def crossed(self) -> bool:
        return math.isfinite(self.time)


def drift_time(
    system: HamiltonianSystem,
    start: tuple[Sequence[float], Sequence[float]],
    threshold: float,
    t_cap: float,
    cfg: IntegratorConfig | None = None,
    stop_when: Callable[[float, np.ndarray], bool] | None = None,
) -> DriftTime:
    """First time |I(t) - I(0)| >= threshold (sup norm), integrating up to t_cap."""
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    if hasattr(system, "hamiltonian"):
        system = system.hamiltonian
    I0 = np.asarray(start[1], dtype=float)

    def crossed(t: float, action: np.ndarray) -> bool:
        if np.max(np.abs(action - I0)) >= threshold:
            return True
        return stop_when(t, action) if stop_when is not None else False

    traj = integrate(system, start, t_cap, cfg, stop_when=crossed)
    dist = np.max(np.abs(traj.actions - I0), axis=1)
    hits = np.nonzero(dist >= threshold)[0]
    if len(hits) == 0:
        return DriftTime(SENTINEL, None, True, traj)
    i = int(hits[0])
    t_prev = float(traj.times[i - 1]) if i > 0 else float(traj.times[0])
    return DriftTime(float(traj.times[i]), (t_prev, float(traj.times[i])), False, traj)
