"""Truncated Fourier-Taylor algebra on the phase space T^n x B_R.

A series is a finite sum

    s(theta, I) = sum_{(k,l)} c_{k,l} * (I - center)^l * exp(2*pi*i * k.theta)

with Fourier indices k in Z^n bounded by ``|k|_inf <= k_max`` and Taylor
exponents l in N^n bounded by ``|l|_1 <= d_max``.  Angles live on
T^n = R^n / Z^n (so the factor 2*pi sits inside the exponential and all
period arithmetic stays integer-exact).  Coefficients are complex with the
reality constraint c_{-k,l} = conj(c_{k,l}), so evaluation is real.

Series are immutable after construction and every operation is pure.
Operations that can drop coefficient mass (products, brackets, explicit
truncation) record the dropped mass in a :class:`TruncationLoss` attached to
the result, so downstream consumers (Lie transforms, property tests) can
bound the error they inherit.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Iterator, Mapping, Sequence

import numpy as np

TWO_PI = 2.0 * math.pi

# A multi-index is a pair (k, l): Fourier index and Taylor exponent.
MultiIndex = tuple[tuple[int, ...], tuple[int, ...]]


class DomainError(ValueError):
    """Point outside the series' action ball, or incompatible domains."""


class CorruptSeriesError(ValueError):
    """Reality invariant violated beyond tolerance."""


@dataclass(frozen=True)
class Domain:
    """Phase space T^n x B_R; the action ball uses the supremum norm."""

    n: int
    R: float

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError(f"dimension must be >= 1, got {self.n}")
        if not self.R > 0:
            raise ValueError(f"action radius must be > 0, got {self.R}")

    def contains_action(self, action: Sequence[float], center: Sequence[float]) -> bool:
        return max(abs(a - c) for a, c in zip(action, center)) <= self.R * (1 + 1e-12)


@dataclass(frozen=True)
class Gevrey:
    """Gevrey regularity tag (alpha, L); alpha = 1 is the analytic case."""

    alpha: float
    L: float

    def __post_init__(self) -> None:
        if self.alpha < 1:
            raise ValueError(f"Gevrey alpha must be >= 1, got {self.alpha}")
        if not self.L > 0:
            raise ValueError(f"Gevrey L must be > 0, got {self.L}")


@dataclass(frozen=True)
class FiniteDiff:
    """C^k regularity tag with auxiliary integer k_star, k >= k_star*n + 1."""

    k: int
    k_star: int

    def __post_init__(self) -> None:
        if self.k_star < 1:
            raise ValueError(f"k_star must be >= 1, got {self.k_star}")

    def check_dimension(self, n: int) -> None:
        if self.k < self.k_star * n + 1:
            raise ValueError(
                f"C^k regularity needs k >= k_star*n + 1: k={self.k}, "
                f"k_star={self.k_star}, n={n}"
            )


Regularity = Gevrey | FiniteDiff


@dataclass(frozen=True)
class TruncationLoss:
    """Upper bounds on coefficient mass lost to truncation.

    ``raw`` bounds the l1 coefficient norm of (true - stored).  ``kmass`` and
    ``lmass`` bound sum(|c| * |k|_1) and sum(|c| * |l|_1) of the error; they
    feed the first-order propagation through brackets (differentiating an
    error mode amplifies it by 2*pi*|k|_1 or |l|_1).  Propagated moments are
    first-order estimates, exact for the directly dropped modes.
    """

    raw: float = 0.0
    kmass: float = 0.0
    lmass: float = 0.0

    def __add__(self, other: "TruncationLoss") -> "TruncationLoss":
        return TruncationLoss(
            self.raw + other.raw, self.kmass + other.kmass, self.lmass + other.lmass
        )

    def scaled(self, factor: float) -> "TruncationLoss":
        a = abs(factor)
        return TruncationLoss(a * self.raw, a * self.kmass, a * self.lmass)

    @property
    def is_zero(self) -> bool:
        return self.raw == 0.0

    @staticmethod
    def zero() -> "TruncationLoss":
        return TruncationLoss()


def _as_tuple(vec: Sequence[float]) -> tuple[float, ...]:
    return tuple(float(x) for x in vec)


class FourierTaylorSeries:
    """Immutable sparse Fourier-Taylor series.

    Coefficients map (k, l) -> complex, absent means zero.  The reality
    invariant c_{-k,l} = conj(c_{k,l}) is validated on public construction
    and preserved by all operations.
    """

    __slots__ = ("domain", "center", "k_max", "d_max", "_coeffs", "trunc_loss")

    def __init__(
        self,
        domain: Domain,
        coeffs: Mapping[MultiIndex, complex],
        k_max: int,
        d_max: int,
        center: Sequence[float] | None = None,
        *,
        trunc_loss: TruncationLoss | None = None,
        _validate: bool = True,
    ) -> None:
        self.domain = domain
        self.center = _as_tuple(center) if center is not None else (0.0,) * domain.n
        if len(self.center) != domain.n:
            raise ValueError("center dimension mismatch")
        if k_max < 0 or d_max < 0:
            raise ValueError("truncation orders must be nonnegative")
        self.k_max = int(k_max)
        self.d_max = int(d_max)
        clean = {}
        for (k, l), c in coeffs.items():
            c = complex(c)
            if c == 0:
                continue
            k = tuple(int(x) for x in k)
            l = tuple(int(x) for x in l)
            if len(k) != domain.n or len(l) != domain.n:
                raise ValueError(f"index dimension mismatch at {(k, l)}")
            if any(x < 0 for x in l):
                raise ValueError(f"negative Taylor exponent at {(k, l)}")
            if max((abs(x) for x in k), default=0) > self.k_max:
                raise ValueError(f"Fourier index {k} exceeds k_max={self.k_max}")
            if sum(l) > self.d_max:
                raise ValueError(f"Taylor exponent {l} exceeds d_max={self.d_max}")
            clean[(k, l)] = c
        self._coeffs = clean
        self.trunc_loss = trunc_loss if trunc_loss is not None else TruncationLoss.zero()
        if _validate:
            self._validate_reality()

    # -- construction helpers -------------------------------------------------

    @classmethod
    def zero(
        cls, domain: Domain, k_max: int = 0, d_max: int = 0,
        center: Sequence[float] | None = None,
    ) -> "FourierTaylorSeries":
        return cls(domain, {}, k_max, d_max, center, _validate=False)

    @classmethod
    def constant(
        cls, domain: Domain, value: float, k_max: int = 0, d_max: int = 0,
        center: Sequence[float] | None = None,
    ) -> "FourierTaylorSeries":
        zero_idx = ((0,) * domain.n, (0,) * domain.n)
        return cls(domain, {zero_idx: complex(value)}, k_max, d_max, center,
                   _validate=False)

    @classmethod
    def monomial(
        cls, domain: Domain, exponents: Sequence[int], coeff: float = 1.0,
        k_max: int = 0, d_max: int | None = None,
        center: Sequence[float] | None = None,
    ) -> "FourierTaylorSeries":
        """Pure action monomial coeff * (I - center)^exponents."""
        l = tuple(int(e) for e in exponents)
        if d_max is None:
            d_max = sum(l)
        idx = ((0,) * domain.n, l)
        return cls(domain, {idx: complex(coeff)}, k_max, d_max, center,
                   _validate=False)

    @classmethod
    def action_coordinate(
        cls, domain: Domain, j: int, k_max: int = 0, d_max: int = 1,
        center: Sequence[float] | None = None,
    ) -> "FourierTaylorSeries":
        """The coordinate function (I - center)_j."""
        l = tuple(1 if i == j else 0 for i in range(domain.n))
        return cls.monomial(domain, l, 1.0, k_max, d_max, center)

    @classmethod
    def linear(
        cls, domain: Domain, omega: Sequence[float], k_max: int = 0, d_max: int = 1,
        center: Sequence[float] | None = None,
    ) -> "FourierTaylorSeries":
        """Linear integrable Hamiltonian omega . (I - center)."""
        coeffs: dict[MultiIndex, complex] = {}
        zero_k = (0,) * domain.n
        for j, w in enumerate(omega):
            if w == 0:
                continue
            l = tuple(1 if i == j else 0 for i in range(domain.n))
            coeffs[(zero_k, l)] = complex(w)
        return cls(domain, coeffs, k_max, max(d_max, 1), center, _validate=False)

    @classmethod
    def cosine(
        cls, domain: Domain, k: Sequence[int], amplitude: float = 1.0,
        k_max: int | None = None, d_max: int = 0,
        center: Sequence[float] | None = None,
    ) -> "FourierTaylorSeries":
        """amplitude * cos(2*pi * k.theta)."""
        k = tuple(int(x) for x in k)
        if k_max is None:
            k_max = max((abs(x) for x in k), default=0)
        neg = tuple(-x for x in k)
        zero_l = (0,) * domain.n
        half = 0.5 * amplitude
        coeffs = {(k, zero_l): complex(half)}
        if neg != k:
            coeffs[(neg, zero_l)] = complex(half)
        else:
            coeffs[(k, zero_l)] = complex(amplitude)
        return cls(domain, coeffs, k_max, d_max, center, _validate=False)

    @classmethod
    def sine(
        cls, domain: Domain, k: Sequence[int], amplitude: float = 1.0,
        k_max: int | None = None, d_max: int = 0,
        center: Sequence[float] | None = None,
    ) -> "FourierTaylorSeries":
        """amplitude * sin(2*pi * k.theta)."""
        k = tuple(int(x) for x in k)
        if all(x == 0 for x in k):
            if k_max is None:
                k_max = 0
            return cls.zero(domain, k_max, d_max, center)
        if k_max is None:
            k_max = max(abs(x) for x in k)
        neg = tuple(-x for x in k)
        zero_l = (0,) * domain.n
        coeffs = {
            (k, zero_l): complex(0, -0.5 * amplitude),
            (neg, zero_l): complex(0, 0.5 * amplitude),
        }
        return cls(domain, coeffs, k_max, d_max, center, _validate=False)

    # -- basic protocol --------------------------------------------------------

    @property
    def coeffs(self) -> Mapping[MultiIndex, complex]:
        return dict(self._coeffs)

    def __len__(self) -> int:
        return len(self._coeffs)

    def items(self) -> Iterator[tuple[MultiIndex, complex]]:
        return iter(self._coeffs.items())

    def coefficient(self, k: Sequence[int], l: Sequence[int]) -> complex:
        return self._coeffs.get((tuple(k), tuple(l)), 0j)

    @property
    def is_zero(self) -> bool:
        return not self._coeffs

    def coefficient_norm(self) -> float:
        """l1 norm of the coefficient vector; dominates the C0 sup norm."""
        return sum(abs(c) for c in self._coeffs.values())

    def k_weighted_mass(self) -> float:
        return sum(abs(c) * sum(abs(x) for x in k) for (k, _), c in self._coeffs.items())

    def l_weighted_mass(self) -> float:
        return sum(abs(c) * sum(l) for (_, l), c in self._coeffs.items())

    def angle_independent(self) -> bool:
        return all(all(x == 0 for x in k) for (k, _) in self._coeffs)

    def action_independent(self) -> bool:
        return all(all(x == 0 for x in l) for (_, l) in self._coeffs)

    def __repr__(self) -> str:
        return (
            f"FourierTaylorSeries(n={self.domain.n}, R={self.domain.R}, "
            f"k_max={self.k_max}, d_max={self.d_max}, terms={len(self._coeffs)})"
        )

    def _validate_reality(self, tol: float = 1e-12) -> None:
        scale = max(1.0, max((abs(c) for c in self._coeffs.values()), default=0.0))
        for (k, l), c in self._coeffs.items():
            mirror = self._coeffs.get((tuple(-x for x in k), l), 0j)
            if abs(mirror - c.conjugate()) > tol * scale:
                raise CorruptSeriesError(
                    f"reality violated at (k={k}, l={l}): coeff {c}, mirror {mirror}"
                )

    def _same_geometry(self, other: "FourierTaylorSeries") -> None:
        if self.domain != other.domain:
            raise DomainError(f"domain mismatch: {self.domain} vs {other.domain}")
        if self.center != other.center:
            raise DomainError(f"center mismatch: {self.center} vs {other.center}")

    # -- evaluation -------------------------------------------------------------

    def evaluate(self, theta: Sequence[float], action: Sequence[float]) -> float:
        """Evaluate at a single phase-space point; returns a real value."""
        theta = _as_tuple(theta)
        action = _as_tuple(action)
        if len(theta) != self.domain.n or len(action) != self.domain.n:
            raise DomainError("point dimension mismatch")
        if not self.domain.contains_action(action, self.center):
            raise DomainError(
                f"action {action} outside ball of radius {self.domain.R} "
                f"around {self.center}"
            )
        return self._evaluate_unchecked(theta, action)

    def _evaluate_unchecked(self, theta: Sequence[float], action: Sequence[float]) -> float:
        total = 0j
        diff = [a - c for a, c in zip(action, self.center)]
        for (k, l), c in self._coeffs.items():
            term = c
            for lj, dj in zip(l, diff):
                if lj:
                    term *= dj ** lj
            phase = sum(kj * tj for kj, tj in zip(k, theta))
            if phase:
                term *= cmath.exp(2j * math.pi * phase)
            total += term
        scale = max(1.0, abs(total))
        if abs(total.imag) > 1e-12 * scale:
            raise CorruptSeriesError(
                f"imaginary residue {total.imag} exceeds tolerance; series corrupt"
            )
        return total.real

    def evaluate_grid(
        self, theta_points: np.ndarray, action_points: np.ndarray
    ) -> np.ndarray:
        """Evaluate on the tensor grid theta_points x action_points.

        ``theta_points`` has shape (P, n), ``action_points`` shape (Q, n);
        the result has shape (P, Q).  Used by grid-sup norm computations.
        """
        theta_points = np.atleast_2d(np.asarray(theta_points, dtype=float))
        action_points = np.atleast_2d(np.asarray(action_points, dtype=float))
        if not self._coeffs:
            return np.zeros((theta_points.shape[0], action_points.shape[0]))
        K = np.array([k for (k, _) in self._coeffs], dtype=float)
        L = np.array([l for (_, l) in self._coeffs], dtype=int)
        C = np.array(list(self._coeffs.values()), dtype=complex)
        E = np.exp(2j * math.pi * (K @ theta_points.T))  # (M, P)
        diff = action_points - np.asarray(self.center)    # (Q, n)
        with np.errstate(invalid="ignore"):
            B = np.prod(diff[None, :, :] ** L[:, None, :], axis=2)  # (M, Q)
        vals = (C[:, None] * E).T @ B  # (P, Q) via BLAS
        return vals.real

    # -- arithmetic -------------------------------------------------------------

    def __neg__(self) -> "FourierTaylorSeries":
        return FourierTaylorSeries(
            self.domain, {idx: -c for idx, c in self._coeffs.items()},
            self.k_max, self.d_max, self.center,
            trunc_loss=self.trunc_loss, _validate=False,
        )

    def scaled(self, factor: float) -> "FourierTaylorSeries":
        if factor == 0:
            return FourierTaylorSeries.zero(self.domain, self.k_max, self.d_max, self.center)
        return FourierTaylorSeries(
            self.domain, {idx: factor * c for idx, c in self._coeffs.items()},
            self.k_max, self.d_max, self.center,
            trunc_loss=self.trunc_loss.scaled(factor), _validate=False,
        )

    def __add__(self, other: "FourierTaylorSeries") -> "FourierTaylorSeries":
        self._same_geometry(other)
        merged = dict(self._coeffs)
        for idx, c in other._coeffs.items():
            merged[idx] = merged.get(idx, 0j) + c
        return FourierTaylorSeries(
            self.domain, merged,
            max(self.k_max, other.k_max), max(self.d_max, other.d_max), self.center,
            trunc_loss=self.trunc_loss + other.trunc_loss, _validate=False,
        )

    def __sub__(self, other: "FourierTaylorSeries") -> "FourierTaylorSeries":
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return self.scaled(float(other))
        if isinstance(other, FourierTaylorSeries):
            return self.product(other)
        return NotImplemented

    __rmul__ = __mul__

    def product(
        self, other: "FourierTaylorSeries",
        k_max: int | None = None, d_max: int | None = None,
    ) -> "FourierTaylorSeries":
        """Series product, truncated back to the (max of the) operand bounds."""
        self._same_geometry(other)
        K = k_max if k_max is not None else max(self.k_max, other.k_max)
        D = d_max if d_max is not None else max(self.d_max, other.d_max)
        acc: dict[MultiIndex, complex] = {}
        n = self.domain.n
        for (k1, l1), c1 in self._coeffs.items():
            for (k2, l2), c2 in other._coeffs.items():
                k = tuple(k1[i] + k2[i] for i in range(n))
                l = tuple(l1[i] + l2[i] for i in range(n))
                idx = (k, l)
                acc[idx] = acc.get(idx, 0j) + c1 * c2
        kept, dropped = _partition(acc, K, D)
        cross = (
            self.trunc_loss.raw * other.coefficient_norm()
            + self.coefficient_norm() * other.trunc_loss.raw
            + self.trunc_loss.raw * other.trunc_loss.raw
        )
        loss = _propagated_loss(cross, dropped, n, K, D)
        return FourierTaylorSeries(
            self.domain, kept, K, D, self.center, trunc_loss=loss, _validate=False,
        )

    # -- calculus ---------------------------------------------------------------

    def partial_theta(self, j: int) -> "FourierTaylorSeries":
        """d/d theta_j: multiplies c_{k,l} by 2*pi*i*k_j."""
        out = {}
        for (k, l), c in self._coeffs.items():
            if k[j]:
                out[(k, l)] = c * (2j * math.pi * k[j])
        return FourierTaylorSeries(
            self.domain, out, self.k_max, self.d_max, self.center,
            trunc_loss=TruncationLoss(
                TWO_PI * self.trunc_loss.kmass,
                TWO_PI * self.trunc_loss.kmass * self.domain.n * self.k_max,
                TWO_PI * self.trunc_loss.kmass * self.d_max,
            ),
            _validate=False,
        )

    def partial_action(self, j: int) -> "FourierTaylorSeries":
        """d/d I_j: shifts l by -e_j and multiplies by l_j; drops d_max by one."""
        out = {}
        for (k, l), c in self._coeffs.items():
            if l[j]:
                nl = tuple(x - 1 if i == j else x for i, x in enumerate(l))
                out[(k, nl)] = c * l[j]
        return FourierTaylorSeries(
            self.domain, out, self.k_max, max(self.d_max - 1, 0), self.center,
            trunc_loss=TruncationLoss(
                self.trunc_loss.lmass,
                self.trunc_loss.lmass * self.domain.n * self.k_max,
                self.trunc_loss.lmass * max(self.d_max - 1, 0),
            ),
            _validate=False,
        )

    def partial_derivative(self, coord: str, j: int) -> "FourierTaylorSeries":
        """Derivative along one coordinate: coord is 'theta' or 'action'."""
        if coord == "theta":
            return self.partial_theta(j)
        if coord == "action":
            return self.partial_action(j)
        raise ValueError(f"coord must be 'theta' or 'action', got {coord!r}")

    def derivative_multi(
        self, l_theta: Sequence[int], l_action: Sequence[int]
    ) -> "FourierTaylorSeries":
        """Mixed partial d^{l_theta}_theta d^{l_action}_I applied in one pass."""
        out = {}
        n = self.domain.n
        for (k, l), c in self._coeffs.items():
            term = c
            ok = True
            nl = list(l)
            for j in range(n):
                if l_theta[j]:
                    if k[j] == 0:
                        ok = False
                        break
                    term *= (2j * math.pi * k[j]) ** l_theta[j]
                if l_action[j]:
                    if l[j] < l_action[j]:
                        ok = False
                        break
                    term *= math.perm(l[j], l_action[j])
                    nl[j] = l[j] - l_action[j]
            if ok and term != 0:
                idx = (k, tuple(nl))
                out[idx] = out.get(idx, 0j) + term
        return FourierTaylorSeries(
            self.domain, out, self.k_max, max(self.d_max - sum(l_action), 0),
            self.center, _validate=False,
        )

    # -- truncation ---------------------------------------------------------------

    def truncate(self, k_max: int, d_max: int) -> tuple["FourierTaylorSeries", TruncationLoss]:
        """Drop indices outside (k_max, d_max); returns (series, dropped-mass report)."""
        if k_max > self.k_max or d_max > self.d_max:
            raise ValueError("truncate cannot enlarge the truncation orders")
        kept, dropped = _partition(self._coeffs, k_max, d_max)
        out = FourierTaylorSeries(
            self.domain, kept, k_max, d_max, self.center,
            trunc_loss=self.trunc_loss + dropped, _validate=False,
        )
        return out, dropped

    def with_bounds(self, k_max: int, d_max: int) -> "FourierTaylorSeries":
        """Re-declare (larger) truncation bounds without touching coefficients."""
        return FourierTaylorSeries(
            self.domain, self._coeffs, max(k_max, self.k_max), max(d_max, self.d_max),
            self.center, trunc_loss=self.trunc_loss, _validate=False,
        )


def _partition(
    acc: Mapping[MultiIndex, complex], k_max: int, d_max: int
) -> tuple[dict[MultiIndex, complex], TruncationLoss]:
    kept: dict[MultiIndex, complex] = {}
    raw = kmass = lmass = 0.0
    for (k, l), c in acc.items():
        if c == 0:
            continue
        if max((abs(x) for x in k), default=0) <= k_max and sum(l) <= d_max:
            kept[(k, l)] = c
        else:
            a = abs(c)
            raw += a
            kmass += a * sum(abs(x) for x in k)
            lmass += a * sum(l)
    return kept, TruncationLoss(raw, kmass, lmass)


def _propagated_loss(
    cross_raw: float, dropped: TruncationLoss, n: int, k_max: int, d_max: int
) -> TruncationLoss:
    return TruncationLoss(
        cross_raw + dropped.raw,
        cross_raw * n * k_max + dropped.kmass,
        cross_raw * d_max + dropped.lmass,
    )


def poisson_bracket(
    F: FourierTaylorSeries, G: FourierTaylorSeries,
    k_max: int | None = None, d_max: int | None = None,
) -> FourierTaylorSeries:
    """{F, G} = sum_j dF/dtheta_j dG/dI_j - dF/dI_j dG/dtheta_j.

    The result is truncated back to the operand bounds (or explicit ones) and
    carries a truncation-loss certificate covering both its own drops and the
    first-order effect of losses already attached to F and G.
    """
    F._same_geometry(G)
    n = F.domain.n
    K = k_max if k_max is not None else max(F.k_max, G.k_max)
    D = d_max if d_max is not None else max(F.d_max, G.d_max)
    acc: dict[MultiIndex, complex] = {}
    for (k1, l1), c1 in F._coeffs.items():
        for (k2, l2), c2 in G._coeffs.items():
            base = c1 * c2
            for j in range(n):
                w = k1[j] * l2[j] - l1[j] * k2[j]
                if w == 0:
                    continue
                k = tuple(k1[i] + k2[i] for i in range(n))
                l = tuple(
                    l1[i] + l2[i] - (1 if i == j else 0) for i in range(n)
                )
                idx = (k, l)
                acc[idx] = acc.get(idx, 0j) + base * (2j * math.pi * w)
    kept, dropped = _partition(acc, K, D)
    lf, lg = F.trunc_loss, G.trunc_loss
    cross = TWO_PI * (
        lf.kmass * G.l_weighted_mass() + lf.lmass * G.k_weighted_mass()
        + F.k_weighted_mass() * lg.lmass + F.l_weighted_mass() * lg.kmass
        + lf.kmass * lg.lmass + lf.lmass * lg.kmass
    )
    loss = _propagated_loss(cross, dropped, n, K, D)
    return FourierTaylorSeries(
        F.domain, kept, K, D, F.center, trunc_loss=loss, _validate=False,
    )


def recenter_scale(
    s: FourierTaylorSeries, new_center: Sequence[float], mu: float,
    new_domain: Domain | None = None,
) -> FourierTaylorSeries:
    """Substitute I = new_center + mu * J into the Taylor part.

    Returns the series in the variable J (center 0).  This realizes the
    conformal translation-and-rescale map on the action variables; it is an
    exact polynomial identity (total Taylor degree never grows).
    """
    n = s.domain.n
    new_center = _as_tuple(new_center)
    shift = [nc - c for nc, c in zip(new_center, s.center)]
    domain = new_domain if new_domain is not None else s.domain
    acc: dict[MultiIndex, complex] = {}
    for (k, l), c in s._coeffs.items():
        # expand prod_j (shift_j + mu*J_j)^{l_j}
        expansions = []
        for j in range(n):
            terms = [
                (q, math.comb(l[j], q) * shift[j] ** (l[j] - q) * mu ** q)
                for q in range(l[j] + 1)
            ]
            expansions.append(terms)
        stack = [((), 1.0)]
        for terms in expansions:
            stack = [
                (exps + (q,), w * wq) for exps, w in stack for q, wq in terms if wq != 0
            ]
        for exps, w in stack:
            idx = (k, exps)
            acc[idx] = acc.get(idx, 0j) + c * w
    return FourierTaylorSeries(
        domain, acc, s.k_max, s.d_max, (0.0,) * n,
        trunc_loss=s.trunc_loss, _validate=False,
    )


def compose_near_identity(
    f: FourierTaylorSeries,
    theta_disp: Sequence[FourierTaylorSeries] | None,
    action_disp: Sequence[FourierTaylorSeries] | None,
    exp_order: int = 4,
    k_max: int | None = None,
    d_max: int | None = None,
) -> FourierTaylorSeries:
    """f composed with Phi(theta, I) = (theta + u(theta,I), I + v(theta,I)).

    The angle substitution expands exp(2*pi*i*k.u) as a truncated exponential
    up to ``exp_order``; the action substitution is a binomial expansion.
    Truncation losses of the power series products are propagated into the
    result.  Displacements must share f's geometry.
    """
    n = f.domain.n
    K = k_max if k_max is not None else f.k_max
    D = d_max if d_max is not None else f.d_max
    zero = FourierTaylorSeries.zero(f.domain, K, D, f.center)
    us = list(theta_disp) if theta_disp is not None else [zero] * n
    vs = list(action_disp) if action_disp is not None else [zero] * n
    if len(us) != n or len(vs) != n:
        raise ValueError("displacement tuples must have one series per coordinate")
    # the map must send its domain into f's ball: a displacement whose C0
    # bound reaches the ball radius certainly escapes somewhere
    for v in vs:
        if v.coefficient_norm() >= f.domain.R:
            raise DomainError(
                "action displacement can leave the ball: "
                f"C0 bound {v.coefficient_norm()} >= R = {f.domain.R}"
            )
    result = FourierTaylorSeries.zero(f.domain, K, D, f.center)
    exp_cache: dict[tuple[int, ...], FourierTaylorSeries] = {}
    pow_cache: dict[tuple[int, int], FourierTaylorSeries] = {}

    def v_power(j: int, q: int) -> FourierTaylorSeries:
        if q == 0:
            return FourierTaylorSeries.constant(f.domain, 1.0, K, D, f.center)
        key = (j, q)
        if key not in pow_cache:
            pow_cache[key] = v_power(j, q - 1).product(vs[j], k_max=K, d_max=D)
        return pow_cache[key]

    for (k, l), c in f._coeffs.items():
        if k not in exp_cache:
            ku = FourierTaylorSeries.zero(f.domain, K, D, f.center)
            for j in range(n):
                if k[j]:
                    ku = ku + us[j].scaled(float(k[j]))
            expk = FourierTaylorSeries.constant(f.domain, 1.0, K, D, f.center)
            if not ku.is_zero:
                # exp(2*pi*i*k.u) = sum_p x^p / p! with x = 2*pi*i * k.u
                x = FourierTaylorSeries(
                    f.domain,
                    {idx: cc * (2j * math.pi) for idx, cc in ku._coeffs.items()},
                    K, D, f.center, trunc_loss=ku.trunc_loss.scaled(TWO_PI),
                    _validate=False,
                )
                xp = FourierTaylorSeries.constant(f.domain, 1.0, K, D, f.center)
                for p in range(1, exp_order + 1):
                    xp = xp.product(x, k_max=K, d_max=D)
                    expk = expk + xp.scaled(1.0 / math.factorial(p))
            exp_cache[k] = expk
        term = exp_cache[k]
        # base Fourier factor e^{2 pi i k.theta} at the original k
        base = FourierTaylorSeries(
            f.domain, {(k, (0,) * n): c}, max(K, max((abs(x) for x in k), default=0)),
            D, f.center, _validate=False,
        )
        piece = base.product(term, k_max=K, d_max=D)
        for j in range(n):
            if l[j] == 0:
                continue
            coord = FourierTaylorSeries.action_coordinate(f.domain, j, K, D, f.center)
            factor = FourierTaylorSeries.zero(f.domain, K, D, f.center)
            for q in range(l[j] + 1):
                binom = float(math.comb(l[j], q))
                part = v_power(j, q)
                for _ in range(l[j] - q):
                    part = part.product(coord, k_max=K, d_max=D)
                factor = factor + part.scaled(binom)
            piece = piece.product(factor, k_max=K, d_max=D)
        result = result + piece
    return result


# -- file format ------------------------------------------------------------------

FORMAT_VERSION = "ft-series 1"


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def regularity_tag(reg: Regularity | None) -> str:
    if reg is None:
        return "none"
    if isinstance(reg, Gevrey):
        return f"gevrey {_fmt(reg.alpha)} {_fmt(reg.L)}"
    return f"ck {reg.k} {reg.k_star}"


def parse_regularity(tag: str) -> Regularity | None:
    parts = tag.split()
    if parts[0] == "none":
        return None
    if parts[0] == "gevrey":
        return Gevrey(float(parts[1]), float(parts[2]))
    if parts[0] == "ck":
        return FiniteDiff(int(parts[1]), int(parts[2]))
    raise ValueError(f"unknown regularity tag {tag!r}")


def save_series(
    path, s: FourierTaylorSeries, regularity: Regularity | None = None
) -> None:
    """Write the structured text format; floats carry 17 significant digits."""
    lines = [FORMAT_VERSION]
    lines.append(f"n {s.domain.n}")
    lines.append(f"R {_fmt(s.domain.R)}")
    lines.append("center " + " ".join(_fmt(c) for c in s.center))
    lines.append(f"k_max {s.k_max}")
    lines.append(f"d_max {s.d_max}")
    lines.append(f"regularity {regularity_tag(regularity)}")
    items = sorted(s._coeffs.items())
    lines.append(f"coeffs {len(items)}")
    for (k, l), c in items:
        lines.append(
            " ".join(str(x) for x in k) + "  " + " ".join(str(x) for x in l)
            + "  " + _fmt(c.real) + " " + _fmt(c.imag)
        )
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_series(path) -> tuple[FourierTaylorSeries, Regularity | None]:
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if lines[0] != FORMAT_VERSION:
        raise ValueError(f"unrecognized series file header {lines[0]!r}")
    header = {}
    i = 1
    while not lines[i].startswith("coeffs "):
        key, _, rest = lines[i].partition(" ")
        header[key] = rest
        i += 1
    n = int(header["n"])
    domain = Domain(n, float(header["R"]))
    center = tuple(float(x) for x in header["center"].split())
    k_max = int(header["k_max"])
    d_max = int(header["d_max"])
    reg = parse_regularity(header["regularity"])
    count = int(lines[i].split()[1])
    coeffs: dict[MultiIndex, complex] = {}
    for line in lines[i + 1 : i + 1 + count]:
        parts = line.split()
        k = tuple(int(x) for x in parts[:n])
        l = tuple(int(x) for x in parts[n : 2 * n])
        re, im = float(parts[2 * n]), float(parts[2 * n + 1])
        coeffs[(k, l)] = complex(re, im)
    return FourierTaylorSeries(domain, coeffs, k_max, d_max, center), reg


# -- Hamiltonian bundle ------------------------------------------------------------


@dataclass(frozen=True)
class HamiltonianSystem:
    """Near-integrable Hamiltonian H = h(I) + f(theta, I) with a regularity tag.

    ``integrable`` must be angle-independent; ``epsilon`` records the
    perturbation scale (the bound on |f|, not a multiplier: f is stored
    already scaled).
    """

    integrable: FourierTaylorSeries
    perturbation: FourierTaylorSeries
    epsilon: float
    regularity: Regularity

    def __post_init__(self) -> None:
        if not self.integrable.angle_independent():
            raise ValueError("integrable part must be angle-independent")
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")
        if isinstance(self.regularity, FiniteDiff):
            self.regularity.check_dimension(self.integrable.domain.n)

    @property
    def domain(self) -> Domain:
        return self.integrable.domain

    def total(self) -> FourierTaylorSeries:
        return self.integrable + self.perturbation


def split_by_modes(
    H: FourierTaylorSeries,
) -> tuple[FourierTaylorSeries, FourierTaylorSeries]:
    """Split a series into its angle-average (k = 0) and oscillating parts."""
    n = H.domain.n
    zero_k = (0,) * n
    avg = {idx: c for idx, c in H._coeffs.items() if idx[0] == zero_k}
    osc = {idx: c for idx, c in H._coeffs.items() if idx[0] != zero_k}
    mk = lambda d: FourierTaylorSeries(
        H.domain, d, H.k_max, H.d_max, H.center, _validate=False
    )
    return mk(avg), mk(osc)
