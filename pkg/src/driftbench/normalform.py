"""Constructive averaging along periodic frequencies.

For a T-periodic frequency the time average along the linear flow and the
generating-function integral are realized mode-wise, exactly: averaging
keeps the Fourier modes with k.omega = 0, and the homological equation
{chi, l_omega} = f - [f] divides each remaining mode by 2*pi*i*(k.omega).
Divisors are never small here: k.omega is a nonzero multiple of 1/T.  This
replaces quadrature with exact algebra, so the core identities can be tested
coefficient-exactly.

Transformations are truncated Lie-series exponentials of the generators; the
multi-frequency normal form composes single-frequency averagings, rewriting
the linear part between stages.  Norm bookkeeping is measured, not derived:
remainder norms, displacement sups, and smallness margins are recorded in
each result.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .diophantine import PeriodicVector, ResonanceFrame, projections
from .dynamics import tau_m_value
from .norms import GridSpec
from .series import (
    Domain,
    DomainError,
    FourierTaylorSeries,
    HamiltonianSystem,
    poisson_bracket,
    recenter_scale,
)


class AveragingDivergenceError(RuntimeError):
    """Remainder norm grew between iterations; carries the iteration trace."""

    def __init__(self, trace: Sequence[float]) -> None:
        super().__init__(f"remainder norms grew: {list(trace)}")
        self.trace = list(trace)


class HomologicalInconsistencyError(RuntimeError):
    """A divided mode had 0 < |k.omega| < 1/T, violating periodic arithmetic."""


@dataclass(frozen=True)
class NormalFormConfig:
    """Iteration and truncation knobs for the averaging transforms.

    ``m`` is the iteration count driving the remainder decay; ``rho(i)`` is
    the 2^i domain-radius schedule; ``radius_ratio`` gives the Gevrey-radius
    contraction per stage.  All <.-type smallness conditions carry the
    ``smallness_multiplier``: their implicit constants are free parameters
    here, so they stay configurable and get recorded in reports.
    """

    m: int
    lie_order: int = 6
    smallness_multiplier: float = 1.0

    def __post_init__(self) -> None:
        if self.m < 1:
            raise ValueError("iteration count m must be >= 1")
        if self.lie_order < 1:
            raise ValueError("lie_order must be >= 1")

    @staticmethod
    def rho(i: int) -> float:
        return 2.0 ** i

    @staticmethod
    def radius_ratio(n: int, alpha: float) -> float:
        """The per-stage Gevrey radius contraction C = 16^-1 (2n)^((1-alpha)/alpha)."""
        return (2 * n) ** ((1 - alpha) / alpha) / 16.0

    def gevrey_radius(self, L: float, i: int, n: int, alpha: float) -> float:
        return self.radius_ratio(n, alpha) ** i * L


def _k_dot_omega(k: Sequence[int], omega: Sequence[Fraction]) -> Fraction:
    return sum(Fraction(ki) * wi for ki, wi in zip(k, omega))


def resonant_split(
    f: FourierTaylorSeries, w: PeriodicVector
) -> tuple[FourierTaylorSeries, FourierTaylorSeries]:
    """Split f into its omega-resonant part (modes with k.omega = 0, exactly)
    and the rest."""
    res = {}
    non = {}
    for (k, l), c in f.items():
        if _k_dot_omega(k, w.omega) == 0:
            res[(k, l)] = c
        else:
            non[(k, l)] = c
    mk = lambda d: FourierTaylorSeries(
        f.domain, d, f.k_max, f.d_max, f.center,
        trunc_loss=f.trunc_loss, _validate=False,
    )
    return mk(res), mk(non)


def resonant_average(f: FourierTaylorSeries, w: PeriodicVector) -> FourierTaylorSeries:
    """Time average along the periodic flow of omega: the k.omega = 0 mode filter."""
    return resonant_split(f, w)[0]


def homological_solve(f: FourierTaylorSeries, w: PeriodicVector) -> FourierTaylorSeries:
    """Solve {chi, l_omega} = f - [f]_omega mode-wise.

    Every divided mode satisfies |k.omega| >= 1/T exactly (T-periodicity makes
    k.omega an integer multiple of 1/T), which is asserted: a violation means
    the periodic-vector arithmetic is corrupt, not that a small divisor occurred.
    """
    out = {}
    inv_T = 1 / w.period
    for (k, l), c in f.items():
        kw = _k_dot_omega(k, w.omega)
        if kw == 0:
            continue
        if abs(kw) < inv_T * (1 - Fraction(1, 10 ** 9)):
            raise HomologicalInconsistencyError(
                f"divisor k.omega = {kw} below 1/T = {inv_T} at mode {k}"
            )
        out[(k, l)] = c / (2j * math.pi * float(kw))
    return FourierTaylorSeries(
        f.domain, out, f.k_max, f.d_max, f.center, _validate=False
    )


def lie_transform(
    H: FourierTaylorSeries, chi: FourierTaylorSeries, order: int,
) -> FourierTaylorSeries:
    """Truncated Lie exponential H + {H,chi} + {{H,chi},chi}/2! + ...

    This is the pullback of H by the time-one flow of chi, exact to the given
    order in chi; symplecticity holds to the same order by construction.
    Truncation losses of the inner brackets accumulate on the result.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    if chi.is_zero:
        return H
    out = H
    term = H
    for p in range(1, order + 1):
        term = poisson_bracket(term, chi).scaled(1.0 / p)
        if term.is_zero and term.trunc_loss.is_zero:
            break
        out = out + term
    return out


@dataclass(frozen=True)
class AveragingStep:
    """One elementary averaging step along a periodic frequency."""

    frequency: PeriodicVector
    resonant_part: FourierTaylorSeries
    generator: FourierTaylorSeries
    remainder_norm: float                  # coefficient l1 norm after the step
    homological_defect: float              # relative defect of {chi, l_w} = f - [f]

    def __post_init__(self) -> None:
        if self.homological_defect > 1e-12:
            raise HomologicalInconsistencyError(
                f"homological identity violated: relative defect {self.homological_defect}"
            )

    def transform_displacement(
        self, lie_order: int = 6
    ) -> tuple[list[FourierTaylorSeries], list[FourierTaylorSeries]]:
        """(theta, action) components of Phi - Id for this step's generator flow."""
        td = TransformData([self.generator], lie_order)
        k, d = self.generator.k_max, self.generator.d_max
        return td.angle_displacement(k, d), td.action_displacement(k, d)


@dataclass(frozen=True)
class SmallnessReport:
    """Measured margins for the T*mu-type smallness conditions (reported, not
    enforced; the implicit constants are the configured multipliers)."""

    entries: tuple[tuple[str, float, float], ...]  # (name, lhs, rhs)

    @property
    def satisfied(self) -> bool:
        return all(lhs <= rhs for _, lhs, rhs in self.entries)


@dataclass
class AveragingOutcome:
    """Result of iterated averaging: H o Phi = l_omega + g + remainder."""

    frequency: PeriodicVector
    g: FourierTaylorSeries
    remainder: FourierTaylorSeries
    steps: list[AveragingStep]
    remainder_trace: list[float]
    smallness: SmallnessReport

    @property
    def generators(self) -> list[FourierTaylorSeries]:
        return [s.generator for s in self.steps]


def _linear_series(
    domain: Domain, w: PeriodicVector, k_max: int, d_max: int,
    center: Sequence[float],
) -> FourierTaylorSeries:
    return FourierTaylorSeries.linear(
        domain, [float(x) for x in w.omega], k_max=k_max, d_max=d_max, center=center
    )


def periodic_averaging(
    H: FourierTaylorSeries,
    w: PeriodicVector,
    cfg: NormalFormConfig,
) -> AveragingOutcome:
    """Iterate m first-order averaging steps along omega on H = l_omega + f.

    Each step filters the current non-resonant part, solves the homological
    equation, and pulls H back by the generator's Lie flow.  Per-iteration
    remainder norms are recorded; growth raises ``AveragingDivergenceError``
    with the trace.  The decay rate is measured, never assumed.
    """
    l_w = _linear_series(H.domain, w, H.k_max, H.d_max, H.center)
    f = H - l_w
    mu = f.coefficient_norm()
    T = float(w.period)
    c = cfg.smallness_multiplier
    smallness = SmallnessReport((
        ("T*mu << 1", T * mu, c),
        ("m*T*mu << 1", cfg.m * T * mu, c),
    ))
    cur = H
    steps: list[AveragingStep] = []
    _, r = resonant_split(f, w)
    trace = [r.coefficient_norm()]
    floor = 1e-13 * max(mu, 1.0)
    for _ in range(cfg.m):
        resonant, r = resonant_split(cur - l_w, w)
        if r.is_zero:
            break
        chi = homological_solve(r, w)
        defect = _homological_defect(chi, l_w, r)
        cur = lie_transform(cur, chi, cfg.lie_order)
        _, r_next = resonant_split(cur - l_w, w)
        norm_next = r_next.coefficient_norm()
        steps.append(AveragingStep(w, resonant, chi, norm_next, defect))
        if norm_next > max(trace[-1] * (1 + 1e-9), floor):
            raise AveragingDivergenceError(trace + [norm_next])
        trace.append(norm_next)
    g, remainder = resonant_split(cur - l_w, w)
    return AveragingOutcome(w, g, remainder, steps, trace, smallness)


def _homological_defect(
    chi: FourierTaylorSeries, l_w: FourierTaylorSeries, rhs: FourierTaylorSeries
) -> float:
    lhs = poisson_bracket(chi, l_w)
    scale = max(rhs.coefficient_norm(), 1e-300)
    return (lhs - rhs).coefficient_norm() / scale


@dataclass
class TransformData:
    """Composed symplectic transformation as generator data.

    ``generators`` are listed in application order (pullbacks compose left to
    right).  The inverse is realized by the reversed, negated generator list
    at the same Lie order.
    """

    generators: list[FourierTaylorSeries]
    lie_order: int

    def pullback(self, s: FourierTaylorSeries) -> FourierTaylorSeries:
        out = s
        for chi in self.generators:
            out = lie_transform(out, chi, self.lie_order)
        return out

    def pullback_inverse(self, s: FourierTaylorSeries) -> FourierTaylorSeries:
        out = s
        for chi in reversed(self.generators):
            out = lie_transform(out, -chi, self.lie_order)
        return out

    def action_displacement(
        self, k_max: int, d_max: int
    ) -> list[FourierTaylorSeries]:
        """Series for (Pi_I Phi - Id)_j: the coordinate functions pulled back."""
        if not self.generators:
            return []
        dom = self.generators[0].domain
        center = self.generators[0].center
        out = []
        for j in range(dom.n):
            coord = FourierTaylorSeries.action_coordinate(
                dom, j, k_max=k_max, d_max=d_max, center=center
            )
            out.append(self.pullback(coord) - coord)
        return out

    def angle_displacement(
        self, k_max: int, d_max: int
    ) -> list[FourierTaylorSeries]:
        """Series for (Pi_theta Phi - Id)_j.

        The angle coordinate itself is not a torus function, but its
        displacement under the generator flow is: {theta_j, chi} = d chi/dI_j
        and the higher brackets stay periodic.
        """
        if not self.generators:
            return []
        dom = self.generators[0].domain
        out = []
        for j in range(dom.n):
            total = FourierTaylorSeries.zero(dom, k_max, d_max,
                                             self.generators[0].center)
            for g_idx, chi in enumerate(self.generators):
                term = chi.partial_action(j).with_bounds(k_max, d_max)
                disp = term
                for p in range(2, self.lie_order + 1):
                    term = poisson_bracket(term, chi, k_max=k_max, d_max=d_max
                                           ).scaled(1.0 / p)
                    if term.is_zero:
                        break
                    disp = disp + term
                # later generators act on the already-displaced coordinate
                total = self.pullback_tail(disp, g_idx + 1) + total
            out.append(total)
        return out

    def pullback_tail(self, s: FourierTaylorSeries, start: int) -> FourierTaylorSeries:
        out = s
        for chi in self.generators[start:]:
            out = lie_transform(out, chi, self.lie_order)
        return out


@dataclass
class NormalFormResult:
    """A composed normal form H o Phi = l_j + g + remainder (or, after scaling
    back, H o Psi = h + g + remainder) with measured certificates."""

    frame: ResonanceFrame
    steps: list[list[AveragingStep]]
    g: FourierTaylorSeries
    remainder: FourierTaylorSeries
    transform: TransformData
    certificates: dict[str, float]
    symmetry_checked: bool = False
    approximate: bool = False


def verify_resonant_symmetry(
    g: FourierTaylorSeries,
    frame: ResonanceFrame,
    grid: GridSpec | None = None,
    tol: float = 1e-10,
) -> bool:
    """True iff every mode of g annihilates the whole frame (k.omega_i = 0).

    Checked both mode-wise (exact rational dot products) and, equivalently
    for Fourier data, on a sample grid: the angle gradient of g must lie in
    Lambda_j, i.e. its Pi_perp projection must vanish.
    """
    scale = max(g.coefficient_norm(), 1.0)
    for (k, _), c in g.items():
        if abs(c) <= 1e-14 * scale:
            continue
        for pv in frame.vectors:
            if _k_dot_omega(k, pv.omega) != 0:
                return False
    _, Pperp = projections(frame)
    grid = grid or GridSpec(theta_res=8, action_res=3)
    theta_pts = grid.theta_points(g.domain.n)
    action_pts = grid.action_points(g.domain) + np.asarray(g.center)
    grads = [
        g.partial_theta(j).evaluate_grid(theta_pts, action_pts)
        for j in range(g.domain.n)
    ]
    stacked = np.stack(grads, axis=0)      # (n, P, Q)
    proj = np.einsum("ij,jpq->ipq", Pperp, stacked)
    return bool(np.max(np.abs(proj)) <= tol * scale)


def composed_normal_form(
    H: FourierTaylorSeries,
    frame: ResonanceFrame,
    cfg: NormalFormConfig,
) -> NormalFormResult:
    """Multi-frequency normal form along an ordered independent frame.

    Averages along the last frame vector, rewrites the linear part around the
    previous one, recurses, and accumulates the pulled-back remainders.  The
    final resonant part g annihilates every frame frequency mode-wise (the
    symmetry propagates because all the filters and divisions preserve each
    mode condition and brackets only add Fourier indices).
    """
    if frame.j == 0:
        raise ValueError("composed_normal_form needs at least one frequency")
    g, remainder, steps, gens, margins = _composed_rec(H, list(frame.vectors), cfg)
    transform = TransformData(gens, cfg.lie_order)
    certificates = {
        "g_norm": g.coefficient_norm(),
        "remainder_norm": remainder.coefficient_norm(),
        "remainder_trunc_loss": remainder.trunc_loss.raw,
    }
    certificates.update(margins)
    result = NormalFormResult(
        frame=frame, steps=steps, g=g, remainder=remainder,
        transform=transform, certificates=certificates,
    )
    result.symmetry_checked = verify_resonant_symmetry(g, frame)
    return result


def _composed_rec(
    H: FourierTaylorSeries,
    freqs: list[PeriodicVector],
    cfg: NormalFormConfig,
) -> tuple[
    FourierTaylorSeries, FourierTaylorSeries,
    list[list[AveragingStep]], list[FourierTaylorSeries], dict[str, float],
]:
    w = freqs[-1]
    stage = len(freqs)
    outcome = periodic_averaging(H, w, cfg)
    margins = {
        f"A{stage}:{name}": lhs / rhs if rhs else math.inf
        for name, lhs, rhs in outcome.smallness.entries
    }
    if len(freqs) == 1:
        return outcome.g, outcome.remainder, [outcome.steps], outcome.generators, margins
    w_prev = freqs[-2]
    l_w = _linear_series(H.domain, w, H.k_max, H.d_max, H.center)
    l_prev = _linear_series(H.domain, w_prev, H.k_max, H.d_max, H.center)
    gap = float(max(abs(a - b) for a, b in zip(w.omega, w_prev.omega)))
    mu_prev = (H - l_w).coefficient_norm()
    margins[f"A{stage}:|w-w_prev|/mu_prev"] = (
        gap / (cfg.smallness_multiplier * mu_prev) if mu_prev else math.inf
    )
    f_tilde = (l_w - l_prev) + outcome.g
    g_inner, rem_inner, steps_inner, gens_inner, inner_margins = _composed_rec(
        l_prev + f_tilde, freqs[:-1], cfg
    )
    margins.update(inner_margins)
    carried = outcome.remainder
    for chi in gens_inner:
        carried = lie_transform(carried, chi, cfg.lie_order)
    g_total = (l_prev - l_w) + g_inner
    remainder = rem_inner + carried
    return (
        g_total, remainder, [outcome.steps] + steps_inner,
        outcome.generators + gens_inner, margins,
    )


# -- localization around an action point ---------------------------------------------


@dataclass
class ScaleMap:
    """The conformally symplectic action map sigma: (theta, J) -> (theta, center + mu*J)."""

    center: tuple[float, ...]
    mu: float

    def forward(self, J: np.ndarray) -> np.ndarray:
        return np.asarray(self.center) + self.mu * np.asarray(J)

    def backward(self, I: np.ndarray) -> np.ndarray:
        return (np.asarray(I) - np.asarray(self.center)) / self.mu


@dataclass
class LocalizedHamiltonian:
    """Rescaled Hamiltonian mu^{-1} (H o sigma) = l_omega + f_tilde."""

    omega: PeriodicVector
    l_series: FourierTaylorSeries
    f_tilde: FourierTaylorSeries
    h_tilde: FourierTaylorSeries          # gradient mismatch + Taylor block
    f_scaled: FourierTaylorSeries         # mu^{-1} (f o sigma)
    sigma: ScaleMap
    gradient_mismatch: float              # |grad h(center) - omega|_inf
    f_tilde_norm: float                   # coefficient l1 norm, compare to mu

    def total(self) -> FourierTaylorSeries:
        return self.l_series + self.f_tilde


def localize_and_scale(
    system: HamiltonianSystem,
    I_center: Sequence[float],
    mu: float,
    omega: PeriodicVector | None,
    rho: float = 2.0,
) -> LocalizedHamiltonian:
    """Translate and rescale the actions around I_center by mu.

    The integrable part re-expands exactly (polynomial identity); the linear
    term splits into omega.J plus the gradient-mismatch term, which joins the
    quadratic-and-higher Taylor block and the rescaled perturbation in
    f_tilde.  Requires B(I_center, 3*rho*mu) inside the domain ball and a
    supplied periodic vector near grad h(I_center).
    """
    if omega is None:
        raise ValueError("localize_and_scale needs a periodic vector near grad h")
    if mu <= 0:
        raise ValueError("mu must be positive")
    domain = system.domain
    I_center = tuple(float(x) for x in I_center)
    reach = max(abs(x) for x in I_center) + 3 * rho * mu
    if reach > domain.R * (1 + 1e-12):
        raise DomainError(
            f"ball B(center, 3*rho*mu) leaves B_R: reach {reach} > R {domain.R}"
        )
    scaled_domain = Domain(domain.n, 3 * rho)
    h_loc = recenter_scale(system.integrable, I_center, mu, new_domain=scaled_domain)
    # drop the constant h(I_center): only the gradient and higher blocks matter
    zero_idx = ((0,) * domain.n, (0,) * domain.n)
    h_coeffs = dict(h_loc.coeffs)
    h_coeffs.pop(zero_idx, None)
    h_loc = FourierTaylorSeries(
        scaled_domain, h_coeffs, h_loc.k_max, h_loc.d_max, _validate=False
    )
    h_scaled = h_loc.scaled(1.0 / mu)
    l_series = _linear_series(
        scaled_domain, omega, h_scaled.k_max, max(h_scaled.d_max, 1), (0.0,) * domain.n
    )
    h_tilde = h_scaled - l_series
    f_scaled = recenter_scale(
        system.perturbation, I_center, mu, new_domain=scaled_domain
    ).scaled(1.0 / mu)
    f_tilde = h_tilde + f_scaled
    grad = np.array([
        system.integrable.partial_action(j)._evaluate_unchecked(
            (0.0,) * domain.n, I_center
        )
        for j in range(domain.n)
    ])
    mismatch = float(np.max(np.abs(grad - omega.as_floats())))
    return LocalizedHamiltonian(
        omega=omega,
        l_series=l_series,
        f_tilde=f_tilde,
        h_tilde=h_tilde,
        f_scaled=f_scaled,
        sigma=ScaleMap(I_center, mu),
        gradient_mismatch=mismatch,
        f_tilde_norm=f_tilde.coefficient_norm(),
    )


def _unscale(
    s: FourierTaylorSeries, sigma: ScaleMap, back_domain: Domain
) -> FourierTaylorSeries:
    """mu * (s o sigma^{-1}): back to original actions, centered at sigma.center."""
    out = {}
    for (k, l), c in s.items():
        out[(k, l)] = c * sigma.mu ** (1 - sum(l))
    return FourierTaylorSeries(
        back_domain, out, s.k_max, s.d_max, sigma.center, _validate=False
    )


def local_normal_form(
    system: HamiltonianSystem,
    I_center: Sequence[float],
    frame: ResonanceFrame,
    mu_schedule: Sequence[float],
    cfg: NormalFormConfig,
    theta_grid: int = 16,
    action_grid: int = 9,
) -> NormalFormResult:
    """Normal form around an action point: localize, average along the frame,
    scale back to H o Psi = h + g + remainder.

    The condition epsilon < mu_i^2 is enforced exactly; the remaining
    smallness margins are measured and recorded in the certificates.  The
    measured sup of |d_theta remainder| is compared against the regularity
    target mu_j / tau_m.
    """
    j = frame.j
    if j == 0 or len(mu_schedule) != j:
        raise ValueError("mu_schedule must supply one radius per frame vector")
    eps = system.epsilon
    for i, mu_i in enumerate(mu_schedule, start=1):
        if not eps < mu_i ** 2:
            raise ValueError(
                f"condition epsilon < mu_{i}^2 fails: {eps} >= {mu_i ** 2}"
            )
    mu_j = float(mu_schedule[-1])
    rho_j = cfg.rho(j)
    loc = localize_and_scale(system, I_center, mu_j, frame.vectors[-1], rho_j)
    result = composed_normal_form(loc.total(), frame, cfg)

    s_tilde = result.g - loc.h_tilde
    back_domain = Domain(system.domain.n, 3 * rho_j * mu_j)
    g_back = _unscale(s_tilde, loc.sigma, back_domain)
    rem_back = _unscale(result.remainder, loc.sigma, back_domain)

    # measured remainder angle-derivative sup over T^n x B(center, 2*rho_1*mu_j)
    grid = GridSpec(
        theta_res=theta_grid, action_res=action_grid,
        action_radius=2 * cfg.rho(1) * mu_j, action_center=tuple(I_center),
    )
    theta_pts = grid.theta_points(system.domain.n)
    action_pts = grid.action_points(back_domain)
    dtheta_sup = 0.0
    for jj in range(system.domain.n):
        vals = rem_back.partial_theta(jj).evaluate_grid(theta_pts, action_pts)
        dtheta_sup = max(dtheta_sup, float(np.max(np.abs(vals))))
    tau_m = tau_m_value(cfg.m, system.regularity)
    target = mu_j / tau_m

    disp = result.transform.action_displacement(result.g.k_max, result.g.d_max)
    disp_sup = 0.0
    if disp:
        sgrid = GridSpec(theta_res=theta_grid, action_res=action_grid,
                         action_radius=2 * cfg.rho(1))
        th = sgrid.theta_points(system.domain.n)
        ac = sgrid.action_points(disp[0].domain)
        for d in disp:
            disp_sup = max(disp_sup, float(np.max(np.abs(d.evaluate_grid(th, ac)))))
    disp_sup *= mu_j  # scaled back through sigma

    mismatch_margins = _b_condition_margins(system, frame, mu_schedule, cfg, loc)
    result.g = g_back
    result.remainder = rem_back
    result.certificates.update(
        {
            "g_norm": g_back.coefficient_norm(),
            "remainder_norm": rem_back.coefficient_norm(),
            "remainder_dtheta_sup": dtheta_sup,
            "remainder_dtheta_target": target,
            "displacement_sup": disp_sup,
            "displacement_over_mu": disp_sup / mu_j if mu_j else math.inf,
            "gradient_mismatch": loc.gradient_mismatch,
            "f_tilde_over_mu": loc.f_tilde_norm / mu_j,
        }
    )
    result.certificates.update(mismatch_margins)
    result.symmetry_checked = verify_resonant_symmetry(result.g, frame)
    return result


def _b_condition_margins(
    system: HamiltonianSystem,
    frame: ResonanceFrame,
    mu_schedule: Sequence[float],
    cfg: NormalFormConfig,
    loc: LocalizedHamiltonian,
) -> dict[str, float]:
    out: dict[str, float] = {}
    c = cfg.smallness_multiplier
    for i, (pv, mu_i) in enumerate(zip(frame.vectors, mu_schedule), start=1):
        T = float(pv.period)
        out[f"B{i}:T*mu"] = T * mu_i / c
        out[f"B{i}:m*T*mu"] = cfg.m * T * mu_i / c
        out[f"B{i}:mu"] = mu_i / c
        if i >= 2:
            prev = frame.vectors[i - 2]
            gap = float(
                max(abs(a - b) for a, b in zip(pv.omega, prev.omega))
            )
            out[f"B{i}:|w_i - w_(i-1)|/mu_(i-1)"] = gap / (c * mu_schedule[i - 2])
            out[f"B{i}:mu_i/mu_(i-1)"] = mu_i / (c * mu_schedule[i - 2])
    out["B_j:gradient_mismatch/mu_j"] = loc.gradient_mismatch / mu_schedule[-1]
    return out
