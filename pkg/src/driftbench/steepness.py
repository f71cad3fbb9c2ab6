"""Diophantine Morse checking, prevalence sampling, and steepness escape times.

The Morse condition is a two-branch alternative on every rational subspace
Lambda in G^L(n, k): at each action point either the Lambda-projected
gradient of h exceeds gamma * L^{-tau}, or the Lambda-restricted Hessian is
gamma * L^{-tau}-nondegenerate.  Because the threshold decreases in L while
the G^L families only grow, each distinct subspace only needs checking at
the smallest L where it appears; reports record that L.

Continuum quantifiers (points of B_R, all L) are sampled: points on a grid
over the Euclidean ball, L up to a cap.  Reports carry both resolutions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .diophantine import (
    RationalSubspace,
    ResonanceFrame,
    enumerate_GL,
    projections,
)
from .systems import ActionHamiltonian

DEFAULT_GAMMA_LADDER = tuple(0.5 ** i for i in range(21))


@dataclass(frozen=True)
class MorseParams:
    """Threshold parameters gamma * L^{-tau}."""

    gamma: float
    tau: float

    def __post_init__(self) -> None:
        if not 0 < self.gamma:
            raise ValueError("gamma must be positive")
        if self.tau < 0:
            raise ValueError("tau must be >= 0")

    def check_stability_range(self) -> None:
        """The stability theorems need gamma <= 1 and tau >= 2."""
        if self.gamma > 1 or self.tau < 2:
            raise ValueError(
                f"stability theorems require gamma <= 1 and tau >= 2, "
                f"got gamma={self.gamma}, tau={self.tau}"
            )

    def threshold(self, L: int) -> float:
        return self.gamma * float(L) ** (-self.tau)


def rational_kernel_basis(normals: Sequence[Sequence[float]], n: int) -> np.ndarray:
    """Deterministic rational-RREF kernel basis (rows) of the normal matrix."""
    from fractions import Fraction

    if not normals:
        return np.eye(n)
    mat = [[Fraction(x) for x in row] for row in normals]
    m = len(mat)
    pivots: list[int] = []
    r = 0
    for c in range(n):
        pivot = next((i for i in range(r, m) if mat[i][c] != 0), None)
        if pivot is None:
            continue
        mat[r], mat[pivot] = mat[pivot], mat[r]
        pv = mat[r][c]
        mat[r] = [x / pv for x in mat[r]]
        for i in range(m):
            if i != r and mat[i][c] != 0:
                f = mat[i][c]
                mat[i] = [a - f * b for a, b in zip(mat[i], mat[r])]
        pivots.append(c)
        r += 1
        if r == m:
            break
    free = [c for c in range(n) if c not in pivots]
    basis = []
    for fc in free:
        vec = [Fraction(0)] * n
        vec[fc] = Fraction(1)
        for i, pc in enumerate(pivots):
            vec[pc] = -mat[i][fc]
        basis.append([float(x) for x in vec])
    return np.array(basis) if basis else np.zeros((0, n))


def adapted_coordinates(s: RationalSubspace) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal bases (columns): E spans Lambda, F spans its complement.

    Gram-Schmidt runs in a deterministic order: the RREF kernel basis in free
    column order for E, the input normals in their given order for F.
    """
    n = s.n
    kern = rational_kernel_basis(s.normals, n)  # rows span Lambda
    E = _gram_schmidt(kern.T)
    F = _gram_schmidt(np.array(s.normals, dtype=float).T if s.normals else np.zeros((n, 0)))
    return E, F


def _gram_schmidt(cols: np.ndarray) -> np.ndarray:
    if cols.shape[1] == 0:
        return cols
    out = []
    for j in range(cols.shape[1]):
        v = cols[:, j].astype(float)
        for u in out:
            v = v - (u @ v) * u
        norm = np.linalg.norm(v)
        if norm < 1e-12:
            raise ValueError("degenerate input to Gram-Schmidt")
        out.append(v / norm)
    return np.stack(out, axis=1)


@dataclass(frozen=True)
class BranchResult:
    """Outcome of the two-branch Morse test at one point."""

    branch: str                 # "gradient" | "hessian" | "fail"
    grad_norm: float            # ||projected gradient||_2
    sigma_min: float            # smallest singular value of the Hessian block
    threshold: float

    @property
    def passed(self) -> bool:
        return self.branch != "fail"


def check_morse_at(
    h: ActionHamiltonian,
    s: RationalSubspace,
    point: Sequence[float],
    params: MorseParams,
    L: int,
    R: float | None = None,
) -> BranchResult:
    """Two-branch Morse test for one subspace at one action point."""
    point = np.asarray(point, dtype=float)
    if R is not None and np.max(np.abs(point)) > R * (1 + 1e-12):
        raise ValueError(f"point {point} outside the action ball of radius {R}")
    E, _ = adapted_coordinates(s)
    thr = params.threshold(L)
    g = float(np.linalg.norm(E.T @ h.grad(point)))
    if g > thr:
        return BranchResult("gradient", g, math.nan, thr)
    block = E.T @ h.hess(point) @ E
    sigma = float(np.min(np.abs(np.linalg.eigvalsh(0.5 * (block + block.T)))))
    if sigma > thr:
        return BranchResult("hessian", g, sigma, thr)
    return BranchResult("fail", g, sigma, thr)


def action_ball_grid(n: int, R: float, res: int) -> np.ndarray:
    """Grid over the Euclidean ball of radius R (cube grid, filtered)."""
    axis = np.linspace(-R, R, res)
    grids = np.meshgrid(*([axis] * n), indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=-1)
    return pts[np.linalg.norm(pts, axis=1) <= R * (1 + 1e-12)]


@dataclass(frozen=True)
class SubspaceMargin:
    """Per-subspace summary: the binding margin over the sampled ball."""

    subspace: RationalSubspace
    L_min: int                  # smallest L with Lambda in G^L(n, k)
    margin: float               # min over points of max(grad_norm, sigma_min)
    worst_point: tuple[float, ...]
    worst_grad: float
    worst_sigma: float


def _constant_hessian(h: ActionHamiltonian, points: np.ndarray) -> bool:
    if points.shape[0] < 2:
        return True
    H0 = h.hess(points[0])
    H1 = h.hess(points[-1])
    return bool(np.allclose(H0, H1, rtol=0, atol=1e-13))


def subspace_margins(
    h: ActionHamiltonian, n: int, R: float, L_max: int, res: int
) -> list[SubspaceMargin]:
    """Margins for every subspace of every G^L(n, k), L <= L_max, each at its
    minimal L.  The Morse condition at parameters (gamma, tau) then reads
    margin > gamma * L_min^{-tau} for every entry."""
    pts = action_ball_grid(n, R, res)
    grads = h.grad_many(pts)
    out: list[SubspaceMargin] = []
    seen: set[tuple] = set()
    for L in range(1, L_max + 1):
        for k in range(1, n + 1):
            for sub in enumerate_GL(n, k, L):
                key = sub.lattice_key()
                if key in seen:
                    continue
                seen.add(key)
                E, _ = adapted_coordinates(sub)
                gp = np.linalg.norm(grads @ E, axis=1)
                if _constant_hessian(h, pts):
                    block = E.T @ h.hess(pts[0]) @ E
                    sig = float(np.min(np.abs(np.linalg.eigvalsh(0.5 * (block + block.T)))))
                    sigmas = np.full(len(pts), sig)
                else:
                    sigmas = np.empty(len(pts))
                    for i, p in enumerate(pts):
                        block = E.T @ h.hess(p) @ E
                        sigmas[i] = np.min(np.abs(np.linalg.eigvalsh(0.5 * (block + block.T))))
                scores = np.maximum(gp, sigmas)
                i_worst = int(np.argmin(scores))
                out.append(
                    SubspaceMargin(
                        sub, L, float(scores[i_worst]),
                        tuple(float(x) for x in pts[i_worst]),
                        float(gp[i_worst]), float(sigmas[i_worst]),
                    )
                )
    return out


@dataclass(frozen=True)
class MorseReport:
    """Aggregated Morse check: failures carry the subspace, the witness point
    and both branch margins."""

    params: MorseParams
    L_max: int
    grid_res: int
    subspace_counts: dict[int, int]          # dimension k -> how many tested
    margins: tuple[SubspaceMargin, ...]
    failures: tuple[SubspaceMargin, ...]

    @property
    def passed(self) -> bool:
        return not self.failures


def check_morse(
    h: ActionHamiltonian,
    params: MorseParams,
    L_max: int,
    n: int,
    R: float = 1.0,
    grid_res: int = 33,
) -> MorseReport:
    """Enumerate G^L(n, k) for L <= L_max and test the Morse alternative on a
    ball grid; a subspace fails if some point defeats both branches."""
    if L_max < 1:
        raise ValueError("L_max must be >= 1")
    margins = subspace_margins(h, n, R, L_max, grid_res)
    failures = tuple(
        m for m in margins if m.margin <= params.threshold(m.L_min)
    )
    counts: dict[int, int] = {}
    for m in margins:
        counts[m.subspace.dim] = counts.get(m.subspace.dim, 0) + 1
    return MorseReport(params, L_max, grid_res, counts, tuple(margins), failures)


def best_gamma(
    margins: Sequence[SubspaceMargin],
    tau: float,
    ladder: Sequence[float] = DEFAULT_GAMMA_LADDER,
) -> float | None:
    """Largest ladder gamma for which every margin beats gamma * L^{-tau}."""
    bound = min((m.margin * m.L_min ** tau for m in margins), default=math.inf)
    for g in ladder:
        if g < bound:
            return g
    return None


@dataclass(frozen=True)
class PrevalenceReport:
    """Monte-Carlo sample of the linear-shift prevalence claim (recorded, not
    asserted: desk-scale evidence only)."""

    num_samples: int
    fraction: float | None      # None when num_samples == 0 (undefined)
    gammas: tuple[float | None, ...]
    histogram: dict[float, int]
    tau: float
    L_max: int
    grid_res: int
    seed: int


def sample_prevalence(
    h: ActionHamiltonian,
    tau: float,
    num_samples: int,
    xi_box: float,
    n: int,
    R: float = 1.0,
    L_max: int = 2,
    grid_res: int = 17,
    ladder: Sequence[float] = DEFAULT_GAMMA_LADDER,
    seed: int = 0,
) -> PrevalenceReport:
    """Draw xi uniformly from a box and search the gamma ladder for h - xi.I.

    Requires tau > 2(n^2 + 1), matching the hypothesis under which the shift
    family is known to be almost-surely Morse.
    """
    if tau <= 2 * (n ** 2 + 1):
        raise ValueError(f"prevalence sampling needs tau > 2(n^2+1) = {2 * (n**2 + 1)}")
    from .systems import ShiftedHamiltonian

    rng = np.random.default_rng(seed)
    gammas: list[float | None] = []
    hist: dict[float, int] = {}
    for _ in range(num_samples):
        xi = rng.uniform(-xi_box, xi_box, size=n)
        shifted = ShiftedHamiltonian(h, xi)
        margins = subspace_margins(shifted, n, R, L_max, grid_res)
        g = best_gamma(margins, tau, ladder)
        gammas.append(g)
        if g is not None:
            hist[g] = hist.get(g, 0) + 1
    fraction = (
        sum(1 for g in gammas if g is not None) / num_samples if num_samples else None
    )
    return PrevalenceReport(
        num_samples, fraction, tuple(gammas), hist, tau, L_max, grid_res, seed
    )


# -- steepness escape ---------------------------------------------------------------


@dataclass(frozen=True)
class SteepnessQuery:
    """A sampled continuous path in an affine subspace lambda_j inside B_R."""

    times: np.ndarray
    points: np.ndarray          # (m, n) samples of Gamma_j(t)
    c: float                    # target curve length (sup-norm displacement)
    frame: ResonanceFrame
    R: float
    grid_tol: float = 0.25      # max sup-norm gap between consecutive samples

    def __post_init__(self) -> None:
        if len(self.times) != len(self.points):
            raise ValueError("times and points must align")
        if len(self.times) < 1:
            raise ValueError("empty curve")
        if not 0 < self.c < 1:
            raise ValueError("length threshold c must lie in (0, 1)")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must strictly increase")
        if np.max(np.abs(self.points)) > self.R * (1 + 1e-9):
            raise ValueError("curve leaves the action ball")
        Pi, Pperp = projections(self.frame)
        disp = self.points - self.points[0]
        off = np.max(np.abs(disp @ Pperp.T)) if len(disp) else 0.0
        if off > 1e-8 * max(1.0, self.R):
            raise ValueError(
                f"curve leaves the affine subspace (transverse offset {off:.3e})"
            )
        gaps = np.max(np.abs(np.diff(self.points, axis=0)), axis=1) if len(self.points) > 1 else []
        if len(gaps) and np.max(gaps) > self.grid_tol:
            raise ValueError("consecutive samples too far apart")


@dataclass(frozen=True)
class EscapeResult:
    """Escape-time search outcome on a sampled curve."""

    found: bool
    time: float | None
    index: int | None
    grad_sup: float | None          # |Pi_j grad h|_inf at the escape sample
    grad_threshold: float
    containment_ok: bool | None     # displacement < c at all earlier samples
    length_margin: float            # multiplier*gamma*L^-tau - c (precondition)
    counterexample_candidate: bool  # not found although h passed the Morse check


def steepness_escape(
    q: SteepnessQuery,
    h: ActionHamiltonian,
    gamma: float,
    tau: float,
    grad_multiplier: float = 1.0,
    length_multiplier: float = 1.0,
    morse_passed: bool | None = None,
) -> EscapeResult:
    """Scan the curve for the first time the projected gradient exceeds the
    configured multiple of c^2, verifying the containment clause on the way.

    Not finding one contradicts the steepness escape property whenever h
    passed the Morse check, so that case is flagged for inspection.
    """
    L = q.frame.l_index
    length_cap = length_multiplier * gamma * float(L) ** (-tau)
    if q.c > length_cap:
        raise ValueError(
            f"length threshold c={q.c} exceeds its cap {length_cap} "
            f"(c must be << gamma L^-tau; adjust the multiplier)"
        )
    disp = np.max(np.abs(q.points - q.points[0]), axis=1)
    if float(np.max(disp)) < q.c:
        raise ValueError("curve never reaches length c; precondition violated")
    Pi, _ = projections(q.frame)
    thr = grad_multiplier * q.c ** 2
    for i in range(len(q.times)):
        g = float(np.max(np.abs(Pi @ h.grad(q.points[i]))))
        if g > thr:
            contained = bool(np.all(disp[:i] < q.c)) if i > 0 else True
            return EscapeResult(
                True, float(q.times[i]), i, g, thr, contained,
                length_cap - q.c, False,
            )
        if disp[i] >= q.c:
            break
    return EscapeResult(
        False, None, None, None, thr, None, length_cap - q.c,
        bool(morse_passed),
    )
