"""Periodic frequency vectors, Dirichlet approximation, and resonance lattices.

Everything here is exact: frequencies and periods are rationals, resonance
modules are integer lattices, and the two Dirichlet inequalities are decided
in rational arithmetic (input floats are converted exactly, so no rounding
slack is needed).  Floating point appears only at the output boundary
(orthonormal bases and projection matrices).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations, product
from typing import Iterable, Sequence

import numpy as np

RationalVector = tuple[Fraction, ...]


class DirichletSearchError(RuntimeError):
    """Candidate cap exhausted before a feasible periodic vector was found.

    Dirichlet's theorem guarantees existence within the default cap, so this
    signals a configuration error (cap too small), not a math failure.
    """


def _to_fraction_vector(v: Sequence) -> RationalVector:
    out = tuple(Fraction(x) for x in v)
    if all(x == 0 for x in out):
        raise ValueError("zero vector has no period")
    return out


@dataclass(frozen=True)
class PeriodicVector:
    """A rational frequency omega with its exact minimal period T.

    Invariants: T*omega is an integer vector with componentwise gcd 1 (this
    is equivalent to minimality of T), and omega != 0.
    """

    omega: RationalVector
    period: Fraction

    def __post_init__(self) -> None:
        if all(x == 0 for x in self.omega):
            raise ValueError("omega must be nonzero")
        if self.period <= 0:
            raise ValueError("period must be positive")
        ints = [self.period * w for w in self.omega]
        if any(x.denominator != 1 for x in ints):
            raise ValueError(f"T*omega = {ints} is not an integer vector")
        g = math.gcd(*(int(x) for x in ints))
        if g != 1:
            raise ValueError(f"period {self.period} is not minimal (gcd {g})")

    @property
    def n(self) -> int:
        return len(self.omega)

    def integer_vector(self) -> tuple[int, ...]:
        """T*omega, exactly."""
        return tuple(int(self.period * w) for w in self.omega)

    def sup_norm(self) -> Fraction:
        return max(abs(w) for w in self.omega)

    def as_floats(self) -> np.ndarray:
        return np.array([float(w) for w in self.omega])

    def __str__(self) -> str:
        return "(" + ", ".join(str(w) for w in self.omega) + f") T={self.period}"


def period_of(v: Sequence) -> PeriodicVector:
    """Exact minimal period of a rational vector.

    T starts from the lcm of the denominators and is divided by the gcd of
    the resulting integer vector; minimality then holds because gcd(T*v) = 1.
    """
    vec = _to_fraction_vector(v)
    T = Fraction(math.lcm(*(x.denominator for x in vec)))
    ints = [int(T * x) for x in vec]
    g = math.gcd(*ints)
    T = T / g
    return PeriodicVector(vec, T)


@dataclass(frozen=True)
class DirichletResult:
    """Approximation output plus the exactly verified inequality margins."""

    vector: PeriodicVector
    error: Fraction            # sup-norm |v - omega|, exact
    error_bound: float         # T^{-1} Q^{-1/(n-1)}
    period_lower: float        # |v|^{-1}
    period_upper: float        # Q |v|^{-1}
    candidates_examined: int

    def margins(self) -> dict[str, float]:
        T = float(self.vector.period)
        return {
            "error_margin": self.error_bound - float(self.error),
            "period_lower_margin": T - self.period_lower,
            "period_upper_margin": self.period_upper - T,
        }


def dirichlet_candidates(
    v: Sequence[float], Q: float, search_cap: int | None = None
) -> list[DirichletResult]:
    """All feasible Dirichlet approximations, sorted by (T, T*omega).

    A candidate is a T-periodic omega with |v - omega| <= T^{-1} Q^{-1/(n-1)}
    and |v|^{-1} <= T <= Q |v|^{-1} (supremum norms, decided exactly).
    Candidates are enumerated shell by shell: for integer q the scale
    T = q/|v| makes the largest component of T*v exactly an integer, and the
    Dirichlet witness is always a floor/ceil rounding of the remaining
    components, so the scan is exhaustive and existence is guaranteed.
    """
    n = len(v)
    if n < 2:
        raise ValueError("dirichlet approximation needs dimension n >= 2")
    if Q <= 1:
        raise ValueError("Q must exceed 1")
    vf = _to_fraction_vector(v)
    Qf = Fraction(Q)
    vnorm = max(abs(x) for x in vf)
    shells = math.floor(Qf)
    cap = search_cap if search_cap is not None else shells * 2 ** n
    examined = 0
    feasible: dict[tuple[Fraction, tuple[int, ...]], Fraction] = {}
    for q in range(1, shells + 1):
        t_param = Fraction(q) / vnorm
        x = [t_param * c for c in vf]
        choices = []
        for xi in x:
            fl = math.floor(xi)
            choices.append((fl,) if xi == fl else (fl, fl + 1))
        for w in product(*choices):
            if examined >= cap:
                break
            examined += 1
            if all(c == 0 for c in w):
                continue
            g = math.gcd(*w)
            w_red = tuple(c // g for c in w)
            T = t_param / g
            key = (T, w_red)
            if key in feasible:
                continue
            omega = tuple(Fraction(c) / T for c in w_red)
            err = max(abs(a - b) for a, b in zip(vf, omega))
            # |v - omega| <= T^{-1} Q^{-1/(n-1)}  <=>  (err*T)^{n-1} * Q <= 1
            if (err * T) ** (n - 1) * Qf > 1:
                continue
            # |v|^{-1} <= T <= Q |v|^{-1}
            if T * vnorm < 1 or T * vnorm > Qf:
                continue
            feasible[key] = err
    results = [
        DirichletResult(
            vector=PeriodicVector(tuple(Fraction(c) / T for c in w_red), T),
            error=err,
            error_bound=float(1 / T) * float(Qf) ** (-1.0 / (n - 1)),
            period_lower=float(1 / vnorm),
            period_upper=float(Qf / vnorm),
            candidates_examined=examined,
        )
        for (T, w_red), err in sorted(feasible.items())
    ]
    return results


def dirichlet_approx(
    v: Sequence[float], Q: float, search_cap: int | None = None
) -> DirichletResult:
    """The Dirichlet approximation with the smallest period.

    Among all feasible candidates the one with smallest T is returned, ties
    broken by lexicographically smallest T*omega (small T keeps |T*omega|
    and hence the resonance L-index small, which loosens the downstream
    smallness conditions).
    """
    results = dirichlet_candidates(v, Q, search_cap)
    if not results:
        cap = search_cap if search_cap is not None else math.floor(Q) * 2 ** len(v)
        raise DirichletSearchError(
            f"no feasible candidate within cap={cap} (Q={Q}, n={len(v)}); raise the cap"
        )
    return results[0]


# -- exact integer linear algebra ----------------------------------------------


def rational_rank(rows: Sequence[Sequence[Fraction]]) -> int:
    """Rank over Q by exact Gaussian elimination."""
    mat = [list(map(Fraction, row)) for row in rows]
    if not mat:
        return 0
    ncols = len(mat[0])
    rank = 0
    col = 0
    while rank < len(mat) and col < ncols:
        pivot = next((r for r in range(rank, len(mat)) if mat[r][col] != 0), None)
        if pivot is None:
            col += 1
            continue
        mat[rank], mat[pivot] = mat[pivot], mat[rank]
        pv = mat[rank][col]
        for r in range(rank + 1, len(mat)):
            if mat[r][col] != 0:
                factor = mat[r][col] / pv
                mat[r] = [a - factor * b for a, b in zip(mat[r], mat[rank])]
        rank += 1
        col += 1
    return rank


def hermite_normal_form(rows: Sequence[Sequence[int]]) -> list[tuple[int, ...]]:
    """Row-style HNF of the lattice spanned by the rows.

    Pivots are positive, entries above each pivot are reduced modulo it, and
    zero rows are dropped; the result is the canonical basis of the row span.
    """
    mat = [list(map(int, row)) for row in rows if any(row)]
    if not mat:
        return []
    ncols = len(mat[0])
    r0 = 0
    for col in range(ncols):
        # Euclid among rows r >= r0 on this column
        while True:
            nz = [r for r in range(r0, len(mat)) if mat[r][col] != 0]
            if not nz:
                break
            if len(nz) == 1:
                r = nz[0]
                mat[r0], mat[r] = mat[r], mat[r0]
                break
            pr = min(nz, key=lambda r: abs(mat[r][col]))
            for r in nz:
                if r == pr:
                    continue
                qq = mat[r][col] // mat[pr][col]
                mat[r] = [a - qq * b for a, b in zip(mat[r], mat[pr])]
        if r0 < len(mat) and mat[r0][col] != 0:
            if mat[r0][col] < 0:
                mat[r0] = [-a for a in mat[r0]]
            pv = mat[r0][col]
            for r in range(r0):
                qq = mat[r][col] // pv
                if qq:
                    mat[r] = [a - qq * b for a, b in zip(mat[r], mat[r0])]
            r0 += 1
    return [tuple(row) for row in mat[:r0]]


def integer_kernel(rows: Sequence[Sequence[int]], ncols: int | None = None) -> list[tuple[int, ...]]:
    """Basis of the saturated lattice {x in Z^n : A x = 0}, in HNF.

    Unimodular column reduction: columns of the tracking matrix U whose image
    column becomes zero form a basis of the integer kernel; saturation is
    automatic because U is invertible over Z.
    """
    rows = [list(map(int, row)) for row in rows]
    if rows:
        n = len(rows[0])
    elif ncols is not None:
        n = ncols
    else:
        raise ValueError("empty system needs explicit ncols")
    cols = [[rows[r][c] for r in range(len(rows))] for c in range(n)]
    U = [[1 if i == c else 0 for i in range(n)] for c in range(n)]
    c0 = 0
    for r in range(len(rows)):
        while True:
            nz = [c for c in range(c0, n) if cols[c][r] != 0]
            if not nz:
                break
            if len(nz) == 1:
                c = nz[0]
                cols[c0], cols[c] = cols[c], cols[c0]
                U[c0], U[c] = U[c], U[c0]
                break
            pc = min(nz, key=lambda c: abs(cols[c][r]))
            for c in nz:
                if c == pc:
                    continue
                qq = cols[c][r] // cols[pc][r]
                cols[c] = [a - qq * b for a, b in zip(cols[c], cols[pc])]
                U[c] = [a - qq * b for a, b in zip(U[c], U[pc])]
        if c0 < n and cols[c0][r] != 0:
            c0 += 1
    kernel = [tuple(U[c]) for c in range(c0, n)]
    basis = hermite_normal_form(kernel)
    for row in basis:
        assert math.gcd(*row) == 1, f"saturation broken: row {row}"
    return basis


def _scaled_integer_rows(vectors: Sequence[RationalVector]) -> list[list[int]]:
    rows = []
    for vec in vectors:
        scale = math.lcm(*(x.denominator for x in vec))
        rows.append([int(x * scale) for x in vec])
    return rows


def resonance_module(vectors: Sequence[PeriodicVector]) -> list[tuple[int, ...]]:
    """Integer basis (HNF) of M = {k in Z^n : k.omega_i = 0 for all i}."""
    if not vectors:
        raise ValueError("resonance_module of an empty frame is all of Z^n")
    n = vectors[0].n
    omegas = [pv.omega for pv in vectors]
    if rational_rank(omegas) != len(omegas):
        raise ValueError("frame vectors must be linearly independent")
    basis = integer_kernel(_scaled_integer_rows(omegas), ncols=n)
    assert len(basis) == n - len(vectors)
    return basis


# -- resonance frames -------------------------------------------------------------


def _orthonormal_basis(int_rows: Sequence[Sequence[int]], n: int) -> np.ndarray:
    """Deterministic orthonormal basis (columns) of the real span of the rows."""
    if not int_rows:
        return np.zeros((n, 0))
    A = np.array(int_rows, dtype=float).T  # n x r
    Qm, Rm = np.linalg.qr(A)
    signs = np.sign(np.diag(Rm))
    signs[signs == 0] = 1.0
    return Qm * signs


@dataclass(frozen=True)
class ResonanceFrame:
    """Ordered independent periodic vectors with their resonance lattice data.

    ``module_basis`` spans M_j = {k : k.omega_i = 0 for all i} (rank n - j),
    ``lambda_basis`` holds an orthonormal basis of its real span as columns,
    and ``l_index`` is sup_i |T_i omega_i|_inf (= 1 for the empty frame).
    """

    vectors: tuple[PeriodicVector, ...]
    module_basis: tuple[tuple[int, ...], ...]
    lambda_basis: np.ndarray
    l_index: int
    n: int

    @classmethod
    def build(cls, vectors: Sequence[PeriodicVector], n: int | None = None) -> "ResonanceFrame":
        vectors = tuple(vectors)
        if vectors:
            n = vectors[0].n
            if any(pv.n != n for pv in vectors):
                raise ValueError("mixed dimensions in frame")
            module = tuple(resonance_module(vectors))
            l_index = max(
                max(abs(x) for x in pv.integer_vector()) for pv in vectors
            )
        else:
            if n is None:
                raise ValueError("empty frame needs explicit dimension")
            module = tuple(tuple(1 if i == j else 0 for i in range(n)) for j in range(n))
            l_index = 1
        basis = _orthonormal_basis(module, n)
        return cls(vectors, module, basis, int(l_index), n)

    @property
    def j(self) -> int:
        return len(self.vectors)

    def extended(self, pv: PeriodicVector) -> "ResonanceFrame":
        return ResonanceFrame.build(self.vectors + (pv,))


def projections(frame: ResonanceFrame) -> tuple[np.ndarray, np.ndarray]:
    """Orthogonal projections (Pi onto Lambda_j, Pi_perp onto its complement)."""
    E = frame.lambda_basis
    Pi = E @ E.T
    return Pi, np.eye(frame.n) - Pi


# -- rational subspaces and G^L(n, k) ----------------------------------------------


@dataclass(frozen=True)
class RationalSubspace:
    """A k-dimensional subspace given by integer normals spanning its complement."""

    normals: tuple[tuple[int, ...], ...]
    n: int

    def __post_init__(self) -> None:
        for u in self.normals:
            if len(u) != self.n:
                raise ValueError("normal dimension mismatch")
            if not any(u):
                raise ValueError("zero normal vector")
        if self.normals and rational_rank(
            [[Fraction(x) for x in u] for u in self.normals]
        ) != len(self.normals):
            raise ValueError("normals must be linearly independent")

    @property
    def dim(self) -> int:
        return self.n - len(self.normals)

    def lattice_key(self) -> tuple[tuple[int, ...], ...]:
        """Canonical identifier: HNF basis of the subspace's integer points."""
        if not self.normals:
            return tuple(
                tuple(1 if i == j else 0 for i in range(self.n)) for j in range(self.n)
            )
        return tuple(integer_kernel(list(self.normals), ncols=self.n))


def subspace_in_GL(s: RationalSubspace, L: int) -> bool:
    """Membership in G^L(n, k): the complement admits a spanning set of
    integer vectors with l1-norm at most L, decided by exhaustive enumeration."""
    if L < 1:
        raise ValueError("L must be >= 1")
    m = len(s.normals)
    if m == 0:
        return True  # empty spanning condition holds vacuously
    normal_rows = [[Fraction(x) for x in u] for u in s.normals]
    found: list[tuple[int, ...]] = []
    for u in lattice_vectors_l1(s.n, L):
        if rational_rank(normal_rows + [[Fraction(x) for x in u]]) == m:
            found.append(u)
            if rational_rank([[Fraction(x) for x in w] for w in found]) == m:
                return True
    return False


def lattice_vectors_l1(n: int, L: int) -> Iterable[tuple[int, ...]]:
    """Nonzero integer vectors with |u|_1 <= L (both signs), lexicographic."""
    rng = range(-L, L + 1)
    for u in product(rng, repeat=n):
        if any(u) and sum(abs(x) for x in u) <= L:
            yield u


def primitive_vectors_l1(n: int, L: int) -> list[tuple[int, ...]]:
    """Primitive (gcd 1) vectors with |u|_1 <= L, one per +-pair, sorted."""
    out = set()
    for u in lattice_vectors_l1(n, L):
        if math.gcd(*u) != 1:
            continue
        first = next(x for x in u if x != 0)
        out.add(u if first > 0 else tuple(-x for x in u))
    return sorted(out)


def enumerate_GL(n: int, k: int, L: int) -> list[RationalSubspace]:
    """All subspaces in G^L(n, k), deduplicated by their integer-point lattice."""
    if not 1 <= k <= n:
        raise ValueError("k must lie in 1..n")
    if k == n:
        return [RationalSubspace((), n)]
    m = n - k
    prims = primitive_vectors_l1(n, L)
    seen: dict[tuple, RationalSubspace] = {}
    for combo in combinations(prims, m):
        if rational_rank([[Fraction(x) for x in u] for u in combo]) != m:
            continue
        sub = RationalSubspace(tuple(combo), n)
        key = sub.lattice_key()
        if key not in seen:
            seen[key] = sub
    return [seen[key] for key in sorted(seen)]
