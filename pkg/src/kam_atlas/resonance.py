"""Resonance lattice geometry: generator enumeration, unimodular frame
completion, covering parameters, and the classification of action points
into non-resonant, simply-resonant, and doubly-resonant zones."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np

from .potential import FourierPotential, cutoff_N, is_generator, norm1

__all__ = [
    "enumerate_generators",
    "BezoutFrame",
    "bezout_complete",
    "CoveringParams",
    "ZoneLabel",
    "classify",
    "classify_batch",
    "ZoneParams",
    "zone_params",
    "transverse_form",
    "TransverseForm",
]


# ---------------------------------------------------------------------------
# Generators of 1d maximal lattices
# ---------------------------------------------------------------------------


@lru_cache(maxsize=128)
def _generators_cached(n: int, K: int) -> tuple[tuple[int, ...], ...]:
    out = []
    for k in itertools.product(range(-K, K + 1), repeat=n):
        if norm1(k) > K:
            continue
        if is_generator(k):
            out.append(k)
    out.sort()
    return tuple(out)


def enumerate_generators(n: int, K: int) -> list[tuple[int, ...]]:
    """All sign-normalized primitive integer vectors with |k|_1 <= K,
    lexicographically ordered.  No two returned vectors are parallel."""
    if n < 2:
        raise ValueError("need n >= 2")
    if K < 0:
        raise ValueError("need K >= 0")
    return list(_generators_cached(int(n), int(K)))


# ---------------------------------------------------------------------------
# Bezout frame completion
# ---------------------------------------------------------------------------


def _int_det(rows: Sequence[Sequence[int]]) -> int:
    """Exact determinant of a small integer matrix (fraction-free expansion)."""
    m = [[Fraction(v) for v in row] for row in rows]
    n = len(m)
    det = Fraction(1)
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col] != 0), None)
        if piv is None:
            return 0
        if piv != col:
            m[col], m[piv] = m[piv], m[col]
            det = -det
        det *= m[col][col]
        inv = 1 / m[col][col]
        for r in range(col + 1, n):
            factor = m[r][col] * inv
            if factor:
                m[r] = [a - factor * b for a, b in zip(m[r], m[col])]
    assert det.denominator == 1
    return int(det)


def _int_inverse(rows: Sequence[Sequence[int]]) -> list[list[int]]:
    """Exact inverse of a unimodular integer matrix."""
    n = len(rows)
    aug = [[Fraction(v) for v in row] + [Fraction(int(i == j)) for j in range(n)]
           for i, row in enumerate(rows)]
    for col in range(n):
        piv = next(r for r in range(col, n) if aug[r][col] != 0)
        aug[col], aug[piv] = aug[piv], aug[col]
        inv = 1 / aug[col][col]
        aug[col] = [a * inv for a in aug[col]]
        for r in range(n):
            if r != col and aug[r][col]:
                factor = aug[r][col]
                aug[r] = [a - factor * b for a, b in zip(aug[r], aug[col])]
    out = [[aug[i][n + j] for j in range(n)] for i in range(n)]
    assert all(v.denominator == 1 for row in out for v in row)
    return [[int(v) for v in row] for row in out]


def _minimal_bezout(d: int, b: int) -> tuple[int, int]:
    """(u, v) with u d + v b = 1 and |v| <= d/2 (v = 0 when d == 1)."""
    g, u, v = _ext_gcd(d, b)
    assert g == 1
    if d > 1:
        t = round(v / d)  # shift v into [-d/2, d/2]; u follows
        v -= t * d
        u += t * b
    return u, v


def _ext_gcd(a: int, b: int) -> tuple[int, int, int]:
    if b == 0:
        return (a, 1, 0) if a >= 0 else (-a, -1, 0)
    g, x, y = _ext_gcd(b, a % b)
    return g, y, x - (a // b) * y


def _complete_first_row(k: tuple[int, ...]) -> list[list[int]]:
    """Integer matrix with first row k and determinant +-1, completion rows
    bounded by |k|_inf.  Recursive reduction on the last coordinate."""
    n = len(k)
    if n == 1:
        return [[k[0]]]
    head, last = k[:-1], k[-1]
    d = math.gcd(*[abs(c) for c in head]) if any(head) else 0
    if d == 0:
        # k = (0, ..., 0, +-1)
        rows = [list(k)] + [[int(j == i) for j in range(n)] for i in range(n - 1)]
    else:
        kp = tuple(c // d for c in head)
        B = _complete_first_row(kp)
        u, v = _minimal_bezout(d, last)
        rows = [list(k)]
        rows += [list(row) + [0] for row in B[1:]]
        rows.append([-v * c for c in kp] + [u])
    if n >= 2 and _int_det(rows) == -1:
        rows[-1] = [-c for c in rows[-1]]
    return rows


@dataclass(frozen=True)
class BezoutFrame:
    """Unimodular completion of a generator: an SL(n, Z) matrix whose first
    row is k, together with its exact inverse and norm data."""

    k: tuple[int, ...]
    matrix: tuple[tuple[int, ...], ...]       # A, first row k, det A = 1
    inverse: tuple[tuple[int, ...], ...]      # A^{-1}, exact

    @property
    def completion(self) -> tuple[tuple[int, ...], ...]:
        """The (n-1) x n sub-block below the first row."""
        return self.matrix[1:]

    @property
    def completion_max(self) -> int:
        return max(abs(v) for row in self.completion for v in row)

    @property
    def inverse_max(self) -> int:
        return max(abs(v) for row in self.inverse for v in row)

    def as_array(self) -> np.ndarray:
        return np.array(self.matrix, dtype=float)

    def completion_array(self) -> np.ndarray:
        return np.array(self.completion, dtype=float)


def bezout_complete(k) -> BezoutFrame:
    """Complete a generator k to a frame A in SL(n, Z) with first row k.

    Guarantees det A = 1, |completion|_inf <= |k|_inf, and
    |A^{-1}|_inf <= (n-1)^{(n-1)/2} |k|_inf^{n-1}.
    """
    k = tuple(int(c) for c in k)
    if not is_generator(k):
        raise ValueError(f"{k} is not a generator")
    rows = _complete_first_row(k)
    det = _int_det(rows)
    if det != 1:
        raise AssertionError(f"frame completion failed for {k}: det={det}")
    inv = _int_inverse(rows)
    frame = BezoutFrame(
        k=k,
        matrix=tuple(tuple(r) for r in rows),
        inverse=tuple(tuple(r) for r in inv),
    )
    kinf = max(abs(c) for c in k)
    n = len(k)
    if frame.completion_max > kinf:
        raise AssertionError(f"completion norm bound violated for {k}")
    if frame.inverse_max > (n - 1) ** ((n - 1) / 2) * kinf ** (n - 1) + 1e-9:
        raise AssertionError(f"inverse norm bound violated for {k}")
    return frame


# ---------------------------------------------------------------------------
# Covering parameters and zone classification
# ---------------------------------------------------------------------------


def _c1(n: int) -> float:
    return 5.0 * n * (n - 1) ** ((n - 1) / 2)


def _c2(n: int) -> float:
    return 4.0 * n ** 1.5 * _c1(n)


@dataclass(frozen=True)
class CoveringParams:
    """Parameters of the three-zone covering of the action ball.

    By default the resonance width is alpha = sqrt(eps) K^nu with
    nu = 9n/2 + 2.  An explicit ``alpha`` may be supplied for desk-scale
    studies where the default would exceed 1 and void the covering; the
    ell-test threshold multiplier (default 3) is likewise adjustable.
    """

    n: int
    eps: float
    K0: int
    K: int
    alpha: float | None = None
    ell_multiplier: float = 3.0

    def __post_init__(self):
        if self.K0 < 2:
            raise ValueError("K0 must be >= 2")
        if self.K < 6 * self.K0:
            raise ValueError("K must be >= 6 K0")
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if self.alpha is None:
            object.__setattr__(self, "alpha", math.sqrt(self.eps) * self.K ** self.nu)
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")

    @property
    def nu(self) -> float:
        return 4.5 * self.n + 2.0

    @property
    def gamma(self) -> float:
        return 11.0 * self.n + 4.0

    @property
    def r_o(self) -> float:
        return self.alpha / (16.0 * self.K0)

    def r_k(self, k) -> float:
        return self.alpha / float(np.linalg.norm(np.asarray(k, dtype=float)))

    def low_generators(self) -> list[tuple[int, ...]]:
        return enumerate_generators(self.n, self.K0)

    def high_generators(self) -> list[tuple[int, ...]]:
        return enumerate_generators(self.n, self.K)


@dataclass(frozen=True)
class ZoneLabel:
    """Classification of one action point.

    tag is one of "non-resonant", "simply-resonant", "doubly-resonant"; for
    simple resonance the lexicographically smallest qualifying generator is
    the witness and all qualifying generators are listed."""

    tag: str
    witness: tuple[int, ...] | None = None
    qualifying: tuple[tuple[int, ...], ...] = ()
    margin_nonresonant: float = math.nan   # min_k |y.k| - alpha/2
    margin_simple: float = math.nan        # min_ell |P_k^perp y . ell| - threshold


def classify(y, p: CoveringParams) -> ZoneLabel:
    """Classify an action point |y| < 1 against the covering of parameters p."""
    y = np.asarray(y, dtype=float)
    if np.linalg.norm(y) >= 1.0:
        raise ValueError("classification is defined on the open unit ball")
    lows = p.low_generators()
    dots = np.array([abs(float(np.dot(y, k))) for k in lows])
    margin_nr = float(np.min(dots) - p.alpha / 2.0)
    if np.all(dots > p.alpha / 2.0):
        return ZoneLabel("non-resonant", margin_nonresonant=margin_nr)
    highs = p.high_generators()
    qualifying = []
    best_margin = -math.inf
    for k, d in zip(lows, dots):
        if d >= p.alpha:
            continue
        kv = np.asarray(k, dtype=float)
        knorm = float(np.linalg.norm(kv))
        y_perp = y - (np.dot(y, kv) / knorm ** 2) * kv
        threshold = p.ell_multiplier * p.alpha * p.K / knorm
        worst = math.inf
        ok = True
        for ell in highs:
            if _parallel(ell, k):
                continue
            val = abs(float(np.dot(y_perp, ell)))
            worst = min(worst, val - threshold)
            if val <= threshold:
                ok = False
                break
        best_margin = max(best_margin, worst)
        if ok:
            qualifying.append(k)
    if qualifying:
        return ZoneLabel("simply-resonant", witness=qualifying[0],
                         qualifying=tuple(qualifying),
                         margin_nonresonant=margin_nr, margin_simple=best_margin)
    return ZoneLabel("doubly-resonant", margin_nonresonant=margin_nr,
                     margin_simple=best_margin)


def _parallel(a, b) -> bool:
    # integer vectors are parallel iff all 2x2 minors vanish
    a = tuple(int(c) for c in a)
    b = tuple(int(c) for c in b)
    n = len(a)
    for i in range(n):
        for j in range(i + 1, n):
            if a[i] * b[j] - a[j] * b[i] != 0:
                return False
    return True


ZONE_CODES = {"non-resonant": 0, "simply-resonant": 1, "doubly-resonant": 2}


def classify_batch(Y: np.ndarray, p: CoveringParams) -> np.ndarray:
    """Vectorized zone codes (0, 1, 2) for a batch of points inside the ball.

    Used by the Monte Carlo measure estimators; semantics identical to
    ``classify`` without per-point witnesses."""
    Y = np.asarray(Y, dtype=float)
    lows = p.low_generators()
    Kmat = np.array(lows, dtype=float).T             # (n, m)
    D = np.abs(Y @ Kmat)                             # (N, m)
    nonres = np.all(D > p.alpha / 2.0, axis=1)
    codes = np.full(Y.shape[0], 2, dtype=np.int8)
    codes[nonres] = 0
    highs = np.array(p.high_generators(), dtype=float)
    pending = ~nonres
    for j, k in enumerate(lows):
        cand = pending & (D[:, j] < p.alpha)
        if not np.any(cand):
            continue
        kv = np.asarray(k, dtype=float)
        knorm2 = float(kv @ kv)
        knorm = math.sqrt(knorm2)
        pts = Y[cand]
        perp = pts - np.outer((pts @ kv) / knorm2, kv)
        mask = ~_parallel_mask(highs, kv)
        vals = np.abs(perp @ highs[mask].T)
        ok = np.all(vals > p.ell_multiplier * p.alpha * p.K / knorm, axis=1)
        idx = np.where(cand)[0][ok]
        codes[idx] = 1
        pending[idx] = False
    return codes


def _parallel_mask(highs: np.ndarray, kv: np.ndarray) -> np.ndarray:
    cross = highs * np.linalg.norm(kv) ** 2 - np.outer(highs @ kv, kv)
    return np.all(np.abs(cross) < 1e-9, axis=1)


# ---------------------------------------------------------------------------
# Per-generator zone parameters and the transverse quadratic form
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ZoneParams:
    """Derived quantities of one simple-resonance zone."""

    k: tuple[int, ...]
    R: float
    r: float
    eps_k: float
    eps_bar: float
    beta_bar: float
    chi_k: float
    s_bar: float
    s_hat: float
    mu: float
    kappa: float
    low_mode: bool
    checks: dict = field(default_factory=dict)

    def domain_description(self) -> str:
        return ("external actions: |P_k^perp A_hat^T a| < 1 and "
                "|(P_k^perp A_hat^T a) . ell| >= 3 alpha K / |k| for every "
                "non-parallel ell with |ell|_1 <= K; first action in (-R, R)")


def zone_params(k, p: CoveringParams, f: FourierPotential, beta: float,
                delta: float = 1.0) -> ZoneParams:
    """Evaluate the zone parameter table for one generator.

    The low/high mode branch is decided by |k|_1 against the Fourier cutoff
    at (delta; s, n).  ``beta`` is the Morse constant of the low-mode
    projections.
    """
    k = tuple(int(c) for c in k)
    if norm1(k) > p.K0:
        raise ValueError("zone parameters are defined for |k|_1 <= K0")
    knorm2 = float(sum(c * c for c in k))
    n = p.n
    c2 = _c2(n)
    R = p.alpha / knorm2
    r = R / c2
    eps_k = 2.0 * p.eps / knorm2
    N = cutoff_N(delta, f.s, n)
    low = norm1(k) < N
    cs = max(1.0, 1.0 / f.s)
    fk = abs(f.coeffs.get(k, 0.0))
    chi = 1.0 if low else fk
    beta_bar = eps_k * (beta if low else fk)
    eps_bar = cs * eps_k * chi
    s_bar = min(f.s / 2.0, 1.0) if low else 1.0
    s_star = f.s * (1.0 - 1.0 / p.K) ** 2
    s_hat = norm1(k) * s_star if low else 1.0
    mu = float(p.K) ** (-5.0 * n)
    kappa = max(c2, 4.0 * cs, cs / beta)
    checks = {
        "sqrt_eps_bar_lt_R_over_K": math.sqrt(eps_bar) < R / p.K ** (4.5 * n),
        "s_bar_in_range": 1.0 / kappa <= s_bar <= 1.0,
        "R_over_r_in_range": 1.0 <= R / r <= kappa * (1.0 + 1e-12),
    }
    return ZoneParams(k=k, R=R, r=r, eps_k=eps_k, eps_bar=eps_bar,
                      beta_bar=beta_bar, chi_k=chi, s_bar=s_bar, s_hat=s_hat,
                      mu=mu, kappa=kappa, low_mode=low, checks=checks)


@dataclass(frozen=True)
class TransverseForm:
    """Positive-definite quadratic form in the external actions: the kinetic
    block transverse to the resonance, with its Hessian and certified bounds."""

    k: tuple[int, ...]
    hessian: np.ndarray          # (n-1) x (n-1), constant
    det: float
    det_lower_bound: float       # |k|^{-2n}
    norm_upper_bound: float      # 2 n^5 + 1

    def value(self, a_hat) -> float:
        a_hat = np.asarray(a_hat, dtype=float)
        return 0.5 * float(a_hat @ self.hessian @ a_hat)


def transverse_form(k) -> TransverseForm:
    """Hessian 2 (A_hat P_k^perp A_hat^T) / |k|^2 of the transverse kinetic
    form, with the determinant lower bound |k|^{-2n} checked."""
    frame = bezout_complete(k)
    kv = np.asarray(frame.k, dtype=float)
    n = len(frame.k)
    knorm2 = float(kv @ kv)
    P_perp = np.eye(n) - np.outer(kv, kv) / knorm2
    A_hat = frame.completion_array()
    H = 2.0 * (A_hat @ P_perp @ A_hat.T) / knorm2
    H = 0.5 * (H + H.T)
    det = float(np.linalg.det(H))
    d_k = knorm2 ** (-n)
    norm = float(np.linalg.norm(H, 2))
    if det < d_k * (1.0 - 1e-9):
        raise AssertionError(f"transverse determinant below |k|^-2n for {frame.k}")
    if norm > 2.0 * n ** 5 + 1.0:
        raise AssertionError(f"transverse Hessian norm bound violated for {frame.k}")
    eigs = np.linalg.eigvalsh(H)
    if np.min(eigs) <= 0:
        raise AssertionError("transverse form is not positive definite")
    return TransverseForm(k=frame.k, hessian=H, det=det, det_lower_bound=d_k,
                          norm_upper_bound=2.0 * n ** 5 + 1.0)
