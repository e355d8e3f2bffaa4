"""Finite Fourier representations of real-analytic periodic potentials.

A potential is a zero-average trigonometric series on the n-torus with a
decay weight s.  This module evaluates such series, projects them onto
resonance lines (yielding periodic functions of one variable), analyzes the
Morse structure of those projections, and verifies the quantitative
genericity conditions (coefficient lower bounds at high modes, beta-Morse
projections at low modes).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np
from scipy.optimize import minimize_scalar

__all__ = [
    "NotMorseError",
    "OneDSeries",
    "MorseProfile",
    "FourierPotential",
    "cutoff_N",
    "morse_analyze",
    "check_genericity",
    "GenericityCheck",
    "GenericityReport",
]


class NotMorseError(ValueError):
    """A series failed the Morse requirements (degenerate critical point or
    coinciding critical values)."""


def norm1(k: Iterable[int]) -> int:
    return int(sum(abs(int(c)) for c in k))


def is_generator(k: Iterable[int]) -> bool:
    """True for a sign-normalized primitive integer vector.

    The first nonzero component must be positive and the gcd of all
    components must equal 1.
    """
    k = tuple(int(c) for c in k)
    if all(c == 0 for c in k):
        return False
    first = next(c for c in k if c != 0)
    if first < 0:
        return False
    return math.gcd(*[abs(c) for c in k]) == 1


# ---------------------------------------------------------------------------
# One-dimensional series (projections onto a resonance line)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OneDSeries:
    """Zero-average trigonometric polynomial sum_j c_j e^{i j theta}.

    Coefficients are stored for nonzero integer harmonics j and satisfy the
    reality constraint c_{-j} = conj(c_j), so evaluation is real.
    """

    coeffs: Mapping[int, complex] = field(default_factory=dict)

    def __post_init__(self):
        clean: dict[int, complex] = {}
        for j, c in self.coeffs.items():
            j = int(j)
            if j == 0:
                raise ValueError("series must have zero average (no j=0 term)")
            c = complex(c)
            if c != 0:
                clean[j] = c
        scale = max((abs(c) for c in clean.values()), default=0.0)
        for j, c in clean.items():
            other = clean.get(-j, 0.0)
            if abs(other - c.conjugate()) > 1e-12 * max(scale, 1e-300):
                raise ValueError(f"reality violated at harmonic {j}")
        object.__setattr__(self, "coeffs", clean)

    @classmethod
    def from_cos_sin(cls, cos_amps: Mapping[int, float] | None = None,
                     sin_amps: Mapping[int, float] | None = None) -> "OneDSeries":
        """Build from real amplitudes: sum_j a_j cos(j theta) + b_j sin(j theta)."""
        coeffs: dict[int, complex] = {}
        for j, a in (cos_amps or {}).items():
            j = abs(int(j))
            coeffs[j] = coeffs.get(j, 0.0) + a / 2.0
            coeffs[-j] = coeffs.get(-j, 0.0) + a / 2.0
        for j, b in (sin_amps or {}).items():
            j = abs(int(j))
            coeffs[j] = coeffs.get(j, 0.0) - 1j * b / 2.0
            coeffs[-j] = coeffs.get(-j, 0.0) + 1j * b / 2.0
        return cls(coeffs)

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    @property
    def max_harmonic(self) -> int:
        return max((abs(j) for j in self.coeffs), default=0)

    def __call__(self, theta):
        theta = np.asarray(theta, dtype=float)
        out = np.zeros_like(theta, dtype=float)
        for j, c in self.coeffs.items():
            if j < 0:
                continue
            out = out + 2.0 * (c.real * np.cos(j * theta) - c.imag * np.sin(j * theta))
        return out if out.ndim else float(out)

    def derivative(self, order: int = 1) -> "OneDSeries":
        return OneDSeries({j: c * (1j * j) ** order for j, c in self.coeffs.items()})

    def derivative_at(self, theta, order: int) -> float:
        """Exact-coefficient derivative of the series evaluated at theta."""
        val = 0.0 + 0.0j
        for j, c in self.coeffs.items():
            val += c * (1j * j) ** order * np.exp(1j * j * theta)
        return float(val.real)

    def scaled(self, lam: float) -> "OneDSeries":
        return OneDSeries({j: lam * c for j, c in self.coeffs.items()})

    def __add__(self, other: "OneDSeries") -> "OneDSeries":
        coeffs = dict(self.coeffs)
        for j, c in other.coeffs.items():
            coeffs[j] = coeffs.get(j, 0.0) + c
        return OneDSeries(coeffs)

    def sup_bound(self) -> float:
        """Crude sup bound sum |c_j| (used for validation margins)."""
        return float(sum(abs(c) for c in self.coeffs.values()))

    def max_abs(self, samples: int = 8192) -> float:
        """Numerical sup of |g| on the circle (dense grid, no refinement)."""
        theta = np.linspace(0.0, 2.0 * np.pi, samples, endpoint=False)
        return float(np.max(np.abs(self(theta))))


# ---------------------------------------------------------------------------
# Morse analysis
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MorseProfile:
    """Critical-point portrait of a one-variable trigonometric polynomial.

    Angles are listed on [theta_0, theta_0 + 2 pi) starting at the global
    maximum, alternating maxima (even indices) and minima (odd indices).
    ``beta`` is the quantitative Morse constant: the smaller of
    min(|g'| + |g''|) over the circle and the minimal gap between critical
    values.
    """

    angles: tuple[float, ...]
    values: tuple[float, ...]
    count: int
    beta: float
    deriv_floor: float
    value_gap: float
    curvature_max: float
    cosine_shift: float | None = None
    cosine_residual_bound: float | None = None

    @property
    def count_bound_curvature(self) -> float:
        """Upper bound pi * sqrt(2 max|g''| / beta) on the number of criticals."""
        return math.pi * math.sqrt(2.0 * self.curvature_max / self.beta)

    @property
    def count_bound_generic(self) -> float:
        """The bound max{4, pi sqrt(8/beta)}, valid whenever max|g''| <= 4."""
        return max(4.0, math.pi * math.sqrt(8.0 / self.beta))

    @property
    def global_max(self) -> float:
        return self.values[0]

    @property
    def global_min(self) -> float:
        return min(self.values)


_SCAN_SAMPLES = 1 << 12   # critical-point bracketing resolution
_MIN_SAMPLES = 1 << 13    # grid for the |g'|+|g''| floor
_BISECT_TOL = 1e-13


def _bisect_root(fun, lo, hi, flo):
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if hi - lo < _BISECT_TOL:
            return mid
        fm = fun(mid)
        if fm == 0.0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _critical_points(g: OneDSeries) -> list[float]:
    g1 = g.derivative(1)
    g2 = g.derivative(2)
    theta = np.linspace(0.0, 2.0 * np.pi, _SCAN_SAMPLES, endpoint=False)
    d = g1(theta)
    roots: list[float] = []
    step = 2.0 * np.pi / _SCAN_SAMPLES
    for i in range(_SCAN_SAMPLES):
        a, b = theta[i], theta[i] + step
        fa, fb = d[i], d[(i + 1) % _SCAN_SAMPLES]
        if fa == 0.0:
            roots.append(a)
            continue
        if fa * fb < 0.0:
            r = _bisect_root(g1, a, b, fa)
            curv = g2(r)
            if curv != 0.0:
                r = r - g1(r) / curv  # one Newton polish
            roots.append(r % (2.0 * np.pi))
    roots.sort()
    # merge near-duplicates (including wrap-around)
    merged: list[float] = []
    for r in roots:
        if merged and abs(r - merged[-1]) < 1e-9:
            continue
        merged.append(r)
    if len(merged) > 1 and abs((merged[0] + 2.0 * np.pi) - merged[-1]) < 1e-9:
        merged.pop()
    return merged


def _derivative_floor(g: OneDSeries) -> float:
    """min over the circle of |g'| + |g''|, grid scan plus local refinement."""
    g1 = g.derivative(1)
    g2 = g.derivative(2)

    def fun(t):
        return abs(float(g1(t))) + abs(float(g2(t)))

    theta = np.linspace(0.0, 2.0 * np.pi, _MIN_SAMPLES, endpoint=False)
    vals = np.abs(g1(theta)) + np.abs(g2(theta))
    step = 2.0 * np.pi / _MIN_SAMPLES
    order = np.argsort(vals)[:8]
    best = float(np.min(vals))
    for i in order:
        lo, hi = theta[i] - step, theta[i] + step
        res = minimize_scalar(fun, bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-12})
        best = min(best, float(res.fun))
    return best


def morse_analyze(g: OneDSeries, *, distinct_tol: float = 1e-10) -> MorseProfile:
    """Locate all critical points of g and compute its Morse constant.

    Raises NotMorseError when a critical point is degenerate (second
    derivative below tolerance) or two critical values coincide within
    ``distinct_tol * max|g|``.
    """
    if g.is_zero:
        raise NotMorseError("series is identically zero")
    g2 = g.derivative(2)
    crits = _critical_points(g)
    if not crits:
        raise NotMorseError("no critical points found")
    scale = g.max_abs()
    curv_scale = max(float(np.max(np.abs(g2(np.linspace(0, 2 * np.pi, 4096, endpoint=False))))), 1e-300)
    for t in crits:
        if abs(float(g2(t))) < 1e-10 * curv_scale:
            raise NotMorseError(f"degenerate critical point at theta={t:.12f}")
    values = [float(g(t)) for t in crits]
    svals = sorted(values)
    gap = min((b - a for a, b in zip(svals, svals[1:])), default=math.inf)
    if gap < distinct_tol * scale:
        raise NotMorseError(f"critical values coincide within tolerance (gap={gap:.3e})")
    # rotate so the list starts at the global maximum
    i0 = int(np.argmax(values))
    crits = crits[i0:] + [t + 2.0 * np.pi for t in crits[:i0]]
    values = values[i0:] + values[:i0]
    if len(crits) % 2 != 0:
        raise NotMorseError("odd number of critical points (scan inconsistency)")
    for i, t in enumerate(crits):
        curv = float(g2(t))
        if (i % 2 == 0 and curv >= 0) or (i % 2 == 1 and curv <= 0):
            raise NotMorseError("maxima/minima do not alternate as expected")
    floor = _derivative_floor(g)
    beta = min(floor, gap)
    shift = None
    residual = None
    c1 = g.coeffs.get(1)
    if c1:
        amp = 2.0 * abs(c1)
        shift = float(np.angle(c1)) % (2.0 * np.pi)
        residual = sum(abs(c) * math.exp(abs(j)) for j, c in g.coeffs.items()
                       if abs(j) >= 2) / amp
    return MorseProfile(
        angles=tuple(crits),
        values=tuple(values),
        count=len(crits),
        beta=beta,
        deriv_floor=floor,
        value_gap=gap,
        curvature_max=curv_scale,
        cosine_shift=shift,
        cosine_residual_bound=residual,
    )


# ---------------------------------------------------------------------------
# Potentials on the n-torus
# ---------------------------------------------------------------------------


def _as_key(k) -> tuple[int, ...]:
    return tuple(int(c) for c in k)


@dataclass(frozen=True)
class FourierPotential:
    """Real zero-average trigonometric series f(x) = sum_k f_k e^{i k.x} on T^n.

    The coefficient map is finite; reality requires f_{-k} = conj(f_k) for
    every stored mode.  ``generator_rule`` records how a prototype family was
    materialized (kept for provenance in serialized documents).
    """

    n: int
    s: float
    coeffs: Mapping[tuple[int, ...], complex] = field(default_factory=dict)
    generator_rule: str | None = None

    def __post_init__(self):
        if int(self.n) < 2:
            raise ValueError("dimension n must be >= 2")
        if not self.s > 0:
            raise ValueError("decay s must be positive")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "s", float(self.s))
        clean: dict[tuple[int, ...], complex] = {}
        for k, c in self.coeffs.items():
            k = _as_key(k)
            if len(k) != self.n:
                raise ValueError(f"mode {k} has wrong dimension")
            if all(c_ == 0 for c_ in k):
                raise ValueError("zero-average violated: mode k=0 present")
            c = complex(c)
            if c != 0:
                clean[k] = c
        scale = max((abs(c) for c in clean.values()), default=0.0)
        for k, c in clean.items():
            mk = tuple(-c_ for c_ in k)
            other = clean.get(mk, 0.0)
            if abs(other - c.conjugate()) > 1e-12 * max(scale, 1e-300):
                raise ValueError(f"reality violated at mode {k}")
        object.__setattr__(self, "coeffs", clean)

    # -- construction -------------------------------------------------------

    @classmethod
    def prototype(cls, n: int, s: float, cap: int = 32) -> "FourierPotential":
        """The model generic potential 2 sum_{k generator} e^{-|k|_1 s} cos(k.x).

        Modes are materialized for every generator with |k|_1 <= cap.
        """
        from .resonance import enumerate_generators

        coeffs: dict[tuple[int, ...], complex] = {}
        for k in enumerate_generators(n, cap):
            a = math.exp(-norm1(k) * s)
            coeffs[k] = a
            coeffs[tuple(-c for c in k)] = a
        return cls(n=n, s=s, coeffs=coeffs, generator_rule=f"prototype(cap={cap})")

    @classmethod
    def from_cosines(cls, n: int, s: float,
                     modes: Mapping[tuple[int, ...], float]) -> "FourierPotential":
        """Build from real cosine amplitudes: f = sum_k a_k cos(k.x)."""
        coeffs: dict[tuple[int, ...], complex] = {}
        for k, a in modes.items():
            k = _as_key(k)
            mk = tuple(-c for c in k)
            coeffs[k] = coeffs.get(k, 0.0) + a / 2.0
            coeffs[mk] = coeffs.get(mk, 0.0) + a / 2.0
        return cls(n=n, s=s, coeffs=coeffs)

    # -- basic queries -------------------------------------------------------

    @property
    def support_radius(self) -> int:
        return max((norm1(k) for k in self.coeffs), default=0)

    def norm_s(self) -> float:
        """Weighted sup norm sup_k |f_k| e^{|k|_1 s}."""
        return max((abs(c) * math.exp(norm1(k) * self.s)
                    for k, c in self.coeffs.items()), default=0.0)

    def evaluate(self, x) -> float:
        """Evaluate f at a point (or batch of points) of the n-torus."""
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        pts = x[None, :] if single else x
        if pts.shape[-1] != self.n:
            raise ValueError("point has wrong dimension")
        out = np.zeros(pts.shape[0])
        for k, c in self.coeffs.items():
            if not _first_nonzero_positive(k):
                continue  # the conjugate partner is folded into the real form
            phase = pts @ np.asarray(k, dtype=float)
            out += 2.0 * (c.real * np.cos(phase) - c.imag * np.sin(phase))
        return float(out[0]) if single else out

    def evaluate_complex(self, x) -> complex:
        """Literal complex sum (exposes the residual imaginary part)."""
        x = np.asarray(x, dtype=float)
        total = 0.0 + 0.0j
        for k, c in self.coeffs.items():
            total += c * np.exp(1j * float(np.dot(k, x)))
        return complex(total)

    def project(self, k) -> OneDSeries:
        """Projection onto the line Z k: theta -> sum_j f_{j k} e^{i j theta}."""
        k = _as_key(k)
        if not is_generator(k):
            raise ValueError(f"{k} is not a generator (primitive, sign-normalized)")
        nk = norm1(k)
        coeffs: dict[int, complex] = {}
        jmax = self.support_radius // nk if nk else 0
        for j in range(-jmax, jmax + 1):
            if j == 0:
                continue
            c = self.coeffs.get(tuple(j * c_ for c_ in k))
            if c:
                coeffs[j] = c
        return OneDSeries(coeffs)

    # -- serialization -------------------------------------------------------

    def to_json_dict(self) -> dict:
        modes = [{"k": list(k), "re": c.real, "im": c.imag}
                 for k, c in sorted(self.coeffs.items())]
        doc = {"n": self.n, "s": self.s, "modes": modes}
        if self.generator_rule is not None:
            doc["generator"] = self.generator_rule
        return doc

    @classmethod
    def from_json_dict(cls, doc: Mapping) -> "FourierPotential":
        coeffs = {tuple(int(c) for c in m["k"]): complex(m["re"], m.get("im", 0.0))
                  for m in doc["modes"]}
        return cls(n=int(doc["n"]), s=float(doc["s"]), coeffs=coeffs,
                   generator_rule=doc.get("generator"))

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "FourierPotential":
        with open(path) as fh:
            return cls.from_json_dict(json.load(fh))


def _first_nonzero_positive(k: tuple[int, ...]) -> bool:
    for c in k:
        if c != 0:
            return c > 0
    return False


# ---------------------------------------------------------------------------
# Fourier cut-off and genericity verification
# ---------------------------------------------------------------------------


def cutoff_N(delta: float, s: float, n: int) -> float:
    """Mode-size threshold separating the coefficient-bound check from the
    Morse check: 2 max{1, (1/s) log(c_n / (s^n delta))}, c_n = 2^44 (2n/e)^n.
    """
    if not (0.0 < delta <= 1.0):
        raise ValueError("delta must lie in (0, 1]")
    if not s > 0 or n < 1:
        raise ValueError("require s > 0 and n >= 1")
    c_n = 2.0 ** 44 * (2.0 * n / math.e) ** n
    return 2.0 * max(1.0, math.log(c_n / (s ** n * delta)) / s)


@dataclass(frozen=True)
class GenericityCheck:
    k: tuple[int, ...]
    kind: str          # "P1+" (coefficient bound) or "P2+" (Morse projection)
    passed: bool
    margin: float      # ratio attained/required, > 1 means pass with room
    binding: bool      # whether this clause decides membership at this mode
    detail: str = ""


@dataclass(frozen=True)
class GenericityReport:
    cutoff: float
    delta: float
    beta: float
    checks: tuple[GenericityCheck, ...]
    passed: bool

    @property
    def first_failure(self) -> GenericityCheck | None:
        for c in self.checks:
            if not c.passed:
                return c
        return None


def check_genericity(f: FourierPotential, delta: float, beta: float,
                     K: int) -> GenericityReport:
    """Verify the quantitative genericity conditions up to mode size K.

    Modes at or above the cutoff N(delta; s, n) must carry a coefficient of
    modulus >= delta |k|_1^{-n} e^{-|k|_1 s}; modes at or below the cutoff
    must project to a beta-Morse function.  The coefficient margin is
    recorded for every mode (informational below the cutoff, where only the
    Morse clause is binding); a generator whose whole line carries no
    coefficient at all is reported as a coefficient failure.  Failures are
    data, never raised.
    """
    from .resonance import enumerate_generators

    N = cutoff_N(delta, f.s, f.n)
    checks: list[GenericityCheck] = []
    for k in enumerate_generators(f.n, K):
        nk = norm1(k)
        need = delta * nk ** (-f.n) * math.exp(-nk * f.s)
        have = abs(f.coeffs.get(k, 0.0))
        coeff_margin = have / need
        g = f.project(k) if nk <= N else None
        if nk >= N or (g is not None and g.is_zero):
            checks.append(GenericityCheck(
                k=k, kind="P1+", passed=have >= need, margin=coeff_margin,
                binding=True,
                detail="" if have else "coefficient absent"))
        else:
            checks.append(GenericityCheck(
                k=k, kind="P1+", passed=have >= need, margin=coeff_margin,
                binding=False, detail="informational below cutoff"))
        if nk <= N and g is not None and not g.is_zero:
            try:
                profile = morse_analyze(g)
            except NotMorseError as err:
                checks.append(GenericityCheck(
                    k=k, kind="P2+", passed=False, margin=0.0, binding=True,
                    detail=str(err)))
                continue
            margin = profile.beta / beta
            checks.append(GenericityCheck(
                k=k, kind="P2+", passed=profile.beta >= beta, margin=margin,
                binding=True,
                detail=f"beta={profile.beta:.6g}, 2N={profile.count}"))
    return GenericityReport(
        cutoff=N, delta=delta, beta=beta, checks=tuple(checks),
        passed=all(c.passed for c in checks if c.binding))
