"""Growth laws, their rescaled families, and the interspecific coupling.

The single-species law g vanishes on the negative axis, has unit right
derivative at 0, is nonnegative up to its cap beta and negative beyond,
and integrates to alpha > 0 over [0, beta].  Species i >= 2 runs the same
law compressed to the density scale eps_i/sqrt(k):

    f_i(s) = g(sqrt(k) s / eps_i) / (sqrt(k) eps_i),

so its cap is beta_i = beta eps_i / sqrt(k) and its potential integrates
to alpha/k over [0, beta_i].  The coupling H is a nonnegative C^1
penalty that vanishes whenever at most one density is nonzero; the stock
choice is the quartic H(s) = 1/2 sum_{i != j} s_i^2 s_j^2.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

QUAD_TOL = 1e-10
QUAD_MAX_DEPTH = 30


def adaptive_simpson(f: Callable, a: float, b: float,
                     tol: float = QUAD_TOL, max_depth: int = QUAD_MAX_DEPTH) -> float:
    """Adaptive Simpson quadrature with absolute tolerance.

    Raises RuntimeError when the bisection depth cap is hit before the
    local error estimate drops below tolerance (pathological integrand).
    """
    def simpson(x0, x2, f0, f1, f2):
        return (x2 - x0) / 6.0 * (f0 + 4.0 * f1 + f2)

    def recurse(x0, x2, f0, f1, f2, whole, eps, depth):
        xm = 0.5 * (x0 + x2)
        xl, xr = 0.5 * (x0 + xm), 0.5 * (xm + x2)
        fl, fr = float(f(xl)), float(f(xr))
        left = simpson(x0, xm, f0, fl, f1)
        right = simpson(xm, x2, f1, fr, f2)
        err = left + right - whole
        if abs(err) <= 15.0 * eps:
            return left + right + err / 15.0
        if depth >= max_depth:
            raise RuntimeError("adaptive quadrature failed to converge")
        return (recurse(x0, xm, f0, fl, f1, left, eps / 2.0, depth + 1)
                + recurse(xm, x2, f1, fr, f2, right, eps / 2.0, depth + 1))

    if a == b:
        return 0.0
    fa, fm, fb = float(f(a)), float(f(0.5 * (a + b))), float(f(b))
    return recurse(a, b, fa, fm, fb, simpson(a, b, fa, fm, fb), tol, 0)


@dataclass(frozen=True)
class Nonlinearity:
    """Single-species growth law g with its structural constants.

    ``G`` is an optional closed-form antiderivative of g (zero at zero);
    when absent, potentials fall back to adaptive quadrature.  The
    ``lipschitz`` flag is recorded but not verified.
    """

    g: Callable
    beta: float
    gmax: float
    alpha: float
    G: Callable | None = None
    lipschitz: bool = False
    name: str = "custom"


def logistic() -> Nonlinearity:
    """The stock logistic law g(s) = s - s^2 for s > 0, zero otherwise."""
    def g(s):
        s = np.asarray(s, dtype=float)
        return np.where(s > 0, s - s * s, 0.0)

    def G(t):
        t = np.asarray(t, dtype=float)
        tp = np.maximum(t, 0.0)
        return tp * tp / 2.0 - tp ** 3 / 3.0

    return Nonlinearity(g=g, beta=1.0, gmax=0.25, alpha=1.0 / 6.0, G=G,
                        lipschitz=True, name="logistic")


def custom_nonlinearity(g: Callable, beta: float, gmax: float,
                        G: Callable | None = None, lipschitz: bool = False,
                        name: str = "custom") -> Nonlinearity:
    """Wrap a user-supplied law, checking its structural assumptions.

    The checks are numerical: g must vanish on sampled non-positive
    points, satisfy |g(t)/t - 1| < 0.05 at t = 1e-6 (unit right slope),
    be negative at sampled points beyond beta, and integrate to a
    positive alpha over [0, beta].
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    for s in (-1.0, -1e-3, 0.0):
        if abs(float(g(s))) > 0:
            raise ValueError("growth law must vanish on (-inf, 0]")
    t = 1e-6
    if abs(float(g(t)) / t - 1.0) >= 0.05:
        raise ValueError("growth law must have unit right derivative at 0")
    for s in (1.01 * beta, 1.5 * beta, 3.0 * beta):
        if float(g(s)) >= 0:
            raise ValueError("growth law must be negative beyond beta")
    alpha = adaptive_simpson(g, 0.0, beta)
    if alpha <= 0:
        raise ValueError("integral of the growth law over [0, beta] must be positive")
    return Nonlinearity(g=g, beta=float(beta), gmax=float(gmax), alpha=alpha,
                        G=G, lipschitz=lipschitz, name=name)


@dataclass(frozen=True)
class ScaledFamily:
    """k species laws derived from one base law.

    Species 1 keeps the base law; species i >= 2 are compressed by
    eps[i-2].  With ``identical=True`` every species keeps the base law
    unchanged (the undifferentiated setting in which merging is always
    favorable); eps is then ignored.
    """

    base: Nonlinearity
    k: int
    eps: tuple = ()
    identical: bool = False

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("need at least one species")
        object.__setattr__(self, "eps", tuple(float(e) for e in self.eps))
        if not self.identical:
            if len(self.eps) != self.k - 1:
                raise ValueError("need one scale per species beyond the first")
            if any(not 0 < e < 1 for e in self.eps):
                raise ValueError("scales must lie in (0, 1)")

    @property
    def betas(self) -> np.ndarray:
        """Per-species caps; beta_i = beta * eps_i / sqrt(k) for i >= 2."""
        if self.identical:
            return np.full(self.k, self.base.beta)
        b = [self.base.beta]
        b += [self.base.beta * e / np.sqrt(self.k) for e in self.eps]
        return np.array(b)

    def _scale(self, i: int) -> tuple[float, float]:
        """Amplitude and argument factors (a, c) with f_i(s) = a * g(c * s)."""
        if i < 1 or i > self.k:
            raise IndexError(f"species index {i} out of range 1..{self.k}")
        if self.identical or i == 1:
            return 1.0, 1.0
        e = self.eps[i - 2]
        return 1.0 / (np.sqrt(self.k) * e), np.sqrt(self.k) / e


def scaled_family(base: Nonlinearity, k: int, eps) -> ScaledFamily:
    return ScaledFamily(base=base, k=k, eps=tuple(eps))


def identical_family(base: Nonlinearity, k: int) -> ScaledFamily:
    return ScaledFamily(base=base, k=k, identical=True)


def f_eval(fam: ScaledFamily, i: int, s):
    """Growth law of species i (1-based) at density s; vectorized."""
    a, c = fam._scale(i)
    if c == 1.0:
        return fam.base.g(s)
    return a * fam.base.g(c * np.asarray(s, dtype=float))


def F_eval(fam: ScaledFamily, i: int, s):
    """Potential of species i: the integral of its law from 0 to s.

    Uses the base law's closed-form antiderivative when available
    (F_i(s) = (a/c) G(c s), which is G(c s)/k beyond the first species),
    adaptive quadrature otherwise.
    """
    a, c = fam._scale(i)
    if fam.base.G is not None:
        return (a / c) * fam.base.G(c * np.asarray(s, dtype=float))
    fi = lambda t: f_eval(fam, i, t)
    s_arr = np.asarray(s, dtype=float)
    if s_arr.ndim == 0:
        return adaptive_simpson(fi, 0.0, float(s_arr))
    return np.array([adaptive_simpson(fi, 0.0, float(v)) for v in s_arr.ravel()]
                    ).reshape(s_arr.shape)


@dataclass(frozen=True)
class Coupling:
    """Interaction penalty H and its partial derivatives.

    ``H`` maps a (k, ...) stack of densities to the pointwise penalty;
    ``dH`` returns the full stack of partials with the same shape as its
    input.
    """

    H: Callable
    dH: Callable
    k: int
    kind: str = "custom"


def coupling_quartic(k: int) -> Coupling:
    """H(s) = 1/2 sum_{i != j} s_i^2 s_j^2 with dH_i = 2 s_i sum_{j != i} s_j^2."""
    if k < 2:
        raise ValueError("coupling needs at least two species")

    def H(s):
        s = np.asarray(s, dtype=float)
        s2 = s * s
        tot = s2.sum(axis=0)
        return 0.5 * (tot * tot - (s2 * s2).sum(axis=0))

    def dH(s):
        s = np.asarray(s, dtype=float)
        s2 = s * s
        tot = s2.sum(axis=0)
        return 2.0 * s * (tot - s2)

    return Coupling(H=H, dH=dH, k=k, kind="quartic")


def custom_coupling(H: Callable, dH: Callable, k: int, rng=None,
                    samples: int = 200) -> Coupling:
    """Wrap a user coupling, spot-checking its structural assumptions."""
    rng = np.random.default_rng(rng)
    s = rng.uniform(0.0, 1.0, size=(k, samples))
    if np.any(np.asarray(H(s)) < -1e-12):
        raise ValueError("coupling must be nonnegative")
    if np.any(s * np.asarray(dH(s)) < -1e-12):
        raise ValueError("coupling must satisfy s_i * dH_i >= 0")
    lone = np.zeros((k, k))
    lone[np.arange(k), np.arange(k)] = rng.uniform(0.1, 1.0, size=k)
    if np.any(np.abs(np.asarray(H(lone.T))) > 1e-12):
        raise ValueError("coupling must vanish when at most one density is nonzero")
    return Coupling(H=H, dH=dH, k=k, kind="custom")


def cutoff_phi(t):
    """C^2 ramp: 0 on (-inf, 1], 1 on [2, inf), quintic smoothstep between."""
    t = np.asarray(t, dtype=float)
    s = np.clip(t - 1.0, 0.0, 1.0)
    return s ** 3 * (10.0 - 15.0 * s + 6.0 * s * s)
