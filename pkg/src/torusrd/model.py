"""Rate functions, model parameters, initial conditions, and birth-rate truncation.

Rates are dimensionless functions of the particle density u = count / ell.
All evaluation callables are vectorized over numpy arrays.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = [
    "RateFunction",
    "ModelParams",
    "make_rate",
    "rate_difference",
    "site_rates",
    "truncate_birth",
    "initial_config",
]


@dataclass(frozen=True)
class RateFunction:
    """A nonnegative rate as a function of particle density.

    ``sup_value`` is the sup over [0, inf) when finite (bounded family),
    ``slope`` the coefficient of the linear family; both feed the
    dominating-chain coupling.
    """

    eval: Callable[[np.ndarray], np.ndarray]
    family: str
    support_bound: float | None = None
    lipschitz: float | None = None
    sup_value: float | None = None
    slope: float | None = None
    spec: str | None = None  # string form, for reconstruction in worker processes

    def __call__(self, x):
        return self.eval(np.asarray(x, dtype=float))


def _parse_term(term: str) -> RateFunction:
    name, _, arg = term.partition(":")
    if name == "zero":
        return RateFunction(lambda u: np.zeros_like(u), "zero", sup_value=0.0,
                            slope=0.0, lipschitz=0.0, spec=term)
    if name == "power":
        p = float(arg)
        return RateFunction(lambda u, p=p: np.power(u, p), "power", spec=term)
    if name == "linear":
        c = float(arg)
        return RateFunction(lambda u, c=c: c * u, "linear", slope=c,
                            lipschitz=c, spec=term)
    if name == "bounded":
        c = float(arg)
        return RateFunction(lambda u, c=c: np.minimum(u, c), "bounded",
                            sup_value=c, lipschitz=1.0, spec=term)
    if name == "table":
        xs, ys = np.loadtxt(arg, delimiter=",", unpack=True, ndmin=2)
        if np.any(ys < 0):
            raise ValueError(f"rate table {arg} has negative values")
        return RateFunction(lambda u, xs=xs, ys=ys: np.interp(u, xs, ys),
                            "custom-table", sup_value=float(ys.max()), spec=term)
    raise ValueError(f"unknown rate family {term!r}")


def make_rate(spec: str) -> RateFunction:
    """Build a RateFunction from a string such as ``power:2`` or ``power:2+bounded:1``.

    Terms joined by ``+`` are summed; two-column CSV tables are referenced
    as ``table:/path/to/file.csv`` (linear interpolation, last-value extension).
    """
    terms = [_parse_term(t.strip()) for t in spec.split("+")]
    if len(terms) == 1:
        return terms[0]
    fns = [t.eval for t in terms]

    def total(u, fns=tuple(fns)):
        acc = fns[0](u)
        for fn in fns[1:]:
            acc = acc + fn(u)
        return acc

    return RateFunction(total, "power-plus-death", spec=spec)


def rate_difference(b: RateFunction, d: RateFunction) -> RateFunction:
    """The net reaction f = b - d driving the limiting PDE."""
    return RateFunction(lambda u: b.eval(u) - d.eval(u), "custom",
                        spec=f"({b.spec})-({d.spec})" if b.spec and d.spec else None)


@dataclass(frozen=True)
class ModelParams:
    """Parameters of the particle system on the discrete torus with n sites.

    ``ell`` sets the particles-per-site scale; ``phi`` is the initial density
    profile on [0, 1); ``init_rule`` selects deterministic rounding or
    independent Poisson counts.
    """

    n: int
    ell: int
    b: RateFunction
    d: RateFunction
    phi: Callable[[np.ndarray], np.ndarray] = field(default=lambda x: np.ones_like(x))
    init_rule: str = "deterministic-round"

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("n must be >= 2")
        if self.ell < 1:
            raise ValueError("ell must be >= 1")
        if self.init_rule not in ("deterministic-round", "poisson"):
            raise ValueError(f"unknown init_rule {self.init_rule!r}")
        if float(self.d(0.0)) != 0.0:
            raise ValueError("death rate must vanish at zero density")
        if float(self.b(0.0)) - float(self.d(0.0)) < 0.0:
            raise ValueError("need f(0) = b(0) - d(0) >= 0")

    @property
    def sites(self) -> np.ndarray:
        return np.arange(self.n) / self.n


def site_rates(count: int, params: ModelParams) -> tuple[float, float, float, float]:
    """Event rates (jump right, jump left, birth, death) at a site holding ``count`` particles."""
    if count < 0:
        raise ValueError("count must be nonnegative")
    jump = float(params.n) ** 2 * count
    u = count / params.ell
    birth = params.ell * float(params.b(u))
    death = params.ell * float(params.d(u)) if count > 0 else 0.0
    return jump, jump, birth, death


def truncate_birth(b: RateFunction, m: float, w: float) -> RateFunction:
    """Compactly supported birth rate agreeing with ``b`` on [0, m+1].

    On [m+1, m+1+w] the rate follows a cosine ramp from b(m+1) down to zero,
    clipped to stay below b; beyond m+1+w it is identically zero.
    """
    if w <= 0:
        raise ValueError("taper width must be positive")
    edge = m + 1.0
    top = float(b(edge))

    def tapered(u, b=b.eval, edge=edge, w=w, top=top):
        u = np.asarray(u, dtype=float)
        ramp = 0.5 * top * (1.0 + np.cos(np.pi * np.clip((u - edge) / w, 0.0, 1.0)))
        out = np.where(u <= edge, b(u), np.minimum(ramp, b(u)))
        return np.where(u >= edge + w, 0.0, out)

    return RateFunction(tapered, "truncated", support_bound=edge + w,
                        spec=f"trunc({b.spec},{m},{w})" if b.spec else None)


def initial_config(params: ModelParams, rng: np.random.Generator | None = None) -> np.ndarray:
    """Initial occupation vector eta(0) of length n.

    deterministic-round: eta_k = round(ell * phi(k/n)) with round-half-up,
    so runs are bit-reproducible. poisson: independent Poisson(ell * phi(k/n)).
    """
    means = params.ell * np.asarray(params.phi(params.sites), dtype=float)
    if np.any(means < 0):
        raise ValueError("phi must be nonnegative")
    if params.init_rule == "deterministic-round":
        return np.floor(means + 0.5).astype(np.int64)
    if rng is None:
        raise ValueError("poisson init_rule needs an rng")
    return rng.poisson(means).astype(np.int64)
