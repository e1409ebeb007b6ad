"""Radial grid, field container, quadrature, norms and coefficient profiles.

Every integral over R^N of a radial integrand is reduced to a sum over the
cells [j h, (j+1) h] of the half-shifted grid r_j = (j + 1/2) h.  Cell moments
of r^(N-1+p) are integrated exactly, which keeps the singular weight r^-b
integrable without special treatment of the origin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .errors import DomainMismatchError, ParameterError, UnderResolutionError

__all__ = [
    "Domain",
    "RadialField",
    "Coefficient",
    "HypothesisReport",
    "make_domain",
    "integrate_radial",
    "mass_norm",
    "grad_norm",
    "weighted_norm",
    "weighted_integral",
    "face_gradient",
    "face_weights",
    "laplacian_bands",
    "apply_laplacian",
    "sigma_of",
    "make_coefficient",
    "check_hypotheses",
    "COEFFICIENT_FAMILIES",
]


def sigma_of(N: int, b: float) -> float:
    """Nonlinearity exponent sigma_b = (4 - 2b)/N + 2."""
    return (4.0 - 2.0 * b) / N + 2.0


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Domain:
    """Half-shifted radial grid on [0, r_max] in dimension N.

    Attributes beyond the constructor arguments are derived in
    ``__post_init__`` and are read-only arrays.
    """

    N: int
    b: float
    r_max: float
    n: int
    h: float = field(init=False)
    r: np.ndarray = field(init=False, repr=False)
    omega: float = field(init=False)
    sigma: float = field(init=False)
    cell_volume: np.ndarray = field(init=False, repr=False)
    cell_weight: np.ndarray = field(init=False, repr=False)
    face_r: np.ndarray = field(init=False, repr=False)
    face_area: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        N, b, r_max, n = self.N, self.b, self.r_max, self.n
        if not (isinstance(N, (int, np.integer)) and 1 <= N <= 3):
            raise ParameterError(f"N must satisfy 1 ≤ N ≤ 3 (got {N!r})")
        if not (math.isfinite(b) and 0.0 <= b < min(2.0, N)):
            raise ParameterError(f"b must satisfy 0 ≤ b < min(2,N) (got b={b!r}, N={N})")
        if not (math.isfinite(r_max) and r_max > 0):
            raise ParameterError(f"r_max must satisfy r_max > 0 (got {r_max!r})")
        if not (isinstance(n, (int, np.integer)) and n >= 16):
            raise ParameterError(f"n must satisfy n ≥ 16 (got {n!r})")
        set_ = object.__setattr__
        set_(self, "N", int(N))
        set_(self, "n", int(n))
        set_(self, "b", float(b))
        set_(self, "r_max", float(r_max))
        h = self.r_max / self.n
        set_(self, "h", h)
        set_(self, "r", _readonly((np.arange(self.n) + 0.5) * h))
        set_(self, "omega", 2.0 * math.pi ** (N / 2.0) / math.gamma(N / 2.0))
        set_(self, "sigma", sigma_of(N, self.b))
        set_(self, "cell_volume", _readonly(self.cell_moment(0.0)))
        set_(self, "cell_weight", _readonly(self.cell_moment(-self.b)))
        faces = (np.arange(self.n) + 1.0) * h
        set_(self, "face_r", _readonly(faces))
        set_(self, "face_area", _readonly(faces ** (N - 1)))

    @property
    def key(self) -> tuple:
        return (self.N, self.b, self.r_max, self.n)

    def same_grid(self, other: "Domain") -> bool:
        return self is other or self.key == other.key

    def cell_moment(self, power: float) -> np.ndarray:
        """Exact integrals of r^(N-1+power) over every grid cell."""
        m = self.N + power
        if m <= 0:
            raise ParameterError(f"cell moment diverges at the origin (N + power = {m})")
        edges = np.arange(self.n + 1) * self.h
        e = edges**m / m
        return np.diff(e)

    def with_b(self, b: float) -> "Domain":
        return Domain(self.N, b, self.r_max, self.n)

    def refined(self, factor: int = 2) -> "Domain":
        return Domain(self.N, self.b, self.r_max, self.n * factor)


def make_domain(N: int, b: float, r_max: float, n: int) -> Domain:
    """Validated constructor; errors name the violated bound."""
    return Domain(N, b, r_max, n)


def _check_same(d1: Domain, d2: Domain):
    if not d1.same_grid(d2):
        raise DomainMismatchError(f"domain mismatch: {d1.key} vs {d2.key}")


@dataclass(frozen=True, eq=False)
class RadialField:
    """Complex samples of a radial function at the nodes of ``domain``."""

    values: np.ndarray
    domain: Domain

    def __post_init__(self):
        v = np.array(self.values, dtype=np.complex128)
        if v.ndim != 1 or v.shape[0] != self.domain.n:
            raise DomainMismatchError(
                f"field length {v.shape} does not match node count {self.domain.n}"
            )
        if not np.all(np.isfinite(v)):
            raise UnderResolutionError("non-finite field samples (under-resolution)")
        object.__setattr__(self, "values", _readonly(v))

    @property
    def r(self) -> np.ndarray:
        return self.domain.r

    @property
    def abs2(self) -> np.ndarray:
        return self.values.real**2 + self.values.imag**2

    def with_values(self, values) -> "RadialField":
        return RadialField(values, self.domain)

    def conj(self) -> "RadialField":
        return RadialField(np.conj(self.values), self.domain)

    def __mul__(self, s) -> "RadialField":
        return RadialField(self.values * s, self.domain)

    __rmul__ = __mul__

    def __add__(self, other: "RadialField") -> "RadialField":
        _check_same(self.domain, other.domain)
        return RadialField(self.values + other.values, self.domain)

    def __sub__(self, other: "RadialField") -> "RadialField":
        _check_same(self.domain, other.domain)
        return RadialField(self.values - other.values, self.domain)

    @classmethod
    def from_function(cls, func: Callable[[np.ndarray], np.ndarray], d: Domain) -> "RadialField":
        return cls(func(d.r), d)


# -- quadrature ---------------------------------------------------------------


def integrate_radial(f, d: Domain, power: float = 0.0) -> float:
    """omega * sum_j f_j * int_cell r^(N-1+power) dr.

    With ``power = 0`` this is the midpoint rule for N = 1, 2 and its
    exact-volume counterpart for N = 3.  ``power = -b`` integrates against the
    singular weight |x|^-b.
    """
    f = np.asarray(f)
    if f.shape != (d.n,):
        raise DomainMismatchError(f"integrand length {f.shape} does not match node count {d.n}")
    w = d.cell_volume if power == 0.0 else (d.cell_weight if power == -d.b else d.cell_moment(power))
    return float(d.omega * np.dot(f, w))


def _finite(x: float, what: str) -> float:
    if not math.isfinite(x):
        raise UnderResolutionError(f"{what} is not finite (under-resolution)")
    return x


def mass_norm(u: RadialField) -> float:
    """Squared L2 norm, M[u] = int |u|^2 dx."""
    return _finite(integrate_radial(u.abs2, u.domain), "mass")


def face_gradient(u: RadialField) -> tuple[np.ndarray, np.ndarray]:
    """Radial derivative on cell faces (j+1) h, including the Dirichlet wall."""
    v = u.values
    d = u.domain
    du = np.empty(d.n, dtype=np.complex128)
    du[:-1] = np.diff(v) / d.h
    du[-1] = -2.0 * v[-1] / d.h
    return d.face_r, du


def face_weights(d: Domain) -> np.ndarray:
    """Quadrature weights for face-centred integrands.

    Interior faces carry dual cells of width h; the wall face only the half
    cell between the last node and r_max.
    """
    w = d.face_area * d.h
    w[-1] *= 0.5
    return w


def _face_integral(g: np.ndarray, d: Domain) -> float:
    return float(d.omega * np.dot(g, face_weights(d)))


def grad_norm(u: RadialField) -> float:
    """Squared gradient norm from the staggered difference quotient.

    This is the quadratic form of the discrete Laplacian used by the time
    stepper, so the discrete energy is the one the scheme actually sees.
    """
    _, du = face_gradient(u)
    return _finite(_face_integral(du.real**2 + du.imag**2, u.domain), "gradient norm")


def weighted_integral(u: RadialField, b: float | None = None) -> float:
    """int |x|^-b |u|^sigma_b dx, the sigma_b-th power of the weighted norm."""
    d = u.domain
    if b is None:
        b = d.b
    sigma = sigma_of(d.N, b)
    a = np.abs(u.values) ** sigma
    return _finite(integrate_radial(a, d, power=-b), "weighted integral")


def weighted_norm(u: RadialField, b: float | None = None) -> float:
    """Weighted Lebesgue norm (int |x|^-b |u|^sigma_b dx)^(1/sigma_b)."""
    d = u.domain
    bb = d.b if b is None else b
    return weighted_integral(u, bb) ** (1.0 / sigma_of(d.N, bb))


# -- discrete Laplacian -----------------------------------------------------


def laplacian_bands(d: Domain) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Finite-volume radial Laplacian as (lower, diag, upper) bands.

    Flux through the face at the origin is zero and the wall at r_max is a
    homogeneous Dirichlet condition imposed by an odd ghost node.  The operator
    is symmetric with respect to the cell-volume inner product.
    """
    A = d.face_area
    V = d.cell_volume
    h = d.h
    right = A / (h * V)  # coupling j -> j+1
    left = np.zeros(d.n)
    left[1:] = A[:-1] / (h * V[1:])
    diag = -(left + right)
    diag[-1] -= right[-1]  # ghost u_n = -u_{n-1}
    lower = left[1:].copy()
    upper = right[:-1].copy()
    return lower, diag, upper


def apply_laplacian(values: np.ndarray, d: Domain) -> np.ndarray:
    lower, diag, upper = laplacian_bands(d)
    out = diag * values
    out[1:] += lower * values[:-1]
    out[:-1] += upper * values[1:]
    return out


# -- coefficients -----------------------------------------------------------


def _constant(r, p):
    return np.full_like(r, p["k0"]), np.zeros_like(r)


def _gaussian(r, p):
    a = p["a"]
    k = p["k0"] * np.exp(-((r / a) ** 2))
    return k, -2.0 * r / a**2 * k


def _smoothstep_down(xi):
    """1 - xi^3 (10 - 15 xi + 6 xi^2) and its derivative, clipped to [0, 1]."""
    x = np.clip(xi, 0.0, 1.0)
    s = 1.0 - x**3 * (10.0 - 15.0 * x + 6.0 * x**2)
    ds = -30.0 * x**2 * (1.0 - x) ** 2
    return s, ds


def _flat_top(r, p):
    k0, l0, kf = p["k0"], p["l0"], p["k_far"]
    s, ds = _smoothstep_down((r - l0) / l0)
    return kf + (k0 - kf) * s, (k0 - kf) * ds / l0


def _cusp(r, p):
    k0, c0, a0, l0 = p["k0"], p["c0"], p["alpha0"], p["l0"]
    inner = r <= l0
    g = np.empty_like(r)
    dg = np.empty_like(r)
    ri = r[inner]
    g[inner] = ri ** (1.0 + a0)
    dg[inner] = (1.0 + a0) * ri**a0
    ro = r[~inner]
    e = np.exp(-(ro - l0) / l0)
    g[~inner] = l0 ** (1.0 + a0) * (1.0 + (1.0 + a0) * (1.0 - e))
    dg[~inner] = (1.0 + a0) * l0**a0 * e
    return k0 - c0 * g, -c0 * dg


def _sign_changing(r, p):
    k0, a, off = p["k0"], p["a"], p["offset"]
    x = r / a
    env = np.exp(-x / 4.0)
    k = k0 * np.cos(x) * env + off
    dk = k0 * env * (-np.sin(x) - 0.25 * np.cos(x)) / a
    return k, dk


def _need(cond: bool, msg: str):
    if not cond:
        raise ParameterError(msg)


def _validate_positive_k0(p):
    _need(p["k0"] > 0, "k0 must satisfy k0 > 0")


def _validate_constant(p):
    _need(p["k0"] >= 0, "k0 must satisfy k0 ≥ 0 for the constant family")


def _validate_gaussian(p):
    _validate_positive_k0(p)
    _need(p["a"] > 0, "a must satisfy a > 0")


def _validate_flat_top(p):
    _validate_positive_k0(p)
    _need(p["l0"] > 0, "l0 must satisfy l0 > 0")
    _need(p["k_far"] < p["k0"], "k_far must satisfy k_far < k0")


def _validate_cusp(p):
    _validate_positive_k0(p)
    _need(p["c0"] > 0, "c0 must satisfy c0 > 0")
    _need(0.0 < p["alpha0"] < 1.0, "alpha0 must satisfy 0 < alpha0 < 1")
    _need(p["l0"] > 0, "l0 must satisfy l0 > 0")


def _validate_sign_changing(p):
    _need(p["a"] > 0, "a must satisfy a > 0")
    _need(p["k0"] + p["offset"] > 0, "k(0) = k0 + offset must be positive")


# family -> (profile, defaults, validator)
COEFFICIENT_FAMILIES: dict[str, tuple[Callable, dict, Callable]] = {
    "constant": (_constant, {"k0": 1.0}, _validate_constant),
    "gaussian": (_gaussian, {"k0": 1.0, "a": 1.0}, _validate_gaussian),
    "flat_top": (_flat_top, {"k0": 1.0, "l0": 8.0, "k_far": 0.0}, _validate_flat_top),
    "cusp": (_cusp, {"k0": 1.0, "c0": 0.5, "alpha0": 0.5, "l0": 1.0}, _validate_cusp),
    "sign_changing": (_sign_changing, {"k0": 1.0, "a": 1.0, "offset": 0.5}, _validate_sign_changing),
}


@dataclass(frozen=True, eq=False)
class Coefficient:
    """Radial coefficient k(r) sampled on a domain, with analytic evaluators."""

    family: str
    params: Mapping[str, float]
    domain: Domain
    k: np.ndarray = field(init=False, repr=False)
    dk: np.ndarray = field(init=False, repr=False)
    k0: float = field(init=False)
    sup_k: float = field(init=False)
    sup_dk: float = field(init=False)
    sup_rdk: float = field(init=False)

    def __post_init__(self):
        if self.family not in COEFFICIENT_FAMILIES:
            raise ParameterError(
                f"unknown coefficient family {self.family!r}; "
                f"expected one of {sorted(COEFFICIENT_FAMILIES)}"
            )
        func, defaults, validate = COEFFICIENT_FAMILIES[self.family]
        unknown = set(self.params) - set(defaults)
        if unknown:
            raise ParameterError(f"unknown parameters for {self.family}: {sorted(unknown)}")
        p = {**defaults, **{k: float(v) for k, v in self.params.items()}}
        validate(p)
        set_ = object.__setattr__
        set_(self, "params", p)
        k, dk = func(self.domain.r, p)
        set_(self, "k", _readonly(k))
        set_(self, "dk", _readonly(dk))
        set_(self, "k0", float(func(np.zeros(1), p)[0][0]))
        set_(self, "sup_k", float(np.max(np.abs(k))))
        set_(self, "sup_dk", float(np.max(np.abs(dk))))
        set_(self, "sup_rdk", float(np.max(np.abs(self.domain.r * dk))))

    def value(self, r) -> np.ndarray:
        r = np.atleast_1d(np.asarray(r, dtype=float))
        return COEFFICIENT_FAMILIES[self.family][0](r, self.params)[0]

    def derivative(self, r) -> np.ndarray:
        r = np.atleast_1d(np.asarray(r, dtype=float))
        return COEFFICIENT_FAMILIES[self.family][0](r, self.params)[1]

    @property
    def is_constant(self) -> bool:
        return self.family == "constant"

    def on(self, d: Domain) -> "Coefficient":
        """Same profile resampled on another grid."""
        return Coefficient(self.family, dict(self.params), d)

    def rescaled(self, lam: float) -> "Coefficient":
        """Coefficient k_lam(r) = k(r / lam) when the family allows it exactly."""
        p = dict(self.params)
        if self.family in ("gaussian", "sign_changing"):
            p["a"] *= lam
        elif self.family == "flat_top":
            p["l0"] *= lam
        elif self.family == "cusp":
            p["l0"] *= lam
            p["c0"] /= lam ** (1.0 + p["alpha0"])
        elif self.family != "constant":
            raise ParameterError(f"family {self.family} cannot be rescaled")
        return Coefficient(self.family, p, self.domain)


def make_coefficient(family: str, d: Domain, **params) -> Coefficient:
    """Sample one of the coefficient families on ``d``."""
    c = Coefficient(family, params, d)
    if family == "flat_top":
        # the smoothstep is monotone by construction; guard against regressions
        assert np.all(c.dk <= 0.0), "flat_top transition is not monotone"
    return c


@dataclass(frozen=True)
class HypothesisReport:
    k0_positive: bool
    sup_k: float
    sup_dk: float
    sup_rdk: float
    bounded: bool
    condition_i: bool
    condition_ii: bool | None
    flat: bool | None
    cusp_bound: bool | None
    max_rdk: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def check_hypotheses(c: Coefficient, l0: float | None = None) -> HypothesisReport:
    """Report the structural hypotheses on k evaluated on the grid.

    ``l0`` defaults to the family's plateau/cusp radius when it has one; the
    local conditions are reported as ``None`` when no radius is available.
    """
    r = c.domain.r
    rdk = r * c.dk
    if l0 is None:
        l0 = c.params.get("l0")
    cond_ii = flat = cusp = None
    if l0 is not None:
        inner = r < l0
        cond_ii = bool(np.all(rdk[inner] < 0.0))
        flat = bool(np.all(c.k[inner] == c.k0))
        if c.family == "cusp":
            p = c.params
            cusp = bool(np.all(rdk[inner] < -p["c0"] * r[inner] ** (1.0 + p["alpha0"])))
    return HypothesisReport(
        k0_positive=c.k0 > 0,
        sup_k=c.sup_k,
        sup_dk=c.sup_dk,
        sup_rdk=c.sup_rdk,
        bounded=bool(np.isfinite(c.sup_k) and np.isfinite(c.sup_dk) and np.isfinite(c.sup_rdk)),
        condition_i=bool(np.all(rdk <= 0.0)),
        condition_ii=cond_ii,
        flat=flat,
        cusp_bound=cusp,
        max_rdk=float(np.max(rdk)),
    )
