"""2x2 conservation laws with a convex entropy, and the isentropic Euler instance.

States are ``State(rho, mom)`` named tuples in conserved variables.  All the
pointwise functions below are written with plain arithmetic so that they accept
either Python floats or numpy arrays in the two fields.
"""
from __future__ import annotations

import abc
import functools
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ConfigError, DomainError


class State(NamedTuple):
    rho: float
    mom: float

    @property
    def velocity(self):
        if isinstance(self.rho, np.ndarray):
            safe = np.where(self.rho > 0, self.rho, 1.0)
            return np.where(self.rho > 0, self.mom / safe, 0.0)
        return self.mom / self.rho if self.rho > 0 else 0.0


def distance(a: State, b: State) -> float:
    """Euclidean distance in conserved variables."""
    return math.hypot(a.rho - b.rho, a.mom - b.mom)


def as_state(values) -> State:
    rho, mom = values
    return State(float(rho), float(mom))


@dataclass(frozen=True)
class StateBox:
    """Closed box {rho_min <= rho <= rho_max, |v| <= v_max}, convex in (rho, mom)."""

    rho_min: float = 0.25
    rho_max: float = 4.0
    v_max: float = 2.0

    def __post_init__(self):
        if not 0 < self.rho_min < self.rho_max:
            raise ConfigError(f"state_box needs 0 < rho_min < rho_max, got {self.rho_min}, {self.rho_max}")
        if self.v_max < 0:
            raise ConfigError(f"state_box.v_max must be >= 0, got {self.v_max}")

    def contains(self, u: State, tol: float = 0.0) -> bool:
        if not self.rho_min - tol <= u.rho <= self.rho_max + tol:
            return False
        return abs(u.mom) <= self.v_max * u.rho + tol

    def sample(self, rng: np.random.Generator, n: int) -> State:
        rho = rng.uniform(self.rho_min, self.rho_max, n)
        v = rng.uniform(-self.v_max, self.v_max, n)
        return State(rho, rho * v)

    def grid(self, n: int) -> State:
        rho, v = np.meshgrid(np.linspace(self.rho_min, self.rho_max, n),
                             np.linspace(-self.v_max, self.v_max, n), indexing="ij")
        return State(rho.ravel(), (rho * v).ravel())


@dataclass(frozen=True)
class SystemParams:
    gamma: float = 2.0
    state_box: StateBox = StateBox()
    inv_bound: float | None = None
    c1: float | None = None


@dataclass(frozen=True)
class SpectralData:
    lambda1: float
    lambda2: float
    r1: tuple[float, float]
    r2: tuple[float, float]
    big_l: float


@dataclass(frozen=True)
class CertifiedConstants:
    """Constants measured on the state box when a system is first used."""

    big_l: float
    lambda_hat: float
    c_star: float
    c_2star: float
    q_over_eta: float
    lip_q: float
    lip_eta: float
    entropy_residual: float


def _check_density(rho, strict=False):
    if isinstance(rho, np.ndarray):
        bad = np.any(rho <= 0) if strict else np.any(rho < 0)
    else:
        bad = rho <= 0 if strict else rho < 0
    if bad:
        kind = "non-positive" if strict else "negative"
        raise DomainError(f"{kind} density {np.min(rho)!r}")


def _kinetic(rho, mom):
    """mom**2 / rho, extended by 0 at vacuum."""
    if isinstance(rho, np.ndarray) or isinstance(mom, np.ndarray):
        rho = np.asarray(rho, dtype=float)
        safe = np.where(rho > 0, rho, 1.0)
        return np.where(rho > 0, mom * mom / safe, 0.0)
    return mom * mom / rho if rho > 0 else 0.0


class ConservationLaw2x2(abc.ABC):
    """A strictly hyperbolic 2x2 system with a convex entropy pair.

    Subclasses supply the flux, its Jacobian, the entropy pair and the
    spectral data; the relative quantities are derived here.
    """

    @abc.abstractmethod
    def flux(self, u: State): ...

    @abc.abstractmethod
    def jacobian(self, u: State): ...

    @abc.abstractmethod
    def entropy(self, u: State): ...

    @abc.abstractmethod
    def entropy_grad(self, u: State): ...

    @abc.abstractmethod
    def entropy_flux(self, u: State): ...

    @abc.abstractmethod
    def eigen(self, u: State) -> SpectralData: ...

    def relative_entropy(self, a: State, b: State):
        """eta(a|b) = eta(a) - eta(b) - grad eta(b).(a - b)."""
        _check_density(b.rho, strict=True)
        g0, g1 = self.entropy_grad(b)
        return self.entropy(a) - self.entropy(b) - g0 * (a.rho - b.rho) - g1 * (a.mom - b.mom)

    def relative_entropy_flux(self, a: State, b: State):
        """q(a;b) = q(a) - q(b) - grad eta(b).(f(a) - f(b))."""
        _check_density(b.rho, strict=True)
        g0, g1 = self.entropy_grad(b)
        fa0, fa1 = self.flux(a)
        fb0, fb1 = self.flux(b)
        return self.entropy_flux(a) - self.entropy_flux(b) - g0 * (fa0 - fb0) - g1 * (fa1 - fb1)

    def relative_flux(self, a: State, b: State):
        """f(a|b) = f(a) - f(b) - f'(b)(a - b), componentwise."""
        _check_density(b.rho, strict=True)
        (j00, j01), (j10, j11) = self.jacobian(b)
        fa0, fa1 = self.flux(a)
        fb0, fb1 = self.flux(b)
        d0, d1 = a.rho - b.rho, a.mom - b.mom
        return (fa0 - fb0 - j00 * d0 - j01 * d1, fa1 - fb1 - j10 * d0 - j11 * d1)


class IsentropicEuler(ConservationLaw2x2):
    """rho_t + (rho v)_x = 0, (rho v)_t + (rho v^2 + rho^gamma)_x = 0."""

    def __init__(self, params: SystemParams | None = None, **kwargs):
        if params is None:
            params = SystemParams(**kwargs)
        elif kwargs:
            raise TypeError("pass either params or keyword overrides, not both")
        g = params.gamma
        if not g > 1:
            raise ConfigError(f"gamma must be > 1, got {g}")
        c1 = params.c1 if params.c1 is not None else 2.0 * math.sqrt(g) / (g - 1.0)
        if not c1 > 0:
            raise ConfigError(f"c1 must be > 0, got {c1}")
        self.gamma = g
        self.c1 = c1
        self.box = params.state_box
        self._k = (g - 1.0) / 2.0
        if params.inv_bound is None:
            corners = [State(r, r * v) for r in (self.box.rho_min, self.box.rho_max)
                       for v in (-self.box.v_max, self.box.v_max)]
            wmax = max(max(abs(w) for w in self.riemann_invariants(u)) for u in corners)
            inv_bound = 1.5 * wmax
        else:
            inv_bound = params.inv_bound
        if not inv_bound > 0:
            raise ConfigError(f"inv_bound must be > 0, got {inv_bound}")
        self.inv_bound = inv_bound
        self.params = SystemParams(gamma=g, state_box=self.box, inv_bound=inv_bound, c1=c1)
        for r in (self.box.rho_min, self.box.rho_max):
            for v in (-self.box.v_max, self.box.v_max):
                if not self.in_open_region(State(r, r * v)):
                    raise ConfigError("state_box is not inside the invariant region; raise inv_bound")

    def __repr__(self):
        return f"IsentropicEuler(gamma={self.gamma}, c1={self.c1:.6g}, inv_bound={self.inv_bound:.6g}, box={self.box})"

    # pointwise quantities -------------------------------------------------

    def pressure(self, rho):
        return rho ** self.gamma

    def sound_speed(self, rho):
        return (self.gamma * rho ** (self.gamma - 1.0)) ** 0.5

    def flux(self, u: State):
        _check_density(u.rho)
        return (u.mom, _kinetic(u.rho, u.mom) + u.rho ** self.gamma)

    def jacobian(self, u: State):
        _check_density(u.rho, strict=True)
        v = u.mom / u.rho
        return ((0.0 * v, 1.0 + 0.0 * v),
                (self.gamma * u.rho ** (self.gamma - 1.0) - v * v, 2.0 * v))

    def lambdas(self, u: State):
        _check_density(u.rho, strict=True)
        v = u.mom / u.rho
        c = self.sound_speed(u.rho)
        return v - c, v + c

    def lambda_gradients(self, u: State):
        """Gradients of lambda_1, lambda_2 with respect to (rho, mom)."""
        _check_density(u.rho, strict=True)
        rho, m = u
        dc = math.sqrt(self.gamma) * self._k * rho ** (self._k - 1.0)
        base = -m / rho ** 2
        return (base - dc, 1.0 / rho), (base + dc, 1.0 / rho)

    def eigen(self, u: State) -> SpectralData:
        """Characteristic speeds and unit right eigenvectors with lambda_i'.r_i > 0."""
        _check_density(u.rho, strict=True)
        lam1, lam2 = self.lambdas(u)
        n1 = math.hypot(1.0, lam1)
        n2 = math.hypot(1.0, lam2)
        return SpectralData(lam1, lam2, (-1.0 / n1, -lam1 / n1), (1.0 / n2, lam2 / n2),
                            self.certified.big_l)

    def entropy(self, u: State):
        _check_density(u.rho)
        return 0.5 * _kinetic(u.rho, u.mom) + u.rho ** self.gamma / (self.gamma - 1.0)

    def entropy_grad(self, u: State):
        _check_density(u.rho, strict=True)
        v = u.mom / u.rho
        g = self.gamma
        return (-0.5 * v * v + g / (g - 1.0) * u.rho ** (g - 1.0), v)

    def entropy_hessian(self, u: State):
        _check_density(u.rho, strict=True)
        rho, m = u
        g = self.gamma
        return ((m * m / rho ** 3 + g * rho ** (g - 2.0), -m / rho ** 2),
                (-m / rho ** 2, 1.0 / rho))

    def entropy_flux(self, u: State):
        """q = rho v^3 / 2 + gamma/(gamma-1) rho^gamma v, zero at vacuum."""
        _check_density(u.rho)
        g = self.gamma
        v = u.velocity
        return 0.5 * _kinetic(u.rho, u.mom) * v + g / (g - 1.0) * u.rho ** g * v

    def riemann_invariants(self, u: State):
        v = u.velocity
        w = self.c1 * u.rho ** self._k
        return v - w, v + w

    def in_invariant_region(self, u: State) -> bool:
        """Membership in the closed-vacuum set -C < w1 <= w2 < C."""
        if u.rho < 0 or (u.rho == 0 and u.mom != 0):
            return False
        w1, w2 = self.riemann_invariants(u)
        return -self.inv_bound < w1 <= w2 < self.inv_bound

    def in_open_region(self, u: State) -> bool:
        return u.rho > 0 and self.in_invariant_region(u)

    # constants certified on the state box --------------------------------

    @functools.cached_property
    def certified(self) -> CertifiedConstants:
        return certify(self)


def certify(system: IsentropicEuler, samples: int = 10_000, seed: int = 0) -> CertifiedConstants:
    """Measure L, lambda_hat, the quadratic-equivalence and relative-flux constants."""
    box = system.box
    g = system.gamma
    big_l = box.v_max + math.sqrt(g * box.rho_max ** (g - 1.0))
    grid = box.grid(101)
    lam1, lam2 = system.lambdas(grid)
    big_l = max(big_l, float(np.max(np.abs(lam1))), float(np.max(np.abs(lam2))))

    h = system.entropy_hessian(grid)
    eig = np.linalg.eigvalsh(np.array([[h[0][0], h[0][1]], [h[1][0], h[1][1]]]).transpose(2, 0, 1))
    c_star = 0.5 * float(eig[:, 0].min())
    c_2star = 0.5 * float(eig[:, 1].max())

    rng = np.random.default_rng(seed)
    b = box.sample(rng, samples)
    # a ranges over V_0 restricted to |v| <= v_max, down to vacuum
    rho_a = rng.uniform(0.0, box.rho_max, samples)
    a = State(rho_a, rho_a * rng.uniform(-box.v_max, box.v_max, samples))
    gap = np.hypot(a.rho - b.rho, a.mom - b.mom)
    keep = gap > 1e-4
    eta = system.relative_entropy(a, b)
    q = system.relative_entropy_flux(a, b)
    # as a -> b along r_i the ratio tends to |lambda_i(b)|, so L is a lower bound for the sup
    q_over_eta = max(big_l, float(np.max(np.abs(q[keep]) / eta[keep])))

    b2 = box.sample(rng, samples)
    db = np.hypot(b.rho - b2.rho, b.mom - b2.mom)
    keep = db > 1e-6
    lip_q = float(np.max(np.abs(system.relative_entropy_flux(a, b) - system.relative_entropy_flux(a, b2))[keep] / db[keep]))
    lip_eta = float(np.max(np.abs(system.relative_entropy(a, b) - system.relative_entropy(a, b2))[keep] / db[keep]))

    return CertifiedConstants(
        big_l=big_l,
        lambda_hat=2.0 * big_l,
        c_star=c_star,
        c_2star=c_2star,
        q_over_eta=q_over_eta,
        lip_q=lip_q,
        lip_eta=lip_eta,
        entropy_residual=entropy_compatibility_residual(system, 100),
    )


def entropy_compatibility_residual(system: ConservationLaw2x2, n: int = 100, h: float = 2e-4) -> float:
    """max |q' - eta' f'| on an n x n box grid, derivatives by fourth-order central differences."""
    u = system.box.grid(n)
    worst = 0.0
    g0, g1 = system.entropy_grad(u)

    def shifted(k, d_rho, d_mom):
        return State(u.rho + k * d_rho, u.mom + k * d_mom)

    for d_rho, d_mom in ((h, 0.0), (0.0, h)):
        pts = {k: shifted(k, d_rho, d_mom) for k in (-2, -1, 1, 2)}

        def diff(func):
            vals = {k: np.asarray(func(p), dtype=float) for k, p in pts.items()}
            return (-vals[2] + 8 * vals[1] - 8 * vals[-1] + vals[-2]) / (12 * h)
        dq = diff(system.entropy_flux)
        df = diff(system.flux)
        worst = max(worst, float(np.max(np.abs(dq - g0 * df[0] - g1 * df[1]))))
    return worst
