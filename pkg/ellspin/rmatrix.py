"""
Two-site building blocks: the dynamical elliptic R-matrix, its derivative,
the deformed exchange E, and the trigonometric and dynamical Heisenberg
degenerations.

All 4x4 matrices act in the basis (up-up, up-down, down-up, down-down) with
up = +1, and obey the ice rule: only the corners and the central 2x2 block
can be nonzero.
"""
import cmath
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import block_diag

from ellspin.config import get_settings
from ellspin.elliptic import (
    EllipticParams,
    potential_V,
    rho,
    theta,
    theta_deriv,
    theta_nonzero,
)
from ellspin.exceptions import (
    ContractError,
    DegenerateNormalizationError,
    ParameterError,
    PoleError,
    wrap_error,
)

INVARIANTS = (
    "r_check_initial_condition",
    "r_check_unitarity",
    "ice_rule",
    "r_check_derivative",
    "exchange_crosscheck",
    "exchange_isotropic_limit",
    "e_tri_temperley_lieb",
    "exchange_trigonometric_limit",
    "e_heis_temperley_lieb",
    "e_heis_isotropic_limit",
    "dybe",
)

_ICE_MASK = np.array(
    [
        [1, 0, 0, 0],
        [0, 1, 1, 0],
        [0, 1, 1, 0],
        [0, 0, 0, 1],
    ],
    dtype=bool,
)


@dataclass(frozen=True, eq=False)
class RMatrix4:
    """A 4x4 complex matrix in the two-spin basis obeying the ice rule."""

    entries: np.ndarray

    def __post_init__(self):
        entries = np.array(self.entries, dtype=complex)
        if entries.shape != (4, 4):
            raise ContractError("RMatrix4 needs a 4x4 matrix", details={"shape": str(entries.shape)})
        if np.any(entries[~_ICE_MASK] != 0):
            raise ContractError("Matrix violates the ice rule (spin-z conservation)")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    @classmethod
    def from_blocks(cls, upper: complex, central: Sequence[Sequence[complex]], lower: complex) -> "RMatrix4":
        """Assemble from the (1,1) corner, the central block and the (4,4) corner."""
        entries = np.zeros((4, 4), dtype=complex)
        entries[0, 0] = upper
        entries[1:3, 1:3] = np.asarray(central, dtype=complex)
        entries[3, 3] = lower
        return cls(entries)

    @classmethod
    def identity(cls) -> "RMatrix4":
        return cls(np.eye(4))

    @classmethod
    def permutation(cls) -> "RMatrix4":
        """The spin permutation P."""
        return cls.from_blocks(1, [[0, 1], [1, 0]], 1)

    @property
    def central_block(self) -> np.ndarray:
        return self.entries[1:3, 1:3]

    def __matmul__(self, other: "RMatrix4") -> "RMatrix4":
        return RMatrix4(self.entries @ other.entries)

    def __add__(self, other: "RMatrix4") -> "RMatrix4":
        return RMatrix4(self.entries + other.entries)

    def __sub__(self, other: "RMatrix4") -> "RMatrix4":
        return RMatrix4(self.entries - other.entries)

    def __mul__(self, scalar: complex) -> "RMatrix4":
        return RMatrix4(complex(scalar) * self.entries)

    __rmul__ = __mul__

    def distance(self, other: "RMatrix4") -> float:
        """Max-norm of the entrywise difference."""
        return float(np.max(np.abs(self.entries - other.entries)))


@dataclass(frozen=True)
class DynArgs:
    """Spectral argument x, dynamical parameter a and anisotropy eta."""

    x: complex
    a: complex
    eta: complex

    def __post_init__(self):
        for name in ("x", "a", "eta"):
            value = complex(getattr(self, name))
            if not (math.isfinite(value.real) and math.isfinite(value.imag)):
                raise ParameterError(f"{name} must be finite", details={name: value})
            object.__setattr__(self, name, value)

    @property
    def b(self) -> complex:
        """The product eta * a entering the R-matrix."""
        return self.eta * self.a

    def context(self) -> dict:
        return {"x": self.x, "a": self.a, "eta": self.eta}


def asymptotic_a(eta: complex, magnitude: Optional[float] = None, period: Optional[float] = None) -> complex:
    """
    Dynamical parameter standing in for a -> -i infinity.

    Chosen so that eta * a = -i * magnitude * |eta|, i.e. the product that
    enters the R-matrix runs to -i infinity whatever the phase of eta.
    Given a period N, |eta * a| is capped at 20 N / pi: the corrections
    exp(-2 pi |eta a| / N) are then below double precision while
    sin(pi eta a / N) still fits in a float.
    """
    if magnitude is None:
        magnitude = get_settings().dynamical_infinity
    eta = complex(eta)
    if eta == 0:
        return -1j * magnitude
    size = magnitude * abs(eta)
    if period is not None:
        size = min(size, 20.0 * period / math.pi)
    return -1j * size / eta


def r_check(args: DynArgs, params: EllipticParams) -> RMatrix4:
    """
    Dynamical R-matrix with unit corners and central block

        [[f(eta, x, b), f(x, eta, b)], [f(x, eta, -b), f(eta, x, -b)]],   b = eta*a.
    """
    x, eta, b = args.x, args.eta, args.b
    try:
        t_xe = theta_nonzero(x + eta, params, "r_check: x + eta")
        t_b = theta_nonzero(b, params, "r_check: eta*a")
        t_eta, t_x = theta(eta, params), theta(x, params)
        central = [
            [t_eta * theta(x + b, params) / (t_xe * t_b), t_x * theta(eta + b, params) / (t_xe * t_b)],
            [t_x * theta(eta - b, params) / (-t_xe * t_b), t_eta * theta(x - b, params) / (-t_xe * t_b)],
        ]
    except PoleError as e:
        raise wrap_error(e, f"R-matrix pole: {e.message}", PoleError, **args.context())
    return RMatrix4.from_blocks(1, central, 1)


def r_check_deriv(args: DynArgs, params: EllipticParams) -> RMatrix4:
    """Analytic derivative of r_check in x."""
    x, eta, b = args.x, args.eta, args.b
    try:
        t_xe = theta_nonzero(x + eta, params, "r_check_deriv: x + eta")
        t_b = theta_nonzero(b, params, "r_check_deriv: eta*a")
        rho_xe = rho(x + eta, params)
        t_eta = theta(eta, params)
        # d/dx theta(x)/theta(x+eta) and d/dx theta(x+c)/theta(x+eta)
        d_x = theta_deriv(x, params) - theta(x, params) * rho_xe

        def d_shift(c):
            return theta_deriv(x + c, params) - theta(x + c, params) * rho_xe

        central = [
            [t_eta * d_shift(b) / (t_xe * t_b), d_x * theta(eta + b, params) / (t_xe * t_b)],
            [d_x * theta(eta - b, params) / (-t_xe * t_b), t_eta * d_shift(-b) / (-t_xe * t_b)],
        ]
    except PoleError as e:
        raise wrap_error(e, f"R-matrix derivative pole: {e.message}", PoleError, **args.context())
    return RMatrix4.from_blocks(0, central, 0)


def _normalization(args: DynArgs, params: EllipticParams) -> complex:
    try:
        norm = theta(args.eta, params) * potential_V(args.x, args.eta, params)
    except PoleError as e:
        raise wrap_error(e, f"Exchange normalization pole: {e.message}", PoleError, **args.context())
    if abs(norm) < params.pole_threshold:
        raise DegenerateNormalizationError(
            "theta(eta) V(x) vanishes; exchange operator undefined",
            details=args.context(),
        )
    return norm


def exchange_E(args: DynArgs, params: EllipticParams) -> RMatrix4:
    """Deformed exchange E(x, a) = R(-x, a) R'(x, a) / (theta(eta) V(x))."""
    norm = _normalization(args, params)
    mirrored = DynArgs(-args.x, args.a, args.eta)
    return (r_check(mirrored, params) @ r_check_deriv(args, params)) * (1.0 / norm)


def exchange_E_closed(args: DynArgs, params: EllipticParams) -> RMatrix4:
    """Deformed exchange from its closed-form central coefficients alpha, beta."""
    norm = _normalization(args, params)
    x, eta = args.x, args.eta
    try:
        rho_x = rho(x, params)
        rho_xe = rho(x + eta, params)
        t_eta = theta(eta, params)

        def f_eta_x(y, c):
            # f(eta, y, c)
            return t_eta * theta(y + c, params) / (
                theta_nonzero(eta + y, params, "f") * theta_nonzero(c, params, "f")
            )

        def alpha(c):
            return f_eta_x(x, c) * f_eta_x(-x, c) * (rho(x + c, params) - rho_x) - (rho_xe - rho_x)

        def beta(c):
            f_x_eta = theta(x, params) * theta(eta + c, params) / (
                theta_nonzero(x + eta, params, "f") * theta_nonzero(c, params, "f")
            )
            return f_x_eta * f_eta_x(-x, c) * (rho_x - rho(x - c, params))

        b = args.b
        central = [[alpha(b), beta(b)], [beta(-b), alpha(-b)]]
    except PoleError as e:
        raise wrap_error(e, f"Exchange pole: {e.message}", PoleError, **args.context())
    return RMatrix4.from_blocks(0, central, 0) * (1.0 / norm)


def exchange_crosscheck(args: DynArgs, params: EllipticParams) -> float:
    """Max-norm difference between the product and closed forms of E."""
    return exchange_E(args, params).distance(exchange_E_closed(args, params))


# =============================================================================
# Degenerate families
# =============================================================================

def e_tri(eta: complex, n_sites: float) -> RMatrix4:
    """Trigonometric exchange with q = exp(i pi eta / N)."""
    q = cmath.exp(1j * math.pi * complex(eta) / n_sites)
    return RMatrix4.from_blocks(0, [[1 / q, -q], [-1 / q, q]], 0)


def r_tri(x: complex, eta: complex, n_sites: float) -> RMatrix4:
    """Trigonometric R-matrix 1 - sin(pi x/N)/sin(pi (x+eta)/N) * E_tri."""
    denominator = cmath.sin(math.pi * (complex(x) + eta) / n_sites)
    if abs(denominator) < 1e-13:
        raise PoleError("r_tri: sin(pi (x + eta)/N) vanishes", details={"x": complex(x), "eta": complex(eta)})
    ratio = cmath.sin(math.pi * complex(x) / n_sites) / denominator
    return RMatrix4.identity() - e_tri(eta, n_sites) * ratio


def e_heis(a: complex, gamma: float) -> RMatrix4:
    """Dynamical Heisenberg exchange with central block [[A, -B], [-A, B]]."""
    a = complex(a)
    s = cmath.sin(math.pi * gamma * a)
    if abs(s) < 1e-13:
        raise PoleError("e_heis: sin(pi gamma a) vanishes", details={"a": a, "gamma": gamma})
    lower = cmath.sin(math.pi * gamma * (a - 1)) / s
    upper = cmath.sin(math.pi * gamma * (a + 1)) / s
    return RMatrix4.from_blocks(0, [[lower, -upper], [-lower, upper]], 0)


def r_heis(a: complex, gamma: float) -> RMatrix4:
    """Dynamical Heisenberg permutation 1 - exp(-i pi gamma) E_heis(a)."""
    return RMatrix4.identity() - e_heis(a, gamma) * cmath.exp(-1j * math.pi * gamma)


def dybe_residual(
    x: complex,
    x1: complex,
    x2: complex,
    a: complex,
    eta: complex,
    params: EllipticParams,
) -> float:
    """
    Max-norm residual of the braid-form dynamical Yang-Baxter equation

        R12(x1-x2, a) R23(x-x2, a-s1) R12(x-x1, a)
            = R23(x-x1, a-s1) R12(x-x2, a) R23(x1-x2, a-s1)

    on three spins, s1 the spin-z of the first factor.
    """
    def r12(y):
        return np.kron(r_check(DynArgs(y, a, eta), params).entries, np.eye(2))

    def r23(y):
        return block_diag(
            r_check(DynArgs(y, a - 1, eta), params).entries,
            r_check(DynArgs(y, a + 1, eta), params).entries,
        )

    lhs = r12(x1 - x2) @ r23(x - x2) @ r12(x - x1)
    rhs = r23(x - x1) @ r12(x - x2) @ r23(x1 - x2)
    return float(np.max(np.abs(lhs - rhs)))
