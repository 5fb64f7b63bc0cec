"""
Odd Jacobi theta function in the spin-chain normalization.

    theta(x) = sinh(kappa x)/kappa * prod_{n>=1} (1 - p^{2n} e^{2 kappa x})(1 - p^{2n} e^{-2 kappa x}) / (1 - p^{2n})^2

with nome p = exp(-N kappa) and theta'(0) = 1. The real quasiperiod N is
called ``period`` here so the same machinery serves single R-matrices with
arbitrary period and N-site chains.

Two equivalent products are evaluated:

- the hyperbolic product above when N*kappa >= pi (nome p <= e^{-pi});
- its modular transform (N/pi) e^{kappa x^2/N} sin(pi x/N) prod(...) in the
  nome q = exp(-pi^2/(kappa N)) otherwise. kappa = 0 is this form with no
  factors, i.e. the exact trigonometric branch.

Either way the nome never exceeds e^{-pi}, so a handful of factors meets a
1e-16 tolerance. Arguments are first reduced to the fundamental strip
|Re x| <= N/2, |Im x| <= pi/(2 kappa) and the exact quasiperiodicity
multipliers are accumulated.

Derivatives are analytic: every product carries the sum of its
logarithmic-derivative terms along with it.
"""
import cmath
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple, Optional, Tuple

import numpy as np

from ellspin.config import get_settings
from ellspin.exceptions import AccuracyError, ParameterError, PoleError

INVARIANTS = (
    "theta_quasiperiodicity",
    "theta_addition_formula",
    "theta_kappa_continuity",
    "theta_argument_reduction",
    "theta_series_oracle",
    "theta_deriv_normalization",
    "rho_quasiperiodicity",
    "potential_symmetry",
    "vartheta_modular_bridge",
    "vartheta_series_oracle",
)


def _default_tolerance() -> float:
    return get_settings().theta_tolerance


def _default_max_terms() -> int:
    return get_settings().theta_max_terms


def _default_pole_threshold() -> float:
    return get_settings().pole_threshold


def _terms_for(nome_abs: float, tolerance: float, max_terms: int) -> int:
    """Smallest M with nome^{2M} < tolerance."""
    if nome_abs == 0.0:
        return 0
    terms = int(math.floor(math.log(tolerance) / (2.0 * math.log(nome_abs)))) + 1
    if terms > max_terms:
        raise AccuracyError(
            "Theta product needs more factors than allowed",
            details={"nome": nome_abs, "needed": terms, "max_terms": max_terms},
        )
    return max(terms, 0)


@dataclass(frozen=True)
class EllipticParams:
    """Parameters of the chain theta function."""

    kappa: float
    period: float
    tolerance: float = field(default_factory=_default_tolerance)
    max_terms: int = field(default_factory=_default_max_terms)
    pole_threshold: float = field(default_factory=_default_pole_threshold)

    def __post_init__(self):
        if not math.isfinite(self.kappa) or self.kappa < 0:
            raise ParameterError("kappa must be a finite nonnegative real", details={"kappa": self.kappa})
        if not math.isfinite(self.period) or self.period <= 0:
            raise ParameterError("period must be a finite positive real", details={"period": self.period})
        if not 0 < self.tolerance < 1:
            raise ParameterError("tolerance must lie in (0, 1)", details={"tolerance": self.tolerance})
        if self.max_terms < 1:
            raise ParameterError("max_terms must be positive", details={"max_terms": self.max_terms})

    @property
    def modular(self) -> bool:
        """Whether the modular (trigonometric-looking) product is used."""
        return self.kappa * self.period < math.pi

    @property
    def nome(self) -> float:
        """The nome p = exp(-N kappa)."""
        return math.exp(-self.period * self.kappa)

    @property
    def imaginary_period(self) -> Optional[complex]:
        """The quasiperiod i*pi/kappa, absent on the trigonometric branch."""
        if self.kappa == 0:
            return None
        return 1j * math.pi / self.kappa

    @cached_property
    def _nome2(self) -> float:
        if self.modular:
            if self.kappa == 0:
                return 0.0
            return math.exp(-2.0 * math.pi ** 2 / (self.kappa * self.period))
        return math.exp(-2.0 * self.period * self.kappa)

    @cached_property
    def terms(self) -> int:
        """Number of product factors meeting the tolerance."""
        return _terms_for(math.sqrt(self._nome2), self.tolerance, self.max_terms)


@dataclass(frozen=True)
class GeneralTheta:
    """The odd theta function with arbitrary modular parameter tau."""

    tau: complex
    tolerance: float = field(default_factory=_default_tolerance)
    max_terms: int = field(default_factory=_default_max_terms)

    def __post_init__(self):
        object.__setattr__(self, "tau", complex(self.tau))
        if not self.tau.imag > 0:
            raise ParameterError(
                "tau must have positive imaginary part (|exp(2 pi i tau)| < 1)",
                details={"tau": self.tau},
            )

    @cached_property
    def _nome2(self) -> complex:
        return cmath.exp(2j * math.pi * self.tau)

    @cached_property
    def terms(self) -> int:
        """Number of product factors meeting the tolerance."""
        return _terms_for(abs(self._nome2) ** 0.5, self.tolerance, self.max_terms)


class _Series(NamedTuple):
    value: complex
    deriv: complex
    sine: complex
    cosine: complex
    log_sum: complex
    log_sum_deriv: complex


def _sine_product(z: complex, q2: complex, terms: int) -> _Series:
    """
    sin z * prod_n (1 - q2^n e^{2iz})(1 - q2^n e^{-2iz}) / (1 - q2^n)^2.

    log_sum is the derivative of the log of the product factors (cot z
    excluded) and log_sum_deriv its derivative.
    """
    s, c = cmath.sin(z), cmath.cos(z)
    if terms == 0:
        return _Series(s, c, s, c, 0j, 0j)
    powers = np.power(complex(q2), np.arange(1, terms + 1))
    e = cmath.exp(2j * z)
    u = powers * e
    w = powers / e
    product = complex(np.prod((1 - u) * (1 - w) / (1 - powers) ** 2))
    log_sum = complex(np.sum(-2j * u / (1 - u) + 2j * w / (1 - w)))
    log_sum_deriv = complex(np.sum(4 * (u / (1 - u) ** 2 + w / (1 - w) ** 2)))
    return _Series(s * product, product * (c + s * log_sum), s, c, log_sum, log_sum_deriv)


def _reduce(x: complex, params: EllipticParams) -> Tuple[complex, int, int]:
    """x = x0 + k N + l i pi/kappa with x0 in the fundamental strip."""
    k = round(x.real / params.period)
    x0 = x - k * params.period
    l = 0
    if params.kappa > 0:
        l = round(x0.imag * params.kappa / math.pi)
        x0 = x0 - 1j * math.pi * l / params.kappa
    return x0, k, l


def _multiplier(x0: complex, k: int, l: int, params: EllipticParams) -> complex:
    sign = -1.0 if (k + l) % 2 else 1.0
    if k == 0 or params.kappa == 0:
        return complex(sign)
    return sign * cmath.exp(params.kappa * (2 * k * x0 + k * k * params.period))


def _local(x0: complex, params: EllipticParams, terms: int) -> Tuple[complex, complex, _Series]:
    """Value and derivative of theta at an (ideally reduced) point."""
    kappa, period = params.kappa, params.period
    if params.modular:
        scale = math.pi / period
        ser = _sine_product(scale * x0, params._nome2, terms)
        gauss = cmath.exp(kappa * x0 * x0 / period) if kappa else 1.0
        value = gauss * ser.value / scale
        deriv = gauss * (2 * kappa * x0 / math.pi * ser.value + ser.deriv)
        return value, deriv, ser
    ser = _sine_product(1j * kappa * x0, params._nome2, terms)
    return ser.value / (1j * kappa), ser.deriv, ser


def _log_derivs(x0: complex, ser: _Series, params: EllipticParams) -> Tuple[complex, complex]:
    """rho and rho' at a reduced point away from zero."""
    kappa, period = params.kappa, params.period
    cot = ser.cosine / ser.sine
    csc2 = 1.0 / (ser.sine * ser.sine)
    if params.modular:
        scale = math.pi / period
        rho0 = 2 * kappa * x0 / period + scale * (cot + ser.log_sum)
        drho0 = 2 * kappa / period + scale ** 2 * (-csc2 + ser.log_sum_deriv)
        return rho0, drho0
    rho0 = 1j * kappa * (cot + ser.log_sum)
    drho0 = -kappa ** 2 * (-csc2 + ser.log_sum_deriv)
    return rho0, drho0


def _is_pole(x0: complex, params: EllipticParams) -> bool:
    return abs(x0) < params.pole_threshold * max(1.0, params.period)


def _pole(x: complex, params: EllipticParams, what: str) -> PoleError:
    return PoleError(
        f"{what}: argument on the theta zero lattice",
        details={"x": x, "kappa": params.kappa, "period": params.period},
    )


def lattice_distance(z: complex, params: EllipticParams) -> float:
    """Distance from z to the nearest zero N k + i pi l/kappa of theta."""
    x0, _, _ = _reduce(complex(z), params)
    return abs(x0)


def theta(x: complex, params: EllipticParams, reduce: bool = True) -> complex:
    """
    Theta function theta(x) with theta'(0) = 1.

    Args:
        x: Complex argument
        params: Elliptic parameters
        reduce: Reduce into the fundamental strip first (default). Without
            reduction the product is evaluated at x itself, which is only
            sound for moderate arguments.

    Returns:
        theta(x)
    """
    x = complex(x)
    if not reduce:
        value, _, _ = _local(x, params, params.terms + 2)
        return value
    x0, k, l = _reduce(x, params)
    value, _, _ = _local(x0, params, params.terms)
    return _multiplier(x0, k, l, params) * value


def theta_deriv(x: complex, params: EllipticParams) -> complex:
    """Analytic derivative theta'(x)."""
    x0, k, l = _reduce(complex(x), params)
    value, deriv, _ = _local(x0, params, params.terms)
    return _multiplier(x0, k, l, params) * (deriv + 2 * params.kappa * k * value)


def rho(x: complex, params: EllipticParams) -> complex:
    """Prepotential rho = theta'/theta; raises PoleError at theta zeros."""
    x = complex(x)
    x0, k, _ = _reduce(x, params)
    if _is_pole(x0, params):
        raise _pole(x, params, "rho")
    _, _, ser = _local(x0, params, params.terms)
    rho0, _ = _log_derivs(x0, ser, params)
    return rho0 + 2 * params.kappa * k


def rho_deriv(x: complex, params: EllipticParams) -> complex:
    """Derivative rho'(x)."""
    x = complex(x)
    x0, _, _ = _reduce(x, params)
    if _is_pole(x0, params):
        raise _pole(x, params, "rho_deriv")
    _, _, ser = _local(x0, params, params.terms)
    _, drho0 = _log_derivs(x0, ser, params)
    return drho0


def theta_nonzero(x: complex, params: EllipticParams, what: str = "theta") -> complex:
    """theta(x) for use as a divisor; raises PoleError at the zero lattice."""
    x = complex(x)
    x0, k, l = _reduce(x, params)
    if _is_pole(x0, params):
        raise _pole(x, params, what)
    value, _, _ = _local(x0, params, params.terms)
    return _multiplier(x0, k, l, params) * value


def potential_V(x: complex, eta: complex, params: EllipticParams) -> complex:
    """Pair potential V(x) = [rho(x - eta) - rho(x + eta)] / theta(2 eta)."""
    denominator = theta_nonzero(2 * complex(eta), params, "potential_V: 2*eta")
    return (rho(x - eta, params) - rho(x + eta, params)) / denominator


def f_ratio(x: complex, y: complex, z: complex, params: EllipticParams) -> complex:
    """f(x, y, z) = theta(x) theta(y+z) / (theta(x+y) theta(z))."""
    denominator = theta_nonzero(x + y, params, "f_ratio") * theta_nonzero(z, params, "f_ratio")
    return theta(x, params) * theta(y + z, params) / denominator


def phi(x: complex, y: complex, params: EllipticParams) -> complex:
    """phi(x, y) = theta(x+y) / (theta(x) theta(y))."""
    denominator = theta_nonzero(x, params, "phi") * theta_nonzero(y, params, "phi")
    return theta(x + y, params) / denominator


def phi_d1(x: complex, y: complex, params: EllipticParams) -> complex:
    """Derivative of phi in its first argument, phi * (rho(x+y) - rho(x))."""
    tx = theta_nonzero(x, params, "phi_d1")
    ty = theta_nonzero(y, params, "phi_d1")
    return (theta_deriv(x + y, params) - theta(x + y, params) * rho(x, params)) / (tx * ty)


def inozemtsev_potential(x: complex, params: EllipticParams) -> complex:
    """Inozemtsev pair potential, fixed as -rho'(x)."""
    return -rho_deriv(x, params)


def haldane_shastry_potential(x: complex, n_sites: int) -> complex:
    """(pi/N)^2 / sin^2(pi x/N)."""
    s = cmath.sin(math.pi * complex(x) / n_sites)
    if abs(s) < get_settings().pole_threshold:
        raise PoleError("Haldane-Shastry potential at a multiple of N", details={"x": complex(x)})
    return (math.pi / n_sites) ** 2 / (s * s)


def addition_residual(x: complex, y: complex, z: complex, w: complex, params: EllipticParams) -> float:
    """
    Relative residual of the theta addition formula

        th(x+y)th(x-y)th(z+w)th(z-w)
            = th(x+z)th(x-z)th(y+w)th(y-w) - th(x+w)th(x-w)th(y+z)th(y-z).
    """
    def pair(u, v):
        return theta(u + v, params) * theta(u - v, params)

    lhs = pair(x, y) * pair(z, w)
    first = pair(x, z) * pair(y, w)
    second = pair(x, w) * pair(y, z)
    scale = max(abs(lhs), abs(first), abs(second), np.finfo(float).tiny)
    return abs(lhs - first + second) / scale


# =============================================================================
# General modular parameter
# =============================================================================

def _reduce_general(x: complex, g: GeneralTheta) -> Tuple[complex, int, int]:
    l = round(x.imag / g.tau.imag)
    x1 = x - l * g.tau
    k = round(x1.real)
    return x1 - k, k, l


def vartheta(x: complex, g: GeneralTheta) -> complex:
    """Odd theta function with periods (1, tau), normalized to slope 1 at 0."""
    x0, k, l = _reduce_general(complex(x), g)
    ser = _sine_product(math.pi * x0, g._nome2, g.terms)
    sign = -1.0 if (k + l) % 2 else 1.0
    multiplier = sign * cmath.exp(-1j * math.pi * (2 * l * x0 + l * l * g.tau)) if l else sign
    return multiplier * ser.value / math.pi


def vartheta_log_deriv(x: complex, g: GeneralTheta) -> complex:
    """Logarithmic derivative of vartheta."""
    x = complex(x)
    x0, _, l = _reduce_general(x, g)
    if abs(x0) < get_settings().pole_threshold:
        raise PoleError("vartheta_log_deriv: argument on the zero lattice", details={"x": x, "tau": g.tau})
    ser = _sine_product(math.pi * x0, g._nome2, g.terms)
    return math.pi * (ser.cosine / ser.sine + ser.log_sum) - 2j * math.pi * l


def theta_from_vartheta(x: complex, params: EllipticParams) -> complex:
    """theta(x) = omega * vartheta(x/omega | -N/omega) with omega = i pi/kappa."""
    omega = params.imaginary_period
    if omega is None:
        raise ParameterError("The modular bridge needs kappa > 0")
    g = GeneralTheta(-params.period / omega, params.tolerance, params.max_terms)
    return omega * vartheta(complex(x) / omega, g)
