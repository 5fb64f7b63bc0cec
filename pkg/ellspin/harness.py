"""
Verification harness: every identity and limit the library relies on, as a
named, seeded, tolerance-tagged check.

Checks register themselves with ``@check``. Each receives a CheckContext
carrying its own random generator, seeded from (seed, registry index), so
results do not depend on the job count or completion order.
"""
import json
import math
import time
from dataclasses import dataclass, field
from multiprocessing.pool import ThreadPool
from pathlib import Path
from typing import Any, Callable, Dict, Iterator, List, Optional, Sequence, Tuple

import mpmath
import numpy as np
import pandas as pd
from rich.table import Table

from ellspin import chain as ch
from ellspin import elliptic as el
from ellspin import qmbs as qm
from ellspin import rmatrix as rm
from ellspin.config import get_settings
from ellspin.exceptions import (
    EllSpinException,
    InfrastructureError,
    ParameterError,
    is_client_error,
    is_numerical,
    wrap_error,
)
from ellspin.utils.logger import get_logger

logger = get_logger(__name__)

SUITES = ("elliptic", "rmatrix", "chain", "qmbs", "limits", "all")

_MODULES = {"elliptic": el, "rmatrix": rm, "chain": ch, "qmbs": qm}

# Minimum distance of drawn dynamical arguments from a pole
REGULAR_MARGIN = 0.1

# Accepted error ratio between eta = 1e-3 and eta = 1e-4 in the Inozemtsev limit
RATIO_WINDOW = (5.0, 20.0)


def dynamically_regular(p: ch.ChainParams, margin: float = REGULAR_MARGIN) -> bool:
    """True when eta (a - s) stays `margin` away from the theta zeros for every |s| <= N."""
    ell = p.elliptic
    return all(
        el.lattice_distance(p.eta * (p.a - s), ell) >= margin
        for s in range(-p.n_sites, p.n_sites + 1)
    )


def xxz_regular(gamma: float, a: complex, n_sites: int, margin: float = REGULAR_MARGIN) -> bool:
    """True when |sin(pi gamma (a - s))| >= margin for every |s| <= N."""
    return all(abs(np.sin(np.pi * gamma * (a - s))) >= margin for s in range(-n_sites, n_sites + 1))


def to_plain(value: Any) -> Any:
    """JSON-friendly rendering: complex as [re, im], non-finite floats as None."""
    if isinstance(value, dict):
        return {str(k): to_plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [to_plain(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (complex, np.complexfloating)):
        return [to_plain(float(value.real)), to_plain(float(value.imag))]
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


# =============================================================================
# Results and registry
# =============================================================================

@dataclass
class CheckResult:
    """Outcome of one check."""
    name: str
    suite: str
    residual: float
    tolerance: float
    seed: int
    params_used: Dict[str, Any] = field(default_factory=dict)
    runtime_ms: int = 0
    error: Optional[str] = None

    @property
    def passed(self) -> bool:
        return self.error is None and math.isfinite(self.residual) and self.residual <= self.tolerance

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "suite": self.suite,
            "residual": to_plain(self.residual),
            "tolerance": self.tolerance,
            "pass": self.passed,
            "seed": self.seed,
            "params_used": to_plain(self.params_used),
            "runtime_ms": self.runtime_ms,
            "error": self.error,
        }


class CheckContext:
    """Random draws for one check, honouring parameter overrides."""

    def __init__(self, rng: np.random.Generator, draws: int, overrides: Optional[Dict[str, Any]] = None):
        self.rng = rng
        self.draws = draws
        self.overrides = dict(overrides or {})
        self.used: Dict[str, Any] = {}

    def value(self, name: str, draw: Callable[[], Any]) -> Any:
        value = self.overrides[name] if name in self.overrides else draw()
        self.used[name] = value
        return value

    def uniform(self, low: float, high: float) -> float:
        return float(self.rng.uniform(low, high))

    def complex_in(self, re: Tuple[float, float], im: Tuple[float, float]) -> complex:
        return complex(self.uniform(*re), self.uniform(*im))

    def kappa(self, low: float = 0.3, high: float = 1.5) -> float:
        return float(self.value("kappa", lambda: self.uniform(low, high)))

    def n_sites(self, low: int, high: int) -> int:
        return int(self.value("n_sites", lambda: int(self.rng.integers(low, high + 1))))

    def eta(self) -> complex:
        return complex(self.value("eta", lambda: self.complex_in((0.15, 0.45), (-0.1, 0.1))))

    def a(self) -> complex:
        return complex(self.value("a", lambda: self.complex_in((-0.8, 0.8), (-0.5, 0.5))))

    def elliptic(self, kappa: Optional[float] = None) -> el.EllipticParams:
        kappa = self.kappa() if kappa is None else kappa
        period = float(self.value("n_sites", lambda: int(self.rng.integers(3, 8))))
        return el.EllipticParams(kappa, period)

    def sizes(self, low: int, high: int) -> List[int]:
        """Chain lengths to sweep: the override alone, else every N in [low, high]."""
        if "n_sites" in self.overrides:
            sizes = [int(self.overrides["n_sites"])]
        else:
            sizes = list(range(low, high + 1))
        self.used["n_sites"] = sizes
        return sizes

    def chain_at(self, n_sites: int, margin: float = REGULAR_MARGIN, max_tries: int = 100) -> ch.ChainParams:
        """
        Chain parameters of length n_sites whose dynamical arguments eta (a - s),
        |s| <= N, all keep `margin` away from the theta zero lattice.

        Overridden parameters are taken as given.
        """
        fixed = all(name in self.overrides for name in ("kappa", "eta", "a"))
        for _ in range(max_tries):
            p = ch.ChainParams(n_sites, self.kappa(), self.eta(), self.a())
            if fixed or dynamically_regular(p, margin):
                break
        self.used["n_sites"] = n_sites
        return p

    def chain(self, low: int = 3, high: int = 5) -> ch.ChainParams:
        return self.chain_at(self.n_sites(low, high))

    def chain_draws(self, low: int, high: int) -> Iterator[ch.ChainParams]:
        """`draws` regular parameter sets for every chain length in [low, high]."""
        sizes = self.sizes(low, high)
        for n in sizes:
            for _ in range(self.draws):
                yield self.chain_at(n)
        self.used["n_sites"] = sizes

    def xxz(self, n_sites: int, margin: float = REGULAR_MARGIN, max_tries: int = 100) -> ch.XXZChain:
        """XXZ chain with |sin(pi gamma (a - s))| >= margin for every |s| <= N."""
        fixed = "gamma" in self.overrides and "a" in self.overrides
        for _ in range(max_tries):
            gamma = float(self.value("gamma", lambda: self.uniform(0.1, 0.4)))
            a = complex(self.value("a", lambda: self.complex_in((0.3, 1.2), (-0.4, 0.4))))
            if fixed or xxz_regular(gamma, a, n_sites, margin):
                break
        return ch.XXZChain(gamma, a, n_sites)

    def qmbs(self, low: int = 2, high: int = 3) -> qm.QmbsParams:
        p = self.chain(low, high)
        return qm.QmbsParams(p.n_sites, p.kappa, p.eta, p.a)


CheckFunction = Callable[[CheckContext], float]


@dataclass(frozen=True)
class CheckSpec:
    index: int
    name: str
    module: str
    suite: str
    tolerance: float
    draws: Optional[int]
    func: CheckFunction


_REGISTRY: List[CheckSpec] = []


def check(module: str, name: str, tolerance: float, draws: Optional[int] = None, suite: Optional[str] = None):
    """Register a check covering the named invariant of a module."""
    def decorator(func: CheckFunction) -> CheckFunction:
        _REGISTRY.append(CheckSpec(len(_REGISTRY), name, module, suite or module, tolerance, draws, func))
        return func

    return decorator


def list_checks(suite: str = "all") -> List[CheckSpec]:
    if suite not in SUITES:
        raise ParameterError(f"Unknown suite '{suite}'", details={"suites": list(SUITES)})
    return [spec for spec in _REGISTRY if suite == "all" or spec.suite == suite]


def registry_invariants(module: str) -> List[str]:
    """Invariant names registered for a module, in registry order."""
    return [spec.name for spec in _REGISTRY if spec.module == module]


def missing_invariants() -> Dict[str, List[str]]:
    """Declared module invariants without a registered check, and vice versa."""
    gaps = {}
    for module_name, module in _MODULES.items():
        declared, registered = set(module.INVARIANTS), set(registry_invariants(module_name))
        difference = sorted(declared ^ registered)
        if difference:
            gaps[module_name] = difference
    return gaps


# =============================================================================
# Helpers
# =============================================================================

def _rel(value: Any, reference: Any) -> float:
    value, reference = np.asarray(value, dtype=complex), np.asarray(reference, dtype=complex)
    scale = max(float(np.max(np.abs(reference), initial=0.0)), 1e-300)
    return float(np.max(np.abs(value - reference), initial=0.0)) / scale


def _spectral_rel(first: ch.SpinOperator, second: ch.SpinOperator) -> float:
    s1, s2 = ch.spectrum(first), ch.spectrum(second)
    spread = max(float(np.max(np.abs(s2)) if len(s2) else 0.0), 1.0)
    return ch.spectral_distance(s1, s2) / spread


def _norm2(op: ch.SpinOperator) -> float:
    return float(np.linalg.norm(op.matrix, 2))


def scaled_residual(value: ch.SpinOperator, target: ch.SpinOperator, scale: float) -> float:
    """Frobenius norm of value - target over max(scale, |target|_F)."""
    difference = float(np.linalg.norm(value.matrix - target.matrix))
    return difference / max(scale, target.norm(), 1e-300)


def power_residual(op: ch.SpinOperator, power: int, target: ch.SpinOperator) -> float:
    """
    Residual of op^power = target, relative to |op|_2^power |1|_F.

    Rounding in a product of non-normal factors grows with the product of
    their norms, not with the norm of the result.
    """
    return scaled_residual(op.power(power), target, _norm2(op) ** power * math.sqrt(op.dim))


def conjugation_residual(
    g: ch.SpinOperator, g_inv: ch.SpinOperator, op: ch.SpinOperator, target: ch.SpinOperator
) -> float:
    """Residual of g op g^-1 = target, relative to |g|_2 |g^-1|_2 |op|_F."""
    return scaled_residual(g @ op @ g_inv, target, _norm2(g) * _norm2(g_inv) * op.norm())


def _theta_oracle(x: complex, params: el.EllipticParams) -> complex:
    """Textbook theta_1 q-series in the chain normalization, at 30 digits."""
    with mpmath.workdps(30):
        n, k = mpmath.mpf(params.period), mpmath.mpf(params.kappa)
        xm = mpmath.mpc(x.real, x.imag)
        z = mpmath.pi * xm / n
        if params.kappa == 0:
            return complex(n / mpmath.pi * mpmath.sin(z))
        q = mpmath.exp(-mpmath.pi ** 2 / (k * n))
        value = n / mpmath.pi * mpmath.exp(k * xm ** 2 / n) * mpmath.jtheta(1, z, q) / mpmath.jtheta(1, 0, q, 1)
        return complex(value)


def _vartheta_oracle(x: complex, tau: complex) -> complex:
    with mpmath.workdps(30):
        q = mpmath.exp(1j * mpmath.pi * mpmath.mpc(tau.real, tau.imag))
        z = mpmath.pi * mpmath.mpc(x.real, x.imag)
        return complex(mpmath.jtheta(1, z, q) / (mpmath.pi * mpmath.jtheta(1, 0, q, 1)))


def _exp_test_function(rng: np.random.Generator, n: int, dim: int):
    rates = rng.uniform(-0.5, 0.5, n) + 1j * rng.uniform(-0.5, 0.5, n)
    vector = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return lambda y: np.exp(np.dot(rates, y)) * vector


# =============================================================================
# elliptic
# =============================================================================

@check("elliptic", "theta_quasiperiodicity", 1e-11)
def _theta_quasiperiodicity(ctx: CheckContext) -> float:
    worst = 0.0
    for _ in range(ctx.draws):
        p = ctx.elliptic()
        x = ctx.complex_in((-p.period / 2, p.period / 2), (-1.0, 1.0))
        t = el.theta(x, p)
        worst = max(
            worst,
            _rel(el.theta(x + p.imaginary_period, p), -t),
            _rel(el.theta(x + p.period, p), -np.exp(p.kappa * (2 * x + p.period)) * t),
        )
    return worst


@check("elliptic", "theta_addition_formula", 1e-11)
def _theta_addition(ctx: CheckContext) -> float:
    worst = 0.0
    for _ in range(ctx.draws):
        p = ctx.elliptic()
        x, y, z, w = (ctx.complex_in((-1.5, 1.5), (-0.5, 0.5)) for _ in range(4))
        worst = max(worst, el.addition_residual(x, y, z, w, p))
    return worst


@check("elliptic", "theta_kappa_continuity", 1e-5)
def _theta_kappa_continuity(ctx: CheckContext) -> float:
    # theta at small kappa is the Gaussian factor times the trigonometric branch
    kappa = 1e-3
    worst = 0.0
    for _ in range(ctx.draws):
        period = float(ctx.value("n_sites", lambda: int(ctx.rng.integers(3, 8))))
        x = ctx.complex_in((-period / 2, period / 2), (-0.5, 0.5))
        small = el.EllipticParams(kappa, period)
        trig = el.EllipticParams(0.0, period)
        worst = max(worst, _rel(el.theta(x, small), np.exp(kappa * x ** 2 / period) * el.theta(x, trig)))
    return worst


@check("elliptic", "theta_argument_reduction", 1e-12)
def _theta_argument_reduction(ctx: CheckContext) -> float:
    worst = 0.0
    for _ in range(ctx.draws):
        p = ctx.elliptic()
        x = ctx.complex_in((-p.period, p.period), (-1.0, 1.0))
        worst = max(worst, _rel(el.theta(x, p), el.theta(x, p, reduce=False)))
    return worst


@check("elliptic", "theta_series_oracle", 1e-12, draws=1000)
def _theta_series_oracle(ctx: CheckContext) -> float:
    worst = 0.0
    for _ in range(ctx.draws):
        p = ctx.elliptic(kappa=ctx.uniform(0.0, 2.0))
        x = ctx.complex_in((-p.period / 2, p.period / 2), (-0.5, 0.5))
        worst = max(worst, _rel(el.theta(x, p), _theta_oracle(x, p)))
    return worst


@check("elliptic", "theta_deriv_normalization", 1e-12)
def _theta_deriv_normalization(ctx: CheckContext) -> float:
    worst = 0.0
    for _ in range(ctx.draws):
        p = ctx.elliptic()
        x = ctx.complex_in((-2.0, 2.0), (-0.5, 0.5))
        worst = max(worst, abs(el.theta_deriv(0, p) - 1), _rel(el.theta_deriv(-x, p), el.theta_deriv(x, p)))
    return worst


@check("elliptic", "rho_quasiperiodicity", 1e-11)
def _rho_quasiperiodicity(ctx: CheckContext) -> float:
    worst = 0.0
    for _ in range(ctx.draws):
        p = ctx.elliptic()
        x = ctx.complex_in((0.2, p.period / 2), (-0.5, 0.5))
        r = el.rho(x, p)
        scale = max(abs(r), 1.0)
        worst = max(
            worst,
            abs(el.rho(x + p.period, p) - r - 2 * p.kappa) / scale,
            abs(el.rho(x + p.imaginary_period, p) - r) / scale,
            abs(el.rho(-x, p) + r) / scale,
        )
    return worst


@check("elliptic", "potential_symmetry", 1e-10)
def _potential_symmetry(ctx: CheckContext) -> float:
    worst = 0.0
    for _ in range(ctx.draws):
        p = ctx.elliptic()
        eta = ctx.eta()
        x = ctx.complex_in((0.6, p.period / 2), (-0.5, 0.5))
        v = el.potential_V(x, eta, p)
        worst = max(
            worst,
            _rel(el.potential_V(-x, eta, p), v),
            _rel(el.potential_V(x + p.period, eta, p), v),
            _rel(el.potential_V(x + p.imaginary_period, eta, p), v),
        )
    return worst


@check("elliptic", "vartheta_modular_bridge", 1e-10)
def _vartheta_modular_bridge(ctx: CheckContext) -> float:
    worst = 0.0
    for _ in range(ctx.draws):
        p = ctx.elliptic()
        x = ctx.complex_in((-p.period / 2, p.period / 2), (-0.5, 0.5))
        worst = max(worst, _rel(el.theta_from_vartheta(x, p), el.theta(x, p)))
    return worst


@check("elliptic", "vartheta_series_oracle", 1e-12, draws=1000)
def _vartheta_series_oracle(ctx: CheckContext) -> float:
    worst = 0.0
    for _ in range(ctx.draws):
        tau = ctx.complex_in((-0.5, 0.5), (0.5, 2.0))
        x = ctx.complex_in((-0.5, 0.5), (-0.3, 0.3))
        worst = max(worst, _rel(el.vartheta(x, el.GeneralTheta(tau)), _vartheta_oracle(x, tau)))
    return worst


# =============================================================================
# rmatrix
# =============================================================================

def _dyn_args(ctx: CheckContext) -> rm.DynArgs:
    return rm.DynArgs(ctx.complex_in((-1.2, 1.2), (-0.4, 0.4)), ctx.a(), ctx.eta())


@check("rmatrix", "r_check_initial_condition", 1e-12)
def _r_initial(ctx: CheckContext) -> float:
    worst = 0.0
    for _ in range(ctx.draws):
        p, args = ctx.elliptic(), _dyn_args(ctx)
        r0 = rm.r_check(rm.DynArgs(0, args.a, args.eta), p)
        worst = max(worst, r0.distance(rm.RMatrix4.identity()))
    return worst


@check("rmatrix", "r_check_unitarity", 1e-12)
def _r_unitarity(ctx: CheckContext) -> float:
    worst = 0.0
    for draw in range(ctx.draws):
        kappa = 0.0 if draw % 4 == 0 else None
        p, args = ctx.elliptic(kappa), _dyn_args(ctx)
        product = rm.r_check(args, p) @ rm.r_check(rm.DynArgs(-args.x, args.a, args.eta), p)
        worst = max(worst, product.distance(rm.RMatrix4.identity()))
    return worst


@check("rmatrix", "ice_rule", 0.0)
def _ice_rule(ctx: CheckContext) -> float:
    worst = 0.0
    off_block = ~rm._ICE_MASK
    for _ in range(ctx.draws):
        p, args = ctx.elliptic(), _dyn_args(ctx)
        gamma = ctx.uniform(0.1, 0.45)
        n = p.period
        matrices = [
            rm.r_check(args, p),
            rm.r_check_deriv(args, p),
            rm.exchange_E(args, p),
            rm.exchange_E_closed(args, p),
            rm.e_tri(args.eta, n),
            rm.r_tri(args.x, args.eta, n),
            rm.e_heis(args.a, gamma),
            rm.r_heis(args.a, gamma),
        ]
        worst = max(worst, max(float(np.max(np.abs(m.entries[off_block]))) for m in matrices))
    return worst


@check("rmatrix", "r_check_derivative", 1e-7)
def _r_derivative(ctx: CheckContext) -> float:
    h = 1e-6
    worst = 0.0
    for _ in range(ctx.draws):
        p, args = ctx.elliptic(), _dyn_args(ctx)
        plus = rm.r_check(rm.DynArgs(args.x + h, args.a, args.eta), p).entries
        minus = rm.r_check(rm.DynArgs(args.x - h, args.a, args.eta), p).entries
        numeric = (plus - minus) / (2 * h)
        worst = max(worst, float(np.max(np.abs(numeric - rm.r_check_deriv(args, p).entries))))
    return worst


@check("rmatrix", "exchange_crosscheck", 1e-10, draws=100)
def _exchange_crosscheck(ctx: CheckContext) -> float:
    worst = 0.0
    for _ in range(ctx.draws):
        p, args = ctx.elliptic(), _dyn_args(ctx)
        worst = max(worst, rm.exchange_crosscheck(args, p))
    return worst


@check("rmatrix", "exchange_isotropic_limit", 1e-3)
def _exchange_isotropic(ctx: CheckContext) -> float:
    # E -> 1 - P needs both eta*a -> 0 and |a| -> infinity; the error is O(1/|a|) + O(eta |a|)
    one_minus_p = rm.RMatrix4.identity() - rm.RMatrix4.permutation()
    eta, a = 1e-8, -1e4j
    ctx.used.update({"eta": eta, "a": a})
    worst = 0.0
    for _ in range(ctx.draws):
        p = ctx.elliptic()
        x = ctx.complex_in((0.5, 1.5), (-0.3, 0.3))
        worst = max(worst, rm.exchange_E(rm.DynArgs(x, a, eta), p).distance(one_minus_p))
    return worst


@check("rmatrix", "e_tri_temperley_lieb", 1e-12)
def _e_tri_tl(ctx: CheckContext) -> float:
    worst = 0.0
    for _ in range(ctx.draws):
        n = float(ctx.value("n_sites", lambda: int(ctx.rng.integers(3, 8))))
        eta = ctx.eta()
        e = rm.e_tri(eta, n)
        q = np.exp(1j * np.pi * eta / n)
        worst = max(
            worst,
            (e @ e).distance(e * (q + 1 / q)),
            rm.r_tri(0, eta, n).distance(rm.RMatrix4.identity()),
        )
    return worst


@check("rmatrix", "exchange_trigonometric_limit", 1e-8)
def _exchange_trig(ctx: CheckContext) -> float:
    worst = 0.0
    for _ in range(ctx.draws):
        n = float(ctx.value("n_sites", lambda: int(ctx.rng.integers(3, 8))))
        p = el.EllipticParams(0.0, n)
        eta = ctx.eta()
        a = rm.asymptotic_a(eta, period=n)
        x = ctx.complex_in((0.5, 1.5), (-0.3, 0.3))
        worst = max(worst, rm.exchange_E(rm.DynArgs(x, a, eta), p).distance(rm.e_tri(eta, n)))
    return worst


@check("rmatrix", "e_heis_temperley_lieb", 1e-12)
def _e_heis_tl(ctx: CheckContext) -> float:
    worst = 0.0
    for _ in range(ctx.draws):
        gamma = float(ctx.value("gamma", lambda: ctx.uniform(0.1, 0.45)))
        e = rm.e_heis(ctx.a(), gamma)
        worst = max(worst, (e @ e).distance(e * (2 * np.cos(np.pi * gamma))))
    return worst


@check("rmatrix", "e_heis_isotropic_limit", 1e-3)
def _e_heis_isotropic(ctx: CheckContext) -> float:
    e = rm.e_heis(-1e5j, 1e-10)
    return e.distance(rm.RMatrix4.identity() - rm.RMatrix4.permutation())


@check("rmatrix", "dybe", 1e-11, draws=100)
def _dybe(ctx: CheckContext) -> float:
    worst = 0.0
    for draw in range(ctx.draws):
        kappa = 0.0 if draw % 4 == 0 else None
        p = ctx.elliptic(kappa)
        x, x1, x2 = (ctx.complex_in((-1.0, 1.0), (-0.3, 0.3)) for _ in range(3))
        if draw % 5 == 1:
            x2 = x1
        worst = max(worst, rm.dybe_residual(x, x1, x2, ctx.a(), ctx.eta(), p))
    return worst


# =============================================================================
# chain
# =============================================================================

@check("chain", "perm_unitarity", 1e-11, draws=3)
def _perm_unitarity(ctx: CheckContext) -> float:
    worst = 0.0
    for _ in range(ctx.draws):
        p = ctx.chain()
        x = ctx.complex_in((-1.5, 1.5), (-0.3, 0.3))
        identity = ch.SpinOperator.identity(p.n_sites)
        for i in range(1, p.n_sites):
            worst = max(worst, (ch.perm_P(i, -x, p) @ ch.perm_P(i, x, p)).distance(identity))
    return worst


@check("chain", "perm_braid", 1e-11, draws=3)
def _perm_braid(ctx: CheckContext) -> float:
    worst = 0.0
    for _ in range(ctx.draws):
        p = ctx.chain()
        x, y = (ctx.complex_in((-1.5, 1.5), (-0.3, 0.3)) for _ in range(2))
        for i in range(1, p.n_sites - 1):
            lhs = ch.perm_P(i, x - y, p) @ ch.perm_P(i + 1, x, p) @ ch.perm_P(i, y, p)
            rhs = ch.perm_P(i + 1, y, p) @ ch.perm_P(i, x, p) @ ch.perm_P(i + 1, x - y, p)
            worst = max(worst, lhs.distance(rhs))
    return worst


@check("chain", "s_left_index_shift", 1e-11, draws=2)
def _s_left_index_shift(ctx: CheckContext) -> float:
    worst = 0.0
    for _ in range(ctx.draws):
        p = ctx.chain(3, 5)
        n = p.n_sites
        # explicit products with bond indices offset by i - 1
        for i in range(1, n):
            for j in range(i + 1, n + 1):
                length = j - i + 1
                op = ch.exch_E(i, 1 - length, p)
                for k in range(2, length):
                    bond = k + i - 1
                    op = ch.perm_P(bond, length - k, p) @ op @ ch.perm_P(bond, k - length, p)
                worst = max(worst, op.distance(ch.s_left(i, j, p)))
        if n == 3:
            example = ch.perm_P(2, 1, p) @ ch.exch_E(1, -2, p) @ ch.perm_P(2, -1, p)
            worst = max(worst, example.distance(ch.s_left(1, 3, p)))
    return worst


@check("chain", "chiral_commutativity", 1e-10, draws=10)
def _chiral_commutativity(ctx: CheckContext) -> float:
    worst = 0.0
    for p in ctx.chain_draws(2, 6):
        worst = max(worst, ch.h_left(p).commutator_norm(ch.h_right(p)))
    return worst


@check("chain", "sz_conservation", 1e-12, draws=10)
def _sz_conservation(ctx: CheckContext) -> float:
    worst = 0.0
    for p in ctx.chain_draws(2, 6):
        sz = ch.sz_total(p.n_sites)
        worst = max(worst, ch.h_left(p).commutator_norm(sz), ch.h_right(p).commutator_norm(sz))
    return worst


@check("chain", "translation_commutes", 1e-10, draws=10)
def _translation_commutes(ctx: CheckContext) -> float:
    worst = 0.0
    for p in ctx.chain_draws(2, 6):
        g = ch.translation_G(p)
        worst = max(worst, ch.h_left(p).commutator_norm(g), ch.h_right(p).commutator_norm(g))
    return worst


@check("chain", "translation_central_power", 1e-11, draws=10)
def _translation_power(ctx: CheckContext) -> float:
    worst = 0.0
    for p in ctx.chain_draws(2, 6):
        worst = max(worst, power_residual(ch.translation_G(p), p.n_sites, ch.twist_total(p)))
    return worst


@check("chain", "normalized_translation_order", 1e-11, draws=10)
def _normalized_order(ctx: CheckContext) -> float:
    worst = 0.0
    for p in ctx.chain_draws(2, 6):
        worst = max(worst, power_residual(ch.g_normalized(p), p.n_sites, ch.SpinOperator.identity(p.n_sites)))
    return worst


@check("chain", "boundary_conjugation", 1e-11, draws=10)
def _boundary_conjugation(ctx: CheckContext) -> float:
    worst = 0.0
    for p in ctx.chain_draws(2, 6):
        n = p.n_sites
        g = ch.translation_G(p)
        g_inv = g.inverse()
        worst = max(
            worst,
            conjugation_residual(g, g_inv, ch.s_left(1, 2, p), ch.s_left(1, n, p)),
            conjugation_residual(g_inv, g, ch.s_right(n - 1, n, p), ch.s_right(1, n, p)),
        )
    return worst


@check("chain", "magnon_eigenvectors", 1e-10, draws=3)
def _magnon_eigenvectors(ctx: CheckContext) -> float:
    worst = 0.0
    for _ in range(ctx.draws):
        p = ctx.chain()
        g = ch.g_normalized(p)
        for state in ch.magnon_states(p):
            worst = max(worst, float(np.linalg.norm(g @ state.vector - state.eigenvalue * state.vector)))
    return worst


@check("chain", "reference_eigenvector", 1e-10, draws=3)
def _reference_eigenvector(ctx: CheckContext) -> float:
    worst = 0.0
    for _ in range(ctx.draws):
        p = ctx.chain()
        for h in (ch.h_left(p), ch.h_right(p)):
            column = np.array(h.matrix[:, 0])
            scale = max(float(np.max(np.abs(h.matrix))), 1e-300)
            worst = max(worst, float(np.max(np.abs(column[1:]))) / scale)
    return worst


@check("chain", "su2_symmetry", 1e-12, draws=3)
def _su2_symmetry(ctx: CheckContext) -> float:
    worst = 0.0
    for _ in range(ctx.draws):
        p = ctx.chain()
        for h in (ch.h_inozemtsev(p), ch.h_haldane_shastry(p)):
            for axis in "xyz":
                worst = max(worst, h.commutator_norm(ch.spin_total(p.n_sites, axis)))
    return worst


@check("chain", "spectrum_reality", 1e-8, draws=1)
def _spectrum_reality(ctx: CheckContext) -> float:
    p = ch.ChainParams(5, 0.7, 0.4j, 1.3)
    ctx.used.update({"n_sites": 5, "kappa": 0.7, "eta": 0.4j, "a": 1.3, "a_prime": 0.7j})
    worst = 0.0
    for op in (ch.h_left(p), ch.h_intermediate(0.7j, p)):
        values = ch.spectrum(op)
        spread = max(float(np.ptp(values.real)), 1.0)
        worst = max(worst, float(np.max(np.abs(values.imag))) / spread)
    return worst


@check("chain", "sector_spectrum_union", 1e-8, draws=2)
def _sector_union(ctx: CheckContext) -> float:
    worst = 0.0
    for _ in range(ctx.draws):
        p = ctx.chain()
        h = ch.h_left(p)
        sectors = np.concatenate([ch.spectrum(h, sector=k) for k in range(p.n_sites + 1)])
        full = ch.spectrum(h)
        worst = max(worst, ch.spectral_distance(sectors, full) / max(float(np.max(np.abs(full))), 1.0))
    return worst


def _xxz_draws(ctx: CheckContext) -> Iterator[ch.XXZChain]:
    sizes = ctx.sizes(3, 6)
    for n in sizes:
        for _ in range(ctx.draws):
            yield ctx.xxz(n)
    ctx.used["n_sites"] = sizes


@check("chain", "xxz_temperley_lieb", 1e-11, draws=20)
def _xxz_tl(ctx: CheckContext) -> float:
    worst = 0.0
    for xxz in _xxz_draws(ctx):
        n, factor = xxz.n_sites, 2 * np.cos(np.pi * xxz.gamma)
        for i in range(1, n):
            e = xxz.e_op(i)
            worst = max(worst, scaled_residual(e @ e, factor * e, _norm2(e) * e.norm()))
            for j in (i - 1, i + 1):
                if 1 <= j < n:
                    scale = _norm2(e) * _norm2(xxz.e_op(j)) * e.norm()
                    worst = max(worst, scaled_residual(e @ xxz.e_op(j) @ e, e, scale))
    return worst


@check("chain", "xxz_affine", 1e-11, draws=20)
def _xxz_affine(ctx: CheckContext) -> float:
    worst = 0.0
    for xxz in _xxz_draws(ctx):
        n = xxz.n_sites
        u = xxz.u_op()
        u_inv = u.inverse()
        for i in range(1, n + 1):
            worst = max(worst, conjugation_residual(u, u_inv, xxz.e_op(i), xxz.e_op((i - 1) % n)))
        central = u.power(n)
        central_scale = _norm2(u) ** n
        for i in range(n):
            e = xxz.e_op(i)
            commutator = central @ e - e @ central
            worst = max(worst, commutator.norm() / max(2 * central_scale * e.norm(), 1e-300))
        product = ch.SpinOperator.identity(n)
        scale = _norm2(u) ** 2 * math.sqrt(product.dim)
        for i in range(1, n):
            product = product @ xxz.e_op(i)
            scale *= _norm2(xxz.e_op(i))
        worst = max(worst, scaled_residual(u @ u @ product, xxz.e_op(n - 1), scale))
    return worst


@check("chain", "xxz_boundary_forms", 1e-11, draws=20)
def _xxz_boundary(ctx: CheckContext) -> float:
    worst = 0.0
    for xxz in _xxz_draws(ctx):
        g = xxz.g_op()
        g_inv = g.inverse()
        condition = _norm2(g) * _norm2(g_inv)
        scale = condition * max(xxz.e_op(1).norm(), xxz.e_op(xxz.n_sites - 1).norm())
        worst = max(worst, scaled_residual(xxz.boundary("forward"), xxz.boundary("backward"), scale))
    return worst


# =============================================================================
# limits
# =============================================================================

@check("chain", "limit_inozemtsev", 1e-3, draws=2, suite="limits")
def _limit_inozemtsev(ctx: CheckContext) -> float:
    worst = 0.0
    ratios = []
    for _ in range(ctx.draws):
        n, kappa, a = ctx.n_sites(3, 5), ctx.kappa(), ctx.a()
        distances = []
        for eta in (1e-3, 1e-4):
            p = ch.ChainParams(n, kappa, eta, a)
            ino = ch.h_inozemtsev(p)
            distances.append(max(_spectral_rel(ch.h_left(p), ino), _spectral_rel(ch.h_right(p), ino)))
        ratios.append(distances[0] / max(distances[1], 1e-300))
        worst = max(worst, distances[1])
    ctx.used["error_ratios"] = ratios
    # first-order convergence: a decade in eta buys about a decade in distance
    if not all(RATIO_WINDOW[0] <= r <= RATIO_WINDOW[1] for r in ratios):
        return math.inf
    return worst


@check("chain", "limit_magnon_inozemtsev", 1e-3, draws=2, suite="limits")
def _limit_magnons(ctx: CheckContext) -> float:
    worst = 0.0
    for _ in range(ctx.draws):
        p = ch.ChainParams(ctx.n_sites(3, 5), ctx.kappa(), 1e-4, ctx.a())
        energies = [m.energy_left for m in ch.magnon_energies(p)]
        one_magnon = ch.spectrum(ch.h_inozemtsev(p), sector=1)
        worst = max(worst, ch.spectral_distance(energies, one_magnon) / max(float(np.max(np.abs(one_magnon))), 1.0))
    return worst


@check("chain", "limit_deformed_hs", 1e-8, draws=2, suite="limits")
def _limit_deformed_hs(ctx: CheckContext) -> float:
    worst = 0.0
    for _ in range(ctx.draws):
        n, eta = ctx.n_sites(3, 5), ctx.eta()
        p = ch.ChainParams(n, 0.0, eta, rm.asymptotic_a(eta, period=n))
        for chirality in ("left", "right"):
            worst = max(worst, _spectral_rel(ch.hamiltonian(p, chirality), ch.h_deformed_hs(p, chirality)))
    return worst


@check("chain", "limit_haldane_shastry", 1e-3, draws=2, suite="limits")
def _limit_haldane_shastry(ctx: CheckContext) -> float:
    worst = 0.0
    for _ in range(ctx.draws):
        n = ctx.n_sites(3, 5)
        hs = ch.h_haldane_shastry(ch.ChainParams(n, 0.0, 0.3, 0.5))
        deformed = ch.h_deformed_hs(ch.ChainParams(n, 0.0, 1e-4, 0.5))
        ino = ch.h_inozemtsev(ch.ChainParams(n, 1e-5, 0.3, 0.5))
        worst = max(worst, _spectral_rel(deformed, hs), _rel(ino.matrix, hs.matrix))
    return worst


@check("chain", "limit_intermediate", 1e-3, draws=2, suite="limits")
def _limit_intermediate(ctx: CheckContext) -> float:
    worst = 0.0
    eta = 1e-4
    for _ in range(ctx.draws):
        a_prime = complex(ctx.value("a_prime", lambda: ctx.complex_in((0.2, 0.6), (0.2, 0.6))))
        p = ch.ChainParams(ctx.n_sites(3, 5), ctx.kappa(), eta, a_prime / eta)
        target = ch.h_intermediate(a_prime, p)
        worst = max(worst, _spectral_rel(ch.h_left(p), target), _spectral_rel(ch.h_right(p), target))
    return worst


@check("chain", "limit_intermediate_inozemtsev", 1e-3, draws=2, suite="limits")
def _limit_intermediate_inozemtsev(ctx: CheckContext) -> float:
    worst = 0.0
    for _ in range(ctx.draws):
        p = ctx.chain()
        worst = max(worst, _spectral_rel(ch.h_intermediate(1e-5, p), ch.h_inozemtsev(p)))
    return worst


@check("chain", "limit_short_range", 1e-3, draws=1, suite="limits")
def _limit_short_range(ctx: CheckContext) -> float:
    gamma = float(ctx.value("gamma", lambda: ctx.uniform(0.15, 0.35)))
    a = complex(ctx.value("a", lambda: ctx.uniform(0.3, 0.9)))
    n = ctx.n_sites(3, 4)
    reference = ch.h_xxz(gamma, a, n)
    distances = []
    for kappa in (4.0, 8.0):
        p = ch.ChainParams(n, kappa, -1j * np.pi * gamma / kappa, a)
        distances.append(_spectral_rel(ch.short_range_hamiltonian(p), reference))
    ctx.used["distances"] = distances
    # the distance must drop by at least a decade between the two couplings
    converged = distances[1] < 1e-10 or 10 * distances[1] <= distances[0]
    return distances[1] if converged else math.inf


@check("chain", "limit_heisenberg_xxx", 1e-3, draws=1, suite="limits")
def _limit_xxx(ctx: CheckContext) -> float:
    n = ctx.n_sites(3, 5)
    return _spectral_rel(ch.h_xxz(1e-10, -1e5j, n), ch.h_heisenberg_xxx(n))


# =============================================================================
# qmbs
# =============================================================================

@check("qmbs", "normal_form_associativity", 1e-10, draws=5)
def _normal_form(ctx: CheckContext) -> float:
    worst = 0.0
    for _ in range(ctx.draws):
        p = ctx.qmbs()
        d1, dm1 = qm.build_d1(p), qm.build_dminus1(p)
        x = qm.generic_point(ctx.rng, p)
        f = _exp_test_function(ctx.rng, p.n_sites, d1.dim)
        composed = qm.apply(qm.compose(d1, dm1), f, x)
        nested = qm.apply(d1, lambda y: qm.apply(dm1, f, y), x)
        worst = max(worst, _rel(composed, nested))
    return worst


def _commutator_check(ctx: CheckContext, build_first, build_second, spot_checks: int = 3) -> float:
    """`draws` fresh points for each of N = 2 and 3, then a few at N = 4."""
    worst = 0.0
    plan = [(n, ctx.draws) for n in ctx.sizes(2, 3)]
    if "n_sites" not in ctx.overrides:
        plan.append((4, spot_checks))
    for n, count in plan:
        for _ in range(count):
            chain = ctx.chain_at(n)
            p = qm.QmbsParams(n, chain.kappa, chain.eta, chain.a)
            x = qm.generic_point(ctx.rng, p)
            worst = max(worst, qm.commutator_residual(build_first(p), build_second(p), x))
    ctx.used["n_sites"] = [n for n, _ in plan]
    return worst


@check("qmbs", "commutator_d1_dN", 1e-12, draws=20)
def _comm_d1_dn(ctx: CheckContext) -> float:
    return _commutator_check(ctx, qm.build_d1, qm.build_dN)


@check("qmbs", "commutator_dminus1_dN", 1e-12, draws=20)
def _comm_dm1_dn(ctx: CheckContext) -> float:
    return _commutator_check(ctx, qm.build_dminus1, qm.build_dN)


@check("qmbs", "commutator_d1_dminus1", 1e-9, draws=20)
def _comm_d1_dm1(ctx: CheckContext) -> float:
    return _commutator_check(ctx, qm.build_d1, qm.build_dminus1)


@check("qmbs", "commutator_spinless", 1e-9, draws=20)
def _comm_spinless(ctx: CheckContext) -> float:
    return _commutator_check(
        ctx,
        lambda p: qm.build_d1(p, spinless=True),
        lambda p: qm.build_dminus1(p, spinless=True),
    )


@check("qmbs", "ptot_invariance", 1e-10, draws=5)
def _ptot_invariance(ctx: CheckContext) -> float:
    worst = 0.0
    for _ in range(ctx.draws):
        p = ctx.qmbs()
        x = qm.generic_point(ctx.rng, p)
        for op in (qm.build_d1(p), qm.build_dminus1(p)):
            f = _exp_test_function(ctx.rng, p.n_sites, op.dim)
            for i in range(1, p.n_sites):
                worst = max(worst, qm.ptot_invariance_residual(op, i, f, x, p))
    return worst


@check("qmbs", "ptot_involution", 1e-12, draws=5)
def _ptot_involution(ctx: CheckContext) -> float:
    worst = 0.0
    for _ in range(ctx.draws):
        p = ctx.qmbs()
        x = qm.generic_point(ctx.rng, p)
        f = _exp_test_function(ctx.rng, p.n_sites, 2 ** p.n_sites)
        for i in range(1, p.n_sites):
            twice = qm.ptot_apply(i, qm.ptot_apply(i, f, p), p)
            worst = max(worst, _rel(twice(x), f(x)))
    return worst


@check("qmbs", "higher_seed_consistency", 1e-12, draws=5)
def _higher_seed(ctx: CheckContext) -> float:
    worst = 0.0
    for _ in range(ctx.draws):
        p = ctx.qmbs()
        x = qm.generic_point(ctx.rng, p)
        for sign, direct in ((1, qm.build_d1(p)), (-1, qm.build_dminus1(p))):
            generated = qm.build_higher(1, sign, p)
            if set(generated.terms) != set(direct.terms):
                return math.inf
            for shift in direct.terms:
                worst = max(worst, _rel(generated.coefficient(shift, x), direct.coefficient(shift, x)))
    return worst


@check("qmbs", "higher_top_charge", 1e-12, draws=3)
def _higher_top(ctx: CheckContext) -> float:
    worst = 0.0
    for _ in range(ctx.draws):
        p = ctx.qmbs()
        x = qm.generic_point(ctx.rng, p)
        for sign in (1, -1):
            op = qm.build_higher(p.n_sites, sign, p)
            if list(op.terms) != [(sign,) * p.n_sites]:
                return math.inf
            worst = max(worst, _rel(op.coefficient((sign,) * p.n_sites, x), np.eye(op.dim)))
    return worst


@check("qmbs", "higher_ptot_invariance", 1e-10, draws=3)
def _higher_ptot(ctx: CheckContext) -> float:
    worst = 0.0
    for _ in range(ctx.draws):
        p = ctx.qmbs(3, 3)
        x = qm.generic_point(ctx.rng, p)
        for r, sign in ((p.n_sites - 1, -1), (2, 1)):
            op = qm.build_higher(r, sign, p)
            f = _exp_test_function(ctx.rng, p.n_sites, op.dim)
            for i in range(1, p.n_sites):
                worst = max(worst, qm.ptot_invariance_residual(op, i, f, x, p))
    return worst


@check("qmbs", "equilibrium_1", 1e-10, draws=5)
def _equilibrium_1(ctx: CheckContext) -> float:
    worst = 0.0
    for _ in range(ctx.draws):
        cfg = qm.equilibrium_1(ctx.qmbs(2, 6))
        worst = max(worst, qm.equilibrium_residual(cfg))
    return worst


@check("qmbs", "equilibrium_2", 1e-10, draws=5)
def _equilibrium_2(ctx: CheckContext) -> float:
    worst = 0.0
    for _ in range(ctx.draws):
        cfg = qm.equilibrium_2(ctx.qmbs(2, 6))
        worst = max(worst, qm.equilibrium_residual(cfg))
    return worst


@check("qmbs", "equilibrium_constant", 1e-10, draws=5)
def _equilibrium_constant(ctx: CheckContext) -> float:
    worst = 0.0
    for _ in range(ctx.draws):
        p = ctx.qmbs(2, 6)
        for cfg in (qm.equilibrium_1(p), qm.equilibrium_2(p)):
            velocities = qm.classical_velocities(cfg.positions, cfg.momenta, cfg) / cfg.epsilon
            worst = max(worst, _rel(velocities, np.full(len(velocities), cfg.a_star)))
    return worst


@check("qmbs", "freeze_left", 1e-7, draws=3)
def _freeze_left(ctx: CheckContext) -> float:
    return max(qm.freeze_check("left", ctx.qmbs(2, 4)) for _ in range(ctx.draws))


@check("qmbs", "freeze_right", 1e-7, draws=3)
def _freeze_right(ctx: CheckContext) -> float:
    return max(qm.freeze_check("right", ctx.qmbs(2, 4)) for _ in range(ctx.draws))


@check("qmbs", "freeze_isotropic_limit", 1e-3, draws=1)
def _freeze_isotropic(ctx: CheckContext) -> float:
    n = ctx.n_sites(3, 4)
    p = qm.QmbsParams(n, ctx.kappa(), 1e-4, ctx.a())
    frozen, a_star, _ = qm.frozen_charge("left", p)
    target = a_star * ch.h_inozemtsev(p.chain)
    return _spectral_rel(frozen, target)


# =============================================================================
# Runner and reports
# =============================================================================

def _run_check(spec: CheckSpec, seed: int, overrides: Dict[str, Any], draws: Optional[int]) -> CheckResult:
    rng = np.random.default_rng([seed, spec.index])
    count = spec.draws or draws or get_settings().draws_per_check
    ctx = CheckContext(rng, count, overrides)
    start = time.perf_counter()
    error = None
    try:
        residual = float(spec.func(ctx))
    except EllSpinException as e:
        if not (is_numerical(e) or is_client_error(e)):
            raise
        residual, error = math.inf, f"{type(e).__name__}: {e.message}"
        logger.warning("check_flagged", check=spec.name, error=error)
    except Exception as e:
        raise wrap_error(e, f"Check '{spec.name}' crashed: {e}", InfrastructureError, check=spec.name)
    runtime_ms = int(round((time.perf_counter() - start) * 1000))
    result = CheckResult(spec.name, spec.suite, residual, spec.tolerance, seed, dict(ctx.used), runtime_ms, error)
    logger.debug("check_completed", check=spec.name, residual=residual, passed=result.passed)
    return result


def run_suite(
    suite: str = "all",
    seed: int = 1,
    overrides: Optional[Dict[str, Any]] = None,
    jobs: Optional[int] = None,
    draws: Optional[int] = None,
) -> List[CheckResult]:
    """
    Run every check of a suite and return the results in registry order.

    Args:
        suite: One of SUITES
        seed: Base seed; each check derives its generator from (seed, index)
        overrides: Fixed parameter values (n_sites, kappa, eta, a, gamma, a_prime)
        jobs: Worker threads (default from settings)
        draws: Draws for checks without their own count

    Returns:
        List of CheckResult
    """
    specs = list_checks(suite)
    overrides = dict(overrides or {})
    jobs = jobs or get_settings().jobs
    logger.info("suite_started", suite=suite, seed=seed, checks=len(specs), jobs=jobs)

    def run(spec: CheckSpec) -> CheckResult:
        return _run_check(spec, seed, overrides, draws)

    if jobs > 1 and len(specs) > 1:
        with ThreadPool(min(jobs, len(specs))) as pool:
            results = pool.map(run, specs)
    else:
        results = [run(spec) for spec in specs]

    failed = sum(not r.passed for r in results)
    logger.info("suite_completed", suite=suite, checks=len(results), failed=failed)
    return results


def results_to_records(results: Sequence[CheckResult]) -> List[Dict[str, Any]]:
    return [r.to_dict() for r in results]


def write_report(results: Sequence[CheckResult], path: Optional[Path] = None, fmt: str = "json") -> str:
    """Serialize results as JSON or CSV; write to path when given and return the text."""
    records = results_to_records(results)
    if fmt == "json":
        text = json.dumps(records, indent=2) + "\n"
    elif fmt == "csv":
        frame = pd.DataFrame.from_records(records)
        if not frame.empty:
            frame["params_used"] = frame["params_used"].map(json.dumps)
        text = frame.to_csv(index=False, float_format="%.17g")
    else:
        raise ParameterError("format must be json or csv", details={"format": fmt})
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def summary_table(results: Sequence[CheckResult]) -> Table:
    """Rich table of check outcomes."""
    table = Table(title="Verification")
    table.add_column("Check", style="cyan")
    table.add_column("Suite")
    table.add_column("Residual", justify="right")
    table.add_column("Tolerance", justify="right")
    table.add_column("Result")
    table.add_column("ms", justify="right")
    for r in results:
        status = "[green]pass[/green]" if r.passed else "[red]FAIL[/red]"
        residual = f"{r.residual:.3e}" if math.isfinite(r.residual) else (r.error or "inf")
        table.add_row(r.name, r.suite, residual, f"{r.tolerance:.0e}", status, str(r.runtime_ms))
    return table
