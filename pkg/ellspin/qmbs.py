"""
Dynamical elliptic spin-Ruijsenaars difference operators, the classical
Ruijsenaars-Schneider equilibria, and freezing onto the deformed chain.

A difference operator is stored in normal form: a map from integer shift
vectors m to coefficient functions C_m(x), acting as

    (D f)(x) = sum_m C_m(x) f(x - c m),      c = i hbar epsilon.

Coefficients are closures evaluated on demand; commutativity is certified
pointwise at generic complex points.
"""
import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from ellspin.chain import ChainParams, SpinOperator, _embed_sparse, hamiltonian
from ellspin.config import get_settings
from ellspin.elliptic import (
    EllipticParams,
    GeneralTheta,
    lattice_distance,
    theta,
    theta_nonzero,
    vartheta,
    vartheta_log_deriv,
)
from ellspin.exceptions import GateError, ParameterError
from ellspin.rmatrix import DynArgs, r_check
from ellspin.utils.logger import get_logger

logger = get_logger(__name__)

INVARIANTS = (
    "normal_form_associativity",
    "commutator_d1_dN",
    "commutator_dminus1_dN",
    "commutator_d1_dminus1",
    "commutator_spinless",
    "ptot_invariance",
    "ptot_involution",
    "higher_seed_consistency",
    "higher_top_charge",
    "higher_ptot_invariance",
    "equilibrium_1",
    "equilibrium_2",
    "equilibrium_constant",
    "freeze_left",
    "freeze_right",
    "freeze_isotropic_limit",
)

Shift = Tuple[int, ...]
Coefficient = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class QmbsParams:
    """Chain parameters plus the shift scale of the difference operators."""

    n_sites: int
    kappa: float
    eta: complex
    a: complex
    hbar: float = field(default_factory=lambda: get_settings().hbar)
    epsilon: complex = field(default_factory=lambda: get_settings().epsilon)

    def __post_init__(self):
        object.__setattr__(self, "epsilon", complex(self.epsilon))
        if self.hbar <= 0:
            raise ParameterError("hbar must be positive", details={"hbar": self.hbar})
        # validates N, kappa, eta and a
        self.chain

    @cached_property
    def chain(self) -> ChainParams:
        return ChainParams(self.n_sites, self.kappa, self.eta, self.a)

    @property
    def elliptic(self) -> EllipticParams:
        return self.chain.elliptic

    @property
    def step(self) -> complex:
        """The coordinate decrement c = i hbar epsilon of a unit shift."""
        return 1j * self.hbar * self.epsilon

    def with_epsilon(self, epsilon: complex) -> "QmbsParams":
        return QmbsParams(self.n_sites, self.kappa, self.eta, self.a, self.hbar, epsilon)


@dataclass(frozen=True, eq=False)
class DiffOp:
    """Difference operator in normal form (all shifts to the right)."""

    n_sites: int
    dim: int
    step: complex
    terms: Mapping[Shift, Coefficient]

    @property
    def shifts(self) -> List[Shift]:
        return sorted(self.terms)

    def coefficient(self, shift: Sequence[int], x: Sequence[complex]) -> np.ndarray:
        shift = tuple(int(s) for s in shift)
        if shift not in self.terms:
            return np.zeros((self.dim, self.dim), dtype=complex)
        return self.terms[shift](np.asarray(x, dtype=complex))

    def __len__(self) -> int:
        return len(self.terms)


def _shifted(x: np.ndarray, step: complex, shift: Shift) -> np.ndarray:
    return x - step * np.asarray(shift)


def _swap_coords(x: np.ndarray, i: int) -> np.ndarray:
    """Exchange coordinates i and i+1 (1-based)."""
    y = np.array(x, dtype=complex)
    y[i - 1], y[i] = x[i], x[i - 1]
    return y


def _swap_shift(m: Shift, i: int) -> Shift:
    m = list(m)
    m[i - 1], m[i] = m[i], m[i - 1]
    return tuple(m)


# =============================================================================
# Coefficients
# =============================================================================

class _Factors:
    """Coefficient building blocks A_S(x) and P_{i,i+1}(y) for one parameter set."""

    def __init__(self, params: QmbsParams, spinless: bool = False):
        self.params = params
        self.spinless = spinless
        self.n = params.n_sites
        self.dim = 1 if spinless else 2 ** self.n
        self.ell = params.elliptic

    def identity(self) -> np.ndarray:
        return np.eye(self.dim, dtype=complex)

    def perm(self, i: int, y: complex) -> np.ndarray:
        if self.spinless:
            return self.identity()
        p = self.params
        family = lambda a: r_check(DynArgs(y, a, p.eta), self.ell)  # noqa: E731
        return _embed_sparse(family, i, self.n, p.a).toarray()

    def a_subset(self, subset: Iterable[int], x: np.ndarray) -> complex:
        """A_S(x) = prod_{i in S, j not in S} theta(x_i - x_j + eta) / theta(x_i - x_j)."""
        inside = set(subset)
        value = 1.0 + 0j
        for i in inside:
            for j in range(1, self.n + 1):
                if j in inside:
                    continue
                diff = x[i - 1] - x[j - 1]
                value *= theta(diff + self.params.eta, self.ell) / theta_nonzero(diff, self.ell, "A coefficient")
        return value


def _seed_dict(factors: _Factors, sign: int) -> Dict[Shift, Coefficient]:
    n, c = factors.n, factors.params.step
    terms: Dict[Shift, Coefficient] = {}
    for i in range(1, n + 1):
        if sign > 0:
            shift = tuple(1 if k == i else 0 for k in range(1, n + 1))
            terms[shift] = _d1_coefficient(factors, i, c)
        else:
            shift = tuple(-1 if k == i else 0 for k in range(1, n + 1))
            terms[shift] = _dminus1_coefficient(factors, i, c)
    return terms


def _d1_coefficient(factors: _Factors, i: int, c: complex) -> Coefficient:
    def coefficient(x: np.ndarray) -> np.ndarray:
        result = factors.a_subset([i], x) * factors.identity()
        for k in range(i - 1, 0, -1):
            result = result @ factors.perm(k, x[i - 1] - x[k - 1])
        for k in range(1, i):
            result = result @ factors.perm(k, x[k - 1] - x[i - 1] + c)
        return result

    return coefficient


def _dminus1_coefficient(factors: _Factors, i: int, c: complex) -> Coefficient:
    n = factors.n

    def coefficient(x: np.ndarray) -> np.ndarray:
        result = factors.a_subset([i], -x) * factors.identity()
        for k in range(i, n):
            result = result @ factors.perm(k, x[k] - x[i - 1])
        for k in range(n - 1, i - 1, -1):
            result = result @ factors.perm(k, x[i - 1] + c - x[k])
        return result

    return coefficient


def build_d1(params: QmbsParams, spinless: bool = False) -> DiffOp:
    """
    First charge: the shift of coordinate i carries

        A_i(x) P_{i-1}(x_i - x_{i-1}) ... P_1(x_i - x_1) P_1(x_1 - x_i + c) ... P_{i-1}(x_{i-1} - x_i + c).

    With ``spinless`` every P is replaced by 1 (scalar coefficients).
    """
    factors = _Factors(params, spinless)
    return DiffOp(params.n_sites, factors.dim, params.step, _seed_dict(factors, +1))


def build_dminus1(params: QmbsParams, spinless: bool = False) -> DiffOp:
    """
    Inverse-shift charge: the shift -e_i carries

        A_i(-x) P_i(x_{i+1} - x_i) ... P_{N-1}(x_N - x_i) P_{N-1}(x_i + c - x_N) ... P_i(x_i + c - x_{i+1}).
    """
    factors = _Factors(params, spinless)
    return DiffOp(params.n_sites, factors.dim, params.step, _seed_dict(factors, -1))


def build_dN(params: QmbsParams, spinless: bool = False) -> DiffOp:
    """The total shift Gamma_1 ... Gamma_N."""
    dim = 1 if spinless else 2 ** params.n_sites
    identity = np.eye(dim, dtype=complex)
    return DiffOp(params.n_sites, dim, params.step, {(1,) * params.n_sites: lambda x: identity})


# =============================================================================
# Algebra
# =============================================================================

def _check_compatible(first: DiffOp, second: DiffOp) -> None:
    if (first.n_sites, first.dim, first.step) != (second.n_sites, second.dim, second.step):
        raise ParameterError(
            "Difference operators built from different parameters",
            details={"first": (first.n_sites, first.dim), "second": (second.n_sites, second.dim)},
        )


def _product(left: Coefficient, right: Coefficient, step: complex, shift: Shift) -> Coefficient:
    return lambda x: left(x) @ right(_shifted(x, step, shift))


def _summed(parts: List[Coefficient]) -> Coefficient:
    return lambda x: sum(part(x) for part in parts)


def compose(first: DiffOp, second: DiffOp) -> DiffOp:
    """(C_m G^m)(C'_m' G^m') = C_m(x) C'_m'(x - c m) G^(m + m')."""
    _check_compatible(first, second)
    collected: Dict[Shift, List[Coefficient]] = {}
    for m, left in first.terms.items():
        for m2, right in second.terms.items():
            total = tuple(a + b for a, b in zip(m, m2))
            collected.setdefault(total, []).append(_product(left, right, first.step, m))
    terms = {shift: parts[0] if len(parts) == 1 else _summed(parts) for shift, parts in collected.items()}
    return DiffOp(first.n_sites, first.dim, first.step, terms)


def commutator_residual(first: DiffOp, second: DiffOp, x: Sequence[complex]) -> float:
    """Largest relative norm of a coefficient of [first, second] at x."""
    x = np.asarray(x, dtype=complex)
    forward, backward = compose(first, second), compose(second, first)
    residual = 0.0
    for shift in set(forward.terms) | set(backward.terms):
        c1, c2 = forward.coefficient(shift, x), backward.coefficient(shift, x)
        scale = max(np.linalg.norm(c1), np.linalg.norm(c2), np.finfo(float).tiny)
        residual = max(residual, float(np.linalg.norm(c1 - c2) / scale))
    return residual


def apply(op: DiffOp, f: Callable[[np.ndarray], np.ndarray], x: Sequence[complex]) -> np.ndarray:
    """sum_m C_m(x) f(x - c m)."""
    x = np.asarray(x, dtype=complex)
    result = np.zeros(op.dim, dtype=complex)
    for shift, coefficient in op.terms.items():
        result = result + coefficient(x) @ f(_shifted(x, op.step, shift))
    return result


def ptot_apply(i: int, f: Callable[[np.ndarray], np.ndarray], params: QmbsParams, spinless: bool = False):
    """The function x -> P_i(x_{i+1} - x_i) f(s_i x)."""
    factors = _Factors(params, spinless)

    def swapped(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=complex)
        return factors.perm(i, x[i] - x[i - 1]) @ f(_swap_coords(x, i))

    return swapped


def ptot_invariance_residual(
    op: DiffOp,
    i: int,
    f: Callable[[np.ndarray], np.ndarray],
    x: Sequence[complex],
    params: QmbsParams,
) -> float:
    """Relative difference between D f and P^tot_i D P^tot_i f at x."""
    if not 1 <= i < op.n_sites:
        raise ParameterError("Bond index must satisfy 1 <= i < N", details={"i": i})
    spinless = op.dim == 1
    x = np.asarray(x, dtype=complex)
    direct = apply(op, f, x)
    inner = ptot_apply(i, f, params, spinless)
    conjugated = ptot_apply(i, lambda y: apply(op, inner, y), params, spinless)(x)
    scale = max(np.linalg.norm(direct), np.finfo(float).tiny)
    return float(np.linalg.norm(direct - conjugated) / scale)


def _conjugate_term(factors: _Factors, i: int, shift: Shift, coefficient: Coefficient, step: complex):
    """P^tot_i conjugation of a single normal-form term."""
    delta = shift[i] - shift[i - 1]

    def conjugated(x: np.ndarray) -> np.ndarray:
        left = factors.perm(i, x[i] - x[i - 1])
        right = factors.perm(i, x[i - 1] - x[i] - step * delta)
        return left @ coefficient(_swap_coords(x, i)) @ right

    return _swap_shift(shift, i), conjugated


def build_higher(r: int, sign: int, params: QmbsParams, spinless: bool = False) -> DiffOp:
    """
    r-th charge generated from its seed by P^tot conjugations.

    The seed is A_{1..r}(x) on the shift (1,..,1,0,..,0) for sign +1 and
    A_{N-r+1..N}(-x) on -(0,..,0,1,..,1) for sign -1.
    """
    n = params.n_sites
    if not 1 <= r <= n:
        raise ParameterError("r must satisfy 1 <= r <= N", details={"r": r, "n_sites": n})
    if sign not in (1, -1):
        raise ParameterError("sign must be +1 or -1", details={"sign": sign})
    factors = _Factors(params, spinless)
    identity = factors.identity()
    if sign > 0:
        seed_shift = tuple([1] * r + [0] * (n - r))
        subset = list(range(1, r + 1))
        seed = lambda x: factors.a_subset(subset, x) * identity  # noqa: E731
    else:
        seed_shift = tuple([0] * (n - r) + [-1] * r)
        subset = list(range(n - r + 1, n + 1))
        seed = lambda x: factors.a_subset(subset, -x) * identity  # noqa: E731

    terms: Dict[Shift, Coefficient] = {seed_shift: seed}
    queue = deque([seed_shift])
    while queue:
        shift = queue.popleft()
        for i in range(1, n):
            new_shift, coefficient = _conjugate_term(factors, i, shift, terms[shift], params.step)
            if new_shift not in terms:
                terms[new_shift] = coefficient
                queue.append(new_shift)
    logger.debug("higher_charge_built", r=r, sign=sign, terms=len(terms))
    return DiffOp(n, factors.dim, params.step, terms)


def generic_point(
    rng: np.random.Generator,
    params: QmbsParams,
    margin: float = 0.05,
    max_tries: int = 1000,
) -> np.ndarray:
    """
    Random complex coordinates whose differences, shifted by up to two
    steps and by eta, stay at least `margin` away from the theta zero lattice.
    """
    n, c, ell = params.n_sites, params.step, params.elliptic
    offsets = [t * c for t in range(-2, 3)]
    for _ in range(max_tries):
        x = rng.uniform(-0.5, 0.5, n) * params.n_sites + 1j * rng.uniform(-0.3, 0.3, n)
        ok = True
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                for offset in offsets:
                    diff = x[i] - x[j] + offset
                    if lattice_distance(diff, ell) < margin or lattice_distance(diff + params.eta, ell) < margin:
                        ok = False
                        break
                if not ok:
                    break
            if not ok:
                break
        if ok:
            return x
    raise ParameterError("Could not draw a generic point", details={"margin": margin, "tries": max_tries})


# =============================================================================
# Classical system and equilibria
# =============================================================================

@dataclass(frozen=True, eq=False)
class EquilibriumConfig:
    """Positions, momenta, modular parameter and common velocity constant."""

    positions: np.ndarray
    momenta: np.ndarray
    tau: complex
    coupling: complex
    epsilon: complex
    a_star: complex

    @property
    def theta(self) -> GeneralTheta:
        return GeneralTheta(self.tau)

    def perturbed(self, site: int, delta: complex) -> "EquilibriumConfig":
        positions = np.array(self.positions, dtype=complex)
        positions[site - 1] += delta
        return EquilibriumConfig(positions, self.momenta, self.tau, self.coupling, self.epsilon, self.a_star)


def _classical_a(x: np.ndarray, coupling: complex, g: GeneralTheta) -> np.ndarray:
    n = len(x)
    values = np.ones(n, dtype=complex)
    for j in range(n):
        for k in range(n):
            if k != j:
                values[j] *= vartheta(x[j] - x[k] + coupling, g) / vartheta(x[j] - x[k], g)
    return values


def classical_velocities(x: Sequence[complex], p: Sequence[complex], cfg: EquilibriumConfig) -> np.ndarray:
    """dx_j/dt = epsilon e^{epsilon p_j} A_j(x)."""
    x, p = np.asarray(x, dtype=complex), np.asarray(p, dtype=complex)
    return cfg.epsilon * np.exp(cfg.epsilon * p) * _classical_a(x, cfg.coupling, cfg.theta)


def classical_forces(x: Sequence[complex], p: Sequence[complex], cfg: EquilibriumConfig) -> np.ndarray:
    """dp_j/dt = -sum_i e^{epsilon p_i} d A_i / d x_j."""
    x, p = np.asarray(x, dtype=complex), np.asarray(p, dtype=complex)
    g, eta = cfg.theta, cfg.coupling
    n = len(x)
    a_values = _classical_a(x, eta, g)
    weights = np.exp(cfg.epsilon * p)
    # log-derivative of the pair factor theta(u + eta)/theta(u) in u
    pair = np.zeros((n, n), dtype=complex)
    for i in range(n):
        for k in range(n):
            if i != k:
                u = x[i] - x[k]
                pair[i, k] = vartheta_log_deriv(u + eta, g) - vartheta_log_deriv(u, g)
    forces = np.zeros(n, dtype=complex)
    for j in range(n):
        total = weights[j] * a_values[j] * pair[j].sum()
        for i in range(n):
            if i != j:
                total -= weights[i] * a_values[i] * pair[i, j]
        forces[j] = -total
    return forces


def classical_hamiltonian(x: Sequence[complex], p: Sequence[complex], sign: int, cfg: EquilibriumConfig) -> complex:
    """H_(+-) = sum_j e^{+-epsilon p_j} A_j(+-x)."""
    x, p = np.asarray(x, dtype=complex), np.asarray(p, dtype=complex)
    return complex(np.sum(np.exp(sign * cfg.epsilon * p) * _classical_a(sign * x, cfg.coupling, cfg.theta)))


def equilibrium_residual(cfg: EquilibriumConfig) -> float:
    """max_j |v_j - epsilon A*| + |F_j|."""
    velocities = classical_velocities(cfg.positions, cfg.momenta, cfg)
    forces = classical_forces(cfg.positions, cfg.momenta, cfg)
    return float(np.max(np.abs(velocities - cfg.epsilon * cfg.a_star) + np.abs(forces)))


def _omega(params: QmbsParams) -> complex:
    if params.kappa <= 0:
        raise ParameterError("The equilibria need kappa > 0", details={"kappa": params.kappa})
    return 1j * math.pi / params.kappa


def equilibrium_1(params: QmbsParams) -> EquilibriumConfig:
    """Equally spaced positions j/N at rest on the lattice (1, omega/N)."""
    n, eta, omega = params.n_sites, params.eta, _omega(params)
    positions = np.arange(1, n + 1) / n + 0j
    a_star = vartheta(eta, GeneralTheta(omega)) / (n * vartheta(eta / n, GeneralTheta(omega / n)))
    return EquilibriumConfig(positions, np.zeros(n, dtype=complex), omega / n, eta / n, params.epsilon, a_star)


def equilibrium_2(params: QmbsParams) -> EquilibriumConfig:
    """
    Positions -j/omega on the lattice (1, -N/omega) with momenta
    epsilon p_j = kappa eta (N - 2j + 1). This is the chain geometry x_k = k
    seen through the modular transformation.
    """
    n, eta, omega, eps = params.n_sites, params.eta, _omega(params), params.epsilon
    j = np.arange(1, n + 1)
    positions = -j / omega
    momenta = params.kappa * eta * (n - 2 * j + 1) / eps
    a_star = vartheta(eta / omega, GeneralTheta(-1 / omega)) / vartheta(eta / omega, GeneralTheta(-n / omega))
    return EquilibriumConfig(positions, momenta, -n / omega, -eta / omega, eps, a_star)


# =============================================================================
# Freezing
# =============================================================================

@dataclass(frozen=True)
class FreezeReport:
    """Outcome of linearizing a charge at the chain equilibrium."""

    chirality: str
    deviation: float
    gate_spread: float
    a_star: complex
    a_star_closed: complex
    fitted_constant: complex

    def to_dict(self) -> dict:
        return {
            "chirality": self.chirality,
            "deviation": self.deviation,
            "gate_spread": self.gate_spread,
            "a_star": self.a_star,
            "a_star_closed": self.a_star_closed,
            "fitted_constant": self.fitted_constant,
        }


def _spin_chain_factor(factors: _Factors, chirality: str, j: int, x: np.ndarray, c: complex) -> np.ndarray:
    """The spin part of the coefficient of Gamma_j^(+-1), without A_j."""
    n = factors.n
    result = factors.identity()
    if chirality == "left":
        for k in range(j - 1, 0, -1):
            result = result @ factors.perm(k, x[j - 1] - x[k - 1])
        for k in range(1, j):
            result = result @ factors.perm(k, x[k - 1] - x[j - 1] + c)
    else:
        for k in range(j, n):
            result = result @ factors.perm(k, x[k] - x[j - 1])
        for k in range(n - 1, j - 1, -1):
            result = result @ factors.perm(k, x[j - 1] + c - x[k])
    return result


def frozen_charge(
    chirality: str,
    params: QmbsParams,
    step: Optional[float] = None,
    gate: float = 1e-10,
) -> Tuple[SpinOperator, complex, float]:
    """
    Linearize the charge of the given chirality at x*_k = k.

    The momentum weights exp(+-kappa eta (N - 2j + 1)) must make
    w_j A_j(+-x*) j-independent; the epsilon-derivative of the weighted spin
    coefficients, divided by i hbar theta(eta), is returned together with
    the common value A* and the relative spread of the weighted values.
    """
    if chirality not in ("left", "right"):
        raise ParameterError("chirality must be 'left' or 'right'", details={"chirality": chirality})
    step = step or get_settings().freeze_step
    n, ell = params.n_sites, params.elliptic
    factors = _Factors(params)
    sign = 1 if chirality == "left" else -1
    x = np.arange(1, n + 1, dtype=complex)
    j = np.arange(1, n + 1)
    weights = np.exp(sign * params.kappa * params.eta * (n - 2 * j + 1))
    weighted = np.array([weights[k - 1] * factors.a_subset([k], sign * x) for k in j])

    a_star = complex(np.mean(weighted))
    spread = float(np.max(np.abs(weighted - a_star)) / max(abs(a_star), np.finfo(float).tiny))
    if spread > gate:
        raise GateError(
            "Weighted coefficients are not site independent",
            details={"chirality": chirality, "spread": spread, "gate": gate},
        )

    def weighted_chain(eps: float) -> np.ndarray:
        c = 1j * params.hbar * eps
        return sum(weighted[k - 1] * _spin_chain_factor(factors, chirality, k, x, c) for k in j)

    derivative = (weighted_chain(step) - weighted_chain(-step)) / (2 * step)
    frozen = derivative / (1j * params.hbar * theta(params.eta, ell))
    return SpinOperator(n, frozen), a_star, spread


def freeze_report(chirality: str, params: QmbsParams, step: Optional[float] = None, gate: float = 1e-10) -> FreezeReport:
    """Compare the frozen charge with A* H and fit the proportionality constant."""
    charge, a_star, spread = frozen_charge(chirality, params, step, gate)
    frozen = charge.matrix
    ell = params.elliptic
    target = hamiltonian(params.chain, chirality).matrix
    scaled = a_star * target
    deviation = float(np.linalg.norm(frozen - scaled) / max(np.linalg.norm(scaled), np.finfo(float).tiny))
    fitted = complex(np.vdot(target, frozen) / np.vdot(target, target))
    closed = theta(params.eta, EllipticParams(params.kappa, 1.0, ell.tolerance)) / theta_nonzero(params.eta, ell)
    logger.info("freeze_evaluated", chirality=chirality, n_sites=params.n_sites, deviation=deviation, spread=spread)
    return FreezeReport(chirality, deviation, spread, a_star, complex(closed), fitted)


def freeze_check(chirality: str, params: QmbsParams) -> float:
    """Relative deviation of the frozen charge from A* H."""
    return freeze_report(chirality, params).deviation
