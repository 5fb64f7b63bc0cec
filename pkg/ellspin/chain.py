"""
N-site spin-chain operators: deformed permutations and exchanges, the chiral
interactions and Hamiltonians, the deformed translation with its magnons,
and the limiting chains (Inozemtsev, Haldane-Shastry, intermediate,
deformed Haldane-Shastry, dynamical XXZ, Heisenberg XXX).

Basis convention: the configuration (s_1, ..., s_N), s = +1 for up, has
index sum_k (1 - s_k)/2 * 2^{N-k}. A down spin is a set bit and site 1 is
the most significant one.

Nearest-neighbour factors are built as sparse matrices and multiplied
sparse-by-sparse; only finished operators are densified and cached.
"""
import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg, sparse
from scipy.optimize import linear_sum_assignment

from ellspin.cache import get_operator_cache
from ellspin.config import get_settings
from ellspin.elliptic import (
    EllipticParams,
    haldane_shastry_potential,
    inozemtsev_potential,
    lattice_distance,
    phi_d1,
    potential_V,
    theta_nonzero,
)
from ellspin.exceptions import (
    ContractError,
    DegenerateNormalizationError,
    ParameterError,
    SizeCapError,
)
from ellspin.rmatrix import DynArgs, RMatrix4, e_heis, e_tri, exchange_E, r_check, r_heis, r_tri
from ellspin.utils.logger import get_logger

logger = get_logger(__name__)

INVARIANTS = (
    "perm_unitarity",
    "perm_braid",
    "s_left_index_shift",
    "chiral_commutativity",
    "sz_conservation",
    "translation_commutes",
    "translation_central_power",
    "normalized_translation_order",
    "boundary_conjugation",
    "magnon_eigenvectors",
    "reference_eigenvector",
    "su2_symmetry",
    "spectrum_reality",
    "sector_spectrum_union",
    "xxz_temperley_lieb",
    "xxz_affine",
    "xxz_boundary_forms",
    "limit_inozemtsev",
    "limit_magnon_inozemtsev",
    "limit_deformed_hs",
    "limit_haldane_shastry",
    "limit_intermediate",
    "limit_intermediate_inozemtsev",
    "limit_short_range",
    "limit_heisenberg_xxx",
)

_SIGMA = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}
# sigma^+ = sigma^x + i sigma^y and sigma^- = sigma^x - i sigma^y
_SIGMA_PLUS = np.array([[0, 2], [0, 0]], dtype=complex)
_SIGMA_MINUS = np.array([[0, 0], [2, 0]], dtype=complex)


# =============================================================================
# Parameters and operators
# =============================================================================

@dataclass(frozen=True)
class ChainParams:
    """Chain length N, range kappa, anisotropy eta and dynamical parameter a."""

    n_sites: int
    kappa: float
    eta: complex
    a: complex
    tolerance: float = field(default_factory=lambda: get_settings().theta_tolerance)

    def __post_init__(self):
        n_sites = int(self.n_sites)
        if n_sites < 2:
            raise ParameterError("A chain needs at least two sites", details={"n_sites": n_sites})
        cap = get_settings().max_sites
        if n_sites > cap:
            raise SizeCapError(
                f"N = {n_sites} exceeds the dense-operator cap",
                details={"n_sites": n_sites, "max_sites": cap},
            )
        object.__setattr__(self, "n_sites", n_sites)
        object.__setattr__(self, "kappa", float(self.kappa))
        for name in ("eta", "a"):
            value = complex(getattr(self, name))
            if not (math.isfinite(value.real) and math.isfinite(value.imag)):
                raise ParameterError(f"{name} must be finite", details={name: value})
            object.__setattr__(self, name, value)

        ell = self.elliptic
        if lattice_distance(2 * self.eta, ell) < ell.pole_threshold * max(1.0, n_sites):
            raise ParameterError(
                "2*eta lies on the theta zero lattice; the potential is undefined",
                details={"eta": self.eta, "kappa": self.kappa, "n_sites": n_sites},
            )
        if lattice_distance(self.eta * self.a, ell) < ell.pole_threshold * max(1.0, n_sites):
            raise ParameterError(
                "eta*a lies on the theta zero lattice; the R-matrix is undefined",
                details={"eta": self.eta, "a": self.a},
            )

    @cached_property
    def elliptic(self) -> EllipticParams:
        return EllipticParams(self.kappa, float(self.n_sites), self.tolerance)

    @property
    def dim(self) -> int:
        return 2 ** self.n_sites

    def replace(self, **changes) -> "ChainParams":
        values = {
            "n_sites": self.n_sites,
            "kappa": self.kappa,
            "eta": self.eta,
            "a": self.a,
            "tolerance": self.tolerance,
        }
        values.update(changes)
        return ChainParams(**values)


@dataclass(frozen=True, eq=False)
class SpinOperator:
    """A dense complex operator on the 2^N-dimensional chain space."""

    n_sites: int
    matrix: np.ndarray

    def __post_init__(self):
        matrix = self.matrix.toarray() if sparse.issparse(self.matrix) else self.matrix
        matrix = np.array(matrix, dtype=complex)
        dim = 2 ** int(self.n_sites)
        if matrix.shape != (dim, dim):
            raise ContractError(
                "Operator dimension does not match the chain length",
                details={"n_sites": self.n_sites, "shape": str(matrix.shape)},
            )
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "n_sites", int(self.n_sites))

    @classmethod
    def identity(cls, n_sites: int) -> "SpinOperator":
        return cls(n_sites, np.eye(2 ** n_sites))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def _check(self, other: "SpinOperator") -> None:
        if other.n_sites != self.n_sites:
            raise ContractError(
                "Operators act on chains of different length",
                details={"left": self.n_sites, "right": other.n_sites},
            )

    def __matmul__(self, other):
        if isinstance(other, SpinOperator):
            self._check(other)
            return SpinOperator(self.n_sites, self.matrix @ other.matrix)
        return self.matrix @ np.asarray(other)

    def __add__(self, other: "SpinOperator") -> "SpinOperator":
        self._check(other)
        return SpinOperator(self.n_sites, self.matrix + other.matrix)

    def __sub__(self, other: "SpinOperator") -> "SpinOperator":
        self._check(other)
        return SpinOperator(self.n_sites, self.matrix - other.matrix)

    def __mul__(self, scalar: complex) -> "SpinOperator":
        return SpinOperator(self.n_sites, complex(scalar) * self.matrix)

    __rmul__ = __mul__

    def transpose(self) -> "SpinOperator":
        return SpinOperator(self.n_sites, self.matrix.T)

    def inverse(self) -> "SpinOperator":
        return SpinOperator(self.n_sites, linalg.inv(self.matrix))

    def power(self, k: int) -> "SpinOperator":
        return SpinOperator(self.n_sites, np.linalg.matrix_power(self.matrix, k))

    def norm(self) -> float:
        return float(np.linalg.norm(self.matrix))

    def distance(self, other: "SpinOperator") -> float:
        """Max-norm of the entrywise difference."""
        self._check(other)
        return float(np.max(np.abs(self.matrix - other.matrix)))

    def commutator_norm(self, other: "SpinOperator", relative: bool = True) -> float:
        """Frobenius norm of [self, other], optionally divided by both norms."""
        self._check(other)
        value = float(np.linalg.norm(self.matrix @ other.matrix - other.matrix @ self.matrix))
        if not relative:
            return value
        scale = self.norm() * other.norm()
        return value / scale if scale > 0 else value

    def sz_leakage(self) -> float:
        """Largest entry connecting different S^z sectors, relative to the largest entry."""
        counts = _popcounts(self.n_sites)
        mask = counts[:, None] != counts[None, :]
        scale = float(np.max(np.abs(self.matrix))) or 1.0
        return float(np.max(np.abs(self.matrix[mask]), initial=0.0)) / scale

    def sector_block(self, down_spins: int, tolerance: float = 1e-10) -> np.ndarray:
        """Block of the sector with the given number of down spins (S^z = N/2 - k)."""
        if not 0 <= down_spins <= self.n_sites:
            raise ParameterError(
                "Sector index out of range",
                details={"down_spins": down_spins, "n_sites": self.n_sites},
            )
        leakage = self.sz_leakage()
        if leakage > tolerance:
            raise ContractError(
                "Operator does not commute with S^z; sector blocks are undefined",
                details={"leakage": leakage},
            )
        idx = sector_indices(self.n_sites, down_spins)
        return self.matrix[np.ix_(idx, idx)]


@dataclass(frozen=True, eq=False)
class MagnonState:
    """A deformed one-magnon state of momentum 2 pi n / N."""

    momentum_index: int
    eigenvalue: complex
    vector: np.ndarray


@dataclass(frozen=True)
class MagnonEnergy:
    momentum_index: int
    translation_eigenvalue: complex
    energy_left: complex
    energy_right: complex

    def to_dict(self) -> dict:
        return {
            "n": self.momentum_index,
            "translation_eigenvalue": self.translation_eigenvalue,
            "energy_left": self.energy_left,
            "energy_right": self.energy_right,
        }


# =============================================================================
# Basis helpers
# =============================================================================

@lru_cache(maxsize=32)
def _popcounts(n_sites: int) -> np.ndarray:
    counts = np.array([bin(i).count("1") for i in range(2 ** n_sites)], dtype=np.int64)
    counts.setflags(write=False)
    return counts


def _site_sigmas(n_sites: int) -> np.ndarray:
    """sigma^z eigenvalue of every site in every basis state, shape (2^N, N)."""
    index = np.arange(2 ** n_sites)[:, None]
    shifts = n_sites - 1 - np.arange(n_sites)[None, :]
    return 1 - 2 * ((index >> shifts) & 1)


def sector_indices(n_sites: int, down_spins: int) -> np.ndarray:
    """Basis indices with exactly `down_spins` down spins."""
    return np.flatnonzero(_popcounts(n_sites) == down_spins)


def _site_op(single: np.ndarray, site: int, n_sites: int) -> sparse.csr_matrix:
    left = sparse.identity(2 ** (site - 1), format="csr")
    right = sparse.identity(2 ** (n_sites - site), format="csr")
    return sparse.kron(sparse.kron(left, sparse.csr_matrix(single)), right, format="csr")


def sz_total(n_sites: int) -> SpinOperator:
    """Total spin S^z = (1/2) sum_k sigma^z_k."""
    return SpinOperator(n_sites, np.diag(0.5 * (n_sites - 2 * _popcounts(n_sites))))


def spin_total(n_sites: int, axis: str) -> SpinOperator:
    """Total spin (1/2) sum_k sigma^axis_k for axis in x, y, z."""
    if axis not in _SIGMA:
        raise ParameterError("axis must be one of x, y, z", details={"axis": axis})
    total = sum(_site_op(_SIGMA[axis], k, n_sites) for k in range(1, n_sites + 1))
    return SpinOperator(n_sites, 0.5 * total.toarray())


def _swap(n_sites: int, i: int, j: int) -> sparse.csr_matrix:
    """Plain permutation of sites i and j."""
    dim = 2 ** n_sites
    index = np.arange(dim)
    bi, bj = n_sites - i, n_sites - j
    differ = ((index >> bi) & 1) != ((index >> bj) & 1)
    target = np.where(differ, index ^ ((1 << bi) | (1 << bj)), index)
    return sparse.csr_matrix((np.ones(dim, dtype=complex), (target, index)), shape=(dim, dim))


# =============================================================================
# Dynamical embedding
# =============================================================================

def _embed_sparse(
    family: Callable[[complex], RMatrix4],
    i: int,
    n_sites: int,
    a: complex,
) -> sparse.csr_matrix:
    if not 1 <= i < n_sites:
        raise ParameterError("Bond index must satisfy 1 <= i < N", details={"i": i, "n_sites": n_sites})
    right = sparse.identity(2 ** (n_sites - i - 1), format="csr")
    by_shift: Dict[int, sparse.csr_matrix] = {}
    blocks = []
    for left in range(2 ** (i - 1)):
        # sum of sigma^z over sites 1..i-1
        shift = (i - 1) - 2 * bin(left).count("1")
        if shift not in by_shift:
            by_shift[shift] = sparse.kron(family(a - shift).entries, right, format="csr")
        blocks.append(by_shift[shift])
    return sparse.block_diag(blocks, format="csr")


def embed_dynamical(family: Callable[[complex], RMatrix4], i: int, params) -> SpinOperator:
    """
    Place a two-site family on bond (i, i+1) with the dynamical shift.

    Every configuration of sites 1..i-1 with spin sum s contributes
    family(a - s) on sites (i, i+1) and the identity elsewhere. ``params``
    only needs ``n_sites`` and ``a``.
    """
    return SpinOperator(params.n_sites, _embed_sparse(family, i, params.n_sites, params.a))


class SpinChain:
    """
    Operators of one deformed chain.

    The nearest-neighbour factors P_i(x) and E_i(x) are memoized as sparse
    matrices for the lifetime of the instance. With ``trigonometric`` the
    x-independent trigonometric exchange and R-matrix replace the elliptic
    ones and the dynamical parameter drops out.
    """

    def __init__(self, params: ChainParams, trigonometric: bool = False):
        self.params = params
        self.trigonometric = trigonometric
        self.elliptic = EllipticParams(0.0, float(params.n_sites), params.tolerance) if trigonometric else params.elliptic
        self._perm: Dict[Tuple[int, float], sparse.csr_matrix] = {}
        self._exch: Dict[Tuple[int, float], sparse.csr_matrix] = {}

    def _perm_family(self, x: float) -> Callable[[complex], RMatrix4]:
        p = self.params
        if self.trigonometric:
            matrix = r_tri(x, p.eta, p.n_sites)
            return lambda _: matrix
        return lambda a: r_check(DynArgs(x, a, p.eta), self.elliptic)

    def _exch_family(self, x: float) -> Callable[[complex], RMatrix4]:
        p = self.params
        if self.trigonometric:
            matrix = e_tri(p.eta, p.n_sites)
            return lambda _: matrix
        return lambda a: exchange_E(DynArgs(x, a, p.eta), self.elliptic)

    def perm(self, i: int, x: float) -> sparse.csr_matrix:
        key = (i, x)
        if key not in self._perm:
            self._perm[key] = _embed_sparse(self._perm_family(x), i, self.params.n_sites, self.params.a)
        return self._perm[key]

    def exch(self, i: int, x: float) -> sparse.csr_matrix:
        key = (i, x)
        if key not in self._exch:
            self._exch[key] = _embed_sparse(self._exch_family(x), i, self.params.n_sites, self.params.a)
        return self._exch[key]

    def _check_pair(self, i: int, j: int) -> None:
        if not 1 <= i < j <= self.params.n_sites:
            raise ParameterError(
                "Interaction needs 1 <= i < j <= N",
                details={"i": i, "j": j, "n_sites": self.params.n_sites},
            )

    def s_left(self, i: int, j: int) -> sparse.csr_matrix:
        """P_{j-1}(1) ... P_{i+1}(j-i-1) E_i(i-j) P_{i+1}(i-j+1) ... P_{j-1}(-1)."""
        self._check_pair(i, j)
        op = self.exch(i, i - j)
        for k in range(i + 1, j):
            op = self.perm(k, j - k) @ op @ self.perm(k, k - j)
        return op

    def s_right(self, i: int, j: int) -> sparse.csr_matrix:
        """P_i(1) ... P_{j-2}(j-i-1) E_{j-1}(i-j) P_{j-2}(i-j+1) ... P_i(-1)."""
        self._check_pair(i, j)
        op = self.exch(j - 1, i - j)
        for k in range(j - 2, i - 1, -1):
            op = self.perm(k, k - i + 1) @ op @ self.perm(k, i - k - 1)
        return op

    def hamiltonian(self, chirality: str) -> SpinOperator:
        """H = sum_{i<j} V(i-j) S_{[i,j]} for chirality 'left' or 'right'."""
        interaction = {"left": self.s_left, "right": self.s_right}.get(chirality)
        if interaction is None:
            raise ParameterError("chirality must be 'left' or 'right'", details={"chirality": chirality})
        n = self.params.n_sites
        total = sparse.csr_matrix((2 ** n, 2 ** n), dtype=complex)
        for i in range(1, n):
            for j in range(i + 1, n + 1):
                total = total + potential_V(i - j, self.params.eta, self.elliptic) * interaction(i, j)
        logger.debug("hamiltonian_built", chirality=chirality, n_sites=n, trigonometric=self.trigonometric)
        return SpinOperator(n, total)

    def twist(self) -> np.ndarray:
        """Diagonal of K_N = exp(-kappa eta [a - sum_{l<N} sigma_l] sigma_N)."""
        p = self.params
        sig = _site_sigmas(p.n_sites)
        left = sig[:, :-1].sum(axis=1)
        return np.exp(-p.kappa * p.eta * (p.a - left) * sig[:, -1])

    def translation(self) -> SpinOperator:
        """G = K_N P_{N-1}(1-N) ... P_1(-1)."""
        n = self.params.n_sites
        op = sparse.diags(self.twist(), format="csr")
        for k in range(n - 1, 0, -1):
            op = op @ self.perm(k, -k)
        return SpinOperator(n, op)


@lru_cache(maxsize=16)
def _chain(params: ChainParams, trigonometric: bool = False) -> SpinChain:
    return SpinChain(params, trigonometric)


def _cached(name: str, params, builder: Callable[[], SpinOperator]) -> SpinOperator:
    return get_operator_cache().get_or_build((name, params), builder)


# =============================================================================
# Deformed chain
# =============================================================================

def perm_P(i: int, x: float, params: ChainParams) -> SpinOperator:
    """Deformed permutation P_{i,i+1}(x)."""
    return SpinOperator(params.n_sites, _chain(params).perm(i, x))


def exch_E(i: int, x: float, params: ChainParams) -> SpinOperator:
    """Deformed exchange E_{i,i+1}(x)."""
    return SpinOperator(params.n_sites, _chain(params).exch(i, x))


def s_left(i: int, j: int, params: ChainParams) -> SpinOperator:
    return SpinOperator(params.n_sites, _chain(params).s_left(i, j))


def s_right(i: int, j: int, params: ChainParams) -> SpinOperator:
    return SpinOperator(params.n_sites, _chain(params).s_right(i, j))


def h_left(params: ChainParams) -> SpinOperator:
    return _cached("h_left", params, lambda: _chain(params).hamiltonian("left"))


def h_right(params: ChainParams) -> SpinOperator:
    return _cached("h_right", params, lambda: _chain(params).hamiltonian("right"))


def hamiltonian(params: ChainParams, chirality: str) -> SpinOperator:
    if chirality == "left":
        return h_left(params)
    if chirality == "right":
        return h_right(params)
    raise ParameterError("chirality must be 'left' or 'right'", details={"chirality": chirality})


def translation_G(params: ChainParams) -> SpinOperator:
    return _cached("translation_G", params, lambda: _chain(params).translation())


def twist_total(params: ChainParams) -> SpinOperator:
    """
    Product of all site twists, exp(-kappa eta [a M - (M^2 + N^2 - 2N)/2])
    with M the sum of all sigma^z. Equal to G^N.
    """
    n = params.n_sites
    m = (n - 2 * _popcounts(n)).astype(float)
    diagonal = np.exp(-params.kappa * params.eta * (params.a * m - (m * m + n * n - 2 * n) / 2))
    return SpinOperator(n, np.diag(diagonal))


def g_normalized(params: ChainParams) -> SpinOperator:
    """G' = (twist)^(-1/N) G, principal root per diagonal entry."""
    def build():
        roots = np.power(np.diag(twist_total(params).matrix), -1.0 / params.n_sites)
        return SpinOperator(params.n_sites, roots[:, None] * translation_G(params).matrix)

    return _cached("g_normalized", params, build)


def magnon_states(params: ChainParams) -> List[MagnonState]:
    """
    The N vectors sum_j exp(2 pi i n j/N) G'^{1-j} |down up ... up>, normalized.
    """
    n = params.n_sites
    g_inv = linalg.inv(g_normalized(params).matrix)
    powers = []
    vector = np.zeros(2 ** n, dtype=complex)
    vector[2 ** (n - 1)] = 1.0
    for _ in range(n):
        powers.append(vector)
        vector = g_inv @ vector

    states = []
    for index in range(n):
        phases = np.exp(2j * math.pi * index * np.arange(1, n + 1) / n)
        state = sum(phase * power for phase, power in zip(phases, powers))
        norm = np.linalg.norm(state)
        if norm < 1e-12:
            raise DegenerateNormalizationError(
                "Magnon vector vanishes", details={"momentum_index": index, "n_sites": n}
            )
        states.append(MagnonState(index, complex(np.exp(2j * math.pi * index / n)), state / norm))
    return states


def _rayleigh(op: SpinOperator, vector: np.ndarray) -> complex:
    return complex(np.vdot(vector, op.matrix @ vector) / np.vdot(vector, vector))


def magnon_energies(params: ChainParams) -> List[MagnonEnergy]:
    """Energies of the deformed magnons under both chiral Hamiltonians."""
    left, right = h_left(params), h_right(params)
    return [
        MagnonEnergy(s.momentum_index, s.eigenvalue, _rayleigh(left, s.vector), _rayleigh(right, s.vector))
        for s in magnon_states(params)
    ]


# =============================================================================
# Limiting chains
# =============================================================================

def _pair_exchange_sum(n_sites: int, potential: Callable[[int], complex]) -> SpinOperator:
    dim = 2 ** n_sites
    identity = sparse.identity(dim, dtype=complex, format="csr")
    total = sparse.csr_matrix((dim, dim), dtype=complex)
    for i in range(1, n_sites):
        for j in range(i + 1, n_sites + 1):
            total = total + potential(i - j) * (identity - _swap(n_sites, i, j))
    return SpinOperator(n_sites, total)


def h_inozemtsev(params: ChainParams) -> SpinOperator:
    """sum_{i<j} V(i-j) (1 - P_ij) with V = -rho'."""
    ell = params.elliptic
    return _cached(
        "h_inozemtsev",
        (params.n_sites, params.kappa, params.tolerance),
        lambda: _pair_exchange_sum(params.n_sites, lambda x: inozemtsev_potential(x, ell)),
    )


def h_haldane_shastry(params: ChainParams) -> SpinOperator:
    """sum_{i<j} (pi/N)^2 / sin^2(pi (i-j)/N) (1 - P_ij)."""
    n = params.n_sites
    return _pair_exchange_sum(n, lambda x: haldane_shastry_potential(x, n))


def h_intermediate(a_prime: complex, params: ChainParams) -> SpinOperator:
    """
    Left-right asymmetric isotropic chain

        1/2 sum_{i<j} [phi'(i-j, a') s+_i s-_j / 2 + phi'(i-j, -a') s-_i s+_j / 2
                       + V(i-j) (1 - sz_i sz_j)]

    with s+- = sigma^x +- i sigma^y, phi' the derivative of phi in its first
    argument and V = -rho'. Tends to the Inozemtsev chain as a' -> 0.
    """
    ell = params.elliptic
    a_prime = complex(a_prime)
    theta_nonzero(a_prime, ell, "h_intermediate: a'")
    n = params.n_sites
    dim = 2 ** n
    plus = [_site_op(_SIGMA_PLUS, k, n) for k in range(1, n + 1)]
    minus = [_site_op(_SIGMA_MINUS, k, n) for k in range(1, n + 1)]
    sz = [_site_op(_SIGMA["z"], k, n) for k in range(1, n + 1)]
    identity = sparse.identity(dim, dtype=complex, format="csr")
    total = sparse.csr_matrix((dim, dim), dtype=complex)
    for i in range(1, n):
        for j in range(i + 1, n + 1):
            x = i - j
            total = total + 0.5 * (
                phi_d1(x, a_prime, ell) * (plus[i - 1] @ minus[j - 1]) / 2
                + phi_d1(x, -a_prime, ell) * (minus[i - 1] @ plus[j - 1]) / 2
                + inozemtsev_potential(x, ell) * (identity - sz[i - 1] @ sz[j - 1])
            )
    return SpinOperator(n, total)


def h_deformed_hs(params: ChainParams, chirality: str = "left") -> SpinOperator:
    """
    Trigonometric chain: the chiral Hamiltonian assembled from r_tri, e_tri
    and the potential (pi/N)^2 / (sin[pi(x+eta)/N] sin[pi(x-eta)/N]).
    """
    return _cached(
        f"h_deformed_hs_{chirality}",
        (params.n_sites, params.eta, params.tolerance),
        lambda: _chain(params, trigonometric=True).hamiltonian(chirality),
    )


def h_heisenberg_xxx(n_sites: int) -> SpinOperator:
    """Periodic sum_{i=1}^{N} (1 - P_{i,i+1})."""
    dim = 2 ** n_sites
    identity = sparse.identity(dim, dtype=complex, format="csr")
    total = sparse.csr_matrix((dim, dim), dtype=complex)
    for i in range(1, n_sites + 1):
        j = i % n_sites + 1
        total = total + identity - _swap(n_sites, min(i, j), max(i, j))
    return SpinOperator(n_sites, total)


def short_range_scale(params: ChainParams) -> complex:
    """
    n(kappa) = sinh^2(kappa) / (kappa^2 theta(2 eta)).

    It turns rho(x - eta) - rho(x + eta) into a nearest-neighbour delta as
    kappa grows. The potential already carries 1/theta(2 eta), so the
    Hamiltonian itself is rescaled by n * theta(2 eta).
    """
    if params.kappa <= 0:
        raise ParameterError("The short-range limit needs kappa > 0", details={"kappa": params.kappa})
    k = params.kappa
    return math.sinh(k) ** 2 / (k * k * theta_nonzero(2 * params.eta, params.elliptic, "short_range_scale"))


def short_range_hamiltonian(params: ChainParams, chirality: str = "left") -> SpinOperator:
    """Chiral Hamiltonian rescaled so that its kappa -> infinity limit is finite."""
    factor = short_range_scale(params) * theta_nonzero(2 * params.eta, params.elliptic)
    return factor * hamiltonian(params, chirality)


@dataclass(frozen=True)
class XXZChain:
    """
    Dynamical nearest-neighbour chain built from the Heisenberg exchange
    E^H(a) with anisotropy gamma, periodic through the twisted translation.
    """

    gamma: float
    a: complex
    n_sites: int

    def __post_init__(self):
        object.__setattr__(self, "gamma", float(self.gamma))
        object.__setattr__(self, "a", complex(self.a))
        object.__setattr__(self, "n_sites", int(self.n_sites))
        if self.n_sites < 3:
            raise ParameterError("The periodic XXZ chain needs N >= 3", details={"n_sites": self.n_sites})
        if self.n_sites > get_settings().max_sites:
            raise SizeCapError("N exceeds the dense-operator cap", details={"n_sites": self.n_sites})

    @cached_property
    def _bonds(self) -> Tuple[List[sparse.csr_matrix], List[sparse.csr_matrix]]:
        gamma = self.gamma
        exchanges = [
            _embed_sparse(lambda a: e_heis(a, gamma), i, self.n_sites, self.a) for i in range(1, self.n_sites)
        ]
        perms = [
            _embed_sparse(lambda a: r_heis(a, gamma), i, self.n_sites, self.a) for i in range(1, self.n_sites)
        ]
        return exchanges, perms

    def e_op(self, i: int) -> SpinOperator:
        """e_i for 1 <= i < N; e_0 (and e_N) is the boundary generator."""
        if i in (0, self.n_sites):
            return self.boundary()
        if not 1 <= i < self.n_sites:
            raise ParameterError("Generator index out of range", details={"i": i, "n_sites": self.n_sites})
        return SpinOperator(self.n_sites, self._bonds[0][i - 1])

    def p_op(self, i: int) -> SpinOperator:
        return SpinOperator(self.n_sites, self._bonds[1][i - 1])

    @cached_property
    def _g(self) -> SpinOperator:
        sig = _site_sigmas(self.n_sites)
        left = sig[:, :-1].sum(axis=1)
        op = sparse.diags(np.exp(1j * math.pi * self.gamma * (self.a - left) * sig[:, -1]), format="csr")
        for k in range(self.n_sites - 1, 0, -1):
            op = op @ self._bonds[1][k - 1]
        return SpinOperator(self.n_sites, op)

    def g_op(self) -> SpinOperator:
        """G^H = K^H_N P^H_{N-1} ... P^H_1."""
        return self._g

    @cached_property
    def _g_inv(self) -> SpinOperator:
        return self._g.inverse()

    def boundary(self, form: str = "forward") -> SpinOperator:
        """e_0 as G e_1 G^-1 ('forward') or G^-1 e_{N-1} G ('backward')."""
        if form == "forward":
            return self._g @ self.e_op(1) @ self._g_inv
        if form == "backward":
            return self._g_inv @ self.e_op(self.n_sites - 1) @ self._g
        raise ParameterError("form must be 'forward' or 'backward'", details={"form": form})

    def boundary_forms_residual(self) -> float:
        return self.boundary("forward").distance(self.boundary("backward"))

    @cached_property
    def _u(self) -> SpinOperator:
        n = self.n_sites
        g = self._g.matrix
        product = np.eye(2 ** n, dtype=complex)
        for i in range(1, n):
            product = product @ self.e_op(i).matrix
        x_full = g @ g @ product
        y_full = self.e_op(n - 1).matrix
        scale = np.ones(2 ** n, dtype=complex)
        for k in range(n + 1):
            idx = sector_indices(n, k)
            x = x_full[np.ix_(idx, idx)]
            y = y_full[np.ix_(idx, idx)]
            xx = np.vdot(x, x)
            if abs(xx) > 1e-24:
                scale[idx] = np.sqrt(np.vdot(x, y) / xx)
        return SpinOperator(n, scale[:, None] * g)

    def u_op(self) -> SpinOperator:
        """G^H rescaled by an S^z-sector constant so that u^2 e_1 ... e_{N-1} = e_{N-1}."""
        return self._u

    def hamiltonian(self) -> SpinOperator:
        """sum_{i<N} e_i + e_0."""
        total = self.boundary()
        for i in range(1, self.n_sites):
            total = total + self.e_op(i)
        return total


def h_xxz(gamma: float, a: complex, n_sites: int) -> SpinOperator:
    return _cached("h_xxz", (float(gamma), complex(a), int(n_sites)), lambda: XXZChain(gamma, a, n_sites).hamiltonian())


# =============================================================================
# Spectra
# =============================================================================

def _sorted(values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=complex)
    return values[np.lexsort((values.imag, values.real))]


def spectrum(op: SpinOperator, sector: Optional[int] = None) -> np.ndarray:
    """
    Eigenvalues sorted by (Re, Im), of the whole operator or of one S^z sector
    (given as the number of down spins). Chains longer than the configured
    threshold that conserve S^z are diagonalized sector by sector.
    """
    if sector is not None:
        return _sorted(linalg.eigvals(op.sector_block(sector)))
    if op.n_sites > get_settings().sector_threshold and op.sz_leakage() <= 1e-10:
        values = np.concatenate([linalg.eigvals(op.sector_block(k)) for k in range(op.n_sites + 1)])
        return _sorted(values)
    return _sorted(linalg.eigvals(op.matrix))


def spectral_distance(first: Sequence[complex], second: Sequence[complex]) -> float:
    """Largest pair distance of the optimal matching between two eigenvalue multisets."""
    first = np.asarray(first, dtype=complex)
    second = np.asarray(second, dtype=complex)
    if first.shape != second.shape:
        raise ContractError(
            "Spectra of different sizes cannot be matched",
            details={"first": len(first), "second": len(second)},
        )
    cost = np.abs(first[:, None] - second[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(np.max(cost[rows, cols], initial=0.0))
