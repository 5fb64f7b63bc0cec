"""
Unit tests for the deformed spin chain.
"""
import numpy as np
import pytest

from ellspin import chain as ch
from ellspin.config import get_settings
from ellspin.elliptic import inozemtsev_potential, theta
from ellspin.exceptions import ContractError, ParameterError, SizeCapError
from ellspin.rmatrix import asymptotic_a


class TestChainParams:
    """Test parameter validation."""

    def test_coercion(self):
        """Test fields are coerced to int, float and complex."""
        p = ch.ChainParams(n_sites=3.0, kappa=1, eta=0.3, a=1)
        assert isinstance(p.n_sites, int)
        assert isinstance(p.kappa, float)
        assert isinstance(p.eta, complex)
        assert p.dim == 8

    def test_too_short(self):
        """Test a single site is rejected."""
        with pytest.raises(ParameterError):
            ch.ChainParams(1, 0.8, 0.3, 0.4)

    def test_size_cap(self):
        """Test chains beyond the dense cap raise SizeCapError."""
        with pytest.raises(SizeCapError):
            ch.ChainParams(get_settings().max_sites + 1, 0.8, 0.3, 0.4)

    def test_eta_on_lattice(self):
        """Test 2 eta on the zero lattice is rejected."""
        with pytest.raises(ParameterError):
            ch.ChainParams(4, 0.8, 0.0, 0.4)

    def test_eta_a_on_lattice(self):
        """Test eta * a on the zero lattice is rejected."""
        with pytest.raises(ParameterError):
            ch.ChainParams(4, 0.8, 0.3, 0.0)

    def test_replace(self, chain_params):
        """Test replace returns a validated copy."""
        changed = chain_params.replace(n_sites=3)
        assert changed.n_sites == 3
        assert changed.eta == chain_params.eta


class TestSpinOperator:
    """Test the dense operator wrapper."""

    def test_dimension_check(self):
        """Test the matrix must be 2^N square."""
        with pytest.raises(ContractError):
            ch.SpinOperator(3, np.eye(4))

    def test_length_mismatch(self):
        """Test operators on different chains do not combine."""
        with pytest.raises(ContractError):
            ch.SpinOperator.identity(2) @ ch.SpinOperator.identity(3)

    def test_sector_block(self):
        """Test sector blocks follow the number of down spins."""
        sz = ch.sz_total(4)
        assert np.allclose(np.diag(sz.sector_block(1)), 1.0)
        assert sz.sector_block(2).shape == (6, 6)

    def test_sector_block_leaky(self):
        """Test sector blocks need S^z conservation."""
        with pytest.raises(ContractError):
            ch.spin_total(3, "x").sector_block(1)

    def test_sector_out_of_range(self):
        """Test the sector index must lie in 0..N."""
        with pytest.raises(ParameterError):
            ch.sz_total(3).sector_block(4)

    def test_spin_axis(self):
        """Test only x, y, z are valid axes."""
        with pytest.raises(ParameterError):
            ch.spin_total(3, "w")


class TestDeformedChain:
    """Test the deformed permutations and chiral Hamiltonians."""

    def test_perm_unitarity(self, chain_params):
        """Test P_i(-x) P_i(x) = 1."""
        identity = ch.SpinOperator.identity(chain_params.n_sites)
        for i in range(1, chain_params.n_sites):
            product = ch.perm_P(i, -0.7, chain_params) @ ch.perm_P(i, 0.7, chain_params)
            assert product.distance(identity) < 1e-11

    def test_perm_braid(self, chain_params):
        """Test the braid relation for neighbouring bonds."""
        p, x, y = chain_params, 0.9, -0.4
        for i in range(1, p.n_sites - 1):
            lhs = ch.perm_P(i, x - y, p) @ ch.perm_P(i + 1, x, p) @ ch.perm_P(i, y, p)
            rhs = ch.perm_P(i + 1, y, p) @ ch.perm_P(i, x, p) @ ch.perm_P(i + 1, x - y, p)
            assert lhs.distance(rhs) < 1e-11

    def test_bond_out_of_range(self, chain_params):
        """Test bond indices outside 1..N-1 are rejected."""
        with pytest.raises(ParameterError):
            ch.perm_P(chain_params.n_sites, 0.5, chain_params)

    def test_pair_out_of_range(self, chain_params):
        """Test interaction pairs need i < j."""
        with pytest.raises(ParameterError):
            ch.s_left(2, 2, chain_params)

    def test_s_left_three_sites(self):
        """Test S^L_[1,3] = P_2(1) E_1(-2) P_2(-1)."""
        p = ch.ChainParams(3, 0.8, 0.3 + 0.05j, 0.4 - 0.2j)
        expected = ch.perm_P(2, 1, p) @ ch.exch_E(1, -2, p) @ ch.perm_P(2, -1, p)
        assert expected.distance(ch.s_left(1, 3, p)) < 1e-12

    def test_s_left_four_sites(self, chain_params):
        """Test the N = 4 left-chiral interactions against their explicit products."""
        p, P, E = chain_params, ch.perm_P, ch.exch_E
        expected = {
            (3, 4): E(3, -1, p),
            (2, 4): P(3, 1, p) @ E(2, -2, p) @ P(3, -1, p),
            (1, 4): P(3, 1, p) @ P(2, 2, p) @ E(1, -3, p) @ P(2, -2, p) @ P(3, -1, p),
        }
        for (i, j), op in expected.items():
            assert op.distance(ch.s_left(i, j, p)) < 1e-12

    def test_s_right_four_sites(self, chain_params):
        """Test the N = 4 right-chiral interactions against their explicit products."""
        p, P, E = chain_params, ch.perm_P, ch.exch_E
        expected = {
            (3, 4): E(3, -1, p),
            (2, 4): P(2, 1, p) @ E(3, -2, p) @ P(2, -1, p),
            (1, 4): P(1, 1, p) @ P(2, 2, p) @ E(3, -3, p) @ P(2, -2, p) @ P(1, -1, p),
        }
        for (i, j), op in expected.items():
            assert op.distance(ch.s_right(i, j, p)) < 1e-12


    def test_nearest_neighbour_interactions(self, chain_params):
        """Test both chiral interactions reduce to E_i(-1) on a bond."""
        e = ch.exch_E(2, -1, chain_params)
        assert ch.s_left(2, 3, chain_params).distance(e) == 0
        assert ch.s_right(2, 3, chain_params).distance(e) == 0

    def test_chiral_commutativity(self, chain_params):
        """Test [H_L, H_R] = 0."""
        assert ch.h_left(chain_params).commutator_norm(ch.h_right(chain_params)) < 1e-10

    def test_sz_conservation(self, chain_params):
        """Test both Hamiltonians commute with S^z."""
        sz = ch.sz_total(chain_params.n_sites)
        assert ch.h_left(chain_params).commutator_norm(sz) < 1e-12
        assert ch.h_right(chain_params).commutator_norm(sz) < 1e-12

    def test_chirality_validated(self, chain_params):
        """Test unknown chiralities are rejected."""
        with pytest.raises(ParameterError):
            ch.hamiltonian(chain_params, "up")

    def test_reference_state(self, chain_params):
        """Test the all-up state is annihilated."""
        for h in (ch.h_left(chain_params), ch.h_right(chain_params)):
            assert np.max(np.abs(h.matrix[1:, 0])) < 1e-10 * np.max(np.abs(h.matrix))


class TestTranslation:
    """Test the twisted translation."""

    def test_commutes(self, chain_params):
        """Test G commutes with both Hamiltonians."""
        g = ch.translation_G(chain_params)
        assert ch.h_left(chain_params).commutator_norm(g) < 1e-10
        assert ch.h_right(chain_params).commutator_norm(g) < 1e-10

    def test_central_power(self, chain_params):
        """Test G^N equals the diagonal total twist."""
        power = ch.translation_G(chain_params).power(chain_params.n_sites)
        twist = ch.twist_total(chain_params)
        assert power.distance(twist) < 1e-11 * max(1.0, twist.norm())

    def test_normalized_order(self, chain_params):
        """Test G'^N = 1."""
        power = ch.g_normalized(chain_params).power(chain_params.n_sites)
        assert power.distance(ch.SpinOperator.identity(chain_params.n_sites)) < 1e-11

    def test_untwisted_at_kappa_zero(self):
        """Test kappa = 0 gives a trivial twist."""
        p = ch.ChainParams(3, 0.0, 0.3, 0.5)
        assert ch.twist_total(p).distance(ch.SpinOperator.identity(3)) < 1e-15

    def test_boundary_conjugation(self, chain_params):
        """Test G S^L_[1,2] G^-1 = S^L_[1,N]."""
        p, n = chain_params, chain_params.n_sites
        g = ch.translation_G(p)
        left = g @ ch.s_left(1, 2, p) @ g.inverse()
        expected = ch.s_left(1, n, p)
        assert left.distance(expected) < 1e-10 * max(1.0, expected.norm())


class TestMagnons:
    """Test the deformed one-magnon states."""

    def test_eigenvectors(self, chain_params):
        """Test every magnon is an eigenvector of G'."""
        g = ch.g_normalized(chain_params)
        states = ch.magnon_states(chain_params)
        assert len(states) == chain_params.n_sites
        for state in states:
            residual = g @ state.vector - state.eigenvalue * state.vector
            assert np.linalg.norm(residual) < 1e-10
            assert np.linalg.norm(state.vector) == pytest.approx(1.0)

    def test_one_magnon_sector(self, chain_params):
        """Test magnons live in the one-down-spin sector."""
        outside = np.setdiff1d(np.arange(chain_params.dim), ch.sector_indices(chain_params.n_sites, 1))
        for state in ch.magnon_states(chain_params):
            assert np.max(np.abs(state.vector[outside])) < 1e-12

    def test_energies_match_sector_spectrum(self, chain_params):
        """Test magnon energies are the one-magnon eigenvalues of H_L."""
        energies = [m.energy_left for m in ch.magnon_energies(chain_params)]
        sector = ch.spectrum(ch.h_left(chain_params), sector=1)
        assert ch.spectral_distance(energies, sector) < 1e-9 * max(1.0, np.max(np.abs(sector)))

    def test_to_dict(self, chain_params):
        """Test the record keys."""
        record = ch.magnon_energies(chain_params)[0].to_dict()
        assert set(record) == {"n", "translation_eigenvalue", "energy_left", "energy_right"}


class TestLimitingChains:
    """Test the isotropic and nearest-neighbour chains."""

    @pytest.mark.parametrize("builder", ["h_inozemtsev", "h_haldane_shastry"])
    def test_su2(self, chain_params, builder):
        """Test isotropic chains commute with every total spin component."""
        h = getattr(ch, builder)(chain_params)
        for axis in "xyz":
            assert h.commutator_norm(ch.spin_total(chain_params.n_sites, axis)) < 1e-12

    def test_inozemtsev_two_sites(self):
        """Test N = 2: eigenvalues 0 (three times) and 2 V(1)."""
        p = ch.ChainParams(2, 0.8, 0.3, 0.4)
        v = inozemtsev_potential(1, p.elliptic)
        values = ch.spectrum(ch.h_inozemtsev(p))
        np.testing.assert_allclose(values, ch.spectrum(ch.SpinOperator(2, np.diag([0, 0, 0, 2 * v]))), atol=1e-12)


    def test_inozemtsev_limit(self):
        """Test the chiral spectra approach the Inozemtsev spectrum as eta -> 0."""
        p = ch.ChainParams(4, 0.8, 1e-4, 0.4 - 0.2j)
        target = ch.spectrum(ch.h_inozemtsev(p))
        distance = ch.spectral_distance(ch.spectrum(ch.h_left(p)), target)
        assert distance < 1e-3 * max(1.0, np.max(np.abs(target)))

    def test_intermediate_tends_to_inozemtsev(self, chain_params):
        """Test a' -> 0 recovers the Inozemtsev chain."""
        h = ch.h_intermediate(1e-5, chain_params)
        target = ch.spectrum(ch.h_inozemtsev(chain_params))
        assert ch.spectral_distance(ch.spectrum(h), target) < 1e-3 * max(1.0, np.max(np.abs(target)))

    def test_intermediate_sz(self, chain_params):
        """Test the intermediate chain conserves S^z."""
        h = ch.h_intermediate(0.4 + 0.3j, chain_params)
        assert h.commutator_norm(ch.sz_total(chain_params.n_sites)) < 1e-12

    def test_deformed_hs_limit(self):
        """Test kappa = 0, a -> -i infinity gives the trigonometric chain."""
        eta = 0.3 + 0.05j
        p = ch.ChainParams(4, 0.0, eta, asymptotic_a(eta, period=4))
        target = ch.spectrum(ch.h_deformed_hs(p, "left"))
        distance = ch.spectral_distance(ch.spectrum(ch.h_left(p)), target)
        assert distance < 1e-8 * max(1.0, np.max(np.abs(target)))

    def test_heisenberg_xxx(self):
        """Test the periodic XXX chain on three sites."""
        values = ch.spectrum(ch.h_heisenberg_xxx(3))
        assert np.allclose(sorted(values.real), [0, 0, 0, 0, 3, 3, 3, 3])

    def test_short_range_scale(self, chain_params):
        """Test the short-range rescaling needs kappa > 0."""
        assert ch.short_range_scale(chain_params) != 0
        with pytest.raises(ParameterError):
            ch.short_range_scale(chain_params.replace(kappa=0.0))

    def test_short_range_hamiltonian(self, chain_params):
        """Test the rescaled Hamiltonian is a multiple of H_L."""
        factor = ch.short_range_scale(chain_params) * theta(2 * chain_params.eta, chain_params.elliptic)
        expected = factor * ch.h_left(chain_params)
        assert ch.short_range_hamiltonian(chain_params).distance(expected) < 1e-12 * max(1.0, expected.norm())


class TestXXZChain:
    """Test the dynamical nearest-neighbour chain."""

    @pytest.fixture
    def xxz(self):
        return ch.XXZChain(0.23, 0.7 + 0.2j, 4)

    def test_too_short(self):
        """Test N >= 3 is required."""
        with pytest.raises(ParameterError):
            ch.XXZChain(0.2, 0.5, 2)

    def test_temperley_lieb(self, xxz):
        """Test e_i^2 = 2 cos(pi gamma) e_i and e_i e_{i+1} e_i = e_i."""
        factor = 2 * np.cos(np.pi * xxz.gamma)
        for i in range(1, xxz.n_sites):
            e = xxz.e_op(i)
            assert (e @ e).distance(factor * e) < 1e-11
            if i + 1 < xxz.n_sites:
                assert (e @ xxz.e_op(i + 1) @ e).distance(e) < 1e-11

    def test_boundary_forms(self, xxz):
        """Test both constructions of e_0 agree."""
        assert xxz.boundary_forms_residual() < 1e-10

    def test_boundary_form_validated(self, xxz):
        """Test unknown boundary forms are rejected."""
        with pytest.raises(ParameterError):
            xxz.boundary("sideways")

    def test_affine_shift(self, xxz):
        """Test u e_i u^-1 = e_{i-1} and u^2 e_1 ... e_{N-1} = e_{N-1}."""
        n = xxz.n_sites
        u = xxz.u_op()
        u_inv = u.inverse()
        for i in range(2, n):
            assert (u @ xxz.e_op(i) @ u_inv).distance(xxz.e_op(i - 1)) < 1e-10
        product = ch.SpinOperator.identity(n)
        for i in range(1, n):
            product = product @ xxz.e_op(i)
        assert (u @ u @ product).distance(xxz.e_op(n - 1)) < 1e-10

    def test_hamiltonian_sz(self, xxz):
        """Test H^XXZ conserves S^z."""
        assert xxz.hamiltonian().commutator_norm(ch.sz_total(xxz.n_sites)) < 1e-12


class TestSpectrum:
    """Test spectra and their comparison."""

    def test_sorted(self, chain_params):
        """Test eigenvalues are sorted by real then imaginary part."""
        values = ch.spectrum(ch.h_left(chain_params))
        assert len(values) == chain_params.dim
        assert np.all(np.diff(values.real) >= 0)

    def test_sector_union(self, chain_params):
        """Test the sector spectra together give the full spectrum."""
        h = ch.h_left(chain_params)
        sectors = np.concatenate([ch.spectrum(h, sector=k) for k in range(chain_params.n_sites + 1)])
        full = ch.spectrum(h)
        assert ch.spectral_distance(sectors, full) < 1e-8 * max(1.0, np.max(np.abs(full)))

    def test_reality(self, real_spectrum_params):
        """Test imaginary eta with real a gives a real spectrum."""
        values = ch.spectrum(ch.h_left(real_spectrum_params))
        assert np.max(np.abs(values.imag)) < 1e-8 * max(1.0, np.ptp(values.real))

    def test_distance_is_permutation_invariant(self):
        """Test spectral distance ignores ordering."""
        assert ch.spectral_distance([1, 2j, 3], [3, 1, 2j]) == 0.0
        assert ch.spectral_distance([0, 1], [0, 1.5]) == pytest.approx(0.5)

    def test_distance_size_mismatch(self):
        """Test spectra of different sizes are rejected."""
        with pytest.raises(ContractError):
            ch.spectral_distance([1, 2], [1])


def test_invariants_declared():
    """Test the module names its harness invariants."""
    assert len(ch.INVARIANTS) == len(set(ch.INVARIANTS)) == 25
