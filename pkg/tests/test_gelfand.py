from fractions import Fraction

import numpy as np
import pytest

from lorentree.gelfand import (
    HaarWeights,
    ShellFn,
    WreathModel,
    ball_fn,
    check_spherical,
    chi,
    commutator_residual,
    convolve,
    positive_definite_witness,
    spherical_phi0,
    spherical_solution_space,
    unit,
    wreath_oracle_convolve,
)

rng = np.random.default_rng(61803)


def random_shellfn(q, max_shell):
    coeffs = [int(rng.integers(-3, 4)) for _ in range(max_shell + 1)]
    return ShellFn(q, coeffs)


def test_haar_weights():
    h = HaarWeights(3)
    assert h.mu_K(0) == 1
    assert h.mu_K(2) == 4
    assert h.mu_shell(0) == 1
    assert h.mu_shell(1) == 1
    assert h.mu_shell(3) == 4
    h4 = HaarWeights(4)
    assert [h4.mu_K(n) for n in range(4)] == [1, 3, 9, 27]
    assert h4.mu_shell(2) == 6
    with pytest.raises(ValueError):
        HaarWeights(2)
    with pytest.raises(ValueError):
        h.mu_K(-1)


def test_shellfn_canonical():
    f = ShellFn(3, (1, 0, Fraction(0)))
    assert f.coeffs == (1,)
    assert f == unit(3)
    assert chi(3, 2).coeffs == (0, 0, 1)
    assert ball_fn(3, 2).coeffs == (1, 1, 1)
    assert (f + chi(3, 1)).coeffs == (1, 1)
    assert f.scale(0).is_zero()
    with pytest.raises(ValueError):
        chi(3, 0)
    with pytest.raises(ValueError):
        ShellFn(3, (1,)) + ShellFn(4, (1,))


def test_unit_acts_as_identity():
    for q in (3, 4, 5):
        for f in [chi(q, 1), chi(q, 3), random_shellfn(q, 4)]:
            assert convolve(unit(q), f) == f
            assert convolve(f, unit(q)) == f


def test_basis_products_small():
    # q = 3: mu(K_1 - K_0) = 1, mu(K_0) = 1
    assert convolve(chi(3, 1), chi(3, 1)) == unit(3)
    assert convolve(chi(3, 1), chi(3, 2)) == chi(3, 2)
    assert convolve(chi(3, 2), chi(3, 1)) == chi(3, 2)
    # q = 4: chi_1 * chi_1 = 2 1_{K_1} - chi_1
    assert convolve(chi(4, 1), chi(4, 1)) == ShellFn(4, (2, 1))
    # diagonal rule deeper down: chi_2 * chi_2, q = 3
    assert convolve(chi(3, 2), chi(3, 2)) == \
        ball_fn(3, 2).scale(2) - chi(3, 2).scale(2)


def test_convolution_commutes():
    for q in (3, 4, 5):
        for _ in range(20):
            f = random_shellfn(q, 5)
            g = random_shellfn(q, 5)
            assert commutator_residual(f, g).is_zero()


def test_convolution_associative():
    for q in (3, 4, 5):
        for _ in range(12):
            f = random_shellfn(q, 4)
            g = random_shellfn(q, 4)
            h = random_shellfn(q, 4)
            assert convolve(convolve(f, g), h) == convolve(f, convolve(g, h))


def test_convolve_rejects_mixed_valence():
    with pytest.raises(ValueError):
        convolve(unit(3), unit(4))


def test_spherical_phi0_values():
    assert spherical_phi0(3).coeffs == (1, -1)
    assert spherical_phi0(4).coeffs == (1, Fraction(-1, 2))
    for q in (3, 4, 5, 7):
        k0, k1 = spherical_phi0(q).coeffs
        assert k0 + (q - 2) * k1 == 0
    with pytest.raises(ValueError):
        spherical_phi0(2)


def test_check_spherical_phi0():
    for q in (3, 4, 5):
        cs = check_spherical(spherical_phi0(q), max_shell=5)
        assert cs[0] == 1          # convolving with 1_{K_0}
        assert cs[1] == -1         # -mu(K_0)
        for m in range(2, 6):
            assert cs[m] == 0


def test_check_spherical_rejects_non_spherical():
    # 1_{K_0} + chi_1 reproduces itself against chi_1 but fails at chi_2
    phi = unit(3) + chi(3, 1)
    assert convolve(phi, chi(3, 1)) == phi  # proportional, c = q - 2 = 1
    with pytest.raises(ValueError, match="shell-2"):
        check_spherical(phi)
    with pytest.raises(ValueError, match="phi\\(e\\)"):
        check_spherical(chi(3, 1))


def test_positive_definite_witness():
    c3, conv3 = positive_definite_witness(spherical_phi0(3))
    assert c3 == 2 and conv3 == spherical_phi0(3).scale(2)
    c1, conv1 = positive_definite_witness(unit(3))
    assert c1 == 1 and conv1 == unit(3)
    c4, _ = positive_definite_witness(spherical_phi0(4))
    assert c4 == Fraction(3, 2) and c4 >= 0
    with pytest.raises(ValueError):
        positive_definite_witness(unit(3) + chi(3, 2))


# ---------------------------------------------------------------------------
# wreath oracle
# ---------------------------------------------------------------------------

def test_wreath_model_sizes():
    m32 = WreathModel(3, 2)
    assert m32.order == 8
    assert m32.k0_size == 2
    m42 = WreathModel(4, 2)
    assert m42.order == 1296
    assert m42.k0_size == 144
    with pytest.raises(ValueError):
        WreathModel(5, 2)  # 24^5 elements: over the cap


def test_wreath_chain_indices_match_haar():
    for q, m in ((3, 2), (3, 3), (4, 2)):
        model = WreathModel(q, m)
        h = HaarWeights(q)
        for n in range(m + 1):
            assert model.mu_K_from_chain(n) == h.mu_K(n)


def test_wreath_shell_sizes():
    model = WreathModel(4, 2)
    h = HaarWeights(4)
    for n in range(model.m + 1):
        size = int(np.count_nonzero(model.shells == n))
        assert Fraction(size, model.k0_size) == h.mu_shell(n)


def test_oracle_small_cases():
    model = WreathModel(3, 2)
    assert wreath_oracle_convolve(chi(3, 1), chi(3, 1), model) == unit(3)
    assert wreath_oracle_convolve(unit(3), chi(3, 1), model) == chi(3, 1)
    assert wreath_oracle_convolve(chi(3, 2), chi(3, 1), model) == chi(3, 2)


def test_oracle_matches_rules_on_all_basis_pairs():
    for q in (3, 4):
        model = WreathModel(q, 2)
        basis = [unit(q), chi(q, 1), chi(q, 2)]
        for f in basis:
            for g in basis:
                assert wreath_oracle_convolve(f, g, model) == convolve(f, g)


def test_oracle_depth3_and_general_functions():
    model = WreathModel(3, 3)
    basis = [unit(3), chi(3, 1), chi(3, 2), chi(3, 3)]
    for f in basis:
        for g in basis:
            assert wreath_oracle_convolve(f, g, model) == convolve(f, g)
    f = ShellFn(3, (2, -1, 3))
    g = ShellFn(3, (0, 1, -2, 1))
    assert wreath_oracle_convolve(f, g, model) == convolve(f, g)


def test_oracle_depth_insufficient():
    model = WreathModel(3, 2)
    with pytest.raises(ValueError):
        wreath_oracle_convolve(chi(3, 3), unit(3), model)


def test_spherical_space_is_one_dimensional():
    for q in (3, 4):
        model = WreathModel(q, 2)
        basis = spherical_solution_space(model)
        assert len(basis) == 1
        f = basis[0]
        assert f.coeff(0) != 0
        assert f.scale(1 / f.coeff(0)) == spherical_phi0(q)
