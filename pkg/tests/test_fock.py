import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm
from scipy.special import factorial

from jcgate import fock
from jcgate.exceptions import CutoffError, DegenerateStateError

R_OPT = 0.5 * np.log(np.pi / 2)


def _expm_state(alpha, r, n_cut, pad=80):
    # brute-force D(alpha) S(r)|0> from dense matrix exponentials
    dim = n_cut + pad
    a = np.diag(np.sqrt(np.arange(1, dim)), 1).astype(complex)
    ad = a.conj().T
    vac = np.zeros(dim, complex)
    vac[0] = 1
    s = expm(0.5 * (np.conj(r) * a @ a - r * ad @ ad)) @ vac
    psi = expm(alpha * ad - np.conj(alpha) * a) @ s
    psi = psi[:n_cut]
    return psi / np.linalg.norm(psi)


def test_vacuum():
    psi = fock.coherent_state(0, 8)
    assert psi[0] == 1 and np.all(psi[1:] == 0)
    assert np.allclose(fock.squeezed_coherent_state(0, 0, 16), fock.fock_state(0, 16))
    assert np.allclose(fock.squeezed_cat_state(0, 0, 1, 16), fock.fock_state(0, 16))


def test_coherent_poisson():
    psi = fock.coherent_state(3, 64)
    assert abs(fock.mean_photon(psi) - 9.0) < 1e-6
    assert abs(abs(psi[9]) ** 2 - np.exp(-9) * 9**9 / factorial(9)) < 1e-12
    assert abs(np.linalg.norm(psi) - 1) < 1e-10


def test_coherent_phase():
    psi = fock.coherent_state(2j, 40)
    n = np.arange(40)
    ref = np.exp(-2) * 2.0**n / np.sqrt(factorial(n)) * 1j**n
    assert np.allclose(psi, ref / np.linalg.norm(ref), atol=1e-12)


def test_squeezed_number_spread():
    psi = fock.squeezed_coherent_state(10, R_OPT, 200)
    std = np.sqrt(fock.photon_variance(psi))
    assert abs(std / (10 * np.sqrt(2 / np.pi)) - 1) < 0.01


def test_squeezed_matches_expm():
    psi = fock.squeezed_coherent_state(2, 0.3, 64)
    assert np.allclose(psi, _expm_state(2, 0.3, 64), atol=1e-10)
    psi = fock.squeezed_coherent_state(1 + 1.5j, 0.2 * np.exp(0.7j), 64)
    assert np.allclose(psi, _expm_state(1 + 1.5j, 0.2 * np.exp(0.7j), 64), atol=1e-10)


def test_squeezed_zero_r_is_coherent():
    for alpha in (0.5, 3, 2 - 1j, 7j):
        assert np.allclose(
            fock.squeezed_coherent_state(alpha, 0, 120), fock.coherent_state(alpha, 120), atol=1e-10
        )


def test_cat_parity():
    even = fock.squeezed_cat_state(3, R_OPT, 1, 64)
    odd = fock.squeezed_cat_state(3, R_OPT, -1, 64)
    assert np.max(np.abs(even[1::2])) < 1e-12
    assert np.max(np.abs(odd[0::2])) < 1e-12


def test_cat_gaussian_approximation():
    a = 5.0
    psi = fock.squeezed_cat_state(a, R_OPT, 1, 100)
    n = np.arange(16, 35, 2)
    approx = np.sqrt(2 / (np.sqrt(2 * np.pi) * np.exp(-R_OPT) * a)) * np.exp(
        -np.exp(2 * R_OPT) / 4 * (n / a - a) ** 2
    )
    rel = np.abs(np.abs(psi[n]) / approx - 1)
    # leading-order formula; the skew of the photon distribution grows off-centre
    assert rel[np.abs(n - 25) <= 6].max() < 0.02
    assert rel.max() < 0.05


def test_cat_mean_photon():
    for a2 in (25, 49, 100):
        psi = fock.squeezed_cat_state(np.sqrt(a2), R_OPT, 1, fock.required_cutoff(a2))
        expect = a2 + np.sinh(R_OPT) ** 2
        assert abs(fock.mean_photon(psi) / expect - 1) < 0.01


def test_cat_degenerate():
    with pytest.raises(DegenerateStateError):
        fock.squeezed_cat_state(0, 0, -1, 16)


def test_cutoff_rejected():
    with pytest.raises(CutoffError):
        fock.coherent_state(10, 60)
    with pytest.raises(CutoffError):
        fock.squeezed_coherent_state(10, R_OPT, 100)
    # smallest accepted cutoff still meets the leakage bound
    for n_bar in (1, 9, 100, 400):
        n_cut = fock.required_cutoff(n_bar)
        psi = fock.coherent_state(np.sqrt(n_bar), n_cut)
        assert abs(psi[-1]) ** 2 < fock.LEAKAGE_TOL


def test_photon_spread():
    for alpha, r in ((3, 0), (2, 0.4), (2j, 0.4), (0, 0.5), (1 + 1j, 0.3j)):
        psi = fock.squeezed_coherent_state(alpha, r, 80)
        assert abs(np.sqrt(fock.photon_variance(psi)) - fock.photon_spread(alpha, r)) < 1e-8
    # amplitude squeezing narrows the photon distribution, phase squeezing widens it
    assert fock.photon_spread(10, R_OPT) < 10 < fock.photon_spread(10, -R_OPT)
    assert fock.required_cutoff(100, fock.photon_spread(10, -R_OPT)) > fock.required_cutoff(100)


def test_displacement_matrix():
    assert np.allclose(fock.displacement_matrix(0, 20), np.eye(20))
    n = 80
    prod = fock.displacement_matrix(1.5 + 0.5j, n) @ fock.displacement_matrix(-1.5 - 0.5j, n)
    assert np.max(np.abs(prod[: n // 2, : n // 2] - np.eye(n // 2))) < 1e-8


def test_squeeze_matrix_vacuum_column():
    r = 0.5
    col = fock.squeeze_matrix(r, 80)[:, 0]
    k = np.arange(0, 20)
    # <2k|S(r)|0> = (-tanh r)^k sqrt((2k)!) / (2^k k! sqrt(cosh r))
    ref = (-np.tanh(r)) ** k * np.sqrt(factorial(2 * k)) / (2.0**k * factorial(k)) / np.sqrt(np.cosh(r))
    assert np.allclose(col[2 * k], ref, atol=1e-10)
    assert np.max(np.abs(col[1:40:2])) < 1e-12


def test_wigner_points():
    assert abs(fock.wigner(fock.fock_state(0, 8), 0) - 2 / np.pi) < 1e-12
    assert abs(fock.wigner(fock.fock_state(1, 8), 0) + 2 / np.pi) < 1e-12
    alpha = 2 - 1j
    assert abs(fock.wigner(fock.coherent_state(alpha, 60), alpha) - 2 / np.pi) < 1e-6


def test_wigner_coherent_gaussian():
    alpha = 1.5
    psi = fock.coherent_state(alpha, 50)
    z = np.array([0.3 + 0.2j, 1.0 - 0.7j, 2.5 + 0.1j])
    ref = 2 / np.pi * np.exp(-2 * np.abs(z - alpha) ** 2)
    assert np.allclose(fock.wigner_grid(psi, z), ref, atol=1e-9)


def test_wigner_mixed_matches_pure():
    psi = fock.squeezed_coherent_state(2, 0.2, 60)
    z = np.array([0.5, 2 + 0.3j])
    assert np.allclose(fock.wigner_grid(fock.to_density(psi), z), fock.wigner_grid(psi, z), atol=1e-12)


@pytest.mark.parametrize("alpha,r", [(3, 0.0), (3, R_OPT), (2j, 0.3)])
def test_wigner_normalization(alpha, r):
    psi = fock.squeezed_coherent_state(alpha, r, 64)
    ext = abs(alpha) + 5
    xs = np.linspace(-ext, ext, 81)
    h = xs[1] - xs[0]
    w = fock.wigner_grid(psi, xs[None, :] + 1j * xs[:, None])
    # z = x + i p, measure dx dp
    assert abs(w.sum() * h * h - 1) < 1e-3
    assert w.max() <= 2 / np.pi + 1e-9 and w.min() >= -2 / np.pi - 1e-9


def test_purity_and_mean():
    assert abs(fock.purity(fock.coherent_state(2, 40)) - 1) < 1e-10
    mixed = np.diag([0.5, 0.5, 0, 0]).astype(complex)
    assert abs(fock.purity(mixed)) < 1e-15
    assert fock.mean_photon(mixed) == 0.5


@settings(max_examples=25, deadline=None)
@given(
    st.floats(0, 6), st.floats(0, 2 * np.pi), st.floats(0, 0.6), st.floats(0, 2 * np.pi),
)
def test_constructor_invariants(mag, ph, rmag, rph):
    alpha = mag * np.exp(1j * ph)
    r = rmag * np.exp(1j * rph)
    # constructors accept the smallest cutoff the rule allows
    psis = [
        fock.coherent_state(alpha, fock.required_cutoff(mag**2)),
        fock.squeezed_coherent_state(
            alpha, r, fock.required_cutoff(mag**2 + np.sinh(rmag) ** 2, fock.photon_spread(alpha, r), r)
        ),
    ]
    for psi in psis:
        assert abs(np.linalg.norm(psi) - 1) < 1e-10
        assert abs(psi[-1]) ** 2 < fock.LEAKAGE_TOL
        assert fock.is_valid_density(fock.to_density(psi))
