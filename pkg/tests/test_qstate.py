import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import SQSWAP_DAG_LOCAL, embed_two, partial_trace, pauli_matrix
from swapchain.pauli import PauliString
from swapchain.qstate import (
    SQRT_SWAP,
    SQRT_SWAP_DAG,
    Bipartition,
    MixedState,
    PureState,
    StateError,
    TwoQubitGate,
    apply_gate,
    apply_single,
    expectation,
    fidelity,
    purity,
    random_mixed_state,
    random_pure_state,
    reduced_density_matrix,
    schmidt_spectrum,
)


def test_from_bits_index_convention():
    psi = PureState.from_bits("1010")
    assert np.argmax(np.abs(psi.amplitudes)) == 0b1010


def test_pure_state_rejects_unnormalized():
    with pytest.raises(StateError):
        PureState(1, np.array([1.0, 1.0]))


def test_amplitudes_are_read_only():
    psi = PureState.from_bits("01")
    with pytest.raises(ValueError):
        psi.amplitudes[0] = 1


def test_mixed_state_checks():
    with pytest.raises(StateError):
        MixedState(1, np.array([[0.5, 0.1], [0.2, 0.5]]))
    with pytest.raises(StateError):
        MixedState(1, np.eye(2))
    rho = MixedState.maximally_mixed(3)
    assert rho.is_physical()
    assert np.isclose(purity(rho), 1 / 8)


def test_gate_tables():
    # pair basis |00>,|10>,|01>,|11>; local form is first-site-major
    assert np.allclose(SQRT_SWAP_DAG.local, SQSWAP_DAG_LOCAL)
    assert np.allclose((SQRT_SWAP_DAG @ SQRT_SWAP_DAG).matrix[[1, 2]][:, [1, 2]], [[0, 1], [1, 0]])
    assert np.allclose(SQRT_SWAP.matrix, SQRT_SWAP_DAG.power(3).matrix)
    assert SQRT_SWAP.dagger().label == "SQRT_SWAP_DAG"


def test_non_unitary_gate_rejected():
    with pytest.raises(StateError):
        TwoQubitGate(np.ones((4, 4)))


@pytest.mark.parametrize("sites", [(1, 2), (2, 1), (1, 4), (3, 2), (2, 4)])
def test_apply_gate_matches_dense_embedding(sites):
    rng = np.random.default_rng(7)
    psi = random_pure_state(4, rng)
    out = apply_gate(psi, SQRT_SWAP_DAG, sites)
    ref = embed_two(SQSWAP_DAG_LOCAL, *sites, 4) @ psi.amplitudes
    assert np.allclose(out.amplitudes, ref, atol=1e-12)

    rho = random_mixed_state(4, rng)
    u = embed_two(SQSWAP_DAG_LOCAL, *sites, 4)
    assert np.allclose(apply_gate(rho, SQRT_SWAP_DAG, sites).matrix, u @ rho.matrix @ u.conj().T)


def test_apply_single_hadamard():
    h = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    psi = apply_single(PureState.from_bits("00"), h, 2)
    assert np.allclose(psi.amplitudes, [1 / np.sqrt(2), 1 / np.sqrt(2), 0, 0])


def test_rdm_against_explicit_sum():
    rng = np.random.default_rng(3)
    rho = random_mixed_state(4, rng)
    for keep in ([1], [2, 4], [1, 3, 4], [3, 2]):
        assert np.allclose(reduced_density_matrix(rho, keep).matrix, partial_trace(rho.matrix, keep, 4))
    psi = random_pure_state(4, rng)
    dm = np.outer(psi.amplitudes, psi.amplitudes.conj())
    assert np.allclose(reduced_density_matrix(psi, [2, 3]).matrix, partial_trace(dm, [2, 3], 4))


def test_schmidt_spectrum_bell_and_product():
    bell = PureState.from_vector(np.array([0, 1, 1, 0]), normalize=True)
    assert np.allclose(schmidt_spectrum(bell, [1]), [0.5, 0.5])
    prod = PureState.from_bits("0110")
    assert np.isclose(schmidt_spectrum(prod, [1, 2])[0], 1.0)


def test_schmidt_cut_size_mismatch():
    with pytest.raises(StateError):
        schmidt_spectrum(PureState.from_bits("0101"), Bipartition(6, [1]))


def test_all_cuts_count():
    for n in (2, 3, 4, 6):
        cuts = list(Bipartition.all_cuts(n))
        assert len(cuts) == 2 ** (n - 1) - 1
        assert len({c.subset for c in cuts}) == len(cuts)


def test_expectation_matches_dense_pauli():
    rng = np.random.default_rng(11)
    rho = random_mixed_state(3, rng)
    psi = random_pure_state(3, rng)
    for letters in ("XYZ", "IYI", "ZZX", "YYY"):
        m = pauli_matrix(letters)
        assert np.isclose(expectation(rho, PauliString(letters)), np.trace(rho.matrix @ m).real)
        assert np.isclose(
            expectation(psi, PauliString(letters)), np.vdot(psi.amplitudes, m @ psi.amplitudes).real
        )


def test_fidelity_pure_and_mixed_agree():
    rng = np.random.default_rng(5)
    a, b = random_pure_state(3, rng), random_pure_state(3, rng)
    assert np.isclose(fidelity(a, b), fidelity(a.density(), b))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(2, 5))
def test_rdm_is_a_state(seed, n):
    rng = np.random.default_rng(seed)
    rho = random_mixed_state(n, rng, rank=2)
    keep = sorted(rng.choice(np.arange(1, n + 1), size=rng.integers(1, n), replace=False).tolist())
    red = reduced_density_matrix(rho, keep)
    assert red.is_physical()
    assert np.isclose(np.trace(red.matrix).real, 1.0)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_schmidt_spectrum_sums_to_one_and_matches_rdm(seed):
    rng = np.random.default_rng(seed)
    psi = random_pure_state(5, rng)
    lam = schmidt_spectrum(psi, [1, 4])
    assert np.isclose(lam.sum(), 1.0)
    ev = np.sort(np.linalg.eigvalsh(reduced_density_matrix(psi, [1, 4]).matrix))[::-1]
    assert np.allclose(lam, ev, atol=1e-12)
