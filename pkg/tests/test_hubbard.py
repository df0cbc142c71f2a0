import itertools

import numpy as np
import pytest

from swapchain.hubbard import (
    FAST_V_OVER_J,
    FockBasis,
    HubbardError,
    HubbardParams,
    build_hamiltonian,
    chain_leakage,
    evolve,
    exchange_coupling,
    extract_gate,
    fast_gate_time,
    gate_sweep,
    heisenberg_propagator,
    phase_step_time,
    propagator,
    slow_gate_time,
    subspace_fidelity,
    tilt_phase_gate,
    write_gate_sweep,
)
from swapchain.protocol import phase_gate
from swapchain.qstate import SQRT_SWAP, SQRT_SWAP_DAG

# regression values from exact diagonalization of one double well at V/J = 100
SLOW_FIDELITY = 0.9994006822740389
SLOW_SQRT_SWAP_FIDELITY = 0.9994003881356495


def _ladder_oracle(params, n_sites=2):
    """Hamiltonian from truncated bosonic ladder matrices, projected to N atoms."""
    n_modes, cut = 2 * n_sites, n_sites + 1
    a1 = np.diag(np.sqrt(np.arange(1, cut)), 1)
    eye = np.eye(cut)

    def mode_op(op, m):
        mats = [eye] * n_modes
        mats[m] = op
        out = mats[0]
        for x in mats[1:]:
            out = np.kron(out, x)
        return out

    a = [mode_op(a1, m) for m in range(n_modes)]
    num = [x.T @ x for x in a]
    h = np.zeros_like(num[0])
    for s in range(n_sites):
        u, d = 2 * s, 2 * s + 1
        h += params.v / 2 * (num[u] @ (num[u] - np.eye(len(h))) + num[d] @ (num[d] - np.eye(len(h))))
        h += params.cross_spin_factor * params.v * num[u] @ num[d]
    for w in range(0, n_sites, 2):
        h += params.delta / 2 * (num[2 * w] - num[2 * w + 2] - num[2 * w + 1] + num[2 * w + 3])
    for s in range(n_sites - 1):
        j = params.j_inner if s % 2 == 0 else params.j_inter
        for spin in (0, 1):
            hop = a[2 * s + spin].T @ a[2 * (s + 1) + spin]
            h -= j * (hop + hop.T)
    total = sum(num).diagonal()
    keep = np.isclose(total, n_sites)
    return h[np.ix_(keep, keep)]


def test_dimensions():
    assert FockBasis(2, 2).dim == 10
    assert FockBasis(4, 4).dim == 330
    assert len(FockBasis(4, 4).states) == 330
    with pytest.raises(HubbardError):
        FockBasis(6, 6)


def test_spin_state_indexing():
    b = FockBasis(2, 2)
    idx = b.computational_indices()
    assert len(set(idx)) == 4
    assert b.states[b.spin_state((1, 0))] == (1, 0, 0, 1)
    with pytest.raises(HubbardError):
        FockBasis(2, 3).spin_state((1, 0))


@pytest.mark.parametrize(
    "params",
    [HubbardParams(), HubbardParams(v=7.0, delta=0.3), HubbardParams(v=5.0, cross_spin_factor=2.0)],
)
def test_spectrum_matches_ladder_oracle(params):
    h = build_hamiltonian(params, FockBasis(2, 2))
    assert np.allclose(h, h.T)
    ref = _ladder_oracle(params)
    assert np.allclose(np.linalg.eigvalsh(h), np.linalg.eigvalsh(ref), atol=1e-10)


def test_uncoupled_wells_factorize():
    # with no inter-well hopping the two-well block is the tensor square of the one-well gate
    p = HubbardParams(v=100.0)
    res = chain_leakage(p)
    assert res.excess == 0.0
    assert res.baseline == pytest.approx(1 - SLOW_FIDELITY, abs=1e-10)


def test_zero_hopping_is_diagonal():
    h = build_hamiltonian(HubbardParams(j_inner=0.0), FockBasis(2, 2))
    assert np.allclose(h, np.diag(np.diag(h)))


def test_exchange_gap():
    p = HubbardParams(v=100.0)
    assert abs(exchange_coupling(p) - p.j_ex) / p.j_ex < 1e-3
    # exact result of the two-site singlet: (sqrt(V^2 + 16 J^2) - V)/4
    assert np.isclose(exchange_coupling(p), (np.sqrt(100 ** 2 + 16) - 100) / 4)


def test_evolution_basics():
    p = HubbardParams()
    basis = FockBasis(2, 2)
    assert np.allclose(propagator(p, 0.0), np.eye(basis.dim))
    # two up atoms only leak into the doubly occupied up-up states, at order (J/V)^2
    up_up = evolve(p, (1, 1), 3.7)
    assert abs(up_up[basis.spin_state((1, 1))]) ** 2 > 1 - 8 * (p.j_inner / p.v) ** 2
    spin_up_only = [i for i, occ in enumerate(basis.states) if occ[1] == occ[3] == 0]
    assert np.isclose(np.sum(np.abs(up_up[spin_up_only]) ** 2), 1.0)
    back = evolve(p, (1, 0), p.period)
    assert abs(back[basis.spin_state((1, 0))]) ** 2 > 0.999
    with pytest.raises(HubbardError):
        propagator(p, -1.0)


def test_slow_gates_pinned():
    p = HubbardParams(v=100.0)
    t8 = slow_gate_time(p)
    g = extract_gate(p, t8)
    assert g.fidelity(SQRT_SWAP_DAG) == pytest.approx(SLOW_FIDELITY, abs=1e-12)
    assert extract_gate(p, 3 * t8).fidelity(SQRT_SWAP) == pytest.approx(SLOW_SQRT_SWAP_FIDELITY, abs=1e-12)
    assert 0 < g.leakage < 2e-3


def test_fast_gate():
    p = HubbardParams(v=FAST_V_OVER_J)
    g = extract_gate(p, fast_gate_time(p))
    assert g.fidelity(SQRT_SWAP_DAG) > 1 - 1e-9
    assert g.leakage < 1e-9 and g.is_unitary(1e-8)


def test_fidelity_ignores_global_phase():
    g = extract_gate(HubbardParams(), 5.0)
    phase = np.exp(0.7j)
    assert np.isclose(g.fidelity(phase * SQRT_SWAP_DAG.matrix), g.fidelity(SQRT_SWAP_DAG))
    assert np.isclose(np.trace(SQRT_SWAP_DAG.matrix.conj().T @ g.aligned(SQRT_SWAP_DAG)).imag, 0, atol=1e-12)


def test_magnetization_sectors_do_not_mix():
    u = propagator(HubbardParams(v=20.0, delta=0.5), 2.3)
    basis = FockBasis(2, 2)
    mz = np.array([occ[0] + occ[2] - occ[1] - occ[3] for occ in basis.states])
    for a, b in itertools.product(range(basis.dim), repeat=2):
        if mz[a] != mz[b]:
            assert abs(u[a, b]) < 1e-12


def test_approaches_heisenberg_with_growing_v():
    dists = []
    for v in (10.0, 100.0, 200.0):
        p = HubbardParams(v=v)
        t = slow_gate_time(p)
        g = extract_gate(p, t)
        ideal = heisenberg_propagator(exchange_coupling(p), t)
        dists.append(np.linalg.norm(g.aligned(ideal) - ideal))
    assert dists[0] > dists[1] > dists[2]


def test_heisenberg_quarter_period_is_sqrt_swap_dag():
    ideal = heisenberg_propagator(1.0, 2 * np.pi / 8)
    assert abs(np.trace(SQRT_SWAP_DAG.matrix.conj().T @ ideal)) / 4 == pytest.approx(1.0)
    assert np.allclose(ideal.conj().T @ ideal, np.eye(4))


def test_tilt_phase_gate():
    delta = 0.8
    p = HubbardParams(delta=delta)
    t = phase_step_time(delta)
    g = tilt_phase_gate(p, t)
    assert g.is_unitary()
    assert subspace_fidelity(g, phase_gate()) == pytest.approx(1.0, abs=1e-12)
    # |00> and |11> pick up no tilt energy at all
    assert np.allclose(np.abs(np.diag(g.matrix)), 1.0)
    assert np.isclose(phase_step_time(-delta) * delta, np.pi / 4)
    with pytest.raises(HubbardError):
        phase_step_time(0.0)


def test_gates_compose():
    p = HubbardParams(v=100.0)
    t = slow_gate_time(p)
    u1 = propagator(p, t)
    assert np.allclose(u1 @ u1, propagator(p, 2 * t), atol=1e-10)


def test_chain_leakage():
    p = HubbardParams(v=100.0)
    weak = chain_leakage(HubbardParams(v=100.0, j_inter=p.j_ex / 25))
    assert abs(weak.excess) < 1e-3
    assert weak.baseline < 1e-3
    # tunneling-attributable infidelity grows with the inter-well coupling
    excess = [chain_leakage(HubbardParams(v=100.0, j_inter=x * p.j_ex)).excess for x in (0, 1, 5, 10, 25)]
    assert excess[0] == 0.0
    assert all(a <= b for a, b in zip(excess, excess[1:]))
    assert excess[-1] > 1e-3
    with pytest.raises(HubbardError):
        chain_leakage(HubbardParams(j_inter=-1.0))


def test_gate_sweep_rows(tmp_path):
    rows = gate_sweep([100.0, FAST_V_OVER_J], fractions=[0.0, 1.0])
    assert len(rows) == 4
    assert rows[0][2] == pytest.approx(abs(np.trace(SQRT_SWAP_DAG.matrix.conj().T)) / 4)
    assert rows[1][2] == pytest.approx(SLOW_FIDELITY, abs=1e-12)
    assert rows[3][2] > 0.999
    write_gate_sweep(rows, tmp_path / "h.csv")
    assert (tmp_path / "h.csv").read_text().startswith("v_over_j,t,gate_fidelity,leakage\n")
