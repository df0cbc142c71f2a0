"""Slow, independent reference implementations used only by the tests."""
from functools import reduce

import numpy as np

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

# sqrt(SWAP)^dag written in the first-site-major basis |00>,|01>,|10>,|11>
SQSWAP_DAG_LOCAL = np.array(
    [
        [1, 0, 0, 0],
        [0, (1 - 1j) / 2, (1 + 1j) / 2, 0],
        [0, (1 + 1j) / 2, (1 - 1j) / 2, 0],
        [0, 0, 0, 1],
    ]
)
# relative phase i on |10> (first site up, second down)
PHASE_LOCAL = np.diag([1, 1, 1j, 1])


def kron_all(mats):
    return reduce(np.kron, mats)


def pauli_matrix(letters):
    return kron_all([PAULI[c] for c in letters])


def embed_two(local, i, j, n):
    """Full 2^n matrix of a 4x4 operator acting on sites i, j (1-based, site 1 = MSB)."""
    dim = 2 ** n
    out = np.zeros((dim, dim), dtype=complex)
    for col in range(dim):
        bits = [(col >> (n - s)) & 1 for s in range(1, n + 1)]
        a_in = 2 * bits[i - 1] + bits[j - 1]
        for a_out in range(4):
            amp = local[a_out, a_in]
            if amp == 0:
                continue
            nb = list(bits)
            nb[i - 1], nb[j - 1] = a_out >> 1, a_out & 1
            row = int("".join(map(str, nb)), 2)
            out[row, col] += amp
    return out


def dense_circuit(n):
    """Forward circuit as a product of embedded dense gates."""
    u = np.eye(2 ** n, dtype=complex)
    for k in range(1, n // 2 + 1):
        u = embed_two(SQSWAP_DAG_LOCAL, 2 * k - 1, 2 * k, n) @ u
    for k in range(1, n // 2 + 1):
        u = embed_two(PHASE_LOCAL, 2 * k - 1, 2 * k, n) @ u
    for k in range(1, n // 2):
        u = embed_two(SQSWAP_DAG_LOCAL, 2 * k, 2 * k + 1, n) @ u
    return u


def dense_target(n):
    neel = np.zeros(2 ** n, dtype=complex)
    neel[int("10" * (n // 2), 2)] = 1
    return dense_circuit(n) @ neel


def partial_trace(rho, keep, n):
    """Reduced density matrix on sorted ``keep`` by explicit summation."""
    keep = sorted(keep)
    rest = [s for s in range(1, n + 1) if s not in keep]
    dk = 2 ** len(keep)
    out = np.zeros((dk, dk), dtype=complex)
    for a in range(2 ** n):
        for b in range(2 ** n):
            ba = [(a >> (n - s)) & 1 for s in range(1, n + 1)]
            bb = [(b >> (n - s)) & 1 for s in range(1, n + 1)]
            if any(ba[s - 1] != bb[s - 1] for s in rest):
                continue
            ia = int("".join(str(ba[s - 1]) for s in keep), 2)
            ib = int("".join(str(bb[s - 1]) for s in keep), 2)
            out[ia, ib] += rho[a, b]
    return out
