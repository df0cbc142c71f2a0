"""Dense N-qubit states: gate application, partial traces, Schmidt spectra.

Conventions used throughout the package:

* Sites are labelled 1..n.  Site 1 is the most significant bit of a basis
  index, so ``|b_1 b_2 ... b_n>`` has index ``sum(b_s * 2**(n - s))``.
* Bit value 1 is ``|1> = |up>``, bit value 0 is ``|0> = |down>``.
  ``Z = diag(1, -1)``, so ``Z|1> = -|1>``.
* Two-qubit gate matrices are written in the pair basis
  ``|00>, |10>, |01>, |11>`` where the first digit belongs to the first site
  of the pair.  ``TwoQubitGate.local`` gives the first-site-major form.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Union

import numpy as np

NORM_TOL = 1e-12
EIG_TOL = -1e-10
VALUE_TOL = 1e-9
OVERLAP_TOL = 1e-10
# dense density matrices are only built up to this register size
MAX_MIXED_QUBITS = 12

# pair basis |00>,|10>,|01>,|11>  <->  first-site-major |00>,|01>,|10>,|11>
_PAIR_PERM = np.array([0, 2, 1, 3])


class StateError(ValueError):
    """Invalid state, gate or site argument."""


@dataclass(frozen=True, eq=False)
class PureState:
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.n_qubits < 1:
            raise StateError("n_qubits must be >= 1")
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size != 2 ** self.n_qubits:
            raise StateError(f"expected {2 ** self.n_qubits} amplitudes, got {amps.size}")
        norm = np.vdot(amps, amps).real
        if abs(norm - 1.0) > NORM_TOL * max(1, amps.size ** 0.5):
            raise StateError(f"state not normalized (norm^2 = {norm!r})")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_bits(cls, bits: Union[str, Iterable[int]]) -> "PureState":
        bits = [int(b) for b in bits]
        n = len(bits)
        amps = np.zeros(2 ** n, dtype=complex)
        amps[int("".join(map(str, bits)), 2)] = 1.0
        return cls(n, amps)

    @classmethod
    def from_vector(cls, vec, normalize: bool = False) -> "PureState":
        vec = np.asarray(vec, dtype=complex).reshape(-1)
        n = int(round(np.log2(vec.size)))
        if 2 ** n != vec.size:
            raise StateError("vector length is not a power of two")
        if normalize:
            vec = vec / np.linalg.norm(vec)
        return cls(n, vec)

    def density(self) -> "MixedState":
        return MixedState(self.n_qubits, np.outer(self.amplitudes, self.amplitudes.conj()))

    def overlap(self, other: "PureState") -> complex:
        _check_same_size(self, other)
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def equals_up_to_phase(self, other: "PureState", tol: float = OVERLAP_TOL) -> bool:
        return abs(self.overlap(other)) ** 2 >= 1.0 - tol

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape((2,) * self.n_qubits)


@dataclass(frozen=True, eq=False)
class MixedState:
    n_qubits: int
    matrix: np.ndarray

    def __post_init__(self):
        if self.n_qubits < 1:
            raise StateError("n_qubits must be >= 1")
        if self.n_qubits > MAX_MIXED_QUBITS:
            raise StateError(f"density matrices limited to {MAX_MIXED_QUBITS} qubits")
        mat = np.asarray(self.matrix, dtype=complex)
        dim = 2 ** self.n_qubits
        if mat.shape != (dim, dim):
            raise StateError(f"expected a {dim}x{dim} matrix, got {mat.shape}")
        tr = np.trace(mat).real
        if abs(tr - 1.0) > NORM_TOL * max(1, dim ** 0.5):
            raise StateError(f"trace {tr!r} != 1")
        if np.max(np.abs(mat - mat.conj().T)) > NORM_TOL * max(1, dim ** 0.5):
            raise StateError("matrix is not Hermitian")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    @classmethod
    def maximally_mixed(cls, n: int) -> "MixedState":
        dim = 2 ** n
        return cls(n, np.eye(dim, dtype=complex) / dim)

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def is_physical(self, tol: float = EIG_TOL) -> bool:
        return bool(self.eigenvalues().min() >= tol)

    def density(self) -> "MixedState":
        return self


State = Union[PureState, MixedState]


@dataclass(frozen=True, eq=False)
class TwoQubitGate:
    """A 4x4 unitary in the pair basis |00>, |10>, |01>, |11>."""

    matrix: np.ndarray
    label: str = "U"
    local: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=complex)
        if mat.shape != (4, 4):
            raise StateError("two-qubit gate must be 4x4")
        if np.max(np.abs(mat.conj().T @ mat - np.eye(4))) > NORM_TOL:
            raise StateError(f"gate {self.label} is not unitary")
        mat.setflags(write=False)
        local = mat[np.ix_(_PAIR_PERM, _PAIR_PERM)]
        local.setflags(write=False)
        object.__setattr__(self, "matrix", mat)
        object.__setattr__(self, "local", local)

    @classmethod
    def from_local(cls, local, label: str = "U") -> "TwoQubitGate":
        local = np.asarray(local, dtype=complex)
        return cls(local[np.ix_(_PAIR_PERM, _PAIR_PERM)], label)

    def dagger(self) -> "TwoQubitGate":
        label = self.label[:-4] if self.label.endswith("_DAG") else self.label + "_DAG"
        return TwoQubitGate(self.matrix.conj().T, label)

    def __matmul__(self, other: "TwoQubitGate") -> "TwoQubitGate":
        return TwoQubitGate(self.matrix @ other.matrix, f"{self.label}*{other.label}")

    def power(self, k: int) -> "TwoQubitGate":
        return TwoQubitGate(np.linalg.matrix_power(self.matrix, k), f"{self.label}^{k}")


SQRT_SWAP_DAG = TwoQubitGate(
    np.array(
        [
            [1, 0, 0, 0],
            [0, (1 - 1j) / 2, (1 + 1j) / 2, 0],
            [0, (1 + 1j) / 2, (1 - 1j) / 2, 0],
            [0, 0, 0, 1],
        ]
    ),
    "SQRT_SWAP_DAG",
)
SQRT_SWAP = SQRT_SWAP_DAG.dagger()
IDENTITY2 = TwoQubitGate(np.eye(4), "I")


@dataclass(frozen=True)
class Bipartition:
    """A cut {A, complement} of sites 1..n; ``subset`` is A."""

    n_qubits: int
    subset: frozenset

    def __init__(self, n_qubits: int, subset: Iterable[int]):
        sub = frozenset(int(s) for s in subset)
        if not sub:
            raise StateError("bipartition part must be nonempty")
        if len(sub) >= n_qubits:
            raise StateError("bipartition part must be a proper subset")
        _check_sites(sub, n_qubits)
        object.__setattr__(self, "n_qubits", n_qubits)
        object.__setattr__(self, "subset", sub)

    @property
    def complement(self) -> frozenset:
        return frozenset(range(1, self.n_qubits + 1)) - self.subset

    @classmethod
    def all_cuts(cls, n: int):
        """Every unordered bipartition (A containing site 1), 2**(n-1) - 1 of them."""
        rest = list(range(2, n + 1))
        for mask in range(2 ** (n - 1) - 1):
            yield cls(n, [1] + [s for k, s in enumerate(rest) if mask >> k & 1])


def _check_sites(sites, n):
    for s in sites:
        if not 1 <= s <= n:
            raise StateError(f"site {s} outside 1..{n}")


def _check_same_size(a, b):
    if a.n_qubits != b.n_qubits:
        raise StateError(f"size mismatch: {a.n_qubits} vs {b.n_qubits} qubits")


def _apply_local_to_tensor(tensor, local, axes):
    """Contract a (2,2,2,2) operator into ``tensor`` along ``axes`` (two axes)."""
    op = local.reshape(2, 2, 2, 2)
    out = np.tensordot(op, tensor, axes=([2, 3], list(axes)))
    return np.moveaxis(out, [0, 1], list(axes))


def apply_gate(state: State, gate: TwoQubitGate, sites) -> State:
    """Apply ``gate`` with its first pair index on ``sites[0]``."""
    i, j = (int(s) for s in sites)
    n = state.n_qubits
    if i == j:
        raise StateError("gate sites must differ")
    _check_sites((i, j), n)
    if isinstance(state, PureState):
        t = _apply_local_to_tensor(state.tensor(), gate.local, (i - 1, j - 1))
        return PureState(n, t.reshape(-1))
    rho = state.matrix.reshape((2,) * (2 * n))
    rho = _apply_local_to_tensor(rho, gate.local, (i - 1, j - 1))
    rho = _apply_local_to_tensor(rho, gate.local.conj(), (n + i - 1, n + j - 1))
    return MixedState(n, rho.reshape(2 ** n, 2 ** n))


def apply_layer(state: State, gate: TwoQubitGate, pairs) -> State:
    for pair in pairs:
        state = apply_gate(state, gate, pair)
    return state


def apply_single(state: State, op: np.ndarray, site: int) -> State:
    """Apply a 2x2 operator (unitary) on one site."""
    n = state.n_qubits
    _check_sites((site,), n)
    op = np.asarray(op, dtype=complex)
    if isinstance(state, PureState):
        t = np.moveaxis(np.tensordot(op, state.tensor(), axes=([1], [site - 1])), 0, site - 1)
        return PureState(n, t.reshape(-1))
    rho = state.matrix.reshape((2,) * (2 * n))
    rho = np.moveaxis(np.tensordot(op, rho, axes=([1], [site - 1])), 0, site - 1)
    rho = np.moveaxis(np.tensordot(op.conj(), rho, axes=([1], [n + site - 1])), 0, n + site - 1)
    return MixedState(n, rho.reshape(2 ** n, 2 ** n))


def reduced_density_matrix(state: State, subset) -> MixedState:
    """Trace out every site not in ``subset``; kept sites stay in ascending order."""
    keep = sorted({int(s) for s in subset})
    if not keep:
        raise StateError("subset must be nonempty")
    n = state.n_qubits
    _check_sites(keep, n)
    rest = [s for s in range(1, n + 1) if s not in keep]
    dk, dr = 2 ** len(keep), 2 ** len(rest)
    order = [s - 1 for s in keep + rest]
    if isinstance(state, PureState):
        m = state.tensor().transpose(order).reshape(dk, dr)
        rho = m @ m.conj().T
    else:
        t = state.matrix.reshape((2,) * (2 * n))
        t = t.transpose(order + [n + k for k in order]).reshape(dk, dr, dk, dr)
        rho = np.einsum("ijkj->ik", t)
    rho = (rho + rho.conj().T) / 2
    return MixedState(len(keep), rho)


def schmidt_spectrum(state: PureState, cut: Union[Bipartition, Iterable[int]]) -> np.ndarray:
    """Squared Schmidt coefficients across ``cut``, largest first."""
    if not isinstance(state, PureState):
        raise StateError("Schmidt decomposition needs a pure state")
    n = state.n_qubits
    if not isinstance(cut, Bipartition):
        cut = Bipartition(n, cut)
    if cut.n_qubits != n:
        raise StateError(f"cut is for {cut.n_qubits} qubits, state has {n}")
    part = sorted(cut.subset)
    rest = sorted(cut.complement)
    m = state.tensor().transpose([s - 1 for s in part + rest]).reshape(2 ** len(part), -1)
    lam = np.linalg.svd(m, compute_uv=False) ** 2
    if abs(lam.sum() - 1.0) > 1e-10:
        raise StateError("state not normalized")
    return np.sort(lam)[::-1]


def purity(rho: State) -> float:
    if isinstance(rho, PureState):
        return 1.0
    m = rho.matrix
    return float(np.vdot(m, m).real)


def fidelity(rho: State, psi: PureState) -> float:
    """<psi|rho|psi>; for a pure ``rho`` this is |<phi|psi>|^2."""
    _check_same_size(rho, psi)
    if isinstance(rho, PureState):
        return float(abs(np.vdot(psi.amplitudes, rho.amplitudes)) ** 2)
    v = psi.amplitudes
    return float(np.vdot(v, rho.matrix @ v).real)


def expectation(rho: State, obs) -> float:
    """Tr(rho O) for a PauliString or PauliSum (anything with ``.terms``)."""
    terms = getattr(obs, "terms", None)
    if terms is None:
        terms = (obs,)
    return float(sum(t.weight * _pauli_expectation(rho, t.letters) for t in terms))


def _pauli_masks(letters: str):
    n = len(letters)
    xmask = zmask = 0
    ny = 0
    for s, ch in enumerate(letters):
        bit = 1 << (n - 1 - s)
        if ch in "XY":
            xmask |= bit
        if ch in "ZY":
            zmask |= bit
        if ch == "Y":
            ny += 1
        elif ch not in "IXZ":
            raise StateError(f"bad Pauli letter {ch!r}")
    return xmask, zmask, ny


def _popcount_parity(values: np.ndarray) -> np.ndarray:
    return np.bitwise_count(values).astype(np.int64) & 1


def pauli_action(letters: str):
    """Return (flip_mask, phase) with P|b> = phase[b] |b ^ flip_mask>."""
    n = len(letters)
    xmask, zmask, ny = _pauli_masks(letters)
    idx = np.arange(2 ** n, dtype=np.int64)
    sign = 1 - 2 * _popcount_parity(idx & zmask)
    return xmask, (1j ** ny) * sign


def _pauli_expectation(rho: State, letters: str) -> float:
    if len(letters) != rho.n_qubits:
        raise StateError(
            f"observable acts on {len(letters)} sites, register has {rho.n_qubits}"
        )
    xmask, phase = pauli_action(letters)
    idx = np.arange(2 ** rho.n_qubits)
    if isinstance(rho, PureState):
        a = rho.amplitudes
        return float(np.sum(a[idx ^ xmask].conj() * phase * a).real)
    # Tr(rho P) = sum_b phase[b] rho[b, b ^ x]
    return float(np.sum(rho.matrix[idx, idx ^ xmask] * phase).real)


def random_pure_state(n: int, rng: np.random.Generator) -> PureState:
    v = rng.normal(size=2 ** n) + 1j * rng.normal(size=2 ** n)
    return PureState(n, v / np.linalg.norm(v))


def random_mixed_state(n: int, rng: np.random.Generator, rank: int | None = None) -> MixedState:
    """Ginibre-ensemble density matrix."""
    dim = 2 ** n
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    rho = (rho + rho.conj().T) / 2
    return MixedState(n, rho / np.trace(rho).real)
