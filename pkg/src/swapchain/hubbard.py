"""Two-component Bose-Hubbard double wells: exact diagonalization and effective gates.

Units have hbar = 1.  Modes are ordered (site 0 up, site 0 down, site 1 up, ...).
Within a double well the left site carries the first qubit; spin up is |1>.
"""
from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from .qstate import SQRT_SWAP, SQRT_SWAP_DAG, TwoQubitGate

MAX_FOCK_DIM = 2000
FAST_V_OVER_J = 4 / np.sqrt(3)
HUBBARD_CSV_HEADER = ("v_over_j", "t", "gate_fidelity", "leakage")


class HubbardError(ValueError):
    pass


@dataclass(frozen=True)
class HubbardParams:
    """``cross_spin_factor`` multiplies the interaction of an up and a down atom
    sharing a site.  1 gives the spin-symmetric model (pair energy V for any
    two atoms); 2 reproduces the doubled cross-spin term read literally."""

    j_inner: float = 1.0
    j_inter: float = 0.0
    v: float = 100.0
    delta: float = 0.0
    cross_spin_factor: float = 1.0

    def __post_init__(self):
        for name in ("j_inner", "j_inter", "v", "delta", "cross_spin_factor"):
            if not np.isfinite(getattr(self, name)):
                raise HubbardError(f"{name} must be finite")

    @property
    def j_ex(self) -> float:
        """Second-order superexchange estimate 2 J^2 / V."""
        return 2 * self.j_inner ** 2 / self.v

    @property
    def period(self) -> float:
        return 2 * np.pi / self.j_ex


@dataclass(frozen=True)
class FockBasis:
    n_sites: int
    n_atoms: int

    def __post_init__(self):
        if self.n_sites < 1 or self.n_atoms < 0:
            raise HubbardError("need at least one site and a non-negative atom number")
        if self.dim > MAX_FOCK_DIM:
            raise HubbardError(f"Fock dimension {self.dim} exceeds cap {MAX_FOCK_DIM}")

    @property
    def n_modes(self) -> int:
        return 2 * self.n_sites

    @property
    def dim(self) -> int:
        from math import comb

        return comb(self.n_atoms + self.n_modes - 1, self.n_modes - 1)

    @property
    def states(self) -> tuple:
        return _enumerate(self.n_modes, self.n_atoms)

    def index(self, occ) -> int:
        return _index_map(self.n_modes, self.n_atoms)[tuple(occ)]

    def spin_state(self, bits) -> int:
        """Index of the singly occupied state with spin ``bits[s]`` on site s."""
        if len(bits) != self.n_sites or self.n_atoms != self.n_sites:
            raise HubbardError("spin configurations need one atom per site")
        occ = [0] * self.n_modes
        for s, b in enumerate(bits):
            occ[2 * s + (0 if int(b) else 1)] = 1
        return self.index(occ)

    def computational_indices(self) -> list:
        """Singly occupied states in qubit order (site 1 = most significant bit)."""
        return [self.spin_state(b) for b in itertools.product((0, 1), repeat=self.n_sites)]


@lru_cache(maxsize=None)
def _enumerate(n_modes: int, n_atoms: int) -> tuple:
    return tuple(
        occ for occ in itertools.product(range(n_atoms + 1), repeat=n_modes) if sum(occ) == n_atoms
    )


@lru_cache(maxsize=None)
def _index_map(n_modes: int, n_atoms: int) -> dict:
    return {occ: i for i, occ in enumerate(_enumerate(n_modes, n_atoms))}


def _bonds(params: HubbardParams, n_sites: int) -> list:
    # sites (0,1), (2,3), ... form double wells; (1,2), (3,4), ... link them
    return [(s, s + 1, params.j_inner if s % 2 == 0 else params.j_inter) for s in range(n_sites - 1)]


def build_hamiltonian(params: HubbardParams, basis: FockBasis) -> np.ndarray:
    """Dense Hamiltonian: hopping, same- and cross-spin on-site interaction, spin tilt."""
    if basis.n_sites % 2:
        raise HubbardError("sites must come in double wells")
    states = basis.states
    idx = _index_map(basis.n_modes, basis.n_atoms)
    h = np.zeros((basis.dim, basis.dim))
    bonds = _bonds(params, basis.n_sites)
    for i, occ in enumerate(states):
        e = 0.0
        for s in range(basis.n_sites):
            nu, nd = occ[2 * s], occ[2 * s + 1]
            e += params.v / 2 * (nu * (nu - 1) + nd * (nd - 1))
            e += params.cross_spin_factor * params.v * nu * nd
        for w in range(0, basis.n_sites, 2):
            lu, ld, ru, rd = occ[2 * w], occ[2 * w + 1], occ[2 * w + 2], occ[2 * w + 3]
            e += params.delta / 2 * (lu - ru - ld + rd)
        h[i, i] = e
        for a, b, j in bonds:
            if j == 0:
                continue
            for spin in (0, 1):
                for src, dst in ((2 * a + spin, 2 * b + spin), (2 * b + spin, 2 * a + spin)):
                    if occ[src] == 0:
                        continue
                    new = list(occ)
                    amp = np.sqrt(new[src])
                    new[src] -= 1
                    amp *= np.sqrt(new[dst] + 1)
                    new[dst] += 1
                    h[idx[tuple(new)], i] -= j * amp
    return h


@lru_cache(maxsize=64)
def _eigensystem(params: HubbardParams, n_sites: int, n_atoms: int):
    h = build_hamiltonian(params, FockBasis(n_sites, n_atoms))
    return np.linalg.eigh(h)


def propagator(params: HubbardParams, t: float, n_sites: int = 2, n_atoms: int | None = None) -> np.ndarray:
    """exp(-i H t) from the eigendecomposition."""
    if t < 0:
        raise HubbardError("evolution time must be non-negative")
    n_atoms = n_sites if n_atoms is None else n_atoms
    w, v = _eigensystem(params, n_sites, n_atoms)
    return (v * np.exp(-1j * w * t)) @ v.conj().T


def evolve(params: HubbardParams, initial, t: float, n_sites: int = 2) -> np.ndarray:
    """Evolve a Fock-space vector, or a spin configuration such as (0, 1)."""
    basis = FockBasis(n_sites, n_sites)
    if isinstance(initial, (tuple, list, str)) and len(initial) == n_sites:
        vec = np.zeros(basis.dim, dtype=complex)
        vec[basis.spin_state([int(b) for b in initial])] = 1
    else:
        vec = np.asarray(initial, dtype=complex)
    return propagator(params, t, n_sites) @ vec


def exchange_coupling(params: HubbardParams) -> float:
    """Half the splitting of the four lowest levels of one double well (singlet-triplet gap / 2)."""
    w, _ = _eigensystem(replace(params, delta=0.0), 2, 2)
    low = np.sort(w)[:4]
    return float((low[-1] - low[0]) / 2)


@dataclass(frozen=True, eq=False)
class EffectiveGate:
    """Propagator block on the singly occupied (qubit) subspace."""

    matrix: np.ndarray
    leakage: float

    def fidelity(self, ideal) -> float:
        """|Tr(G^dag M)| / d, insensitive to the global phase of either matrix."""
        g = ideal.matrix if isinstance(ideal, TwoQubitGate) else np.asarray(ideal)
        return float(abs(np.trace(g.conj().T @ self.matrix)) / g.shape[0])

    def aligned(self, ideal) -> np.ndarray:
        """``matrix`` times the global phase that best matches ``ideal``."""
        g = ideal.matrix if isinstance(ideal, TwoQubitGate) else np.asarray(ideal)
        ov = np.trace(g.conj().T @ self.matrix)
        return self.matrix * (np.conj(ov) / abs(ov) if abs(ov) > 0 else 1)

    def is_unitary(self, tol: float = 1e-10) -> bool:
        d = self.matrix.shape[0]
        return bool(np.max(np.abs(self.matrix.conj().T @ self.matrix - np.eye(d))) < tol)


# computational states in the pair basis |00>, |10>, |01>, |11> (left site first)
_PAIR_BITS = ((0, 0), (1, 0), (0, 1), (1, 1))


def _restrict(u: np.ndarray, basis: FockBasis, bits_list) -> EffectiveGate:
    comp = [basis.spin_state(b) for b in bits_list]
    m = u[np.ix_(comp, comp)]
    leak = max(0.0, 1.0 - float(np.linalg.norm(m) ** 2) / len(comp))
    return EffectiveGate(m, leak)


def extract_gate(params: HubbardParams, t: float) -> EffectiveGate:
    """Single double well evolved for time t, restricted to the qubit subspace."""
    return _restrict(propagator(params, t, 2), FockBasis(2, 2), _PAIR_BITS)


def slow_gate_time(params: HubbardParams) -> float:
    return params.period / 8


def fast_gate_time(params: HubbardParams) -> float:
    return np.pi / params.v


def heisenberg_propagator(j_ex: float, t: float) -> np.ndarray:
    """exp(i t J_ex/2 (XX + YY + ZZ)) in the pair basis."""
    from .pauli import PAULI_MATRICES as P

    h = -j_ex / 2 * sum(np.kron(P[c], P[c]) for c in "XYZ")
    w, v = np.linalg.eigh(h)
    u = (v * np.exp(-1j * w * t)) @ v.conj().T
    order = [0, 2, 1, 3]  # first-site-major -> pair basis
    return u[np.ix_(order, order)]


def tilt_phase_gate(params: HubbardParams, t: float, deep_barrier: bool = True) -> EffectiveGate:
    """Evolution under the spin-dependent tilt; with ``deep_barrier`` hopping is switched off."""
    p = replace(params, j_inner=0.0, j_inter=0.0) if deep_barrier else params
    return extract_gate(p, t)


def phase_step_time(delta: float) -> float:
    """Shortest t > 0 at which the tilt gives |10> a relative phase +pi/2 over |01>.

    |10> and |01> have energies +delta and -delta, so their relative phase is
    exp(-2 i delta t) and the condition is delta * t = 3 pi / 4 (mod pi).
    """
    if delta == 0:
        raise HubbardError("a tilt is needed to imprint a phase")
    return float(3 * np.pi / (4 * delta)) if delta > 0 else float(np.pi / (4 * -delta))


def subspace_fidelity(gate: EffectiveGate, ideal, indices=(1, 2)) -> float:
    """Phase-insensitive overlap on a subset of pair-basis states (default |10>, |01>)."""
    g = ideal.matrix if isinstance(ideal, TwoQubitGate) else np.asarray(ideal)
    ix = np.ix_(list(indices), list(indices))
    return float(abs(np.trace(g[ix].conj().T @ gate.matrix[ix])) / len(indices))


@dataclass(frozen=True)
class ChainLeakage:
    per_gate_infidelity: float  # against sqrt(SWAP)^dag on each well
    baseline: float  # same, with j_inter = 0
    excess: float  # coupled versus uncoupled evolution, per gate
    t: float
    leakage: float


def chain_leakage(params: HubbardParams, t: float | None = None) -> ChainLeakage:
    """Two neighbouring double wells (4 sites, 4 atoms) for one gate time.

    With U the 4-site propagator and U0 the same with j_inter = 0, both applied
    to the 16 singly occupied inputs P, F = |Tr(P U0^dag U P)| / 16 and the
    tunneling-attributable infidelity per gate is 1 - sqrt(F).  Leaked
    amplitude is kept, so F <= 1 and the excess is never negative.  The
    infidelities against the ideal gate pair use the restricted block M with
    F = |Tr((G x G)^dag M)| / 16.
    """
    if params.j_inter < 0:
        raise HubbardError("j_inter must be non-negative")
    t = slow_gate_time(params) if t is None else t
    basis = FockBasis(4, 4)
    gg = np.kron(SQRT_SWAP_DAG.local, SQRT_SWAP_DAG.local)
    bits = list(itertools.product((0, 1), repeat=4))
    comp = [basis.spin_state(b) for b in bits]

    def per_gate(p):
        u = propagator(p, t, 4)
        eff = _restrict(u, basis, bits)
        f = abs(np.trace(gg.conj().T @ eff.matrix)) / 16
        return 1 - np.sqrt(f), eff.leakage, u[:, comp]

    inf, leak, u = per_gate(params)
    base, _, u0 = per_gate(replace(params, j_inter=0.0))
    overlap = min(1.0, abs(np.trace(u0.conj().T @ u)) / 16)
    excess = max(0.0, 1 - np.sqrt(overlap))
    return ChainLeakage(float(inf), float(base), float(excess), float(t), float(leak))


def gate_sweep(v_over_j_values, fractions=None, j_inner: float = 1.0) -> list:
    """Rows (v_over_j, t, fidelity to sqrt(SWAP)^dag, leakage) around each gate time.

    Below V/J = 10 the gate time is pi/V, otherwise T/8.
    """
    fractions = np.linspace(0.0, 2.0, 21) if fractions is None else np.asarray(fractions)
    rows = []
    for r in v_over_j_values:
        p = HubbardParams(j_inner=j_inner, v=r * j_inner)
        t0 = fast_gate_time(p) if r < 10 else slow_gate_time(p)
        for f in fractions:
            g = extract_gate(p, f * t0)
            rows.append((float(r), float(f * t0), g.fidelity(SQRT_SWAP_DAG), g.leakage))
    return rows


def write_gate_sweep(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HUBBARD_CSV_HEADER)
        for r, t, f, leak in rows:
            w.writerow([f"{r:.12g}", f"{t:.12g}", f"{f:.12g}", f"{leak:.6e}"])

