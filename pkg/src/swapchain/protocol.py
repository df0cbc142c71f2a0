"""The two-layer generation circuit and its reverse."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .pauli import layer1_pairs, layer2_pairs
from .qstate import (
    SQRT_SWAP,
    SQRT_SWAP_DAG,
    MixedState,
    PureState,
    State,
    StateError,
    TwoQubitGate,
    _apply_local_to_tensor,
    apply_gate,
)

NEEL = "NEEL"
LAYER1_SQSWAPDAG = "LAYER1_SQSWAPDAG"
PHASE = "PHASE"
LAYER2_SQSWAPDAG = "LAYER2_SQSWAPDAG"
REV_LAYER2 = "REV_LAYER2"
REV_PHASE = "REV_PHASE"
REV_LAYER1 = "REV_LAYER1"


class ProtocolError(StateError):
    pass


def _require_even(n: int, minimum: int = 2):
    if n % 2:
        raise ProtocolError(f"even N required (got {n})")
    if n < minimum:
        raise ProtocolError(f"N >= {minimum} required (got {n})")


def phase_gate() -> TwoQubitGate:
    """diag(1, i, 1, 1) in the pair basis: |10> picks up a relative phase pi/2."""
    return TwoQubitGate(np.diag([1, 1j, 1, 1]), "PHASE")


@dataclass(frozen=True)
class ProtocolStep:
    label: str
    gate: str
    placements: tuple

    def __post_init__(self):
        sites = [s for p in self.placements for s in p]
        if len(sites) != len(set(sites)):
            raise ProtocolError(f"step {self.label}: placements overlap")

    def to_dict(self) -> dict:
        return {"label": self.label, "gate": self.gate, "placements": [list(p) for p in self.placements]}


def forward_steps(n: int) -> list:
    _require_even(n)
    return [
        ProtocolStep(NEEL, "PREPARE", ()),
        ProtocolStep(LAYER1_SQSWAPDAG, "SQRT_SWAP_DAG", tuple(layer1_pairs(n))),
        ProtocolStep(PHASE, "PHASE", tuple(layer1_pairs(n))),
        ProtocolStep(LAYER2_SQSWAPDAG, "SQRT_SWAP_DAG", tuple(layer2_pairs(n))),
    ]


def reverse_steps(n: int) -> list:
    _require_even(n)
    return [
        ProtocolStep(REV_LAYER2, "SQRT_SWAP", tuple(layer2_pairs(n))),
        ProtocolStep(REV_PHASE, "PHASE_DAG", tuple(layer1_pairs(n))),
        ProtocolStep(REV_LAYER1, "SQRT_SWAP", tuple(layer1_pairs(n))),
    ]


def describe(n: int) -> str:
    """JSON description of the forward and reverse circuits."""
    doc = {
        "n": n,
        "site_order": "site 1 = most significant bit; 1 = up",
        "forward": [s.to_dict() for s in forward_steps(n)],
        "reverse": [s.to_dict() for s in reverse_steps(n)],
    }
    return json.dumps(doc, indent=2, sort_keys=True)


GATES = {
    "SQRT_SWAP_DAG": SQRT_SWAP_DAG,
    "SQRT_SWAP": SQRT_SWAP,
    "SQRT_SWAP_AS_DAG3": SQRT_SWAP_DAG.power(3),
    "PHASE": phase_gate(),
    "PHASE_DAG": phase_gate().dagger(),
}


def run_step(state: State, step: ProtocolStep, gates=None) -> State:
    gates = GATES if gates is None else gates
    for pair in step.placements:
        state = apply_gate(state, gates[step.gate], pair)
    return state


def neel_state(n: int) -> PureState:
    """|1010...10>."""
    _require_even(n)
    return PureState.from_bits("10" * (n // 2))


@dataclass(frozen=True, eq=False)
class PreparedTarget:
    psi: PureState
    phi1: PureState
    phi2_prime: PureState
    phi2: PureState
    steps: list = field(default_factory=list)


def prepare_target(n: int) -> PreparedTarget:
    """Run the forward circuit from the Neel state, keeping every intermediate."""
    _require_even(n)
    steps = forward_steps(n)
    phi1 = neel_state(n)
    phi2p = run_step(phi1, steps[1])
    phi2 = run_step(phi2p, steps[2])
    psi = run_step(phi2, steps[3])
    return PreparedTarget(psi, phi1, phi2p, phi2, steps)


def target_state(n: int) -> PureState:
    return prepare_target(n).psi


def evolve_forward(initial: State, n: int) -> State:
    """Forward circuit applied to an arbitrary (e.g. noisy) initial state."""
    state = initial
    for step in forward_steps(n)[1:]:
        state = run_step(state, step)
    return state


def circuit_unitary(n: int) -> np.ndarray:
    """Dense 2^n x 2^n matrix of the forward circuit (without the Neel preparation)."""
    _require_even(n)
    dim = 2 ** n
    t = np.eye(dim, dtype=complex).reshape((2,) * n + (dim,))
    for step in forward_steps(n)[1:]:
        for i, j in step.placements:
            t = _apply_local_to_tensor(t, GATES[step.gate].local, (i - 1, j - 1))
    return t.reshape(dim, dim)


@dataclass(frozen=True, eq=False)
class ReverseRun:
    phi4: State
    phi4_prime: State
    phi5: State


def reverse_sequence(state: State, n: int, sqrt_swap_as_dag_cubed: bool = False) -> ReverseRun:
    """States after REV_LAYER2, REV_PHASE and REV_LAYER1."""
    _require_even(n, 4)
    if state.n_qubits != n:
        raise ProtocolError("state size does not match n")
    gates = dict(GATES)
    if sqrt_swap_as_dag_cubed:
        gates["SQRT_SWAP"] = GATES["SQRT_SWAP_AS_DAG3"]
    rl2, rph, rl1 = reverse_steps(n)
    phi4 = run_step(state, rl2, gates)
    phi4p = run_step(phi4, rph, gates)
    phi5 = run_step(phi4p, rl1, gates)
    return ReverseRun(phi4, phi4p, phi5)


def support_check(state: PureState, require_pairs: bool = False, tol: float = 1e-12) -> bool:
    """True iff every nonzero amplitude sits on a basis state with exactly n/2 ones.

    With ``require_pairs`` each supported basis state and its bitwise
    complement must also carry equal modulus.
    """
    n = state.n_qubits
    _require_even(n)
    amps = state.amplitudes
    idx = np.nonzero(np.abs(amps) > tol)[0]
    if idx.size == 0:
        return False
    if np.any(np.bitwise_count(idx) != n // 2):
        return False
    if not require_pairs:
        return True
    comp = (2 ** n - 1) ^ idx
    return bool(np.allclose(np.abs(amps[idx]), np.abs(amps[comp]), atol=1e-10))


def twirl(rho: State, theta: float) -> State:
    """U_theta^{(x)N} rho U_theta^{dag (x)N} with U_theta = exp(-i Z theta / 2)."""
    n = rho.n_qubits
    idx = np.arange(2 ** n)
    # Z eigenvalue +1 for bit 0, -1 for bit 1: phase exp(-i theta (n - 2w) / 2)
    phase = np.exp(-0.5j * theta * (n - 2 * np.bitwise_count(idx).astype(float)))
    if isinstance(rho, PureState):
        return PureState(n, phase * rho.amplitudes)
    return MixedState(n, phase[:, None] * rho.matrix * phase.conj()[None, :])
