"""
Exchange gates in a double well
===============================

Exact diagonalization of two bosons in a double well, the gates it
realises, and how tunneling between neighbouring wells spoils them.
"""

import numpy as np

from swapchain.hubbard import (
    FAST_V_OVER_J,
    HubbardParams,
    chain_leakage,
    exchange_coupling,
    extract_gate,
    fast_gate_time,
    phase_step_time,
    slow_gate_time,
    subspace_fidelity,
    tilt_phase_gate,
)
from swapchain.protocol import phase_gate
from swapchain.qstate import SQRT_SWAP, SQRT_SWAP_DAG

# %% Superexchange: the exact gap against 2 J^2 / V
for v in (10.0, 30.0, 100.0):
    p = HubbardParams(v=v)
    print(f"V/J = {v:>5}: exact {exchange_coupling(p):.6f}  estimate {p.j_ex:.6f}")

# %% Slow gates at T/8 and 3T/8, fast gate at t = pi/V
p = HubbardParams(v=100.0)
t8 = slow_gate_time(p)
print("T/8  vs sqrt(SWAP)^dag:", extract_gate(p, t8).fidelity(SQRT_SWAP_DAG))
print("3T/8 vs sqrt(SWAP):    ", extract_gate(p, 3 * t8).fidelity(SQRT_SWAP))
fast = HubbardParams(v=FAST_V_OVER_J)
print("fast gate:             ", extract_gate(fast, fast_gate_time(fast)).fidelity(SQRT_SWAP_DAG))

# %% Fidelity along time around the slow gate
for f in np.linspace(0.8, 1.2, 5):
    g = extract_gate(p, f * t8)
    print(f"t = {f:.1f} T/8: fidelity {g.fidelity(SQRT_SWAP_DAG):.5f}, leakage {g.leakage:.2e}")

# %% Phase step from a spin-dependent tilt
delta = 0.5
g = tilt_phase_gate(HubbardParams(delta=delta), phase_step_time(delta))
print("tilt gate on {|10>, |01>}:", subspace_fidelity(g, phase_gate()))

# %% Tunneling between neighbouring wells, in units of the exchange coupling
for ratio in (1 / 25, 1, 5, 10, 25):
    res = chain_leakage(HubbardParams(v=100.0, j_inter=ratio * p.j_ex))
    print(f"J_inter/J_ex = {ratio:>6.3f}: attributable infidelity {res.excess:.2e}")
