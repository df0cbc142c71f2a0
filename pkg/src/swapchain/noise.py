"""Error models for preparation, entangling step and readout, and threshold sweeps."""
from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, replace
from functools import lru_cache

import numpy as np

from . import detect
from .estimator import ShotRecord, flip_outcomes, sample_distribution
from .pauli import MeasurementSetting
from .protocol import circuit_unitary, evolve_forward, neel_state, _require_even
from .qstate import MAX_MIXED_QUBITS, MixedState, PureState, State, StateError, pauli_action

CSV_HEADER = ("param", "value", "subset", "witness_value", "stderr")
SWEEP_SCHEMA_VERSION = 1
PARAM_NAMES = ("p_white", "p_sf", "p_ms", "p_es")
THRESHOLD_STEP = 0.001


class NoiseError(ValueError):
    pass


def _check_prob(name, p):
    if not (np.isfinite(p) and 0.0 <= p <= 1.0):
        raise NoiseError(f"{name} must lie in [0, 1] (got {p})")


@dataclass(frozen=True)
class NoiseParams:
    """p_sf, p_ms and p_es are probabilities of the *correct* behaviour."""

    p_white: float = 0.0
    p_sf: float = 1.0
    p_ms: float = 1.0
    p_es: float = 1.0

    def __post_init__(self):
        for name in PARAM_NAMES:
            _check_prob(name, getattr(self, name))

    def to_dict(self) -> dict:
        return asdict(self)


def white_noise(psi: PureState, p: float) -> MixedState:
    _check_prob("p", p)
    n = psi.n_qubits
    rho = (1 - p) * np.outer(psi.amplitudes, psi.amplitudes.conj())
    rho += p * np.eye(2 ** n) / 2 ** n
    return MixedState(n, rho)


def spin_flip_weights(n: int, p_sf: float) -> np.ndarray:
    """Probability of every computational basis state after noisy Neel preparation."""
    _require_even(n)
    _check_prob("p_sf", p_sf)
    neel = int("10" * (n // 2), 2)
    wrong = np.bitwise_count(np.arange(2 ** n, dtype=np.int64) ^ neel).astype(int)
    return p_sf ** (n - wrong) * (1 - p_sf) ** wrong


def spin_flip_preparation(n: int, p_sf: float) -> MixedState:
    if n > MAX_MIXED_QUBITS:
        raise StateError(f"density matrices limited to {MAX_MIXED_QUBITS} qubits")
    return MixedState(n, np.diag(spin_flip_weights(n, p_sf)).astype(complex))


def readout_factor(weight: int, p_ms: float) -> float:
    """Scaling of a weight-k Pauli expectation under independent readout flips."""
    _check_prob("p_ms", p_ms)
    return (2 * p_ms - 1) ** weight


def measurement_flip(data, p_ms: float, seed=None, weight: int | None = None):
    """Apply readout noise to a ShotRecord (bit flips, needs ``seed``) or to an
    expectation value of a weight-``weight`` string (deterministic scaling)."""
    _check_prob("p_ms", p_ms)
    if isinstance(data, ShotRecord):
        return flip_outcomes(data, p_ms, seed)
    if weight is None:
        raise NoiseError("weight is required when scaling expectation values")
    return np.asarray(data) * readout_factor(weight, p_ms)


def entangling_depolarize(state: State, p_es: float) -> MixedState:
    """Keep ``state`` with probability p_es, otherwise replace it by I / 2^n."""
    _check_prob("p_es", p_es)
    rho = state.density()
    n = rho.n_qubits
    return MixedState(n, p_es * rho.matrix + (1 - p_es) * np.eye(2 ** n) / 2 ** n)


def depolarize_pair(state: State, pair, p: float) -> MixedState:
    """Two-qubit depolarizing channel: with probability p the pair is reset to I/4."""
    _check_prob("p", p)
    rho = state.density()
    if p == 0:
        return rho
    n = rho.n_qubits
    i, j = (int(s) - 1 for s in pair)
    t = rho.matrix.reshape((2,) * (2 * n))
    # partial trace over the pair, then re-insert the identity on it
    letters = list(range(2 * n))
    letters[n + i], letters[n + j] = i, j
    out_axes = [k for k in range(2 * n) if k not in (i, j, n + i, n + j)]
    reduced = np.einsum(t, letters, out_axes)
    eye = np.eye(2)
    mixed = np.multiply.outer(np.multiply.outer(reduced, eye), eye) / 4
    # mixed axes: out_axes..., (i, n+i), (j, n+j)
    src = out_axes + [i, n + i, j, n + j]
    mixed = np.moveaxis(mixed, list(range(2 * n)), src)
    dim = 2 ** n
    return MixedState(n, (1 - p) * rho.matrix + p * mixed.reshape(dim, dim))


def noisy_state(n: int, params: NoiseParams) -> MixedState:
    """Noisy preparation, forward circuit, then entangling-step and white-noise mixing."""
    initial = spin_flip_preparation(n, params.p_sf) if params.p_sf < 1 else neel_state(n).density()
    rho = evolve_forward(initial, n)
    rho = entangling_depolarize(rho, params.p_es)
    if params.p_white > 0:
        rho = entangling_depolarize(rho, 1 - params.p_white)
    return rho


# ----------------------------------------------------------------------------
# Fast evaluation: Heisenberg-evolved diagonals
# ----------------------------------------------------------------------------

@lru_cache(maxsize=8)
def _unitary(n: int) -> np.ndarray:
    return circuit_unitary(n)


def _letters(n: int, subset, letter: str) -> str:
    s = set(subset)
    return "".join(letter if k in s else "I" for k in range(1, n + 1))


class HomogeneousResponse:
    """<L^{(x)k}> on the noisy output as a dot product with preparation weights.

    The spin-flip mixture is diagonal in the computational basis, so only the
    diagonal of U^dag O U is needed; it is computed once per (subset, letter).
    """

    def __init__(self, n: int, subsets):
        _require_even(n)
        self.n = n
        self.subsets = [tuple(sorted(s)) for s in subsets]
        u = _unitary(n)
        idx = np.arange(2 ** n)
        self._diag = {}
        for sub in self.subsets:
            for letter in "XYZ":
                xmask, phase = pauli_action(_letters(n, sub, letter))
                d = np.sum(u[idx ^ xmask, :].conj() * phase[:, None] * u, axis=0).real
                self._diag[sub, letter] = d

    def correlators(self, params: NoiseParams) -> dict:
        w = spin_flip_weights(self.n, params.p_sf)
        keep = params.p_es * (1 - params.p_white)
        out = {}
        for sub in self.subsets:
            scale = keep * readout_factor(len(sub), params.p_ms)
            out[sub] = tuple(float(scale * w @ self._diag[sub, L]) for L in "XYZ")
        return out

    def values(self, params: NoiseParams) -> dict:
        return {s: sum(abs(c) for c in v) for s, v in self.correlators(params).items()}


# ----------------------------------------------------------------------------
# Shot-based trajectories
# ----------------------------------------------------------------------------

def trajectory_record(n: int, params: NoiseParams, setting, shots: int, seed) -> ShotRecord:
    """Sample shots by simulating pure trajectories of the noise models.

    Each shot draws its preparation errors, then with probability
    p_es * (1 - p_white) measures the evolved pure state, otherwise a uniformly
    random bitstring; readout flips are drawn last.  Shots sharing a
    preparation configuration are evolved once.
    """
    from .estimator import outcome_distribution

    setting = setting if isinstance(setting, MeasurementSetting) else MeasurementSetting(setting)
    rng = np.random.default_rng(seed)
    neel = np.array([1, 0] * (n // 2), dtype=np.uint8)
    flips = (rng.random((shots, n)) >= params.p_sf).astype(np.uint8)
    keep = rng.random(shots) < params.p_es * (1 - params.p_white)
    readout = (rng.random((shots, n)) >= params.p_ms).astype(np.uint8)
    outcomes = rng.integers(0, 2, size=(shots, n), dtype=np.uint8)
    configs = neel[None, :] ^ flips
    kept = np.nonzero(keep)[0]
    if kept.size:
        uniq, inverse = np.unique(configs[kept], axis=0, return_inverse=True)
        inverse = inverse.reshape(-1)
        for c, cfg in enumerate(uniq):
            rows = kept[inverse == c]
            psi = evolve_forward(PureState.from_bits("".join(map(str, cfg))), n)
            sub = sample_distribution(
                outcome_distribution(psi, setting), setting, rows.size, rng.integers(2 ** 63)
            )
            outcomes[rows] = sub.outcomes
    return ShotRecord(setting, outcomes ^ readout, seed)


# ----------------------------------------------------------------------------
# Sweeps and thresholds
# ----------------------------------------------------------------------------

def subset_label(subset) -> str:
    return "-".join(str(s) for s in sorted(subset))


def figure_subsets(n: int) -> list:
    """Subsystems of the certification schedule plus every even prefix 1..k."""
    subs = [tuple(s) for s in detect.certification_plan(n).subsets]
    for k in range(2, n + 1, 2):
        prefix = tuple(range(1, k + 1))
        if prefix not in subs:
            subs.append(prefix)
    return subs


@dataclass
class SweepResult:
    param: str
    grid: np.ndarray
    fixed: NoiseParams
    subsets: list
    values: dict  # subset -> array over grid
    stderr: dict
    seed: object = None
    shots: int | None = None

    def rows(self):
        for k, v in enumerate(self.grid):
            for s in self.subsets:
                yield (self.param, float(v), subset_label(s), float(self.values[s][k]),
                       float(self.stderr[s][k]))

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_HEADER)
            for r in self.rows():
                w.writerow([r[0], f"{r[1]:.6f}", r[2], f"{r[3]:.12g}", f"{r[4]:.6g}"])

    def sidecar(self) -> dict:
        return {
            "schema_version": SWEEP_SCHEMA_VERSION,
            "param": self.param,
            "grid": [float(g) for g in self.grid],
            "fixed": self.fixed.to_dict(),
            "subsets": [list(s) for s in self.subsets],
            "seed": self.seed,
            "shots": self.shots,
        }

    def write_sidecar(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.sidecar(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    def min_over(self, subsets=None) -> np.ndarray:
        subsets = self.subsets if subsets is None else [tuple(sorted(s)) for s in subsets]
        return np.min([self.values[s] for s in subsets], axis=0)


def sweep(param: str, grid, fixed: NoiseParams = NoiseParams(), n: int = 10, subsets=None,
          shots: int | None = None, seed=None) -> SweepResult:
    """Homogeneous witness values of ``subsets`` along one noise parameter.

    Exact (density-matrix equivalent) unless ``shots`` is given, in which case
    every grid point is sampled from stream (seed, grid index, setting index).
    """
    if param not in PARAM_NAMES:
        raise NoiseError(f"unknown noise parameter {param!r}")
    grid = np.atleast_1d(np.asarray(grid, dtype=float))
    if grid.size == 0:
        raise NoiseError("empty grid")
    subsets = figure_subsets(n) if subsets is None else [tuple(sorted(s)) for s in subsets]
    values = {s: np.zeros(grid.size) for s in subsets}
    errs = {s: np.zeros(grid.size) for s in subsets}
    if shots is None:
        resp = HomogeneousResponse(n, subsets)
        for k, g in enumerate(grid):
            for s, v in resp.values(replace(fixed, **{param: float(g)})).items():
                values[s][k] = v
    else:
        if seed is None:
            raise NoiseError("a seed is required for shot-based sweeps")
        for k, g in enumerate(grid):
            params = replace(fixed, **{param: float(g)})
            recs = {
                L: trajectory_record(n, params, L * n, shots, (seed, k, j))
                for j, L in enumerate("XYZ")
            }
            for s in subsets:
                v, e = detect.homogeneous_from_records(recs, s, n)
                values[s][k], errs[s][k] = v, e
    return SweepResult(param, grid, fixed, subsets, values, errs, seed, shots)


def crossing(grid, values, level: float = 1.0):
    """Smallest grid-interpolated point where ``values`` rises through ``level``.

    Returns None when the curve never crosses from below.
    """
    grid = np.asarray(grid, dtype=float)
    v = np.asarray(values, dtype=float) - level
    for k in range(len(grid) - 1):
        if v[k] <= 0 < v[k + 1]:
            return float(grid[k] - v[k] * (grid[k + 1] - grid[k]) / (v[k + 1] - v[k]))
    return None


def threshold_grid(lo: float, hi: float, step: float = THRESHOLD_STEP) -> np.ndarray:
    m = int(round((hi - lo) / step))
    return np.round(lo + step * np.arange(m + 1), 10)


FIGURES = {
    "fig5a": ("p_sf", NoiseParams()),
    "fig5b": ("p_ms", NoiseParams()),
    "fig5c": ("p_es", NoiseParams(p_sf=0.98, p_ms=0.985)),
}
FIGURE_RANGES = {"fig5a": (0.9, 1.0), "fig5b": (0.9, 1.0), "fig5c": (0.5, 1.0)}


def figure_sweep(figure: str, n: int = 10, shots=None, seed=None) -> SweepResult:
    if figure not in FIGURES:
        raise NoiseError(f"unknown figure {figure!r}")
    param, fixed = FIGURES[figure]
    lo, hi = FIGURE_RANGES[figure]
    return sweep(param, threshold_grid(lo, hi), fixed, n, shots=shots, seed=seed)


def certification_threshold(result: SweepResult):
    """Grid-interpolated parameter value above which every check of the
    certification schedule exceeds 1 (None if never)."""
    plan = [tuple(s) for s in detect.certification_plan(_n_of(result)).subsets]
    return crossing(result.grid, result.min_over(plan))


def _n_of(result: SweepResult) -> int:
    return max(max(s) for s in result.subsets)
