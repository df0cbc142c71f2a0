"""Finite-shot sampling in local measurement settings.

Outcome bit 0 means eigenvalue +1 of the measured Pauli, bit 1 means -1.
"""
from __future__ import annotations

import base64
import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .pauli import MeasurementSetting, PauliError
from .qstate import PureState, State, apply_single

_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_SDG = np.diag([1, -1j])
# rotate the +1 eigenvector of each Pauli onto |0>
BASIS_ROTATIONS = {"X": _H, "Y": _H @ _SDG, "Z": np.eye(2, dtype=complex)}


def _as_setting(setting) -> MeasurementSetting:
    return setting if isinstance(setting, MeasurementSetting) else MeasurementSetting(setting)


def _bits(indices: np.ndarray, n: int) -> np.ndarray:
    shifts = np.arange(n - 1, -1, -1)
    return ((indices[:, None] >> shifts) & 1).astype(np.uint8)


def _check_resolvable(setting: MeasurementSetting, letters: str):
    if not setting.resolves(letters):
        raise PauliError(f"{letters} is not resolvable in setting {setting.bases}")


@dataclass(frozen=True, eq=False)
class ShotRecord:
    setting: MeasurementSetting
    outcomes: np.ndarray
    seed: object = None
    is_exact = False

    def __post_init__(self):
        out = np.asarray(self.outcomes, dtype=np.uint8)
        if out.ndim != 2 or out.shape[1] != self.setting.n_qubits:
            raise ValueError("outcomes must be a shots x n array of bits")
        object.__setattr__(self, "outcomes", out)

    @property
    def shots(self) -> int:
        return self.outcomes.shape[0]

    @property
    def n_qubits(self) -> int:
        return self.setting.n_qubits

    def parities(self, letters: str):
        _check_resolvable(self.setting, letters)
        cols = [i for i, c in enumerate(letters) if c != "I"]
        par = self.outcomes[:, cols].sum(axis=1) & 1 if cols else np.zeros(self.shots, dtype=int)
        return 1.0 - 2.0 * par, np.full(self.shots, 1.0 / self.shots)

    def counts(self) -> dict:
        keys, cnt = np.unique(self.outcomes, axis=0, return_counts=True)
        return {"".join(map(str, k)): int(c) for k, c in zip(keys, cnt)}

    def to_json(self) -> str:
        packed = np.packbits(self.outcomes.reshape(-1))
        return json.dumps(
            {
                "setting": self.setting.bases,
                "n": self.n_qubits,
                "shots": self.shots,
                "seed": self.seed,
                "outcomes": base64.b64encode(packed.tobytes()).decode("ascii"),
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, line: str) -> "ShotRecord":
        d = json.loads(line)
        n, shots = d["n"], d["shots"]
        packed = np.frombuffer(base64.b64decode(d["outcomes"]), dtype=np.uint8)
        bits = np.unpackbits(packed)[: n * shots].reshape(shots, n)
        seed = d["seed"]
        if isinstance(seed, list):
            seed = tuple(seed)
        return cls(MeasurementSetting(d["setting"]), bits, seed)


@dataclass(frozen=True, eq=False)
class ExactRecord:
    """Infinite-shot limit: the full outcome distribution of a setting."""

    setting: MeasurementSetting
    probabilities: np.ndarray
    is_exact = True

    @property
    def n_qubits(self) -> int:
        return self.setting.n_qubits

    def parities(self, letters: str):
        _check_resolvable(self.setting, letters)
        n = self.n_qubits
        mask = 0
        for i, c in enumerate(letters):
            if c != "I":
                mask |= 1 << (n - 1 - i)
        idx = np.arange(2 ** n, dtype=np.int64)
        par = np.bitwise_count(idx & mask) & 1
        return 1.0 - 2.0 * par, self.probabilities


def write_jsonl(records: Iterable[ShotRecord], path) -> None:
    with open(path, "w") as fh:
        for r in records:
            fh.write(r.to_json() + "\n")


def read_jsonl(path) -> list:
    with open(path) as fh:
        return [ShotRecord.from_json(line) for line in fh if line.strip()]


def outcome_distribution(state: State, setting) -> np.ndarray:
    """Born probabilities of every bitstring after the per-site basis rotation."""
    setting = _as_setting(setting)
    if setting.n_qubits != state.n_qubits:
        raise ValueError("setting size does not match the register")
    rotated = state
    for site, basis in enumerate(setting.bases, start=1):
        if basis != "Z":
            rotated = apply_single(rotated, BASIS_ROTATIONS[basis], site)
    if isinstance(rotated, PureState):
        p = np.abs(rotated.amplitudes) ** 2
    else:
        p = np.clip(np.diag(rotated.matrix).real, 0.0, None)
    return p / p.sum()


def sample_distribution(probabilities: np.ndarray, setting, shots: int, seed) -> ShotRecord:
    setting = _as_setting(setting)
    if shots < 1:
        raise ValueError("shots must be >= 1")
    rng = np.random.default_rng(seed)
    cdf = np.cumsum(probabilities)
    u = rng.random(shots) * cdf[-1]
    idx = np.minimum(np.searchsorted(cdf, u, side="right"), cdf.size - 1)
    return ShotRecord(setting, _bits(idx.astype(np.int64), setting.n_qubits), seed)


def sample(state: State, setting, shots: int, seed) -> ShotRecord:
    """Draw ``shots`` outcomes of ``setting`` on ``state``; reproducible per seed."""
    return sample_distribution(outcome_distribution(state, setting), setting, shots, seed)


def exact_record(state: State, setting) -> ExactRecord:
    setting = _as_setting(setting)
    return ExactRecord(setting, outcome_distribution(state, setting))


def sample_settings(state: State, settings: Sequence, shots: int, master_seed: int) -> dict:
    """One record per setting; record k uses the stream (master_seed, k)."""
    out = {}
    for k, s in enumerate(settings):
        s = _as_setting(s)
        out[s.bases] = sample(state, s, shots, (master_seed, k))
    return out


def estimate_pauli(record, string) -> tuple:
    """(mean, standard error) of a Pauli string resolvable by the record's setting."""
    letters = getattr(string, "letters", string)
    vals, weights = record.parities(letters)
    if record.is_exact:
        return float(np.sum(vals * weights)), 0.0
    mean = float(np.mean(vals))
    if len(vals) < 2:
        return mean, 0.0
    return mean, float(np.std(vals, ddof=1) / np.sqrt(len(vals)))


def flip_outcomes(record: ShotRecord, p_correct: float, seed) -> ShotRecord:
    """Flip every recorded bit independently with probability 1 - p_correct."""
    if not 0.0 <= p_correct <= 1.0:
        raise ValueError("readout probability must lie in [0, 1]")
    if p_correct == 1.0:
        return record
    rng = np.random.default_rng(seed)
    flips = (rng.random(record.outcomes.shape) >= p_correct).astype(np.uint8)
    return ShotRecord(record.setting, record.outcomes ^ flips, record.seed)


def sample_settings_noisy(state: State, settings: Sequence, shots: int, master_seed: int,
                          p_correct: float = 1.0) -> dict:
    """Like :func:`sample_settings` with readout flips drawn from stream (master_seed, k, 1)."""
    out = sample_settings(state, settings, shots, master_seed)
    if p_correct == 1.0:
        return out
    return {
        b: flip_outcomes(r, p_correct, (master_seed, k, 1)) for k, (b, r) in enumerate(out.items())
    }
