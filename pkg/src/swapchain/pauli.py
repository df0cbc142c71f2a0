"""Pauli strings, their conjugation by sqrt(SWAP)^dagger and grouping into
local measurement settings.

Letters are stored site-ordered: ``letters[0]`` acts on site 1.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache, reduce
from typing import Iterable, Mapping, Sequence

import numpy as np

from .qstate import SQRT_SWAP_DAG, TwoQubitGate

WEIGHT_TOL = 1e-12

PAULI_MATRICES = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


class PauliError(ValueError):
    pass


@dataclass(frozen=True)
class PauliString:
    letters: str
    weight: float = 1.0

    def __post_init__(self):
        if not self.letters or set(self.letters) - set("IXYZ"):
            raise PauliError(f"bad Pauli letters {self.letters!r}")
        if self.weight == 0:
            raise PauliError("Pauli string weight must be nonzero")
        object.__setattr__(self, "weight", float(self.weight))

    @classmethod
    def on_sites(cls, n: int, ops: Mapping[int, str], weight: float = 1.0) -> "PauliString":
        """``on_sites(4, {1: 'X', 2: 'X'})`` -> X X I I."""
        letters = ["I"] * n
        for site, ch in ops.items():
            if not 1 <= site <= n:
                raise PauliError(f"site {site} outside 1..{n}")
            letters[site - 1] = ch
        return cls("".join(letters), weight)

    @property
    def n_qubits(self) -> int:
        return len(self.letters)

    @property
    def support(self) -> tuple:
        return tuple(i + 1 for i, ch in enumerate(self.letters) if ch != "I")

    def matrix(self) -> np.ndarray:
        return self.weight * reduce(np.kron, (PAULI_MATRICES[c] for c in self.letters))

    def __neg__(self) -> "PauliString":
        return PauliString(self.letters, -self.weight)

    def __str__(self) -> str:
        return f"{self.weight!r} {self.letters}"


@dataclass(frozen=True)
class PauliSum:
    """Real-weighted sum of Pauli strings, canonical (sorted, merged) order."""

    terms: tuple

    def __init__(self, terms: Iterable[PauliString]):
        acc: dict[str, float] = {}
        n = None
        for t in terms:
            if n is None:
                n = t.n_qubits
            elif t.n_qubits != n:
                raise PauliError("all terms must act on the same number of qubits")
            acc[t.letters] = acc.get(t.letters, 0.0) + t.weight
        merged = tuple(
            PauliString(k, w) for k, w in sorted(acc.items()) if abs(w) > WEIGHT_TOL
        )
        if not merged:
            raise PauliError("empty Pauli sum")
        object.__setattr__(self, "terms", merged)

    @property
    def n_qubits(self) -> int:
        return self.terms[0].n_qubits

    def __len__(self) -> int:
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms)

    def matrix(self) -> np.ndarray:
        return sum(t.matrix() for t in self.terms)

    def weights(self) -> dict:
        return {t.letters: t.weight for t in self.terms}

    def to_text(self) -> str:
        return "".join(f"{t}\n" for t in self.terms)

    @classmethod
    def from_text(cls, text: str) -> "PauliSum":
        terms = []
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            w, letters = line.split()
            terms.append(PauliString(letters, float(w)))
        return cls(terms)


@dataclass(frozen=True)
class MeasurementSetting:
    """One single-qubit basis (X, Y or Z) per site."""

    bases: str
    terms: tuple = ()

    def __post_init__(self):
        if not self.bases or set(self.bases) - set("XYZ"):
            raise PauliError(f"bad measurement setting {self.bases!r}")

    @property
    def n_qubits(self) -> int:
        return len(self.bases)

    def resolves(self, string) -> bool:
        letters = getattr(string, "letters", string)
        if len(letters) != len(self.bases):
            return False
        return all(c == "I" or c == b for c, b in zip(letters, self.bases))


# ----------------------------------------------------------------------------
# Conjugation by sqrt(SWAP)^dagger
# ----------------------------------------------------------------------------

@lru_cache(maxsize=None)
def conjugation_table(gate: TwoQubitGate = SQRT_SWAP_DAG) -> dict:
    """Map ``'ab' -> ((('cd', coeff), ...)`` with G (a x b) G^dag = sum coeff c x d.

    Built once from the dense gate; coefficients are real because the map
    sends Hermitian operators to Hermitian operators.
    """
    g = gate.local
    labels = ["".join(p) for p in itertools.product("IXYZ", repeat=2)]
    mats = {lab: np.kron(PAULI_MATRICES[lab[0]], PAULI_MATRICES[lab[1]]) for lab in labels}
    table = {}
    for a in labels:
        rotated = g @ mats[a] @ g.conj().T
        row = []
        for c in labels:
            coeff = np.trace(mats[c] @ rotated) / 4
            if abs(coeff) > WEIGHT_TOL:
                if abs(coeff.imag) > WEIGHT_TOL:
                    raise PauliError("non-real Pauli coefficient")
                row.append((c, float(round(coeff.real, 15))))
        table[a] = tuple(row)
    return table


def _check_disjoint(pairs):
    seen = set()
    for i, j in pairs:
        if i == j or i in seen or j in seen:
            raise PauliError(f"gate pairs overlap or repeat sites: {pairs}")
        seen.update((i, j))


def conjugate_by_sqrtswapdag(s: PauliString, gate_pairs: Sequence, gate: TwoQubitGate = SQRT_SWAP_DAG) -> PauliSum:
    """U s U^dag for U = product of ``gate`` on the given disjoint site pairs."""
    gate_pairs = [tuple(p) for p in gate_pairs]
    _check_disjoint(gate_pairs)
    table = conjugation_table(gate)
    current = {s.letters: s.weight}
    for i, j in gate_pairs:
        if not (1 <= i <= s.n_qubits and 1 <= j <= s.n_qubits):
            raise PauliError(f"gate pair {(i, j)} outside register")
        nxt: dict[str, float] = {}
        for letters, w in current.items():
            key = letters[i - 1] + letters[j - 1]
            if key == "II":
                nxt[letters] = nxt.get(letters, 0.0) + w
                continue
            for cd, coeff in table[key]:
                new = list(letters)
                new[i - 1], new[j - 1] = cd
                new = "".join(new)
                nxt[new] = nxt.get(new, 0.0) + w * coeff
        current = nxt
    return PauliSum(PauliString(k, w) for k, w in current.items() if abs(w) > WEIGHT_TOL)


def layer1_pairs(n: int) -> list:
    return [(2 * k - 1, 2 * k) for k in range(1, n // 2 + 1)]


def layer2_pairs(n: int) -> list:
    return [(2 * k, 2 * k + 1) for k in range(1, n // 2)]


def bell_stabilizers(n: int) -> list:
    """X_{2k-1} X_{2k} and -Z_{2k-1} Z_{2k} for every Bell pair, in that order."""
    if n < 2 or n % 2:
        raise PauliError("need an even number of qubits >= 2")
    out = []
    for a, b in layer1_pairs(n):
        out.append(PauliString.on_sites(n, {a: "X", b: "X"}))
        out.append(PauliString.on_sites(n, {a: "Z", b: "Z"}, -1.0))
    return out


def conjugated_stabilizers(n: int) -> list:
    """Stabilizers of the target: the Bell stabilizers pushed through the second layer."""
    if n < 4 or n % 2:
        raise PauliError("need an even number of qubits >= 4")
    pairs = layer2_pairs(n)
    return [conjugate_by_sqrtswapdag(s, pairs) for s in bell_stabilizers(n)]


def term_census(sums: Sequence[PauliSum]) -> dict:
    """Raw (with multiplicity) and deduplicated counts of Pauli tensors."""
    raw = sum(len(s) for s in sums)
    distinct = {t.letters for s in sums for t in s}
    return {"raw": raw, "distinct": len(distinct), "per_sum": [len(s) for s in sums]}


# ----------------------------------------------------------------------------
# Grouping into local measurement settings
# ----------------------------------------------------------------------------

# braces resolving the images of X (resp. Z) on either site of a second-layer pair
_X_BRACES = ("XX", "YZ", "ZY")
_Z_BRACES = ("ZZ", "YX", "XY")


def periodic_settings(n: int) -> list:
    """The alternating-brace settings covering the conjugated Bell stabilizers.

    Pairs (2,3), (6,7), ... share one brace choice and (4,5), (8,9), ... the
    other, so each family (X-type, Z-type) needs at most 3 x 3 settings.
    """
    pairs = layer2_pairs(n)
    out = []
    for end, braces in (("X", _X_BRACES), ("Z", _Z_BRACES)):
        n_choices = 1 if len(pairs) == 1 else 2
        for choice in itertools.product(braces, repeat=n_choices):
            bases = [end] * n
            for k, (i, j) in enumerate(pairs):
                bases[i - 1], bases[j - 1] = choice[k % n_choices]
            out.append("".join(bases))
    return out


def _greedy_merge(letters_list: list, n: int) -> list:
    """Qubit-wise compatible cover of ``letters_list`` (fallback for arbitrary sums).

    Each round seeds a setting from every uncovered term, absorbs compatible
    uncovered terms in lexicographic order, and keeps the setting covering the
    most; ties go to the lexicographically smallest completed setting.
    """
    uncovered = sorted(set(letters_list))
    settings = []
    while uncovered:
        best = None
        for seed in uncovered:
            partial = list(seed)
            count = 0
            for t in uncovered:
                if all(a == "I" or b == "I" or a == b for a, b in zip(t, partial)):
                    partial = [b if b != "I" else a for a, b in zip(t, partial)]
                    count += 1
            bases = "".join(c if c != "I" else "Z" for c in partial)
            key = (-count, bases)
            if best is None or key < best[0]:
                best = (key, bases)
        bases = best[1]
        settings.append(bases)
        uncovered = [t for t in uncovered if not MeasurementSetting(bases).resolves(t)]
    return settings


def group_into_lms(sums: Sequence[PauliSum], n: int) -> list:
    """Local measurement settings resolving every non-identity term of ``sums``."""
    letters = []
    for s in sums:
        for t in s:
            if t.n_qubits != n:
                raise PauliError("term size does not match n")
            if set(t.letters) != {"I"}:
                letters.append(t.letters)
    letters = sorted(set(letters))
    candidates = periodic_settings(n) if n >= 4 and n % 2 == 0 else []
    chosen = []
    uncovered = set(letters)
    # greedy set cover over the periodic candidates
    while uncovered and candidates:
        scored = [
            (-sum(MeasurementSetting(c).resolves(t) for t in uncovered), c) for c in candidates
        ]
        score, best = min(scored)
        if score == 0:
            break
        chosen.append(best)
        candidates.remove(best)
        uncovered = {t for t in uncovered if not MeasurementSetting(best).resolves(t)}
    chosen.extend(_greedy_merge(sorted(uncovered), n))
    out = []
    for bases in chosen:
        m = MeasurementSetting(bases)
        out.append(MeasurementSetting(bases, tuple(t for t in letters if m.resolves(t))))
    return out


def assign_terms(settings: Sequence[MeasurementSetting], psum: PauliSum) -> dict:
    """First setting (in order) resolving each term; raises if some term is not resolvable."""
    assignment: dict = {}
    for t in psum:
        if set(t.letters) == {"I"}:
            continue
        for s in settings:
            if s.resolves(t):
                assignment.setdefault(s.bases, []).append(t)
                break
        else:
            raise PauliError(f"term {t.letters} not resolvable by any setting")
    return assignment


def estimate_sum(setting_data: Mapping, psum: PauliSum) -> tuple:
    """Estimate <psum> from per-setting outcome records.

    ``setting_data`` maps a MeasurementSetting (or its bases string) to a record
    exposing ``parities(letters) -> (values, weights)``, e.g.
    :class:`swapchain.estimator.ShotRecord`.  Terms sharing a setting are
    combined shot by shot, so their covariance enters the standard error.
    """
    records = {getattr(k, "bases", k): v for k, v in setting_data.items()}
    settings = [MeasurementSetting(b) for b in records]
    value = 0.0
    var = 0.0
    for t in psum:
        if set(t.letters) == {"I"}:
            value += t.weight
    for bases, terms in assign_terms(settings, psum).items():
        rec = records[bases]
        per_shot = None
        for t in terms:
            vals, weights = rec.parities(t.letters)
            per_shot = t.weight * vals if per_shot is None else per_shot + t.weight * vals
        mean = float(np.sum(weights * per_shot))
        value += mean
        if rec.is_exact:
            continue
        n_shots = len(per_shot)
        if n_shots > 1:
            var += float(np.var(per_shot, ddof=1)) / n_shots
    return value, float(np.sqrt(var))
