"""Command-line entry point: ``swapchain {prepare,witness,sweep,hubbard}``.

Exit codes: 0 success, 2 bad configuration, 3 a numerical invariant failed.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import asdict, dataclass

import numpy as np

from . import __version__, detect, hubbard, noise
from .protocol import ProtocolError, describe, prepare_target, support_check
from .qstate import Bipartition, StateError, purity, reduced_density_matrix, schmidt_spectrum

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
METHODS = ("fidelity", "homogeneous", "reverse")
FIGURES = ("fig5a", "fig5b", "fig5c", "hubbard")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    n_qubits: int = 10
    p_white: float = 0.0
    p_sf: float = 1.0
    p_ms: float = 1.0
    p_es: float = 1.0
    shots: int | None = None
    seed: int | None = None
    method: str | None = None
    figure: str | None = None
    out: str | None = None
    format: str = "json"
    v_over_j: tuple = ()

    def noise(self) -> noise.NoiseParams:
        return noise.NoiseParams(self.p_white, self.p_sf, self.p_ms, self.p_es)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["v_over_j"] = list(self.v_over_j)
        return d


def validate(cfg: RunConfig) -> None:
    if cfg.n_qubits % 2:
        raise ConfigError(f"even N required (got {cfg.n_qubits})")
    if cfg.n_qubits < 2:
        raise ConfigError("N >= 2 required")
    try:
        cfg.noise()
    except noise.NoiseError as exc:
        raise ConfigError(str(exc)) from exc
    if cfg.shots is not None:
        if cfg.shots < 1:
            raise ConfigError("--shots must be positive")
        if cfg.seed is None:
            raise ConfigError("--seed is required with --shots")
    if cfg.subcommand == "witness":
        if cfg.method not in METHODS:
            raise ConfigError(f"unknown method {cfg.method!r}; choose from {', '.join(METHODS)}")
        minimum = 6 if cfg.method == "homogeneous" else 4
        if cfg.n_qubits < minimum:
            raise ConfigError(f"method {cfg.method} needs N >= {minimum}")
        if cfg.n_qubits > 12:
            raise ConfigError("witness pipelines are limited to N <= 12")
    if cfg.subcommand == "sweep":
        if cfg.figure not in FIGURES:
            raise ConfigError(f"unknown figure {cfg.figure!r}; choose from {', '.join(FIGURES)}")
        if cfg.figure != "hubbard" and not 6 <= cfg.n_qubits <= 12:
            raise ConfigError("noise sweeps need 6 <= N <= 12")
    if cfg.subcommand == "prepare" and cfg.n_qubits > 16:
        raise ConfigError("prepare is limited to N <= 16")
    if cfg.format not in ("csv", "json"):
        raise ConfigError("--format must be csv or json")


def _envelope(cfg: RunConfig, body: dict) -> dict:
    return {"version": __version__, "config": cfg.to_dict(), **body}


def _dumps(obj) -> str:
    return json.dumps(detect._jsonable(obj), indent=2, sort_keys=True) + "\n"


def cmd_prepare(cfg: RunConfig) -> str:
    n = cfg.n_qubits
    target = prepare_target(n)
    psi = target.psi
    cuts = []
    for cut in Bipartition.all_cuts(n):
        lam = schmidt_spectrum(psi, cut)
        cuts.append({"A": sorted(cut.subset), "lambda1": float(lam[0]), "purity": float(np.sum(lam ** 2))})
    lam1 = max(c["lambda1"] for c in cuts)
    body = {
        "n": n,
        "support_check": support_check(psi),
        "paired_moduli": support_check(psi, require_pairs=True),
        "max_lambda1": lam1,
        "gme_structural": lam1 < 1 - 1e-12,
        "site_purities": [purity(reduced_density_matrix(psi, [s])) for s in range(1, n + 1)],
        "cuts": cuts,
        "amplitudes": {
            format(i, f"0{n}b"): [float(a.real), float(a.imag)]
            for i, a in enumerate(psi.amplitudes)
            if abs(a) > 1e-12
        },
        "protocol": json.loads(describe(n)),
    }
    return _dumps(_envelope(cfg, body))


def cmd_witness(cfg: RunConfig) -> str:
    n = cfg.n_qubits
    params = cfg.noise()
    if cfg.method == "reverse":
        gate_noise = detect.GateNoise(p_depol=1 - cfg.p_es, p_sf=cfg.p_sf, p_ms=cfg.p_ms)
        report = detect.reverse_report(n, gate_noise, cfg.shots, cfg.seed)
    else:
        rho = noise.noisy_state(n, params)
        if cfg.method == "fidelity":
            report = detect.fidelity_report(rho, cfg.p_ms, cfg.shots, cfg.seed)
        else:
            report = detect.certify_full_entanglement(rho, n, p_ms=cfg.p_ms, shots=cfg.shots, seed=cfg.seed)
    return _dumps(_envelope(cfg, {"report": report.to_dict()}))


def _noise_sweep(cfg: RunConfig):
    res = noise.figure_sweep(cfg.figure, cfg.n_qubits, cfg.shots, cfg.seed)
    sidecar = res.sidecar()
    sidecar["certification_threshold"] = noise.certification_threshold(res)
    sidecar["crossings"] = {
        noise.subset_label(s): noise.crossing(res.grid, res.values[s]) for s in res.subsets
    }
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(noise.CSV_HEADER)
    for r in res.rows():
        w.writerow([r[0], f"{r[1]:.6f}", r[2], f"{r[3]:.12g}", f"{r[4]:.6g}"])
    return buf.getvalue(), sidecar, [dict(zip(noise.CSV_HEADER, r)) for r in res.rows()]


def _hubbard_sweep(cfg: RunConfig):
    ratios = cfg.v_over_j or (100.0, float(hubbard.FAST_V_OVER_J))
    rows = hubbard.gate_sweep(ratios)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(hubbard.HUBBARD_CSV_HEADER)
    for r, t, f, leak in rows:
        w.writerow([f"{r:.12g}", f"{t:.12g}", f"{f:.12g}", f"{leak:.6e}"])
    sidecar = {"schema_version": 1, "v_over_j": list(ratios), "time_fractions": "0..2 of the gate time in steps of 0.1"}
    return buf.getvalue(), sidecar, [dict(zip(hubbard.HUBBARD_CSV_HEADER, r)) for r in rows]


def cmd_sweep(cfg: RunConfig):
    """Returns (main text, sidecar text or None)."""
    text, sidecar, rows = _hubbard_sweep(cfg) if cfg.figure == "hubbard" else _noise_sweep(cfg)
    if cfg.format == "json":
        return _dumps(_envelope(cfg, {"sidecar": sidecar, "rows": rows})), None
    return text, _dumps(_envelope(cfg, sidecar))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="swapchain", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"swapchain {__version__}")
    sub = ap.add_subparsers(dest="subcommand", required=True)

    def common(p, fmt="json"):
        p.add_argument("--n", type=int, default=10, dest="n_qubits")
        p.add_argument("--p-white", type=float, default=0.0)
        p.add_argument("--p-sf", type=float, default=1.0)
        p.add_argument("--p-ms", type=float, default=1.0)
        p.add_argument("--p-es", type=float, default=1.0)
        p.add_argument("--shots", type=int, default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=None, help="output file (stdout if omitted)")
        p.add_argument("--format", default=fmt, choices=("csv", "json"))

    p = sub.add_parser("prepare", help="target state summary")
    common(p)
    p = sub.add_parser("witness", help="run a detection pipeline")
    common(p)
    p.add_argument("--method", required=True)
    p = sub.add_parser("sweep", help="figure data")
    common(p, "csv")
    p.add_argument("--figure", required=True)
    p.add_argument("--v-over-j", type=float, nargs="*", default=())
    p = sub.add_parser("hubbard", help="gate fidelity versus time for given V/J")
    common(p, "csv")
    p.add_argument("--v-over-j", type=float, nargs="*", default=())
    return ap


def _config(args) -> RunConfig:
    kw = {k: v for k, v in vars(args).items() if k in RunConfig.__dataclass_fields__}
    if args.subcommand == "hubbard":
        kw["figure"] = "hubbard"
    if "v_over_j" in kw:
        kw["v_over_j"] = tuple(kw["v_over_j"])
    return RunConfig(**kw)


def _write(text: str, path: str | None) -> None:
    if path is None:
        try:
            sys.stdout.write(text)
            sys.stdout.flush()
        except BrokenPipeError:
            # reader went away (e.g. piped into head); silence the exit-time flush
            sys.stdout = open(os.devnull, "w")
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    cfg = _config(args)
    try:
        validate(cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if cfg.subcommand == "prepare":
            _write(cmd_prepare(cfg), cfg.out)
        elif cfg.subcommand == "witness":
            _write(cmd_witness(cfg), cfg.out)
        else:
            text, sidecar = cmd_sweep(cfg)
            _write(text, cfg.out)
            if sidecar is not None and cfg.out is not None:
                _write(sidecar, cfg.out + ".json")
    except (ProtocolError, noise.NoiseError, detect.DetectError, hubbard.HubbardError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (detect.InvariantViolation, StateError) as exc:
        print(f"numerical invariant violated: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
