"""Command line front end.

Every command reads a JSON config, writes its results plus ``manifest.json``
into ``--out`` and exits with 0 (tolerances met), 1 (tolerances violated) or
2 (invalid input or resource limit).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import datetime
import json
import math
import sys
from itertools import product
from pathlib import Path

import numpy as np

from . import __version__
from .roughpath import ResourceError, build_tensor
from .skeleton import Mode, RegularizationConfig, ResonanceError
from .spectral import (ANTISYMMETRIC, INDEPENDENT, FbmModel, FrequencyGrid, load_spectrum,
                       sample_antisym_fbm, sample_fbm, save_spectrum)
from .verify import (Divergence, Holder, Rate, certify_generic, chen_residual, covariance_table,
                     fubini_residual, generic_atom_path, scaling_slope, shuffle_residual,
                     write_samples_csv)

COMMANDS = ("sample", "build", "verify-chen", "verify-shuffle", "verify-fubini", "holder-scan",
            "rate-scan", "divergence-scan", "covariance-check")


class ConfigError(ValueError):
    pass


@dataclasses.dataclass
class RunConfig:
    alpha: float = 0.3
    eta: float = 1e-3
    d: int = 2
    K: int = 1024
    delta_xi: float = 2 * math.pi / 8
    rule: str = "node"
    kind: str = INDEPENDENT
    c_reg: float = 0.5
    mode: str = "regularized"
    N: int = 2
    seed: int = 0
    M: int = 1000
    s: float = 0.0
    t: float = 1.0
    times: list | None = None
    gaps: list | None = None
    etas: list | None = None
    deltas: list | None = None
    word: list | None = None
    triples: int = 20
    n: int = 3
    atoms: int = 3
    spectrum: str | None = None
    tolerance: float | None = None
    band: float | None = None
    budget: int = 10**9

    @classmethod
    def load(cls, data: dict) -> RunConfig:
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - names)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        cfg = cls(**data)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        try:
            self.model()
            self.grid()
            self.reg()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self.M < 1 or self.N < 1 or self.triples < 1 or self.n < 1 or self.atoms < 1:
            raise ConfigError("M, N, triples, n and atoms must be positive")
        if self.word is not None and any(not 1 <= x <= self.d for x in self.word):
            raise ConfigError(f"word letters must lie in 1..{self.d}")

    def model(self) -> FbmModel:
        return FbmModel(self.alpha, self.eta, self.d, self.kind)

    def grid(self) -> FrequencyGrid:
        return FrequencyGrid(self.K, self.delta_xi, self.rule)

    def reg(self) -> RegularizationConfig:
        return RegularizationConfig(self.c_reg, Mode(self.mode))


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _path(cfg: RunConfig):
    if cfg.spectrum:
        path, meta = load_spectrum(cfg.spectrum)
        return path, meta
    if cfg.kind == ANTISYMMETRIC:
        return sample_antisym_fbm(cfg.alpha, cfg.eta, cfg.grid(), cfg.seed), {}
    return sample_fbm(cfg.model(), cfg.grid(), cfg.seed), {}


def _tensor_meta(cfg: RunConfig) -> dict:
    return {"alpha": cfg.alpha, "eta": cfg.eta}


def cmd_sample(cfg: RunConfig, out: Path) -> tuple[bool, dict]:
    path, _ = _path(cfg)
    save_spectrum(path, out / "spectrum.csv",
                  {"alpha": cfg.alpha, "eta": cfg.eta, "seed": cfg.seed, "kind": cfg.kind})
    return True, {"files": ["spectrum.csv", "spectrum.json"]}


def cmd_build(cfg: RunConfig, out: Path) -> tuple[bool, dict]:
    path, _ = _path(cfg)
    T = build_tensor(path, cfg.N, cfg.s, cfg.t, cfg.reg(), cfg.budget, _tensor_meta(cfg))
    (out / "tensor.json").write_text(T.to_json() + "\n")
    worst = max(abs(T[(i,)] - float(path.increment(i, cfg.s, cfg.t)))
                for i in range(1, path.d + 1))
    return worst == 0.0, {"files": ["tensor.json"], "level1_mismatch": worst}


def _random_triples(cfg: RunConfig):
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(99,)))
    for _ in range(cfg.triples):
        s, u, t = np.sort(rng.uniform(0.0, 1.0, 3))
        yield float(s), float(u), float(t)


def cmd_verify_chen(cfg: RunConfig, out: Path) -> tuple[bool, dict]:
    path, _ = _path(cfg)
    tol = cfg.tolerance if cfg.tolerance is not None else 1e-8
    reg = cfg.reg()
    rows = []
    for s, u, t in _random_triples(cfg):
        X_tu = build_tensor(path, cfg.N, u, t, reg, cfg.budget)
        X_us = build_tensor(path, cfg.N, s, u, reg, cfg.budget)
        X_ts = build_tensor(path, cfg.N, s, t, reg, cfg.budget)
        rows.append({"s": s, "u": u, "t": t, "residual": chen_residual(X_tu, X_us, X_ts)})
    worst = max(r["residual"] for r in rows)
    _write_json(out / "chen.json", {"tolerance": tol, "max_residual": worst, "triples": rows})
    return worst <= tol, {"files": ["chen.json"], "max_residual": worst}


def cmd_verify_shuffle(cfg: RunConfig, out: Path) -> tuple[bool, dict]:
    path, _ = _path(cfg)
    tol = cfg.tolerance if cfg.tolerance is not None else 1e-8
    T = build_tensor(path, cfg.N, cfg.s, cfg.t, cfg.reg(), cfg.budget)
    rows = []
    letters = range(1, path.d + 1)
    for n1 in range(1, cfg.N):
        for n2 in range(1, cfg.N - n1 + 1):
            for w1 in product(letters, repeat=n1):
                for w2 in product(letters, repeat=n2):
                    rows.append({"w1": list(w1), "w2": list(w2),
                                 "residual": shuffle_residual(T, w1, w2)})
    worst = max((r["residual"] for r in rows), default=0.0)
    _write_json(out / "shuffle.json", {"tolerance": tol, "max_residual": worst, "pairs": rows})
    return worst <= tol, {"files": ["shuffle.json"], "max_residual": worst}


def cmd_verify_fubini(cfg: RunConfig, out: Path) -> tuple[bool, dict]:
    tol = cfg.tolerance if cfg.tolerance is not None else 1e-8
    path = generic_atom_path(cfg.n, cfg.atoms, cfg.seed)
    word = tuple(cfg.word) if cfg.word else tuple(range(1, cfg.n + 1))
    if len(word) != cfg.n or any(x > cfg.n for x in word):
        raise ConfigError("verify-fubini uses n distinct letters 1..n")
    if not certify_generic(path, word):
        raise ConfigError("atoms are not generic")
    residual = fubini_residual(path, word, cfg.s, cfg.t)
    _write_json(out / "fubini.json", {"tolerance": tol, "residual": residual, "word": list(word),
                                      "modes": {str(i): path.support(i).tolist()
                                                for i in range(1, cfg.n + 1)}})
    return residual <= tol, {"files": ["fubini.json"], "residual": residual}


def _report_out(report, out: Path, stem: str, expected: float, band: float) -> tuple[bool, dict]:
    ok = abs(report.slope - expected) <= band
    payload = report.to_dict()
    payload.update(expected=expected, band=band, passed=ok)
    _write_json(out / f"{stem}.json", payload)
    write_samples_csv(report, out / f"{stem}.csv")
    return ok, {"files": [f"{stem}.json", f"{stem}.csv"], "slope": report.slope}


def cmd_holder_scan(cfg: RunConfig, out: Path) -> tuple[bool, dict]:
    word = tuple(cfg.word or (1, 2))
    gaps = tuple(cfg.gaps or [2.0**-j for j in range(1, 7)])
    report = scaling_slope(Holder(word, gaps, cfg.s), cfg.model(), cfg.grid(), cfg.reg(), cfg.M,
                           cfg.seed)
    band = cfg.band if cfg.band is not None else (0.1 if len(word) == 1 else 0.2)
    return _report_out(report, out, "holder", 2 * len(word) * cfg.alpha, band)


def cmd_rate_scan(cfg: RunConfig, out: Path) -> tuple[bool, dict]:
    word = tuple(cfg.word or (1, 2))
    deltas = tuple(cfg.deltas or [2.0**-j for j in range(3, 8)])
    report = scaling_slope(Rate(cfg.eta, deltas, word, cfg.s, cfg.t), cfg.model(), cfg.grid(),
                           cfg.reg(), cfg.M, cfg.seed)
    band = cfg.band if cfg.band is not None else 0.2
    return _report_out(report, out, "rate", 2 * cfg.alpha, band)


def cmd_divergence_scan(cfg: RunConfig, out: Path) -> tuple[bool, dict]:
    etas = tuple(cfg.etas or [2.0**-j for j in range(2, 9)])
    model, grid, reg = cfg.model(), cfg.grid(), cfg.reg()
    band = cfg.band if cfg.band is not None else 0.15
    plain = scaling_slope(Divergence(etas, False, s=cfg.s, t=cfg.t), model, grid, reg, cfg.M,
                          cfg.seed)
    ok1, info1 = _report_out(plain, out, "divergence", -(1 - 4 * cfg.alpha), band)
    regd = scaling_slope(Divergence(etas, True, s=cfg.s, t=cfg.t), model, grid, reg, cfg.M,
                         cfg.seed)
    ok2, info2 = _report_out(regd, out, "divergence_regularized", 0.0, 0.1)
    return ok1 and ok2, {"files": info1["files"] + info2["files"],
                         "slope": info1["slope"], "regularized_slope": info2["slope"]}


def cmd_covariance_check(cfg: RunConfig, out: Path) -> tuple[bool, dict]:
    """Empirical, exact-grid and limiting covariances on a grid of time pairs."""
    times = cfg.times or [0.2, 0.4, 0.6, 0.8, 1.0]
    tol = cfg.tolerance if cfg.tolerance is not None else 0.02
    pairs = [(1, 1)]
    if cfg.d >= 2:
        pairs += [(2, 2), (1, 2), (2, 1)]
    rows = covariance_table(cfg.model(), cfg.grid(), times, pairs, cfg.M, cfg.seed)
    for r in rows:
        r["within"] = r["rel_error"] <= tol and abs(r["empirical"] - r["exact"]) <= 5 * r["stderr"]
    with open(out / "covariance.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    worst = max(r["rel_error"] for r in rows)
    return all(r["within"] for r in rows), {"files": ["covariance.csv"], "max_rel_error": worst}


HANDLERS = {
    "sample": cmd_sample,
    "build": cmd_build,
    "verify-chen": cmd_verify_chen,
    "verify-shuffle": cmd_verify_shuffle,
    "verify-fubini": cmd_verify_fubini,
    "holder-scan": cmd_holder_scan,
    "rate-scan": cmd_rate_scan,
    "divergence-scan": cmd_divergence_scan,
    "covariance-check": cmd_covariance_check,
}


def run(command: str, config: dict, out_dir, threads: int = 1) -> int:
    try:
        if command not in HANDLERS:
            raise ConfigError(f"unknown command {command!r}")
        cfg = RunConfig.load(config)
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        ok, info = HANDLERS[command](cfg, out)
    except (ConfigError, ResourceError, ResonanceError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    manifest = {
        "command": command,
        "config": dataclasses.asdict(cfg),
        "version": __version__,
        "threads": threads,
        "passed": ok,
        "result": info,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    _write_json(out / "manifest.json", manifest)
    if not ok:
        print(f"{command}: tolerance violated ({info})", file=sys.stderr)
    return 0 if ok else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="roughfbm", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", type=Path, help="JSON run configuration")
    parser.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    parser.add_argument("--seed", type=int, help="override the config seed")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker threads (results do not depend on it)")
    parser.add_argument("--mode", choices=[m.value for m in Mode])
    parser.add_argument("--c-reg", type=float, dest="c_reg")
    args = parser.parse_args(argv)
    try:
        config = json.loads(args.config.read_text()) if args.config else {}
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 2
    if not isinstance(config, dict):
        print("error: config must be a JSON object", file=sys.stderr)
        return 2
    for key in ("seed", "mode", "c_reg"):
        if getattr(args, key) is not None:
            config[key] = getattr(args, key)
    return run(args.command, config, args.out, args.threads)


if __name__ == "__main__":
    sys.exit(main())
