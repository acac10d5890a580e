"""Command-line driver: ``wgverify {verify,gap,iqp}``.

Exit codes: 0 on success (whatever the accept/reject statistics), 1 when a
``gap`` certificate check fails, 2 on input errors, 3 on capability limits.

Run manifests are JSON objects::

    {
      "graph": "path/to/graph.txt",      # or "iqp": "path/to/instance.txt"
      "cover": [[1, 3], [2]],            # or "greedy" / "singletons"
      "protocol": "adaptive_exact",      # adaptive_h, nonadaptive_e, nonadaptive_h
      "N": 50, "beta": 0.05,
      "h": 4,                            # *_h protocols
      "candidates": {"1": [0.0, 1.5708]},  # nonadaptive_e, optional
      "source": {"kind": "honest"},
      "seed": 7, "trials": 100,
      "shared_f": false
    }

Relative paths resolve against the manifest's directory.  ``WGV_TRIALS``,
``WGV_SEED``, ``WGV_FORMAT`` and ``WGV_WORKERS`` override the manifest;
command-line flags override both.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import graph as graphmod
from . import iqp as iqpmod
from .errors import CapabilityError, InputError, WgvError
from .operators import ORACLE_LIMIT, certify, format_certificate
from .protocols import ProtocolConfig, Verifier, completeness_bound, run_random_sampling_test
from .sources import SourceSpec, make_source
from .state import dump_state

CSV_COLUMNS = (
    "row", "trial", "seed", "manifest_hash", "protocol", "N", "beta", "accepted",
    "certificate", "vacuous", "withheld", "n_failed", "completeness_bound", "acceptance_rate",
)


@dataclass
class ExperimentConfig:
    graph: graphmod.WeightedGraph
    frame: list | None
    cfg: ProtocolConfig
    source: SourceSpec
    trials: int
    seed: int
    manifest_hash: str


def _read(path: Path) -> str:
    try:
        return path.read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None


def _resolve_cover(g: graphmod.WeightedGraph, spec) -> graphmod.IndependenceCover:
    if spec in (None, "greedy"):
        return graphmod.greedy_cover(g)
    if spec == "singletons":
        return graphmod.singleton_cover(g)
    if isinstance(spec, str):
        return graphmod.parse_cover(spec)
    if isinstance(spec, list) and all(isinstance(p, list) for p in spec):
        return graphmod.IndependenceCover(spec)
    raise InputError(f"cannot interpret cover {spec!r}")


def load_experiment(path: Path, *, trials=None, seed=None, strict_f=None) -> ExperimentConfig:
    try:
        raw = json.loads(_read(path))
    except json.JSONDecodeError as exc:
        raise InputError(f"manifest is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise InputError("manifest must be a JSON object")
    base = path.parent
    frame = None
    if "graph" in raw:
        g = graphmod.parse_graph(_read(base / raw["graph"]))
    elif "iqp" in raw:
        g, frame = iqpmod.build_iqp_state(iqpmod.parse_iqp(_read(base / raw["iqp"])))
    else:
        raise InputError("manifest needs a 'graph' or 'iqp' entry")
    env_trials, env_seed = os.environ.get("WGV_TRIALS"), os.environ.get("WGV_SEED")
    try:
        trials = int(trials if trials is not None else env_trials if env_trials else raw.get("trials", 1))
        seed = int(seed if seed is not None else env_seed if env_seed else raw.get("seed", 0))
        cands = raw.get("candidates")
        if cands is not None:
            cands = {int(k): tuple(float(a) for a in v) for k, v in cands.items()}
        cfg = ProtocolConfig(
            protocol=str(raw["protocol"]),
            N=int(raw["N"]),
            beta=float(raw["beta"]),
            cover=_resolve_cover(g, raw.get("cover")),
            h=None if raw.get("h") is None else int(raw["h"]),
            candidates=cands,
            seed=seed,
            shared_f=bool(strict_f if strict_f is not None else raw.get("shared_f", False)),
        )
    except KeyError as exc:
        raise InputError(f"manifest is missing {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        raise InputError(f"bad manifest value: {exc}") from None
    if trials < 1:
        raise InputError("trials must be >= 1")
    source = SourceSpec.from_dict(raw.get("source", {"kind": "honest"}))
    effective = dict(raw, trials=trials, seed=seed, shared_f=cfg.shared_f)
    digest = hashlib.sha256(json.dumps(effective, sort_keys=True).encode()).hexdigest()[:16]
    return ExperimentConfig(g, frame, cfg, source, trials, seed, digest)


def _run_chunk(exp: ExperimentConfig, start: int, stop: int) -> list[dict]:
    seqs = np.random.SeedSequence(exp.seed).spawn(exp.trials)[start:stop]
    verifier = Verifier(exp.graph, exp.cfg, exp.frame)
    rows = []
    for t, ss in zip(range(start, stop), seqs):
        rng = np.random.default_rng(ss)
        src = make_source(exp.source, exp.graph, exp.cfg.N, rng, exp.frame)
        rep = run_random_sampling_test(src, exp.cfg, exp.graph, rng, verifier=verifier)
        rows.append({
            "row": "trial", "trial": t, "seed": exp.seed, "manifest_hash": exp.manifest_hash,
            "protocol": exp.cfg.protocol, "N": exp.cfg.N, "beta": exp.cfg.beta,
            "accepted": int(rep.accepted),
            "certificate": "" if rep.certificate is None else repr(rep.certificate),
            "vacuous": int(rep.vacuous), "withheld": rep.withheld, "n_failed": rep.n_failed,
            "completeness_bound": repr(rep.completeness_bound), "acceptance_rate": "",
        })
    return rows


def run_experiment(exp: ExperimentConfig, workers: int = 1) -> list[dict]:
    # Validate before fanning out so config errors surface once.
    Verifier(exp.graph, exp.cfg, exp.frame)
    if workers <= 1 or exp.trials < 2 * workers:
        rows = _run_chunk(exp, 0, exp.trials)
    else:
        bounds = np.linspace(0, exp.trials, workers + 1).astype(int)
        with ProcessPoolExecutor(workers) as pool:
            futures = [pool.submit(_run_chunk, exp, int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:])]
            rows = [r for f in futures for r in f.result()]
    accepted = sum(r["accepted"] for r in rows)
    rows.append({
        "row": "aggregate", "trial": exp.trials, "seed": exp.seed, "manifest_hash": exp.manifest_hash,
        "protocol": exp.cfg.protocol, "N": exp.cfg.N, "beta": exp.cfg.beta, "accepted": accepted,
        "certificate": "", "vacuous": "", "withheld": "", "n_failed": "",
        "completeness_bound": repr(completeness_bound(exp.cfg)),
        "acceptance_rate": repr(accepted / exp.trials),
    })
    return rows


def format_rows(rows: list[dict], fmt: str) -> str:
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
        return buf.getvalue()
    if fmt == "json-lines":
        return "".join(json.dumps({k: r[k] for k in CSV_COLUMNS}) + "\n" for r in rows)
    raise InputError(f"unknown format {fmt!r}")


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_verify(args) -> int:
    exp = load_experiment(Path(args.manifest), trials=args.trials, seed=args.seed,
                          strict_f=True if args.strict_paper_f else None)
    fmt = args.format or os.environ.get("WGV_FORMAT") or "csv"
    workers = args.workers if args.workers is not None else int(os.environ.get("WGV_WORKERS", "1"))
    _emit(format_rows(run_experiment(exp, workers), fmt), args.out)
    return 0


def _parse_hvec(text: str | None):
    if text is None:
        return None
    if ":" not in text:
        return int(text)
    out = {}
    for item in text.split(","):
        k, v = item.split(":")
        out[int(k)] = int(v)
    return out


def cmd_gap(args) -> int:
    g = graphmod.parse_graph(_read(Path(args.graph)))
    if g.n > ORACLE_LIMIT:
        raise CapabilityError(f"gap certificates need n <= {ORACLE_LIMIT}, got {g.n}")
    cover = _resolve_cover(g, args.cover)
    graphmod.require_valid_cover(g, cover)
    try:
        hvec = _parse_hvec(args.hvec)
    except ValueError:
        raise InputError(f"cannot parse --hvec {args.hvec!r}") from None
    checks = certify(g, cover, args.kind, h=args.h, hvec=hvec)
    _emit(format_certificate(g, cover, args.kind, checks, h=args.h, hvec=args.hvec), args.out)
    return 0 if all(c.passed for c in checks) else 1


def cmd_iqp(args) -> int:
    inst = iqpmod.parse_iqp(_read(Path(args.instance)))
    if args.action == "zr":
        z = iqpmod.compute_Z_R(inst)
        text = f"Z_R: {z.real!r} {z.imag!r}\n|Z_R|^2: {abs(z) ** 2!r}\n"
    elif args.action == "plan":
        plan = iqpmod.verification_params_iqp(inst.n, args.epsilon, args.beta, variant=args.variant)
        text = "".join(f"{k}: {v}\n" for k, v in plan.items())
    else:
        g, frame = iqpmod.build_iqp_state(inst)
        state = iqpmod.framed_state(g, frame)
        if args.action == "state":
            text = dump_state(state)
        else:
            text = iqpmod.format_distribution(iqpmod.output_distribution(state), inst.n)
    _emit(text, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wgverify", description="Weighted graph state verification experiments")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run N-random sampling test trials from a manifest")
    v.add_argument("--manifest", required=True)
    v.add_argument("--trials", type=int)
    v.add_argument("--seed", type=int)
    v.add_argument("--format", choices=("csv", "json-lines"))
    v.add_argument("--out")
    v.add_argument("--workers", type=int)
    v.add_argument("--strict-paper-f", action="store_true",
                   help="share one basis draw per color class in nonadaptive_h")
    v.set_defaults(func=cmd_verify)

    gp = sub.add_parser("gap", help="dense spectral-gap and bound certificate")
    gp.add_argument("--graph", required=True)
    gp.add_argument("--cover", default="greedy", help='"1,3;2", "greedy" or "singletons"')
    gp.add_argument("--kind", required=True, choices=("adaptive", "nonadaptive", "adaptive_h", "nonadaptive_h"))
    gp.add_argument("--h", type=int)
    gp.add_argument("--hvec", help='uniform "4" or per-vertex "1:2,2:4"')
    gp.add_argument("--out")
    gp.set_defaults(func=cmd_gap)

    q = sub.add_parser("iqp", help="IQP instance utilities")
    q.add_argument("action", choices=("state", "dist", "zr", "plan"))
    q.add_argument("--instance", required=True)
    q.add_argument("--epsilon", type=float, default=0.1)
    q.add_argument("--beta", type=float, default=0.05)
    q.add_argument("--variant", choices=("iqp", "ms"), default="iqp")
    q.add_argument("--out")
    q.set_defaults(func=cmd_iqp)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except WgvError as exc:
        print(f"wgverify: error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
