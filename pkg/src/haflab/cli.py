"""Batch command-line front end.

Commands: ``haflab matfun {haf|perm|det|alphadet}``, ``haflab field
sample``, ``haflab cox sample``, ``haflab verify``, ``haflab bench``.
Every command is deterministic given (config, seed); reports embed the
config hash and the seed.  Exit codes: 0 all checks pass, 1 check
failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from dataclasses import asdict, dataclass

import numpy as np

from . import kernels as kn
from . import matfun as mf
from . import sampling as sp
from .errors import ConfigError, HaflabError
from .verify import BatterySettings, run_battery


@dataclass
class ExperimentConfig:
    seed: int = 2024
    window: tuple = (0.0, 1.0)
    cells: int = 3
    replicates: int = 1000
    truncation: int = 6
    mc_samples: int = 40_000
    max_order: int = 2
    boxes: list | None = None
    orders: list | None = None
    model: dict | None = None
    models: list | None = None
    profile: dict | None = None
    out: str | None = None

    _FIELDS = ("seed", "window", "cells", "replicates", "truncation",
               "mc_samples", "max_order", "boxes", "orders", "model",
               "models", "profile", "out")

    @classmethod
    def load(cls, path: str | None, overrides: dict) -> "ExperimentConfig":
        doc = {}
        if path is not None:
            try:
                with open(path, "r", encoding="ascii") as fh:
                    doc = json.load(fh)
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"cannot read config {path}: {exc}") from exc
            unknown = set(doc) - set(cls._FIELDS)
            if unknown:
                raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        doc.update({k: v for k, v in overrides.items() if v is not None})
        cfg = cls(**{k: doc[k] for k in doc})
        if cfg.replicates < 0:
            raise ConfigError("replicates must be nonnegative")
        return cfg

    def sha256(self) -> str:
        doc = asdict(self)
        doc.pop("out", None)   # the destination is not part of the experiment
        blob = json.dumps(doc, sort_keys=True, default=list)
        return hashlib.sha256(blob.encode()).hexdigest()

    def grid(self) -> kn.Grid:
        return kn.Grid.regular(float(self.window[0]), float(self.window[1]),
                               int(self.cells))

    def resolve_model(self) -> kn.GaussianFieldModel:
        entry = self.model or {"builtin": "proper-fourier"}
        if "path" in entry:
            return kn.load_model(entry["path"])
        if "builtin" in entry:
            return kn.builtin_model(entry["builtin"], self.grid(),
                                    entry.get("params"))
        raise ConfigError("model entry needs a 'builtin' name or a 'path'")

    def resolve_profile(self) -> kn.IntensityProfile:
        """Deterministic intensity amplitudes, one [re, im] pair per cell."""
        try:
            lam = np.array([complex(p[0], p[1]) for p in self.profile["lambda"]])
        except (KeyError, TypeError, IndexError) as exc:
            raise ConfigError(
                "profile needs a 'lambda' list of [re, im] pairs") from exc
        return kn.IntensityProfile(self.grid(), lam)

    def disjoint_boxes(self, n_cells: int) -> list[list[int]]:
        if self.boxes is not None:
            boxes = [sorted(int(i) for i in b) for b in self.boxes]
            seen: set[int] = set()
            for b in boxes:
                if seen & set(b):
                    raise ConfigError("config boxes must be pairwise disjoint")
                seen |= set(b)
            return boxes
        return [[i for i in range(n_cells) if i % 2 == 0],
                [i for i in range(n_cells) if i % 2 == 1]]


def _open_new(path: str, force: bool):
    if os.path.exists(path) and not force:
        raise ConfigError(f"{path} exists; pass --force to overwrite")
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    return open(path, "w", encoding="ascii", newline="\n")


# ---------------------------------------------------------------------------
# matfun subcommands
# ---------------------------------------------------------------------------


def _format_complex(z: complex) -> str:
    return f"{z.real:.12g} {z.imag:.12g}"


def cmd_matfun(args) -> int:
    matrix = mf.read_matrix_text(args.file)
    if args.op == "haf":
        fn = mf.hafnian_enum if args.algo == "enum" else mf.hafnian_dp
        value = fn(matrix)
    elif args.op == "perm":
        value = mf.permanent(matrix)
    elif args.op == "det":
        value = mf.determinant(matrix)
    else:
        value = mf.alpha_det(matrix, args.alpha)
    print(_format_complex(value))
    return 0


# ---------------------------------------------------------------------------
# sampling commands
# ---------------------------------------------------------------------------


def _summary_payload(cfg: ExperimentConfig, kind: str, extra: dict) -> str:
    payload = {"kind": kind, "seed": cfg.seed, "replicates": cfg.replicates,
               "config_sha256": cfg.sha256()}
    payload.update(extra)
    return json.dumps(payload, sort_keys=True, default=float) + "\n"


def cmd_sample(args, kind: str) -> int:
    cfg = ExperimentConfig.load(args.config, {"seed": args.seed, "out": args.out})
    if cfg.out is None:
        raise ConfigError("an output directory is required (--out or config 'out')")
    # a deterministic intensity profile turns `cox sample` into plain
    # Poisson sampling; `field sample` always needs a model
    source = None
    if kind == "cox" and cfg.profile is not None:
        source = cfg.resolve_profile()
        m_cells = source.grid.n_cells
    else:
        model = cfg.resolve_model()
        m_cells = model.grid.n_cells
    os.makedirs(cfg.out, exist_ok=True)

    csv_path = os.path.join(cfg.out, "patterns.csv" if kind == "cox" else "field.csv")
    with _open_new(csv_path, args.force) as fh:
        if kind == "cox":
            fh.write("replicate,cell_index,count\n")
            rows = np.zeros((cfg.replicates, m_cells), dtype=int)
            for r in range(cfg.replicates):
                rng = sp.replicate_rng(cfg.seed, r)
                rows[r] = (sp.sample_poisson(source, rng) if source is not None
                           else sp.sample_cox(model, rng))
                for m in range(m_cells):
                    fh.write(f"{r},{m},{rows[r, m]}\n")
        else:
            fh.write("replicate,cell_index,re,im\n")
            rows = np.zeros((cfg.replicates, m_cells), dtype=complex)
            for r in range(cfg.replicates):
                rows[r] = sp.sample_field(model, sp.replicate_rng(cfg.seed, r))
                for m in range(m_cells):
                    fh.write(f"{r},{m},{rows[r, m].real:.17g},{rows[r, m].imag:.17g}\n")

    if kind == "cox":
        boxes = cfg.disjoint_boxes(m_cells)
        per_box = []
        reports = []
        for box in boxes:
            if cfg.replicates:
                rep = sp.empirical_product_moment(rows, [box])
                per_box.append({"cells": box, "mean": rep.value,
                                "std_error": rep.std_error})
                reports.append(rep)
                for order in cfg.orders or []:
                    reports.append(sp.empirical_factorial_moment(rows, box,
                                                                 int(order)))
            else:
                per_box.append({"cells": box, "mean": None, "std_error": None})
        extra = {"boxes": per_box}
        with _open_new(os.path.join(cfg.out, "moments.jsonl"), args.force) as fh:
            for rep in reports:
                fh.write(json.dumps(rep.to_dict(), sort_keys=True) + "\n")
    else:
        mean_sq = (np.abs(rows) ** 2).mean(axis=0) if cfg.replicates else None
        extra = {"mean_abs_square": None if mean_sq is None else mean_sq.tolist(),
                 "k1_diagonal": model.k1.diagonal().real.tolist()}
    with _open_new(os.path.join(cfg.out, "summary.json"), args.force) as fh:
        fh.write(_summary_payload(cfg, kind, extra))
    return 0


# ---------------------------------------------------------------------------
# verify and bench
# ---------------------------------------------------------------------------


def cmd_verify(args) -> int:
    cfg = ExperimentConfig.load(args.config, {"seed": args.seed, "out": args.out})
    max_order = max(int(n) for n in cfg.orders) if cfg.orders else cfg.max_order
    settings = BatterySettings(seed=cfg.seed, cells=cfg.cells,
                               truncation=cfg.truncation,
                               mc_samples=cfg.mc_samples,
                               replicates=cfg.replicates,
                               max_order=max_order)
    if cfg.models is not None:
        settings.models = cfg.models
    elif cfg.model is not None:
        settings.models = [cfg.model]
    results = run_battery(settings)

    lines = [json.dumps({"config_sha256": cfg.sha256(), "seed": cfg.seed},
                        sort_keys=True)]
    lines += [json.dumps(r.to_dict(), sort_keys=True) for r in results]
    if cfg.out is not None:
        os.makedirs(os.path.dirname(os.path.abspath(cfg.out)), exist_ok=True)
        mode = "w" if args.force else "a"
        with open(cfg.out, mode, encoding="ascii", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
    n_fail = 0
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        n_fail += not r.passed
        detail = f"{r.kind}={r.statistic:.3e}" if r.statistic is not None else \
            (r.error or "")
        print(f"{status} {r.name} {detail}")
    print(f"{len(results) - n_fail}/{len(results)} checks passed")
    return 0 if n_fail == 0 else 1


def cmd_bench(args) -> int:
    sizes = [int(s) for s in args.sizes.split(",")] if args.sizes else []
    rows = mf.bench_hafnian(sizes, args.reps, seed=args.seed or 0)
    header = "algorithm,size,repetitions,median_seconds"
    body = [f"{r.algorithm},{r.size},{r.repetitions},{r.median_seconds:.6e}"
            for r in rows]
    print(header)
    for line in body:
        print(line)
    if args.out is not None:
        with _open_new(args.out, args.force) as fh:
            fh.write("\n".join([header] + body) + "\n")
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=None, help="64-bit root seed")
    parser.add_argument("--config", default=None, help="experiment config JSON")
    parser.add_argument("--out", default=None, help="output file or directory")
    parser.add_argument("--force", action="store_true",
                        help="overwrite existing outputs")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="haflab")
    sub = parser.add_subparsers(dest="command", required=True)

    p_mat = sub.add_parser("matfun", help="exact matrix functions")
    p_mat.add_argument("op", choices=["haf", "perm", "det", "alphadet"])
    p_mat.add_argument("file", help="matrix in the plain-text format")
    p_mat.add_argument("--algo", choices=["enum", "dp"], default="dp",
                       help="hafnian algorithm")
    p_mat.add_argument("--alpha", type=float, default=1.0,
                       help="weight for alphadet")

    for name in ("field", "cox"):
        p = sub.add_parser(name, help=f"{name} process sampling")
        p_sub = p.add_subparsers(dest="action", required=True)
        p_s = p_sub.add_parser("sample", help="dump replicate draws")
        _add_common(p_s)

    p_ver = sub.add_parser("verify", help="run the identity battery")
    _add_common(p_ver)

    p_bench = sub.add_parser("bench", help="time both hafnian algorithms")
    _add_common(p_bench)
    p_bench.add_argument("--sizes", default="8,12",
                         help="comma-separated even dimensions")
    p_bench.add_argument("--reps", type=int, default=3)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "matfun":
            return cmd_matfun(args)
        if args.command in ("field", "cox"):
            return cmd_sample(args, args.command)
        if args.command == "verify":
            return cmd_verify(args)
        if args.command == "bench":
            return cmd_bench(args)
        raise ConfigError(f"unknown command {args.command}")
    except HaflabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
