"""Command-line front end: ``tsdelay {simulate,certify,axioms,compare} --config FILE``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from tsdelay.config import RunConfig, load
from tsdelay.errors import TSDelayError
from tsdelay.shifts import Sampling, verify_axioms
from tsdelay.solver import solve
from tsdelay.stability import certify, check_literature_conditions

EXIT_OK, EXIT_FAIL, EXIT_BAD = 0, 1, 2


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tsdelay", description="Delay dynamic equations on time scales.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, text in (
        ("simulate", "solve the equation and write the trajectory CSV"),
        ("certify", "search for a stability or instability certificate"),
        ("axioms", "check the shift-operator axioms on sampled points"),
        ("compare", "evaluate the conditions from the earlier literature"),
    ):
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", required=True, metavar="PATH")
        p.add_argument("--out", metavar="DIR", help="output directory (overrides [output] dir)")
        p.add_argument("--jobs", type=int, default=1, metavar="N")
        p.add_argument("--real-step", type=float, default=None, metavar="X")
        p.add_argument("--seed", type=int, default=0, metavar="N")
    return ap


def _out_dir(cfg: RunConfig, args: argparse.Namespace) -> Path | None:
    d = args.out or cfg.out_dir
    if d is None:
        return None
    path = Path(d)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write(path: Path | None, name: str, text: str) -> None:
    if path is not None:
        (path / name).write_text(text)


def _simulate(cfg: RunConfig, args: argparse.Namespace) -> int:
    p = cfg.problem()
    tr = solve(p, cfg.real_step)
    csv = tr.to_csv()
    out = _out_dir(cfg, args)
    if out is None:
        sys.stdout.write(csv)
    else:
        _write(out, f"{cfg.prefix}trajectory.csv", csv)
    return EXIT_OK


def _certify(cfg: RunConfig, args: argparse.Namespace) -> int:
    p = cfg.problem()
    cert = certify(p, cfg.search(max(1, args.jobs)))
    text = cert.to_text()
    sys.stdout.write(text)
    out = _out_dir(cfg, args)
    _write(out, f"{cfg.prefix}certificate.txt", text)
    _write(out, f"{cfg.prefix}certificate.csv", cert.to_csv())
    return EXIT_OK if cert.certified else EXIT_FAIL


def _axioms(cfg: RunConfig, args: argparse.Namespace) -> int:
    system = cfg.system()
    report = verify_axioms(system, Sampling(n=cfg.samples, seed=args.seed), h=cfg.h)
    text = report.to_text()
    sys.stdout.write(text)
    _write(_out_dir(cfg, args), f"{cfg.prefix}axioms.txt", text)
    return EXIT_OK if report.passed else EXIT_FAIL


def _compare(cfg: RunConfig, args: argparse.Namespace) -> int:
    p = cfg.problem()
    lam = cfg.lambdas[0] if cfg.lambdas else None
    alpha = cfg.alphas[0] if cfg.alphas else None
    reports = check_literature_conditions(p, cfg.N, lam, alpha, threshold=cfg.threshold)
    text = "".join(r.line() + "\n" for r in reports)
    sys.stdout.write(text)
    _write(_out_dir(cfg, args), f"{cfg.prefix}literature.txt", text)
    return EXIT_OK


_COMMANDS = {"simulate": _simulate, "certify": _certify, "axioms": _axioms, "compare": _compare}


def run(argv: list[str] | None = None) -> int:
    ap = _parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_BAD if exc.code else EXIT_OK
    try:
        cfg = load(args.config)
        if args.real_step is not None:
            cfg.real_step = args.real_step
        return _COMMANDS[args.command](cfg, args)
    except (TSDelayError, OSError) as exc:
        msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
        print(f"tsdelay: {type(exc).__name__}: {msg}", file=sys.stderr)
        return EXIT_BAD


def main() -> None:
    sys.exit(run())
