"""Command-line entry point: ``loqcsim {ghz-verify,fusion-verify,tree-cost,threshold-sweep}``.

Every command writes one table (CSV or JSON) to ``--out`` (stdout by
default). The last row is always a summary of the form
``status=pass;checks=N;failed=K``. Exit codes: 0 when every check passed,
1 when a check failed, 2 on bad arguments or an unwritable output path.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from typing import Any, Callable, Sequence

import numpy as np

from . import fusion, ghz, thresholds, trees
from .detection import pattern_label
from .fock import WeightedEnsemble, density_operator, fidelity, ghz as ghz_state
from .optics import ROTATOR_CONVENTIONS, loss_channel

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

REPORT_FIELDS = ("name", "value", "reference", "residual", "pass")
TREE_FIELDS = ("spec", "p_ii", "trials", "seed", "mc_mean", "mc_stderr", "analytic_mean", "bound")
SWEEP_FIELDS = ("eta_s", "eta_d", "epsilon", "state_survival", "measured_survival", "p_ii", "tolerant")

FUSION_SHAPES = ((2, 2), (3, 2), (3, 3), (4, 3))
FUSION_EPSILONS = (0.0, 0.1, 0.25)


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- arguments


def probability(text: str) -> float:
    try:
        x = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a number")
    if not 0.0 <= x <= 1.0:
        raise argparse.ArgumentTypeError(f"{text} is not a probability in [0, 1]")
    return x


def fusion_probability(text: str) -> float:
    x = probability(text)
    if x == 0.0:
        raise argparse.ArgumentTypeError("p_ii must be positive")
    return x


def positive_int(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer")
    if n < 1:
        raise argparse.ArgumentTypeError(f"{text} must be at least 1")
    return n


def positive_float(text: str) -> float:
    try:
        x = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a number")
    if not x > 0.0:
        raise argparse.ArgumentTypeError(f"{text} must be positive")
    return x


def tree_spec(text: str) -> trees.TreeSpec:
    try:
        return trees.TreeSpec.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad tree spec {text!r}: {exc}")


def grid(text: str) -> list[float]:
    """``0.5,0.9,1`` or ``start:stop:count`` (inclusive, evenly spaced)."""
    try:
        if ":" in text:
            a, b, n = text.split(":")
            values = [float(x) for x in np.linspace(float(a), float(b), int(n))]
        else:
            values = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}")
    if not values or any(not 0.0 <= x <= 1.0 for x in values):
        raise argparse.ArgumentTypeError(f"grid {text!r} must be non-empty with values in [0, 1]")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="loqcsim", description="Loss-tolerant linear-optics checks.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--out", default="-", help="output file (default: stdout)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = sub.add_parser("ghz-verify", help="simulate the GHZ factory and check it against closed forms")
    p.add_argument("--eta-s", type=probability, default=1.0)
    p.add_argument("--eta-d", type=probability, default=1.0)
    p.add_argument("--tol", type=positive_float, default=1e-10)
    p.add_argument("--rotator", choices=ROTATOR_CONVENTIONS, default="hadamard")
    common(p)

    p = sub.add_parser("fusion-verify", help="check Type-II fusion on lossy GHZ inputs")
    p.add_argument("--eta-d", type=probability, default=1.0)
    p.add_argument("--epsilon", type=probability, default=None, help="single loss rate instead of the built-in grid")
    p.add_argument("--tol", type=positive_float, default=1e-10)
    common(p)

    p = sub.add_parser("tree-cost", help="Monte-Carlo and analytic 2-tree cost of a tree")
    p.add_argument("--spec", type=tree_spec, default=trees.TreeSpec((8,)))
    p.add_argument("--p-ii", type=fusion_probability, default=None, help="fusion success; default derived from --eta-s/--eta-d")
    p.add_argument("--eta-s", type=probability, default=1.0)
    p.add_argument("--eta-d", type=probability, default=1.0)
    p.add_argument("--trials", type=positive_int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    common(p)

    p = sub.add_parser("threshold-sweep", help="tabulate threshold quantities on an (eta_s, eta_d) grid")
    p.add_argument("--eta-s", type=grid, default=grid("0.5:1:11"))
    p.add_argument("--eta-d", type=grid, default=grid("0.5:1:11"))
    common(p)
    return parser


# ------------------------------------------------------------------ output


def fmt(x: Any) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".12g")
    return str(x)


def _json_value(x: Any) -> Any:
    if x is None or isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(format(float(x), ".12g"))
        return x if math.isfinite(x) else None
    return str(x)


def render(rows: Sequence[dict[str, Any]], fields: Sequence[str], form: str) -> str:
    if form == "json":
        data = [{f: _json_value(r.get(f)) for f in fields} for r in rows]
        return json.dumps(data, indent=2) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(fields)
    for r in rows:
        writer.writerow([fmt(r.get(f)) for f in fields])
    return buf.getvalue()


def summary_text(checks: Sequence[bool]) -> str:
    failed = sum(not c for c in checks)
    status = "pass" if failed == 0 else "fail"
    return f"status={status};checks={len(checks)};failed={failed}"


class Report:
    """Rows of (name, value, reference, residual, pass)."""

    def __init__(self, tol: float):
        self.tol = tol
        self.rows: list[dict[str, Any]] = []
        self.checks: list[bool] = []

    def info(self, name: str, value: Any) -> None:
        self.rows.append({"name": name, "value": value})

    def compare(self, name: str, value: float, reference: float) -> None:
        self.residual(name, abs(value - reference), value=value, reference=reference)

    def residual(self, name: str, residual: float, value: Any = None, reference: Any = None) -> None:
        ok = bool(residual < self.tol)
        self.checks.append(ok)
        self.rows.append(
            {"name": name, "value": residual if value is None else value, "reference": reference, "residual": residual, "pass": ok}
        )

    def finish(self) -> list[dict[str, Any]]:
        return self.rows + [{"name": "summary", "value": summary_text(self.checks)}]

    @property
    def passed(self) -> bool:
        return all(self.checks)


# ---------------------------------------------------------------- commands


def _success_reference(product: float) -> dict[int, float]:
    """Closed-form sector weights of the heralded output at source survival ``product``.

    The per-term weights are multiplied by the number of terms in each sector
    (1, 6, 6, 1).
    """
    w = ghz.closed_form_sector_weights(product)
    return {3: w[3], 2: 6 * w[2], 1: 6 * w[1], 0: w[0]}


def cmd_ghz_verify(args: argparse.Namespace) -> tuple[list[dict[str, Any]], Sequence[str], bool]:
    rep = Report(args.tol)
    result = ghz.run_ghz_factory(args.eta_s, args.eta_d, args.rotator)
    for pattern, pr in sorted(result.per_pattern.items()):
        rep.info(f"pattern_{pattern_label(pattern)}", pr.probability)

    # sector weights as a later eta_d-efficient measurement sees them
    product = args.eta_s * args.eta_d
    reference = _success_reference(product)
    rep.compare("success_probability", result.success_probability, sum(reference.values()))
    if result.success_probability > 0.0:
        seen = loss_channel(result.output, ghz.OUTPUT_MODES, args.eta_d)
        seen_sectors = ghz.sector_weights(ghz.GhzFactoryResult(result.success_probability, seen, {}))
        for n in (3, 2, 1, 0):
            rep.compare(f"sector_weight_{n}", seen_sectors[n], reference[n])

        survival = ghz.effective_survival(args.eta_s, args.eta_d)
        rep.compare("fitted_survival", ghz.fitted_survival(result), survival)
        rep.residual("id_ghz_density", result.density().max_abs_diff(ghz.analytic_id_ghz(survival)), reference=0.0)

    for key, r in ghz.equivalence_residuals(args.eta_s, args.eta_d).items():
        rep.residual(f"equivalence_{key}", r, reference=0.0)
    return rep.finish(), REPORT_FIELDS, rep.passed


def cmd_fusion_verify(args: argparse.Namespace) -> tuple[list[dict[str, Any]], Sequence[str], bool]:
    rep = Report(args.tol)
    a = WeightedEnsemble.pure(ghz_state((1, 2, 3)))
    b = WeightedEnsemble.pure(ghz_state((11, 12, 13)))
    ideal = fusion.type_ii_fuse(a, 3, b, 11)
    rep.compare("ideal_success_probability", ideal.success_probability, 0.5)
    target = ghz_state((1, 2, 12, 13))
    fid = sum(w * fidelity(target, s) for w, s in ideal.fused)
    rep.compare("ideal_ghz4_fidelity", fid, 1.0)

    epsilons = FUSION_EPSILONS if args.epsilon is None else (args.epsilon,)
    for eps in epsilons:
        if eps >= 1.0:
            raise UsageError("epsilon must be below 1 for the ID preservation check")
        for n, m in FUSION_SHAPES:
            fused, expected = fusion.fuse_id_ghz(n, m, eps, args.eta_d)
            tag = f"n{n}_m{m}_eps{fmt(eps)}"
            rep.compare(f"success_{tag}", fused.success_probability, fusion.p_ii(eps, args.eta_d))
            residual = density_operator(fused.fused).max_abs_diff(density_operator(expected))
            rep.residual(f"id_preservation_{tag}", residual, reference=0.0)
    return rep.finish(), REPORT_FIELDS, rep.passed


def cmd_tree_cost(args: argparse.Namespace) -> tuple[list[dict[str, Any]], Sequence[str], bool]:
    if args.p_ii is not None:
        p = args.p_ii
    else:
        eps = 1.0 - ghz.effective_survival(args.eta_s, args.eta_d)
        p = fusion.p_ii(eps, args.eta_d)
        if p == 0.0:
            raise UsageError("fusion success probability is 0 at these efficiencies")
    est = trees.monte_carlo_tree_cost(args.spec, p, args.trials, args.seed)
    row = {
        "spec": str(args.spec),
        "p_ii": p,
        "trials": est.trials,
        "seed": args.seed,
        "mc_mean": est.mean_2trees,
        "mc_stderr": est.std_error,
        "analytic_mean": est.analytic_mean,
        "bound": est.analytic_bound,
    }
    checks = [est.within(3.0), est.analytic_mean <= est.analytic_bound]
    return [row, {"spec": "summary", "p_ii": summary_text(checks)}], TREE_FIELDS, all(checks)


def cmd_threshold_sweep(args: argparse.Namespace) -> tuple[list[dict[str, Any]], Sequence[str], bool]:
    rows, checks = [], []
    for r in thresholds.threshold_sweep(args.eta_s, args.eta_d):
        rows.append({f: getattr(r, f) for f in SWEEP_FIELDS})
        checks.append(r.tolerant == thresholds.product_condition(r.eta_s, r.eta_d))
    rows.append({"eta_s": "summary", "eta_d": summary_text(checks)})
    return rows, SWEEP_FIELDS, all(checks)


COMMANDS: dict[str, Callable[[argparse.Namespace], tuple[list[dict[str, Any]], Sequence[str], bool]]] = {
    "ghz-verify": cmd_ghz_verify,
    "fusion-verify": cmd_fusion_verify,
    "tree-cost": cmd_tree_cost,
    "threshold-sweep": cmd_threshold_sweep,
}


def write_output(text: str, path: str) -> None:
    if path == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        rows, fields, ok = COMMANDS[args.command](args)
    except (UsageError, ValueError) as exc:
        print(f"loqcsim {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    text = render(rows, fields, args.format)
    try:
        write_output(text, args.out)
    except OSError as exc:
        print(f"loqcsim: cannot write {args.out}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK if ok else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
