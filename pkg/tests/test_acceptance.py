"""End-to-end acceptance checks, one test per criterion.

Each test records its checks, prints a single PASS/FAIL line with the
runtime, and fails if any check or the runtime budget is missed.
"""

import itertools
import time

import numpy as np
import pytest

from loqcsim.cli import main
from loqcsim.fock import (
    Mode,
    Pol,
    PureState,
    WeightedEnsemble,
    basis_state,
    ensembles_equal_as_density,
    fidelity,
    ghz,
    ket,
    vacuum,
)
from loqcsim.fusion import fuse_id_ghz, id_preservation_residuals, p_ii, type_ii_fuse
from loqcsim.ghz import (
    INPUT_MODES,
    OUTPUT_MODES,
    PAIRS,
    analytic_id_ghz,
    equivalence_residuals,
    closed_form_sector_weights,
    run_ghz_circuit,
    run_ghz_factory,
    sector_weights,
)
from loqcsim.thresholds import loss_tolerance_condition, measured_survival
from loqcsim.trees import TreeSpec, analytic_tree_cost, monte_carlo_tree_cost, tree_cost_bound


class Criterion:
    def __init__(self, number, title, budget_s):
        self.number = number
        self.title = title
        self.budget_s = budget_s
        self.failures = []
        self.checks = 0
        self.start = time.perf_counter()

    def check(self, ok, label):
        self.checks += 1
        if not ok:
            self.failures.append(label)

    def close(self, capsys):
        elapsed = time.perf_counter() - self.start
        if self.budget_s is not None:
            self.check(elapsed < self.budget_s, f"runtime {elapsed:.2f}s over {self.budget_s}s")
        status = "PASS" if not self.failures else "FAIL"
        line = f"[{status}] criterion {self.number}: {self.title} ({self.checks} checks, {elapsed:.2f}s)"
        if self.failures:
            line += " failed: " + "; ".join(self.failures[:5])
        with capsys.disabled():
            print("\n" + line)
        assert not self.failures, line


def photons_in(*modes):
    return WeightedEnsemble.pure(ket(*[f"H{i}" for i in modes], spatial=INPUT_MODES))


def single(i, sign):
    r = 2**-0.5
    return PureState.build({basis_state([(Mode(i, Pol.H), 1)]): r, basis_state([(Mode(i, Pol.V), 1)]): sign * r})


def bell(i, j, sign):
    r = 2**-0.5
    return PureState.build(
        {
            basis_state([(Mode(i, Pol.H), 1), (Mode(j, Pol.H), 1)]): r,
            basis_state([(Mode(i, Pol.V), 1), (Mode(j, Pol.V), 1)]): sign * r,
        }
    )


def test_criterion_1_ghz_factory_probabilities(capsys):
    c = Criterion(1, "GHZ factory exact probabilities", 1.0)
    tol = 1e-10
    ideal = run_ghz_factory(1.0, 1.0)
    c.check(abs(ideal.success_probability - 1 / 32) < tol, "total success 1/32")
    c.check(len(ideal.per_pattern) == 8, "eight heralding patterns")
    for pattern, pr in ideal.per_pattern.items():
        c.check(abs(pr.probability - 1 / 256) < tol, f"pattern {pattern} at 1/256")

    for missing in INPUT_MODES:
        r = run_ghz_circuit(photons_in(*[i for i in INPUT_MODES if i != missing]))
        c.check(abs(r.success_probability - 1 / 32) < tol, f"5 photons without {missing}")
        pair = next(p for p in PAIRS if missing in p)
        survivors = tuple(i for i in OUTPUT_MODES if i not in pair)
        for pr in r.per_pattern.values():
            ((_, s),) = pr.raw
            best = max(fidelity(bell(*survivors, sg), s) for sg in (1, -1))
            c.check(abs(best - 1) < tol, f"Bell output without {missing}")

    plus = minus = 0.0
    for a, b in itertools.product((1, 2), (3, 4)):
        r = run_ghz_circuit(photons_in(a, b, 5, 6))
        for pr in r.per_pattern.values():
            ((_, s),) = pr.raw
            plus += pr.probability * fidelity(single(5, 1), s)
            minus += pr.probability * fidelity(single(5, -1), s)
    c.check(abs(plus - 1 / 16) < tol, f"4 photons |+> weight {plus}")
    c.check(abs(minus - 1 / 16) < tol, f"4 photons |-> weight {minus}")

    total = 0.0
    for choice in itertools.product(*PAIRS):
        r = run_ghz_circuit(photons_in(*choice))
        total += r.success_probability
        if r.success_probability > 0:
            c.check(ensembles_equal_as_density(r.output, WeightedEnsemble.pure(vacuum(OUTPUT_MODES))), "3 photons leave vacuum")
    c.check(abs(total - 1 / 4) < tol, f"3 photons herald {total}")
    c.close(capsys)


def test_criterion_2_id_ghz_identity(capsys):
    c = Criterion(2, "heralded output is an ID-GHZ state", 5.0)
    multiplicity = {3: 1, 2: 6, 1: 6, 0: 1}
    for eta_s in (0.6, 0.7, 0.8, 0.9, 1.0):
        r = run_ghz_factory(eta_s, 1.0)
        s = eta_s / (2 - eta_s)
        c.check(r.density().max_abs_diff(analytic_id_ghz(s)) < 1e-10, f"density at eta_s={eta_s}")
        weights = sector_weights(r)
        per_term = closed_form_sector_weights(eta_s)
        for n, k in multiplicity.items():
            c.check(abs(weights[n] - k * per_term[n]) < 1e-15, f"sector {n} at eta_s={eta_s}")
    c.close(capsys)


def test_criterion_3_equivalence(capsys):
    c = Criterion(3, "source and detector loss are interchangeable", 10.0)
    for eta_s, eta_d in itertools.product((0.7, 0.85, 1.0), repeat=2):
        for name, res in equivalence_residuals(eta_s, eta_d).items():
            c.check(res < 1e-10, f"{name} at ({eta_s}, {eta_d}) = {res:.2e}")
    c.close(capsys)


def test_criterion_4_fusion(capsys):
    c = Criterion(4, "Type-II fusion statistics and ID preservation", 10.0)
    tol = 1e-10
    pure = WeightedEnsemble.pure
    bell_fuse = type_ii_fuse(pure(ghz((1, 2))), 2, pure(ghz((3, 4))), 3)
    c.check(abs(bell_fuse.success_probability - 0.5) < tol, "ideal success 1/2")
    r = type_ii_fuse(pure(ghz((1, 2, 3))), 3, pure(ghz((4, 5, 6))), 4)
    c.check(abs(r.success_probability - 0.5) < tol, "GHZ3 pair success 1/2")
    c.check(ensembles_equal_as_density(r.fused, pure(ghz((1, 2, 5, 6))), tol), "GHZ3 pair gives GHZ4")
    for eps, eta_d in itertools.product((0.0, 0.1, 0.25), (1.0, 0.9, 0.8)):
        fused, _ = fuse_id_ghz(2, 2, eps, eta_d)
        c.check(abs(fused.success_probability - p_ii(eps, eta_d)) < tol, f"p_ii at ({eps}, {eta_d})")
        c.check(abs(p_ii(eps, eta_d) - (1 - eps) ** 2 * eta_d**2 / 2) < tol, f"p_ii closed form ({eps}, {eta_d})")
    for (n, m), eps in itertools.product([(2, 2), (3, 2), (3, 3), (4, 3)], (0.0, 0.1, 0.25)):
        res = id_preservation_residuals(n, m, eps)
        c.check(max(res.values()) < tol, f"ID preservation n={n} m={m} eps={eps}")
    c.close(capsys)


def test_criterion_5_tree_costs(capsys):
    c = Criterion(5, "tree-cluster resource recursion", 60.0)
    specs = [(4,), (8,), (16,), (2, 4), (3, 4), (4, 4, 2)]
    probabilities = (0.3, 0.5, 0.8)
    for spec, p in itertools.product(specs, probabilities):
        tree = TreeSpec(spec)
        est = monte_carlo_tree_cost(tree, p, 1_000_000, 2024)
        dev = abs(est.mean_2trees - est.analytic_mean)
        c.check(dev <= 3 * est.std_error, f"MC {spec} p={p}: {dev / est.std_error:.2f} sigma")
        c.check(analytic_tree_cost(tree, p) <= tree_cost_bound(tree, p), f"bound {spec} p={p}")
    for l, p in itertools.product(range(1, 7), probabilities + (1.0,)):
        cost = analytic_tree_cost(TreeSpec((2**l,)), p)
        c.check(cost == pytest.approx((2 / p) ** (l - 1), rel=1e-15, abs=0), f"doubling law l={l} p={p}")
    c.close(capsys)


def test_criterion_6_threshold(capsys):
    c = Criterion(6, "loss-tolerance threshold", 1.0)
    values = np.linspace(0.0, 1.0, 101)
    mismatches = [
        (s, d) for s in values for d in values if loss_tolerance_condition(s, d) != (s * d > 2 / 3)
    ]
    c.check(not mismatches, f"{len(mismatches)} grid points disagree")
    c.check(abs(measured_survival(2 / 3, 1.0) - 0.5) < 1e-12, "boundary at eta_s=2/3")
    c.check(abs(measured_survival(1.0, 2 / 3) - 0.5) < 1e-12, "boundary at eta_d=2/3")
    c.check(abs(measured_survival(0.8, 2 / 3 / 0.8) - 0.5) < 1e-12, "boundary at eta_s=0.8")
    c.check(not loss_tolerance_condition(2 / 3, 1.0), "boundary itself is not tolerant")
    c.close(capsys)


def test_criterion_7_determinism(capsys, tmp_path):
    c = Criterion(7, "CLI outputs are byte-identical across runs", None)
    commands = [
        ["ghz-verify", "--eta-s", "0.9", "--eta-d", "0.8"],
        ["fusion-verify", "--epsilon", "0.1", "--eta-d", "0.9"],
        ["tree-cost", "--spec", "2,4", "--p-ii", "0.5", "--trials", "20000", "--seed", "17"],
        ["tree-cost", "--spec", "4,4,2", "--trials", "20000", "--seed", "3", "--format", "json"],
        ["threshold-sweep", "--eta-s", "0.5:1:6", "--eta-d", "0.6,0.8,1"],
    ]
    for i, argv in enumerate(commands):
        outputs = []
        for run in range(2):
            path = tmp_path / f"{i}_{run}.out"
            code = main(argv + ["--out", str(path)])
            c.check(code == 0, f"{argv[0]} exit {code}")
            outputs.append(path.read_bytes())
        c.check(outputs[0] == outputs[1] and len(outputs[0]) > 0, f"{' '.join(argv)} differs")
    capsys.readouterr()
    c.close(capsys)
