"""Acceptance criteria, one test each.

Every test prints a single ``criterion N: PASS|FAIL ...`` line (shown even
without ``-s``) and then asserts.  Run with ``pytest tests/test_acceptance.py``.
"""
import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

from abstract_mixing import serialization
from abstract_mixing.adapters import (
    build_embedding_Jmu,
    build_linear_instance,
    build_lipschitz_instance,
    classical_linear_mixing,
    classical_lipschitz_mixing,
    linear_codomain_rows,
    lipschitz_codomain_rows,
    random_linear_spec,
    random_lipschitz_spec,
)
from abstract_mixing.cli import bundled_dir, main
from abstract_mixing.core_model import ExponentParams, SimplexMeasure
from abstract_mixing.mixed_families import (
    MixedFamilyValues,
    mixed_norm_closed_qq,
    mixed_norm_sup_measure,
    mixed_norm_tau_search,
    tau_from_measure,
)
from abstract_mixing.mixing import (
    SeminormBallModel,
    check_composition_mixing,
    check_composition_summing,
    check_inclusion,
    check_seminorm_characterization,
    extremal_vectors,
    mixing_lower_bound,
    mixing_upper_domination,
    random_instance,
    random_two_layer,
)
from abstract_mixing.multilinear import (
    characterization_lhs,
    from_instance,
    multi_characterization_check,
    multi_mixing_lower_bound,
    random_multilinear,
    reduce_t1,
    reduced_exponents,
)
from abstract_mixing.summing import pietsch_norm_lp, summing_ratio, witness_from_dual

ARTIFACTS = Path("counterexamples")


@pytest.fixture
def verdict(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, f"criterion {n}: {detail}"
    return emit


def rel(a, b):
    return 0.0 if a == b else abs(a - b) / max(abs(a), abs(b))


def test_criterion_01_lp_duality(verdict):
    t0 = time.perf_counter()
    gap = wit = 0.0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        inst = random_instance(rng, nA=int(rng.integers(1, 5)), nC=int(rng.integers(1, 3)),
                               nG=int(rng.integers(1, 3)), nK=int(rng.integers(1, 6)), nW=1)
        p = float(rng.choice([0.5, 1.0, 2.0]))
        cert = pietsch_norm_lp(inst, p)
        if cert.delta == 0:
            continue
        dual_value = float(np.sum(cert.dual * np.abs(inst.Q.reshape(-1)) ** p))
        gap = max(gap, rel(cert.lp_value, dual_value))
        fam = witness_from_dual(cert.dual, p, inst.probe_shape)
        wit = max(wit, rel(summing_ratio(inst, fam, p), cert.delta))
    dt = time.perf_counter() - t0
    verdict(1, gap <= 1e-9 and wit <= 1e-6 and dt < 5.0,
            f"duality gap {gap:.2e} (<=1e-9), witness {wit:.2e} (<=1e-6), {dt:.2f}s (<5s)")


def test_criterion_02_closed_form_limit(verdict):
    worst = 0.0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        m, nW = int(rng.integers(1, 7)), int(rng.integers(1, 5))
        vals = MixedFamilyValues(rng.uniform(0.2, 2.0, m), rng.uniform(0.0, 1.0, (m, nW)))
        q = float(rng.uniform(0.5, 3.0))
        worst = max(worst, rel(mixed_norm_closed_qq(vals, q),
                               mixed_norm_sup_measure(vals, ExponentParams(q, q + 1e-9)).value))
    verdict(2, worst <= 1e-4, f"max relative difference {worst:.2e} (<=1e-4)")


def test_criterion_03_measure_equals_tau(verdict):
    search = recon = 0.0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        m, nW = int(rng.integers(1, 7)), int(rng.integers(1, 5))
        vals = MixedFamilyValues(rng.uniform(0.2, 2.0, m) * rng.choice([-1, 1], m), rng.uniform(0.0, 1.0, (m, nW)))
        q = float(rng.uniform(0.5, 2.0))
        e = ExponentParams(q, q + float(rng.uniform(0.3, 2.5)))
        res = mixed_norm_sup_measure(vals, e)
        search = max(search, rel(res.value, mixed_norm_tau_search(vals, e, 4, seed)))
        _, prod = tau_from_measure(vals, e, res.mu_star, 1e-9)
        recon = max(recon, rel(res.value, prod))
    canon = mixed_norm_sup_measure(MixedFamilyValues([1.0, 1.0], [[1.0, 0.0], [0.0, 1.0]]), ExponentParams(1.0, 2.0))
    err = abs(canon.value - math.sqrt(2))
    verdict(3, search <= 1e-5 and recon <= 1e-5 and err <= 1e-9,
            f"tau search {search:.2e} (<=1e-5), tau from mu* {recon:.2e} (<=1e-5), sqrt2 error {err:.1e} (<=1e-9)")


def test_criterion_04_domination_sandwich(verdict):
    t0 = time.perf_counter()
    worst = viol = excess = 0.0
    e = ExponentParams(1.0, 2.0)
    for seed in range(50):
        rng = np.random.default_rng(seed)
        inst = random_instance(rng, nA=int(rng.integers(1, 4)), nK=int(rng.integers(1, 5)), nW=int(rng.integers(1, 3)))
        res = mixing_upper_domination(inst, e, 10)
        lower, _ = mixing_lower_bound(inst, e, None, 100, seed, [res.witness])
        excess = max(excess, lower - res.value)
        worst = max(worst, rel(lower, res.value))
        viol = max(viol, res.certificate.max_violation)
    dt = time.perf_counter() - t0
    verdict(4, worst <= 0.05 and excess <= 1e-6 and viol <= 1e-9 and dt < 60,
            f"relative gap {worst:.2e} (<=5%), lower-upper {excess:.1e} (<=1e-6), "
            f"certificate violation {viol:.1e} (<=1e-9), {dt:.1f}s (<60s)")


def test_criterion_05_seminorm_coherence(verdict):
    e = ExponentParams(1.0, 2.0)
    worst = 0.0
    for seed in range(20):
        rng = np.random.default_rng(seed)
        ball = SeminormBallModel.linf(rng.uniform(-1.0, 1.0, (2, 1, 1, 2)))
        inst = ball.instance(rng.uniform(0, 1, (2, 1, 1)), rng.uniform(0.05, 1.0, (2, 1, 1, 3)))
        res = mixing_upper_domination(inst, e, 10)
        cand = [(res.witness, extremal_vectors(ball, res.worst_mu, e.s))]
        char = check_seminorm_characterization(inst, ball, e, None, res.value, 200, seed, cand)
        worst = max(worst, rel(char.max_ratio, res.value))
    verdict(5, worst <= 1e-4, f"max relative difference {worst:.2e} (<=1e-4)")


def _save_counterexample(name, seed, obj):
    ARTIFACTS.mkdir(exist_ok=True)
    path = ARTIFACTS / f"{name}_seed{seed}.json"
    serialization.save(obj, path)
    return path


def test_criterion_06_composition_inequalities(verdict):
    e = ExponentParams(1.0, 2.0)
    worst = {"composition_summing": 0.0, "inclusion": 0.0, "composition_mixing": 0.0}
    tol = {"composition_summing": 1e-6, "inclusion": 1e-5, "composition_mixing": 1e-5}
    bad = []
    for seed in range(100):
        two = random_two_layer(np.random.default_rng([seed, 6]))
        inst = random_instance(np.random.default_rng([seed, 5]))
        checks = {
            "composition_summing": (check_composition_summing(two, e, 10, tol["composition_summing"]), two),
            "inclusion": (check_inclusion(inst, ExponentParams(1.0, 3.0), ExponentParams(1.5, 2.0), 10,
                                          tol["inclusion"]), inst),
            "composition_mixing": (check_composition_mixing(two, 1.0, 2.0, 4.0, 10, tol["composition_mixing"]), two),
        }
        for name, (res, obj) in checks.items():
            if res.rhs > 0:
                worst[name] = max(worst[name], (res.lhs - res.rhs) / res.rhs)
            if not res.holds:
                bad.append(str(_save_counterexample(name, seed, obj)))
    detail = ", ".join(f"{k} max excess {v:.1e} (<={tol[k]:g})" for k, v in worst.items())
    if bad:
        detail += "; counterexamples: " + ", ".join(bad)
    verdict(6, not bad, detail)


def test_criterion_07_multilinear_reduction(verdict):
    red = 0.0
    e = ExponentParams(1.0, 2.0)
    for seed in range(20):
        rng = np.random.default_rng(seed)
        ball = SeminormBallModel.linf(rng.uniform(-1.0, 1.0, (3, 2, 1, 2)))
        inst = ball.instance(np.zeros((3, 2, 1)), rng.uniform(0.05, 1.0, (3, 2, 1, 3)))
        mi = from_instance(inst, e)
        a, _ = mixing_lower_bound(inst, e, None, 50, seed)
        b, _ = multi_mixing_lower_bound(mi, 50, seed)
        c, _ = mixing_lower_bound(reduce_t1(mi), reduced_exponents(mi), None, 50, seed)
        ca = check_seminorm_characterization(inst, ball, e, None, math.inf, 50, seed).max_ratio
        cb = multi_characterization_check(mi, ball, math.inf, 50, seed).max_ratio
        red = max(red, abs(a - b), abs(a - c), abs(ca - cb))
    boundary = 0.0
    for seed in range(20):
        rng = np.random.default_rng(seed)
        ball = SeminormBallModel.linf(rng.uniform(-1.0, 1.0, (4, 1, 2, 2)))
        q = float(rng.uniform(0.5, 3.0))
        mi = random_multilinear(rng, e=ExponentParams(q, q), ball=ball)
        _, fam = multi_mixing_lower_bound(mi, 20, seed)
        vecs = rng.normal(size=(3, 2))
        boundary = max(boundary, rel(characterization_lhs(ball, mi.as_family(fam), vecs, q, q, "equal"),
                                     characterization_lhs(ball, mi.as_family(fam), vecs, q, q, "general")))
        boundary = max(boundary, rel(multi_characterization_check(mi, ball, math.inf, 30, seed, path="equal").max_ratio,
                                     multi_characterization_check(mi, ball, math.inf, 30, seed,
                                                                  path="general").max_ratio))
    verdict(7, red <= 1e-12 and boundary <= 1e-9,
            f"t=1 reduction difference {red:.1e} (<=1e-12), case boundary {boundary:.1e} (<=1e-9)")


def _adapter_specs():
    data = bundled_dir()
    lin = [serialization.load(data / "linear.json").obj]
    lip = [serialization.load(data / "lipschitz.json").obj]
    for seed in range(20):
        rng = np.random.default_rng(seed)
        lin.append(random_linear_spec(rng, nE=int(rng.integers(1, 4)), nF=int(rng.integers(1, 4))))
        lip.append(random_lipschitz_spec(rng, nX=int(rng.integers(2, 5)), nY=int(rng.integers(2, 5))))
    return lin, lip


def test_criterion_08_embedding_norm_one(verdict):
    lin, lip = _adapter_specs()
    worst, count = 0.0, 0
    e_s = 2.0
    cases = [(build_linear_instance(s), linear_codomain_rows(s)) for s in lin]
    cases += [(build_lipschitz_instance(s), lipschitz_codomain_rows(s)) for s in lip]
    for i, (inst, rows) in enumerate(cases):
        if not np.any(inst.M):
            continue
        rng = np.random.default_rng(i)
        for mu in (SimplexMeasure.uniform(inst.nW), SimplexMeasure.normalized(rng.uniform(0.1, 1.0, inst.nW))):
            _, pi = build_embedding_Jmu(inst, mu, e_s, rows)
            worst = max(worst, abs(pi - 1.0))
            count += 1
    verdict(8, worst <= 1e-9 and count > 0, f"max |pi - 1| {worst:.1e} (<=1e-9) over {count} instance/measure pairs")


def test_criterion_09_classical_coherence(verdict):
    worst_lin = worst_lip = 0.0
    for seed in range(20):
        rng = np.random.default_rng(seed)
        lin = random_linear_spec(rng)
        lip = random_lipschitz_spec(rng)
        worst_lin = max(worst_lin, rel(mixing_upper_domination(build_linear_instance(lin), ExponentParams(1.0, 2.0),
                                                               10).value,
                                       classical_linear_mixing(lin, 1.0, 2.0, 10)))
        worst_lip = max(worst_lip, rel(mixing_upper_domination(build_lipschitz_instance(lip),
                                                               ExponentParams(1.0, 2.0), 10).value,
                                       classical_lipschitz_mixing(lip, 1.0, 2.0, 10)))
    verdict(9, worst_lin <= 1e-6 and worst_lip <= 1e-6,
            f"linear {worst_lin:.1e}, Lipschitz {worst_lip:.1e} (both <=1e-6)")


def test_criterion_10_determinism(verdict, tmp_path):
    outs, codes = [], []
    for k in range(2):
        path = tmp_path / f"run{k}.csv"
        codes.append(main(["verify-suite", "--seed", "42", "--report", "csv", "--out", str(path)]))
        outs.append(path.read_bytes())
    same = outs[0] == outs[1]
    verdict(10, same and codes == [0, 0], f"byte-identical reports: {same}, exit codes {codes}")
