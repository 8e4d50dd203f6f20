"""Property checks run by ``verify-suite``.

Each check yields a ``PropertyResult`` with the measured discrepancy and the
tolerance it is held to.  Random draws come from ``default_rng([seed, i])``
with a fixed ``i`` per check, so results depend only on the seed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import serialization
from .adapters import (
    build_embedding_Jmu,
    build_lipschitz_instance,
    build_linear_instance,
    classical_linear_mixing,
    classical_lipschitz_mixing,
    linear_codomain_rows,
    lipschitz_codomain_rows,
)
from .core_model import ExponentParams, SimplexMeasure
from .mixed_families import (
    MixedFamilyValues,
    mixed_norm_closed_qq,
    mixed_norm_sup_measure,
    mixed_norm_tau_search,
    tau_objective,
)
from .mixing import (
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
from .multilinear import (
    from_instance,
    multi_characterization_check,
    multi_mixing_lower_bound,
    reduce_t1,
    reduced_exponents,
)
from .summing import pietsch_norm_lp, summing_ratio, witness_from_dual


@dataclass(frozen=True)
class PropertyResult:
    name: str
    discrepancy: float
    tolerance: float
    anchor: str

    @property
    def ok(self):
        return bool(self.discrepancy <= self.tolerance)


def _rel(a, b):
    if a == b:
        return 0.0
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


def _load(data_dir, name):
    return serialization.load(data_dir / name)


def check_lp_duality(seed, n=10):
    worst_gap = worst_wit = 0.0
    rng = np.random.default_rng([seed, 1])
    for _ in range(n):
        inst = random_instance(rng, nA=int(rng.integers(1, 5)), nC=2, nG=2, nK=int(rng.integers(1, 6)), nW=1)
        p = float(rng.choice([0.5, 1.0, 2.0]))
        cert = pietsch_norm_lp(inst, p)
        if cert.delta == 0:
            continue
        dual_value = float(np.sum(cert.dual * np.abs(inst.Q.reshape(-1)) ** p))
        worst_gap = max(worst_gap, _rel(cert.lp_value, dual_value))
        fam = witness_from_dual(cert.dual, p, inst.probe_shape)
        worst_wit = max(worst_wit, _rel(summing_ratio(inst, fam, p), cert.delta))
    return worst_gap, worst_wit


def check_closed_form(seed, n=10):
    rng = np.random.default_rng([seed, 2])
    worst = 0.0
    for _ in range(n):
        m, nW = int(rng.integers(1, 7)), int(rng.integers(1, 5))
        vals = MixedFamilyValues(rng.uniform(0.2, 2.0, m), rng.uniform(0.0, 1.0, (m, nW)))
        q = float(rng.uniform(0.5, 3.0))
        worst = max(worst, _rel(mixed_norm_closed_qq(vals, q),
                                mixed_norm_sup_measure(vals, ExponentParams(q, q + 1e-9)).value))
    return worst


def check_measure_tau(seed, family, n=4):
    rng = np.random.default_rng([seed, 3])
    worst = 0.0
    cases = [(family.obj, ExponentParams(1.0, 2.0))]
    for _ in range(n):
        m, nW = int(rng.integers(1, 6)), int(rng.integers(1, 4))
        vals = MixedFamilyValues(rng.uniform(0.2, 2.0, m), rng.uniform(0.0, 1.0, (m, nW)))
        cases.append((vals, ExponentParams(1.0, float(rng.uniform(1.5, 4.0)))))
    canonical = 0.0
    for i, (vals, e) in enumerate(cases):
        res = mixed_norm_sup_measure(vals, e)
        worst = max(worst, _rel(res.value, mixed_norm_tau_search(vals, e, restarts=2)))
        worst = max(worst, _rel(res.value, tau_objective(vals, e, res.tau)))
        if i == 0:
            canonical = abs(res.value - math.sqrt(2.0))
    return worst, canonical


def check_sandwich(seed, identity, samples, grid_depth, n=4):
    rng = np.random.default_rng([seed, 4])
    e = ExponentParams(1.0, 2.0)
    insts = [(identity.obj, ExponentParams(1.0, 1.0))] + [
        (random_instance(rng, nA=2, nC=1, nG=1, nK=3, nW=2), e) for _ in range(n)]
    excess = rel_gap = viol = 0.0
    ident = 0.0
    for i, (inst, ee) in enumerate(insts):
        res = mixing_upper_domination(inst, ee, grid_depth)
        lower, _ = mixing_lower_bound(inst, ee, None, samples, seed, [res.witness])
        excess = max(excess, lower - res.value)
        rel_gap = max(rel_gap, _rel(lower, res.value))
        viol = max(viol, res.certificate.max_violation)
        if i == 0:
            ident = abs(res.value - 1.0)
    return excess, rel_gap, viol, ident


def check_seminorm(seed, ball_file, samples, grid_depth):
    inst, ball = ball_file.obj, ball_file.ball
    e = ExponentParams(1.0, 2.0)
    res = mixing_upper_domination(inst, e, grid_depth)
    cand = [(res.witness, extremal_vectors(ball, res.worst_mu, e.s))]
    char = check_seminorm_characterization(inst, ball, e, None, res.value, samples, seed, cand)
    return _rel(char.max_ratio, res.value)


def check_compositions(seed, two_file, grid_depth, n=3):
    rng = np.random.default_rng([seed, 6])
    twos = [two_file.obj] + [random_two_layer(rng) for _ in range(n)]
    c53 = c56 = 0.0
    for two in twos:
        r = check_composition_summing(two, ExponentParams(1.0, 2.0), grid_depth)
        c53 = max(c53, (r.lhs - r.rhs) / max(r.rhs, 1e-300))
        r = check_composition_mixing(two, 1.0, 2.0, 4.0, grid_depth)
        c56 = max(c56, (r.lhs - r.rhs) / max(r.rhs, 1e-300))
    c55 = 0.0
    for _ in range(n + 1):
        inst = random_instance(rng, nA=2, nC=1, nG=1, nK=3, nW=2)
        r = check_inclusion(inst, ExponentParams(1.0, 3.0), ExponentParams(1.5, 2.0), grid_depth)
        c55 = max(c55, (r.lhs - r.rhs) / max(r.rhs, 1e-300))
    return c53, c55, c56


def check_multilinear(seed, identity, multi_file, samples):
    inst = identity.obj
    e = ExponentParams(1.0, 2.0)
    mi = from_instance(inst, e)
    a, _ = mixing_lower_bound(inst, e, None, samples, seed)
    b, _ = multi_mixing_lower_bound(mi, samples, seed)
    red = reduce_t1(mi)
    c, _ = mixing_lower_bound(red, reduced_exponents(mi), None, samples, seed)
    reduction = max(abs(a - b), abs(a - c))
    mm, ball = multi_file.obj, multi_file.ball
    lower, _ = multi_mixing_lower_bound(mm, samples, seed)
    over = max(multi_characterization_check(mm, ball, lower, samples, seed).max_ratio - lower, 0.0)
    return reduction, over


def check_adapters(seed, lin_file, lip_file, grid_depth):
    e = ExponentParams(1.0, 2.0)
    emb = coh = 0.0
    for loaded, build, classical, rows in (
        (lin_file, build_linear_instance, classical_linear_mixing, linear_codomain_rows),
        (lip_file, build_lipschitz_instance, classical_lipschitz_mixing, lipschitz_codomain_rows),
    ):
        spec = loaded.obj
        inst = build(spec)
        _, pi = build_embedding_Jmu(inst, SimplexMeasure.uniform(inst.nW), e.s, rows(spec))
        emb = max(emb, abs(pi - 1.0))
        generic = mixing_upper_domination(inst, e, grid_depth).value
        coh = max(coh, _rel(generic, classical(spec, e.q, e.s, grid_depth)))
    return emb, coh


def run_suite(seed, data_dir, samples=200, grid_depth=10, tol_scale=1.0):
    """Yield every property result in a fixed order."""
    identity = _load(data_dir, "identity.json")
    family = _load(data_dir, "family.json")
    ball = _load(data_dir, "ball.json")
    two = _load(data_dir, "two_layer.json")
    multi = _load(data_dir, "multilinear.json")
    lin = _load(data_dir, "linear.json")
    lip = _load(data_dir, "lipschitz.json")
    samples = min(samples, 100)

    def res(name, value, tol, anchor):
        return PropertyResult(name, float(value), tol * tol_scale, anchor)

    gap, wit = check_lp_duality(seed)
    yield res("lp_strong_duality", gap, 1e-9, "summing norm LP duality")
    yield res("lp_dual_witness", wit, 1e-6, "summing norm LP duality")
    yield res("closed_form_q_eq_s", check_closed_form(seed), 1e-4, "mixed norm q = s closed form")
    worst, canonical = check_measure_tau(seed, family)
    yield res("measure_tau_equality", worst, 1e-5, "mixed norm measure and tau forms")
    yield res("canonical_sqrt2", canonical, 1e-9, "mixed norm worked example")
    excess, rel_gap, viol, ident = check_sandwich(seed, identity, samples, grid_depth)
    yield res("sandwich_lower_le_upper", excess, 1e-6, "mixing constant sandwich")
    yield res("sandwich_relative_gap", rel_gap, 0.05, "mixing constant sandwich")
    yield res("domination_certificate", viol, 1e-9, "measure domination certificate")
    yield res("identity_constant", ident, 1e-9, "identity kernels")
    yield res("seminorm_coherence", check_seminorm(seed, ball, samples, grid_depth), 1e-4,
              "seminorm-ball characterization")
    c53, c55, c56 = check_compositions(seed, two, grid_depth)
    yield res("composition_summing", c53, 1e-6, "summing after mixing composition")
    yield res("inclusion", c55, 1e-5, "inclusion between mixing classes")
    yield res("composition_mixing", c56, 1e-5, "mixing after mixing composition")
    reduction, over = check_multilinear(seed, identity, multi, samples)
    yield res("multilinear_t1_reduction", reduction, 1e-12, "multilinear one-factor reduction")
    yield res("multilinear_characterization", over, 1e-9, "multilinear seminorm-ball characterization")
    emb, coh = check_adapters(seed, lin, lip, grid_depth)
    yield res("embedding_norm_one", emb, 1e-9, "L_s(mu) evaluation map")
    yield res("classical_coherence", coh, 1e-6, "operator and Lipschitz criteria")
