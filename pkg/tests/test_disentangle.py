import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings as hypothesis_settings, strategies as st

from alignkit.channel import Channel
from alignkit.disentangle import (
    DivergenceKind,
    GmSystem,
    block_empida,
    block_pida,
    content_style_check,
    disentanglement_verdict,
    divergence,
    empida,
    empida_matrix,
    pida,
    pida_table,
)
from alignkit.errors import DivergenceSupportError, DomainValueError
from alignkit.scm import Domain, Scm


def _system(factors, fn, targets):
    sources = [(v.name, v.domain) for v in factors.variables]
    return GmSystem(factor_scm=factors, alpha=Channel.deterministic(sources, targets, fn))


@pytest.fixture
def identity_system(independent_factors):
    t = Domain.of([0, 1, 2])
    return _system(independent_factors, lambda g: [g["G1"], g["G2"]], [("M1", t), ("M2", t)])


@pytest.fixture
def gated_system():
    """M1 shows G2 only when G1 = 1; G1 is rarely 1."""
    b = Domain.binary()
    factors = Scm.build([("G1", b, [], [[0.9, 0.1]]), ("G2", b, [], [[0.5, 0.5]])])
    return _system(factors, lambda g: [g["G2"] if g["G1"] == "1" else 0], [("M1", b)])


def test_divergence_kinds():
    p = np.array([0.5, 0.5])
    q = np.array([0.9, 0.1])
    assert divergence(p, q, "tv") == pytest.approx(0.4)
    assert divergence(p, q, "kl") == pytest.approx(0.5 * math.log(0.5 / 0.9) + 0.5 * math.log(0.5 / 0.1))
    assert divergence(p, q, "mad", levels=np.array([[0.0], [1.0]])) == pytest.approx(0.4)
    assert DivergenceKind.parse("total_variation") is DivergenceKind.TOTAL_VARIATION
    with pytest.raises(DivergenceSupportError):
        divergence(p, np.array([1.0, 0.0]), "kl")


def test_identity_system_matrix(identity_system):
    matrix = empida_matrix(identity_system)
    np.testing.assert_allclose(matrix, [[0.0, 2 / 3], [2 / 3, 0.0]], atol=1e-12)

    verdict = disentanglement_verdict(matrix)
    assert verdict.verdict
    assert verdict.witness == [0, 1]
    assert verdict.score == pytest.approx(0.0, abs=1e-12)


def test_mixing_coordinate_breaks_disentanglement(independent_factors):
    t = Domain.of([0, 1, 2])
    sys = _system(
        independent_factors,
        lambda g: [(int(g["G1"]) + int(g["G2"])) % 3, g["G2"]],
        [("M1", t), ("M2", t)],
    )
    verdict = disentanglement_verdict(empida_matrix(sys))
    assert not verdict.verdict
    assert verdict.column_minima[0] == pytest.approx(2 / 3)
    assert verdict.column_minima[1] == pytest.approx(0.0, abs=1e-12)


def test_pida_point_values(identity_system):
    assert pida(identity_system, "G1", "M2", 0, {"G2": 1}) == pytest.approx(2 / 3)
    assert pida(identity_system, "G1", "M1", 2, {"G2": 0}) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(DomainValueError):
        pida(identity_system, "G1", "M1", 7, {"G2": 0})

    assert block_pida(identity_system, ["G1"], ["M1", "M2"], {"G1": 0}, {"G2": 1}) == pytest.approx(2 / 3)
    assert block_pida(identity_system, ["G1", "G2"], ["M1", "M2"], {"G1": 0, "G2": 1}, {}) == pytest.approx(0.0, abs=1e-12)


def test_mad_and_kl_divergences(identity_system):
    assert empida(identity_system, 0, 1, "mad") == pytest.approx(1.0)
    assert empida(identity_system, 0, 0, "kl") == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(DivergenceSupportError):
        empida(identity_system, 0, 1, "kl")


def test_expectation_weighting(gated_system):
    observational = empida(gated_system, "G1", "M1", expectation="observational")
    uniform = empida(gated_system, "G1", "M1", expectation="uniform")
    assert observational == pytest.approx(0.1 * 0.5)
    assert uniform == pytest.approx(0.5 * 0.5)


def test_restricted_support_truncates_style(gated_system):
    assert block_empida(gated_system, ["G1"], ["M1"], support={"G2": [0]}) == pytest.approx(0.0, abs=1e-12)
    table = pida_table(gated_system, ["G1"], ["M1"], expectation="uniform")
    np.testing.assert_allclose(table.worst, [0.0, 0.5])


def test_partial_intervention_uses_the_factor_scm():
    b = Domain.binary()
    factors = Scm.build([("G1", b, [], [[0.5, 0.5]]), ("G2", b, ["G1"], [[1.0, 0.0], [0.0, 1.0]])])
    sys = _system(factors, lambda g: [g["G1"], g["G2"]], [("M1", b), ("M2", b)])

    # G2 copies G1, so do(G1) alone already pins the mixture over G2
    assert empida(sys, "G1", "M2") == pytest.approx(1.0)
    assert empida(sys, "G2", "M1") == pytest.approx(0.5)


def test_content_style_check(identity_system):
    assert content_style_check(identity_system, ["G1"], ["M1"])
    assert not content_style_check(identity_system, ["G1"], ["M1", "M2"])
    assert block_empida(identity_system, ["G1", "G2"], ["M1", "M2"]) == pytest.approx(0.0, abs=1e-12)


def test_from_observation_precomposes(independent_factors):
    t = Domain.of([0, 1, 2])
    x = Channel.identity_like([("G1", t), ("G2", t)], ["X1", "X2"])
    m = Channel.deterministic([("X1", t), ("X2", t)], [("M", t)], lambda v: [v["X2"]])
    sys = GmSystem.from_observation(independent_factors, x, m)

    assert sys.factors == ("G1", "G2")
    assert sys.targets == ("M",)
    assert empida(sys, "G2", "M") == pytest.approx(0.0, abs=1e-12)


def test_verdict_ties_pick_lowest_factor():
    verdict = disentanglement_verdict([[0.0, 0.3], [0.0, 0.3]], eps=0.5)
    assert verdict.witness == [0, 0]
    assert verdict.verdict
    assert disentanglement_verdict(np.zeros((0, 0))).verdict


def _random_factors(rng, sizes):
    domains = [Domain.of(list(range(s))) for s in sizes]
    entries = []
    for k, size in enumerate(sizes):
        parents = [p for p in range(k) if rng.random() < 0.5]
        n_rows = math.prod(sizes[p] for p in parents)
        rows = rng.dirichlet(np.ones(size), size=n_rows)
        entries.append((f"G{k}", domains[k], [f"G{p}" for p in parents], rows))
    return Scm.build(entries), domains


def _factorized_alpha(rng, sizes, domains):
    targets = [(f"M{j}", Domain.of(list(range(int(rng.integers(2, 4)))))) for j in range(len(sizes))]
    per_coordinate = [rng.dirichlet(np.ones(dom.size), size=sizes[j]) for j, (_, dom) in enumerate(targets)]
    rows = []
    for g in itertools.product(*(range(s) for s in sizes)):
        row = np.ones(1)
        for j, table in enumerate(per_coordinate):
            row = np.kron(row, table[g[j]])
        rows.append(row)
    sources = [(f"G{k}", domains[k]) for k in range(len(sizes))]
    return Channel.from_rows(sources, targets, np.vstack(rows))


def _mixing_alpha(rng, sizes, domains):
    sources = [(f"G{k}", domains[k]) for k in range(len(sizes))]
    targets = [
        ("M0", Domain.of(list(range(sizes[1])))),
        ("M1", domains[1]),
        ("M2", domains[2]),
    ]
    return Channel.deterministic(
        sources,
        targets,
        lambda g: [(int(g["G0"]) + int(g["G1"])) % sizes[1], g["G1"], g["G2"]],
    )


@pytest.mark.property
def test_disentanglement_equivalence_battery():
    for seed in range(100):
        rng = np.random.default_rng(seed)
        sizes = [int(s) for s in rng.integers(2, 4, size=3)]
        factors, domains = _random_factors(rng, sizes)
        if seed < 50:
            sys = GmSystem(factor_scm=factors, alpha=_factorized_alpha(rng, sizes, domains))
            verdict = disentanglement_verdict(empida_matrix(sys))
            assert verdict.score < 1e-9, seed
        else:
            sys = GmSystem(factor_scm=factors, alpha=_mixing_alpha(rng, sizes, domains))
            verdict = disentanglement_verdict(empida_matrix(sys))
            assert verdict.column_minima[0] >= 1e-3, seed
            assert not verdict.verdict


_rows = st.lists(st.floats(min_value=0.0, max_value=1.0), min_size=4, max_size=4).filter(lambda r: sum(r) > 0.01)


@pytest.mark.property
@hypothesis_settings(max_examples=60, deadline=None)
@given(_rows, _rows)
def test_total_variation_is_a_bounded_metric(a, b):
    p = np.array(a) / sum(a)
    q = np.array(b) / sum(b)
    tv = divergence(p, q, "tv")
    assert 0.0 <= tv <= 1.0 + 1e-12
    assert tv == pytest.approx(divergence(q, p, "tv"), abs=1e-15)
    assert divergence(p, p, "tv") == 0.0


def _relabelled(g_labels, g_levels, m_labels, m_levels, prior, child, alpha):
    g1 = Domain.of(g_labels, g_levels, ordered=False)
    m1 = Domain.of(m_labels, m_levels, ordered=False)
    b = Domain.binary()
    factors = Scm.build([("G1", g1, [], [prior]), ("G2", b, ["G1"], child)])
    return GmSystem(factor_scm=factors, alpha=Channel.from_rows([("G1", g1), ("G2", b)], [("M1", m1), ("M2", b)], alpha))


@pytest.mark.parametrize("seed", range(5))
@pytest.mark.parametrize("kind", ["tv", "mad"])
def test_empida_ignores_relabelling_of_values(seed, kind):
    rng = np.random.default_rng(seed)
    prior, child = rng.dirichlet(np.ones(3)), rng.dirichlet(np.ones(2), size=3)
    alpha = rng.dirichlet(np.ones(6), size=6)
    labels, levels = ["a", "b", "c"], [0.0, 1.0, 2.0]
    perm = [2, 0, 1]
    base = _relabelled(labels, levels, ["x", "y", "z"], [0.0, 1.0, 5.0], prior, child, alpha)

    # same factor values listed in another order; CPTs and alpha rows follow
    factor_perm = _relabelled(
        [labels[k] for k in perm],
        [levels[k] for k in perm],
        ["x", "y", "z"],
        [0.0, 1.0, 5.0],
        prior[perm],
        child[perm],
        alpha.reshape(3, 2, 6)[perm].reshape(6, 6),
    )
    # same representation values listed in another order; alpha columns follow
    target_perm = _relabelled(
        labels,
        levels,
        [["x", "y", "z"][k] for k in perm],
        [[0.0, 1.0, 5.0][k] for k in perm],
        prior,
        child,
        alpha.reshape(6, 3, 2)[:, perm, :].reshape(6, 6),
    )

    for expectation in ("observational", "uniform"):
        reference = empida_matrix(base, kind, expectation=expectation)
        np.testing.assert_allclose(empida_matrix(factor_perm, kind, expectation=expectation), reference, atol=1e-12)
        np.testing.assert_allclose(empida_matrix(target_perm, kind, expectation=expectation), reference, atol=1e-12)
