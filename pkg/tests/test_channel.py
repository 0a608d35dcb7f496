import numpy as np
import pytest
from hypothesis import given, settings as hypothesis_settings, strategies as st
from hypothesis.extra import numpy as hnp

from alignkit.channel import (
    BlockStructure,
    Channel,
    channel_image,
    compose_through,
    expected_embedding,
    expected_levels,
    is_deterministic_on,
    push_forward,
    restrict_channel,
)
from alignkit.errors import (
    DomainMismatchError,
    DomainValueError,
    EmptyRepresentationError,
    InputError,
    ScopeMismatchError,
)
from alignkit.scm import Domain, JointTable, interventional_distribution, joint_distribution


@pytest.fixture
def noisy_copy():
    b = Domain.binary()
    return Channel.from_rows([("G", b)], [("M", b)], [[0.9, 0.1], [0.2, 0.8]])


def test_rows_must_be_stochastic():
    b = Domain.binary()
    with pytest.raises(ValueError):
        Channel.from_rows([("G", b)], [("M", b)], [[0.9, 0.2], [0.5, 0.5]])
    with pytest.raises(ValueError):
        Channel.from_rows([("G", b)], [("G", b)], [[1.0, 0.0], [0.0, 1.0]])


def test_deterministic_channel_rows():
    t = Domain.of([0, 1, 2])
    ch = Channel.deterministic([("G", t)], [("M", t)], lambda g: [(int(g["G"]) + 1) % 3])

    np.testing.assert_allclose(ch.table, [[0, 1, 0], [0, 0, 1], [1, 0, 0]])
    assert channel_image(ch, {"G": 2}).as_dict() == {"M": "0"}
    assert is_deterministic_on(ch)


def test_deterministic_channel_rejects_unknown_label():
    t = Domain.of([0, 1, 2])
    with pytest.raises(DomainValueError):
        Channel.deterministic([("G", t)], [("M", t)], lambda g: [5])


def test_compose_matches_matrix_product(noisy_copy):
    b = Domain.binary()
    flip = Channel.from_rows([("M", b)], [("R", b)], [[0.0, 1.0], [1.0, 0.0]])
    composed = compose_through(noisy_copy, flip)

    assert composed.sources == ("G",)
    assert composed.targets == ("R",)
    np.testing.assert_allclose(composed.table, [[0.1, 0.9], [0.8, 0.2]])


def test_compose_requires_matching_ports(noisy_copy):
    with pytest.raises(ScopeMismatchError):
        compose_through(noisy_copy, noisy_copy)


def test_channel_from_scm_slices_interventions(chain_scm):
    ch = Channel.from_scm(chain_scm, ["A"], ["C"])
    np.testing.assert_allclose(ch.table[:, 1], [0.22, 0.42])

    observational = Channel.from_scm(chain_scm, [], ["C"])
    assert observational.table.shape == (1, 2)
    assert observational.table[0, 1] == pytest.approx(0.3)


def test_compose_through_scm_slice(chain_scm):
    b = Domain.binary()
    reader = Channel.from_rows([("C", b)], [("M", b)], [[1.0, 0.0], [0.0, 1.0]])
    composed = compose_through(chain_scm, reader, sources=["A"])
    np.testing.assert_allclose(composed.table[:, 1], [0.22, 0.42])


def test_push_forward_and_expectation(chain_scm, noisy_copy):
    prior = interventional_distribution(chain_scm, None, ["A"])
    renamed = Channel.from_rows([("A", Domain.binary())], [("M", Domain.binary())], noisy_copy.table)
    image = push_forward(prior, renamed)

    assert image.prob({"M": 1}) == pytest.approx(0.6 * 0.1 + 0.4 * 0.8)
    assert expected_levels(image)[0] == pytest.approx(0.38)


def test_push_forward_reorders_scope(chain_scm):
    joint = joint_distribution(chain_scm)
    b = Domain.binary()
    ch = Channel.deterministic(
        [("C", b), ("B", b), ("A", b)],
        [("S", Domain.of([0, 1, 2, 3]))],
        lambda g: [int(g["A"]) + int(g["C"]) * 2],
    )
    image = push_forward(joint, ch)
    assert image.prob({"S": 0}) == pytest.approx(joint.prob({"A": 0, "B": 0, "C": 0}) + joint.prob({"A": 0, "B": 1, "C": 0}))


def test_restrict_and_expected_embedding():
    b = Domain.binary()
    ch = Channel.deterministic([("G1", b), ("G2", b)], [("M1", b), ("M2", b)], lambda g: [g["G2"], g["G1"]])

    sliced = restrict_channel(ch, {"G1": 1}, ["M1"])
    assert sliced.sources == ("G2",)
    np.testing.assert_allclose(sliced.table, [[1, 0], [0, 1]])

    np.testing.assert_allclose(expected_embedding(ch, {"G1": 1, "G2": 0}), [0.0, 1.0])
    np.testing.assert_allclose(expected_embedding(ch, {"G1": 1, "G2": 0}, ["M2"]), [1.0])


def test_channel_image_is_none_for_spread_rows(noisy_copy):
    assert channel_image(noisy_copy, {"G": 0}) is None
    assert not is_deterministic_on(noisy_copy)


def test_moments_use_levels():
    temp = Domain.of([0, 50, 100])
    ch = Channel.from_rows([("G", Domain.binary())], [("M", temp)], [[0.5, 0.5, 0.0], [0.0, 0.0, 1.0]])
    np.testing.assert_allclose(ch.moments()[:, 0], [25.0, 100.0])


def test_block_structure_validation():
    blocks = BlockStructure(source_partition=[[0], [1]], target_partition=[[0, 2], [1]], pi=[0, 1])
    assert blocks.preimage([0]) == [0]
    assert blocks.target_indices([0]) == [0, 2]
    assert blocks.source_block_of(1) == 1
    assert blocks.source_block_of(5) is None

    with pytest.raises(ValueError):
        BlockStructure(source_partition=[[0], [0]], target_partition=[[0]], pi=[0])
    with pytest.raises(ValueError):
        BlockStructure(source_partition=[[0], [1]], target_partition=[[0], [1]], pi=[0, 0])
    with pytest.raises(ScopeMismatchError):
        blocks.check_against(2, 2)


def test_repeated_coordinates_are_rejected():
    b = Domain.binary()
    ch = Channel.identity_like([("G1", b), ("G2", b)], ["M1", "M2"])
    with pytest.raises(InputError) as exc_info:
        restrict_channel(ch, None, ["M1", "M1"])
    assert exc_info.value.reason == "repeated coordinates"
    with pytest.raises(EmptyRepresentationError):
        restrict_channel(ch, None, [])


def test_domains_must_agree_across_ports(noisy_copy):
    wide = Channel.from_rows([("M", Domain.of([0, 5]))], [("R", Domain.binary())], [[1.0, 0.0], [0.0, 1.0]])
    with pytest.raises(DomainMismatchError) as exc_info:
        compose_through(noisy_copy, wide)
    assert exc_info.value.reason == "domain mismatch"

    prior = JointTable(scope=("G",), domains=(Domain.of(["a", "b"]),), probs=[0.5, 0.5])
    with pytest.raises(DomainMismatchError):
        push_forward(prior, noisy_copy)


def _stochastic(shape):
    return hnp.arrays(np.float64, shape, elements=st.floats(min_value=0.01, max_value=1.0)).map(
        lambda a: a / a.sum(axis=-1, keepdims=True)
    )


@pytest.mark.property
@hypothesis_settings(max_examples=60, deadline=None)
@given(_stochastic((3,)), _stochastic((3, 2)), _stochastic((2, 4)))
def test_push_forward_through_a_composition(prior, first, second):
    g, x, m = Domain.of([0, 1, 2]), Domain.binary(), Domain.of([0, 1, 2, 3])
    ch1 = Channel.from_rows([("G", g)], [("X", x)], first)
    ch2 = Channel.from_rows([("X", x)], [("M", m)], second)
    dist = JointTable(scope=("G",), domains=(g,), probs=prior)

    stepwise = push_forward(push_forward(dist, ch1), ch2)
    composed = push_forward(dist, compose_through(ch1, ch2))
    np.testing.assert_allclose(stepwise.probs, composed.probs, atol=1e-9)


@pytest.mark.property
@hypothesis_settings(max_examples=60, deadline=None)
@given(_stochastic((2, 6)), st.floats(min_value=0.0, max_value=1.0))
def test_expected_embedding_is_affine_in_the_row(rows, weight):
    mixed = weight * rows[0] + (1.0 - weight) * rows[1]
    ch = Channel.from_rows(
        [("G", Domain.of([0, 1, 2]))],
        [("M1", Domain.of([0, 50, 100])), ("M2", Domain.binary())],
        np.vstack([rows, mixed]),
    )
    first = expected_embedding(ch, {"G": 0})
    second = expected_embedding(ch, {"G": 1})
    np.testing.assert_allclose(expected_embedding(ch, {"G": 2}), weight * first + (1.0 - weight) * second, atol=1e-12)
