"""Pinned desk-scale scenarios shipped with the tool."""

from __future__ import annotations

import itertools
from typing import Any, Callable, Sequence

from ..errors import UnknownScenarioError
from .models import (
    BlockSpec,
    ChannelSpec,
    DistributionSpec,
    DomainSpec,
    Label,
    PortSpec,
    ScenarioSpec,
    ScmSpec,
    VariableSpec,
    WorldSpec,
)

THIRD = 1 / 3


def _port(name: str, domain: str) -> PortSpec:
    return PortSpec(name=name, domain=domain)


def _copy(
    domains: dict[str, DomainSpec],
    sources: Sequence[PortSpec],
    targets: Sequence[PortSpec],
    fn: Callable[[dict[str, Any]], Sequence[Label]] | None = None,
) -> ChannelSpec:
    """Deterministic channel; copies sources into targets unless ``fn`` says otherwise."""
    names = [p.name for p in sources]
    grid = itertools.product(*(domains[p.domain].values for p in sources))  # type: ignore[index]
    images = []
    for row in grid:
        values = dict(zip(names, row))
        images.append(list(fn(values)) if fn else list(row))
    return ChannelSpec(sources=list(sources), targets=list(targets), map=images)


def _singletons(n: int) -> BlockSpec:
    return BlockSpec(
        source_partition=[[k] for k in range(n)],
        target_partition=[[k] for k in range(n)],
        pi=list(range(n)),
    )


def _toy(name: str, description: str, permutation: Sequence[int]) -> WorldSpec:
    domains = {"tern": DomainSpec(values=[0, 1, 2])}
    factors = ScmSpec(
        variables=[
            VariableSpec(name="G1", domain="tern", cpt=[[THIRD, THIRD, THIRD]]),
            VariableSpec(name="G2", domain="tern", cpt=[[THIRD, THIRD, THIRD]]),
        ]
    )
    alpha = _copy(
        domains,
        [_port("G1", "tern"), _port("G2", "tern")],
        [_port("M1", "tern"), _port("M2", "tern")],
        lambda g: [permutation[g["G1"]], permutation[g["G2"]]],
    )
    return WorldSpec(
        name=name,
        domains=domains,
        scms={"factors": factors},
        channels={"alpha": alpha},
        blocks={"singletons": _singletons(2)},
        scenario=ScenarioSpec(
            description=description,
            factor_scm="factors",
            alpha="alpha",
            interpretable=["G1", "G2"],
            blocks="singletons",
        ),
    )


def identity_toy() -> WorldSpec:
    return _toy("identity-toy", "each representation copies its factor", [0, 1, 2])


def shuffle_toy() -> WorldSpec:
    return _toy(
        "shuffle-toy",
        "disentangled but not aligned: values 0 and 1 swap in every coordinate",
        [1, 0, 2],
    )


def _dsprites(name: str, description: str, q_pos: list[float]) -> WorldSpec:
    domains = {
        "shape": DomainSpec(values=["square", "ellipse"]),
        "size": DomainSpec(values=["small", "large"]),
        "pos": DomainSpec(values=[-2, -1, 0, 1, 2]),
        "bin": DomainSpec(values=[0, 1]),
    }
    factors = ScmSpec(
        variables=[
            VariableSpec(name="shape", domain="shape", cpt=[[0.5, 0.5]]),
            VariableSpec(name="size", domain="size", cpt=[[0.5, 0.5]]),
            VariableSpec(name="pos", domain="pos", cpt=[[0.2, 0.2, 0.2, 0.2, 0.2]]),
        ]
    )
    x_sources = [_port("shape", "shape"), _port("size", "size"), _port("pos", "pos")]
    x_targets = [_port("x_shape", "shape"), _port("x_size", "size"), _port("x_pos", "pos")]

    # the encoder reads size off the object only near the centre; towards the
    # edges it is pulled to "small" (left) or "large" (right) with probability 0.8
    pulled = {-2: {"small": (1.0, 0.0), "large": (0.8, 0.2)}, 2: {"small": (0.2, 0.8), "large": (0.0, 1.0)}}
    clean = {"small": (1.0, 0.0), "large": (0.0, 1.0)}
    rows = []
    for shape, size, pos in itertools.product(["square", "ellipse"], ["small", "large"], [-2, -1, 0, 1, 2]):
        p_small, p_large = pulled.get(pos, clean)[size]
        shape_row = [1.0, 0.0] if shape == "square" else [0.0, 1.0]
        rows.append([s * z for s in shape_row for z in (p_small, p_large)])
    m_channel = ChannelSpec(
        sources=x_targets,
        targets=[_port("m_shape", "shape"), _port("m_size", "size")],
        table=rows,
    )
    label = ChannelSpec(
        sources=[_port("pos", "pos")],
        targets=[_port("y", "bin")],
        table=[[1.0, 0.0], [1.0, 0.0], [0.5, 0.5], [0.0, 1.0], [0.0, 1.0]],
    )
    return WorldSpec(
        name=name,
        domains=domains,
        scms={"factors": factors},
        channels={
            "x": _copy(domains, x_sources, x_targets),
            "m": m_channel,
            "label": label,
        },
        distributions={"q_pos": DistributionSpec(scope=[_port("pos", "pos")], probs=q_pos)},
        scenario=ScenarioSpec(
            description=description,
            factor_scm="factors",
            x_channel="x",
            m_channel="m",
            label_channel="label",
            intervention_dist="q_pos",
            interpretable=["shape", "size"],
        ),
    )


def dsprites_toy() -> WorldSpec:
    return _dsprites(
        "dsprites-toy",
        "label says whether the object sits right of centre; positions stay where the encoder is clean",
        [0.0, THIRD, THIRD, THIRD, 0.0],
    )


def dsprites_ood() -> WorldSpec:
    return _dsprites(
        "dsprites-ood",
        "same system with interventions pushed to the edge positions",
        [0.5, 0.0, 0.0, 0.0, 0.5],
    )


def cat_dog() -> WorldSpec:
    domains = {"bin": DomainSpec(values=[0, 1])}
    names = ["fur", "tail", "snout"]
    factors = ScmSpec(
        variables=[VariableSpec(name=f"g_{n}", domain="bin", cpt=[[0.5, 0.5]]) for n in names]
    )
    g_ports = [_port(f"g_{n}", "bin") for n in names]
    x_ports = [_port(f"x_{n}", "bin") for n in names]
    return WorldSpec(
        name="cat-dog",
        domains=domains,
        scms={"factors": factors},
        channels={
            "x": _copy(domains, g_ports, x_ports),
            "m": _copy(domains, x_ports, [_port(n, "bin") for n in names]),
            "label": ChannelSpec(
                sources=[_port("g_snout", "bin")],
                targets=[_port("label", "bin")],
                table=[[0.95, 0.05], [0.05, 0.95]],
            ),
        },
        distributions={"q_snout": DistributionSpec(scope=[_port("g_snout", "bin")], probs=[0.5, 0.5])},
        scenario=ScenarioSpec(
            description="cat versus dog is decided by the snout; fur and tail are the interpretable concepts",
            factor_scm="factors",
            x_channel="x",
            m_channel="m",
            label_channel="label",
            intervention_dist="q_snout",
            interpretable=["g_fur", "g_tail"],
            keep=["fur", "tail"],
        ),
    )


TEMPERATURE_PRIOR = [0.3, 0.4, 0.3]
COLOR_GIVEN_TEMPERATURE = [[0.8, 0.15, 0.05], [0.1, 0.8, 0.1], [0.05, 0.15, 0.8]]


def temp_color() -> WorldSpec:
    domains = {
        "celsius": DomainSpec(values=[0, 50, 100]),
        "fahrenheit": DomainSpec(values=[32, 122, 212]),
        "color": DomainSpec(values=["blue", "green", "red"]),
    }
    to_fahrenheit = {0: 32, 50: 122, 100: 212}
    factors = ScmSpec(
        variables=[
            VariableSpec(name="temp", domain="celsius", cpt=[TEMPERATURE_PRIOR]),
            VariableSpec(name="color", domain="color", parents=["temp"], cpt=COLOR_GIVEN_TEMPERATURE),
        ]
    )
    machine = ScmSpec(
        variables=[
            VariableSpec(name="m_celsius", domain="celsius", cpt=[TEMPERATURE_PRIOR]),
            VariableSpec(name="m_hue", domain="color", parents=["m_celsius"], cpt=COLOR_GIVEN_TEMPERATURE),
            VariableSpec(
                name="m_fahrenheit",
                domain="fahrenheit",
                parents=["m_celsius"],
                cpt=[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            ),
        ]
    )
    alpha = _copy(
        domains,
        [_port("temp", "celsius"), _port("color", "color")],
        [_port("m_celsius", "celsius"), _port("m_hue", "color"), _port("m_fahrenheit", "fahrenheit")],
        lambda g: [g["temp"], g["color"], to_fahrenheit[g["temp"]]],
    )
    return WorldSpec(
        name="temp-color",
        domains=domains,
        scms={"factors": factors, "machine": machine},
        channels={"alpha": alpha},
        blocks={"temperature-color": BlockSpec(source_partition=[[0], [1]], target_partition=[[0, 2], [1]], pi=[0, 1])},
        scenario=ScenarioSpec(
            description="temperature encoded twice (celsius and fahrenheit) next to a colour reading",
            factor_scm="factors",
            alpha="alpha",
            interpretable=["temp", "color"],
            blocks="temperature-color",
            scm_h="factors",
            scm_m="machine",
            beta="alpha",
        ),
    )


def onehot_toy() -> WorldSpec:
    domains = {"tern": DomainSpec(values=[0, 1, 2]), "bin": DomainSpec(values=[0, 1])}
    factors = ScmSpec(
        variables=[
            VariableSpec(name="G1", domain="tern", cpt=[[THIRD, THIRD, THIRD]]),
            VariableSpec(name="G2", domain="bin", cpt=[[0.5, 0.5]]),
        ]
    )
    alpha = _copy(
        domains,
        [_port("G1", "tern"), _port("G2", "bin")],
        [_port(f"M{k}", "bin") for k in range(1, 5)],
        lambda g: [int(g["G1"] == 0), int(g["G1"] == 1), int(g["G1"] == 2), g["G2"]],
    )
    return WorldSpec(
        name="onehot-toy",
        domains=domains,
        scms={"factors": factors},
        channels={"alpha": alpha},
        blocks={"onehot": BlockSpec(source_partition=[[0], [1]], target_partition=[[0, 1, 2], [3]], pi=[0, 1])},
        scenario=ScenarioSpec(
            description="a ternary factor one-hot encoded into three binary coordinates",
            factor_scm="factors",
            alpha="alpha",
            interpretable=["G1", "G2"],
            blocks="onehot",
        ),
    )


def _abstraction(name: str, description: str, machine_rows: list[list[float]] | None) -> WorldSpec:
    domains = {"bin": DomainSpec(values=[0, 1])}
    human = ScmSpec(
        variables=[
            VariableSpec(name="H1", domain="bin", cpt=[[0.5, 0.5]]),
            VariableSpec(name="H2", domain="bin", parents=["H1"], cpt=[[0.9, 0.1], [0.1, 0.9]]),
        ]
    )
    second = (
        VariableSpec(name="M2", domain="bin", parents=["M1"], cpt=machine_rows)
        if machine_rows
        else VariableSpec(name="M2", domain="bin", cpt=[[0.5, 0.5]])
    )
    machine = ScmSpec(variables=[VariableSpec(name="M1", domain="bin", cpt=[[0.5, 0.5]]), second])
    beta = _copy(domains, [_port("H1", "bin"), _port("H2", "bin")], [_port("M1", "bin"), _port("M2", "bin")])
    return WorldSpec(
        name=name,
        domains=domains,
        scms={"human": human, "machine": machine},
        channels={"beta": beta},
        blocks={"singletons": _singletons(2)},
        scenario=ScenarioSpec(
            description=description,
            scm_h="human",
            scm_m="machine",
            beta="beta",
            blocks="singletons",
        ),
    )


def fail_abstraction() -> WorldSpec:
    return _abstraction(
        "fail-abstraction",
        "the machine model drops the H1 -> H2 edge, so do(H1) no longer moves M2",
        None,
    )


def pass_abstraction() -> WorldSpec:
    return _abstraction(
        "pass-abstraction",
        "the machine model mirrors the human mechanisms one to one",
        [[0.9, 0.1], [0.1, 0.9]],
    )


BUILTINS: dict[str, Callable[[], WorldSpec]] = {
    "identity-toy": identity_toy,
    "shuffle-toy": shuffle_toy,
    "onehot-toy": onehot_toy,
    "dsprites-toy": dsprites_toy,
    "dsprites-ood": dsprites_ood,
    "cat-dog": cat_dog,
    "temp-color": temp_color,
    "fail-abstraction": fail_abstraction,
    "pass-abstraction": pass_abstraction,
}


def list_scenarios() -> list[str]:
    return list(BUILTINS)


def builtin_scenario(name: str) -> WorldSpec:
    try:
        return BUILTINS[name]()
    except KeyError:
        raise UnknownScenarioError(name, list(BUILTINS)) from None
