"""Closed-loop chains for the built-in case studies."""

from __future__ import annotations

from typing import Mapping

from ..core import ClosedLoopDtmc, ControllerTable, DynamicsTable, PerceptionAbstraction, compose_closed_loop, validate_dtmc
from ..errors import DomainMismatch, MissingEnvironment
from .f1tenth import SEGMENTS, F1TenthConfig, F1TenthModel
from .noise import SyntheticNoiseModel, synthetic_abstraction


def f1tenth_abstractions(model: F1TenthModel, noise) -> dict:
    """One synthetic abstraction per segment; ``noise`` is a model or ``{segment: model}``."""
    if not isinstance(noise, Mapping):
        noise = {seg: noise for seg in SEGMENTS}
    out = {}
    nbs = None
    for seg, nm in noise.items():
        nm = nm if isinstance(nm, SyntheticNoiseModel) else SyntheticNoiseModel.parse(nm)
        if nm.kind == "neighbor" and nbs is None:
            nbs = model.estimate_neighbors()
        out[seg] = synthetic_abstraction(
            model.space, nm, estimates=model.estimates, projection=model.projection, neighbors=nbs
        )
    return out


def build_case_chains(
    case: str,
    abstractions: Mapping[str, PerceptionAbstraction],
    *,
    config: F1TenthConfig | None = None,
    model: F1TenthModel | None = None,
    envs=None,
    controller: ControllerTable | None = None,
    dynamics: DynamicsTable | None = None,
) -> dict:
    """Validated chain per environment of ``case`` (``"f1tenth"`` or ``"taxinet"``).

    For TaxiNet the environments are the user's condition names (``envs``,
    default: the keys of ``abstractions``) and the tables default to the
    illustrative ones.
    """
    case = case.lower()
    if case == "f1tenth":
        model = model or F1TenthModel(config)
        envs = SEGMENTS if envs is None else tuple(envs)
        controller, dynamics = model.controller, model.dynamics
    elif case == "taxinet":
        from .taxinet import illustrative_tables

        envs = tuple(abstractions) if envs is None else tuple(envs)
        if controller is None or dynamics is None:
            g, f = illustrative_tables()
            controller = controller or g
            dynamics = dynamics or f
    else:
        raise ValueError(f"unknown case {case!r}")

    chains = {}
    for env in envs:
        if env not in abstractions:
            raise MissingEnvironment(env)
        chain = compose_closed_loop(abstractions[env], controller, dynamics, env)
        problems = validate_dtmc(chain)
        if problems:  # pragma: no cover - composition always yields valid chains
            raise DomainMismatch(f"chain for {env!r} is invalid: {problems[:3]}")
        chains[env] = chain
    return chains
