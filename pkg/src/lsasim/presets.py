"""Built-in reference scenarios.

Each preset binds a complete, runnable configuration for one of the standard
evaluation setups: a single incumbent offering 100 units to four operators
(fair, round-robin, and enforcement variants), and two-incumbent coordination
setups.  Operators 1-3 draw demand uniformly from {50, 100} and operator 4
always requests 100, except in the three-operator setup where every operator
draws from {50, 100}.
"""

from __future__ import annotations

from .enforcement import EnforcementConfig, PenaltyFunction
from .sim import DemandModel, ScenarioConfig

DEFAULT_SEED = 12345
_T = 10_000
_W = 20

_MIXED_DEMANDS = (
    DemandModel.choice([50, 100]),
    DemandModel.choice([50, 100]),
    DemandModel.choice([50, 100]),
    DemandModel.fixed(100),
)


def _single_incumbent(protocol: str, **extra) -> ScenarioConfig:
    return ScenarioConfig(
        protocol=protocol,
        n_operators=4,
        n_incumbents=1,
        window=_W,
        instants=_T,
        seed=DEFAULT_SEED,
        supplies=(100.0,),
        demands=_MIXED_DEMANDS,
        **extra,
    )


def _two_incumbents(protocol: str) -> ScenarioConfig:
    return ScenarioConfig(
        protocol=protocol,
        n_operators=4,
        n_incumbents=2,
        window=_W,
        instants=_T,
        seed=DEFAULT_SEED,
        supplies=(100.0, 100.0),
        demands=_MIXED_DEMANDS,
    )


def _enforced(penalty: PenaltyFunction) -> ScenarioConfig:
    return _single_incumbent(
        "enforced_l1",
        enforcement=EnforcementConfig(
            fairness_weight=1.0, exclusion_cutoff=1.0, cooloff_slots=0, penalty=penalty
        ),
        violation_probs=(0.0, 0.1, 0.2, 0.3),
    )


def _builders() -> dict:
    return {
        "fig2a": lambda: _single_incumbent("fair_l1"),
        "fig2b": lambda: _single_incumbent("round_robin"),
        "fig3": lambda: _single_incumbent("fair_l1", emit_moving_average=True),
        "fig4a": lambda: _enforced(PenaltyFunction("linear")),
        "fig4b": lambda: _enforced(PenaltyFunction("power", 2.0)),
        "fig5-oos": lambda: _two_incumbents("oos"),
        "fig5-ooc": lambda: _two_incumbents("ooc"),
        "fig5-mcs": lambda: _two_incumbents("mcs"),
        "fig6": lambda: ScenarioConfig(
            protocol="mcs",
            n_operators=3,
            n_incumbents=2,
            window=_W,
            instants=_T,
            seed=DEFAULT_SEED,
            supplies=(100.0, 100.0),
            demands=(
                DemandModel.choice([50, 100]),
                DemandModel.choice([50, 100]),
                DemandModel.choice([50, 100]),
            ),
        ),
    }


PRESET_NAMES = tuple(_builders())


def get_preset(name: str) -> ScenarioConfig:
    """Return a fresh configuration for the named preset."""
    builders = _builders()
    if name not in builders:
        raise KeyError(
            f"unknown preset {name!r}; available: {', '.join(builders)}"
        )
    cfg = builders[name]()
    cfg.validate()
    return cfg


def describe_preset(name: str) -> str:
    """One-line summary of a preset's protocol and shape."""
    cfg = get_preset(name)
    supplies = "/".join(f"{b:g}" for b in cfg.supplies)
    parts = [
        f"protocol={cfg.protocol}",
        f"N={cfg.n_operators}",
        f"M={cfg.n_incumbents}",
        f"supplies {supplies}",
        f"W={cfg.window}",
        f"T={cfg.instants}",
    ]
    if cfg.enforcement is not None:
        pen = cfg.enforcement.penalty
        kind = pen.kind if pen.kind != "power" else f"power(c={pen.exponent:g})"
        parts.append(f"penalty={kind}")
    if cfg.emit_moving_average:
        parts.append("moving-average output")
    return f"{name}: " + ", ".join(parts)
