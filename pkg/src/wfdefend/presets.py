"""Named defense presets and a small dispatch layer for batch tools."""

from __future__ import annotations

from typing import Callable, Optional

from .baselines import FrontParams, TamarawParams, apply_front, apply_tamaraw
from .regulator import RegulatorParams, apply_regulator
from .traces import DefendedTrace, Trace

REGULATOR_PRESETS: dict[str, RegulatorParams] = {
    "regulator-heavy": RegulatorParams(R=277.0, D=0.940, T=3.55, N=3550, U=3.95, C=1.77),
    "regulator-light": RegulatorParams(R=260.0, D=0.860, T=3.75, N=2080, U=4.02, C=2.08),
}

FRONT_PRESETS: dict[str, FrontParams] = {
    "front-1700": FrontParams(N_s=1700, N_c=1700, W_min=1.0, W_max=14.0),
    "front-2500": FrontParams(N_s=2500, N_c=2500, W_min=1.0, W_max=14.0),
}

TAMARAW_PRESETS: dict[str, TamarawParams] = {
    "tamaraw": TamarawParams(rho_out=0.04, rho_in=0.012, L=100),
}

# Regulator parameters that may be overridden from the command line.
OVERRIDE_FIELDS = ("R", "D", "T", "N", "U", "C")


def defense_names() -> list[str]:
    return sorted([*REGULATOR_PRESETS, *FRONT_PRESETS, *TAMARAW_PRESETS])


def is_randomized(name: str) -> bool:
    """Whether the defense consumes the seed (Tamaraw does not)."""
    return name not in TAMARAW_PRESETS


def get_defense(
    name: str, overrides: Optional[dict] = None
) -> tuple[object, Callable[[Trace, int], DefendedTrace]]:
    """Resolve a preset name (plus optional regulator parameter overrides)
    to (params, apply) where apply(trace, seed) -> DefendedTrace.
    """
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    if name in REGULATOR_PRESETS:
        params = REGULATOR_PRESETS[name]
        if overrides:
            unknown = set(overrides) - set(OVERRIDE_FIELDS)
            if unknown:
                raise ValueError(f"unknown regulator overrides: {sorted(unknown)}")
            if "N" in overrides:
                overrides["N"] = int(overrides["N"])
            params = params.with_overrides(**overrides)
        return params, lambda trace, seed, p=params: apply_regulator(trace, p, seed)
    if overrides:
        raise ValueError(f"parameter overrides only apply to regulator presets, not {name!r}")
    if name in FRONT_PRESETS:
        params = FRONT_PRESETS[name]
        return params, lambda trace, seed, p=params: apply_front(trace, p, seed)
    if name in TAMARAW_PRESETS:
        params = TAMARAW_PRESETS[name]
        return params, lambda trace, seed, p=params: apply_tamaraw(trace, p)
    raise KeyError(f"unknown defense {name!r}; expected one of {defense_names()}")


def apply_defense(
    name: str, trace: Trace, seed: int, overrides: Optional[dict] = None
) -> DefendedTrace:
    _, apply = get_defense(name, overrides)
    return apply(trace, seed)
