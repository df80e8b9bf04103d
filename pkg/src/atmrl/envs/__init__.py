"""Benchmark environments speaking the costly-measurement contract."""

from __future__ import annotations

import dataclasses

from .frozen_lake import (
    DEFAULT_MAP_4X4,
    DETERMINISTIC,
    SEMI_SLIPPERY,
    SLIPPERY,
    LakeSpec,
    generate_lake,
    lake_kernel,
    make_lake_env,
    read_map,
    write_map,
)
from .measuring_value import (
    MeasuringValueSpec,
    make_measuring_value_env,
    measuring_threshold,
    strategy_values,
)
from .mhealth import MHealthEnv, MHealthSpec, bin_representatives, discretize_state


def make_env(name: str, params: dict):
    """Environment factory used by the experiment harness and CLI."""
    params = dict(params)
    if name == "mv":
        return make_measuring_value_env(MeasuringValueSpec(**params))
    if name == "lake":
        size = params.pop("size", 4)
        hole_density = params.pop("hole_density", 0.2)
        map_seed = params.pop("map_seed", 0)
        map_path = params.pop("map_path", None)
        if map_path is not None:
            params["rows"] = read_map(map_path)
            return make_lake_env(LakeSpec(**params))
        if size == 4:
            return make_lake_env(LakeSpec(**params))
        variant = params.pop("variant", SEMI_SLIPPERY)
        cost = params.pop("cost", 0.05)
        spec = generate_lake(size, hole_density, map_seed, variant=variant, cost=cost)
        if params:
            spec = dataclasses.replace(spec, **params)
        return make_lake_env(spec)
    if name == "mhealth":
        return MHealthEnv(MHealthSpec(**params))
    raise ValueError(f"unknown environment {name!r}")
