"""Experiment configuration: JSON schema, validation, bundled default."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

from . import montecarlo
from .ensembles import EnsembleSpec, RngState, random_hermitian
from .tensor_core import tensor_to_json

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""


def _expand_coefficients(raw, name: str) -> list[dict]:
    """Inline tensors pass through; generator stanzas expand deterministically."""
    out = []
    for item in raw:
        if "random_hermitian" in item:
            params = item["random_hermitian"]
            try:
                dims = tuple(int(d) for d in params["dims"])
                count = int(params.get("count", 1))
                scale = float(params.get("scale", 1.0))
                gen_seed = int(params["seed"])
            except (KeyError, TypeError, ValueError) as exc:
                raise ConfigError(
                    f"ensemble {name!r}: bad random_hermitian stanza: {exc}"
                ) from exc
            gen = RngState(gen_seed).generator(0)
            for _ in range(count):
                out.append(tensor_to_json(random_hermitian(dims, gen, scale).base))
        else:
            out.append(item)
    return out


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment plan: ensembles, pairings and run parameters."""

    seed: int
    trials: int
    alpha: float
    theta_points: int
    workers: int | None
    ensembles: dict[str, EnsembleSpec]
    pairings: tuple[tuple[str, str], ...]
    raw: dict = field(repr=False)

    @property
    def config_hash(self) -> str:
        canonical = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()[:16]

    @staticmethod
    def from_dict(obj: dict) -> "ExperimentConfig":
        if not isinstance(obj, dict):
            raise ConfigError("configuration must be a JSON object")
        if obj.get("schema") != SCHEMA_VERSION:
            raise ConfigError(
                f"unsupported schema {obj.get('schema')!r}, expected {SCHEMA_VERSION}"
            )
        if "seed" not in obj:
            raise ConfigError("configuration must pin an explicit seed")
        try:
            seed = int(obj["seed"])
            trials = int(obj.get("trials", montecarlo.DEFAULT_TRIALS))
            alpha = float(obj.get("alpha", montecarlo.DEFAULT_ALPHA))
            theta_points = int(obj.get("theta_points", 16))
            workers = obj.get("workers")
            workers = int(workers) if workers is not None else None
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad run parameter: {exc}") from exc
        if trials < 1 or theta_points < 1 or not 0 < alpha < 1:
            raise ConfigError("trials/theta_points must be >= 1 and alpha in (0, 1)")

        specs: dict[str, EnsembleSpec] = {}
        for entry in obj.get("ensembles", []):
            name = entry.get("name")
            if not name:
                raise ConfigError("every ensemble needs a name")
            if name in specs:
                raise ConfigError(f"duplicate ensemble name {name!r}")
            body = {k: v for k, v in entry.items() if k != "name"}
            body["coefficients"] = _expand_coefficients(
                body.get("coefficients", []), name
            )
            try:
                specs[name] = EnsembleSpec.from_json(body)
            except (KeyError, ValueError) as exc:
                raise ConfigError(f"ensemble {name!r}: {exc}") from exc
        if not specs:
            raise ConfigError("configuration defines no ensembles")

        pairings = []
        for pair in obj.get("pairings", []):
            if not (isinstance(pair, (list, tuple)) and len(pair) == 2):
                raise ConfigError(f"pairing {pair!r} must be [ensemble, theorem]")
            name, tag = pair
            if name not in specs:
                raise ConfigError(f"pairing references unknown ensemble {name!r}")
            try:
                montecarlo.check_pairing(specs[name], tag)
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc
            pairings.append((name, tag))
        if not pairings:
            raise ConfigError("configuration defines no pairings")

        return ExperimentConfig(
            seed=seed,
            trials=trials,
            alpha=alpha,
            theta_points=theta_points,
            workers=workers,
            ensembles=specs,
            pairings=tuple(pairings),
            raw=obj,
        )

    @staticmethod
    def from_path(path) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                obj = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        return ExperimentConfig.from_dict(obj)


def default_config() -> dict:
    """Bundled plan touching every ensemble kind at quick-run sizes."""
    herm = lambda seed, count, dims=(2, 2), scale=1.0: [
        {"random_hermitian": {"dims": list(dims), "count": count, "scale": scale, "seed": seed}}
    ]
    return {
        "schema": SCHEMA_VERSION,
        "seed": 20260810,
        "trials": 20_000,
        "alpha": montecarlo.DEFAULT_ALPHA,
        "theta_points": 8,
        "ensembles": [
            {"name": "gauss", "kind": "gaussian_series", "coefficients": herm(101, 3)},
            {"name": "signs", "kind": "rademacher_series", "coefficients": herm(202, 4)},
            {
                "name": "masked",
                "kind": "hadamard_gaussian",
                "coefficients": [
                    {"random_hermitian": {"dims": [2], "count": 1, "scale": 1.0, "seed": 303}}
                ],
            },
            {"name": "psd8", "kind": "psd_bounded", "dims": [2, 2], "n": 8, "T": 1.0},
            {
                "name": "flip",
                "kind": "centered_bounded",
                "T": 2.5,
                "coefficients": herm(404, 4, scale=0.6),
            },
            {
                "name": "damped",
                "kind": "subexponential",
                "T": 2.5,
                "coefficients": herm(505, 4, scale=0.6),
            },
            {
                "name": "walk",
                "kind": "azuma_martingale",
                "adaptivity": True,
                "coefficients": herm(606, 6, scale=0.7),
            },
            {
                "name": "swaps",
                "kind": "mcdiarmid_function",
                "coefficients": herm(707, 6, scale=0.8),
            },
        ],
        "pairings": [
            ["gauss", "gaussian-series"],
            ["gauss", "gaussian-series-norm"],
            ["signs", "gaussian-series"],
            ["signs", "azuma"],
            ["masked", "nonuniform-gaussian"],
            ["psd8", "chernoff1-upper"],
            ["psd8", "chernoff1-lower"],
            ["psd8", "chernoff2-upper"],
            ["psd8", "chernoff2-lower"],
            ["flip", "bernstein-bounded"],
            ["flip", "hoeffding"],
            ["damped", "bernstein-subexp"],
            ["walk", "azuma"],
            ["swaps", "mcdiarmid"],
        ],
    }
