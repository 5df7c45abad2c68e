"""Run configuration: sectioned key-value files, presets, validation, dumping.

Configurations are JSON with one object per section (model, sampling, basis,
domain, penalty, seeds, mc).  Time-step bookkeeping is validated in exact
rational arithmetic, so n * delta = n_fine * delta_prime = T holds to the
digit, not merely to rounding.  Unknown keys are rejected with their path.

Seeding policy: every stream is derived as SeedSequence([base, purpose, rep])
(see harness.derive_rng); no entropy enters outside the configured seeds.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction

from .harness import ExperimentPlan

MODEL_DEFAULTS = {
    "exp_ou": {"theta": 1.0, "c": 0.75},
    "tanh_ou_shift": {"theta": 1.0, "c": 0.75},
    "exp_tanh_ou": {"theta": 1.0, "c": 0.75},
    "cir": {"theta": 0.75, "c": Fraction(1, 3), "d": 9},
}

FAMILY_ALIASES = {"trig": "trig", "t": "trig",
                  "gp": "poly", "poly": "poly", "piecewise_poly": "poly"}


class ConfigError(ValueError):
    """Configuration rejection; carries the offending key path or line."""

    def __init__(self, message, key=None, line=None):
        self.key = key
        self.line = line
        prefix = ""
        if key:
            prefix = f"[{key}] "
        elif line is not None:
            prefix = f"[line {line}] "
        super().__init__(prefix + message)


@dataclass
class RunConfig:
    """Fully resolved, validated run configuration."""

    model_name: str
    model_params: dict
    horizon: Fraction          # T
    fine_step: Fraction        # simulation step
    obs_step: Fraction         # observation step
    ks: tuple
    basis_family: str = "trig"
    basis_max_dim: int | None = None
    basis_r_max: int = 4
    q_lo: float = 0.025
    q_hi: float = 0.975
    penalty_mode: str = "practical"
    kappa: float = 2.0
    sigma1_sq: float | None = None
    seed_base: int = 0
    seed_volatility: int | None = None
    seed_price: int | None = None
    replications: int = 20
    table_cells: tuple | None = None  # ((model, family), ...) for multi-model tables
    preset: str | None = field(default=None, compare=False)  # provenance only

    @property
    def ratio(self) -> int:
        return int(self.obs_step / self.fine_step)

    @property
    def n_obs(self) -> int:
        return int(self.horizon / self.obs_step)

    @property
    def n_fine(self) -> int:
        return int(self.horizon / self.fine_step)


# Presets. "desk" is the fast CI-scale experiment; "table1" the full-length
# single-model reference run; "table2" the all-models comparison at k = 250.
_FULL_SAMPLING = {"T": "1000", "delta_prime": "2e-4", "delta": "2e-3"}
PRESETS = {
    "desk": {
        "model": {"name": "cir"},
        "sampling": {"T": "200", "delta_prime": "1e-3", "delta": "1e-2", "k": 50},
        "mc": {"replications": 20},
    },
    "table1": {
        "model": {"name": "cir"},
        "sampling": {**_FULL_SAMPLING, "k": 250},
        "mc": {"replications": 100},
    },
    "table2": {
        "model": {"name": "exp_ou"},
        "sampling": {**_FULL_SAMPLING, "k": 250},
        "mc": {
            "replications": 100,
            "cells": [
                {"model": "exp_ou", "basis": "trig"},
                {"model": "tanh_ou_shift", "basis": "trig"},
                {"model": "exp_tanh_ou", "basis": "trig"},
                {"model": "cir", "basis": "trig"},
                {"model": "cir", "basis": "gp"},
            ],
        },
    },
}

_SCHEMA = {
    "preset": None,
    "model": {"name", "theta", "c", "d"},
    "sampling": {"T", "delta_prime", "delta", "k"},
    "basis": {"family", "max_dim", "r_max"},
    "domain": {"q_lo", "q_hi"},
    "penalty": {"mode", "kappa", "sigma1_sq"},
    "seeds": {"base", "volatility", "price"},
    "mc": {"replications", "cells"},
}


def _check_keys(raw: dict):
    for section, value in raw.items():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section {section!r}", key=section)
        allowed = _SCHEMA[section]
        if allowed is None:
            continue
        if not isinstance(value, dict):
            raise ConfigError(f"section {section!r} must be an object", key=section)
        for k in value:
            if k not in allowed:
                raise ConfigError(f"unknown key {k!r}", key=f"{section}.{k}")


def _merge(base: dict, extra: dict) -> dict:
    out = {k: (dict(v) if isinstance(v, dict) else v) for k, v in base.items()}
    for k, v in extra.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k].update(v)
        else:
            out[k] = v
    return out


def _as_fraction(value, key) -> Fraction:
    try:
        if isinstance(value, Fraction):
            return value
        if isinstance(value, bool):
            raise TypeError
        if isinstance(value, int):
            return Fraction(value)
        return Fraction(str(value))
    except (TypeError, ValueError, ZeroDivisionError):
        raise ConfigError(f"expected a number, got {value!r}", key=key) from None


def _as_int(value, key, minimum=None) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, Fraction)) \
            or (isinstance(value, Fraction) and value.denominator != 1):
        raise ConfigError(f"expected an integer, got {value!r}", key=key)
    v = int(value)
    if minimum is not None and v < minimum:
        raise ConfigError(f"must be >= {minimum}, got {v}", key=key)
    return v


def _as_float(value, key) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float, Fraction)):
        raise ConfigError(f"expected a number, got {value!r}", key=key)
    return float(value)


def resolve_config(raw: dict) -> RunConfig:
    """Merge preset defaults under the given values and validate everything."""
    _check_keys(raw)
    preset = raw.get("preset")
    merged = dict(raw)
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; expected one of "
                              f"{sorted(PRESETS)}", key="preset")
        merged = _merge(PRESETS[preset], raw)
    _check_keys(merged)

    model_sec = merged.get("model", {})
    name = str(model_sec.get("name", "cir")).lower().replace("-", "_")
    if name not in MODEL_DEFAULTS:
        raise ConfigError(f"unknown model {model_sec.get('name')!r}; expected one of "
                          f"{sorted(MODEL_DEFAULTS)}", key="model.name")
    params = {}
    defaults = MODEL_DEFAULTS[name]
    params["theta"] = _as_float(model_sec.get("theta", defaults["theta"]), "model.theta")
    params["c"] = _as_float(model_sec.get("c", defaults["c"]), "model.c")
    if name == "cir":
        params["d"] = _as_int(model_sec.get("d", defaults["d"]), "model.d", minimum=1)
    elif "d" in model_sec:
        raise ConfigError("dimension d applies only to the cir model", key="model.d")
    if params["theta"] <= 0:
        raise ConfigError("theta must be > 0", key="model.theta")
    if params["c"] <= 0:
        raise ConfigError("c must be > 0", key="model.c")

    samp = merged.get("sampling", {})
    if not samp:
        raise ConfigError("sampling section is required (or use a preset)", key="sampling")
    horizon = _as_fraction(samp.get("T"), "sampling.T")
    fine = _as_fraction(samp.get("delta_prime"), "sampling.delta_prime")
    obs = _as_fraction(samp.get("delta"), "sampling.delta")
    if horizon <= 0 or fine <= 0 or obs <= 0:
        raise ConfigError("T, delta_prime and delta must be positive", key="sampling")
    ratio = obs / fine
    if ratio.denominator != 1 or ratio < 1:
        raise ConfigError(
            f"delta={obs} is not a positive integer multiple of delta_prime={fine}",
            key="sampling.delta, sampling.delta_prime")
    n_obs = horizon / obs
    if n_obs.denominator != 1 or n_obs < 1:
        raise ConfigError(f"T={horizon} is not an integer multiple of delta={obs}",
                          key="sampling.T, sampling.delta")
    k_raw = samp.get("k", 250)
    ks = k_raw if isinstance(k_raw, list) else [k_raw]
    ks = tuple(_as_int(k, "sampling.k", minimum=1) for k in ks)
    if not ks:
        raise ConfigError("need at least one k", key="sampling.k")
    for k in ks:
        if k > int(n_obs):
            raise ConfigError(f"k={k} exceeds the number of observations n={int(n_obs)}",
                              key="sampling.k")

    basis = merged.get("basis", {})
    fam_raw = str(basis.get("family", "trig")).lower()
    if fam_raw not in FAMILY_ALIASES:
        raise ConfigError(f"unknown basis family {fam_raw!r}; expected one of "
                          f"{sorted(FAMILY_ALIASES)}", key="basis.family")
    family = FAMILY_ALIASES[fam_raw]
    max_dim = basis.get("max_dim")
    if max_dim is not None:
        max_dim = _as_int(max_dim, "basis.max_dim", minimum=1)
    r_max = _as_int(basis.get("r_max", 4), "basis.r_max", minimum=0)

    dom = merged.get("domain", {})
    q_lo = _as_float(dom.get("q_lo", 0.025), "domain.q_lo")
    q_hi = _as_float(dom.get("q_hi", 0.975), "domain.q_hi")
    if not (0.0 <= q_lo < q_hi <= 1.0):
        raise ConfigError(f"need 0 <= q_lo < q_hi <= 1, got ({q_lo}, {q_hi})",
                          key="domain.q_lo, domain.q_hi")

    pen = merged.get("penalty", {})
    mode = str(pen.get("mode", "practical")).lower()
    if mode not in ("practical", "theoretical"):
        raise ConfigError(f"unknown penalty mode {mode!r}", key="penalty.mode")
    kappa = _as_float(pen.get("kappa", 2.0), "penalty.kappa")
    if kappa <= 0:
        raise ConfigError("kappa must be > 0", key="penalty.kappa")
    sigma1_sq = pen.get("sigma1_sq")
    if sigma1_sq is not None:
        sigma1_sq = _as_float(sigma1_sq, "penalty.sigma1_sq")
        if sigma1_sq <= 0:
            raise ConfigError("sigma1_sq must be > 0", key="penalty.sigma1_sq")
    if mode == "theoretical" and sigma1_sq is None:
        raise ConfigError("theoretical mode requires penalty.sigma1_sq",
                          key="penalty.sigma1_sq")

    seeds = merged.get("seeds", {})
    seed_base = _as_int(seeds.get("base", 0), "seeds.base", minimum=0)
    seed_vol = seeds.get("volatility")
    seed_price = seeds.get("price")
    if seed_vol is not None:
        seed_vol = _as_int(seed_vol, "seeds.volatility", minimum=0)
    if seed_price is not None:
        seed_price = _as_int(seed_price, "seeds.price", minimum=0)

    mc = merged.get("mc", {})
    reps = _as_int(mc.get("replications", 20), "mc.replications", minimum=1)
    cells_raw = mc.get("cells")
    cells = None
    if cells_raw is not None:
        if not isinstance(cells_raw, list) or not cells_raw:
            raise ConfigError("cells must be a non-empty list", key="mc.cells")
        out = []
        for i, c in enumerate(cells_raw):
            if not isinstance(c, dict) or set(c) - {"model", "basis"}:
                raise ConfigError("each cell is an object with keys model, basis",
                                  key=f"mc.cells[{i}]")
            cm = str(c.get("model", name)).lower().replace("-", "_")
            if cm not in MODEL_DEFAULTS:
                raise ConfigError(f"unknown model {cm!r}", key=f"mc.cells[{i}].model")
            cf = str(c.get("basis", fam_raw)).lower()
            if cf not in FAMILY_ALIASES:
                raise ConfigError(f"unknown basis family {cf!r}",
                                  key=f"mc.cells[{i}].basis")
            out.append((cm, FAMILY_ALIASES[cf]))
        cells = tuple(out)

    return RunConfig(
        model_name=name, model_params=params,
        horizon=horizon, fine_step=fine, obs_step=obs, ks=ks,
        basis_family=family, basis_max_dim=max_dim, basis_r_max=r_max,
        q_lo=q_lo, q_hi=q_hi, penalty_mode=mode, kappa=kappa, sigma1_sq=sigma1_sq,
        seed_base=seed_base, seed_volatility=seed_vol, seed_price=seed_price,
        replications=reps, table_cells=cells, preset=preset,
    )


def parse_config(text: str) -> RunConfig:
    """Parse and validate a JSON configuration string.

    Floats are read as exact decimal fractions so that step-divisibility
    checks are rational, not floating-point.
    """
    try:
        raw = json.loads(text, parse_float=Fraction)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"syntax error: {exc.msg}", line=exc.lineno) from None
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a JSON object", line=1)
    return resolve_config(raw)


def dump_config(cfg: RunConfig) -> str:
    """Serialize a resolved configuration; reparsing yields an equal RunConfig."""
    doc = {
        "model": {"name": cfg.model_name, **cfg.model_params},
        "sampling": {
            # shortest float repr reparses to the same exact fraction for the
            # short decimal steps used in practice
            "T": float(cfg.horizon),
            "delta_prime": float(cfg.fine_step),
            "delta": float(cfg.obs_step),
            "k": list(cfg.ks) if len(cfg.ks) > 1 else cfg.ks[0],
        },
        "basis": {"family": cfg.basis_family, "max_dim": cfg.basis_max_dim,
                  "r_max": cfg.basis_r_max},
        "domain": {"q_lo": cfg.q_lo, "q_hi": cfg.q_hi},
        "penalty": {"mode": cfg.penalty_mode, "kappa": cfg.kappa,
                    "sigma1_sq": cfg.sigma1_sq},
        "seeds": {"base": cfg.seed_base, "volatility": cfg.seed_volatility,
                  "price": cfg.seed_price},
        "mc": {"replications": cfg.replications},
    }
    if cfg.table_cells is not None:
        doc["mc"]["cells"] = [{"model": m, "basis": b} for (m, b) in cfg.table_cells]
    return json.dumps(doc, indent=2)


def plans_from_config(cfg: RunConfig, collect_curves: int = 0) -> list:
    """Experiment plans for the configured table (one per model/basis cell)."""
    cells = cfg.table_cells or ((cfg.model_name, cfg.basis_family),)
    plans = []
    for model, family in cells:
        params = dict(cfg.model_params) if model == cfg.model_name \
            else {k: float(v) for k, v in MODEL_DEFAULTS[model].items()}
        if model == "cir":
            params["d"] = int(params["d"])
        elif "d" in params:
            del params["d"]
        plans.append(ExperimentPlan(
            model_id=model, model_params=params,
            horizon=float(cfg.horizon), fine_step=float(cfg.fine_step),
            obs_step=float(cfg.obs_step), ks=cfg.ks,
            basis_family=family, replications=cfg.replications,
            base_seed=cfg.seed_base, penalty_mode=cfg.penalty_mode,
            kappa=cfg.kappa, sigma1_sq=cfg.sigma1_sq,
            q_lo=cfg.q_lo, q_hi=cfg.q_hi, r_max=cfg.basis_r_max,
            max_dim_override=cfg.basis_max_dim, collect_curves=collect_curves,
        ))
    return plans
