"""JSON run configuration.

One document describes a whole experiment: plant values, carrier, the
approximation band, the scenario, colony settings and (optionally) fixed
controller gains.  Omitted sections fall back to the 5 V-in / 12 V-out
defaults used throughout.  Validation is strict: unknown sections or keys
raise instead of being silently ignored, so a typo cannot quietly run a
different experiment than the one written down.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .beecolony import AbcConfig, FOPID_BOUNDS, PID_BOUNDS, TuningSetup
from .controller import DEFAULT_U_MAX, FopidParams
from .converter import ConverterParams, PwmModulator
from .oustaloup import OraConfig
from .simloop import DEFAULT_BREAK_THRESHOLD, Disturbance, Scenario


class ConfigError(ValueError):
    """Raised for unreadable, malformed, or inconsistent configuration."""


@dataclass(frozen=True)
class RunConfig:
    converter: ConverterParams
    modulator: PwmModulator
    ora: OraConfig
    scenario: Scenario
    colony_size: int
    max_iterations: int
    scout_limit: int | None
    controller: FopidParams | None
    u_min: float
    u_max: float
    break_threshold: float

    def tuning_setup(self) -> TuningSetup:
        return TuningSetup(plant=self.converter, f_sw=self.modulator.f_sw,
                           pwm_phase=self.modulator.phase, ora=self.ora,
                           scenario=self.scenario,
                           break_threshold=self.break_threshold,
                           u_min=self.u_min, u_max=self.u_max)

    def abc_config(self, pid: bool, rng_seed: int) -> AbcConfig:
        bounds = PID_BOUNDS if pid else FOPID_BOUNDS
        return AbcConfig(bounds=bounds, colony_size=self.colony_size,
                         max_iterations=self.max_iterations,
                         limit=self.scout_limit, rng_seed=rng_seed)


def _as_float(section: str, key: str, value) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{section}.{key} must be a number, got {value!r}")
    return float(value)


def _as_int(section: str, key: str, value) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{section}.{key} must be an integer, got {value!r}")
    return value


def _take(doc: dict, section: str, allowed: tuple[str, ...]) -> dict:
    sub = doc.get(section)
    if sub is None:
        return {}
    if not isinstance(sub, dict):
        raise ConfigError(f"section {section!r} must be an object")
    unknown = sorted(set(sub) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown keys in section {section!r}: {unknown}")
    return sub


def config_from_dict(doc: dict) -> RunConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a JSON object")
    known = ("converter", "modulator", "ora", "scenario", "abc", "controller")
    unknown = sorted(set(doc) - set(known))
    if unknown:
        raise ConfigError(f"unknown config sections: {unknown}")

    conv = _take(doc, "converter",
                 ("r_load", "l_filter", "r_l", "c_filter", "r_c", "v_g"))
    mod = _take(doc, "modulator", ("f_sw", "phase"))
    ora = _take(doc, "ora", ("omega_l", "omega_h", "n_sections"))
    scen = _take(doc, "scenario", ("v_ref", "horizon", "record_decimation",
                                   "disturbance", "break_threshold"))
    abc = _take(doc, "abc", ("colony_size", "max_iterations", "limit"))
    ctrl = _take(doc, "controller",
                 ("kp", "ti", "td", "lam", "mu", "u_min", "u_max"))

    try:
        converter = ConverterParams(
            r_load=_as_float("converter", "r_load", conv.get("r_load", 25.0)),
            l_filter=_as_float("converter", "l_filter",
                               conv.get("l_filter", 250e-6)),
            r_l=_as_float("converter", "r_l", conv.get("r_l", 0.075)),
            c_filter=_as_float("converter", "c_filter",
                               conv.get("c_filter", 1056e-6)),
            r_c=_as_float("converter", "r_c", conv.get("r_c", 0.0375)),
            v_g=_as_float("converter", "v_g", conv.get("v_g", 5.0)))
        modulator = PwmModulator(
            f_sw=_as_float("modulator", "f_sw", mod.get("f_sw", 10e3)),
            phase=_as_float("modulator", "phase", mod.get("phase", 0.0)))
        ora_cfg = OraConfig(
            order_nu=0.5,
            omega_l=_as_float("ora", "omega_l", ora.get("omega_l", 1e-1)),
            omega_h=_as_float("ora", "omega_h", ora.get("omega_h", 1e6)),
            n_sections=_as_int("ora", "n_sections", ora.get("n_sections", 8)))

        dist_doc = scen.get("disturbance")
        if dist_doc is None:
            disturbance = None
        else:
            sub = _take({"disturbance": dist_doc}, "disturbance",
                        ("time", "relative_step"))
            disturbance = Disturbance(
                time=_as_float("disturbance", "time", sub.get("time")),
                relative_step=_as_float("disturbance", "relative_step",
                                        sub.get("relative_step")))
        scenario = Scenario(
            v_ref=_as_float("scenario", "v_ref", scen.get("v_ref", 12.0)),
            horizon=_as_float("scenario", "horizon",
                              scen.get("horizon", 0.05)),
            disturbance=disturbance,
            record_decimation=_as_int("scenario", "record_decimation",
                                      scen.get("record_decimation", 1)))
        break_threshold = _as_float(
            "scenario", "break_threshold",
            scen.get("break_threshold", DEFAULT_BREAK_THRESHOLD))

        colony_size = _as_int("abc", "colony_size",
                              abc.get("colony_size", 10))
        max_iterations = _as_int("abc", "max_iterations",
                                 abc.get("max_iterations", 20))
        limit = abc.get("limit")
        if limit is not None:
            limit = _as_int("abc", "limit", limit)
        # throwaway construction so colony settings fail here, not at use
        AbcConfig(bounds=FOPID_BOUNDS, colony_size=colony_size,
                  max_iterations=max_iterations, limit=limit)

        gains = [k for k in ("kp", "ti", "td") if k in ctrl]
        if gains and len(gains) != 3:
            raise ConfigError(
                f"controller needs kp, ti and td together, got only {gains}")
        if gains:
            controller = FopidParams(
                kp=_as_float("controller", "kp", ctrl["kp"]),
                ti=_as_float("controller", "ti", ctrl["ti"]),
                td=_as_float("controller", "td", ctrl["td"]),
                lam=_as_float("controller", "lam", ctrl.get("lam", 1.0)),
                mu=_as_float("controller", "mu", ctrl.get("mu", 1.0)))
        else:
            if "lam" in ctrl or "mu" in ctrl:
                raise ConfigError("controller lam/mu given without kp/ti/td")
            controller = None
        u_min = _as_float("controller", "u_min", ctrl.get("u_min", 0.0))
        u_max = _as_float("controller", "u_max",
                          ctrl.get("u_max", DEFAULT_U_MAX))
        if not u_min < u_max:
            raise ConfigError(f"need u_min < u_max, got [{u_min}, {u_max}]")
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    return RunConfig(converter=converter, modulator=modulator, ora=ora_cfg,
                     scenario=scenario, colony_size=colony_size,
                     max_iterations=max_iterations, scout_limit=limit,
                     controller=controller, u_min=u_min, u_max=u_max,
                     break_threshold=break_threshold)


def default_config() -> RunConfig:
    return config_from_dict({})


def load_config(path) -> RunConfig:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return config_from_dict(doc)


def resolved_dict(cfg: RunConfig) -> dict:
    """Full config with every default applied, for artifact provenance."""
    c, m, o, s = cfg.converter, cfg.modulator, cfg.ora, cfg.scenario
    dist = None
    if s.disturbance is not None:
        dist = {"time": s.disturbance.time,
                "relative_step": s.disturbance.relative_step}
    ctrl: dict = {"u_min": cfg.u_min, "u_max": cfg.u_max}
    if cfg.controller is not None:
        p = cfg.controller
        ctrl.update({"kp": p.kp, "ti": p.ti, "td": p.td,
                     "lam": p.lam, "mu": p.mu})
    return {
        "converter": {"r_load": c.r_load, "l_filter": c.l_filter,
                      "r_l": c.r_l, "c_filter": c.c_filter,
                      "r_c": c.r_c, "v_g": c.v_g},
        "modulator": {"f_sw": m.f_sw, "phase": m.phase},
        "ora": {"omega_l": o.omega_l, "omega_h": o.omega_h,
                "n_sections": o.n_sections},
        "scenario": {"v_ref": s.v_ref, "horizon": s.horizon,
                     "record_decimation": s.record_decimation,
                     "disturbance": dist,
                     "break_threshold": cfg.break_threshold},
        "abc": {"colony_size": cfg.colony_size,
                "max_iterations": cfg.max_iterations,
                "limit": cfg.scout_limit},
        "controller": ctrl,
    }
