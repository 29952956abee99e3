"""Run configuration: one versioned JSON document for the whole pipeline.

External fields accept Hz where a frequency is natural to state that way;
everything converts to rad/s at the accessor boundary so library code
never sees mixed units.
"""

from __future__ import annotations

import json

import numpy as np

from .cavity import CavityGeometry, DipoleSource, select_modes
from .errors import ConfigError
from .kk import InfinityCorrection

try:
    import jsonschema
except ImportError:  # pragma: no cover
    jsonschema = None

SCHEMA_VERSION = 1

CONFIG_SCHEMA = {
    "type": "object",
    "required": ["version"],
    "additionalProperties": False,
    "properties": {
        "version": {"const": SCHEMA_VERSION},
        "output_dir": {"type": "string"},
        "cavity": {
            "type": "object",
            "required": ["a", "b", "d", "cutoff_hz", "source", "observer"],
            "additionalProperties": False,
            "properties": {
                "a": {"type": "number", "exclusiveMinimum": 0},
                "b": {"type": "number", "exclusiveMinimum": 0},
                "d": {"type": "number", "exclusiveMinimum": 0},
                "cutoff_hz": {"type": "number", "exclusiveMinimum": 0},
                "n_te_max": {"type": "integer", "minimum": 1},
                "n_tm_max": {"type": "integer", "minimum": 1},
                "source": {
                    "type": "object",
                    "required": ["r_s", "L"],
                    "additionalProperties": False,
                    "properties": {
                        "r_s": {
                            "type": "array",
                            "items": {"type": "number"},
                            "minItems": 3,
                            "maxItems": 3,
                        },
                        "L": {"type": "number", "exclusiveMinimum": 0},
                    },
                },
                "observer": {
                    "type": "object",
                    "required": ["r_o"],
                    "additionalProperties": False,
                    "properties": {
                        "r_o": {
                            "type": "array",
                            "items": {"type": "number"},
                            "minItems": 3,
                            "maxItems": 3,
                        }
                    },
                },
            },
        },
        "kk": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "kappa_hz": {"type": "number", "minimum": 0},
                "f_data_min_hz": {"type": "number", "exclusiveMinimum": 0},
                "f_data_max_hz": {"type": "number", "exclusiveMinimum": 0},
                "n_base_grid": {"type": "integer", "minimum": 16},
                "points_per_peak": {"type": "integer", "minimum": 8},
                "f_eval_min_hz": {"type": "number", "exclusiveMinimum": 0},
                "f_eval_max_hz": {"type": "number", "exclusiveMinimum": 0},
                "n_eval": {"type": "integer", "minimum": 2},
                "k_infinity": {"type": "integer", "minimum": 0},
                "omega_ref_rad_s": {"type": "number", "exclusiveMinimum": 0},
                "phase_tol_deg": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "zerosearch": {
            "type": "object",
            "required": [
                "beta_min_per_s",
                "beta_max_per_s",
                "n_beta",
                "omega_min_rad_s",
                "omega_max_rad_s",
                "n_omega",
                "t_off_s",
                "scale_constant_s",
            ],
            "additionalProperties": False,
            "properties": {
                "beta_min_per_s": {"type": "number", "minimum": 0},
                "beta_max_per_s": {"type": "number", "exclusiveMinimum": 0},
                "n_beta": {"type": "integer", "minimum": 3},
                "omega_min_rad_s": {"type": "number", "minimum": 0},
                "omega_max_rad_s": {"type": "number", "minimum": 0},
                "n_omega": {"type": "integer", "minimum": 1},
                "t_off_s": {"type": "number", "exclusiveMinimum": 0},
                "scale_constant_s": {"type": "number", "minimum": 0},
                "dt_s": {"type": "number", "exclusiveMinimum": 0},
                "prominence_threshold": {"type": "number", "exclusiveMinimum": 1},
                "neighborhood_radius": {"type": "integer", "minimum": 1},
            },
        },
        "pulse": {
            "type": "object",
            "required": ["family"],
            "additionalProperties": False,
            "properties": {
                "family": {
                    "enum": [
                        "gaussian_cosine",
                        "double_exponential",
                        "gaussian_derivative",
                    ]
                },
                "amplitude_a": {"type": "number"},
                "center_hz": {"type": "number", "minimum": 0},
                "sigma_s": {"type": "number", "exclusiveMinimum": 0},
                "delay_s": {"type": "number", "exclusiveMinimum": 0},
                "alpha_per_s": {"type": "number", "exclusiveMinimum": 0},
                "beta_per_s": {"type": "number", "exclusiveMinimum": 0},
                "t_end_s": {"type": "number", "exclusiveMinimum": 0},
                "dt_s": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "blindtest": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "mus": {
                    "type": "array",
                    "items": {
                        "type": "array",
                        "items": {"type": "number"},
                        "minItems": 2,
                        "maxItems": 2,
                    },
                },
                "real_mus": {
                    "type": "array",
                    "items": {"type": "number", "exclusiveMinimum": 0},
                },
                "n_pairs": {"type": "integer", "minimum": 1},
                "chi": {"type": "number", "exclusiveMinimum": 0},
                "current_scale": {"type": "number"},
                "t_max_s": {"type": "number", "exclusiveMinimum": 0},
                "dt_s": {"type": "number", "exclusiveMinimum": 0},
            },
        },
    },
}


class RunConfig:
    """Validated view over the configuration document."""

    def __init__(self, doc: dict):
        self.doc = doc
        self._validate()

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        try:
            with open(path) as fh:
                doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls(doc)

    def _validate(self):
        if jsonschema is not None:
            validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
            errors = sorted(validator.iter_errors(self.doc), key=lambda e: list(e.path))
            if errors:
                lines = [
                    f"  at /{'/'.join(str(p) for p in e.path)}: {e.message}"
                    for e in errors
                ]
                raise ConfigError("config validation failed:\n" + "\n".join(lines))
        elif self.doc.get("version") != SCHEMA_VERSION:
            raise ConfigError(f"config version must be {SCHEMA_VERSION}")

    def _section(self, name) -> dict:
        if name not in self.doc:
            raise ConfigError(f"config is missing the '{name}' section")
        return self.doc[name]

    # cavity -------------------------------------------------------------
    def geometry(self) -> CavityGeometry:
        c = self._section("cavity")
        return CavityGeometry(a=c["a"], b=c["b"], d=c["d"])

    def modes(self):
        c = self._section("cavity")
        return select_modes(
            self.geometry(),
            cutoff_hz=c["cutoff_hz"],
            n_te_max=c.get("n_te_max"),
            n_tm_max=c.get("n_tm_max"),
        )

    def dipole(self) -> DipoleSource:
        c = self._section("cavity")
        return DipoleSource(r_s=tuple(c["source"]["r_s"]), length=c["source"]["L"])

    def observer(self):
        return tuple(self._section("cavity")["observer"]["r_o"])

    # kk -----------------------------------------------------------------
    def kk_params(self) -> dict:
        k = self.doc.get("kk", {})
        out = {
            "kappa": 2 * np.pi * k.get("kappa_hz", 0.5e6 / (2 * np.pi)),
            "f_data_min_hz": k.get("f_data_min_hz", 1e5),
            "f_data_max_hz": k.get("f_data_max_hz"),
            "n_base_grid": k.get("n_base_grid", 60000),
            "points_per_peak": k.get("points_per_peak", 160),
            "f_eval_min_hz": k.get("f_eval_min_hz"),
            "f_eval_max_hz": k.get("f_eval_max_hz"),
            "n_eval": k.get("n_eval", 400),
            "corr": InfinityCorrection(
                k=k.get("k_infinity", 0), omega_ref=k.get("omega_ref_rad_s", 1.0)
            ),
            "phase_tol_rad": (
                np.radians(k["phase_tol_deg"]) if "phase_tol_deg" in k else None
            ),
        }
        return out

    # zerosearch -----------------------------------------------------------
    def zerosearch_params(self) -> dict:
        z = self._section("zerosearch")
        return {
            "betas": np.linspace(z["beta_min_per_s"], z["beta_max_per_s"], z["n_beta"]),
            "omegas": np.linspace(
                z["omega_min_rad_s"], z["omega_max_rad_s"], z["n_omega"]
            ),
            "t_off": z["t_off_s"],
            "scale_constant": z["scale_constant_s"],
            "dt": z.get("dt_s"),
            "prominence": z.get("prominence_threshold", 3.0),
            "radius": z.get("neighborhood_radius", 5),
        }

    # pulse ----------------------------------------------------------------
    def pulse(self):
        from .signalsim import ExcitationPulse

        p = self._section("pulse")
        kwargs = {"family": p["family"], "amplitude": p.get("amplitude_a", 1.0)}
        if p["family"] in ("gaussian_cosine", "gaussian_derivative"):
            kwargs["center_hz"] = p.get("center_hz", 0.0)
            kwargs["sigma_s"] = p["sigma_s"]
            if "delay_s" in p:
                kwargs["delay_s"] = p["delay_s"]
        else:
            kwargs["alpha"] = p["alpha_per_s"]
            kwargs["beta"] = p["beta_per_s"]
        return ExcitationPulse(**kwargs)

    def pulse_window(self) -> dict:
        p = self._section("pulse")
        return {"t_end": p.get("t_end_s"), "dt": p.get("dt_s")}

    # blindtest --------------------------------------------------------------
    def blind_spec(self, seed=None):
        from .zerosearch import BlindTestSpec, random_blind_spec

        b = self._section("blindtest")
        if "mus" in b or "real_mus" in b:
            return BlindTestSpec(
                mus=tuple(complex(x, y) for x, y in b.get("mus", [])),
                chi=b.get("chi", 1.0),
                current_scale=b.get("current_scale", 1.0),
                real_mus=tuple(b.get("real_mus", [])),
            )
        if seed is None:
            raise ConfigError("random blind spec requires a --seed")
        return random_blind_spec(seed, n_pairs=b.get("n_pairs", 2))

    def blind_sampling(self) -> dict:
        b = self.doc.get("blindtest", {})
        return {"t_max": b.get("t_max_s"), "dt": b.get("dt_s")}
