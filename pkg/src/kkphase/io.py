"""CSV and JSON readers/writers for every pipeline artifact.

Floats render with 17 significant digits so identical runs produce
byte-identical files.
"""

from __future__ import annotations

import json

import numpy as np

from .kk import MagnitudeSpectrum, PhaseCurve
from .signals import TimeSignal
from .zerosearch import DetectedZero, EintGrid, ImpulseResponse


def fmt(x) -> str:
    return format(float(x), ".17g")


def _write_csv(path, header, columns):
    rows = zip(*columns)
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")


def _read_csv(path, n_cols):
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] != n_cols:
        raise ValueError(f"{path}: expected {n_cols} columns, found {data.shape[1]}")
    return [data[:, i] for i in range(n_cols)]


def write_magnitude_csv(path, mag: MagnitudeSpectrum):
    _write_csv(path, ["omega_rad_s", "log_mag"], [mag.omegas, mag.log_mag])


def read_magnitude_csv(path, kappa: float = 0.0) -> MagnitudeSpectrum:
    om, lm = _read_csv(path, 2)
    return MagnitudeSpectrum(omegas=om, log_mag=lm, kappa=kappa)


def write_phase_csv(path, phase: PhaseCurve):
    _write_csv(path, ["omega_rad_s", "gamma_rad"], [phase.omegas, phase.gamma])


def read_phase_csv(path) -> PhaseCurve:
    om, g = _read_csv(path, 2)
    return PhaseCurve(omegas=om, gamma=g)


def write_time_csv(path, sig: TimeSignal):
    _write_csv(path, ["time_s", "value"], [sig.times, sig.values])


def read_time_csv(path) -> TimeSignal:
    t, v = _read_csv(path, 2)
    return TimeSignal(times=t, values=v)


def write_impulse_csv(path, imp: ImpulseResponse):
    _write_csv(path, ["time_s", "value"], [imp.times, imp.values])


def read_impulse_csv(path) -> ImpulseResponse:
    t, v = _read_csv(path, 2)
    return ImpulseResponse(times=t, values=v)


def write_modes_csv(path, modes):
    with open(path, "w") as fh:
        fh.write("family,m,n,p,f_hz,w_v_j\n")
        for mo in modes:
            ix = mo.index
            fh.write(
                f"{ix.family},{ix.m},{ix.n},{ix.p},{fmt(mo.frequency_hz)},{fmt(mo.energy)}\n"
            )


def write_eint_csv(path, grid: EintGrid):
    with open(path, "w") as fh:
        fh.write("beta_per_s,omega_rad_s,e_int\n")
        for i, b in enumerate(grid.betas):
            for j, w in enumerate(grid.omegas):
                fh.write(f"{fmt(b)},{fmt(w)},{fmt(grid.e_int[i, j])}\n")


def read_eint_csv(path) -> EintGrid:
    b, w, e = _read_csv(path, 3)
    betas = np.unique(b)
    omegas = np.unique(w)
    return EintGrid(
        betas=betas, omegas=omegas, e_int=e.reshape(len(betas), len(omegas))
    )


def _jsonify(obj):
    if isinstance(obj, float):
        return float(fmt(obj))
    if isinstance(obj, dict):
        return {k: _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return _jsonify(float(obj))
    return obj


def write_json(path, doc):
    with open(path, "w") as fh:
        json.dump(_jsonify(doc), fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def write_detections_json(path, detections, grid: EintGrid, extra_meta=None):
    meta = {
        "beta_min": grid.betas[0],
        "beta_max": grid.betas[-1],
        "n_beta": len(grid.betas),
        "omega_min": grid.omegas[0],
        "omega_max": grid.omegas[-1],
        "n_omega": len(grid.omegas),
    }
    if extra_meta:
        meta.update(extra_meta)
    write_json(
        path,
        {
            "detections": [
                {
                    "beta": d.beta_hat,
                    "omega": d.omega_hat,
                    "e_int": d.e_int_value,
                    "prominence": d.prominence,
                }
                for d in detections
            ],
            "grid_meta": meta,
        },
    )


def read_detections_json(path):
    doc = read_json(path)
    return [
        DetectedZero(
            beta_hat=d["beta"],
            omega_hat=d["omega"],
            e_int_value=d["e_int"],
            prominence=d["prominence"],
        )
        for d in doc["detections"]
    ]


def write_zeros_json(path, zero_set):
    with open(path, "w") as fh:
        fh.write(zero_set.to_json())
        fh.write("\n")


def read_zeros_json(path):
    from .tfcore import RhpZeroSet

    with open(path) as fh:
        return RhpZeroSet.from_json(fh.read())


def write_tf_json(path, tf):
    with open(path, "w") as fh:
        fh.write(tf.to_json())
        fh.write("\n")


def read_tf_json(path):
    from .tfcore import transfer_function_from_json

    with open(path) as fh:
        return transfer_function_from_json(fh.read())
