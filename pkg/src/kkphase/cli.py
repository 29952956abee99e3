"""Command-line pipeline driver.

Subcommands: modes | tf | kk | zerosearch | blindtest | timeresp | verify.
Exit codes: 0 success, 2 input/validation, 3 numerical tolerance, 4 I/O.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .cavity import build_state_space, cavity_transfer_function
from .config import RunConfig
from .errors import (
    ConfigError,
    DegenerateOutput,
    EmptyModeSet,
    GridTooCoarse,
    IllConditioned,
    NonHermitianInput,
    OutOfDomain,
    PoleEvaluation,
    Undersampled,
    WindowMismatch,
)
from .kk import (
    direct_phase_of,
    hybrid_omega_grid,
    magnitude_spectrum_of,
    pv_phase_from_magnitude,
    reconstruct_phase,
    spectral_features_of,
)
from .manifest import RunManifest, verify_manifest
from .tfcore import RhpZeroSet, eval_modal, find_rhp_zeros, modal_to_rational
from .zerosearch import detect_minima, generate_blind_test, scan
from . import io as kio

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4

_INPUT_ERRORS = (ConfigError, EmptyModeSet, OutOfDomain, ValueError, TypeError, KeyError)
_NUMERICAL_ERRORS = (
    GridTooCoarse,
    IllConditioned,
    Undersampled,
    PoleEvaluation,
    DegenerateOutput,
    NonHermitianInput,
    WindowMismatch,
)


def _parser():
    p = argparse.ArgumentParser(
        prog="kkphase",
        description="Cavity transfer functions, KK phase reconstruction, "
        "and time-domain zero search.",
    )
    p.add_argument("--config", type=Path, help="run configuration JSON")
    p.add_argument("--out", type=Path, default=Path("."), help="output directory")
    p.add_argument("--seed", type=int, default=None, help="seed for randomized stages")
    p.add_argument("--threads", type=int, default=1, help="worker threads for scans")
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("modes", help="enumerate cavity modes to CSV")
    sub.add_parser("tf", help="transfer function: spectra, rational form, RHP zeros")

    kk = sub.add_parser("kk", help="phase from a magnitude CSV")
    kk.add_argument("--magnitude", type=Path, required=True)
    kk.add_argument("--zeros", type=Path, help="RHP zero set JSON for the correction")
    kk.add_argument("--no-zeros", action="store_true", help="plain reconstruction")

    zs = sub.add_parser("zerosearch", help="scan E_int over (beta, omega)")
    zs.add_argument("--impulse", type=Path, help="impulse-response CSV (blind mode)")
    zs.add_argument(
        "--blind", action="store_true", help="require the impulse-file route"
    )

    sub.add_parser("blindtest", help="emit a blind impulse response and sealed key")

    tr = sub.add_parser("timeresp", help="time responses via both routes, with metrics")
    tr.add_argument(
        "--phase-source",
        choices=("direct", "kk", "kk-corrected"),
        default="direct",
    )
    tr.add_argument("--zeros", type=Path, help="zero set JSON for kk-corrected")

    ver = sub.add_parser("verify", help="re-hash the outputs listed in a manifest")
    ver.add_argument("--manifest", type=Path, help="manifest path (default: OUT/run_manifest.json)")
    return p


def _require_config(args) -> RunConfig:
    if args.config is None:
        raise ConfigError("--config is required for this command")
    return RunConfig.from_file(args.config)


def _cavity_modal(cfg):
    modes = cfg.modes()
    ssm = build_state_space(modes, cfg.dipole(), cfg.observer())
    return modes, ssm, cavity_transfer_function(ssm)


def _spectral_grids(cfg, tf):
    kk = cfg.kk_params()
    cutoff = cfg.doc["cavity"]["cutoff_hz"]
    f_hi = kk["f_data_max_hz"] or 40.0 * cutoff
    f_mid = 2.0 * max(tf.omegas) / (2 * np.pi)
    grid = hybrid_omega_grid(
        2 * np.pi * kk["f_data_min_hz"],
        2 * np.pi * f_mid,
        2 * np.pi * f_hi,
        n_linear=kk["n_base_grid"],
        peaks=spectral_features_of(tf),
        half_width=kk["kappa"],
        points_per_peak=kk["points_per_peak"],
    )
    f_lo = kk["f_eval_min_hz"] or 10.0 * kk["f_data_min_hz"]
    f_hi_eval = kk["f_eval_max_hz"] or cutoff
    evals = np.linspace(2 * np.pi * f_lo, 2 * np.pi * f_hi_eval, kk["n_eval"])
    return kk, grid, evals


def cmd_modes(args) -> int:
    cfg = _require_config(args)
    modes = cfg.modes()
    out = args.out / "modes.csv"
    kio.write_modes_csv(out, modes)
    n_te = sum(1 for m in modes if m.index.family == "TE")
    manifest = RunManifest(args.out, cfg.doc, __version__)
    manifest.add_stage(
        "modes", [out], {"n_modes": len(modes), "n_te": n_te, "n_tm": len(modes) - n_te}
    )
    manifest.write()
    print(f"wrote {out} ({len(modes)} modes)")
    return EXIT_OK


def cmd_tf(args) -> int:
    cfg = _require_config(args)
    _, _, tf = _cavity_modal(cfg)
    kk, grid, _ = _spectral_grids(cfg, tf)
    mag = magnitude_spectrum_of(tf, kk["kappa"], grid)
    phase = direct_phase_of(tf, kk["kappa"], grid)
    rational = modal_to_rational(tf)
    zeros = find_rhp_zeros(rational)
    outs = {
        "magnitude": args.out / "magnitude.csv",
        "phase": args.out / "phase_direct.csv",
        "rational": args.out / "rational_tf.json",
        "zeros": args.out / "rhp_zeros.json",
    }
    kio.write_magnitude_csv(outs["magnitude"], mag)
    kio.write_phase_csv(outs["phase"], phase)
    kio.write_tf_json(outs["rational"], rational)
    kio.write_zeros_json(outs["zeros"], zeros)
    manifest = RunManifest(args.out, cfg.doc, __version__)
    manifest.add_stage(
        "tf",
        list(outs.values()),
        {
            "n_terms": len(tf.omegas),
            "n_rhp_pairs": len(zeros.pairs),
            "n_rhp_real": len(zeros.real_zeros),
        },
    )
    manifest.write()
    print(f"{len(zeros.pairs)} RHP zero pair(s), {len(zeros.real_zeros)} real RHP zero(s)")
    return EXIT_OK


def cmd_kk(args) -> int:
    cfg = _require_config(args)
    kk = cfg.kk_params()
    mag = kio.read_magnitude_csv(args.magnitude, kappa=kk["kappa"])
    cutoff = cfg.doc.get("cavity", {}).get("cutoff_hz")
    f_lo = kk["f_eval_min_hz"] or 10.0 * kk["f_data_min_hz"]
    f_hi = kk["f_eval_max_hz"] or cutoff
    if f_hi is None:
        raise ConfigError("kk.f_eval_max_hz is required without a cavity section")
    evals = np.linspace(2 * np.pi * f_lo, 2 * np.pi * f_hi, kk["n_eval"])
    if args.zeros and not args.no_zeros:
        zeros = kio.read_zeros_json(args.zeros)
        phase = reconstruct_phase(
            mag, zeros, kk["corr"], evals, phase_tol_rad=kk["phase_tol_rad"]
        )
        label = "corrected"
    else:
        phase = pv_phase_from_magnitude(mag, evals, phase_tol_rad=kk["phase_tol_rad"])
        label = "plain"
    out = args.out / "phase_reconstructed.csv"
    kio.write_phase_csv(out, phase)
    manifest = RunManifest(args.out, cfg.doc, __version__)
    manifest.add_stage("kk", [out], {"mode": label, "n_eval": len(evals)})
    manifest.write()
    print(f"wrote {out} ({label})")
    return EXIT_OK


def _refuse_key_file(path: Path):
    if path.name.endswith(".key.json"):
        raise ConfigError(f"{path} is a sealed blind-test key; the scan must not read it")
    if path.suffix == ".json":
        try:
            if kio.read_json(path).get("sealed"):
                raise ConfigError(
                    f"{path} is a sealed blind-test key; the scan must not read it"
                )
        except (OSError, ValueError):
            pass


def cmd_zerosearch(args) -> int:
    cfg = _require_config(args)
    zp = cfg.zerosearch_params()
    if args.impulse is not None:
        _refuse_key_file(args.impulse)
        sysobj = kio.read_impulse_csv(args.impulse)
        source = "impulse"
    elif args.blind:
        raise ConfigError("--blind requires --impulse FILE")
    else:
        _, _, sysobj = _cavity_modal(cfg)
        source = "cavity"
    grid = scan(
        sysobj,
        zp["betas"],
        zp["omegas"],
        zp["t_off"],
        zp["scale_constant"],
        dt=zp["dt"],
        threads=args.threads,
    )
    detections = detect_minima(
        grid,
        prominence_threshold=zp["prominence"],
        neighborhood_radius=zp["radius"],
    )
    eint_out = args.out / "eint_grid.csv"
    det_out = args.out / "detections.json"
    kio.write_eint_csv(eint_out, grid)
    kio.write_detections_json(
        det_out, detections, grid, {"source": source, "t_off_s": zp["t_off"]}
    )
    manifest = RunManifest(args.out, cfg.doc, __version__)
    manifest.add_stage(
        "zerosearch", [eint_out, det_out], {"n_detections": len(detections)}
    )
    manifest.write()
    for d in detections:
        print(f"detection: beta={d.beta_hat:.6g} omega={d.omega_hat:.6g} "
              f"prominence={d.prominence:.2f}")
    print(f"{len(detections)} detection(s)")
    return EXIT_OK


def cmd_blindtest(args) -> int:
    cfg = _require_config(args)
    spec = cfg.blind_spec(seed=args.seed)
    sampling = cfg.blind_sampling()
    imp, key = generate_blind_test(
        spec, rng_seed=args.seed, t_max=sampling["t_max"], dt=sampling["dt"]
    )
    imp_out = args.out / "blind_impulse.csv"
    key_out = args.out / "blind_answer.key.json"
    kio.write_impulse_csv(imp_out, imp)
    kio.write_json(
        key_out,
        {
            "sealed": True,
            "zeros": [[z.real, z.imag] for z in key.pairs]
            + [[x, 0.0] for x in key.real_zeros],
        },
    )
    manifest = RunManifest(args.out, cfg.doc, __version__)
    manifest.add_stage(
        "blindtest", [imp_out, key_out], {"n_samples": len(imp.times)}
    )
    manifest.write()
    print(f"wrote {imp_out} and sealed key {key_out}")
    return EXIT_OK


def cmd_timeresp(args) -> int:
    from .signalsim import (
        compare_responses,
        default_window,
        direct_time_response,
        spectrum_route_response,
    )

    cfg = _require_config(args)
    modes, ssm, tf = _cavity_modal(cfg)
    pulse = cfg.pulse()
    pulse.check_band(cfg.doc["cavity"]["cutoff_hz"])
    win = cfg.pulse_window()
    t_end = win["t_end"] or default_window(tf.omegas) + (pulse.delay_s or 0.0)
    f_max = max(float(np.max(tf.omegas)) / (2 * np.pi), pulse.band_edge_hz())
    dt = win["dt"] or 1.0 / (40.0 * f_max)
    kk, grid, evals = _spectral_grids(cfg, tf)

    direct = direct_time_response(ssm, pulse, t_end, dt)
    if args.phase_source == "direct":
        spectral = spectrum_route_response(tf, pulse, t_end, dt, kk["kappa"])
    else:
        mag = magnitude_spectrum_of(tf, kk["kappa"], grid)
        dc_sign = 1 if eval_modal(tf, kk["kappa"] + 0j).real >= 0 else -1
        if args.phase_source == "kk-corrected":
            zeros = (
                kio.read_zeros_json(args.zeros)
                if args.zeros
                else find_rhp_zeros(modal_to_rational(tf))
            )
        else:
            zeros = RhpZeroSet(pairs=(), real_zeros=())
        phase = reconstruct_phase(
            mag, zeros, kk["corr"], evals, dc_sign=dc_sign,
            phase_tol_rad=kk["phase_tol_rad"],
        )
        spectral = spectrum_route_response((mag, phase), pulse, t_end, dt, kk["kappa"])
    metrics = compare_responses(direct, spectral)

    outs = {
        "direct": args.out / "time_direct.csv",
        "spectral": args.out / f"time_{args.phase_source.replace('-', '_')}.csv",
        "metrics": args.out / "metrics.json",
    }
    kio.write_time_csv(outs["direct"], direct)
    kio.write_time_csv(outs["spectral"], spectral)
    kio.write_json(outs["metrics"], metrics)
    manifest = RunManifest(args.out, cfg.doc, __version__)
    manifest.add_stage("timeresp", list(outs.values()), metrics)
    manifest.write()
    print(
        f"rel_linf={metrics['rel_linf']:.4g} peak_ratio={metrics['peak_ratio']:.4g} "
        f"envelope_correlation={metrics['envelope_correlation']:.6g}"
    )
    return EXIT_OK


def cmd_verify(args) -> int:
    manifest = args.manifest or (args.out / "run_manifest.json")
    problems = verify_manifest(manifest)
    if problems:
        for p in problems:
            print(f"FAIL {p}", file=sys.stderr)
        return EXIT_NUMERICAL
    print("manifest verified: all outputs present with matching hashes")
    return EXIT_OK


_COMMANDS = {
    "modes": cmd_modes,
    "tf": cmd_tf,
    "kk": cmd_kk,
    "zerosearch": cmd_zerosearch,
    "blindtest": cmd_blindtest,
    "timeresp": cmd_timeresp,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        args.out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"error: cannot create output directory: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        return _COMMANDS[args.command](args)
    except _NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except _INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    raise SystemExit(main())
