import json
import os

import numpy as np

from kkphase.cli import main
from kkphase import io as kio

B = 0.9
D = 1.0
A = 0.8


def base_config(**overrides):
    doc = {
        "version": 1,
        "cavity": {
            "a": A, "b": B, "d": D,
            "cutoff_hz": 500e6,
            "n_te_max": 16, "n_tm_max": 16,
            "source": {"r_s": [0.0, B / 3, D / 3], "L": 0.01},
            "observer": {"r_o": [A / 3, B / 3, D / 3]},
        },
        "kk": {"kappa_hz": 0.5e6 / (2 * np.pi), "n_base_grid": 20000, "n_eval": 100},
    }
    doc.update(overrides)
    return doc


def write_config(tmp_path, doc, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return path


def run(args):
    return main([str(a) for a in args])


class TestModes:
    def test_example_config_gives_32_rows(self, tmp_path):
        cfg = write_config(tmp_path, base_config())
        assert run(["--config", cfg, "--out", tmp_path, "modes"]) == 0
        lines = (tmp_path / "modes.csv").read_text().strip().splitlines()
        assert len(lines) == 33  # header + 32 modes
        assert lines[0] == "family,m,n,p,f_hz,w_v_j"

    def test_caps_15_15_give_30_rows(self, tmp_path):
        doc = base_config()
        doc["cavity"]["n_te_max"] = 15
        doc["cavity"]["n_tm_max"] = 15
        cfg = write_config(tmp_path, doc)
        assert run(["--config", cfg, "--out", tmp_path, "modes"]) == 0
        lines = (tmp_path / "modes.csv").read_text().strip().splitlines()
        assert len(lines) == 31

    def test_cutoff_below_lowest_resonance_exits_2(self, tmp_path):
        doc = base_config()
        doc["cavity"]["cutoff_hz"] = 1e8
        doc["cavity"].pop("n_te_max")
        doc["cavity"].pop("n_tm_max")
        cfg = write_config(tmp_path, doc)
        assert run(["--config", cfg, "--out", tmp_path, "modes"]) == 2

    def test_schema_violation_exits_2(self, tmp_path):
        doc = base_config()
        doc["cavity"]["a"] = -1.0
        cfg = write_config(tmp_path, doc)
        assert run(["--config", cfg, "--out", tmp_path, "modes"]) == 2

    def test_malformed_json_exits_2(self, tmp_path):
        cfg = tmp_path / "bad.json"
        cfg.write_text("{not json")
        assert run(["--config", cfg, "--out", tmp_path, "modes"]) == 2

    def test_missing_config_flag_exits_2(self, tmp_path):
        assert run(["--out", tmp_path, "modes"]) == 2


class TestTf:
    def test_outputs_and_zero_report(self, tmp_path):
        cfg = write_config(tmp_path, base_config())
        assert run(["--config", cfg, "--out", tmp_path, "tf"]) == 0
        zeros = kio.read_zeros_json(tmp_path / "rhp_zeros.json")
        assert len(zeros.pairs) == 1
        tf = kio.read_tf_json(tmp_path / "rational_tf.json")
        assert len(tf.poles) > len(tf.zeros)
        mag = kio.read_magnitude_csv(tmp_path / "magnitude.csv")
        assert np.all(np.isfinite(mag.log_mag))

    def test_manifest_verify_round_trip(self, tmp_path):
        cfg = write_config(tmp_path, base_config())
        run(["--config", cfg, "--out", tmp_path, "tf"])
        assert run(["--out", tmp_path, "verify"]) == 0
        # tamper and expect a hash mismatch
        target = tmp_path / "rhp_zeros.json"
        target.write_text(target.read_text().replace("5", "6", 1))
        assert run(["--out", tmp_path, "verify"]) == 3


class TestKk:
    def test_constant_magnitude_reconstructs_zero_phase(self, tmp_path):
        om = np.linspace(1e5, 1e9, 4000)
        from kkphase.kk import MagnitudeSpectrum

        mag = MagnitudeSpectrum(omegas=om, log_mag=np.full_like(om, 1.3), kappa=0.0)
        mag_path = tmp_path / "mag.csv"
        kio.write_magnitude_csv(mag_path, mag)
        doc = base_config()
        doc["kk"].update({"f_eval_min_hz": 1e6, "f_eval_max_hz": 1e8, "n_eval": 50})
        cfg = write_config(tmp_path, doc)
        assert run(["--config", cfg, "--out", tmp_path, "kk",
                    "--magnitude", mag_path]) == 0
        phase = kio.read_phase_csv(tmp_path / "phase_reconstructed.csv")
        assert np.max(np.abs(phase.gamma)) < 1e-9

    def test_grid_too_coarse_exits_3(self, tmp_path):
        om = np.logspace(-2, 2, 40)
        from kkphase.kk import MagnitudeSpectrum

        mag = MagnitudeSpectrum(omegas=om, log_mag=-0.5 * np.log(1 + om**2), kappa=0.0)
        mag_path = tmp_path / "mag.csv"
        kio.write_magnitude_csv(mag_path, mag)
        doc = base_config()
        doc["kk"].update(
            {"f_eval_min_hz": 0.1, "f_eval_max_hz": 1.0, "n_eval": 5,
             "phase_tol_deg": 1e-6}
        )
        cfg = write_config(tmp_path, doc)
        assert run(["--config", cfg, "--out", tmp_path, "kk",
                    "--magnitude", mag_path]) == 3

    def test_corrected_run_with_zero_file(self, tmp_path):
        om = np.linspace(1e-3, 400.0, 30000)
        from kkphase.kk import MagnitudeSpectrum
        from kkphase.tfcore import RhpZeroSet

        mag = MagnitudeSpectrum(omegas=om, log_mag=np.zeros_like(om), kappa=0.0)
        mag_path = tmp_path / "mag.csv"
        kio.write_magnitude_csv(mag_path, mag)
        zeros = RhpZeroSet(pairs=(0.8 + 4j,), real_zeros=())
        zeros_path = tmp_path / "zeros.json"
        kio.write_zeros_json(zeros_path, zeros)
        doc = {"version": 1,
               "kk": {"kappa_hz": 0.0, "f_data_min_hz": 1e-4,
                      "f_eval_min_hz": 0.1, "f_eval_max_hz": 3.0, "n_eval": 40}}
        cfg = write_config(tmp_path, doc)
        assert run(["--config", cfg, "--out", tmp_path, "kk",
                    "--magnitude", mag_path, "--zeros", zeros_path]) == 0
        phase = kio.read_phase_csv(tmp_path / "phase_reconstructed.csv")
        from kkphase.kk import blaschke_arg

        expect = blaschke_arg(zeros, phase.omegas)
        assert np.degrees(np.max(np.abs(phase.gamma - expect))) < 0.1


class TestBlindProtocol:
    def blind_config(self):
        return {
            "version": 1,
            "blindtest": {"mus": [[0.8, 4.0]], "chi": 1.0, "t_max_s": 12.0,
                          "dt_s": 0.005},
            "zerosearch": {
                "beta_min_per_s": 0.4, "beta_max_per_s": 1.2, "n_beta": 41,
                "omega_min_rad_s": 3.0, "omega_max_rad_s": 5.0, "n_omega": 41,
                "t_off_s": 10.0, "scale_constant_s": 10.0,
            },
        }

    def test_round_trip_recovers_zero(self, tmp_path):
        cfg = write_config(tmp_path, self.blind_config())
        assert run(["--config", cfg, "--out", tmp_path, "blindtest"]) == 0
        imp = tmp_path / "blind_impulse.csv"
        key = tmp_path / "blind_answer.key.json"
        assert imp.exists() and key.exists()
        out2 = tmp_path / "scanrun"
        assert run(["--config", cfg, "--out", out2, "zerosearch",
                    "--impulse", imp, "--blind"]) == 0
        dets = kio.read_detections_json(out2 / "detections.json")
        assert len(dets) == 1
        key_doc = kio.read_json(key)
        zx, zy = key_doc["zeros"][0]
        assert abs(dets[0].beta_hat - zx) <= 0.04
        assert abs(dets[0].omega_hat - zy) <= 0.1

    def test_scan_refuses_sealed_key(self, tmp_path):
        cfg = write_config(tmp_path, self.blind_config())
        run(["--config", cfg, "--out", tmp_path, "blindtest"])
        key = tmp_path / "blind_answer.key.json"
        assert run(["--config", cfg, "--out", tmp_path, "zerosearch",
                    "--impulse", key]) == 2

    def test_blind_flag_requires_impulse(self, tmp_path):
        cfg = write_config(tmp_path, self.blind_config())
        assert run(["--config", cfg, "--out", tmp_path, "zerosearch",
                    "--blind"]) == 2

    def test_determinism_byte_identical(self, tmp_path):
        os.environ["SOURCE_DATE_EPOCH"] = "1700000000"
        try:
            cfg1 = write_config(tmp_path, self.blind_config(), "c1.json")
            out_a, out_b = tmp_path / "a", tmp_path / "b"
            assert run(["--config", cfg1, "--out", out_a, "--seed", 5, "blindtest"]) == 0
            assert run(["--config", cfg1, "--out", out_b, "--seed", 5, "blindtest"]) == 0
            for name in ("blind_impulse.csv", "blind_answer.key.json", "run_manifest.json"):
                assert (out_a / name).read_bytes() == (out_b / name).read_bytes(), name
        finally:
            os.environ.pop("SOURCE_DATE_EPOCH")

    def test_real_zero_one_dimensional_sweep(self, tmp_path):
        doc = {
            "version": 1,
            "blindtest": {"real_mus": [1.0], "chi": 0.7, "t_max_s": 12.0,
                          "dt_s": 0.005},
            "zerosearch": {
                "beta_min_per_s": 0.4, "beta_max_per_s": 1.8, "n_beta": 71,
                "omega_min_rad_s": 0.0, "omega_max_rad_s": 0.0, "n_omega": 1,
                "t_off_s": 10.0, "scale_constant_s": 10.0,
            },
        }
        cfg = write_config(tmp_path, doc)
        assert run(["--config", cfg, "--out", tmp_path, "blindtest"]) == 0
        assert run(["--config", cfg, "--out", tmp_path, "zerosearch",
                    "--impulse", tmp_path / "blind_impulse.csv", "--blind"]) == 0
        dets = kio.read_detections_json(tmp_path / "detections.json")
        assert len(dets) == 1
        assert dets[0].omega_hat == 0.0
        assert abs(dets[0].beta_hat - 1.0) <= 0.04

    def test_random_spec_needs_seed(self, tmp_path):
        doc = self.blind_config()
        doc["blindtest"] = {"n_pairs": 1, "t_max_s": 12.0, "dt_s": 0.01}
        cfg = write_config(tmp_path, doc)
        assert run(["--config", cfg, "--out", tmp_path, "blindtest"]) == 2
        assert run(["--config", cfg, "--out", tmp_path, "--seed", 3, "blindtest"]) == 0


class TestTimeresp:
    def test_direct_route_equivalence(self, tmp_path):
        doc = base_config()
        doc["pulse"] = {"family": "gaussian_cosine", "center_hz": 300e6,
                        "sigma_s": 3e-9, "t_end_s": 150e-9}
        cfg = write_config(tmp_path, doc)
        assert run(["--config", cfg, "--out", tmp_path, "timeresp",
                    "--phase-source", "direct"]) == 0
        metrics = kio.read_json(tmp_path / "metrics.json")
        assert metrics["rel_linf"] < 0.01
        assert abs(metrics["peak_ratio"] - 1.0) < 0.01

    def test_out_of_band_pulse_rejected(self, tmp_path):
        doc = base_config()
        doc["pulse"] = {"family": "gaussian_cosine", "center_hz": 495e6,
                        "sigma_s": 3e-9, "t_end_s": 100e-9}
        cfg = write_config(tmp_path, doc)
        assert run(["--config", cfg, "--out", tmp_path, "timeresp"]) == 2


class TestCavityZeroSearchCli:
    def test_small_cavity_scan(self, tmp_path):
        # coarse scan bracketing only the lowest-beta zero of example 1
        doc = base_config()
        doc["zerosearch"] = {
            "beta_min_per_s": 5e6, "beta_max_per_s": 8e7, "n_beta": 26,
            "omega_min_rad_s": 2 * np.pi * 420e6, "omega_max_rad_s": 2 * np.pi * 450e6,
            "n_omega": 31, "t_off_s": 200e-9, "scale_constant_s": 200e-9,
        }
        cfg = write_config(tmp_path, doc)
        assert run(["--config", cfg, "--out", tmp_path, "--threads", 2,
                    "zerosearch"]) == 0
        dets = kio.read_detections_json(tmp_path / "detections.json")
        assert len(dets) == 1
        assert abs(dets[0].beta_hat - 3.46e7) < 3e6
