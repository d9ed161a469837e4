import sys
from pathlib import Path

import numpy as np
import pytest

from evrecon import cli
from evrecon import io as evio
from evrecon.metrics import mse

FIXTURES = Path(__file__).parent / "fixtures"
SENSOR_ARGS = ["--width", "64", "--height", "64"]


def run(args, capsys=None):
    return cli.main(args)


class TestReconstruct:
    def test_golden_fixture(self, tmp_path):
        out = tmp_path / "out.pgm"
        rc = cli.main(["reconstruct",
                       "--events", str(FIXTURES / "events.txt"),
                       "--flow", str(FIXTURES / "flow_global.txt"),
                       "--method", "tikhonov", *SENSOR_ARGS,
                       "--out", str(out)])
        assert rc == 0
        got = evio.read_pgm(out.read_bytes())
        want = evio.read_pgm((FIXTURES / "golden_tikhonov.pgm").read_bytes())
        assert mse(got, want) < 1e-6

    def test_dense_flow_and_trace(self, tmp_path):
        out = tmp_path / "out.pgm"
        trace = tmp_path / "trace.csv"
        rc = cli.main(["reconstruct",
                       "--events", str(FIXTURES / "events.txt"),
                       "--flow", str(FIXTURES / "flow_dense.flo"),
                       "--method", "tv", "--n-events", "800", *SENSOR_ARGS,
                       "--out", str(out), "--trace", str(trace)])
        assert rc == 0
        text = trace.read_text()
        assert "# events_sha256=" in text
        assert "# method=tv" in text
        assert "# lambda=0.04" in text
        assert "# n_events=800" in text
        header_rows = [l for l in text.splitlines() if not l.startswith("#")]
        assert header_rows[0] == "iter,data_term,prior_term,total"
        assert len(header_rows) == 1 + 21  # init + 20 outer iterations

    def test_missing_events_flag_is_usage_error(self, capsys):
        rc = cli.main(["reconstruct", "--flow", "x.flo"])
        assert rc == 1
        assert "usage" in capsys.readouterr().err

    def test_nonexistent_input_is_io_error(self, tmp_path):
        rc = cli.main(["reconstruct", "--events", str(tmp_path / "nope.txt"),
                       "--flow", str(FIXTURES / "flow_global.txt"), *SENSOR_ARGS])
        assert rc == 2

    def test_pnp_with_bridge_echo(self, tmp_path):
        out = tmp_path / "out.pgm"
        rc = cli.main(["reconstruct",
                       "--events", str(FIXTURES / "events.txt"),
                       "--flow", str(FIXTURES / "flow_global.txt"),
                       "--method", "pnp", "--lambda", "0.3",
                       "--pnp-iters", "4",
                       "--denoiser", f"bridge:{sys.executable} -m evrecon.bridge_echo",
                       *SENSOR_ARGS, "--out", str(out)])
        assert rc == 0
        assert out.exists()


class TestMetricsCommand:
    def test_self_comparison(self, capsys):
        rc = cli.main(["metrics", "--pred", str(FIXTURES / "scene_mid.pgm"),
                       "--gt", str(FIXTURES / "scene_mid.pgm")])
        assert rc == 0
        out = capsys.readouterr().out
        assert "ssim=1.0" in out
        assert "mse=0.0" in out

    def test_csv_output(self, tmp_path, capsys):
        csv = tmp_path / "m.csv"
        for _ in range(2):
            rc = cli.main(["metrics", "--pred", str(FIXTURES / "golden_tikhonov.pgm"),
                           "--gt", str(FIXTURES / "scene_mid.pgm"),
                           "--align", "--equalize", "--csv", str(csv)])
            assert rc == 0
        lines = csv.read_text().splitlines()
        assert lines[0] == "pred,gt,ssim,mse"
        assert len(lines) == 3


class TestSimulateAndFlow:
    def test_simulate_then_cmax(self, tmp_path, capsys):
        video = tmp_path / "video"
        video.mkdir()
        # two frames, one pixel ramps up by 0.25 -> 2 events at C=0.1
        f0 = np.zeros((4, 4))
        f1 = np.zeros((4, 4))
        f1[1, 1] = 0.25
        video.joinpath("f0.pgm").write_bytes(evio.write_pgm(f0, 8))
        video.joinpath("f1.pgm").write_bytes(evio.write_pgm(f1, 8))
        events = tmp_path / "ev.txt"
        rc = cli.main(["simulate", "--video", str(video), "--contrast", "0.1",
                       "--fps", "10", "--out", str(events)])
        assert rc == 0
        assert "2 events" in capsys.readouterr().out
        pk = evio.parse_events(events.read_bytes(), (4, 4))
        assert len(pk) == 2
        rc = cli.main(["flow-cmax", "--events", str(events), "--range", "1",
                       "--step", "1", "--width", "4", "--height", "4"])
        assert rc == 0
        ux, uy = capsys.readouterr().out.split()
        assert float(ux) == 0.0 and float(uy) == 0.0

    def test_simulate_timestamps_file(self, tmp_path):
        video = tmp_path / "video"
        video.mkdir()
        f0 = np.zeros((2, 2))
        f1 = np.full((2, 2), 0.5)
        video.joinpath("a.pgm").write_bytes(evio.write_pgm(f0, 8))
        video.joinpath("b.pgm").write_bytes(evio.write_pgm(f1, 8))
        video.joinpath("timestamps.txt").write_text("0.0\n2.0\n")
        events = tmp_path / "ev.txt"
        rc = cli.main(["simulate", "--video", str(video), "--contrast", "0.2",
                       "--out", str(events)])
        assert rc == 0
        pk = evio.parse_events(events.read_bytes(), (2, 2))
        assert pk.t.max() <= 2.0
        assert pk.t.max() > 1.0


class TestCorruptFlow:
    def test_zero_noise_roundtrip(self, tmp_path):
        out = tmp_path / "c.flo"
        rc = cli.main(["corrupt-flow", "--flow", str(FIXTURES / "flow_dense.flo"),
                       "--b", "0", "--seed", "1", *SENSOR_ARGS, "--out", str(out)])
        assert rc == 0
        assert out.read_bytes() == (FIXTURES / "flow_dense.flo").read_bytes()

    def test_seeded_reproducible(self, tmp_path):
        outs = []
        for name in ("a.flo", "b.flo"):
            out = tmp_path / name
            rc = cli.main(["corrupt-flow", "--flow", str(FIXTURES / "flow_dense.flo"),
                           "--b", "2.5", "--seed", "9", *SENSOR_ARGS,
                           "--out", str(out)])
            assert rc == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]

    def test_global_flow_is_numerical_error(self, tmp_path):
        rc = cli.main(["corrupt-flow", "--flow", str(FIXTURES / "flow_global.txt"),
                       "--b", "1", "--seed", "1", *SENSOR_ARGS,
                       "--out", str(tmp_path / "x.flo")])
        assert rc == 3


class TestPoissonCommand:
    def test_direct_and_pnp(self, tmp_path):
        for method in ("direct", "pnp"):
            out = tmp_path / f"{method}.pgm"
            rc = cli.main(["poisson", "--laplacian", str(FIXTURES / "laplacian.flo1"),
                           "--method", method, "--pnp-iters", "6",
                           "--out", str(out)])
            assert rc == 0
            img = evio.read_pgm(out.read_bytes())
            assert img.shape == (64, 64)

    def test_direct_matches_scene(self, tmp_path):
        out = tmp_path / "p.pgm"
        rc = cli.main(["poisson", "--laplacian", str(FIXTURES / "laplacian.flo1"),
                       "--method", "direct", "--out", str(out)])
        assert rc == 0
        got = evio.read_pgm(out.read_bytes())
        want = evio.read_pgm((FIXTURES / "scene_mid.pgm").read_bytes())
        from evrecon.metrics import align_mean_scale
        rel = np.linalg.norm(align_mean_scale(got, want) - want) / np.linalg.norm(want)
        assert rel < 0.15  # float32 container + 8-bit quantization in the loop


class TestVariantCommands:
    def test_superres(self, tmp_path):
        out = tmp_path / "sr.pgm"
        rc = cli.main(["superres", "--scale", "2",
                       "--events", str(FIXTURES / "events.txt"),
                       "--flow", str(FIXTURES / "flow_global.txt"),
                       "--method", "tv", *SENSOR_ARGS, "--out", str(out)])
        assert rc == 0
        assert evio.read_pgm(out.read_bytes()).shape == (128, 128)

    def test_color(self, tmp_path):
        prefix = tmp_path / "col"
        rc = cli.main(["color", "--bayer", "RGGB",
                       "--events", str(FIXTURES / "events.txt"),
                       "--flow", str(FIXTURES / "flow_global.txt"),
                       "--method", "tikhonov", *SENSOR_ARGS,
                       "--out-prefix", str(prefix)])
        assert rc == 0
        for suffix in ("_r.pgm", "_g.pgm", "_b.pgm", ".ppm"):
            assert (tmp_path / ("col" + suffix)).exists()
        ppm = (tmp_path / "col.ppm").read_bytes()
        assert ppm.startswith(b"P6\n64 64\n255\n")

    def test_clusters(self, tmp_path):
        pk = evio.parse_events((FIXTURES / "events.txt").read_bytes(), (64, 64))
        labels = tmp_path / "labels.txt"
        labels.write_text("".join(f"{i % 2}\n" for i in range(len(pk))))
        prefix = tmp_path / "cl"
        rc = cli.main(["clusters", "--labels", str(labels),
                       "--flows", ",".join([str(FIXTURES / "flow_global.txt")] * 2),
                       "--events", str(FIXTURES / "events.txt"),
                       "--method", "tv", *SENSOR_ARGS,
                       "--out-prefix", str(prefix)])
        assert rc == 0
        assert (tmp_path / "cl_c0.pgm").exists()
        assert (tmp_path / "cl_c1.pgm").exists()
