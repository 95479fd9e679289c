import csv

import pytest

from inducedfringes import read_image
from inducedfringes.cli import A_VS_D_COLUMNS, EQUIVALENCE_COLUMNS, ESTIMATES_COLUMNS, main

SMALL = ["--set", "camera.width_px=256", "--set", "camera.height_px=256"]


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def tree(root):
    return {p.relative_to(root): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


class TestSimulate:
    def test_single_frame(self, tmp_path):
        assert main(["simulate", "--output-dir", str(tmp_path), "--d-mm", "9", "--seed", "3", *SMALL]) == 0
        img = read_image(tmp_path / "frame_d9mm.pgm")
        assert img.metadata["seed"] == 3
        assert img.metadata["d_m"] == pytest.approx(0.009)
        assert img.camera.shape == (256, 256)

    def test_phase_scan(self, tmp_path):
        args = ["simulate", "--output-dir", str(tmp_path), "--set", "transfer.kind=uniform",
                "--phase-scan", "0,90,180,270", "--noise-free", *SMALL]
        assert main(args) == 0
        names = sorted(p.name for p in tmp_path.glob("*.pgm"))
        assert names == [f"frame_uniform_phi{deg}deg.pgm" for deg in (0, 180, 270, 90)]
        dark = read_image(tmp_path / "frame_uniform_phi180deg.pgm").intensities
        bright = read_image(tmp_path / "frame_uniform_phi0deg.pgm").intensities
        assert dark.max() < 1e-6 * bright.max()

    def test_blocked_idler(self, tmp_path):
        assert main(["simulate", "--output-dir", str(tmp_path), "--transmission", "0", "--noise-free", *SMALL]) == 0
        assert read_image(tmp_path / "frame_d17mm_t0.pgm").metadata["transmission"] == 0.0

    def test_config_error(self, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("optical.lambda_p_nm = 600\n")
        assert main(["simulate", "--config", str(cfg), "--output-dir", str(tmp_path)]) == 1
        assert "bad.cfg:1: optical.lambda_p_nm" in capsys.readouterr().err
        assert not list(tmp_path.glob("*.pgm"))

    def test_d_mm_needs_defocus(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            main(["simulate", "--output-dir", str(tmp_path), "--set", "transfer.kind=uniform", "--d-mm", "5"])
        assert exc.value.code == 2


@pytest.fixture(scope="module")
def frames(tmp_path_factory):
    root = tmp_path_factory.mktemp("frames")
    for d in ("9", "13", "17"):
        assert main(["simulate", "--output-dir", str(root), "--d-mm", d, "--noise-free", *SMALL]) == 0
    return root


class TestAnalyze:
    def test_directory(self, frames, tmp_path, capsys):
        assert main(["analyze", str(frames), "--output-dir", str(tmp_path)]) == 0
        assert "lambda_eq =" in capsys.readouterr().out
        extrema = rows(tmp_path / "extrema.csv")
        assert {r[0] for r in extrema[1:]} == {"9.0", "13.0", "17.0"}
        assert len(rows(tmp_path / "fits.csv")) == 4
        assert (tmp_path / "estimate.csv").exists()
        assert "images skipped: 0" in (tmp_path / "summary.txt").read_text()

    def test_corrupt_file_skipped(self, frames, tmp_path, caplog):
        broken = tmp_path / "in"
        broken.mkdir()
        for p in frames.iterdir():
            (broken / p.name).write_bytes(p.read_bytes())
        (broken / "frame_d9mm.pgm").write_bytes(b"P5\n256")
        out = tmp_path / "out"
        assert main(["analyze", str(broken), "--output-dir", str(out)]) == 0
        assert "frame_d9mm.pgm" in caplog.text
        assert "images skipped: 1" in (out / "summary.txt").read_text()

    def test_single_image(self, frames, tmp_path, capsys):
        assert main(["analyze", str(frames / "frame_d13mm.pgm"), "--output-dir", str(tmp_path)]) == 1
        assert "two or more distinct d" in capsys.readouterr().err
        assert (tmp_path / "extrema.csv").exists() and (tmp_path / "fits.csv").exists()
        assert not (tmp_path / "estimate.csv").exists()

    def test_d_count_mismatch(self, frames, tmp_path):
        with pytest.raises(SystemExit) as exc:
            main(["analyze", str(frames), "--d-mm", "9,13", "--output-dir", str(tmp_path)])
        assert exc.value.code == 2


class TestSweep:
    def test_noise_free_and_seeded(self, tmp_path):
        out = tmp_path / "sweep"
        assert main(["sweep", "--d-mm", "9,13,17", "--seed", "7", "--output-dir", str(out), *SMALL]) == 0
        assert main(["sweep", "--d-mm", "9,13,17", "--noise-free", "--output-dir", str(out), *SMALL]) == 0
        assert (out / "seed_7" / "frame_d17mm.pgm").exists()
        assert read_image(out / "seed_7" / "frame_d13mm.pgm").metadata["seed"] == 8
        est = rows(out / "estimates.csv")
        assert tuple(est[0]) == ESTIMATES_COLUMNS
        assert est[1][0] == "noise_free"
        assert abs(float(est[1][4]) - 1) < 0.03
        a = rows(out / "a_vs_d.csv")
        assert tuple(a[0]) == A_VS_D_COLUMNS and len(a) == 4

    def test_needs_two_distances(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            main(["sweep", "--d-mm", "13", "--output-dir", str(tmp_path)])
        assert exc.value.code == 2

    def test_byte_identical_reruns(self, tmp_path):
        for name in ("a", "b"):
            args = ["sweep", "--d-mm", "9,17", "--seed", "7", "--output-dir", str(tmp_path / name), *SMALL]
            assert main(args) == 0
        a, b = tree(tmp_path / "a"), tree(tmp_path / "b")
        assert a.keys() == b.keys() and a == b


def test_equivalence(tmp_path, capsys):
    assert main(["equivalence", "--ratios", "0.001,0.06,0.5", "--output-dir", str(tmp_path)]) == 0
    table = rows(tmp_path / "equivalence.csv")
    assert tuple(table[0]) == EQUIVALENCE_COLUMNS
    mismatch = [float(r[2]) for r in table[1:]]
    assert mismatch[0] < mismatch[1] < 0.05 < mismatch[2]
    assert "mismatch" in capsys.readouterr().out


def test_equivalence_fails_with_wide_beam(tmp_path):
    assert main(["equivalence", "--ratios", "0.06", "--waist-um", "250", "--output-dir", str(tmp_path)]) == 1
