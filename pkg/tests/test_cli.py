import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from domatch.cli import main
from domatch.harness import GapSpec, apply_gap, load_config, make_lr, prepare_inputs
from domatch.image import load_raster, luma_y, read_float_dump, save_raster, to_grayscale, write_float_dump
from domatch.metrics import psnr, ssim, ssim_s
from domatch.numerics import dft2
from test_harness import SMALL_CFG


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out.strip(), err


@pytest.fixture(scope="module")
def hue_pair(tmp_path_factory):
    """Bundled fixture crop: LR surrogate and a 60-degree hue-shifted reference."""
    d = tmp_path_factory.mktemp("pair")
    src = prepare_inputs(load_config("default"))
    save_raster(make_lr(src, 4), d / "lr.png")
    save_raster(apply_gap(src, GapSpec(hue_degrees=60)), d / "ref.png")
    return d / "lr.png", d / "ref.png"


# --- match ---------------------------------------------------------------

def test_match_self_prints_one(capsys, hue_pair, tmp_path):
    lr, _ = hue_pair
    code, out, _ = run(capsys, "match", "--input", lr, "--ref", lr, "--patch", 8, "--stride", 8,
                       "--out", tmp_path / "m.png")
    assert code == 0 and out == "1.0000"
    assert (tmp_path / "m.png").is_file()


def test_match_gray_report_schema(capsys, hue_pair, tmp_path):
    lr, ref = hue_pair
    rep = tmp_path / "r.json"
    code, _, _ = run(capsys, "match", "--input", lr, "--ref", ref, "--gray",
                     "--out", tmp_path / "m.png", "--report", rep)
    assert code == 0
    doc = json.loads(rep.read_text())
    g = doc["match"]["geometry"]
    assert len(doc["match"]["indices"]) == g["grid_w"] * g["grid_h"] == 12 * 12
    assert doc["gray_matching"] is True
    assert set(doc["metrics"]) >= {"psnr_db", "ssim", "ssim_s"}


def test_match_gray_beats_baseline_on_hue_gap(capsys, hue_pair, tmp_path):
    lr, ref = hue_pair
    _, base, _ = run(capsys, "match", "--input", lr, "--ref", ref, "--out", tmp_path / "a.png")
    _, gray, _ = run(capsys, "match", "--input", lr, "--ref", ref, "--gray", "--out", tmp_path / "b.png")
    assert float(gray) > float(base)


def test_match_errors(capsys, hue_pair, tmp_path):
    lr, _ = hue_pair
    code, _, err = run(capsys, "match", "--input", tmp_path / "nope.png", "--ref", lr,
                       "--out", tmp_path / "m.png")
    assert code == 1 and "nope.png" in err
    code, _, err = run(capsys, "match", "--input", lr, "--ref", lr, "--patch", 500,
                       "--out", tmp_path / "m.png")
    assert code == 2 and err


def test_unknown_flag_and_exclusive_flags_rejected(capsys, hue_pair, tmp_path):
    lr, _ = hue_pair
    with pytest.raises(SystemExit) as info:
        main(["match", "--input", str(lr), "--ref", str(lr), "--out", "x.png", "--bogus"])
    assert info.value.code == 2
    with pytest.raises(SystemExit) as info:
        main(["adapt", "--content", str(lr), "--style", str(lr), "--wct", "--adain",
              "--out", str(tmp_path / "o.png")])
    assert info.value.code == 2


# --- adapt ---------------------------------------------------------------

def test_adapt_identity_within_quantization(capsys, hue_pair, tmp_path):
    lr, _ = hue_pair
    code, _, _ = run(capsys, "adapt", "--content", lr, "--style", lr, "--out", tmp_path / "o.png")
    assert code == 0
    assert np.max(np.abs(load_raster(tmp_path / "o.png") - load_raster(lr))) <= 1 / 255 + 1e-12


def test_adapt_adain_on_affine_channels(capsys, rng, tmp_path):
    style = rng.uniform(0.2, 0.8, size=(3, 10, 10))
    style[1] = 0.5 * style[0] + 0.1
    style[2] = 0.2 * style[0] + 0.3
    content = np.stack([2.0 * style[0] - 0.3, 0.7 * style[1] + 0.2, 1.3 * style[2]])
    write_float_dump(content, tmp_path / "c.rmfp")
    write_float_dump(style, tmp_path / "s.rmfp")
    code, out, _ = run(capsys, "adapt", "--content", tmp_path / "c.rmfp", "--style", tmp_path / "s.rmfp",
                       "--method", "adain", "--out", tmp_path / "o.png")
    assert code == 0 and float(out) < 1e-6


def test_adapt_pr_keeps_amplitude(capsys, hue_pair, tmp_path):
    lr, ref = hue_pair
    common = ("--content", ref, "--style", lr, "--wct")
    run(capsys, "adapt", *common, "--out", tmp_path / "a.png", "--float-dump", tmp_path / "a.rmfp")
    run(capsys, "adapt", *common, "--pr", "--out", tmp_path / "b.png", "--float-dump", tmp_path / "b.rmfp")
    a, b = read_float_dump(tmp_path / "a.rmfp"), read_float_dump(tmp_path / "b.rmfp")
    for ch in range(3):
        amp_a, amp_b = np.abs(dft2(a[ch])), np.abs(dft2(b[ch]))
        assert np.max(np.abs(amp_a - amp_b)) < 1e-6 * max(1.0, amp_a.max())


def test_adapt_channel_mismatch(capsys, hue_pair, tmp_path):
    lr, _ = hue_pair
    g = tmp_path / "g.png"
    save_raster(np.full((8, 8, 1), 0.5), g)
    code, _, _ = run(capsys, "adapt", "--content", g, "--style", lr, "--out", tmp_path / "o.png")
    assert code == 2


# --- metrics -------------------------------------------------------------

def test_metrics_identical(capsys, hue_pair):
    lr, _ = hue_pair
    assert run(capsys, "metrics", "--a", lr, "--b", lr, "--metric", "psnr")[1] == "inf"
    assert run(capsys, "metrics", "--a", lr, "--b", lr, "--metric", "ssim-s")[1] == "1.0000"


def test_metrics_equal_library_values(capsys, hue_pair):
    lr, ref = hue_pair
    a, b = load_raster(lr), load_raster(ref)
    cases = [
        (("--metric", "psnr"), psnr(a, b)),
        (("--metric", "psnr", "--luma"), psnr(luma_y(a), luma_y(b))),
        (("--metric", "ssim"), ssim(luma_y(a), luma_y(b))),
        (("--metric", "ssim-s", "--gray"), ssim_s(to_grayscale(a), to_grayscale(b))),
        (("--metric", "ssim-s", "--global"), ssim_s(luma_y(a), luma_y(b), global_window=True)),
    ]
    for flags, expected in cases:
        code, out, _ = run(capsys, "metrics", "--a", lr, "--b", ref, *flags)
        assert code == 0 and out == f"{expected:.4f}"


def test_metrics_dimension_mismatch(capsys, hue_pair, tmp_path):
    lr, _ = hue_pair
    small = tmp_path / "s.png"
    save_raster(np.zeros((5, 5, 3)), small)
    code, out, err = run(capsys, "metrics", "--a", lr, "--b", small, "--metric", "psnr")
    assert code == 2 and out == "" and "mismatch" in err


# --- bench ---------------------------------------------------------------

def test_bench_default_config(capsys, tmp_path):
    code, _, _ = run(capsys, "bench", "--config", "default", "--out-dir", tmp_path, "--threads", 4)
    assert code == 0
    with open(tmp_path / "bench.csv", newline="") as fh:
        assert len(list(csv.reader(fh))) == 21


def test_bench_malformed_config(capsys, tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("[io]\nimage = aerial_a.png\n[arms]\nbase = gray:sometimes\n")
    code, _, err = run(capsys, "bench", "--config", bad, "--out-dir", tmp_path / "o")
    assert code == 2 and f"{bad}:4:" in err


def test_bench_double_run_identical(capsys, tmp_path):
    cfg = tmp_path / "small.cfg"
    cfg.write_text(SMALL_CFG)
    run(capsys, "bench", "--config", cfg, "--out-dir", tmp_path / "a")
    run(capsys, "bench", "--config", cfg, "--out-dir", tmp_path / "b", "--threads", 2)
    assert (tmp_path / "a" / "bench.csv").read_bytes() == (tmp_path / "b" / "bench.csv").read_bytes()


def test_module_entry_point(hue_pair):
    lr, _ = hue_pair
    proc = subprocess.run([sys.executable, "-m", "domatch", "metrics", "--a", str(lr), "--b", str(lr),
                           "--metric", "psnr"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.strip() == "inf"
