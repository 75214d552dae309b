import numpy as np
import pytest

from fields import layered_field
from srgf.cli import build_parser, main
from srgf.lightfield import load_light_field, save_light_field


@pytest.fixture()
def scene(tmp_path):
    lf, disp = layered_field(grid=(2, 2), shape=(20, 20), bg_disparity=0.5,
                             fg_disparity=2.0, fg_box=(5, 5, 8, 8), seed=9)
    src = tmp_path / "views"
    save_light_field(lf, src)
    dpath = tmp_path / "disp.npy"
    np.save(dpath, disp)
    return lf, src, dpath, tmp_path


def test_defaults():
    args = build_parser().parse_args(["encode", "a", "b"])
    assert args.q == "1"
    assert args.superrays == 4000
    assert args.threads == 1
    assert args.mode == "nonseparable"


def test_encode_decode_round_trip(scene, capsys):
    lf, src, dpath, tmp = scene
    stream = tmp / "field.srgf"
    out = tmp / "decoded"
    assert main(["encode", str(src), str(stream), "--q", "bypass",
                 "--superrays", "8", "--disparity", str(dpath)]) == 0
    logged = capsys.readouterr().out
    assert "bytes" in logged and "bpp" in logged
    assert main(["decode", str(stream), str(out),
                 "--reference", str(src)]) == 0
    logged = capsys.readouterr().out
    assert "psnr inf" in logged
    assert np.array_equal(load_light_field(out).views, lf.views)


def test_encode_separable_with_unit_step(scene, capsys):
    lf, src, dpath, tmp = scene
    stream = tmp / "field.srgf"
    out = tmp / "decoded"
    assert main(["encode", str(src), str(stream), "--mode", "separable",
                 "--q", "1", "--superrays", "8",
                 "--disparity", str(dpath)]) == 0
    assert main(["decode", str(stream), str(out)]) == 0
    assert load_light_field(out).views.shape == lf.views.shape


def test_analyze_prints_table_and_writes_report(scene, capsys):
    lf, src, dpath, tmp = scene
    report = tmp / "report.txt"
    assert main(["analyze", str(src), "--q", "bypass", "--superrays", "8",
                 "--disparity", str(dpath), "--report", str(report)]) == 0
    table = capsys.readouterr().out
    assert "nonseparable" in table and "separable" in table
    assert "log10 condition" in table
    text = report.read_text()
    assert "mode.nonseparable.energy_fraction = " in text
    assert "mode.separable.psnr_db = " in text
    assert "superray mode=nonseparable" in text
    assert "section.reference = " in text


def test_missing_input_directory_is_exit_2(tmp_path, capsys):
    code = main(["encode", str(tmp_path / "nowhere"), str(tmp_path / "x")])
    assert code == 2
    assert "error:" in capsys.readouterr().err


def test_bad_q_values_are_exit_2(scene, capsys):
    lf, src, dpath, tmp = scene
    stream = tmp / "field.srgf"
    assert main(["encode", str(src), str(stream), "--q", "fast"]) == 2
    assert "--q" in capsys.readouterr().err
    assert main(["encode", str(src), str(stream), "--q", "-3"]) == 2
    assert "non-negative" in capsys.readouterr().err


def test_missing_disparity_file_is_exit_2(scene, capsys):
    lf, src, dpath, tmp = scene
    code = main(["encode", str(src), str(tmp / "x"),
                 "--disparity", str(tmp / "ghost.npy")])
    assert code == 2
    assert "disparity" in capsys.readouterr().err


def test_bad_plugin_template_is_exit_2(scene, capsys):
    lf, src, dpath, tmp = scene
    code = main(["encode", str(src), str(tmp / "x"), "--ref-codec", "plugin",
                 "--plugin-encode", "cat", "--plugin-decode", "cat",
                 "--superrays", "8"])
    assert code == 2
    assert "plugin" in capsys.readouterr().err


def test_corrupt_stream_is_exit_3(scene, capsys):
    lf, src, dpath, tmp = scene
    bad = tmp / "bad.srgf"
    bad.write_bytes(b"not a stream at all")
    assert main(["decode", str(bad), str(tmp / "out")]) == 3
    assert "corrupt stream (header)" in capsys.readouterr().err


def test_truncated_stream_is_exit_3(scene, capsys):
    lf, src, dpath, tmp = scene
    stream = tmp / "field.srgf"
    assert main(["encode", str(src), str(stream), "--superrays", "8",
                 "--disparity", str(dpath)]) == 0
    capsys.readouterr()
    stream.write_bytes(stream.read_bytes()[:-5])
    assert main(["decode", str(stream), str(tmp / "out")]) == 3
    assert "coefficients-" in capsys.readouterr().err


def test_unreadable_stream_path_is_exit_2(tmp_path, capsys):
    assert main(["decode", str(tmp_path / "missing.srgf"),
                 str(tmp_path / "out")]) == 2
    assert "cannot read stream" in capsys.readouterr().err
