import numpy as np
import pytest

from fields import layered_field, plane_field
from srgf.bitstream import pack_header, section_names
from srgf.errors import InputError, StreamError
from srgf.lightfield import psnr
from srgf.pipeline import CodecConfig, decode, encode

COPY = "cp {in} {out}"


def small_field():
    return layered_field(grid=(2, 2), shape=(24, 24), bg_disparity=0.5,
                         fg_disparity=2.0, fg_box=(6, 6, 9, 9), seed=3)


def assert_exact(lf, result):
    back = decode(result.data)
    assert back.bitdepth == lf.bitdepth
    assert np.array_equal(back.views, lf.views)


@pytest.mark.parametrize("mode", ["nonseparable", "separable"])
def test_bypass_is_bit_exact(mode):
    lf, disp = small_field()
    result = encode(lf, disp, CodecConfig(mode=mode, q=0.0, superrays=12))
    assert_exact(lf, result)


def test_bypass_exact_with_estimated_disparity():
    lf, _ = plane_field(grid=(1, 3), shape=(20, 28), disparity=1.0, seed=5)
    result = encode(lf, None, CodecConfig(q=0.0, superrays=8))
    assert_exact(lf, result)


def test_ten_bit_bypass_round_trip():
    lf, disp = plane_field(grid=(2, 2), shape=(20, 20), disparity=1.0,
                           peak=1023, seed=6)
    assert lf.bitdepth == 10
    result = encode(lf, disp, CodecConfig(mode="separable", q=0.0, superrays=6))
    assert_exact(lf, result)


@pytest.mark.parametrize("mode", ["nonseparable", "separable"])
def test_unit_step_stays_close_on_photo_content(mode):
    lf, disp = layered_field(grid=(2, 2), shape=(32, 32), bg_disparity=1.0,
                             fg_disparity=3.0, fg_box=(8, 8, 12, 12),
                             bg_texture="photo", fg_texture="photo")
    result = encode(lf, disp, CodecConfig(mode=mode, q=1.0, superrays=24))
    back = decode(result.data)
    assert psnr(lf, back) > 40.0
    assert result.bpp < 8.0


def test_plugin_reference_codec():
    lf, disp = small_field()
    cfg = CodecConfig(mode="separable", q=0.0, superrays=12,
                      ref_codec="plugin", plugin_encode=COPY,
                      plugin_decode=COPY)
    result = encode(lf, disp, cfg)
    back = decode(result.data, plugin_decode=COPY)
    assert np.array_equal(back.views, lf.views)


@pytest.mark.parametrize("mode", ["nonseparable", "separable"])
def test_thread_count_does_not_change_bytes(mode):
    lf, disp = small_field()
    one = encode(lf, disp, CodecConfig(mode=mode, q=1.0, superrays=12, threads=1))
    four = encode(lf, disp, CodecConfig(mode=mode, q=1.0, superrays=12, threads=4))
    assert one.data == four.data
    assert np.array_equal(decode(one.data, threads=3).views,
                          decode(one.data, threads=1).views)


def test_vertex_cap_splits_large_superrays():
    lf, disp = small_field()
    loose = encode(lf, disp, CodecConfig(q=0.0, superrays=2, vertex_cap=20000))
    tight = encode(lf, disp, CodecConfig(q=0.0, superrays=2, vertex_cap=200))
    assert tight.header.label_count > loose.header.label_count
    assert_exact(lf, tight)


def test_disparity_shape_mismatch_rejected():
    lf, _ = small_field()
    with pytest.raises(InputError, match="disparity shape"):
        encode(lf, np.zeros((5, 5)))


def test_unknown_mode_rejected():
    lf, disp = small_field()
    with pytest.raises(InputError, match="mode"):
        encode(lf, disp, CodecConfig(mode="hybrid"))


def test_unknown_reference_codec_rejected():
    lf, disp = small_field()
    with pytest.raises(InputError, match="reference codec"):
        encode(lf, disp, CodecConfig(ref_codec="webp"))


def test_truncated_stream_names_its_section():
    lf, disp = small_field()
    data = encode(lf, disp, CodecConfig(superrays=12)).data
    with pytest.raises(StreamError) as err:
        decode(data[:-3])
    assert err.value.section.startswith("coefficients-")
    with pytest.raises(StreamError) as err:
        decode(data[:10])
    assert err.value.section == "header"


def test_section_sizes_account_for_whole_stream():
    lf, disp = small_field()
    result = encode(lf, disp, CodecConfig(superrays=12))
    names = section_names(result.header.mode)
    assert set(result.section_sizes) == set(names)
    total = len(pack_header(result.header)) + sum(
        4 + result.section_sizes[n] for n in names)
    assert total == len(result.data)
    assert result.bits_total == 8 * len(result.data)
    assert result.bpp == pytest.approx(result.bits_total / lf.views.size)


def test_header_echoes_configuration():
    lf, disp = small_field()
    cfg = CodecConfig(mode="separable", q=0.75, superrays=12,
                      slic_compactness=4.0)
    h = encode(lf, disp, cfg).header
    assert h.mode_name == "separable"
    assert h.q == 0.75
    assert h.slic_target == 12
    assert h.slic_compactness == 4.0
    assert h.bitdepth == 8


def test_superray_stats_cover_modes():
    lf, disp = small_field()
    nonsep = encode(lf, disp, CodecConfig(q=1.0, superrays=12)).superrays
    sep = encode(lf, disp, CodecConfig(mode="separable", q=1.0,
                                       superrays=12)).superrays
    assert sum(s.size for s in nonsep) == lf.views.size
    for s in nonsep:
        assert s.log10_cond_sampled is not None
        assert s.log10_cond_naive is not None
        assert len(s.predicted_values) == s.n_ref
        assert 0.0 <= s.energy_fraction <= 1.0 + 1e-12
        assert 1 <= s.coded_class <= 4
    for s in sep:
        assert s.log10_cond_sampled is None
        assert len(s.predicted_values) <= s.size
