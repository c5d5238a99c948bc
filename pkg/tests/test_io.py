import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from lrtv import io
from lrtv.errors import (
    ConfigParseError,
    ConfigValueError,
    ImageFormatError,
    InvalidMaskError,
    MalformedHeaderError,
    TruncatedPayloadError,
    UnsupportedFormatError,
    UnsupportedMaxValueError,
)
from lrtv.solver import IterationRecord, IterationTrace, SolverConfig
from lrtv.surrogates import Kind

pixels = st.tuples(st.integers(1, 9), st.integers(1, 9)).flatmap(lambda s: arrays(np.uint8, s))


def test_decode_two_by_two():
    data = b"P5\n2 2\n255\n" + bytes([0, 255, 255, 0])
    np.testing.assert_array_equal(io.decode_pgm(data), [[0, 255], [255, 0]])


def test_read_image_scales(tmp_path):
    path = tmp_path / "a.pgm"
    path.write_bytes(b"P5 2 2 255\n" + bytes([0, 255, 255, 0]))
    np.testing.assert_array_equal(io.read_image(path), [[0, 1], [1, 0]])


def test_header_comments():
    data = b"P5\n# made by hand\n2 # width\n1\n255\n" + bytes([3, 4])
    np.testing.assert_array_equal(io.decode_pgm(data), [[3, 4]])


@pytest.mark.parametrize(
    "data,error",
    [
        (b"P5\n2 2\n255\n" + bytes(3), TruncatedPayloadError),
        (b"P6\n2 2\n255\n" + bytes(12), UnsupportedFormatError),
        (b"GIF89a", UnsupportedFormatError),
        (b"P5\n2 x\n255\n" + bytes(4), MalformedHeaderError),
        (b"P5\n2 2\n", MalformedHeaderError),
        (b"P5\n2 2\n65535\n" + bytes(8), UnsupportedMaxValueError),
        (b"P5\n1 1\n255\n" + bytes(2), ImageFormatError),
    ],
)
def test_decode_errors(data, error):
    with pytest.raises(error):
        io.decode_pgm(data)


def test_quantize_clamps_and_rounds():
    np.testing.assert_array_equal(io.quantize([[1.2, -0.1, 0.5, 1 / 255]]), [[255, 0, 128, 1]])


@given(pixels)
def test_pgm_bytes_round_trip(P):
    assert np.array_equal(io.decode_pgm(io.encode_pgm(P)), P)
    assert io.encode_pgm(io.decode_pgm(io.encode_pgm(P))) == io.encode_pgm(P)


def test_image_file_round_trip_is_byte_exact(tmp_path):
    P = np.random.default_rng(0).integers(0, 256, (7, 5)).astype(np.uint8)
    a, b = tmp_path / "a.pgm", tmp_path / "b.pgm"
    a.write_bytes(io.encode_pgm(P))
    io.write_image(io.read_image(a), b)
    assert a.read_bytes() == b.read_bytes()


def test_npy_round_trip_is_exact(tmp_path):
    X = np.random.default_rng(1).standard_normal((4, 6))
    io.write_image(X, tmp_path / "x.npy")
    np.testing.assert_array_equal(io.read_image(tmp_path / "x.npy"), X)


def test_mask_round_trip(tmp_path):
    mask = np.random.default_rng(2).random((6, 4)) < 0.5
    io.write_mask(mask, tmp_path / "m.pgm")
    np.testing.assert_array_equal(io.read_mask(tmp_path / "m.pgm"), mask)
    first = (tmp_path / "m.pgm").read_bytes()
    io.write_mask(io.read_mask(tmp_path / "m.pgm"), tmp_path / "m2.pgm")
    assert (tmp_path / "m2.pgm").read_bytes() == first


def test_mask_values(tmp_path):
    (tmp_path / "full.pgm").write_bytes(io.encode_pgm(np.full((2, 3), 255)))
    assert io.read_mask(tmp_path / "full.pgm").all()
    (tmp_path / "bad.pgm").write_bytes(io.encode_pgm(np.array([[0, 7]])))
    with pytest.raises(InvalidMaskError):
        io.read_mask(tmp_path / "bad.pgm")


def test_failed_write_leaves_no_file(tmp_path):
    target = tmp_path / "out.pgm"
    with pytest.raises(RuntimeError):
        with io.atomic_write(target) as fh:
            fh.write(b"partial")
            raise RuntimeError("boom")
    assert list(tmp_path.iterdir()) == []


def test_empty_config_is_default():
    assert io.parse_config("") == SolverConfig()


def test_config_alpha():
    assert io.parse_config("alpha = 0.9\n").alpha == 0.9


def test_config_bad_mu_names_key():
    with pytest.raises(ConfigValueError) as info:
        io.parse_config("mu = -1")
    assert info.value.key == "mu"


@pytest.mark.parametrize("text,line", [("alpha = 0.5\nbogus = 1\n", 2), ("mu = 1\n\nmu = 2\n", 3), ("# c\nno equals\n", 2)])
def test_config_parse_errors_carry_line(text, line):
    with pytest.raises(ConfigParseError) as info:
        io.parse_config(text)
    assert info.value.line_number == line


def test_config_values():
    cfg = io.parse_config(
        "surrogate = geman\nsurrogate_gamma = 2\nlambda1 = 0.3\nlambda2 = auto\n"
        "residual_threshold = 0.1\nbacktracking_enabled = off\n"
    )
    assert cfg.surrogate.kind is Kind.GEMAN and cfg.surrogate.gamma == 2
    assert cfg.lambda1 == 0.3 and cfg.lambda2 is None
    assert cfg.residual_threshold == 0.1 and not cfg.backtracking_enabled


configs = st.builds(
    SolverConfig,
    lambda1=st.none() | st.floats(0, 10),
    lambda2=st.none() | st.floats(0, 10),
    mu=st.floats(1e-3, 1e3),
    max_iterations=st.integers(1, 10**6),
    step_tolerance=st.floats(1e-12, 1),
    residual_threshold=st.none() | st.floats(0, 5),
    backtracking_enabled=st.booleans(),
    alpha=st.floats(0.01, 0.99),
    truncated_svd_enabled=st.booleans(),
)


@given(configs)
def test_config_text_round_trip(cfg):
    text = io.format_config(cfg)
    assert io.parse_config(text) == cfg
    assert io.format_config(io.parse_config(text)) == text


def test_trace_csv(tmp_path):
    trace = IterationTrace(1.0, 3, [IterationRecord(1, 0.5, 2, 0.25, 2.0, 1.5), IterationRecord(2, 0.25, 1, 0.125, 1.0, 3.0)])
    io.write_trace_csv(trace, tmp_path / "t.csv")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == ",".join(io.TRACE_COLUMNS)
    rows = io.read_trace_csv(tmp_path / "t.csv")
    assert [r["objective"] for r in rows] == [0.5, 0.25]
    assert rows[1]["rank"] == 1
