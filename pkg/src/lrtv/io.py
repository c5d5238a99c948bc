"""Binary graymap images and masks, solver config files, and trace CSVs.

Every writer goes through a temporary file in the destination directory
followed by an atomic rename, so a failure never leaves a partial file.
"""

from __future__ import annotations

import contextlib
import csv
import dataclasses
import io as _io
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import (
    ConfigParseError,
    ConfigValueError,
    ImageFormatError,
    InvalidArgumentError,
    InvalidMaskError,
    MalformedHeaderError,
    TruncatedPayloadError,
    UnsupportedFormatError,
    UnsupportedMaxValueError,
)
from .prox import as_image
from .solver import IterationTrace, SolverConfig
from .surrogates import SurrogateSpec

MAXVAL = 255
_WHITESPACE = b" \t\n\r\v\f"


@contextlib.contextmanager
def atomic_write(path, mode="wb"):
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, mode, **({} if "b" in mode else {"newline": "", "encoding": "utf-8"})) as fh:
            yield fh
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(FileNotFoundError):
            os.unlink(tmp)
        raise


# -- graymap -----------------------------------------------------------------


def _header_tokens(data):
    """Return the four header tokens and the payload offset."""
    tokens = []
    pos = 0
    n = len(data)
    while len(tokens) < 4:
        while pos < n and data[pos] in _WHITESPACE:
            pos += 1
        if pos < n and data[pos : pos + 1] == b"#":
            while pos < n and data[pos] not in b"\r\n":
                pos += 1
            continue
        start = pos
        while pos < n and data[pos] not in _WHITESPACE and data[pos : pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise MalformedHeaderError("header ended before width, height and max value")
        tokens.append(data[start:pos])
        if len(tokens) == 1 and tokens[0] != b"P5":
            raise UnsupportedFormatError(f"unsupported magic {tokens[0]!r}; only binary graymaps (P5) are read")
    if pos >= n or data[pos] not in _WHITESPACE:
        raise MalformedHeaderError("max value must be followed by a single whitespace byte")
    return tokens, pos + 1


def decode_pgm(data: bytes):
    """Decode P5 bytes into an ``(height, width)`` uint8 array."""
    if not data.startswith(b"P"):
        raise UnsupportedFormatError("not a portable graymap")
    tokens, offset = _header_tokens(data)
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise MalformedHeaderError(f"non-integer header field in {tokens[1:]!r}") from None
    if width < 1 or height < 1:
        raise MalformedHeaderError(f"invalid dimensions {width}x{height}")
    if maxval != MAXVAL:
        raise UnsupportedMaxValueError(f"max value {maxval} is not supported; expected {MAXVAL}")
    payload = data[offset:]
    if len(payload) < width * height:
        raise TruncatedPayloadError(f"expected {width * height} payload bytes, found {len(payload)}")
    if len(payload) > width * height:
        raise ImageFormatError(f"{len(payload) - width * height} unexpected bytes after the payload")
    return np.frombuffer(payload, dtype=np.uint8).reshape(height, width)


def encode_pgm(pixels) -> bytes:
    pixels = np.asarray(pixels, dtype=np.uint8)
    height, width = pixels.shape
    return b"P5\n%d %d\n%d\n" % (width, height, MAXVAL) + pixels.tobytes()


def quantize(X):
    """Clamp to [0, 1] and map to bytes, rounding halves away from zero."""
    v = np.clip(as_image(X), 0.0, 1.0) * MAXVAL
    return np.floor(v + 0.5).astype(np.uint8)


def read_image(path):
    """Load an image as floats in [0, 1]; ``.npy`` files are loaded verbatim."""
    path = Path(path)
    if path.suffix == ".npy":
        return as_image(np.load(path, allow_pickle=False), str(path))
    return decode_pgm(path.read_bytes()).astype(np.float64) / MAXVAL


def write_image(X, path):
    path = Path(path)
    if path.suffix == ".npy":
        X = as_image(X)
        with atomic_write(path) as fh:
            np.save(fh, X, allow_pickle=False)
        return
    data = encode_pgm(quantize(X))
    with atomic_write(path) as fh:
        fh.write(data)


def read_mask(path):
    pixels = decode_pgm(Path(path).read_bytes())
    bad = (pixels != 0) & (pixels != MAXVAL)
    if bad.any():
        i, j = np.argwhere(bad)[0]
        raise InvalidMaskError(f"mask byte {pixels[i, j]} at ({i}, {j}); only 0 and 255 are allowed")
    return pixels == MAXVAL


def write_mask(mask, path):
    mask = np.asarray(mask, dtype=bool)
    if mask.ndim != 2:
        raise InvalidArgumentError(f"mask must be 2-D, got shape {mask.shape}")
    with atomic_write(path) as fh:
        fh.write(encode_pgm(np.where(mask, MAXVAL, 0)))


# -- solver config -----------------------------------------------------------

_BOOL_WORDS = {"true": True, "yes": True, "on": True, "1": True, "false": False, "no": False, "off": False, "0": False}

# file key -> (SolverConfig field or surrogate field, kind)
_CONFIG_KEYS = {
    "surrogate": ("surrogate.kind", "kind"),
    "surrogate_lambda": ("surrogate.lam", float),
    "surrogate_gamma": ("surrogate.gamma", float),
    "surrogate_p": ("surrogate.p", float),
    "lambda1": ("lambda1", "auto"),
    "lambda2": ("lambda2", "auto"),
    "lambda1_scale": ("lambda1_scale", float),
    "lambda2_scale": ("lambda2_scale", float),
    "mu": ("mu", float),
    "max_iterations": ("max_iterations", int),
    "step_tolerance": ("step_tolerance", float),
    "residual_threshold": ("residual_threshold", "optional"),
    "backtracking_enabled": ("backtracking_enabled", bool),
    "backtracking_factor": ("backtracking_factor", float),
    "backtracking_max_doublings": ("backtracking_max_doublings", int),
    "alpha": ("alpha", float),
    "alpha_tolerance": ("alpha_tolerance", float),
    "truncated_svd_enabled": ("truncated_svd_enabled", bool),
    "squared_data_term": ("squared_data_term", bool),
}
CONFIG_KEYS = tuple(_CONFIG_KEYS)


def _convert(key, kind, text):
    try:
        if kind == "kind":
            return text
        if kind == "auto":
            return None if text.lower() == "auto" else float(text)
        if kind == "optional":
            return None if text.lower() == "none" else float(text)
        if kind is bool:
            return _BOOL_WORDS[text.lower()]
        if kind is int:
            return int(text)
        return float(text)
    except (KeyError, ValueError):
        raise ConfigValueError(key, f"cannot interpret {text!r}") from None


def parse_key_values(text, allowed=None):
    """Split ``key = value`` lines; ``#`` starts a comment. Returns ``{key: (value, line)}``."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigParseError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigParseError("empty key", lineno)
        if allowed is not None and key not in allowed:
            raise ConfigParseError(f"unknown key {key!r}", lineno)
        if key in out:
            raise ConfigParseError(f"duplicate key {key!r}", lineno)
        out[key] = (value, lineno)
    return out


def config_from_mapping(values, base=None):
    """Build a SolverConfig from string values keyed by config-file names."""
    base = SolverConfig() if base is None else base
    fields = {}
    surrogate = dataclasses.asdict(base.surrogate)
    for key, text in values.items():
        if key not in _CONFIG_KEYS:
            raise ConfigValueError(key, "unknown key")
        target, kind = _CONFIG_KEYS[key]
        value = _convert(key, kind, text)
        if target.startswith("surrogate."):
            surrogate[target.split(".", 1)[1]] = value
        else:
            fields[target] = value
    try:
        fields["surrogate"] = SurrogateSpec(**surrogate)
    except InvalidArgumentError as err:
        raise ConfigValueError("surrogate", str(err)) from None
    return dataclasses.replace(base, **fields)


def parse_config(text):
    entries = parse_key_values(text, allowed=_CONFIG_KEYS)
    return config_from_mapping({k: v for k, (v, _) in entries.items()})


def read_config(path):
    return parse_config(Path(path).read_text(encoding="utf-8"))


def format_config(cfg: SolverConfig):
    """Canonical text for ``cfg``; ``parse_config`` inverts it exactly."""
    s = cfg.surrogate
    values = {
        "surrogate": s.kind.value,
        "surrogate_lambda": repr(s.lam),
        "surrogate_gamma": repr(s.gamma),
        "surrogate_p": repr(s.p),
        "lambda1": "auto" if cfg.lambda1 is None else repr(float(cfg.lambda1)),
        "lambda2": "auto" if cfg.lambda2 is None else repr(float(cfg.lambda2)),
        "lambda1_scale": repr(float(cfg.lambda1_scale)),
        "lambda2_scale": repr(float(cfg.lambda2_scale)),
        "mu": repr(float(cfg.mu)),
        "max_iterations": str(int(cfg.max_iterations)),
        "step_tolerance": repr(float(cfg.step_tolerance)),
        "residual_threshold": "none" if cfg.residual_threshold is None else repr(float(cfg.residual_threshold)),
        "backtracking_enabled": str(bool(cfg.backtracking_enabled)).lower(),
        "backtracking_factor": repr(float(cfg.backtracking_factor)),
        "backtracking_max_doublings": str(int(cfg.backtracking_max_doublings)),
        "alpha": repr(float(cfg.alpha)),
        "alpha_tolerance": repr(float(cfg.alpha_tolerance)),
        "truncated_svd_enabled": str(bool(cfg.truncated_svd_enabled)).lower(),
        "squared_data_term": str(bool(cfg.squared_data_term)).lower(),
    }
    return "".join(f"{k} = {v}\n" for k, v in values.items())


def write_config(cfg, path):
    with atomic_write(path, "w") as fh:
        fh.write(format_config(cfg))


# -- traces ------------------------------------------------------------------

TRACE_COLUMNS = ("iteration", "objective", "rank", "step_norm", "mu", "elapsed_ms")


def format_trace(trace: IterationTrace):
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRACE_COLUMNS)
    for r in trace.records:
        writer.writerow([r.iteration, repr(r.objective), r.rank, repr(r.step_norm), repr(r.mu), f"{r.elapsed_ms:.3f}"])
    return buf.getvalue()


def write_trace_csv(trace, path):
    with atomic_write(path, "w") as fh:
        fh.write(format_trace(trace))


def read_trace_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    return [
        {
            "iteration": int(r["iteration"]),
            "objective": float(r["objective"]),
            "rank": int(r["rank"]),
            "step_norm": float(r["step_norm"]),
            "mu": float(r["mu"]),
            "elapsed_ms": float(r["elapsed_ms"]),
        }
        for r in rows
    ]
