"""Seeded generation of sensing matrices, sparse signals and instances.

Random numbers come from numpy's Philox 4x64 counter-based generator.  Each
purpose draws from its own substream, keyed by ``SeedSequence(seed,
spawn_key=(purpose,))``, so the matrix, the signal and the noise are
independent even when they share an integer seed, and regenerating one of
them never depends on whether the others were drawn first.

Instance files (``.spi``) are UTF-8 JSON objects::

    {"format": "sparse12-instance", "version": 1,
     "m": ..., "n": ..., "kind": "gaussian" | "pdct" | "explicit",
     "s": ..., "sigma": ..., "matrix_seed": ..., "signal_seed": ...,
     "noise_seed": ...,
     "matrix_data": "<base64>", "truth_data": "<base64>", "b_data": "<base64>"}

The ``*_data`` fields hold little-endian float64 arrays (matrix row-major)
and are optional when every seed is present; a seeds-only file is
regenerated on load.
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .core import ProblemInstance, SensingMatrix, SparseSignal
from .errors import DomainError, InstanceFormatError

FORMAT_NAME = "sparse12-instance"
FORMAT_VERSION = 1

MATRIX_STREAM = 0
SIGNAL_STREAM = 1
NOISE_STREAM = 2


def substream(seed: int, purpose: int) -> np.random.Generator:
    """Independent Philox generator for ``(seed, purpose)``."""
    if seed < 0:
        raise DomainError(f"seeds are unsigned integers, got {seed}")
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(purpose),))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class InstanceSpec:
    m: int
    n: int
    matrix_kind: str = "gaussian"
    s: int = 1
    sigma: float = 0.0
    matrix_seed: int = 0
    signal_seed: int = 0
    noise_seed: int = 0

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise DomainError(f"need m, n >= 1, got ({self.m}, {self.n})")
        if not 0 <= self.s <= self.n:
            raise DomainError(f"sparsity s={self.s} outside [0, {self.n}]")
        if self.matrix_kind not in ("gaussian", "pdct"):
            raise DomainError(f"matrix_kind must be gaussian or pdct, got {self.matrix_kind!r}")
        if not self.sigma >= 0:
            raise DomainError(f"sigma must be >= 0, got {self.sigma}")


def gen_gaussian(m, n, seed) -> SensingMatrix:
    """Entries i.i.d. N(0, 1/m), so each column is N(0, I_m / m)."""
    if m < 1 or n < 1:
        raise DomainError(f"need m, n >= 1, got ({m}, {n})")
    rng = substream(seed, MATRIX_STREAM)
    a = rng.standard_normal((m, n)) / np.sqrt(m)
    return SensingMatrix(a, kind="gaussian", seed=int(seed))


def pdct_from_xi(xi, n) -> np.ndarray:
    """Partial DCT entries ``cos(2 pi i xi_j) / sqrt(m)`` for columns ``i = 1..n``."""
    xi = np.asarray(xi, dtype=np.float64)
    cols = np.arange(1, n + 1, dtype=np.float64)
    return np.cos(2.0 * np.pi * np.outer(xi, cols)) / np.sqrt(xi.size)


def gen_pdct(m, n, seed) -> SensingMatrix:
    """Random partial DCT with one ``xi ~ U[0, 1]^m`` shared by all columns."""
    if m < 1 or n < 1:
        raise DomainError(f"need m, n >= 1, got ({m}, {n})")
    xi = substream(seed, MATRIX_STREAM).random(m)
    return SensingMatrix(pdct_from_xi(xi, n), kind="pdct", seed=int(seed))


def gen_matrix(kind, m, n, seed) -> SensingMatrix:
    if kind == "gaussian":
        return gen_gaussian(m, n, seed)
    if kind == "pdct":
        return gen_pdct(m, n, seed)
    raise DomainError(f"cannot generate matrix of kind {kind!r}")


def gen_signal(n, s, seed) -> SparseSignal:
    """``s`` uniformly chosen positions carrying i.i.d. standard normal values."""
    if not 0 <= s <= n:
        raise DomainError(f"sparsity s={s} outside [0, {n}]")
    rng = substream(seed, SIGNAL_STREAM)
    support = np.sort(rng.choice(n, size=s, replace=False))
    values = np.zeros(n)
    vals = rng.standard_normal(s)
    # An exact zero would shrink the support; redraw (probability ~ 0).
    while np.any(vals == 0):
        vals[vals == 0] = rng.standard_normal(int(np.sum(vals == 0)))
    values[support] = vals
    return SparseSignal(values)


def noise_vector(m, seed) -> np.ndarray:
    return substream(seed, NOISE_STREAM).standard_normal(m)


def make_instance(spec: InstanceSpec) -> ProblemInstance:
    """Build ``b = A x + sigma * eps`` with ``sigma`` an absolute noise std."""
    A = gen_matrix(spec.matrix_kind, spec.m, spec.n, spec.matrix_seed)
    truth = gen_signal(spec.n, spec.s, spec.signal_seed)
    b = A.entries @ truth.values
    if spec.sigma > 0:
        b = b + spec.sigma * noise_vector(spec.m, spec.noise_seed)
    return ProblemInstance(A, truth, float(spec.sigma), b,
                           noise_seed=int(spec.noise_seed), signal_seed=int(spec.signal_seed))


def instance_from_arrays(A, truth, sigma=0.0, noise_seed=0, b=None) -> ProblemInstance:
    """Instance around an explicit matrix; noise drawn from ``noise_seed``."""
    mat = A if isinstance(A, SensingMatrix) else SensingMatrix(A)
    sig = truth if isinstance(truth, SparseSignal) else SparseSignal(truth)
    if b is None:
        b = mat.entries @ sig.values
        if sigma > 0:
            b = b + sigma * noise_vector(mat.m, noise_seed)
    return ProblemInstance(mat, sig, float(sigma), b, noise_seed=int(noise_seed))


def instance_spec_of(instance: ProblemInstance) -> Optional[InstanceSpec]:
    """The seed-level spec that regenerates ``instance``, when one exists."""
    mat = instance.matrix
    if mat.kind == "explicit" or instance.signal_seed is None:
        return None
    return InstanceSpec(
        m=mat.m, n=mat.n, matrix_kind=mat.kind, s=instance.truth.sparsity,
        sigma=instance.sigma, matrix_seed=mat.seed, signal_seed=instance.signal_seed,
        noise_seed=instance.noise_seed,
    )


def _encode(a) -> str:
    return base64.b64encode(np.ascontiguousarray(a, dtype="<f8").tobytes()).decode("ascii")


def _decode(text, count, field) -> np.ndarray:
    try:
        raw = base64.b64decode(text.encode("ascii"), validate=True)
    except (ValueError, AttributeError) as exc:
        raise InstanceFormatError(f"field {field!r}: invalid base64 ({exc})") from None
    if len(raw) != 8 * count:
        raise InstanceFormatError(
            f"field {field!r}: expected {count} float64 values, found {len(raw) / 8:g}")
    return np.frombuffer(raw, dtype="<f8").astype(np.float64)


def save_instance(instance: ProblemInstance, path, embed_arrays=None) -> None:
    """Write ``instance`` to ``path``.

    Seeded instances are stored as seeds only unless ``embed_arrays`` is true;
    explicit-matrix instances always embed their arrays.
    """
    spec = instance_spec_of(instance)
    mat = instance.matrix
    doc = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "m": mat.m,
        "n": mat.n,
        "kind": mat.kind,
        "s": instance.truth.sparsity,
        "sigma": instance.sigma,
        "matrix_seed": mat.seed,
        "signal_seed": instance.signal_seed,
        "noise_seed": instance.noise_seed,
    }
    if embed_arrays is None:
        embed_arrays = spec is None
    if spec is None and not embed_arrays:
        raise DomainError("instance without seeds must be saved with embedded arrays")
    if embed_arrays:
        doc["matrix_data"] = _encode(mat.entries)
        doc["truth_data"] = _encode(instance.truth.values)
        doc["b_data"] = _encode(instance.b)
    Path(path).write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")


def _field(doc, name, kind, optional=False):
    if name not in doc or doc[name] is None:
        if optional:
            return None
        raise InstanceFormatError(f"missing field {name!r}")
    val = doc[name]
    if kind is int:
        if isinstance(val, bool) or not isinstance(val, int) or val < 0:
            raise InstanceFormatError(f"field {name!r}: expected unsigned integer, got {val!r}")
    elif kind is float:
        if isinstance(val, bool) or not isinstance(val, (int, float)) or not val >= 0:
            raise InstanceFormatError(f"field {name!r}: expected nonnegative number, got {val!r}")
        val = float(val)
    elif not isinstance(val, kind):
        raise InstanceFormatError(f"field {name!r}: expected {kind.__name__}, got {val!r}")
    return val


def load_instance(path) -> ProblemInstance:
    """Read an instance file written by :func:`save_instance`."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(
            f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise InstanceFormatError(f"{path}: top level must be an object")
    if doc.get("format") != FORMAT_NAME:
        raise InstanceFormatError(f"{path}: field 'format' must be {FORMAT_NAME!r}")
    version = doc.get("version")
    if version != FORMAT_VERSION:
        raise InstanceFormatError(
            f"{path}: unsupported format version {version!r} (this build reads {FORMAT_VERSION})")
    m = _field(doc, "m", int)
    n = _field(doc, "n", int)
    kind = _field(doc, "kind", str)
    s = _field(doc, "s", int)
    sigma = _field(doc, "sigma", float)
    mseed = _field(doc, "matrix_seed", int, optional=True)
    sseed = _field(doc, "signal_seed", int, optional=True)
    nseed = _field(doc, "noise_seed", int, optional=True) or 0
    if kind not in ("gaussian", "pdct", "explicit"):
        raise InstanceFormatError(f"field 'kind': unknown matrix kind {kind!r}")

    embedded = [k for k in ("matrix_data", "truth_data", "b_data") if k in doc]
    if embedded:
        if len(embedded) != 3:
            missing = sorted({"matrix_data", "truth_data", "b_data"} - set(embedded))
            raise InstanceFormatError(f"missing field(s) {missing}: arrays must be embedded together")
        a = _decode(_field(doc, "matrix_data", str), m * n, "matrix_data").reshape(m, n)
        x = _decode(_field(doc, "truth_data", str), n, "truth_data")
        b = _decode(_field(doc, "b_data", str), m, "b_data")
        try:
            mat = SensingMatrix(a, kind=kind, seed=mseed)
            truth = SparseSignal(x)
            if truth.sparsity != s:
                raise InstanceFormatError(
                    f"field 's': declares {s} but truth_data has {truth.sparsity} nonzeros")
            return ProblemInstance(mat, truth, sigma, b, noise_seed=nseed, signal_seed=sseed)
        except DomainError as exc:
            raise InstanceFormatError(f"{path}: {exc}") from None

    if kind == "explicit":
        raise InstanceFormatError("explicit-matrix instance requires matrix_data, truth_data, b_data")
    for name, val in (("matrix_seed", mseed), ("signal_seed", sseed)):
        if val is None:
            raise InstanceFormatError(f"missing field {name!r} (needed to regenerate)")
    try:
        spec = InstanceSpec(m=m, n=n, matrix_kind=kind, s=s, sigma=sigma,
                            matrix_seed=mseed, signal_seed=sseed, noise_seed=nseed)
    except DomainError as exc:
        raise InstanceFormatError(f"{path}: {exc}") from None
    return make_instance(spec)


