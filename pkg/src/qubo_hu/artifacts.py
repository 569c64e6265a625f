"""
On-disk artifacts: Hamiltonian files, atomic writes and run manifests.

A Hamiltonian file is the 4-byte magic ``QHUH``, a little-endian uint32
format version, a little-endian uint64 dimension n and then n*n little-endian
float64 values in row-major order.
"""
import contextlib
import csv
import hashlib
import io
import json
import os
import struct
import tempfile
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__

MAGIC = b"QHUH"
H_FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIQ")

OUT_ENV = "QUBO_HU_OUT"
DEFAULT_OUT = "qubo_hu_runs"


class ArtifactError(ValueError):
    pass


def default_out_dir():
    return Path(os.environ.get(OUT_ENV, DEFAULT_OUT))


@contextlib.contextmanager
def atomic_path(path):
    """Yield a temporary path next to ``path``; move it into place on success."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    os.close(fd)
    try:
        yield Path(tmp)
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(FileNotFoundError):
            os.unlink(tmp)
        raise


def atomic_write_bytes(path, data):
    with atomic_path(path) as tmp:
        tmp.write_bytes(data)


def atomic_write_text(path, text):
    atomic_write_bytes(path, text.encode("utf-8"))


def write_hamiltonian(h, path):
    h = np.ascontiguousarray(h, dtype="<f8")
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ArtifactError(f"expected a square matrix, got {h.shape}")
    atomic_write_bytes(path, _HEADER.pack(MAGIC, H_FORMAT_VERSION, h.shape[0]) + h.tobytes())


def read_hamiltonian(path):
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise ArtifactError(f"{path}: truncated header")
    magic, version, n = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ArtifactError(f"{path}: not a Hamiltonian file (magic {magic!r})")
    if version != H_FORMAT_VERSION:
        raise ArtifactError(f"{path}: unsupported format version {version}")
    expected = _HEADER.size + 8 * n * n
    if len(data) != expected:
        raise ArtifactError(f"{path}: expected {expected} bytes for n={n}, got {len(data)}")
    return np.frombuffer(data, dtype="<f8", offset=_HEADER.size).reshape(n, n).astype(np.float64)


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _timing_key(name):
    return "seconds" in name or name == "wall"


def content_hash(path):
    """Hash of a file with timing fields removed.

    CSV columns and ``key = value`` lines whose name contains ``seconds`` are
    dropped, so reruns of the same command hash identically.
    """
    path = Path(path)
    if path.suffix == ".csv":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows:
            return hashlib.sha256(b"").hexdigest()
        keep = [k for k, name in enumerate(rows[0]) if not _timing_key(name)]
        buf = io.StringIO()
        w = csv.writer(buf)
        for row in rows:
            w.writerow([row[k] for k in keep if k < len(row)])
        return hashlib.sha256(buf.getvalue().encode()).hexdigest()
    if path.suffix == ".txt":
        lines = [line for line in path.read_text(encoding="utf-8").splitlines()
                 if not _timing_key(line.split("=", 1)[0].strip())]
        return hashlib.sha256("\n".join(lines).encode()).hexdigest()
    return sha256_file(path)


@dataclass
class RunManifest:
    """What was run, on which inputs, and what it produced."""

    command: str
    argv: list
    params: dict
    seeds: dict = field(default_factory=dict)
    version: str = __version__
    inputs: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    phase_seconds: dict = field(default_factory=dict)
    exit_code: int = 0

    def add_input(self, path):
        self.inputs[str(path)] = sha256_file(path)

    def add_output(self, path, name=None):
        self.outputs[name or Path(path).name] = content_hash(path)

    def write(self, path):
        atomic_write_text(path, json.dumps(asdict(self), indent=2, sort_keys=True, default=_jsonable) + "\n")

    @classmethod
    def read(cls, path):
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(**data)


def _jsonable(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, Path):
        return str(v)
    raise TypeError(f"not JSON serializable: {type(v).__name__}")
