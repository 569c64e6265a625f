"""
Benchmark QUBO instances: generation, normalization, text I/O and an
exhaustive oracle for small n.

Instances have the bipartite block form ``C = [[0, B], [B^T, 0]]`` with a
sparse Gaussian ``B`` and are scaled to unit operator norm.
"""
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from . import rng

SPARSITY_CONVENTION = "s nonzeros per column of B"
MAX_BRUTE_FORCE_N = 24


class InstanceFormatError(ValueError):
    pass


@dataclass(frozen=True)
class InstanceSeedSpec:
    n: int
    s: int
    seed: int
    block_form: bool = True

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be positive, got {self.n}")
        if self.s < 1:
            raise ValueError(f"s must be positive, got {self.s}")
        if self.block_form:
            if self.n % 2:
                raise ValueError(f"block form needs even n, got {self.n}")
            if self.s > self.n // 2:
                raise ValueError(f"s={self.s} exceeds block size n/2={self.n // 2}")
        elif self.s > self.n:
            raise ValueError(f"s={self.s} exceeds n={self.n}")


@dataclass(frozen=True, eq=False)
class CostMatrix:
    """Sparse symmetric cost matrix.

    ``matrix`` holds both triangles (CSR). ``metadata`` carries generation
    parameters when the instance was generated rather than loaded.
    """

    matrix: sp.csr_array
    block_form: bool = False
    metadata: dict = field(default_factory=dict)

    @property
    def n(self):
        return self.matrix.shape[0]

    @property
    def sparsity(self):
        """Maximum number of nonzeros in any column of C."""
        counts = np.diff(self.matrix.tocsc().indptr)
        return int(counts.max()) if counts.size else 0

    def dense(self):
        return self.matrix.toarray()

    def triples(self):
        """Upper-triangle ``(i, j, value)`` entries, 0-based, sorted."""
        coo = sp.triu(self.matrix, format="coo")
        order = np.lexsort((coo.col, coo.row))
        return coo.row[order], coo.col[order], coo.data[order]

    def quadratic_form(self, x):
        """``x^T C x`` for one vector or for each column of a 2-D array."""
        x = np.asarray(x, dtype=np.float64)
        return np.einsum("i...,i...->...", x, self.matrix @ x)

    def __eq__(self, other):
        if not isinstance(other, CostMatrix) or other.n != self.n:
            return False
        a, b = self.triples(), other.triples()
        return all(np.array_equal(u, v) for u, v in zip(a, b))

    __hash__ = None


def block_matrix(b):
    """Embed ``b`` as ``[[0, b], [b^T, 0]]``."""
    b = sp.csr_array(b)
    m = b.shape[0]
    if b.shape != (m, m):
        raise ValueError(f"B must be square, got {b.shape}")
    zero = sp.csr_array((m, m))
    return sp.csr_array(sp.block_array([[zero, b], [b.T, zero]], format="csr"))


def operator_norm_sparse(a):
    """Largest singular value of a sparse or dense matrix (dense SVD)."""
    if sp.issparse(a):
        a = a.toarray()
    a = np.asarray(a, dtype=np.float64)
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))


def normalize(c):
    """Scale C to unit operator norm. Returns a new CostMatrix."""
    norm = operator_norm_sparse(c.matrix)
    if norm == 0.0:
        raise ValueError("cannot normalize the zero matrix")
    meta = dict(c.metadata)
    meta.setdefault("norm", norm)
    return CostMatrix(sp.csr_array(c.matrix / norm), c.block_form, meta)


def generate_instance(spec):
    """Random block instance from ``spec``.

    Every column of the ``n/2 x n/2`` block B gets exactly ``s`` nonzero rows,
    chosen uniformly without replacement, with i.i.d. standard normal values.
    The result is deterministic in ``spec.seed``.
    """
    if not spec.block_form:
        raise NotImplementedError("only block-form instances are generated")
    m = spec.n // 2
    gen = rng.generator(spec.seed, rng.INSTANCE)
    rows = np.empty(m * spec.s, dtype=np.int64)
    for j in range(m):
        rows[j * spec.s:(j + 1) * spec.s] = np.sort(gen.choice(m, size=spec.s, replace=False))
    cols = np.repeat(np.arange(m), spec.s)
    vals = gen.standard_normal(m * spec.s)
    b = sp.csr_array((vals, (rows, cols)), shape=(m, m))
    raw = CostMatrix(block_matrix(b), block_form=True)
    c = normalize(raw)
    meta = {
        "n": spec.n,
        "s": spec.s,
        "seed": spec.seed,
        "block_form": True,
        "norm": c.metadata["norm"],
        "sparsity_convention": SPARSITY_CONVENTION,
    }
    return CostMatrix(c.matrix, True, meta)


def from_dense(a, block_form=False):
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got {a.shape}")
    if not np.array_equal(a, a.T):
        raise ValueError("matrix is not symmetric")
    return CostMatrix(sp.csr_array(a), block_form)


# --- text format -----------------------------------------------------------

HEADER = "%%sym-coord"


def store_matrix(c, path):
    """Write C in the ``%%sym-coord n nnz`` coordinate format (1-based, i <= j)."""
    rows, cols, vals = c.triples()
    lines = [f"{HEADER} {c.n} {len(vals)}"]
    lines.extend(f"{i + 1} {j + 1} {float(v)!r}" for i, j, v in zip(rows, cols, vals))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_matrix(path, block_form=None):
    """Read a matrix written by ``store_matrix``.

    If a ``.meta`` sidecar exists next to the file its contents become the
    instance metadata (and supply ``block_form`` unless given).
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8").splitlines()
    if not text:
        raise InstanceFormatError(f"{path}: empty file")
    head = text[0].split()
    if len(head) != 3 or head[0] != HEADER:
        raise InstanceFormatError(f"{path}:1: expected '{HEADER} n nnz', got {text[0]!r}")
    try:
        n, nnz = int(head[1]), int(head[2])
    except ValueError:
        raise InstanceFormatError(f"{path}:1: non-integer size in header") from None
    if n < 1:
        raise InstanceFormatError(f"{path}:1: empty matrix (n={n})")
    entries = {}
    body = [(k, line) for k, line in enumerate(text[1:], start=2) if line.strip()]
    if len(body) != nnz:
        raise InstanceFormatError(f"{path}: header announces {nnz} entries, found {len(body)}")
    for lineno, line in body:
        parts = line.split()
        if len(parts) != 3:
            raise InstanceFormatError(f"{path}:{lineno}: expected 'i j value', got {line!r}")
        try:
            i, j, v = int(parts[0]) - 1, int(parts[1]) - 1, float(parts[2])
        except ValueError:
            raise InstanceFormatError(f"{path}:{lineno}: cannot parse {line!r}") from None
        if not (0 <= i < n and 0 <= j < n):
            raise InstanceFormatError(f"{path}:{lineno}: index out of range for n={n}")
        if not math.isfinite(v):
            raise InstanceFormatError(f"{path}:{lineno}: non-finite value")
        key = (min(i, j), max(i, j))
        if key in entries:
            if entries[key] != v:
                raise InstanceFormatError(f"{path}:{lineno}: asymmetric entry at ({i + 1}, {j + 1})")
            raise InstanceFormatError(f"{path}:{lineno}: duplicate entry at ({i + 1}, {j + 1})")
        entries[key] = v
    keys = sorted(entries)
    r = np.array([k[0] for k in keys], dtype=np.int64)
    col = np.array([k[1] for k in keys], dtype=np.int64)
    v = np.array([entries[k] for k in keys], dtype=np.float64)
    off = r != col
    rows_all = np.concatenate([r, col[off]])
    cols_all = np.concatenate([col, r[off]])
    vals_all = np.concatenate([v, v[off]])
    m = sp.csr_array((vals_all, (rows_all, cols_all)), shape=(n, n))
    meta_path = path.with_name(path.name + ".meta")
    meta = read_metadata(meta_path) if meta_path.exists() else {}
    if block_form is None:
        block_form = bool(meta.get("block_form", False))
    return CostMatrix(m, block_form, meta)


def _parse_value(raw):
    low = raw.lower()
    if low in ("true", "false"):
        return low == "true"
    for cast in (int, float):
        try:
            return cast(raw)
        except ValueError:
            pass
    return raw


def write_metadata(meta, path):
    lines = []
    for key, value in meta.items():
        if isinstance(value, float):
            value = repr(value)
        elif isinstance(value, bool):
            value = str(value).lower()
        lines.append(f"{key} = {value}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_metadata(path):
    meta = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise InstanceFormatError(f"{path}:{lineno}: expected 'key = value'")
        key, raw = (part.strip() for part in line.split("=", 1))
        meta[key] = _parse_value(raw)
    return meta


def store_instance(c, path):
    """Matrix file plus ``<path>.meta`` sidecar."""
    path = Path(path)
    store_matrix(c, path)
    meta = dict(c.metadata)
    meta.setdefault("n", c.n)
    meta.setdefault("block_form", c.block_form)
    write_metadata(meta, path.with_name(path.name + ".meta"))


# --- exhaustive oracle -----------------------------------------------------

def brute_force_qubo(c, chunk=1 << 15):
    """Exact maximizer of ``x^T C x`` over sign vectors, with ``x[0] = +1``."""
    n = c.n
    if n > MAX_BRUTE_FORCE_N:
        raise ValueError(f"brute force limited to n <= {MAX_BRUTE_FORCE_N}, got n={n}")
    dense = c.dense()
    if n == 1:
        return np.ones(1, dtype=np.int8), float(dense[0, 0])
    free = n - 1
    total = 1 << free
    bits = np.arange(free, dtype=np.int64)
    best_val = -np.inf
    best_idx = 0
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total), dtype=np.int64)
        x = np.ones((idx.size, n))
        x[:, 1:] = 1.0 - 2.0 * ((idx[:, None] >> bits) & 1)
        vals = np.einsum("ki,ki->k", x @ dense, x)
        k = int(np.argmax(vals))
        if vals[k] > best_val:
            best_val = float(vals[k])
            best_idx = int(idx[k])
    x = np.ones(n, dtype=np.int8)
    x[1:] = 1 - 2 * ((best_idx >> bits) & 1)
    return x, best_val


def qubo_value(c, x):
    return float(c.quadratic_form(np.asarray(x, dtype=np.float64)))
