"""Benchmark data: loading, the two-class reductions, and shared CV folds."""

from __future__ import annotations

import csv
import gzip
import hashlib
import io
import json
import os
import shutil
import struct
import urllib.request
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ValidationError

DATA_ENV = "QUBO_SVM_DATA"
DATASETS = ("iris", "sonar", "mnist")

# Dimensions (N, d) after preparation.
EXPECTED_SHAPES = {"iris": (100, 4), "sonar": (208, 60), "mnist": (200, 196)}

IRIS_CLASSES = {"versicolor": 1, "virginica": -1, "setosa": 0}
MNIST_DIGITS = (4, 7)
MNIST_PER_DIGIT = 100


@dataclass(eq=False)
class SvmDataset:
    x: np.ndarray
    y: np.ndarray
    name: str = "unnamed"
    provenance: str = ""

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.float64)
        self.y = np.asarray(self.y)
        if self.x.ndim != 2:
            raise ValidationError(f"features must be a 2-d matrix, got shape {self.x.shape}")
        if self.y.ndim != 1 or self.y.shape[0] != self.x.shape[0]:
            raise ValidationError(
                f"{self.y.shape[0] if self.y.ndim == 1 else self.y.shape} labels for {self.x.shape[0]} rows"
            )
        if not np.all(np.isfinite(self.x)):
            raise ValidationError("features contain NaN or infinite values")
        if not np.all((self.y == 1) | (self.y == -1)):
            raise ValidationError("labels must be +1 or -1")
        self.y = self.y.astype(np.int64)
        if not (np.any(self.y == 1) and np.any(self.y == -1)):
            raise ValidationError("both classes must be present")

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def d(self) -> int:
        return self.x.shape[1]

    def subset(self, idx) -> "SvmDataset":
        idx = np.asarray(idx)
        return SvmDataset(self.x[idx], self.y[idx], self.name, self.provenance)


@dataclass(eq=False)
class FoldPlan:
    n_folds: int
    assignments: np.ndarray
    rng_seed: int = 0
    _hash: str = field(default="", init=False, repr=False)

    def split(self, fold: int) -> tuple[np.ndarray, np.ndarray]:
        """``(train_idx, test_idx)`` for one fold."""
        if not 0 <= fold < self.n_folds:
            raise ValidationError(f"fold {fold} out of range for {self.n_folds} folds")
        test = self.assignments == fold
        return np.flatnonzero(~test), np.flatnonzero(test)

    @property
    def digest(self) -> str:
        if not self._hash:
            h = hashlib.sha256(f"{self.n_folds}:".encode())
            h.update(np.asarray(self.assignments, dtype="<i8").tobytes())
            self._hash = h.hexdigest()[:16]
        return self._hash


def make_folds(data: SvmDataset, n_folds: int = 5, seed: int = 0) -> FoldPlan:
    """Stratified fold assignment, deterministic in (row order, seed)."""
    if n_folds < 2:
        raise ValidationError("need at least 2 folds")
    counts = {c: int(np.sum(data.y == c)) for c in (1, -1)}
    if n_folds > min(counts.values()):
        raise ValidationError(f"{n_folds} folds but the smaller class has {min(counts.values())} rows")
    rng = np.random.default_rng(seed)
    assignments = np.empty(data.n, dtype=np.int64)
    offset = 0
    for c in (1, -1):
        idx = rng.permutation(np.flatnonzero(data.y == c))
        assignments[idx] = (offset + np.arange(idx.size)) % n_folds
        offset += idx.size
    return FoldPlan(n_folds, assignments, seed)


# -- file formats ---------------------------------------------------------


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def read_csv(path_or_text, text: bool = False) -> list[list[str]]:
    """Comma-separated rows; a first row whose first cell is not numeric is a header and dropped."""
    if text:
        fh = io.StringIO(path_or_text)
    else:
        fh = open(path_or_text, newline="", encoding="utf-8")
    with fh:
        rows = [[c.strip() for c in row] for row in csv.reader(fh) if any(c.strip() for c in row)]
    if rows and not _is_number(rows[0][0]):
        rows = rows[1:]
    return rows


def _open_maybe_gzip(path):
    with open(path, "rb") as fh:
        magic = fh.read(2)
    return gzip.open(path, "rb") if magic == b"\x1f\x8b" else open(path, "rb")


_IDX_TYPES = {
    0x08: np.dtype(">u1"),
    0x09: np.dtype(">i1"),
    0x0B: np.dtype(">i2"),
    0x0C: np.dtype(">i4"),
    0x0D: np.dtype(">f4"),
    0x0E: np.dtype(">f8"),
}


def read_idx(path) -> np.ndarray:
    """Read an IDX file (optionally gzipped)."""
    with _open_maybe_gzip(path) as fh:
        raw = fh.read()
    if len(raw) < 4 or raw[0] != 0 or raw[1] != 0:
        raise ValidationError(f"{path}: not an IDX file")
    code, ndim = raw[2], raw[3]
    if code not in _IDX_TYPES or ndim == 0:
        raise ValidationError(f"{path}: unsupported IDX type 0x{code:02x} / ndim {ndim}")
    header = 4 + 4 * ndim
    if len(raw) < header:
        raise ValidationError(f"{path}: truncated IDX header")
    dims = struct.unpack(f">{ndim}I", raw[4:header])
    dtype = _IDX_TYPES[code]
    expected = int(np.prod(dims)) * dtype.itemsize
    if len(raw) - header != expected:
        raise ValidationError(f"{path}: expected {expected} payload bytes, found {len(raw) - header}")
    return np.frombuffer(raw, dtype=dtype, offset=header).reshape(dims).astype(dtype.newbyteorder("="))


def write_idx(path, array: np.ndarray, compress: bool | None = None) -> None:
    array = np.asarray(array)
    for code, dt in _IDX_TYPES.items():
        if dt.newbyteorder("=") == array.dtype:
            break
    else:
        raise ValidationError(f"dtype {array.dtype} has no IDX type code")
    payload = struct.pack(">BBBB", 0, 0, code, array.ndim) + struct.pack(f">{array.ndim}I", *array.shape)
    payload += array.astype(_IDX_TYPES[code]).tobytes()
    if compress is None:
        compress = str(path).endswith(".gz")
    if compress:
        with gzip.GzipFile(path, "wb", mtime=0) as fh:
            fh.write(payload)
    else:
        Path(path).write_bytes(payload)


# -- preparation ----------------------------------------------------------


def prepare_iris(rows: list[list[str]]) -> SvmDataset:
    """Keep versicolor (+1) and virginica (-1); features are left in centimetres."""
    x, y = [], []
    for lineno, row in enumerate(rows, 1):
        if len(row) != 5:
            raise ValidationError(f"iris row {lineno}: expected 5 fields, got {len(row)}")
        try:
            feats = [float(v) for v in row[:4]]
        except ValueError:
            raise ValidationError(f"iris row {lineno}: non-numeric feature") from None
        name = row[4].lower().removeprefix("iris-")
        if name not in IRIS_CLASSES:
            raise ValidationError(f"iris row {lineno}: unknown class {row[4]!r}")
        if IRIS_CLASSES[name]:
            x.append(feats)
            y.append(IRIS_CLASSES[name])
    return SvmDataset(
        np.array(x),
        np.array(y),
        "iris",
        "iris: versicolor -> +1, virginica -> -1, setosa dropped; raw features",
    )


def load_sonar(rows: list[list[str]]) -> SvmDataset:
    """Mines (M) -> +1, rocks (R) -> -1."""
    x, y = [], []
    for lineno, row in enumerate(rows, 1):
        if len(row) != 61:
            raise ValidationError(f"sonar row {lineno}: expected 61 columns, got {len(row)}")
        try:
            x.append([float(v) for v in row[:60]])
        except ValueError:
            raise ValidationError(f"sonar row {lineno}: non-numeric feature") from None
        if row[60] not in ("M", "R"):
            raise ValidationError(f"sonar row {lineno}: label must be M or R, got {row[60]!r}")
        y.append(1 if row[60] == "M" else -1)
    return SvmDataset(np.array(x), np.array(y), "sonar", "sonar: M -> +1, R -> -1; features as shipped")


def max_pool(images: np.ndarray, size: int = 2) -> np.ndarray:
    """Non-overlapping ``size`` x ``size`` max pooling over the last two axes."""
    images = np.asarray(images)
    h, w = images.shape[-2:]
    if h % size or w % size:
        raise ValidationError(f"image size {h}x{w} not divisible by pool size {size}")
    blocks = images.reshape(*images.shape[:-2], h // size, size, w // size, size)
    return blocks.max(axis=(-3, -1))


def prepare_mnist(images: np.ndarray, labels: np.ndarray, source: str = "mnist") -> SvmDataset:
    """First 100 fours (+1) and sevens (-1) in file order, 2x2 max-pooled, scaled to [0, 1]."""
    images = np.asarray(images)
    labels = np.asarray(labels).ravel()
    if images.ndim != 3 or images.shape[1:] != (28, 28):
        raise ValidationError(f"expected 28x28 images, got shape {images.shape}")
    if labels.shape[0] != images.shape[0]:
        raise ValidationError(f"{labels.shape[0]} labels for {images.shape[0]} images")
    keep = []
    for digit in MNIST_DIGITS:
        idx = np.flatnonzero(labels == digit)
        if idx.size < MNIST_PER_DIGIT:
            raise ValidationError(f"only {idx.size} samples of digit {digit}, need {MNIST_PER_DIGIT}")
        keep.append(idx[:MNIST_PER_DIGIT])
    keep = np.sort(np.concatenate(keep))
    pooled = max_pool(images[keep].astype(np.float64), 2) / 255.0
    y = np.where(labels[keep] == MNIST_DIGITS[0], 1, -1)
    return SvmDataset(
        pooled.reshape(len(keep), -1),
        y,
        "mnist",
        f"{source}: first 100 of digit 4 -> +1 and digit 7 -> -1 in file order; 2x2 max-pool; /255",
    )


# -- locating and fetching files -------------------------------------------


def data_dir(override: str | os.PathLike | None = None) -> Path:
    if override is not None:
        return Path(override)
    env = os.environ.get(DATA_ENV)
    if env:
        return Path(env)
    return Path.home() / ".cache" / "qubo_svm"


def _vendored(name: str) -> Path:
    return Path(str(resources.files("qubo_svm") / "data" / name))


def load_manifest() -> dict:
    return json.loads(_vendored("MANIFEST.json").read_text())


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def verify_vendored() -> dict[str, bool]:
    """Check every vendored file against its recorded sha256."""
    return {
        name: sha256_file(_vendored(name)) == entry["sha256"]
        for name, entry in load_manifest()["vendored"].items()
    }


def _find(filename: str, directory: Path) -> Path | None:
    p = directory / filename
    return p if p.exists() else None


def load_dataset(name: str, directory: str | os.PathLike | None = None) -> SvmDataset:
    """Prepared dataset, preferring fetched canonical files over the vendored copies."""
    d = data_dir(directory)
    if name == "iris":
        path = _find("iris.data", d) or _vendored("iris.data")
        return prepare_iris(read_csv(path))
    if name == "sonar":
        path = _find("sonar.all-data", d) or _vendored("sonar.all-data")
        return load_sonar(read_csv(path))
    if name == "mnist":
        img = _find("train-images-idx3-ubyte.gz", d)
        lab = _find("train-labels-idx1-ubyte.gz", d)
        if img is not None and lab is not None:
            return prepare_mnist(read_idx(img), read_idx(lab), source="mnist train set")
        return prepare_mnist(
            read_idx(_vendored("mnist47-images-idx3-ubyte.gz")),
            read_idx(_vendored("mnist47-labels-idx1-ubyte.gz")),
            source="vendored mnist 4/7 subset",
        )
    raise ValidationError(f"unknown dataset {name!r}; choose from {', '.join(DATASETS)}")


def _checksum_ok(path: Path, entry: dict) -> bool:
    if entry.get("sha256"):
        return sha256_file(path) == entry["sha256"]
    if entry.get("md5"):
        h = hashlib.md5()
        h.update(path.read_bytes())
        return h.hexdigest() == entry["md5"]
    return True


def fetch(names=DATASETS, directory: str | os.PathLike | None = None, manifest: dict | None = None) -> dict:
    """Download canonical copies into the data directory and verify checksums.

    Files without a recorded checksum are accepted and their sha256 is written
    to ``checksums.json`` in the data directory.  Returns ``{filename: sha256}``.
    """
    manifest = manifest or load_manifest()
    d = data_dir(directory)
    d.mkdir(parents=True, exist_ok=True)
    recorded = {}
    for name in names:
        if name not in manifest["remote"]:
            raise ValidationError(f"no download source for {name!r}")
        for entry in manifest["remote"][name]:
            target = d / entry["filename"]
            tmp = target.with_suffix(target.suffix + ".part")
            with urllib.request.urlopen(entry["url"], timeout=60) as resp, open(tmp, "wb") as out:
                shutil.copyfileobj(resp, out)
            if not _checksum_ok(tmp, entry):
                tmp.unlink()
                raise OSError(f"checksum mismatch for {entry['url']}")
            tmp.replace(target)
            recorded[entry["filename"]] = sha256_file(target)
    log = d / "checksums.json"
    prior = json.loads(log.read_text()) if log.exists() else {}
    prior.update(recorded)
    log.write_text(json.dumps(prior, indent=2, sort_keys=True) + "\n")
    return recorded
