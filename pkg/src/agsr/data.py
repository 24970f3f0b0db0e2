"""Synthetic LR/HR connectome pairs, dataset files and train/test splits.

On disk a dataset is a directory holding one ``.mat.csv`` file per graph and
a line-oriented ``manifest.txt``::

    # agsr dataset manifest
    version 1
    n 20
    n_h 34
    k 2
    seed 42
    train_fraction 0.7
    samples
    s000,lr/s000.mat.csv,hr/s000.mat.csv,train
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .exceptions import (AsymmetricGraph, DatasetError, DatasetTooSmall, InvalidGraph,
                         MalformedMatrix, MissingFile)
from .graph import WeightedGraph, symmetrize
from .model import default_factor

log = logging.getLogger(__name__)

MANIFEST_VERSION = 1
MANIFEST_NAME = "manifest.txt"
NOISE_STD = 0.01


# --- matrix text format -------------------------------------------------------

def write_matrix(path, matrix) -> None:
    """One row per line, comma separated, round-trippable precision."""
    matrix = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
    with open(path, "w") as fh:
        for row in matrix:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def read_matrix(path) -> np.ndarray:
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"matrix file not found: {path}")
    try:
        rows = [[float(tok) for tok in line.split(",")]
                for line in path.read_text().splitlines() if line.strip()]
    except ValueError as exc:
        raise MalformedMatrix(f"{path}: {exc}") from exc
    if not rows or len({len(r) for r in rows}) != 1:
        raise MalformedMatrix(f"{path}: ragged or empty matrix")
    return np.array(rows)


def read_graph(path) -> WeightedGraph:
    """Load and validate a graph; tiny asymmetries (<= 1e-9) are symmetrized."""
    adj = read_matrix(path)
    if adj.shape[0] != adj.shape[1]:
        raise MalformedMatrix(f"{path}: graph matrix is {adj.shape[0]}x{adj.shape[1]}")
    if not np.all(np.isfinite(adj)):
        raise MalformedMatrix(f"{path}: non-finite entries")
    asym = np.max(np.abs(adj - adj.T))
    if asym > 1e-9:
        raise AsymmetricGraph(f"{path}: asymmetric by {asym:.3g}")
    if asym > 0:
        log.warning("%s: symmetrizing asymmetry of %.3g", path, asym)
        adj = symmetrize(adj)
    try:
        return WeightedGraph(adj)
    except InvalidGraph as exc:
        raise MalformedMatrix(f"{path}: {exc}") from exc


# --- manifest -----------------------------------------------------------------

@dataclass
class SampleEntry:
    id: str
    lr_path: str
    hr_path: str
    split: str = ""


@dataclass
class DatasetManifest:
    n: int
    n_h: int
    k: int
    seed: int
    samples: list = field(default_factory=list)
    train_fraction: float | None = None
    version: int = MANIFEST_VERSION
    root: Path | None = None

    def ids(self, split: str | None = None) -> list[str]:
        return [s.id for s in self.samples if split is None or s.split == split]


@dataclass
class SamplePair:
    id: str
    lr: WeightedGraph
    hr: WeightedGraph

    def __post_init__(self):
        if self.lr.n >= self.hr.n:
            raise DatasetError(f"sample {self.id}: LR graph must have fewer nodes than HR")


def write_manifest(manifest: DatasetManifest, path) -> None:
    lines = ["# agsr dataset manifest",
             f"version {manifest.version}",
             f"n {manifest.n}",
             f"n_h {manifest.n_h}",
             f"k {manifest.k}",
             f"seed {manifest.seed}"]
    if manifest.train_fraction is not None:
        lines.append(f"train_fraction {manifest.train_fraction!r}")
    lines.append("samples")
    lines += [f"{s.id},{s.lr_path},{s.hr_path},{s.split}" for s in manifest.samples]
    Path(path).write_text("\n".join(lines) + "\n")


def read_manifest(path) -> DatasetManifest:
    path = Path(path)
    if path.is_dir():
        path = path / MANIFEST_NAME
    if not path.is_file():
        raise MissingFile(f"manifest not found: {path}")
    header = {}
    samples = []
    in_samples = False
    for lineno, raw in enumerate(path.read_text().splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if in_samples:
            parts = line.split(",")
            if len(parts) not in (3, 4):
                raise DatasetError(f"{path}:{lineno}: expected id,lr,hr[,split]")
            samples.append(SampleEntry(*parts))
        elif line == "samples":
            in_samples = True
        else:
            key, _, value = line.partition(" ")
            header[key] = value.strip()
    try:
        manifest = DatasetManifest(
            n=int(header["n"]), n_h=int(header["n_h"]), k=int(header["k"]),
            seed=int(header.get("seed", 0)), samples=samples,
            train_fraction=float(header["train_fraction"]) if "train_fraction" in header else None,
            version=int(header.get("version", MANIFEST_VERSION)), root=path.parent)
    except (KeyError, ValueError) as exc:
        raise DatasetError(f"{path}: bad header field ({exc})") from exc
    if manifest.version != MANIFEST_VERSION:
        raise DatasetError(f"{path}: unsupported manifest version {manifest.version}")
    return manifest


# --- generation and splitting ---------------------------------------------------

def random_symmetric(rng: np.random.Generator, n: int, low: float = -1.0, high: float = 1.0) -> np.ndarray:
    upper = np.triu(rng.uniform(low, high, size=(n, n)), 1)
    return upper + upper.T


def synthesize_pairs(seed: int, n_samples: int, n: int, n_h: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Draw LR/HR adjacency pairs linked by one hidden dataset-level map.

    ``A_h = sym(M A_l M^T) / s + noise`` where ``M`` is a fixed ``n_h x n``
    Gaussian matrix and ``s`` rescales the largest magnitude to 1.
    """
    if n >= n_h:
        raise DatasetError("LR node count must be below the HR node count")
    rng = np.random.default_rng(seed)
    mixing = rng.standard_normal((n_h, n))
    pairs = []
    for _ in range(n_samples):
        a_l = random_symmetric(rng, n)
        hr = symmetrize(mixing @ a_l @ mixing.T)
        np.fill_diagonal(hr, 0.0)
        hr /= np.max(np.abs(hr))
        noise = np.triu(rng.normal(0.0, NOISE_STD, size=(n_h, n_h)), 1)
        pairs.append((a_l, hr + noise + noise.T))
    return pairs


def generate_synthetic_dataset(out_dir, seed: int = 42, n_samples: int = 100, n: int = 20,
                               n_h: int = 34, k: int | None = None) -> DatasetManifest:
    """Write a synthetic dataset under ``out_dir`` and return its (unsplit) manifest."""
    if n_samples < 2:
        raise DatasetTooSmall(f"need at least 2 samples, got {n_samples}")
    out_dir = Path(out_dir)
    (out_dir / "lr").mkdir(parents=True, exist_ok=True)
    (out_dir / "hr").mkdir(parents=True, exist_ok=True)
    width = max(3, len(str(n_samples - 1)))
    entries = []
    for i, (a_l, a_h) in enumerate(synthesize_pairs(seed, n_samples, n, n_h)):
        sid = f"s{i:0{width}d}"
        lr_rel, hr_rel = f"lr/{sid}.mat.csv", f"hr/{sid}.mat.csv"
        write_matrix(out_dir / lr_rel, a_l)
        write_matrix(out_dir / hr_rel, a_h)
        entries.append(SampleEntry(sid, lr_rel, hr_rel))
    k = default_factor(n, n_h) if k is None else k
    manifest = DatasetManifest(n, n_h, k, seed, entries, root=out_dir)
    write_manifest(manifest, out_dir / MANIFEST_NAME)
    return manifest


def split_dataset(manifest: DatasetManifest, train_fraction: float = 0.7, seed: int | None = None) -> DatasetManifest:
    """Seeded shuffle, then ``floor(fraction * n)`` train samples and the rest test."""
    if not 0 < train_fraction < 1:
        raise ValueError("train_fraction must lie strictly between 0 and 1")
    n = len(manifest.samples)
    if n < 2:
        raise DatasetTooSmall(f"need at least 2 samples to split, got {n}")
    seed = manifest.seed if seed is None else seed
    n_train = int(np.floor(train_fraction * n))
    train_idx = set(np.random.default_rng(seed).permutation(n)[:n_train].tolist())
    samples = [replace(s, split="train" if i in train_idx else "test")
               for i, s in enumerate(manifest.samples)]
    return replace(manifest, samples=samples, train_fraction=train_fraction)


def load_dataset(manifest_path, split: str | None = None) -> list[SamplePair]:
    """Read every sample (or those of one split) named in a manifest."""
    manifest = manifest_path if isinstance(manifest_path, DatasetManifest) else read_manifest(manifest_path)
    root = manifest.root or Path(os.curdir)
    pairs = []
    for entry in manifest.samples:
        if split is not None and entry.split != split:
            continue
        lr = read_graph(root / entry.lr_path)
        hr = read_graph(root / entry.hr_path)
        if lr.n != manifest.n or hr.n != manifest.n_h:
            raise MalformedMatrix(
                f"sample {entry.id}: sizes {lr.n}/{hr.n} do not match manifest {manifest.n}/{manifest.n_h}")
        pairs.append(SamplePair(entry.id, lr, hr))
    return pairs
