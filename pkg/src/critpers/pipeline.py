"""End-to-end classification of a labelled corpus of scalar fields.

Each field is reduced to a small point sample (critical points or farthest
points), the sample's Rips or witness filtration gives persistence diagrams in
dimensions 0-2, and fields are compared by the largest per-dimension
Wasserstein distance.  The resulting distance matrix feeds kNN directly and a
classical MDS embedding feeds a nearest-centroid classifier.
"""
from __future__ import annotations

import csv
import io
import logging
import math
import os
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .field import ScalarField, to_point_cloud
from .filtration import LandmarkSet, lazy_witness_filtration, rips_filtration
from .homology import PersistenceDiagram, compute_persistence
from .metrics import cloud_distance
from .morse import ms_sample
from .sampling import fps, matched_budget

__all__ = [
    "CorpusItem",
    "LabeledCorpus",
    "PipelineConfig",
    "DistanceMatrixM",
    "Algorithm1Result",
    "PipelineError",
    "run_algorithm1",
    "sample_diagrams",
    "classical_mds",
    "split_train_test",
    "knn_classify",
    "nearest_centroid_classify",
    "evaluate_accuracy",
    "run_experiment",
]

log = logging.getLogger(__name__)

PERSISTENCE_LEVELS = (0.87, 0.76, 0.6, 0.4)


class PipelineError(RuntimeError):
    pass


@dataclass(frozen=True)
class CorpusItem:
    id: str
    field: ScalarField
    label: str


class LabeledCorpus:
    def __init__(self, items: Iterable):
        self.items = tuple(it if isinstance(it, CorpusItem) else CorpusItem(*it) for it in items)
        ids = [it.id for it in self.items]
        if len(set(ids)) != len(ids):
            dup = sorted(k for k, c in Counter(ids).items() if c > 1)
            raise ValueError(f"duplicate corpus ids: {dup}")

    def __len__(self):
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    @property
    def ids(self) -> list[str]:
        return [it.id for it in self.items]

    @property
    def labels(self) -> dict[str, str]:
        return {it.id: it.label for it in self.items}


@dataclass(frozen=True)
class PipelineConfig:
    sampler: str = "ms"
    r: float = 0.6
    fps_budget: int | str = "auto"
    fps_seed_index: int = 0
    complex: str = "rips"
    nu: int = 1
    cap: float | None = None
    max_dim: int = 3
    q: float = 1.0
    lift_scale: float = 0.0
    exclusion_threshold: float = 1.0
    knn_k: tuple[int, ...] = (1, 2, 3, 4, 8)
    split_fraction: float = 0.7
    split_seed: int = 0
    mds_dim: int = 2

    def __post_init__(self):
        if self.sampler not in ("ms", "fps"):
            raise ValueError(f"sampler must be 'ms' or 'fps', got {self.sampler!r}")
        if self.complex not in ("rips", "witness"):
            raise ValueError(f"complex must be 'rips' or 'witness', got {self.complex!r}")
        if not 0 <= self.r <= 1:
            raise ValueError("r must lie in [0, 1]")
        if self.fps_budget != "auto" and not (isinstance(self.fps_budget, int) and self.fps_budget >= 1):
            raise ValueError("fps_budget must be 'auto' or a positive integer")
        if not 0 < self.split_fraction < 1:
            raise ValueError("split_fraction must lie in (0, 1)")
        if not self.knn_k or any(k < 1 for k in self.knn_k):
            raise ValueError("knn_k values must be at least 1")
        if self.nu not in (0, 1, 2):
            raise ValueError("nu must be 0, 1 or 2")
        if not 0 <= self.max_dim <= 3:
            raise ValueError("max_dim must lie in 0..3")
        if self.q < 1:
            raise ValueError("q must be at least 1")
        object.__setattr__(self, "knn_k", tuple(int(k) for k in self.knn_k))

    def as_dict(self) -> dict:
        d = asdict(self)
        d["knn_k"] = list(self.knn_k)
        return d


@dataclass
class DistanceMatrixM:
    ids: tuple[str, ...]
    entries: np.ndarray

    def __post_init__(self):
        self.ids = tuple(self.ids)
        self.entries = np.asarray(self.entries, dtype=np.float64)
        n = len(self.ids)
        if self.entries.shape != (n, n):
            raise ValueError("entries must be square and match the ids")

    def index(self, item_id: str) -> int:
        try:
            return self.ids.index(item_id)
        except ValueError:
            raise KeyError(f"id {item_id!r} not in the distance matrix") from None

    def check(self) -> None:
        e = self.entries
        if not np.all(np.isfinite(e)):
            raise ValueError("distance matrix has non-finite entries")
        if not np.array_equal(e, e.T):
            raise ValueError("distance matrix is not symmetric")
        if np.any(np.diag(e) != 0) or np.any(e < 0):
            raise ValueError("distance matrix needs a zero diagonal and nonnegative entries")

    def scaled(self, factor: float) -> "DistanceMatrixM":
        return DistanceMatrixM(self.ids, self.entries * factor)

    def to_csv(self, comment: str | None = None) -> str:
        buf = io.StringIO()
        if comment:
            buf.write(f"# {comment}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.ids)
        for row in self.entries:
            writer.writerow([format(x, ".17g") for x in row])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "DistanceMatrixM":
        rows = [r for r in csv.reader(line for line in io.StringIO(text) if not line.startswith("#"))
                if r]
        ids = rows[0]
        entries = np.array([[float(x) for x in r] for r in rows[1:]])
        return cls(ids, entries)


@dataclass
class Algorithm1Result:
    matrix: DistanceMatrixM
    diagrams: dict[str, list[PersistenceDiagram]]
    samples: dict[str, np.ndarray]
    ms_mean_sample_size: float | None = None
    fps_budget: int | None = None
    timings_ms: dict[str, float] = field(default_factory=dict)


# --------------------------------------------------------------------------
# Step 1: samples and diagrams, one field at a time

def _ms_coords(fld: ScalarField, cfg: PipelineConfig) -> np.ndarray:
    pts = ms_sample(fld, cfg.r).points
    uv = np.array(pts, dtype=np.float64).reshape(-1, 2)
    if cfg.lift_scale == 0:
        return uv
    lift = np.array([cfg.lift_scale * fld.at(u, v) for u, v in pts])
    return np.column_stack([uv, lift])


def _ms_size(fld: ScalarField, r: float) -> int:
    return len(ms_sample(fld, r))


def sample_diagrams(sample: np.ndarray, cfg: PipelineConfig, witnesses: np.ndarray | None = None):
    """Step 1b on an already chosen sample: diagrams for k = 0, 1, 2."""
    if len(sample) == 0:
        raise PipelineError("empty sample")
    if cfg.complex == "rips":
        filt = rips_filtration(sample, cfg.max_dim, cfg.cap)
    else:
        if witnesses is None:
            witnesses = np.empty((0, sample.shape[1]))
        coords = np.vstack([sample, witnesses.reshape(-1, sample.shape[1])])
        nl = len(sample)
        marks = LandmarkSet(tuple(range(nl)), tuple(range(nl, len(coords))))
        filt = lazy_witness_filtration(coords, marks, cfg.nu, cfg.max_dim, cfg.cap)
    return compute_persistence(filt, max_hom_dim=2)


def _item_diagrams(fld: ScalarField, cfg: PipelineConfig, budget: int | None):
    witnesses = None
    if cfg.sampler == "ms":
        sample = _ms_coords(fld, cfg)
        if cfg.complex == "witness":
            cloud = to_point_cloud(fld, cfg.exclusion_threshold, cfg.lift_scale)
            taken = set(map(tuple, sample[:, :2].astype(int).tolist()))
            keep = [k for k, uv in enumerate(map(tuple, cloud.points.tolist())) if uv not in taken]
            witnesses = cloud.coords[keep]
    else:
        cloud = to_point_cloud(fld, cfg.exclusion_threshold, cfg.lift_scale)
        chosen = fps(cloud, min(budget, len(cloud)), seed_index=cfg.fps_seed_index)
        sample = cloud.coords[chosen]
        taken = set(chosen)
        witnesses = cloud.coords[[k for k in range(len(cloud)) if k not in taken]]
    return sample, sample_diagrams(sample, cfg, witnesses)


def _step1(args):
    item_id, fld, cfg, budget = args
    try:
        return _item_diagrams(fld, cfg, budget)
    except Exception as exc:
        raise PipelineError(f"item {item_id}: {exc}") from exc


def _distance_row(args):
    a, diagrams, q = args
    return [cloud_distance(diagrams[a], diagrams[b], q) for b in range(a + 1, len(diagrams))]


def _map(fn, jobs, workers: int):
    jobs = list(jobs)
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))


def default_workers() -> int:
    env = os.environ.get("CRITPERS_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def run_algorithm1(corpus: LabeledCorpus, cfg: PipelineConfig, workers: int = 1,
                   ) -> Algorithm1Result:
    """Diagrams for every field and the matrix of pairwise cloud distances.

    With the FPS sampler and ``fps_budget='auto'`` the budget is the mean MS
    sample size over the corpus, rounded to the nearest integer.  Results are
    identical for any ``workers`` count.
    """
    if not isinstance(corpus, LabeledCorpus):
        corpus = LabeledCorpus(corpus)
    if len(corpus) == 0:
        raise PipelineError("corpus is empty")
    timings = {}
    ms_mean = budget = None
    if cfg.sampler == "fps":
        if cfg.fps_budget == "auto":
            t0 = time.perf_counter()
            sizes = _map(_ms_size_job, [(it.field, cfg.r) for it in corpus], workers)
            ms_mean = float(np.mean(sizes))
            budget = matched_budget(sizes)
            timings["budget_ms"] = (time.perf_counter() - t0) * 1e3
            log.info("matched FPS budget %d (mean MS sample size %.3f)", budget, ms_mean)
        else:
            budget = int(cfg.fps_budget)

    t0 = time.perf_counter()
    out = _map(_step1, [(it.id, it.field, cfg, budget) for it in corpus], workers)
    timings["diagrams_ms"] = (time.perf_counter() - t0) * 1e3
    samples = {it.id: s for it, (s, _) in zip(corpus, out)}
    diagrams = [d for _, d in out]
    if cfg.sampler == "ms":
        ms_mean = float(np.mean([len(s) for s in samples.values()]))

    t0 = time.perf_counter()
    n = len(corpus)
    rows = _map(_distance_row, [(a, diagrams, cfg.q) for a in range(n)], workers)
    entries = np.zeros((n, n))
    for a, row in enumerate(rows):
        entries[a, a + 1:] = row
        entries[a + 1:, a] = row
    timings["distances_ms"] = (time.perf_counter() - t0) * 1e3
    matrix = DistanceMatrixM(corpus.ids, entries)
    matrix.check()
    return Algorithm1Result(matrix, dict(zip(corpus.ids, diagrams)), samples, ms_mean, budget, timings)


def _ms_size_job(args):
    return _ms_size(*args)


# --------------------------------------------------------------------------
# Step 3: embedding and classifiers

def classical_mds(M, target_dim: int = 2) -> np.ndarray:
    """Classical (Torgerson) scaling of a distance matrix.

    Double-centres ``-M*M/2``, keeps the ``target_dim`` largest eigenpairs and
    scales eigenvectors by root-eigenvalues; negative eigenvalues contribute
    zero columns.  Each axis is flipped so its first clearly nonzero
    coordinate is positive.
    """
    D = M.entries if isinstance(M, DistanceMatrixM) else np.asarray(M, dtype=np.float64)
    n = D.shape[0]
    if target_dim < 1 or n < target_dim + 1:
        raise ValueError(f"need at least {target_dim + 1} items for a {target_dim}-D embedding")
    J = np.eye(n) - np.full((n, n), 1.0 / n)
    B = -0.5 * J @ (D * D) @ J
    B = (B + B.T) / 2
    evals, evecs = np.linalg.eigh(B)
    order = np.argsort(-evals, kind="stable")[:target_dim]
    evals, evecs = evals[order], evecs[:, order]
    if not np.any(evals > 0):
        raise ValueError("classical MDS: no positive eigenvalue (degenerate distance matrix)")
    coords = evecs * np.sqrt(np.clip(evals, 0.0, None))
    for k in range(target_dim):
        col = coords[:, k]
        scale = np.abs(col).max()
        if scale == 0:
            continue
        first = np.nonzero(np.abs(col) > 1e-9 * scale)[0][0]
        if col[first] < 0:
            coords[:, k] = -col
    return coords


def split_train_test(corpus, fraction: float = 0.7, seed: int = 0):
    """Stratified split; per label ``round(fraction * n)`` items (halves rounded up) train.

    Accepts a ``LabeledCorpus`` or an ``{id: label}`` mapping.  Both returned
    lists keep the corpus order.
    """
    if not 0 < fraction < 1:
        raise ValueError("fraction must lie in (0, 1)")
    labels = corpus.labels if isinstance(corpus, LabeledCorpus) else dict(corpus)
    order = list(labels)
    groups: dict[str, list[str]] = {}
    for item_id in order:
        groups.setdefault(labels[item_id], []).append(item_id)
    rng = np.random.default_rng(seed)
    train = set()
    for label in sorted(groups):
        members = sorted(groups[label])
        n = len(members)
        if n < 2:
            raise ValueError(f"label {label!r} has fewer than 2 items")
        n_train = min(max(math.floor(fraction * n + 0.5), 1), n - 1)
        perm = rng.permutation(n)
        train.update(members[i] for i in perm[:n_train])
    return [i for i in order if i in train], [i for i in order if i not in train]


def knn_classify(M: DistanceMatrixM, train_ids: Sequence[str], train_labels: Sequence[str],
                 test_ids: Sequence[str], k: int) -> list[str]:
    """Majority vote over the ``k`` nearest training items.

    Neighbours tied in distance are taken in training-list order.  A tied
    vote goes to the label with the smaller summed neighbour distance, then
    to the lexicographically smaller label.
    """
    if not 1 <= k <= len(train_ids):
        raise ValueError(f"k={k} outside 1..{len(train_ids)}")
    cols = [M.index(t) for t in train_ids]
    preds = []
    for tid in test_ids:
        row = M.entries[M.index(tid), cols]
        nearest = np.argsort(row, kind="stable")[:k]
        votes: dict[str, list] = {}
        for j in nearest:
            tally = votes.setdefault(train_labels[j], [0, 0.0])
            tally[0] += 1
            tally[1] += row[j]
        preds.append(min(votes, key=lambda lab: (-votes[lab][0], votes[lab][1], lab)))
    return preds


def nearest_centroid_classify(embedding, train_ids: Sequence[str], train_labels: Sequence[str],
                              test_ids: Sequence[str]) -> list[str]:
    """Label of the closest per-label mean; exact ties go to the smaller label.

    ``embedding`` maps ids to coordinate vectors.
    """
    groups: dict[str, list] = {}
    for tid, lab in zip(train_ids, train_labels):
        groups.setdefault(lab, []).append(np.asarray(embedding[tid], dtype=np.float64))
    if not groups:
        raise ValueError("no training items")
    centroids = {lab: np.mean(vecs, axis=0) for lab, vecs in groups.items()}
    preds = []
    for tid in test_ids:
        x = np.asarray(embedding[tid], dtype=np.float64)
        preds.append(min(sorted(centroids), key=lambda lab: float(np.sum((x - centroids[lab]) ** 2))))
    return preds


@dataclass
class Evaluation:
    accuracy: float
    confusion: dict[str, dict[str, int]]

    def as_dict(self) -> dict:
        return {"accuracy": self.accuracy, "confusion": self.confusion}


def evaluate_accuracy(predicted: Sequence[str], actual: Sequence[str]) -> Evaluation:
    """Fraction correct plus confusion counts indexed ``[actual][predicted]``."""
    if len(predicted) != len(actual):
        raise ValueError("predicted and actual labels differ in length")
    labels = sorted(set(predicted) | set(actual))
    confusion = {a: {p: 0 for p in labels} for a in labels}
    for p, a in zip(predicted, actual):
        confusion[a][p] += 1
    correct = sum(p == a for p, a in zip(predicted, actual))
    return Evaluation(correct / len(actual) if actual else 0.0, confusion)


def run_experiment(corpus: LabeledCorpus, cfg: PipelineConfig, workers: int = 1):
    """Algorithm 1 followed by MDS, the split, every classifier and evaluation.

    Returns ``(result, embedding, report)`` where ``report`` is JSON-ready and
    contains nothing that depends on ``workers`` or wall-clock time.  The
    embedding is ``None`` when the distance matrix is degenerate.
    """
    if not isinstance(corpus, LabeledCorpus):
        corpus = LabeledCorpus(corpus)
    labels = corpus.labels
    if len(set(labels.values())) < 2:
        raise PipelineError("classification needs at least two labels")
    result = run_algorithm1(corpus, cfg, workers)
    try:
        embedding = classical_mds(result.matrix, cfg.mds_dim)
    except ValueError as exc:
        # a constant matrix has no embedding; kNN results are still meaningful
        log.warning("skipping MDS and nearest-centroid: %s", exc)
        embedding = None
    train, test = split_train_test(corpus, cfg.split_fraction, cfg.split_seed)
    train_labels = [labels[t] for t in train]
    actual = [labels[t] for t in test]

    classifiers = {}
    for k in cfg.knn_k:
        if k > len(train):
            log.warning("skipping %d-NN: only %d training items", k, len(train))
            continue
        pred = knn_classify(result.matrix, train, train_labels, test, k)
        classifiers[f"knn_{k}"] = (pred, evaluate_accuracy(pred, actual))
    if embedding is not None:
        emb = dict(zip(result.matrix.ids, embedding))
        pred = nearest_centroid_classify(emb, train, train_labels, test)
        classifiers["nearest_centroid_mds"] = (pred, evaluate_accuracy(pred, actual))

    report = {
        "accuracy": {name: ev.accuracy for name, (_, ev) in classifiers.items()},
        "confusion": {name: ev.confusion for name, (_, ev) in classifiers.items()},
        "predictions": {name: dict(zip(test, p)) for name, (p, _) in classifiers.items()},
        "config": cfg.as_dict(),
        "n_items": len(corpus),
        "train_ids": train,
        "test_ids": test,
        "sample_sizes": {i: int(len(s)) for i, s in result.samples.items()},
        "ms_mean_sample_size": result.ms_mean_sample_size,
        "fps_budget": result.fps_budget,
    }
    return result, embedding, report
