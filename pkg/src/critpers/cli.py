"""Command-line frontend.

Exit codes: 0 success, 2 usage or configuration error, 3 I/O error,
4 invalid data.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import os
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from . import __version__
from .field import read_pgm, to_point_cloud
from .homology import compute_persistence, diagrams_from_json, diagrams_to_json
from .filtration import LandmarkSet, lazy_witness_filtration, rips_filtration
from .metrics import cloud_distance
from .morse import ms_sample
from .pipeline import (
    DistanceMatrixM,
    LabeledCorpus,
    PipelineConfig,
    classical_mds,
    default_workers,
    evaluate_accuracy,
    knn_classify,
    nearest_centroid_classify,
    run_experiment,
    split_train_test,
)
from .sampling import fps

log = logging.getLogger("critpers")

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_DATA = 0, 2, 3, 4
THREADS_ENV = "CRITPERS_THREADS"


class UsageError(Exception):
    pass


# --------------------------------------------------------------------------
# Output helpers

def atomic_write(path, data) -> None:
    """Write via a temporary file in the target directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(data, str):
        data = data.encode()
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


class Manifest:
    """Config echo, input hashes, timings and version.

    The hash covers command, config, inputs and version only, so it changes
    exactly when inputs or config change.
    """

    def __init__(self, command: str, config: dict, inputs: list[tuple[str, str]]):
        self.command = command
        self.config = config
        self.inputs = [{"path": name, "sha256": digest} for name, digest in inputs]
        self.timings_ms: dict[str, float] = {}
        self.results: dict = {}

    @property
    def hash(self) -> str:
        core = {"command": self.command, "config": self.config, "inputs": self.inputs,
                "version": __version__}
        return hashlib.sha256(json.dumps(core, sort_keys=True).encode()).hexdigest()

    def to_json(self, outputs) -> str:
        doc = {
            "tool": "critpers",
            "version": __version__,
            "command": self.command,
            "config": self.config,
            "inputs": self.inputs,
            "outputs": sorted(str(o) for o in outputs),
            "results": self.results,
            "timings_ms": {k: round(v, 3) for k, v in self.timings_ms.items()},
            "manifest_hash": self.hash,
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"


class _Timer:
    def __init__(self, manifest: Manifest, stage: str):
        self.manifest, self.stage = manifest, stage

    def __enter__(self):
        self.t0 = time.perf_counter()

    def __exit__(self, *exc):
        self.manifest.timings_ms[self.stage] = (time.perf_counter() - self.t0) * 1e3


def _write_outputs(files: dict, manifest: Manifest, manifest_path) -> None:
    for path, data in files.items():
        atomic_write(path, data)
    atomic_write(manifest_path, manifest.to_json([Path(p).name for p in files]))


def _json(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _stamp_csv(text: str, manifest: Manifest) -> str:
    return f"# manifest_hash={manifest.hash}\n{text}"


# --------------------------------------------------------------------------
# Input helpers

def _read_field(path):
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    return read_pgm(path)


def read_points(path) -> np.ndarray:
    """Numeric columns of a CSV or whitespace point list; ``#`` lines and a header row are skipped."""
    text = Path(path).read_text()
    rows, header = [], None
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        fields = [f.strip() for f in (line.split(",") if "," in line else line.split())]
        if header is None and not rows:
            try:
                [float(f) for f in fields]
            except ValueError:
                header = fields
                continue
        rows.append(fields)
    if not rows:
        raise ValueError(f"{path}: no points")
    keep = range(len(rows[0])) if header is None else [i for i, h in enumerate(header) if h != "type"]
    try:
        pts = np.array([[float(r[i]) for i in keep] for r in rows])
    except (ValueError, IndexError) as exc:
        raise ValueError(f"{path}: malformed point list ({exc})") from None
    if not np.all(np.isfinite(pts)):
        raise ValueError(f"{path}: non-finite coordinates")
    return pts


def read_corpus(root) -> tuple[LabeledCorpus, list[tuple[str, Path]]]:
    """``<root>/<label>/<item>.pgm``; ids are ``label/item``."""
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(f"corpus directory not found: {root}")
    items, files = [], []
    for label_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        for path in sorted(label_dir.glob("*.pgm")):
            item_id = f"{label_dir.name}/{path.stem}"
            try:
                fld = read_pgm(path)
            except ValueError as exc:
                raise ValueError(f"{path}: {exc}") from exc
            items.append((item_id, fld, label_dir.name))
            files.append((item_id + ".pgm", path))
    if not items:
        raise ValueError(f"corpus {root} contains no <label>/*.pgm files")
    return LabeledCorpus(items), files


_CONFIG_TYPES = {
    "sampler": str, "r": float, "fps_budget": str, "fps_seed_index": int, "complex": str,
    "nu": int, "cap": str, "max_dim": int, "q": float, "lift_scale": float,
    "exclusion_threshold": float, "knn_k": str, "split_fraction": float, "split_seed": int,
    "mds_dim": int,
}


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{source}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key == "budget":
            key = "fps_budget"
        if key not in _CONFIG_TYPES:
            raise UsageError(f"{source}:{lineno}: unknown key {key!r}")
        try:
            out[key] = _CONFIG_TYPES[key](value)
        except ValueError:
            raise UsageError(f"{source}:{lineno}: bad value for {key}: {value!r}") from None
    return out


def build_config(values: dict) -> PipelineConfig:
    kw = dict(values)
    try:
        if "fps_budget" in kw and kw["fps_budget"] != "auto":
            kw["fps_budget"] = int(kw["fps_budget"])
        if "cap" in kw:
            kw["cap"] = None if str(kw["cap"]).lower() in ("none", "") else float(kw["cap"])
        if "knn_k" in kw and isinstance(kw["knn_k"], str):
            kw["knn_k"] = tuple(int(k) for k in kw["knn_k"].split(",") if k.strip())
        return PipelineConfig(**kw)
    except (ValueError, TypeError) as exc:
        raise UsageError(f"invalid configuration: {exc}") from None


def resolve_threads(flag: int | None) -> int:
    if flag is not None:
        if flag < 1:
            raise UsageError("--threads must be at least 1")
        return flag
    try:
        return default_workers()
    except ValueError:
        raise UsageError(f"{THREADS_ENV} must be a positive integer") from None


# --------------------------------------------------------------------------
# Subcommands

def _sample_points(fld, args):
    """``[(u, v, type)]`` for the requested sampler."""
    if args.sampler == "ms":
        return ms_sample(fld, args.r).labelled()
    if args.m is None:
        raise UsageError("--sampler fps needs --m")
    cloud = to_point_cloud(fld, args.exclusion_threshold, args.lift_scale)
    if args.m > len(cloud):
        raise ValueError(f"--m {args.m} exceeds the {len(cloud)}-point cloud")
    chosen = fps(cloud, args.m, seed_index=args.seed_index)
    return [(int(cloud.points[k, 0]), int(cloud.points[k, 1]), "fps") for k in chosen]


def cmd_sample(args) -> int:
    if args.sampler == "ms" and args.m is not None:
        raise UsageError("--m only applies to --sampler fps")
    fld = _read_field(args.image)
    config = {"sampler": args.sampler, "r": args.r, "m": args.m, "seed_index": args.seed_index,
              "exclusion_threshold": args.exclusion_threshold, "lift_scale": args.lift_scale}
    manifest = Manifest("sample", config, [(Path(args.image).name, sha256_file(args.image))])
    with _Timer(manifest, "sample"):
        rows = _sample_points(fld, args)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["u", "v", "type"])
    writer.writerows(rows)
    out = Path(args.output or Path(args.image).with_suffix(".points.csv"))
    files = {out: _stamp_csv(buf.getvalue(), manifest)}
    if args.plot_data:
        files[Path(args.plot_data)] = _json({
            "width": fld.width, "height": fld.height,
            "points": [{"u": u, "v": v, "type": t} for u, v, t in rows],
            "manifest_hash": manifest.hash,
        })
    manifest.results["n_points"] = len(rows)
    _write_outputs(files, manifest, out.with_name(out.name + ".manifest.json"))
    print(f"{len(rows)} points -> {out}")
    return EXIT_OK


def _diagram_sample(args):
    """Landmarks (and witnesses) for ``cmd_diagram``."""
    path = Path(args.input)
    if not path.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    if path.suffix.lower() != ".pgm":
        pts = read_points(path)
        if args.complex == "witness":
            nl = args.landmarks if args.landmarks is not None else len(pts)
            if not 1 <= nl <= len(pts):
                raise ValueError(f"--landmarks must lie in 1..{len(pts)}")
            return pts[:nl], pts[nl:]
        return pts, None
    fld = read_pgm(path)
    cloud = to_point_cloud(fld, args.exclusion_threshold, args.lift_scale)
    if args.sampler == "ms":
        crit = set(ms_sample(fld, args.r).points)
        chosen = [k for k, (u, v) in enumerate(cloud.points.tolist()) if (u, v) in crit]
    elif args.sampler == "fps":
        if args.m is None:
            raise UsageError("--sampler fps needs --m")
        chosen = fps(cloud, args.m, seed_index=args.seed_index)
    else:
        chosen = list(range(len(cloud)))
    if not chosen:
        raise ValueError("the sampler produced no points inside the cloud")
    taken = set(chosen)
    rest = [k for k in range(len(cloud)) if k not in taken]
    return cloud.coords[chosen], cloud.coords[rest]


def cmd_diagram(args) -> int:
    config = {k: getattr(args, k) for k in ("complex", "nu", "cap", "max_dim", "sampler", "r", "m",
                                            "seed_index", "landmarks", "exclusion_threshold",
                                            "lift_scale")}
    manifest = Manifest("diagram", config, [(Path(args.input).name, sha256_file(args.input))])
    with _Timer(manifest, "sample"):
        sample, witnesses = _diagram_sample(args)
    with _Timer(manifest, "diagrams"):
        if args.complex == "rips":
            filt = rips_filtration(sample, args.max_dim, args.cap)
        else:
            coords = sample if witnesses is None else np.vstack([sample, witnesses])
            nl = len(sample)
            marks = LandmarkSet(tuple(range(nl)), tuple(range(nl, len(coords))))
            filt = lazy_witness_filtration(coords, marks, args.nu, args.max_dim, args.cap)
        diagrams = compute_persistence(filt, max_hom_dim=2)
    manifest.results = {"n_landmarks": len(sample), "n_simplices": len(filt), "cap": filt.cap}
    out = Path(args.output or Path(args.input).with_suffix(".diagram.json"))
    _write_outputs({out: diagrams_to_json(diagrams)}, manifest,
                   out.with_name(out.name + ".manifest.json"))
    for d in diagrams:
        print(f"H{d.dim}: {len(d.points)} points")
    return EXIT_OK


def _diagram_id(path: Path) -> str:
    name = path.name
    for suffix in (".diagram.json", ".json"):
        if name.endswith(suffix):
            return name[: -len(suffix)]
    return name


def _diagram_cap(path: Path, override):
    """Filtration cap for a diagram file: ``--cap``, else its sidecar manifest, else infinite."""
    if override is not None:
        return override
    side = path.with_name(path.name + ".manifest.json")
    if side.is_file():
        try:
            cap = json.loads(side.read_text())["results"]["cap"]
        except (ValueError, KeyError, TypeError):
            raise ValueError(f"{side}: unreadable manifest") from None
        return float("inf") if cap is None else float(cap)
    return float("inf")


def cmd_distmat(args) -> int:
    paths = [Path(p) for p in args.diagrams]
    if len(paths) < 2:
        raise UsageError("distmat needs at least two diagram files")
    ids = [_diagram_id(p) for p in paths]
    if len(set(ids)) != len(ids):
        raise UsageError("diagram files must have distinct names")
    manifest = Manifest("distmat", {"q": args.q, "cap": args.cap},
                        [(p.name, sha256_file(p)) for p in paths])
    with _Timer(manifest, "distances"):
        diagrams = []
        for p in paths:
            try:
                diagrams.append(diagrams_from_json(p.read_text(),
                                                   cap=_diagram_cap(p, args.cap)))
            except (ValueError, KeyError, TypeError) as exc:
                raise ValueError(f"{p}: not a diagram file ({exc})") from None
        n = len(diagrams)
        entries = np.zeros((n, n))
        for a in range(n):
            for b in range(a + 1, n):
                entries[a, b] = entries[b, a] = cloud_distance(diagrams[a], diagrams[b], args.q)
    M = DistanceMatrixM(ids, entries)
    out = Path(args.output)
    _write_outputs({out: M.to_csv(f"manifest_hash={manifest.hash}")}, manifest,
                   out.with_name(out.name + ".manifest.json"))
    print(f"{n}x{n} matrix -> {out}")
    return EXIT_OK


def _read_matrix(path) -> DistanceMatrixM:
    path = Path(path)
    text = path.read_text()
    try:
        M = DistanceMatrixM.from_csv(text)
        M.check()
    except (ValueError, IndexError) as exc:
        raise ValueError(f"{path}: invalid distance matrix ({exc})") from None
    return M


def _embedding_csv(ids, coords, manifest: Manifest) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    dims = coords.shape[1]
    axes = ["x", "y", "z"][:dims] if dims <= 3 else [f"x{k}" for k in range(dims)]
    writer.writerow(["id", *axes])
    for item_id, row in zip(ids, coords):
        writer.writerow([item_id, *(format(x, ".17g") for x in row)])
    return _stamp_csv(buf.getvalue(), manifest)


def cmd_mds(args) -> int:
    M = _read_matrix(args.matrix)
    manifest = Manifest("mds", {"dim": args.dim},
                        [(Path(args.matrix).name, sha256_file(args.matrix))])
    with _Timer(manifest, "mds"):
        coords = classical_mds(M, args.dim)
    out = Path(args.output)
    _write_outputs({out: _embedding_csv(M.ids, coords, manifest)}, manifest,
                   out.with_name(out.name + ".manifest.json"))
    print(f"{len(M.ids)} items embedded in {args.dim}-D -> {out}")
    return EXIT_OK


def _read_labels(path, ids) -> dict[str, str]:
    if path is None:
        # ids of a corpus run look like "<label>/<item>"
        if not all("/" in i for i in ids):
            raise UsageError("--labels is required unless ids have the form label/item")
        return {i: i.split("/", 1)[0] for i in ids}
    labels = {}
    with open(path, newline="") as fh:
        for row in csv.reader(line for line in fh if not line.startswith("#")):
            if len(row) >= 2 and row[0] != "id":
                labels[row[0]] = row[1]
    missing = [i for i in ids if i not in labels]
    if missing:
        raise ValueError(f"no label for ids {missing[:5]}")
    return {i: labels[i] for i in ids}


def cmd_classify(args) -> int:
    M = _read_matrix(args.matrix)
    labels = _read_labels(args.labels, M.ids)
    inputs = [(Path(args.matrix).name, sha256_file(args.matrix))]
    if args.labels:
        inputs.append((Path(args.labels).name, sha256_file(args.labels)))
    ks = [int(k) for k in args.k.split(",")]
    config = {"k": ks, "split_fraction": args.split_fraction, "split_seed": args.split_seed,
              "mds_dim": args.mds_dim}
    manifest = Manifest("classify", config, inputs)
    with _Timer(manifest, "classify"):
        train, test = split_train_test(labels, args.split_fraction, args.split_seed)
        train_labels = [labels[t] for t in train]
        actual = [labels[t] for t in test]
        accuracy, confusion = {}, {}
        for k in ks:
            ev = evaluate_accuracy(knn_classify(M, train, train_labels, test, k), actual)
            accuracy[f"knn_{k}"], confusion[f"knn_{k}"] = ev.accuracy, ev.confusion
        if args.mds_dim:
            emb = dict(zip(M.ids, classical_mds(M, args.mds_dim)))
            ev = evaluate_accuracy(nearest_centroid_classify(emb, train, train_labels, test), actual)
            accuracy["nearest_centroid_mds"] = ev.accuracy
            confusion["nearest_centroid_mds"] = ev.confusion
    report = {"accuracy": accuracy, "confusion": confusion, "config": config,
              "train_ids": train, "test_ids": test, "manifest_hash": manifest.hash}
    out = Path(args.output)
    _write_outputs({out: _json(report)}, manifest, out.with_name(out.name + ".manifest.json"))
    for name, acc in accuracy.items():
        print(f"{name}: {acc:.4f}")
    return EXIT_OK


_PIPELINE_FLAGS = ("sampler", "r", "fps_budget", "fps_seed_index", "complex", "nu", "cap",
                   "max_dim", "q", "lift_scale", "exclusion_threshold", "knn_k",
                   "split_fraction", "split_seed", "mds_dim")


def cmd_pipeline(args) -> int:
    values = {}
    inputs = []
    if args.config:
        cfg_path = Path(args.config)
        if not cfg_path.is_file():
            raise FileNotFoundError(f"no such config file: {cfg_path}")
        values.update(parse_config_text(cfg_path.read_text(), str(cfg_path)))
    for key in _PIPELINE_FLAGS:
        flag = getattr(args, key)
        if flag is not None:
            values[key] = flag
    cfg = build_config(values)
    threads = resolve_threads(args.threads)

    corpus, files = read_corpus(args.corpus)
    if len(set(corpus.labels.values())) < 2:
        raise ValueError("the corpus has a single label; classification needs at least two")
    inputs = [(name, sha256_file(path)) for name, path in files]
    manifest = Manifest("pipeline", cfg.as_dict(), inputs)
    t0 = time.perf_counter()
    result, embedding, report = run_experiment(corpus, cfg, threads)
    manifest.timings_ms.update(result.timings_ms)
    manifest.timings_ms["total_ms"] = (time.perf_counter() - t0) * 1e3
    manifest.results = {"ms_mean_sample_size": result.ms_mean_sample_size,
                        "fps_budget": result.fps_budget,
                        "accuracy": report["accuracy"],
                        "threads": threads}
    report["manifest_hash"] = manifest.hash

    out = Path(args.out)
    files_out = {
        out / "matrix.csv": result.matrix.to_csv(f"manifest_hash={manifest.hash}"),
        out / "report.json": _json(report),
        out / "diagrams.json": _json({
            "manifest_hash": manifest.hash,
            "diagrams": {i: json.loads(diagrams_to_json(d)) for i, d in result.diagrams.items()},
        }),
    }
    if embedding is not None:
        files_out[out / "embedding.csv"] = _embedding_csv(result.matrix.ids, embedding, manifest)
    _write_outputs(files_out, manifest, out / "manifest.json")
    for name, acc in report["accuracy"].items():
        print(f"{name}: {acc:.4f}")
    if result.fps_budget is not None:
        print(f"fps budget: {result.fps_budget}")
    if result.ms_mean_sample_size is not None:
        print(f"mean MS sample size: {result.ms_mean_sample_size:.4f}")
    print(f"outputs -> {out}")
    return EXIT_OK


def cmd_synth(args) -> int:
    from .synthetic import make_shape_corpus, write_corpus

    items = make_shape_corpus(args.n_per_class, args.size, args.sigma, args.seed)
    paths = write_corpus(args.out, items)
    print(f"{len(paths)} fields -> {args.out}")
    return EXIT_OK


# --------------------------------------------------------------------------
# Argument parsing

def _budget(text: str):
    if text == "auto":
        return "auto"
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("budget must be 'auto' or a positive integer") from None
    if value < 1:
        raise argparse.ArgumentTypeError("budget must be positive")
    return value


def _k_list(text: str):
    try:
        ks = tuple(int(k) for k in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected a comma-separated list of integers") from None
    if not ks or min(ks) < 1:
        raise argparse.ArgumentTypeError("k values must be at least 1")
    return ks


def _add_cloud_flags(p, sampler_choices, default_sampler):
    p.add_argument("--sampler", choices=sampler_choices, default=default_sampler)
    p.add_argument("--r", type=float, default=0.6, help="MS persistence level in [0, 1]")
    p.add_argument("--m", type=int, help="FPS point count")
    p.add_argument("--seed-index", type=int, default=0, help="FPS starting point")
    p.add_argument("--exclusion-threshold", type=float, default=1.0)
    p.add_argument("--lift-scale", type=float, default=0.0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="critpers", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"critpers {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="sample points from a PGM image")
    p.add_argument("image")
    _add_cloud_flags(p, ("ms", "fps"), "ms")
    p.add_argument("-o", "--output", help="points CSV (default: <image>.points.csv)")
    p.add_argument("--plot-data", help="also write points and image size as JSON")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("diagram", help="persistence diagrams of an image sample or point list")
    p.add_argument("input", help="PGM image, or a CSV/whitespace point list")
    _add_cloud_flags(p, ("ms", "fps", "all"), "ms")
    p.add_argument("--complex", choices=("rips", "witness"), default="rips")
    p.add_argument("--nu", type=int, choices=(0, 1, 2), default=1)
    p.add_argument("--cap", type=float)
    p.add_argument("--max-dim", type=int, default=3)
    p.add_argument("--landmarks", type=int,
                   help="point lists with --complex witness: the first N points are landmarks")
    p.add_argument("-o", "--output", help="diagram JSON (default: <input>.diagram.json)")
    p.set_defaults(func=cmd_diagram)

    p = sub.add_parser("distmat", help="distance matrix from diagram JSON files")
    p.add_argument("diagrams", nargs="+")
    p.add_argument("--q", type=float, default=1.0)
    p.add_argument("--cap", type=float,
                   help="closes essential classes (default: the cap in each file's manifest)")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_distmat)

    p = sub.add_parser("mds", help="classical MDS embedding of a distance matrix")
    p.add_argument("matrix")
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_mds)

    p = sub.add_parser("classify", help="split, classify and evaluate from a distance matrix")
    p.add_argument("matrix")
    p.add_argument("--labels", help="CSV of id,label (default: label/item ids)")
    p.add_argument("--k", default="1,2,3,4,8")
    p.add_argument("--split-fraction", type=float, default=0.7)
    p.add_argument("--split-seed", type=int, default=0)
    p.add_argument("--mds-dim", type=int, default=2, help="0 disables nearest-centroid")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("pipeline", help="full run over a <root>/<label>/*.pgm corpus")
    p.add_argument("corpus")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--config", help="key=value config file; flags override it")
    p.add_argument("--threads", type=int, help=f"worker processes (default: ${THREADS_ENV} or CPU count)")
    p.add_argument("--sampler", choices=("ms", "fps"))
    p.add_argument("--r", type=float)
    p.add_argument("--budget", "--fps-budget", dest="fps_budget", type=_budget)
    p.add_argument("--fps-seed-index", type=int)
    p.add_argument("--complex", choices=("rips", "witness"))
    p.add_argument("--nu", type=int, choices=(0, 1, 2))
    p.add_argument("--cap", type=float)
    p.add_argument("--max-dim", type=int)
    p.add_argument("--q", type=float)
    p.add_argument("--lift-scale", type=float)
    p.add_argument("--exclusion-threshold", type=float)
    p.add_argument("--knn-k", type=_k_list)
    p.add_argument("--split-fraction", type=float)
    p.add_argument("--split-seed", type=int)
    p.add_argument("--mds-dim", type=int)
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("synth", help="write a synthetic disk/annulus corpus")
    p.add_argument("out")
    p.add_argument("--n-per-class", type=int, default=20)
    p.add_argument("--size", type=int, default=64)
    p.add_argument("--sigma", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"critpers: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"critpers: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, KeyError, RuntimeError) as exc:
        print(f"critpers: invalid data: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
