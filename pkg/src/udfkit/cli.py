"""Command-line orchestration: experiment configs, stage caching, reports.

Commands: gen-toy, detect, sample, train, reconstruct, pipeline, improve,
toy-compare. All randomness comes from seeds in the config; every command
writes only inside its --out directory. Exit codes: 0 success, 2 validation
or usage error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import edge_detect, geometry, neural_udf, reconstruct_eval, sampler, toygen
from .edge_detect import DetectorConfig, detect_edges, ks_descriptor, odds_ratio_descriptor_2d, pauly_descriptor
from .errors import InvalidInputError, UdfkitError
from .geometry import KdTree, TriangleMesh, knn, load_mesh, normalize_to_unit_ball
from .neural_udf import MlpArchitecture, TrainConfig
from .sampler import SamplingConfig
from .udf_oracle import UdfOracle

__all__ = ["ExperimentConfig", "main"]

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_RUNTIME = 3

WORKERS_ENV = "UDFKIT_WORKERS"


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class ReconstructionConfig:
    n_r: int = 2000
    steps: int = 300
    step_size: float = 1e-3

    def __post_init__(self):
        if self.n_r < 1 or self.steps < 1 or self.step_size <= 0:
            raise InvalidInputError("reconstruction parameters must be positive")


@dataclass(frozen=True)
class ShapeSpec:
    """Either a mesh file path or a named toy mesh."""

    name: str
    path: str | None = None
    toy: str | None = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if (self.path is None) == (self.toy is None):
            raise InvalidInputError(f"shape {self.name!r}: give exactly one of path/toy")
        if self.toy is not None and self.toy not in toygen.WATERTIGHT_KINDS:
            raise InvalidInputError(f"shape {self.name!r}: unknown toy kind {self.toy!r}")

    def load(self) -> TriangleMesh:
        if self.toy is not None:
            mesh = toygen.gen_watertight(self.toy, **self.params)
        else:
            mesh = load_mesh(self.path)
        return normalize_to_unit_ball(mesh)


@dataclass(frozen=True)
class ExperimentConfig:
    shapes: tuple
    detector: DetectorConfig = DetectorConfig()
    sampling: SamplingConfig = SamplingConfig(n=600, xi=0.6)
    training: TrainConfig = TrainConfig()
    reconstruction: ReconstructionConfig = ReconstructionConfig()
    hidden: int = 128
    seeds: tuple = (0, 1, 2, 3, 4)

    def __post_init__(self):
        if len(self.shapes) == 0:
            raise InvalidInputError("config needs at least one shape")
        if len(self.seeds) == 0:
            raise InvalidInputError("config needs at least one seed")

    def arch(self) -> MlpArchitecture:
        return MlpArchitecture(hidden=self.hidden)

    def to_json(self) -> str:
        payload = {
            "shapes": [asdict(s) for s in self.shapes],
            "detector": asdict(self.detector),
            "sampling": asdict(self.sampling),
            "training": asdict(self.training),
            "reconstruction": asdict(self.reconstruction),
            "hidden": self.hidden,
            "seeds": list(self.seeds),
        }
        return json.dumps(payload, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        try:
            payload = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidInputError(f"config is not valid JSON: {exc}") from exc
        try:
            shapes = tuple(ShapeSpec(**s) for s in payload["shapes"])
            return cls(
                shapes=shapes,
                detector=DetectorConfig(**payload.get("detector", {})),
                sampling=SamplingConfig(**payload.get("sampling", {"n": 600})),
                training=TrainConfig(**payload.get("training", {})),
                reconstruction=ReconstructionConfig(**payload.get("reconstruction", {})),
                hidden=int(payload.get("hidden", 128)),
                seeds=tuple(int(s) for s in payload.get("seeds", (0, 1, 2, 3, 4))),
            )
        except (KeyError, TypeError) as exc:
            raise InvalidInputError(f"bad config structure: {exc}") from exc

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise InvalidInputError(f"cannot read config {path}: {exc}") from exc
        return cls.from_json(text)


def _workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _json_dump(path, payload) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# stage helpers with content-hash caching


def _atomic_savez(path: Path, **arrays) -> None:
    tmp = f"{path}.tmp{os.getpid()}.npz"
    np.savez_compressed(tmp, **arrays)
    os.replace(tmp, path)


def _detect_cached(mesh: TriangleMesh, cfg: DetectorConfig, cache_dir: Path | None):
    if cache_dir is None:
        return detect_edges(mesh, cfg)
    key = sampler.config_hash({"stage": "detect", "mesh": sampler.mesh_hash(mesh)}, cfg)
    path = cache_dir / f"detect_{key}.npz"
    if path.exists():
        data = np.load(path)
        return edge_detect.EdgeLabeledCloud(
            points=data["points"], pauly=data["pauly"], p_value=data["p_value"],
            label=data["label"], p0=float(data["p0"]),
            n_insufficient=int(data["n_insufficient"]))
    labeled = detect_edges(mesh, cfg)
    _atomic_savez(path, points=labeled.points, pauly=labeled.pauly,
                  p_value=labeled.p_value, label=labeled.label,
                  p0=np.float64(labeled.p0),
                  n_insufficient=np.int64(labeled.n_insufficient))
    return labeled


def _sample_cached(mesh, labeled, oracle, cfg: SamplingConfig, detector: DetectorConfig,
                   cache_dir: Path | None):
    if cache_dir is None:
        return sampler.sample_training_set(mesh, labeled, oracle, cfg)
    key = sampler.config_hash({"stage": "sample", "mesh": sampler.mesh_hash(mesh)},
                              detector, cfg)
    path = cache_dir / f"training_{key}.npz"
    if path.exists():
        return sampler.load_training_cache(path)
    ts = sampler.sample_training_set(mesh, labeled, oracle, cfg)
    _atomic_savez(path, inputs=ts.inputs, targets=ts.targets, tags=ts.tags,
                  pre_noise=ts.pre_noise, n_edge_fallbacks=np.int64(ts.n_edge_fallbacks))
    return ts


# ---------------------------------------------------------------------------
# single-shape pipeline (used by `pipeline` and `improve`)


def _pipeline_one(mesh: TriangleMesh, cfg: ExperimentConfig, seed: int, xi: float,
                  cache_dir: Path | None, labeled=None, oracle=None):
    detector = replace(cfg.detector, seed=seed)
    if labeled is None:
        labeled = _detect_cached(mesh, detector, cache_dir)
    if oracle is None:
        oracle = UdfOracle(mesh)
    sampling = replace(cfg.sampling, xi=xi, seed=seed)
    training_set = _sample_cached(mesh, labeled, oracle, sampling, detector, cache_dir)
    training = replace(cfg.training, seed=seed)

    net = None
    net_path = None
    if cache_dir is not None:
        net_key = sampler.config_hash(
            {"stage": "train", "mesh": sampler.mesh_hash(mesh), "hidden": cfg.hidden},
            detector, sampling, training)
        net_path = cache_dir / f"net_{net_key}.json"
        if net_path.exists():
            net = neural_udf.load_checkpoint(net_path)
    if net is None:
        net = neural_udf.train(neural_udf.init(cfg.arch(), seed=seed), training_set, training)
        if net_path is not None:
            neural_udf.save_checkpoint(net_path, net)

    report = reconstruct_eval.reconstruct_zero_set(
        net, mesh, n_r=cfg.reconstruction.n_r, seed=seed,
        steps=cfg.reconstruction.steps, step_size=cfg.reconstruction.step_size)
    return {
        "seed": seed,
        "xi": xi,
        "tau": reconstruct_eval.surface_complexity(labeled),
        "edge_error": reconstruct_eval.edge_error(net, labeled),
        "delta": report.delta,
        "final_loss": net.final_loss,
        "n_diverged": int(report.diverged.sum()),
    }, net, labeled, report


def _improve_one_run(payload):
    """Worker entry for process pools: both arms of one (shape, seed) pair."""
    cfg_json, shape_index, seed = payload
    cfg = ExperimentConfig.from_json(cfg_json)
    mesh = cfg.shapes[shape_index].load()
    detector = replace(cfg.detector, seed=seed)
    labeled = detect_edges(mesh, detector)
    oracle = UdfOracle(mesh)
    deltas = {}
    for xi in (cfg.sampling.xi, 0.0):
        metrics, _, _, _ = _pipeline_one(mesh, cfg, seed, xi, cache_dir=None,
                                         labeled=labeled, oracle=oracle)
        deltas[xi] = metrics["delta"]
    return (shape_index, seed), (deltas[cfg.sampling.xi], deltas[0.0])


# ---------------------------------------------------------------------------
# commands


def cmd_gen_toy(args) -> int:
    out = _out_dir(args)
    if args.kind in toygen.WATERTIGHT_KINDS:
        params = json.loads(args.params) if args.params else {}
        mesh = toygen.gen_watertight(args.kind, **params)
        path = out / f"{args.kind}.obj"
        geometry.write_obj(path, mesh)
        print(path)
        return EXIT_OK
    count = args.count or 500
    if args.kind == "cone":
        cloud = toygen.gen_cone(args.psi, count, args.seed)
    elif args.kind == "fold":
        cloud = toygen.gen_fold(args.psi, count, args.seed)
    elif args.kind == "plate":
        cloud = toygen.gen_plate(args.thickness, count, args.seed)
    elif args.kind == "contour2d":
        cloud = toygen.gen_contour2d(args.psi, count, args.seed)
    else:
        raise InvalidInputError(f"unknown toy kind {args.kind!r}")
    path = out / f"{args.kind}.csv"
    geometry.write_csv_points(path, cloud.points,
                              columns={"label": cloud.labels} if cloud.labels is not None else None,
                              header=("x", "y", "z"))
    if cloud.points.shape[1] == 3:
        geometry.write_ply_points(out / f"{args.kind}.ply", cloud.points)
    print(path)
    return EXIT_OK


def _load_input_mesh(args) -> TriangleMesh:
    if not Path(args.mesh).exists():
        raise InvalidInputError(f"file not found: {args.mesh}")
    return normalize_to_unit_ball(load_mesh(args.mesh))


def cmd_detect(args) -> int:
    mesh = _load_input_mesh(args)
    cfg = DetectorConfig(n_s=args.ns, k=args.k, p0=args.p0, seed=args.seed)
    labeled = detect_edges(mesh, cfg)
    out = _out_dir(args)
    edge_detect.export_labeled_csv(out / "labeled.csv", labeled)
    edge_detect.export_labeled_ply(out / "labeled.ply", labeled)
    hist, edges = np.histogram(labeled.p_value, bins=10, range=(0.0, 1.0))
    summary = {
        "n_s": cfg.n_s,
        "k": cfg.k,
        "p0": cfg.p0,
        "seed": cfg.seed,
        "tau": reconstruct_eval.surface_complexity(labeled),
        "n_edge": int(len(labeled.edge_indices)),
        "n_flat": int(len(labeled.flat_indices)),
        "n_insufficient": labeled.n_insufficient,
        "p_value_histogram": {
            "bin_edges": edges.tolist(),
            "counts": hist.tolist(),
        },
    }
    _json_dump(out / "summary.json", summary)
    print(out / "summary.json")
    return EXIT_OK


def cmd_sample(args) -> int:
    mesh = _load_input_mesh(args)
    detector = DetectorConfig(n_s=args.ns, k=args.k, p0=args.p0, seed=args.seed)
    labeled = detect_edges(mesh, detector)
    cfg = SamplingConfig(n=args.n, nu=args.nu, xi=args.xi,
                         noise_sigma=args.noise_sigma, seed=args.seed)
    ts = sampler.sample_training_set(mesh, labeled, UdfOracle(mesh), cfg)
    out = _out_dir(args)
    sampler.write_training_csv(out / "training.csv", ts)
    sampler.save_training_cache(out / "training.npz", ts)
    print(out / "training.csv")
    return EXIT_OK


def cmd_train(args) -> int:
    data = sampler.load_training_cache(args.training_set)
    cfg = TrainConfig(learning_rate=args.lr, batch_size=args.batch_size,
                      epochs=args.epochs, seed=args.seed)
    net = neural_udf.train(neural_udf.init(MlpArchitecture(hidden=args.hidden), args.seed),
                           data, cfg)
    out = _out_dir(args)
    neural_udf.save_checkpoint(out / "net.json", net)
    neural_udf.write_loss_trace(out / "loss.csv", net)
    print(out / "net.json")
    return EXIT_OK


def cmd_reconstruct(args) -> int:
    mesh = _load_input_mesh(args)
    net = neural_udf.load_checkpoint(args.net)
    report = reconstruct_eval.reconstruct_zero_set(
        net, mesh, n_r=args.nr, seed=args.seed, steps=args.steps,
        step_size=args.step_size)
    out = _out_dir(args)
    geometry.write_csv_points(out / "reconstructed.csv", report.reconstructed)
    geometry.write_ply_points(out / "reconstructed.ply", report.reconstructed)
    _json_dump(out / "reconstruction.json", {
        "n_r": report.n_r,
        "delta": report.delta,
        "residual_mean": report.residual_mean,
        "residual_max": report.residual_max,
        "n_diverged": int(report.diverged.sum()),
    })
    print(out / "reconstruction.json")
    return EXIT_OK


def cmd_pipeline(args) -> int:
    cfg = ExperimentConfig.load(args.config)
    out = _out_dir(args)
    cache_dir = out / "cache"
    cache_dir.mkdir(exist_ok=True)
    (out / "config.json").write_text(cfg.to_json() + "\n")
    shapes_payload = {}
    failed = False
    for spec in cfg.shapes:
        try:
            mesh = spec.load()
            seed = int(cfg.seeds[0])
            metrics, net, labeled, _ = _pipeline_one(mesh, cfg, seed, cfg.sampling.xi, cache_dir)
            shape_dir = out / spec.name
            shape_dir.mkdir(exist_ok=True)
            edge_detect.export_labeled_csv(shape_dir / "labeled.csv", labeled)
            neural_udf.save_checkpoint(shape_dir / "net.json", net)
            neural_udf.write_loss_trace(shape_dir / "loss.csv", net)
            # path kept relative so reruns into other directories stay byte-identical
            metrics["loss_trace"] = f"{spec.name}/loss.csv"
            shapes_payload[spec.name] = metrics
        except UdfkitError as exc:
            # stage failure: keep what was produced, record the error, move on
            failed = True
            shapes_payload[spec.name] = {"error": str(exc)}
            print(f"error: shape {spec.name!r}: {exc}", file=sys.stderr)
    _json_dump(out / "metrics.json", {"shapes": shapes_payload})
    print(out / "metrics.json")
    return EXIT_RUNTIME if failed else EXIT_OK


def cmd_improve(args) -> int:
    cfg = ExperimentConfig.load(args.config)
    out = _out_dir(args)
    (out / "config.json").write_text(cfg.to_json() + "\n")

    jobs = [(cfg.to_json(), shape_index, int(seed))
            for shape_index in range(len(cfg.shapes)) for seed in cfg.seeds]

    results = {}
    errors = {}
    workers = _workers()
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {pool.submit(_improve_one_run, job): job for job in jobs}
            for future, job in futures.items():
                try:
                    key, deltas = future.result()
                    results[key] = deltas
                except UdfkitError as exc:
                    errors[job[1]] = str(exc)
    else:
        for job in jobs:
            try:
                key, deltas = _improve_one_run(job)
                results[key] = deltas
            except UdfkitError as exc:
                errors[job[1]] = str(exc)

    shapes_payload = {}
    improvements = []
    for shape_index, spec in enumerate(cfg.shapes):
        if shape_index in errors:
            # per-shape failures are isolated; the rest of the report stands
            shapes_payload[spec.name] = {"error": errors[shape_index]}
            print(f"error: shape {spec.name!r}: {errors[shape_index]}", file=sys.stderr)
            continue
        deltas_xi = [results[(shape_index, int(s))][0] for s in cfg.seeds]
        deltas_zero = [results[(shape_index, int(s))][1] for s in cfg.seeds]
        report = reconstruct_eval.ImprovementReport.from_runs(
            cfg.sampling.xi, cfg.seeds, deltas_xi, deltas_zero)
        improvements.append(report.improvement)
        shapes_payload[spec.name] = {
            "deltas_xi": list(report.deltas_xi),
            "deltas_zero": list(report.deltas_zero),
            "median_xi": report.median_xi,
            "median_zero": report.median_zero,
            "improvement": report.improvement,
        }
    payload = {
        "xi": cfg.sampling.xi,
        "seeds": list(cfg.seeds),
        "shapes": shapes_payload,
        "mean_improvement": float(np.mean(improvements)) if improvements else None,
        "fraction_improved": float(np.mean([i > 0 for i in improvements])) if improvements else None,
    }
    _json_dump(out / "improvement.json", payload)
    with open(out / "improvements.csv", "w") as fh:
        fh.write("shape,median_xi,median_zero,improvement\n")
        for spec in cfg.shapes:
            row = shapes_payload[spec.name]
            if "error" in row:
                continue
            fh.write(f"{spec.name},{row['median_xi']!r},{row['median_zero']!r},"
                     f"{row['improvement']!r}\n")
    hist, edges = np.histogram(improvements, bins=10, range=(-0.5, 0.5))
    with open(out / "improvement_histogram.csv", "w") as fh:
        fh.write("bin_lo,bin_hi,count\n")
        for lo, hi, count in zip(edges[:-1], edges[1:], hist):
            fh.write(f"{float(lo)!r},{float(hi)!r},{int(count)}\n")
    print(out / "improvement.json")
    return EXIT_RUNTIME if errors else EXIT_OK


def cmd_toy_compare(args) -> int:
    out = _out_dir(args)
    rows = []
    if args.family in ("cone", "fold"):
        gen = toygen.gen_cone if args.family == "cone" else toygen.gen_fold
        sweep = np.linspace(0.0, math.pi / 2, args.steps, endpoint=False)
        for value in sweep:
            paulys, ps = [], []
            for seed in range(args.seeds):
                cloud = gen(float(value), args.count, seed)
                index = KdTree(cloud.points)
                nbhd = knn(index, np.zeros(3), args.k)
                paulys.append(pauly_descriptor(nbhd))
                ps.append(ks_descriptor(nbhd, args.p0).p_value)
            rows.append((float(value), float(np.median(paulys)), float(np.median(ps))))
        header = "psi,pauly,ks_p_value"
    elif args.family == "plate":
        sweep = np.linspace(0.0, 1.0, args.steps)
        for value in sweep:
            paulys, ps = [], []
            for seed in range(args.seeds):
                cloud = toygen.gen_plate(float(value), args.count, seed)
                index = KdTree(cloud.points)
                nbhd = knn(index, np.zeros(3), args.k)
                paulys.append(pauly_descriptor(nbhd))
                ps.append(ks_descriptor(nbhd, args.p0).p_value)
            rows.append((float(value), float(np.median(paulys)), float(np.median(ps))))
        header = "d,pauly,ks_p_value"
    elif args.family == "contour2d":
        sweep = np.linspace(0.0, math.pi / 2, args.steps, endpoint=False)
        for value in sweep:
            ps = []
            for seed in range(args.seeds):
                cloud = toygen.gen_contour2d(float(value), args.count, seed)
                odds = odds_ratio_descriptor_2d(np.zeros(2), cloud.points, args.p0)
                ps.append(odds.p_value)
            rows.append((float(value), float(np.median(ps))))
        header = "psi,odds_p_value"
    else:
        raise InvalidInputError(f"unknown sweep family {args.family!r}")
    path = out / f"sweep_{args.family}.csv"
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(repr(v) for v in row) + "\n")
    print(path)
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="udfkit",
                                     description="Point-cloud edge detection and neural UDF training")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-toy", help="generate a toy mesh or point cloud")
    p.add_argument("--kind", required=True,
                   choices=list(toygen.WATERTIGHT_KINDS) + ["cone", "fold", "plate", "contour2d"])
    p.add_argument("--psi", type=float, default=0.0, help="rotation angle in radians")
    p.add_argument("--thickness", type=float, default=0.05)
    p.add_argument("--count", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--params", type=str, default=None, help="JSON dict of mesh parameters")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_toy)

    p = sub.add_parser("detect", help="edge-label a sampled surface")
    p.add_argument("--mesh", required=True)
    p.add_argument("--ns", type=int, default=2000)
    p.add_argument("--k", type=int, default=40)
    p.add_argument("--p0", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("sample", help="build a neural UDF training set")
    p.add_argument("--mesh", required=True)
    p.add_argument("--ns", type=int, default=2000)
    p.add_argument("--k", type=int, default=40)
    p.add_argument("--p0", type=float, default=0.2)
    p.add_argument("--n", type=int, default=600)
    p.add_argument("--nu", type=float, default=0.9)
    p.add_argument("--xi", type=float, default=0.6)
    p.add_argument("--noise-sigma", type=float, default=0.025, dest="noise_sigma")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("train", help="train a neural UDF on a cached training set")
    p.add_argument("--training-set", required=True, dest="training_set")
    p.add_argument("--hidden", type=int, default=128)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--batch-size", type=int, default=64, dest="batch_size")
    p.add_argument("--epochs", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("reconstruct", help="descend surface samples onto the net zero set")
    p.add_argument("--mesh", required=True)
    p.add_argument("--net", required=True)
    p.add_argument("--nr", type=int, default=2000)
    p.add_argument("--steps", type=int, default=300)
    p.add_argument("--step-size", type=float, default=1e-3, dest="step_size")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("pipeline", help="detect -> sample -> train -> reconstruct per shape")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("improve", help="paired-seed improvement experiment")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_improve)

    p = sub.add_parser("toy-compare", help="descriptor sweeps over toy families")
    p.add_argument("--family", required=True, choices=["cone", "fold", "plate", "contour2d"])
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--count", type=int, default=500)
    p.add_argument("--k", type=int, default=40)
    p.add_argument("--p0", type=float, default=0.2)
    p.add_argument("--seeds", type=int, default=1, help="median over this many seeds")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_toy_compare)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except InvalidInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except UdfkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
