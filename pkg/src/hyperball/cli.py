"""Command-line interface.

Every command writes a JSON envelope ``{command, seed, params, timestamp,
payload}`` to ``--out`` (or stdout).  Errors print one line
``hyperball: error[CODE]: message`` to stderr and exit with CODE:

* 1  self-test failure
* 2  malformed input file or model
* 3  infeasible parameters
* 4  training diverged
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import delta as dh
from . import fewshot, layers
from .errors import TrainingDivergedError
from .io import (
    FileFormatError,
    dumps,
    envelope,
    read_distance_matrix,
    read_feature_file,
    write_csv,
    write_features,
)
from .synthetic import KINDS, generate_synthetic


class CliError(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def _emit(args, command, payload, summary=None, out=None):
    params = {k: v for k, v in vars(args).items() if k not in ("func", "command")}
    env = envelope(command, getattr(args, "seed", None), params, payload)
    text = dumps(env)
    out = out if out is not None else getattr(args, "out", None)
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text + "\n")
        if summary:
            print(summary)
    else:
        if summary:
            print(summary, file=sys.stderr)
        print(text)
    return env


def _aux_dir(args):
    if getattr(args, "csv_dir", None):
        return Path(args.csv_dir)
    if getattr(args, "out", None):
        return Path(args.out).parent
    return None


def _aux_stem(args, default):
    return Path(args.out).stem if getattr(args, "out", None) else default


def _labeled_input(args):
    if not args.labeled:
        raise CliError(3, f"--labeled is required: {args.command} needs class labels in column 0")
    return read_feature_file(args.input, labeled=True)


# ---------------------------------------------------------------------------


def cmd_delta(args):
    if (args.input is None) == (args.synthetic is None):
        raise CliError(3, "give exactly one of --input or --synthetic")
    if args.batch < 3:
        raise CliError(3, f"--batch must be at least 3, got {args.batch}")
    if args.repeats < 1:
        raise CliError(3, f"--repeats must be at least 1, got {args.repeats}")
    if args.synthetic is not None:
        n_points = args.n_points or (2 * args.batch if args.synthetic == "tree" else 10 * args.batch)
        kw = {"n_classes": args.n_classes, "dim": args.dim} if args.synthetic == "blobs" else {}
        if args.synthetic == "blobs":
            n_points = max(1, -(-n_points // args.n_classes))
        data = generate_synthetic(args.synthetic, n_points=n_points, seed=args.seed, **kw)
        values, metric = data.data, data.metric
    elif args.matrix:
        values, metric = read_distance_matrix(args.input), "precomputed"
        try:
            dh.as_distance_matrix(values)
        except ValueError as exc:
            raise FileFormatError(args.input, str(exc)) from None
    else:
        values, _ = read_feature_file(args.input, labeled=args.labeled)
        metric = args.metric
    n = values.shape[0]
    if n < args.batch:
        raise CliError(3, f"--batch {args.batch} exceeds the {n} available points")
    report = dh.delta_rel_batched(values, args.batch, args.repeats, args.seed, metric=metric, c=args.c)
    payload = report.to_dict()
    c_txt = "unbounded" if payload["curvature_unbounded"] else f"{report.c_estimate:.6g}"
    summary = f"delta_rel = {report.mean:.6f} +- {report.std:.6f}  c_estimate = {c_txt}"
    return _emit(args, "delta", payload, summary)


def cmd_curvature(args):
    try:
        c = dh.estimate_curvature(args.delta_rel)
    except ValueError as exc:
        raise CliError(3, str(exc)) from None
    payload = {"delta_rel": args.delta_rel, "c_estimate": None if np.isinf(c) else c,
               "curvature_unbounded": bool(np.isinf(c)), "effective_delta_rel": dh.EFFECTIVE_DELTA_REL}
    return _emit(args, "curvature", payload)


def cmd_generate(args):
    kw = {}
    if args.kind == "blobs":
        kw = {"n_classes": args.n_classes, "dim": args.dim, "separation": args.separation, "sigma": args.sigma}
    data = generate_synthetic(args.kind, n_points=args.n_points, seed=args.seed, **kw)
    if data.metric == "precomputed":
        write_csv(args.out, None, data.distances.tolist())
    else:
        write_features(args.out, data.features, data.labels)
    print(f"wrote {args.kind} ({data.metric}) to {args.out}")
    return 0


def cmd_protoeval(args):
    x, y = _labeled_input(args)
    classes, counts = np.unique(y, return_counts=True)
    need = args.k_shot + args.queries
    if args.n_way < 1 or args.k_shot < 1 or args.queries < 1 or args.episodes < 1:
        raise CliError(3, "--n-way, --k-shot, --queries and --episodes must be positive")
    usable = int(np.sum(counts >= need))
    if args.n_way > classes.size:
        raise CliError(3, f"--n-way {args.n_way} exceeds the {classes.size} classes in {args.input}")
    if np.any(counts < need):
        short = classes[counts < need]
        raise CliError(3, f"classes {short.tolist()} have fewer than {need} instances "
                          f"(k-shot + queries); {usable} classes usable")
    ev = fewshot.evaluate_episodes(x, y, args.n_way, args.k_shot, args.queries, args.episodes,
                                   c=args.c, seed=args.seed, euclidean=args.euclidean, scale=args.scale)
    payload = {"mean_accuracy": ev.mean, "ci95": ev.ci95, "episodes": args.episodes,
               "geometry": "euclidean" if args.euclidean else "poincare",
               "predictions": [p.tolist() for p in ev.predictions]}
    aux = _aux_dir(args)
    if aux is not None:
        path = aux / f"{_aux_stem(args, 'protoeval')}.episodes.csv"
        write_csv(path, ["episode", "accuracy"], enumerate(ev.accuracies))
        payload["episodes_csv"] = str(path)
    summary = f"accuracy = {ev.mean:.4f} +- {ev.ci95:.4f} (95% CI, {args.episodes} episodes)"
    return _emit(args, "protoeval", payload, summary)


def _load_model(path):
    try:
        obj = json.loads(Path(path).read_text())
        return layers.MlrModel.from_dict(obj), float(obj.get("scale", 1.0))
    except (OSError, ValueError, TypeError) as exc:
        raise FileFormatError(path, f"cannot load model: {exc}") from None


def cmd_mlr_train(args):
    x, y = _labeled_input(args)
    k = int(y.max()) + 1
    if np.unique(y).size < 2:
        raise CliError(3, "MLR training needs at least 2 classes")
    if not args.lr > 0 or args.steps < 0:
        raise CliError(3, "--lr must be positive and --steps non-negative")
    pts = fewshot.embed(x, args.c, args.scale)
    res = layers.mlr_train(pts, y, k, args.c, steps=args.steps, lr=args.lr, seed=args.seed)
    model_obj = res.model.to_dict()
    model_obj["scale"] = args.scale
    model_path = Path(args.out)
    model_path.parent.mkdir(parents=True, exist_ok=True)
    model_path.write_text(json.dumps(model_obj) + "\n")
    loss_path = model_path.with_suffix(".loss.csv")
    write_csv(loss_path, ["step", "loss", "smoothed"], zip(range(args.steps), res.losses, res.smoothed))
    acc = layers.accuracy(res.model, pts, y)
    final_loss = layers.mlr_loss(res.model, pts, y)
    payload = {"train_accuracy": acc, "final_loss": final_loss, "steps": args.steps,
               "n_classes": k, "model": str(model_path), "loss_csv": str(loss_path)}
    summary = f"train accuracy = {acc:.4f}, loss = {final_loss:.6g}"
    return _emit(args, "mlr-train", payload, summary, out=args.report or "")


def cmd_mlr_eval(args):
    model, scale = _load_model(args.model)
    x, y = read_feature_file(args.input, labeled=args.labeled)
    if x.shape[1] != model.dim:
        raise CliError(3, f"model expects {model.dim} features, {args.input} has {x.shape[1]}")
    pts = fewshot.embed(x, model.c, scale)
    probs = layers.mlr_probabilities(model, pts)
    payload = {
        "n_points": int(x.shape[0]),
        "p_max": fewshot.p_max_profile(probs),
        "distance_to_origin": fewshot.distance_to_origin_profile(pts, model.c).distances_to_origin,
        "predictions": np.argmax(probs, axis=1),
    }
    summary = None
    if y is not None:
        payload["accuracy"] = float(np.mean(np.argmax(probs, axis=1) == y))
        summary = f"accuracy = {payload['accuracy']:.4f}"
    return _emit(args, "mlr-eval", payload, summary)


def _histogram(a, b, bins):
    lo = min(a.min(), b.min())
    hi = max(a.max(), b.max())
    if hi == lo:
        hi = lo + 1.0
    edges = np.linspace(lo, hi, bins + 1)
    ca, _ = np.histogram(a, edges)
    cb, _ = np.histogram(b, edges)
    return [(edges[i], edges[i + 1], ca[i], cb[i]) for i in range(bins)]


def cmd_uncertainty(args):
    model, scale = _load_model(args.model)
    profiles = {}
    for tag, path in (("a", args.input_a), ("b", args.input_b)):
        x, _ = read_feature_file(path, labeled=args.labeled)
        if x.shape[1] != model.dim:
            raise CliError(3, f"model expects {model.dim} features, {path} has {x.shape[1]}")
        pts = fewshot.embed(x, model.c, scale)
        profiles[tag] = (
            fewshot.distance_to_origin_profile(pts, model.c, str(path)).distances_to_origin,
            fewshot.p_max_profile(layers.mlr_probabilities(model, pts)),
        )
    (da, pa), (db, pb) = profiles["a"], profiles["b"]
    payload = {
        "ks_distance_to_origin": fewshot.ks_statistic(da, db),
        "ks_p_max": fewshot.ks_statistic(pa, pb),
        "distance_to_origin": {"a": da, "b": db},
        "p_max": {"a": pa, "b": pb},
    }
    aux = _aux_dir(args)
    if aux is not None:
        stem = _aux_stem(args, "uncertainty")
        header = ["bin_left", "bin_right", "count_a", "count_b"]
        p1 = write_csv(aux / f"{stem}.dist_hist.csv", header, _histogram(da, db, args.bins))
        p2 = write_csv(aux / f"{stem}.pmax_hist.csv", header, _histogram(pa, pb, args.bins))
        payload["histograms"] = {"distance_to_origin": str(p1), "p_max": str(p2)}
    summary = (f"KS(distance to origin) = {payload['ks_distance_to_origin']:.4f}, "
               f"KS(p_max) = {payload['ks_p_max']:.4f}")
    return _emit(args, "uncertainty", payload, summary)


def cmd_selftest(args):
    from .selftest import run_selftest

    results = run_selftest(args.seed)
    failed = [name for name, ok in results if not ok]
    for name, ok in results:
        print(f"{'PASS' if ok else 'FAIL'}  {name}")
    if failed:
        raise CliError(1, f"self-test failed: {', '.join(failed)}")
    return 0


# ---------------------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="hyperball", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("delta", help="relative Gromov delta and curvature estimate")
    src = d.add_argument_group("input")
    src.add_argument("--input", type=Path, help="feature CSV, or distance-matrix CSV with --matrix")
    src.add_argument("--synthetic", choices=KINDS)
    src.add_argument("--matrix", action="store_true", help="--input is a square distance matrix")
    src.add_argument("--labeled", action="store_true", help="column 0 holds labels (ignored)")
    d.add_argument("--metric", choices=sorted(dh.METRICS), default="euclidean",
                   help="distance between feature rows (default: euclidean)")
    d.add_argument("--c", type=float, default=1.0, help="curvature for --metric poincare")
    d.add_argument("--n-points", type=int, default=None,
                   help="synthetic dataset size (default 10x batch, 2x for tree)")
    d.add_argument("--n-classes", type=int, default=5, help=argparse.SUPPRESS)
    d.add_argument("--dim", type=int, default=5, help=argparse.SUPPRESS)
    d.add_argument("--batch", type=int, default=1000)
    d.add_argument("--repeats", type=int, default=10)
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--out", type=Path)
    d.set_defaults(func=cmd_delta)

    cv = sub.add_parser("curvature", help="ball curvature from a relative delta")
    cv.add_argument("--delta-rel", type=float, required=True)
    cv.add_argument("--out", type=Path)
    cv.set_defaults(func=cmd_curvature)

    g = sub.add_parser("generate", help="write a synthetic dataset to CSV")
    g.add_argument("--kind", choices=KINDS, required=True)
    g.add_argument("--n-points", type=int, default=1000, help="points (per class for blobs)")
    g.add_argument("--n-classes", type=int, default=5)
    g.add_argument("--dim", type=int, default=5)
    g.add_argument("--separation", type=float, default=8.0)
    g.add_argument("--sigma", type=float, default=1.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", type=Path, required=True)
    g.set_defaults(func=cmd_generate)

    pe = sub.add_parser("protoeval", help="few-shot prototype classification")
    pe.add_argument("--input", type=Path, required=True)
    pe.add_argument("--labeled", action="store_true")
    pe.add_argument("--n-way", type=int, default=5)
    pe.add_argument("--k-shot", type=int, default=5)
    pe.add_argument("--queries", type=int, default=15)
    pe.add_argument("--episodes", type=int, default=600)
    pe.add_argument("--c", type=float, default=1.0)
    pe.add_argument("--scale", type=float, default=1.0, help="multiply features before the exp map")
    pe.add_argument("--euclidean", action="store_true", help="Euclidean ProtoNet baseline")
    pe.add_argument("--seed", type=int, default=0)
    pe.add_argument("--out", type=Path)
    pe.add_argument("--csv-dir", type=Path)
    pe.set_defaults(func=cmd_protoeval)

    mt = sub.add_parser("mlr-train", help="train a hyperbolic MLR layer")
    mt.add_argument("--input", type=Path, required=True)
    mt.add_argument("--labeled", action="store_true")
    mt.add_argument("--c", type=float, default=1.0)
    mt.add_argument("--steps", type=int, default=2000)
    mt.add_argument("--lr", type=float, default=0.1)
    mt.add_argument("--scale", type=float, default=1.0)
    mt.add_argument("--seed", type=int, default=0)
    mt.add_argument("--out", type=Path, required=True, metavar="MODEL",
                    help="model JSON path; the loss trace goes next to it as MODEL.loss.csv")
    mt.add_argument("--report", type=Path, help="report JSON (default: stdout)")
    mt.set_defaults(func=cmd_mlr_train)

    me = sub.add_parser("mlr-eval", help="evaluate a trained MLR model")
    me.add_argument("--model", type=Path, required=True)
    me.add_argument("--input", type=Path, required=True)
    me.add_argument("--labeled", action="store_true")
    me.add_argument("--out", type=Path)
    me.set_defaults(func=cmd_mlr_eval)

    u = sub.add_parser("uncertainty", help="distance-to-origin vs p_max comparison of two sets")
    u.add_argument("--model", type=Path, required=True)
    u.add_argument("--input-a", type=Path, required=True)
    u.add_argument("--input-b", type=Path, required=True)
    u.add_argument("--labeled", action="store_true")
    u.add_argument("--bins", type=int, default=30)
    u.add_argument("--out", type=Path)
    u.add_argument("--csv-dir", type=Path)
    u.set_defaults(func=cmd_uncertainty)

    st = sub.add_parser("selftest", help="run the quick property suite")
    st.add_argument("--seed", type=int, default=0)
    st.set_defaults(func=cmd_selftest)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except CliError as exc:
        code, msg = exc.code, str(exc)
    except FileFormatError as exc:
        code, msg = 2, str(exc)
    except TrainingDivergedError as exc:
        code, msg = 4, f"training diverged at step {exc.step}: {exc}"
    except ValueError as exc:
        code, msg = 3, str(exc)
    else:
        return 0
    print(f"hyperball: error[{code}]: {' '.join(msg.split())}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
