"""Command-line surface tying the analysis pipelines together.

Exit codes: 0 success, 1 usage error, 2 data error. Every command is a
pure function of its inputs and flags; --seed controls any randomness.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import evaluation, fixmaps, io, pairwise, plots, prf


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _infer_dims(trials, m_flag, k_flag):
    M = m_flag if m_flag else max(max(t.left_image, t.right_image) for t in trials) + 1
    K = k_flag if k_flag else max(t.subject_id for t in trials) + 1
    return M, K


def _parse_rect(text):
    parts = text.split(",")
    if len(parts) != 4:
        raise argparse.ArgumentTypeError("rectangle must be x0,y0,w,h")
    return fixmaps.Rect(*[int(p) for p in parts])


def _load_feature_maps(maps_dir):
    files = sorted(Path(maps_dir).glob("*.txt"))
    if not files:
        raise io.DataFormatError(f"no .txt grid files in {maps_dir}")
    maps = []
    for f in files:
        grid = io.load_grid(f)
        if grid.width_bins != grid.height_bins:
            raise io.DataFormatError(f"{f}: feature maps must be square")
        diameter = grid.deg_per_bin * grid.width_bins
        maps.append(prf.FeatureMap(grid.values, field_diameter_deg=diameter).normalized())
    return maps


def _filtered_voxels(path, area):
    """Voxels of one area passing the inclusion filters, with their
    original column indices into the measured-response table."""
    voxels = io.load_voxels(path)
    indexed = [(i, v) for i, v in enumerate(voxels)
               if area is None or v.area == area]
    if not indexed:
        raise io.DataFormatError(f"no voxels for area {area!r}")
    kept = [(i, v) for i, v in indexed
            if v.t_value > 0 and 0.5 <= v.eccentricity <= 4.5
            and v.variance_explained > 0.55]
    if not kept:
        raise prf.EmptyVoxelSetError("no voxel passed the inclusion filters")
    return [i for i, _ in kept], [v for _, v in kept]


def _predicted_profiles(maps, voxels, window_sigmas):
    return np.vstack([prf.predict_profile(m, voxels, window_sigmas) for m in maps])


def _write_csv(path_or_stdout, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(str(v) if isinstance(v, (int, str)) else repr(float(v))
                              for v in row))
    text = "\n".join(lines) + "\n"
    if path_or_stdout is None:
        sys.stdout.write(text)
    else:
        Path(path_or_stdout).write_text(text)


def cmd_fit(args):
    trials = io.load_trials(args.trials)
    if not trials:
        raise io.DataFormatError(f"{args.trials}: no trials")
    M, K = _infer_dims(trials, args.m, args.k)
    rows = [pairwise.encode_trial(t, M, K) for t in trials]
    config = pairwise.FitConfig(C=args.c, tol=args.tol, max_iter=args.max_iter)
    model = pairwise.fit(rows, M, K, config, verbose=args.verbose)
    if not model.converged:
        print(f"warning: not converged after {model.n_iter} iterations",
              file=sys.stderr)
    io.save_model(model, args.out)
    print(f"fitted M={M} K={K} C={args.c:g} iterations={model.n_iter} "
          f"objective={model.final_objective!r} converged={model.converged}")
    return 0


def cmd_cv(args):
    trials = io.load_trials(args.trials)
    M, K = _infer_dims(trials, args.m, args.k)
    grid = ([float(c) for c in args.grid.split(",")] if args.grid
            else evaluation.default_c_grid())
    best, mean_acc = evaluation.cv_select_C(
        trials, M, K, grid=grid, n_folds=args.folds, seed=args.seed,
        tol=args.tol, max_iter=args.max_iter)
    _write_csv(args.out, ["C", "mean_validation_accuracy"],
               [(repr(c), mean_acc[c]) for c in grid])
    print(f"selected_C={best!r}")
    if args.figure:
        plots.save_cv_figure(mean_acc, best, args.figure)
    return 0


def cmd_eval(args):
    trials = io.load_trials(args.trials)
    M, K = _infer_dims(trials, args.m, args.k)
    subjects = sorted({t.subject_id for t in trials})
    plan = evaluation.make_leave2out_plan(subjects, args.folds, seed=args.seed)
    config = pairwise.FitConfig(C=args.c, tol=args.tol, max_iter=args.max_iter)
    report = evaluation.evaluate_folds(trials, M, K, plan, config)
    rows = [(i, report.auc_folds[i], report.tjur_folds[i], report.acc_folds[i])
            for i in range(len(plan.folds))]
    _write_csv(args.out, ["fold", "auc", "tjur_r2", "accuracy"], rows)
    s = report.summary()
    print(f"auc {s['auc_mean']:.4f} ({s['auc_sd']:.4f})  "
          f"tjur_r2 {s['tjur_r2_mean']:.4f} ({s['tjur_r2_sd']:.4f})  "
          f"accuracy {s['accuracy_mean']:.4f} ({s['accuracy_sd']:.4f})")
    if args.figure:
        plots.save_metrics_figure(report, args.figure)
    return 0


def cmd_bootstrap(args):
    values = [float(line) for line in Path(args.values).read_text().split()]
    if not values:
        raise io.DataFormatError(f"{args.values}: no values")
    result = evaluation.percentile_bootstrap(values, n_resamples=args.resamples,
                                             seed=args.seed)
    print(f"mean={result.mean!r} median={result.median!r} "
          f"se={result.standard_error!r} "
          f"ci95=[{result.ci_low!r}, {result.ci_high!r}] p={result.p_value!r}")
    if args.figure:
        plots.save_bootstrap_figure(result, args.figure)
    return 0


def cmd_density(args):
    fixations = io.load_fixations(args.fixations)
    fixations = [f for f in fixations if f.image_id == args.image_id]
    if not args.no_filter:
        fixations, report = fixmaps.filter_fixations(
            fixations, min_dur=args.min_dur,
            anticipatory_latency=args.anticipatory)
        print(f"kept={report.kept} anticipatory={report.anticipatory} "
              f"too_short={report.too_short} too_long={report.too_long}",
              file=sys.stderr)
    firsts = [f for f in fixations if f.ordinal == 1]
    grid = fixmaps.fixation_density(firsts, args.width, args.height,
                                    deg_per_bin=args.deg_per_bin)
    io.save_grid(grid, args.out)
    if args.figure:
        plots.save_grid_figure(grid, args.figure, title=f"image {args.image_id}")
    return 0


def cmd_kld(args):
    F = io.load_grid(args.fixation_map).normalized()
    S = io.load_grid(args.salience_map).normalized()
    print(repr(fixmaps.kld(F, S, eps=args.eps)))
    return 0


def cmd_mass(args):
    grid = io.load_grid(args.grid).normalized()
    split = fixmaps.salience_mass(grid, args.left, args.right)
    print(f"m_left={split.m_left!r} m_right={split.m_right!r} "
          f"delta={split.m_left - split.m_right!r}")
    return 0


def cmd_contrast(args):
    grid = io.load_grid(args.luminance)
    diameter = grid.deg_per_bin * grid.width_bins
    fmap = prf.rms_contrast_map(grid.values, window_radius=args.radius,
                                field_diameter_deg=diameter)
    out_grid = fixmaps.SalienceGrid(fmap.values, deg_per_bin=grid.deg_per_bin)
    io.save_grid(out_grid, args.out)
    if args.figure:
        plots.save_grid_figure(out_grid, args.figure, title="RMS contrast")
    return 0


def cmd_predict_profiles(args):
    maps = _load_feature_maps(args.maps)
    _, voxels = _filtered_voxels(args.voxels, args.area)
    profiles = _predicted_profiles(maps, voxels, args.window_sigmas)
    io.save_responses(list(range(len(maps))), profiles, args.out)
    print(f"predicted {profiles.shape[0]} profiles over {profiles.shape[1]} voxels")
    return 0


def cmd_identify(args):
    ids, measured = io.load_responses(args.measured)
    cols, voxels = _filtered_voxels(args.voxels, args.area)
    if max(cols) >= measured.shape[1]:
        raise io.DataFormatError("measured table has fewer columns than voxel file")
    measured = measured[:, cols]
    maps = _load_feature_maps(args.maps)
    if max(ids) >= len(maps):
        raise io.DataFormatError("image_id exceeds the number of feature maps")
    selected = [maps[i] for i in ids]
    predicted = _predicted_profiles(selected, voxels, args.window_sigmas)
    corr = prf.correlation_matrix(measured, predicted)
    acc, flags = prf.identify(corr)
    conf = prf.confidence(corr)
    _write_csv(f"{args.out_prefix}_corr.csv",
               ["image_id"] + [str(i) for i in ids],
               [(ids[k], *corr[k]) for k in range(len(ids))])
    _write_csv(f"{args.out_prefix}_confidence.csv",
               ["image_id", "correct", "confidence"],
               [(ids[k], int(flags[k]), conf[k]) for k in range(len(ids))])
    print(f"identification_accuracy={acc!r}")
    if args.figure:
        plots.save_matrix_figure(corr, args.figure,
                                 title=f"{args.area or 'all areas'}")
    return 0


def cmd_rsa(args):
    ids, measured = io.load_responses(args.measured)
    cols, voxels = _filtered_voxels(args.voxels, args.area)
    if max(cols) >= measured.shape[1]:
        raise io.DataFormatError("measured table has fewer columns than voxel file")
    measured = measured[:, cols]
    maps = _load_feature_maps(args.maps)
    selected = [maps[i] for i in ids]
    predicted = _predicted_profiles(selected, voxels, args.window_sigmas)
    tau = prf.rsa_kendall(measured, predicted)
    print(f"kendall_tau={tau!r}")
    if args.figure:
        plots.save_matrix_figure(prf.rdm(measured), args.figure,
                                 title="measured RDM", cmap="magma")
    return 0


def cmd_rank(args):
    model = io.load_model(args.model)
    ranking = pairwise.rank_images(model)
    _write_csv(args.out, ["image_id", "score"], ranking)
    if args.figure:
        plots.save_rank_figure(ranking, args.figure)
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="gazesal",
                     description="Global salience, fixation-map and pRF analyses")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, **kw):
        p = sub.add_parser(name, **kw)
        p.set_defaults(func=func)
        return p

    def fit_flags(p):
        p.add_argument("--tol", type=float, default=1e-8)
        p.add_argument("--max-iter", type=int, default=10000)
        p.add_argument("--m", type=int, default=0, help="number of images (default: infer)")
        p.add_argument("--k", type=int, default=0, help="number of subjects (default: infer)")

    p = add("fit", cmd_fit, help="fit the pairwise salience model")
    p.add_argument("--trials", required=True)
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--out", required=True)
    p.add_argument("--verbose", action="store_true")
    fit_flags(p)

    p = add("cv", cmd_cv, help="cross-validate the regularization strength")
    p.add_argument("--trials", required=True)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--grid", help="comma-separated C values (default: 10-point log grid)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.add_argument("--figure")
    fit_flags(p)

    p = add("eval", cmd_eval, help="leave-2-participants-out evaluation")
    p.add_argument("--trials", required=True)
    p.add_argument("--folds", type=int, required=True)
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.add_argument("--figure")
    fit_flags(p)

    p = add("bootstrap", cmd_bootstrap, help="percentile bootstrap of a value list")
    p.add_argument("--values", required=True)
    p.add_argument("--resamples", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--figure")

    p = add("density", cmd_density, help="first-fixation density map")
    p.add_argument("--fixations", required=True)
    p.add_argument("--image-id", type=int, required=True)
    p.add_argument("--width", type=int, required=True)
    p.add_argument("--height", type=int, required=True)
    p.add_argument("--deg-per-bin", type=float, default=1.0)
    p.add_argument("--min-dur", type=float, default=50.0)
    p.add_argument("--anticipatory", type=float, default=80.0,
                   help="minimum saccade latency in ms")
    p.add_argument("--no-filter", action="store_true")
    p.add_argument("--out", required=True)
    p.add_argument("--figure")

    p = add("kld", cmd_kld, help="stabilized KL divergence between two grids")
    p.add_argument("--fixation-map", required=True)
    p.add_argument("--salience-map", required=True)
    p.add_argument("--eps", type=float, default=1e-12)

    p = add("mass", cmd_mass, help="left/right salience mass of a stimulus grid")
    p.add_argument("--grid", required=True)
    p.add_argument("--left", type=_parse_rect, required=True, metavar="x0,y0,w,h")
    p.add_argument("--right", type=_parse_rect, required=True, metavar="x0,y0,w,h")

    p = add("contrast", cmd_contrast, help="RMS contrast map of a luminance grid")
    p.add_argument("--luminance", required=True)
    p.add_argument("--radius", type=int, default=5)
    p.add_argument("--out", required=True)
    p.add_argument("--figure")

    p = add("predict-profiles", cmd_predict_profiles,
            help="pRF-predicted response profiles from feature maps")
    p.add_argument("--maps", required=True)
    p.add_argument("--voxels", required=True)
    p.add_argument("--area")
    p.add_argument("--window-sigmas", type=float, default=2.0)
    p.add_argument("--out", required=True)

    p = add("identify", cmd_identify, help="identify images from measured responses")
    p.add_argument("--measured", required=True)
    p.add_argument("--voxels", required=True)
    p.add_argument("--maps", required=True)
    p.add_argument("--area")
    p.add_argument("--window-sigmas", type=float, default=2.0)
    p.add_argument("--out-prefix", required=True)
    p.add_argument("--figure")

    p = add("rsa", cmd_rsa, help="RSA between measured and predicted RDMs")
    p.add_argument("--measured", required=True)
    p.add_argument("--voxels", required=True)
    p.add_argument("--maps", required=True)
    p.add_argument("--area")
    p.add_argument("--window-sigmas", type=float, default=2.0)
    p.add_argument("--figure")

    p = add("rank", cmd_rank, help="rank images by global salience score")
    p.add_argument("--model", required=True)
    p.add_argument("--out")
    p.add_argument("--figure")

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    try:
        return args.func(args)
    except (io.DataFormatError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
