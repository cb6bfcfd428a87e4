"""Command-line interface.

Subcommands cover the whole pipeline at toy scale: synthesize camera
paths, export per-pixel ray maps, visualize epipolar sampling, run the
toy sampler, score estimated trajectories, filter annotation manifests,
and benchmark the attention kernels.

Exit codes: 0 on success, 1 on processing errors, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import _kernels
from .bench import benchmark_eca
from .camera import (DegenerateTrajectoryError, TrajectoryFormatError,
                     read_trajectory, write_trajectory)
from .curation import CurationPolicy, curate, read_manifest
from .diffusion import GaussianDenoiser, NoiseSchedule, guidance_schedule, sample
from .epipolar import build_epipolar_geometry
from .metrics import pose_errors
from .plucker import plucker_embed, write_plucker
from .presets import PRESET_KINDS, TrajectoryPreset, default_intrinsics, generate_preset


def _cmd_traj(args: argparse.Namespace) -> int:
    preset = TrajectoryPreset(
        kind=args.kind,
        n=args.n,
        magnitude=args.magnitude,
        intrinsics=default_intrinsics(args.width, args.height),
    )
    traj = generate_preset(preset)
    if float(np.linalg.norm(traj.centers(), axis=1).max()) < 1e-12:
        print(f"warning: {args.kind} path never moves the camera center; "
              f"writing it unnormalized", file=sys.stderr)
    write_trajectory(traj, args.out)
    print(f"wrote {traj.n} poses to {args.out}")
    return 0


def _cmd_embed(args: argparse.Namespace) -> int:
    traj = read_trajectory(args.traj)
    if not 1 <= args.frame <= traj.n:
        raise ValueError(f"frame must be in [1, {traj.n}], got {args.frame}")
    pose = traj.poses[args.frame - 1]
    pmap = plucker_embed(pose, traj.intrinsics, args.height, args.width)
    write_plucker(pmap, args.out)
    print(f"wrote {pmap.h}x{pmap.w} ray map for frame {args.frame} to {args.out}")
    return 0


def _checkerboard(h: int, w: int, tile: int = 8) -> np.ndarray:
    yy, xx = np.mgrid[0:h, 0:w]
    board = ((yy // tile + xx // tile) % 2) == 0
    img = np.where(board[..., None], 200, 140).astype(np.uint8)
    return np.repeat(img, 3, axis=2)


def _write_ppm(img: np.ndarray, path: str | Path) -> None:
    h, w, _ = img.shape
    with open(path, "wb") as fh:
        fh.write(b"P6\n%d %d\n255\n" % (w, h))
        fh.write(img.astype(np.uint8).tobytes())


_LINE_COLORS = [
    (220, 50, 50), (50, 160, 220), (60, 190, 90), (230, 170, 40),
    (170, 80, 200), (240, 110, 180), (90, 210, 200), (250, 240, 80),
]


def _cmd_epiviz(args: argparse.Namespace) -> int:
    traj = read_trajectory(args.traj)
    geo = build_epipolar_geometry(traj, args.frame, args.height, args.width,
                                  args.l)
    img = _checkerboard(args.height, args.width)
    if geo.degenerate:
        print("note: pure-rotation pair; showing homography points instead "
              "of epipolar lines", file=sys.stderr)
    # a small grid of query pixels, one color each
    qy = np.linspace(0, args.height - 1, 3).round().astype(int)
    qx = np.linspace(0, args.width - 1, 3).round().astype(int)
    drawn = 0
    for ci, (y, x) in enumerate((y, x) for y in qy for x in qx):
        row = geo.points[y * args.width + x]
        ok = geo.valid[y * args.width + x]
        color = _LINE_COLORS[ci % len(_LINE_COLORS)]
        for (px, py), good in zip(row, ok):
            if not good:
                continue
            ix, iy = int(round(px)), int(round(py))
            if 0 <= ix < args.width and 0 <= iy < args.height:
                img[iy, ix] = color
                drawn += 1
        # mark the query pixel with a dark cross
        for dy, dx in ((0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)):
            yy, xx = y + dy, x + dx
            if 0 <= yy < args.height and 0 <= xx < args.width:
                img[yy, xx] = (20, 20, 20)
    _write_ppm(img, args.out)
    print(f"wrote {args.width}x{args.height} viz ({drawn} samples) to {args.out}")
    return 0


def _cmd_sample_toy(args: argparse.Namespace) -> int:
    schedule = NoiseSchedule.edm(steps=args.steps)
    guidance = guidance_schedule(args.frames, start=args.omega_start,
                                 end=args.omega_end)
    denoiser = GaussianDenoiser(std=args.std)
    cond = np.full((args.frames, args.dim), args.cond_mean)
    x = sample(denoiser, schedule, (args.frames, args.dim), cond=cond,
               guidance=guidance, seed=args.seed)
    stats = {
        "shape": list(x.shape),
        "steps": args.steps,
        "omega": [float(o) for o in guidance.omega],
        "mean": float(x.mean()),
        "variance": float(x.var()),
        "per_frame_mean": [float(m) for m in x.mean(axis=1)],
    }
    print(json.dumps(stats))
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    out_traj = read_trajectory(args.pred)
    ref_traj = read_trajectory(args.gt)
    errs = pose_errors(out_traj, ref_traj)
    if args.per_frame:
        lines = ["frame\tr_err\tt_err"]
        lines += [f"{i + 1}\t{r:.12g}\t{t:.12g}"
                  for i, (r, t) in enumerate(zip(errs.per_frame_r, errs.per_frame_t))]
        Path(args.per_frame).write_text("\n".join(lines) + "\n")
    print(f"r_err={errs.r_err:.12g} t_err={errs.t_err:.12g}")
    return 0


def _cmd_curate(args: argparse.Namespace) -> int:
    policy = CurationPolicy(displacement_min=args.min_displacement,
                            point_count_min=args.min_points)
    annotations = read_manifest(args.manifest)
    raw = {}
    for line in Path(args.manifest).read_text().splitlines():
        line = line.strip()
        if line:
            doc = json.loads(line)
            raw[str(doc["video_id"])] = doc
    kept, rejected = curate(annotations, policy)
    with open(args.out, "w") as fh:
        for ann in kept:
            fh.write(json.dumps(raw[ann.video_id]) + "\n")
    if args.report:
        with open(args.report, "w") as fh:
            for rej in rejected:
                fh.write(json.dumps({"video_id": rej.video_id,
                                     "reasons": list(rej.reasons)}) + "\n")
    print(f"kept {len(kept)} of {len(annotations)} videos "
          f"({len(rejected)} rejected)")
    return 0


def _cmd_bench_eca(args: argparse.Namespace) -> int:
    rows = benchmark_eca(args.height, args.width, args.l, args.d,
                         iters=args.iters, seed=args.seed)
    cols = ["backend", "h", "w", "l", "d", "eca_score_ops", "dense_score_ops",
            "ratio", "eca_time_s", "dense_time_s"]
    print("\t".join(cols))
    for r in rows:
        print("\t".join([
            r.backend, str(r.h), str(r.w), str(r.l), str(r.d),
            str(r.eca_score_ops), str(r.dense_score_ops),
            f"{r.ratio:.6g}", f"{r.eca_time:.6g}", f"{r.dense_time:.6g}",
        ]))
    return 0


def _size_args(p: argparse.ArgumentParser, default: int = 256) -> None:
    p.add_argument("--width", "--w", type=int, default=default,
                   dest="width", help="grid width in pixels")
    p.add_argument("--height", "--h", type=int, default=default,
                   dest="height", help="grid height in pixels")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="epirays",
        description="camera-ray conditioning and epipolar attention toolkit",
    )
    parser.add_argument("--version", action="version", version="epirays 0.1.0")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("traj", help="synthesize a preset camera path")
    p.add_argument("--kind", choices=PRESET_KINDS, required=True)
    p.add_argument("--n", type=int, default=14, help="number of frames")
    p.add_argument("--magnitude", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    _size_args(p)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_traj)

    p = sub.add_parser("embed", help="export a frame's ray map")
    p.add_argument("--traj", required=True)
    p.add_argument("--frame", type=int, default=1, help="1-based frame index")
    _size_args(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_embed)

    p = sub.add_parser("epiviz", help="render sampled epipolar lines to PPM")
    p.add_argument("--traj", required=True)
    p.add_argument("--frame", type=int, default=2, help="1-based target frame")
    _size_args(p)
    p.add_argument("--l", type=int, default=None,
                   help="samples per line (default: max(h, w))")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_epiviz)

    p = sub.add_parser("sample-toy", help="run the toy guided sampler")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--steps", type=int, default=25)
    p.add_argument("--frames", type=int, default=14)
    p.add_argument("--dim", type=int, default=8)
    p.add_argument("--std", type=float, default=1.0,
                   help="toy data standard deviation")
    p.add_argument("--cond-mean", type=float, default=1.0,
                   help="conditional mean of the toy data")
    p.add_argument("--omega-start", type=float, default=1.0)
    p.add_argument("--omega-end", type=float, default=3.0)
    p.set_defaults(fn=_cmd_sample_toy)

    p = sub.add_parser("eval", help="score a trajectory against a reference")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--per-frame", default=None,
                   help="optional TSV of per-frame errors")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=_cmd_eval)

    p = sub.add_parser("curate", help="filter an annotation manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--report", default=None,
                   help="optional JSONL of rejections")
    p.add_argument("--min-displacement", type=float,
                   default=CurationPolicy.displacement_min)
    p.add_argument("--min-points", type=int,
                   default=CurationPolicy.point_count_min)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=_cmd_curate)

    p = sub.add_parser("bench-eca", help="time the attention backends")
    _size_args(p, default=32)
    p.add_argument("--l", type=int, default=32)
    p.add_argument("--d", type=int, default=16)
    p.add_argument("--iters", type=int, default=30)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=_cmd_bench_eca)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "l", 1) is not None and getattr(args, "l", 1) < 1:
        parser.error("--l must be positive")
    try:
        return args.fn(args)
    except (TrajectoryFormatError, DegenerateTrajectoryError, ValueError,
            OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
