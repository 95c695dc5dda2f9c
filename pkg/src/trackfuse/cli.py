"""Command-line surface.

Subcommands: ``run`` (track a video), ``simulate`` (synthetic benchmark),
``eval`` (score predictions), ``overlay`` (render boundaries), ``serve``
(synthetic stdio backend), ``conformance`` (check a backend command).
Exit codes: 0 success, 1 usage, 2 input format, 3 backend/protocol,
4 internal.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__, io, schemas
from .errors import (
    InputFormatError,
    PropagationError,
    ProtocolError,
    TrackfuseError,
    UsageError,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_BACKEND = 3
EXIT_INTERNAL = 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="trackfuse", description=__doc__)
    parser.add_argument("--version", action="version", version=f"trackfuse {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="track one video from per-frame detections")
    p_run.add_argument("--detections", required=True, help="detections JSONL")
    p_run.add_argument("--warps", help="per-frame-pair warps JSONL (synthetic propagator)")
    p_run.add_argument("--backend", help="backend command speaking the stdio protocol")
    p_run.add_argument("--config", help="engine config JSON")
    p_run.add_argument("--gt", help="ground-truth JSONL; enables the metrics report")
    p_run.add_argument("--frames", help="frame images directory (recorded only)")
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--all-frames", action="store_true",
                       help="score all frames instead of positives only")

    p_sim = sub.add_parser("simulate", help="generate a synthetic video benchmark")
    p_sim.add_argument("--scenario", help="scenario spec JSON")
    p_sim.add_argument("--noise", help="detector noise spec JSON")
    p_sim.add_argument("--demo", action="store_true", help="use the bundled demo scenario")
    p_sim.add_argument("--out", required=True, help="output directory")

    p_eval = sub.add_parser("eval", help="score predictions against ground truth")
    p_eval.add_argument("--pred", required=True)
    p_eval.add_argument("--gt", required=True)
    p_eval.add_argument("--warps", help="warps JSONL for temporal consistency")
    p_eval.add_argument("--all-frames", action="store_true")
    p_eval.add_argument("--out", help="write the report here as well")

    p_ovl = sub.add_parser("overlay", help="draw predicted boundaries onto frames")
    p_ovl.add_argument("--frames", required=True)
    p_ovl.add_argument("--pred", required=True)
    p_ovl.add_argument("--out", required=True)

    p_srv = sub.add_parser("serve", help="serve the synthetic propagator over stdio")
    p_srv.add_argument("--warps", required=True)

    p_conf = sub.add_parser("conformance", help="run the propagator conformance checks")
    p_conf.add_argument("--backend", required=True, help="backend command to check")
    p_conf.add_argument("--timeout-ms", type=int, default=None)

    return parser


def _cmd_run(args) -> int:
    if (args.warps is None) == (args.backend is None):
        raise UsageError("exactly one of --warps / --backend is required")
    from .pipeline import Config, run_video

    detections = io.load_frames_jsonl(args.detections)
    config = io.load_config(args.config) if args.config else Config()
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    warps = None
    if args.warps is not None:
        from .warp import SyntheticWarpPropagator

        warps = io.load_warps_jsonl(args.warps)
        propagator = SyntheticWarpPropagator(warps)
        result = run_video(len(detections), detections, propagator, config, seed=args.seed)
    else:
        from .client import PropagatorClient

        with PropagatorClient(args.backend) as propagator:
            result = run_video(len(detections), detections, propagator, config, seed=args.seed)

    io.dump_frames_jsonl(result.frames, out_dir / "results.jsonl")
    io.dump_json(io.run_metadata(result, backend=args.backend), out_dir / "run.json")

    if args.gt:
        gts = io.load_frames_jsonl(args.gt)
        report = _metrics_report(result.frames, gts, warps, not args.all_frames,
                                 config=config.to_json())
        io.dump_json(report, out_dir / "metrics.json")
    return EXIT_OK


def _metrics_report(preds, gts, warps, positives_only, config=None) -> dict:
    from .metrics import detection_scores, video_seg_scores

    if len(preds) != len(gts):
        raise InputFormatError("<pred>", None,
                               f"pred has {len(preds)} frames but gt has {len(gts)}")
    seg = video_seg_scores(preds, gts, warps, positives_only=positives_only)
    det = detection_scores(preds, gts)
    report = {
        "version": schemas.SCHEMA_VERSION,
        "mode": "positives_only" if positives_only else "all_frames",
        "frames": len(preds),
        "seg": seg.to_json(),
        "det": det.to_json(),
    }
    if config is not None:
        report["config"] = config
    schemas.validate(report, schemas.METRICS_REPORT_SCHEMA)
    return report


def _cmd_simulate(args) -> int:
    from .simulate import NoiseSpec, corrupt, demo_noise, demo_scenario, generate_ground_truth

    if args.demo:
        scenario = demo_scenario()
        noise = io.load_noise(args.noise) if args.noise else demo_noise()
    else:
        if not args.scenario:
            raise UsageError("either --scenario or --demo is required")
        scenario = io.load_scenario(args.scenario)
        noise = io.load_noise(args.noise) if args.noise else NoiseSpec()

    gt, warps = generate_ground_truth(scenario)
    detections = corrupt(gt, noise, scenario=scenario)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    io.dump_frames_jsonl(gt, out_dir / "ground_truth.jsonl")
    io.dump_frames_jsonl(detections, out_dir / "detections.jsonl")
    io.dump_warps_jsonl(warps, out_dir / "warps.jsonl")
    return EXIT_OK


def _cmd_eval(args) -> int:
    import json

    preds = io.load_frames_jsonl(args.pred)
    gts = io.load_frames_jsonl(args.gt)
    warps = io.load_warps_jsonl(args.warps) if args.warps else None
    report = _metrics_report(preds, gts, warps, not args.all_frames)
    text = json.dumps(report, indent=2, sort_keys=True)
    print(text)
    if args.out:
        Path(args.out).write_text(text + "\n")
    return EXIT_OK


def _cmd_overlay(args) -> int:
    from .overlay import render_overlays

    preds = io.load_frames_jsonl(args.pred)
    render_overlays(args.frames, preds, args.out)
    return EXIT_OK


def _cmd_serve(args) -> int:
    from .server import serve

    serve(io.load_warps_jsonl(args.warps))
    return EXIT_OK


def _cmd_conformance(args) -> int:
    from .conformance import run_backend_checks

    results = run_backend_checks(args.backend, args.timeout_ms)
    ok = True
    for r in results:
        status = "PASS" if r.ok else "FAIL"
        detail = f"  ({r.detail})" if r.detail else ""
        print(f"{status} {r.name}{detail}")
        ok = ok and r.ok
    return EXIT_OK if ok else EXIT_BACKEND


_COMMANDS = {
    "run": _cmd_run,
    "simulate": _cmd_simulate,
    "eval": _cmd_eval,
    "overlay": _cmd_overlay,
    "serve": _cmd_serve,
    "conformance": _cmd_conformance,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InputFormatError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ProtocolError as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except PropagationError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except TrackfuseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except BrokenPipeError:
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
