"""Entry point: serve the propagator protocol over stdin/stdout.

Live mode drives a SAM2 video predictor; replay mode answers from
recorded fixtures and needs neither GPU nor checkpoint:

    sam2-backend --frames FRAMES_DIR --checkpoint CKPT [--device cuda]
    sam2-backend --replay FIXTURES.jsonl
"""

from __future__ import annotations

import argparse
import sys

from .protocol import serve_loop


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="sam2-backend", description=__doc__)
    parser.add_argument("--frames", help="directory of video frames (live mode)")
    parser.add_argument("--checkpoint", help="SAM2 checkpoint path (live mode)")
    parser.add_argument("--model-cfg", default="configs/sam2.1/sam2.1_hiera_b+.yaml")
    parser.add_argument("--device", default="cuda")
    parser.add_argument("--replay", help="recorded fixtures JSONL (replay mode)")
    args = parser.parse_args(argv)

    if args.replay:
        if args.frames or args.checkpoint:
            parser.error("--replay excludes --frames/--checkpoint")
        from .replay import ReplaySession

        session = ReplaySession(args.replay)
    else:
        if not (args.frames and args.checkpoint):
            parser.error("live mode needs --frames and --checkpoint (or use --replay)")
        from .model import Sam2Session

        session = Sam2Session(args.frames, args.checkpoint, args.model_cfg, args.device)

    serve_loop(session)
    return 0


if __name__ == "__main__":
    sys.exit(main())
