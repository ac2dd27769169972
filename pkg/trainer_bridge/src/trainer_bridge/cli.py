"""trainer-bridge command line: train, transcribe, init-toy-model."""

from __future__ import annotations

import argparse
import logging
import sys

from trainer_bridge.data import BridgeDataError
from trainer_bridge.spec import TrainSpec, load_spec


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="trainer-bridge",
        description="Fine-tune Whisper on a workbench manifest and transcribe test sets.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="fine-tune on a merged training manifest")
    p_train.add_argument("--manifest", required=True)
    p_train.add_argument("--spec", default=None, help="YAML TrainSpec; defaults apply if omitted")
    p_train.add_argument("--out-dir", required=True)

    p_tr = sub.add_parser("transcribe", help="decode a test manifest with a checkpoint")
    p_tr.add_argument("--checkpoint", required=True)
    p_tr.add_argument("--manifest", required=True)
    p_tr.add_argument("--out", required=True)
    p_tr.add_argument("--max-new-tokens", type=int, default=48)

    p_toy = sub.add_parser(
        "init-toy-model", help="write a miniature offline Whisper checkpoint"
    )
    p_toy.add_argument("--out-dir", required=True)
    p_toy.add_argument("--seed", type=int, default=0)

    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )

    try:
        if args.command == "train":
            from trainer_bridge.train import train

            spec = load_spec(args.spec) if args.spec else TrainSpec()
            checkpoint = train(args.manifest, spec, args.out_dir)
            print(f"checkpoint: {checkpoint}")
            return 0
        if args.command == "transcribe":
            from trainer_bridge.transcribe import transcribe

            skipped = transcribe(
                args.checkpoint, args.manifest, args.out, max_new_tokens=args.max_new_tokens
            )
            print(f"hypotheses: {args.out}")
            if skipped:
                print(f"skipped {len(skipped)} utterance(s): {skipped}", file=sys.stderr)
                return 1
            return 0
        if args.command == "init-toy-model":
            from trainer_bridge.toymodel import build_toy_checkpoint

            path = build_toy_checkpoint(args.out_dir, seed=args.seed)
            print(f"toy checkpoint: {path}")
            return 0
    except (BridgeDataError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 2


if __name__ == "__main__":
    raise SystemExit(main())
