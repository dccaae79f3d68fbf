import argparse
import sys

from .exporter import WEIGHTINGS, ExportError, export


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="trace-exporter",
        description="Run a voice-activity-projection checkpoint over stereo "
                    "WAVs and write binary label-distribution traces.",
    )
    parser.add_argument("wavs", nargs="+", help="stereo 16 kHz WAV files")
    parser.add_argument("--checkpoint", required=True, help="TorchScript model file")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument(
        "--weighting", choices=WEIGHTINGS, default="duration",
        help="bin weighting used for the sidecar p_now/p_fut",
    )
    args = parser.parse_args(argv)
    try:
        manifest = export(args.wavs, args.checkpoint, args.out, weighting=args.weighting)
    except ExportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"exported {len(manifest.files)} traces -> {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
