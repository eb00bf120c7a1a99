#!/usr/bin/env python3
"""
AccentCraft - few-shot accented speech data pipeline
Command-line entry point.
"""

import argparse
import logging
import sys

from dotenv import load_dotenv

from accentcraft.app import EDIT_MODES, Application
from accentcraft.config import APP_NAME, VERSION, load_config
from accentcraft.controllers.sweep_controller import check_disjointness
from accentcraft.errors import AccentCraftError
from accentcraft.models.manifest import Manifest
from accentcraft.models.plan_file import SWEEP_KINDS, VARIED_COMPONENTS, SweepSpec

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def _int_list(text):
    try:
        return tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from e


def _speaker_file(text):
    speaker, sep, path = text.partition("=")
    if not sep or not speaker or not path:
        raise argparse.ArgumentTypeError(f"expected SPEAKER=FILE, got {text!r}")
    return speaker, path


def build_parser():
    """Create the argument parser with one sub-parser per subcommand."""
    parser = argparse.ArgumentParser(prog="accentcraft", description=f"{APP_NAME} pipeline")
    parser.add_argument("--version", action="version", version=f"%(prog)s {VERSION}")
    parser.add_argument("--config", help="JSON configuration file")
    parser.add_argument("--seed", type=int, help="master seed (overrides the config)")
    parser.add_argument("--workers", type=int, help="worker pool size (overrides the config)")
    parser.add_argument("--verbose", "-v", action="store_true", help="debug logging")
    commands = parser.add_subparsers(dest="command", required=True)

    extract = commands.add_parser("extract", help="extract phoneme-level prosody from audio")
    extract.add_argument("wav_dir")
    extract.add_argument("alignment_dir")
    extract.add_argument("out_file")
    extract.add_argument("--failures", help="failure report path (default OUT_FILE.failures)")

    edit = commands.add_parser("edit", help="edit phoneme sequences")
    edit.add_argument("source_file")
    edit.add_argument("out_file")
    edit.add_argument("--mode", choices=EDIT_MODES, required=True)
    edit.add_argument("--scripts", help="edit script output file")
    edit.add_argument("--stats", help="JSON stats output file")
    edit.add_argument("--failures", help="failure report path")
    edit.add_argument("--rate", type=float, help="random mode: change rate")
    edit.add_argument("--match-llm", help="random mode: derive the rate from this edited file")
    edit.add_argument("--examples", help="llm mode: SOURCE/TARGET example file")
    edit.add_argument("-k", type=int, help="llm mode: number of examples (default all)")
    edit.add_argument("--accent", default="target",
                      help="llm mode: accent label; random mode: use its matched rate")
    edit.add_argument("--rule", action="append", default=[],
                      help="mock backend substitution rule FROM:TO (repeatable)")
    edit.add_argument("--cap", type=float, default=1.0, help="mock backend change-rate cap")
    edit.add_argument("--pcl", help="oracle mode: target phoneme file")

    evaluate = commands.add_parser("eval", help="score transcripts or accent embeddings")
    evaluate.add_argument("kind", choices=("wer", "accsim"))
    evaluate.add_argument("out_file")
    evaluate.add_argument("--condition", default="system")
    evaluate.add_argument("--ref", help="wer: reference transcripts")
    evaluate.add_argument("--hyp", action="append", default=[],
                          help="wer: hypothesis transcripts, one file per run (repeatable)")
    evaluate.add_argument("--manifest", help="wer: manifest giving utterance speakers")
    evaluate.add_argument("--synth", action="append", default=[],
                          help="accsim: synthetic embeddings, one file per run (repeatable)")
    evaluate.add_argument("--real", action="append", default=[], type=_speaker_file,
                          help="accsim: SPEAKER=FILE real embeddings (repeatable)")

    sweep = commands.add_parser("sweep", help="plan an experiment sweep and report scores")
    sweep.add_argument("--kind", choices=SWEEP_KINDS, required=True)
    sweep.add_argument("--manifest", required=True)
    sweep.add_argument("--out", required=True, help="output directory")
    sweep.add_argument("--component", choices=VARIED_COMPONENTS, default="icl")
    sweep.add_argument("--k-values", type=_int_list)
    sweep.add_argument("--n-values", type=_int_list)
    sweep.add_argument("--runs", type=int)
    sweep.add_argument("--synth-budget", type=int)
    sweep.add_argument("--accent")
    sweep.add_argument("--speaker")
    sweep.add_argument("--synth-condition", action="append", default=[],
                       help="n_scaling: synthetic-only condition to add (repeatable)")
    sweep.add_argument("--scores", help="score CSV to ingest and report")
    sweep.add_argument("--pdf", action="store_true", help="also write report.pdf")

    validate = commands.add_parser("validate-manifest", help="check a manifest for leakage")
    validate.add_argument("manifest")

    stats = commands.add_parser("stats", help="sample per-speaker prosody statistics")
    stats.add_argument("manifest")
    stats.add_argument("out_file")
    stats.add_argument("-m", type=int, default=15, help="utterances sampled per speaker")
    stats.add_argument("--role", default="reference_pool")
    return parser


def _batch_exit(batch, report_path):
    if batch.failures:
        batch.write(report_path)
        logger.warning("%d of %d items failed; see %s", len(batch.failures), batch.total, report_path)
    return 1 if batch.all_failed else 0


def cmd_extract(app, args):
    batch = app.run_extract(args.wav_dir, args.alignment_dir, args.out_file)
    return _batch_exit(batch, args.failures or args.out_file + ".failures")


def cmd_edit(app, args):
    _, batch = app.run_edit(
        args.source_file, args.mode, args.out_file, script_file=args.scripts,
        stats_file=args.stats, rate=args.rate, match_llm=args.match_llm,
        examples_file=args.examples, k=args.k, accent=args.accent, rules=args.rule,
        cap_rate=args.cap, pcl_file=args.pcl)
    return _batch_exit(batch, args.failures or args.out_file + ".failures")


def cmd_eval(app, args):
    if args.kind == "wer":
        if not args.ref or not args.hyp:
            raise AccentCraftError("wer needs --ref and at least one --hyp")
        manifest = Manifest.read(args.manifest) if args.manifest else None
        app.run_eval("wer", args.out_file, args.condition, reference=args.ref,
                     hypotheses=args.hyp, manifest=manifest)
    else:
        if not args.synth or not args.real:
            raise AccentCraftError("accsim needs --synth and at least one --real")
        app.run_eval("accsim", args.out_file, args.condition, synth=args.synth,
                     real=dict(args.real))
    return 0


def cmd_sweep(app, args):
    overrides = {"master_seed": app.seed, "accent": args.accent, "speaker": args.speaker}
    for name in ("n_values", "runs", "synth_budget"):
        if getattr(args, name) is not None:
            overrides[name] = getattr(args, name)
    if args.kind == "k_sweep" and args.k_values is None:
        spec = SweepSpec.for_component(args.component, **overrides)
    else:
        if args.k_values is not None:
            overrides["k_values"] = args.k_values
        spec = SweepSpec(kind=args.kind, varied_component=args.component, **overrides).validate()
    written = app.run_sweep(spec, Manifest.read(args.manifest), args.out, scores=args.scores,
                            pdf=args.pdf, synth_conditions=tuple(args.synth_condition))
    for name, path in written.items():
        logger.info("%s: %s", name, path)
    return 0


def cmd_validate_manifest(app, args):
    manifest = Manifest.read(args.manifest)
    violations = check_disjointness(manifest)
    for violation in violations:
        print(violation.describe())
    logger.info("%d entries, %d violations", len(manifest), len(violations))
    return 1 if violations else 0


def cmd_stats(app, args):
    _, batch = app.run_stats(Manifest.read(args.manifest), args.m, args.out_file, args.role)
    return _batch_exit(batch, args.out_file + ".failures")


COMMANDS = {
    "extract": cmd_extract,
    "edit": cmd_edit,
    "eval": cmd_eval,
    "sweep": cmd_sweep,
    "validate-manifest": cmd_validate_manifest,
    "stats": cmd_stats,
}


def main(argv=None):
    """Main entry point for the AccentCraft command line; returns the exit code."""
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format=LOG_FORMAT, force=True)
    load_dotenv()
    try:
        if args.workers is not None and args.workers < 1:
            raise AccentCraftError("--workers must be >= 1")
        app = Application(load_config(args.config), workers=args.workers, seed=args.seed)
        return COMMANDS[args.command](app, args)
    except (AccentCraftError, OSError) as e:
        logger.error("%s: %s", args.command, e)
        return 1


if __name__ == "__main__":
    sys.exit(main())
