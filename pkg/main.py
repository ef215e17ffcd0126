import argparse
import sys
from typing import List, Optional

from config import Config
from src.cli.commands import COMMANDS, EXIT_FAILURES, EXIT_USAGE
from src.utils.exceptions import ConfigError, FrontEndError, SplitError, UsageError
from src.utils.logger import setup_logger

logger = setup_logger(__name__)


def _add_config(parser: argparse.ArgumentParser):
    parser.add_argument("--config", help="Run config YAML (a config_snapshot.yaml works too)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Multilingual pronunciation front-end: synthetic data, splits, training and evaluation")
    sub = parser.add_subparsers(dest="command", required=True)

    synth = sub.add_parser("synth", help="Generate synthetic locale corpora from language specs")
    _add_config(synth)
    synth.add_argument("--spec", nargs="+", help="Language spec YAML files (default: every shipped spec)")
    synth.add_argument("--words", type=int, help="Lexicon size per locale (default: the spec's)")
    synth.add_argument("--sentences", type=int, help="Sentence count per locale (default: the spec's)")
    synth.add_argument("--seed", type=int, help=f"Generation seed (default: {Config.DEFAULT_SEED})")
    synth.add_argument("--jobs", type=int, help="Locales generated in parallel")
    synth.add_argument("--out", help="Output directory")

    split = sub.add_parser("split", help="Lemma-disjoint word splits and random sentence splits")
    _add_config(split)
    split.add_argument("--corpus", nargs="+", help="Corpus files (word and sentence entries)")
    split.add_argument("--freq", help="Word frequency file (word<TAB>count)")
    split.add_argument("--lemmas", help="Lemma file (word<TAB>lemma) for words without a corpus lemma")
    split.add_argument("--ratios", help="Word train,dev,test ratios (default: 0.85,0.05,0.10)")
    split.add_argument("--percentile", type=float, help="Frequency cap percentile for test sampling")
    split.add_argument("--sentence-test-fraction", type=float, help="Sentence test fraction in [0.01, 0.10]")
    split.add_argument("--sentence-dev-fraction", type=float, help="Sentence dev fraction in [0, 0.10]")
    split.add_argument("--seed", type=int, help="Split seed")
    split.add_argument("--out", help="Output directory")

    train = sub.add_parser("train", help="Train a pronunciation model")
    _add_config(train)
    train.add_argument("--train", nargs="+", help="Training corpus files")
    train.add_argument("--dev", nargs="+", help="Dev corpus files for model selection")
    train.add_argument("--locale", help="Restrict to one locale (monolingual baseline)")
    train.add_argument("--resume", help="Checkpoint to resume from")
    train.add_argument("--seed", type=int, help="Model and data-order seed")
    train.add_argument("--out", help="Run directory")
    train.add_argument("--layers", type=int)
    train.add_argument("--d-model", type=int)
    train.add_argument("--heads", type=int)
    train.add_argument("--ffn-dim", type=int)
    train.add_argument("--dropout", type=float)
    train.add_argument("--max-src-len", type=int)
    train.add_argument("--max-tgt-len", type=int)
    train.add_argument("--label-smoothing", type=float)
    train.add_argument("--max-steps", type=int)
    train.add_argument("--warmup-steps", type=int)
    train.add_argument("--tokens-per-batch", type=int)
    train.add_argument("--checkpoint-every", type=int)
    train.add_argument("--dev-eval-every", type=int)
    train.add_argument("--log-every", type=int)
    train.add_argument("--lr-factor", type=float)
    train.add_argument("--prefetch", type=int)

    predict = sub.add_parser("predict", help="Predict pronunciations for locale<TAB>text lines")
    _add_config(predict)
    predict.add_argument("--checkpoint", help="Model checkpoint")
    predict.add_argument("--input", help="Input file (locale<TAB>text or corpus lines)")
    predict.add_argument("--beam", type=int, help="Beam width (1 is greedy)")
    predict.add_argument("--max-len", type=int, help="Maximum generated tokens")
    predict.add_argument("--out", help="Predictions file")

    evaluate = sub.add_parser("eval", help="Score predictions against a gold corpus")
    _add_config(evaluate)
    evaluate.add_argument("--gold", help="Gold corpus file")
    evaluate.add_argument("--predictions", help="Predictions file from the predict command")
    evaluate.add_argument("--test-set", help="Test set name in the report (default: gold file stem)")
    evaluate.add_argument("--assert", dest="asserts", action="append", help="Gate such as per<=0.02 (repeatable)")
    evaluate.add_argument("--out", help="Report file (JSON lines)")

    compare = sub.add_parser("compare", help="Join two sets of reports with deltas")
    _add_config(compare)
    compare.add_argument("--a", nargs="+", help="Baseline report files")
    compare.add_argument("--b", nargs="+", help="Candidate report files")
    compare.add_argument("--label-a", help="Column label for the baseline")
    compare.add_argument("--label-b", help="Column label for the candidate")
    compare.add_argument("--out", help="Comparison table (TSV)")

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ConfigError, SplitError) as e:
        logger.error(f"{args.command}: {e}")
        return EXIT_USAGE
    except FileNotFoundError as e:
        logger.error(f"{args.command}: {e}")
        return EXIT_USAGE
    except FrontEndError as e:
        logger.error(f"{args.command} failed: {e}")
        return EXIT_FAILURES
    except Exception:
        logger.exception(f"{args.command} failed with an unexpected error")
        return EXIT_FAILURES


if __name__ == "__main__":
    sys.exit(main())
