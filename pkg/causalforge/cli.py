"""
Command-line interface: `causalforge <command> [options]`.

Commands
--------
generate   build, split and write a corpus with its stats and manifest
perturb    write a paraphrased or refactored copy of a corpus file
stats      print corpus statistics
pmi        rank n-grams by PMI difference between labels
score      score a prediction file or a random baseline against gold records
pc-check   run only the PC-vs-CPDAG equivalence criterion
check      run the whole acceptance suite
"""

import argparse
import hashlib
import json
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

from causalforge import __version__
from causalforge.checks import check_pc_equivalence, run_checks, summarize
from causalforge.config import FORMATS, PERTURBATION_KINDS, TEMPLATE_STYLES, RunConfig, load_config
from causalforge.dataset import (
    SPLIT_GENERATOR,
    CorpusBuilder,
    SampleRecord,
    read_records,
    split,
    stats,
    write_records,
    write_stats,
)
from causalforge.evaluation import (
    BASELINES,
    TEXT_FIELDS,
    baseline,
    pmi_table,
    read_predictions,
    score,
    score_by_relation,
    write_metrics,
    write_pmi_tsv,
)
from causalforge.verbalizer import load_templates, paraphrase, refactor_variables, template_set

PERTURBERS: Dict[str, Callable[[SampleRecord], SampleRecord]] = {
    "paraphrase": paraphrase,
    "refactor": refactor_variables,
}


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with path.open("rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def cmd_generate(config: RunConfig, verbose: int = 0) -> int:
    """
    Build, split and write the corpus described by `config`.

    Writes corpus.<format> for each format, test.<kind>.jsonl for each
    perturbation, stats.json and manifest.json into `config.out_dir`.
    """
    config.validate()
    templates = (
        load_templates(config.template_file, config.template_style)
        if config.template_file is not None
        else template_set(config.template_style)
    )
    builder = CorpusBuilder(max_nodes=config.max_nodes, templates=templates, jobs=config.jobs, verbose=verbose)
    records = split(builder.build(config.n_min, config.n_max), seed=config.seed)

    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: List[Path] = []
    for fmt in config.formats:
        path = out_dir / f"corpus.{fmt}"
        write_records(records, path, fmt)
        if len(read_records(path, fmt)) != len(records):
            raise ValueError(f"{path} does not read back {len(records)} records.")
        written.append(path)

    test = [r for r in records if r.split == "test"]
    for kind in config.perturbations:
        path = out_dir / f"test.{kind}.jsonl"
        write_records([PERTURBERS[kind](r) for r in test], path)
        written.append(path)

    corpus_stats = stats(records)
    stats_path = out_dir / "stats.json"
    write_stats(corpus_stats, stats_path)
    written.append(stats_path)

    manifest = {
        "tool": "causal-forge",
        "version": __version__,
        "config": config.to_dict(),
        "seed": config.seed,
        "split_generator": SPLIT_GENERATOR,
        "records": len(records),
        "files": {p.name: _sha256(p) for p in written},
    }
    with (out_dir / "manifest.json").open("w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")

    if verbose > 0:
        print(f"cmd_generate(): wrote {len(records)} records to {out_dir}")
    return 0


def cmd_perturb(in_path: Path, kind: str, out_path: Optional[Path] = None, only_split: Optional[str] = None) -> int:
    """Write a perturbed copy of a corpus file; labels are unchanged."""
    if kind not in PERTURBERS:
        raise ValueError(f"Unknown perturbation '{kind}'; expected one of {', '.join(PERTURBERS)}.")
    records = read_records(in_path)
    if only_split is not None:
        records = [r for r in records if r.split == only_split]
    if out_path is None:
        out_path = in_path.with_name(f"{in_path.stem}.{kind}.jsonl")
    write_records([PERTURBERS[kind](r) for r in records], out_path)
    return 0


def cmd_stats(in_path: Path, out_path: Optional[Path] = None) -> int:
    corpus_stats = stats(read_records(in_path))
    if out_path is not None:
        write_stats(corpus_stats, out_path)
    print(json.dumps(corpus_stats.to_dict(), indent=2))
    return 0


def cmd_pmi(
    in_path: Path,
    out_path: Optional[Path] = None,
    max_len: int = 4,
    min_count: int = 1,
    top: int = 10,
    fields: Sequence[str] = TEXT_FIELDS,
) -> int:
    rows = pmi_table(read_records(in_path), max_len=max_len, min_count=min_count, fields=fields)
    if out_path is not None:
        write_pmi_tsv(rows, out_path)
    print(f"{'n-gram':<40}{'pmi_neg':>10}{'pmi_pos':>10}{'|diff|':>10}")
    for row in rows[:top]:
        print(f"{row.text:<40}{row.pmi_neg:>10.3f}{row.pmi_pos:>10.3f}{row.abs_diff:>10.3f}")
    return 0


def cmd_score(
    gold_path: Path,
    predictions_path: Optional[Path] = None,
    baseline_kind: Optional[str] = None,
    seed: int = 0,
    only_split: Optional[str] = "test",
    by_relation: bool = False,
    out_path: Optional[Path] = None,
) -> int:
    """Score predictions (or a baseline) on the gold records of one split."""
    records = read_records(gold_path)
    gold = [r for r in records if only_split is None or r.split == only_split]
    if not gold:
        raise ValueError(f"No gold records in split '{only_split}' of {gold_path}.")
    if (predictions_path is None) == (baseline_kind is None):
        raise ValueError("Pass exactly one of --predictions and --baseline.")
    if predictions_path is not None:
        predictions = read_predictions(predictions_path)
    else:
        dev = [r for r in records if r.split == "dev"]
        rate = sum(r.label for r in dev) / len(dev) if dev else None
        predictions = baseline(baseline_kind, gold, seed=seed, positive_rate=rate)

    metrics = score(predictions, gold)
    if out_path is not None:
        write_metrics(metrics, out_path)
    print(json.dumps(metrics.to_dict(), indent=2))
    if by_relation:
        for relation, m in score_by_relation(predictions, gold).items():
            print(f"{relation.value:<16} F1 {m.f1:6.2f}  P {m.precision:6.2f}  R {m.recall:6.2f}  Acc {m.accuracy:6.2f}")
    return 0


def cmd_pc_check(config: RunConfig) -> int:
    builder = CorpusBuilder(max_nodes=config.max_nodes)
    result = check_pc_equivalence(builder, config.n_max, seed=config.seed)
    print(f"[{result.status}] {result.name} ({result.detail})")
    return 0 if result.passed else 1


def cmd_check(config: RunConfig, verbose: int = 0) -> int:
    """Run the acceptance suite; the exit status is 1 if any hard criterion fails."""
    results = run_checks(config, verbose=verbose)
    for r in results:
        print(f"[{r.status}] {r.name} ({r.detail})")
    passed, failed, warned = summarize(results)
    print(f"{passed} passed, {failed} failed, {warned} warnings")
    return 1 if failed else 0


def _add_run_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="TOML run configuration")
    parser.add_argument("--n-min", type=int)
    parser.add_argument("--n-max", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--jobs", type=int)
    parser.add_argument("--max-nodes", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="causalforge", description="Causal inference corpus generator and checker.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--verbose", "-v", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="build and write a corpus")
    _add_run_options(p)
    p.add_argument("--out", type=Path, help="output directory")
    p.add_argument("--format", action="append", choices=FORMATS, dest="formats")
    p.add_argument("--perturb", action="append", choices=PERTURBATION_KINDS, dest="perturbations")
    p.add_argument("--template-style", choices=TEMPLATE_STYLES)
    p.add_argument("--templates", type=Path, dest="template_file", help="template override file")

    p = sub.add_parser("perturb", help="write a perturbed copy of a corpus")
    p.add_argument("--in", type=Path, required=True, dest="in_path")
    p.add_argument("--kind", required=True, choices=sorted(PERTURBERS))
    p.add_argument("--out", type=Path)
    p.add_argument("--split", choices=("train", "dev", "test"))

    p = sub.add_parser("stats", help="print corpus statistics")
    p.add_argument("--in", type=Path, required=True, dest="in_path")
    p.add_argument("--out", type=Path)

    p = sub.add_parser("pmi", help="n-gram/label PMI analysis")
    p.add_argument("--in", type=Path, required=True, dest="in_path")
    p.add_argument("--out", type=Path)
    p.add_argument("--max-len", type=int, default=4)
    p.add_argument("--min-count", type=int, default=1)
    p.add_argument("--top", type=int, default=10)
    p.add_argument("--field", action="append", choices=TEXT_FIELDS, dest="fields")

    p = sub.add_parser("score", help="score predictions or a baseline")
    p.add_argument("--gold", type=Path, required=True)
    p.add_argument("--predictions", type=Path)
    p.add_argument("--baseline", choices=BASELINES)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--split", default="test", help="gold split to score ('all' for every record)")
    p.add_argument("--by-relation", action="store_true")
    p.add_argument("--out", type=Path)

    p = sub.add_parser("pc-check", help="check PC against the CPDAG construction")
    _add_run_options(p)

    p = sub.add_parser("check", help="run the acceptance suite")
    _add_run_options(p)
    return parser


def _run_config(args: argparse.Namespace, **extra) -> RunConfig:
    return load_config(
        args.config,
        n_min=args.n_min,
        n_max=args.n_max,
        seed=args.seed,
        jobs=args.jobs,
        max_nodes=args.max_nodes,
        **extra,
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "generate":
            config = _run_config(
                args,
                out_dir=args.out,
                formats=args.formats,
                perturbations=args.perturbations,
                template_style=args.template_style,
                template_file=args.template_file,
            )
            return cmd_generate(config, verbose=args.verbose)
        if args.command == "perturb":
            return cmd_perturb(args.in_path, args.kind, args.out, args.split)
        if args.command == "stats":
            return cmd_stats(args.in_path, args.out)
        if args.command == "pmi":
            return cmd_pmi(args.in_path, args.out, args.max_len, args.min_count, args.top, args.fields or TEXT_FIELDS)
        if args.command == "score":
            only_split = None if args.split == "all" else args.split
            return cmd_score(
                args.gold, args.predictions, args.baseline, args.seed, only_split, args.by_relation, args.out
            )
        if args.command == "pc-check":
            return cmd_pc_check(_run_config(args))
        return cmd_check(_run_config(args), verbose=args.verbose)
    except (ValueError, OSError) as e:
        print(f"causalforge: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
