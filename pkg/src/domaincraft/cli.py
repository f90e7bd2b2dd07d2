"""``domaincraft`` command-line interface.

Every failure is reported as one JSON line on stderr
(``{"error": <kind>, "message": <text>}``) with a nonzero exit code.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from pathlib import Path
from typing import Sequence

from domaincraft import DomaincraftError, __version__
from domaincraft.analysis import (RULES, RunResult, linear_fit, r_squared, recommend, spearman, tabulate,
                                  variance)
from domaincraft.corpus import LangPair, corpus_stats, load_parallel, load_tsv, make_corpus
from domaincraft.divergence import corpus_jsd, divergence_matrix, load_stopwords
from domaincraft.evaluation import evaluate
from domaincraft.mixing import mix
from domaincraft.model.bpe import SubwordModel, train_bpe
from domaincraft.model.checkpoint import load_checkpoint
from domaincraft.model.network import ModelConfig
from domaincraft.model.noising import NoiseConfig
from domaincraft.model.training import TrainConfig
from domaincraft.pipeline import run_schedule
from domaincraft.strategy import Mode, Schedule, Strategy, build_schedule
from domaincraft.svg import heatmap, scatter
from domaincraft.synth import SynthDomain, SynthSpec, generate
from domaincraft.workspace import (ManifestError, OrphanRowError, UnknownDomainError, Workspace, format_score,
                                   new_manifest, now)

log = logging.getLogger("domaincraft")


class UsageError(DomaincraftError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _emit_error(kind: str, message: str) -> None:
    print(json.dumps({"error": kind, "message": " ".join(str(message).split())}), file=sys.stderr)


# shared helpers


def _sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _configs(settings) -> tuple[ModelConfig, TrainConfig, TrainConfig | None, NoiseConfig]:
    train = TrainConfig(epochs=settings["train.epochs"], lr=settings["train.lr"],
                        batch_size=settings["train.batch_size"], seed=settings["seed"],
                        dropout=settings["train.dropout"], attention_dropout=settings["train.attention_dropout"])
    cont = None
    if settings["continue.epochs"] > 0:
        cont = TrainConfig(epochs=settings["continue.epochs"], lr=settings["continue.lr"] or settings["train.lr"],
                           batch_size=settings["train.batch_size"], seed=settings["seed"],
                           dropout=settings["train.dropout"], attention_dropout=settings["train.attention_dropout"])
    noise = NoiseConfig(settings["noise.mask_ratio"], settings["noise.span_lambda"])
    model = dict(layers=settings["model.layers"], heads=settings["model.heads"], d_model=settings["model.d_model"],
                 d_ff=settings["model.d_ff"], max_len=settings["model.max_len"],
                 dropout=settings["train.dropout"], attention_dropout=settings["train.attention_dropout"])
    return model, train, cont, noise


def _tokenizer(ws: Workspace, lang: str, vocab_size: int, create: bool = True) -> SubwordModel:
    path = ws.tokenizer_path(lang)
    if path.exists():
        return SubwordModel.load(path)
    if not create:
        raise ManifestError(f"no tokenizer for {lang}; run train first")
    texts = []
    for domain in ws.domains(lang, "train"):
        c = ws.load_corpus(lang, domain, "train")
        texts += c.sources + c.targets
    if not texts:
        raise UnknownDomainError(f"no train corpora for {lang}")
    subword = train_bpe(texts, vocab_size, tuple(lang.split("-")))
    path.parent.mkdir(parents=True, exist_ok=True)
    subword.save(path)
    log.info("trained subword model (%d pieces) for %s", len(subword), lang)
    return subword


def _train_corpora(ws: Workspace, schedule: Schedule, lang: str) -> dict:
    domains = sorted({str(d) for st in schedule.stages for d in st.data.domains})
    return {d: ws.load_corpus(lang, d, "train") for d in domains}


def _print_schedule(s: Schedule) -> None:
    print(f"schedule {s.id}")
    print(f"  strategy: {s.strategy.value} ({s.mode.value})")
    for k, st in enumerate(s.stages):
        parts = " + ".join(str(c) for c in st.data.components)
        print(f"  stage {k} [{st.role}] {st.objective.value}: {parts} (seed {st.data.seed})")
    print(f"  test: {s.test[0]}/{s.test[1]}")


def _size_list(text: str | None) -> list[str] | None:
    return [t.strip() for t in text.split(",") if t.strip()] if text else None


# commands


def cmd_ingest(args) -> int:
    ws = Workspace.locate(args.workspace, must_exist=False).init()
    lang = LangPair.parse(args.lang)
    if args.tsv:
        corpus = load_tsv(args.tsv, args.domain, lang, args.split)
    elif args.src and args.tgt:
        corpus = load_parallel(args.src, args.tgt, args.domain, lang, args.split)
    else:
        raise UsageError("ingest needs --tsv or both --src and --tgt")
    ws.add_corpus(corpus)
    st = corpus_stats(corpus)
    print(f"ingested {corpus.label}: {len(corpus)} pairs ({corpus.dropped} dropped) digest {corpus.digest()[:16]}")
    print(f"  tokens {st.source_tokens}/{st.target_tokens} types {st.source_types}/{st.target_types}")
    return 0


def _parse_synth_domain(text: str) -> SynthDomain:
    parts = text.split(":")
    if not 2 <= len(parts) <= 4:
        raise UsageError(f"expected name:vocab[:overlap[:offset]], got {text!r}")
    try:
        nums = [int(parts[1])] + [float(p) for p in parts[2:]]
    except ValueError:
        raise UsageError(f"bad number in {text!r}") from None
    return SynthDomain(parts[0], *nums)


def cmd_synth(args) -> int:
    from domaincraft.experiments import divergence_family

    ws = Workspace.locate(args.workspace, must_exist=False).init()
    seed = args.seed if args.seed is not None else 222
    sizes = {"train": args.train_size, "test": args.test_size}
    if args.domain:
        spec = SynthSpec(domains=tuple(_parse_synth_domain(d) for d in args.domain), sizes=sizes,
                         length_range=tuple(args.length), translation_seed=args.translation_seed,
                         generation_seed=seed, lang=args.lang)
    else:
        fam = divergence_family(args.vocab, args.train_size, args.test_size, seed)
        spec = SynthSpec(domains=fam.domains, sizes=sizes, length_range=tuple(args.length),
                         translation_seed=args.translation_seed, generation_seed=seed, lang=args.lang)
    for corpus in generate(spec):
        ws.add_corpus(corpus)
        print(f"wrote {corpus.label}: {len(corpus)} pairs")
    record = {"domains": [vars(d) for d in spec.domains], "sizes": dict(spec.sizes),
              "length_range": list(spec.length_range), "translation_seed": spec.translation_seed,
              "generation_seed": spec.generation_seed, "lang": spec.lang}
    (ws.root / "corpora" / spec.lang / "synth.json").write_text(json.dumps(record, indent=2) + "\n")
    return 0


def cmd_divergence(args) -> int:
    ws = Workspace.locate(args.workspace)
    langs = [ws.resolve_lang(args.lang)] if args.lang else ws.languages()
    corpora = []
    for lang in langs:
        corpora += [ws.load_corpus(lang, d, s) for (d, s) in ws.corpus_index(lang) if s in args.split]
    if len(corpora) < 2:
        raise UnknownDomainError("need at least two corpora for a divergence matrix")
    stop = {lang: load_stopwords(path) for lang, path in _parse_kv(args.stopwords, str).items()}
    m = divergence_matrix(corpora, args.side, stop)
    out = ws.reports_dir()
    (out / "divergence.csv").write_text(m.to_csv())
    names = [f"{d}/{s}" for d, s in m.labels]
    (out / "divergence.svg").write_text(heatmap(names, m.values, "Pairwise JSD"))
    sys.stdout.write(m.to_csv())
    return 0


def cmd_plan(args) -> int:
    ws = Workspace.locate(args.workspace)
    flags = {"seed": args.seed, "train.epochs": args.epochs, "train.lr": args.lr,
             "train.batch_size": args.batch_size, "train.dropout": args.dropout, "lang": args.lang}
    settings = ws.settings(flags)
    lang = ws.resolve_lang(settings["lang"] or None)
    available = ws.domains(lang, "train")
    mode = Mode(args.mode)
    target = args.target
    test = args.test if mode is Mode.OUT_DOMAIN else None
    strategy = Strategy(args.strategy)
    for d in [target] + (_size_list(args.aux) or []) + ([args.intermediate] if args.intermediate else []):
        if d not in available:
            raise UnknownDomainError(f"unknown domain {d!r}; available: {', '.join(available)}")
    if mode is Mode.OUT_DOMAIN:
        if not test:
            raise UsageError("out-domain plans need --test")
        if (test, "test") not in ws.corpus_index(lang) and (test, args.test_split) not in ws.corpus_index(lang):
            raise UnknownDomainError(f"unknown test domain {test!r}")
    aux = _size_list(args.aux)
    if aux is None:
        aux = [d for d in available if d not in (target, test)]
    if strategy is Strategy.VANILLA_FT:
        aux = []
    elif strategy is Strategy.SINGLE_DOMAIN_ITTL:
        aux = [args.intermediate or (aux[0] if aux else None)]
        if aux[0] is None:
            raise UsageError("single-domain ITTL needs --intermediate")
    im_size = args.im_size
    domains = {d: im_size for d in aux}
    domains[target] = args.fi_size
    for d, n in domains.items():
        have = len(ws.load_corpus(lang, d, "train"))
        if n > have:
            raise UnknownDomainError(f"size {n} requested for {d} but only {have} train pairs exist")
    schedule = build_schedule(strategy, domains, target, mode, settings["seed"], test=test,
                              intermediate=aux[0] if strategy is Strategy.SINGLE_DOMAIN_ITTL else None,
                              im_size=im_size if aux else None, lang=lang, test_split=args.test_split,
                              schedule_id_=args.id)
    manifest = new_manifest(schedule.to_json(), settings)
    path = ws.manifest_path(schedule.id)
    if path.exists():
        old = ws.read_manifest(schedule.id)
        if old["schedule"] != manifest["schedule"] or old["config_hash"] != manifest["config_hash"]:
            raise ManifestError(f"schedule id {schedule.id} already planned with a different definition")
        print(f"manifest exists: {path}")
    else:
        ws.write_manifest(manifest)
        print(f"manifest written: {path}")
    _print_schedule(schedule)
    return 0


def _result_row(schedule: Schedule, test_domain: str, metric: str, score: float) -> dict:
    return {"schedule_id": schedule.id, "strategy": schedule.strategy.value, "mode": schedule.mode.value,
            "test_domain": test_domain, "im_size": schedule.im_size, "fi_size": schedule.fi_size,
            "metric": metric, "score": format_score(score)}


def cmd_train(args) -> int:
    ws = Workspace.locate(args.workspace)
    manifest = ws.read_manifest(args.schedule)
    if manifest["toolkit_version"] != __version__:
        raise ManifestError(f"manifest built with {manifest['toolkit_version']}, this is {__version__}")
    schedule = Schedule.from_json(manifest["schedule"])
    settings = manifest["settings"]
    lang = schedule.lang or ws.resolve_lang(None)
    subword = _tokenizer(ws, lang, settings["bpe.vocab_size"])
    corpora = _train_corpora(ws, schedule, lang)
    test = ws.load_corpus(lang, schedule.test[0], schedule.test[1])
    inputs = {"corpora": {d: c.digest() for d, c in sorted(corpora.items())}, "test": test.digest(),
              "tokenizer": subword.digest()}
    if manifest["inputs"] and manifest["inputs"] != inputs:
        raise ManifestError(f"inputs of {schedule.id} changed since its first run (corpus or tokenizer digests differ)")
    model_kw, train_cfg, cont, noise = _configs(settings)
    model_cfg = ModelConfig(vocab_size=len(subword), **model_kw)
    started = now()
    out = run_schedule(schedule, corpora, test, subword, model_cfg, train_cfg, noise, ws.checkpoint_dir(),
                       settings["eval.tokenizer"], continuation=cont)
    row = _result_row(schedule, str(test.domain), out.result.metric, out.result.score)
    written = ws.results.append(row)
    manifest["inputs"] = inputs
    manifest["outputs"] = {
        "checkpoints": [{"path": str(Path(p).relative_to(ws.root)), "sha256": _sha256_file(p)} for p in out.checkpoints],
        "stage_losses": out.stage_losses,
        "results": str(Path("results.csv")),
        "signature": out.result.signature,
        "model": model_cfg.to_json(),
    }
    manifest["runs"].append({"started": started, "finished": now(), "score": row["score"]})
    ws.write_manifest(manifest)
    status = "appended" if written else "unchanged"
    print(f"{schedule.id} {out.result.metric} {row['score']} ({status})")
    return 0


def cmd_evaluate(args) -> int:
    ws = Workspace.locate(args.workspace)
    manifest = ws.read_manifest(args.schedule)
    schedule = Schedule.from_json(manifest["schedule"])
    ckpts = manifest.get("outputs", {}).get("checkpoints")
    if not ckpts:
        raise ManifestError(f"schedule {schedule.id} has not been trained")
    lang = schedule.lang or ws.resolve_lang(None)
    subword = _tokenizer(ws, lang, 0, create=False)
    model, _ = load_checkpoint(ws.root / ckpts[-1]["path"])
    domain = args.test_domain or str(schedule.test[0])
    split = args.split or schedule.test[1]
    test = ws.load_corpus(lang, domain, split)
    tok = args.tokenizer or manifest["settings"]["eval.tokenizer"]
    result, hyps = evaluate(model, subword, test, tok, schedule.id)
    if args.output:
        Path(args.output).write_text("\n".join(hyps) + "\n", encoding="utf-8")
    row = _result_row(schedule, domain, result.metric, result.score)
    written = ws.results.append(row)
    print(f"{schedule.id} {domain}/{split} {result.metric} {row['score']} ({'appended' if written else 'unchanged'})")
    print(f"  signature {result.signature}")
    return 0


def _run_results(ws: Workspace) -> list[RunResult]:
    """Result rows joined with their manifests; JSD is final-stage data vs the test corpus."""
    rows = ws.results.rows()
    if not rows:
        raise ManifestError("results store is empty")
    known = set(ws.manifest_ids())
    orphans = sorted({r["schedule_id"] for r in rows if r["schedule_id"] not in known})
    if orphans:
        raise OrphanRowError(f"{len(orphans)} result rows have no manifest: {', '.join(orphans)}")
    jsd_cache: dict = {}
    out = []
    for r in rows:
        schedule = Schedule.from_json(ws.read_manifest(r["schedule_id"])["schedule"])
        lang = schedule.lang or ws.resolve_lang(None)
        key = (schedule.final_stage.data, r["test_domain"], schedule.test[1])
        if key not in jsd_cache:
            final = schedule.final_stage.data
            corpora = {str(d): ws.load_corpus(lang, d, "train") for d in final.domains}
            mixed = make_corpus([(p.source, p.target) for p in mix(corpora, final).sentence_pairs],
                                "final", LangPair.parse(lang), "train")
            jsd_cache[key] = corpus_jsd(mixed, ws.load_corpus(lang, r["test_domain"], schedule.test[1]))
        out.append(RunResult(r["schedule_id"], r["strategy"], r["mode"], int(r["im_size"]), int(r["fi_size"]),
                             r["test_domain"], float(r["score"]), round(jsd_cache[key], 6)))
    return out


def _correlations(results: Sequence[RunResult]) -> dict:
    by: dict[str, list[RunResult]] = {}
    for r in results:
        by.setdefault(r.strategy.value, []).append(r)
    stats = {}
    for name, rs in sorted(by.items(), key=lambda kv: Strategy(kv[0]).compute_rank):
        xs = [r.jsd_final_to_test for r in rs]
        ys = [r.score for r in rs]
        entry = {"runs": len(rs), "mean": round(sum(ys) / len(ys), 4)}
        if len(rs) >= 2:
            entry["variance"] = round(variance(ys), 4)
        if len(set(xs)) >= 2:
            entry["r2"] = round(r_squared(xs, ys), 4)
            entry["spearman"] = round(spearman(xs, ys), 4)
            entry["fit"] = [round(v, 4) for v in linear_fit(xs, ys)]
        stats[name] = entry
    return stats


def _jsd_svg(results: Sequence[RunResult], stats: dict) -> str:
    series: dict[str, list[tuple[float, float]]] = {}
    for r in sorted(results, key=lambda r: (r.strategy.compute_rank, r.schedule_id, r.test_domain)):
        series.setdefault(r.strategy.value, []).append((r.jsd_final_to_test, r.score))
    fits = {name: tuple(e["fit"]) for name, e in stats.items() if "fit" in e}
    return scatter(series, "JSD (final-stage data vs test)", "score", "Score vs domain divergence", fits=fits)


def cmd_analyze(args) -> int:
    ws = Workspace.locate(args.workspace)
    results = _run_results(ws)
    stats = _correlations(results)
    out = ws.reports_dir()
    payload = {"variance": "population", "population": f"{len(results)} result rows",
               "strategies": stats,
               "runs": [{"schedule_id": r.schedule_id, "test_domain": r.test_domain, "score": r.score,
                         "jsd": r.jsd_final_to_test} for r in results]}
    (out / "analysis.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    lines = ["strategy,runs,mean,variance,r2,spearman"]
    for name, e in stats.items():
        lines.append(",".join([name, str(e["runs"]), str(e["mean"]), str(e.get("variance", "")),
                               str(e.get("r2", "")), str(e.get("spearman", ""))]))
    (out / "analysis.csv").write_text("\n".join(lines) + "\n")
    runs = ["schedule_id,strategy,test_domain,jsd,score"]
    runs += [f"{r.schedule_id},{r.strategy.value},{r.test_domain},{r.jsd_final_to_test:.6f},{r.score:.4f}"
             for r in results]
    (out / "runs.csv").write_text("\n".join(runs) + "\n")
    (out / "jsd_vs_score.svg").write_text(_jsd_svg(results, stats))
    sys.stdout.write("\n".join(lines) + "\n")
    print(f"variance: population; wrote {out / 'analysis.csv'}, {out / 'runs.csv'}, {out / 'jsd_vs_score.svg'}")
    return 0


def _parse_kv(items: Sequence[str] | None, cast) -> dict:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise UsageError(f"expected name=value, got {item!r}")
        k, v = item.split("=", 1)
        try:
            out[k.strip()] = cast(v)
        except ValueError:
            raise UsageError(f"bad value in {item!r}") from None
    return out


def cmd_recommend(args) -> int:
    aux: dict[str, int] = {}
    for i, item in enumerate(args.aux_size or []):
        if "=" in item:
            aux.update(_parse_kv([item], int))
        else:
            try:
                aux[f"aux{i}"] = int(item)
            except ValueError:
                raise UsageError(f"bad --aux-size {item!r}") from None
    jsd = _parse_kv(args.jsd, float)
    rec = recommend(args.target_size, aux, args.mode, jsd or None, args.compute,
                    prefer_robust=True if args.prefer_robust else None)
    if args.json:
        print(json.dumps({"strategy": rec.strategy.value, "rule": rec.rule, "citation": rec.rationale,
                          "confidence": rec.confidence, "final_domain": rec.final_domain,
                          "caveats": list(rec.caveats)}, sort_keys=True))
        return 0
    print(f"strategy: {rec.strategy.value}")
    print(f"rule: {rec.rule}")
    print(f"citation: {RULES[rec.rule]}")
    print(f"confidence: {rec.confidence}")
    if rec.final_domain:
        print(f"final-stage domain: {rec.final_domain}")
    for c in rec.caveats:
        print(f"caveat: {c}")
    return 0


def render_report(results: Sequence[RunResult]) -> tuple[str, str]:
    """Markdown summary (one table per size combination) and the JSD-vs-score SVG."""
    lines = ["# Results summary", ""]
    for cell in tabulate(results):
        lines.append(f"## IM {cell.im_size} / FI {cell.fi_size} ({cell.mode.value})")
        lines.append("")
        lines.append("| strategy | mean score | rank |")
        lines.append("|---|---:|---|")
        for s in sorted(cell.scores, key=lambda s: s.compute_rank):
            mark = {"best": "**best**", "second": "second"}.get(cell.marker(s), "")
            lines.append(f"| {s.value} | {cell.scores[s]:.2f} | {mark} |")
        if cell.note:
            lines.append("")
            lines.append(f"note: {cell.note}")
        lines.append("")
    stats = _correlations(results)
    lines.append("## Divergence correlation")
    lines.append("")
    lines.append("| strategy | runs | R2 | Spearman | variance |")
    lines.append("|---|---:|---:|---:|---:|")
    for name, e in stats.items():
        lines.append(f"| {name} | {e['runs']} | {e.get('r2', '-')} | {e.get('spearman', '-')} | {e.get('variance', '-')} |")
    return "\n".join(lines) + "\n", _jsd_svg(results, stats)


def cmd_report(args) -> int:
    ws = Workspace.locate(args.workspace)
    results = _run_results(ws)
    md, svg = render_report(results)
    out = ws.reports_dir()
    (out / "summary.md").write_text(md, encoding="utf-8")
    (out / "jsd_vs_score.svg").write_text(svg, encoding="utf-8")
    sys.stdout.write(md)
    print(f"wrote {out / 'summary.md'} and {out / 'jsd_vs_score.svg'}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="domaincraft", description="Auxiliary-domain fine-tuning strategies for low-resource MT.")
    p.add_argument("--version", action="version", version=f"domaincraft {__version__}")
    p.add_argument("--workspace", help="workspace directory (default: $DOMAINCRAFT_WORKSPACE or .)")
    p.add_argument("--seed", type=int, help="override every derived seed")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("ingest", help="add a parallel corpus to the workspace")
    s.add_argument("--domain", required=True)
    s.add_argument("--lang", required=True, help="language pair, e.g. en-si")
    s.add_argument("--split", default="train")
    s.add_argument("--src")
    s.add_argument("--tgt")
    s.add_argument("--tsv")
    s.set_defaults(func=cmd_ingest)

    s = sub.add_parser("synth", help="generate synthetic domain corpora")
    s.add_argument("--domain", action="append", help="name:vocab[:overlap[:offset]]; default: calibrated family")
    s.add_argument("--vocab", type=int, default=100)
    s.add_argument("--train-size", type=int, default=2000)
    s.add_argument("--test-size", type=int, default=300)
    s.add_argument("--length", type=int, nargs=2, default=(6, 12), metavar=("MIN", "MAX"))
    s.add_argument("--translation-seed", type=int, default=7)
    s.add_argument("--lang", default="qaa-qab")
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("divergence", help="pairwise JSD matrix (CSV + SVG heatmap)")
    s.add_argument("--split", action="append", default=None)
    s.add_argument("--side", choices=("both", "source", "target"), default="both")
    s.add_argument("--stopwords", action="append", help="lang=FILE stopword list (repeatable)")
    s.add_argument("--lang")
    s.set_defaults(func=cmd_divergence)

    s = sub.add_parser("plan", help="compile a strategy into a schedule and write its manifest")
    s.add_argument("--strategy", required=True, choices=[x.value for x in Strategy])
    s.add_argument("--target", required=True)
    s.add_argument("--mode", required=True, choices=[x.value for x in Mode])
    s.add_argument("--im-size", type=int, default=1000)
    s.add_argument("--fi-size", type=int, default=1000)
    s.add_argument("--aux", help="comma-separated auxiliary domains (default: all other train domains)")
    s.add_argument("--intermediate")
    s.add_argument("--test")
    s.add_argument("--test-split", default="test")
    s.add_argument("--lang")
    s.add_argument("--id")
    s.add_argument("--epochs", type=int)
    s.add_argument("--lr", type=float)
    s.add_argument("--batch-size", type=int)
    s.add_argument("--dropout", type=float)
    s.set_defaults(func=cmd_plan)

    s = sub.add_parser("train", help="run a planned schedule and record its result")
    s.add_argument("--schedule", required=True)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("evaluate", help="score a trained schedule on a test corpus")
    s.add_argument("--schedule", required=True)
    s.add_argument("--test-domain")
    s.add_argument("--split")
    s.add_argument("--tokenizer", choices=("subword", "word"))
    s.add_argument("--output", help="write hypotheses here")
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("analyze", help="JSD-score correlation and variance per strategy")
    s.set_defaults(func=cmd_analyze)

    s = sub.add_parser("recommend", help="rule-based strategy recommendation")
    s.add_argument("--target-size", type=int, default=0)
    s.add_argument("--aux-size", action="append", help="size or name=size (repeatable)")
    s.add_argument("--mode", required=True, choices=[x.value for x in Mode])
    s.add_argument("--compute", choices=("limited", "ample"), default="limited")
    s.add_argument("--jsd", action="append", help="name=value divergence of an aux domain to the test domain")
    s.add_argument("--prefer-robust", action="store_true")
    s.add_argument("--json", action="store_true")
    s.set_defaults(func=cmd_recommend)

    s = sub.add_parser("report", help="summary tables and JSD-vs-score SVG")
    s.set_defaults(func=cmd_report)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        if getattr(args, "command", None) == "divergence" and args.split is None:
            args.split = ["train"]
        return args.func(args)
    except DomaincraftError as e:
        _emit_error(type(e).__name__, str(e))
        return 2 if isinstance(e, UsageError) else 1
    except (ValueError, KeyError, OSError) as e:
        _emit_error(type(e).__name__, str(e))
        return 1


if __name__ == "__main__":
    sys.exit(main())
