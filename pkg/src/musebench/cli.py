"""Command-line front end wiring the pipeline stages together.

Every stage is one subcommand over JSONL files:

    sample          pick a subset whose category mix tracks the corpus
    cluster         k-means over prompt embeddings
    synth           synthetic prompt generation (direct or via LLM)
    split-elements  LLM element splitting of prompts
    gen-questions   LLM yes/no question writing per element
    aggregate       merge annotator passes into consensus truth
    sigma           per-prompt score spread across images
    stats           corpus-level annotation statistics
    score-vqa       element/image scores from yes-no answer logits
    metrics         correlations and threshold searches against truth
    rank            leaderboard across models

Outputs are written atomically, and the first output of each run gets a
``<name>.manifest.json`` sibling recording content hashes of everything
read and written.  A TOML config (``--config``) supplies per-subcommand
defaults; explicit flags always win.  The API token is only ever read
from ``MUSEBENCH_LLM_TOKEN``.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__
from .aggregate import (
    aggregate_records,
    dataset_stats,
    group_scores_by_prompt,
    prompt_sigma,
)
from .cluster import DEFAULT_K, kmeans
from .config import default_map_from, load_config
from .errors import (
    DispatchError,
    MusebenchError,
    ResponseFormatError,
    SolverError,
    ValidationFailure,
)
from .iohelpers import (
    atomic_write_json,
    atomic_write_jsonl,
    atomic_write_text,
    write_manifest,
)
from .jsonl import parse_jsonl
from .llm import ClientConfig, dispatch_many, dispatch_parsed
from .metrics import f1_threshold, krcc, plcc, recall_rate, srcc, structural_accuracy, threshold_search
from .milp import assemble_milp, solve_milp
from .ranking import build_aggregates, emit_report, rank_models
from .records import GeneratedQuestion, Prompt, PromptVariance
from .shaping import (
    ShapingProblem,
    build_targets,
    exhaustive_oracle,
    memberships_from_prompts,
    variance_ranked_select,
)
from .synth import (
    SYNTH_CATEGORIES,
    KeywordCorpus,
    draw_synth_request,
    gen_count_prompt,
    gen_writing_prompt,
    load_default_corpus,
)
from .templates import (
    ElementList,
    build_element_split_request,
    build_question_request,
    parse_element_response,
    parse_question_response,
)
from .vocab import check_structure_tag, element_category
from .vqa import binarize_truth, es_avg, score_pairs_expected, score_pairs_pn, to_prediction

_in_path = click.Path(exists=True, dir_okay=False)
_out_path = click.Path(dir_okay=False, writable=True)


def _params(**kw) -> dict:
    out = {}
    for k, v in kw.items():
        if isinstance(v, tuple):
            v = list(v)
        elif isinstance(v, Path):
            v = str(v)
        out[k] = v
    return out


def _llm_options(f):
    f = click.option("--retries", default=3, show_default=True, type=int)(f)
    f = click.option("--timeout", default=30.0, show_default=True, type=float)(f)
    f = click.option(
        "--cache-dir",
        type=click.Path(file_okay=False),
        default=None,
        help="response cache directory (repeat runs become replays)",
    )(f)
    f = click.option("--model", default="gpt-4", show_default=True)(f)
    f = click.option(
        "--endpoint",
        default=None,
        help="completion API URL; falls back to MUSEBENCH_LLM_ENDPOINT",
    )(f)
    return f


def _client(endpoint, cache_dir, timeout, retries) -> ClientConfig:
    return ClientConfig(
        endpoint=endpoint, cache_dir=cache_dir, timeout=timeout, retries=retries
    )


@click.group()
@click.option(
    "--config",
    "config_path",
    type=_in_path,
    default=None,
    help="TOML defaults, one table per subcommand",
)
@click.version_option(__version__, prog_name="musebench")
@click.pass_context
def cli(ctx, config_path):
    """Dataset shaping, prompt synthesis, annotation aggregation and
    VQA-based scoring for text-to-image evaluation sets."""
    if config_path:
        ctx.default_map = default_map_from(load_config(config_path))


# ---------------------------------------------------------------------------
# selection and clustering
# ---------------------------------------------------------------------------


@cli.command()
@click.option("--corpus", required=True, type=_in_path, help="prompt JSONL to select from")
@click.option("--n", required=True, type=int, help="subset size")
@click.option(
    "--dims",
    default=None,
    help="comma-separated grouping dimensions (default: all present)",
)
@click.option("--budget-nodes", default=1_000_000, show_default=True, type=int)
@click.option("--oracle", is_flag=True, help="exhaustive search instead of branch and bound")
@click.option(
    "--variance",
    type=_in_path,
    default=None,
    help="prompt variance JSONL; shortlist by spread before solving",
)
@click.option("--top-k", type=int, default=None, help="shortlist size used with --variance")
@click.option("--out", required=True, type=_out_path, help="selected prompts JSONL")
@click.option("--report", type=_out_path, default=None, help="selection summary JSON")
def sample(corpus, n, dims, budget_nodes, oracle, variance, top_k, out, report):
    """Pick n prompts whose per-dimension category counts best match
    corpus-uniform targets."""
    prompts = parse_jsonl(corpus, "prompt")
    wanted = [d.strip() for d in dims.split(",") if d.strip()] if dims else None
    memberships, ids = memberships_from_prompts(prompts, dims=wanted)
    inputs = {"corpus": corpus}
    if variance:
        if top_k is None:
            raise click.UsageError("--variance needs --top-k")
        if oracle:
            raise click.UsageError("--oracle does not combine with --variance")
        spread = {v.prompt_id: v.sigma for v in parse_jsonl(variance, "prompt_variance")}
        sel, _ = variance_ranked_select(
            spread, ids, memberships, top_k=top_k, final_n=n, budget_nodes=budget_nodes
        )
        inputs["variance"] = variance
    else:
        problem = ShapingProblem(memberships, build_targets(memberships, n))
        if oracle:
            sel = exhaustive_oracle(problem)
        else:
            sel = solve_milp(assemble_milp(problem), budget_nodes=budget_nodes)
    chosen = sorted(sel.chosen)
    atomic_write_jsonl(out, [prompts[i] for i in chosen])
    outputs = {"out": out}
    if report:
        summary = dict(sel.to_json_dict())
        summary["prompt_ids"] = [ids[i] for i in chosen]
        atomic_write_json(report, summary)
        outputs["report"] = report
    click.echo(
        f"selected {len(chosen)}/{len(prompts)} prompts, "
        f"objective {sel.objective:.6g} ({sel.proof_kind})",
        err=True,
    )
    write_manifest(
        out,
        command="sample",
        params=_params(
            n=n, dims=dims, budget_nodes=budget_nodes, oracle=oracle, top_k=top_k
        ),
        inputs=inputs,
        outputs=outputs,
    )


@cli.command()
@click.option(
    "--embeddings", required=True, type=_in_path, help="JSONL of {prompt_id, vector}"
)
@click.option("--k", default=DEFAULT_K, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--max-iters", default=300, show_default=True, type=int)
@click.option("--out", required=True, type=_out_path, help="model JSON with assignments")
def cluster(embeddings, k, seed, max_iters, out):
    """Group prompt embeddings into k clusters with seeded k-means."""
    recs = parse_jsonl(embeddings, "embedding")
    X = np.asarray([r.vector for r in recs], dtype=np.float64)
    model = kmeans(X, k, seed=seed, max_iters=max_iters)
    export = {
        "k": model.k,
        "seed": model.seed,
        "n_iter": model.n_iter,
        "inertia": model.inertia,
        "centroids": [[float(v) for v in row] for row in model.centroids],
        "assignments": {r.prompt_id: int(lab) for r, lab in zip(recs, model.labels)},
    }
    atomic_write_json(out, export)
    click.echo(
        f"clustered {len(recs)} embeddings into {k} groups, inertia {model.inertia:.6g}",
        err=True,
    )
    write_manifest(
        out,
        command="cluster",
        params=_params(k=k, seed=seed, max_iters=max_iters),
        inputs={"embeddings": embeddings},
        outputs={"out": out},
    )


# ---------------------------------------------------------------------------
# prompt production
# ---------------------------------------------------------------------------


@cli.command()
@click.option(
    "--category",
    required=True,
    type=click.Choice(("count", "writing") + SYNTH_CATEGORIES),
)
@click.option("--n", default=10, show_default=True, type=int, help="prompts/requests to draw")
@click.option("--seed", default=0, show_default=True, type=int)
@click.option(
    "--corpus",
    type=_in_path,
    default=None,
    help="keyword corpus JSON (default: the bundled one)",
)
@click.option("--out", required=True, type=_out_path)
@click.option(
    "--dispatch",
    is_flag=True,
    help="send the LLM-backed categories to the endpoint instead of writing requests",
)
@_llm_options
def synth(category, n, seed, corpus, out, dispatch, endpoint, model, cache_dir, timeout, retries):
    """Generate synthetic prompts.

    count and writing render locally into prompt records; the keyword
    supplement categories produce LLM request JSONL (or, with
    --dispatch, the raw responses).
    """
    if n <= 0:
        raise click.UsageError("--n must be positive")
    kws = KeywordCorpus.from_file(corpus) if corpus else load_default_corpus()
    inputs = {"corpus": corpus} if corpus else {}
    if category in ("count", "writing"):
        gen = gen_count_prompt if category == "count" else gen_writing_prompt
        label = "number" if category == "count" else "writing-symbols"
        records = [
            Prompt(
                prompt_id=f"syn-{category}-{i + 1:04d}",
                text=gen(kws, seed + i),
                origin=f"synthetic/{category}",
                categories={"logic": (label,)},
            )
            for i in range(n)
        ]
        atomic_write_jsonl(out, records)
    else:
        reqs = [draw_synth_request(kws, category, seed + i, model=model) for i in range(n)]
        if dispatch:
            responses = dispatch_many(reqs, _client(endpoint, cache_dir, timeout, retries))
            rows = [
                {
                    "category": category,
                    "seed": seed + i,
                    "instruction": rq.instruction,
                    "response": rs.text,
                }
                for i, (rq, rs) in enumerate(zip(reqs, responses))
            ]
        else:
            rows = [
                {
                    "category": category,
                    "seed": seed + i,
                    "model": rq.model,
                    "instruction": rq.instruction,
                }
                for i, rq in enumerate(reqs)
            ]
        atomic_write_text(out, "".join(json.dumps(r, ensure_ascii=False) + "\n" for r in rows))
    write_manifest(
        out,
        command="synth",
        params=_params(
            category=category, n=n, seed=seed, dispatch=dispatch, model=model,
            endpoint=endpoint,
        ),
        inputs=inputs,
        outputs={"out": out},
    )


@cli.command("split-elements")
@click.option("--prompts", required=True, type=_in_path, help="prompt JSONL")
@click.option("--out", required=True, type=_out_path, help="element list JSONL")
@click.option("--max-regen", default=3, show_default=True, type=int)
@_llm_options
def split_elements(prompts, out, max_regen, endpoint, model, cache_dir, timeout, retries):
    """Split each prompt into typed elements through the LLM.

    A prompt whose responses stay unparseable after the regeneration
    budget gets an empty element list and a warning, not a crash.
    """
    records = parse_jsonl(prompts, "prompt")
    cfg = _client(endpoint, cache_dir, timeout, retries)
    lists, failures = [], 0
    for p in records:
        req = build_element_split_request(p.text, model=model)
        try:
            el = dispatch_parsed(
                req,
                cfg,
                lambda text, pid=p.prompt_id: parse_element_response(text, prompt_id=pid),
                max_regen=max_regen,
            )
        except ResponseFormatError as exc:
            click.echo(f"warning: prompt {p.prompt_id}: {exc}", err=True)
            el = ElementList(p.prompt_id, ())
            failures += 1
        lists.append(el)
    atomic_write_jsonl(out, lists)
    click.echo(
        f"split {len(records)} prompts ({failures} unparseable after retries)", err=True
    )
    write_manifest(
        out,
        command="split-elements",
        params=_params(max_regen=max_regen, model=model, endpoint=endpoint),
        inputs={"prompts": prompts},
        outputs={"out": out},
    )


@cli.command("gen-questions")
@click.option("--prompts", required=True, type=_in_path, help="prompt JSONL")
@click.option("--elements", required=True, type=_in_path, help="element list JSONL")
@click.option("--out", required=True, type=_out_path, help="question JSONL")
@click.option("--max-regen", default=3, show_default=True, type=int)
@_llm_options
def gen_questions(prompts, elements, out, max_regen, endpoint, model, cache_dir, timeout, retries):
    """Write one yes/no question per prompt element through the LLM.

    Elements that stay unparseable after the regeneration budget are
    kept questionless so downstream scoring can skip them.
    """
    by_id = {p.prompt_id: p for p in parse_jsonl(prompts, "prompt")}
    lists = parse_jsonl(elements, ElementList)
    cfg = _client(endpoint, cache_dir, timeout, retries)
    questions, failures = [], 0
    for el in lists:
        if el.prompt_id not in by_id:
            raise ValidationFailure(
                f"element list references unknown prompt {el.prompt_id!r}"
            )
        caption = by_id[el.prompt_id].text
        for key in el.elements:
            req = build_question_request(caption, key, model=model)
            try:
                q = dispatch_parsed(
                    req,
                    cfg,
                    lambda text, pid=el.prompt_id, k=key: parse_question_response(
                        text, prompt_id=pid, element=k
                    ),
                    max_regen=max_regen,
                )
            except ResponseFormatError as exc:
                click.echo(f"warning: {el.prompt_id} / {key}: {exc}", err=True)
                q = GeneratedQuestion(el.prompt_id, key, None, None)
                failures += 1
            questions.append(q)
    atomic_write_jsonl(out, questions)
    click.echo(
        f"wrote {len(questions)} questions ({failures} left questionless)", err=True
    )
    write_manifest(
        out,
        command="gen-questions",
        params=_params(max_regen=max_regen, model=model, endpoint=endpoint),
        inputs={"prompts": prompts, "elements": elements},
        outputs={"out": out},
    )


# ---------------------------------------------------------------------------
# annotation handling
# ---------------------------------------------------------------------------


@cli.command()
@click.option("--annotations", required=True, type=_in_path, help="annotation JSONL")
@click.option("--out", required=True, type=_out_path, help="aggregated pair JSONL")
def aggregate(annotations, out):
    """Merge the annotator passes of each pair into consensus truth."""
    pairs = aggregate_records(parse_jsonl(annotations, "annotation"))
    atomic_write_jsonl(out, pairs)
    flagged = sum(1 for p in pairs if p.needs_reannotation)
    dropped = sum(1 for p in pairs if p.discarded)
    click.echo(
        f"aggregated {len(pairs)} pairs ({flagged} flagged for another pass, "
        f"{dropped} discarded)",
        err=True,
    )
    write_manifest(
        out,
        command="aggregate",
        params=_params(),
        inputs={"annotations": annotations},
        outputs={"out": out},
    )


@cli.command()
@click.option("--aggregated", required=True, type=_in_path, help="aggregated pair JSONL")
@click.option("--pairs", required=True, type=_in_path, help="image pair JSONL")
@click.option("--use-variance", is_flag=True, help="variance instead of standard deviation")
@click.option("--out", required=True, type=_out_path, help="prompt variance JSONL")
def sigma(aggregated, pairs, use_variance, out):
    """Per-prompt spread of overall scores across its images."""
    groups = group_scores_by_prompt(
        parse_jsonl(aggregated, "aggregated"), parse_jsonl(pairs, "image_pair")
    )
    rows = [
        PromptVariance(pid, prompt_sigma(scores, use_variance=use_variance), len(scores))
        for pid, scores in sorted(groups.items())
    ]
    atomic_write_jsonl(out, rows)
    write_manifest(
        out,
        command="sigma",
        params=_params(use_variance=use_variance),
        inputs={"aggregated": aggregated, "pairs": pairs},
        outputs={"out": out},
    )


@cli.command()
@click.option("--annotations", required=True, type=_in_path, help="annotation JSONL")
@click.option("--bins", default=8, show_default=True, type=int)
@click.option("--out-json", type=_out_path, default=None)
@click.option("--out-csv", type=_out_path, default=None)
def stats(annotations, bins, out_json, out_csv):
    """Corpus-level annotation statistics: histograms, disagreement and
    category coverage."""
    if not out_json and not out_csv:
        raise click.UsageError("need --out-json and/or --out-csv")
    report = dataset_stats(parse_jsonl(annotations, "annotation"), bins=bins)
    outputs = {}
    if out_json:
        atomic_write_json(out_json, report.to_json_dict())
        outputs["out_json"] = out_json
    if out_csv:
        atomic_write_text(out_csv, report.to_csv())
        outputs["out_csv"] = out_csv
    click.echo(
        f"{report.n_pairs} pairs, {report.n_flagged} flagged, "
        f"{report.n_discarded} discarded",
        err=True,
    )
    write_manifest(
        out_json or out_csv,
        command="stats",
        params=_params(bins=bins),
        inputs={"annotations": annotations},
        outputs=outputs,
    )


# ---------------------------------------------------------------------------
# scoring, metrics, ranking
# ---------------------------------------------------------------------------


@cli.command("score-vqa")
@click.option("--method", required=True, type=click.Choice(("pn", "tifa")))
@click.option("--logits", required=True, type=_in_path, help="yes/no logit JSONL")
@click.option("--questions", type=_in_path, default=None, help="question JSONL (tifa)")
@click.option("--pairs", type=_in_path, default=None, help="image pair JSONL (tifa)")
@click.option(
    "--no-prompt-context",
    is_flag=True,
    help="mark the scores as coming from promptless questions",
)
@click.option("--out", required=True, type=_out_path, help="element score JSONL")
@click.option("--out-csv", type=_out_path, default=None, help="per-pair score CSV")
@click.option("--out-pred", type=_out_path, default=None, help="prediction JSONL for rank")
def score_vqa(method, logits, questions, pairs, no_prompt_context, out, out_csv, out_pred):
    """Turn yes/no answer logits into element and image scores."""
    records = parse_jsonl(logits, "vqa_logits")
    inputs = {"logits": logits}
    source = {"pn": "pn_vqa", "tifa": "tifa_vqa"}[method]
    if no_prompt_context:
        source += "_no_prompt"
    if method == "pn":
        sets = score_pairs_pn(records, source=source)
    else:
        if not questions or not pairs:
            raise click.UsageError("--method tifa needs --questions and --pairs")
        sets = score_pairs_expected(
            records,
            parse_jsonl(questions, "question"),
            parse_jsonl(pairs, "image_pair"),
            source=source,
        )
        inputs.update({"questions": questions, "pairs": pairs})
    atomic_write_jsonl(out, sets)
    outputs = {"out": out}
    if out_csv:
        lines = ["pair_id,source,n_elements,score"]
        lines += [
            f"{s.pair_id},{s.source},{len(s.scores)},{es_avg(s.scores)!r}" for s in sets
        ]
        atomic_write_text(out_csv, "\n".join(lines) + "\n")
        outputs["out_csv"] = out_csv
    if out_pred:
        atomic_write_jsonl(out_pred, [to_prediction(s) for s in sets])
        outputs["out_pred"] = out_pred
    click.echo(f"scored {len(sets)} pairs from {len(records)} logit rows", err=True)
    write_manifest(
        out,
        command="score-vqa",
        params=_params(method=method, no_prompt_context=no_prompt_context),
        inputs=inputs,
        outputs=outputs,
    )


@cli.group()
def metrics():
    """Agreement metrics between predictions and human truth."""


def _emit_metric(report: dict, out, *, command: str, params: dict, inputs: dict) -> None:
    click.echo(json.dumps(report, indent=2))
    if out:
        atomic_write_json(out, report)
        write_manifest(out, command=command, params=params, inputs=inputs, outputs={"out": out})


@metrics.command("corr")
@click.option("--pred", required=True, type=_in_path, help="prediction JSONL")
@click.option("--truth", required=True, type=_in_path, help="aggregated pair JSONL")
@click.option("--out", type=_out_path, default=None)
def metrics_corr(pred, truth, out):
    """Overall-score rank/linear correlations on the joined pairs."""
    by_id = {t.pair_id: t for t in parse_jsonl(truth, "aggregated") if not t.discarded}
    xs, ys = [], []
    for p in parse_jsonl(pred, "prediction"):
        t = by_id.get(p.pair_id)
        if t is None:
            continue
        if p.overall_score is not None:
            xs.append(p.overall_score)
        else:
            xs.append(sum(p.element_scores.values()) / len(p.element_scores))
        ys.append(t.overall)
    if not xs:
        raise ValidationFailure("predictions and truth share no pair ids")
    report = {
        "n_pairs": len(xs),
        "srcc": srcc(xs, ys),
        "plcc": plcc(xs, ys),
        "krcc": krcc(xs, ys),
    }
    _emit_metric(
        report, out, command="metrics corr", params=_params(),
        inputs={"pred": pred, "truth": truth},
    )


@metrics.command("fine")
@click.option("--pred", required=True, type=_in_path, help="element score JSONL")
@click.option("--truth", required=True, type=_in_path, help="aggregated pair JSONL")
@click.option("--step", default=0.01, show_default=True, type=float)
@click.option("--out", type=_out_path, default=None)
def metrics_fine(pred, truth, step, out):
    """Best element-level accuracy threshold against binarized truth."""
    if abs(step - 0.01) > 1e-12:
        raise click.UsageError("the search grid is fixed at hundredth steps")
    by_id = {t.pair_id: t for t in parse_jsonl(truth, "aggregated") if not t.discarded}
    scores, labels, cats = [], [], []
    for s in parse_jsonl(pred, "element_scores"):
        t = by_id.get(s.pair_id)
        if t is None:
            continue
        binary = binarize_truth(t.element_truth)
        for key in sorted(s.scores):
            if key not in binary:
                continue
            scores.append(s.scores[key])
            labels.append(binary[key])
            cats.append(element_category(key))
    if not scores:
        raise ValidationFailure("predictions and truth share no elements")
    result = threshold_search(scores, labels, cats)
    report = dict(result.to_json_dict(), n_elements=len(scores))
    _emit_metric(
        report, out, command="metrics fine", params=_params(step=step),
        inputs={"pred": pred, "truth": truth},
    )


@metrics.command("structural")
@click.option("--pos", required=True, type=_in_path, help="predictions on problematic images")
@click.option("--neg", required=True, type=_in_path, help="predictions on clean images")
@click.option("--tag", default=None, help="restrict to one structure tag")
@click.option(
    "--mean",
    default="harmonic",
    show_default=True,
    type=click.Choice(("harmonic", "arithmetic")),
)
@click.option("--out", type=_out_path, default=None)
def metrics_structural(pos, neg, tag, mean, out):
    """F1-optimal detection threshold with accuracy and recall."""
    pos_recs = parse_jsonl(pos, "structural_prediction")
    neg_recs = parse_jsonl(neg, "structural_prediction")
    if tag:
        tag = check_structure_tag(tag)
        pos_recs = [r for r in pos_recs if r.tag == tag]
        neg_recs = [r for r in neg_recs if r.tag == tag]
    p = [r.prob_yes for r in pos_recs]
    q = [r.prob_yes for r in neg_recs]
    if not p or not q:
        raise ValidationFailure("need predictions on both the problem and clean sides")
    best = f1_threshold(p, q, mean=mean)
    report = {
        "tag": tag or "all",
        "mean": mean,
        "threshold": best.threshold,
        "f1": best.f1,
        "accuracy": structural_accuracy(p, q, best.threshold),
        "recall": recall_rate([1 if v > best.threshold else 0 for v in p]),
        "n_pos": len(p),
        "n_neg": len(q),
    }
    _emit_metric(
        report, out, command="metrics structural",
        params=_params(tag=tag, mean=mean), inputs={"pos": pos, "neg": neg},
    )


def _sniff_scored(path):
    """A scored file holds either aggregated human truth or metric
    predictions; the first record's fields say which."""
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                first = json.loads(line)
                break
        else:
            raise ValidationFailure(f"{path}: no records")
    if "overall" in first:
        return parse_jsonl(path, "aggregated")
    return parse_jsonl(path, "prediction")


@cli.command()
@click.option(
    "--scores",
    required=True,
    multiple=True,
    type=_in_path,
    help="aggregated-truth or prediction JSONL, repeatable",
)
@click.option("--pairs", required=True, type=_in_path, help="image pair JSONL")
@click.option("--out", required=True, type=_out_path)
@click.option(
    "--format",
    default="markdown",
    show_default=True,
    type=click.Choice(("markdown", "md", "csv", "json")),
)
@click.option("--keep-discarded", is_flag=True, help="rank over discarded pairs too")
def rank(scores, pairs, out, format, keep_discarded):
    """Leaderboard across the models named in the pairs file, scored by
    human truth or by a metric's predictions."""
    scored = []
    for path in scores:
        scored.extend(_sniff_scored(path))
    aggregates = build_aggregates(
        parse_jsonl(pairs, "image_pair"), scored, skip_discarded=not keep_discarded
    )
    table = rank_models(aggregates)
    text = emit_report(table, "markdown" if format == "md" else format)
    atomic_write_text(out, text)
    click.echo(f"ranked {len(aggregates)} models", err=True)
    inputs = {f"scores{i}": path for i, path in enumerate(scores)}
    inputs["pairs"] = pairs
    write_manifest(
        out,
        command="rank",
        params=_params(format=format, keep_discarded=keep_discarded),
        inputs=inputs,
        outputs={"out": out},
    )


def main(argv=None) -> int:
    """Console entry translating failures into stable exit codes:
    1 validation/usage, 2 I/O or dispatch, 3 solver."""
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:
        return int(exc.exit_code)
    except click.exceptions.Abort:
        return 130
    except click.ClickException as exc:
        exc.show()
        return 1
    except SolverError as exc:
        click.echo(f"error: {exc}", err=True)
        return 3
    except DispatchError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    except ValidationFailure as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    except (OSError, json.JSONDecodeError) as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    except MusebenchError as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
