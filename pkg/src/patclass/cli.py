"""Command-line pipeline: label, build-dataset, train, evaluate, predict,
explain, curves, report.

Every command is driven by one YAML config (see `patclass --help` for
the full key reference); flags win over config values. Exit codes:
0 ok, 2 config error, 3 data error, 4 numeric failure.
"""

from __future__ import annotations

import dataclasses
import functools
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import click
import numpy as np

from patclass import attribution as attr_mod
from patclass import metrics as metrics_mod
from patclass.config import (
    PipelineConfig,
    config_reference,
    load_pipeline_config,
)
from patclass.corpus import filter_patent, make_document, read_corpus
from patclass.errors import (
    CheckpointError,
    ConfigError,
    DatasetError,
    PatclassError,
)
from patclass.nn.checkpoint import load_checkpoint, save_checkpoint
from patclass.nn.encoder import PrecomputedFeatures, build_vocab
from patclass.nn.model import Model
from patclass.nn.train import (
    predict,
    predict_proba,
    train_model,
    write_epoch_log,
)
from patclass.taxonomy import Taxonomy, classes_of
from patclass.weaklabel import (
    DatasetSplit,
    Labeler,
    LabelingReport,
    SPLIT_NAMES,
    build_dataset,
    read_dataset,
    write_dataset,
)


def _cli_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except PatclassError as exc:
            click.echo(f"error: {exc.category}: {exc}", err=True)
            sys.exit(exc.exit_code)

    return wrapper


def _config_epilog() -> str:
    lines = [f"  {key:<28} {default}" for key, default in config_reference()]
    return (
        "Configuration keys and defaults (-O key=value overrides):\n\n\b\n"
        + "\n".join(lines)
    )


@click.group(epilog=_config_epilog())
@click.option(
    "-c",
    "--config",
    "config_path",
    type=click.Path(),
    default=None,
    help="Pipeline YAML config file.",
)
@click.option(
    "-O",
    "--override",
    "overrides",
    multiple=True,
    metavar="KEY=VALUE",
    help="Override a config key (dotted path), e.g. -O labeling.k=2.",
)
@click.pass_context
def main(ctx, config_path, overrides):
    """Weakly supervised hierarchical patent classification pipeline."""
    ctx.obj = (config_path, overrides)


def _cfg(ctx) -> PipelineConfig:
    config_path, overrides = ctx.obj
    return load_pipeline_config(config_path, overrides)


def _ensure_dir(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    return path


def _labeling_cfg(cfg: PipelineConfig, fields: str | None):
    labeling = cfg.labeling
    if fields:
        labeling = dataclasses.replace(labeling, fields_to_scan=tuple(
            f.strip() for f in fields.split(",") if f.strip()
        ))
    return labeling


# --- label ------------------------------------------------------------------

_WORKER_LABELER: Labeler | None = None


def _init_label_worker(taxonomy: Taxonomy, labeling_cfg) -> None:
    global _WORKER_LABELER
    _WORKER_LABELER = Labeler(taxonomy, labeling_cfg)


def _label_one(doc):
    bits = _WORKER_LABELER.label_document(doc)
    return doc.id, bits


@main.command()
@click.option("--corpus", "corpus_path", type=click.Path(), default=None)
@click.option("--out", "out_path", type=click.Path(), default=None)
@click.option("--fields", default=None, help="Comma-separated fields to scan.")
@click.option("--workers", default=1, show_default=True)
@click.pass_context
@_cli_errors
def label(ctx, corpus_path, out_path, fields, workers):
    """Label every filtered corpus document; write per-document JSONL."""
    cfg = _cfg(ctx)
    taxonomy = cfg.taxonomy()
    labeling = _labeling_cfg(cfg, fields)
    labeler = Labeler(taxonomy, labeling)
    corpus = corpus_path or cfg.corpus_path()
    out = out_path or os.path.join(_ensure_dir(cfg.paths.report_dir), "labels.jsonl")
    docs = []
    n_skipped = 0
    for patent in read_corpus(corpus):
        if not filter_patent(patent):
            n_skipped += 1
            continue
        docs.append(make_document(patent))
    if workers > 1:
        with ProcessPoolExecutor(
            max_workers=workers,
            initializer=_init_label_worker,
            initargs=(taxonomy, labeling),
        ) as pool:
            results = list(pool.map(_label_one, docs, chunksize=16))
    else:
        results = [(doc.id, labeler.label_document(doc)) for doc in docs]
    with open(out, "w", encoding="utf-8", newline="") as fh:
        for doc_id, bits in results:
            fh.write(
                json.dumps(
                    {
                        "id": doc_id,
                        "bits": [int(b) for b in bits],
                        "codes": classes_of(taxonomy, bits),
                    },
                    sort_keys=True,
                )
                + "\n"
            )
    click.echo(f"labeled {len(results)} documents ({n_skipped} filtered out) -> {out}")


# --- build-dataset ----------------------------------------------------------


@main.command("build-dataset")
@click.option("--corpus", "corpus_path", type=click.Path(), default=None)
@click.option("--out-dir", type=click.Path(), default=None)
@click.option("--fields", default=None, help="Comma-separated fields to scan.")
@click.pass_context
@_cli_errors
def build_dataset_cmd(ctx, corpus_path, out_dir, fields):
    """Build labeled train/val/test CSV splits plus a labeling report."""
    cfg = _cfg(ctx)
    taxonomy = cfg.taxonomy()
    labeling = _labeling_cfg(cfg, fields)
    corpus = corpus_path or cfg.corpus_path()
    directory = _ensure_dir(out_dir or cfg.paths.dataset_dir)
    split, report = build_dataset(taxonomy, labeling, read_corpus(corpus))
    write_dataset(split, directory, taxonomy)
    with open(os.path.join(directory, "labeling_report.txt"), "w", encoding="utf-8") as fh:
        fh.write(report.format_text() + "\n")
    with open(os.path.join(directory, "labeling_report.json"), "w", encoding="utf-8") as fh:
        fh.write(report.to_json() + "\n")
    sizes = ", ".join(f"{name}={report.sizes_per_split[name]}" for name in SPLIT_NAMES)
    click.echo(f"dataset written to {directory} ({sizes})")


# --- train ------------------------------------------------------------------


def _split_arrays(split: DatasetSplit, name: str):
    examples = split[name]
    tokens = [list(ex.text_tokens) for ex in examples]
    labels = (
        np.stack([ex.bits for ex in examples])
        if examples
        else np.zeros((0, 0), dtype=np.int8)
    )
    ids = [ex.id for ex in examples]
    return tokens, labels, ids


def _features_or_tokens(provider, tokens, ids):
    if provider is None:
        return tokens
    return provider.matrix(ids)


def _load_provider(path: str | None, cfg: PipelineConfig):
    if path is None:
        return None
    provider = PrecomputedFeatures.load(path)
    if provider.dim != cfg.model.feature_dim:
        raise DatasetError(
            f"embedding dimension {provider.dim} does not match configured "
            f"feature_dim {cfg.model.feature_dim}"
        )
    return provider


def _check_loss_cfg(cfg: PipelineConfig, taxonomy: Taxonomy):
    if len(cfg.loss.beta) != len(taxonomy):
        raise ConfigError(
            f"loss weights cover {len(cfg.loss.beta)} classes but the "
            f"taxonomy has {len(taxonomy)}; set loss.beta and loss.gamma"
        )


@main.command()
@click.option("--dataset-dir", type=click.Path(), default=None)
@click.option("--model", "model_kind", type=click.Choice(["flat", "hier"]), default=None)
@click.option("--checkpoint-dir", type=click.Path(), default=None)
@click.option("--embeddings", type=click.Path(), default=None,
              help="Precomputed id->vector JSONL; trains the classifier only.")
@click.pass_context
@_cli_errors
def train(ctx, dataset_dir, model_kind, checkpoint_dir, embeddings):
    """Train a classifier; writes a checkpoint and a per-epoch CSV log."""
    cfg = _cfg(ctx)
    taxonomy = cfg.taxonomy()
    _check_loss_cfg(cfg, taxonomy)
    model_cfg = cfg.model if model_kind is None else dataclasses.replace(cfg.model, kind=model_kind)
    split = read_dataset(dataset_dir or cfg.paths.dataset_dir, taxonomy)
    train_tokens, train_labels, train_ids = _split_arrays(split, "train")
    val_tokens, val_labels, val_ids = _split_arrays(split, "validation")
    provider = _load_provider(embeddings, cfg)
    if provider is None:
        vocab = build_vocab(train_tokens, model_cfg.vocab_size)
        model = Model.build(model_cfg, taxonomy, vocab, seed=cfg.train.seed)
    else:
        model = Model.build(model_cfg, taxonomy, None, seed=cfg.train.seed)
    result = train_model(
        model,
        _features_or_tokens(provider, train_tokens, train_ids),
        train_labels,
        _features_or_tokens(provider, val_tokens, val_ids),
        val_labels,
        cfg.train,
        cfg.loss,
    )
    directory = _ensure_dir(checkpoint_dir or cfg.paths.checkpoint_dir)
    ckpt_path = os.path.join(directory, f"{model_cfg.kind}.npz")
    save_checkpoint(result.model, ckpt_path)
    log_path = os.path.join(directory, f"{model_cfg.kind}_epochs.csv")
    write_epoch_log(result.log, log_path)
    best = result.log[result.best_epoch - 1]
    click.echo(
        f"trained {model_cfg.kind} for {result.stopped_epoch} epoch(s); "
        f"best epoch {result.best_epoch} (val_loss={best.val_loss:.6f}) -> {ckpt_path}"
    )


# --- evaluate / curves -------------------------------------------------------


def _load_model(cfg: PipelineConfig, checkpoint: str | None, kind_flag: str | None) -> Model:
    if checkpoint is None:
        kind = kind_flag or cfg.model.kind
        checkpoint = os.path.join(cfg.paths.checkpoint_dir, f"{kind}.npz")
    return load_checkpoint(checkpoint)


def _model_probs(model: Model, provider, tokens, labels, ids) -> np.ndarray:
    if model.has_encoder:
        xs = tokens
    else:
        if provider is None:
            raise CheckpointError(
                "checkpoint was trained on precomputed embeddings; "
                "pass --embeddings"
            )
        xs = provider.matrix(ids)
    probs = np.zeros((labels.shape[0], len(model.codes)))
    for start in range(0, labels.shape[0], 256):
        end = min(start + 256, labels.shape[0])
        probs[start:end] = predict_proba(model, xs[start:end])
    return probs


def _check_codes(model: Model, taxonomy: Taxonomy):
    if tuple(model.codes) != taxonomy.codes:
        raise CheckpointError(
            "checkpoint class order does not match the configured taxonomy"
        )


@main.command()
@click.option("--dataset-dir", type=click.Path(), default=None)
@click.option("--checkpoint", type=click.Path(), default=None)
@click.option("--model", "model_kind", type=click.Choice(["flat", "hier"]), default=None)
@click.option("--split", "split_name", type=click.Choice(SPLIT_NAMES), default="test",
              show_default=True)
@click.option("--report-dir", type=click.Path(), default=None)
@click.option("--embeddings", type=click.Path(), default=None)
@click.pass_context
@_cli_errors
def evaluate(ctx, dataset_dir, checkpoint, model_kind, split_name, report_dir, embeddings):
    """Score a checkpoint: whole hierarchy, each level, each class."""
    cfg = _cfg(ctx)
    taxonomy = cfg.taxonomy()
    model = _load_model(cfg, checkpoint, model_kind)
    _check_codes(model, taxonomy)
    split = read_dataset(dataset_dir or cfg.paths.dataset_dir, taxonomy)
    tokens, labels, ids = _split_arrays(split, split_name)
    if labels.shape[0] == 0:
        raise DatasetError(f"split {split_name!r} is empty")
    provider = _load_provider(embeddings, cfg)
    probs = _model_probs(model, provider, tokens, labels, ids)
    report = metrics_mod.evaluate_report(
        taxonomy, probs, labels, threshold=cfg.eval.threshold
    )
    directory = _ensure_dir(report_dir or cfg.paths.report_dir)
    text_path = os.path.join(directory, f"eval_{split_name}.txt")
    with open(text_path, "w", encoding="utf-8") as fh:
        fh.write(report.format_text() + "\n")
    with open(os.path.join(directory, f"eval_{split_name}.json"), "w", encoding="utf-8") as fh:
        fh.write(report.to_json() + "\n")
    click.echo(report.format_text())
    click.echo(f"report written to {text_path}")


@main.command()
@click.option("--dataset-dir", type=click.Path(), default=None)
@click.option("--checkpoint", type=click.Path(), default=None)
@click.option("--model", "model_kind", type=click.Choice(["flat", "hier"]), default=None)
@click.option("--split", "split_name", type=click.Choice(SPLIT_NAMES), default="test",
              show_default=True)
@click.option("--out", "out_path", type=click.Path(), default=None)
@click.option("--embeddings", type=click.Path(), default=None)
@click.pass_context
@_cli_errors
def curves(ctx, dataset_dir, checkpoint, model_kind, split_name, out_path, embeddings):
    """Precision-recall sweep per class (and the whole hierarchy) as CSV."""
    cfg = _cfg(ctx)
    taxonomy = cfg.taxonomy()
    model = _load_model(cfg, checkpoint, model_kind)
    _check_codes(model, taxonomy)
    split = read_dataset(dataset_dir or cfg.paths.dataset_dir, taxonomy)
    tokens, labels, ids = _split_arrays(split, split_name)
    if labels.shape[0] == 0:
        raise DatasetError(f"split {split_name!r} is empty")
    provider = _load_provider(embeddings, cfg)
    probs = _model_probs(model, provider, tokens, labels, ids)
    out = out_path or os.path.join(
        _ensure_dir(cfg.paths.report_dir), f"pr_curves_{split_name}.csv"
    )
    scopes = [metrics_mod.whole_scope(taxonomy)]
    scopes.extend(metrics_mod.class_scope(code) for code in taxonomy.codes)
    with open(out, "w", encoding="utf-8", newline="") as fh:
        fh.write("scope,threshold,hP,hR\n")
        for scope in scopes:
            for thr, p, r in metrics_mod.pr_sweep(taxonomy, scope, probs, labels):
                fh.write(f"{scope.name},{thr:.2f},{p:.6f},{r:.6f}\n")
    click.echo(f"PR curves written to {out}")


# --- predict ------------------------------------------------------------------


@main.command("predict")
@click.option("--corpus", "corpus_path", type=click.Path(), default=None)
@click.option("--checkpoint", type=click.Path(), default=None)
@click.option("--model", "model_kind", type=click.Choice(["flat", "hier"]), default=None)
@click.option("--out", "out_path", type=click.Path(), default=None)
@click.option("--threshold", type=float, default=None)
@click.option("--embeddings", type=click.Path(), default=None)
@click.pass_context
@_cli_errors
def predict_cmd(ctx, corpus_path, checkpoint, model_kind, out_path, threshold, embeddings):
    """Predict probabilities and assigned classes for corpus records."""
    cfg = _cfg(ctx)
    taxonomy = cfg.taxonomy()
    model = _load_model(cfg, checkpoint, model_kind)
    _check_codes(model, taxonomy)
    provider = _load_provider(embeddings, cfg)
    if not model.has_encoder and provider is None:
        raise CheckpointError(
            "checkpoint was trained on precomputed embeddings; pass --embeddings"
        )
    thr = cfg.eval.threshold if threshold is None else threshold
    corpus = corpus_path or cfg.corpus_path()
    out = out_path or os.path.join(_ensure_dir(cfg.paths.report_dir), "predictions.jsonl")
    n = 0
    with open(out, "w", encoding="utf-8", newline="") as fh:
        for patent in read_corpus(corpus):
            doc = make_document(patent)
            text = list(doc.title_tokens + doc.abstract_tokens)
            if model.has_encoder:
                y, assigned = predict(model, text, threshold=thr)
            else:
                y, assigned = predict(model, provider.get(doc.id), threshold=thr)
            fh.write(
                json.dumps(
                    {
                        "id": doc.id,
                        "probabilities": {
                            code: round(float(y[i]), 6)
                            for i, code in enumerate(model.codes)
                        },
                        "assigned": assigned,
                    },
                    sort_keys=True,
                )
                + "\n"
            )
            n += 1
    click.echo(f"predictions for {n} documents -> {out}")


# --- explain ------------------------------------------------------------------


@main.command()
@click.option("--corpus", "corpus_path", type=click.Path(), default=None)
@click.option("--checkpoint", type=click.Path(), default=None)
@click.option("--model", "model_kind", type=click.Choice(["flat", "hier"]), default=None)
@click.option("--id", "doc_id", required=True)
@click.option("--class", "class_code", default=None, help="Target class code.")
@click.option("--steps", type=int, default=None)
@click.option("--format", "fmt", type=click.Choice(["html", "ansi"]), default="html",
              show_default=True)
@click.option("--out", "out_path", type=click.Path(), default=None)
@click.pass_context
@_cli_errors
def explain(ctx, corpus_path, checkpoint, model_kind, doc_id, class_code, steps, fmt, out_path):
    """Integrated-gradients token attribution for one document."""
    cfg = _cfg(ctx)
    taxonomy = cfg.taxonomy()
    model = _load_model(cfg, checkpoint, model_kind)
    _check_codes(model, taxonomy)
    attribution_cfg = cfg.attribution
    if class_code is not None:
        attribution_cfg = dataclasses.replace(attribution_cfg, target_class=class_code)
    if steps is not None:
        attribution_cfg = dataclasses.replace(attribution_cfg, steps=steps)
    corpus = corpus_path or cfg.corpus_path()
    doc = None
    for patent in read_corpus(corpus):
        if patent.id == doc_id:
            doc = make_document(patent)
            break
    if doc is None:
        raise DatasetError(f"document {doc_id!r} not found in {corpus}")
    text = list(doc.title_tokens + doc.abstract_tokens)
    if not text:
        raise DatasetError(f"document {doc_id!r} has no usable text")
    attributions, completeness = attr_mod.integrated_gradients(
        model, text, attribution_cfg
    )
    y, assigned = predict(model, text, threshold=cfg.eval.threshold)
    probabilities = {code: float(y[i]) for i, code in enumerate(model.codes)}
    rendered = attr_mod.render_report(
        doc_id, attributions, probabilities, assigned,
        attribution_cfg.target_class, fmt=fmt,
    )
    if fmt == "ansi" and out_path is None:
        click.echo(rendered, nl=False)
    else:
        safe_class = attribution_cfg.target_class.replace("/", "-")
        ext = "html" if fmt == "html" else "txt"
        out = out_path or os.path.join(
            _ensure_dir(cfg.paths.report_dir), f"attr_{doc_id}_{safe_class}.{ext}"
        )
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(rendered)
        csv_out = os.path.splitext(out)[0] + ".csv"
        with open(csv_out, "w", encoding="utf-8", newline="") as fh:
            fh.write(attr_mod.attributions_to_csv(attributions))
        click.echo(
            f"attribution written to {out} "
            f"(completeness gap {completeness.relative_gap:.4%})"
        )


# --- report -------------------------------------------------------------------


@main.command()
@click.option("--dataset-dir", type=click.Path(), default=None)
@click.option("--report-dir", type=click.Path(), default=None)
@click.pass_context
@_cli_errors
def report(ctx, dataset_dir, report_dir):
    """Print the dataset class-count table and any saved eval reports."""
    cfg = _cfg(ctx)
    taxonomy = cfg.taxonomy()
    directory = dataset_dir or cfg.paths.dataset_dir
    split = read_dataset(directory, taxonomy)
    counts = LabelingReport(
        codes=taxonomy.codes,
        positives_per_split={
            name: [int(sum(ex.bits[i] for ex in split[name])) for i in range(len(taxonomy))]
            for name in SPLIT_NAMES
        },
        sizes_per_split={name: len(split[name]) for name in SPLIT_NAMES},
    )
    click.echo(counts.format_text())
    reports_dir = report_dir or cfg.paths.report_dir
    for name in SPLIT_NAMES:
        path = os.path.join(reports_dir, f"eval_{name}.json")
        if os.path.exists(path):
            with open(path, encoding="utf-8") as fh:
                click.echo(f"\nevaluation ({name}):")
                click.echo(metrics_mod.EvalReport.from_json(fh.read()).format_text())


if __name__ == "__main__":
    main()
