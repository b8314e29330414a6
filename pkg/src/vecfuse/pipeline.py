"""End-to-end pipeline orchestration.

Stage order: per embedding source, read, standardize and merge rows, then
column-normalize; fuse when two sources are enabled; load, rescale and
filter the graph edges; build the association matrix; retrofit; evaluate.
Each stage's output can be cached to disk and a cached stage is skipped
on the next run; cached and straight-through runs produce identical bits.
"""

from __future__ import annotations

import functools
import os
import sys

from . import evaluation, interpolate, kgraph, matrixio, rowmerge
from .config import EmbeddingSource, PipelineConfig
from .errors import ConfigError, StageError
from .labels import LemmaRuleSet, DEFAULT_RULES, Standardizer, \
    default_rules, load_exceptions, load_stopwords, tokenize
from .matrixio import LabeledMatrix
from .retrofit import assemble_problem, retrofit


def _stage(name):
    """Decorator attaching the stage name to any failure."""
    def wrap(fn):
        @functools.wraps(fn)
        def run(*args, **kwargs):
            try:
                return fn(*args, **kwargs)
            except StageError:
                raise
            except Exception as exc:
                raise StageError(name, exc) from exc
        return run
    return wrap


class StageCache:
    """Optional on-disk cache of intermediate artifacts."""

    def __init__(self, directory=None):
        self.directory = directory
        if directory:
            os.makedirs(directory, exist_ok=True)

    def _paths(self, name):
        return (os.path.join(self.directory, name + ".emb1"),
                os.path.join(self.directory, name + ".labels"))

    def load_matrix(self, name):
        if not self.directory:
            return None
        matrix_path, labels_path = self._paths(name)
        if os.path.exists(matrix_path) and os.path.exists(labels_path):
            return matrixio.read_native(matrix_path, labels_path)
        return None

    def store_matrix(self, name, matrix):
        if self.directory:
            matrix_path, labels_path = self._paths(name)
            matrixio.write_native(matrix, matrix_path, labels_path)

    def load_assertions(self, name, standardizer):
        if not self.directory:
            return None
        path = os.path.join(self.directory, name + ".tsv")
        if os.path.exists(path):
            return kgraph.load_assertions(path, standardizer=standardizer)
        return None

    def store_assertions(self, name, assertions):
        if self.directory:
            kgraph.write_assertions(os.path.join(self.directory, name + ".tsv"),
                                    assertions)


def build_standardizer(config: PipelineConfig, vocab=None) -> Standardizer:
    stopwords = load_stopwords(config.stopwords_path) \
        if config.stopwords_path else None
    if config.exceptions_path:
        rules = LemmaRuleSet(rules=DEFAULT_RULES,
                             exceptions=load_exceptions(config.exceptions_path))
    else:
        rules = default_rules()
    return Standardizer(rules=rules, stopwords=stopwords,
                        vocab=vocab if config.vocab_check else None)


def token_vocabulary(labels) -> set:
    """All single tokens occurring in a label list, for lemma validation."""
    vocab = set()
    for label in labels:
        vocab.update(tokenize(label))
    return vocab


def matrix_standardizer(config: PipelineConfig, matrix: LabeledMatrix) -> Standardizer:
    """Standardizer whose lemma checks use the matrix's token vocabulary."""
    vocab = token_vocabulary(lab.rsplit("/", 1)[-1] for lab in matrix.labels) \
        if config.standardize_enabled and config.vocab_check else None
    return build_standardizer(config, vocab=vocab)


@_stage("ingest")
def ingest_source(source: EmbeddingSource, cache: StageCache) -> LabeledMatrix:
    cached = cache.load_matrix(f"ingest_{source.id}")
    if cached is not None:
        return cached
    if source.format == "glove_text":
        matrix = matrixio.read_text_embeddings(source.path, header=False,
                                               on_duplicate=source.on_duplicate)
    elif source.format == "word2vec_text":
        matrix = matrixio.read_text_embeddings(source.path, header=True,
                                               on_duplicate=source.on_duplicate)
    elif source.format == "word2vec_binary":
        matrix = matrixio.read_word2vec_binary(source.path)
    elif source.format == "native":
        matrix = matrixio.read_native(source.path, source.labels_path)
    else:
        raise ConfigError(f"unknown embedding format {source.format!r}")
    cache.store_matrix(f"ingest_{source.id}", matrix)
    return matrix


@_stage("merge")
def prepare_source(config: PipelineConfig, source: EmbeddingSource,
                   cache: StageCache) -> LabeledMatrix:
    """Standardize, merge and column-normalize one embedding source."""
    cached = cache.load_matrix(f"prepared_{source.id}")
    if cached is not None:
        return cached
    matrix = ingest_source(source, cache)
    if config.standardize_enabled:
        vocab = token_vocabulary(matrix.labels) if config.vocab_check else None
        standardizer = build_standardizer(config, vocab=vocab)
        plan, kept = rowmerge.build_merge_plan(matrix, standardizer,
                                               language=source.language)
        if len(kept) != len(matrix):
            matrix = matrix.take(kept)
        matrix = rowmerge.merge_standardized(matrix, plan,
                                             strategy=config.merge_strategy)
    if config.column_norm == "l1":
        matrix = rowmerge.l1_normalize_columns(matrix)
    elif config.column_norm == "l2":
        matrix = rowmerge.l2_normalize_columns(matrix)
    cache.store_matrix(f"prepared_{source.id}", matrix)
    return matrix


@_stage("fuse")
def fuse_sources(config: PipelineConfig, prepared: list, cache: StageCache,
                 singular_values_path=None) -> LabeledMatrix:
    if len(prepared) == 1:
        return prepared[0]
    if len(prepared) != 2:
        raise ConfigError(f"fusion needs exactly 2 enabled sources, got {len(prepared)}")
    cached = cache.load_matrix("fused")
    if cached is not None and singular_values_path is None:
        return cached
    a, b = (rowmerge.l2_normalize_rows(m) for m in prepared)
    out_dims = config.fusion_out_dims
    if out_dims is not None and out_dims > a.dims + b.dims:
        raise ConfigError(f"out_dims {out_dims} exceeds {a.dims + b.dims} "
                          "concatenated dimensions")
    result = interpolate.fuse(a, b, k=config.fusion_k, out_dims=out_dims,
                              discount=config.fusion_discount)
    if singular_values_path is not None:
        with open(singular_values_path, "w", encoding="utf-8", newline="\n") as f:
            for value in result.singular_values:
                f.write(f"{float(value)!r}\n")
    cache.store_matrix("fused", result.matrix)
    return result.matrix


@_stage("graph")
def load_graphs(config: PipelineConfig, standardizer: Standardizer,
                cache: StageCache) -> list:
    """Load, prune, rescale and term-filter all enabled edge lists."""
    cached = cache.load_assertions("graph_filtered", standardizer)
    if cached is not None:
        return cached
    filtered_pool = []
    unfiltered_pool = []
    for graph in config.enabled_graphs():
        assertions = kgraph.load_assertions(graph.path, standardizer=standardizer)
        if config.excluded_graph_sources:
            excluded = set(config.excluded_graph_sources)
            assertions = [a for a in assertions if a.source not in excluded]
        (filtered_pool if graph.apply_term_filter else unfiltered_pool).extend(assertions)
    combined = filtered_pool + unfiltered_pool
    if not combined:
        return []
    combined = kgraph.rescale_by_source(combined)
    n_filtered = len(filtered_pool)
    kept = kgraph.filter_terms(combined[:n_filtered],
                               min_count=config.filter_min_count,
                               max_words=config.filter_max_words)
    kept.extend(combined[n_filtered:])
    cache.store_assertions("graph_filtered", kept)
    return kept


@_stage("retrofit")
def retrofit_matrix(config: PipelineConfig, matrix: LabeledMatrix,
                    assertions: list, cache: StageCache,
                    checkpoint_dir=None) -> LabeledMatrix:
    cached = cache.load_matrix("retrofitted")
    if cached is not None and checkpoint_dir is None:
        return cached
    normalized = rowmerge.l2_normalize_rows(matrix)
    assoc = kgraph.build_association(assertions, extra_vocab=normalized.labels)
    problem = assemble_problem(normalized, assoc,
                               self_loops=config.retrofit_self_loops)
    result = retrofit(problem, iterations=config.retrofit_iterations,
                      checkpoint_dir=checkpoint_dir)
    cache.store_matrix("retrofitted", result)
    return result


@_stage("evaluate")
def evaluate_matrix(config: PipelineConfig, matrix: LabeledMatrix) -> list:
    """One EvalReport per configured dataset and split."""
    digit_fallback = any(s.format.startswith("word2vec")
                         for s in config.enabled_embeddings())
    if config.standardize_enabled:
        vocab = token_vocabulary(lab.rsplit("/", 1)[-1] for lab in matrix.labels) \
            if config.vocab_check else None
        standardizer = build_standardizer(config, vocab=vocab)
    else:
        standardizer = None
    reports = []
    for ds in config.evaluations:
        if ds.path:
            pairs = evaluation.load_gold(ds.path, format=ds.format,
                                         language=ds.language)
            for split in ds.splits:
                reports.append(_run_eval(config, matrix, pairs, ds, split,
                                         standardizer, digit_fallback))
        for split, path in (("dev", ds.dev_path), ("test", ds.test_path)):
            if path:
                pairs = evaluation.load_gold(path, format=ds.format,
                                             language=ds.language)
                reports.append(_run_eval(config, matrix, pairs, ds, "all",
                                         standardizer, digit_fallback,
                                         split_label=split))
    return reports


def _run_eval(config, matrix, pairs, ds, split, standardizer, digit_fallback,
              split_label=None):
    report = evaluation.evaluate(
        matrix, pairs, split=split, dataset_id=ds.id,
        num_chunks=ds.num_chunks, test_chunk=ds.test_chunk,
        standardizer=standardizer, drop_oov=ds.drop_oov,
        digit_fallback=digit_fallback,
        standardize=config.standardize_enabled)
    if split_label is not None:
        report.split = split_label
    return report


def run_pipeline(config: PipelineConfig, cache_dir=None, verbose=True) -> dict:
    """Run every configured stage; returns the output artifact paths,
    the final matrix and the evaluation reports."""
    cache = StageCache(cache_dir)
    prepared = [prepare_source(config, source, cache)
                for source in config.enabled_embeddings()]
    matrix = fuse_sources(config, prepared, cache)

    if config.enabled_graphs():
        standardizer = matrix_standardizer(config, matrix)
        assertions = load_graphs(config, standardizer, cache)
        if assertions:
            matrix = retrofit_matrix(config, matrix, assertions, cache)

    os.makedirs(config.output_dir, exist_ok=True)
    matrix_path = os.path.join(config.output_dir, config.output_matrix)
    labels_path = os.path.join(config.output_dir, config.output_labels)
    matrixio.write_native(matrix, matrix_path, labels_path)

    reports = []
    report_path = None
    if config.evaluations:
        reports = evaluate_matrix(config, matrix)
        report_path = os.path.join(config.output_dir, config.output_report)
        evaluation.write_report(reports, report_path)
        if verbose:
            print(evaluation.format_report_table(reports), file=sys.stdout)
    return {"matrix": matrix, "reports": reports,
            "matrix_path": matrix_path, "labels_path": labels_path,
            "report_path": report_path}
