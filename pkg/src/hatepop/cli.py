"""Command line front end: ``hatepop <command> [options]``.

Every report embeds the resolved configuration and lands in
``<out>/<task>/<tag>/``; the tag defaults to a fingerprint of that
configuration, so identical runs write identical files to the same place.
Exit codes: 0 success, 1 runtime failure, 2 configuration or input error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .corpus import (
    INTERACTION_KINDS,
    AnnotationConflictError,
    AnnotationParseError,
    CorpusError,
    _count_labels,
    availability_deltas,
    classify_users,
    interaction_histogram,
    label_distribution,
    load_annotations,
    load_corpus,
    production_svg,
    select_tweets,
    token_share,
    user_production_histogram,
    write_corpus,
)
from .evaluation import (
    ablate,
    cross_validate,
    holdout_evaluate,
    interaction_chi2,
    rank_features_ig,
    stratified_holdout,
    stratified_kfold,
    take_rows,
)
from .features import (
    GROUPS,
    LexiconSet,
    build_matrix,
    read_feature_csv,
    targets,
    training_columns,
)
from .models import LinearSVM, LogisticRegression, load_model, save_model
from .synth import DETECT_SPEC, published_marginals_corpus, synth_corpus
from .textvec import CharNgramTfidfVectorizer, Standardizer

log = logging.getLogger("hatepop")

# fixed offsets from --seed for each consumer of randomness
FOLD_SEED_OFFSET = 1
MODEL_SEED_OFFSET = 2
HOLDOUT_SEED_OFFSET = 3

MKR_PATTERNS = ("#MKR", "@MyKitchenRules", "#MyKitchenRules")
SUBCOMMANDS = ("ingest", "stats", "featurize", "train", "evaluate", "run", "infogain",
               "chisq", "ablate", "predict", "synth")


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------- helpers

def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
                    encoding="utf-8")


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _resolved_config(args) -> dict:
    skip = {"func", "config"}
    out = {}
    for key, value in sorted(vars(args).items()):
        if key in skip:
            continue
        if key == "command" and value == "run":
            value = "evaluate"
        out[key] = str(value) if isinstance(value, Path) else value
    return out


def _fingerprint(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:12]


def _output_dir(args, task: str, config: dict) -> Path:
    tag = args.tag or _fingerprint(config)
    path = Path(args.out) / task / tag
    path.mkdir(parents=True, exist_ok=True)
    return path


def _read_key_values(path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from None
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        values[key.replace("-", "_")] = value
    return values


def _require_file(path, what: str) -> Path:
    if path is None:
        raise ConfigError(f"--{what} is required")
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"{what} file not found: {p}")
    return p


def _load(args):
    annotations = load_annotations(_require_file(args.annotations, "annotations"))
    tweets = _require_file(args.tweets, "tweets")
    corpus = load_corpus(annotations, tweets, reference_time=args.reference_time)
    for err in corpus.record_errors:
        log.warning("record %s (line %d): %s", err.tweet_id, err.lineno, err.message)
    return corpus


def _lexicons(args) -> LexiconSet:
    if args.lexicons is None:
        return LexiconSet.default()
    if not Path(args.lexicons).is_dir():
        raise ConfigError(f"lexicon directory not found: {args.lexicons}")
    return LexiconSet.from_dir(args.lexicons)


def _groups(args) -> list[str]:
    groups = [g.strip() for g in args.groups.split(",") if g.strip()] if args.groups else list(GROUPS)
    unknown = [g for g in groups if g not in GROUPS]
    if unknown:
        raise ConfigError(f"groups: unknown group(s) {unknown}; choose from {list(GROUPS)}")
    return groups


def _make_model(args):
    seed = args.seed + MODEL_SEED_OFFSET
    if args.model == "logistic":
        lr = args.learning_rate if args.learning_rate == "auto" else float(args.learning_rate)
        return LogisticRegression(learning_rate=lr, max_epochs=args.max_epochs,
                                  l2_lambda=args.l2_lambda, tolerance=args.tolerance, seed=seed)
    return LinearSVM(l2_lambda=args.l2_lambda, max_epochs=args.max_epochs,
                     tolerance=args.tolerance, seed=seed)


def _validate_run(args) -> None:
    if args.task == "detect":
        if args.target not in (None, "hate"):
            raise ConfigError(f"target: detect task predicts 'hate', got {args.target!r}")
        if args.subset != "all":
            raise ConfigError("subset: only the popularity task accepts hate/non-hate subsets")
        args.target = "hate"
    else:
        if args.target is None:
            raise ConfigError("target: popularity task needs --target liked|retweeted|replied")
        if args.target == "hate":
            raise ConfigError("target: 'hate' is the detect task's target")
    if args.learning_rate != "auto":
        try:
            if float(args.learning_rate) <= 0:
                raise ValueError
        except ValueError:
            raise ConfigError(f"learning-rate: expected a positive number or 'auto', "
                              f"got {args.learning_rate!r}") from None
    if args.model == "hinge" and args.l2_lambda <= 0:
        raise ConfigError("l2-lambda: the hinge model needs a positive value")
    if args.folds < 2:
        raise ConfigError("folds: must be >= 2")


class _Dataset:
    """Rows, labels and preprocessing for one configured task."""

    def __init__(self, args, corpus):
        self.args = args
        self.corpus = corpus
        self.tweets = select_tweets(corpus, args.subset)
        subset_ids = {t.tweet_id for t in self.tweets}
        self.mask = np.array([t.tweet_id in subset_ids for t in corpus.tweets], dtype=bool)
        try:
            self.y = targets(corpus, args.target, args.raw_replies)[self.mask]
        except ValueError as exc:
            raise ConfigError(f"raw-replies: {exc}") from None
        self.matrix = None
        if args.task == "detect" and args.features == "ngrams":
            self.X = [t.text for t in self.tweets]
            self.columns = None
            self.preprocessing = CharNgramTfidfVectorizer(
                ngram_min=args.ngram_min, ngram_max=args.ngram_max,
                lowercase=not args.keep_case, min_df=args.min_df,
                sublinear_tf=args.sublinear_tf)
        else:
            full = build_matrix(corpus, _lexicons(args), _groups(args)).rows(self.mask)
            self.columns = training_columns(full, args.target)
            self.matrix = full.select(self.columns)
            self.X = self.matrix.values
            self.preprocessing = Standardizer()

    def plan(self):
        return stratified_kfold(self.y, self.args.folds, self.args.seed + FOLD_SEED_OFFSET)


def _metrics_row(args, mean):
    return [args.task, args.target, args.subset, args.model,
            mean["accuracy"], mean["f1_positive"], mean["f1_weighted"],
            mean["precision"], mean["recall"]]


_METRICS_HEADER = ["task", "target", "subset", "model", "accuracy", "f1", "f1_weighted",
                   "precision", "recall"]


def _ig_matrix(args, corpus, mask):
    return build_matrix(corpus, _lexicons(args), _groups(args), include_user_id=True).rows(mask)


def _chisq_results(corpus, mode):
    return {kind: interaction_chi2(corpus, kind, mode).to_dict() for kind in INTERACTION_KINDS}


_CHISQ_HEADER = ["kind", "statistic", "df", "p_value", "p_value_raw"]


def _chisq_rows(results):
    return [[k, r["statistic"], r["df"], r["p_value"], r["p_value_raw"]] for k, r in results.items()]


# ---------------------------------------------------------------- commands

def cmd_synth(args) -> int:
    out = Path(args.out)
    extra = {}
    if args.preset == "published":
        corpus, extra = published_marginals_corpus(args.seed)
        spec = {"preset": "published"}
    else:
        spec_obj = DETECT_SPEC
        if args.sizes:
            try:
                n_none, n_hate = (int(v) for v in args.sizes.split(","))
            except ValueError:
                raise ConfigError("sizes: expected 'NON_HATE,HATE'") from None
            r = n_hate * 3 // 10
            spec_obj = replace(spec_obj, n_non_hate=n_none, n_racism=r, n_sexism=n_hate - r)
        if args.planted_rate is not None:
            spec_obj = replace(spec_obj, planted_rate=args.planted_rate)
        try:
            spec_obj.validate()
        except ValueError as exc:
            raise ConfigError(f"synth spec: {exc}") from None
        corpus = synth_corpus(spec_obj, args.seed)
        spec = {"preset": "detect", **spec_obj.to_dict()}
    out.mkdir(parents=True, exist_ok=True)
    write_corpus(corpus, out / "annotations.tsv", out / "tweets.jsonl", extra)
    _write_json(out / "synth.json", {"seed": args.seed, "spec": spec, "tweets": len(corpus),
                                      "unavailable_annotations": len(extra)})
    print(f"wrote {len(corpus)} tweets to {out}")
    return 0


def cmd_ingest(args) -> int:
    corpus = _load(args)
    config = _resolved_config(args)
    out = _output_dir(args, "ingest", config)
    report = {
        "config": config,
        "available": len(corpus),
        "unavailable": len(corpus.unavailable),
        "users": len(corpus.users),
        "reference_time": corpus.reference_time.isoformat(),
        "labels": label_distribution(corpus),
        "record_errors": [{"tweet_id": e.tweet_id, "line": e.lineno, "message": e.message}
                          for e in corpus.record_errors],
    }
    _write_json(out / "ingest.json", report)
    order = ["none", "racism", "sexism"]
    _write_csv(out / "unavailable.csv", ["tweet_id", "labels"],
               [[tid, "+".join(sorted((lab.value for lab in corpus.unavailable_labels[tid]),
                                      key=order.index))] for tid in corpus.unavailable])
    print(f"{len(corpus)} available, {len(corpus.unavailable)} unavailable -> {out}")
    return 0


def _reference_counts(path) -> dict:
    p = _require_file(path, "reference-counts")
    text = p.read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError:
        data = _read_key_values(p)
    try:
        return {k: int(v) for k, v in data.items()}
    except (TypeError, ValueError):
        raise ConfigError(f"reference-counts: values must be integers in {p}") from None


def cmd_stats(args) -> int:
    corpus = _load(args)
    reference = _reference_counts(args.reference_counts) if args.reference_counts else None
    config = _resolved_config(args)
    labels = label_distribution(corpus)
    histograms = {}
    for subset in ("all", "non-hate", "hate"):
        histograms[subset] = {}
        for kind in INTERACTION_KINDS:
            h = interaction_histogram(corpus, kind, subset)
            histograms[subset][kind] = {"bins": list(h.bins),
                                        "full": {str(k): v for k, v in h.full.items()}}
    production = user_production_histogram(corpus)
    shares = {
        "rt_hate": token_share(corpus, "hate", "RT"),
        "mkr_sexism": token_share(corpus, "sexism", MKR_PATTERNS, case_sensitive=False,
                                  strip_punctuation=True),
    }
    for pattern in args.token or ():
        shares[f"{pattern}_{args.token_subset}"] = token_share(
            corpus, args.token_subset, pattern, case_sensitive=not args.token_ignore_case,
            strip_punctuation=args.token_ignore_case)
    report = {
        "config": config,
        "labels": labels,
        "availability": {
            "available": len(corpus),
            "unavailable": len(corpus.unavailable),
            "unavailable_labels": _count_labels(corpus.unavailable_labels.values()),
            "deltas": availability_deltas(labels, reference) if reference else None,
        },
        "interactions": histograms,
        "users": classify_users(corpus),
        "production": {"users": len(production), "top": [[u, c] for u, c in production[:10]]},
        "token_shares": shares,
    }
    out = _output_dir(args, "stats", config)
    _write_json(out / "stats.json", report)
    _write_csv(out / "labels.csv", ["label", "count"], list(labels.items()))
    _write_csv(out / "interactions.csv", ["subset", "kind", "0", "1", "2", "3", "4", "5+"],
               [[s, k, *histograms[s][k]["bins"]] for s in histograms for k in INTERACTION_KINDS])
    _write_csv(out / "users.csv", ["user_type", "count"], list(report["users"].items()))
    _write_csv(out / "production.csv", ["user_id", "hate_tweets"], production)
    if args.svg:
        (out / "production.svg").write_text(production_svg(production), encoding="utf-8")
    print(f"stats -> {out}")
    return 0


def cmd_featurize(args) -> int:
    corpus = _load(args)
    matrix = build_matrix(corpus, _lexicons(args), _groups(args),
                          include_user_id=args.include_user_id)
    config = _resolved_config(args)
    out = _output_dir(args, "features", config)
    matrix.to_csv(out / "features.csv")
    if args.json:
        _write_json(out / "features.json", {"config": config, **matrix.to_dict()})
    print(f"{matrix.shape[0]} x {matrix.shape[1]} features -> {out}")
    return 0


def cmd_train(args) -> int:
    _validate_run(args)
    corpus = _load(args)
    data = _Dataset(args, corpus)
    if len(np.unique(data.y)) < 2:
        raise ConfigError("target: the selected rows contain a single class")
    config = _resolved_config(args)
    out = _output_dir(args, "train", config)
    model = _make_model(args)
    Xt = data.preprocessing.fit_transform(data.X)
    model.fit(Xt, data.y)
    if data.columns is None:
        data.preprocessing.save(out / "vectorizer.json")
        save_model(out / "model.json", model, list(data.preprocessing.get_feature_names_out()))
    else:
        save_model(out / "model.json", model, data.columns, scaler=data.preprocessing)
    _write_json(out / "train.json", {"config": config, "rows": int(len(data.y)),
                                     "positives": int(np.sum(data.y)),
                                     "final_loss": model.final_loss_, "epochs": model.n_epochs_})
    print(f"model -> {out / 'model.json'}")
    return 0


def cmd_run(args) -> int:
    _validate_run(args)
    if args.ablate and data_is_ngrams(args):
        raise ConfigError("ablate: needs tabular features (popularity task or --features tabular)")
    corpus = _load(args)
    data = _Dataset(args, corpus)
    config = _resolved_config(args)
    model = _make_model(args)
    kept = held = None
    X, y, matrix = data.X, data.y, data.matrix
    if args.holdout:
        try:
            kept, held = stratified_holdout(data.y, args.holdout, args.seed + HOLDOUT_SEED_OFFSET)
        except ValueError as exc:
            raise ConfigError(f"holdout: {exc}") from None
        X, y = take_rows(data.X, kept), data.y[kept]
        matrix = data.matrix.rows(kept) if data.matrix is not None else None
    plan = stratified_kfold(y, args.folds, args.seed + FOLD_SEED_OFFSET)
    cv = cross_validate(model, X, y, plan, data.preprocessing)
    report = {"config": config, "rows": int(len(data.y)), "positives": int(np.sum(data.y)),
              "columns": data.columns, "cv": cv.to_dict()}
    if held is not None:
        hm = holdout_evaluate(model, data.X, data.y, kept, held, data.preprocessing)
        report["holdout"] = {"rows": int(len(held)), "metrics": hm.to_dict()}
    out = _output_dir(args, args.task, config)
    _write_csv(out / "metrics.csv", _METRICS_HEADER, [_metrics_row(args, cv.mean)])
    if args.infogain:
        ranking = rank_features_ig(_ig_matrix(args, corpus, data.mask), data.y, bins=args.ig_bins)
        report["infogain"] = {"bins": args.ig_bins,
                              "ranking": [[e.feature, e.ig] for e in ranking]}
        _write_csv(out / "infogain.csv", ["feature", "ig"], [[e.feature, e.ig] for e in ranking])
    if args.chisq:
        results = _chisq_results(corpus, args.chisq_mode)
        report["chisq"] = {"mode": args.chisq_mode, "tests": results}
        _write_csv(out / "chisq.csv", _CHISQ_HEADER, _chisq_rows(results))
    if args.ablate:
        abl = ablate(matrix, y, plan, model, args.ablate, data.preprocessing)
        report["ablation"] = abl.to_dict()
        _write_csv(out / "ablation.csv", ["unit", "accuracy", "f1", "delta_accuracy", "delta_f1"],
                   [[r.unit, r.accuracy, r.f1, r.delta_accuracy, r.delta_f1] for r in abl.rows])
    _write_json(out / "report.json", report)
    m = cv.mean
    print(f"{args.task}/{args.target}/{args.subset}/{args.model}: "
          f"acc={m['accuracy']:.4f} f1={m['f1_positive']:.4f} -> {out}")
    return 0


def data_is_ngrams(args) -> bool:
    return args.task == "detect" and args.features == "ngrams"


def cmd_infogain(args) -> int:
    if args.target is None:
        raise ConfigError("target: --target liked|retweeted|replied|hate is required")
    corpus = _load(args)
    mask = np.array([t.tweet_id in {x.tweet_id for x in select_tweets(corpus, args.subset)}
                     for t in corpus.tweets], dtype=bool)
    try:
        y = targets(corpus, args.target, args.raw_replies)[mask]
    except ValueError as exc:
        raise ConfigError(f"raw-replies: {exc}") from None
    ranking = rank_features_ig(_ig_matrix(args, corpus, mask), y, bins=args.ig_bins)
    config = _resolved_config(args)
    out = _output_dir(args, "infogain", config)
    _write_json(out / "infogain.json", {"config": config, "bins": args.ig_bins,
                                        "ranking": [[e.feature, e.ig] for e in ranking]})
    _write_csv(out / "infogain.csv", ["feature", "ig"], [[e.feature, e.ig] for e in ranking])
    for e in ranking[:args.top]:
        print(f"{e.feature}\t{e.ig:.4f}")
    return 0


def cmd_chisq(args) -> int:
    corpus = _load(args)
    results = _chisq_results(corpus, args.chisq_mode)
    config = _resolved_config(args)
    out = _output_dir(args, "chisq", config)
    _write_json(out / "chisq.json", {"config": config, "mode": args.chisq_mode, "tests": results})
    _write_csv(out / "chisq.csv", _CHISQ_HEADER, _chisq_rows(results))
    for row in _chisq_rows(results):
        print("\t".join(str(v) for v in row))
    return 0


def cmd_ablate(args) -> int:
    _validate_run(args)
    if data_is_ngrams(args):
        raise ConfigError("ablate: needs tabular features (popularity task or --features tabular)")
    corpus = _load(args)
    data = _Dataset(args, corpus)
    plan = data.plan()
    abl = ablate(data.matrix, data.y, plan, _make_model(args), args.unit, data.preprocessing)
    config = _resolved_config(args)
    out = _output_dir(args, "ablate", config)
    _write_json(out / "ablation.json", {"config": config, **abl.to_dict()})
    _write_csv(out / "ablation.csv", ["unit", "accuracy", "f1", "delta_accuracy", "delta_f1"],
               [[r.unit, r.accuracy, r.f1, r.delta_accuracy, r.delta_f1] for r in abl.rows])
    for r in abl.rows:
        print(f"{r.unit}\t{r.delta_accuracy:+.4f}\t{r.delta_f1:+.4f}")
    return 0


def cmd_predict(args) -> int:
    model_path = _require_file(args.model_file, "model-file")
    features_path = _require_file(args.features_csv, "features-csv")
    try:
        model, columns, scaler = load_model(model_path)
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        raise ConfigError(f"model-file: {exc}") from None
    try:
        ids, names, values = read_feature_csv(features_path)
    except ValueError as exc:
        raise ConfigError(f"features-csv: {exc}") from None
    missing = [c for c in columns if c not in names]
    extra = [c for c in names if c not in columns]
    if missing or (extra and not args.ignore_extra):
        raise ConfigError(f"features-csv: column mismatch; missing={missing} extra={extra}")
    X = values[:, [names.index(c) for c in columns]] if len(ids) else np.zeros((0, len(columns)))
    if scaler is not None and len(ids):
        X = scaler.transform(X)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    logistic = isinstance(model, LogisticRegression)
    w.writerow(["id", "probability" if logistic else "score", "label"])
    if len(ids):
        score = model.predict_proba(X)[:, 1] if logistic else model.decision_function(X)
        label = score >= (args.threshold if logistic else 0.0)
        for rid, s, lab in zip(ids, score, label):
            w.writerow([rid, repr(float(s)), int(lab)])
    sys.stdout.write(buf.getvalue())
    return 0


# ---------------------------------------------------------------- parser

def _add_corpus_args(p):
    p.add_argument("--annotations", help="tweet_id<TAB>label annotation file")
    p.add_argument("--tweets", help="JSON Lines dump of hydrated tweets")
    p.add_argument("--reference-time", help="ISO-8601 'now' for age features (default: newest tweet)")


def _add_output_args(p):
    p.add_argument("--out", default="reports", help="report root directory (default: reports)")
    p.add_argument("--tag", help="report sub-directory name (default: config fingerprint)")


def _add_feature_args(p):
    p.add_argument("--lexicons", help="directory with blacklist/positive/negative/subjective.txt")
    p.add_argument("--groups", help="comma-separated feature groups (Tweet,User,Content)")


def _add_task_args(p):
    p.add_argument("--task", choices=("detect", "popularity"), default="detect")
    p.add_argument("--target", choices=("hate", "liked", "retweeted", "replied"))
    p.add_argument("--subset", choices=("all", "hate", "non-hate"), default="all")
    p.add_argument("--model", choices=("logistic", "hinge"), default="logistic")
    p.add_argument("--features", choices=("ngrams", "tabular"), default="ngrams",
                   help="detect task inputs: character n-grams or the tweet/user/content features")
    p.add_argument("--ngram-min", type=int, default=1)
    p.add_argument("--ngram-max", type=int, default=4)
    p.add_argument("--min-df", type=int, default=1)
    p.add_argument("--keep-case", action="store_true", help="do not lowercase before n-grams")
    p.add_argument("--sublinear-tf", action="store_true")
    p.add_argument("--learning-rate", default="auto")
    p.add_argument("--max-epochs", type=int, default=500)
    p.add_argument("--l2-lambda", type=float, default=1e-4)
    p.add_argument("--tolerance", type=float, default=1e-6)
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--raw-replies", action="store_true",
                   help="replied target from the dump's reply_count instead of in-corpus replies")
    p.add_argument("--ig-bins", type=int, default=10)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hatepop", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"hatepop {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name, func, help_, aliases=()):
        p = sub.add_parser(name, help=help_, aliases=list(aliases))
        p.add_argument("--config", help="file of 'key = value' option defaults; flags win")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("-v", "--verbose", action="store_true")
        p.set_defaults(func=func)
        return p

    p = command("synth", cmd_synth, "write a synthetic corpus fixture")
    p.add_argument("--preset", choices=("detect", "published"), default="detect")
    p.add_argument("--sizes", help="NON_HATE,HATE tweet counts (detect preset)")
    p.add_argument("--planted-rate", type=float)
    p.add_argument("--out", required=True, help="destination directory")

    p = command("ingest", cmd_ingest, "join annotations with hydrated tweets")
    _add_corpus_args(p)
    _add_output_args(p)

    p = command("stats", cmd_stats, "corpus statistics and bias diagnostics")
    _add_corpus_args(p)
    _add_output_args(p)
    p.add_argument("--reference-counts", help="JSON or key=value file of original label counts")
    p.add_argument("--svg", action="store_true", help="also draw production.svg")
    p.add_argument("--token", action="append", help="extra token to measure (repeatable)")
    p.add_argument("--token-subset", default="all",
                   choices=("all", "hate", "non-hate", "racism", "sexism"))
    p.add_argument("--token-ignore-case", action="store_true")

    p = command("featurize", cmd_featurize, "write the tweet/user/content feature matrix")
    _add_corpus_args(p)
    _add_output_args(p)
    _add_feature_args(p)
    p.add_argument("--include-user-id", action="store_true")
    p.add_argument("--json", action="store_true", help="also write features.json")

    p = command("train", cmd_train, "fit a model on all selected rows")
    _add_corpus_args(p)
    _add_output_args(p)
    _add_feature_args(p)
    _add_task_args(p)

    p = command("evaluate", cmd_run, "cross-validate a configured pipeline", aliases=("run",))
    _add_corpus_args(p)
    _add_output_args(p)
    _add_feature_args(p)
    _add_task_args(p)
    p.add_argument("--infogain", action="store_true")
    p.add_argument("--chisq", action="store_true")
    p.add_argument("--chisq-mode", choices=("binary", "histogram"), default="binary")
    p.add_argument("--ablate", choices=("group", "single"))
    p.add_argument("--holdout", type=float,
                   help="fraction of rows kept out of cross-validation and scored once at the end")

    p = command("infogain", cmd_infogain, "rank features by information gain")
    _add_corpus_args(p)
    _add_output_args(p)
    _add_feature_args(p)
    p.add_argument("--target", choices=("hate", "liked", "retweeted", "replied"))
    p.add_argument("--subset", choices=("all", "hate", "non-hate"), default="all")
    p.add_argument("--ig-bins", type=int, default=10)
    p.add_argument("--top", type=int, default=8)
    p.add_argument("--raw-replies", action="store_true")

    p = command("chisq", cmd_chisq, "chi-squared tests of hate status vs interactions")
    _add_corpus_args(p)
    _add_output_args(p)
    p.add_argument("--chisq-mode", choices=("binary", "histogram"), default="binary")

    p = command("ablate", cmd_ablate, "feature ablation by group or single feature")
    _add_corpus_args(p)
    _add_output_args(p)
    _add_feature_args(p)
    _add_task_args(p)
    p.add_argument("--unit", choices=("group", "single"), default="group")

    p = command("predict", cmd_predict, "score feature CSV rows with a saved model")
    p.add_argument("--model-file", required=True)
    p.add_argument("--features-csv", required=True)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--ignore-extra", action="store_true",
                   help="allow CSV columns the model does not use")
    return parser


def _apply_config_file(parser, argv):
    """Turn ``--config`` file entries into subcommand defaults; explicit flags still win."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    values = _read_key_values(known.config)
    command = next((a for a in argv if a in SUBCOMMANDS), None)
    subparsers = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    sp = subparsers.choices.get(command)
    if sp is None:
        return
    actions = {a.dest: a for a in sp._actions}
    defaults = {}
    for key, value in values.items():
        action = actions.get(key)
        if action is None:
            raise ConfigError(f"config: unknown option {key!r} for '{command}'")
        if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
            defaults[key] = value.lower() in ("1", "true", "yes", "on")
        elif isinstance(action, argparse._AppendAction):
            defaults[key] = [v.strip() for v in value.split(",") if v.strip()]
        else:
            defaults[key] = action.type(value) if action.type else value
        if action.required:
            action.required = False
    sp.set_defaults(**defaults)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config_file(parser, argv)
        args = parser.parse_args(argv)
    except ConfigError as exc:
        print(f"hatepop: error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, AnnotationParseError, AnnotationConflictError, CorpusError) as exc:
        print(f"hatepop: error: {exc}", file=sys.stderr)
        return 2
    except BrokenPipeError:
        # reader went away (e.g. piped into head); silence the flush at exit
        devnull = os.open(os.devnull, os.O_WRONLY)
        os.dup2(devnull, sys.stdout.fileno())
        return 0
    except Exception as exc:  # noqa: BLE001
        log.debug("failure", exc_info=True)
        print(f"hatepop: failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
