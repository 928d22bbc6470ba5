"""Command-line front end.

Subcommands: validate, audit, train, fliptest, repair, explain, synth.
Reports are emitted as JSON (stable key order, full float precision) and
optionally Markdown; the Markdown is a rendering of the JSON report, so every
number it shows is present in the JSON. Exit codes are made for pipelines:

    0  success
    1  usage error
    2  data error
    3  audit completed and the four-fifths rule failed
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .audit import flip_test
from .data import Dataset, load_csv, parse_schema, save_csv, split, validate
from .errors import DataError
from .explain import local_surrogate, permutation_importance
from .inference import di_ci_delta, eo_ci_delta
from .metrics import (
    confusion_gaps,
    contingency,
    base_rates,
    disparity_metrics,
    eighty_percent_verdict,
    group_confusion,
)
from .model import (
    TrainConfig,
    cross_validate,
    decide,
    load_model,
    predict_scores,
    save_model,
    test_error,
    train_logistic,
)
from .repair import apply_repair, fit_repair, repair_distortion, save_plan
from .synth import generate, solve_group_bias, spec_from_dict

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_UNFAIR = 3


class _Parser(argparse.ArgumentParser):
    # argparse exits with code 2 on usage errors; the exit-code contract
    # reserves 2 for data errors, so remap.
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "yes" if v else "no"
    if isinstance(v, float):
        return format(v, ".6g")
    if v is None:
        return "undefined"
    return str(v)


def _markdown_lines(obj, indent: int = 0) -> list[str]:
    lines = []
    pad = "  " * indent
    if isinstance(obj, dict):
        for key, value in obj.items():
            if isinstance(value, (dict, list)) and value:
                lines.append(f"{pad}- {key}:")
                lines.extend(_markdown_lines(value, indent + 1))
            else:
                rendered = "[]" if isinstance(value, list) else _fmt(value)
                lines.append(f"{pad}- {key}: {rendered}")
    elif isinstance(obj, list):
        if all(not isinstance(v, (dict, list)) for v in obj):
            lines.append(f"{pad}- " + ", ".join(_fmt(v) for v in obj))
        else:
            for v in obj:
                lines.extend(_markdown_lines(v, indent))
    else:
        lines.append(f"{pad}- {_fmt(obj)}")
    return lines


def render_markdown(report: dict) -> str:
    lines = [f"# fairaudit report: {report.get('meta', {}).get('subcommand', '')}", ""]
    for section, content in report.items():
        lines.append(f"## {section}")
        lines.extend(_markdown_lines(content))
        lines.append("")
    return "\n".join(lines)


def _emit(report: dict, args) -> None:
    text = json.dumps(report, indent=2) + "\n"
    fmt = args.format
    if args.out is None:
        if fmt in ("json", "both"):
            sys.stdout.write(text)
        if fmt in ("md", "both"):
            sys.stdout.write(render_markdown(report))
        return
    out = Path(args.out)
    if fmt in ("json", "both"):
        out.write_text(text, encoding="utf-8")
    if fmt in ("md", "both"):
        md_path = out if fmt == "md" else out.with_suffix(".md")
        md_path.write_text(render_markdown(report), encoding="utf-8")


def _seed(args) -> int:
    return 0 if getattr(args, "seed", None) is None else args.seed


def _meta(args, subcommand: str, d: Dataset | None = None, seed: int | None = None) -> dict:
    meta = {"tool": "fairaudit", "version": __version__, "subcommand": subcommand}
    if seed is None:
        seed = getattr(args, "seed", None)
    if seed is not None:
        meta["seed"] = seed
    if d is not None:
        s_name = d.sensitive_column
        meta["orientation"] = {
            "protected_modality": f"{s_name}={d.schema[s_name].protected}",
            "ratios": "protected / non-protected",
            "differences": "protected - non-protected",
        }
        if d.decision_column is not None:
            dec = d.decision_column
            meta["orientation"]["positive_decision"] = f"{dec}={d.schema[dec].positive}"
    if not args.no_timestamp:
        meta["timestamp"] = datetime.now(timezone.utc).isoformat()
    return meta


def _load(args) -> Dataset:
    if args.schema is None:
        raise DataError("--schema is required for this subcommand")
    schema_path = Path(args.schema)
    if not schema_path.exists():
        raise DataError(f"no such schema file: {schema_path}")
    schema = parse_schema(json.loads(schema_path.read_text(encoding="utf-8")))
    return load_csv(args.data, schema)


def _estimate_dict(est) -> dict:
    out = {"value": est.value}
    if est.corrected:
        out["corrected"] = True
    return out


def _interval_dict(iv) -> dict:
    out = {"method": iv.method, "level": iv.level, "lo": iv.lo, "hi": iv.hi}
    if iv.replicates is not None:
        out["replicates"] = iv.replicates
    if iv.seed is not None:
        out["seed"] = iv.seed
    return out


def _confusion_dict(g) -> dict:
    return {
        "tp": g.tp, "fp": g.fp, "tn": g.tn, "fn": g.fn,
        "tpr": g.tpr, "fpr": g.fpr, "fnr": g.fnr,
        "ppv": g.ppv, "accuracy": g.accuracy, "base_rate": g.base_rate,
    }


# -- subcommands ---------------------------------------------------------------------


def _cmd_validate(args) -> int:
    d = _load(args)
    report = {"meta": _meta(args, "validate", d), "dataset": validate(d)}
    _emit(report, args)
    return EXIT_OK


def _cmd_audit(args) -> int:
    d = _load(args)
    report: dict = {"meta": _meta(args, "audit", d), "dataset": validate(d)}

    table = contingency(d)
    rates = base_rates(table)
    report["contingency"] = {
        "a": table.a, "b": table.b, "c": table.c, "d": table.d,
        "n1": table.n1, "n2": table.n2, "m1": table.m1, "m2": table.m2, "n": table.n,
        "p1": rates.p1, "p2": rates.p2, "p": rates.p, "corrected": rates.corrected,
    }
    estimates = disparity_metrics(rates)
    report["metrics"] = {name: _estimate_dict(e) for name, e in estimates.items()}

    intervals: dict = {}
    try:
        di_iv = di_ci_delta(table, args.level)
        intervals["disparate_impact"] = _interval_dict(di_iv)
    except DataError:
        di_iv = None

    pair = None
    if d.outcome_column is not None:
        pair = group_confusion(d)
        try:
            intervals["equal_opportunity_ratio"] = _interval_dict(eo_ci_delta(pair, args.level))
        except DataError:
            pass
    if intervals:
        report["intervals"] = intervals

    di_est = estimates["disparate_impact"]
    verdict: dict = {
        "rule_threshold": args.threshold,
        "point": eighty_percent_verdict(di_est, args.threshold),
    }
    if di_iv is not None:
        with_iv = di_est.with_interval(di_iv.lo, di_iv.hi, di_iv.level)
        verdict["interval"] = eighty_percent_verdict(with_iv, args.threshold, use_interval=True)
    report["verdict"] = verdict

    if pair is not None:
        protected_g, other_g = pair
        report["confusion"] = {
            "protected": _confusion_dict(protected_g),
            "non_protected": _confusion_dict(other_g),
            "gaps": {name: _estimate_dict(e) for name, e in confusion_gaps(pair).items()},
        }

    if args.model is not None:
        m = load_model(args.model)
        ft = flip_test(m, d, args.decision_threshold)
        report["fliptest"] = {
            "n": ft.n,
            "flips_to_positive": len(ft.to_positive),
            "flips_to_negative": len(ft.to_negative),
            "flip_rate": ft.flip_rate,
            "vacuous": ft.vacuous,
            "to_positive": ft.to_positive,
            "to_negative": ft.to_negative,
        }

    _emit(report, args)
    return EXIT_UNFAIR if verdict["point"] == "fail" else EXIT_OK


def _cmd_train(args) -> int:
    d = _load(args)
    if args.model is None:
        raise DataError("--model is required: path to write the trained model")
    seed = _seed(args)
    config = TrainConfig(seed=seed, target=args.target)
    train_d, holdout_d = split(d, args.test_fraction, seed)
    m = train_logistic(train_d, include_sensitive=args.include_sensitive, config=config)
    save_model(m, args.model)

    holdout = test_error(m, holdout_d, args.decision_threshold)
    report: dict = {
        "meta": _meta(args, "train", d, seed=seed),
        "model": {
            "path": str(args.model),
            "target_column": m.target_column,
            "include_sensitive": args.include_sensitive,
            "converged": m.converged,
            "intercept": m.intercept,
            "weights": {name: float(w) for name, w in zip(m.encoding.feature_names, m.weights)},
        },
        "holdout_error": {"rate": holdout.rate, "test_fraction": args.test_fraction},
    }
    if args.replicates >= 2:
        cv = cross_validate(d, args.replicates, args.test_fraction, seed,
                            config=config, include_sensitive=args.include_sensitive,
                            threshold=args.decision_threshold)
        report["cv_error"] = {
            "rate": cv.rate, "sd": cv.sd, "replicates": cv.replicates, "seed": cv.seed,
        }
    _emit(report, args)
    return EXIT_OK


def _cmd_fliptest(args) -> int:
    d = _load(args)
    if args.model is None:
        raise DataError("--model is required: path of the model to probe")
    m = load_model(args.model)
    ft = flip_test(m, d, args.decision_threshold)
    report = {
        "meta": _meta(args, "fliptest", d),
        "fliptest": {
            "n": ft.n,
            "threshold": args.decision_threshold,
            "flips_to_positive": len(ft.to_positive),
            "flips_to_negative": len(ft.to_negative),
            "flip_rate": ft.flip_rate,
            "vacuous": ft.vacuous,
            "to_positive": ft.to_positive,
            "to_negative": ft.to_negative,
        },
    }
    _emit(report, args)
    return EXIT_OK


def _model_decision_di(d: Dataset, seed: int, threshold: float) -> tuple[float, float]:
    """(decision DI, holdout error) of a freshly trained sensitive-blind baseline."""
    train_d, holdout_d = split(d, 0.3, seed)
    m = train_logistic(train_d, include_sensitive=False, config=TrainConfig(seed=seed))
    decisions = decide(predict_scores(m, holdout_d), threshold)
    # relabel through the declared positive modality so orientation is kept
    role = holdout_d.schema[holdout_d.decision_column]
    labels = np.where(decisions, role.positive, f"not-{role.positive}")
    audited = holdout_d.with_values(holdout_d.decision_column, labels)
    rates = base_rates(contingency(audited))
    return rates.p1 / rates.p2, test_error(m, holdout_d, threshold).rate


def _cmd_repair(args) -> int:
    d = _load(args)
    if not args.features:
        raise DataError("--features is required: comma-separated numeric feature names")
    features = [f.strip() for f in args.features.split(",") if f.strip()]
    plan = fit_repair(d, features)
    repaired = apply_repair(plan, d, args.lam)
    distortion = repair_distortion(d, repaired, features)

    repaired_out = Path(args.repaired_out) if args.repaired_out else Path("repaired.csv")
    save_csv(repaired, repaired_out)
    if args.plan_out:
        save_plan(plan, args.plan_out)

    seed = _seed(args)
    report: dict = {
        "meta": _meta(args, "repair", d, seed=seed),
        "repair": {
            "lambda": args.lam,
            "features": features,
            "repaired_csv": str(repaired_out),
            "distortion": distortion,
        },
    }
    if d.decision_column is not None:
        rates = base_rates(contingency(d))
        section = {"dataset_decision_di": rates.p1 / rates.p2}
        di_before, err_before = _model_decision_di(d, seed, args.decision_threshold)
        di_after, err_after = _model_decision_di(repaired, seed, args.decision_threshold)
        section["model_di_before"] = di_before
        section["model_di_after"] = di_after
        section["model_error_before"] = err_before
        section["model_error_after"] = err_after
        report["repair"]["effect"] = section
    _emit(report, args)
    return EXIT_OK


def _cmd_explain(args) -> int:
    d = _load(args)
    if args.model is None:
        raise DataError("--model is required: path of the model to explain")
    m = load_model(args.model)
    seed = _seed(args)
    pi = permutation_importance(m, d, threshold=args.decision_threshold,
                                repeats=args.replicates, seed=seed)
    report: dict = {
        "meta": _meta(args, "explain", d, seed=seed),
        "explain": {
            "permutation_importance": {
                "baseline_accuracy": pi.baseline_accuracy,
                "repeats": pi.repeats,
                "seed": pi.seed,
                "importances": pi.importances,
            }
        },
    }
    if args.row is not None:
        ls = local_surrogate(m, args.row, d, n_samples=args.samples,
                             kernel_width=args.kernel_width, seed=seed)
        report["explain"]["local_surrogate"] = {
            "row": ls.row,
            "intercept": ls.intercept,
            "coefficients": ls.coefficients,
            "kernel_width": ls.kernel_width,
            "n_samples": ls.n_samples,
            "seed": ls.seed,
            "r_squared": ls.r_squared,
        }
    _emit(report, args)
    return EXIT_OK


def _cmd_synth(args) -> int:
    if args.data is None:
        raise DataError("--data is required: path to write the generated CSV")
    base: dict = {}
    if args.spec:
        spec_path = Path(args.spec)
        if not spec_path.exists():
            raise DataError(f"no such generator spec file: {spec_path}")
        base = json.loads(spec_path.read_text(encoding="utf-8"))
    for key, value in (("n", args.n), ("seed", args.seed),
                       ("protected_fraction", args.protected_fraction),
                       ("group_bias", args.group_bias)):
        if value is not None:
            base[key] = value
    base.setdefault("n", 1000)
    base.setdefault("seed", 0)
    spec = spec_from_dict(base)
    if args.target_di is not None:
        spec = replace(spec, group_bias=solve_group_bias(spec, args.target_di))
    d, true_di = generate(spec)
    save_csv(d, args.data)

    schema_obj = {
        "x1": {"role": "numeric"},
        "x2": {"role": "numeric"},
        "s": {"role": "sensitive", "protected": "P"},
        "y": {"role": "decision", "positive": "1"},
        "t": {"role": "outcome", "positive": "1"},
    }
    if args.schema_out:
        Path(args.schema_out).write_text(json.dumps(schema_obj, indent=2) + "\n", encoding="utf-8")

    rates = base_rates(contingency(d))
    report = {
        "meta": _meta(args, "synth", seed=spec.seed),
        "synth": {
            "spec": asdict(spec),
            "true_di": true_di,
            "empirical_di": rates.p1 / rates.p2,
            "data_csv": str(args.data),
        },
    }
    _emit(report, args)
    return EXIT_OK


# -- argument wiring -------------------------------------------------------------------


def _build_parser() -> _Parser:
    parser = _Parser(prog="fairaudit", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"fairaudit {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p: argparse.ArgumentParser, model: bool = False,
               decision_threshold: bool = True) -> None:
        p.add_argument("--data", help="CSV file path")
        p.add_argument("--schema", help="JSON role-declaration path")
        p.add_argument("--out", help="report path (JSON; Markdown derived)")
        p.add_argument("--format", choices=("json", "md", "both"), default="json")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--no-timestamp", action="store_true",
                       help="omit the timestamp for byte-stable reports")
        if decision_threshold:
            p.add_argument("--threshold", dest="decision_threshold", type=float, default=0.5,
                           help="decision threshold on model scores")
        if model:
            p.add_argument("--model", help="model JSON path")

    p = sub.add_parser("validate", help="data report: roles, missing cells, group sizes")
    common(p, decision_threshold=False)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("audit", help="disparity metrics, intervals, four-fifths verdict")
    common(p, model=True, decision_threshold=False)
    p.add_argument("--level", type=float, default=0.95, help="confidence level")
    p.add_argument("--threshold", type=float, default=0.8,
                   help="four-fifths rule threshold")
    p.add_argument("--decision-threshold", dest="decision_threshold", type=float,
                   default=0.5, help="score threshold for the flip-test section")
    p.set_defaults(func=_cmd_audit)

    p = sub.add_parser("train", help="fit and serialize the baseline model")
    common(p, model=True)
    p.add_argument("--include-sensitive", action="store_true")
    p.add_argument("--test-fraction", type=float, default=0.3)
    p.add_argument("--replicates", type=int, default=10, help="cross-validation replicates")
    p.add_argument("--target", choices=("auto", "decision", "outcome"), default="auto")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("fliptest", help="flip-test a serialized model")
    common(p, model=True)
    p.set_defaults(func=_cmd_fliptest)

    p = sub.add_parser("repair", help="fit/apply quantile repair, write repaired CSV")
    common(p)
    p.add_argument("--features", help="comma-separated numeric features to repair")
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--repaired-out", help="path for the repaired CSV (default repaired.csv)")
    p.add_argument("--plan-out", help="optional path to serialize the repair plan")
    p.set_defaults(func=_cmd_repair)

    p = sub.add_parser("explain", help="permutation importance and local surrogate")
    common(p, model=True)
    p.add_argument("--row", type=int, help="row index for the local surrogate")
    p.add_argument("--replicates", type=int, default=10, help="permutation repeats")
    p.add_argument("--samples", type=int, default=1000, help="surrogate perturbations")
    p.add_argument("--kernel-width", type=float, default=None)
    p.set_defaults(func=_cmd_explain)

    p = sub.add_parser("synth", help="generate synthetic data with known disparity")
    common(p, decision_threshold=False)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--protected-fraction", type=float, default=None)
    p.add_argument("--group-bias", type=float, default=None)
    p.add_argument("--target-di", type=float, default=None,
                   help="solve the group bias so the exact DI hits this value")
    p.add_argument("--spec", help="generator spec JSON; explicit flags override it")
    p.add_argument("--schema-out", help="write the matching schema JSON here")
    p.set_defaults(func=_cmd_synth)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.func(args)
    except DataError as e:
        print(f"fairaudit: data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as e:
        print(f"fairaudit: data error: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    raise SystemExit(main())
