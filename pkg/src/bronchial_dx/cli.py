"""Command line front door.

Five subcommands: ``serve`` runs the HTTP API, ``diagnose`` scores one
payload locally, ``evaluate`` trains and scores a classifier on a
cohort or dataset directory, ``cohort`` writes a synthetic dataset
trio, and ``roi`` extracts imaging features from a grayscale image.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .cdamm import classify, memory_from_doc
from .cohort import (
    generate,
    generate_and_write,
    load_cohort_config,
    load_default_config,
    load_full_config,
    read_dataset,
    split,
    build_dataset,
)
from .errors import ValidationError
from .evaluation import ALGORITHMS, evaluate_algorithm, fit_for_serving
from .imaging import FEATURE_ORDER, extract_features, read_image
from .medrecords import validate_report
from .pipeline import CaseInput, encode_case, extract_signs


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bronchial-dx")
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the HTTP API")
    serve.add_argument("--host", default=os.environ.get("BRONCHIAL_DX_HOST", "127.0.0.1"))
    serve.add_argument(
        "--port", type=int, default=int(os.environ.get("BRONCHIAL_DX_PORT", "8000"))
    )
    serve.add_argument("--data-dir", default=None, help="case log and memory snapshot directory")
    serve.add_argument("--model-dir", default=None, help="directory holding saved baseline models")
    serve.add_argument("--static-dir", default=None, help="built frontend to serve at /")
    serve.add_argument("--min-top", type=float, default=None, help="confidence floor for a verdict")
    serve.add_argument("--min-gap", type=float, default=None, help="required lead over the runner-up")

    diagnose = sub.add_parser("diagnose", help="score one case payload locally")
    diagnose.add_argument("payload", help="JSON file with responses/report/imaging_features, or - for stdin")
    diagnose.add_argument("--image", default=None, help="grayscale PGM or PNG to extract features from")
    diagnose.add_argument("--min-top", type=float, default=0.5)
    diagnose.add_argument("--min-gap", type=float, default=0.1)

    evaluate = sub.add_parser("evaluate", help="train and score a classifier")
    evaluate.add_argument("--algo", choices=ALGORITHMS, default="cdamm")
    evaluate.add_argument("--config", default="default", help="default, full, or a config JSON path")
    evaluate.add_argument("--dataset", default=None, help="read an existing dataset directory instead")
    evaluate.add_argument("--size", type=int, default=None)
    evaluate.add_argument("--seed", type=int, default=None)
    evaluate.add_argument("--train-fraction", type=float, default=0.6)
    evaluate.add_argument("--save-models", default=None, help="write the trained model JSON here")
    evaluate.add_argument("--json", action="store_true", help="emit the full result as JSON")

    cohort = sub.add_parser("cohort", help="generate a synthetic dataset trio")
    cohort.add_argument("--config", default="default", help="default, full, or a config JSON path")
    cohort.add_argument("--out", required=True, help="output directory")
    cohort.add_argument("--size", type=int, default=None)
    cohort.add_argument("--seed", type=int, default=None)
    cohort.add_argument("--train-fraction", type=float, default=0.6)

    roi = sub.add_parser("roi", help="extract imaging features from an image")
    roi.add_argument("image", help="grayscale PGM or PNG file")

    return parser


def _load_config(label: str):
    if label == "default":
        return load_default_config()
    if label == "full":
        return load_full_config()
    return load_cohort_config(label)


def _split_from_args(args) -> tuple:
    if args.dataset is not None:
        bundle = read_dataset(args.dataset)
        return bundle.train, bundle.test
    config = _load_config(args.config)
    records = generate(config, size=args.size, seed=args.seed)
    seed = config.seed if args.seed is None else args.seed
    train_records, test_records = split(records, args.train_fraction, seed)
    return build_dataset(train_records), build_dataset(test_records)


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import ServiceSettings, create_app

    base = ServiceSettings.from_env()
    settings = ServiceSettings(
        data_dir=Path(args.data_dir) if args.data_dir else base.data_dir,
        model_dir=Path(args.model_dir) if args.model_dir else base.model_dir,
        static_dir=Path(args.static_dir) if args.static_dir else base.static_dir,
        min_top=base.min_top if args.min_top is None else args.min_top,
        min_gap=base.min_gap if args.min_gap is None else args.min_gap,
    )
    uvicorn.run(create_app(settings), host=args.host, port=args.port)
    return 0


def _cmd_diagnose(args) -> int:
    from .service.app import default_disease_doc
    from .cdamm import InconclusivePolicy

    raw = sys.stdin.read() if args.payload == "-" else Path(args.payload).read_text("utf-8")
    payload = json.loads(raw)
    features = payload.get("imaging_features")
    if args.image is not None:
        if features is not None:
            raise ValidationError("both --image and imaging_features given", field="image")
        features = extract_features(read_image(args.image)).unit_scaled()
    report = payload.get("report")
    case = CaseInput(
        core_responses=payload.get("responses") or {},
        professional_responses=payload.get("professional_responses"),
        report=validate_report(report) if report is not None else None,
        imaging_features=None if features is None else np.asarray(features, dtype=np.float64),
    )
    memory = memory_from_doc(default_disease_doc())
    policy = InconclusivePolicy(min_top=args.min_top, min_gap=args.min_gap)
    result = classify(memory, extract_signs(case), policy=policy, positive_disease="asthma")
    print(
        json.dumps(
            {
                "verdict": result.verdict,
                "top": result.top,
                "probabilities": {k: float(v) for k, v in result.probabilities.items()},
                "signs": extract_signs(case),
            },
            indent=2,
            sort_keys=True,
        )
    )
    return 0


def _cmd_evaluate(args) -> int:
    train, test = _split_from_args(args)
    seed = 0 if args.seed is None else args.seed
    result = evaluate_algorithm(args.algo, train, test, seed=seed)
    if args.save_models is not None:
        out = Path(args.save_models)
        out.mkdir(parents=True, exist_ok=True)
        if args.algo in ("mlp", "pso"):
            doc = fit_for_serving(args.algo, train, seed=seed).to_doc()
            path = out / f"{args.algo}.json"
        elif args.algo == "c45bn":
            tree, bayes = fit_for_serving(args.algo, train, seed=seed)
            doc = {"tree": tree.to_doc(), "bayes": bayes.to_doc()}
            path = out / "c45bn.json"
        else:
            raise ValidationError(f"--save-models does not apply to {args.algo!r}")
        path.write_text(json.dumps(doc) + "\n", encoding="utf-8")
        print(f"saved {path}", file=sys.stderr)
    if args.json:
        print(json.dumps(result.as_dict(), indent=2, sort_keys=True))
    else:
        print(f"algorithm       {result.algorithm}")
        print(f"train/test      {result.train_size}/{result.test_size}")
        print(f"runtime_s       {result.runtime_s:.3f}")
        print(result.metrics.as_text())
    return 0


def _cmd_cohort(args) -> int:
    config = _load_config(args.config)
    manifest = generate_and_write(
        config, args.out, train_fraction=args.train_fraction, size=args.size, seed=args.seed
    )
    print(json.dumps({k: manifest[k] for k in ("size", "seed", "counts", "files")}, indent=2))
    return 0


def _cmd_roi(args) -> int:
    extraction = extract_features(read_image(args.image))
    raw = extraction.features.as_vector()
    scaled = extraction.unit_scaled()
    print(
        json.dumps(
            {
                "features": {name: float(v) for name, v in zip(FEATURE_ORDER, raw)},
                "unit_scaled": {name: float(v) for name, v in zip(FEATURE_ORDER, scaled)},
                "image_pixels": extraction.image_pixels,
                "levels": extraction.levels,
            },
            indent=2,
            sort_keys=True,
        )
    )
    return 0


_COMMANDS = {
    "serve": _cmd_serve,
    "diagnose": _cmd_diagnose,
    "evaluate": _cmd_evaluate,
    "cohort": _cmd_cohort,
    "roi": _cmd_roi,
}


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
