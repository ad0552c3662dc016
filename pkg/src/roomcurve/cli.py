"""Command-line driver: ``roomcurve <subcommand> [options]``.

Subcommands: ``gen-data``, ``features``, ``train``, ``predict``, ``design``,
``evaluate``. Options may also come from a JSON file given by ``--config``;
its top-level keys apply to every subcommand and a section named after the
subcommand (e.g. ``"evaluate": {...}``) applies to that one only. Explicit
flags win over the file.

Exit status: 0 on success, 1 on a numerical failure, 2 on invalid input, 3
when ``evaluate`` finished but some cross-validation repeats failed.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from pathlib import Path
from types import SimpleNamespace

import numpy as np

from . import __version__, equalizer, estimators, evaluation, storage
from .errors import InsufficientDecay, InvalidInput, RoomCurveError, VersionError
from .features import FeatureKind, lf_rolloff, rt30
from .roomsim import GenerationConfig, generate_dataset
from .spectra import LogPowerSpectrum, log_power_spectrum

log = logging.getLogger("roomcurve")

EXIT_OK, EXIT_FAILURE, EXIT_INVALID, EXIT_PARTIAL = 0, 1, 2, 3

DEFAULT_ESTIMATORS = "average,ls,gpca,lpca:rt30"


# ------------------------------------------------------------------- helpers


def _effective(args) -> dict:
    skip = {"func", "config", "verbose", "out"}  # the output location does not affect results
    out = {k: v for k, v in sorted(vars(args).items()) if k not in skip}
    return {"version": storage.FORMAT_VERSION, "package_version": __version__, "command": args.command, **out}


def _write_json(path: Path, obj):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n")


def _emit(text: str, out):
    """Write ``text`` to ``out`` or stdout; returns the path written (or None)."""
    if out in (None, "-"):
        sys.stdout.write(text)
        return None
    path = Path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path


def _sidecar(path, args, **extra):
    """Version and effective config next to a CSV output."""
    if path is not None:
        _write_json(path.with_name(path.name + ".json"), {**_effective(args), **extra})


def _require(value, name):
    if value is None:
        raise InvalidInput(f"missing required option {name}")
    return value


def _spectrum_csv(spec: LogPowerSpectrum, header: str) -> str:
    rows = [header] + [f"{f:.9g},{v:.9g}" for f, v in zip(spec.freqs, spec.bins)]
    return "\n".join(rows) + "\n"


def _read_spectrum_csv(path, sample_rate) -> LogPowerSpectrum:
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except (OSError, ValueError) as exc:
        raise InvalidInput(f"{path}: cannot read room-curve CSV ({exc})") from None
    if data.shape[1] != 2:
        raise InvalidInput(f"{path}: expected two columns (bin_hz, r_hat_db)")
    nfft = 2 * (data.shape[0] - 1)
    if sample_rate is None:
        sample_rate = int(round(2 * data[-1, 0]))
    return LogPowerSpectrum(data[:, 1], int(sample_rate), nfft)


def _load_echo(path, sample_rate, nfft):
    """Dataset record file, or a raw IR (one sample per line) at ``sample_rate``."""
    path = Path(path)
    if not path.exists():
        raise InvalidInput(f"input file {path} does not exist")
    text = path.read_text().lstrip()
    if text.startswith("{"):
        return storage.load_record(path)
    if sample_rate is None:
        raise InvalidInput("--sample-rate is required for a raw impulse-response file")
    ir = storage.read_ir_text(path, int(sample_rate))
    return SimpleNamespace(echo_ir=ir, echo_spectrum=log_power_spectrum(ir, nfft), meta={})


# ---------------------------------------------------------------- subcommands


def cmd_gen_data(args) -> int:
    cfg = GenerationConfig(
        dims_range=(args.dims_min, args.dims_max),
        beta_range=(args.beta_min, args.beta_max),
        max_order=args.max_order,
        sample_rate=args.sample_rate,
        nfft=args.nfft,
        speed_of_sound=args.speed_of_sound,
    )
    out = Path(_require(args.out, "--out"))
    records = generate_dataset(cfg, args.rooms, args.seed)
    storage.save_dataset(records, out, seed=args.seed, config=_effective(args))
    log.info("wrote %d records to %s", len(records), out)
    return EXIT_OK


def cmd_features(args) -> int:
    records = storage.load_dataset(_require(args.dataset, "dataset"))
    lines = ["record_id,rt30_ms,rolloff_db"]
    for i, rec in enumerate(records):
        rid = rec.record_id if rec.record_id is not None else i
        try:
            t = f"{rt30(rec.echo_ir):.6g}"
        except InsufficientDecay:
            t = "nan"
        lines.append(f"{rid},{t},{lf_rolloff(rec.echo_spectrum):.6g}")
    _sidecar(_emit("\n".join(lines) + "\n", args.out), args)
    return EXIT_OK


def cmd_train(args) -> int:
    ds = estimators.Dataset(storage.load_dataset(_require(args.dataset, "dataset")))
    kind = args.est
    if kind == "ls":
        model = estimators.train_ls(ds, args.mu)
    elif kind == "gpca":
        ks = estimators.DEFAULT_KS_GLOBAL if args.ks is None else args.ks
        model = estimators.train_global_pca(ds, ks, args.kr, args.ridge)
    else:
        ks = estimators.DEFAULT_KS_LOCAL if args.ks is None else args.ks
        model = estimators.train_local_pca(ds, args.feature, args.q, ks, args.kr, ridge=args.ridge)
    body = storage.model_to_dict(model)
    body["config"] = _effective(args)
    out = Path(_require(args.out, "--out"))
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(body, sort_keys=True) + "\n")
    log.info("trained %s model on %d records -> %s", kind, len(ds), out)
    return EXIT_OK


def _predict_spectrum(model_path, input_path, sample_rate):
    model = storage.load_model(model_path)
    rec = _load_echo(input_path, sample_rate, model.nfft)
    if rec.echo_spectrum.nfft != model.nfft or rec.echo_spectrum.sample_rate != model.sample_rate:
        raise InvalidInput(
            f"input (nfft={rec.echo_spectrum.nfft}, sample_rate={rec.echo_spectrum.sample_rate}) does not match "
            f"model (nfft={model.nfft}, sample_rate={model.sample_rate})"
        )
    if isinstance(model, estimators.LocalPcaModel):
        pred = estimators.predict_local_pca(model, rec)
        return pred.spectrum, {"group": pred.group, "fallback": pred.fallback}
    return estimators.predict(model, rec), {}


def cmd_predict(args) -> int:
    spec, info = _predict_spectrum(_require(args.model, "--model"), _require(args.input, "input"), args.sample_rate)
    _sidecar(_emit(_spectrum_csv(spec, "bin_hz,r_hat_db"), args.out), args, **info)
    return EXIT_OK


def cmd_design(args) -> int:
    if args.r_hat is not None:
        r_hat = _read_spectrum_csv(args.r_hat, args.sample_rate)
    elif args.model is not None and args.input is not None:
        r_hat, _ = _predict_spectrum(args.model, args.input, args.sample_rate)
    else:
        raise InvalidInput("design needs --r-hat CSV, or --model together with an input record")
    bins = r_hat.bins
    if args.smooth:
        bins = equalizer.smooth_fractional_octave(bins, r_hat.freqs, args.smooth)
    target = equalizer.flat_target(r_hat.nfft, args.shelf_db, args.corner_hz, r_hat.sample_rate)
    clamp = (args.clamp_min, args.clamp_max)
    design = equalizer.design_eq_magnitude(bins, target, clamp)
    filt = equalizer.design_eq_filter(design, args.fir_length, clamp, r_hat.sample_rate)
    out = Path(_require(args.out, "--out"))
    out.mkdir(parents=True, exist_ok=True)
    extra = {
        "config": _effective(args),
        "target": target.description,
        "clamped_bins": int(np.count_nonzero(design.clamped)),
    }
    storage.save_eq(filt, out / "eq.json", out / "taps.txt", extra)
    log.info("designed %d-tap filter, %d bins clamped", args.fir_length, extra["clamped_bins"])
    return EXIT_OK


def cmd_evaluate(args) -> int:
    ds = estimators.Dataset(storage.load_dataset(_require(args.dataset, "dataset")))
    specs = [evaluation.EstimatorSpec.parse(s.strip()) for s in args.est.split(",") if s.strip()]
    if not specs:
        raise InvalidInput("--est lists no estimators")
    out = Path(_require(args.out, "--out"))
    out.mkdir(parents=True, exist_ok=True)
    failures = {}
    for spec in specs:
        surface = evaluation.cross_validate(ds, spec, args.n_tr, args.n_val, args.repeats, args.seed, args.jobs)
        failures[spec.label] = surface.failures
        if len(surface) == 0:
            log.error("%s: every repeat failed; no report written", spec.label)
            continue
        (out / f"report_{spec.label}.csv").write_text(evaluation.summarize(surface).to_csv())
        log.info("%s: %d repeats, %d failed", spec.label, args.repeats, surface.failures)
    run = _effective(args)
    run.pop("jobs")  # results do not depend on it, so it is kept out of the byte-compared echo
    _write_json(out / "run.json", {**run, "estimators": [s.label for s in specs], "failures": failures})
    if any(failures.values()):
        for label, n in failures.items():
            if n:
                print(f"{label}: {n} of {args.repeats} repeats failed", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


# -------------------------------------------------------------------- parser


def _positive_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="PRNG seed (default 0)")
    common.add_argument("--config", help="JSON file with option defaults")
    common.add_argument("--out", help="output path")
    common.add_argument("--jobs", type=_positive_int, default=1, help="worker processes (evaluate only)")
    common.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")

    parser = argparse.ArgumentParser(prog="roomcurve", description="Room-curve estimation from echo-path responses.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    gcfg = GenerationConfig()
    p = sub.add_parser("gen-data", parents=[common], help="simulate a synthetic dataset")
    p.add_argument("--rooms", type=_positive_int, default=10)
    p.add_argument("--dims-min", type=float, default=gcfg.dims_range[0])
    p.add_argument("--dims-max", type=float, default=gcfg.dims_range[1])
    p.add_argument("--beta-min", type=float, default=gcfg.beta_range[0])
    p.add_argument("--beta-max", type=float, default=gcfg.beta_range[1])
    p.add_argument("--max-order", type=int, default=gcfg.max_order)
    p.add_argument("--sample-rate", type=int, default=gcfg.sample_rate)
    p.add_argument("--nfft", type=int, default=gcfg.nfft)
    p.add_argument("--speed-of-sound", type=float, default=gcfg.speed_of_sound)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("features", parents=[common], help="per-record RT30 and roll-off CSV")
    p.add_argument("dataset", nargs="?")
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("train", parents=[common], help="train an estimator")
    p.add_argument("dataset", nargs="?")
    p.add_argument("--est", choices=("ls", "gpca", "lpca"), default="gpca")
    p.add_argument("--mu", type=float, default=estimators.DEFAULT_MU)
    p.add_argument("--ks", type=int, default=None, help="echo-side components (240 global, 80 local)")
    p.add_argument("--kr", type=int, default=estimators.DEFAULT_KR)
    p.add_argument("--feature", type=lambda s: FeatureKind.parse(s).value, default=FeatureKind.RT30.value)
    p.add_argument("--q", type=float, default=0.22)
    p.add_argument("--ridge", type=float, default=None)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", parents=[common], help="estimate a room curve")
    p.add_argument("input", nargs="?", help="record JSON or raw IR text")
    p.add_argument("--model")
    p.add_argument("--sample-rate", type=int, default=None, help="sample rate of a raw IR file")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("design", parents=[common], help="design a room-compensation FIR")
    p.add_argument("input", nargs="?", help="record JSON or raw IR text (with --model)")
    p.add_argument("--r-hat", help="room-curve CSV from predict")
    p.add_argument("--model")
    p.add_argument("--sample-rate", type=int, default=None)
    p.add_argument("--shelf-db", type=float, default=0.0)
    p.add_argument("--corner-hz", type=float, default=100.0)
    p.add_argument("--clamp-min", type=float, default=equalizer.DEFAULT_CLAMP[0])
    p.add_argument("--clamp-max", type=float, default=equalizer.DEFAULT_CLAMP[1])
    p.add_argument("--fir-length", type=_positive_int, default=equalizer.DEFAULT_FIR_LENGTH)
    p.add_argument("--smooth", type=float, default=0.0, help="fractional-octave smoothing, e.g. 6; 0 disables")
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("evaluate", parents=[common], help="repeated cross-validation reports")
    p.add_argument("dataset", nargs="?")
    p.add_argument("--est", default=DEFAULT_ESTIMATORS, help=f"comma-separated list (default {DEFAULT_ESTIMATORS})")
    p.add_argument("--n-tr", type=_positive_int, default=300)
    p.add_argument("--n-val", type=_positive_int, default=100)
    p.add_argument("--repeats", type=_positive_int, default=50)
    p.set_defaults(func=cmd_evaluate)
    return parser


def _subparser(parser, command):
    for action in parser._subparsers._group_actions:
        if command in action.choices:
            return action.choices[command]
    raise KeyError(command)


def _apply_config(parser, args, argv):
    """Re-parse with defaults taken from the ``--config`` file."""
    try:
        cfg = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidInput(f"config: cannot read {args.config} ({exc})") from None
    if not isinstance(cfg, dict):
        raise InvalidInput("config: top level must be a JSON object")
    sub = _subparser(parser, args.command)
    commands = {c for a in parser._subparsers._group_actions for c in a.choices}
    values = {k: v for k, v in cfg.items() if k not in commands}
    section = cfg.get(args.command, {})
    if not isinstance(section, dict):
        raise InvalidInput(f"config: section {args.command!r} must be an object")
    values.update(section)
    values = {k.replace("-", "_"): v for k, v in values.items()}
    dests = {a.dest: a for a in sub._actions}
    for key in list(values):
        if key not in dests or key in ("help", "config", "func"):
            raise InvalidInput(f"config: unknown option {key!r} for {args.command}")
        action = dests[key]
        if action.type is not None and values[key] is not None:
            try:
                values[key] = action.type(values[key]) if not isinstance(values[key], bool) else values[key]
            except (argparse.ArgumentTypeError, ValueError, InvalidInput) as exc:
                raise InvalidInput(f"config: option {key!r}: {exc}") from None
        if action.choices is not None and values[key] not in action.choices:
            raise InvalidInput(f"config: option {key!r} must be one of {list(action.choices)}")
    sub.set_defaults(**values)
    return parser.parse_args(argv)


def _setup_logging(verbose: int):
    level = logging.WARNING if verbose == 0 else logging.INFO if verbose == 1 else logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr, force=True)
    logging.captureWarnings(True)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    _setup_logging(args.verbose)
    try:
        if args.config:
            args = _apply_config(parser, args, argv)
        with warnings.catch_warnings():
            if args.verbose == 0:
                warnings.simplefilter("ignore", RuntimeWarning)
            return args.func(args)
    except (InvalidInput, VersionError, FileNotFoundError) as exc:
        print(f"roomcurve {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except RoomCurveError as exc:
        print(f"roomcurve {args.command}: failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
