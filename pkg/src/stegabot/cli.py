"""``stegabot`` command line. The only module that touches files.

Exit codes: 0 success, 2 usage, 3 capacity/domain, 4 extraction failure,
5 I/O or format error. ``STEGABOT_LOG`` sets the log level (default WARNING).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .core import add_salt, frame_message, morse_to_text, text_to_morse
from .errors import FormatError, StegoError, UsageError
from .lsb import (
    DEFAULT_QUANTUM,
    FloatSeries,
    PcmClip,
    RasterImage,
    capacity,
    float_embed,
    float_extract,
    image_embed,
    image_extract,
    pcm_embed,
    pcm_extract,
)
from .motion import DriftCode, MotionScenario, Trajectory2D, decode_trajectory, simulate
from .observer import SensorSpec, observe_timeline, observe_trajectory, preset
from .scheduler import load_propositions, plan_messages, transmission_window
from .steganalysis import CorpusSpec, chi_square_lsb, evaluate_detectors, reference_compare
from .study import run_study
from .timing import (
    DelayCode,
    EventTimeline,
    OnsetDetectorConfig,
    delays_decode,
    delays_encode,
    detect_onsets,
    jitter_gaps,
    render_envelope,
)

log = logging.getLogger("stegabot")

CARRIERS = ("auto", "image", "pcm", "float", "timeline", "trajectory")


# --- file helpers -------------------------------------------------------------

def _read_bytes(path: str) -> bytes:
    return Path(path).read_bytes()


def _read_text(path: str) -> str:
    return Path(path).read_text()


def _write(path: str, data: bytes | str) -> None:
    p = Path(path)
    if p.parent and not p.parent.exists():
        p.parent.mkdir(parents=True)
    if isinstance(data, str):
        data = data.encode()
    p.write_bytes(data)
    log.info("wrote %s (%d bytes)", p, len(data))


def _read_json(path: str) -> dict:
    try:
        return json.loads(_read_text(path))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON: {exc}") from None


def _emit(obj, args, text: str | None = None) -> None:
    if getattr(args, "format", "json") == "text" and text is not None:
        sys.stdout.write(text)
    else:
        sys.stdout.write(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def carrier_kind(path: str, explicit: str = "auto") -> str:
    if explicit != "auto":
        return explicit
    suffix = Path(path).suffix.lower()
    if suffix in (".pgm", ".ppm", ".pnm"):
        return "image"
    if suffix == ".wav":
        return "pcm"
    if suffix == ".csv":
        first = _read_text(path).lstrip().split("\n", 1)[0]
        cols = [c.strip().lower() for c in first.split(",")]
        if cols[:2] == ["onset", "duration"]:
            return "timeline"
        if cols == ["t", "x", "y"]:
            return "trajectory"
        return "float"
    raise UsageError(f"cannot infer carrier type of {path}; pass --carrier")


def _load_signal(path: str, kind: str, quantum: float = DEFAULT_QUANTUM):
    if kind == "image":
        return RasterImage.from_bytes(_read_bytes(path))
    if kind == "pcm":
        return PcmClip.from_bytes(_read_bytes(path))
    if kind == "float":
        return FloatSeries.from_csv(_read_text(path), quantum)
    if kind == "timeline":
        return EventTimeline.from_csv(_read_text(path))
    if kind == "trajectory":
        return Trajectory2D.from_csv(_read_text(path))
    raise UsageError(f"unknown carrier {kind!r}")


def _drift_code(args) -> DriftCode:
    return DriftCode(amplitude=args.amplitude, dot_hold=args.dot_hold)


# --- commands -----------------------------------------------------------------

def cmd_embed(args) -> int:
    kind = carrier_kind(args.inp, args.carrier)
    payload = frame_message(args.message)
    bits = payload.to_bits()
    if args.salt:
        if args.seed is None:
            raise UsageError("--salt needs an explicit --seed")
        bits = add_salt(bits, args.salt, args.seed)
    summary = {"carrier": kind, "message_bytes": payload.length, "payload_bits": int(bits.size)}
    if kind in ("image", "pcm", "float"):
        cover = _load_signal(args.inp, kind, args.quantum)
        if kind == "image":
            out = image_embed(cover, bits, args.offset, args.stride)
            before, after = cover.samples.astype(np.int64), out.samples.astype(np.int64)
            _write(args.out, out.to_bytes())
        elif kind == "pcm":
            out = pcm_embed(cover, bits, args.offset, args.stride)
            before, after = cover.samples.astype(np.int64), out.samples.astype(np.int64)
            _write(args.out, out.to_bytes())
        else:
            out = float_embed(cover, bits, args.tolerance, args.offset, args.stride)
            before, after = cover.values.ravel(), out.values.ravel()
            _write(args.out, out.to_csv(args.precision))
        summary["capacity_bits"] = capacity(before.size, args.offset, args.stride)
        summary["elements_changed"] = int(np.count_nonzero(before != after))
        summary["max_perturbation"] = float(np.max(np.abs(after - before))) if before.size else 0.0
    elif kind == "timeline":
        cover = _load_signal(args.inp, kind)
        msg = text_to_morse(args.message)
        out = delays_encode(cover.durations, msg, DelayCode(), start=float(cover.onsets[0]))
        _write(args.out, out.to_csv(9))
        summary.update(
            payload_bits=0,
            morse=str(msg),
            capacity_symbols=len(cover) - 1,
            symbols_used=len(msg),
        )
    else:
        raise UsageError("trajectories are generated with `stegabot simulate`, not embedded into")
    summary["out"] = args.out
    _emit(summary, args)
    return 0


def cmd_extract(args) -> int:
    kind = carrier_kind(args.inp, args.carrier)
    signal = _load_signal(args.inp, kind, args.quantum)
    if kind == "image":
        text = image_extract(signal, args.offset, args.stride)
    elif kind == "pcm":
        text = pcm_extract(signal, args.offset, args.stride)
    elif kind == "float":
        text = float_extract(signal, args.offset, args.stride)
    elif kind == "timeline":
        text = morse_to_text(delays_decode(signal, DelayCode()))
    else:
        text = morse_to_text(decode_trajectory(signal, args.centerline, _drift_code(args)))
    sys.stdout.write(text + "\n")
    return 0


def cmd_plan(args) -> int:
    props = load_propositions(_read_text(args.inp))
    if args.budget is not None:
        budget = args.budget
    elif None not in (args.distance, args.speed, args.density):
        budget = transmission_window(args.distance, args.speed, args.density)
    else:
        raise UsageError("give --budget, or all of --distance, --speed and --density")
    plan = plan_messages(props, budget)
    text = plan.to_json() + "\n"
    if args.out:
        _write(args.out, text)
    sys.stdout.write(text)
    return 0


def _require_seed(cfg: dict, what: str) -> int:
    if "seed" not in cfg:
        raise UsageError(f"{what} uses randomness; its config must set an explicit \"seed\"")
    return int(cfg["seed"])


def _simulate_motion(cfg: dict) -> tuple[str, dict]:
    scenario = MotionScenario.from_dict(cfg)
    msg = text_to_morse(scenario.message)
    traj = simulate(scenario.initial, scenario.field, msg, scenario.code, scenario.dt, scenario.duration)
    report = {"channel": "motion", "message": scenario.message, "morse": str(msg),
              "samples": len(traj),
              "max_lateral": float(np.max(np.abs(traj.x - scenario.field.goal.x_c)))}
    observed = traj
    if "sensor" in cfg:
        sensor_cfg = dict(cfg["sensor"])
        spec = SensorSpec.from_dict(sensor_cfg)
        if spec.noise_sigma > 0:
            _require_seed(sensor_cfg, "sensor")
        observed = observe_trajectory(traj, spec)
        report["sensor"] = json.loads(spec.to_json())
    try:
        decoded = morse_to_text(decode_trajectory(observed, scenario.field.goal.x_c, scenario.code))
    except StegoError as exc:
        decoded = None
        report["decode_error"] = f"{type(exc).__name__}: {exc}"
    report.update(decoded=decoded, match=decoded == scenario.message.upper() if msg else decoded is None)
    return traj.to_csv(), report


def _simulate_timing(cfg: dict) -> tuple[str, dict]:
    message = cfg.get("message", "")
    msg = text_to_morse(message)
    code = DelayCode(**cfg.get("code", {}))
    if "utterances" in cfg:
        durations = np.asarray(cfg["utterances"], dtype=float)
    else:
        durations = np.full(len(msg) + 1, float(cfg.get("utterance_duration", 0.4)))
    timeline = delays_encode(durations, msg, code)
    report = {"channel": "timing", "message": message, "morse": str(msg), "utterances": len(timeline)}
    heard = timeline
    jitter = float(cfg.get("jitter_sigma", 0.0))
    if jitter > 0:
        rng = np.random.default_rng(_require_seed(cfg, "gap jitter"))
        heard = jitter_gaps(heard, jitter, rng)
    if cfg.get("detector"):
        det = OnsetDetectorConfig(**cfg["detector"])
        heard = detect_onsets(render_envelope(heard, det.rate), det)
    try:
        decoded = morse_to_text(delays_decode(heard, code))
    except StegoError as exc:
        decoded = None
        report["decode_error"] = f"{type(exc).__name__}: {exc}"
    report.update(decoded=decoded, match=decoded == message.upper())
    return timeline.to_csv(9), report


def cmd_simulate(args) -> int:
    cfg = _read_json(args.config)
    channel = cfg.get("channel", "motion")
    if channel == "motion":
        csv_text, report = _simulate_motion(cfg)
    elif channel == "timing":
        csv_text, report = _simulate_timing(cfg)
    else:
        raise UsageError(f"unknown channel {channel!r}; use motion or timing")
    if args.out:
        _write(args.out, csv_text)
    if args.report:
        _write(args.report, json.dumps(report, indent=2, sort_keys=True) + "\n")
    _emit(report, args)
    return 0


def cmd_observe(args) -> int:
    kind = carrier_kind(args.inp, args.carrier)
    if kind == "timeline":
        if args.jitter is None:
            raise UsageError("observing a timeline needs --jitter")
        if args.jitter > 0 and args.seed is None:
            raise UsageError("--jitter needs an explicit --seed")
        out = observe_timeline(_load_signal(args.inp, kind), args.jitter, args.seed or 0)
        _write(args.out, out.to_csv(9))
        return 0
    if kind != "trajectory":
        raise UsageError("observe works on trajectory (t,x,y) or timeline (onset,duration) CSV")
    if args.config:
        cfg = _read_json(args.config)
        spec = SensorSpec.from_dict(cfg)
        seeded = "seed" in cfg or args.seed is not None
    elif args.sensor:
        spec = preset(args.sensor)
        seeded = args.seed is not None
    else:
        raise UsageError("give --sensor PRESET or --config SENSOR.json")
    if args.seed is not None:
        spec = SensorSpec(spec.kind, spec.rate, spec.noise_sigma, spec.quantization, args.seed)
    if spec.noise_sigma > 0 and not seeded:
        raise UsageError("noisy sensors need an explicit seed (--seed or \"seed\" in the config)")
    out = observe_trajectory(_load_signal(args.inp, kind), spec)
    _write(args.out, out.to_csv(9))
    return 0


def cmd_analyze(args) -> int:
    kind = carrier_kind(args.inp, args.carrier)
    suspect = _load_signal(args.inp, kind, args.quantum)
    method = args.method
    if method == "auto":
        method = "reference_compare" if args.reference else "chi_square"
    if method == "reference_compare":
        if not args.reference:
            raise UsageError("reference_compare needs --reference")
        ref = _load_signal(args.reference, carrier_kind(args.reference, args.carrier), args.quantum)
        report = reference_compare(ref, suspect, args.tolerance)
    else:
        if kind not in ("image", "pcm"):
            raise UsageError("chi_square works on images and PCM audio")
        report = chi_square_lsb(suspect.samples)
    _emit(report.to_dict(), args, report.to_text())
    return 0


def cmd_evaluate(args) -> int:
    cfg = _read_json(args.config) if args.config else {}
    if args.seed is not None:
        cfg["seed"] = args.seed
    _require_seed(cfg, "corpus generation")
    for key in ("count", "capacity", "detector", "tolerance"):
        val = getattr(args, key)
        if val is not None:
            cfg[key] = val
    if args.shape:
        cfg["shape"] = args.shape
    detector = cfg.pop("detector", "reference_compare")
    params = dict(cfg.pop("params", {}))
    if "tolerance" in cfg:
        params["tolerance"] = cfg.pop("tolerance")
    workers = int(cfg.pop("workers", args.workers))
    try:
        corpus = CorpusSpec(**cfg)
    except TypeError as exc:
        raise UsageError(f"bad corpus config: {exc}") from None
    table = evaluate_detectors(corpus, detector, params, workers=workers)
    out = table.to_dict()
    out["corpus"] = {"count": corpus.count, "seed": corpus.seed, "shape": list(corpus.shape),
                     "capacity": corpus.capacity, "carrier": corpus.carrier}
    text = json.dumps(out, indent=2, sort_keys=True) + "\n"
    if args.out:
        _write(args.out, text if args.format == "json" else table.to_text())
    _emit(out, args, table.to_text())
    return 0


def cmd_demo_study(args) -> int:
    result = run_study(seed=args.seed)
    outdir = Path(args.out)
    for name, data in sorted(result.files.items()):
        _write(str(outdir / name), data)
    sys.stdout.write(result.log())
    return 0 if result.passed else 4


# --- parser -------------------------------------------------------------------

def _add_lsb_options(p, precision=True):
    p.add_argument("--carrier", choices=CARRIERS, default="auto")
    p.add_argument("--offset", type=int, default=0, help="first sample used")
    p.add_argument("--stride", type=int, default=1, help="samples per payload bit")
    p.add_argument("--quantum", type=float, default=DEFAULT_QUANTUM,
                   help="float embedding grid step (default %(default)g)")
    if precision:
        p.add_argument("--precision", type=int, default=6, help="decimals written for float CSV")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stegabot", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("embed", help="hide a message in a carrier file")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--message", required=True)
    p.add_argument("--tolerance", type=float, help="largest float perturbation allowed")
    p.add_argument("--salt", type=float, default=0.0, help="fraction of random filler bits")
    p.add_argument("--seed", type=int)
    p.add_argument("--format", choices=("json",), default="json")
    _add_lsb_options(p)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("extract", help="recover a hidden message")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--centerline", type=float, default=0.0)
    p.add_argument("--amplitude", type=float, default=DriftCode.amplitude)
    p.add_argument("--dot-hold", type=float, default=DriftCode.dot_hold)
    _add_lsb_options(p, precision=False)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("plan", help="schedule propositions within a time budget")
    p.add_argument("--in", dest="inp", required=True, help="JSON list of propositions")
    p.add_argument("--out")
    p.add_argument("--budget", type=float, help="seconds available")
    p.add_argument("--distance", type=float, help="metres to the next interruption")
    p.add_argument("--speed", type=float, help="m/s")
    p.add_argument("--density", type=float, help="message share of the carrier, (0, 1]")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("simulate", help="run a motion or timing scenario")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="trajectory or timeline CSV")
    p.add_argument("--report", help="also write the decode report here")
    p.add_argument("--format", choices=("json",), default="json")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("observe", help="degrade a signal through a sensor model")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--sensor", help="preset name, e.g. gps_rtk, camera_dashcam")
    p.add_argument("--config", help="SensorSpec JSON")
    p.add_argument("--jitter", type=float, help="onset jitter sigma for timelines, seconds")
    p.add_argument("--seed", type=int)
    p.add_argument("--carrier", choices=CARRIERS, default="auto")
    p.set_defaults(func=cmd_observe)

    p = sub.add_parser("analyze", help="steganalysis of a suspect file")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--reference", help="known-good signal of the same kind")
    p.add_argument("--method", choices=("auto", "reference_compare", "chi_square"), default="auto")
    p.add_argument("--tolerance", type=float, default=0.0)
    p.add_argument("--format", choices=("json", "text"), default="json")
    _add_lsb_options(p, precision=False)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("evaluate", help="detector accuracy over a generated corpus")
    p.add_argument("--config", help="corpus JSON (count, seed, shape, capacity, detector, params)")
    p.add_argument("--count", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--capacity", type=float)
    p.add_argument("--shape", type=int, nargs=2, metavar=("H", "W"))
    p.add_argument("--detector", choices=("reference_compare", "chi_square"))
    p.add_argument("--tolerance", type=float)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out")
    p.add_argument("--format", choices=("json", "text"), default="json")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("demo-study", help="rebuild the five study embeddings")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_demo_study)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        level=os.environ.get("STEGABOT_LOG", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except StegoError as exc:
        err = {"error": type(exc).__name__, "message": str(exc), "exit_code": exc.exit_code}
        sys.stderr.write(json.dumps(err, sort_keys=True) + "\n")
        return exc.exit_code
    except OSError as exc:
        sys.stderr.write(json.dumps({"error": "IOError", "message": str(exc), "exit_code": 5}) + "\n")
        return 5


if __name__ == "__main__":
    sys.exit(main())
