"""Batch command-line front end.

Verbs: encode, decode, train, generate, reconstruct, evaluate, inspect-schedule.
Every verb writes ``run_manifest.json`` (effective config, seed, version) next
to its outputs. Exit codes: 0 success, 1 usage or config error, 2 empty or
invalid input set, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .codec import DbscanParams, ElementSlots, decode, encode, load_tensor, save_tensor
from .crystal import read_poscar, save_poscar, validate_encodable
from .denoiser import PRESETS, DenoiserConfig, TrainConfig, load_checkpoint, save_checkpoint, train
from .diffusion import cosine_schedule, oracle_predictor, reconstruct, sample
from .errors import InvalidParams, NonFiniteActivation, NonFiniteGradient, NonFiniteLoss, PCCDError
from .evaluation import (
    CorpusIndex,
    atom_count_confusion,
    confusion_csv,
    error_series,
    evaluate_pair,
    match_report_csv,
    novelty_check,
    summary_csv,
    summary_table,
)

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3
NON_STRUCTURE_SUFFIXES = {".pct", ".csv", ".json", ".pccdckpt", ".md", ".txt"}


class UsageError(Exception):
    pass


# --- configuration -----------------------------------------------------------------

DEFAULTS = {
    "seed": None,
    "jobs": 1,
    "output_dir": ".",
    "dataset_dir": None,
    "schedule": {"T": 1000, "s": 0.008},
    "denoiser": {"preset": "four-stage"},
    "train": {},
    "codec": {"dbscan_eps": 0.05, "min_pts": 3, "slot_policy": "structure"},
    "evaluation": {"species_aware": True, "wrap": True, "bond_cutoff": 3.0, "novelty_tol": 0.3},
}

# section owning each leaf key; a flag named like the leaf overrides it
SECTION_OF = {
    "T": "schedule", "s": "schedule",
    "preset": "denoiser", "stages": "denoiser", "widths": "denoiser",
    "use_attention": "denoiser", "time_embed_dim": "denoiser",
    "learning_rate": "train", "batch_size": "train", "training_steps": "train",
    "adam_beta1": "train", "adam_beta2": "train", "adam_epsilon": "train",
    "dbscan_eps": "codec", "min_pts": "codec", "slot_policy": "codec",
    "species_aware": "evaluation", "wrap": "evaluation",
    "bond_cutoff": "evaluation", "novelty_tol": "evaluation",
}
TOP_LEVEL = {"seed", "jobs", "output_dir", "dataset_dir"}


@dataclasses.dataclass
class RunConfig:
    dataset_dir: str | None
    output_dir: str
    schedule: dict
    denoiser: DenoiserConfig
    train: TrainConfig
    codec: DbscanParams
    slot_policy: str
    evaluation: dict
    seed: int | None
    jobs: int

    def to_dict(self) -> dict:
        return {
            "dataset_dir": self.dataset_dir,
            "output_dir": self.output_dir,
            "schedule": dict(self.schedule),
            "denoiser": {**dataclasses.asdict(self.denoiser), "widths": list(self.denoiser.widths)},
            "train": dataclasses.asdict(self.train),
            "codec": {"dbscan_eps": self.codec.eps, "min_pts": self.codec.min_pts, "slot_policy": self.slot_policy},
            "evaluation": dict(self.evaluation),
            "seed": self.seed,
            "jobs": self.jobs,
        }


def _merge(base: dict, extra: dict) -> dict:
    out = json.loads(json.dumps(base))
    for key, val in extra.items():
        if key in TOP_LEVEL:
            out[key] = val
        elif key in out and isinstance(val, dict):
            out[key].update(val)
        elif key in SECTION_OF:
            out[SECTION_OF[key]][key] = val
        else:
            raise UsageError(f"unknown config key {key!r}")
    return out


def build_config(args) -> RunConfig:
    raw = DEFAULTS
    if getattr(args, "config", None):
        try:
            raw = _merge(raw, json.loads(Path(args.config).read_text()))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
    flags = {k: v for k, v in vars(args).items() if (k in SECTION_OF or k in TOP_LEVEL) and v is not None}
    raw = _merge(raw, flags)

    try:
        cosine_schedule(int(raw["schedule"]["T"]), float(raw["schedule"]["s"]))
    except (InvalidParams, ValueError, TypeError) as exc:
        raise UsageError(f"invalid schedule: {exc}") from exc
    try:
        den = dict(raw["denoiser"])
        preset = den.pop("preset", None)
        if preset is not None and preset not in PRESETS:
            raise UsageError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
        base = dataclasses.asdict(PRESETS[preset]) if preset else {}
        base.update(den)
        base["T"] = int(raw["schedule"]["T"])
        if "widths" in den and "stages" not in den:
            base["stages"] = len(base["widths"])
        dcfg = DenoiserConfig(**base)
        tcfg = TrainConfig(**{**raw["train"], "seed": 0 if raw["seed"] is None else int(raw["seed"])})
        codec = DbscanParams(eps=float(raw["codec"]["dbscan_eps"]), min_pts=int(raw["codec"]["min_pts"]))
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid configuration: {exc}") from exc
    if raw["codec"]["slot_policy"] != "structure":
        raise UsageError("slot_policy must be 'structure'")
    jobs = int(raw["jobs"])
    if jobs < 1:
        raise UsageError("--jobs must be at least 1")
    return RunConfig(
        raw["dataset_dir"], str(raw["output_dir"]), raw["schedule"], dcfg, tcfg, codec,
        raw["codec"]["slot_policy"], raw["evaluation"], raw["seed"], jobs,
    )


def _schedule(cfg: RunConfig):
    try:
        return cosine_schedule(int(cfg.schedule["T"]), float(cfg.schedule["s"]))
    except (InvalidParams, ValueError) as exc:
        raise UsageError(str(exc)) from exc


def _require_seed(cfg: RunConfig) -> int:
    if cfg.seed is None:
        raise UsageError("this command is randomized; pass --seed")
    return int(cfg.seed)


# --- file helpers --------------------------------------------------------------------


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def write_manifest(out: Path, command: str, cfg: RunConfig, extra: dict | None = None) -> None:
    doc = {"command": command, "version": __version__, "seed": cfg.seed, "config": cfg.to_dict()}
    if extra:
        doc.update(extra)
    (out / "run_manifest.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _num(v) -> str:
    return repr(float(v))


def structure_files(directory) -> list[Path]:
    d = Path(directory)
    if not d.is_dir():
        raise UsageError(f"not a directory: {d}")
    return sorted(
        p for p in d.iterdir()
        if p.is_file() and not p.name.startswith(".") and p.suffix.lower() not in NON_STRUCTURE_SUFFIXES
    )


def load_dataset(directory):
    """``[(name, structure | None, problems)]`` for every candidate file, name-sorted."""
    items = []
    for path in structure_files(directory):
        try:
            s = read_poscar(path)
        except (PCCDError, UnicodeDecodeError) as exc:
            items.append((path.name, None, [f"parse error: {exc}"]))
            continue
        items.append((path.name, s, validate_encodable(s)))
    return items


def _pmap(fn, items, jobs):
    """Order-preserving map, optionally over a process pool."""
    if jobs <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _parse_elements(text: str) -> ElementSlots:
    symbols = [s for s in text.replace(";", ",").split(",") if s.strip()]
    symbols = [s.strip() for s in symbols]
    if len(symbols) > 3:
        raise UsageError(f"input up to three elements (got {len(symbols)})")
    try:
        return ElementSlots(tuple(symbols))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


# --- verbs -----------------------------------------------------------------------------


def cmd_encode(args, cfg: RunConfig) -> int:
    dataset = args.dataset_dir or cfg.dataset_dir
    if dataset is None:
        raise UsageError("encode needs a dataset directory")
    out = _out_dir(cfg)
    rows, n_ok = [], 0
    for name, s, problems in load_dataset(dataset):
        if s is None or problems:
            rows.append([name, s.formula() if s else "", "", s.num_sites if s else "", "skipped", "; ".join(problems)])
            continue
        slots = ElementSlots.for_structure(s)
        save_tensor(encode(s, slots), out / f"{Path(name).stem}.pct")
        rows.append([name, s.formula(), ";".join(slots.symbols), s.num_sites, "encoded", ""])
        n_ok += 1
    header = ["filename", "formula", "slots", "site_count", "status", "violations"]
    (out / "manifest.csv").write_text(_csv_text(header, rows))
    write_manifest(out, "encode", cfg)
    print(f"encoded {n_ok} of {len(rows)} files into {out}")
    return EXIT_OK if n_ok else EXIT_INPUT


def _slots_from_manifest(pct: Path):
    manifest = pct.parent / "manifest.csv"
    if not manifest.exists():
        return None
    with open(manifest, newline="") as fh:
        for row in csv.DictReader(fh):
            if Path(row["filename"]).stem == pct.stem and row.get("slots"):
                return ElementSlots(tuple(row["slots"].split(";")))
    return None


def cmd_decode(args, cfg: RunConfig) -> int:
    paths = []
    for p in map(Path, args.tensors):
        paths += sorted(p.glob("*.pct")) if p.is_dir() else [p]
    if not paths:
        print("no .pct tensors given", file=sys.stderr)
        return EXIT_INPUT
    fixed = _parse_elements(args.elements) if args.elements else None
    out = _out_dir(cfg)
    rows, n_ok = [], 0
    for path in paths:
        slots = fixed or _slots_from_manifest(path)
        if slots is None:
            raise UsageError(f"no element slots for {path.name}; pass --elements")
        try:
            s, diag = decode(load_tensor(path), slots, cfg.codec)
        except PCCDError as exc:
            rows.append([path.name, "", "", "", "", f"failed: {exc}"])
            continue
        save_poscar(s, out / f"{path.stem}.vasp")
        rows.append([path.name, diag.n_clusters, diag.noise_points, s.formula(), "; ".join(diag.flags), "ok"])
        n_ok += 1
    header = ["tensor", "n_clusters", "noise_points", "formula", "flags", "status"]
    (out / "decode_diagnostics.csv").write_text(_csv_text(header, rows))
    write_manifest(out, "decode", cfg)
    print(f"decoded {n_ok} of {len(paths)} tensors into {out}")
    return EXIT_OK if n_ok else EXIT_INPUT


def _load_training_tensors(directory):
    d = Path(directory)
    pcts = sorted(d.glob("*.pct")) if d.is_dir() else []
    if pcts:
        return [load_tensor(p) for p in pcts]
    return [encode(s) for _, s, problems in load_dataset(d) if s is not None and not problems]


def cmd_train(args, cfg: RunConfig) -> int:
    _require_seed(cfg)
    dataset = args.dataset_dir or cfg.dataset_dir
    if dataset is None:
        raise UsageError("train needs a dataset directory")
    sch = _schedule(cfg)
    data = _load_training_tensors(dataset)
    if not data:
        print("training set is empty", file=sys.stderr)
        return EXIT_INPUT
    resume = None
    if args.resume:
        resume = _load_ckpt(args.resume)
    out = _out_dir(cfg)
    try:
        result = train(data, sch, cfg.denoiser, cfg.train, checkpoint=resume)
    except (NonFiniteLoss, NonFiniteGradient, NonFiniteActivation) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    save_checkpoint(result.checkpoint, out / "model.pccdckpt")
    rows = [[i + 1, _num(loss)] for i, loss in enumerate(result.losses)]
    (out / "loss.csv").write_text(_csv_text(["step", "loss"], rows))
    write_manifest(out, "train", cfg, {"n_tensors": len(data), "n_parameters": result.checkpoint.n_parameters()})
    print(json.dumps(cfg.to_dict(), sort_keys=True))
    print(f"trained {len(result.losses)} steps, final loss {result.losses[-1]:.5f}")
    return EXIT_OK


def _load_ckpt(path):
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"checkpoint not found: {p}")
    try:
        return load_checkpoint(p)
    except PCCDError as exc:
        raise UsageError(f"cannot load checkpoint {p}: {exc}") from exc


def _generate_one(job):
    predictor_source, sch, seed, slots, params = job
    x = sample(_make_predictor(predictor_source, sch), sch, seed)
    try:
        s, diag = decode(x, slots, params)
        return seed, s, diag, None
    except PCCDError as exc:
        return seed, None, None, str(exc)


def _make_predictor(source, sch):
    kind, payload = source
    if kind == "oracle":
        return oracle_predictor(payload, sch)
    return payload.predictor(sch)


def cmd_generate(args, cfg: RunConfig) -> int:
    seed = _require_seed(cfg)
    slots = _parse_elements(args.elements)
    if args.count < 1:
        raise UsageError("--count must be positive")
    sch = _schedule(cfg)
    if args.oracle_x0:
        source = ("oracle", load_tensor(args.oracle_x0))
    elif args.checkpoint:
        source = ("checkpoint", _load_ckpt(args.checkpoint))
    else:
        raise UsageError("generate needs --checkpoint")
    out = _out_dir(cfg)
    jobs = [(source, sch, seed + i, slots, cfg.codec) for i in range(args.count)]
    rows, n_ok = [], 0
    for k, (sd, s, diag, err) in enumerate(_pmap(_generate_one, jobs, cfg.jobs)):
        name = f"gen_{k:04d}.vasp"
        if s is None:
            rows.append([name, sd, "", "", "", f"failed: {err}"])
            continue
        save_poscar(s, out / name)
        rows.append([name, sd, diag.n_clusters, diag.noise_points, s.formula(), "ok" + ("" if not diag.flags else " (low confidence)")])
        n_ok += 1
    header = ["file", "seed", "n_clusters", "noise_points", "formula", "status"]
    (out / "generate_diagnostics.csv").write_text(_csv_text(header, rows))
    write_manifest(out, "generate", cfg, {"elements": list(slots.symbols), "count": args.count})
    print(f"generated {args.count} samples, {n_ok} decoded")
    return EXIT_OK


def _reconstruct_one(job):
    name, s, source, sch, seed, params, ev = job
    slots = ElementSlots.for_structure(s)
    x0 = encode(s, slots)
    pred_source = ("oracle", x0) if source[0] == "oracle" else source
    x = reconstruct(x0, _make_predictor(pred_source, sch), sch, seed)
    try:
        p, _ = decode(x, slots, params)
    except PCCDError:
        p = None
    report = evaluate_pair(
        name, s, p, species_aware=ev["species_aware"], wrap=ev["wrap"], cutoff=ev["bond_cutoff"],
    )
    return x, report


def _write_evaluation(out: Path, originals, reports) -> None:
    (out / "match_report.csv").write_text(match_report_csv(reports))
    counts = [(r.n_original, r.n_predicted) for r in reports]
    matrix, _ = atom_count_confusion(counts)
    (out / "confusion.csv").write_text(confusion_csv(matrix))
    (out / "summary.csv").write_text(summary_csv(summary_table(error_series(reports))))


def cmd_reconstruct(args, cfg: RunConfig) -> int:
    seed = _require_seed(cfg)
    dataset = args.dataset_dir or cfg.dataset_dir
    if dataset is None:
        raise UsageError("reconstruct needs a dataset directory")
    sch = _schedule(cfg)
    if args.oracle:
        source = ("oracle", None)
    elif args.checkpoint:
        source = ("checkpoint", _load_ckpt(args.checkpoint))
    else:
        raise UsageError("reconstruct needs --checkpoint or --oracle")
    items = [(n, s) for n, s, problems in load_dataset(dataset) if s is not None and not problems]
    if not items:
        print("no encodable structures", file=sys.stderr)
        return EXIT_INPUT
    out = _out_dir(cfg)
    tdir = out / "tensors"
    tdir.mkdir(exist_ok=True)
    jobs = [(n, s, source, sch, seed + i, cfg.codec, cfg.evaluation) for i, (n, s) in enumerate(items)]
    results = _pmap(_reconstruct_one, jobs, cfg.jobs)
    for (name, _), (x, _) in zip(items, results):
        save_tensor(x, tdir / f"{Path(name).stem}.pct")
    reports = [r for _, r in results]
    _write_evaluation(out, [s for _, s in items], reports)
    write_manifest(out, "reconstruct", cfg, {"mode": source[0], "n_structures": len(items)})
    acc = np.mean([r.n_original == r.n_predicted for r in reports])
    print(f"reconstructed {len(items)} structures, atom-count accuracy {acc:.4f}")
    return EXIT_OK


def _evaluate_one(job):
    name, o, p, ev = job
    return evaluate_pair(name, o, p, species_aware=ev["species_aware"], wrap=ev["wrap"], cutoff=ev["bond_cutoff"])


def cmd_evaluate(args, cfg: RunConfig) -> int:
    originals = {n: s for n, s, _ in load_dataset(args.originals) if s is not None}
    predicted = {n: s for n, s, _ in load_dataset(args.predictions) if s is not None}
    pred_by_stem = {Path(n).stem: s for n, s in predicted.items()}
    if not originals:
        print("no original structures", file=sys.stderr)
        return EXIT_INPUT
    out = _out_dir(cfg)
    jobs = [(n, o, pred_by_stem.get(Path(n).stem), cfg.evaluation) for n, o in originals.items()]
    reports = _pmap(_evaluate_one, jobs, cfg.jobs)
    _write_evaluation(out, list(originals.values()), reports)
    if args.novelty_corpus:
        corpus = CorpusIndex((n, s) for n, s, _ in load_dataset(args.novelty_corpus) if s is not None)
        rows = []
        for n, s in predicted.items():
            res = novelty_check(s, corpus, float(cfg.evaluation["novelty_tol"]))
            rows.append([n, s.formula(), int(res.novel), res.match_id or "", "" if res.distance is None else _num(res.distance)])
        (out / "novelty.csv").write_text(_csv_text(["file", "formula", "novel", "match_id", "distance"], rows))
    write_manifest(out, "evaluate", cfg, {"n_pairs": len(reports)})
    print(f"evaluated {len(reports)} pairs, {sum(r.matched for r in reports)} with matching site counts")
    return EXIT_OK


def cmd_inspect_schedule(args, cfg: RunConfig) -> int:
    sch = _schedule(cfg)
    out = _out_dir(cfg)
    (out / "schedule.csv").write_text(sch.to_csv())
    write_manifest(out, "inspect-schedule", cfg)
    print(f"alpha_bar_T = {sch.alpha_bar[-1]:.6e}")
    return EXIT_OK


# --- argument parsing ----------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _bool(text: str) -> bool:
    low = text.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {text}")


def _widths(text: str):
    return [int(w) for w in text.split(",")]


def _common_flags(default):
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("global options")
    g.add_argument("--config", default=default, help="JSON config file; flags override its keys")
    g.add_argument("--seed", type=int, default=default, help="seed for randomized commands (required there)")
    g.add_argument("--jobs", type=int, default=default, help="worker processes for per-structure work")
    g.add_argument("--output-dir", dest="output_dir", default=default, help="where outputs are written")
    o = p.add_argument_group("config overrides")
    o.add_argument("--T", type=int, default=default, help="diffusion steps")
    o.add_argument("--s", type=float, default=default, help="cosine schedule offset")
    o.add_argument("--preset", default=default, help=f"denoiser preset ({', '.join(PRESETS)})")
    o.add_argument("--stages", type=int, default=default)
    o.add_argument("--widths", type=_widths, default=default, help="comma-separated channel widths")
    o.add_argument("--use-attention", dest="use_attention", type=_bool, default=default)
    o.add_argument("--time-embed-dim", dest="time_embed_dim", type=int, default=default)
    o.add_argument("--learning-rate", dest="learning_rate", type=float, default=default)
    o.add_argument("--batch-size", dest="batch_size", type=int, default=default)
    o.add_argument("--training-steps", dest="training_steps", type=int, default=default)
    o.add_argument("--adam-beta1", dest="adam_beta1", type=float, default=default)
    o.add_argument("--adam-beta2", dest="adam_beta2", type=float, default=default)
    o.add_argument("--adam-epsilon", dest="adam_epsilon", type=float, default=default)
    o.add_argument("--dbscan-eps", dest="dbscan_eps", type=float, default=default)
    o.add_argument("--min-pts", dest="min_pts", type=int, default=default)
    o.add_argument("--species-aware", dest="species_aware", type=_bool, default=default)
    o.add_argument("--wrap", type=_bool, default=default)
    o.add_argument("--bond-cutoff", dest="bond_cutoff", type=float, default=default)
    o.add_argument("--novelty-tol", dest="novelty_tol", type=float, default=default)
    return p


def build_parser() -> argparse.ArgumentParser:
    # global flags are accepted before or after the verb
    parser = _Parser(prog="pccd", description=__doc__.splitlines()[0], parents=[_common_flags(None)])
    parser.add_argument("--version", action="version", version=f"pccd {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    common = _common_flags(argparse.SUPPRESS)

    p = sub.add_parser("encode", parents=[common], help="POSCAR directory -> .pct tensors + manifest.csv")
    p.add_argument("dataset_dir", nargs="?")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", parents=[common], help=".pct tensors -> POSCAR files")
    p.add_argument("tensors", nargs="+", help=".pct files or directories of them")
    p.add_argument("--elements", help="slot elements, e.g. Mg,Mn,O (default: encode manifest)")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("train", parents=[common], help="fit the denoiser on a dataset")
    p.add_argument("dataset_dir", nargs="?", help="POSCAR directory or directory of .pct tensors")
    p.add_argument("--resume", help="continue from this checkpoint")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("generate", parents=[common], help="sample new structures")
    p.add_argument("--checkpoint")
    p.add_argument("--elements", required=True, help="up to three element symbols, e.g. Li,Fe,O")
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--oracle-x0", dest="oracle_x0", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("reconstruct", parents=[common], help="noise and denoise a dataset, then evaluate")
    p.add_argument("dataset_dir", nargs="?")
    p.add_argument("--checkpoint")
    p.add_argument("--oracle", action="store_true", help="use the exact noise oracle instead of a network")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("evaluate", parents=[common], help="compare predicted POSCARs against originals")
    p.add_argument("originals")
    p.add_argument("predictions")
    p.add_argument("--novelty-corpus", dest="novelty_corpus", help="reference POSCAR directory for novelty")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("inspect-schedule", parents=[common], help="dump the noise schedule as CSV")
    p.set_defaults(func=cmd_inspect_schedule)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = build_config(args)
        return args.func(args, cfg)
    except UsageError as exc:
        print(f"pccd: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
