"""Acceptance criteria, one test per criterion at the stated tolerances.

A PASS/FAIL line per criterion is printed in the terminal summary.
"""

import contextlib
import csv
import json
import time

import numpy as np
import pytest

from pccd.cli import main
from pccd.codec import HALF, SHAPE, ElementSlots, decode, decode_lattice_channel, encode, load_tensor
from pccd.crystal import CrystalStructure, lattice_from_parameters, read_poscar, save_poscar
from pccd.denoiser import PRESETS, TrainConfig, train
from pccd.denoiser import layers as L
from pccd.denoiser import DenoiserCheckpoint, loss_and_gradient
from pccd.diffusion import cosine_schedule, make_rng, predict_x0, q_sample, reconstruct
from pccd.errors import PCCDError
from pccd.evaluation import (
    coordinate_relative_errors,
    graph_edit_distance,
    lattice_relative_errors,
    match_atoms,
    rms_anonymous_distance,
    summary_csv,
    summary_table,
    superpose_distance,
)

from _helpers import DATA, cubic, mgmno3, random_structure, same_structure

TINY = PRESETS["tiny"]
# toy training shared by criteria 6 and 7
TOY_TRAIN = TrainConfig(learning_rate=1e-2, batch_size=16, training_steps=200, seed=0)
TOY_LONG_STEPS = 5000


class Detail:
    text = ""


@contextlib.contextmanager
def criterion(acceptance, n):
    d = Detail()
    try:
        yield d
    except BaseException as exc:
        msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
        acceptance[n] = (False, f"{d.text} {msg}".strip())
        raise
    acceptance[n] = (True, d.text)


# --- 1 --------------------------------------------------------------------------------------


def test_criterion_1_oracle_reconstruction(acceptance, tmp_path):
    with criterion(acceptance, 1) as d:
        t0 = time.perf_counter()
        rng = np.random.default_rng(2024)
        src = tmp_path / "dataset"
        src.mkdir()
        for i in range(50):
            save_poscar(random_structure(rng), src / f"s{i:02d}.vasp")
        out = tmp_path / "rec"
        assert main(["reconstruct", str(src), "--oracle", "--T", "1000", "--seed", "0", "--output-dir", str(out)]) == 0
        worst_tensor = worst_err = 0.0
        n_match = 0
        for i in range(50):
            o = read_poscar(src / f"s{i:02d}.vasp")
            slots = ElementSlots.for_structure(o)
            x = load_tensor(out / "tensors" / f"s{i:02d}.pct")
            worst_tensor = max(worst_tensor, float(np.max(np.abs(x - encode(o, slots)))))
            p, _ = decode(x, slots)
            n_match += p.num_sites == o.num_sites
            a = match_atoms(o, p)
            coord, _ = coordinate_relative_errors(a, o, p)
            worst_err = max(worst_err, float(np.max(np.abs(lattice_relative_errors(o, p)))), float(np.max(np.abs(coord))))
        conf = list(csv.reader(open(out / "confusion.csv")))
        m = np.array([[int(v) for v in row[1:]] for row in conf[1:]])
        elapsed = time.perf_counter() - t0
        d.text = f"tensor err {worst_tensor:.1e}, count accuracy {n_match}/50, worst rel err {worst_err:.1e}, {elapsed:.0f}s"
        assert worst_tensor < 1e-6
        assert n_match == 50 and np.trace(m) == m.sum() == 50
        assert worst_err < 1e-6
        assert elapsed < 120


# --- 2 --------------------------------------------------------------------------------------


def test_criterion_2_codec_round_trip(acceptance):
    with criterion(acceptance, 2) as d:
        t0 = time.perf_counter()
        rng = np.random.default_rng(7)
        structures = [random_structure(rng) for _ in range(200)]
        exact = sum(same_structure(s, decode(encode(s), ElementSlots.for_structure(s))[0], 1e-9) for s in structures)
        counts, worst_len = 0, 0.0
        for s in structures:
            slots = ElementSlots.for_structure(s)
            p, _ = decode(encode(s, slots) + rng.normal(0, 0.01, SHAPE), slots)
            counts += p.num_sites == s.num_sites
            worst_len = max(worst_len, float(np.max(np.abs(p.lattice.lengths / s.lattice.lengths - 1))))
        elapsed = time.perf_counter() - t0
        d.text = f"exact {exact}/200, noisy count accuracy {counts}/200, worst length err {worst_len:.2%}, {elapsed:.0f}s"
        assert exact == 200 and counts == 200 and worst_len < 0.02 and elapsed < 60


# --- 3 --------------------------------------------------------------------------------------


def test_criterion_3_lattice_math(acceptance):
    with criterion(acceptance, 3) as d:
        ch = np.empty((128, 3))
        ch[:HALF], ch[HALF:] = 0.50, 0.25
        params = decode_lattice_channel(ch)
        assert params == (3.75, 3.75, 3.75, np.pi / 2, np.pi / 2, np.pi / 2)
        lat = lattice_from_parameters(*params)
        assert np.allclose(lat.vectors, 3.75 * np.eye(3), rtol=0, atol=1e-15)
        x = encode(CrystalStructure(cubic(3.75), ["Po"], [[0, 0, 0]]))
        assert np.allclose(x[2, :HALF], 0.5, atol=1e-15) and np.allclose(x[2, HALF:], 0.25, atol=1e-15)

        rng = np.random.default_rng(3)
        worst, n = 0.0, 0
        while n < 1000:
            a, b, c = rng.uniform(1, 15, 3)
            al, be, ga = rng.uniform(0.3, np.pi - 0.3, 3)
            try:
                v = lattice_from_parameters(a, b, c, al, be, ga).vectors
            except PCCDError:
                continue
            n += 1
            checks = [
                (v[0] @ v[0], a * a), (v[1] @ v[1], b * b), (v[2] @ v[2], c * c),
                (v[1] @ v[2], b * c * np.cos(al)), (v[0] @ v[2], a * c * np.cos(be)), (v[0] @ v[1], a * b * np.cos(ga)),
            ]
            worst = max(worst, max(abs(got - want) for got, want in checks))
        d.text = f"worked example exact, worst dot identity residual {worst:.1e} over 1000 cells"
        assert worst < 1e-10


# --- 4 --------------------------------------------------------------------------------------


def test_criterion_4_scheduler_identities(acceptance):
    with criterion(acceptance, 4) as d:
        sch = cosine_schedule(1000, 0.008)
        assert np.all(np.diff(sch.alpha_bar) < 0)
        prod_err = float(np.max(np.abs(np.cumprod(sch.alpha) - sch.alpha_bar)))
        assert prod_err < 1e-12

        rng = make_rng(0)
        n = 100_000
        worst_var = 0.0
        for t in (1, 10, 100, 500, 900, 1000):
            var = q_sample(rng.standard_normal(n), t, rng.standard_normal(n), sch).var()
            worst_var = max(worst_var, abs(var - 1) / np.sqrt(2.0 / n))
        assert worst_var < 3

        x0 = rng.uniform(0, 1, SHAPE)
        eps = rng.standard_normal(SHAPE)
        errs = np.array([np.max(np.abs(predict_x0(q_sample(x0, t, eps, sch), t, eps, sch) - x0)) for t in range(1, 1001)])
        bad = np.flatnonzero(errs >= 1e-12) + 1
        d.text = (
            f"product err {prod_err:.1e}, variance within {worst_var:.2f} sigma, "
            f"predict_x0 worst err {errs.max():.1e} at t={int(np.argmax(errs)) + 1}"
        )
        assert bad.size == 0, f"predict_x0 identity above 1e-12 at t={bad.tolist()}"


# --- 5 --------------------------------------------------------------------------------------


def _fd_failures(fn, arrays, grads, h=1e-5):
    bad = 0
    for name, arr in arrays.items():
        for i in range(arr.size):
            old = arr.flat[i]
            arr.flat[i] = old + h
            up = fn()
            arr.flat[i] = old - h
            down = fn()
            arr.flat[i] = old
            fd = (up - down) / (2 * h)
            err = abs(fd - grads[name].flat[i])
            bad += not (err <= 1e-7 or err <= 1e-4 * abs(fd))
    return bad


def test_criterion_5_gradients(acceptance):
    with criterion(acceptance, 5) as d:
        t0 = time.perf_counter()
        rng = make_rng(1)
        failures, checked = {}, 0

        x, w, b = rng.standard_normal((2, 3, 8)), rng.standard_normal((4, 3, 3)), rng.standard_normal(4)
        wt = rng.standard_normal((2, 4, 8))
        dx, dw, db = L.conv1d_backward(wt, L.conv1d_forward(x, w, b)[1])
        failures["conv1d"] = _fd_failures(lambda: np.sum(wt * L.conv1d_forward(x, w, b)[0]), {"x": x, "w": w, "b": b}, {"x": dx, "w": dw, "b": db})

        x, w, b = rng.standard_normal((3, 5)), rng.standard_normal((4, 5)), rng.standard_normal(4)
        wt = rng.standard_normal((3, 4))
        dx, dw, db = L.linear_backward(wt, L.linear_forward(x, w, b)[1])
        failures["linear"] = _fd_failures(lambda: np.sum(wt * L.linear_forward(x, w, b)[0]), {"x": x, "w": w, "b": b}, {"x": dx, "w": dw, "b": db})

        x = 3 * rng.standard_normal(40)
        wt = rng.standard_normal(40)
        dx = L.silu_backward(wt, L.silu_forward(x)[1])
        failures["silu"] = _fd_failures(lambda: np.sum(wt * L.silu_forward(x)[0]), {"x": x}, {"x": dx})

        x = rng.standard_normal((2, 3, 8))
        wp, wu = rng.standard_normal((2, 3, 4)), rng.standard_normal((2, 3, 16))
        failures["avgpool"] = _fd_failures(lambda: np.sum(wp * L.avgpool_forward(x)[0]), {"x": x}, {"x": L.avgpool_backward(wp, None)})
        failures["upsample"] = _fd_failures(lambda: np.sum(wu * L.upsample_forward(x)[0]), {"x": x}, {"x": L.upsample_backward(wu, None)})

        h = rng.standard_normal((2, 4, 6))
        ws = {k: 0.5 * rng.standard_normal((4, 4)) for k in ("wq", "wk", "wv", "wo")}
        ws["bo"] = rng.standard_normal(4)
        wt = rng.standard_normal((2, 4, 6))
        dh, *g = L.attention_backward(wt, L.attention_forward(h, **ws)[1])
        grads = {"h": dh, **dict(zip(("wq", "wk", "wv", "wo", "bo"), g))}
        failures["attention"] = _fd_failures(lambda: np.sum(wt * L.attention_forward(h, **ws)[0]), {"h": h, **ws}, grads)

        # whole network at tiny width, through the MAE loss, every parameter
        ckpt = DenoiserCheckpoint.initialize(TINY, seed=3)
        for k in ckpt.params:
            ckpt.params[k] = ckpt.params[k] + 0.1 * rng.standard_normal(ckpt.params[k].shape)
        xt = rng.standard_normal((2, 3, 128, 3))
        t = np.array([3, 700])
        eps = rng.standard_normal((2, 3, 128, 3))
        _, grads = loss_and_gradient(ckpt, xt, t, eps)
        failures["network"] = _fd_failures(lambda: loss_and_gradient(ckpt, xt, t, eps)[0], ckpt.params, grads)
        checked = ckpt.n_parameters()

        elapsed = time.perf_counter() - t0
        d.text = f"failures {failures}, {checked} network parameters checked, {elapsed:.0f}s"
        assert sum(failures.values()) == 0 and elapsed < 60


# --- 6 and 7 ----------------------------------------------------------------------------


@pytest.fixture(scope="module")
def toy_run():
    s = mgmno3()
    slots = ElementSlots.for_structure(s)
    data = [encode(s, slots)] * 16
    sch = cosine_schedule()
    t0 = time.perf_counter()
    short = train(data, sch, TINY, TOY_TRAIN)
    elapsed = time.perf_counter() - t0
    return s, slots, data, sch, short, elapsed


def test_criterion_6_training_smoke(acceptance, toy_run):
    with criterion(acceptance, 6) as d:
        *_, short, elapsed = toy_run
        losses = np.array(short.losses)
        first, last = losses[:20].mean(), losses[-20:].mean()
        d.text = f"initial loss {losses[0]:.3f}, 20-step mean {first:.3f} -> {last:.3f} ({1 - last / first:.0%} drop), {elapsed:.0f}s"
        assert len(losses) == 200
        assert 0.5 <= losses[0] <= 1.5
        assert last <= 0.5 * first
        assert elapsed < 600


def _count_hits(x0, slots, n_sites, predictor, sch):
    hits = 0
    for seed in range(10):
        try:
            p, _ = decode(reconstruct(x0, predictor, sch, seed=seed), slots)
        except PCCDError:
            continue
        hits += p.num_sites == n_sites
    return hits


def test_criterion_7_trained_reconstruction(acceptance, toy_run):
    with criterion(acceptance, 7) as d:
        s, slots, data, sch, short, _ = toy_run
        x0 = data[0]
        hits_short = _count_hits(x0, slots, s.num_sites, short.checkpoint.predictor(sch), sch)
        # same data, config and optimizer state, continued until memorized
        more = TrainConfig(**{**TOY_TRAIN.__dict__, "training_steps": TOY_LONG_STEPS - TOY_TRAIN.training_steps})
        long = train(data, sch, TINY, more, checkpoint=short.checkpoint)
        hits = _count_hits(x0, slots, s.num_sites, long.checkpoint.predictor(sch), sch)
        d.text = f"{hits}/10 atom counts recovered after {TOY_LONG_STEPS} toy steps ({hits_short}/10 after 200)"
        assert hits >= 8


# --- 8 --------------------------------------------------------------------------------------


def test_criterion_8_evaluation_metrics(acceptance):
    with criterion(acceptance, 8) as d:
        rng = np.random.default_rng(8)
        worst_id = worst_shift = 0.0
        for _ in range(10):
            s = random_structure(rng)
            assert graph_edit_distance(s, s).distance == 0
            worst_id = max(worst_id, superpose_distance(s, s), rms_anonymous_distance(s, s))
            moved = CrystalStructure(s.lattice, s.species, s.frac + rng.uniform(-1, 1, 3))
            worst_shift = max(worst_shift, superpose_distance(s, moved), rms_anonymous_distance(s, moved))
        assert worst_id == 0.0
        assert worst_shift < 1e-6

        # linear-interpolation quartiles: Q1 3.25, Q3 7.75, IQR 4.5
        fixture = [1, 2, 3, 4, 5, 6, 7, 8, 9, 100]
        series = {k: np.array(fixture, dtype=float) for k in "abcxyz"}
        table = {r["statistic"]: r for r in csv.DictReader(summary_csv(summary_table(series)).splitlines())}
        for k in "abcxyz":
            assert float(table["efficiency"][k]) == 0.9
            assert float(table["upper limit"][k]) == 14.5
            assert float(table["lower limit"][k]) == 1.0
        d.text = f"identity 0, translated copies <= {worst_shift:.1e}, summary whiskers (1.0, 14.5) rate 0.9"


# --- 9 --------------------------------------------------------------------------------------


def _snapshot(directory):
    """Every file's bytes; the run manifest minus the output path it records."""
    snap = {}
    for p in sorted(directory.rglob("*")):
        if not p.is_file():
            continue
        rel = str(p.relative_to(directory))
        if p.name == "run_manifest.json":
            doc = json.loads(p.read_text())
            doc["config"].pop("output_dir")
            snap[rel] = json.dumps(doc, sort_keys=True).encode()
        else:
            snap[rel] = p.read_bytes()
    return snap


def test_criterion_9_determinism(acceptance, tmp_path):
    with criterion(acceptance, 9) as d:
        poscars = DATA / "poscars"
        runs = [tmp_path / "a", tmp_path / "b"]
        for root in runs:
            root.mkdir()
            tiny = ["--preset", "tiny", "--learning-rate", "0.01", "--batch-size", "4", "--seed", "11"]
            assert main(["encode", str(poscars), "--output-dir", str(root / "encode")]) == 0
            assert main(["decode", str(root / "encode"), "--output-dir", str(root / "decode")]) == 0
            assert main(["train", str(poscars), "--training-steps", "5", *tiny, "--output-dir", str(root / "train")]) == 0
            ckpt = str(root / "train" / "model.pccdckpt")
            assert main(["generate", "--checkpoint", ckpt, "--elements", "Mg,Mn,O", "--count", "2", *tiny, "--output-dir", str(root / "generate")]) == 0
            assert main(["reconstruct", str(poscars), "--checkpoint", ckpt, *tiny, "--output-dir", str(root / "reconstruct")]) == 0
            assert main(["reconstruct", str(poscars), "--oracle", "--seed", "11", "--jobs", "2", "--output-dir", str(root / "oracle")]) == 0
            assert main(["evaluate", str(poscars), str(root / "decode"), "--novelty-corpus", str(poscars), "--output-dir", str(root / "evaluate")]) == 0
            assert main(["inspect-schedule", "--output-dir", str(root / "schedule")]) == 0
        a, b = (_snapshot(r) for r in runs)
        differing = sorted(k for k in a.keys() | b.keys() if a.get(k) != b.get(k))
        d.text = f"{len(a)} output files compared across 8 commands, {len(differing)} differ"
        assert not differing, f"differing outputs: {differing}"
