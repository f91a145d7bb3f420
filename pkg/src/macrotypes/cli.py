"""Command-line experiment runner.

Every subcommand writes ``<out>/<subcommand>.csv`` and a JSON summary next
to it. The output directory defaults to ``$MACROTYPES_OUTPUT_DIR`` or
``./results``. A JSON config file (``--config``) supplies defaults for any
flag, plus an optional ``"caps"`` table.

Exit codes: 0 ok, 1 a check ran but failed, 2 invalid input, 3 resource cap
hit, 4 I/O error.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import combinatorics, histories, nmr, oracle, symmetric, tomography, tradeoff
from .errors import ResourceCapError, ValidationError

EXIT_OK, EXIT_FAILED, EXIT_INVALID, EXIT_CAP, EXIT_IO = 0, 1, 2, 3, 4
OUTPUT_ENV = "MACROTYPES_OUTPUT_DIR"


@dataclass
class ExperimentConfig:
    subcommand: str
    params: dict
    seed: int = 0
    out_dir: str = "results"
    caps: dict = field(default_factory=dict)
    workers: int = 1


# ----------------------------------------------------------------- parsing
def parse_grid(text, kind=float, points: int = 5) -> list:
    """``"1,2,3"`` -> list; ``"a..b"`` -> ``points`` log-spaced values (rounded for ints)."""
    if isinstance(text, (int, float)):
        return [kind(text)]
    if isinstance(text, list):
        return [kind(t) for t in text]
    text = str(text).strip()
    if ".." in text:
        a, b = (float(t) for t in text.split(".."))
        if not (a > 0 and b >= a):
            raise ValidationError(f"bad range {text!r}")
        vals = np.logspace(math.log10(a), math.log10(b), points)
        if kind is int:
            return sorted({int(round(v)) for v in vals})
        return [float(v) for v in vals]
    return [kind(float(t)) if kind is int else kind(t) for t in text.split(",") if t.strip()]


def parse_beta(text) -> list[np.ndarray]:
    """Amplitude vectors separated by ``;``; each is normalized. Entries may be complex (``0.5+0.1j``)."""
    out = []
    for part in str(text).split(";"):
        b = np.array([complex(t.replace(" ", "")) for t in part.split(",")])
        n = np.linalg.norm(b)
        if not n > 0:
            raise ValidationError("beta must be non-zero")
        out.append(b / n)
    return out


def _streams(seed: int, n: int) -> list[int]:
    """Independent per-grid-point seeds, fixed by ``seed`` alone."""
    if not 0 <= seed < 2**64:
        raise ValidationError("seed must be a 64-bit unsigned integer")
    return [int(s.generate_state(1, np.uint64)[0]) for s in np.random.SeedSequence(seed).spawn(n)]


def _map(fn, tasks, workers: int):
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, tasks))  # map keeps grid order


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    return v


def write_table(path, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r[c]) for c in columns])


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, (float, np.floating)):
        return float(x) if math.isfinite(x) else str(float(x))
    return _fmt(x)


# ------------------------------------------------------------- subcommands
def cmd_types(cfg: ExperimentConfig):
    p = cfg.params
    N, d = int(p["N"]), int(p["d"])
    L = combinatorics.type_table(N, d)
    rows = [{"index": i, "type": " ".join(map(str, t)), "log_class_size": float(s)}
            for i, (t, s) in enumerate(zip(L, combinatorics.log_type_class_size(L)))]
    cols = ["index", "type", "log_class_size"]
    if p.get("R"):
        R = combinatorics.prob_vector([float(t) for t in str(p["R"]).split(",")])
        for r, m in zip(rows, combinatorics.multinomial_table(N, R)):
            r["pmf"] = float(m)
        cols.append("pmf")
    return cols, rows, {"N": N, "d": d, "count": len(rows)}, True


def _oracle_case(task):
    from .crosscheck import run_case

    i, N, d, sigma, coords, seed = task
    c = run_case(N, d, sigma, np.random.default_rng(seed), coords)
    return {"case": i, "N": N, "d": d, "sigma": sigma, "coords": coords, **c.errors}


def cmd_oracle_check(cfg: ExperimentConfig):
    from .crosscheck import QUANTITIES

    p = cfg.params
    n, tol = int(p["cases"]), float(p["tol"])
    qmax, tmax = int(p["max_qubits"]), int(p["max_qutrits"])
    sigmas = parse_grid(p["sigma"])
    seeds = _streams(cfg.seed, n)
    tasks = []
    for i in range(n):
        rng = np.random.default_rng(seeds[i])
        d = 2 if i % 2 == 0 or tmax < 1 else 3
        N = int(rng.integers(1, (qmax if d == 2 else tmax) + 1))
        coords = "simplex" if (d == 2 and i % 4 == 2) else "full"
        tasks.append((i, N, d, sigmas[i % len(sigmas)], coords, seeds[i]))
    rows = _map(_oracle_case, tasks, cfg.workers)
    for r in rows:
        r["pass"] = all(r[q] < tol for q in QUANTITIES)
    worst = {q: max(r[q] for r in rows) for q in QUANTITIES}
    ok = all(r["pass"] for r in rows)
    return ["case", "N", "d", "sigma", "coords", *QUANTITIES, "pass"], rows, \
        {"cases": n, "tolerance": tol, "worst": worst, "passed": ok}, ok


def _tradeoff_task(task):
    beta, N, sigma, coords, timing = task
    pt = tradeoff.tradeoff_point(beta, N, sigma, coords)
    r = asdict(pt)
    if not timing:
        r["runtime_ms"] = ""
    return r


def cmd_tradeoff(cfg: ExperimentConfig):
    p = cfg.params
    pts = int(p["points"])
    Ns, sigmas = parse_grid(p["N"], int, pts), parse_grid(p["sigma"], float, pts)
    tasks = [(b, N, s, p["coords"], bool(p["timing"])) for b in parse_beta(p["beta"]) for N in Ns for s in sigmas]
    rows = _map(_tradeoff_task, tasks, cfg.workers)
    summary = {"points": len(rows), "bound_violations": sum(r["F_bound"] > r["F_exact"] + 1e-12 for r in rows)}
    try:
        fit = tradeoff.fit_scaling([tradeoff.TradeoffPoint(**{**r, "runtime_ms": 0.0}) for r in rows])
        summary["scaling_fit"] = asdict(fit)
    except ValidationError:
        summary["scaling_fit"] = None
    return tradeoff.CSV_COLUMNS, rows, summary, summary["bound_violations"] == 0


def cmd_conditional(cfg: ExperimentConfig):
    p = cfg.params
    N, sigma, n = int(p["N"]), float(p["sigma"]), int(p["samples"])
    beta = parse_beta(p["beta"])[0]
    if len(beta) != 2:
        raise ValidationError("conditional runs are for d = 2")
    mu = float(abs(beta[0]) ** 2)
    delta = tradeoff.conditional_fidelity_threshold(N, sigma)
    rng = np.random.default_rng(_streams(cfg.seed, 1)[0])
    ells = rng.binomial(N, mu, n) / N + sigma * rng.standard_normal(n)
    rows = []
    for i, ell in enumerate(ells):
        cf = tradeoff.conditional_fidelity(beta, N, sigma, float(ell))
        rows.append({"sample": i, "ell": float(ell), "F_exact": cf.exact, "F_gaussian": cf.gaussian,
                     "F_asymptotic_bound": cf.asymptotic_bound, "within_delta": bool(abs(ell - mu) <= delta)})
    inside = [r["F_exact"] for r in rows if r["within_delta"]]
    bad = tradeoff.bad_outcome_probability(N, sigma, delta, beta)
    bad_frac = sum(not r["within_delta"] for r in rows) / n
    summary = {"N": N, "sigma": sigma, "mu": mu, "delta_star": delta,
               "max_infidelity_inside": 1 - min(inside) if inside else None,
               "fraction_outside": bad_frac, "outside_bound": bad.bound, "outside_exact": bad.exact}
    cols = ["sample", "ell", "F_exact", "F_gaussian", "F_asymptotic_bound", "within_delta"]
    return cols, rows, summary, True


def _histories_task(task):
    N, xi, sigma, bins, fam_cfg = task
    prep = histories.block_preparation(xi, N, histories.ghz_block(xi), basis=symmetric.spin_basis("z"))
    if fam_cfg is None:
        fam = histories.zx_family(N, sigma, bins, prep)
    else:
        evs = [{"sigma": sigma, "bins": bins, **ev} for ev in fam_cfg.get("events", [])]
        fam = histories.family_from_config({**fam_cfg, "events": evs}, N, prep)
    return {"N": N, "xi": xi, "sigma": sigma, "bins": histories._bin_spec(fam),
            "epsilon": histories.sum_rule_violation(fam, prep)}


def cmd_histories(cfg: ExperimentConfig):
    p = cfg.params
    fam_cfg = None
    if p.get("family"):
        with open(p["family"]) as fh:
            fam_cfg = json.load(fh)
    N, bins = int(p["N"]), int(p["bins"])
    tasks = [(N, xi, s, bins, fam_cfg) for xi in parse_grid(p["xi"], int) for s in parse_grid(p["sigma"])]
    rows = _map(_histories_task, tasks, cfg.workers)
    return histories.EPSILON_COLUMNS, rows, {"N": N, "max_epsilon": max(r["epsilon"] for r in rows)}, True


def _random_hermitian(d, rng):
    a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return (a + a.conj().T) / 2


def cmd_commutator(cfg: ExperimentConfig):
    p = cfg.params
    d, pairs, tol = int(p["d"]), int(p["pairs"]), float(p["tol"])
    Ns = parse_grid(p["N"], int)
    seeds = _streams(cfg.seed, len(Ns) * pairs)
    rows = []
    for i, N in enumerate(Ns):
        for j in range(pairs):
            rng = np.random.default_rng(seeds[i * pairs + j])
            chk = histories.commutator_relation(_random_hermitian(d, rng), _random_hermitian(d, rng), N)
            rows.append({"N": N, "pair": j, "residual": chk.residual, "norm_ratio": chk.norm_ratio})
    worst = max(r["residual"] for r in rows)
    return ["N", "pair", "residual", "norm_ratio"], rows, {"max_residual": worst, "tolerance": tol}, worst < tol


def _tomo_task(task):
    run, seed, nu, p = task
    rec = tomography.simulate_tomography(nu, tuple(p["bases"].split(",")), float(p["sigma"]), int(p["N"]),
                                         seed=seed, rounds=int(p["rounds"]), mode=p["mode"])
    last = rec.steps[-1]
    return {"run": run, "seed": seed, "concentration@0.05": last.concentration_05,
            "concentration@0.1": last.concentration_10, "spread": last.spread, "mode_index": last.mode,
            "success": last.concentration_10 >= float(p["threshold"])}


def cmd_tomography(cfg: ExperimentConfig):
    p = cfg.params
    if p.get("bloch"):
        nu = tomography.bloch_state([float(t) for t in str(p["bloch"]).split(",")])
    else:
        nu = tomography.PriorGrid.bloch().states[int(p["grid_point"])]
    runs = int(p["runs"])
    tasks = [(i, s, nu, p) for i, s in enumerate(_streams(cfg.seed, runs))]
    rows = _map(_tomo_task, tasks, cfg.workers)
    ok = sum(r["success"] for r in rows)
    need = int(p["need"]) if p.get("need") is not None else runs
    summary = {"runs": runs, "successes": ok, "required": need, "bloch": tomography.bloch_vector(nu)}
    cols = ["run", "seed", "concentration@0.05", "concentration@0.1", "spread", "mode_index", "success"]
    return cols, rows, summary, ok >= need


def cmd_nmr(cfg: ExperimentConfig):
    p = cfg.params
    pts = nmr.coil_sweep(int(p["N"]), float(p["width"]), parse_grid(p["fractions"]), float(p["gamma_t"]))
    rows = [{"N": q.N, "lambda": q.lam, "sigma_mix": q.sigma_mix, "total_width": q.total_width,
             "F_post": q.F_post, "outcome_var": q.outcome_var} for q in pts]
    return nmr.NMR_COLUMNS, rows, {"points": len(rows)}, True


COMMANDS = {
    "types": cmd_types, "oracle-check": cmd_oracle_check, "tradeoff": cmd_tradeoff,
    "conditional": cmd_conditional, "histories": cmd_histories, "commutator": cmd_commutator,
    "tomography": cmd_tomography, "nmr": cmd_nmr,
}


# -------------------------------------------------------------------- main
def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    ap = argparse.ArgumentParser(prog="macrotypes", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="subcommand", required=True)
    subs = {}

    def add(name, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", default=None, help=f"output directory (default ${OUTPUT_ENV} or ./results)")
        sp.add_argument("--config", default=None, help="JSON file with flag defaults")
        sp.add_argument("--workers", type=int, default=1)
        subs[name] = sp
        return sp

    sp = add("types", "enumerate types with class sizes")
    sp.add_argument("--N", default=4)
    sp.add_argument("--d", default=2)
    sp.add_argument("--R", default=None, help="letter probabilities, adds a pmf column")

    sp = add("oracle-check", "symmetric engine vs dense oracle")
    sp.add_argument("--max-qubits", dest="max_qubits", default=8)
    sp.add_argument("--max-qutrits", dest="max_qutrits", default=5)
    sp.add_argument("--cases", default=50)
    sp.add_argument("--sigma", default="0,0.1,0.3")
    sp.add_argument("--tol", default=1e-9)

    sp = add("tradeoff", "fidelity vs coarseness sweep")
    sp.add_argument("--N", default="100..10000")
    sp.add_argument("--sigma", default="0.001..1")
    sp.add_argument("--beta", default="1,1", help="amplitudes, ';' between vectors")
    sp.add_argument("--points", default=5, help="grid size for a..b ranges")
    sp.add_argument("--coords", default="full", choices=["full", "simplex"])
    sp.add_argument("--timing", action="store_true", help="fill runtime_ms (breaks byte-identical output)")

    sp = add("conditional", "fidelity after sampled outcomes")
    sp.add_argument("--N", default=4000)
    sp.add_argument("--sigma", default=0.05)
    sp.add_argument("--beta", default="1,1")
    sp.add_argument("--samples", default=200)

    sp = add("histories", "sum-rule violation of binned histories")
    sp.add_argument("--family", default=None, help="JSON family description")
    sp.add_argument("--N", default=256)
    sp.add_argument("--sigma", default="0.01,0.03,0.05,0.1,0.3")
    sp.add_argument("--xi", default="1")
    sp.add_argument("--bins", default=5)

    sp = add("commutator", "macro-observable commutator scaling")
    sp.add_argument("--N", default="2,3,4")
    sp.add_argument("--d", default=2)
    sp.add_argument("--pairs", default=10)
    sp.add_argument("--tol", default=1e-12)

    sp = add("tomography", "exchangeable-prior tomography runs")
    sp.add_argument("--N", default=1000)
    sp.add_argument("--sigma", default=0.05)
    sp.add_argument("--bases", default="z,x,y")
    sp.add_argument("--rounds", default=1)
    sp.add_argument("--runs", default=20)
    sp.add_argument("--mode", default="reuse", choices=["reuse", "fresh"])
    sp.add_argument("--bloch", default=None, help="true Bloch vector x,y,z")
    sp.add_argument("--grid-point", dest="grid_point", default=150)
    sp.add_argument("--threshold", default=0.9)
    sp.add_argument("--need", default=None)

    sp = add("nmr", "coil width split sweep")
    sp.add_argument("--N", default=10000)
    sp.add_argument("--width", default=0.1)
    sp.add_argument("--fractions", default="1,0.5,0.1,0.01")
    sp.add_argument("--gamma-t", dest="gamma_t", default=1.0)
    return ap, subs


def _apply_caps(caps: dict) -> None:
    if "type_count" in caps:
        combinatorics.TYPE_COUNT_CAP = int(caps["type_count"])
    if "dense_dim" in caps:
        oracle.DIM_CAP = int(caps["dense_dim"])
    if "density_dim" in caps:
        symmetric.DENSITY_DIM_CAP = int(caps["density_dim"])


def load_config(argv) -> tuple[ExperimentConfig, argparse.ArgumentParser]:
    ap, subs = build_parser()
    args = ap.parse_args(argv)
    caps = {}
    if args.config:
        with open(args.config) as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise ValidationError("config must be a JSON object")
        caps = data.pop("caps", {})
        subs[args.subcommand].set_defaults(**{k.replace("-", "_"): v for k, v in data.items()})
        args = ap.parse_args(argv)  # explicit flags still win
    params = {k: v for k, v in vars(args).items() if k not in ("subcommand", "seed", "out", "config", "workers")}
    out = args.out or os.environ.get(OUTPUT_ENV) or "results"
    return ExperimentConfig(args.subcommand, params, int(args.seed), out, caps, int(args.workers)), ap


def run(cfg: ExperimentConfig) -> int:
    _apply_caps(cfg.caps)
    cols, rows, summary, ok = COMMANDS[cfg.subcommand](cfg)
    os.makedirs(cfg.out_dir, exist_ok=True)
    stem = os.path.join(cfg.out_dir, cfg.subcommand)
    write_table(stem + ".csv", cols, rows)
    with open(stem + ".json", "w") as fh:
        json.dump(_jsonable({"subcommand": cfg.subcommand, "seed": cfg.seed, "params": cfg.params,
                             "caps": cfg.caps, "passed": ok, "summary": summary,
                             "csv": os.path.basename(stem + ".csv")}), fh, indent=1, sort_keys=True)
        fh.write("\n")
    return EXIT_OK if ok else EXIT_FAILED


def main(argv=None) -> int:
    t0 = time.perf_counter()
    try:
        cfg, _ = load_config(argv)
        code = run(cfg)
    except ResourceCapError as e:
        print(f"resource cap: {e}", file=sys.stderr)
        return EXIT_CAP
    except (ValidationError, ValueError, KeyError, json.JSONDecodeError) as e:
        print(f"invalid input: {e}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return EXIT_IO
    print(f"{cfg.subcommand}: {'ok' if code == 0 else 'FAILED'} -> {cfg.out_dir} ({time.perf_counter() - t0:.1f}s)")
    return code
