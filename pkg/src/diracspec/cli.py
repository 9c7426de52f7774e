"""Command-line orchestrator.

Subcommands: hypotheses, solve, boundedness, subordinacy, eigen, scan,
bv-verify, asymptotics, plotdata.  One JSON config schema is shared by all
commands; unknown keys are rejected so that runs stay auditable.  Outputs
are deterministic given config and seed: repeated runs produce byte-equal
files.

Exit codes: 0 success; 1 the analysis found violations or subordinate
behaviour where the invocation demanded none; 2 usage or config error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .asymptotics import (
    borderline_trajectory,
    compare_asymptotics,
    defect_convergence,
    wkb_reference,
)
from .boundedness import (
    almost_monotone_check,
    auto_start_radius,
    comparability_constant,
    r_trace,
)
from .bvcalc import (
    SampledFunction,
    WindowLadder,
    check_product_bound,
    check_quotient_bounds,
    jordan_decompose,
    lambda_trichotomy_probe,
    variation,
)
from .coefficients import (
    CoefficientModel,
    ConstantChannel,
    assemble_channel,
    model_from_dict,
    models_equal,
)
from .hypotheses import (
    VIOLATED,
    check_a_conditions,
    check_b_conditions,
    check_c_conditions,
    check_derivative_sufficiency,
    gamma_diagnostics,
)
from .solver import (
    PreconditionError,
    SolveConfig,
    integrate_cartesian,
    integrate_pruefer,
    prefer_pruefer,
)
from .subordinacy import classify_spectrum, eigen_shoot, subordinacy_ratio

__all__ = ["main", "load_config", "fixture_path", "ConfigError", "RunConfig"]

EXIT_OK = 0
EXIT_FINDINGS = 1
EXIT_USAGE = 2


class ConfigError(ValueError):
    pass


_TOP_KEYS = {"model", "channel", "k_set", "lambda_grid", "bracket", "solver",
             "ladder", "tail_ladder", "subordinacy", "eigen", "asymptotics",
             "bv", "seed", "workers"}
_SOLVER_KEYS = {"rtol", "atol", "max_step", "r_start", "r_end", "stride"}
_LADDER_KEYS = {"start", "factor", "rungs"}
_SUB_KEYS = {"r0", "r_end", "delta"}
_EIGEN_KEYS = {"scan_step", "tol"}
_ASY_KEYS = {"windows", "r_start", "r_end", "stride"}
_BV_KEYS = {"instances"}


@dataclass
class RunConfig:
    model: CoefficientModel | None
    channel_const: ConstantChannel | None
    k_set: list
    lambda_grid: list
    bracket: list | None
    solver: dict
    ladder: WindowLadder
    tail_ladder: WindowLadder
    subordinacy: dict
    eigen: dict
    asymptotics: dict
    bv: dict
    seed: int
    workers: int

    def solve_config(self, **overrides) -> SolveConfig:
        kw = dict(self.solver)
        kw.update(overrides)
        return SolveConfig(**kw)


def _check_keys(obj, allowed, where):
    if not isinstance(obj, dict):
        raise ConfigError(f"{where}: expected an object")
    extra = sorted(set(obj) - allowed)
    if extra:
        raise ConfigError(f"{where}: unknown keys {extra}")


def load_config(path) -> RunConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as err:
        raise ConfigError(f"config is not valid JSON: {err}")
    _check_keys(raw, _TOP_KEYS, "config")

    model = None
    if "model" in raw:
        try:
            model = model_from_dict(raw["model"])
        except ValueError as err:
            raise ConfigError(str(err))
    channel_const = None
    if "channel" in raw:
        _check_keys(raw["channel"], {"Q", "M", "L"}, "config.channel")
        missing = sorted({"Q", "M", "L"} - set(raw["channel"]))
        if missing:
            raise ConfigError(f"config.channel: missing keys {missing}")
        channel_const = ConstantChannel(float(raw["channel"]["Q"]),
                                        float(raw["channel"]["M"]),
                                        float(raw["channel"]["L"]))

    k_set = raw.get("k_set", [])
    if not isinstance(k_set, list) or any(
            not isinstance(k, int) or k == 0 for k in k_set):
        raise ConfigError("config.k_set: expected a list of nonzero integers")
    lambda_grid = raw.get("lambda_grid", [])
    if not isinstance(lambda_grid, list) or any(
            not isinstance(l, (int, float)) or not math.isfinite(l)
            for l in lambda_grid):
        raise ConfigError("config.lambda_grid: expected a list of finite reals")
    lambda_grid = [float(l) for l in lambda_grid]

    bracket = raw.get("bracket")
    if bracket is not None:
        if (not isinstance(bracket, list) or len(bracket) != 2
                or bracket[0] >= bracket[1]):
            raise ConfigError("config.bracket: expected [lo, hi] with lo < hi")
        bracket = [float(bracket[0]), float(bracket[1])]

    solver = {"r_start": 1.0, "r_end": 100.0, "rtol": 1e-12, "atol": 1e-14,
              "max_step": math.inf, "stride": 0.05}
    if "solver" in raw:
        _check_keys(raw["solver"], _SOLVER_KEYS, "config.solver")
        solver.update({k: float(v) for k, v in raw["solver"].items()})

    def ladder_from(key, default):
        if key not in raw:
            return default
        _check_keys(raw[key], _LADDER_KEYS, f"config.{key}")
        kw = {"start": 25.0, "factor": 2.0 if key == "ladder" else 10.0,
              "rungs": 4 if key == "ladder" else 3}
        kw.update(raw[key])
        return WindowLadder(float(kw["start"]), float(kw["factor"]),
                            int(kw["rungs"]))

    ladder = ladder_from("ladder", WindowLadder(25.0, 2.0, 4))
    tail_ladder = ladder_from("tail_ladder", WindowLadder(25.0, 10.0, 3))

    sub = {"r0": 1.0, "r_end": 120.0, "delta": 1e-3}
    if "subordinacy" in raw:
        _check_keys(raw["subordinacy"], _SUB_KEYS, "config.subordinacy")
        sub.update({k: float(v) for k, v in raw["subordinacy"].items()})
    eigen = {"scan_step": 0.05, "tol": 1e-8}
    if "eigen" in raw:
        _check_keys(raw["eigen"], _EIGEN_KEYS, "config.eigen")
        eigen.update({k: float(v) for k, v in raw["eigen"].items()})
    asy = {"windows": None, "r_start": 5.0, "r_end": 210.0, "stride": 0.02}
    if "asymptotics" in raw:
        _check_keys(raw["asymptotics"], _ASY_KEYS, "config.asymptotics")
        asy.update(raw["asymptotics"])
    bv = {"instances": 200}
    if "bv" in raw:
        _check_keys(raw["bv"], _BV_KEYS, "config.bv")
        bv.update({k: int(v) for k, v in raw["bv"].items()})

    return RunConfig(model=model, channel_const=channel_const, k_set=k_set,
                     lambda_grid=lambda_grid, bracket=bracket, solver=solver,
                     ladder=ladder, tail_ladder=tail_ladder, subordinacy=sub,
                     eigen=eigen, asymptotics=asy, bv=bv,
                     seed=int(raw.get("seed", 0)),
                     workers=int(raw.get("workers", 1)))


def fixture_path(name: str) -> Path:
    base = resources.files("diracspec") / "fixtures" / f"{name}.json"
    with resources.as_file(base) as p:
        return Path(p)


# ---------------------------------------------------------------------------
# deterministic writers


def _write_json(path: Path, obj):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _write_rows(path: Path, header: str, rows, comment: str = ""):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        if comment:
            fh.write(comment + "\n")
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def _fmt(x):
    if isinstance(x, str):
        return x
    return repr(float(x))


def _cell_name(k, lam):
    return f"k={k}_lambda={lam:g}"


def _print_table(title, reports):
    print(title)
    for rep in reports:
        aux = " (aux)" if rep.auxiliary else ""
        note = f"  [{rep.note}]" if rep.note else ""
        print(f"  {rep.condition_id:<18} {rep.verdict:<13}{aux}{note}")


# ---------------------------------------------------------------------------
# subcommands


def _require(cond, message):
    if not cond:
        raise ConfigError(message)


def cmd_hypotheses(cfg: RunConfig, out: Path, assert_mode: bool) -> int:
    _require(cfg.model is not None, "hypotheses needs a 'model' in the config")
    _require(cfg.lambda_grid, "hypotheses needs a nonempty 'lambda_grid'")
    model = cfg.model
    doc = {"kind": "hypotheses", "model": model.to_dict(), "conditions": [],
           "channels": {}}
    reports = check_a_conditions(model, cfg.lambda_grid, cfg.k_set or None,
                                 extreme_ladder=cfg.ladder,
                                 tail_ladder=cfg.tail_ladder)
    if model.m.has_derivative and model.q.has_derivative:
        reports += check_derivative_sufficiency(model,
                                                tail_ladder=cfg.tail_ladder)
    equal, _ = models_equal(model)
    if equal:
        reports += check_b_conditions(model, extreme_ladder=cfg.ladder,
                                      tail_ladder=cfg.tail_ladder)
        for lam in cfg.lambda_grid:
            try:
                reports += gamma_diagnostics(model, lam,
                                             tail_ladder=cfg.tail_ladder,
                                             extreme_ladder=cfg.ladder)
                break  # one representative spectral parameter is enough
            except ValueError:
                continue
    doc["conditions"] = [r.to_dict() for r in reports]
    _print_table("model conditions:", reports)

    violated = any(r.verdict == VIOLATED and not r.auxiliary for r in reports)
    for k in cfg.k_set:
        for lam in cfg.lambda_grid:
            channel = assemble_channel(model, k, lam)
            creps = check_c_conditions(channel, extreme_ladder=cfg.ladder,
                                       tail_ladder=cfg.tail_ladder)
            doc["channels"][_cell_name(k, lam)] = [r.to_dict() for r in creps]
            _print_table(f"channel {channel.label()}:", creps)
            violated = violated or any(
                r.verdict == VIOLATED and not r.auxiliary for r in creps)
    _write_json(out / "hypotheses.json", doc)
    return EXIT_FINDINGS if violated else EXIT_OK


def _channels_from(cfg: RunConfig):
    if cfg.channel_const is not None:
        return [(None, None, cfg.channel_const)]
    _require(cfg.model is not None,
             "need either a 'model' or a constant 'channel' in the config")
    _require(cfg.k_set, "need a nonempty 'k_set'")
    _require(cfg.lambda_grid, "need a nonempty 'lambda_grid'")
    return [(k, lam, assemble_channel(cfg.model, k, lam))
            for k in cfg.k_set for lam in cfg.lambda_grid]


def cmd_solve(cfg: RunConfig, out: Path, assert_mode: bool) -> int:
    failed = False
    for k, lam, channel in _channels_from(cfg):
        scfg = cfg.solve_config()
        if prefer_pruefer(channel, scfg.r_start, scfg.r_end):
            traj = integrate_pruefer(channel, 1.0, 0.0, scfg)
        else:
            traj = integrate_cartesian(channel, [1.0, 0.0], scfg)
        name = "const" if k is None else _cell_name(k, lam)
        traj.to_csv(out / f"trajectory_{name}.csv")
        print(f"solved {channel.label()}: mode={traj.mode} "
              f"status={traj.status} points={len(traj.grid)}")
        failed = failed or traj.status != 0
    return EXIT_FINDINGS if (assert_mode and failed) else EXIT_OK


def cmd_boundedness(cfg: RunConfig, out: Path, assert_mode: bool) -> int:
    findings = False
    for k, lam, channel in _channels_from(cfg):
        name = "const" if k is None else _cell_name(k, lam)
        creps = check_c_conditions(channel, extreme_ladder=cfg.ladder,
                                   tail_ladder=cfg.tail_ladder)
        doc = {"kind": "boundedness", "channel": channel.label(),
               "conditions": [r.to_dict() for r in creps]}
        try:
            r0 = auto_start_radius(channel)
            scfg = cfg.solve_config(r_start=r0, rtol=max(cfg.solver["rtol"], 1e-10),
                                    atol=max(cfg.solver["atol"], 1e-12))
            traj = integrate_cartesian(channel, [1.0, 0.0], scfg)
            trace = r_trace(traj)
            trace.to_csv(out / f"rtrace_{name}.csv")
            verdicts = almost_monotone_check(traj)
            doc["almost_monotone"] = {
                "pairs": len(verdicts),
                "failures": [v.__dict__ for v in verdicts if not v.ok]}
            rng = np.random.default_rng(cfg.seed)
            cert = comparability_constant(channel, r0, scfg.r_end,
                                          reports=creps, rng=rng)
            doc["certificate"] = cert.to_dict()
            ok = cert.spot_checks_ok and not doc["almost_monotone"]["failures"]
            findings = findings or not ok
            print(f"{channel.label()}: C={cert.C:.6g} sup_R={cert.sup_R:.6g} "
                  f"verdict={cert.verdict}")
        except PreconditionError as err:
            doc["refused"] = str(err)
            findings = True
            print(f"{channel.label()}: refused ({err})")
        _write_json(out / f"boundedness_{name}.json", doc)
    return EXIT_FINDINGS if (assert_mode and findings) else EXIT_OK


def cmd_subordinacy(cfg: RunConfig, out: Path, assert_mode: bool) -> int:
    _require(cfg.model is not None, "subordinacy needs a 'model'")
    equal, where = models_equal(cfg.model)
    _require(equal, f"subordinacy needs m == q (first mismatch near "
                    f"r = {where if where else 0:g})")
    _require(cfg.k_set, "need a nonempty 'k_set'")
    _require(cfg.lambda_grid, "need a nonempty 'lambda_grid'")
    findings = False
    for k in cfg.k_set:
        for lam in cfg.lambda_grid:
            if lam == 0.0:
                continue  # boundary point carries no claim
            if lam < 0.0:
                rep = subordinacy_ratio(
                    cfg.model, k, lam, [1.0, 0.0], [0.0, 1.0],
                    cfg.subordinacy["r0"], cfg.subordinacy["r_end"],
                    delta=cfg.subordinacy["delta"], with_census=True)
                findings = findings or rep.classification != "no-subordinate"
            else:
                from .subordinacy import _eigen_side_cell
                cell = _eigen_side_cell(cfg.model, k, lam,
                                        cfg.subordinacy["delta"], 1e-9)
                rep_dict = cell["report"]
                _write_json(out / f"subordinacy_{_cell_name(k, lam)}.json",
                            rep_dict)
                print(f"k={k} lambda={lam:g}: {cell['classification']}")
                continue
            _write_json(out / f"subordinacy_{_cell_name(k, lam)}.json",
                        rep.to_dict())
            print(f"k={k} lambda={lam:g}: {rep.classification} "
                  f"(liminf ~ {rep.liminf_estimate:.4g})")
    return EXIT_FINDINGS if (assert_mode and findings) else EXIT_OK


def cmd_eigen(cfg: RunConfig, out: Path, assert_mode: bool) -> int:
    _require(cfg.model is not None, "eigen needs a 'model'")
    _require(cfg.bracket is not None, "eigen needs a 'bracket'")
    _require(cfg.k_set, "need a nonempty 'k_set'")
    doc = {"kind": "eigenvalues", "bracket": cfg.bracket, "by_k": {}}
    for k in cfg.k_set:
        eigs = eigen_shoot(cfg.model, k, cfg.bracket,
                           tol_lambda=cfg.eigen["tol"],
                           scan_step=cfg.eigen["scan_step"])
        doc["by_k"][str(k)] = eigs
        print(f"k={k}: {len(eigs)} eigenvalue(s) in {cfg.bracket}: "
              + ", ".join(f"{e:.8f}" for e in eigs))
    _write_json(out / "eigenvalues.json", doc)
    return EXIT_OK


def _scan_chunk(payload):
    model = model_from_dict(payload["model"])
    return classify_spectrum(model, payload["k_chunk"],
                             payload["lambda_grid"], seed=payload["seed"],
                             r_end=payload["r_end"], delta=payload["delta"])


def cmd_scan(cfg: RunConfig, out: Path, assert_mode: bool) -> int:
    _require(cfg.model is not None, "scan needs a 'model'")
    _require(cfg.k_set, "need a nonempty 'k_set'")
    _require(cfg.lambda_grid, "scan needs a nonempty 'lambda_grid'")
    payloads = [{"model": cfg.model.to_dict(), "k_chunk": [k],
                 "lambda_grid": cfg.lambda_grid, "seed": cfg.seed,
                 "r_end": cfg.subordinacy["r_end"],
                 "delta": cfg.subordinacy["delta"]}
                for k in sorted(set(cfg.k_set))]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_scan_chunk, payloads))
    else:
        results = [_scan_chunk(p) for p in payloads]
    doc = results[0]
    doc["cells"] = sorted((c for r in results for c in r["cells"]),
                          key=lambda c: (c["k"], c["lambda"]))
    doc["summary"] = _merge_summary(doc["cells"])

    codes = {"ac-candidate": "ac", "subordinate-found": "sub",
             "excluded": "excl", "inconclusive": "inc", "error": "error"}
    lams = sorted(set(cfg.lambda_grid))
    header = "k\\lambda," + ",".join(f"{l:g}" for l in lams)
    by_k = {}
    for cell in doc["cells"]:
        by_k.setdefault(cell["k"], {})[cell["lambda"]] = \
            codes.get(cell["classification"], "inc")
    rows = [[str(k)] + [by_k[k].get(l, "") for l in lams]
            for k in sorted(by_k)]
    _write_rows(out / "scan.csv", header, rows, comment="# kind=scan")
    for cell in doc["cells"]:
        _write_json(out / "cells" /
                    f"cell_{_cell_name(cell['k'], cell['lambda'])}.json", cell)
    _write_json(out / "scan.json", doc)
    print(f"scan: {len(doc['cells'])} cells, "
          f"{doc['summary']['n_errors']} errors; "
          f"ac-candidate lambdas: {doc['summary']['ac_candidate_lambdas']}")
    bad = any(c["classification"] in ("error", "inconclusive")
              for c in doc["cells"])
    return EXIT_FINDINGS if (assert_mode and bad) else EXIT_OK


def _merge_summary(cells):
    by_lam = {}
    for cell in cells:
        by_lam.setdefault(cell["lambda"], []).append(cell["classification"])
    ac = [lam for lam, cls in sorted(by_lam.items())
          if all(c == "ac-candidate" for c in cls)]
    return {"ac_candidate_lambdas": ac, "n_cells": len(cells),
            "n_errors": sum(1 for c in cells
                            if c["classification"] == "error")}


def cmd_bv_verify(cfg: RunConfig, out: Path, assert_mode: bool) -> int:
    rng = np.random.default_rng(cfg.seed)
    n = cfg.bv["instances"]
    product_fail, quotient_fail, jordan_fail = [], [], []
    for i in range(n):
        grid = np.linspace(0.0, float(rng.uniform(4.0, 10.0)), 3001)
        a, b, w = rng.uniform(-2, 2, 3)
        c = rng.uniform(0.2, 3.0)
        fv = a + b * np.sin(w * grid) / (1 + c * grid)
        fd = (b * w * np.cos(w * grid) / (1 + c * grid)
              - b * c * np.sin(w * grid) / (1 + c * grid) ** 2)
        gv = rng.uniform(-2, 2) * np.cos(rng.uniform(0.1, 3) * grid) \
            + rng.uniform(-1, 1)
        res = check_product_bound(SampledFunction(grid, fv, deriv=fd),
                                  SampledFunction(grid, gv))
        if not res.holds:
            product_fail.append(i)

        gpos = 1.5 + 0.4 * np.sin(rng.uniform(0.1, 4) * grid) + rng.uniform(0, 2)
        raw = np.sin(rng.uniform(0.1, 5) * grid + rng.uniform(0, 7))
        eps = rng.uniform(0.1, 0.8)
        f2 = raw * eps * float(np.min(gpos)) / float(np.max(np.abs(raw)))
        qres = check_quotient_bounds(SampledFunction(grid, f2),
                                     SampledFunction(grid, gpos))
        if not (qres.precondition_met and qres.holds):
            quotient_fail.append(i)

        samples = SampledFunction(grid[::30], fv[::30] + gv[::30])
        gp, gm = jordan_decompose(samples)
        scale = 1.0 + float(np.max(np.abs(samples.values)))
        recomp = float(np.max(np.abs(gp.values - gm.values - samples.values)))
        tele = gp.values[-1] + gm.values[-1] - gp.values[0] - gm.values[0]
        ok = (np.all(np.diff(gp.values) >= 0) and np.all(np.diff(gm.values) >= 0)
              and recomp <= 1e-12 * scale
              and abs(tele - variation(samples)) <= 1e-12 * (1 + tele))
        if not ok:
            jordan_fail.append(i)

    doc = {"kind": "bv_verify", "instances": n, "seed": cfg.seed,
           "product_bound_failures": product_fail,
           "quotient_bound_failures": quotient_fail,
           "jordan_failures": jordan_fail}
    if cfg.model is not None and cfg.lambda_grid:
        probe = lambda_trichotomy_probe(cfg.model, cfg.lambda_grid,
                                        cfg.tail_ladder.start,
                                        factor=cfg.tail_ladder.factor,
                                        rungs=cfg.tail_ladder.rungs)
        doc["trichotomy"] = probe.to_dict()
        print(f"trichotomy pattern: {probe.pattern}")
    _write_json(out / "bv_report.json", doc)
    failures = len(product_fail) + len(quotient_fail) + len(jordan_fail)
    print(f"bv-verify: {n} instances, {failures} failures")
    return EXIT_FINDINGS if (assert_mode and failures) else EXIT_OK


def cmd_asymptotics(cfg: RunConfig, out: Path, assert_mode: bool) -> int:
    _require(cfg.model is not None, "asymptotics needs a 'model'")
    equal, where = models_equal(cfg.model)
    _require(equal, "asymptotics needs m == q")
    _require(cfg.k_set, "need a nonempty 'k_set'")
    neg = [l for l in cfg.lambda_grid if l < 0.0]
    _require(neg, "asymptotics needs negative entries in 'lambda_grid'")
    trend_ok = True
    for k in cfg.k_set:
        for lam in neg:
            scfg = SolveConfig(r_start=cfg.asymptotics["r_start"],
                               r_end=cfg.asymptotics["r_end"],
                               rtol=1e-11, atol=1e-13,
                               stride=cfg.asymptotics["stride"])
            traj = borderline_trajectory(cfg.model, k, lam, scfg)
            ref = wkb_reference(cfg.model, lam, traj.grid)
            windows = cfg.asymptotics["windows"]
            res = compare_asymptotics(
                traj, ref, windows=None if windows is None else
                [tuple(w) for w in windows])
            name = _cell_name(k, lam)
            _write_rows(out / f"residuals_{name}.csv", "center,residual",
                        [(w["center"], w["residual"]) for w in res],
                        comment="# kind=residuals")
            conv = defect_convergence(cfg.model, k, lam,
                                      max(scfg.r_start, 10.0),
                                      min(scfg.r_end, 50.0))
            _write_json(out / f"defects_{name}.json",
                        {"kind": "defects", **conv})
            resid = [w["residual"] for w in res]
            trend_ok = trend_ok and (len(resid) < 2 or resid[-1] <= resid[0])
            print(f"k={k} lambda={lam:g}: residuals "
                  + " ".join(f"{x:.3g}" for x in resid)
                  + f"; defect orders { [round(o, 3) for o in conv['orders']] }")
    return EXIT_FINDINGS if (assert_mode and not trend_ok) else EXIT_OK


_PLOT_KINDS = {"rtrace", "residuals", "subordinacy", "census", "scan"}


def cmd_plotdata(inputs, out: Path) -> int:
    for item in inputs:
        path = Path(item)
        if not path.exists():
            raise ConfigError(f"input not found: {path}")
        if path.suffix == ".json":
            doc = json.loads(path.read_text())
            kind = doc.get("kind")
        else:
            with open(path) as fh:
                first = fh.readline().strip()
            kind = first.removeprefix("# kind=") if first.startswith("# kind=") \
                else None
        if kind not in _PLOT_KINDS:
            raise ConfigError(f"{path}: unknown artifact kind {kind!r}")
        target = out / (path.stem + ".dat")
        target.parent.mkdir(parents=True, exist_ok=True)
        if path.suffix == ".json":
            _json_to_dat(kind, doc, target)
        else:
            _csv_to_dat(path, target)
        print(f"wrote {target}")
    return EXIT_OK


def _csv_to_dat(path: Path, target: Path):
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    header_idx = 1 if lines[0].startswith("#") else 0
    cols = lines[header_idx].split(",")
    with open(target, "w") as fh:
        fh.write("# " + " ".join(cols) + "\n")
        for ln in lines[header_idx + 1:]:
            fh.write(" ".join(ln.split(",")) + "\n")


def _json_to_dat(kind: str, doc: dict, target: Path):
    with open(target, "w") as fh:
        if kind == "subordinacy":
            fh.write("# r ratio\n")
            for r, v in doc["ratio_tail"]:
                fh.write(f"{_fmt(r)} {_fmt(v)}\n")
        elif kind == "census":
            fh.write("# n J_length K_length\n")
            for n, J, K in zip(doc["ns"], doc["J_lengths"], doc["K_lengths"]):
                fh.write(f"{n} {_fmt(J)} {_fmt(K)}\n")
        elif kind == "scan":
            fh.write("# k lambda classification\n")
            for cell in doc["cells"]:
                fh.write(f"{cell['k']} {_fmt(cell['lambda'])} "
                         f"{cell['classification']}\n")
        else:
            raise ConfigError(f"no plot-data emitter for kind {kind!r}")


# ---------------------------------------------------------------------------


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="diracspec",
        description="numerical spectral diagnostics for half-line Dirac "
                    "systems with unbounded potentials")
    sub = parser.add_subparsers(dest="command", required=True)
    commands = ("hypotheses", "solve", "boundedness", "subordinacy", "eigen",
                "scan", "bv-verify", "asymptotics", "plotdata")
    for name in commands:
        p = sub.add_parser(name)
        if name == "plotdata":
            p.add_argument("inputs", nargs="+")
        else:
            p.add_argument("--config", required=True)
        p.add_argument("--out", default="out")
        p.add_argument("--workers", type=int, default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--tolerance", type=float, default=None)
        p.add_argument("--assert", dest="assert_mode", action="store_true")
    args = parser.parse_args(argv)
    out = Path(args.out)

    try:
        if args.command == "plotdata":
            return cmd_plotdata(args.inputs, out)
        cfg = load_config(args.config)
        if args.workers is not None:
            cfg.workers = args.workers
        if args.seed is not None:
            cfg.seed = args.seed
        if args.tolerance is not None:
            cfg.solver["rtol"] = args.tolerance
        out.mkdir(parents=True, exist_ok=True)
        dispatch = {
            "hypotheses": cmd_hypotheses,
            "solve": cmd_solve,
            "boundedness": cmd_boundedness,
            "subordinacy": cmd_subordinacy,
            "eigen": cmd_eigen,
            "scan": cmd_scan,
            "bv-verify": cmd_bv_verify,
            "asymptotics": cmd_asymptotics,
        }
        return dispatch[args.command](cfg, out, args.assert_mode)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
