"""Command-line front end.

    holotherm run <verb> [subverb] <scenario> [flags]
    holotherm <verb> [subverb] --scenario <path> [flags]
    holotherm demos
    holotherm schema

A scenario is a JSON file or the name of a bundled demo. Exit codes: 0 on
success, 2 on validation failure, 3 on solver non-convergence and 4 when an
oracle's size cap is exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import duality, oracles, thermo, transfer
from .errors import ConvergenceError, HolothermError, OracleScaleError, ValidationError
from .scenario import SCENARIO_SCHEMA, Scenario, build, demo_catalog, load_document

EXIT_OK, EXIT_VALIDATION, EXIT_CONVERGENCE, EXIT_ORACLE_SCALE = 0, 2, 3, 4


@dataclass
class RunResult:
    command: str
    scenario_hash: str
    wall_time: float
    payload: dict
    warnings: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"command": self.command, "scenario_hash": self.scenario_hash,
                "wall_time": self.wall_time, "payload": self.payload,
                "warnings": self.warnings}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _tol(sc: Scenario, default: float) -> float:
    return float(sc.solver.get("tol", default))


def _require(sc: Scenario, *names: str) -> None:
    missing = [n for n in names if getattr(sc, n) is None]
    if missing:
        raise ValidationError([f"{n}: required by this command" for n in missing])


def _no_joint(sc: Scenario) -> None:
    if sc.joint:
        raise ValidationError(["Y: this command works on a single system"])


# -- commands ----------------------------------------------------------------


def cmd_eigen(sc: Scenario) -> dict:
    _no_joint(sc)
    eig = transfer.power_eigenpair(sc.cost, sc.alpha, sc.X, tol=_tol(sc, 1e-10),
                                   max_iter=sc.solver.get("max_iter"))
    return eig.to_dict()


def cmd_normalize(sc: Scenario) -> dict:
    _no_joint(sc)
    nc = transfer.normalize_cost(sc.cost, sc.alpha, sc.X, tol=_tol(sc, 1e-10),
                                 max_iter=sc.solver.get("max_iter"))
    return {"log_lambda": nc.eigen.log_lambda, "lambda": nc.eigen.lam,
            "defect": transfer.normalization_defect(nc, sc.alpha, sc.X),
            "cbar": nc.values}


def cmd_invariant(sc: Scenario) -> dict:
    _no_joint(sc)
    tol = _tol(sc, 1e-10)
    nc = transfer.normalize_cost(sc.cost, sc.alpha, sc.X, tol=tol)
    rho = transfer.invariant_measure(nc, sc.alpha, sc.X, tol=tol,
                                     max_iter=sc.solver.get("max_iter"))
    out = {"rho": rho.weights}
    if sc.X.fiber.is_grid:
        out["moments"] = [rho.moment(sc.X.fiber.nodes, k) for k in (1, 2)]
    if "depth" in sc.solver:
        cover = transfer.attractor_cover(sc.X, int(sc.solver["depth"]))
        out["mass_outside_cover"] = cover.mass_outside(rho, sc.X.fiber.nodes)
    return out


def cmd_pressure(sc: Scenario) -> dict:
    _no_joint(sc)
    rep = thermo.pressure(sc.cost, sc.alpha, sc.X, tol=_tol(sc, 1e-10),
                          max_iter=sc.solver.get("max_iter"))
    return rep.to_dict()


def cmd_entropy(sc: Scenario) -> dict:
    _no_joint(sc)
    if sc.plan is not None:
        rep = thermo.entropy_variational(sc.plan, sc.alpha, sc.X,
                                         candidates=int(sc.solver.get("candidates", 32)),
                                         seed=sc.seed)
    else:
        eq = thermo.equilibrium(sc.cost, sc.alpha, sc.X, tol=_tol(sc, 1e-10))
        rep = thermo.entropy_equilibrium(eq.plan)
    out = rep.to_dict()
    out.pop("certificate", None)
    return out


def cmd_bousch(sc: Scenario) -> dict:
    _no_joint(sc)
    s_values = tuple(sc.solver.get("s_values", (0.9, 0.99, 0.999)))
    out = transfer.bousch_limit(sc.cost, sc.alpha, sc.X, s_values=s_values)
    out["log_lambda"] = transfer.power_eigenpair(sc.cost, sc.alpha, sc.X).log_lambda
    return out


def cmd_envelope(sc: Scenario) -> dict:
    _no_joint(sc)
    nc = transfer.normalize_cost(sc.cost, sc.alpha, sc.X)
    rng = np.random.default_rng(sc.seed)
    u = rng.uniform(-1.0, 1.0, sc.X.fiber.size)
    orbit = transfer.transfer_orbit(nc, sc.alpha, sc.X, u, int(sc.solver.get("steps", 50)))
    return {"sup": orbit.max(axis=1), "inf": orbit.min(axis=1),
            "gap": orbit.max(axis=1) - orbit.min(axis=1)}


def cmd_dual_single(sc: Scenario) -> dict:
    _no_joint(sc)
    _require(sc, "mu")
    dual, plan = duality.single_marginal_dual(
        sc.cost, sc.mu, sc.alpha, sc.X, eta0=float(sc.solver.get("eta0", 1.0)),
        schedule=sc.solver.get("schedule", "sqrt"), tol=_tol(sc, 1e-6),
        max_iter=int(sc.solver.get("max_iter", 5000)))
    slack = duality.slackness_check(sc.cost, dual.phi, sc.alpha, sc.X, tol=1e-5, mu=sc.mu)
    out = dual.to_dict()
    out["x_marginal"] = plan.x_marginal
    out["slackness"] = slack.to_dict()
    return out


def _joint_args(sc: Scenario):
    if not sc.joint:
        raise ValidationError(["Y: this command needs a second system"])
    return sc.cost, sc.X, sc.Y


def cmd_dual_two(sc: Scenario) -> dict:
    c, ix, iy = _joint_args(sc)
    _require(sc, "mu", "nu")
    dual, plan = duality.two_marginal_dual(
        c, sc.mu, sc.nu, sc.alpha, sc.beta, ix, iy,
        entropic=bool(sc.solver.get("entropic", True)),
        smoothing=sc.solver.get("smoothing"), restarts=int(sc.solver.get("restarts", 20)))
    return {**dual.to_dict(), "plan": plan.to_dict()}


def cmd_dual_mp(sc: Scenario) -> dict:
    c, ix, iy = _joint_args(sc)
    mp = duality.marginal_pressure(c, sc.alpha, sc.beta, ix, iy,
                                   smoothing=sc.solver.get("smoothing"),
                                   restarts=int(sc.solver.get("restarts", 20)))
    ok, worst = duality.coboundary_feasibility(c - mp.bound.level, 0.0, 0.0,
                                               b=mp.bound.b, d=mp.bound.d,
                                               ifs_x=ix, ifs_y=iy, tol=1e-9)
    return {**mp.to_dict(), "bound_feasible": ok, "bound_violation": worst,
            "b": mp.bound.b, "d": mp.bound.d}


def cmd_dual_kantorovich(sc: Scenario) -> dict:
    c, ix, iy = _joint_args(sc)
    _require(sc, "mu", "nu")
    plan, dual = duality.kantorovich_solve(c, sc.mu, sc.nu, ix, iy)
    return {"value": dual.primal, "objective": dual.objective, "gap": dual.gap,
            "iterations": dual.iterations, "dual_violation": dual.pressure_residual,
            "phi": dual.phi, "psi": dual.psi, "g": dual.extra["g"], "f": dual.extra["f"],
            "plan": plan.to_dict()}


def cmd_dual_product(sc: Scenario) -> dict:
    _, ix, iy = _joint_args(sc)
    _require(sc, "mu", "nu")
    plan = duality.product_plan(sc.mu, sc.nu, ix, iy)
    atoms = np.argwhere(plan.weights > 0)
    return {**plan.to_dict(), "max_residual": plan.max_residual, "atoms": atoms,
            "atom_weights": plan.weights[tuple(atoms.T)]}


def cmd_oracle_singleton(sc: Scenario) -> dict:
    _no_joint(sc)
    if sc.X.fiber.size != 1:
        raise ValidationError(["X: singleton-pressure needs a one-point fiber"])
    return oracles.singleton_pressure(sc.cost.ravel(), sc.alpha).to_dict()


def cmd_oracle_kl(sc: Scenario) -> dict:
    _require(sc, "mu")
    return {"value": oracles.kl_divergence(sc.mu, sc.alpha), "method": "direct sum"}


def cmd_oracle_transport(sc: Scenario) -> dict:
    c, ix, iy = _joint_args(sc)
    _require(sc, "mu", "nu")
    if ix.fiber.size * iy.fiber.size != 1:
        raise ValidationError(["X, Y: transport oracle needs one-point fibers"])
    return oracles.transport_bruteforce(c[:, :, 0, 0], sc.mu, sc.nu).to_dict()


def cmd_oracle_chaos(sc: Scenario) -> dict:
    _no_joint(sc)
    nc = transfer.normalize_cost(sc.cost, sc.alpha, sc.X)
    est = oracles.chaos_game_measure(nc.values, sc.alpha, sc.X,
                                     samples=int(sc.solver.get("samples", 100_000)),
                                     burn_in=int(sc.solver.get("burn_in", 64)), seed=sc.seed)
    return est.to_dict()


def cmd_oracle_fd(sc: Scenario) -> dict:
    _no_joint(sc)
    g = sc.direction if sc.direction is not None else np.ones(sc.X.shape)
    eps = float(sc.solver.get("epsilon", 1e-4))
    fd = oracles.fd_pressure_gradient(sc.cost, sc.alpha, sc.X, g, epsilon=eps)
    exact = thermo.pressure_gradient(sc.cost, sc.alpha, sc.X, g)
    return {"fd": fd, "integral": exact, "difference": abs(fd - exact), "epsilon": eps}


def cmd_oracle_dense(sc: Scenario) -> dict:
    _no_joint(sc)
    return {"value": oracles.dense_pressure(sc.cost, sc.alpha, sc.X),
            "method": "dense eigenvalues"}


COMMANDS = {
    "eigen": cmd_eigen,
    "normalize": cmd_normalize,
    "invariant-measure": cmd_invariant,
    "pressure": cmd_pressure,
    "entropy": cmd_entropy,
    "bousch": cmd_bousch,
    "envelope": cmd_envelope,
    "thermo pressure": cmd_pressure,
    "thermo entropy": cmd_entropy,
    "dual single": cmd_dual_single,
    "dual two-marginal": cmd_dual_two,
    "dual marginal-pressure": cmd_dual_mp,
    "dual kantorovich": cmd_dual_kantorovich,
    "dual product-plan": cmd_dual_product,
    "oracle singleton-pressure": cmd_oracle_singleton,
    "oracle kl": cmd_oracle_kl,
    "oracle transport": cmd_oracle_transport,
    "oracle chaos-game": cmd_oracle_chaos,
    "oracle fd-gradient": cmd_oracle_fd,
    "oracle dense-pressure": cmd_oracle_dense,
}
GROUPS = {"dual", "thermo", "oracle"}


def run(command: str, source, overrides: dict | None = None) -> RunResult:
    """Load, validate and execute one scenario."""
    doc = load_document(source) if not isinstance(source, dict) else source
    if command is None:
        command = doc.get("command")
    if command not in COMMANDS:
        raise ValidationError([f"command: unknown command {command!r}"])
    sc = build(doc, overrides)
    start = time.perf_counter()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        payload = COMMANDS[command](sc)
    return RunResult(command, sc.hash, time.perf_counter() - start, _jsonable(payload),
                     [str(w.message) for w in caught])


def _vectors(payload: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in payload.items():
        if isinstance(v, dict):
            out.update(_vectors(v, f"{prefix}{k}."))
        elif (isinstance(v, list) and v
              and all(isinstance(t, (int, float)) and not isinstance(t, bool) for t in v)):
            out[prefix + k] = v
    return out


def to_csv(result: RunResult) -> str:
    cols = _vectors(result.payload)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    names = sorted(cols)
    writer.writerow(["index"] + names)
    for i in range(max((len(cols[n]) for n in names), default=0)):
        writer.writerow([i] + [repr(cols[n][i]) if i < len(cols[n]) else "" for n in names])
    return buf.getvalue()


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="holotherm", description=__doc__.split("\n")[0])
    p.add_argument("words", nargs="*", help="[run] <verb> [subverb] [scenario] | demos | schema")
    p.add_argument("--scenario", help="scenario JSON path or demo name")
    p.add_argument("--out", help="write the result here instead of stdout")
    p.add_argument("--format", choices=("json", "csv"), default=None)
    p.add_argument("--seed", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--max-iter", type=int, dest="max_iter")
    p.add_argument("--quiet", action="store_true", help="suppress stdout output")
    return p


def _resolve(words: list[str], scenario: str | None):
    words = list(words)
    if words and words[0] == "run":
        words = words[1:]
    command = None
    if words and words[0] in GROUPS and len(words) > 1:
        command, words = f"{words[0]} {words[1]}", words[2:]
    elif words and words[0] in COMMANDS:
        command, words = words[0], words[1:]
    if scenario is None and words:
        scenario, words = words[0], words[1:]
    if words:
        raise ValidationError([f"unexpected arguments: {' '.join(words)}"])
    if scenario is None:
        raise ValidationError(["no scenario given"])
    return command, scenario


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    if args.words[:1] == ["demos"] or args.words == ["run", "demos"]:
        for name, desc in demo_catalog():
            print(f"{name:32s} {desc}")
        return EXIT_OK
    if args.words == ["schema"]:
        print(json.dumps(SCENARIO_SCHEMA, indent=2))
        return EXIT_OK
    source = "<none>"
    try:
        command, source = _resolve(args.words, args.scenario)
        overrides = {"seed": args.seed, "tol": args.tol, "max_iter": args.max_iter}
        result = run(command, source, overrides)
        doc = load_document(source)
        out_path = args.out or doc.get("outputs", {}).get("path")
        fmt = args.format or doc.get("outputs", {}).get("format", "json")
        text = to_csv(result) if fmt == "csv" else json.dumps(result.to_dict(), indent=2,
                                                                sort_keys=True)
        if out_path:
            with open(out_path, "w") as fh:
                fh.write(text if text.endswith("\n") else text + "\n")
        if not args.quiet and not out_path:
            print(text)
        return EXIT_OK
    except ValidationError as exc:
        print(f"error [{source}]: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ConvergenceError as exc:
        print(f"error [{source}]: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except OracleScaleError as exc:
        print(f"error [{source}]: {exc}", file=sys.stderr)
        return EXIT_ORACLE_SCALE
    except (HolothermError, ValueError) as exc:
        print(f"error [{source}]: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
