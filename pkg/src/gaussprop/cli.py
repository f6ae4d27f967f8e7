"""Command line front end: scenario JSON in, CSV plus JSON summary out.

Five subcommands share one shape: load a scenario file, run, write a CSV
table and a JSON summary next to each other, print a short report.  Exit
codes are part of the contract: 0 success, 1 a quality gate failed (audit
expectations, moment tolerance, convergence slope band), 2 the scenario
is invalid or incomplete for the command, 3 the run aborted for a physics
reason (kernel phase unresolvable, packet reached the grid edge).

Output locations: --out wins, then the GAUSSPROP_OUT environment
variable, then the working directory.  Writes are atomic and the files
carry no timestamps, so a rerun with the same inputs is byte-identical.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field

import numpy as np

from .audit import variant_audit
from .fields import BoundaryDecayError, FieldSpec, PropagatorSpec, moments
from .fresnel import (
    MOMENT_ORDERS,
    RegularizedQuadrature,
    _AUTO_TAIL_EXPONENT,
    cancellation_check,
    closed_moment,
    fresnel_moment,
)
from .propagate import ValidityError, evolve
from .reference import evolve_cn, to_hamiltonian
from .scenario import Scenario, ScenarioError, load_scenario
from .walk import histogram_compare, sample_paths


@dataclass
class RunResult:
    header: tuple
    rows: list
    summary: dict
    passed: bool = True
    lines: list = field(default_factory=list)


def _l2_distance(a: np.ndarray, b: np.ndarray, dx: float) -> float:
    return float(np.sqrt(np.sum(np.abs(a - b) ** 2) * dx))


def _run_evolve(sc: Scenario, args) -> RunResult:
    sc.require("grid", "packet", "spec", "eps", "n_steps")
    method = args.method or sc.method
    state0 = sc.packet.build(sc.grid)
    traj = evolve(state0, sc.eps, sc.n_steps, sc.spec, method=method)

    reference = None
    if sc.spec.is_admissible():
        ham = to_hamiltonian(sc.spec, sc.grid)
        reference = evolve_cn(state0, sc.eps, sc.n_steps, ham).states

    rows = []
    norms = traj.norms
    for i, state in enumerate(traj.states):
        mean, var = moments(state)
        err = (_l2_distance(state.psi, reference[i].psi, sc.grid.dx)
               if reference is not None else float("nan"))
        rows.append((i, state.time, float(norms[i]), mean, var, err))

    final_err = rows[-1][5]
    summary = {
        "command": "evolve",
        "scenario": sc.name,
        "method": method,
        "eps": sc.eps,
        "n_steps": sc.n_steps,
        "final_time": traj.final.time,
        "final_norm": float(norms[-1]),
        "max_abs_norm_drift": float(np.max(np.abs(norms - norms[0]))),
        "final_l2_error_vs_reference": None if math.isnan(final_err) else final_err,
    }
    lines = [f"evolve [{method}]: {sc.n_steps} steps of eps={sc.eps:g}, "
             f"final norm {norms[-1]:.12f}"]
    if reference is not None:
        lines.append(f"  final L2 distance to the integrator reference: {final_err:.3e}")
    return RunResult(
        header=("step", "time", "norm", "mean_position", "position_variance",
                "l2_error_vs_reference"),
        rows=rows, summary=summary, lines=lines)


def _variant_spec(base: PropagatorSpec, case) -> PropagatorSpec:
    return PropagatorSpec(d=base.d, u=base.u, b=base.b, order=base.order,
                          variant=case.variant, im_d=case.im_d, im_u=case.im_u,
                          d_field=case.d_field)


def _run_audit(sc: Scenario, args) -> RunResult:
    sc.require("grid", "spec", "audit", "eps_ladder")
    rows, variants_out, lines = [], [], []
    passed = True
    for case in sc.audit.variants:
        vspec = _variant_spec(sc.spec, case)
        packet_reports = []
        for packet in sc.audit.packets:
            state = packet.build(sc.grid)
            report = variant_audit(state, vspec, sc.eps_ladder)
            packet_reports.append((packet, report))
            for eps, drift in zip(report.eps_ladder, report.drifts):
                rows.append((case.variant, packet.x0, packet.sigma0, packet.k0,
                             eps, drift, report.fitted_order, report.verdict))
        verdict = ("conserves"
                   if all(r.verdict == "conserves" for _, r in packet_reports)
                   else "drifts")
        ok = verdict == case.expect
        passed = passed and ok
        variants_out.append({
            "variant": case.variant,
            "expect": case.expect,
            "verdict": verdict,
            "matches_expectation": ok,
            "packets": [
                {"x0": p.x0, "sigma0": p.sigma0, "k0": p.k0,
                 "fitted_order": r.fitted_order,
                 "predicted_rate": r.predicted_rate,
                 "verdict": r.verdict}
                for p, r in packet_reports
            ],
        })
        orders = ", ".join(f"{r.fitted_order:.2f}" for _, r in packet_reports)
        marker = "ok" if ok else "MISMATCH"
        lines.append(f"  {case.variant}: {verdict} (expected {case.expect}, "
                     f"{marker}); drift orders per packet: {orders}")
    summary = {
        "command": "audit",
        "scenario": sc.name,
        "eps_ladder": list(sc.eps_ladder),
        "variants": variants_out,
        "passed": passed,
    }
    lines.insert(0, f"audit: {len(sc.audit.variants)} variants x "
                    f"{len(sc.audit.packets)} packets on a "
                    f"{len(sc.eps_ladder)}-rung eps ladder")
    return RunResult(
        header=("variant", "packet_x0", "packet_sigma0", "packet_k0", "eps",
                "norm_change_per_step", "fitted_order", "packet_verdict"),
        rows=rows, summary=summary, passed=passed, lines=lines)


def _moments_quadrature(ms, d: float, eps: float) -> RegularizedQuadrature:
    samples = ms.samples if ms.samples is not None else 100_000
    if ms.delta0 is None:
        return RegularizedQuadrature.for_params(d, eps, samples=samples)
    # honor the requested regulator; the window only needs to close the tail
    half_width = math.sqrt(_AUTO_TAIL_EXPONENT / (ms.delta0 / 4.0)) * (1.0 + 1e-9)
    return RegularizedQuadrature(ms.delta0, half_width, samples)


def _run_moments(sc: Scenario, args) -> RunResult:
    sc.require("moments")
    ms = sc.moments
    rows, max_rel = [], 0.0
    for d, eps in ms.pairs:
        quad = _moments_quadrature(ms, d, eps)
        for n in MOMENT_ORDERS:
            q = fresnel_moment(n, d, eps, quad)
            c = closed_moment(n, d, eps)
            abs_err = abs(q - c)
            rel = abs_err / abs(c) if abs(c) > 0.0 else abs_err
            max_rel = max(max_rel, rel)
            rows.append((d, eps, f"moment_{n}", q.real, q.imag, c.real, c.imag,
                         abs_err, rel))
    if ms.cancellation is not None:
        cs = ms.cancellation
        spec = PropagatorSpec(d=ms.pairs[0][0], u=FieldSpec.sine(1.0, cs.k))
        quad = _moments_quadrature(ms, spec.d, cs.eps)
        res = cancellation_check(spec, cs.x, cs.eps, quad=quad)
        closed = res.closed_form
        rel = (res.abs_error / abs(closed)) if abs(closed) > 0.0 else res.abs_error
        max_rel = max(max_rel, rel)
        rows.append((spec.d, cs.eps, "cancellation", res.quadrature.real,
                     res.quadrature.imag, closed.real, closed.imag,
                     res.abs_error, rel))
    passed = max_rel <= ms.tolerance
    summary = {
        "command": "moments",
        "scenario": sc.name,
        "tolerance": ms.tolerance,
        "max_rel_error": max_rel,
        "n_checks": len(rows),
        "passed": passed,
    }
    lines = [f"moments: {len(rows)} checks, max relative error {max_rel:.3e} "
             f"(tolerance {ms.tolerance:g})"]
    return RunResult(
        header=("diffusivity", "eps", "check", "quadrature_real",
                "quadrature_imag", "closed_real", "closed_imag", "abs_error",
                "rel_error"),
        rows=rows, summary=summary, passed=passed, lines=lines)


def _run_walk(sc: Scenario, args) -> RunResult:
    sc.require("spec", "walk", "eps", "n_steps")
    ws = sc.walk
    seed = args.seed if args.seed is not None else sc.seed
    ensemble = sample_paths(ws.n_particles, sc.n_steps, sc.eps, sc.spec,
                            seed, x0=ws.x0, step_law=ws.step_law)
    comparison = histogram_compare(ensemble, sc.spec, bins=ws.bins)
    rows = [
        (float(comparison.edges[i]), float(comparison.edges[i + 1]),
         float(comparison.density[i]), float(comparison.reference_density[i]))
        for i in range(len(comparison.density))
    ]
    t = ensemble.time
    expected_mean = expected_var = None
    if sc.spec.u.is_constant():
        expected_mean = ws.x0 + float(sc.spec.u(np.zeros(1))[0]) * t
        expected_var = sc.spec.d * t
    summary = {
        "command": "walk",
        "scenario": sc.name,
        "seed": seed,
        "n_particles": ws.n_particles,
        "n_steps": sc.n_steps,
        "eps": sc.eps,
        "time": t,
        "step_law": ws.step_law,
        "sample_mean": ensemble.sample_mean(),
        "sample_variance": ensemble.sample_variance(),
        "expected_mean": expected_mean,
        "expected_variance": expected_var,
        "l1_distance": comparison.l1,
        "reference": comparison.reference,
    }
    lines = [f"walk: {ws.n_particles} particles, {sc.n_steps} steps of "
             f"eps={sc.eps:g} (seed {seed})",
             f"  sample mean {ensemble.sample_mean():+.4f}, variance "
             f"{ensemble.sample_variance():.4f}; histogram L1 distance to the "
             f"{comparison.reference} law {comparison.l1:.4f}"]
    return RunResult(
        header=("bin_left", "bin_right", "observed_density",
                "reference_density"),
        rows=rows, summary=summary, lines=lines)


def _steps_for(t_final: float, eps: float) -> int:
    n = round(t_final / eps)
    if n < 1 or abs(n * eps - t_final) > 1e-9 * max(1.0, n):
        raise ScenarioError(f"eps={eps:g} does not divide t_final={t_final:g}")
    return n


def _run_compare(sc: Scenario, args) -> RunResult:
    sc.require("grid", "packet", "spec", "eps_ladder", "compare")
    cs = sc.compare
    method = args.method or sc.method
    try:
        ham = to_hamiltonian(sc.spec, sc.grid)
    except ValueError as exc:
        raise ScenarioError(str(exc)) from exc
    eps_ref = cs.eps_ref if cs.eps_ref is not None else min(sc.eps_ladder) / 5.0
    state0 = sc.packet.build(sc.grid)
    ref = evolve_cn(state0, eps_ref, _steps_for(cs.t_final, eps_ref), ham).final

    rows, errors = [], []
    for eps in sc.eps_ladder:
        n = _steps_for(cs.t_final, eps)
        final = evolve(state0, eps, n, sc.spec, method=method).final
        err = _l2_distance(final.psi, ref.psi, sc.grid.dx)
        rows.append((eps, n, err))
        errors.append(err)
    slope = float(np.polyfit(np.log(sc.eps_ladder), np.log(errors), 1)[0])
    lo, hi = cs.slope_band
    passed = lo <= slope <= hi
    summary = {
        "command": "compare",
        "scenario": sc.name,
        "method": method,
        "t_final": cs.t_final,
        "eps_ref": eps_ref,
        "eps_ladder": list(sc.eps_ladder),
        "l2_errors": errors,
        "slope": slope,
        "slope_band": [lo, hi],
        "passed": passed,
    }
    lines = [f"compare [{method}]: errors at t={cs.t_final:g} against the "
             f"eps={eps_ref:g} integrator reference",
             f"  fitted convergence slope {slope:.3f} "
             f"(accepted band [{lo:g}, {hi:g}])"]
    return RunResult(header=("eps", "n_steps", "l2_error_vs_reference"),
                     rows=rows, summary=summary, passed=passed, lines=lines)


_RUNNERS = {
    "evolve": _run_evolve,
    "audit": _run_audit,
    "moments": _run_moments,
    "walk": _run_walk,
    "compare": _run_compare,
}


def _fmt_cell(value) -> str:
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(OSError):
            os.unlink(tmp)
        raise


def _write_outputs(result: RunResult, sc: Scenario, command: str,
                   out_dir: str) -> tuple[str, str]:
    os.makedirs(out_dir, exist_ok=True)
    csv_name = sc.outputs.get("csv", f"{sc.name}_{command}.csv")
    json_name = sc.outputs.get("json", f"{sc.name}_{command}.json")
    csv_path = os.path.join(out_dir, csv_name)
    json_path = os.path.join(out_dir, json_name)
    csv_lines = [",".join(result.header)]
    csv_lines.extend(",".join(_fmt_cell(cell) for cell in row)
                     for row in result.rows)
    _atomic_write(csv_path, "\n".join(csv_lines) + "\n")
    _atomic_write(json_path,
                  json.dumps(result.summary, sort_keys=True, indent=2) + "\n")
    return csv_path, json_path


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gaussprop",
        description="Run single-step propagator scenarios: evolve packets, "
                    "audit norm conservation, check kernel moments, sample "
                    "random walks, compare against the integrator reference.")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "evolve": "evolve a packet and tabulate norm, moments, and reference error",
        "audit": "measure norm drift for propagator variants over an eps ladder",
        "moments": "verify regularized kernel moments against closed forms",
        "walk": "sample random-walk paths and compare the final histogram",
        "compare": "fit the convergence slope against the integrator reference",
    }
    for name in ("evolve", "audit", "moments", "walk", "compare"):
        p = sub.add_parser(name, help=helps[name])
        p.add_argument("scenario", help="path to a scenario JSON file")
        p.add_argument("--out", default=None,
                       help="output directory (default: $GAUSSPROP_OUT or .)")
        if name == "walk":
            p.add_argument("--seed", type=int, default=None,
                           help="override the scenario seed")
        if name in ("evolve", "compare"):
            p.add_argument("--method", choices=("dense", "spectral"),
                           default=None, help="override the scenario method")
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 2
    if not hasattr(args, "seed"):
        args.seed = None
    if not hasattr(args, "method"):
        args.method = None
    try:
        sc = load_scenario(args.scenario)
        result = _RUNNERS[args.command](sc, args)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValidityError, BoundaryDecayError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    out_dir = args.out or os.environ.get("GAUSSPROP_OUT") or "."
    try:
        csv_path, json_path = _write_outputs(result, sc, args.command, out_dir)
    except OSError as exc:
        print(f"error: cannot write outputs: {exc}", file=sys.stderr)
        return 2

    for line in result.lines:
        print(line)
    print(f"wrote {csv_path}")
    print(f"wrote {json_path}")
    if args.command in ("audit", "moments", "compare"):
        print(f"{args.command}: {'PASS' if result.passed else 'FAIL'}")
    return 0 if result.passed else 1


def entry() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    raise SystemExit(main())
