"""Run loop, snapshot/probe output and the machine-readable manifest.

Outputs are deterministic: identical configs produce bitwise-identical
files (no timestamps inside any artifact; wall-clock timings go to the
console only).  Every output file carries the config hash in a header
comment and nothing is written until the configuration validates.
"""

import json
import logging
import os

import numpy as np

from . import __version__
from .config import config_hash, spec_to_text
from .errors import SolverFailure
from .harness import ProbeSeries, boundary_energy_flux, \
    conservation_residual, sample_probes
from .imex import advance_step
from .mesh import node_coords
from .picard import PicardConfig
from .problems import build_setup

log = logging.getLogger("graydg")

OUTDIR_ENV = "GRAYDG_OUTDIR"


def default_outdir():
    return os.environ.get(OUTDIR_ENV, "runs")


class RunResult:
    def __init__(self, setup):
        self.setup = setup
        self.final_state = None
        self.snapshots = {}
        self.probes = [ProbeSeries(label, pos)
                       for label, pos in setup.spec.probes]
        self.steps = 0
        self.picard_total = 0
        self.newton_max = 0
        self.floored = 0
        self.max_conservation_residual = 0.0
        self.boundary_flux_total = 0.0
        self.energy_initial = 0.0
        self.energy_final = 0.0
        self.conservation_rows = []


def run_loop(setup, picard_cfg=None, on_step=None, track_flux=False,
             log_every=0):
    """March the problem to its final time, landing snapshots exactly.

    ``track_flux`` accumulates the boundary energy flux per step from
    the stage snapshots (needed for open-boundary balance checks).
    Returns a RunResult.
    """
    spec = setup.spec
    cfg = picard_cfg or PicardConfig()
    res = RunResult(setup)
    state = setup.state0
    res.energy_initial = setup.phys.energy(state.rho, state.T)
    targets = sorted(set(list(spec.snapshot_times) + [spec.final_time]))
    targets = [t for t in targets if t > 0.0]
    eps_t = 1e-12 * max(spec.final_time, 1.0)

    probe_due = 0
    if res.probes:
        _record_probes(res, state, setup)
    while state.t < spec.final_time - eps_t:
        next_target = min(t for t in targets if t > state.t + eps_t)
        dt = min(setup.dt, next_target - state.t)
        prev = state
        state, diag = advance_step(
            state, setup.tableau, setup.ops, setup.phys, setup.boundary,
            cfg, dt, limiter=spec.limiter, collect=track_flux)
        res.steps += 1
        res.picard_total += sum(diag.picard_iters)
        res.newton_max = max(res.newton_max, diag.newton_max)
        res.floored += diag.floored
        resid = conservation_residual(prev, state, setup.phys)
        flux = 0.0
        if track_flux and diag.stage_fields is not None:
            flux = boundary_energy_flux(diag.stage_fields, setup.tableau,
                                        setup.ops, setup.boundary,
                                        setup.phys) * dt
            res.boundary_flux_total += flux
            resid = abs((diag.energy_after - diag.energy_before) + flux)
        res.max_conservation_residual = max(res.max_conservation_residual,
                                            resid)
        res.conservation_rows.append(
            (res.steps, state.t, dt, max(diag.picard_iters, default=0),
             diag.newton_max, diag.energy_after, resid, flux))
        probe_due += 1
        if res.probes and probe_due >= spec.probe_stride:
            _record_probes(res, state, setup)
            probe_due = 0
        if log_every and res.steps % log_every == 0:
            log.info("step %d t=%.6g dt=%.3g picard=%s newton=%d resid=%.3e",
                     res.steps, state.t, dt, diag.picard_iters,
                     diag.newton_max, resid)
        for t_snap in spec.snapshot_times:
            if abs(state.t - t_snap) <= eps_t:
                res.snapshots[t_snap] = state.copy()
        if on_step is not None:
            on_step(state, diag)
    res.final_state = state
    res.energy_final = setup.phys.energy(state.rho, state.T)
    return res


def _record_probes(res, state, setup):
    for series, (_, t_r, t_mat) in zip(res.probes,
                                       sample_probes(setup.spec.probes,
                                                     state, setup)):
        series.append(state.t, t_r, t_mat)


def simulate(spec, picard_cfg=None, dt=None):
    """Convenience wrapper: build + run, returning (setup, final state)."""
    setup = build_setup(spec, dt=dt)
    res = run_loop(setup, picard_cfg)
    return setup, res.final_state


# -- file outputs ----------------------------------------------------


def _fmt_row(values):
    return ",".join("%.17g" % v for v in values)


def write_snapshot(path, state, setup, chash):
    mesh, basis, phys = setup.mesh, setup.basis, setup.phys
    t_r = phys.radiative_temperature(state.rho)
    with open(path, "w") as f:
        f.write("# config=%s t=%.17g\n" % (chash, state.t))
        if mesh.dimension == 1:
            f.write("x,rho,T,T_r\n")
            x = mesh.axis_nodes(0, basis)
            for i in range(x.size):
                f.write(_fmt_row((x[i], state.rho[i], state.T[i], t_r[i]))
                        + "\n")
        else:
            f.write("x,y,rho,T,T_r\n")
            x, y = node_coords(mesh, basis)
            for iy in range(x.shape[0]):
                for ix in range(x.shape[1]):
                    f.write(_fmt_row((x[iy, ix], y[iy, ix],
                                      state.rho[iy, ix], state.T[iy, ix],
                                      t_r[iy, ix])) + "\n")


def write_legacy_grid(path, field, setup, chash):
    """Structured-grid text dump: one row of node values per grid line."""
    with open(path, "w") as f:
        f.write("# config=%s structured-grid\n" % chash)
        arr = np.atleast_2d(field)
        for row in arr:
            f.write(" ".join("%.17g" % v for v in row) + "\n")


def write_probes(path, probes, chash):
    with open(path, "w") as f:
        f.write("# config=%s\n" % chash)
        header = ["t"]
        for s in probes:
            header += ["Tr_%s" % s.label, "T_%s" % s.label]
        f.write(",".join(header) + "\n")
        if not probes:
            return
        for i in range(len(probes[0].times)):
            row = [probes[0].times[i]]
            for s in probes:
                row += [s.t_r[i], s.t_mat[i]]
            f.write(_fmt_row(row) + "\n")


def write_conservation(path, rows, chash):
    with open(path, "w") as f:
        f.write("# config=%s\n" % chash)
        f.write("step,t,dt,picard_max,newton_max,energy,residual,"
                "boundary_flux\n")
        for row in rows:
            f.write("%d," % row[0] + _fmt_row(row[1:3])
                    + ",%d,%d," % (row[3], row[4]) + _fmt_row(row[5:])
                    + "\n")


def run_to_files(spec, outdir=None, picard_cfg=None, threads=1, seed=None,
                 legacy_grid=False, log_every=200):
    """Execute a benchmark run and write its artifact set.

    Returns (exit_code, run_directory).  Exit codes: 0 success,
    3 solver failure (with the failing step recorded in the manifest).
    """
    chash = config_hash(spec)
    outdir = outdir or default_outdir()
    rundir = os.path.join(outdir, "%s-%s" % (spec.name, chash))
    os.makedirs(rundir, exist_ok=True)

    handler = logging.FileHandler(os.path.join(rundir, "run.log"), mode="w")
    handler.setFormatter(logging.Formatter("%(levelname)s %(message)s"))
    log.addHandler(handler)
    log.setLevel(logging.INFO)

    setup = build_setup(spec)
    track_flux = not setup.boundary.all_periodic
    manifest = {
        "benchmark": spec.name,
        "config_hash": chash,
        "code_version": __version__,
        "threads": threads,
        "seed": seed,
        "dt": setup.dt,
        "config": spec_to_text(spec),
        "status": "running",
    }
    failure = None
    try:
        res = run_loop(setup, picard_cfg, track_flux=track_flux,
                       log_every=log_every)
    except SolverFailure as exc:
        failure = exc
        res = None

    if failure is not None:
        manifest["status"] = "solver-failure"
        manifest["error"] = str(failure)
        if hasattr(failure, "history"):
            manifest["residual_trace"] = list(failure.history)
        _write_manifest(rundir, manifest)
        log.removeHandler(handler)
        handler.close()
        return 3, rundir

    for t_snap, snap in sorted(res.snapshots.items()):
        path = os.path.join(rundir, "snapshot_t%s.csv" % _tag(t_snap))
        write_snapshot(path, snap, setup, chash)
        if legacy_grid:
            write_legacy_grid(
                os.path.join(rundir, "grid_T_t%s.txt" % _tag(t_snap)),
                snap.T, setup, chash)
    if res.probes:
        write_probes(os.path.join(rundir, "probes.csv"), res.probes, chash)
    write_conservation(os.path.join(rundir, "conservation.csv"),
                       res.conservation_rows, chash)

    manifest.update({
        "status": "completed",
        "steps": res.steps,
        "picard_iterations_total": res.picard_total,
        "newton_max": res.newton_max,
        "floored_nodes": res.floored,
        "energy_initial": res.energy_initial,
        "energy_final": res.energy_final,
        "boundary_flux_total": res.boundary_flux_total,
        "max_conservation_residual": res.max_conservation_residual,
        "outputs": sorted(os.listdir(rundir)),
    })
    _write_manifest(rundir, manifest)
    log.removeHandler(handler)
    handler.close()
    return 0, rundir


def _tag(t):
    return ("%g" % t).replace(".", "p").replace("-", "m")


def _write_manifest(rundir, manifest):
    with open(os.path.join(rundir, "manifest.json"), "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
