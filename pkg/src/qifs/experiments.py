"""Experiment kinds run by the command line tool.

Each runner receives resolved parameters, a seed and a :class:`RunContext`
that owns the output directory; it writes artifacts through the context
and returns a JSON-ready dict of results.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import classical as cl
from .channels import HomogeneousQIFS, MixedQIFS, PureQIFS, barycenter_estimate, qifs_trajectory, random_external_field
from .config import REQUIRED, ConfigError, as_channel, load_classical_ifs, load_matrix, load_qifs, load_state, take, unitary_family
from .errors import ConvergenceError, PreconditionError
from .export import write_csv, write_json, write_pgm, write_profile_csv
from .invariant import block_diagonal_invariant_state, commutant, fixed_states, power_iteration
from .qstate import matrix_to_json, trace_distance
from .spin import husimi_sphere
from .torus import (
    excluded_mass,
    husimi_torus,
    matched_cantor_level,
    position_profile,
    tartan_invariant,
    tartan_operators,
)

FORMATS = ("csv", "pgm", "json")


@dataclass
class RunContext:
    out: Path
    formats: tuple = FORMATS
    threads: int = 1
    config_hash: str = ""
    pgm_bits: int = 8
    pgm_binary: bool = False
    artifacts: list = field(default_factory=list)
    sidecar: dict = field(default_factory=dict)

    def wants(self, fmt: str) -> bool:
        return fmt in self.formats

    def grid(self, stem: str, obj, meta: dict | None = None) -> None:
        """Write a grid as CSV and/or PGM according to the selected formats."""
        if self.wants("csv"):
            self.artifacts.append(write_csv(self.out / f"{stem}.csv", obj).name)
        if self.wants("pgm"):
            rec = write_pgm(self.out / f"{stem}.pgm", obj, bits=self.pgm_bits, binary=self.pgm_binary,
                            comment=f"config-hash {self.config_hash}")
            self.artifacts.append(rec["file"])
            self.sidecar[rec["file"]] = {**rec, **(meta or {})}

    def profile(self, stem: str, columns: dict) -> None:
        if self.wants("csv"):
            self.artifacts.append(write_profile_csv(self.out / f"{stem}.csv", columns).name)

    def matrix(self, stem: str, m: np.ndarray) -> None:
        if self.wants("csv"):
            cols = {"row": [], "col": [], "re": [], "im": []}
            for (i, k), v in np.ndenumerate(np.atleast_2d(m)):
                cols["row"].append(i)
                cols["col"].append(k)
                cols["re"].append(v.real)
                cols["im"].append(v.imag)
            self.artifacts.append(write_profile_csv(self.out / f"{stem}.csv", cols).name)
        if self.wants("json"):
            self.artifacts.append(write_json(self.out / f"{stem}.json", matrix_to_json(m)).name)


def _projector(state: np.ndarray) -> np.ndarray:
    return np.outer(state, state.conj()) if state.ndim == 1 else state


def _default_x0(space: cl.PhaseSpace):
    return {"interval": 0.5, "square": [0.5, 0.5],
            "sphere": cl.spherical_to_vector(1.0, 0.5).tolist()}[space.kind]


def _pearson(a, b) -> float:
    a, b = np.asarray(a, float), np.asarray(b, float)
    # profiles flat up to rounding carry no shape to correlate
    if a.std() <= 1e-12 * abs(a.mean()) or b.std() <= 1e-12 * abs(b.mean()):
        return float("nan")
    return float(np.corrcoef(a, b)[0, 1])


# ---------------------------------------------------------------------------
# Classical kinds
# ---------------------------------------------------------------------------

CHAOS_SCHEMA = {"ifs": REQUIRED, "n": 1_000_000, "x0": None, "resolution": 243,
                "burn_in": 100, "streams": 1}


def _chaos(p: dict, seed: int, ctx: RunContext):
    ifs = load_classical_ifs(p["ifs"], "params.ifs")
    x0 = _default_x0(ifs.space) if p["x0"] is None else p["x0"]
    res = cl.chaos_game(ifs, x0, int(p["n"]), seed, int(p["resolution"]), int(p["burn_in"]),
                        int(p["streams"]), workers=ctx.threads)
    return ifs, res


def _measure_summary(ifs, mu: cl.EmpiricalMeasure) -> dict:
    w = mu.normalized()
    out = {"resolution": mu.resolution, "total": mu.total,
           "occupied_cells": int(np.count_nonzero(w > cl.OCCUPANCY_THRESHOLD)),
           "l1_to_uniform": float(np.abs(w - 1.0 / w.size).sum())}
    if ifs.space.kind == "interval":
        c = (np.arange(mu.resolution) + 0.5) / mu.resolution
        out["middle_third_mass"] = float(w[(c > 1 / 3) & (c < 2 / 3)].sum())
    return out


def _hyperbolicity(ifs) -> dict:
    rep = cl.classify_hyperbolic(ifs)
    return {"lipschitz": list(rep.lipschitz), "min_probabilities": list(rep.min_probabilities),
            "contractive": rep.contractive, "positive": rep.positive, "hyperbolic": rep.hyperbolic,
            "method": rep.method}


def run_chaos_game(params, seed, ctx):
    p = take(params, CHAOS_SCHEMA, "params")
    ifs, res = _chaos(p, seed, ctx)
    ctx.grid("histogram", res.measure, {"space": ifs.space.kind, "samples": int(p["n"])})
    return {"samples": int(p["n"]), **_measure_summary(ifs, res.measure),
            "hyperbolicity": _hyperbolicity(ifs)}


def _default_scales(m: int) -> list:
    scales, f = [], 1
    while f < m:
        if m % f == 0 and round(np.log(m / f) / np.log(3), 9).is_integer():
            scales.append(f / m)
        f *= 3
    return sorted(scales, reverse=True)[:6]


def run_dimension(params, seed, ctx):
    p = take(params, {**CHAOS_SCHEMA, "resolution": 729, "scales": None}, "params")
    ifs, res = _chaos(p, seed, ctx)
    scales = p["scales"] or _default_scales(int(p["resolution"]))
    bc = cl.box_counting_dimension(res.measure, [float(s) for s in scales])
    ctx.grid("histogram", res.measure, {"space": ifs.space.kind, "samples": int(p["n"])})
    ctx.profile("box_counts", {"scale": bc.scales, "count": bc.counts})
    return {"dimension": bc.dimension, "fit_residual": bc.residual, "scales": list(bc.scales),
            "counts": list(bc.counts), **_measure_summary(ifs, res.measure)}


def _initial_measure(space, m, initial):
    if initial == "uniform":
        return cl.EmpiricalMeasure.uniform(space, m)
    if isinstance(initial, dict) and set(initial) == {"point"}:
        return cl.EmpiricalMeasure.point_mass(space, m, initial["point"])
    raise ConfigError("params.initial: expected \"uniform\" or {\"point\": x}")


def run_push_measure(params, seed, ctx):
    p = take(params, {"ifs": REQUIRED, "resolution": 81, "steps": 20, "initial": "uniform"}, "params")
    ifs = load_classical_ifs(p["ifs"], "params.ifs")
    m = int(p["resolution"])
    mu0 = _initial_measure(ifs.space, m, p["initial"])
    mu = cl.iterate_measure(ifs, mu0, int(p["steps"]))
    nxt = cl.push_measure(ifs, mu)
    ctx.grid("measure", mu, {"space": ifs.space.kind, "steps": int(p["steps"])})
    return {"steps": int(p["steps"]), **_measure_summary(ifs, mu),
            "l1_from_initial": mu.l1_distance(mu0), "l1_last_step": nxt.l1_distance(mu)}


def run_push_density(params, seed, ctx):
    p = take(params, {"ifs": REQUIRED, "points": 3001, "steps": 1}, "params")
    ifs = load_classical_ifs(p["ifs"], "params.ifs")
    x = np.linspace(0.0, 1.0, int(p["points"]))
    g = np.ones_like(x)
    for _ in range(int(p["steps"])):
        g = cl.push_density(ifs, x, g)
    ctx.profile("density", {"x": x, "density": g})
    return {"steps": int(p["steps"]), "integral": float(np.trapezoid(g, x)),
            "max": float(g.max()), "min": float(g.min())}


# ---------------------------------------------------------------------------
# Quantum kinds
# ---------------------------------------------------------------------------

def _initial_state(doc, dim):
    if doc is None:
        return np.eye(dim, dtype=complex) / dim
    return load_state(doc, "params.initial")


def _fit_log(d: np.ndarray) -> dict:
    n = np.arange(1, len(d) + 1)
    ld = np.log(d)
    slope, icpt = np.polyfit(n, ld, 1)
    ss = np.sum((ld - ld.mean()) ** 2)
    r2 = 1.0 - np.sum((ld - (slope * n + icpt)) ** 2) / ss if ss > 0 else 1.0
    return {"slope": float(slope), "intercept": float(icpt), "r2": float(r2)}


def run_invariant_state(params, seed, ctx):
    p = take(params, {"qifs": REQUIRED, "tol": 1e-9, "power_tol": 1e-12, "max_steps": 10_000,
                      "initial": None, "evolve_steps": 0, "reference": None}, "params")
    obj = load_qifs(p["qifs"], "params.qifs")
    ch = as_channel(obj)
    op = ch if ch is not None else obj
    if ch is None and not isinstance(obj, MixedQIFS):
        raise ConfigError("params.qifs: invariant-state needs a channel, homogeneous or mixed QIFS")
    dim = ch.dim if ch is not None else obj.dim
    rho0 = _projector(_initial_state(p["initial"], dim))
    out = {}
    if ch is not None:
        rep = fixed_states(ch, float(p["tol"]))
        out["fixed"] = {"multiplicity": rep.multiplicity, "unique": rep.unique,
                        "residual": rep.residual, "method": rep.method,
                        "state": matrix_to_json(rep.state)}
        ctx.matrix("fixed_state", rep.state)
    pi = power_iteration(op, rho0, int(p["max_steps"]), float(p["power_tol"]))
    out["power_iteration"] = {"steps": pi.steps, "converged": pi.converged, "residual": pi.residual,
                              "state": matrix_to_json(pi.state)}
    if ch is not None:
        out["power_vs_spectral"] = trace_distance(pi.state, rep.state)
    n = int(p["evolve_steps"])
    if n > 0:
        ref = (np.eye(dim) / dim if p["reference"] is None
               else _projector(load_state(p["reference"], "params.reference")))
        step = op if ch is not None else op.averaged_map
        rho, dist = rho0, np.empty(n)
        for k in range(n):
            rho = step(rho)
            dist[k] = trace_distance(rho, ref)
        ctx.profile("distance", {"step": np.arange(1, n + 1), "trace_distance": dist})
        out["evolution"] = {"steps": n, "first": float(dist[0]), "last": float(dist[-1]),
                            "max_increase": float(np.max(np.diff(dist), initial=0.0)),
                            "fit": _fit_log(dist)}
    if not pi.converged and ch is None:
        raise ConvergenceError(f"power iteration did not converge in {pi.steps} steps")
    return out


def run_uniqueness(params, seed, ctx):
    p = take(params, {"qifs": None, "probs": None, "unitaries": None, "tol": 1e-8,
                      "weights": None}, "params")
    if p["qifs"] is not None:
        fam = unitary_family(load_qifs(p["qifs"], "params.qifs"))
        if fam is None:
            raise ConfigError("params.qifs: uniqueness needs a random external field")
        probs, us = fam
    elif p["probs"] is not None and p["unitaries"] is not None:
        probs = [float(x) for x in p["probs"]]
        us = [load_matrix(u, f"params.unitaries[{i}]") for i, u in enumerate(p["unitaries"])]
    else:
        raise ConfigError("params: give either 'qifs' or both 'probs' and 'unitaries'")
    if np.any(np.asarray(probs) <= 0):
        raise PreconditionError("the uniqueness criterion needs strictly positive probabilities")
    tol = float(p["tol"])
    rep = commutant(us, tol)
    ch = random_external_field(probs, us)
    fs = fixed_states(ch, tol)
    out = {"commutant_dim": rep.dim, "verdict": rep.verdict, "unique": rep.dim == 1,
           "fixed_multiplicity": fs.multiplicity,
           "consistent": fs.multiplicity is None or (fs.multiplicity == 1) == (rep.dim == 1),
           "blocks": [list(b) for b in rep.blocks], "off_block": rep.off_block,
           "fixed_state": matrix_to_json(fs.state)}
    if rep.reducible:
        sigma = block_diagonal_invariant_state(rep, p["weights"])
        out["direct_sum_residual"] = float(np.max(np.abs(ch(sigma) - sigma)))
        ctx.matrix("direct_sum_state", sigma)
    if ctx.wants("json"):
        ctx.artifacts.append(write_json(ctx.out / "commutant.json", rep.to_json()).name)
    return out


TRAJ_SCHEMA = {"qifs": REQUIRED, "initial": REQUIRED, "n": 10_000, "burn_in": 0, "reference": None}


def _trajectory(p, seed):
    obj = load_qifs(p["qifs"], "params.qifs")
    if not isinstance(obj, (PureQIFS, MixedQIFS, HomogeneousQIFS)):
        raise ConfigError("params.qifs: trajectories need a QIFS, not a bare channel")
    s0 = load_state(p["initial"], "params.initial")
    if isinstance(obj, MixedQIFS):
        s0 = _projector(s0)
    return obj, qifs_trajectory(obj, s0, int(p["n"]), seed)


def _reference_state(obj, p):
    if p["reference"] is not None:
        return _projector(load_state(p["reference"], "params.reference"))
    ch = as_channel(obj)
    if ch is not None:
        return fixed_states(ch).state
    if isinstance(obj, MixedQIFS):
        n = obj.dim
        return power_iteration(obj, np.eye(n) / n).state
    return None


def run_trajectory(params, seed, ctx):
    p = take(params, TRAJ_SCHEMA, "params")
    obj, traj = _trajectory(p, seed)
    first = _projector(traj.states[0])
    if traj.pure:
        dev = [np.max(np.abs(np.outer(s, s.conj()) - first)) for s in traj.states]
        purity = np.ones(len(traj.states))
    else:
        dev = [np.max(np.abs(s - first)) for s in traj.states]
        purity = np.real(np.einsum("nij,nji->n", traj.states, traj.states))
    ctx.profile("indices", {"step": np.arange(len(traj.indices)), "map": traj.indices})
    bary = barycenter_estimate(traj, int(p["burn_in"]))
    ctx.matrix("barycenter", bary)
    freq = np.bincount(traj.indices, minlength=2) / max(len(traj.indices), 1)
    return {"steps": int(p["n"]), "map_frequencies": freq.tolist(),
            "max_projector_deviation_from_initial": float(np.max(dev)),
            "purity_min": float(purity.min()), "purity_max": float(purity.max()),
            "barycenter": matrix_to_json(bary)}


def run_barycenter(params, seed, ctx):
    p = take(params, {**TRAJ_SCHEMA, "n": 100_000, "burn_in": 100}, "params")
    obj, traj = _trajectory(p, seed)
    bary = barycenter_estimate(traj, int(p["burn_in"]))
    ref = _reference_state(obj, p)
    ctx.matrix("barycenter", bary)
    out = {"steps": int(p["n"]), "burn_in": int(p["burn_in"]), "barycenter": matrix_to_json(bary)}
    if ref is not None:
        out["reference"] = matrix_to_json(ref)
        out["trace_distance_to_reference"] = trace_distance(bary, ref)
    return out


def run_husimi_sphere(params, seed, ctx):
    p = take(params, {"j": REQUIRED, "state": REQUIRED, "resolution": 32}, "params")
    rho = _projector(load_state(p["state"], "params.state"))
    grid = husimi_sphere(rho, p["j"], int(p["resolution"]))
    ctx.grid("husimi", grid, grid.meta)
    idx = np.unravel_index(np.argmax(grid.values), grid.shape)
    return {"max": float(grid.values.max()), "min": float(grid.values.min()),
            "argmax_cell": [int(i) for i in idx], **grid.meta}


def run_husimi_torus(params, seed, ctx):
    p = take(params, {"state": REQUIRED, "resolution": 27}, "params")
    rho = _projector(load_state(p["state"], "params.state"))
    grid = husimi_torus(rho, int(p["resolution"]))
    ctx.grid("husimi", grid, grid.meta)
    idx = np.unravel_index(np.argmax(grid.values), grid.shape)
    return {"max": float(grid.values.max()), "min": float(grid.values.min()),
            "argmax_cell": [int(i) for i in idx], "excluded_mass": excluded_mass(grid), **grid.meta}


TARTAN_SCHEMA = {"L": 27, "mode": "linear-spectral", "resolution": 54, "tol": 1e-10,
                 "max_steps": 10_000, "compare_modes": False}


def run_tartan(params, seed, ctx):
    p = take(params, TARTAN_SCHEMA, "params")
    ch = tartan_operators(int(p["L"]))
    inv = tartan_invariant(ch, p["mode"], float(p["tol"]), int(p["max_steps"]))
    m = int(p["resolution"])
    grid = husimi_torus(inv.state, m)
    n = ch.dim
    level = matched_cantor_level(n)
    prof = position_profile(inv.state)
    cantor_n = cl.cantor_profile(level, n) if n % 3 ** level == 0 else None
    ctx.grid("husimi", grid, {**grid.meta, "L": ch.L, "mode": p["mode"], "residual": inv.residual})
    cols = {"position_mass": prof}
    if cantor_n is not None:
        cols["cantor_level_matched"] = cantor_n
    ctx.profile("mass_profile", cols)
    if ctx.wants("json"):
        ctx.artifacts.append(write_json(ctx.out / "tartan.json", inv.to_json()).name)
    out = {"N": n, "L": ch.L, **inv.to_json(), "resolution": m,
           "excluded_mass": excluded_mass(grid), "cantor_level": level,
           "pearson_position_profile": _pearson(prof, cantor_n) if cantor_n is not None else None}
    if m % 3 ** level == 0:
        c = cl.cantor_profile(level, m)
        out["pearson_husimi_q"] = _pearson(grid.row_profile(), c)
        out["pearson_husimi_p"] = _pearson(grid.col_profile(), c)
    if p["compare_modes"]:
        other = "nonlinear-normalized" if p["mode"] == "linear-spectral" else "linear-spectral"
        alt = tartan_invariant(ch, other, float(p["tol"]), int(p["max_steps"]))
        out["mode_l1_difference"] = float(np.abs(husimi_torus(alt.state, m).mass() - grid.mass()).sum())
    return out


# ---------------------------------------------------------------------------
# Classical / quantum comparison
# ---------------------------------------------------------------------------

def grid_from(config: dict, resolution: int, seed: int, n_value: int | None = None, threads: int = 1) -> np.ndarray:
    """Normalized mass on an ``M x M`` (or length-``M``) grid for a grid-producing config."""
    kind = config.get("kind")
    params = dict(config.get("params", {}))
    if kind in ("chaos-game", "dimension", "push-measure"):
        params["resolution"] = resolution
        params.pop("scales", None)
        if kind == "push-measure":
            p = take(params, {"ifs": REQUIRED, "resolution": 81, "steps": 20, "initial": "uniform"}, "params")
            ifs = load_classical_ifs(p["ifs"], "params.ifs")
            mu = cl.iterate_measure(ifs, _initial_measure(ifs.space, resolution, p["initial"]), int(p["steps"]))
        else:
            p = take(params, CHAOS_SCHEMA, "params")
            ifs, res = _chaos(p, seed, RunContext(Path("."), (), threads))
            mu = res.measure
        if ifs.space.kind == "sphere":
            raise ConfigError("comparison grids are defined on the interval and the square only")
        return mu.normalized()
    if kind == "tartan":
        if n_value is not None:
            if n_value % 3:
                raise ConfigError(f"tartan dimension {n_value} is not divisible by 3")
            params["L"] = n_value // 3
        p = take(params, TARTAN_SCHEMA, "params")
        inv = tartan_invariant(tartan_operators(int(p["L"])), p["mode"], float(p["tol"]), int(p["max_steps"]))
        return husimi_torus(inv.state, resolution).mass()
    if kind == "husimi-torus":
        state = dict(params.get("state", {}))
        if n_value is not None:
            for key in ("N", "dim"):
                if key in state:
                    state[key] = n_value
        rho = _projector(load_state(state, "params.state"))
        return husimi_torus(rho, resolution).mass()
    raise ConfigError(f"kind {kind!r} does not produce a comparison grid")


def _region_mass(mass: np.ndarray) -> float:
    m = mass.shape[0]
    c = (np.arange(m) + 0.5) / m
    mid = (c > 1 / 3) & (c < 2 / 3)
    if mass.ndim == 1:
        return float(mass[mid].sum())
    return float(mass[mid[:, None] | mid[None, :]].sum())


def compare_grids(classical: dict, quantum: dict, resolution: int, seed: int,
                  n_values=None, threads: int = 1) -> dict:
    a = grid_from(classical, resolution, seed, threads=threads)
    rows = []
    for n in (n_values or [None]):
        b = grid_from(quantum, resolution, seed, n, threads)
        if a.shape != b.shape:
            raise ConfigError(f"grids of shapes {a.shape} and {b.shape} cannot be compared")
        row = {"N": n, "l1": float(np.abs(a - b).sum()),
               "excluded_mass_classical": _region_mass(a), "excluded_mass_quantum": _region_mass(b)}
        if a.ndim == 2:
            row["pearson_q_profile"] = _pearson(a.sum(axis=1), b.sum(axis=1))
            row["pearson_p_profile"] = _pearson(a.sum(axis=0), b.sum(axis=0))
        else:
            row["pearson_profile"] = _pearson(a, b)
        rows.append(row)
    ex = [r["excluded_mass_quantum"] for r in rows]
    return {"resolution": resolution, "rows": rows,
            "excluded_mass_decreasing": bool(all(x > y for x, y in zip(ex, ex[1:])))}


def run_compare(params, seed, ctx):
    p = take(params, {"classical": REQUIRED, "quantum": REQUIRED, "resolution": 27,
                      "n_values": None}, "params")
    rep = compare_grids(p["classical"], p["quantum"], int(p["resolution"]), seed, p["n_values"], ctx.threads)
    ctx.profile("comparison", {k: [r[k] if r[k] is not None else float("nan") for r in rep["rows"]]
                               for k in ("N", "l1", "excluded_mass_classical", "excluded_mass_quantum")})
    return rep


RUNNERS = {
    "chaos-game": run_chaos_game,
    "push-measure": run_push_measure,
    "push-density": run_push_density,
    "dimension": run_dimension,
    "invariant-state": run_invariant_state,
    "uniqueness": run_uniqueness,
    "trajectory": run_trajectory,
    "barycenter": run_barycenter,
    "husimi-sphere": run_husimi_sphere,
    "husimi-torus": run_husimi_torus,
    "tartan": run_tartan,
    "compare-classical-quantum": run_compare,
}
