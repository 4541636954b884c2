"""Command-line orchestration: parse a TOML run configuration, execute a
subcommand, and emit reproducible CSV/JSON artifacts.

Every output file embeds a hash of the parsed configuration; identical
config + seed reproduces byte-identical files (fixed seeds, fixed summation
orders, repr-stable float formatting).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

import numpy as np

from . import dunford, diagnostics
from .errors import ConfigError, MHDLabError, StabilityViolation
from .evolution import SpectralState, ToyState, dt_max, evolve, toy_evolve, toy_from_spectral, vorticity_current
from .grid import ComplexField, PeriodicGrid, l2_norm
from .profiles import build_profile, elsasser, find_critical_points, strip_half_width
from .sturmian import boundary_limits, depletion_exponents, resolvent_uniform_scan, rhs_F

_DEFAULT_CONFIG = Path(__file__).parent / "configs" / "default.toml"

_ERROR_EXIT = {"ConfigError": 2, "StabilityViolation": 3}


def _fmt(x: float) -> str:
    return repr(float(x))


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def load_config(path: str | Path) -> dict:
    with open(path, "rb") as fh:
        config = tomllib.load(fh)
    for section in ("profile", "grid", "initial", "time"):
        if section not in config:
            raise ConfigError(f"missing [{section}] section in {path}")
    seed_env = os.environ.get("MHDLAB_SEED")
    if seed_env is not None:
        config["initial"]["seed"] = int(seed_env)
    return config


def _validate(config: dict):
    """Stern check, dt bound, and epsilon budget — before any compute."""
    grid = PeriodicGrid(int(config["grid"]["n"]))
    alpha = int(config["grid"].get("alpha", 1))
    profile = build_profile(config["profile"]["u"], config["profile"]["b"], grid)
    dt = float(config["time"]["dt"])
    if dt > dt_max(profile, alpha):
        raise ConfigError(f"dt={dt} exceeds dt_max={dt_max(profile, alpha):.4g}")
    scan = config.get("scan", {})
    eps = float(scan.get("contour_epsilon", 0.0))
    if eps and eps >= strip_half_width(elsasser(profile)):
        raise ConfigError("scan.contour_epsilon reaches the validity strip bound")
    return grid, alpha, profile


def make_initial(config: dict, grid: PeriodicGrid, alpha: int,
                 profile=None) -> tuple[ComplexField, ComplexField]:
    """Seeded initial data (psi0, phi0) from a named family.

    Families: band-limited (random spectrum below a cutoff), single-mode,
    gaussian-bump.  With vanish_at_critical = true the data is multiplied by
    a smooth periodic factor vanishing quadratically at every critical point
    of Z+ and Z-.
    """
    spec = config["initial"]
    family = spec.get("family", "band-limited")
    seed = int(spec.get("seed", 0))
    rng = np.random.default_rng(seed)
    y = grid.nodes
    n = grid.n
    if family == "band-limited":
        cutoff = int(spec.get("cutoff", n // 8))
        k = np.fft.fftfreq(n) * n
        def draw():
            coef = np.exp(-0.5 * np.abs(k)) * (rng.standard_normal(n)
                                               + 1j * rng.standard_normal(n))
            coef[np.abs(k) > cutoff] = 0.0
            return np.fft.ifft(coef)
        psi, phi = draw(), draw()
    elif family == "single-mode":
        m = int(spec.get("mode", 1))
        psi = np.exp(1j * m * y)
        phi = float(spec.get("phi_scale", 0.0)) * np.exp(1j * m * y)
    elif family == "gaussian-bump":
        center = float(spec.get("center", np.pi))
        width = float(spec.get("width", 0.5))
        bump = np.exp(-0.5 * ((np.mod(y - center + np.pi, 2 * np.pi) - np.pi) / width) ** 2)
        psi = bump.astype(np.complex128)
        phi = float(spec.get("phi_scale", 0.0)) * psi
    else:
        raise ConfigError(f"unknown initial-data family {family!r}")
    if spec.get("vanish_at_critical", False):
        if profile is None:
            raise ConfigError("vanish_at_critical requires a profile")
        factor = np.ones(n)
        for cp in find_critical_points(elsasser(profile)):
            factor = factor * 0.5 * (1.0 - np.cos(y - cp.y0))
        psi, phi = psi * factor, phi * factor
    return ComplexField(grid, psi), ComplexField(grid, phi)


# ---------------------------------------------------------------------------
# artifact writers
# ---------------------------------------------------------------------------

def _write_snapshots(path: Path, snapshots, chash: str) -> None:
    with open(path, "w") as fh:
        fh.write(f"# config={chash}\n")
        fh.write("t,y,re_psi,im_psi,re_phi,im_phi\n")
        for s in snapshots:
            if isinstance(s, ToyState):
                a, b = s.z1_plus, s.z1_minus
            else:
                a, b = s.psi_hat, s.phi_hat
            for y, pa, pb in zip(s.grid.nodes, a, b):
                fh.write(",".join([_fmt(s.t), _fmt(y), _fmt(pa.real), _fmt(pa.imag),
                                   _fmt(pb.real), _fmt(pb.imag)]) + "\n")


def _write_series(path: Path, series_list, chash: str) -> None:
    with open(path, "w") as fh:
        fh.write(f"# config={chash}\n")
        fh.write("t,value,label\n")
        for series in series_list:
            for t, v in zip(series.times, series.values):
                fh.write(f"{_fmt(t)},{_fmt(v)},{series.label}\n")


def _write_scan(path: Path, rows: list[dict], chash: str) -> None:
    with open(path, "w") as fh:
        fh.write(f"# config={chash}\n")
        if not rows:
            return
        keys = list(rows[0])
        fh.write(",".join(keys) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(row[k]) if isinstance(row[k], float) else str(row[k])
                              for k in keys) + "\n")


def _write_report(path: Path, report: dict, chash: str) -> None:
    report = {"config": chash, **report}
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True, default=float)
        fh.write("\n")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _run_evolve(config, out, jobs, chash):
    grid, alpha, profile = _validate(config)
    psi0, phi0 = make_initial(config, grid, alpha, profile)
    tcfg = config["time"]
    snaps = evolve(SpectralState(grid=grid, alpha=alpha,
                                 psi_hat=psi0.values, phi_hat=phi0.values),
                   profile, float(tcfg["T"]), float(tcfg["dt"]),
                   int(tcfg.get("sample_every", 1)))
    _write_snapshots(out / "snapshots.csv", snaps, chash)
    series = [diagnostics.vertical_norms(snaps, chash)]
    _write_series(out / "series.csv", series, chash)
    _write_report(out / "report.json", {
        "snapshots": len(snaps), "final_t": snaps[-1].t,
        "final_vertical_l2": series[0].values[-1],
    }, chash)
    return 0


def _run_toy(config, out, jobs, chash):
    grid, alpha, profile = _validate(config)
    psi0, phi0 = make_initial(config, grid, alpha, profile)
    toy0 = toy_from_spectral(SpectralState(grid=grid, alpha=alpha,
                                           psi_hat=psi0.values, phi_hat=phi0.values))
    tcfg = config["time"]
    T, dt, every = float(tcfg["T"]), float(tcfg["dt"]), int(tcfg.get("sample_every", 1))
    times = np.arange(0.0, T + 0.5 * dt * every, dt * every)
    snaps = [toy_evolve(toy0, profile, t) for t in times]
    _write_snapshots(out / "snapshots.csv", snaps, chash)
    series = [diagnostics.mixing_norms(snaps, chash)]
    _write_series(out / "series.csv", series, chash)
    _write_report(out / "report.json", {"snapshots": len(snaps),
                                        "final_mixing": series[0].values[-1]}, chash)
    return 0


def _run_resolvent_scan(config, out, jobs, chash):
    grid, alpha, profile = _validate(config)
    psi0, phi0 = make_initial(config, grid, alpha, profile)
    scan = config.get("scan", {})
    eps = float(scan.get("eps", 1e-2))
    re_c = scan.get("re_c", [])
    if not re_c:
        pair = elsasser(profile)
        re_c = list(np.linspace(float(np.min(pair.z_plus)), float(np.max(pair.z_plus)), 9))
    c_grid = [complex(rc, eps) for rc in re_c]
    F = rhs_F(psi0, phi0, profile, alpha, c_grid[0])
    rows, worst = resolvent_uniform_scan([F], profile, alpha, c_grid)
    _write_scan(out / "scan.csv", rows, chash)
    _write_report(out / "report.json", {"worst_ratio": worst, "samples": len(rows)}, chash)
    return 0


def _run_depletion_scan(config, out, jobs, chash):
    grid, alpha, profile = _validate(config)
    psi0, phi0 = make_initial(config, grid, alpha, profile)
    pair = elsasser(profile)
    scan = config.get("scan", {})
    eps_list = [float(e) for e in scan.get("eps_list", [1e-1, 1e-2, 1e-3])]
    F = rhs_F(psi0, phi0, profile, alpha, complex(0.0, eps_list[0]))
    rows, report = [], {}
    for cp in find_critical_points(pair):
        if cp.z_pp <= 0.0:
            continue
        p_phi, p_dphi = depletion_exponents(pair, alpha, cp, F, eps_list)
        rows.append({"y0": cp.y0, "side": cp.side, "z_value": cp.z_value,
                     "slope_phi": p_phi, "slope_dphi": p_dphi})
        report[f"y0={cp.y0:.6g}{cp.side}"] = {"slope_phi": p_phi, "slope_dphi": p_dphi}
    _write_scan(out / "scan.csv", rows, chash)
    _write_report(out / "report.json", report, chash)
    return 0


def _run_dunford(config, out, jobs, chash):
    grid, alpha, profile = _validate(config)
    psi0, phi0 = make_initial(config, grid, alpha, profile)
    pair = elsasser(profile)
    scan = config.get("scan", {})
    eps = float(scan.get("contour_epsilon", 0.5 * strip_half_width(pair)))
    t = float(scan.get("t", 1.0))
    contour = dunford.build_contour(pair, eps)
    state = dunford.reconstruct_contour(psi0, phi0, profile, alpha, t, contour, jobs=jobs)
    state0 = dunford.reconstruct_contour(psi0, phi0, profile, alpha, 0.0, contour, jobs=jobs)
    err0 = np.hypot(l2_norm(state0.psi_hat - psi0.values, grid),
                    l2_norm(state0.phi_hat - phi0.values, grid))
    norm0 = np.hypot(l2_norm(psi0.values, grid), l2_norm(phi0.values, grid))
    _write_snapshots(out / "snapshots.csv", [state0, state], chash)
    _write_report(out / "report.json", {
        "contour_nodes": len(contour.nodes), "epsilon": eps, "t": t,
        "t0_reproduction_rel": err0 / norm0 if norm0 > 0 else 0.0,
    }, chash)
    return 0


def _run_diagnose(config, out, jobs, chash):
    grid, alpha, profile = _validate(config)
    psi0, phi0 = make_initial(config, grid, alpha, profile)
    tcfg = config["time"]
    snaps = evolve(SpectralState(grid=grid, alpha=alpha,
                                 psi_hat=psi0.values, phi_hat=phi0.values),
                   profile, float(tcfg["T"]), float(tcfg["dt"]),
                   int(tcfg.get("sample_every", 1)))
    series = [diagnostics.vertical_norms(snaps, chash),
              diagnostics.mixing_norms(snaps, chash)]
    accum, ratio = diagnostics.spacetime_accumulator(snaps, profile, chash)
    series.append(accum)
    report = {"spacetime_ratio": ratio}
    try:
        points = [cp.y0 for cp in find_critical_points(elsasser(profile))]
    except MHDLabError:
        points = []
    if points:
        series.extend(diagnostics.depletion_trace(snaps, points + [points[0] + np.pi / 4], chash))
    energies = [diagnostics.energy_functional(s, profile, 0) for s in snaps]
    report["energy_drift_rel"] = (max(abs(e - energies[0]) for e in energies) / energies[0]
                                  if energies[0] > 0 else 0.0)
    thresholds = config.get("thresholds", {})
    if "energy_drift_rel" in thresholds:
        report["energy_drift_pass"] = report["energy_drift_rel"] < float(thresholds["energy_drift_rel"])
    _write_series(out / "series.csv", series, chash)
    _write_report(out / "report.json", report, chash)
    return 0


def _run_suite(config, out, jobs, chash):
    """Reduced acceptance battery on the configured problem: fast checks of
    each pillar (oracle rotation, energy drift, mixing fit, reconstruction)
    with measured values and pass/fail against [thresholds]."""
    grid, alpha, profile = _validate(config)
    thresholds = config.get("thresholds", {})
    report: dict = {}

    # constant-coefficient rotation oracle on a small grid
    g0 = PeriodicGrid(128)
    const = build_profile({"family": "constant", "value": 0.0},
                          {"family": "constant", "value": 1.0}, g0)
    f = np.exp(1j * g0.nodes)
    snaps = evolve(SpectralState(grid=g0, alpha=1, psi_hat=f,
                                 phi_hat=np.zeros_like(f)), const, 10.0, 1e-3, 10000)
    end = snaps[-1]
    err = np.hypot(l2_norm(end.psi_hat - np.cos(10.0) * f, g0),
                   l2_norm(end.phi_hat - 1j * np.sin(10.0) * f, g0)) / np.sqrt(2 * np.pi)
    tol = float(thresholds.get("rotation_rel", 1e-8))
    report["rotation"] = {"rel_error": err, "tol": tol, "pass": bool(err < tol)}

    # energy drift on the configured profile over a short horizon
    psi0, phi0 = make_initial(config, grid, alpha, profile)
    snaps = evolve(SpectralState(grid=grid, alpha=alpha, psi_hat=psi0.values,
                                 phi_hat=phi0.values), profile, 10.0,
                   float(config["time"]["dt"]), 1000)
    energies = [diagnostics.energy_functional(s, profile, 0) for s in snaps]
    drift = max(abs(e - energies[0]) for e in energies) / energies[0]
    report["energy"] = {"rel_drift": drift, "constant_u": bool(np.ptp(profile.u) == 0.0)}

    # toy mixing exponent
    toy0 = toy_from_spectral(SpectralState(grid=grid, alpha=alpha,
                                           psi_hat=psi0.values, phi_hat=phi0.values))
    # sample uniformly (the norm beats at period 2*pi / spread of Z values)
    # and stop before the mixing phase exceeds the grid Nyquist frequency
    zslope = float(np.max(np.abs(profile.u_p) + np.abs(profile.b_p)))
    cutoff = int(config["initial"].get("cutoff", grid.n // 8))
    t_max = min(2000.0, 0.9 * (grid.n / 2 - cutoff) / (abs(alpha) * max(zslope, 1e-9)))
    times = np.arange(min(50.0, t_max / 12.0), t_max, 2.5)
    mix = diagnostics.mixing_norms([toy_evolve(toy0, profile, t) for t in times], chash)
    slope, resid = diagnostics.growth_fit(mix, "power", window=13)
    tol = float(thresholds.get("mixing_band", 0.1))
    report["mixing"] = {"exponent": slope, "residual": resid,
                        "pass": bool(abs(slope + 0.5) < tol)}

    # contour reconstruction of the initial data
    pair = elsasser(profile)
    contour = dunford.build_contour(pair, 0.5 * strip_half_width(pair))
    state0 = dunford.reconstruct_contour(psi0, phi0, profile, alpha, 0.0, contour, jobs=jobs)
    norm0 = np.hypot(l2_norm(psi0.values, grid), l2_norm(phi0.values, grid))
    err0 = np.hypot(l2_norm(state0.psi_hat - psi0.values, grid),
                    l2_norm(state0.phi_hat - phi0.values, grid)) / norm0
    tol = float(thresholds.get("dunford_t0_rel", 1e-6))
    report["dunford_t0"] = {"rel_error": err0, "tol": tol, "pass": bool(err0 < tol)}

    report["all_pass"] = all(v.get("pass", True) for v in report.values()
                             if isinstance(v, dict))
    _write_report(out / "report.json", report, chash)
    return 0 if report["all_pass"] else 1


_SUBCOMMANDS = {
    "evolve": _run_evolve,
    "toy": _run_toy,
    "resolvent-scan": _run_resolvent_scan,
    "depletion-scan": _run_depletion_scan,
    "dunford": _run_dunford,
    "diagnose": _run_diagnose,
    "suite": _run_suite,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="mhdlab",
                                     description="sheared-MHD single-mode laboratory")
    parser.add_argument("subcommand", choices=sorted(_SUBCOMMANDS))
    parser.add_argument("--config", default=str(_DEFAULT_CONFIG), help="TOML run configuration")
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument("--jobs", type=int, default=1, help="worker pool size")
    parser.add_argument("--verbose", action="store_true")
    args = parser.parse_args(argv)

    try:
        config = load_config(args.config)
        chash = config_hash(config)
        _validate(config)  # fail before creating any outputs
    except MHDLabError as exc:
        json.dump({"error": type(exc).__name__, "message": str(exc)}, sys.stderr)
        sys.stderr.write("\n")
        return _ERROR_EXIT.get(type(exc).__name__, 4)
    except (OSError, tomllib.TOMLDecodeError, ValueError) as exc:
        json.dump({"error": type(exc).__name__, "message": str(exc)}, sys.stderr)
        sys.stderr.write("\n")
        return 2

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.verbose:
        print(f"mhdlab {args.subcommand}: config {chash} -> {out}", file=sys.stderr)
    try:
        return _SUBCOMMANDS[args.subcommand](config, out, args.jobs, chash)
    except MHDLabError as exc:
        json.dump({"error": type(exc).__name__, "message": str(exc)}, sys.stderr)
        sys.stderr.write("\n")
        return _ERROR_EXIT.get(type(exc).__name__, 4)


if __name__ == "__main__":
    sys.exit(main())
