"""Command-line front end: single evaluations, sweeps, and reports.

Every mode emits one CSV table with a fixed header (one row per grid
point) and optionally a JSON run summary.  Rows that fail to converge are
flagged, never dropped.  Exit status: 0 when every row converged, 2 when
any row did not, 1 on input errors.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import dataclasses
import json
import math
import sys
import time
import warnings

import numpy as np

from . import __version__
from .errors import DomainError
from .geometry import CylPlaneGeometry, Geometry
from .kernels import Truncation, q_matrix_det
from .quadrature import QuadratureSpec
from . import energies

MODES = (
    "energy",
    "sweep-alpha",
    "sweep-delta",
    "concentric",
    "cylplane",
    "asymptotics",
    "pfa",
    "electrostatics",
    "modes",
    "convergence",
)

COLUMNS = (
    "mode",
    "alpha",
    "delta",
    "a",
    "b",
    "eps",
    "length",
    "h",
    "lam",
    "reduced",
    "energy",
    "tm",
    "te",
    "delta_e_reduced",
    "delta_e",
    "ratio_pfa",
    "ratio_asymptote",
    "capacity",
    "force",
    "qdet",
    "n_max",
    "m_max",
    "rel_error",
    "converged",
    "wall_time_s",
)

CONVERGENCE_COLUMNS = (
    "n_max",
    "m_max",
    "panels",
    "reduced",
    "energy",
    "change",
    "wall_time_s",
)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="casimir-cylinders",
        description=(
            "Casimir interaction energies for eccentric conducting cylinders: "
            "exact determinant pipelines, limiting closed forms, mode scans "
            "and convergence reports, emitted as CSV (plus an optional JSON "
            "summary)."
        ),
        exit_on_error=False,
    )
    p.add_argument("--mode", choices=MODES, default="energy")
    geo = p.add_argument_group("geometry (give a,b,eps or alpha,delta; a defaults to 1)")
    geo.add_argument("--a", type=float, default=None, help="inner radius")
    geo.add_argument("--b", type=float, default=None,
                     help="outer radius (cylplane mode: axis-to-plane distance H)")
    geo.add_argument("--eps", type=float, default=None, help="axis offset")
    geo.add_argument("--length", type=float, default=1.0, help="cylinder length L")
    geo.add_argument("--alpha", type=float, default=None, help="radius ratio b/a")
    geo.add_argument("--delta", type=float, default=None, help="reduced eccentricity eps/a")
    grid = p.add_argument_group("sweep grid (interpretation depends on --mode)")
    grid.add_argument("--grid-start", type=float, default=None)
    grid.add_argument("--grid-stop", type=float, default=None)
    grid.add_argument("--grid-count", type=int, default=1)
    grid.add_argument("--grid-log", action="store_true", help="log-spaced grid")
    num = p.add_argument_group("numerical controls")
    num.add_argument("--nmax", type=int, default=None, help="starting mode window half-width")
    num.add_argument("--rel-tol", type=float, default=1e-8)
    num.add_argument("--workers", type=int, default=1)
    num.add_argument("--force-small-gap", action="store_true",
                     help="override the alpha-1-delta >= 0.02 runtime floor")
    num.add_argument("--pipeline", choices=("exact", "tridiagonal"), default="exact",
                     help="pipeline used for the eccentricity sweeps")
    num.add_argument("--voltage", type=float, default=1.0, help="electrostatics: potential difference")
    num.add_argument("--eps0", type=float, default=1.0, help="electrostatics: vacuum permittivity")
    out = p.add_argument_group("output")
    out.add_argument("--out", type=str, default=None, help="CSV path (default: stdout)")
    out.add_argument("--json", type=str, default=None, help="JSON summary path")
    return p


@dataclasses.dataclass(frozen=True)
class SweepRequest:
    """A validated CLI request: mode, base geometry, grid and controls."""

    mode: str
    a: float
    b: float | None
    eps: float
    length: float
    grid: tuple
    n_max: int | None
    rel_tol: float
    workers: int
    force_small_gap: bool
    pipeline: str
    voltage: float
    eps0: float
    out: str | None
    json_path: str | None


def _resolve_geometry(args) -> tuple[float, float | None, float]:
    a = args.a if args.a is not None else 1.0
    if a <= 0:
        raise DomainError("a must be positive")
    if args.b is not None and args.alpha is not None and abs(args.b - args.alpha * a) > 1e-12 * a:
        raise DomainError("give either --b or --alpha, not an inconsistent pair")
    b = args.b if args.b is not None else (args.alpha * a if args.alpha is not None else None)
    if args.eps is not None and args.delta is not None:
        raise DomainError("give either --eps or --delta, not both")
    eps = args.eps if args.eps is not None else ((args.delta or 0.0) * a)
    return a, b, eps


def _grid(args, default=None) -> tuple:
    if args.grid_start is None and args.grid_stop is None:
        return tuple(default) if default is not None else ()
    if args.grid_start is None or args.grid_stop is None:
        raise DomainError("--grid-start and --grid-stop must be given together")
    count = args.grid_count
    if count < 1:
        raise DomainError("--grid-count must be >= 1")
    if count == 1:
        return (args.grid_start,)
    if args.grid_log:
        if args.grid_start <= 0 or args.grid_stop <= 0:
            raise DomainError("log spacing needs positive grid bounds")
        return tuple(np.geomspace(args.grid_start, args.grid_stop, count))
    return tuple(np.linspace(args.grid_start, args.grid_stop, count))


def parse_request(argv) -> SweepRequest:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except argparse.ArgumentError as exc:
        raise DomainError(str(exc)) from exc
    a, b, eps = _resolve_geometry(args)
    return SweepRequest(
        mode=args.mode,
        a=a,
        b=b,
        eps=eps,
        length=args.length,
        grid=_grid(args),
        n_max=args.nmax,
        rel_tol=args.rel_tol,
        workers=max(1, args.workers),
        force_small_gap=args.force_small_gap,
        pipeline=args.pipeline,
        voltage=args.voltage,
        eps0=args.eps0,
        out=args.out,
        json_path=args.json,
    )


def _blank_row(mode) -> dict:
    row = {c: None for c in COLUMNS}
    row["mode"] = mode
    return row


def _fill_geometry(row, geom: Geometry):
    row.update(
        alpha=geom.alpha, delta=geom.delta, a=geom.a, b=geom.b, eps=geom.eps,
        length=geom.length,
    )


def _fill_energy(row, res: energies.EnergyResult):
    row.update(
        reduced=res.reduced, energy=res.value, tm=res.tm, te=res.te,
        rel_error=res.rel_error, converged=res.converged,
        n_max=res.truncation_used.n_max if res.truncation_used else None,
        m_max=res.truncation_used.m_max if res.truncation_used else None,
    )


def _point_geometries(req: SweepRequest):
    """Validate and materialize the geometry for every grid point up front."""
    if req.mode in ("energy", "pfa", "electrostatics", "modes"):
        values = (None,)
    else:
        values = req.grid
        if not values:
            raise DomainError(f"mode {req.mode} needs a --grid-start/--grid-stop grid")
    geoms = []
    for v in values:
        if req.mode in ("sweep-alpha", "concentric", "asymptotics"):
            geoms.append(Geometry(a=req.a, b=v * req.a, eps=req.eps, length=req.length))
        elif req.mode == "sweep-delta":
            if req.b is None:
                raise DomainError("sweep-delta needs --b or --alpha")
            geoms.append(Geometry(a=req.a, b=req.b, eps=v * req.a, length=req.length))
        elif req.mode == "cylplane":
            geoms.append(CylPlaneGeometry(a=req.a, h=v * req.a, length=req.length))
        elif req.mode == "convergence":
            if req.b is None:
                raise DomainError("convergence needs --b or --alpha")
            geoms.append(Geometry(a=req.a, b=req.b, eps=req.eps, length=req.length))
        else:
            if req.b is None:
                raise DomainError(f"mode {req.mode} needs --b or --alpha")
            geoms.append(Geometry(a=req.a, b=req.b, eps=req.eps, length=req.length))
    return values, geoms


def _eval_point(req: SweepRequest, value, geom) -> dict:
    t0 = time.perf_counter()
    q = QuadratureSpec(rel_tol=req.rel_tol)
    trunc = Truncation(req.n_max) if req.n_max else None
    row = _blank_row(req.mode)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        if req.mode == "energy":
            _fill_geometry(row, geom)
            res, de = energies.exact_with_delta(
                geom, trunc, q, force_small_gap=req.force_small_gap
            )
            _fill_energy(row, res)
            row.update(delta_e_reduced=de.reduced, delta_e=de.value)
        elif req.mode in ("sweep-alpha", "sweep-delta"):
            _fill_geometry(row, geom)
            if req.pipeline == "tridiagonal":
                de = energies.delta_e_tridiagonal(geom, req.n_max, q)
                row.update(
                    reduced=None, energy=None, tm=de.tm, te=de.te,
                    rel_error=de.rel_error, converged=de.converged,
                    n_max=de.truncation_used.n_max,
                )
            else:
                res, de = energies.exact_with_delta(
                    geom, trunc, q, force_small_gap=req.force_small_gap
                )
                _fill_energy(row, res)
            row.update(delta_e_reduced=de.reduced, delta_e=de.value)
            if geom.eps > 0:
                row["ratio_pfa"] = de.value / energies.pfa_closed_forms(geom).de_em
                row["ratio_asymptote"] = de.value / energies.delta_e_asymptote(geom)
        elif req.mode == "concentric":
            _fill_geometry(row, geom)
            res = energies.casimir_concentric(
                geom.alpha, geom.a, geom.length, req.n_max, q,
                force_small_gap=req.force_small_gap,
            )
            _fill_energy(row, res)
            row["ratio_pfa"] = res.value / energies.pfa_closed_forms(geom).e_cc_em
            row["ratio_asymptote"] = res.value / energies.large_alpha_asymptote(geom)
        elif req.mode == "cylplane":
            row.update(a=geom.a, length=geom.length, h=geom.h)
            res = energies.casimir_cylplane(
                geom, trunc, q, force_small_gap=req.force_small_gap
            )
            _fill_energy(row, res)
        elif req.mode == "asymptotics":
            _fill_geometry(row, geom)
            e = energies.large_alpha_asymptote(geom)
            row.update(
                energy=e, reduced=e / (geom.length / (4 * math.pi * geom.a**2)),
                delta_e=energies.delta_e_asymptote(geom), converged=True,
            )
        elif req.mode == "pfa":
            _fill_geometry(row, geom)
            forms = energies.pfa_closed_forms(geom)
            row.update(
                energy=forms.e_cc_em,
                reduced=forms.e_cc_em / (geom.length / (4 * math.pi * geom.a**2)),
                tm=forms.e_cc_per_pol, te=forms.e_cc_per_pol,
                delta_e=forms.de_em, force=forms.f_pfa, converged=True,
            )
        elif req.mode == "electrostatics":
            _fill_geometry(row, geom)
            res = energies.electrostatics(geom, req.voltage, req.eps0)
            row.update(capacity=res.capacity, force=res.force, converged=True)
        elif req.mode == "modes":
            _fill_geometry(row, geom)
            row.update(lam=value, qdet=q_matrix_det(
                value, geom, Truncation(req.n_max or 6)
            ), converged=True)
        else:  # pragma: no cover - guarded by argparse choices
            raise DomainError(f"unknown mode {req.mode}")
    row["wall_time_s"] = time.perf_counter() - t0
    return row


def _mode_rows(req: SweepRequest):
    if req.mode == "modes":
        if not req.grid:
            raise DomainError("modes needs a --grid-start/--grid-stop grid of lambda values")
        _, geoms = _point_geometries(dataclasses.replace(req, mode="energy"))
        return [(lam, geoms[0]) for lam in req.grid]
    values, geoms = _point_geometries(req)
    return list(zip(values, geoms))


def run(req: SweepRequest) -> tuple[int, list[dict]]:
    """Execute the request; returns (exit_status, rows)."""
    if req.mode == "convergence":
        return _run_convergence(req)
    points = _mode_rows(req)
    if req.workers > 1 and len(points) > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=req.workers) as pool:
            rows = list(pool.map(_eval_point, *zip(*[(req, v, g) for v, g in points])))
    else:
        rows = [_eval_point(req, v, g) for v, g in points]
    status = 0 if all(r.get("converged") in (True, None) for r in rows) else 2
    return status, rows


def _run_convergence(req: SweepRequest) -> tuple[int, list[dict]]:
    _, geoms = _point_geometries(req)
    geom = geoms[0] if geoms else None
    if geom is None:
        raise DomainError("convergence needs a geometry")
    rungs = [int(v) for v in req.grid] if req.grid else [4, 8, 12, 16, 20, 24]
    rows = []
    prev = None
    for n in rungs:
        t0 = time.perf_counter()
        res = _fixed_n_energy(geom, n, QuadratureSpec(rel_tol=req.rel_tol),
                              req.force_small_gap)
        change = None if prev is None else abs(res["reduced"] - prev)
        prev = res["reduced"]
        rows.append(
            dict(
                n_max=n, m_max=res["m_max"], panels=res["panels"],
                reduced=res["reduced"], energy=res["energy"], change=change,
                wall_time_s=time.perf_counter() - t0,
            )
        )
    return 0, rows


def _fixed_n_energy(geom, n, q, force):
    from .kernels import build_kernel_eccentric_pair
    from .linalg import logdet_one_minus
    from .quadrature import energy_integral

    if geom.gap < energies.GAP_FLOOR and not force:
        raise DomainError("gap below floor; pass --force-small-gap")
    m_used = 0

    def f(beta):
        nonlocal m_used
        ktm, kte = build_kernel_eccentric_pair(geom, beta, Truncation(n))
        m_used = max(m_used, ktm.m_max_used)
        return np.array([logdet_one_minus(ktm), logdet_one_minus(kte)])

    res = energy_integral(f, 1.0 / (2.0 * geom.gap), q)
    scale = geom.length / (4.0 * math.pi * geom.a**2)
    reduced = float(res.value.sum())
    return dict(
        reduced=reduced, energy=reduced * scale, m_max=m_used or None,
        panels=res.panels_used,
    )


def _write_rows(rows, columns, out_path):
    if out_path:
        handle = open(out_path, "w", newline="")
    else:
        handle = sys.stdout
    try:
        writer = csv.writer(handle)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row.get(c)) for c in columns])
    finally:
        if out_path:
            handle.close()


def main(argv=None) -> int:
    t0 = time.perf_counter()
    try:
        req = parse_request(argv)
        status, rows = run(req)
    except (DomainError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    columns = CONVERGENCE_COLUMNS if req.mode == "convergence" else COLUMNS
    _write_rows(rows, columns, req.out)
    if req.json_path:
        rel_errors = [r["rel_error"] for r in rows if r.get("rel_error") is not None]
        summary = {
            "version": __version__,
            "request": {
                k: v for k, v in dataclasses.asdict(req).items()
                if k not in ("out", "json_path")
            },
            "rows_total": len(rows),
            "rows_converged": sum(1 for r in rows if r.get("converged") in (True, None)),
            "max_rel_error": max(rel_errors) if rel_errors else 0.0,
            "wall_time_seconds": time.perf_counter() - t0,
        }
        with open(req.json_path, "w") as fh:
            json.dump(summary, fh, indent=2)
            fh.write("\n")
    return status


def console_main():  # pragma: no cover - thin wrapper
    sys.exit(main())


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
