"""``shapevar`` command line: eval, classify, sweep, verify, errata.

Exit codes: 0 success, 1 a verification is out of tolerance, 2 bad input,
3 a solver failed.  JSON goes to ``--out`` or stdout; human-readable
summaries go to stderr.
"""
from __future__ import annotations

import argparse
import math
import sys
import time

import numpy as np
from scipy import integrate as sp_integrate

from . import closed_forms as cf
from . import oracle, regimes, variations
from .errors import InputError, PreconditionError, ShapeVarError, SolverError
from .fields import PolynomialField
from .harmonics import HarmonicIndex, sphere_area
from .reports import ReportEnvelope, to_csv

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_INPUT = 2
EXIT_SOLVER = 3

MODE_CHOICES = ("paper", "derived", "corrected", "both", "all")
CSV_HEADER = ("d", "p", "q", "mode", "verdict", "Z2", "Z_tail_sign", "n_negative", "n_positive")
SWEEP_HEADER = ("d", "p", "q", "mode", "c0", "c1", "c2", "c3", "Z2", "slope")


def expand_modes(choice):
    return {"both": ("paper", "derived"), "all": ("paper", "derived", "corrected")}.get(choice, (choice,))


# ---------------------------------------------------------------------------
# argument parsing helpers
# ---------------------------------------------------------------------------


def parse_modes(text):
    """``"2:0.1,3/-1:0.05"`` -> ``{HarmonicIndex(2,0): 0.1, HarmonicIndex(3,-1): 0.05}``."""
    out = {}
    for item in filter(None, (s.strip() for s in text.split(","))):
        if ":" not in item:
            raise InputError(f"mode spec {item!r} is not of the form k:coeff or k/m:coeff")
        key, coeff = item.split(":", 1)
        try:
            km = [int(s) for s in key.split("/")]
            value = float(coeff)
        except ValueError as exc:
            raise InputError(f"mode spec {item!r}: {exc}") from None
        if len(km) > 2:
            raise InputError(f"mode spec {item!r}: expected k or k/m before ':'")
        idx = HarmonicIndex(*km)
        if idx in out:
            raise InputError(f"mode {idx.k}/{idx.m} given twice")
        if not math.isfinite(value):
            raise InputError(f"mode spec {item!r}: coefficient must be finite")
        out[idx] = value
    if not out:
        raise InputError("--modes is empty")
    return out


def parse_int_list(text):
    """``"3,4,7"`` or ``"3-6"`` or a mix."""
    out = []
    for part in filter(None, (s.strip() for s in text.split(","))):
        if "-" in part[1:]:
            a, b = part.split("-", 1)
            out.extend(range(int(a), int(b) + 1))
        else:
            out.append(int(part))
    if not out:
        raise InputError("empty integer list")
    return out


def parse_float_list(text):
    try:
        vals = [float(s) for s in text.split(",") if s.strip()]
    except ValueError as exc:
        raise InputError(str(exc)) from None
    if not vals:
        raise InputError("empty list")
    return vals


def grid_from_args(lo, hi, step, explicit):
    if explicit is not None:
        return np.asarray(parse_float_list(explicit))
    if not (step > 0.0):
        raise InputError(f"grid step must be positive, got {step}")
    if hi < lo:
        raise InputError(f"empty grid: [{lo}, {hi}]")
    return regimes.open_grid(lo, hi, step)


def emit(args, text):
    if getattr(args, "out", None):
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def note(msg):
    print(msg, file=sys.stderr)


# ---------------------------------------------------------------------------
# eval
# ---------------------------------------------------------------------------


def cmd_eval(args):
    params = cf.ProblemParams(args.d, args.p, args.q, args.R)
    spectrum = variations.ModeSpectrum.from_modes(parse_modes(args.modes), R=args.R)
    results = {
        "ball": {
            "capacity": cf.ball_capacity(params),
            "torsion_derived": cf.ball_torsion(params, "derived"),
            "torsion_paper": cf.ball_torsion(params, "paper"),
            "gamma": cf.boundary_gradients(params)[0],
            "gamma_tilde": cf.boundary_gradients(params)[1],
        },
        "first": {
            "capacity": variations.first_variation_capacity(params, spectrum),
            "torsion": variations.first_variation_torsion(params, spectrum),
        },
        "second": {},
    }
    flags = []
    for mode in expand_modes(args.mode):
        block = {
            "capacity": variations.second_variation_capacity(params, spectrum, mode),
            "torsion": variations.second_variation_torsion(params, spectrum, mode),
            "product": variations.second_variation_product(params, spectrum, mode),
        }
        for rep in block.values():
            flags.extend(f"[{mode}] {rep.functional}: {f}" for f in rep.flags)
        results["second"][mode] = block
    echo = {"d": params.d, "p": params.p, "q": params.q, "R": params.R, "modes": args.modes, "mode": args.mode}
    emit(args, ReportEnvelope("eval", echo, results, flags).to_json())
    return EXIT_OK


# ---------------------------------------------------------------------------
# classify / sweep
# ---------------------------------------------------------------------------


def _grids_for(d, args):
    p = grid_from_args(args.p_min if args.p_min is not None else 1.0 + 1e-3,
                       args.p_max if args.p_max is not None else d - 1e-3, args.p_step, args.p_list)
    q = grid_from_args(args.q_min, args.q_max, args.q_step, args.q_list)
    p = p[(p > 1.0) & (p < d)]
    if p.size == 0 or q.size == 0:
        raise InputError(f"empty grid for d={d}")
    if np.any(q <= 1.0):
        raise InputError("q grid must lie in q > 1")
    return p, q


def cmd_classify(args):
    t0 = time.perf_counter()
    dims = parse_int_list(args.d)
    modes = expand_modes(args.mode)
    rows, summary, thresholds, plot_rows, flags = [], [], [], [], []
    for d in dims:
        if d < 3:
            raise InputError(f"dimension must be >= 3, got {d}")
        p, q = _grids_for(d, args)
        for mode in modes:
            g = regimes.classify_grid(d, p, q, mode, args.k_max)
            verdicts = g.verdicts()
            counts = {v.value: g.count(v) for v in regimes.Verdict}
            line = {"d": d, "mode": mode, "cells": int(g.codes.size), "counts": counts}
            if d >= 7 or args.thresholds:
                th = regimes.find_product_thresholds(d, mode, q_max=args.threshold_q_max)
                thresholds.append(th)
                line["p_star"] = th.p_star
                line["q_at_p_star"] = th.q_at_p_star
            summary.append(line)
            note(f"d={d} mode={mode}: " + ", ".join(f"{k}={v}" for k, v in counts.items() if v)
                 + (f"; p*={line['p_star']:.10g}" if line.get("p_star") is not None else ""))
            tail = np.where(np.abs(g.z3) > regimes.Z_TOL, np.sign(g.z3), 0.0)
            P, Q = np.meshgrid(g.p, g.q, indexing="ij")
            z = regimes.scaled_z(d, P[..., None], Q[..., None], np.arange(2, args.k_max + 1), mode)
            n_neg = np.count_nonzero(z < -regimes.Z_TOL, axis=-1)
            n_pos = np.count_nonzero(z > regimes.Z_TOL, axis=-1)
            for i, j in np.ndindex(g.codes.shape):
                if args.rows:
                    rows.append({
                        "d": d, "p": float(g.p[i]), "q": float(g.q[j]), "mode": mode,
                        "verdict": str(verdicts[i, j]), "Z2": float(g.z2[i, j]),
                        "Z_tail_sign": int(tail[i, j]),
                        "n_negative": int(n_neg[i, j]), "n_positive": int(n_pos[i, j]),
                    })
                if args.emit_plot_data:
                    plot_rows.append((d, float(g.p[i]), float(g.q[j]), float(g.z2[i, j]), str(verdicts[i, j]), mode))
    if args.emit_plot_data:
        with open(args.emit_plot_data, "w", encoding="utf-8") as fh:
            fh.write(to_csv(("d", "p", "q", "Z2", "verdict", "mode"), plot_rows))
    echo = _sweep_echo(args, dims)
    if args.format == "csv":
        emit(args, to_csv(CSV_HEADER, rows))
        return EXIT_OK
    results = {"summary": summary, "thresholds": [t.to_dict() for t in thresholds]}
    if args.rows:
        results["rows"] = rows
    for t in thresholds:
        flags.extend(f"d={t.d} {t.mode}: {f}" for f in t.flags)
    timing = {"seconds": time.perf_counter() - t0} if args.timing else None
    emit(args, ReportEnvelope("classify", echo, results, flags, timing).to_json())
    return EXIT_OK


def _sweep_echo(args, dims):
    return {
        "d": dims, "mode": args.mode, "k_max": args.k_max,
        "p": args.p_list if args.p_list is not None else [args.p_min, args.p_max, args.p_step],
        "q": args.q_list if args.q_list is not None else [args.q_min, args.q_max, args.q_step],
        "z_units": "scaled: a positive multiple of the per-mode product term, independent of p and k",
    }


def cmd_sweep(args):
    dims = parse_int_list(args.d)
    rows = []
    for d in dims:
        if d < 3:
            raise InputError(f"dimension must be >= 3, got {d}")
        p, q = _grids_for(d, args)
        P, Q = (a.ravel() for a in np.meshgrid(p, q, indexing="ij"))
        for mode in expand_modes(args.mode):
            if mode == variations.CORRECTED:
                z2 = variations.corrected_mode_signs(d, P, Q, 2)
                slope = variations.corrected_tail_slope(d, P, Q)
                coeffs = None
            else:
                coeffs = variations.product_coefficient_arrays(d, P, Q, mode)
                s2, s3 = variations.mode_sign_coefficients(d, P, Q, mode)
                z2, slope = s2 + 2.0 * s3, s3
            for i in range(P.size):
                rows.append({
                    "d": d, "p": float(P[i]), "q": float(Q[i]), "mode": mode,
                    **{f"c{n}": None if coeffs is None else float(coeffs[n][i]) for n in range(4)},
                    "Z2": float(z2[i]), "slope": float(slope[i]),
                })
    if args.format == "csv":
        emit(args, to_csv(SWEEP_HEADER, rows))
        return EXIT_OK
    flags = []
    if any(r["mode"] == variations.CORRECTED for r in rows):
        flags.append("corrected rows have no affine coefficients; c0..c3 are null there")
    emit(args, ReportEnvelope("sweep", _sweep_echo(args, dims), {"rows": rows}, flags).to_json())
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------


def _verify_row(target, k, formula, fd, tol):
    err = abs(fd.value - formula)
    allowed = max(tol, 10.0 * fd.error)
    return {
        "target": target, "k": k, "formula": formula, "oracle": fd.value,
        "abs_err": err, "rel_err": err / abs(formula) if formula else None,
        "error_estimate": fd.error, "tolerance": allowed, "pass": bool(err <= allowed),
    }


def _geometry_rows(target, k, steps, tol):
    rho = variations.ModeSpectrum.from_modes({(k, 0): 1.0})
    steps = steps or oracle.default_fd_steps(rho)
    first, second = oracle.oracle_derivatives("volume" if target == "volume" else "area", rho, steps=steps)
    if target == "volume":
        return [_verify_row("volume:first", k, 0.0, first, tol), _verify_row("volume:second", k, 0.0, second, tol)]
    return [_verify_row("area:second", k, variations.perimeter_variation(rho)[1], second, tol)]


def _pde_rows(target, k, steps, L, tol, mode):
    rho = variations.ModeSpectrum.from_modes({(k, 0): 1.0})
    params = cf.ProblemParams(3, 2.0, 2.0, 1.0)
    cfg = oracle.default_config(rho) if L is None else oracle.default_config(rho, L=L)
    steps = steps or oracle.default_fd_steps(rho)
    _, second = oracle.oracle_derivatives(target, rho, cfg, steps=steps)
    fn = variations.second_variation_capacity if target == "capacity" else variations.second_variation_torsion
    row = _verify_row(target, k, fn(params, rho, mode).second, second, tol)
    row["mode"] = mode
    row["L"] = cfg.L
    return [row]


def _field_rows(target, samples, seed, tol):
    rng = np.random.default_rng(seed)
    worst = [0.0, 0.0, 0.0]
    for _ in range(samples):
        v = PolynomialField.random(rng)
        w = PolynomialField.random(rng)
        x = rng.uniform(-1.0, 1.0, size=(50, 3))
        x /= np.maximum(1.0, np.linalg.norm(x, axis=1))[:, None]
        res = (oracle.check_aij_lemma if target == "aij" else oracle.check_jacobian_coefficients)(v, w, x)
        worst = [max(a, b) for a, b in zip(worst, res)]
    names = ("A0", "A1", "A2") if target == "aij" else ("J0", "J1", "J2")
    return [{"target": f"{target}:{n}", "k": None, "formula": None, "oracle": None, "abs_err": r,
             "rel_err": None, "error_estimate": None, "tolerance": tol, "pass": bool(r <= tol)}
            for n, r in zip(names, worst)]


DEFAULT_VERIFY_TOL = {"volume": 1e-10, "area": 1e-6, "capacity": 1e-4, "torsion": 1e-4, "aij": 1e-7, "jacobian": 1e-7}


def cmd_verify(args):
    t0 = time.perf_counter()
    tol = args.tol if args.tol is not None else DEFAULT_VERIFY_TOL[args.target]
    steps = tuple(parse_float_list(args.fd_steps)) if args.fd_steps else None
    rows = []
    if args.target in ("aij", "jacobian"):
        rows = _field_rows(args.target, args.samples, args.seed, tol)
    else:
        for k in parse_int_list(args.k):
            if args.amplitude is not None and steps is None:
                rho = variations.ModeSpectrum.from_modes({(k, 0): 1.0})
                k_steps = oracle.default_fd_steps(rho, args.amplitude)
            else:
                k_steps = steps
            if args.target in ("volume", "area"):
                rows.extend(_geometry_rows(args.target, k, k_steps, tol))
            else:
                if k < 2:
                    raise InputError(f"the {args.target} formula needs k >= 2, got k={k}")
                rows.extend(_pde_rows(args.target, k, k_steps, args.L, tol, args.mode))
    ok = all(r["pass"] for r in rows)
    flags = [f"{r['target']} k={r['k']}: |oracle - formula| = {r['abs_err']:.3g} exceeds {r['tolerance']:.3g}"
             for r in rows if not r["pass"]]
    echo = {"target": args.target, "k": args.k, "mode": args.mode, "amplitude": args.amplitude,
            "L": args.L, "fd_steps": args.fd_steps, "tol": tol}
    timing = {"seconds": time.perf_counter() - t0} if args.timing else None
    emit(args, ReportEnvelope("verify", echo, {"rows": rows, "all_pass": ok}, flags, timing).to_json())
    for r in rows:
        note(f"{r['target']:>16} k={r['k']}: formula={r['formula']} oracle={r['oracle']} "
             f"err={r['abs_err']:.3g} -> {'pass' if r['pass'] else 'FAIL'}")
    return EXIT_OK if ok else EXIT_VERIFY_FAILED


# ---------------------------------------------------------------------------
# errata
# ---------------------------------------------------------------------------


def _radial_torsion(d, q):
    """|S^{d-1}| int_0^1 psi(r) r^{d-1} dr with psi from the radial ODE, by quadrature."""
    params = cf.ProblemParams(d, min(1.5, d - 0.5), q)
    val, _ = sp_integrate.quad(lambda r: cf.torsion_function(params, r) * r ** (d - 1), 0.0, 1.0,
                               epsabs=1e-15, epsrel=1e-13)
    return sphere_area(d) * val


def _radial_capacity(d, p):
    """|S^{d-1}| int_1^inf |u'(r)|^p r^{d-1} dr."""
    gamma = (d - p) / (p - 1.0)
    val, _ = sp_integrate.quad(lambda r: (gamma * r ** (-(d - 1.0) / (p - 1.0))) ** p * r ** (d - 1), 1.0, np.inf,
                               epsabs=1e-15, epsrel=1e-13)
    return sphere_area(d) * val


def errata_report(grid_step=0.05):
    flags = []
    Omega = cf.OmegaConvention
    torsion_rows = []
    for d in (3, 4, 5, 6, 7):
        for q in (1.5, 2.0, 3.0, 5.0):
            params = cf.ProblemParams(d, min(1.5, d - 0.5), q)
            derived = cf.ball_torsion(params, "derived")
            row = {"d": d, "q": q, "derived": derived, "radial_quadrature": _radial_torsion(d, q)}
            for om in Omega:
                row[f"paper[{om.value}]"] = cf.ball_torsion(params, "paper", om)
                row[f"ratio[{om.value}]"] = derived / row[f"paper[{om.value}]"]
            row["mismatch"] = all(not math.isclose(row[f"paper[{om.value}]"], derived, rel_tol=1e-12) for om in Omega)
            torsion_rows.append(row)
    bad = [(r["d"], r["q"]) for r in torsion_rows if r["mismatch"]]
    if bad:
        flags.append(f"torsion constant: paper-mode value differs from the radial integral under both omega "
                     f"conventions on {len(bad)} of {len(torsion_rows)} (d, q) pairs")
    p2 = cf.ProblemParams(3, 2.0, 2.0)
    anchors = {
        "torsion_d3_q2": {"derived": cf.ball_torsion(p2, "derived"), "exact": 4.0 * math.pi / 45.0,
                          "paper[unit-sphere-area]": cf.ball_torsion(p2, "paper", Omega.UNIT_SPHERE_AREA),
                          "paper[unit-ball-volume]": cf.ball_torsion(p2, "paper", Omega.UNIT_BALL_VOLUME),
                          "ratio_times_omega": cf.ball_torsion(p2, "derived") * 36.0},
        "capacity_d3_p2": {"formula[unit-sphere-area]": cf.ball_capacity(p2, Omega.UNIT_SPHERE_AREA),
                           "formula[unit-ball-volume]": cf.ball_capacity(p2, Omega.UNIT_BALL_VOLUME),
                           "radial_quadrature": _radial_capacity(3, 2.0), "exact": 4.0 * math.pi},
    }
    cap = anchors["capacity_d3_p2"]
    if not math.isclose(cap["formula[unit-sphere-area]"], cap["exact"], rel_tol=1e-12):
        flags.append("capacity constant does not reproduce 4 pi under the sphere-area convention")

    coeff_rows = []
    for d, p, q in ((3, 2.0, 2.0), (5, 3.0, 1.5), (7, 6.95, 6.77)):
        params = cf.ProblemParams(d, p, q)
        row = {"d": d, "p": p, "q": q}
        for mode in variations.MODES:
            co = variations.product_coefficients(params, mode)
            row[mode] = {"c0": co.c0, "c1": co.c1, "c2": co.c2, "c3": co.c3}
        for mode in variations.ALL_MODES:
            row[f"verdict[{mode}]"] = regimes.classify_product(params, mode).verdict.value
        coeff_rows.append(row)

    series_rows = []
    for k in (2, 3, 4):
        rho = variations.ModeSpectrum.from_modes({(k, 0): 1.0})
        row = {"k": k}
        for mode in ("paper", "corrected"):
            row[f"capacity[{mode}]"] = variations.second_variation_capacity(p2, rho, mode).second
            row[f"torsion[{mode}]"] = variations.second_variation_torsion(p2, rho, mode).second
        series_rows.append(row)
        if not math.isclose(row["torsion[paper]"], row["torsion[corrected]"], rel_tol=1e-12):
            flags.append(f"torsion series k={k} (d=3, q=2): {row['torsion[paper]']:.12g} vs corrected "
                         f"{row['torsion[corrected]']:.12g}; run 'verify --target torsion' for the oracle")

    verdict_rows = []
    for d in range(3, 11):
        p = regimes.open_grid(1.0 + 1e-3, d - 1e-3, grid_step)
        q = regimes.open_grid(1.0 + 1e-3, 10.0, grid_step)
        codes = {m: regimes.classify_grid(d, p, q, m).codes for m in variations.ALL_MODES}
        row = {"d": d, "cells": int(codes["paper"].size)}
        for m in variations.ALL_MODES:
            row[f"indefinite[{m}]"] = int(np.count_nonzero(codes[m] == regimes.kernels.INDEFINITE))
        row["paper_vs_derived_differ"] = int(np.count_nonzero(codes["paper"] != codes["derived"]))
        row["paper_vs_corrected_differ"] = int(np.count_nonzero(codes["paper"] != codes["corrected"]))
        verdict_rows.append(row)
        if row["paper_vs_derived_differ"]:
            flags.append(f"d={d}: paper and derived verdicts differ on {row['paper_vs_derived_differ']} of "
                         f"{row['cells']} cells")
        if row["paper_vs_corrected_differ"]:
            flags.append(f"d={d}: paper and corrected verdicts differ on {row['paper_vs_corrected_differ']} of "
                         f"{row['cells']} cells")
    results = {"torsion_constant": torsion_rows, "anchors": anchors, "product_coefficients": coeff_rows,
               "component_series": series_rows, "verdict_differences": verdict_rows}
    return ReportEnvelope("errata", {"grid_step": grid_step}, results, flags)


def cmd_errata(args):
    env = errata_report(args.grid_step)
    emit(args, env.to_json())
    for f in env.flags:
        note(f)
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser():
    ap = argparse.ArgumentParser(prog="shapevar", description="Second domain variations of capacity, torsion "
                                 "and their product at the ball.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", help="write the report here instead of stdout")
        p.add_argument("--timing", action="store_true", help="include wall-clock timing (breaks byte-identity)")

    e = sub.add_parser("eval", help="variations for one parameter set and perturbation")
    common(e)
    e.add_argument("--d", type=int, required=True)
    e.add_argument("--p", type=float, required=True)
    e.add_argument("--q", type=float, required=True)
    e.add_argument("--R", type=float, default=1.0)
    e.add_argument("--modes", required=True, help='"k:coeff[,k/m:coeff...]"')
    e.add_argument("--mode", choices=MODE_CHOICES, default="both")
    e.set_defaults(func=cmd_eval)

    def grid_args(p, default_step):
        common(p)
        p.add_argument("--d", default="3-7", help='dimensions, e.g. "3,4,7" or "3-6"')
        p.add_argument("--p-min", type=float)
        p.add_argument("--p-max", type=float)
        p.add_argument("--p-step", type=float, default=default_step)
        p.add_argument("--p-list")
        p.add_argument("--q-min", type=float, default=1.0 + 1e-3)
        p.add_argument("--q-max", type=float, default=10.0)
        p.add_argument("--q-step", type=float, default=default_step)
        p.add_argument("--q-list")
        p.add_argument("--k-max", type=int, default=regimes.DEFAULT_K_MAX)
        p.add_argument("--mode", choices=MODE_CHOICES, default="both")
        p.add_argument("--format", choices=("json", "csv"), default="json")

    c = sub.add_parser("classify", help="verdict grid and thresholds")
    grid_args(c, 0.05)
    c.add_argument("--rows", action=argparse.BooleanOptionalAction, default=True,
                   help="include one row per (d, p, q, mode)")
    c.add_argument("--thresholds", action="store_true", help="search thresholds also for d < 7")
    c.add_argument("--threshold-q-max", type=float, default=50.0)
    c.add_argument("--emit-plot-data", metavar="PATH", help="write (d, p, q, Z2, verdict, mode) CSV")
    c.set_defaults(func=cmd_classify)

    s = sub.add_parser("sweep", help="raw per-cell coefficients")
    grid_args(s, 0.1)
    s.set_defaults(func=cmd_sweep)

    v = sub.add_parser("verify", help="brute-force oracle vs formulas (d = 3)")
    common(v)
    v.add_argument("--target", required=True, choices=("volume", "area", "capacity", "torsion", "aij", "jacobian"))
    v.add_argument("--k", default="2", help='degree(s), e.g. "2" or "2,3,4"')
    v.add_argument("--amplitude", type=float, help="largest |t rho| in the FD schedule (default 0.02)")
    v.add_argument("--L", type=int, help="harmonic truncation of the solvers")
    v.add_argument("--fd-steps", help="explicit decreasing t steps, comma separated")
    v.add_argument("--mode", choices=("paper", "corrected"), default="paper",
                   help="which capacity/torsion series to compare with")
    v.add_argument("--tol", type=float)
    v.add_argument("--samples", type=int, default=20, help="random fields for aij / jacobian")
    v.add_argument("--seed", type=int, default=0)
    v.set_defaults(func=cmd_verify)

    r = sub.add_parser("errata", help="paper-literal vs recomputed constants and verdicts")
    common(r)
    r.add_argument("--grid-step", type=float, default=0.05)
    r.set_defaults(func=cmd_errata)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InputError, PreconditionError) as exc:
        note(f"error: {exc}")
        return EXIT_INPUT
    except SolverError as exc:
        note(f"solver failure: {exc} (residual {exc.residual:.3g})")
        return EXIT_SOLVER
    except ShapeVarError as exc:
        note(f"error: {exc}")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
