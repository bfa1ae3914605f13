"""kdvks command line: data sweeps as CSV, optional SVG plots.

Exit status 0 on success, 2 on invalid input, 3 on numerical failure. Errors are
reported as a single line on stderr.
"""
from __future__ import annotations

import csv
import functools
import io
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import click
import numpy as np

from . import evans, selection, spectral_kdv, whitham
from .cnoidal import DegenerateWaveError
from .elliptic import EllipticDomainError
from .perturbed_profile import SolvabilityError, correctors

X_MIN_DEFAULT = 2.0 * np.pi + 0.1
X_MAX_DEFAULT = 30.0


class NumericalFailure(Exception):
    pass


# ---------------------------------------------------------------- output helpers

def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, str):
        return v
    return f"{float(v) + 0.0:.17g}"


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def svg_plot(series, xlabel: str, ylabel: str, title: str = "", width: int = 640, height: int = 420) -> str:
    """Self-contained SVG line plot. series: list of (label, xs, ys)."""
    left, right, top, bottom = 70, 20, 30, 50
    xs_all = np.concatenate([np.asarray(s[1], float) for s in series])
    ys_all = np.concatenate([np.asarray(s[2], float) for s in series])
    ok = np.isfinite(xs_all) & np.isfinite(ys_all)
    x0, x1 = float(xs_all[ok].min()), float(xs_all[ok].max())
    y0, y1 = float(ys_all[ok].min()), float(ys_all[ok].max())
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0
    pad = 0.05 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad
    pw, ph = width - left - right, height - top - bottom

    def sx(x):
        return left + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return top + (y1 - y) / (y1 - y0) * ph

    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"]
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
           f'<rect width="{width}" height="{height}" fill="white"/>',
           f'<line x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}" stroke="black"/>',
           f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}" stroke="black"/>']
    for t in np.linspace(x0, x1, 6):
        out.append(f'<line x1="{sx(t):.2f}" y1="{top + ph}" x2="{sx(t):.2f}" y2="{top + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{sx(t):.2f}" y="{top + ph + 18}" text-anchor="middle">{t:.4g}</text>')
    for t in np.linspace(y0, y1, 6):
        out.append(f'<line x1="{left - 5}" y1="{sy(t):.2f}" x2="{left}" y2="{sy(t):.2f}" stroke="black"/>')
        out.append(f'<text x="{left - 8}" y="{sy(t) + 4:.2f}" text-anchor="end">{t:.4g}</text>')
    if y0 < 0.0 < y1:
        out.append(f'<line x1="{left}" y1="{sy(0.0):.2f}" x2="{left + pw}" y2="{sy(0.0):.2f}" '
                   'stroke="#999" stroke-dasharray="4 3"/>')
    for i, (label, xs, ys) in enumerate(series):
        c = colors[i % len(colors)]
        pts = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(xs, ys) if np.isfinite(x) and np.isfinite(y))
        out.append(f'<polyline fill="none" stroke="{c}" stroke-width="1.5" points="{pts}"/>')
        out.append(f'<text x="{left + pw - 10}" y="{top + 15 + 15 * i}" text-anchor="end" fill="{c}">{label}</text>')
    out.append(f'<text x="{left + pw / 2}" y="{height - 10}" text-anchor="middle">{xlabel}</text>')
    out.append(f'<text x="15" y="{top + ph / 2}" text-anchor="middle" '
               f'transform="rotate(-90 15 {top + ph / 2})">{ylabel}</text>')
    if title:
        out.append(f'<text x="{left + pw / 2}" y="18" text-anchor="middle">{title}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _emit(text: str, out: str | None) -> None:
    if out is None:
        click.echo(text, nl=False)
    else:
        Path(out).write_text(text, encoding="utf-8", newline="\n")


def _emit_svg(svg: str, out: str | None, enabled: bool) -> None:
    if enabled:
        Path(out).with_suffix(".svg").write_text(svg, encoding="utf-8", newline="\n")


# ---------------------------------------------------------------- config and shared flags

def read_config(path: str) -> dict[str, str]:
    cfg = {}
    for i, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise click.BadParameter(f"{path}:{i}: expected 'key = value'", param_hint="--config")
        key, value = (s.strip() for s in line.split("=", 1))
        cfg[key.replace("-", "_").lower()] = value
    return cfg


def _load_config(ctx, param, value):
    if value is not None:
        ctx.default_map = {**(ctx.default_map or {}), **read_config(value)}
    return value


def shared(f):
    @click.option("--config", type=click.Path(exists=True, dir_okay=False), is_eager=True,
                  expose_value=False, callback=_load_config, help="key = value file; flags win.")
    @click.option("--tol", type=float, default=None, help="Tolerance override.")
    @click.option("--threads", type=click.IntRange(min=1), default=None, help="Worker processes.")
    @click.option("--svg", is_flag=True, default=False, help="Also write an SVG plot next to --out.")
    @click.option("--out", type=click.Path(dir_okay=False, writable=True), default=None,
                  help="Output file (default stdout).")
    @functools.wraps(f)
    def wrapper(*args, out, svg, threads, tol, **kw):
        if svg and out is None:
            raise click.BadParameter("--svg needs --out", param_hint="--svg")
        return f(*args, out=out, svg=svg, threads=threads or os.cpu_count() or 1, tol=tol, **kw)
    return wrapper


def _executor(threads: int):
    return ProcessPoolExecutor(threads) if threads > 1 else None


def _grid(x_min: float, x_max: float, n: int) -> np.ndarray:
    if not x_min < x_max:
        raise click.BadParameter("need x-min < x-max")
    if n < 2:
        raise click.BadParameter("need at least 2 points")
    return np.linspace(x_min, x_max, n)


def _modulus(k, X) -> float:
    if (k is None) == (X is None):
        raise click.BadParameter("give exactly one of --k and --X")
    return selection.modulus_from_period(X) if k is None else float(k)


# ---------------------------------------------------------------- commands

@click.group()
def main():
    """Spectral stability of KdV-KS periodic waves in the KdV limit."""


@main.command()
@click.option("--k", type=float, default=None, help="Elliptic modulus.")
@click.option("--X", "X", type=float, default=None, help="Period (alternative to --k).")
@click.option("--n", type=click.IntRange(min=16), default=512, show_default=True)
@shared
def wave(k, X, n, out, svg, threads, tol):
    """Selected wave and correctors. Columns: x, U0, U0', U1, U2 (zero-mean gauge)."""
    cs = correctors(_modulus(k, X), n, with_U2=True)
    x = np.arange(n) * (cs.X / n)
    _emit(csv_text(["x", "U0", "dU0", "U1", "U2"], zip(x, cs.U0, cs.v1, cs.U1, cs.U2)), out)
    _emit_svg(svg_plot([("U0", x, cs.U0), ("U1", x, cs.U1), ("U2", x, cs.U2)], "x", "profile"), out, svg)


def _velocity_row(X):
    r = whitham.subchar_report(X)
    b1, b2 = r.betas
    return (X, *r.alphas, b1.real, b2.real, abs(b1.imag))


@main.command()
@click.option("--x-min", type=float, default=X_MIN_DEFAULT, show_default=True)
@click.option("--x-max", type=float, default=X_MAX_DEFAULT, show_default=True)
@click.option("--n-pts", type=int, default=500, show_default=True)
@shared
def velocities(x_min, x_max, n_pts, out, svg, threads, tol):
    """Characteristic velocities. Columns: X, alpha1..3, beta1, beta2 (real parts), beta_imag."""
    rows = [_velocity_row(X) for X in _grid(x_min, x_max, n_pts)]
    _emit(csv_text(["X", "alpha1", "alpha2", "alpha3", "beta1", "beta2", "beta_imag"], rows), out)
    a = np.array(rows)
    names = ["alpha1", "alpha2", "alpha3", "beta1", "beta2"]
    _emit_svg(svg_plot([(nm, a[:, 0], a[:, i + 1]) for i, nm in enumerate(names)], "X", "velocity"), out, svg)


@main.command("relax-rate")
@click.option("--x-min", type=float, default=2.0 * np.pi, show_default=True)
@click.option("--x-max", type=float, default=X_MAX_DEFAULT, show_default=True)
@click.option("--n-pts", type=int, default=300, show_default=True)
@shared
def relax_rate(x_min, x_max, n_pts, out, svg, threads, tol):
    """Homogeneous relaxation rate. Columns: X, lambda_star."""
    Xs = _grid(x_min, x_max, n_pts)
    ks = [selection.modulus_from_period(X) for X in Xs]
    lam = [whitham.homogeneous_relaxation_rate(k) for k in ks]
    _emit(csv_text(["X", "lambda_star"], zip(Xs, lam)), out)
    _emit_svg(svg_plot([("lambda*", Xs, lam)], "X", "lambda*"), out, svg)


@main.command()
@click.option("--X", "X", type=float, required=True)
@click.option("--resolution", type=click.IntRange(min=20), default=400, show_default=True)
@shared
def index(X, resolution, out, svg, threads, tol):
    """Stability index report as key = value lines."""
    ex = _executor(threads)
    try:
        r = spectral_kdv.stability_index(X, resolution, executor=ex)
    finally:
        if ex is not None:
            ex.shutdown()
    s = whitham.subchar_report(X)
    lines = [("X", X), ("k", s.k), ("ind", r.ind), ("stable", r.ind < 0.0), ("argmax_band", r.argmax_band),
             ("argmax_eta", r.argmax_eta), ("origin_lambda1", r.origin_lambda1), ("lambda_star", s.lambda_star),
             ("s1", s.s1), ("s2", s.s2), ("s3", s.s3), ("n_samples", str(r.n_samples)),
             ("n_invalid", str(r.n_invalid)), ("max_form_gap", r.max_form_gap)]
    _emit("".join(f"{key} = {_fmt(v)}\n" for key, v in lines), out)


@main.command()
@click.option("--lower", type=(float, float), default=(X_MIN_DEFAULT, 12.0), show_default=True)
@click.option("--upper", type=(float, float), default=(20.0, 30.0), show_default=True)
@click.option("--resolution", type=click.IntRange(min=20), default=400, show_default=True)
@shared
def boundaries(lower, upper, resolution, out, svg, threads, tol):
    """Periods where Ind changes sign. Columns: X1, X2."""
    ex = _executor(threads)
    try:
        X1, X2 = spectral_kdv.find_boundaries(lower, upper, xtol=tol or 1e-3,
                                              band_resolution=resolution, executor=ex)
    finally:
        if ex is not None:
            ex.shutdown()
    _emit(csv_text(["X1", "X2"], [(X1, X2)]), out)


@main.command()
@click.option("--x-min", type=float, default=X_MIN_DEFAULT, show_default=True)
@click.option("--x-max", type=float, default=X_MAX_DEFAULT, show_default=True)
@click.option("--n-pts", type=int, default=100, show_default=True)
@shared
def subchar(x_min, x_max, n_pts, out, svg, threads, tol):
    """Subcharacteristic conditions. Columns: X, margin1..3, s1..s3 (1 = holds)."""
    rows = []
    for X in _grid(x_min, x_max, n_pts):
        r = whitham.subchar_report(X)
        rows.append((X, *r.margins, r.s1, r.s2, r.s3))
    _emit(csv_text(["X", "margin1", "margin2", "margin3", "s1", "s2", "s3"], rows), out)
    a = np.array(rows, dtype=float)
    _emit_svg(svg_plot([("S2 margin", a[:, 0], a[:, 2])], "X", "margin"), out, svg)


@main.command("evans-check")
@click.option("--X", "X", type=float, required=True)
@click.option("--samples", type=click.IntRange(min=2), default=20, show_default=True)
@click.option("--integrand", type=click.Choice(["dn2", "dn"]), default="dn2", show_default=True)
@shared
def evans_check(X, samples, integrand, out, svg, threads, tol):
    """Evans function on band samples. Columns: lambda_im, xi, E_re, E_im, relative."""
    res = evans.evans_band_check(X, samples, integrand)
    rows = [(r.lam.imag, r.xi, r.E.real, r.E.imag, r.relative) for r in res]
    _emit(csv_text(["lambda_im", "xi", "E_re", "E_im", "relative"], rows), out)
    worst = max(r.relative for r in res)
    if worst > (tol or 1e-6):
        raise NumericalFailure(f"relative Evans value {worst:.3e} exceeds {tol or 1e-6:.1e}")


@main.command()
@click.option("--X", "X", type=float, required=True)
@click.option("--delta", type=float, required=True)
@click.option("--xi", type=float, default=0.0, show_default=True)
@click.option("--N", "N", type=click.IntRange(min=4), default=64, show_default=True)
@click.option("--c2/--no-c2", default=True, show_default=True, help="Include delta^2 c2 in the speed.")
@shared
def hill(X, delta, xi, N, c2, out, svg, threads, tol):
    """Hill-method Bloch eigenvalues. Columns: re, im (sorted by re descending)."""
    if not 0.0 < delta <= 0.2:
        raise click.BadParameter("delta must lie in (0, 0.2]", param_hint="--delta")
    k = selection.modulus_from_period(X)
    hs = evans.hill_spectrum(k, delta, xi, N, with_c2=c2)
    _emit(csv_text(["re", "im"], [(z.real, z.imag) for z in hs.eigenvalues]), out)


VALIDATION = (click.ClickException, click.exceptions.Abort, ValueError, DegenerateWaveError,
              EllipticDomainError, selection.PeriodRangeError)
NUMERICAL = (NumericalFailure, ArithmeticError, SolvabilityError, np.linalg.LinAlgError)


def run(argv=None) -> int:
    try:
        main.main(args=argv, prog_name="kdvks", standalone_mode=False)
    except click.exceptions.Exit as e:
        return e.exit_code
    except NUMERICAL as e:
        click.echo(f"error: numerical: {_one_line(e)}", err=True)
        return 3
    except VALIDATION as e:
        msg = e.format_message() if isinstance(e, click.ClickException) else _one_line(e)
        click.echo(f"error: validation: {_one_line(msg)}", err=True)
        return 2
    return 0


def _one_line(e) -> str:
    return " ".join(str(e).split()) or type(e).__name__


def entry() -> None:
    sys.exit(run())


if __name__ == "__main__":
    entry()
