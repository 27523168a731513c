"""Nearly-unstable layered benchmark family and its study protocols.

The family fixes an even layer count parameter m, a contrast r in (0, 1),
the frequency omega_m = (pi/2)(1 - r + m), and alternating wave speeds 1 - r
(odd layers) / 1 + r (even layers) on 2m + 1 subintervals of [-1, 1] whose
widths are proportional to the local wave speed (the middle one doubled).
Solution energy grows exponentially in m, realising the variation-exponential
worst case of the stability bound; a tiny perturbation of the central
breakpoint collapses the growth.

Protocols: refine-to-convergence ladders (uniform per-subinterval meshes,
doubling counts, convergence when the last three levels agree in the leading
significant figures), table grids over (m, r, data, perturbation),
least-squares growth-rate fits, comparison against the theoretical bound, and
an empirical quasi-optimality probe against the analytic reference.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import fem, oracle, stability
from .coeffs import constant, piecewise_constant
from .problem import BoundaryConfig, HelmholtzProblem

JOBS_ENV_VAR = "HELMLAB_JOBS"

_G5_T, _G5_W = np.polynomial.legendre.leggauss(5)
_G5_T = 0.5 * (_G5_T + 1.0)
_G5_W = 0.5 * _G5_W


@dataclass(frozen=True)
class UnstableFamilySpec:
    """Parameters of one family member: layer parameter, contrast,
    central-breakpoint perturbation, boundary data pair."""

    m: int
    r: float
    eps: float = 0.0
    g: tuple = (0.0, 1.0)

    def __post_init__(self):
        if self.m < 2 or self.m % 2 != 0:
            raise ValueError("m must be an even integer >= 2")
        if not (0.0 < self.r < 1.0):
            raise ValueError("r must lie in (0, 1)")

    def cache_key(self) -> str:
        g1, g2 = self.g
        return (f"m{self.m}_r{self.r!r}_eps{self.eps!r}"
                f"_g{complex(g1)!r}_{complex(g2)!r}")


def family(spec: UnstableFamilySpec) -> HelmholtzProblem:
    """Build the family member as a pure-impedance problem on [-1, 1]."""
    m, r = spec.m, spec.r
    n = 2 * m + 1
    scale = 1.0 - r + m
    omega = 0.5 * np.pi * scale
    c_vals = np.where(np.arange(1, n + 1) % 2 == 1, 1.0 - r, 1.0 + r)
    widths = c_vals / scale
    widths[m] *= 2.0  # central subinterval (index m + 1, one-based)
    x = np.concatenate([[-1.0], -1.0 + np.cumsum(widths)])
    x[-1] = 1.0  # telescoping sum equals 2 exactly; pin the endpoint
    x[m + 1] += spec.eps
    if not np.all(np.diff(x) > 0.0):
        raise ValueError(f"perturbation eps={spec.eps} breaks the partition ordering")
    return HelmholtzProblem(
        a=constant(1.0, 1.0),
        c=piecewise_constant(x, c_vals),
        omega=omega,
        bc=BoundaryConfig.PURE_IMPEDANCE,
        g_left=spec.g[0],
        g_right=spec.g[1],
    )


def round_sig(value: float, sigfigs: int = 4) -> float:
    """Round to the given number of significant figures."""
    if value == 0.0 or not math.isfinite(value):
        return value
    return float(f"%.{sigfigs - 1}e" % value)


def _sig_repr(value: float, sigfigs: int) -> str:
    return f"%.{sigfigs - 1}e" % value


@dataclass(frozen=True)
class RefinementRun:
    """Per-level ||u_h'|| values plus the convergence verdict.

    `converged` means the last three levels agree in their first `sigfigs`
    significant figures; `reported` is the finest value rounded accordingly.
    """

    values: tuple
    converged: bool
    reported: float
    condition_estimate: float
    residual: float
    wu_finest: float
    sigfigs: int = 4


def refine_to_convergence(problem: HelmholtzProblem, base: int = 800,
                          levels: int = 7, sigfigs: int = 4,
                          cache_dir: Optional[str] = None,
                          cache_key: Optional[str] = None,
                          with_condition: bool = True) -> RefinementRun:
    """Run the refinement ladder base * 2^i, i = 0 .. levels-1.

    Levels found in the cache directory (keyed by problem and level) are
    reused, so interrupted table runs resume where they stopped.
    """
    values = []
    cond = math.nan
    residual = math.nan
    wu = math.nan
    for level in range(levels):
        final = level == levels - 1
        entry = _load_cached(cache_dir, cache_key, base, level, with_condition and final)
        if entry is None:
            entry = _run_level(problem, base, level, with_condition and final)
            _store_cached(cache_dir, cache_key, base, level, entry)
        values.append(entry["du"])
        if final:
            cond = entry.get("cond", math.nan)
            residual = entry["res"]
            wu = entry["wu"]
    tail = [_sig_repr(v, sigfigs) for v in values[-3:]]
    converged = len(values) >= 3 and tail[0] == tail[1] == tail[2]
    return RefinementRun(tuple(values), converged, round_sig(values[-1], sigfigs),
                         cond, residual, wu, sigfigs)


def _run_level(problem: HelmholtzProblem, base: int, level: int,
               with_condition: bool) -> dict:
    mesh = fem.build_mesh(problem, base * 2**level)
    solution, system = fem.solve_problem(problem, mesh)
    du, wu, _energy = fem.norms(solution, problem, mesh)
    entry = {"du": float(du), "wu": float(wu), "res": solution.residual}
    if with_condition:
        entry["cond"] = fem.condition_estimate(system)
    return entry


def _cache_path(cache_dir, cache_key, base, level) -> Optional[Path]:
    if cache_dir is None or cache_key is None:
        return None
    return Path(cache_dir) / f"{cache_key}_base{base}_L{level}.json"


def _load_cached(cache_dir, cache_key, base, level, need_condition):
    path = _cache_path(cache_dir, cache_key, base, level)
    if path is None or not path.is_file():
        return None
    try:
        entry = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError):
        return None
    if need_condition and "cond" not in entry:
        return None
    return entry


def _store_cached(cache_dir, cache_key, base, level, entry):
    path = _cache_path(cache_dir, cache_key, base, level)
    if path is None:
        return
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".tmp")
    tmp.write_text(json.dumps(entry))
    os.replace(tmp, path)


@dataclass(frozen=True)
class TableRow:
    """One benchmark cell: identifiers, reported value, convergence flag, kappa."""

    m: int
    r: float
    eps: float
    g: tuple
    value: float
    asterisk: bool
    kappa: float
    run: RefinementRun


def _default_jobs() -> int:
    env = os.environ.get(JOBS_ENV_VAR)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


def _run_cell(args) -> TableRow:
    spec, base, levels, sigfigs, cache_dir = args
    run = refine_to_convergence(family(spec), base=base, levels=levels,
                                sigfigs=sigfigs, cache_dir=cache_dir,
                                cache_key=spec.cache_key())
    return TableRow(spec.m, spec.r, spec.eps, spec.g, run.reported,
                    not run.converged, run.condition_estimate, run)


def run_cells(specs: Sequence[UnstableFamilySpec], base: int = 800,
              levels: int = 7, sigfigs: int = 4,
              cache_dir: Optional[str] = None,
              jobs: Optional[int] = None) -> list:
    """Execute family cells (a work pool when jobs > 1); order follows specs."""
    jobs = _default_jobs() if jobs is None else max(1, jobs)
    payload = [(s, base, levels, sigfigs, cache_dir) for s in specs]
    if jobs == 1 or len(specs) <= 1:
        return [_run_cell(p) for p in payload]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_cell, payload))


def table1(r_list: Sequence[float] = (0.4, 0.5, 0.6),
           m_list: Sequence[int] = (2, 4, 6, 8, 10, 12), **kwargs) -> list:
    """Grid of ||u'|| and kappa over (m, r) with data g = (0, 1)."""
    specs = [UnstableFamilySpec(m, r) for m in m_list for r in r_list]
    return run_cells(specs, **kwargs)


def table2(m_list: Sequence[int] = (2, 4, 6, 8, 10, 12),
           r: float = 0.6,
           g_cases: Sequence[tuple] = ((1.0, 1.0), (2.0, 0.5)), **kwargs) -> list:
    """Data-sensitivity grid at fixed contrast: columns are boundary pairs."""
    specs = [UnstableFamilySpec(m, r, g=g) for m in m_list for g in g_cases]
    return run_cells(specs, **kwargs)


def table3(m_list: Sequence[int] = (6, 8, 10, 12, 14, 16, 18, 20),
           eps_list: Sequence[float] = (0.0, 1e-9, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4, 1e-3),
           r: float = 0.5, skip_unattempted: bool = True, **kwargs) -> list:
    """Perturbation-sensitivity grid at r = 0.5 with data g = (0, 1).

    Cells with m >= 14 and eps <= 1e-7 are marked "not attempted" by default
    (they sit beyond double precision); pass skip_unattempted=False to try
    them anyway.
    """
    specs = []
    for m in m_list:
        for eps in eps_list:
            if skip_unattempted and m >= 14 and eps <= 1e-7:
                specs.append(None)
            else:
                specs.append(UnstableFamilySpec(m, r, eps=eps))
    done = iter(run_cells([s for s in specs if s is not None], **kwargs))
    rows = []
    i = 0
    for m in m_list:
        for eps in eps_list:
            if specs[i] is None:
                rows.append(TableRow(m, r, eps, (0.0, 1.0), math.nan, False,
                                     math.nan, None))
            else:
                rows.append(next(done))
            i += 1
    return rows


def slope_fit(m_values: Sequence[float], u_prime_values: Sequence[float]) -> float:
    """Least-squares slope of (m, ln ||u'||)."""
    m_values = np.asarray(m_values, dtype=float)
    u = np.asarray(u_prime_values, dtype=float)
    if len(m_values) < 2:
        raise ValueError("need at least two points for a slope fit")
    if np.any(u <= 0.0):
        raise ValueError("norm values must be positive")
    return float(np.polyfit(m_values, np.log(u), 1)[0])


@dataclass(frozen=True)
class BoundComparisonRow:
    """Measured growth against the theoretical envelope for one m."""

    m: int
    ln_measured: float
    bound_closed_form: float   # 2m (1+r)^2/(1-r)^4 + ln(C_II (1+r)/(1-r))
    bound_variation: float     # from the variation-exponential bound on Q
    bound_exact_q: float       # from the exactly computed Q
    satisfied: bool


def bound_comparison(m_list: Sequence[int], r: float,
                     measured: Optional[Sequence[float]] = None) -> list:
    """Compare ln ||u'|| with the theoretical bounds for the family.

    With f = 0 and unit boundary data the energy bound gives
    ln ||u'|| <= ln(C_II sqrt(Q) ||g|| / sqrt(2)) for any valid Q.  The
    closed-form column is the explicit envelope 2m (1+r)^2 / (1-r)^4 +
    ln(C_II (1+r)/(1-r)); the other columns use the variation bound and the
    exact Q.  `measured` defaults to the analytic reference values.
    """
    rows = []
    c2 = 2.0 * math.sqrt(1.5 * (1.0 + r) / (1.0 - r) + 1.0)
    for i, m in enumerate(m_list):
        spec = UnstableFamilySpec(m, r)
        problem = family(spec)
        if measured is not None:
            du = float(measured[i])
        else:
            du = oracle.exact_norms(oracle.solve_analytic(problem))[0]
        g_norm = problem.boundary_norm()
        closed = (2.0 * m * (1.0 + r) ** 2 / (1.0 - r) ** 4
                  + math.log(c2 * (1.0 + r) / (1.0 - r)))
        qb = stability.q_bound(problem.a, problem.c, problem.bc)
        qe = stability.q_sup(stability.build_q(problem.a, problem.c), problem.bc)
        b_var = math.log(c2 * math.sqrt(qb) * g_norm / math.sqrt(2.0)) \
            if math.isfinite(qb) else math.inf
        b_exact = math.log(c2 * math.sqrt(qe) * g_norm / math.sqrt(2.0))
        ln_du = math.log(du)
        rows.append(BoundComparisonRow(
            m, ln_du, closed, b_var, b_exact,
            ln_du <= min(closed, b_var, b_exact) + 1e-9))
    return rows


# -- errors against the analytic reference ------------------------------------

@dataclass(frozen=True)
class QuasiOptimalityProbe:
    """Per-level Galerkin and interpolation errors in the weighted norm."""

    levels: tuple
    energy_errors: tuple
    interp_errors: tuple
    nodal_l2_errors: tuple

    @property
    def ratios(self) -> tuple:
        """Galerkin error over best-interpolation error, level by level."""
        return tuple(e / i for e, i in zip(self.energy_errors, self.interp_errors))


def quasiopt_probe(problem: HelmholtzProblem, levels: int = 7,
                   base: int = 800) -> QuasiOptimalityProbe:
    """Energy errors of the FEM and of nodal interpolation on one ladder.

    Needs the analytic reference, hence piecewise-constant coefficients with
    zero source.  The ratio ladder stabilises below the quasi-optimality
    factor once the resolution condition holds, and approaches 1 for easy
    problems.
    """
    amps = oracle.solve_analytic(problem)
    energy_fem = []
    energy_interp = []
    nodal = []
    lv = []
    for level in range(levels):
        mesh = fem.build_mesh(problem, base * 2**level)
        solution, _system = fem.solve_problem(problem, mesh)
        u_h = solution.values
        u_nodes = amps.eval(mesh.nodes)
        energy_fem.append(_energy_error(problem, mesh, amps, u_h))
        energy_interp.append(_energy_error(problem, mesh, amps, u_nodes))
        nodal.append(_nodal_l2_error(mesh, u_nodes, u_h))
        lv.append(level)
    return QuasiOptimalityProbe(tuple(lv), tuple(energy_fem),
                                tuple(energy_interp), tuple(nodal))


def _energy_error(problem: HelmholtzProblem, mesh: fem.Mesh1D,
                  amps: oracle.WaveAmplitudes, nodal_values: np.ndarray) -> float:
    """Weighted-norm distance between the analytic solution and a P1 function.

    5-point Gauss per element; the meshes resolve the waves far below a
    wavelength, so the quadrature error is negligible against the error
    being measured.
    """
    nodes = mesh.nodes
    h = mesh.widths
    xl = nodes[:-1]
    mid = 0.5 * (nodes[:-1] + nodes[1:])
    a_e = problem.a.values(mid)
    c_e = problem.c.values(mid)
    om = problem.omega

    xg = xl[:, None] + h[:, None] * _G5_T[None, :]
    wg = h[:, None] * _G5_W[None, :]
    u_ex = amps.eval(xg.ravel()).reshape(xg.shape)
    du_ex = amps.deriv(xg.ravel()).reshape(xg.shape)
    ul = nodal_values[:-1][:, None]
    ur = nodal_values[1:][:, None]
    u_h = ul * (1.0 - _G5_T)[None, :] + ur * _G5_T[None, :]
    du_h = (ur - ul) / h[:, None]
    err2 = np.sum(a_e[:, None] * wg * np.abs(du_ex - du_h) ** 2) \
        + np.sum((om / c_e[:, None]) ** 2 * wg * np.abs(u_ex - u_h) ** 2)
    return float(np.sqrt(err2))


def _nodal_l2_error(mesh: fem.Mesh1D, u_exact_nodes: np.ndarray,
                    u_h: np.ndarray) -> float:
    """Trapezoid-weighted l2 distance between nodal values."""
    w = np.zeros(mesh.n_nodes)
    w[:-1] += 0.5 * mesh.widths
    w[1:] += 0.5 * mesh.widths
    return float(np.sqrt(np.sum(w * np.abs(u_exact_nodes - u_h) ** 2)))
