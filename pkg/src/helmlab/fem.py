"""Conforming P1 finite elements for the 1D heterogeneous problem.

Element integrals are exact for piecewise-constant and piecewise-linear
coefficients (5-point Gauss for smooth data and sources); the complex
symmetric tridiagonal system is solved by banded LU with partial pivoting,
and conditioning is estimated by a Hager-style 1-norm iteration on the
factors.  Condition numbers in the instability studies reach 1e17, which is
why plain pivot-free recursions are not used here.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.linalg import lapack

from .coeffs import Constant, Linear, _seg_values
from .problem import BoundaryConfig, HelmholtzProblem

_G5_T, _G5_W = np.polynomial.legendre.leggauss(5)
_G5_T = 0.5 * (_G5_T + 1.0)  # nodes on [0, 1]
_G5_W = 0.5 * _G5_W


class MeshAlignmentError(ValueError):
    """Mesh nodes do not contain every coefficient breakpoint."""


class SingularSystemError(RuntimeError):
    """LU factorization hit a numerically singular pivot."""

    def __init__(self, msg: str, pivot_index: int):
        super().__init__(msg)
        self.pivot_index = pivot_index


@dataclass(frozen=True)
class Mesh1D:
    """Nodes on [-L, L] including every coefficient breakpoint."""

    nodes: np.ndarray
    partition: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        object.__setattr__(self, "nodes", nodes)
        if not np.all(np.diff(nodes) > 0.0):
            raise ValueError("mesh nodes must be strictly increasing")

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.nodes)


def build_mesh(problem: HelmholtzProblem, elems_per_subinterval: int) -> Mesh1D:
    """Uniform subdivision of every coefficient subinterval."""
    if elems_per_subinterval < 1:
        raise ValueError("element count per subinterval must be >= 1")
    part = problem.partition
    pieces = [np.linspace(part[i], part[i + 1], elems_per_subinterval + 1)[:-1]
              for i in range(len(part) - 1)]
    nodes = np.concatenate(pieces + [part[-1:]])
    return Mesh1D(nodes, part)


@dataclass
class BandedComplexSystem:
    """Complex symmetric tridiagonal system over the free (non-Dirichlet) nodes.

    `lower` and `upper` are assembled independently and are equal exactly;
    they are kept separate so the symmetry of the assembly is observable.
    Factorization state is single-owner and cached after the first solve.
    """

    diag: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    rhs: np.ndarray
    dirichlet_left: bool
    dirichlet_right: bool
    _factors: Optional[tuple] = field(default=None, repr=False)

    @property
    def dimension(self) -> int:
        return len(self.diag)

    def factorize(self):
        if self._factors is None:
            if self.dimension <= 2:
                # the tridiagonal LAPACK wrapper needs n >= 3; fall back to
                # a dense matrix for these degenerate sizes
                dense = np.diag(self.diag)
                if self.dimension == 2:
                    dense[1, 0] = self.lower[0]
                    dense[0, 1] = self.upper[0]
                if np.linalg.matrix_rank(dense) < self.dimension:
                    raise SingularSystemError("singular small system", 0)
                self._factors = ("dense", dense)
                return self._factors
            dl, d, du, du2, ipiv, info = lapack.zgttrf(self.lower, self.diag,
                                                       self.upper)
            if info != 0:
                raise SingularSystemError(
                    f"zero pivot at row {info - 1} during banded LU", info - 1)
            self._factors = (dl, d, du, du2, ipiv)
        return self._factors

    def solve_vector(self, b: np.ndarray, trans: str = "N") -> np.ndarray:
        fact = self.factorize()
        if isinstance(fact[0], str):  # dense fallback for n <= 2
            dense = fact[1]
            if trans == "T":
                dense = dense.T
            elif trans == "C":
                dense = dense.conj().T
            return np.linalg.solve(dense, b)
        dl, d, du, du2, ipiv = fact
        x, info = lapack.zgttrs(dl, d, du, du2, ipiv,
                                b.reshape(-1, 1), trans=trans)
        if info != 0:
            raise SingularSystemError(f"banded solve failed (info={info})", info)
        return x.ravel()

    def matvec(self, x: np.ndarray) -> np.ndarray:
        y = self.diag * x
        if self.dimension > 1:
            y[:-1] += self.upper * x[1:]
            y[1:] += self.lower * x[:-1]
        return y

    def norm1(self) -> float:
        col = np.abs(self.diag).copy()
        if self.dimension > 1:
            col[1:] += np.abs(self.upper)
            col[:-1] += np.abs(self.lower)
        return float(col.max())


@dataclass(frozen=True)
class FemSolution:
    """Complex nodal values on the full mesh plus the solver residual."""

    values: np.ndarray
    residual: float


def _element_data(problem: HelmholtzProblem, mesh: Mesh1D):
    """Per-element averaged a and the three 1/c^2 mass integrals.

    Returns (a_mean, p00, p01, p11) with p_ij = int_0^1 phi_i phi_j / c^2 dt
    on the unit element.  Exact for constant/linear segments, 5-point Gauss
    otherwise.
    """
    nodes = mesh.nodes
    part = problem.partition
    # every breakpoint must be a mesh node
    pos = np.searchsorted(nodes, part)
    tol = 1e-12 * (abs(nodes[-1] - nodes[0]) + 1.0)
    if np.any(pos >= len(nodes)) or np.any(np.abs(nodes[np.clip(pos, 0, len(nodes) - 1)] - part) > tol):
        raise MeshAlignmentError("mesh must contain every coefficient breakpoint")

    xl, xr = nodes[:-1], nodes[1:]
    h = xr - xl
    mid = 0.5 * (xl + xr)
    seg = np.clip(np.searchsorted(part, mid) - 1, 0, problem.a.n_segments - 1)

    a_mean = np.empty(len(h))
    p00 = np.empty(len(h))
    p01 = np.empty(len(h))
    p11 = np.empty(len(h))
    for j in np.unique(seg):
        mask = seg == j
        x0, x1 = part[j], part[j + 1]
        aseg = problem.a.segments[j]
        cseg = problem.c.segments[j]

        if isinstance(aseg, Constant):
            a_mean[mask] = aseg.value
        elif isinstance(aseg, Linear):
            al = _seg_values(aseg, x0, x1, xl[mask])
            ar = _seg_values(aseg, x0, x1, xr[mask])
            a_mean[mask] = 0.5 * (al + ar)
        else:
            xg = xl[mask][:, None] + h[mask][:, None] * _G5_T[None, :]
            a_mean[mask] = _seg_values(aseg, x0, x1, xg.ravel()).reshape(
                xg.shape) @ _G5_W

        if isinstance(cseg, Constant):
            inv = 1.0 / cseg.value ** 2
            p00[mask] = inv / 3.0
            p01[mask] = inv / 6.0
            p11[mask] = inv / 3.0
        elif isinstance(cseg, Linear):
            cl = _seg_values(cseg, x0, x1, xl[mask])
            cr = _seg_values(cseg, x0, x1, xr[mask])
            j0, j1, j2 = _linear_mass_integrals(cl, cr)
            p00[mask] = j0 - 2.0 * j1 + j2
            p01[mask] = j1 - j2
            p11[mask] = j2
        else:
            xg = xl[mask][:, None] + h[mask][:, None] * _G5_T[None, :]
            inv = 1.0 / _seg_values(cseg, x0, x1, xg.ravel()).reshape(xg.shape) ** 2
            p00[mask] = (inv * (1.0 - _G5_T) ** 2) @ _G5_W
            p01[mask] = (inv * _G5_T * (1.0 - _G5_T)) @ _G5_W
            p11[mask] = (inv * _G5_T**2) @ _G5_W
    return a_mean, p00, p01, p11


def _linear_mass_integrals(cl: np.ndarray, cr: np.ndarray):
    """J_k = int_0^1 t^k / (cl + (cr-cl) t)^2 dt, exactly, k = 0, 1, 2.

    Near-constant elements switch to the constant-value limit to avoid the
    cancellation in the log formulas.
    """
    d = cr - cl
    small = np.abs(d) <= 1e-8 * np.abs(cl)
    d_safe = np.where(small, 1.0, d)
    log_ratio = np.log(np.where(small, 1.0, cr / cl))
    j0 = 1.0 / (cl * cr)
    j1 = np.where(small, 1.0 / (2.0 * cl**2),
                  (log_ratio + cl / cr - 1.0) / d_safe**2)
    j2 = np.where(small, 1.0 / (3.0 * cl**2),
                  (d_safe - 2.0 * cl * log_ratio - cl**2 / cr + cl) / d_safe**3)
    return j0, j1, j2


def assemble(problem: HelmholtzProblem, mesh: Mesh1D) -> BandedComplexSystem:
    """Assemble stiffness, weighted mass, impedance and source terms.

    The matrix realizes  int a u' v' - omega^2 int u v / c^2
    - i omega (sqrt(a)/c) u v  at impedance endpoints; a Dirichlet endpoint
    is eliminated symmetrically (homogeneous data, so the load is untouched).
    """
    a_mean, p00, p01, p11 = _element_data(problem, mesh)
    h = mesh.widths
    om = problem.omega
    n = mesh.n_nodes

    kdiag = a_mean / h
    diag = np.zeros(n, dtype=complex)
    diag[:-1] += kdiag - om**2 * h * p00
    diag[1:] += kdiag - om**2 * h * p11
    lower = (-kdiag - om**2 * h * p01).astype(complex)
    upper = (-kdiag - om**2 * h * p01).astype(complex)

    rhs = np.zeros(n, dtype=complex)
    if problem.f is not None:
        xg = mesh.nodes[:-1, None] + h[:, None] * _G5_T[None, :]
        fg = np.asarray(problem.f(xg.ravel()), dtype=complex).reshape(xg.shape)
        rhs[:-1] += h * ((fg * (1.0 - _G5_T)) @ _G5_W)
        rhs[1:] += h * ((fg * _G5_T) @ _G5_W)

    if problem.bc.impedance_left:
        diag[0] -= 1j * om * problem.beta_left
        rhs[0] += problem.g_left
    if problem.bc.impedance_right:
        diag[-1] -= 1j * om * problem.beta_right
        rhs[-1] += problem.g_right

    lo = 0 if problem.bc.impedance_left else 1
    hi = n if problem.bc.impedance_right else n - 1
    return BandedComplexSystem(
        diag=diag[lo:hi], lower=lower[lo:hi - 1], upper=upper[lo:hi - 1],
        rhs=rhs[lo:hi],
        dirichlet_left=not problem.bc.impedance_left,
        dirichlet_right=not problem.bc.impedance_right)


def solve(system: BandedComplexSystem) -> FemSolution:
    """Banded LU solve; the relative max-norm residual is always reported."""
    x = system.solve_vector(system.rhs)
    b_inf = np.linalg.norm(system.rhs, np.inf)
    if b_inf == 0.0:
        residual = 0.0
    else:
        residual = float(np.linalg.norm(system.matvec(x) - system.rhs, np.inf)
                         / b_inf)
    pad_l = [0.0] if system.dirichlet_left else []
    pad_r = [0.0] if system.dirichlet_right else []
    values = np.concatenate([pad_l, x, pad_r])
    return FemSolution(values=values, residual=residual)


def norms(solution: FemSolution, problem: HelmholtzProblem, mesh: Mesh1D):
    """(||u_h'||, ||(omega/c) u_h||, energy) with exact element integration.

    The P1 derivative is piecewise constant, so ||u_h'|| is exact; the
    weighted L2 term reuses the exact (or Gauss) element mass integrals; the
    energy combines the a-weighted derivative with the weighted L2 part.
    """
    u = solution.values
    h = mesh.widths
    ul, ur = u[:-1], u[1:]
    a_mean, p00, p01, p11 = _element_data(problem, mesh)
    om = problem.omega
    slope2 = np.abs(ur - ul) ** 2 / h
    du2 = float(np.sum(slope2))
    wu2 = float(om**2 * np.sum(h * (np.abs(ul) ** 2 * p00
                                    + 2.0 * (ul * np.conj(ur)).real * p01
                                    + np.abs(ur) ** 2 * p11)))
    energy2 = float(np.sum(a_mean * slope2)) + wu2
    return np.sqrt(du2), np.sqrt(wu2), np.sqrt(energy2)


def condition_estimate(system: BandedComplexSystem, itmax: int = 5) -> float:
    """1-norm condition estimate from the LU factors (Hager-style iteration)."""
    n = system.dimension
    if n == 1:
        return 1.0
    x = np.full(n, 1.0 / n, dtype=complex)
    est = 0.0
    for _ in range(itmax):
        y = system.solve_vector(x)
        est_new = float(np.abs(y).sum())
        mags = np.abs(y)
        xi = np.where(mags == 0.0, 1.0 + 0.0j, y / np.where(mags == 0.0, 1.0, mags))
        z = system.solve_vector(xi, trans="C")
        j = int(np.argmax(np.abs(z)))
        if est_new <= est or np.abs(z[j]) <= (z.conj() @ x).real + 1e-300:
            est = max(est, est_new)
            break
        est = est_new
        x = np.zeros(n, dtype=complex)
        x[j] = 1.0
    return system.norm1() * est


def solve_problem(problem: HelmholtzProblem, mesh: Mesh1D):
    """Assemble and solve; returns (solution, system) for further queries."""
    system = assemble(problem, mesh)
    return solve(system), system
