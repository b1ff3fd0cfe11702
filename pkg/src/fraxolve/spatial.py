"""Tensor-product finite differences for the elliptic operator

    L v = -sum_k d/dx_k (a_k dv/dx_k) + sum_k b_k dv/dx_k + c v

on (0, X)^d, d in {1, 2}: second differences with midpoint-sampled a_k,
centered first differences for b_k, Dirichlet/periodic/Robin faces.
Under the mesh-Peclet condition the assembled matrix is an M-matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp

__all__ = [
    "Grid",
    "CoefficientField",
    "BoundaryCondition",
    "BoundarySpec",
    "DiscreteOperator",
    "assemble",
    "check_max_principle",
    "m_matrix_report",
    "MaxPrincipleReport",
]

_FACE_NAMES = {1: ("x-", "x+"), 2: ("x-", "x+", "y-", "y+")}


@dataclass(frozen=True)
class Grid:
    """Uniform tensor grid on (0, X)^d with N intervals per direction."""

    d: int
    N: int
    X: float

    def __post_init__(self):
        if self.d not in (1, 2):
            raise ValueError("only d in {1, 2} is supported")
        if self.N < 2:
            raise ValueError("N must be >= 2")
        if not self.X > 0:
            raise ValueError("domain edge length must be positive")

    @property
    def h(self) -> float:
        return self.X / self.N

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.N + 1,) * self.d

    @property
    def n_nodes(self) -> int:
        return (self.N + 1) ** self.d

    def points(self) -> np.ndarray:
        """All node coordinates, shape (n_nodes, d), C-order flattening."""
        axes = [np.linspace(0.0, self.X, self.N + 1)] * self.d
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def multi_indices(self) -> np.ndarray:
        idx = np.indices(self.shape).reshape(self.d, -1).T
        return idx


@dataclass(frozen=True)
class CoefficientField:
    """Coefficients of L; entries are floats or callables (points, t) -> array.

    ``a`` must be positive; ``c`` nonnegative (and identically zero when the
    invariant-range guarantee is claimed).
    """

    a: tuple
    b: Optional[tuple] = None
    c: object = None
    time_dependent: bool = False

    def validate(self, d: int):
        if len(self.a) != d:
            raise ValueError(f"need {d} diffusion coefficients")
        if self.b is not None and len(self.b) != d:
            raise ValueError(f"need {d} convection coefficients")

    @property
    def has_convection(self) -> bool:
        return self.b is not None and any(
            callable(bk) or float(bk) != 0.0 for bk in self.b
        )


def _eval_coef(coef, pts: np.ndarray, t: float) -> np.ndarray:
    if callable(coef):
        return np.broadcast_to(np.asarray(coef(pts, t), dtype=float), (pts.shape[0],)).copy()
    return np.full(pts.shape[0], float(coef))


@dataclass(frozen=True)
class BoundaryCondition:
    kind: str  # 'dirichlet' | 'periodic' | 'robin'
    value: object = None  # phi(x,t) for dirichlet, mu(x,t) >= 0 for robin

    def __post_init__(self):
        if self.kind not in ("dirichlet", "periodic", "robin"):
            raise ValueError(f"unknown boundary kind {self.kind!r}")
        if self.kind == "robin" and self.value is None:
            object.__setattr__(self, "value", 0.0)


class BoundarySpec:
    """Per-face boundary conditions; periodic faces must come in opposite pairs."""

    def __init__(self, faces: dict[str, BoundaryCondition], d: int):
        names = _FACE_NAMES[d]
        unknown = set(faces) - set(names)
        if unknown:
            raise ValueError(f"unknown faces {sorted(unknown)} for d = {d}")
        missing = set(names) - set(faces)
        if missing:
            raise ValueError(f"missing boundary spec for faces {sorted(missing)}")
        for axis in range(d):
            lo, hi = faces[names[2 * axis]], faces[names[2 * axis + 1]]
            if (lo.kind == "periodic") != (hi.kind == "periodic"):
                raise ValueError(f"periodic faces must pair up on axis {axis}")
        self.faces = dict(faces)
        self.d = d

    @classmethod
    def dirichlet0(cls, d: int) -> "BoundarySpec":
        return cls({n: BoundaryCondition("dirichlet", 0.0) for n in _FACE_NAMES[d]}, d)

    @classmethod
    def all_periodic(cls, d: int) -> "BoundarySpec":
        return cls({n: BoundaryCondition("periodic") for n in _FACE_NAMES[d]}, d)

    def face(self, axis: int, side: int) -> BoundaryCondition:
        return self.faces[_FACE_NAMES[self.d][2 * axis + (1 if side > 0 else 0)]]

    def axis_periodic(self, axis: int) -> bool:
        return self.face(axis, -1).kind == "periodic"


@dataclass
class DiscreteOperator:
    """Action of L_h at a fixed time over unknown nodes, with Dirichlet coupling.

    full field = values at all (N+1)^d nodes; ``matrix`` acts on the unknown
    subvector, ``dirichlet_coupling`` on the Dirichlet-node subvector.
    """

    grid: Grid
    bc: BoundarySpec
    t: float
    matrix: sp.csr_matrix
    dirichlet_coupling: sp.csr_matrix
    unknown_flat: np.ndarray
    dirichlet_flat: np.ndarray
    duplicate_flat: np.ndarray  # high-end nodes of periodic axes
    duplicate_partner: np.ndarray
    _dirichlet_face: list = field(default_factory=list, repr=False)

    @property
    def n_unknown(self) -> int:
        return self.unknown_flat.size

    def dirichlet_values(self, t: float | None = None) -> np.ndarray:
        t = self.t if t is None else t
        vals = np.zeros(self.dirichlet_flat.size)
        if not vals.size:
            return vals
        pts = self.grid.points()[self.dirichlet_flat]
        face_of = np.asarray(self._dirichlet_face)
        for k in np.unique(face_of):
            phi = self.bc.faces[_FACE_NAMES[self.grid.d][k]].value
            sel = face_of == k
            if callable(phi):
                vals[sel] = np.asarray(phi(pts[sel], t), dtype=float)
            else:
                vals[sel] = float(phi if phi is not None else 0.0)
        return vals

    def data_vector(self, t: float | None = None) -> np.ndarray:
        """Dirichlet-data contribution to the operator action at unknown nodes."""
        if self.dirichlet_flat.size == 0:
            return np.zeros(self.n_unknown)
        return self.dirichlet_coupling @ self.dirichlet_values(t)

    def scatter(self, u: np.ndarray, t: float | None = None) -> np.ndarray:
        """Unknown-node values -> full nodal field (Dirichlet data filled in)."""
        out = np.zeros(self.grid.n_nodes)
        out[self.unknown_flat] = u
        if self.dirichlet_flat.size:
            out[self.dirichlet_flat] = self.dirichlet_values(t)
        if self.duplicate_flat.size:
            out[self.duplicate_flat] = out[self.duplicate_partner]
        return out

    def apply(self, field_values: np.ndarray) -> np.ndarray:
        """L_h acting on a full nodal field; zero at non-unknown positions."""
        f = np.asarray(field_values, dtype=float).ravel()
        if f.size != self.grid.n_nodes:
            raise ValueError("field shape does not match grid")
        act = self.matrix @ f[self.unknown_flat]
        if self.dirichlet_flat.size:
            act = act + self.dirichlet_coupling @ f[self.dirichlet_flat]
        out = np.zeros(self.grid.n_nodes)
        out[self.unknown_flat] = act
        return out.reshape(np.asarray(field_values).shape)


def _classify(grid: Grid, bc: BoundarySpec):
    """Roles: 0 = unknown, 1 = dirichlet, 2 = periodic duplicate (idx N -> 0)."""
    idx = grid.multi_indices()
    N = grid.N
    role = np.zeros(grid.n_nodes, dtype=np.int8)
    dirichlet_face = np.full(grid.n_nodes, -1, dtype=np.int64)
    # periodic duplicates first, Dirichlet wins at shared corners
    for axis in range(grid.d):
        if bc.axis_periodic(axis):
            role[idx[:, axis] == N] = 2
    for axis in range(grid.d):
        for side, iv in ((-1, 0), (1, N)):
            face_bc = bc.face(axis, side)
            if face_bc.kind == "dirichlet":
                on = idx[:, axis] == iv
                newly = on & (dirichlet_face < 0)
                role[on] = 1
                dirichlet_face[newly] = 2 * axis + (1 if side > 0 else 0)
    return idx, role, dirichlet_face


def assemble(
    grid: Grid, coeffs: CoefficientField, t: float, bc: BoundarySpec
) -> DiscreteOperator:
    """Assemble L_h at time t (compressed sparse row)."""
    coeffs.validate(grid.d)
    h = grid.h
    N = grid.N
    idx, role, dirichlet_face = _classify(grid, bc)
    pts = grid.points()

    unknown_flat = np.nonzero(role == 0)[0]
    dirichlet_flat = np.nonzero(role == 1)[0]
    duplicate_flat = np.nonzero(role == 2)[0]
    unk_id = np.full(grid.n_nodes, -1, dtype=np.int64)
    unk_id[unknown_flat] = np.arange(unknown_flat.size)
    dir_id = np.full(grid.n_nodes, -1, dtype=np.int64)
    dir_id[dirichlet_flat] = np.arange(dirichlet_flat.size)

    # canonical partner for periodic duplicates
    dup_multi = idx[duplicate_flat].copy()
    for axis in range(grid.d):
        if bc.axis_periodic(axis):
            dup_multi[dup_multi[:, axis] == N, axis] = 0
    duplicate_partner = (
        np.ravel_multi_index(dup_multi.T, grid.shape)
        if duplicate_flat.size
        else np.empty(0, dtype=np.int64)
    )

    uidx = idx[unknown_flat]
    upts = pts[unknown_flat]
    rows_A, cols_A, vals_A = [], [], []
    rows_B, cols_B, vals_B = [], [], []
    n_unk = unknown_flat.size
    diag = np.zeros(n_unk)
    if coeffs.c is not None:
        diag += _eval_coef(coeffs.c, upts, t)

    def add_entries(rows, target_flat, w):
        """Route coefficients w (at rows) to unknown/Dirichlet columns."""
        tgt = target_flat.copy()
        # canonicalize periodic duplicates among targets
        is_dup = role[tgt] == 2
        if np.any(is_dup):
            tmulti = idx[tgt[is_dup]].copy()
            for axis in range(grid.d):
                if bc.axis_periodic(axis):
                    tmulti[tmulti[:, axis] == N, axis] = 0
            tgt[is_dup] = np.ravel_multi_index(tmulti.T, grid.shape)
        to_dir = role[tgt] == 1
        to_unk = ~to_dir
        if np.any(to_unk):
            rows_A.append(rows[to_unk])
            cols_A.append(unk_id[tgt[to_unk]])
            vals_A.append(w[to_unk])
        if np.any(to_dir):
            rows_B.append(rows[to_dir])
            cols_B.append(dir_id[tgt[to_dir]])
            vals_B.append(w[to_dir])

    all_rows = np.arange(n_unk)
    for axis in range(grid.d):
        ek = np.zeros(grid.d)
        ek[axis] = 0.5 * h
        ap = _eval_coef(coeffs.a[axis], upts + ek, t)
        am = _eval_coef(coeffs.a[axis], upts - ek, t)
        bk = (
            _eval_coef(coeffs.b[axis], upts, t)
            if coeffs.b is not None
            else np.zeros(n_unk)
        )
        diag += (ap + am) / h**2
        w_p = -ap / h**2 + bk / (2.0 * h)  # coefficient of V(z + h e_k)
        w_m = -am / h**2 - bk / (2.0 * h)  # coefficient of V(z - h e_k)

        periodic = bc.axis_periodic(axis)
        for side, w_side in ((1, w_p), (-1, w_m)):
            nb = uidx.copy()
            nb[:, axis] += side
            if periodic:
                nb[:, axis] %= N
                ghost = np.zeros(n_unk, dtype=bool)
            else:
                ghost = (nb[:, axis] < 0) | (nb[:, axis] > N)
            ok = ~ghost
            if np.any(ok):
                tgt = np.ravel_multi_index(nb[ok].T, grid.shape)
                add_entries(all_rows[ok], tgt, w_side[ok])
            if np.any(ghost):
                face_bc = bc.face(axis, side)
                if face_bc.kind != "robin":
                    raise AssertionError("ghost neighbor at a non-Robin face")
                mu = _eval_coef(face_bc.value, upts[ghost], t)
                opp = uidx[ghost].copy()
                opp[:, axis] -= side  # reflect to the inner neighbor
                tgt = np.ravel_multi_index(opp.T, grid.shape)
                add_entries(all_rows[ghost], tgt, w_side[ghost])
                # ghost value V(z +/- h e_k) = V(z -/+ h e_k) - 2 h mu V(z)
                diag[all_rows[ghost]] += -2.0 * h * mu * w_side[ghost]

    rows_A.append(all_rows)
    cols_A.append(all_rows)
    vals_A.append(diag)
    A = sp.csr_matrix(
        (np.concatenate(vals_A), (np.concatenate(rows_A), np.concatenate(cols_A))),
        shape=(n_unk, n_unk),
    )
    if dirichlet_flat.size and rows_B:
        B = sp.csr_matrix(
            (np.concatenate(vals_B), (np.concatenate(rows_B), np.concatenate(cols_B))),
            shape=(n_unk, dirichlet_flat.size),
        )
    else:
        B = sp.csr_matrix((n_unk, dirichlet_flat.size))
    dir_faces = dirichlet_face[dirichlet_flat]
    return DiscreteOperator(
        grid=grid,
        bc=bc,
        t=t,
        matrix=A,
        dirichlet_coupling=B,
        unknown_flat=unknown_flat,
        dirichlet_flat=dirichlet_flat,
        duplicate_flat=duplicate_flat,
        duplicate_partner=duplicate_partner,
        _dirichlet_face=dir_faces,
    )


@dataclass(frozen=True)
class MaxPrincipleReport:
    passed: bool
    required_h: float
    h: float


def check_max_principle(
    grid: Grid, coeffs: CoefficientField, t_samples=(0.0, 0.5, 1.0)
) -> MaxPrincipleReport:
    """Mesh-Peclet condition 1/h >= max_k (1/2) sup|b_k| sup(1/a_k)."""
    coeffs.validate(grid.d)
    pts = grid.points()
    bound = 0.0
    for t in t_samples:
        for axis in range(grid.d):
            a = _eval_coef(coeffs.a[axis], pts, t)
            if np.any(a <= 0):
                raise ValueError("diffusion coefficient must be positive")
            b = (
                _eval_coef(coeffs.b[axis], pts, t)
                if coeffs.b is not None
                else np.zeros(1)
            )
            bound = max(bound, 0.5 * float(np.max(np.abs(b))) * float(np.max(1.0 / a)))
    required_h = np.inf if bound == 0.0 else 1.0 / bound
    return MaxPrincipleReport(passed=1.0 / grid.h >= bound, required_h=required_h, h=grid.h)


def m_matrix_report(A: sp.spmatrix) -> dict:
    """Sign-pattern check: positive diagonal, nonpositive off-diagonal."""
    coo = A.tocoo()
    off = coo.row != coo.col
    dg = A.diagonal()
    return {
        "diag_positive": bool(np.all(dg > 0)),
        "offdiag_nonpositive": bool(np.all(coo.data[off] <= 1e-14)),
        "max_offdiag": float(coo.data[off].max()) if off.any() else 0.0,
        "min_diag": float(dg.min()),
    }
