"""Discretized divergence-form operators on boxes, semigroup propagation, experiments.

The operator -div(A grad .) with mixed Dirichlet/Neumann boundary conditions
is discretized with P1 simplicial elements on the Kuhn (Freudenthal)
triangulation of the grid cells, one coefficient sample per cell.  Per-simplex
gradients are constant, so every pointwise ellipticity statement transfers to
the assembled sesquilinear form cell-exactly:

    Re a_h(u,u) >= lambda * a_I(u,u),     |arg a_h(u,u)| <= omega,

where a_I is the identity-coefficient form and lambda/omega are the field
aggregates.  L^q norms use the lumped (diagonal) quadrature weights, which is
the only choice consistent with nodewise nonlinear operations.

Discrete contractivity in L^p (p != 2) is a refinement trend, not an exact
property: discretizations may overshoot by O(h).  The L^2 contraction of the
exponential scheme is exact (the mass-scaled generator is accretive in the
weighted inner product).
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field as dc_field

import numpy as np
import scipy.sparse
import scipy.sparse.linalg

from . import ranges
from .field import BoundarySpec, CoefficientField, DegenerateFieldError, field_digest
from .oracle import dense_expm

__all__ = [
    "Mesh",
    "DiscreteOperator",
    "GridFunction",
    "SemigroupRun",
    "assemble",
    "lp_norm",
    "propagate",
    "contractivity_experiment",
    "sector_check",
    "dissipativity_check",
    "offdiagonal_experiment",
    "ultracontractivity_experiment",
    "save_snapshots",
    "load_snapshots",
]


# ---------------------------------------------------------------------------
# mesh and assembly


@dataclass
class Mesh:
    """Node grid plus the Kuhn simplicial decomposition of each cell.

    ``perm_grads[k]`` is the d x (d+1) matrix of P1 vertex-basis gradients on
    the k-th reference simplex; ``perm_offsets[k]`` are the flat node-index
    offsets of its d+1 vertices relative to the cell's low corner.  Every cell
    is congruent, so these tables are shared.
    """

    dim: int
    shape_cells: tuple
    spacing: tuple
    node_shape: tuple
    coords: np.ndarray
    perm_grads: list
    perm_offsets: list
    simplex_volume: float

    @property
    def n_nodes(self) -> int:
        return int(np.prod(self.node_shape))

    def cell_corner_flat(self) -> np.ndarray:
        """Flat node index of the low corner of each cell, row-major cell order."""
        strides = _node_strides(self.node_shape)
        idx = np.array(list(np.ndindex(*self.shape_cells)))
        return idx @ strides

    def simplex_gradients(self, u: np.ndarray):
        """Yield (cell_flat, simplex_index, Z) with Z = grad(u) on that simplex."""
        base = self.cell_corner_flat()
        for k, (G, off) in enumerate(zip(self.perm_grads, self.perm_offsets)):
            nodes = base[:, None] + off[None, :]
            vals = u[nodes]                      # (n_cells, d+1)
            Z = vals @ G.T                       # (n_cells, d)
            for c in range(base.size):
                yield c, k, Z[c]


def _node_strides(node_shape):
    strides = np.ones(len(node_shape), dtype=int)
    for a in range(len(node_shape) - 2, -1, -1):
        strides[a] = strides[a + 1] * node_shape[a + 1]
    return strides


def _build_mesh(shape_cells, spacing) -> Mesh:
    d = len(shape_cells)
    node_shape = tuple(n + 1 for n in shape_cells)
    strides = _node_strides(node_shape)
    axes = [np.arange(n + 1) * h for n, h in zip(shape_cells, spacing)]
    grids = np.meshgrid(*axes, indexing="ij")
    coords = np.stack([g.ravel() for g in grids], axis=1)

    perm_grads, perm_offsets = [], []
    for perm in itertools.permutations(range(d)):
        corners = np.zeros((d + 1, d))
        for k, axis in enumerate(perm):
            corners[k + 1] = corners[k]
            corners[k + 1, axis] += spacing[axis]
        E = (corners[1:] - corners[0]).T          # columns x_j - x_0
        Einv_T = np.linalg.inv(E).T
        G = np.zeros((d, d + 1))
        G[:, 1:] = Einv_T
        G[:, 0] = -Einv_T.sum(axis=1)
        offs = np.array([
            int(np.round(corners[j] / spacing) @ strides) for j in range(d + 1)
        ])
        perm_grads.append(G)
        perm_offsets.append(offs)

    vol = float(np.prod(spacing)) / math.factorial(d)
    return Mesh(dim=d, shape_cells=tuple(shape_cells), spacing=tuple(spacing),
                node_shape=node_shape, coords=coords, perm_grads=perm_grads,
                perm_offsets=perm_offsets, simplex_volume=vol)


def _dirichlet_mask(mesh: Mesh, bc: BoundarySpec) -> np.ndarray:
    mask = np.zeros(mesh.node_shape, dtype=bool)
    for axis in range(mesh.dim):
        if bc.kind(axis, "low") == "dirichlet":
            mask[(slice(None),) * axis + (0,)] = True
        if bc.kind(axis, "high") == "dirichlet":
            mask[(slice(None),) * axis + (-1,)] = True
    return mask.ravel()


def _assemble_matrix(mesh: Mesh, cell_matrices: np.ndarray) -> scipy.sparse.csr_matrix:
    """Stiffness K with K[i,j] = sum_S |S| * g_i^T A_c g_j, so a(u,v) = v^H K u."""
    n = mesh.n_nodes
    base = mesh.cell_corner_flat()
    rows, cols, data = [], [], []
    for G, off in zip(mesh.perm_grads, mesh.perm_offsets):
        Ke = mesh.simplex_volume * np.einsum("ai,cab,bj->cij", G, cell_matrices, G)
        nodes = base[:, None] + off[None, :]      # (n_cells, d+1)
        r = np.repeat(nodes, mesh.dim + 1, axis=1)
        c = np.tile(nodes, (1, mesh.dim + 1))
        rows.append(r.ravel())
        cols.append(c.ravel())
        data.append(Ke.reshape(base.size, -1).ravel())
    K = scipy.sparse.coo_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n), dtype=complex,
    )
    return K.tocsr()


@dataclass
class DiscreteOperator:
    """Assembled form a_h plus quadrature weights and the Dirichlet node mask."""

    mesh: Mesh
    field: CoefficientField
    stiffness: scipy.sparse.csr_matrix
    dirichlet_mask: np.ndarray
    weights: np.ndarray
    field_digest: str
    field_lambda: float
    field_Lambda: float
    field_omega: float
    _identity_stiffness: scipy.sparse.csr_matrix | None = None

    @property
    def dim(self) -> int:
        return self.mesh.dim

    @property
    def n_nodes(self) -> int:
        return self.mesh.n_nodes

    @property
    def free(self) -> np.ndarray:
        return np.flatnonzero(~self.dirichlet_mask)

    @property
    def identity_stiffness(self) -> scipy.sparse.csr_matrix:
        if self._identity_stiffness is None:
            eye = np.broadcast_to(
                np.eye(self.dim), (int(np.prod(self.mesh.shape_cells)), self.dim, self.dim)
            )
            self._identity_stiffness = _assemble_matrix(self.mesh, np.ascontiguousarray(eye))
        return self._identity_stiffness

    def form(self, u: np.ndarray, v: np.ndarray) -> complex:
        """a_h(u, v) = sum_S |S| (A_c grad u | grad v) = v^H K u."""
        return complex(np.vdot(v, self.stiffness @ u))

    def identity_form(self, u: np.ndarray, v: np.ndarray) -> complex:
        return complex(np.vdot(v, self.identity_stiffness @ u))

    def generator_dense(self, eps: float = 0.0) -> np.ndarray:
        """Mass-scaled generator M^{-1} K + eps on the free nodes, dense."""
        free = self.free
        Kff = self.stiffness[free][:, free].toarray()
        G = Kff / self.weights[free][:, None]
        if eps:
            G[np.diag_indices_from(G)] += eps
        return G

    def embed(self, u_free: np.ndarray) -> np.ndarray:
        """Zero-extend free-node values to the full node set."""
        out_shape = (self.n_nodes,) + u_free.shape[1:]
        full = np.zeros(out_shape, dtype=complex)
        full[self.free] = u_free
        return full

    def mesh_info(self) -> dict:
        return {
            "d": self.dim,
            "shape": list(self.mesh.shape_cells),
            "h": list(self.mesh.spacing),
            "free_nodes": int(self.free.size),
        }


@dataclass
class GridFunction:
    """Complex nodal values tied to a mesh; Dirichlet nodes must vanish for form-domain use."""

    values: np.ndarray
    mesh: Mesh


def assemble(field: CoefficientField, bc: BoundarySpec | None = None) -> DiscreteOperator:
    """Assemble the stiffness matrix, lumped weights, and Dirichlet mask on the field's grid.

    Each grid cell contributes its d! Kuhn simplices with the cell's matrix as
    a constant coefficient; Dirichlet nodes are the nodes lying on faces marked
    "dirichlet".  Weights are the lumped dual volumes |S|/(d+1) accumulated per
    node.  The field must be strictly accretive.
    """
    bad = field.degenerate_cell()
    if bad is not None:
        raise DegenerateFieldError(f"cannot assemble a degenerate field: cell {bad}", bad)
    if bc is None:
        bc = field.bc
    mesh = _build_mesh(field.shape, field.spacing)
    K = _assemble_matrix(mesh, field.cells_flat())

    weights = np.zeros(mesh.n_nodes)
    base = mesh.cell_corner_flat()
    per_vertex = mesh.simplex_volume / (mesh.dim + 1)
    for off in mesh.perm_offsets:
        nodes = (base[:, None] + off[None, :]).ravel()
        np.add.at(weights, nodes, per_vertex)

    # pointwise aggregates of the (deduped) cells; omega is the pointwise
    # upper bound for the form angle
    from . import core

    uniq = {m.tobytes(): m for m in field.cells_flat()}
    lams, Lams, omegas = [], [], []
    for m in uniq.values():
        lam, Lam = core.bounds_point(m)
        lams.append(lam)
        Lams.append(Lam)
        omegas.append(core.sector_angle_point(m))

    return DiscreteOperator(
        mesh=mesh,
        field=field,
        stiffness=K,
        dirichlet_mask=_dirichlet_mask(mesh, bc),
        weights=weights,
        field_digest=field_digest(field),
        field_lambda=float(min(lams)),
        field_Lambda=float(max(Lams)),
        field_omega=float(max(omegas)),
    )


# ---------------------------------------------------------------------------
# norms and propagation


def lp_norm(values: np.ndarray, weights: np.ndarray, q: float) -> float:
    """Weighted discrete norm ( sum_i w_i |v_i|^q )^{1/q}."""
    q = float(q)
    if q <= 0:
        raise ValueError(f"q must be positive, got {q}")
    return float(np.sum(weights * np.abs(values) ** q) ** (1.0 / q))


@dataclass
class SemigroupRun:
    """Configuration and records of one propagation u(t) = e^{-t(L+eps)} f.

    ``times`` must be strictly increasing (t = 0 allowed first).  ``qs`` lists
    the exponents whose weighted norms are recorded per time.  ``dt`` overrides
    the implicit-scheme step (default: smallest time gap / 64).
    """

    scheme: str
    times: list
    eps: float = 0.0
    qs: tuple = (2.0,)
    dt: float | None = None
    store_snapshots: bool = False
    records: list = dc_field(default_factory=list)

    def __post_init__(self):
        if self.scheme not in ("exponential", "implicit-euler", "crank-nicolson"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        self.times = [float(t) for t in self.times]
        if any(t < 0 for t in self.times) or any(
            b <= a for a, b in zip(self.times, self.times[1:])
        ):
            raise ValueError("times must be nonnegative and strictly increasing")
        if self.eps < 0:
            raise ValueError("eps must be >= 0")


def _chain_steps(times):
    """Integer multipliers (k_i) if every time is a near-integer multiple of the first positive one."""
    positive = [t for t in times if t > 0]
    if not positive:
        return None
    t0 = positive[0]
    ks = []
    for t in positive:
        k = round(t / t0)
        if k < 1 or abs(k * t0 - t) > 1e-9 * max(1.0, t):
            return None
        ks.append(k)
    return t0, ks


def _propagators_exponential(G: np.ndarray, times):
    """Map each positive time to a function applying e^{-tG} to a vector block.

    Uses one dense_expm at the base time and the semigroup law when the times
    are integer multiples of it; otherwise one dense_expm per distinct gap.
    """
    chain = _chain_steps(times)
    if chain is not None:
        t0, ks = chain
        P = dense_expm(G, t0)

        def make(k_prev, k):
            def step(u):
                for _ in range(k - k_prev):
                    u = P @ u
                return u
            return step

        steps = []
        k_prev = 0
        for k in ks:
            steps.append(make(k_prev, k))
            k_prev = k
        return steps

    cache = {}
    steps = []
    t_prev = 0.0
    for t in times:
        if t <= 0:
            continue
        gap = t - t_prev
        key = round(gap, 15)
        if key not in cache:
            cache[key] = dense_expm(G, gap)
        P = cache[key]
        steps.append(lambda u, P=P: P @ u)
        t_prev = t
    return steps


def _implicit_stepper(op: DiscreteOperator, eps: float, dt: float, theta: float):
    """LU-factored stepper for (M + theta dt B) u+ = (M - (1-theta) dt B) u, B = K + eps M."""
    free = op.free
    M = scipy.sparse.diags(op.weights[free]).tocsc()
    B = (op.stiffness[free][:, free] + eps * M).tocsc()
    lhs = (M + theta * dt * B).tocsc()
    lu = scipy.sparse.linalg.splu(lhs)
    rhs = (M - (1.0 - theta) * dt * B).tocsc() if theta < 1.0 else M

    def step(u):
        return lu.solve(rhs @ u)

    return step


def propagate(op: DiscreteOperator, f, run: SemigroupRun) -> SemigroupRun:
    """Propagate f through u(t) = e^{-t(L_h + eps)} f and record the requested norms.

    f may be a GridFunction or a full-node array; Dirichlet entries are
    projected to zero (form-domain projection).  The exponential scheme
    delegates to :func:`pellipt.oracle.dense_expm` on the mass-scaled free-node
    generator; implicit schemes march with sparse LU solves at step
    ``run.dt`` (default: smallest requested time gap / 64).
    """
    values = f.values if isinstance(f, GridFunction) else np.asarray(f, dtype=complex)
    if values.shape != (op.n_nodes,):
        raise ValueError(f"expected {op.n_nodes} nodal values, got shape {values.shape}")
    if not np.all(np.isfinite(values)):
        raise ValueError("initial data must be finite")
    free = op.free
    u = values.copy()
    u[op.dirichlet_mask] = 0.0
    u_free = u[free]

    run.records = []

    def record(t, u_free):
        full = op.embed(u_free)
        rec = {"t": t, "norms": {q: lp_norm(full, op.weights, q) for q in run.qs}}
        if run.store_snapshots:
            rec["snapshot"] = full
        run.records.append(rec)

    times = list(run.times)
    if times and times[0] == 0.0:
        record(0.0, u_free)
        times = times[1:]
    if not times:
        return run

    if run.scheme == "exponential":
        G = op.generator_dense(run.eps)
        for t, step in zip(times, _propagators_exponential(G, times)):
            u_free = step(u_free)
            record(t, u_free)
        return run

    theta = 1.0 if run.scheme == "implicit-euler" else 0.5
    gaps = np.diff([0.0] + times)
    dt = run.dt if run.dt is not None else float(np.min(gaps[gaps > 0])) / 64.0
    steppers = {}
    t_prev = 0.0
    for t in times:
        gap = t - t_prev
        n_sub = max(1, int(round(gap / dt)))
        dt_local = gap / n_sub
        key = round(dt_local, 15)
        if key not in steppers:
            try:
                steppers[key] = _implicit_stepper(op, run.eps, dt_local, theta)
            except RuntimeError as exc:
                raise RuntimeError(f"sparse factorization failed at dt={dt_local}: {exc}") from exc
        step = steppers[key]
        for _ in range(n_sub):
            u_free = step(u_free)
        record(t, u_free)
        t_prev = t
    return run


def save_snapshots(run: SemigroupRun, path) -> None:
    """Write recorded snapshots as flat binary, same convention as field files.

    A single JSON header line {"snapshots": n, "times": [...], "n_values": N}
    followed by a newline and little-endian 64-bit floats, interleaved re/im,
    time-major.  Requires the run to have been propagated with
    ``store_snapshots=True``.
    """
    import json

    snaps = [rec["snapshot"] for rec in run.records if "snapshot" in rec]
    if not snaps:
        raise ValueError("run holds no snapshots (propagate with store_snapshots=True)")
    times = [rec["t"] for rec in run.records if "snapshot" in rec]
    n = snaps[0].size
    header = json.dumps(
        {"snapshots": len(snaps), "times": times, "n_values": n}, sort_keys=True
    )
    payload = np.empty((len(snaps), n, 2))
    for k, s in enumerate(snaps):
        payload[k, :, 0] = s.real
        payload[k, :, 1] = s.imag
    with open(path, "wb") as fh:
        fh.write(header.encode("utf-8"))
        fh.write(b"\n")
        fh.write(payload.astype("<f8").tobytes())


def load_snapshots(path):
    """Read a snapshot file back as (times, array of shape (n_times, n_values))."""
    import json

    with open(path, "rb") as fh:
        raw = fh.read()
    nl = raw.find(b"\n")
    header = json.loads(raw[:nl].decode("utf-8"))
    count, n = header["snapshots"], header["n_values"]
    need = 16 * count * n
    payload = raw[nl + 1:]
    if len(payload) != need:
        raise ValueError(f"snapshot payload holds {len(payload)} bytes, expected {need}")
    arr = np.frombuffer(payload, dtype="<f8").reshape(count, n, 2)
    return header["times"], arr[..., 0] + 1j * arr[..., 1]


# ---------------------------------------------------------------------------
# experiments


def _random_free_block(op: DiscreteOperator, trials: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    n = op.free.size
    return rng.standard_normal((n, trials)) + 1j * rng.standard_normal((n, trials))


def contractivity_experiment(op: DiscreteOperator, p: float, trials: int, times,
                             scheme: str = "exponential", eps: float = 0.0,
                             seed: int = 0, battery: np.ndarray | None = None) -> dict:
    """max_t max_f ||T(t) f||_p / ||f||_p over a battery of initial data.

    ``battery`` (free-node columns) overrides the default random complex
    draws.  Exact contraction is expected only for p = 2 or sub-Markovian
    cases; otherwise the overshoot is a refinement trend.  The report carries
    the mesh size for trend analysis.
    """
    p = float(p)
    times = [float(t) for t in times]
    F = battery if battery is not None else _random_free_block(op, trials, seed)
    if F.shape[0] != op.free.size:
        raise ValueError("battery rows must match the free node count")

    w_free = op.weights[op.free]

    def block_norms(U):
        # Dirichlet nodes carry zeros, so the free-node weighted sum is the
        # full-grid norm
        return np.sum(w_free[:, None] * np.abs(U) ** p, axis=0) ** (1.0 / p)

    norms0 = block_norms(F)

    per_time = []
    if scheme == "exponential":
        G = op.generator_dense(eps)
        U = F
        for t, step in zip(times, _propagators_exponential(G, times)):
            U = step(U)
            ratios = block_norms(U) / norms0
            per_time.append({"t": t, "max_ratio": float(np.max(ratios))})
    else:
        for j in range(F.shape[1]):
            run = SemigroupRun(scheme=scheme, times=times, eps=eps, qs=(p,))
            propagate(op, op.embed(F[:, j]), run)
            for k, rec in enumerate(run.records):
                if j == 0:
                    per_time.append({"t": rec["t"], "max_ratio": 0.0})
                per_time[k]["max_ratio"] = max(
                    per_time[k]["max_ratio"], rec["norms"][p] / norms0[j]
                )

    max_ratio = max(r["max_ratio"] for r in per_time)
    return {
        "experiment": "contractivity",
        "mesh": op.mesh_info(),
        "field_digest": op.field_digest,
        "parameters": {"p": p, "trials": int(F.shape[1]), "times": times,
                       "scheme": scheme, "eps": eps, "seed": seed},
        "per_time_records": per_time,
        "max_ratio": max_ratio,
        "overshoot": max_ratio - 1.0,
        "tolerances": {"exact_l2": 1e-10},
        "verdicts": {"contraction": "pass" if max_ratio <= 1.0 + 1e-10 else "trend"},
    }


def sector_check(op: DiscreteOperator, trials: int = 200, seed: int = 0) -> dict:
    """Numerical-range check: |arg a_h(u,u)| <= field omega and Re a_h >= lambda a_I, per random u."""
    rng = np.random.default_rng(seed)
    n = op.free.size
    max_arg = 0.0
    min_accretivity = math.inf
    for _ in range(trials):
        u = op.embed(rng.standard_normal(n) + 1j * rng.standard_normal(n))
        val = op.form(u, u)
        ref = np.real(op.identity_form(u, u))
        max_arg = max(max_arg, abs(math.atan2(val.imag, val.real)))
        min_accretivity = min(min_accretivity, val.real - op.field_lambda * ref)
    return {
        "experiment": "sector",
        "mesh": op.mesh_info(),
        "field_digest": op.field_digest,
        "parameters": {"trials": trials, "seed": seed},
        "max_arg": max_arg,
        "field_omega": op.field_omega,
        "min_accretivity_slack": min_accretivity,
        "tolerances": {"angle": 1e-8, "accretivity": -1e-10},
        "verdicts": {
            "sector": "pass" if max_arg <= op.field_omega + 1e-8 else "fail",
            "accretivity": "pass" if min_accretivity >= -1e-10 else "fail",
        },
    }


def dissipativity_check(op: DiscreteOperator, u, p: float, delta_p: float):
    """(lhs, rhs, gap) of the discrete p-dissipativity inequality.

    lhs = Re sum_i w_i (L_h u)_i conj(u_i |u_i|^{p-2}),
    rhs = (2 delta_p / p) * a_I(v, v) with v = u |u|^{p/2-1} nodewise.

    For p = 2 the inequality gap is nonnegative up to rounding at any h
    (cellwise ellipticity); for p > 2 and smooth u the gap may dip below zero
    by a discretization error c(h) -> 0.  Requires p >= 2 and u in the
    discrete form domain (Dirichlet nodes zero).
    """
    p = float(p)
    if p < 2.0:
        raise ValueError(f"dissipativity check requires p >= 2, got {p}")
    values = u.values if isinstance(u, GridFunction) else np.asarray(u, dtype=complex)
    if values.shape != (op.n_nodes,):
        raise ValueError(f"expected {op.n_nodes} nodal values")
    if np.any(values[op.dirichlet_mask] != 0):
        raise ValueError("u must vanish at Dirichlet nodes (discrete form domain)")

    r = np.abs(values)
    # |u|^{p-2} u with the zero-at-zero convention (p > 2 makes 0^{p-2} = 0;
    # p = 2 gives phi = u)
    phi = values * np.where(r > 0, r ** (p - 2.0), 0.0) if p != 2.0 else values
    Ku = op.stiffness @ values
    free = op.free
    lhs = float(np.real(np.sum(Ku[free] * np.conj(phi[free]))))

    v = values * np.where(r > 0, r ** (p / 2.0 - 1.0), 0.0) if p != 2.0 else values
    rhs = (2.0 * float(delta_p) / p) * float(np.real(op.identity_form(v, v)))
    return lhs, rhs, lhs - rhs


def offdiagonal_experiment(op: DiscreteOperator, E, F, t: float, psi: float = 0.0,
                           C: float | None = None, trials: int = 16, seed: int = 0):
    """(measured, bound) for the L^2(E) -> L^2(F) leakage of the propagator.

    measured = max over E-supported f of ||(T(z) f)|_F||_2 / ||f||_2 at
    z = t e^{i psi}; the battery consists of random draws plus the extremal
    singular vector of the weighted F x E propagator block, so the value is
    the exact supremum.  bound = exp(-dist(E,F)^2 / (4 C t)) with C defaulting
    to the field's off-diagonal constant at angle psi.
    """
    E = np.asarray(E, dtype=int)
    F = np.asarray(F, dtype=int)
    if np.intersect1d(E, F).size:
        raise ValueError("E and F must be disjoint node sets")
    t = float(t)
    if t <= 0:
        raise ValueError("t must be positive")
    if C is None:
        C = ranges.offdiag_constant(op.field_lambda, op.field_Lambda, op.field_omega, psi)

    from scipy.spatial.distance import cdist

    dist = float(np.min(cdist(op.mesh.coords[E], op.mesh.coords[F])))
    bound = math.exp(-dist * dist / (4.0 * C * t))

    free = op.free
    pos_in_free = -np.ones(op.n_nodes, dtype=int)
    pos_in_free[free] = np.arange(free.size)
    E_free = pos_in_free[E]
    E_free = E_free[E_free >= 0]
    F_free = pos_in_free[F]
    F_free = F_free[F_free >= 0]
    if E_free.size == 0 or F_free.size == 0:
        return 0.0, bound

    G = op.generator_dense(0.0)
    if psi:
        G = np.exp(1j * psi) * G
    P = dense_expm(G, t)
    wE = op.weights[free][E_free]
    wF = op.weights[free][F_free]
    block = np.sqrt(wF)[:, None] * P[np.ix_(F_free, E_free)] / np.sqrt(wE)[None, :]
    measured = float(np.linalg.norm(block, 2))

    rng = np.random.default_rng(seed)
    for _ in range(trials):
        g = rng.standard_normal(E_free.size) + 1j * rng.standard_normal(E_free.size)
        val = np.linalg.norm(block @ (g / np.linalg.norm(g)))
        measured = max(measured, float(val))
    return measured, bound


def ultracontractivity_experiment(op: DiscreteOperator, p: float, eps: float, times,
                                  seed: int = 0) -> float:
    """Fitted slope of log sup_f ||e^{-eps t} T(t) f||_2 / ||f||_p against log t.

    The battery per time consists of Gaussian bumps of widths proportional to
    sqrt(t) at interior centers, plus a nodal spike; the supremum over such
    localized data tracks the smoothing exponent d/4 - d/(2p) inside the
    resolvable band h^2 << t << diam^2 (times outside the band are flagged
    with a warning).  Requires p in (1, 2]; at p = 2 the exponent vanishes and
    the fitted slope is ~0.
    """
    p = float(p)
    if not (1.0 < p <= 2.0):
        raise ValueError(f"ultracontractivity experiment requires p in (1, 2], got {p}")
    times = sorted(float(t) for t in times)
    if len(times) < 3 or times[0] <= 0:
        raise ValueError("need at least three positive times")

    h = max(op.mesh.spacing)
    diam = math.sqrt(sum((n * s) ** 2 for n, s in zip(op.mesh.shape_cells, op.mesh.spacing)))
    if times[0] < 25 * h * h or times[-1] > 0.25 * diam * diam:
        warnings.warn(
            f"times [{times[0]:g}, {times[-1]:g}] leave the resolvable band "
            f"[{25 * h * h:g}, {0.25 * diam * diam:g}]",
            RuntimeWarning,
        )

    free = op.free
    coords = op.mesh.coords[free]
    lows = coords.min(axis=0)
    highs = coords.max(axis=0)
    centers = [lows + frac * (highs - lows) for frac in (0.35, 0.5, 0.65)]

    G = op.generator_dense(eps)
    sup_ratio = []
    for t in times:
        fs = []
        for c in centers:
            for width in (0.5, 1.0, 2.0):
                sigma = width * math.sqrt(t)
                fs.append(np.exp(-np.sum((coords - c) ** 2, axis=1) / (2.0 * sigma * sigma)))
        spike = np.zeros(free.size)
        spike[np.argmin(np.sum((coords - centers[1]) ** 2, axis=1))] = 1.0
        fs.append(spike)
        F = np.array(fs, dtype=complex).T
        U = dense_expm(G, t) @ F
        best = 0.0
        for j in range(F.shape[1]):
            denom = lp_norm(op.embed(F[:, j]), op.weights, p)
            if denom > 0:
                best = max(best, lp_norm(op.embed(U[:, j]), op.weights, 2.0) / denom)
        sup_ratio.append(best)

    slope = float(np.polyfit(np.log(times), np.log(sup_ratio), 1)[0])
    return slope
