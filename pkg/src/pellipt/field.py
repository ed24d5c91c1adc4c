"""Sampled matrix coefficient fields on rectangular grids.

A :class:`CoefficientField` is a box of cells (one complex d x d matrix per
cell, sampled at the cell barycenter), together with grid spacing and a
face-wise boundary condition assignment.  Field-level functionals are the
min/max aggregates of the pointwise functionals of :mod:`pellipt.core`; the
essential infimum over the box is approximated by the minimum over sampled
cells, which is exact for the piecewise-constant built-in generators.

File format (version 1): a JSON header

    {"version": 1, "d": int, "shape": [ints], "spacing": [reals],
     "bc": {"faces": [{"axis": int, "side": "low"|"high",
                       "kind": "dirichlet"|"neumann"}]},
     "cells": "inline" | "binary", "data": ...}

With ``"cells": "inline"``, ``data`` is a nested list over cells in row-major
order; each cell is a d x d nested list of ``[re, im]`` pairs.  With
``"cells": "binary"`` the header is a single JSON line followed by a newline
and a raw payload of little-endian 64-bit floats, interleaved re/im, row-major
within each cell, cell-major overall; the payload must hold exactly
``16 * d^2 * n_cells`` bytes.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import core, ranges

__all__ = [
    "BoundarySpec",
    "CoefficientField",
    "FieldReport",
    "FieldFormatError",
    "DegenerateFieldError",
    "load_field",
    "save_field",
    "generate",
    "analyze_field",
    "field_digest",
]

KINDS = ("dirichlet", "neumann")


class FieldFormatError(ValueError):
    """Field file does not parse or violates the format invariants."""


class DegenerateFieldError(ValueError):
    """Field has a cell that is not strictly accretive."""

    def __init__(self, message, cell_index):
        super().__init__(message)
        self.cell_index = cell_index


@dataclass(frozen=True)
class BoundarySpec:
    """Face-wise Dirichlet/Neumann assignment on the boundary of a box.

    ``faces[(axis, side)]`` is "dirichlet" or "neumann" with side in
    {"low", "high"}; every face of the d-box must be assigned exactly once.
    The two booleans summarize the Sobolev-embedding quality of the resulting
    form domain (desk-scale boxes have both; pure Dirichlet always has the
    homogeneous version).
    """

    faces: dict
    embedding_property: bool = True
    homogeneous_embedding: bool = True

    def __post_init__(self):
        axes = sorted({axis for axis, _ in self.faces})
        if axes != list(range(len(axes))):
            raise ValueError(f"faces must cover axes 0..d-1, got axes {axes}")
        for axis in axes:
            for side in ("low", "high"):
                kind = self.faces.get((axis, side))
                if kind not in KINDS:
                    raise ValueError(f"face (axis={axis}, side={side}) has invalid kind {kind!r}")

    @property
    def dim(self) -> int:
        return 1 + max(axis for axis, _ in self.faces)

    def kind(self, axis: int, side: str) -> str:
        return self.faces[(axis, side)]

    @classmethod
    def dirichlet(cls, d: int) -> "BoundarySpec":
        """Pure Dirichlet preset."""
        return cls({(a, s): "dirichlet" for a in range(d) for s in ("low", "high")})

    @classmethod
    def neumann(cls, d: int) -> "BoundarySpec":
        """Pure Neumann preset."""
        return cls({(a, s): "neumann" for a in range(d) for s in ("low", "high")})

    @classmethod
    def mixed(cls, d: int, dirichlet_faces) -> "BoundarySpec":
        """Dirichlet on the listed (axis, side) faces, Neumann elsewhere."""
        faces = {(a, s): "neumann" for a in range(d) for s in ("low", "high")}
        for key in dirichlet_faces:
            axis, side = key
            if (axis, side) not in faces:
                raise ValueError(f"unknown face {key}")
            faces[(axis, side)] = "dirichlet"
        return cls(faces)

    def to_json(self) -> dict:
        return {
            "faces": [
                {"axis": a, "side": s, "kind": self.faces[(a, s)]}
                for a in range(self.dim)
                for s in ("low", "high")
            ]
        }

    @classmethod
    def from_json(cls, obj) -> "BoundarySpec":
        try:
            faces = {(f["axis"], f["side"]): f["kind"] for f in obj["faces"]}
        except (KeyError, TypeError) as exc:
            raise FieldFormatError(f"malformed bc block: {exc}") from exc
        return cls(faces)


@dataclass
class CoefficientField:
    """Grid of complex matrices: ``cells`` has shape (*shape, d, d), row-major."""

    dim: int
    shape: tuple
    spacing: tuple
    cells: np.ndarray
    bc: BoundarySpec

    def __post_init__(self):
        self.shape = tuple(int(n) for n in self.shape)
        self.spacing = tuple(float(h) for h in self.spacing)
        if any(n < 1 for n in self.shape) or len(self.shape) != self.dim:
            raise ValueError(f"invalid shape {self.shape} for d={self.dim}")
        if len(self.spacing) != self.dim or any(h <= 0 for h in self.spacing):
            raise ValueError(f"invalid spacing {self.spacing}")
        self.cells = np.ascontiguousarray(self.cells, dtype=complex)
        if self.cells.shape != (*self.shape, self.dim, self.dim):
            raise ValueError(
                f"cells shape {self.cells.shape} inconsistent with shape {self.shape}, d={self.dim}"
            )
        if not np.all(np.isfinite(self.cells)):
            raise ValueError("cell entries must be finite")
        if self.bc.dim != self.dim:
            raise ValueError("boundary spec dimension differs from field dimension")

    @property
    def n_cells(self) -> int:
        return int(np.prod(self.shape))

    def cells_flat(self) -> np.ndarray:
        """View of the cells as (n_cells, d, d), row-major cell order."""
        return self.cells.reshape(self.n_cells, self.dim, self.dim)

    def cell_center(self, flat_index: int) -> np.ndarray:
        idx = np.unravel_index(flat_index, self.shape)
        return np.array([(i + 0.5) * h for i, h in zip(idx, self.spacing)])

    def degenerate_cell(self):
        """Flat index of the first cell with lambda <= 0, or None if strictly accretive."""
        flat = self.cells_flat()
        H = (flat + np.conj(np.swapaxes(flat, 1, 2))) / 2.0
        lams = np.linalg.eigvalsh(H)[:, 0]
        bad = np.flatnonzero(lams <= 0.0)
        return int(bad[0]) if bad.size else None


@dataclass
class FieldReport:
    """Aggregated functionals of a field (min over cells for lambda/mu/delta_p, max for Lambda/omega).

    ``omega`` is the max of the pointwise numerical-range angles, an upper
    bound for the sesquilinear-form angle of the assembled operator.
    ``argmin`` records, per functional, the flat row-major index of the cell
    attaining the aggregate (lowest index on ties).
    """

    lam: float
    Lam: float
    omega: float
    mu: float
    delta_p: dict
    p_elliptic: ranges.QInterval
    argmin: dict

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "Lambda": self.Lam,
            "omega": self.omega,
            "mu": self.mu,
            "delta_p": {repr(p): v for p, v in sorted(self.delta_p.items())},
            "p_elliptic": self.p_elliptic.to_dict(),
            "argmin": {k: v for k, v in sorted(self.argmin.items())},
        }


# ---------------------------------------------------------------------------
# generation


def _rotation(d: int, angle: float) -> np.ndarray:
    R = np.eye(d)
    c, s = math.cos(angle), math.sin(angle)
    R[0, 0] = c
    R[0, 1] = -s
    R[1, 0] = s
    R[1, 1] = c
    return R


DEFAULT_ROTATING_SEED = np.array([[2.0, 0.5j], [0.5j, 1.0]])


def generate(kind: str, shape, spacing, *, matrix=None, matrix_b=None, t: float = 1.0,
             kappa: float = 1.0, seed_matrix=None, bc: BoundarySpec | None = None
             ) -> CoefficientField:
    """Built-in test fields on a box; d equals the number of axes in ``shape``.

    kind = "constant":      every cell is ``matrix``.
    kind = "scalar":        every cell is (1 + i t) I.
    kind = "rotating":      cell at barycenter x is R(kappa x_1)^T S R(kappa x_1)
                            with the planar rotation R and seed matrix S
                            (default ``DEFAULT_ROTATING_SEED``); d >= 2.
    kind = "checkerboard":  ``matrix`` / ``matrix_b`` by cell-index parity.

    ``bc`` defaults to pure Dirichlet.
    """
    shape = tuple(int(n) for n in shape)
    if any(n < 1 for n in shape):
        raise ValueError(f"invalid shape {shape}")
    d = len(shape)
    spacing = tuple(float(h) for h in (spacing if np.iterable(spacing) else [spacing] * d))
    if bc is None:
        bc = BoundarySpec.dirichlet(d)

    def check(M, name):
        M = np.asarray(M, dtype=complex)
        if M.shape != (d, d):
            raise ValueError(f"{name} must be {d}x{d} for shape {shape}, got {M.shape}")
        return M

    cells = np.empty((*shape, d, d), dtype=complex)
    if kind == "constant":
        if matrix is None:
            raise ValueError("constant field needs matrix=")
        cells[...] = check(matrix, "matrix")
    elif kind == "scalar":
        cells[...] = (1.0 + 1j * float(t)) * np.eye(d)
    elif kind == "rotating":
        if d < 2:
            raise ValueError("rotating field needs d >= 2")
        S = check(DEFAULT_ROTATING_SEED if seed_matrix is None else seed_matrix, "seed_matrix")
        for flat in range(int(np.prod(shape))):
            idx = np.unravel_index(flat, shape)
            x1 = (idx[0] + 0.5) * spacing[0]
            R = _rotation(d, float(kappa) * x1)
            cells[idx] = R.T @ S @ R
    elif kind == "checkerboard":
        if matrix is None or matrix_b is None:
            raise ValueError("checkerboard field needs matrix= and matrix_b=")
        A0 = check(matrix, "matrix")
        A1 = check(matrix_b, "matrix_b")
        for flat in range(int(np.prod(shape))):
            idx = np.unravel_index(flat, shape)
            cells[idx] = A0 if sum(idx) % 2 == 0 else A1
    else:
        raise ValueError(f"unknown field kind {kind!r}")
    return CoefficientField(dim=d, shape=shape, spacing=spacing, cells=cells, bc=bc)


# ---------------------------------------------------------------------------
# file I/O


def _header_dict(field: CoefficientField, cells_mode: str) -> dict:
    return {
        "version": 1,
        "d": field.dim,
        "shape": list(field.shape),
        "spacing": list(field.spacing),
        "bc": field.bc.to_json(),
        "cells": cells_mode,
    }


def save_field(field: CoefficientField, path, binary: bool = False) -> None:
    """Write a field file (inline JSON by default, binary payload on request)."""
    flat = field.cells_flat()
    if binary:
        header = json.dumps(_header_dict(field, "binary"), sort_keys=True)
        payload = np.empty((field.n_cells, field.dim, field.dim, 2))
        payload[..., 0] = flat.real
        payload[..., 1] = flat.imag
        with open(path, "wb") as fh:
            fh.write(header.encode("utf-8"))
            fh.write(b"\n")
            fh.write(payload.astype("<f8").tobytes())
    else:
        doc = _header_dict(field, "inline")
        doc["data"] = [
            [[[float(flat[c, i, j].real), float(flat[c, i, j].imag)]
              for j in range(field.dim)]
             for i in range(field.dim)]
            for c in range(field.n_cells)
        ]
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, sort_keys=True)
            fh.write("\n")


def load_field(path) -> CoefficientField:
    """Read a field file; raises FieldFormatError with position info on bad input."""
    with open(path, "rb") as fh:
        raw = fh.read()
    nl = raw.find(b"\n")
    head_bytes = raw if nl < 0 else raw[:nl]
    try:
        header = json.loads(head_bytes.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        # inline documents may be pretty-printed over several lines
        try:
            header = json.loads(raw.decode("utf-8"))
        except UnicodeDecodeError as exc2:
            raise FieldFormatError(f"{path}: not a field file ({exc2})") from exc2
        except json.JSONDecodeError as exc2:
            raise FieldFormatError(
                f"{path}: JSON parse error at line {exc2.lineno}, column {exc2.colno}: {exc2.msg}"
            ) from exc2
    return _field_from_header(path, header, raw, nl)


def _field_from_header(path, header, raw, nl) -> CoefficientField:
    try:
        version = header["version"]
        d = int(header["d"])
        shape = tuple(int(n) for n in header["shape"])
        spacing = tuple(float(h) for h in header["spacing"])
        bc = BoundarySpec.from_json(header["bc"])
        mode = header["cells"]
    except (KeyError, TypeError, ValueError) as exc:
        raise FieldFormatError(f"{path}: malformed header: {exc}") from exc
    if version != 1:
        raise FieldFormatError(f"{path}: unsupported version {version}")
    n_cells = int(np.prod(shape))

    if mode == "inline":
        data = header.get("data")
        if data is None or len(data) != n_cells:
            raise FieldFormatError(
                f"{path}: inline data has {0 if data is None else len(data)} cells, expected {n_cells}"
            )
        arr = np.asarray(data, dtype=float)
        if arr.shape != (n_cells, d, d, 2):
            raise FieldFormatError(f"{path}: inline data shape {arr.shape} != {(n_cells, d, d, 2)}")
        cells = (arr[..., 0] + 1j * arr[..., 1]).reshape(*shape, d, d)
    elif mode == "binary":
        need = 16 * d * d * n_cells
        payload = b"" if nl < 0 else raw[nl + 1:]
        if len(payload) != need:
            msg = f"{path}: binary payload holds {len(payload)} bytes, expected {need}"
            if len(payload) < need:
                msg += f" (missing {need - len(payload)})"
            raise FieldFormatError(msg)
        arr = np.frombuffer(payload, dtype="<f8").reshape(n_cells, d, d, 2)
        cells = (arr[..., 0] + 1j * arr[..., 1]).reshape(*shape, d, d)
    else:
        raise FieldFormatError(f"{path}: unknown cells mode {mode!r}")

    try:
        return CoefficientField(dim=d, shape=shape, spacing=spacing, cells=cells, bc=bc)
    except ValueError as exc:
        raise FieldFormatError(f"{path}: {exc}") from exc


def field_digest(field: CoefficientField) -> str:
    """SHA-256 of the canonical header plus raw cell bytes; stable across runs."""
    h = hashlib.sha256()
    h.update(json.dumps(_header_dict(field, "digest"), sort_keys=True).encode("utf-8"))
    h.update(np.ascontiguousarray(field.cells).tobytes())
    return h.hexdigest()


# ---------------------------------------------------------------------------
# analysis


def _pointwise_reports(unique_matrices, ps, tol):
    out = []
    for A in unique_matrices:
        lam, Lam = core.bounds_point(A)
        out.append({
            "lambda": lam,
            "Lambda": Lam,
            "omega": core.sector_angle_point(A),
            "mu": core.mu_point(A, tol),
            "delta_p": {p: core.delta_p_point(A, p) for p in ps},
        })
    return out


def analyze_field(field: CoefficientField, ps=(2.0,), tol: float = 1e-9) -> FieldReport:
    """Map the pointwise functionals over the cells and aggregate.

    min over cells stands in for the essential infimum (exact for the
    piecewise-constant built-in generators).  Distinct cell matrices are
    deduplicated before the pointwise solves, so structured fields cost a few
    eigensolves regardless of grid size.  ``PELLIPT_THREADS`` (>1) maps the
    unique-cell solves over a thread pool; the min/max reduction makes the
    result schedule-independent.
    """
    bad = field.degenerate_cell()
    if bad is not None:
        raise DegenerateFieldError(
            f"field is degenerate: cell {bad} has lambda <= 0", bad
        )
    ps = [float(p) for p in ps]
    flat = field.cells_flat()

    # dedupe cells; first_flat[k] = lowest row-major cell index showing matrix k
    key_to_slot: dict[bytes, int] = {}
    slot_of_cell = np.empty(field.n_cells, dtype=int)
    unique = []
    first_flat = []
    for c in range(field.n_cells):
        key = flat[c].tobytes()
        slot = key_to_slot.get(key)
        if slot is None:
            slot = len(unique)
            key_to_slot[key] = slot
            unique.append(flat[c])
            first_flat.append(c)
        slot_of_cell[c] = slot

    n_threads = int(os.environ.get("PELLIPT_THREADS", "1") or "1")
    if n_threads > 1 and len(unique) > 1:
        from concurrent.futures import ThreadPoolExecutor

        chunk = max(1, len(unique) // n_threads)
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            parts = list(pool.map(
                lambda lo: _pointwise_reports(unique[lo:lo + chunk], ps, tol),
                range(0, len(unique), chunk),
            ))
        reports = [r for part in parts for r in part]
    else:
        reports = _pointwise_reports(unique, ps, tol)

    def aggregate(key, minimize):
        vals = np.array([r[key] for r in reports])
        per_cell = vals[slot_of_cell]
        arg = int(np.argmin(per_cell) if minimize else np.argmax(per_cell))
        return float(per_cell[arg]), arg

    lam, arg_lam = aggregate("lambda", True)
    Lam, arg_Lam = aggregate("Lambda", False)
    omega, arg_omega = aggregate("omega", False)
    mu, arg_mu = aggregate("mu", True)
    delta_p = {}
    argmin = {"lambda": arg_lam, "Lambda": arg_Lam, "omega": arg_omega, "mu": arg_mu}
    for p in ps:
        vals = np.array([r["delta_p"][p] for r in reports])[slot_of_cell]
        arg = int(np.argmin(vals))
        delta_p[p] = float(vals[arg])
        argmin[f"delta_{p:g}"] = arg

    return FieldReport(
        lam=lam, Lam=Lam, omega=omega, mu=mu, delta_p=delta_p,
        p_elliptic=ranges.p_elliptic_interval(mu), argmin=argmin,
    )
