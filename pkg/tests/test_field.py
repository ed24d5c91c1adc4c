"""Field tests: generators, file round-trips, error paths, aggregation."""

import json
import math

import numpy as np
import pytest

from pellipt import core, field as fieldmod
from pellipt.field import (
    BoundarySpec,
    CoefficientField,
    DegenerateFieldError,
    FieldFormatError,
    analyze_field,
    generate,
    load_field,
    save_field,
)

I2 = np.eye(2, dtype=complex)


def test_boundary_presets():
    bc = BoundarySpec.dirichlet(2)
    assert bc.kind(0, "low") == "dirichlet" and bc.dim == 2
    bc = BoundarySpec.mixed(2, [(0, "low")])
    assert bc.kind(0, "low") == "dirichlet" and bc.kind(1, "high") == "neumann"
    with pytest.raises(ValueError):
        BoundarySpec({(0, "low"): "dirichlet"})  # missing the high face


def test_generate_constant_identity():
    f = generate("constant", (8, 8), 0.125, matrix=I2)
    rep = analyze_field(f, ps=(2.0,), tol=1e-9)
    assert rep.lam == pytest.approx(1.0, abs=1e-12)
    assert rep.Lam == pytest.approx(1.0, abs=1e-12)
    assert rep.mu == pytest.approx(1.0, abs=1e-8)


def test_generate_scalar_field():
    f = generate("scalar", (6,), 1.0 / 6, t=1.0)
    rep = analyze_field(f, ps=(4.0,), tol=1e-9)
    assert rep.omega == pytest.approx(math.pi / 4, abs=1e-10)
    assert rep.mu == pytest.approx(1 / math.sqrt(2), abs=1e-8)


def test_generate_checkerboard_delta4():
    f = generate("checkerboard", (4, 4), 0.25, matrix=I2, matrix_b=(1 + 1j) * I2)
    rep = analyze_field(f, ps=(4.0,), tol=1e-9)
    assert rep.delta_p[4.0] == pytest.approx(1 - math.sqrt(2) / 2, abs=1e-8)


def test_generate_rotating_uniform_functionals():
    # real-orthogonal conjugation preserves every pointwise functional
    f = generate("rotating", (5, 3), 0.2, kappa=2.0)
    flat = f.cells_flat()
    base = core.delta_p_point(flat[0], 4.0)
    for c in range(f.n_cells):
        assert core.delta_p_point(flat[c], 4.0) == pytest.approx(base, abs=1e-12)


def test_generate_invalid():
    with pytest.raises(ValueError):
        generate("constant", (0, 4), 0.25, matrix=I2)
    with pytest.raises(ValueError):
        generate("rotating", (8,), 0.125)
    with pytest.raises(ValueError):
        generate("nope", (4,), 0.25)


@pytest.mark.parametrize("binary", [False, True])
def test_roundtrip_bit_exact(tmp_path, binary):
    rng = np.random.default_rng(5)
    cells = rng.standard_normal((3, 4, 2, 2)) + 1j * rng.standard_normal((3, 4, 2, 2))
    f = CoefficientField(dim=2, shape=(3, 4), spacing=(0.1, 0.2), cells=cells,
                         bc=BoundarySpec.mixed(2, [(0, "low"), (1, "high")]))
    path = tmp_path / ("f.bin" if binary else "f.json")
    save_field(f, path, binary=binary)
    g = load_field(path)
    assert g.shape == f.shape and g.spacing == f.spacing
    assert g.bc.faces == f.bc.faces
    assert np.array_equal(g.cells, f.cells)


def test_load_identity_field(tmp_path):
    f = generate("constant", (4, 4), 0.25, matrix=I2)
    path = tmp_path / "id.json"
    save_field(f, path)
    rep = analyze_field(load_field(path), ps=(2.0,))
    assert rep.lam == pytest.approx(1.0) and rep.Lam == pytest.approx(1.0)


def test_truncated_binary_names_missing_bytes(tmp_path):
    f = generate("constant", (4,), 0.25, matrix=np.eye(1, dtype=complex))
    path = tmp_path / "f.bin"
    save_field(f, path, binary=True)
    blob = path.read_bytes()
    path.write_bytes(blob[:-16])
    with pytest.raises(FieldFormatError, match="missing 16"):
        load_field(path)


def test_malformed_json_reports_position(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"version": 1, "d": ')
    with pytest.raises(FieldFormatError, match="line"):
        load_field(path)


def test_inline_wrong_cell_count(tmp_path):
    doc = {"version": 1, "d": 1, "shape": [2], "spacing": [0.5],
           "bc": {"faces": [{"axis": 0, "side": "low", "kind": "dirichlet"},
                            {"axis": 0, "side": "high", "kind": "dirichlet"}]},
           "cells": "inline", "data": [[[[1.0, 0.0]]]]}
    path = tmp_path / "short.json"
    path.write_text(json.dumps(doc))
    with pytest.raises(FieldFormatError, match="expected 2"):
        load_field(path)


def test_analyze_constant_equals_point_report():
    A = np.array([[2.0, 0.4 + 0.3j], [0.1 - 0.2j, 1.5]])
    f = generate("constant", (3, 3), 1 / 3, matrix=A)
    rep = analyze_field(f, ps=(2.0, 4.0), tol=1e-9)
    pr = core.point_report(A, ps=(2.0, 4.0), tol=1e-9)
    assert rep.lam == pytest.approx(pr.lambda_pt, abs=1e-13)
    assert rep.Lam == pytest.approx(pr.Lambda_pt, abs=1e-13)
    assert rep.omega == pytest.approx(pr.omega_pt, abs=1e-13)
    assert rep.delta_p[4.0] == pytest.approx(pr.delta_p[4.0], abs=1e-13)


def test_analyze_argmin_finds_weak_cell():
    f = generate("constant", (4,), 0.25, matrix=np.eye(1, dtype=complex))
    cells = f.cells.copy()
    cells[2, 0, 0] = 0.5
    g = CoefficientField(dim=1, shape=(4,), spacing=(0.25,), cells=cells, bc=f.bc)
    rep = analyze_field(g, ps=(2.0,))
    assert rep.lam == pytest.approx(0.5)
    assert rep.argmin["lambda"] == 2


def test_analyze_delta2_equals_lambda():
    rng = np.random.default_rng(6)
    cells = rng.standard_normal((8, 2, 2)) + 1j * rng.standard_normal((8, 2, 2))
    cells += 3.0 * np.eye(2)
    f = CoefficientField(dim=2, shape=(2, 4), spacing=(0.5, 0.25),
                         cells=cells.reshape(2, 4, 2, 2), bc=BoundarySpec.dirichlet(2))
    rep = analyze_field(f, ps=(2.0, 3.0))
    assert rep.delta_p[2.0] == rep.lam


def test_analyze_order_independent_aggregates():
    rng = np.random.default_rng(7)
    cells = rng.standard_normal((6, 1, 1)) * 0.2 + 1.0 + 0.3j * rng.standard_normal((6, 1, 1))
    f1 = CoefficientField(dim=1, shape=(6,), spacing=(0.1,), cells=cells,
                          bc=BoundarySpec.dirichlet(1))
    f2 = CoefficientField(dim=1, shape=(6,), spacing=(0.1,), cells=cells[::-1].copy(),
                          bc=BoundarySpec.dirichlet(1))
    r1, r2 = analyze_field(f1, ps=(4.0,)), analyze_field(f2, ps=(4.0,))
    assert r1.lam == pytest.approx(r2.lam, abs=1e-14)
    assert r1.delta_p[4.0] == pytest.approx(r2.delta_p[4.0], abs=1e-14)
    assert r1.mu == pytest.approx(r2.mu, abs=1e-14)


def test_analyze_real_field_bound():
    rng = np.random.default_rng(8)
    cells = np.empty((5, 2, 2), dtype=complex)
    for c in range(5):
        M = rng.standard_normal((2, 2))
        lam0 = np.linalg.eigvalsh((M + M.T) / 2)[0]
        cells[c] = M + max(0.1 - lam0, 0.0) * np.eye(2)
    f = CoefficientField(dim=2, shape=(5, 1), spacing=(0.2, 1.0),
                         cells=cells.reshape(5, 1, 2, 2), bc=BoundarySpec.dirichlet(2))
    for p in (1.5, 3.0, 6.0):
        rep = analyze_field(f, ps=(p,))
        pc = p / (p - 1)
        assert rep.delta_p[p] >= rep.lam * min(2 / pc, 2 / p) - 1e-10


def test_degenerate_field_rejected_with_cell_index():
    cells = np.ones((4, 1, 1), dtype=complex)
    cells[1] = -1.0
    f = CoefficientField(dim=1, shape=(4,), spacing=(0.25,), cells=cells,
                         bc=BoundarySpec.dirichlet(1))
    with pytest.raises(DegenerateFieldError) as err:
        analyze_field(f, ps=(2.0,))
    assert err.value.cell_index == 1


def test_field_digest_stable_and_sensitive():
    f = generate("constant", (4, 4), 0.25, matrix=I2)
    d1 = fieldmod.field_digest(f)
    assert d1 == fieldmod.field_digest(f)
    g = generate("constant", (4, 4), 0.25, matrix=2 * I2)
    assert d1 != fieldmod.field_digest(g)
