import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scmadesign.codebook import (
    REFERENCE_RTOL,
    SCHEMA,
    CodebookSet,
    check_budget,
    design_codebooks,
    dumps,
    enumerate_superimposed,
    fit_design_point,
    index_tuples,
    load_codebooks,
    loads,
    reference_codebooks,
    save_codebooks,
    superimpose,
    superimposed_points,
    validate,
)
from scmadesign.errors import BudgetExceededError, ConfigError, InvariantError
from scmadesign.optimizer import project_energies
from scmadesign.signature import builtin_template, energy_target


@pytest.fixture(scope="module")
def ref_a():
    return reference_codebooks("A_4x6_M4")


@pytest.fixture(scope="module")
def ref_b():
    return reference_codebooks("B_5x10_M4")


def test_reference_a_entries(ref_a):
    # user 1 as printed: resources 2 and 4 active
    np.testing.assert_allclose(ref_a.entries[0, 1], [-0.2378 + 1.0684j, -0.0684 + 0.3074j,
                                                     0.0684 - 0.3074j, 0.2378 - 1.0684j], atol=1e-12)
    np.testing.assert_allclose(ref_a.entries[0, 3], [-0.284, 0.9869, -0.9869, 0.284], atol=1e-12)
    assert ref_a.dims == {"M": 4, "J": 6, "K": 4, "N": 2, "d_f": 3}
    np.testing.assert_array_equal(ref_a.indicator, builtin_template("S4x6").placement > 0)


def test_reference_b_dims(ref_b):
    assert ref_b.dims == {"M": 4, "J": 10, "K": 5, "N": 2, "d_f": 4}
    np.testing.assert_array_equal(ref_b.indicator, builtin_template("S5x10").placement > 0)


@pytest.mark.parametrize("rid", ["A_4x6_M4", "B_5x10_M4"])
def test_references_validate_loosely(rid):
    validate(reference_codebooks(rid), REFERENCE_RTOL)


def test_unknown_reference():
    with pytest.raises(ConfigError, match="A_4x6_M4"):
        reference_codebooks("Z")


@pytest.mark.parametrize("rid", ["A_4x6_M4", "B_5x10_M4"])
def test_fitted_design_point_rebuilds_reference(rid):
    ref = reference_codebooks(rid)
    t = builtin_template(ref.template)
    E, phases, omega = fit_design_point(ref, t)
    E = project_energies(E, energy_target(4, t))
    rebuilt = design_codebooks(t, E, phases, omega, 4)
    # the printed tables carry four decimals
    np.testing.assert_allclose(rebuilt.entries, ref.entries, rtol=0, atol=5e-4)


def test_energy_recovery(ref_a):
    E, _, omega = fit_design_point(ref_a, "S4x6")
    np.testing.assert_allclose(E, [2.59, 1.30, 2.11], atol=0.01)
    assert E.sum() == pytest.approx(6.0, abs=0.01)
    assert omega == pytest.approx(1.0684 / 0.3074, rel=1e-3)


def test_fit_roundtrip_on_built_set():
    E, phi, w = (2.0, 1.5, 2.5), (0.3, 1.2, 2.9), 2.7
    E_fit, phi_fit, w_fit = fit_design_point(design_codebooks("S4x6", E, phi, w, 4), "S4x6")
    np.testing.assert_allclose(E_fit, E, rtol=1e-12)
    np.testing.assert_allclose(phi_fit, phi, rtol=1e-12)
    assert w_fit == pytest.approx(w, rel=1e-12)


def test_fit_rejects_wrong_template(ref_a):
    with pytest.raises(ConfigError):
        fit_design_point(ref_a, "S5x10")


def test_built_set_total_energy():
    cs = design_codebooks("S4x6", (2.0, 2.0, 2.0), (0.1, 0.2, 0.3), 3.0, 4)
    validate(cs)
    assert cs.total_energy() == pytest.approx(24.0, rel=1e-12)
    cs = design_codebooks("S5x10", (2.0, 2.0, 2.0, 2.0), (0.1, 0.2, 0.3, 0.4), 3.0, 4)
    assert cs.total_energy() == pytest.approx(40.0, rel=1e-12)


def test_built_set_m8():
    cs = design_codebooks("S4x6", (4.0, 4.0, 4.0), (0.1, 0.2, 0.3), 2.0, 8)
    validate(cs)
    assert cs.total_energy() == pytest.approx(48.0, rel=1e-12)


def test_codebook_compact(ref_a):
    cb = ref_a.codebooks[0]
    np.testing.assert_array_equal(cb.active_resources, [1, 3])
    assert cb.compact.shape == (2, 4)


def test_save_load_roundtrip(tmp_path, ref_a):
    path = tmp_path / "a.json"
    save_codebooks(ref_a, path)
    back = load_codebooks(path)
    np.testing.assert_array_equal(back.entries, ref_a.entries)
    assert back.provenance["origin"] == {"kind": "reference", "id": "A_4x6_M4"}
    assert back.template == "S4x6"


def test_roundtrip_keeps_design_point(tmp_path):
    cs = design_codebooks("S4x6", (2.0, 1.5, 2.5), (0.3, 1.2, 2.9), 2.7, 4)
    back = loads(dumps(cs))
    np.testing.assert_array_equal(back.entries, cs.entries)
    assert back.design_point == {"E": [2.0, 1.5, 2.5], "phi": [0.3, 1.2, 2.9], "omega": 2.7}


def _doc(cs):
    return json.loads(dumps(cs))


def test_three_nonzero_rows_rejected():
    cs = design_codebooks("S4x6", (2.0, 2.0, 2.0), (0.1, 0.2, 0.3), 3.0, 4)
    doc = _doc(cs)
    doc["codebooks"][0][0] = [[0.1, 0.0], [0.1, 0.0], [-0.1, 0.0], [-0.1, 0.0]]
    with pytest.raises(InvariantError, match="N=2 nonzero rows") as info:
        loads(json.dumps(doc))
    assert info.value.invariant == "N=2 nonzero rows"


def test_half_energy_rejected():
    cs = design_codebooks("S4x6", (2.0, 2.0, 2.0), (0.1, 0.2, 0.3), 3.0, 4).scaled(np.sqrt(0.5))
    assert cs.total_energy() == pytest.approx(12.0)
    with pytest.raises(InvariantError, match="normalization"):
        loads(dumps(cs))


def test_broken_symmetry_rejected():
    X = np.array(design_codebooks("S4x6", (2.0, 2.0, 2.0), (0.1, 0.2, 0.3), 3.0, 4).entries)
    X[0, 1, 0] *= -1
    with pytest.raises(InvariantError, match="antipodal symmetry"):
        validate(CodebookSet(X))


@pytest.mark.parametrize("text", ["{not json", "[]", json.dumps({"schema": "other/1"})])
def test_bad_files_rejected(text):
    with pytest.raises(ConfigError):
        loads(text)


def test_shape_mismatch_rejected(ref_a):
    doc = _doc(ref_a)
    doc["M"] = 8
    with pytest.raises(ConfigError, match="shape"):
        loads(json.dumps(doc))


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_codebooks(tmp_path / "missing.json")


def test_schema_tag(ref_a):
    assert _doc(ref_a)["schema"] == SCHEMA


def test_index_tuples_order():
    t = index_tuples(4, 3)
    assert t.shape == (64, 3)
    np.testing.assert_array_equal(t[:3], [[0, 0, 0], [0, 0, 1], [0, 0, 2]])
    np.testing.assert_array_equal(t[-1], [3, 3, 3])


def test_enumeration_count_and_order(ref_a):
    pts = superimposed_points(ref_a)
    assert pts.shape == (4096, 4)
    first = next(iter(enumerate_superimposed(ref_a)))
    assert first[0] == (0,) * 6
    np.testing.assert_allclose(first[1], pts[0])


def test_budget_exceeded_m16():
    cs = design_codebooks("S4x6", (8.0, 8.0, 8.0), (0.1, 0.2, 0.3), 2.0, 16)
    with pytest.raises(BudgetExceededError):
        check_budget(cs)
    with pytest.raises(BudgetExceededError):
        superimposed_points(cs)


def test_superimpose_first_codewords(ref_a):
    y = superimpose(ref_a, [0] * 6)
    np.testing.assert_allclose(y, ref_a.entries[:, :, 0].sum(axis=0))


def test_superimpose_bad_indices(ref_a):
    with pytest.raises(ConfigError):
        superimpose(ref_a, [0] * 5)
    with pytest.raises(ConfigError):
        superimpose(ref_a, [4, 0, 0, 0, 0, 0])


@settings(max_examples=50)
@given(st.lists(st.integers(0, 3), min_size=6, max_size=6))
def test_superimpose_antipodal(idx):
    cs = reference_codebooks("A_4x6_M4")
    flipped = [3 - i for i in idx]
    np.testing.assert_allclose(superimpose(cs, idx), -superimpose(cs, flipped), atol=1e-12)


@settings(max_examples=50)
@given(st.lists(st.integers(0, 3), min_size=6, max_size=6))
def test_superimpose_matches_batch(idx):
    cs = reference_codebooks("A_4x6_M4")
    np.testing.assert_allclose(superimposed_points(cs, [idx])[0], superimpose(cs, idx))


def test_superimposed_mean_energy(ref_a):
    # codewords of distinct users are independent and zero mean
    pts = superimposed_points(ref_a)
    assert np.mean(np.sum(np.abs(pts) ** 2, axis=1)) == pytest.approx(ref_a.total_energy() / 4)
