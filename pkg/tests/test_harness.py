"""Sweep grids, change censuses, and campaign journaling."""

import io
import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from caledonia import dynamics as dyn
from caledonia import harness
from caledonia import szebehely as sz
from caledonia.core import DomainError, MassRatios, PlanarState

EQUAL4 = MassRatios.csfbp(1.0)
EQUAL5 = MassRatios(0.2, 0.2, 0.2)


def small_spec(**overrides):
    base = dict(ratios=EQUAL5, c0=0.03, e0=1.0, r1_range=(0.1, 0.4),
                r2_range=(0.1, 0.4), step=0.1, max_steps=300)
    base.update(overrides)
    return harness.SweepSpec(**base)


def test_spec_validation():
    with pytest.raises(DomainError):
        small_spec(r1_range=(0.4, 0.1))
    with pytest.raises(DomainError):
        small_spec(r2_range=(-0.1, 0.4))
    with pytest.raises(DomainError):
        small_spec(step=0.0)
    with pytest.raises(DomainError):
        small_spec(perturbation=-1e-6)
    with pytest.raises(DomainError):
        small_spec(perturbation=1e-6)  # reduced mode cannot be perturbed
    with pytest.raises(DomainError):
        small_spec(mode="cs4bp")
    with pytest.raises(DomainError):
        small_spec(e0=0.0)
    small_spec(perturbation=1e-6, mode="general4")


def test_spec_dict_roundtrip():
    spec = small_spec(perturbation=1e-6, mode="general4", max_steps=77)
    data = json.loads(json.dumps(spec.to_dict()))
    assert harness.SweepSpec.from_dict(data) == spec


def test_grid_axes_inclusive():
    spec = small_spec()
    assert spec.r1_values == pytest.approx([0.1, 0.2, 0.3, 0.4])
    assert spec.r2_values == pytest.approx([0.1, 0.2, 0.3, 0.4])


def test_run_sweep_grid_and_csv():
    spec = small_spec()
    grid = harness.run_sweep(spec)
    assert len(grid.codes) == 4 and all(len(row) == 4 for row in grid.codes)
    assert set(grid.counts()) <= set(harness.ALL_CODES)
    buffer = io.StringIO()
    grid.write_csv(buffer)
    lines = buffer.getvalue().splitlines()
    assert lines[0] == "r1,r2,code"
    assert len(lines) == 17
    assert lines[1].startswith("0.1,0.1,")


def test_sweep_diagonal_cells_forbidden():
    grid = harness.run_sweep(small_spec())
    for i in range(4):
        assert grid.cell(i, i) == harness.CODE_FORBIDDEN


def test_sweep_forbidden_set_swap_symmetric():
    """Energetics are swap-symmetric for equal masses, whatever the orbits do."""
    grid = harness.run_sweep(small_spec(max_steps=1))
    for i in range(4):
        for j in range(4):
            lhs = grid.cell(i, j) == harness.CODE_FORBIDDEN
            rhs = grid.cell(j, i) == harness.CODE_FORBIDDEN
            assert lhs == rhs


def test_sweep_serial_parallel_identical():
    spec = small_spec(max_steps=150)
    assert harness.run_sweep(spec, jobs=1) == harness.run_sweep(spec, jobs=2)


def test_no_single_binary_collisions_in_double_binary_arm():
    """Above the critical constant the double-binary band cannot reach a
    single-binary collision."""
    c0 = sz.csfbp_normalize(60.0, 1.0)
    assert c0 > sz.ladder(EQUAL4).c_crit
    spec = harness.SweepSpec(ratios=EQUAL4, c0=c0, e0=1.0,
                             r1_range=(0.02, 0.2), r2_range=(0.02, 0.2),
                             step=0.02, max_steps=1000)
    grid = harness.run_sweep(spec, jobs=2)
    part = sz.region_partition(c0, EQUAL4)
    checked = 0
    for i, r1x in enumerate(spec.r1_values):
        for j, r2x in enumerate(spec.r2_values):
            band = part.classify(r1x, r2x, r12=abs(r1x - r2x), r14=r1x + r2x)
            if band in ("12", "14") and grid.cell(i, j) != harness.CODE_FORBIDDEN:
                checked += 1
                assert grid.cell(i, j) not in ("C13", "C24")
    assert checked >= 10


def test_equal_mass_relabel_symmetry():
    """Swapping the pair roles in the state relabels the outcome 13 <-> 24."""
    part = sz.region_partition(0.03, EQUAL5)
    swap = {"12": "12", "14": "14", "13": "24", "24": "13"}
    config = dyn.IntegratorConfig(max_steps=600)
    for a, b in ((0.05, 0.1), (0.25, 0.367), (0.1, 0.35)):
        state = dyn.initial_state(a, b, 0.03, 1.0, EQUAL5)
        mirror = PlanarState(0.0, state.r2, state.r1, state.v2, state.v1)
        one = dyn.integrate(state, EQUAL5, partition=part, config=config)
        two = dyn.integrate(mirror, EQUAL5, partition=part, config=config)
        assert two.terminal == one.terminal
        assert two.pair == (swap[one.pair] if one.pair else None)
        relabeled = tuple((swap[f], swap[t]) for _, f, t in one.hierarchy_changes)
        assert tuple((f, t) for _, f, t in two.hierarchy_changes) == relabeled


@given(st.lists(st.integers(min_value=0, max_value=10_000),
                min_size=12, max_size=12))
def test_change_table_percentages(counts):
    table = harness.ChangeTable(counts=tuple(counts))
    if table.total == 0:
        assert table.percentages == tuple(0.0 for _ in range(12))
    else:
        assert sum(table.percentages) == pytest.approx(100.0, abs=0.5)


def test_change_table_structure():
    with pytest.raises(DomainError):
        harness.ChangeTable(counts=(0,) * 11)
    changes = [(0.1, "12", "13"), (0.2, "13", "12"), (0.3, "12", "13")]
    table = harness.ChangeTable.from_changes(changes)
    assert table.total == 3
    assert table.counts[harness.TRANSITIONS.index(("12", "13"))] == 2
    buffer = io.StringIO()
    table.write_csv(buffer)
    lines = buffer.getvalue().splitlines()
    assert lines[0] == "from,to,count,percent"
    assert len(lines) == 13
    assert lines[1] == "12,13,2,66.7"


def test_census_matches_direct_integration():
    part = sz.region_partition(0.03, EQUAL5)
    state = dyn.initial_state(0.25, 0.367, 0.03, 1.0, EQUAL5)
    out = dyn.integrate(state, EQUAL5, partition=part,
                        config=dyn.IntegratorConfig(max_steps=800))
    table = harness.run_change_census(EQUAL5, 0.03, 1.0, [(0.25, 0.367)],
                                      max_steps=800)
    assert table.total == len(out.hierarchy_changes)
    assert table.total > 0


def test_census_skips_forbidden_and_diagonal():
    table = harness.run_change_census(EQUAL5, 0.03, 1.0,
                                      [(0.2, 0.2), (20.0, 30.0)], max_steps=50)
    assert table.total == 0


def test_grid_pairs_row_major():
    pairs = harness.grid_pairs([0.1, 0.2], [0.3, 0.4])
    assert pairs == [(0.1, 0.3), (0.1, 0.4), (0.2, 0.3), (0.2, 0.4)]


def test_campaign_rerun_is_noop(tmp_path):
    spec = small_spec(max_steps=100)
    path = tmp_path / "camp"
    harness.run_sweep(spec, campaign_path=path)
    first_grid = (path / "grid.csv").read_bytes()
    first_journal = (path / "journal.csv").read_bytes()
    harness.run_sweep(spec, campaign_path=path)
    assert (path / "grid.csv").read_bytes() == first_grid
    assert (path / "journal.csv").read_bytes() == first_journal


def test_campaign_resume_after_interruption(tmp_path):
    spec = small_spec(max_steps=100)
    full = tmp_path / "full"
    harness.run_sweep(spec, campaign_path=full)
    reference = (full / "grid.csv").read_bytes()

    cut = tmp_path / "cut"
    harness.run_sweep(spec, campaign_path=cut)
    journal = (cut / "journal.csv").read_text().splitlines(keepends=True)
    (cut / "journal.csv").write_text("".join(journal[: len(journal) // 2]))
    (cut / "grid.csv").unlink()
    harness.run_sweep(spec, campaign_path=cut)
    assert (cut / "grid.csv").read_bytes() == reference


def test_campaign_refuses_corrupt_journal(tmp_path):
    spec = small_spec(max_steps=100)
    path = tmp_path / "camp"
    harness.run_sweep(spec, campaign_path=path)
    with open(path / "journal.csv", "a") as fh:
        fh.write("0,0,STABLE,extra\n")
    with pytest.raises(harness.CampaignError, match="resume refused"):
        harness.run_sweep(spec, campaign_path=path)


def test_campaign_refuses_unknown_code(tmp_path):
    spec = small_spec(max_steps=100)
    path = tmp_path / "camp"
    harness.run_sweep(spec, campaign_path=path)
    with open(path / "journal.csv", "a") as fh:
        fh.write('"9,9",NONSENSE\n')
    with pytest.raises(harness.CampaignError, match="resume refused"):
        harness.run_sweep(spec, campaign_path=path)


def test_campaign_refuses_mismatched_manifest(tmp_path):
    path = tmp_path / "camp"
    harness.run_sweep(small_spec(max_steps=100), campaign_path=path)
    with pytest.raises(harness.CampaignError, match="resume refused"):
        harness.run_sweep(small_spec(max_steps=101), campaign_path=path)


def test_campaign_manifest_echoes_spec(tmp_path):
    spec = small_spec(max_steps=100)
    path = tmp_path / "camp"
    harness.run_sweep(spec, campaign_path=path)
    with open(path / "manifest.json") as fh:
        manifest = json.load(fh)
    assert manifest["kind"] == "sweep"
    assert manifest["definition"] == json.loads(json.dumps(spec.to_dict()))
    assert "caledonia" in manifest["versions"]


def test_census_campaign_resume(tmp_path):
    pairs = harness.grid_pairs(np.linspace(0.15, 0.35, 3),
                               np.linspace(0.2, 0.4, 3))
    path = tmp_path / "census"
    table = harness.run_change_census(EQUAL5, 0.03, 1.0, pairs,
                                      max_steps=300, campaign_path=path)
    journal = (path / "journal.csv").read_text().splitlines(keepends=True)
    (path / "journal.csv").write_text("".join(journal[:4]))
    resumed = harness.run_change_census(EQUAL5, 0.03, 1.0, pairs,
                                        max_steps=300, campaign_path=path)
    assert resumed == table
