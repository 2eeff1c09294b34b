from pathlib import Path

import pytest

from apparent_loci.engine import FuzzTask, LociEngine, fuzz_instance, instance_rng
from apparent_loci.errors import IrrationalLocus
from apparent_loci.generator import GeneratorSettings, InstanceGenerator, column_pool, find_atoms, rational_fibres
from apparent_loci.kernel import FuncElem
from apparent_loci.main import load_config, load_fuzz_config
from apparent_loci.places import INFINITY, divisor_of, is_jet_site
from apparent_loci.protocol import FuzzConfig, PlaceModel
from apparent_loci.riemann_roch import SearchPolicy
from apparent_loci.trivializer import dependence_locus, trivialize, verify_certificate

CONFIGS = Path(__file__).parent.parent / "configs"


def small_config(**overrides):
    data = {"curves": [[1, 0, 0, 1]], "ps": [1, 2], "count": 3, "seed": 5}
    data.update(overrides)
    return FuzzConfig.model_validate(data)


def test_rational_fibres_and_atoms(g1):
    fibres = dict(rational_fibres(g1, 6))
    assert fibres[0] == 1 and fibres[2] == 3
    assert -1 not in fibres
    for atom in find_atoms(g1, 6):
        assert all(is_jet_site(q) or q == INFINITY for q in divisor_of(atom).support)


def test_generated_frames_have_rational_loci(curve):
    generator = InstanceGenerator(curve, instance_rng(11, ("generated",), 2, 0))
    for _ in range(5):
        frame = generator.product_frame(2)
        assert not frame.det().is_zero
        locus = dependence_locus(frame)
        assert all(is_jet_site(q) or q == INFINITY for q in locus.places)


def test_generator_settings_from_config():
    settings = GeneratorSettings.from_config({"generator": {"max_atoms": 1, "pool_share": 0}})
    assert settings == GeneratorSettings(max_atoms=1, pool_share=0.0)


def test_column_pool(g1):
    x, y = FuncElem.x(g1), FuncElem.y(g1)
    pool = column_pool(g1, 6)
    assert x in pool and x - 2 in pool
    assert y - 1 in pool and y + 3 in pool
    assert (y - 1) / x in pool and (y + 3) / (x - 2) in pool
    assert x * (x - 2) in pool


def test_pool_frames_trivialize_or_refuse(g1):
    generator = InstanceGenerator(g1, instance_rng(3, ("pool",), 2, 0))
    for _ in range(6):
        frame = generator.pool_frame(2)
        assert not frame.det().is_zero
        try:
            cert = trivialize(frame)
        except IrrationalLocus:
            continue
        assert verify_certificate(cert, frame).passed
        assert cert.count <= cert.bound


def test_single_instance_outcome():
    task = FuzzTask(("1", "0", "0", "1"), 2, 0, 5, PlaceModel(kind="infinity"), SearchPolicy(), GeneratorSettings())
    outcome = fuzz_instance(task)
    assert outcome.status in ("ok", "refused"), outcome.reason
    if outcome.status == "ok":
        assert outcome.count <= 4
        assert outcome.contained


def test_scaled_run():
    engine = LociEngine({})
    summary = engine.run_fuzz(small_config())
    assert [row.p for row in summary.rows] == [1, 2]
    assert summary.failures == []
    for row in summary.rows:
        assert row.instances == 3
        assert row.failures == 0
        assert row.containment_failures == 0
        assert row.max_count <= row.bound
    table = engine.render_fuzz_summary(summary)
    assert len(table.splitlines()) == 2 + len(summary.rows)


def test_runs_are_deterministic():
    engine = LociEngine({})
    first = engine.run_fuzz(small_config(ps=[2], count=2))
    assert engine.run_fuzz(small_config(ps=[2], count=2)) == first
    assert engine.run_fuzz(small_config(ps=[2], count=2, workers=2)) == first


@pytest.mark.slow
@pytest.mark.parametrize("name", ["fuzz.yaml", "fuzz_genus2.yaml"])
def test_acceptance_runs(monkeypatch, name):
    monkeypatch.delenv("APPARENT_LOCI_SEED", raising=False)
    engine = LociEngine(load_config(str(CONFIGS / "settings.yaml")))
    summary = engine.run_fuzz(load_fuzz_config(str(CONFIGS / name)))
    assert summary.failures == []
    for row in summary.rows:
        assert row.failures == 0
        assert row.containment_failures == 0
        assert row.max_count <= row.bound
    assert max(row.max_count for row in summary.rows if row.p > 1) > 1
