"""Property suites: round trips, invariants, determinism, scale invariance."""
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from xfermon.diagnose import RuleConfig, classify, fit_baseline
from xfermon.metrics import (
    MINIMAL_NAMES,
    MetricEnvelope,
    Profile,
    catalog,
    decode_envelope,
    encode_envelope,
)
from xfermon.sim import AnomalyClass, Engine, build_run, get_testbed, run_rows

from tests.test_sim import assert_conservation_and_capacity, random_run


# ----------------------------------------------------------------------
# envelope round trip
# ----------------------------------------------------------------------

finite_values = st.floats(
    min_value=0.0, max_value=1e15, allow_nan=False, allow_infinity=False
)


@st.composite
def envelopes(draw):
    profile = draw(st.sampled_from(list(Profile)))
    names = [k.name for k in catalog(profile)]
    values = {name: draw(finite_values) for name in names}
    return MetricEnvelope(
        transfer_id=draw(st.text(min_size=1, max_size=24).filter(lambda s: len(s.encode()) <= 64)),
        testbed_id=draw(st.text(min_size=1, max_size=12).filter(lambda s: len(s.encode()) <= 64)),
        timestamp=draw(st.integers(min_value=0, max_value=0xFFFFFFFF)),
        profile=profile,
        values=values,
    )


@settings(max_examples=200, deadline=None)
@given(envelopes())
def test_envelope_roundtrip_is_identity(env):
    assert decode_envelope(encode_envelope(env)) == env


# ----------------------------------------------------------------------
# simulator invariants over many random runs
# ----------------------------------------------------------------------

def test_conservation_and_capacity_over_1000_random_runs():
    rng = random.Random(777)
    for _ in range(1000):
        assert_conservation_and_capacity(random_run(rng))


def test_simulation_determinism_across_engines():
    rng = random.Random(31337)
    for _ in range(20):
        run = random_run(rng)
        snaps_a = [s.transfer_rates for s in Engine(run).run_all()]
        snaps_b = [s.transfer_rates for s in Engine(run).run_all()]
        assert snaps_a == snaps_b


# ----------------------------------------------------------------------
# classifier determinism and scale invariance
# ----------------------------------------------------------------------

@pytest.fixture(scope="module")
def labeled_windows():
    tb = get_testbed("tb4")
    out = []
    for cls in (
        AnomalyClass.NORMAL,
        AnomalyClass.NETWORK_LOSS,
        AnomalyClass.NETWORK_CONGESTION,
        AnomalyClass.SENDER_OST_READ_CONGESTION,
        AnomalyClass.RECEIVER_CLIENT_WRITE_CONGESTION,
        AnomalyClass.SENDER_TCP_BUFFER_MISCONFIG,
    ):
        run, _ = build_run(tb, cls, 0, seed=55, duration_s=10)
        rows = [r.metrics for r in run_rows(run, cls)]
        out.append((cls, rows))
    normal_rows = [r for cls, rows in out if cls is AnomalyClass.NORMAL for r in rows]
    baseline = fit_baseline(normal_rows, tb.id)
    return baseline, out


BYTE_SCALED = [n for n in MINIMAL_NAMES if n.endswith("_bytes_per_s") or n.endswith("_bytes")]


def scale_row(row, c):
    return {k: (v * c if k in BYTE_SCALED else v) for k, v in row.items()}


def scale_baseline(base, c):
    from xfermon.diagnose import BaselineProfile

    return BaselineProfile(
        testbed_id=base.testbed_id,
        means={k: (v * c if k in BYTE_SCALED else v) for k, v in base.means.items()},
        stds={k: (v * c if k in BYTE_SCALED else v) for k, v in base.stds.items()},
        normal_rtt_us=base.normal_rtt_us,
        normal_throughput=base.normal_throughput * c,
        disk_read_max=base.disk_read_max * c,
        disk_write_max=base.disk_write_max * c,
        bdp_bytes=base.bdp_bytes * c,
        run_count=base.run_count,
        row_count=base.row_count,
    )


@settings(max_examples=40, deadline=None)
@given(st.floats(min_value=1e-3, max_value=1e3, allow_nan=False))
def test_scale_invariance_of_diagnosis(labeled_windows, c):
    baseline, window_sets = labeled_windows
    scaled_base = scale_baseline(baseline, c)
    for cls, rows in window_sets:
        original = classify(rows, baseline)
        scaled = classify([scale_row(r, c) for r in rows], scaled_base)
        assert scaled.label is original.label
        assert scaled.fired_rule is original.fired_rule


def test_diagnosis_deterministic_incl_evidence(labeled_windows):
    baseline, window_sets = labeled_windows
    for cls, rows in window_sets:
        a = classify(rows, baseline, transfer_id="d", window_start=0)
        b = classify(rows, baseline, transfer_id="d", window_start=0)
        assert a == b
        assert a.evidence == b.evidence


def test_diagnoses_match_injected_classes(labeled_windows):
    baseline, window_sets = labeled_windows
    for cls, rows in window_sets:
        assert classify(rows, baseline).label is cls


# ----------------------------------------------------------------------
# rule config environment overrides
# ----------------------------------------------------------------------

def test_rule_config_env_override(tmp_path):
    p = tmp_path / "rules.json"
    p.write_text('{"kappa_buf": 0.8, "window_s": 12}')
    cfg = RuleConfig.load(p, env={})
    assert cfg.kappa_buf == 0.8
    assert cfg.window_s == 12
    cfg2 = RuleConfig.load(p, env={"XFERMON_KAPPA_BUF": "0.5", "XFERMON_RTT_FACTOR": "2.0"})
    assert cfg2.kappa_buf == 0.5
    assert cfg2.rtt_factor == 2.0
    assert cfg2.window_s == 12
    with pytest.raises(ValueError, match="unknown rule config keys"):
        bad = tmp_path / "bad.json"
        bad.write_text('{"kappa_nope": 1}')
        RuleConfig.load(bad, env={})


def test_rule_config_rejects_bad_window(tmp_path):
    with pytest.raises(ValueError):
        RuleConfig.load(None, env={"XFERMON_WINDOW_S": "0"})
