import csv
import hashlib
import io
import json
import math

import jsonschema
import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.stats import binom

from tpmke import entropy
from tpmke.cli import load_schema
from tpmke.curves import TOY
from tpmke.entropy import (InsufficientData, SampleSet, ctw_coding_bits, ctw_ratio,
                           nist_min_entropy, run_curve_report)
from tpmke.group import mock_fixed_lsb_group, sample_points


def sequential_ctw_bits(bits, depth):
    """Textbook per-symbol CTW with explicit nodes; the vectorized version must agree."""
    nodes = {}  # context tuple -> [a, b, log_pe, log_pw]

    def node(ctx):
        return nodes.setdefault(ctx, [0, 0, 0.0, 0.0])

    history = [0] * depth
    for bit in bits:
        ctx = tuple(reversed(history[-depth:])) if depth else ()
        path = [ctx[:d] for d in range(depth, -1, -1)]
        for c in path:
            n = node(c)
            a, b = n[0], n[1]
            n[2] += math.log(((b if bit else a) + 0.5) / (a + b + 1))
            n[0 if bit == 0 else 1] += 1
            if len(c) == depth:
                n[3] = n[2]
            else:
                kids = 0.0
                for k in (0, 1):
                    child = nodes.get(c + (k,))
                    kids += child[3] if child else 0.0
                n[3] = np.logaddexp(math.log(0.5) + n[2], math.log(0.5) + kids)
        history.append(bit)
    return -nodes[()][3] / math.log(2)


@given(st.lists(st.integers(0, 1), min_size=16, max_size=300), st.integers(0, 4))
def test_ctw_matches_sequential_oracle(bits, depth):
    if len(bits) < 2 ** depth:
        return
    assert ctw_coding_bits(np.array(bits), depth) == pytest.approx(sequential_ctw_bits(bits, depth), abs=1e-8)


def test_kt_block_probability_closed_form():
    # KT for "0011": 1/2 * 3/4 * 1/6 * 3/8 = 3/128
    assert ctw_coding_bits(np.array([0, 0, 1, 1]), 0) == pytest.approx(-math.log2(3 / 128))


def test_nist_constant_is_zero():
    s = SampleSet.from_ints([0x1F] * 100, 8)
    assert nist_min_entropy(s) == 0.0


def test_nist_alternating_single_bit():
    s = SampleSet.from_ints([0, 1] * 50, 1)
    assert nist_min_entropy(s) == 1.0


def expected_uniform_estimate(width, n):
    """Exact E[estimate] for uniform bits: sum over the Binomial(n, 1/2) count."""
    k = np.arange(n + 1)
    pmax = np.maximum(k, n - k) / n
    return width * float(np.sum(binom.pmf(k, n, 0.5) * -np.log2(pmax)))


def test_nist_matches_direct_count():
    rng = np.random.default_rng(1)
    vals = rng.integers(0, 256, 4096).tolist()
    direct = 0.0
    for i in range(8):
        ones = sum((v >> i) & 1 for v in vals)
        direct += -math.log2(max(ones, len(vals) - ones) / len(vals))
    assert nist_min_entropy(SampleSet.from_ints(vals, 8)) == pytest.approx(direct, abs=1e-12)


def test_nist_uniform_bytes_near_expected():
    # the estimator is biased low by about 0.14 bit at this n, so the
    # comparison point is its exact expectation rather than 8.0 itself
    target = expected_uniform_estimate(8, 4096)
    assert 7.85 < target < 7.86
    for seed in range(20):
        rng = np.random.default_rng(seed)
        s = SampleSet.from_ints(rng.integers(0, 256, 4096).tolist(), 8)
        assert abs(nist_min_entropy(s) - target) < 0.15


def test_nist_errors():
    with pytest.raises(ValueError):
        SampleSet.from_ints([1, 2], 0)
    with pytest.raises(InsufficientData):
        nist_min_entropy(SampleSet.from_ints([1], 4))


def test_ctw_degenerate_inputs():
    zeros = SampleSet.from_ints([0] * 8192, 16)
    assert ctw_ratio(zeros) < 5.0
    pattern = SampleSet.from_ints([0b0101010101010101] * 8192, 16)
    assert ctw_ratio(pattern) < 10.0


def test_ctw_hash_outputs_incompressible():
    vals = [int.from_bytes(hashlib.sha256(i.to_bytes(4, "big")).digest()[:8], "big")
            for i in range(16384)]
    assert ctw_ratio(SampleSet.from_ints(vals, 64)) >= 97.0


def test_ctw_insufficient_data():
    with pytest.raises(InsufficientData):
        ctw_ratio(SampleSet.from_ints([1, 2, 3], 8), depth=16)


def test_pinning_lsbs_reduces_estimate():
    s = entropy.evaluate(TOY, "sha2", sample_points(TOY, 8192, 2))
    base = nist_min_entropy(s)
    for k in (1, 4, 8):
        drop = base - nist_min_entropy(s.pin_lsbs(k, 0b10110101))
        assert abs(drop - k) < 0.5


def test_toy_report_shape_and_bounds():
    reports = run_curve_report(TOY, n=8192, seed=1)
    by_fn = {r.function: r for r in reports}
    assert by_fn["avf"].width == TOY.avf_policy("mqv").bits + 1 == 9
    assert by_fn["avf'"].width == 8
    for r in reports:
        assert 0 <= r.nist_bits <= r.width
        assert r.ctw_ratio is not None and 0 < r.ctw_ratio <= 101


def test_mock_group_avf_has_no_entropy_but_hash_does():
    M = mock_fixed_lsb_group(8, 0x5A)
    reports = {r.function: r for r in run_curve_report(M, n=4096, seed=1, depth=10)}
    assert reports["avf"].nist_bits == 0.0
    assert reports["avf"].ctw_ratio < 5
    assert reports["sha2"].nist_bits > reports["sha2"].width - 0.3


def test_reports_deterministic():
    a = run_curve_report(TOY, n=2048, seed=9, depth=12)
    b = run_curve_report(TOY, n=2048, seed=9, depth=12)
    assert a == b
    assert entropy.reports_csv(a) == entropy.reports_csv(b)


def test_running_entropy_rows():
    reports, running = run_curve_report(TOY, ["avf"], n=4096, seed=0, running_step=1024)
    assert [r[2] for r in running] == [1024, 2048, 3072, 4096]
    assert running[-1][3] == pytest.approx(reports[0].nist_bits)
    text = entropy.running_csv(running)
    assert text.splitlines()[0] == ",".join(entropy.RUNNING_COLUMNS)


def test_csv_and_json_outputs():
    reports = run_curve_report(TOY, n=1024, seed=0, depth=8)
    rows = list(csv.DictReader(io.StringIO(entropy.reports_csv(reports))))
    assert len(rows) == 2 * len(reports)
    assert {r["estimator"] for r in rows} == {"nist", "ctw"}
    assert list(rows[0]) == entropy.CSV_COLUMNS
    doc = json.loads(entropy.reports_json(reports, []))
    jsonschema.validate(doc, load_schema("entropy-report"))


def test_gate_only_applies_at_published_n():
    fake = entropy.EntropyReport("P-256", "avf", 1000, 129, 0, 16, 10.0, 50.0)
    assert entropy.gate_failures([fake]) == []
    fake.n = entropy.GATE_N
    assert len(entropy.gate_failures([fake])) == 2


def test_unknown_function():
    with pytest.raises(ValueError):
        entropy.function_width(TOY, "md5")


def test_ctw_constant_with_long_zero_run():
    # a constant whose zero run exceeds the context depth leaves one context
    # ambiguous, so depth-16 CTW cannot get below about 6%
    s = SampleSet.from_ints([0xABC] * 16384, 129)
    assert nist_min_entropy(s) == 0.0
    assert 5.0 < ctw_ratio(s) < 7.0
    assert ctw_ratio(SampleSet.from_ints([0] * 16384, 129)) < 0.01
