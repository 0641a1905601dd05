"""Min-entropy of avf outputs versus a hash, over sampled curve points.

Two estimators are provided: the per-bit most-common-value bound (sum over
bit positions of -log2 max(p0, p1)) and a binary context-tree-weighting
coding length expressed as a percentage of the raw length.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.special import gammaln

from tpmke.curves import ENTROPY_TARGETS
from tpmke.group import AvfVariant, GroupParams, Point, avf, reference_hash, sample_points

FUNCTIONS = ("avf", "avf'", "sha2")
DEFAULT_N = 16384
DEFAULT_DEPTH = 16
GATE_N = 16384
NIST_TOLERANCE = 1.5
CTW_FLOOR = 97.0


@dataclass
class SampleSet:
    curve: str
    function: str
    width: int
    bits: np.ndarray  # shape (n, width), dtype uint8, MSB first
    seed: int

    @property
    def n(self) -> int:
        return self.bits.shape[0]

    @classmethod
    def from_ints(cls, values, width: int, curve="synthetic", function="raw", seed=0):
        return cls(curve, function, width, ints_to_bits(values, width), seed)

    def pin_lsbs(self, k: int, value: int = 0) -> SampleSet:
        """Copy with the k least significant bits of every sample forced to ``value``'s bits."""
        bits = self.bits.copy()
        for j in range(k):
            bits[:, self.width - 1 - j] = (value >> j) & 1
        return SampleSet(self.curve, f"{self.function}/pin{k}", self.width, bits, self.seed)


@dataclass
class EntropyReport:
    curve: str
    function: str
    n: int
    width: int
    seed: int
    depth: int
    nist_bits: float
    ctw_ratio: float | None

    def to_dict(self) -> dict:
        return asdict(self)


class InsufficientData(ValueError):
    pass


def ints_to_bits(values, width: int) -> np.ndarray:
    if width < 1:
        raise ValueError("zero-width samples")
    nbytes = (width + 7) // 8
    raw = b"".join(int(v).to_bytes(nbytes, "big") for v in values)
    arr = np.frombuffer(raw, dtype=np.uint8).reshape(-1, nbytes)
    bits = np.unpackbits(arr, axis=1)
    return np.ascontiguousarray(bits[:, nbytes * 8 - width:])


def nist_min_entropy(samples: SampleSet) -> float:
    """Sum over bit positions of -log2(max(p0, p1))."""
    if samples.width < 1 or samples.bits.shape[1] == 0:
        raise ValueError("zero-width samples")
    if samples.n < 2:
        raise InsufficientData("need at least two samples")
    p1 = samples.bits.mean(axis=0, dtype=np.float64)
    pmax = np.maximum(p1, 1.0 - p1)
    return float(np.log2(1.0 / pmax).sum())


def _log_kt(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # natural-log KT block probability of a zeros and b ones
    return gammaln(a + 0.5) + gammaln(b + 0.5) - gammaln(a + b + 1.0) - math.log(math.pi)


def ctw_coding_bits(bits: np.ndarray, depth: int = DEFAULT_DEPTH) -> float:
    """CTW code length, in bits, of a flat 0/1 sequence.

    Contexts come from the preceding ``depth`` bits with zeros before the
    start.  Because the weighted probability depends only on the final
    per-node counts, the tree is built bottom-up from leaf counts.
    """
    bits = np.asarray(bits, dtype=np.int64).ravel()
    nbits = bits.size
    if nbits < (1 << depth):
        raise InsufficientData(f"{nbits} bits is less than 2^{depth}")
    ctx = np.zeros(nbits, dtype=np.int64)
    for k in range(1, depth + 1):
        ctx[k:] |= bits[:-k] << (k - 1)
    counts = np.bincount(ctx * 2 + bits, minlength=1 << (depth + 1)).reshape(-1, 2).astype(np.float64)
    log_half = math.log(0.5)
    log_pw = _log_kt(counts[:, 0], counts[:, 1])
    for d in range(depth - 1, -1, -1):
        half = 1 << d
        counts = counts[:half] + counts[half:]
        children = log_pw[:half] + log_pw[half:]
        log_pw = np.logaddexp(log_half + _log_kt(counts[:, 0], counts[:, 1]), log_half + children)
    return float(-log_pw[0] / math.log(2))


def ctw_ratio(samples: SampleSet, depth: int = DEFAULT_DEPTH) -> float:
    """CTW coding length of the concatenated samples as a percentage of their raw length."""
    flat = samples.bits.ravel()
    return 100.0 * ctw_coding_bits(flat, depth) / flat.size


def function_width(curve: GroupParams, function: str) -> int:
    if function == "avf'":
        return curve.avf_policy(AvfVariant.SM2).bits + 1
    if function in ("avf", "sha2"):
        return curve.avf_policy(AvfVariant.MQV).bits + 1
    raise ValueError(f"unknown function {function!r}; known: {', '.join(FUNCTIONS)}")


def evaluate(curve: GroupParams, function: str, points: list[Point], seed: int = 0) -> SampleSet:
    width = function_width(curve, function)
    if function == "avf":
        pol = curve.avf_policy(AvfVariant.MQV)
        values = [avf(P, pol) for P in points]
    elif function == "avf'":
        pol = curve.avf_policy(AvfVariant.SM2)
        values = [avf(P, pol) for P in points]
    else:
        values = [reference_hash(P, width) for P in points]
    return SampleSet(curve.name, function, width, ints_to_bits(values, width), seed)


def run_curve_report(curve: GroupParams, functions=FUNCTIONS, n: int = DEFAULT_N,
                     seed: int = 0, depth: int = DEFAULT_DEPTH,
                     running_step: int | None = None):
    """Reports for each function over one shared set of n sampled points.

    With ``running_step`` set, also returns running NIST estimates as
    (function, samples so far, bits) rows.
    """
    points = sample_points(curve, n, seed)
    reports, running = [], []
    for fn in functions:
        s = evaluate(curve, fn, points, seed)
        try:
            ratio = ctw_ratio(s, depth)
        except InsufficientData:
            ratio = None
        reports.append(EntropyReport(curve.name, fn, n, s.width, seed, depth,
                                     nist_min_entropy(s), ratio))
        if running_step:
            running += [(curve.name, fn, k, h) for k, h in running_entropy(s, running_step)]
    if running_step:
        return reports, running
    return reports


def running_entropy(samples: SampleSet, step: int = 1024) -> list[tuple[int, float]]:
    """NIST estimate on the first k samples for k = step, 2*step, ..."""
    out = []
    for k in range(step, samples.n + 1, step):
        sub = SampleSet(samples.curve, samples.function, samples.width, samples.bits[:k], samples.seed)
        out.append((k, nist_min_entropy(sub)))
    return out


# -- gating -----------------------------------------------------------------

def gate_failures(reports: list[EntropyReport]) -> list[str]:
    """Out-of-tolerance findings for curves with published targets.

    Only runs at the published sample count are gated.
    """
    failures = []
    for r in reports:
        target = ENTROPY_TARGETS.get(r.curve)
        if target is None or r.n != GATE_N:
            continue
        variant, avf_bits, hash_bits = target
        want = None
        if r.function == ("avf" if variant == "mqv" else "avf'"):
            want = avf_bits
        elif r.function == "sha2" and hash_bits is not None:
            want = hash_bits
        if want is None:
            continue
        if abs(r.nist_bits - want) > NIST_TOLERANCE:
            failures.append(f"{r.curve} {r.function}: NIST {r.nist_bits:.2f} not within "
                            f"{want} +/- {NIST_TOLERANCE}")
        if r.curve == "P-256" and (r.ctw_ratio is None or r.ctw_ratio < CTW_FLOOR):
            failures.append(f"{r.curve} {r.function}: CTW ratio {r.ctw_ratio} below {CTW_FLOOR}%")
    return failures


# -- output -----------------------------------------------------------------

CSV_COLUMNS = ["curve", "function", "estimator", "value", "unit", "n", "width", "seed", "depth"]
RUNNING_COLUMNS = ["curve", "function", "samples", "nist_bits"]


def reports_csv(reports: list[EntropyReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in reports:
        common = [r.n, r.width, r.seed, r.depth]
        w.writerow([r.curve, r.function, "nist", f"{r.nist_bits:.6f}", "bits", *common])
        ratio = "" if r.ctw_ratio is None else f"{r.ctw_ratio:.6f}"
        w.writerow([r.curve, r.function, "ctw", ratio, "percent", *common])
    return buf.getvalue()


def running_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RUNNING_COLUMNS)
    for curve, fn, k, h in rows:
        w.writerow([curve, fn, k, f"{h:.6f}"])
    return buf.getvalue()


def reports_json(reports: list[EntropyReport], failures: list[str] | None = None) -> str:
    doc = {"version": 1, "reports": [r.to_dict() for r in reports]}
    if failures is not None:
        doc["gate_failures"] = failures
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"
