"""Detecting hidden messages.

Two detectors: comparison against a signal known to be clean, and the
classical pair-of-values chi-square attack on sequential LSB embedding.
``evaluate_detectors`` runs either over a generated corpus of clean and
stego carriers and tabulates how well it does.
"""

from __future__ import annotations

import json
import string
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.stats import chi2

from .core import frame_message
from .errors import DomainError, IncompatibleSignals, TooFewSamples
from .lsb import FloatSeries, PcmClip, RasterImage, embed_lsb
from .motion import Trajectory2D
from .timing import EventTimeline

STEGO, CLEAN, INCONCLUSIVE = "stego", "clean", "inconclusive"
CHI_STEGO_P = 0.95
CHI_CLEAN_P = 0.05


@dataclass(frozen=True)
class DetectionReport:
    verdict: str
    score: float
    method: str
    threshold: float

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_text(self) -> str:
        return (f"method     {self.method}\nverdict    {self.verdict}\n"
                f"score      {self.score:.6g}\nthreshold  {self.threshold:.6g}\n")


# --- reference comparison -----------------------------------------------------

def _elements(signal) -> np.ndarray:
    if isinstance(signal, RasterImage):
        return signal.samples
    if isinstance(signal, PcmClip):
        return signal.samples
    if isinstance(signal, FloatSeries):
        return signal.values.ravel()
    if isinstance(signal, (bytes, bytearray)):
        return np.frombuffer(bytes(signal), dtype=np.uint8)
    return np.asarray(signal).ravel()


def _dtw_gap_deviation(ref: np.ndarray, sus: np.ndarray) -> float:
    """Mean absolute pause difference along the best monotone alignment."""
    n, m = ref.size, sus.size
    cost = np.full((n + 1, m + 1), np.inf)
    steps = np.zeros((n + 1, m + 1), dtype=np.int64)
    cost[0, 0] = 0.0
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            d = abs(ref[i - 1] - sus[j - 1])
            choices = ((cost[i - 1, j - 1], steps[i - 1, j - 1]),
                       (cost[i - 1, j], steps[i - 1, j]),
                       (cost[i, j - 1], steps[i, j - 1]))
            c, s = min(choices, key=lambda cs: cs[0])
            cost[i, j] = c + d
            steps[i, j] = s + 1
    return float(cost[n, m] / steps[n, m])


def reference_compare(reference, suspect, tolerance: float = 0.0) -> DetectionReport:
    """Compare a suspect signal with a known-good one of the same kind.

    The score is the fraction of differing samples for images, audio, float
    series and raw bytes; the time-warped mean pause deviation (seconds) for
    utterance timelines; the RMS lateral deviation (metres) for trajectories.
    Verdict is stego when the score exceeds ``tolerance``.
    """
    if type(reference) is not type(suspect) and not (
        isinstance(reference, (bytes, bytearray)) and isinstance(suspect, (bytes, bytearray))
    ):
        raise IncompatibleSignals(
            f"cannot compare {type(reference).__name__} with {type(suspect).__name__}"
        )
    if isinstance(reference, EventTimeline):
        if len(reference) < 2 or len(suspect) < 2:
            raise IncompatibleSignals("timelines need at least two utterances")
        score = _dtw_gap_deviation(reference.gaps, suspect.gaps)
    elif isinstance(reference, Trajectory2D):
        lo, hi = max(reference.t[0], suspect.t[0]), min(reference.t[-1], suspect.t[-1])
        keep = (reference.t >= lo) & (reference.t <= hi)
        if hi < lo or not keep.any():
            raise IncompatibleSignals("trajectories do not overlap in time")
        dev = np.interp(reference.t[keep], suspect.t, suspect.x) - reference.x[keep]
        score = float(np.sqrt(np.mean(dev * dev)))
    else:
        if isinstance(reference, RasterImage) and (
            (reference.width, reference.height, reference.channels)
            != (suspect.width, suspect.height, suspect.channels)
        ):
            raise IncompatibleSignals("images differ in geometry")
        a, b = _elements(reference), _elements(suspect)
        if a.shape != b.shape:
            raise IncompatibleSignals(f"signals have {a.size} and {b.size} elements")
        if a.size == 0:
            raise IncompatibleSignals("empty signals")
        score = float(np.count_nonzero(a != b)) / a.size
    verdict = STEGO if score > tolerance else CLEAN
    return DetectionReport(verdict, score, "reference_compare", float(tolerance))


# --- chi-square attack ----------------------------------------------------------

def chi_square_statistic(samples) -> tuple[float, int]:
    """Pair-of-values statistic and degrees of freedom.

    Full-capacity LSB embedding equalises the counts of each value pair
    (2k, 2k+1). Pairs with an expected count below 5 are left out.
    """
    data = _elements(samples).astype(np.int64)
    if data.size < 256:
        raise TooFewSamples(f"need at least 256 samples, got {data.size}")
    lo = data.min()
    hist = np.bincount(data - lo + (lo & 1))  # align so bin 0 is even
    if hist.size % 2:
        hist = np.append(hist, 0)
    even, odd = hist[0::2], hist[1::2]
    expected = (even + odd) / 2.0
    keep = expected >= 5
    if keep.sum() < 2:
        return 0.0, 1
    stat = float(np.sum((even[keep] - expected[keep]) ** 2 / expected[keep]))
    return stat, int(keep.sum() - 1)


def chi_square_lsb(samples) -> DetectionReport:
    """Westfeld-Pfitzmann test. High p means pairs look equalised (stego).

    Verdict is stego above p=0.95, clean below p=0.05, inconclusive between.
    """
    stat, dof = chi_square_statistic(samples)
    p = float(chi2.sf(stat, dof))
    if p > CHI_STEGO_P:
        verdict = STEGO
    elif p < CHI_CLEAN_P:
        verdict = CLEAN
    else:
        verdict = INCONCLUSIVE
    return DetectionReport(verdict, p, "chi_square", CHI_STEGO_P)


# --- corpora ------------------------------------------------------------------

def natural_image(rng: np.random.Generator, shape=(1024, 1024), mean: float = 128.0, sigma: float = 30.0) -> RasterImage:
    """Cover with i.i.d. Gaussian intensities.

    The smooth histogram slope is what separates a cover from full-capacity
    LSB noise under the chi-square test, and that signal grows with the pixel
    count (roughly ``N / (8 sigma^2)`` on the statistic), so covers for that
    test should have on the order of a million pixels.
    """
    pixels = np.clip(np.rint(rng.normal(mean, sigma, size=shape)), 0, 255).astype(np.uint8)
    return RasterImage.from_array(pixels)


def random_message(rng: np.random.Generator, min_len: int = 1, max_len: int = 32) -> str:
    alphabet = string.ascii_letters + string.digits + " !?.,"
    n = int(rng.integers(min_len, max_len + 1))
    return "".join(alphabet[i] for i in rng.integers(0, len(alphabet), size=n))


@dataclass(frozen=True)
class CorpusSpec:
    """Clean/stego image pairs.

    ``capacity`` is the fraction of samples overwritten with random bits;
    0 means a single framed message of up to ``max_message`` characters.
    """

    count: int = 100
    seed: int = 0
    carrier: str = "image"
    shape: tuple[int, int] = (64, 64)
    capacity: float = 0.0
    max_message: int = 32

    def __post_init__(self):
        if self.count < 1:
            raise DomainError("corpus needs at least one signal per class")
        if self.carrier != "image":
            raise DomainError(f"unsupported corpus carrier {self.carrier!r}")
        if not 0 <= self.capacity <= 1:
            raise DomainError("capacity must lie in [0, 1]")
        object.__setattr__(self, "shape", tuple(self.shape))


def make_pair(spec: CorpusSpec, index: int) -> tuple[RasterImage, RasterImage]:
    """Cover and stego image for corpus item ``index``; depends only on (seed, index)."""
    rng = np.random.default_rng([spec.seed & 0xFFFFFFFFFFFFFFFF, index])
    cover = natural_image(rng, spec.shape)
    if spec.capacity > 0:
        n = int(round(spec.capacity * cover.samples.size))
        bits = rng.integers(0, 2, size=n, dtype=np.uint8)
    else:
        bits = frame_message(random_message(rng, 1, spec.max_message)).to_bits()
    return cover, RasterImage(cover.width, cover.height, cover.channels, embed_lsb(cover.samples, bits))


def _score_item(args):
    spec, index, detector, params = args
    cover, stego = make_pair(spec, index)
    if detector == "reference_compare":
        tol = params.get("tolerance", 0.0)
        clean_suspect = cover if not params.get("requantize") else RasterImage(
            cover.width, cover.height, cover.channels,
            np.clip(cover.samples.astype(int) + 1, 0, 255))
        return (reference_compare(cover, stego, tol).verdict,
                reference_compare(cover, clean_suspect, tol).verdict)
    if detector == "chi_square":
        return chi_square_lsb(stego.samples).verdict, chi_square_lsb(cover.samples).verdict
    raise DomainError(f"unknown detector {detector!r}")


@dataclass
class EvaluationTable:
    detector: str
    tp: int = 0
    fn: int = 0
    tn: int = 0
    fp: int = 0
    inconclusive: int = 0
    params: dict = field(default_factory=dict)

    @property
    def total(self) -> int:
        return self.tp + self.fn + self.tn + self.fp

    @property
    def accuracy(self) -> float:
        return (self.tp + self.tn) / self.total if self.total else 0.0

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0

    def to_dict(self) -> dict:
        return {
            "detector": self.detector,
            "params": self.params,
            "confusion": {"tp": self.tp, "fn": self.fn, "tn": self.tn, "fp": self.fp},
            "inconclusive": self.inconclusive,
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_text(self) -> str:
        rows = [
            ("detector", self.detector),
            ("tp / fn", f"{self.tp} / {self.fn}"),
            ("tn / fp", f"{self.tn} / {self.fp}"),
            ("inconclusive", str(self.inconclusive)),
            ("accuracy", f"{self.accuracy:.4f}"),
            ("precision", f"{self.precision:.4f}"),
            ("recall", f"{self.recall:.4f}"),
        ]
        return "".join(f"{k:<14}{v}\n" for k, v in rows)


def evaluate_detectors(
    corpus: CorpusSpec, detector: str = "reference_compare", params: dict | None = None, workers: int = 1
) -> EvaluationTable:
    """Confusion table of ``detector`` over ``corpus.count`` stego and clean items.

    Inconclusive verdicts count as "not stego" in the table and are also
    tallied separately. Results do not depend on ``workers``.
    """
    params = dict(params or {})
    jobs = [(corpus, i, detector, params) for i in range(corpus.count)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_score_item, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        results = [_score_item(j) for j in jobs]
    table = EvaluationTable(detector, params=params)
    for stego_verdict, clean_verdict in results:
        if stego_verdict == STEGO:
            table.tp += 1
        else:
            table.fn += 1
        if clean_verdict == STEGO:
            table.fp += 1
        else:
            table.tn += 1
        table.inconclusive += (stego_verdict == INCONCLUSIVE) + (clean_verdict == INCONCLUSIVE)
    return table
