"""Metadata-only shortcut classifier.

A boosted ensemble of 32 axis-aligned decision stumps over header
features (estimated quality factor, dimensions, aspect). Its held-out
accuracy measures how exploitable a corpus's compression/size bias is:
near-perfect on a biased corpus, chance on a debiased one. It never
reads pixel data.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from detbias.errors import DegenerateData, EmptyEval, ParseError
from detbias.formats.meta import FORMAT_JPEG, GENERATED, NATURAL, ImageMeta
from detbias.rng import SplitMix64, shuffle

QF_SENTINEL = 101  # files with no tables to estimate from (PNG etc.)
N_ROUNDS = 32
FEATURE_NAMES = ("qf_or_sentinel", "width", "height",
                 "min_side", "max_side", "aspect")


@dataclass(frozen=True)
class ProbeFeatures:
    qf_or_sentinel: float
    width: int
    height: int
    min_side: int
    max_side: int
    aspect: float

    def vector(self) -> tuple[float, ...]:
        return (self.qf_or_sentinel, float(self.width), float(self.height),
                float(self.min_side), float(self.max_side), self.aspect)


@dataclass(frozen=True)
class Stump:
    feature: int
    threshold: float
    polarity: int  # +1: value > threshold predicts GENERATED
    weight: float


@dataclass(frozen=True)
class ProbeModel:
    stumps: tuple[Stump, ...]
    seed: int
    feature_names: tuple[str, ...] = FEATURE_NAMES


def extract_features(meta: ImageMeta) -> ProbeFeatures:
    if meta.format == FORMAT_JPEG and meta.qf is not None:
        qf = float(meta.qf)
    else:
        qf = float(QF_SENTINEL)
    return ProbeFeatures(
        qf_or_sentinel=qf,
        width=meta.width,
        height=meta.height,
        min_side=min(meta.width, meta.height),
        max_side=max(meta.width, meta.height),
        aspect=meta.width / meta.height,
    )


def _design(features) -> np.ndarray:
    return np.asarray([f.vector() for f in features], dtype=np.float64)


def _labels(labels) -> np.ndarray:
    return np.asarray([1.0 if lb == GENERATED else -1.0 for lb in labels])


def _best_stump(x: np.ndarray, y: np.ndarray, w: np.ndarray):
    """Exhaustive weighted-error search over features and the midpoints
    between consecutive distinct values; first strict improvement wins,
    so the result is order-deterministic."""
    n, nfeat = x.shape
    best = (math.inf, 0, 0.0, 1)
    for f in range(nfeat):
        order = np.argsort(x[:, f], kind="stable")
        v = x[order, f]
        wy = (w * y)[order]
        # err(+1) for the cut after position i: positives at or below the
        # threshold are missed, negatives above it are false alarms
        pos_below = np.cumsum(np.where(wy > 0, wy, 0.0))
        neg_above = np.cumsum(np.where(wy < 0, -wy, 0.0))
        total_neg = neg_above[-1]
        cuts = np.nonzero(v[:-1] < v[1:])[0]
        for i in cuts:
            err_pos = pos_below[i] + (total_neg - neg_above[i])
            for polarity, err in ((1, err_pos), (-1, 1.0 - err_pos)):
                if err < best[0] - 1e-15:
                    best = (err, f, (v[i] + v[i + 1]) / 2.0, polarity)
    return best


def train_probe(features, labels, seed: int, rounds: int = N_ROUNDS) -> ProbeModel:
    """Boosted-stump fit: each round picks the stump minimizing weighted
    misclassification, then reweights (standard additive update).
    Deterministic for fixed (data, seed)."""
    x = _design(features)
    y = _labels(labels)
    present = set(labels)
    if not {NATURAL, GENERATED} <= present:
        raise DegenerateData("training data must contain both origins")

    n = len(y)
    w = np.full(n, 1.0 / n)
    stumps = []
    for _ in range(rounds):
        err, f, thr, pol = _best_stump(x, y, w)
        if not math.isfinite(err):
            # no split exists (all feature values identical): a void
            # stump with zero weight keeps the ensemble size fixed
            stumps.append(Stump(0, 0.0, 1, 0.0))
            continue
        err = min(max(err, 1e-10), 1.0 - 1e-10)
        alpha = 0.5 * math.log((1.0 - err) / err)
        stumps.append(Stump(int(f), float(thr), int(pol), float(alpha)))
        pred = np.where(x[:, f] > thr, pol, -pol)
        w = w * np.exp(-alpha * y * pred)
        w /= w.sum()
    return ProbeModel(stumps=tuple(stumps), seed=seed)


def decision_scores(model: ProbeModel, features) -> np.ndarray:
    x = _design(features)
    score = np.zeros(len(x))
    for s in model.stumps:
        score += s.weight * np.where(x[:, s.feature] > s.threshold,
                                     s.polarity, -s.polarity)
    return score


def predict(model: ProbeModel, features) -> list[str]:
    """Ties (score exactly 0) go to NATURAL."""
    return [GENERATED if v > 0 else NATURAL
            for v in decision_scores(model, features)]


def eval_probe(model: ProbeModel, features, labels) -> dict:
    """Accuracy/precision/recall with GENERATED as the positive class.
    Precision is None when nothing was predicted positive."""
    labels = list(labels)
    if not labels:
        raise EmptyEval("empty evaluation set")
    pred = predict(model, features)
    tp = sum(1 for p, t in zip(pred, labels) if p == GENERATED and t == GENERATED)
    fp = sum(1 for p, t in zip(pred, labels) if p == GENERATED and t == NATURAL)
    fn = sum(1 for p, t in zip(pred, labels) if p == NATURAL and t == GENERATED)
    correct = sum(1 for p, t in zip(pred, labels) if p == t)
    return {
        "accuracy": correct / len(labels),
        "precision": tp / (tp + fp) if tp + fp else None,
        "recall": tp / (tp + fn) if tp + fn else None,
    }


def split_holdout(metas, seed: int, holdout_frac: float = 0.5):
    """Stratified (by origin) seeded split into (train, held_out) metas."""
    train, held = [], []
    for origin in (NATURAL, GENERATED):
        part = sorted((m for m in metas if m.origin == origin),
                      key=lambda m: m.path)
        rng = SplitMix64(seed ^ (0 if origin == NATURAL else 0x9E3779B9))
        shuffle(part, rng)
        cut = int(round(len(part) * holdout_frac))
        held.extend(part[:cut])
        train.extend(part[cut:])
    return train, held


# ------------------------------------------------------------- model io

def model_to_json(model: ProbeModel) -> str:
    return json.dumps({
        "seed": model.seed,
        "feature_names": list(model.feature_names),
        "stumps": [
            {"feature": s.feature, "threshold": s.threshold,
             "polarity": s.polarity, "weight": s.weight}
            for s in model.stumps
        ],
    }, separators=(",", ":"), sort_keys=True)


def model_from_json(text: str) -> ProbeModel:
    try:
        doc = json.loads(text)
        stumps = tuple(
            Stump(feature=int(s["feature"]), threshold=float(s["threshold"]),
                  polarity=int(s["polarity"]), weight=float(s["weight"]))
            for s in doc["stumps"]
        )
        return ProbeModel(stumps=stumps, seed=int(doc["seed"]),
                          feature_names=tuple(doc["feature_names"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad probe model: {exc}") from None
