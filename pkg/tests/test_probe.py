"""Metadata probe: feature extraction, stump training, evaluation."""

import pytest

from conftest import mk_meta
from detbias.errors import DegenerateData, EmptyEval, ParseError
from detbias.formats.meta import GENERATED, NATURAL
from detbias.probe import (FEATURE_NAMES, QF_SENTINEL, eval_probe,
                           extract_features, model_from_json, model_to_json,
                           predict, split_holdout, train_probe)


def feats(metas):
    return [extract_features(m) for m in metas]


def origins(metas):
    return [m.origin for m in metas]


def biased(n=60):
    metas = []
    for i in range(n):
        metas.append(mk_meta(f"n{i}.jpg", NATURAL, qf=75 + i % 22,
                             qf_exact=True, width=300 + i, height=500))
        metas.append(mk_meta(f"g{i}.png", GENERATED, fmt="PNG",
                             width=512, height=512))
    return metas


def matched(n=60):
    metas = []
    for i in range(n):
        for origin in (NATURAL, GENERATED):
            p = f"{'n' if origin == NATURAL else 'g'}{i}.jpg"
            metas.append(mk_meta(p, origin, qf=96, qf_exact=True,
                                 width=512, height=512))
    return metas


def test_feature_vector_contents():
    f = extract_features(mk_meta("a.jpg", NATURAL, qf=85, qf_exact=True,
                                 width=640, height=480))
    v = f.vector()
    assert len(v) == len(FEATURE_NAMES) == 6
    by_name = dict(zip(FEATURE_NAMES, v))
    assert by_name["qf_or_sentinel"] == 85
    assert by_name["width"] == 640 and by_name["height"] == 480
    assert by_name["min_side"] == 480 and by_name["max_side"] == 640
    assert by_name["aspect"] == pytest.approx(640 / 480)

    g = extract_features(mk_meta("b.png", GENERATED, fmt="PNG"))
    assert dict(zip(FEATURE_NAMES, g.vector()))["qf_or_sentinel"] == QF_SENTINEL


def test_probe_separates_biased_corpus():
    metas = biased()
    model = train_probe(feats(metas), origins(metas), seed=5)
    metrics = eval_probe(model, feats(metas), origins(metas))
    assert metrics["accuracy"] == 1.0
    assert metrics["precision"] == 1.0 and metrics["recall"] == 1.0


def test_probe_collapses_on_matched_metadata():
    metas = matched()
    model = train_probe(feats(metas), origins(metas), seed=5)
    # nothing to split on: every stump is void and everything ties to
    # the negative class
    assert all(s.weight == 0.0 for s in model.stumps)
    preds = predict(model, feats(metas))
    assert set(preds) == {NATURAL}
    metrics = eval_probe(model, feats(metas), origins(metas))
    assert metrics["accuracy"] == 0.5
    assert metrics["precision"] is None and metrics["recall"] == 0.0


def test_single_feature_stump_threshold():
    metas = [mk_meta(f"n{i}.jpg", NATURAL, width=100 + i, height=100)
             for i in range(2)]
    metas += [mk_meta(f"g{i}.png", GENERATED, fmt="PNG", width=103 + i,
                      height=100) for i in range(2)]
    model = train_probe(feats(metas), origins(metas), seed=0, rounds=1)
    stump = model.stumps[0]
    assert predict(model, feats(metas)) == [NATURAL, NATURAL,
                                            GENERATED, GENERATED]
    assert 101 < stump.threshold < 103  # midpoint between the classes


def test_train_requires_both_origins():
    metas = [mk_meta(f"n{i}.jpg", NATURAL) for i in range(4)]
    with pytest.raises(DegenerateData):
        train_probe(feats(metas), origins(metas), seed=0)


def test_training_is_seed_deterministic():
    metas = biased(30)
    a = model_to_json(train_probe(feats(metas), origins(metas), seed=9))
    b = model_to_json(train_probe(feats(metas), origins(metas), seed=9))
    assert a == b


def test_model_json_roundtrip():
    metas = biased(20)
    model = train_probe(feats(metas), origins(metas), seed=3, rounds=4)
    back = model_from_json(model_to_json(model))
    assert back == model
    with pytest.raises(ParseError):
        model_from_json("{]")
    with pytest.raises(ParseError):
        model_from_json('{"stumps": "nope"}')


def test_eval_probe_empty_raises():
    metas = biased(10)
    model = train_probe(feats(metas), origins(metas), seed=1, rounds=2)
    with pytest.raises(EmptyEval):
        eval_probe(model, [], [])


def test_split_holdout_is_stratified_and_seeded():
    metas = biased(40)  # 40 naturals + 40 generated
    train, held = split_holdout(metas, seed=7, holdout_frac=0.25)
    assert len(held) == 20 and len(train) == 60
    assert sum(m.origin == NATURAL for m in held) == 10
    t2, h2 = split_holdout(metas, seed=7, holdout_frac=0.25)
    assert [m.path for m in h2] == [m.path for m in held]
    _, h3 = split_holdout(metas, seed=8, holdout_frac=0.25)
    assert [m.path for m in h3] != [m.path for m in held]
    # no leakage, no loss
    assert {m.path for m in train} | {m.path for m in held} == \
        {m.path for m in metas}
    assert not ({m.path for m in train} & {m.path for m in held})
