import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mixnmt.corpus import SentencePair, generate_synthetic_corpus, make_cipher_spec
from mixnmt.evalcli import purity
from mixnmt.topicmodel import TopicModel, fit_bilingual_topics, infer_topic_posterior, split_by_topic


def two_domain_corpus(seed, shared=0.0, n=2000):
    spec = make_cipher_spec(2, 40, shared, zipf=1.0, seed=seed, num_pairs=n)
    return generate_synthetic_corpus(spec, seed)


def labels_of(model, corpus):
    return [int(np.argmax(infer_topic_posterior(model, p))) for p in corpus]


def brute_force_posterior(model, pair):
    """Direct evaluation of theta_k * prod phi_k(f) * prod mean_i t_k(e|f_i)."""
    src = [model.src_index.get(f, 0) for f in pair.source]
    tgt = [model.tgt_index.get(e, 0) for e in pair.target]
    logs = []
    for k in range(model.num_topics):
        v = math.log(model.theta[k])
        v += sum(math.log(model.phi[k, f]) for f in src)
        for e in tgt:
            v += math.log(sum(model.lexicon[k, f, e] for f in src) / len(src))
        logs.append(v)
    top = max(logs)
    w = [math.exp(v - top) for v in logs]
    return [x / sum(w) for x in w]


@pytest.fixture(scope="module")
def disjoint():
    corpus = two_domain_corpus(0, n=600)
    return corpus, fit_bilingual_topics(corpus, 2, 1.0, 20, seed=0)


def test_single_topic():
    corpus = two_domain_corpus(1, n=50)
    m = fit_bilingual_topics(corpus, 1, iterations=3)
    assert m.theta.tolist() == [1.0]
    assert all(infer_topic_posterior(m, p).tolist() == [1.0] for p in corpus)
    (only,) = split_by_topic(m, corpus)
    assert only.pairs == corpus.pairs


def test_disjoint_domains_are_separated(disjoint):
    corpus, m = disjoint
    assert purity(labels_of(m, corpus), corpus.domains) == 1.0
    subsets = split_by_topic(m, corpus)
    gold = [{p for p in corpus if p.domain == d} for d in (0, 1)]
    assert sorted(map(len, subsets)) == sorted(map(len, gold))
    assert {frozenset(s.pairs) for s in subsets} == {frozenset(g) for g in gold}


def test_em_monotone_and_normalized(disjoint):
    _, m = disjoint
    assert len(m.objectives) == 21
    assert np.all(np.diff(m.objectives) >= -1e-9)
    assert m.theta.sum() == pytest.approx(1.0, abs=1e-9)
    assert m.phi.sum(axis=1) == pytest.approx(1.0, abs=1e-9)
    assert np.allclose(m.lexicon.sum(axis=2), 1.0, atol=1e-9)


def test_posterior_matches_product_formula(disjoint):
    corpus, m = disjoint
    for p in list(corpus)[:20]:
        post = infer_topic_posterior(m, p)
        assert post.sum() == pytest.approx(1.0, abs=1e-12)
        assert post == pytest.approx(brute_force_posterior(m, p), abs=1e-9)


def test_topic_specific_vocabulary_wins(disjoint):
    corpus, m = disjoint
    p = next(p for p in corpus if p.domain == 1)
    k = int(np.argmax(infer_topic_posterior(m, p)))
    other = next(q for q in corpus if q.domain == 0)
    assert int(np.argmax(infer_topic_posterior(m, other))) != k


@settings(max_examples=25, deadline=None)
@given(st.lists(st.tuples(st.lists(st.sampled_from("abcd"), min_size=1, max_size=4),
                          st.lists(st.sampled_from(["x", "y", "z"]), min_size=1, max_size=4)),
                min_size=1, max_size=8),
       st.integers(1, 3), st.integers(0, 5))
def test_em_monotone_property(pairs, K, seed):
    corpus = [SentencePair(tuple(s), tuple(t)) for s, t in pairs]
    m = fit_bilingual_topics(corpus, K, 0.5, 6, seed=seed)
    assert np.all(np.diff(m.objectives) >= -1e-9)
    for p in corpus:
        assert infer_topic_posterior(m, p).sum() == pytest.approx(1.0, abs=1e-12)
    parts = split_by_topic(m, corpus)
    assert sorted(id(p) for s in parts for p in s) == sorted(id(p) for p in corpus)


def test_unseen_tokens_are_scored():
    m = fit_bilingual_topics([SentencePair(("a",), ("x",))], 2, iterations=2)
    post = infer_topic_posterior(m, SentencePair(("q",), ("w",)))
    assert np.all(np.isfinite(post)) and post.sum() == pytest.approx(1.0)


def test_model_file_is_deterministic(tmp_path):
    corpus = two_domain_corpus(2, n=80)
    for k in (0, 1):
        fit_bilingual_topics(corpus, 2, 1.0, 4, seed=5).save(tmp_path / f"m{k}")
    a = (tmp_path / "m0").read_bytes()
    assert a == (tmp_path / "m1").read_bytes()
    assert a.startswith(b"BITOPIC v1 2\n")
    back = TopicModel.load(tmp_path / "m0")
    m = fit_bilingual_topics(corpus, 2, 1.0, 4, seed=5)
    assert np.array_equal(back.theta, m.theta) and np.array_equal(back.lexicon, m.lexicon)


def test_partition_quality_does_not_depend_on_init_seed():
    corpus = two_domain_corpus(0, n=600)
    scores = [purity(labels_of(fit_bilingual_topics(corpus, 2, 1.0, 20, seed=s), corpus), corpus.domains)
              for s in range(3)]
    assert max(scores) - min(scores) <= 0.02
