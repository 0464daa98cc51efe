import pytest

import emotionpush as ep


@pytest.fixture(scope="module")
def synth_files(tmp_path_factory):
    d = tmp_path_factory.mktemp("synth")
    corpus, emb, tax = d / "corpus.jsonl", d / "emb.bin", d / "tax.json"
    n = ep.synth({"num_labels": 4, "docs_per_label": 60, "seed": 5}, corpus, emb, tax)
    assert n == 240
    return corpus, emb, tax


@pytest.fixture(scope="module")
def model_dir(synth_files, tmp_path_factory):
    corpus, emb, tax = synth_files
    out = tmp_path_factory.mktemp("model") / "m"
    labels = ep.train(corpus, emb, out, mode="fine40", n_pos=25, n_neg=25, heldout=10, seed=1,
                      grid={"c": [0.5, 8], "gamma": [0.125], "folds": 5}, taxonomy=tax)
    assert len(labels) == 4
    return out


def test_tokenize_and_embed(synth_files):
    assert ep.tokenize("Hello, World!") == ["hello", "world"]
    table = ep.load_word2vec(synth_files[1])
    assert len(table) > 0
    assert table.dim == 50
    values, count = ep.embed(table, "nothing known here")
    assert count == 0
    assert values == [0.0] * 50


def test_corpus_roundtrip(synth_files):
    corpus, _, tax = synth_files
    docs = ep.load_corpus(corpus, tax)
    assert len(docs) == 240
    assert len({d[2] for d in docs}) == 4


def test_statistics():
    assert ep.auc([0.9, 0.8, 0.1, 0.2], [1, 1, -1, -1]) == 1.0
    r = ep.mann_whitney([1, 2, 3], [10, 20, 30])
    assert r["p"] == 0.1 and r["exact"] and r["u"] == 0
    with pytest.raises(ValueError):
        ep.auc([0.1, 0.2], [1, 1])


def test_default_taxonomy():
    t = ep.default_taxonomy()
    assert len(t["fine"]) == 40
    assert t["colors"]["joy"] == "#FFD700"
    assert set(t["compaction"].values()) == set(t["coarse"])


def test_train_evaluate_classify(model_dir, synth_files):
    corpus, emb, _ = synth_files
    report = ep.evaluate(model_dir, corpus, emb)
    assert report["mean_auc"] >= 0.9
    m = ep.Model.load(model_dir, emb)
    assert m.mode == "fine40"
    r = m.classify("sig2_1 sig2_3 sig2_5")
    assert r["emotion"] == m.labels[2]
    assert set(r) == {"emotion", "color", "probabilities", "no_tokens"}
    assert ep.Model.load(model_dir, emb).classify("zzz")["no_tokens"] is True


def test_missing_model_raises(tmp_path, synth_files):
    with pytest.raises(ep.NotFound) as info:
        ep.Model.load(tmp_path / "absent", synth_files[1])
    assert isinstance(info.value, ep.Error)
    assert isinstance(info.value, KeyError)


def test_message_service(model_dir, synth_files, tmp_path):
    m = ep.Model.load(model_dir, synth_files[1])
    log = tmp_path / "events.jsonl"
    svc = ep.MessageService(m, log)
    svc.set_phase(False, "off")
    posted = svc.post_message("ann", "ben", "sig0_1 sig0_2")
    ev = svc.pending_events("ben")[0]
    assert ev["color"] is None and "emotion" not in ev
    assert svc.message(posted["message_id"])["emotion"] == posted["emotion"]
    first = svc.mark_read(posted["message_id"])
    assert svc.mark_read(posted["message_id"]) == first
    reply = svc.respond(posted["message_id"], "ok")
    assert svc.message(reply)["in_reply_to"] == posted["message_id"]
    assert svc.message("m99") is None
    with pytest.raises(KeyError):
        svc.mark_read("m99")
    report = svc.latency_report()
    del svc

    again = ep.MessageService(m, log)
    assert again.latency_report() == report
    assert again.phase() == (False, "off")


def test_service_without_model():
    svc = ep.MessageService()
    assert not svc.has_model
    with pytest.raises(ep.ModelUnavailable):
        svc.post_message("a", "b", "x")
