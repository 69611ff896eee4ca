import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from judgematch.corpus import Document
from judgematch.embeddings import (
    EmbeddingFormatError,
    IdfWeights,
    MismatchRateError,
    TokenEmbeddings,
    TokenizerMismatchError,
    align_idf,
    doc_similarity_hybrid,
    doc_similarity_plain,
    embedding_document,
    fetch_embeddings,
    load_embeddings,
    pooled_embedding,
    token_similarity_hybrid,
    token_similarity_plain,
)
from judgematch.lexical import IdfTable, fit_idf

TOK = "unit-tok"


def te(doc_id, tokens, columns, model_id="m1"):
    return TokenEmbeddings(
        doc_id=doc_id,
        tokens=tuple(tokens),
        matrix=np.array(columns, dtype=float).T,
        model_id=model_id,
        tokenizer_id=TOK,
    )


def weights(*values):
    return IdfWeights(values=np.array(values, dtype=float), source_table_id="t")


# -- loading -------------------------------------------------------------------


def record(doc_id="d1", n_tokens=5, dim=4, model_id="m1", tokenizer_id=TOK):
    return {
        "doc_id": doc_id,
        "model_id": model_id,
        "tokenizer_id": tokenizer_id,
        "tokens": [f"t{i}" for i in range(n_tokens)],
        "vectors": [[0.1 * (i + 1)] * dim for i in range(n_tokens)],
    }


def write_jsonl(path, records):
    path.write_text("\n".join(json.dumps(r) for r in records) + "\n", encoding="utf-8")
    return path


def test_load_well_formed(tmp_path):
    path = write_jsonl(tmp_path / "emb.jsonl", [record(n_tokens=5, dim=384)])
    records = load_embeddings(path)
    assert records["d1"].matrix.shape == (384, 5)


def test_load_rejects_token_vector_mismatch(tmp_path):
    bad = record(doc_id="broken")
    bad["vectors"] = bad["vectors"][:4]
    path = write_jsonl(tmp_path / "emb.jsonl", [bad])
    with pytest.raises(EmbeddingFormatError, match="broken"):
        load_embeddings(path)


def test_load_empty_file_warns(tmp_path):
    path = tmp_path / "empty.jsonl"
    path.write_text("", encoding="utf-8")
    with pytest.warns(UserWarning):
        assert load_embeddings(path) == {}


def test_load_rejects_mixed_model_ids(tmp_path):
    path = write_jsonl(
        tmp_path / "emb.jsonl", [record(doc_id="a", model_id="m1"), record(doc_id="b", model_id="m2")]
    )
    with pytest.raises(EmbeddingFormatError, match="mixed model_id"):
        load_embeddings(path)


def test_load_rejects_special_tokens(tmp_path):
    bad = record(doc_id="cls-doc", n_tokens=2)
    bad["tokens"] = ["[CLS]", "word"]
    path = write_jsonl(tmp_path / "emb.jsonl", [bad])
    with pytest.raises(EmbeddingFormatError, match="cls-doc"):
        load_embeddings(path)


def test_load_rejects_duplicate_doc_ids(tmp_path):
    path = write_jsonl(tmp_path / "emb.jsonl", [record(), record()])
    with pytest.raises(EmbeddingFormatError, match="duplicate"):
        load_embeddings(path)


def test_load_rejects_nonfinite(tmp_path):
    bad = record(doc_id="nan-doc")
    bad["vectors"][0][0] = float("nan")
    path = write_jsonl(tmp_path / "emb.jsonl", [bad])
    with pytest.raises(EmbeddingFormatError, match="nan-doc"):
        load_embeddings(path)


def test_fetch_embeddings_from_provider():
    import httpx

    def handler(request):
        assert request.url.path.endswith("/embed")
        payload = json.loads(request.content)
        assert payload["texts"] == ["some text"]
        return httpx.Response(200, json={"records": [record(doc_id=payload["doc_ids"][0])]})

    client = httpx.Client(transport=httpx.MockTransport(handler))
    records = fetch_embeddings("http://provider", {"d9": "some text"}, client=client)
    assert records["d9"].length == 5


# -- align_idf -----------------------------------------------------------------


def idf_table(weights_map, tokenizer_id=TOK):
    return IdfTable(
        weights=weights_map, scheme="smoothed", corpus_size=10, includes_background=False,
        tokenizer_id=tokenizer_id,
    )


def test_align_full_vocabulary():
    table = idf_table({"a": 2.0, "b": 3.0})
    aligned = align_idf(te("d", ["a", "b"], [[1, 0], [0, 1]]), table)
    assert aligned.values.tolist() == [2.0, 3.0]
    assert aligned.mismatch_count == 0


def test_align_one_of_ten_oov_uses_corpus_mean():
    table = idf_table({f"t{i}": float(i + 1) for i in range(9)})
    tokens = [f"t{i}" for i in range(9)] + ["oov"]
    columns = [[1.0, 0.0]] * 10
    aligned = align_idf(te("d", tokens, columns), table)
    assert aligned.mismatch_count == 1
    assert aligned.mismatch_fraction == pytest.approx(0.10)
    assert aligned.values[-1] == pytest.approx(table.mean_idf)


def test_align_rejects_tokenizer_mismatch():
    table = idf_table({"a": 2.0}, tokenizer_id="different-tok")
    with pytest.raises(TokenizerMismatchError):
        align_idf(te("d", ["a"], [[1.0, 0.0]]), table)


def test_align_rejects_high_oov_rate():
    table = idf_table({"a": 2.0})
    tokens = ["a", "x", "y"]  # 2/3 missing
    with pytest.raises(MismatchRateError):
        align_idf(te("d", tokens, [[1.0, 0.0]] * 3), table)


def test_align_accepts_exactly_twenty_percent():
    table = idf_table({f"t{i}": 1.5 for i in range(8)})
    tokens = [f"t{i}" for i in range(8)] + ["oov", "oov2"]
    aligned = align_idf(te("d", tokens, [[1.0, 0.0]] * 10), table)
    assert aligned.mismatch_fraction == pytest.approx(0.20)


# -- document-level similarity ----------------------------------------------------


def test_hybrid_pooling_worked_example():
    # T columns e1, e2 with w = (3, 1): D = (0.75, 0.25) exactly
    embeddings = te("d", ["a", "b"], [[1.0, 0.0], [0.0, 1.0]])
    pooled = pooled_embedding(embeddings, weights(3.0, 1.0))
    assert pooled.vector.tolist() == [0.75, 0.25]


def test_doc_plain_self_similarity():
    embeddings = te("d", ["a", "b"], [[1.0, 2.0], [0.5, -1.0]])
    assert doc_similarity_plain(embeddings, embeddings) == pytest.approx(1.0, abs=1e-12)


def test_doc_plain_single_token_docs():
    a = te("d1", ["x"], [[1.0, 0.0]])
    b = te("d2", ["y"], [[0.0, 1.0]])
    assert doc_similarity_plain(a, b) == 0.0
    c = te("d3", ["z"], [[1.0, 0.0]])
    assert doc_similarity_plain(a, c) == pytest.approx(1.0, abs=1e-12)


def test_doc_plain_equals_hybrid_with_uniform_weights():
    a = te("d1", ["p", "q", "r"], [[1.0, 0.2], [0.3, 0.9], [-0.4, 0.1]])
    b = te("d2", ["s", "t"], [[0.6, 0.6], [0.1, -0.8]])
    ones_a = weights(1.0, 1.0, 1.0)
    ones_b = weights(1.0, 1.0)
    assert doc_similarity_plain(a, b) == doc_similarity_hybrid(a, ones_a, b, ones_b)


def test_doc_hybrid_invariant_to_weight_rescaling():
    a = te("d1", ["p", "q"], [[1.0, 0.2], [0.3, 0.9]])
    b = te("d2", ["s", "t"], [[0.6, 0.6], [0.1, -0.8]])
    wa, wb = weights(2.0, 5.0), weights(1.0, 3.0)
    base = doc_similarity_hybrid(a, wa, b, wb)
    for c in (0.25, 7.0, 1e3):
        scaled = doc_similarity_hybrid(a, weights(2.0 * c, 5.0 * c), b, wb)
        assert scaled == pytest.approx(base, abs=1e-12)


def test_doc_hybrid_rejects_nonpositive_weight():
    a = te("d1", ["p"], [[1.0, 0.0]])
    with pytest.raises(ValueError, match="positive"):
        doc_similarity_hybrid(a, weights(0.0), a, weights(1.0))


def test_doc_similarity_zero_length_is_zero():
    empty = TokenEmbeddings(doc_id="e", tokens=(), matrix=np.zeros((0, 0)), model_id="m1", tokenizer_id=TOK)
    other = te("d", ["a"], [[1.0, 0.0]])
    assert doc_similarity_plain(empty, other) == 0.0


def test_model_mismatch_rejected():
    a = te("d1", ["p"], [[1.0, 0.0]], model_id="m1")
    b = te("d2", ["q"], [[1.0, 0.0]], model_id="m2")
    with pytest.raises(ValueError, match="m1"):
        doc_similarity_plain(a, b)


# -- token-level similarity --------------------------------------------------------


def test_token_plain_single_tokens():
    a = te("d1", ["x"], [[1.0, 0.0]])
    b = te("d2", ["y"], [[1.0, 1.0]])
    assert token_similarity_plain(a, b) == pytest.approx(np.sqrt(0.5), abs=1e-12)


def test_token_plain_orthogonal_pair_mean():
    # identical docs of two orthogonal unit tokens: mean of {1, 0, 0, 1} = 0.5
    embeddings = te("d", ["a", "b"], [[1.0, 0.0], [0.0, 1.0]])
    assert token_similarity_plain(embeddings, embeddings) == pytest.approx(0.5, abs=1e-12)


def test_token_hybrid_worked_example_exact():
    # single tokens, cosine 1, weights 2 and 3: score 6.0 exactly
    a = te("d1", ["x"], [[1.0, 0.0]])
    b = te("d2", ["y"], [[1.0, 0.0]])
    assert token_similarity_hybrid(a, weights(2.0), b, weights(3.0)) == 6.0


def test_token_hybrid_all_ones_equals_plain():
    a = te("d1", ["p", "q", "r"], [[1.0, 0.2], [0.3, 0.9], [-0.4, 0.1]])
    b = te("d2", ["s", "t"], [[0.6, 0.6], [0.1, -0.8]])
    assert token_similarity_hybrid(a, weights(1.0, 1.0, 1.0), b, weights(1.0, 1.0)) == token_similarity_plain(a, b)


def test_token_hybrid_scales_linearly_in_uniform_rescale():
    a = te("d1", ["p", "q"], [[1.0, 0.2], [0.3, 0.9]])
    b = te("d2", ["s", "t"], [[0.6, 0.6], [0.1, -0.8]])
    wa, wb = weights(2.0, 5.0), weights(1.0, 3.0)
    base = token_similarity_hybrid(a, wa, b, wb)
    for c in (0.5, 3.0):
        scaled = token_similarity_hybrid(a, weights(2.0 * c, 5.0 * c), b, wb)
        assert scaled == pytest.approx(c * base, rel=1e-12)


def test_token_hybrid_bound():
    a = te("d1", ["p", "q"], [[1.0, 0.2], [0.3, 0.9]])
    b = te("d2", ["s", "t"], [[0.6, 0.6], [0.1, -0.8]])
    wa, wb = weights(2.0, 5.0), weights(1.0, 3.0)
    score = token_similarity_hybrid(a, wa, b, wb)
    assert abs(score) <= max(wa.values) * max(wb.values)


def test_token_plain_bounded():
    a = te("d1", ["p", "q"], [[1.0, 0.2], [0.3, 0.9]])
    b = te("d2", ["s", "t", "u"], [[0.6, 0.6], [0.1, -0.8], [-0.9, 0.1]])
    assert -1.0 <= token_similarity_plain(a, b) <= 1.0


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_similarities_symmetric(data):
    dim = 3
    la = data.draw(st.integers(1, 4))
    lb = data.draw(st.integers(1, 4))
    floats = st.floats(-2, 2).filter(lambda x: abs(x) > 1e-3)
    cols_a = [[data.draw(floats) for _ in range(dim)] for _ in range(la)]
    cols_b = [[data.draw(floats) for _ in range(dim)] for _ in range(lb)]
    a = te("a", [f"a{i}" for i in range(la)], cols_a)
    b = te("b", [f"b{i}" for i in range(lb)], cols_b)
    wa = weights(*[data.draw(st.floats(0.1, 4)) for _ in range(la)])
    wb = weights(*[data.draw(st.floats(0.1, 4)) for _ in range(lb)])
    assert doc_similarity_plain(a, b) == pytest.approx(doc_similarity_plain(b, a), abs=1e-12)
    assert token_similarity_plain(a, b) == pytest.approx(token_similarity_plain(b, a), abs=1e-12)
    assert doc_similarity_hybrid(a, wa, b, wb) == pytest.approx(doc_similarity_hybrid(b, wb, a, wa), abs=1e-12)
    assert token_similarity_hybrid(a, wa, b, wb) == pytest.approx(
        token_similarity_hybrid(b, wb, a, wa), abs=1e-12
    )


def test_scores_reproducible_bit_identically():
    a = te("d1", ["p", "q"], [[1.0, 0.2], [0.3, 0.9]])
    b = te("d2", ["s", "t"], [[0.6, 0.6], [0.1, -0.8]])
    wa, wb = weights(2.0, 5.0), weights(1.0, 3.0)
    first = (
        doc_similarity_plain(a, b),
        doc_similarity_hybrid(a, wa, b, wb),
        token_similarity_plain(a, b),
        token_similarity_hybrid(a, wa, b, wb),
    )
    second = (
        doc_similarity_plain(a, b),
        doc_similarity_hybrid(a, wa, b, wb),
        token_similarity_plain(a, b),
        token_similarity_hybrid(a, wa, b, wb),
    )
    assert first == second


def test_embedding_document_carries_tokenizer():
    a = te("judge:J1", ["p", "q"], [[1.0, 0.2], [0.3, 0.9]])
    document = embedding_document(a, role="judge")
    assert isinstance(document, Document)
    assert document.tokenizer_id == TOK
    table = fit_idf([document], scheme="smoothed")
    assert table.tokenizer_id == TOK
    aligned = align_idf(a, table)
    assert aligned.mismatch_count == 0
