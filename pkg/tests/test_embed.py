import struct

import numpy as np
import pytest

from clustext.embed import (EmbeddingSet, HashedBowVectorizer, hashed_bow,
                            load_embeddings, save_embeddings, sinusoidal_positions,
                            token_bucket, token_matrix)


class TestEmb1Format:
    def test_round_trip_identity(self, tmp_path):
        rng = np.random.default_rng(0)
        data = rng.normal(size=(5, 8)).astype(np.float32)
        ids = np.arange(10, 15, dtype=np.uint64)
        path = tmp_path / "x.emb"
        save_embeddings(EmbeddingSet(data=data, ids=ids), path)
        back = load_embeddings(path)
        assert np.array_equal(back.data, data)
        assert np.array_equal(back.ids, ids)

    def test_layout_is_bit_exact(self, tmp_path):
        data = np.array([[1.0, 2.0], [3.0, 4.0]], dtype=np.float32)
        path = tmp_path / "x.emb"
        save_embeddings(EmbeddingSet(data=data), path, include_ids=False)
        raw = path.read_bytes()
        assert raw[:4] == b"EMB1"
        assert struct.unpack("<II", raw[4:12]) == (2, 2)
        assert raw[12:] == data.tobytes(order="C")

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.emb"
        path.write_bytes(b"XEMB" + struct.pack("<II", 1, 1) + b"\x00" * 4)
        with pytest.raises(ValueError, match="not an embedding file"):
            load_embeddings(path)

    def test_truncated_payload(self, tmp_path):
        path = tmp_path / "trunc.emb"
        payload = np.zeros(11, dtype="<f4").tobytes()
        path.write_bytes(b"EMB1" + struct.pack("<II", 3, 4) + payload)
        with pytest.raises(ValueError, match="truncated payload"):
            load_embeddings(path)

    def test_non_finite_value_names_row(self, tmp_path):
        data = np.zeros((3, 2), dtype="<f4")
        data[1, 0] = np.inf
        path = tmp_path / "inf.emb"
        path.write_bytes(b"EMB1" + struct.pack("<II", 3, 2) + data.tobytes())
        with pytest.raises(ValueError, match="row 1"):
            load_embeddings(path)

    def test_missing_id_block_defaults_to_arange(self, tmp_path):
        data = np.ones((2, 2), dtype=np.float32)
        path = tmp_path / "noids.emb"
        save_embeddings(EmbeddingSet(data=data), path, include_ids=False)
        back = load_embeddings(path)
        assert np.array_equal(back.ids, np.array([0, 1], dtype=np.uint64))


class TestHashedBow:
    def test_empty_string_is_zero_vector(self):
        assert np.array_equal(hashed_bow("", 16, 0), np.zeros(16))

    def test_deterministic(self):
        a = hashed_bow("ai in education", 32, seed=5)
        b = hashed_bow("ai in education", 32, seed=5)
        assert np.array_equal(a, b)
        c = hashed_bow("ai in education", 32, seed=6)
        assert not np.array_equal(a, c)

    def test_repeated_token_doubles_bucket_before_normalization(self):
        # oracle: one token hashed by hand via token_bucket
        d, seed = 16, 3
        bucket, sign = token_bucket("ai", d, seed)
        single = hashed_bow("ai", d, seed, normalize=False)
        double = hashed_bow("ai ai", d, seed, normalize=False)
        expected_single = np.zeros(d)
        expected_single[bucket] = sign
        assert np.array_equal(single, expected_single)
        assert np.array_equal(double, 2 * expected_single)

    def test_norm_is_one_or_exactly_zero(self):
        rng = np.random.default_rng(7)
        words = ["alpha", "beta", "gamma", "delta", "eps", "zeta"]
        for _ in range(100):
            k = int(rng.integers(0, 6))
            text = " ".join(rng.choice(words, size=k)) if k else ""
            n = np.linalg.norm(hashed_bow(text, 8, seed=1))
            assert n == 0.0 or abs(n - 1.0) < 1e-12

    def test_cancelling_tokens_still_embed_nonzero(self):
        # find two tokens sharing a bucket with opposite signs, whose summed
        # counts would cancel; nonempty text must still embed nonzero
        d, seed = 8, 1
        by_bucket = {}
        pair = None
        for i in range(5000):
            tok = f"t{i}"
            b, s = token_bucket(tok, d, seed)
            if (b, -s) in by_bucket:
                pair = (by_bucket[(b, -s)], tok)
                break
            by_bucket[(b, s)] = tok
        assert pair is not None
        v = hashed_bow(f"{pair[0]} {pair[1]}", d, seed)
        assert abs(np.linalg.norm(v) - 1.0) < 1e-12

    def test_d_must_be_at_least_two(self):
        with pytest.raises(ValueError):
            hashed_bow("x", 1, 0)

    def test_vectorizer_shape_and_params(self):
        vec = HashedBowVectorizer(d=8, seed=2)
        out = vec.fit_transform(["a b", "c"])
        assert out.shape == (2, 8)
        assert vec.get_params() == {"d": 8, "seed": 2}


class TestTokenInputs:
    def test_sinusoidal_shape_and_interleave(self):
        P = sinusoidal_positions(3, 4)
        assert P.shape == (3, 4)
        assert P[0, 0] == 0.0   # sin(0)
        assert P[0, 1] == 1.0   # cos(0)

    def test_token_matrix_truncates(self):
        text = " ".join(f"w{i}" for i in range(100))
        X = token_matrix(text, 8, seed=0, max_len=32)
        assert X.shape == (32, 8)
        X_prefix = token_matrix(" ".join(f"w{i}" for i in range(32)), 8, seed=0, max_len=32)
        assert np.array_equal(X, X_prefix)
