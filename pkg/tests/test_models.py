"""Architecture oracles: shape contracts, reduction equivalences, wiring
checks, and bundle persistence."""

import numpy as np
import pytest

from aggrolab.corpus import KAGGLE_SCHEMA, TRAC_SCHEMA
from aggrolab.errors import BundleFormatError, EmptyDocumentError
from aggrolab.features import FeatureScaler
from aggrolab.models import (
    ARCHITECTURES,
    BilstmParams,
    DpcnnConfig,
    DrnnConfig,
    DualEmbedding,
    ModelBundle,
    PooledBilstmConfig,
    dpcnn_forward,
    dpcnn_logits,
    dpcnn_regularization,
    drnn_forward,
    hashed_embeddings,
    load_bundle,
    load_dual_embeddings,
    pooled_bilstm_forward,
    pooled_bilstm_logits,
    pooled_lengths,
    save_bundle,
)
from aggrolab.models.dpcnn import init_params as dpcnn_init
from aggrolab.models.drnn import init_params as drnn_init
from aggrolab.models.pooled_bilstm import init_params as pooled_init
from aggrolab.numerics import (
    Tensor,
    add,
    bilstm,
    concat,
    embedding_lookup,
    masked_global_pool,
    matmul,
    row,
    softmax,
)

RNG = np.random.default_rng


def small_embedding(vocab_size=12, dim=16, seed=3):
    words = [f"w{i}" for i in range(vocab_size)]
    return hashed_embeddings(words, dim=dim, seed=seed)


class TestEmbeddingLoading:
    def _write_vectors(self, path, entries, dim, header=False):
        with open(path, "w", encoding="utf-8") as fh:
            if header:
                fh.write(f"{len(entries)} {dim}\n")
            for word, value in entries:
                fh.write(word + " " + " ".join(f"{value + j * 0.001:.6f}"
                                               for j in range(dim)) + "\n")

    def test_concatenation_and_shapes(self, tmp_path):
        g, f = tmp_path / "g.txt", tmp_path / "f.txt"
        self._write_vectors(g, [("cat", 1.0), ("dog", 2.0)], 100)
        self._write_vectors(f, [("cat", 5.0), ("dog", 6.0)], 300, header=True)
        emb = load_dual_embeddings(g, f, ["cat", "dog", "emu"])
        assert emb.matrix.shape == (4, 400)  # 3 words + pad
        assert emb.matrix[0].tolist() == [0.0] * 400
        cat = emb.matrix[emb.vocabulary["cat"]]
        assert cat[0] == pytest.approx(1.0)
        assert cat[100] == pytest.approx(5.0)

    def test_oov_zero_policy(self, tmp_path):
        g, f = tmp_path / "g.txt", tmp_path / "f.txt"
        self._write_vectors(g, [("cat", 1.0)], 100)
        self._write_vectors(f, [("cat", 5.0)], 300)
        emb = load_dual_embeddings(g, f, ["cat", "emu"])
        assert np.all(emb.matrix[emb.vocabulary["emu"]] == 0)

    def test_oov_hash_policy_deterministic(self, tmp_path):
        g, f = tmp_path / "g.txt", tmp_path / "f.txt"
        self._write_vectors(g, [("cat", 1.0)], 100)
        self._write_vectors(f, [("cat", 5.0)], 300)
        a = load_dual_embeddings(g, f, ["cat", "emu"], oov_policy="hash_ngram")
        b = load_dual_embeddings(g, f, ["cat", "emu"], oov_policy="hash_ngram")
        emu = a.matrix[a.vocabulary["emu"]]
        assert np.any(emu != 0)
        assert np.array_equal(emu, b.matrix[b.vocabulary["emu"]])

    def test_wrong_dimension_names_file(self, tmp_path):
        g, f = tmp_path / "glove_bad.txt", tmp_path / "f.txt"
        self._write_vectors(g, [("cat", 1.0)], 99)
        self._write_vectors(f, [("cat", 5.0)], 300)
        with pytest.raises(Exception, match="glove_bad"):
            load_dual_embeddings(g, f, ["cat"])

    def test_partial_presence(self, tmp_path):
        g, f = tmp_path / "g.txt", tmp_path / "f.txt"
        self._write_vectors(g, [("cat", 1.0)], 100)
        self._write_vectors(f, [("dog", 5.0)], 300)
        emb = load_dual_embeddings(g, f, ["cat", "dog"])
        cat = emb.matrix[emb.vocabulary["cat"]]
        dog = emb.matrix[emb.vocabulary["dog"]]
        assert np.any(cat[:100] != 0) and np.all(cat[100:] == 0)
        assert np.all(dog[:100] == 0) and np.any(dog[100:] != 0)

    def test_width_invariant(self):
        with pytest.raises(ValueError, match="400"):
            DualEmbedding(vocabulary={"a": 1}, matrix=np.zeros((2, 64)))

    def test_pad_row_must_be_zero(self):
        bad = np.ones((2, 400), dtype=np.float32)
        with pytest.raises(ValueError, match="pad"):
            DualEmbedding(vocabulary={"a": 1}, matrix=bad)

    def test_indices_lookup(self):
        emb = small_embedding()
        idx = emb.indices(["w0", "zzz", "w3"])
        assert idx[0] == emb.vocabulary["w0"]
        assert idx[1] == 0
        assert idx[2] == emb.vocabulary["w3"]


def tiny_setup(arch, seed=0, K=3, feat=24, **config_kwargs):
    emb = small_embedding()
    spec = ARCHITECTURES[arch]
    defaults = {
        "dpcnn": dict(filters=8, region_dim=8, blocks=2),
        "drnn": dict(window=3, hidden=6),
        "pooled_bilstm": dict(hidden=6),
    }[arch]
    defaults.update(config_kwargs)
    config = spec.config_cls(**defaults)
    params = spec.init_params(config, RNG(seed), K, feat, emb.matrix)
    f_nlp = RNG(seed + 1).normal(size=feat)
    return emb, config, params, f_nlp, spec


class TestShapeContracts:
    def test_dpcnn_z1_width(self):
        config = DpcnnConfig()
        params = dpcnn_init(config, RNG(0), 3, 24, np.zeros((5, 400), dtype=np.float32))
        assert params["head.W"].data.shape == (3, 128 + 24)
        assert config.conv_layers == 15

    def test_drnn_z2_width(self):
        params = drnn_init(DrnnConfig(hidden=128), RNG(0), 3, 24,
                           np.zeros((5, 400), dtype=np.float32))
        assert params["head.W"].data.shape == (3, 2 * 128 + 24)

    def test_pooled_bilstm_z3_width(self):
        params = pooled_init(PooledBilstmConfig(hidden=256), RNG(0), 3, 24,
                             np.zeros((5, 400), dtype=np.float32))
        assert params["head.W"].data.shape == (3, 6 * 256 + 24)
        assert 6 * 256 + 24 == 1560

    def test_binary_head_single_unit(self):
        params = pooled_init(PooledBilstmConfig(hidden=16), RNG(0), 2, 20,
                             np.zeros((5, 400), dtype=np.float32))
        assert params["head.W"].data.shape == (1, 6 * 16 + 20)

    def test_pool_length_chain(self):
        assert pooled_lengths(200, 6) == [200, 100, 50, 25, 13, 7, 4]

    def test_region_dim_must_match_filters(self):
        with pytest.raises(ValueError):
            DpcnnConfig(filters=128, region_dim=64)


class TestForwardContracts:
    @pytest.mark.parametrize("arch", sorted(ARCHITECTURES))
    def test_probabilities_simplex(self, arch):
        emb, config, params, f_nlp, spec = tiny_setup(arch)
        idx = emb.indices([f"w{i}" for i in range(7)])
        probs = spec.forward(idx, f_nlp, params, config, 3)
        assert probs.shape == (3,)
        assert np.all(probs >= 0)
        assert abs(probs.sum() - 1.0) < 1e-6

    @pytest.mark.parametrize("arch", sorted(ARCHITECTURES))
    def test_binary_head_expands_to_pair(self, arch):
        emb, config, params, f_nlp, spec = tiny_setup(arch, K=2, feat=20)
        idx = emb.indices(["w1", "w2", "w3"])
        probs = spec.forward(idx, f_nlp, params, config, 2)
        assert probs.shape == (2,)
        assert abs(probs.sum() - 1.0) < 1e-9

    @pytest.mark.parametrize("arch", sorted(ARCHITECTURES))
    def test_eval_deterministic(self, arch):
        emb, config, params, f_nlp, spec = tiny_setup(arch)
        idx = emb.indices(["w1", "w2", "w3", "w4"])
        a = spec.forward(idx, f_nlp, params, config, 3)
        b = spec.forward(idx, f_nlp, params, config, 3)
        assert np.array_equal(a, b)

    @pytest.mark.parametrize("arch", sorted(ARCHITECTURES))
    def test_empty_document_rejected(self, arch):
        emb, config, params, f_nlp, spec = tiny_setup(arch)
        with pytest.raises(EmptyDocumentError):
            spec.forward(np.array([], dtype=np.int64), f_nlp, params, config, 3)

    @pytest.mark.parametrize("arch", sorted(ARCHITECTURES))
    def test_single_token_document(self, arch):
        emb, config, params, f_nlp, spec = tiny_setup(arch)
        probs = spec.forward(emb.indices(["w5"]), f_nlp, params, config, 3)
        assert abs(probs.sum() - 1.0) < 1e-6

    @pytest.mark.parametrize("arch", sorted(ARCHITECTURES))
    def test_all_unknown_tokens_degrade_gracefully(self, arch):
        emb, config, params, f_nlp, spec = tiny_setup(arch)
        probs = spec.forward(emb.indices(["zz", "qq"]), f_nlp, params, config, 3)
        assert abs(probs.sum() - 1.0) < 1e-6

    @pytest.mark.parametrize("arch", sorted(ARCHITECTURES))
    def test_feature_permutation_wiring(self, arch):
        # Permuting f_nlp entries together with the matching head columns
        # must leave the output unchanged: features enter only at the head.
        emb, config, params, f_nlp, spec = tiny_setup(arch)
        idx = emb.indices(["w1", "w2", "w3"])
        base = spec.forward(idx, f_nlp, params, config, 3)
        perm = RNG(9).permutation(len(f_nlp))
        hidden_width = params["head.W"].data.shape[1] - len(f_nlp)
        W = params["head.W"].data.copy()
        W[:, hidden_width:] = W[:, hidden_width:][:, perm]
        permuted = dict(params)
        permuted["head.W"] = Tensor(W)
        got = spec.forward(idx, f_nlp[perm], permuted, config, 3)
        np.testing.assert_allclose(got, base, atol=1e-12)


class TestDrnnReduction:
    def test_window_geq_n_matches_bilstm(self):
        # With the window at least as long as the sequence, every directional
        # window spans the whole sequence and the model must reduce exactly
        # to a plain BiLSTM followed by masked max pooling.
        emb, config, params, f_nlp, spec = tiny_setup("drnn", window=10, hidden=5)
        tokens = ["w1", "w4", "w2", "w7", "w3", "w6"]
        idx = emb.indices(tokens)
        got = drnn_forward(idx, f_nlp, params, config, 3)

        x = embedding_lookup(params["embedding"], idx)
        H = bilstm(x, BilstmParams.from_params(params), config.hidden)
        pooled = masked_global_pool(H, len(tokens), "max")
        logits = add(matmul(params["head.W"], concat([pooled, Tensor(f_nlp)])),
                     params["head.b"])
        want = softmax(logits.data)
        np.testing.assert_allclose(got, want, atol=1e-5)

    def test_window_exactly_n_matches_too(self):
        emb, config, params, f_nlp, spec = tiny_setup("drnn", window=4, hidden=5)
        idx = emb.indices(["w1", "w4", "w2", "w7"])
        got = drnn_forward(idx, f_nlp, params, config, 3)
        x = embedding_lookup(params["embedding"], idx)
        H = bilstm(x, BilstmParams.from_params(params), config.hidden)
        pooled = masked_global_pool(H, 4, "max")
        logits = add(matmul(params["head.W"], concat([pooled, Tensor(f_nlp)])),
                     params["head.b"])
        np.testing.assert_allclose(got, softmax(logits.data), atol=1e-5)

    def test_small_window_differs_from_bilstm(self):
        # Sanity: the reduction is a special case, not an identity.
        emb, config, params, f_nlp, spec = tiny_setup("drnn", window=2, hidden=5)
        idx = emb.indices(["w1", "w4", "w2", "w7", "w3", "w6", "w8", "w9"])
        got = drnn_forward(idx, f_nlp, params, config, 3)
        x = embedding_lookup(params["embedding"], idx)
        H = bilstm(x, BilstmParams.from_params(params), config.hidden)
        pooled = masked_global_pool(H, 8, "max")
        logits = add(matmul(params["head.W"], concat([pooled, Tensor(f_nlp)])),
                     params["head.b"])
        assert not np.allclose(got, softmax(logits.data), atol=1e-5)

    def test_prepended_padding_changes_nothing(self):
        emb, config, params, f_nlp, spec = tiny_setup("drnn", window=3, hidden=5)
        idx = emb.indices(["w1", "w4", "w2", "w7"])
        padded = np.concatenate([np.zeros(config.window, dtype=np.int64), idx])
        base = drnn_forward(idx, f_nlp, params, config, 3)
        shifted = drnn_forward(padded, f_nlp, params, config, 3)
        np.testing.assert_array_equal(base, shifted)


class TestPooledBilstmStructure:
    def test_single_token_summary_thirds_identical(self):
        emb, config, params, f_nlp, spec = tiny_setup("pooled_bilstm", hidden=4)
        idx = emb.indices(["w3"])
        got = pooled_bilstm_forward(idx, f_nlp, params, config, 3)
        # Reference: with one row, h_n, c_max and c_mean are all that row.
        x = embedding_lookup(params["embedding"], idx)
        H = bilstm(x, BilstmParams.from_params(params), config.hidden)
        h = row(H, 0)
        z = concat([h, h, h, Tensor(f_nlp)])
        logits = add(matmul(params["head.W"], z), params["head.b"])
        np.testing.assert_allclose(got, softmax(logits.data), atol=1e-12)


class TestDpcnnStructure:
    def test_fifteen_conv_layers_at_defaults(self):
        assert DpcnnConfig().conv_layers == 15

    def test_conv_parameter_inventory(self):
        emb, config, params, f_nlp, spec = tiny_setup("dpcnn")
        # region + (blocks+1) residual pairs, each pair = 2 convs
        conv_ws = [k for k in params if k.endswith(".W") and k != "head.W"]
        assert len(conv_ws) == config.conv_layers
        assert "region.slope" not in params  # region conv is linear
        assert "block0.conv1.slope" in params

    def test_regularization_covers_conv_tensors_only(self):
        emb, config, params, f_nlp, spec = tiny_setup("dpcnn")
        reg = dpcnn_regularization(params, config)
        expected = config.l2 * sum(
            float(np.sum(params[name].data ** 2))
            for name in params
            if (name.endswith(".W") or name.endswith(".b")) and not name.startswith("head")
            if name != "embedding"
        )
        assert float(reg.data) == pytest.approx(expected, rel=1e-6)

    def test_long_document_runs(self):
        emb, config, params, f_nlp, spec = tiny_setup("dpcnn")
        idx = RNG(4).integers(1, 12, size=200)
        probs = dpcnn_forward(idx, f_nlp, params, config, 3)
        assert abs(probs.sum() - 1.0) < 1e-6


class TestBundleRoundTrip:
    def _bundle(self, arch="drnn", K=3):
        emb, config, params, f_nlp, spec = tiny_setup(arch, K=K,
                                                      feat=24 if K == 3 else 20)
        from dataclasses import asdict
        scaler = FeatureScaler(mean=np.arange(24 if K == 3 else 20, dtype=np.float64),
                               std=np.full(24 if K == 3 else 20, 1.5))
        return ModelBundle(
            architecture=arch,
            config=asdict(config),
            params=params,
            scaler=scaler,
            schema=TRAC_SCHEMA if K == 3 else KAGGLE_SCHEMA,
            profile="trac" if K == 3 else "kaggle",
            vocabulary=dict(emb.vocabulary),
        ), emb, config, f_nlp, spec

    def test_round_trip_tensors_identical(self, tmp_path):
        bundle, *_ = self._bundle()
        path = tmp_path / "m.aggr"
        save_bundle(bundle, path)
        loaded = load_bundle(path)
        assert set(loaded.params) == set(bundle.params)
        for name in bundle.params:
            np.testing.assert_array_equal(
                loaded.params[name].data,
                bundle.params[name].data.astype(np.float32))
        assert loaded.schema == bundle.schema
        assert loaded.vocabulary == bundle.vocabulary
        assert np.array_equal(loaded.scaler.mean, bundle.scaler.mean)

    def test_round_trip_predictions_bit_identical(self, tmp_path):
        bundle, emb, config, f_nlp, spec = self._bundle()
        path = tmp_path / "m.aggr"
        save_bundle(bundle, path)
        loaded = load_bundle(path)
        idx = emb.indices(["w1", "w2", "w9"])
        cfg_cls = type(config)
        before = spec.forward(idx, f_nlp, {n: Tensor(t.data.astype(np.float32))
                                           for n, t in bundle.params.items()},
                              cfg_cls(**bundle.config), 3)
        after = spec.forward(idx, f_nlp, loaded.params, cfg_cls(**loaded.config), 3)
        assert np.array_equal(before, after)

    def test_save_is_deterministic(self, tmp_path):
        bundle, *_ = self._bundle()
        p1, p2 = tmp_path / "a.aggr", tmp_path / "b.aggr"
        save_bundle(bundle, p1)
        save_bundle(bundle, p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_bad_magic_rejected(self, tmp_path):
        bundle, *_ = self._bundle()
        path = tmp_path / "m.aggr"
        save_bundle(bundle, path)
        blob = bytearray(path.read_bytes())
        blob[0] = ord(b"X")
        path.write_bytes(bytes(blob))
        with pytest.raises(BundleFormatError, match="magic"):
            load_bundle(path)

    def test_truncated_payload_rejected(self, tmp_path):
        bundle, *_ = self._bundle()
        path = tmp_path / "m.aggr"
        save_bundle(bundle, path)
        blob = path.read_bytes()
        path.write_bytes(blob[:len(blob) - 64])
        with pytest.raises(BundleFormatError, match="truncated"):
            load_bundle(path)

    def test_unsupported_version_rejected(self, tmp_path):
        bundle, *_ = self._bundle()
        path = tmp_path / "m.aggr"
        save_bundle(bundle, path)
        blob = bytearray(path.read_bytes())
        blob[4] = 99
        path.write_bytes(bytes(blob))
        with pytest.raises(BundleFormatError, match="version"):
            load_bundle(path)

    def test_corrupted_header_rejected(self, tmp_path):
        bundle, *_ = self._bundle()
        path = tmp_path / "m.aggr"
        save_bundle(bundle, path)
        blob = bytearray(path.read_bytes())
        blob[20] = 0xFF  # inside the JSON header
        path.write_bytes(bytes(blob))
        with pytest.raises(BundleFormatError):
            load_bundle(path)
