"""Encoder contracts: masking, determinism, hand-rolled oracle, gradients."""

import numpy as np
import pytest
from scipy.special import erf

from hybridref.encoder import EncoderConfig, EncoderParams, encode, mlm_logits
from hybridref.errors import ConfigError, ShapeError, VocabError
from hybridref.model import HybridModel
from hybridref.tensor import Tensor, finite_difference_check


def _params(seed=0, **kwargs):
    defaults = dict(vocab_size=13, d_model=8, num_layers=1, num_heads=2,
                    ffn_multiplier=2, max_positions=16)
    defaults.update(kwargs)
    cfg = EncoderConfig(**defaults)
    return cfg, EncoderParams.init(cfg, np.random.default_rng(seed))


def test_config_validation():
    with pytest.raises(ConfigError):
        EncoderConfig(vocab_size=10, d_model=10, num_heads=3)
    with pytest.raises(ConfigError):
        EncoderConfig(vocab_size=10, max_positions=513)
    with pytest.raises(ConfigError):
        EncoderConfig(vocab_size=0)


def test_config_json_round_trip():
    cfg = EncoderConfig(vocab_size=99, d_model=16, num_layers=3, num_heads=4,
                        ffn_multiplier=2, max_positions=32)
    assert EncoderConfig.from_json(cfg.to_json()) == cfg
    with pytest.raises(ConfigError, match="unknown EncoderConfig fields"):
        EncoderConfig.from_dict({"vocab_size": 3, "bogus": 1})


def test_encode_validation_errors():
    cfg, params = _params()
    ids = [5, 6, 7]
    ones = [True] * 3
    with pytest.raises(ShapeError, match="lengths differ"):
        encode(params, ids, [0, 0], ones)
    with pytest.raises(ShapeError, match="pre-truncate"):
        encode(params, list(range(1, 13)) + [5] * 10, [0] * 22, [True] * 22)
    with pytest.raises(VocabError):
        encode(params, [5, 99], [0, 0], [True, True])
    with pytest.raises(VocabError):
        encode(params, [5, 6], [0, 3], [True, True])


def test_encode_deterministic():
    cfg, params = _params()
    ids, segs, mask = [5, 6, 7, 8], [0, 0, 1, 1], [True] * 4
    a = encode(params, ids, segs, mask).data
    b = encode(params, ids, segs, mask).data
    assert np.array_equal(a, b)


def _numpy_reference_single_token(cfg, params, token_id):
    """Plain-numpy 1-token, 1-layer forward; attention over one position is identity."""
    def arr(name):
        return params[name].data

    def ln(x, g, b, eps=1e-12):
        mu = x.mean()
        var = ((x - mu) ** 2).mean()
        return (x - mu) / np.sqrt(var + eps) * g + b

    x = arr("token_embeddings")[token_id] + arr("position_embeddings")[0] + arr("segment_embeddings")[0]
    x = ln(x, arr("embedding_norm.gain"), arr("embedding_norm.bias"))
    v = x @ arr("layer0.attn.wv") + arr("layer0.attn.bv")
    ctx = v  # softmax over a singleton is exactly [1.0]
    att = ctx @ arr("layer0.attn.wo") + arr("layer0.attn.bo")
    x = ln(x + att, arr("layer0.attn_norm.gain"), arr("layer0.attn_norm.bias"))
    h = x @ arr("layer0.ffn.w1") + arr("layer0.ffn.b1")
    h = 0.5 * h * (1.0 + erf(h / np.sqrt(2.0)))
    ffn = h @ arr("layer0.ffn.w2") + arr("layer0.ffn.b2")
    return ln(x + ffn, arr("layer0.ffn_norm.gain"), arr("layer0.ffn_norm.bias"))


def test_single_token_matches_numpy_reference():
    cfg, params = _params(num_heads=1)
    got = encode(params, [7], [0], [True]).data[0]
    want = _numpy_reference_single_token(cfg, params, 7)
    np.testing.assert_allclose(got, want, atol=1e-12)


def test_padding_invariance():
    cfg, params = _params()
    ids = [5, 6, 7, 8, 9]
    segs = [0] * 5
    base = encode(params, ids, segs, [True] * 5).data

    padded = encode(params, ids + [0, 0], segs + [0, 0], [True] * 5 + [False, False]).data
    np.testing.assert_allclose(padded[:5], base, atol=1e-9)

    # masked-out positions may hold arbitrary ids; swapping them changes nothing real
    a = encode(params, ids + [3, 4], segs + [0, 0], [True] * 5 + [False, False]).data
    b = encode(params, ids + [4, 3], segs + [0, 0], [True] * 5 + [False, False]).data
    np.testing.assert_allclose(a[:5], b[:5], atol=1e-9)
    np.testing.assert_allclose(a[:5], base, atol=1e-9)


def test_attention_gives_masked_keys_zero_weight_exactly():
    # with one real token and one padded key, output equals the singleton case
    cfg, params = _params(num_heads=1)
    alone = encode(params, [7], [0], [True]).data[0]
    with_pad = encode(params, [7, 9], [0, 0], [True, False]).data[0]
    np.testing.assert_allclose(with_pad, alone, atol=1e-12)


def test_encode_gradients_match_finite_differences():
    cfg, params = _params(seed=3, num_heads=1)
    ids, segs, mask = [5, 6, 7], [0, 0, 1], [True, True, True]
    probe = Tensor(np.random.default_rng(0).normal(size=(3, 8)))

    def loss_fn():
        return (encode(params, ids, segs, mask) * probe).sum()

    report = finite_difference_check(loss_fn, params.parameters(), h=1e-5, rel_tol=1e-4)
    assert report.ok, report.failures[:5]


def test_mlm_logits_zero_hidden_gives_bias():
    cfg, params = _params()
    hidden = Tensor(np.zeros((4, 8)))
    logits = mlm_logits(params, hidden, [1, 3])
    bias = params["mlm_head.bias"].data
    np.testing.assert_allclose(logits.data, np.stack([bias, bias]), atol=1e-15)


def test_mlm_logits_identical_rows_and_normalization(rng):
    cfg, params = _params()
    row = rng.normal(size=8)
    hidden = Tensor(np.stack([row, row, rng.normal(size=8)]))
    logits = mlm_logits(params, hidden, [0, 1, 2]).data
    np.testing.assert_array_equal(logits[0], logits[1])
    probs = np.exp(logits - logits.max(axis=1, keepdims=True))
    probs /= probs.sum(axis=1, keepdims=True)
    np.testing.assert_allclose(probs.sum(axis=1), np.ones(3), atol=1e-12)


def test_mlm_logits_position_out_of_range():
    cfg, params = _params()
    hidden = Tensor(np.zeros((2, 8)))
    with pytest.raises(ShapeError, match="position out of range"):
        mlm_logits(params, hidden, [2])


def test_tied_mlm_projection_uses_token_embeddings():
    cfg, params = _params(tie_mlm_embeddings=True)
    assert "mlm_head.weight" not in params.parameters()
    hidden = Tensor(np.random.default_rng(2).normal(size=(3, 8)))
    logits = mlm_logits(params, hidden, [0]).data
    want = hidden.data[0] @ params["token_embeddings"].data.T + params["mlm_head.bias"].data
    np.testing.assert_allclose(logits[0], want, atol=1e-12)


def test_model_init_is_seeded():
    cfg = EncoderConfig(vocab_size=13, d_model=8, num_layers=1, num_heads=1,
                        ffn_multiplier=2, max_positions=16)
    a = HybridModel.init(cfg, seed=5).state_arrays()
    b = HybridModel.init(cfg, seed=5).state_arrays()
    c = HybridModel.init(cfg, seed=6).state_arrays()
    assert all(np.array_equal(a[k], b[k]) for k in a)
    assert any(not np.array_equal(a[k], c[k]) for k in a)


def test_attention_rows_sum_to_one_and_masked_keys_are_zero():
    from hybridref.tensor import Tape

    cfg, params = _params()
    ids = [5, 6, 7, 8, 0, 0]
    mask = [True] * 4 + [False] * 2
    with Tape() as tape:
        encode(params, ids, [0] * 6, mask)
    attn_maps = [rec.output.data for rec in tape.records
                 if rec.name == "softmax_last_dim" and rec.output.data.ndim == 3]
    assert len(attn_maps) == cfg.num_layers
    for attn in attn_maps:
        np.testing.assert_allclose(attn.sum(axis=-1), np.ones(attn.shape[:2]), atol=1e-12)
        assert (attn[:, :, 4:] == 0.0).all()  # padded keys carry exactly zero weight
        np.testing.assert_allclose(attn[:, :, :4].sum(axis=-1),
                                   np.ones(attn.shape[:2]), atol=1e-12)
