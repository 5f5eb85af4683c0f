"""Vector and probability primitives: examples first, then properties."""

import numpy as np
import pytest

from zosd import (
    DEFAULT_TEMPLATE,
    EmbeddingVector,
    Label,
    LabelKind,
    PromptTemplate,
    ScoringConfig,
    SoftmaxDistribution,
    cosine,
    normalize,
    render_prompt,
    seen_label,
    softmax,
)
from zosd.errors import (
    ConfigurationError,
    DimMismatchError,
    EmptyInputError,
    NonFiniteError,
    NormViolationError,
    ZeroVectorError,
)


class TestNormalize:
    def test_three_four_five_triangle(self):
        np.testing.assert_allclose(normalize([3, 4]).values, [0.6, 0.8], rtol=0, atol=1e-7)

    def test_already_unit(self):
        np.testing.assert_array_equal(normalize([1, 0, 0]).values, [1.0, 0.0, 0.0])

    def test_diagonal(self):
        # 1/sqrt(2) both ways.
        np.testing.assert_allclose(
            normalize([1, 1]).values, [0.7071068, 0.7071068], rtol=0, atol=1e-6
        )

    def test_zero_vector_rejected(self):
        with pytest.raises(ZeroVectorError):
            normalize([0.0, 0.0, 0.0])

    def test_non_finite_rejected(self):
        with pytest.raises(NonFiniteError):
            normalize([1.0, float("nan")])
        with pytest.raises(NonFiniteError):
            normalize([1.0, float("inf")])

    def test_empty_rejected(self):
        with pytest.raises(EmptyInputError):
            normalize([])

    def test_idempotent(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            v = rng.normal(size=rng.integers(2, 64))
            once = normalize(v)
            twice = normalize(once.values)
            np.testing.assert_allclose(once.values, twice.values, rtol=0, atol=1e-6)

    def test_direction_preserved(self):
        rng = np.random.default_rng(8)
        v = rng.normal(size=16)
        unit = normalize(v).values.astype(np.float64)
        ratio = np.linalg.norm(v)
        np.testing.assert_allclose(unit * ratio, v, rtol=1e-6, atol=1e-6)


class TestCosine:
    def test_self_similarity(self):
        u = normalize([0.3, -1.2, 0.5])
        assert cosine(u, u) == pytest.approx(1.0, abs=1e-6)

    def test_orthogonal(self):
        assert cosine(normalize([1, 0]), normalize([0, 1])) == 0.0

    def test_hand_dot_product(self):
        a = normalize([0.6, 0.8])
        b = normalize([0.8, 0.6])
        assert cosine(a, b) == pytest.approx(0.96, abs=1e-6)

    def test_symmetric_exactly(self):
        rng = np.random.default_rng(9)
        for _ in range(100):
            a = normalize(rng.normal(size=32))
            b = normalize(rng.normal(size=32))
            assert cosine(a, b) == cosine(b, a)

    def test_clamped_to_unit_interval(self):
        u = normalize([1.0] * 7)
        assert -1.0 <= cosine(u, u) <= 1.0
        axis = normalize([1, 0])
        assert cosine(axis, normalize([-1, 0])) == -1.0

    def test_dim_mismatch(self):
        with pytest.raises(DimMismatchError):
            cosine(normalize([1, 0]), normalize([1, 0, 0]))


class TestSoftmax:
    def test_uniform_under_equal_logits(self):
        for tau in (0.5, 1.0, 100.0):
            np.testing.assert_array_equal(softmax([2.5] * 4, tau), [0.25] * 4)

    def test_single_logit_degenerates(self):
        np.testing.assert_array_equal(softmax([-3.7], 10.0), [1.0])

    def test_two_logit_hand_value(self):
        # e / (e + 1) and its complement.
        np.testing.assert_allclose(
            softmax([1.0, 0.0], 1.0), [0.7310586, 0.2689414], rtol=0, atol=1e-6
        )

    def test_sums_to_one(self):
        rng = np.random.default_rng(10)
        for _ in range(200):
            logits = rng.normal(scale=10, size=rng.integers(1, 40))
            tau = float(rng.uniform(0.01, 200))
            assert abs(softmax(logits, tau).sum() - 1.0) < 1e-6

    def test_shift_invariance(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            logits = rng.normal(size=12)
            shift = float(rng.uniform(-50, 50))
            base = softmax(logits, 3.0)
            shifted = softmax(logits + shift, 3.0)
            np.testing.assert_allclose(base, shifted, rtol=0, atol=1e-9)

    def test_preserves_ordering(self):
        rng = np.random.default_rng(12)
        for _ in range(100):
            logits = rng.normal(size=8)
            tau = float(rng.uniform(0.01, 50))
            probs = softmax(logits, tau)
            for i in range(8):
                for j in range(8):
                    if logits[i] > logits[j]:
                        assert probs[i] > probs[j]

    def test_permutation_equivariance(self):
        # Permuting changes the reduction order of the normalizer, so
        # agreement is up to a couple of ulps, not bitwise.
        rng = np.random.default_rng(13)
        for _ in range(50):
            logits = rng.normal(size=10)
            perm = rng.permutation(10)
            np.testing.assert_allclose(
                softmax(logits[perm], 2.0), softmax(logits, 2.0)[perm], rtol=0, atol=1e-12
            )

    def test_extreme_logits_stable(self):
        probs = softmax([1e4, -1e4], 1.0)
        assert np.all(np.isfinite(probs))
        assert probs[0] == pytest.approx(1.0)

    def test_rejects_bad_input(self):
        with pytest.raises(EmptyInputError):
            softmax([], 1.0)
        with pytest.raises(NonFiniteError):
            softmax([1.0, float("nan")], 1.0)
        with pytest.raises(ConfigurationError):
            softmax([1.0], 0.0)


class TestPromptTemplate:
    def test_default_renders_with_period(self):
        assert render_prompt(DEFAULT_TEMPLATE, "dog") == "This is a photo of a dog."

    def test_identity_template(self):
        assert render_prompt(PromptTemplate("{}"), "cat") == "cat"

    def test_multiword_label_untouched(self):
        assert (
            render_prompt(DEFAULT_TEMPLATE, "frying pan")
            == "This is a photo of a frying pan."
        )

    def test_no_case_change_or_trimming(self):
        assert render_prompt(PromptTemplate("x {} y"), " Dog ") == "x  Dog  y"

    def test_accepts_label_objects(self):
        assert render_prompt(DEFAULT_TEMPLATE, seen_label("bird")).endswith("a bird.")

    def test_requires_exactly_one_marker(self):
        with pytest.raises(ValueError):
            PromptTemplate("no marker")
        with pytest.raises(ValueError):
            PromptTemplate("{} and {}")


class TestDomainTypes:
    def test_label_name_non_empty(self):
        with pytest.raises(ValueError):
            Label("", LabelKind.SEEN)

    def test_embedding_rejects_non_unit(self):
        with pytest.raises(NormViolationError):
            EmbeddingVector(np.array([3.0, 4.0], dtype=np.float32))

    def test_embedding_values_read_only(self):
        vec = normalize([1, 2, 2])
        with pytest.raises(ValueError):
            vec.values[0] = 0.5

    def test_scoring_config_validation(self):
        with pytest.raises(ConfigurationError):
            ScoringConfig(temperature=0.0)
        with pytest.raises(ConfigurationError):
            ScoringConfig(k=0)
        config = ScoringConfig()
        assert config.temperature == 100.0
        assert config.k == 35
        assert config.filter_stopwords and config.dedup_against_seen

    def test_distribution_validates_sum(self):
        a, b = seen_label("a"), seen_label("b")
        SoftmaxDistribution(((a, 0.25), (b, 0.75)))
        with pytest.raises(ValueError):
            SoftmaxDistribution(((a, 0.5), (b, 0.4)))
        with pytest.raises(ValueError):
            SoftmaxDistribution(((a, 1.2), (b, -0.2)))
