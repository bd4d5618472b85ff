"""Associative memory algebra against a quadruple-loop oracle.

The oracle builds Kronecker blocks and the memory sum with plain
nested loops over indices, no numpy shortcuts, so the library's
broadcasting tricks are checked against first-principles arithmetic.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bronchial_dx.cdamm import (
    Codebook,
    InconclusivePolicy,
    Memory,
    build_memory,
    canonical_codebook,
    classify,
    diagnose_sequence,
    empty_memory,
    kron_vectors,
    kronecker,
    learn_case,
    memory_from_doc,
    memory_to_doc,
    random_orthonormal_codebook,
    retrieve,
)
from bronchial_dx.errors import ValidationError

# ---------------------------------------------------------------- oracles


def naive_kron(a, b):
    p, q = len(a), len(a[0])
    e, f = len(b), len(b[0])
    out = [[0.0] * (q * f) for _ in range(p * e)]
    for i in range(p):
        for j in range(q):
            for u in range(e):
                for v in range(f):
                    out[i * e + u][j * f + v] = a[i][j] * b[u][v]
    return out


def naive_memory(disease_codes, sign_codes, associations, disease_ids, sign_ids):
    """Memory sum with explicit loops; codes given as column lists."""
    k = len(disease_ids)
    d = len(sign_ids)
    psi = [[0.0] * (k * d) for _ in range(k)]
    for disease, signs in associations.items():
        di = disease_ids.index(disease)
        t = [disease_codes[r][di] for r in range(k)]
        s_sum = [0.0] * d
        for sign in signs:
            si = sign_ids.index(sign)
            for r in range(d):
                s_sum[r] += sign_codes[r][si]
        t_col = [[value] for value in t]
        s_col = [[value] for value in s_sum]
        kron_col = naive_kron(t_col, s_col)  # (k*d) x 1
        for r in range(k):
            for c in range(k * d):
                psi[r][c] += t[r] * kron_col[c][0]
    return psi


def naive_retrieve(psi, c, s):
    k = len(c)
    d = len(s)
    x = [0.0] * (k * d)
    for i in range(k):
        for j in range(d):
            x[i * d + j] = c[i] * s[j]
    return [sum(psi[r][m] * x[m] for m in range(k * d)) for r in range(len(psi))]


def disease_names(k):
    return [f"disease-{i}" for i in range(k)]


def sign_names(d):
    return [f"sign-{j}" for j in range(d)]


# ---------------------------------------------------------------- kronecker


class TestKronecker:
    def test_scalar_identity(self):
        a = np.array([[1.0, 2.0], [3.0, 4.0]])
        assert np.array_equal(kronecker(a, np.array([[1.0]])), a)

    def test_dimensions_multiply(self):
        a = np.ones((2, 3))
        b = np.ones((4, 5))
        assert kronecker(a, b).shape == (8, 15)

    def test_worked_block_example(self):
        a = np.array([[1.0, 2.0], [3.0, 4.0]])
        b = np.array([[0.0, 1.0], [1.0, 0.0]])
        expected = np.array(
            [
                [0, 1, 0, 2],
                [1, 0, 2, 0],
                [0, 3, 0, 4],
                [3, 0, 4, 0],
            ],
            dtype=np.float64,
        )
        assert np.array_equal(kronecker(a, b), expected)

    def test_matches_quadruple_loop(self):
        rng = np.random.default_rng(2)
        for _ in range(25):
            p, q, e, f = rng.integers(1, 5, size=4)
            a = rng.normal(size=(p, q))
            b = rng.normal(size=(e, f))
            assert np.array_equal(kronecker(a, b), np.array(naive_kron(a.tolist(), b.tolist())))

    def test_rejects_bad_operands(self):
        with pytest.raises(ValidationError):
            kronecker(np.ones(3), np.ones((2, 2)))
        with pytest.raises(ValidationError):
            kronecker(np.ones((0, 2)), np.ones((2, 2)))


# ---------------------------------------------------------------- building


class TestBuildMemory:
    def disjoint_memory(self):
        diseases = canonical_codebook(["d1", "d2"])
        signs = canonical_codebook(["s1", "s2"])
        return build_memory(diseases, signs, {"d1": {"s1"}, "d2": {"s2"}})

    def test_disjoint_worked_example(self):
        memory = self.disjoint_memory()
        expected = np.array(
            [
                [1, 0, 0, 0],
                [0, 0, 0, 1],
            ],
            dtype=np.float64,
        )
        assert np.array_equal(memory.psi, expected)

    def test_single_disease_both_signs(self):
        diseases = canonical_codebook(["only"])
        signs = canonical_codebook(["s1", "s2"])
        memory = build_memory(diseases, signs, {"only": {"s1", "s2"}})
        assert np.array_equal(memory.psi, np.array([[1.0, 1.0]]))

    def test_empty_sign_set_rejected(self):
        diseases = canonical_codebook(["d1"])
        signs = canonical_codebook(["s1"])
        with pytest.raises(ValidationError):
            build_memory(diseases, signs, {"d1": set()})

    def test_unknown_ids_rejected(self):
        diseases = canonical_codebook(["d1"])
        signs = canonical_codebook(["s1"])
        with pytest.raises(ValidationError):
            build_memory(diseases, signs, {"ghost": {"s1"}})
        with pytest.raises(ValidationError):
            build_memory(diseases, signs, {"d1": {"ghost"}})

    def test_blank_memory_is_legal(self):
        memory = empty_memory(canonical_codebook(["d1"]), canonical_codebook(["s1"]))
        assert not memory.psi.any()

    @settings(max_examples=40, deadline=None)
    @given(
        st.integers(min_value=1, max_value=6),
        st.integers(min_value=1, max_value=12),
        st.integers(min_value=0, max_value=2**31 - 1),
    )
    def test_matches_loop_oracle(self, k, d, seed):
        rng = np.random.default_rng(seed)
        d_ids, s_ids = disease_names(k), sign_names(d)
        associations = {
            d_ids[i]: {s_ids[j] for j in range(d) if rng.random() < 0.4}
            for i in range(k)
        }
        associations = {disease: signs for disease, signs in associations.items() if signs}
        diseases = canonical_codebook(d_ids)
        signs = canonical_codebook(s_ids)
        memory = build_memory(diseases, signs, associations)
        expected = naive_memory(
            diseases.codes.tolist(), signs.codes.tolist(), associations, d_ids, s_ids
        )
        assert np.allclose(memory.psi, np.array(expected), atol=1e-12)

    def test_random_codes_match_loop_oracle(self):
        d_ids, s_ids = disease_names(4), sign_names(6)
        diseases = random_orthonormal_codebook(d_ids, seed=9)
        signs = random_orthonormal_codebook(s_ids, seed=10)
        associations = {"disease-0": {"sign-1", "sign-3"}, "disease-2": {"sign-0"}}
        memory = build_memory(diseases, signs, associations)
        expected = naive_memory(
            diseases.codes.tolist(), signs.codes.tolist(), associations, d_ids, s_ids
        )
        assert np.allclose(memory.psi, np.array(expected), atol=1e-12)


# ---------------------------------------------------------------- retrieval


class TestRetrieve:
    def setup_method(self):
        diseases = canonical_codebook(["d1", "d2"])
        signs = canonical_codebook(["s1", "s2"])
        self.memory = build_memory(diseases, signs, {"d1": {"s1"}, "d2": {"s2"}})

    def test_shared_context_selects_by_sign(self):
        out = retrieve(self.memory, np.array([0.5, 0.5]), np.array([1.0, 0.0]))
        assert np.allclose(out, [0.5, 0.0])

    def test_unassociated_sign_returns_zero(self):
        out = retrieve(self.memory, np.array([1.0, 0.0]), np.array([0.0, 1.0]))
        assert np.allclose(out, [0.0, 0.0])

    def test_perfect_recall_on_own_sign(self):
        out = retrieve(self.memory, np.array([1.0, 0.0]), np.array([1.0, 0.0]))
        assert np.allclose(out, [1.0, 0.0])

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(ValidationError):
            retrieve(self.memory, np.array([1.0]), np.array([1.0, 0.0]))
        with pytest.raises(ValidationError):
            retrieve(self.memory, np.array([1.0, 0.0]), np.array([1.0]))

    def test_zero_vectors_rejected(self):
        with pytest.raises(ValidationError):
            retrieve(self.memory, np.zeros(2), np.array([1.0, 0.0]))
        with pytest.raises(ValidationError):
            retrieve(self.memory, np.array([1.0, 0.0]), np.zeros(2))

    @given(st.floats(min_value=0.1, max_value=10), st.integers(min_value=0, max_value=2**31 - 1))
    def test_bilinearity_in_context(self, alpha, seed):
        rng = np.random.default_rng(seed)
        c = rng.normal(size=2)
        if np.linalg.norm(c) == 0:
            c = np.array([1.0, 0.0])
        s = np.array([1.0, 0.0])
        direct = retrieve(self.memory, alpha * c, s)
        scaled = alpha * retrieve(self.memory, c, s)
        assert np.allclose(direct, scaled, atol=1e-9)

    def test_matches_loop_oracle_random_cases(self):
        rng = np.random.default_rng(31)
        for _ in range(30):
            k = int(rng.integers(1, 7))
            d = int(rng.integers(1, 13))
            d_ids, s_ids = disease_names(k), sign_names(d)
            associations = {
                d_ids[i]: {s_ids[j] for j in range(d) if rng.random() < 0.5} for i in range(k)
            }
            associations = {x: y for x, y in associations.items() if y}
            memory = build_memory(canonical_codebook(d_ids), canonical_codebook(s_ids), associations)
            c = rng.normal(size=k)
            s = rng.normal(size=d)
            if np.linalg.norm(c) == 0 or np.linalg.norm(s) == 0:
                continue
            expected = naive_retrieve(memory.psi.tolist(), c.tolist(), s.tolist())
            assert np.allclose(retrieve(memory, c, s), expected, atol=1e-9)


# ---------------------------------------------------------------- diagnosis


class TestDiagnoseSequence:
    def disjoint_memory(self):
        return build_memory(
            canonical_codebook(["asthma", "healthy"]),
            canonical_codebook(["s1", "s2"]),
            {"asthma": {"s1"}, "healthy": {"s2"}},
        )

    def test_single_sign_resolves_fully(self):
        diagnosis = diagnose_sequence(self.disjoint_memory(), ["s1"])
        assert diagnosis.probabilities["asthma"] == pytest.approx(1.0)
        assert diagnosis.verdict == "positive"
        assert diagnosis.top == "asthma"

    def test_other_disease_is_negative_verdict(self):
        diagnosis = diagnose_sequence(self.disjoint_memory(), ["s2"])
        assert diagnosis.verdict == "negative"
        assert diagnosis.top == "healthy"

    def test_unassociated_signs_go_inconclusive(self):
        memory = build_memory(
            canonical_codebook(["asthma", "healthy"]),
            canonical_codebook(["s1", "s2", "orphan"]),
            {"asthma": {"s1"}, "healthy": {"s2"}},
        )
        diagnosis = diagnose_sequence(memory, ["orphan"])
        assert diagnosis.verdict == "inconclusive"
        assert diagnosis.top is None
        assert all(p == 0.0 for p in diagnosis.probabilities.values())

    def test_tied_overlap_is_inconclusive_under_min_gap(self):
        memory = build_memory(
            canonical_codebook(["d1", "d2"]),
            canonical_codebook(["s1", "s2"]),
            {"d1": {"s1", "s2"}, "d2": {"s2"}},
        )
        diagnosis = diagnose_sequence(memory, ["s2"])
        assert diagnosis.probabilities["d1"] == pytest.approx(0.5)
        assert diagnosis.probabilities["d2"] == pytest.approx(0.5)
        assert diagnosis.verdict == "inconclusive"

    def test_sequence_filters_to_intersection(self):
        memory = build_memory(
            canonical_codebook(["d1", "d2"]),
            canonical_codebook(["s1", "s2"]),
            {"d1": {"s1", "s2"}, "d2": {"s2"}},
        )
        diagnosis = diagnose_sequence(memory, ["s2", "s1"])
        assert diagnosis.probabilities["d1"] == pytest.approx(1.0)
        assert diagnosis.verdict == "negative"

    def test_empty_signs_rejected(self):
        with pytest.raises(ValidationError):
            diagnose_sequence(self.disjoint_memory(), [])

    def test_unknown_sign_rejected(self):
        with pytest.raises(ValidationError):
            diagnose_sequence(self.disjoint_memory(), ["mystery"])

    def test_prior_scaling_does_not_change_verdict(self):
        memory = self.disjoint_memory()
        a = diagnose_sequence(memory, ["s1"], prior=np.array([1.0, 1.0]))
        b = diagnose_sequence(memory, ["s1"], prior=np.array([5.0, 5.0]))
        assert a == b

    def test_summed_mode_folds_signs_into_one_presentation(self):
        memory = build_memory(
            canonical_codebook(["d1", "d2"]),
            canonical_codebook(["s1", "s2"]),
            {"d1": {"s1", "s2"}, "d2": {"s2"}},
        )
        diagnosis = diagnose_sequence(memory, ["s1", "s2"], mode="summed")
        # d1 matches both codes, d2 one: weights 2/3 vs 1/3.
        assert diagnosis.probabilities["d1"] == pytest.approx(2 / 3)
        assert diagnosis.probabilities["d2"] == pytest.approx(1 / 3)

    def test_probabilities_sum_to_one_when_conclusive(self):
        rng = np.random.default_rng(77)
        d_ids = disease_names(5)
        s_ids = sign_names(9)
        associations = {
            d_ids[i]: {s_ids[j] for j in range(9) if rng.random() < 0.5} or {s_ids[i]}
            for i in range(5)
        }
        memory = build_memory(canonical_codebook(d_ids), canonical_codebook(s_ids), associations)
        for _ in range(40):
            disease = d_ids[int(rng.integers(0, 5))]
            pool = sorted(associations[disease])
            presented = [pool[int(rng.integers(0, len(pool)))] for _ in range(3)]
            diagnosis = diagnose_sequence(memory, presented)
            total = sum(diagnosis.probabilities.values())
            assert all(p >= 0 for p in diagnosis.probabilities.values())
            if diagnosis.verdict != "inconclusive":
                assert total == pytest.approx(1.0, abs=1e-9)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(min_value=0, max_value=2**31 - 1), st.booleans())
    def test_perfect_recall_on_disjoint_sets(self, seed, use_random_codes):
        rng = np.random.default_rng(seed)
        k = int(rng.integers(2, 6))
        d_ids = disease_names(k)
        per_disease = 2
        s_ids = sign_names(k * per_disease)
        associations = {
            d_ids[i]: {s_ids[i * per_disease + j] for j in range(per_disease)} for i in range(k)
        }
        if use_random_codes:
            diseases = random_orthonormal_codebook(d_ids, seed=seed % 1000)
            signs = random_orthonormal_codebook(s_ids, seed=seed % 1000 + 1)
        else:
            diseases = canonical_codebook(d_ids)
            signs = canonical_codebook(s_ids)
        memory = build_memory(diseases, signs, associations)
        truth = d_ids[int(rng.integers(0, k))]
        presented = sorted(associations[truth])
        diagnosis = diagnose_sequence(memory, presented, positive_disease=truth)
        assert diagnosis.verdict == "positive"
        assert diagnosis.probabilities[truth] == pytest.approx(1.0, abs=1e-9)


class TestClassifyHelper:
    def test_empty_signs_fall_back_to_prior(self):
        memory = build_memory(
            canonical_codebook(["asthma", "healthy"]),
            canonical_codebook(["s1"]),
            {"asthma": {"s1"}},
        )
        diagnosis = classify(memory, [])
        assert diagnosis.verdict == "inconclusive"
        concentrated = classify(memory, [], prior=np.array([0.9, 0.1]))
        assert concentrated.verdict == "positive"
        assert concentrated.probabilities["asthma"] == pytest.approx(0.9)


# ---------------------------------------------------------------- learning


class TestLearnCase:
    def disjoint_memory(self):
        return build_memory(
            canonical_codebook(["d1", "d2"]),
            canonical_codebook(["s1", "s2"]),
            {"d1": {"s1"}, "d2": {"s2"}},
        )

    def test_known_pair_leaves_matrix_unchanged(self):
        memory = self.disjoint_memory()
        updated = learn_case(memory, "d1", {"s1"})
        assert np.array_equal(updated.psi, memory.psi)
        assert updated.case_counts["d1"] == memory.case_counts.get("d1", 0) + 1

    def test_new_pair_enables_recall(self):
        memory = self.disjoint_memory()
        updated = learn_case(memory, "d1", {"s2"})
        out = retrieve(updated, np.array([1.0, 0.0]), np.array([0.0, 1.0]))
        assert np.allclose(out, [1.0, 0.0])
        # the original memory is untouched
        before = retrieve(memory, np.array([1.0, 0.0]), np.array([0.0, 1.0]))
        assert np.allclose(before, [0.0, 0.0])

    def test_first_case_into_blank_memory(self):
        blank = empty_memory(canonical_codebook(["d1"]), canonical_codebook(["s1", "s2"]))
        learned = learn_case(blank, "d1", {"s1"})
        rebuilt = build_memory(
            canonical_codebook(["d1"]), canonical_codebook(["s1", "s2"]), {"d1": {"s1"}}
        )
        assert np.array_equal(learned.psi, rebuilt.psi)

    def test_unknown_ids_rejected(self):
        memory = self.disjoint_memory()
        with pytest.raises(ValidationError):
            learn_case(memory, "ghost", {"s1"})
        with pytest.raises(ValidationError):
            learn_case(memory, "d1", {"ghost"})

    @settings(max_examples=40, deadline=None)
    @given(st.integers(min_value=0, max_value=2**31 - 1))
    def test_learning_rebuild_round_trip(self, seed):
        rng = np.random.default_rng(seed)
        k = int(rng.integers(1, 7))
        d = int(rng.integers(1, 13))
        d_ids, s_ids = disease_names(k), sign_names(d)
        memory = empty_memory(canonical_codebook(d_ids), canonical_codebook(s_ids))
        for _ in range(int(rng.integers(1, 15))):
            disease = d_ids[int(rng.integers(0, k))]
            signs = {s_ids[j] for j in range(d) if rng.random() < 0.3} or {s_ids[0]}
            memory = learn_case(memory, disease, signs)
        rebuilt = build_memory(
            memory.diseases, memory.signs, memory.associations, memory.case_counts
        )
        assert np.max(np.abs(memory.psi - rebuilt.psi)) < 1e-12


# ---------------------------------------------------------------- codebooks


class TestCodebooks:
    def test_canonical_codes_are_identity(self):
        book = canonical_codebook(["a", "b", "c"])
        assert np.array_equal(book.codes, np.eye(3))
        assert np.array_equal(book.code_of("b"), [0, 1, 0])

    def test_random_codes_are_orthonormal_and_deterministic(self):
        book = random_orthonormal_codebook(["a", "b", "c", "d"], seed=5)
        again = random_orthonormal_codebook(["a", "b", "c", "d"], seed=5)
        assert np.array_equal(book.codes, again.codes)
        assert np.allclose(book.codes.T @ book.codes, np.eye(4), atol=1e-9)
        other = random_orthonormal_codebook(["a", "b", "c", "d"], seed=6)
        assert not np.allclose(book.codes, other.codes)

    def test_duplicate_ids_rejected(self):
        with pytest.raises(ValidationError):
            canonical_codebook(["a", "a"])

    def test_non_orthonormal_codes_rejected(self):
        with pytest.raises(ValidationError):
            Codebook(ids=("a", "b"), codes=np.array([[1.0, 1.0], [0.0, 1.0]]))

    def test_policy_validation(self):
        with pytest.raises(ValidationError):
            InconclusivePolicy(min_top=1.5)
        with pytest.raises(ValidationError):
            InconclusivePolicy(min_gap=-0.1)


# ---------------------------------------------------------------- persistence


class TestMemoryDocument:
    def test_round_trip_reproduces_matrix(self):
        memory = build_memory(
            canonical_codebook(["asthma", "copd", "healthy"]),
            canonical_codebook(["s1", "s2", "s3", "s4"]),
            {"asthma": {"s1", "s2"}, "copd": {"s2", "s3"}, "healthy": {"s4"}},
            case_counts={"asthma": 3},
        )
        memory = learn_case(memory, "healthy", {"s3"})
        doc = memory_to_doc(memory)
        restored = memory_from_doc(doc)
        assert np.max(np.abs(memory.psi - restored.psi)) < 1e-12
        assert restored.associations == memory.associations
        assert restored.case_counts == memory.case_counts
        assert doc["version"] == 1

    def test_doc_is_json_stable(self):
        import json

        memory = build_memory(
            canonical_codebook(["b", "a"]),
            canonical_codebook(["s2", "s1"]),
            {"a": {"s1"}, "b": {"s2", "s1"}},
        )
        doc = memory_to_doc(memory)
        text = json.dumps(doc, sort_keys=True)
        assert json.dumps(memory_to_doc(memory_from_doc(doc)), sort_keys=True) == text

    def test_wrong_version_rejected(self):
        with pytest.raises(ValidationError):
            memory_from_doc({"version": 99, "diseases": [], "signs": [], "associations": {}})
