"""Context-dependent associative matrix memory over disease/sign codes.

Diseases and signs each get an orthonormal code vector.  The memory is
a single matrix accumulating, per disease, the outer product of its
code with the Kronecker product of that code and the sum of its sign
codes.  Retrieval multiplies the memory with (context x sign); with
orthonormal codes this returns exactly the diseases whose association
sets contain the sign, weighted by the context.

Probabilities live in code coordinates.  With the default canonical
(identity) codebooks, coordinates and raw vector entries coincide, so
retrieval doubles as straightforward set filtering.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ValidationError

MEMORY_DOC_VERSION = 1


def kronecker(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Block product: block (i, j) of the result is a[i, j] * b."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2:
        raise ValidationError("kronecker operands must be 2-D")
    if a.size == 0 or b.size == 0:
        raise ValidationError("kronecker operands must be nonempty")
    p, q = a.shape
    e, f = b.shape
    return (a[:, None, :, None] * b[None, :, None, :]).reshape(p * e, q * f)


def kron_vectors(c: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Kronecker product of two column vectors, flattened."""
    return kronecker(c.reshape(-1, 1), s.reshape(-1, 1)).ravel()


@dataclass(frozen=True, eq=False)
class Codebook:
    """Ordered ids with one orthonormal code column per id."""

    ids: tuple[str, ...]
    codes: np.ndarray  # (dim, count); column i codes ids[i]

    def __post_init__(self) -> None:
        if len(self.ids) != len(set(self.ids)):
            raise ValidationError("codebook ids must be unique")
        if not self.ids:
            raise ValidationError("codebook must not be empty")
        codes = np.asarray(self.codes, dtype=np.float64)
        if codes.shape != (len(self.ids), len(self.ids)):
            raise ValidationError(
                f"codes must be square over {len(self.ids)} ids, got {codes.shape}"
            )
        gram = codes.T @ codes
        if not np.allclose(gram, np.eye(len(self.ids)), atol=1e-9):
            raise ValidationError("codes must be orthonormal")
        codes = codes.copy()
        codes.flags.writeable = False
        object.__setattr__(self, "codes", codes)

    @property
    def size(self) -> int:
        return len(self.ids)

    def index_of(self, item_id: str) -> int:
        try:
            return self.ids.index(item_id)
        except ValueError:
            raise ValidationError(f"unknown id {item_id!r}", field=item_id) from None

    def code_of(self, item_id: str) -> np.ndarray:
        return self.codes[:, self.index_of(item_id)]

    def coordinates(self, vector: np.ndarray) -> np.ndarray:
        """Decompose a raw vector into per-id weights."""
        return self.codes.T @ np.asarray(vector, dtype=np.float64)

    def synthesize(self, weights: np.ndarray) -> np.ndarray:
        """Inverse of coordinates: weighted sum of code columns."""
        return self.codes @ np.asarray(weights, dtype=np.float64)


def canonical_codebook(ids: Sequence[str]) -> Codebook:
    """Identity codes: the i-th id is the i-th basis vector."""
    ids = tuple(ids)
    return Codebook(ids=ids, codes=np.eye(len(ids)))


def random_orthonormal_codebook(ids: Sequence[str], seed: int) -> Codebook:
    """Seeded random orthonormal codes (QR with a fixed sign convention)."""
    ids = tuple(ids)
    rng = np.random.default_rng(seed)
    gaussian = rng.normal(size=(len(ids), len(ids)))
    q, r = np.linalg.qr(gaussian)
    q = q * np.sign(np.diag(r))  # pin the sign so the result is unique
    return Codebook(ids=ids, codes=q)


@dataclass(frozen=True)
class InconclusivePolicy:
    """Confidence rule: the winner needs enough mass and enough lead."""

    min_top: float = 0.5
    min_gap: float = 0.1

    def __post_init__(self) -> None:
        if not 0.0 <= self.min_top <= 1.0:
            raise ValidationError("min_top must lie in [0, 1]")
        if not 0.0 <= self.min_gap <= 1.0:
            raise ValidationError("min_gap must lie in [0, 1]")


DEFAULT_POLICY = InconclusivePolicy()


@dataclass(frozen=True)
class Diagnosis:
    probabilities: Mapping[str, float]
    verdict: str  # positive | negative | inconclusive
    top: str | None

    def __post_init__(self) -> None:
        if self.verdict not in ("positive", "negative", "inconclusive"):
            raise ValidationError(f"unknown verdict {self.verdict!r}")
        if self.verdict == "inconclusive" and self.top is not None:
            raise ValidationError("inconclusive diagnosis cannot name a top disease")


@dataclass(frozen=True, eq=False)
class Memory:
    """Immutable association memory; learning returns a new instance."""

    diseases: Codebook
    signs: Codebook
    associations: Mapping[str, frozenset[str]]
    case_counts: Mapping[str, int]
    psi: np.ndarray

    def __post_init__(self) -> None:
        psi = np.asarray(self.psi, dtype=np.float64)
        expected = (self.diseases.size, self.diseases.size * self.signs.size)
        if psi.shape != expected:
            raise ValidationError(f"memory matrix must be {expected}, got {psi.shape}")
        psi = psi.copy()
        psi.flags.writeable = False
        object.__setattr__(self, "psi", psi)
        object.__setattr__(
            self,
            "associations",
            {d: frozenset(s) for d, s in self.associations.items()},
        )
        object.__setattr__(self, "case_counts", dict(self.case_counts))

    def association_of(self, disease_id: str) -> frozenset[str]:
        return self.associations.get(disease_id, frozenset())


def _sign_sum(signs: Codebook, sign_ids: Iterable[str]) -> np.ndarray:
    """Sum of sign codes, accumulated in codebook order for determinism."""
    indices = sorted(signs.index_of(s) for s in sign_ids)
    total = np.zeros(signs.size, dtype=np.float64)
    for index in indices:
        total += signs.codes[:, index]
    return total


def build_memory(
    diseases: Codebook,
    signs: Codebook,
    associations: Mapping[str, Iterable[str]],
    case_counts: Mapping[str, int] | None = None,
) -> Memory:
    """Accumulate the memory matrix from an association map.

    Diseases absent from the map contribute nothing (a blank memory is
    legal); a disease listed with an empty sign set is a configuration
    mistake and rejected.
    """
    k, d = diseases.size, signs.size
    normalized: dict[str, frozenset[str]] = {}
    psi = np.zeros((k, k * d), dtype=np.float64)
    for disease_id, sign_ids in associations.items():
        sign_set = frozenset(sign_ids)
        if not sign_set:
            raise ValidationError(f"disease {disease_id!r} has an empty sign set", field=disease_id)
        diseases.index_of(disease_id)  # existence check
        t = diseases.code_of(disease_id)
        s_total = _sign_sum(signs, sign_set)
        psi += np.outer(t, kron_vectors(t, s_total))
        normalized[disease_id] = sign_set
    counts = {d_id: 0 for d_id in normalized}
    if case_counts:
        for d_id, count in case_counts.items():
            diseases.index_of(d_id)
            if count < 0:
                raise ValidationError(f"negative case count for {d_id!r}")
            counts[d_id] = int(count)
    return Memory(
        diseases=diseases, signs=signs, associations=normalized, case_counts=counts, psi=psi
    )


def empty_memory(diseases: Codebook, signs: Codebook) -> Memory:
    return build_memory(diseases, signs, {})


def retrieve(memory: Memory, context: np.ndarray, sign: np.ndarray) -> np.ndarray:
    """Raw recall: memory matrix times (context x sign)."""
    context = np.asarray(context, dtype=np.float64)
    sign = np.asarray(sign, dtype=np.float64)
    if context.shape != (memory.diseases.size,):
        raise ValidationError(
            f"context must have dimension {memory.diseases.size}, got {context.shape}"
        )
    if sign.shape != (memory.signs.size,):
        raise ValidationError(f"sign must have dimension {memory.signs.size}, got {sign.shape}")
    if not np.linalg.norm(context) > 0:
        raise ValidationError("context must be nonzero")
    if not np.linalg.norm(sign) > 0:
        raise ValidationError("sign vector must be nonzero")
    return memory.psi @ kron_vectors(context, sign)


def _normalize_prior(memory: Memory, prior: np.ndarray | None) -> np.ndarray:
    if prior is None:
        weights = np.full(memory.diseases.size, 1.0 / memory.diseases.size)
    else:
        weights = np.asarray(prior, dtype=np.float64)
        if weights.shape != (memory.diseases.size,):
            raise ValidationError(
                f"prior must have dimension {memory.diseases.size}, got {weights.shape}"
            )
        if (weights < 0).any() or weights.sum() <= 0:
            raise ValidationError("prior weights must be non-negative with positive mass")
        weights = weights / weights.sum()
    return weights


def _finish(memory: Memory, weights: np.ndarray, policy: InconclusivePolicy, positive_disease: str) -> Diagnosis:
    probabilities = {
        disease_id: float(weights[index]) for index, disease_id in enumerate(memory.diseases.ids)
    }
    order = np.argsort(weights)[::-1]
    top_weight = float(weights[order[0]])
    second_weight = float(weights[order[1]]) if len(order) > 1 else 0.0
    if top_weight < policy.min_top or (top_weight - second_weight) < policy.min_gap:
        return Diagnosis(probabilities=probabilities, verdict="inconclusive", top=None)
    top_id = memory.diseases.ids[int(order[0])]
    verdict = "positive" if top_id == positive_disease else "negative"
    return Diagnosis(probabilities=probabilities, verdict=verdict, top=top_id)


def diagnose_sequence(
    memory: Memory,
    signs: Sequence[str],
    prior: np.ndarray | None = None,
    policy: InconclusivePolicy = DEFAULT_POLICY,
    positive_disease: str = "asthma",
    mode: str = "sequential",
) -> Diagnosis:
    """Narrow the disease weights by presenting signs to the memory.

    Sequential mode feeds each sign in turn, the normalized output
    becoming the next context.  Summed mode folds all sign codes into
    one presentation.  Weights are code coordinates, so a zero weight
    means the sign ruled the disease out.
    """
    if not signs:
        raise ValidationError("at least one sign is required")
    if mode not in ("sequential", "summed"):
        raise ValidationError(f"unknown mode {mode!r}")
    for sign_id in signs:
        memory.signs.index_of(sign_id)  # fail fast on unknown ids

    weights = _normalize_prior(memory, prior)
    if mode == "summed":
        presentations = [_sign_sum(memory.signs, set(signs))]
    else:
        presentations = [memory.signs.code_of(s) for s in signs]

    for sign_vector in presentations:
        context = memory.diseases.synthesize(weights)
        output = retrieve(memory, context, sign_vector)
        coordinates = np.maximum(memory.diseases.coordinates(output), 0.0)
        mass = coordinates.sum()
        if mass <= 0:
            zero = {disease_id: 0.0 for disease_id in memory.diseases.ids}
            return Diagnosis(probabilities=zero, verdict="inconclusive", top=None)
        weights = coordinates / mass
    return _finish(memory, weights, policy, positive_disease)


def classify(
    memory: Memory,
    signs: Sequence[str],
    prior: np.ndarray | None = None,
    policy: InconclusivePolicy = DEFAULT_POLICY,
    positive_disease: str = "asthma",
    mode: str = "sequential",
) -> Diagnosis:
    """Like diagnose_sequence, but an empty sign list falls back to the prior."""
    if signs:
        return diagnose_sequence(
            memory, signs, prior=prior, policy=policy, positive_disease=positive_disease, mode=mode
        )
    weights = _normalize_prior(memory, prior)
    return _finish(memory, weights, policy, positive_disease)


def learn_case(memory: Memory, disease_id: str, sign_ids: Iterable[str]) -> Memory:
    """Fold a confirmed case in; known (disease, sign) pairs change nothing.

    Returns a new Memory whose matrix equals rebuilding from the merged
    association map; the original is untouched.
    """
    memory.diseases.index_of(disease_id)
    sign_set = frozenset(sign_ids)
    for sign_id in sign_set:
        memory.signs.index_of(sign_id)
    known = memory.association_of(disease_id)
    fresh = sign_set - known
    psi = np.asarray(memory.psi)
    if fresh:
        t = memory.diseases.code_of(disease_id)
        psi = psi + np.outer(t, kron_vectors(t, _sign_sum(memory.signs, fresh)))
    associations = dict(memory.associations)
    associations[disease_id] = known | sign_set
    counts = dict(memory.case_counts)
    counts[disease_id] = counts.get(disease_id, 0) + 1
    return Memory(
        diseases=memory.diseases,
        signs=memory.signs,
        associations=associations,
        case_counts=counts,
        psi=psi,
    )


def memory_to_doc(memory: Memory) -> dict:
    """JSON-ready document; associations are the source of truth."""
    return {
        "version": MEMORY_DOC_VERSION,
        "diseases": list(memory.diseases.ids),
        "signs": list(memory.signs.ids),
        "associations": {
            disease_id: sorted(sign_ids)
            for disease_id, sign_ids in sorted(memory.associations.items())
        },
        "case_counts": dict(sorted(memory.case_counts.items())),
    }


def memory_from_doc(doc: Mapping[str, object]) -> Memory:
    """Rebuild a memory from its persisted document (canonical codes)."""
    version = doc.get("version")
    if version != MEMORY_DOC_VERSION:
        raise ValidationError(f"unsupported memory document version {version!r}")
    diseases = canonical_codebook(tuple(doc["diseases"]))  # type: ignore[arg-type]
    signs = canonical_codebook(tuple(doc["signs"]))  # type: ignore[arg-type]
    return build_memory(
        diseases,
        signs,
        {str(d): set(s) for d, s in dict(doc["associations"]).items()},  # type: ignore[arg-type]
        case_counts={str(d): int(c) for d, c in dict(doc.get("case_counts", {})).items()},  # type: ignore[arg-type]
    )
