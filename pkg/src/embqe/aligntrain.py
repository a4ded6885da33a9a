"""Contrastive cross-lingual alignment training.

The objective pulls the representations of aligned subword pairs together
and pushes the per-sentence negatives apart: for each sentence pair with B
aligned subword pairs, a symmetric InfoNCE negative log-likelihood is
averaged over the 2B softmax terms, the denominators ranging over the pair
list's own tokens (``negatives="pairs"``, the default) or over every token
of the other sentence (``negatives="sentence"``).  A squared-L2 pull toward
the frozen initial parameters regularizes the total objective.

The trainable model is a deliberately small deterministic encoder: each
token embeds as a mix of its own embedding row and the mean of the other
rows in the sentence, projected and L2-normalized.  Everything runs in
float64 with hand-derived gradients so the whole chain is checkable against
finite differences.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .dataio import WordAlignment, _read_exact
from .errors import (
    AllPairsEmptyError,
    BadMagicError,
    EmptyPairListError,
    IdOutOfRangeError,
    IndexOutOfRangeError,
    NonFiniteLossError,
    TemperatureError,
    ZeroRowError,
)

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

CHECKPOINT_MAGIC = b"QECKPT"

NEGATIVE_MODES = ("pairs", "sentence")


@dataclass
class LossConfig:
    temperature: float = 0.1
    lambda_reg: float = 1.0
    negatives: str = "pairs"

    def __post_init__(self):
        if self.temperature <= 0:
            raise TemperatureError(f"temperature {self.temperature} must be > 0")
        if self.lambda_reg < 0:
            raise ValueError("lambda_reg must be non-negative")
        if self.negatives not in NEGATIVE_MODES:
            raise ValueError(f"negatives must be one of {NEGATIVE_MODES}")


@dataclass
class TrainConfig:
    learning_rate: float = 1e-4
    batch_size: int = 32
    steps: int = 100_000
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0 or self.batch_size < 1 or self.steps < 0:
            raise ValueError("learning rate and batch size must be positive, steps >= 0")


@dataclass
class SentencePair:
    """Token-id sequences of one parallel sentence plus its aligned subword pairs."""

    src_ids: list[int]
    tgt_ids: list[int]
    pairs: list[tuple[int, int]] = field(default_factory=list)


class ToyEncoderParams:
    """Trainable embedding table and mixing matrix plus their frozen snapshot."""

    def __init__(self, embeddings: np.ndarray, mixer: np.ndarray):
        e = np.array(embeddings, dtype=np.float64)
        u = np.array(mixer, dtype=np.float64)
        if e.ndim != 2 or u.shape != (e.shape[1], 2 * e.shape[1]):
            raise ValueError(
                f"mixer shape {u.shape} does not match embeddings {e.shape}"
            )
        self.embeddings = e
        self.mixer = u
        self.embeddings_init = e.copy()
        self.mixer_init = u.copy()
        self.embeddings_init.flags.writeable = False
        self.mixer_init.flags.writeable = False

    @classmethod
    def initialize(cls, vocab_size: int, dim: int, seed: int = 0) -> "ToyEncoderParams":
        rng = np.random.default_rng(seed)
        e = rng.normal(0.0, 1.0 / np.sqrt(dim), size=(vocab_size, dim))
        u = rng.normal(0.0, 1.0 / np.sqrt(2 * dim), size=(dim, 2 * dim))
        return cls(e, u)

    @property
    def vocab_size(self) -> int:
        return self.embeddings.shape[0]

    @property
    def dim(self) -> int:
        return self.embeddings.shape[1]

    def copy(self) -> "ToyEncoderParams":
        clone = ToyEncoderParams.__new__(ToyEncoderParams)
        clone.embeddings = self.embeddings.copy()
        clone.mixer = self.mixer.copy()
        clone.embeddings_init = self.embeddings_init
        clone.mixer_init = self.mixer_init
        return clone


@dataclass
class Gradients:
    embeddings: np.ndarray
    mixer: np.ndarray


@dataclass
class StepRecord:
    step: int
    alignment: float
    reg: float
    total: float


# --- alignment expansion ---------------------------------------------------

def expand_to_subwords(
    word_pairs: WordAlignment,
    src_word_map: list[int],
    tgt_word_map: list[int],
) -> list[tuple[int, int]]:
    """Expand sure word pairs to the full cross product of their subwords.

    The maps give, per subword, the word it belongs to (-1 for special
    tokens, which never participate).  Duplicates are removed and the
    result is sorted for determinism.
    """
    src_words: dict[int, list[int]] = {}
    for sub, word in enumerate(src_word_map):
        if word >= 0:
            src_words.setdefault(word, []).append(sub)
    tgt_words: dict[int, list[int]] = {}
    for sub, word in enumerate(tgt_word_map):
        if word >= 0:
            tgt_words.setdefault(word, []).append(sub)

    expanded: set[tuple[int, int]] = set()
    for wi, wj in word_pairs.sure:
        if wi not in src_words:
            raise IndexOutOfRangeError(f"source word {wi} absent from word map")
        if wj not in tgt_words:
            raise IndexOutOfRangeError(f"target word {wj} absent from word map")
        for a in src_words[wi]:
            for b in tgt_words[wj]:
                expanded.add((a, b))
    return sorted(expanded)


# --- toy encoder -----------------------------------------------------------

def toy_encode(ids: list[int], params: ToyEncoderParams) -> np.ndarray:
    """Encode a token-id sequence to unit-norm context-mixed rows."""
    return _encode_cached(ids, params)["h"]


def _encode_cached(ids, params: ToyEncoderParams) -> dict:
    ids = np.asarray(ids, dtype=np.intp)
    if ids.size == 0:
        raise IdOutOfRangeError("cannot encode an empty sentence")
    if ids.min() < 0 or ids.max() >= params.vocab_size:
        raise IdOutOfRangeError(
            f"token id outside vocabulary of size {params.vocab_size}"
        )
    e = params.embeddings[ids]  # (L, d)
    length = len(ids)
    if length > 1:
        c = (e.sum(axis=0, keepdims=True) - e) / (length - 1)
    else:
        c = np.zeros_like(e)
    z = np.concatenate([e, c], axis=1)  # (L, 2d)
    u = z @ params.mixer.T  # (L, d)
    unorm = np.linalg.norm(u, axis=1)
    h = u / unorm[:, None]
    return {"ids": ids, "e": e, "z": z, "u": u, "unorm": unorm, "h": h}


def _encode_backward(cache: dict, grad_h: np.ndarray, params: ToyEncoderParams,
                     grad_e_table: np.ndarray, grad_mixer: np.ndarray) -> None:
    """Accumulate d(loss)/dE and d(loss)/dU given d(loss)/dh for one sentence."""
    u, unorm, h, z, ids = cache["u"], cache["unorm"], cache["h"], cache["z"], cache["ids"]
    length = len(ids)
    # h = u / |u|
    grad_u = (grad_h - (grad_h * h).sum(axis=1, keepdims=True) * h) / unorm[:, None]
    # u = z U^T
    grad_mixer += grad_u.T @ z
    grad_z = grad_u @ params.mixer
    d = params.dim
    grad_e = grad_z[:, :d].copy()
    grad_c = grad_z[:, d:]
    if length > 1:
        grad_e += (grad_c.sum(axis=0, keepdims=True) - grad_c) / (length - 1)
    np.add.at(grad_e_table, ids, grad_e)


# --- losses ----------------------------------------------------------------

def _normalize_with_grad(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    m = np.asarray(m, dtype=np.float64)
    norms = np.linalg.norm(m, axis=1)
    small = np.flatnonzero(norms < 1e-12)
    if small.size:
        raise ZeroRowError(int(small[0]))
    return m / norms[:, None], norms


def _loss_terms(src_hat, tgt_hat, pairs, cfg: LossConfig):
    """Shared forward pass: per-direction logit matrices and softmax caches."""
    b = len(pairs)
    a_idx = np.fromiter((p[0] for p in pairs), dtype=np.intp, count=b)
    b_idx = np.fromiter((p[1] for p in pairs), dtype=np.intp, count=b)
    if (a_idx.min() < 0 or b_idx.min() < 0
            or a_idx.max() >= src_hat.shape[0] or b_idx.max() >= tgt_hat.shape[0]):
        raise IndexOutOfRangeError("aligned pair index outside sentence")
    if cfg.negatives == "pairs":
        cand_t_idx, pos1 = b_idx, np.arange(b)
        cand_s_idx, pos2 = a_idx, np.arange(b)
    else:
        cand_t_idx, pos1 = np.arange(tgt_hat.shape[0]), b_idx
        cand_s_idx, pos2 = np.arange(src_hat.shape[0]), a_idx
    t = cfg.temperature
    logits1 = (src_hat[a_idx] @ tgt_hat[cand_t_idx].T) / t  # (B, C1)
    logits2 = (tgt_hat[b_idx] @ src_hat[cand_s_idx].T) / t  # (B, C2)
    return a_idx, b_idx, cand_s_idx, cand_t_idx, pos1, pos2, logits1, logits2


def _log_softmax_at(logits: np.ndarray, pos: np.ndarray) -> float:
    """Sum over rows of logits[k, pos[k]] - logsumexp(row k)."""
    shift = logits.max(axis=1, keepdims=True)
    lse = shift[:, 0] + np.log(np.exp(logits - shift).sum(axis=1))
    return float((logits[np.arange(len(pos)), pos] - lse).sum())


def alignment_loss(
    src_emb, tgt_emb, pairs: list[tuple[int, int]], cfg: LossConfig | None = None
) -> float:
    """Symmetric contrastive negative log-likelihood of one sentence pair.

    Rows of the inputs are normalized internally, so similarities are
    cosines.  Always >= 0; exactly 0 for a single pair.
    """
    cfg = cfg or LossConfig()
    if cfg.temperature <= 0:
        raise TemperatureError(f"temperature {cfg.temperature} must be > 0")
    if not pairs:
        raise EmptyPairListError("sentence pair has no aligned subword pairs")
    src_hat, _ = _normalize_with_grad(src_emb)
    tgt_hat, _ = _normalize_with_grad(tgt_emb)
    *_, pos1, pos2, logits1, logits2 = _loss_terms(src_hat, tgt_hat, pairs, cfg)
    total = _log_softmax_at(logits1, pos1) + _log_softmax_at(logits2, pos2)
    return 0.0 + -total / (2 * len(pairs))  # + 0.0 folds -0.0 into 0.0


def regularization_loss(params: ToyEncoderParams) -> float:
    """Squared L2 displacement of all trainable parameters from their snapshot."""
    de = params.embeddings - params.embeddings_init
    du = params.mixer - params.mixer_init
    return float((de * de).sum() + (du * du).sum())


def total_loss(
    batch: list[SentencePair],
    params: ToyEncoderParams,
    cfg: LossConfig | None = None,
) -> float:
    """Mean per-sentence alignment loss over the batch plus the weighted
    regularizer.  Sentences without pairs are skipped."""
    cfg = cfg or LossConfig()
    losses = []
    for sp in batch:
        if not sp.pairs:
            continue
        s = toy_encode(sp.src_ids, params)
        t = toy_encode(sp.tgt_ids, params)
        losses.append(alignment_loss(s, t, sp.pairs, cfg))
    if not losses:
        raise AllPairsEmptyError("no sentence pair in the batch has aligned pairs")
    return float(np.mean(losses)) + cfg.lambda_reg * regularization_loss(params)


def _sentence_loss_grad(sp: SentencePair, params: ToyEncoderParams, cfg: LossConfig,
                        grad_e: np.ndarray, grad_u: np.ndarray, scale: float) -> float:
    """Alignment loss of one sentence pair; accumulates ``scale`` times its
    gradient into the given tables."""
    cache_s = _encode_cached(sp.src_ids, params)
    cache_t = _encode_cached(sp.tgt_ids, params)
    # The encoder already emits unit rows; normalizing again inside the loss
    # keeps the loss correct for arbitrary matrices and its projection
    # Jacobian is idempotent, so gradients stay exact.
    src_hat, src_norm = _normalize_with_grad(cache_s["h"])
    tgt_hat, tgt_norm = _normalize_with_grad(cache_t["h"])
    b = len(sp.pairs)
    (a_idx, b_idx, cand_s_idx, cand_t_idx, pos1, pos2,
     logits1, logits2) = _loss_terms(src_hat, tgt_hat, sp.pairs, cfg)

    loss = 0.0 + -(_log_softmax_at(logits1, pos1) + _log_softmax_at(logits2, pos2)) / (2 * b)

    def softmax(logits):
        shifted = np.exp(logits - logits.max(axis=1, keepdims=True))
        return shifted / shifted.sum(axis=1, keepdims=True)

    coeff = scale / (2 * b * cfg.temperature)
    g1 = softmax(logits1)
    g1[np.arange(b), pos1] -= 1.0
    g1 *= coeff
    g2 = softmax(logits2)
    g2[np.arange(b), pos2] -= 1.0
    g2 *= coeff

    gs_hat = np.zeros_like(src_hat)
    gt_hat = np.zeros_like(tgt_hat)
    np.add.at(gs_hat, a_idx, g1 @ tgt_hat[cand_t_idx])
    np.add.at(gt_hat, cand_t_idx, g1.T @ src_hat[a_idx])
    np.add.at(gt_hat, b_idx, g2 @ src_hat[cand_s_idx])
    np.add.at(gs_hat, cand_s_idx, g2.T @ tgt_hat[b_idx])

    def unnormalize(g_hat, hat, norms):
        return (g_hat - (g_hat * hat).sum(axis=1, keepdims=True) * hat) / norms[:, None]

    _encode_backward(cache_s, unnormalize(gs_hat, src_hat, src_norm), params, grad_e, grad_u)
    _encode_backward(cache_t, unnormalize(gt_hat, tgt_hat, tgt_norm), params, grad_e, grad_u)
    return loss


def loss_and_gradient(
    batch: list[SentencePair],
    params: ToyEncoderParams,
    cfg: LossConfig | None = None,
) -> tuple[float, float, float, Gradients]:
    """(alignment term, reg term, total, exact analytic gradient of the total)."""
    cfg = cfg or LossConfig()
    active = [sp for sp in batch if sp.pairs]
    if not active:
        raise AllPairsEmptyError("no sentence pair in the batch has aligned pairs")
    grad_e = np.zeros_like(params.embeddings)
    grad_u = np.zeros_like(params.mixer)
    scale = 1.0 / len(active)
    losses = [
        _sentence_loss_grad(sp, params, cfg, grad_e, grad_u, scale) for sp in active
    ]
    align = float(np.mean(losses))
    reg = regularization_loss(params)
    if cfg.lambda_reg:
        grad_e += 2.0 * cfg.lambda_reg * (params.embeddings - params.embeddings_init)
        grad_u += 2.0 * cfg.lambda_reg * (params.mixer - params.mixer_init)
    return align, reg, align + cfg.lambda_reg * reg, Gradients(grad_e, grad_u)


def loss_gradient(
    batch: list[SentencePair],
    params: ToyEncoderParams,
    cfg: LossConfig | None = None,
) -> Gradients:
    return loss_and_gradient(batch, params, cfg)[3]


# --- training --------------------------------------------------------------

def train(
    corpus: list[SentencePair],
    params: ToyEncoderParams,
    train_cfg: TrainConfig | None = None,
    loss_cfg: LossConfig | None = None,
) -> tuple[ToyEncoderParams, list[StepRecord]]:
    """Mini-batch Adam on the total objective; fully reproducible given the seed.

    Parameters are updated in place and also returned.  The history has one
    record per step, evaluated at the pre-update parameters.
    """
    train_cfg = train_cfg or TrainConfig()
    loss_cfg = loss_cfg or LossConfig()
    usable = [sp for sp in corpus if sp.pairs]
    if not usable:
        raise AllPairsEmptyError("corpus has no sentence pair with aligned pairs")

    rng = np.random.default_rng(train_cfg.seed)
    order: list[int] = []
    m_e = np.zeros_like(params.embeddings)
    v_e = np.zeros_like(params.embeddings)
    m_u = np.zeros_like(params.mixer)
    v_u = np.zeros_like(params.mixer)
    history: list[StepRecord] = []

    for step in range(1, train_cfg.steps + 1):
        if len(order) < train_cfg.batch_size:
            order.extend(rng.permutation(len(usable)).tolist())
        batch_idx = order[: train_cfg.batch_size]
        del order[: train_cfg.batch_size]
        batch = [usable[i] for i in batch_idx]

        align, reg, total, grads = loss_and_gradient(batch, params, loss_cfg)
        if not np.isfinite(total):
            raise NonFiniteLossError(step, total)
        history.append(StepRecord(step=step, alignment=align, reg=reg, total=total))

        for theta, grad, m, v in (
            (params.embeddings, grads.embeddings, m_e, v_e),
            (params.mixer, grads.mixer, m_u, v_u),
        ):
            m *= ADAM_BETA1
            m += (1 - ADAM_BETA1) * grad
            v *= ADAM_BETA2
            v += (1 - ADAM_BETA2) * grad * grad
            m_hat = m / (1 - ADAM_BETA1**step)
            v_hat = v / (1 - ADAM_BETA2**step)
            theta -= train_cfg.learning_rate * m_hat / (np.sqrt(v_hat) + ADAM_EPS)
    return params, history


def save_history(history: list[StepRecord], path) -> None:
    lines = ["step,alignment,reg,total"]
    lines += [f"{r.step},{r.alignment!r},{r.reg!r},{r.total!r}" for r in history]
    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")


# --- checkpoints -----------------------------------------------------------

def save_checkpoint(
    params: ToyEncoderParams, path, vocab_words: list[str] | None = None
) -> None:
    """Magic + length-prefixed JSON header + four binary32-LE tensors
    (current embeddings, mixer, then their frozen snapshots)."""
    header = json.dumps(
        {
            "vocab_size": params.vocab_size,
            "dim": params.dim,
            "words": vocab_words,
        },
        sort_keys=True,
        ensure_ascii=False,
    ).encode("utf-8")
    with open(path, "wb") as f:
        f.write(CHECKPOINT_MAGIC)
        f.write(struct.pack("<I", len(header)))
        f.write(header)
        for tensor in (
            params.embeddings,
            params.mixer,
            params.embeddings_init,
            params.mixer_init,
        ):
            f.write(np.ascontiguousarray(tensor, dtype="<f4").tobytes())


def load_checkpoint(path) -> tuple[ToyEncoderParams, list[str] | None]:
    with open(path, "rb") as f:
        if f.read(len(CHECKPOINT_MAGIC)) != CHECKPOINT_MAGIC:
            raise BadMagicError(f"{path}: expected magic {CHECKPOINT_MAGIC!r}")
        header_len = struct.unpack("<I", _read_exact(f, 4))[0]
        manifest = json.loads(_read_exact(f, header_len).decode("utf-8"))
        v, d = int(manifest["vocab_size"]), int(manifest["dim"])

        def tensor(rows, cols):
            data = _read_exact(f, 4 * rows * cols)
            return np.frombuffer(data, dtype="<f4").astype(np.float64).reshape(rows, cols)

        e = tensor(v, d)
        u = tensor(d, 2 * d)
        e0 = tensor(v, d)
        u0 = tensor(d, 2 * d)
    params = ToyEncoderParams(e, u)
    params.embeddings_init = e0
    params.mixer_init = u0
    params.embeddings_init.flags.writeable = False
    params.mixer_init.flags.writeable = False
    return params, manifest.get("words")
