"""Classification metrics, the accuracy-weighted vote, and evaluation runs.

The positive class is 1 throughout.  Ensemble weights are the member
accuracies normalized to sum to 1; the class whose members carry more total
weight wins, with exact ties resolved by the highest-weight member.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from mixtag.data import Instance, Token


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    recall: float
    precision: float
    f1: float
    confusion: tuple[int, int, int, int]  # TP, FP, FN, TN
    theta_used: float | None = None
    undefined: tuple[str, ...] = ()  # metrics that hit 0/0 and were set to 0


def compute_metrics(preds, golds, theta_used: float | None = None) -> Metrics:
    """Confusion counts and derived scores with positive class = 1.

    Degenerate ratios (no predicted positives, no actual positives, or
    P+R = 0) yield 0 and are flagged in ``undefined``.
    """
    preds = np.asarray(preds)
    golds = np.asarray(golds)
    if preds.size == 0 or preds.shape != golds.shape:
        raise ValueError("predictions and golds must be equal-length and non-empty")
    tp = int(np.sum((preds == 1) & (golds == 1)))
    fp = int(np.sum((preds == 1) & (golds == 0)))
    fn = int(np.sum((preds == 0) & (golds == 1)))
    tn = int(np.sum((preds == 0) & (golds == 0)))
    undefined = []
    if tp + fp > 0:
        precision = tp / (tp + fp)
    else:
        precision = 0.0
        undefined.append("precision")
    if tp + fn > 0:
        recall = tp / (tp + fn)
    else:
        recall = 0.0
        undefined.append("recall")
    if precision + recall > 0:
        f1 = 2.0 * precision * recall / (precision + recall)
    else:
        f1 = 0.0
        undefined.append("f1")
    return Metrics(
        accuracy=(tp + tn) / preds.size,
        recall=recall,
        precision=precision,
        f1=f1,
        confusion=(tp, fp, fn, tn),
        theta_used=theta_used,
        undefined=tuple(undefined),
    )


def ensemble_weights(accuracies) -> np.ndarray:
    """w_i = a_i / sum(a); requires strictly positive accuracies."""
    accs = np.asarray(accuracies, dtype=np.float64)
    if accs.size == 0 or np.any(accs <= 0):
        raise ValueError(f"accuracies must be positive, got {accuracies}")
    return accs / accs.sum()


def ensemble_predict(member_preds, weights) -> int:
    """Weighted vote over one token's member predictions.

    The class with the larger summed weight wins; an exact tie falls back to
    the highest-weight member's prediction.
    """
    preds = np.asarray(member_preds)
    weights = np.asarray(weights, dtype=np.float64)
    if preds.shape != weights.shape:
        raise ValueError("one weight per member prediction required")
    w1 = weights[preds == 1].sum()
    w0 = weights[preds == 0].sum()
    if w1 == w0:
        return int(preds[int(np.argmax(weights))])
    return int(w1 > w0)


@dataclass
class EnsembleModel:
    """Taggers combined by accuracy-weighted voting."""

    members: list
    accuracies: list[float]

    def __post_init__(self):
        self.weights = ensemble_weights(self.accuracies)

    @classmethod
    def from_taggers(cls, taggers, accuracies=None) -> "EnsembleModel":
        """Weight by the given accuracies, or each tagger's dev accuracy."""
        if accuracies is None:
            accuracies = [t.dev_accuracy for t in taggers]
        return cls(members=list(taggers), accuracies=list(accuracies))

    def predict(self, tokens) -> np.ndarray:
        votes = np.stack([m.predict(tokens) for m in self.members])  # (M, N)
        w1 = self.weights @ (votes == 1)
        w0 = self.weights @ (votes == 0)
        out = (w1 > w0).astype(np.int64)
        ties = w1 == w0
        if np.any(ties):
            out[ties] = votes[int(np.argmax(self.weights))][ties]
        return out


def evaluate_token_level(model, tokens) -> Metrics:
    """Tag every token and score against its gold label."""
    golds = np.array([t.label for t in tokens])
    if any(t.label is None for t in tokens):
        raise ValueError("token-level evaluation needs 0/1 labels only")
    preds = model.predict(tokens)
    return compute_metrics(preds, golds, theta_used=getattr(model, "theta", None))


def evaluate_instance_level(models: dict, instances) -> dict[str, Metrics]:
    """Pool all 0/1-labeled tokens across instances (universal tokens are
    skipped) and score each method on the pooled set."""
    pooled: list[Token] = []
    for inst in instances:
        pooled.extend(t for t in inst.tokens if t.label is not None)
    if not pooled:
        raise ValueError("all instance tokens are universal; nothing to evaluate")
    return {name: evaluate_token_level(model, pooled)
            for name, model in models.items()}


def format_results_tsv(rows: list[tuple[str, Metrics]]) -> str:
    """One row per method: method, acc, rec, prec, f1, theta (blank if n/a)."""
    lines = ["method\tacc\trec\tprec\tf1\ttheta"]
    for name, m in rows:
        theta = "" if m.theta_used is None else f"{m.theta_used:.6f}"
        lines.append(
            f"{name}\t{m.accuracy:.4f}\t{m.recall:.4f}\t{m.precision:.4f}"
            f"\t{m.f1:.4f}\t{theta}"
        )
    return "\n".join(lines) + "\n"
