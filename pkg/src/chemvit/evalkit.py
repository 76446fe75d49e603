"""Scoring of predicted SMILES / reaction strings against ground truth,
and aggregation over prediction streams.

Parse failures on the prediction side score 0 and are counted in
parse_failure_rate (dropping them would inflate the averages); a parse
failure on the ground-truth side is a dataset error and aborts the run.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Optional

import numpy as np
from scipy.optimize import linear_sum_assignment

from .chem.canonical import canonical_smiles
from .chem.molecule import Molecule
from .chem.reaction import parse_reaction, split_molecules
from .chem.smiles import parse_smiles
from .errors import ChemvitError, DatasetError, EvalUsageError, ParseError
from .fingerprint import DEFAULT_WIDTH, Fingerprint, fingerprint, tanimoto

TASKS = ("mol_recognition", "rxn_recognition", "rxn_prediction")


@dataclass(frozen=True)
class EvalSample:
    id: str
    prediction: str
    ground_truth: str
    task: str

    def __post_init__(self):
        if self.task not in TASKS:
            raise EvalUsageError(f"unknown task {self.task!r}")


@dataclass(frozen=True)
class SampleScore:
    id: str
    sim: float
    em: bool
    error: Optional[str] = None


@dataclass(frozen=True)
class MetricsReport:
    task: str
    num_samples: int
    avg_sim: float
    tani_at_1: float
    exact_match: float
    parse_failure_rate: float
    per_sample: tuple[SampleScore, ...]

    def to_dict(self) -> dict:
        data = asdict(self)
        data["per_sample"] = [asdict(s) for s in self.per_sample]
        return data


def _parse_molecules(text: str) -> list[Molecule]:
    parts = split_molecules(text)
    if not parts:
        raise ParseError("no molecules in string")
    return [parse_smiles(p) for p in parts]


def _combined_fingerprint(mols: list[Molecule], width: int) -> Fingerprint:
    bits = 0
    for mol in mols:
        bits |= fingerprint(mol, width).bits
    return Fingerprint(bits=bits, width=width)


def _canonical_multiset(mols: list[Molecule]) -> tuple[str, ...]:
    return tuple(sorted(canonical_smiles(m) for m in mols))


def score_molecule(pred: str, gold: str, width: int = DEFAULT_WIDTH) -> SampleScore:
    """Tanimoto similarity plus canonical exact match for one molecule
    string (dot-separated multi-molecule strings compare as unions)."""
    try:
        gold_mols = _parse_molecules(gold)
        gold_fp = _combined_fingerprint(gold_mols, width)
        gold_canon = _canonical_multiset(gold_mols)
    except ChemvitError as exc:
        raise DatasetError(f"ground truth does not parse: {exc}") from exc
    try:
        pred_mols = _parse_molecules(pred)
        pred_fp = _combined_fingerprint(pred_mols, width)
        pred_canon = _canonical_multiset(pred_mols)
    except ChemvitError as exc:
        return SampleScore(id="", sim=0.0, em=False, error=str(exc))
    return SampleScore(id="", sim=tanimoto(pred_fp, gold_fp),
                       em=pred_canon == gold_canon)


def score_reaction_prediction(pred: str, gold: str,
                              width: int = DEFAULT_WIDTH) -> SampleScore:
    """Product-string comparison: multi-molecule products are compared as
    one combined fingerprint over the union of the molecules' bits."""
    return score_molecule(pred, gold, width)


def combine_component_scores(scores: Iterable[float],
                             counts: Iterable[int]) -> float:
    """Weighted average of component scores by gold molecule count."""
    scores = list(scores)
    counts = list(counts)
    total = sum(counts)
    if total == 0:
        raise EvalUsageError("no gold molecules to weight by")
    return sum(c * s for c, s in zip(counts, scores)) / total


def _component_similarity(gold: list[Molecule], pred: list[Molecule],
                          width: int) -> float:
    """Mean over gold molecules of their best-assignment similarity.
    Molecules are aligned by maximum-total-similarity assignment, so the
    score is invariant to ordering on either side."""
    if not gold:
        return 1.0 if not pred else 0.0
    if not pred:
        return 0.0
    gold_fps = [fingerprint(m, width) for m in gold]
    pred_fps = [fingerprint(m, width) for m in pred]
    sims = np.array([[tanimoto(g, p) for p in pred_fps] for g in gold_fps])
    rows, cols = linear_sum_assignment(sims, maximize=True)
    return float(sims[rows, cols].sum()) / len(gold)


def score_reaction_recognition(pred: str, gold: str,
                               width: int = DEFAULT_WIDTH) -> SampleScore:
    """Component-wise comparison of three-part reaction strings, weighted
    by the gold molecule count of each component."""
    try:
        gold_rxn = parse_reaction(gold)
    except ChemvitError as exc:
        raise DatasetError(f"ground truth does not parse: {exc}") from exc
    try:
        pred_rxn = parse_reaction(pred)
    except ChemvitError as exc:
        return SampleScore(id="", sim=0.0, em=False, error=str(exc))
    scores, counts, em = [], [], True
    for gold_part, pred_part in zip(gold_rxn.components, pred_rxn.components):
        scores.append(_component_similarity(list(gold_part), list(pred_part), width))
        counts.append(len(gold_part))
        if _canonical_multiset(list(gold_part)) != _canonical_multiset(list(pred_part)):
            em = False
    return SampleScore(id="", sim=combine_component_scores(scores, counts), em=em)


_SCORERS = {
    "mol_recognition": score_molecule,
    "rxn_recognition": score_reaction_recognition,
    "rxn_prediction": score_reaction_prediction,
}


def run_eval(samples: Iterable[EvalSample], width: int = DEFAULT_WIDTH) -> MetricsReport:
    """Score a stream of same-task samples. Output is independent of the
    sample order (per-sample rows are sorted by id)."""
    samples = list(samples)
    if not samples:
        raise EvalUsageError("no samples to evaluate")
    task = samples[0].task
    seen: set[str] = set()
    for sample in samples:
        if sample.task != task:
            raise EvalUsageError(
                f"mixed tasks in one run: {task!r} and {sample.task!r}")
        if sample.id in seen:
            raise EvalUsageError(f"duplicate sample id {sample.id!r}")
        seen.add(sample.id)
    scorer = _SCORERS[task]
    rows = []
    for sample in samples:
        try:
            scored = scorer(sample.prediction, sample.ground_truth, width)
        except DatasetError as exc:
            raise DatasetError(f"sample {sample.id!r}: {exc}") from exc
        rows.append(SampleScore(id=sample.id, sim=scored.sim, em=scored.em,
                                error=scored.error))
    rows.sort(key=lambda r: r.id)
    n = len(rows)
    return MetricsReport(
        task=task,
        num_samples=n,
        avg_sim=sum(r.sim for r in rows) / n,
        tani_at_1=sum(1 for r in rows if r.sim == 1.0) / n,
        exact_match=sum(1 for r in rows if r.em) / n,
        parse_failure_rate=sum(1 for r in rows if r.error is not None) / n,
        per_sample=tuple(rows),
    )


# ------------------------------------------------------------------- I/O

def _read_jsonl(path: str | Path, value_field: str) -> dict[str, str]:
    """Read {id -> value_field} from a line-delimited JSON file."""
    records: dict[str, str] = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise EvalUsageError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
        if "id" not in obj or value_field not in obj:
            raise EvalUsageError(
                f"{path}:{lineno}: record needs 'id' and {value_field!r}")
        sid = str(obj["id"])
        if sid in records:
            raise EvalUsageError(f"{path}:{lineno}: duplicate sample id {sid!r}")
        records[sid] = str(obj[value_field])
    return records


def load_eval_samples(pred_path: str | Path, gold_path: str | Path,
                      task: str) -> list[EvalSample]:
    """Join a predictions file and a ground-truth file on sample id.
    Both are UTF-8 JSONL: predictions carry {id, prediction}, ground truth
    carries {id, ground_truth}."""
    preds = _read_jsonl(pred_path, "prediction")
    golds = _read_jsonl(gold_path, "ground_truth")
    missing = sorted(set(golds) - set(preds))
    if missing:
        raise EvalUsageError(f"no prediction for sample id {missing[0]!r}")
    extra = sorted(set(preds) - set(golds))
    if extra:
        raise EvalUsageError(f"prediction for unknown sample id {extra[0]!r}")
    return [EvalSample(id=sid, prediction=preds[sid], ground_truth=golds[sid],
                       task=task) for sid in sorted(golds)]


def write_report(report: MetricsReport, path: str | Path) -> None:
    Path(path).write_text(json.dumps(report.to_dict(), indent=2) + "\n",
                          encoding="utf-8")


def summarize(report: MetricsReport) -> str:
    return "\n".join([
        f"task:               {report.task}",
        f"samples:            {report.num_samples}",
        f"avg_sim:            {report.avg_sim:.4f}",
        f"tani_at_1:          {report.tani_at_1:.4f}",
        f"exact_match:        {report.exact_match:.4f}",
        f"parse_failure_rate: {report.parse_failure_rate:.4f}",
    ])
