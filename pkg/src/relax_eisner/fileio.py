"""Weight files and CoNLL-U treebanks."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .trees import MASK_VALUE, ShapeError, valid_arc_mask


class FormatError(ValueError):
    pass


@dataclass
class TreebankSentence:
    tokens: list[str]
    gold_heads: list[int]
    first_line: int = 0
    ids: list[int] = field(default_factory=list)

    @property
    def n(self) -> int:
        return len(self.tokens)


def fmt(x: float) -> str:
    return "%.9g" % x


def _matrix_text(m: np.ndarray) -> str:
    rows = ("[" + ", ".join(fmt(v) for v in row) + "]" for row in m)
    return "[\n    " + ",\n    ".join(rows) + "\n  ]"


def dumps_matrix_record(fields: dict, key: str, m: np.ndarray) -> str:
    """JSON object with scalar ``fields`` followed by matrix ``key``; every
    float is written with 9 significant digits."""
    parts = []
    for k, v in fields.items():
        if isinstance(v, float):
            parts.append(f'  "{k}": {fmt(v)}')
        else:
            parts.append(f"  {json.dumps(k)}: {json.dumps(v)}")
    parts.append(f'  "{key}": {_matrix_text(np.asarray(m, dtype=np.float64))}')
    return "{\n" + ",\n".join(parts) + "\n}"


def parse_weights(text: str, source: str = "<string>") -> np.ndarray:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{source}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict) or "n" not in doc or "weights" not in doc:
        raise FormatError(f'{source}: expected an object with keys "n" and "weights"')
    n = doc["n"]
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise FormatError(f"{source}: n must be an integer >= 1, got {n!r}")
    rows = doc["weights"]
    if not isinstance(rows, list):
        raise FormatError(f"{source}: weights must be a list of rows")
    if len(rows) != n + 1:
        raise ShapeError(f"{source}: n={n} needs {n + 1} rows, found {len(rows)}")
    for r, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != n + 1:
            got = len(row) if isinstance(row, list) else type(row).__name__
            raise FormatError(f"{source}: row {r} has {got} entries, expected {n + 1}")
        for c, v in enumerate(row):
            if not isinstance(v, (int, float)) or isinstance(v, bool):
                raise FormatError(f"{source}: row {r} column {c} is not a number")
    w = np.array(rows, dtype=np.float64)
    mask = valid_arc_mask(n)
    if not np.all(np.isfinite(w[mask])):
        raise FormatError(f"{source}: weights must be finite")
    w[~mask] = MASK_VALUE
    return w


def load_weights(path) -> np.ndarray:
    """Read ``{"n": n, "weights": [[...], ...]}``; rows are heads, columns modifiers."""
    path = Path(path)
    return parse_weights(path.read_text(), str(path))


def save_weights(path, w) -> None:
    w = np.asarray(w, dtype=np.float64)
    n = w.shape[0] - 1
    rows = [[float(v) for v in row] for row in w]
    # repr-exact floats so that loading gives back the same matrix
    Path(path).write_text(json.dumps({"n": n, "weights": rows}, indent=1) + "\n")


def read_conllu(path) -> list[TreebankSentence]:
    """Sentences with forms and gold heads; multiword and empty-node rows are skipped."""
    path = Path(path)
    sentences: list[TreebankSentence] = []
    tokens: list[str] = []
    heads: list[int] = []
    head_lines: list[int] = []
    start = 0

    def flush():
        nonlocal tokens, heads, head_lines
        if tokens:
            for pos, (h, ln) in enumerate(zip(heads, head_lines), start=1):
                if not 0 <= h <= len(tokens) or h == pos:
                    raise FormatError(
                        f"{path}:{ln}: head {h} of token {pos} ({tokens[pos - 1]!r}) is out of range"
                    )
            sentences.append(TreebankSentence(tokens, heads, start, list(range(1, len(tokens) + 1))))
        tokens, heads, head_lines = [], [], []

    with path.open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line.strip():
                flush()
                continue
            if line.startswith("#"):
                continue
            cols = line.split("\t")
            if len(cols) != 10:
                raise FormatError(f"{path}:{lineno}: expected 10 tab-separated columns, found {len(cols)}")
            if "-" in cols[0] or "." in cols[0]:
                continue
            try:
                tid, head = int(cols[0]), int(cols[6])
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: non-integer ID or HEAD") from exc
            if not tokens:
                start = lineno
            if tid != len(tokens) + 1:
                raise FormatError(f"{path}:{lineno}: token ID {tid} out of sequence")
            tokens.append(cols[1])
            heads.append(head)
            head_lines.append(lineno)
    flush()
    return sentences
