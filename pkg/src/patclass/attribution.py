"""Integrated-gradients token attribution with completeness checking.

For each input token with embedding x and the all-zeros baseline x':

    IG(x) = (x - x') * (1/m) * sum_{j=1..m} grad F(x' + (j/m)(x - x'))

evaluated with a right-endpoint Riemann sum. F is the post-sigmoid
probability of the target class by default (pre-sigmoid logit behind a
flag). The token score is the sum of its IG vector over embedding
dimensions; by the completeness property the scores sum to
F(x) - F(x') up to discretization error, which is reported alongside.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from patclass.errors import ConfigError
from patclass.nn.model import Model


@dataclass
class AttributionConfig:
    steps: int = 128
    target_class: str = "Y02G"
    use_logits: bool = False

    def __post_init__(self):
        if self.steps < 1:
            raise ConfigError("attribution steps must be >= 1")


@dataclass(frozen=True)
class TokenAttribution:
    position: int
    token: str
    score: float


@dataclass(frozen=True)
class CompletenessReport:
    score_sum: float
    output_delta: float
    relative_gap: float


def integrated_gradients(
    model: Model,
    tokens: list[str],
    cfg: AttributionConfig,
) -> tuple[list[TokenAttribution], CompletenessReport]:
    """Attribute the target-class output onto input tokens.

    Requires a model with the trainable encoder (precomputed-feature
    checkpoints have no token-level gradient path).
    """
    if not model.has_encoder:
        raise ConfigError(
            "attribution needs a trainable-encoder checkpoint; it is not "
            "available for precomputed-feature models"
        )
    if cfg.target_class not in model.codes:
        raise ConfigError(f"unknown class {cfg.target_class!r}")
    if not tokens:
        raise ConfigError("cannot attribute an empty token list")
    class_index = model.codes.index(cfg.target_class)
    x = model.embed_tokens(tokens).astype(np.float64)
    n = x.shape[0]
    grad_sum = np.zeros_like(x)
    m = cfg.steps
    for j in range(1, m + 1):
        _, grad = model.output_and_input_grad(
            (j / m) * x, class_index, use_logits=cfg.use_logits
        )
        grad_sum += grad
    ig = x * (grad_sum / m)
    f_x, _ = model.output_and_input_grad(x, class_index, use_logits=cfg.use_logits)
    f_base, _ = model.output_and_input_grad(
        np.zeros_like(x), class_index, use_logits=cfg.use_logits
    )
    scores = ig.sum(axis=1)
    attributions = [
        TokenAttribution(i, tokens[i], float(scores[i]))
        for i in range(min(n, len(tokens)))
    ]
    delta = f_x - f_base
    total = float(scores.sum())
    gap = abs(total - delta) / max(abs(delta), 1e-12)
    return attributions, CompletenessReport(total, delta, gap)


# --- rendering --------------------------------------------------------------

_POS_RGB = (0, 140, 0)
_NEG_RGB = (200, 30, 30)


def _intensity(score: float, max_abs: float) -> float:
    return 0.0 if max_abs == 0.0 else abs(score) / max_abs


def render_report(
    doc_id: str,
    attributions: list[TokenAttribution],
    probabilities: dict[str, float],
    assigned: list[str],
    target_class: str,
    fmt: str = "html",
) -> str:
    """Render token attributions as an HTML page or ANSI terminal text.

    Tokens sit on a diverging scale: red decreases the target-class
    probability, green increases it, intensity proportional to
    |score| / max|score|. Output is deterministic byte-for-byte.
    """
    if not attributions:
        raise ValueError("empty attribution list")
    if fmt == "html":
        return _render_html(doc_id, attributions, probabilities, assigned, target_class)
    if fmt == "ansi":
        return _render_ansi(doc_id, attributions, probabilities, assigned, target_class)
    raise ValueError(f"unknown format {fmt!r}")


def _render_html(doc_id, attributions, probabilities, assigned, target_class) -> str:
    max_abs = max(abs(a.score) for a in attributions)
    out = io.StringIO()
    out.write(
        "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n"
        f"<title>Attribution {_escape(doc_id)}</title>\n"
        "<style>body{font-family:sans-serif;max-width:60em;margin:2em auto}"
        ".tokens span{padding:0 2px;border-radius:2px}"
        "table{border-collapse:collapse}td,th{border:1px solid #999;"
        "padding:2px 8px;text-align:left}</style>\n</head>\n<body>\n"
        f"<h1>Token attribution for {_escape(doc_id)}</h1>\n"
        f"<p>Target class: <strong>{_escape(target_class)}</strong>. "
        "Green tokens raise the class probability, red tokens lower it.</p>\n"
    )
    out.write("<table>\n<tr><th>Class</th><th>Probability</th><th>Assigned</th></tr>\n")
    for code, prob in probabilities.items():
        mark = "yes" if code in assigned else ""
        out.write(
            f"<tr><td>{_escape(code)}</td><td>{prob:.6f}</td><td>{mark}</td></tr>\n"
        )
    out.write("</table>\n<p class=\"tokens\">\n")
    for attr in attributions:
        alpha = round(_intensity(attr.score, max_abs), 4)
        rgb = _POS_RGB if attr.score >= 0 else _NEG_RGB
        out.write(
            f"<span style=\"background-color:rgba({rgb[0]},{rgb[1]},{rgb[2]},"
            f"{alpha})\" title=\"{attr.score:+.6e}\">{_escape(attr.token)}</span>\n"
        )
    out.write("</p>\n</body>\n</html>\n")
    return out.getvalue()


def _render_ansi(doc_id, attributions, probabilities, assigned, target_class) -> str:
    max_abs = max(abs(a.score) for a in attributions)
    lines = [
        f"attribution for {doc_id} (target {target_class})",
        "assigned: " + (", ".join(assigned) if assigned else "<none>"),
    ]
    lines.extend(
        f"  {code:<12} {prob:.6f}" for code, prob in probabilities.items()
    )
    pieces = []
    for attr in attributions:
        level = _intensity(attr.score, max_abs)
        rgb = _POS_RGB if attr.score >= 0 else _NEG_RGB
        r, g, b = (int(round(c * level)) for c in rgb)
        pieces.append(f"\x1b[48;2;{r};{g};{b}m{attr.token}\x1b[0m")
    lines.append(" ".join(pieces))
    return "\n".join(lines) + "\n"


def attributions_to_csv(attributions: list[TokenAttribution]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["position", "token", "score"])
    for attr in attributions:
        writer.writerow([attr.position, attr.token, f"{attr.score:.10e}"])
    return out.getvalue()


def _escape(text: str) -> str:
    return (
        text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
        .replace('"', "&quot;")
    )
