"""Human-reviewable artifacts: heatmap SVGs, pair reports, export tables.

Everything here is a pure function of its inputs. Rendering the same matrix
with the same spec twice yields byte-identical output, so the artifacts are
diff-able and safe to regression-test.

Scores are displayed at 2 decimals and exported at 6; full precision lives
in bundle.json.
"""

from __future__ import annotations

import html
import re
from dataclasses import dataclass, field
from pathlib import Path

from .matrix import METRICS, RankedPair, SimilarityMatrix, StreakDiagnostic, build_bundle, bundle_to_json
from .score import ScoreTriple
from .segment import Segment

# Red marks strong similarity, yellow-green weak; clamped outside the ends.
DEFAULT_ANCHORS: list[tuple[float, str]] = [
    (0.20, "#2ca02c"),
    (0.50, "#ffdf00"),
    (0.80, "#d62728"),
]

_COLOR_RE = re.compile(r"#[0-9a-fA-F]{6}\Z")

_CELL = 26          # cell edge when the grid is small enough to annotate
_CELL_DENSE = 10    # cell edge for larger grids
_ANNOTATE_LIMIT = 20
_MARGIN_LEFT = 46
_MARGIN_TOP = 34
_LEGEND_STEPS = 64


@dataclass
class ReportSpec:
    """Rendering configuration shared by the heatmap and pair report."""

    instance_id: int
    level: str
    metric: str = "p"
    colormap: list[tuple[float, str]] = field(
        default_factory=lambda: list(DEFAULT_ANCHORS))
    expert_spans: list[tuple[str, int, int]] = field(default_factory=list)
    output_dir: Path | None = None

    def __post_init__(self) -> None:
        if self.metric not in METRICS:
            raise ValueError(f"unknown metric {self.metric!r}")
        if len(self.colormap) < 2:
            raise ValueError("colormap needs at least two anchors")
        values = [v for v, _ in self.colormap]
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ValueError("colormap anchor values must be strictly increasing")
        for _, color in self.colormap:
            _parse_color(color)
        for side, start, end in self.expert_spans:
            if side not in ("candidate", "reference"):
                raise ValueError(f"unknown expert span side {side!r}")
            if start < 0 or end <= start:
                raise ValueError(f"bad expert span ({start}, {end})")


def _parse_color(color: str) -> tuple[int, int, int]:
    if not _COLOR_RE.match(color):
        raise ValueError(f"not a 24-bit RGB color: {color!r}")
    return (int(color[1:3], 16), int(color[3:5], 16), int(color[5:7], 16))


def anchor_position(value: float, anchors: list[tuple[float, str]]) -> float:
    """Position of ``value`` along the anchor path, in [0, len(anchors) - 1].

    Monotone in value; used to state the color-ordering property without
    comparing RGB triples directly.
    """
    if value <= anchors[0][0]:
        return 0.0
    if value >= anchors[-1][0]:
        return float(len(anchors) - 1)
    for k in range(len(anchors) - 1):
        lo, hi = anchors[k][0], anchors[k + 1][0]
        if lo <= value <= hi:
            return k + (value - lo) / (hi - lo)
    raise AssertionError("unreachable: anchors are increasing")


def value_to_color(value: float, anchors: list[tuple[float, str]] | None = None) -> str:
    """Piecewise-linear interpolation over the colormap anchors, clamped."""
    anchors = anchors if anchors is not None else DEFAULT_ANCHORS
    pos = anchor_position(value, anchors)
    k = min(int(pos), len(anchors) - 2)
    t = pos - k
    lo = _parse_color(anchors[k][1])
    hi = _parse_color(anchors[k + 1][1])
    mixed = tuple(int(a + t * (b - a) + 0.5) for a, b in zip(lo, hi))
    return "#{:02x}{:02x}{:02x}".format(*mixed)


def _tick_stride(n: int) -> int:
    # At most ~20 tick labels per axis regardless of grid size.
    return max(1, (n + 19) // 20)


def render_heatmap(m: SimilarityMatrix, spec: ReportSpec) -> str:
    """SVG heatmap: candidate segments on the x-axis, references on the y-axis."""
    values = m.grid(spec.metric)
    annotate = m.cand_count <= _ANNOTATE_LIMIT and m.ref_count <= _ANNOTATE_LIMIT
    cell = _CELL if annotate else _CELL_DENSE
    grid_w = m.cand_count * cell
    grid_h = m.ref_count * cell
    legend_w = 192
    legend_h = 12
    width = _MARGIN_LEFT + max(grid_w, legend_w) + 16
    height = _MARGIN_TOP + grid_h + 46 + legend_h + 22

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'font-family="monospace" font-size="10">',
        f'<rect width="{width}" height="{height}" fill="#ffffff"/>',
        f'<text x="{_MARGIN_LEFT}" y="14">instance {m.instance_id} '
        f'level={m.level} metric={spec.metric}</text>',
    ]

    for i in range(m.cand_count):
        x = _MARGIN_LEFT + i * cell
        for j in range(m.ref_count):
            y = _MARGIN_TOP + j * cell
            color = value_to_color(float(values[i, j]), spec.colormap)
            out.append(
                f'<rect class="cell" x="{x}" y="{y}" width="{cell}" '
                f'height="{cell}" fill="{color}"/>')
            if annotate:
                out.append(
                    f'<text x="{x + cell // 2}" y="{y + cell // 2 + 3}" '
                    f'text-anchor="middle" font-size="8">'
                    f'{values[i, j]:.2f}</text>')

    stride_x = _tick_stride(m.cand_count)
    for i in range(0, m.cand_count, stride_x):
        x = _MARGIN_LEFT + i * cell + cell // 2
        out.append(f'<text x="{x}" y="{_MARGIN_TOP + grid_h + 12}" '
                   f'text-anchor="middle">{i}</text>')
    stride_y = _tick_stride(m.ref_count)
    for j in range(0, m.ref_count, stride_y):
        y = _MARGIN_TOP + j * cell + cell // 2 + 3
        out.append(f'<text x="{_MARGIN_LEFT - 6}" y="{y}" text-anchor="end">{j}</text>')
    out.append(f'<text x="{_MARGIN_LEFT + grid_w // 2}" y="{_MARGIN_TOP + grid_h + 28}" '
               f'text-anchor="middle">candidate segment</text>')
    out.append(f'<text x="12" y="{_MARGIN_TOP + grid_h // 2}" text-anchor="middle" '
               f'transform="rotate(-90 12 {_MARGIN_TOP + grid_h // 2})">'
               f'reference segment</text>')

    # Legend: discrete strip spanning the anchored value range.
    lo = spec.colormap[0][0]
    hi = spec.colormap[-1][0]
    ly = _MARGIN_TOP + grid_h + 40
    step_w = legend_w / _LEGEND_STEPS
    for s in range(_LEGEND_STEPS):
        v = lo + (s + 0.5) / _LEGEND_STEPS * (hi - lo)
        x = _MARGIN_LEFT + s * step_w
        out.append(f'<rect class="legend" x="{x:.1f}" y="{ly}" '
                   f'width="{step_w:.1f}" height="{legend_h}" '
                   f'fill="{value_to_color(v, spec.colormap)}"/>')
    for v, _ in spec.colormap:
        x = _MARGIN_LEFT + (v - lo) / (hi - lo) * legend_w
        out.append(f'<text x="{x:.1f}" y="{ly + legend_h + 12}" '
                   f'text-anchor="middle">{v:.2f}</text>')

    out.append("</svg>")
    return "\n".join(out) + "\n"


def _merge_spans(spans: list[tuple[int, int]]) -> list[tuple[int, int]]:
    merged: list[tuple[int, int]] = []
    for start, end in sorted(spans):
        if merged and start <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], end))
        else:
            merged.append((start, end))
    return merged


def _highlight(segment: Segment, spans: list[tuple[int, int]]) -> str:
    """Segment text as HTML, expert-span overlaps wrapped in the highlight class."""
    local = []
    for start, end in spans:
        lo = max(0, start - segment.char_start)
        hi = min(len(segment.text), end - segment.char_start)
        if lo < hi:
            local.append((lo, hi))
    if not local:
        return html.escape(segment.text)
    parts = []
    cursor = 0
    for lo, hi in _merge_spans(local):
        parts.append(html.escape(segment.text[cursor:lo]))
        parts.append(f'<span class="expert">{html.escape(segment.text[lo:hi])}</span>')
        cursor = hi
    parts.append(html.escape(segment.text[cursor:]))
    return "".join(parts)


def format_triple(t: ScoreTriple) -> str:
    return f"p = {t.p:.2f}, r = {t.r:.2f}, F1 = {t.f1:.2f}"


def render_pair_report(
    ranked: list[RankedPair],
    cand_segments: list[Segment],
    ref_segments: list[Segment],
    spec: ReportSpec,
) -> str:
    """Side-by-side HTML: ranked pair texts, scores, flags, expert highlights."""
    if not ranked:
        raise ValueError("ranked pair list is empty")
    cand_spans = [(s, e) for side, s, e in spec.expert_spans if side == "candidate"]
    ref_spans = [(s, e) for side, s, e in spec.expert_spans if side == "reference"]

    css = [
        "body { font-family: Georgia, serif; max-width: 60em; margin: 2em auto; }",
        ".pair { border: 1px solid #ccc; margin: 1em 0; padding: 0.8em 1em; }",
        ".scores { font-family: monospace; }",
        ".badge { background: #eee; border: 1px solid #999; border-radius: 3px;"
        " font-size: 0.8em; padding: 0 0.4em; margin-left: 0.4em; }",
        ".side { margin: 0.5em 0; }",
        ".label { font-weight: bold; }",
    ]
    if spec.expert_spans:
        css.append(".expert { background: #b8e6b8; color: #14601a; }")

    out = [
        "<!DOCTYPE html>",
        '<html lang="en">',
        "<head>",
        '<meta charset="utf-8">',
        f"<title>instance {spec.instance_id} ranked pairs</title>",
        "<style>",
        *css,
        "</style>",
        "</head>",
        "<body>",
        f"<h1>instance {spec.instance_id}, {spec.level} level, "
        f"ranked by {ranked[0].metric_used}</h1>",
    ]
    for rank, pair in enumerate(ranked, start=1):
        cand = cand_segments[pair.cand_index]
        ref = ref_segments[pair.ref_index]
        badges = "".join(f'<span class="badge">{html.escape(flag)}</span>'
                         for flag in sorted(pair.flags))
        out.extend([
            '<div class="pair">',
            f"<h2>#{rank}: candidate {pair.cand_index} vs "
            f"reference {pair.ref_index}</h2>",
            f'<p class="scores">{format_triple(pair.triple)}{badges}</p>',
            f'<p class="side"><span class="label">candidate:</span> '
            f'{_highlight(cand, cand_spans)}</p>',
            f'<p class="side"><span class="label">reference:</span> '
            f'{_highlight(ref, ref_spans)}</p>',
            "</div>",
        ])
    out.extend(["</body>", "</html>"])
    return "\n".join(out) + "\n"


PAIRS_CSV_HEADER = "cand_index,ref_index,p,r,f1,cand_tokens,ref_tokens,flags"


def pairs_to_csv(m: SimilarityMatrix, ranked: list[RankedPair]) -> str:
    lines = [PAIRS_CSV_HEADER]
    for pair in ranked:
        flags = ";".join(sorted(pair.flags))
        t = pair.triple
        lines.append(
            f"{pair.cand_index},{pair.ref_index},{t.p:.6f},{t.r:.6f},{t.f1:.6f},"
            f"{m.cand_token_counts[pair.cand_index]},"
            f"{m.ref_token_counts[pair.ref_index]},{flags}")
    return "\n".join(lines) + "\n"


def pairs_from_csv(text: str) -> list[dict]:
    """Parse a pairs CSV back into dicts; inverse of pairs_to_csv."""
    lines = text.strip("\n").split("\n")
    if lines[0] != PAIRS_CSV_HEADER:
        raise ValueError(f"unexpected pairs CSV header: {lines[0]!r}")
    rows = []
    for line in lines[1:]:
        cells = line.split(",")
        if len(cells) != 8:
            raise ValueError(f"expected 8 CSV fields, got {len(cells)}: {line!r}")
        rows.append({
            "cand_index": int(cells[0]),
            "ref_index": int(cells[1]),
            "p": float(cells[2]),
            "r": float(cells[3]),
            "f1": float(cells[4]),
            "cand_tokens": int(cells[5]),
            "ref_tokens": int(cells[6]),
            "flags": [f for f in cells[7].split(";") if f],
        })
    return rows


def export_tables(
    m: SimilarityMatrix,
    ranked: list[RankedPair],
    path_prefix: Path,
    streaks: list[StreakDiagnostic] | None = None,
    alignment: float = 0.0,
    metric: str = "p",
) -> tuple[Path, Path]:
    """Write pairs.csv and bundle.json under the given directory prefix."""
    path_prefix.mkdir(parents=True, exist_ok=True)
    csv_path = path_prefix / "pairs.csv"
    json_path = path_prefix / "bundle.json"
    csv_path.write_text(pairs_to_csv(m, ranked), encoding="utf-8")
    bundle = build_bundle(m, metric, streaks or [], alignment, ranked)
    json_path.write_text(bundle_to_json(bundle), encoding="utf-8")
    return csv_path, json_path
