"""Markdown rendering of verification results."""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from typing import Any, Dict, Iterable, Optional, Sequence

from jinja2 import Environment, FileSystemLoader, StrictUndefined
from jinja2 import TemplateError as JinjaTemplateError

from . import __version__
from .limiting import REFERENCE_TABLE1, REFERENCE_TABLE2, TableRow, table1, table2
from .linalg import DEFAULT_TOLERANCES, Tolerances
from .sweep import format_deviation
from .verification import DEFAULT_SAMPLES, DEFAULT_SEED, VerificationOutcome

_TEMPLATE_PACKAGE = "qdeletion._templates"
_REPORT_TEMPLATE_NAME = "verify_report.md.j2"


class TemplateRenderError(Exception):
    """Raised when a template cannot be loaded or rendered."""


@dataclass(slots=True)
class ReportConfig:
    """Inputs for the verification report."""

    outcomes: Sequence[VerificationOutcome]
    tolerances: Tolerances = DEFAULT_TOLERANCES
    samples: int = DEFAULT_SAMPLES
    seed: int = DEFAULT_SEED
    tables: Optional[Dict[str, Sequence[TableRow]]] = None


def render_verification_report(config: ReportConfig) -> str:
    """Render the Markdown report listing every outcome and both fidelity tables."""

    context = _build_context(config)
    try:
        rendered = _render_builtin_template(context)
    except (OSError, JinjaTemplateError) as exc:
        raise TemplateRenderError(str(exc)) from exc
    return rendered.rstrip() + "\n"


def _render_builtin_template(context: Dict[str, Any]) -> str:
    resource = resources.files(_TEMPLATE_PACKAGE)
    with resources.as_file(resource) as template_root:
        env = Environment(
            loader=FileSystemLoader(str(template_root)),
            undefined=StrictUndefined,
            trim_blocks=True,
            lstrip_blocks=True,
            keep_trailing_newline=True,
        )
        env.filters["deviation"] = format_deviation
        template = env.get_template(_REPORT_TEMPLATE_NAME)
        return template.render(**context)


def _table_context(
    title: str, rows: Iterable[TableRow], printed: Dict[float, tuple[float, ...]]
) -> Dict[str, Any]:
    entries = []
    for row in rows:
        published = printed.get(round(row.m1_sq, 1))
        entries.append(
            {
                "m1_sq": row.m1_sq,
                "m2_sq": row.m2_sq,
                "diff": row.diff,
                "positive": row.fidelity.positive_branch,
                "negative": row.fidelity.negative_branch,
                "printed": " or ".join(f"{v:.2f}" for v in published) if published else "",
            }
        )
    return {"title": title, "rows": entries}


def _build_context(config: ReportConfig) -> Dict[str, Any]:
    tables = config.tables
    if tables is None:
        tables = {"table1": table1(), "table2": table2()}
    passed = sum(1 for outcome in config.outcomes if outcome.passed)
    return {
        "version": __version__,
        "outcomes": list(config.outcomes),
        "total": len(config.outcomes),
        "passed": passed,
        "failed": len(config.outcomes) - passed,
        "tolerances": config.tolerances,
        "samples": config.samples,
        "seed": config.seed,
        "tables": [
            _table_context(
                "One-transformer limiting fidelity", tables.get("table1", ()), REFERENCE_TABLE1
            ),
            _table_context(
                "Two-transformer limiting fidelity", tables.get("table2", ()), REFERENCE_TABLE2
            ),
        ],
    }
