"""
Terminal presentation. Everything printed by the command line goes through
prompt_toolkit so that it is styled on a terminal and plain when piped.
"""
import json
import sys
from typing import Any, Iterable, Optional, Sequence, TextIO, Tuple

import pygments
from prompt_toolkit import print_formatted_text
from prompt_toolkit.formatted_text import HTML, FormattedText, PygmentsTokens
from prompt_toolkit.styles import Style
from pygments.lexers.data import JsonLexer

from .experiment import STATUS_FAILED, DelayRow, ResultRow
from .style import ui_style

__all__ = [
    "print_html",
    "print_error",
    "print_json",
    "print_results",
    "print_delay_rows",
    "print_membership",
    "print_help",
]

style = Style.from_dict(ui_style)


def _number(value: Optional[float]) -> str:
    return "-" if value is None else format(value, ".6g")


def print_html(text: str, *values: Any, file: Optional[TextIO] = None) -> None:
    " Print a prompt_toolkit HTML template, escaping `values`. "
    message = HTML(text) % values if values else HTML(text)
    print_formatted_text(message, style=style, file=file or sys.stdout)


def print_error(message: str) -> None:
    print_formatted_text(
        FormattedText([("class:error", "error: "), ("", message)]), style=style, file=sys.stderr)


def print_json(data: Any, file: Optional[TextIO] = None) -> None:
    text = json.dumps(data, indent=2)
    tokens = list(pygments.lex(text, lexer=JsonLexer()))
    # The lexer ends on a newline of its own.
    print_formatted_text(PygmentsTokens(tokens), style=style, file=file or sys.stdout, end="")


def _tagged(tag: Optional[str], width: int) -> str:
    " Template piece showing one padded value, styled with `tag` when given. "
    if tag is None:
        return "%%-%ds" % width
    return "<%s>%%-%ds</%s>" % (tag, width, tag)


def _verdict(row: ResultRow) -> Tuple[Optional[str], str]:
    if row.status == STATUS_FAILED:
        return "failed", "failed"
    if row.verdict is None:
        return None, "-"
    return row.verdict, row.verdict


def _answer(value: Optional[bool]) -> Tuple[Optional[str], str]:
    if value is None:
        return None, "-"
    return ("yes", "yes") if value else ("no", "no")


def print_results(rows: Sequence[ResultRow], output_path: Optional[str] = None) -> None:
    print_html(
        "<header>%-12s %-5s %-10s %-10s %-10s %-10s %-9s %-6s %-6s</header>",
        "point", "flow", "lambda", "thruput", "avg_queue", "delay", "verdict", "region", "inner")
    for row in rows:
        point = "-" if row.sweep_value is None else "%s=%s" % (row.sweep_variable, _number(row.sweep_value))
        verdict = _verdict(row)
        region = _answer(row.in_capacity_region)
        inner = _answer(row.in_inner_bound)
        template = "%-12s <flow>%-5s</flow> <number>%-10s %-10s %-10s %-10s</number> " + " ".join(
            [_tagged(verdict[0], 9), _tagged(region[0], 6), _tagged(inner[0], 6)])
        print_html(
            template, point, row.flow, _number(row.lam), _number(row.throughput),
            _number(row.avg_queue), _number(row.delay), verdict[1], region[1], inner[1])
        if row.error:
            print_html("    <failed>%s</failed>", row.error)
    if output_path is not None:
        print_html("wrote <path>%s</path>", output_path)


def print_delay_rows(rows: Iterable[DelayRow], output_path: Optional[str] = None) -> None:
    print_html(
        "<header>%-8s %-8s %-8s %-10s %-10s %-20s %-10s %-10s %-8s</header>",
        "d", "v", "T", "lambda", "lambda_max", "case", "closed", "simulated", "error")
    for row in rows:
        if row.status != "ok":
            print_html(
                "%-8s %-8s %-8s %-10s <infeasible>infeasible</infeasible>",
                _number(row.distance), _number(row.velocity), _number(row.epoch_len), _number(row.lam))
            continue
        error = "-" if row.relative_error is None else "%.2f%%" % (100 * row.relative_error)
        print_html(
            "%-8s %-8s %-8s %-10s %-10s %-20s <number>%-10s %-10s</number> %-8s",
            _number(row.distance), _number(row.velocity), _number(row.epoch_len), _number(row.lam),
            _number(row.lambda_max), row.case, _number(row.closed_form_delay),
            _number(row.simulated_delay), error)
    if output_path is not None:
        print_html("wrote <path>%s</path>", output_path)


def print_membership(
    lam: Sequence[float], in_region: bool, in_closed_hull: bool, in_bound: Optional[bool]
) -> None:
    """
    `in_bound` is None when the inner bound is unknown: no geometry was given
    or robots cannot cross the network within an epoch.
    """
    print_html("arrival rates:   <number>%s</number>", ", ".join(_number(x) for x in lam))
    for label, value in (("capacity region:", in_region), ("closed hull:    ", in_closed_hull)):
        answer = _answer(value)
        print_html(label + " " + _tagged(answer[0], 3), answer[1])
    if in_bound is None:
        print_html("inner bound:     <infeasible>n/a</infeasible>")
    else:
        answer = _answer(in_bound)
        print_html("inner bound:     " + _tagged(answer[0], 3), answer[1])


def print_help() -> None:
    from .help import HELP

    print_formatted_text(HELP, style=style, file=sys.stdout)
