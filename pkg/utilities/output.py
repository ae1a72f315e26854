"""
`output` module stores the plain-text renderers for CLI reports: `kv` prints one
`key: value` line per field, `table` prints aligned columns.
"""
from typing import Any, Iterable, List, Sequence

from pydantic import BaseModel

FORMATS = ('kv', 'table')


def _value(value: Any) -> str:
    if isinstance(value, bool):
        return 'yes' if value else 'no'
    if value is None:
        return 'na'
    if isinstance(value, float):
        return f'{value:.6f}'
    if isinstance(value, dict):
        return '{' + ', '.join(f'{k}:{_value(v)}' for k, v in value.items()) + '}'
    if isinstance(value, (list, tuple)):
        return '[' + ', '.join(_value(v) for v in value) + ']'
    return str(value)


def _fields(report: BaseModel, skip: Sequence[str]) -> List[tuple]:
    rows = []
    for name in type(report).model_fields:
        if name in skip:
            continue
        value = getattr(report, name)
        if isinstance(value, BaseModel):
            rows += [(f'{name}.{inner}', v) for inner, v in _fields(value, skip)]
        else:
            rows.append((name, value))
    return rows


def render_kv(report: BaseModel, skip: Sequence[str] = ()) -> str:
    """
    `render_kv` function prints every field of a report on its own line.
    List fields with string items are printed one item per line, indented.
    """
    lines = []
    for name, value in _fields(report, skip):
        if isinstance(value, list) and value and all(isinstance(item, str) for item in value):
            lines.append(f'{name}:')
            lines += [f'  {item}' for item in value]
        else:
            lines.append(f'{name}: {_value(value)}')
    return '\n'.join(lines)


def render_table(reports: Iterable[BaseModel], skip: Sequence[str] = ()) -> str:
    reports = list(reports)
    if not reports:
        return ''
    header = [name for name, value in _fields(reports[0], skip) if not isinstance(value, list)]
    rows = [[_value(dict(_fields(report, skip))[name]) for name in header] for report in reports]
    widths = [max(len(cell) for cell in column) for column in zip(header, *rows)]
    return '\n'.join(
        '  '.join(cell.ljust(width) for cell, width in zip(row, widths)).rstrip()
        for row in [header] + rows
    )


def render(reports, mode: str = 'kv', skip: Sequence[str] = ()) -> str:
    if isinstance(reports, BaseModel):
        reports = [reports]
    if mode == 'table':
        return render_table(reports, skip)
    if mode != 'kv':
        raise ValueError(f'No such output format like "{mode}"')
    return '\n\n'.join(render_kv(report, skip) for report in reports)
