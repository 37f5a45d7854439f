"""Parser for scenario JSON files."""

import json
from pathlib import Path

from pydantic import ValidationError

from app.exceptions import InvalidInputError
from app.models.scenario import Scenario


class ScenarioParseError(InvalidInputError):
    """Scenario file is not valid JSON, or not a valid scenario."""

    code = "scenario_error"


def format_validation_error(exc: ValidationError) -> str:
    """One ``field.path: message`` line per error."""
    lines = []
    for error in exc.errors():
        where = ".".join(str(part) for part in error["loc"]) or "<root>"
        lines.append(f"{where}: {error['msg']}")
    return "\n".join(lines)


def parse_scenario(text: str, *, source: str = "<scenario>") -> Scenario:
    """Parse scenario JSON text.

    Raises:
        ScenarioParseError: malformed JSON (with line and column) or schema errors
            (with field paths)
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(
            f"{source}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}"
        ) from exc
    try:
        return Scenario.model_validate(data)
    except ValidationError as exc:
        raise ScenarioParseError(f"{source}: invalid scenario\n{format_validation_error(exc)}") from exc


def load_scenario(path: str | Path) -> Scenario:
    """Read and parse a scenario file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioParseError(f"{path}: cannot read scenario: {exc.strerror}") from exc
    return parse_scenario(text, source=str(path))
