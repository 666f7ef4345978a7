"""Structural comparison of CLI reports against the golden schema."""

import json
from pathlib import Path

GOLDEN = Path(__file__).parent / "golden" / "run_report_schema.json"

TYPES = {"str": str, "int": int, "float": float, "bool": bool, "list": list, "dict": dict}


def load_schema() -> dict:
    return json.loads(GOLDEN.read_text())


def _check(obj: dict, spec: dict, where: str) -> list[str]:
    problems = []
    if list(obj) != list(spec):
        problems.append(f"{where}: keys {list(obj)} != {list(spec)}")
    for key, type_name in spec.items():
        value = obj.get(key)
        if type_name.endswith("?"):  # nullable
            if value is None:
                continue
            type_name = type_name[:-1]
        if isinstance(value, bool) and type_name != "bool":
            problems.append(f"{where}.{key}: bool where {type_name} expected")
        elif not isinstance(value, TYPES[type_name]):
            problems.append(f"{where}.{key}: {type(value).__name__} where {type_name} expected")
    return problems


def schema_problems(report: dict) -> list[str]:
    """Empty list when ``report`` matches the golden layout exactly."""
    schema = load_schema()
    problems = _check(report, schema["report"], "report")
    problems += _check(report["config"], schema["config"], "config")
    problems += _check(report["config"]["plan"], schema["plan"], "plan")
    problems += _check(report["config"]["engine"], schema["engine"], "engine")
    problems += _check(report["summary"], schema["summary"], "summary")
    for i, entry in enumerate(report["results"]):
        problems += _check(entry, schema["entry"], f"results[{i}]")
        problems += _check(entry["worst_point"], schema["worst_point"], f"results[{i}].worst_point")
    return problems
