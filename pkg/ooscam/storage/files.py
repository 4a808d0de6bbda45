"""JSON and CSV artifacts of scenarios, action tables, traces and training runs."""
import csv
import json
import os
import subprocess
from functools import lru_cache
from typing import Iterable, List, Optional, Sequence, Tuple

from loguru import logger

from ooscam import __version__
from ooscam.astro.elements import KeplerianElements
from ooscam.astro.epoch import Epoch
from ooscam.conjunction.probability import CovarianceSpec
from ooscam.environment.types import ActionTable, InvalidActionTable, Maneuver, Scenario

SCHEMA_VERSION = 1


class InvalidScenarioFile(ValueError):
    """Raised when a scenario or action-table file is unreadable, incomplete or has another schema version."""
    pass


@lru_cache(maxsize=1)
def build_id() -> str:
    """Package version, plus `git describe` output when running from a checkout."""
    try:
        described = subprocess.run(
            ["git", "describe", "--always", "--dirty"], capture_output=True, text=True, timeout=5,
            cwd=os.path.dirname(os.path.abspath(__file__)),
        )
    except (OSError, subprocess.SubprocessError):
        return f"ooscam {__version__}"
    suffix = described.stdout.strip() if described.returncode == 0 else ""
    return f"ooscam {__version__} ({suffix})" if suffix else f"ooscam {__version__}"


def _ensure_parent(path: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)


def write_json(path: str, payload: dict) -> None:
    _ensure_parent(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    logger.info(f"Wrote {path}")


def _read_json(path: str, kind: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except FileNotFoundError as exc:
        raise InvalidScenarioFile(f"{kind} file not found: {path}") from exc
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidScenarioFile(f"Cannot read {kind} file {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise InvalidScenarioFile(f"{kind} file {path} does not hold a JSON object")
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise InvalidScenarioFile(f"{kind} file {path} has schema_version {version!r}, expected {SCHEMA_VERSION}")
    if data.get("kind") != kind:
        raise InvalidScenarioFile(f"{path} holds a {data.get('kind')!r} document, expected {kind!r}")
    return data


def scenario_to_dict(scenario: Scenario, config: Optional[dict] = None) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "scenario",
        "build": build_id(),
        "config": config,
        "name": scenario.name,
        "start_mjd2000": scenario.start.mjd2000,
        "end_mjd2000": scenario.end.mjd2000,
        "fuel_capacity_units": scenario.fuel_capacity,
        "tca_hint_mjd2000": None if scenario.tca_hint is None else scenario.tca_hint.mjd2000,
        "target": scenario.target.as_dict(),
        "servicer": scenario.servicer.as_dict(),
        "debris": scenario.debris.as_dict(),
        "covariance": scenario.cov.as_dict(),
        "provenance": scenario.provenance,
    }


def scenario_from_dict(data: dict) -> Scenario:
    try:
        tca = data.get("tca_hint_mjd2000")
        return Scenario(
            target=KeplerianElements.from_dict(data["target"]),
            servicer=KeplerianElements.from_dict(data["servicer"]),
            debris=KeplerianElements.from_dict(data["debris"]),
            start=Epoch(float(data["start_mjd2000"])),
            end=Epoch(float(data["end_mjd2000"])),
            fuel_capacity=float(data["fuel_capacity_units"]),
            cov=CovarianceSpec.from_dict(data["covariance"]),
            tca_hint=None if tca is None else Epoch(float(tca)),
            name=str(data.get("name", "scenario")),
            provenance=data.get("provenance"),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidScenarioFile(f"Malformed scenario: {type(exc).__name__}: {exc}") from exc


def save_scenario(path: str, scenario: Scenario, config: Optional[dict] = None) -> None:
    write_json(path, scenario_to_dict(scenario, config))


def load_scenario(path: str) -> Scenario:
    scenario = scenario_from_dict(_read_json(path, "scenario"))
    logger.info(f"Loaded scenario '{scenario.name}' from {path}")
    return scenario


def table_to_dict(table: ActionTable, config: Optional[dict] = None, reward: Optional[float] = None) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "action_table",
        "build": build_id(),
        "config": config,
        "reward": reward,
        "rows": [
            {"row": k, "dv_x_mps": m.dv[0], "dv_y_mps": m.dv[1], "dv_z_mps": m.dv[2], "t_mjd2000": m.t.mjd2000}
            for k, m in enumerate(table.rows, start=1)
        ],
    }


def table_from_dict(data: dict) -> ActionTable:
    try:
        rows = sorted(data["rows"], key=lambda row: int(row["row"]))
        return ActionTable(tuple(
            Maneuver((float(row["dv_x_mps"]), float(row["dv_y_mps"]), float(row["dv_z_mps"])),
                     Epoch(float(row["t_mjd2000"])))
            for row in rows
        ))
    except InvalidActionTable:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidScenarioFile(f"Malformed action table: {type(exc).__name__}: {exc}") from exc


def save_action_table(path: str, table: ActionTable, config: Optional[dict] = None,
                      reward: Optional[float] = None) -> None:
    write_json(path, table_to_dict(table, config, reward))


def load_action_table(path: str) -> ActionTable:
    return table_from_dict(_read_json(path, "action_table"))


def write_csv(path: str, header: Sequence[str], rows: Iterable[Sequence], comments: Optional[dict] = None) -> None:
    """CSV preceded by `# key: value` lines; dict values are written as compact sorted JSON."""
    _ensure_parent(path)
    meta = {"schema_version": SCHEMA_VERSION, "build": build_id(), **(comments or {})}
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for key, value in meta.items():
            text = json.dumps(value, sort_keys=True, separators=(",", ":")) if isinstance(value, (dict, list)) else value
            fh.write(f"# {key}: {text}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        count = 0
        for row in rows:
            writer.writerow(row)
            count += 1
    logger.info(f"Wrote {path} ({count} rows)")


def read_csv(path: str) -> Tuple[dict, List[dict]]:
    """Returns the comment metadata and the data rows (as strings keyed by column)."""
    meta = {}
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise InvalidScenarioFile(f"Cannot read {path}: {exc}") from exc
    body = []
    for line in lines:
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition(":")
            meta[key.strip()] = value.strip()
        else:
            body.append(line)
    return meta, list(csv.DictReader(body))
