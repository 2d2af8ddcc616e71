"""Canonical JSON reports and their schemas.

Reports are serialized with sorted keys and every float printed as %.12e so
that identical runs produce byte-identical files on any platform. The
serializer is deliberately tiny rather than a json.dumps wrapper: the
stdlib encoder offers no hook for float formatting. Schemas are enforced
with jsonschema before anything is written.
"""

from __future__ import annotations

import math

import jsonschema

SCHEMA_VERSION = 1


def canonical_json(obj) -> str:
    """Serialize to canonical JSON text (sorted keys, %.12e floats)."""
    out: list[str] = []
    _write(obj, out)
    out.append("\n")
    return "".join(out)


def _write(obj, out: list[str]) -> None:
    if obj is None:
        out.append("null")
    elif isinstance(obj, bool):
        out.append("true" if obj else "false")
    elif isinstance(obj, int):
        out.append(repr(obj))
    elif isinstance(obj, float):
        if not math.isfinite(obj):
            raise ValueError(f"non-finite float {obj!r} in report")
        out.append("%.12e" % obj)
    elif isinstance(obj, str):
        out.append('"')
        for ch in obj:
            if ch in ('"', "\\"):
                out.append("\\" + ch)
            elif ord(ch) < 0x20:
                out.append("\\u%04x" % ord(ch))
            else:
                out.append(ch)
        out.append('"')
    elif isinstance(obj, (list, tuple)):
        out.append("[")
        for i, item in enumerate(obj):
            if i:
                out.append(",")
            _write(item, out)
        out.append("]")
    elif isinstance(obj, dict):
        out.append("{")
        keys = sorted(obj)
        for i, k in enumerate(keys):
            if not isinstance(k, str):
                raise TypeError(f"non-string report key {k!r}")
            if i:
                out.append(",")
            _write(k, out)
            out.append(":")
            _write(obj[k], out)
        out.append("}")
    else:
        raise TypeError(f"unserializable report value {obj!r}")


_NUM = {"type": "number"}
_NUM_OR_NULL = {"type": ["number", "null"]}
_POINT = {
    "type": "array",
    "items": _NUM,
    "minItems": 2,
    "maxItems": 2,
}

_ERROR = {
    "type": "object",
    "required": ["type", "message"],
    "properties": {
        "type": {"type": "string"},
        "message": {"type": "string"},
    },
    "additionalProperties": False,
}

_PREDICT_OUTPUTS = {
    "type": "object",
    "required": ["m", "a", "b", "nu", "alpha", "alphaOtherBranch",
                 "vertices"],
    "properties": {
        "m": {"type": "integer", "minimum": 1},
        "a": _NUM,
        "b": _NUM,
        "nu": _NUM,
        "alpha": _NUM,
        "alphaOtherBranch": _NUM,
        "vertices": {"type": "array", "items": _NUM, "minItems": 3},
    },
    "additionalProperties": False,
}

_TREE_OUTPUTS = {
    "type": "object",
    "required": ["foliation", "nodes", "edges", "rays", "verification",
                 "midpointConvention"],
    "properties": {
        "foliation": {"enum": ["vertical", "horizontal"]},
        "nodes": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "multiplicity", "label"],
                "properties": {
                    "id": {"type": "integer"},
                    "multiplicity": {"type": "integer"},
                    "label": {"type": "string"},
                },
                "additionalProperties": False,
            },
        },
        "edges": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["v1", "v2", "length"],
                "properties": {
                    "v1": {"type": "integer"},
                    "v2": {"type": "integer"},
                    "length": _NUM,
                },
                "additionalProperties": False,
            },
        },
        "rays": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["vertex", "rayId"],
                "properties": {
                    "vertex": {"type": "integer"},
                    "rayId": {"type": "integer"},
                },
                "additionalProperties": False,
            },
        },
        "verification": {
            "type": "object",
            "required": ["closedForm", "quadrature", "pathIntegral",
                         "deviations"],
            "properties": {
                "closedForm": _NUM_OR_NULL,
                "quadrature": _NUM_OR_NULL,
                "pathIntegral": _NUM_OR_NULL,
                "deviations": {
                    "type": "object",
                    "required": ["closedFormVsQuadrature",
                                 "closedFormVsPathIntegral",
                                 "quadratureVsPathIntegral"],
                    "properties": {
                        "closedFormVsQuadrature": _NUM_OR_NULL,
                        "closedFormVsPathIntegral": _NUM_OR_NULL,
                        "quadratureVsPathIntegral": _NUM_OR_NULL,
                    },
                    "additionalProperties": False,
                },
            },
            "additionalProperties": False,
        },
        "midpointConvention": {"type": ["string", "null"]},
    },
    "additionalProperties": False,
}

_TRACE_OUTPUTS = {
    "type": "object",
    "required": ["zeros", "traces"],
    "properties": {
        "zeros": {"type": "array", "items": _POINT},
        "traces": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["seed", "kind", "error"],
                "properties": {
                    "seed": _POINT,
                    "kind": {"enum": ["horizontal", "vertical"]},
                    "error": {"oneOf": [{"type": "null"}, _ERROR]},
                    "terminated": {"type": "string"},
                    "drift": _NUM,
                    "philen": _NUM,
                    "points": {"type": "array", "items": _POINT,
                               "minItems": 2},
                },
                "additionalProperties": False,
            },
        },
    },
    "additionalProperties": False,
}

_VERIFY_OUTPUTS = {
    "type": "object",
    "required": ["level", "checks", "passed"],
    "properties": {
        "level": {"enum": ["lemma1", "lengths", "alpha", "develop"]},
        "checks": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["name", "measured", "target", "tolerance",
                             "passed"],
                "properties": {
                    "name": {"type": "string"},
                    "measured": _NUM_OR_NULL,
                    "target": _NUM_OR_NULL,
                    "tolerance": _NUM_OR_NULL,
                    "passed": {"type": "boolean"},
                },
                "additionalProperties": False,
            },
        },
        "passed": {"type": "boolean"},
    },
    "additionalProperties": False,
}

_OUTPUTS = {
    "predict": _PREDICT_OUTPUTS,
    "tree": _TREE_OUTPUTS,
    "trace": _TRACE_OUTPUTS,
    "verify": _VERIFY_OUTPUTS,
}


def report_schema(command: str) -> dict:
    """Full JSON schema of one command's report."""
    if command not in _OUTPUTS:
        raise ValueError(f"unknown command {command!r}")
    return {
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "type": "object",
        "required": ["schemaVersion", "command", "inputs", "outputs",
                     "toolVersion", "seed", "timing"],
        "properties": {
            "schemaVersion": {"const": SCHEMA_VERSION},
            "command": {"const": command},
            "inputs": {"type": "object"},
            "outputs": {
                "oneOf": [
                    _OUTPUTS[command],
                    {
                        "type": "object",
                        "required": ["error"],
                        "properties": {"error": _ERROR},
                        "additionalProperties": False,
                    },
                ]
            },
            "toolVersion": {"type": "string"},
            "seed": {"type": "integer"},
            # wall-clock goes to stderr; the report keeps the field null so
            # identical runs stay byte-identical
            "timing": {"type": "null"},
        },
        "additionalProperties": False,
    }


def make_report(command: str, inputs: dict, outputs: dict, seed: int) -> dict:
    from . import __version__

    report = {
        "schemaVersion": SCHEMA_VERSION,
        "command": command,
        "inputs": inputs,
        "outputs": outputs,
        "toolVersion": __version__,
        "seed": seed,
        "timing": None,
    }
    validate_report(report)
    return report


def validate_report(report: dict) -> None:
    jsonschema.validate(report, report_schema(report["command"]))
