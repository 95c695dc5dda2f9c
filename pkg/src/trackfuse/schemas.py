"""Published JSON schemas for every file and wire format, version 1.

Structural validation lives here; semantic checks (run sums, overlap,
warp chains) belong to the loaders.
"""

from __future__ import annotations

import jsonschema

SCHEMA_VERSION = 1

MASK_SCHEMA = {
    "type": "object",
    "properties": {
        "w": {"type": "integer", "minimum": 1},
        "h": {"type": "integer", "minimum": 1},
        "runs": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1},
    },
    "required": ["w", "h", "runs"],
    "additionalProperties": False,
}

SEGMENT_SCHEMA = {
    "type": "object",
    "properties": {
        "id": {"type": "integer"},
        "score": {"type": "number", "minimum": 0, "maximum": 1},
        "mask": MASK_SCHEMA,
    },
    "required": ["mask"],
    "additionalProperties": False,
}

FRAME_RECORD_SCHEMA = {
    "$id": "trackfuse/frame-record/v1",
    "type": "object",
    "properties": {
        "frame": {"type": "integer", "minimum": 0},
        "segments": {"type": "array", "items": SEGMENT_SCHEMA},
    },
    "required": ["frame", "segments"],
    "additionalProperties": False,
}

WARP_RECORD_SCHEMA = {
    "$id": "trackfuse/warp-record/v1",
    "type": "object",
    "properties": {
        "from": {"type": "integer", "minimum": 0},
        "to": {"type": "integer", "minimum": 0},
        "affine": {"type": "array", "items": {"type": "number"}, "minItems": 6, "maxItems": 6},
    },
    "required": ["from", "to", "affine"],
    "additionalProperties": False,
}

ELLIPSE_SCHEMA = {
    "type": "object",
    "properties": {
        "cx": {"type": "number"},
        "cy": {"type": "number"},
        "ax": {"type": "number", "exclusiveMinimum": 0},
        "ay": {"type": "number", "exclusiveMinimum": 0},
    },
    "required": ["cx", "cy", "ax", "ay"],
    "additionalProperties": False,
}

SCENARIO_SCHEMA = {
    "$id": "trackfuse/scenario/v1",
    "type": "object",
    "properties": {
        "width": {"type": "integer", "minimum": 1},
        "height": {"type": "integer", "minimum": 1},
        "num_frames": {"type": "integer", "minimum": 1},
        "instances": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "birth": {"type": "integer", "minimum": 0},
                    "death": {"type": "integer", "minimum": 1},
                    "shape": ELLIPSE_SCHEMA,
                },
                "required": ["birth", "death", "shape"],
                "additionalProperties": False,
            },
        },
        "motion": {
            "oneOf": [
                {"type": "array", "items": {"type": "number"}, "minItems": 6, "maxItems": 6},
                {
                    "type": "array",
                    "items": {
                        "type": "array",
                        "items": {"type": "number"},
                        "minItems": 6,
                        "maxItems": 6,
                    },
                },
            ]
        },
        "seed": {"type": "integer"},
    },
    "required": ["width", "height", "num_frames", "instances"],
    "additionalProperties": False,
}

NOISE_SCHEMA = {
    "$id": "trackfuse/noise/v1",
    "type": "object",
    "properties": {
        "fp_rate": {"type": "number", "minimum": 0, "maximum": 1},
        "fn_rate": {"type": "number", "minimum": 0, "maximum": 1},
        "jitter": {"type": "array", "items": {"type": "integer"}, "minItems": 2, "maxItems": 2},
        "persistent_fp": {
            "type": "object",
            "properties": {
                "start": {"type": "integer", "minimum": 0},
                "duration": {"type": "integer", "minimum": 1},
                "shape": ELLIPSE_SCHEMA,
            },
            "required": ["start", "duration", "shape"],
            "additionalProperties": False,
        },
        "seed": {"type": "integer"},
    },
    "additionalProperties": False,
}

CONFIG_SCHEMA = {
    "$id": "trackfuse/config/v1",
    "type": "object",
    "properties": {
        "T": {"type": "integer", "minimum": 1},
        "theta": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "lambda1": {"type": "integer", "minimum": 1},
        "lambda2": {"type": "integer", "minimum": 1},
        "matched_iou_min": {"type": "number", "minimum": 0},
        "min_frames": {"type": ["integer", "null"], "minimum": 1},
        "render_missed": {"type": "boolean"},
    },
    "additionalProperties": False,
}

METRICS_REPORT_SCHEMA = {
    "$id": "trackfuse/metrics-report/v1",
    "type": "object",
    "properties": {
        "version": {"type": "integer"},
        "mode": {"enum": ["positives_only", "all_frames"]},
        "frames": {"type": "integer", "minimum": 0},
        "seg": {
            "type": "object",
            "properties": {
                "dice": {"type": ["number", "null"]},
                "iou": {"type": ["number", "null"]},
                "mae": {"type": ["number", "null"]},
                "tc": {"type": ["number", "null"]},
            },
            "required": ["dice", "iou", "mae", "tc"],
            "additionalProperties": False,
        },
        "det": {
            "type": "object",
            "properties": {
                "f1_50": {"type": "number"},
                "ap_50": {"type": "number"},
                "ap_50_95": {"type": "number"},
            },
            "required": ["f1_50", "ap_50", "ap_50_95"],
            "additionalProperties": False,
        },
        "config": {"type": "object"},
    },
    "required": ["version", "mode", "frames", "seg", "det"],
    "additionalProperties": False,
}

RUN_METADATA_SCHEMA = {
    "$id": "trackfuse/run-metadata/v1",
    "type": "object",
    "properties": {
        "version": {"type": "integer"},
        "engine": {"type": "string"},
        "config": {"type": "object"},
        "seed": {"type": ["integer", "null"]},
        "frames": {"type": "integer", "minimum": 0},
        "backend": {"type": ["string", "null"]},
    },
    "required": ["version", "engine", "config", "frames"],
    "additionalProperties": False,
}

BANK_SNAPSHOT_SCHEMA = {
    "$id": "trackfuse/bank-snapshot/v1",
    "type": "object",
    "properties": {
        "version": {"type": "integer"},
        "next_id": {"type": "integer", "minimum": 1},
        "trajectories": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "id": {"type": "integer"},
                    "latest_frame": {"type": "integer"},
                    "miss_count": {"type": "integer", "minimum": 0},
                    "mask": MASK_SCHEMA,
                },
                "required": ["id", "latest_frame", "miss_count", "mask"],
                "additionalProperties": False,
            },
        },
        "candidates": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "frame": {"type": "integer"},
                    "first_window": {"type": "integer"},
                    "hit_count": {"type": "integer", "minimum": 1},
                    "mask": MASK_SCHEMA,
                },
                "required": ["frame", "first_window", "hit_count", "mask"],
                "additionalProperties": False,
            },
        },
    },
    "required": ["version", "next_id", "trajectories", "candidates"],
    "additionalProperties": False,
}

PROPAGATE_REQUEST_SCHEMA = {
    "$id": "trackfuse/propagate-request/v1",
    "type": "object",
    "properties": {
        "op": {"enum": ["propagate", "align"]},
        "entries": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "properties": {
                    "frame": {"type": "integer", "minimum": 0},
                    "id": {"type": "integer"},
                    "mask": MASK_SCHEMA,
                },
                "required": ["frame", "id", "mask"],
                "additionalProperties": False,
            },
        },
        "query_frame": {"type": "integer", "minimum": 0},
    },
    "required": ["op", "entries", "query_frame"],
    "additionalProperties": False,
}

PROPAGATE_RESPONSE_SCHEMA = {
    "$id": "trackfuse/propagate-response/v1",
    "type": "object",
    "oneOf": [
        {
            "properties": {
                "masks": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "properties": {"id": {"type": "integer"}, "mask": MASK_SCHEMA},
                        "required": ["id", "mask"],
                        "additionalProperties": False,
                    },
                }
            },
            "required": ["masks"],
            "additionalProperties": False,
        },
        {
            "properties": {"error": {"type": "string"}},
            "required": ["error"],
            "additionalProperties": False,
        },
    ],
}


def validate(obj, schema) -> None:
    """Raise ``jsonschema.ValidationError`` when ``obj`` breaks ``schema``."""
    jsonschema.validate(obj, schema, cls=jsonschema.Draft202012Validator)
