"""JSON shapes of the CLI's structured outputs.

Field names are part of the compatibility contract; tests validate real
CLI output against these schemas.
"""

CAPACITY_SCHEMA = {
    "type": "object",
    "required": ["C", "achievers", "V_low", "V_high", "T", "grid", "tol"],
    "additionalProperties": False,
    "properties": {
        "C": {"type": "number"},
        "achievers": {"type": "array", "items": {"type": "number"}, "minItems": 1},
        "V_low": {"type": "number"},
        "V_high": {"type": "number"},
        "T": {"type": "number"},
        "grid": {"type": "integer"},
        "tol": {"type": "number"},
    },
}

SECOND_ORDER_SCHEMA = {
    "type": "object",
    "required": ["value_nats", "value_bits", "window_low", "window_high"],
    "additionalProperties": False,
    "properties": {
        "value_nats": {"type": "number"},
        "value_bits": {"type": "number"},
        "window_low": {"type": "number"},
        "window_high": {"type": "number"},
    },
}

ACHIEVABILITY_SCHEMA = {
    "type": "object",
    "required": ["bound_kind", "mode", "n", "d", "m", "p", "eta",
                 "excess_upper_bound"],
    "additionalProperties": False,
    "properties": {
        "bound_kind": {"const": "achievability"},
        "mode": {"enum": ["md", "mi"]},
        "n": {"type": "integer"},
        "d": {"type": "integer"},
        "m": {"type": "integer"},
        "p": {"type": "number"},
        "eta": {"type": ["number", "null"]},
        "excess_upper_bound": {"type": "number", "minimum": 0, "maximum": 1},
    },
}

CONVERSE_SCHEMA = {
    "type": "object",
    "required": ["bound_kind", "n", "d", "eps", "beta", "kappa", "q_grid",
                 "resolution_exponent_nats"],
    "additionalProperties": False,
    "properties": {
        "bound_kind": {"const": "converse"},
        "n": {"type": "integer"},
        "d": {"type": "integer"},
        "eps": {"type": "number"},
        "beta": {"type": "number"},
        "kappa": {"type": "number"},
        "q_grid": {"type": "integer"},
        "resolution_exponent_nats": {"type": "number"},
    },
}
