import hashlib
import json
import math

import numpy as np


def to_jsonable(value):
    """
    Convert numpy scalars/arrays and pydantic models into plain JSON types.
    Non-finite floats become the strings "inf", "-inf" and "nan".
    """
    if hasattr(value, "model_dump"):
        return to_jsonable(value.model_dump(mode="python"))
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    if hasattr(value, "value") and isinstance(getattr(value, "value"), str):
        return value.value
    return value


def dumps_canonical(doc) -> str:
    return json.dumps(to_jsonable(doc), sort_keys=True, indent=2)


def get_fingerprint(doc) -> str:
    doc_str = json.dumps(to_jsonable(doc), sort_keys=True)
    return hashlib.sha256(doc_str.encode()).hexdigest()
