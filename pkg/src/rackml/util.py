"""Small shared helpers: reproducible timestamps and canonical JSON."""

from __future__ import annotations

import json
import os
from datetime import datetime, timezone

import numpy as np


def now_iso() -> str:
    """Current UTC time, ISO-8601.

    Honors the SOURCE_DATE_EPOCH reproducible-build convention so that runs
    meant to be byte-identical (same data, same seed) can pin the clock.
    """
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    ts = int(epoch) if epoch else None
    dt = datetime.fromtimestamp(ts, tz=timezone.utc) if ts is not None \
        else datetime.now(tz=timezone.utc)
    return dt.replace(microsecond=0).isoformat().replace("+00:00", "Z")


def repro_mode() -> bool:
    return "SOURCE_DATE_EPOCH" in os.environ


def jsonable(obj):
    """Recursively convert numpy scalars/arrays so json.dumps renders them natively."""
    if isinstance(obj, dict):
        return {k: jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def canonical_json(obj) -> str:
    """Sorted keys, no insignificant whitespace; floats render via repr
    (shortest text that parses back to the identical binary64)."""
    return json.dumps(jsonable(obj), sort_keys=True, separators=(",", ":"),
                      allow_nan=False)


def write_canonical_json(obj, path) -> int:
    data = canonical_json(obj).encode("utf-8")
    with open(path, "wb") as f:
        f.write(data)
    return len(data)
