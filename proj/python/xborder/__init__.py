"""Python access to the xborder scanner core."""

import json

from ._xborder import (
    AttributionMap,
    Blacklist,
    BrowserUnavailable,
    ConsistencyError,
    IngestError,
    OutputError,
    __version__,
    capture_page,
    emit_report,
    extract_static_resources,
    load_entities,
    report_json,
    scan,
    validate_url,
)


def report(out_dir, attribution=None):
    """Aggregate report over a scan output directory, as a dict."""
    return json.loads(report_json(out_dir, attribution))


__all__ = [
    "AttributionMap",
    "Blacklist",
    "BrowserUnavailable",
    "ConsistencyError",
    "IngestError",
    "OutputError",
    "__version__",
    "capture_page",
    "emit_report",
    "extract_static_resources",
    "load_entities",
    "report",
    "scan",
    "validate_url",
]
