"""
Writers for sampled paths and identity-suite reports.

Paths are written in long format, one row per (path, time):

    path_id,time,value,weight

with full float precision ("%.17g"), UTF-8 and '\\n' line endings. Suite
reports are JSON documents {suite: [...], summary: {total, passed}} or the
same rows flattened to CSV. Non-finite numbers are written as null.
"""

import sys
import json
import logging
from datetime import datetime

import numpy as np
import pandas as pd

from verify import IdentityReport, summarize

logger = logging.getLogger(__name__)


PATH_COLUMNS = ['path_id', 'time', 'value', 'weight']
REPORT_COLUMNS = ['id', 'args', 'lhs', 'rhs', 'abs_err', 'rel_err', 'tol', 'pass', 'diagnostics']
FLOAT_FORMAT = '%.17g'


def finite_or_null(value):
    """Replace non-finite floats by None so the document is strict JSON."""
    if isinstance(value, dict):
        return {key: finite_or_null(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [finite_or_null(item) for item in value]
    if isinstance(value, (float, np.floating)) and not np.isfinite(value):
        return None
    return value


def _json_default(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"not JSON serializable: {type(value).__name__}")


def paths_frame(paths):
    """Long-format DataFrame of a list of PathSample."""
    rows = []
    for path_id, path in enumerate(paths):
        for t, v in zip(path.times, path.values):
            rows.append((path_id, t, v, path.weight))
    return pd.DataFrame(rows, columns=PATH_COLUMNS)


def write_paths_csv(paths, out=None):
    """Write paths as CSV to a file path or open text stream (stdout when None).

    Returns:
        number of data rows written
    """
    frame = paths_frame(paths)
    target = sys.stdout if out is None else out
    frame.to_csv(target, index=False, float_format=FLOAT_FORMAT, lineterminator='\n',
                 encoding='utf-8')
    if isinstance(out, str):
        logger.info("wrote %d rows for %d paths to %s", len(frame), len(paths), out)
    return len(frame)


def read_paths_csv(path):
    """Read a paths CSV back into a DataFrame with typed columns."""
    frame = pd.read_csv(path, encoding='utf-8')
    missing = [c for c in PATH_COLUMNS if c not in frame.columns]
    if missing:
        raise ValueError(f"paths CSV missing columns: {', '.join(missing)}")
    return frame.astype({'path_id': int, 'time': float, 'value': float, 'weight': float})


def suite_to_dict(reports, profile=None):
    """JSON-ready document for a list of IdentityReport."""
    document = {
        'suite': [finite_or_null(r.to_dict()) for r in reports],
        'summary': summarize(reports),
        'generated': datetime.now().isoformat(),
    }
    if profile is not None:
        document['profile'] = profile
    return document


def report_from_dict(document):
    """Rebuild the IdentityReport list from a suite document."""
    return [IdentityReport.from_dict(item) for item in document.get('suite', [])]


def suite_frame(reports):
    rows = []
    for report in reports:
        item = report.to_dict()
        item['args'] = json.dumps(item['args'], default=_json_default, sort_keys=True)
        item['diagnostics'] = json.dumps(finite_or_null(item['diagnostics']), default=_json_default,
                                         sort_keys=True, allow_nan=False)
        rows.append(item)
    return pd.DataFrame(rows, columns=REPORT_COLUMNS)


def write_suite(reports, out=None, fmt='json', profile=None):
    """Write a suite report as JSON or CSV to a path or stream (stdout when None)."""
    if fmt not in ('json', 'csv'):
        raise ValueError(f"unknown format {fmt!r}; expected 'json' or 'csv'")
    target = sys.stdout if out is None else out
    if fmt == 'csv':
        suite_frame(reports).to_csv(target, index=False, float_format=FLOAT_FORMAT,
                                    lineterminator='\n', encoding='utf-8')
        return
    document = suite_to_dict(reports, profile=profile)
    if isinstance(target, str):
        with open(target, 'w', encoding='utf-8', newline='\n') as f:
            json.dump(document, f, indent=2, default=_json_default, allow_nan=False)
            f.write('\n')
    else:
        json.dump(document, target, indent=2, default=_json_default, allow_nan=False)
        target.write('\n')


def save_report(reports, output_path=None, profile=None):
    """Save a suite report to JSON; the default name carries a timestamp."""
    if output_path is None:
        timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
        output_path = f"identity_report_{timestamp}.json"

    write_suite(reports, output_path, fmt='json', profile=profile)

    print(f"\nReport saved to: {output_path}", file=sys.stderr)
    return output_path


def load_report(path):
    """Read a saved JSON suite report back into IdentityReport objects."""
    with open(path, 'r', encoding='utf-8') as f:
        return report_from_dict(json.load(f))
