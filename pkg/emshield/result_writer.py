"""
Output rendering and atomic file writes
"""
import json
import logging
import os
import tempfile
from typing import Any, Dict, Mapping

import numpy as np
import pandas as pd

from error_handling import OutputError
from propagation import ReflectionPattern

logger = logging.getLogger(__name__)

FULL_PRECISION = '%.17g'


def _plain(value: Any) -> Any:
    """Make numpy scalars, arrays and complex numbers JSON-serialisable"""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, (complex, np.complexfloating)):
        return [float(value.real), float(value.imag)]
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    return value


def render_json(payload: Mapping[str, Any]) -> str:
    return json.dumps(_plain(dict(payload)), indent=2, sort_keys=True) + "\n"


def render_frame_csv(frame: pd.DataFrame, float_format: str = FULL_PRECISION) -> str:
    return frame.to_csv(index=False, float_format=float_format, lineterminator='\n')


def pattern_frame(pattern: ReflectionPattern) -> pd.DataFrame:
    frame = pd.DataFrame({
        'element': np.arange(pattern.size),
        'beta': pattern.amplitudes,
        'phi_rad': pattern.phases,
    })
    if pattern.bits is not None:
        frame['bits'] = pattern.bits
    return frame


def render_pattern(pattern: ReflectionPattern, fmt: str = 'csv') -> str:
    """Pattern file: per-element beta and phase in radians at full precision"""
    if fmt == 'json':
        return render_json(pattern.to_dict())
    return render_frame_csv(pattern_frame(pattern))


def atomic_write_text(path: str, text: str) -> None:
    """Write through a temporary file in the same directory, then rename over the target"""
    directory = os.path.dirname(os.path.abspath(path))
    try:
        os.makedirs(directory, exist_ok=True)
        fd, tmp_path = tempfile.mkstemp(dir=directory, prefix='.emshield-', suffix='.tmp')
    except OSError as e:
        raise OutputError(path, f"cannot prepare output directory for {path}: {e}") from e
    try:
        with os.fdopen(fd, 'w', encoding='utf-8', newline='\n') as f:
            f.write(text)
        os.replace(tmp_path, path)
    except OSError as e:
        if os.path.exists(tmp_path):
            os.remove(tmp_path)
        raise OutputError(path, f"cannot write {path}: {e}") from e


def write_bundle(out_dir: str, files: Dict[str, str]) -> Dict[str, str]:
    """Write pre-rendered files (name -> text) into out_dir; returns name -> path

    Every file is staged to a temporary sibling first; targets are only renamed into place once
    all of them were written, so a failure leaves no partial results behind.
    """
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as e:
        raise OutputError(out_dir, f"cannot create output directory {out_dir}: {e}") from e

    staged = []
    try:
        for name, text in files.items():
            path = os.path.join(out_dir, name)
            fd, tmp_path = tempfile.mkstemp(dir=out_dir, prefix='.emshield-', suffix='.tmp')
            staged.append((tmp_path, path))
            with os.fdopen(fd, 'w', encoding='utf-8', newline='\n') as f:
                f.write(text)
    except OSError as e:
        for tmp_path, _ in staged:
            if os.path.exists(tmp_path):
                os.remove(tmp_path)
        failed = staged[-1][1] if staged else out_dir
        raise OutputError(failed, f"cannot write {failed}: {e}") from e

    written = {}
    for (tmp_path, path), name in zip(staged, files):
        try:
            os.replace(tmp_path, path)
        except OSError as e:
            raise OutputError(path, f"cannot write {path}: {e}") from e
        written[name] = path
    logger.info(f"Wrote {len(written)} file(s) to {out_dir}")
    return written
