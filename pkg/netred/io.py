"""
File input and output for netred.
Model and partition files are JSON with 1-based indices; every file is
written to a temporary sibling first and renamed into place.
"""

import csv
import hashlib
import io
import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from netred import __version__
from netred.errors import InvalidModelError
from netred.models import Clustering, NetworkSystem


logger = logging.getLogger(__name__)

FORMAT_VERSION = 1

PathLike = Union[str, Path]


def _jsonable(value):
    """Convert numpy containers and scalars to plain JSON types."""
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    return value


def atomic_write_text(path: PathLike, text: str) -> str:
    """
    Write text to path through a temporary file and os.replace.

    Args:
        path: Destination file
        text: Content

    Returns:
        The destination path as a string
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, 'w', encoding='utf-8', newline='') as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    logger.debug(f"Wrote {path}")
    return str(path)


def write_json(path: PathLike, data) -> str:
    return atomic_write_text(path, json.dumps(_jsonable(data), indent=2, ensure_ascii=False) + "\n")


def write_csv(path: PathLike, rows: Iterable[Sequence], header: Optional[Sequence[str]] = None) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    if header:
        writer.writerow(header)
    writer.writerows(rows)
    return atomic_write_text(path, buffer.getvalue())


def read_json(path: PathLike):
    """Parse a JSON file, mapping I/O and syntax errors to InvalidModelError."""
    try:
        with open(path, 'r', encoding='utf-8') as f:
            return json.load(f)
    except OSError as e:
        raise InvalidModelError(f"Cannot read {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise InvalidModelError(f"{path} is not valid JSON: {e}") from e


def model_document(net: NetworkSystem) -> dict:
    return {'version': FORMAT_VERSION, 'network': net.to_dict()}


def parse_model(data) -> NetworkSystem:
    """
    Network from a model document or a bare network object.

    Args:
        data: Parsed JSON

    Returns:
        NetworkSystem
    """
    if isinstance(data, dict) and 'network' in data:
        version = data.get('version', FORMAT_VERSION)
        if version != FORMAT_VERSION:
            raise InvalidModelError(f"Unsupported model file version {version}")
        data = data['network']
    return NetworkSystem.from_dict(data)


def load_model(path: PathLike) -> NetworkSystem:
    net = parse_model(read_json(path))
    logger.info(f"Loaded {net.n}-vertex network from {path}")
    return net


def save_model(net: NetworkSystem, path: PathLike) -> str:
    return write_json(path, model_document(net))


def load_partition(path: PathLike, n: Optional[int] = None) -> Clustering:
    """
    Read a partition file.

    Accepts {"assignment": [k_1, ..., k_n]} or {"clusters": [[v, ...], ...]}
    with 1-based vertices.

    Args:
        path: Partition file
        n: Number of vertices (inferred from the clusters when omitted)

    Returns:
        Clustering
    """
    data = read_json(path)
    if not isinstance(data, dict):
        raise InvalidModelError(f"{path}: partition must be a JSON object")
    if 'assignment' in data:
        clustering = Clustering.from_dict(data)
    elif 'clusters' in data:
        try:
            clusters = [[int(v) for v in c] for c in data['clusters']]
        except (TypeError, ValueError) as e:
            raise InvalidModelError(f"{path}: malformed clusters: {e}") from e
        size = n if n is not None else max((v for c in clusters for v in c), default=0)
        clustering = Clustering.from_clusters(clusters, size)
    else:
        raise InvalidModelError(f"{path}: partition needs 'assignment' or 'clusters'")
    if n is not None and clustering.n != n:
        raise InvalidModelError(f"{path}: partition covers {clustering.n} vertices, network has {n}")
    return clustering


def save_partition(clustering: Clustering, path: PathLike) -> str:
    clusters = [[v + 1 for v in clustering.members(k)] for k in range(1, clustering.r + 1)]
    return write_json(path, {'assignment': list(clustering.assignment), 'clusters': clusters})


def input_digest(net: NetworkSystem) -> str:
    """SHA-256 of the canonical JSON form of a network."""
    canonical = json.dumps(_jsonable(model_document(net)), sort_keys=True, separators=(',', ':'))
    return hashlib.sha256(canonical.encode('utf-8')).hexdigest()


def build_report(net: NetworkSystem, result, extra: Optional[dict] = None) -> dict:
    """
    Run report for a method result.

    Args:
        net: Input network
        result: MethodResult
        extra: Additional fields merged at the top level

    Returns:
        JSON-ready dictionary
    """
    report = {
        'netred_version': __version__,
        'input_digest': input_digest(net),
        **result.to_dict(),
        'reduced': model_document(result.reduced),
    }
    if extra:
        report.update(extra)
    return _jsonable(report)

