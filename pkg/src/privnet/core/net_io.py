"""
Network I/O
Plain-text readers and writers for multi-layer networks, tensors,
preference vectors, label files, ground truth and reports. Node, layer
and community ids are 1-based in every file; a `.gz` suffix switches any
text format to gzip. Lines starting with `#` are comments.
"""

import gzip
import logging
from pathlib import Path
from typing import Dict, Iterator, List, Mapping, Optional, Sequence, TextIO, Tuple, Union

import numpy as np
import pandas as pd
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from privnet.core.errors import ParseError, PrivnetError, RangeError
from privnet.core.model import DcMsbmParams, MultiLayerNetwork
from privnet.core.privacy import BudgetMatrix, PrivacyProfile
from privnet.core.tensor_ops import Tensor3

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def _open_text(path: PathLike, mode: str) -> TextIO:
    path = Path(path)
    if mode.startswith("w"):
        path.parent.mkdir(parents=True, exist_ok=True)
    if path.suffix == ".gz":
        return gzip.open(path, mode + "t", encoding="utf-8")
    return open(path, mode, encoding="utf-8")


def _data_lines(handle: TextIO) -> Iterator[Tuple[int, List[str]]]:
    for lineno, raw in enumerate(handle, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        yield lineno, line.split()


def _parse_int(token: str, path: PathLike, lineno: int) -> int:
    try:
        return int(token)
    except ValueError:
        raise ParseError(f"expected an integer, got {token!r}", str(path), lineno) from None


def _parse_float(token: str, path: PathLike, lineno: int) -> float:
    try:
        return float(token)
    except ValueError:
        raise ParseError(f"expected a number, got {token!r}", str(path), lineno) from None


def _check_id(value: int, upper: int, what: str, path: PathLike, lineno: int) -> int:
    if not 1 <= value <= upper:
        raise RangeError(f"{path}:{lineno}: {what} id {value} outside [1, {upper}]")
    return value - 1


def _fmt(value: float) -> str:
    return repr(float(value))


# --- layered edge lists -------------------------------------------------------

def read_layered_edgelist(path: PathLike) -> MultiLayerNetwork:
    """
    Read `layers L nodes n` followed by `layer i j` lines.

    Each undirected pair is stored once per layer; repeats (in either
    orientation) are collapsed with a warning. Self-loops are allowed.
    """
    L = n = None
    edges = []
    duplicates = 0
    seen = set()
    with _open_text(path, "r") as handle:
        for lineno, tokens in _data_lines(handle):
            if L is None:
                if len(tokens) != 4 or tokens[0] != "layers" or tokens[2] != "nodes":
                    raise ParseError("expected header 'layers L nodes n'", str(path), lineno)
                L = _parse_int(tokens[1], path, lineno)
                n = _parse_int(tokens[3], path, lineno)
                if L < 1 or n < 1:
                    raise ParseError(f"layer and node counts must be positive, got L={L}, n={n}", str(path), lineno)
                continue
            if len(tokens) != 3:
                raise ParseError(f"expected 'layer i j', got {len(tokens)} fields", str(path), lineno)
            layer, i, j = (_parse_int(tok, path, lineno) for tok in tokens)
            layer = _check_id(layer, L, "layer", path, lineno)
            i = _check_id(i, n, "node", path, lineno)
            j = _check_id(j, n, "node", path, lineno)
            key = (layer, min(i, j), max(i, j))
            if key in seen:
                duplicates += 1
                continue
            seen.add(key)
            edges.append(key)
    if L is None:
        raise ParseError("missing header 'layers L nodes n'", str(path))
    if duplicates:
        logger.warning(f"{path}: collapsed {duplicates} duplicate edges")

    A = np.zeros((n, n, L), dtype=np.uint8, order="F")
    if edges:
        layer, i, j = np.array(edges, dtype=np.int64).T
        A[i, j, layer] = 1
        A[j, i, layer] = 1
    logger.info(f"Loaded {len(edges)} edges over {L} layers and {n} nodes from {path}")
    return MultiLayerNetwork(Tensor3(A))


def write_layered_edgelist(net: MultiLayerNetwork, path: PathLike):
    with _open_text(path, "w") as handle:
        handle.write(f"layers {net.L} nodes {net.n}\n")
        for l in range(net.L):
            rows, cols = np.nonzero(np.triu(net.layer(l)))
            for i, j in zip(rows, cols):
                handle.write(f"{l + 1} {i + 1} {j + 1}\n")


# --- tensors ------------------------------------------------------------------

def write_tensor(t: Tensor3, path: PathLike):
    """`.npy` stores the dense array; anything else is the sparse text format."""
    path = Path(path)
    if path.suffix == ".npy":
        path.parent.mkdir(parents=True, exist_ok=True)
        np.save(path, np.ascontiguousarray(t.values))
        return
    I1, I2, I3 = t.dims
    values = t.values
    with _open_text(path, "w") as handle:
        handle.write(f"tensor3 {I1} {I2} {I3}\n")
        for l in range(I3):
            for j in range(I2):
                for i in np.flatnonzero(values[:, j, l]):
                    handle.write(f"{i + 1} {j + 1} {l + 1} {_fmt(values[i, j, l])}\n")


def read_tensor(path: PathLike) -> Tensor3:
    path = Path(path)
    if path.suffix == ".npy":
        return Tensor3(np.load(path))
    dims = None
    out = None
    seen = set()
    with _open_text(path, "r") as handle:
        for lineno, tokens in _data_lines(handle):
            if dims is None:
                if len(tokens) != 4 or tokens[0] != "tensor3":
                    raise ParseError("expected header 'tensor3 I1 I2 I3'", str(path), lineno)
                dims = tuple(_parse_int(tok, path, lineno) for tok in tokens[1:])
                if min(dims) < 1:
                    raise ParseError(f"tensor dims must be positive, got {dims}", str(path), lineno)
                out = np.zeros(dims, order="F")
                continue
            if len(tokens) != 4:
                raise ParseError(f"expected 'i j l value', got {len(tokens)} fields", str(path), lineno)
            idx = tuple(
                _check_id(_parse_int(tok, path, lineno), d, f"mode-{m}", path, lineno)
                for m, (tok, d) in enumerate(zip(tokens[:3], dims), start=1)
            )
            if idx in seen:
                raise ParseError(f"entry {tuple(k + 1 for k in idx)} given twice", str(path), lineno)
            seen.add(idx)
            value = _parse_float(tokens[3], path, lineno)
            if not np.isfinite(value):
                raise ParseError(f"non-finite value {tokens[3]!r}", str(path), lineno)
            out[idx] = value
    if dims is None:
        raise ParseError("missing header 'tensor3 I1 I2 I3'", str(path))
    return Tensor3(out)


# --- per-node files -----------------------------------------------------------

def _read_node_table(path: PathLike, width: int, n: Optional[int]) -> List[Tuple[int, List[str]]]:
    rows = {}
    with _open_text(path, "r") as handle:
        for lineno, tokens in _data_lines(handle):
            if len(tokens) != width:
                raise ParseError(f"expected {width} fields, got {len(tokens)}", str(path), lineno)
            node = _parse_int(tokens[0], path, lineno)
            if node < 1 or (n is not None and node > n):
                raise RangeError(f"{path}:{lineno}: node id {node} outside [1, {n if n is not None else 'n'}]")
            if node in rows:
                raise ParseError(f"node {node} listed twice", str(path), lineno)
            rows[node] = (lineno, tokens[1:])
    count = n if n is not None else max(rows, default=0)
    missing = [node for node in range(1, count + 1) if node not in rows]
    if missing:
        raise ParseError(f"{len(missing)} node ids missing (first: {missing[0]})", str(path))
    return [rows[node] for node in range(1, count + 1)]


def read_preferences(path: PathLike, n: Optional[int] = None) -> PrivacyProfile:
    """`node_id f` per line; every node 1..n must appear once."""
    table = _read_node_table(path, 2, n)
    f = np.array([_parse_float(fields[0], path, lineno) for lineno, fields in table])
    try:
        return PrivacyProfile(f)
    except PrivnetError as exc:
        raise ParseError(str(exc), str(path)) from exc


def write_preferences(profile: PrivacyProfile, path: PathLike):
    with _open_text(path, "w") as handle:
        for i, value in enumerate(profile.f, start=1):
            handle.write(f"{i} {_fmt(value)}\n")


def read_labels(path: PathLike, n: Optional[int] = None) -> np.ndarray:
    """`node_id label` per line, 1-based on disk; returned 0-based."""
    table = _read_node_table(path, 2, n)
    labels = np.array([_parse_int(fields[0], path, lineno) for lineno, fields in table], dtype=np.int64)
    if labels.size and labels.min() < 1:
        raise RangeError(f"{path}: community labels must be at least 1")
    return labels - 1


def write_labels(labels: np.ndarray, path: PathLike):
    with _open_text(path, "w") as handle:
        for i, label in enumerate(np.asarray(labels, dtype=np.int64), start=1):
            handle.write(f"{i} {label + 1}\n")


def read_ground_truth(path: PathLike, n: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray]:
    """`node_id community degree` per line; returns (0-based labels, degrees)."""
    table = _read_node_table(path, 3, n)
    labels = np.array([_parse_int(fields[0], path, lineno) for lineno, fields in table], dtype=np.int64)
    degrees = np.array([_parse_float(fields[1], path, lineno) for lineno, fields in table])
    if labels.size and labels.min() < 1:
        raise RangeError(f"{path}: community labels must be at least 1")
    return labels - 1, degrees


def write_ground_truth(params: DcMsbmParams, path: PathLike):
    with _open_text(path, "w") as handle:
        for i, (label, degree) in enumerate(zip(params.labels, params.degrees), start=1):
            handle.write(f"{i} {label + 1} {_fmt(degree)}\n")


def read_params(truth_path: PathLike, core_path: PathLike, sparsity: Optional[float] = None) -> DcMsbmParams:
    """Rebuild model parameters from a ground-truth file and a core tensor file."""
    labels, degrees = read_ground_truth(truth_path)
    return DcMsbmParams(labels=labels, degrees=degrees, core=read_tensor(core_path), sparsity=sparsity)


def write_params(params: DcMsbmParams, truth_path: PathLike, core_path: PathLike):
    write_ground_truth(params, truth_path)
    write_tensor(params.core, core_path)


# --- tables and reports -------------------------------------------------------

def write_budget(budget: BudgetMatrix, path: PathLike):
    """n x n CSV without header; pairs of public nodes carry `inf`."""
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(budget.eps).to_csv(path, header=False, index=False, float_format="%.17g")


def read_budget(path: PathLike) -> BudgetMatrix:
    frame = pd.read_csv(path, header=None, dtype=np.float64)
    eps = frame.to_numpy()
    if eps.shape[0] != eps.shape[1]:
        raise ParseError(f"budget matrix must be square, got {eps.shape}", str(path))
    return BudgetMatrix(eps)


def write_scree(singular_values: Sequence[float], path: PathLike):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    sigma = np.asarray(singular_values, dtype=np.float64)
    frame = pd.DataFrame({"k": np.arange(1, sigma.size + 1), "sigma": sigma})
    frame.to_csv(path, index=False, float_format="%.17g")


def write_report(values: Mapping[str, object], path: PathLike):
    """Flat `key=value` lines, in insertion order."""
    with _open_text(path, "w") as handle:
        for key, value in values.items():
            if isinstance(value, float):
                value = _fmt(value)
            handle.write(f"{key}={value}\n")


def read_report(path: PathLike) -> Dict[str, str]:
    out = {}
    with _open_text(path, "r") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ParseError("expected key=value", str(path), lineno)
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out


# --- preprocessing ------------------------------------------------------------

def _giant_component(layer: np.ndarray) -> np.ndarray:
    count, comp = connected_components(csr_matrix(layer), directed=False)
    sizes = np.bincount(comp, minlength=count)
    first_node = np.full(count, layer.shape[0])
    np.minimum.at(first_node, comp, np.arange(layer.shape[0]))
    # largest size first, smallest member id among equals
    best = min(range(count), key=lambda c: (-sizes[c], first_node[c]))
    return comp == best


def giant_component_intersection(net: MultiLayerNetwork) -> Tuple[np.ndarray, Optional[MultiLayerNetwork]]:
    """
    Nodes in the largest connected component of every layer at once.

    Returns the sorted 0-based node ids and the induced subnetwork. An empty
    intersection comes back as an empty id array with None in place of the
    subnetwork, since a Tensor3 cannot have a zero dimension.
    """
    keep = np.ones(net.n, dtype=bool)
    for l in range(net.L):
        keep &= _giant_component(net.layer(l))
    nodes = np.flatnonzero(keep)
    logger.info(f"Giant-component intersection keeps {nodes.size} of {net.n} nodes")
    if nodes.size == 0:
        return nodes, None
    return nodes, net.subnetwork(nodes)

