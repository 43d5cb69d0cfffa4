"""
Data models for netred.
Defines weighted graphs, clusterings, state-space triples and networked systems.
"""

import json
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np

from netred.errors import InvalidModelError


Edge = Tuple[int, int, float]


def as_matrix(value, name: str, vector: str = "column") -> np.ndarray:
    """Coerce a nested list or array to a finite float matrix; 1-D input becomes a column or row."""
    try:
        arr = np.array(value, dtype=float)
    except (TypeError, ValueError) as e:
        raise InvalidModelError(f"{name} is not numeric: {e}") from e
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(-1, 1) if vector == "column" else arr.reshape(1, -1)
    if arr.ndim != 2:
        raise InvalidModelError(f"{name} must be a matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidModelError(f"{name} contains non-finite entries")
    return arr


@dataclass(frozen=True)
class WeightedGraph:
    """
    Undirected weighted graph on vertices 1..n.

    Edges are stored with i < j in lexicographic order; parallel edges
    are rejected.

    Attributes:
        n: Number of vertices
        edges: Tuple of (i, j, w) with 1-based vertices and w > 0
    """
    n: int
    edges: Tuple[Edge, ...] = ()

    def __post_init__(self):
        if self.n < 1:
            raise InvalidModelError(f"Graph needs at least one vertex, got n={self.n}")
        normalized = []
        seen = set()
        for edge in self.edges:
            if len(edge) != 3:
                raise InvalidModelError(f"Edge {edge} must be (i, j, w)")
            i, j, w = int(edge[0]), int(edge[1]), float(edge[2])
            if i == j:
                raise InvalidModelError(f"Self-loop at vertex {i}")
            if not (1 <= i <= self.n and 1 <= j <= self.n):
                raise InvalidModelError(f"Edge ({i}, {j}) out of range 1..{self.n}")
            if not np.isfinite(w) or w <= 0:
                raise InvalidModelError(f"Edge ({i}, {j}) has non-positive weight {w}")
            i, j = min(i, j), max(i, j)
            if (i, j) in seen:
                raise InvalidModelError(f"Parallel edge ({i}, {j})")
            seen.add((i, j))
            normalized.append((i, j, w))
        object.__setattr__(self, "edges", tuple(sorted(normalized)))

    @property
    def m(self) -> int:
        """Number of edges."""
        return len(self.edges)

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for _, _, w in self.edges], dtype=float)

    def adjacency(self) -> np.ndarray:
        """
        Weighted adjacency matrix.

        Returns:
            Symmetric n x n array with zero diagonal
        """
        adj = np.zeros((self.n, self.n))
        for i, j, w in self.edges:
            adj[i - 1, j - 1] = w
            adj[j - 1, i - 1] = w
        return adj

    def to_dict(self) -> dict:
        return {
            'n': self.n,
            'edges': [{'i': i, 'j': j, 'w': w} for i, j, w in self.edges]
        }

    @classmethod
    def from_dict(cls, data: dict) -> "WeightedGraph":
        """
        Build a graph from its JSON form {"n": .., "edges": [{"i","j","w"}]}.

        Args:
            data: Parsed JSON object

        Returns:
            WeightedGraph
        """
        try:
            edges = [(e['i'], e['j'], e.get('w', 1.0)) for e in data.get('edges', [])]
            return cls(int(data['n']), tuple(edges))
        except (KeyError, TypeError, AttributeError) as e:
            raise InvalidModelError(f"Malformed graph object: {e}") from e


@dataclass(frozen=True)
class Clustering:
    """
    Partition of vertices 1..n into clusters 1..r.

    Attributes:
        assignment: assignment[v-1] is the 1-based cluster of vertex v
    """
    assignment: Tuple[int, ...]

    def __post_init__(self):
        assignment = tuple(int(k) for k in self.assignment)
        if not assignment:
            raise InvalidModelError("Clustering of an empty vertex set")
        r = max(assignment)
        if min(assignment) < 1 or set(assignment) != set(range(1, r + 1)):
            raise InvalidModelError(
                f"Cluster ids must cover 1..{r} without gaps, got {sorted(set(assignment))}"
            )
        object.__setattr__(self, "assignment", assignment)

    @property
    def n(self) -> int:
        return len(self.assignment)

    @property
    def r(self) -> int:
        return max(self.assignment)

    @property
    def sizes(self) -> List[int]:
        return [self.assignment.count(k) for k in range(1, self.r + 1)]

    def members(self, k: int) -> List[int]:
        """
        Vertices of cluster k.

        Args:
            k: 1-based cluster id

        Returns:
            Sorted 0-based vertex indices
        """
        return [v for v, c in enumerate(self.assignment) if c == k]

    def matrix(self) -> np.ndarray:
        """Characteristic matrix Pi (n x r) with Pi[v, k] = 1 iff vertex v is in cluster k."""
        pi = np.zeros((self.n, self.r))
        pi[np.arange(self.n), np.array(self.assignment) - 1] = 1.0
        return pi

    @classmethod
    def identity(cls, n: int) -> "Clustering":
        return cls(tuple(range(1, n + 1)))

    @classmethod
    def from_clusters(cls, clusters: Iterable[Iterable[int]], n: int) -> "Clustering":
        """
        Build a clustering from explicit vertex sets.

        Clusters are numbered by their smallest member.

        Args:
            clusters: Sets of 1-based vertices
            n: Number of vertices

        Returns:
            Clustering
        """
        blocks = [sorted(int(v) for v in c) for c in clusters]
        blocks = sorted((b for b in blocks if b), key=lambda b: b[0])
        assignment = [0] * n
        for k, block in enumerate(blocks, start=1):
            for v in block:
                if not 1 <= v <= n:
                    raise InvalidModelError(f"Vertex {v} out of range 1..{n}")
                if assignment[v - 1]:
                    raise InvalidModelError(f"Vertex {v} appears in two clusters")
                assignment[v - 1] = k
        if 0 in assignment:
            raise InvalidModelError(f"Vertex {assignment.index(0) + 1} is not clustered")
        return cls(tuple(assignment))

    def to_dict(self) -> dict:
        return {'assignment': list(self.assignment)}

    @classmethod
    def from_dict(cls, data: dict) -> "Clustering":
        try:
            return cls(tuple(data['assignment']))
        except (KeyError, TypeError) as e:
            raise InvalidModelError(f"Malformed clustering object: {e}") from e


@dataclass
class StateSpace:
    """
    Continuous-time linear system x' = Ax + Bu, y = Cx + Du.

    Attributes:
        A: State matrix (n x n)
        B: Input matrix (n x m)
        C: Output matrix (p x n)
        D: Feedthrough (p x m), zero when omitted
    """
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: Optional[np.ndarray] = None

    def __post_init__(self):
        self.A = as_matrix(self.A, "A")
        self.B = as_matrix(self.B, "B")
        self.C = as_matrix(self.C, "C", vector="row")
        n = self.A.shape[0]
        if self.A.shape != (n, n):
            raise InvalidModelError(f"A must be square, got {self.A.shape}")
        if self.B.shape[0] != n:
            raise InvalidModelError(f"B has {self.B.shape[0]} rows, expected {n}")
        if self.C.shape[1] != n:
            raise InvalidModelError(f"C has {self.C.shape[1]} columns, expected {n}")
        if self.D is None:
            self.D = np.zeros((self.C.shape[0], self.B.shape[1]))
        else:
            self.D = as_matrix(self.D, "D")
            if self.D.shape != (self.C.shape[0], self.B.shape[1]):
                raise InvalidModelError(f"D must be {self.C.shape[0]}x{self.B.shape[1]}")

    @property
    def order(self) -> int:
        return self.A.shape[0]

    @property
    def inputs(self) -> int:
        return self.B.shape[1]

    @property
    def outputs(self) -> int:
        return self.C.shape[0]

    @classmethod
    def integrator(cls) -> "StateSpace":
        """The single integrator (0, 1, 1)."""
        return cls(np.zeros((1, 1)), np.ones((1, 1)), np.ones((1, 1)))

    def is_integrator(self) -> bool:
        return (self.order == 1 and self.inputs == 1 and self.outputs == 1
                and self.A[0, 0] == 0.0 and self.B[0, 0] == 1.0 and self.C[0, 0] == 1.0)

    def to_dict(self) -> dict:
        return {'A': self.A.tolist(), 'B': self.B.tolist(), 'C': self.C.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "StateSpace":
        try:
            return cls(data['A'], data['B'], data['C'], data.get('D'))
        except (KeyError, TypeError) as e:
            raise InvalidModelError(f"Malformed subsystem object: {e}") from e


@dataclass
class NetworkSystem:
    """
    Diffusively coupled network (M (x) I) x' = (M (x) A - L (x) BC) x + (F (x) B) u,
    y = (H (x) C) x.

    Attributes:
        M: Positive diagonal inertia matrix (n x n)
        L: Graph Laplacian (n x n)
        F: External input matrix (n x p)
        H: External output matrix (q x n)
        subsystem: Agent dynamics; None means the single integrator
        graph: Graph the Laplacian came from, when known
    """
    M: np.ndarray
    L: np.ndarray
    F: np.ndarray
    H: np.ndarray
    subsystem: Optional[StateSpace] = None
    graph: Optional[WeightedGraph] = None
    metadata: Dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        self.L = as_matrix(self.L, "L")
        n = self.L.shape[0]
        if self.L.shape != (n, n):
            raise InvalidModelError(f"L must be square, got {self.L.shape}")
        M = np.array(self.M, dtype=float)
        M = as_matrix(np.diag(M) if M.ndim == 1 else M, "M")
        if M.shape != (n, n) or np.any(M - np.diag(np.diag(M))):
            raise InvalidModelError("M must be an n x n diagonal matrix")
        if np.any(np.diag(M) <= 0):
            raise InvalidModelError("M must have a positive diagonal")
        self.M = M
        self.F = as_matrix(self.F, "F")
        if self.F.shape[0] != n:
            raise InvalidModelError(f"F has {self.F.shape[0]} rows, expected {n}")
        self.H = as_matrix(self.H, "H", vector="row")
        if self.H.shape[1] != n:
            raise InvalidModelError(f"H has {self.H.shape[1]} columns, expected {n}")
        if self.graph is not None and self.graph.n != n:
            raise InvalidModelError(f"Graph has {self.graph.n} vertices, L is {n} x {n}")

    @property
    def n(self) -> int:
        return self.L.shape[0]

    @property
    def agent(self) -> StateSpace:
        """Agent dynamics, the single integrator when none was given."""
        return self.subsystem if self.subsystem is not None else StateSpace.integrator()

    @property
    def is_single_integrator(self) -> bool:
        return self.subsystem is None or self.subsystem.is_integrator()

    @property
    def masses(self) -> np.ndarray:
        return np.diag(self.M).copy()

    def has_identity_inertia(self) -> bool:
        return bool(np.all(np.diag(self.M) == 1.0))

    def replace(self, **changes) -> "NetworkSystem":
        """Copy with some fields replaced; the graph is dropped when L changes."""
        values = {
            'M': self.M, 'L': self.L, 'F': self.F, 'H': self.H,
            'subsystem': self.subsystem, 'graph': self.graph,
            'metadata': dict(self.metadata),
        }
        if 'L' in changes and 'graph' not in changes:
            values['graph'] = None
        values.update(changes)
        return NetworkSystem(**values)

    def to_dict(self) -> dict:
        data = {'M': self.masses.tolist()}
        if self.graph is not None:
            data['graph'] = self.graph.to_dict()
        else:
            data['L'] = self.L.tolist()
        data['F'] = self.F.tolist()
        data['H'] = self.H.tolist()
        if self.subsystem is not None:
            data['subsystem'] = self.subsystem.to_dict()
        if self.metadata:
            data['metadata'] = dict(self.metadata)
        return data

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    @classmethod
    def from_dict(cls, data: dict) -> "NetworkSystem":
        """
        Build a network from its JSON form.

        Either 'graph' or 'L' must be present; M defaults to the identity,
        H to the identity and the subsystem to the single integrator.

        Args:
            data: Parsed JSON object

        Returns:
            NetworkSystem
        """
        if not isinstance(data, dict):
            raise InvalidModelError("Network must be a JSON object")
        graph = None
        if 'graph' in data:
            graph = WeightedGraph.from_dict(data['graph'])
            adj = graph.adjacency()
            L = np.diag(adj.sum(axis=1)) - adj
        elif 'L' in data:
            L = as_matrix(data['L'], "L")
        else:
            raise InvalidModelError("Network needs either 'graph' or 'L'")
        n = L.shape[0]
        if 'F' not in data:
            raise InvalidModelError("Network needs an input matrix 'F'")
        subsystem = StateSpace.from_dict(data['subsystem']) if data.get('subsystem') else None
        return cls(
            M=data.get('M', np.ones(n)),
            L=L,
            F=data['F'],
            H=data.get('H', np.eye(n)),
            subsystem=subsystem,
            graph=graph,
            metadata={str(k): str(v) for k, v in (data.get('metadata') or {}).items()},
        )


@dataclass
class PassivityCertificate:
    """
    Passivity certificate K > 0 with A'K + KA <= 0 and C' = KB.

    Attributes:
        K: Certificate used for synchronization arguments
        K_min: Minimal certificate (defaults to K)
        K_max: Maximal certificate (defaults to K)
        source: 'symmetric' when K = I from the symmetric case, else 'supplied'
    """
    K: np.ndarray
    K_min: Optional[np.ndarray] = None
    K_max: Optional[np.ndarray] = None
    source: str = "supplied"

    def __post_init__(self):
        if self.K_min is None:
            self.K_min = self.K
        if self.K_max is None:
            self.K_max = self.K


@dataclass
class GramianPair:
    """
    Controllability/observability Gramians of one system.

    Attributes:
        P: Controllability-type Gramian
        Q: Observability-type Gramian
        kind: 'standard', 'pseudo' or 'generalized'
    """
    P: np.ndarray
    Q: np.ndarray
    kind: str = "standard"

