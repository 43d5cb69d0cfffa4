"""
Reduction methods behind the command-line interface.
Each method checks its mathematical preconditions up front, runs one
reduction pipeline and returns a uniform MethodResult.
"""

import logging
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Dict, Optional, Type

from netred.clustering import (
    LINKAGES,
    dissimilarity_matrix,
    errbound_gamma,
    errbound_pseudo,
    hierarchical_cluster,
    reduce_by_clustering,
)
from netred.config import Tolerances, TreeConfig, WeightOptimizerConfig, default_tolerances
from netred.errors import InfeasibleError, InvalidModelError
from netred.models import Clustering, NetworkSystem
from netred.network import (
    check_synchronization,
    network_h2_error,
    network_hinf_error,
    passivity_certificate,
    require_synchronization,
    validate_network,
)
from netred.subsystem import riccati_sync_reduce, simultaneous_reduce
from netred.tree import is_tree, tree_cluster_reduce
from netred.weighting import optimize_weights


logger = logging.getLogger(__name__)


@dataclass
class MethodResult:
    """
    Uniform outcome of a reduction method.

    Attributes:
        method: Method name
        reduced: Reduced network
        clustering: Partition used, for clustering-based methods
        bounds: A-priori bounds by name (None when not applicable)
        errors: Actual 'h2' and 'hinf' errors (None when undefined)
        details: Method-specific report data
        synchronized: Reduced network synchronizes
        seconds: Wall time of the reduction
    """
    method: str
    reduced: NetworkSystem
    clustering: Optional[Clustering] = None
    bounds: Dict[str, Optional[float]] = field(default_factory=dict)
    errors: Dict[str, Optional[float]] = field(default_factory=dict)
    details: Dict[str, object] = field(default_factory=dict)
    synchronized: bool = False
    seconds: float = 0.0

    def to_dict(self) -> dict:
        return {
            'method': self.method,
            'partition': self.clustering.to_dict() if self.clustering else None,
            'bounds': dict(self.bounds),
            'errors': dict(self.errors),
            'synchronized': self.synchronized,
            'details': dict(self.details),
            'seconds': self.seconds,
        }


class ReductionMethod(ABC):
    """
    Abstract base class for all reduction methods.
    Provides precondition checks, timing and logging around reduce().
    """

    NAME = ""
    REQUIRES_IDENTITY_INERTIA = False
    REQUIRES_TREE = False
    REQUIRES_PASSIVITY = False

    def __init__(self, tol: Optional[Tolerances] = None):
        """
        Initialize the method.

        Args:
            tol: Tolerance bundle (environment defaults when omitted)
        """
        self.tol = tol or default_tolerances()

    def check_preconditions(self, net: NetworkSystem) -> None:
        """
        Raise InfeasibleError naming the first failed precondition.

        Args:
            net: Network to reduce
        """
        graph = validate_network(net, self.tol)
        require_synchronization(net, self.tol)
        if self.REQUIRES_IDENTITY_INERTIA and not net.has_identity_inertia():
            raise InfeasibleError(f"{self.NAME}: needs M = I")
        if self.REQUIRES_TREE and not is_tree(graph):
            raise InfeasibleError(f"{self.NAME}: interconnection graph is not a tree")
        if self.REQUIRES_PASSIVITY:
            passivity_certificate(net.agent, tol=self.tol)

    @abstractmethod
    def reduce(self, net: NetworkSystem) -> MethodResult:
        """
        Run the reduction.
        Must be implemented by subclasses.

        Returns:
            MethodResult
        """
        pass

    def run(self, net: NetworkSystem) -> MethodResult:
        """
        Check preconditions, reduce, and fill in actual errors.

        Args:
            net: Network to reduce

        Returns:
            MethodResult with timing and synchronization status
        """
        logger.info(f"Running {self.NAME} reduction on a {net.n}-vertex network")
        start = time.perf_counter()
        self.check_preconditions(net)
        result = self.reduce(net)
        if 'h2' not in result.errors:
            result.errors['h2'] = network_h2_error(net, result.reduced, self.tol)
        if 'hinf' not in result.errors:
            result.errors['hinf'] = network_hinf_error(net, result.reduced, self.tol)
        result.synchronized = check_synchronization(result.reduced, self.tol).synchronized
        result.seconds = time.perf_counter() - start
        logger.info(f"{self.NAME} finished in {result.seconds:.3f}s: "
                    f"{net.n} -> {result.reduced.n} vertices, errors {result.errors}")
        return result

    def __repr__(self):
        return f"<{self.__class__.__name__}(name='{self.NAME}')>"


class ClusterMethod(ReductionMethod):
    """
    Clustering by dissimilarity (or a given partition) followed by projection.
    """

    NAME = "cluster"

    def __init__(self, r: Optional[int] = None, partition: Optional[Clustering] = None,
                 linkage: str = "average",
                 tol: Optional[Tolerances] = None):
        super().__init__(tol)
        if r is None and partition is None:
            raise InvalidModelError("cluster: give either -r or --partition")
        if linkage not in LINKAGES:
            raise InvalidModelError(f"Unknown linkage '{linkage}'")
        self.r = r
        self.partition = partition
        self.linkage = linkage

    def reduce(self, net: NetworkSystem) -> MethodResult:
        dissim = dissimilarity_matrix(net, tol=self.tol)
        details = {'dissimilarity': dissim.method}
        if self.partition is not None:
            clustering = self.partition
        else:
            clustering, dendrogram = hierarchical_cluster(dissim.D, self.r, self.linkage)
            details['dendrogram'] = dendrogram.to_dict()
            details['linkage'] = self.linkage
        reduction = reduce_by_clustering(net, clustering, self.tol)

        bounds: Dict[str, Optional[float]] = {}
        if net.is_single_integrator:
            bounds['pseudo'] = errbound_pseudo(net, clustering, self.tol).bound
        try:
            bounds['gamma'] = errbound_gamma(net, clustering, dissim, self.tol).bound
        except InfeasibleError as e:
            logger.debug(f"Gamma bound not applicable: {e}")
            bounds['gamma'] = None
        details['steady_state_match'] = reduction.steady_state_match
        return MethodResult(
            method=self.NAME, reduced=reduction.reduced, clustering=clustering, bounds=bounds,
            errors={'h2': reduction.h2_error, 'hinf': reduction.hinf_error}, details=details,
        )


class TreeMethod(ReductionMethod):
    """
    Merging of the least important edges of a tree network.
    """

    NAME = "tree"
    REQUIRES_IDENTITY_INERTIA = True
    REQUIRES_TREE = True
    REQUIRES_PASSIVITY = True

    def __init__(self, r: int, config: Optional[TreeConfig] = None, tol: Optional[Tolerances] = None):
        super().__init__(tol)
        self.r = r
        self.config = config or TreeConfig()

    def reduce(self, net: NetworkSystem) -> MethodResult:
        tree = tree_cluster_reduce(net, self.r, config=self.config, tol=self.tol)
        graph = tree.reduction.quotient
        return MethodResult(
            method=self.NAME, reduced=tree.reduction.reduced, clustering=tree.reduction.clustering,
            bounds={'hinf': tree.bound},
            errors={'h2': tree.reduction.h2_error, 'hinf': tree.reduction.hinf_error},
            details={
                'merged': [list(e) for e in tree.merged],
                'importance': tree.importance.report_rows(validate_network(net, self.tol)),
                'quotient_edges': [list(e) for e in graph.edges] if graph else [],
            },
        )


class WeightsMethod(ReductionMethod):
    """
    H2-optimal edge weights on the quotient of a clustering.
    """

    NAME = "weights"

    def __init__(self, r: Optional[int] = None, partition: Optional[Clustering] = None,
                 linkage: str = "average", config: Optional[WeightOptimizerConfig] = None,
                 tol: Optional[Tolerances] = None):
        super().__init__(tol)
        if r is None and partition is None:
            raise InvalidModelError("weights: give either -r or --partition")
        self.r = r
        self.partition = partition
        self.linkage = linkage
        self.config = config or WeightOptimizerConfig()

    def reduce(self, net: NetworkSystem) -> MethodResult:
        clustering = self.partition
        if clustering is None:
            dissim = dissimilarity_matrix(net, tol=self.tol)
            clustering, _ = hierarchical_cluster(dissim.D, self.r, self.linkage)
        result = optimize_weights(net, clustering, self.config, self.tol)
        return MethodResult(
            method=self.NAME, reduced=result.reduced, clustering=clustering,
            errors={'h2': result.final_error}, details=result.to_dict(),
        )


class SubsysMethod(ReductionMethod):
    """
    Riccati-based balanced truncation of the agents.
    """

    NAME = "subsys"
    REQUIRES_IDENTITY_INERTIA = True
    DEFAULT_GAMMA = 0.5

    def __init__(self, k: int, lam: Optional[float] = None, gamma: Optional[float] = None,
                 tol: Optional[Tolerances] = None):
        super().__init__(tol)
        self.k = k
        self.lam = lam
        self.gamma = self.DEFAULT_GAMMA if gamma is None else gamma

    def reduce(self, net: NetworkSystem) -> MethodResult:
        result = riccati_sync_reduce(net, self.k, self.lam, self.gamma, self.tol)
        return MethodResult(
            method=self.NAME, reduced=result.reduced,
            bounds={'hinf': result.bound if result.bound_applies else None},
            errors={'hinf': result.hinf_error}, details=result.to_dict(),
        )


class SimultaneousMethod(ReductionMethod):
    """
    Joint reduction of the network and the agents with a realized Laplacian.
    """

    NAME = "simultaneous"
    REQUIRES_IDENTITY_INERTIA = True
    REQUIRES_PASSIVITY = True

    def __init__(self, r: int, k: int, dual: bool = False, tol: Optional[Tolerances] = None):
        super().__init__(tol)
        self.r = r
        self.k = k
        self.dual = dual

    def reduce(self, net: NetworkSystem) -> MethodResult:
        result = simultaneous_reduce(net, self.r, self.k, dual=self.dual, tol=self.tol)
        return MethodResult(
            method=self.NAME, reduced=result.reduced,
            bounds={'stable': result.stable_bound, 'average': result.average_bound, 'hinf': result.bound},
            errors={'hinf': result.hinf_error, 'stable_hinf': result.stable_error},
            details=result.to_dict(),
        )


METHODS: Dict[str, Type[ReductionMethod]] = {
    cls.NAME: cls for cls in (ClusterMethod, TreeMethod, WeightsMethod, SubsysMethod, SimultaneousMethod)
}
