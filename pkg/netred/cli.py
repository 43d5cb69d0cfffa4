#!/usr/bin/env python3
"""
netred - Command-line interface

Reads network model files, runs one of the reduction methods and writes the
reduced model together with a JSON report of bounds and actual errors.

Usage:
    python -m netred check MODEL
    python -m netred reduce MODEL --method {cluster,tree,weights,subsys,simultaneous} [options]
    python -m netred cluster MODEL -r 3 -o reduced.json
    python -m netred error FULL REDUCED --norm h2
    python -m netred fixtures -o fixtures/

Exit codes:
    0  success
    2  invalid model or arguments
    3  a method's mathematical preconditions fail
    4  numerical failure
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

from netred import __version__
from netred.clustering import (
    LINKAGES,
    aep_h2_error,
    aep_hinf_error,
    dissimilarity_matrix,
    hierarchical_cluster,
)
from netred.config import WeightOptimizerConfig, default_tolerances
from netred.errors import InvalidModelError, NetredError
from netred.fixtures import write_fixtures
from netred.graph import check_laplacian
from netred.io import (
    build_report,
    load_model,
    load_partition,
    save_model,
    save_partition,
    write_csv,
    write_json,
)
from netred.linsys import semistability_check
from netred.methods import (
    METHODS,
    ClusterMethod,
    ReductionMethod,
    SimultaneousMethod,
    SubsysMethod,
    TreeMethod,
    WeightsMethod,
)
from netred.network import (
    assemble,
    check_synchronization,
    network_h2_error,
    network_hinf_error,
    passivity_certificate,
    validate_network,
)


logger = logging.getLogger(__name__)


def setup_logging(verbose: bool = False):
    """
    Configure logging for the application.

    Args:
        verbose: If True, set log level to DEBUG, otherwise INFO
    """
    log_level = logging.DEBUG if verbose else logging.INFO

    logging.basicConfig(
        level=log_level,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        datefmt='%Y-%m-%d %H:%M:%S'
    )


def _flag(value: bool) -> str:
    return "true" if value else "false"


def _fmt(value: Optional[float]) -> str:
    return "undefined" if value is None else repr(float(value))


def _reduction_options() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument('model', help='Network model file (JSON)')
    parent.add_argument('-r', '--order', type=int, default=None,
                        help='Number of vertices (clusters) of the reduced network')
    parent.add_argument('-k', '--sub-order', type=int, default=None,
                        help='Order of the reduced agent dynamics')
    parent.add_argument('--partition', type=str, default=None,
                        help='Partition file with 1-based clusters')
    parent.add_argument('--linkage', choices=LINKAGES, default='average',
                        help='Linkage of the hierarchical clustering (default: average)')
    parent.add_argument('--gamma', type=float, default=None,
                        help='Gain parameter in (0, 1) of the subsystem method (default: 0.5)')
    parent.add_argument('--lambda', dest='lam', type=float, default=None,
                        help='Spectral point of the subsystem method (default: (l2 + ln) / 2)')
    parent.add_argument('--dual', action='store_true',
                        help='Use the dual Gramian construction of the simultaneous method')
    parent.add_argument('--max-iter', type=int, default=None,
                        help='Iteration cap of the edge-weight optimizer')
    parent.add_argument('-o', '--output', type=str, default=None,
                        help='Reduced model output file (report goes next to it)')
    parent.add_argument('--report', type=str, default=None,
                        help='Report file (default: <output>.report.json)')
    return parent


def build_parser() -> argparse.ArgumentParser:
    """
    Build the argument parser.

    Returns:
        Configured ArgumentParser
    """
    parser = argparse.ArgumentParser(
        prog='netred',
        description='netred - Structure-preserving reduction of networked linear systems',
        formatter_class=argparse.RawDescriptionHelpFormatter
    )
    parser.add_argument('--verbose', '-v', action='store_true',
                        help='Enable verbose logging (DEBUG level)')
    parser.add_argument('--version', action='version', version=f'netred {__version__}')
    sub = parser.add_subparsers(dest='command', required=True)

    check = sub.add_parser('check', help='Validate a model and report its properties')
    check.add_argument('model', help='Network model file (JSON)')

    options = _reduction_options()
    reduce = sub.add_parser('reduce', parents=[options], help='Reduce a network with the given method')
    reduce.add_argument('--method', choices=sorted(METHODS), required=True, help='Reduction method')
    for name in METHODS:
        sub.add_parser(name, parents=[options], help=f'Shorthand for reduce --method {name}')

    dissim = sub.add_parser('dissim', help='Dissimilarity matrix and dendrogram')
    dissim.add_argument('model', help='Network model file (JSON)')
    dissim.add_argument('-r', '--order', type=int, default=1,
                        help='Stop merging at this many clusters (default: 1)')
    dissim.add_argument('--linkage', choices=LINKAGES, default='average')
    dissim.add_argument('-o', '--output', type=str, default='.', help='Output directory')

    aep = sub.add_parser('aep', help='Closed-form errors of an almost equitable partition')
    aep.add_argument('model', help='Network model file (only its graph is used)')
    aep.add_argument('--partition', type=str, required=True)
    aep.add_argument('--leaders', type=str, required=True, help='Comma-separated 1-based leaders')
    aep.add_argument('-o', '--output', type=str, default=None)

    error = sub.add_parser('error', help='H2 or H-infinity norm of the difference of two networks')
    error.add_argument('full', help='Original model file')
    error.add_argument('reduced', help='Reduced model file')
    error.add_argument('--norm', choices=('h2', 'hinf'), default='h2')

    fixtures = sub.add_parser('fixtures', help='Write the worked-example models')
    fixtures.add_argument('-o', '--output', type=str, default='fixtures', help='Output directory')
    return parser


def create_method(name: str, args, n: int) -> ReductionMethod:
    """
    Instantiate a reduction method from parsed arguments.

    Args:
        name: Method name
        args: Parsed arguments
        n: Number of vertices of the input network

    Returns:
        ReductionMethod
    """
    tol = default_tolerances()
    partition = load_partition(args.partition, n) if args.partition else None

    def need(value, flag: str):
        if value is None:
            raise InvalidModelError(f"{name}: {flag} is required")
        return value

    if name == ClusterMethod.NAME:
        return ClusterMethod(args.order, partition, args.linkage, tol=tol)
    if name == TreeMethod.NAME:
        return TreeMethod(need(args.order, '-r'), tol=tol)
    if name == WeightsMethod.NAME:
        config = WeightOptimizerConfig() if args.max_iter is None else WeightOptimizerConfig(max_iter=args.max_iter)
        return WeightsMethod(args.order, partition, args.linkage, config, tol=tol)
    if name == SubsysMethod.NAME:
        return SubsysMethod(need(args.sub_order, '-k'), args.lam, args.gamma, tol=tol)
    if name == SimultaneousMethod.NAME:
        return SimultaneousMethod(need(args.order, '-r'), need(args.sub_order, '-k'), args.dual, tol=tol)
    raise InvalidModelError(f"Unknown method '{name}'")


def cmd_reduce(args, name: str) -> int:
    net = load_model(args.model)
    method = create_method(name, args, net.n)
    result = method.run(net)
    report = build_report(net, result, {'model_file': str(args.model)})

    if args.output:
        save_model(result.reduced, args.output)
        report_path = args.report or str(Path(args.output).with_suffix('.report.json'))
        write_json(report_path, report)
        print(f"method: {result.method}")
        print(f"vertices: {net.n} -> {result.reduced.n}")
        print(f"synchronized: {_flag(result.synchronized)}")
        for key, value in result.errors.items():
            print(f"error_{key}: {_fmt(value)}")
        for key, value in result.bounds.items():
            print(f"bound_{key}: {_fmt(value)}")
        print(f"reduced model: {args.output}")
        print(f"report: {report_path}")
    else:
        if args.report:
            write_json(args.report, report)
        print(json.dumps(report, indent=2))
    return 0


def cmd_check(args) -> int:
    net = load_model(args.model)
    verdict = check_laplacian(net.L, default_tolerances())
    print(f"laplacian: {'valid' if verdict.valid else 'invalid'}")
    if not verdict.valid:
        for problem in verdict.problems:
            print(f"  - {problem}")
        return InvalidModelError.exit_code
    print(f"connected: {_flag(verdict.connected)}")
    if not verdict.connected:
        return InvalidModelError.exit_code
    validate_network(net)

    agent = net.agent
    print(f"vertices: {net.n}")
    print(f"agent: {'single integrator' if net.is_single_integrator else f'order {agent.order}'}")
    print(f"semistable: {_flag(semistability_check(assemble(net).A).semistable)}")
    sync = check_synchronization(net)
    print(f"synchronized: {_flag(sync.synchronized)}")
    try:
        cert = passivity_certificate(agent)
        print(f"passivity: certified ({cert.source})")
    except NetredError as e:
        print(f"passivity: not certified ({e})")
    return 0


def cmd_dissim(args) -> int:
    net = load_model(args.model)
    dissim = dissimilarity_matrix(net)
    clustering, dendrogram = hierarchical_cluster(dissim.D, args.order, args.linkage)
    out = Path(args.output)
    write_csv(out / 'dissimilarity.csv', dissim.to_csv_rows())
    write_json(out / 'dendrogram.json', {**dendrogram.to_dict(), 'linkage': args.linkage, 'method': dissim.method})
    save_partition(clustering, out / 'partition.json')
    print(f"dissimilarity: {out / 'dissimilarity.csv'}")
    for a, b, value in dendrogram.merges:
        print(f"merge {a} {b} at {value:.9g}")
    return 0


def cmd_aep(args) -> int:
    net = load_model(args.model)
    graph = validate_network(net)
    clustering = load_partition(args.partition, net.n)
    try:
        leaders = [int(v) for v in args.leaders.split(',') if v.strip()]
    except ValueError as e:
        raise InvalidModelError(f"Malformed leader list '{args.leaders}'") from e
    h2 = aep_h2_error(graph, clustering, leaders)
    hinf = aep_hinf_error(graph, clustering, leaders)
    print(f"h2_ratio_formula: {_fmt(h2.formula)}")
    print(f"h2_ratio_direct: {_fmt(h2.direct)}")
    print(f"hinf_formula: {_fmt(hinf.formula)}")
    print(f"hinf_direct: {_fmt(hinf.direct)}")
    if args.output:
        write_json(args.output, {'leaders': leaders, 'partition': clustering.to_dict(),
                                 'h2_ratio': vars(h2), 'hinf': vars(hinf)})
    return 0


def cmd_error(args) -> int:
    full = load_model(args.full)
    reduced = load_model(args.reduced)
    if args.norm == 'h2':
        value = network_h2_error(full, reduced)
        reason = "C J B != 0 or unstable error system"
    else:
        value = network_hinf_error(full, reduced)
        reason = "error system is not stable"
    print(_fmt(value) if value is not None else f"undefined: {reason}")
    return 0


def cmd_fixtures(args) -> int:
    for name, path in sorted(write_fixtures(args.output).items()):
        print(f"{name}: {path}")
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    """
    Main execution function.

    Args:
        argv: Argument list (sys.argv[1:] when omitted)

    Returns:
        Process exit code
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.verbose)

    try:
        if args.command == 'check':
            return cmd_check(args)
        if args.command == 'reduce':
            return cmd_reduce(args, args.method)
        if args.command in METHODS:
            return cmd_reduce(args, args.command)
        if args.command == 'dissim':
            return cmd_dissim(args)
        if args.command == 'aep':
            return cmd_aep(args)
        if args.command == 'error':
            return cmd_error(args)
        if args.command == 'fixtures':
            return cmd_fixtures(args)
        raise InvalidModelError(f"Unknown command '{args.command}'")

    except NetredError as e:
        logger.error(f"{type(e).__name__}: {e}")
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code

    except KeyboardInterrupt:
        logger.warning("Interrupted by user")
        return 130

    except Exception as e:
        logger.error(f"Unexpected failure: {str(e)}", exc_info=True)
        return 4


if __name__ == "__main__":
    sys.exit(main())
