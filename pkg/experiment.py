#!/usr/bin/python3
import argparse
import json
import os
import sys

import yaml

from spacetime.error_codes import ErrorCodes, SpacetimeError, exit_code
from spacetime.experiment_runner import ExperimentRunner, ExperimentSpec, load_spec
from spacetime.logger_formatter import logging_setup

# Logger name in the main script
PARENT_LOGGER_NAME: str = os.path.basename(str(__file__).lower().replace(".py", ""))

# Command line flags copied into the ExperimentSpec parameters
PARAMETER_FLAGS = ("family", "rank", "m", "n", "depth", "forward_depth", "k", "epsilon", "chain", "variant", "mode",
                   "steps", "record_every", "samples", "states", "index", "tau", "permutation", "gates", "sweep",
                   "seed", "cap", "niceness_seeds")


def int_list(text: str) -> list:
    return [int(v) for v in text.split(",") if v.strip()]


def parse_args() -> argparse.Namespace:
    """ Parse the args and return an args namespace """
    parser = argparse.ArgumentParser(description='Spacetime circuit-to-Hamiltonian experiments')
    parser.add_argument('command', metavar='COMMAND', type=str,
                        help='count, enumerate, rank, unrank, sample, tile, mcmc, gap, decompose-bound, hamiltonian, '
                             'detect, route, uniformize, embed, weighted-fk, or run to execute a spec file')
    parser.add_argument('-c', '--config', metavar='PATH_YAML_FILE', type=str, default="experiment_parameters.yaml",
                        help='Path to an YAML FILE that contains the global parameters. '
                             'Default is ./experiment_parameters.yaml')
    parser.add_argument('--spec', metavar='PATH_YAML_FILE', type=str, help='ExperimentSpec file used by run')
    parser.add_argument('--out', type=str, help='Output directory, overrides output_dir')
    parser.add_argument('--format', type=str, choices=["json", "csv"], default="json", help='Result file format')
    parser.add_argument('--seed', type=int, help='Seed of every random choice')
    parser.add_argument('--cap', type=int, help='Maximal number of enumerated states')
    parser.add_argument('--family', type=str, help='bitonic, product, circular, first-layer-incomplete, qubit-at-zero')
    parser.add_argument('--circular', default=False, action="store_true", help='Same as --family circular')
    parser.add_argument('--rank', type=int, help='Rank ell of the bitonic blocks')
    parser.add_argument('--m', type=int, help='Number of blocks')
    parser.add_argument('--n', type=int, help='Number of wires')
    parser.add_argument('--depth', type=int, help='Circuit depth')
    parser.add_argument('--forward-depth', dest="forward_depth", type=int, help='Depth before the circular closure')
    parser.add_argument('--k', type=int, help='Number of logical inputs')
    parser.add_argument('--epsilon', type=float, help='Weight left on the intermediate clock times')
    parser.add_argument('--chain', type=str, help='toggle, edge-flip, laplacian or hamiltonian')
    parser.add_argument('--variant', type=str, help='lazy or resample edge-flip chain')
    parser.add_argument('--mode', type=str, help='linear or circular qubit-at-zero count')
    parser.add_argument('--steps', type=int, help='Number of MCMC steps')
    parser.add_argument('--record-every', dest="record_every", type=int, help='Period of the MCMC rows')
    parser.add_argument('--samples', type=int, help='Number of samples')
    parser.add_argument('--states', type=int, help='Number of random input states')
    parser.add_argument('--niceness-seeds', dest="niceness_seeds", type=int,
                        help='Number of seeded random circuits whose niceness rate uniformize reports')
    parser.add_argument('--index', type=str, help='Rank index as a decimal string')
    parser.add_argument('--tau', type=int_list, help='Configuration as comma separated times')
    parser.add_argument('--permutation', type=int_list, help='Permutation images as comma separated wires')
    parser.add_argument('--gates', type=str, help='identity or clifford, a comma separated list for weighted-fk')
    parser.add_argument('--sweep', type=int_list, help='Gate counts of the weighted-fk sweep')
    args, remaining_argv = parser.parse_known_args()
    if remaining_argv:
        parser.error(f"unrecognized arguments: {' '.join(remaining_argv)}")
    return args


def spec_from_args(args: argparse.Namespace) -> ExperimentSpec:
    """ Build the ExperimentSpec of the command line, or read it from --spec; flags override the file """
    if args.command == "run":
        if args.spec is None:
            raise SpacetimeError(ErrorCodes.INVALID_PARAMETERS, "run needs --spec")
        spec = load_spec(args.spec)
    else:
        spec = ExperimentSpec(command=args.command, parameters=dict())
    parameters = dict(spec.parameters)
    for name in PARAMETER_FLAGS:
        value = getattr(args, name)
        if value is not None:
            parameters[name] = value
    if args.circular:
        parameters["family"] = "circular"
    if isinstance(parameters.get("gates"), str) and "," in parameters["gates"]:
        parameters["gates"] = parameters["gates"].split(",")
    return ExperimentSpec(command=spec.command, parameters=parameters,
                          output=args.out if args.out else spec.output)


def main():
    """ Main function """
    # The First thing is to guarantee that python >=3.10 is running
    if sys.version_info.major < 3 or sys.version_info.minor < 10:
        raise ValueError("Python 3.10 or greater required")

    args = parse_args()
    # load yaml file
    with open(args.config, 'r') as fp:
        experiment_parameters = yaml.load(fp, Loader=yaml.SafeLoader)

    logger = logging_setup(logger_name=PARENT_LOGGER_NAME, log_file=experiment_parameters['log_file'])
    logger.info(f"Python version: {sys.version_info.major}.{sys.version_info.minor} command:{args.command}")

    try:
        spec = spec_from_args(args)
        runner = ExperimentRunner(parameters=experiment_parameters, logger_name=PARENT_LOGGER_NAME)
        result = runner.run(spec, output_format=args.format)
        print(json.dumps(result, indent=2))
    except SpacetimeError as err:
        logger.error(f"{err}")
        sys.exit(exit_code(err))
    except Exception as err:
        logger.exception(f"General exception:{err}")
        # Unknown exit
        sys.exit(-1)


if __name__ == '__main__':
    main()
