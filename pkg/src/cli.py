# coding=utf-8

import argparse
import collections
import os
import sys
import time

import jsonpickle
import numpy as np
import pandas as pd

from . import settings
from . import scenario
from . import strategies
from . import verify
from .engine import SettlementPolicy, export_trade_log, sample_index
from .enums import InsurerMode, LiabilityMode, Mechanism
from .errors import InvariantViolationError, ScenarioParseError
from .logger import Logger, LogLevel, log
from .utils import general_utils

EXIT_OK = 0
EXIT_VERIFICATION_FAILED = 1
EXIT_USAGE = 2
EXIT_INVARIANT_VIOLATION = 3

CREATOR = 'creator'


def _write(data_frame, output_dir, file_name):
    # type: (pd.DataFrame, str, str) -> str
    path = os.path.join(output_dir, file_name)
    general_utils.write_data_frame(data_frame, path, settings.CSV_FLOAT_FORMAT)
    log('Wrote {} rows to: {}'.format(len(data_frame), path))
    return path


##############################################
# RUN
##############################################

def _settlement_frame(state, beliefs, seed, draws):
    # type: (MarketState, list, int, int) -> pd.DataFrame

    """
    Samples the selected action from phi and the observed outcome from the
    beliefs once per draw, and settles both mechanisms for every party.
    """
    rows = []

    for draw, draw_seed in enumerate(verify.instance_seeds(seed, draws)):
        uniforms = np.random.default_rng(draw_seed).random(2)
        j = int(sample_index(state.phi, uniforms[0]))
        i = int(sample_index(np.asarray(beliefs[j], dtype=np.float64), uniforms[1]))

        if draw == 0:
            state.selected_action = j

        outcome = state.settle(i, j=j)
        parties = list(outcome.securities_payoffs.keys()) + [CREATOR]

        for party in parties:
            row = collections.OrderedDict()
            row['draw'] = draw
            row['selected_action'] = state.spec.action_names[j]
            row['observed_outcome'] = state.spec.outcome_names[j][i]
            row['party'] = party

            if party == CREATOR:
                row['securities_payoff'] = outcome.creator_securities
                row['scoring_payoff'] = outcome.creator_scoring
            else:
                row['securities_payoff'] = outcome.securities_payoffs[party]
                row['scoring_payoff'] = outcome.scoring_payoffs[party]

            rows.append(row)

    return pd.DataFrame(rows, columns=['draw', 'selected_action', 'observed_outcome', 'party', 'securities_payoff', 'scoring_payoff'])


def _worst_case_frame(state, config, rule):
    # type: (MarketState, scenario.ScenarioConfig, DecisionRule) -> pd.DataFrame

    """
    Worst-case losses of every regular trade: over the phi_1 grid for two
    actions, at the realized decision rule otherwise.
    """
    if config.insurer is None:
        liability_mode = LiabilityMode.PLAIN
    elif config.insurer['mode'] == InsurerMode.COST_MATCHED:
        liability_mode = LiabilityMode.INSURER_COST_MATCHED
    else:
        liability_mode = LiabilityMode.INSURER_MAX_MATCHED

    rows = []

    for trade in state.trade_log:
        if trade.is_insurer:
            continue

        if state.num_actions == 2:
            reports = strategies.worst_case_curve(state.spec, trade, verify.phi_grid(**config.phi_grid), liability_mode=liability_mode)
        else:
            reports = [strategies.worst_case_losses(state.spec, trade, state.phi, liability_mode=liability_mode)]

        for report in reports:
            for report_row in report.to_rows():
                row = collections.OrderedDict([('trade_index', trade.index), ('trader_id', trade.trader_id)])
                row.update(report_row)
                rows.append(row)

    return pd.DataFrame(rows, columns=['trade_index', 'trader_id', 'phi', 'mechanism', 'liability_mode',
                                       'trader_wcl', 'creator_wcl', 'creator_bound'])


def _expected_frame(state, beliefs):
    # type: (MarketState, list) -> pd.DataFrame
    policy = SettlementPolicy.from_decision_rule(state.phi)
    rows = []

    for trader_id in state.regular_traders:
        securities = verify.exact_expected_payoff(state, trader_id, beliefs, Mechanism.SECURITIES, policy=policy)
        scoring = verify.exact_expected_payoff(state, trader_id, beliefs, Mechanism.SCORING)

        row = collections.OrderedDict()
        row['trader_id'] = trader_id
        row['securities_expected'] = securities
        row['scoring_expected'] = scoring
        row['difference'] = securities - scoring
        row['payout_scaling_residual'] = verify.payout_scaling_residual(state, trader_id, beliefs, policy)
        rows.append(row)

    return pd.DataFrame(rows, columns=['trader_id', 'securities_expected', 'scoring_expected', 'difference', 'payout_scaling_residual'])


def _monte_carlo_frame(state, beliefs, replications, seed):
    # type: (MarketState, list, int, int) -> pd.DataFrame
    rows = []

    for trader_id in state.regular_traders:
        for mechanism in (Mechanism.SECURITIES, Mechanism.SCORING):
            mean, stderr = verify.monte_carlo_payoff(state, trader_id, beliefs, mechanism, replications, seed)

            row = collections.OrderedDict()
            row['trader_id'] = trader_id
            row['mechanism'] = mechanism.value
            row['replications'] = replications
            row['mean'] = mean
            row['stderr'] = stderr
            row['exact'] = verify.exact_expected_payoff(state, trader_id, beliefs, mechanism)
            rows.append(row)

    return pd.DataFrame(rows, columns=['trader_id', 'mechanism', 'replications', 'mean', 'stderr', 'exact'])


def run(config_file_path, output_dir, seed=None):
    # type: (str, str, int) -> int

    """
    Runs a scenario file: builds the market, executes the trades, records the
    decision and writes the trade log, settlements, worst-case losses and the
    requested verification outputs to the output directory.
    """
    start_time = time.time()
    config = scenario.load_scenario(config_file_path)
    seed = config.seed if seed is None else seed

    state = scenario.build_market(config)
    export_trade_log(state, os.path.join(output_dir, 'trade_log.csv'))

    rule = scenario.build_decision_rule(config)
    phi = state.fix_decision_rule(rule)
    log('Recorded decision rule {} with phi: {}'.format(rule, np.round(phi, 6).tolist()))

    beliefs = scenario.beliefs_for(state, config)
    _write(_settlement_frame(state, beliefs, seed, config.draws), output_dir, 'settlements.csv')
    _write(_worst_case_frame(state, config, rule), output_dir, 'worst_case.csv')

    if config.exact_expectation:
        _write(_expected_frame(state, beliefs), output_dir, 'expected.csv')

    if config.monte_carlo_replications > 0:
        _write(_monte_carlo_frame(state, beliefs, config.monte_carlo_replications, seed), output_dir, 'monte_carlo.csv')

    if config.reproduce_example:
        verify.write_example_tables(verify.reproduce_example(verify.phi_grid(**config.phi_grid)), output_dir)

    snapshot_path = os.path.join(output_dir, 'scenario_snapshot.json')
    snapshot = {'scenario': config.to_dict(), 'source': config.source, 'seed': seed, 'phi': [float(p) for p in phi]}
    general_utils.create_path_if_not_existing(snapshot_path)

    with open(snapshot_path, 'w') as f:
        f.write(jsonpickle.encode(snapshot, indent=2))

    log('Scenario finished in {:.3f}s'.format(time.time() - start_time), LogLevel.PROFILE)
    return EXIT_OK


##############################################
# VERIFY
##############################################

def _report_failure(result):
    # type: (verify.InstanceResult) -> None
    log('Instance with seed {} failed, residual: {:.12g}, payout scaling term: {:.12g}'
        .format(result.instance.seed, result.residual, result.term_a), LogLevel.WARNING)

    for violation in result.violations:
        log('  {}'.format(violation), LogLevel.WARNING)


def run_verification(seed, instances, unscaled=False, replay_file_path=None, output_dir=None):
    # type: (int, int, bool, str, str) -> int

    """
    Runs the randomized verification suite, or replays a single serialized
    instance. Failing instances are written to the output directory when one
    is given.
    """
    if replay_file_path is not None:
        with open(replay_file_path) as f:
            instance = verify.load_instance(f.read())

        result = verify.check_instance(instance, unscaled=unscaled)

        if not result.ok:
            _report_failure(result)
            return EXIT_VERIFICATION_FAILED

        log('Replayed instance with seed {} passed'.format(instance.seed))
        return EXIT_OK

    if instances < 1:
        raise ValueError('Expected at least one instance, got: {}'.format(instances))

    suite = verify.run_suite(seed, instances, unscaled=unscaled)

    for result in suite.failures:
        _report_failure(result)

        if output_dir is not None:
            path = os.path.join(output_dir, 'failing-instance-{}.json'.format(result.instance.seed))
            general_utils.create_path_if_not_existing(path)

            with open(path, 'w') as f:
                f.write(verify.serialize_instance(result.instance))

            log('Wrote failing instance to: {}'.format(path), LogLevel.WARNING)

    if not suite.ok:
        log('{} of {} instances failed'.format(len(suite.failures), instances), LogLevel.WARNING)
        return EXIT_VERIFICATION_FAILED

    log('All {} instances passed'.format(instances))
    return EXIT_OK


##############################################
# ENTRY POINT
##############################################

def build_argument_parser():
    # type: () -> argparse.ArgumentParser
    ap = argparse.ArgumentParser(prog='python -m src.cli', description='Securities based decision markets.')
    subparsers = ap.add_subparsers(dest='command')
    subparsers.required = True

    run_parser = subparsers.add_parser('run', help='Run a scenario file')
    run_parser.add_argument('config', type=str, help='Path to the scenario JSON file')
    run_parser.add_argument('-o', '--out', required=True, type=str, help='Output directory for the CSV files')
    run_parser.add_argument('-s', '--seed', required=False, type=int, help='Overrides the settlement seed of the scenario')
    run_parser.add_argument('--maxjobs', required=False, type=int, help='Maximum number of parallel jobs (threads)')

    verify_parser = subparsers.add_parser('verify', help='Run the randomized verification suite')
    verify_parser.add_argument('-s', '--seed', required=True, type=int, help='Master seed of the suite')
    verify_parser.add_argument('-n', '--instances', required=True, type=int, help='Number of randomized instances')
    verify_parser.add_argument('-o', '--out', required=False, type=str, help='Directory for failing instances and the log')
    verify_parser.add_argument('--replay', required=False, type=str, help='Replay a serialized failing instance')
    verify_parser.add_argument('--maxjobs', required=False, type=int, help='Maximum number of parallel jobs (threads)')
    verify_parser.add_argument('--unscaled-payouts', action='store_true', help=argparse.SUPPRESS)

    return ap


def main(argv=None):
    # type: (list) -> int
    ap = build_argument_parser()

    try:
        args = vars(ap.parse_args(argv))
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE

    try:
        level = settings.apply_log_level_from_environment()
    except ValueError as e:
        sys.stderr.write('{}\n'.format(e))
        return EXIT_USAGE

    output_dir = args.get('out')
    log_file_path = os.path.join(output_dir, 'log.txt') if output_dir else None
    logger = Logger(log_file_path=log_file_path, use_timestamp=True, log_to_stdout_default=level != 'warning')

    if args['maxjobs']:
        log('Setting maximum number of parallel jobs to: {}'.format(args['maxjobs']))
        settings.MAX_NUMBER_OF_JOBS = args['maxjobs']

    try:
        if args['command'] == 'run':
            return run(args['config'], output_dir, seed=args['seed'])

        return run_verification(args['seed'], args['instances'], unscaled=args['unscaled_payouts'],
                                replay_file_path=args['replay'], output_dir=output_dir)
    except ScenarioParseError as e:
        logger.log('Could not parse scenario: {}'.format(e), LogLevel.WARNING)
        sys.stderr.write('error: {}\n'.format(e))
        return EXIT_USAGE
    except InvariantViolationError as e:
        logger.log('Invariant violated ({}): {}'.format(e.invariant, e), LogLevel.WARNING)
        sys.stderr.write('error: invariant violated ({}): {}\n'.format(e.invariant, e))
        return EXIT_INVARIANT_VIOLATION
    except (IOError, ValueError) as e:
        logger.log('{}'.format(e), LogLevel.WARNING)
        sys.stderr.write('error: {}\n'.format(e))
        return EXIT_USAGE
    finally:
        Logger.reset()


if __name__ == '__main__':
    sys.exit(main())
