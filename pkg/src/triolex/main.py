# Copyright 2025 Lucas Zampieri
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import argparse
import logging
import sys
from triolex import __version__
from triolex.utils.config import load_config, get_indent
from triolex.utils.errors import SchemaError, TriolexError
from triolex.utils.serialize import dumps
from triolex.utils.workspace import (
    ANALYZE_COMMANDS, EXIT_INVALID, EXIT_SCHEMA, cmd_analyze, cmd_validate
)

logger = logging.getLogger('triolex')


def setup_logging(debug=False):
    """Route diagnostics to stderr; stdout carries JSON reports only"""
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter('[%(levelname)s] %(message)s'))
    logger.addHandler(handler)
    logger.setLevel(logging.DEBUG if debug else logging.WARNING)
    logger.propagate = False


def build_parser():
    parser = argparse.ArgumentParser(description='Exact calculus on triole algebras over QQ[x1..xn]')
    parser.add_argument('--version', action='version', version=f'triolex {__version__}')
    parser.add_argument('--debug', action='store_true', help='Show debug messages')

    output = argparse.ArgumentParser(add_help=False)
    output.add_argument('--pretty', action='store_true', help='Indent the JSON report')

    sub = parser.add_subparsers(dest='command', required=True)
    validate = sub.add_parser('validate', parents=[output], help='Validate every object in a workspace file')
    validate.add_argument('file', help='Workspace JSON file')

    analyze = sub.add_parser('analyze', parents=[output], help='Run one analysis on a named object')
    analyze.add_argument('file', help='Workspace JSON file')
    analyze.add_argument('--cmd', required=True, choices=ANALYZE_COMMANDS, help='Analysis to run')
    analyze.add_argument('--target', required=True,
                         help='Object name; "X,Y" for bracket, "op@connection" to pick an Atiyah splitting')
    analyze.add_argument('--dmax', type=int, help='Degree bound for h0 (default from config)')
    return parser


def main():
    parser = build_parser()
    args = parser.parse_args()
    setup_logging(args.debug)

    if getattr(args, 'dmax', None) is not None and args.dmax < 0:
        parser.error('--dmax must be non-negative')

    config = load_config()
    indent = get_indent(config)

    try:
        if args.command == 'validate':
            code, report = cmd_validate(args.file, config)
        else:
            code, report = cmd_analyze(args.file, args.cmd, args.target, args.dmax, config)
    except SchemaError as e:
        logger.error(str(e))
        print(dumps({'valid': False, 'witness': None, 'message': str(e)}, args.pretty, indent))
        sys.exit(EXIT_SCHEMA)
    except TriolexError as e:
        logger.error(str(e))
        print(dumps({'valid': False, 'witness': None, 'message': str(e)}, args.pretty, indent))
        sys.exit(EXIT_INVALID)

    print(dumps(report, args.pretty, indent))
    sys.exit(code)


if __name__ == '__main__':
    main()
