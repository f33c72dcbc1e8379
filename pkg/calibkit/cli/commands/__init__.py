"""
Subcommands of the calibkit command line interface
Each module exposes add_parser(subparsers) and run(args)
"""
