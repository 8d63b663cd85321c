"""
Subcommand experiments, report writers and the command line.
"""
