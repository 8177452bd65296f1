"""
Experiment harness: config loading, trial orchestration, bound verification,
reports and the command-line interface.
"""
