"""
End-to-end tests for the strongcat command line.

These tests run the CLI entry point and check:
- Artifacts and exit codes of every subcommand
- Reruns from the echoed configuration
"""
