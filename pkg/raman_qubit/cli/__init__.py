"""Run specifications and command handlers behind the console script."""
