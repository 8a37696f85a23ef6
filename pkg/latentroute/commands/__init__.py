"""Subcomandos del CLI: cada módulo expone register(subparsers), OVERRIDES y run(args, settings)"""
