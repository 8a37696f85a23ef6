"""
latentroute - Punto de entrada del CLI
Subcomandos: generate, train, build-graph, simulate, verify
"""

import argparse
import logging
import sys
from typing import List, Optional

from latentroute import __version__
from latentroute.commands import build_graph, generate, simulate, train, verify
from latentroute.config import Settings, load_settings, parse_assignments
from latentroute.errors import LatentRouteError


logger = logging.getLogger("latentroute")

COMMANDS = (generate, train, build_graph, simulate, verify)

# Opciones globales -> campo de Settings
GLOBAL_OVERRIDES = {
    "output": "OUTPUT_DIR",
    "seed": "SEED",
    "log_level": "LOG_LEVEL",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="latentroute",
        description="Evasión de obstáculos dinámicos sobre un manifold latente 2D",
    )
    parser.add_argument("--version", action="version", version=f"latentroute {__version__}")
    parser.add_argument("--config", help="Archivo de configuración clave=valor (formato .env)")
    parser.add_argument("--output", help="Directorio de salida (OUTPUT_DIR)")
    parser.add_argument("--seed", type=int, help="Semilla global (SEED)")
    parser.add_argument("--log-level", dest="log_level", help="Nivel de log (LOG_LEVEL)")
    parser.add_argument("--set", action="append", metavar="CLAVE=VALOR", help="Override de cualquier campo de Settings")

    # ===== INCLUIR COMANDOS =====
    subparsers = parser.add_subparsers(dest="command_name", metavar="COMANDO", required=True)
    for module in COMMANDS:
        module.register(subparsers).set_defaults(command=module)
    return parser


def collect_overrides(args: argparse.Namespace) -> dict:
    """--set < opciones del comando < opciones globales"""
    overrides = parse_assignments(args.set)
    for mapping in (args.command.OVERRIDES, GLOBAL_OVERRIDES):
        for option, field in mapping.items():
            value = getattr(args, option, None)
            if value is not None:
                overrides[field] = value
    return overrides


def configure_logging(level: str) -> None:
    logging.basicConfig(
        level=getattr(logging, level),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )


def print_banner(settings: Settings, command: str) -> None:
    print("\n" + "=" * 50)
    print(f"{settings.PROJECT_NAME} {__version__} - {command}")
    print(f"Salida: {settings.OUTPUT_DIR}")
    print(f"Config hash: {settings.config_hash()[:16]}")
    print("=" * 50 + "\n")


def run(argv: Optional[List[str]] = None) -> int:
    """
    Ejecuta el CLI y retorna el código de salida:
    0 éxito, 2 configuración, 3 entradas, 4 planificación, 5 verificación, 1 error interno.
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    try:
        settings = load_settings(args.config, collect_overrides(args))
        configure_logging(settings.LOG_LEVEL)
        print_banner(settings, args.command_name)
        return args.command.run(args, settings)
    except LatentRouteError as e:
        print(f"error {e}", file=sys.stderr)
        return e.exit_code
    except KeyboardInterrupt:
        print("\nInterrumpido", file=sys.stderr)
        return 130
    except Exception as e:
        logger.exception("error interno")
        print(f"error [internal] {type(e).__name__}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(run())
