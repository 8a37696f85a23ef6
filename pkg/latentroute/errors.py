"""
latentroute - Errores
Jerarquía única de excepciones. Cada clase lleva su código de salida
y su categoría para que el CLI pueda reportarla sin adivinar.
"""

from typing import Optional, Sequence


class LatentRouteError(Exception):
    """Raíz de todos los errores del proyecto"""

    exit_code: int = 1
    category: str = "internal"

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message

    def __str__(self) -> str:
        return f"[{self.category}] {self.message}"


# =====================================================
# CONFIGURACIÓN (exit 2)
# =====================================================

class ConfigError(LatentRouteError):
    """Archivo de configuración ilegible o valores fuera de rango"""

    exit_code = 2
    category = "config"


# =====================================================
# ENTRADAS Y ARTEFACTOS (exit 3)
# =====================================================

class InputError(LatentRouteError):
    """Artefacto faltante, ilegible o inválido"""

    exit_code = 3
    category = "input"


class ParseError(InputError):
    """Error de sintaxis en un archivo de texto (robot, escenario)"""

    category = "parse"

    def __init__(
        self,
        message: str,
        source: str = "<texto>",
        line: int = 0,
        column: int = 0,
        token: Optional[str] = None,
    ):
        self.source = source
        self.line = line
        self.column = column
        self.token = token
        location = f"{source}:{line}:{column}"
        if token is not None:
            message = f"{message} (token '{token}')"
        super().__init__(f"{location}: {message}")


class CorruptArtifactError(InputError):
    """El archivo existe pero su contenido está truncado o dañado"""

    category = "corrupt"


class ArchitectureMismatchError(InputError):
    """El modelo guardado no coincide con la arquitectura esperada"""

    category = "architecture"


class LineageMismatchError(InputError):
    """Los artefactos provienen de corridas distintas (digest/versión)"""

    category = "lineage"


class DomainError(InputError, ValueError):
    """Argumento fuera del dominio de una operación"""

    category = "domain"


class JointLimitError(DomainError):
    """Una articulación está fuera de su intervalo de límites"""

    def __init__(self, joint_index: int, value: float, lower: float, upper: float):
        self.joint_index = joint_index
        self.value = value
        super().__init__(
            f"articulación {joint_index} = {value:.6f} fuera de [{lower:.6f}, {upper:.6f}]"
        )


class UnknownNodeError(DomainError, KeyError):
    """Índice de nodo que no existe en el roadmap"""

    def __init__(self, node: int, size: int):
        self.node = node
        super().__init__(f"nodo {node} no existe (roadmap con {size} nodos)")

    def __str__(self) -> str:
        return LatentRouteError.__str__(self)


# =====================================================
# NUMÉRICOS
# =====================================================

class ConvergenceError(LatentRouteError, ArithmeticError):
    """GJK no convergió dentro del límite de iteraciones"""

    category = "numeric"

    def __init__(self, message: str, simplex: Sequence[Sequence[float]] = ()):
        self.simplex = [list(map(float, point)) for point in simplex]
        super().__init__(message)


class TrainingError(LatentRouteError):
    """La pérdida dejó de ser finita durante el entrenamiento"""

    category = "training"

    def __init__(self, epoch: int, message: str = "pérdida no finita"):
        self.epoch = epoch
        super().__init__(f"época {epoch}: {message}")


# =====================================================
# PLANIFICACIÓN Y VERIFICACIÓN
# =====================================================

class PlanningFailure(LatentRouteError):
    """La simulación terminó en estado failed (trapped, timeout, unreachable)"""

    exit_code = 4
    category = "planning"

    def __init__(self, reason: str, scenario_id: str = ""):
        self.reason = reason
        self.scenario_id = scenario_id
        super().__init__(f"escenario '{scenario_id}' terminó en failed({reason})")


class VerificationMismatch(LatentRouteError):
    """La repetición independiente de la traza no coincide con lo registrado"""

    exit_code = 5
    category = "verification"

    def __init__(self, ticks: Sequence[int], message: str = ""):
        self.ticks = list(ticks)
        shown = ", ".join(str(t) for t in self.ticks[:10])
        more = "" if len(self.ticks) <= 10 else f" (+{len(self.ticks) - 10})"
        super().__init__(message or f"discrepancias en ticks: {shown}{more}")
