"""
Lector de archivos de texto por secciones (robot y escenarios).

Gramática común:
    archivo   := (línea NL)*
    línea     := vacía | comentario | encabezado | asignación | fila
    encabezado:= '[' nombre (espacio argumento)? ']'
    asignación:= clave '=' valor
    fila      := token (espacio token)*
Los comentarios empiezan con '#'.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

from latentroute.errors import ParseError


@dataclass
class Token:
    text: str
    line: int
    column: int


@dataclass
class Entry:
    """Una asignación (clave = valor) o una fila de tabla"""
    line: int
    tokens: List[Token]
    key: Optional[str] = None

    @property
    def is_assignment(self) -> bool:
        return self.key is not None


@dataclass
class Section:
    name: str
    argument: Optional[str]
    line: int
    entries: List[Entry] = field(default_factory=list)

    def assignments(self, source: str) -> Dict[str, Entry]:
        """Asignaciones de la sección; claves repetidas son error"""
        result: Dict[str, Entry] = {}
        for entry in self.entries:
            if not entry.is_assignment:
                continue
            if entry.key in result:
                raise ParseError("clave repetida", source, entry.line, 1, entry.key)
            result[entry.key] = entry
        return result

    def rows(self) -> List[Entry]:
        return [e for e in self.entries if not e.is_assignment]


def _split_tokens(text: str, line_no: int, offset: int) -> List[Token]:
    tokens = []
    i = 0
    while i < len(text):
        if text[i].isspace():
            i += 1
            continue
        start = i
        while i < len(text) and not text[i].isspace():
            i += 1
        tokens.append(Token(text[start:i], line_no, offset + start + 1))
    return tokens


def parse_sections(text: str, source: str = "<texto>") -> List[Section]:
    """
    Divide el texto en secciones. Las líneas antes del primer encabezado
    quedan en una sección con nombre vacío.
    """
    sections = [Section(name="", argument=None, line=0)]
    for line_no, raw in enumerate(text.splitlines(), start=1):
        content = raw.split("#", 1)[0].rstrip()
        stripped = content.strip()
        if not stripped:
            continue
        indent = len(content) - len(content.lstrip())

        if stripped.startswith("["):
            if not stripped.endswith("]"):
                raise ParseError("encabezado sin ']'", source, line_no, indent + 1, stripped)
            inner = stripped[1:-1].split()
            if not inner:
                raise ParseError("encabezado vacío", source, line_no, indent + 1, stripped)
            argument = " ".join(inner[1:]) or None
            sections.append(Section(name=inner[0], argument=argument, line=line_no))
            continue

        if "=" in stripped:
            key, _, value = content.partition("=")
            key = key.strip()
            if not key or len(key.split()) != 1:
                raise ParseError("clave inválida", source, line_no, indent + 1, key or "=")
            value_offset = len(content) - len(content.partition("=")[2])
            tokens = _split_tokens(value, line_no, value_offset)
            sections[-1].entries.append(Entry(line=line_no, tokens=tokens, key=key))
        else:
            sections[-1].entries.append(Entry(line=line_no, tokens=_split_tokens(content, line_no, 0)))
    return sections


# =====================================================
# CONVERSIONES CON UBICACIÓN
# =====================================================

def to_float(token: Token, source: str) -> float:
    try:
        value = float(token.text)
    except ValueError:
        raise ParseError("se esperaba un número", source, token.line, token.column, token.text)
    if value != value or value in (float("inf"), float("-inf")):
        raise ParseError("número no finito", source, token.line, token.column, token.text)
    return value


def to_int(token: Token, source: str) -> int:
    try:
        return int(token.text)
    except ValueError:
        raise ParseError("se esperaba un entero", source, token.line, token.column, token.text)


def floats(tokens: Sequence[Token], count: int, source: str, line: int) -> List[float]:
    if len(tokens) != count:
        column = tokens[min(len(tokens), count) - 1].column if tokens else 1
        raise ParseError(f"se esperaban {count} valores, hay {len(tokens)}", source, line, column)
    return [to_float(t, source) for t in tokens]


def single(entry: Entry, source: str) -> Token:
    if len(entry.tokens) != 1:
        column = entry.tokens[1].column if len(entry.tokens) > 1 else 1
        raise ParseError(f"'{entry.key}' espera un único valor", source, entry.line, column)
    return entry.tokens[0]


def text_value(entry: Entry) -> str:
    return " ".join(t.text for t in entry.tokens)


def format_float(value: float) -> str:
    """Representación más corta que reconstruye exactamente el float"""
    return repr(float(value))


def format_row(values: Sequence[float]) -> str:
    return " ".join(format_float(v) for v in values)


def unknown_key(entry: Entry, source: str) -> ParseError:
    return ParseError("clave desconocida", source, entry.line, 1, entry.key)
