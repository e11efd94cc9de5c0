"""Hand-rolled lexer. Tokens carry line/column for diagnostics."""

from __future__ import annotations

from dataclasses import dataclass

from kinduct.errors import LoopcSyntaxError

KEYWORDS = {
    "bool", "u8", "i8", "u16", "i16", "u32", "i32", "fx", "void",
    "if", "else", "for", "while", "switch", "case", "default", "break",
    "return", "const", "true", "false", "assert", "assume", "error",
}

# longest first so compound operators win; => only appears in property files
PUNCT = [
    "<<", ">>", "<=", ">=", "==", "!=", "&&", "||", "=>",
    "(", ")", "{", "}", "[", "]", ";", ",", ":", "?",
    "+", "-", "*", "/", "%", "&", "|", "^", "~", "!", "<", ">", "=", ".",
]


@dataclass(frozen=True)
class Token:
    kind: str  # 'ident', 'int', 'fx', 'punct', 'kw', 'eof'
    text: str
    line: int
    col: int

    def __repr__(self) -> str:
        return f"{self.kind}({self.text!r}@{self.line}:{self.col})"


def tokenize(source: str) -> list[Token]:
    toks: list[Token] = []
    i = 0
    line = 1
    col = 1
    n = len(source)

    def err(msg: str) -> LoopcSyntaxError:
        return LoopcSyntaxError(msg, line, col)

    while i < n:
        c = source[i]
        if c == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if source.startswith("//", i):
            j = source.find("\n", i)
            i = n if j < 0 else j
            continue
        if source.startswith("/*", i):
            j = source.find("*/", i + 2)
            if j < 0:
                raise err("unterminated block comment")
            skipped = source[i : j + 2]
            nl = skipped.count("\n")
            if nl:
                line += nl
                col = len(skipped) - skipped.rfind("\n")
            else:
                col += len(skipped)
            i = j + 2
            continue
        if c.isdigit():
            start = i
            start_col = col
            if source.startswith(("0x", "0X"), i):
                i += 2
                while i < n and source[i] in "0123456789abcdefABCDEF":
                    i += 1
                if i == start + 2:
                    raise err("malformed hex literal")
                text = source[start:i]
                col += len(text)
                toks.append(Token("int", text, line, start_col))
                continue
            while i < n and source[i].isdigit():
                i += 1
            if i < n and source[i] == "." and i + 1 < n and source[i + 1].isdigit():
                i += 1
                while i < n and source[i].isdigit():
                    i += 1
                text = source[start:i]
                col += len(text)
                toks.append(Token("fx", text, line, start_col))
                continue
            text = source[start:i]
            col += len(text)
            toks.append(Token("int", text, line, start_col))
            continue
        if c.isalpha() or c == "_":
            start = i
            start_col = col
            while i < n and (source[i].isalnum() or source[i] == "_"):
                i += 1
            text = source[start:i]
            col += len(text)
            kind = "kw" if text in KEYWORDS else "ident"
            toks.append(Token(kind, text, line, start_col))
            continue
        for p in PUNCT:
            if source.startswith(p, i):
                toks.append(Token("punct", p, line, col))
                i += len(p)
                col += len(p)
                break
        else:
            raise err(f"unexpected character {c!r}")
    toks.append(Token("eof", "", line, col))
    return toks
