"""Regular expressions accepted by query filters.

The accepted dialect is a conservative subset with one meaning everywhere:

- literal characters and escaped metacharacters (``\\.``, ``\\(`` ...)
- ``.``, which matches any single character except line feed (U+000A);
  carriage return and U+2028 are ordinary characters
- the classes ``\\d \\w \\s \\D \\W \\S`` (ASCII) and bracket classes
  ``[a-z]``, ``[^0-9_]``; ``[``, ``]`` and the doubled operators ``--``,
  ``&&``, ``~~`` and ``||`` must be escaped inside a class
- groups ``(...)`` and ``(?:...)``, alternation ``|``
- repetition ``*``, ``+``, ``?``, ``{m}``, ``{m,}``, ``{m,n}``
- anchors ``^`` (start of text) and ``$`` (end of text, never before a
  trailing line feed)

Flag ``i`` makes matching case-insensitive for ASCII letters. Everything
else (back-references, look-around, inline flags, named groups) is rejected.
"""

import re

from ..errors import MalformedQuery

_CLASS_ESCAPES = set("dwsDWS")
_META = set("\\.^$|?*+()[]{}-/&~")
_SET_OPERATORS = ("--", "&&", "~~", "||")
_QUANTIFIER = re.compile(r"\{(\d+)(,(\d*))?\}")
_FLAGS = {"i": re.IGNORECASE}
_REWRITES = {".": "[^\\n]", "$": "\\Z"}


def _check_class(pattern: str, start: int) -> int:
    """Validate a bracket class starting at ``start``; return the index after it."""
    i = start + 1
    if pattern[i : i + 1] == "^":
        i += 1
    first = True
    while i < len(pattern):
        c = pattern[i]
        if c == "]":
            if first:
                raise MalformedQuery(f"empty or ']'-leading class in regex {pattern!r}")
            return i + 1
        if c == "\\":
            nxt = pattern[i + 1 : i + 2]
            if nxt not in _CLASS_ESCAPES and nxt not in _META:
                raise MalformedQuery(f"unsupported escape \\{nxt} in regex {pattern!r}")
            i += 2
        elif c == "[":
            raise MalformedQuery(f"nested '[' in regex class: {pattern!r}")
        elif pattern[i : i + 2] in _SET_OPERATORS:
            raise MalformedQuery(f"unescaped {pattern[i : i + 2]!r} in regex class: {pattern!r}")
        else:
            i += 1
        first = False
    raise MalformedQuery(f"unterminated class in regex {pattern!r}")


def validate_regex(pattern: str) -> None:
    """Raise MalformedQuery unless ``pattern`` is in the accepted dialect."""
    depth = 0
    can_repeat = False
    i = 0
    while i < len(pattern):
        c = pattern[i]
        if c == "\\":
            nxt = pattern[i + 1 : i + 2]
            if nxt not in _CLASS_ESCAPES and nxt not in _META:
                raise MalformedQuery(f"unsupported escape \\{nxt} in regex {pattern!r}")
            i += 2
            can_repeat = True
        elif c == "[":
            i = _check_class(pattern, i)
            can_repeat = True
        elif c == "(":
            if pattern.startswith("(?:", i):
                i += 3
            elif pattern[i + 1 : i + 2] == "?":
                raise MalformedQuery(f"unsupported group syntax in regex {pattern!r}")
            else:
                i += 1
            depth += 1
            can_repeat = False
        elif c == ")":
            depth -= 1
            if depth < 0:
                raise MalformedQuery(f"unbalanced ')' in regex {pattern!r}")
            i += 1
            can_repeat = True
        elif c in "*+?" or c == "{":
            if not can_repeat:
                raise MalformedQuery(f"nothing to repeat at position {i} in regex {pattern!r}")
            if c == "{":
                match = _QUANTIFIER.match(pattern, i)
                if not match:
                    raise MalformedQuery(f"invalid repetition at position {i} in regex {pattern!r}")
                low, high = int(match.group(1)), match.group(3)
                if high and int(high) < low:
                    raise MalformedQuery(f"invalid repetition range in regex {pattern!r}")
                i = match.end()
            else:
                i += 1
            can_repeat = False
        elif c in "|^$":
            i += 1
            can_repeat = False
        elif c in "]}":
            raise MalformedQuery(f"unescaped {c!r} in regex {pattern!r}")
        else:
            i += 1
            can_repeat = True
    if depth:
        raise MalformedQuery(f"unbalanced '(' in regex {pattern!r}")


def translate_regex(pattern: str) -> str:
    """Rewrite a validated pattern so ``re`` gives it the dialect's meaning.

    ``.`` becomes ``[^\\n]`` and ``$`` becomes ``\\Z``; escapes and bracket
    classes are copied unchanged.
    """
    out = []
    i = 0
    while i < len(pattern):
        c = pattern[i]
        if c == "\\":
            out.append(pattern[i : i + 2])
            i += 2
        elif c == "[":
            end = _check_class(pattern, i)
            out.append(pattern[i:end])
            i = end
        else:
            out.append(_REWRITES.get(c, c))
            i += 1
    return "".join(out)


def compile_regex(pattern: str, flags: str = "") -> re.Pattern:
    """Validate and compile a filter regex.

    Raises:
        MalformedQuery: If the pattern or a flag is outside the accepted dialect.
    """
    validate_regex(pattern)
    re_flags = re.ASCII
    for flag in flags:
        if flag not in _FLAGS:
            raise MalformedQuery(f"unsupported regex flag {flag!r}")
        re_flags |= _FLAGS[flag]
    try:
        return re.compile(translate_regex(pattern), re_flags)
    except re.error as err:
        raise MalformedQuery(f"invalid regex {pattern!r}: {err}") from err
