"""Property files: a header of ``// key: value`` lines followed by Datalog rules.

    // id: P1
    // grants: authorization_code, implicit
    // endpoint-query: .* -> AuthRequest -> .*
    // mode: presence
    P1 :- OAuthTag(L1, auth_req), ...
"""

from __future__ import annotations

import re
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional, Union

from ..datalog import DatalogError, parse_program
from .graph import PropertySignature, SignatureError, signature_from_rules

_HEADER = re.compile(r"^\s*//\s*([A-Za-z-]+)\s*:\s*(.*?)\s*$")
HEADER_KEYS = {"id", "grants", "endpoint-query", "mode", "description"}


def parse_property(text: str, origin: str = "<property>") -> PropertySignature:
    header: dict[str, str] = {}
    for line in text.splitlines():
        if not line.strip():
            continue
        m = _HEADER.match(line)
        if not m:
            if line.strip().startswith("//"):
                continue
            break
        key = m.group(1).lower()
        if key in HEADER_KEYS:
            header[key] = m.group(2)
    pid = header.get("id")
    if not pid:
        raise SignatureError(f"{origin}: missing '// id:' header")
    try:
        facts, rules = parse_program(text)
    except DatalogError as exc:
        raise SignatureError(f"{origin}: {exc}") from None
    if facts:
        raise SignatureError(f"{origin}: property files may not contain facts")
    grants = tuple(g.strip() for g in header.get("grants", "").split(",") if g.strip())
    return signature_from_rules(
        pid,
        rules,
        grants=grants,
        endpoint_query=header.get("endpoint-query") or None,
        mode=header.get("mode", "presence"),
        description=header.get("description", ""),
        source=text,
    )


def load_property(path: Union[str, Path]) -> PropertySignature:
    path = Path(path)
    return parse_property(path.read_text(encoding="utf-8"), str(path))


def _id_key(pid: str) -> tuple:
    m = re.match(r"^([A-Za-z]*)(\d+)$", pid)
    return (m.group(1), int(m.group(2)), "") if m else (pid, 0, pid)


def bundled_property_texts() -> dict[str, str]:
    root = resources.files("authflaw").joinpath("properties")
    out = {}
    for entry in root.iterdir():
        if entry.name.endswith(".dl"):
            out[entry.name] = entry.read_text(encoding="utf-8")
    return out


def load_properties(directory: Optional[Union[str, Path]] = None) -> list[PropertySignature]:
    """Load every ``*.dl`` file; the bundled set when ``directory`` is None."""
    if directory is None:
        sigs = [parse_property(text, name) for name, text in bundled_property_texts().items()]
    else:
        sigs = [load_property(p) for p in sorted(Path(directory).glob("*.dl"))]
    ids = [s.id for s in sigs]
    dupes = sorted({i for i in ids if ids.count(i) > 1})
    if dupes:
        raise SignatureError(f"duplicate property id(s): {', '.join(dupes)}")
    return sorted(sigs, key=lambda s: _id_key(s.id))


def select_properties(sigs: Iterable[PropertySignature], selection: Optional[str]) -> list[PropertySignature]:
    """``selection`` is ``all``/None or a comma-separated id list."""
    sigs = list(sigs)
    if not selection or selection.strip().lower() == "all":
        return sigs
    wanted = [s.strip() for s in selection.split(",") if s.strip()]
    by_id = {s.id: s for s in sigs}
    missing = [w for w in wanted if w not in by_id]
    if missing:
        raise SignatureError(f"unknown property id(s): {', '.join(missing)}")
    return sorted((by_id[w] for w in dict.fromkeys(wanted)), key=lambda s: _id_key(s.id))
