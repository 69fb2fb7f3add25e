"""OAuth tag configuration and tag computation."""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Optional, Union

import yaml

from ..datalog import FactDB, evaluate, parse_rules
from ..osl.ir import IRProgram
from .graph import SDG

# Value tags follow data flow; structural tags mark one statement.
VALUE_TAGS = frozenset(
    {
        "req_URI",
        "client_URI",
        "client_redirect_uri",
        "stored_redirect_uri",
        "req_client_id",
        "stored_client_id",
        "code",
        "access_token",
        "client_cert",
        "code_verifier",
        "code_challenge",
        "code_challenge_method",
        "stored_code_challenge",
        "state",
    }
)
STRUCTURAL_TAGS = frozenset(
    {
        "auth_req",
        "token_req",
        "redirect",
        "error",
        "db_read",
        "db_delete",
        "db_store",
        "gen_token",
        "gen_code",
        "sha256",
        "b64_encode",
        "b64_decode",
        "add_cert",
        "uri_abs_check",
        "uri_frag_check",
    }
)
VOCABULARY = VALUE_TAGS | STRUCTURAL_TAGS

TAG_RULES = parse_rules(
    """
    OAuthTag(L, T) :- seed(L, T).
    OAuthTag(L2, T) :- OAuthTag(L1, T), propagates(T), flowTo(L1, L2), label(L2).
    """
)


class TagConfigError(ValueError):
    pass


@dataclass(frozen=True)
class TagFact:
    label: int
    tag: str


def _as_list(value: Union[str, list, None], where: str) -> tuple[str, ...]:
    if value is None:
        return ()
    if isinstance(value, str):
        return (value,)
    if isinstance(value, list) and all(isinstance(v, str) for v in value):
        return tuple(value)
    raise TagConfigError(f"{where}: expected a tag name or a list of tag names")


@dataclass(frozen=True)
class TagConfig:
    sources: Mapping[str, tuple[str, ...]] = field(default_factory=dict)
    field_keys: tuple[tuple[str, tuple[str, ...]], ...] = ()
    markers: Mapping[str, tuple[str, ...]] = field(default_factory=dict)
    builtins: tuple[str, ...] = ()
    path: Optional[str] = None

    def __post_init__(self) -> None:
        for section, table in (("sources", self.sources), ("markers", self.markers)):
            for api, tags in table.items():
                for t in tags:
                    if t not in VOCABULARY:
                        raise TagConfigError(f"{section}.{api}: unknown tag {t!r}")
        for pattern, tags in self.field_keys:
            try:
                re.compile(pattern)
            except re.error as exc:
                raise TagConfigError(f"fieldKeys: bad pattern {pattern!r}: {exc}") from None
            for t in tags:
                if t not in VOCABULARY:
                    raise TagConfigError(f"fieldKeys.{pattern}: unknown tag {t!r}")

    @classmethod
    def from_dict(cls, data: Mapping, path: Optional[str] = None) -> "TagConfig":
        if not isinstance(data, Mapping):
            raise TagConfigError("tag configuration must be a mapping")
        unknown = set(data) - {"sources", "fieldKeys", "markers", "builtins"}
        if unknown:
            raise TagConfigError(f"unknown section(s): {', '.join(sorted(unknown))}")
        sources = {str(k): _as_list(v, f"sources.{k}") for k, v in (data.get("sources") or {}).items()}
        markers = {str(k): _as_list(v, f"markers.{k}") for k, v in (data.get("markers") or {}).items()}
        keys = tuple((str(k), _as_list(v, f"fieldKeys.{k}")) for k, v in (data.get("fieldKeys") or {}).items())
        builtins = tuple(str(b) for b in (data.get("builtins") or []))
        return cls(sources, keys, markers, builtins, path)

    @classmethod
    def load(cls, path: Union[str, Path, None] = None) -> "TagConfig":
        if path is None:
            text = resources.files("authflaw").joinpath("config/oauth-tags").read_text(encoding="utf-8")
            return cls.from_dict(yaml.safe_load(text), "<default>")
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(yaml.safe_load(fh), str(path))

    def to_dict(self) -> dict:
        def one(tags: tuple[str, ...]):
            return tags[0] if len(tags) == 1 else list(tags)

        return {
            "sources": {k: one(v) for k, v in self.sources.items()},
            "fieldKeys": {k: one(v) for k, v in self.field_keys},
            "markers": {k: one(v) for k, v in self.markers.items()},
            "builtins": list(self.builtins),
        }

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return "sha256:" + hashlib.sha256(blob).hexdigest()[:16]

    def api_names(self) -> set[str]:
        """Every name a program may call without declaring it."""
        return set(self.sources) | set(self.markers) | set(self.builtins)

    def producible_tags(self) -> set[str]:
        out: set[str] = set()
        for tags in self.sources.values():
            out.update(tags)
        for tags in self.markers.values():
            out.update(tags)
        for _, tags in self.field_keys:
            out.update(tags)
        return out


def seed_tags(sdg: SDG, ir: IRProgram, config: TagConfig, extra: Iterable[tuple[int, str]] = ()) -> list[tuple[int, str]]:
    """Seed sites: configured source/marker calls, matching field reads, marked entries."""
    seeds: set[tuple[int, str]] = set(extra)
    resolved = dict(sdg.facts_of("resolved"))
    compiled = [(re.compile(p), tags) for p, tags in config.field_keys]
    for label in sdg.V:
        ins = ir[label]
        if ins.kind == "FieldLoad":
            key = f"{ins.operand_names[0]}.{ins.field}"
            for rx, tags in compiled:
                if rx.search(key):
                    seeds.update((label, t) for t in tags)
        elif ins.kind == "Call":
            callee = resolved.get(ins.ref)
            if callee is None or (callee in sdg.scope and ir.has_function(callee)):
                continue
            for t in config.sources.get(callee, ()) + config.markers.get(callee, ()):
                seeds.add((label, t))
        elif ins.kind == "Entry":
            for t in config.markers.get(ins.function, ()):
                seeds.add((label, t))
            for t in config.sources.get(ins.function, ()):
                if t in STRUCTURAL_TAGS:
                    seeds.add((label, t))
    # sources that name a declared in-scope function tag its call sites
    for label in sdg.V:
        ins = ir[label]
        if ins.kind == "Call":
            callee = resolved.get(ins.ref)
            if callee is not None and callee in sdg.scope and ir.has_function(callee):
                seeds.update((label, t) for t in config.sources.get(callee, ()))
    return sorted(seeds)


def tag_database(dep: FactDB, seeds: Iterable[tuple[int, str]], deadline: Optional[float] = None) -> FactDB:
    """Evaluate the tag rules on top of derived dependence facts."""
    db = dep.overlay(
        {
            "seed": [(str(L), t) for L, t in seeds],
            "propagates": [(t,) for t in sorted(VALUE_TAGS)],
        }
    )
    db.declare("flowTo", 2)
    db.declare("label", 1)
    return evaluate(db, TAG_RULES, deadline=deadline)


def compute_oauth_tags(
    sdg: SDG,
    facts: FactDB,
    config: TagConfig,
    ir: IRProgram,
    extra_seeds: Iterable[tuple[int, str]] = (),
) -> list[TagFact]:
    db = tag_database(facts, seed_tags(sdg, ir, config, extra_seeds))
    return sorted((TagFact(int(L), t) for L, t in db.facts("OAuthTag")), key=lambda f: (f.label, f.tag))
