"""Named attack recipes: validated bundles of goal + transformation +
constraints + search, plus a strict config-file loader and serializer.

The config format is a small key-value document with ``[goal]``, ``[search]``
and ``[transform]`` sections and repeated ``[[constraint]]`` tables (see
``data/recipe_example.toml``). Unknown keys are errors. Every recipe must
include the ``no_stopword_swap`` constraint, and character-only recipes must
not carry ``pos_match``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .constraints import (
    Constraint,
    MaxEditDistance,
    MaxPerturbRatio,
    NoStopwordSwap,
    PosMatch,
    SentenceSimilarity,
    WordEmbeddingCosine,
)
from .errors import ConfigError
from .goals import BenignArgmaxGoal, BenignMultilabelGoal, GoalFunction
from .resources import MeanVectorEncoder, ResourceBundle
from .search import Beam, Genetic, GreedyWir, Ranking, SearchStrategy
from .transforms import (
    CharDelete,
    CharHomoglyph,
    CharInsert,
    CharNeighborSwap,
    Composite,
    EmbeddingKnnSwap,
    LexiconSwap,
    MlmSwap,
    Transformation,
)
from .victims import MULTILABEL_THRESHOLD, RemoteClient, TaskKind, TaskType

BUILTIN_NAMES = (
    "toxictrap-default",
    "a2t-toxic",
    "textfooler-toxic",
    "pwws-toxic",
    "deepwordbug-toxic",
    "textbugger-toxic",
)

DEFAULT_GREEDY_BUDGET = 2000
DEFAULT_WIDE_BUDGET = 20000


@dataclass
class AttackRecipe:
    name: str
    task_type: TaskType
    goal: GoalFunction
    transformation: Transformation
    constraints: list[Constraint]
    search: SearchStrategy
    budget: int
    threshold: float = MULTILABEL_THRESHOLD

    def __post_init__(self):
        _validate_parts(self.name, self.transformation, self.constraints)
        if self.budget <= 0:
            raise ConfigError(f"recipe {self.name!r}: budget must be positive")

    def descriptor(self) -> dict:
        """Structural identity, used for equality and serialization."""
        search: dict = {"kind": self.search.kind}
        if isinstance(self.search, GreedyWir):
            search["ranking"] = self.search.ranking.value
        elif isinstance(self.search, Beam):
            search["width"] = self.search.width
        elif isinstance(self.search, Genetic):
            search.update(population=self.search.population,
                          generations=self.search.generations,
                          mutation_rate=self.search.mutation_rate)
        return {
            "name": self.name,
            "task": self.task_type.value,
            "threshold": self.threshold,
            "budget": self.budget,
            "search": search,
            "transform": self.transformation.descriptor(),
            "constraints": [c.descriptor() for c in self.constraints],
        }


def _is_character_only(t: Transformation) -> bool:
    if isinstance(t, Composite):
        return all(_is_character_only(m) for m in t.members)
    return not t.is_word_level


def _validate_parts(name: str, transformation: Transformation,
                    constraints: list[Constraint]) -> None:
    names = [c.name for c in constraints]
    if "no_stopword_swap" not in names:
        raise ConfigError(
            f"recipe {name!r}: every recipe must include the no_stopword_swap "
            "constraint (add a [[constraint]] with kind = \"no_stopword_swap\")")
    if _is_character_only(transformation) and "pos_match" in names:
        raise ConfigError(
            f"recipe {name!r}: character-only recipes must not carry pos_match "
            "(character variants are OOV for the tagger by design)")


def _goal_for(task_type: TaskType, threshold: float) -> GoalFunction:
    if task_type == TaskType.MULTILABEL:
        return BenignMultilabelGoal(threshold)
    return BenignArgmaxGoal()


def _encoder(resources: ResourceBundle, remote: RemoteClient | None):
    if remote is not None:
        from .victims import RemoteEncoder

        return RemoteEncoder(remote)
    return MeanVectorEncoder(resources.embeddings)


def builtin_recipe(
    name: str,
    task: TaskKind | TaskType,
    resources: ResourceBundle,
    remote: RemoteClient | None = None,
    budget: int | None = None,
    a2t_use_mlm: bool = False,
    threshold: float = MULTILABEL_THRESHOLD,
) -> AttackRecipe:
    """One of the six shipped recipes, instantiated for ``task``.

    The goal is picked by task shape, so the same recipe grid covers binary,
    multiclass, and multilabel victims.
    """
    task_type = task.task if isinstance(task, TaskKind) else TaskType(task)
    if name not in BUILTIN_NAMES:
        raise ConfigError(
            f"unknown recipe {name!r}; valid names: {', '.join(BUILTIN_NAMES)}")
    r = resources
    goal = _goal_for(task_type, threshold)
    encoder = _encoder(r, remote)
    stop = NoStopwordSwap(r.stopwords)

    if name == "toxictrap-default":
        transformation: Transformation = Composite(
            [EmbeddingKnnSwap(r.embeddings, 20), CharHomoglyph(r.charmaps)])
        constraints = [MaxPerturbRatio(0.1), stop, PosMatch(r.pos),
                       SentenceSimilarity(encoder, 0.84, "angular")]
        search: SearchStrategy = GreedyWir(Ranking.UNK)
    elif name == "a2t-toxic":
        if a2t_use_mlm:
            transformation = Composite(
                [EmbeddingKnnSwap(r.embeddings, 20), MlmSwap(remote)])
        else:
            transformation = EmbeddingKnnSwap(r.embeddings, 20)
        constraints = [MaxPerturbRatio(0.1), stop, PosMatch(r.pos),
                       SentenceSimilarity(encoder, 0.9, "cosine")]
        search = GreedyWir(Ranking.GRAD)
    elif name == "textfooler-toxic":
        transformation = EmbeddingKnnSwap(r.embeddings, 50)
        constraints = [stop, PosMatch(r.pos), WordEmbeddingCosine(r.embeddings, 0.5),
                       SentenceSimilarity(encoder, 0.84, "angular")]
        search = GreedyWir(Ranking.DEL)
    elif name == "pwws-toxic":
        transformation = LexiconSwap(r.synonyms)
        constraints = [stop]
        search = GreedyWir(Ranking.WS)
    elif name == "deepwordbug-toxic":
        transformation = Composite([
            CharInsert(r.charmaps), CharDelete(), CharNeighborSwap(),
            CharHomoglyph(r.charmaps, include_keyboard=True)])
        constraints = [stop, MaxEditDistance(30)]
        search = GreedyWir(Ranking.DEL)
    else:  # textbugger-toxic
        transformation = Composite([
            CharInsert(r.charmaps), CharDelete(), CharNeighborSwap(),
            CharHomoglyph(r.charmaps, include_keyboard=True),
            EmbeddingKnnSwap(r.embeddings, 5)])
        constraints = [stop, SentenceSimilarity(encoder, 0.8, "cosine")]
        search = GreedyWir(Ranking.DEL)

    return AttackRecipe(
        name=name, task_type=task_type, goal=goal, transformation=transformation,
        constraints=constraints, search=search,
        budget=budget if budget is not None else DEFAULT_GREEDY_BUDGET,
        threshold=threshold)


# ---------------------------------------------------------------------------
# Strict config parsing (small TOML subset: scalar keys, [section],
# [[table]] arrays, string arrays)
# ---------------------------------------------------------------------------

def _parse_scalar(raw: str, path: str, lineno: int):
    raw = raw.strip()
    if raw.startswith('"') and raw.endswith('"') and len(raw) >= 2:
        return raw[1:-1]
    if raw == "true":
        return True
    if raw == "false":
        return False
    if raw.startswith("[") and raw.endswith("]"):
        inner = raw[1:-1].strip()
        if not inner:
            return []
        items = [x.strip() for x in inner.split(",")]
        out = []
        for x in items:
            if not (x.startswith('"') and x.endswith('"')):
                raise ConfigError(f"{path}:{lineno}: arrays may hold only strings")
            out.append(x[1:-1])
        return out
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"{path}:{lineno}: cannot parse value {raw!r}") from None


def parse_recipe_config(text: str, path: str = "<config>") -> dict:
    """Parse the recipe document into {top-level keys, sections, constraint
    list}. Structure errors carry line numbers."""
    doc: dict = {"constraint": []}
    target: dict = doc
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if stripped.startswith("[["):
            if not stripped.endswith("]]"):
                raise ConfigError(f"{path}:{lineno}: malformed table header")
            section = stripped[2:-2].strip()
            if section != "constraint":
                raise ConfigError(f"{path}:{lineno}: unknown table {section!r}")
            target = {}
            doc["constraint"].append(target)
            continue
        if stripped.startswith("["):
            if not stripped.endswith("]"):
                raise ConfigError(f"{path}:{lineno}: malformed section header")
            section = stripped[1:-1].strip()
            if section not in ("goal", "search", "transform"):
                raise ConfigError(f"{path}:{lineno}: unknown section {section!r}")
            if section in doc:
                raise ConfigError(f"{path}:{lineno}: duplicate section {section!r}")
            target = {}
            doc[section] = target
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, raw = stripped.split("=", 1)
        key = key.strip()
        if key in target:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        target[key] = _parse_scalar(raw, path, lineno)
    return doc


def _type_ok(value, types) -> bool:
    # bool is an int subclass; only accept it where bool is asked for.
    if isinstance(value, bool):
        return types is bool or (isinstance(types, tuple) and bool in types)
    return isinstance(value, types)


def _take(table: dict, context: str, required: dict, optional: dict) -> dict:
    """Pull typed keys out of ``table``; unknown or missing keys are errors."""
    out = {}
    for key, types in required.items():
        if key not in table:
            raise ConfigError(f"{context}: missing key {key!r}")
        if not _type_ok(table[key], types):
            raise ConfigError(f"{context}: key {key!r} has wrong type")
        out[key] = table[key]
    for key, types in optional.items():
        if key in table:
            if not _type_ok(table[key], types):
                raise ConfigError(f"{context}: key {key!r} has wrong type")
            out[key] = table[key]
    unknown = set(table) - set(required) - set(optional)
    if unknown:
        raise ConfigError(f"{context}: unknown keys {sorted(unknown)}")
    return out


_NUM = (int, float)


def _build_transform(spec: dict, resources: ResourceBundle,
                     remote: RemoteClient | None, context: str) -> Transformation:
    kind = spec.get("kind")
    r = resources
    if kind == "composite":
        fields = _take(spec, context, {"kind": str, "members": list}, {})
        members = []
        for token in fields["members"]:
            name, _, arg = token.partition(":")
            spec_m: dict = {"kind": name}
            if name == "emb_knn" and arg:
                spec_m["n"] = int(arg)
            elif name == "mlm" and arg:
                spec_m["top_k"] = int(arg)
            elif name == "char_homoglyph_kb":
                spec_m = {"kind": "char_homoglyph", "include_keyboard": True}
            elif arg:
                raise ConfigError(f"{context}: member {token!r} takes no argument")
            members.append(_build_transform(spec_m, resources, remote, context))
        try:
            return Composite(members)
        except ValueError as exc:
            raise ConfigError(f"{context}: {exc}") from exc
    if kind == "emb_knn":
        fields = _take(spec, context, {"kind": str}, {"n": int})
        return EmbeddingKnnSwap(r.embeddings, fields.get("n", 20))
    if kind == "lexicon":
        _take(spec, context, {"kind": str}, {})
        return LexiconSwap(r.synonyms)
    if kind == "mlm":
        fields = _take(spec, context, {"kind": str}, {"top_k": int})
        return MlmSwap(remote, fields.get("top_k", 20))
    if kind == "char_insert":
        _take(spec, context, {"kind": str}, {})
        return CharInsert(r.charmaps)
    if kind == "char_delete":
        _take(spec, context, {"kind": str}, {})
        return CharDelete()
    if kind == "char_neighbor_swap":
        _take(spec, context, {"kind": str}, {})
        return CharNeighborSwap()
    if kind == "char_homoglyph":
        fields = _take(spec, context, {"kind": str}, {"include_keyboard": bool})
        return CharHomoglyph(r.charmaps, fields.get("include_keyboard", False))
    raise ConfigError(f"{context}: unknown transform kind {kind!r}")


def _build_constraint(spec: dict, resources: ResourceBundle, encoder,
                      context: str) -> Constraint:
    kind = spec.get("kind")
    try:
        if kind == "max_ratio":
            fields = _take(spec, context, {"kind": str, "ratio": _NUM}, {})
            return MaxPerturbRatio(float(fields["ratio"]))
        if kind == "no_stopword_swap":
            _take(spec, context, {"kind": str}, {})
            return NoStopwordSwap(resources.stopwords)
        if kind == "pos_match":
            _take(spec, context, {"kind": str}, {})
            return PosMatch(resources.pos)
        if kind == "word_cos":
            fields = _take(spec, context, {"kind": str, "threshold": _NUM}, {})
            return WordEmbeddingCosine(resources.embeddings, float(fields["threshold"]))
        if kind == "edit_distance":
            fields = _take(spec, context, {"kind": str, "max_distance": int}, {})
            return MaxEditDistance(fields["max_distance"])
        if kind in ("sent_angular", "sent_cosine"):
            fields = _take(spec, context, {"kind": str, "threshold": _NUM}, {})
            threshold = float(fields["threshold"])
            if not 0.0 <= threshold <= 1.0:
                raise ConfigError(f"{context}: threshold {threshold} out of [0, 1]")
            return SentenceSimilarity(encoder, threshold, kind.removeprefix("sent_"))
    except ValueError as exc:
        raise ConfigError(f"{context}: {exc}") from exc
    raise ConfigError(f"{context}: unknown constraint kind {kind!r}")


def _build_search(spec: dict, context: str) -> SearchStrategy:
    kind = spec.get("kind")
    try:
        if kind == "greedy_wir":
            fields = _take(spec, context, {"kind": str, "ranking": str}, {})
            return GreedyWir(Ranking(fields["ranking"]))
        if kind == "beam":
            fields = _take(spec, context, {"kind": str, "width": int}, {})
            return Beam(fields["width"])
        if kind == "genetic":
            fields = _take(spec, context,
                           {"kind": str, "population": int, "generations": int,
                            "mutation_rate": _NUM}, {})
            return Genetic(fields["population"], fields["generations"],
                           float(fields["mutation_rate"]))
    except ValueError as exc:
        raise ConfigError(f"{context}: {exc}") from exc
    raise ConfigError(f"{context}: unknown search kind {kind!r}")


def load_recipe(
    path: str | Path,
    resources: ResourceBundle,
    remote: RemoteClient | None = None,
) -> AttackRecipe:
    """Load and validate a recipe config file."""
    path = Path(path)
    doc = parse_recipe_config(path.read_text(encoding="utf-8"), str(path))
    return recipe_from_document(doc, resources, remote, context=str(path))


def recipe_from_document(doc: dict, resources: ResourceBundle,
                         remote: RemoteClient | None = None,
                         context: str = "<config>") -> AttackRecipe:
    top = _take({k: v for k, v in doc.items() if k not in
                 ("goal", "search", "transform", "constraint")},
                context, {"name": str}, {"budget": int})
    for section in ("goal", "search", "transform"):
        if section not in doc:
            raise ConfigError(f"{context}: missing [{section}] section")
    goal_fields = _take(doc["goal"], f"{context} [goal]",
                        {"task": str}, {"threshold": _NUM})
    try:
        task_type = TaskType(goal_fields["task"])
    except ValueError:
        raise ConfigError(f"{context} [goal]: unknown task {goal_fields['task']!r}") from None
    threshold = float(goal_fields.get("threshold", MULTILABEL_THRESHOLD))
    if not 0.0 < threshold < 1.0:
        raise ConfigError(f"{context} [goal]: threshold {threshold} out of (0, 1)")
    search = _build_search(doc["search"], f"{context} [search]")
    transformation = _build_transform(doc["transform"], resources, remote,
                                      f"{context} [transform]")
    encoder = _encoder(resources, remote)
    constraints = [
        _build_constraint(spec, resources, encoder, f"{context} [[constraint]] #{i + 1}")
        for i, spec in enumerate(doc["constraint"])
    ]
    default_budget = (DEFAULT_GREEDY_BUDGET if isinstance(search, GreedyWir)
                      else DEFAULT_WIDE_BUDGET)
    return AttackRecipe(
        name=top["name"], task_type=task_type,
        goal=_goal_for(task_type, threshold),
        transformation=transformation, constraints=constraints, search=search,
        budget=top.get("budget", default_budget), threshold=threshold)


def recipe_to_config(recipe: AttackRecipe) -> str:
    """Serialize a recipe to the config format; reloading reproduces an
    identical descriptor."""
    d = recipe.descriptor()

    def fmt(value) -> str:
        if isinstance(value, bool):
            return "true" if value else "false"
        if isinstance(value, str):
            return f'"{value}"'
        if isinstance(value, list):
            return "[" + ", ".join(fmt(v) for v in value) + "]"
        return repr(value)

    lines = [f'name = {fmt(d["name"])}', f'budget = {d["budget"]}', "", "[goal]",
             f'task = {fmt(d["task"])}', f'threshold = {fmt(d["threshold"])}', "",
             "[search]"]
    for key, value in d["search"].items():
        lines.append(f"{key} = {fmt(value)}")
    lines += ["", "[transform]"]
    t = d["transform"]
    if t["kind"] == "composite":
        tokens = []
        for m in t["members"]:
            if m["kind"] == "emb_knn":
                tokens.append(f"emb_knn:{m['n']}")
            elif m["kind"] == "mlm":
                tokens.append(f"mlm:{m['top_k']}")
            elif m["kind"] == "char_homoglyph" and m.get("include_keyboard"):
                tokens.append("char_homoglyph_kb")
            else:
                tokens.append(m["kind"])
        lines.append('kind = "composite"')
        lines.append(f'members = {fmt(tokens)}')
    else:
        for key, value in t.items():
            lines.append(f"{key} = {fmt(value)}")
    for c in d["constraints"]:
        lines += ["", "[[constraint]]"]
        for key, value in c.items():
            lines.append(f"{key} = {fmt(value)}")
    return "\n".join(lines) + "\n"
