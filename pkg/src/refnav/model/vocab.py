"""Token vocabulary shared by instructions and object labels."""

from __future__ import annotations

from dataclasses import dataclass

from ..world import Environment, Task

UNK = "<unk>"
NULL = "<null>"


@dataclass(frozen=True)
class Vocab:
    tokens: tuple[str, ...]
    index: dict[str, int]

    @classmethod
    def build(cls, envs: list[Environment], tasks: list[Task]) -> "Vocab":
        words = set()
        for task in tasks:
            words.update(task.instruction)
        for env in envs:
            for obj in env.objects:
                words.update(obj.label.split())
        tokens = (UNK, NULL) + tuple(sorted(words))
        return cls(tokens=tokens, index={t: i for i, t in enumerate(tokens)})

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def unk_id(self) -> int:
        return self.index[UNK]

    @property
    def null_id(self) -> int:
        return self.index[NULL]

    def encode(self, words) -> list[int]:
        """Token ids with out-of-vocabulary words mapped to UNK."""
        return [self.index.get(w, self.unk_id) for w in words]

    def to_json(self) -> dict:
        return {"tokens": list(self.tokens)}

    @classmethod
    def from_json(cls, obj: dict) -> "Vocab":
        tokens = tuple(str(t) for t in obj["tokens"])
        return cls(tokens=tokens, index={t: i for i, t in enumerate(tokens)})
