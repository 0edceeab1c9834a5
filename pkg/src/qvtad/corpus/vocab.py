"""Attribute descriptor vocabulary."""

from ..errors import FormatError, VocabularyError


class AttributeVocab:
    """Ordered, unique set of timbre descriptor names with index lookup."""

    def __init__(self, names):
        names = list(names)
        if not names:
            raise VocabularyError("vocabulary must not be empty")
        seen = set()
        for n in names:
            if not n or n != n.strip():
                raise VocabularyError(f"bad attribute name {n!r}")
            if n in seen:
                raise VocabularyError(f"duplicate attribute name {n!r}")
            seen.add(n)
        self.names = names
        self._index = {n: i for i, n in enumerate(names)}

    @property
    def size(self):
        return len(self.names)

    def __len__(self):
        return len(self.names)

    def __iter__(self):
        return iter(self.names)

    def index_of(self, name):
        try:
            return self._index[name]
        except KeyError:
            raise VocabularyError(f"unknown attribute {name!r}") from None

    def name_of(self, index):
        if not 0 <= index < len(self.names):
            raise VocabularyError(f"attribute index {index} out of range")
        return self.names[index]

    @classmethod
    def default(cls, size=34):
        """Synthetic stand-in vocabulary of `size` generic descriptors."""
        return cls([f"attr{i:02d}" for i in range(size)])

    @classmethod
    def load(cls, path):
        names = []
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line and not line.startswith("#"):
                    names.append(line)
        if not names:
            raise FormatError(f"no attribute names in {path}")
        return cls(names)

    def save(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for n in self.names:
                fh.write(n + "\n")
