"""Speaker split files: `[section]` headers with one speaker id per line."""

from ..errors import FormatError

SECTIONS = ("train", "validation", "test_seen", "test_unseen")


def parse_split_file(path):
    """Returns {section: [speaker ids]} with all four sections present."""
    sections = {name: [] for name in SECTIONS}
    current = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("[") and line.endswith("]"):
                name = line[1:-1]
                if name not in sections:
                    raise FormatError(f"{path}:{lineno}: unknown section {name!r}")
                current = name
                continue
            if current is None:
                raise FormatError(f"{path}:{lineno}: speaker id before any [section]")
            sections[current].append(line)
    for name in ("train", "test_unseen"):
        if not sections[name]:
            raise FormatError(f"{path}: section [{name}] is empty")
    return sections


def write_split_file(path, sections):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for name in SECTIONS:
            fh.write(f"[{name}]\n")
            for spk in sections.get(name, []):
                fh.write(spk + "\n")
