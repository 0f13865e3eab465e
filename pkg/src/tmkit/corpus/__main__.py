"""Rewrite the golden files next to the fixtures: ``python3 -m tmkit.corpus``."""

from pathlib import Path

from tmkit.corpus import _data, golden_outputs, load_all


def main() -> None:
    root = Path(str(_data()))
    for fixture in load_all():
        for fname, text in golden_outputs(fixture).items():
            (root / fname).write_text(text, encoding="utf-8")
            print(fname)


if __name__ == "__main__":
    main()
