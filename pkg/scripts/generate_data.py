"""Regenerate the bundled synthetic heart-disease corpus under data/."""
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from autotab.datagen import write_corpus


def main() -> None:
    out = Path(__file__).resolve().parents[1] / "data"
    paths = write_corpus(out)
    for name, path in sorted(paths.items()):
        print(f"{name}: {path}")


if __name__ == "__main__":
    main()
