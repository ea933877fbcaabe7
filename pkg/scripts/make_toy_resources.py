#!/usr/bin/env python3
"""Generate the bundled toy resources and a demo corpus.

Writes lexicon.tsv, embeddings.txt, pinyin.tsv, vocab.txt and corpus.txt
into the target directory (default: resources/toy). Everything is
deterministic given --seed, so regenerating produces identical files.
"""

import argparse
from pathlib import Path

from markkit.toy import write_toy_corpus, write_toy_resources


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="resources/toy", help="target directory")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--sentences", type=int, default=2000,
                        help="corpus size in sentences")
    args = parser.parse_args()

    out = Path(args.out)
    world = write_toy_resources(out, seed=args.seed)
    write_toy_corpus(out / "corpus.txt", world.words, args.sentences, seed=args.seed)
    write_toy_corpus(out / "corpus_pretokenized.txt", world.words, args.sentences,
                     seed=args.seed, pretokenized=True)
    print(f"wrote {len(world.words)} words / {len(world.chars)} characters / "
          f"{len(world.vocab)} vocab tokens to {out}/")
    for name, path in world.paths.items():
        print(f"  {name:12s} {path}")
    print(f"  corpus       {out / 'corpus.txt'} ({args.sentences} sentences)")


if __name__ == "__main__":
    main()
