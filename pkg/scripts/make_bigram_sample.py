"""Regenerate data/bigrams_sample.txt from the embedded English text.

Counts adjacent lowercase letter pairs inside words (anything that is not
a letter breaks a pair). The sample only needs to carry ordinary English
letter statistics; any reasonably sized prose passage works.
"""
import collections
import pathlib
import re

TEXT = """
The river keeps its own ledger. Every spring the water rises over the low
fields and leaves behind a thin sheet of silt, and every autumn the farmers
walk the banks and read what the season wrote there. Nobody remembers who
first settled the bend, but the town still follows the shape of the water,
three streets deep on the near side and one long road on the far side where
the ground stays dry. The bridge came later, then the mill, then the small
brick school that doubles as a meeting hall when the council has something
worth arguing about.

Most mornings the same dozen people open the same dozen doors. The baker
starts before light and the ferryman, who kept his title long after the
ferry stopped running, sweeps the landing out of habit. Children cut across
the churchyard because the gravel path takes a minute longer, and the dogs
follow the children as far as the gate and no farther. In the afternoon the
light drops behind the ridge and the whole valley turns the color of weak
tea, and the shopkeepers count their drawers and pin the receipts on a nail
by the door.

It is a quiet place, but not a still one. Water moves under everything,
under the planked walks and the cellar floors and the long memory of the
oldest families. When strangers ask why anyone stays, the answer is always
some version of the same sentence: the river keeps its promises, provided
you learn which ones it actually made. People who want faster rivers move
to faster towns, and the ones who remain learn patience the way children
learn language, without noticing the lessons until they are already fluent.
"""


def main():
    counts = collections.Counter()
    for word in re.findall(r"[a-z]+", TEXT.lower()):
        for a, b in zip(word, word[1:]):
            counts[a + b] += 1
    out = pathlib.Path(__file__).resolve().parent.parent / "data" / "bigrams_sample.txt"
    with open(out, "w") as fh:
        for pair in sorted(counts):
            fh.write(f"{pair} {counts[pair]}\n")
    print(f"wrote {len(counts)} pairs, {sum(counts.values())} transitions to {out}")


if __name__ == "__main__":
    main()
