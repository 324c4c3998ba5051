import io
import os

import pytest

from topsubs.lm import parse_arpa

DATA_DIR = os.path.join(os.path.dirname(__file__), "data")
TOY_PATH = os.path.join(DATA_DIR, "toy.arpa")

# Order-3 model over {x, y, z}, built by hand so that every back-off branch
# of a three-block term tree is reachable. Probabilities are not meant to be
# meaningful, just structurally valid.
TRIGRAM_ARPA = """\
\\data\\
ngram 1=6
ngram 2=6
ngram 3=4

\\1-grams:
-99	<s>	-0.2
-0.9	</s>
-1.4	<unk>
-0.5	x	-0.3
-0.6	y	-0.25
-0.7	z	-0.1

\\2-grams:
-0.4	<s> x	-0.2
-0.5	x y	-0.15
-0.6	y z	-0.1
-0.7	z </s>
-0.8	x z	-0.05
-0.9	y x	-0.2

\\3-grams:
-0.3	<s> x y
-0.4	x y z
-0.5	y z </s>
-0.6	x z </s>

\\end\\
"""

# Unigram-only model with strictly decreasing, distinct probabilities.
UNIGRAM_ARPA = """\
\\data\\
ngram 1=7

\\1-grams:
-99	<s>
-1.6	</s>
-2.5	<unk>
-0.3	u1
-0.6	u2
-0.9	u3
-1.2	u4

\\end\\
"""


@pytest.fixture(scope="session")
def toy_text():
    with open(TOY_PATH, encoding="utf-8") as fh:
        return fh.read()


@pytest.fixture(scope="session")
def toy_lm(toy_text):
    return parse_arpa(io.StringIO(toy_text))


@pytest.fixture(scope="session")
def tri_lm():
    return parse_arpa(io.StringIO(TRIGRAM_ARPA))


@pytest.fixture(scope="session")
def uni_lm():
    return parse_arpa(io.StringIO(UNIGRAM_ARPA))
