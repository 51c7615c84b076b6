import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from speechaug import audio, delex, minicorpus, morph
from speechaug.config import TablePaths


@pytest.fixture(scope="session")
def segmenter():
    return morph.default_segmenter()


@pytest.fixture(scope="session")
def frame_chain():
    t = TablePaths()
    return delex.FrameChain(
        primary=delex.load_frame_lexicon(t.frame_lexicon),
        bridge=delex.load_bilingual_map(t.bilingual_map),
        pivot=delex.load_frame_lexicon(t.pivot_lexicon),
    )


@pytest.fixture(scope="session")
def role_lexicon():
    return delex.load_role_lexicon(TablePaths().role_lexicon)


@pytest.fixture(scope="session")
def g2p_table():
    return audio.default_g2p()


@pytest.fixture(scope="session")
def mini_corpus_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("minicorpus")
    minicorpus.build_mini_corpus(out)
    return out


@pytest.fixture(scope="session")
def mini_manifest(mini_corpus_dir):
    return mini_corpus_dir / "manifest.jsonl"


def write_mini_config(path: Path, manifest: Path, seed: int = 11, count: int = 20) -> Path:
    path.write_text(
        f"""[paths]
manifest = {manifest}

[generation]
count = {count}
seed = {seed}

[lm]
order = 4
kappa = 0.04
""",
        encoding="utf-8",
    )
    return path
