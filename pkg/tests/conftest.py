from pathlib import Path

import numpy as np
import pytest
from PIL import Image

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def corpus_dir() -> Path:
    return FIXTURES / "corpus"


@pytest.fixture(scope="session")
def ingest_config_path() -> Path:
    return FIXTURES / "ingest_config.yaml"


def solid_image(r: int, g: int, b: int, size: tuple[int, int] = (32, 32)) -> Image.Image:
    arr = np.zeros((size[1], size[0], 3), dtype=np.uint8)
    arr[..., 0], arr[..., 1], arr[..., 2] = r, g, b
    return Image.fromarray(arr)


@pytest.fixture
def red_image() -> Image.Image:
    return solid_image(200, 10, 10)


@pytest.fixture
def blue_image() -> Image.Image:
    return solid_image(10, 10, 200)


@pytest.fixture
def map_png(tmp_path) -> Path:
    path = tmp_path / "map.png"
    solid_image(150, 120, 80, (48, 36)).save(path)
    return path
