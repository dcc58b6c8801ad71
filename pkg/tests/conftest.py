import numpy as np
import pytest

# Ten consecutive log rows from the published dataset excerpt, header included.
EXCERPT_CSV = """Timestamp,X,Y,BTN_TOUCH,TOUCH_MAJOR,TOUCH_MINOR,FINGER
55.021863,1721,458,HELD,27,19,0
55.030851,1723,461,HELD,26,18,0
55.030851,1156,3612,UP,15,11,1
55.03895,1723,463,HELD,26,18,0
55.03895,1156,3614,HELD,10,10,1
55.04704,1722,465,HELD,26,18,0
55.04704,1156,3618,HELD,11,11,1
55.055571,1715,466,HELD,26,18,0
55.055571,1156,3621,HELD,13,13,1
55.063779,1710,467,HELD,25,17,0
"""


@pytest.fixture
def excerpt_path(tmp_path):
    path = tmp_path / "7_Snake.csv"
    path.write_text(EXCERPT_CSV)
    return path


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
