import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

import pytest

from app import database
from app.marcher import SimConfig
from app.memory import Full

# Benchmark operating point: 20x20, alpha=1, beta=0, dt=1, dx=10, u0[10,10]=10.
POINT_SOURCE_TEXT = """\
# single point source on a 20x20 grid
gamma=0.9
alpha=1
beta=0
dt=1
dx=10
nx=20
ny=20
steps={steps}
strategy=full
init=10,10,10
"""


@pytest.fixture()
def sqlite_connection(tmp_path):
    db_path = tmp_path / "test.db"
    database.init_db(db_path)
    conn = database.get_connection(db_path)
    try:
        yield conn
    finally:
        conn.close()


@pytest.fixture()
def point_source_config():
    def build(steps: int = 60, gamma: float = 0.9, strategy=None) -> SimConfig:
        return SimConfig(
            gamma=gamma,
            dt=1.0,
            dx=10.0,
            steps=steps,
            nx=20,
            ny=20,
            strategy=strategy or Full(),
            initial=((10, 10, 10.0),),
        )

    return build


@pytest.fixture()
def config_file(tmp_path):
    def write(text: str, name: str = "sim.cfg") -> Path:
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    return write
