from json import loads
from os.path import abspath, dirname, join

import numpy as np

from utilities.config import MATERIALS_ROOT
from utilities.csscode import parse_code
from utilities.ftnet import parse_network
from utilities.recovery import parse_plan


def _lines(*parts) -> list:
    with open(join(MATERIALS_ROOT, *parts), mode='r', encoding='utf-8') as f:
        return f.read().splitlines()


class TestCodesMixin:
    @classmethod
    def setup_class(cls):
        cls.steane = parse_code(_lines('codes', 'hamming7.code'))
        cls.hamming15 = parse_code(_lines('codes', 'hamming15.code'))
        cls.rm15 = parse_code(_lines('codes', 'rm15.code'))
        cls.trivial3 = parse_code(_lines('codes', 'trivial3.code'))
        # Golden figures shared by the module and CLI tests
        with open(join(dirname(abspath(__file__)), 'data', 'expected.json'),
                  mode='r', encoding='utf-8') as f:
            cls.expected = loads(f.read())

    @staticmethod
    def hamming_generator() -> np.ndarray:
        return np.array([[int(c) for c in row] for row in _lines('codes', 'hamming7.code')[3:7]], dtype=np.uint8)


class TestPlansMixin(TestCodesMixin):
    @classmethod
    def setup_class(cls):
        super().setup_class()
        cls.plans = {name: parse_plan(_lines('plans', f'{name}.plan'), name) for name in ('bell', 'xz_yy', 'toffoli')}


class TestNetworksMixin(TestCodesMixin):
    @classmethod
    def setup_class(cls):
        super().setup_class()
        cls.networks = {
            name: parse_network(_lines('networks', f'{name.replace("-", "_")}.net'))
            for name in ('teleport-k1', 'cx-pair', 'intrablock-cx')
        }
