"""
`file_scripts` module stores materials I/O utilities: the index of shipped codes,
preparation plans and networks, and the loaders for their text files.
"""
import aiofiles
from aiofiles.os import path as aiopath
from json import loads, dumps
from os.path import abspath, join, normpath
from typing import List, Union

from schemas.errors import NotFoundCode, NotFoundNetwork, NotFoundPlan
from utilities.config import MATERIALS_ROOT
from utilities.csscode import CssCode, parse_code
from utilities.ftnet import Network, parse_network
from utilities.recovery import PreparationPlan, parse_plan

NOT_FOUND = {'code': NotFoundCode, 'plan': NotFoundPlan, 'network': NotFoundNetwork}


class FileUtils:
    """
    `FileUtils` class stores utilities for reading materials by registered name or path.
    """
    root = MATERIALS_ROOT

    @classmethod
    async def _get_filepath(cls: 'FileUtils', title: str, name: str = None) -> str:
        """
        `FileUtils._get_filepath` private class method returns the path to a file by path name.
        It takes two parameters (excluding cls):
        1. `title` has four variants: materials_index, code, plan, network.
        2. `name` is a name registered in the index or a path to a file.
        """
        if title != 'materials_index':
            if name is None:
                raise ValueError(f'get_filepath() mode "{title}" needs a name')
            if await aiopath.isfile(name):
                return normpath(abspath(name))
            index = await cls.open_file('materials_index')
            registered = index.get(f'{title}s', {}).get(name)
            if registered is None:
                raise FileNotFoundError(NOT_FOUND[title]().error.format(name))
            name = registered

        filesystem = {
            "materials_index": normpath(abspath(join(cls.root, 'index.json'))),
            "code": normpath(abspath(join(cls.root, 'codes', f'{name}'))),
            "plan": normpath(abspath(join(cls.root, 'plans', f'{name}'))),
            "network": normpath(abspath(join(cls.root, 'networks', f'{name}'))),
        }
        try:
            return filesystem[title]
        except KeyError as e:
            raise ValueError(f'No such get_filepath() mode like "{title}"') from e

    @classmethod
    async def open_file(cls: 'FileUtils', title: str, name: str = None) -> Union[dict, str]:
        """
        `FileUtils.open_file` public class method accesses the materials index
        or one code, plan or network file.
        It returns parsed JSON for the index and the raw text otherwise.
        It takes two parameters (excluding cls):
        1. `title` has four variants: materials_index, code, plan, network.
        2. `name` is a registered name or a path.
        """
        path = await cls._get_filepath(title, name)
        try:
            async with aiofiles.open(path, encoding='utf-8', mode='r') as f:
                content = await f.read()
        except FileNotFoundError as e:
            raise FileNotFoundError(f'File not found: {path}') from e
        return loads(content) if path.endswith('.json') else content

    @classmethod
    async def open_file_lines(cls: 'FileUtils', title: str, name: str) -> List[str]:
        """`FileUtils.open_file_lines` returns the file split by newline, without line endings."""
        content = await cls.open_file(title, name)
        return content.splitlines()

    @classmethod
    async def save_file(cls: 'FileUtils', path: str, content: Union[str, dict]) -> None:
        """
        `FileUtils.save_file` public class method writes a report or a serialized
        code or network to `path`; dicts are written as JSON.
        """
        async with aiofiles.open(path, encoding='utf-8', mode='w') as f:
            if isinstance(content, dict):
                content = dumps(content, ensure_ascii=False, indent=2)
            await f.write(content)

    @classmethod
    async def list_materials(cls: 'FileUtils') -> dict:
        index = await cls.open_file('materials_index')
        return {kind: sorted(index.get(kind, {})) for kind in ('codes', 'plans', 'networks')}

    @classmethod
    async def load_code(cls: 'FileUtils', name: str, orthonormalize: bool = True) -> CssCode:
        return parse_code(await cls.open_file_lines('code', name), orthonormalize)

    @classmethod
    async def load_plan(cls: 'FileUtils', name: str) -> PreparationPlan:
        lines = await cls.open_file_lines('plan', name)
        return parse_plan(lines, name.rsplit('/', 1)[-1].split('.')[0])

    @classmethod
    async def load_network(cls: 'FileUtils', name: str) -> Network:
        return parse_network(await cls.open_file_lines('network', name))
