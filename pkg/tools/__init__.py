# 파이프라인 툴 모음. 각 툴은 JSON 으로 쓸 수 있는 dict 를 돌려줍니다.
import asyncio
from typing import Awaitable, Callable, Sequence


async def bounded_gather(factories: Sequence[Callable[[], Awaitable]], workers: int) -> list:
    """최대 workers 개만 동시에 실행하고 입력 순서대로 결과를 돌려줍니다."""
    semaphore = asyncio.Semaphore(max(1, workers))

    async def run(factory):
        async with semaphore:
            return await factory()

    return await asyncio.gather(*(run(f) for f in factories))
