"""Key-value config file support.

Format, one entry per line:

    # comment
    llm.base_url = http://localhost:1234/v1
    llm.model = mistral-7b-instruct
    llm.temperature = 0

RT_LLM_BASE_URL, RT_LLM_MODEL, and RT_LLM_API_KEY environment variables
override the file.
"""

from __future__ import annotations

from pathlib import Path

from .llm import LlmConfig


def load_config_file(path: str | Path) -> dict[str, str]:
    values: dict[str, str] = {}
    for raw in Path(path).read_text("utf-8").splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"config line is not 'key = value': {raw!r}")
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()
    return values


def llm_config_from(path: str | Path | None = None) -> LlmConfig:
    values = load_config_file(path) if path else {}
    return LlmConfig.from_mapping(values)
