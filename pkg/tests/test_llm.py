import httpx
import pytest

from rtq.errors import EmptyCompletion, LlmHttpError, LlmTimeout, NoQueryFound
from rtq.llm import (
    HttpProvider,
    LlmConfig,
    MockLlm,
    complete,
    extract_sql,
    generate_db_query,
)


class TestExtraction:
    def test_fenced_block(self):
        completion = (
            "```sql\nSELECT AVG(profit) FROM sales WHERE product = 'OneView' "
            "AND customer = 'Allianz' AND subregion = 'ANZ'\n```"
        )
        sql, method = extract_sql(completion)
        assert sql.startswith("SELECT AVG(profit)")
        assert method == "fenced-block"

    def test_first_select_with_prose(self):
        sql, method = extract_sql("Sure! SELECT COUNT(*) FROM t")
        assert sql == "SELECT COUNT(*) FROM t"
        assert method == "first-select"

    def test_whole_text(self):
        sql, method = extract_sql("SELECT a FROM t;")
        assert sql == "SELECT a FROM t"
        assert method == "whole-text"

    def test_statement_clipped_at_semicolon(self):
        sql, _ = extract_sql("answer: SELECT a FROM t; anything after is prose")
        assert sql == "SELECT a FROM t"

    def test_no_query_found(self):
        with pytest.raises(NoQueryFound):
            extract_sql("I cannot answer.")

    def test_extraction_idempotent(self):
        sql, _ = extract_sql("Okay. SELECT sales FROM b2b WHERE x = 1;")
        again, method = extract_sql(sql)
        assert again == sql
        assert method == "whole-text"


class TestMock:
    def test_rule_table_wins(self):
        mock = MockLlm(rules=[(r"magic-token", "SELECT 1 FROM t")])
        assert mock.complete("prompt with magic-token inside", LlmConfig()) == "SELECT 1 FROM t"

    def test_rules_ordered(self):
        mock = MockLlm(rules=[(r"a", "first"), (r"ab", "second")], synthesize=False)
        assert mock.complete("ab", LlmConfig()) == "first"

    def test_no_rule_no_synthesis_is_empty(self):
        mock = MockLlm(synthesize=False)
        with pytest.raises(EmptyCompletion):
            complete("anything", LlmConfig(), mock)

    def test_synthesis_deterministic(self, b2b_index, b2b_table):
        from rtq.schema import UserQuery, build_dynamic_schema, default_template, formulate_prompt

        q = UserQuery.from_text("average profit for OneView in ANZ")
        schema, _ = build_dynamic_schema(q, b2b_index)
        prompt = formulate_prompt(schema, default_template(), q)
        mock = MockLlm()
        assert mock.complete(prompt, LlmConfig()) == mock.complete(prompt, LlmConfig())

    def test_unknown_provider_rejected(self):
        with pytest.raises(ValueError):
            complete("x", LlmConfig(), "banana")


class TestGenerateDbQuery:
    def test_section3_prompt(self, b2b_table, b2b_index):
        from rtq.schema import UserQuery, build_dynamic_schema, default_template, formulate_prompt

        q = UserQuery.from_text(
            "What would be the average profit from selling OneView to Allianz in ANZ"
        )
        schema, _ = build_dynamic_schema(q, b2b_index)
        prompt = formulate_prompt(schema, default_template(), q)
        generated = generate_db_query(prompt, LlmConfig(), "mock")
        assert generated.extraction_method == "fenced-block"
        assert generated.sql_text in generated.raw_completion
        assert "AVG(profit)" in generated.sql_text
        assert "product = 'OneView'" in generated.sql_text

    def test_prose_only_raises(self):
        mock = MockLlm(rules=[(r".", "I cannot answer.")])
        with pytest.raises(NoQueryFound):
            generate_db_query("prompt", LlmConfig(), mock)


class TestConfig:
    def test_env_overrides(self):
        env = {"RT_LLM_BASE_URL": "http://example:9/v1", "RT_LLM_MODEL": "m2"}
        cfg = LlmConfig.from_mapping({"llm.base_url": "http://file/v1", "llm.model": "m1"}, env)
        assert cfg.base_url == "http://example:9/v1"
        assert cfg.model_name == "m2"

    def test_file_values(self):
        cfg = LlmConfig.from_mapping(
            {"llm.temperature": "0.5", "llm.max_tokens": "64", "llm.timeout": "3"}, {}
        )
        assert cfg.temperature == 0.5
        assert cfg.max_tokens == 64
        assert cfg.timeout == 3.0

    def test_guards(self):
        with pytest.raises(ValueError):
            LlmConfig(timeout=0)
        with pytest.raises(ValueError):
            LlmConfig(temperature=-1)


class _FakePost:
    def __init__(self, outcomes):
        self.outcomes = list(outcomes)
        self.calls = 0

    def __call__(self, url, **kwargs):
        self.calls += 1
        outcome = self.outcomes.pop(0)
        if isinstance(outcome, Exception):
            raise outcome
        return outcome


def _response(status, payload):
    return httpx.Response(
        status_code=status, json=payload, request=httpx.Request("POST", "http://t/v1")
    )


class TestHttpProvider:
    def test_success(self, monkeypatch):
        fake = _FakePost([_response(200, {"choices": [{"message": {"content": "SELECT 1 FROM t"}}]})])
        monkeypatch.setattr(httpx, "post", fake)
        assert HttpProvider().complete("p", LlmConfig()) == "SELECT 1 FROM t"

    def test_timeout_retries_once_then_raises(self, monkeypatch):
        fake = _FakePost([httpx.ConnectTimeout("slow"), httpx.ConnectTimeout("slow")])
        monkeypatch.setattr(httpx, "post", fake)
        with pytest.raises(LlmTimeout):
            HttpProvider().complete("p", LlmConfig(timeout=0.01))
        assert fake.calls == 2

    def test_timeout_then_success(self, monkeypatch):
        fake = _FakePost([
            httpx.ConnectTimeout("slow"),
            _response(200, {"choices": [{"message": {"content": "ok"}}]}),
        ])
        monkeypatch.setattr(httpx, "post", fake)
        assert HttpProvider().complete("p", LlmConfig()) == "ok"

    def test_http_error_no_retry(self, monkeypatch):
        fake = _FakePost([_response(404, {"error": "nope"})])
        monkeypatch.setattr(httpx, "post", fake)
        with pytest.raises(LlmHttpError) as err:
            HttpProvider().complete("p", LlmConfig())
        assert err.value.status == 404
        assert fake.calls == 1

    def test_empty_content(self, monkeypatch):
        fake = _FakePost([_response(200, {"choices": [{"message": {"content": ""}}]})])
        monkeypatch.setattr(httpx, "post", fake)
        with pytest.raises(EmptyCompletion):
            complete("p", LlmConfig(), "http")
