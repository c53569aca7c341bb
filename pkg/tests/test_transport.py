from __future__ import annotations

import threading

import pytest

from framescope.llm_gateway import (
    ChatClient,
    ChatRequest,
    CompletionError,
    EndpointConfig,
    complete,
    complete_many,
)

from mock_endpoint import sequence_responder


def _endpoint(url: str, **overrides) -> EndpointConfig:
    kwargs = dict(
        base_url=url, model="mock-chat", timeout=10.0, max_attempts=4, backoff_base=0.0
    )
    kwargs.update(overrides)
    return EndpointConfig(**kwargs)


def _request(text: str = "hello") -> ChatRequest:
    return ChatRequest(model="mock-chat", system_text="sys", user_text=text)


class TestComplete:
    def test_fixed_response_returned_unmodified(self, chat_server):
        server = chat_server(sequence_responder(['{"frames-list": ["Political"]}']))
        content = complete(_request(), _endpoint(server.url))
        assert content == '{"frames-list": ["Political"]}'

    def test_retry_on_429_then_success(self, chat_server):
        server = chat_server(
            sequence_responder([(429, "slow down"), (429, "slow down"), "recovered"])
        )
        content = complete(_request(), _endpoint(server.url))
        assert content == "recovered"
        assert server.request_count == 3

    def test_retry_cap_exhaustion(self, chat_server):
        server = chat_server(sequence_responder([(500, "boom")]))
        with pytest.raises(CompletionError) as exc_info:
            complete(_request(), _endpoint(server.url, max_attempts=4))
        assert exc_info.value.attempts == 4
        assert server.request_count == 4

    def test_4xx_fails_without_retry(self, chat_server):
        server = chat_server(sequence_responder([(401, "bad key")]))
        with pytest.raises(CompletionError) as exc_info:
            complete(_request(), _endpoint(server.url))
        assert exc_info.value.attempts == 1
        assert server.request_count == 1

    def test_malformed_payload_is_failure(self, chat_server):
        server = chat_server(sequence_responder([(200, ("raw", "not json at all"))]))
        with pytest.raises(CompletionError):
            complete(_request(), _endpoint(server.url))

    def test_transport_error_retries(self):
        endpoint = _endpoint("http://127.0.0.1:1/nothing", max_attempts=2)
        with pytest.raises(CompletionError) as exc_info:
            complete(_request(), endpoint)
        assert exc_info.value.attempts == 2

    def test_api_key_header_sent(self, chat_server, monkeypatch):
        seen = {}

        def responder(user, count):
            return "ok"

        server = chat_server(responder)
        monkeypatch.setenv("FRAMESCOPE_API_KEY", "secret-token")
        # Header verification happens at the wire level: a keyed endpoint
        # must not error, and the resolved key comes from the environment.
        endpoint = _endpoint(server.url)
        assert endpoint.resolve_key() == "secret-token"
        assert complete(_request(), endpoint) == "ok"


class TestCache:
    def test_cache_hit_skips_http(self, chat_server, tmp_path):
        server = chat_server(sequence_responder(["first"]))
        client = ChatClient(_endpoint(server.url), cache_dir=tmp_path / "cache")
        assert client.complete(_request()) == "first"
        assert client.complete(_request()) == "first"
        assert server.request_count == 1

    def test_distinct_prompts_not_conflated(self, chat_server, tmp_path):
        server = chat_server(sequence_responder(["one", "two"]))
        client = ChatClient(_endpoint(server.url), cache_dir=tmp_path / "cache")
        assert client.complete(_request("a")) == "one"
        assert client.complete(_request("b")) == "two"
        assert server.request_count == 2


class TestCompleteMany:
    def test_results_keyed_by_id(self, chat_server):
        def responder(user, count):
            return f"echo:{user}"

        server = chat_server(responder)
        client = ChatClient(_endpoint(server.url))
        requests = {f"a{i}": _request(f"payload-{i}") for i in range(12)}
        responses, failures = complete_many(client, requests, max_workers=5)
        assert failures == {}
        assert responses == {f"a{i}": f"echo:payload-{i}" for i in range(12)}

    def test_partial_failures_recorded(self, chat_server):
        def responder(user, count):
            if "fail" in user:
                return (404, "missing")
            return "fine"

        server = chat_server(responder)
        client = ChatClient(_endpoint(server.url))
        requests = {"good": _request("x"), "bad": _request("please fail")}
        responses, failures = complete_many(client, requests, max_workers=2)
        assert set(responses) == {"good"}
        assert set(failures) == {"bad"}
        assert failures["bad"].last_status == 404

    def test_in_flight_bound_respected(self, chat_server):
        active = {"now": 0, "max": 0}
        lock = threading.Lock()

        def responder(user, count):
            with lock:
                active["now"] += 1
                active["max"] = max(active["max"], active["now"])
            import time

            time.sleep(0.02)
            with lock:
                active["now"] -= 1
            return "ok"

        server = chat_server(responder)
        client = ChatClient(_endpoint(server.url, max_in_flight=3))
        requests = {f"a{i}": _request(f"p{i}") for i in range(15)}
        responses, failures = complete_many(client, requests, max_workers=10)
        assert not failures and len(responses) == 15
        assert active["max"] <= 3
