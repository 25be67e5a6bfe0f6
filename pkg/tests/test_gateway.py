import json

import pytest

from logoreveal import gateway as gw


def text_request(text="hello", tag="caption", **kwargs):
    return gw.ChatRequest(
        model="test-model",
        messages=(gw.ChatMessage.user(gw.TextPart(text)),),
        tag=tag,
        **kwargs,
    )


class CountingProvider:
    def __init__(self, response="ok"):
        self.calls = 0
        self.response = response

    def complete(self, req):
        self.calls += 1
        return gw.ChatResponse(text=self.response, provider_id="counting")


class FlakyProvider:
    """Fails with transient errors n times, then succeeds."""

    def __init__(self, failures, exc=None):
        self.failures = failures
        self.calls = 0
        self.exc = exc or gw.ProviderError(429, "slow down")

    def complete(self, req):
        self.calls += 1
        if self.calls <= self.failures:
            raise self.exc
        return gw.ChatResponse(text="finally", provider_id="flaky")


def test_scripted_rule_matching():
    scenario = gw.ScriptedScenario(
        rules=[
            gw.ScenarioRule(response="specific", tag="repair", element_id="a", attempt=2),
            gw.ScenarioRule(response="generic", tag="repair"),
            gw.ScenarioRule(response="caption text", tag="caption"),
        ]
    )
    provider = gw.ScriptedProvider(scenario)
    assert provider.complete(text_request(tag="caption")).text == "caption text"
    assert provider.complete(text_request(tag="repair", element_id="a", attempt=2)).text == "specific"
    assert provider.complete(text_request(tag="repair", element_id="b", attempt=1)).text == "generic"


def test_scripted_first_match_wins_and_strict_miss():
    scenario = gw.ScriptedScenario(
        rules=[gw.ScenarioRule(response="first", tag="caption"), gw.ScenarioRule(response="second", tag="caption")]
    )
    assert gw.ScriptedProvider(scenario).complete(text_request()).text == "first"
    empty = gw.ScriptedProvider(gw.ScriptedScenario(rules=[], strict=True))
    with pytest.raises(gw.ScenarioMiss):
        empty.complete(text_request())
    lenient = gw.ScriptedProvider(gw.ScriptedScenario(rules=[], strict=False))
    assert lenient.complete(text_request()).text == ""


def test_scenario_load_with_response_file(tmp_path):
    (tmp_path / "reply.txt").write_text("from file", encoding="utf-8")
    (tmp_path / "scenario.json").write_text(
        json.dumps(
            {
                "rules": [
                    {"match": {"tag": "concept", "sample_index": 1}, "response_file": "reply.txt"},
                    {"match": {"tag": "concept"}, "response": "inline"},
                ]
            }
        ),
        encoding="utf-8",
    )
    scenario = gw.ScriptedScenario.load(tmp_path / "scenario.json")
    provider = gw.ScriptedProvider(scenario)
    assert provider.complete(text_request(tag="concept", sample_index=1)).text == "from file"
    assert provider.complete(text_request(tag="concept", sample_index=0)).text == "inline"


def test_cache_key_sensitivity():
    a = gw.cache_key(text_request("same"))
    assert a == gw.cache_key(text_request("same"))
    assert a != gw.cache_key(text_request("different"))
    img1 = gw.ChatRequest(
        model="m", tag="caption",
        messages=(gw.ChatMessage.user(gw.TextPart("x"), gw.ImagePart(b"png-one")),),
    )
    img2 = gw.ChatRequest(
        model="m", tag="caption",
        messages=(gw.ChatMessage.user(gw.TextPart("x"), gw.ImagePart(b"png-two")),),
    )
    assert gw.cache_key(img1) != gw.cache_key(img2)
    assert gw.cache_key(text_request("same", sample_index=0)) != gw.cache_key(text_request("same", sample_index=1))


def test_cache_replay_skips_provider(tmp_path):
    provider = CountingProvider()
    gateway = gw.Gateway(provider, cache_dir=tmp_path / "cache")
    req = text_request("cache me")
    first = gateway.chat(req)
    second = gateway.chat(req)
    assert first.text == second.text == "ok"
    assert provider.calls == 1
    assert gateway.cache_hits == 1


def test_retry_on_429_then_success():
    provider = FlakyProvider(failures=2)
    sleeps = []
    gateway = gw.Gateway(provider, retries=3, backoff_s=0.01, sleep=sleeps.append)
    resp = gateway.chat(text_request())
    assert resp.text == "finally"
    assert provider.calls == 3
    assert sleeps == [0.01, 0.02]  # exponential backoff


def test_retry_exhaustion_raises():
    provider = FlakyProvider(failures=10)
    gateway = gw.Gateway(provider, retries=2, backoff_s=0, sleep=lambda s: None)
    with pytest.raises(gw.ProviderError):
        gateway.chat(text_request())


def test_non_transient_error_not_retried():
    provider = FlakyProvider(failures=10, exc=gw.ProviderError(400, "bad request"))
    gateway = gw.Gateway(provider, retries=3, backoff_s=0, sleep=lambda s: None)
    with pytest.raises(gw.ProviderError):
        gateway.chat(text_request())
    assert provider.calls == 1


def test_budget_exceeded_on_next_call():
    provider = CountingProvider()
    gateway = gw.Gateway(provider, max_calls=2)
    gateway.chat(text_request("one"))
    gateway.chat(text_request("two"))
    with pytest.raises(gw.BudgetExceeded):
        gateway.chat(text_request("three"))
    assert provider.calls == 2


def test_transcript_records_request_byte_exact(tmp_path):
    transcript = tmp_path / "t.jsonl"
    gateway = gw.Gateway(CountingProvider(), transcript_path=transcript, clock=gw.LogicalClock())
    req = gw.ChatRequest(
        model="m",
        tag="caption",
        messages=(gw.ChatMessage.user(gw.TextPart("prompt text"), gw.ImagePart(b"\x89PNGbytes")),),
    )
    gateway.chat(req)
    record = json.loads(transcript.read_text(encoding="utf-8").splitlines()[0])
    assert record["request"]["messages"][0]["parts"][0]["text"] == "prompt text"
    import base64

    assert base64.b64decode(record["request"]["messages"][0]["parts"][1]["image_png_base64"]) == b"\x89PNGbytes"
    assert record["response"]["text"] == "ok"
    assert record["ts"] == 0.0  # logical clock


def test_replay_provider_reproduces_transcript(tmp_path):
    transcript = tmp_path / "t.jsonl"
    gateway = gw.Gateway(CountingProvider("recorded"), transcript_path=transcript, clock=gw.LogicalClock())
    req = text_request("replay me")
    original = gateway.chat(req).text
    replayer = gw.Gateway(gw.ReplayProvider(transcript))
    assert replayer.chat(req).text == original
    with pytest.raises(gw.ScenarioMiss):
        replayer.chat(text_request("never recorded"))


def test_request_validation():
    with pytest.raises(ValueError):
        gw.ChatRequest(model="m", messages=(), tag="caption")
    with pytest.raises(ValueError):
        text_request(tag="nonsense")
    with pytest.raises(ValueError):
        gw.ImagePart(b"x" * (gw.MAX_IMAGE_BYTES + 1))


def test_logical_clock_is_deterministic():
    a, b = gw.LogicalClock(), gw.LogicalClock()
    assert [a.now() for _ in range(3)] == [b.now() for _ in range(3)] == [0.0, 1.0, 2.0]
