"""Text rewriting used while splicing: fusing transitions with new content,
regenerating answers, and producing interjected questions.

The identity rewriter is deterministic template substitution so the whole
pipeline can run offline and reproducibly. The remote rewriter delegates to
a chat-completions endpoint for natural phrasings.
"""

from __future__ import annotations

import abc
import json
import logging
import os

import httpx

from ..slicing import normalize_ws

logger = logging.getLogger(__name__)

FUSE_PROMPT = (
    "Fuse the two sentences smoothly and replace [topic] with the topic of "
    "sentence two.\n"
    "\n"
    'Sentence one: "{sentence_a}"\n'
    "\n"
    'Sentence two: "{sentence_b}"\n'
    "\n"
    "Give me your answer only, no other words. Give me your answer only, no other words."
)

TOPIC_PLACEHOLDER = "[topic]"


class Rewriter(abc.ABC):
    """Produces the spliced text the constructions need."""

    @abc.abstractmethod
    def fuse(self, sentence_a: str, sentence_b: str) -> str:
        """Blend a transition sentence with new content into one user message."""

    @abc.abstractmethod
    def respond(self, query: str) -> str:
        """A fresh assistant answer to a restated query."""

    @abc.abstractmethod
    def question(self, statement: str) -> str:
        """A user question interjected about a partial assistant statement."""

    @abc.abstractmethod
    def answer(self, question: str) -> str:
        """A short assistant answer to an interjected question."""


class IdentityRewriter(Rewriter):
    """Deterministic, offline substitution; identical inputs give identical outputs."""

    def fuse(self, sentence_a: str, sentence_b: str) -> str:
        a = normalize_ws(sentence_a)
        b = normalize_ws(sentence_b)
        if not a:
            return b
        if TOPIC_PLACEHOLDER in a:
            return a.replace(TOPIC_PLACEHOLDER, b)
        return f"{a} {b}"

    def respond(self, query: str) -> str:
        q = normalize_ws(query)
        return (
            f"Let me take another pass at this. You said: {q} "
            "Here is a cleaner answer that addresses exactly that and nothing else."
        )

    def question(self, statement: str) -> str:
        tail = " ".join(normalize_ws(statement).split()[-4:])
        return f'Hold on, what exactly do you mean by "{tail}"?'

    def answer(self, question: str) -> str:
        return (
            "Good question: it means just what it says in context, "
            "nothing more specific than that. Now, back to what I was saying."
        )


class RemoteRewriter(Rewriter):
    """Delegates each rewrite to an OpenAI-style chat endpoint (non-streaming)."""

    def __init__(
        self,
        endpoint: str,
        model: str = "",
        auth_env: str = "",
        timeout_s: float = 30.0,
        transport: httpx.BaseTransport | None = None,
    ) -> None:
        if not endpoint:
            raise ValueError("endpoint is required")
        self.endpoint = endpoint
        self.model = model
        self.auth_env = auth_env
        self.timeout_s = timeout_s
        self._transport = transport

    def _complete(self, prompt: str) -> str:
        headers = {"content-type": "application/json"}
        if self.auth_env:
            token = os.environ.get(self.auth_env, "")
            if token:
                headers["authorization"] = f"Bearer {token}"
        payload = {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "stream": False,
        }
        with httpx.Client(timeout=self.timeout_s, transport=self._transport) as client:
            response = client.post(self.endpoint, json=payload, headers=headers)
            response.raise_for_status()
            body = response.json()
        try:
            text = body["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise ValueError(f"unexpected completion shape: {json.dumps(body)[:200]}") from exc
        return normalize_ws(text)

    def fuse(self, sentence_a: str, sentence_b: str) -> str:
        if not sentence_a.strip():
            return normalize_ws(sentence_b)
        prompt = FUSE_PROMPT.format(sentence_a=sentence_a, sentence_b=sentence_b)
        return self._complete(prompt)

    def respond(self, query: str) -> str:
        return self._complete(f"Answer the following query concisely.\n\n{query}")

    def question(self, statement: str) -> str:
        return self._complete(
            "Write one short follow-up question a listener might interject "
            f"while hearing this unfinished statement.\n\n{statement}"
        )

    def answer(self, question: str) -> str:
        return self._complete(
            "Give a one-sentence answer, then say you are returning to the "
            f"previous point.\n\n{question}"
        )
