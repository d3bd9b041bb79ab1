"""English to ASL gloss, with the deterministic rule pipeline and the
LLM route's fallback behavior.

Run: python3 demos/04_translate_gloss.py
"""

from signstream import translate_rule_based, translate_via_llm

for sentence in (
    "I am going to the store tomorrow",
    "she wanted a coffee",
    "don't stop learning sign language",
    "the a an",  # stop words only: empty gloss, flagged upstream
):
    gloss = translate_rule_based(sentence)
    print(f"{sentence!r:45} -> {gloss.text() or '(empty)'}")


class OfflineClient:
    """Stands in for a chat-completion endpoint that is down."""

    def complete(self, prompt):
        raise TimeoutError("no network in this demo")


result = translate_via_llm("I am going to the store tomorrow", OfflineClient(),
                           prompt_template="{TEXT}")
print(f"\nLLM route with a dead endpoint still answers: {result.text()}"
      f" (provenance: {result.provenance})")
