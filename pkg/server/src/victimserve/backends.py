"""Model backends: the mock rule classifier and transformer-based serving.

A backend exposes probability rows (wire label order, benign first), optional
masked-LM suggestions, and optional sentence encodings. Transformer support
imports lazily so mock mode runs without torch installed.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import rule as rule_mod

MAX_TOKENS = 128


@dataclass
class ServedModel:
    task: str  # binary | multiclass | multilabel
    labels: list[str]
    mode: str
    classify_fn: object
    mlm_fn: object | None = None
    encode_fn: object | None = None

    def predict(self, texts: list[str]) -> list[list[float]]:
        return [self.classify_fn(t) for t in texts]

    def mlm(self, text: str, mask_index: int, top_k: int) -> list[str]:
        if self.mlm_fn is None:
            raise CapabilityMissing("this server has no masked-LM model")
        return self.mlm_fn(text, mask_index, top_k)

    def encode(self, texts: list[str]) -> list[list[float]]:
        if self.encode_fn is None:
            raise CapabilityMissing("this server has no sentence encoder")
        return [self.encode_fn(t) for t in texts]


class CapabilityMissing(Exception):
    pass


def mock_model(rule_path: str | None = None) -> ServedModel:
    rule = rule_mod.load_rule(rule_path)
    return ServedModel(
        task="multiclass",
        labels=list(rule["labels"]),
        mode="mock",
        classify_fn=lambda text: rule_mod.classify(rule, text),
        mlm_fn=lambda text, idx, k: rule_mod.mlm_candidates(rule, text, idx, k),
        encode_fn=lambda text: rule_mod.encode(rule, text),
    )


def transformer_model(
    model_path: str,
    task: str,
    labels: list[str],
    permutation: list[int] | None = None,
    mlm_path: str | None = None,
    encoder_path: str | None = None,
) -> ServedModel:
    """Serve a sequence-classification checkpoint; ``permutation[i]`` is the
    model-output column for wire label i, so benign can be forced to index 0
    regardless of checkpoint label order."""
    import torch  # noqa: F401  (fail early if extras are missing)
    from transformers import pipeline

    if permutation is None:
        permutation = list(range(len(labels)))
    if sorted(permutation) != list(range(len(labels))):
        raise ValueError("permutation must reorder exactly the label indices")

    classifier = pipeline("text-classification", model=model_path,
                          tokenizer=model_path, top_k=None)
    multilabel = task == "multilabel"

    def classify_fn(text: str) -> list[float]:
        outputs = classifier(text, truncation=True, max_length=MAX_TOKENS,
                             function_to_apply="sigmoid" if multilabel else "softmax")
        scores = outputs[0] if isinstance(outputs[0], list) else outputs
        by_index = [0.0] * len(labels)
        for entry in scores:
            # transformers labels come back as LABEL_<i> or the config name
            name = entry["label"]
            idx = int(name.split("_")[-1]) if name.upper().startswith("LABEL_") \
                else classifier.model.config.label2id[name]
            by_index[idx] = float(entry["score"])
        return [by_index[permutation[i]] for i in range(len(labels))]

    mlm_fn = None
    if mlm_path:
        fill = pipeline("fill-mask", model=mlm_path, tokenizer=mlm_path)

        def mlm_fn(text: str, mask_index: int, top_k: int) -> list[str]:
            word = rule_mod.word_at(text, mask_index)
            if word is None:
                return []
            masked = text.replace(word, fill.tokenizer.mask_token, 1)
            outputs = fill(masked, top_k=top_k + 1)
            tokens = [o["token_str"].strip() for o in outputs]
            return [t for t in tokens if t and t.lower() != word.lower()][:top_k]

    encode_fn = None
    if encoder_path:
        import torch
        from transformers import AutoModel, AutoTokenizer

        tok = AutoTokenizer.from_pretrained(encoder_path)
        enc = AutoModel.from_pretrained(encoder_path)
        enc.eval()

        def encode_fn(text: str) -> list[float]:
            with torch.no_grad():
                batch = tok(text, truncation=True, max_length=MAX_TOKENS,
                            return_tensors="pt")
                hidden = enc(**batch).last_hidden_state[0]
                mask = batch["attention_mask"][0].unsqueeze(-1)
                pooled = (hidden * mask).sum(0) / mask.sum()
            return [float(x) for x in pooled]

    return ServedModel(task=task, labels=list(labels), mode="transformer",
                       classify_fn=classify_fn, mlm_fn=mlm_fn,
                       encode_fn=encode_fn)
