"""Encoder-decoder wrapper: tokenize, beam-decode, single optimizer steps.

Two model sources share one interface:

- a pretrained checkpoint name, loaded through `transformers` with its own
  subword tokenizer (the full-scale setting), or
- the reserved name "tiny": a small randomly initialized BART over raw
  bytes, which needs no downloads and keeps the test suite offline.
"""

from __future__ import annotations

import torch
from transformers import BartConfig, BartForConditionalGeneration

from .config import TINY_MODEL, SidecarConfig

PAD_ID = 0
BOS_ID = 1
EOS_ID = 2
BYTE_OFFSET = 3


class ByteTokenizer:
    """Byte-level tokenizer for the offline tiny model; no OOV possible."""

    vocab_size = BYTE_OFFSET + 256

    def __init__(self, max_length: int):
        self.max_length = max_length

    def batch_encode(self, texts: list[str]) -> tuple[torch.Tensor,
                                                      torch.Tensor]:
        rows = []
        for text in texts:
            body = [BYTE_OFFSET + b
                    for b in text.encode("utf-8")[:self.max_length]]
            rows.append([BOS_ID] + body + [EOS_ID])
        width = max(len(r) for r in rows)
        ids = torch.full((len(rows), width), PAD_ID, dtype=torch.long)
        mask = torch.zeros((len(rows), width), dtype=torch.long)
        for i, row in enumerate(rows):
            ids[i, :len(row)] = torch.tensor(row)
            mask[i, :len(row)] = 1
        return ids, mask

    def batch_decode(self, ids: torch.Tensor) -> list[str]:
        texts = []
        for row in ids.tolist():
            data = bytes(t - BYTE_OFFSET for t in row if t >= BYTE_OFFSET)
            texts.append(data.decode("utf-8", errors="replace"))
        return texts


def _tiny_model(max_length: int) -> BartForConditionalGeneration:
    config = BartConfig(
        vocab_size=ByteTokenizer.vocab_size,
        d_model=32,
        encoder_layers=1, decoder_layers=1,
        encoder_attention_heads=2, decoder_attention_heads=2,
        encoder_ffn_dim=64, decoder_ffn_dim=64,
        max_position_embeddings=4 * max_length + 8,
        pad_token_id=PAD_ID, bos_token_id=BOS_ID, eos_token_id=EOS_ID,
        decoder_start_token_id=EOS_ID, forced_eos_token_id=EOS_ID,
    )
    return BartForConditionalGeneration(config)


class SidecarModel:
    def __init__(self, cfg: SidecarConfig):
        self.cfg = cfg
        torch.manual_seed(cfg.seed)
        if cfg.model == TINY_MODEL:
            self.tokenizer = ByteTokenizer(cfg.max_length)
            self.model = _tiny_model(cfg.max_length)
        else:
            from transformers import AutoModelForSeq2SeqLM, AutoTokenizer
            self._hf_tokenizer = AutoTokenizer.from_pretrained(cfg.model)
            self.tokenizer = self  # uses the batch_* methods below
            self.model = AutoModelForSeq2SeqLM.from_pretrained(cfg.model)
        self.model.to(cfg.device)
        self.optimizer = torch.optim.Adam(self.model.parameters(), lr=cfg.lr)

    # subword tokenizer adapters (pretrained path only)
    def batch_encode(self, texts):
        enc = self._hf_tokenizer(texts, truncation=True, padding=True,
                                 max_length=self.cfg.max_length,
                                 return_tensors="pt")
        return enc["input_ids"], enc["attention_mask"]

    def batch_decode(self, ids):
        return self._hf_tokenizer.batch_decode(ids, skip_special_tokens=True)

    @torch.no_grad()
    def generate(self, texts: list[str], beam: int = 5,
                 sample: bool = False) -> list[str]:
        if not texts:
            return []
        self.model.eval()
        ids, mask = self.tokenizer.batch_encode(texts)
        out = self.model.generate(
            input_ids=ids.to(self.cfg.device),
            attention_mask=mask.to(self.cfg.device),
            num_beams=max(1, beam), do_sample=sample,
            max_new_tokens=self.cfg.max_length + 2)
        return self.tokenizer.batch_decode(out.cpu())

    def train_step(self, sources: list[str], targets: list[str]) -> float:
        self.model.train()
        src_ids, src_mask = self.tokenizer.batch_encode(sources)
        tgt_ids, _ = self.tokenizer.batch_encode(targets)
        pad_id = self.model.config.pad_token_id
        labels = tgt_ids.masked_fill(tgt_ids == pad_id, -100)
        out = self.model(input_ids=src_ids.to(self.cfg.device),
                         attention_mask=src_mask.to(self.cfg.device),
                         labels=labels.to(self.cfg.device))
        self.optimizer.zero_grad()
        out.loss.backward()
        self.optimizer.step()
        return float(out.loss.detach())

    def _ckpt(self, tag: str):
        self.cfg.checkpoint_dir.mkdir(parents=True, exist_ok=True)
        return self.cfg.checkpoint_dir / f"model-{tag}.pt"

    def save(self, tag: str) -> None:
        torch.save(self.model.state_dict(), self._ckpt(tag))

    def load(self, tag: str) -> None:
        state = torch.load(self._ckpt(tag), map_location=self.cfg.device)
        self.model.load_state_dict(state)
