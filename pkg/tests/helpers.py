"""Builders shared across the test modules."""

import numpy as np

from accentcraft.models.phonemes import validate_inventory
from accentcraft.models.utterance import AlignedUtterance

WILL_LINE = "W IH1 L | d:10,7,7 | p:5.3,5.3,5.2 | e:0.8,3.6,3.1"
V_WILL_LINE = "V IH1 L | d:10,7,7 | p:5.3,5.3,5.2 | e:0.8,3.6,3.1"
SAMPLE_RATE = 22050


def make_utterance(tokens, durations=None, pitch=None, energy=None):
    """Utterance over the given tokens with simple, distinct prosody."""
    if isinstance(tokens, str):
        tokens = tokens.split()
    n = len(tokens)
    return AlignedUtterance.build(
        validate_inventory(tokens),
        durations or [5 + i % 4 for i in range(n)],
        pitch or [5.0 + 0.01 * i for i in range(n)],
        energy or [1.0 + 0.1 * (i % 5) for i in range(n)],
    )


def sine(frequency, seconds=1.0, amplitude=1.0, sample_rate=SAMPLE_RATE):
    t = np.arange(int(round(seconds * sample_rate))) / sample_rate
    return amplitude * np.sin(2 * np.pi * frequency * t)


def entry(utterance_id, role, speaker="TNI", accent="indian", **extra):
    data = {"utterance_id": utterance_id, "speaker_id": speaker,
            "accent_label": accent, "role": role}
    data.update(extra)
    return data


def corpus_entries(speaker="TNI", accent="indian", n_reference=15, n_train=120,
                   n_synth=520, n_eval=10, n_pcl=0):
    """A clean single-speaker corpus: ranked pool, training, synthetic and eval sets."""
    prefix = speaker.lower()
    entries = [entry(f"{prefix}_ref{i:03d}", "reference_pool", speaker, accent, pool_rank=i + 1)
               for i in range(n_reference)]
    entries += [entry(f"{prefix}_train{i:03d}", "adaptation_train", speaker, accent,
                      text=f"training sentence {prefix} {i}")
                for i in range(n_train)]
    entries += [entry(f"{prefix}_pcl{i:03d}", "adaptation_train", speaker, accent,
                      text=f"annotated sentence {prefix} {i}",
                      paths={"pcl_phonemes": f"pcl/{prefix}_{i}.txt"})
                for i in range(n_pcl)]
    entries += [entry(f"{prefix}_syn{i:03d}", "synthetic", speaker, accent)
                for i in range(n_synth)]
    entries += [entry(f"{prefix}_eval{i:03d}", "eval", speaker, accent,
                      text=f"evaluation sentence {prefix} {i}")
                for i in range(n_eval)]
    return entries

# MFA-style long-format TextGrid for a 0.5 s "will"
TEXTGRID = '''File type = "ooTextFile"
Object class = "TextGrid"

xmin = 0
xmax = 0.5
tiers? <exists>
size = 2
item []:
    item [1]:
        class = "IntervalTier"
        name = "words"
        xmin = 0
        xmax = 0.5
        intervals: size = 2
        intervals [1]:
            xmin = 0
            xmax = 0.05
            text = ""
        intervals [2]:
            xmin = 0.05
            xmax = 0.5
            text = "will"
    item [2]:
        class = "IntervalTier"
        name = "phones"
        xmin = 0
        xmax = 0.5
        intervals: size = 4
        intervals [1]:
            xmin = 0
            xmax = 0.05
            text = "sil"
        intervals [2]:
            xmin = 0.05
            xmax = 0.2
            text = "W"
        intervals [3]:
            xmin = 0.2
            xmax = 0.35
            text = "IH1"
        intervals [4]:
            xmin = 0.35
            xmax = 0.5
            text = "L"
'''
