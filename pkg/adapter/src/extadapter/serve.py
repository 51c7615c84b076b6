"""Stand-in for an external text generator or TTS engine.

Speaks the caller's line protocols over stdin/stdout: a generation request is
answered with seeded single-swap shuffles of the request corpus, a synthesis
request with a rising-tone WAV at 40 ms per character. The behaviors are
deliberately simple; what matters is the protocol surface, so a real model
wrapper can replace this process without the caller noticing.
"""

import argparse
import array
import json
import math
import random
import re
import sys
import wave

SAMPLE_RATE = 16000
MS_PER_CHAR = 40
SWEEP_LO_HZ = 220.0
SWEEP_HI_HZ = 880.0
PEAK_AMPLITUDE = 0.25  # of int16 full scale

# bracketed slot labels travel as single tokens
_TOKEN = re.compile(r"<[^>]*>|\S+")


def shuffled_template(line: str, rng: random.Random) -> str:
    """One template copy with a single random position swap."""
    tokens = _TOKEN.findall(line)
    if len(tokens) >= 2:
        i, j = rng.sample(range(len(tokens)), 2)
        tokens[i], tokens[j] = tokens[j], tokens[i]
    return " ".join(tokens)


def serve_generate(request: dict, rng: random.Random, out) -> None:
    """Emit `count` shuffled templates sampled from the request corpus."""
    corpus = [str(s) for s in request["corpus"]]
    count = int(request["count"])
    if count < 0:
        raise ValueError("count must be >= 0")
    if count > 0 and not corpus:
        raise ValueError("empty corpus")
    for _ in range(count):
        line = rng.choice(corpus)
        message = {"template": shuffled_template(line, rng)}
        print(json.dumps(message, ensure_ascii=False), file=out, flush=True)
    print(json.dumps({"done": True}), file=out, flush=True)


def synth_sweep(n_chars: int) -> array.array:
    """Linear chirp spanning the clip, 40 ms of audio per character."""
    n = n_chars * MS_PER_CHAR * SAMPLE_RATE // 1000
    duration = n / SAMPLE_RATE
    peak = PEAK_AMPLITUDE * 32767.0
    rate = SWEEP_HI_HZ - SWEEP_LO_HZ
    samples = array.array("h")
    for t in range(n):
        sec = t / SAMPLE_RATE
        phase = 2.0 * math.pi * (SWEEP_LO_HZ * sec + rate * sec * sec / (2.0 * duration))
        samples.append(int(peak * math.sin(phase)))
    return samples


def serve_tts(request: dict, out) -> None:
    """Write a canonical 16 kHz mono 16-bit WAV and answer one status line."""
    text = str(request.get("text", ""))
    out_path = request.get("out")
    if not text:
        print(json.dumps({"ok": False, "error": "empty text"}), file=out, flush=True)
        return
    if not out_path:
        print(json.dumps({"ok": False, "error": "missing out path"}), file=out, flush=True)
        return
    samples = synth_sweep(len(text))
    if sys.byteorder == "big":
        samples.byteswap()
    try:
        with open(out_path, "wb") as raw, wave.open(raw, "wb") as fh:
            fh.setnchannels(1)
            fh.setsampwidth(2)
            fh.setframerate(SAMPLE_RATE)
            fh.writeframes(samples.tobytes())
    except OSError as exc:
        print(json.dumps({"ok": False, "error": str(exc)}), file=out, flush=True)
        return
    message = {
        "ok": True,
        "out": str(out_path),
        "duration_ms": len(samples) * 1000 // SAMPLE_RATE,
    }
    print(json.dumps(message, ensure_ascii=False), file=out, flush=True)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="adapter", description=__doc__)
    parser.add_argument("--mode", choices=("generate", "tts"), required=True)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    rng = random.Random(args.seed)
    for raw in sys.stdin:
        if not raw.strip():
            continue
        try:
            request = json.loads(raw)
            if not isinstance(request, dict) or request.get("cmd") != args.mode:
                raise ValueError(f"expected a {args.mode!r} request")
            if args.mode == "generate":
                serve_generate(request, rng, sys.stdout)
            else:
                serve_tts(request, sys.stdout)
        except (ValueError, KeyError, TypeError) as exc:
            print(json.dumps({"error": str(exc)}), flush=True)
            return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
