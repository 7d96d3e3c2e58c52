"""Smoke test for the teachlens Python extension.

Build and install first:
    pip install --no-build-isolation -e crates/py
then run:
    python crates/py/python/smoke_test.py
"""

import json
import math
import tempfile
from pathlib import Path

import teachlens

SR = 16_000


def tone(hz, seconds, gain=0.5):
    return [gain * math.sin(2 * math.pi * hz * i / SR) for i in range(int(seconds * SR))]


def main():
    print("teachlens", teachlens.__version__)
    assert set(teachlens.scenarios()) == {"stationary", "crossing", "exit_reentry", "lecture_audio"}

    audio = [0.0] * SR + tone(220.0, 1.0) + [0.0] * SR
    utts = teachlens.segment_utterances(audio, SR)
    assert len(utts) == 1, utts
    start, end = utts[0]
    assert abs(start - 1.0) < 0.03 and abs(end - 2.0) < 0.03, utts[0]

    f0 = teachlens.estimate_pitch(audio, SR, [1.3, 1.5, 1.7, 0.5])
    assert all(abs(f - 220.0) <= 2.0 for f in f0[:3]), f0
    assert f0[3] is None

    score, weights = teachlens.score_reciprocal_std_weights([80.0, 50.0, 20.0], [1.0, 2.0, 4.0])
    assert [round(w * 7, 12) for w in weights] == [4.0, 2.0, 1.0]
    assert teachlens.score_equal_weights([10.0, 20.0, 30.0]) == 20.0
    assert teachlens.normalize_feature(140.0, 0.0, 300.0, target=140.0, tolerance=40.0) == 100.0

    verdicts = json.loads(teachlens.classify_style(speaking_rate_wpm=140.0, clarity=0.8, monotony=0.3))
    assert verdicts["speaking_rate"] == "within"
    assert verdicts["clarity"] == "optimal"
    assert verdicts["monotony"] == "monotonous"

    assert teachlens.point_in_polygon(0.5, 0.5, [(0, 0), (1, 0), (1, 1), (0, 1)])
    ratio = json.loads(teachlens.speak_pause_ratio([(0.0, 40.0)], 60.0))
    assert ratio["ratio"] == 2.0

    config = teachlens.AnalysisConfig()
    config.set("windows.fine_seconds=20")
    assert json.loads(config.to_json())["windows"]["fine_seconds"] == 20.0
    try:
        config.set("windows.nope=1")
    except ValueError:
        pass
    else:
        raise AssertionError("unknown config key accepted")

    with tempfile.TemporaryDirectory() as tmp:
        session = Path(tmp) / "lecture"
        truth = json.loads(teachlens.generate_session("lecture_audio", str(session), seed=3))
        assert truth["bursts"]
        findings, _warnings = teachlens.validate_session(str(session))
        assert findings == [], findings

        out = Path(tmp) / "out"
        summary = json.loads(teachlens.analyze_session(str(session), config, out_dir=str(out)))
        assert summary["duration"] == 130.0
        assert len(summary["windows"]["fine"]) == 7
        assert json.loads((out / "summary.json").read_text()) == summary
        print("speaking rate %.1f wpm, %d events" % (summary["speaking_style"]["metrics"]["speaking_rate_wpm"], summary["timeline"]["event_count"]))

        try:
            teachlens.analyze_session(str(Path(tmp) / "missing"))
        except FileNotFoundError:
            pass
        else:
            raise AssertionError("missing manifest not reported")

    print("smoke test passed")


if __name__ == "__main__":
    main()
