"""Smoke test for the fqn_probe_py extension module.

Run after installing the bindings:  python crates/python/python/smoke_test.py
"""

import pathlib
import sys

import fqn_probe_py as fp

FIXTURE = pathlib.Path(__file__).resolve().parents[2] / "core" / "tests" / "fixtures" / "desk_corpus.jsonl"


def main() -> int:
    hits = {(h.simple_name, h.kind) for h in fp.scan("File f = new File(p);\nString s = br.readLine().trim();\n")}
    assert hits == {
        ("File", "decl"),
        ("File()", "inst"),
        ("String", "decl"),
        ("br", "recv"),
        ("readLine()", "member"),
    }, hits
    assert fp.scan("int x = 3;") == []

    assert fp.normalize_fqn("java.util.List<String>") == "java.util.List<>"
    assert fp.normalize_fqn("java.util.Map$Entry") == "java.util.Map.Entry"
    assert fp.prediction(None) == fp.FAILURE_MARKER
    assert fp.prediction(' "java.io.File"\nrest') == "java.io.File"
    assert fp.is_correct("java.io.File", "java.io.File")

    suite = fp.PromptConfig.ablation_suite()
    assert [name for name, _ in suite][:2] == ["basic", "best"]
    assert len({c.config_id for _, c in suite}) == 9
    best = fp.PromptConfig.best().with_seed(7)
    assert fp.PromptConfig.from_json(best.to_json()).config_id == best.config_id
    assert fp.PromptConfig.basic().render_query("br") == '// the fully qualified name of "br" is'

    corpus = fp.Corpus.load(str(FIXTURE))
    assert len(corpus) == 20 and corpus.pair_count == 248
    sid = corpus.snippet_ids()[0]
    name, gold, _, _ = corpus.pairs(sid)[0]
    assert corpus.fqn_stats(gold)["length_tokens"] >= 2

    oracle = fp.Backend.oracle(corpus)
    for shot in fp.SHOTS:
        text = corpus.compose(sid, name, shot, best)
        assert fp.is_correct(fp.prediction(oracle.complete(text, snippet_id=sid)), gold), shot

    sim = fp.Backend.stochastic(corpus, seed=1)
    text = corpus.compose(sid, name, "zero")
    draws = [sim.complete(text, snippet_id=sid, key=str(i)) for i in range(50)]
    assert draws == [sim.complete(text, snippet_id=sid, key=str(i)) for i in range(50)]

    assert fp.similarity("a.b(c);", "a.b(c);") == 1.0
    picked = corpus.sample(seed=3)
    assert picked and set(picked) <= set(corpus.snippet_ids())

    v = fp.accuracy_variants(
        [("s", "N", "p.N", "p.N"), ("s", "N", "p.N", "q.N"), ("s", "N", "p.N", "q.N"), ("s", "M", "p.M", "p.M")]
    )
    assert v["any_correct"] == 100.0 and v["majority_win"] == 50.0 and v["instances"] == 4, v

    assert fp.recall_probability("a.b.C", 1_000_000, "zero") > 0.95
    assert fp.recall_probability("a.b.C", 1, "zero") < fp.recall_probability("a.b.C", 1, "few-loo")

    print("fqn_probe_py smoke test passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
