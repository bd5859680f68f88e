"""Smoke test for the ckmc extension module. Run after installing crates/py."""

import json

import ckmc


def main():
    assert "muddy_children" in ckmc.scenario_names()

    answers = ckmc.muddy_answers(3)
    for run, rounds in answers.items():
        muddy = [c == "1" for c in run[1:]]
        k = sum(muddy)
        if k:
            assert rounds[k - 1] == muddy, (run, rounds)
            assert not any(any(r) for r in rounds[: k - 1]), (run, rounds)

    m = ckmc.scenario("coordinated_attack", k_legs=2)
    report = m.verify()
    assert report["passed"], report
    sys = m.system
    assert sys.eval("C{0,1} both_attack") == []
    assert len(sys.points()) == len(sys.run_ids) * (sys.horizon + 1)
    assert all(c["status"] != "fail" for c in sys.axioms(props=["sent_1"]))

    again = ckmc.Manifest.from_json(m.to_json())
    assert again.verify()["passed"]
    assert json.loads(sys.to_json())["schema"] == 1

    r = ckmc.scenario("r2d2", eps=2)
    assert r.verify()["passed"]
    r0 = r.system
    assert not r0.holds("C{0,1} sent_m", "r0@3")

    assert ckmc.parse_formula("C{0,1}p") == "C{0,1} p"
    assert "nu" in ckmc.expand_fixpoints("C{0,1} p")
    try:
        ckmc.parse_formula("K0 (p")
    except ValueError as e:
        assert "position" in str(e)
    else:
        raise AssertionError("bad formula parsed")

    g = ckmc.generate_runs("handshake", "not_guaranteed", 1, 1, 2, 4, param=2)
    assert g.check("ng1")["passed"] and g.check("ng2")["passed"]
    g = g.with_prop("early", [f"{run}@0" for run in g.run_ids])
    assert sorted(g.eval("early")) == sorted(f"{run}@0" for run in g.run_ids)
    assert g.graph([0]).startswith("graph indist {")

    print("smoke test passed:", m, sys)


if __name__ == "__main__":
    main()
