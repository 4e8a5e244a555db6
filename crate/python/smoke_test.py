"""Smoke test for the safe_sse_py extension module.

Build and install first:
    pip install maturin
    maturin build --release -m crates/python/Cargo.toml -o dist
    pip install dist/safe_sse-*.whl
"""

import json

import safe_sse_py as sse


def close(a, b, tol=1e-9):
    return abs(a - b) <= tol


def main():
    game = sse.Game.generate(json.dumps({"family": "exit-pair"}))
    nodes, infosets, leader_seqs, follower_seqs = game.sizes()
    assert nodes > 0 and infosets > 0 and leader_seqs > 1 and follower_seqs > 1
    again = sse.Game.from_json(game.to_json())
    assert again.name == game.name == "exit-pair"

    plan, _ = sse.blueprint(game, "uniform")
    assert len(plan) == leader_seqs
    leader_ev, _ = sse.evaluate(game, plan)
    assert close(leader_ev, 1.75), leader_ev
    assert sse.Plan.from_json(game, plan.to_json()).probs == plan.probs

    value, _, status = sse.full_game_sse(game, time_limit=30.0)
    assert status == "Optimal", status

    spec = {"family": "twostage", "n": 2, "M": 2, "m": 2, "kappa": 0.1, "seed": 3}
    game = sse.Game.generate(json.dumps(spec))
    plan, _ = sse.blueprint(game, "stage-sse")
    out = sse.search(game, plan, scheme="two-stage", time_limit=5.0)
    assert len(out["subgames"]) == 8
    assert out["search_ev"] >= out["blueprint_ev"] - 1e-9
    assert close(sse.evaluate(game, out["plan"])[0], out["search_ev"])

    kuhn = sse.Game.generate(json.dumps({"family": "kuhn"}))
    gad = sse.gadget(kuhn, sse.blueprint(kuhn, "uniform")[0], 0)
    assert "gadget_of" in json.loads(gad.to_json())["metadata"]

    config = {
        "game": {"generate": spec},
        "instances": 2,
        "blueprint": "stage-sse",
        "scheme": "two-stage",
    }
    csv, unsafe = sse.run_config(json.dumps(config))
    assert len(csv.strip().splitlines()) == 3 and not unsafe

    try:
        sse.search(game, plan, scheme="nonsense")
    except ValueError as e:
        assert "unknown scheme" in str(e)
    else:
        raise AssertionError("bad scheme accepted")

    print(f"ok: exit-pair sse {value:.4f}, two-stage {out['blueprint_ev']:.4f} -> {out['search_ev']:.4f}")


if __name__ == "__main__":
    main()
