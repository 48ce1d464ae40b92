import assert from "node:assert/strict";
import { test } from "node:test";

import { applyFault } from "../src/faults.js";
import { makePolicy } from "../src/policies.js";
import { PredictMsg, ResultMsg } from "../src/protocol.js";

function predictMsg(overrides: Partial<PredictMsg> = {}): PredictMsg {
  return {
    type: "predict",
    request_id: "ds/e0/0",
    dataset: "ds",
    step_index: 0,
    observation_vector: [0.1, 0.2],
    images: [],
    instruction: null,
    action_space: {
      signature: "2D (1 grip, 1 pos)",
      dims: [
        { name: "grip", kind: "gripper" },
        { name: "pos", kind: "position" },
      ],
    },
    action_stats: {
      min: [0, 0],
      max: [1, 1],
      mean: [0.5, 0.25],
      q01: [0, 0],
      q99: [1, 1],
      sample_count: 10,
    },
    task_description: null,
    ...overrides,
  };
}

test("replay echoes ground truth in verify mode", () => {
  const policy = makePolicy({ kind: "replay" });
  const reply = policy.predict(predictMsg({ verification_ground_truth: [0.3, 0.7] }), "verify");
  assert.deepEqual(reply, { type: "result", request_id: "ds/e0/0", action: [0.3, 0.7] });
});

test("replay refuses eval mode", () => {
  const policy = makePolicy({ kind: "replay" });
  const reply = policy.predict(predictMsg(), "eval");
  assert.equal(reply.type, "error");
});

test("mean_action returns the per-dimension mean for every step", () => {
  const policy = makePolicy({ kind: "mean_action" });
  for (let i = 0; i < 3; i++) {
    const reply = policy.predict(predictMsg(), "eval") as ResultMsg;
    assert.deepEqual(reply.action, [0.5, 0.25]);
  }
});

test("constant returns its vector", () => {
  const policy = makePolicy({ kind: "constant", constant: [0.9, 0.1] });
  const reply = policy.predict(predictMsg(), "eval") as ResultMsg;
  assert.deepEqual(reply.action, [0.9, 0.1]);
});

test("random_uniform is reproducible per seed and respects dimensions", () => {
  const first = makePolicy({ kind: "random_uniform", seed: 11 });
  const second = makePolicy({ kind: "random_uniform", seed: 11 });
  const replies1 = [1, 2, 3].map(() => (first.predict(predictMsg(), "eval") as ResultMsg).action);
  const replies2 = [1, 2, 3].map(() => (second.predict(predictMsg(), "eval") as ResultMsg).action);
  assert.deepEqual(replies1, replies2);
  for (const action of replies1) {
    assert.equal(action!.length, 2);
    for (const v of action!) {
      assert.ok(v >= 0 && v < 1);
    }
  }
});

test("wrong_length fault answers one extra component", () => {
  const policy = makePolicy({ kind: "mean_action" });
  const outcome = applyFault({ kind: "wrong_length" }, predictMsg(), { answered: 0 }, () =>
    policy.predict(predictMsg(), "eval"),
  );
  assert.equal(outcome.action, "reply");
  if (outcome.action === "reply") {
    assert.equal((outcome.reply as ResultMsg).action!.length, 3);
  }
});

test("text and mixed replies produce prose", () => {
  const policy = makePolicy({ kind: "mean_action" });
  for (const kind of ["text_reply", "mixed_reply"] as const) {
    const outcome = applyFault({ kind }, predictMsg(), { answered: 0 }, () =>
      policy.predict(predictMsg(), "eval"),
    );
    assert.equal(outcome.action, "reply");
    if (outcome.action === "reply") {
      assert.equal(typeof (outcome.reply as ResultMsg).raw_text, "string");
    }
  }
});

test("drop_connection disconnects after N answers", () => {
  const policy = makePolicy({ kind: "mean_action" });
  const state = { answered: 0 };
  const fault = { kind: "drop_connection" as const, dropAfter: 2 };
  const run = () =>
    applyFault(fault, predictMsg(), state, () => policy.predict(predictMsg(), "eval"));
  assert.equal(run().action, "reply");
  assert.equal(run().action, "reply");
  assert.equal(run().action, "disconnect");
});
