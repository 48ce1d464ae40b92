import assert from "node:assert/strict";
import { test } from "node:test";

import { makeTextModelPolicy } from "../src/model-wrapper-stub.js";
import { PredictMsg, ResultMsg } from "../src/protocol.js";

function predictMsg(prompt?: string): PredictMsg {
  return {
    type: "predict",
    request_id: "ds/e0/0",
    dataset: "ds",
    step_index: 0,
    observation_vector: [0.1],
    images: [],
    instruction: "close the drawer",
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
      sample_count: 3,
    },
    task_description: null,
    prompt_payload: prompt,
  };
}

test("stub forwards the prompt payload verbatim to the completion hook", async () => {
  let seen = "";
  const policy = makeTextModelPolicy(async (prompt) => {
    seen = prompt;
    return "[0.1, 0.2]";
  });
  const reply = (await policy.predict(predictMsg("## STATE\n..."))) as ResultMsg;
  assert.equal(seen, "## STATE\n...");
  assert.equal(reply.raw_text, "[0.1, 0.2]");
});

test("stub answers the statistics mean when no model is wired in", async () => {
  const policy = makeTextModelPolicy();
  const reply = (await policy.predict(predictMsg("prompt"))) as ResultMsg;
  assert.equal(reply.raw_text, "[0.5, 0.25]");
});

test("stub reports an error when the prompt is missing", async () => {
  const policy = makeTextModelPolicy();
  const reply = await policy.predict(predictMsg(undefined));
  assert.equal(reply.type, "error");
});
