/**
 * Baseline prediction policies.
 *
 * replay echoes the verification ground truth (valid only in verify mode),
 * mean_action returns the per-dimension mean from the request statistics,
 * random_uniform draws seeded uniforms in [0, 1), constant repeats a fixed
 * vector. Real-model wrappers follow the same shape: consume a predict
 * message (whose prompt_payload carries the full structured prompt) and
 * answer with a result.
 */

import { ErrorMsg, expectedDims, PredictMsg, ResultMsg } from "./protocol.js";
import { Xoshiro256StarStar } from "./rng.js";

export type PolicyKind = "replay" | "mean_action" | "random_uniform" | "constant";

export interface PolicyOptions {
  kind: PolicyKind;
  seed?: number;
  constant?: number[];
}

export interface Policy {
  readonly kind: PolicyKind;
  predict(msg: PredictMsg, mode: "eval" | "verify"): ResultMsg | ErrorMsg;
}

export function makePolicy(options: PolicyOptions): Policy {
  const rng = new Xoshiro256StarStar(options.seed ?? 0);
  const constant = options.constant ?? [0.0];
  return {
    kind: options.kind,
    predict(msg: PredictMsg, mode: "eval" | "verify"): ResultMsg | ErrorMsg {
      const rid = msg.request_id;
      switch (options.kind) {
        case "replay": {
          const truth = msg.verification_ground_truth;
          if (mode !== "verify" || truth === undefined) {
            return { type: "error", request_id: rid, message: "replay requires verify mode" };
          }
          return { type: "result", request_id: rid, action: truth };
        }
        case "mean_action":
          return { type: "result", request_id: rid, action: msg.action_stats.mean };
        case "random_uniform":
          return { type: "result", request_id: rid, action: rng.uniformVector(expectedDims(msg)) };
        case "constant":
          return { type: "result", request_id: rid, action: constant };
      }
    },
  };
}
