/**
 * Deliberate misbehaviour, for exercising the harness's coercion paths.
 *
 * Each mode produces exactly one defect class: wrong_length answers with
 * one extra component, text_reply answers prose, mixed_reply mixes a
 * tensor with prose, drop_connection kills the stream after N answers,
 * slow delays past the harness timeout.
 */

import { ErrorMsg, expectedDims, PredictMsg, ResultMsg } from "./protocol.js";

export type FaultKind = "wrong_length" | "text_reply" | "mixed_reply" | "drop_connection" | "slow";

export interface FaultOptions {
  kind: FaultKind;
  dropAfter?: number;
  slowMs?: number;
}

export interface FaultState {
  answered: number;
}

export type FaultOutcome =
  | { action: "reply"; reply: ResultMsg | ErrorMsg; delayMs?: number }
  | { action: "disconnect" };

export function applyFault(
  fault: FaultOptions,
  msg: PredictMsg,
  state: FaultState,
  normal: () => ResultMsg | ErrorMsg,
): FaultOutcome {
  const rid = msg.request_id;
  switch (fault.kind) {
    case "wrong_length": {
      const n = expectedDims(msg) + 1;
      return { action: "reply", reply: { type: "result", request_id: rid, action: new Array(n).fill(0) } };
    }
    case "text_reply":
      return { action: "reply", reply: { type: "result", request_id: rid, raw_text: "open the gripper" } };
    case "mixed_reply":
      return {
        action: "reply",
        reply: { type: "result", request_id: rid, raw_text: "[0.1, 0.2] because the handle is near" },
      };
    case "drop_connection":
      if (state.answered >= (fault.dropAfter ?? 0)) {
        return { action: "disconnect" };
      }
      state.answered += 1;
      return { action: "reply", reply: normal() };
    case "slow":
      return { action: "reply", reply: normal(), delayMs: fault.slowMs ?? 120_000 };
  }
}
