/**
 * Template for wrapping a hosted text model behind the wire protocol.
 *
 * The harness sends a fully rendered prompt in `prompt_payload` (state,
 * instruction, per-dimension descriptions, statistics, task context, and
 * the output-format directive). A real wrapper forwards that string to the
 * model verbatim and returns the completion as `raw_text`; the harness
 * parses it and falls back to a seeded random action when the text cannot
 * be coerced into a numeric vector of the expected length.
 *
 * This stub never performs network calls: `complete` is injectable, and
 * the default implementation answers with the statistics mean rendered as
 * text, which exercises exactly the same reply path a hosted model would.
 */

import { ErrorMsg, PredictMsg, ResultMsg } from "./protocol.js";

export type CompletionFn = (prompt: string) => Promise<string>;

export function makeTextModelPolicy(complete?: CompletionFn) {
  const completion: CompletionFn =
    complete ??
    (async (prompt: string) => {
      // ---- real integration point -------------------------------------
      // return (await client.chat({ role: "user", content: prompt })).text;
      // ------------------------------------------------------------------
      void prompt;
      return "";
    });
  return {
    kind: "text_model_stub" as const,
    async predict(msg: PredictMsg): Promise<ResultMsg | ErrorMsg> {
      const prompt = msg.prompt_payload;
      if (!prompt) {
        return { type: "error", request_id: msg.request_id, message: "predict carried no prompt_payload" };
      }
      const text = await completion(prompt);
      if (text) {
        return { type: "result", request_id: msg.request_id, raw_text: text };
      }
      // offline default: answer the statistics mean as a bare numeric list
      const rendered = "[" + msg.action_stats.mean.join(", ") + "]";
      return { type: "result", request_id: msg.request_id, raw_text: rendered };
    },
  };
}
