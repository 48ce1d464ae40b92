/** Wire protocol message shapes (newline-delimited JSON). */

export const PROTOCOL_VERSION = 1;

export interface HelloMsg {
  type: "hello";
  protocol_version: number;
  mode: "eval" | "verify";
}

export interface ReadyMsg {
  type: "ready";
  name: string;
  max_image_bytes: number;
  supports_verify?: boolean;
}

export interface WireImage {
  view: string;
  width: number;
  height: number;
  channels: number;
  encoding: string;
  b64: string;
}

export interface PredictMsg {
  type: "predict";
  request_id: string;
  dataset: string;
  step_index: number;
  observation_vector: number[];
  images: WireImage[];
  instruction: string | null;
  action_space: { signature: string; dims: { name: string; kind: string }[] };
  action_stats: {
    min: number[];
    max: number[];
    mean: number[];
    q01: number[];
    q99: number[];
    sample_count: number;
  };
  task_description: string | null;
  prompt_payload?: string;
  verification_ground_truth?: number[];
}

export interface ResultMsg {
  type: "result";
  request_id: string;
  action?: number[];
  raw_text?: string;
}

export interface ErrorMsg {
  type: "error";
  request_id?: string;
  message: string;
}

export interface ByeMsg {
  type: "bye";
}

export type InboundMsg = HelloMsg | PredictMsg | ByeMsg;
export type OutboundMsg = ReadyMsg | ResultMsg | ErrorMsg;

export function isHello(msg: unknown): msg is HelloMsg {
  return typeof msg === "object" && msg !== null && (msg as { type?: string }).type === "hello";
}

export function isPredict(msg: unknown): msg is PredictMsg {
  const m = msg as Partial<PredictMsg>;
  return (
    typeof msg === "object" &&
    msg !== null &&
    m.type === "predict" &&
    typeof m.request_id === "string" &&
    typeof m.action_space === "object"
  );
}

export function isBye(msg: unknown): msg is ByeMsg {
  return typeof msg === "object" && msg !== null && (msg as { type?: string }).type === "bye";
}

export function expectedDims(msg: PredictMsg): number {
  return msg.action_space.dims.length;
}
