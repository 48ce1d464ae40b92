/**
 * Transports: NDJSON over stdio, and an HTTP endpoint taking one protocol
 * message per POST. A malformed request never crashes the adapter; it is
 * answered with an error message instead.
 */

import * as http from "node:http";
import * as readline from "node:readline";

import { FaultOptions, FaultState, applyFault } from "./faults.js";
import {
  ErrorMsg,
  OutboundMsg,
  PROTOCOL_VERSION,
  ReadyMsg,
  ResultMsg,
  isBye,
  isHello,
  isPredict,
} from "./protocol.js";
import { Policy } from "./policies.js";

export interface ServerOptions {
  policy: Policy;
  name?: string;
  fault?: FaultOptions;
  maxImageBytes?: number;
}

interface SessionState {
  mode: "eval" | "verify";
  fault: FaultState;
}

function ready(options: ServerOptions): ReadyMsg {
  return {
    type: "ready",
    name: options.name ?? `baseline-${options.policy.kind}`,
    max_image_bytes: options.maxImageBytes ?? 64 * 1024 * 1024,
    supports_verify: true,
  };
}

type Handled =
  | { kind: "reply"; reply: OutboundMsg; delayMs?: number }
  | { kind: "bye" }
  | { kind: "disconnect" };

function handleMessage(raw: string, options: ServerOptions, state: SessionState): Handled {
  let msg: unknown;
  try {
    msg = JSON.parse(raw);
  } catch {
    return { kind: "reply", reply: { type: "error", message: "unparseable request line" } };
  }
  if (isHello(msg)) {
    if (msg.protocol_version !== PROTOCOL_VERSION) {
      return {
        kind: "reply",
        reply: { type: "error", message: `unsupported protocol version ${msg.protocol_version}` },
      };
    }
    state.mode = msg.mode === "verify" ? "verify" : "eval";
    return { kind: "reply", reply: ready(options) };
  }
  if (isBye(msg)) {
    return { kind: "bye" };
  }
  if (isPredict(msg)) {
    const normal = () => options.policy.predict(msg, state.mode);
    if (options.fault) {
      const outcome = applyFault(options.fault, msg, state.fault, normal);
      if (outcome.action === "disconnect") {
        return { kind: "disconnect" };
      }
      return { kind: "reply", reply: outcome.reply, delayMs: outcome.delayMs };
    }
    return { kind: "reply", reply: normal() };
  }
  const rid = (msg as { request_id?: string }).request_id;
  const reply: ErrorMsg = { type: "error", request_id: rid, message: "unrecognized message" };
  return { kind: "reply", reply };
}

const sleep = (ms: number) => new Promise((resolve) => setTimeout(resolve, ms));

export async function serveStdio(options: ServerOptions): Promise<void> {
  const state: SessionState = { mode: "eval", fault: { answered: 0 } };
  const lines = readline.createInterface({ input: process.stdin, terminal: false });
  for await (const line of lines) {
    if (!line.trim()) {
      continue;
    }
    const handled = handleMessage(line, options, state);
    if (handled.kind === "bye") {
      return;
    }
    if (handled.kind === "disconnect") {
      process.exit(0);
    }
    if (handled.delayMs) {
      await sleep(handled.delayMs);
    }
    process.stdout.write(JSON.stringify(handled.reply) + "\n");
  }
}

export function serveHttp(options: ServerOptions, port: number): Promise<http.Server> {
  const state: SessionState = { mode: "eval", fault: { answered: 0 } };
  const server = http.createServer((req, res) => {
    const chunks: Buffer[] = [];
    req.on("data", (chunk) => chunks.push(chunk));
    req.on("end", async () => {
      const handled = handleMessage(Buffer.concat(chunks).toString("utf-8"), options, state);
      if (handled.kind === "bye") {
        res.writeHead(204).end();
        server.close();
        return;
      }
      if (handled.kind === "disconnect") {
        req.socket.destroy();
        server.close();
        return;
      }
      if (handled.delayMs) {
        await sleep(handled.delayMs);
      }
      res.writeHead(200, { "Content-Type": "application/json" });
      res.end(JSON.stringify(handled.reply));
    });
  });
  return new Promise((resolve) => server.listen(port, "127.0.0.1", () => resolve(server)));
}

export type { ResultMsg };
