/**
 * Adapter entry point.
 *
 *   node dist/src/cli.js --policy replay --transport stdio
 *   node dist/src/cli.js --policy random_uniform --seed 7
 *   node dist/src/cli.js --policy constant --constant 0.5,0.25
 *   node dist/src/cli.js --policy mean_action --fault wrong_length
 *   node dist/src/cli.js --policy mean_action --transport http --port 8732
 */

import { FaultKind, FaultOptions } from "./faults.js";
import { PolicyKind, makePolicy } from "./policies.js";
import { serveHttp, serveStdio } from "./server.js";

interface CliArgs {
  policy: PolicyKind;
  transport: "stdio" | "http";
  seed: number;
  constant: number[] | undefined;
  fault: FaultOptions | undefined;
  port: number;
  name: string | undefined;
}

function parseArgs(argv: string[]): CliArgs {
  const args: CliArgs = {
    policy: "replay",
    transport: "stdio",
    seed: 0,
    constant: undefined,
    fault: undefined,
    port: 8732,
    name: undefined,
  };
  let faultKind: FaultKind | undefined;
  let dropAfter = 0;
  let slowMs = 120_000;
  for (let i = 0; i < argv.length; i++) {
    const flag = argv[i];
    const value = () => {
      const v = argv[++i];
      if (v === undefined) {
        throw new Error(`missing value for ${flag}`);
      }
      return v;
    };
    switch (flag) {
      case "--policy":
        args.policy = value() as PolicyKind;
        break;
      case "--transport":
        args.transport = value() as "stdio" | "http";
        break;
      case "--seed":
        args.seed = Number(value());
        break;
      case "--constant":
        args.constant = value().split(",").map(Number);
        break;
      case "--fault":
        faultKind = value() as FaultKind;
        break;
      case "--drop-after":
        dropAfter = Number(value());
        break;
      case "--slow-ms":
        slowMs = Number(value());
        break;
      case "--port":
        args.port = Number(value());
        break;
      case "--name":
        args.name = value();
        break;
      default:
        throw new Error(`unknown flag ${flag}`);
    }
  }
  if (!["replay", "mean_action", "random_uniform", "constant"].includes(args.policy)) {
    throw new Error(`unknown policy ${args.policy}`);
  }
  if (faultKind) {
    args.fault = { kind: faultKind, dropAfter, slowMs };
  }
  return args;
}

async function main(): Promise<void> {
  const args = parseArgs(process.argv.slice(2));
  const policy = makePolicy({ kind: args.policy, seed: args.seed, constant: args.constant });
  const options = { policy, fault: args.fault, name: args.name };
  if (args.transport === "http") {
    await serveHttp(options, args.port);
    process.stderr.write(`listening on http://127.0.0.1:${args.port}\n`);
    return;
  }
  await serveStdio(options);
  process.exit(0); // an open stdin must not keep a finished session alive
}

main().catch((err: Error) => {
  process.stderr.write(`${err.message}\n`);
  process.exit(2);
});
