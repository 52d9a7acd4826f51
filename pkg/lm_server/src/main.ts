import { FixtureBackend } from "./fixture.js";
import { OracleServer, type ServerConfig } from "./server.js";

const USAGE = `usage: lm-server --world WORLD_JSON [--port PORT] [--max-batch N] [--device NAME]

Serves the oracle wire protocol over the given fixture world:
POST /v1/topk, /v1/embed, /v1/finetune and GET /v1/health.`;

function parseArgs(argv: string[]): ServerConfig {
  const config: ServerConfig = { model: "", device: "cpu", maxBatch: 8, port: 8400 };
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    const next = (): string => {
      i += 1;
      if (i >= argv.length) throw new Error(`${arg} needs a value`);
      return argv[i];
    };
    switch (arg) {
      case "--world":
        config.model = next();
        break;
      case "--port":
        config.port = Number(next());
        break;
      case "--max-batch":
        config.maxBatch = Number(next());
        break;
      case "--device":
        config.device = next();
        break;
      case "-h":
      case "--help":
        console.log(USAGE);
        process.exit(0);
        break;
      default:
        throw new Error(`unknown argument ${arg}`);
    }
  }
  if (config.model === "") throw new Error("--world is required");
  if (!Number.isInteger(config.port) || config.port < 0 || config.port > 65535) {
    throw new Error("--port must be 0..65535");
  }
  if (!Number.isInteger(config.maxBatch) || config.maxBatch < 1) {
    throw new Error("--max-batch must be a positive integer");
  }
  return config;
}

async function main(): Promise<void> {
  let config: ServerConfig;
  try {
    config = parseArgs(process.argv.slice(2));
  } catch (err) {
    console.error(String(err instanceof Error ? err.message : err));
    console.error(USAGE);
    process.exit(2);
  }
  const backend = FixtureBackend.fromFile(config.model);
  const server = new OracleServer(backend, config.maxBatch);
  const port = await server.listen(config.port);
  console.log(
    `lm-server listening on http://127.0.0.1:${port} (model=${backend.id}, dim=${backend.dim}, device=${config.device})`,
  );
}

main().catch((err) => {
  console.error(String(err instanceof Error ? err.message : err));
  process.exit(1);
});
