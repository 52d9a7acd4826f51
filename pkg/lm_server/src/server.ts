/**
 * HTTP surface of the wire protocol.
 *
 *   POST /v1/topk      {"tokens": [...], "mask_index": i, "k": n}
 *                      -> {"entries": [{"token", "score"}, ...]}
 *   POST /v1/embed     {"tokens": [...], "version"?: id}
 *                      -> {"vector": [...], "dim": d}
 *   POST /v1/finetune  {"sentences": [{"tokens", "label"}, ...], ...}
 *                      -> {"version": id, "initial_loss", "epoch_losses"}
 *   GET  /v1/health    -> {"status": "ok", ...}
 *
 * Malformed payloads get 400; anything over the in-flight limit gets 503;
 * unexpected failures get 500, which clients treat as retryable. Responses
 * are a pure function of (world, request), version "base" stays addressable
 * forever, and every fine-tune call mints a fresh version.
 */

import { createServer, type Server } from "node:http";
import type { IncomingMessage, ServerResponse } from "node:http";
import type { AddressInfo } from "node:net";

import { MASK_MARKER, ValidationError, type TopkEntry } from "./fixture.js";
import {
  applyAdapter,
  finetune,
  type AdapterModel,
  type FinetuneOptions,
} from "./finetune.js";

export interface Backend {
  readonly id: string;
  readonly dim: number;
  topk(tokens: string[], k: number): TopkEntry[];
  embed(tokens: string[]): number[];
}

export interface ServerConfig {
  model: string; // backend identifier, e.g. a fixture world path
  device: string; // accepted for config parity; the fixture backend is pure CPU
  maxBatch: number;
  port: number;
}

// Subword continuations never form whole words; the server filters them
// out rather than trusting any backend vocabulary to be clean.
const SUBWORD_MARKER = "##";
const MAX_BODY_BYTES = 8 * 1024 * 1024;

const HYPERPARAM_KEYS: Array<[string, keyof FinetuneOptions]> = [
  ["epochs", "epochs"],
  ["learning_rate", "learningRate"],
  ["batch_size", "batchSize"],
  ["weight_decay", "weightDecay"],
  ["warmup_fraction", "warmupFraction"],
];

function readTokens(body: Record<string, unknown>): string[] {
  const tokens = body["tokens"];
  if (
    !Array.isArray(tokens) ||
    tokens.length === 0 ||
    !tokens.every((t) => typeof t === "string")
  ) {
    throw new ValidationError("tokens must be a non-empty array of strings");
  }
  return tokens as string[];
}

export class OracleServer {
  readonly server: Server;
  private readonly versions = new Map<string, AdapterModel | null>([["base", null]]);
  private finetuneCount = 0;
  private inFlight = 0;

  constructor(
    private readonly backend: Backend,
    private readonly maxBatch: number = 8,
  ) {
    this.server = createServer((req, res) => {
      void this.dispatch(req, res);
    });
  }

  listen(port: number, host = "127.0.0.1"): Promise<number> {
    return new Promise((resolve, reject) => {
      this.server.once("error", reject);
      this.server.listen(port, host, () => {
        resolve((this.server.address() as AddressInfo).port);
      });
    });
  }

  close(): Promise<void> {
    return new Promise((resolve, reject) => {
      this.server.closeAllConnections();
      this.server.close((err) => (err ? reject(err) : resolve()));
    });
  }

  private async dispatch(req: IncomingMessage, res: ServerResponse): Promise<void> {
    if (req.method === "GET" && req.url === "/v1/health") {
      // Health stays up while the model is saturated; it reports, not serves.
      this.json(res, 200, {
        status: "ok",
        model: this.backend.id,
        dim: this.backend.dim,
        versions: [...this.versions.keys()],
      });
      return;
    }
    if (this.inFlight >= this.maxBatch) {
      this.json(res, 503, { error: "model busy, queue limit reached" });
      return;
    }
    this.inFlight += 1;
    try {
      if (req.method !== "POST") {
        this.json(res, 404, { error: "no such endpoint" });
        return;
      }
      const body = await this.readBody(req);
      switch (req.url) {
        case "/v1/topk":
          this.handleTopk(body, res);
          return;
        case "/v1/embed":
          this.handleEmbed(body, res);
          return;
        case "/v1/finetune":
          this.handleFinetune(body, res);
          return;
        default:
          this.json(res, 404, { error: "no such endpoint" });
      }
    } catch (err) {
      if (err instanceof ValidationError) {
        this.json(res, 400, { error: err.message });
      } else {
        console.error("lm-server internal error:", err);
        this.json(res, 500, { error: "internal error" });
      }
    } finally {
      this.inFlight -= 1;
    }
  }

  private handleTopk(body: Record<string, unknown>, res: ServerResponse): void {
    const tokens = readTokens(body);
    const maskIndex = body["mask_index"];
    const k = body["k"];
    if (
      typeof maskIndex !== "number" ||
      !Number.isInteger(maskIndex) ||
      maskIndex < 0 ||
      maskIndex >= tokens.length
    ) {
      throw new ValidationError("mask_index must index into tokens");
    }
    if (tokens[maskIndex] !== MASK_MARKER) {
      throw new ValidationError(`tokens[mask_index] must be the literal ${MASK_MARKER}`);
    }
    if (typeof k !== "number" || !Number.isInteger(k) || k < 1) {
      throw new ValidationError("k must be a positive integer");
    }
    const entries = this.backend
      .topk(tokens, k)
      .filter((e) => !e.token.includes(SUBWORD_MARKER));
    this.json(res, 200, { entries });
  }

  private handleEmbed(body: Record<string, unknown>, res: ServerResponse): void {
    const tokens = readTokens(body);
    let adapter: AdapterModel | null = null;
    if (body["version"] !== undefined) {
      const version = body["version"];
      if (typeof version !== "string" || !this.versions.has(version)) {
        throw new ValidationError(`unknown model version ${JSON.stringify(version)}`);
      }
      adapter = this.versions.get(version) ?? null;
    }
    let vector = this.backend.embed(tokens);
    if (adapter !== null) vector = applyAdapter(adapter, vector);
    this.json(res, 200, { vector, dim: vector.length });
  }

  private handleFinetune(body: Record<string, unknown>, res: ServerResponse): void {
    const sentences = body["sentences"];
    if (!Array.isArray(sentences) || sentences.length === 0) {
      throw new ValidationError("sentences must be a non-empty array");
    }
    const vectors: number[][] = [];
    const labels: number[] = [];
    for (const entry of sentences) {
      if (typeof entry !== "object" || entry === null) {
        throw new ValidationError("each sentence must be an object");
      }
      const record = entry as Record<string, unknown>;
      const tokens = readTokens(record);
      const label = record["label"];
      if (label !== 0 && label !== 1) {
        throw new ValidationError("label must be 0 or 1");
      }
      vectors.push(this.backend.embed(tokens));
      labels.push(label);
    }
    const options: Partial<FinetuneOptions> = {};
    for (const [wire, key] of HYPERPARAM_KEYS) {
      if (body[wire] !== undefined) {
        const value = body[wire];
        if (typeof value !== "number" || !Number.isFinite(value)) {
          throw new ValidationError(`${wire} must be a finite number`);
        }
        options[key] = value;
      }
    }
    const result = finetune(vectors, labels, options);
    this.finetuneCount += 1;
    const version = `ft-${this.finetuneCount}`;
    this.versions.set(version, result.model);
    this.json(res, 200, {
      version,
      initial_loss: result.initialLoss,
      epoch_losses: result.epochLosses,
      examples: vectors.length,
    });
  }

  private json(res: ServerResponse, status: number, payload: unknown): void {
    if (res.writableEnded || res.destroyed) return;
    const body = JSON.stringify(payload);
    res.writeHead(status, {
      "Content-Type": "application/json",
      "Content-Length": Buffer.byteLength(body),
    });
    res.end(body);
  }

  private readBody(req: IncomingMessage): Promise<Record<string, unknown>> {
    return new Promise((resolve, reject) => {
      const chunks: Buffer[] = [];
      let size = 0;
      req.on("data", (chunk: Buffer) => {
        size += chunk.length;
        if (size > MAX_BODY_BYTES) {
          reject(new ValidationError("request body too large"));
          req.destroy();
          return;
        }
        chunks.push(chunk);
      });
      req.on("end", () => {
        try {
          const text = Buffer.concat(chunks).toString("utf-8");
          const obj: unknown = text.length === 0 ? {} : JSON.parse(text);
          if (typeof obj !== "object" || obj === null || Array.isArray(obj)) {
            reject(new ValidationError("request body must be a JSON object"));
            return;
          }
          resolve(obj as Record<string, unknown>);
        } catch {
          reject(new ValidationError("request body is not valid JSON"));
        }
      });
      req.on("error", reject);
    });
  }
}
