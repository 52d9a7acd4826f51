/**
 * Closed-world fixture backend. Loads the same world JSON the Python
 * toolkit generates and answers topk/embed queries bit-identically, so
 * the recorded request/response files under golden/ double as this
 * server's conformance suite.
 */

import { createHash } from "node:crypto";
import { readFileSync } from "node:fs";

import { hashParts, mix64, UNIT_SEP, unitFloat } from "./hash.js";

export const HEAD_MARKER = "[HEAD]";
export const TAIL_MARKER = "[TAIL]";
export const MASK_MARKER = "[MASK]";

export const EMBED_DIM = 32;
const HASH_DIMS = EMBED_DIM - 1; // last dimension is the support feature

const MASK64 = (1n << 64n) - 1n;
const SLOT = "\x00";

export class ValidationError extends Error {}

export interface TopkEntry {
  token: string;
  score: number;
}

export interface WorldFile {
  facts: Array<[string, string, string]>; // (relation, head, tail)
  type_vocab: Record<string, { head_vocab: string[]; tail_vocab: string[] }>;
  patterns: Record<string, string[][]>;
  noise_rate: number;
  seed: number;
}

function asStringArray(value: unknown, what: string): string[] {
  if (!Array.isArray(value) || !value.every((v) => typeof v === "string")) {
    throw new ValidationError(`${what} must be an array of strings`);
  }
  return value;
}

/** Parse and validate a world object; throws ValidationError on anything off. */
export function parseWorld(obj: unknown): WorldFile {
  if (typeof obj !== "object" || obj === null) {
    throw new ValidationError("world must be a JSON object");
  }
  const raw = obj as Record<string, unknown>;
  const noiseRate = raw["noise_rate"];
  const seed = raw["seed"];
  if (typeof noiseRate !== "number" || noiseRate < 0 || noiseRate > 1) {
    throw new ValidationError("noise_rate outside [0, 1]");
  }
  if (typeof seed !== "number" || !Number.isInteger(seed)) {
    throw new ValidationError("seed must be an integer");
  }
  if (!Array.isArray(raw["facts"])) {
    throw new ValidationError("facts must be an array");
  }
  const facts = raw["facts"].map((f) => {
    const triple = asStringArray(f, "fact");
    if (triple.length !== 3) throw new ValidationError("fact must be [relation, head, tail]");
    return triple as [string, string, string];
  });
  const vocabRaw = raw["type_vocab"];
  if (typeof vocabRaw !== "object" || vocabRaw === null) {
    throw new ValidationError("type_vocab must be an object");
  }
  const typeVocab: WorldFile["type_vocab"] = {};
  for (const [rel, entry] of Object.entries(vocabRaw)) {
    const e = entry as Record<string, unknown>;
    typeVocab[rel] = {
      head_vocab: asStringArray(e["head_vocab"], `head_vocab of ${rel}`),
      tail_vocab: asStringArray(e["tail_vocab"], `tail_vocab of ${rel}`),
    };
  }
  const patternsRaw = raw["patterns"];
  if (typeof patternsRaw !== "object" || patternsRaw === null) {
    throw new ValidationError("patterns must be an object");
  }
  const patterns: WorldFile["patterns"] = {};
  for (const [rel, pats] of Object.entries(patternsRaw)) {
    if (!Array.isArray(pats)) throw new ValidationError(`patterns of ${rel} must be an array`);
    patterns[rel] = pats.map((p) => asStringArray(p, `pattern of ${rel}`));
  }

  for (const [rel, head, tail] of facts) {
    const vocab = typeVocab[rel];
    if (!vocab) throw new ValidationError(`fact relation ${rel} missing from type_vocab`);
    if (!vocab.head_vocab.includes(head) || !vocab.tail_vocab.includes(tail)) {
      throw new ValidationError(`fact (${rel}, ${head}, ${tail}) outside its type vocabulary`);
    }
  }
  for (const [rel, pats] of Object.entries(patterns)) {
    if (!typeVocab[rel]) throw new ValidationError(`pattern relation ${rel} missing from type_vocab`);
    for (const pat of pats) {
      const heads = pat.filter((t) => t === HEAD_MARKER).length;
      const tails = pat.filter((t) => t === TAIL_MARKER).length;
      if (heads !== 1 || tails !== 1) {
        throw new ValidationError(`pattern for ${rel} needs exactly one slot of each kind`);
      }
    }
  }
  return { facts, type_vocab: typeVocab, patterns, noise_rate: noiseRate, seed };
}

interface MaskedCandidate {
  rel: string;
  side: "head" | "tail";
  openPos: number;
}

interface SupportCandidate {
  rel: string;
  headPos: number;
  tailPos: number;
}

function pairKey(rel: string, word: string): string {
  return JSON.stringify([rel, word]);
}

export class FixtureBackend {
  readonly id: string;
  readonly dim = EMBED_DIM;
  private readonly world: WorldFile;
  private readonly globalVocab: string[];
  private readonly factSet = new Set<string>();
  private readonly tailsOf = new Map<string, string[]>();
  private readonly headsOf = new Map<string, string[]>();
  private readonly maskedIndex = new Map<string, MaskedCandidate[]>();
  private readonly maskedProbes: Array<[number, number]> = []; // (length, openPos)
  private readonly supportIndex = new Map<string, SupportCandidate[]>();
  private readonly supportProbes: Array<[number, number, number]> = [];
  private readonly tokenHashes = new Map<string, bigint[]>();

  constructor(world: WorldFile, id: string) {
    this.world = world;
    this.id = id;

    const words = new Set<string>();
    for (const { head_vocab, tail_vocab } of Object.values(world.type_vocab)) {
      for (const w of head_vocab) words.add(w);
      for (const w of tail_vocab) words.add(w);
    }
    this.globalVocab = [...words].sort();

    for (const [rel, head, tail] of world.facts) {
      this.factSet.add(JSON.stringify([rel, head, tail]));
      const tails = this.tailsOf.get(pairKey(rel, head)) ?? [];
      if (!tails.includes(tail)) tails.push(tail);
      this.tailsOf.set(pairKey(rel, head), tails);
      const heads = this.headsOf.get(pairKey(rel, tail)) ?? [];
      if (!heads.includes(head)) heads.push(head);
      this.headsOf.set(pairKey(rel, tail), heads);
    }
    for (const v of this.tailsOf.values()) v.sort();
    for (const v of this.headsOf.values()) v.sort();

    // Masked-pattern skeletons: the open slot becomes a sentinel and the
    // masked slot the literal mask marker; a query matches iff masking its
    // own open position reproduces the skeleton. Probe order follows
    // sorted relation names, then file order, first occurrence kept.
    const probeSeen = new Set<string>();
    const supportSeen = new Set<string>();
    for (const rel of Object.keys(world.patterns).sort()) {
      for (const pat of world.patterns[rel]) {
        const hs = pat.indexOf(HEAD_MARKER);
        const ts = pat.indexOf(TAIL_MARKER);
        const sides: Array<["head" | "tail", number, number]> = [
          ["tail", ts, hs],
          ["head", hs, ts],
        ];
        for (const [side, maskedPos, openPos] of sides) {
          const skel = pat.slice();
          skel[maskedPos] = MASK_MARKER;
          skel[openPos] = SLOT;
          const key = JSON.stringify(skel);
          const list = this.maskedIndex.get(key) ?? [];
          list.push({ rel, side, openPos });
          this.maskedIndex.set(key, list);
          const probe = `${pat.length}:${openPos}`;
          if (!probeSeen.has(probe)) {
            probeSeen.add(probe);
            this.maskedProbes.push([pat.length, openPos]);
          }
        }
        const skel = pat.slice();
        skel[hs] = SLOT;
        skel[ts] = SLOT;
        const key = JSON.stringify(skel);
        const list = this.supportIndex.get(key) ?? [];
        list.push({ rel, headPos: hs, tailPos: ts });
        this.supportIndex.set(key, list);
        const probe = `${pat.length}:${hs}:${ts}`;
        if (!supportSeen.has(probe)) {
          supportSeen.add(probe);
          this.supportProbes.push([pat.length, hs, ts]);
        }
      }
    }
  }

  static fromFile(path: string): FixtureBackend {
    const bytes = readFileSync(path);
    let obj: unknown;
    try {
      obj = JSON.parse(bytes.toString("utf-8"));
    } catch (err) {
      throw new ValidationError(`cannot parse world file ${path}: ${String(err)}`);
    }
    const digest = createHash("sha256").update(bytes).digest("hex");
    return new FixtureBackend(parseWorld(obj), `fixture:${digest.slice(0, 16)}`);
  }

  topk(tokens: string[], k: number): TopkEntry[] {
    const qstr = tokens.join(UNIT_SEP);
    const match = this.matchMasked(tokens);
    const chosen: string[] = [];
    let pool: string[];
    let excluded: Set<string>;
    if (match !== null) {
      const displaced =
        unitFloat(hashParts(this.world.seed, "disp", qstr)) < this.world.noise_rate;
      if (!displaced) chosen.push(...match.fillers.slice(0, k));
      excluded = new Set(match.fillers);
      pool = match.vocab;
    } else {
      excluded = new Set();
      pool = this.globalVocab;
    }
    if (chosen.length < k) {
      chosen.push(...this.walk(pool, qstr, k - chosen.length, excluded));
    }
    return chosen.map((token, rank) => ({ token, score: 1 / (1 + rank) }));
  }

  embed(tokens: string[]): number[] {
    if (tokens.length === 0) {
      throw new ValidationError("cannot embed an empty token sequence");
    }
    const acc: bigint[] = new Array(HASH_DIMS).fill(0n);
    for (const tok of tokens) {
      const hashes = this.tokenHash(tok);
      for (let d = 0; d < HASH_DIMS; d++) {
        acc[d] = (acc[d] + hashes[d]) & MASK64;
      }
    }
    const vector: number[] = new Array(EMBED_DIM);
    for (let d = 0; d < HASH_DIMS; d++) {
      vector[d] = (Number(mix64(acc[d]) >> 11n) / 2 ** 53) * 2 - 1;
    }
    vector[HASH_DIMS] = this.isInstantiation(tokens) ? 1 : -1;
    return vector;
  }

  private matchMasked(
    tokens: string[],
  ): { fillers: string[]; vocab: string[] } | null {
    const n = tokens.length;
    for (const [length, openPos] of this.maskedProbes) {
      if (length !== n || tokens[openPos] === MASK_MARKER) continue;
      const probe = tokens.slice();
      probe[openPos] = SLOT;
      const candidates = this.maskedIndex.get(JSON.stringify(probe));
      if (!candidates) continue;
      const word = tokens[openPos];
      for (const cand of candidates) {
        if (cand.openPos !== openPos) continue;
        if (cand.side === "tail") {
          const fillers = this.tailsOf.get(pairKey(cand.rel, word));
          if (fillers && fillers.length > 0) {
            return { fillers, vocab: this.world.type_vocab[cand.rel].tail_vocab };
          }
        } else {
          const fillers = this.headsOf.get(pairKey(cand.rel, word));
          if (fillers && fillers.length > 0) {
            return { fillers, vocab: this.world.type_vocab[cand.rel].head_vocab };
          }
        }
      }
    }
    return null;
  }

  /**
   * Seeded-pseudorandom draw without replacement from a sorted pool: walk a
   * full cycle over the next power of two with an odd stride, so every pool
   * index is visited exactly once in a query-dependent order.
   */
  private walk(pool: string[], qstr: string, need: number, excluded: Set<string>): string[] {
    const size = pool.length;
    if (size === 0 || need <= 0) return [];
    let bits = 0;
    for (let v = size - 1; v > 0; v >>= 1) bits++;
    const cap = 1 << Math.max(1, bits);
    const capMask = BigInt(cap - 1);
    const h = hashParts(this.world.seed, "order", qstr);
    let idx = Number(h & capMask);
    const step = Number((mix64(h ^ 0x9e3779b97f4a7c15n) & capMask) | 1n);
    const out: string[] = [];
    for (let i = 0; i < cap; i++) {
      if (idx < size) {
        const tok = pool[idx];
        if (!excluded.has(tok)) {
          out.push(tok);
          if (out.length === need) break;
        }
      }
      idx = (idx + step) & (cap - 1);
    }
    return out;
  }

  private tokenHash(token: string): bigint[] {
    let cached = this.tokenHashes.get(token);
    if (!cached) {
      cached = [];
      for (let d = 0; d < HASH_DIMS; d++) {
        cached.push(hashParts(this.world.seed, "emb", d, token));
      }
      this.tokenHashes.set(token, cached);
    }
    return cached;
  }

  private isInstantiation(tokens: string[]): boolean {
    const n = tokens.length;
    for (const [length, hs, ts] of this.supportProbes) {
      if (length !== n) continue;
      const head = tokens[hs];
      const tail = tokens[ts];
      const probe = tokens.slice();
      probe[hs] = SLOT;
      probe[ts] = SLOT;
      const candidates = this.supportIndex.get(JSON.stringify(probe));
      if (!candidates) continue;
      for (const cand of candidates) {
        if (
          cand.headPos === hs &&
          cand.tailPos === ts &&
          this.factSet.has(JSON.stringify([cand.rel, head, tail]))
        ) {
          return true;
        }
      }
    }
    return false;
  }
}
